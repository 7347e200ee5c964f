//! Points of the square lattice Z².

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// A point of Z². Coordinates are signed 32-bit; walks at desk scale never
/// leave that range.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    /// Packs both coordinates into one 64-bit key.
    #[inline]
    pub fn key(self) -> u64 {
        ((self.x as u32 as u64) << 32) | (self.y as u32 as u64)
    }

    #[inline]
    pub fn from_key(key: u64) -> Self {
        Site {
            x: (key >> 32) as u32 as i32,
            y: key as u32 as i32,
        }
    }

    /// Max-norm, used for all square windows |l| <= R.
    pub fn norm_inf(self) -> u32 {
        self.x.unsigned_abs().max(self.y.unsigned_abs())
    }

    /// All sites with max-norm at most `radius`, in row-major order.
    pub fn window(radius: u32) -> impl Iterator<Item = Site> {
        let r = radius as i32;
        (-r..=r).flat_map(move |x| (-r..=r).map(move |y| Site::new(x, y)))
    }

    #[inline]
    pub(crate) fn checked_add(self, other: Site) -> Site {
        Site {
            x: self.x.checked_add(other.x).expect("lattice coordinate overflow"),
            y: self.y.checked_add(other.y).expect("lattice coordinate overflow"),
        }
    }
}

impl Add for Site {
    type Output = Site;
    #[inline]
    fn add(self, other: Site) -> Site {
        self.checked_add(other)
    }
}

impl Sub for Site {
    type Output = Site;
    #[inline]
    fn sub(self, other: Site) -> Site {
        self.checked_add(-other)
    }
}

impl Neg for Site {
    type Output = Site;
    #[inline]
    fn neg(self) -> Site {
        Site::new(-self.x, -self.y)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(i32, i32)> for Site {
    fn from((x, y): (i32, i32)) -> Self {
        Site::new(x, y)
    }
}
