//! Laws of centered iid scenery values.

use crate::error::{Error, Result};
use crate::stats::{normal_cdf, normal_pdf};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// A centered law, parametrized by its variance.
///
/// `TwoPoint { p, .. }` puts mass p on a positive value and 1 - p on a
/// negative one, scaled so the law is centered with the given variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum IidLaw {
    Rademacher { variance: f64 },
    Uniform { variance: f64 },
    Gaussian { variance: f64 },
    TwoPoint { p: f64, variance: f64 },
}

impl IidLaw {
    pub fn rademacher() -> Self {
        IidLaw::Rademacher { variance: 1.0 }
    }

    pub fn gaussian() -> Self {
        IidLaw::Gaussian { variance: 1.0 }
    }

    /// Centered uniform law on [-a, a].
    pub fn uniform_on(a: f64) -> Self {
        IidLaw::Uniform {
            variance: a * a / 3.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            IidLaw::Rademacher { variance }
            | IidLaw::Uniform { variance }
            | IidLaw::Gaussian { variance }
            | IidLaw::TwoPoint { variance, .. } => variance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.variance();
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!("variance must be positive, got {v}")));
        }
        if let IidLaw::TwoPoint { p, .. } = *self {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidParameter(format!("two-point mass must lie in (0,1), got {p}")));
            }
        }
        Ok(())
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, IidLaw::Gaussian { .. })
    }

    /// Atoms (value, probability) of a discrete law.
    fn atoms(&self) -> Option<[(f64, f64); 2]> {
        match *self {
            IidLaw::Rademacher { variance } => {
                let s = variance.sqrt();
                Some([(s, 0.5), (-s, 0.5)])
            }
            IidLaw::TwoPoint { p, variance } => {
                let s = variance.sqrt();
                Some([(s * ((1.0 - p) / p).sqrt(), p), (-s * (p / (1.0 - p)).sqrt(), 1.0 - p)])
            }
            _ => None,
        }
    }

    /// Largest |X| on the support, or `None` for unbounded laws.
    pub fn bound(&self) -> Option<f64> {
        match *self {
            IidLaw::Uniform { variance } => Some((3.0 * variance).sqrt()),
            IidLaw::Gaussian { .. } => None,
            _ => self.atoms().map(|a| a[0].0.abs().max(a[1].0.abs())),
        }
    }

    /// E X^r in closed form.
    pub fn raw_moment(&self, r: u32) -> f64 {
        if r == 0 {
            return 1.0;
        }
        if let Some(atoms) = self.atoms() {
            return atoms.iter().map(|&(v, p)| p * v.powi(r as i32)).sum();
        }
        if r % 2 == 1 {
            return 0.0;
        }
        match *self {
            IidLaw::Uniform { variance } => {
                let a = (3.0 * variance).sqrt();
                a.powi(r as i32) / (r + 1) as f64
            }
            IidLaw::Gaussian { variance } => {
                let double_factorial: f64 = (1..r).step_by(2).map(|k| k as f64).product();
                variance.powi(r as i32 / 2) * double_factorial
            }
            _ => unreachable!("discrete laws handled above"),
        }
    }

    /// The r-th cumulant of X.
    pub fn cumulant(&self, r: u32) -> f64 {
        if self.is_gaussian() {
            return if r == 2 { self.variance() } else { 0.0 };
        }
        let moments: Vec<f64> = (0..=r).map(|j| self.raw_moment(j)).collect();
        crate::cumulant::single_cumulant(&moments, r as usize)
    }

    /// E[X 1{|X| <= L}].
    pub fn truncated_mean(&self, level: f64) -> f64 {
        match self.atoms() {
            Some(atoms) => atoms
                .iter()
                .filter(|(v, _)| v.abs() <= level)
                .map(|&(v, p)| p * v)
                .sum(),
            None => 0.0,
        }
    }

    /// E[X² 1{|X| > L}].
    pub fn tail_second_moment(&self, level: f64) -> f64 {
        if let Some(atoms) = self.atoms() {
            return atoms
                .iter()
                .filter(|(v, _)| v.abs() > level)
                .map(|&(v, p)| p * v * v)
                .sum();
        }
        match *self {
            IidLaw::Uniform { variance } => {
                let a = (3.0 * variance).sqrt();
                if level >= a {
                    0.0
                } else {
                    (a.powi(3) - level.max(0.0).powi(3)) / (3.0 * a)
                }
            }
            IidLaw::Gaussian { variance } => {
                let s = variance.sqrt();
                let z = level.max(0.0) / s;
                2.0 * variance * (z * normal_pdf(z) + 1.0 - normal_cdf(z))
            }
            _ => unreachable!("discrete laws handled above"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            IidLaw::Rademacher { variance } => {
                if rng.random::<bool>() {
                    variance.sqrt()
                } else {
                    -variance.sqrt()
                }
            }
            IidLaw::Uniform { variance } => {
                let a = (3.0 * variance).sqrt();
                a * (2.0 * rng.random::<f64>() - 1.0)
            }
            IidLaw::Gaussian { variance } => variance.sqrt() * rng.sample::<f64, _>(StandardNormal),
            IidLaw::TwoPoint { p, .. } => {
                let atoms = self.atoms().expect("two-point law is discrete");
                if rng.random::<f64>() < p {
                    atoms[0].0
                } else {
                    atoms[1].0
                }
            }
        }
    }

    /// Fills `out` with independent draws.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        if let IidLaw::Rademacher { variance } = *self {
            let s = variance.sqrt();
            for chunk in out.chunks_mut(64) {
                let bits: u64 = rng.random();
                for (i, v) in chunk.iter_mut().enumerate() {
                    *v = if bits >> i & 1 == 1 { s } else { -s };
                }
            }
            return;
        }
        for v in out.iter_mut() {
            *v = self.sample(rng);
        }
    }
}
