//! Correlation tables, spectral densities, asymptotic and exact finite-n
//! variances, and truncation of absolutely convergent Fourier series.

use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::occupation::{intersections, power_sum, OccupationField};
use crate::scenery::{correlation_tail_bound, SceneryModel, ToralAction, TrigPolynomial};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use std::collections::BTreeMap;
use std::f64::consts::TAU;

/// Window radius used for toral correlation tables.
pub const DEFAULT_WINDOW: u32 = 20;

/// A value together with a bound on what the finite computation omitted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounded {
    pub value: f64,
    pub error_bound: f64,
}

impl Bounded {
    pub fn exact(value: f64) -> Self {
        Bounded {
            value,
            error_bound: 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.error_bound == 0.0
    }
}

/// Correlations <T^l f, f> on the window |l|_inf <= radius, and a bound on
/// the sum of |<T^l f, f>| outside it.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTable {
    radius: u32,
    values: BTreeMap<Site, f64>,
    tail_bound: f64,
}

impl CorrelationTable {
    /// Builds a table from raw values, averaging l and -l.
    pub fn from_values(radius: u32, raw: impl Fn(Site) -> f64, tail_bound: f64) -> Self {
        let raw: BTreeMap<Site, f64> = Site::window(radius).map(|l| (l, raw(l))).collect();
        let values = raw
            .iter()
            .map(|(&l, &v)| (l, 0.5 * (v + raw[&-l])))
            .collect();
        CorrelationTable {
            radius,
            values,
            tail_bound: tail_bound.max(0.0),
        }
    }

    pub fn new(model: &SceneryModel, radius: u32) -> Self {
        match model {
            SceneryModel::Iid(_) => Self::from_values(radius, |l| model.exact_correlation(l), 0.0),
            SceneryModel::MovingAverage(ma) => {
                // correlations vanish beyond twice the reach; sum what is left out
                let outside = 2 * ma.reach();
                let tail: f64 = Site::window(outside)
                    .filter(|l| l.norm_inf() > radius)
                    .map(|l| ma.correlation(l).abs())
                    .sum();
                Self::from_values(radius, |l| ma.correlation(l), tail)
            }
            SceneryModel::Toral(t) => toral_table(&t.action, &t.observable, radius),
        }
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn get(&self, l: Site) -> f64 {
        self.values.get(&l).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Site, f64)> + '_ {
        self.values.iter().map(|(&l, &v)| (l, v))
    }

    /// sum_{|l| <= R} <T^l f, f> e^{2 pi i <l, t>}.
    pub fn density(&self, t: [f64; 2]) -> Bounded {
        let value = self
            .values
            .iter()
            .filter(|(_, v)| **v != 0.0)
            .map(|(l, v)| v * (TAU * (l.x as f64 * t[0] + l.y as f64 * t[1])).cos())
            .sum();
        Bounded {
            value,
            error_bound: self.tail_bound,
        }
    }
}

/// Toral correlation window built from the frequency orbits.
pub fn toral_table(action: &ToralAction, f: &TrigPolynomial, radius: u32) -> CorrelationTable {
    let mut raw: BTreeMap<Site, Complex64> = BTreeMap::new();
    for (m, c) in f.terms() {
        for (l, image) in action.transport_orbit(m, radius) {
            let small: Option<Vec<i64>> = image.iter().map(|v| v.to_i64()).collect();
            if let Some(k) = small {
                let d = f.coeff(&k);
                if d != Complex64::new(0.0, 0.0) {
                    *raw.entry(l).or_default() += c * d.conj();
                }
            }
        }
    }
    let tail = correlation_tail_bound(action, f, radius);
    CorrelationTable::from_values(radius, |l| raw.get(&l).map_or(0.0, |z| z.re), tail)
}

/// The spectral density at t in T², with the tail bound of the window for
/// toral models.
pub fn spectral_density_eval(model: &SceneryModel, t: [f64; 2]) -> Bounded {
    match model {
        SceneryModel::Iid(law) => Bounded::exact(law.variance()),
        SceneryModel::MovingAverage(ma) => {
            let z: Complex64 = ma
                .coeffs()
                .iter()
                .map(|(q, a)| a * Complex64::from_polar(1.0, TAU * (q.x as f64 * t[0] + q.y as f64 * t[1])))
                .sum();
            Bounded::exact(ma.base().variance() * z.norm_sqr())
        }
        SceneryModel::Toral(_) => CorrelationTable::new(model, DEFAULT_WINDOW).density(t),
    }
}

/// phi_f(0) C0, the limit of Var(S_n) / (n ln n).
pub fn asymptotic_variance(model: &SceneryModel, c0: f64) -> Bounded {
    let d = spectral_density_eval(model, [0.0, 0.0]);
    Bounded {
        value: d.value * c0,
        error_bound: d.error_bound * c0,
    }
}

/// Var(sum_j a_j S_{I_j}) = sum_{j,j'} a_j a_j' sum_p V(I_j, I_j', p) phi(p)
/// for occupation fields of one path. The error bound covers correlations
/// outside the table via V(I, J, p) <= sqrt(V(I) V(J)).
pub fn variance_exact(fields: &[(&OccupationField, f64)], table: &CorrelationTable) -> Bounded {
    let support: Vec<(Site, f64)> = table.iter().filter(|(_, v)| *v != 0.0).collect();
    let mut value = 0.0;
    for (wi, ai) in fields {
        for (wj, aj) in fields {
            let inner: f64 = support
                .iter()
                .map(|&(p, phi)| intersections(wi, wj, p) as f64 * phi)
                .sum();
            value += ai * aj * inner;
        }
    }
    let mass: f64 = fields
        .iter()
        .map(|(w, a)| a.abs() * (power_sum(w, 2) as f64).sqrt())
        .sum();
    Bounded {
        value,
        error_bound: table.tail_bound() * mass * mass,
    }
}

/// An infinite coefficient rule for an observable in the AC0 class.
#[derive(Clone, Debug)]
pub enum CoefficientRule {
    /// Already a trigonometric polynomial.
    Finite(TrigPolynomial),
    /// c(k) = constant * |k|_2^(-beta) for every k != 0 in Z^rho.
    PowerDecay { rho: usize, constant: f64, beta: f64 },
}

/// A trigonometric polynomial P and a bound on sum |c_f(k)| over the
/// omitted frequencies.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub polynomial: TrigPolynomial,
    pub omitted_mass: f64,
}

/// Largest box half-width tried by [`ac0_truncate`].
pub const MAX_TRUNCATION_BOX: u32 = 40;

/// sum of |k|_2^-beta over the k in Z^rho with |k|_inf = m >= 1.
fn shell_sum(rho: usize, m: u32, beta: f64) -> f64 {
    // split by the first coordinate i with |k_i| = m: earlier coordinates
    // range over (-m, m), later ones over [-m, m]
    fn walk(k: &mut Vec<i64>, ranges: &[(i64, i64)], beta: f64) -> f64 {
        let i = k.len();
        if i == ranges.len() {
            let norm: f64 = k.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
            return norm.powf(-beta);
        }
        let mut total = 0.0;
        for v in ranges[i].0..=ranges[i].1 {
            k.push(v);
            total += walk(k, ranges, beta);
            k.pop();
        }
        total
    }
    let m = m as i64;
    let mut total = 0.0;
    for first in 0..rho {
        for sign in [-m, m] {
            let ranges: Vec<(i64, i64)> = (0..rho)
                .map(|j| match j.cmp(&first) {
                    std::cmp::Ordering::Less => (-m + 1, m - 1),
                    std::cmp::Ordering::Equal => (sign, sign),
                    std::cmp::Ordering::Greater => (-m, m),
                })
                .collect();
            total += walk(&mut Vec::with_capacity(rho), &ranges, beta);
        }
    }
    total
}

/// Smallest box truncation P of the rule with (omitted l1 mass)² <= eps,
/// so that ||phi_{f-P}||_inf <= eps.
pub fn ac0_truncate(rule: &CoefficientRule, eps: f64) -> Result<Truncation> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let (rho, constant, beta) = match rule {
        CoefficientRule::Finite(p) => {
            return Ok(Truncation {
                polynomial: p.clone(),
                omitted_mass: 0.0,
            })
        }
        &CoefficientRule::PowerDecay { rho, constant, beta } => (rho, constant, beta),
    };
    if rho == 0 || !(beta > rho as f64) {
        return Err(Error::NotSummable(format!(
            "|k|^-{beta} is not summable on Z^{rho}; need beta > rho"
        )));
    }
    let c = constant.abs();
    let mut shells: Vec<f64> = vec![0.0];
    let rhof = rho as f64;
    // sum_{m > M} shell(m) m^-beta with shell(m) <= 2 rho (2m+1)^(rho-1)
    let analytic = |big_m: u32| {
        let mm = big_m as f64;
        c * 2.0 * rhof * (2.0 + 1.0 / mm).powf(rhof - 1.0) * mm.powf(rhof - beta) / (beta - rhof)
    };
    for n in 0..=MAX_TRUNCATION_BOX {
        let big_m = 4 * n + 8;
        while shells.len() <= big_m as usize {
            shells.push(c * shell_sum(rho, shells.len() as u32, beta));
        }
        let tail: f64 = shells[(n + 1) as usize..=big_m as usize].iter().sum::<f64>() + analytic(big_m);
        if tail * tail <= eps {
            let terms = box_frequencies(rho, n).into_iter().map(|k| {
                let norm: f64 = k.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
                (k, Complex64::new(constant * norm.powf(-beta), 0.0))
            });
            return Ok(Truncation {
                polynomial: TrigPolynomial::new(rho, terms)?,
                omitted_mass: tail,
            });
        }
    }
    Err(Error::Unsupported(format!(
        "eps = {eps} needs a box wider than {MAX_TRUNCATION_BOX}"
    )))
}

fn box_frequencies(rho: usize, n: u32) -> Vec<Vec<i64>> {
    let n = n as i64;
    let mut out = Vec::new();
    let mut k = vec![-n; rho];
    loop {
        if k.iter().any(|&v| v != 0) {
            out.push(k.clone());
        }
        let mut i = 0;
        loop {
            if i == rho {
                return out;
            }
            k[i] += 1;
            if k[i] <= n {
                break;
            }
            k[i] = -n;
            i += 1;
        }
    }
}
