//! Scenery models and their exact correlations.

mod iid;
pub mod matrix;
mod toral;
mod trig;

pub use iid::IidLaw;
pub use matrix::IntMatrix;
pub use toral::{
    coboundary, correlation_radius, correlation_tail_bound, toral_correlation, verify_action,
    ActionReport, JointSpectrum, ToralAction, ToralSampler, DEFAULT_MODULUS, MAX_ESCAPE_RADIUS,
    UNIT_CIRCLE_TOL,
};
pub use trig::TrigPolynomial;

use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::rng::StreamId;
use num_bigint::BigInt;
use rand::Rng;
use std::collections::BTreeMap;

/// Xi_l = sum_q a_q X_{l - q} over an iid base field.
#[derive(Clone, Debug, PartialEq)]
pub struct MovingAverage {
    coeffs: BTreeMap<Site, f64>,
    base: IidLaw,
}

impl MovingAverage {
    pub fn new(coeffs: impl IntoIterator<Item = (Site, f64)>, base: IidLaw) -> Result<Self> {
        base.validate()?;
        let mut map = BTreeMap::new();
        for (q, a) in coeffs {
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!("coefficient at {q} is not finite")));
            }
            *map.entry(q).or_insert(0.0) += a;
        }
        map.retain(|_, a| *a != 0.0);
        if map.is_empty() {
            return Err(Error::InvalidParameter("moving average needs a nonzero coefficient".into()));
        }
        Ok(MovingAverage { coeffs: map, base })
    }

    pub fn coeffs(&self) -> &BTreeMap<Site, f64> {
        &self.coeffs
    }

    pub fn base(&self) -> IidLaw {
        self.base
    }

    pub fn coeff_sum(&self) -> f64 {
        self.coeffs.values().sum()
    }

    pub fn abs_sum(&self) -> f64 {
        self.coeffs.values().map(|a| a.abs()).sum()
    }

    /// Largest |q|_inf over the coefficient support.
    pub fn reach(&self) -> u32 {
        self.coeffs.keys().map(|q| q.norm_inf()).max().unwrap_or(0)
    }

    /// Var(X) * sum_q a_q a_{q - l}.
    pub fn correlation(&self, l: Site) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .filter_map(|(&q, a)| self.coeffs.get(&(q - l)).map(|b| a * b))
            .sum();
        self.base.variance() * s
    }

    /// The filters built from a^+ = max(a, 0) and a^- = max(-a, 0), each
    /// with nonnegative coefficients and hence associated values. A part
    /// is `None` when it has no coefficient.
    pub fn sign_parts(&self) -> (Option<MovingAverage>, Option<MovingAverage>) {
        let part = |sign: f64| {
            MovingAverage::new(
                self.coeffs.iter().map(|(&q, &a)| (q, (sign * a).max(0.0))),
                self.base,
            )
            .ok()
        };
        (part(1.0), part(-1.0))
    }
}

/// A toral observable l -> f(A^l x), sampled at x = p / q.
#[derive(Clone, Debug)]
pub struct ToralModel {
    pub action: ToralAction,
    pub observable: TrigPolynomial,
    pub modulus: u64,
}

impl ToralModel {
    pub fn new(action: ToralAction, observable: TrigPolynomial, modulus: u64) -> Result<Self> {
        if !matrix::is_prime_u64(modulus) {
            return Err(Error::ModulusNotPrime(modulus));
        }
        if observable.rho() != action.rho() {
            return Err(Error::InvalidPolynomial(format!(
                "observable lives on T^{} but the action on T^{}",
                observable.rho(),
                action.rho()
            )));
        }
        Ok(ToralModel {
            action,
            observable,
            modulus,
        })
    }
}

#[derive(Clone, Debug)]
pub enum SceneryModel {
    Iid(IidLaw),
    MovingAverage(MovingAverage),
    Toral(ToralModel),
}

impl SceneryModel {
    /// The stationary correlation E[X_l X_0].
    pub fn exact_correlation(&self, l: Site) -> f64 {
        match self {
            SceneryModel::Iid(law) => {
                if l == Site::ORIGIN {
                    law.variance()
                } else {
                    0.0
                }
            }
            SceneryModel::MovingAverage(ma) => ma.correlation(l),
            SceneryModel::Toral(t) => toral_correlation(&t.action, &t.observable, l),
        }
    }

    pub fn variance(&self) -> f64 {
        self.exact_correlation(Site::ORIGIN)
    }

    /// Radius beyond which all correlations vanish, when known.
    pub fn correlation_reach(&self) -> Option<u32> {
        match self {
            SceneryModel::Iid(_) => Some(0),
            SceneryModel::MovingAverage(ma) => {
                let sites: Vec<Site> = ma.coeffs.keys().copied().collect();
                let mut reach = 0;
                for &a in &sites {
                    for &b in &sites {
                        reach = reach.max((a - b).norm_inf());
                    }
                }
                Some(reach)
            }
            SceneryModel::Toral(t) => correlation_radius(&t.action, &t.observable),
        }
    }
}

/// (A^l)^T k in exact arithmetic.
pub fn transported_frequency(k: &[BigInt], l: Site, action: &ToralAction) -> Vec<BigInt> {
    action.transport(k, l)
}

#[derive(Clone, Debug)]
enum Plan {
    Iid(IidLaw),
    MovingAverage {
        base: IidLaw,
        base_len: usize,
        offsets: Vec<usize>,
        entries: Vec<(u32, f64)>,
    },
    Toral(ToralSampler),
}

/// A scenery model prepared for repeated sampling on a fixed list of sites.
/// Values are written in the order of the site list.
#[derive(Clone, Debug)]
pub struct SceneryPlan {
    len: usize,
    plan: Plan,
}

impl SceneryPlan {
    pub fn new(model: &SceneryModel, sites: &[Site]) -> Result<Self> {
        let plan = match model {
            SceneryModel::Iid(law) => {
                law.validate()?;
                Plan::Iid(*law)
            }
            SceneryModel::MovingAverage(ma) => {
                let mut base_sites: Vec<Site> = sites
                    .iter()
                    .flat_map(|&l| ma.coeffs.keys().map(move |&q| l - q))
                    .collect();
                base_sites.sort_unstable();
                base_sites.dedup();
                let mut offsets = Vec::with_capacity(sites.len() + 1);
                let mut entries = Vec::with_capacity(sites.len() * ma.coeffs.len());
                offsets.push(0);
                for &l in sites {
                    for (&q, &a) in &ma.coeffs {
                        let idx = base_sites.binary_search(&(l - q)).expect("base site present");
                        entries.push((idx as u32, a));
                    }
                    offsets.push(entries.len());
                }
                Plan::MovingAverage {
                    base: ma.base,
                    base_len: base_sites.len(),
                    offsets,
                    entries,
                }
            }
            SceneryModel::Toral(t) => {
                Plan::Toral(ToralSampler::new(&t.action, &t.observable, t.modulus, sites)?)
            }
        };
        Ok(SceneryPlan {
            len: sites.len(),
            plan,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Draws one scenery; `out` must have one slot per site.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.len, "output length must match the site list");
        match &self.plan {
            Plan::Iid(law) => law.fill(rng, out),
            Plan::MovingAverage {
                base,
                base_len,
                offsets,
                entries,
            } => {
                let mut values = vec![0.0; *base_len];
                base.fill(rng, &mut values);
                for (i, o) in out.iter_mut().enumerate() {
                    *o = entries[offsets[i]..offsets[i + 1]]
                        .iter()
                        .map(|&(j, a)| a * values[j as usize])
                        .sum();
                }
            }
            Plan::Toral(sampler) => {
                let p = sampler.draw_point(rng);
                sampler.evaluate_into(&p, out);
            }
        }
    }
}

/// One scenery draw on `sites`, deterministic given the model, the site
/// order and the stream.
pub fn sample_scenery(sites: &[Site], model: &SceneryModel, stream: StreamId) -> Result<Vec<f64>> {
    let plan = SceneryPlan::new(model, sites)?;
    let mut out = vec![0.0; sites.len()];
    plan.fill(&mut stream.rng(), &mut out);
    Ok(out)
}
