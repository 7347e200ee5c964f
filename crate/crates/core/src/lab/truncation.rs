//! Truncation of iid values into a bounded part and a small tail.

use crate::error::{Error, Result};
use crate::report::{StatReport, Verdict};
use crate::rng::{lane, StreamId};
use crate::scenery::IidLaw;
use crate::stats::{variance_with_se, Moments};
use serde::{Deserialize, Serialize};

/// X = hat + tilde with hat = X 1{|X| <= L} - E[X 1{|X| <= L}] and
/// tilde = X 1{|X| > L} - E[X 1{|X| > L}]. Both parts are centered.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationSplit {
    pub law: IidLaw,
    pub level: f64,
    /// E[X 1{|X| <= L}]; E[X 1{|X| > L}] is its negative.
    pub hat_mean: f64,
    /// Var(tilde) = E[X² 1{|X| > L}] - E[X 1{|X| > L}]².
    pub tail_variance: f64,
    /// E[X² 1{|X| > L}].
    pub tail_second_moment: f64,
}

impl TruncationSplit {
    /// (hat, tilde). tilde is formed as x - hat, so hat + tilde equals x
    /// exactly when hat_mean is 0 and to within rounding otherwise.
    pub fn split(&self, x: f64) -> (f64, f64) {
        let kept = if x.abs() <= self.level { x } else { 0.0 };
        let hat = kept - self.hat_mean;
        (hat, x - hat)
    }

    /// True when the tail part vanishes almost surely.
    pub fn tail_is_null(&self) -> bool {
        self.law.bound().is_some_and(|b| b <= self.level)
    }
}

pub fn truncation_split(law: &IidLaw, level: f64) -> Result<TruncationSplit> {
    law.validate()?;
    if !(level > 0.0) || !level.is_finite() {
        return Err(Error::InvalidParameter(format!("truncation level must be positive, got {level}")));
    }
    let hat_mean = law.truncated_mean(level);
    let tail_second_moment = law.tail_second_moment(level);
    Ok(TruncationSplit {
        law: *law,
        level,
        hat_mean,
        tail_variance: (tail_second_moment - hat_mean * hat_mean).max(0.0),
        tail_second_moment,
    })
}

/// Monte Carlo check of a split: both parts centered and the tail
/// variance at 4 standard errors, and recomposition on every sample up
/// to rounding.
pub fn truncation_check(law: &IidLaw, level: f64, samples: usize, seed: u64) -> Result<StatReport> {
    let split = truncation_split(law, level)?;
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let mut rng = StreamId::new(seed, lane::AUX, 0).rng();
    let (mut hat, mut tilde) = (Moments::new(), Moments::new());
    let mut mismatches = 0u64;
    let mut tildes = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = law.sample(&mut rng);
        let (h, t) = split.split(x);
        if (h + t - x).abs() > 2.0 * f64::EPSILON * h.abs().max(x.abs()) {
            mismatches += 1;
        }
        hat.push(h);
        tilde.push(t);
        tildes.push(t);
    }
    let (var_mc, var_se) = variance_with_se(&tildes);
    let n = samples as u64;
    let mut report = StatReport::new("truncation").with_seed(seed);
    report.push("level", "", level, None, 0);
    report.push("tail_variance_exact", "", split.tail_variance, None, 0);
    report.push("tail_variance_mc", "", var_mc, Some(var_se), n);
    report.push("hat_mean_mc", "", hat.mean(), Some(hat.std_err()), n);
    report.push("tilde_mean_mc", "", tilde.mean(), Some(tilde.std_err()), n);
    report.verdict(Verdict::at_most("recomposition", mismatches as f64, 0.0, n));
    report.verdict(Verdict::at_most(
        "tail_variance_agreement",
        (var_mc - split.tail_variance).abs(),
        4.0 * var_se,
        n,
    ));
    report.verdict(Verdict::at_most("hat_centered", hat.mean().abs(), 4.0 * hat.std_err(), n));
    report.verdict(Verdict::at_most("tilde_centered", tilde.mean().abs(), 4.0 * tilde.std_err(), n));
    Ok(report)
}
