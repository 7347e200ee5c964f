//! Structured experiment output.

use serde::{Deserialize, Serialize};

/// One named scalar estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimator: String,
    /// Parameter values identifying the row, e.g. `n=1000000`.
    pub label: String,
    pub value: f64,
    pub std_err: Option<f64>,
    pub sample_size: u64,
}

/// A pass/fail decision with its threshold(s) and sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
    pub statistic: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub sample_size: u64,
}

impl Verdict {
    pub fn at_most(criterion: impl Into<String>, statistic: f64, upper: f64, sample_size: u64) -> Self {
        Verdict {
            criterion: criterion.into(),
            passed: statistic <= upper,
            statistic,
            lower: None,
            upper: Some(upper),
            sample_size,
        }
    }

    pub fn at_least(criterion: impl Into<String>, statistic: f64, lower: f64, sample_size: u64) -> Self {
        Verdict {
            criterion: criterion.into(),
            passed: statistic >= lower,
            statistic,
            lower: Some(lower),
            upper: None,
            sample_size,
        }
    }

    pub fn within(
        criterion: impl Into<String>,
        statistic: f64,
        lower: f64,
        upper: f64,
        sample_size: u64,
    ) -> Self {
        Verdict {
            criterion: criterion.into(),
            passed: (lower..=upper).contains(&statistic),
            statistic,
            lower: Some(lower),
            upper: Some(upper),
            sample_size,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: Option<String>,
    pub master_seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub experiment: String,
    pub estimates: Vec<Estimate>,
    pub verdicts: Vec<Verdict>,
    /// Free-form markers such as `degenerate`.
    pub flags: Vec<String>,
    pub provenance: Provenance,
}

impl StatReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        StatReport {
            experiment: experiment.into(),
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.provenance.master_seed = Some(seed);
        self
    }

    pub fn push(
        &mut self,
        estimator: impl Into<String>,
        label: impl Into<String>,
        value: f64,
        std_err: Option<f64>,
        sample_size: u64,
    ) {
        self.estimates.push(Estimate {
            estimator: estimator.into(),
            label: label.into(),
            value,
            std_err,
            sample_size,
        });
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn flag(&mut self, flag: impl Into<String>) {
        self.flags.push(flag.into());
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn find(&self, estimator: &str, label: &str) -> Option<&Estimate> {
        self.estimates
            .iter()
            .find(|e| e.estimator == estimator && e.label == label)
    }

    pub fn find_verdict(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.criterion == criterion)
    }

    /// Appends another report's rows, prefixing estimator and criterion names.
    pub fn merge(&mut self, prefix: &str, other: StatReport) {
        for mut e in other.estimates {
            e.estimator = format!("{prefix}.{}", e.estimator);
            self.estimates.push(e);
        }
        for mut v in other.verdicts {
            v.criterion = format!("{prefix}.{}", v.criterion);
            self.verdicts.push(v);
        }
        self.flags
            .extend(other.flags.into_iter().map(|f| format!("{prefix}.{f}")));
    }
}
