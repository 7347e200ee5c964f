//! Finite-n experiments around the quenched functional CLT.

mod c0;
mod fclt;
mod maximal;
mod truncation;

pub use c0::{estimate_c0, C0Estimate};
pub use fclt::{cross_term_diagnostic, fclt_experiment, CrossTerm};
pub use maximal::{fourth_moment_exact, moricz_check, newman_wright_check, C_MAX};
pub use truncation::{truncation_check, truncation_split, TruncationSplit};

use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::rng::{lane, StreamId};
use crate::scenery::SceneryModel;
use crate::walk::{c0_constant, sample_path, StepDistribution, StepSampler, WalkPath};

/// How increments of Y_n are standardized in distributional tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Divide by sqrt(C0 phi(0) n ln n (t_j - t_{j-1})).
    Asymptotic,
    /// Divide by the exact conditional standard deviation given the walk.
    Exact,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub walk: StepDistribution,
    pub model: SceneryModel,
    pub n: usize,
    /// 0 = t_0 < t_1 < .. < t_s = 1.
    pub grid: Vec<f64>,
    /// Sceneries per fixed walk.
    pub replicates: usize,
    /// Number of independent walks.
    pub omega_replicates: usize,
    pub master_seed: u64,
    pub normalization: Normalization,
    /// Overrides the closed-form C0 (needed for walks that are not
    /// strongly aperiodic).
    pub c0: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(walk: StepDistribution, model: SceneryModel, n: usize) -> Self {
        ExperimentConfig {
            walk,
            model,
            n,
            grid: vec![0.0, 1.0],
            replicates: 1000,
            omega_replicates: 1,
            master_seed: 0,
            normalization: Normalization::Asymptotic,
            c0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.len() < 2 || g[0] != 0.0 || *g.last().expect("nonempty") != 1.0 {
            return Err(Error::InvalidParameter("time grid must run from 0 to 1".into()));
        }
        if g.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
        }
        if self.n < 1 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if self.replicates < 1 || self.omega_replicates < 1 {
            return Err(Error::InvalidParameter("replicate counts must be positive".into()));
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<StepSampler> {
        StepSampler::new(&self.walk)
    }

    /// C0 from the override or the closed form.
    pub fn resolve_c0(&self, sampler: &StepSampler) -> Result<f64> {
        match self.c0 {
            Some(c) if c > 0.0 && c.is_finite() => Ok(c),
            Some(c) => Err(Error::InvalidParameter(format!("C0 must be positive, got {c}"))),
            None => c0_constant(sampler.report()),
        }
    }

    pub fn walk_stream(&self, omega: usize) -> StreamId {
        StreamId::new(self.master_seed, lane::WALK, omega as u64)
    }

    pub fn scenery_stream(&self, omega: usize, replicate: usize) -> StreamId {
        StreamId::new(self.master_seed, lane::SCENERY, omega as u64).child(replicate as u64)
    }

    /// Interval endpoints floor(n t_j).
    pub fn cut_points(&self) -> Vec<usize> {
        self.grid.iter().map(|&t| (self.n as f64 * t).floor() as usize).collect()
    }
}

/// A walk of n steps with its visited sites Z_0..Z_{n-1} sorted, and for
/// each time the index of Z_k in that list.
pub(crate) struct IndexedPath {
    pub path: WalkPath,
    pub sites: Vec<Site>,
    pub index: Vec<u32>,
}

impl IndexedPath {
    pub fn sample(sampler: &StepSampler, n: usize, stream: StreamId) -> Self {
        Self::from_path(sample_path(sampler, n, stream), n)
    }

    pub fn from_path(path: WalkPath, n: usize) -> Self {
        let visited = &path.positions()[..n];
        let mut sites = visited.to_vec();
        sites.sort_unstable();
        sites.dedup();
        let index = visited
            .iter()
            .map(|s| sites.binary_search(s).expect("visited site") as u32)
            .collect();
        IndexedPath { path, sites, index }
    }

    /// (site index, count) pairs of the occupation of [start, end).
    pub fn counts(&self, start: usize, end: usize) -> Vec<(u32, f64)> {
        let mut idx: Vec<u32> = self.index[start..end].to_vec();
        idx.sort_unstable();
        let mut out: Vec<(u32, f64)> = Vec::new();
        for i in idx {
            match out.last_mut() {
                Some((j, c)) if *j == i => *c += 1.0,
                _ => out.push((i, 1.0)),
            }
        }
        out
    }
}

pub(crate) fn weighted_sum(counts: &[(u32, f64)], values: &[f64]) -> f64 {
    counts.iter().map(|&(i, c)| c * values[i as usize]).sum()
}
