//! Empirical estimation of C0 from mean self-intersection counts.

use crate::error::{Error, Result};
use crate::occupation::{occupation, self_intersections};
use crate::rng::{lane, StreamId};
use crate::stats::Moments;
use crate::walk::{sample_path, StepDistribution, StepSampler};
use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C0Estimate {
    /// Coefficient of n ln n.
    pub value: f64,
    pub std_err: f64,
    /// Coefficient of the linear correction n.
    pub linear: f64,
    /// (n, mean V_n, standard error) per grid point.
    pub points: Vec<(usize, f64, f64)>,
}

/// Fits mean V_n = C0 n ln n + c n by weighted least squares over the grid,
/// with independent paths at each n and weights from the sample standard
/// errors. The second regressor absorbs the O(n) correction that a plain
/// slope against n ln n would leak into C0.
pub fn estimate_c0(
    walk: &StepDistribution,
    n_grid: &[usize],
    paths_per_n: usize,
    seed: u64,
) -> Result<C0Estimate> {
    if n_grid.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "C0 regression needs at least 4 grid points, got {}",
            n_grid.len()
        )));
    }
    if n_grid.iter().any(|&n| n < 2) || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n grid must be strictly increasing with n >= 2".into()));
    }
    if paths_per_n < 2 {
        return Err(Error::InvalidParameter("need at least 2 paths per grid point".into()));
    }
    let sampler = StepSampler::new(walk)?;
    if !sampler.report().aperiodic {
        return Err(Error::NotAperiodic(sampler.report().support_index));
    }

    let points: Vec<(usize, f64, f64)> = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let stream = StreamId::new(seed, lane::AUX, i as u64);
            let m: Moments = (0..paths_per_n)
                .into_par_iter()
                .map(|j| {
                    let path = sample_path(&sampler, n, stream.child(j as u64));
                    let w = occupation(&path, 0..n).expect("interval inside path");
                    self_intersections(&w) as f64
                })
                .collect::<Vec<f64>>()
                .iter()
                .collect();
            (n, m.mean(), m.std_err())
        })
        .collect();

    let mut xtwx = Matrix2::zeros();
    let mut xtwy = Vector2::zeros();
    for &(n, mean, se) in &points {
        let nf = n as f64;
        let x = Vector2::new(nf * nf.ln(), nf);
        let weight = 1.0 / se.max(f64::EPSILON * mean).powi(2);
        xtwx += weight * x * x.transpose();
        xtwy += weight * mean * x;
    }
    let inv = xtwx
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("singular regression design".into()))?;
    let beta = inv * xtwy;
    if !(beta[0] > 0.0) {
        return Err(Error::InvalidParameter(format!("non-positive C0 estimate {}", beta[0])));
    }
    Ok(C0Estimate {
        value: beta[0],
        std_err: inv[(0, 0)].sqrt(),
        linear: beta[1],
        points,
    })
}
