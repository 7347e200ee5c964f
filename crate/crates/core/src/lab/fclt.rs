//! Finite-dimensional distributions of Y_n and cross-term orthogonality.

use super::{weighted_sum, ExperimentConfig, IndexedPath, Normalization};
use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::occupation::{intersections, occupation, OccupationField};
use crate::report::{StatReport, Verdict};
use crate::scenery::SceneryPlan;
use crate::spectral::{asymptotic_variance, CorrelationTable, DEFAULT_WINDOW};
use crate::stats::{ks_test, normal_cdf, Moments};
use crate::walk::WalkPath;
use rayon::prelude::*;

/// Per-test significance level of the KS tests.
pub const KS_ALPHA: f64 = 0.01;
/// Required share of walks whose projection family passes.
pub const KS_PASS_SHARE: f64 = 0.95;

fn projections(s: usize) -> Vec<(&'static str, Vec<f64>)> {
    vec![
        ("ones", vec![1.0; s]),
        ("alternating", (0..s).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect()),
        ("ramp", (1..=s).map(|j| j as f64).collect()),
    ]
}

struct OmegaResult {
    exact_cov: Vec<Vec<f64>>,
    empirical_cov: Vec<Vec<f64>>,
    ks: Vec<[f64; 2]>,
}

fn quadratic(a: &[f64], m: &[Vec<f64>]) -> f64 {
    a.iter()
        .enumerate()
        .map(|(i, ai)| a.iter().enumerate().map(|(j, aj)| ai * aj * m[i][j]).sum::<f64>())
        .sum()
}

fn covariance_exact(a: &OccupationField, b: &OccupationField, table: &[(Site, f64)]) -> f64 {
    table
        .iter()
        .map(|&(p, phi)| intersections(a, b, p) as f64 * phi)
        .sum()
}

/// Finite-dimensional check of the quenched FCLT.
///
/// For each walk the increments Delta_j = S over [floor(n t_{j-1}),
/// floor(n t_j)) are drawn for `replicates` sceneries. Reported per
/// increment: empirical and exact variance over C0 phi(0) n ln n (t_j -
/// t_{j-1}), averaged over walks; pairwise covariances on the same scale;
/// and, for three projection vectors, KS tests of the standardized
/// projections under both normalizations. A walk passes when all three
/// projections pass at KS_ALPHA / 3 under the configured normalization.
/// Degenerate observables (phi(0) = 0) are flagged and the distributional
/// tests skipped.
pub fn fclt_experiment(cfg: &ExperimentConfig) -> Result<StatReport> {
    cfg.validate()?;
    if cfg.replicates < 100 {
        return Err(Error::InvalidParameter("distributional tests need at least 100 sceneries".into()));
    }
    let sampler = cfg.sampler()?;
    let c0 = cfg.resolve_c0(&sampler)?;
    let n = cfg.n;
    let nf = n as f64;
    let scale = c0 * nf * nf.ln();
    let sigma2 = asymptotic_variance(&cfg.model, 1.0);
    let mut report = StatReport::new("fclt").with_seed(cfg.master_seed);
    report.push("phi0", "", sigma2.value, Some(sigma2.error_bound), 0);
    report.push("c0", "", c0, None, 0);
    let degenerate = sigma2.value.abs() <= sigma2.error_bound + 1e-12 * cfg.model.variance();
    if degenerate {
        report.flag("degenerate");
        return Ok(report);
    }
    let table: Vec<(Site, f64)> = CorrelationTable::new(&cfg.model, cfg.model.correlation_reach().map_or(DEFAULT_WINDOW, |r| r.min(DEFAULT_WINDOW)))
        .iter()
        .filter(|(_, v)| *v != 0.0)
        .collect();
    let cuts = cfg.cut_points();
    let s = cuts.len() - 1;
    let widths: Vec<f64> = cfg.grid.windows(2).map(|w| w[1] - w[0]).collect();
    let projs = projections(s);

    let results: Vec<OmegaResult> = (0..cfg.omega_replicates)
        .into_par_iter()
        .map(|omega| -> Result<OmegaResult> {
            let ip = IndexedPath::sample(&sampler, n, cfg.walk_stream(omega));
            let fields: Vec<OccupationField> = (0..s)
                .map(|j| occupation(&ip.path, cuts[j]..cuts[j + 1]))
                .collect::<Result<_>>()?;
            let exact_cov: Vec<Vec<f64>> = (0..s)
                .map(|i| (0..s).map(|j| covariance_exact(&fields[i], &fields[j], &table)).collect())
                .collect();
            let counts: Vec<Vec<(u32, f64)>> = (0..s).map(|j| ip.counts(cuts[j], cuts[j + 1])).collect();
            let plan = SceneryPlan::new(&cfg.model, &ip.sites)?;
            let mut values = vec![0.0; ip.sites.len()];
            let mut deltas: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.replicates); s];
            for r in 0..cfg.replicates {
                plan.fill(&mut cfg.scenery_stream(omega, r).rng(), &mut values);
                for j in 0..s {
                    deltas[j].push(weighted_sum(&counts[j], &values));
                }
            }
            let rf = cfg.replicates as f64;
            let means: Vec<f64> = deltas.iter().map(|d| d.iter().sum::<f64>() / rf).collect();
            let empirical_cov: Vec<Vec<f64>> = (0..s)
                .map(|i| {
                    (0..s)
                        .map(|j| {
                            deltas[i]
                                .iter()
                                .zip(&deltas[j])
                                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                                .sum::<f64>()
                                / (rf - 1.0)
                        })
                        .collect()
                })
                .collect();
            let ks = projs
                .iter()
                .map(|(_, a)| {
                    let proj: Vec<f64> = (0..cfg.replicates)
                        .map(|r| (0..s).map(|j| a[j] * deltas[j][r]).sum())
                        .collect();
                    let exact_sd = quadratic(a, &exact_cov).sqrt();
                    let asymptotic_sd = (scale * sigma2.value * a.iter().zip(&widths).map(|(x, w)| x * x * w).sum::<f64>()).sqrt();
                    let test = |sd: f64| {
                        let z: Vec<f64> = proj.iter().map(|p| p / sd).collect();
                        ks_test(&z, normal_cdf).p_value
                    };
                    [test(exact_sd), test(asymptotic_sd)]
                })
                .collect();
            Ok(OmegaResult {
                exact_cov,
                empirical_cov,
                ks,
            })
        })
        .collect::<Result<_>>()?;

    let reps = cfg.omega_replicates as u64;
    for j in 0..s {
        let norm = scale * sigma2.value * widths[j];
        let label = format!("j={}", j + 1);
        let emp: Moments = results.iter().map(|r| r.empirical_cov[j][j] / norm).collect();
        report.push("variance_ratio_empirical", &label, emp.mean(), Some(emp.std_err()), reps);
        let ex: Moments = results.iter().map(|r| r.exact_cov[j][j] / norm).collect();
        report.push("variance_ratio_exact", &label, ex.mean(), Some(ex.std_err()), reps);
        for k in j + 1..s {
            let label = format!("j={},k={}", j + 1, k + 1);
            let norm = scale * sigma2.value;
            let emp: Moments = results.iter().map(|r| r.empirical_cov[j][k] / norm).collect();
            report.push("increment_cov_empirical", &label, emp.mean(), Some(emp.std_err()), reps);
            let ex: Moments = results.iter().map(|r| r.exact_cov[j][k] / norm).collect();
            report.push("increment_cov_exact", &label, ex.mean(), Some(ex.std_err()), reps);
        }
    }
    let total: Moments = results
        .iter()
        .map(|r| r.exact_cov.iter().flatten().sum::<f64>() / (scale * sigma2.value))
        .collect();
    report.push("variance_ratio_total_exact", "", total.mean(), Some(total.std_err()), reps);

    let per_test = KS_ALPHA / projs.len() as f64;
    for (mode, name) in [(0, "exact"), (1, "asymptotic")] {
        let passing = results
            .iter()
            .filter(|r| r.ks.iter().all(|p| p[mode] >= per_test))
            .count();
        let share = passing as f64 / reps as f64;
        report.push("ks_pass_share", name, share, None, reps);
        for (pi, (pname, _)) in projs.iter().enumerate() {
            let p: Moments = results.iter().map(|r| r.ks[pi][mode]).collect();
            report.push("ks_p_value_mean", format!("{name},{pname}"), p.mean(), Some(p.std_err()), reps);
        }
        let configured = match cfg.normalization {
            Normalization::Exact => 0,
            Normalization::Asymptotic => 1,
        };
        if mode == configured {
            report.verdict(Verdict::at_least("ks_pass_share", share, KS_PASS_SHARE, reps));
        }
    }
    Ok(report)
}

/// Cross terms of the self-intersections between [0, nA) and [nA, n).
#[derive(Clone, Debug, PartialEq)]
pub struct CrossTerm {
    /// (V(I, J, p) + V(J, I, p)) / (C0 n ln n).
    pub ratio: f64,
    pub cross: u64,
    pub whole: u64,
    pub first: u64,
    pub second: u64,
}

/// Cross-term diagnostic on the first n = path.len() - 1 steps.
pub fn cross_term_diagnostic(path: &WalkPath, a: f64, p: Site, c0: f64) -> Result<CrossTerm> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!("A must lie in (0,1), got {a}")));
    }
    let n = path.len().saturating_sub(1);
    if n < 2 {
        return Err(Error::InvalidParameter("path needs at least two steps".into()));
    }
    let cut = (n as f64 * a).floor() as usize;
    let i = occupation(path, 0..cut)?;
    let j = occupation(path, cut..n)?;
    let all = occupation(path, 0..n)?;
    let cross = intersections(&i, &j, p) + intersections(&j, &i, p);
    let nf = n as f64;
    Ok(CrossTerm {
        ratio: cross as f64 / (c0 * nf * nf.ln()),
        cross,
        whole: intersections(&all, &all, p),
        first: intersections(&i, &i, p),
        second: intersections(&j, &j, p),
    })
}
