//! Maximal inequalities: Newman-Wright for associated sums and Moricz's
//! fourth-moment bound.

use super::{ExperimentConfig, IndexedPath};
use crate::error::{Error, Result};
use crate::occupation::{occupation, power_sum, self_intersections, OccupationField};
use crate::report::{StatReport, Verdict};
use crate::rng::lane;
use crate::scenery::{IidLaw, SceneryModel, SceneryPlan};
use crate::spectral::{variance_exact, CorrelationTable};
use crate::stats::{wilson_interval, Moments};
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::SQRT_2;

/// (1 - 2^(-1/4))^(-4).
pub const C_MAX: f64 = {
    // 2^(-1/4) to double precision
    let q = 0.840_896_415_253_714_5_f64;
    let d = 1.0 - q;
    1.0 / (d * d * d * d)
};

const Z_95: f64 = 1.959_963_984_540_054;

/// E S⁴ for S = sum w(l) X_l with iid X: 3 sigma⁴ (V² - U4) + mu4 U4.
pub fn fourth_moment_exact(law: &IidLaw, w: &OccupationField) -> f64 {
    let v = power_sum(w, 2) as f64;
    let u4 = power_sum(w, 4) as f64;
    let s4 = law.variance().powi(2);
    3.0 * s4 * (v * v - u4) + law.raw_moment(4) * u4
}

fn associated_parts(model: &SceneryModel) -> Result<Vec<(&'static str, SceneryModel)>> {
    match model {
        SceneryModel::Iid(_) => Ok(vec![("iid", model.clone())]),
        SceneryModel::MovingAverage(ma) => {
            let (plus, minus) = ma.sign_parts();
            let mut parts = Vec::new();
            if let Some(p) = plus {
                parts.push(("plus", SceneryModel::MovingAverage(p)));
            }
            if let Some(m) = minus {
                parts.push(("minus", SceneryModel::MovingAverage(m)));
            }
            Ok(parts)
        }
        SceneryModel::Toral(_) => Err(Error::Unsupported(
            "Newman-Wright needs associated values (iid or moving average)".into(),
        )),
    }
}

/// Checks mu(max_k |S_k| >= lambda ||S_n||) <= 2 mu(|S_n| >= (lambda -
/// sqrt 2) ||S_n||) for each fixed walk, with ||S_n|| the exact conditional
/// standard deviation. Moving averages are split into the a^+ and a^-
/// filters, each of which has associated values, and checked separately.
/// The verdict allows twice the combined 95% Wilson half-width.
pub fn newman_wright_check(cfg: &ExperimentConfig, lambda: f64) -> Result<StatReport> {
    cfg.validate()?;
    if !(lambda > SQRT_2) {
        return Err(Error::InvalidParameter(format!("lambda must exceed sqrt 2, got {lambda}")));
    }
    let parts = associated_parts(&cfg.model)?;
    let sampler = cfg.sampler()?;
    let n = cfg.n;
    let reps = cfg.replicates as u64;
    let rows: Vec<Vec<(u64, u64, f64)>> = (0..cfg.omega_replicates)
        .into_par_iter()
        .map(|omega| -> Result<Vec<(u64, u64, f64)>> {
            let ip = IndexedPath::sample(&sampler, n, cfg.walk_stream(omega));
            let w = occupation(&ip.path, 0..n)?;
            parts
                .iter()
                .enumerate()
                .map(|(pi, (_, model))| {
                    let reach = model.correlation_reach().unwrap_or(0);
                    let sd = variance_exact(&[(&w, 1.0)], &CorrelationTable::new(model, reach)).value.sqrt();
                    let plan = SceneryPlan::new(model, &ip.sites)?;
                    let mut values = vec![0.0; ip.sites.len()];
                    let (mut lhs, mut rhs) = (0u64, 0u64);
                    for r in 0..cfg.replicates {
                        let stream = cfg.scenery_stream(omega, r).child(pi as u64);
                        plan.fill(&mut stream.rng(), &mut values);
                        let mut s = 0.0f64;
                        let mut max = 0.0f64;
                        for &i in &ip.index {
                            s += values[i as usize];
                            max = max.max(s.abs());
                        }
                        lhs += u64::from(max >= lambda * sd);
                        rhs += u64::from(s.abs() >= (lambda - SQRT_2) * sd);
                    }
                    Ok((lhs, rhs, sd))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut report = StatReport::new("newman_wright").with_seed(cfg.master_seed);
    report.push("lambda", "", lambda, None, 0);
    for (omega, row) in rows.iter().enumerate() {
        for (&(lhs, rhs, sd), (name, _)) in row.iter().zip(&parts) {
            let label = format!("{name},omega={omega}");
            let pl = lhs as f64 / reps as f64;
            let pr = rhs as f64 / reps as f64;
            let (_, hl) = wilson_interval(lhs, reps, Z_95);
            let (_, hr) = wilson_interval(rhs, reps, Z_95);
            report.push("lhs", &label, pl, Some((pl * (1.0 - pl) / reps as f64).sqrt()), reps);
            report.push("rhs", &label, 2.0 * pr, Some(2.0 * (pr * (1.0 - pr) / reps as f64).sqrt()), reps);
            report.push("sd_exact", &label, sd, None, 1);
            let margin = 2.0 * (hl * hl + 4.0 * hr * hr).sqrt();
            report.verdict(Verdict::at_most(format!("nw_{label}"), pl - 2.0 * pr, margin, reps));
        }
    }
    Ok(report)
}

/// Number of random adjacent splits checked for super-additivity of G0.
pub const SUPERADDITIVITY_SPLITS: usize = 1000;

/// Moricz's inequality E M⁴ <= C_MAX G0² on the interval [b, b + k) with
/// G0 = sqrt(3 sigma⁴ + mu4) V(omega, [b, b + k)), for iid sceneries.
///
/// Per walk: exact E S⁴ against its Monte Carlo estimate (4 standard
/// errors), the Monte Carlo E M⁴ plus 4 standard errors against C_MAX G0²,
/// and super-additivity of V (hence G0) on random adjacent splits, in
/// exact integer arithmetic.
pub fn moricz_check(cfg: &ExperimentConfig, b: usize, k: usize) -> Result<StatReport> {
    cfg.validate()?;
    let SceneryModel::Iid(law) = &cfg.model else {
        return Err(Error::Unsupported("Moricz check needs an iid scenery with closed-form moments".into()));
    };
    law.validate()?;
    if k == 0 || b + k > cfg.n {
        return Err(Error::IntervalOutOfRange {
            start: b,
            end: b + k,
            len: cfg.n,
        });
    }
    let sampler = cfg.sampler()?;
    let g0_factor = (3.0 * law.variance().powi(2) + law.raw_moment(4)).sqrt();
    let reps = cfg.replicates as u64;

    struct Row {
        exact: f64,
        s4: Moments,
        m4: Moments,
        g0: f64,
        violations: usize,
    }
    let rows: Vec<Row> = (0..cfg.omega_replicates)
        .into_par_iter()
        .map(|omega| -> Result<Row> {
            let ip = IndexedPath::sample(&sampler, cfg.n, cfg.walk_stream(omega));
            let w = occupation(&ip.path, b..b + k)?;
            let exact = fourth_moment_exact(law, &w);
            let plan = SceneryPlan::new(&cfg.model, &ip.sites)?;
            let mut values = vec![0.0; ip.sites.len()];
            let (mut s4, mut m4) = (Moments::new(), Moments::new());
            for r in 0..cfg.replicates {
                plan.fill(&mut cfg.scenery_stream(omega, r).rng(), &mut values);
                let mut s = 0.0f64;
                let mut max = 0.0f64;
                for &i in &ip.index[b..b + k] {
                    s += values[i as usize];
                    max = max.max(s.abs());
                }
                s4.push(s.powi(4));
                m4.push(max.powi(4));
            }
            let violations = superadditivity_violations(&ip, cfg, omega)?;
            Ok(Row {
                exact,
                s4,
                m4,
                g0: g0_factor * self_intersections(&w) as f64,
                violations,
            })
        })
        .collect::<Result<_>>()?;

    let mut report = StatReport::new("moricz").with_seed(cfg.master_seed);
    report.push("c_max", "", C_MAX, None, 0);
    for (omega, row) in rows.iter().enumerate() {
        let label = format!("omega={omega}");
        report.push("es4_exact", &label, row.exact, None, 0);
        report.push("es4_mc", &label, row.s4.mean(), Some(row.s4.std_err()), reps);
        report.verdict(Verdict::at_most(
            format!("es4_agreement_{label}"),
            (row.s4.mean() - row.exact).abs(),
            4.0 * row.s4.std_err(),
            reps,
        ));
        let bound = C_MAX * row.g0 * row.g0;
        report.push("em4_mc", &label, row.m4.mean(), Some(row.m4.std_err()), reps);
        report.push("em4_over_g0_sq", &label, row.m4.mean() / (row.g0 * row.g0), None, reps);
        report.verdict(Verdict::at_most(
            format!("moricz_{label}"),
            row.m4.mean() + 4.0 * row.m4.std_err(),
            bound,
            reps,
        ));
        report.verdict(Verdict::at_most(
            format!("g0_superadditive_{label}"),
            row.violations as f64,
            0.0,
            SUPERADDITIVITY_SPLITS as u64,
        ));
    }
    Ok(report)
}

/// Counts random splits [b, b+k1) + [b+k1, b+k1+k2) where V fails to be
/// super-additive.
fn superadditivity_violations(ip: &IndexedPath, cfg: &ExperimentConfig, omega: usize) -> Result<usize> {
    let n = cfg.n;
    if n < 2 {
        return Ok(0);
    }
    let mut rng = crate::rng::StreamId::new(cfg.master_seed, lane::AUX, omega as u64).rng();
    let mut violations = 0;
    for _ in 0..SUPERADDITIVITY_SPLITS {
        let b = rng.random_range(0..n - 1);
        let k1 = rng.random_range(1..n - b);
        let k2 = rng.random_range(0..=n - b - k1);
        let left = occupation(&ip.path, b..b + k1)?;
        let right = occupation(&ip.path, b + k1..b + k1 + k2)?;
        let whole = occupation(&ip.path, b..b + k1 + k2)?;
        if self_intersections(&left) + self_intersections(&right) > self_intersections(&whole) {
            violations += 1;
        }
    }
    Ok(violations)
}
