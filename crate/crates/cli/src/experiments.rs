//! Subcommand registry: each entry turns the config into one StatReport.

use crate::config::Config;
use crate::{CliError, Command};
use rwrs_core::cumulant::{leonov_statistic, partitions};
use rwrs_core::lab::{cross_term_diagnostic, estimate_c0, fclt_experiment, moricz_check, newman_wright_check};
use rwrs_core::occupation::{kernel_fourier_ratio, lln_table, self_intersections};
use rwrs_core::report::Verdict;
use rwrs_core::rng::{lane, StreamId};
use rwrs_core::scenery::{correlation_radius, toral_correlation, verify_action, SceneryModel, SceneryPlan};
use rwrs_core::spectral::{asymptotic_variance, variance_exact, CorrelationTable, DEFAULT_WINDOW};
use rwrs_core::stats::{variance_with_se, Moments};
use rwrs_core::walk::StepSampler;
use rwrs_core::{occupation, sample_path, Site, StatReport, WalkPath};
use rayon::prelude::*;

fn missing(section: &str) -> CliError {
    CliError::Validation(format!("config has no [{section}] table"))
}

pub fn run(cmd: Command, config: &Config) -> Result<StatReport, CliError> {
    match cmd {
        Command::Lln => lln(config),
        Command::Fclt => fclt(config),
        Command::Variance => variance(config),
        Command::Cumulants => cumulants(config),
        Command::Maximal => maximal(config),
        Command::ToralVerify => toral_verify(config),
        Command::EstimateC0 => c0(config),
    }
}

fn walks(config: &Config, count: usize, n: usize) -> Result<Vec<WalkPath>, CliError> {
    let sampler = StepSampler::new(&config.walk()?)?;
    let seed = config.seed();
    Ok((0..count)
        .into_par_iter()
        .map(|i| sample_path(&sampler, n, StreamId::new(seed, lane::WALK, i as u64)))
        .collect())
}

fn c0_for(config: &Config) -> Result<f64, CliError> {
    let walk = config.walk()?;
    let cfg = rwrs_core::lab::ExperimentConfig {
        c0: config.walk.c0,
        ..rwrs_core::lab::ExperimentConfig::new(walk, SceneryModel::Iid(rwrs_core::scenery::IidLaw::rademacher()), 1)
    };
    Ok(cfg.resolve_c0(&cfg.sampler()?)?)
}

fn lln(config: &Config) -> Result<StatReport, CliError> {
    let c = config.lln.as_ref().ok_or_else(|| missing("lln"))?;
    let &n = c.n_grid.last().ok_or_else(|| CliError::Validation("lln.n_grid is empty".into()))?;
    if c.paths == 0 {
        return Err(CliError::Validation("lln.paths must be positive".into()));
    }
    let c0 = c0_for(config)?;
    let paths = walks(config, c.paths, n)?;
    let mut report = lln_table(&paths, &c.n_grid, c0, c.epsilon)?;
    for &[x, y] in &c.kernel_lags {
        let p = Site::new(x, y);
        let ratios: Moments = paths
            .iter()
            .map(|path| Ok(kernel_fourier_ratio(&occupation(path, 0..n)?, p)?))
            .collect::<Result<Vec<f64>, CliError>>()?
            .iter()
            .collect();
        report.push("kernel_ratio_mean", format!("p={x}:{y},n={n}"), ratios.mean(), Some(ratios.std_err()), c.paths as u64);
    }
    Ok(report.with_seed(config.seed()))
}

fn fclt(config: &Config) -> Result<StatReport, CliError> {
    let c = config.fclt.as_ref().ok_or_else(|| missing("fclt"))?;
    let mut cfg = config.experiment(c.n, c.replicates, c.omega_replicates)?;
    cfg.grid = c.grid.clone();
    cfg.normalization = c.normalization.into();
    let mut report = fclt_experiment(&cfg)?;
    if let Some(a) = c.cross_term_a {
        let c0 = cfg.resolve_c0(&cfg.sampler()?)?;
        let paths = walks(config, c.omega_replicates, c.n)?;
        let mut worst: f64 = 0.0;
        for (omega, path) in paths.iter().enumerate() {
            let cross = cross_term_diagnostic(path, a, Site::ORIGIN, c0)?;
            report.push("cross_term_ratio", format!("omega={omega}"), cross.ratio, None, 1);
            worst = worst.max(cross.ratio);
        }
        if let Some(max) = c.cross_term_max {
            report.verdict(Verdict::at_most("cross_term_ratio", worst, max, paths.len() as u64));
        }
    }
    Ok(report)
}

fn table_for(model: &SceneryModel) -> CorrelationTable {
    CorrelationTable::new(model, model.correlation_reach().map_or(DEFAULT_WINDOW, |r| r.min(DEFAULT_WINDOW)))
}

fn variance(config: &Config) -> Result<StatReport, CliError> {
    let c = config.variance.as_ref().ok_or_else(|| missing("variance"))?;
    let cfg = config.experiment(c.n, c.replicates, c.omega_replicates)?;
    cfg.validate()?;
    if c.replicates < 2 {
        return Err(CliError::Validation("variance.replicates must be at least 2".into()));
    }
    let c0 = cfg.resolve_c0(&cfg.sampler()?)?;
    let table = table_for(&cfg.model);
    let paths = walks(config, c.omega_replicates, c.n)?;
    let rows: Vec<(f64, f64, f64, f64)> = paths
        .par_iter()
        .enumerate()
        .map(|(omega, path)| -> Result<_, CliError> {
            let w = occupation(path, 0..c.n)?;
            let exact = variance_exact(&[(&w, 1.0)], &table);
            let sites = w.sorted_sites();
            let counts: Vec<f64> = sites.iter().map(|&l| w.get(l) as f64).collect();
            let plan = SceneryPlan::new(&cfg.model, &sites)?;
            let mut values = vec![0.0; sites.len()];
            let sums: Vec<f64> = (0..c.replicates)
                .map(|r| {
                    plan.fill(&mut cfg.scenery_stream(omega, r).rng(), &mut values);
                    counts.iter().zip(&values).map(|(a, b)| a * b).sum()
                })
                .collect();
            let (mc, se) = variance_with_se(&sums);
            Ok((exact.value, exact.error_bound, mc, se))
        })
        .collect::<Result<_, _>>()?;

    let nf = c.n as f64;
    let sigma2 = asymptotic_variance(&cfg.model, c0);
    let mut report = StatReport::new("variance").with_seed(config.seed());
    report.push("asymptotic_variance", "", sigma2.value, Some(sigma2.error_bound), 0);
    let reps = c.replicates as u64;
    for (omega, &(exact, bound, mc, se)) in rows.iter().enumerate() {
        let label = format!("omega={omega}");
        report.push("var_exact", &label, exact, Some(bound), 0);
        report.push("var_mc", &label, mc, Some(se), reps);
        report.push("var_exact_over_n_ln_n", &label, exact / (nf * nf.ln()), None, 0);
        report.verdict(Verdict::at_most(format!("var_agreement_{label}"), (mc - exact).abs(), 4.0 * se + bound, reps));
    }
    Ok(report)
}

fn cumulants(config: &Config) -> Result<StatReport, CliError> {
    let c = config.cumulants.as_ref().ok_or_else(|| missing("cumulants"))?;
    if c.n_grid.is_empty() || c.n_grid.windows(2).any(|w| w[0] >= w[1]) || c.paths == 0 {
        return Err(CliError::Validation("cumulants needs an increasing n_grid and paths > 0".into()));
    }
    let model = config.scenery()?;
    let mut report = StatReport::new("cumulants").with_seed(config.seed());

    // Bell numbers by the recursion B(m+1) = sum_k C(m,k) B(k)
    let mut bell = vec![1u64];
    for r in 1..=8usize {
        let m = r - 1;
        let mut binom = 1u64;
        let mut next = 0;
        for (k, b) in bell.iter().enumerate() {
            next += binom * b;
            binom = binom * (m - k) as u64 / (k as u64 + 1);
        }
        bell.push(next);
        let count = partitions(r)?.len() as u64;
        report.push("partition_count", format!("r={r}"), count as f64, None, 0);
        report.verdict(Verdict::within(format!("bell_r={r}"), count as f64, next as f64, next as f64, 0));
    }

    let &n_max = c.n_grid.last().expect("nonempty");
    let paths = walks(config, c.paths, n_max)?;
    let per_path: Vec<Vec<f64>> = paths
        .par_iter()
        .map(|p| {
            c.n_grid
                .iter()
                .map(|&n| Ok(leonov_statistic(&occupation(p, 0..n)?, &model, c.order)?))
                .collect::<Result<Vec<f64>, CliError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut means = Vec::new();
    for (gi, &n) in c.n_grid.iter().enumerate() {
        let m: Moments = per_path.iter().map(|row| row[gi]).collect();
        report.push("leonov_statistic", format!("r={},n={n}", c.order), m.mean(), Some(m.std_err()), c.paths as u64);
        means.push(m.mean().abs());
        let v: Moments = paths
            .iter()
            .map(|p| occupation(p, 0..n).map(|w| self_intersections(&w) as f64))
            .collect::<Result<Vec<f64>, _>>()?
            .iter()
            .collect();
        report.push("self_intersections_mean", format!("n={n}"), v.mean(), Some(v.std_err()), c.paths as u64);
    }
    // identically vanishing cumulants count as decreasing
    let decreasing = means.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0));
    report.verdict(Verdict::at_least(
        "leonov_decreasing",
        f64::from(u8::from(decreasing)),
        1.0,
        c.paths as u64,
    ));
    Ok(report)
}

fn maximal(config: &Config) -> Result<StatReport, CliError> {
    let c = config.maximal.as_ref().ok_or_else(|| missing("maximal"))?;
    let cfg = config.experiment(c.n, c.replicates, c.omega_replicates)?;
    let mut report = StatReport::new("maximal").with_seed(config.seed());
    report.merge("newman_wright", newman_wright_check(&cfg, c.lambda)?);
    if matches!(cfg.model, SceneryModel::Iid(_)) {
        let [b, k] = c.interval.unwrap_or([0, c.n]);
        report.merge("moricz", moricz_check(&cfg, b, k)?);
    } else {
        report.flag("moricz_skipped_non_iid");
    }
    Ok(report)
}

fn toral_verify(config: &Config) -> Result<StatReport, CliError> {
    let defaults = crate::config::ToralVerifyConfig {
        window: 12,
        correlation_radius: 5,
        samples: 20_000,
    };
    let c = config.toral_verify.as_ref().unwrap_or(&defaults);
    let (a1, a2) = config.matrices()?;
    let action_report = verify_action(&a1, &a2, c.window)?;
    let mut report = StatReport::new("toral_verify").with_seed(config.seed());
    report.push("rho", "", action_report.rho as f64, None, 0);
    report.push("commute", "", f64::from(u8::from(action_report.commute)), None, 0);
    for (i, d) in action_report.det.iter().enumerate() {
        report.push("det", format!("A{}", i + 1), d.to_string().parse::<f64>().unwrap_or(f64::NAN), None, 0);
    }
    report.push("window", "", f64::from(action_report.window), None, 0);
    report.push("min_log_modulus", "", action_report.min_log_modulus, None, 0);
    report.verdict(Verdict::at_least(
        "commute",
        f64::from(u8::from(action_report.commute)),
        1.0,
        0,
    ));

    if c.samples < 2 {
        return Err(CliError::Validation("toral_verify.samples must be at least 2".into()));
    }
    let model = config.scenery()?;
    let SceneryModel::Toral(toral) = &model else {
        return Err(CliError::Validation("toral-verify needs a toral [scenery]".into()));
    };
    if let Some(radius) = correlation_radius(&toral.action, &toral.observable) {
        report.push("correlation_radius", "", f64::from(radius), None, 0);
    } else {
        report.flag("correlation_radius_uncertified");
    }
    let mut sites: Vec<Site> = Site::window(c.correlation_radius).collect();
    sites.sort_unstable();
    let origin = sites.binary_search(&Site::ORIGIN).expect("window contains the origin");
    let plan = SceneryPlan::new(&model, &sites)?;
    let mut values = vec![0.0; sites.len()];
    let mut products = vec![Moments::new(); sites.len()];
    let mut rng = StreamId::new(config.seed(), lane::TORAL, 0).rng();
    for _ in 0..c.samples {
        plan.fill(&mut rng, &mut values);
        for (m, x) in products.iter_mut().zip(&values) {
            m.push(x * values[origin]);
        }
    }
    for (l, m) in sites.iter().zip(&products) {
        let label = format!("l={}:{}", l.x, l.y);
        let exact = toral_correlation(&toral.action, &toral.observable, *l);
        report.push("correlation_exact", &label, exact, None, 0);
        report.push("correlation_mc", &label, m.mean(), Some(m.std_err()), c.samples as u64);
        report.verdict(Verdict::at_most(
            format!("correlation_{label}"),
            (m.mean() - exact).abs(),
            4.0 * m.std_err(),
            c.samples as u64,
        ));
    }
    Ok(report)
}

fn c0(config: &Config) -> Result<StatReport, CliError> {
    let c = config.estimate_c0.as_ref().ok_or_else(|| missing("estimate_c0"))?;
    let walk = config.walk()?;
    let est = estimate_c0(&walk, &c.n_grid, c.paths_per_n, config.seed())?;
    let mut report = StatReport::new("estimate_c0").with_seed(config.seed());
    for &(n, mean, se) in &est.points {
        report.push("self_intersections_mean", format!("n={n}"), mean, Some(se), c.paths_per_n as u64);
    }
    let total = (c.paths_per_n * c.n_grid.len()) as u64;
    report.push("c0", "", est.value, Some(est.std_err), total);
    report.push("linear_coefficient", "", est.linear, None, total);
    if let Some(closed) = StepSampler::new(&walk)?.report().c0 {
        report.push("c0_closed_form", "", closed, None, 0);
    }
    report.verdict(Verdict::at_least("c0_positive", est.value, 0.0, total));
    Ok(report)
}
