//! The Leonov statistic sum w(l_1)..w(l_r) C(l_1..l_r) / V^(r/2).

use super::partitions::joint_cumulant;
use super::toral::ToralMoments;
use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::occupation::{power_sum, OccupationField};
use crate::scenery::{correlation_radius, MovingAverage, SceneryModel, ToralModel};
use std::cell::RefCell;
use std::collections::BTreeMap;

/// Largest number of offset tuples examined by [`toral_cumulant_range`].
pub const MAX_RANGE_TUPLES: u64 = 2_000_000;

/// Nonzero joint cumulants C(0, d_2, .., d_r) of a toral observable for all
/// offsets within the horizon. Every tuple whose pairwise gaps are at most
/// `horizon` has been evaluated; `m_r` is the largest gap among the nonzero
/// ones, so cumulants vanish on gaps in (m_r, horizon].
#[derive(Clone, Debug)]
pub struct CumulantRange {
    pub r: usize,
    pub horizon: u32,
    pub m_r: u32,
    entries: Vec<(Vec<Site>, f64)>,
}

impl CumulantRange {
    /// Whether the zero shell (m_r, horizon] is nonempty.
    pub fn certified(&self) -> bool {
        self.m_r < self.horizon
    }

    pub fn entries(&self) -> &[(Vec<Site>, f64)] {
        &self.entries
    }

    /// The cumulant at offsets (d_2, .., d_r) from the first site.
    pub fn get(&self, offsets: &[Site]) -> f64 {
        self.entries
            .iter()
            .find(|(d, _)| d.as_slice() == offsets)
            .map_or(0.0, |(_, c)| *c)
    }
}

fn max_gap(offsets: &[Site]) -> u32 {
    let mut g = offsets.iter().map(|d| d.norm_inf()).max().unwrap_or(0);
    for (i, &a) in offsets.iter().enumerate() {
        for &b in &offsets[..i] {
            g = g.max((a - b).norm_inf());
        }
    }
    g
}

/// Evaluates the joint cumulants of (T^{l_1} f, .., T^{l_r} f) on every
/// tuple with l_1 = 0 and the other sites within `horizon`.
pub fn toral_cumulant_range(model: &ToralModel, r: usize, horizon: u32) -> Result<CumulantRange> {
    if r < 2 {
        return Err(Error::InvalidParameter(format!("cumulant order must be >= 2, got {r}")));
    }
    let side = (2 * horizon as u64 + 1).pow(2);
    let count = side.checked_pow(r as u32 - 1).unwrap_or(u64::MAX);
    if count > MAX_RANGE_TUPLES {
        return Err(Error::Unsupported(format!(
            "{count} offset tuples exceed the budget of {MAX_RANGE_TUPLES}"
        )));
    }
    let engine = RefCell::new(ToralMoments::new(&model.action, &model.observable)?);
    let tol = 1e-12 * model.observable.norm_c().powi(r as i32).max(1.0);
    let window: Vec<Site> = Site::window(horizon).collect();
    let mut entries = Vec::new();
    let mut m_r = 0;
    let mut idx = vec![0usize; r - 1];
    loop {
        let offsets: Vec<Site> = idx.iter().map(|&i| window[i]).collect();
        let sites: Vec<Site> = std::iter::once(Site::ORIGIN).chain(offsets.iter().copied()).collect();
        let failure = RefCell::new(None);
        let oracle = |subset: &[usize]| {
            let chosen: Vec<Site> = subset.iter().map(|&i| sites[i]).collect();
            engine.borrow_mut().moment(&chosen).unwrap_or_else(|e| {
                *failure.borrow_mut() = Some(e);
                0.0
            })
        };
        let c = joint_cumulant(&oracle, r)?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        if c.abs() > tol {
            m_r = m_r.max(max_gap(&offsets));
            entries.push((offsets, c));
        }
        // odometer over window^(r-1)
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok(CumulantRange {
                    r,
                    horizon,
                    m_r,
                    entries,
                });
            }
            idx[pos] += 1;
            if idx[pos] < window.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn ma_statistic(w: &OccupationField, ma: &MovingAverage, r: usize) -> f64 {
    // C(l_1..l_r) = kappa_r sum_u prod_j a_{l_j - u}, so the weighted sum is
    // kappa_r sum_u b(u)^r with b(u) = sum_q a_q w(u + q).
    let mut b: BTreeMap<Site, f64> = BTreeMap::new();
    for l in w.sorted_sites() {
        let c = w.get(l) as f64;
        for (&q, &a) in ma.coeffs() {
            *b.entry(l - q).or_insert(0.0) += a * c;
        }
    }
    ma.base().cumulant(r as u32) * b.values().map(|v| v.powi(r as i32)).sum::<f64>()
}

fn toral_statistic(w: &OccupationField, range: &CumulantRange) -> f64 {
    let sites = w.sorted_sites();
    sites
        .iter()
        .map(|&l| {
            let w1 = w.get(l) as f64;
            w1 * range
                .entries
                .iter()
                .map(|(offsets, c)| c * offsets.iter().map(|&d| w.get(l + d) as f64).product::<f64>())
                .sum::<f64>()
        })
        .sum()
}

/// Horizon used by [`leonov_statistic`] for toral models.
pub fn default_horizon(model: &ToralModel, r: usize) -> u32 {
    let reach = correlation_radius(&model.action, &model.observable).unwrap_or(4);
    let mut h = 2 * reach + 2;
    while h > 1 && (2 * h as u64 + 1).pow(2 * (r as u32 - 1)) > MAX_RANGE_TUPLES {
        h -= 1;
    }
    h
}

/// sum_{l_1..l_r} w(l_1)..w(l_r) C(l_1..l_r) / (sum w²)^(r/2).
///
/// IID sceneries give kappa_r U^(r) / V^(r/2) exactly; moving averages use
/// the same closed form on the filtered weights; toral observables sum the
/// finite-range cumulant table of [`toral_cumulant_range`].
pub fn leonov_statistic(w: &OccupationField, model: &SceneryModel, r: usize) -> Result<f64> {
    if r < 3 {
        return Err(Error::InvalidParameter(format!("Leonov statistic needs r >= 3, got {r}")));
    }
    if w.is_empty() {
        return Err(Error::EmptyField);
    }
    let v = power_sum(w, 2) as f64;
    let numerator = match model {
        SceneryModel::Iid(law) => law.cumulant(r as u32) * power_sum(w, r as u32) as f64,
        SceneryModel::MovingAverage(ma) => ma_statistic(w, ma, r),
        SceneryModel::Toral(t) => {
            let range = toral_cumulant_range(t, r, default_horizon(t, r))?;
            toral_statistic(w, &range)
        }
    };
    Ok(numerator / v.powf(r as f64 / 2.0))
}
