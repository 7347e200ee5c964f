//! Sparse occupation fields and exact self-intersection combinatorics.
//!
//! For a path Z and an index interval J, the occupation field is
//! w(J, l) = #{i in J : Z_i = l}. Everything here is exact integer
//! arithmetic on these fields:
//!
//! * `intersections`: V(I, J, p) = sum_l w(I, l + p) w(J, l), the number of
//!   index pairs (u, v) in I x J with Z_u - Z_v = p;
//! * `power_sum`: U^(m) = sum_l w(l)^m (U^(1) = |J|, U^(2) = V);
//! * `quadruple_count`: sum_l w(l) w(l + l1) w(l + l2) w(l + l3).

use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::report::{StatReport, Verdict};
use crate::walk::WalkPath;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use std::collections::BTreeMap;
use std::ops::Range;

/// Visit counts of a path over an index interval.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OccupationField {
    interval: Range<usize>,
    counts: FxHashMap<u64, u32>,
}

impl OccupationField {
    /// A synthetic field with explicit counts over the interval `[0, total)`.
    pub fn from_counts(counts: impl IntoIterator<Item = (Site, u32)>) -> Self {
        let mut map = FxHashMap::default();
        let mut total = 0usize;
        for (s, c) in counts {
            if c > 0 {
                *map.entry(s.key()).or_insert(0) += c;
                total += c as usize;
            }
        }
        OccupationField {
            interval: 0..total,
            counts: map,
        }
    }

    pub fn interval(&self) -> Range<usize> {
        self.interval.clone()
    }

    /// Interval length k; equals the total mass of the field.
    pub fn len(&self) -> usize {
        self.interval.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interval.is_empty()
    }

    /// Number of distinct visited sites.
    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn get(&self, site: Site) -> u32 {
        self.counts.get(&site.key()).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Site, u32)> + '_ {
        self.counts.iter().map(|(&k, &c)| (Site::from_key(k), c))
    }

    /// Visited sites in sorted order.
    pub fn sorted_sites(&self) -> Vec<Site> {
        let mut v: Vec<Site> = self.counts.keys().map(|&k| Site::from_key(k)).collect();
        v.sort_unstable();
        v
    }

    pub fn max_count(&self) -> u32 {
        self.counts.values().copied().max().unwrap_or(0)
    }

    /// Extends the interval's right end to `end`, adding the new visits.
    pub fn extend_to(&mut self, path: &WalkPath, end: usize) -> Result<()> {
        if end < self.interval.end || end > path.len() {
            return Err(Error::IntervalOutOfRange {
                start: self.interval.start,
                end,
                len: path.len(),
            });
        }
        for &z in &path.positions()[self.interval.end..end] {
            *self.counts.entry(z.key()).or_insert(0) += 1;
        }
        self.interval.end = end;
        Ok(())
    }
}

/// Occupation field of `path` over the index interval `[b, b + k)`.
pub fn occupation(path: &WalkPath, interval: Range<usize>) -> Result<OccupationField> {
    if interval.start > interval.end || interval.end > path.len() {
        return Err(Error::IntervalOutOfRange {
            start: interval.start,
            end: interval.end,
            len: path.len(),
        });
    }
    let mut counts = FxHashMap::default();
    counts.reserve(interval.len() / 4);
    for &z in &path.positions()[interval.clone()] {
        *counts.entry(z.key()).or_insert(0u32) += 1;
    }
    Ok(OccupationField { interval, counts })
}

/// V(I, J, p) = sum_l w_I(l + p) w_J(l), iterating the smaller support.
pub fn intersections(w_i: &OccupationField, w_j: &OccupationField, p: Site) -> u64 {
    if w_j.support_len() <= w_i.support_len() {
        w_j.iter()
            .map(|(l, c)| c as u64 * w_i.get(l + p) as u64)
            .sum()
    } else {
        w_i.iter()
            .map(|(l, c)| c as u64 * w_j.get(l - p) as u64)
            .sum()
    }
}

/// V(J) = sum_l w(J, l)², the self-intersection count.
pub fn self_intersections(w: &OccupationField) -> u64 {
    w.counts.values().map(|&c| c as u64 * c as u64).sum()
}

/// U^(m) = sum_l w(l)^m.
pub fn power_sum(w: &OccupationField, m: u32) -> u128 {
    assert!(m >= 1, "power_sum needs m >= 1");
    w.counts.values().map(|&c| (c as u128).pow(m)).sum()
}

/// sum_l w(l) w(l + l1) w(l + l2) w(l + l3), the number of index quadruples
/// (i0, i1, i2, i3) with Z_{ij} - Z_{i0} = lj.
pub fn quadruple_count(w: &OccupationField, l1: Site, l2: Site, l3: Site) -> u128 {
    w.iter()
        .map(|(l, c)| {
            let a = w.get(l + l1);
            if a == 0 {
                return 0;
            }
            let b = w.get(l + l2);
            if b == 0 {
                return 0;
            }
            c as u128 * a as u128 * b as u128 * w.get(l + l3) as u128
        })
        .sum()
}

/// V(I, p) / V(I, 0): the p-th Fourier coefficient of the normalized kernel
/// of the field. Ratios near 1 for small p indicate delta-0 regularity.
pub fn kernel_fourier_ratio(w: &OccupationField, p: Site) -> Result<f64> {
    let v0 = self_intersections(w);
    if v0 == 0 {
        return Err(Error::EmptyField);
    }
    Ok(intersections(w, w, p) as f64 / v0 as f64)
}

/// V(I, J, p) for all |p| <= radius.
#[derive(Clone, Debug, PartialEq)]
pub struct IntersectionTable {
    pub radius: u32,
    pub entries: BTreeMap<Site, u64>,
}

impl IntersectionTable {
    pub fn new(w_i: &OccupationField, w_j: &OccupationField, radius: u32) -> Self {
        let entries = Site::window(radius)
            .map(|p| (p, intersections(w_i, w_j, p)))
            .collect();
        IntersectionTable { radius, entries }
    }

    pub fn get(&self, p: Site) -> Option<u64> {
        self.entries.get(&p).copied()
    }
}

/// Per-path statistics at one prefix length.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixStats {
    pub n: usize,
    pub v: u64,
    pub max_count: u32,
    pub u3: u128,
    pub u4: u128,
}

fn prefix_stats(path: &WalkPath, n_grid: &[usize]) -> Result<Vec<PrefixStats>> {
    let mut w = occupation(path, 0..0)?;
    n_grid
        .iter()
        .map(|&n| {
            w.extend_to(path, n)?;
            Ok(PrefixStats {
                n,
                v: self_intersections(&w),
                max_count: w.max_count(),
                u3: power_sum(&w, 3),
                u4: power_sum(&w, 4),
            })
        })
        .collect()
}

/// Law-of-large-numbers diagnostics for self-intersections along an
/// increasing grid of prefix lengths.
///
/// Per n: the ensemble of V_n / (C0 n ln n), sup_l w_n(l) / n^eps and
/// U^(m) / (n (ln n)^(m+1)) for m = 3, 4. Verdicts: V_n nondecreasing for
/// every path, ensemble mean of the V ratio within [0.75, 1.25] at the last
/// n, sup w_n < n^eps on all paths at the last n, and the share of paths
/// whose V ratio is closer to 1 at the last n than at the first.
pub fn lln_table(paths: &[WalkPath], n_grid: &[usize], c0: f64, epsilon: f64) -> Result<StatReport> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n-grid must be strictly increasing".into()));
    }
    if n_grid[0] < 2 {
        return Err(Error::InvalidParameter("n-grid values must be >= 2".into()));
    }
    let stats: Vec<Vec<PrefixStats>> = paths
        .par_iter()
        .map(|p| prefix_stats(p, n_grid))
        .collect::<Result<_>>()?;

    let mut report = StatReport::new("lln");
    let reps = paths.len() as u64;
    let ratio = |s: &PrefixStats| {
        let n = s.n as f64;
        s.v as f64 / (c0 * n * n.ln())
    };
    for (gi, &n) in n_grid.iter().enumerate() {
        let nf = n as f64;
        let ln = nf.ln();
        let label = format!("n={n}");
        let col = |f: &dyn Fn(&PrefixStats) -> f64| -> crate::stats::Moments {
            stats.iter().map(|s| f(&s[gi])).collect()
        };
        let v = col(&ratio);
        report.push("v_ratio_mean", &label, v.mean(), Some(v.std_err()), reps);
        let sup = col(&|s| s.max_count as f64 / nf.powf(epsilon));
        report.push("sup_w_over_n_eps_mean", &label, sup.mean(), Some(sup.std_err()), reps);
        let u3 = col(&|s| s.u3 as f64 / (nf * ln.powi(4)));
        report.push("u3_ratio_mean", &label, u3.mean(), Some(u3.std_err()), reps);
        let u4 = col(&|s| s.u4 as f64 / (nf * ln.powi(5)));
        report.push("u4_ratio_mean", &label, u4.mean(), Some(u4.std_err()), reps);
        for (pi, s) in stats.iter().enumerate() {
            report.push("v_ratio", format!("path={pi},n={n}"), ratio(&s[gi]), None, 1);
        }
    }

    let monotone = stats.iter().all(|s| s.windows(2).all(|w| w[0].v <= w[1].v));
    report.verdict(Verdict::at_least(
        "v_nondecreasing",
        if monotone { 1.0 } else { 0.0 },
        1.0,
        reps,
    ));
    let last = n_grid.len() - 1;
    let n_last = n_grid[last] as f64;
    let mean_last: f64 = stats.iter().map(|s| ratio(&s[last])).sum::<f64>() / reps as f64;
    report.verdict(Verdict::within("v_ratio_mean_last", mean_last, 0.75, 1.25, reps));
    let sup_max = stats
        .iter()
        .map(|s| s[last].max_count as f64 / n_last.powf(epsilon))
        .fold(0.0, f64::max);
    report.verdict(Verdict::at_most("sup_w_below_n_eps", sup_max, 1.0, reps));
    if n_grid.len() >= 2 {
        let toward = stats
            .iter()
            .filter(|s| (ratio(&s[last]) - 1.0).abs() <= (ratio(&s[0]) - 1.0).abs())
            .count();
        let share = toward as f64 / reps as f64;
        report.push("share_toward_one", "", share, None, reps);
        report.verdict(Verdict::at_least("share_toward_one", share, 0.8, reps));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{lane, StreamId};
    use crate::walk::{sample_path, StepDistribution, StepSampler};

    fn constant_path(n: usize) -> WalkPath {
        WalkPath::from_positions(vec![Site::ORIGIN; n])
    }

    fn line_path(n: usize) -> WalkPath {
        WalkPath::from_positions((0..n as i32).map(|k| Site::new(k, 0)).collect())
    }

    fn ssrw_path(n: usize, idx: u64) -> WalkPath {
        let s = StepSampler::new(&StepDistribution::simple_symmetric()).unwrap();
        sample_path(&s, n, StreamId::new(5, lane::WALK, idx))
    }

    #[test]
    fn occupation_trivial_cases() {
        let w = occupation(&constant_path(10), 0..10).unwrap();
        assert_eq!(w.get(Site::ORIGIN), 10);
        assert_eq!(w.support_len(), 1);
        let w = occupation(&line_path(7), 0..7).unwrap();
        assert_eq!(w.support_len(), 7);
        assert!(w.iter().all(|(_, c)| c == 1));
        assert!(occupation(&line_path(7), 3..8).is_err());
    }

    #[test]
    fn occupation_mass_and_shift() {
        let p = ssrw_path(2000, 0);
        for (b, k) in [(0, 2001), (17, 500), (1000, 1001), (300, 0)] {
            let w = occupation(&p, b..b + k).unwrap();
            assert_eq!(w.iter().map(|(_, c)| c as usize).sum::<usize>(), k);
            let r = occupation(&p.rebased(b), 0..k).unwrap();
            let shifted: BTreeMap<Site, u32> =
                w.iter().map(|(l, c)| (l - p.positions()[b], c)).collect();
            let direct: BTreeMap<Site, u32> = r.iter().collect();
            assert_eq!(shifted, direct);
            assert_eq!(self_intersections(&w), self_intersections(&r));
        }
    }

    #[test]
    fn intersections_trivial_cases() {
        let w = occupation(&constant_path(9), 0..9).unwrap();
        assert_eq!(intersections(&w, &w, Site::ORIGIN), 81);
        assert_eq!(intersections(&w, &w, Site::new(1, 0)), 0);
        assert_eq!(power_sum(&w, 1), 9);
        assert_eq!(power_sum(&w, 4), 9u128.pow(4));
        assert_eq!(kernel_fourier_ratio(&w, Site::ORIGIN).unwrap(), 1.0);
        assert_eq!(kernel_fourier_ratio(&w, Site::new(0, 1)).unwrap(), 0.0);
        assert_eq!(
            kernel_fourier_ratio(&OccupationField::default(), Site::ORIGIN),
            Err(Error::EmptyField)
        );
    }

    #[test]
    fn quadruple_count_on_a_line() {
        let n = 40;
        let w = occupation(&line_path(n), 0..n).unwrap();
        let q = quadruple_count(&w, Site::new(1, 0), Site::new(2, 0), Site::new(3, 0));
        assert_eq!(q, (n - 3) as u128);
    }

    #[test]
    fn intersection_symmetry_and_superadditivity() {
        let p = ssrw_path(3000, 1);
        let a = occupation(&p, 0..1200).unwrap();
        let b = occupation(&p, 1200..3001).unwrap();
        let ab = occupation(&p, 0..3001).unwrap();
        for q in Site::window(3) {
            assert_eq!(intersections(&a, &b, q), intersections(&b, &a, -q));
            let cross = intersections(&a, &b, q) + intersections(&b, &a, q);
            assert_eq!(
                intersections(&ab, &ab, q),
                intersections(&a, &a, q) + intersections(&b, &b, q) + cross
            );
        }
        assert!(self_intersections(&a) + self_intersections(&b) <= self_intersections(&ab));
        let t = IntersectionTable::new(&a, &b, 2);
        assert_eq!(t.entries.len(), 25);
        assert_eq!(t.get(Site::new(1, -1)), Some(intersections(&a, &b, Site::new(1, -1))));
    }

    #[test]
    fn lln_rejects_bad_grid() {
        let p = vec![ssrw_path(100, 0)];
        assert!(lln_table(&p, &[50, 20], 0.6, 0.25).is_err());
        assert!(lln_table(&p, &[], 0.6, 0.25).is_err());
    }

    #[test]
    fn lln_table_v_column_nondecreasing() {
        let paths: Vec<WalkPath> = (0..4).map(|i| ssrw_path(20_000, i)).collect();
        let r = lln_table(&paths, &[1000, 5000, 20_000], 2.0 / std::f64::consts::PI, 0.25).unwrap();
        assert!(r.find_verdict("v_nondecreasing").unwrap().passed);
        assert!(r.find("v_ratio_mean", "n=20000").is_some());
        assert!(r.find("v_ratio", "path=3,n=1000").is_some());
    }
}
