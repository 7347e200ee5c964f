//! Two-dimensional lattice random walks: step laws, their exact moments,
//! aperiodicity, the self-intersection constant C0, and path sampling.

use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::rng::StreamId;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// One atom of a step law.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub step: Site,
    pub prob: BigRational,
}

/// Law of the i.i.d. increments of a walk, with exact rational probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDistribution {
    atoms: Vec<Atom>,
}

/// Parses `"num/den"` or an integer into an exact rational.
pub fn parse_probability(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::BadProbabilities(format!("cannot parse probability {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

impl StepDistribution {
    pub fn new(atoms: Vec<(Site, BigRational)>) -> Self {
        StepDistribution {
            atoms: atoms
                .into_iter()
                .map(|(step, prob)| Atom { step, prob })
                .collect(),
        }
    }

    /// Builds a law from `(step, "num/den")` pairs.
    pub fn parse(atoms: &[(Site, &str)]) -> Result<Self> {
        let atoms = atoms
            .iter()
            .map(|&(s, p)| parse_probability(p).map(|p| (s, p)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(atoms))
    }

    /// Uniform law on a list of steps.
    pub fn uniform(steps: &[Site]) -> Self {
        let p = BigRational::new(BigInt::one(), BigInt::from(steps.len().max(1)));
        Self::new(steps.iter().map(|&s| (s, p.clone())).collect())
    }

    /// Simple symmetric nearest-neighbour walk.
    pub fn simple_symmetric() -> Self {
        Self::uniform(&[
            Site::new(1, 0),
            Site::new(-1, 0),
            Site::new(0, 1),
            Site::new(0, -1),
        ])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
}

/// Exact moments and lattice properties of a validated step law.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionReport {
    pub mean: [BigRational; 2],
    pub covariance: [[BigRational; 2]; 2],
    /// Index of the subgroup generated by the support (0 when it has rank < 2).
    pub support_index: u64,
    pub aperiodic: bool,
    pub strongly_aperiodic: bool,
    pub c0: Option<f64>,
}

impl DistributionReport {
    pub fn det_covariance(&self) -> BigRational {
        let c = &self.covariance;
        &c[0][0] * &c[1][1] - &c[0][1] * &c[1][0]
    }

    pub fn is_centered(&self) -> bool {
        self.mean.iter().all(Zero::is_zero)
    }

    pub fn covariance_f64(&self) -> [[f64; 2]; 2] {
        let f = |q: &BigRational| q.to_f64().unwrap_or(f64::NAN);
        [
            [f(&self.covariance[0][0]), f(&self.covariance[0][1])],
            [f(&self.covariance[1][0]), f(&self.covariance[1][1])],
        ]
    }
}

fn det2(a: Site, b: Site) -> i64 {
    a.x as i64 * b.y as i64 - a.y as i64 * b.x as i64
}

/// Index in Z² of the subgroup generated by `gens`, or 0 if it has rank < 2.
///
/// The index equals the gcd of all 2x2 minors of the generator matrix
/// (product of its Smith invariant factors).
pub fn subgroup_index(gens: &[Site]) -> u64 {
    let mut g: i64 = 0;
    for (i, &a) in gens.iter().enumerate() {
        for &b in &gens[i + 1..] {
            g = g.gcd(&det2(a, b));
            if g == 1 {
                return 1;
            }
        }
    }
    g.unsigned_abs()
}

/// Validates a step law and computes its exact mean, covariance and lattice
/// properties.
pub fn validate_distribution(d: &StepDistribution) -> Result<DistributionReport> {
    if d.atoms.is_empty() {
        return Err(Error::Degenerate("no atoms".into()));
    }
    if let Some(a) = d.atoms.iter().find(|a| !a.prob.is_positive()) {
        return Err(Error::BadProbabilities(format!(
            "non-positive probability {} at {}",
            a.prob, a.step
        )));
    }
    let total: BigRational = d.atoms.iter().map(|a| a.prob.clone()).sum();
    if !total.is_one() {
        return Err(Error::BadProbabilities(total.to_string()));
    }
    if d.atoms.iter().all(|a| a.step == Site::ORIGIN) {
        return Err(Error::Degenerate("single atom at the origin".into()));
    }

    let q = |v: i32| BigRational::from_integer(BigInt::from(v));
    let mut mean = [BigRational::zero(), BigRational::zero()];
    let mut second = [
        [BigRational::zero(), BigRational::zero()],
        [BigRational::zero(), BigRational::zero()],
    ];
    for a in &d.atoms {
        let v = [q(a.step.x), q(a.step.y)];
        for i in 0..2 {
            mean[i] += &a.prob * &v[i];
            for j in 0..2 {
                second[i][j] += &a.prob * &v[i] * &v[j];
            }
        }
    }
    let mut covariance = second.clone();
    for i in 0..2 {
        for j in 0..2 {
            covariance[i][j] = &second[i][j] - &mean[i] * &mean[j];
        }
    }

    let support: Vec<Site> = d.atoms.iter().map(|a| a.step).collect();
    let support_index = subgroup_index(&support);
    let aperiodic = support_index == 1;
    // The subgroup generated by x + support is Z² for every x iff the
    // differences of support points generate Z².
    let base = support[0];
    let diffs: Vec<Site> = support[1..].iter().map(|&s| s - base).collect();
    let strongly_aperiodic = aperiodic && subgroup_index(&diffs) == 1;

    let mut report = DistributionReport {
        mean,
        covariance,
        support_index,
        aperiodic,
        strongly_aperiodic,
        c0: None,
    };
    let det = report.det_covariance();
    if strongly_aperiodic && report.is_centered() && det.is_positive() {
        report.c0 = Some(c0_from_det(det.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(report)
}

fn c0_from_det(det: f64) -> f64 {
    1.0 / (std::f64::consts::PI * det.sqrt())
}

/// The constant C0 = (pi sqrt(det Sigma))^-1 governing E V_n ~ C0 n ln n.
pub fn c0_constant(report: &DistributionReport) -> Result<f64> {
    if !report.strongly_aperiodic {
        return Err(Error::EmpiricalC0Required);
    }
    if !report.is_centered() {
        return Err(Error::InvalidParameter("walk is not centered".into()));
    }
    let det = report.det_covariance();
    if !det.is_positive() {
        return Err(Error::InvalidParameter("covariance is singular".into()));
    }
    Ok(c0_from_det(det.to_f64().unwrap_or(f64::NAN)))
}

/// A validated step law prepared for sampling.
///
/// Probabilities are converted to a floating-point cumulative table; each
/// entry is within one ulp of the exact partial sum.
#[derive(Clone, Debug)]
pub struct StepSampler {
    steps: Vec<Site>,
    cumulative: Vec<f64>,
    report: DistributionReport,
}

impl StepSampler {
    pub fn new(d: &StepDistribution) -> Result<Self> {
        let report = validate_distribution(d)?;
        let mut acc = BigRational::zero();
        let mut cumulative = Vec::with_capacity(d.atoms.len());
        for a in &d.atoms {
            acc += &a.prob;
            cumulative.push(acc.to_f64().unwrap_or(1.0));
        }
        *cumulative.last_mut().expect("validated law has atoms") = 1.0;
        Ok(StepSampler {
            steps: d.atoms.iter().map(|a| a.step).collect(),
            cumulative,
            report,
        })
    }

    pub fn report(&self) -> &DistributionReport {
        &self.report
    }

    pub fn steps(&self) -> &[Site] {
        &self.steps
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Site {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.steps[i.min(self.steps.len() - 1)]
    }
}

/// A sampled trajectory Z_0 = 0, Z_1, ..., Z_n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkPath {
    positions: Vec<Site>,
    pub stream: Option<StreamId>,
}

impl WalkPath {
    /// Wraps an explicit trajectory (synthetic inputs, tests).
    pub fn from_positions(positions: Vec<Site>) -> Self {
        WalkPath {
            positions,
            stream: None,
        }
    }

    pub fn positions(&self) -> &[Site] {
        &self.positions
    }

    /// Number of positions, n + 1 for a walk of n steps.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// The path seen from time `b`: positions Z_{b+i} - Z_b.
    pub fn rebased(&self, b: usize) -> WalkPath {
        let base = self.positions[b];
        WalkPath {
            positions: self.positions[b..].iter().map(|&z| z - base).collect(),
            stream: None,
        }
    }
}

/// Samples Z_0..Z_n; deterministic given the law, `n` and the stream.
pub fn sample_path(sampler: &StepSampler, n: usize, stream: StreamId) -> WalkPath {
    let mut rng = stream.rng();
    let mut positions = Vec::with_capacity(n + 1);
    let mut z = Site::ORIGIN;
    positions.push(z);
    for _ in 0..n {
        z = z + sampler.draw(&mut rng);
        positions.push(z);
    }
    WalkPath {
        positions,
        stream: Some(stream),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::lane;
    use std::collections::{HashMap, HashSet, VecDeque};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Strongly aperiodic law with covariance diag(1/2, 1/2): 1/4 at the origin,
    /// 1/8 on each nearest neighbour and 1/16 on each diagonal.
    pub(crate) fn lazy_king() -> StepDistribution {
        let mut atoms = vec![(Site::ORIGIN, "1/4")];
        for s in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            atoms.push((s.into(), "1/8"));
        }
        for s in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            atoms.push((s.into(), "1/16"));
        }
        StepDistribution::parse(&atoms).unwrap()
    }

    #[test]
    fn ssrw_moments() {
        let r = validate_distribution(&StepDistribution::simple_symmetric()).unwrap();
        assert!(r.is_centered());
        assert_eq!(r.covariance[0][0], rat(1, 2));
        assert_eq!(r.covariance[1][1], rat(1, 2));
        assert!(r.covariance[0][1].is_zero());
        assert!(r.aperiodic);
        // nearest-neighbour steps all have odd parity
        assert!(!r.strongly_aperiodic);
        assert_eq!(r.c0, None);
        assert_eq!(c0_constant(&r), Err(Error::EmpiricalC0Required));
    }

    #[test]
    fn degenerate_and_bad_probabilities() {
        let d = StepDistribution::parse(&[(Site::ORIGIN, "1")]).unwrap();
        assert!(matches!(validate_distribution(&d), Err(Error::Degenerate(_))));
        let d = StepDistribution::parse(&[(Site::new(1, 0), "1/2"), (Site::new(0, 1), "1/3")]).unwrap();
        assert!(matches!(validate_distribution(&d), Err(Error::BadProbabilities(_))));
        let d = StepDistribution::parse(&[(Site::new(1, 0), "3/2"), (Site::new(0, 1), "-1/2")]).unwrap();
        assert!(matches!(validate_distribution(&d), Err(Error::BadProbabilities(_))));
        assert!(parse_probability("1/0").is_err());
        assert!(parse_probability("x").is_err());
    }

    #[test]
    fn even_lattice_is_periodic() {
        let d = StepDistribution::uniform(&[
            Site::new(2, 0),
            Site::new(-2, 0),
            Site::new(0, 2),
            Site::new(0, -2),
        ]);
        let r = validate_distribution(&d).unwrap();
        assert!(!r.aperiodic);
        assert_eq!(r.support_index, 4);
    }

    #[test]
    fn c0_values() {
        let r = validate_distribution(&lazy_king()).unwrap();
        assert!(r.strongly_aperiodic);
        assert_eq!(r.covariance[0][0], rat(1, 2));
        assert_eq!(r.covariance[1][1], rat(1, 2));
        let c0 = c0_constant(&r).unwrap();
        assert!((c0 - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(r.c0, Some(c0));

        let d = StepDistribution::parse(&[(Site::new(1, 0), "1"), (Site::new(0, 1), "0")]).unwrap();
        assert!(matches!(validate_distribution(&d), Err(Error::BadProbabilities(_))));
    }

    #[test]
    fn c0_identity_covariance() {
        let r = DistributionReport {
            mean: [BigRational::zero(), BigRational::zero()],
            covariance: [
                [BigRational::one(), BigRational::zero()],
                [BigRational::zero(), BigRational::one()],
            ],
            support_index: 1,
            aperiodic: true,
            strongly_aperiodic: true,
            c0: None,
        };
        assert!((c0_constant(&r).unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn doubled_steps_halve_c0() {
        // det(2 Sigma) = 4 det Sigma for 2x2 matrices, so C0 halves.
        let r = validate_distribution(&lazy_king()).unwrap();
        let mut scaled = r.clone();
        for i in 0..2 {
            for j in 0..2 {
                scaled.covariance[i][j] = &r.covariance[i][j] * rat(2, 1);
            }
        }
        assert_eq!(scaled.det_covariance(), r.det_covariance() * rat(4, 1));
        let c = c0_constant(&r).unwrap();
        let c2 = c0_constant(&scaled).unwrap();
        assert_eq!(c2, c / 2.0);
    }

    #[test]
    fn paths_trivial_cases() {
        let ssrw = StepSampler::new(&StepDistribution::simple_symmetric()).unwrap();
        let p = sample_path(&ssrw, 0, StreamId::new(1, lane::WALK, 0));
        assert_eq!(p.positions(), &[Site::ORIGIN]);

        let det = StepSampler::new(&StepDistribution::parse(&[(Site::new(1, 0), "1")]).unwrap()).unwrap();
        let p = sample_path(&det, 5, StreamId::new(1, lane::WALK, 0));
        let expect: Vec<Site> = (0..=5).map(|k| Site::new(k, 0)).collect();
        assert_eq!(p.positions(), expect.as_slice());
    }

    #[test]
    fn paths_are_deterministic_with_valid_increments() {
        let ssrw = StepSampler::new(&StepDistribution::simple_symmetric()).unwrap();
        let s = StreamId::new(42, lane::WALK, 9);
        let a = sample_path(&ssrw, 1000, s);
        let b = sample_path(&ssrw, 1000, s);
        assert_eq!(a, b);
        assert_eq!(a.positions()[0], Site::ORIGIN);
        let support: HashSet<Site> = ssrw.steps().iter().copied().collect();
        for w in a.positions().windows(2) {
            assert!(support.contains(&(w[1] - w[0])));
        }
    }

    #[test]
    fn increment_frequencies_chi_square() {
        // 99th percentile of chi-square with 8 degrees of freedom
        const CHI2_8_99: f64 = 20.090;
        let d = lazy_king();
        let sampler = StepSampler::new(&d).unwrap();
        let n = 100_000;
        let p = sample_path(&sampler, n, StreamId::new(3, lane::WALK, 0));
        let mut counts: HashMap<Site, u64> = HashMap::new();
        for w in p.positions().windows(2) {
            *counts.entry(w[1] - w[0]).or_default() += 1;
        }
        let chi2: f64 = d
            .atoms()
            .iter()
            .map(|a| {
                let e = a.prob.to_f64().unwrap() * n as f64;
                let o = *counts.get(&a.step).unwrap_or(&0) as f64;
                (o - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < CHI2_8_99, "chi2 = {chi2}");
    }

    #[test]
    fn endpoint_covariance_matches_sigma() {
        let sampler = StepSampler::new(&StepDistribution::simple_symmetric()).unwrap();
        let (n, reps) = (10_000usize, 1000u64);
        let ends: Vec<(f64, f64)> = (0..reps)
            .map(|r| {
                let p = sample_path(&sampler, n, StreamId::new(11, lane::WALK, r));
                let z = p.positions()[n];
                (z.x as f64 / (n as f64).sqrt(), z.y as f64 / (n as f64).sqrt())
            })
            .collect();
        let m = reps as f64;
        let xx: Vec<f64> = ends.iter().map(|e| e.0 * e.0).collect();
        let yy: Vec<f64> = ends.iter().map(|e| e.1 * e.1).collect();
        let xy: Vec<f64> = ends.iter().map(|e| e.0 * e.1).collect();
        for (vals, target) in [(xx, 0.5), (yy, 0.5), (xy, 0.0)] {
            let mean = vals.iter().sum::<f64>() / m;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let se = (var / m).sqrt();
            assert!((mean - target).abs() < 3.0 * se, "mean {mean} target {target} se {se}");
        }
    }

    /// Subgroup closure by breadth-first search in a box.
    fn closure_is_whole_lattice(gens: &[Site]) -> bool {
        const B: i32 = 48;
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([Site::ORIGIN]);
        seen.insert(Site::ORIGIN);
        while let Some(s) = queue.pop_front() {
            for &g in gens {
                for t in [s + g, s - g] {
                    if t.norm_inf() as i32 <= B && seen.insert(t) {
                        queue.push_back(t);
                    }
                }
            }
        }
        seen.contains(&Site::new(1, 0)) && seen.contains(&Site::new(0, 1))
    }

    proptest::proptest! {
        #[test]
        fn aperiodicity_matches_brute_force(
            pts in proptest::collection::vec((-8i32..=8, -8i32..=8), 1..5)
        ) {
            let gens: Vec<Site> = pts.into_iter().map(Site::from).collect();
            proptest::prop_assume!(gens.iter().any(|&g| g != Site::ORIGIN));
            let d = StepDistribution::uniform(&gens);
            let r = validate_distribution(&d).unwrap();
            proptest::prop_assert_eq!(r.aperiodic, closure_is_whole_lattice(&gens));
        }
    }
}
