//! Commuting toral automorphisms: the Z²-action l -> A^l = A1^l1 A2^l2 on
//! T^rho, its dual action on frequencies, exact orbit sampling at rational
//! points, and orbit-escape certificates.
//!
//! Convention: X_l = f(A^l x), so a character chi_k is carried to
//! chi_{(A^l)^T k}.

use super::matrix::{cyclotomic_factors, is_prime_u64, reduce_i64, BigMatrix, IntMatrix, ModMatrix};
use super::trig::TrigPolynomial;
use crate::error::{Error, Result};
use crate::lattice::Site;
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive};
use rand::Rng;
use rustc_hash::FxHashMap;
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

/// Default prime modulus for orbit sampling, 2^61 - 1.
pub const DEFAULT_MODULUS: u64 = (1 << 61) - 1;

/// Tolerance on | |eigenvalue| - 1 | in the numerical screen.
pub const UNIT_CIRCLE_TOL: f64 = 1e-8;

/// Largest orbit radius searched by escape certificates.
pub const MAX_ESCAPE_RADIUS: u32 = 64;

/// Two commuting matrices of GL(rho, Z).
#[derive(Clone, Debug)]
pub struct ToralAction {
    a: [IntMatrix; 2],
    a_inv: [IntMatrix; 2],
    dual: [BigMatrix; 2],
    dual_inv: [BigMatrix; 2],
}

impl ToralAction {
    /// Checks exact commutation and |det| = 1.
    pub fn new(a1: IntMatrix, a2: IntMatrix) -> Result<Self> {
        if a1.dim() != a2.dim() {
            return Err(Error::InvalidMatrix(format!(
                "A1 is {0}x{0} but A2 is {1}x{1}",
                a1.dim(),
                a2.dim()
            )));
        }
        if a1.to_big().mul(&a2.to_big()) != a2.to_big().mul(&a1.to_big()) {
            return Err(Error::NonCommuting);
        }
        let a1_inv = a1.unimodular_inverse()?;
        let a2_inv = a2.unimodular_inverse()?;
        let dual = [a1.transpose().to_big(), a2.transpose().to_big()];
        let dual_inv = [a1_inv.transpose().to_big(), a2_inv.transpose().to_big()];
        Ok(ToralAction {
            a: [a1, a2],
            a_inv: [a1_inv, a2_inv],
            dual,
            dual_inv,
        })
    }

    /// The pair of 3x3 matrices used as the running example.
    pub fn example() -> Self {
        let a1 = IntMatrix::from_rows(&[vec![-3, -3, 1], vec![10, 9, -3], vec![-30, -26, 9]])
            .expect("square");
        let a2 = IntMatrix::from_rows(&[vec![11, 1, -1], vec![-10, -1, 1], vec![10, 2, -1]])
            .expect("square");
        ToralAction::new(a1, a2).expect("example matrices commute and are unimodular")
    }

    pub fn rho(&self) -> usize {
        self.a[0].dim()
    }

    pub fn generator(&self, i: usize) -> &IntMatrix {
        &self.a[i]
    }

    /// A^l in exact arithmetic.
    pub fn power(&self, l: Site) -> BigMatrix {
        let part = |i: usize, e: i32| {
            let m = if e >= 0 { &self.a[i] } else { &self.a_inv[i] };
            m.to_big().pow(e.unsigned_abs())
        };
        part(0, l.x).mul(&part(1, l.y))
    }

    /// A^l reduced modulo q.
    pub fn power_mod(&self, l: Site, q: u64) -> ModMatrix {
        let part = |i: usize, e: i32| {
            let m = if e >= 0 { &self.a[i] } else { &self.a_inv[i] };
            ModMatrix::from_int(m, q).pow(e.unsigned_abs() as u64)
        };
        part(0, l.x).mul(&part(1, l.y))
    }

    /// (A^l)^T k, exactly.
    pub fn transport(&self, k: &[BigInt], l: Site) -> Vec<BigInt> {
        let mut v = k.to_vec();
        for (i, e) in [l.x, l.y].into_iter().enumerate() {
            let m = if e >= 0 { &self.dual[i] } else { &self.dual_inv[i] };
            for _ in 0..e.unsigned_abs() {
                v = m.mul_vec(&v);
            }
        }
        v
    }

    pub fn transport_small(&self, k: &[i64], l: Site) -> Vec<BigInt> {
        let big: Vec<BigInt> = k.iter().map(|&v| BigInt::from(v)).collect();
        self.transport(&big, l)
    }

    /// (A^l)^T k for every l in the square window of the given radius.
    pub fn transport_orbit(&self, k: &[i64], radius: u32) -> BTreeMap<Site, Vec<BigInt>> {
        let r = radius as i32;
        let mut out = BTreeMap::new();
        let start = self.transport_small(k, Site::new(-r, -r));
        let mut row = start;
        for x in -r..=r {
            let mut v = row.clone();
            for y in -r..=r {
                out.insert(Site::new(x, y), v.clone());
                v = self.dual[1].mul_vec(&v);
            }
            row = self.dual[0].mul_vec(&row);
        }
        out
    }

    /// Joint spectrum of the dual action, used by escape certificates.
    pub fn dual_spectrum(&self) -> Option<JointSpectrum> {
        JointSpectrum::new(&self.a[0].transpose(), &self.a[1].transpose())
    }
}

pub(crate) fn small_vector(v: &[BigInt]) -> Option<Vec<i64>> {
    v.iter().map(|x| x.to_i64()).collect()
}

/// Simultaneous eigen-decomposition of two commuting integer matrices with
/// simple joint spectrum: common eigenvectors v_i with M1 v_i = lambda_i v_i,
/// M2 v_i = mu_i v_i, so log|eigenvalue of M^l on v_i| = <l, L_i> with
/// L_i = (log|lambda_i|, log|mu_i|).
#[derive(Clone, Debug)]
pub struct JointSpectrum {
    pub log_moduli: Vec<[f64; 2]>,
    inverse: DMatrix<Complex64>,
    row_norms: Vec<f64>,
}

impl JointSpectrum {
    pub fn new(m1: &IntMatrix, m2: &IntMatrix) -> Option<Self> {
        let n = m1.dim();
        let real = |m: &IntMatrix| DMatrix::from_fn(n, n, |i, j| m.at(i, j) as f64);
        let (r1, r2) = (real(m1), real(m2));
        let generic = &r1 + &r2 * PI;
        let eigenvalues = generic.clone().complex_eigenvalues();
        let scale = generic.norm().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (eigenvalues[i] - eigenvalues[j]).norm() < 1e-7 * scale {
                    return None;
                }
            }
        }
        let complex = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
        let (c1, c2, cg) = (complex(&r1), complex(&r2), complex(&generic));
        let mut vectors = DMatrix::<Complex64>::zeros(n, n);
        let mut log_moduli = Vec::with_capacity(n);
        for (i, &lambda) in eigenvalues.iter().enumerate() {
            let shifted = &cg - DMatrix::<Complex64>::identity(n, n) * lambda;
            let svd = shifted.svd(false, true);
            let v_t = svd.v_t?;
            let idx = svd.singular_values.imin();
            let v = v_t.row(idx).adjoint();
            let rayleigh = |m: &DMatrix<Complex64>| (v.adjoint() * m * &v)[(0, 0)];
            let (l1, l2) = (rayleigh(&c1), rayleigh(&c2));
            let resid1 = (&c1 * &v - &v * l1).norm();
            let resid2 = (&c2 * &v - &v * l2).norm();
            if resid1 > 1e-8 * r1.norm().max(1.0) || resid2 > 1e-8 * r2.norm().max(1.0) {
                return None;
            }
            if l1.norm() == 0.0 || l2.norm() == 0.0 {
                return None;
            }
            log_moduli.push([l1.norm().ln(), l2.norm().ln()]);
            vectors.set_column(i, &v);
        }
        let inverse = vectors.try_inverse()?;
        let row_norms = (0..n).map(|i| inverse.row(i).norm()).collect();
        Some(JointSpectrum {
            log_moduli,
            inverse,
            row_norms,
        })
    }

    /// Smallest | log |eigenvalue of M^l| | over the eigenvalues.
    pub fn min_log_modulus(&self, l: Site) -> f64 {
        self.log_moduli
            .iter()
            .map(|lm| (l.x as f64 * lm[0] + l.y as f64 * lm[1]).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Affine lower-bound pieces for log ||M^l k||: max_i (c_i + <l, L_i>).
    fn pieces(&self, k: &[i64]) -> Vec<(f64, [f64; 2])> {
        let n = k.len();
        (0..n)
            .filter_map(|i| {
                let beta: Complex64 = (0..n)
                    .map(|j| self.inverse[(i, j)] * k[j] as f64)
                    .sum();
                (beta.norm() > 0.0).then(|| (beta.norm().ln() - self.row_norms[i].ln(), self.log_moduli[i]))
            })
            .collect()
    }

    /// Smallest radius R such that ||M^l k||_2 > e^log_target for every l
    /// with |l|_inf > R, or `None` if no R <= `max_radius` is certified.
    ///
    /// The lower bound g(l) = max_i (c_i + <l, L_i>) is convex, so its minimum
    /// over the boundary of the square of half-side R + 1 controls every l
    /// outside the square.
    pub fn escape_radius(&self, k: &[i64], log_target: f64, max_radius: u32) -> Option<u32> {
        let pieces = self.pieces(k);
        if pieces.is_empty() {
            return None;
        }
        let at = |p: [f64; 2]| {
            pieces
                .iter()
                .map(|(c, lm)| c + p[0] * lm[0] + p[1] * lm[1])
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let threshold = log_target.max(at([0.0, 0.0])) + 1e-6;
        (0..=max_radius).find(|&r| boundary_min(&pieces, (r + 1) as f64) > threshold)
    }
}

/// Minimum of max_i (c_i + <x, L_i>) over the boundary of [-s, s]².
fn boundary_min(pieces: &[(f64, [f64; 2])], s: f64) -> f64 {
    let corners = [[s, s], [-s, s], [-s, -s], [s, -s]];
    let mut best = f64::INFINITY;
    for e in 0..4 {
        let p = corners[e];
        let q = corners[(e + 1) % 4];
        let d = [q[0] - p[0], q[1] - p[1]];
        let lines: Vec<(f64, f64)> = pieces
            .iter()
            .map(|(c, lm)| (c + p[0] * lm[0] + p[1] * lm[1], d[0] * lm[0] + d[1] * lm[1]))
            .collect();
        let envelope = |t: f64| lines.iter().map(|(a, b)| a + b * t).fold(f64::NEG_INFINITY, f64::max);
        let mut candidates = vec![0.0, 1.0];
        for i in 0..lines.len() {
            for j in 0..i {
                let (ai, bi) = lines[i];
                let (aj, bj) = lines[j];
                if bi != bj {
                    let t = (aj - ai) / (bi - bj);
                    if (0.0..=1.0).contains(&t) {
                        candidates.push(t);
                    }
                }
            }
        }
        for t in candidates {
            best = best.min(envelope(t));
        }
    }
    best
}

/// Outcome of [`verify_action`].
#[derive(Clone, Debug)]
pub struct ActionReport {
    pub rho: usize,
    pub commute: bool,
    pub det: [BigInt; 2],
    pub window: u32,
    /// Smallest | log |eigenvalue| | over 0 < |l|_inf <= window.
    pub min_log_modulus: f64,
    pub log_moduli: Vec<[f64; 2]>,
    pub action: ToralAction,
}

/// Checks that (A1, A2) generate a totally ergodic Z²-action on the window:
/// exact commutation, |det| = 1, and for every 0 < |l|_inf <= `l_check`
/// no eigenvalue of A^l on or near the unit circle. Roots of unity are
/// excluded exactly by testing char(A^l) against every cyclotomic
/// polynomial of degree <= rho; eigenvalues near the circle are screened
/// numerically through the joint spectrum.
pub fn verify_action(a1: &IntMatrix, a2: &IntMatrix, l_check: u32) -> Result<ActionReport> {
    let action = ToralAction::new(a1.clone(), a2.clone())?;
    let det = [a1.det(), a2.det()];
    debug_assert!(det.iter().all(|d| d.abs().is_one()));
    let r = l_check as i32;
    let powers = |i: usize| -> Vec<BigMatrix> {
        (-r..=r)
            .map(|e| {
                let m = if e >= 0 { action.a[i].to_big() } else { action.a_inv[i].to_big() };
                m.pow(e.unsigned_abs())
            })
            .collect()
    };
    let (p1, p2) = (powers(0), powers(1));
    let spectrum = JointSpectrum::new(a1, a2);
    let mut min_log = f64::INFINITY;
    for l in Site::window(l_check).filter(|&l| l != Site::ORIGIN) {
        let m = p1[(l.x + r) as usize].mul(&p2[(l.y + r) as usize]);
        if !cyclotomic_factors(&m.char_poly()).is_empty() {
            return Err(Error::UnitCircleEigenvalue(l.x, l.y));
        }
        let log_mod = match &spectrum {
            Some(s) => s.min_log_modulus(l),
            None => direct_min_log_modulus(&m),
        };
        if log_mod.exp_m1().abs() < UNIT_CIRCLE_TOL {
            return Err(Error::UnitCircleEigenvalue(l.x, l.y));
        }
        min_log = min_log.min(log_mod);
    }
    Ok(ActionReport {
        rho: a1.dim(),
        commute: true,
        det,
        window: l_check,
        min_log_modulus: min_log,
        log_moduli: spectrum.map(|s| s.log_moduli).unwrap_or_default(),
        action,
    })
}

fn direct_min_log_modulus(m: &BigMatrix) -> f64 {
    let n = m.dim();
    let f = DMatrix::from_fn(n, n, |i, j| m.at(i, j).to_f64().unwrap_or(f64::INFINITY));
    f.complex_eigenvalues()
        .iter()
        .map(|z| z.norm().ln().abs())
        .fold(f64::INFINITY, f64::min)
}

/// Exact correlation <T^l f, f> = sum over m with (A^l)^T m = k in the
/// support of c(m) conj(c(k)).
pub fn toral_correlation(action: &ToralAction, f: &TrigPolynomial, l: Site) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, c) in f.terms() {
        let image = action.transport_small(m, l);
        if let Some(k) = small_vector(&image) {
            acc += c * f.coeff(&k).conj();
        }
    }
    acc.re
}

/// Radius beyond which every correlation of f vanishes, certified by orbit
/// escape of each frequency; `None` if it cannot be certified.
pub fn correlation_radius(action: &ToralAction, f: &TrigPolynomial) -> Option<u32> {
    if f.is_empty() {
        return Some(0);
    }
    let spectrum = action.dual_spectrum()?;
    let target = f.max_frequency_norm().ln();
    f.terms()
        .map(|(k, _)| spectrum.escape_radius(k, target, MAX_ESCAPE_RADIUS))
        .try_fold(0, |acc, r| r.map(|r| acc.max(r)))
}

/// Bound on sum_{|l|_inf > radius} |<T^l f, f>|: ||f||_c times the mass of
/// the coefficients whose orbit is not certified to leave the support.
pub fn correlation_tail_bound(action: &ToralAction, f: &TrigPolynomial, radius: u32) -> f64 {
    let Some(spectrum) = action.dual_spectrum() else {
        return f.norm_c().powi(2);
    };
    let target = f.max_frequency_norm().ln();
    let uncertified: f64 = f
        .terms()
        .filter(|(k, _)| {
            spectrum
                .escape_radius(k, target, MAX_ESCAPE_RADIUS)
                .is_none_or(|r| r > radius)
        })
        .map(|(_, c)| c.norm())
        .sum();
    uncertified * f.norm_c()
}

/// f = g - g o A_direction, the canonical zero-variance observable.
pub fn coboundary(g: &TrigPolynomial, direction: usize, action: &ToralAction) -> Result<TrigPolynomial> {
    if !(1..=2).contains(&direction) {
        return Err(Error::InvalidParameter(format!("direction must be 1 or 2, got {direction}")));
    }
    if g.rho() != action.rho() {
        return Err(Error::InvalidPolynomial("dimension mismatch with the action".into()));
    }
    let step = if direction == 1 { Site::new(1, 0) } else { Site::new(0, 1) };
    let mut terms: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
    for (k, c) in g.terms() {
        *terms.entry(k.clone()).or_default() += c;
        let image = small_vector(&action.transport_small(k, step))
            .ok_or_else(|| Error::InvalidPolynomial("transported frequency overflows i64".into()))?;
        *terms.entry(image).or_default() -= c;
    }
    Ok(TrigPolynomial::from_map_unchecked(g.rho(), terms))
}

/// Evaluates X_l = f(A^l p / q) for a fixed list of sites, exactly in the
/// orbit and in floating point only for the final characters.
#[derive(Clone, Debug)]
pub struct ToralSampler {
    q: u64,
    rho: usize,
    maps: Vec<ModMatrix>,
    terms: Vec<(Vec<u64>, Complex64)>,
}

impl ToralSampler {
    pub fn new(action: &ToralAction, f: &TrigPolynomial, q: u64, sites: &[Site]) -> Result<Self> {
        if !is_prime_u64(q) {
            return Err(Error::ModulusNotPrime(q));
        }
        if f.rho() != action.rho() {
            return Err(Error::InvalidPolynomial("dimension mismatch with the action".into()));
        }
        let mut first: FxHashMap<i32, ModMatrix> = FxHashMap::default();
        let mut second: FxHashMap<i32, ModMatrix> = FxHashMap::default();
        let maps = sites
            .iter()
            .map(|l| {
                let m1 = first
                    .entry(l.x)
                    .or_insert_with(|| action.power_mod(Site::new(l.x, 0), q))
                    .clone();
                let m2 = second
                    .entry(l.y)
                    .or_insert_with(|| action.power_mod(Site::new(0, l.y), q));
                m1.mul(m2)
            })
            .collect();
        let terms = f
            .terms()
            .map(|(k, c)| (k.iter().map(|&v| reduce_i64(v, q)).collect(), *c))
            .collect();
        Ok(ToralSampler {
            q,
            rho: action.rho(),
            maps,
            terms,
        })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// A uniform point p of (Z/q)^rho.
    pub fn draw_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        (0..self.rho).map(|_| rng.random_range(0..self.q)).collect()
    }

    fn character_sum(&self, y: &[u64]) -> Complex64 {
        let q = self.q as u128;
        self.terms
            .iter()
            .map(|(k, c)| {
                let phase = k.iter().zip(y).fold(0u128, |acc, (&a, &b)| (acc + a as u128 * b as u128) % q);
                // centre the residue before converting to keep the angle small
                let centred = if phase > q / 2 { phase as f64 - q as f64 } else { phase as f64 };
                c * Complex64::from_polar(1.0, TAU * centred / q as f64)
            })
            .sum()
    }

    /// f(A^l p / q) for site `index`, before discarding the imaginary part.
    pub fn evaluate_complex(&self, p: &[u64], index: usize) -> Complex64 {
        let mut y = vec![0u64; self.rho];
        self.maps[index].mul_vec_into(p, &mut y);
        self.character_sum(&y)
    }

    pub fn evaluate_into(&self, p: &[u64], out: &mut [f64]) {
        let mut y = vec![0u64; self.rho];
        for (m, o) in self.maps.iter().zip(out.iter_mut()) {
            m.mul_vec_into(p, &mut y);
            *o = self.character_sum(&y).re;
        }
    }
}
