//! Exact mixed moments E(prod_j f(A^{l_j} x)) of a trigonometric polynomial.

use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::scenery::{ToralAction, TrigPolynomial};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::Zero;
use rustc_hash::FxHashMap;
use std::collections::HashMap;

pub const MAX_TORAL_ORDER: usize = 6;
pub const MAX_TORAL_SUPPORT: usize = 32;

type Freq = Vec<BigInt>;

/// Moment evaluator with a cache of transported frequencies.
///
/// A character product has mean one exactly when the transported
/// frequencies sum to zero, so E(prod_j T^{l_j} f) is the sum of
/// prod_j c(k_j) over tuples with sum_j (A^{l_j})^T k_j = 0. The tuples are
/// matched meet-in-the-middle on the two halves of the index list.
pub struct ToralMoments<'a> {
    action: &'a ToralAction,
    coeffs: Vec<(Vec<i64>, Complex64)>,
    cache: FxHashMap<(usize, Site), Freq>,
}

impl<'a> ToralMoments<'a> {
    pub fn new(action: &'a ToralAction, f: &TrigPolynomial) -> Result<Self> {
        if f.len() > MAX_TORAL_SUPPORT {
            return Err(Error::SupportTooLarge(f.len(), MAX_TORAL_SUPPORT));
        }
        if f.rho() != action.rho() {
            return Err(Error::InvalidPolynomial("dimension mismatch with the action".into()));
        }
        Ok(ToralMoments {
            action,
            coeffs: f.terms().map(|(k, c)| (k.clone(), *c)).collect(),
            cache: FxHashMap::default(),
        })
    }

    fn transported(&mut self, term: usize, l: Site) -> &Freq {
        let action = self.action;
        let k = &self.coeffs[term].0;
        self.cache
            .entry((term, l))
            .or_insert_with(|| action.transport_small(k, l))
    }

    /// All (sum of transported frequencies, product of coefficients) over
    /// the terms assigned to `sites`.
    fn half_sums(&mut self, sites: &[Site]) -> HashMap<Freq, Complex64> {
        let rho = self.action.rho();
        let mut acc: HashMap<Freq, Complex64> = HashMap::new();
        acc.insert(vec![BigInt::zero(); rho], Complex64::new(1.0, 0.0));
        for &l in sites {
            let images: Vec<(Freq, Complex64)> = (0..self.coeffs.len())
                .map(|t| (self.transported(t, l).clone(), self.coeffs[t].1))
                .collect();
            let mut next: HashMap<Freq, Complex64> = HashMap::with_capacity(acc.len() * images.len());
            for (s, w) in &acc {
                for (v, c) in &images {
                    let key: Freq = s.iter().zip(v).map(|(a, b)| a + b).collect();
                    *next.entry(key).or_default() += w * c;
                }
            }
            acc = next;
        }
        acc
    }

    /// E(prod_j f(A^{l_j} x)).
    pub fn moment(&mut self, sites: &[Site]) -> Result<f64> {
        let r = sites.len();
        if r > MAX_TORAL_ORDER {
            return Err(Error::Unsupported(format!("toral moments of order {r} > {MAX_TORAL_ORDER}")));
        }
        if r == 0 {
            return Ok(1.0);
        }
        // stationarity: only the offsets from the first site matter
        let base = sites[0];
        let shifted: Vec<Site> = sites.iter().map(|&l| l - base).collect();
        let (left, right) = shifted.split_at(r / 2);
        let left = self.half_sums(left);
        let right = self.half_sums(right);
        // deterministic order: iterate the right half sorted by key
        let mut keys: Vec<&Freq> = right.keys().collect();
        keys.sort();
        let mut total = Complex64::new(0.0, 0.0);
        for key in keys {
            let neg: Freq = key.iter().map(|v| -v).collect();
            if let Some(w) = left.get(&neg) {
                total += w * right[key];
            }
        }
        Ok(total.re)
    }
}

/// E(prod_j T^{l_j} f) for r <= 6 and at most 32 coefficients.
pub fn exact_toral_moment(f: &TrigPolynomial, action: &ToralAction, sites: &[Site]) -> Result<f64> {
    ToralMoments::new(action, f)?.moment(sites)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenery::toral_correlation;

    fn rich_observable(action: &ToralAction) -> TrigPolynomial {
        let k1 = vec![1i64, 0, 0];
        let k2: Vec<i64> = action
            .transport_small(&k1, Site::new(1, 0))
            .iter()
            .map(|v| i64::try_from(v).unwrap())
            .collect();
        let k3: Vec<i64> = k1.iter().zip(&k2).map(|(a, b)| a + b).collect();
        TrigPolynomial::cosine(&k1, 1.0)
            .unwrap()
            .add(&TrigPolynomial::cosine(&k2, 0.5).unwrap())
            .unwrap()
            .add(&TrigPolynomial::cosine(&k3, 0.25).unwrap())
            .unwrap()
    }

    #[test]
    fn low_order_moments() {
        let a = ToralAction::example();
        let f = rich_observable(&a);
        assert_eq!(exact_toral_moment(&f, &a, &[Site::new(3, 1)]).unwrap(), 0.0);
        let parseval = exact_toral_moment(&f, &a, &[Site::ORIGIN, Site::ORIGIN]).unwrap();
        assert!((parseval - f.norm2_sq()).abs() < 1e-14);
        for l in Site::window(3) {
            let m = exact_toral_moment(&f, &a, &[l, Site::ORIGIN]).unwrap();
            assert!((m - toral_correlation(&a, &f, l)).abs() < 1e-14, "{l}");
        }
    }

    #[test]
    fn third_moment_matches_hand_count() {
        let a = ToralAction::example();
        let f = rich_observable(&a);
        // E[f(x) f(A1 x) f(x)] picks up k_a + A1^T k_b + k_c = 0 at
        // (k3, -k1, -k1), (-k1, -k1, k3) and their negatives.
        let m = exact_toral_moment(&f, &a, &[Site::ORIGIN, Site::new(1, 0), Site::ORIGIN]).unwrap();
        assert!(m.abs() > 0.1, "{m}");
        let sym = exact_toral_moment(&f, &a, &[Site::ORIGIN, Site::ORIGIN, Site::new(1, 0)]).unwrap();
        assert!((m - sym).abs() < 1e-14);
        let shifted = exact_toral_moment(&f, &a, &[Site::new(4, -2), Site::new(5, -2), Site::new(4, -2)]).unwrap();
        assert_eq!(m, shifted);
    }

    #[test]
    fn guards() {
        let a = ToralAction::example();
        let f = TrigPolynomial::cosine(&[1, 0, 0], 1.0).unwrap();
        assert!(exact_toral_moment(&f, &a, &[Site::ORIGIN; 7]).is_err());
        let mut big = TrigPolynomial::zero(3);
        for i in 1..=17 {
            big = big.add(&TrigPolynomial::cosine(&[i, 0, 0], 1.0).unwrap()).unwrap();
        }
        assert_eq!(exact_toral_moment(&big, &a, &[Site::ORIGIN]), Err(Error::SupportTooLarge(34, 32)));
    }
}
