//! Trigonometric polynomials on the torus T^rho.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::TAU;

const HERMITIAN_TOL: f64 = 1e-12;

/// A finite Fourier series f(x) = sum_k c(k) exp(2 pi i <k, x>) with no
/// constant term and Hermitian coefficients, so f is real and centered.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolynomial {
    rho: usize,
    terms: BTreeMap<Vec<i64>, Complex64>,
}

impl TrigPolynomial {
    pub fn zero(rho: usize) -> Self {
        TrigPolynomial {
            rho,
            terms: BTreeMap::new(),
        }
    }

    /// Builds the polynomial from (frequency, coefficient) pairs; repeated
    /// frequencies are summed and zero coefficients dropped.
    pub fn new(rho: usize, terms: impl IntoIterator<Item = (Vec<i64>, Complex64)>) -> Result<Self> {
        let mut map: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
        for (k, c) in terms {
            if k.len() != rho {
                return Err(Error::InvalidPolynomial(format!(
                    "frequency {k:?} has dimension {}, expected {rho}",
                    k.len()
                )));
            }
            if k.iter().all(|&v| v == 0) {
                return Err(Error::InvalidPolynomial("constant term not allowed".into()));
            }
            *map.entry(k).or_default() += c;
        }
        let p = TrigPolynomial { rho, terms: map }.pruned();
        let scale = p.norm_c().max(1.0);
        for (k, c) in &p.terms {
            let neg: Vec<i64> = k.iter().map(|v| -v).collect();
            let partner = p.coeff(&neg);
            if (partner - c.conj()).norm() > HERMITIAN_TOL * scale {
                return Err(Error::InvalidPolynomial(format!(
                    "coefficients at {k:?} and {neg:?} are not conjugate"
                )));
            }
        }
        Ok(p)
    }

    /// amplitude * (chi_k + chi_{-k}) = 2 amplitude cos(2 pi <k, x>).
    pub fn cosine(k: &[i64], amplitude: f64) -> Result<Self> {
        let neg: Vec<i64> = k.iter().map(|v| -v).collect();
        let c = Complex64::new(amplitude, 0.0);
        TrigPolynomial::new(k.len(), [(k.to_vec(), c), (neg, c)])
    }

    pub(crate) fn from_map_unchecked(rho: usize, terms: BTreeMap<Vec<i64>, Complex64>) -> Self {
        TrigPolynomial { rho, terms }.pruned()
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        self
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.terms.get(k).copied().unwrap_or_default()
    }

    /// ||f||_c = sum |c(k)|.
    pub fn norm_c(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// ||f||_2² = sum |c(k)|².
    pub fn norm2_sq(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    /// Largest Euclidean norm of a frequency in the support.
    pub fn max_frequency_norm(&self) -> f64 {
        self.terms
            .keys()
            .map(|k| k.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &TrigPolynomial) -> Result<TrigPolynomial> {
        if self.rho != other.rho {
            return Err(Error::InvalidPolynomial("dimension mismatch".into()));
        }
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            *terms.entry(k.clone()).or_default() += c;
        }
        Ok(TrigPolynomial::from_map_unchecked(self.rho, terms))
    }

    pub fn scaled(&self, s: f64) -> TrigPolynomial {
        let terms = self.terms.iter().map(|(k, c)| (k.clone(), c * s)).collect();
        TrigPolynomial::from_map_unchecked(self.rho, terms)
    }

    /// f at a point of the torus given by real coordinates.
    pub fn evaluate(&self, x: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                let phase: f64 = k.iter().zip(x).map(|(&kj, &xj)| kj as f64 * xj).sum();
                c * Complex64::from_polar(1.0, TAU * phase)
            })
            .sum()
    }
}
