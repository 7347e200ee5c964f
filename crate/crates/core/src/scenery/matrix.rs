//! Integer matrices: exact determinants, unimodular inverses, big-integer
//! powers, characteristic polynomials, cyclotomic factors and arithmetic
//! modulo a prime.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Square integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntMatrix {
    dim: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidMatrix(format!(
                "expected a non-empty square matrix, got {} rows",
                dim
            )));
        }
        Ok(IntMatrix {
            dim,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1;
        }
        IntMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut data = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.at(i, j);
            }
        }
        IntMatrix { dim: n, data }
    }

    /// Exact product; panics on i64 overflow.
    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let n = self.dim;
        let mut data = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc: i128 = 0;
                for k in 0..n {
                    acc += self.at(i, k) as i128 * other.at(k, j) as i128;
                }
                data[i * n + j] = i64::try_from(acc).expect("integer matrix overflow");
            }
        }
        IntMatrix { dim: n, data }
    }

    pub fn to_big(&self) -> BigMatrix {
        BigMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&v| BigInt::from(v)).collect(),
        }
    }

    /// Exact determinant.
    pub fn det(&self) -> BigInt {
        self.to_big().det()
    }

    /// Inverse of a matrix with determinant +-1 (adjugate formula).
    pub fn unimodular_inverse(&self) -> Result<IntMatrix> {
        let big = self.to_big();
        let det = big.det();
        if det.abs() != BigInt::one() {
            return Err(Error::NotUnimodular(det.to_string()));
        }
        let n = self.dim;
        let mut data = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                // inverse[i][j] = cofactor(j, i) / det
                let minor = big.minor(j, i).det();
                let sign = if (i + j) % 2 == 0 { BigInt::one() } else { -BigInt::one() };
                let v = sign * minor * &det;
                data[i * n + j] = v
                    .to_i64()
                    .ok_or_else(|| Error::InvalidMatrix("inverse entries overflow i64".into()))?;
            }
        }
        Ok(IntMatrix { dim: n, data })
    }
}

/// Square matrix of big integers, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigMatrix {
    dim: usize,
    data: Vec<BigInt>,
}

impl BigMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![BigInt::zero(); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = BigInt::one();
        }
        BigMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.dim + j]
    }

    pub fn mul(&self, other: &BigMatrix) -> BigMatrix {
        let n = self.dim;
        let mut data = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.at(k, j);
                }
            }
        }
        BigMatrix { dim: n, data }
    }

    pub fn pow(&self, mut e: u32) -> BigMatrix {
        let mut base = self.clone();
        let mut acc = BigMatrix::identity(self.dim);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| self.at(i, j) * &v[j]).sum())
            .collect()
    }

    fn minor(&self, row: usize, col: usize) -> BigMatrix {
        let n = self.dim;
        let mut data = Vec::with_capacity((n - 1) * (n - 1));
        for i in (0..n).filter(|&i| i != row) {
            for j in (0..n).filter(|&j| j != col) {
                data.push(self.at(i, j).clone());
            }
        }
        BigMatrix { dim: n - 1, data }
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        let n = self.dim;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.data.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[k * n + k].is_zero() {
                let Some(swap) = (k + 1..n).find(|&i| !m[i * n + k].is_zero()) else {
                    return BigInt::zero();
                };
                for j in 0..n {
                    m.swap(k * n + j, swap * n + j);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &m[i * n + j] * &m[k * n + k] - &m[i * n + k] * &m[k * n + j];
                    m[i * n + j] = v / &prev;
                }
            }
            prev = m[k * n + k].clone();
        }
        sign * &m[(n - 1) * n + (n - 1)]
    }

    fn trace(&self) -> BigInt {
        (0..self.dim).map(|i| self.at(i, i).clone()).sum()
    }

    /// Characteristic polynomial det(xI - M), coefficients from the constant
    /// term upwards (monic, degree = dim), by Faddeev-LeVerrier.
    pub fn char_poly(&self) -> Vec<BigInt> {
        let n = self.dim;
        let mut coeffs = vec![BigInt::zero(); n + 1];
        coeffs[n] = BigInt::one();
        let mut m = BigMatrix {
            dim: n,
            data: vec![BigInt::zero(); n * n],
        };
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{n-k+1} I
            let mut next = self.mul(&m);
            for i in 0..n {
                next.data[i * n + i] += &coeffs[n - k + 1];
            }
            m = next;
            let t = self.mul(&m).trace();
            coeffs[n - k] = -(t / BigInt::from(k));
        }
        coeffs
    }
}

/// Remainder of `p` modulo the monic polynomial `d` (coefficients low to high).
pub fn poly_rem_monic(p: &[BigInt], d: &[BigInt]) -> Vec<BigInt> {
    let mut r: Vec<BigInt> = p.to_vec();
    let dd = d.len() - 1;
    while r.len() > dd {
        let lead = r.pop().expect("non-empty");
        if lead.is_zero() {
            continue;
        }
        let shift = r.len() - dd;
        for (i, c) in d[..dd].iter().enumerate() {
            r[shift + i] -= &lead * c;
        }
    }
    while r.last().is_some_and(Zero::is_zero) {
        r.pop();
    }
    r
}

fn poly_div_monic(p: &[BigInt], d: &[BigInt]) -> Vec<BigInt> {
    let mut r: Vec<BigInt> = p.to_vec();
    let dd = d.len() - 1;
    let mut q = vec![BigInt::zero(); p.len().saturating_sub(dd)];
    while r.len() > dd {
        let lead = r.pop().expect("non-empty");
        let shift = r.len() - dd;
        for (i, c) in d[..dd].iter().enumerate() {
            r[shift + i] -= &lead * c;
        }
        q[shift] = lead;
    }
    q
}

fn euler_phi(mut m: u64) -> u64 {
    let mut result = m;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

/// The m-th cyclotomic polynomial.
pub fn cyclotomic(m: u64) -> Vec<BigInt> {
    let mut p = vec![BigInt::zero(); m as usize + 1];
    p[0] = -BigInt::one();
    p[m as usize] = BigInt::one();
    for d in (1..m).filter(|d| m % d == 0) {
        p = poly_div_monic(&p, &cyclotomic(d));
    }
    p
}

/// Orders m of the roots of unity that are roots of `poly`, among all m
/// with phi(m) <= deg(poly).
pub fn cyclotomic_factors(poly: &[BigInt]) -> Vec<u64> {
    let deg = poly.len() as u64 - 1;
    // phi(m) >= sqrt(m / 2), so phi(m) <= deg forces m <= 2 deg².
    (1..=2 * deg * deg + 2)
        .filter(|&m| euler_phi(m) <= deg)
        .filter(|&m| poly_rem_monic(poly, &cyclotomic(m)).is_empty())
        .collect()
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

#[inline]
pub fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

pub fn pow_mod(mut a: u64, mut e: u64, q: u64) -> u64 {
    let mut acc = 1 % q;
    a %= q;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, q);
        }
        a = mul_mod(a, a, q);
        e >>= 1;
    }
    acc
}

/// Reduces a signed integer into [0, q).
#[inline]
pub fn reduce_i64(v: i64, q: u64) -> u64 {
    (v as i128).rem_euclid(q as i128) as u64
}

pub fn reduce_big(v: &BigInt, q: u64) -> u64 {
    v.mod_floor(&BigInt::from(q))
        .to_u64()
        .expect("residue fits in u64")
}

/// Square matrix with entries in Z/qZ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModMatrix {
    dim: usize,
    q: u64,
    data: Vec<u64>,
}

impl ModMatrix {
    pub fn from_int(m: &IntMatrix, q: u64) -> Self {
        ModMatrix {
            dim: m.dim,
            q,
            data: m.data.iter().map(|&v| reduce_i64(v, q)).collect(),
        }
    }

    pub fn identity(dim: usize, q: u64) -> Self {
        let mut data = vec![0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1 % q;
        }
        ModMatrix { dim, q, data }
    }

    pub fn mul(&self, other: &ModMatrix) -> ModMatrix {
        let n = self.dim;
        let q = self.q;
        let mut data = vec![0u64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc: u128 = 0;
                for k in 0..n {
                    acc += self.data[i * n + k] as u128 * other.data[k * n + j] as u128;
                    acc %= q as u128;
                }
                data[i * n + j] = acc as u64;
            }
        }
        ModMatrix { dim: n, q, data }
    }

    pub fn pow(&self, mut e: u64) -> ModMatrix {
        let mut base = self.clone();
        let mut acc = ModMatrix::identity(self.dim, self.q);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    #[inline]
    pub fn mul_vec_into(&self, v: &[u64], out: &mut [u64]) {
        let n = self.dim;
        let q = self.q as u128;
        for i in 0..n {
            let mut acc: u128 = 0;
            for j in 0..n {
                acc += self.data[i * n + j] as u128 * v[j] as u128;
                acc %= q;
            }
            out[i] = acc as u64;
        }
    }
}
