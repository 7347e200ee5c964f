//! Set partitions and the moment/cumulant transforms.

use crate::error::{Error, Result};

/// Largest r accepted by the enumeration (Bell(10) = 115975 partitions).
pub const MAX_PARTITION_SIZE: usize = 10;

/// A partition of {0, .., r-1} into nonempty blocks, each stored as a bit
/// mask. Blocks are ordered by their smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SetPartition {
    masks: Vec<u16>,
}

impl SetPartition {
    pub fn num_blocks(&self) -> usize {
        self.masks.len()
    }

    pub fn masks(&self) -> &[u16] {
        &self.masks
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        self.masks.iter().map(|&m| mask_indices(m)).collect()
    }
}

pub(crate) fn mask_indices(mask: u16) -> Vec<usize> {
    (0..16).filter(|i| mask >> i & 1 == 1).collect()
}

/// All partitions of {0, .., r-1}, enumerated through restricted growth
/// strings in lexicographic order.
pub fn partitions(r: usize) -> Result<Vec<SetPartition>> {
    if !(1..=MAX_PARTITION_SIZE).contains(&r) {
        return Err(Error::PartitionSizeOutOfRange(r));
    }
    let mut out = Vec::new();
    let mut a = vec![0usize; r];
    loop {
        let blocks = a.iter().max().map_or(0, |m| m + 1);
        let mut masks = vec![0u16; blocks];
        for (i, &b) in a.iter().enumerate() {
            masks[b] |= 1 << i;
        }
        out.push(SetPartition { masks });
        // next restricted growth string
        let mut i = r - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            let prefix_max = a[..i].iter().copied().max().unwrap_or(0);
            if a[i] <= prefix_max {
                a[i] += 1;
                for v in &mut a[i + 1..] {
                    *v = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// m(I) = E(prod_{i in I} X_i) for nonempty index sets I.
pub trait MomentOracle {
    fn moment(&self, indices: &[usize]) -> f64;
}

impl<F: Fn(&[usize]) -> f64> MomentOracle for F {
    fn moment(&self, indices: &[usize]) -> f64 {
        self(indices)
    }
}

fn subset_table(oracle: &(impl MomentOracle + ?Sized), r: usize) -> Vec<f64> {
    let mut table = vec![1.0; 1 << r];
    for (mask, v) in table.iter_mut().enumerate().skip(1) {
        *v = oracle.moment(&mask_indices(mask as u16));
    }
    table
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Joint cumulant C(X_0, .., X_{r-1}) = sum over partitions of
/// (-1)^(p-1) (p-1)! prod_blocks m(block).
pub fn joint_cumulant(oracle: &(impl MomentOracle + ?Sized), r: usize) -> Result<f64> {
    let parts = partitions(r)?;
    let m = subset_table(oracle, r);
    Ok(parts
        .iter()
        .map(|p| {
            let k = p.num_blocks();
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * factorial(k - 1) * p.masks.iter().map(|&b| m[b as usize]).product::<f64>()
        })
        .sum())
}

/// E(X_0 .. X_{r-1}) = sum over partitions of prod_blocks s(block), where
/// `cumulants` evaluates the joint cumulant of a block.
pub fn moments_from_cumulants(cumulants: &(impl MomentOracle + ?Sized), r: usize) -> Result<f64> {
    let parts = partitions(r)?;
    let s = subset_table(cumulants, r);
    Ok(parts
        .iter()
        .map(|p| p.masks.iter().map(|&b| s[b as usize]).product::<f64>())
        .sum())
}

/// r-th cumulant of a single variable from its raw moments
/// `moments[j] = E Y^j`, j = 0..=r.
pub fn single_cumulant(moments: &[f64], r: usize) -> f64 {
    assert!(moments.len() > r, "need raw moments up to order {r}");
    let mut kappa = vec![0.0; r + 1];
    for n in 1..=r {
        let mut binom = 1.0; // C(n-1, k-1)
        let mut acc = moments[n];
        for k in 1..n {
            acc -= binom * kappa[k] * moments[n - k];
            binom = binom * (n - k) as f64 / k as f64;
        }
        kappa[n] = acc;
    }
    kappa[r]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{lane, StreamId};
    use rand::Rng;
    use std::collections::HashSet;

    /// Bell numbers via B(n+1) = sum_k C(n, k) B(k).
    pub(crate) fn bell(n: usize) -> u64 {
        let mut b = vec![1u64];
        for m in 0..n {
            let mut binom = 1u64;
            let mut next = 0u64;
            for k in 0..=m {
                next += binom * b[k];
                binom = binom * (m - k) as u64 / (k + 1) as u64;
            }
            b.push(next);
        }
        b[n]
    }

    #[test]
    fn counts_match_bell_numbers() {
        assert_eq!(partitions(1).unwrap().len(), 1);
        assert_eq!(partitions(4).unwrap().len(), 15);
        assert_eq!(partitions(5).unwrap().len(), 52);
        for r in 1..=8 {
            let p = partitions(r).unwrap();
            assert_eq!(p.len() as u64, bell(r));
            let distinct: HashSet<_> = p.iter().cloned().collect();
            assert_eq!(distinct.len(), p.len());
            for part in &p {
                assert_eq!(part.masks.iter().fold(0u16, |acc, m| acc | m), (1 << r) - 1);
                assert_eq!(part.masks.iter().map(|m| m.count_ones()).sum::<u32>(), r as u32);
            }
        }
        assert!(partitions(0).is_err());
        assert!(partitions(11).is_err());
    }

    /// Isserlis: the moment of a centred Gaussian vector is the sum over
    /// perfect pairings of the products of covariances.
    pub(crate) fn isserlis(cov: &[Vec<f64>], idx: &[usize]) -> f64 {
        if idx.is_empty() {
            return 1.0;
        }
        if idx.len() % 2 == 1 {
            return 0.0;
        }
        let first = idx[0];
        (1..idx.len())
            .map(|j| {
                let rest: Vec<usize> = idx[1..].iter().enumerate().filter(|&(i, _)| i + 1 != j).map(|(_, &v)| v).collect();
                cov[first][idx[j]] * isserlis(cov, &rest)
            })
            .sum()
    }

    fn random_cov(seed: u64, r: usize) -> Vec<Vec<f64>> {
        let mut rng = StreamId::new(seed, lane::AUX, 0).rng();
        let b: Vec<Vec<f64>> = (0..r).map(|_| (0..r).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        (0..r)
            .map(|i| (0..r).map(|j| (0..r).map(|k| b[i][k] * b[j][k]).sum()).collect())
            .collect()
    }

    #[test]
    fn second_and_fourth_cumulants() {
        let cov = random_cov(1, 4);
        let m = |idx: &[usize]| isserlis(&cov, idx);
        assert_eq!(joint_cumulant(&|i: &[usize]| m(i), 2).unwrap(), cov[0][1]);
        // an arbitrary centred oracle: the fourth cumulant expansion
        let mut rng = StreamId::new(2, lane::AUX, 0).rng();
        let table: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let oracle = |idx: &[usize]| {
            if idx.len() == 1 {
                0.0
            } else {
                table[idx.iter().map(|i| 1usize << i).sum::<usize>()]
            }
        };
        let pair = |a: usize, b: usize| oracle(&[a, b]);
        let expected = oracle(&[0, 1, 2, 3]) - (pair(0, 1) * pair(2, 3) + pair(0, 2) * pair(1, 3) + pair(0, 3) * pair(1, 2));
        assert!((joint_cumulant(&oracle, 4).unwrap() - expected).abs() < 1e-14);
        assert!(joint_cumulant(&|i: &[usize]| m(i), 4).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gaussian_higher_cumulants_vanish() {
        let cov = random_cov(3, 6);
        let m = |idx: &[usize]| isserlis(&cov, idx);
        for r in 3..=6 {
            assert!(joint_cumulant(&m, r).unwrap().abs() < 1e-11, "r = {r}");
        }
    }

    #[test]
    fn pair_cumulants_give_isserlis() {
        let cov = random_cov(4, 6);
        let s = |idx: &[usize]| if idx.len() == 2 { cov[idx[0]][idx[1]] } else { 0.0 };
        let m = moments_from_cumulants(&s, 6).unwrap();
        assert!((m - isserlis(&cov, &[0, 1, 2, 3, 4, 5])).abs() < 1e-12);
        assert_eq!(moments_from_cumulants(&s, 2).unwrap(), cov[0][1]);
    }

    #[test]
    fn round_trip_on_random_oracles() {
        for r in 1..=6 {
            let mut rng = StreamId::new(5, lane::AUX, r as u64).rng();
            let table: Vec<f64> = (0..1 << r).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m = |idx: &[usize]| table[idx.iter().map(|i| 1usize << i).sum::<usize>()];
            let kappa = |idx: &[usize]| {
                let sub = |j: &[usize]| m(&j.iter().map(|&t| idx[t]).collect::<Vec<_>>());
                joint_cumulant(&sub, idx.len()).unwrap()
            };
            let back = moments_from_cumulants(&kappa, r).unwrap();
            assert!((back - m(&(0..r).collect::<Vec<_>>())).abs() < 1e-10, "r = {r}");
        }
    }

    #[test]
    fn multilinearity_and_independence() {
        let mut rng = StreamId::new(6, lane::AUX, 0).rng();
        let r = 4;
        // X_0 = a Y + b Z with (Y, X_1.., ) and (Z, X_1, ..) jointly given by
        // two random oracles on 5 indices: slot 0 is Y, slot 4 is Z.
        let table: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let raw = |idx: &[usize]| table[idx.iter().map(|i| 1usize << i).sum::<usize>()];
        let (a, b) = (0.7, -1.3);
        let mixed = |idx: &[usize]| {
            if idx.contains(&0) {
                let rest: Vec<usize> = idx.iter().copied().filter(|&i| i != 0).collect();
                let with = |s: usize| raw(&[vec![s], rest.clone()].concat());
                a * with(0) + b * with(4)
            } else {
                raw(idx)
            }
        };
        let swap_z = |idx: &[usize]| raw(&idx.iter().map(|&i| if i == 0 { 4 } else { i }).collect::<Vec<_>>());
        let lhs = joint_cumulant(&mixed, r).unwrap();
        let rhs = a * joint_cumulant(&raw, r).unwrap() + b * joint_cumulant(&swap_z, r).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);

        // {0, 2} independent of {1, 3}: moments factor
        let t1: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t2: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let product = |idx: &[usize]| {
            let g1 = idx.iter().filter(|&&i| i % 2 == 0).map(|&i| 1usize << (i / 2)).sum::<usize>();
            let g2 = idx.iter().filter(|&&i| i % 2 == 1).map(|&i| 1usize << (i / 2)).sum::<usize>();
            let m1 = if g1 == 0 { 1.0 } else { t1[g1] };
            let m2 = if g2 == 0 { 1.0 } else { t2[g2] };
            m1 * m2
        };
        assert!(joint_cumulant(&product, r).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_cumulants() {
        assert_eq!(single_cumulant(&[1.0, 0.0, 1.0, 0.0, 3.0], 4), 0.0);
        assert_eq!(single_cumulant(&[1.0, 0.0, 1.0, 0.0, 1.0], 4), -2.0);
        assert_eq!(single_cumulant(&[1.0, 0.0, 2.5], 2), 2.5);
        // Poisson(1): every cumulant is 1; raw moments are Bell numbers
        let m: Vec<f64> = (0..=7).map(|n| bell(n) as f64).collect();
        for r in 1..=7 {
            assert!((single_cumulant(&m, r) - 1.0).abs() < 1e-9);
        }
    }
}
