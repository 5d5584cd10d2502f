//! Coefficients of the echelon cusp form basis at large indices, computed
//! modulo many word-sized primes with NTT products and lifted by CRT.
//!
//! The number of moduli is chosen from the expected size `n^{(k-1)/2}` of
//! cusp form coefficients plus slack; two extra moduli certify that every
//! lifted value lies well inside the symmetric range of the base product.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::ntt::{ntt_primes, NttField};
use crate::qseries::{divisor_power_sums, miller_basis, miller_exponents, validate_weight};

const TWO_ADICITY: u32 = 20;
const CHECK_MODULI: usize = 2;

/// Values `f_i(n)` of the echelon basis at a fixed sorted list of indices.
#[derive(Debug, Clone)]
pub struct BasisValues {
    weight: u32,
    indices: Vec<usize>,
    /// `values[i][t] = f_{i+1}(indices[t])`
    values: Vec<Vec<BigInt>>,
}

impl BasisValues {
    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn form_values(&self, i: usize) -> &[BigInt] {
        &self.values[i]
    }

    /// `f_{i+1}(n)`, if `n` is among the computed indices.
    pub fn get(&self, i: usize, n: usize) -> Option<&BigInt> {
        self.indices
            .binary_search(&n)
            .ok()
            .map(|t| &self.values[i][t])
    }
}

struct SeriesCtx<'a> {
    field: &'a NttField,
    len: usize,
    size: usize,
}

impl SeriesCtx<'_> {
    fn forward(&self, mut v: Vec<u32>) -> Vec<u32> {
        v.truncate(self.len);
        v.resize(self.size, 0);
        self.field.forward(&mut v);
        v
    }

    fn product(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        let f = self.field;
        let mut c: Vec<u32> = a.iter().zip(b).map(|(&x, &y)| f.mul(x, y)).collect();
        f.inverse(&mut c);
        c.truncate(self.len);
        c
    }
}

/// Residues of `g_j = Delta^j E_4^{a_j} E_6^b` at `indices`, one modulus.
fn monomial_residues(
    k: u32,
    d: usize,
    sigma3: &[u128],
    sigma5: &[u128],
    indices: &[usize],
    p: u32,
) -> Vec<Vec<u32>> {
    let len = indices.last().unwrap() + 1;
    let size = (2 * len - 1).next_power_of_two();
    let field = NttField::new(p, size.trailing_zeros());
    let f = &field;
    let ctx = SeriesCtx {
        field: f,
        len,
        size,
    };
    let pm = p as u128;
    let e4: Vec<u32> = (0..len)
        .map(|n| match n {
            0 => f.one(),
            _ => f.mul(f.to_mont(240), f.to_mont((sigma3[n] % pm) as u32)),
        })
        .collect();
    let e6: Vec<u32> = (0..len)
        .map(|n| match n {
            0 => f.one(),
            _ => f.mul(f.from_i128(-504), f.to_mont((sigma5[n] % pm) as u32)),
        })
        .collect();
    let fe4 = ctx.forward(e4.clone());
    let fe6 = ctx.forward(e6.clone());
    let e4sq = ctx.product(&fe4, &fe4);
    let fe4sq = ctx.forward(e4sq);
    let y = ctx.product(&fe4sq, &fe4);
    let e6sq = ctx.product(&fe6, &fe6);
    let inv1728 = f.inv(f.to_mont(1728));
    let delta: Vec<u32> = y
        .iter()
        .zip(&e6sq)
        .map(|(&a, &b)| f.mul(f.sub(a, b), inv1728))
        .collect();
    let fy = ctx.forward(y);

    let (a, b) = miller_exponents(k);
    let tail: Vec<u32> = match (a[d - 1], b) {
        (0, 0) => {
            let mut one = vec![0u32; len];
            one[0] = f.one();
            one
        }
        (1, 0) => e4,
        (2, 0) => ctx.product(&fe4, &fe4),
        (0, 1) => e6,
        (1, 1) => ctx.product(&fe4, &fe6),
        (2, 1) => ctx.product(&fe4sq, &fe6),
        other => unreachable!("exponents {other:?} out of range"),
    };

    // forward transforms of Delta^j (j = 1..=d) and Y^j tail (j = 0..d)
    let fdelta = ctx.forward(delta);
    let mut delta_pows = vec![fdelta.clone()];
    for _ in 1..d {
        let next = ctx.product(delta_pows.last().unwrap(), &fdelta);
        delta_pows.push(ctx.forward(next));
    }
    let mut z = vec![ctx.forward(tail)];
    for _ in 1..d {
        let next = ctx.product(z.last().unwrap(), &fy);
        z.push(ctx.forward(next));
    }
    (0..d)
        .map(|j| {
            let g = ctx.product(&delta_pows[j], &z[d - 1 - j]);
            indices.iter().map(|&n| f.from_mont(g[n])).collect()
        })
        .collect()
}

/// Mixed-radix CRT over `moduli`, returning the symmetric lift.
struct Garner {
    moduli: Vec<u64>,
    /// `inv[i][j] = moduli[j]^{-1} mod moduli[i]` for `j < i`
    inv: Vec<Vec<u64>>,
    /// `prefix[i] = prod_{j < i} moduli[j]`
    prefix: Vec<BigUint>,
    half: BigUint,
    full: BigUint,
}

fn mod_pow(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

impl Garner {
    fn new(moduli: &[u32]) -> Self {
        let moduli: Vec<u64> = moduli.iter().map(|&p| p as u64).collect();
        let inv = moduli
            .iter()
            .enumerate()
            .map(|(i, &pi)| {
                moduli[..i]
                    .iter()
                    .map(|&pj| mod_pow(pj % pi, pi - 2, pi))
                    .collect()
            })
            .collect();
        let mut prefix = vec![BigUint::one()];
        for &p in &moduli {
            let next = prefix.last().unwrap() * p;
            prefix.push(next);
        }
        let full = prefix.pop().unwrap();
        let half = &full >> 1usize;
        Self {
            moduli,
            inv,
            prefix,
            half,
            full,
        }
    }

    fn lift(&self, residues: &[u32]) -> BigInt {
        let m = self.moduli.len();
        let mut digits = vec![0u64; m];
        for i in 0..m {
            let pi = self.moduli[i];
            let mut v = residues[i] as u64 % pi;
            for j in 0..i {
                // v = (v - digit_j) / p_j mod p_i
                let dj = digits[j] % pi;
                v = (v + pi - dj) % pi * self.inv[i][j] % pi;
            }
            digits[i] = v;
        }
        let mut x = BigUint::zero();
        for i in (0..m).rev() {
            x = x * self.moduli[i] + digits[i];
        }
        if x > self.half {
            -BigInt::from(&self.full - x)
        } else {
            BigInt::from(x)
        }
    }

    fn base_bits(&self, base: usize) -> u64 {
        self.prefix[base].bits()
    }
}

/// Expected coefficient size in bits for indices up to `max_index`.
fn bit_estimate(k: u32, d: usize, max_index: usize) -> u64 {
    let growth = (k as f64 - 1.0) / 2.0 * (max_index.max(2) as f64).log2();
    (growth + 64.0 + 4.0 * d as f64).ceil() as u64
}

/// `f_i(n)` for every echelon basis form and every `n` in `indices`.
pub fn echelon_values(k: u32, indices: &[usize]) -> Result<BasisValues> {
    let d = validate_weight(k)?;
    let mut idx: Vec<usize> = indices.to_vec();
    idx.sort_unstable();
    idx.dedup();
    if idx.first() == Some(&0) || idx.is_empty() {
        return Err(LabError::InvalidArgument(
            "indices must be a nonempty set of positive integers".into(),
        ));
    }
    let max_index = *idx.last().unwrap();
    if 2 * max_index + 1 > 1 << TWO_ADICITY {
        return Err(LabError::InvalidArgument(format!(
            "index {max_index} beyond the transform range"
        )));
    }
    let basis = miller_basis(k, d + 2)?;
    let transform = basis.transform();
    let sigma3 = divisor_power_sums(3, max_index + 1);
    let sigma5 = divisor_power_sums(5, max_index + 1);
    let available = ntt_primes(TWO_ADICITY, 190);

    let mut bits = bit_estimate(k, d, max_index);
    let mut residues: Vec<Vec<Vec<u32>>> = Vec::new();
    loop {
        let base = (bits as usize).div_ceil(30);
        let total = base + CHECK_MODULI;
        if total > available.len() {
            return Err(LabError::Numerical(format!(
                "weight {k} needs more than {} moduli",
                available.len()
            )));
        }
        let fresh: Vec<Vec<Vec<u32>>> = available[residues.len()..total]
            .par_iter()
            .map(|&p| {
                let g = monomial_residues(k, d, &sigma3, &sigma5, &idx, p);
                combine(transform, &g, p)
            })
            .collect();
        residues.extend(fresh);
        let moduli = &available[..total];
        let garner = Garner::new(moduli);
        let limit = garner.base_bits(base) - 1;
        let mut lifted = vec![Vec::with_capacity(idx.len()); d];
        let mut ok = true;
        'outer: for (i, row) in lifted.iter_mut().enumerate() {
            let mut buf = vec![0u32; total];
            for t in 0..idx.len() {
                for (m, r) in residues.iter().enumerate() {
                    buf[m] = r[i][t];
                }
                let v = garner.lift(&buf);
                if v.abs().bits() >= limit {
                    ok = false;
                    break 'outer;
                }
                row.push(v);
            }
        }
        if ok {
            return Ok(BasisValues {
                weight: k,
                indices: idx,
                values: lifted,
            });
        }
        bits += bits / 2;
    }
}

/// Residues of `f_i = sum_j U[i][j] g_j` from residues of the monomials.
fn combine(transform: &[Vec<BigInt>], g: &[Vec<u32>], p: u32) -> Vec<Vec<u32>> {
    let pm = BigInt::from(p);
    let u: Vec<Vec<u64>> = transform
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| {
                    let r = ((c % &pm) + &pm) % &pm;
                    r.to_u64().unwrap()
                })
                .collect()
        })
        .collect();
    let p = p as u64;
    let t_len = g[0].len();
    u.iter()
        .map(|row| {
            (0..t_len)
                .map(|t| {
                    row.iter()
                        .zip(g)
                        .fold(0u64, |acc, (&c, gj)| (acc + c * gj[t] as u64) % p) as u32
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_exact_basis() {
        for k in [12u32, 24, 34, 40, 58] {
            let exact = miller_basis(k, 400).unwrap();
            let idx: Vec<usize> = (1..400).collect();
            let mm = echelon_values(k, &idx).unwrap();
            for i in 0..exact.dimension() {
                for &n in &idx {
                    assert_eq!(mm.get(i, n).unwrap(), exact.form(i).coeff(n), "k={k} i={i} n={n}");
                }
            }
        }
    }

    #[test]
    fn sparse_indices() {
        let exact = miller_basis(36, 1000).unwrap();
        let idx = [997usize, 2, 500, 3, 2];
        let mm = echelon_values(36, &idx).unwrap();
        assert_eq!(mm.indices(), &[2, 3, 500, 997]);
        for i in 0..3 {
            for n in [2usize, 3, 500, 997] {
                assert_eq!(mm.get(i, n).unwrap(), exact.form(i).coeff(n));
            }
        }
        assert!(echelon_values(36, &[0, 4]).is_err());
    }

    #[test]
    fn garner_symmetric_lift() {
        let moduli = ntt_primes(TWO_ADICITY, 3);
        let g = Garner::new(&moduli);
        for v in [-123456789012345678i64, -1, 0, 5, 987654321987654321] {
            let r: Vec<u32> = moduli
                .iter()
                .map(|&p| (v as i128).rem_euclid(p as i128) as u32)
                .collect();
            assert_eq!(g.lift(&r), BigInt::from(v));
        }
    }
}
