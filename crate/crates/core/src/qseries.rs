//! Truncated q-expansions with integer coefficients, level-one Eisenstein
//! series, the discriminant form, the echelonized cusp form basis and Hecke
//! operator matrices.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{LabError, Result};

/// Power series `sum a(n) q^n` truncated at `q^precision`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    coeffs: Vec<BigInt>,
}

impl QSeries {
    pub fn new(coeffs: Vec<BigInt>) -> Self {
        assert!(!coeffs.is_empty(), "precision must be positive");
        Self { coeffs }
    }

    pub fn zero(precision: usize) -> Self {
        Self::new(vec![BigInt::zero(); precision])
    }

    pub fn one(precision: usize) -> Self {
        let mut s = Self::zero(precision);
        s.coeffs[0] = BigInt::one();
        s
    }

    pub fn precision(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, n: usize) -> &BigInt {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn truncate(&self, precision: usize) -> Self {
        assert!(precision >= 1 && precision <= self.precision());
        Self::new(self.coeffs[..precision].to_vec())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.precision().min(other.precision());
        Self::new((0..n).map(|i| &self.coeffs[i] + &other.coeffs[i]).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.precision().min(other.precision());
        Self::new((0..n).map(|i| &self.coeffs[i] - &other.coeffs[i]).collect())
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Exact division of every coefficient; panics if not divisible.
    pub fn div_exact(&self, c: &BigInt) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .map(|a| {
                    let (q, r) = num_integer::Integer::div_rem(a, c);
                    assert!(r.is_zero(), "coefficient {a} not divisible by {c}");
                    q
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.precision().min(other.precision());
        let mut out = vec![BigInt::zero(); n];
        let first_b = other.coeffs[..n].iter().position(|c| !c.is_zero());
        let Some(first_b) = first_b else {
            return Self::new(out);
        };
        for (i, a) in self.coeffs[..n].iter().enumerate() {
            if a.is_zero() || i + first_b >= n {
                continue;
            }
            for (j, b) in other.coeffs[first_b..n - i].iter().enumerate() {
                out[i + first_b + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.precision());
        let mut base = self.clone();
        let mut e = e;
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

    /// Index of the first nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }
}

/// `sigma_r(n)` for `0 <= n < len` (entry 0 unused), exact in `u128`.
pub fn divisor_power_sums(r: u32, len: usize) -> Vec<u128> {
    let mut s = vec![0u128; len];
    for d in 1..len {
        let dr = (d as u128).pow(r);
        let mut m = d;
        while m < len {
            s[m] += dr;
            m += d;
        }
    }
    s
}

/// `E_4 = 1 + 240 sum sigma_3(n) q^n` or `E_6 = 1 - 504 sum sigma_5(n) q^n`.
pub fn eisenstein(weight: u32, precision: usize) -> Result<QSeries> {
    let (r, c) = match weight {
        4 => (3, BigInt::from(240)),
        6 => (5, BigInt::from(-504)),
        _ => return Err(LabError::InvalidWeight(weight)),
    };
    if precision == 0 {
        return Err(LabError::PrecisionTooSmall { got: 0, need: 1 });
    }
    let sig = divisor_power_sums(r, precision);
    let mut coeffs: Vec<BigInt> = sig.iter().map(|&s| &c * BigInt::from(s)).collect();
    coeffs[0] = BigInt::one();
    Ok(QSeries::new(coeffs))
}

/// The discriminant `(E_4^3 - E_6^2) / 1728`, whose coefficients are Ramanujan's tau.
pub fn delta_expansion(precision: usize) -> Result<QSeries> {
    if precision < 2 {
        return Err(LabError::PrecisionTooSmall { got: precision, need: 2 });
    }
    let e4 = eisenstein(4, precision)?;
    let e6 = eisenstein(6, precision)?;
    let num = e4.mul(&e4).mul(&e4).sub(&e6.mul(&e6));
    Ok(num.div_exact(&BigInt::from(1728)))
}

/// Dimension of the space of level-one cusp forms of weight `k`.
pub fn cusp_dimension(k: u32) -> usize {
    if k % 2 == 1 || k < 12 {
        return 0;
    }
    let base = (k / 12) as usize;
    if k % 12 == 2 {
        base - 1
    } else {
        base
    }
}

/// Exponents `(a_i, b)` with `g_i = Delta^i E_4^{a_i} E_6^b` of weight `k`, `i = 1..=d`.
pub fn miller_exponents(k: u32) -> (Vec<u32>, u32) {
    let d = cusp_dimension(k) as u32;
    let b = if k % 4 == 0 { 0 } else { 1 };
    let a = (1..=d).map(|i| (k - 12 * i - 6 * b) / 4).collect();
    (a, b)
}

pub(crate) fn validate_weight(k: u32) -> Result<usize> {
    if k % 2 == 1 || k < 12 {
        return Err(LabError::InvalidWeight(k));
    }
    match cusp_dimension(k) {
        0 => Err(LabError::EmptySpace(k)),
        d => Ok(d),
    }
}

/// Reduced echelon basis `f_i = q^i + O(q^{d+1})`, `i = 1..=d`, of weight `k` cusp forms.
#[derive(Debug, Clone)]
pub struct ModularBasis {
    weight: u32,
    forms: Vec<QSeries>,
    /// `f_i = sum_j transform[i][j] g_j` in terms of the monomials `g_j`.
    transform: Vec<Vec<BigInt>>,
}

impl ModularBasis {
    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn dimension(&self) -> usize {
        self.forms.len()
    }

    pub fn precision(&self) -> usize {
        self.forms[0].precision()
    }

    /// Form `i` in 0-based order, i.e. `q^{i+1} + O(q^{d+1})`.
    pub fn form(&self, i: usize) -> &QSeries {
        &self.forms[i]
    }

    pub fn forms(&self) -> &[QSeries] {
        &self.forms
    }

    pub fn transform(&self) -> &[Vec<BigInt>] {
        &self.transform
    }
}

/// Echelonize the monomials `Delta^i E_4^{a_i} E_6^b` by exact integer row operations.
pub fn miller_basis(k: u32, precision: usize) -> Result<ModularBasis> {
    let d = validate_weight(k)?;
    if precision < d + 2 {
        return Err(LabError::PrecisionTooSmall {
            got: precision,
            need: d + 2,
        });
    }
    let (a, b) = miller_exponents(k);
    let delta = delta_expansion(precision)?;
    let e4 = eisenstein(4, precision)?;
    let e6 = eisenstein(6, precision)?;
    let y = e4.mul(&e4).mul(&e4);
    let tail = e4.pow(a[d - 1]).mul(&e6.pow(b));
    // g_i = Delta^i Y^{d-i} tail, since a_i = a_d + 3(d - i)
    let mut delta_pows = vec![delta.clone()];
    for _ in 1..d {
        let next = delta_pows.last().unwrap().mul(&delta);
        delta_pows.push(next);
    }
    let mut z = vec![tail];
    for _ in 1..d {
        let next = z.last().unwrap().mul(&y);
        z.push(next);
    }
    let g: Vec<QSeries> = (0..d).map(|i| delta_pows[i].mul(&z[d - 1 - i])).collect();
    let head: Vec<Vec<BigInt>> = g
        .iter()
        .map(|s| s.coeffs()[1..=d].to_vec())
        .collect();
    let transform = echelon_transform(&head);
    let forms = transform
        .iter()
        .map(|row| {
            row.iter()
                .zip(&g)
                .filter(|(c, _)| !c.is_zero())
                .fold(QSeries::zero(precision), |acc, (c, s)| acc.add(&s.scale(c)))
        })
        .collect();
    Ok(ModularBasis {
        weight: k,
        forms,
        transform,
    })
}

/// Unitriangular `U` with `(U G)[i][j] = delta_ij`, given `G[i][j] = g_i(j + 1)` upper unitriangular.
pub fn echelon_transform(head: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let d = head.len();
    let mut u: Vec<Vec<BigInt>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    // rows of U G, reduced from the bottom up
    let mut rows: Vec<Vec<BigInt>> = head.to_vec();
    for i in (0..d).rev() {
        assert!(rows[i][i].is_one() && rows[i][..i].iter().all(|c| c.is_zero()));
        for j in i + 1..d {
            let c = rows[i][j].clone();
            if c.is_zero() {
                continue;
            }
            let (rj, uj) = (rows[j].clone(), u[j].clone());
            for t in 0..d {
                rows[i][t] -= &c * &rj[t];
                u[i][t] -= &c * &uj[t];
            }
        }
    }
    u
}

/// Matrix of `T_p` in the echelon basis: entry `[i][j]` is the coefficient of
/// `q^{i+1}` in `T_p f_{j+1}`, namely `f_j((i+1) p) + p^{k-1} f_j((i+1)/p)`.
pub fn hecke_matrix(basis: &ModularBasis, p: u64) -> Result<Vec<Vec<BigInt>>> {
    if !crate::arith::is_prime(p) {
        return Err(LabError::InvalidArgument(format!("{p} is not prime")));
    }
    let d = basis.dimension();
    let need = p as usize * d + 1;
    if basis.precision() < need {
        return Err(LabError::PrecisionTooSmall {
            got: basis.precision(),
            need,
        });
    }
    let pk = BigInt::from(p).pow(basis.weight() - 1);
    let m = (0..d)
        .map(|i| {
            let n = i + 1;
            (0..d)
                .map(|j| {
                    let f = basis.form(j);
                    let mut v = f.coeff(n * p as usize).clone();
                    if n % p as usize == 0 {
                        v += &pk * f.coeff(n / p as usize);
                    }
                    v
                })
                .collect()
        })
        .collect();
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(s: &QSeries) -> Vec<i64> {
        s.coeffs().iter().map(|c| i64::try_from(c).unwrap()).collect()
    }

    #[test]
    fn eisenstein_examples() {
        assert_eq!(ints(&eisenstein(4, 3).unwrap()), vec![1, 240, 2160]);
        assert_eq!(ints(&eisenstein(6, 2).unwrap()), vec![1, -504]);
        assert_eq!(ints(&eisenstein(4, 1).unwrap()), vec![1]);
        assert!(matches!(eisenstein(8, 5), Err(LabError::InvalidWeight(8))));
    }

    #[test]
    fn delta_first_coefficients() {
        let d = delta_expansion(8).unwrap();
        assert_eq!(ints(&d), vec![0, 1, -24, 252, -1472, 4830, -6048, -16744]);
        assert!(delta_expansion(1).is_err());
    }

    #[test]
    fn dimensions() {
        assert_eq!(cusp_dimension(12), 1);
        assert_eq!(cusp_dimension(14), 0);
        assert_eq!(cusp_dimension(24), 2);
        assert_eq!(cusp_dimension(26), 1);
        assert_eq!(cusp_dimension(200), 16);
        assert!(matches!(miller_basis(14, 10), Err(LabError::EmptySpace(14))));
        assert!(matches!(miller_basis(13, 10), Err(LabError::InvalidWeight(13))));
        assert!(matches!(
            miller_basis(24, 3),
            Err(LabError::PrecisionTooSmall { .. })
        ));
    }

    #[test]
    fn basis_is_echelon() {
        for k in [24u32, 36, 48, 60] {
            let b = miller_basis(k, 30).unwrap();
            let d = b.dimension();
            for i in 0..d {
                for n in 0..=d {
                    let expect = i64::from(n == i + 1);
                    assert_eq!(*b.form(i).coeff(n), BigInt::from(expect), "k={k} i={i} n={n}");
                }
            }
        }
    }

    #[test]
    fn hecke_matrix_small_weights() {
        let b12 = miller_basis(12, 10).unwrap();
        assert_eq!(hecke_matrix(&b12, 2).unwrap(), vec![vec![BigInt::from(-24)]]);
        let b16 = miller_basis(16, 10).unwrap();
        assert_eq!(hecke_matrix(&b16, 2).unwrap(), vec![vec![BigInt::from(216)]]);
        let b24 = miller_basis(24, 4).unwrap();
        assert!(hecke_matrix(&b24, 2).is_err());
    }

    #[test]
    fn weight_24_trace() {
        // eigenvalues of T_2 at weight 24 are 540 +- 12 sqrt(144169)
        let b = miller_basis(24, 10).unwrap();
        let m = hecke_matrix(&b, 2).unwrap();
        assert_eq!(&m[0][0] + &m[1][1], BigInt::from(1080));
        let det = &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0];
        assert_eq!(det, BigInt::from(540i64 * 540 - 144 * 144169));
    }
}
