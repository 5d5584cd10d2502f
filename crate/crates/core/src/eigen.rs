//! Hecke eigenforms of level one: `T_2` characteristic polynomial, exact
//! adjugate eigenvectors, high-precision roots and prime coefficients.
//!
//! For an eigenvalue `lambda` of `T_2` the column `j` of `adj(x I - T_2)` at
//! `x = lambda` is an eigenvector; dividing by its first entry gives the
//! coefficients `a_f(1..=d)` with `a_f(1) = 1`. Since `f = sum_i a_f(i) f_i`,
//! every `a_f(n)` is a fixed linear combination of echelon basis values.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::arith::primes_up_to;
use crate::error::{LabError, Result};
use crate::multimodular::{echelon_values, BasisValues};
use crate::poly::{is_squarefree, real_roots, round_div, Dyadic, IntPoly};
use crate::qseries::{hecke_matrix, miller_basis, validate_weight};

/// Tolerance on `|lambda_f(p)| <= 2`.
pub const DELIGNE_TOL: f64 = 1e-9;

/// Minimum working precision for the `T_2` eigenvalues, in bits.
const MIN_ROOT_BITS: u32 = 256;

/// Prime coefficient `a_f(p) = numer / 2^scale_bits`; exact when `scale_bits == 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeCoefficient {
    #[serde(serialize_with = "ser_bigint")]
    pub numer: BigInt,
    pub scale_bits: u32,
}

fn ser_bigint<S: serde::Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl PrimeCoefficient {
    pub fn is_exact(&self) -> bool {
        self.scale_bits == 0
    }

    /// `a_f(p) / p^{(k-1)/2}` for even `k`.
    pub fn normalized(&self, p: u64, k: u32) -> f64 {
        let half = BigInt::from(p).pow((k - 2) / 2);
        const GUARD: u32 = 64;
        let (num, den) = if self.scale_bits <= GUARD {
            (&self.numer << (GUARD - self.scale_bits) as usize, half)
        } else {
            (self.numer.clone(), half << (self.scale_bits - GUARD) as usize)
        };
        let q = round_div(&num, &den);
        crate::poly::to_f64_lossy(&q) / 2f64.powi(GUARD as i32) / (p as f64).sqrt()
    }
}

/// A normalized Hecke eigenform, known through its prime eigenvalues `p <= P`.
#[derive(Debug, Clone)]
pub struct EigenForm {
    weight: u32,
    index: usize,
    prime_bound: u64,
    primes: Vec<u64>,
    /// `lambda[p]` for prime `p`, `NaN` elsewhere
    lambda: Vec<f64>,
    angle: Vec<f64>,
    coefficients: Vec<PrimeCoefficient>,
}

impl EigenForm {
    fn from_parts(
        weight: u32,
        index: usize,
        prime_bound: u64,
        primes: Vec<u64>,
        lambdas: Vec<f64>,
        coefficients: Vec<PrimeCoefficient>,
    ) -> Result<Self> {
        let mut lambda = vec![f64::NAN; prime_bound as usize + 1];
        let mut angle = vec![f64::NAN; prime_bound as usize + 1];
        for (&p, &l) in primes.iter().zip(&lambdas) {
            if !l.is_finite() || l.abs() > 2.0 + DELIGNE_TOL {
                return Err(LabError::Numerical(format!(
                    "weight {weight} form {index}: |lambda({p})| = {} exceeds 2",
                    l.abs()
                )));
            }
            lambda[p as usize] = l;
            angle[p as usize] = (l / 2.0).clamp(-1.0, 1.0).acos();
        }
        Ok(Self {
            weight,
            index,
            prime_bound,
            primes,
            lambda,
            angle,
            coefficients,
        })
    }

    /// A form from its prime coefficients `a_f(p)` for every prime `p <= prime_bound`.
    pub fn from_coefficients(
        weight: u32,
        index: usize,
        prime_bound: u64,
        primes: Vec<u64>,
        coefficients: Vec<PrimeCoefficient>,
    ) -> Result<Self> {
        if primes != primes_up_to(prime_bound) || coefficients.len() != primes.len() {
            return Err(LabError::InvalidArgument(format!(
                "coefficients of weight {weight} form {index} do not cover the primes up to {prime_bound}"
            )));
        }
        let lambdas = primes
            .iter()
            .zip(&coefficients)
            .map(|(&p, a)| a.normalized(p, weight))
            .collect();
        Self::from_parts(weight, index, prime_bound, primes, lambdas, coefficients)
    }

    /// A form given directly by its prime eigenvalues (for experiments and
    /// model comparisons); no exact coefficients are attached.
    pub fn from_lambdas(weight: u32, prime_bound: u64, lambda: impl Fn(u64) -> f64) -> Result<Self> {
        let primes = primes_up_to(prime_bound);
        let lambdas = primes.iter().map(|&p| lambda(p)).collect();
        Self::from_parts(weight, 0, prime_bound, primes, lambdas, Vec::new())
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    /// Position among the eigenforms of this weight, ordered by `lambda(2)`.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn prime_bound(&self) -> u64 {
        self.prime_bound
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    fn slot(&self, p: u64) -> Result<usize> {
        if p > self.prime_bound {
            return Err(LabError::Coverage {
                prime: p,
                bound: self.prime_bound,
            });
        }
        if self.lambda[p as usize].is_nan() {
            return Err(LabError::InvalidArgument(format!("{p} is not prime")));
        }
        Ok(p as usize)
    }

    pub fn lambda_p(&self, p: u64) -> Result<f64> {
        self.slot(p).map(|i| self.lambda[i])
    }

    pub fn angle_p(&self, p: u64) -> Result<f64> {
        self.slot(p).map(|i| self.angle[i])
    }

    /// Unchecked lookup for hot loops; `p` must be a prime `<= prime_bound`.
    #[inline]
    pub(crate) fn lambda_unchecked(&self, p: u64) -> f64 {
        self.lambda[p as usize]
    }

    /// Prime eigenvalues in increasing order of `p`.
    pub fn lambdas(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.primes.iter().map(|&p| (p, self.lambda[p as usize]))
    }

    pub fn coefficients(&self) -> &[PrimeCoefficient] {
        &self.coefficients
    }

    /// Exact integer `a_f(p)`, when known.
    pub fn exact_coefficient(&self, p: u64) -> Option<&BigInt> {
        let i = self.primes.binary_search(&p).ok()?;
        self.coefficients
            .get(i)
            .filter(|c| c.is_exact())
            .map(|c| &c.numer)
    }

    /// Whether every stored prime coefficient is an exact integer.
    pub fn has_exact_coefficients(&self) -> bool {
        !self.coefficients.is_empty() && self.coefficients.iter().all(|c| c.is_exact())
    }
}

/// Characteristic polynomial `det(x I - M)` and adjugate `adj(x I - M)`
/// of an integer matrix by the Faddeev-LeVerrier recursion.
pub fn charpoly_adjugate(m: &[Vec<BigInt>]) -> (IntPoly, Vec<Vec<IntPoly>>) {
    let d = m.len();
    let identity = |c: &BigInt| -> Vec<Vec<BigInt>> {
        (0..d)
            .map(|i| (0..d).map(|j| if i == j { c.clone() } else { BigInt::zero() }).collect())
            .collect()
    };
    let mut b = identity(&BigInt::one());
    let mut bs = vec![b.clone()];
    let mut c = vec![BigInt::zero(); d + 1];
    c[d] = BigInt::one();
    for step in 1..=d {
        let a: Vec<Vec<BigInt>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|t| &m[i][t] * &b[t][j]).sum())
                    .collect()
            })
            .collect();
        let tr: BigInt = (0..d).map(|i| a[i][i].clone()).sum();
        let coeff = -(tr / BigInt::from(step));
        c[d - step] = coeff.clone();
        b = a;
        for (i, row) in b.iter_mut().enumerate() {
            row[i] += &coeff;
        }
        if step < d {
            bs.push(b.clone());
        }
    }
    debug_assert!(b.iter().flatten().all(|x| x.is_zero()));
    let adj = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| IntPoly::new((0..d).map(|e| bs[d - 1 - e][i][j].clone()).collect()))
                .collect()
        })
        .collect();
    (IntPoly::new(c), adj)
}

/// `T_2` data for one weight: matrix, characteristic polynomial and adjugate.
#[derive(Debug, Clone)]
pub struct HeckeSpectrum {
    pub weight: u32,
    pub matrix: Vec<Vec<BigInt>>,
    pub charpoly: IntPoly,
    pub adjugate: Vec<Vec<IntPoly>>,
}

impl HeckeSpectrum {
    pub fn new(k: u32) -> Result<Self> {
        let d = validate_weight(k)?;
        let basis = miller_basis(k, 2 * d + 3)?;
        let matrix = hecke_matrix(&basis, 2)?;
        let (charpoly, adjugate) = charpoly_adjugate(&matrix);
        if !is_squarefree(&charpoly) {
            return Err(LabError::RepeatedEigenvalue(k));
        }
        Ok(Self {
            weight: k,
            matrix,
            charpoly,
            adjugate,
        })
    }

    pub fn dimension(&self) -> usize {
        self.matrix.len()
    }

    /// `A_n(x) = sum_i adj[i][j](x) f_i(n)`: `a_f(n) = A_n(lambda) / A_1(lambda)`
    /// for every eigenvalue `lambda` at which column `j` does not vanish.
    pub fn coefficient_poly(&self, column: usize, basis_at_n: &[BigInt]) -> IntPoly {
        self.adjugate
            .iter()
            .zip(basis_at_n)
            .fold(IntPoly::zero(), |acc, (row, f)| acc.add(&row[column].scale(f)))
    }

    /// Real eigenvalues of `T_2`, ascending, to `bits` fractional bits.
    pub fn eigenvalues(&self, bits: u32) -> Result<Vec<Dyadic>> {
        let roots = real_roots(&self.charpoly, bits)?;
        if roots.len() != self.dimension() {
            return Err(LabError::NonRealSpectrum {
                weight: self.weight,
                found: roots.len(),
                expected: self.dimension(),
            });
        }
        Ok(roots)
    }

    /// Eigenvector coefficients `round(a_f(i) 2^t)`, `i = 1..=d`, at an eigenvalue.
    fn scaled_eigenvector(&self, root: &Dyadic, t: u32) -> Vec<BigInt> {
        let d = self.dimension();
        let scale_deg = d - 1;
        let col_values = |j: usize| -> Vec<BigInt> {
            (0..d)
                .map(|i| self.adjugate[i][j].eval_dyadic(&root.mant, root.bits, scale_deg))
                .collect()
        };
        // the column whose leading entry is largest in magnitude
        let (_, col) = (0..d)
            .map(|j| (j, col_values(j)))
            .max_by(|a, b| a.1[0].abs().cmp(&b.1[0].abs()).then(b.0.cmp(&a.0)))
            .expect("nonempty");
        let den = col[0].clone();
        let sign = if den.is_negative() { -BigInt::one() } else { BigInt::one() };
        let den = den.abs();
        col.iter()
            .map(|v| round_div(&((v * &sign) << t as usize), &den))
            .collect()
    }
}

/// Bits of `sum_i |f_i(p)|` beyond `p^{(k-1)/2}`, maximized over the indices.
fn excess_bits(values: &BasisValues) -> u32 {
    let k = values.weight();
    values
        .indices()
        .iter()
        .enumerate()
        .map(|(t, &n)| {
            let total: BigInt = (0..values.dimension())
                .map(|i| values.form_values(i)[t].abs())
                .sum();
            let size = total.bits() as f64 - (k as f64 - 1.0) / 2.0 * (n as f64).log2();
            size.max(0.0).ceil() as u32
        })
        .max()
        .unwrap_or(0)
}

/// All Hecke eigenforms of weight `k` with prime eigenvalues up to `prime_bound`.
pub fn eigenforms(k: u32, prime_bound: u64) -> Result<Vec<EigenForm>> {
    if prime_bound < 2 {
        return Err(LabError::InvalidArgument(format!(
            "prime bound {prime_bound} below 2"
        )));
    }
    let spectrum = HeckeSpectrum::new(k)?;
    let d = spectrum.dimension();
    let primes = primes_up_to(prime_bound);
    let idx: Vec<usize> = primes.iter().map(|&p| p as usize).collect();
    let values = echelon_values(k, &idx)?;

    let vectors: Vec<(Vec<BigInt>, u32)> = if d == 1 {
        vec![(vec![BigInt::one()], 0)]
    } else {
        let t = 80 + excess_bits(&values) + (d as f64).log2().ceil() as u32;
        let mut s = MIN_ROOT_BITS;
        loop {
            let fine = spectrum.eigenvalues(s + 64)?;
            let vectors: Vec<Vec<BigInt>> = fine
                .iter()
                .map(|r| spectrum.scaled_eigenvector(r, t))
                .collect();
            let stable = fine.iter().zip(&vectors).all(|(r, b)| {
                let coarse = Dyadic {
                    mant: r.with_bits(s),
                    bits: s,
                };
                let a = spectrum.scaled_eigenvector(&coarse, t);
                a.iter().zip(b).all(|(x, y)| (x - y).abs() <= BigInt::from(2))
            });
            if stable {
                break vectors.into_iter().map(|v| (v, t)).collect();
            }
            if s > 1 << 16 {
                return Err(LabError::Numerical(format!(
                    "eigenvectors of weight {k} did not stabilize"
                )));
            }
            s *= 2;
        }
    };

    vectors
        .into_iter()
        .enumerate()
        .map(|(index, (c, t))| {
            let coefficients: Vec<PrimeCoefficient> = (0..primes.len())
                .map(|pos| PrimeCoefficient {
                    numer: (0..d).map(|i| &c[i] * &values.form_values(i)[pos]).sum(),
                    scale_bits: t,
                })
                .collect();
            EigenForm::from_coefficients(k, index, prime_bound, primes.clone(), coefficients)
        })
        .collect()
}

/// Outcome of the exact multiplicativity checks on eigenvector coefficients.
#[derive(Debug, Clone, Serialize)]
pub struct RelationReport {
    pub weight: u32,
    pub pairs_checked: usize,
    pub squares_checked: usize,
    pub failures: Vec<(u64, u64)>,
}

impl RelationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check `a(p)a(q) = a(pq)` (`p != q`) and `a(p)^2 = a(p^2) + p^{k-1}` for all
/// eigenforms at once, exactly in `Z[x]/(charpoly)`, for primes `p, q <= bound`
/// with `pq <= range`.
pub fn check_relations_exact(k: u32, bound: u64, range: u64) -> Result<RelationReport> {
    let spectrum = HeckeSpectrum::new(k)?;
    let d = spectrum.dimension();
    let primes = primes_up_to(bound);
    let mut pairs = Vec::new();
    for (i, &p) in primes.iter().enumerate() {
        for &q in &primes[i..] {
            if p * q <= range {
                pairs.push((p, q));
            }
        }
    }
    let mut idx: Vec<usize> = vec![1];
    for &(p, q) in &pairs {
        idx.extend([p as usize, q as usize, (p * q) as usize]);
    }
    let values = echelon_values(k, &idx)?;
    let at = |n: u64| -> Vec<BigInt> {
        (0..d)
            .map(|i| values.get(i, n as usize).expect("index computed").clone())
            .collect()
    };
    let chi = &spectrum.charpoly;
    let mut report = RelationReport {
        weight: k,
        pairs_checked: 0,
        squares_checked: 0,
        failures: Vec::new(),
    };
    for j in 0..d {
        let a1 = spectrum.coefficient_poly(j, &at(1));
        if a1.rem_monic(chi).is_zero() {
            continue;
        }
        for &(p, q) in &pairs {
            let ap = spectrum.coefficient_poly(j, &at(p));
            let aq = spectrum.coefficient_poly(j, &at(q));
            let apq = spectrum.coefficient_poly(j, &at(p * q));
            let mut rhs = apq.mul(&a1);
            if p == q {
                let pk = BigInt::from(p).pow(k - 1);
                rhs = rhs.add(&a1.mul(&a1).scale(&pk));
            }
            let diff = ap.mul(&aq).sub(&rhs).rem_monic(chi);
            if p == q {
                report.squares_checked += 1;
            } else {
                report.pairs_checked += 1;
            }
            if !diff.is_zero() && !report.failures.contains(&(p, q)) {
                report.failures.push((p, q));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_eigenvalues() {
        let forms = eigenforms(12, 100).unwrap();
        assert_eq!(forms.len(), 1);
        let f = &forms[0];
        assert_eq!(f.exact_coefficient(2), Some(&BigInt::from(-24)));
        assert_eq!(f.exact_coefficient(3), Some(&BigInt::from(252)));
        assert!((f.lambda_p(2).unwrap() + 0.530330).abs() < 1e-6);
        let expect = -24.0 / 2f64.powf(5.5);
        assert!((f.lambda_p(2).unwrap() - expect).abs() < 1e-15);
        assert!(matches!(f.lambda_p(101), Err(LabError::Coverage { .. })));
        assert!(f.lambda_p(4).is_err());
        let th = f.angle_p(2).unwrap();
        assert!((2.0 * th.cos() - f.lambda_p(2).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn weight_16_eigenvalue() {
        let f = &eigenforms(16, 10).unwrap()[0];
        assert_eq!(f.exact_coefficient(2), Some(&BigInt::from(216)));
        assert!((f.lambda_p(2).unwrap() - 1.193242).abs() < 1e-6);
    }

    #[test]
    fn weight_24_eigenvalues() {
        // a(2) = 540 -+ 12 sqrt(144169)
        let forms = eigenforms(24, 50).unwrap();
        assert_eq!(forms.len(), 2);
        let r = 12.0 * 144169f64.sqrt();
        for (f, a2) in forms.iter().zip([540.0 - r, 540.0 + r]) {
            let expect = a2 / 2f64.powf(11.5);
            assert!((f.lambda_p(2).unwrap() - expect).abs() < 1e-13);
            assert!(!f.has_exact_coefficients());
        }
    }

    #[test]
    fn errors_reported() {
        assert!(matches!(eigenforms(14, 100), Err(LabError::EmptySpace(14))));
        assert!(matches!(eigenforms(11, 100), Err(LabError::InvalidWeight(11))));
        assert!(eigenforms(12, 1).is_err());
    }

    #[test]
    fn charpoly_of_small_matrix() {
        let m = vec![
            vec![BigInt::from(2), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(3)],
        ];
        let (chi, adj) = charpoly_adjugate(&m);
        // x^2 - 5x + 5
        assert_eq!(chi, IntPoly::new(vec![5.into(), (-5).into(), 1.into()]));
        // adj(xI - M) = [[x - 3, 1], [1, x - 2]]
        assert_eq!(adj[0][0], IntPoly::new(vec![(-3).into(), 1.into()]));
        assert_eq!(adj[0][1], IntPoly::new(vec![1.into()]));
        assert_eq!(adj[1][1], IntPoly::new(vec![(-2).into(), 1.into()]));
    }

    #[test]
    fn exact_relations_weight_36() {
        let r = check_relations_exact(36, 30, 900).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        assert!(r.pairs_checked > 0 && r.squares_checked > 0);
    }
}
