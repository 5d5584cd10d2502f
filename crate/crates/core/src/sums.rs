//! Partial sums `S_f(x)`, first sign changes, the comparison function `h_x`
//! and friable sums `Psi(x, y; g)`.

use std::collections::HashMap;

use num_bigint::{BigInt, Sign};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{max_power_below, primes_up_to, sym_power_trace, visit_friable, FactorSieve, FactoredInt};
use crate::eigen::EigenForm;
use crate::error::{LabError, Result};
use crate::hecke::{ensure_coverage, lambda_table};

/// Threshold below which `lambda_f(n)` counts as negative.
pub const SIGN_TOL: f64 = 1e-12;

/// Fitted constant bounding `Psi(x, y; tau) e^{u/2} / (x log x)` over decay scans.
pub const DECAY_CONSTANT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumReport {
    pub x: f64,
    pub value: f64,
    /// `value / (x log x)`; absent when `x <= 1`.
    pub normalized: Option<f64>,
    pub term_count: u64,
}

impl SumReport {
    fn new(x: f64, value: f64, term_count: u64) -> Self {
        let normalized = (x > 1.0).then(|| value / (x * x.ln()));
        Self {
            x,
            value,
            normalized,
            term_count,
        }
    }
}

fn floor_index(x: f64) -> Result<u64> {
    if !x.is_finite() {
        return Err(LabError::InvalidArgument(format!("x = {x} is not finite")));
    }
    Ok(if x < 1.0 { 0 } else { x.floor() as u64 })
}

/// `S_f(x) = sum_{n <= x} lambda_f(n)`.
pub fn partial_sum(form: &EigenForm, x: f64) -> Result<SumReport> {
    let n = floor_index(x)?;
    if n == 0 {
        return Ok(SumReport::new(x, 0.0, 0));
    }
    let sieve = FactorSieve::new(n);
    let lam = lambda_table(form, &sieve, n)?;
    Ok(SumReport::new(x, lam[1..].iter().sum(), n))
}

/// Running sums `S_f(n)` for `n = 1..=limit` (entry 0 is 0).
pub fn partial_sum_profile(form: &EigenForm, limit: u64) -> Result<Vec<f64>> {
    let sieve = FactorSieve::new(limit.max(1));
    let lam = lambda_table(form, &sieve, limit)?;
    let mut acc = 0.0;
    Ok(lam
        .iter()
        .enumerate()
        .map(|(n, &l)| {
            if n > 0 {
                acc += l;
            }
            acc
        })
        .collect())
}

/// Exact signs of `a_f(n)` for `n <= limit`, from exact prime coefficients.
struct ExactSigns<'a> {
    form: &'a EigenForm,
    pk: HashMap<u64, BigInt>,
    memo: HashMap<(u64, u32), Sign>,
}

impl<'a> ExactSigns<'a> {
    fn new(form: &'a EigenForm) -> Option<Self> {
        form.has_exact_coefficients().then(|| Self {
            form,
            pk: HashMap::new(),
            memo: HashMap::new(),
        })
    }

    /// Sign of `a_f(p^e)` via `a(p^{b+1}) = a(p) a(p^b) - p^{k-1} a(p^{b-1})`.
    fn prime_power(&mut self, p: u64, e: u32) -> Result<Sign> {
        if let Some(&s) = self.memo.get(&(p, e)) {
            return Ok(s);
        }
        let ap = self
            .form
            .exact_coefficient(p)
            .ok_or(LabError::Coverage {
                prime: p,
                bound: self.form.prime_bound(),
            })?
            .clone();
        let k = self.form.weight();
        let pk = self
            .pk
            .entry(p)
            .or_insert_with(|| BigInt::from(p).pow(k - 1))
            .clone();
        let (mut prev, mut cur) = (BigInt::from(1), ap.clone());
        for _ in 1..e {
            let next = &ap * &cur - &pk * &prev;
            prev = cur;
            cur = next;
        }
        let s = if e == 0 { Sign::Plus } else { cur.sign() };
        self.memo.insert((p, e), s);
        Ok(s)
    }

    fn is_negative(&mut self, n: &FactoredInt) -> Result<bool> {
        let mut negative = false;
        for &(p, e) in n.factors() {
            match self.prime_power(p, e)? {
                Sign::NoSign => return Ok(false),
                Sign::Minus => negative = !negative,
                Sign::Plus => {}
            }
        }
        Ok(negative)
    }
}

/// Smallest `n <= limit` with `lambda_f(n) < 0`. Uses exact integer
/// coefficients when the form carries them, else `lambda < -SIGN_TOL`.
pub fn first_sign_change(form: &EigenForm, limit: u64) -> Result<Option<u64>> {
    if limit == 0 {
        return Ok(None);
    }
    ensure_coverage(form, limit)?;
    let sieve = FactorSieve::new(limit);
    if let Some(mut exact) = ExactSigns::new(form) {
        for n in 2..=limit {
            if exact.is_negative(&sieve.factor(n))? {
                return Ok(Some(n));
            }
        }
        return Ok(None);
    }
    let lam = lambda_table(form, &sieve, limit)?;
    Ok((1..=limit).find(|&n| lam[n as usize] < -SIGN_TOL))
}

/// `alpha(log p / log x) = 2 cos(pi / (m + 1))` where `m = max{m : p^m <= x}`.
pub fn hx_prime_value(x: f64, p: u64) -> f64 {
    if (p as f64) > x {
        return 0.0;
    }
    match max_power_below(p, x) {
        1 => 0.0,
        2 => 1.0,
        m => 2.0 * (std::f64::consts::PI / (m as f64 + 1.0)).cos(),
    }
}

fn check_hx_range(x: f64) -> Result<()> {
    if !(x >= 2.0) || !x.is_finite() {
        return Err(LabError::InvalidArgument(format!("h_x needs x >= 2, got {x}")));
    }
    Ok(())
}

/// `h_x(n)`: zero unless `n` is squarefree with all prime factors at most `x`,
/// else the product of `alpha(log p / log x)`.
pub fn hx_value(x: f64, n: &FactoredInt) -> Result<f64> {
    check_hx_range(x)?;
    if !n.is_squarefree() {
        return Ok(0.0);
    }
    Ok(n.factors().iter().map(|&(p, _)| hx_prime_value(x, p)).product())
}

/// `sum_{n <= x} h_x(n)`, enumerating squarefree `sqrt(x)`-friable `n` (the
/// only support of `h_x`, since `alpha` vanishes beyond `sqrt x`).
pub fn hx_sum(x: f64) -> Result<SumReport> {
    if !(x >= 1.0) || !x.is_finite() {
        return Err(LabError::InvalidArgument(format!("h_x sum needs x >= 1, got {x}")));
    }
    let n_max = x.floor() as u64;
    let primes: Vec<u64> = primes_up_to(x.sqrt().floor() as u64)
        .into_iter()
        .filter(|&p| p * p <= n_max)
        .collect();
    let alpha: HashMap<u64, f64> = primes.iter().map(|&p| (p, hx_prime_value(x, p))).collect();
    let mut total = 0.0;
    visit_friable(n_max, &primes, true, &|p, _| alpha[&p], &mut |_, v| total += v);
    Ok(SumReport::new(x, total, n_max))
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub x: f64,
    pub partial_sum: f64,
    pub hx_sum: f64,
    /// Whether `lambda_f(n) >= 0` for all `n <= x`; otherwise the check is vacuous.
    pub nonnegative: bool,
    pub holds: bool,
}

/// Check `S_f(x) >= sum_{n <= x} h_x(n)` when `lambda_f(n) >= 0` for all `n <= x`.
pub fn positivity_witness_check(form: &EigenForm, x: f64) -> Result<WitnessReport> {
    let n = floor_index(x)?;
    let s = partial_sum(form, x)?;
    let h = if n == 0 { 0.0 } else { hx_sum(x)?.value };
    let nonnegative = first_sign_change(form, n)?.is_none();
    let slack = 1e-9 * h.abs().max(1.0);
    Ok(WitnessReport {
        x,
        partial_sum: s.value,
        hx_sum: h,
        nonnegative,
        holds: !nonnegative || s.value >= h - slack,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HxPrimeReport {
    pub x: f64,
    pub sum: f64,
    pub two_loglog: f64,
    pub difference: f64,
}

/// `sum_{p <= x} h_x(p) / p` against `2 log log x`.
pub fn hx_prime_sum(x: f64) -> Result<HxPrimeReport> {
    if !(x >= 10.0) || !x.is_finite() {
        return Err(LabError::InvalidArgument(format!("prime sum needs x >= 10, got {x}")));
    }
    let sum: f64 = primes_up_to(x.floor() as u64)
        .into_iter()
        .map(|p| hx_prime_value(x, p) / p as f64)
        .sum();
    let two_loglog = 2.0 * x.ln().ln();
    Ok(HxPrimeReport {
        x,
        sum,
        two_loglog,
        difference: sum - two_loglog,
    })
}

/// Multiplicative weight for friable sums.
#[derive(Debug, Clone, Copy)]
pub enum Weight<'a> {
    Unit,
    Tau,
    Lambda(&'a EigenForm),
}

/// `Psi(x, y; g) = sum_{n <= x, P(n) <= y} g(n)`, with `P(1) = 1`.
pub fn friable_sum(x: f64, y: f64, g: Weight<'_>) -> Result<SumReport> {
    if !(y >= 1.0) || !y.is_finite() {
        return Err(LabError::InvalidArgument(format!("friability bound y = {y} below 1")));
    }
    let n_max = floor_index(x)?;
    let y_int = y.min(n_max.max(1) as f64).floor() as u64;
    let primes = primes_up_to(y_int);
    let mut total = 0.0;
    let mut count = 0u64;
    let mut visit = |_: u64, v: f64| {
        total += v;
        count += 1;
    };
    match g {
        Weight::Unit => visit_friable(n_max, &primes, false, &|_, _| 1.0, &mut visit),
        Weight::Tau => visit_friable(n_max, &primes, false, &|_, a| (a + 1) as f64, &mut visit),
        Weight::Lambda(form) => {
            ensure_coverage(form, y_int)?;
            visit_friable(
                n_max,
                &primes,
                false,
                &|p, a| sym_power_trace(form.lambda_unchecked(p), a),
                &mut visit,
            )
        }
    }
    Ok(SumReport::new(x, total, count))
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub psi: f64,
    /// `psi / (x log x)`
    pub normalized: f64,
    /// `psi e^{u/2} / (x log x)`
    pub bound_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayScan {
    pub rows: Vec<DecayRow>,
    pub constant: f64,
    /// Every bound ratio is at most `constant`.
    pub bounded: bool,
    /// The ratio at the largest `u` does not exceed the ratio at the smallest `u`.
    pub non_explosive: bool,
}

/// `Psi(x, y; tau) e^{u/2} / (x log x)` over a grid, rows ordered as given.
pub fn friable_decay_scan(grid: &[(f64, f64)]) -> Result<DecayScan> {
    for &(x, y) in grid {
        if !(10.0..=x).contains(&y) {
            return Err(LabError::InvalidArgument(format!(
                "decay scan needs 10 <= y <= x, got x = {x}, y = {y}"
            )));
        }
    }
    let rows: Vec<DecayRow> = grid
        .par_iter()
        .map(|&(x, y)| {
            let psi = friable_sum(x, y, Weight::Tau)?.value;
            let u = x.ln() / y.ln();
            let normalized = psi / (x * x.ln());
            Ok(DecayRow {
                x,
                y,
                u,
                psi,
                normalized,
                bound_ratio: normalized * (u / 2.0).exp(),
            })
        })
        .collect::<Result<_>>()?;
    let bounded = rows.iter().all(|r| r.bound_ratio <= DECAY_CONSTANT);
    let by_u = |a: &&DecayRow, b: &&DecayRow| a.u.total_cmp(&b.u);
    let non_explosive = match (rows.iter().min_by(by_u), rows.iter().max_by(by_u)) {
        (Some(lo), Some(hi)) => hi.bound_ratio <= lo.bound_ratio,
        _ => true,
    };
    Ok(DecayScan {
        rows,
        constant: DECAY_CONSTANT,
        bounded,
        non_explosive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fi(n: u64) -> FactoredInt {
        FactoredInt::new(n).unwrap()
    }

    #[test]
    fn delta_partial_sums() {
        let f = &crate::eigen::eigenforms(12, 100).unwrap()[0];
        assert_eq!(partial_sum(f, 1.0).unwrap().value, 1.0);
        assert_eq!(partial_sum(f, 0.5).unwrap().value, 0.0);
        assert_eq!(partial_sum(f, 0.5).unwrap().normalized, None);
        let s3 = partial_sum(f, 3.0).unwrap();
        assert!((s3.value - 1.068404).abs() < 1e-6);
        assert_eq!(s3.term_count, 3);
        assert_eq!(first_sign_change(f, 100).unwrap(), Some(2));
    }

    #[test]
    fn hx_examples() {
        assert_eq!(hx_value(100.0, &fi(11)).unwrap(), 0.0);
        assert!((hx_value(100.0, &fi(7)).unwrap() - 1.0).abs() < 1e-15);
        let two = hx_value(100.0, &fi(2)).unwrap();
        assert!((two - 2.0 * (std::f64::consts::PI / 7.0).cos()).abs() < 1e-15);
        assert!((two - 1.801938).abs() < 1e-6);
        assert_eq!(hx_value(100.0, &fi(4)).unwrap(), 0.0);
        assert!(hx_value(1.5, &fi(1)).is_err());
        assert_eq!(hx_sum(2.0).unwrap().value, 1.0);
    }

    #[test]
    fn friable_examples() {
        assert_eq!(friable_sum(10.0, 2.0, Weight::Tau).unwrap().value, 10.0);
        assert_eq!(friable_sum(10.0, 3.0, Weight::Tau).unwrap().value, 19.0);
        assert_eq!(friable_sum(1000.0, 2.0, Weight::Unit).unwrap().value, 10.0);
        let f = &crate::eigen::eigenforms(16, 100).unwrap()[0];
        let psi = friable_sum(100.0, 100.0, Weight::Lambda(f)).unwrap().value;
        let s = partial_sum(f, 100.0).unwrap().value;
        assert!((psi - s).abs() < 1e-12);
        assert!(friable_sum(10.0, 0.5, Weight::Tau).is_err());
    }

    #[test]
    fn prime_sum_small() {
        let r = hx_prime_sum(100.0).unwrap();
        let direct: f64 = primes_up_to(10)
            .iter()
            .map(|&p| hx_prime_value(100.0, p) / p as f64)
            .sum();
        assert!((r.sum - direct).abs() < 1e-15);
        assert!(hx_prime_sum(5.0).is_err());
    }
}
