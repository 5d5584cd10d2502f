//! Truncated Dirichlet series `sum_{n <= N} lambda_f(n) n^{-s}`, friable Euler
//! products `L_y(s, f)`, and empirical checks of the friable approximation
//! `S_f(x) ~ Psi(x, y; lambda_f)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{primes_up_to, sym_power_trace, visit_friable, FactorSieve};
use crate::eigen::EigenForm;
use crate::error::{LabError, Result};
use crate::hecke::{ensure_coverage, lambda_table};

/// Constant for the boundedness assertion on normalized friable residuals.
pub const RESIDUAL_CONSTANT: f64 = 10.0;

fn check_sigma(s: Complex64) -> Result<()> {
    if !(s.re >= 1.0) || !s.im.is_finite() {
        return Err(LabError::SigmaTooSmall { sigma: s.re, min: 1.0 });
    }
    Ok(())
}

/// `n^{-s}`
fn n_pow_neg(n: f64, s: Complex64) -> Complex64 {
    let l = n.ln();
    Complex64::from_polar((-s.re * l).exp(), -s.im * l)
}

/// `sum_{n > N} tau(n) n^{-sigma} <= sigma N^{1-sigma} ((log N + 1)/(sigma - 1) + 1/(sigma - 1)^2)`,
/// from partial summation with `sum_{n <= t} tau(n) <= t (log t + 1)`.
pub fn dirichlet_tail_bound(sigma: f64, n: u64) -> f64 {
    let d = sigma - 1.0;
    let ln = (n as f64).ln();
    sigma * (-d * ln).exp() * ((ln + 1.0) / d + 1.0 / (d * d))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LValue {
    pub re: f64,
    pub im: f64,
    pub terms: u64,
    pub tail_bound: f64,
}

impl LValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `sum_{n <= N} lambda_f(n) n^{-s}`; requires `Re s >= 1 + 1/log N`.
pub fn truncated_l(form: &EigenForm, s: Complex64, terms: u64) -> Result<LValue> {
    if terms < 2 {
        return Err(LabError::InvalidArgument("need at least 2 terms".into()));
    }
    let min = 1.0 + 1.0 / (terms as f64).ln();
    if !(s.re >= min) {
        return Err(LabError::SigmaTooSmall { sigma: s.re, min });
    }
    let sieve = FactorSieve::new(terms);
    let lam = lambda_table(form, &sieve, terms)?;
    let real = s.im == 0.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, &l) in lam.iter().enumerate().skip(1) {
        acc += if real {
            Complex64::new(l * (n as f64).powf(-s.re), 0.0)
        } else {
            l * n_pow_neg(n as f64, s)
        };
    }
    Ok(LValue {
        re: acc.re,
        im: acc.im,
        terms,
        tail_bound: dirichlet_tail_bound(s.re, terms),
    })
}

/// `1 / (1 - lambda p^{-s} + p^{-2s})`
pub fn local_factor(lambda: f64, p: u64, s: Complex64) -> Complex64 {
    let z = n_pow_neg(p as f64, s);
    (Complex64::new(1.0, 0.0) - lambda * z + z * z).inv()
}

/// `log` of the local factor as `-log(1 - alpha z) - log(1 - conj(alpha) z)`,
/// `z = p^{-s}`, each term on the principal branch (`|alpha z| <= 1/2`).
fn local_log(lambda: f64, p: u64, s: Complex64) -> Complex64 {
    let z = n_pow_neg(p as f64, s);
    let theta = (lambda / 2.0).clamp(-1.0, 1.0).acos();
    let alpha = Complex64::from_polar(1.0, theta);
    let one = Complex64::new(1.0, 0.0);
    -((one - alpha * z).ln() + (one - alpha.conj() * z).ln())
}

/// `log L_y(s, f) = sum_{p <= y} log` of local factors.
pub fn euler_ly_log(form: &EigenForm, s: Complex64, y: f64) -> Result<Complex64> {
    check_sigma(s)?;
    let yi = if y < 2.0 { 1 } else { y.floor() as u64 };
    ensure_coverage(form, yi)?;
    Ok(form
        .lambdas()
        .take_while(|&(p, _)| p <= yi)
        .map(|(p, l)| local_log(l, p, s))
        .sum())
}

/// `L_y(s, f) = prod_{p <= y} (1 - lambda_f(p) p^{-s} + p^{-2s})^{-1}`.
pub fn euler_ly(form: &EigenForm, s: Complex64, y: f64) -> Result<Complex64> {
    Ok(euler_ly_log(form, s, y)?.exp())
}

/// `sum_{n <= N, P(n) <= y} lambda_f(n) n^{-s}`.
pub fn friable_series(form: &EigenForm, s: Complex64, y: f64, terms: u64) -> Result<Complex64> {
    let yi = if y < 2.0 { 1 } else { y.floor() as u64 };
    ensure_coverage(form, yi)?;
    let primes = primes_up_to(yi);
    let mut acc = Complex64::new(0.0, 0.0);
    visit_friable(
        terms,
        &primes,
        false,
        &|p, a| sym_power_trace(form.lambda_unchecked(p), a),
        &mut |n, v| acc += v * n_pow_neg(n as f64, s),
    );
    Ok(acc)
}

/// `sum_{n > N, P(n) <= y} tau(n) n^{-sigma}`, computed as the full friable
/// envelope `prod_{p <= y} (1 - p^{-sigma})^{-2}` minus its part below `N`.
pub fn friable_tail_bound(sigma: f64, y: f64, terms: u64) -> f64 {
    let primes = primes_up_to(if y < 2.0 { 1 } else { y.floor() as u64 });
    let full: f64 = primes
        .iter()
        .map(|&p| -2.0 * (-(p as f64).powf(-sigma)).ln_1p())
        .sum::<f64>()
        .exp();
    let mut head = 0.0;
    visit_friable(terms, &primes, false, &|_, a| (a + 1) as f64, &mut |n, v| {
        head += v * (n as f64).powf(-sigma)
    });
    (full - head).max(0.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct FriableApproxRow {
    pub x: f64,
    pub y: f64,
    pub s: f64,
    pub psi_lambda: f64,
    /// `S_f(x) - Psi(x, y; lambda_f)`, summed directly over `n <= x` with `P(n) > y`
    pub d: f64,
    /// `|D| sqrt(y) / ((log k) (log y)^4 x log x)`
    pub normalized_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FriableApproxReport {
    pub weight: u32,
    pub rows: Vec<FriableApproxRow>,
    pub max_normalized: f64,
    pub constant: f64,
    pub bounded: bool,
}

/// `D = S_f(x) - Psi(x, y; lambda_f)` over a grid of `(x, y)` with `2 <= y`, `2 <= x`.
pub fn friable_approx_check(form: &EigenForm, grid: &[(f64, f64)]) -> Result<FriableApproxReport> {
    if grid.iter().any(|&(x, y)| !(x >= 2.0 && y >= 2.0 && x.is_finite() && y.is_finite())) {
        return Err(LabError::InvalidArgument("grid needs x >= 2 and y >= 2".into()));
    }
    let n_max = grid.iter().map(|&(x, _)| x.floor() as u64).max().unwrap_or(2);
    let sieve = FactorSieve::new(n_max);
    let lam = lambda_table(form, &sieve, n_max)?;
    let largest: Vec<u64> = (0..=n_max)
        .map(|n| if n < 2 { 1 } else { sieve.factor(n).largest_prime() })
        .collect();
    let logk = (form.weight() as f64).ln();
    let mut rows = Vec::with_capacity(grid.len());
    for &(x, y) in grid {
        let n = x.floor() as usize;
        let (mut s, mut psi, mut d) = (0.0, 0.0, 0.0);
        for m in 1..=n {
            s += lam[m];
            if largest[m] as f64 <= y {
                psi += lam[m];
            } else {
                d += lam[m];
            }
        }
        let ly = y.ln();
        rows.push(FriableApproxRow {
            x,
            y,
            s,
            psi_lambda: psi,
            d,
            normalized_residual: d.abs() * y.sqrt() / (logk * ly.powi(4) * x * x.ln()),
        });
    }
    let max_normalized = rows.iter().map(|r| r.normalized_residual).fold(0.0, f64::max);
    Ok(FriableApproxReport {
        weight: form.weight(),
        rows,
        max_normalized,
        constant: RESIDUAL_CONSTANT,
        bounded: max_normalized <= RESIDUAL_CONSTANT,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LogRatioReport {
    pub s_re: f64,
    pub s_im: f64,
    pub y: f64,
    pub terms: u64,
    /// `|log L_N(s) - log L_y(s)|`, imaginary parts compared modulo `2 pi`
    pub difference: Option<f64>,
    pub tail_bound: f64,
    /// Why the logarithm was not formed, when it was not.
    pub failure: Option<String>,
}

/// Compare `log` of the truncated series with `log L_y`.
pub fn log_ratio_diagnostic(form: &EigenForm, s: Complex64, y: f64, terms: u64) -> Result<LogRatioReport> {
    let l = truncated_l(form, s, terms)?;
    let ly = euler_ly_log(form, s, y)?;
    let v = l.value();
    let mut report = LogRatioReport {
        s_re: s.re,
        s_im: s.im,
        y,
        terms,
        difference: None,
        tail_bound: l.tail_bound,
        failure: None,
    };
    if v.norm() == 0.0 || !v.norm().is_finite() {
        report.failure = Some("truncated series vanishes".into());
        return Ok(report);
    }
    let mut d = v.ln() - ly;
    let two_pi = 2.0 * std::f64::consts::PI;
    d.im -= two_pi * (d.im / two_pi).round();
    report.difference = Some(d.norm());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::eigenforms;

    fn delta(bound: u64) -> EigenForm {
        eigenforms(12, bound).unwrap().remove(0)
    }

    #[test]
    fn euler_factor_at_two() {
        let f = delta(20);
        let v = euler_ly(&f, Complex64::new(2.0, 0.0), 2.0).unwrap();
        assert!((v.re - 0.836762).abs() < 1e-6, "{v}");
        assert!(v.im.abs() < 1e-15);
        assert_eq!(euler_ly(&f, Complex64::new(2.0, 0.0), 1.5).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn series_product_identity() {
        let f = delta(20);
        let s = Complex64::new(2.0, 0.0);
        let prod = euler_ly(&f, s, 7.0).unwrap();
        let series = friable_series(&f, s, 7.0, 1_000_000).unwrap();
        let tail = friable_tail_bound(2.0, 7.0, 1_000_000);
        assert!((prod - series).norm() <= tail + 1e-13, "{} vs {tail}", (prod - series).norm());
        let s = Complex64::new(1.5, 3.0);
        let prod = euler_ly(&f, s, 7.0).unwrap();
        let series = friable_series(&f, s, 7.0, 1_000_000).unwrap();
        assert!((prod - series).norm() <= friable_tail_bound(1.5, 7.0, 1_000_000) + 1e-12);
    }

    #[test]
    fn truncation_self_consistent() {
        let f = delta(20_000);
        let s = Complex64::new(2.0, 0.0);
        let a = truncated_l(&f, s, 10_000).unwrap();
        let b = truncated_l(&f, s, 20_000).unwrap();
        assert_eq!(a.im, 0.0);
        assert!((a.re - b.re).abs() <= a.tail_bound);
        assert!(matches!(
            truncated_l(&f, Complex64::new(1.05, 0.0), 10_000),
            Err(LabError::SigmaTooSmall { .. })
        ));
    }

    #[test]
    fn residual_vanishes_at_y_equal_x() {
        let f = delta(1000);
        let r = friable_approx_check(&f, &[(1000.0, 1000.0), (500.0, 997.0)]).unwrap();
        assert!(r.rows.iter().all(|row| row.d == 0.0 && row.s == row.psi_lambda));
    }

    #[test]
    fn local_factor_modulus_range() {
        for &(l, p) in &[(2.0, 2u64), (-2.0, 2), (0.3, 3), (-1.99, 97)] {
            for &s in &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 14.1), Complex64::new(2.5, -3.0)] {
                let m = local_factor(l, p, s).norm();
                let pf = p as f64;
                assert!(m >= (1.0 + 1.0 / pf).powi(-2) - 1e-12 && m <= (1.0 - 1.0 / pf).powi(-2) + 1e-12);
                assert!((local_log(l, p, s).exp() - local_factor(l, p, s)).norm() < 1e-12);
            }
        }
    }
}
