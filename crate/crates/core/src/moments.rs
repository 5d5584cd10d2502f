//! Harmonic weights `omega_f = 2 pi^2 / ((k - 1) L(1, Sym^2 f))`, weighted
//! averages over an eigenbasis, and comparisons with the random model.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{divisor_tau, FactorSieve, FactoredInt};
use crate::eigen::EigenForm;
use crate::error::{LabError, Result};
use crate::hecke::{ensure_coverage, lambda_at, lambda_table};
use crate::satotate::exact_moment;
use crate::sums::{friable_sum, Weight};

/// `log` of the local factor `[(1 - alpha^2/p)(1 - 1/p)(1 - alpha^{-2}/p)]^{-1}`
/// with `alpha + alpha^{-1} = lambda`.
pub fn sym2_local_log(lambda: f64, p: u64) -> f64 {
    let p = p as f64;
    let sym = (1.0 - (lambda * lambda - 2.0) / p + 1.0 / (p * p)).ln();
    -(sym + (-1.0 / p).ln_1p())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sym2Value {
    pub value: f64,
    pub p_trunc: u64,
    /// Heuristic relative error from the omitted primes, `exp(3 / sqrt(P log P)) - 1`.
    pub tail_estimate: f64,
    /// Relative change between truncation at `P / 2` and at `P`.
    pub half_change: f64,
}

/// Euler product for `L(1, Sym^2 f)` truncated at `p_trunc`.
pub fn sym2_l1(form: &EigenForm, p_trunc: u64) -> Result<Sym2Value> {
    if p_trunc < 4 {
        return Err(LabError::InvalidArgument(format!("truncation {p_trunc} below 4")));
    }
    ensure_coverage(form, p_trunc)?;
    let half = p_trunc / 2;
    let (mut log_half, mut log_full) = (0.0, 0.0);
    for (p, lambda) in form.lambdas().take_while(|&(p, _)| p <= p_trunc) {
        let t = sym2_local_log(lambda, p);
        log_full += t;
        if p <= half {
            log_half += t;
        }
    }
    let pf = p_trunc as f64;
    Ok(Sym2Value {
        value: log_full.exp(),
        p_trunc,
        tail_estimate: (3.0 / (pf * pf.ln()).sqrt()).exp_m1(),
        half_change: (log_full - log_half).exp_m1().abs(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FormWeight {
    pub index: usize,
    pub omega: f64,
    pub sym2: Sym2Value,
    /// `k omega_f`, reported for comparison with size bounds on `L(1, Sym^2 f)`
    pub k_omega: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicWeights {
    pub weight: u32,
    pub p_trunc: u64,
    pub forms: Vec<FormWeight>,
    pub total: f64,
}

impl HarmonicWeights {
    pub fn omegas(&self) -> impl Iterator<Item = f64> + '_ {
        self.forms.iter().map(|f| f.omega)
    }
}

/// Harmonic weights of an eigenbasis `forms` of one weight.
pub fn harmonic_weights(forms: &[EigenForm], p_trunc: u64) -> Result<HarmonicWeights> {
    let k = check_basis(forms)?;
    let weights: Vec<FormWeight> = forms
        .par_iter()
        .map(|f| {
            let sym2 = sym2_l1(f, p_trunc)?;
            let omega = 2.0 * PI * PI / ((k - 1) as f64 * sym2.value);
            Ok(FormWeight {
                index: f.index(),
                omega,
                sym2,
                k_omega: k as f64 * omega,
            })
        })
        .collect::<Result<_>>()?;
    let total = weights.iter().map(|w| w.omega).sum();
    Ok(HarmonicWeights {
        weight: k,
        p_trunc,
        forms: weights,
        total,
    })
}

fn check_basis(forms: &[EigenForm]) -> Result<u32> {
    let first = forms
        .first()
        .ok_or_else(|| LabError::InvalidArgument("empty eigenbasis".into()))?;
    let k = first.weight();
    if forms.iter().any(|f| f.weight() != k) {
        return Err(LabError::InvalidArgument("forms of mixed weights".into()));
    }
    Ok(k)
}

fn check_weights(forms: &[EigenForm], weights: &HarmonicWeights) -> Result<()> {
    if weights.forms.len() != forms.len() || weights.weight != check_basis(forms)? {
        return Err(LabError::InvalidArgument("weights do not belong to these forms".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct PeterssonReport {
    pub weight: u32,
    pub n: u64,
    /// `sum omega_f lambda_f(n) / sum omega_f`
    pub average: f64,
    pub delta: f64,
    pub deviation: f64,
    /// `n <= k^2 / 10^4`
    pub in_range: bool,
}

/// Weighted average of `lambda_f(n)` against `delta(n)`.
pub fn petersson_check(forms: &[EigenForm], weights: &HarmonicWeights, n: u64) -> Result<PeterssonReport> {
    check_weights(forms, weights)?;
    let nf = FactoredInt::new(n)?;
    let mut acc = 0.0;
    for (f, w) in forms.iter().zip(&weights.forms) {
        acc += w.omega * lambda_at(f, &nf)?;
    }
    let average = acc / weights.total;
    let delta = if n == 1 { 1.0 } else { 0.0 };
    let k = weights.weight as f64;
    Ok(PeterssonReport {
        weight: weights.weight,
        n,
        average,
        delta,
        deviation: if n == 1 { 0.0 } else { average - delta },
        in_range: n as f64 <= k * k / 1e4,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicMoment {
    pub weight: u32,
    pub x: f64,
    pub l: u32,
    /// `sum omega_f |S_f(x)|^{2l} / sum omega_f`
    pub value: f64,
    pub random_model: f64,
    pub difference: f64,
    /// `x^{6l} <= k`
    pub in_range: bool,
}

fn partial_sums_at(forms: &[EigenForm], x: f64) -> Result<Vec<f64>> {
    let n = if x < 1.0 { 0 } else { x.floor() as u64 };
    let sieve = FactorSieve::new(n.max(1));
    forms
        .iter()
        .map(|f| Ok(lambda_table(f, &sieve, n)?[1..].iter().sum()))
        .collect()
}

/// Normalized harmonic `2l`-th moment of `S_f(x)` and the random-model moment.
pub fn harmonic_moment(forms: &[EigenForm], weights: &HarmonicWeights, x: f64, l: u32) -> Result<HarmonicMoment> {
    check_weights(forms, weights)?;
    let sums = partial_sums_at(forms, x)?;
    let value = sums
        .iter()
        .zip(weights.omegas())
        .map(|(s, w)| w * s.powi(2 * l as i32))
        .sum::<f64>()
        / weights.total;
    let random_model = exact_moment(x, l)? as f64;
    let k = weights.weight as f64;
    Ok(HarmonicMoment {
        weight: weights.weight,
        x,
        l,
        value,
        random_model,
        difference: value - random_model,
        in_range: x.powi(6 * l as i32) <= k,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LargeSumRow {
    pub index: usize,
    pub sum: f64,
    /// `|S_f(x)| / (x log x)`
    pub over_xlogx: f64,
    /// `|S_f(x)| / Psi(x, y; tau)`
    pub over_psi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LargeSumReport {
    pub weight: u32,
    pub x: f64,
    /// `log k / log log k`
    pub y: f64,
    pub psi_tau: f64,
    pub rows: Vec<LargeSumRow>,
    pub max_over_xlogx: f64,
    pub max_over_psi: f64,
    pub threshold: f64,
    /// Forms with `|S_f(x)| / Psi(x, y; tau) >= threshold`
    pub above_threshold: usize,
    /// Largest `|S_f(t)| / sum_{n <= t} tau(n)` over forms and integers `t <= x`.
    pub envelope_ratio: f64,
}

/// Distribution of `S_f(x)` over an eigenbasis.
pub fn large_sum_search(forms: &[EigenForm], x: f64, threshold: f64) -> Result<LargeSumReport> {
    let k = check_basis(forms)?;
    if !(x >= 1.0) || !x.is_finite() {
        return Err(LabError::InvalidArgument(format!("x = {x} must be at least 1")));
    }
    let n = x.floor() as u64;
    let kf = k as f64;
    let y = kf.ln() / kf.ln().ln();
    let psi_tau = friable_sum(x, y, Weight::Tau)?.value;
    let sieve = FactorSieve::new(n);
    let tau_prefix: Vec<f64> = (1..=n)
        .scan(0.0, |acc, m| {
            *acc += divisor_tau(&sieve.factor(m)) as f64;
            Some(*acc)
        })
        .collect();
    let mut rows = Vec::with_capacity(forms.len());
    let mut envelope_ratio: f64 = 0.0;
    for f in forms {
        let lam = lambda_table(f, &sieve, n)?;
        let mut s = 0.0;
        for (t, &l) in lam.iter().enumerate().skip(1) {
            s += l;
            envelope_ratio = envelope_ratio.max(s.abs() / tau_prefix[t - 1]);
        }
        rows.push(LargeSumRow {
            index: f.index(),
            sum: s,
            over_xlogx: if x > 1.0 { s.abs() / (x * x.ln()) } else { f64::NAN },
            over_psi: s.abs() / psi_tau,
        });
    }
    let max_over_xlogx = rows.iter().map(|r| r.over_xlogx).fold(f64::NEG_INFINITY, f64::max);
    let max_over_psi = rows.iter().map(|r| r.over_psi).fold(f64::NEG_INFINITY, f64::max);
    let above_threshold = rows.iter().filter(|r| r.over_psi >= threshold).count();
    Ok(LargeSumReport {
        weight: k,
        x,
        y,
        psi_tau,
        rows,
        max_over_xlogx,
        max_over_psi,
        threshold,
        above_threshold,
        envelope_ratio,
    })
}
