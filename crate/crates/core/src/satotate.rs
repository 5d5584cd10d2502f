//! The random model `X(n)`: independent Sato-Tate angles `theta_p`, one per
//! prime, and `X(n) = prod_p U_{a_p}(cos theta_p)` where `U_a` is the trace of
//! `Sym^a`.
//!
//! Angles are addressed by a counter: draw `i` of prime `p` under `seed` is
//! built from the 64-bit word pair at position `2 i` of ChaCha8 stream `p`
//! keyed by `seed`. Samples are therefore independent of evaluation order,
//! and Monte Carlo runs are reduced over fixed chunks in chunk order.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{primes_up_to, sym_power_trace, FactoredInt};
use crate::error::{LabError, Result};
use crate::hecke::branching_coeff;
use crate::sums::{friable_sum, Weight};

/// Draws per Monte Carlo chunk; fixed so the reduction tree does not depend on
/// the worker count.
pub const CHUNK: u64 = 1 << 14;

/// Tuple budget for [`exact_moment`].
pub const TUPLE_BUDGET: f64 = 1e7;

/// Largest number of conditioned primes accepted by [`conditioning_bound`].
pub const MAX_CONDITIONED_PRIMES: usize = 10_000;

const CDF_TOL: f64 = 1e-12;

/// `F(theta) = (theta - sin theta cos theta) / pi`, the Sato-Tate distribution function.
pub fn st_cdf(theta: f64) -> f64 {
    (theta - theta.sin() * theta.cos()) / PI
}

/// Solve `F(theta) = u` by Newton's method kept inside a shrinking bracket.
pub fn uniform_to_angle(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.0, PI);
    let mut theta = PI * u;
    for _ in 0..200 {
        let g = st_cdf(theta) - u;
        if g.abs() <= CDF_TOL {
            return theta;
        }
        if g > 0.0 {
            hi = theta;
        } else {
            lo = theta;
        }
        let s = theta.sin();
        let slope = 2.0 * s * s / PI;
        let next = theta - g / slope;
        theta = if slope > 0.0 && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < f64::EPSILON {
            break;
        }
    }
    theta
}

/// Uniform in `[0, 1)` from the top 53 bits of one word.
fn unit_uniform<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One Sato-Tate angle from `rng`.
pub fn sample_angle<R: RngCore>(rng: &mut R) -> f64 {
    uniform_to_angle(unit_uniform(rng))
}

/// Sequential reader of the angles of one prime, starting at a given draw.
#[derive(Debug, Clone)]
pub struct AngleStream {
    rng: ChaCha8Rng,
}

impl AngleStream {
    pub fn new(seed: u64, p: u64, first_draw: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(p);
        rng.set_word_pos(2 * first_draw as u128);
        Self { rng }
    }

    pub fn next_angle(&mut self) -> f64 {
        sample_angle(&mut self.rng)
    }
}

/// The angles `theta_p` for all `p <= prime_bound` in draw number `draw`.
#[derive(Debug, Clone, Serialize)]
pub struct SatoTateSample {
    pub seed: u64,
    pub prime_bound: u64,
    pub draw: u64,
    primes: Vec<u64>,
    angles: Vec<f64>,
}

impl SatoTateSample {
    pub fn new(seed: u64, prime_bound: u64, draw: u64) -> Self {
        let primes = primes_up_to(prime_bound);
        let angles = primes
            .iter()
            .map(|&p| AngleStream::new(seed, p, draw).next_angle())
            .collect();
        Self {
            seed,
            prime_bound,
            draw,
            primes,
            angles,
        }
    }

    /// A sample with prescribed angles, for testing evaluators.
    pub fn with_angles(prime_bound: u64, angle: impl Fn(u64) -> f64) -> Self {
        let primes = primes_up_to(prime_bound);
        let angles = primes.iter().map(|&p| angle(p)).collect();
        Self {
            seed: 0,
            prime_bound,
            draw: 0,
            primes,
            angles,
        }
    }

    pub fn angles(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.primes.iter().copied().zip(self.angles.iter().copied())
    }

    pub fn angle(&self, p: u64) -> Result<f64> {
        self.primes
            .binary_search(&p)
            .map(|i| self.angles[i])
            .map_err(|_| LabError::Coverage {
                prime: p,
                bound: self.prime_bound,
            })
    }

    /// `X(n)` for this sample.
    pub fn x_value(&self, n: &FactoredInt) -> Result<f64> {
        n.factors().iter().try_fold(1.0, |acc, &(p, a)| {
            Ok(acc * sym_power_trace(2.0 * self.angle(p)?.cos(), a))
        })
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        Self {
            count: n,
            mean: self.mean + d * nb / n as f64,
            m2: self.m2 + other.m2 + d * d * na * nb / n as f64,
        }
    }

    /// Sample standard deviation over `sqrt(count)`.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let var = (self.m2 / (self.count - 1) as f64).max(0.0);
        (var / self.count as f64).sqrt()
    }
}

/// Monte Carlo over draws `0..samples`. For each draw, `f` receives
/// `t_p = 2 cos theta_p` for the given primes (in order) and writes
/// `outputs` statistics.
pub fn monte_carlo<F>(primes: &[u64], samples: u64, seed: u64, outputs: usize, f: F) -> Vec<Welford>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Vec<Welford>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(samples);
            let mut streams: Vec<AngleStream> =
                primes.iter().map(|&p| AngleStream::new(seed, p, start)).collect();
            let mut t = vec![0.0; primes.len()];
            let mut out = vec![0.0; outputs];
            let mut acc = vec![Welford::default(); outputs];
            for _ in start..end {
                for (ti, s) in t.iter_mut().zip(streams.iter_mut()) {
                    *ti = 2.0 * s.next_angle().cos();
                }
                f(&t, &mut out);
                for (a, &v) in acc.iter_mut().zip(&out) {
                    a.push(v);
                }
            }
            acc
        })
        .collect();
    partial.into_iter().fold(vec![Welford::default(); outputs], |acc, chunk| {
        acc.into_iter().zip(chunk).map(|(a, b)| a.merge(b)).collect()
    })
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct MomentEstimate {
    pub x: f64,
    pub l: u32,
    pub samples: u64,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
}

impl MomentEstimate {
    fn from_stats(x: f64, l: u32, seed: u64, w: Welford) -> Self {
        Self {
            x,
            l,
            samples: w.count,
            seed,
            mean: w.mean,
            stderr: w.stderr(),
        }
    }

    /// `|mean - target| <= k * stderr`; with zero stderr the mean must match to rounding.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        let tol = (k * self.stderr).max(1e-12 * target.abs().max(1.0));
        (self.mean - target).abs() <= tol
    }
}

/// Prime indices and exponents of each `n` in `1..=x`.
struct SumLayout {
    primes: Vec<u64>,
    terms: Vec<Vec<(usize, u32)>>,
    friable: Vec<bool>,
}

impl SumLayout {
    fn new(x: u64, y: f64) -> Result<Self> {
        let primes = primes_up_to(x);
        let mut terms = Vec::with_capacity(x as usize);
        let mut friable = Vec::with_capacity(x as usize);
        for n in 1..=x {
            let f = FactoredInt::new(n)?;
            friable.push(f.largest_prime() as f64 <= y);
            terms.push(
                f.factors()
                    .iter()
                    .map(|&(p, a)| (primes.binary_search(&p).unwrap(), a))
                    .collect(),
            );
        }
        Ok(Self {
            primes,
            terms,
            friable,
        })
    }

    fn value(&self, t: &[f64], n_index: usize) -> f64 {
        self.terms[n_index]
            .iter()
            .map(|&(i, a)| sym_power_trace(t[i], a))
            .product()
    }
}

fn check_moment_args(x: f64, l: u32) -> Result<u64> {
    if !(x >= 1.0) || !x.is_finite() || x > 1e6 {
        return Err(LabError::InvalidArgument(format!("x = {x} must lie in [1, 1e6]")));
    }
    if l == 0 || l > 16 {
        return Err(LabError::InvalidArgument(format!("moment order l = {l} must lie in 1..=16")));
    }
    Ok(x.floor() as u64)
}

/// Monte Carlo estimate of `E (sum_{n <= x} X(n))^{2l}`.
pub fn mc_moment(x: f64, l: u32, samples: u64, seed: u64) -> Result<MomentEstimate> {
    let xi = check_moment_args(x, l)?;
    let layout = SumLayout::new(xi, x)?;
    let stats = monte_carlo(&layout.primes, samples, seed, 1, |t, out| {
        let s: f64 = (0..xi as usize).map(|i| layout.value(t, i)).sum();
        out[0] = s.powi(2 * l as i32);
    });
    Ok(MomentEstimate::from_stats(x, l, seed, stats[0]))
}

/// Monte Carlo estimates of `E X(n)` for `n = 1..=limit`.
pub fn mc_means(limit: u64, samples: u64, seed: u64) -> Result<Vec<MomentEstimate>> {
    let layout = SumLayout::new(limit, limit as f64)?;
    let stats = monte_carlo(&layout.primes, samples, seed, limit as usize, |t, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = layout.value(t, i);
        }
    });
    Ok(stats
        .into_iter()
        .enumerate()
        .map(|(i, w)| MomentEstimate::from_stats((i + 1) as f64, 0, seed, w))
        .collect())
}

/// Monte Carlo estimate of `E X(p)^{2m}` for one prime.
pub fn mc_prime_power_moment(p: u64, m: u32, samples: u64, seed: u64) -> MomentEstimate {
    let stats = monte_carlo(&[p], samples, seed, 1, |t, out| out[0] = t[0].powi(2 * m as i32));
    MomentEstimate::from_stats(p as f64, m, seed, stats[0])
}

/// `E (sum_{n <= x, keep(n)} X(n))^{2l}` as the sum of `b_1` over all tuples of
/// kept integers, enumerated as nondecreasing tuples with multinomial weights.
pub fn exact_moment_where(x: f64, l: u32, keep: impl Fn(&FactoredInt) -> bool) -> Result<u128> {
    let xi = check_moment_args(x, l)?;
    let r = 2 * l as usize;
    let tuples = (xi as f64).powi(r as i32);
    if tuples > TUPLE_BUDGET {
        return Err(LabError::BudgetExceeded {
            tuples,
            budget: TUPLE_BUDGET,
        });
    }
    let kept: Vec<FactoredInt> = (1..=xi)
        .map(FactoredInt::new)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|n| keep(n))
        .collect();
    let mut fact = vec![1u128; r + 1];
    for i in 1..=r {
        fact[i] = fact[i - 1] * i as u128;
    }
    let one = FactoredInt::one();
    let mut total = 0u128;
    let mut idx = vec![0usize; r];
    let mut tuple: Vec<FactoredInt> = Vec::with_capacity(r);
    if kept.is_empty() {
        return Ok(0);
    }
    loop {
        tuple.clear();
        tuple.extend(idx.iter().map(|&i| kept[i].clone()));
        let b = branching_coeff(&tuple, &one) as u128;
        if b > 0 {
            let mut weight = fact[r];
            let mut run = 1;
            for w in 1..=r {
                if w < r && idx[w] == idx[w - 1] {
                    run += 1;
                } else {
                    weight /= fact[run];
                    run = 1;
                }
            }
            total = total
                .checked_add(weight * b)
                .ok_or_else(|| LabError::Numerical("exact moment overflows u128".into()))?;
        }
        // next nondecreasing index tuple
        let Some(pos) = (0..r).rev().find(|&j| idx[j] + 1 < kept.len()) else {
            break;
        };
        let v = idx[pos] + 1;
        for slot in &mut idx[pos..] {
            *slot = v;
        }
    }
    Ok(total)
}

/// `E (sum_{n <= x} X(n))^{2l}` exactly.
pub fn exact_moment(x: f64, l: u32) -> Result<u128> {
    exact_moment_where(x, l, |_| true)
}

#[derive(Debug, Clone, Serialize)]
pub struct RestrictedComparison {
    pub y: f64,
    pub full: MomentEstimate,
    pub restricted: MomentEstimate,
    /// Standard error of the paired difference `full - restricted`.
    pub difference_stderr: f64,
    /// `full >= restricted - 4 difference_stderr`
    pub ordered: bool,
}

/// The full and the `y`-friable-restricted moments from the same draws.
pub fn restricted_vs_full_moment(x: f64, y: f64, l: u32, samples: u64, seed: u64) -> Result<RestrictedComparison> {
    let xi = check_moment_args(x, l)?;
    let layout = SumLayout::new(xi, y)?;
    let stats = monte_carlo(&layout.primes, samples, seed, 3, |t, out| {
        let (mut full, mut restricted) = (0.0, 0.0);
        for i in 0..xi as usize {
            let v = layout.value(t, i);
            full += v;
            if layout.friable[i] {
                restricted += v;
            }
        }
        out[0] = full.powi(2 * l as i32);
        out[1] = restricted.powi(2 * l as i32);
        out[2] = out[0] - out[1];
    });
    let full = MomentEstimate::from_stats(x, l, seed, stats[0]);
    let restricted = MomentEstimate::from_stats(x, l, seed, stats[1]);
    let difference_stderr = stats[2].stderr();
    Ok(RestrictedComparison {
        y,
        full,
        restricted,
        difference_stderr,
        ordered: stats[2].mean >= -4.0 * difference_stderr - 1e-12 * full.mean.abs(),
    })
}

/// `P(0 <= theta_p <= eps) = (2/pi)(eps/2 - sin(2 eps)/4)`.
pub fn small_angle_probability(eps: f64) -> f64 {
    // the closed form cancels badly for small eps; switch to the series
    if eps < 1e-2 {
        let e3 = eps * eps * eps;
        (2.0 / PI) * (e3 / 3.0 - e3 * eps * eps / 15.0 + e3 * eps.powi(4) * 2.0 / 315.0)
    } else {
        (2.0 / PI) * (eps / 2.0 - (2.0 * eps).sin() / 4.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditioningReport {
    pub x: f64,
    pub y: f64,
    pub l: u32,
    pub eps: f64,
    pub conditioned_primes: usize,
    pub per_prime_probability: f64,
    /// `log P(A)`, where `A` is the event `theta_p <= eps` for every `p <= y`
    pub log_event_probability: f64,
    pub psi_tau: f64,
    /// `(min_n X_eps(n) / tau(n))^{2l}` over `y`-friable `n <= x`, with
    /// `X_eps(n)` the value at `theta_p = eps` for all `p`
    pub correction: f64,
    /// `log` of `Psi^{2l} P(A) correction`
    pub log_lower_bound: f64,
    pub moment: f64,
    pub moment_is_exact: bool,
    pub holds: bool,
}

/// Lower bound for the `2l`-th moment obtained by conditioning on all
/// `theta_p`, `p <= y`, being at most `eps = (log x)^{-2}`, compared against
/// the exact moment.
pub fn conditioning_bound(x: f64, y: f64, l: u32) -> Result<ConditioningReport> {
    let xi = check_moment_args(x, l)?;
    if !(x >= 3.0 && y >= 2.0 && y <= x) {
        return Err(LabError::InvalidArgument(format!(
            "need 3 <= x and 2 <= y <= x, got x = {x}, y = {y}"
        )));
    }
    let eps = x.ln().powi(-2);
    let primes: Vec<u64> = primes_up_to(y.floor() as u64);
    if primes.len() > MAX_CONDITIONED_PRIMES {
        return Err(LabError::InvalidArgument(format!(
            "{} primes up to y exceed the limit {MAX_CONDITIONED_PRIMES}",
            primes.len()
        )));
    }
    let per_prime = small_angle_probability(eps);
    let log_event_probability = primes.len() as f64 * per_prime.ln();

    // On the event every U_a(cos theta_p) is decreasing in theta_p as long as
    // (a + 1) eps <= pi, so its minimum sits at theta_p = eps.
    let mut worst: f64 = 1.0;
    for n in 1..=xi {
        let f = FactoredInt::new(n)?;
        if f.largest_prime() as f64 > y {
            continue;
        }
        let mut ratio = 1.0;
        for &(_, a) in f.factors() {
            if (a + 1) as f64 * eps > PI {
                return Err(LabError::InvalidArgument(format!(
                    "eps = {eps} too large for exponent {a}"
                )));
            }
            ratio *= sym_power_trace(2.0 * eps.cos(), a) / (a + 1) as f64;
        }
        worst = worst.min(ratio);
    }
    let correction = worst.powi(2 * l as i32);
    let psi_tau = friable_sum(x, y, Weight::Tau)?.value;
    let log_lower_bound =
        2.0 * l as f64 * psi_tau.ln() + log_event_probability + correction.ln();
    let moment = exact_moment(x, l)? as f64;
    Ok(ConditioningReport {
        x,
        y,
        l,
        eps,
        conditioned_primes: primes.len(),
        per_prime_probability: per_prime,
        log_event_probability,
        psi_tau,
        correction,
        log_lower_bound,
        moment,
        moment_is_exact: true,
        holds: moment.ln() >= log_lower_bound,
    })
}

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `angles` and `F`. Sorts `angles` in place.
pub fn ks_statistic(angles: &mut [f64]) -> f64 {
    angles.sort_by(f64::total_cmp);
    let n = angles.len() as f64;
    angles
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let f = st_cdf(a);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical value `sqrt(-ln(alpha / 2) / 2) / sqrt(n)`.
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// `draws` consecutive angles of prime `p`.
pub fn angle_draws(seed: u64, p: u64, draws: usize) -> Vec<f64> {
    let mut s = AngleStream::new(seed, p, 0);
    (0..draws).map(|_| s.next_angle()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_cdf() {
        assert!((st_cdf(PI / 2.0) - 0.5).abs() < 1e-15);
        assert!((uniform_to_angle(0.5) - PI / 2.0).abs() < 1e-12);
        assert_eq!(uniform_to_angle(0.0), 0.0);
        for &u in &[1e-15, 1e-9, 0.01, 0.3, 0.77, 0.999999, 1.0 - 1e-16] {
            let t = uniform_to_angle(u);
            assert!((st_cdf(t) - u).abs() <= CDF_TOL, "u={u}");
        }
    }

    #[test]
    fn streams_are_addressable() {
        let seq = angle_draws(7, 5, 10);
        for (i, &a) in seq.iter().enumerate() {
            assert_eq!(AngleStream::new(7, 5, i as u64).next_angle(), a);
            assert_eq!(SatoTateSample::new(7, 5, i as u64).angle(5).unwrap(), a);
        }
        assert_ne!(angle_draws(7, 3, 3), angle_draws(7, 5, 3));
        assert_ne!(angle_draws(8, 5, 3), seq[..3]);
    }

    #[test]
    fn x_value_basics() {
        let s = SatoTateSample::with_angles(10, |_| PI / 2.0);
        assert_eq!(s.x_value(&FactoredInt::one()).unwrap(), 1.0);
        assert!(s.x_value(&FactoredInt::new(3).unwrap()).unwrap().abs() < 1e-15);
        assert!((s.x_value(&FactoredInt::new(9).unwrap()).unwrap() + 1.0).abs() < 1e-15);
        assert!(s.x_value(&FactoredInt::new(11).unwrap()).is_err());
    }

    #[test]
    fn welford_merge_matches_single_pass() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut whole = Welford::default();
        data.iter().for_each(|&v| whole.push(v));
        let (a, b) = data.split_at(313);
        let mut wa = Welford::default();
        let mut wb = Welford::default();
        a.iter().for_each(|&v| wa.push(v));
        b.iter().for_each(|&v| wb.push(v));
        let m = wa.merge(wb);
        assert_eq!(m.count, whole.count);
        assert!((m.mean - whole.mean).abs() < 1e-12);
        assert!((m.m2 - whole.m2).abs() < 1e-8 * whole.m2);
    }

    #[test]
    fn exact_moment_examples() {
        assert_eq!(exact_moment(1.0, 1).unwrap(), 1);
        assert_eq!(exact_moment(1.0, 3).unwrap(), 1);
        assert_eq!(exact_moment(3.0, 1).unwrap(), 3);
        assert_eq!(exact_moment(2.0, 2).unwrap(), 9);
        // X(4) = X(2)^2 - 1 is orthogonal to 1 and X(2)
        assert_eq!(exact_moment(4.0, 1).unwrap(), 4);
        assert!(matches!(
            exact_moment(100.0, 2),
            Err(LabError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn mc_trivial_and_deterministic() {
        let one = mc_moment(1.0, 2, 1000, 3).unwrap();
        assert_eq!(one.mean, 1.0);
        assert_eq!(one.stderr, 0.0);
        let a = mc_moment(5.0, 1, 40_000, 11).unwrap();
        let b = mc_moment(5.0, 1, 40_000, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.agrees_with(exact_moment(5.0, 1).unwrap() as f64, 4.0), "{a:?}");
    }

    #[test]
    fn small_angle_probability_values() {
        // (2/pi)(0.05 - sin(0.2)/4)
        assert!((small_angle_probability(0.1) - 2.117_825_815_86e-4).abs() < 1e-14);
        let e: f64 = 1e-3;
        let lead = 2.0 / (3.0 * PI) * e.powi(3);
        assert!((small_angle_probability(e) / lead - 1.0).abs() < 1e-5);
        // both branches agree at the switch
        let a = small_angle_probability(0.0099999);
        let b = (2.0 / PI) * (0.0099999 / 2.0 - (2.0f64 * 0.0099999).sin() / 4.0);
        assert!((a / b - 1.0).abs() < 1e-8);
    }

    #[test]
    fn conditioning_example() {
        let r = conditioning_bound(20.0, 5.0, 1).unwrap();
        assert!(r.holds);
        assert!(r.correction >= 0.5);
        assert_eq!(r.conditioned_primes, 3);
    }

    #[test]
    fn restricted_identical_when_y_is_x() {
        let c = restricted_vs_full_moment(8.0, 8.0, 1, 5000, 1).unwrap();
        assert_eq!(c.full.mean, c.restricted.mean);
        assert!(c.ordered);
    }
}
