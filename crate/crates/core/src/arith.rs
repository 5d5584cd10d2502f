//! Elementary arithmetic: prime sieves, factorizations and multiplicative
//! function tables.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// All primes `p <= n` in increasing order.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// A positive integer together with its prime factorization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactoredInt {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl FactoredInt {
    /// Factor `n >= 1` by trial division.
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(LabError::InvalidArgument("cannot factor 0".into()));
        }
        let mut factors = Vec::new();
        let mut m = n;
        let mut d = 2u64;
        while d * d <= m {
            if m % d == 0 {
                let mut e = 0;
                while m % d == 0 {
                    m /= d;
                    e += 1;
                }
                factors.push((d, e));
            }
            d += if d == 2 { 1 } else { 2 };
        }
        if m > 1 {
            factors.push((m, 1));
        }
        Ok(Self { n, factors })
    }

    /// Build from prime-power data; primes must be strictly increasing.
    pub fn from_factors(factors: Vec<(u64, u32)>) -> Result<Self> {
        let mut n: u64 = 1;
        let mut last = 1u64;
        for &(p, e) in &factors {
            if p <= last || !is_prime(p) || e == 0 {
                return Err(LabError::InvalidArgument(format!(
                    "bad prime power {p}^{e} in factorization"
                )));
            }
            last = p;
            for _ in 0..e {
                n = n
                    .checked_mul(p)
                    .ok_or_else(|| LabError::InvalidArgument("factorization overflows u64".into()))?;
            }
        }
        Ok(Self { n, factors })
    }

    pub fn one() -> Self {
        Self {
            n: 1,
            factors: Vec::new(),
        }
    }

    pub fn value(&self) -> u64 {
        self.n
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Exponent of `p` in the factorization (0 if `p` does not divide).
    pub fn exponent_of(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0, |&(_, e)| e)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn largest_prime(&self) -> u64 {
        self.factors.last().map_or(1, |&(p, _)| p)
    }

    pub fn omega(&self) -> usize {
        self.factors.len()
    }
}

/// Number of divisors, `prod (a_i + 1)`.
pub fn divisor_tau(n: &FactoredInt) -> u64 {
    n.factors.iter().map(|&(_, e)| e as u64 + 1).product()
}

/// Smallest-prime-factor table for fast factorization of all `n <= limit`.
#[derive(Debug, Clone)]
pub struct FactorSieve {
    spf: Vec<u32>,
}

impl FactorSieve {
    pub fn new(limit: u64) -> Self {
        let limit = limit.max(1) as usize;
        let mut spf = vec![0u32; limit + 1];
        for i in 2..=limit {
            if spf[i] == 0 {
                let mut j = i;
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Self { spf }
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    pub fn smallest_prime_factor(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    pub fn factor(&self, n: u64) -> FactoredInt {
        assert!(n >= 1 && n <= self.limit(), "{n} outside the sieve range");
        let mut factors: Vec<(u64, u32)> = Vec::new();
        let mut m = n as usize;
        while m > 1 {
            let p = self.spf[m] as usize;
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p as u64, e));
        }
        FactoredInt { n, factors }
    }

    /// Values `g(n)` for `0 <= n <= limit` of the multiplicative function with
    /// prime-power values `local(p, a)`; entry 0 is unused and set to 0.
    pub fn multiplicative_table<F>(&self, limit: u64, mut local: F) -> Vec<f64>
    where
        F: FnMut(u64, u32) -> f64,
    {
        assert!(limit <= self.limit());
        let limit = limit as usize;
        let mut g = vec![0.0; limit + 1];
        if limit == 0 {
            return g;
        }
        g[1] = 1.0;
        for n in 2..=limit {
            let p = self.spf[n] as usize;
            let mut m = n;
            let mut e = 0u32;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            g[n] = g[m] * local(p as u64, e);
        }
        g
    }
}

/// Chebyshev recurrence `U_{b+1} = t U_b - U_{b-1}` with `U_0 = 1`, `U_1 = t`,
/// evaluated at `t = 2 cos(theta)`; returns `U_b`, the trace of `Sym^b`.
pub fn sym_power_trace(t: f64, b: u32) -> f64 {
    let (mut prev, mut cur) = (1.0, t);
    match b {
        0 => 1.0,
        1 => t,
        _ => {
            for _ in 1..b {
                let next = t * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Largest `m >= 1` with `p^m <= x`; assumes `2 <= p <= x`.
pub fn max_power_below(p: u64, x: f64) -> u32 {
    let mut m = 0;
    let mut pw: f64 = 1.0;
    while pw * (p as f64) <= x {
        pw *= p as f64;
        m += 1;
    }
    m
}

/// Visit `n = 1` and every `n <= x` whose prime factors all lie in `primes`
/// (sorted ascending) by depth-first search over prime powers, passing the
/// value of the multiplicative function with prime-power values `local`.
/// With `squarefree`, only squarefree `n` are visited.
pub fn visit_friable<L, V>(x: u64, primes: &[u64], squarefree: bool, local: &L, visit: &mut V)
where
    L: Fn(u64, u32) -> f64,
    V: FnMut(u64, f64),
{
    if x == 0 {
        return;
    }
    visit(1, 1.0);
    friable_rec(x, primes, squarefree, 1, 1.0, local, visit);
}

fn friable_rec<L, V>(x: u64, primes: &[u64], squarefree: bool, n: u64, g: f64, local: &L, visit: &mut V)
where
    L: Fn(u64, u32) -> f64,
    V: FnMut(u64, f64),
{
    for (i, &p) in primes.iter().enumerate() {
        let Some(mut m) = n.checked_mul(p).filter(|&m| m <= x) else {
            break;
        };
        let mut a = 1;
        loop {
            let v = g * local(p, a);
            visit(m, v);
            friable_rec(x, &primes[i + 1..], squarefree, m, v, local, visit);
            if squarefree {
                break;
            }
            match m.checked_mul(p).filter(|&m| m <= x) {
                Some(next) => m = next,
                None => break,
            }
            a += 1;
        }
    }
}

pub fn prime_count(primes: &[u64], y: f64) -> usize {
    primes.partition_point(|&p| (p as f64) <= y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_examples() {
        assert_eq!(divisor_tau(&FactoredInt::new(1).unwrap()), 1);
        assert_eq!(divisor_tau(&FactoredInt::new(12).unwrap()), 6);
        assert_eq!(divisor_tau(&FactoredInt::new(8).unwrap()), 4);
    }

    #[test]
    fn factorization_reconstructs() {
        let sieve = FactorSieve::new(5000);
        for n in 1..=5000u64 {
            let f = sieve.factor(n);
            assert_eq!(f, FactoredInt::new(n).unwrap());
            let prod: u64 = f.factors().iter().map(|&(p, e)| p.pow(e)).product();
            assert_eq!(prod, n);
            assert!(f.factors().windows(2).all(|w| w[0].0 < w[1].0));
        }
    }

    #[test]
    fn from_factors_rejects_bad_input() {
        assert!(FactoredInt::from_factors(vec![(3, 1), (2, 1)]).is_err());
        assert!(FactoredInt::from_factors(vec![(4, 1)]).is_err());
        assert!(FactoredInt::new(0).is_err());
        assert_eq!(
            FactoredInt::from_factors(vec![(2, 2), (3, 1)]).unwrap().value(),
            12
        );
    }

    #[test]
    fn sieve_counts() {
        assert_eq!(primes_up_to(100).len(), 25);
        assert_eq!(primes_up_to(100_000).len(), 9592);
        assert!(primes_up_to(1).is_empty());
    }

    #[test]
    fn chebyshev_matches_sine_ratio() {
        for &theta in &[0.3f64, 1.1, 2.0, 2.9] {
            for b in 0..8 {
                let expect = ((b as f64 + 1.0) * theta).sin() / theta.sin();
                assert!((sym_power_trace(2.0 * theta.cos(), b) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn friable_visits_match_filter() {
        let sieve = FactorSieve::new(2000);
        for &(x, y) in &[(1u64, 2u64), (10, 2), (10, 3), (500, 7), (2000, 50)] {
            let primes = primes_up_to(y);
            let mut seen = Vec::new();
            visit_friable(x, &primes, false, &|_, a| (a + 1) as f64, &mut |n, g| seen.push((n, g)));
            seen.sort_by_key(|e| e.0);
            let expect: Vec<(u64, f64)> = (1..=x)
                .map(|n| sieve.factor(n))
                .filter(|f| f.largest_prime() <= y)
                .map(|f| (f.value(), divisor_tau(&f) as f64))
                .collect();
            assert_eq!(seen, expect, "x={x} y={y}");
        }
        let mut sf = Vec::new();
        visit_friable(30, &[2, 3, 5], true, &|_, _| 1.0, &mut |n, _| sf.push(n));
        sf.sort();
        assert_eq!(sf, vec![1, 2, 3, 5, 6, 10, 15, 30]);
    }

    #[test]
    fn power_thresholds() {
        assert_eq!(max_power_below(2, 100.0), 6);
        assert_eq!(max_power_below(7, 100.0), 2);
        assert_eq!(max_power_below(10, 100.0), 2);
        assert_eq!(max_power_below(11, 100.0), 1);
    }
}
