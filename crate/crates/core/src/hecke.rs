//! Multiplicative extension of prime eigenvalues, the Deligne envelope, and
//! SU(2) branching multiplicities `b_m(n_1, ..., n_r)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock, RwLock};

use serde::Serialize;

use crate::arith::{divisor_tau, sym_power_trace, FactorSieve, FactoredInt};
use crate::eigen::EigenForm;
use crate::error::{LabError, Result};

/// `lambda_f(n)` from the prime eigenvalues via the Chebyshev recurrence at each prime power.
pub fn lambda_at(form: &EigenForm, n: &FactoredInt) -> Result<f64> {
    n.factors().iter().try_fold(1.0, |acc, &(p, a)| {
        Ok(acc * sym_power_trace(form.lambda_p(p)?, a))
    })
}

/// Error unless every prime up to `limit` is covered by the form's table.
pub fn ensure_coverage(form: &EigenForm, limit: u64) -> Result<()> {
    let bound = form.prime_bound();
    if limit > bound {
        if let Some(p) = (bound + 1..=limit).find(|&m| crate::arith::is_prime(m)) {
            return Err(LabError::Coverage { prime: p, bound });
        }
    }
    Ok(())
}

/// `lambda_f(n)` for `0 <= n <= limit` (entry 0 is 0).
pub fn lambda_table(form: &EigenForm, sieve: &FactorSieve, limit: u64) -> Result<Vec<f64>> {
    ensure_coverage(form, limit)?;
    Ok(sieve.multiplicative_table(limit, |p, a| {
        sym_power_trace(form.lambda_unchecked(p), a)
    }))
}

/// `tau(n)` for `0 <= n <= limit` (entry 0 is 0).
pub fn tau_table(sieve: &FactorSieve, limit: u64) -> Vec<f64> {
    sieve.multiplicative_table(limit, |_, a| (a + 1) as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeligneReport {
    pub bound: u64,
    /// `max_{n <= bound} |lambda_f(n)| / tau(n)`
    pub max_ratio: f64,
    pub argmax: u64,
    pub tolerance: f64,
    pub passed: bool,
}

impl DeligneReport {
    pub fn ensure(&self) -> Result<()> {
        if self.passed {
            Ok(())
        } else {
            Err(LabError::Numerical(format!(
                "|lambda({})| / tau = {} exceeds 1 + {}",
                self.argmax, self.max_ratio, self.tolerance
            )))
        }
    }
}

pub fn deligne_report(form: &EigenForm, bound: u64, tolerance: f64) -> Result<DeligneReport> {
    if bound < 1 {
        return Err(LabError::InvalidArgument("bound must be at least 1".into()));
    }
    let sieve = FactorSieve::new(bound);
    let lam = lambda_table(form, &sieve, bound)?;
    let tau = tau_table(&sieve, bound);
    let (argmax, max_ratio) = (1..=bound as usize)
        .map(|n| (n as u64, lam[n].abs() / tau[n]))
        .fold((1, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(DeligneReport {
        bound,
        max_ratio,
        argmax,
        tolerance,
        passed: max_ratio <= 1.0 + tolerance,
    })
}

/// Degrees in `Sym^a (x) Sym^b`: `a+b, a+b-2, ..., |a-b|`, each once.
pub fn clebsch_gordan(a: u32, b: u32) -> Vec<u32> {
    let lo = a.abs_diff(b);
    (0..=a.min(b)).map(|j| a + b - 2 * j).filter(|&m| m >= lo).collect()
}

/// Multiplicity of each `Sym^m` in a tensor product of symmetric powers.
pub type Decomposition = BTreeMap<u32, u64>;

/// Memoized decompositions of `Sym^{a_1} (x) ... (x) Sym^{a_r}`, keyed by the
/// sorted exponent tuple. Safe for concurrent readers; concurrent inserts of
/// the same key store identical values.
#[derive(Debug, Default)]
pub struct BranchingTable {
    memo: RwLock<HashMap<Vec<u32>, Arc<Decomposition>>>,
}

impl BranchingTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide shared table.
    pub fn global() -> &'static BranchingTable {
        static TABLE: OnceLock<BranchingTable> = OnceLock::new();
        TABLE.get_or_init(BranchingTable::new)
    }

    pub fn decompose(&self, exponents: &[u32]) -> Arc<Decomposition> {
        let mut key: Vec<u32> = exponents.iter().copied().filter(|&a| a > 0).collect();
        key.sort_unstable();
        if let Some(hit) = self.memo.read().unwrap().get(&key) {
            return hit.clone();
        }
        let value = Arc::new(match key.split_last() {
            None => Decomposition::from([(0, 1)]),
            Some((&last, rest)) => {
                let prev = self.decompose(rest);
                let mut out = Decomposition::new();
                for (&m, &mult) in prev.iter() {
                    for deg in clebsch_gordan(m, last) {
                        *out.entry(deg).or_insert(0) += mult;
                    }
                }
                out
            }
        });
        self.memo
            .write()
            .unwrap()
            .entry(key)
            .or_insert(value)
            .clone()
    }

    pub fn multiplicity(&self, exponents: &[u32], degree: u32) -> u64 {
        self.decompose(exponents).get(&degree).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.memo.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One line per memoized tuple: `a_1,...,a_r: m:mult ...`, sorted by key.
    pub fn export_text(&self) -> String {
        let memo = self.memo.read().unwrap();
        let mut keys: Vec<&Vec<u32>> = memo.keys().collect();
        keys.sort();
        let mut out = String::new();
        for key in keys {
            let tuple: Vec<String> = key.iter().map(u32::to_string).collect();
            write!(out, "{}:", tuple.join(",")).unwrap();
            for (m, mult) in memo[key].iter() {
                write!(out, " {m}:{mult}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// `b_m(n_1, ..., n_r)`: multiplicity of `lambda(m)` in `lambda(n_1) ... lambda(n_r)`,
/// computed prime by prime.
pub fn branching_coeff(tuple: &[FactoredInt], m: &FactoredInt) -> u64 {
    branching_coeff_in(BranchingTable::global(), tuple, m)
}

pub fn branching_coeff_in(table: &BranchingTable, tuple: &[FactoredInt], m: &FactoredInt) -> u64 {
    let mut primes: Vec<u64> = tuple
        .iter()
        .chain(std::iter::once(m))
        .flat_map(|n| n.factors().iter().map(|&(p, _)| p))
        .collect();
    primes.sort_unstable();
    primes.dedup();
    let mut total = 1u64;
    for p in primes {
        let exps: Vec<u32> = tuple.iter().map(|n| n.exponent_of(p)).collect();
        let mult = table.multiplicity(&exps, m.exponent_of(p));
        if mult == 0 {
            return 0;
        }
        total *= mult;
    }
    total
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub tuple: Vec<u64>,
    pub tau_product: u64,
    pub max_coeff: u64,
    pub argmax: u64,
    pub divisors_checked: usize,
    pub passed: bool,
}

/// Check `b_m(n_1..n_r) <= tau(n_1) ... tau(n_r)` for every divisor `m` of `n_1 ... n_r`.
pub fn branching_bound_check(tuple: &[u64]) -> Result<BoundCheck> {
    if tuple.is_empty() || tuple.len() > 6 || tuple.iter().any(|&n| n == 0 || n > 30) {
        return Err(LabError::InvalidArgument(
            "bound check expects 1 to 6 entries, each in 1..=30".into(),
        ));
    }
    let factored: Vec<FactoredInt> = tuple
        .iter()
        .map(|&n| FactoredInt::new(n))
        .collect::<Result<_>>()?;
    let tau_product: u64 = factored.iter().map(divisor_tau).product();
    let mut total: BTreeMap<u64, u32> = BTreeMap::new();
    for f in &factored {
        for &(p, a) in f.factors() {
            *total.entry(p).or_insert(0) += a;
        }
    }
    let total: Vec<(u64, u32)> = total.into_iter().collect();
    let mut divisors = vec![Vec::<(u64, u32)>::new()];
    for &(p, a) in &total {
        divisors = divisors
            .into_iter()
            .flat_map(|d| {
                (0..=a).map(move |e| {
                    let mut d = d.clone();
                    if e > 0 {
                        d.push((p, e));
                    }
                    d
                })
            })
            .collect();
    }
    let mut check = BoundCheck {
        tuple: tuple.to_vec(),
        tau_product,
        max_coeff: 0,
        argmax: 1,
        divisors_checked: divisors.len(),
        passed: true,
    };
    for d in divisors {
        let m = FactoredInt::from_factors(d)?;
        let b = branching_coeff(&factored, &m);
        if b > check.max_coeff {
            check.max_coeff = b;
            check.argmax = m.value();
        }
    }
    check.passed = check.max_coeff <= tau_product;
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fi(n: u64) -> FactoredInt {
        FactoredInt::new(n).unwrap()
    }

    fn b(tuple: &[u64], m: u64) -> u64 {
        let t: Vec<FactoredInt> = tuple.iter().map(|&n| fi(n)).collect();
        branching_coeff(&t, &fi(m))
    }

    #[test]
    fn clebsch_gordan_examples() {
        assert_eq!(clebsch_gordan(1, 1), vec![2, 0]);
        assert_eq!(clebsch_gordan(0, 5), vec![5]);
        assert_eq!(clebsch_gordan(2, 1), vec![3, 1]);
        assert_eq!(clebsch_gordan(3, 3), vec![6, 4, 2, 0]);
    }

    #[test]
    fn branching_examples() {
        assert_eq!(b(&[2, 2], 1), 1);
        assert_eq!(b(&[2, 2], 4), 1);
        assert_eq!(b(&[2, 2], 2), 0);
        assert_eq!(b(&[2, 3], 1), 0);
        assert_eq!(b(&[2, 3], 6), 1);
        assert_eq!(b(&[2, 2, 2, 2], 1), 2);
        assert_eq!(b(&[6, 6], 1), 1);
        assert_eq!(b(&[6, 10], 15), 1);
        assert_eq!(b(&[6, 10], 5), 0);
    }

    #[test]
    fn catalan_moments() {
        let catalan = [1u64, 1, 2, 5, 14, 42, 132];
        for (m, &c) in catalan.iter().enumerate() {
            assert_eq!(b(&vec![5; 2 * m], 1), c, "m={m}");
        }
    }

    #[test]
    fn bound_examples() {
        let c = branching_bound_check(&[2, 2]).unwrap();
        assert_eq!(c.max_coeff, 1);
        assert_eq!(c.tau_product, 4);
        let c = branching_bound_check(&[4, 4]).unwrap();
        assert!(c.passed && c.max_coeff <= 9);
        assert!(branching_bound_check(&[31]).is_err());
        assert!(branching_bound_check(&[]).is_err());
    }

    #[test]
    fn table_export_is_sorted() {
        let t = BranchingTable::new();
        t.decompose(&[1, 1]);
        t.decompose(&[2]);
        let text = t.export_text();
        assert_eq!(text, ":\u{20}0:1\n1: 1:1\n1,1: 0:1 2:1\n2: 2:1\n");
    }

    #[test]
    fn delta_at_four() {
        let f = &crate::eigen::eigenforms(12, 100).unwrap()[0];
        let v = lambda_at(f, &fi(4)).unwrap();
        assert!((v - (-1472.0 / 2048.0)).abs() < 1e-12);
        assert_eq!(lambda_at(f, &fi(1)).unwrap(), 1.0);
        let six = lambda_at(f, &fi(6)).unwrap();
        assert!((six - f.lambda_p(2).unwrap() * f.lambda_p(3).unwrap()).abs() < 1e-15);
        assert!(matches!(lambda_at(f, &fi(103)), Err(LabError::Coverage { .. })));
        let r = deligne_report(f, 100, 1e-9).unwrap();
        assert!(r.passed && r.max_ratio <= 1.0 + 1e-9);
        assert_eq!(deligne_report(f, 1, 1e-9).unwrap().max_ratio, 1.0);
    }
}
