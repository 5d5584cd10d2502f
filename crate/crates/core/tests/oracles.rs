mod common;

use common::*;
use heckelab::arith::FactoredInt;
use heckelab::cache::EigenCache;
use heckelab::eigen::eigenforms;
use heckelab::hecke::{branching_coeff, BranchingTable};
use heckelab::moments::{harmonic_weights, petersson_check};
use heckelab::qseries::delta_expansion;
use heckelab::satotate::exact_moment;
use heckelab::sums::{first_sign_change, friable_sum, Weight};
use num_bigint::BigInt;

#[test]
fn tau_from_eisenstein_matches_eta_product() {
    let eta = ramanujan_tau_eta(1001);
    let delta = delta_expansion(1001).unwrap();
    for n in 0..=1000 {
        assert_eq!(delta.coeff(n), &eta[n], "n = {n}");
    }
    assert_eq!(eta[2], BigInt::from(-24));
    assert_eq!(eta[11], BigInt::from(534_612));
}

#[test]
fn delta_prime_coefficients_match_eta_product() {
    let eta = ramanujan_tau_eta(500);
    let f = &eigenforms(12, 499).unwrap()[0];
    for (&p, _) in f.primes().iter().zip(f.coefficients()) {
        assert_eq!(f.exact_coefficient(p).unwrap(), &eta[p as usize], "p = {p}");
    }
}

#[test]
fn first_sign_changes_match_q_expansions() {
    let len = 60;
    for (w, k) in [(4u32, 16u32), (6, 18)] {
        let series = eisenstein_times_delta(w, len);
        let want = (1..len).find(|&n| series[n] < BigInt::from(0)).map(|n| n as u64);
        let f = &eigenforms(k, 59).unwrap()[0];
        assert_eq!(first_sign_change(f, 59).unwrap(), want, "k = {k}");
        for p in f.primes() {
            assert_eq!(f.exact_coefficient(*p).unwrap(), &series[*p as usize]);
        }
    }
}

#[test]
fn friable_sums_match_trial_division() {
    for &(x, y) in &[(1000u64, 7u64), (5000, 31), (20_000, 100), (30_000, 2), (777, 777)] {
        let got = friable_sum(x as f64, y as f64, Weight::Tau).unwrap().value;
        assert_eq!(got, brute_psi_tau(x, y) as f64, "x={x} y={y}");
    }
}

#[test]
fn branching_matches_characters() {
    let table = BranchingTable::new();
    let tuples: &[&[u32]] = &[&[1, 1], &[2, 3], &[1, 1, 1, 1], &[3, 4, 5], &[2, 2, 2], &[6, 1, 1, 3], &[0, 4]];
    for exps in tuples {
        let total: u32 = exps.iter().sum();
        for m in 0..=total {
            assert_eq!(table.multiplicity(exps, m), character_multiplicity(exps, m), "{exps:?} m={m}");
        }
    }
}

#[test]
fn branching_coefficients_match_characters_on_integers() {
    let f = |n: u64| FactoredInt::new(n).unwrap();
    let cases: &[(&[u64], u64)] = &[(&[6, 6], 1), (&[4, 2, 2], 1), (&[12, 18], 6), (&[12, 18], 1), (&[8, 4], 2)];
    for (tuple, m) in cases {
        let facts: Vec<FactoredInt> = tuple.iter().map(|&n| f(n)).collect();
        let mfac = f(*m);
        let mut want = 1u64;
        for p in [2u64, 3, 5, 7] {
            let exps: Vec<u32> = facts.iter().map(|n| n.exponent_of(p)).collect();
            want *= character_multiplicity(&exps, mfac.exponent_of(p));
        }
        assert_eq!(branching_coeff(&facts, &mfac), want, "{tuple:?} m={m}");
    }
}

#[test]
fn exact_moments_match_quadrature() {
    for x in 1..=9u64 {
        for l in 1..=2u32 {
            let q = quadrature_moment(x, l);
            let e = exact_moment(x as f64, l).unwrap() as f64;
            assert!((q - e).abs() < 1e-6 * e.max(1.0), "x={x} l={l}: {q} vs {e}");
        }
    }
}

#[test]
fn harmonic_weights_match_kloosterman_side() {
    let cache = EigenCache::new(scratch("oracle-cache")).unwrap();
    for k in [12u32, 16, 24] {
        let (forms, _) = cache.load_or_compute(k, 100_000).unwrap();
        let w = harmonic_weights(&forms, 100_000).unwrap();
        let tol = 3.0 * w.forms.iter().map(|f| f.sym2.tail_estimate).fold(0.0, f64::max);
        let want = petersson_rhs(k, 1, 1, 60);
        assert!((w.total / want - 1.0).abs() < tol, "k={k}: {} vs {want}", w.total);
        // off-diagonal terms: sum omega_f lambda_f(n) without normalization
        for n in 2..=4u64 {
            let avg = petersson_check(&forms, &w, n).unwrap().average * w.total;
            let want = petersson_rhs(k, 1, n, 60);
            assert!((avg - want).abs() < tol * w.total, "k={k} n={n}: {avg} vs {want}");
        }
    }
}
