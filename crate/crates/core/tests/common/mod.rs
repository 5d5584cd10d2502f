//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use num_bigint::BigInt;

/// Scratch directory under the cargo target dir, shared across test runs so
/// eigenvalue caches survive.
pub fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// `tau(n)` for `n < len` from `q prod (1 - q^n)^24`, with `prod (1 - q^n)`
/// from the pentagonal number theorem.
pub fn ramanujan_tau_eta(len: usize) -> Vec<BigInt> {
    let mut eta = vec![BigInt::from(0); len];
    eta[0] = BigInt::from(1);
    for j in 1i64.. {
        let sign = if j % 2 == 1 { -1 } else { 1 };
        let g1 = (j * (3 * j - 1) / 2) as usize;
        let g2 = (j * (3 * j + 1) / 2) as usize;
        if g1 >= len {
            break;
        }
        eta[g1] += sign;
        if g2 < len {
            eta[g2] += sign;
        }
    }
    let mul = |a: &[BigInt], b: &[BigInt]| {
        let mut c = vec![BigInt::from(0); len];
        for (i, x) in a.iter().enumerate() {
            if x == &BigInt::from(0) {
                continue;
            }
            for (j, y) in b.iter().take(len - i).enumerate() {
                c[i + j] += x * y;
            }
        }
        c
    };
    let e2 = mul(&eta, &eta);
    let e4 = mul(&e2, &e2);
    let e8 = mul(&e4, &e4);
    let e16 = mul(&e8, &e8);
    let e24 = mul(&e16, &e8);
    let mut tau = vec![BigInt::from(0); len];
    tau[1..].clone_from_slice(&e24[..len - 1]);
    tau
}

fn sigma(r: u32, n: u64) -> BigInt {
    (1..=n).filter(|d| n % d == 0).map(|d| BigInt::from(d).pow(r)).sum()
}

/// Coefficients of `E_w Delta` (`w` = 4 or 6) below `len`.
pub fn eisenstein_times_delta(w: u32, len: usize) -> Vec<BigInt> {
    let (c, r) = match w {
        4 => (240i64, 3),
        6 => (-504, 5),
        _ => panic!("w must be 4 or 6"),
    };
    let e: Vec<BigInt> = (0..len)
        .map(|n| if n == 0 { BigInt::from(1) } else { c * sigma(r, n as u64) })
        .collect();
    let tau = ramanujan_tau_eta(len);
    let mut out = vec![BigInt::from(0); len];
    for i in 0..len {
        for j in 0..len - i {
            out[i + j] += &e[i] * &tau[j];
        }
    }
    out
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Kloosterman sum `S(m, n; c)`.
pub fn kloosterman(m: u64, n: u64, c: u64) -> f64 {
    (1..=c)
        .filter(|&d| gcd(d, c) == 1)
        .map(|d| {
            let inv = (1..=c).find(|&e| (d * e) % c == 1 % c).unwrap();
            (2.0 * PI * ((m * d + n * inv) % c) as f64 / c as f64).cos()
        })
        .sum()
}

/// `J_n(x) = (1/2pi) int_0^{2pi} cos(n t - x sin t) dt` by the trapezoid rule,
/// which is spectrally accurate for this periodic integrand.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let m = 512;
    (0..m)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / m as f64;
            (n as f64 * t - x * t.sin()).cos()
        })
        .sum::<f64>()
        / m as f64
}

/// Right side of the Petersson formula for level one:
/// `delta(m, n) + 2 pi i^{-k} sum_c S(m, n; c)/c J_{k-1}(4 pi sqrt(mn)/c)`.
pub fn petersson_rhs(k: u32, m: u64, n: u64, c_max: u64) -> f64 {
    let sign = if k % 4 == 0 { 1.0 } else { -1.0 };
    let x = 4.0 * PI * ((m * n) as f64).sqrt();
    let kl: f64 = (1..=c_max)
        .map(|c| kloosterman(m, n, c) / c as f64 * bessel_j(k - 1, x / c as f64))
        .sum();
    (if m == n { 1.0 } else { 0.0 }) + sign * 2.0 * PI * kl
}

pub fn trial_factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        let mut e = 0;
        while n % d == 0 {
            n /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// `Psi(x, y; tau)` by factoring every `n <= x`.
pub fn brute_psi_tau(x: u64, y: u64) -> u64 {
    (1..=x)
        .map(trial_factor)
        .filter(|f| f.last().map_or(true, |&(p, _)| p <= y))
        .map(|f| f.iter().map(|&(_, e)| e as u64 + 1).product::<u64>())
        .sum()
}

/// `sin((a + 1) t) / sin t`
pub fn sym_char(a: u32, t: f64) -> f64 {
    ((a + 1) as f64 * t).sin() / t.sin()
}

/// Haar average over SU(2) of `g(theta)`, exact for trigonometric
/// polynomials of degree below `points - 2`.
pub fn haar_average(points: usize, g: impl Fn(f64) -> f64) -> f64 {
    (0..points)
        .map(|j| {
            let t = 2.0 * PI * (j as f64 + 0.5) / points as f64;
            let s = t.sin();
            g(t) * s * s
        })
        .sum::<f64>()
        / points as f64
        * 2.0
}

/// Multiplicity of `Sym^m` in `Sym^{a_1} (x) ... (x) Sym^{a_r}` from characters.
pub fn character_multiplicity(exps: &[u32], m: u32) -> u64 {
    let deg: u32 = exps.iter().sum::<u32>() + m;
    let v = haar_average(deg as usize + 8, |t| {
        exps.iter().map(|&a| sym_char(a, t)).product::<f64>() * sym_char(m, t)
    });
    let r = v.round();
    assert!((v - r).abs() < 1e-6, "non-integral multiplicity {v}");
    r as u64
}

/// `E (sum_{n <= x} X(n))^{2l}` by tensor-product quadrature over the angles
/// of the primes up to `x`.
pub fn quadrature_moment(x: u64, l: u32) -> f64 {
    let facts: Vec<Vec<(u64, u32)>> = (1..=x).map(trial_factor).collect();
    let primes: Vec<u64> = (2..=x).filter(|&n| trial_factor(n).len() == 1 && trial_factor(n)[0].1 == 1).collect();
    let degs: Vec<usize> = primes
        .iter()
        .map(|&p| {
            let mut e = 0;
            let mut q = p;
            while q <= x {
                q *= p;
                e += 1;
            }
            2 * l as usize * e + 8
        })
        .collect();
    let nodes: Vec<Vec<(f64, f64)>> = degs
        .iter()
        .map(|&m| {
            (0..m)
                .map(|j| {
                    let t = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                    (t, 2.0 * t.sin() * t.sin() / m as f64)
                })
                .collect()
        })
        .collect();
    let mut idx = vec![0usize; primes.len()];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for (i, &j) in idx.iter().enumerate() {
            w *= nodes[i][j].1;
        }
        let s: f64 = facts
            .iter()
            .map(|f| {
                f.iter()
                    .map(|&(p, a)| {
                        let i = primes.iter().position(|&q| q == p).unwrap();
                        sym_char(a, nodes[i][idx[i]].0)
                    })
                    .product::<f64>()
            })
            .sum();
        total += w * s.powi(2 * l as i32);
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return total;
            }
            idx[pos] += 1;
            if idx[pos] < nodes[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
