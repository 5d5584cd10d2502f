//! Exact univariate polynomials and real-root isolation.
//!
//! Polynomials are stored with ascending coefficients. Real roots are isolated
//! with a Sturm chain over the rationals and refined with Newton iterations in
//! dyadic fixed point: a value `X` at precision `s` stands for `X / 2^s`.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigInt) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = BigInt::zero();
        Self::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&zero) + other.coeffs.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = BigInt::zero();
        Self::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&zero) - other.coeffs.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Remainder modulo a monic polynomial; exact over the integers.
    pub fn rem_monic(&self, m: &Self) -> Self {
        let dm = m.degree().expect("modulus must be nonzero");
        assert!(m.leading().is_some_and(|c| c.is_one()), "modulus must be monic");
        let mut r = self.coeffs.clone();
        while r.len() > dm {
            let top = r.len() - 1;
            let c = r[top].clone();
            if !c.is_zero() {
                for (i, mc) in m.coeffs.iter().enumerate() {
                    r[top - dm + i] -= &c * mc;
                }
            }
            r.pop();
        }
        Self::new(r)
    }

    /// `self` divided by the (positive) gcd of its coefficients.
    pub fn primitive_part(&self) -> Self {
        let g = self.coeffs.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        if g.is_zero() || g.is_one() {
            return self.clone();
        }
        Self::new(self.coeffs.iter().map(|c| c / &g).collect())
    }

    /// Remainder of `|lc(m)|^{deg - deg m + 1} * self` on division by `m`,
    /// a positive multiple of the rational remainder.
    pub fn pseudo_rem(&self, m: &Self) -> Self {
        let dm = m.degree().expect("division by zero polynomial");
        let lead = m.coeffs[dm].clone();
        let mut r = self.coeffs.clone();
        let Some(ds) = self.degree() else {
            return Self::zero();
        };
        if ds < dm {
            return self.clone();
        }
        let steps = ds - dm + 1;
        for _ in 0..steps {
            let top = r.len() - 1;
            let c = r[top].clone();
            for x in r.iter_mut() {
                *x *= &lead;
            }
            if !c.is_zero() {
                for (i, mc) in m.coeffs.iter().enumerate() {
                    r[top - dm + i] -= &c * mc;
                }
            }
            r.pop();
        }
        let mut out = Self::new(r);
        if lead.is_negative() && steps % 2 == 1 {
            out = Self::new(out.coeffs.iter().map(|c| -c).collect());
        }
        out
    }

    /// `p(X / 2^s) * 2^(s * scale_deg)`; requires `scale_deg >= deg p`.
    pub fn eval_dyadic(&self, x: &BigInt, s: u32, scale_deg: usize) -> BigInt {
        let Some(d) = self.degree() else {
            return BigInt::zero();
        };
        assert!(scale_deg >= d);
        let mut acc = BigInt::zero();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            acc = acc * x + (c << (s as usize * (d - i)));
        }
        // acc = sum c_i X^i 2^{s (d - i)}
        acc << (s as usize * (scale_deg - d))
    }

    pub fn sign_at(&self, x: &BigInt, s: u32) -> Sign {
        self.eval_dyadic(x, s, self.degree().unwrap_or(0)).sign()
    }

    /// Upper bound `2^b` on the absolute value of every complex root
    /// (Fujiwara: `2 max |c_{d-i} / c_d|^{1/i}`).
    pub fn root_bound_log2(&self) -> u64 {
        let d = self.degree().expect("nonzero");
        let lead_bits = self.coeffs[d].bits() as i64;
        let worst = (1..=d)
            .filter(|&i| !self.coeffs[d - i].is_zero())
            .map(|i| {
                let diff = self.coeffs[d - i].bits() as i64 - lead_bits + 1;
                num_integer::Integer::div_ceil(&diff, &(i as i64))
            })
            .max()
            .unwrap_or(0);
        (worst.max(0) + 1) as u64
    }
}

/// Whether `p` and `p'` are coprime over the rationals.
pub fn is_squarefree(p: &IntPoly) -> bool {
    let mut a = p.primitive_part();
    let mut b = p.derivative().primitive_part();
    while !b.is_zero() {
        let r = a.pseudo_rem(&b).primitive_part();
        a = b;
        b = r;
    }
    a.degree() == Some(0)
}

/// Sturm chain `p, p', -rem(...)`, each term scaled by a positive constant.
pub fn sturm_chain(p: &IntPoly) -> Vec<IntPoly> {
    let mut chain = vec![p.clone(), p.derivative().primitive_part()];
    loop {
        let n = chain.len();
        let (a, b) = (&chain[n - 2], &chain[n - 1]);
        if b.is_zero() || b.degree() == Some(0) {
            break;
        }
        let r = a.pseudo_rem(b);
        if r.is_zero() {
            break;
        }
        let neg = IntPoly::new(r.coeffs.iter().map(|c| -c).collect()).primitive_part();
        chain.push(neg);
    }
    chain
}

fn sign_variations(chain: &[IntPoly], x: &BigInt, s: u32) -> usize {
    let mut last = Sign::NoSign;
    let mut count = 0;
    for q in chain {
        let sg = q.sign_at(x, s);
        if sg == Sign::NoSign {
            continue;
        }
        if last != Sign::NoSign && sg != last {
            count += 1;
        }
        last = sg;
    }
    count
}

/// Dyadic fixed-point approximation `mant / 2^bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dyadic {
    pub mant: BigInt,
    pub bits: u32,
}

impl Dyadic {
    pub fn with_bits(&self, bits: u32) -> BigInt {
        if bits >= self.bits {
            &self.mant << (bits - self.bits) as usize
        } else {
            round_shift(&self.mant, self.bits - bits)
        }
    }

    pub fn to_f64(&self) -> f64 {
        let m = round_shift(&self.mant, self.bits.saturating_sub(60));
        let e = self.bits.min(60) as i32;
        to_f64_lossy(&m) / 2f64.powi(e)
    }
}

/// `round(x / 2^k)` with ties away from zero.
pub fn round_shift(x: &BigInt, k: u32) -> BigInt {
    if k == 0 {
        return x.clone();
    }
    let half = BigInt::one() << (k as usize - 1);
    if x.is_negative() {
        -((-x + half) >> k as usize)
    } else {
        (x + half) >> k as usize
    }
}

/// `round(num / den)` for `den > 0`, halves rounded up.
pub fn round_div(num: &BigInt, den: &BigInt) -> BigInt {
    debug_assert!(den.is_positive());
    let twice: BigInt = num * 2 + den;
    twice.div_floor(&(den * 2))
}

pub fn to_f64_lossy(x: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    let bits = x.bits();
    if bits <= 1000 {
        x.to_f64().unwrap_or(f64::NAN)
    } else {
        let shift = bits - 60;
        let m = (x >> shift as usize).to_f64().unwrap();
        m * 2f64.powi(shift as i32)
    }
}

/// An isolating interval `(lo, hi) / 2^bits` containing exactly one root.
#[derive(Debug, Clone)]
struct Isolated {
    lo: BigInt,
    hi: BigInt,
    bits: u32,
}

/// All real roots of a squarefree integer polynomial, ascending, each to
/// absolute precision `2^-target_bits`.
pub fn real_roots(p: &IntPoly, target_bits: u32) -> Result<Vec<Dyadic>> {
    let d = p.degree().ok_or_else(|| LabError::Numerical("zero polynomial".into()))?;
    if d == 0 {
        return Ok(Vec::new());
    }
    let chain = sturm_chain(p);
    let b = p.root_bound_log2() as usize;
    let mut work = vec![Isolated {
        lo: -(BigInt::one() << b),
        hi: BigInt::one() << b,
        bits: 0,
    }];
    let mut isolated = Vec::new();
    while let Some(iv) = work.pop() {
        let vl = sign_variations(&chain, &iv.lo, iv.bits);
        let vh = sign_variations(&chain, &iv.hi, iv.bits);
        let count = vl.saturating_sub(vh);
        match count {
            0 => {}
            1 => isolated.push(iv),
            _ => {
                if iv.bits > 4096 {
                    return Err(LabError::Numerical("root isolation did not converge".into()));
                }
                let bits = iv.bits + 1;
                let lo = iv.lo << 1usize;
                let hi = iv.hi << 1usize;
                let mut mid: BigInt = (&lo + &hi) >> 1usize;
                // a root exactly at the split point would be counted twice
                let mut bits_m = bits;
                let mut lo_m = lo.clone();
                let mut hi_m = hi.clone();
                while p.sign_at(&mid, bits_m) == Sign::NoSign {
                    bits_m += 3;
                    lo_m <<= 3usize;
                    hi_m <<= 3usize;
                    mid = (mid << 3usize) + 1;
                }
                work.push(Isolated {
                    lo: lo_m.clone(),
                    hi: mid.clone(),
                    bits: bits_m,
                });
                work.push(Isolated {
                    lo: mid,
                    hi: hi_m,
                    bits: bits_m,
                });
            }
        }
    }
    isolated.sort_by(|a, b| {
        let s = a.bits.max(b.bits);
        (&a.lo << (s - a.bits) as usize).cmp(&(&b.lo << (s - b.bits) as usize))
    });
    isolated
        .into_iter()
        .map(|iv| refine_root(p, iv, target_bits))
        .collect()
}

fn refine_root(p: &IntPoly, iv: Isolated, target_bits: u32) -> Result<Dyadic> {
    let Isolated { mut lo, mut hi, mut bits } = iv;
    let mut s_lo = p.sign_at(&lo, bits);
    // An endpoint may itself be the root.
    if s_lo == Sign::NoSign {
        return Ok(Dyadic { mant: lo, bits }.rescaled(target_bits));
    }
    if p.sign_at(&hi, bits) == Sign::NoSign {
        return Ok(Dyadic { mant: hi, bits }.rescaled(target_bits));
    }
    // bisection until the bracket is narrower than 2^-64
    let narrow = |lo: &BigInt, hi: &BigInt, bits: u32| {
        bits >= 64 && ((hi - lo).bits() as i64) <= bits as i64 - 64
    };
    while !narrow(&lo, &hi, bits) && bits < target_bits {
        bits += 1;
        lo <<= 1usize;
        hi <<= 1usize;
        let mid: BigInt = (&lo + &hi) >> 1usize;
        let sm = p.sign_at(&mid, bits);
        if sm == Sign::NoSign {
            return Ok(Dyadic { mant: mid, bits }.rescaled(target_bits));
        }
        if sm == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        s_lo = p.sign_at(&lo, bits);
    }
    if bits >= target_bits {
        let mid = (&lo + &hi) >> 1usize;
        return Ok(Dyadic { mant: mid, bits }.rescaled(target_bits));
    }
    let dp = p.derivative();
    let d = p.degree().unwrap();
    let mut x: BigInt = (&lo + &hi) >> 1usize;
    let mut s = bits;
    let lo_at = |prec: u32| &lo << (prec - bits) as usize;
    let hi_at = |prec: u32| &hi << (prec - bits) as usize;
    loop {
        let next_s = (s * 2).min(target_bits + 32);
        x <<= (next_s - s) as usize;
        s = next_s;
        for _ in 0..2 {
            let num = p.eval_dyadic(&x, s, d);
            let den = dp.eval_dyadic(&x, s, d.saturating_sub(1).max(0));
            if den.is_zero() {
                return Err(LabError::Numerical("vanishing derivative in Newton step".into()));
            }
            // x_{n+1} = x_n - p/p' in units of 2^-s
            x -= round_div(&(num * den.signum()), &den.abs());
            if x < lo_at(s) || x > hi_at(s) {
                return bisect_fallback(p, lo, hi, bits, target_bits);
            }
        }
        if s >= target_bits + 32 {
            break;
        }
    }
    // certify with a sign change around the estimate
    let eps = BigInt::from(4);
    let a = p.sign_at(&(&x - &eps), s);
    let b = p.sign_at(&(&x + &eps), s);
    if a == b && a != Sign::NoSign && b != Sign::NoSign {
        return bisect_fallback(p, lo, hi, bits, target_bits);
    }
    Ok(Dyadic { mant: x, bits: s }.rescaled(target_bits))
}

fn bisect_fallback(
    p: &IntPoly,
    mut lo: BigInt,
    mut hi: BigInt,
    mut bits: u32,
    target_bits: u32,
) -> Result<Dyadic> {
    let mut s_lo = p.sign_at(&lo, bits);
    while bits < target_bits + 2 {
        bits += 1;
        lo <<= 1usize;
        hi <<= 1usize;
        let mid: BigInt = (&lo + &hi) >> 1usize;
        let sm = p.sign_at(&mid, bits);
        if sm == Sign::NoSign {
            return Ok(Dyadic { mant: mid, bits }.rescaled(target_bits));
        }
        if sm == s_lo {
            lo = mid;
            s_lo = sm;
        } else {
            hi = mid;
        }
    }
    Ok(Dyadic {
        mant: (&lo + &hi) >> 1usize,
        bits,
    }
    .rescaled(target_bits))
}

impl Dyadic {
    fn rescaled(self, bits: u32) -> Dyadic {
        Dyadic {
            mant: self.with_bits(bits),
            bits,
        }
    }
}
