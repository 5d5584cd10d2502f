//! Number-theoretic transforms over word-sized primes `p = c * 2^L + 1 < 2^31`,
//! with Montgomery arithmetic. Residues are kept in Montgomery form from
//! `to_mont` until `from_mont`. Transformed vectors are in bit-reversed order,
//! which is harmless for pointwise products.

/// Primes `p < 2^31` with `2^two_adicity | p - 1`, largest first.
pub fn ntt_primes(two_adicity: u32, count: usize) -> Vec<u32> {
    let step = 1u64 << two_adicity;
    let mut out = Vec::with_capacity(count);
    let mut c = ((1u64 << 31) - 1) / step;
    while out.len() < count && c > 0 {
        let p = c * step + 1;
        if p < (1 << 31) && crate::arith::is_prime(p) {
            out.push(p as u32);
        }
        c -= 1;
    }
    assert!(out.len() == count, "not enough NTT primes with 2-adicity {two_adicity}");
    out
}

#[derive(Debug, Clone)]
pub struct NttField {
    p: u32,
    /// `-p^{-1} mod 2^32`
    p_neg_inv: u32,
    r2: u32,
    max_log: u32,
    roots: Vec<u32>,
    inv_roots: Vec<u32>,
}

impl NttField {
    pub fn new(p: u32, max_log: u32) -> Self {
        assert!(p % 2 == 1 && p < (1 << 31));
        assert!((p - 1) % (1 << max_log) == 0, "{p} lacks 2^{max_log}-th roots of unity");
        let mut inv = 1u32;
        for _ in 0..5 {
            inv = inv.wrapping_mul(2u32.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r = ((1u64 << 32) % p as u64) as u32;
        let r2 = ((r as u64 * r as u64) % p as u64) as u32;
        let mut f = Self {
            p,
            p_neg_inv: inv.wrapping_neg(),
            r2,
            max_log,
            roots: Vec::new(),
            inv_roots: Vec::new(),
        };
        let g = f.primitive_root();
        let n = 1usize << max_log;
        let w = f.pow(f.to_mont(g), ((p - 1) >> max_log) as u64);
        let w_inv = f.pow(w, (p - 2) as u64);
        f.roots = f.stage_table(w, n);
        f.inv_roots = f.stage_table(w_inv, n);
        f
    }

    // roots[h + j] = w_{2h}^j for each power of two h < n
    fn stage_table(&self, w_n: u32, n: usize) -> Vec<u32> {
        let mut table = vec![0u32; n.max(2)];
        let mut h = n / 2;
        let mut w = w_n;
        while h >= 1 {
            let mut cur = self.one();
            for j in 0..h {
                table[h + j] = cur;
                cur = self.mul(cur, w);
            }
            w = self.mul(w, w);
            h /= 2;
        }
        table
    }

    fn primitive_root(&self) -> u32 {
        let p = self.p as u64;
        let mut factors = Vec::new();
        let mut m = p - 1;
        let mut d = 2;
        while d * d <= m {
            if m % d == 0 {
                factors.push(d);
                while m % d == 0 {
                    m /= d;
                }
            }
            d += 1;
        }
        if m > 1 {
            factors.push(m);
        }
        (2..p)
            .find(|&g| {
                factors
                    .iter()
                    .all(|&q| self.from_mont(self.pow(self.to_mont(g as u32), (p - 1) / q)) != 1)
            })
            .expect("prime has a primitive root") as u32
    }

    pub fn modulus(&self) -> u32 {
        self.p
    }

    #[inline(always)]
    fn reduce(&self, t: u64) -> u32 {
        let u = (t as u32).wrapping_mul(self.p_neg_inv);
        let r = ((t + u as u64 * self.p as u64) >> 32) as u32;
        if r >= self.p {
            r - self.p
        } else {
            r
        }
    }

    #[inline(always)]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.reduce(a as u64 * b as u64)
    }

    #[inline(always)]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    pub fn one(&self) -> u32 {
        self.to_mont(1)
    }

    pub fn to_mont(&self, a: u32) -> u32 {
        self.mul(a % self.p, self.r2)
    }

    pub fn from_mont(&self, a: u32) -> u32 {
        self.reduce(a as u64)
    }

    /// Montgomery form of an arbitrary signed integer.
    pub fn from_i128(&self, v: i128) -> u32 {
        let r = v.rem_euclid(self.p as i128) as u32;
        self.to_mont(r)
    }

    pub fn pow(&self, mut base: u32, mut e: u64) -> u32 {
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u32) -> u32 {
        self.pow(a, (self.p - 2) as u64)
    }

    /// Decimation in frequency: natural order in, bit-reversed order out.
    pub fn forward(&self, a: &mut [u32]) {
        let n = a.len();
        debug_assert!(n.is_power_of_two() && n <= 1 << self.max_log);
        let mut h = n / 2;
        while h >= 1 {
            let tw = &self.roots[h..2 * h];
            for chunk in a.chunks_exact_mut(2 * h) {
                let (lo, hi) = chunk.split_at_mut(h);
                for ((x, y), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(tw) {
                    let u = *x;
                    let v = *y;
                    *x = self.add(u, v);
                    *y = self.mul(self.sub(u, v), w);
                }
            }
            h /= 2;
        }
    }

    /// Inverse of [`Self::forward`]: bit-reversed order in, natural order out.
    pub fn inverse(&self, a: &mut [u32]) {
        let n = a.len();
        debug_assert!(n.is_power_of_two() && n <= 1 << self.max_log);
        let mut h = 1;
        while h < n {
            let tw = &self.inv_roots[h..2 * h];
            for chunk in a.chunks_exact_mut(2 * h) {
                let (lo, hi) = chunk.split_at_mut(h);
                for ((x, y), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(tw) {
                    let u = *x;
                    let v = self.mul(*y, w);
                    *x = self.add(u, v);
                    *y = self.sub(u, v);
                }
            }
            h *= 2;
        }
        let n_inv = self.inv(self.to_mont(n as u32));
        for x in a.iter_mut() {
            *x = self.mul(*x, n_inv);
        }
    }

    /// Product of two series truncated to `n` terms.
    pub fn mul_trunc(&self, a: &[u32], b: &[u32], n: usize) -> Vec<u32> {
        let la = a.len().min(n);
        let lb = b.len().min(n);
        if la == 0 || lb == 0 {
            return vec![0; n];
        }
        if la.min(lb) <= 32 {
            let mut out = vec![0u32; n];
            for (i, &x) in a[..la].iter().enumerate() {
                if x == 0 {
                    continue;
                }
                for (j, &y) in b[..lb.min(n - i)].iter().enumerate() {
                    out[i + j] = self.add(out[i + j], self.mul(x, y));
                }
            }
            return out;
        }
        let size = (la + lb - 1).next_power_of_two();
        let mut fa = vec![0u32; size];
        fa[..la].copy_from_slice(&a[..la]);
        self.forward(&mut fa);
        let mut fb = vec![0u32; size];
        fb[..lb].copy_from_slice(&b[..lb]);
        self.forward(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x = self.mul(*x, *y);
        }
        self.inverse(&mut fa);
        fa.truncate(n);
        fa.resize(n, 0);
        fa
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(f: &NttField, a: &[u32], b: &[u32], n: usize) -> Vec<u32> {
        let mut out = vec![0u32; n];
        for i in 0..a.len() {
            for j in 0..b.len() {
                if i + j < n {
                    out[i + j] = f.add(out[i + j], f.mul(a[i], b[j]));
                }
            }
        }
        out
    }

    #[test]
    fn primes_have_required_adicity() {
        let ps = ntt_primes(20, 8);
        for w in ps.windows(2) {
            assert!(w[0] > w[1]);
        }
        for &p in &ps {
            assert_eq!((p - 1) % (1 << 20), 0);
            assert!(crate::arith::is_prime(p as u64));
        }
    }

    #[test]
    fn montgomery_roundtrip() {
        let f = NttField::new(ntt_primes(20, 1)[0], 12);
        for v in [0u32, 1, 2, 12345, f.modulus() - 1] {
            assert_eq!(f.from_mont(f.to_mont(v)), v);
        }
        let a = f.to_mont(123456);
        let b = f.to_mont(654321);
        let expect = (123456u64 * 654321 % f.modulus() as u64) as u32;
        assert_eq!(f.from_mont(f.mul(a, b)), expect);
        assert_eq!(f.from_mont(f.mul(f.inv(a), a)), 1);
        assert_eq!(f.from_mont(f.from_i128(-1)), f.modulus() - 1);
    }

    #[test]
    fn convolution_matches_schoolbook() {
        let f = NttField::new(ntt_primes(20, 2)[1], 12);
        let a: Vec<u32> = (0..300u32).map(|i| f.to_mont(i * i + 7)).collect();
        let b: Vec<u32> = (0..200u32).map(|i| f.to_mont(3 * i + 1)).collect();
        for n in [1usize, 50, 400, 499, 600] {
            assert_eq!(f.mul_trunc(&a, &b, n), naive(&f, &a, &b, n));
        }
    }
}
