//! Integer kernel: prime tables, windowed ω/Ω sieving, ω∘φ, and the
//! double-logarithm scale used by every interval estimate.

use std::fmt;

use crate::error::{domain, Error, Result};

/// Largest supported window halfwidth.
pub const MAX_HALFWIDTH: u64 = 10_000_000;

/// Integers per sieving block.
pub const SEGMENT_LEN: usize = 1 << 20;

/// All primes up to `limit`, ascending.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    /// Plain Eratosthenes over odd numbers, one bit per odd.
    pub fn new(limit: u64) -> Self {
        let mut primes = Vec::new();
        if limit >= 2 {
            primes.push(2);
        }
        if limit >= 3 {
            // bit i stands for 2i + 1
            let n_odd = ((limit - 1) / 2 + 1) as usize;
            let mut composite = vec![0u64; n_odd.div_ceil(64)];
            let mut i = 1usize;
            while i < n_odd {
                let p = 2 * i as u64 + 1;
                if composite[i / 64] >> (i % 64) & 1 == 0 {
                    primes.push(p);
                    let mut k = (p * p / 2) as usize;
                    while k < n_odd {
                        composite[k / 64] |= 1 << (k % 64);
                        k += p as usize;
                    }
                }
                i += 1;
            }
        }
        PrimeTable { limit, primes }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }
}

/// Per-integer factor counts over `[center - halfwidth, center + halfwidth]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmegaWindow {
    center: u64,
    halfwidth: u64,
    omega: Vec<u8>,
    big_omega: Vec<u8>,
}

impl OmegaWindow {
    /// Assembles a window from precomputed counts. Lengths must equal `2 * halfwidth + 1`.
    pub fn from_parts(center: u64, halfwidth: u64, omega: Vec<u8>, big_omega: Vec<u8>) -> Result<Self> {
        let len = 2 * halfwidth + 1;
        if center <= halfwidth {
            return Err(Error::WindowBelowOne { center, halfwidth });
        }
        if omega.len() as u64 != len || big_omega.len() as u64 != len {
            return Err(domain(format!(
                "window arrays must have length {len}, got {} and {}",
                omega.len(),
                big_omega.len()
            )));
        }
        Ok(OmegaWindow { center, halfwidth, omega, big_omega })
    }

    pub fn center(&self) -> u64 {
        self.center
    }

    pub fn halfwidth(&self) -> u64 {
        self.halfwidth
    }

    /// First integer in the window.
    pub fn start(&self) -> u64 {
        self.center - self.halfwidth
    }

    /// Last integer in the window (inclusive).
    pub fn end(&self) -> u64 {
        self.center + self.halfwidth
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn omega(&self) -> &[u8] {
        &self.omega
    }

    pub fn big_omega(&self) -> &[u8] {
        &self.big_omega
    }

    pub fn contains(&self, t: u64) -> bool {
        t >= self.start() && t <= self.end()
    }

    /// ω(t), if `t` lies in the window.
    pub fn omega_at(&self, t: u64) -> Option<u8> {
        self.contains(t).then(|| self.omega[(t - self.start()) as usize])
    }

    /// Ω(t), if `t` lies in the window.
    pub fn big_omega_at(&self, t: u64) -> Option<u8> {
        self.contains(t).then(|| self.big_omega[(t - self.start()) as usize])
    }

    /// ω over `[lo, hi]`, if the whole range lies in the window.
    pub fn omega_slice(&self, lo: u64, hi: u64) -> Option<&[u8]> {
        if lo > hi || !self.contains(lo) || !self.contains(hi) {
            return None;
        }
        let a = (lo - self.start()) as usize;
        let b = (hi - self.start()) as usize;
        Some(&self.omega[a..=b])
    }

    /// `(t, ω(t), Ω(t))` in ascending `t`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u8, u8)> + '_ {
        let start = self.start();
        self.omega
            .iter()
            .zip(&self.big_omega)
            .enumerate()
            .map(move |(i, (&w, &bw))| (start + i as u64, w, bw))
    }
}

/// Sieves ω and Ω for every integer in `[center - j, center + j]`.
pub fn sieve_window(center: u64, j: u64) -> Result<OmegaWindow> {
    if j > MAX_HALFWIDTH {
        return Err(Error::WindowTooWide(j));
    }
    if center <= j {
        return Err(Error::WindowBelowOne { center, halfwidth: j });
    }
    let hi = center
        .checked_add(j)
        .filter(|&h| h < 1 << 63)
        .ok_or(Error::WindowOverflow { center, halfwidth: j })?;
    let lo = center - j;
    let primes = PrimeTable::new(isqrt(hi) + 1);
    let (omega, big_omega) = sieve_range_with(lo, hi, primes.primes());
    Ok(OmegaWindow { center, halfwidth: j, omega, big_omega })
}

/// Sieves `[lo, hi]` block by block with primes covering `sqrt(hi)`.
fn sieve_range_with(lo: u64, hi: u64, primes: &[u64]) -> (Vec<u8>, Vec<u8>) {
    let total = (hi - lo + 1) as usize;
    let mut omega = vec![0u8; total];
    let mut big_omega = vec![0u8; total];
    let mut rest = vec![0u64; SEGMENT_LEN.min(total)];

    let mut seg_lo = lo;
    while seg_lo <= hi {
        let seg_hi = hi.min(seg_lo + SEGMENT_LEN as u64 - 1);
        let n = (seg_hi - seg_lo + 1) as usize;
        let off = (seg_lo - lo) as usize;
        let w = &mut omega[off..off + n];
        let bw = &mut big_omega[off..off + n];
        for (i, r) in rest[..n].iter_mut().enumerate() {
            *r = seg_lo + i as u64;
        }
        for &p in primes {
            if p * p > seg_hi {
                break;
            }
            let first = seg_lo.div_ceil(p) * p;
            let mut t = first;
            while t <= seg_hi {
                let i = (t - seg_lo) as usize;
                w[i] += 1;
                let r = &mut rest[i];
                while (*r).is_multiple_of(p) {
                    *r /= p;
                    bw[i] += 1;
                }
                t += p;
            }
        }
        for i in 0..n {
            if rest[i] > 1 {
                w[i] += 1;
                bw[i] += 1;
            }
        }
        seg_lo = seg_hi + 1;
    }
    (omega, big_omega)
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|s| s <= n) {
        r += 1;
    }
    r
}

/// Smallest-prime-factor table on `[0, limit]`; factors anything up to `limit²`.
#[derive(Clone, Debug)]
pub struct SpfTable {
    spf: Vec<u32>,
    primes: Vec<u64>,
}

impl SpfTable {
    pub fn new(limit: u32) -> Self {
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes: Vec<u64> = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u64);
            }
            let si = spf[i] as u64;
            for &p in &primes {
                if p > si || p * i as u64 > n as u64 {
                    break;
                }
                spf[p as usize * i] = p as u32;
            }
        }
        SpfTable { spf, primes }
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    /// Distinct prime factors of `n` with multiplicities, ascending.
    pub fn factor(&self, mut n: u64) -> Result<Vec<(u64, u32)>> {
        let limit = self.limit();
        if n == 0 || n as u128 > (limit as u128) * (limit as u128) {
            return Err(Error::FactorizationLimit(n));
        }
        let mut out: Vec<(u64, u32)> = Vec::new();
        let push = |p: u64, out: &mut Vec<(u64, u32)>| match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        };
        if n > limit {
            for &p in &self.primes {
                if p * p > n || n <= limit {
                    break;
                }
                while n.is_multiple_of(p) {
                    n /= p;
                    push(p, &mut out);
                }
            }
            if n > limit {
                // n ≤ limit² with no factor ≤ sqrt(n): prime
                push(n, &mut out);
                return Ok(out);
            }
        }
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            n /= p;
            push(p, &mut out);
        }
        Ok(out)
    }
}

/// ω(φ(m)): primes dividing some p − 1 for p | m, together with primes p where p² | m.
pub fn omega_phi(m: u64, spf: &SpfTable) -> Result<u32> {
    if m < 3 {
        return Err(domain(format!("omega_phi requires m >= 3, got {m}")));
    }
    let mut divisors: Vec<u64> = Vec::new();
    for (p, e) in spf.factor(m)? {
        if e >= 2 {
            divisors.push(p);
        }
        if p > 2 {
            divisors.extend(spf.factor(p - 1)?.into_iter().map(|(q, _)| q));
        }
    }
    divisors.sort_unstable();
    divisors.dedup();
    Ok(divisors.len() as u32)
}

/// ℓ₂ = log log m, natural logarithms.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogLog(f64);

impl LogLog {
    /// Wraps an ℓ₂ value directly, for integers too large to represent.
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(domain(format!("log log value must be finite, got {value}")));
        }
        Ok(LogLog(value))
    }

    /// ℓ₂(10^e) for a possibly huge decimal exponent `e > 0`.
    pub fn of_pow10(e: f64) -> Result<Self> {
        if !(e > 0.0) || !e.is_finite() {
            return Err(domain(format!("decimal exponent must be positive, got {e}")));
        }
        Self::new((e * std::f64::consts::LN_10).ln())
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// log log m for `m >= 3`.
pub fn loglog(m: u64) -> Result<LogLog> {
    if m < 3 {
        return Err(domain(format!("log log requires m >= 3, got {m}")));
    }
    Ok(LogLog((m as f64).ln().ln()))
}

/// Size of e^(e^x), kept as a base-10 logarithm so huge values stay printable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Magnitude {
    log10: f64,
}

impl Magnitude {
    pub fn log10(self) -> f64 {
        self.log10
    }

    /// The plain value, when it fits in an `f64`.
    pub fn value(self) -> Option<f64> {
        let v = 10f64.powf(self.log10);
        v.is_finite().then_some(v)
    }

    /// `(mantissa, exponent)` with `1 <= mantissa < 10`.
    pub fn mantissa_exponent(self) -> (f64, i64) {
        let e = self.log10.floor();
        let mut mant = 10f64.powf(self.log10 - e);
        let mut exp = e as i64;
        if mant >= 10.0 {
            mant /= 10.0;
            exp += 1;
        }
        (mant, exp)
    }
}

impl fmt::Display for Magnitude {
    /// One-decimal mantissa, e.g. `6.9e4`, `1.4e7993`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (mant, exp) = self.mantissa_exponent();
        let rounded = (mant * 10.0).round() / 10.0;
        if rounded >= 10.0 {
            write!(f, "{:.1}e{}", rounded / 10.0, exp + 1)
        } else {
            write!(f, "{rounded:.1}e{exp}")
        }
    }
}

/// e^(e^x), the integer scale matching an ℓ₂ value `x`.
pub fn exp_exp(x: f64) -> Magnitude {
    Magnitude { log10: x.exp() / std::f64::consts::LN_10 }
}
