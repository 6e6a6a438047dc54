//! Prime tables and the classical prime-counting functions built on them:
//! Chebyshev's ψ, π, the logarithmic integral li, the weighted count Π and
//! the remainders R = ψ − t and Q = Π − li.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, range, Error, Result};
use crate::quad;
use crate::sum::CompensatedSum;

/// Default upper bound on sieve limits.
pub const DEFAULT_MAX_LIMIT: u64 = 1_000_000_000;

/// li(2), the principal-value logarithmic integral at 2.
pub const LI_2: f64 = 1.045_163_780_117_492_784_844_588_889_194_613_136_522_615_578_151;

const SEGMENT_BYTES: usize = 1 << 18;
const CACHE_MAGIC: &[u8; 4] = b"FRB1";

/// Primes up to `limit` with their natural logarithms. Immutable once built.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
    log_primes: Vec<f64>,
}

/// ψ, π, li, Π and the remainders R and Q at a single abscissa.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderSample {
    pub t: f64,
    pub psi_t: f64,
    pub pi_t: u64,
    pub li_t: f64,
    pub big_pi_t: f64,
    pub r_t: f64,
    pub q_t: f64,
}

/// Plain sieve of Eratosthenes over `[0, limit]`.
pub fn simple_sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// Floor of the integer `k`-th root of `n`.
pub fn integer_root(n: u64, k: u32) -> u64 {
    if k == 1 || n < 2 {
        return n;
    }
    let mut r = (n as f64).powf(1.0 / k as f64).round() as u64;
    let pow_le = |r: u64| -> bool {
        let mut acc: u64 = 1;
        for _ in 0..k {
            match acc.checked_mul(r) {
                Some(v) if v <= n => acc = v,
                _ => return false,
            }
        }
        true
    };
    while r > 0 && !pow_le(r) {
        r -= 1;
    }
    while pow_le(r + 1) {
        r += 1;
    }
    r
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl PrimeTable {
    /// Segmented sieve with the default cap on `limit`.
    pub fn sieve(limit: u64) -> Result<Self> {
        Self::sieve_with_cap(limit, DEFAULT_MAX_LIMIT)
    }

    /// Segmented sieve of Eratosthenes. Working memory is one segment plus
    /// the base primes up to `sqrt(limit)`; the output itself is `O(π(limit))`.
    pub fn sieve_with_cap(limit: u64, max_limit: u64) -> Result<Self> {
        if limit < 2 {
            return domain(format!("sieve limit must be >= 2, got {limit}"));
        }
        if limit > max_limit {
            return Err(Error::Resource {
                message: format!("sieve limit {limit} exceeds the configured cap {max_limit}"),
                estimate: Some(limit as f64),
            });
        }
        let base = simple_sieve(integer_root(limit, 2));
        let mut primes = Vec::with_capacity(estimate_prime_count(limit));
        let mut segment = vec![false; SEGMENT_BYTES];
        let mut lo: u64 = 2;
        while lo <= limit {
            let hi = (lo + SEGMENT_BYTES as u64 - 1).min(limit);
            let len = (hi - lo + 1) as usize;
            segment[..len].fill(false);
            for &p in &base {
                if p * p > hi {
                    break;
                }
                let start = (p * p).max(lo.div_ceil(p) * p);
                let mut j = start;
                while j <= hi {
                    segment[(j - lo) as usize] = true;
                    j += p;
                }
            }
            primes.extend(
                segment[..len]
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| !c)
                    .map(|(i, _)| lo + i as u64),
            );
            lo = hi + 1;
        }
        Ok(Self::from_primes_unchecked(limit, primes))
    }

    fn from_primes_unchecked(limit: u64, primes: Vec<u64>) -> Self {
        let log_primes = primes.iter().map(|&p| (p as f64).ln()).collect();
        PrimeTable { limit, primes, log_primes }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn log_primes(&self) -> &[f64] {
        &self.log_primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Number of primes `<= n`, for `n` within the table.
    pub fn pi_int(&self, n: u64) -> usize {
        self.primes.partition_point(|&p| p <= n)
    }

    /// Number of primes not exceeding the real `y` (floor semantics).
    pub fn count_up_to(&self, y: f64) -> usize {
        if y < 2.0 {
            return 0;
        }
        self.pi_int(y.floor() as u64)
    }

    /// The primes not exceeding the real `y`, with their logarithms.
    pub fn up_to(&self, y: f64) -> (&[u64], &[f64]) {
        let k = self.count_up_to(y);
        (&self.primes[..k], &self.log_primes[..k])
    }

    fn check_abscissa(&self, t: f64) -> Result<u64> {
        if !(t >= 2.0) {
            return domain(format!("abscissa t must be >= 2, got {t}"));
        }
        if t > self.limit as f64 {
            return range(format!("abscissa t = {t} exceeds the prime table limit {}", self.limit));
        }
        Ok(t.floor() as u64)
    }

    /// Chebyshev's ψ(t) = Σ_{p^k ≤ t} log p.
    pub fn chebyshev_psi(&self, t: f64) -> Result<f64> {
        let n = self.check_abscissa(t)?;
        let mut acc = CompensatedSum::new();
        for (&p, &lp) in self.primes.iter().zip(&self.log_primes) {
            if p > n {
                break;
            }
            // Number of powers p^k not exceeding n.
            let mut k = 1u32;
            let mut pk = p;
            while pk <= n / p {
                pk *= p;
                k += 1;
            }
            acc.add(k as f64 * lp);
        }
        Ok(acc.value())
    }

    /// π(t), the number of primes not exceeding `t`.
    pub fn pi(&self, t: f64) -> Result<u64> {
        let n = self.check_abscissa(t)?;
        Ok(self.pi_int(n) as u64)
    }

    /// Π(t) = Σ_{1<n≤t} Λ(n)/log n.
    ///
    /// Λ(n)/log n equals 1/k when n = p^k and vanishes otherwise, so the sum
    /// regroups by exponent as Σ_{k≥1} π(t^{1/k})/k, stopping once t^{1/k} < 2.
    pub fn big_pi(&self, t: f64) -> Result<f64> {
        let n = self.check_abscissa(t)?;
        let mut acc = CompensatedSum::new();
        let mut k = 1u32;
        loop {
            let root = integer_root(n, k);
            if root < 2 {
                break;
            }
            acc.add(self.pi_int(root) as f64 / k as f64);
            k += 1;
        }
        Ok(acc.value())
    }

    pub fn remainder_sample(&self, t: f64) -> Result<RemainderSample> {
        let psi_t = self.chebyshev_psi(t)?;
        let pi_t = self.pi(t)?;
        let li_t = li(t)?;
        let big_pi_t = self.big_pi(t)?;
        Ok(RemainderSample {
            t,
            psi_t,
            pi_t,
            li_t,
            big_pi_t,
            r_t: psi_t - t,
            q_t: big_pi_t - li_t,
        })
    }

    /// Writes the binary cache: `FRB1`, the limit as u64 little-endian, then
    /// the prime gaps (first entry measured from zero) as LEB128 varints.
    pub fn write_cache<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(CACHE_MAGIC)?;
        out.write_all(&self.limit.to_le_bytes())?;
        let mut prev = 0u64;
        let mut buf = Vec::with_capacity(self.primes.len() * 2);
        for &p in &self.primes {
            write_varint(&mut buf, p - prev);
            prev = p;
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        self.write_cache(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Reads a cache written by [`PrimeTable::write_cache`]. The first and
    /// last entries are re-checked for primality.
    pub fn read_cache<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        if bytes.len() < 12 || &bytes[..4] != CACHE_MAGIC {
            return Err(Error::Format("missing FRB1 header".into()));
        }
        let limit = u64::from_le_bytes(bytes[4..12].try_into().expect("8-byte slice"));
        let mut primes = Vec::new();
        let mut pos = 12;
        let mut prev = 0u64;
        while pos < bytes.len() {
            let gap = read_varint(&bytes, &mut pos)?;
            if gap == 0 {
                return Err(Error::Format("zero gap in prime cache".into()));
            }
            prev = prev
                .checked_add(gap)
                .ok_or_else(|| Error::Format("prime cache overflows u64".into()))?;
            primes.push(prev);
        }
        let (Some(&first), Some(&last)) = (primes.first(), primes.last()) else {
            return Err(Error::Format("prime cache holds no primes".into()));
        };
        if limit < 2 || first != 2 || last > limit || !is_prime(first) || !is_prime(last) {
            return Err(Error::Format(format!(
                "prime cache failed validation (limit {limit}, first {first}, last {last})"
            )));
        }
        Ok(Self::from_primes_unchecked(limit, primes))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_cache(std::io::BufReader::new(file))
    }
}

fn estimate_prime_count(limit: u64) -> usize {
    let x = limit as f64;
    (1.26 * x / x.ln().max(1.0)) as usize + 16
}

fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn read_varint(bytes: &[u8], pos: &mut usize) -> Result<u64> {
    let mut v = 0u64;
    let mut shift = 0;
    loop {
        let Some(&b) = bytes.get(*pos) else {
            return Err(Error::Format("truncated varint".into()));
        };
        *pos += 1;
        if shift >= 64 {
            return Err(Error::Format("varint too long".into()));
        }
        v |= ((b & 0x7f) as u64) << shift;
        if b & 0x80 == 0 {
            return Ok(v);
        }
        shift += 7;
    }
}

/// Principal-value logarithmic integral for `t >= 2`, as li(2) plus the
/// regular integral of `1/log v` over `[2, t]`.
pub fn li(t: f64) -> Result<f64> {
    if !(t >= 2.0) {
        return domain(format!("li is only evaluated for t >= 2, got {t}"));
    }
    if !t.is_finite() {
        return range("li argument must be finite");
    }
    Ok(LI_2 + quad::integrate_geometric(|v: f64| 1.0 / v.ln(), 2.0, t, 2.0, 1e-14))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    /// Σ_{n≤t} Λ(n) by factoring every n.
    fn psi_by_mangoldt(t: u64) -> f64 {
        let mut acc = CompensatedSum::new();
        for n in 2..=t {
            let mut m = n;
            let mut p = 2;
            while p * p <= m && m % p != 0 {
                p += 1;
            }
            if m % p != 0 {
                p = m;
            }
            while m % p == 0 {
                m /= p;
            }
            if m == 1 {
                acc.add((p as f64).ln());
            }
        }
        acc.value()
    }

    #[test]
    fn small_tables() {
        assert_eq!(PrimeTable::sieve(20).unwrap().primes(), &[2, 3, 5, 7, 11, 13, 17, 19]);
        assert_eq!(PrimeTable::sieve(2).unwrap().primes(), &[2]);
        assert!(matches!(PrimeTable::sieve(1), Err(Error::Domain(_))));
        assert!(matches!(PrimeTable::sieve_with_cap(1000, 100), Err(Error::Resource { .. })));
    }

    #[test]
    fn million_has_78498_primes() {
        let table = PrimeTable::sieve(1_000_000).unwrap();
        assert_eq!(table.len(), 78498);
        assert_eq!(table.primes(), simple_sieve(1_000_000).as_slice());
    }

    #[test]
    fn table_matches_trial_division() {
        let table = PrimeTable::sieve(100_000).unwrap();
        let expected: Vec<u64> = (2..=100_000).filter(|&n| trial_division_prime(n)).collect();
        assert_eq!(table.primes(), expected.as_slice());
        for (&p, &lp) in table.primes().iter().zip(table.log_primes()) {
            assert_eq!(lp, (p as f64).ln());
        }
    }

    #[test]
    fn segment_boundaries() {
        let limit = 3 * SEGMENT_BYTES as u64 + 17;
        let table = PrimeTable::sieve(limit).unwrap();
        assert_eq!(table.primes(), simple_sieve(limit).as_slice());
    }

    #[test]
    fn chebyshev_values() {
        let table = PrimeTable::sieve(1000).unwrap();
        assert!((table.chebyshev_psi(2.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let psi10 = 3.0 * 2f64.ln() + 2.0 * 3f64.ln() + 5f64.ln() + 7f64.ln();
        assert!((table.chebyshev_psi(10.0).unwrap() - psi10).abs() < 1e-13);
        assert!((table.chebyshev_psi(10.0).unwrap() - 7.832_015).abs() < 1e-6);
        assert!((table.chebyshev_psi(100.0).unwrap() - 94.0453).abs() < 1e-4);
        assert!(matches!(table.chebyshev_psi(1001.0), Err(Error::Range(_))));
        assert!(matches!(table.chebyshev_psi(1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn chebyshev_matches_mangoldt_sum() {
        let table = PrimeTable::sieve(100_000).unwrap();
        for t in [2u64, 3, 97, 1024, 4096, 12_345, 65_536, 99_991, 100_000] {
            let a = table.chebyshev_psi(t as f64).unwrap();
            let b = psi_by_mangoldt(t);
            assert!((a - b).abs() < 1e-8, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn big_pi_values() {
        let table = PrimeTable::sieve(100).unwrap();
        assert_eq!(table.big_pi(3.0).unwrap(), 2.0);
        assert_eq!(table.big_pi(4.0).unwrap(), 2.5);
        assert!((table.big_pi(10.0).unwrap() - (4.0 + 1.0 + 1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(table.big_pi(10.9).unwrap(), table.big_pi(10.0).unwrap());
    }

    #[test]
    fn li_values() {
        assert!((li(2.0).unwrap() - 1.045_163_78).abs() < 1e-8);
        assert!((li(10.0).unwrap() - 6.165_599_504_787_298).abs() < 1e-12);
        assert!(li(1.9).is_err());
    }

    /// Ramanujan's series li(t) = γ + log log t + √t Σ ..., an independent route.
    fn li_ramanujan(t: f64) -> f64 {
        let l = t.ln();
        let mut outer = 0.0;
        let mut fact = 1.0;
        let mut inner = 0.0;
        let mut inner_k = 0usize;
        for n in 1..200 {
            fact *= n as f64;
            while inner_k <= (n - 1) / 2 {
                inner += 1.0 / (2 * inner_k + 1) as f64;
                inner_k += 1;
            }
            let sign = if (n - 1) % 2 == 0 { 1.0 } else { -1.0 };
            let term = sign * l.powi(n as i32) / (fact * 2f64.powi(n as i32 - 1)) * inner;
            outer += term;
            if term.abs() < 1e-18 * outer.abs() {
                break;
            }
        }
        crate::EULER_GAMMA + l.ln() + t.sqrt() * outer
    }

    #[test]
    fn li_matches_series_route() {
        for t in [2.0, std::f64::consts::E.powi(2), 10.0, 1e3, 1e5] {
            let a = li(t).unwrap();
            let b = li_ramanujan(t);
            assert!(((a - b) / b).abs() < 1e-10, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn remainder_sample_values() {
        let table = PrimeTable::sieve(1000).unwrap();
        let s = table.remainder_sample(10.0).unwrap();
        assert!((s.r_t + 2.167_985).abs() < 1e-6);
        assert!((s.q_t + 0.83227).abs() < 1e-5);
        assert_eq!(s.pi_t, 4);
        assert_eq!(s.r_t, s.psi_t - s.t);
        assert_eq!(s.q_t, s.big_pi_t - s.li_t);
        let s2 = table.remainder_sample(2.0).unwrap();
        assert!((s2.r_t - (2f64.ln() - 2.0)).abs() < 1e-15);
        let s100 = table.remainder_sample(100.0).unwrap();
        assert!((s100.r_t + 5.9547).abs() < 1e-4);
    }

    #[test]
    fn cache_round_trip_and_validation() {
        let table = PrimeTable::sieve(50_000).unwrap();
        let mut buf = Vec::new();
        table.write_cache(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"FRB1");
        assert_eq!(u64::from_le_bytes(buf[4..12].try_into().unwrap()), 50_000);
        let back = PrimeTable::read_cache(buf.as_slice()).unwrap();
        assert_eq!(back.primes(), table.primes());
        assert_eq!(back.limit(), 50_000);

        // Corrupt the last gap so the final entry becomes composite.
        let mut bad = buf.clone();
        let last = bad.len() - 1;
        bad[last] += 1;
        assert!(matches!(PrimeTable::read_cache(bad.as_slice()), Err(Error::Format(_))));
        assert!(PrimeTable::read_cache(&b"FRB0\0\0\0\0\0\0\0\0"[..]).is_err());
    }

    #[test]
    fn miller_rabin_agrees_with_trial_division() {
        for n in 0..20_000u64 {
            assert_eq!(is_prime(n), trial_division_prime(n), "n={n}");
        }
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn integer_roots() {
        assert_eq!(integer_root(1_000_000, 2), 1000);
        assert_eq!(integer_root(999_999, 2), 999);
        assert_eq!(integer_root(u64::MAX, 2), 4_294_967_295);
        assert_eq!(integer_root(26, 3), 2);
        assert_eq!(integer_root(27, 3), 3);
        assert_eq!(integer_root(1 << 63, 63), 2);
    }
}
