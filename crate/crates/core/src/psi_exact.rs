//! Exact values of Ψ(x, y), the number of integers `n <= x` free of prime
//! factors exceeding `y`, by three independent methods:
//!
//! * [`psi_enumerate`]: depth-first enumeration of exponent vectors under
//!   `Σ a_p log p <= log x`, usable for astronomically large x when y is small;
//! * [`psi_sieve`]: a segmented sieve over `[1, x]`;
//! * [`psi_buchstab`]: the memoised recursion
//!   `Ψ(x, p_k) = Ψ(x, p_{k−1}) + Ψ(⌊x/p_k⌋, p_k)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, range, Error, Result};
use crate::primes::PrimeTable;
use crate::saddle::psi_saddle;

pub const DEFAULT_MAX_COUNT: f64 = 1e8;
pub const DEFAULT_MAX_SIEVE: u64 = 100_000_000;
pub const DEFAULT_MAX_BUCHSTAB_X: u64 = 1_000_000_000_000;
pub const DEFAULT_MAX_BUCHSTAB_Y: f64 = 1e5;
pub const DEFAULT_MEMO_CAPACITY: usize = 20_000_000;

const SIEVE_SEGMENT: u64 = 1 << 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Enumerate,
    Sieve,
    Buchstab,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Enumerate => "enumerate",
            Method::Sieve => "sieve",
            Method::Buchstab => "buchstab",
        })
    }
}

/// How the enumerator counts lattice points whose log lies within the guard
/// band of log x when no exact x is available.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryRule {
    Include,
    #[default]
    Exclude,
}

/// How an x value was supplied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XForm {
    Decimal,
    Scientific,
    LogX,
}

/// The bound x, carried as log x with the exact integer part when known.
#[derive(Clone, Debug, PartialEq)]
pub struct XValue {
    log_x: f64,
    exact: Option<BigUint>,
    form: XForm,
}

fn big_ln(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().expect("64-bit value");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

impl XValue {
    pub fn from_u64(x: u64) -> Self {
        Self::from_big(BigUint::from(x))
    }

    pub fn from_big(x: BigUint) -> Self {
        XValue {
            log_x: big_ln(&x),
            exact: Some(x),
            form: XForm::Decimal,
        }
    }

    /// x known only through its logarithm.
    pub fn from_log(log_x: f64) -> Self {
        XValue { log_x, exact: None, form: XForm::LogX }
    }

    pub fn log_x(&self) -> f64 {
        self.log_x
    }

    /// ⌊x⌋ when x was given exactly.
    pub fn exact(&self) -> Option<&BigUint> {
        self.exact.as_ref()
    }

    pub fn as_u64(&self) -> Option<u64> {
        self.exact.as_ref().and_then(|v| v.to_u64())
    }

    pub fn form(&self) -> XForm {
        self.form
    }
}

impl FromStr for XValue {
    type Err = Error;

    /// Accepts decimal integers or reals (`1000`, `12.5`) and scientific
    /// notation (`1e18`, `2.5E10`). Non-integral values keep their exact floor.
    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("cannot parse x value {text:?}"));
        let s = text.trim();
        let (mantissa, exponent, form) = match s.find(['e', 'E']) {
            Some(i) => (
                &s[..i],
                s[i + 1..].parse::<i64>().map_err(|_| bad())?,
                XForm::Scientific,
            ),
            None => (s, 0, XForm::Decimal),
        };
        let (int_part, frac_part) = match mantissa.split_once('.') {
            Some((a, b)) => (a, b),
            None => (mantissa, ""),
        };
        let int_part = int_part.strip_prefix('+').unwrap_or(int_part);
        if int_part.is_empty() && frac_part.is_empty()
            || !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let digits = BigUint::parse_bytes(format!("{int_part}{frac_part}0").as_bytes(), 10).ok_or_else(bad)?
            / BigUint::from(10u32);
        let shift = exponent - frac_part.len() as i64;
        if shift.abs() > 100_000 {
            return Err(bad());
        }
        let ten = BigUint::from(10u32);
        let scale = ten.pow(shift.unsigned_abs() as u32);
        let exact = if shift >= 0 { &digits * &scale } else { &digits / &scale };
        if digits.is_zero() {
            return domain(format!("x must be >= 1, got {text}"));
        }
        let log_x = big_ln(&digits) + shift as f64 * std::f64::consts::LN_10;
        if exact.is_zero() {
            return domain(format!("x must be >= 1, got {text}"));
        }
        Ok(XValue {
            log_x,
            exact: Some(exact),
            form,
        })
    }
}

mod decimal_string {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| D::Error::custom("invalid decimal integer"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiResult {
    pub log_x: f64,
    pub y: f64,
    #[serde(with = "decimal_string")]
    pub count: BigUint,
    pub method: Method,
    /// Lattice points that fell inside the floating guard band and needed an
    /// exact decision.
    pub boundary_ambiguous: u64,
    /// The subset of those for which no exact x was available; they are
    /// counted according to the configured [`BoundaryRule`].
    pub boundary_unresolved: u64,
}

#[derive(Clone, Debug)]
pub struct EnumerateOptions {
    /// Width of the guard band; defaults to `1e-9·(1 + log x)`.
    pub guard: Option<f64>,
    /// Refuse to enumerate when the pre-flight estimate exceeds this.
    pub max_count: f64,
    pub boundary_rule: BoundaryRule,
    pub parallel: bool,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            guard: None,
            max_count: DEFAULT_MAX_COUNT,
            boundary_rule: BoundaryRule::default(),
            parallel: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    count: u64,
    ambiguous: u64,
    unresolved: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            count: self.count + o.count,
            ambiguous: self.ambiguous + o.ambiguous,
            unresolved: self.unresolved + o.unresolved,
        }
    }
}

struct Enumerator<'a> {
    primes: &'a [u64],
    logs: &'a [f64],
    guard: f64,
    exact_x: Option<&'a BigUint>,
    rule: BoundaryRule,
}

impl Enumerator<'_> {
    /// Exact decision for `2^twos · ∏ path` against x.
    fn resolve(&self, path: &[usize], twos: u64, tally: &mut Tally) {
        tally.ambiguous += 1;
        match self.exact_x {
            Some(x) => {
                let mut n = BigUint::one() << twos;
                for &i in path {
                    n *= self.primes[i];
                }
                if &n <= x {
                    tally.count += 1;
                }
            }
            None => {
                tally.unresolved += 1;
                if self.rule == BoundaryRule::Include {
                    tally.count += 1;
                }
            }
        }
    }

    /// Counts the current point (log headroom `rem`) and every extension by
    /// primes with index `<= top`.
    fn visit(&self, top: usize, rem: f64, path: &mut Vec<usize>, tally: &mut Tally) {
        if top == 0 {
            // Powers of two in closed form; only the largest can be ambiguous.
            let ln2 = self.logs[0];
            let k = ((rem + self.guard) / ln2).floor() as u64;
            let slack = rem - k as f64 * ln2;
            if slack > self.guard {
                tally.count += k + 1;
            } else {
                tally.count += k;
                self.resolve(path, k, tally);
            }
            return;
        }
        if rem > self.guard {
            tally.count += 1;
        } else {
            self.resolve(path, 0, tally);
            return;
        }
        let reach = rem + self.guard;
        let eligible = self.logs[..=top].partition_point(|&l| l <= reach);
        for k in 0..eligible {
            path.push(k);
            self.visit(k, rem - self.logs[k], path, tally);
            path.pop();
        }
    }
}

/// Rough size of Ψ(x, y) used to refuse runaway enumerations.
pub fn preflight_estimate(log_x: f64, table: &PrimeTable, y: f64) -> Result<f64> {
    let log_y = y.ln();
    if log_y >= log_x {
        return Ok(log_x.exp());
    }
    let u = log_x / log_y;
    if u < 2.0 {
        return Ok(log_x.exp() * (1.0 - u.ln()));
    }
    Ok(psi_saddle(log_x, table, y)?.exp())
}

fn check_y_real(y: f64) -> Result<()> {
    if !(y >= 2.0) || y.is_nan() {
        return domain(format!("y must be >= 2, got {y}"));
    }
    Ok(())
}

/// Ψ(x, y) by depth-first enumeration of `∏ p^{a_p} <= x` over primes taken
/// largest first.
///
/// Partial sums of `a_p·log p` are compared with log x in floating point;
/// points within `guard` of the boundary are decided by exact big-integer
/// comparison when x is exact, otherwise by `boundary_rule`.
pub fn psi_enumerate(x: &XValue, table: &PrimeTable, y: f64, opts: &EnumerateOptions) -> Result<PsiResult> {
    check_y_real(y)?;
    let log_x = x.log_x();
    if !(log_x >= 0.0) || !log_x.is_finite() {
        return domain(format!("x must be finite and >= 1, got log x = {log_x}"));
    }
    // Only primes <= min(x, y) can divide a counted n.
    let bound = y.min(log_x.exp() * (1.0 + 1e-12) + 1.0);
    if bound.floor() > table.limit() as f64 {
        return range(format!("primes up to {} are needed but the table stops at {}", bound.floor(), table.limit()));
    }
    let estimate = preflight_estimate(log_x, table, y.min(table.limit() as f64))?;
    if estimate > opts.max_count {
        return Err(Error::Resource {
            message: format!("estimated Ψ ≈ {estimate:.3e} exceeds the enumeration cap {:.3e}", opts.max_count),
            estimate: Some(estimate),
        });
    }
    let guard = opts.guard.unwrap_or(1e-9 * (1.0 + log_x));
    let (primes, logs) = table.up_to(bound);
    let walker = Enumerator {
        primes,
        logs,
        guard,
        exact_x: x.exact(),
        rule: opts.boundary_rule,
    };

    let mut tally = Tally::default();
    if primes.is_empty() {
        // No prime <= x: only n = 1, which satisfies 1 <= x.
        tally.count = 1;
    } else {
        let top = primes.len() - 1;
        let root = |k: usize| {
            let mut t = Tally::default();
            let mut path = vec![k];
            walker.visit(k, log_x - logs[k], &mut path, &mut t);
            t
        };
        let reach = log_x + guard;
        let eligible = logs[..=top].partition_point(|&l| l <= reach);
        // n = 1.
        if log_x > guard {
            tally.count += 1;
        } else {
            walker.resolve(&[], 0, &mut tally);
        }
        tally = tally
            + if opts.parallel {
                (0..eligible).into_par_iter().map(root).reduce(Tally::default, |a, b| a + b)
            } else {
                (0..eligible).map(root).fold(Tally::default(), |a, b| a + b)
            };
    }

    Ok(PsiResult {
        log_x,
        y,
        count: BigUint::from(tally.count),
        method: Method::Enumerate,
        boundary_ambiguous: tally.ambiguous,
        boundary_unresolved: tally.unresolved,
    })
}

/// Ψ(x, y) by a segmented sieve over `[1, x]`.
///
/// Every prime power `p^k <= x` with `p <= min(y, √x)` divides its multiples
/// by p once, leaving each n with its cofactor free of those primes. That
/// cofactor is 1 or has all prime factors above `min(y, √x)`; when y < √x it
/// is > y unless it is 1, and when y >= √x it is a single prime. Either way
/// n is y-friable exactly when the cofactor is `<= y`.
pub fn psi_sieve(x: u64, y: f64, max_x: u64) -> Result<PsiResult> {
    check_y_real(y)?;
    if x == 0 {
        return domain("x must be >= 1");
    }
    if x > max_x {
        return Err(Error::Resource {
            message: format!("sieve bound {x} exceeds the configured cap {max_x}"),
            estimate: Some(x as f64),
        });
    }
    if x > u32::MAX as u64 {
        return range("the sieve stores cofactors as u32 and needs x < 2^32");
    }
    let root = crate::primes::integer_root(x, 2);
    let small_bound = (y.floor() as u64).min(root);
    let small = crate::primes::simple_sieve(small_bound);
    let mut cofactor = vec![0u32; SIEVE_SEGMENT as usize];
    let mut count = 0u64;
    let mut lo = 1u64;
    while lo <= x {
        let hi = (lo + SIEVE_SEGMENT - 1).min(x);
        let len = (hi - lo + 1) as usize;
        for (i, c) in cofactor[..len].iter_mut().enumerate() {
            *c = (lo + i as u64) as u32;
        }
        for &p in &small {
            let p32 = p as u32;
            let mut q = p;
            while q <= hi {
                let mut m = lo.div_ceil(q) * q;
                while m <= hi {
                    cofactor[(m - lo) as usize] /= p32;
                    m += q;
                }
                match q.checked_mul(p) {
                    Some(next) => q = next,
                    None => break,
                }
            }
        }
        count += cofactor[..len].iter().filter(|&&c| c as f64 <= y).count() as u64;
        lo = hi + 1;
    }
    Ok(PsiResult {
        log_x: (x as f64).ln(),
        y,
        count: BigUint::from(count),
        method: Method::Sieve,
        boundary_ambiguous: 0,
        boundary_unresolved: 0,
    })
}

#[derive(Clone, Debug)]
pub struct BuchstabOptions {
    pub max_x: u64,
    /// Cap on min(y, √x), the primes that drive the recursion.
    pub max_y: f64,
    /// Memo entries allowed before failing with a resource error.
    pub memo_capacity: usize,
}

impl Default for BuchstabOptions {
    fn default() -> Self {
        BuchstabOptions {
            max_x: DEFAULT_MAX_BUCHSTAB_X,
            max_y: DEFAULT_MAX_BUCHSTAB_Y,
            memo_capacity: DEFAULT_MEMO_CAPACITY,
        }
    }
}

struct Buchstab<'a> {
    primes: &'a [u64],
    memo: HashMap<u64, u64>,
    capacity: usize,
}

fn floor_log2_plus_one(v: u64) -> u64 {
    (64 - v.leading_zeros()) as u64
}

impl Buchstab<'_> {
    /// Ψ(v, p_k), unrolled as
    /// `Ψ(v, 2) + Σ_{1<=i<=k} Ψ(⌊v/p_i⌋, p_i)`, where a term with
    /// `p_i^2 > v` equals ⌊v/p_i⌋ because every integer up to it is < p_i.
    fn psi(&mut self, v: u64, k: usize) -> Result<u64> {
        if v < 2 {
            return Ok(v);
        }
        if self.primes[k] >= v {
            return Ok(v);
        }
        if k == 0 {
            return Ok(floor_log2_plus_one(v));
        }
        let key = (v << 17) | k as u64;
        if let Some(&hit) = self.memo.get(&key) {
            return Ok(hit);
        }
        let mut total = floor_log2_plus_one(v);
        for i in 1..=k {
            let p = self.primes[i];
            if p > v {
                break;
            }
            let q = v / p;
            total += if p <= q { self.psi(q, i)? } else { q };
        }
        if self.memo.len() >= self.capacity {
            return Err(Error::Resource {
                message: format!("Buchstab memo exceeded {} entries", self.capacity),
                estimate: None,
            });
        }
        self.memo.insert(key, total);
        Ok(total)
    }
}

/// Ψ(x, y) by the memoised Buchstab recursion with base case
/// `Ψ(v, 2) = ⌊log₂ v⌋ + 1`.
pub fn psi_buchstab(x: u64, table: &PrimeTable, y: f64, opts: &BuchstabOptions) -> Result<PsiResult> {
    check_y_real(y)?;
    if x == 0 {
        return domain("x must be >= 1");
    }
    // Only primes up to √x enter the recursion; the cap on y applies to those.
    let root = crate::primes::integer_root(x, 2);
    let driving = y.min(root as f64);
    if x > opts.max_x || driving > opts.max_y {
        return Err(Error::Resource {
            message: format!(
                "Buchstab recursion is capped at x <= {}, min(y, sqrt x) <= {}; got x = {x}, y = {y}",
                opts.max_x, opts.max_y
            ),
            estimate: None,
        });
    }
    let bound = y.min(x as f64);
    if bound.floor() > table.limit() as f64 {
        return range(format!("primes up to {} are needed but the table stops at {}", bound.floor(), table.limit()));
    }
    let (primes, _) = table.up_to(bound);
    let small = primes.partition_point(|&p| p <= root);
    debug_assert!(small < 1 << 17);
    let head = if small == 0 {
        1
    } else {
        let mut solver = Buchstab {
            primes: &primes[..small],
            memo: HashMap::new(),
            capacity: opts.memo_capacity,
        };
        solver.psi(x, small - 1)?
    };
    // A prime p > √x is the largest factor of exactly ⌊x/p⌋ integers up to x.
    let tail: u64 = primes[small..].iter().map(|&p| x / p).sum();
    let count = head + tail;
    Ok(PsiResult {
        log_x: (x as f64).ln(),
        y,
        count: BigUint::from(count),
        method: Method::Buchstab,
        boundary_ambiguous: 0,
        boundary_unresolved: 0,
    })
}
