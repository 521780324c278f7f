//! Regularly varying sequences of the form `v₀·n^e·∏ⱼ(log_j n)^ℓⱼ`.
//!
//! Every step size used by the recursions lives in this family. Exponents
//! are kept as exact rationals so that limits of products and ratios are
//! decided by exact lexicographic comparison of exponent vectors rather than
//! by numerics.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::sum::CompensatedSum;
use crate::{Error, Result};

/// Exact exponent of `n` or of an iterated logarithm.
pub type Exponent = Rational64;

/// Deepest supported iterated logarithm (`log₃ n = log log log n`).
pub const MAX_LOG_DEPTH: usize = 3;

/// Every active log factor is at least this large from `n_start` on.
const LOG_FLOOR: f64 = 0.1;

/// Natural log of `x` and of its first three iterated logs, computed once and
/// shared by every sequence evaluated at the same index.
#[derive(Clone, Copy, Debug)]
pub struct LogPoint {
    ln_x: f64,
    /// `ln(log_j x)` for `j = 1..=3`, i.e. `log_{j+1} x`.
    ln_logs: [f64; MAX_LOG_DEPTH],
}

impl LogPoint {
    pub fn new(x: f64) -> Self {
        let l1 = x.ln();
        let l2 = l1.ln();
        let l3 = l2.ln();
        LogPoint {
            ln_x: l1,
            ln_logs: [l2, l3, l3.ln()],
        }
    }

    pub fn at(n: u64) -> Self {
        Self::new(n as f64)
    }

    /// Like [`LogPoint::new`] but only computes `log_1 .. log_depth`; the
    /// deeper entries are left as NaN and must not be read.
    pub fn with_depth(x: f64, depth: usize) -> Self {
        let mut p = LogPoint {
            ln_x: x.ln(),
            ln_logs: [f64::NAN; MAX_LOG_DEPTH],
        };
        let mut prev = p.ln_x;
        for slot in p.ln_logs.iter_mut().take(depth) {
            prev = prev.ln();
            *slot = prev;
        }
        p
    }

    pub fn at_depth(n: u64, depth: usize) -> Self {
        Self::with_depth(n as f64, depth)
    }
}

/// `log_j x` for `j ≥ 1`, with `log_1 = ln`.
pub fn iterated_log(x: f64, depth: usize) -> f64 {
    (0..depth).fold(x, |acc, _| acc.ln())
}

/// A positive sequence `coefficient · n^n_power · ∏ⱼ (log_j n)^log_powers[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSequence {
    coefficient: f64,
    n_power: Exponent,
    log_powers: [Exponent; MAX_LOG_DEPTH],
    n_start: u64,
    // f64 copies of the exponents for the hot evaluation path.
    n_power_f: f64,
    log_powers_f: [f64; MAX_LOG_DEPTH],
}

impl ParamSequence {
    /// Builds a sequence; `log_powers[j]` is the exponent of `log_{j+1} n`.
    pub fn new(coefficient: f64, n_power: Exponent, log_powers: &[Exponent]) -> Result<Self> {
        if !(coefficient.is_finite() && coefficient > 0.0) {
            return Err(Error::InvalidSequence(format!(
                "coefficient must be positive and finite, got {coefficient}"
            )));
        }
        if log_powers.len() > MAX_LOG_DEPTH {
            return Err(Error::InvalidSequence(format!(
                "at most {MAX_LOG_DEPTH} iterated log factors are supported, got {}",
                log_powers.len()
            )));
        }
        let mut logs = [Exponent::zero(); MAX_LOG_DEPTH];
        logs[..log_powers.len()].copy_from_slice(log_powers);
        Ok(Self::from_parts(coefficient, n_power, logs))
    }

    /// `coefficient · n^n_power`.
    pub fn power_law(coefficient: f64, n_power: Exponent) -> Result<Self> {
        Self::new(coefficient, n_power, &[])
    }

    /// The constant sequence.
    pub fn constant(value: f64) -> Result<Self> {
        Self::power_law(value, Exponent::zero())
    }

    /// The sequence `n`.
    pub fn identity() -> Self {
        Self::from_parts(1.0, Exponent::one(), [Exponent::zero(); MAX_LOG_DEPTH])
    }

    fn from_parts(coefficient: f64, n_power: Exponent, log_powers: [Exponent; MAX_LOG_DEPTH]) -> Self {
        let deepest = log_powers.iter().rposition(|l| !l.is_zero()).map(|j| j + 1);
        let n_start = deepest.map_or(1, log_start);
        ParamSequence {
            coefficient,
            n_power,
            log_powers,
            n_start,
            n_power_f: to_f64(n_power),
            log_powers_f: log_powers.map(to_f64),
        }
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn n_power(&self) -> Exponent {
        self.n_power
    }

    pub fn log_powers(&self) -> &[Exponent; MAX_LOG_DEPTH] {
        &self.log_powers
    }

    /// First index at which every active log factor is at least 0.1.
    pub fn n_start(&self) -> u64 {
        self.n_start
    }

    /// `α` such that the sequence is in `GS(α)`; log factors do not shift it.
    pub fn gs_exponent(&self) -> Exponent {
        self.n_power
    }

    pub fn eval(&self, n: u64) -> Result<f64> {
        if n < self.n_start {
            return Err(Error::IndexBelowStart {
                n,
                n_start: self.n_start,
            });
        }
        Ok(self.eval_point(&LogPoint::at_depth(n, self.log_depth())))
    }

    /// Evaluates at a real argument `x ≥ n_start`.
    pub fn eval_at(&self, x: f64) -> Result<f64> {
        if !(x >= self.n_start as f64) {
            return Err(Error::IndexBelowStart {
                n: x.max(0.0).floor() as u64,
                n_start: self.n_start,
            });
        }
        Ok(self.eval_point(&LogPoint::new(x)))
    }

    /// Deepest iterated log with a nonzero power (0 for a pure power law).
    pub fn log_depth(&self) -> usize {
        self.log_powers.iter().rposition(|l| !l.is_zero()).map_or(0, |i| i + 1)
    }

    /// Evaluation from precomputed logs. The caller guarantees the point is
    /// at or beyond `n_start`.
    #[inline]
    pub fn eval_point(&self, p: &LogPoint) -> f64 {
        let mut exponent = self.n_power_f * p.ln_x;
        for (power, ln_log) in self.log_powers_f.iter().zip(p.ln_logs.iter()) {
            if *power != 0.0 {
                exponent += power * ln_log;
            }
        }
        self.coefficient * exponent.exp()
    }

    /// Termwise product.
    pub fn mul(&self, other: &ParamSequence) -> ParamSequence {
        let mut logs = self.log_powers;
        for (l, r) in logs.iter_mut().zip(other.log_powers.iter()) {
            *l += r;
        }
        Self::from_parts(self.coefficient * other.coefficient, self.n_power + other.n_power, logs)
    }

    /// Termwise power `v_n^p`.
    pub fn powr(&self, p: Exponent) -> ParamSequence {
        Self::from_parts(
            self.coefficient.powf(to_f64(p)),
            self.n_power * p,
            self.log_powers.map(|l| l * p),
        )
    }

    pub fn recip(&self) -> ParamSequence {
        self.powr(-Exponent::one())
    }

    /// Exponent vector `(n, log, loglog, log₃)`.
    pub fn order(&self) -> AsymptoticOrder {
        let [l1, l2, l3] = self.log_powers;
        AsymptoticOrder([self.n_power, l1, l2, l3])
    }

    /// Exact limit of the sequence as `n → ∞`.
    pub fn limit(&self) -> LimitValue {
        match self.order().sign() {
            Ordering::Less => LimitValue::Zero,
            Ordering::Greater => LimitValue::Infinite,
            Ordering::Equal => LimitValue::Finite(self.coefficient),
        }
    }

    /// `lim n·v_n`.
    pub fn limit_n_times(&self) -> LimitValue {
        self.mul(&Self::identity()).limit()
    }

    /// `Σ_{k=n_start}^{n} v_k` by direct compensated accumulation.
    pub fn partial_sum(&self, n: u64) -> Result<f64> {
        if n < self.n_start {
            return Err(Error::IndexBelowStart {
                n,
                n_start: self.n_start,
            });
        }
        let mut acc = CompensatedSum::default();
        let depth = self.log_depth();
        for k in self.n_start..=n {
            acc.add(self.eval_point(&LogPoint::at_depth(k, depth)));
        }
        Ok(acc.value())
    }

    /// Whether this is exactly `n⁻¹`.
    pub fn is_harmonic(&self) -> bool {
        self.coefficient == 1.0
            && self.n_power == -Exponent::one()
            && self.log_powers.iter().all(Zero::is_zero)
    }
}

/// Limit of `∏ num_i^{p_i} / ∏ den_j^{q_j}` as `n → ∞`.
pub fn limit_ratio(num: &[(&ParamSequence, Exponent)], den: &[(&ParamSequence, Exponent)]) -> LimitValue {
    product(num, den).limit()
}

/// The sequence `∏ num_i^{p_i} / ∏ den_j^{q_j}`.
pub fn product(num: &[(&ParamSequence, Exponent)], den: &[(&ParamSequence, Exponent)]) -> ParamSequence {
    let unit = ParamSequence::from_parts(1.0, Exponent::zero(), [Exponent::zero(); MAX_LOG_DEPTH]);
    let num = num.iter().map(|(s, p)| s.powr(*p));
    let den = den.iter().map(|(s, q)| s.powr(-*q));
    num.chain(den).fold(unit, |acc, s| acc.mul(&s))
}

/// Smallest integer `n` with `log_depth(n) ≥ LOG_FLOOR`.
fn log_start(depth: usize) -> u64 {
    let threshold = (0..depth).fold(LOG_FLOOR, |acc, _| acc.exp());
    let mut n = threshold.ceil().max(1.0) as u64;
    while iterated_log(n as f64, depth) < LOG_FLOOR {
        n += 1;
    }
    n
}

fn to_f64(r: Exponent) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Limit of a positive sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum LimitValue {
    Zero,
    /// Strictly positive finite limit.
    Finite(f64),
    Infinite,
}

impl LimitValue {
    pub fn is_infinite(&self) -> bool {
        matches!(self, LimitValue::Infinite)
    }

    /// Zero or finite (the theorems' "there exists γ ≥ 0" case).
    pub fn is_bounded(&self) -> bool {
        !self.is_infinite()
    }

    /// Numeric value; `None` for an infinite limit.
    pub fn value(&self) -> Option<f64> {
        match *self {
            LimitValue::Zero => Some(0.0),
            LimitValue::Finite(v) => Some(v),
            LimitValue::Infinite => None,
        }
    }
}

impl fmt::Display for LimitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitValue::Zero => f.write_str("0"),
            LimitValue::Finite(v) => write!(f, "{v}"),
            LimitValue::Infinite => f.write_str("inf"),
        }
    }
}

/// Exponent vector `(n, log n, log log n, log₃ n)` compared lexicographically.
///
/// Two positive sequences whose ratio tends to a positive constant share the
/// same order, so orders can describe quantities outside the family (partial
/// sums, logs of partial sums) up to that constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AsymptoticOrder(pub [Exponent; MAX_LOG_DEPTH + 1]);

impl AsymptoticOrder {
    pub fn zero() -> Self {
        AsymptoticOrder([Exponent::zero(); MAX_LOG_DEPTH + 1])
    }

    /// `(log_level n)^1`, with level 0 meaning `n` itself.
    pub fn unit(level: usize) -> Self {
        let mut v = [Exponent::zero(); MAX_LOG_DEPTH + 1];
        v[level] = Exponent::one();
        AsymptoticOrder(v)
    }

    /// Sign of the leading nonzero component: the direction of the limit.
    pub fn sign(&self) -> Ordering {
        self.0
            .iter()
            .find(|c| !c.is_zero())
            .map_or(Ordering::Equal, |c| c.cmp(&Exponent::zero()))
    }

    /// Limit of a sequence with this order, without its constant.
    pub fn limit_kind(&self) -> LimitValue {
        match self.sign() {
            Ordering::Less => LimitValue::Zero,
            Ordering::Greater => LimitValue::Infinite,
            Ordering::Equal => LimitValue::Finite(1.0),
        }
    }

    /// Growth of `Σ_{k≤n} v_k`. `None` when deciding it would need a log
    /// deeper than `log₃`.
    pub fn partial_sum(&self) -> Option<SumGrowth> {
        let minus_one = -Exponent::one();
        let e = self.0[0];
        if e > minus_one {
            let mut o = *self;
            o.0[0] += Exponent::one();
            return Some(SumGrowth::Divergent(o));
        }
        if e < minus_one {
            return Some(SumGrowth::Convergent);
        }
        // n^{-1}·(log n)^{-1}·… peels one level at a time.
        for level in 1..=MAX_LOG_DEPTH {
            let l = self.0[level];
            match l.cmp(&minus_one) {
                Ordering::Greater => {
                    let mut o = *self;
                    for c in &mut o.0[..level] {
                        *c = Exponent::zero();
                    }
                    o.0[level] += Exponent::one();
                    return Some(SumGrowth::Divergent(o));
                }
                Ordering::Less => return Some(SumGrowth::Convergent),
                Ordering::Equal => {}
            }
        }
        None
    }

    /// Order of `log v_n` for a divergent `v_n`. `None` if `v_n` does not
    /// diverge or the result would need `log₄`.
    pub fn log(&self) -> Option<AsymptoticOrder> {
        let lead = self.0.iter().position(|c| !c.is_zero())?;
        if self.0[lead] < Exponent::zero() || lead + 1 > MAX_LOG_DEPTH {
            return None;
        }
        Some(AsymptoticOrder::unit(lead + 1))
    }
}

impl PartialOrd for AsymptoticOrder {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AsymptoticOrder {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl Add for AsymptoticOrder {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (l, r) in self.0.iter_mut().zip(rhs.0) {
            *l += r;
        }
        self
    }
}

impl Sub for AsymptoticOrder {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for AsymptoticOrder {
    type Output = Self;
    fn neg(self) -> Self {
        AsymptoticOrder(self.0.map(|c| -c))
    }
}

impl Mul<Exponent> for AsymptoticOrder {
    type Output = Self;
    fn mul(self, rhs: Exponent) -> Self {
        AsymptoticOrder(self.0.map(|c| c * rhs))
    }
}

/// Asymptotic behavior of a partial sum of positive terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumGrowth {
    Convergent,
    Divergent(AsymptoticOrder),
}

// Textual notation: "<coeff>*n^<e>[*log^<l1>][*loglog^<l2>][*log3^<l3>]".

impl fmt::Display for ParamSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*n^{}", self.coefficient, self.n_power)?;
        for (name, power) in LOG_NAMES.iter().zip(self.log_powers.iter()) {
            if !power.is_zero() {
                write!(f, "*{name}^{power}")?;
            }
        }
        Ok(())
    }
}

const LOG_NAMES: [&str; MAX_LOG_DEPTH] = ["log", "loglog", "log3"];

impl FromStr for ParamSequence {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let fail = |reason: String| Error::SequenceParse {
            input: input.to_string(),
            reason,
        };
        let mut coefficient = 1.0;
        let mut n_power = Exponent::zero();
        let mut logs = [Exponent::zero(); MAX_LOG_DEPTH];
        let compact: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(fail("empty".into()));
        }
        for factor in compact.split('*') {
            let (base, power) = match factor.split_once('^') {
                Some((b, p)) => (b, Some(parse_exponent(p).map_err(fail)?)),
                None => (factor, None),
            };
            let power = power.unwrap_or_else(Exponent::one);
            match base {
                "n" => n_power += power,
                "log" | "log1" => logs[0] += power,
                "loglog" | "log2" => logs[1] += power,
                "log3" | "logloglog" => logs[2] += power,
                _ if factor.contains('^') => return Err(fail(format!("unknown base {base:?}"))),
                _ => coefficient *= parse_coefficient(factor).map_err(fail)?,
            }
        }
        if !(coefficient.is_finite() && coefficient > 0.0) {
            return Err(fail(format!("coefficient must be positive, got {coefficient}")));
        }
        Ok(ParamSequence::from_parts(coefficient, n_power, logs))
    }
}

fn parse_coefficient(s: &str) -> std::result::Result<f64, String> {
    if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p.parse().map_err(|_| format!("bad coefficient {s:?}"))?;
        let q: f64 = q.parse().map_err(|_| format!("bad coefficient {s:?}"))?;
        return Ok(p / q);
    }
    s.parse().map_err(|_| format!("bad coefficient {s:?}"))
}

/// Parses `"-1/6"`, `"2"`, or a terminating decimal such as `"-0.9"` exactly.
pub fn parse_exponent(s: &str) -> std::result::Result<Exponent, String> {
    let bad = || format!("bad exponent {s:?}");
    let s = s.trim_start_matches('(').trim_end_matches(')');
    if let Some((p, q)) = s.split_once('/') {
        let p = parse_decimal(p).ok_or_else(bad)?;
        let q = parse_decimal(q).ok_or_else(bad)?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(p / q);
    }
    parse_decimal(s).ok_or_else(bad)
}

fn parse_decimal(s: &str) -> Option<Exponent> {
    let (negative, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) || frac_part.len() > 17 {
        return None;
    }
    let int: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let mut value = Exponent::from_integer(int);
    if !frac_part.is_empty() {
        let scale = 10i64.checked_pow(frac_part.len() as u32)?;
        value += Exponent::new(frac_part.parse().ok()?, scale);
    }
    Some(if negative { -value } else { value })
}

impl Serialize for ParamSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParamSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn exponent_to_f64(r: Exponent) -> f64 {
    to_f64(r)
}
