//! Exact exponent calculus: critical indices of weights, Sobolev-type
//! exponents, admissible ranges and the closed-form corollary conditions.
//!
//! All arithmetic is over rationals extended by `+inf`; nothing in this
//! module touches floating point.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::de::{self, DeserializeOwned, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Integer types usable as the numerator/denominator of exact exponents.
pub trait ExactInt:
    Integer
    + Signed
    + Clone
    + Debug
    + Display
    + FromPrimitive
    + ToPrimitive
    + Hash
    + Send
    + Sync
    + 'static
{
}

impl ExactInt for i64 {}
impl ExactInt for i128 {}
impl ExactInt for BigInt {}

pub type Rational<I> = Ratio<I>;

fn int<I: ExactInt>(k: i64) -> Ratio<I> {
    Ratio::from_integer(I::from_i64(k).expect("small integer"))
}

/// Nonnegative rational or `+inf`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtReal<I: ExactInt = i64> {
    Finite(Ratio<I>),
    Infinite,
}

impl<I: ExactInt> ExtReal<I> {
    pub fn new(value: Ratio<I>) -> Result<Self> {
        if value.is_negative() {
            return invalid(format!(
                "extended exponent must be nonnegative, got {value}"
            ));
        }
        Ok(Self::Finite(value))
    }

    pub fn integer(k: i64) -> Self {
        Self::new(int(k)).expect("nonnegative integer")
    }

    /// `num / den`; panics on a negative value or zero denominator.
    pub fn frac(num: i64, den: i64) -> Self {
        let r = Ratio::new(
            I::from_i64(num).expect("small integer"),
            I::from_i64(den).expect("small integer"),
        );
        Self::new(r).expect("nonnegative fraction")
    }

    pub fn inf() -> Self {
        Self::Infinite
    }

    pub fn zero() -> Self {
        Self::Finite(Ratio::zero())
    }

    pub fn one() -> Self {
        Self::Finite(Ratio::one())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Finite(r) if r.is_zero())
    }

    pub fn finite(&self) -> Option<&Ratio<I>> {
        match self {
            Self::Finite(r) => Some(r),
            Self::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Finite(r) => {
                r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
            }
            Self::Infinite => f64::INFINITY,
        }
    }

    /// `1/x` with `1/0 = inf` and `1/inf = 0`.
    pub fn recip(&self) -> Self {
        match self {
            Self::Infinite => Self::zero(),
            Self::Finite(r) if r.is_zero() => Self::Infinite,
            Self::Finite(r) => Self::Finite(r.recip()),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a.clone() + b.clone()),
            _ => Self::Infinite,
        }
    }

    /// Product with `inf * a = inf` for `a > 0` and `inf * 0 = 0`
    /// (the latter is the convention `p0 r_w = 0` when `p0 = 0`).
    pub fn mul(&self, other: &Self) -> Self {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a.clone() * b.clone()),
            (Self::Finite(a), Self::Infinite) | (Self::Infinite, Self::Finite(a))
                if a.is_zero() =>
            {
                Self::zero()
            }
            _ => Self::Infinite,
        }
    }

    /// `self / other` with `a / inf = 0`, `inf / a = inf` for finite `a > 0`.
    pub fn div(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (Self::Infinite, Self::Infinite) => invalid("inf / inf is undefined"),
            (_, Self::Finite(b)) if b.is_zero() => invalid("division by zero exponent"),
            (Self::Finite(_), Self::Infinite) => Ok(Self::zero()),
            (Self::Infinite, Self::Finite(_)) => Ok(Self::Infinite),
            (Self::Finite(a), Self::Finite(b)) => Ok(Self::Finite(a.clone() / b.clone())),
        }
    }

    pub fn scale(&self, k: i64) -> Self {
        self.mul(&Self::integer(k))
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl<I: ExactInt> PartialOrd for ExtReal<I> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<I: ExactInt> Ord for ExtReal<I> {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Self::Infinite, Self::Infinite) => Ordering::Equal,
            (Self::Infinite, _) => Ordering::Greater,
            (_, Self::Infinite) => Ordering::Less,
            (Self::Finite(a), Self::Finite(b)) => a.cmp(b),
        }
    }
}

impl<I: ExactInt> Display for ExtReal<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Infinite => f.write_str("inf"),
            Self::Finite(r) => write!(f, "{}", RatioText(r)),
        }
    }
}

/// `"num/den"`, or `"num"` for integers.
pub struct RatioText<'a, I>(pub &'a Ratio<I>);

impl<I: ExactInt> Display for RatioText<'_, I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// Parses `"p"`, `"p/q"`, or a signed variant thereof.
pub fn parse_ratio<I: ExactInt>(text: &str) -> Result<Ratio<I>> {
    let text = text.trim();
    let parse_int = |s: &str| -> Result<I> {
        let k: i64 = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("not a rational number: {text:?}")))?;
        Ok(I::from_i64(k).expect("i64 fits"))
    };
    match text.split_once('/') {
        Some((a, b)) => {
            let den = parse_int(b)?;
            if den.is_zero() {
                return invalid(format!("zero denominator in {text:?}"));
            }
            Ok(Ratio::new(parse_int(a)?, den))
        }
        None => {
            if let Ok(k) = text.parse::<i64>() {
                return Ok(Ratio::from_integer(I::from_i64(k).expect("i64 fits")));
            }
            // finite decimal such as "1.5"
            let (whole, frac) = text.split_once('.').ok_or_else(|| {
                Error::InvalidArgument(format!("not a rational number: {text:?}"))
            })?;
            let digits = frac.len() as u32;
            if digits > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
                return invalid(format!("not a rational number: {text:?}"));
            }
            let negative = whole.trim_start().starts_with('-');
            let w = if whole.trim() == "-" || whole.trim().is_empty() {
                0
            } else {
                whole.trim().parse::<i64>().map_err(|_| {
                    Error::InvalidArgument(format!("not a rational number: {text:?}"))
                })?
            };
            let scale = 10i64.pow(digits);
            let f: i64 = if frac.is_empty() {
                0
            } else {
                frac.parse().expect("digits")
            };
            let num = w.abs() * scale + f;
            let num = if negative { -num } else { num };
            Ok(Ratio::new(
                I::from_i64(num).expect("fits"),
                I::from_i64(scale).expect("fits"),
            ))
        }
    }
}

impl<I: ExactInt> FromStr for ExtReal<I> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Self::Infinite),
            other => Self::new(parse_ratio(other)?),
        }
    }
}

impl<I: ExactInt + Serialize> Serialize for ExtReal<I> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Infinite => serializer.serialize_str("inf"),
            Self::Finite(r) => {
                let mut map = serializer.serialize_map(Some(2))?;
                map.serialize_entry("num", r.numer())?;
                map.serialize_entry("den", r.denom())?;
                map.end()
            }
        }
    }
}

impl<'de, I: ExactInt + DeserializeOwned> Deserialize<'de> for ExtReal<I> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr<J> {
            Text(String),
            Pair { num: J, den: J },
        }
        match Repr::<I>::deserialize(deserializer)? {
            Repr::Text(s) if s == "inf" => Ok(Self::Infinite),
            Repr::Text(s) => Err(de::Error::custom(format!("expected \"inf\", got {s:?}"))),
            Repr::Pair { num, den } => {
                if den.is_zero() {
                    return Err(de::Error::custom("zero denominator"));
                }
                Self::new(Ratio::new(num, den)).map_err(de::Error::custom)
            }
        }
    }
}

/// Conjugate exponent `p' = p / (p - 1)`, with `1' = inf` and `inf' = 1`.
pub fn conjugate<I: ExactInt>(p: &ExtReal<I>) -> Result<ExtReal<I>> {
    match p {
        ExtReal::Infinite => Ok(ExtReal::one()),
        ExtReal::Finite(r) => {
            let one = Ratio::one();
            match r.cmp(&one) {
                Ordering::Less => invalid(format!("conjugate exponent needs p >= 1, got {r}")),
                Ordering::Equal => Ok(ExtReal::Infinite),
                Ordering::Greater => Ok(ExtReal::Finite(r.clone() / (r.clone() - one))),
            }
        }
    }
}

/// Infimal Muckenhoupt and reverse Hölder indices `(r_w, s_w)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "I: Serialize", deserialize = "I: DeserializeOwned"))]
pub struct CriticalPair<I: ExactInt = i64> {
    pub r_w: ExtReal<I>,
    pub s_w: ExtReal<I>,
}

impl<I: ExactInt> CriticalPair<I> {
    pub fn new(r_w: ExtReal<I>, s_w: ExtReal<I>) -> Result<Self> {
        if r_w < ExtReal::one() || s_w < ExtReal::one() {
            return invalid(format!(
                "critical indices must be >= 1, got r = {r_w}, s = {s_w}"
            ));
        }
        Ok(Self { r_w, s_w })
    }

    /// Lebesgue measure: `r = s = 1`.
    pub fn trivial() -> Self {
        Self {
            r_w: ExtReal::one(),
            s_w: ExtReal::one(),
        }
    }
}

fn check_dim(n: u32) -> Result<()> {
    if n == 0 {
        return invalid("dimension must be positive");
    }
    Ok(())
}

/// Critical pair of the power weight `|x|^alpha` on `R^n`, `-n < alpha < n`.
pub fn power_weight_criticals<I: ExactInt>(alpha: &Ratio<I>, n: u32) -> Result<CriticalPair<I>> {
    check_dim(n)?;
    let nn = int::<I>(n as i64);
    if *alpha <= -nn.clone() || *alpha >= nn {
        return invalid(format!(
            "alpha outside (-n, n): alpha = {}, n = {n}",
            RatioText(alpha)
        ));
    }
    homogeneous_criticals(alpha, &nn)
}

/// `r = max{1, 1 + beta/d}`, `s = max{1, (1 + beta/d)^{-1}}` for a power
/// `|x|^beta` against a measure of homogeneous dimension `d`.
fn homogeneous_criticals<I: ExactInt>(beta: &Ratio<I>, d: &Ratio<I>) -> Result<CriticalPair<I>> {
    let one = Ratio::<I>::one();
    let base = one.clone() + beta.clone() / d.clone();
    let r = if base > one {
        base.clone()
    } else {
        one.clone()
    };
    let s = if base < one { base.recip() } else { one };
    CriticalPair::new(ExtReal::Finite(r), ExtReal::Finite(s))
}

/// Critical pair `(r_v(w), s_v(w))` of `v = |x|^beta` relative to the measure
/// `dw = |x|^alpha dx`, obtained from the homogeneous dimension `n + alpha`
/// of `dw`. Requires `alpha > -n` and `beta > -(n + alpha)`.
pub fn power_weight_relative_criticals<I: ExactInt>(
    beta: &Ratio<I>,
    alpha: &Ratio<I>,
    n: u32,
) -> Result<CriticalPair<I>> {
    check_dim(n)?;
    let d = int::<I>(n as i64) + alpha.clone();
    if !d.is_positive() {
        return invalid(format!(
            "alpha = {} must exceed -n = -{n}",
            RatioText(alpha)
        ));
    }
    if *beta <= -d.clone() {
        return invalid(format!(
            "beta = {} must exceed -(n + alpha) = -{}",
            RatioText(beta),
            RatioText(&d)
        ));
    }
    homogeneous_criticals(beta, &d)
}

/// Whether `|x|^alpha` belongs to `A_p` on `R^n` (`p = inf` means `A_inf`).
pub fn power_weight_in_ap<I: ExactInt>(alpha: &Ratio<I>, n: u32, p: &ExtReal<I>) -> Result<bool> {
    check_dim(n)?;
    let nn = int::<I>(n as i64);
    let integrable = *alpha > -nn.clone();
    match p {
        ExtReal::Infinite => Ok(integrable),
        ExtReal::Finite(p) => {
            let one = Ratio::one();
            match p.cmp(&one) {
                Ordering::Less => invalid(format!("A_p needs p >= 1, got {}", RatioText(p))),
                Ordering::Equal => Ok(integrable && !alpha.is_positive()),
                Ordering::Greater => Ok(integrable && *alpha < nn * (p.clone() - one)),
            }
        }
    }
}

/// Whether `|x|^alpha` belongs to `RH_s` on `R^n` (`s = inf` allowed).
pub fn power_weight_in_rh<I: ExactInt>(alpha: &Ratio<I>, n: u32, s: &ExtReal<I>) -> Result<bool> {
    check_dim(n)?;
    let nn = int::<I>(n as i64);
    let integrable = *alpha > -nn.clone();
    match s {
        ExtReal::Infinite => Ok(!alpha.is_negative()),
        ExtReal::Finite(s) => {
            let one = Ratio::one();
            match s.cmp(&one) {
                Ordering::Less => invalid(format!("RH_s needs s >= 1, got {}", RatioText(s))),
                Ordering::Equal => Ok(integrable),
                Ordering::Greater => Ok(integrable && *alpha > -(nn / s.clone())),
            }
        }
    }
}

/// `q^{K,*}_w = q n r_w / (n r_w - K q)` when `K q < n r_w`, otherwise `inf`.
///
/// Evaluated as `[(1/q - K/(n r_w))^+]^{-1}`, which also covers `q = inf` and
/// `r_w = inf` as limits.
pub fn sobolev_exponent<I: ExactInt>(
    q: &ExtReal<I>,
    k: u32,
    r_w: &ExtReal<I>,
    n: u32,
) -> Result<ExtReal<I>> {
    check_dim(n)?;
    if *q < ExtReal::one() {
        return invalid(format!("Sobolev exponent needs q >= 1, got {q}"));
    }
    if k < 1 {
        return invalid("Sobolev exponent needs K >= 1");
    }
    if *r_w < ExtReal::one() {
        return invalid(format!("r_w must be >= 1, got {r_w}"));
    }
    sobolev_unchecked(q, k, r_w, n)
}

fn sobolev_unchecked<I: ExactInt>(
    q: &ExtReal<I>,
    k: u32,
    r_w: &ExtReal<I>,
    n: u32,
) -> Result<ExtReal<I>> {
    let inv_q = q.recip();
    let drop = ExtReal::integer(k as i64).div(&r_w.scale(n as i64))?;
    match (inv_q, drop) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => {
            let gap = a - b;
            if gap.is_positive() {
                Ok(ExtReal::Finite(gap.recip()))
            } else {
                Ok(ExtReal::Infinite)
            }
        }
        _ => unreachable!("reciprocals of exponents >= 1 are finite"),
    }
}

/// `(p_+)^{K,*}_w`: `p_+ n r_w / (n r_w - (2K+1) p_+)` when
/// `(2K+1) p_+ < n r_w`, otherwise `inf`. `K = 0` gives `(p_+)^*_w`.
pub fn poisson_upper<I: ExactInt>(
    p_plus: &ExtReal<I>,
    k: u32,
    r_w: &ExtReal<I>,
    n: u32,
) -> Result<ExtReal<I>> {
    check_dim(n)?;
    if *p_plus <= ExtReal::one() {
        return invalid(format!("p_+ must exceed 1, got {p_plus}"));
    }
    if *r_w < ExtReal::one() {
        return invalid(format!("r_w must be >= 1, got {r_w}"));
    }
    sobolev_unchecked(p_plus, 2 * k + 1, r_w, n)
}

/// `2^*_w`.
pub fn two_star<I: ExactInt>(r_w: &ExtReal<I>, n: u32) -> Result<ExtReal<I>> {
    sobolev_exponent(&ExtReal::integer(2), 1, r_w, n)
}

/// `2^{**}_w`.
pub fn two_star_star<I: ExactInt>(r_w: &ExtReal<I>, n: u32) -> Result<ExtReal<I>> {
    sobolev_exponent(&ExtReal::integer(2), 2, r_w, n)
}

/// Conservative stand-ins for `(p_-(L_w), p_+(L_w))`: `((2^*_w)', 2^*_w)`.
pub fn surrogate_endpoints<I: ExactInt>(
    r_w: &ExtReal<I>,
    n: u32,
) -> Result<(ExtReal<I>, ExtReal<I>)> {
    let upper = two_star(r_w, n)?;
    Ok((conjugate(&upper)?, upper))
}

/// Open interval `(lo, hi)` of exponents; `empty` when `lo >= hi`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "I: Serialize", deserialize = "I: DeserializeOwned"))]
pub struct ExponentRange<I: ExactInt = i64> {
    pub lo: ExtReal<I>,
    pub hi: ExtReal<I>,
    pub empty: bool,
}

impl<I: ExactInt> ExponentRange<I> {
    pub fn new(lo: ExtReal<I>, hi: ExtReal<I>) -> Self {
        let empty = lo >= hi;
        Self { lo, hi, empty }
    }

    pub fn contains(&self, p: &ExtReal<I>) -> bool {
        !self.empty && self.lo < *p && *p < self.hi
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.empty || (!other.empty && other.lo <= self.lo && self.hi <= other.hi)
    }
}

impl<I: ExactInt> Display for ExponentRange<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            write!(f, "empty ({}, {})", self.lo, self.hi)
        } else {
            write!(f, "({}, {})", self.lo, self.hi)
        }
    }
}

/// `W(p0, q0) = (p0 r, q0 / s)` for the critical pair `crit`; the same
/// formula gives `W_v^w` when `crit` holds `(r_v(w), s_v(w))`.
pub fn range_w<I: ExactInt>(
    p0: &ExtReal<I>,
    q0: &ExtReal<I>,
    crit: &CriticalPair<I>,
) -> Result<ExponentRange<I>> {
    if p0 >= q0 {
        return invalid(format!("range needs p0 < q0, got p0 = {p0}, q0 = {q0}"));
    }
    let lo = p0.mul(&crit.r_w);
    let hi = if q0.is_infinite() {
        ExtReal::Infinite
    } else {
        q0.div(&crit.s_w)?
    };
    Ok(ExponentRange::new(lo, hi))
}

/// Interval with signed rational endpoints; `hi = None` is `+inf`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedInterval<I: ExactInt = i64> {
    pub lo: Ratio<I>,
    pub lo_closed: bool,
    pub hi: Option<Ratio<I>>,
    pub hi_closed: bool,
}

impl<I: ExactInt> SignedInterval<I> {
    pub fn open(lo: Ratio<I>, hi: Option<Ratio<I>>) -> Self {
        Self {
            lo,
            lo_closed: false,
            hi,
            hi_closed: false,
        }
    }

    pub fn contains(&self, x: &Ratio<I>) -> bool {
        let above = if self.lo_closed {
            *x >= self.lo
        } else {
            *x > self.lo
        };
        let below = match &self.hi {
            None => true,
            Some(h) if self.hi_closed => x <= h,
            Some(h) => x < h,
        };
        above && below
    }

    fn negated(&self) -> Self {
        let hi = self.hi.clone().expect("bounded interval");
        Self {
            lo: -hi,
            lo_closed: self.hi_closed,
            hi: Some(-self.lo.clone()),
            hi_closed: self.lo_closed,
        }
    }

    /// Endpoints as strings, `"inf"` for an unbounded upper end.
    pub fn endpoints(&self) -> [String; 2] {
        [
            RatioText(&self.lo).to_string(),
            self.hi
                .as_ref()
                .map_or_else(|| "inf".to_string(), |h| RatioText(h).to_string()),
        ]
    }
}

impl<I: ExactInt> Display for SignedInterval<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [lo, hi] = self.endpoints();
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{lo}, {hi}{r}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemigroupFamily {
    Heat,
    Poisson,
}

/// Inputs for [`corollary_ranges`].
#[derive(Clone, Debug, PartialEq)]
pub enum CorollaryQuery<I: ExactInt = i64> {
    /// Unweighted `L^2` boundedness of the heat square functions.
    HeatL2 { n: u32, r: Ratio<I> },
    /// Unweighted `L^2` boundedness of the Poisson square functions.
    PoissonL2 { n: u32, r: Ratio<I> },
    /// Unweighted `L^p` boundedness, heat; `p` optional.
    HeatLp {
        n: u32,
        r: Ratio<I>,
        p: Option<Ratio<I>>,
    },
    /// Unweighted `L^p` boundedness, Poisson; `p` optional.
    PoissonLp {
        n: u32,
        r: Ratio<I>,
        p: Option<Ratio<I>>,
    },
    /// Power weights: admissible `alpha` for `L^2(R^n)` boundedness.
    PowerWeight { family: SemigroupFamily, n: u32 },
}

/// Conditions produced by [`corollary_ranges`].
#[derive(Clone, Debug, PartialEq)]
pub struct CorollaryReport<I: ExactInt = i64> {
    /// Admissible exponents `p`.
    pub p_range: Option<SignedInterval<I>>,
    /// Required Muckenhoupt class `A_r`.
    pub ap_index: Option<Ratio<I>>,
    /// Required reverse Hölder class `RH_s`.
    pub rh_index: Option<ExtReal<I>>,
    /// Whether the supplied `p` lies in `p_range`.
    pub p_admissible: Option<bool>,
    /// Admissible power-weight exponents for `|x|^alpha`.
    pub alpha_range: Option<SignedInterval<I>>,
    /// The same condition for `L_gamma = -|x|^gamma div(|x|^{-gamma} A grad)`.
    pub gamma_range: Option<SignedInterval<I>>,
    /// `false` when the parameters fall outside every case of the statement.
    pub covered: bool,
}

impl<I: ExactInt> CorollaryReport<I> {
    fn blank() -> Self {
        Self {
            p_range: None,
            ap_index: None,
            rh_index: None,
            p_admissible: None,
            alpha_range: None,
            gamma_range: None,
            covered: true,
        }
    }
}

fn check_r<I: ExactInt>(r: &Ratio<I>) -> Result<()> {
    if *r < Ratio::one() || *r > int(2) {
        return invalid(format!("r must lie in [1, 2], got {}", RatioText(r)));
    }
    Ok(())
}

/// `RH` index `(p (n r + 2) / (2 n r))'`.
fn lp_rh_index<I: ExactInt>(n: u32, r: &Ratio<I>, p: &Ratio<I>) -> Result<ExtReal<I>> {
    let nr = int::<I>(n as i64) * r.clone();
    let base = p.clone() * (nr.clone() + int(2)) / (int::<I>(2) * nr);
    if base < Ratio::one() {
        return invalid(format!("p = {} lies below 2nr/(nr+2)", RatioText(p)));
    }
    conjugate(&ExtReal::Finite(base))
}

/// Closed-form admissibility conditions of the unweighted corollaries.
pub fn corollary_ranges<I: ExactInt>(query: &CorollaryQuery<I>) -> Result<CorollaryReport<I>> {
    let mut report = CorollaryReport::blank();
    match query {
        CorollaryQuery::HeatL2 { n, r } | CorollaryQuery::PoissonL2 { n, r } => {
            need_n2(*n)?;
            check_r(r)?;
            let nn = int::<I>(*n as i64);
            report.ap_index = Some(r.clone());
            report.rh_index = Some(ExtReal::Finite(
                nn.clone() * r.clone() / int(2) + Ratio::one(),
            ));
            report.p_range = Some(SignedInterval {
                lo: int(2),
                lo_closed: true,
                hi: Some(int(2)),
                hi_closed: true,
            });
            if matches!(query, CorollaryQuery::PoissonL2 { .. }) {
                let cap = Ratio::one() + int::<I>(4) / nn;
                report.covered = *r <= cap;
            }
        }
        CorollaryQuery::HeatLp { n, r, p } | CorollaryQuery::PoissonLp { n, r, p } => {
            need_n2(*n)?;
            check_r(r)?;
            let nn = int::<I>(*n as i64);
            let nr = nn.clone() * r.clone();
            let lo = int::<I>(2) * nr.clone() / (nr.clone() + int(2));
            let first_case = r.is_one();
            let poisson = matches!(query, CorollaryQuery::PoissonLp { .. });
            let hi = if !poisson || nr <= int(4) {
                None
            } else if first_case {
                Some(int::<I>(2) * nn.clone() / (nn.clone() - int(4)))
            } else {
                Some(int::<I>(2) * nn.clone() / (nr.clone() - int(4)))
            };
            let range = SignedInterval {
                lo,
                lo_closed: !first_case,
                hi_closed: !first_case && hi.is_some(),
                hi,
            };
            report.ap_index = Some(r.clone());
            if let Some(p) = p {
                let ok = range.contains(p);
                report.p_admissible = Some(ok);
                if ok {
                    report.rh_index = Some(lp_rh_index(*n, r, p)?);
                }
            }
            report.p_range = Some(range);
        }
        CorollaryQuery::PowerWeight { family, n } => {
            need_n2(*n)?;
            let nn = int::<I>(*n as i64);
            let lo = -(int::<I>(2) * nn.clone() / (nn.clone() + int(2)));
            let hi = match family {
                SemigroupFamily::Heat => nn,
                SemigroupFamily::Poisson => std::cmp::min(nn, int(4)),
            };
            let alpha = SignedInterval::open(lo, Some(hi));
            report.gamma_range = Some(alpha.negated());
            report.alpha_range = Some(alpha);
        }
    }
    Ok(report)
}

fn need_n2(n: u32) -> Result<()> {
    if n < 2 {
        return invalid(format!("the corollaries need n >= 2, got {n}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    type E = ExtReal<i64>;

    fn q(a: i64, b: i64) -> Ratio<i64> {
        Ratio::new(a, b)
    }

    #[test]
    fn criticals_of_power_weights() {
        let c = power_weight_criticals(&q(0, 1), 2).unwrap();
        assert_eq!((c.r_w, c.s_w), (E::one(), E::one()));
        let c = power_weight_criticals(&q(1, 1), 2).unwrap();
        assert_eq!((c.r_w, c.s_w), (E::frac(3, 2), E::one()));
        let c = power_weight_criticals(&q(-1, 1), 2).unwrap();
        assert_eq!((c.r_w, c.s_w), (E::one(), E::integer(2)));
        let err = power_weight_criticals(&q(5, 1), 2).unwrap_err();
        assert!(err.to_string().contains("alpha outside (-n, n)"));
        assert!(power_weight_criticals(&q(-2, 1), 2).is_err());
    }

    #[test]
    fn sobolev_branches() {
        let one = E::one();
        assert_eq!(
            sobolev_exponent(&E::integer(2), 1, &one, 3).unwrap(),
            E::integer(6)
        );
        assert_eq!(
            sobolev_exponent(&E::integer(2), 1, &one, 2).unwrap(),
            E::inf()
        );
        assert_eq!(
            sobolev_exponent(&E::integer(2), 2, &one, 4).unwrap(),
            E::inf()
        );
        assert_eq!(
            sobolev_exponent(&E::integer(2), 2, &one, 5).unwrap(),
            E::integer(10)
        );
        assert!(sobolev_exponent(&E::frac(1, 2), 1, &one, 3).is_err());
        assert!(sobolev_exponent(&E::integer(2), 0, &one, 3).is_err());
        // q = inf and r_w = inf limits
        assert_eq!(sobolev_exponent(&E::inf(), 1, &one, 3).unwrap(), E::inf());
        assert_eq!(
            sobolev_exponent(&E::integer(3), 1, &E::inf(), 3).unwrap(),
            E::integer(3)
        );
    }

    #[test]
    fn poisson_upper_branches() {
        let one = E::one();
        assert_eq!(poisson_upper(&E::integer(6), 0, &one, 3).unwrap(), E::inf());
        assert_eq!(
            poisson_upper(&E::frac(5, 2), 0, &one, 10).unwrap(),
            E::frac(10, 3)
        );
        assert_eq!(
            poisson_upper(&E::integer(2), 1, &E::integer(2), 3).unwrap(),
            E::inf()
        );
        assert!(poisson_upper(&E::one(), 0, &one, 3).is_err());
    }

    #[test]
    fn ranges() {
        let any = CriticalPair::new(E::frac(7, 3), E::integer(5)).unwrap();
        let r = range_w(&E::zero(), &E::inf(), &any).unwrap();
        assert_eq!((r.lo, r.hi, r.empty), (E::zero(), E::inf(), false));
        let c = CriticalPair::new(E::frac(3, 2), E::one()).unwrap();
        let r = range_w(&E::one(), &E::inf(), &c).unwrap();
        assert_eq!((r.lo.clone(), r.hi.clone()), (E::frac(3, 2), E::inf()));
        assert!(r.contains(&E::integer(2)));
        assert!(!r.contains(&E::frac(3, 2)));
        let c = CriticalPair::new(E::integer(2), E::integer(2)).unwrap();
        let r = range_w(&E::frac(6, 5), &E::integer(2), &c).unwrap();
        assert!(r.empty);
        assert!(range_w(&E::integer(2), &E::integer(2), &c).is_err());
    }

    #[test]
    fn conjugates() {
        assert_eq!(conjugate(&E::one()).unwrap(), E::inf());
        assert_eq!(conjugate(&E::inf()).unwrap(), E::one());
        assert_eq!(conjugate(&E::integer(6)).unwrap(), E::frac(6, 5));
        assert!(conjugate(&E::frac(1, 2)).is_err());
    }

    #[test]
    fn corollaries() {
        let rep = corollary_ranges(&CorollaryQuery::<i64>::PowerWeight {
            family: SemigroupFamily::Heat,
            n: 2,
        })
        .unwrap();
        assert_eq!(
            rep.alpha_range.unwrap().endpoints(),
            ["-1".to_string(), "2".to_string()]
        );
        let rep = corollary_ranges(&CorollaryQuery::<i64>::PowerWeight {
            family: SemigroupFamily::Poisson,
            n: 2,
        })
        .unwrap();
        assert_eq!(
            rep.alpha_range.unwrap().endpoints(),
            ["-1".to_string(), "2".to_string()]
        );
        let rep = corollary_ranges(&CorollaryQuery::<i64>::PowerWeight {
            family: SemigroupFamily::Poisson,
            n: 6,
        })
        .unwrap();
        assert_eq!(
            rep.alpha_range.unwrap().endpoints(),
            ["-3/2".to_string(), "4".to_string()]
        );
        let g = rep.gamma_range.unwrap();
        assert_eq!(g.endpoints(), ["-4".to_string(), "3/2".to_string()]);
        let rep = corollary_ranges(&CorollaryQuery::HeatL2 { n: 3, r: q(1, 1) }).unwrap();
        assert_eq!(rep.ap_index, Some(q(1, 1)));
        assert_eq!(rep.rh_index, Some(E::frac(5, 2)));
        assert!(corollary_ranges(&CorollaryQuery::HeatL2 { n: 3, r: q(3, 1) }).is_err());
        assert!(corollary_ranges(&CorollaryQuery::PoissonL2 { n: 3, r: q(1, 2) }).is_err());
        let rep = corollary_ranges(&CorollaryQuery::PoissonL2 { n: 8, r: q(2, 1) }).unwrap();
        assert!(!rep.covered);
    }

    #[test]
    fn lp_corollaries_endpoints() {
        // heat, r = 1, n = 3: p in (6/5, inf), RH index (5p/6)' = 5/2 at p = 2
        let rep = corollary_ranges(&CorollaryQuery::HeatLp {
            n: 3,
            r: q(1, 1),
            p: Some(q(2, 1)),
        })
        .unwrap();
        let range = rep.p_range.unwrap();
        assert_eq!(range.to_string(), "(6/5, inf)");
        assert_eq!(rep.p_admissible, Some(true));
        assert_eq!(rep.rh_index, Some(E::frac(5, 2)));
        // heat, r = 2, n = 2: closed lower endpoint 8/6 = 4/3 gives RH_inf
        let rep = corollary_ranges(&CorollaryQuery::HeatLp {
            n: 2,
            r: q(2, 1),
            p: Some(q(4, 3)),
        })
        .unwrap();
        assert_eq!(rep.p_range.unwrap().to_string(), "[4/3, inf)");
        assert_eq!(rep.rh_index, Some(E::inf()));
        // Poisson, r = 1, n = 6: (3/2, 6)
        let rep = corollary_ranges(&CorollaryQuery::<i64>::PoissonLp {
            n: 6,
            r: q(1, 1),
            p: None,
        })
        .unwrap();
        assert_eq!(rep.p_range.unwrap().to_string(), "(3/2, 6)");
        // Poisson, r = 2, n = 3: nr = 6 > 4, [12/8, 6/2] = [3/2, 3]
        let rep = corollary_ranges(&CorollaryQuery::<i64>::PoissonLp {
            n: 3,
            r: q(2, 1),
            p: Some(q(4, 1)),
        })
        .unwrap();
        assert_eq!(rep.p_range.unwrap().to_string(), "[3/2, 3]");
        assert_eq!(rep.p_admissible, Some(false));
    }

    #[test]
    fn power_weight_class_predicates() {
        let a = |x: i64, y: i64| q(x, y);
        assert!(power_weight_in_ap(&a(-1, 1), 2, &E::one()).unwrap());
        assert!(!power_weight_in_ap(&a(1, 1), 2, &E::one()).unwrap());
        assert!(power_weight_in_ap(&a(1, 1), 2, &E::integer(2)).unwrap());
        assert!(!power_weight_in_ap(&a(1, 1), 1, &E::integer(2)).unwrap());
        assert!(power_weight_in_rh(&a(1, 1), 2, &E::inf()).unwrap());
        assert!(!power_weight_in_rh(&a(-1, 1), 2, &E::integer(2)).unwrap());
        assert!(power_weight_in_rh(&a(-1, 1), 2, &E::frac(3, 2)).unwrap());
    }

    #[test]
    fn relative_criticals_are_consistent_with_duality() {
        // v = w^{-1}: r_v(w) = 1 iff w in RH_{p'} for all p, s_v(w) = r_w
        let alpha = q(1, 1);
        let c = power_weight_relative_criticals(&-alpha, &alpha, 2).unwrap();
        assert_eq!(c.r_w, E::one());
        assert_eq!(c.s_w, power_weight_criticals(&alpha, 2).unwrap().r_w);
    }

    #[test]
    fn json_shapes() {
        let r = ExponentRange::new(E::frac(3, 2), E::inf());
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(text, r#"{"lo":{"num":3,"den":2},"hi":"inf","empty":false}"#);
        let back: ExponentRange<i64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<E>(r#"{"num":-1,"den":2}"#).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!("3/2".parse::<E>().unwrap(), E::frac(3, 2));
        assert_eq!("inf".parse::<E>().unwrap(), E::inf());
        assert_eq!("1.5".parse::<E>().unwrap(), E::frac(3, 2));
        assert_eq!(parse_ratio::<i64>("-0.8").unwrap(), q(-4, 5));
        assert_eq!(parse_ratio::<i64>("-3/2").unwrap(), q(-3, 2));
        assert!("-1".parse::<E>().is_err());
        assert!("x".parse::<E>().is_err());
        assert!(parse_ratio::<i64>("1/0").is_err());
    }

    #[test]
    fn big_rationals_agree() {
        let r: ExtReal<BigInt> =
            sobolev_exponent(&ExtReal::integer(2), 1, &ExtReal::one(), 3).unwrap();
        assert_eq!(r.to_string(), "6");
    }
}
