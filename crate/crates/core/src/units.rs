//! Dimensions, units and dimensioned quantities.
//!
//! Dimension exponents are exact rationals and unit scale factors are exact
//! big rationals relative to the canonical unit of each base dimension. The
//! canonical length unit is the foot.
//!
//! Unit expressions follow a small grammar:
//!
//! ```text
//! expr := term (('*' | '/') term)*
//! term := ident ('^' int)?
//! ```
//!
//! ```
//! use mensura_core::units::{convert, Unit};
//!
//! let inch: Unit = "in".parse().unwrap();
//! let foot: Unit = "ft".parse().unwrap();
//! let d = convert(8.3, &inch, &foot).unwrap();
//! assert!((d - 8.3 / 12.0).abs() < 1e-15);
//! ```

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact exponent of a base dimension.
pub type Exponent = Rational64;

/// Number of base dimensions tracked by [`Dimension`].
pub const BASE_COUNT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaseDimension {
    Length,
    Mass,
    Time,
    Current,
}

impl BaseDimension {
    pub const ALL: [BaseDimension; BASE_COUNT] = [
        BaseDimension::Length,
        BaseDimension::Mass,
        BaseDimension::Time,
        BaseDimension::Current,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BaseDimension::Length => "L",
            BaseDimension::Mass => "M",
            BaseDimension::Time => "T",
            BaseDimension::Current => "I",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Exponent vector over the base dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dimension {
    exponents: [Exponent; BASE_COUNT],
}

impl Dimension {
    pub const fn dimensionless() -> Self {
        Dimension {
            exponents: [Rational64::new_raw(0, 1); BASE_COUNT],
        }
    }

    pub fn base(base: BaseDimension) -> Self {
        let mut d = Self::dimensionless();
        d.exponents[base.index()] = Exponent::one();
        d
    }

    pub fn length() -> Self {
        Self::base(BaseDimension::Length)
    }

    /// `L^n`.
    pub fn length_pow(n: i64) -> Self {
        Self::length().powi(n)
    }

    pub fn from_exponents(exponents: [Exponent; BASE_COUNT]) -> Self {
        Dimension { exponents }
    }

    pub fn exponents(&self) -> &[Exponent; BASE_COUNT] {
        &self.exponents
    }

    pub fn exponent(&self, base: BaseDimension) -> Exponent {
        self.exponents[base.index()]
    }

    pub fn is_dimensionless(&self) -> bool {
        self.exponents.iter().all(Zero::is_zero)
    }

    pub fn powr(&self, r: Exponent) -> Self {
        let mut out = *self;
        for e in &mut out.exponents {
            *e *= r;
        }
        out
    }

    pub fn powi(&self, n: i64) -> Self {
        self.powr(Exponent::from_integer(n))
    }
}

impl Default for Dimension {
    fn default() -> Self {
        Self::dimensionless()
    }
}

// exponents add when dimensions multiply
#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for Dimension {
    type Output = Dimension;
    fn mul(mut self, rhs: Dimension) -> Dimension {
        for (a, b) in self.exponents.iter_mut().zip(rhs.exponents) {
            *a += b;
        }
        self
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for Dimension {
    type Output = Dimension;
    fn div(mut self, rhs: Dimension) -> Dimension {
        for (a, b) in self.exponents.iter_mut().zip(rhs.exponents) {
            *a -= b;
        }
        self
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_dimensionless() {
            return f.write_str("1");
        }
        let mut first = true;
        for base in BaseDimension::ALL {
            let e = self.exponent(base);
            if e.is_zero() {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            f.write_str(base.symbol())?;
            if !e.is_one() {
                if e.is_integer() {
                    write!(f, "^{}", e.numer())?;
                } else {
                    write!(f, "^({}/{})", e.numer(), e.denom())?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnitError {
    #[error("empty unit expression")]
    Empty,
    #[error("unknown unit `{token}` at byte {offset}")]
    UnknownToken { token: String, offset: usize },
    #[error("malformed exponent at byte {offset}")]
    MalformedExponent { offset: usize },
    #[error("unexpected character `{found}` at byte {offset}")]
    UnexpectedChar { found: char, offset: usize },
    #[error("expected a unit name at byte {offset}")]
    ExpectedIdent { offset: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: Dimension, right: Dimension },
}

struct UnitDef {
    name: &'static str,
    dimension: fn() -> Dimension,
    // exact scale to the canonical unit, as numerator/denominator
    scale: (i64, i64),
    power: i32,
}

// 1 m = 1/0.3048 ft = 1250/381 ft exactly.
const UNIT_TABLE: &[UnitDef] = &[
    UnitDef { name: "ft", dimension: Dimension::length, scale: (1, 1), power: 1 },
    UnitDef { name: "in", dimension: Dimension::length, scale: (1, 12), power: 1 },
    UnitDef { name: "m", dimension: Dimension::length, scale: (1250, 381), power: 1 },
    UnitDef { name: "cm", dimension: Dimension::length, scale: (1250, 38100), power: 1 },
    UnitDef { name: "ft3", dimension: Dimension::length, scale: (1, 1), power: 3 },
    UnitDef { name: "m3", dimension: Dimension::length, scale: (1250, 381), power: 3 },
    UnitDef { name: "kg", dimension: mass, scale: (1, 1), power: 1 },
    UnitDef { name: "s", dimension: time, scale: (1, 1), power: 1 },
    UnitDef { name: "A", dimension: current, scale: (1, 1), power: 1 },
];

fn mass() -> Dimension {
    Dimension::base(BaseDimension::Mass)
}

fn time() -> Dimension {
    Dimension::base(BaseDimension::Time)
}

fn current() -> Dimension {
    Dimension::base(BaseDimension::Current)
}

fn lookup_unit(ident: &str) -> Option<(Dimension, BigRational)> {
    UNIT_TABLE.iter().find(|u| u.name == ident).map(|u| {
        let s = BigRational::new(BigInt::from(u.scale.0), BigInt::from(u.scale.1));
        ((u.dimension)().powi(u.power as i64), s.pow(u.power))
    })
}

fn lookup_base(ident: &str) -> Option<(Dimension, BigRational)> {
    BaseDimension::ALL
        .into_iter()
        .find(|b| b.symbol() == ident)
        .map(|b| (Dimension::base(b), BigRational::one()))
}

/// Names accepted by [`parse_unit_expr`].
pub fn known_units() -> impl Iterator<Item = &'static str> {
    UNIT_TABLE.iter().map(|u| u.name)
}

/// A parsed `ident^exp` factor.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Term {
    ident: String,
    power: i32,
}

fn parse_terms(text: &str) -> Result<Vec<(Term, usize)>, UnitError> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let skip_ws = |pos: &mut usize| {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
    };
    skip_ws(&mut pos);
    if pos == bytes.len() {
        return Err(UnitError::Empty);
    }

    let mut terms = Vec::new();
    let mut sign = 1;
    loop {
        skip_ws(&mut pos);
        let start = pos;
        if pos < bytes.len() && bytes[pos].is_ascii_alphabetic() {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
        } else {
            return Err(match text[pos..].chars().next() {
                None => UnitError::ExpectedIdent { offset: pos },
                Some(c) if c == '*' || c == '/' || c == '^' => UnitError::ExpectedIdent { offset: pos },
                Some(c) => UnitError::UnexpectedChar { found: c, offset: pos },
            });
        }
        let ident = text[start..pos].to_string();
        skip_ws(&mut pos);

        let mut power: i32 = 1;
        if pos < bytes.len() && bytes[pos] == b'^' {
            pos += 1;
            skip_ws(&mut pos);
            let exp_start = pos;
            if pos < bytes.len() && (bytes[pos] == b'-' || bytes[pos] == b'+') {
                pos += 1;
            }
            let digits_start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            if pos == digits_start {
                return Err(UnitError::MalformedExponent { offset: exp_start });
            }
            power = text[exp_start..pos]
                .parse()
                .map_err(|_| UnitError::MalformedExponent { offset: exp_start })?;
            // `ft^2.5` and `ft^2x` are exponent errors rather than stray characters
            if pos < bytes.len() && (bytes[pos] == b'.' || bytes[pos].is_ascii_alphabetic()) {
                return Err(UnitError::MalformedExponent { offset: exp_start });
            }
            skip_ws(&mut pos);
        }
        let power = power
            .checked_mul(sign)
            .ok_or(UnitError::MalformedExponent { offset: start })?;
        terms.push((Term { ident, power }, start));

        if pos == bytes.len() {
            break;
        }
        match bytes[pos] {
            b'*' => sign = 1,
            b'/' => sign = -1,
            _ => {
                let found = text[pos..].chars().next().unwrap_or('?');
                return Err(UnitError::UnexpectedChar { found, offset: pos });
            }
        }
        pos += 1;
    }
    Ok(terms)
}

fn evaluate_terms(
    text: &str,
    lookup: impl Fn(&str) -> Option<(Dimension, BigRational)>,
) -> Result<(Vec<Term>, Dimension, BigRational), UnitError> {
    let terms = parse_terms(text)?;
    let mut dimension = Dimension::dimensionless();
    let mut scale = BigRational::one();
    let mut merged: Vec<Term> = Vec::new();
    for (term, offset) in terms {
        let (dim, s) = lookup(&term.ident).ok_or_else(|| UnitError::UnknownToken {
            token: term.ident.clone(),
            offset,
        })?;
        dimension = dimension * dim.powi(term.power as i64);
        scale *= s.pow(term.power);
        match merged.iter_mut().find(|t| t.ident == term.ident) {
            Some(t) => {
                t.power = t
                    .power
                    .checked_add(term.power)
                    .ok_or(UnitError::MalformedExponent { offset })?
            }
            None => merged.push(term),
        }
    }
    merged.retain(|t| t.power != 0);
    Ok((merged, dimension, scale))
}

/// A named unit with an exact scale to the canonical unit of its dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    name: String,
    dimension: Dimension,
    scale: BigRational,
}

impl Unit {
    pub fn foot() -> Self {
        Unit {
            name: "ft".into(),
            dimension: Dimension::length(),
            scale: BigRational::one(),
        }
    }

    pub fn cubic_foot() -> Self {
        Unit {
            name: "ft3".into(),
            dimension: Dimension::length_pow(3),
            scale: BigRational::one(),
        }
    }

    /// Canonical printed form; reparses to an equal unit.
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    /// Exact factor taking a value in this unit to canonical units.
    pub fn scale_to_canonical(&self) -> &BigRational {
        &self.scale
    }

    pub fn scale_f64(&self) -> f64 {
        self.scale.to_f64().unwrap_or(f64::NAN)
    }

    /// Interpret `value` as measured in this unit.
    pub fn quantity(&self, value: f64) -> Quantity {
        Quantity::new(value * self.scale_f64(), self.dimension)
    }

    /// Express a quantity in this unit.
    pub fn value_of(&self, q: &Quantity) -> Result<f64, UnitError> {
        if q.dimension != self.dimension {
            return Err(UnitError::DimensionMismatch {
                left: q.dimension,
                right: self.dimension,
            });
        }
        let inv = self.scale.recip().to_f64().unwrap_or(f64::NAN);
        Ok(q.value * inv)
    }
}

impl FromStr for Unit {
    type Err = UnitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_unit_expr(s)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl Serialize for Unit {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name)
    }
}

impl<'de> Deserialize<'de> for Unit {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn print_terms(terms: &[Term]) -> String {
    if terms.is_empty() {
        return "ft^0".into();
    }
    terms
        .iter()
        .map(|t| match t.power {
            1 => t.ident.clone(),
            p => format!("{}^{}", t.ident, p),
        })
        .collect::<Vec<_>>()
        .join("*")
}

/// Parse a unit expression such as `ft`, `in`, `m^3` or `kg*m/s^2`.
pub fn parse_unit_expr(text: &str) -> Result<Unit, UnitError> {
    let (terms, dimension, scale) = evaluate_terms(text, lookup_unit)?;
    Ok(Unit {
        name: print_terms(&terms),
        dimension,
        scale,
    })
}

/// Parse a dimension expression over the base symbols `L`, `M`, `T`, `I`.
/// The literal `1` denotes a dimensionless variable.
pub fn parse_dimension_expr(text: &str) -> Result<Dimension, UnitError> {
    if text.trim() == "1" {
        return Ok(Dimension::dimensionless());
    }
    evaluate_terms(text, lookup_base).map(|(_, d, _)| d)
}

/// Convert `value` from one unit to another of the same dimension.
pub fn convert(value: f64, from: &Unit, to: &Unit) -> Result<f64, UnitError> {
    if from.dimension != to.dimension {
        return Err(UnitError::DimensionMismatch {
            left: from.dimension,
            right: to.dimension,
        });
    }
    let ratio = &from.scale / &to.scale;
    Ok(value * ratio.to_f64().unwrap_or(f64::NAN))
}

/// A value in canonical units together with its dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub dimension: Dimension,
}

impl Quantity {
    pub fn new(value: f64, dimension: Dimension) -> Self {
        Quantity { value, dimension }
    }

    pub fn dimensionless(value: f64) -> Self {
        Quantity::new(value, Dimension::dimensionless())
    }

    pub fn feet(value: f64) -> Self {
        Quantity::new(value, Dimension::length())
    }

    pub fn cubic_feet(value: f64) -> Self {
        Quantity::new(value, Dimension::length_pow(3))
    }

    pub fn powr(&self, r: Exponent) -> Quantity {
        let value = if r.is_integer() {
            match r.numer().to_i32() {
                Some(n) => self.value.powi(n),
                None => self.value.powf(*r.numer() as f64),
            }
        } else {
            self.value.powf(*r.numer() as f64 / *r.denom() as f64)
        };
        Quantity::new(value, self.dimension.powr(r))
    }

    pub fn checked_add(&self, rhs: &Quantity) -> Result<Quantity, UnitError> {
        self.same_dimension(rhs)?;
        Ok(Quantity::new(self.value + rhs.value, self.dimension))
    }

    pub fn checked_sub(&self, rhs: &Quantity) -> Result<Quantity, UnitError> {
        self.same_dimension(rhs)?;
        Ok(Quantity::new(self.value - rhs.value, self.dimension))
    }

    fn same_dimension(&self, rhs: &Quantity) -> Result<(), UnitError> {
        if self.dimension == rhs.dimension {
            Ok(())
        } else {
            Err(UnitError::DimensionMismatch {
                left: self.dimension,
                right: rhs.dimension,
            })
        }
    }

    /// Multiply the value by `s` for every unit of length, i.e. rescale the
    /// length unit the quantity was measured in.
    pub fn rescale_length(&self, s: f64) -> Quantity {
        let e = self.dimension.exponent(BaseDimension::Length);
        let factor = if e.is_integer() {
            s.powi(*e.numer() as i32)
        } else {
            s.powf(*e.numer() as f64 / *e.denom() as f64)
        };
        Quantity::new(self.value * factor, self.dimension)
    }
}

impl Mul for Quantity {
    type Output = Quantity;
    fn mul(self, rhs: Quantity) -> Quantity {
        Quantity::new(self.value * rhs.value, self.dimension * rhs.dimension)
    }
}

impl Div for Quantity {
    type Output = Quantity;
    fn div(self, rhs: Quantity) -> Quantity {
        Quantity::new(self.value / rhs.value, self.dimension / rhs.dimension)
    }
}

impl Neg for Quantity {
    type Output = Quantity;
    fn neg(self) -> Quantity {
        Quantity::new(-self.value, self.dimension)
    }
}

// Panicking operators for call sites that have already checked dimensions.
impl Add for Quantity {
    type Output = Quantity;
    fn add(self, rhs: Quantity) -> Quantity {
        self.checked_add(&rhs).expect("adding quantities of different dimension")
    }
}

impl Sub for Quantity {
    type Output = Quantity;
    fn sub(self, rhs: Quantity) -> Quantity {
        self.checked_sub(&rhs).expect("subtracting quantities of different dimension")
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dimension.is_dimensionless() {
            write!(f, "{}", self.value)
        } else {
            write!(f, "{} {}", self.value, self.dimension)
        }
    }
}

/// Render an exact rational as `p/q` (or `p` when integral).
pub fn format_ratio(r: &Exponent) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse `p/q` or `p` into an exact rational.
pub fn parse_ratio(s: &str) -> Option<Exponent> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().ok()?;
            let q: i64 = q.trim().parse().ok()?;
            (q != 0).then(|| Rational64::new(p, q))
        }
        None => s.parse::<i64>().ok().map(Rational64::from_integer),
    }
}

pub(crate) fn big_to_exponent(r: &BigRational) -> Option<Exponent> {
    let n = r.numer().to_i64()?;
    let d = r.denom().to_i64()?;
    Some(Rational64::new(n, d))
}

pub(crate) fn exponent_to_big(r: &Exponent) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}
