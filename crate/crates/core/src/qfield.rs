//! Exact arithmetic in Q(√2, √3, √5, √7).
//!
//! An element is a rational combination of the 16 square roots `√d` with `d`
//! a square-free product of primes from {2, 3, 5, 7}. Radicands are stored as
//! 4-bit masks over those primes; terms are kept sorted with no zero
//! coefficients, so derived equality is field equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::combinat::{parse_rat, rat_string, rat_to_f64};
use crate::error::{Error, Result};

pub const PRIMES: [u32; 4] = [2, 3, 5, 7];

/// Radicand (square-free integer) for a prime mask.
pub fn radicand(mask: u8) -> u32 {
    PRIMES
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, p)| p)
        .product()
}

/// Prime mask for a square-free radicand dividing 210.
pub fn mask_of(radicand: u32) -> Option<u8> {
    let mut rest = radicand;
    let mut mask = 0u8;
    for (i, &p) in PRIMES.iter().enumerate() {
        if rest.is_multiple_of(p) {
            rest /= p;
            mask |= 1 << i;
            if rest.is_multiple_of(p) {
                return None;
            }
        }
    }
    (rest == 1).then_some(mask)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct QNum {
    terms: Vec<(u8, BigRational)>,
}

impl QNum {
    pub fn from_rational(q: BigRational) -> Self {
        if q.is_zero() {
            QNum::zero()
        } else {
            QNum {
                terms: vec![(0, q)],
            }
        }
    }

    pub fn from_int(v: i64) -> Self {
        QNum::from_rational(BigRational::from_integer(v.into()))
    }

    /// `coeff · √radicand`; `radicand` must be square-free and divide 210.
    pub fn sqrt_term(coeff: BigRational, radicand: u32) -> Self {
        let mask = mask_of(radicand).expect("square-free radicand dividing 210");
        if coeff.is_zero() {
            QNum::zero()
        } else {
            QNum {
                terms: vec![(mask, coeff)],
            }
        }
    }

    /// Terms as `(radicand, coefficient)` in increasing mask order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, &BigRational)> {
        self.terms.iter().map(|(m, c)| (radicand(*m), c))
    }

    pub fn coefficient(&self, radicand: u32) -> BigRational {
        let Some(mask) = mask_of(radicand) else {
            return BigRational::zero();
        };
        self.terms
            .iter()
            .find(|(m, _)| *m == mask)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn is_rational(&self) -> bool {
        self.terms.iter().all(|(m, _)| *m == 0)
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        match self.terms.as_slice() {
            [] => Some(BigRational::zero()),
            [(0, c)] => Some(c.clone()),
            _ => None,
        }
    }

    fn from_unsorted(mut terms: Vec<(u8, BigRational)>) -> Self {
        terms.sort_by_key(|(m, _)| *m);
        let mut out: Vec<(u8, BigRational)> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            match out.last_mut() {
                Some((lm, lc)) if *lm == m => *lc += c,
                _ => out.push((m, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        QNum { terms: out }
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        if q.is_zero() {
            return QNum::zero();
        }
        QNum {
            terms: self.terms.iter().map(|(m, c)| (*m, c * q)).collect(),
        }
    }

    /// Flips the sign of every term containing the `i`-th prime.
    fn conjugate_prime(&self, i: usize) -> Self {
        QNum {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (*m, if m & (1 << i) != 0 { -c } else { c.clone() }))
                .collect(),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroDivision);
        }
        let mut num = QNum::one();
        let mut den = self.clone();
        for i in 0..PRIMES.len() {
            if den.terms.iter().any(|(m, _)| m & (1 << i) != 0) {
                let conj = den.conjugate_prime(i);
                num = &num * &conj;
                den = &den * &conj;
            }
        }
        let d = den
            .to_rational()
            .expect("conjugating every prime leaves a rational norm");
        Ok(num.scale(&d.recip()))
    }

    /// Exact sign, certified by interval evaluation of the square roots.
    pub fn signum(&self) -> i32 {
        match self.terms.as_slice() {
            [] => return 0,
            [(_, c)] => return if c.is_positive() { 1 } else { -1 },
            _ => {}
        }
        let mut bits = 32usize;
        loop {
            let (lo, hi) = self.enclose(bits);
            if lo.is_positive() {
                return 1;
            }
            if hi.is_negative() {
                return -1;
            }
            bits *= 2;
        }
    }

    /// Rational interval containing the value, with each `√d` bracketed to
    /// within `2^-bits`.
    pub fn enclose(&self, bits: usize) -> (BigRational, BigRational) {
        let scale = BigInt::one() << bits;
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for (m, c) in &self.terms {
            let d = radicand(*m);
            let (rlo, rhi) = if d == 1 {
                (BigRational::one(), BigRational::one())
            } else {
                let root = (BigInt::from(d) * &scale * &scale).sqrt();
                (
                    BigRational::new(root.clone(), scale.clone()),
                    BigRational::new(root + 1, scale.clone()),
                )
            };
            if c.is_positive() {
                lo += c * rlo;
                hi += c * rhi;
            } else {
                lo += c * rhi;
                hi += c * rlo;
            }
        }
        (lo, hi)
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| rat_to_f64(c) * (radicand(*m) as f64).sqrt())
            .sum()
    }

    /// Positive square root of a positive rational, if it lies in the field.
    pub fn sqrt_rational(q: &BigRational) -> Result<Self> {
        if !q.is_positive() {
            return Err(Error::NotRepresentable(rat_string(q)));
        }
        // √(a/b) = √(ab) / b
        let mut rest = q.numer() * q.denom();
        let mut mask = 0u8;
        let mut outside = BigInt::one();
        for (i, &p) in PRIMES.iter().enumerate() {
            let p = BigInt::from(p);
            let mut e = 0u32;
            while (&rest % &p).is_zero() {
                rest /= &p;
                e += 1;
            }
            outside *= p.pow(e / 2);
            if e % 2 == 1 {
                mask |= 1 << i;
            }
        }
        let root = rest.sqrt();
        if &root * &root != rest {
            return Err(Error::NotRepresentable(rat_string(q)));
        }
        outside *= root;
        Ok(QNum {
            terms: vec![(mask, BigRational::new(outside, q.denom().clone()))],
        })
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = QNum::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Parses a radical literal such as `-3√5/14`, `9/(2√35)` or `√5/(√7)`.
    ///
    /// Numerator and denominator are each an integer, `√int`, or `int√int`.
    pub fn parse_radical(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad radical literal {s:?}"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(&t)),
        };
        let (num, den) = match body.split_once('/') {
            Some((a, b)) => {
                let b = b
                    .strip_prefix('(')
                    .and_then(|x| x.strip_suffix(')'))
                    .unwrap_or(b);
                (a, Some(b))
            }
            None => (body, None),
        };
        fn product(part: &str) -> Option<(BigInt, BigInt)> {
            match part.split_once('√') {
                Some((c, r)) => {
                    let c = if c.is_empty() {
                        BigInt::one()
                    } else {
                        c.parse().ok()?
                    };
                    Some((c, r.parse().ok()?))
                }
                None => Some((part.parse().ok()?, BigInt::one())),
            }
        }
        let (a, b) = product(num).ok_or_else(bad)?;
        let (c, d) = match den {
            Some(den) => product(den).ok_or_else(bad)?,
            None => (BigInt::one(), BigInt::one()),
        };
        if c.is_zero() || d.is_zero() || b.sign() == Sign::Minus || d.sign() == Sign::Minus {
            return Err(bad());
        }
        // (a√b)/(c√d) = a/(c·d) · √(b·d)
        let root = QNum::sqrt_rational(&BigRational::from_integer(&b * &d))?;
        let v = root.scale(&BigRational::new(a, c * d));
        Ok(if neg { -v } else { v })
    }
}

impl Zero for QNum {
    fn zero() -> Self {
        QNum { terms: Vec::new() }
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for QNum {
    fn one() -> Self {
        QNum::from_int(1)
    }
}

impl From<BigRational> for QNum {
    fn from(q: BigRational) -> Self {
        QNum::from_rational(q)
    }
}

impl From<i64> for QNum {
    fn from(v: i64) -> Self {
        QNum::from_int(v)
    }
}

impl<'a> Add<&'a QNum> for &'a QNum {
    type Output = QNum;
    fn add(self, rhs: &QNum) -> QNum {
        let mut out = Vec::with_capacity(self.terms.len() + rhs.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < rhs.terms.len() {
            let ord = match (self.terms.get(i), rhs.terms.get(j)) {
                (Some(a), Some(b)) => a.0.cmp(&b.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(rhs.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &self.terms[i].1 + &rhs.terms[j].1;
                    if !c.is_zero() {
                        out.push((self.terms[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        QNum { terms: out }
    }
}

impl<'a> Mul<&'a QNum> for &'a QNum {
    type Output = QNum;
    fn mul(self, rhs: &QNum) -> QNum {
        if self.is_zero() || rhs.is_zero() {
            return QNum::zero();
        }
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                // √d1·√d2 = g·√(d1·d2/g²), g = gcd(d1, d2)
                let g = radicand(ma & mb);
                let c = ca * cb;
                let c = if g == 1 {
                    c
                } else {
                    c * BigRational::from_integer(g.into())
                };
                terms.push((ma ^ mb, c));
            }
        }
        QNum::from_unsorted(terms)
    }
}

impl Neg for QNum {
    type Output = QNum;
    fn neg(mut self) -> QNum {
        for (_, c) in &mut self.terms {
            *c = -std::mem::take(c);
        }
        self
    }
}

impl Neg for &QNum {
    type Output = QNum;
    fn neg(self) -> QNum {
        -self.clone()
    }
}

impl<'a> Sub<&'a QNum> for &'a QNum {
    type Output = QNum;
    fn sub(self, rhs: &QNum) -> QNum {
        self + &(-rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<QNum> for QNum {
            type Output = QNum;
            fn $m(self, rhs: QNum) -> QNum {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a QNum> for QNum {
            type Output = QNum;
            fn $m(self, rhs: &QNum) -> QNum {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<QNum> for &'a QNum {
            type Output = QNum;
            fn $m(self, rhs: QNum) -> QNum {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Div<&QNum> for &QNum {
    type Output = QNum;
    /// Panics on division by zero; use [`QNum::inverse`] to handle it.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &QNum) -> QNum {
        self * &rhs.inverse().expect("division by zero")
    }
}

impl AddAssign<&QNum> for QNum {
    fn add_assign(&mut self, rhs: &QNum) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&QNum> for QNum {
    fn sub_assign(&mut self, rhs: &QNum) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&QNum> for QNum {
    fn mul_assign(&mut self, rhs: &QNum) {
        *self = &*self * rhs;
    }
}

impl fmt::Display for QNum {
    /// `1/2+1/3√6`, `-√2`, `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let d = radicand(*m);
            let neg = c.is_negative();
            if neg {
                f.write_str("-")?;
            } else if i > 0 {
                f.write_str("+")?;
            }
            let a = c.abs();
            if d == 1 {
                f.write_str(&rat_string(&a))?;
            } else {
                if !a.is_one() {
                    f.write_str(&rat_string(&a))?;
                }
                write!(f, "√{d}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for QNum {
    type Err = Error;

    /// Inverse of the `Display` form.
    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(Error::Parse("empty number".into()));
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        for (i, ch) in t.char_indices() {
            if i > 0 && (ch == '+' || ch == '-') {
                pieces.push(&t[start..i]);
                start = i;
            }
        }
        pieces.push(&t[start..]);
        let mut acc = QNum::zero();
        for piece in pieces {
            let (neg, body) = match piece.strip_prefix('-') {
                Some(b) => (true, b),
                None => (false, piece.strip_prefix('+').unwrap_or(piece)),
            };
            let (coef, rad) = match body.split_once('√') {
                Some((c, r)) => (c, Some(r)),
                None => (body, None),
            };
            let c = if coef.is_empty() {
                BigRational::one()
            } else {
                parse_rat(coef).ok_or_else(|| Error::Parse(format!("bad coefficient {coef:?}")))?
            };
            let d = match rad {
                Some(r) => r
                    .parse::<u32>()
                    .ok()
                    .filter(|d| mask_of(*d).is_some())
                    .ok_or_else(|| Error::Parse(format!("bad radicand {r:?}")))?,
                None => 1,
            };
            let term = QNum::sqrt_term(c, d);
            acc += &(if neg { -term } else { term });
        }
        Ok(acc)
    }
}

/// Wire form `{ "radicand": [num, den], ... }`. Integers that fit in `i64`
/// are written as JSON numbers, larger ones as decimal strings.
impl Serialize for QNum {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = ser.serialize_map(Some(self.terms.len()))?;
        for (m, c) in &self.terms {
            map.serialize_entry(
                &radicand(*m).to_string(),
                &(IntLike::from(c.numer()), IntLike::from(c.denom())),
            )?;
        }
        map.end()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntLike {
    Small(i64),
    Big(String),
}

impl From<&BigInt> for IntLike {
    fn from(v: &BigInt) -> Self {
        match v.to_i64() {
            Some(x) => IntLike::Small(x),
            None => IntLike::Big(v.to_string()),
        }
    }
}

impl IntLike {
    fn to_big(&self) -> Option<BigInt> {
        match self {
            IntLike::Small(x) => Some(BigInt::from(*x)),
            IntLike::Big(s) => s.parse().ok(),
        }
    }
}

impl<'de> Deserialize<'de> for QNum {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        struct QVisitor;
        impl<'de> Visitor<'de> for QVisitor {
            type Value = QNum;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from radicand to [numerator, denominator]")
            }
            fn visit_map<A: MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<QNum, A::Error> {
                let mut terms = Vec::new();
                while let Some((key, (n, d))) = map.next_entry::<String, (IntLike, IntLike)>()? {
                    let mask = key
                        .parse::<u32>()
                        .ok()
                        .and_then(mask_of)
                        .ok_or_else(|| de::Error::custom(format!("bad radicand {key:?}")))?;
                    let n = n
                        .to_big()
                        .ok_or_else(|| de::Error::custom("bad numerator"))?;
                    let d = d
                        .to_big()
                        .ok_or_else(|| de::Error::custom("bad denominator"))?;
                    if d.is_zero() {
                        return Err(de::Error::custom("zero denominator"));
                    }
                    terms.push((mask, BigRational::new(n, d)));
                }
                Ok(QNum::from_unsorted(terms))
            }
        }
        de.deserialize_map(QVisitor)
    }
}
