//! Univariate polynomials in `n` with rational or quadratic-field
//! coefficients.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::combinat::{parse_rat, rat_string};
use crate::qfield::QNum;

/// Coefficients by degree, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

pub type RatPoly = Poly<BigRational>;
pub type QPoly = Poly<QNum>;

impl<T: Clone + Zero> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, d: usize) -> T {
        self.coeffs.get(d).cloned().unwrap_or_else(T::zero)
    }

    /// Multiplies by `n^shift`.
    pub fn shift(&self, shift: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = vec![T::zero(); shift];
        c.extend(self.coeffs.iter().cloned());
        Poly { coeffs: c }
    }
}

impl RatPoly {
    pub fn eval(&self, n: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * n + c;
        }
        acc
    }

    pub fn eval_int(&self, n: usize) -> BigRational {
        self.eval(&BigRational::from_integer(n.into()))
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        RatPoly::new((0..len).map(|d| self.coeff(d) + other.coeff(d)).collect())
    }

    pub fn scale(&self, c: &BigRational) -> RatPoly {
        RatPoly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Lagrange interpolant through `(x_i, y_i)` with distinct nodes.
    pub fn interpolate(xs: &[BigRational], ys: &[BigRational]) -> RatPoly {
        assert_eq!(xs.len(), ys.len());
        let m = xs.len();
        let mut out = vec![BigRational::zero(); m];
        for i in 0..m {
            if ys[i].is_zero() {
                continue;
            }
            // Basis numerator Π_{j≠i}(n − x_j), built by repeated multiplication.
            let mut basis = vec![BigRational::one()];
            let mut denom = BigRational::one();
            for j in 0..m {
                if j == i {
                    continue;
                }
                let mut next = vec![BigRational::zero(); basis.len() + 1];
                for (d, b) in basis.iter().enumerate() {
                    next[d + 1] += b;
                    next[d] -= b * &xs[j];
                }
                basis = next;
                denom *= &xs[i] - &xs[j];
            }
            let w = &ys[i] / denom;
            for (o, b) in out.iter_mut().zip(&basis) {
                *o += b * &w;
            }
        }
        RatPoly::new(out)
    }

    pub fn to_qpoly(&self) -> QPoly {
        QPoly::new(
            self.coeffs
                .iter()
                .cloned()
                .map(QNum::from_rational)
                .collect(),
        )
    }
}

impl QPoly {
    pub fn add_scaled(&mut self, p: &RatPoly, c: &QNum) {
        if c.is_zero() {
            return;
        }
        if self.coeffs.len() < p.coeffs.len() {
            self.coeffs.resize(p.coeffs.len(), QNum::zero());
        }
        for (o, x) in self.coeffs.iter_mut().zip(&p.coeffs) {
            if !x.is_zero() {
                *o += &c.scale(x);
            }
        }
        *self = QPoly::new(std::mem::take(&mut self.coeffs));
    }

    pub fn to_f64(&self, n: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * n + c.to_f64())
    }
}

fn write_poly<T>(
    f: &mut fmt::Formatter<'_>,
    coeffs: &[T],
    render: impl Fn(&T) -> String,
) -> fmt::Result {
    if coeffs.is_empty() {
        return f.write_str("0");
    }
    let mut first = true;
    for (d, c) in coeffs.iter().enumerate().rev() {
        let s = render(c);
        if s == "0" {
            continue;
        }
        let multi = s[1..].contains(['+', '-']);
        let (neg, body) = match s.strip_prefix('-') {
            Some(b) if !multi => (true, b.to_string()),
            _ => (false, s.clone()),
        };
        let body = if multi && d > 0 {
            format!("({body})")
        } else {
            body
        };
        if first {
            if neg {
                f.write_str("-")?;
            }
        } else {
            f.write_str(if neg { " - " } else { " + " })?;
        }
        first = false;
        let var = match d {
            0 => String::new(),
            1 => "n".into(),
            _ => format!("n^{d}"),
        };
        if d > 0 && body == "1" {
            f.write_str(&var)?;
        } else {
            write!(f, "{body}{var}")?;
        }
    }
    Ok(())
}

impl fmt::Display for RatPoly {
    /// `1/8n^2 - 5/72n + 5/36`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_poly(f, &self.coeffs, rat_string)
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_poly(f, &self.coeffs, ToString::to_string)
    }
}

/// Wire form: coefficient array of rational strings, constant term first.
impl Serialize for RatPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.coeffs.iter().map(rat_string))
    }
}

impl<'de> Deserialize<'de> for RatPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        let coeffs = raw
            .iter()
            .map(|s| {
                parse_rat(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RatPoly::new(coeffs))
    }
}

/// Wire form: coefficient array of `QNum` strings, constant term first.
impl Serialize for QPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.coeffs.iter().map(ToString::to_string))
    }
}
