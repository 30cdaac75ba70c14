//! The group algebra `ℚS_k` and Young symmetrizers.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::Partition;
use crate::combinat::rat_string;
use crate::error::{Error, Result};
use crate::perm::Permutation;

/// Finite formal combination `Σ a_σ σ`. Products compose permutations
/// right to left, so `(σ)(τ) = σ∘τ`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GroupAlgebraElt {
    coeffs: BTreeMap<Permutation, BigRational>,
}

impl GroupAlgebraElt {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(sigma: Permutation) -> Self {
        Self::from_terms([(sigma, BigRational::one())])
    }

    pub fn from_terms<I: IntoIterator<Item = (Permutation, BigRational)>>(terms: I) -> Self {
        let mut out = Self::zero();
        for (s, c) in terms {
            out.add_term(s, c);
        }
        out
    }

    fn add_term(&mut self, sigma: Permutation, c: BigRational) {
        let slot = self.coeffs.entry(sigma).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.retain(|_, v| !v.is_zero());
        }
    }

    pub fn coefficient(&self, sigma: &Permutation) -> BigRational {
        self.coeffs
            .get(sigma)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = (&Permutation, &BigRational)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(s, v)| (s.clone(), v * c)))
    }
}

impl Add for &GroupAlgebraElt {
    type Output = GroupAlgebraElt;
    fn add(self, rhs: &GroupAlgebraElt) -> GroupAlgebraElt {
        let mut out = self.clone();
        for (s, c) in &rhs.coeffs {
            out.add_term(s.clone(), c.clone());
        }
        out
    }
}

impl Mul for &GroupAlgebraElt {
    type Output = GroupAlgebraElt;
    fn mul(self, rhs: &GroupAlgebraElt) -> GroupAlgebraElt {
        let mut acc: BTreeMap<Permutation, BigRational> = BTreeMap::new();
        for (s, a) in &self.coeffs {
            for (t, b) in &rhs.coeffs {
                *acc.entry(s.compose(t)).or_insert_with(BigRational::zero) += a * b;
            }
        }
        acc.retain(|_, v| !v.is_zero());
        GroupAlgebraElt { coeffs: acc }
    }
}

impl fmt::Display for GroupAlgebraElt {
    /// `123 - 132 + 213 - 231` style.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        for (n, (s, c)) in self.coeffs.iter().enumerate() {
            let name: String = s.images().iter().map(ToString::to_string).collect();
            let neg = c < &BigRational::zero();
            match (n, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let a = if neg { -c.clone() } else { c.clone() };
            if !a.is_one() {
                write!(f, "{}·", rat_string(&a))?;
            }
            f.write_str(&name)?;
        }
        Ok(())
    }
}

/// A filling of a Young diagram with `1..=k`, each once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    rows: Vec<Vec<u32>>,
}

impl Tableau {
    pub fn new(rows: Vec<Vec<u32>>) -> Result<Self> {
        let shape: Vec<usize> = rows.iter().map(Vec::len).collect();
        Partition::new(shape.clone())
            .map_err(|_| Error::InvalidTableau(format!("row lengths {shape:?}")))?;
        let k = shape.iter().sum::<usize>() as u32;
        let mut seen = vec![false; k as usize + 1];
        for &x in rows.iter().flatten() {
            if x == 0 || x > k || std::mem::replace(&mut seen[x as usize], true) {
                return Err(Error::InvalidTableau(format!(
                    "entries must be 1..={k}, each once"
                )));
            }
        }
        Ok(Tableau { rows })
    }

    pub fn shape(&self) -> Partition {
        Partition::new(self.rows.iter().map(Vec::len).collect()).expect("checked")
    }

    pub fn size(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn columns(&self) -> Vec<Vec<u32>> {
        (0..self.rows[0].len())
            .map(|j| self.rows.iter().filter_map(|r| r.get(j).copied()).collect())
            .collect()
    }

    /// Permutations mapping every row into itself.
    pub fn row_group(&self) -> Vec<Permutation> {
        stabilizer(self.size(), &self.rows)
    }

    /// Permutations mapping every column into itself.
    pub fn column_group(&self) -> Vec<Permutation> {
        stabilizer(self.size(), &self.columns())
    }
}

fn stabilizer(k: usize, sets: &[Vec<u32>]) -> Vec<Permutation> {
    let mut block = vec![0usize; k + 1];
    for (b, set) in sets.iter().enumerate() {
        for &x in set {
            block[x as usize] = b;
        }
    }
    Permutation::all(k)
        .filter(|s| (1..=k).all(|i| block[s.apply(i)] == block[i]))
        .collect()
}

/// `c_T = a_T·b_T` with `a_T` the row-group sum and `b_T` the signed
/// column-group sum.
pub fn young_symmetrizer(t: &Tableau) -> GroupAlgebraElt {
    let a = GroupAlgebraElt::from_terms(t.row_group().into_iter().map(|s| (s, BigRational::one())));
    let b = GroupAlgebraElt::from_terms(t.column_group().into_iter().map(|s| {
        let sign = BigRational::from_integer(s.sign().into());
        (s, sign)
    }));
    &a * &b
}
