//! Dense exact rational matrices: just enough for rank and semidefiniteness.

use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::combinat::{rat_string, rat_to_f64};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> BigRational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        RatMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Rank by Gaussian elimination over ℚ.
    pub fn rank(&self) -> usize {
        let mut m = self.data.clone();
        let (rows, cols) = (self.rows, self.cols);
        let mut rank = 0;
        for col in 0..cols {
            let Some(p) = (rank..rows).find(|&r| !m[r * cols + col].is_zero()) else {
                continue;
            };
            for j in 0..cols {
                m.swap(p * cols + j, rank * cols + j);
            }
            let pivot = m[rank * cols + col].clone();
            for r in rank + 1..rows {
                let f = &m[r * cols + col] / &pivot;
                if f.is_zero() {
                    continue;
                }
                for j in col..cols {
                    let delta = &f * &m[rank * cols + j];
                    m[r * cols + j] -= delta;
                }
            }
            rank += 1;
        }
        rank
    }

    /// Exact positive-semidefiniteness test for a symmetric matrix, by
    /// symmetric elimination on positive diagonal pivots.
    pub fn is_psd(&self) -> bool {
        if !self.is_symmetric() {
            return false;
        }
        let n = self.rows;
        let mut m = self.data.clone();
        let mut alive: Vec<usize> = (0..n).collect();
        while let Some(pos) = alive.iter().position(|&i| !m[i * n + i].is_zero()) {
            let p = alive.swap_remove(pos);
            let pivot = m[p * n + p].clone();
            if pivot.is_negative() {
                return false;
            }
            for &i in &alive {
                let f = &m[i * n + p] / &pivot;
                if f.is_zero() {
                    continue;
                }
                for &j in &alive {
                    let delta = &f * &m[p * n + j];
                    m[i * n + j] -= delta;
                }
            }
        }
        // With a zero diagonal left, PSD forces the remaining block to vanish.
        alive
            .iter()
            .all(|&i| alive.iter().all(|&j| m[i * n + j].is_zero()))
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(rat_to_f64).collect())
            .collect()
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(rat_string).collect())
            .collect()
    }
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.to_strings() {
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Serialize for RatMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: Vec<Vec<String>> = Vec::deserialize(d)?;
        let rows = raw.len();
        let cols = raw.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for row in &raw {
            if row.len() != cols {
                return Err(serde::de::Error::custom("ragged matrix"));
            }
            for s in row {
                data.push(
                    crate::combinat::parse_rat(s)
                        .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))?,
                );
            }
        }
        Ok(RatMatrix { rows, cols, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::rat;

    fn m(rows: &[&[i64]]) -> RatMatrix {
        RatMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rat(rows[i][j], 1))
    }

    #[test]
    fn ranks() {
        assert_eq!(m(&[&[1, 2], &[2, 4]]).rank(), 1);
        assert_eq!(m(&[&[0, 1], &[1, 0]]).rank(), 2);
        assert_eq!(m(&[&[0, 0], &[0, 0]]).rank(), 0);
        assert_eq!(m(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]).rank(), 2);
    }

    #[test]
    fn semidefinite() {
        assert!(m(&[&[1, -1], &[-1, 1]]).is_psd());
        assert!(m(&[&[2, 1], &[1, 2]]).is_psd());
        assert!(!m(&[&[1, 2], &[2, 1]]).is_psd());
        assert!(!m(&[&[0, 1], &[1, 0]]).is_psd());
        assert!(!m(&[&[-1]]).is_psd());
        assert!(m(&[&[0, 0], &[0, 3]]).is_psd());
    }
}
