//! Orthogonal irreducible representations of `S_k`, the basis `U_k` of
//! normalized matrix elements, and the blocks `V_r` it splits into.
//!
//! Matrices multiply in the order permutations are applied:
//! `R(σ.then(τ)) = R(σ)·R(τ)`.

mod algebra;
mod generators;
mod matrix;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

pub use algebra::{young_symmetrizer, GroupAlgebraElt, Tableau};
pub use generators::{
    load_generators, load_generators_from, parse_generator_json, read_generator_file, rho, tau,
    GeneratorFile, Generators, GENERATOR_FILE_ENV,
};
pub use matrix::QMatrix;

use crate::combinat::{factorial, rat};
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::qfield::QNum;

/// Largest `k` with representation support.
pub const MAX_REP_K: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition(Vec<usize>);

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) || parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(format!(
                "{parts:?} is not a partition"
            )));
        }
        Ok(Partition(parts))
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.iter().sum()
    }

    /// Length of the first row.
    pub fn first(&self) -> usize {
        self.0[0]
    }

    /// The block `r = k − λ₁` whose basis columns this shape contributes.
    pub fn block(&self) -> usize {
        self.size() - self.first()
    }

    /// Number of standard Young tableaux, by the hook length formula.
    pub fn dim(&self) -> usize {
        let k = self.size();
        let mut hooks: u128 = 1;
        for (i, &row) in self.0.iter().enumerate() {
            for j in 0..row {
                let below = self.0[i + 1..].iter().filter(|&&p| p > j).count();
                hooks *= (row - j + below) as u128;
            }
        }
        (factorial(k) / hooks) as usize
    }

    /// Conjugate shape.
    pub fn transpose(&self) -> Partition {
        Partition(
            (0..self.first())
                .map(|j| self.0.iter().filter(|&&p| p > j).count())
                .collect(),
        )
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Partition::new(v)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.0
    }
}

impl fmt::Display for Partition {
    /// Compact `211` form, comma separated if a part exceeds 9.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.0.iter().any(|&p| p > 9) {
            ","
        } else {
            ""
        };
        let s: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&s.join(sep))
    }
}

impl FromStr for Partition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Option<Vec<usize>> = if s.contains(',') {
            s.split(',').map(|p| p.trim().parse().ok()).collect()
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|d| d as usize))
                .collect()
        };
        Partition::new(parts.ok_or_else(|| Error::Parse(format!("bad partition {s:?}")))?)
    }
}

/// All partitions of `k` in reverse-lexicographic order: `(k)` first,
/// `(1^k)` last.
pub fn partitions(k: usize) -> Vec<Partition> {
    fn go(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition(cur.clone()));
            return;
        }
        for p in (1..=rest.min(max)).rev() {
            cur.push(p);
            go(rest - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        go(k, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Every matrix `R^λ(σ)`, indexed by the lexicographic rank of `σ`.
#[derive(Clone, Debug)]
pub struct RepTable {
    pub k: usize,
    pub lambda: Partition,
    matrices: Vec<QMatrix>,
}

impl RepTable {
    pub fn dim(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn get(&self, sigma: &Permutation) -> &QMatrix {
        &self.matrices[sigma.lex_index()]
    }

    pub fn by_index(&self, index: usize) -> &QMatrix {
        &self.matrices[index]
    }

    pub fn matrices(&self) -> &[QMatrix] {
        &self.matrices
    }

    /// The function `σ ↦ R_ij(σ)` as a vector over `S_k` in lex order.
    pub fn matrix_element(&self, i: usize, j: usize) -> Vec<QNum> {
        self.matrices.iter().map(|m| m.get(i, j).clone()).collect()
    }
}

/// Expands generators to all of `S_k` along a breadth-first Cayley tree and
/// checks the result exactly.
///
/// Every Cayley edge `R(σ.then(g)) = R(σ)R(g)` is checked, which proves the
/// map is a homomorphism. Each matrix is also checked for orthogonality.
pub fn expand_rep(gens: &Generators) -> Result<RepTable> {
    let k = gens.k;
    let d = gens.lambda.dim();
    for (name, m) in [("tau", &gens.tau), ("rho", &gens.rho)] {
        if m.rows() != d || m.cols() != d {
            return Err(Error::HomomorphismViolation(format!(
                "{name} for {} is {}x{}, expected {d}x{d}",
                gens.lambda,
                m.rows(),
                m.cols()
            )));
        }
    }
    let total = factorial(k) as usize;
    let moves = [(tau(k), &gens.tau), (rho(k), &gens.rho)];
    let mut table: Vec<Option<QMatrix>> = vec![None; total];
    let mut queue = VecDeque::new();
    let id = Permutation::identity(k);
    table[id.lex_index()] = Some(QMatrix::identity(d));
    queue.push_back(id);
    while let Some(sigma) = queue.pop_front() {
        let current = table[sigma.lex_index()].clone().expect("visited");
        for (g, rg) in &moves {
            let next = sigma.then(g);
            let slot = &mut table[next.lex_index()];
            if slot.is_none() {
                *slot = Some(&current * rg);
                queue.push_back(next);
            }
        }
    }
    let matrices: Vec<QMatrix> = table
        .into_iter()
        .map(|m| m.expect("τ and ρ generate S_k"))
        .collect();
    let rep = RepTable {
        k,
        lambda: gens.lambda.clone(),
        matrices,
    };
    for sigma in Permutation::all(k) {
        let rs = rep.get(&sigma);
        if !rs.is_orthogonal() {
            return Err(Error::HomomorphismViolation(format!(
                "R^{}({sigma}) is not orthogonal",
                rep.lambda
            )));
        }
        for (g, rg) in &moves {
            if rep.get(&sigma.then(g)) != &(rs * rg) {
                return Err(Error::HomomorphismViolation(format!(
                    "R^{}: relation fails at {sigma} times {g}",
                    rep.lambda
                )));
            }
        }
    }
    Ok(rep)
}

/// Loads and expands every irreducible representation of `S_k`.
pub fn rep_tables(k: usize) -> Result<Vec<RepTable>> {
    rep_tables_from(k, &[])
}

pub fn rep_tables_from(k: usize, extra: &[GeneratorFile]) -> Result<Vec<RepTable>> {
    check_k(k)?;
    partitions(k)
        .iter()
        .map(|lambda| {
            let gens = if extra.is_empty() {
                load_generators(k, lambda)?
            } else {
                load_generators_from(k, lambda, extra)?
            };
            expand_rep(&gens)
        })
        .collect()
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_REP_K {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside 1..={MAX_REP_K}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnLabel {
    pub lambda: Partition,
    pub i: usize,
    pub j: usize,
}

impl fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}_{}{}", self.lambda, self.i + 1, self.j + 1)
    }
}

/// The orthogonal matrix `U_k` of normalized matrix elements.
///
/// Column `(λ, i, j)` holds `√(d_λ/k!)·R^λ_ij(σ)` in row `lex(σ)`. Shapes
/// appear in [`partitions`] order, entries row-major within a shape.
#[derive(Clone, Debug)]
pub struct BasisMatrix {
    pub k: usize,
    labels: Vec<ColumnLabel>,
    columns: Vec<Vec<QNum>>,
    blocks: Vec<Vec<usize>>,
}

pub fn build_u(k: usize) -> Result<BasisMatrix> {
    build_u_from_tables(k, &rep_tables(k)?)
}

pub fn build_u_from_tables(k: usize, tables: &[RepTable]) -> Result<BasisMatrix> {
    check_k(k)?;
    let kf = factorial(k) as i64;
    let mut labels = Vec::new();
    let mut columns = Vec::new();
    let mut blocks = vec![Vec::new(); k];
    for table in tables {
        let d = table.dim();
        let scale = QNum::sqrt_rational(&rat(d as i64, kf))?;
        for i in 0..d {
            for j in 0..d {
                blocks[table.lambda.block()].push(columns.len());
                labels.push(ColumnLabel {
                    lambda: table.lambda.clone(),
                    i,
                    j,
                });
                columns.push(
                    table
                        .matrix_element(i, j)
                        .iter()
                        .map(|x| x * &scale)
                        .collect(),
                );
            }
        }
    }
    if columns.len() != kf as usize {
        return Err(Error::InvalidParameter(format!(
            "representations of S_{k} give {} columns, expected {kf}",
            columns.len()
        )));
    }
    Ok(BasisMatrix {
        k,
        labels,
        columns,
        blocks,
    })
}

fn dot(a: &[QNum], b: &[QNum]) -> QNum {
    let mut acc = QNum::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += &(x * y);
        }
    }
    acc
}

impl BasisMatrix {
    pub fn size(&self) -> usize {
        self.columns.len()
    }

    pub fn labels(&self) -> &[ColumnLabel] {
        &self.labels
    }

    pub fn column(&self, c: usize) -> &[QNum] {
        &self.columns[c]
    }

    pub fn columns(&self) -> &[Vec<QNum>] {
        &self.columns
    }

    /// Entry in row `row` (a pattern) and column `col`.
    pub fn entry(&self, row: usize, col: usize) -> &QNum {
        &self.columns[col][row]
    }

    /// Column indices spanning `V_r`.
    pub fn block(&self, r: usize) -> &[usize] {
        &self.blocks[r]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of_column(&self, c: usize) -> usize {
        self.labels[c].lambda.block()
    }

    /// `dim V_r` for every `r`.
    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// `UᵀU = I`, exactly.
    pub fn is_orthogonal(&self) -> bool {
        let n = self.size();
        (0..n).all(|a| {
            (a..n).all(|b| {
                let v = dot(&self.columns[a], &self.columns[b]);
                if a == b {
                    v == QNum::from_int(1)
                } else {
                    v.is_zero()
                }
            })
        })
    }

    /// Coordinates `Uᵀv`.
    pub fn coordinates(&self, v: &[QNum]) -> Vec<QNum> {
        self.columns.iter().map(|c| dot(c, v)).collect()
    }

    /// `Π_r v`.
    pub fn project(&self, v: &[QNum], r: usize) -> Result<Vec<QNum>> {
        if r >= self.k {
            return Err(Error::InvalidParameter(format!(
                "block {r} outside 0..{}",
                self.k
            )));
        }
        let mut out = vec![QNum::zero(); self.size()];
        for &c in &self.blocks[r] {
            let coef = dot(&self.columns[c], v);
            if coef.is_zero() {
                continue;
            }
            for (o, x) in out.iter_mut().zip(&self.columns[c]) {
                *o += &(x * &coef);
            }
        }
        Ok(out)
    }

    pub fn project_rational(&self, v: &[BigRational], r: usize) -> Result<Vec<QNum>> {
        let v: Vec<QNum> = v.iter().cloned().map(QNum::from_rational).collect();
        self.project(&v, r)
    }

    /// Row-major float copy, rows indexed by pattern.
    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        (0..n)
            .map(|row| (0..n).map(|c| self.columns[c][row].to_f64()).collect())
            .collect()
    }

    /// Rows of exact strings, with a header of column labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pattern");
        for l in &self.labels {
            out.push(',');
            out.push_str(&l.to_string());
        }
        out.push('\n');
        for row in 0..self.size() {
            let sigma = Permutation::from_lex_index(self.k, row).expect("in range");
            let name: String = sigma.images().iter().map(ToString::to_string).collect();
            out.push_str(&name);
            for c in 0..self.size() {
                out.push(',');
                out.push_str(&self.columns[c][row].to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "columns": self.labels.iter().zip(&self.columns).map(|(l, c)| {
                serde_json::json!({
                    "lambda": l.lambda,
                    "i": l.i + 1,
                    "j": l.j + 1,
                    "block": l.lambda.block(),
                    "values": c.iter().map(ToString::to_string).collect::<Vec<_>>(),
                })
            }).collect::<Vec<_>>(),
        })
    }
}

/// `Σ R(σ)` over the two-sided coset `α∘S_l∘β`, where `S_l` permutes the
/// last `l` points and fixes the first `k − l`.
pub fn coset_sum(
    rep: &RepTable,
    l: usize,
    alpha: &Permutation,
    beta: &Permutation,
) -> Result<QMatrix> {
    let k = rep.k;
    if l == 0 || l > k || alpha.len() != k || beta.len() != k {
        return Err(Error::InvalidParameter(format!(
            "coset needs 1 <= l <= {k} and α, β in S_{k}"
        )));
    }
    let fixed = k - l;
    let mut acc = QMatrix::zeros(rep.dim(), rep.dim());
    for inner in Permutation::all(l) {
        let mut v: Vec<u32> = (1..=fixed as u32).collect();
        v.extend(inner.images().iter().map(|&x| x + fixed as u32));
        let t = Permutation::from_one_line(&v)?;
        acc.add_assign(rep.get(&alpha.compose(&t).compose(beta)));
    }
    Ok(acc)
}
