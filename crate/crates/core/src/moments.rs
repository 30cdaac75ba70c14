//! Exact second moments of the random profile under the uniform law.
//!
//! The pipeline enumerates `S_n` for `n = k..=2k`, interpolates each entry of
//! `C(n,k)·E[P Pᵀ]` as a polynomial in `n`, conjugates by `U_k`, and reads off
//! the limits of `n^{(r+s)/2}·uᵀE[P Pᵀ]v` by degree arithmetic.

use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinat::{binomial, factorial, rat_int};
use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::perm::{next_permutation, PatternTable, Permutation};
use crate::poly::{QPoly, RatPoly};
use crate::qfield::QNum;
use crate::rep::{build_u, BasisMatrix, ColumnLabel};

/// Environment variable naming the cache directory for enumerated moments.
pub const CACHE_ENV: &str = "PERMPROF_CACHE";

/// Largest host size enumerated without the long-run flag.
pub const DEFAULT_MAX_N: usize = 10;
/// Largest host size enumerated with it.
pub const LONG_MAX_N: usize = 12;

#[derive(Clone, Debug, Default)]
pub struct MomentOptions {
    /// Allows `n` up to [`LONG_MAX_N`].
    pub long: bool,
    pub cache_dir: Option<PathBuf>,
    /// Also enumerate `n = 2k+1` and require the interpolant to match it.
    pub check_extra_node: bool,
}

impl MomentOptions {
    /// Cache directory from [`CACHE_ENV`]; extra-node check on.
    pub fn from_env() -> Self {
        MomentOptions {
            long: false,
            cache_dir: std::env::var_os(CACHE_ENV).map(PathBuf::from),
            check_extra_node: true,
        }
    }

    fn max_n(&self) -> usize {
        if self.long {
            LONG_MAX_N
        } else {
            DEFAULT_MAX_N
        }
    }
}

/// `Σ_π N_σ(π) N_τ(π)` over all of `S_n`, lex-indexed, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountMoments {
    pub k: usize,
    pub n: usize,
    /// `n!`
    pub perms: u64,
    pub sums: Vec<u64>,
}

impl CountMoments {
    fn size(&self) -> usize {
        factorial(self.k) as usize
    }

    /// `E[P Pᵀ]`.
    pub fn expectation(&self) -> RatMatrix {
        let c = binomial(self.n, self.k).expect("small") as u64;
        self.scaled_by(BigInt::from(self.perms) * BigInt::from(c) * BigInt::from(c))
    }

    /// `C(n,k)·E[P Pᵀ]`.
    pub fn scaled_expectation(&self) -> RatMatrix {
        let c = binomial(self.n, self.k).expect("small") as u64;
        self.scaled_by(BigInt::from(self.perms) * BigInt::from(c))
    }

    fn scaled_by(&self, den: BigInt) -> RatMatrix {
        let m = self.size();
        RatMatrix::from_fn(m, m, |i, j| {
            BigRational::new(BigInt::from(self.sums[i * m + j]), den.clone())
        })
    }
}

fn check_pipeline_k(k: usize) -> Result<()> {
    if !(1..=crate::rep::MAX_REP_K).contains(&k) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside 1..={}",
            crate::rep::MAX_REP_K
        )));
    }
    Ok(())
}

/// Enumerates `S_n` and sums outer products of pattern counts.
pub fn count_moments(k: usize, n: usize, opts: &MomentOptions) -> Result<CountMoments> {
    check_pipeline_k(k)?;
    if n < k {
        return Err(Error::InvalidParameter(format!(
            "need n >= k, got n = {n}, k = {k}"
        )));
    }
    if n > opts.max_n() {
        return Err(Error::TooLarge {
            work: factorial(n),
            budget: factorial(opts.max_n()),
        });
    }
    let path = opts
        .cache_dir
        .as_ref()
        .map(|d| d.join(format!("moments-k{k}-n{n}.json")));
    if let Some(p) = &path {
        if let Some(hit) = read_cache(p, k, n) {
            return Ok(hit);
        }
    }
    let result = enumerate(k, n);
    if let Some(p) = &path {
        // A failed cache write only costs a recomputation later.
        let _ = write_cache(p, &result);
    }
    Ok(result)
}

fn read_cache(path: &Path, k: usize, n: usize) -> Option<CountMoments> {
    let text = std::fs::read_to_string(path).ok()?;
    let m: CountMoments = serde_json::from_str(&text).ok()?;
    let size = factorial(k) as usize;
    (m.k == k && m.n == n && m.perms as u128 == factorial(n) && m.sums.len() == size * size)
        .then_some(m)
}

fn write_cache(path: &Path, m: &CountMoments) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_vec(m)?)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

fn enumerate(k: usize, n: usize) -> CountMoments {
    let table = PatternTable::get(k);
    let m = table.size();
    let total = factorial(n) as u64;
    let chunks = (rayon::current_num_threads() as u64 * 16).clamp(1, total);
    let per = total.div_ceil(chunks);
    // Upper triangle in code space; integer sums make the merge order-free.
    let by_code = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * per;
            let end = ((c + 1) * per).min(total);
            let mut acc = vec![0u64; m * m];
            if start >= end {
                return acc;
            }
            let first = Permutation::from_lex_index(n, start as usize).expect("in range");
            let mut values = first.images().to_vec();
            let mut counts = vec![0u64; m];
            let mut nz = Vec::with_capacity(m);
            for _ in start..end {
                table.count_by_code(&values, &mut counts);
                nz.clear();
                nz.extend((0..m).filter(|&i| counts[i] != 0));
                for (a, &i) in nz.iter().enumerate() {
                    let ci = counts[i];
                    let row = &mut acc[i * m..(i + 1) * m];
                    for &j in &nz[a..] {
                        row[j] += ci * counts[j];
                    }
                }
                for &i in &nz {
                    counts[i] = 0;
                }
                next_permutation(&mut values);
            }
            acc
        })
        .reduce(
            || vec![0u64; m * m],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let mut sums = vec![0u64; m * m];
    for i in 0..m {
        for j in i..m {
            let v = by_code[i * m + j];
            let (li, lj) = (table.lex_of_code(i), table.lex_of_code(j));
            sums[li * m + lj] = v;
            sums[lj * m + li] = v;
        }
    }
    CountMoments {
        k,
        n,
        perms: total,
        sums,
    }
}

/// `E[P Pᵀ]` for uniform `π ∈ S_n`, exactly.
pub fn exact_second_moment(k: usize, n: usize) -> Result<RatMatrix> {
    exact_second_moment_with(k, n, &MomentOptions::from_env())
}

pub fn exact_second_moment_with(k: usize, n: usize, opts: &MomentOptions) -> Result<RatMatrix> {
    Ok(count_moments(k, n, opts)?.expectation())
}

/// `C(n,k)·E[P Pᵀ]` as a matrix of polynomials in `n`.
#[derive(Clone, Debug, Serialize)]
pub struct MomentMatrix {
    pub k: usize,
    /// Host sizes used to fit the polynomials.
    pub nodes: Vec<usize>,
    /// Host size checked out of sample, if any.
    pub check_node: Option<usize>,
    entries: Vec<Vec<RatPoly>>,
}

impl MomentMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, a: usize, b: usize) -> &RatPoly {
        &self.entries[a][b]
    }

    pub fn eval(&self, n: usize) -> RatMatrix {
        let m = self.size();
        RatMatrix::from_fn(m, m, |a, b| self.entries[a][b].eval_int(n))
    }

    /// Coefficient matrix of `n^d`.
    pub fn coefficient(&self, d: usize) -> RatMatrix {
        let m = self.size();
        RatMatrix::from_fn(m, m, |a, b| self.entries[a][b].coeff(d))
    }

    pub fn max_degree(&self) -> usize {
        self.entries
            .iter()
            .flatten()
            .filter_map(RatPoly::degree)
            .max()
            .unwrap_or(0)
    }

    /// `uᵀ(C(n,k)·E[P Pᵀ])v` as a polynomial, for rational directions.
    pub fn bilinear(&self, u: &[BigRational], v: &[BigRational]) -> RatPoly {
        let mut acc = RatPoly::zero();
        for (a, ua) in u.iter().enumerate() {
            if ua.is_zero() {
                continue;
            }
            for (b, vb) in v.iter().enumerate() {
                if !vb.is_zero() {
                    acc = acc.add(&self.entries[a][b].scale(&(ua * vb)));
                }
            }
        }
        acc
    }
}

pub fn interpolate_moments(k: usize) -> Result<MomentMatrix> {
    interpolate_moments_with(k, &MomentOptions::from_env())
}

/// Fits every entry through `n = k..=2k`. With `check_extra_node` and a
/// feasible `2k+1`, the fit must also reproduce the enumeration there.
#[allow(clippy::needless_range_loop)]
pub fn interpolate_moments_with(k: usize, opts: &MomentOptions) -> Result<MomentMatrix> {
    check_pipeline_k(k)?;
    let nodes: Vec<usize> = (k..=2 * k).collect();
    let data = nodes
        .iter()
        .map(|&n| count_moments(k, n, opts).map(|c| c.scaled_expectation()))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<BigRational> = nodes.iter().map(|&n| rat_int(n as u64)).collect();
    let m = factorial(k) as usize;
    let mut entries = vec![vec![RatPoly::zero(); m]; m];
    for a in 0..m {
        for b in a..m {
            let ys: Vec<BigRational> = data.iter().map(|d| d.get(a, b).clone()).collect();
            let p = RatPoly::interpolate(&xs, &ys);
            entries[b][a] = p.clone();
            entries[a][b] = p;
        }
    }
    let extra = 2 * k + 1;
    let check_node = (opts.check_extra_node && extra <= opts.max_n()).then_some(extra);
    if let Some(n) = check_node {
        let direct = count_moments(k, n, opts)?.scaled_expectation();
        let mut xs_all = xs.clone();
        xs_all.push(rat_int(n as u64));
        for a in 0..m {
            for b in a..m {
                if entries[a][b].eval_int(n) != *direct.get(a, b) {
                    let mut ys: Vec<BigRational> =
                        data.iter().map(|d| d.get(a, b).clone()).collect();
                    ys.push(direct.get(a, b).clone());
                    let degree = RatPoly::interpolate(&xs_all, &ys).degree().unwrap_or(0);
                    return Err(Error::DegreeViolation { degree, max: k });
                }
            }
        }
    }
    Ok(MomentMatrix {
        k,
        nodes,
        check_node,
        entries,
    })
}

/// `Uᵀ(C(n,k)·E[P Pᵀ])U` with each entry tagged by its block pair `(r, s)`.
///
/// Normalization by `n^{(r+s)/2}` is kept as a tag rather than applied.
#[derive(Clone, Debug)]
pub struct ConjugatedMoments {
    pub k: usize,
    labels: Vec<ColumnLabel>,
    blocks: Vec<usize>,
    entries: Vec<Vec<QPoly>>,
}

impl ConjugatedMoments {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn labels(&self) -> &[ColumnLabel] {
        &self.labels
    }

    pub fn entry(&self, a: usize, b: usize) -> &QPoly {
        &self.entries[a][b]
    }

    pub fn tag(&self, a: usize, b: usize) -> (usize, usize) {
        (self.blocks[a], self.blocks[b])
    }

    /// The entry multiplied by `n^{(r+s)/2}`, when that power is integral.
    pub fn normalized_entry(&self, a: usize, b: usize) -> Option<QPoly> {
        let (r, s) = self.tag(a, b);
        ((r + s) % 2 == 0).then(|| self.entries[a][b].shift((r + s) / 2))
    }

    pub fn limit(&self, a: usize, b: usize) -> Result<QNum> {
        let (r, s) = self.tag(a, b);
        normalized_limit(&self.entries[a][b], r, s, self.k)
    }
}

pub fn conjugate_and_normalize(m: &MomentMatrix, u: &BasisMatrix) -> Result<ConjugatedMoments> {
    if m.k != u.k {
        return Err(Error::InvalidParameter(format!(
            "moment matrix for k = {} but basis for k = {}",
            m.k, u.k
        )));
    }
    let size = m.size();
    // W = M·U, one column of U at a time.
    let w: Vec<Vec<QPoly>> = (0..size)
        .into_par_iter()
        .map(|c| {
            let col = u.column(c);
            (0..size)
                .map(|a| {
                    let mut acc = QPoly::zero();
                    for (b, x) in col.iter().enumerate() {
                        acc.add_scaled(m.entry(a, b), x);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    // Uᵀ·W on and above the diagonal; the result is symmetric.
    let upper: Vec<Vec<QPoly>> = (0..size)
        .into_par_iter()
        .map(|c| {
            let col = u.column(c);
            (c..size)
                .map(|e| {
                    let mut coeffs: Vec<QNum> = Vec::new();
                    for (a, x) in col.iter().enumerate() {
                        if x.is_zero() {
                            continue;
                        }
                        let p = &w[e][a];
                        if coeffs.len() < p.coeffs().len() {
                            coeffs.resize(p.coeffs().len(), QNum::zero());
                        }
                        for (o, y) in coeffs.iter_mut().zip(p.coeffs()) {
                            *o += &(x * y);
                        }
                    }
                    QPoly::new(coeffs)
                })
                .collect()
        })
        .collect();
    let mut entries = vec![vec![QPoly::zero(); size]; size];
    for (c, row) in upper.into_iter().enumerate() {
        for (off, p) in row.into_iter().enumerate() {
            let e = c + off;
            entries[e][c] = p.clone();
            entries[c][e] = p;
        }
    }
    Ok(ConjugatedMoments {
        k: m.k,
        labels: u.labels().to_vec(),
        blocks: (0..size).map(|c| u.block_of_column(c)).collect(),
        entries,
    })
}

/// `lim n^{(r+s)/2}·q(n)/C(n,k)` by comparing `deg q` with `k − (r+s)/2`.
pub fn normalized_limit(q: &QPoly, r: usize, s: usize, k: usize) -> Result<QNum> {
    let Some(degree) = q.degree() else {
        return Ok(QNum::zero());
    };
    let twice_threshold = 2 * k as isize - (r + s) as isize;
    let twice_degree = 2 * degree as isize;
    if twice_degree > twice_threshold {
        return Err(Error::Diverges { r, s, degree });
    }
    if twice_degree < twice_threshold {
        return Ok(QNum::zero());
    }
    let kf = BigRational::from_integer(BigInt::from(factorial(k)));
    Ok(q.coeff(degree).scale(&kf))
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagonalLimit {
    pub label: ColumnLabel,
    pub block: usize,
    pub limit: QNum,
    pub positive: bool,
    pub rational: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OffDiagonalViolation {
    pub row: ColumnLabel,
    pub col: ColumnLabel,
    /// `None` when the normalized entry diverges.
    pub limit: Option<QNum>,
    pub degree: usize,
}

/// Outcome of the exact diagonalization check.
#[derive(Clone, Debug, Serialize)]
pub struct LimitReport {
    pub k: usize,
    pub pass: bool,
    pub diagonal: Vec<DiagonalLimit>,
    /// Off-diagonal entries whose normalized limit is not zero. Empty on
    /// success, which certifies every off-diagonal limit is exactly 0.
    pub offdiag_violations: Vec<OffDiagonalViolation>,
    pub offdiag_checked: usize,
    /// Diagonal entries that diverge.
    pub diverging_diagonal: Vec<ColumnLabel>,
    pub all_rational: bool,
}

impl LimitReport {
    pub fn from_conjugated(c: &ConjugatedMoments) -> Self {
        let size = c.size();
        let mut diagonal = Vec::with_capacity(size);
        let mut diverging_diagonal = Vec::new();
        for a in 0..size {
            match c.limit(a, a) {
                Ok(limit) => diagonal.push(DiagonalLimit {
                    label: c.labels[a].clone(),
                    block: c.blocks[a],
                    positive: limit.signum() > 0,
                    rational: limit.is_rational(),
                    limit,
                }),
                Err(_) => diverging_diagonal.push(c.labels[a].clone()),
            }
        }
        let mut offdiag_violations = Vec::new();
        for a in 0..size {
            for b in a + 1..size {
                let limit = c.limit(a, b).ok();
                if limit.as_ref().is_none_or(|l| !l.is_zero()) {
                    offdiag_violations.push(OffDiagonalViolation {
                        row: c.labels[a].clone(),
                        col: c.labels[b].clone(),
                        limit,
                        degree: c.entry(a, b).degree().unwrap_or(0),
                    });
                }
            }
        }
        let pass = diverging_diagonal.is_empty()
            && offdiag_violations.is_empty()
            && diagonal.iter().all(|d| d.positive);
        let all_rational = diagonal.iter().all(|d| d.rational);
        LimitReport {
            k: c.k,
            pass,
            diagonal,
            offdiag_violations,
            offdiag_checked: size * (size - 1),
            diverging_diagonal,
            all_rational,
        }
    }

    /// Diagonal limits in column order.
    pub fn limits(&self) -> Vec<QNum> {
        self.diagonal.iter().map(|d| d.limit.clone()).collect()
    }
}

pub fn verify_diagonalization(k: usize) -> Result<LimitReport> {
    verify_diagonalization_with(k, &MomentOptions::from_env())
}

pub fn verify_diagonalization_with(k: usize, opts: &MomentOptions) -> Result<LimitReport> {
    let m = interpolate_moments_with(k, opts)?;
    let u = build_u(k)?;
    Ok(LimitReport::from_conjugated(&conjugate_and_normalize(
        &m, &u,
    )?))
}

/// `C_k = lim n·cov[P]`, read from the top two coefficients of the moment
/// polynomials.
pub fn cov_limit(m: &MomentMatrix) -> RatMatrix {
    let k = m.k;
    // 1/C(n,k) = (k!/n^k)(1 + e1/n + O(n⁻²)) with e1 = 0+1+…+(k−1).
    let e1 = BigRational::from_integer(BigInt::from(k * (k - 1) / 2));
    let kf = BigRational::from_integer(BigInt::from(factorial(k)));
    let size = m.size();
    RatMatrix::from_fn(size, size, |a, b| {
        let p = m.entry(a, b);
        (p.coeff(k - 1) + &e1 * p.coeff(k)) * &kf
    })
}

/// Whether `c` has zero row sums, is positive semidefinite, and has rank
/// `(k−1)²`.
pub fn check_cov_limit(c: &RatMatrix, k: usize) -> bool {
    let zero_rows = (0..c.rows()).all(|i| {
        c.row(i)
            .iter()
            .fold(BigRational::zero(), |a, x| a + x)
            .is_zero()
    });
    zero_rows && c.is_psd() && c.rank() == (k - 1) * (k - 1)
}
