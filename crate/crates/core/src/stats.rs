//! Rank statistics for paired samples, written as projections of the
//! pattern profile onto fixed matrix elements.

use std::fmt;
use std::io::Read;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinat::{rat, rat_to_f64};
use crate::error::{Error, Result};
use crate::perm::{profile, profile_cost, sample_uniform, Permutation, Profile};
use crate::qfield::QNum;
use crate::rep::{rep_tables, Partition, RepTable};

/// Total work allowed for one simulated p-value, in profile work units.
pub const DEFAULT_NULL_BUDGET: u128 = 20_000_000_000;

fn tables(k: usize) -> Result<&'static [RepTable]> {
    static CACHE: [OnceLock<Vec<RepTable>>; 6] = [const { OnceLock::new() }; 6];
    if !(1..=5).contains(&k) {
        return Err(Error::InvalidParameter(format!(
            "no cached tables for k = {k}"
        )));
    }
    let cell = &CACHE[k];
    if cell.get().is_none() {
        let _ = cell.set(rep_tables(k)?);
    }
    Ok(cell.get().expect("just set"))
}

/// The unnormalized matrix element `σ ↦ R^λ_ij(σ)` over `S_k` in lex order,
/// with 1-based `i`, `j`.
pub fn matrix_element(lambda: &Partition, i: usize, j: usize) -> Result<Vec<QNum>> {
    let k = lambda.size();
    let table = tables(k)?
        .iter()
        .find(|t| &t.lambda == lambda)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown shape {lambda}")))?;
    let d = table.dim();
    if i == 0 || j == 0 || i > d || j > d {
        return Err(Error::InvalidParameter(format!(
            "matrix element ({i},{j}) outside 1..={d} for {lambda}"
        )));
    }
    Ok(table.matrix_element(i - 1, j - 1))
}

fn element(lambda: &str, i: usize, j: usize) -> Result<Vec<QNum>> {
    matrix_element(&lambda.parse()?, i, j)
}

fn rational_vector(v: &[QNum]) -> Result<Vec<BigRational>> {
    v.iter()
        .map(|x| {
            x.to_rational()
                .ok_or_else(|| Error::NotRepresentable(format!("{x} is irrational")))
        })
        .collect()
}

fn check_n(pi: &Permutation, min: usize) -> Result<()> {
    if pi.len() < min {
        return Err(Error::InvalidParameter(format!(
            "statistic needs n >= {min}, got n = {}",
            pi.len()
        )));
    }
    Ok(())
}

/// `⟨v, P_k(π)⟩`, exactly.
pub fn project(prof: &Profile, v: &[QNum]) -> QNum {
    let mut acc = QNum::zero();
    for (x, &c) in v.iter().zip(&prof.counts) {
        if c != 0 && !x.is_zero() {
            acc += &x.scale(&BigRational::from_integer(BigInt::from(c)));
        }
    }
    acc.scale(&BigRational::new(BigInt::one(), BigInt::from(prof.total())))
}

fn project_rational(prof: &Profile, v: &[BigRational]) -> BigRational {
    let s = v
        .iter()
        .zip(&prof.counts)
        .fold(BigRational::zero(), |acc, (x, &c)| {
            acc + x * BigInt::from(c)
        });
    s / BigInt::from(prof.total())
}

/// Kendall's τ = `P₁₂ − P₂₁`.
pub fn kendall_tau(pi: &Permutation) -> Result<BigRational> {
    check_n(pi, 2)?;
    let p = profile(pi, 2)?;
    Ok(project_rational(&p, &[rat(1, 1), rat(-1, 1)]))
}

/// Coefficients of Spearman's ρ on the 3-profile at host size `n`.
pub fn spearman_vector(n: usize) -> Result<Vec<BigRational>> {
    let r21 = rational_vector(&element("21", 2, 2)?)?;
    let sign = rational_vector(&element("111", 1, 1)?)?;
    let n = n as i64;
    let a = rat(4 * n, 3 * n + 3);
    let b = rat(n - 3, 3 * n + 3);
    Ok(r21
        .iter()
        .zip(&sign)
        .map(|(x, s)| &a * x - &b * s)
        .collect())
}

pub fn spearman_rho(pi: &Permutation) -> Result<BigRational> {
    check_n(pi, 3)?;
    Ok(project_rational(
        &profile(pi, 3)?,
        &spearman_vector(pi.len())?,
    ))
}

/// Fisher–Lee Δ: signed sum of 3-pattern densities.
pub fn fisher_lee_delta(pi: &Permutation) -> Result<BigRational> {
    check_n(pi, 3)?;
    let sign = rational_vector(&element("111", 1, 1)?)?;
    Ok(project_rational(&profile(pi, 3)?, &sign))
}

/// `α·R^{32}_{4,4} + (1−α)·R^{221}_{3,3}` on `S_5`.
pub fn alpha_vector(alpha: &BigRational) -> Result<Vec<QNum>> {
    let a = element("32", 4, 4)?;
    let b = element("221", 3, 3)?;
    let beta = BigRational::one() - alpha;
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| x.scale(alpha) + y.scale(&beta))
        .collect())
}

pub fn alpha_statistic(pi: &Permutation, alpha: &BigRational) -> Result<QNum> {
    check_n(pi, 5)?;
    Ok(project(&profile(pi, 5)?, &alpha_vector(alpha)?))
}

/// Hoeffding's D.
pub fn hoeffding_d(pi: &Permutation) -> Result<QNum> {
    Ok(alpha_statistic(pi, &rat(1, 2))?.scale(&rat(1, 30)))
}

/// Blum–Kiefer–Rosenblatt B.
pub fn bkr_b(pi: &Permutation) -> Result<QNum> {
    alpha_statistic(pi, &rat(5, 2))
}

/// Bergsma–Dassios `⟨R^{22}_{2,2}, P₄⟩`.
pub fn bergsma_dassios(pi: &Permutation) -> Result<QNum> {
    check_n(pi, 4)?;
    Ok(project(&profile(pi, 4)?, &element("22", 2, 2)?))
}

/// The eight 4-patterns whose density sum carries the Bergsma–Dassios test.
pub const BD_PATTERNS: [&str; 8] = [
    "1234", "1243", "2134", "2143", "3412", "3421", "4312", "4321",
];

/// `P₁₂₃₄ + P₁₂₄₃ + P₂₁₃₄ + P₂₁₄₃ + P₃₄₁₂ + P₃₄₂₁ + P₄₃₁₂ + P₄₃₂₁`.
pub fn bergsma_dassios_8(pi: &Permutation) -> Result<BigRational> {
    check_n(pi, 4)?;
    let p = profile(pi, 4)?;
    let hits: u64 = BD_PATTERNS
        .iter()
        .map(|s| {
            let images: Vec<u32> = s.bytes().map(|b| u32::from(b - b'0')).collect();
            p.counts[Permutation::from_one_line(&images)
                .expect("valid")
                .lex_index()]
        })
        .sum();
    Ok(BigRational::new(hits.into(), p.total().into()))
}

/// `⟨R^{22}_{2,2}, P₄(π)⟩`; tends to 0 exactly along quasirandom sequences.
pub fn quasirandom_score(pi: &Permutation) -> Result<QNum> {
    bergsma_dassios(pi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Tau,
    Rho,
    Delta,
    D,
    B,
    Bd,
}

impl Statistic {
    pub const ALL: [Statistic; 6] = [
        Statistic::Tau,
        Statistic::Rho,
        Statistic::Delta,
        Statistic::D,
        Statistic::B,
        Statistic::Bd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Tau => "tau",
            Statistic::Rho => "rho",
            Statistic::Delta => "delta",
            Statistic::D => "d",
            Statistic::B => "b",
            Statistic::Bd => "bd",
        }
    }

    /// Pattern length the statistic reads.
    pub fn k(self) -> usize {
        match self {
            Statistic::Tau => 2,
            Statistic::Rho | Statistic::Delta => 3,
            Statistic::Bd => 4,
            Statistic::D | Statistic::B => 5,
        }
    }

    pub fn evaluate(self, pi: &Permutation) -> Result<QNum> {
        Ok(match self {
            Statistic::Tau => kendall_tau(pi)?.into(),
            Statistic::Rho => spearman_rho(pi)?.into(),
            Statistic::Delta => fisher_lee_delta(pi)?.into(),
            Statistic::D => hoeffding_d(pi)?,
            Statistic::B => bkr_b(pi)?,
            Statistic::Bd => bergsma_dassios(pi)?,
        })
    }

    /// Coefficient vector on the `k`-profile at host size `n`, in floats.
    pub fn vector_f64(self, n: usize) -> Result<Vec<f64>> {
        let exact: Vec<QNum> = match self {
            Statistic::Tau => vec![QNum::from_int(1), QNum::from_int(-1)],
            Statistic::Rho => spearman_vector(n)?.into_iter().map(QNum::from).collect(),
            Statistic::Delta => element("111", 1, 1)?,
            Statistic::D => alpha_vector(&rat(1, 2))?
                .iter()
                .map(|x| x.scale(&rat(1, 30)))
                .collect(),
            Statistic::B => alpha_vector(&rat(5, 2))?,
            Statistic::Bd => element("22", 2, 2)?,
        };
        Ok(exact.iter().map(QNum::to_f64).collect())
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Statistic::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown statistic {s:?}; expected one of tau, rho, delta, d, b, bd"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub p_value: f64,
    pub samples: usize,
    pub seed: u64,
    /// Simulated statistics at least as extreme as the observed one.
    pub exceed: usize,
}

/// Two-sided Monte Carlo p-value under the uniform null:
/// `(1 + #{|T_sim| ≥ |T_obs|}) / (samples + 1)`.
pub fn null_pvalue(
    stat: Statistic,
    observed: f64,
    n: usize,
    samples: usize,
    seed: u64,
    budget: u128,
) -> Result<PValue> {
    if samples < 100 {
        return Err(Error::InvalidParameter(
            "need at least 100 null samples".into(),
        ));
    }
    if n < stat.k() {
        return Err(Error::InvalidParameter(format!(
            "{stat} needs n >= {}, got {n}",
            stat.k()
        )));
    }
    let work = profile_cost(n, stat.k()).saturating_mul(samples as u128);
    if work > budget {
        return Err(Error::TooLarge { work, budget });
    }
    let v = stat.vector_f64(n)?;
    // Relative slack so that exact ties survive float rounding.
    let threshold = observed.abs() * (1.0 - 1e-9) - 1e-12;
    let hits = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let pi = sample_uniform(n, &mut rng)?;
            let x = profile(&pi, stat.k())?.project_f64(&v);
            Ok(usize::from(x.abs() >= threshold))
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(PValue {
        p_value: (1 + hits) as f64 / (samples + 1) as f64,
        samples,
        seed,
        exceed: hits,
    })
}

/// Paired observations `(y_i, z_i)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub rows: Vec<(f64, f64)>,
}

impl PairedSample {
    pub fn new(rows: Vec<(f64, f64)>) -> Self {
        PairedSample { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Two numeric columns; a non-numeric first row is taken as a header.
    /// Blank lines, missing fields and non-finite values are errors.
    pub fn from_csv<R: Read>(mut input: R, delimiter: u8) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let body = text.trim_end_matches(['\n', '\r']);
        if let Some(line) = body.lines().position(|l| l.trim().is_empty()) {
            return Err(Error::Parse(format!("blank line {}", line + 1)));
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .delimiter(delimiter)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            if record.len() != 2 {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected 2",
                    i + 1,
                    record.len()
                )));
            }
            let parsed: Option<Vec<f64>> = record.iter().map(|f| f.parse().ok()).collect();
            match parsed {
                None if i == 0 => continue,
                None => {
                    return Err(Error::Parse(format!("row {} is not numeric", i + 1)));
                }
                Some(v) => {
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Parse(format!(
                            "row {} has a non-finite value",
                            i + 1
                        )));
                    }
                    rows.push((v[0], v[1]));
                }
            }
        }
        if rows.is_empty() {
            return Err(Error::Parse("no data rows".into()));
        }
        Ok(PairedSample { rows })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TiePolicy {
    #[default]
    Error,
    /// Break ties by a random order drawn from this seed.
    RandomBreak { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedSample {
    pub perm: Permutation,
    pub ties_broken: bool,
}

/// Zero-based ranks; ties are reported, or ordered by `keys` if given.
fn ranks(values: &[f64], keys: Option<&[u32]>) -> (Vec<usize>, bool) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .total_cmp(&values[b])
            .then_with(|| keys.map_or(std::cmp::Ordering::Equal, |k| k[a].cmp(&k[b])))
    });
    let tied = order.windows(2).any(|w| values[w[0]] == values[w[1]]);
    let mut rank = vec![0; values.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    (rank, tied)
}

/// The permutation induced by the sample: `π(i)` is the z-rank of the point
/// with the i-th smallest y.
pub fn ranks_to_perm(sample: &PairedSample, policy: TiePolicy) -> Result<RankedSample> {
    if sample.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    if sample
        .rows
        .iter()
        .any(|(y, z)| !y.is_finite() || !z.is_finite())
    {
        return Err(Error::DegeneratePoints("non-finite coordinate".into()));
    }
    let ys: Vec<f64> = sample.rows.iter().map(|r| r.0).collect();
    let zs: Vec<f64> = sample.rows.iter().map(|r| r.1).collect();
    let (keys_y, keys_z) = match policy {
        TiePolicy::Error => (None, None),
        TiePolicy::RandomBreak { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut a: Vec<u32> = (0..ys.len() as u32).collect();
            let mut b = a.clone();
            a.shuffle(&mut rng);
            b.shuffle(&mut rng);
            (Some(a), Some(b))
        }
    };
    let (ry, tied_y) = ranks(&ys, keys_y.as_deref());
    let (rz, tied_z) = ranks(&zs, keys_z.as_deref());
    if policy == TiePolicy::Error {
        if tied_y {
            return Err(Error::TiesPresent { column: "y" });
        }
        if tied_z {
            return Err(Error::TiesPresent { column: "z" });
        }
    }
    let mut images = vec![0u32; ys.len()];
    for i in 0..ys.len() {
        images[ry[i]] = rz[i] as u32 + 1;
    }
    Ok(RankedSample {
        perm: Permutation::from_one_line(&images)?,
        ties_broken: tied_y || tied_z,
    })
}

/// Outcome of one test on one sample.
#[derive(Clone, Debug, Serialize)]
pub struct TestResult {
    pub name: String,
    pub n: usize,
    /// Exact value as text, e.g. `1/5`.
    pub statistic: String,
    pub value: f64,
    pub exact: bool,
    pub ties_broken: bool,
    pub p_value: Option<PValue>,
}

pub fn run_test(
    stat: Statistic,
    pi: &Permutation,
    ties_broken: bool,
    null: Option<(usize, u64)>,
) -> Result<TestResult> {
    let value = stat.evaluate(pi)?;
    let value_f64 = value.to_f64();
    let p_value = match null {
        Some((samples, seed)) => Some(null_pvalue(
            stat,
            value_f64,
            pi.len(),
            samples,
            seed,
            DEFAULT_NULL_BUDGET,
        )?),
        None => None,
    };
    Ok(TestResult {
        name: stat.name().into(),
        n: pi.len(),
        statistic: value.to_string(),
        value: value_f64,
        exact: true,
        ties_broken,
        p_value,
    })
}

/// Float value of an exact rational statistic; reporting only.
pub fn to_f64(q: &BigRational) -> f64 {
    rat_to_f64(q)
}
