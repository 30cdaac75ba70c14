//! Permutations, pattern extraction and k-profiles.
//!
//! Permutations use 1-based one-line notation. Patterns of length `k` are
//! identified by their lexicographic rank in `S_k`, so `123, 132, 213, 231,
//! 312, 321` are indices `0..6`. Every vector and matrix indexed by `S_k` in
//! this crate uses that order.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinat::{binomial, factorial};
use crate::error::{Error, Result};

/// Largest pattern length supported by the counting kernel.
pub const MAX_PATTERN_LEN: usize = 10;

/// Default cap on the number of position subsets a single profile may visit.
pub const DEFAULT_SUBSET_BUDGET: u128 = 1_000_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Permutation {
    images: Vec<u32>,
}

impl Permutation {
    pub fn from_one_line(values: &[u32]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::NotABijection {
                n,
                detail: "empty permutation".into(),
            });
        }
        let mut seen = vec![false; n];
        for &v in values {
            if v == 0 || v as usize > n {
                return Err(Error::NotABijection {
                    n,
                    detail: format!("value {v} out of range"),
                });
            }
            if std::mem::replace(&mut seen[v as usize - 1], true) {
                return Err(Error::NotABijection {
                    n,
                    detail: format!("duplicate value {v}"),
                });
            }
        }
        Ok(Permutation {
            images: values.to_vec(),
        })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (1..=n as u32).collect(),
        }
    }

    /// The decreasing permutation `n … 2 1`.
    pub fn reverse(n: usize) -> Self {
        Permutation {
            images: (1..=n as u32).rev().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[u32] {
        &self.images
    }

    /// π(i) for 1-based `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.images[i - 1] as usize
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u32; self.len()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v as usize - 1] = i as u32 + 1;
        }
        Permutation { images: inv }
    }

    /// Function composition `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Self {
        assert_eq!(self.len(), other.len(), "size mismatch in compose");
        Permutation {
            images: other
                .images
                .iter()
                .map(|&j| self.images[j as usize - 1])
                .collect(),
        }
    }

    /// Left-to-right product: apply `self` first, then `other`.
    pub fn then(&self, other: &Permutation) -> Self {
        other.compose(self)
    }

    pub fn sign(&self) -> i32 {
        let mut visited = vec![false; self.len()];
        let mut parity = 0usize;
        for start in 0..self.len() {
            if visited[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !visited[j] {
                visited[j] = true;
                j = self.images[j] as usize - 1;
                len += 1;
            }
            parity += len - 1;
        }
        if parity.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// Reads the one-line notation backwards (reverses positions).
    pub fn reversed(&self) -> Self {
        Permutation {
            images: self.images.iter().rev().copied().collect(),
        }
    }

    /// Replaces each value `v` by `n + 1 - v`.
    pub fn complement(&self) -> Self {
        let n = self.len() as u32;
        Permutation {
            images: self.images.iter().map(|&v| n + 1 - v).collect(),
        }
    }

    /// Rank in lexicographic order of `S_n`.
    pub fn lex_index(&self) -> usize {
        let n = self.len();
        let mut rank = 0usize;
        for i in 0..n {
            let smaller_after = self.images[i + 1..]
                .iter()
                .filter(|&&v| v < self.images[i])
                .count();
            rank += smaller_after * factorial(n - 1 - i) as usize;
        }
        rank
    }

    pub fn from_lex_index(n: usize, mut index: usize) -> Result<Self> {
        let total = factorial(n);
        if n == 0 || index as u128 >= total {
            return Err(Error::InvalidParameter(format!(
                "lex index {index} out of range for S_{n}"
            )));
        }
        let mut pool: Vec<u32> = (1..=n as u32).collect();
        let mut images = Vec::with_capacity(n);
        for i in 0..n {
            let f = factorial(n - 1 - i) as usize;
            images.push(pool.remove(index / f));
            index %= f;
        }
        Ok(Permutation { images })
    }

    /// All of `S_n` in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = Permutation> {
        let mut current: Option<Vec<u32>> = Some((1..=n as u32).collect());
        std::iter::from_fn(move || {
            let out = current.take()?;
            let mut next = out.clone();
            if next_permutation(&mut next) {
                current = Some(next);
            }
            Some(Permutation { images: out })
        })
    }

    /// The pattern induced at the given 1-based, strictly increasing positions.
    pub fn pattern_at(&self, positions: &[usize]) -> Result<PatternId> {
        pattern_of(self, positions)
    }
}

impl TryFrom<Vec<u32>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        Permutation::from_one_line(&v)
    }
}

impl From<Permutation> for Vec<u32> {
    fn from(p: Permutation) -> Self {
        p.images
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.images.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// Whitespace- or comma-separated one-line notation.
    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| Error::Parse(format!("not a positive integer: {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::from_one_line(&values)
    }
}

/// Advances `v` to the next permutation in lexicographic order.
pub(crate) fn next_permutation(v: &mut [u32]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// A pattern of length `k`, stored as its lexicographic rank in `S_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatternId {
    pub k: usize,
    pub index: usize,
}

impl PatternId {
    pub fn permutation(&self) -> Permutation {
        Permutation::from_lex_index(self.k, self.index).expect("PatternId holds a valid rank")
    }
}

impl From<&Permutation> for PatternId {
    fn from(p: &Permutation) -> Self {
        PatternId {
            k: p.len(),
            index: p.lex_index(),
        }
    }
}

pub fn pattern_of(pi: &Permutation, positions: &[usize]) -> Result<PatternId> {
    if positions.is_empty() {
        return Err(Error::BadPositions("no positions".into()));
    }
    if positions.len() > MAX_PATTERN_LEN {
        return Err(Error::BadPositions(format!(
            "pattern length {} exceeds {MAX_PATTERN_LEN}",
            positions.len()
        )));
    }
    let n = pi.len();
    for w in positions.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::BadPositions(format!(
                "positions not strictly increasing: {positions:?}"
            )));
        }
    }
    if positions[0] == 0 || positions[positions.len() - 1] > n {
        return Err(Error::BadPositions(format!(
            "positions {positions:?} outside 1..={n}"
        )));
    }
    let vals: Vec<u32> = positions.iter().map(|&a| pi.images[a - 1]).collect();
    Ok(PatternId {
        k: vals.len(),
        index: standardized_lex_index(&vals),
    })
}

/// Lex rank of the pattern order-isomorphic to `vals` (distinct values).
pub(crate) fn standardized_lex_index(vals: &[u32]) -> usize {
    let k = vals.len();
    let mut rank = 0usize;
    for i in 0..k {
        let smaller_after = vals[i + 1..].iter().filter(|&&v| v < vals[i]).count();
        rank += smaller_after * factorial(k - 1 - i) as usize;
    }
    rank
}

/// Lookup from the incremental "left code" to lexicographic rank.
///
/// The left code of a pattern is `Σ d_i · i!` with `d_i = #{j < i : v_j < v_i}`.
/// It can be extended one entry at a time, which is what the subset walk does.
pub(crate) struct PatternTable {
    k: usize,
    fact: [usize; MAX_PATTERN_LEN + 1],
    code_to_lex: Vec<u32>,
}

impl PatternTable {
    fn build(k: usize) -> Self {
        let mut fact = [1usize; MAX_PATTERN_LEN + 1];
        for i in 1..=MAX_PATTERN_LEN {
            fact[i] = fact[i - 1] * i;
        }
        let mut code_to_lex = vec![0u32; fact[k]];
        for (lex, p) in Permutation::all(k).enumerate() {
            let v = p.images();
            let mut code = 0;
            for i in 0..k {
                let d = v[..i].iter().filter(|&&w| w < v[i]).count();
                code += d * fact[i];
            }
            code_to_lex[code] = lex as u32;
        }
        PatternTable {
            k,
            fact,
            code_to_lex,
        }
    }

    pub(crate) fn get(k: usize) -> &'static PatternTable {
        static TABLES: [OnceLock<PatternTable>; MAX_PATTERN_LEN + 1] =
            [const { OnceLock::new() }; MAX_PATTERN_LEN + 1];
        assert!((1..=MAX_PATTERN_LEN).contains(&k), "pattern length {k}");
        TABLES[k].get_or_init(|| PatternTable::build(k))
    }

    pub(crate) fn size(&self) -> usize {
        self.code_to_lex.len()
    }

    /// Adds every k-pattern occurrence in `values` to `by_code`
    /// (length `k!`, indexed by left code).
    pub(crate) fn count_by_code(&self, values: &[u32], by_code: &mut [u64]) {
        let k = self.k;
        let n = values.len();
        if n < k {
            return;
        }
        if k == 1 {
            by_code[0] += n as u64;
            return;
        }
        let mut prefix = [0u32; MAX_PATTERN_LEN];
        self.walk(values, 0, 0, 0, &mut prefix, by_code);
    }

    fn walk(
        &self,
        values: &[u32],
        depth: usize,
        start: usize,
        code: usize,
        prefix: &mut [u32; MAX_PATTERN_LEN],
        by_code: &mut [u64],
    ) {
        let k = self.k;
        let stop = values.len() - (k - depth - 1);
        let weight = self.fact[depth];
        if depth + 1 == k {
            let pre = &prefix[..depth];
            for &v in &values[start..stop] {
                let d = pre.iter().filter(|&&w| w < v).count();
                by_code[code + d * weight] += 1;
            }
            return;
        }
        for p in start..stop {
            let v = values[p];
            let d = prefix[..depth].iter().filter(|&&w| w < v).count();
            prefix[depth] = v;
            self.walk(values, depth + 1, p + 1, code + d * weight, prefix, by_code);
        }
    }

    pub(crate) fn lex_of_code(&self, code: usize) -> usize {
        self.code_to_lex[code] as usize
    }

    /// Converts code-indexed counts to lex-indexed counts.
    pub(crate) fn to_lex(&self, by_code: &[u64], out: &mut [u64]) {
        for (code, &c) in by_code.iter().enumerate() {
            out[self.code_to_lex[code] as usize] = c;
        }
    }
}

/// Pattern counts `N_σ` of one permutation, in lexicographic order of `S_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub k: usize,
    pub n: usize,
    pub counts: Vec<u64>,
}

impl Profile {
    /// `C(n, k)`, the number of occurrences counted.
    pub fn total(&self) -> u64 {
        binomial(self.n, self.k).expect("checked when the profile was built") as u64
    }

    pub fn density(&self, sigma: usize) -> BigRational {
        BigRational::new(BigInt::from(self.counts[sigma]), BigInt::from(self.total()))
    }

    pub fn densities(&self) -> Vec<BigRational> {
        (0..self.counts.len()).map(|i| self.density(i)).collect()
    }

    pub fn densities_f64(&self) -> Vec<f64> {
        let t = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    /// `⟨v, P⟩` in floating point.
    pub fn project_f64(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.counts.len());
        let s: f64 = v.iter().zip(&self.counts).map(|(a, &c)| a * c as f64).sum();
        s / self.total() as f64
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "pattern length k = {k} must satisfy 1 <= k <= n = {n}"
        )));
    }
    if k > MAX_PATTERN_LEN {
        return Err(Error::InvalidParameter(format!(
            "pattern length k = {k} exceeds {MAX_PATTERN_LEN}"
        )));
    }
    Ok(())
}

pub fn profile(pi: &Permutation, k: usize) -> Result<Profile> {
    profile_with_budget(pi, k, DEFAULT_SUBSET_BUDGET)
}

/// Work units for one exact k-profile: `C(n, k)` subsets in general,
/// `n·⌈log₂ n⌉` on the Fenwick-tree path used for `k ≤ 3`.
pub fn profile_cost(n: usize, k: usize) -> u128 {
    if k <= 3 {
        let log = usize::BITS - n.max(2).leading_zeros();
        n as u128 * log as u128
    } else {
        binomial(n, k).unwrap_or(u128::MAX)
    }
}

/// Exact k-profile, refusing jobs above `budget` work units.
pub fn profile_with_budget(pi: &Permutation, k: usize, budget: u128) -> Result<Profile> {
    let n = pi.len();
    check_k(n, k)?;
    let work = profile_cost(n, k);
    if work > budget {
        return Err(Error::TooLarge { work, budget });
    }
    if k <= 3 {
        return Ok(Profile {
            k,
            n,
            counts: small_counts(pi.images(), k),
        });
    }
    profile_by_subsets(pi, k)
}

/// Reference kernel: walks every k-subset of positions.
pub fn profile_by_subsets(pi: &Permutation, k: usize) -> Result<Profile> {
    let n = pi.len();
    check_k(n, k)?;
    let table = PatternTable::get(k);
    let mut by_code = vec![0u64; table.size()];
    table.count_by_code(pi.images(), &mut by_code);
    let mut counts = vec![0u64; table.size()];
    table.to_lex(&by_code, &mut counts);
    Ok(Profile { k, n, counts })
}

/// Pattern counts for `k ≤ 3` from per-position left/right rank counts.
fn small_counts(values: &[u32], k: usize) -> Vec<u64> {
    let n = values.len();
    if k == 1 {
        return vec![n as u64];
    }
    let mut tree = vec![0u32; n + 1];
    let (mut n12, mut ad, mut bc, mut ac, mut bd, mut d2, mut c2) = (0u64, 0, 0, 0, 0, 0, 0);
    for (j, &v) in values.iter().enumerate() {
        // a: earlier and smaller; b: earlier and larger; c, d: later ones.
        let mut a = 0u64;
        let mut i = v as usize - 1;
        while i > 0 {
            a += tree[i] as u64;
            i &= i - 1;
        }
        let mut i = v as usize;
        while i <= n {
            tree[i] += 1;
            i += i & i.wrapping_neg();
        }
        let b = j as u64 - a;
        let c = (v as u64 - 1) - a;
        let d = (n - j - 1) as u64 - c;
        n12 += a;
        ad += a * d;
        bc += b * c;
        ac += a * c;
        bd += b * d;
        d2 += d * d.saturating_sub(1) / 2;
        c2 += c * c.saturating_sub(1) / 2;
    }
    if k == 2 {
        let total = (n * (n - 1) / 2) as u64;
        return vec![n12, total - n12];
    }
    // 123 and 132 start at their smallest entry; 312 and 321 at their largest.
    let n132 = d2 - ad;
    let n312 = c2 - bc;
    vec![ad, n132, bd - n312, ac - n132, n312, bc]
}

/// Sampled estimate of the k-profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileEstimate {
    pub k: usize,
    pub n: usize,
    pub samples: u64,
    /// True when every subset was visited exactly once, so the estimate is exact.
    pub exhaustive: bool,
    pub densities: Vec<f64>,
    pub std_errors: Vec<f64>,
}

/// Estimates `P_σ` from `samples` uniformly drawn k-subsets of positions.
///
/// With `exhaustive` set, `samples` must equal `C(n, k)` and every subset is
/// visited once instead, which reproduces [`profile`] exactly.
pub fn profile_sampled<R: Rng + ?Sized>(
    pi: &Permutation,
    k: usize,
    samples: u64,
    exhaustive: bool,
    rng: &mut R,
) -> Result<ProfileEstimate> {
    let n = pi.len();
    check_k(n, k)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let total = binomial(n, k).unwrap_or(u128::MAX);
    let mut tally = vec![0u64; factorial(k) as usize];
    if exhaustive {
        if samples as u128 != total {
            return Err(Error::InvalidParameter(format!(
                "exhaustive sampling needs samples = C({n},{k}) = {total}"
            )));
        }
        let exact = profile_with_budget(pi, k, u128::MAX)?;
        tally.copy_from_slice(&exact.counts);
    } else {
        let mut vals = vec![0u32; k];
        for _ in 0..samples {
            let mut pos = index::sample(rng, n, k).into_vec();
            pos.sort_unstable();
            for (slot, &p) in vals.iter_mut().zip(&pos) {
                *slot = pi.images[p];
            }
            tally[standardized_lex_index(&vals)] += 1;
        }
    }
    let m = samples as f64;
    let densities: Vec<f64> = tally.iter().map(|&c| c as f64 / m).collect();
    let std_errors = densities
        .iter()
        .map(|&p| {
            if exhaustive {
                0.0
            } else {
                (p * (1.0 - p) / m).sqrt()
            }
        })
        .collect();
    Ok(ProfileEstimate {
        k,
        n,
        samples,
        exhaustive,
        densities,
        std_errors,
    })
}

/// Uniform random permutation of size `n` (Fisher–Yates).
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Permutation> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let mut images: Vec<u32> = (1..=n as u32).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        images.swap(i, j);
    }
    Ok(Permutation { images })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub y: f64,
    pub z: f64,
}

impl PlanePoint {
    pub fn new(y: f64, z: f64) -> Self {
        PlanePoint { y, z }
    }
}

/// Ranks of `xs` (1-based), or the index pair of a tie.
fn strict_ranks(xs: &[f64]) -> std::result::Result<Vec<u32>, (usize, usize)> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    for w in order.windows(2) {
        if xs[w[0]] == xs[w[1]] {
            return Err((w[0], w[1]));
        }
    }
    let mut ranks = vec![0u32; xs.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r as u32 + 1;
    }
    Ok(ranks)
}

/// The permutation induced by a generic point set: sorting the points by
/// `y`, the i-th point carries the `π(i)`-th smallest `z`.
pub fn perm_of_points(points: &[PlanePoint]) -> Result<Permutation> {
    if points.is_empty() {
        return Err(Error::DegeneratePoints("no points".into()));
    }
    if let Some(i) = points
        .iter()
        .position(|p| !p.y.is_finite() || !p.z.is_finite())
    {
        return Err(Error::DegeneratePoints(format!(
            "point {i} has a non-finite coordinate"
        )));
    }
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let zs: Vec<f64> = points.iter().map(|p| p.z).collect();
    let y_rank = strict_ranks(&ys)
        .map_err(|(a, b)| Error::DegeneratePoints(format!("points {a} and {b} share y")))?;
    let z_rank = strict_ranks(&zs)
        .map_err(|(a, b)| Error::DegeneratePoints(format!("points {a} and {b} share z")))?;
    let mut images = vec![0u32; points.len()];
    for i in 0..points.len() {
        images[y_rank[i] as usize - 1] = z_rank[i];
    }
    Ok(Permutation { images })
}
