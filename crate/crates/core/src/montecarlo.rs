//! Monte Carlo estimates of projection moments at sizes beyond enumeration.
//!
//! Sample `i` at host size `n` draws its permutation from a ChaCha stream
//! keyed by `(seed, n, i)`, and per-sample values are reduced in index order.
//! Results are therefore identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{profile_cost, profile_with_budget, sample_uniform, MAX_PATTERN_LEN};

/// Default per-sample profile budget, in work units.
pub const DEFAULT_SAMPLE_BUDGET: u128 = 10_000_000;

/// Relative standard error above which a grid point is left out of the fit.
pub const MAX_RELATIVE_SE: f64 = 0.2;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McConfig {
    pub k: usize,
    pub v: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Per-sample profile budget.
    pub budget: u128,
}

impl McConfig {
    pub fn new(k: usize, v: Vec<f64>, n_grid: Vec<usize>, samples: usize, seed: u64) -> Self {
        McConfig {
            k,
            v,
            n_grid,
            samples,
            seed,
            budget: DEFAULT_SAMPLE_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "n grid must be non-empty and strictly increasing".into(),
            ));
        }
        if self.samples < 2 {
            return Err(Error::InvalidParameter("need at least 2 samples".into()));
        }
        check_inputs(self.k, &[&self.v], self.n_grid[0], self.budget)?;
        check_inputs(
            self.k,
            &[],
            *self.n_grid.last().expect("non-empty"),
            self.budget,
        )
    }
}

fn check_inputs(k: usize, vectors: &[&[f64]], n: usize, budget: u128) -> Result<()> {
    if k == 0 || k > MAX_PATTERN_LEN {
        return Err(Error::InvalidParameter(format!("k = {k} out of range")));
    }
    let size: usize = (1..=k).product();
    if let Some(bad) = vectors.iter().find(|v| v.len() != size) {
        return Err(Error::InvalidParameter(format!(
            "projection vector has length {}, expected {k}! = {size}",
            bad.len()
        )));
    }
    if n < k {
        return Err(Error::InvalidParameter(format!("need n >= k, got n = {n}")));
    }
    let work = profile_cost(n, k);
    if work > budget {
        return Err(Error::TooLarge { work, budget });
    }
    Ok(())
}

fn sample_rng(seed: u64, n: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 40) ^ index as u64);
    rng
}

/// `⟨v, P⟩` for every vector and every sample: `out[vector][sample]`.
pub fn sample_projections(
    k: usize,
    vectors: &[&[f64]],
    n: usize,
    samples: usize,
    seed: u64,
    budget: u128,
) -> Result<Vec<Vec<f64>>> {
    check_inputs(k, vectors, n, budget)?;
    let per_sample: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, n, i);
            let pi = sample_uniform(n, &mut rng)?;
            let prof = profile_with_budget(&pi, k, budget)?;
            Ok(vectors.iter().map(|v| prof.project_f64(v)).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..vectors.len())
        .map(|j| per_sample.iter().map(|row| row[j]).collect())
        .collect())
}

/// Empirical moments of `⟨v, P⟩` at one host size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub n: usize,
    pub samples: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub second_moment: f64,
    /// Standard error of the second moment.
    pub second_moment_se: f64,
}

impl MomentEstimate {
    pub fn from_values(n: usize, xs: &[f64]) -> Self {
        let m = xs.len() as f64;
        let (mean, mean_se) = mean_and_se(xs.iter().copied());
        let (second_moment, second_moment_se) = mean_and_se(xs.iter().map(|x| x * x));
        debug_assert!(m >= 2.0);
        MomentEstimate {
            n,
            samples: xs.len(),
            mean,
            mean_se,
            second_moment,
            second_moment_se,
        }
    }

    pub fn relative_se(&self) -> f64 {
        if self.second_moment > 0.0 {
            self.second_moment_se / self.second_moment
        } else {
            f64::INFINITY
        }
    }
}

/// Sample mean and its standard error, summed in input order.
fn mean_and_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (mut count, mut sum) = (0usize, 0.0);
    for x in xs.clone() {
        count += 1;
        sum += x;
    }
    let mean = sum / count as f64;
    let mut rest = xs.clone();
    if let Some(first) = rest.next() {
        if rest.all(|x| x == first) {
            return (first, 0.0);
        }
    }
    let ss: f64 = xs.map(|x| (x - mean) * (x - mean)).sum();
    let var = if count > 1 {
        ss / (count - 1) as f64
    } else {
        0.0
    };
    (mean, (var / count as f64).sqrt())
}

pub fn estimate_projection_moment(
    k: usize,
    v: &[f64],
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let xs = sample_projections(k, &[v], n, samples, seed, DEFAULT_SAMPLE_BUDGET)?;
    Ok(MomentEstimate::from_values(n, &xs[0]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub k: usize,
    pub seed: u64,
    pub points: Vec<MomentEstimate>,
    /// `−r` when the direction is known to lie in `V_r`.
    pub target_exponent: Option<f64>,
}

/// Runs one sample set per grid size.
pub fn run_scaling(config: &McConfig) -> Result<ScalingReport> {
    Ok(run_scaling_batch(config, &[&config.v])?.remove(0))
}

/// Several directions sharing one sample set per grid size.
pub fn run_scaling_batch(config: &McConfig, vectors: &[&[f64]]) -> Result<Vec<ScalingReport>> {
    config.validate()?;
    for &n in &config.n_grid {
        check_inputs(config.k, vectors, n, config.budget)?;
    }
    let mut reports: Vec<ScalingReport> = vectors
        .iter()
        .map(|_| ScalingReport {
            k: config.k,
            seed: config.seed,
            points: Vec::new(),
            target_exponent: None,
        })
        .collect();
    for &n in &config.n_grid {
        let xs = sample_projections(
            config.k,
            vectors,
            n,
            config.samples,
            config.seed,
            config.budget,
        )?;
        for (report, values) in reports.iter_mut().zip(&xs) {
            report.points.push(MomentEstimate::from_values(n, values));
        }
    }
    Ok(reports)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% interval from per-point standard errors propagated through the
    /// least-squares slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub used_n: Vec<usize>,
}

impl ScalingFit {
    pub fn within(&self, target: f64, band: f64) -> bool {
        (self.slope - target).abs() <= band
    }
}

/// Least-squares slope of `log E⟨v,P⟩²` against `log n`, over grid points
/// with relative standard error below [`MAX_RELATIVE_SE`].
pub fn fit_scaling_exponent(report: &ScalingReport) -> Result<ScalingFit> {
    let usable: Vec<&MomentEstimate> = report
        .points
        .iter()
        .filter(|p| p.relative_se() < MAX_RELATIVE_SE)
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} of {} grid points have relative standard error below {MAX_RELATIVE_SE}; need 3",
            usable.len(),
            report.points.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.second_moment.ln()).collect();
    let sigmas: Vec<f64> = usable.iter().map(|p| p.relative_se()).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("grid has a single size".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let var: f64 = xs
        .iter()
        .zip(&sigmas)
        .map(|(x, s)| ((x - xbar) * s).powi(2))
        .sum::<f64>()
        / (sxx * sxx);
    let half = 1.96 * var.sqrt();
    Ok(ScalingFit {
        slope,
        intercept: ybar - slope * xbar,
        ci_low: slope - half,
        ci_high: slope + half,
        used_n: usable.iter().map(|p| p.n).collect(),
    })
}

/// Normalized covariance `n^{(r+s)/2}·cov(⟨u,P⟩, ⟨v,P⟩)` with standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCov {
    pub n: usize,
    pub samples: usize,
    pub estimate: f64,
    pub stderr: f64,
}

fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

#[allow(clippy::too_many_arguments)]
pub fn cross_cov_estimate(
    k: usize,
    u: &[f64],
    r: usize,
    v: &[f64],
    s: usize,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<CrossCov> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    check_inputs(k, &[u, v], n, DEFAULT_SAMPLE_BUDGET)?;
    // A constant direction has a deterministic projection.
    if is_constant(u) || is_constant(v) {
        return Ok(CrossCov {
            n,
            samples,
            estimate: 0.0,
            stderr: 0.0,
        });
    }
    let xs = sample_projections(k, &[u, v], n, samples, seed, DEFAULT_SAMPLE_BUDGET)?;
    let (mx, _) = mean_and_se(xs[0].iter().copied());
    let (my, _) = mean_and_se(xs[1].iter().copied());
    let m = samples as f64;
    let products = xs[0].iter().zip(&xs[1]).map(|(x, y)| (x - mx) * (y - my));
    let (mean_prod, se) = mean_and_se(products);
    let scale = (n as f64).powf((r + s) as f64 / 2.0);
    Ok(CrossCov {
        n,
        samples,
        estimate: scale * mean_prod * m / (m - 1.0),
        stderr: scale * se * m / (m - 1.0),
    })
}
