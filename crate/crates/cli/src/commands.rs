use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use num_traits::Zero;
use permprof::combinat::{factorial, rat_int};
use permprof::moments::{
    cov_limit, exact_second_moment_with, interpolate_moments_with, verify_diagonalization_with,
    MomentOptions,
};
use permprof::montecarlo::{
    cross_cov_estimate, fit_scaling_exponent, run_scaling, McConfig, DEFAULT_SAMPLE_BUDGET,
};
use permprof::perm::{profile_sampled, profile_with_budget, DEFAULT_SUBSET_BUDGET};
use permprof::rep::{build_u, BasisMatrix, GENERATOR_FILE_ENV};
use permprof::stats::{
    quasirandom_score, ranks_to_perm, run_test, PairedSample, Statistic, TiePolicy,
};
use permprof::{Error, Permutation, QNum, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::output::{approx, csv_table, envelope, exact, text_table, Format, Outcome};
use crate::PermInput;

fn read_perm(input: &PermInput) -> Result<Permutation> {
    match (&input.perm, &input.perm_file) {
        (Some(s), _) => s.parse(),
        (None, Some(path)) => std::fs::read_to_string(path)?.trim().parse(),
        (None, None) => Err(Error::InvalidParameter(
            "give a permutation with --perm or --perm-file".into(),
        )),
    }
}

fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

/// `123` for short patterns, space-separated beyond 9.
fn pattern_name(k: usize, index: usize) -> String {
    let p = Permutation::from_lex_index(k, index).expect("index below k!");
    if k < 10 {
        p.images().iter().map(|v| v.to_string()).collect()
    } else {
        p.to_string()
    }
}

fn render(
    format: Format,
    command: &str,
    seed: Option<u64>,
    json: Value,
    header: &[&str],
    rows: Vec<Vec<String>>,
) -> String {
    match format {
        Format::Json => envelope(command, seed, json),
        Format::Csv => csv_table(header, &rows),
        Format::Text => {
            let mut s = String::new();
            if let Some(seed) = seed {
                s += &format!("seed {seed}\n");
            }
            s + &text_table(header, &rows)
        }
    }
}

fn num(format: Format, q: &QNum) -> String {
    if format == Format::Text {
        format!("{:.6}", q.to_f64())
    } else {
        q.to_string()
    }
}

pub fn profile(
    input: &PermInput,
    k: usize,
    approximate: bool,
    samples: u64,
    seed: Option<u64>,
    budget: Option<u128>,
    format: Format,
) -> Result<Outcome> {
    let pi = read_perm(input)?;
    if approximate {
        let seed = seed_or_fresh(seed);
        let est = profile_sampled(&pi, k, samples, false, &mut ChaCha8Rng::seed_from_u64(seed))?;
        let rows: Vec<Vec<String>> = est
            .densities
            .iter()
            .zip(&est.std_errors)
            .enumerate()
            .map(|(i, (d, se))| vec![pattern_name(k, i), d.to_string(), se.to_string()])
            .collect();
        let patterns: Vec<Value> = est
            .densities
            .iter()
            .zip(&est.std_errors)
            .enumerate()
            .map(|(i, (&d, &se))| json!({ "pattern": pattern_name(k, i), "density": approx(d, Some(se)) }))
            .collect();
        let body = json!({ "k": k, "n": pi.len(), "samples": samples, "patterns": patterns });
        return Ok(Outcome::ok(render(
            format,
            "profile",
            Some(seed),
            body,
            &["pattern", "density", "stderr"],
            rows,
        )));
    }
    let prof = profile_with_budget(&pi, k, budget.unwrap_or(DEFAULT_SUBSET_BUDGET))?;
    let dens = prof.densities();
    let rows = prof
        .counts
        .iter()
        .zip(&dens)
        .enumerate()
        .map(|(i, (c, d))| {
            let shown = if format == Format::Text {
                format!("{:.6}", permprof::combinat::rat_to_f64(d))
            } else {
                d.to_string()
            };
            vec![pattern_name(k, i), c.to_string(), shown]
        })
        .collect();
    let patterns: Vec<Value> = prof
        .counts
        .iter()
        .zip(&dens)
        .enumerate()
        .map(
            |(i, (c, d))| json!({ "pattern": pattern_name(k, i), "count": c, "density": exact(d) }),
        )
        .collect();
    let body = json!({ "k": k, "n": pi.len(), "total": prof.total(), "patterns": patterns });
    Ok(Outcome::ok(render(
        format,
        "profile",
        None,
        body,
        &["pattern", "count", "density"],
        rows,
    )))
}

/// `x·n^{r/2}`, exact when `√n` lies in the field.
fn normalize(x: &QNum, n: usize, r: usize) -> (Option<QNum>, f64) {
    let base = rat_int(n as u64);
    let mut scaled = x.scale(&num_traits::pow(base.clone(), r / 2));
    let float = x.to_f64() * (n as f64).powf(r as f64 / 2.0);
    if r % 2 == 1 {
        match QNum::sqrt_rational(&base) {
            Ok(root) => scaled = &scaled * &root,
            Err(_) => return (None, float),
        }
    }
    (Some(scaled), float)
}

pub fn decompose(input: &PermInput, k: usize, format: Format) -> Result<Outcome> {
    let pi = read_perm(input)?;
    let prof = profile_with_budget(&pi, k, DEFAULT_SUBSET_BUDGET)?;
    let u = build_u(k)?;
    let dens: Vec<QNum> = prof.densities().into_iter().map(QNum::from).collect();
    let raw = u.coordinates(&dens);
    let n = pi.len();
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut norm2 = QNum::zero();
    for (c, x) in raw.iter().enumerate() {
        let r = u.block_of_column(c);
        let (norm_exact, norm_f) = normalize(x, n, r);
        norm2 += &(x * x);
        let label = u.labels()[c].to_string();
        rows.push(vec![
            label.clone(),
            r.to_string(),
            num(format, x),
            match (&norm_exact, format) {
                (Some(q), Format::Json | Format::Csv) => q.to_string(),
                _ => format!("{norm_f:.6}"),
            },
        ]);
        cols.push(json!({
            "column": label,
            "block": r,
            "raw": exact(x),
            "normalized": norm_exact.map_or_else(|| approx(norm_f, None), exact),
        }));
    }
    let profile_norm2 = dens.iter().fold(QNum::zero(), |acc, d| acc + &(d * d));
    let body = json!({
        "k": k,
        "n": n,
        "columns": cols,
        "block_dims": u.block_dims(),
        "squared_norm": exact(&norm2),
        "profile_squared_norm": exact(&profile_norm2),
    });
    Ok(Outcome::ok(render(
        format,
        "decompose",
        None,
        body,
        &["column", "block", "raw", "normalized"],
        rows,
    )))
}

fn moment_options(long: bool) -> MomentOptions {
    MomentOptions {
        long,
        ..MomentOptions::from_env()
    }
}

pub fn moments(
    k: usize,
    n: Option<usize>,
    cov: bool,
    long: bool,
    format: Format,
) -> Result<Outcome> {
    let opts = moment_options(long);
    let size = factorial(k) as usize;
    let names: Vec<String> = (0..size).map(|i| pattern_name(k, i)).collect();
    let (kind, cells): (&str, Vec<Vec<String>>) = match n {
        Some(n) => (
            "expectation",
            exact_second_moment_with(k, n, &opts)?.to_strings(),
        ),
        None => {
            let m = interpolate_moments_with(k, &opts)?;
            if cov {
                ("covariance_limit", cov_limit(&m).to_strings())
            } else {
                let cells = (0..size)
                    .map(|a| (0..size).map(|b| m.entry(a, b).to_string()).collect())
                    .collect();
                ("binomial_scaled_polynomial", cells)
            }
        }
    };
    let rows: Vec<Vec<String>> = names
        .iter()
        .zip(&cells)
        .map(|(name, row)| {
            std::iter::once(name.clone())
                .chain(row.iter().cloned())
                .collect()
        })
        .collect();
    let mut header = vec!["pattern"];
    header.extend(names.iter().map(String::as_str));
    let body =
        json!({ "k": k, "n": n, "kind": kind, "patterns": names, "matrix": cells, "exact": true });
    Ok(Outcome::ok(render(
        format, "moments", None, body, &header, rows,
    )))
}

/// Rough wall-clock scale of the k = 6 enumeration on a many-core machine.
const K6_WARNING: &str = "warning: k = 6 needs exhaustive enumeration of S_12 with C(12,6)^2 \
pattern pairs per permutation; expect on the order of 36 hours of compute for the counts and \
as much again for the conjugation.";

pub fn verify(
    k: usize,
    long: bool,
    generators: Option<PathBuf>,
    format: Format,
) -> Result<Outcome> {
    if k >= 5 && !long {
        return Err(Error::InvalidParameter(format!(
            "verify --k {k} is a long job; rerun with --long"
        )));
    }
    if k >= 6 {
        eprintln!("{K6_WARNING}");
        if generators.is_none() && std::env::var_os(GENERATOR_FILE_ENV).is_none() {
            return Err(Error::InvalidParameter(format!(
                "k = {k} needs a generator plug-in file (--generators or {GENERATOR_FILE_ENV})"
            )));
        }
    }
    if let Some(path) = generators {
        permprof::rep::read_generator_file(&path)?;
        std::env::set_var(GENERATOR_FILE_ENV, path);
    }
    let report = verify_diagonalization_with(k, &moment_options(long))?;
    let diag: Vec<Value> = report
        .diagonal
        .iter()
        .map(|d| {
            json!({
                "column": d.label.to_string(),
                "block": d.block,
                "limit": exact(&d.limit),
                "positive": d.positive,
                "rational": d.rational,
            })
        })
        .collect();
    let viol: Vec<Value> = report
        .offdiag_violations
        .iter()
        .map(|v| {
            json!({
                "row": v.row.to_string(),
                "col": v.col.to_string(),
                "limit": v.limit.as_ref().map(exact),
                "degree": v.degree,
            })
        })
        .collect();
    let body = json!({
        "k": k,
        "verdict": if report.pass { "PASS" } else { "FAIL" },
        "diagonal": diag,
        "offdiag_checked": report.offdiag_checked,
        "offdiag_violations": viol,
        "diverging_diagonal": report.diverging_diagonal.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
        "all_rational": report.all_rational,
    });
    let rows = report
        .diagonal
        .iter()
        .map(|d| {
            vec![
                d.label.to_string(),
                d.block.to_string(),
                num(format, &d.limit),
                d.positive.to_string(),
            ]
        })
        .collect();
    let mut text = render(
        format,
        "verify",
        None,
        body,
        &["column", "block", "limit", "positive"],
        rows,
    );
    if format == Format::Text {
        text += &format!(
            "{} ({} off-diagonal limits checked, {} nonzero)\n",
            if report.pass { "PASS" } else { "FAIL" },
            report.offdiag_checked,
            report.offdiag_violations.len()
        );
    }
    Ok(Outcome {
        text,
        pass: report.pass,
    })
}

pub struct McArgs {
    pub k: usize,
    pub block: Option<usize>,
    pub column: Option<String>,
    pub vector: Option<String>,
    pub u_column: Option<String>,
    pub n: String,
    pub samples: usize,
    pub seed: Option<u64>,
    pub budget: Option<u128>,
    pub band: f64,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad {what} entry {t:?}")))
        })
        .collect()
}

fn find_column(u: &BasisMatrix, label: &str) -> Result<usize> {
    u.labels()
        .iter()
        .position(|l| l.to_string() == label)
        .ok_or_else(|| Error::InvalidParameter(format!("no basis column {label}")))
}

fn column_f64(u: &BasisMatrix, c: usize) -> Vec<f64> {
    u.column(c).iter().map(QNum::to_f64).collect()
}

pub fn mc(args: McArgs, format: Format) -> Result<Outcome> {
    let k = args.k;
    let grid: Vec<usize> = parse_list(&args.n, "n")?;
    let seed = seed_or_fresh(args.seed);
    let u = if args.block.is_some() || args.column.is_some() || args.u_column.is_some() {
        Some(build_u(k)?)
    } else {
        None
    };
    let (v, label, r) = match (&args.block, &args.column, &args.vector) {
        (&Some(r), _, _) => {
            let u = u.as_ref().expect("built above");
            if r >= k {
                return Err(Error::InvalidParameter(format!(
                    "block {r} out of range for k = {k}"
                )));
            }
            // The last column of a block is a diagonal element of its
            // largest-index shape.
            let c = *u.block(r).last().expect("blocks are non-empty");
            (column_f64(u, c), u.labels()[c].to_string(), Some(r))
        }
        (None, Some(label), _) => {
            let u = u.as_ref().expect("built above");
            let c = find_column(u, label)?;
            (column_f64(u, c), label.clone(), Some(u.block_of_column(c)))
        }
        (None, None, Some(list)) => (parse_list(list, "vector")?, "custom".to_string(), None),
        (None, None, None) => {
            return Err(Error::InvalidParameter(
                "choose a direction with --block, --column or --vector".into(),
            ))
        }
    };
    let mut config = McConfig::new(k, v.clone(), grid.clone(), args.samples, seed);
    config.budget = args.budget.unwrap_or(DEFAULT_SAMPLE_BUDGET);
    let mut report = run_scaling(&config)?;
    report.target_exponent = r.map(|r| -(r as f64));
    let fit = if r == Some(0) {
        None
    } else {
        Some(fit_scaling_exponent(&report))
    };
    let (fit, fit_error) = match fit {
        Some(Ok(f)) => (Some(f), None),
        Some(Err(Error::InsufficientData(msg))) => (None, Some(msg)),
        Some(Err(e)) => return Err(e),
        None => (None, None),
    };
    let within = match (&fit, report.target_exponent) {
        (Some(f), Some(t)) => Some(f.within(t, args.band)),
        _ => None,
    };
    let cross: Option<Vec<Value>> = match &args.u_column {
        Some(label) => {
            let u = u.as_ref().expect("built above");
            let c = find_column(u, label)?;
            let s = u.block_of_column(c);
            let w = column_f64(u, c);
            let r = r.ok_or_else(|| {
                Error::InvalidParameter("--u-column needs a basis direction".into())
            })?;
            let mut out = Vec::new();
            for &n in &grid {
                let cc = cross_cov_estimate(k, &w, s, &v, r, n, args.samples, seed)?;
                out.push(json!({ "n": n, "normalized_cov": approx(cc.estimate, Some(cc.stderr)) }));
            }
            Some(out)
        }
        None => None,
    };
    let points: Vec<Value> = report
        .points
        .iter()
        .map(|p| {
            json!({
                "n": p.n,
                "samples": p.samples,
                "mean": approx(p.mean, Some(p.mean_se)),
                "second_moment": approx(p.second_moment, Some(p.second_moment_se)),
            })
        })
        .collect();
    let body = json!({
        "k": k,
        "direction": label,
        "block": r,
        "points": points,
        "fit": fit.as_ref().map(|f| json!({
            "slope": approx(f.slope, None),
            "ci95": [f.ci_low, f.ci_high],
            "intercept": approx(f.intercept, None),
            "used_n": f.used_n,
        })),
        "fit_error": fit_error,
        "target_exponent": report.target_exponent,
        "band": args.band,
        "within_band": within,
        "cross_covariance": cross,
    });
    let rows: Vec<Vec<String>> = report
        .points
        .iter()
        .map(|p| {
            vec![
                p.n.to_string(),
                p.samples.to_string(),
                p.mean.to_string(),
                p.second_moment.to_string(),
                p.second_moment_se.to_string(),
            ]
        })
        .collect();
    let mut text = render(
        format,
        "mc",
        Some(seed),
        body,
        &["n", "samples", "mean", "second_moment", "stderr"],
        rows,
    );
    if format == Format::Text {
        if let Some(f) = &fit {
            text += &format!(
                "slope {:.4} (95% CI {:.4} .. {:.4})\n",
                f.slope, f.ci_low, f.ci_high
            );
        }
        if let Some(msg) = &fit_error {
            text += &format!("no fit: {msg}\n");
        }
    }
    Ok(Outcome {
        text,
        pass: within != Some(false),
    })
}

pub fn test(
    input: &Path,
    statistic: &str,
    delimiter: char,
    break_ties: bool,
    null_samples: usize,
    seed: Option<u64>,
    format: Format,
) -> Result<Outcome> {
    let stat: Statistic = statistic.parse()?;
    if !delimiter.is_ascii() {
        return Err(Error::InvalidParameter(
            "delimiter must be a single ASCII character".into(),
        ));
    }
    let needs_seed = break_ties || null_samples > 0;
    let seed = needs_seed.then(|| seed_or_fresh(seed));
    let sample = if input == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        PairedSample::from_csv(buf.as_slice(), delimiter as u8)?
    } else {
        PairedSample::from_csv(File::open(input)?, delimiter as u8)?
    };
    let policy = match seed {
        Some(s) if break_ties => TiePolicy::RandomBreak { seed: s },
        _ => TiePolicy::Error,
    };
    let ranked = ranks_to_perm(&sample, policy)?;
    let null = (null_samples > 0).then(|| (null_samples, seed.expect("seeded above")));
    let res = run_test(stat, &ranked.perm, ranked.ties_broken, null)?;
    let body = json!({
        "statistic": res.name,
        "n": res.n,
        "value": exact(&res.statistic),
        "ties_broken": res.ties_broken,
        "p_value": res.p_value.as_ref().map(|p| json!({
            "value": approx(p.p_value, None),
            "samples": p.samples,
            "exceed": p.exceed,
        })),
    });
    let p = res
        .p_value
        .as_ref()
        .map_or(String::new(), |p| p.p_value.to_string());
    let value = if format == Format::Text {
        format!("{:.6}", res.value)
    } else {
        res.statistic.clone()
    };
    let rows = vec![vec![res.name.clone(), res.n.to_string(), value, p]];
    Ok(Outcome::ok(render(
        format,
        "test",
        seed,
        body,
        &["statistic", "n", "value", "p_value"],
        rows,
    )))
}

pub fn quasirandom(input: &PermInput, format: Format) -> Result<Outcome> {
    let pi = read_perm(input)?;
    let score = quasirandom_score(&pi)?;
    let abs = if score.signum() < 0 {
        -score.clone()
    } else {
        score.clone()
    };
    let n = pi.len();
    let scaled = abs.scale(&rat_int(n as u64));
    let body = json!({
        "n": n,
        "score": exact(&score),
        "abs_score": exact(&abs),
        "n_times_abs_score": exact(&scaled),
    });
    let rows = vec![vec![
        n.to_string(),
        num(format, &score),
        num(format, &scaled),
    ]];
    Ok(Outcome::ok(render(
        format,
        "quasirandom",
        None,
        body,
        &["n", "score", "n_abs_score"],
        rows,
    )))
}
