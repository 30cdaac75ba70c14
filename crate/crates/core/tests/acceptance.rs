//! One line per acceptance criterion. The test fails if any criterion does.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

use std::panic::{catch_unwind, AssertUnwindSafe};

use num_rational::BigRational;
use num_traits::Zero;
use permprof::combinat::{binomial, factorial, rat};
use permprof::linalg::RatMatrix;
use permprof::moments::{
    conjugate_and_normalize, count_moments, exact_second_moment_with, interpolate_moments_with,
    verify_diagonalization_with, MomentOptions,
};
use permprof::montecarlo::{
    estimate_projection_moment, fit_scaling_exponent, run_scaling_batch, McConfig,
};
use permprof::perm::{profile, sample_uniform, Permutation};
use permprof::poly::RatPoly;
use permprof::rep::{build_u, coset_sum, rep_tables};
use permprof::stats::{
    bergsma_dassios, bergsma_dassios_8, fisher_lee_delta, kendall_tau, null_pvalue, spearman_rho,
    Statistic, DEFAULT_NULL_BUDGET,
};
use permprof::QNum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn opts() -> MomentOptions {
    MomentOptions {
        check_extra_node: true,
        ..MomentOptions::default()
    }
}

fn mat(rows: &[&[(i64, i64)]]) -> RatMatrix {
    RatMatrix::from_fn(rows.len(), rows.len(), |i, j| {
        rat(rows[i][j].0, rows[i][j].1)
    })
}

fn q(s: &str) -> QNum {
    s.parse().expect("literal")
}

fn k2_pipeline() -> Check {
    let printed = [
        (2, mat(&[&[(1, 2), (0, 1)], &[(0, 1), (1, 2)]])),
        (3, mat(&[&[(19, 54), (4, 27)], &[(4, 27), (19, 54)]])),
        (4, mat(&[&[(67, 216), (41, 216)], &[(41, 216), (67, 216)]])),
    ];
    for (n, m) in &printed {
        let got = exact_second_moment_with(2, *n, &opts()).map_err(|e| e.to_string())?;
        ensure!(&got == m, "E[PPᵀ] at n={n} is {got}");
    }
    let m = interpolate_moments_with(2, &opts()).map_err(|e| e.to_string())?;
    let diag = RatPoly::new(vec![rat(5, 36), rat(-5, 72), rat(1, 8)]);
    let off = RatPoly::new(vec![rat(-5, 36), rat(-13, 72), rat(1, 8)]);
    ensure!(
        m.entry(0, 0) == &diag && m.entry(1, 1) == &diag,
        "diagonal polynomial {}",
        m.entry(0, 0)
    );
    ensure!(
        m.entry(0, 1) == &off && m.entry(1, 0) == &off,
        "off-diagonal polynomial {}",
        m.entry(0, 1)
    );
    let report = verify_diagonalization_with(2, &opts()).map_err(|e| e.to_string())?;
    ensure!(report.pass, "k=2 verification failed");
    ensure!(
        report.limits() == vec![q("1/2"), q("2/9")],
        "limits {:?}",
        report.limits()
    );
    Ok(())
}

fn k3_diagonalization() -> Check {
    let report = verify_diagonalization_with(3, &opts()).map_err(|e| e.to_string())?;
    ensure!(report.pass, "k=3 FAIL");
    ensure!(
        report.offdiag_checked == 30 && report.offdiag_violations.is_empty(),
        "off-diagonal limits"
    );
    ensure!(
        report.diagonal.len() == 6 && report.diagonal.iter().all(|d| d.positive),
        "diagonal limits"
    );
    // Printed normalized coefficient matrix with the √n and n factors removed.
    let display = [
        ["1/6√6", "1/3√3", "0", "0", "1/3√3", "1/6√6"],
        ["1/6√6", "-1/6√3", "-1/2", "-1/2", "1/6√3", "-1/6√6"],
        ["1/6√6", "-1/6√3", "1/2", "1/2", "1/6√3", "-1/6√6"],
        ["1/6√6", "-1/6√3", "-1/2", "1/2", "-1/6√3", "1/6√6"],
        ["1/6√6", "-1/6√3", "1/2", "-1/2", "-1/6√3", "1/6√6"],
        ["1/6√6", "1/3√3", "0", "0", "-1/3√3", "-1/6√6"],
    ];
    let u = build_u(3).map_err(|e| e.to_string())?;
    for (row, entries) in display.iter().enumerate() {
        for (col, e) in entries.iter().enumerate() {
            ensure!(
                u.entry(row, col) == &q(e),
                "U₃[{row}][{col}] = {}",
                u.entry(row, col)
            );
        }
    }
    let tags: Vec<usize> = (0..6).map(|c| u.block_of_column(c)).collect();
    ensure!(tags == [0, 1, 1, 1, 1, 2], "column blocks {tags:?}");
    Ok(())
}

fn k4_diagonalization() -> Check {
    let report = verify_diagonalization_with(4, &opts()).map_err(|e| e.to_string())?;
    ensure!(report.pass, "k=4 FAIL");
    ensure!(
        report.diagonal.len() == 24,
        "{} diagonal entries",
        report.diagonal.len()
    );
    ensure!(
        report.diagonal.iter().all(|d| d.positive && d.rational),
        "non-positive or irrational limit"
    );
    Ok(())
}

fn representation_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 1..=5 {
        let tables = rep_tables(k).map_err(|e| e.to_string())?;
        let kf = factorial(k);
        let sum_d2: usize = tables.iter().map(|t| t.dim().pow(2)).sum();
        ensure!(sum_d2 as u128 == kf, "Σd² = {sum_d2} for k={k}");
        let perms: Vec<Permutation> = Permutation::all(k).collect();
        for t in &tables {
            ensure!(
                t.matrices().iter().all(|m| m.is_orthogonal()),
                "non-orthogonal R(σ), λ={}",
                t.lambda
            );
            let pairs: Vec<(usize, usize)> = if k <= 4 {
                (0..perms.len())
                    .flat_map(|a| (0..perms.len()).map(move |b| (a, b)))
                    .collect()
            } else {
                (0..10_000)
                    .map(|_| (rng.gen_range(0..120), rng.gen_range(0..120)))
                    .collect()
            };
            for (a, b) in pairs {
                let (s, t2) = (&perms[a], &perms[b]);
                ensure!(
                    t.get(&s.then(t2)) == &(t.get(s) * t.get(t2)),
                    "homomorphism fails at λ={} ({s}),({t2})",
                    t.lambda
                );
            }
        }
        let mut elements = Vec::new();
        for (ti, t) in tables.iter().enumerate() {
            for i in 0..t.dim() {
                for j in 0..t.dim() {
                    elements.push((ti, t.dim(), t.matrix_element(i, j)));
                }
            }
        }
        for (a, (_, d, ea)) in elements.iter().enumerate() {
            for (b, (_, _, eb)) in elements.iter().enumerate().skip(a) {
                let v = ea
                    .iter()
                    .zip(eb)
                    .fold(QNum::zero(), |acc, (x, y)| acc + x * y);
                let expect = if a == b {
                    QNum::from_rational(rat(kf as i64, *d as i64))
                } else {
                    QNum::zero()
                };
                ensure!(v == expect, "Schur orthogonality fails at k={k}");
            }
        }
        let u = build_u(k).map_err(|e| e.to_string())?;
        ensure!(u.is_orthogonal(), "UᵀU ≠ I at k={k}");
    }
    Ok(())
}

fn coset_sum_suite() -> Check {
    for k in 2..=4 {
        let tables = rep_tables(k).map_err(|e| e.to_string())?;
        let perms: Vec<Permutation> = Permutation::all(k).collect();
        for rep in &tables {
            for l in 1..=k {
                let mut witness = false;
                for a in &perms {
                    for b in &perms {
                        let zero = coset_sum(rep, l, a, b)
                            .map_err(|e| e.to_string())?
                            .is_zero();
                        ensure!(
                            zero || rep.lambda.first() >= l,
                            "nonzero coset sum for λ={} l={l}",
                            rep.lambda
                        );
                        witness |= !zero;
                    }
                }
                ensure!(
                    witness || rep.lambda.first() < l,
                    "no witness for λ={} l={l}",
                    rep.lambda
                );
            }
        }
    }
    Ok(())
}

fn exact_limit_suite() -> Check {
    for k in 2..=4 {
        let m = interpolate_moments_with(k, &opts()).map_err(|e| e.to_string())?;
        let u = build_u(k).map_err(|e| e.to_string())?;
        let c = conjugate_and_normalize(&m, &u).map_err(|e| e.to_string())?;
        for a in 0..c.size() {
            for b in 0..c.size() {
                let lim = c.limit(a, b).map_err(|e| format!("k={k} ({a},{b}): {e}"))?;
                if a == b {
                    ensure!(lim.signum() > 0, "k={k} diagonal {a} is {lim}");
                } else {
                    ensure!(lim.is_zero(), "k={k} ({a},{b}) limit {lim}");
                }
            }
        }
    }
    Ok(())
}

fn monte_carlo_scaling() -> Check {
    let u = build_u(3).map_err(|e| e.to_string())?;
    let column = |label: &str| -> Vec<f64> {
        let c = u
            .labels()
            .iter()
            .position(|l| l.to_string() == label)
            .expect("label");
        u.column(c).iter().map(QNum::to_f64).collect()
    };
    let (v1, v2) = (column("R21_22"), column("R111_11"));
    let config = McConfig::new(3, vec![0.0; 6], vec![20, 40, 80, 160], 20_000, 2024);
    let reports = run_scaling_batch(&config, &[&v1, &v2]).map_err(|e| e.to_string())?;
    for (report, target) in reports.iter().zip([-1.0, -2.0]) {
        let fit = fit_scaling_exponent(report).map_err(|e| e.to_string())?;
        ensure!(fit.within(target, 0.3), "slope {} vs {target}", fit.slope);
    }
    let est =
        estimate_projection_moment(2, &[1.0, -1.0], 3, 20_000, 3).map_err(|e| e.to_string())?;
    let z = (est.second_moment - 11.0 / 27.0) / est.second_moment_se;
    ensure!(
        z.abs() < 4.0,
        "k=2 n=3 estimate {} is {z:.2} SE from 11/27",
        est.second_moment
    );
    Ok(())
}

fn statistics_suite() -> Check {
    for n in [5, 6] {
        for p in Permutation::all(n) {
            let v = p.images();
            let mut s = 0i64;
            for i in 0..n {
                for j in i + 1..n {
                    s += if v[j] > v[i] { 1 } else { -1 };
                }
            }
            let tau = rat(s, binomial(n, 2).expect("small") as i64);
            ensure!(kendall_tau(&p).map_err(|e| e.to_string())? == tau, "τ({p})");
            let d2: i64 = v
                .iter()
                .enumerate()
                .map(|(i, &x)| (i as i64 + 1 - x as i64).pow(2))
                .sum();
            let nn = n as i64;
            let rho = rat(1, 1) - rat(6 * d2, nn * (nn * nn - 1));
            ensure!(
                spearman_rho(&p).map_err(|e| e.to_string())? == rho,
                "ρ({p})"
            );
        }
    }
    let p: Permutation = "4 1 2 5 3"
        .parse()
        .map_err(|e: permprof::Error| e.to_string())?;
    ensure!(
        fisher_lee_delta(&p).map_err(|e| e.to_string())? == rat(1, 5),
        "Δ(41253)"
    );

    let a = Permutation::identity(6);
    let b: Permutation = "4 1 2 5 3 6"
        .parse()
        .map_err(|e: permprof::Error| e.to_string())?;
    let pt = |p: &Permutation| -> Result<(BigRational, BigRational), String> {
        let x = bergsma_dassios_8(p).map_err(|e| e.to_string())?;
        let y = bergsma_dassios(p).map_err(|e| e.to_string())?;
        Ok((x, y.to_rational().ok_or("irrational BD")?))
    };
    let ((xa, ya), (xb, yb)) = (pt(&a)?, pt(&b)?);
    let slope = (&ya - &yb) / (&xa - &xb);
    let icpt = &ya - &slope * &xa;
    for p in Permutation::all(6) {
        let (x, y) = pt(&p)?;
        ensure!(y == &slope * x + &icpt, "BD affine link fails at {p}");
    }
    let run = || null_pvalue(Statistic::Rho, 0.2, 40, 500, 11, DEFAULT_NULL_BUDGET);
    let (p1, p2) = (
        run().map_err(|e| e.to_string())?,
        run().map_err(|e| e.to_string())?,
    );
    ensure!(p1 == p2, "p-value not reproducible");
    Ok(())
}

fn property_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let n = rng.gen_range(4..14);
        let pi = sample_uniform(n, &mut rng).map_err(|e| e.to_string())?;
        for k in 1..=4.min(n) {
            let pr = profile(&pi, k).map_err(|e| e.to_string())?;
            let total: u64 = pr.counts.iter().sum();
            ensure!(
                total as u128 == binomial(n, k).expect("small"),
                "ΣN ≠ C(n,k)"
            );
            let inv = profile(&pi.inverse(), k).map_err(|e| e.to_string())?;
            let rev = profile(&pi.reversed(), k).map_err(|e| e.to_string())?;
            for sigma in Permutation::all(k) {
                let i = sigma.lex_index();
                ensure!(
                    inv.counts[sigma.inverse().lex_index()] == pr.counts[i],
                    "inverse symmetry"
                );
                ensure!(
                    rev.counts[sigma.reversed().lex_index()] == pr.counts[i],
                    "reversal symmetry"
                );
            }
        }
    }
    for k in 1..=3 {
        let m = interpolate_moments_with(k, &opts()).map_err(|e| e.to_string())?;
        let node = 2 * k + 1;
        let direct = count_moments(k, node, &opts()).map_err(|e| e.to_string())?;
        ensure!(
            m.eval(node) == direct.scaled_expectation(),
            "out-of-sample node k={k}"
        );
    }
    let v = [0.5, -1.0, 0.25, 2.0, -0.75, 1.0];
    let dump = |threads: usize| -> Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        let est = pool
            .install(|| estimate_projection_moment(3, &v, 50, 4000, 77))
            .map_err(|e| e.to_string())?;
        serde_json::to_string(&est).map_err(|e| e.to_string())
    };
    let one = dump(1)?;
    ensure!(
        one == dump(3)? && one == dump(8)?,
        "MC output depends on thread count"
    );
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("k=2 exact pipeline", k2_pipeline),
        ("k=3 diagonalization", k3_diagonalization),
        ("k=4 diagonalization", k4_diagonalization),
        ("representation suite", representation_suite),
        ("coset-sum suite", coset_sum_suite),
        ("exact limit suite", exact_limit_suite),
        ("Monte Carlo scaling", monte_carlo_scaling),
        ("statistics suite", statistics_suite),
        ("property suite", property_suite),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("criterion {}: PASS  {name} ({secs:.1}s)", i + 1),
            Err(msg) => {
                println!("criterion {}: FAIL  {name} ({secs:.1}s): {msg}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
