use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use permprof::combinat::{binomial, factorial, rat, rat_int};
use permprof::linalg::RatMatrix;
use permprof::moments::{
    check_cov_limit, conjugate_and_normalize, count_moments, cov_limit, exact_second_moment_with,
    interpolate_moments_with, normalized_limit, verify_diagonalization_with, MomentOptions,
};
use permprof::perm::{pattern_of, Permutation};
use permprof::poly::{QPoly, RatPoly};
use permprof::rep::build_u;
use permprof::{Error, QNum};

fn opts() -> MomentOptions {
    MomentOptions {
        check_extra_node: true,
        ..MomentOptions::default()
    }
}

fn q(s: &str) -> QNum {
    s.parse().unwrap()
}

fn mat(rows: &[&[(i64, i64)]]) -> RatMatrix {
    RatMatrix::from_fn(rows.len(), rows.len(), |i, j| {
        rat(rows[i][j].0, rows[i][j].1)
    })
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=m {
            cur.push(i);
            go(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(1, m, k, &mut Vec::new(), &mut out);
    out
}

/// `c_m(σ,τ)`: probability-weighted count of covering pairs `A ∪ B = [m]`,
/// so that `E[N_σ N_τ] = Σ_m C(n,m)·c_m(σ,τ)`.
fn covering_coefficients(k: usize) -> Vec<(usize, RatMatrix)> {
    let size = factorial(k) as usize;
    (k..=2 * k)
        .map(|m| {
            let subs = subsets(m, k);
            let mut pairs = Vec::new();
            for a in &subs {
                for b in &subs {
                    let mut cover = vec![false; m + 1];
                    a.iter().chain(b).for_each(|&i| cover[i] = true);
                    if cover[1..].iter().all(|&c| c) {
                        pairs.push((a.clone(), b.clone()));
                    }
                }
            }
            let mut counts = vec![0u64; size * size];
            for pi in Permutation::all(m) {
                for (a, b) in &pairs {
                    let s = pattern_of(&pi, a).unwrap().index;
                    let t = pattern_of(&pi, b).unwrap().index;
                    counts[s * size + t] += 1;
                }
            }
            let mf = BigInt::from(factorial(m));
            let c = RatMatrix::from_fn(size, size, |i, j| {
                BigRational::new(BigInt::from(counts[i * size + j]), mf.clone())
            });
            (m, c)
        })
        .collect()
}

/// `C(n,k)·E[P Pᵀ]` from the covering-pairs expansion.
fn covering_scaled(k: usize, n: usize, coeffs: &[(usize, RatMatrix)]) -> RatMatrix {
    let size = factorial(k) as usize;
    let cnk = rat_int(binomial(n, k).unwrap() as u64);
    RatMatrix::from_fn(size, size, |i, j| {
        let mut acc = BigRational::zero();
        for (m, c) in coeffs {
            acc += rat_int(binomial(n, *m).unwrap() as u64) * c.get(i, j);
        }
        acc / &cnk
    })
}

#[test]
fn printed_k2_second_moments() {
    let o = opts();
    assert_eq!(
        exact_second_moment_with(2, 2, &o).unwrap(),
        mat(&[&[(1, 2), (0, 1)], &[(0, 1), (1, 2)]])
    );
    assert_eq!(
        exact_second_moment_with(2, 3, &o).unwrap(),
        mat(&[&[(19, 54), (4, 27)], &[(4, 27), (19, 54)]])
    );
    assert_eq!(
        exact_second_moment_with(2, 4, &o).unwrap(),
        mat(&[&[(67, 216), (41, 216)], &[(41, 216), (67, 216)]])
    );
}

#[test]
fn printed_k2_polynomials_and_limits() {
    let m = interpolate_moments_with(2, &opts()).unwrap();
    let diag = RatPoly::new(vec![rat(5, 36), rat(-5, 72), rat(1, 8)]);
    let off = RatPoly::new(vec![rat(-5, 36), rat(-13, 72), rat(1, 8)]);
    assert_eq!(m.entry(0, 0), &diag);
    assert_eq!(m.entry(1, 1), &diag);
    assert_eq!(m.entry(0, 1), &off);
    assert_eq!(m.entry(1, 0), &off);
    assert_eq!(m.check_node, Some(5));

    let c = conjugate_and_normalize(&m, &build_u(2).unwrap()).unwrap();
    let p00 = QPoly::new(vec![QNum::zero(), q("-1/4"), q("1/4")]);
    assert_eq!(c.entry(0, 0), &p00);
    assert_eq!(c.tag(1, 1), (1, 1));
    let shown = QPoly::new(vec![QNum::zero(), q("5/18"), q("1/9")]);
    assert_eq!(c.normalized_entry(1, 1).unwrap(), shown);
    assert_eq!(c.limit(0, 0).unwrap(), q("1/2"));
    assert_eq!(c.limit(1, 1).unwrap(), q("2/9"));
    assert!(c.limit(0, 1).unwrap().is_zero());
}

#[test]
fn covering_pairs_agree_with_enumeration() {
    for k in 1..=3 {
        let coeffs = covering_coefficients(k);
        for n in k..=2 * k + 1 {
            let direct = count_moments(k, n, &opts()).unwrap().scaled_expectation();
            assert_eq!(direct, covering_scaled(k, n, &coeffs), "k={k} n={n}");
        }
        // The fitted polynomials agree far outside the enumerated range.
        let m = interpolate_moments_with(k, &opts()).unwrap();
        for n in [20, 57, 300] {
            assert_eq!(m.eval(n), covering_scaled(k, n, &coeffs), "k={k} n={n}");
        }
    }
}

#[test]
fn out_of_sample_node_reproduced() {
    for k in 1..=3 {
        let m = interpolate_moments_with(k, &opts()).unwrap();
        assert_eq!(m.check_node, Some(2 * k + 1));
        assert!(m.max_degree() <= k);
        let direct = count_moments(k, 2 * k + 1, &opts())
            .unwrap()
            .scaled_expectation();
        assert_eq!(m.eval(2 * k + 1), direct);
    }
}

#[test]
fn rows_sum_to_binomial_over_factorial() {
    for k in 2..=3 {
        let m = interpolate_moments_with(k, &opts()).unwrap();
        let size = m.size();
        let kf = rat_int(factorial(k) as u64);
        for n in [k, 2 * k, 40] {
            let e = m.eval(n);
            let expect = rat_int(binomial(n, k).unwrap() as u64) / &kf;
            for a in 0..size {
                let s = e.row(a).iter().fold(BigRational::zero(), |acc, x| acc + x);
                assert_eq!(s, expect);
            }
        }
        assert!(m.eval(7).is_symmetric());
    }
}

#[test]
fn normalized_limit_degree_rules() {
    let p = QPoly::new(vec![QNum::one(), q("2"), q("1/3")]);
    // Threshold k − (r+s)/2 = 2 for k = 3, r + s = 2.
    assert_eq!(normalized_limit(&p, 1, 1, 3).unwrap(), q("2"));
    assert!(normalized_limit(&p, 0, 0, 3).unwrap().is_zero());
    assert!(matches!(
        normalized_limit(&p, 1, 2, 3),
        Err(Error::Diverges {
            r: 1,
            s: 2,
            degree: 2
        })
    ));
    assert!(normalized_limit(&QPoly::zero(), 2, 2, 3).unwrap().is_zero());
}

#[test]
fn k3_diagonalization_passes() {
    let report = verify_diagonalization_with(3, &opts()).unwrap();
    assert!(report.pass);
    assert_eq!(report.offdiag_checked, 30);
    assert!(report.offdiag_violations.is_empty());
    assert_eq!(report.diagonal.len(), 6);
    assert!(report.diagonal.iter().all(|d| d.positive));
}

#[test]
fn k4_diagonalization_passes_with_rational_spectrum() {
    let report = verify_diagonalization_with(4, &opts()).unwrap();
    assert!(report.pass);
    assert_eq!(report.diagonal.len(), 24);
    assert!(report.diagonal.iter().all(|d| d.positive && d.rational));
    assert!(report.all_rational);
}

#[test]
fn covariance_limits() {
    let m2 = interpolate_moments_with(2, &opts()).unwrap();
    let c2 = cov_limit(&m2);
    assert_eq!(c2, mat(&[&[(1, 9), (-1, 9)], &[(-1, 9), (1, 9)]]));
    // vᵀC₂v for v = (1,−1)/√2 is the V₁ diagonal limit 2/9.
    let v = [rat(1, 1), rat(-1, 1)];
    let quad = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .fold(BigRational::zero(), |acc, (i, j)| {
            acc + &v[i] * c2.get(i, j) * &v[j]
        });
    assert_eq!(quad / rat(2, 1), rat(2, 9));
    assert!(check_cov_limit(&c2, 2));

    for k in 3..=4 {
        let m = interpolate_moments_with(k, &opts()).unwrap();
        let c = cov_limit(&m);
        assert!(c.is_symmetric());
        assert!(c.is_psd());
        assert_eq!(c.rank(), (k - 1) * (k - 1));
        assert!(check_cov_limit(&c, k));
        // n·cov at a large finite n approaches the limit.
        let n = 100_000usize;
        let e = m.eval(n);
        let cnk = rat_int(binomial(n, k).unwrap() as u64);
        let kf2 = rat_int((factorial(k) * factorial(k)) as u64);
        for i in 0..m.size() {
            for j in 0..m.size() {
                let ncov = (e.get(i, j) / &cnk - BigRational::one() / &kf2) * rat_int(n as u64);
                let diff = permprof::combinat::rat_to_f64(&(ncov - c.get(i, j)));
                assert!(diff.abs() < 1e-3, "k={k} ({i},{j}) off by {diff}");
            }
        }
    }
}

#[test]
fn v1_diagonal_limits_match_covariance() {
    let m = interpolate_moments_with(3, &opts()).unwrap();
    let c = cov_limit(&m);
    let u = build_u(3).unwrap();
    let conj = conjugate_and_normalize(&m, &u).unwrap();
    for &col in u.block(1) {
        let v = u.column(col);
        let mut acc = QNum::zero();
        for i in 0..6 {
            for j in 0..6 {
                acc += &(&v[i] * &v[j]).scale(c.get(i, j));
            }
        }
        assert_eq!(conj.limit(col, col).unwrap(), acc);
    }
}

#[test]
fn cost_cap_and_cache() {
    let o = MomentOptions::default();
    assert!(matches!(count_moments(2, 11, &o), Err(e) if e.is_budget()));
    assert!(count_moments(3, 2, &o).is_err());
    let dir = std::env::temp_dir().join(format!("permprof-cache-{}", std::process::id()));
    let cached = MomentOptions {
        cache_dir: Some(dir.clone()),
        ..MomentOptions::default()
    };
    let first = count_moments(3, 6, &cached).unwrap();
    assert!(dir.join("moments-k3-n6.json").exists());
    let second = count_moments(3, 6, &cached).unwrap();
    assert_eq!(first, second);
    assert_eq!(first, count_moments(3, 6, &o).unwrap());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
#[ignore = "long: enumerates S_10"]
fn k5_diagonalization_passes() {
    let report = verify_diagonalization_with(5, &MomentOptions::default()).unwrap();
    assert!(report.pass);
    assert_eq!(report.diagonal.len(), 120);
    assert!(report.diagonal.iter().all(|d| d.positive));
    eprintln!("k=5 spectrum all rational: {}", report.all_rational);
}
