use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use permprof::combinat::{binomial, rat};
use permprof::moments::{interpolate_moments_with, MomentOptions};
use permprof::montecarlo::estimate_projection_moment;
use permprof::perm::sample_uniform;
use permprof::stats::*;
use permprof::{Error, Permutation, QNum};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn perm(s: &str) -> Permutation {
    s.parse().unwrap()
}

fn classical_tau(p: &Permutation) -> BigRational {
    let v = p.images();
    let n = v.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += if v[j] > v[i] { 1 } else { -1 };
        }
    }
    BigRational::new(s.into(), (binomial(n, 2).unwrap() as i64).into())
}

fn classical_rho(p: &Permutation) -> BigRational {
    let n = p.len() as i64;
    let d2: i64 = p
        .images()
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as i64 + 1 - v as i64).pow(2))
        .sum();
    BigRational::from_integer(1.into()) - rat(6 * d2, n * (n * n - 1))
}

/// Hoeffding's D from its classical rank formula.
fn classical_hoeffding(p: &Permutation) -> BigRational {
    let v = p.images();
    let n = v.len() as i64;
    let (mut q, mut r, mut s) = (0i64, 0i64, 0i64);
    for i in 0..v.len() {
        let ri = i as i64 + 1;
        let si = v[i] as i64;
        let c = (0..i).filter(|&j| v[j] < v[i]).count() as i64;
        q += (ri - 1) * (ri - 2) * (si - 1) * (si - 2);
        r += (ri - 2) * (si - 2) * c;
        s += c * (c - 1);
    }
    rat(
        q - 2 * (n - 2) * r + (n - 2) * (n - 3) * s,
        n * (n - 1) * (n - 2) * (n - 3) * (n - 4),
    )
}

#[test]
fn tau_matches_concordance_count_on_s6() {
    for p in Permutation::all(6) {
        assert_eq!(kendall_tau(&p).unwrap(), classical_tau(&p), "{p}");
    }
}

#[test]
fn rho_matches_rank_difference_formula() {
    for p in Permutation::all(5) {
        assert_eq!(spearman_rho(&p).unwrap(), classical_rho(&p), "{p}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let p = sample_uniform(50, &mut rng).unwrap();
        assert_eq!(spearman_rho(&p).unwrap(), classical_rho(&p));
    }
}

#[test]
fn delta_worked_value_and_complement() {
    assert_eq!(fisher_lee_delta(&perm("4 1 2 5 3")).unwrap(), rat(1, 5));
    for p in Permutation::all(5) {
        assert_eq!(
            fisher_lee_delta(&p.complement()).unwrap(),
            -fisher_lee_delta(&p).unwrap()
        );
    }
}

#[test]
fn bd_from_four_and_five_patterns_agree() {
    let nine_tenths = rat(9, 10);
    for n in [6, 7] {
        for p in Permutation::all(n) {
            assert_eq!(
                alpha_statistic(&p, &nine_tenths).unwrap(),
                bergsma_dassios(&p).unwrap(),
                "{p}"
            );
        }
    }
}

#[test]
fn bd_is_affine_in_eight_pattern_density() {
    // Fit on the identity and one permutation with a different density.
    let a = perm("1 2 3 4 5 6");
    let b = perm("4 1 2 5 3 6");
    let (xa, ya) = (bergsma_dassios_8(&a).unwrap(), bergsma_dassios(&a).unwrap());
    let (xb, yb) = (bergsma_dassios_8(&b).unwrap(), bergsma_dassios(&b).unwrap());
    assert_ne!(xa, xb);
    let ya = ya.to_rational().unwrap();
    let yb = yb.to_rational().unwrap();
    let slope = (&ya - &yb) / (&xa - &xb);
    let icpt = &ya - &slope * &xa;
    assert_eq!(slope, rat(3, 2));
    assert_eq!(icpt, rat(-1, 2));
    for n in [4, 5, 6, 7] {
        for p in Permutation::all(n) {
            let lhs = bergsma_dassios(&p).unwrap();
            let rhs = &slope * bergsma_dassios_8(&p).unwrap() + &icpt;
            assert_eq!(lhs, QNum::from(rhs), "{p}");
        }
    }
}

#[test]
fn hoeffding_d_matches_classical_formula() {
    for n in [5, 6, 7] {
        for p in Permutation::all(n) {
            assert_eq!(
                hoeffding_d(&p).unwrap(),
                QNum::from(classical_hoeffding(&p)),
                "{p}"
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let p = sample_uniform(25, &mut rng).unwrap();
        assert_eq!(
            hoeffding_d(&p).unwrap(),
            QNum::from(classical_hoeffding(&p))
        );
    }
}

#[test]
fn bkr_b_lies_on_the_line_through_d_and_bd() {
    // The family is affine in α; D and BD pin it at α = 1/2 and 9/10.
    for n in [5, 6, 7] {
        for p in Permutation::all(n) {
            let d = QNum::from(classical_hoeffding(&p));
            let bd = QNum::from(rat(3, 2) * bergsma_dassios_8(&p).unwrap() - rat(1, 2));
            let expect = bd.scale(&rat(5, 1)) - d.scale(&rat(120, 1));
            assert_eq!(bkr_b(&p).unwrap(), expect, "{p}");
        }
    }
}

#[test]
fn null_means_vanish_exhaustively() {
    for stat in Statistic::ALL {
        for n in stat.k()..=7 {
            let mut sum = QNum::zero();
            for p in Permutation::all(n) {
                sum += &stat.evaluate(&p).unwrap();
            }
            assert!(sum.is_zero(), "{stat} n={n}: {sum}");
        }
    }
}

#[test]
fn float_vectors_match_exact_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for stat in Statistic::ALL {
        let p = sample_uniform(12, &mut rng).unwrap();
        let v = stat.vector_f64(12).unwrap();
        let x = permprof::profile(&p, stat.k()).unwrap().project_f64(&v);
        assert!(
            (x - stat.evaluate(&p).unwrap().to_f64()).abs() < 1e-12,
            "{stat}"
        );
    }
}

#[test]
fn statistic_names_round_trip() {
    for stat in Statistic::ALL {
        assert_eq!(stat.name().parse::<Statistic>().unwrap(), stat);
        assert_eq!(
            stat.to_string()
                .to_uppercase()
                .parse::<Statistic>()
                .unwrap(),
            stat
        );
    }
    assert!(matches!("kappa".parse::<Statistic>(), Err(Error::Parse(_))));
}

#[test]
fn small_n_rejected() {
    assert!(matches!(
        hoeffding_d(&perm("1 2 3 4")),
        Err(Error::InvalidParameter(_))
    ));
    assert!(matches!(
        kendall_tau(&perm("1")),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn pvalues() {
    let id = Permutation::identity(30);
    let obs = kendall_tau(&id).unwrap();
    let pv = null_pvalue(
        Statistic::Tau,
        permprof::combinat::rat_to_f64(&obs),
        30,
        999,
        1,
        DEFAULT_NULL_BUDGET,
    )
    .unwrap();
    assert_eq!(pv.exceed, 0);
    assert_eq!(pv.p_value, 1.0 / 1000.0);
    // Observed zero is matched by every draw.
    let pv = null_pvalue(Statistic::Rho, 0.0, 30, 200, 2, DEFAULT_NULL_BUDGET).unwrap();
    assert_eq!(pv.p_value, 1.0);
    // Deterministic in the seed.
    let a = null_pvalue(Statistic::Bd, 0.05, 20, 300, 9, DEFAULT_NULL_BUDGET).unwrap();
    let b = null_pvalue(Statistic::Bd, 0.05, 20, 300, 9, DEFAULT_NULL_BUDGET).unwrap();
    assert_eq!(a, b);
    assert!(a.p_value > 0.0 && a.p_value <= 1.0);
    assert!(null_pvalue(Statistic::Tau, 0.1, 30, 50, 1, DEFAULT_NULL_BUDGET).is_err());
    let err = null_pvalue(Statistic::D, 0.1, 200, 1000, 1, DEFAULT_NULL_BUDGET).unwrap_err();
    assert!(err.is_budget());
}

#[test]
fn run_test_reports_exact_text() {
    let r = run_test(Statistic::Delta, &perm("4 1 2 5 3"), false, None).unwrap();
    assert_eq!(r.statistic, "1/5");
    assert_eq!(r.n, 5);
    assert!((r.value - 0.2).abs() < 1e-15);
    let r = run_test(
        Statistic::Tau,
        &Permutation::identity(10),
        false,
        Some((199, 4)),
    )
    .unwrap();
    assert_eq!(r.p_value.unwrap().samples, 199);
}

#[test]
fn quasirandom_score_calibration() {
    assert_eq!(
        quasirandom_score(&Permutation::identity(9)).unwrap(),
        QNum::from_int(1)
    );
    // Exact E⟨R²²₂₂, P₄⟩² at n = 40 from the fitted moment polynomials.
    let m = interpolate_moments_with(4, &MomentOptions::default()).unwrap();
    let v = matrix_element(&"22".parse().unwrap(), 2, 2).unwrap();
    let vr: Vec<BigRational> = v.iter().map(|x| x.to_rational().unwrap()).collect();
    let n = 40;
    let e = m.eval(n);
    let mut acc = BigRational::zero();
    for i in 0..24 {
        for j in 0..24 {
            acc += &vr[i] * e.get(i, j) * &vr[j];
        }
    }
    let exact =
        permprof::combinat::rat_to_f64(&(acc / BigInt::from(binomial(n, 4).unwrap() as u64)));
    let vf: Vec<f64> = v.iter().map(QNum::to_f64).collect();
    let est = estimate_projection_moment(4, &vf, n, 20_000, 5).unwrap();
    let z = (est.second_moment - exact) / est.second_moment_se;
    assert!(
        z.abs() < 4.0,
        "exact {exact} estimate {} z {z}",
        est.second_moment
    );
}

#[test]
fn csv_ingestion() {
    let s = PairedSample::from_csv("y,z\n1.0,2\n3, 1.5\n2,9\n".as_bytes(), b',').unwrap();
    assert_eq!(s.rows, vec![(1.0, 2.0), (3.0, 1.5), (2.0, 9.0)]);
    let p = ranks_to_perm(&s, TiePolicy::Error).unwrap();
    assert_eq!(p.perm, perm("2 3 1"));
    let s = PairedSample::from_csv("1;2\n2;1\n".as_bytes(), b';').unwrap();
    assert_eq!(s.len(), 2);
    for bad in [
        "1,2\n\n3,4\n",
        "1,2\n3,NaN\n",
        "1,2\n3,\n",
        "1,2,3\n",
        "1,2\nx,y\n",
        "y,z\n",
    ] {
        assert!(
            matches!(
                PairedSample::from_csv(bad.as_bytes(), b','),
                Err(Error::Parse(_))
            ),
            "{bad:?}"
        );
    }
}

#[test]
fn tie_policies() {
    let s = PairedSample::new(vec![(1.0, 1.0), (2.0, 1.0), (3.0, 2.0)]);
    assert!(matches!(
        ranks_to_perm(&s, TiePolicy::Error),
        Err(Error::TiesPresent { column: "z" })
    ));
    let a = ranks_to_perm(&s, TiePolicy::RandomBreak { seed: 5 }).unwrap();
    assert!(a.ties_broken);
    assert_eq!(a.perm.images()[2], 3);
    assert_eq!(
        a,
        ranks_to_perm(&s, TiePolicy::RandomBreak { seed: 5 }).unwrap()
    );
    let clean = PairedSample::new(vec![(0.0, 1.0), (1.0, 0.0)]);
    assert!(
        !ranks_to_perm(&clean, TiePolicy::RandomBreak { seed: 1 })
            .unwrap()
            .ties_broken
    );
}

proptest! {
    #[test]
    fn monotone_transforms_leave_statistics_unchanged(
        rows in prop::collection::btree_map(-1000i32..1000, -1000i32..1000, 6..14)
    ) {
        let pairs: Vec<(f64, f64)> = rows.iter().map(|(&y, &z)| (y as f64, z as f64 + y as f64 * 1e-4)).collect();
        let s = PairedSample::new(pairs.clone());
        let t = PairedSample::new(pairs.iter().map(|&(y, z)| ((y / 300.0).exp(), z * z * z + 2.0 * z)).collect());
        let p = ranks_to_perm(&s, TiePolicy::RandomBreak { seed: 0 }).unwrap();
        let q = ranks_to_perm(&t, TiePolicy::RandomBreak { seed: 0 }).unwrap();
        prop_assert_eq!(&p.perm, &q.perm);
        for stat in [Statistic::Tau, Statistic::Rho, Statistic::Bd] {
            prop_assert_eq!(stat.evaluate(&p.perm).unwrap(), stat.evaluate(&q.perm).unwrap());
        }
    }

    #[test]
    fn symmetries_under_reversal_and_complement(n in 5usize..12, seed in any::<u64>()) {
        let p = sample_uniform(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(kendall_tau(&p.reversed()).unwrap(), -kendall_tau(&p).unwrap());
        prop_assert_eq!(spearman_rho(&p.complement()).unwrap(), -spearman_rho(&p).unwrap());
        prop_assert_eq!(bergsma_dassios(&p.reversed()).unwrap(), bergsma_dassios(&p).unwrap());
    }
}

#[test]
fn quasirandom_score_of_identity_stays_away_from_zero() {
    for n in [8, 16, 32] {
        assert_eq!(
            quasirandom_score(&Permutation::identity(n)).unwrap(),
            QNum::from_int(1)
        );
    }
    // The matrix element is orthogonal to the constant direction.
    let v = matrix_element(&"22".parse().unwrap(), 2, 2).unwrap();
    let total = v.iter().fold(QNum::zero(), |acc, x| acc + x);
    assert!(total.is_zero());
}

#[test]
fn perfect_concordance_is_rare_under_the_null() {
    let pv = null_pvalue(Statistic::Tau, 1.0, 10, 10_000, 77, DEFAULT_NULL_BUDGET).unwrap();
    assert!(pv.p_value <= 10.0 / 10_001.0, "{}", pv.p_value);
}

#[test]
fn delta_stays_in_unit_interval() {
    let one = rat(1, 1);
    for p in Permutation::all(6) {
        let d = fisher_lee_delta(&p).unwrap();
        assert!(d <= one && d >= -one.clone());
    }
    assert_eq!(fisher_lee_delta(&Permutation::reverse(7)).unwrap(), -one);
}
