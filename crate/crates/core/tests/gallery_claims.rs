use metrize::audit::{
    check_b_coefficient, check_nu_generalized, check_symmetry, check_triangle, coherence_tail_report, min_b_coefficient,
    COHERENCE_FLOOR, COHERENCE_TOL,
};
use metrize::chain::{chain_metric, set_chain_distance, SetChainProblem};
use metrize::gallery::*;
use metrize::{ClaimedClass, DistanceSpace, Exponent, Scalar};

fn claimed_k(space: &DistanceSpace) -> Scalar {
    match space.claimed_class() {
        ClaimedClass::BMetric(k) => k.clone(),
        other => panic!("expected a b-metric claim, got {other}"),
    }
}

fn d(space: &DistanceSpace, a: &str, b: &str) -> Scalar {
    space.get(space.index_of(a).unwrap(), space.index_of(b).unwrap()).clone()
}

#[test]
fn generators_are_deterministic() {
    assert_eq!(gen_square_line(9).unwrap(), gen_square_line(9).unwrap());
    assert_eq!(gen_example_399(10).unwrap(), gen_example_399(10).unwrap());
    assert_eq!(gen_noncoherent(7).unwrap(), gen_noncoherent(7).unwrap());
    assert_eq!(gen_au_counterexample(12, 5).unwrap().families, gen_au_counterexample(12, 5).unwrap().families);
    for kind in [RandomKind::Metric, RandomKind::TwoGen, RandomKind::BMetric(Exponent::ratio(2, 1))] {
        for seed in [0, 1, 99] {
            assert_eq!(gen_random(&kind, 7, seed).unwrap(), gen_random(&kind, 7, seed).unwrap());
        }
    }
    assert_ne!(gen_random(&RandomKind::Metric, 7, 1).unwrap(), gen_random(&RandomKind::Metric, 7, 2).unwrap());
}

#[test]
fn square_line_claims() {
    let s = gen_square_line(2).unwrap();
    assert_eq!(s.labels(), ["0", "1/2", "1"]);
    assert_eq!(d(&s, "0", "1"), Scalar::one());
    assert_eq!(d(&s, "0", "1/2"), Scalar::ratio(1, 4));
    for n in 1..=40 {
        let s = gen_square_line(n).unwrap();
        assert!(check_b_coefficient(&s, Some(&claimed_k(&s))).unwrap().passed(), "n = {n}");
        if n % 2 == 0 {
            assert_eq!(min_b_coefficient(&s).unwrap().k_min, Scalar::int(2), "n = {n}");
        }
    }
    assert_eq!(min_b_coefficient(&gen_square_line(64).unwrap()).unwrap().k_min, Scalar::int(2));
    assert!(gen_square_line(0).is_err());
}

#[test]
fn four_case_claims() {
    for n in (4..=40).step_by(2) {
        for s in [gen_example_399(n).unwrap(), gen_example_387(n).unwrap()] {
            assert!(check_symmetry(&s).passed());
            assert!(check_b_coefficient(&s, Some(&claimed_k(&s))).unwrap().passed(), "N = {n}");
        }
    }
    let s = gen_example_399(8).unwrap();
    assert_eq!(d(&s, "1", "1/2"), Scalar::int(4));
    assert_eq!(d(&s, "0", "1"), Scalar::one());
    assert_eq!(d(&s, "0", "1/4"), Scalar::ratio(1, 4));
    let t = gen_example_387(8).unwrap();
    assert_eq!(d(&t, "0", "1/2"), Scalar::ratio(1, 2));
    assert_eq!(d(&t, "1/3", "1/5"), Scalar::ratio(1, 4));
    // the coefficient of a truncation creeps up to 4 from below
    let ks: Vec<Scalar> =
        [4, 8, 16, 64].iter().map(|&n| min_b_coefficient(&gen_example_399(n).unwrap()).unwrap().k_min).collect();
    for w in ks.windows(2) {
        assert!(w[0].exact_cmp(&w[1]).is_lt());
    }
    assert_eq!(ks[3], Scalar::ratio(256, 65));
    assert!(gen_example_399(3).is_err());
    assert!(gen_example_399(7).is_err());
}

#[test]
fn lp_claims() {
    let v = |xs: &[i64]| xs.iter().map(|&x| Scalar::int(x)).collect::<Vec<_>>();
    let one_dim: Vec<Vec<Scalar>> = [0, 3, 7, -2, 5].iter().map(|&x| v(&[x])).collect();
    let lp = gen_lp_truncated(&Exponent::ratio(1, 2), &one_dim).unwrap();
    assert!(check_triangle(&lp.space).passed());
    let vectors = vec![v(&[0, 0]), v(&[1, 0]), v(&[0, 1]), v(&[1, 1]), v(&[3, -2]), v(&[-1, 4])];
    for p in [Exponent::ratio(1, 2), Exponent::ratio(1, 3), Exponent::one()] {
        let lp = gen_lp_truncated(&p, &vectors).unwrap();
        assert!(check_b_coefficient(&lp.space, Some(&claimed_k(&lp.space))).unwrap().passed());
        let dq = lp.space.raised(&lp.companion).unwrap();
        assert!(check_triangle(&dq).passed(), "p = {p}");
        let chain = chain_metric(&lp.space, &lp.companion).unwrap();
        for i in 0..vectors.len() {
            for j in 0..vectors.len() {
                assert!(chain.get(i, j).eq_tol(dq.get(i, j), 1e-12));
            }
        }
    }
    assert_eq!(claimed_k(&gen_lp_truncated(&Exponent::ratio(1, 2), &vectors).unwrap().space), Scalar::int(4));
    assert!(gen_lp_truncated(&Exponent::ratio(3, 2), &vectors).is_err());
}

#[test]
fn branciari_claims() {
    let s = gen_branciari4();
    assert!(check_nu_generalized(&s, 2).unwrap().passed());
    let tri = check_triangle(&s);
    assert!(!tri.passed());
    assert!(tri.witnesses.iter().any(|w| w.points == ["a", "c", "b"]));
}

#[test]
fn two_gen_slow_claims() {
    for n in 1..=12 {
        let s = gen_2gen_slow(n).unwrap();
        assert!(check_nu_generalized(&s, 2).unwrap().passed(), "N = {n}");
    }
    let s = gen_2gen_slow(8).unwrap();
    assert_eq!(d(&s, "1/3", "1/7"), Scalar::int(2));
    assert_eq!(d(&s, "0", "1"), Scalar::one());
    assert_eq!(d(&s, "1/8", "1"), Scalar::int(2));
}

#[test]
fn noncoherent_claims() {
    let ex = gen_noncoherent(12).unwrap();
    let s = &ex.space;
    for m in 1..=12i64 {
        let odd = Scalar::ratio(1, 2 * m + 1).to_string();
        let even = Scalar::ratio(1, 2 * m).to_string();
        assert_eq!(d(s, &odd, "0"), Scalar::one());
        assert_eq!(d(s, &even, &odd), &Scalar::ratio(1, 2 * m) - &Scalar::ratio(1, 2 * m + 1));
    }
    // a short prefix has its tail at 1/20, not below the tolerance
    let diag = coherence_tail_report(&ex.seq_aan, &ex.seq_anbn, &ex.seq_abn, COHERENCE_TOL, COHERENCE_FLOOR).unwrap();
    assert!(!diag.flagged);
    let ex = gen_noncoherent(20).unwrap();
    let diag = coherence_tail_report(&ex.seq_aan, &ex.seq_anbn, &ex.seq_abn, COHERENCE_TOL, COHERENCE_FLOOR).unwrap();
    assert!(diag.flagged);
}

#[test]
fn au_counterexample_claims() {
    for levels in 1..=12u32 {
        let ex = gen_au_counterexample(64, levels).unwrap();
        let last = ex.points.len() - 1;
        let res = set_chain_distance(&SetChainProblem { families: ex.families, a: 0, b: last });
        let bound = &Scalar::int(levels as i64 + 1) * &Scalar::inv_pow2(levels);
        let got = res.distance.expect("chains exist");
        assert!(got.exact_cmp(&bound).is_le(), "levels {levels}: {got} > {bound}");
    }
    let one = gen_au_counterexample(8, 1).unwrap();
    let res = set_chain_distance(&SetChainProblem { families: one.families, a: 0, b: 8 });
    assert!(res.distance.unwrap().exact_cmp(&Scalar::one()).is_le());
}

#[test]
fn random_kind_claims() {
    for seed in 0..40 {
        let m = gen_random(&RandomKind::Metric, 9, seed).unwrap();
        assert!(check_triangle(&m).passed());
        let t = gen_random(&RandomKind::TwoGen, 8, seed).unwrap();
        assert!(check_nu_generalized(&t, 2).unwrap().passed());
        let b = gen_random(&RandomKind::BMetric(Exponent::ratio(2, 1)), 9, seed).unwrap();
        assert!(min_b_coefficient(&b).unwrap().k_min.exact_cmp(&Scalar::int(2)).is_le());
    }
    assert!(gen_random(&RandomKind::Metric, 1, 0).is_err());
    assert!(gen_random(&RandomKind::BMetric(Exponent::ratio(4, 1)), 4, 0).is_err());
}
