//! Acceptance criteria, one line each. Run with `cargo test --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use metrize::audit::{
    check_generalized_triangle, check_nu_generalized, check_triangle, coherence_tail_report, min_b_coefficient, COHERENCE_FLOOR,
    COHERENCE_TOL,
};
use metrize::chain::{
    chain_metric, chain_metric_with, set_chain_distance, snowflake_exponent, Regime, SandwichVerdict, SetChainProblem,
};
use metrize::discretize::{
    au_distance, check_au_conditions, chittenden_discretize, nw_ball_families, two_gen_discretize, ChittendenOptions,
};
use metrize::fixed_point::{
    banach_iterate_coord, contraction_modulus, geometric_decay_check, induced_contraction_check, CoordMap, DistanceRule, Orbit,
};
use metrize::gallery::*;
use metrize::space::make_space;
use metrize::threshold::{LocalThreshold, Threshold};
use metrize::{ClaimedClass, DistanceSpace, Exponent, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-12;
const INSTANCES: u64 = 1000;

/// Outcome of one criterion: sub-check lines, all of which must hold.
#[derive(Default)]
struct Checks {
    failed: Vec<String>,
    passed: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if ok {
            self.passed.push(what.into());
        } else {
            self.failed.push(what.into());
        }
    }
}

/// Exact single-source shortest paths on weights `D^p` (Dijkstra, dense).
fn dijkstra(space: &DistanceSpace, p: &Exponent, src: usize) -> Vec<Scalar> {
    let n = space.len();
    let mut dist: Vec<Option<Scalar>> = vec![None; n];
    let mut done = vec![false; n];
    dist[src] = Some(Scalar::zero());
    for _ in 0..n {
        let u = (0..n)
            .filter(|&v| !done[v] && dist[v].is_some())
            .min_by(|&a, &b| dist[a].as_ref().unwrap().exact_cmp(dist[b].as_ref().unwrap()))
            .unwrap();
        done[u] = true;
        let du = dist[u].clone().unwrap();
        for v in 0..n {
            if v == u || done[v] {
                continue;
            }
            let cand = &du + &space.get(u, v).pow(p);
            if dist[v].as_ref().is_none_or(|d| cand.exact_cmp(d).is_lt()) {
                dist[v] = Some(cand);
            }
        }
    }
    dist.into_iter().map(Option::unwrap).collect()
}

fn at(space: &DistanceSpace, a: &str, b: &str) -> (usize, usize) {
    (space.index_of(a).unwrap(), space.index_of(b).unwrap())
}

fn cbrt(x: f64) -> f64 {
    x.cbrt()
}

fn c1_snowflake() -> Checks {
    let mut c = Checks::default();
    let p2 = snowflake_exponent(&Scalar::int(2)).unwrap();
    let p4 = snowflake_exponent(&Scalar::int(4)).unwrap();
    c.check(p2 == Exponent::ratio(1, 2) && matches!(p2, Exponent::Rational(_)), format!("p(2) = {p2}"));
    c.check(p4 == Exponent::ratio(1, 3) && matches!(p4, Exponent::Rational(_)), format!("p(4) = {p4}"));
    c
}

fn c2_square_line() -> Checks {
    let mut c = Checks::default();
    for n in [4u32, 16, 64] {
        let s = gen_square_line(n).unwrap();
        let d = chain_metric(&s, &Exponent::one()).unwrap();
        let (i0, i1) = at(&s, "0", "1");
        let oracle = &dijkstra(&s, &Exponent::one(), i0)[i1];
        let got = d.get(i0, i1);
        c.check(*got == Scalar::ratio(1, n as i64) && got == oracle, format!("n={n}: d(0,1) = {got}"));
    }
    let s = gen_square_line(64).unwrap();
    let d = chain_metric(&s, &Exponent::ratio(1, 2)).unwrap();
    let xs: Vec<f64> = s.labels().iter().map(|l| l.parse::<Scalar>().unwrap().to_f64()).collect();
    let mut worst = 0f64;
    for i in 0..s.len() {
        for j in 0..s.len() {
            worst = worst.max((d.get(i, j).to_f64() - (xs[i] - xs[j]).abs()).abs());
        }
    }
    c.check(worst <= TOL, format!("p=1/2: max |d - |x-y|| = {worst:.1e}"));
    c
}

fn c3_example_399() -> Checks {
    let mut c = Checks::default();
    let s = gen_example_399(64).unwrap();
    let k = min_b_coefficient(&s).unwrap().k_min;
    c.check(k == Scalar::int(4), format!("K_min = {k} (expected 4)"));
    let p = Exponent::ratio(1, 3);
    let d = chain_metric(&s, &p).unwrap();
    let four_third = cbrt(4.0);
    for (a, b, want) in [("0", "1", 1.0), ("1/3", "1/5", four_third), ("1", "1/8", 1.5), ("1", "1/2", four_third)] {
        let (i, j) = at(&s, a, b);
        let got = d.get(i, j).to_f64();
        let oracle = dijkstra(&s, &p, i)[j].to_f64();
        c.check((got - want).abs() <= TOL && (got - oracle).abs() <= TOL, format!("d({a},{b}) = {got:.15}"));
    }
    c
}

fn c4_example_387() -> Checks {
    let mut c = Checks::default();
    let p = Exponent::ratio(1, 3);
    let quarter = cbrt(0.25);
    let mut prev = f64::INFINITY;
    for n in [16u32, 64] {
        let s = gen_example_387(n).unwrap();
        let d = chain_metric(&s, &p).unwrap();
        let (i, j) = at(&s, "1/3", "1/5");
        let got = d.get(i, j).to_f64();
        c.check((got - quarter).abs() <= TOL, format!("N={n}: d(1/3,1/5) = {got:.15}"));
        let (i, j) = at(&s, "0", "1");
        let d01 = d.get(i, j).to_f64();
        let oracle = dijkstra(&s, &p, i)[j].to_f64();
        let hi = quarter + cbrt(2.0 / n as f64);
        c.check(
            d01 > quarter && d01 <= hi + TOL && d01 < prev && (d01 - oracle).abs() <= TOL,
            format!("N={n}: d(0,1) = {d01:.6} in ({quarter:.6}, {hi:.6}]"),
        );
        prev = d01;
    }
    c
}

fn c5_branciari() -> Checks {
    let mut c = Checks::default();
    let s = gen_branciari4();
    c.check(check_nu_generalized(&s, 2).unwrap().passed(), "nu=2 passes");
    let tri = check_triangle(&s);
    c.check(!tri.passed() && tri.witnesses.iter().any(|w| w.points == ["a", "c", "b"]), "triangle fails at (a,c,b)");
    let res = two_gen_discretize(&s).unwrap();
    let off_diag_one =
        (0..4).all(|i| (0..4).all(|j| *res.space.get(i, j) == if i == j { Scalar::zero() } else { Scalar::one() }));
    c.check(off_diag_one, "discretized D = 1 off the diagonal");
    let d = chain_metric(&res.space, &Exponent::one()).unwrap();
    c.check(d.as_space().entries() == res.space.entries(), "chain metric d = D");
    c
}

fn c6_set_chain() -> Checks {
    let mut c = Checks::default();
    let ex = gen_au_counterexample(64, 20).unwrap();
    let b = ex.points.len() - 1;
    let res = set_chain_distance(&SetChainProblem { families: ex.families, a: 0, b });
    let bound = Scalar::ratio(21, 1 << 20);
    match res.distance {
        Some(dist) => c.check(dist.exact_cmp(&bound).is_le(), format!("distance {dist} = {:.4e} <= 21/2^20", dist.to_f64())),
        None => c.check(false, "no chain"),
    }
    c
}

/// Points `c^k`, `k = 0..=m`, under `|x-y|^q` with the shift that fixes `c^m`.
fn random_contraction(rng: &mut ChaCha8Rng) -> (DistanceSpace, Vec<usize>) {
    let b = rng.random_range(2..=9i64);
    let a = rng.random_range(1..b);
    let m = rng.random_range(1..=9usize);
    let q = rng.random_range(1..=2u32);
    let c = Scalar::ratio(a, b);
    let pts: Vec<Scalar> = (0..=m).map(|k| (0..k).fold(Scalar::one(), |acc, _| &acc * &c)).collect();
    let grid = (0..=m)
        .map(|i| {
            (0..=m)
                .map(|j| {
                    let g = (&pts[i] - &pts[j]).abs();
                    (0..q).fold(Scalar::one(), |acc, _| &acc * &g)
                })
                .collect()
        })
        .collect();
    let space = make_space((0..=m).map(|k| format!("c^{k}")).collect(), grid, ClaimedClass::RawDistance).unwrap();
    let map = (0..=m).map(|k| (k + 1).min(m)).collect();
    (space, map)
}

fn c7_properties() -> Checks {
    let mut c = Checks::default();
    let size = |seed: u64| 2 + (seed % 9) as usize;

    let a = (0..INSTANCES)
        .filter(|&s| {
            let q = Exponent::ratio(1 + (s % 3) as i64, 1);
            let sp = gen_random(&RandomKind::BMetric(q), size(s), s).unwrap();
            check_triangle(&chain_metric(&sp, &Exponent::one()).unwrap().as_space()).passed()
        })
        .count();
    c.check(a as u64 == INSTANCES, format!("(a) {a}/{INSTANCES}"));

    let b = (0..INSTANCES)
        .filter(|&s| {
            let sp = gen_random(&RandomKind::Metric, size(s), s).unwrap();
            chain_metric(&sp, &Exponent::one()).unwrap().as_space().entries() == sp.entries()
        })
        .count();
    c.check(b as u64 == INSTANCES, format!("(b) {b}/{INSTANCES}"));

    let pc = (0..INSTANCES)
        .filter(|&s| {
            let q = 1 + (s % 3) as u32;
            let sp = gen_random(&RandomKind::BMetric(Exponent::ratio(q as i64, 1)), size(s), s).unwrap();
            let k = Scalar::int(1 << (q - 1));
            let p = snowflake_exponent(&k).unwrap();
            chain_metric_with(&sp, &p, Regime::Ps { k: Some(k) }).unwrap().sandwich.verdict == SandwichVerdict::Pass
        })
        .count();
    c.check(pc as u64 == INSTANCES, format!("(c) {pc}/{INSTANCES}"));

    let kinds = [RandomKind::Metric, RandomKind::TwoGen, RandomKind::BMetric(Exponent::ratio(2, 1))];
    let (mut seen, mut ok, mut s) = (0u64, 0u64, 0u64);
    while seen < INSTANCES && s < 20 * INSTANCES {
        let sp = gen_random(&kinds[(s % 3) as usize], size(s), s).unwrap();
        s += 1;
        if !check_generalized_triangle(&sp, false).passed() {
            continue;
        }
        seen += 1;
        let r = chain_metric_with(&sp, &Exponent::one(), Regime::FrinkIv).unwrap();
        ok += (r.sandwich.verdict == SandwichVerdict::Pass) as u64;
    }
    c.check(seen == INSTANCES && ok == seen, format!("(d) {ok}/{seen}"));

    let (mut e_ok, mut e_total) = (0u64, 0u64);
    for s in 0..INSTANCES {
        let q = 1 + (s % 3) as u32;
        let sp = gen_random(&RandomKind::BMetric(Exponent::ratio(q as i64, 1)), size(s), s).unwrap();
        let t = Threshold::b_metric(&Scalar::int(1 << (q - 1)));
        let ch = chittenden_discretize(&sp, &t, ChittendenOptions::default()).unwrap();
        e_total += 1;
        e_ok += check_generalized_triangle(&ch.space, false).passed() as u64;
        let (fam, _) = nw_ball_families(&sp, &LocalThreshold::Uniform(t), 6).unwrap();
        let [fa, fb, _] = check_au_conditions(&fam);
        if fa.passed() && fb.passed() {
            e_total += 1;
            e_ok += check_generalized_triangle(&au_distance(&fam).unwrap(), false).passed() as u64;
        }
        let tg = gen_random(&RandomKind::TwoGen, size(s), s).unwrap();
        e_total += 1;
        e_ok += check_generalized_triangle(&two_gen_discretize(&tg).unwrap().space, false).passed() as u64;
    }
    c.check(e_ok == e_total, format!("(e) {e_ok}/{e_total}"));

    let f = (0..INSTANCES)
        .filter(|&s| {
            let sp = gen_random(&RandomKind::TwoGen, size(s), s).unwrap();
            let out = two_gen_discretize(&sp).unwrap();
            chain_metric(&out.space, &Exponent::one()).unwrap().degenerate_pairs.is_empty()
        })
        .count();
    c.check(f as u64 == INSTANCES, format!("(f) {f}/{INSTANCES}"));

    let g = (0..INSTANCES)
        .filter(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let (sp, map) = random_contraction(&mut rng);
            let lambda = contraction_modulus(&sp, &map).unwrap();
            let p = [Exponent::one(), Exponent::ratio(1, 2), Exponent::ratio(1, 3)][(s % 3) as usize].clone();
            lambda.exact_cmp(&Scalar::one()).is_lt() && induced_contraction_check(&sp, &map, &p).unwrap().passed()
        })
        .count();
    c.check(g as u64 == INSTANCES, format!("(g) {g}/{INSTANCES}"));
    c
}

fn c8_fixed_point() -> Checks {
    let mut c = Checks::default();
    let map = CoordMap::affine(Scalar::ratio(4, 5), Scalar::zero(), Scalar::zero(), Scalar::one()).unwrap();
    let rule = DistanceRule::pow(Exponent::ratio(2, 1)).unwrap();
    let tol: Scalar = "1e-12".parse().unwrap();
    let trace = banach_iterate_coord(&map, &rule, &Scalar::one(), &tol, 70).unwrap();
    let Orbit::Coord(xs) = &trace.iterates else { unreachable!() };
    let last = xs.last().unwrap().to_f64();
    c.check(
        last.abs() <= 1e-6 && trace.step_dists.len() <= 70,
        format!("|x*| = {last:.2e} after {} iterations", trace.step_dists.len()),
    );
    let decay = geometric_decay_check(&trace, &Scalar::ratio(16, 25), TOL);
    c.check(decay.pass, "geometric decay with lambda = 0.64");
    c.check(trace.lambda_hat == Scalar::ratio(16, 25), format!("lambda_D = {}", trace.lambda_hat));
    c.check(trace.notes.iter().any(|n| n.contains("not below 1/K = 1/2")), "note: lambda_D exceeds 1/K");
    c
}

fn c9_noncoherent() -> Checks {
    let mut c = Checks::default();
    let ex = gen_noncoherent(50).unwrap();
    let diag = coherence_tail_report(&ex.seq_aan, &ex.seq_anbn, &ex.seq_abn, COHERENCE_TOL, COHERENCE_FLOOR).unwrap();
    let [t1, t2, t3] = diag.tail_max;
    c.check(t1 <= 0.01, format!("tail max rho(a,a_n) = {t1:.5} <= 1/100"));
    c.check(t2 <= 0.01, format!("tail max rho(a_n,b_n) = {t2:.2e} <= 1/100"));
    c.check(t3 == 1.0, format!("tail max rho(a,b_n) = {t3}"));
    c.check(diag.flagged, "flag raised");
    c
}

fn c10_chittenden() -> Checks {
    let mut c = Checks::default();
    let s = gen_square_line(16).unwrap();
    let res = chittenden_discretize(&s, &Threshold::b_metric(&Scalar::int(2)), ChittendenOptions::default()).unwrap();
    let ladder_ok =
        res.ladder.values.iter().enumerate().all(|(i, r)| *r == (0..i).fold(Scalar::one(), |acc, _| &acc * &Scalar::ratio(1, 4)));
    c.check(ladder_ok, format!("ladder r_n = 4^(1-n) over {} rungs", res.ladder.len()));
    c.check(check_generalized_triangle(&res.space, false).passed(), "output passes (IV)");
    let d = chain_metric(&res.space, &Exponent::one()).unwrap();
    c.check(d.degenerate_pairs.is_empty(), "chain metric has no degenerate pairs");
    c
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Checks); 10] = [
        ("snowflake exponents", c1_snowflake),
        ("squared-line collapse", c2_square_line),
        ("example 399 at N=64, p=1/3", c3_example_399),
        ("example 387 at N=16,64, p=1/3", c4_example_387),
        ("branciari pipeline", c5_branciari),
        ("set-chain degeneracy", c6_set_chain),
        ("property suites (a)-(g)", c7_properties),
        ("fixed point 0.8x under |x-y|^2", c8_fixed_point),
        ("non-coherence diagnostic", c9_noncoherent),
        ("chittenden on squared line", c10_chittenden),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let ms = t.elapsed().as_millis();
        match outcome {
            Ok(c) if c.failed.is_empty() => println!("PASS {:>2} {name} ({ms} ms): {}", i + 1, c.passed.join("; ")),
            Ok(c) => {
                failures += 1;
                println!(
                    "FAIL {:>2} {name} ({ms} ms): failed [{}]; passed [{}]",
                    i + 1,
                    c.failed.join("; "),
                    c.passed.join("; ")
                );
            }
            Err(_) => {
                failures += 1;
                println!("FAIL {:>2} {name} ({ms} ms): panicked", i + 1);
            }
        }
    }
    let total = start.elapsed().as_secs_f64();
    let fast = total < 10.0;
    println!("{} total runtime {total:.2} s (limit 10 s)", if fast { "PASS" } else { "FAIL" });
    if !fast {
        failures += 1;
    }
    println!("{failures} failing line(s)");
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
