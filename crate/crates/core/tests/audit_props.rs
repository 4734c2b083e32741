use metrize::audit::{check_generalized_triangle, check_nu_generalized, check_triangle, min_b_coefficient};
use metrize::gallery::{gen_random, RandomKind};
use metrize::space::make_space;
use metrize::{ClaimedClass, DistanceSpace, Exponent, Scalar};
use proptest::prelude::*;

fn raw_space() -> impl Strategy<Value = DistanceSpace> {
    (3usize..=7).prop_flat_map(|n| {
        proptest::collection::vec(1i64..=30, n * (n - 1) / 2).prop_map(move |cells| {
            let mut grid = vec![vec![Scalar::zero(); n]; n];
            let mut it = cells.into_iter();
            for i in 0..n {
                for j in i + 1..n {
                    grid[i][j] = Scalar::ratio(it.next().unwrap(), 4);
                    grid[j][i] = grid[i][j].clone();
                }
            }
            make_space((0..n).map(|i| format!("p{i}")).collect(), grid, ClaimedClass::RawDistance).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]

    #[test]
    fn triangle_iff_unit_coefficient(space in raw_space()) {
        let tri = check_triangle(&space).passed();
        let k = min_b_coefficient(&space).unwrap().k_min;
        prop_assert_eq!(tri, k.exact_cmp(&Scalar::one()).is_le());
    }

    #[test]
    fn triangle_witnesses_really_violate(space in raw_space()) {
        let r = check_triangle(&space);
        prop_assert_eq!(r.witnesses.is_empty(), r.passed());
        for w in &r.witnesses {
            let [x, y, z] = w.indices[..] else { panic!("triple expected") };
            let rhs = space.get(x, y) + space.get(y, z);
            prop_assert!(space.get(x, z).exact_cmp(&rhs).is_gt());
            prop_assert_eq!(&w.lhs, space.get(x, z));
            prop_assert_eq!(&w.rhs, &rhs);
        }
    }

    #[test]
    fn iv_witnesses_really_violate(space in raw_space()) {
        let r = check_generalized_triangle(&space, false);
        for w in &r.witnesses {
            let [x, y, z] = w.indices[..] else { panic!("triple expected") };
            let legs = space.get(x, y).max_of(space.get(y, z));
            prop_assert!(space.get(x, z).exact_cmp(&(&Scalar::int(2) * &legs)).is_gt());
        }
    }

    #[test]
    fn nu_witnesses_really_violate(space in raw_space()) {
        let r = check_nu_generalized(&space, 2).unwrap();
        for w in &r.witnesses {
            prop_assert_eq!(w.indices.len(), 4);
            let sum = w.indices.windows(2).fold(Scalar::zero(), |acc, p| &acc + space.get(p[0], p[1]));
            let (x, y) = (w.indices[0], w.indices[3]);
            prop_assert!(space.get(x, y).exact_cmp(&sum).is_gt());
            let mut distinct = w.indices.clone();
            distinct.sort_unstable();
            distinct.dedup();
            prop_assert_eq!(distinct.len(), 4);
        }
    }

    #[test]
    fn coefficient_witness_attains_k_min(space in raw_space()) {
        let b = min_b_coefficient(&space).unwrap();
        if let Some(w) = b.witness {
            let [x, y, z] = w.indices[..] else { panic!("triple expected") };
            let ratio = space.get(x, z) / &(space.get(x, y) + space.get(y, z));
            prop_assert_eq!(ratio, b.k_min);
        } else {
            prop_assert_eq!(b.k_min, Scalar::one());
        }
    }

    #[test]
    fn random_bmetric_coefficient_bound(seed in any::<u64>(), n in 3usize..=10, q in 1u32..=3) {
        let space = gen_random(&RandomKind::BMetric(Exponent::ratio(q as i64, 1)), n, seed).unwrap();
        let k = min_b_coefficient(&space).unwrap().k_min;
        prop_assert!(k.exact_cmp(&Scalar::int(1 << (q - 1))).is_le());
    }

    #[test]
    fn random_twogen_passes_nu2(seed in any::<u64>(), n in 4usize..=9) {
        let space = gen_random(&RandomKind::TwoGen, n, seed).unwrap();
        prop_assert!(check_nu_generalized(&space, 2).unwrap().passed());
    }
}
