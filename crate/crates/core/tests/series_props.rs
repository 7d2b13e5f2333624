use gssm::series::{compose_truncated, multiply_truncated, MultiIndex, MultiSeries};
use num_complex::Complex64;
use proptest::prelude::*;

fn series_strategy(dim_in: usize, dim_out: usize, order: u32) -> impl Strategy<Value = MultiSeries> {
    let n = MultiIndex::count_up_to(dim_in, order) * dim_out;
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(move |vals| {
        let mut s = MultiSeries::zeros(dim_in, dim_out, order);
        for (t, k) in MultiIndex::all_up_to(dim_in, order).into_iter().enumerate() {
            let v: Vec<Complex64> = (0..dim_out)
                .map(|i| {
                    let (re, im) = vals[t * dim_out + i];
                    Complex64::new(re, im)
                })
                .collect();
            s.add_term(&k, &v);
        }
        s
    })
}

fn max_diff(a: &MultiSeries, b: &MultiSeries) -> f64 {
    let order = a.order().max(b.order());
    let mut worst: f64 = 0.0;
    for k in MultiIndex::all_up_to(a.dim_in(), order) {
        for i in 0..a.dim_out() {
            worst = worst.max((a.coeff(&k, i) - b.coeff(&k, i)).norm());
        }
    }
    worst
}

/// Product by the definition: every pair of terms, kept if within `order`.
fn brute_product(a: &MultiSeries, b: &MultiSeries, order: u32) -> MultiSeries {
    let mut out = MultiSeries::zeros(a.dim_in(), 1, order);
    for (ka, va) in a.iter() {
        for (kb, vb) in b.iter() {
            let k = ka.add(kb);
            if k.order() <= order {
                out.add_term(&k, &[va[0] * vb[0]]);
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_matches_term_by_term_expansion(a in series_strategy(2, 1, 5), b in series_strategy(2, 1, 5)) {
        let p = multiply_truncated(&a, &b, 5).unwrap();
        prop_assert!(max_diff(&p, &brute_product(&a, &b, 5)) < 1e-12);
    }

    #[test]
    fn truncated_product_is_associative(
        a in series_strategy(2, 1, 4),
        b in series_strategy(2, 1, 4),
        c in series_strategy(2, 1, 4),
    ) {
        let left = multiply_truncated(&multiply_truncated(&a, &b, 4).unwrap(), &c, 4).unwrap();
        let right = multiply_truncated(&a, &multiply_truncated(&b, &c, 4).unwrap(), 4).unwrap();
        prop_assert!(max_diff(&left, &right) < 1e-12);
    }

    #[test]
    fn truncated_product_is_commutative(a in series_strategy(3, 1, 3), b in series_strategy(3, 1, 3)) {
        let ab = multiply_truncated(&a, &b, 3).unwrap();
        let ba = multiply_truncated(&b, &a, 3).unwrap();
        prop_assert!(max_diff(&ab, &ba) < 1e-13);
    }

    #[test]
    fn composing_with_identity_is_a_no_op(a in series_strategy(2, 2, 5)) {
        let id = MultiSeries::identity(2, 5);
        let c = compose_truncated(&a, &id, 5).unwrap();
        prop_assert!(max_diff(&a, &c) < 1e-13);
    }

    #[test]
    fn evaluation_is_linear(a in series_strategy(2, 2, 4), b in series_strategy(2, 2, 4), x in -0.5f64..0.5, y in -0.5f64..0.5) {
        let p = [Complex64::new(x, 0.0), Complex64::new(y, 0.0)];
        let sum = a.add(&b).unwrap().evaluate(&p).unwrap();
        let ea = a.evaluate(&p).unwrap();
        let eb = b.evaluate(&p).unwrap();
        for i in 0..2 {
            prop_assert!((sum[i] - ea[i] - eb[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn graded_lex_enumeration_is_complete(dim in 1usize..4, order in 0u32..6) {
        let all = MultiIndex::all_up_to(dim, order);
        prop_assert_eq!(all.len(), MultiIndex::count_up_to(dim, order));
        for w in all.windows(2) {
            prop_assert!(w[0].order() <= w[1].order());
            prop_assert!(w[0] != w[1]);
        }
    }
}
