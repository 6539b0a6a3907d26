use proptest::prelude::*;
use resmarg::tensor::{decomp, decompose_full, recon, recon_sum};
use resmarg::{AttrSet, Domain, Marginal, NdArray};

fn marginal_strategy() -> impl Strategy<Value = (Domain, Marginal)> {
    prop::collection::vec(2usize..=5, 1..=4).prop_flat_map(|sizes| {
        let cells: usize = sizes.iter().product();
        prop::collection::vec(-100.0f64..100.0, cells).prop_map(move |data| {
            let d = Domain::from_sizes(sizes.clone()).unwrap();
            let g = AttrSet::new((0..sizes.len()).collect());
            let m = Marginal::new(&d, g, NdArray::new(sizes.clone(), data).unwrap()).unwrap();
            (d, m)
        })
    })
}

proptest! {
    #[test]
    fn decompose_then_recon_sum_is_identity((d, m) in marginal_strategy()) {
        let parts = decompose_full(&m).unwrap();
        let back = recon_sum(&parts, m.attrs(), &d).unwrap();
        let scale = m.values().max_abs().max(1.0);
        prop_assert!(back.values().max_abs_diff(m.values()).unwrap() <= 1e-10 * scale);
    }

    #[test]
    fn recon_components_have_zero_sums_off_their_residual((d, m) in marginal_strategy()) {
        // each non-empty component sums to zero; the empty one carries the total
        let g = m.attrs().clone();
        for tau in g.subsets().unwrap() {
            let c = recon(&decomp(&m, &tau).unwrap(), &g, &d).unwrap();
            let expected = if tau.is_empty() { m.values().sum() } else { 0.0 };
            prop_assert!((c.values().sum() - expected).abs() <= 1e-8 * m.values().l1_norm().max(1.0));
        }
    }

    #[test]
    fn decomp_is_linear((_, m) in marginal_strategy(), k in -3.0f64..3.0) {
        let g = m.attrs().clone();
        let mut scaled = m.clone();
        scaled.values_mut().scale(k);
        for tau in g.subsets().unwrap() {
            let a = decomp(&scaled, &tau).unwrap();
            let mut b = decomp(&m, &tau).unwrap().into_values();
            b.scale(k);
            prop_assert!(a.values().max_abs_diff(&b).unwrap() <= 1e-9 * m.values().max_abs().max(1.0));
        }
    }
}
