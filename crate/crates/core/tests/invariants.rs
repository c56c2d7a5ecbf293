//! Property tests for structural invariants of the chain models.

use chainspectra::extensions::lattice2d::{band_union, bulk_omega2, in_bands};
use chainspectra::extensions::two_layer::{decoupled_spectrum, two_layer_spectrum, TwoLayerConfig};
use chainspectra::{full_spectrum, BulkParams, ChainConfig};
use proptest::prelude::*;

fn chain() -> impl Strategy<Value = ChainConfig> {
    (2usize..60, 0.2f64..5.0, 0.2f64..5.0, 0.0f64..10.0, 0.0f64..10.0)
        .prop_map(|(n, k1, k2, k31, k32)| ChainConfig::new(n, k1, k2, k31, k32).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenvalues_are_distinct_nonpositive_and_accurate(c in chain()) {
        let s = full_spectrum(&c).unwrap();
        prop_assert_eq!(s.len(), 2 * c.n);
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.eigenvalues.iter().all(|&v| v <= 0.0));
        for r in 0..s.len() {
            prop_assert!(s.residual(r) <= 1e-10 * s.norm);
        }
    }

    #[test]
    fn stiffer_ends_never_lower_a_frequency(c in chain(), d in 0.01f64..2.0) {
        let s = full_spectrum(&c).unwrap();
        let left = full_spectrum(&c.with_k31(c.k31 + d)).unwrap();
        let right = full_spectrum(&c.with_k32(c.k32 + d)).unwrap();
        let tol = 1e-12 * s.norm;
        for r in 0..s.len() {
            prop_assert!(left.omega2(r) >= s.omega2(r) - tol);
            prop_assert!(right.omega2(r) >= s.omega2(r) - tol);
        }
    }

    #[test]
    fn at_most_two_modes_leave_the_bands(c in chain()) {
        prop_assume!(c.k1 < c.k2);
        let p = BulkParams::new(c.k1, c.k2).unwrap();
        let s = full_spectrum(&c).unwrap();
        let outside = (0..s.len()).filter(|&r| p.band_of(s.omega2(r)).is_none()).count();
        prop_assert!(outside <= 2);
    }

    #[test]
    fn equal_rungs_decouple_into_single_chains(
        n in 2usize..25, k1 in 0.2f64..4.0, k2 in 0.2f64..4.0, k5 in 0.0f64..4.0,
        k3 in 0.0f64..4.0, k4 in 0.0f64..4.0,
    ) {
        let cfg = TwoLayerConfig { n, k1, k2, k5, k6: k5, k31: k3, k32: k3, k41: k4, k42: k4 };
        let full = two_layer_spectrum(&cfg).unwrap().omega2();
        let want = decoupled_spectrum(&cfg).unwrap();
        prop_assert_eq!(full.len(), want.len());
        for (x, y) in full.iter().zip(&want) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn lattice_bulk_modes_lie_in_the_band_union(
        k1 in 0.2f64..5.0, k2 in 0.2f64..5.0,
        t1 in -std::f64::consts::PI..std::f64::consts::PI,
        t2 in -std::f64::consts::PI..std::f64::consts::PI,
        upper in any::<bool>(),
    ) {
        let w = bulk_omega2(k1, k2, t1, t2, if upper { 1.0 } else { -1.0 });
        prop_assert!(in_bands(&band_union(k1, k2), w, 1e-9 * (k1 + k2)));
    }
}
