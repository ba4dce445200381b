//! Property tests across random shapes and values.

use oclbench_core::io::{read_tensor_record, write_tensor_record, Tensor};
use oclbench_core::pooling::{moment_drift, pool, pool_moments, PoolingSpec};
use oclbench_core::tensor::{FeatureMap, Vector};
use oclbench_core::RngStream;
use proptest::prelude::*;

fn arb_map() -> impl Strategy<Value = FeatureMap> {
    (1usize..6, 1usize..6, 1usize..5).prop_flat_map(|(h, w, d)| {
        proptest::collection::vec(-100.0f32..100.0, h * w * d)
            .prop_map(move |data| FeatureMap::new(h, w, d, data).unwrap())
    })
}

proptest! {
    #[test]
    fn output_dim_matches_spec(g in arb_map(), r in 1usize..5, k in 0.05f64..1.0, alpha in 0.0f64..1.0, p in 1.0f64..4.0) {
        let specs = [
            PoolingSpec::Moments { r, sigma_floor: 1e-12 },
            PoolingSpec::Avg,
            PoolingSpec::Max,
            PoolingSpec::AvgMax,
            PoolingSpec::Mix { alpha },
            PoolingSpec::Lp { p },
            PoolingSpec::Rap { k_percent: k },
        ];
        for spec in specs {
            let z = pool(&g, &spec, None).unwrap();
            prop_assert_eq!(z.dim(), spec.output_dim(g.d(), g.spatial_len()));
            prop_assert!(z.data.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn moments_r1_equals_avg(g in arb_map()) {
        let r1 = pool_moments(&g, 1, 1e-12).unwrap();
        let avg = pool(&g, &PoolingSpec::Avg, None).unwrap();
        prop_assert_eq!(r1.data, avg.data);
    }

    #[test]
    fn stochastic_is_deterministic_per_stream(g in arb_map(), seed in 0u64..1000) {
        let mut a = RngStream::new(seed, "prop/stoch");
        let mut b = RngStream::new(seed, "prop/stoch");
        let za = pool(&g, &PoolingSpec::Stochastic, Some(&mut a)).unwrap();
        let zb = pool(&g, &PoolingSpec::Stochastic, Some(&mut b)).unwrap();
        prop_assert_eq!(za.data, zb.data);
    }

    #[test]
    fn drift_is_symmetric_and_zero_on_identity(
        a in proptest::collection::vec(-50.0f64..50.0, 1..40),
        b in proptest::collection::vec(-50.0f64..50.0, 1..40),
    ) {
        prop_assert_eq!(moment_drift(&a, &a).unwrap(), 0.0);
        let ab = moment_drift(&a, &b).unwrap();
        let ba = moment_drift(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab >= 0.0);
    }

    #[test]
    fn drift_triangle_inequality(
        a in proptest::collection::vec(-50.0f64..50.0, 8usize..=8),
        b in proptest::collection::vec(-50.0f64..50.0, 8usize..=8),
        c in proptest::collection::vec(-50.0f64..50.0, 8usize..=8),
    ) {
        let ab = moment_drift(&a, &b).unwrap();
        let bc = moment_drift(&b, &c).unwrap();
        let ac = moment_drift(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn tensor_record_round_trip(data in proptest::collection::vec(-1e6f32..1e6, 1..64)) {
        let v = Vector::new(data.clone()).unwrap();
        let bytes = write_tensor_record(&Tensor::Vector(v)).unwrap();
        match read_tensor_record(&bytes).unwrap() {
            Tensor::Vector(back) => {
                prop_assert_eq!(
                    back.data().iter().map(|f| f.to_bits()).collect::<Vec<_>>(),
                    data.iter().map(|f| f.to_bits()).collect::<Vec<_>>()
                );
            }
            _ => prop_assert!(false, "rank changed in round trip"),
        }
    }

    #[test]
    fn rng_substreams_are_stable(seed in 0u64..10_000) {
        let mut a = RngStream::new(seed, "root").substream("child");
        let mut b = RngStream::new(seed, "root").substream("child");
        for _ in 0..8 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
        // sibling substream diverges
        let mut c = RngStream::new(seed, "root").substream("child2");
        prop_assert_ne!(RngStream::new(seed, "root").substream("child").next_u64(), c.next_u64());
    }
}
