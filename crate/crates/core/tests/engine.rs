use lnnd_core::nng::dist2;
use lnnd_core::process::sample_cloud;
use lnnd_core::{build_nng_brute, build_nng_fast, CloudKind, Dimension, PointCloud, SeedRecord};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn fast_matches_brute_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    for i in 0..200u64 {
        let d = [2, 3, 5][i as usize % 3];
        let n = rng.random_range(2..=2000);
        let cloud = sample_cloud(Dimension::new(d).unwrap(), n, SeedRecord::new(900, i));
        let (a, b) = (build_nng_fast(&cloud).unwrap(), build_nng_brute(&cloud).unwrap());
        if a != b {
            mismatches += 1;
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn lattice_ties_resolve_identically() {
    let d = Dimension::new(2).unwrap();
    let coords: Vec<f64> = (0..30).flat_map(|i| [(i % 6) as f64, (i / 6) as f64]).collect();
    let cloud = PointCloud::from_coords(d, coords, CloudKind::Binomial { n: 30 }).unwrap();
    let (a, b) = (build_nng_fast(&cloud).unwrap(), build_nng_brute(&cloud).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.nn_index[7], 1);
}

fn cloud_strategy() -> impl Strategy<Value = (u32, Vec<f64>)> {
    (2u32..=4, 2usize..120).prop_flat_map(|(d, n)| (Just(d), prop::collection::vec(-50.0f64..50.0, n * d as usize)))
}

fn make(d: u32, coords: Vec<f64>) -> PointCloud {
    let n = (coords.len() / d as usize) as u64;
    PointCloud::from_coords(Dimension::new(d).unwrap(), coords, CloudKind::Binomial { n }).unwrap()
}

fn ulps(a: f64, b: f64) -> u64 {
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn brute_equals_fast((d, coords) in cloud_strategy()) {
        let cloud = make(d, coords);
        prop_assert_eq!(build_nng_fast(&cloud).unwrap(), build_nng_brute(&cloud).unwrap());
    }

    #[test]
    fn scale_equivariance((d, coords) in cloud_strategy(), k in -8i32..8) {
        let cloud = make(d, coords.clone());
        let base = build_nng_fast(&cloud).unwrap();
        // Power-of-two factors scale every coordinate exactly.
        let s = 2f64.powi(k);
        let scaled = build_nng_fast(&cloud.scaled(s)).unwrap();
        for (x, y) in base.nn_dist.iter().zip(&scaled.nn_dist) {
            prop_assert!(ulps(x * s, *y) <= 4, "{} vs {}", x * s, y);
        }
        prop_assert!(ulps(base.d_n * s, scaled.d_n) <= 4);
        // Other factors round the inputs; the error is relative to the
        // coordinate magnitude.
        let extent = coords.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for s in [0.37, 13.5] {
            let scaled = build_nng_fast(&cloud.scaled(s)).unwrap();
            let slack = 8.0 * f64::EPSILON * s * extent * (d as f64).sqrt();
            prop_assert!((base.d_n * s - scaled.d_n).abs() <= slack + 4.0 * f64::EPSILON * scaled.d_n);
        }
    }

    #[test]
    fn insertion_never_increases((d, coords) in cloud_strategy(), extra in prop::collection::vec(-50.0f64..50.0, 4)) {
        let mut cloud = make(d, coords);
        let before = build_nng_fast(&cloud).unwrap();
        cloud.push(&extra[..d as usize]).unwrap();
        let after = build_nng_fast(&cloud).unwrap();
        for (i, (b, a)) in before.nn_dist.iter().zip(&after.nn_dist).enumerate() {
            prop_assert!(a <= b, "point {}: {} > {}", i, a, b);
        }
    }

    #[test]
    fn result_invariants((d, coords) in cloud_strategy()) {
        let cloud = make(d, coords);
        let r = build_nng_fast(&cloud).unwrap();
        for i in 0..cloud.len() {
            let j = r.nn_index[i];
            prop_assert_ne!(i, j);
            prop_assert_eq!(r.nn_dist[i], dist2(cloud.point(i), cloud.point(j)).sqrt());
            for k in 0..cloud.len() {
                if k != i {
                    prop_assert!(r.nn_dist[i] <= dist2(cloud.point(i), cloud.point(k)).sqrt());
                }
            }
        }
    }
}
