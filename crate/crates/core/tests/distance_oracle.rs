//! Distance transforms checked against brute-force all-pairs scans.

use std::collections::{BTreeMap, BTreeSet};

use drillguide::field::{compose_min, exact_edt, signed_edt, squared_edt, DistanceField};
use drillguide::volume::{BinaryMask, GridSpec, LabelVolume};
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

fn random_mask(rng: &mut StdRng, dims: [usize; 3]) -> BinaryMask {
    let spec = GridSpec::isotropic(dims, 1.0).unwrap();
    // mix very sparse and dense masks
    let p = [0.002, 0.02, 0.2, 0.6][rng.gen_range(0..4)];
    let mut bits: Vec<bool> = (0..spec.len()).map(|_| rng.gen_bool(p)).collect();
    if !bits.iter().any(|&b| b) {
        let i = rng.gen_range(0..bits.len());
        bits[i] = true;
    }
    BinaryMask::new(spec, bits).unwrap()
}

// Integer squared distance to the nearest set voxel, by scanning every pair.
fn brute_squared(mask: &BinaryMask) -> Vec<u64> {
    let spec = mask.spec();
    let seeds: Vec<[i64; 3]> = (0..spec.len())
        .filter(|&i| mask.bits()[i])
        .map(|i| spec.coords(i).map(|c| c as i64))
        .collect();
    (0..spec.len())
        .map(|i| {
            let p = spec.coords(i).map(|c| c as i64);
            seeds
                .iter()
                .map(|s| (0..3).map(|a| ((p[a] - s[a]) * (p[a] - s[a])) as u64).sum::<u64>())
                .min()
                .unwrap()
        })
        .collect()
}

#[test]
fn squared_edt_matches_brute_force_on_random_masks() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for round in 0..30 {
        let dims = [rng.gen_range(1..14), rng.gen_range(1..14), rng.gen_range(1..14)];
        let mask = random_mask(&mut rng, dims);
        let fast = squared_edt(&mask).unwrap();
        let slow = brute_squared(&mask);
        for (i, (&f, &s)) in fast.iter().zip(&slow).enumerate() {
            assert_eq!(f, s as f64, "round {round} dims {dims:?} voxel {i}");
        }
    }
}

#[test]
fn anisotropic_edt_matches_brute_force() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..10 {
        let spacing = [rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0)];
        let spec = GridSpec::new([9, 7, 8], spacing, [0.0; 3]).unwrap();
        let bits: Vec<bool> = (0..spec.len()).map(|_| rng.gen_bool(0.05)).collect();
        let mut mask = BinaryMask::new(spec, bits).unwrap();
        mask.set([4, 3, 4], true);
        let field = exact_edt(&mask).unwrap();
        for idx in 0..spec.len() {
            let c = spec.center(spec.coords(idx));
            let best = (0..spec.len())
                .filter(|&s| mask.bits()[s])
                .map(|s| {
                    let o = spec.center(spec.coords(s));
                    (0..3).map(|a| (c[a] - o[a]).powi(2)).sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            assert!((field.values[idx] as f64 - best).abs() <= 1e-5 * best.max(1.0));
        }
    }
}

fn cube_volume(n: usize, lo: usize, hi: usize, spacing: f64) -> LabelVolume {
    let spec = GridSpec::isotropic([n; 3], spacing).unwrap();
    let mut labels = vec![0u8; spec.len()];
    for idx in 0..spec.len() {
        if spec.coords(idx).iter().all(|&c| (lo..hi).contains(&c)) {
            labels[idx] = 1;
        }
    }
    LabelVolume::new(spec, labels, BTreeMap::from([(1, "LB".into())])).unwrap()
}

// Signed distance by definition: nearest surface voxel center, negated inside.
fn brute_signed(volume: &LabelVolume, code: u8) -> Vec<f64> {
    let spec = volume.spec();
    let mask = volume.mask_of(&BTreeSet::from([code]));
    let surface = mask.boundary();
    let surf: Vec<[f64; 3]> = (0..spec.len())
        .filter(|&i| surface.bits()[i])
        .map(|i| spec.center(spec.coords(i)))
        .collect();
    (0..spec.len())
        .map(|i| {
            let c = spec.center(spec.coords(i));
            let d = surf
                .iter()
                .map(|s| (0..3).map(|a| (c[a] - s[a]).powi(2)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            if mask.bits()[i] && !surface.bits()[i] {
                -d
            } else {
                d
            }
        })
        .collect()
}

#[test]
fn signed_field_matches_definition_on_cube() {
    let vol = cube_volume(5, 1, 4, 1.0);
    let field = signed_edt(&vol, &BTreeSet::from([1])).unwrap();
    let oracle = brute_signed(&vol, 1);
    assert_eq!(field.get([2, 2, 2]), -1.0);
    for (f, o) in field.values.iter().zip(&oracle) {
        assert!((*f as f64 - o).abs() < 1e-6);
    }
}

#[test]
fn signed_field_sign_partition_on_random_volumes() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..20 {
        let spec = GridSpec::isotropic([10, 9, 8], 0.48).unwrap();
        let labels: Vec<u8> = (0..spec.len()).map(|_| rng.gen_range(0..3)).collect();
        let vol = LabelVolume::new(
            spec,
            labels,
            BTreeMap::from([(1, "A".into()), (2, "B".into())]),
        )
        .unwrap();
        let field = signed_edt(&vol, &BTreeSet::from([1])).unwrap();
        let mask = vol.mask_of(&BTreeSet::from([1]));
        let surface = mask.boundary();
        let oracle = brute_signed(&vol, 1);
        for i in 0..spec.len() {
            let v = field.values[i];
            match (mask.bits()[i], surface.bits()[i]) {
                (true, true) => assert_eq!(v, 0.0),
                (true, false) => assert!(v < 0.0),
                (false, _) => assert!(v > 0.0),
            }
            assert!((v as f64 - oracle[i]).abs() < 1e-5);
        }
    }
}

#[test]
fn compose_min_matches_elementwise_oracle() {
    let mut rng = StdRng::seed_from_u64(21);
    let spec = GridSpec::isotropic([8, 8, 8], 0.48).unwrap();
    for _ in 0..10 {
        let fields: Vec<DistanceField> = ["VF", "LB", "SVB"]
            .iter()
            .map(|n| {
                let v = (0..spec.len()).map(|_| rng.gen_range(-5.0f32..5.0)).collect();
                DistanceField::new(spec, v, *n).unwrap()
            })
            .collect();
        let c = compose_min(&fields).unwrap();
        for i in 0..spec.len() {
            let expect = fields
                .iter()
                .map(|f| f.values[i])
                .fold(f32::INFINITY, f32::min);
            assert_eq!(c.values[i], expect);
            assert!(fields.iter().all(|f| c.values[i] <= f.values[i]));
        }
        // idempotent and order-insensitive in values
        let twice = compose_min(&[c.clone(), c.clone()]).unwrap();
        assert_eq!(twice.values, c.values);
        let rev: Vec<_> = fields.iter().rev().cloned().collect();
        assert_eq!(compose_min(&rev).unwrap().values, c.values);
    }
}

fn mask_strategy() -> impl Strategy<Value = BinaryMask> {
    (1usize..9, 1usize..9, 1usize..9)
        .prop_flat_map(|(x, y, z)| {
            let n = x * y * z;
            (Just([x, y, z]), prop::collection::vec(prop::bool::weighted(0.15), n), 0..n)
        })
        .prop_map(|(dims, mut bits, forced)| {
            bits[forced] = true;
            BinaryMask::new(GridSpec::isotropic(dims, 0.48).unwrap(), bits).unwrap()
        })
}

proptest! {
    #[test]
    fn unsigned_field_is_one_lipschitz(mask in mask_strategy()) {
        let f = exact_edt(&mask).unwrap();
        let spec = *mask.spec();
        for idx in 0..spec.len() {
            let [i, j, k] = spec.coords(idx);
            prop_assert!(!mask.bits()[idx] || f.values[idx] == 0.0);
            for (a, n) in [(0usize, [i + 1, j, k]), (1, [i, j + 1, k]), (2, [i, j, k + 1])] {
                if n[a] < spec.dims[a] {
                    let d = (f.values[idx] - f.get(n)).abs() as f64;
                    prop_assert!(d <= spec.spacing[a] + 1e-5);
                }
            }
        }
    }

    #[test]
    fn boundary_is_subset(mask in mask_strategy()) {
        prop_assert!(mask.boundary().is_subset_of(&mask));
    }
}
