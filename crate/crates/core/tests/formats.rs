use std::collections::BTreeMap;

use drillguide::field::DistanceField;
use drillguide::formats::{
    field_bytes, load_volume, plan_bytes, read_field, read_plan, read_volume, save_volume,
    volume_bytes,
};
use drillguide::plan::{ShellParams, Zone, ZonePlan};
use drillguide::volume::{GridSpec, LabelVolume};
use proptest::prelude::*;

fn volume_strategy() -> impl Strategy<Value = LabelVolume> {
    (1usize..9, 1usize..9, 1usize..9, 0.05f64..3.0, -50.0f64..50.0)
        .prop_flat_map(|(x, y, z, s, o)| {
            (
                Just(GridSpec::new([x, y, z], [s, s * 1.5, s], [o, -o, 0.25]).unwrap()),
                prop::collection::vec(0u8..6, x * y * z),
            )
        })
        .prop_map(|(spec, labels)| {
            let palette: BTreeMap<u8, String> = (1..6).map(|c| (c, format!("S{c}"))).collect();
            LabelVolume::new(spec, labels, palette).unwrap()
        })
}

proptest! {
    #[test]
    fn volume_files_round_trip_byte_for_byte(v in volume_strategy()) {
        let bytes = volume_bytes(&v);
        let back = read_volume(&bytes[..]).unwrap();
        prop_assert_eq!(&back, &v);
        prop_assert_eq!(volume_bytes(&back), bytes);
    }

    #[test]
    fn field_and_plan_files_round_trip(v in volume_strategy()) {
        let spec = *v.spec();
        let values: Vec<f32> = v.labels().iter().map(|&c| c as f32 * -0.37 + 0.1).collect();
        let mut f = DistanceField::new(spec, values, "VF").unwrap();
        f.sources = vec!["VF".into(), "LB".into()];
        let fb = field_bytes(&f);
        let f2 = read_field(&fb[..]).unwrap();
        prop_assert_eq!(&f2, &f);
        prop_assert_eq!(field_bytes(&f2), fb);

        let zones = v.labels().iter().map(|&c| Zone::from_code(c % 5).unwrap()).collect();
        let plan = ZonePlan::new(spec, zones, ShellParams::default()).unwrap();
        let pb = plan_bytes(&plan);
        let p2 = read_plan(&pb[..]).unwrap();
        prop_assert_eq!(&p2, &plan);
        prop_assert_eq!(plan_bytes(&p2), pb);
    }
}

#[test]
fn random_volume_through_the_filesystem() {
    let dir = std::env::temp_dir().join(format!("drillguide-fmt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let spec = GridSpec::isotropic([8; 3], 0.48).unwrap();
    let labels: Vec<u8> = (0..512u32).map(|i| (i.wrapping_mul(2654435761u32) >> 29) as u8 % 4).collect();
    let palette = BTreeMap::from([(1, "VF".into()), (2, "LB".into()), (3, "SVB".into())]);
    let v = LabelVolume::new(spec, labels, palette).unwrap();
    let path = dir.join("v.capv");
    save_volume(&path, &v).unwrap();
    let first = std::fs::read(&path).unwrap();
    let back = load_volume(&path).unwrap();
    assert_eq!(back.labels(), v.labels());
    save_volume(&path, &back).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);
    std::fs::remove_dir_all(&dir).ok();
}
