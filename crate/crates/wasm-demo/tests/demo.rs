use drillguide_wasm_demo::Demo;

fn pixel(img: &[u8], demo: &Demo, i: u32, k: u32) -> [u8; 4] {
    // row 0 is the top z layer
    let y = demo.height() - 1 - k;
    let at = ((y * demo.width() + i) * 4) as usize;
    img[at..at + 4].try_into().unwrap()
}

#[test]
fn field_image_follows_thresholds() {
    let d = Demo::new().unwrap();
    let img = d.field_image(6, 1.0, 2.0).unwrap();
    assert_eq!(img.len() as u32, d.width() * d.height() * 4);
    // k = 4 sits 0.48 mm above the floor surface: red; k = 13 is far: green
    assert_eq!(pixel(&img, &d, 12, 4), [255, 0, 0, 255]);
    assert_eq!(pixel(&img, &d, 12, 13), [0, 255, 0, 255]);
    // widening the red band turns the middle of the slab red too
    let wide = d.field_image(6, 3.0, 4.0).unwrap();
    assert_eq!(pixel(&wide, &d, 12, 8), [255, 0, 0, 255]);
    assert!(d.field_image(6, 2.0, 1.0).is_err());
}

#[test]
fn replan_counts_track_thicknesses() {
    let mut d = Demo::new().unwrap();
    let base = d.counts();
    assert_eq!(base, vec![1152, 576, 432, 1872]);
    let zero = d.replan(0.0, 0.0, 0.0).unwrap();
    assert_eq!(zero, vec![2160, 0, 0, 1872]);
    let thick = d.replan(2.0, 1.0, 1.5).unwrap();
    assert!(thick[2] > base[2] && thick[0] < base[0]);
    let img = d.zone_image(6);
    assert_eq!(pixel(&img, &d, 12, 4), [210, 50, 45, 255]);
}

#[test]
fn drilling_reports_feedback_and_warnings() {
    let mut d = Demo::new().unwrap();
    let before = d.remaining();
    // burr resting on the top surface of the slab, in the cortical layer
    let t = d.drill(5.76, 2.88, 6.5, true).unwrap();
    assert_eq!(t.removed, 1);
    assert!((t.force_n - 3.2).abs() < 1e-12);
    assert!(t.audio_hz > 220.0);
    assert_eq!(d.remaining(), before - 1);
    let idle = d.drill(5.76, 2.88, 6.5, false).unwrap();
    assert_eq!((idle.removed, idle.force_n, idle.audio_hz), (0, 0.0, 0.0));

    // plunging into the floor raises the RED warning
    let mut warned = false;
    for _ in 0..400 {
        warned |= d.drill(5.76, 2.88, 1.5, true).unwrap().warning() == "RED";
    }
    assert!(warned);

    d.reset();
    d.set_guidance(false);
    assert_eq!(d.remaining(), before);
    for _ in 0..400 {
        assert_eq!(d.drill(5.76, 2.88, 1.5, true).unwrap().warning(), "NONE");
    }
    let img = d.zone_image(6);
    assert!(img.chunks(4).all(|p| p != [210, 50, 45, 255] && p != [46, 170, 80, 255]));
}
