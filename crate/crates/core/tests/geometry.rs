use attrbounds::geometry::{discretize, DomainSpec, RasterMask, Shape};

#[test]
fn translation_invariance() {
    let a = discretize(&DomainSpec::unit_disk(1.0 / 40.0)).unwrap();
    let b = discretize(&DomainSpec::unit_disk(1.0 / 40.0).shifted(vec![5.0, -3.0])).unwrap();
    assert_eq!(a.len(), b.len());
    assert!((a.volume() - b.volume()).abs() < 1e-12);
    assert!((a.moment_of_inertia() - b.moment_of_inertia()).abs() < 1e-10);
    assert!((a.interior_diameter() - b.interior_diameter()).abs() < 1e-10);
}

#[test]
fn ratio_scales_inverse_square() {
    let rect = |s: f64| {
        DomainSpec::new(
            Shape::Rectangle {
                width: 2.0 * s,
                height: s,
            },
            s / 32.0,
        )
    };
    let r1 = discretize(&rect(1.0)).unwrap().ratio().unwrap();
    let r3 = discretize(&rect(3.0)).unwrap().ratio().unwrap();
    assert!((r3 * 9.0 / r1 - 1.0).abs() < 1e-10);
}

#[test]
fn volume_converges_under_refinement() {
    for spec in [DomainSpec::unit_disk(0.0), DomainSpec::unit_square(0.0), DomainSpec::unit_cube(0.0)] {
        let v: Vec<f64> = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]
            .iter()
            .map(|h| {
                let mut s = spec.clone();
                s.h = *h;
                discretize(&s).unwrap().volume()
            })
            .collect();
        assert!((v[2] - v[1]).abs() < (v[1] - v[0]).abs(), "{v:?}");
    }
}

#[test]
fn mask_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("disk.mask");
    let spec = DomainSpec::unit_disk(1.0 / 32.0).centered();
    RasterMask::from_spec(&spec).unwrap().write(&path).unwrap();
    let a = discretize(&spec).unwrap();
    let b = discretize(&DomainSpec::new(Shape::RasterMask { path }, 1.0 / 32.0)).unwrap();
    assert_eq!(a.len(), b.len());
    assert!((a.ratio().unwrap() - b.ratio().unwrap()).abs() < 1e-10);
}
