use isolab_web::demo::{discriminant_curve, spectrum, Trajectory};

#[test]
fn constant_curve_and_spectrum() {
    let c = discriminant_curve("const:1", 64, -0.5, 0.5, 3).unwrap();
    assert_eq!(c.len(), 6);
    assert!((c[3] - 2.0 * 1f64.cosh()).abs() < 1e-10);
    let s = spectrum("const:1", 64, -2.0, 2.0).unwrap();
    assert_eq!(s.len(), 8);
    assert!((s[0] + 1.0).abs() < 1e-8 && (s[4] - 1.0).abs() < 1e-8);
    assert_eq!((s[1], s[2], s[3]), (1.0, 0.0, -1.0));
}

#[test]
fn trajectory_conserves_mass() {
    let mut t = Trajectory::new("wave", 64, 1e-3).unwrap();
    let before = t.invariants().unwrap();
    t.advance(0.05).unwrap();
    let after = t.invariants().unwrap();
    assert!((t.time() - 0.05).abs() < 1e-15);
    assert!((before[0] - after[0]).abs() < 1e-12);
    assert_eq!(t.modulus().len(), 64);
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(spectrum("sine", 64, -1.0, 1.0).is_err());
    assert!(spectrum("wave", 63, -1.0, 1.0).is_err());
    assert!(discriminant_curve("wave", 64, 1.0, -1.0, 10).is_err());
    assert!(discriminant_curve("wave", 64, -1.0, 1.0, 1).is_err());
    assert!(Trajectory::new("wave", 64, 0.5).is_err());
    assert!(Trajectory::new("wave", 4096, 1e-3).is_err());
}
