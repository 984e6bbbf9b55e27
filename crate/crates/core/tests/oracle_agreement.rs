use isolab_core::oracle::{galerkin_eigs, match_sorted, suggested_modes};
use isolab_core::zs::{locate_spectrum, BoundaryKind};
use isolab_core::{Grid, Potential};

fn agreement(p: Potential, window: (f64, f64)) -> f64 {
    let u = p.field(Grid::new(128).unwrap()).unwrap();
    let s = locate_spectrum(&u, window).unwrap();
    let modes = suggested_modes(&u, window);
    let mut worst: f64 = 0.0;
    for kind in [BoundaryKind::Periodic, BoundaryKind::Antiperiodic] {
        let located: Vec<f64> = s
            .points
            .iter()
            .filter(|q| q.kind == kind)
            .flat_map(|q| std::iter::repeat_n(q.lambda, q.multiplicity as usize))
            .collect();
        let reference = galerkin_eigs(&u, kind, modes, window).unwrap();
        let d = match_sorted(&located, &reference).unwrap_or_else(|| panic!("{p}: counts differ for {kind:?}"));
        worst = worst.max(d);
    }
    worst
}

#[test]
fn every_standard_potential_matches_the_galerkin_oracle() {
    for (p, w) in [
        (Potential::Zero, (-10.0, 10.0)),
        (Potential::Constant(1.0), (-10.0, 10.0)),
        (Potential::Wave, (-6.0, 6.0)),
        (Potential::Rich, (-16.0, 16.0)),
        (Potential::Rough, (-14.0, 14.0)),
    ] {
        let d = agreement(p.clone(), w);
        assert!(d < 1e-6, "{p}: {d:e}");
    }
}
