use std::sync::Arc;

use calabi_lab::complexgrid::{build_domain, DomainSpec};
use calabi_lab::labyrinth::{build_labyrinth, jorge_xavier_step, TargetPattern};
use calabi_lab::weierstrass::Holo;

/// Intrinsic radii before and after four steps with `m_k = k`, `ε_k = k/2`.
const BASELINE: [f64; 5] = [0.6175, 0.6576, 0.9303, 1.9205, 6.4480];

#[test]
fn four_steps_match_baseline() {
    let domain = Arc::new(build_domain(&DomainSpec::disc(1.0, 0.03)).unwrap());
    let lab = build_labyrinth(2, 0.3, 0.75, TargetPattern::Uniform).unwrap();
    let (mut f, mut g) = (Holo::real(1.0), Holo::real(0.5));
    let mut radii = Vec::new();
    for k in 1..=4 {
        let m = k as f64;
        let s = jorge_xavier_step(&f, &g, domain.clone(), &lab, m, 0.5 * m, 256).unwrap();
        if k == 1 {
            radii.push(s.report.radius_before);
        }
        radii.push(s.report.radius_after);
        assert!(s.report.third_coordinate_pass, "{:?}", s.report);
        (f, g) = (s.f, s.g);
    }
    for (r, b) in radii.iter().zip(BASELINE) {
        assert!((r - b).abs() < 1e-3 * b, "{radii:?}");
    }
}
