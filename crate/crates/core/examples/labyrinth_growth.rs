//! Successive labyrinth steps `h = e^p` with `p ≈ m` on the blocks grow the
//! intrinsic radius of a flat disc while the third coordinate stays put.

use std::sync::Arc;

use calabi_lab::complexgrid::{build_domain, DomainSpec};
use calabi_lab::labyrinth::{build_labyrinth, jorge_xavier_step, TargetPattern};
use calabi_lab::weierstrass::Holo;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = Arc::new(build_domain(&DomainSpec::disc(1.0, 0.04))?);
    let lab = build_labyrinth(2, 0.3, 0.75, TargetPattern::Uniform)?;
    let (mut f, mut g) = (Holo::real(1.0), Holo::real(0.5));
    for k in 1..=4 {
        let m = k as f64;
        let step = jorge_xavier_step(&f, &g, domain.clone(), &lab, m, 0.5 * m, 256)?;
        let r = &step.report;
        println!(
            "m={m}: radius {:.4} -> {:.4}, degree {}, third-coordinate change {:.2e} (eps' {:.2e})",
            r.radius_before, r.radius_after, step.fit.report.degree, r.third_coordinate_change, r.epsilon_prime
        );
        (f, g) = (step.f, step.g);
    }
    Ok(())
}
