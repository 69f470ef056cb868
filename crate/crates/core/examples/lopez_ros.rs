//! López–Ros deformation `(f, g) ↦ (f h, g/h)` keeps `f g`, hence the third
//! coordinate.

use std::sync::Arc;

use calabi_lab::complexgrid::{build_domain, ComplexPolynomial, DomainSpec};
use calabi_lab::weierstrass::{conformality_residual, integrate_triple, lopez_ros, triple_from_fg, Holo};
use calabi_lab::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = Arc::new(build_domain(&DomainSpec::disc(1.0, 0.05))?);
    let f = Holo::add(Holo::real(1.0), Holo::poly(ComplexPolynomial::from_real(&[0.0, 0.3, 0.1])));
    let g = Holo::z();
    let p = Holo::poly(ComplexPolynomial::new(vec![C64::new(0.2, 0.1), C64::new(1.5, -0.4)]));
    let (f2, g2) = lopez_ros(&f, &g, &Holo::exp(p), &domain)?;
    let base = domain.mesh.nearest_vertex(C64::new(0.0, 0.0));
    let before = triple_from_fg(&f, &g, domain.clone())?;
    let after = triple_from_fg(&f2, &g2, domain.clone())?;
    let u = integrate_triple(&before, base, [0.0; 3])?;
    let w = integrate_triple(&after, base, [0.0; 3])?;
    let third = u.u[2].iter().zip(&w.u[2]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let first = u.u[0].iter().zip(&w.u[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("conformality before {:.3e}, after {:.3e}", conformality_residual(&before), conformality_residual(&after));
    println!("sup change: first coordinate {first:.3e}, third coordinate {third:.3e}");
    Ok(())
}
