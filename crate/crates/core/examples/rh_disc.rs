//! Approximate Riemann–Hilbert problem for `g(z, ξ) = z + ½ξ` on the disc.

use calabi_lab::complexgrid::ComplexPolynomial;
use calabi_lab::riemann_hilbert::{rh_solve_disc, rh_verify, FiberDiscFamily, RhGrid, RhMap, RhOptions};
use calabi_lab::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = FiberDiscFamily::linear(
        ComplexPolynomial::monomial(C64::new(1.0, 0.0), 1),
        ComplexPolynomial::constant(C64::new(0.5, 0.0)),
    );
    let sol = rh_solve_disc(&family, 0.5, 0.1, &RhOptions::default())?;
    let c = &sol.certificate;
    println!("N = {}, r' = {:.4}, passed {}", sol.n, sol.r_prime, c.passed());
    println!(
        "center {:.3e}, boundary {:.3e}, annulus {:.3e}",
        c.center_closeness, c.boundary_proximity, c.annulus_proximity
    );
    for n in [2, 4, 8, 16] {
        let c = rh_verify(&family, &RhMap::Ansatz { n }, 0.5, 0.1, RhGrid::default())?;
        println!("N = {n}: center closeness {:.3e}, boundary {:.1e}", c.center_closeness, c.boundary_proximity);
    }
    Ok(())
}
