//! Flux of the catenoid `f = 1/z², g = z` along two homologous loops.

use std::sync::Arc;

use calabi_lab::complexgrid::{build_domain, DomainSpec, PathInDomain};
use calabi_lab::weierstrass::{flux, triple_from_fg, Holo};
use calabi_lab::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = Arc::new(build_domain(&DomainSpec::annulus(0.5, 2.0, 0.05))?);
    let phi = triple_from_fg(&Holo::powi(Holo::z(), -2), &Holo::z(), domain)?;
    for (center, radius) in [(C64::new(0.0, 0.0), 1.0), (C64::new(0.2, -0.1), 1.4)] {
        let v = flux(&phi, &PathInDomain::circle(center, radius, 1024))?.value;
        println!("loop |z - {center}| = {radius}: ({:.9}, {:.9}, {:.9})", v[0], v[1], v[2]);
    }
    println!("2 pi = {:.9}", std::f64::consts::TAU);
    Ok(())
}
