//! Integrate Enneper data `f = 1, g = z` on the unit disc, compare with the
//! closed form and write a PLY.
//!
//! cargo run --release --example enneper_surface -- [h] [out.ply]

use std::sync::Arc;

use calabi_lab::complexgrid::io::{write_ply, PlyFormat, SurfaceMesh};
use calabi_lab::complexgrid::{build_domain, DomainSpec};
use calabi_lab::weierstrass::{conformality_residual, integrate_triple, triple_from_fg, Holo};
use calabi_lab::C64;

fn closed_form(z: C64) -> [f64; 3] {
    let i = C64::new(0.0, 1.0);
    let z3 = z * z * z;
    [
        (0.5 * (z - z3 / 3.0)).re,
        (0.5 * i * (z + z3 / 3.0)).re,
        (0.5 * z * z).re,
    ]
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let h: f64 = args.get(1).map_or(Ok(0.02), |s| s.parse())?;
    let domain = Arc::new(build_domain(&DomainSpec::disc(1.0, h))?);
    let phi = triple_from_fg(&Holo::real(1.0), &Holo::z(), domain.clone())?;
    let base = domain.mesh.nearest_vertex(C64::new(0.0, 0.0));
    let u = integrate_triple(&phi, base, closed_form(domain.mesh.vertices[base]))?;
    let err = domain
        .mesh
        .vertices
        .iter()
        .enumerate()
        .map(|(v, &z)| {
            let e = closed_form(z);
            let p = u.position(v);
            (0..3).map(|k| (p[k] - e[k]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    println!("vertices {}", u.num_vertices());
    println!("max vertex error {err:.3e}");
    println!("conformality {:.3e}", conformality_residual(&phi));
    println!("discrete laplacian {:.3e}", u.harmonicity_residual());
    if let Some(path) = args.get(2) {
        let mesh = SurfaceMesh::from_positions(&domain.mesh, &u.positions()).with_scalar("density", u.metric_density.clone());
        write_ply(&mesh, PlyFormat::BinaryLittleEndian, std::io::BufWriter::new(std::fs::File::create(path)?))?;
        println!("wrote {path}");
    }
    Ok(())
}
