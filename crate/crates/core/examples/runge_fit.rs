//! Stable polynomial fits on a multiply connected planar mesh.

use calabi_lab::complexgrid::{build_domain, ArnoldiBasis, Curve, DomainSpec};
use calabi_lab::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = DomainSpec::disc(1.0, 0.05).with_holes(vec![
        Curve::circle(C64::new(0.4, 0.0), 0.15),
        Curve::rectangle(-0.6, -0.2, -0.3, 0.2),
    ]);
    let domain = build_domain(&spec)?;
    println!(
        "{} vertices, {} triangles, {} boundary components",
        domain.mesh.num_vertices(),
        domain.mesh.triangles.len(),
        domain.num_boundary_components()
    );
    let pts = domain.mesh.vertices.clone();
    let targets: Vec<C64> = pts.iter().map(|z| (z * 2.0).exp()).collect();
    let basis = ArnoldiBasis::new(&pts, 30)?;
    for degree in [5, 10, 20, 30] {
        let (p, rep) = basis.fit(&targets, None, degree)?;
        let err = pts.iter().zip(&targets).map(|(&z, &t)| (p.eval(z) - t).norm()).fold(0.0, f64::max);
        println!("degree {degree}: max error {err:.3e}, rank deficient {}", rep.rank_deficient);
    }
    Ok(())
}
