//! Intrinsic distance from the centre of an Enneper disc to its boundary,
//! with a few short divergent paths.

use std::sync::Arc;

use calabi_lab::complexgrid::{build_domain, DomainSpec};
use calabi_lab::metric::{build_metric_graph, divergent_paths, intrinsic_radius, GraphOptions, MetricMode};
use calabi_lab::weierstrass::{integrate_triple, triple_from_fg, Holo};
use calabi_lab::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = Arc::new(build_domain(&DomainSpec::disc(1.0, 0.03))?);
    let phi = triple_from_fg(&Holo::real(1.0), &Holo::z(), domain.clone())?;
    let u = integrate_triple(&phi, domain.mesh.nearest_vertex(C64::new(0.0, 0.0)), [0.0; 3])?;
    // exact radius: ∫_0^1 ½(1 + t²) dt
    println!("exact radius {:.6}", 2.0 / 3.0);
    for mode in [MetricMode::ConformalFactor, MetricMode::EmbeddedEdges] {
        println!("{mode:?}: {:.6}", intrinsic_radius(&u, GraphOptions::new(mode))?);
    }
    let graph = build_metric_graph(&u, GraphOptions::new(MetricMode::ConformalFactor))?;
    for p in divergent_paths(&graph, u.base_point, 0, 4)? {
        println!("path of {} vertices, length {:.6}", p.vertices.len(), p.length);
    }
    Ok(())
}
