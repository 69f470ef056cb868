//! Minimal plurisubharmonicity of exhaustion functions, mean convexity of
//! meshed boundaries and a nested exhaustion chain.

use calabi_lab::convexity::{
    check_minimal_psh, exhaustion_chain, icosphere, mean_convexity, norm_squared, torus, Grid3, ScalarField3,
};
use nalgebra::{Matrix3, Vector3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid3::cube(1.0, 11);
    let ball = norm_squared(1.0);
    let saddle = ScalarField3::analytic([-1.0; 3], [1.0; 3], |x| x[0] * x[0] + x[1] * x[1] - x[2] * x[2])
        .with_hessian(|_| Matrix3::from_diagonal(&Vector3::new(2.0, 2.0, -2.0)));
    for (name, field) in [("|x|^2", &ball), ("x1^2 + x2^2 - x3^2", &saddle)] {
        let r = check_minimal_psh(field, &grid, 1e-6, None)?;
        println!("{name}: min lambda1+lambda2 = {:.6}, {:?}", r.min_over_region, r.verdict);
    }
    let fd = check_minimal_psh(&ball.clone().without_hessian(), &Grid3::cube(0.9, 11), 1e-3, Some(1e-3))?;
    println!("|x|^2 by finite differences: {:.6}", fd.min_over_region);

    let sphere = mean_convexity(&icosphere(2.0, 5))?;
    println!("sphere R=2: kappa1+kappa2 in [{:.4}, {:.4}] (2/R = 1)", sphere.min, sphere.max);
    let t = mean_convexity(&torus(2.0, 0.5, 200, 50))?;
    println!("torus R=2 r=0.5: min {:.4} (inner equator 4/3)", t.min);

    let chain = exhaustion_chain(&norm_squared(3.0), &[1.0, 2.0, 4.0], [0.0; 3], &Grid3::cube(3.0, 41), 1e-3)?;
    for l in &chain.levels {
        println!("L(phi <= {}): {} voxels, compactly inside next: {}", l.value, l.component.voxels.len(), l.compactly_contains_previous);
    }
    println!("nested: {}", chain.nested());
    Ok(())
}
