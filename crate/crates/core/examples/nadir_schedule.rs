//! Radius schedule `r_j² = r_{j-1}² + 1/j²` with `ρ_j` the harmonic sums,
//! and the orthogonal-push radius bound.

use calabi_lab::nadirashvili::{make_schedule, pythagoras_check};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = std::time::Instant::now();
    let s = make_schedule(1.0, 1.0, 0.1, 1_000_000)?;
    let j = s.j_len - 1;
    println!("built {} steps in {:.3}s", s.j_len, t.elapsed().as_secs_f64());
    println!("r_J = {:.9} (limit {:.9})", s.r[j], s.r_limit);
    println!("rho_J - rho_1 = {:.9}", s.rho[j] - s.rho[0]);
    println!("log2 eps_J = {:.3}", s.eps[j].log2());
    let (r, q) = (1.2, 0.7);
    let circle: Vec<[f64; 3]> = (0..64)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / 64.0;
            [r * a.cos(), r * a.sin(), q]
        })
        .collect();
    println!("orthogonal push: {:?}", pythagoras_check(&circle, r, q, 1e-12));
    let radial: Vec<[f64; 3]> = circle.iter().map(|p| [p[0] * (1.0 + q / r), p[1] * (1.0 + q / r), 0.0]).collect();
    println!("radial push: {:?}", pythagoras_check(&radial, r, q, 1e-12));
    Ok(())
}
