//! Nested convex Cantor construction on the unit square.
//!
//! cargo run --release --example cantor_tree -- [gamma] [depth] [out.svg]

use calabi_lab::cantor::{build_cantor_tree, ConvexPiece, Membership};
use calabi_lab::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let gamma: f64 = args.get(1).map_or(Ok(0.2), |s| s.parse())?;
    let depth: usize = args.get(2).map_or(Ok(8), |s| s.parse())?;
    let t = std::time::Instant::now();
    let tree = build_cantor_tree(&ConvexPiece::unit_square(), gamma, depth)?;
    println!("built in {:.3}s", t.elapsed().as_secs_f64());
    for i in 1..=depth {
        println!(
            "level {i}: {} pieces, max diameter {:.3e}, {} overlapping pairs",
            tree.level(i)?.len(),
            tree.max_diameter(i)?,
            tree.intersecting_pairs(i)?.len()
        );
    }
    let deep = tree.level(depth)?[0].centroid();
    for z in [deep, C64::new(0.5, 0.5), C64::new(2.0, 0.0)] {
        let m: Membership = tree.membership(z);
        println!("{z}: {m:?}");
    }
    if let Some(path) = args.get(3) {
        std::fs::write(path, tree.to_svg(depth.min(4), 800.0)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
