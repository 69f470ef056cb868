//! Staged immersion of a Cantor-set complement into a ball, with the
//! per-stage certificate table.
//!
//! cargo run --release --example cantor_pipeline -- [stages] [mesh_h] [out_dir]

use calabi_lab::pipeline::{recompute, run_construction, write_artifacts, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let stages = args.get(1).map_or(Ok(3), |s| s.parse())?;
    let mut config = RunConfig::ball(stages);
    if let Some(h) = args.get(2) {
        config.mesh_h = h.parse()?;
    }
    config.hit_set = vec![[0.5, 0.5, 0.5], [-1.0, 0.2, 0.0]];
    let t = std::time::Instant::now();
    let run = run_construction(&config)?;
    println!("run: {:.1}s", t.elapsed().as_secs_f64());
    for s in &run.record.stages {
        let m = &s.measured;
        print!(
            "j={} eps={:.4} verts={} holes={} band=[{:.3}, {:.3}]",
            s.j,
            s.epsilon.to_f64(),
            m.mesh.vertices,
            m.mesh.holes,
            m.band_range[0],
            m.band_range[1]
        );
        if let Some(p) = &s.push {
            print!(" scale={:.3} raw_sup={:.3e}", p.scale, p.raw_sup);
        }
        println!();
        if let Some(c) = &m.certificates {
            for (name, cert) in c.all() {
                println!("   ({name}) {} {}", if cert.pass { "pass" } else { "FAIL" }, cert.note);
            }
        }
    }
    let sum = &run.record.summary;
    println!("cauchy sups {:?} ratios {:?} flagged {:?}", sum.cauchy.sup_differences, sum.cauchy.ratios, sum.cauchy.flagged);
    println!("limit set max gap {:.3} mean {:.3}", sum.limit_set.max_gap, sum.limit_set.mean_gap);
    let t = std::time::Instant::now();
    let rep = recompute(&run.record)?;
    println!("recompute identical: {} ({:.1}s)", rep.identical, t.elapsed().as_secs_f64());
    if let Some(dir) = args.get(3) {
        for p in write_artifacts(&run, std::path::Path::new(dir))? {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}
