//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use calabi_lab::cantor::{build_cantor_tree, convex_intersect, ConvexPiece};
use calabi_lab::complexgrid::{build_domain, ComplexPolynomial, DomainSpec, PathInDomain};
use calabi_lab::convexity::{check_minimal_psh, icosphere, mean_convexity, norm_squared, torus, Grid3, PshVerdict, ScalarField3};
use calabi_lab::labyrinth::{build_labyrinth, jorge_xavier_step, TargetPattern};
use calabi_lab::nadirashvili::{make_schedule, pythagoras_check};
use calabi_lab::pipeline::{recompute, run_construction, write_artifacts, RunConfig, RunRecord};
use calabi_lab::riemann_hilbert::{rh_solve_disc, rh_verify, FiberDiscFamily, RhGrid, RhMap, RhOptions};
use calabi_lab::weierstrass::{
    conformality_residual, flux, integrate_triple, lopez_ros_samples, phi_from_fg, triple_from_fg, Holo,
};
use calabi_lab::C64;
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

/// `H_n` from its asymptotic expansion.
fn harmonic_oracle(n: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    n.ln() + EULER_GAMMA + 1.0 / (2.0 * n) - 1.0 / (12.0 * n * n) + 1.0 / (120.0 * n.powi(4))
}

fn c1_schedule() -> Outcome {
    let t = Instant::now();
    let s = make_schedule(1.0, 1.0, 0.1, 1_000_000)?;
    let secs = t.elapsed().as_secs_f64();
    let j = s.j_len - 1;
    let target_r = std::f64::consts::PI / 6f64.sqrt();
    let dr = (s.r[j] - target_r).abs();
    let drho = (s.rho[j] - s.rho[0] - (harmonic_oracle(1e6) - 1.0)).abs();
    Ok((
        dr < 1e-3 && drho < 1e-6 && secs < 1.0,
        format!("|r_J - pi/sqrt6| = {dr:.3e}, |(rho_J - rho_1) - (H - 1)| = {drho:.3e}, {secs:.3}s"),
    ))
}

fn unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

fn c2_pythagoras() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst = 0.0f64;
    let mut orthogonal_fail = 0;
    let mut radial_pass = 0;
    for _ in 0..10_000 {
        let r: f64 = rng.gen_range(0.01..10.0);
        let s: f64 = rng.gen_range(0.01..10.0);
        let a = unit(&mut rng);
        let b = unit(&mut rng);
        let d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let mut n = [0, 1, 2].map(|k| b[k] - d * a[k]);
        let nn = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        n = n.map(|x| x / nn);
        let x = [0, 1, 2].map(|k| r * a[k] + s * n[k]);
        let rep = pythagoras_check(&[x], r, s, 1e-12);
        worst = worst.max((rep.max_norm - (r * r + s * s).sqrt()).abs());
        if !rep.pass {
            orthogonal_fail += 1;
        }
        let radial = a.map(|c| (r + s) * c);
        let tol = rng.gen_range(0.0..1.0) * s * r / (r + s);
        if pythagoras_check(&[radial], r, s, tol).pass {
            radial_pass += 1;
        }
    }
    Ok((
        worst < 1e-12 && orthogonal_fail == 0 && radial_pass == 0,
        format!("max ||x| - sqrt(r^2+s^2)| = {worst:.2e}, orthogonal failures {orthogonal_fail}, radial passes {radial_pass}"),
    ))
}

fn enneper(z: C64) -> [f64; 3] {
    let i = C64::new(0.0, 1.0);
    let z3 = z * z * z;
    [(0.5 * (z - z3 / 3.0)).re, (0.5 * i * (z + z3 / 3.0)).re, (0.5 * z * z).re]
}

fn c3_weierstrass() -> Outcome {
    let t = Instant::now();
    let mut lap = Vec::new();
    let mut err = 0.0f64;
    let mut conf = 0.0f64;
    for h in [0.02, 0.01] {
        let domain = Arc::new(build_domain(&DomainSpec::disc(1.0, h))?);
        let phi = triple_from_fg(&Holo::real(1.0), &Holo::z(), domain.clone())?;
        let base = domain.mesh.nearest_vertex(C64::new(0.0, 0.0));
        let u = integrate_triple(&phi, base, enneper(domain.mesh.vertices[base]))?;
        if h == 0.02 {
            for (v, &z) in domain.mesh.vertices.iter().enumerate() {
                let e = enneper(z);
                let p = u.position(v);
                err = err.max((0..3).map(|k| (p[k] - e[k]).abs()).fold(0.0, f64::max));
            }
            conf = conformality_residual(&phi);
        }
        lap.push(u.harmonicity_residual());
    }
    let ratio = lap[1] / lap[0];
    let secs = t.elapsed().as_secs_f64();
    Ok((
        err < 1e-4 && conf < 1e-12 && (0.4..=0.6).contains(&ratio) && secs < 30.0,
        format!("max error {err:.2e}, conformality {conf:.2e}, laplacian ratio {ratio:.3}, {secs:.2}s"),
    ))
}

fn c4_flux() -> Outcome {
    let domain = Arc::new(build_domain(&DomainSpec::annulus(0.5, 2.0, 0.05))?);
    let phi = triple_from_fg(&Holo::powi(Holo::z(), -2), &Holo::z(), domain)?;
    let a = flux(&phi, &PathInDomain::circle(C64::new(0.0, 0.0), 1.0, 1024))?.value;
    let b = flux(&phi, &PathInDomain::circle(C64::new(0.15, -0.1), 1.3, 1024))?.value;
    let expect = [0.0, 0.0, std::f64::consts::TAU];
    let dev = (0..3).map(|k| (a[k] - expect[k]).abs()).fold(0.0, f64::max);
    let agree = (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max);
    Ok((
        dev < 1e-4 && agree < 1e-4,
        format!("flux {a:.6?}, deviation {dev:.2e}, homologous loops differ by {agree:.2e}"),
    ))
}

fn random_poly(rng: &mut ChaCha8Rng, degree: usize, scale: f64) -> ComplexPolynomial {
    ComplexPolynomial::new(
        (0..=degree)
            .map(|_| C64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
            .collect(),
    )
}

fn c5_lopez_ros() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pts: Vec<C64> = (0..400)
        .map(|k| C64::from_polar(0.95 * ((k % 20) as f64 + 0.5) / 20.0, 0.37 * k as f64))
        .collect();
    let mut worst_rel = 0.0f64;
    let mut worst_conf = 0.0f64;
    for _ in 0..100 {
        let f = random_poly(&mut rng, 3, 1.0).add(&ComplexPolynomial::constant(C64::new(3.0, 0.0)));
        let g = random_poly(&mut rng, 2, 1.0);
        let p = random_poly(&mut rng, 3, 0.5);
        let fv: Vec<C64> = pts.iter().map(|&z| f.eval(z)).collect();
        let gv: Vec<C64> = pts.iter().map(|&z| g.eval(z)).collect();
        let hv: Vec<C64> = pts.iter().map(|&z| p.eval(z).exp()).collect();
        let (f2, g2) = lopez_ros_samples(&fv, &gv, &hv)?;
        let mut conf = [0.0f64; 2];
        for k in 0..pts.len() {
            let before = phi_from_fg(fv[k], gv[k]);
            let after = phi_from_fg(f2[k], g2[k]);
            if before[2].norm() > 0.0 {
                worst_rel = worst_rel.max((after[2] - before[2]).norm() / before[2].norm());
            }
            for (c, phi) in conf.iter_mut().zip([before, after]) {
                *c = c.max((phi[0] * phi[0] + phi[1] * phi[1] + phi[2] * phi[2]).norm());
            }
        }
        worst_conf = worst_conf.max((conf[1] - conf[0]).abs());
    }
    Ok((
        worst_rel < 1e-14 && worst_conf < 1e-12,
        format!("max relative change of phi3 {worst_rel:.2e}, conformality change {worst_conf:.2e}"),
    ))
}

fn c6_labyrinth() -> Outcome {
    let domain = Arc::new(build_domain(&DomainSpec::disc(1.0, 0.03))?);
    let lab = build_labyrinth(2, 0.3, 0.75, TargetPattern::Uniform)?;
    let (mut f, mut g) = (Holo::real(1.0), Holo::real(0.5));
    let mut radii = Vec::new();
    let mut third_ok = true;
    for k in 1..=4 {
        let m = k as f64;
        let step = jorge_xavier_step(&f, &g, domain.clone(), &lab, m, 0.5 * m, 256)?;
        if radii.is_empty() {
            radii.push(step.report.radius_before);
        }
        radii.push(step.report.radius_after);
        third_ok &= step.report.third_coordinate_change < step.report.epsilon_prime;
        (f, g) = (step.f, step.g);
    }
    let increasing = radii.windows(2).all(|w| w[1] > w[0]);
    Ok((
        increasing && third_ok,
        format!("radii {radii:.4?}, third coordinate within eps' at every step: {third_ok}"),
    ))
}

fn c7_cantor() -> Outcome {
    let t = Instant::now();
    let tree = build_cantor_tree(&ConvexPiece::unit_square(), 0.2, 8)?;
    let mut disjoint = true;
    let mut nested = true;
    for i in 1..=8 {
        disjoint &= tree.intersecting_pairs(i)?.is_empty();
        nested &= tree.nesting_violations(i - 1)?.is_empty();
    }
    let secs = t.elapsed().as_secs_f64();
    // brute force over all pairs where it is cheap
    for i in 1..=5 {
        let p = tree.level(i)?;
        for a in 0..p.len() {
            for b in a + 1..p.len() {
                disjoint &= !convex_intersect(&p[a].polygon, &p[b].polygon);
            }
        }
    }
    let counts_ok = (1..=8).all(|i| tree.level(i).map_or(false, |l| l.len() == 1 << (2 * i)));
    let diam = tree.max_diameter(8)?;
    let bound = 2f64.sqrt() * 0.4f64.powi(8);
    Ok((
        counts_ok && tree.level(8)?.len() == 65536 && tree.level(2)?.len() == 16 && disjoint && nested && diam <= bound && diam < 1e-3 && secs < 10.0,
        format!(
            "{} pieces, disjoint {disjoint}, nested {nested}, max diameter {diam:.3e} (bound {bound:.3e}), {secs:.2}s",
            tree.level(8)?.len()
        ),
    ))
}

fn c8_convexity() -> Outcome {
    let grid = Grid3::cube(1.0, 11);
    let ball = check_minimal_psh(&norm_squared(1.0), &grid, 1e-6, None)?;
    let ball_fd = check_minimal_psh(&norm_squared(1.0).without_hessian(), &Grid3::cube(0.9, 11), 1e-3, Some(1e-3))?;
    let saddle_field = ScalarField3::analytic([-1.0; 3], [1.0; 3], |x| x[0] * x[0] + x[1] * x[1] - x[2] * x[2])
        .with_hessian(|_| Matrix3::from_diagonal(&Vector3::new(2.0, 2.0, -2.0)));
    let saddle = check_minimal_psh(&saddle_field, &grid, 1e-3, None)?;
    let r = 2.0;
    let sphere_mesh = icosphere(r, 5);
    let sphere = mean_convexity(&sphere_mesh)?;
    let sphere_dev = (sphere.min - 2.0 / r).abs().max((sphere.max - 2.0 / r).abs()) / (2.0 / r);
    let tor = mean_convexity(&torus(2.0, 0.5, 200, 50))?;
    let tor_dev = (tor.min - 4.0 / 3.0).abs() / (4.0 / 3.0);
    let pass = (ball.min_over_region - 4.0).abs() < 1e-6
        && ball.verdict == PshVerdict::StronglyMinimalPsh
        && (ball_fd.min_over_region - 4.0).abs() < 1e-3
        && saddle.min_over_region.abs() < 1e-3
        && saddle.verdict == PshVerdict::MinimalPshBoundaryCase
        && sphere_mesh.vertices.len() >= 10_000
        && sphere_dev < 0.05
        && tor_dev < 0.10;
    Ok((
        pass,
        format!(
            "ball {:.9} (fd {:.6}), saddle {:.2e} {:?}, sphere rel dev {sphere_dev:.2e} at {} vertices, torus min {:.4}",
            ball.min_over_region,
            ball_fd.min_over_region,
            saddle.min_over_region,
            saddle.verdict,
            sphere_mesh.vertices.len(),
            tor.min
        ),
    ))
}

fn c9_rh() -> Outcome {
    let family = FiberDiscFamily::linear(
        ComplexPolynomial::monomial(C64::new(1.0, 0.0), 1),
        ComplexPolynomial::constant(C64::new(0.5, 0.0)),
    );
    let sol = rh_solve_disc(&family, 0.5, 0.1, &RhOptions::default())?;
    let grid_ok = sol.certificate.grid.boundary == 256 && sol.certificate.grid.radii == 32;
    let mut exact = true;
    let mut monotone = true;
    let mut prev = f64::INFINITY;
    for n in 1..=20 {
        let c = rh_verify(&family, &RhMap::Ansatz { n }, sol.r_prime, 0.1, RhGrid::default())?;
        exact &= c.boundary_proximity == 0.0;
        if n >= 2 {
            monotone &= c.center_closeness <= prev;
            prev = c.center_closeness;
        }
    }
    Ok((
        sol.certificate.passed() && grid_ok && exact && monotone,
        format!(
            "N = {}, certificate passed {}, boundary proximity exactly 0 for N = 1..20: {exact}, center monotone: {monotone}",
            sol.n,
            sol.certificate.passed()
        ),
    ))
}

fn c10_pipeline() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(dir.join("../../configs/ball_j3.json"))?;
    let config = RunConfig::from_json(&text)?;
    let t = Instant::now();
    let run = run_construction(&config)?;
    let secs = t.elapsed().as_secs_f64();
    let out = std::env::temp_dir().join(format!("calabi-acceptance-{}", std::process::id()));
    write_artifacts(&run, &out)?;
    let stored: RunRecord = serde_json::from_str(&std::fs::read_to_string(out.join("ledger.json"))?)?;
    let _ = std::fs::remove_dir_all(&out);
    let rep = recompute(&stored)?;
    let rec = &run.record;
    let certs: Vec<_> = rec.stages.iter().filter_map(|s| s.measured.certificates.as_ref()).collect();
    let structural = certs.len() == config.stages && certs.iter().all(|c| c.a.pass && c.g.pass);
    let all_b = rec.summary.all_b_pass;
    let ratios = &rec.summary.cauchy.ratios;
    let ratios_ok = !all_b || ratios.iter().all(|&r| r <= 0.55);
    let bound = rec.summary.cauchy_bound.unwrap_or(0.0);
    let sum_ok = rec.summary.cauchy.total <= bound;
    let cde: Vec<String> = certs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let m = |p: bool| if p { "ok" } else { "x" };
            format!("j{}:c{} d{} e{} f{}", i + 1, m(c.c.pass), m(c.d.pass), m(c.e.pass), m(c.f.pass))
        })
        .collect();
    Ok((
        secs < 600.0 && structural && rep.identical && stored == *rec && all_b && ratios_ok && sum_ok,
        format!(
            "{secs:.1}s, (a)(g) {structural}, recompute identical {}, all (b) {all_b}, ratios {ratios:.4?}, sum {:.4} <= {bound:.4}; recorded {}",
            rep.identical,
            rec.summary.cauchy.total,
            cde.join(" ")
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("schedule limits", c1_schedule),
        ("orthogonal push bound", c2_pythagoras),
        ("weierstrass correctness", c3_weierstrass),
        ("flux", c4_flux),
        ("lopez-ros", c5_lopez_ros),
        ("labyrinth completeness growth", c6_labyrinth),
        ("cantor construction", c7_cantor),
        ("convexity verdicts", c8_convexity),
        ("rh disc solver", c9_rh),
        ("pipeline ledger integrity", c10_pipeline),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            failed += 1;
        }
        println!("criterion {:>2} {} {name}: {detail}", k + 1, if pass { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
