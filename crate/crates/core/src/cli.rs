//! Command-line front end.
//!
//! Exit codes: 0 success, 2 failed certificates, 1 errors, 64 usage.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::cantor::{build_cantor_tree, ConvexPiece};
use crate::complexgrid::io::{write_ply, PlyFormat, SurfaceMesh};
use crate::complexgrid::{build_domain, ComplexPolynomial, DomainSpec, PathInDomain};
use crate::convexity::{check_minimal_psh, norm_squared, Grid3, PshVerdict, ScalarField3};
use crate::nadirashvili::make_schedule;
use crate::pipeline::{config_hash, run_construction, write_artifacts, RunConfig};
use crate::riemann_hilbert::{rh_solve_disc, rh_verify, FiberDiscFamily, RhGrid, RhMap, RhOptions};
use crate::weierstrass::{
    conformality_residual, flux, integrate_triple, triple_from_fg, Holo, SampledHolomorphicTriple,
};
use crate::C64;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "CALABI_LAB_THREADS";

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

#[derive(Parser, Debug)]
#[command(name = "calabi-lab", version, about = "Numerical laboratory for complete minimal surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Staged Cantor-complement construction with a certificate ledger.
    Run(RunArgs),
    /// Build a Cantor tree and check disjointness and nesting.
    Cantor(CantorArgs),
    /// Approximate Riemann-Hilbert problem on the disc.
    Rh {
        #[command(subcommand)]
        command: RhCommand,
    },
    /// Minimal plurisubharmonicity of an exhaustion function.
    Convexity {
        #[command(subcommand)]
        command: ConvexityCommand,
    },
    /// Weierstrass representation.
    Weier {
        #[command(subcommand)]
        command: WeierCommand,
    },
    /// Radius schedule of the bounded complete construction.
    Nadir {
        #[command(subcommand)]
        command: NadirCommand,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CantorArgs {
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    /// Level drawn in the SVG (defaults to the depth).
    #[arg(long)]
    level: Option<usize>,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum RhCommand {
    /// Smallest exponent passing the certificate for `g(z, ξ) = z + a ξ`.
    Solve {
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Fiber radius `a`.
        #[arg(long, default_value_t = 0.5)]
        a: f64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Certificate of the ansatz with a fixed exponent.
    Verify {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        r_prime: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.5)]
        a: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PhiChoice {
    /// `|x|²`
    Ball,
    /// `x₁² + x₂² − x₃²`
    Saddle,
}

#[derive(Subcommand, Debug)]
enum ConvexityCommand {
    /// Minimum of `λ₁ + λ₂` over a cube lattice.
    Check {
        #[arg(long, value_enum, default_value_t = PhiChoice::Ball)]
        phi: PhiChoice,
        #[arg(long, default_value_t = 1.0)]
        half: f64,
        #[arg(long, default_value_t = 11)]
        n: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Use finite differences with this step.
        #[arg(long)]
        fd_step: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Surface {
    /// `f = 1, g = z` on the unit disc.
    Enneper,
    /// `f = 1/z², g = z` on the annulus `½ < |z| < 2`.
    Catenoid,
}

#[derive(Subcommand, Debug)]
enum WeierCommand {
    /// Integrate the data on a mesh and report the residuals.
    Integrate {
        #[arg(long, value_enum, default_value_t = Surface::Enneper)]
        surface: Surface,
        #[arg(long, default_value_t = 0.05)]
        h: f64,
        #[arg(long)]
        ply: Option<PathBuf>,
    },
    /// Flux along the circle `|z| = radius`.
    Flux {
        #[arg(long, value_enum, default_value_t = Surface::Catenoid)]
        surface: Surface,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        h: f64,
    },
}

#[derive(Subcommand, Debug)]
enum NadirCommand {
    /// Table of `r_j`, `ρ_j`, `ε_j`.
    Schedule {
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        #[arg(long, default_value_t = 1.0)]
        rho1: f64,
        #[arg(long, default_value_t = 0.1)]
        eps1: f64,
        #[arg(short = 'J', long = "stages", default_value_t = 10)]
        j: usize,
        /// Rows printed; longer schedules show the head and the tail.
        #[arg(long, default_value_t = 20)]
        rows: usize,
    },
}

/// Record of one invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: Option<String>,
    pub versions: BTreeMap<String, String>,
    pub outputs: Vec<PathBuf>,
    pub elapsed_seconds: f64,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert(env!("CARGO_PKG_NAME").to_string(), env!("CARGO_PKG_VERSION").to_string());
        versions.insert("config_schema".into(), crate::pipeline::CONFIG_SCHEMA.to_string());
        Self {
            command: command.into(),
            config_hash: None,
            versions,
            outputs: Vec::new(),
            elapsed_seconds: 0.0,
        }
    }
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch_to(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`dispatch`] with explicit output streams.
pub fn dispatch_to<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    init_threads();
    match execute(cli.command, out) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|s| s.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<bool> {
    match command {
        Command::Run(a) => cmd_run(&a, out),
        Command::Cantor(a) => cmd_cantor(&a, out),
        Command::Rh { command } => cmd_rh(command, out),
        Command::Convexity { command } => cmd_convexity(command, out),
        Command::Weier { command } => cmd_weier(command, out),
        Command::Nadir { command } => cmd_nadir(command, out),
    }
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<bool> {
    let t = Instant::now();
    let text = std::fs::read_to_string(&a.config)?;
    let config = RunConfig::from_json(&text)?;
    let run = run_construction(&config)?;
    let mut manifest = RunManifest::new("run");
    manifest.config_hash = Some(config_hash(&config));
    manifest.outputs = write_artifacts(&run, &a.out)?;
    for s in &run.record.stages {
        let Some(c) = &s.measured.certificates else {
            writeln!(out, "stage {}: {} vertices", s.j, s.measured.mesh.vertices)?;
            continue;
        };
        let marks: Vec<String> = c
            .all()
            .iter()
            .map(|(n, c)| format!("{n}:{}", if c.pass { "ok" } else { "FAIL" }))
            .collect();
        writeln!(out, "stage {}: eps={:.6} {}", s.j, s.epsilon.to_f64(), marks.join(" "))?;
    }
    let sum = &run.record.summary;
    writeln!(
        out,
        "cauchy ratios {:?}, total {:.6e}; limit-set max gap {:.4}",
        sum.cauchy.ratios, sum.cauchy.total, sum.limit_set.max_gap
    )?;
    manifest.elapsed_seconds = t.elapsed().as_secs_f64();
    let path = a.out.join("manifest.json");
    manifest.outputs.push(path.clone());
    write_json(&path, &manifest)?;
    writeln!(out, "wrote {} files to {}", manifest.outputs.len(), a.out.display())?;
    Ok(sum.all_pass)
}

fn cmd_cantor(a: &CantorArgs, out: &mut dyn Write) -> Result<bool> {
    let tree = build_cantor_tree(&ConvexPiece::unit_square(), a.gamma, a.depth)?;
    let mut ok = true;
    writeln!(out, "level  pieces  max_diameter  overlaps  unnested")?;
    for i in 1..=a.depth {
        let overlaps = tree.intersecting_pairs(i)?.len();
        let unnested = tree.nesting_violations(i - 1)?.len();
        ok &= overlaps == 0 && unnested == 0 && tree.level(i)?.len() == 1 << (2 * i);
        writeln!(
            out,
            "{i:>5}  {:>6}  {:>12.6e}  {overlaps:>8}  {unnested:>8}",
            tree.level(i)?.len(),
            tree.max_diameter(i)?
        )?;
    }
    if let Some(p) = &a.svg {
        std::fs::write(p, tree.to_svg(a.level.unwrap_or(a.depth), 800.0)?)?;
    }
    if let Some(p) = &a.json {
        write_json(p, &tree.to_json())?;
    }
    Ok(ok)
}

fn fiber_family(a: f64) -> FiberDiscFamily {
    FiberDiscFamily::linear(
        ComplexPolynomial::monomial(C64::new(1.0, 0.0), 1),
        ComplexPolynomial::constant(C64::new(a, 0.0)),
    )
}

fn cmd_rh(command: RhCommand, out: &mut dyn Write) -> Result<bool> {
    match command {
        RhCommand::Solve { r, eps, a, json } => {
            let sol = rh_solve_disc(&fiber_family(a), r, eps, &RhOptions::default())?;
            let c = &sol.certificate;
            writeln!(out, "N = {}, r' = {:.6}, attempts {}", sol.n, sol.r_prime, sol.attempts)?;
            print_rh(c, out)?;
            if let Some(p) = json {
                write_json(&p, &sol)?;
            }
            Ok(c.passed())
        }
        RhCommand::Verify { n, r_prime, eps, a } => {
            let c = rh_verify(&fiber_family(a), &RhMap::Ansatz { n }, r_prime, eps, RhGrid::default())?;
            print_rh(&c, out)?;
            Ok(c.passed())
        }
    }
}

fn print_rh(c: &crate::riemann_hilbert::RhCertificate, out: &mut dyn Write) -> Result<()> {
    let mark = |p: bool| if p { "ok" } else { "FAIL" };
    writeln!(out, "center closeness   {:.6e} {}", c.center_closeness, mark(c.center_pass))?;
    writeln!(out, "boundary proximity {:.6e} {}", c.boundary_proximity, mark(c.boundary_pass))?;
    writeln!(out, "annulus proximity  {:.6e} {}", c.annulus_proximity, mark(c.annulus_pass))?;
    Ok(())
}

fn cmd_convexity(command: ConvexityCommand, out: &mut dyn Write) -> Result<bool> {
    let ConvexityCommand::Check {
        phi,
        half,
        n,
        tol,
        fd_step,
    } = command;
    let field = match phi {
        PhiChoice::Ball => norm_squared(half),
        PhiChoice::Saddle => ScalarField3::analytic([-half; 3], [half; 3], |x| x[0] * x[0] + x[1] * x[1] - x[2] * x[2])
            .with_hessian(|_| nalgebra::Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, 2.0, -2.0))),
    };
    let field = if fd_step.is_some() { field.without_hessian() } else { field };
    let rep = check_minimal_psh(&field, &Grid3::cube(half, n), tol, fd_step)?;
    writeln!(
        out,
        "min lambda1+lambda2 = {:.9} at {:?} over {} samples: {:?}",
        rep.min_over_region, rep.argmin, rep.samples, rep.verdict
    )?;
    Ok(rep.verdict != PshVerdict::NotMinimalPsh)
}

fn surface_data(s: Surface, h: f64) -> Result<SampledHolomorphicTriple> {
    let (f, spec) = match s {
        Surface::Enneper => (Holo::real(1.0), DomainSpec::disc(1.0, h)),
        Surface::Catenoid => (Holo::powi(Holo::z(), -2), DomainSpec::annulus(0.5, 2.0, h)),
    };
    let domain = Arc::new(build_domain(&spec)?);
    Ok(triple_from_fg(&f, &Holo::z(), domain)?)
}

fn cmd_weier(command: WeierCommand, out: &mut dyn Write) -> Result<bool> {
    match command {
        WeierCommand::Integrate { surface, h, ply } => {
            let phi = surface_data(surface, h)?;
            let base = phi.domain.mesh.nearest_vertex(C64::new(1.0, 0.0));
            let u = integrate_triple(&phi, base, [0.0; 3])?;
            writeln!(out, "vertices            {}", u.num_vertices())?;
            writeln!(out, "conformality        {:.3e}", conformality_residual(&phi))?;
            writeln!(out, "harmonicity         {:.3e}", u.harmonicity_residual())?;
            writeln!(out, "angle distortion    {:.3e}", u.angle_distortion())?;
            if let Some(p) = ply {
                let mesh = SurfaceMesh::from_positions(&phi.domain.mesh, &u.positions());
                write_ply(&mesh, PlyFormat::Ascii, std::io::BufWriter::new(std::fs::File::create(p)?))?;
            }
            Ok(true)
        }
        WeierCommand::Flux { surface, radius, n, h } => {
            let phi = surface_data(surface, h)?;
            let v = flux(&phi, &PathInDomain::circle(C64::new(0.0, 0.0), radius, n))?;
            writeln!(out, "flux = ({:.9}, {:.9}, {:.9})", v.value[0], v.value[1], v.value[2])?;
            Ok(true)
        }
    }
}

fn cmd_nadir(command: NadirCommand, out: &mut dyn Write) -> Result<bool> {
    let NadirCommand::Schedule {
        r1,
        rho1,
        eps1,
        j,
        rows,
    } = command;
    let s = make_schedule(r1, rho1, eps1, j)?;
    let shown: Vec<usize> = if j <= rows {
        (0..j).collect()
    } else {
        (0..rows / 2).chain(j - (rows - rows / 2)..j).collect()
    };
    writeln!(out, "{:>8}  {:>14}  {:>14}  {:>14}", "j", "r_j", "rho_j", "log2 eps_j")?;
    let mut last = None;
    for i in shown {
        if last.is_some_and(|l| i != l + 1) {
            writeln!(out, "{:>8}", "...")?;
        }
        writeln!(
            out,
            "{:>8}  {:>14.9}  {:>14.9}  {:>14.6}",
            i + 1,
            s.r[i],
            s.rho[i],
            s.eps[i].log2()
        )?;
        last = Some(i);
    }
    writeln!(out, "r limit {:.9}; recurrences hold: {}", s.r_limit, s.recurrences_hold())?;
    Ok(s.recurrences_hold())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.flush()?;
    Ok(())
}
