use calabi_lab::pipeline::{
    cauchy_diagnostic, config_hash, recompute, run_construction, write_artifacts, EngineSpec, RunConfig, RunRecord,
};
use calabi_lab::C64;

fn small(stages: usize) -> RunConfig {
    RunConfig {
        mesh_h: 0.08,
        depth: 6,
        voxels: 24,
        limit_directions: 64,
        hit_set: vec![[0.5, 0.5, 0.5]],
        engine: EngineSpec {
            boundary_samples: 32,
            max_evaluations: 80,
            sweeps: 1,
            ..EngineSpec::default()
        },
        ..RunConfig::ball(stages)
    }
}

fn scratch(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("calabi-pipeline-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn two_stage_run_is_deterministic_and_recomputable() {
    let config = small(2);
    let a = run_construction(&config).unwrap();
    let b = run_construction(&config).unwrap();
    let ja = serde_json::to_string(&a.record).unwrap();
    assert_eq!(ja, serde_json::to_string(&b.record).unwrap());
    assert_eq!(a.record.config_hash, config_hash(&config));

    let back: RunRecord = serde_json::from_str(&ja).unwrap();
    let rep = recompute(&back).unwrap();
    assert!(rep.identical, "{rep:?}");

    let rec = &a.record;
    assert_eq!(rec.stages.len(), 3);
    for (j, s) in rec.stages.iter().enumerate().skip(1) {
        let c = s.measured.certificates.as_ref().unwrap();
        assert!(c.a.pass && c.g.pass && c.b.pass, "stage {j}: {c:?}");
        assert_eq!(s.measured.mesh.holes, 1 << (2 * j));
    }
    assert!(rec.summary.cauchy.sufficient);
    let bound = rec.summary.cauchy_bound.unwrap();
    assert!(rec.summary.cauchy.total <= bound);
    assert_eq!(rec.cauchy_sum_within_bound(), Some(true));
}

#[test]
fn tampering_is_detected() {
    let run = run_construction(&small(1)).unwrap();
    let mut coeff = run.record.clone();
    coeff.stages[1].data.terms[0].coeff += C64::new(1e-9, 0.0);
    let rep = recompute(&coeff).unwrap();
    assert!(!rep.identical);
    assert_eq!(rep.mismatched_stages, vec![1]);

    let mut flag = run.record.clone();
    let c = flag.stages[1].measured.certificates.as_mut().unwrap();
    c.c.pass = !c.c.pass;
    assert!(!recompute(&flag).unwrap().identical);

    let mut hash = run.record.clone();
    hash.config_hash = "0".repeat(64);
    let rep = recompute(&hash).unwrap();
    assert!(!rep.identical && !rep.hash_matches);
}

#[test]
fn cauchy_from_stored_data_matches_summary() {
    let run = run_construction(&small(2)).unwrap();
    let rec = &run.record;
    let domain = &run.domains[0];
    let root = rec.config.root_piece().unwrap();
    let k0: Vec<C64> = domain.mesh.vertices.iter().copied().filter(|&z| !root.contains_strictly(z, 0.0)).collect();
    let data: Vec<_> = rec.stages.iter().map(|s| s.data.clone()).collect();
    let rep = cauchy_diagnostic(&data, &k0, rec.config.cauchy_slack);
    for (a, b) in rep.sup_differences.iter().zip(&rec.summary.cauchy.sup_differences) {
        assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} {b}");
    }
    for (j, d) in rep.sup_differences.iter().enumerate() {
        assert!(*d < rec.stages[j + 1].epsilon.to_f64());
    }
}

#[test]
fn artifacts_are_written() {
    let run = run_construction(&small(2)).unwrap();
    let dir = scratch("artifacts");
    let paths = write_artifacts(&run, &dir).unwrap();
    let names: Vec<String> = paths.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["stage_1.ply", "stage_2.ply", "ledger.json", "metrics.csv"]);
    let ply = std::fs::read_to_string(dir.join("stage_2.ply")).unwrap();
    assert!(ply.starts_with("ply"));
    assert!(ply.contains(&format!("element vertex {}", run.record.stages[2].measured.mesh.vertices)));
    let csv = std::fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let back: RunRecord = serde_json::from_str(&std::fs::read_to_string(dir.join("ledger.json")).unwrap()).unwrap();
    assert_eq!(back, run.record);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = small(1);
    c.p0 = [0.0, 0.0];
    assert!(run_construction(&c).is_err());
    let mut c = small(1);
    c.schema = 99;
    assert!(RunConfig::from_json(&serde_json::to_string(&c).unwrap()).is_err());
    let mut c = small(2);
    c.values.truncate(2);
    assert!(c.validate().is_err());
}
