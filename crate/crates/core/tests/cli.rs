use calabi_lab::cli::{dispatch_to, EXIT_ERROR, EXIT_FAILED, EXIT_OK, EXIT_USAGE};
use calabi_lab::pipeline::{config_hash, EngineSpec, RunConfig};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut o = Vec::new();
    let mut e = Vec::new();
    let code = dispatch_to(std::iter::once("calabi-lab").chain(args.iter().copied()), &mut o, &mut e);
    (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
}

#[test]
fn run_writes_ledger_and_manifest() {
    let dir = std::env::temp_dir().join(format!("calabi-cli-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let config = RunConfig {
        mesh_h: 0.08,
        depth: 5,
        voxels: 20,
        limit_directions: 32,
        engine: EngineSpec {
            boundary_samples: 32,
            max_evaluations: 60,
            sweeps: 1,
            ..EngineSpec::default()
        },
        ..RunConfig::ball(2)
    };
    let cfg = dir.join("run.json");
    std::fs::write(&cfg, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let mut ledgers = Vec::new();
    for k in 0..2 {
        let out = dir.join(format!("out{k}"));
        let (code, text, _) = call(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(code == EXIT_OK || code == EXIT_FAILED, "{code}");
        assert!(text.contains("stage 2:"));
        for f in ["stage_1.ply", "stage_2.ply", "ledger.json", "metrics.csv", "manifest.json"] {
            assert!(out.join(f).exists(), "{f}");
        }
        let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["config_hash"], config_hash(&config));
        ledgers.push(std::fs::read(out.join("ledger.json")).unwrap());
    }
    assert_eq!(ledgers[0], ledgers[1]);

    std::fs::write(&cfg, "{\"schema\": 1}").unwrap();
    assert_eq!(call(&["run", "--config", cfg.to_str().unwrap()]).0, EXIT_ERROR);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn library_commands() {
    let (code, out, _) = call(&["rh", "solve"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("N = 3"));
    let (code, out, _) = call(&["weier", "flux"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("6.283185"));
    let (code, out, _) = call(&["cantor", "--gamma", "0.2", "--depth", "4"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("256"));
    let (code, out, _) = call(&["nadir", "schedule", "-J", "1000", "--rows", "6"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("..."));
    assert_eq!(call(&["nadir", "schedule", "--r1", "0"]).0, EXIT_ERROR);
    assert_eq!(call(&["rh", "verify"]).0, EXIT_USAGE);
}
