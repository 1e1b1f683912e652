use std::path::Path;
use std::process::{Command, Output};

use fracorbit_cli::io::{read_table, read_traces};
use fracorbit_cli::{compare, run, CliError, ExperimentConfig, RESOLVED_CONFIG};

const BASE: &str = r#"
alpha = 0.7
deterministic = true

[profile]
delta = 0.45

[domain]
kind = "bounded"
lengths = [4.0]

[orbit]
kind = "sine"
amplitude = [0.05]
omega = 6.283185307179586
speed_bound = 1.0

[observation]
points = [[0.15]]
"#;

fn config(kind: &str, extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!("kind = \"{kind}\"\n{BASE}\n{extra}")).unwrap()
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracorbit"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn verify_passes_and_reports_kernel_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["verify", "--output", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(
        stdout.lines().any(|l| l.starts_with("PASS kernel_identity_order")),
        "{stdout}"
    );
    let t = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(t.lines().skip(1).all(|l| l.ends_with(",1")), "{t}");
}

#[test]
fn alpha_out_of_range_exits_1_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "kind = \"simulate\"\n{}\n[grid]\nn_steps = 8\n",
        BASE.replace("alpha = 0.7", "alpha = 2.5")
    );
    let out = bin(&["run", &write_config(dir.path(), &text)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha out of range (0.1, 2]"));
}

#[test]
fn config_errors_name_the_key() {
    let unknown = ExperimentConfig::from_toml(&format!("kind = \"simulate\"\nbogus_key = 1\n{BASE}"));
    match unknown {
        Err(CliError::Config { key, .. }) => assert_eq!(key, "bogus_key"),
        other => panic!("{other:?}"),
    }
    let no_grid = ExperimentConfig::from_toml(&format!("kind = \"simulate\"\n{BASE}"));
    match no_grid {
        Err(e @ CliError::Config { .. }) => {
            assert!(e.to_string().contains("grid"), "{e}");
            assert_eq!(e.exit_code(), 1);
        }
        other => panic!("{other:?}"),
    }
    let no_stability = ExperimentConfig::from_toml(&format!(
        "kind = \"stability\"\nalphas = [0.5]\n{BASE}\n[grid]\nn_steps = 8\n"
    ));
    assert!(matches!(no_stability, Err(CliError::Config { ref key, .. }) if key == "stability"));
}

#[test]
fn zero_amplitude_gives_zero_traces() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("simulate", "[grid]\nn_steps = 16\n");
    cfg.profile.as_mut().unwrap().amplitude = 0.0;
    run(&cfg, Some(dir.path())).unwrap();
    let data = read_traces(&dir.path().join("traces.csv")).unwrap();
    assert!(data.traces[0].values().iter().all(|&v| v == 0.0));
    assert!(dir.path().join("metadata.json").exists());
}

#[test]
fn identical_runs_compare_equal() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config(
        "reconstruct",
        "[grid]\nn_steps = 16\n[noise]\nlevel = 0.001\nseed = 3\n",
    );
    run(&cfg, Some(a.path())).unwrap();
    run(&cfg, Some(b.path())).unwrap();
    let r = compare(a.path(), b.path()).unwrap();
    assert!(r.identical(), "{r:?}");
    for f in ["traces.csv", "reconstruction.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
    let out = bin(&["compare", a.path().to_str().unwrap(), b.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn noise_seed_changes_traces_not_truth() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let extra = "[grid]\nn_steps = 64\n[reconstruction.solver]\ndt = 0.0625\nmollifier = 2\n";
    let mut cfg = config("reconstruct", extra);
    cfg.noise.level = 0.002;
    cfg.noise.seed = 1;
    run(&cfg, Some(a.path())).unwrap();
    cfg.noise.seed = 2;
    run(&cfg, Some(b.path())).unwrap();
    let r = compare(a.path(), b.path()).unwrap();
    assert_eq!(r.get("reconstruction.csv", "gamma_true_1"), Some(0.0));
    assert!(r.get("traces.csv", "u(0.15)").unwrap() > 0.0);
    assert!(r.get("reconstruction.csv", "gamma_rec_1").unwrap() > 0.0);
}

#[test]
fn forward_refinement_diffs_decrease() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (k, refine) in [1usize, 2, 4].iter().enumerate() {
        let cfg = config("simulate", &format!("[grid]\nn_steps = 16\nrefine = {refine}\n"));
        run(&cfg, Some(dirs[k].path())).unwrap();
    }
    let coarse = compare(dirs[0].path(), dirs[1].path()).unwrap();
    let fine = compare(dirs[1].path(), dirs[2].path()).unwrap();
    let (c, f) = (
        coarse.get("traces.csv", "u(0.15)").unwrap(),
        fine.get("traces.csv", "u(0.15)").unwrap(),
    );
    assert!(f < c && f > 0.0, "{c:e} -> {f:e}");
}

#[test]
fn resolved_config_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("simulate", "[grid]\nn_steps = 16\n[noise]\nlevel = 0.01\nseed = 5\n");
    run(&cfg, Some(a.path())).unwrap();
    let echo = ExperimentConfig::from_file(&a.path().join(RESOLVED_CONFIG)).unwrap();
    assert_eq!(echo.noise, cfg.noise);
    assert_eq!(echo.profile, cfg.profile);
    run(&echo, Some(b.path())).unwrap();
    assert!(compare(a.path(), b.path()).unwrap().identical());
}

#[test]
fn compare_rejects_schema_mismatch() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&config("simulate", "[grid]\nn_steps = 8\n"), Some(a.path())).unwrap();
    run(&config("simulate", "[grid]\nn_steps = 16\n"), Some(b.path())).unwrap();
    assert!(matches!(compare(a.path(), b.path()), Err(CliError::Schema(_))));
    let out = bin(&["compare", a.path().to_str().unwrap(), b.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn newton_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let src = tempfile::tempdir().unwrap();
    run(&config("simulate", "[grid]\nn_steps = 16\n"), Some(src.path())).unwrap();
    // a trace jump no source position can explain
    let table = read_table(&src.path().join("traces.csv")).unwrap();
    let mut text = String::from("t,u(0.15)\n");
    for (m, r) in table.rows.iter().enumerate() {
        let v = if m >= 5 { r[1] + 1.0 } else { r[1] };
        text.push_str(&format!("{:.16e},{:.16e}\n", r[0], v));
    }
    let data = dir.path().join("jump.csv");
    std::fs::write(&data, text).unwrap();
    let cfg_text = format!(
        "kind = \"reconstruct\"\nalpha = 1.0\noutput = \"{}\"\n[profile]\ndelta = 0.45\n[domain]\nkind = \"bounded\"\nlengths = [4.0]\n[reconstruction]\ndata_file = \"{}\"\n",
        dir.path().join("out").display(),
        data.display()
    );
    let out = bin(&["run", &write_config(dir.path(), &cfg_text)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Newton"));
}

#[test]
fn bad_thread_env_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "kind = \"simulate\"\n{}\n[grid]\nn_steps = 8\n",
        BASE.replace("deterministic = true", "")
    );
    let out = Command::new(env!("CARGO_BIN_EXE_fracorbit"))
        .args([
            "run",
            &write_config(dir.path(), &text),
            "--output",
            dir.path().join("o").to_str().unwrap(),
        ])
        .env("FRACORBIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("threads"));
}

#[test]
fn stability_kind_writes_the_ratio_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(&format!(
        "kind = \"stability\"\nalphas = [0.5, 1.5]\n{}\n[grid]\nn_steps = 16\n[stability]\npairs = 2\nseed = 4\n",
        BASE.replace("alpha = 0.7", "")
    ))
    .unwrap();
    run(&cfg, Some(dir.path())).unwrap();
    let t = read_table(&dir.path().join("stability.csv")).unwrap();
    assert_eq!(t.header, ["pair_id", "alpha", "c_norm_diff", "trace_norm", "ratio"]);
    assert_eq!(t.rows.len(), 4);
    assert!(t.rows.iter().all(|r| r[4].is_finite() && r[4] > 0.0));
}
