use std::path::Path;
use std::process::{Command, Output};

const DIFFUSION: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/diffusion.toml");
const PIERREHUMBERT: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../configs/pierrehumbert.toml"
);

fn batchelor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_batchelor"))
        .args(args)
        .env_remove("BATCHELOR_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn simulate_diffusion(dir: &Path) {
    let o = batchelor(&[
        "simulate",
        "--config",
        DIFFUSION,
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn diffusion_spectrum_is_one_shell() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    simulate_diffusion(&run);
    let o = batchelor(&["spectrum", "--run", run.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let mass: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    let expected = 1.0 / (8.0 * std::f64::consts::PI.powi(2) * 1e-3);
    assert!((mass - expected).abs() < 1e-4 * expected);
}

#[test]
fn density_on_diffusion_run_is_all_bad() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    simulate_diffusion(&run);
    let before = std::fs::read(run.join("summary.json")).unwrap();
    for (h, alpha) in [("1", "0.01"), ("2", "0.5"), ("4", "3")] {
        let o = batchelor(&[
            "density",
            "--run",
            run.to_str().unwrap(),
            "--h",
            h,
            "--alpha",
            alpha,
            "--window",
            "2,20",
        ]);
        assert!(o.status.success());
        let text = stdout(&o);
        let row = text.lines().nth(1).unwrap();
        let mu: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(mu, 1.0);
    }
    // post-processing leaves the run untouched
    assert_eq!(std::fs::read(run.join("summary.json")).unwrap(), before);
    let into_run = run.join("density.csv");
    let o = batchelor(&[
        "density",
        "--run",
        run.to_str().unwrap(),
        "--h",
        "1",
        "--alpha",
        "1",
        "--window",
        "2,20",
        "--out",
        into_run.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!into_run.exists());
}

#[test]
fn audit_of_zero_velocity_is_equality() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("audit");
    let o = batchelor(&[
        "audit",
        "--config",
        DIFFUSION,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("equality"));
    assert!(out.join("flux_audit.csv").exists());
}

#[test]
fn pierrehumbert_smoke_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let small = [
        "--set",
        "grid.max_mode=24",
        "--set",
        "physics.nu=1e-2",
        "--set",
        "physics.horizon=2.0",
        "--set",
        "ensemble.M=4",
        "--set",
        "sampling.tail_threshold=1e-3",
        "--set",
        "analysis.audit_cadence=16",
    ];
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        let mut args = vec![
            "simulate",
            "--config",
            PIERREHUMBERT,
            "--out",
            dir.to_str().unwrap(),
        ];
        args.extend(small);
        let o = batchelor(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(dir.join("summary.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn bad_inputs_exit_nonzero() {
    let o = batchelor(&[
        "simulate",
        "--config",
        DIFFUSION,
        "--set",
        "ensemble.bogus=1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let o = batchelor(&[
        "simulate",
        "--config",
        DIFFUSION,
        "--set",
        "physics.nu=1e-6",
    ]);
    assert_eq!(o.status.code(), Some(4));

    let o = batchelor(&["spectrum", "--run", "/definitely/not/here"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_passes() {
    let o = batchelor(&["oracle", "--trials", "20"]);
    assert!(o.status.success());
}
