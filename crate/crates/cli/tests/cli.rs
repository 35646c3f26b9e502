use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bulksurf"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn bulksurf")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "[scenario]\nkind = verify-ibp\n\n[quadrature]\nnodes = 12\n").unwrap();
    let o = run(&["verify", cfg.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = text(&o.stderr);
    assert!(err.contains("quadrature.nodes") && err.contains("line 5"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bad_values_and_overrides_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("n.cfg");
    fs::write(&cfg, "[scenario]\nkind = verify-geometry\n[quadrature]\nn = 4\n").unwrap();
    let o = run(&["verify", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("quadrature.n"));

    let bubble = configs().join("bubble.cfg");
    let o = run(&["bubble", bubble.to_str().unwrap(), "--override", "material.A.viscosity=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("material.A.viscosity"));

    let o = run(&["verify", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn example_verify_configs_pass() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["verify".to_string()];
    for entry in fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "cfg") && !fs::read_to_string(&p).unwrap().contains("kind = bubble") {
            args.push(p.to_str().unwrap().to_string());
        }
    }
    args.extend(["--out".into(), dir.path().to_str().unwrap().into()]);
    let o = bin().args(&args).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}{}", text(&o.stdout), text(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l == "scenario,check,pass,fail,max_gap"));
    assert!(summary.contains("ibp-sphere,ibp_surface,12,0,"));
    assert!(dir.path().join("ibp-sphere/ibp.csv").exists());
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfgs = ["residuals-random.cfg", "variation.cfg", "thermo.cfg"].map(|c| configs().join(c));
    let mut runs = Vec::new();
    for (k, jobs) in ["1", "3", "3"].into_iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let mut args: Vec<&str> = vec!["verify"];
        args.extend(cfgs.iter().map(|c| c.to_str().unwrap()));
        args.extend(["--seed", "99", "--jobs", jobs, "--no-timestamp", "--override", "count=3", "--out", out.to_str().unwrap()]);
        let o = run(&args);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stdout));
        runs.push((tree(&out), o.stdout));
    }
    assert_eq!(runs[0].0.len(), 5);
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
    let head = text(&runs[0].0[Path::new("variation/variation.csv")]);
    assert!(head.starts_with("# scenario variation kind verify-variation seed 99\ntheorem,r,variation_id,side_a,side_b,gap,pass\n"));

    let other = dir.path().join("other");
    let o = run(&[
        "verify",
        cfgs[1].to_str().unwrap(),
        "--seed",
        "100",
        "--no-timestamp",
        "--override",
        "count=3",
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(tree(&other)[Path::new("variation/variation.csv")], runs[0].0[Path::new("variation/variation.csv")]);
}

#[test]
fn timestamp_line_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("geometry-sphere.cfg");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["verify", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["verify", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--no-timestamp"]).status.success());
    let with = fs::read_to_string(a.join("summary.csv")).unwrap();
    let without = fs::read_to_string(b.join("summary.csv")).unwrap();
    assert!(with.starts_with("# generated unix "));
    assert_eq!(with.split_once('\n').unwrap().1, without);
}

#[test]
fn bubble_override_dt_writes_trajectory_and_drift_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("bubble.cfg");
    let o = run(&["bubble", cfg.to_str().unwrap(), "--override", "dt=1e-4", "--out", dir.path().to_str().unwrap()]);
    let stdout = text(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}{}", text(&o.stderr));
    assert!(stdout.contains("dt 1e-4"), "{stdout}");
    assert!(stdout.contains("drift_mass_A") && stdout.contains("gap_1_14"));
    let traj = fs::read_to_string(dir.path().join("bubble/trajectory.csv")).unwrap();
    let mut lines = traj.lines().skip_while(|l| l.starts_with('#'));
    assert_eq!(lines.next(), Some("t,R,U,rho_A,rho_S,mass_A,mass_S,kinetic,dissipated,work,gap_1_14"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 100);
    assert!((rows[1][0] - rows[0][0]) > 0.0);
    let (m0, s0) = (rows[0][5], rows[0][6]);
    for r in &rows {
        assert!(((r[5] - m0) / m0).abs() <= 1e-10 && ((r[6] - s0) / s0).abs() <= 1e-10);
    }
    assert!(dir.path().join("bubble/consistency.csv").exists());
}

#[test]
fn failing_checks_exit_one_and_are_counted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("ibp-sphere.cfg");
    let o = run(&["verify", cfg.to_str().unwrap(), "--tol-scale", "1e-9", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stdout).contains("FAIL ibp-sphere"));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let failing: usize = summary
        .lines()
        .filter(|l| l.starts_with("ibp-sphere,"))
        .map(|l| l.split(',').nth(3).unwrap().parse::<usize>().unwrap())
        .sum();
    assert!(failing > 0);
}

#[test]
fn runtime_errors_name_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.cfg");
    fs::write(&cfg, "[scenario]\nkind = verify-ibp\n[surface]\nkind = sphere\nradius = 2\nouter = 1.5\n").unwrap();
    let o = run(&["verify", cfg.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = text(&o.stdout);
    assert!(stdout.contains("check `ibp_bulk_b`") && stdout.contains("outer radius"), "{stdout}");
}

#[test]
fn ladder_reports_spectral_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("ibp-perturbed.cfg");
    let o = run(&["ladder", cfg.to_str().unwrap(), "--N", "8,12,16", "--out", dir.path().to_str().unwrap(), "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stdout));
    let table = fs::read_to_string(dir.path().join("ibp-perturbed/ladder.csv")).unwrap();
    let surface: Vec<f64> = table
        .lines()
        .filter(|l| l.starts_with("ibp_surface,"))
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(surface.len(), 3);
    assert!(surface[1] < surface[0] * 1e-2 && surface[2] < surface[1] * 1e-2, "{surface:?}");
    assert!(table.contains(",converging"));

    let o = run(&["ladder", configs().join("bubble.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
