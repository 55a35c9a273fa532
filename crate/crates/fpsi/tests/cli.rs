use fpsi::cli::{run_cli, EXIT_CONFIG, EXIT_OK};

fn write(dir: &std::path::Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = "nx = 2\nny = 2\ndt = 0.05\nT = 0.1\ndelta = 0.2\nsnapshot_stride = 1\n";

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(run_cli(["fpsi", "frobnicate"]), EXIT_CONFIG);
    assert_eq!(run_cli(["fpsi"]), EXIT_CONFIG);
}

#[test]
fn configuration_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.cfg", &format!("{SMALL}mu_v = -1\n"));
    assert_eq!(run_cli(["fpsi", "run", "--config", &bad]), EXIT_CONFIG);
    assert_eq!(run_cli(["fpsi", "run"]), EXIT_CONFIG);
    assert_eq!(run_cli(["fpsi", "run", "--config", "/nonexistent/x.cfg"]), EXIT_CONFIG);
}

#[test]
fn run_writes_ledger_config_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "a.cfg", SMALL);
    let out = tmp.path().join("out");
    assert_eq!(run_cli(["fpsi", "run", "--config", &cfg, "--out", out.to_str().unwrap()]), EXIT_OK);
    let ledger = std::fs::read_to_string(out.join("ledger.csv")).unwrap();
    assert_eq!(ledger.lines().next().unwrap(), "n,t,E_half,E_full,D,res_eq1,res_eq2,min_det,min_gap_R,verdict");
    assert_eq!(ledger.lines().count(), 3);
    for kind in ["fluid", "body", "plate"] {
        for n in 0..=2 {
            let f = out.join(format!("{kind}_{n:06}.vtk"));
            assert!(std::fs::read_to_string(&f).unwrap().starts_with("# vtk DataFile Version 3.0\n"), "{}", f.display());
        }
    }
    let echoed = fpsi::io::load_config(&out.join("run.cfg")).unwrap();
    assert_eq!(echoed, fpsi::io::parse_config(SMALL).unwrap());
}

#[test]
fn csv_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "a.cfg", &format!("{SMALL}write_vtk = false\n"));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        assert_eq!(run_cli(["fpsi", "--threads", "2", "run", "--config", &cfg, "--out", d.to_str().unwrap()]), EXIT_OK);
    }
    assert_eq!(std::fs::read(a.join("ledger.csv")).unwrap(), std::fs::read(b.join("ledger.csv")).unwrap());
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "a.cfg", &format!("{SMALL}write_vtk = false\nout_dir = {}\n", tmp.path().join("cfg_dir").display()));
    let env_dir = tmp.path().join("env_dir");
    std::env::set_var(fpsi::io::OUT_DIR_ENV, &env_dir);
    let code = run_cli(["fpsi", "run", "--config", &cfg]);
    std::env::remove_var(fpsi::io::OUT_DIR_ENV);
    assert_eq!(code, EXIT_OK);
    assert!(env_dir.join("ledger.csv").exists());
    assert!(!tmp.path().join("cfg_dir").exists());
}

#[test]
fn mms_passes_and_bad_reference_fails() {
    assert_eq!(run_cli(["fpsi", "mms"]), EXIT_OK);
    let tmp = tempfile::tempdir().unwrap();
    // the reference must keep the plate inside the strip
    let cfg = write(tmp.path(), "r.cfg", &format!("{SMALL}ref_plate = 5\n"));
    assert_eq!(run_cli(["fpsi", "mms", "--config", &cfg]), EXIT_CONFIG);
    let cfg = write(tmp.path(), "s.cfg", &format!("{SMALL}residual_points = 10\n"));
    assert_eq!(run_cli(["fpsi", "mms", "--config", &cfg]), EXIT_OK);
}
