use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONFIGS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");

fn pgx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgx"))
        .args(args)
        .env_remove("PGX_SEED")
        .env_remove("PGX_OUT")
        .output()
        .unwrap()
}

fn config(name: &str) -> String {
    format!("{CONFIGS}/{name}.toml")
}

fn small_profile(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(config("corridor_fig4c"))
        .unwrap()
        .replace("points = 99", "points = 5")
        .replace("directions = 500", "directions = 40");
    let path = dir.join("small.toml");
    fs::write(&path, text).unwrap();
    path
}

fn read(dir: &Path, file: &str) -> Vec<u8> {
    fs::read(dir.join(file)).unwrap()
}

#[test]
fn profile_run_writes_one_table_per_objective() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let run = pgx(&["run", &config("corridor_fig4c"), "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for name in ["J", "La", "Ls"] {
        let csv = String::from_utf8(read(&out, &format!("profile_{name}.csv"))).unwrap();
        assert!(csv.starts_with("theta,p_D_pos,p_D_lo,p_D_hi,p_G_pos,p_G_lo,p_G_hi,in_ball"));
        assert_eq!(csv.lines().count(), 100);
    }
    assert!(out.join("profile.json").exists() && out.join("manifest.json").exists());
}

#[test]
fn negative_weight_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("corridor_fig4c")).unwrap().replace("weight = 0.05", "weight = -0.05");
    let path = tmp.path().join("neg.toml");
    fs::write(&path, text).unwrap();
    for args in [vec!["validate", path.to_str().unwrap()], vec!["run", path.to_str().unwrap()]] {
        let out = pgx(&args);
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("neg.toml:") && err.contains("weight"), "{err}");
    }
}

#[test]
fn same_seed_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_profile(tmp.path());
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for (dir, seed) in [(&a, "3"), (&b, "3"), (&c, "4")] {
        let run = pgx(&["run", cfg.to_str().unwrap(), "--seed", seed, "--out", dir.to_str().unwrap()]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    for file in ["profile_J.csv", "profile_La.csv", "profile_Ls.csv", "profile.json"] {
        assert_eq!(read(&a, file), read(&b, file), "{file}");
    }
    assert_ne!(read(&a, "profile_Ls.csv"), read(&c, "profile_Ls.csv"));
}

#[test]
fn manifest_reproduces_its_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_profile(tmp.path());
    let (first, second) = (tmp.path().join("first"), tmp.path().join("second"));
    assert!(pgx(&["run", cfg.to_str().unwrap(), "--out", first.to_str().unwrap()]).status.success());
    let manifest = first.join("manifest.json");
    let rerun = pgx(&["run", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(rerun.status.success(), "{}", String::from_utf8_lossy(&rerun.stderr));
    for file in ["profile_J.csv", "profile_La.csv", "profile_Ls.csv", "profile.json"] {
        assert_eq!(read(&first, file), read(&second, file), "{file}");
    }
}

#[test]
fn bundled_configs_validate() {
    let mut count = 0;
    for entry in fs::read_dir(CONFIGS).unwrap() {
        let path = entry.unwrap().path();
        let out = pgx(&["validate", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
        count += 1;
    }
    assert_eq!(count, 13);
}

#[test]
fn bad_seed_variable_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_pgx"))
        .args(["run", &config("corridor_fig4a")])
        .env("PGX_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn layouts_print_the_maze() {
    let out = pgx(&["layouts", "Empty-8x8"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 8);
    let unknown = pgx(&["layouts", "Labyrinth"]);
    assert!(!unknown.status.success());
}
