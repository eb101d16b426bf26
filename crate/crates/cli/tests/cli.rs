// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn powmfg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_powmfg"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const SMALL_GAME: &str = r#"
[game]
horizon = 3
wealth_points = 31
alpha_points = 11
tx_points = 11
"#;

#[test]
fn sweep_succeeds_and_lists_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[sweep]\nbetas = [0.25, 0.26]\n");
    let out_dir = dir.path().join("out");
    let out = powmfg(&[
        "bitcoin-sweep",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("safe_value.csv"));
    let csv = std::fs::read_to_string(out_dir.join("safe_value.csv")).unwrap();
    assert!(csv.starts_with("beta,t_star\n"));
    assert!(out_dir.join("run.json").exists());
    assert!(out_dir.join("resolved_config.toml").exists());
}

#[test]
fn solve_writes_the_equilibrium_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_GAME);
    let out_dir = dir.path().join("eq");
    let out = powmfg(&[
        "solve",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let headers = [
        ("mean_alpha.csv", "t,alpha_bar"),
        ("attack.csv", "t,attack_prob"),
        ("wealth.csv", "t,x,mass"),
        ("policy.csv", "t,x,alpha,T"),
        ("value.csv", "t,x,value"),
    ];
    for (file, header) in headers {
        let text = std::fs::read_to_string(out_dir.join(file)).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{file}");
    }
}

#[test]
fn unconverged_solve_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL_GAME}beta = 0.45\nmax_iterations = 1\n");
    let cfg = write_config(dir.path(), &text);
    let out = powmfg(&[
        "solve",
        "--config",
        &cfg,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let out_dir = out_dir.to_str().unwrap();
    let cases = [
        ("solve", "[game]\nbeta = 1.5\n"),
        ("solve", "[game]\nunknown_key = 1\n"),
        ("solve", "command = \"bitcoin-sweep\"\n"),
        ("simulate", SMALL_GAME),
        ("solve", "[game\n"),
    ];
    for (command, text) in cases {
        let cfg = write_config(dir.path(), text);
        let out = powmfg(&[command, "--config", &cfg, "--out", out_dir]);
        assert_eq!(code(&out), 1, "{command} with {text:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(code(&powmfg(&["no-such-command", "--config", "x"])), 1);
}

#[test]
fn unwritable_output_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("sub");
    let out = powmfg(&[
        "bitcoin-sweep",
        "--config",
        &cfg,
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    let missing = powmfg(&[
        "bitcoin-sweep",
        "--config",
        dir.path().join("none.toml").to_str().unwrap(),
    ]);
    assert_eq!(code(&missing), 3);
}
