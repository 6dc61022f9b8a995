#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use instmix_core::synth::{write_fixture, FixtureSpec};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn instmix(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_instmix"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn generate(config: &Path, out: &Path, shards: usize) -> Run {
    instmix(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--shards",
        &shards.to_string(),
    ])
}

pub fn validate(config: &Path, out: &Path) -> Run {
    instmix(&[
        "validate",
        "--out",
        out.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ])
}

pub fn grid(config: &Path, kind: &str, out: &Path) -> Run {
    instmix(&[
        "grid",
        "--config",
        config.to_str().unwrap(),
        "--type",
        kind,
        "--out",
        out.to_str().unwrap(),
    ])
}

/// Three tasks per source, 24 records each, two held-in tasks and two
/// `mmlu_*` tasks.
pub fn small_fixture(dir: &Path) -> PathBuf {
    let mut spec = FixtureSpec::uniform(3, 24);
    spec.held_in = 2;
    spec.mmlu_tasks = 2;
    write_fixture(dir, &spec).unwrap()
}

pub const EQUAL_WEIGHTS: &str = "
[mixture.source_weights]
flan2021 = 1.0
t0sf = 1.0
super_natural_instructions = 1.0
cot = 1.0
dialog = 1.0
program_synthesis = 1.0
";

/// Writes `config.toml` next to the fixture manifest.
pub fn write_config(dir: &Path, top: &str, mixture: &str) -> PathBuf {
    let path = dir.join("config.toml");
    let text =
        format!("manifest = \"manifest.toml\"\n{top}\n[mixture]\n{mixture}\n{EQUAL_WEIGHTS}");
    fs::write(&path, text).unwrap();
    path
}

pub fn shard_files(out: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("shard-")
        })
        .collect();
    v.sort();
    v
}

pub fn sorted_lines(out: &Path) -> Vec<String> {
    let mut lines: Vec<String> = shard_files(out)
        .iter()
        .flat_map(|p| {
            fs::read_to_string(p)
                .unwrap()
                .lines()
                .map(String::from)
                .collect::<Vec<_>>()
        })
        .collect();
    lines.sort();
    lines
}

pub fn append_line(path: &Path, line: &str) {
    let mut text = fs::read_to_string(path).unwrap();
    text.push_str(line);
    text.push('\n');
    fs::write(path, text).unwrap();
}
