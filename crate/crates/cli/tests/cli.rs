mod common;

use std::fs;

use common::*;
use instmix_core::{GenerationReport, PromptSetting, RenderedExample};

const MIX: &str = "total_examples = 600\nseed = 5\n";

fn report(out: &std::path::Path) -> GenerationReport {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn single_shard_line_count_matches_report() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let config = write_config(dir.path(), "", MIX);
    let out = dir.path().join("out");
    let run = generate(&config, &out, 1);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let shards = shard_files(&out);
    assert_eq!(shards.len(), 1);
    assert!(shards[0].ends_with("shard-00000-of-00001"));
    let lines = fs::read_to_string(&shards[0]).unwrap().lines().count();
    assert_eq!(lines, report(&out).total_emitted);
    assert!(out.join("plan.json").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let config = write_config(dir.path(), "", MIX);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(generate(&config, &a, 4).code, 0);
    assert_eq!(generate(&config, &b, 4).code, 0);
    for name in [
        "shard-00000-of-00004",
        "shard-00003-of-00004",
        "report.json",
        "plan.json",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    assert_eq!(report(&a).config_digest, report(&b).config_digest);
}

#[test]
fn digest_tracks_config() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let config = write_config(dir.path(), "", MIX);
    let a = dir.path().join("a");
    assert_eq!(generate(&config, &a, 1).code, 0);
    let config = write_config(dir.path(), "", "total_examples = 600\nseed = 6\n");
    let b = dir.path().join("b");
    assert_eq!(generate(&config, &b, 1).code, 0);
    assert_ne!(report(&a).config_digest, report(&b).config_digest);
}

#[test]
fn shard_count_does_not_change_records() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let config = write_config(dir.path(), "", MIX);
    let (one, many) = (dir.path().join("one"), dir.path().join("many"));
    assert_eq!(generate(&config, &one, 1).code, 0);
    assert_eq!(generate(&config, &many, 16).code, 0);
    assert_eq!(shard_files(&many).len(), 16);
    assert_eq!(sorted_lines(&one), sorted_lines(&many));
}

#[test]
fn regenerating_with_fewer_shards_replaces_old_ones() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let config = write_config(dir.path(), "", MIX);
    let out = dir.path().join("out");
    assert_eq!(generate(&config, &out, 8).code, 0);
    assert_eq!(generate(&config, &out, 2).code, 0);
    assert_eq!(shard_files(&out).len(), 2);
    assert_eq!(validate(&config, &out).code, 0);
}

#[test]
fn ten_percent_few_shot_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let mix = "total_examples = 10000\nseed = 1\n[mixture.prompt_ratios]\nzero_shot = 0.9\nfew_shot = 0.1\ncot_zero_shot = 0.0\ncot_few_shot = 0.0\n";
    let config = write_config(dir.path(), "", mix);
    let out = dir.path().join("out");
    assert_eq!(generate(&config, &out, 2).code, 0);
    assert_eq!(report(&out).per_setting[&PromptSetting::FewShot], 1000);
}

#[test]
fn validate_accepts_fresh_output() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let config = write_config(dir.path(), "exclusions = [\"mmlu_*\"]", MIX);
    let out = dir.path().join("out");
    assert_eq!(generate(&config, &out, 3).code, 0);
    let run = validate(&config, &out);
    assert_eq!(run.code, 0, "{}", run.stdout);
    assert!(run.stdout.contains("no violations"));
}

#[test]
fn injected_excluded_record_is_leakage() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let config = write_config(dir.path(), "exclusions = [\"mmlu_*\"]", MIX);
    let out = dir.path().join("out");
    assert_eq!(generate(&config, &out, 2).code, 0);
    let shard = &shard_files(&out)[1];
    let mut leaked: RenderedExample =
        serde_json::from_str(fs::read_to_string(shard).unwrap().lines().next().unwrap()).unwrap();
    leaked.task_name = "mmlu_001".into();
    append_line(shard, &serde_json::to_string(&leaked).unwrap());
    let run = validate(&config, &out);
    assert_eq!(run.code, 3);
    assert!(run.stdout.contains("exclusion leakage"), "{}", run.stdout);
}

#[test]
fn altered_exemplar_count_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let config = write_config(dir.path(), "", MIX);
    let out = dir.path().join("out");
    assert_eq!(generate(&config, &out, 1).code, 0);
    let shard = &shard_files(&out)[0];
    let text = fs::read_to_string(shard).unwrap();
    let mut done = false;
    let edited: Vec<String> = text
        .lines()
        .map(|l| {
            let mut e: RenderedExample = serde_json::from_str(l).unwrap();
            if !done && e.prompt_setting == PromptSetting::FewShot {
                e.num_exemplars = 4;
                done = true;
            }
            serde_json::to_string(&e).unwrap()
        })
        .collect();
    assert!(done);
    fs::write(shard, edited.join("\n") + "\n").unwrap();
    let run = validate(&config, &out);
    assert_eq!(run.code, 3);
    assert!(run.stdout.contains("exemplar count"), "{}", run.stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_fixture(dir.path());
    let out = dir.path().join("out");

    let missing = dir.path().join("nope.toml");
    assert_eq!(generate(&missing, &out, 1).code, 1);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "manifest = \n").unwrap();
    assert_eq!(generate(&bad, &out, 1).code, 1);

    let config = write_config(dir.path(), "", MIX);
    assert_eq!(generate(&config, &out, 0).code, 1);
    assert_eq!(instmix(&["generate", "--config"]).code, 1);
    assert_eq!(instmix(&["--help"]).code, 0);
    assert_eq!(grid(&config, "random", &dir.path().join("g")).code, 1);

    let weights = write_config(
        dir.path(),
        "",
        "total_examples = 600\nseed = 5\nper_task_cap = -1\n",
    );
    assert_eq!(generate(&weights, &out, 1).code, 1);

    // Break one task file: a data error naming the task and line.
    let task = dir.path().join("tasks/dialog_0001.jsonl");
    append_line(&task, "{\"split\": \"train\", \"fields\": ");
    let config = write_config(dir.path(), "", MIX);
    let run = generate(&config, &out, 1);
    assert_eq!(run.code, 2);
    assert!(
        run.stderr.contains("dialog_0001") && run.stderr.contains("25"),
        "{}",
        run.stderr
    );
    assert!(!out.exists() || shard_files(&out).is_empty());
    assert!(manifest.exists());
}

#[test]
fn validate_without_shards_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let config = write_config(dir.path(), "", MIX);
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(validate(&config, &empty).code, 2);
}

#[test]
fn grids_have_expected_sizes_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let config = write_config(dir.path(), "exclusions = [\"mmlu_*\"]", MIX);
    for (kind, count) in [("leave_one_out", 8), ("fewshot_sweep", 9)] {
        let gdir = dir.path().join(kind);
        let run = grid(&config, kind, &gdir);
        assert_eq!(run.code, 0, "{}", run.stderr);
        let mut configs: Vec<_> = fs::read_dir(&gdir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        configs.sort();
        assert_eq!(configs.len(), count, "{kind}");
        for c in configs {
            let out = dir.path().join("runs").join(c.file_stem().unwrap());
            let g = generate(&c, &out, 2);
            assert_eq!(g.code, 0, "{}: {}", c.display(), g.stderr);
            let v = validate(&c, &out);
            assert_eq!(v.code, 0, "{}: {}", c.display(), v.stdout);
        }
    }
}

#[test]
fn task_scaling_needs_enough_tasks() {
    let dir = tempfile::tempdir().unwrap();
    small_fixture(dir.path());
    let config = write_config(dir.path(), "", MIX);
    let run = grid(&config, "task_scaling", &dir.path().join("g"));
    assert_eq!(run.code, 1, "{}", run.stderr);
}

#[test]
fn task_scaling_grid_over_full_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = instmix_core::synth::write_fixture(
        dir.path(),
        &instmix_core::synth::FixtureSpec::full_scale(6),
    )
    .unwrap();
    let catalog = instmix_core::load_catalog(&manifest).unwrap();
    let held_in = catalog.held_in();
    assert_eq!(held_in.len(), 8);
    let config = write_config(dir.path(), "", "total_examples = 3000\nseed = 12\n");
    let gdir = dir.path().join("grid");
    let run = grid(&config, "task_scaling", &gdir);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let mut configs: Vec<_> = fs::read_dir(&gdir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    configs.sort();
    assert_eq!(configs.len(), 8);
    for (c, n) in configs.iter().zip([8, 25, 50, 100, 200, 400, 800, 1873]) {
        let cfg = instmix_core::GenerationConfig::load(c).unwrap();
        let tasks = cfg.include_tasks.unwrap();
        assert_eq!(tasks.len(), n, "{}", c.display());
        assert!(held_in.iter().all(|h| tasks.contains(h)));
    }
    for c in &configs {
        let out = dir.path().join("runs").join(c.file_stem().unwrap());
        let g = generate(c, &out, 3);
        assert_eq!(g.code, 0, "{}: {}", c.display(), g.stderr);
        let v = validate(c, &out);
        assert_eq!(v.code, 0, "{}: {}", c.display(), v.stdout);
    }
}
