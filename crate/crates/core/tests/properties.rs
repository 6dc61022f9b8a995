use std::collections::{BTreeMap, BTreeSet};

use instmix_core::corpus::FieldValue;
use instmix_core::seed;
use instmix_core::synth::{build_catalog, FixtureSpec};
use instmix_core::templates::render_single;
use instmix_core::{
    compose_plan, execute_plan, leave_one_out, MixtureSpec, PromptRatios, PromptSetting, Source,
    Split, TaskFormat, TaskRecord, TemplateLibrary,
};
use proptest::prelude::*;
use rand::Rng;

const ONE_PER_FORMAT: &str = r#"
[[templates]]
template_id = "mc"
applicable_format = "multiple_choice"
preamble = "TASK"
instruction_pattern = "{question}\n{options}"
target_pattern = "{answer}"

[[templates]]
template_id = "ext"
applicable_format = "extractive"
instruction_pattern = "{context}\n{question}"
target_pattern = "{answer}"

[[templates]]
template_id = "gen"
applicable_format = "generative"
instruction_pattern = "{question}"
target_pattern = "{answer}"

[[templates]]
template_id = "nli"
applicable_format = "nli"
instruction_pattern = "{premise}\n{hypothesis}"
target_pattern = "{answer}"

[[templates]]
template_id = "dialog"
applicable_format = "dialog"
instruction_pattern = "{dialog_history}"
target_pattern = "{answer}"

[[templates]]
template_id = "code"
applicable_format = "program_synthesis"
instruction_pattern = "{question}"
target_pattern = "{code}"
"#;

/// The formatting choices visible in a rendered few-shot MC input.
fn signature(input: &str) -> (bool, Option<(&'static str, &'static str)>) {
    let before = input.starts_with("TASK");
    let query = input.rsplit("Options:").next().unwrap();
    if !input.contains("Options:") {
        return (before, None);
    }
    let (sep, items) = match query.strip_prefix('\n') {
        Some(rest) => ("newline", rest),
        None => {
            let rest = query.strip_prefix(' ').unwrap();
            (
                if rest.contains(", ") {
                    "comma"
                } else {
                    "space"
                },
                rest,
            )
        }
    };
    let label = if items.starts_with("(A)") {
        "paren"
    } else if items.starts_with("A.") {
        "dot"
    } else if items.starts_with("1.") {
        "number"
    } else if items.starts_with("- ") {
        "dash"
    } else {
        "none"
    };
    (before, Some((label, sep)))
}

#[test]
fn every_observable_variant_appears_in_1000_renders() {
    let catalog = build_catalog(&FixtureSpec::only(Source::T0SF, 1, 12));
    assert_eq!(catalog.tasks()[0].format, TaskFormat::MultipleChoice);
    let library = TemplateLibrary::from_toml_str(ONE_PER_FORMAT, "test").unwrap();
    assert_eq!(library.variants().len(), 60);
    let mut spec = MixtureSpec::equal(1000, 4);
    spec.source_weights = BTreeMap::from([(Source::T0SF, 1.0)]);
    spec.prompt_ratios = PromptRatios::zero_few(1.0);
    let plan = compose_plan(&catalog, &spec).unwrap();
    let out = execute_plan(&plan, &catalog, &spec, &library).unwrap();
    assert_eq!(out.len(), 1000);
    let seen: BTreeSet<_> = out.iter().map(|e| signature(&e.input_text)).collect();
    // Shown options: 5 label styles x 3 separators x 2 placements; hidden
    // options: 2 placements.
    assert_eq!(seen.len(), 32, "{seen:?}");
}

fn mc_record(options: Vec<String>, target: usize) -> TaskRecord {
    let fields = BTreeMap::from([
        (
            "question".to_string(),
            FieldValue::Text("Which one?".into()),
        ),
        ("options".to_string(), FieldValue::List(options)),
        (
            "target_option_index".to_string(),
            FieldValue::Index(target as u64),
        ),
    ]);
    TaskRecord::new(
        "mc",
        Source::T0SF,
        TaskFormat::MultipleChoice,
        0,
        Split::Train,
        fields,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn answer_text_survives_permutation(
        n in 2usize..8,
        target_seed in any::<u64>(),
        variant_pick in any::<prop::sample::Index>(),
        seed in any::<u64>(),
    ) {
        let options: Vec<String> = (0..n).map(|i| format!("answer text {i}")).collect();
        let target = (target_seed % n as u64) as usize;
        let record = mc_record(options.clone(), target);
        let library = TemplateLibrary::builtin();
        let variant = variant_pick.get(library.variants());
        let mut rng = seed::stream(seed, "prop", "mc");
        for template in library.intended_for(&record) {
            let e = render_single(&record, template, variant, &mut rng).unwrap();
            prop_assert!(e.target_text.ends_with(&options[target]));
            if variant.options_in_input && template.instruction_pattern.contains("{options}") {
                prop_assert!(e.input_text.contains(&options[target]));
            }
        }
    }

    #[test]
    fn plans_conserve_and_respect_caps(
        weights in prop::collection::vec(0.0f64..5.0, 6),
        total in 6usize..5000,
        cap_slack in prop::option::of(0usize..50),
        seed in any::<u64>(),
    ) {
        prop_assume!(weights.iter().filter(|w| **w > 0.0).count() >= 1);
        let catalog = build_catalog(&FixtureSpec::uniform(3, 4));
        let mut spec = MixtureSpec::equal(total, seed);
        spec.source_weights = Source::ALL.into_iter().zip(weights.iter().copied()).collect();
        spec.prompt_ratios = PromptRatios::new(0.4, 0.3, 0.2, 0.1);
        let plain = compose_plan(&catalog, &spec).unwrap();
        let largest = plain.per_source_counts.values().max().copied().unwrap();
        spec.per_task_cap = cap_slack.map(|s| largest.div_ceil(3) + s);
        let plan = compose_plan(&catalog, &spec).unwrap();

        prop_assert_eq!(plan.per_source_counts.values().sum::<usize>(), total);
        let norm: f64 = weights.iter().sum();
        for (i, s) in Source::ALL.into_iter().enumerate() {
            let share = plan.per_source_counts[&s] as f64 / total as f64;
            prop_assert!((share - weights[i] / norm).abs() < 6.0 / total as f64);
            let tasks: usize = plan.tasks.iter().filter(|t| t.source == s).map(|t| t.base).sum();
            prop_assert_eq!(tasks, plan.per_source_counts[&s]);
        }
        for t in &plan.tasks {
            prop_assert_eq!(t.settings.values().sum::<usize>(), t.base);
            if let Some(cap) = spec.per_task_cap {
                prop_assert!(t.base <= cap);
            }
            if t.source != Source::CoT {
                prop_assert_eq!(t.settings[&PromptSetting::CotZeroShot] + t.settings[&PromptSetting::CotFewShot], 0);
            }
        }
    }

    #[test]
    fn leave_one_out_keeps_relative_weights(
        weights in prop::collection::vec(0.01f64..5.0, 6),
        removed in 0usize..6,
    ) {
        let mut spec = MixtureSpec::equal(100, 3);
        spec.source_weights = Source::ALL.into_iter().zip(weights.iter().copied()).collect();
        let gone = Source::ALL[removed];
        let out = leave_one_out(&spec, gone).unwrap();
        prop_assert_eq!(out.weight(gone), 0.0);
        prop_assert!((out.source_weights.values().sum::<f64>() - 1.0).abs() < 1e-9);
        let kept: Vec<Source> = Source::ALL.into_iter().filter(|s| *s != gone).collect();
        for a in &kept {
            for b in &kept {
                let before = spec.weight(*a) / spec.weight(*b);
                let after = out.weight(*a) / out.weight(*b);
                prop_assert!((before - after).abs() < 1e-9 * before.max(1.0));
            }
        }
        prop_assert_eq!(&out.prompt_ratios, &spec.prompt_ratios);
        prop_assert_eq!(out.seed, spec.seed);
        prop_assert_eq!(out.total_examples, spec.total_examples);
    }
}

#[test]
fn execution_matches_plan_for_random_specs() {
    let catalog = build_catalog(&FixtureSpec::uniform(2, 9));
    let library = TemplateLibrary::builtin();
    let mut rng = seed::stream(1, "test", "random_specs");
    for round in 0..20 {
        let mut spec = MixtureSpec::equal(rng.gen_range(50..800), round);
        spec.source_weights = Source::ALL
            .into_iter()
            .map(|s| (s, rng.gen_range(0.0..1.0)))
            .collect();
        let plan = compose_plan(&catalog, &spec).unwrap();
        let out = execute_plan(&plan, &catalog, &spec, &library).unwrap();
        for t in &plan.tasks {
            let base = out
                .iter()
                .filter(|e| e.task_name == t.task && !e.inverted)
                .count();
            let inv = out
                .iter()
                .filter(|e| e.task_name == t.task && e.inverted)
                .count();
            assert_eq!(
                (base, inv),
                (t.base, t.inverted),
                "round {round} task {}",
                t.task
            );
        }
    }
}
