//! Generation statistics and output validation.
//!
//! Shards are scanned independently into a [`Scan`]; scans merge
//! associatively, so the order in which shards are read never matters.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Source;
use crate::inversion::floor_rate;
use crate::mixer::{AllocationPlan, MixtureSpec};
use crate::packing::{empty_setting_counts, SettingCounts};
use crate::templates::{PromptSetting, RenderedExample, TemplateLibrary};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub total_emitted: usize,
    pub base_count: usize,
    pub inverted_count: usize,
    pub per_source: BTreeMap<Source, usize>,
    pub per_task: BTreeMap<String, usize>,
    pub per_setting: BTreeMap<PromptSetting, usize>,
    /// Few-shot examples by exemplar count.
    pub exemplar_count_histogram: BTreeMap<usize, usize>,
    pub config_digest: String,
    pub seed: u64,
}

impl GenerationReport {
    pub fn empty(config_digest: impl Into<String>, seed: u64) -> Self {
        GenerationReport {
            total_emitted: 0,
            base_count: 0,
            inverted_count: 0,
            per_source: BTreeMap::new(),
            per_task: BTreeMap::new(),
            per_setting: BTreeMap::new(),
            exemplar_count_histogram: BTreeMap::new(),
            config_digest: config_digest.into(),
            seed,
        }
    }

    pub fn from_examples<'a>(
        examples: impl IntoIterator<Item = &'a RenderedExample>,
        config_digest: impl Into<String>,
        seed: u64,
    ) -> Self {
        let mut r = Self::empty(config_digest, seed);
        for e in examples {
            r.add(e);
        }
        r
    }

    pub fn add(&mut self, e: &RenderedExample) {
        self.total_emitted += 1;
        if e.inverted {
            self.inverted_count += 1;
        } else {
            self.base_count += 1;
        }
        *self.per_source.entry(e.source).or_default() += 1;
        *self.per_task.entry(e.task_name.clone()).or_default() += 1;
        *self.per_setting.entry(e.prompt_setting).or_default() += 1;
        if e.prompt_setting.is_few_shot() {
            *self
                .exemplar_count_histogram
                .entry(e.num_exemplars)
                .or_default() += 1;
        }
    }

    /// Adds `other`'s counts. Digest and seed are kept from `self`.
    pub fn merge(&mut self, other: &GenerationReport) {
        fn add_all<K: Ord + Clone>(into: &mut BTreeMap<K, usize>, from: &BTreeMap<K, usize>) {
            for (k, v) in from {
                *into.entry(k.clone()).or_default() += v;
            }
        }
        self.total_emitted += other.total_emitted;
        self.base_count += other.base_count;
        self.inverted_count += other.inverted_count;
        add_all(&mut self.per_source, &other.per_source);
        add_all(&mut self.per_task, &other.per_task);
        add_all(&mut self.per_setting, &other.per_setting);
        add_all(
            &mut self.exemplar_count_histogram,
            &other.exemplar_count_histogram,
        );
    }

    /// Descriptions of every internal inconsistency.
    pub fn inconsistencies(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |what: &str, sum: usize, expected: usize| {
            if sum != expected {
                out.push(format!("{what} sums to {sum}, expected {expected}"));
            }
        };
        check(
            "per_source",
            self.per_source.values().sum(),
            self.total_emitted,
        );
        check("per_task", self.per_task.values().sum(), self.total_emitted);
        check(
            "per_setting",
            self.per_setting.values().sum(),
            self.total_emitted,
        );
        check(
            "base + inverted",
            self.base_count + self.inverted_count,
            self.total_emitted,
        );
        let few: usize = self
            .per_setting
            .iter()
            .filter(|(s, _)| s.is_few_shot())
            .map(|(_, c)| c)
            .sum();
        check(
            "exemplar_count_histogram",
            self.exemplar_count_histogram.values().sum(),
            few,
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: String,
    pub detail: String,
}

impl Violation {
    fn new(invariant: &str, detail: String) -> Self {
        Violation {
            invariant: invariant.to_string(),
            detail,
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}

pub const EXCLUSION_LEAKAGE: &str = "exclusion leakage";
pub const EXEMPLAR_COUNT: &str = "exemplar count";
pub const EXEMPLAR_HYGIENE: &str = "exemplar hygiene";
pub const BUDGET_CONSERVATION: &str = "budget conservation";
pub const RATIO_REALIZATION: &str = "ratio realization";
pub const INVERSION_RATE: &str = "inversion rate";
pub const INVERSION_TAGGING: &str = "inversion tagging";
pub const REPORT_CONSISTENCY: &str = "report consistency";

/// What a scan checks each example against.
pub struct ScanContext<'a> {
    pub spec: &'a MixtureSpec,
    pub library: &'a TemplateLibrary,
    pub is_excluded: &'a (dyn Fn(&str) -> bool + Sync),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaskTally {
    pub base: usize,
    pub inverted: usize,
    pub settings: SettingCounts,
}

/// Counts and per-example violations from some set of examples.
#[derive(Debug, Clone)]
pub struct Scan {
    pub report: GenerationReport,
    pub tasks: BTreeMap<String, TaskTally>,
    pub violations: Vec<Violation>,
}

impl Scan {
    pub fn new(config_digest: &str, seed: u64) -> Self {
        Scan {
            report: GenerationReport::empty(config_digest, seed),
            tasks: BTreeMap::new(),
            violations: Vec::new(),
        }
    }

    pub fn add(&mut self, e: &RenderedExample, ctx: &ScanContext<'_>) {
        self.report.add(e);
        let tally = self
            .tasks
            .entry(e.task_name.clone())
            .or_insert_with(|| TaskTally {
                settings: empty_setting_counts(),
                ..TaskTally::default()
            });
        if e.inverted {
            tally.inverted += 1;
        } else {
            tally.base += 1;
            *tally.settings.entry(e.prompt_setting).or_default() += 1;
        }
        let at = || format!("record {} of `{}`", e.record_index, e.task_name);

        if (ctx.is_excluded)(&e.task_name) {
            self.violations.push(Violation::new(
                EXCLUSION_LEAKAGE,
                format!("{} is from an excluded task", at()),
            ));
        }

        if e.prompt_setting.is_few_shot() {
            if !ctx.spec.exemplars.allowed_counts.contains(&e.num_exemplars) {
                self.violations.push(Violation::new(
                    EXEMPLAR_COUNT,
                    format!(
                        "{} has {} exemplars, allowed {:?}",
                        at(),
                        e.num_exemplars,
                        ctx.spec.exemplars.allowed_counts
                    ),
                ));
            }
        } else if e.num_exemplars != 0 {
            self.violations.push(Violation::new(
                EXEMPLAR_COUNT,
                format!(
                    "{} is {} but has {} exemplars",
                    at(),
                    e.prompt_setting.as_str(),
                    e.num_exemplars
                ),
            ));
        }
        if e.exemplar_indices.len() != e.num_exemplars {
            self.violations.push(Violation::new(
                EXEMPLAR_COUNT,
                format!(
                    "{} lists {} exemplars but claims {}",
                    at(),
                    e.exemplar_indices.len(),
                    e.num_exemplars
                ),
            ));
        }
        let distinct: BTreeSet<usize> = e.exemplar_indices.iter().copied().collect();
        if distinct.contains(&e.record_index) {
            self.violations.push(Violation::new(
                EXEMPLAR_HYGIENE,
                format!("{} is its own exemplar", at()),
            ));
        }
        if distinct.len() != e.exemplar_indices.len() {
            self.violations.push(Violation::new(
                EXEMPLAR_HYGIENE,
                format!("{} repeats an exemplar", at()),
            ));
        }

        match ctx.library.get(&e.template_id) {
            None => self.violations.push(Violation::new(
                INVERSION_TAGGING,
                format!("{} uses unknown template `{}`", at(), e.template_id),
            )),
            Some(t) if t.intended == e.inverted => self.violations.push(Violation::new(
                INVERSION_TAGGING,
                format!(
                    "{} is tagged inverted={} but template `{}` disagrees",
                    at(),
                    e.inverted,
                    e.template_id
                ),
            )),
            Some(_) => {}
        }
        if e.inverted && e.prompt_setting != PromptSetting::ZeroShot {
            self.violations.push(Violation::new(
                INVERSION_TAGGING,
                format!(
                    "{} is inverted but rendered {}",
                    at(),
                    e.prompt_setting.as_str()
                ),
            ));
        }
    }

    pub fn merge(mut self, other: Scan) -> Scan {
        self.report.merge(&other.report);
        for (task, t) in other.tasks {
            let into = self.tasks.entry(task).or_insert_with(|| TaskTally {
                settings: empty_setting_counts(),
                ..TaskTally::default()
            });
            into.base += t.base;
            into.inverted += t.inverted;
            for (s, c) in t.settings {
                *into.settings.entry(s).or_default() += c;
            }
        }
        self.violations.extend(other.violations);
        self
    }

    /// Per-example violations plus every aggregate check against `plan`.
    pub fn finish(
        mut self,
        plan: &AllocationPlan,
        spec: &MixtureSpec,
    ) -> (GenerationReport, Vec<Violation>) {
        let mut v = std::mem::take(&mut self.violations);
        for task in self.tasks.keys() {
            if plan.task(task).is_none() {
                v.push(Violation::new(
                    BUDGET_CONSERVATION,
                    format!("task `{task}` is not in the plan"),
                ));
            }
        }
        let empty = TaskTally {
            settings: empty_setting_counts(),
            ..TaskTally::default()
        };
        for a in &plan.tasks {
            let got = self.tasks.get(&a.task).unwrap_or(&empty);
            if got.base != a.base {
                v.push(Violation::new(
                    BUDGET_CONSERVATION,
                    format!(
                        "task `{}` has {} base examples, plan says {}",
                        a.task, got.base, a.base
                    ),
                ));
            }
            for s in PromptSetting::ALL {
                let want = a.settings.get(&s).copied().unwrap_or(0);
                let have = got.settings.get(&s).copied().unwrap_or(0);
                if want != have {
                    v.push(Violation::new(
                        RATIO_REALIZATION,
                        format!(
                            "task `{}` has {have} {} examples, plan says {want}",
                            a.task,
                            s.as_str()
                        ),
                    ));
                }
            }
            let expected = floor_rate(got.base, spec.inversion.effective_rate(a.source));
            if got.inverted != expected || got.inverted != a.inverted {
                v.push(Violation::new(
                    INVERSION_RATE,
                    format!(
                        "task `{}` has {} inverted examples for {} base, expected {expected}",
                        a.task, got.inverted, got.base
                    ),
                ));
            }
        }
        if self.report.base_count != spec.total_examples {
            v.push(Violation::new(
                BUDGET_CONSERVATION,
                format!(
                    "{} base examples, budget is {}",
                    self.report.base_count, spec.total_examples
                ),
            ));
        }
        for problem in self.report.inconsistencies() {
            v.push(Violation::new(REPORT_CONSISTENCY, problem));
        }
        (self.report, v)
    }
}
