//! Mixture planning and execution.
//!
//! [`compose_plan`] turns a catalog and a [`MixtureSpec`] into an auditable
//! [`AllocationPlan`]: per-source budgets, per-task counts, per-setting
//! counts and inversion counts. [`execute_plan`] renders exactly that plan.
//! Both are pure functions of their inputs; execution parallelism never
//! changes the output.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alloc::{largest_remainder, spread};
use crate::corpus::{Source, TaskCatalog, TaskEntry, TaskRecord};
use crate::inversion::{
    floor_rate, invert_pair, sample_cycling, InversionError, InversionRateConfig,
};
use crate::packing::{
    allocate_settings, empty_setting_counts, pack_cot_few_shot, pack_few_shot, render_cot,
    ExemplarPolicy, PackingError, PromptRatios, SettingCounts,
};
use crate::seed;
use crate::templates::{
    render_single, PromptSetting, RenderedExample, TemplateError, TemplateLibrary,
};

#[derive(Debug, Error)]
pub enum MixError {
    #[error("invalid mixture: {0}")]
    InvalidSpec(String),
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("source {0} has positive weight but no tasks")]
    NoTasksForSource(Source),
    #[error("cap {cap} over {tasks} tasks of {of} cannot hold its budget of {budget}")]
    InfeasibleCap {
        of: Source,
        cap: usize,
        tasks: usize,
        budget: usize,
    },
    #[error("source {0} has no weight to remove")]
    SourceNotPresent(Source),
    #[error("plan task `{0}` is not in the catalog")]
    PlanMismatch(String),
    #[error("task `{0}` has no training records")]
    NoTrainRecords(String),
    #[error("no {kind} template applies to record {index} of `{task}`")]
    NoTemplate {
        task: String,
        index: usize,
        kind: &'static str,
    },
    #[error("rendering record {index} of `{task}` failed: {source}")]
    Render {
        task: String,
        index: usize,
        #[source]
        source: RenderError,
    },
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Packing(#[from] PackingError),
    #[error(transparent)]
    Inversion(#[from] InversionError),
}

/// How a source's budget is split over its tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WithinSource {
    /// Every task gets the same share.
    #[default]
    TaskUniform,
    /// Shares proportional to each task's training-record count.
    ExamplesProportional,
}

/// The full generation recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub total_examples: usize,
    pub seed: u64,
    pub source_weights: BTreeMap<Source, f64>,
    #[serde(default)]
    pub prompt_ratios: PromptRatios,
    /// Ratios that replace `prompt_ratios` for one source.
    #[serde(default)]
    pub prompt_ratio_overrides: BTreeMap<Source, PromptRatios>,
    #[serde(default)]
    pub inversion: InversionRateConfig,
    #[serde(default)]
    pub exemplars: ExemplarPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_task_cap: Option<usize>,
    #[serde(default)]
    pub within_source: WithinSource,
}

impl MixtureSpec {
    /// Equal weight on every source, default everything else.
    pub fn equal(total_examples: usize, seed: u64) -> Self {
        MixtureSpec {
            total_examples,
            seed,
            source_weights: Source::ALL.into_iter().map(|s| (s, 1.0 / 6.0)).collect(),
            prompt_ratios: PromptRatios::default(),
            prompt_ratio_overrides: BTreeMap::new(),
            inversion: InversionRateConfig::default(),
            exemplars: ExemplarPolicy::default(),
            per_task_cap: None,
            within_source: WithinSource::TaskUniform,
        }
    }

    pub fn weight(&self, source: Source) -> f64 {
        self.source_weights.get(&source).copied().unwrap_or(0.0)
    }

    /// Weights scaled to sum to 1, in [`Source::ALL`] order.
    pub fn normalized_weights(&self) -> [f64; 6] {
        let sum: f64 = Source::ALL.iter().map(|s| self.weight(*s).max(0.0)).sum();
        Source::ALL.map(|s| {
            if sum > 0.0 {
                self.weight(s).max(0.0) / sum
            } else {
                0.0
            }
        })
    }

    pub fn ratios_for(&self, source: Source) -> &PromptRatios {
        self.prompt_ratio_overrides
            .get(&source)
            .unwrap_or(&self.prompt_ratios)
    }

    pub fn validate(&self) -> Result<(), MixError> {
        let invalid = |m: String| MixError::InvalidSpec(m);
        if let Some((s, w)) = self
            .source_weights
            .iter()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(invalid(format!(
                "weight {w} for {s} must be a non-negative number"
            )));
        }
        let positive = self.source_weights.values().filter(|w| **w > 0.0).count();
        if positive == 0 {
            return Err(invalid(
                "at least one source weight must be positive".into(),
            ));
        }
        if self.total_examples < positive {
            return Err(invalid(format!(
                "total_examples {} is below the {positive} weighted sources",
                self.total_examples
            )));
        }
        self.prompt_ratios
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        for (s, r) in &self.prompt_ratio_overrides {
            r.validate().map_err(|e| invalid(format!("{s}: {e}")))?;
        }
        self.inversion.validate().map_err(invalid)?;
        self.exemplars
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        if self.per_task_cap == Some(0) {
            return Err(invalid("per_task_cap must be positive".into()));
        }
        Ok(())
    }
}

/// Zeroes `removed` and renormalizes the remaining weights. Nothing else
/// changes.
pub fn leave_one_out(spec: &MixtureSpec, removed: Source) -> Result<MixtureSpec, MixError> {
    if spec.weight(removed) <= 0.0 {
        return Err(MixError::SourceNotPresent(removed));
    }
    let remaining: f64 = spec
        .source_weights
        .iter()
        .filter(|(s, w)| **s != removed && **w > 0.0)
        .map(|(_, w)| w)
        .sum();
    let mut out = spec.clone();
    for (s, w) in out.source_weights.iter_mut() {
        if *s == removed {
            *w = 0.0;
        } else if remaining > 0.0 {
            *w /= remaining;
        }
    }
    Ok(out)
}

/// Row order of the source ablation table.
pub const ABLATION_ORDER: [Source; 6] = [
    Source::Flan2021,
    Source::T0SF,
    Source::SuperNaturalInstructions,
    Source::CoT,
    Source::ProgramSynthesis,
    Source::Dialog,
];

/// The source ablation grid: the equal-weight mixture, each source left out
/// of it, and `weighted` itself. Labels double as row names.
pub fn ablation_grid(weighted: &MixtureSpec) -> Result<Vec<(String, MixtureSpec)>, MixError> {
    let mut equal = weighted.clone();
    equal.source_weights = Source::ALL.into_iter().map(|s| (s, 1.0 / 6.0)).collect();
    let mut grid = vec![("All (Equal)".to_string(), equal.clone())];
    for s in ABLATION_ORDER {
        grid.push((
            format!("All - {}", s.display_name()),
            leave_one_out(&equal, s)?,
        ));
    }
    grid.push(("All (Weighted)".to_string(), weighted.clone()));
    Ok(grid)
}

/// One task's share of the plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskAllocation {
    pub task: String,
    pub source: Source,
    /// Base (non-inverted) examples.
    pub base: usize,
    pub settings: SettingCounts,
    /// Inverted examples on top of `base`.
    pub inverted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub total_examples: usize,
    pub seed: u64,
    pub normalized_weights: BTreeMap<Source, f64>,
    pub per_source_counts: BTreeMap<Source, usize>,
    pub tasks: Vec<TaskAllocation>,
}

impl AllocationPlan {
    pub fn per_task_counts(&self) -> BTreeMap<String, usize> {
        self.tasks
            .iter()
            .map(|t| (t.task.clone(), t.base))
            .collect()
    }

    pub fn per_setting_counts(&self) -> BTreeMap<String, SettingCounts> {
        self.tasks
            .iter()
            .map(|t| (t.task.clone(), t.settings.clone()))
            .collect()
    }

    pub fn setting_totals(&self) -> SettingCounts {
        let mut out = empty_setting_counts();
        for t in &self.tasks {
            for (s, c) in &t.settings {
                *out.get_mut(s).unwrap() += c;
            }
        }
        out
    }

    pub fn inverted_total(&self) -> usize {
        self.tasks.iter().map(|t| t.inverted).sum()
    }

    pub fn task(&self, name: &str) -> Option<&TaskAllocation> {
        self.tasks.iter().find(|t| t.task == name)
    }
}

/// Splits `budget` over `weights`, clipping at `cap` and handing the surplus
/// to the uncapped entries until nothing exceeds the cap.
fn capped_split(budget: usize, weights: &[f64], cap: Option<usize>) -> Vec<usize> {
    let mut counts = largest_remainder(budget, weights);
    let Some(cap) = cap else { return counts };
    let mut fixed = vec![false; counts.len()];
    loop {
        let mut surplus = 0;
        for (c, f) in counts.iter_mut().zip(fixed.iter_mut()) {
            if *c > cap {
                surplus += *c - cap;
                *c = cap;
                *f = true;
            } else if *c == cap {
                *f = true;
            }
        }
        if surplus == 0 {
            return counts;
        }
        let open: Vec<f64> = weights
            .iter()
            .zip(&fixed)
            .map(|(w, f)| if *f { 0.0 } else { *w })
            .collect();
        for (c, extra) in counts.iter_mut().zip(largest_remainder(surplus, &open)) {
            *c += extra;
        }
    }
}

fn ratio_key(r: &PromptRatios) -> [u64; 4] {
    r.as_array().map(f64::to_bits)
}

/// Builds the allocation plan.
///
/// Source budgets are a largest-remainder split of `total_examples`. Each
/// budget is split over the source's tasks (uniformly or by size), capped
/// per task. Prompt settings are apportioned once per group of tasks that
/// share the same effective ratios, so a mixture-wide ratio is realized
/// exactly; [`spread`] then deals the settings across the group's tasks.
pub fn compose_plan(catalog: &TaskCatalog, spec: &MixtureSpec) -> Result<AllocationPlan, MixError> {
    spec.validate()?;
    if catalog.is_empty() {
        return Err(MixError::EmptyCatalog);
    }
    let weights = spec.normalized_weights();
    let source_counts = largest_remainder(spec.total_examples, &weights);

    let mut base: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, source) in Source::ALL.into_iter().enumerate() {
        let tasks: Vec<&TaskEntry> = catalog
            .tasks()
            .iter()
            .filter(|t| t.source == source)
            .collect();
        let budget = source_counts[i];
        if weights[i] > 0.0 && tasks.is_empty() {
            return Err(MixError::NoTasksForSource(source));
        }
        if budget == 0 {
            continue;
        }
        if let Some(cap) = spec.per_task_cap {
            if cap.saturating_mul(tasks.len()) < budget {
                return Err(MixError::InfeasibleCap {
                    of: source,
                    cap,
                    tasks: tasks.len(),
                    budget,
                });
            }
        }
        let task_weights: Vec<f64> = match spec.within_source {
            WithinSource::TaskUniform => vec![1.0; tasks.len()],
            WithinSource::ExamplesProportional => tasks
                .iter()
                .map(|t| t.train_records().len() as f64)
                .collect(),
        };
        for (t, c) in tasks
            .iter()
            .zip(capped_split(budget, &task_weights, spec.per_task_cap))
        {
            base.insert(t.name.as_str(), c);
        }
    }

    // Group tasks by effective ratios, in catalog order.
    let mut groups: Vec<(PromptRatios, Vec<&TaskEntry>)> = Vec::new();
    for t in catalog.tasks() {
        let mut ratios = *spec.ratios_for(t.source);
        if ratios.has_cot() && !t.has_explanation() {
            ratios = ratios.without_cot();
        }
        match groups
            .iter_mut()
            .find(|(r, _)| ratio_key(r) == ratio_key(&ratios))
        {
            Some((_, members)) => members.push(t),
            None => groups.push((ratios, vec![t])),
        }
    }
    let mut settings: BTreeMap<&str, SettingCounts> = BTreeMap::new();
    for (ratios, members) in &groups {
        let group_total: usize = members
            .iter()
            .map(|t| base.get(t.name.as_str()).copied().unwrap_or(0))
            .sum();
        let totals = allocate_settings(group_total, ratios);
        let slots = spread(&totals.values().copied().collect::<Vec<_>>());
        let mut cursor = 0;
        for t in members {
            let n = base.get(t.name.as_str()).copied().unwrap_or(0);
            let mut counts = empty_setting_counts();
            for &slot in &slots[cursor..cursor + n] {
                *counts.get_mut(&PromptSetting::ALL[slot]).unwrap() += 1;
            }
            cursor += n;
            settings.insert(t.name.as_str(), counts);
        }
    }

    let tasks = catalog
        .tasks()
        .iter()
        .map(|t| {
            let b = base.get(t.name.as_str()).copied().unwrap_or(0);
            TaskAllocation {
                task: t.name.clone(),
                source: t.source,
                base: b,
                settings: settings
                    .remove(t.name.as_str())
                    .unwrap_or_else(empty_setting_counts),
                inverted: floor_rate(b, spec.inversion.effective_rate(t.source)),
            }
        })
        .collect();

    Ok(AllocationPlan {
        total_examples: spec.total_examples,
        seed: spec.seed,
        normalized_weights: Source::ALL.into_iter().zip(weights).collect(),
        per_source_counts: Source::ALL.into_iter().zip(source_counts).collect(),
        tasks,
    })
}

/// Renders every example of `plan`, then applies one global shuffle.
pub fn execute_plan(
    plan: &AllocationPlan,
    catalog: &TaskCatalog,
    spec: &MixtureSpec,
    library: &TemplateLibrary,
) -> Result<Vec<RenderedExample>, MixError> {
    let work: Vec<(&TaskAllocation, &TaskEntry)> = plan
        .tasks
        .iter()
        .filter(|a| a.base + a.inverted > 0)
        .map(|a| {
            catalog
                .get(&a.task)
                .map(|e| (a, e))
                .ok_or_else(|| MixError::PlanMismatch(a.task.clone()))
        })
        .collect::<Result<_, _>>()?;
    let per_task: Vec<Vec<RenderedExample>> = work
        .par_iter()
        .map(|(alloc, entry)| generate_task(alloc, entry, spec, library))
        .collect::<Result<_, _>>()?;
    let mut out: Vec<RenderedExample> = per_task.into_iter().flatten().collect();
    out.shuffle(&mut seed::stream(spec.seed, "global_shuffle", ""));
    Ok(out)
}

fn generate_task(
    alloc: &TaskAllocation,
    entry: &TaskEntry,
    spec: &MixtureSpec,
    library: &TemplateLibrary,
) -> Result<Vec<RenderedExample>, MixError> {
    let task = entry.name.as_str();
    let train = entry.train_records();
    if train.is_empty() {
        return Err(MixError::NoTrainRecords(task.to_string()));
    }
    let variants = library.variants();
    let mut out = Vec::with_capacity(alloc.base + alloc.inverted);

    let picks = sample_cycling(
        train.len(),
        alloc.base,
        &mut seed::stream(spec.seed, "records", task),
    );
    let mut settings: Vec<PromptSetting> = alloc
        .settings
        .iter()
        .flat_map(|(s, &n)| std::iter::repeat_n(*s, n))
        .collect();
    settings.shuffle(&mut seed::stream(spec.seed, "settings", task));
    let mut rng = seed::stream(spec.seed, "render", task);
    for (&pick, &setting) in picks.iter().zip(&settings) {
        let record = train[pick];
        let render_err = |source: RenderError| MixError::Render {
            task: task.to_string(),
            index: record.index,
            source,
        };
        let templates = library.intended_for(record);
        if templates.is_empty() {
            return Err(MixError::NoTemplate {
                task: task.to_string(),
                index: record.index,
                kind: "intended",
            });
        }
        let template = templates[rng.gen_range(0..templates.len())];
        let variant = &variants[rng.gen_range(0..variants.len())];
        let example = match setting {
            PromptSetting::ZeroShot => {
                render_single(record, template, variant, &mut rng).map_err(RenderError::from)
            }
            PromptSetting::CotZeroShot => {
                render_cot(record, template, variant, &mut rng).map_err(RenderError::from)
            }
            PromptSetting::FewShot | PromptSetting::CotFewShot => {
                let k = choose_k(&spec.exemplars, record, &train, &mut rng).map_err(render_err)?;
                let packed = if setting == PromptSetting::FewShot {
                    pack_few_shot(record, &train, k, template, variant, &mut rng)
                } else {
                    pack_cot_few_shot(record, &train, k, template, variant, &mut rng)
                };
                packed.map_err(RenderError::from)
            }
        }
        .map_err(render_err)?;
        out.push(example);
    }

    if alloc.inverted > 0 {
        let picks = sample_cycling(
            train.len(),
            alloc.inverted,
            &mut seed::stream(spec.seed, "inversion_records", task),
        );
        let mut rng = seed::stream(spec.seed, "inversion_render", task);
        for pick in picks {
            let record = train[pick];
            let templates = library.inversion_for(record);
            if templates.is_empty() {
                return Err(MixError::NoTemplate {
                    task: task.to_string(),
                    index: record.index,
                    kind: "inversion",
                });
            }
            let template = templates[rng.gen_range(0..templates.len())];
            let variant = &variants[rng.gen_range(0..variants.len())];
            let example =
                invert_pair(record, template, variant, &mut rng).map_err(|e| MixError::Render {
                    task: task.to_string(),
                    index: record.index,
                    source: e.into(),
                })?;
            out.push(example);
        }
    }
    Ok(out)
}

/// Uniform over the allowed exemplar counts the task's pool can supply.
fn choose_k(
    policy: &ExemplarPolicy,
    query: &TaskRecord,
    train: &[&TaskRecord],
    rng: &mut seed::Stream,
) -> Result<usize, RenderError> {
    let available = train.len().saturating_sub(1);
    let feasible = policy.feasible(available);
    if feasible.is_empty() {
        return Err(PackingError::PoolTooSmall {
            task: query.task_name.clone(),
            needed: policy.allowed_counts.iter().copied().min().unwrap_or(1),
            available,
        }
        .into());
    }
    Ok(feasible[rng.gen_range(0..feasible.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{build_catalog, FixtureSpec};

    fn weights(pairs: &[(Source, f64)]) -> BTreeMap<Source, f64> {
        pairs.iter().copied().collect()
    }

    fn spec(total: usize, w: &[(Source, f64)]) -> MixtureSpec {
        MixtureSpec {
            source_weights: weights(w),
            inversion: InversionRateConfig::uniform(0.0),
            ..MixtureSpec::equal(total, 7)
        }
    }

    fn fixture() -> TaskCatalog {
        build_catalog(&FixtureSpec::uniform(3, 12))
    }

    #[test]
    fn equal_six_way() {
        let plan = compose_plan(&fixture(), &MixtureSpec::equal(600, 1)).unwrap();
        assert!(plan.per_source_counts.values().all(|&c| c == 100));
        assert_eq!(plan.per_task_counts().values().sum::<usize>(), 600);
    }

    #[test]
    fn weighted_four_way() {
        let s = spec(
            10_000,
            &[
                (Source::Flan2021, 0.46),
                (Source::T0SF, 0.28),
                (Source::SuperNaturalInstructions, 0.25),
                (Source::CoT, 0.01),
            ],
        );
        let plan = compose_plan(&fixture(), &s).unwrap();
        let got: Vec<usize> = [
            Source::Flan2021,
            Source::T0SF,
            Source::SuperNaturalInstructions,
            Source::CoT,
        ]
        .iter()
        .map(|s| plan.per_source_counts[s])
        .collect();
        assert_eq!(got, vec![4600, 2800, 2500, 100]);
        assert_eq!(plan.per_source_counts[&Source::Dialog], 0);
    }

    #[test]
    fn single_task() {
        let cat = build_catalog(&FixtureSpec::only(Source::Dialog, 1, 4));
        let plan = compose_plan(&cat, &spec(7, &[(Source::Dialog, 1.0)])).unwrap();
        assert_eq!(plan.tasks[0].base, 7);
    }

    #[test]
    fn source_errors() {
        let cat = build_catalog(&FixtureSpec::only(Source::Dialog, 2, 4));
        assert!(matches!(
            compose_plan(
                &cat,
                &spec(10, &[(Source::Dialog, 0.5), (Source::CoT, 0.5)])
            ),
            Err(MixError::NoTasksForSource(Source::CoT))
        ));
        let mut capped = spec(10, &[(Source::Dialog, 1.0)]);
        capped.per_task_cap = Some(4);
        assert!(matches!(
            compose_plan(&cat, &capped),
            Err(MixError::InfeasibleCap { .. })
        ));
        assert!(matches!(
            compose_plan(&cat, &spec(10, &[(Source::Dialog, 0.0)])),
            Err(MixError::InvalidSpec(_))
        ));
        assert!(matches!(
            compose_plan(&TaskCatalog::default(), &spec(10, &[(Source::Dialog, 1.0)])),
            Err(MixError::EmptyCatalog)
        ));
    }

    #[test]
    fn cap_redistributes() {
        assert_eq!(capped_split(10, &[1.0, 1.0, 1.0], Some(4)), vec![4, 3, 3]);
        assert_eq!(capped_split(10, &[8.0, 1.0, 1.0], Some(4)), vec![4, 3, 3]);
        assert_eq!(capped_split(12, &[8.0, 1.0, 1.0], Some(4)), vec![4, 4, 4]);
        assert_eq!(
            capped_split(9, &[10.0, 1.0, 1.0, 0.0], Some(3)),
            vec![3, 3, 3, 0]
        );
    }

    #[test]
    fn loo_renormalizes() {
        let eq = MixtureSpec::equal(600, 1);
        let one = leave_one_out(&eq, Source::CoT).unwrap();
        assert_eq!(one.weight(Source::CoT), 0.0);
        for s in Source::ALL.iter().filter(|s| **s != Source::CoT) {
            assert!((one.weight(*s) - 0.2).abs() < 1e-12);
        }
        let two = leave_one_out(&one, Source::Dialog).unwrap();
        for s in Source::ALL
            .iter()
            .filter(|s| ![Source::CoT, Source::Dialog].contains(s))
        {
            assert!((two.weight(*s) - 0.25).abs() < 1e-12);
        }
        assert!(matches!(
            leave_one_out(&one, Source::CoT),
            Err(MixError::SourceNotPresent(Source::CoT))
        ));
        assert_eq!(one.prompt_ratios, eq.prompt_ratios);
        assert_eq!(one.seed, eq.seed);
    }

    #[test]
    fn grid_rows() {
        let grid = ablation_grid(&MixtureSpec::equal(100, 0)).unwrap();
        let labels: Vec<&str> = grid.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(
            labels,
            vec![
                "All (Equal)",
                "All - Flan 2021",
                "All - T0-SF",
                "All - Super-Nat. Inst.",
                "All - CoT",
                "All - Prog. Synth.",
                "All - Dialog",
                "All (Weighted)"
            ]
        );
    }

    #[test]
    fn global_ratio_is_exact_across_tasks() {
        let cat = fixture();
        for f in [0.005, 0.05, 0.10, 0.25, 0.5] {
            let mut s = MixtureSpec::equal(10_000, 3);
            s.prompt_ratios = PromptRatios::zero_few(f);
            let plan = compose_plan(&cat, &s).unwrap();
            let expected = allocate_settings(10_000, &s.prompt_ratios);
            assert_eq!(plan.setting_totals(), expected);
            for t in &plan.tasks {
                assert_eq!(t.settings.values().sum::<usize>(), t.base);
            }
        }
    }

    #[test]
    fn cot_mass_folds_for_tasks_without_explanations() {
        let cat = fixture();
        let mut s = MixtureSpec::equal(600, 3);
        s.prompt_ratios = PromptRatios::new(0.4, 0.4, 0.1, 0.1);
        let plan = compose_plan(&cat, &s).unwrap();
        for t in &plan.tasks {
            let cot =
                t.settings[&PromptSetting::CotZeroShot] + t.settings[&PromptSetting::CotFewShot];
            if t.source != Source::CoT {
                assert_eq!(cot, 0, "{}", t.task);
            }
        }
        let cot_tasks: usize = plan
            .tasks
            .iter()
            .filter(|t| t.source == Source::CoT)
            .map(|t| {
                t.settings[&PromptSetting::CotZeroShot] + t.settings[&PromptSetting::CotFewShot]
            })
            .sum();
        assert_eq!(cot_tasks, 20);
    }

    #[test]
    fn execution_conserves_budget() {
        let cat = fixture();
        let lib = TemplateLibrary::builtin();
        let s = MixtureSpec {
            inversion: InversionRateConfig::uniform(0.0),
            ..MixtureSpec::equal(100, 5)
        };
        let plan = compose_plan(&cat, &s).unwrap();
        let out = execute_plan(&plan, &cat, &s, &lib).unwrap();
        assert_eq!(out.len(), 100);
        assert!(out.iter().all(|e| !e.inverted));
    }

    #[test]
    fn dialog_inversion_rate() {
        let cat = build_catalog(&FixtureSpec::only(Source::Dialog, 1, 6));
        let lib = TemplateLibrary::builtin();
        let s = spec(10, &[(Source::Dialog, 1.0)]);
        let s = MixtureSpec {
            inversion: InversionRateConfig::default(),
            ..s
        };
        let plan = compose_plan(&cat, &s).unwrap();
        assert_eq!(plan.tasks[0].inverted, 3);
        let out = execute_plan(&plan, &cat, &s, &lib).unwrap();
        assert_eq!(out.len(), 13);
        assert_eq!(out.iter().filter(|e| e.inverted).count(), 3);
    }

    #[test]
    fn execution_is_deterministic() {
        let cat = fixture();
        let lib = TemplateLibrary::builtin();
        let mut s = MixtureSpec::equal(300, 11);
        s.prompt_ratios = PromptRatios::new(0.4, 0.3, 0.2, 0.1);
        let plan = compose_plan(&cat, &s).unwrap();
        let a = execute_plan(&plan, &cat, &s, &lib).unwrap();
        let b = execute_plan(&plan, &cat, &s, &lib).unwrap();
        assert_eq!(a, b);
    }
}
