//! Prompt-setting allocation, few-shot packing and chain-of-thought rendering.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alloc::largest_remainder;
use crate::corpus::{field, TaskRecord};
use crate::seed::Stream;
use crate::templates::{
    render_parts, CotOrder, FormatVariant, Placement, PromptSetting, RenderedExample,
    RenderedParts, TemplateError, TemplateSpec,
};

pub const DEFAULT_COT_TRIGGER: &str = "Let's think step by step.";

#[derive(Debug, Error)]
pub enum PackingError {
    #[error("task `{task}` has {available} candidate exemplars, {needed} needed")]
    PoolTooSmall {
        task: String,
        needed: usize,
        available: usize,
    },
    #[error("query record {index} of `{task}` was selected as its own exemplar")]
    QueryInPool { task: String, index: usize },
    #[error("record {index} of `{task}` has no explanation")]
    MissingExplanation { task: String, index: usize },
    #[error("invalid prompt ratios: {0}")]
    InvalidRatios(String),
    #[error("invalid exemplar policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// Share of examples rendered in each prompt setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptRatios {
    #[serde(default)]
    pub zero_shot: f64,
    #[serde(default)]
    pub few_shot: f64,
    #[serde(default)]
    pub cot_zero_shot: f64,
    #[serde(default)]
    pub cot_few_shot: f64,
}

impl Default for PromptRatios {
    fn default() -> Self {
        PromptRatios::zero_few(0.25)
    }
}

impl PromptRatios {
    pub fn new(zero_shot: f64, few_shot: f64, cot_zero_shot: f64, cot_few_shot: f64) -> Self {
        PromptRatios {
            zero_shot,
            few_shot,
            cot_zero_shot,
            cot_few_shot,
        }
    }

    /// Zero-shot and few-shot only, with `few_shot` of the mass on few-shot.
    pub fn zero_few(few_shot: f64) -> Self {
        PromptRatios::new(1.0 - few_shot, few_shot, 0.0, 0.0)
    }

    /// Ratios in [`PromptSetting::ALL`] order.
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.zero_shot,
            self.few_shot,
            self.cot_zero_shot,
            self.cot_few_shot,
        ]
    }

    pub fn get(&self, setting: PromptSetting) -> f64 {
        self.as_array()[setting as usize]
    }

    pub fn has_cot(&self) -> bool {
        self.cot_zero_shot > 0.0 || self.cot_few_shot > 0.0
    }

    /// Moves chain-of-thought mass onto the matching plain setting, for tasks
    /// without explanations.
    pub fn without_cot(&self) -> Self {
        PromptRatios::new(
            self.zero_shot + self.cot_zero_shot,
            self.few_shot + self.cot_few_shot,
            0.0,
            0.0,
        )
    }

    pub fn validate(&self) -> Result<(), PackingError> {
        let values = self.as_array();
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(PackingError::InvalidRatios(format!("{v} outside [0, 1]")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(PackingError::InvalidRatios(format!(
                "ratios sum to {sum}, not 1"
            )));
        }
        Ok(())
    }
}

/// Example counts per prompt setting; every setting is present.
pub type SettingCounts = BTreeMap<PromptSetting, usize>;

pub fn empty_setting_counts() -> SettingCounts {
    PromptSetting::ALL.into_iter().map(|s| (s, 0)).collect()
}

/// Exact apportionment of `n` examples over the settings by largest
/// remainder, ties going to the earlier setting.
pub fn allocate_settings(n: usize, ratios: &PromptRatios) -> SettingCounts {
    let counts = largest_remainder(n, &ratios.as_array());
    PromptSetting::ALL.into_iter().zip(counts).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExemplarSampling {
    #[default]
    UniformWithoutReplacement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExemplarPolicy {
    #[serde(default = "default_counts")]
    pub allowed_counts: BTreeSet<usize>,
    #[serde(default)]
    pub sampling: ExemplarSampling,
    #[serde(default = "same_task_only")]
    pub same_task_only: bool,
}

fn default_counts() -> BTreeSet<usize> {
    BTreeSet::from([2, 3, 5])
}

fn same_task_only() -> bool {
    true
}

impl Default for ExemplarPolicy {
    fn default() -> Self {
        ExemplarPolicy {
            allowed_counts: default_counts(),
            sampling: ExemplarSampling::UniformWithoutReplacement,
            same_task_only: true,
        }
    }
}

impl ExemplarPolicy {
    pub fn validate(&self) -> Result<(), PackingError> {
        if self.allowed_counts.is_empty() {
            return Err(PackingError::InvalidPolicy(
                "allowed_counts is empty".into(),
            ));
        }
        if self.allowed_counts.contains(&0) {
            return Err(PackingError::InvalidPolicy(
                "exemplar counts must be at least 1".into(),
            ));
        }
        if !self.same_task_only {
            return Err(PackingError::InvalidPolicy(
                "exemplars must come from the query's task".into(),
            ));
        }
        Ok(())
    }

    /// Allowed counts a pool of `available` candidates can satisfy.
    pub fn feasible(&self, available: usize) -> Vec<usize> {
        self.allowed_counts
            .iter()
            .copied()
            .filter(|&k| k <= available)
            .collect()
    }
}

fn cot_trigger(template: &TemplateSpec) -> &str {
    template
        .cot_trigger
        .as_deref()
        .unwrap_or(DEFAULT_COT_TRIGGER)
}

/// Query segment plus target, with the chain-of-thought trigger and
/// rationale applied when `cot` is set.
fn render_segment(
    record: &TaskRecord,
    template: &TemplateSpec,
    variant: &FormatVariant,
    cot: bool,
    rng: &mut Stream,
) -> Result<RenderedParts, PackingError> {
    let parts = render_parts(record, template, variant, rng)?;
    if !cot {
        return Ok(parts);
    }
    let explanation =
        record
            .text(field::EXPLANATION)
            .ok_or_else(|| PackingError::MissingExplanation {
                task: record.task_name.clone(),
                index: record.index,
            })?;
    let sep = &variant.cot_separator;
    let target = match variant.cot_order {
        CotOrder::RationaleFirst => format!("{explanation}{sep}{}", parts.target),
        CotOrder::AnswerFirst => format!("{}{sep}{explanation}", parts.target),
    };
    Ok(RenderedParts {
        input: format!(
            "{}{}{}",
            parts.input,
            variant.field_separator,
            cot_trigger(template)
        ),
        target,
    })
}

fn example(
    record: &TaskRecord,
    template: &TemplateSpec,
    input_text: String,
    target_text: String,
    prompt_setting: PromptSetting,
    exemplar_indices: Vec<usize>,
) -> RenderedExample {
    RenderedExample {
        input_text,
        target_text,
        prompt_setting,
        task_name: record.task_name.clone(),
        source: record.source,
        template_id: template.template_id.clone(),
        inverted: !template.intended,
        num_exemplars: exemplar_indices.len(),
        record_index: record.index,
        exemplar_indices,
    }
}

fn with_preamble(template: &TemplateSpec, variant: &FormatVariant, input: String) -> String {
    match &template.preamble {
        Some(p) if !p.is_empty() => format!("{p}{}{input}", variant.field_separator),
        _ => input,
    }
}

/// Zero-shot chain-of-thought: the input ends with a step-by-step trigger and
/// the target puts the rationale before the answer (or after, under
/// [`CotOrder::AnswerFirst`]).
pub fn render_cot(
    record: &TaskRecord,
    template: &TemplateSpec,
    variant: &FormatVariant,
    rng: &mut Stream,
) -> Result<RenderedExample, PackingError> {
    let parts = render_segment(record, template, variant, true, rng)?;
    let input = with_preamble(template, variant, parts.input);
    Ok(example(
        record,
        template,
        input,
        parts.target,
        PromptSetting::CotZeroShot,
        Vec::new(),
    ))
}

/// Few-shot example with `k` same-task exemplars.
pub fn pack_few_shot(
    query: &TaskRecord,
    pool: &[&TaskRecord],
    k: usize,
    template: &TemplateSpec,
    variant: &FormatVariant,
    rng: &mut Stream,
) -> Result<RenderedExample, PackingError> {
    pack(query, pool, k, template, variant, false, rng)
}

/// Few-shot chain-of-thought: like [`pack_few_shot`], with every exemplar
/// target carrying its rationale.
pub fn pack_cot_few_shot(
    query: &TaskRecord,
    pool: &[&TaskRecord],
    k: usize,
    template: &TemplateSpec,
    variant: &FormatVariant,
    rng: &mut Stream,
) -> Result<RenderedExample, PackingError> {
    pack(query, pool, k, template, variant, true, rng)
}

/// Stream order: the query renders first, then exemplar selection, then the
/// exemplars. The query segment therefore matches a zero-shot render from
/// the same stream position.
fn pack(
    query: &TaskRecord,
    pool: &[&TaskRecord],
    k: usize,
    template: &TemplateSpec,
    variant: &FormatVariant,
    cot: bool,
    rng: &mut Stream,
) -> Result<RenderedExample, PackingError> {
    let query_parts = render_segment(query, template, variant, cot, rng)?;

    let candidates: Vec<&TaskRecord> = pool
        .iter()
        .copied()
        .filter(|r| r.task_name == query.task_name && !r.same_record(query))
        .collect();
    if k == 0 || candidates.len() < k {
        return Err(PackingError::PoolTooSmall {
            task: query.task_name.clone(),
            needed: k,
            available: candidates.len(),
        });
    }
    let chosen: Vec<&TaskRecord> = index::sample(rng, candidates.len(), k)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    if chosen.iter().any(|r| r.same_record(query)) {
        return Err(PackingError::QueryInPool {
            task: query.task_name.clone(),
            index: query.index,
        });
    }

    let mut segments: Vec<String> = Vec::with_capacity(k + 2);
    let preamble = template.preamble.as_deref().filter(|p| !p.is_empty());
    let placement = template.placement_for(variant);
    if let (Some(p), Placement::BeforeExemplars) = (preamble, placement) {
        segments.push(p.to_string());
    }
    for ex in &chosen {
        let parts = render_segment(ex, template, variant, cot, rng)?;
        segments.push(format!(
            "{}{}{}",
            parts.input, variant.field_separator, parts.target
        ));
    }
    if let (Some(p), Placement::AfterExemplars) = (preamble, placement) {
        segments.push(p.to_string());
    }
    segments.push(query_parts.input);

    let setting = if cot {
        PromptSetting::CotFewShot
    } else {
        PromptSetting::FewShot
    };
    Ok(example(
        query,
        template,
        segments.join(&variant.exemplar_separator),
        query_parts.target,
        setting,
        chosen.iter().map(|r| r.index).collect(),
    ))
}
