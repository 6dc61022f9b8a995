//! Input inversion: swapping the roles of a task's input and output fields.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{field, Source, TaskFormat, TaskRecord};
use crate::seed::Stream;
use crate::templates::{
    render_single, FormatVariant, RenderedExample, TemplateError, TemplateSpec,
};

#[derive(Debug, Error)]
pub enum InversionError {
    #[error("template `{0}` is an intended template, not an inversion template")]
    NotAnInversionTemplate(String),
    #[error("invalid assignment: {0}")]
    InvalidAssignment(&'static str),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// A member of the query/answer/explanation triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripleField {
    Query,
    Answer,
    Explanation,
}

impl TripleField {
    pub const ALL: [TripleField; 3] = [
        TripleField::Query,
        TripleField::Answer,
        TripleField::Explanation,
    ];

    /// The record field holding this member.
    pub fn field_name(self) -> &'static str {
        match self {
            TripleField::Query => field::QUESTION,
            TripleField::Answer => field::ANSWER,
            TripleField::Explanation => field::EXPLANATION,
        }
    }

    fn label(self) -> &'static str {
        match self {
            TripleField::Query => "Question",
            TripleField::Answer => "Answer",
            TripleField::Explanation => "Explanation",
        }
    }

    /// Position among output fields: the query first, then the explanation
    /// ahead of the answer as in forward chain-of-thought targets.
    fn output_rank(self) -> u8 {
        match self {
            TripleField::Query => 0,
            TripleField::Explanation => 1,
            TripleField::Answer => 2,
        }
    }
}

/// Which triple members a task shows and which it asks for.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InversionAssignment {
    pub input_fields: BTreeSet<TripleField>,
    pub output_fields: BTreeSet<TripleField>,
}

impl InversionAssignment {
    pub fn new(
        input_fields: impl IntoIterator<Item = TripleField>,
        output_fields: impl IntoIterator<Item = TripleField>,
    ) -> Result<Self, InversionError> {
        let input_fields: BTreeSet<_> = input_fields.into_iter().collect();
        let output_fields: BTreeSet<_> = output_fields.into_iter().collect();
        if input_fields.is_empty() || output_fields.is_empty() {
            return Err(InversionError::InvalidAssignment(
                "both sides must be nonempty",
            ));
        }
        if !input_fields.is_disjoint(&output_fields) {
            return Err(InversionError::InvalidAssignment(
                "a field cannot be both input and output",
            ));
        }
        Ok(InversionAssignment {
            input_fields,
            output_fields,
        })
    }

    /// The assignment with input and output swapped.
    pub fn dual(&self) -> Self {
        InversionAssignment {
            input_fields: self.output_fields.clone(),
            output_fields: self.input_fields.clone(),
        }
    }

    /// Query in, answer and explanation out.
    pub fn is_forward(&self) -> bool {
        self.input_fields == BTreeSet::from([TripleField::Query])
            && self.output_fields == BTreeSet::from([TripleField::Answer, TripleField::Explanation])
    }

    /// Output fields in target order.
    pub fn ordered_outputs(&self) -> Vec<TripleField> {
        let mut v: Vec<_> = self.output_fields.iter().copied().collect();
        v.sort_by_key(|f| f.output_rank());
        v
    }
}

/// The triple roles a template's placeholders assign, if it touches the
/// triple on both sides.
pub fn assignment_of(template: &TemplateSpec) -> Option<InversionAssignment> {
    let pick = |names: BTreeSet<String>| -> Vec<TripleField> {
        TripleField::ALL
            .into_iter()
            .filter(|f| names.contains(f.field_name()))
            .collect()
    };
    InversionAssignment::new(
        pick(template.input_placeholders()),
        pick(template.target_placeholders()),
    )
    .ok()
}

/// Every split of the triple into a nonempty input side and a nonempty
/// output side: six assignments. Input sides are ordered
/// `{q}, {a}, {e}, {q,a}, {q,e}, {a,e}`, so index 0 is the forward task.
pub fn enumerate_cot_inversions() -> Vec<InversionAssignment> {
    use TripleField::*;
    let inputs: [&[TripleField]; 6] = [
        &[Query],
        &[Answer],
        &[Explanation],
        &[Query, Answer],
        &[Query, Explanation],
        &[Answer, Explanation],
    ];
    inputs
        .iter()
        .map(|input| {
            let output = TripleField::ALL.into_iter().filter(|f| !input.contains(f));
            InversionAssignment::new(input.iter().copied(), output).expect("static assignment")
        })
        .collect()
}

/// Builds the inversion template realizing `assignment` for `format`.
pub fn cot_inversion_template(
    assignment: &InversionAssignment,
    format: TaskFormat,
    ordinal: usize,
) -> TemplateSpec {
    let mut lines: Vec<String> = assignment
        .input_fields
        .iter()
        .map(|f| format!("{}: {{{}}}", f.label(), f.field_name()))
        .collect();
    let outputs = assignment.ordered_outputs();
    let wanted: Vec<String> = outputs.iter().map(|f| f.label().to_lowercase()).collect();
    lines.push(String::new());
    lines.push(format!(
        "Given the above, write the {}.",
        wanted.join(" and ")
    ));
    let target: Vec<String> = outputs
        .iter()
        .map(|f| format!("{{{}}}", f.field_name()))
        .collect();
    TemplateSpec {
        template_id: format!("cot_inv{ordinal}_{format}"),
        applicable_format: format,
        instruction_pattern: lines.join("\n"),
        target_pattern: target.join("\n"),
        placement: None,
        intended: false,
        preamble: None,
        cot_trigger: None,
    }
}

fn default_rate() -> f64 {
    0.30
}

/// Collections that already contain inverted tasks are not inverted again.
fn default_overrides() -> BTreeMap<Source, f64> {
    BTreeMap::from([
        (Source::Flan2021, 0.0),
        (Source::T0SF, 0.0),
        (Source::SuperNaturalInstructions, 0.0),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionRateConfig {
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default = "default_overrides")]
    pub per_source_overrides: BTreeMap<Source, f64>,
}

impl Default for InversionRateConfig {
    fn default() -> Self {
        InversionRateConfig {
            rate: default_rate(),
            per_source_overrides: default_overrides(),
        }
    }
}

impl InversionRateConfig {
    /// The same rate for every source.
    pub fn uniform(rate: f64) -> Self {
        InversionRateConfig {
            rate,
            per_source_overrides: BTreeMap::new(),
        }
    }

    pub fn effective_rate(&self, source: Source) -> f64 {
        self.per_source_overrides
            .get(&source)
            .copied()
            .unwrap_or(self.rate)
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = |r: f64| (0.0..=1.0).contains(&r);
        if !ok(self.rate) {
            return Err(format!("inversion rate {} outside [0, 1]", self.rate));
        }
        if let Some((s, r)) = self.per_source_overrides.iter().find(|(_, r)| !ok(**r)) {
            return Err(format!("inversion rate {r} for {s} outside [0, 1]"));
        }
        Ok(())
    }
}

/// `floor(base_count * rate)` for `source`.
pub fn apply_inversion_rate(
    base_count: usize,
    config: &InversionRateConfig,
    source: Source,
) -> usize {
    floor_rate(base_count, config.effective_rate(source))
}

pub(crate) fn floor_rate(base_count: usize, rate: f64) -> usize {
    // the epsilon keeps 0.57 * 100 from flooring to 56
    (base_count as f64 * rate + 1e-9).floor() as usize
}

/// `count` record indices drawn uniformly without replacement, starting a
/// fresh draw whenever the records run out.
pub fn sample_cycling(len: usize, count: usize, rng: &mut Stream) -> Vec<usize> {
    let mut out = Vec::with_capacity(count);
    if len == 0 {
        return out;
    }
    while out.len() < count {
        let take = (count - out.len()).min(len);
        out.extend(index::sample(rng, len, take));
    }
    out
}

/// Renders `record` through an inversion template: the original output
/// fields become the input and the original input becomes the target.
pub fn invert_pair(
    record: &TaskRecord,
    inversion_template: &TemplateSpec,
    variant: &FormatVariant,
    rng: &mut Stream,
) -> Result<RenderedExample, InversionError> {
    if inversion_template.intended {
        return Err(InversionError::NotAnInversionTemplate(
            inversion_template.template_id.clone(),
        ));
    }
    Ok(render_single(record, inversion_template, variant, rng)?)
}
