//! Instruction templates, formatting variants and single-example rendering.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{field, Source, TaskFormat, TaskRecord};
use crate::inversion;
use crate::seed::Stream;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template `{template}` is for {expected} records, got {found}")]
    FormatMismatch {
        template: String,
        expected: TaskFormat,
        found: TaskFormat,
    },
    #[error("template `{template}` needs field `{field}` missing from record {index} of `{task}`")]
    MissingField {
        template: String,
        field: String,
        task: String,
        index: usize,
    },
    #[error("option index {index} out of range for {len} options")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(
        "template `{template}` uses placeholder `{placeholder}`, which is not a {format} field"
    )]
    UnknownPlaceholder {
        template: String,
        placeholder: String,
        format: TaskFormat,
    },
    #[error("duplicate template id `{0}`")]
    DuplicateTemplate(String),
    #[error("no intended template for {0} records")]
    MissingIntendedTemplate(TaskFormat),
    #[error("inversion template `{0}` shows a target field in its input")]
    InversionLeak(String),
    #[error("dimension `{0}` has no values")]
    EmptyDimension(&'static str),
    #[error("separator dimension `{0}` contains an empty value")]
    EmptySeparator(&'static str),
    #[error("invalid template library {path}: {reason}")]
    Parse { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    BeforeExemplars,
    AfterExemplars,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionLabelStyle {
    LettersParen,
    LettersDot,
    Numbers,
    Dashes,
    None,
}

impl OptionLabelStyle {
    pub fn label(self, i: usize) -> String {
        match self {
            OptionLabelStyle::LettersParen => format!("({})", letters(i)),
            OptionLabelStyle::LettersDot => format!("{}.", letters(i)),
            OptionLabelStyle::Numbers => format!("{}.", i + 1),
            OptionLabelStyle::Dashes => "-".to_string(),
            OptionLabelStyle::None => String::new(),
        }
    }

    /// Whether a label identifies its option uniquely.
    pub fn is_distinct(self) -> bool {
        matches!(
            self,
            OptionLabelStyle::LettersParen
                | OptionLabelStyle::LettersDot
                | OptionLabelStyle::Numbers
        )
    }
}

/// A, B, ..., Z, AA, AB, ...
fn letters(mut i: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (i % 26) as u8);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionSeparator {
    Newline,
    CommaSpace,
    Space,
}

impl OptionSeparator {
    pub fn as_str(self) -> &'static str {
        match self {
            OptionSeparator::Newline => "\n",
            OptionSeparator::CommaSpace => ", ",
            OptionSeparator::Space => " ",
        }
    }
}

/// Order of rationale and answer in chain-of-thought targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CotOrder {
    #[default]
    RationaleFirst,
    AnswerFirst,
}

/// One point in the formatting product space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FormatVariant {
    pub option_label_style: OptionLabelStyle,
    pub options_in_input: bool,
    pub option_separator: OptionSeparator,
    pub placement: Placement,
    pub field_separator: String,
    pub exemplar_separator: String,
    pub cot_separator: String,
    pub cot_order: CotOrder,
}

impl Default for FormatVariant {
    fn default() -> Self {
        FormatVariant {
            option_label_style: OptionLabelStyle::LettersParen,
            options_in_input: true,
            option_separator: OptionSeparator::Newline,
            placement: Placement::BeforeExemplars,
            field_separator: "\n".into(),
            exemplar_separator: "\n\n".into(),
            cot_separator: "\n".into(),
            cot_order: CotOrder::RationaleFirst,
        }
    }
}

impl FormatVariant {
    /// Answers carry their option label when options are shown with
    /// distinct labels.
    pub fn labeled_answers(&self) -> bool {
        self.options_in_input && self.option_label_style.is_distinct()
    }
}

/// Values for each formatting dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimsConfig {
    pub option_label_style: Vec<OptionLabelStyle>,
    pub options_in_input: Vec<bool>,
    pub option_separator: Vec<OptionSeparator>,
    pub placement: Vec<Placement>,
    pub field_separator: Vec<String>,
    pub exemplar_separator: Vec<String>,
    pub cot_separator: Vec<String>,
    pub cot_order: Vec<CotOrder>,
}

impl Default for DimsConfig {
    fn default() -> Self {
        DimsConfig {
            option_label_style: vec![
                OptionLabelStyle::LettersParen,
                OptionLabelStyle::LettersDot,
                OptionLabelStyle::Numbers,
                OptionLabelStyle::Dashes,
                OptionLabelStyle::None,
            ],
            options_in_input: vec![true, false],
            option_separator: vec![
                OptionSeparator::Newline,
                OptionSeparator::CommaSpace,
                OptionSeparator::Space,
            ],
            placement: vec![Placement::BeforeExemplars, Placement::AfterExemplars],
            field_separator: vec!["\n".into()],
            exemplar_separator: vec!["\n\n".into()],
            cot_separator: vec!["\n".into()],
            cot_order: vec![CotOrder::RationaleFirst],
        }
    }
}

/// Cartesian product of the configured dimensions. Dimensions nest in
/// declaration order with the last one varying fastest; values keep their
/// configured order.
pub fn enumerate_variants(dims: &DimsConfig) -> Result<Vec<FormatVariant>, TemplateError> {
    fn nonempty<T>(v: &[T], name: &'static str) -> Result<(), TemplateError> {
        if v.is_empty() {
            Err(TemplateError::EmptyDimension(name))
        } else {
            Ok(())
        }
    }
    nonempty(&dims.option_label_style, "option_label_style")?;
    nonempty(&dims.options_in_input, "options_in_input")?;
    nonempty(&dims.option_separator, "option_separator")?;
    nonempty(&dims.placement, "placement")?;
    nonempty(&dims.cot_order, "cot_order")?;
    for (name, values) in [
        ("field_separator", &dims.field_separator),
        ("exemplar_separator", &dims.exemplar_separator),
        ("cot_separator", &dims.cot_separator),
    ] {
        nonempty(values, name)?;
        if values.iter().any(String::is_empty) {
            return Err(TemplateError::EmptySeparator(name));
        }
    }

    let mut out = Vec::new();
    for &option_label_style in &dims.option_label_style {
        for &options_in_input in &dims.options_in_input {
            for &option_separator in &dims.option_separator {
                for &placement in &dims.placement {
                    for field_separator in &dims.field_separator {
                        for exemplar_separator in &dims.exemplar_separator {
                            for cot_separator in &dims.cot_separator {
                                for &cot_order in &dims.cot_order {
                                    out.push(FormatVariant {
                                        option_label_style,
                                        options_in_input,
                                        option_separator,
                                        placement,
                                        field_separator: field_separator.clone(),
                                        exemplar_separator: exemplar_separator.clone(),
                                        cot_separator: cot_separator.clone(),
                                        cot_order,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// An instruction template for one task format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSpec {
    pub template_id: String,
    pub applicable_format: TaskFormat,
    pub instruction_pattern: String,
    pub target_pattern: String,
    /// Fixed instruction placement; `None` follows the variant.
    #[serde(default)]
    pub placement: Option<Placement>,
    /// `false` marks inversion templates.
    #[serde(default = "default_true")]
    pub intended: bool,
    /// Task-level instruction placed before or after the exemplars.
    #[serde(default)]
    pub preamble: Option<String>,
    /// Step-by-step elicitation phrase; `None` uses the library default.
    #[serde(default)]
    pub cot_trigger: Option<String>,
}

fn default_true() -> bool {
    true
}

impl TemplateSpec {
    pub fn input_placeholders(&self) -> BTreeSet<String> {
        placeholders(&self.instruction_pattern)
    }

    pub fn target_placeholders(&self) -> BTreeSet<String> {
        placeholders(&self.target_pattern)
    }

    pub fn placement_for(&self, variant: &FormatVariant) -> Placement {
        self.placement.unwrap_or(variant.placement)
    }

    /// Whether every placeholder can be filled from `record`.
    pub fn resolvable(&self, record: &TaskRecord) -> bool {
        record.task_format == self.applicable_format
            && self
                .input_placeholders()
                .iter()
                .chain(self.target_placeholders().iter())
                .all(|p| field_present(record, p))
    }
}

fn field_present(record: &TaskRecord, name: &str) -> bool {
    match name {
        field::OPTIONS | field::DIALOG_HISTORY => record.list(name).is_some(),
        _ => record.text(name).is_some(),
    }
}

/// Fields a template for `format` may reference.
pub fn legal_fields(format: TaskFormat) -> &'static [&'static str] {
    const COMMON: [&str; 5] = ["question", "context", "answer", "explanation", "title"];
    match format {
        TaskFormat::MultipleChoice => &[
            "question",
            "context",
            "answer",
            "explanation",
            "title",
            "options",
        ],
        TaskFormat::Extractive | TaskFormat::Generative => &COMMON,
        TaskFormat::Nli => &[
            "question",
            "context",
            "answer",
            "explanation",
            "title",
            "premise",
            "hypothesis",
        ],
        TaskFormat::Dialog => &[
            "question",
            "context",
            "answer",
            "explanation",
            "title",
            "dialog_history",
        ],
        TaskFormat::ProgramSynthesis => &[
            "question",
            "context",
            "answer",
            "explanation",
            "title",
            "code",
        ],
    }
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_lowercase() || c == b'_'
}

fn is_ident(c: u8) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == b'_'
}

/// Every field name any format recognizes.
const KNOWN_FIELDS: [&str; 10] = [
    "question",
    "context",
    "answer",
    "explanation",
    "title",
    "options",
    "premise",
    "hypothesis",
    "dialog_history",
    "code",
];

/// Scans `pattern` for `{name}` placeholders naming a known field. Any other
/// brace is literal.
fn scan(pattern: &str) -> Vec<(usize, usize)> {
    let bytes = pattern.as_bytes();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' && i + 1 < bytes.len() && is_ident_start(bytes[i + 1]) {
            let mut j = i + 1;
            while j < bytes.len() && is_ident(bytes[j]) {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'}' && KNOWN_FIELDS.contains(&&pattern[i + 1..j]) {
                spans.push((i, j + 1));
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    spans
}

pub fn placeholders(pattern: &str) -> BTreeSet<String> {
    scan(pattern)
        .into_iter()
        .map(|(s, e)| pattern[s + 1..e - 1].to_string())
        .collect()
}

/// Single-pass substitution; substituted text is never rescanned, so braces
/// in field values come through verbatim.
pub fn substitute<F>(pattern: &str, mut resolve: F) -> Result<String, String>
where
    F: FnMut(&str) -> Option<String>,
{
    let mut out = String::with_capacity(pattern.len() * 2);
    let mut last = 0;
    for (s, e) in scan(pattern) {
        out.push_str(&pattern[last..s]);
        let name = &pattern[s + 1..e - 1];
        out.push_str(&resolve(name).ok_or_else(|| name.to_string())?);
        last = e;
    }
    out.push_str(&pattern[last..]);
    Ok(out)
}

/// Shuffles answer options and tracks where the answer lands.
pub fn permute_options(
    options: &[String],
    target_index: usize,
    rng: &mut Stream,
) -> Result<(Vec<String>, usize), TemplateError> {
    if target_index >= options.len() {
        return Err(TemplateError::IndexOutOfRange {
            index: target_index,
            len: options.len(),
        });
    }
    let mut order: Vec<usize> = (0..options.len()).collect();
    order.shuffle(rng);
    let new_target = order.iter().position(|&i| i == target_index).unwrap();
    Ok((
        order.into_iter().map(|i| options[i].clone()).collect(),
        new_target,
    ))
}

/// Renders the options block shown in the input.
pub fn render_options(options: &[String], variant: &FormatVariant) -> String {
    let items: Vec<String> = options
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let label = variant.option_label_style.label(i);
            if label.is_empty() {
                text.clone()
            } else {
                format!("{label} {text}")
            }
        })
        .collect();
    let lead = match variant.option_separator {
        OptionSeparator::Newline => "\n",
        _ => " ",
    };
    format!(
        "Options:{lead}{}",
        items.join(variant.option_separator.as_str())
    )
}

/// Collapses the blank run left behind by an omitted block.
fn tidy(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut newlines = 0;
    for c in text.chars() {
        if c == '\n' {
            newlines += 1;
            if newlines > 2 {
                continue;
            }
        } else {
            newlines = 0;
        }
        out.push(c);
    }
    out.trim().to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptSetting {
    ZeroShot,
    FewShot,
    CotZeroShot,
    CotFewShot,
}

impl PromptSetting {
    pub const ALL: [PromptSetting; 4] = [
        PromptSetting::ZeroShot,
        PromptSetting::FewShot,
        PromptSetting::CotZeroShot,
        PromptSetting::CotFewShot,
    ];

    pub fn is_few_shot(self) -> bool {
        matches!(self, PromptSetting::FewShot | PromptSetting::CotFewShot)
    }

    pub fn is_cot(self) -> bool {
        matches!(self, PromptSetting::CotZeroShot | PromptSetting::CotFewShot)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PromptSetting::ZeroShot => "zero_shot",
            PromptSetting::FewShot => "few_shot",
            PromptSetting::CotZeroShot => "cot_zero_shot",
            PromptSetting::CotFewShot => "cot_few_shot",
        }
    }
}

impl fmt::Display for PromptSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A finished training example with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedExample {
    #[serde(rename = "input")]
    pub input_text: String,
    #[serde(rename = "target")]
    pub target_text: String,
    pub prompt_setting: PromptSetting,
    #[serde(rename = "task")]
    pub task_name: String,
    pub source: Source,
    pub template_id: String,
    pub inverted: bool,
    pub num_exemplars: usize,
    /// Index of the query record within its task file.
    #[serde(rename = "record")]
    pub record_index: usize,
    /// Indices of the exemplar records, in prompt order.
    #[serde(rename = "exemplars", default)]
    pub exemplar_indices: Vec<usize>,
}

/// The query segment of a rendering, before any preamble or exemplars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedParts {
    pub input: String,
    pub target: String,
}

/// Substitutes `record` into `template` under `variant`.
///
/// Multiple-choice options shown in the input are permuted first; the
/// `{answer}` placeholder in the target then carries the answer's new label
/// when [`FormatVariant::labeled_answers`] holds.
pub fn render_parts(
    record: &TaskRecord,
    template: &TemplateSpec,
    variant: &FormatVariant,
    rng: &mut Stream,
) -> Result<RenderedParts, TemplateError> {
    if record.task_format != template.applicable_format {
        return Err(TemplateError::FormatMismatch {
            template: template.template_id.clone(),
            expected: template.applicable_format,
            found: record.task_format,
        });
    }
    let missing = |name: String| TemplateError::MissingField {
        template: template.template_id.clone(),
        field: name,
        task: record.task_name.clone(),
        index: record.index,
    };

    let mut options_block: Option<String> = None;
    let mut labeled_answer: Option<String> = None;
    let shows_options = template.input_placeholders().contains(field::OPTIONS);
    if let (Some(options), true) = (record.options(), variant.options_in_input && shows_options) {
        let target = record
            .target_option_index()
            .ok_or_else(|| missing(field::TARGET_OPTION_INDEX.into()))?;
        let (permuted, new_target) = permute_options(options, target, rng)?;
        options_block = Some(render_options(&permuted, variant));
        if variant.labeled_answers() {
            let label = variant.option_label_style.label(new_target);
            labeled_answer = Some(format!("{label} {}", permuted[new_target]));
        }
    }

    let mut omitted = false;
    let input = substitute(&template.instruction_pattern, |name| match name {
        field::OPTIONS => {
            record.options()?;
            match &options_block {
                Some(block) => Some(block.clone()),
                None => {
                    omitted = true;
                    Some(String::new())
                }
            }
        }
        field::DIALOG_HISTORY => record.list(name).map(|turns| turns.join("\n")),
        _ => record.text(name).map(str::to_string),
    })
    .map_err(missing)?;
    let input = if omitted { tidy(&input) } else { input };

    let target = substitute(&template.target_pattern, |name| match name {
        field::ANSWER => match &labeled_answer {
            Some(a) => Some(a.clone()),
            None => record.answer().map(str::to_string),
        },
        field::DIALOG_HISTORY => record.list(name).map(|turns| turns.join("\n")),
        field::OPTIONS => record.options().map(|o| o.join("\n")),
        _ => record.text(name).map(str::to_string),
    })
    .map_err(missing)?;

    Ok(RenderedParts { input, target })
}

/// Renders one zero-shot example.
pub fn render_single(
    record: &TaskRecord,
    template: &TemplateSpec,
    variant: &FormatVariant,
    rng: &mut Stream,
) -> Result<RenderedExample, TemplateError> {
    let parts = render_parts(record, template, variant, rng)?;
    let input_text = match &template.preamble {
        Some(p) if !p.is_empty() => format!("{p}{}{}", variant.field_separator, parts.input),
        _ => parts.input,
    };
    Ok(RenderedExample {
        input_text,
        target_text: parts.target,
        prompt_setting: PromptSetting::ZeroShot,
        task_name: record.task_name.clone(),
        source: record.source,
        template_id: template.template_id.clone(),
        inverted: !template.intended,
        num_exemplars: 0,
        record_index: record.index,
        exemplar_indices: Vec::new(),
    })
}

const DEFAULT_LIBRARY: &str = include_str!("default_templates.toml");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LibraryFile {
    #[serde(default)]
    cot_trigger: Option<String>,
    #[serde(default)]
    dims: DimsConfig,
    #[serde(default)]
    templates: Vec<TemplateSpec>,
}

/// A validated set of templates plus the formatting dimensions.
#[derive(Debug, Clone)]
pub struct TemplateLibrary {
    pub cot_trigger: String,
    pub dims: DimsConfig,
    pub templates: Vec<TemplateSpec>,
    variants: Vec<FormatVariant>,
    /// Generated chain-of-thought inversion templates, used for records with
    /// explanations when the library defines none of its own.
    cot_inversions: Vec<TemplateSpec>,
}

impl TemplateLibrary {
    pub fn builtin() -> Self {
        Self::from_toml_str(DEFAULT_LIBRARY, "<builtin>")
            .expect("builtin template library is valid")
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let text = fs::read_to_string(path).map_err(|e| TemplateError::Parse {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, TemplateError> {
        let file: LibraryFile = toml::from_str(text).map_err(|e| TemplateError::Parse {
            path: origin.to_string(),
            reason: e.to_string(),
        })?;
        Self::new(
            file.cot_trigger
                .unwrap_or_else(|| crate::packing::DEFAULT_COT_TRIGGER.to_string()),
            file.dims,
            file.templates,
        )
    }

    pub fn new(
        cot_trigger: String,
        dims: DimsConfig,
        mut templates: Vec<TemplateSpec>,
    ) -> Result<Self, TemplateError> {
        for t in &mut templates {
            t.cot_trigger.get_or_insert_with(|| cot_trigger.clone());
        }
        let variants = enumerate_variants(&dims)?;
        let mut ids = HashSet::new();
        for t in &templates {
            if !ids.insert(t.template_id.as_str()) {
                return Err(TemplateError::DuplicateTemplate(t.template_id.clone()));
            }
            validate_template(t)?;
        }
        for format in TaskFormat::ALL {
            if !templates
                .iter()
                .any(|t| t.intended && t.applicable_format == format)
            {
                return Err(TemplateError::MissingIntendedTemplate(format));
            }
        }
        let cot_inversions = TaskFormat::ALL
            .into_iter()
            .flat_map(|format| {
                inversion::enumerate_cot_inversions()
                    .into_iter()
                    .skip(1)
                    .enumerate()
                    .map(move |(i, a)| inversion::cot_inversion_template(&a, format, i + 1))
            })
            .collect();
        Ok(TemplateLibrary {
            cot_trigger,
            dims,
            templates,
            variants,
            cot_inversions,
        })
    }

    pub fn variants(&self) -> &[FormatVariant] {
        &self.variants
    }

    pub fn get(&self, id: &str) -> Option<&TemplateSpec> {
        self.templates
            .iter()
            .chain(self.cot_inversions.iter())
            .find(|t| t.template_id == id)
    }

    /// Intended templates whose fields `record` can fill.
    pub fn intended_for(&self, record: &TaskRecord) -> Vec<&TemplateSpec> {
        self.templates
            .iter()
            .filter(|t| t.intended && t.resolvable(record))
            .collect()
    }

    /// Inversion templates for `record`. Records with an explanation use the
    /// query/answer/explanation family when one applies.
    pub fn inversion_for(&self, record: &TaskRecord) -> Vec<&TemplateSpec> {
        let own: Vec<&TemplateSpec> = self
            .templates
            .iter()
            .filter(|t| !t.intended && t.resolvable(record))
            .collect();
        if !record.has_explanation() {
            return own;
        }
        let own_cot: Vec<&TemplateSpec> = own
            .iter()
            .copied()
            .filter(|t| {
                t.input_placeholders().contains(field::EXPLANATION)
                    || t.target_placeholders().contains(field::EXPLANATION)
            })
            .collect();
        if !own_cot.is_empty() {
            return own_cot;
        }
        let generated: Vec<&TemplateSpec> = self
            .cot_inversions
            .iter()
            .filter(|t| t.resolvable(record))
            .collect();
        if generated.is_empty() {
            own
        } else {
            generated
        }
    }
}

fn validate_template(t: &TemplateSpec) -> Result<(), TemplateError> {
    let legal = legal_fields(t.applicable_format);
    let input = t.input_placeholders();
    let target = t.target_placeholders();
    for p in input.iter().chain(target.iter()) {
        if !legal.contains(&p.as_str()) {
            return Err(TemplateError::UnknownPlaceholder {
                template: t.template_id.clone(),
                placeholder: p.clone(),
                format: t.applicable_format,
            });
        }
    }
    if !t.intended && !input.is_disjoint(&target) {
        return Err(TemplateError::InversionLeak(t.template_id.clone()));
    }
    Ok(())
}
