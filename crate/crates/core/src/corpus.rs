//! Task catalogs: manifest ingestion, exclusions and task-subset sampling.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("failed to read {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid manifest {}: {reason}", .path.display())]
    Manifest { path: PathBuf, reason: String },
    #[error("duplicate task `{0}`")]
    DuplicateTask(String),
    #[error("task `{0}` has no records")]
    EmptyTask(String),
    #[error("malformed record in task `{task}` at line {line}: {reason}")]
    MalformedRecord {
        task: String,
        line: usize,
        reason: String,
    },
    #[error("held-in task `{0}` is not in the catalog")]
    UnknownHeldIn(String),
    #[error("subset of {n} tasks cannot hold the {held_in} held-in tasks")]
    SubsetTooSmall { n: usize, held_in: usize },
    #[error("subset of {n} tasks requested from a catalog of {available}")]
    SubsetTooLarge { n: usize, available: usize },
}

/// Parent collection a task comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "flan2021")]
    Flan2021,
    #[serde(rename = "t0sf")]
    T0SF,
    #[serde(rename = "super_natural_instructions", alias = "sni")]
    SuperNaturalInstructions,
    #[serde(rename = "cot")]
    CoT,
    #[serde(rename = "dialog")]
    Dialog,
    #[serde(rename = "program_synthesis")]
    ProgramSynthesis,
}

impl Source {
    pub const ALL: [Source; 6] = [
        Source::Flan2021,
        Source::T0SF,
        Source::SuperNaturalInstructions,
        Source::CoT,
        Source::Dialog,
        Source::ProgramSynthesis,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Flan2021 => "flan2021",
            Source::T0SF => "t0sf",
            Source::SuperNaturalInstructions => "super_natural_instructions",
            Source::CoT => "cot",
            Source::Dialog => "dialog",
            Source::ProgramSynthesis => "program_synthesis",
        }
    }

    /// Human-readable name used for ablation row labels.
    pub fn display_name(self) -> &'static str {
        match self {
            Source::Flan2021 => "Flan 2021",
            Source::T0SF => "T0-SF",
            Source::SuperNaturalInstructions => "Super-Nat. Inst.",
            Source::CoT => "CoT",
            Source::Dialog => "Dialog",
            Source::ProgramSynthesis => "Prog. Synth.",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskFormat {
    MultipleChoice,
    Extractive,
    Generative,
    Nli,
    Dialog,
    ProgramSynthesis,
}

impl TaskFormat {
    pub const ALL: [TaskFormat; 6] = [
        TaskFormat::MultipleChoice,
        TaskFormat::Extractive,
        TaskFormat::Generative,
        TaskFormat::Nli,
        TaskFormat::Dialog,
        TaskFormat::ProgramSynthesis,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskFormat::MultipleChoice => "multiple_choice",
            TaskFormat::Extractive => "extractive",
            TaskFormat::Generative => "generative",
            TaskFormat::Nli => "nli",
            TaskFormat::Dialog => "dialog",
            TaskFormat::ProgramSynthesis => "program_synthesis",
        }
    }
}

impl fmt::Display for TaskFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    Train,
    Validation,
    Test,
}

/// A field value as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldValue {
    Text(String),
    List(Vec<String>),
    Index(u64),
}

/// Canonical field names.
pub mod field {
    pub const QUESTION: &str = "question";
    pub const ANSWER: &str = "answer";
    pub const CONTEXT: &str = "context";
    pub const OPTIONS: &str = "options";
    pub const TARGET_OPTION_INDEX: &str = "target_option_index";
    pub const EXPLANATION: &str = "explanation";
    pub const DIALOG_HISTORY: &str = "dialog_history";
    pub const CODE: &str = "code";

    /// On-disk aliases and the canonical names they map to.
    pub const ALIASES: [(&str, &str); 3] =
        [("x", QUESTION), ("y", ANSWER), ("rationale", EXPLANATION)];
}

/// One supervised example of a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_name: String,
    pub source: Source,
    pub task_format: TaskFormat,
    /// Zero-based position among the task file's records; the record identity
    /// together with `task_name`.
    pub index: usize,
    pub split: Split,
    pub fields: BTreeMap<String, FieldValue>,
}

impl TaskRecord {
    /// Nonempty text field.
    pub fn text(&self, name: &str) -> Option<&str> {
        match self.fields.get(name) {
            Some(FieldValue::Text(s)) if !s.is_empty() => Some(s),
            _ => None,
        }
    }

    /// Nonempty list field.
    pub fn list(&self, name: &str) -> Option<&[String]> {
        match self.fields.get(name) {
            Some(FieldValue::List(v)) if !v.is_empty() => Some(v),
            _ => None,
        }
    }

    pub fn answer(&self) -> Option<&str> {
        self.text(field::ANSWER)
    }

    pub fn options(&self) -> Option<&[String]> {
        self.list(field::OPTIONS)
    }

    pub fn target_option_index(&self) -> Option<usize> {
        match self.fields.get(field::TARGET_OPTION_INDEX) {
            Some(FieldValue::Index(i)) => Some(*i as usize),
            _ => None,
        }
    }

    pub fn has_explanation(&self) -> bool {
        self.text(field::EXPLANATION).is_some()
    }

    pub fn same_record(&self, other: &TaskRecord) -> bool {
        self.index == other.index && self.task_name == other.task_name
    }

    /// Builds a record from raw fields, canonicalizing aliases and checking
    /// the per-format invariants.
    pub fn new(
        task_name: &str,
        source: Source,
        task_format: TaskFormat,
        index: usize,
        split: Split,
        mut fields: BTreeMap<String, FieldValue>,
    ) -> Result<Self, String> {
        for (alias, canonical) in field::ALIASES {
            if let Some(v) = fields.remove(alias) {
                fields.entry(canonical.to_string()).or_insert(v);
            }
        }
        for (name, value) in &fields {
            let ok = match name.as_str() {
                field::OPTIONS | field::DIALOG_HISTORY => matches!(value, FieldValue::List(_)),
                field::TARGET_OPTION_INDEX => matches!(value, FieldValue::Index(_)),
                _ => matches!(value, FieldValue::Text(_)),
            };
            if !ok {
                return Err(format!("field `{name}` has the wrong type"));
            }
        }
        if task_format == TaskFormat::ProgramSynthesis {
            let code = fields.get(field::CODE).cloned();
            let answer = fields.get(field::ANSWER).cloned();
            match (code, answer) {
                (Some(c), None) => {
                    fields.insert(field::ANSWER.to_string(), c);
                }
                (None, Some(a)) => {
                    fields.insert(field::CODE.to_string(), a);
                }
                _ => {}
            }
        }
        let mut record = TaskRecord {
            task_name: task_name.to_string(),
            source,
            task_format,
            index,
            split,
            fields,
        };
        match task_format {
            TaskFormat::MultipleChoice => {
                let options = record
                    .options()
                    .ok_or("multiple_choice record without options")?;
                let target = record
                    .target_option_index()
                    .ok_or("multiple_choice record without target_option_index")?;
                let expected = options
                    .get(target)
                    .ok_or_else(|| {
                        format!(
                            "target_option_index {target} out of range for {} options",
                            options.len()
                        )
                    })?
                    .clone();
                match record.answer() {
                    Some(answer) if answer != expected => {
                        return Err(format!(
                            "answer `{answer}` differs from options[{target}] `{expected}`"
                        ));
                    }
                    Some(_) => {}
                    None => {
                        record
                            .fields
                            .insert(field::ANSWER.to_string(), FieldValue::Text(expected));
                    }
                }
            }
            TaskFormat::Dialog if record.list(field::DIALOG_HISTORY).is_none() => {
                return Err("dialog record without dialog_history".into());
            }
            _ => {}
        }
        if record.split == Split::Train && record.answer().is_none() {
            return Err("train record without a nonempty answer".into());
        }
        Ok(record)
    }
}

#[derive(Deserialize)]
struct RecordLine {
    #[serde(default)]
    split: Split,
    fields: BTreeMap<String, FieldValue>,
}

/// Parses one line of a task file.
pub fn parse_record_line(
    line: &str,
    task_name: &str,
    source: Source,
    task_format: TaskFormat,
    index: usize,
) -> Result<TaskRecord, String> {
    let raw: RecordLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    TaskRecord::new(task_name, source, task_format, index, raw.split, raw.fields)
}

/// A catalog entry and the records it owns.
#[derive(Debug, Clone)]
pub struct TaskEntry {
    pub name: String,
    pub source: Source,
    pub format: TaskFormat,
    pub held_in: bool,
    pub file_path: PathBuf,
    pub records: Arc<Vec<TaskRecord>>,
}

impl TaskEntry {
    pub fn record_count(&self) -> usize {
        self.records.len()
    }

    pub fn train_records(&self) -> Vec<&TaskRecord> {
        self.records
            .iter()
            .filter(|r| r.split == Split::Train)
            .collect()
    }

    /// A task supports chain-of-thought settings when every training record
    /// carries an explanation.
    pub fn has_explanation(&self) -> bool {
        let mut train = self
            .records
            .iter()
            .filter(|r| r.split == Split::Train)
            .peekable();
        train.peek().is_some() && train.all(TaskRecord::has_explanation)
    }
}

/// The task universe: an ordered list of uniquely named tasks.
#[derive(Debug, Clone, Default)]
pub struct TaskCatalog {
    tasks: Vec<TaskEntry>,
    exclusions: BTreeSet<String>,
}

impl TaskCatalog {
    pub fn from_entries(tasks: Vec<TaskEntry>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for t in &tasks {
            if !seen.insert(t.name.as_str()) {
                return Err(CorpusError::DuplicateTask(t.name.clone()));
            }
        }
        Ok(TaskCatalog {
            tasks,
            exclusions: BTreeSet::new(),
        })
    }

    pub fn tasks(&self) -> &[TaskEntry] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&TaskEntry> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn exclusions(&self) -> &BTreeSet<String> {
        &self.exclusions
    }

    pub fn held_in(&self) -> BTreeSet<String> {
        self.tasks
            .iter()
            .filter(|t| t.held_in)
            .map(|t| t.name.clone())
            .collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.tasks.iter().map(|t| t.name.as_str()).collect()
    }

    /// Keeps only the named tasks, preserving catalog order.
    pub fn retain_names(&self, names: &BTreeSet<String>) -> TaskCatalog {
        TaskCatalog {
            tasks: self
                .tasks
                .iter()
                .filter(|t| names.contains(&t.name))
                .cloned()
                .collect(),
            exclusions: self.exclusions.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct Manifest {
    #[serde(default)]
    tasks: Vec<ManifestTask>,
}

#[derive(Debug, Deserialize)]
struct ManifestTask {
    name: String,
    source: Source,
    format: TaskFormat,
    path: PathBuf,
    #[serde(default)]
    held_in: bool,
}

/// Loads a TOML manifest and every task file it lists. Relative task paths
/// resolve against the manifest's directory. Task files are parsed in
/// parallel; the catalog keeps manifest order.
pub fn load_catalog(manifest_path: &Path) -> Result<TaskCatalog, CorpusError> {
    if !manifest_path.is_file() {
        return Err(CorpusError::MissingFile(manifest_path.to_path_buf()));
    }
    let text = fs::read_to_string(manifest_path).map_err(|source| CorpusError::Io {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| CorpusError::Manifest {
        path: manifest_path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut seen = HashSet::new();
    for t in &manifest.tasks {
        if !seen.insert(t.name.as_str()) {
            return Err(CorpusError::DuplicateTask(t.name.clone()));
        }
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let tasks = manifest
        .tasks
        .par_iter()
        .map(|t| load_task(base, t))
        .collect::<Result<Vec<_>, _>>()?;
    TaskCatalog::from_entries(tasks)
}

fn load_task(base: &Path, t: &ManifestTask) -> Result<TaskEntry, CorpusError> {
    let path = if t.path.is_absolute() {
        t.path.clone()
    } else {
        base.join(&t.path)
    };
    if !path.is_file() {
        return Err(CorpusError::MissingFile(path));
    }
    let text = fs::read_to_string(&path).map_err(|source| CorpusError::Io {
        path: path.clone(),
        source,
    })?;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record_line(line, &t.name, t.source, t.format, records.len()).map_err(
            |reason| CorpusError::MalformedRecord {
                task: t.name.clone(),
                line: lineno + 1,
                reason,
            },
        )?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(CorpusError::EmptyTask(t.name.clone()));
    }
    Ok(TaskEntry {
        name: t.name.clone(),
        source: t.source,
        format: t.format,
        held_in: t.held_in,
        file_path: path,
        records: Arc::new(records),
    })
}

/// A task-name pattern: an exact name, or a prefix followed by `*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamePattern(String);

impl NamePattern {
    pub fn new(pattern: impl Into<String>) -> Self {
        NamePattern(pattern.into())
    }

    pub fn matches(&self, name: &str) -> bool {
        match self.0.strip_suffix('*') {
            Some(prefix) => name.starts_with(prefix),
            None => self.0 == name,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Resolves exclusion patterns against a catalog. Patterns that match no task
/// are kept verbatim so [`apply_exclusions`] reports them.
pub fn expand_patterns(catalog: &TaskCatalog, patterns: &[NamePattern]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for p in patterns {
        let hits: Vec<_> = catalog
            .tasks
            .iter()
            .filter(|t| p.matches(&t.name))
            .collect();
        if hits.is_empty() {
            out.insert(p.as_str().to_string());
        }
        out.extend(hits.into_iter().map(|t| t.name.clone()));
    }
    out
}

/// Removes every excluded task. Names absent from the catalog are returned
/// as warnings; they are not an error.
pub fn apply_exclusions(
    catalog: TaskCatalog,
    exclusions: &BTreeSet<String>,
) -> (TaskCatalog, Vec<String>) {
    let unknown: Vec<String> = exclusions
        .iter()
        .filter(|n| !catalog.contains(n))
        .cloned()
        .collect();
    for name in &unknown {
        log::warn!("excluded task `{name}` is not in the catalog");
    }
    let TaskCatalog {
        tasks,
        exclusions: mut recorded,
    } = catalog;
    recorded.extend(exclusions.iter().cloned());
    let tasks = tasks
        .into_iter()
        .filter(|t| !exclusions.contains(&t.name))
        .collect();
    (
        TaskCatalog {
            tasks,
            exclusions: recorded,
        },
        unknown,
    )
}

/// Draws an `n`-task subset that always contains every held-in task. The
/// other `n - |held_in|` tasks are drawn uniformly without replacement from
/// the rest of the catalog. The result keeps catalog order.
pub fn sample_task_subset(
    catalog: &TaskCatalog,
    n: usize,
    held_in: &BTreeSet<String>,
    seed: u64,
) -> Result<TaskCatalog, CorpusError> {
    if let Some(missing) = held_in.iter().find(|h| !catalog.contains(h)) {
        return Err(CorpusError::UnknownHeldIn(missing.clone()));
    }
    if n < held_in.len() {
        return Err(CorpusError::SubsetTooSmall {
            n,
            held_in: held_in.len(),
        });
    }
    if n > catalog.len() {
        return Err(CorpusError::SubsetTooLarge {
            n,
            available: catalog.len(),
        });
    }
    let others: Vec<&TaskEntry> = catalog
        .tasks
        .iter()
        .filter(|t| !held_in.contains(&t.name))
        .collect();
    let mut rng = seed::stream(seed, "task_subset", "");
    let mut chosen: BTreeSet<String> = held_in.clone();
    for i in index::sample(&mut rng, others.len(), n - held_in.len()) {
        chosen.insert(others[i].name.clone());
    }
    Ok(catalog.retain_names(&chosen))
}
