//! Synthetic corpora for tests and benchmarks.
//!
//! Every field value embeds its task and record index, so any rendered text
//! can be traced back to the record that produced it.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::json;

use crate::corpus::{FieldValue, Source, Split, TaskCatalog, TaskEntry, TaskFormat, TaskRecord};

#[derive(Debug, Clone)]
pub struct FixtureSpec {
    pub tasks_per_source: BTreeMap<Source, usize>,
    pub records_per_task: usize,
    /// Number of tasks flagged held-in, spread evenly over the catalog.
    pub held_in: usize,
    /// Extra Super-Natural-Instructions tasks named `mmlu_*`.
    pub mmlu_tasks: usize,
}

impl FixtureSpec {
    /// `tasks` tasks for every source.
    pub fn uniform(tasks: usize, records_per_task: usize) -> Self {
        FixtureSpec {
            tasks_per_source: Source::ALL.into_iter().map(|s| (s, tasks)).collect(),
            records_per_task,
            held_in: 0,
            mmlu_tasks: 0,
        }
    }

    pub fn only(source: Source, tasks: usize, records_per_task: usize) -> Self {
        FixtureSpec {
            tasks_per_source: BTreeMap::from([(source, tasks)]),
            records_per_task,
            held_in: 0,
            mmlu_tasks: 0,
        }
    }

    /// 1873 tasks over six sources with 8 held-in tasks, skewed towards
    /// Super-Natural Instructions.
    pub fn full_scale(records_per_task: usize) -> Self {
        FixtureSpec {
            tasks_per_source: BTreeMap::from([
                (Source::Flan2021, 70),
                (Source::T0SF, 190),
                (Source::SuperNaturalInstructions, 1560),
                (Source::CoT, 9),
                (Source::Dialog, 20),
                (Source::ProgramSynthesis, 24),
            ]),
            records_per_task,
            held_in: 8,
            mmlu_tasks: 0,
        }
    }

    pub fn task_count(&self) -> usize {
        self.tasks_per_source.values().sum::<usize>() + self.mmlu_tasks
    }
}

fn formats(source: Source) -> &'static [TaskFormat] {
    use TaskFormat::*;
    match source {
        Source::Flan2021 => &[Nli, MultipleChoice, Extractive, Generative],
        Source::T0SF => &[MultipleChoice, Generative, Extractive],
        Source::SuperNaturalInstructions => &[Generative, MultipleChoice, Nli],
        Source::CoT => &[Generative, MultipleChoice],
        Source::Dialog => &[Dialog],
        Source::ProgramSynthesis => &[ProgramSynthesis],
    }
}

struct TaskPlan {
    name: String,
    source: Source,
    format: TaskFormat,
    held_in: bool,
}

fn plan(spec: &FixtureSpec) -> Vec<TaskPlan> {
    let mut out = Vec::new();
    for (&source, &n) in &spec.tasks_per_source {
        for i in 0..n {
            let fs = formats(source);
            out.push(TaskPlan {
                name: format!("{}_{i:04}", source.as_str()),
                source,
                format: fs[i % fs.len()],
                held_in: false,
            });
        }
    }
    for i in 0..spec.mmlu_tasks {
        out.push(TaskPlan {
            name: format!("mmlu_{i:03}"),
            source: Source::SuperNaturalInstructions,
            format: TaskFormat::MultipleChoice,
            held_in: false,
        });
    }
    if spec.held_in > 0 && !out.is_empty() {
        let stride = (out.len() / spec.held_in).max(1);
        for t in out.iter_mut().step_by(stride).take(spec.held_in) {
            t.held_in = true;
        }
    }
    out
}

fn text(s: String) -> FieldValue {
    FieldValue::Text(s)
}

/// Raw fields of record `i` of `task`.
pub fn record_fields(
    task: &str,
    source: Source,
    format: TaskFormat,
    i: usize,
) -> BTreeMap<String, FieldValue> {
    let p = format!("{task}#{i}");
    let mut f = BTreeMap::new();
    match format {
        TaskFormat::MultipleChoice => {
            let options: Vec<String> = (0..4).map(|j| format!("option {j} of {p}")).collect();
            f.insert("question".into(), text(format!("question of {p}?")));
            f.insert(
                "target_option_index".into(),
                FieldValue::Index((i % 4) as u64),
            );
            f.insert("answer".into(), text(options[i % 4].clone()));
            f.insert("options".into(), FieldValue::List(options));
        }
        TaskFormat::Extractive => {
            f.insert("context".into(), text(format!("passage of {p}.")));
            f.insert("question".into(), text(format!("question of {p}?")));
            f.insert("answer".into(), text(format!("span of {p}")));
        }
        TaskFormat::Generative => {
            f.insert("question".into(), text(format!("question of {p}?")));
            f.insert("answer".into(), text(format!("answer of {p}")));
        }
        TaskFormat::Nli => {
            f.insert("premise".into(), text(format!("premise of {p}.")));
            f.insert("hypothesis".into(), text(format!("hypothesis of {p}.")));
            let labels = ["entailment", "neutral", "contradiction"];
            f.insert("answer".into(), text(labels[i % 3].to_string()));
        }
        TaskFormat::Dialog => {
            f.insert(
                "dialog_history".into(),
                FieldValue::List(vec![
                    format!("user: hello from {p}"),
                    format!("bot: hi from {p}"),
                ]),
            );
            f.insert("answer".into(), text(format!("user: next turn of {p}")));
        }
        TaskFormat::ProgramSynthesis => {
            f.insert("question".into(), text(format!("coding problem of {p}")));
            f.insert(
                "code".into(),
                text(format!("def solve_{i}(): return \"{p}\"")),
            );
        }
    }
    if source == Source::CoT {
        f.insert("explanation".into(), text(format!("reasoning of {p}")));
    }
    f
}

/// Builds the catalog in memory, without touching the filesystem.
pub fn build_catalog(spec: &FixtureSpec) -> TaskCatalog {
    let entries = plan(spec)
        .into_iter()
        .map(|t| {
            let records = (0..spec.records_per_task)
                .map(|i| {
                    TaskRecord::new(
                        &t.name,
                        t.source,
                        t.format,
                        i,
                        Split::Train,
                        record_fields(&t.name, t.source, t.format, i),
                    )
                    .expect("synthetic record is valid")
                })
                .collect();
            TaskEntry {
                name: t.name,
                source: t.source,
                format: t.format,
                held_in: t.held_in,
                file_path: PathBuf::new(),
                records: Arc::new(records),
            }
        })
        .collect();
    TaskCatalog::from_entries(entries).expect("synthetic names are unique")
}

/// Writes `manifest.toml` and one `tasks/<name>.jsonl` per task under `dir`.
/// Returns the manifest path.
pub fn write_fixture(dir: &Path, spec: &FixtureSpec) -> io::Result<PathBuf> {
    let tasks_dir = dir.join("tasks");
    fs::create_dir_all(&tasks_dir)?;
    let mut manifest = BufWriter::new(fs::File::create(dir.join("manifest.toml"))?);
    for t in plan(spec) {
        writeln!(manifest, "[[tasks]]")?;
        writeln!(manifest, "name = \"{}\"", t.name)?;
        writeln!(manifest, "source = \"{}\"", t.source.as_str())?;
        writeln!(manifest, "format = \"{}\"", t.format.as_str())?;
        writeln!(manifest, "path = \"tasks/{}.jsonl\"", t.name)?;
        writeln!(manifest, "held_in = {}\n", t.held_in)?;
        let mut file = BufWriter::new(fs::File::create(
            tasks_dir.join(format!("{}.jsonl", t.name)),
        )?);
        for i in 0..spec.records_per_task {
            let line = json!({
                "split": "train",
                "fields": record_fields(&t.name, t.source, t.format, i),
            });
            writeln!(file, "{line}")?;
        }
        file.flush()?;
    }
    manifest.flush()?;
    Ok(dir.join("manifest.toml"))
}
