//! End-to-end generation and validation over an output directory.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::Prepared;
use crate::error::{Error, Result};
use crate::mixer::{compose_plan, execute_plan, AllocationPlan};
use crate::report::{GenerationReport, Scan, ScanContext, Violation};
use crate::templates::RenderedExample;

pub const REPORT_FILE: &str = "report.json";
pub const PLAN_FILE: &str = "plan.json";

pub fn shard_name(index: usize, count: usize) -> String {
    format!("shard-{index:05}-of-{count:05}")
}

/// Parses `shard-IIIII-of-NNNNN` into `(index, count)`.
pub fn parse_shard_name(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("shard-")?;
    let (i, n) = rest.split_once("-of-")?;
    if i.len() != 5 || n.len() != 5 {
        return None;
    }
    Some((i.parse().ok()?, n.parse().ok()?))
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub plan: AllocationPlan,
    pub examples: Vec<RenderedExample>,
    pub report: GenerationReport,
}

pub fn generate(prepared: &Prepared) -> Result<Generated> {
    let spec = prepared.spec();
    let plan = compose_plan(&prepared.catalog, spec)?;
    let examples = execute_plan(&plan, &prepared.catalog, spec, &prepared.library)?;
    let report = GenerationReport::from_examples(&examples, prepared.digest.clone(), spec.seed);
    Ok(Generated {
        plan,
        examples,
        report,
    })
}

/// Splits `examples` into `shards` contiguous runs, as even as possible.
pub fn shard_ranges(len: usize, shards: usize) -> Vec<std::ops::Range<usize>> {
    (0..shards)
        .map(|i| i * len / shards..(i + 1) * len / shards)
        .collect()
}

/// Writes shards, `plan.json` and `report.json` into `out_dir`, replacing
/// any earlier shards there. On failure nothing written by this call is
/// left behind.
pub fn write_outputs(out_dir: &Path, generated: &Generated, shards: usize) -> Result<Vec<PathBuf>> {
    if shards == 0 {
        return Err(Error::Config("shard count must be positive".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for old in existing_shards(out_dir)? {
        fs::remove_file(&old).map_err(|e| Error::io(&old, e))?;
    }
    let mut written = Vec::new();
    let result = write_all(out_dir, generated, shards, &mut written);
    if result.is_err() {
        for path in &written {
            let _ = fs::remove_file(path);
        }
    }
    result.map(|_| written)
}

fn write_all(
    out_dir: &Path,
    generated: &Generated,
    shards: usize,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    for (i, range) in shard_ranges(generated.examples.len(), shards)
        .into_iter()
        .enumerate()
    {
        let path = out_dir.join(shard_name(i, shards));
        written.push(path.clone());
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        for e in &generated.examples[range] {
            let line = serde_json::to_string(e).expect("examples serialize");
            writeln!(w, "{line}").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    write_json(out_dir, PLAN_FILE, &generated.plan, written)?;
    write_json(out_dir, REPORT_FILE, &generated.report, written)
}

fn write_json<T: serde::Serialize>(
    out_dir: &Path,
    name: &str,
    value: &T,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let path = out_dir.join(name);
    written.push(path.clone());
    let mut text = serde_json::to_string_pretty(value).expect("audit files serialize");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn existing_shards(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        if name.to_str().and_then(parse_shard_name).is_some() {
            out.push(entry.path());
        }
    }
    out.sort();
    Ok(out)
}

/// The shard paths of `dir`, checked to form one complete set.
pub fn shard_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let paths = existing_shards(dir)?;
    let Some(first) = paths.first() else {
        return Err(Error::Shard {
            path: dir.to_path_buf(),
            line: 0,
            reason: "no shard files".into(),
        });
    };
    let count = parse_shard_name(&first.file_name().unwrap().to_string_lossy())
        .unwrap()
        .1;
    let expected: Vec<String> = (0..count).map(|i| shard_name(i, count)).collect();
    let found: Vec<String> = paths
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    if found != expected {
        return Err(Error::Shard {
            path: dir.to_path_buf(),
            line: 0,
            reason: format!(
                "expected shards {} through {}, found {found:?}",
                expected[0],
                expected[count - 1]
            ),
        });
    }
    Ok(paths)
}

fn for_each_record(path: &Path, mut f: impl FnMut(RenderedExample)) -> Result<()> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let e = serde_json::from_str(&line).map_err(|err| Error::Shard {
            path: path.to_path_buf(),
            line: i + 1,
            reason: err.to_string(),
        })?;
        f(e);
    }
    Ok(())
}

/// Every record of every shard, in shard order.
pub fn read_shards(dir: &Path) -> Result<Vec<RenderedExample>> {
    let mut out = Vec::new();
    for path in shard_paths(dir)? {
        for_each_record(&path, |e| out.push(e))?;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Validation {
    pub report: GenerationReport,
    pub violations: Vec<Violation>,
}

/// Rescans `out_dir` against the plan recomputed from `prepared`.
pub fn validate_outputs(out_dir: &Path, prepared: &Prepared) -> Result<Validation> {
    let spec = prepared.spec();
    let plan = compose_plan(&prepared.catalog, spec)?;
    let is_excluded = |t: &str| prepared.is_excluded(t);
    let ctx = ScanContext {
        spec,
        library: &prepared.library,
        is_excluded: &is_excluded,
    };
    let paths = shard_paths(out_dir)?;
    let scans: Vec<Scan> = paths
        .par_iter()
        .map(|path| {
            let mut scan = Scan::new(&prepared.digest, spec.seed);
            for_each_record(path, |e| scan.add(&e, &ctx))?;
            Ok(scan)
        })
        .collect::<Result<_>>()?;
    let merged = scans
        .into_iter()
        .fold(Scan::new(&prepared.digest, spec.seed), Scan::merge);
    let (report, mut violations) = merged.finish(&plan, spec);

    let report_path = out_dir.join(REPORT_FILE);
    if report_path.exists() {
        let text = fs::read_to_string(&report_path).map_err(|e| Error::io(&report_path, e))?;
        match serde_json::from_str::<GenerationReport>(&text) {
            Ok(stored) if stored == report => {}
            Ok(stored) if stored.config_digest != report.config_digest => {
                violations.push(Violation {
                    invariant: crate::report::REPORT_CONSISTENCY.into(),
                    detail: format!(
                        "{REPORT_FILE} was written for config {}, not {}",
                        stored.config_digest, report.config_digest
                    ),
                })
            }
            Ok(_) => violations.push(Violation {
                invariant: crate::report::REPORT_CONSISTENCY.into(),
                detail: format!("{REPORT_FILE} does not match the shards"),
            }),
            Err(e) => {
                return Err(Error::Shard {
                    path: report_path,
                    line: e.line(),
                    reason: e.to_string(),
                })
            }
        }
    }
    Ok(Validation { report, violations })
}
