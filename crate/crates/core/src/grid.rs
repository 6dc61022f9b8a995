//! Ablation config grids derived from one base config.

use std::str::FromStr;

use crate::config::{GenerationConfig, Prepared};
use crate::corpus::sample_task_subset;
use crate::error::{Error, Result};
use crate::mixer::ablation_grid;
use crate::packing::PromptRatios;

/// Few-shot fractions of the prompt-ratio sweep.
pub const FEWSHOT_FRACTIONS: [f64; 9] = [0.005, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99];

/// Task counts of the scaling grid. The last entry stands for the whole
/// catalog.
pub const TASK_SCALING_SIZES: [usize; 8] = [8, 25, 50, 100, 200, 400, 800, 1873];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridType {
    LeaveOneOut,
    FewshotSweep,
    TaskScaling,
}

impl FromStr for GridType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "leave_one_out" => Ok(GridType::LeaveOneOut),
            "fewshot_sweep" => Ok(GridType::FewshotSweep),
            "task_scaling" => Ok(GridType::TaskScaling),
            other => Err(Error::Config(format!(
                "unknown grid type `{other}` (expected leave_one_out, fewshot_sweep or task_scaling)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridEntry {
    /// File stem, unique within the grid and sorting in grid order.
    pub name: String,
    pub label: String,
    pub config: GenerationConfig,
}

/// Builds the grid. `prepared` must come from `base`; only the task-scaling
/// grid looks at its catalog.
pub fn build_grid(
    kind: GridType,
    base: &GenerationConfig,
    prepared: &Prepared,
) -> Result<Vec<GridEntry>> {
    match kind {
        GridType::LeaveOneOut => Ok(ablation_grid(&base.mixture)?
            .into_iter()
            .enumerate()
            .map(|(i, (label, mixture))| GridEntry {
                name: format!("{i:02}-{}", slug(&label)),
                label,
                config: GenerationConfig {
                    mixture,
                    ..base.clone()
                },
            })
            .collect()),
        GridType::FewshotSweep => Ok(FEWSHOT_FRACTIONS
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                let mut config = base.clone();
                config.mixture.prompt_ratios = PromptRatios::zero_few(f);
                config.mixture.prompt_ratio_overrides.clear();
                GridEntry {
                    name: format!("{i:02}-fewshot-{f}"),
                    label: format!("{}% few-shot", f * 100.0),
                    config,
                }
            })
            .collect()),
        GridType::TaskScaling => {
            let catalog = &prepared.catalog;
            let held_in = catalog.held_in();
            let last = TASK_SCALING_SIZES.len() - 1;
            TASK_SCALING_SIZES
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    let (n, label) = if i == last {
                        (catalog.len(), "all".to_string())
                    } else {
                        (n, n.to_string())
                    };
                    let subset = sample_task_subset(catalog, n, &held_in, base.mixture.seed)?;
                    let mut config = base.clone();
                    config.task_subset = None;
                    config.include_tasks =
                        Some(subset.names().into_iter().map(String::from).collect());
                    // Small subsets can miss a source entirely; its share goes
                    // to the sources that remain.
                    for (source, w) in config.mixture.source_weights.iter_mut() {
                        if *w > 0.0 && !subset.tasks().iter().any(|t| t.source == *source) {
                            log::info!(
                                "{label}-task subset has no {source} tasks; dropping its weight"
                            );
                            *w = 0.0;
                        }
                    }
                    config.mixture.validate()?;
                    Ok(GridEntry {
                        name: format!("{i:02}-tasks-{label}"),
                        label: format!("{label} tasks"),
                        config,
                    })
                })
                .collect()
        }
    }
}

fn slug(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("All - Super-Nat. Inst."), "all-super-nat-inst");
        assert_eq!(slug("All (Equal)"), "all-equal");
    }

    #[test]
    fn grid_type_names() {
        assert_eq!(
            "fewshot_sweep".parse::<GridType>().unwrap(),
            GridType::FewshotSweep
        );
        let err = "random".parse::<GridType>().unwrap_err();
        assert!(err.is_config());
    }
}
