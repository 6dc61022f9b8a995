//! Instruction-tuning mixture generation.
//!
//! Loads a catalog of supervised tasks, renders records through instruction
//! templates and formatting variants, packs few-shot and chain-of-thought
//! prompts, adds input-inverted examples, and mixes everything by source
//! weight into a reproducible, auditable dataset.

pub mod alloc;
pub mod config;
pub mod corpus;
pub mod error;
pub mod grid;
pub mod inversion;
pub mod mixer;
pub mod packing;
pub mod pipeline;
pub mod report;
pub mod seed;
pub mod synth;
pub mod templates;

pub use config::{prepare, GenerationConfig, Prepared, TaskSubset};
pub use corpus::{load_catalog, Source, Split, TaskCatalog, TaskEntry, TaskFormat, TaskRecord};
pub use error::{Error, Result};
pub use grid::{build_grid, GridEntry, GridType};
pub use inversion::{enumerate_cot_inversions, InversionAssignment, InversionRateConfig};
pub use mixer::{
    ablation_grid, compose_plan, execute_plan, leave_one_out, AllocationPlan, MixtureSpec,
};
pub use packing::{ExemplarPolicy, PromptRatios};
pub use pipeline::{generate, read_shards, validate_outputs, write_outputs, Generated, Validation};
pub use report::{GenerationReport, Violation};
pub use templates::{FormatVariant, PromptSetting, RenderedExample, TemplateLibrary, TemplateSpec};
