use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use instmix_core::{
    build_grid, generate, prepare, validate_outputs, write_outputs, Error, GenerationConfig,
    GridType,
};

const EXIT_CONFIG: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_VIOLATIONS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "instmix",
    version,
    about = "Generate and audit instruction-tuning mixtures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a mixture into line-delimited JSON shards.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "1")]
        shards: NonZeroUsize,
    },
    /// Rescan generated shards and check them against their config.
    Validate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Emit an ablation grid of configs: leave_one_out, fewshot_sweep or
    /// task_scaling.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "type")]
        grid_type: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate {
            config,
            out,
            shards,
        } => cmd_generate(&config, &out, shards.get()),
        Command::Validate { out, config } => cmd_validate(&out, &config),
        Command::Grid {
            config,
            grid_type,
            out,
        } => cmd_grid(&config, &grid_type, &out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_DATA
            })
        }
    }
}

fn cmd_generate(config: &Path, out: &Path, shards: usize) -> Result<u8, Error> {
    let prepared = prepare(GenerationConfig::load(config)?)?;
    let generated = generate(&prepared)?;
    write_outputs(out, &generated, shards)?;
    let r = &generated.report;
    println!(
        "wrote {} examples ({} base, {} inverted) from {} tasks into {shards} shard(s) in {}",
        r.total_emitted,
        r.base_count,
        r.inverted_count,
        r.per_task.len(),
        out.display()
    );
    println!("config digest {}", r.config_digest);
    Ok(0)
}

fn cmd_validate(out: &Path, config: &Path) -> Result<u8, Error> {
    let prepared = prepare(GenerationConfig::load(config)?)?;
    let validation = validate_outputs(out, &prepared)?;
    for v in &validation.violations {
        println!("violation: {v}");
    }
    let r = &validation.report;
    if validation.violations.is_empty() {
        println!("ok: {} examples, no violations", r.total_emitted);
        Ok(0)
    } else {
        println!(
            "{} violation(s) over {} examples",
            validation.violations.len(),
            r.total_emitted
        );
        Ok(EXIT_VIOLATIONS)
    }
}

fn cmd_grid(config: &Path, grid_type: &str, out: &Path) -> Result<u8, Error> {
    let kind: GridType = grid_type.parse()?;
    let mut base = GenerationConfig::load(config)?;
    base.manifest = absolute(&base.manifest);
    base.templates = base.templates.as_deref().map(absolute);
    let prepared = prepare(base.clone())?;
    let entries = build_grid(kind, &base, &prepared)?;
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    for entry in &entries {
        let path = out.join(format!("{}.toml", entry.name));
        let text = format!("# {}\n{}", entry.label, entry.config.to_toml()?);
        fs::write(&path, text).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        println!("{}", path.display());
    }
    Ok(0)
}

fn absolute(path: &Path) -> PathBuf {
    fs::canonicalize(path)
        .or_else(|_| std::path::absolute(path))
        .unwrap_or_else(|_| path.to_path_buf())
}
