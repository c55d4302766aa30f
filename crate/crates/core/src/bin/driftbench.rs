use std::collections::HashMap;
use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use driftbench::config::{parse_curation_settings, StreamSource, CONFIG_HELP};
use driftbench::corpus::{format_feature_file, ClassNames};
use driftbench::curate::{self, CurationSpec};
use driftbench::runner::run_experiment;
use driftbench::{compute_metrics, validate_config, AccuracyMatrix, Error, Result};

#[derive(Parser)]
#[command(
    name = "driftbench",
    version,
    about = "Continual-learning evaluation on drifting streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of an experiment grid.
    #[command(after_help = CONFIG_HELP)]
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cells executed concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides base_seed of every cell.
        #[arg(long, env = "DRIFTBENCH_SEED", hide_env_values = true)]
        seed: Option<u64>,
    },
    /// Build a labeled feature file from embeddings and class queries.
    Curate {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        /// Curation settings: per_class_top, background_low_per_class,
        /// final_per_class, seed, rejections, timestamps.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the metrics of one accuracy-matrix file.
    Metrics {
        #[arg(long)]
        matrix: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn run(config: &Path, out: Option<PathBuf>, jobs: usize, seed: Option<u64>) -> Result<bool> {
    let mut grid = validate_config(&read(config)?)?;
    if let Some(s) = seed {
        grid.override_base_seed(s);
    }
    if let StreamSource::File { path, .. } = &mut grid.source {
        *path = relative_to(config, path);
    }
    let out = out
        .or_else(|| grid.output_dir.clone())
        .ok_or_else(|| Error::invalid("no output directory: pass --out or set `out` in the config"))?;
    let summary = run_experiment(&grid, &out, jobs)?;
    for c in &summary.cells {
        match &c.outcome {
            Ok(_) => println!("ok      {}", c.name),
            Err(e) => println!("failed  {}: {e}", c.name),
        }
    }
    println!("wrote {}", out.display());
    Ok(summary.all_ok())
}

fn relative_to(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn curate_cmd(embeddings: &Path, queries: &Path, spec: &Path, out: &Path) -> Result<()> {
    let settings = parse_curation_settings(&read(spec)?)?;
    let records = curate::parse_embeddings(&read(embeddings)?, &embeddings.display().to_string())?;
    let queries = curate::parse_queries(&read(queries)?, &queries.display().to_string())?;
    if let (Some(e), Some(q)) = (records.first(), queries.first()) {
        if e.vector.len() != q.vector.len() {
            return Err(Error::invalid(format!(
                "queries have dimension {}, embeddings {}",
                q.vector.len(),
                e.vector.len()
            )));
        }
    }
    let rejected = match &settings.rejections {
        Some(p) => {
            let p = relative_to(spec, p);
            curate::parse_id_list(&read(&p)?, &p.display().to_string())?
        }
        None => HashSet::new(),
    };
    let timestamps = match &settings.timestamps {
        Some(p) => {
            let p = relative_to(spec, p);
            curate::parse_timestamps(&read(&p)?, &p.display().to_string())?
        }
        None => HashMap::new(),
    };
    let cspec = CurationSpec {
        queries,
        per_class_top: settings.per_class_top,
        background_low_per_class: settings.background_low_per_class,
        final_per_class: settings.final_per_class,
    };
    let set = curate::curate(&records, &cspec, &rejected, settings.seed)?;
    let samples = set.to_samples(&records, &timestamps)?;
    let dim = records.first().map_or(0, |r| r.vector.len());

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let features = out.join("features.txt");
    fs::write(&features, format_feature_file(dim, set.class_names.len(), &samples))
        .map_err(|e| Error::io(&features, e))?;
    let classes = out.join("classes.txt");
    fs::write(&classes, ClassNames(set.class_names.clone()).render()).map_err(|e| Error::io(&classes, e))?;
    println!(
        "{} samples, {} classes -> {}",
        samples.len(),
        set.class_names.len(),
        out.display()
    );
    Ok(())
}

fn metrics_cmd(matrix: &Path) -> Result<()> {
    let m = AccuracyMatrix::parse(&read(matrix)?, &matrix.display().to_string())?;
    print!("{}", compute_metrics(&m)?.render());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            jobs,
            seed,
        } => run(&config, out, jobs, seed),
        Command::Curate {
            embeddings,
            queries,
            spec,
            out,
        } => curate_cmd(&embeddings, &queries, &spec, &out).map(|_| true),
        Command::Metrics { matrix } => metrics_cmd(&matrix).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
