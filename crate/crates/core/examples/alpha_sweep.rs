//! Runs a config-driven grid: the fixed and dynamic alpha sweeps under the
//! streaming protocol, with artifacts written to a temporary directory.
//! Pass a directory as the first argument to keep the output.

use driftbench::metrics::Metric;
use driftbench::runner::run_experiment;
use driftbench::validate_config;

const CONFIG: &str = "
buckets = 10
n_seeds = 3
protocol = streaming
strategy = finetuning
epochs = 40
decay_epoch = 25

[fixed]
alpha = fixed:0.5 | fixed:1 | fixed:2 | fixed:5

[dynamic]
alpha = dynamic:0.25 | dynamic:0.5 | dynamic:0.75 | dynamic:1
";

fn main() -> driftbench::Result<()> {
    let grid = validate_config(CONFIG)?;
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("driftbench-alpha-sweep"));
    let summary = run_experiment(&grid, &out, 4)?;
    for c in &summary.cells {
        match &c.outcome {
            Ok(r) => {
                let s = r.get(Metric::NextDomain).expect("streaming reports next-domain");
                println!("{:<32} next-domain {:.4} ± {:.4}", c.name, s.mean, s.std);
            }
            Err(e) => println!("{:<32} failed: {e}", c.name),
        }
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
