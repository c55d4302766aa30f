//! Computes metrics from a hand-written accuracy matrix and aggregates a
//! few runs into mean and standard deviation.

use driftbench::{aggregate, compute_metrics, AccuracyMatrix, ProtocolKind};

fn main() -> driftbench::Result<()> {
    let text = "N=3 protocol=iid\n\
                0.90,0.70,0.50\n\
                0.85,0.92,0.72\n\
                0.80,0.88,0.93\n";
    let m = AccuracyMatrix::parse(text, "inline")?;
    let report = compute_metrics(&m)?;
    print!("{}", report.render());

    let runs: Vec<_> = (0..3)
        .map(|r| {
            let d = 0.01 * r as f64;
            let rows = vec![
                vec![None, Some(0.7 + d), Some(0.5)],
                vec![None, None, Some(0.72 + 2.0 * d)],
                vec![None, None, None],
            ];
            compute_metrics(&AccuracyMatrix::from_rows(ProtocolKind::Streaming, rows)?)
        })
        .collect::<driftbench::Result<_>>()?;
    print!("\n{}", aggregate(&runs)?.render());
    Ok(())
}
