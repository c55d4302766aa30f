//! Runs the same learner under the iid and streaming protocols and prints
//! both accuracy matrices with their metrics. On a drifting stream the iid
//! in-domain score overstates how well the model does on the next bucket.

use driftbench::protocol::run_protocol;
use driftbench::{compute_metrics, generate_drift_stream, DriftConfig, ProtocolKind, RunConfig};

fn main() -> driftbench::Result<()> {
    let stream = generate_drift_stream(&DriftConfig {
        num_buckets: 6,
        ..DriftConfig::default()
    })?;
    for protocol in [ProtocolKind::Iid, ProtocolKind::Streaming] {
        let cfg = RunConfig {
            protocol,
            ..RunConfig::default()
        };
        let out = run_protocol(&stream, &cfg, 0)?;
        println!("{}", out.matrix.render());
        println!("{}", compute_metrics(&out.matrix)?.render());
        println!("{} audit events, first: {}\n", out.events.len(), out.events[0]);
    }
    Ok(())
}
