//! Feeds ten buckets through the reservoir buffer under several alpha
//! policies and prints how many buffer entries come from each bucket.
//! Larger alpha tilts the buffer toward recent buckets; dynamic:1 keeps
//! only the latest samples.

use driftbench::corpus::Sample;
use driftbench::{seed, AlphaPolicy, ReplayBuffer};

const BUCKETS: usize = 10;
const PER_BUCKET: usize = 200;
const CAPACITY: usize = 100;
const SEEDS: u64 = 200;

fn main() -> driftbench::Result<()> {
    let stream: Vec<Vec<Sample>> = (0..BUCKETS)
        .map(|t| {
            (0..PER_BUCKET)
                .map(|j| {
                    let id = (t * PER_BUCKET + j) as u64;
                    Sample::new(id, t as i64, vec![0.0], 0)
                })
                .collect()
        })
        .collect();

    println!("mean entries per bucket over {SEEDS} seeds, k={CAPACITY}");
    for policy in ["fixed:0.5", "fixed:1", "fixed:2", "fixed:5", "dynamic:0.5", "dynamic:1"] {
        let policy: AlphaPolicy = policy.parse()?;
        let mut counts = [0usize; BUCKETS];
        for s in 0..SEEDS {
            let mut rng = seed::rng(s, 0);
            let mut buf = ReplayBuffer::new(CAPACITY)?;
            for bucket in &stream {
                buf.update(bucket, policy, &mut rng)?;
            }
            for e in buf.entries() {
                counts[e.timestamp as usize] += 1;
            }
        }
        let row: Vec<String> = counts
            .iter()
            .map(|&c| format!("{:5.1}", c as f64 / SEEDS as f64))
            .collect();
        println!("{:<12} {}", policy.to_string(), row.join(" "));
    }
    Ok(())
}
