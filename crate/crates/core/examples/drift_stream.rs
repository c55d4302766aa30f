//! Generates the synthetic drifting stream, prints its manifest, and shows
//! how class means move between buckets. Also round-trips a few samples
//! through the feature-file format and rebuckets them.

use driftbench::corpus::{format_feature_file, parse_feature_text};
use driftbench::{bucketize, generate_drift_stream, split_iid, DriftConfig};

fn main() -> driftbench::Result<()> {
    let cfg = DriftConfig {
        num_buckets: 6,
        per_class: 50,
        ..DriftConfig::default()
    };
    let stream = generate_drift_stream(&cfg)?;
    println!("index\tfirst\tlast\tcount");
    print!("{}", stream.manifest());

    for t in [0, cfg.num_buckets - 1] {
        let m = cfg.class_mean(0, t);
        println!("class 0 mean at bucket {t}: ({:.3}, {:.3}, ...)", m[0], m[1]);
    }

    let (train, test) = split_iid(&stream.buckets[0], 0.7, 7)?;
    println!("bucket 0 split: {} train / {} test", train.len(), test.len());

    // 25 samples into 4 buckets: 6 each, one dropped.
    let text = format_feature_file(stream.dim, stream.num_classes, &stream.buckets[0].samples[..25]);
    let parsed = parse_feature_text(&text, true, "inline")?;
    let rebucketed = bucketize(parsed.samples, 4)?;
    println!(
        "rebucketed: {} buckets of {}, {} dropped",
        rebucketed.len(),
        rebucketed.bucket_size(),
        rebucketed.dropped
    );
    Ok(())
}
