//! Curates a small labeled set from random embeddings: ranks every
//! embedding against each class query, deduplicates across classes,
//! assembles a background class from low scorers, and subsamples.

use std::collections::{HashMap, HashSet};

use driftbench::curate::{curate, ClassQuery, CurationSpec, EmbeddingRecord};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> driftbench::Result<()> {
    let m = 16;
    let mut rng = driftbench::seed::rng(5, 0);
    let mut gauss = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.sample(StandardNormal)).collect() };

    let embeddings: Vec<EmbeddingRecord> = (0..2000)
        .map(|id| EmbeddingRecord::normalized(id, gauss(m)))
        .collect::<driftbench::Result<_>>()?;
    let queries = ["cat", "dog", "car"]
        .iter()
        .map(|name| ClassQuery {
            name: name.to_string(),
            vector: gauss(m),
        })
        .collect();
    let spec = CurationSpec {
        queries,
        per_class_top: 120,
        background_low_per_class: 40,
        final_per_class: 60,
    };
    let rejected: HashSet<u64> = (0..50).collect();
    let set = curate(&embeddings, &spec, &rejected, 0)?;
    for (name, ids) in set.class_names.iter().zip(&set.members) {
        println!("{name:<10} {} ids, first {:?}", ids.len(), &ids[..4]);
    }
    let timestamps: HashMap<u64, i64> = embeddings.iter().map(|e| (e.id, e.id as i64 / 100)).collect();
    let samples = set.to_samples(&embeddings, &timestamps)?;
    println!(
        "{} samples spanning timestamps {}..={}",
        samples.len(),
        samples[0].timestamp,
        samples[samples.len() - 1].timestamp
    );
    Ok(())
}
