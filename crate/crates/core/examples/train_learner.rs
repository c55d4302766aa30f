//! Trains a linear probe and a small MLP on one bucket of the drift stream
//! and reports the loss trace and held-out accuracy. Then applies each
//! update strategy to the next bucket.

use driftbench::learner::{init_learner, strategy_step, train_traced};
use driftbench::{evaluate, generate_drift_stream, split_iid, ArchKind, DriftConfig, Hyperparams, Strategy};

fn main() -> driftbench::Result<()> {
    let stream = generate_drift_stream(&DriftConfig::default())?;
    let (train, test) = split_iid(&stream.buckets[0], 0.7, 0)?;

    for kind in [ArchKind::Linear, "mlp:32".parse()?] {
        let arch = kind.resolve(stream.dim, stream.num_classes);
        let hp = Hyperparams {
            epochs: 30,
            decay_epoch: 20,
            ..Hyperparams::default_for(kind)
        };
        let init = init_learner(arch, 1)?;
        let (trained, losses) = train_traced(&init, &train, &hp)?;
        println!(
            "{kind}: {} params, loss {:.4} -> {:.4}, test acc {:.3}",
            arch.num_params(),
            losses[0],
            losses[losses.len() - 1],
            evaluate(&trained, &test)?
        );
    }

    let arch = ArchKind::Linear.resolve(stream.dim, stream.num_classes);
    let hp = Hyperparams::linear_default().with_seed(3);
    let first = strategy_step(Strategy::FromScratch, None, 0, &stream.buckets[0].samples, arch, &hp)?;
    let next = &stream.buckets[2].samples;
    for strategy in [Strategy::Napping, Strategy::FromScratch, Strategy::Finetuning] {
        let h = strategy_step(strategy, Some(&first), 1, &stream.buckets[1].samples, arch, &hp)?;
        println!(
            "{:<12} accuracy on bucket 2: {:.3}",
            strategy.to_string(),
            evaluate(&h, next)?
        );
    }
    Ok(())
}
