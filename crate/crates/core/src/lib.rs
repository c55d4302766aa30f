//! Continual-learning evaluation on temporally drifting streams.
//!
//! * [`corpus`]: samples, equal-size time buckets, iid splits, feature files,
//!   and a synthetic stream whose class means rotate over time
//! * [`sampler`]: bucket-level biased reservoir replay buffer
//! * [`learner`]: linear / MLP classifiers, momentum SGD, update strategies
//! * [`protocol`]: iid and streaming protocols producing accuracy matrices
//! * [`metrics`]: accuracy, backward/forward transfer, in-/next-domain
//! * [`curate`]: cosine-ranked dataset curation over precomputed embeddings
//! * [`config`] and [`runner`]: experiment grids and their on-disk artifacts

pub mod config;
pub mod corpus;
pub mod curate;
pub mod error;
pub mod learner;
pub mod metrics;
pub mod protocol;
pub mod runner;
pub mod sampler;
pub mod seed;

pub use config::{validate_config, ExperimentGrid};
pub use corpus::{bucketize, generate_drift_stream, split_iid, Bucket, DriftConfig, Sample, TemporalStream};
pub use error::{Error, Result};
pub use learner::{ArchKind, Architecture, Hyperparams, LearnerState, Strategy};
pub use metrics::{aggregate, compute_metrics, Metric, MetricReport};
pub use protocol::{
    evaluate, run_iid_protocol, run_streaming_protocol, AccuracyMatrix, BufferCapacity, ProtocolKind, RunConfig,
};
pub use sampler::{acceptance_probability, AlphaPolicy, ReplayBuffer};
