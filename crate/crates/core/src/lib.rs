//! Streaming few-shot continual-learning engine: moment pooling over
//! spatial feature maps, a family of single-pass classifiers, class-IID
//! stream evaluation, and continual-learning metrics.

pub mod error;
pub mod hash;
pub mod io;
pub mod learners;
pub mod linalg;
pub mod metrics;
pub mod pooling;
pub mod rng;
pub mod stream;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use learners::{Learner, LearnerKind, LearnerSpec, Prediction};
pub use metrics::{AccuracyMatrix, MetricsReport};
pub use pooling::{pool, PoolingSpec};
pub use rng::RngStream;
pub use stream::{
    build_schedule, multi_ordering_run, run_stream, Clock, EmbeddingSource, RunOutput,
    StreamEvent, TaskSchedule,
};
pub use tensor::{FeatureMap, Vector};
