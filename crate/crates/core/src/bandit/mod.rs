//! Per-agent adversarial bandit learning with delayed, batched feedback.
//!
//! [`LearnerState`] implements both update rules: intermediate updates with
//! later corrections ([`Algorithm::DogIu`]) and the deferred baseline that
//! waits for every neighbor before touching the weights ([`Algorithm::Dog`]).

mod learner;
mod ledger;
mod rate;
mod softmax;

pub use learner::{
    importance_weighted_estimate, Algorithm, LearnerState, PendingRound, RoundRecord,
};
pub use ledger::{cumulative_error, static_regret, CumulativeError, RegretLedger};
pub use rate::{learning_rate, tuned_learning_rate};
pub use softmax::{l1_distance, softmax};
