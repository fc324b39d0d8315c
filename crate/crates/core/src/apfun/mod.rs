//! Almost-periodicity analysis of sampled signals.

mod coefficient;
mod compose;
mod norms;
mod search;
mod signal;

pub use coefficient::{recip_denominator, Coefficient, Side};
pub use compose::compose;
pub use norms::{bohr_distance, distance, sp_distance, sp_norm, NormKind};
pub use search::{
    detect_jumps, find_almost_periods, find_joint_almost_periods, sample_modulus, uc_bridge_bound, AlmostPeriodReport,
    Verdict,
};
pub use signal::{Jump, Signal};
