//! Simulation and analysis of quantum key distribution protocols that avoid
//! discarding rounds with mismatched bases.
//!
//! The crate is organised bottom-up:
//!
//! - [`hilbert`]: the two Fourier-phase basis families, Born-rule
//!   transition and joint probabilities, and seeded outcome sampling.
//! - [`bell`]: the four-term ordering functional `A_d`, its classical bound and
//!   the exact optimisation over real Schmidt states.
//! - [`protocol`]: round-by-round runs of the outcome-reveal BB84 variant, the
//!   entanglement-based ordering protocol and the prepare-and-measure protocol
//!   (with its silent variant), producing serialisable [`Transcript`]s.
//! - [`adversary`]: intercept-resend eavesdropping and its exact disturbance.
//! - [`capacity`]: channel capacities and the ratio against standard QKD.

pub mod adversary;
pub mod bell;
pub mod capacity;
mod error;
pub mod format;
pub mod hilbert;
pub mod protocol;

pub use adversary::{DisturbanceReport, EveFamily, EveKind, EveStrategy};
pub use bell::{BellScore, OptimalState};
pub use capacity::CapacityReport;
pub use error::{QkdError, Result};
pub use hilbert::{AmplitudeVector, BasisSpec, OutcomeTable, PhaseOffset, SchmidtState, Side};
pub use protocol::{ProtocolId, RoundRecord, SiftStats, Summary, Transcript};

/// Deterministic generator used for every simulated run.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Builds the run generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
