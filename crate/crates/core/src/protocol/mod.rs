//! Round-by-round protocol runs and their transcripts.
//!
//! Three protocols are simulated:
//!
//! - [`run_naive_bb84`]: BB84 where the parties reveal outcomes instead of
//!   bases; rounds with equal outcomes are dropped and the key is Alice's basis.
//! - [`run_zg_entangled`]: parties share `sum_k lambda_k |kk>`, announce only
//!   their outcomes, and use the outcome ordering to learn whether their basis
//!   indices agree. Alice's basis is the key.
//! - [`run_practical`]: Alice encodes a dit in one of her two bases, Bob
//!   measures in one of his own (key mode) or one of Alice's (security mode)
//!   and decodes from the most likely transition. The silent variant fixes
//!   Bob's key basis so nothing is announced on key rounds.

mod naive;
mod practical;
mod zg;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adversary::{DisturbanceReport, EveStrategy};
use crate::bell::{term_index, TERMS};
use crate::error::{QkdError, Result};
use crate::hilbert::{check_basis_index, check_dimension, check_outcome};

pub use naive::run_naive_bb84;
pub use practical::run_practical;
pub use zg::{run_zg_entangled, zg_inference_rates, zg_inference_success, InferenceRates};

/// Default probability that Bob picks security mode.
pub const DEFAULT_SECURITY_PROB: f64 = 0.5;

/// Default fraction of entangled rounds spent on the `A_d` estimate.
pub const DEFAULT_CHECK_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolId {
    NaiveBb84,
    Zg,
    Practical,
    PracticalSilent,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 4] = [
        ProtocolId::NaiveBb84,
        ProtocolId::Zg,
        ProtocolId::Practical,
        ProtocolId::PracticalSilent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolId::NaiveBb84 => "naive-bb84",
            ProtocolId::Zg => "zg",
            ProtocolId::Practical => "practical",
            ProtocolId::PracticalSilent => "practical-silent",
        }
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolId {
    type Err = QkdError;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| QkdError::UnsupportedProtocol(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobMode {
    Key,
    Security,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiftDecision {
    Kept,
    DiscardedTie,
    SecurityConsumed,
}

/// Publicly revealed data of one round. Absent fields were not published.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Announcements {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alice_basis: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alice_outcome: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bob_mode: Option<BobMode>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bob_basis: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bob_outcome: Option<u32>,
}

impl Announcements {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub(crate) fn outcomes(alice: usize, bob: usize) -> Self {
        Self {
            alice_outcome: Some(alice as u32),
            bob_outcome: Some(bob as u32),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub alice_basis: u8,
    /// Alice's outcome (entangled protocols) or encoded symbol.
    pub alice_value: u32,
    /// Only set by the prepare-and-measure protocols.
    pub bob_mode: Option<BobMode>,
    /// Index into Bob's family, or into Alice's family in security mode and
    /// in the BB84 variant.
    pub bob_basis: u8,
    pub bob_outcome: u32,
    pub announcements: Announcements,
    pub sift_decision: SiftDecision,
    pub alice_key_symbol: Option<u32>,
    pub bob_key_symbol: Option<u32>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftStats {
    pub kept: usize,
    pub discarded_tie: usize,
    pub security_consumed: usize,
    pub key_length: usize,
    pub key_disagreements: usize,
}

/// Statistics of a run. Everything except `eve` is a function of the rounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub total_rounds: usize,
    pub sift: SiftStats,
    /// Fraction of rounds kept for the key.
    pub sift_yield: f64,
    /// Fraction of outcome-announcing rounds with equal outcomes.
    pub outcome_match_rate: Option<f64>,
    pub key_agreement_rate: Option<f64>,
    /// Security-mode rounds where Bob used Alice's basis.
    pub security_checked: usize,
    pub security_errors: usize,
    pub security_error_rate: Option<f64>,
    pub estimated_a_d: Option<f64>,
    pub a_d_std_error: Option<f64>,
    pub eve: Option<DisturbanceReport>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Estimate of `A_d` and its standard error from basis-revealing rounds.
/// Needs at least one round for each basis pair.
pub fn estimate_a_d<'a>(checks: impl IntoIterator<Item = &'a RoundRecord>) -> Option<(f64, f64)> {
    let mut hits = [0usize; 4];
    let mut totals = [0usize; 4];
    for r in checks {
        let n = term_index(r.alice_basis, r.bob_basis)?;
        totals[n] += 1;
        if TERMS[n]
            .relation
            .holds(r.alice_value as usize, r.bob_outcome as usize)
        {
            hits[n] += 1;
        }
    }
    if totals.contains(&0) {
        return None;
    }
    let mut estimate = 0.0;
    let mut variance = 0.0;
    for (h, t) in hits.iter().zip(totals) {
        let p = *h as f64 / t as f64;
        estimate += p;
        variance += p * (1.0 - p) / t as f64;
    }
    Some((estimate, variance.sqrt()))
}

impl Summary {
    pub fn from_rounds(
        protocol: ProtocolId,
        rounds: &[RoundRecord],
        eve: Option<DisturbanceReport>,
    ) -> Self {
        let mut sift = SiftStats::default();
        for r in rounds {
            match r.sift_decision {
                SiftDecision::Kept => {
                    sift.kept += 1;
                    sift.key_length += 1;
                    if r.alice_key_symbol != r.bob_key_symbol {
                        sift.key_disagreements += 1;
                    }
                }
                SiftDecision::DiscardedTie => sift.discarded_tie += 1,
                SiftDecision::SecurityConsumed => sift.security_consumed += 1,
            }
        }
        let total = rounds.len();

        let outcome_match_rate = match protocol {
            ProtocolId::NaiveBb84 | ProtocolId::Zg => ratio(
                rounds
                    .iter()
                    .filter(|r| r.alice_value == r.bob_outcome)
                    .count(),
                total,
            ),
            _ => None,
        };

        let (security_checked, security_errors) = rounds
            .iter()
            .filter(|r| r.bob_mode == Some(BobMode::Security) && r.bob_basis == r.alice_basis)
            .fold((0, 0), |(n, e), r| {
                (n + 1, e + usize::from(r.alice_value != r.bob_outcome))
            });
        let security_error_rate = match protocol {
            ProtocolId::Practical | ProtocolId::PracticalSilent => {
                ratio(security_errors, security_checked)
            }
            _ => None,
        };

        let estimate = match protocol {
            ProtocolId::Zg => estimate_a_d(
                rounds
                    .iter()
                    .filter(|r| r.sift_decision == SiftDecision::SecurityConsumed),
            ),
            _ => None,
        };

        Summary {
            total_rounds: total,
            sift,
            sift_yield: ratio(sift.kept, total).unwrap_or(0.0),
            outcome_match_rate,
            key_agreement_rate: ratio(sift.key_length - sift.key_disagreements, sift.key_length),
            security_checked,
            security_errors,
            security_error_rate,
            estimated_a_d: estimate.map(|e| e.0),
            a_d_std_error: estimate.map(|e| e.1),
            eve,
        }
    }
}

/// The complete record of a seeded run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transcript {
    pub protocol: ProtocolId,
    pub d: usize,
    pub seed: u64,
    pub rounds: Vec<RoundRecord>,
    pub summary: Summary,
}

impl Transcript {
    pub(crate) fn new(
        protocol: ProtocolId,
        d: usize,
        seed: u64,
        rounds: Vec<RoundRecord>,
        eve: Option<DisturbanceReport>,
    ) -> Self {
        let summary = Summary::from_rounds(protocol, &rounds, eve);
        Self {
            protocol,
            d,
            seed,
            rounds,
            summary,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcript is always serialisable")
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut out, self)?;
        out.write_all(b"\n")
    }
}

/// Parameters shared by every protocol run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimParams {
    pub rounds: usize,
    pub seed: u64,
    pub eve: EveStrategy,
}

impl SimParams {
    pub fn new(rounds: usize, seed: u64) -> Self {
        Self {
            rounds,
            seed,
            eve: EveStrategy::none(),
        }
    }

    pub fn with_eve(mut self, eve: EveStrategy) -> Self {
        self.eve = eve;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(QkdError::InvalidParameter(
                "rounds must be at least 1".into(),
            ));
        }
        if self.rounds > u32::MAX as usize {
            return Err(QkdError::InvalidParameter(format!(
                "at most {} rounds per run",
                u32::MAX
            )));
        }
        Ok(())
    }
}

/// Ordering-based sifting of the entangled protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZgSift {
    /// Alice's outcome is larger: same basis index.
    SameIndex,
    /// Bob's outcome is larger: different basis indices.
    DifferentIndex,
    DiscardTie,
}

pub fn zg_sift(d: usize, alice_outcome: usize, bob_outcome: usize) -> Result<ZgSift> {
    check_outcome(alice_outcome, d)?;
    check_outcome(bob_outcome, d)?;
    Ok(match alice_outcome.cmp(&bob_outcome) {
        std::cmp::Ordering::Greater => ZgSift::SameIndex,
        std::cmp::Ordering::Less => ZgSift::DifferentIndex,
        std::cmp::Ordering::Equal => ZgSift::DiscardTie,
    })
}

/// Bob's estimate of Alice's dit from his key-mode outcome `j`.
///
/// For `a + b < 4` the likeliest symbol satisfies `i + j = 0 mod d`, and for
/// `a = b = 2` it satisfies `i + j = -1 mod d`.
pub fn practical_decode(d: usize, a: u8, b: u8, j: usize) -> Result<usize> {
    check_dimension(d)?;
    check_basis_index(a)?;
    check_basis_index(b)?;
    check_outcome(j, d)?;
    Ok(if a + b < 4 {
        (d - j) % d
    } else {
        (2 * d - j - 1) % d
    })
}
