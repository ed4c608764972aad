use rand::Rng;

use super::{
    practical_decode, Announcements, BobMode, ProtocolId, RoundRecord, SiftDecision, SimParams,
    Transcript,
};
use crate::adversary::{expected_disturbance, intercept_resend};
use crate::error::{QkdError, Result};
use crate::hilbert::{check_dimension, sample_outcome, BasisSpec, OutcomeTable};
use crate::seeded_rng;

/// Prepare-and-measure protocol without discarded rounds.
///
/// Alice prepares `|i>_{A,a}` for uniform `(a, i)`. With probability
/// `security_prob` Bob measures in a uniformly chosen basis of Alice's family
/// (security mode); otherwise he measures in one of his own bases, or always
/// basis 1 when `silent`, and decodes with [`practical_decode`] (key mode).
///
/// Announcements: Alice's basis and Bob's mode on every round, plus Bob's basis
/// and both outcomes on security rounds. The silent variant publishes nothing
/// on key rounds.
pub fn run_practical(
    d: usize,
    security_prob: f64,
    silent: bool,
    params: &SimParams,
) -> Result<Transcript> {
    check_dimension(d)?;
    params.validate()?;
    if !(0.0..1.0).contains(&security_prob) {
        return Err(QkdError::InvalidParameter(format!(
            "security probability must lie in [0, 1), got {security_prob}"
        )));
    }
    let alice_bases = [BasisSpec::alice(1, d)?, BasisSpec::alice(2, d)?];
    let bob_bases = [BasisSpec::bob(1, d)?, BasisSpec::bob(2, d)?];
    let table = OutcomeTable::born(d)?;
    let protocol = if silent {
        ProtocolId::PracticalSilent
    } else {
        ProtocolId::Practical
    };
    let mut rng = seeded_rng(params.seed);
    let mut rounds = Vec::with_capacity(params.rounds);

    for round in 0..params.rounds {
        let a = rng.random_range(1..=2u8);
        let i = rng.random_range(0..d);
        let security = rng.random_bool(security_prob);
        let prepared = alice_bases[a as usize - 1].vector(i)?;
        let received = if params.eve.is_active() {
            Some(intercept_resend(&prepared, &params.eve, &mut rng)?.0)
        } else {
            None
        };

        let record = if security {
            let b = rng.random_range(1..=2u8);
            let basis = &alice_bases[b as usize - 1];
            let j = match &received {
                Some(state) => sample_outcome(&state.born_row(basis)?, &mut rng)?,
                None => sample_outcome(&prepared.born_row(basis)?, &mut rng)?,
            };
            RoundRecord {
                round: round as u32,
                alice_basis: a,
                alice_value: i as u32,
                bob_mode: Some(BobMode::Security),
                bob_basis: b,
                bob_outcome: j as u32,
                announcements: Announcements {
                    alice_basis: Some(a),
                    alice_outcome: Some(i as u32),
                    bob_mode: Some(BobMode::Security),
                    bob_basis: Some(b),
                    bob_outcome: Some(j as u32),
                },
                sift_decision: SiftDecision::SecurityConsumed,
                alice_key_symbol: None,
                bob_key_symbol: None,
            }
        } else {
            let b = if silent { 1 } else { rng.random_range(1..=2u8) };
            let j = match &received {
                Some(state) => {
                    sample_outcome(&state.born_row(&bob_bases[b as usize - 1])?, &mut rng)?
                }
                None => sample_outcome(table.row(a, b, i)?, &mut rng)?,
            };
            // With b = 1 the decoding rule does not depend on Alice's basis,
            // which the silent variant never reveals.
            let known_a = if silent { 1 } else { a };
            let decoded = practical_decode(d, known_a, b, j)?;
            let announcements = if silent {
                Announcements::default()
            } else {
                Announcements {
                    alice_basis: Some(a),
                    bob_mode: Some(BobMode::Key),
                    ..Announcements::default()
                }
            };
            RoundRecord {
                round: round as u32,
                alice_basis: a,
                alice_value: i as u32,
                bob_mode: Some(BobMode::Key),
                bob_basis: b,
                bob_outcome: j as u32,
                announcements,
                sift_decision: SiftDecision::Kept,
                alice_key_symbol: Some(i as u32),
                bob_key_symbol: Some(decoded as u32),
            }
        };
        rounds.push(record);
    }

    let eve = if params.eve.is_active() {
        Some(expected_disturbance(d, &params.eve, protocol, None)?)
    } else {
        None
    };
    Ok(Transcript::new(protocol, d, params.seed, rounds, eve))
}
