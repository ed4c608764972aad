use rand::Rng;

use super::{Announcements, ProtocolId, RoundRecord, SiftDecision, SimParams, Transcript};
use crate::adversary::intercept_resend;
use crate::error::Result;
use crate::hilbert::{sample_outcome, BasisSpec};
use crate::seeded_rng;

/// BB84 with outcomes announced instead of bases.
///
/// Both parties use the same pair of qubit bases (Alice's Fourier family at
/// `d = 2`). Equal outcomes are discarded; different outcomes imply different
/// bases, so Alice's basis label `a - 1` is the key bit and Bob takes the
/// complement of his own label.
pub fn run_naive_bb84(params: &SimParams) -> Result<Transcript> {
    params.validate()?;
    let d = 2;
    let bases = [BasisSpec::alice(1, d)?, BasisSpec::alice(2, d)?];
    let mut rng = seeded_rng(params.seed);
    let mut rounds = Vec::with_capacity(params.rounds);

    for round in 0..params.rounds {
        let a = rng.random_range(1..=2u8);
        let bit = rng.random_range(0..d);
        let mut state = bases[a as usize - 1].vector(bit)?;
        if params.eve.is_active() {
            state = intercept_resend(&state, &params.eve, &mut rng)?.0;
        }
        let b = rng.random_range(1..=2u8);
        let outcome = sample_outcome(&state.born_row(&bases[b as usize - 1])?, &mut rng)?;

        let kept = bit != outcome;
        rounds.push(RoundRecord {
            round: round as u32,
            alice_basis: a,
            alice_value: bit as u32,
            bob_mode: None,
            bob_basis: b,
            bob_outcome: outcome as u32,
            announcements: Announcements::outcomes(bit, outcome),
            sift_decision: if kept {
                SiftDecision::Kept
            } else {
                SiftDecision::DiscardedTie
            },
            alice_key_symbol: kept.then_some(u32::from(a - 1)),
            bob_key_symbol: kept.then_some(u32::from(2 - b)),
        });
    }

    Ok(Transcript::new(
        ProtocolId::NaiveBb84,
        d,
        params.seed,
        rounds,
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{EveFamily, EveStrategy};

    fn within(freq: f64, p: f64, n: usize, sigmas: f64) -> bool {
        (freq - p).abs() <= sigmas * (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn outcome_match_and_yield() {
        let n = 100_000;
        let t = run_naive_bb84(&SimParams::new(n, 7)).unwrap();
        let s = &t.summary;
        assert!(within(s.outcome_match_rate.unwrap(), 0.75, n, 3.0));
        assert!(within(s.sift_yield, 0.25, n, 3.0));
        assert_eq!(s.sift.key_disagreements, 0);
        assert_eq!(s.key_agreement_rate, Some(1.0));
        assert_eq!(s.sift.kept + s.sift.discarded_tie, n);
    }

    #[test]
    fn single_round_is_reproducible() {
        let p = SimParams::new(1, 3);
        assert_eq!(
            run_naive_bb84(&p).unwrap().to_json(),
            run_naive_bb84(&p).unwrap().to_json()
        );
    }

    #[test]
    fn eavesdropper_causes_disagreements() {
        let p = SimParams::new(20_000, 1)
            .with_eve(EveStrategy::intercept_resend(EveFamily::AliceFamily));
        let t = run_naive_bb84(&p).unwrap();
        assert!(t.summary.sift.key_disagreements > 0);
        assert!(t.summary.eve.is_none());
    }

    #[test]
    fn kept_rounds_carry_keys() {
        let t = run_naive_bb84(&SimParams::new(500, 2)).unwrap();
        for r in &t.rounds {
            let kept = r.sift_decision == SiftDecision::Kept;
            assert_eq!(r.alice_key_symbol.is_some(), kept);
            assert_eq!(r.bob_key_symbol.is_some(), kept);
            assert_eq!(
                r.announcements,
                Announcements::outcomes(r.alice_value as usize, r.bob_outcome as usize)
            );
        }
    }
}
