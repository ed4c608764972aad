use rand::Rng;
use serde::Serialize;

use super::{
    zg_sift, Announcements, ProtocolId, RoundRecord, SiftDecision, SimParams, Transcript, ZgSift,
};
use crate::adversary::{expected_disturbance, intercept_entangled};
use crate::bell::{term_index, TERMS};
use crate::error::{QkdError, Result};
use crate::hilbert::{sample_outcome, schmidt_joint_table, BasisSpec, SchmidtState};
use crate::seeded_rng;

/// How well the outcome ordering reveals whether the basis indices agree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InferenceRates {
    /// Probability that a round is not a tie.
    pub kept: f64,
    /// Probability that a round is kept and Bob infers Alice's basis.
    pub success: f64,
    /// `success / kept`: key agreement on kept rounds.
    pub conditional_success: f64,
}

/// Inference rates from joint tables in [`TERMS`] order, with basis pairs
/// chosen uniformly.
pub fn zg_inference_rates(d: usize, tables: &[Vec<f64>]) -> InferenceRates {
    let mut kept = 0.0;
    let mut success = 0.0;
    for (term, table) in TERMS.iter().zip(tables) {
        let (mut alice_greater, mut bob_greater) = (0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                let p = table[i * d + j];
                if i > j {
                    alice_greater += p;
                } else if j > i {
                    bob_greater += p;
                }
            }
        }
        kept += 0.25 * (alice_greater + bob_greater);
        success += 0.25
            * if term.alice_basis == term.bob_basis {
                alice_greater
            } else {
                bob_greater
            };
    }
    InferenceRates {
        kept,
        success,
        conditional_success: if kept > 0.0 { success / kept } else { 0.0 },
    }
}

/// Exact inference rates for the undisturbed `state`.
pub fn zg_inference_success(state: &SchmidtState) -> InferenceRates {
    let tables: Vec<Vec<f64>> = TERMS
        .iter()
        .map(|t| schmidt_joint_table(state, t.alice_basis, t.bob_basis).expect("valid bases"))
        .collect();
    zg_inference_rates(state.dimension(), &tables)
}

/// Entanglement-based protocol keyed on Alice's basis choice.
///
/// Each round both parties pick a basis uniformly and announce only their
/// outcomes. A `check_fraction` share of rounds additionally reveals the bases
/// and feeds the `A_d` estimate; those rounds yield no key. Among the rest, ties
/// are discarded and the ordering of outcomes tells Bob whether his basis index
/// matches Alice's.
pub fn run_zg_entangled(
    state: &SchmidtState,
    check_fraction: f64,
    params: &SimParams,
) -> Result<Transcript> {
    params.validate()?;
    if !(0.0..1.0).contains(&check_fraction) {
        return Err(QkdError::InvalidParameter(format!(
            "check fraction must lie in [0, 1), got {check_fraction}"
        )));
    }
    let d = state.dimension();
    // Undisturbed joint tables, indexed like TERMS.
    let tables: Vec<Vec<f64>> = TERMS
        .iter()
        .map(|t| schmidt_joint_table(state, t.alice_basis, t.bob_basis))
        .collect::<Result<_>>()?;
    let mut rng = seeded_rng(params.seed);
    let mut rounds = Vec::with_capacity(params.rounds);

    for round in 0..params.rounds {
        let a = rng.random_range(1..=2u8);
        let b = rng.random_range(1..=2u8);
        let check = rng.random_bool(check_fraction);
        let (i, j) = if params.eve.is_active() {
            let attacked = intercept_entangled(state, &params.eve, &mut rng)?;
            let i = sample_outcome(
                &attacked.alice_state.born_row(&BasisSpec::alice(a, d)?)?,
                &mut rng,
            )?;
            let j = sample_outcome(
                &attacked.bob_state.born_row(&BasisSpec::bob(b, d)?)?,
                &mut rng,
            )?;
            (i, j)
        } else {
            let table = &tables[term_index(a, b).expect("every basis pair has a term")];
            let cell = sample_outcome(table, &mut rng)?;
            (cell / d, cell % d)
        };

        let mut announcements = Announcements::outcomes(i, j);
        let (decision, alice_key, bob_key) = if check {
            announcements.alice_basis = Some(a);
            announcements.bob_basis = Some(b);
            (SiftDecision::SecurityConsumed, None, None)
        } else {
            match zg_sift(d, i, j)? {
                ZgSift::DiscardTie => (SiftDecision::DiscardedTie, None, None),
                ZgSift::SameIndex => (SiftDecision::Kept, Some(a - 1), Some(b - 1)),
                ZgSift::DifferentIndex => (SiftDecision::Kept, Some(a - 1), Some(2 - b)),
            }
        };

        rounds.push(RoundRecord {
            round: round as u32,
            alice_basis: a,
            alice_value: i as u32,
            bob_mode: None,
            bob_basis: b,
            bob_outcome: j as u32,
            announcements,
            sift_decision: decision,
            alice_key_symbol: alice_key.map(u32::from),
            bob_key_symbol: bob_key.map(u32::from),
        });
    }

    let eve = if params.eve.is_active() {
        Some(expected_disturbance(
            d,
            &params.eve,
            ProtocolId::Zg,
            Some(state),
        )?)
    } else {
        None
    };
    Ok(Transcript::new(ProtocolId::Zg, d, params.seed, rounds, eve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{EveFamily, EveStrategy};
    use crate::bell::{optimize_state, zg_score, DEFAULT_EIGEN_TOL};

    fn optimal(d: usize) -> SchmidtState {
        optimize_state(d, DEFAULT_EIGEN_TOL).unwrap().state
    }

    #[test]
    fn inference_improves_with_dimension() {
        let rates: Vec<f64> = [2, 4, 8, 16]
            .iter()
            .map(|&d| zg_inference_success(&optimal(d)).conditional_success)
            .collect();
        for w in rates.windows(2) {
            assert!(w[1] > w[0], "{rates:?}");
        }
    }

    #[test]
    fn key_agreement_matches_exact_rate() {
        for d in [4, 16] {
            let n = 100_000;
            let t = run_zg_entangled(&optimal(d), 0.0, &SimParams::new(n, 11)).unwrap();
            let exact = zg_inference_success(&optimal(d));
            let kept = t.summary.sift.kept;
            let agree = t.summary.key_agreement_rate.unwrap();
            let p = exact.conditional_success;
            let sigma = (p * (1.0 - p) / kept as f64).sqrt();
            assert!((agree - p).abs() < 3.0 * sigma, "d={d}: {agree} vs {p}");
            let yield_sigma = (exact.kept * (1.0 - exact.kept) / n as f64).sqrt();
            assert!((t.summary.sift_yield - exact.kept).abs() < 3.0 * yield_sigma);
        }
    }

    #[test]
    fn estimate_tracks_exact_functional() {
        let state = optimal(6);
        let t = run_zg_entangled(&state, 0.2, &SimParams::new(100_000, 5)).unwrap();
        let est = t.summary.estimated_a_d.unwrap();
        let se = t.summary.a_d_std_error.unwrap();
        let exact = zg_score(&state).total;
        assert!((est - exact).abs() < 3.0 * se, "{est} ± {se} vs {exact}");
    }

    #[test]
    fn no_checks_means_key_equals_kept() {
        let t = run_zg_entangled(&optimal(4), 0.0, &SimParams::new(5_000, 2)).unwrap();
        assert_eq!(t.summary.sift.security_consumed, 0);
        assert_eq!(t.summary.sift.key_length, t.summary.sift.kept);
        assert!(t.summary.estimated_a_d.is_none());
    }

    #[test]
    fn announcements_reveal_bases_only_on_checks() {
        let t = run_zg_entangled(&optimal(4), 0.3, &SimParams::new(2_000, 8)).unwrap();
        for r in &t.rounds {
            let check = r.sift_decision == SiftDecision::SecurityConsumed;
            let a = &r.announcements;
            assert_eq!(a.alice_outcome, Some(r.alice_value));
            assert_eq!(a.bob_outcome, Some(r.bob_outcome));
            assert_eq!(a.alice_basis.is_some(), check);
            assert_eq!(a.bob_basis.is_some(), check);
            assert!(a.bob_mode.is_none());
        }
    }

    #[test]
    fn eavesdropper_raises_estimate() {
        let state = optimal(4);
        let eve = EveStrategy::intercept_resend(EveFamily::BobFamily);
        let t = run_zg_entangled(&state, 0.5, &SimParams::new(40_000, 3).with_eve(eve)).unwrap();
        let report = t.summary.eve.as_ref().unwrap();
        let est = t.summary.estimated_a_d.unwrap();
        let se = t.summary.a_d_std_error.unwrap();
        assert!((est - report.a_d.unwrap()).abs() < 4.0 * se);
        assert!(est > zg_score(&state).total);
    }

    #[test]
    fn rejects_bad_check_fraction() {
        let s = optimal(3);
        assert!(run_zg_entangled(&s, 1.0, &SimParams::new(10, 0)).is_err());
        assert!(run_zg_entangled(&s, -0.1, &SimParams::new(10, 0)).is_err());
    }
}
