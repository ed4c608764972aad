//! Intercept-resend eavesdropping.
//!
//! Eve picks one basis uniformly from her family, measures the system in
//! transit and forwards the eigenvector she observed. On the entanglement-based
//! protocol she intercepts one half of the pair (Bob's by default), which
//! leaves the parties with a product state.
//!
//! [`expected_disturbance`] evaluates the same model exactly by enumerating
//! Eve's basis choices and outcomes instead of sampling them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{score_from_tables, TERMS};
use crate::error::{QkdError, Result};
use crate::hilbert::{
    check_dimension, sample_outcome, schmidt_joint_table, AmplitudeVector, BasisSpec, SchmidtState,
    Side,
};
use crate::protocol::{practical_decode, zg_inference_rates, ProtocolId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EveKind {
    #[default]
    None,
    InterceptResend,
}

/// Which bases Eve chooses from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EveFamily {
    /// Alice's two bases.
    #[default]
    AliceFamily,
    /// Bob's two bases.
    BobFamily,
    /// All four bases, uniformly.
    MixedUniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveStrategy {
    pub kind: EveKind,
    pub family: EveFamily,
    /// Half of the entangled pair Eve intercepts. Unused by the
    /// prepare-and-measure protocols.
    pub target: Side,
}

impl Default for EveStrategy {
    fn default() -> Self {
        Self::none()
    }
}

impl EveStrategy {
    pub fn none() -> Self {
        Self {
            kind: EveKind::None,
            family: EveFamily::AliceFamily,
            target: Side::Bob,
        }
    }

    pub fn intercept_resend(family: EveFamily) -> Self {
        Self {
            kind: EveKind::InterceptResend,
            family,
            target: Side::Bob,
        }
    }

    pub fn with_target(mut self, target: Side) -> Self {
        self.target = target;
        self
    }

    pub fn is_active(&self) -> bool {
        self.kind == EveKind::InterceptResend
    }

    /// Eve's candidate bases in dimension `d`.
    pub fn bases(&self, d: usize) -> Result<Vec<BasisSpec>> {
        let sides: &[Side] = match self.family {
            EveFamily::AliceFamily => &[Side::Alice],
            EveFamily::BobFamily => &[Side::Bob],
            EveFamily::MixedUniform => &[Side::Alice, Side::Bob],
        };
        let mut bases = Vec::with_capacity(2 * sides.len());
        for &side in sides {
            for index in 1..=2 {
                bases.push(BasisSpec::new(side, index, d)?);
            }
        }
        Ok(bases)
    }
}

/// What Eve learned in one interception.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EveRecord {
    pub basis: BasisSpec,
    pub outcome: usize,
}

/// Measures `incoming` in a random basis of Eve's family and returns the
/// eigenvector she resends.
pub fn intercept_resend<R: Rng + ?Sized>(
    incoming: &AmplitudeVector,
    strategy: &EveStrategy,
    rng: &mut R,
) -> Result<(AmplitudeVector, EveRecord)> {
    if !strategy.is_active() {
        return Err(QkdError::InactiveEavesdropper);
    }
    let bases = strategy.bases(incoming.dimension())?;
    let basis = bases[rng.random_range(0..bases.len())];
    let row = incoming.born_row(&basis)?;
    let outcome = sample_outcome(&row, rng)?;
    Ok((basis.vector(outcome)?, EveRecord { basis, outcome }))
}

/// The parties' product state after Eve intercepts one half of the pair.
#[derive(Clone, Debug, PartialEq)]
pub struct EntangledInterception {
    pub alice_state: AmplitudeVector,
    pub bob_state: AmplitudeVector,
    pub record: EveRecord,
}

/// Conditional state of the untouched half when Eve projects the target half
/// of `sum_k lambda_k |kk>` onto `eve_vector`, together with the probability
/// of that outcome.
fn conditional_partner(
    state: &SchmidtState,
    eve_vector: &AmplitudeVector,
) -> Option<(f64, AmplitudeVector)> {
    let partner: Vec<_> = state
        .coeffs()
        .iter()
        .zip(eve_vector.entries())
        .map(|(&lambda, e)| e.conj() * lambda)
        .collect();
    let prob: f64 = partner.iter().map(|c| c.norm_sqr()).sum();
    if prob <= 0.0 {
        return None;
    }
    Some((prob, AmplitudeVector::normalized(partner).ok()?))
}

fn assign_halves(
    target: Side,
    partner: AmplitudeVector,
    resent: AmplitudeVector,
) -> (AmplitudeVector, AmplitudeVector) {
    match target {
        Side::Bob => (partner, resent),
        Side::Alice => (resent, partner),
    }
}

/// Intercept-resend on one half of the entangled pair.
pub fn intercept_entangled<R: Rng + ?Sized>(
    state: &SchmidtState,
    strategy: &EveStrategy,
    rng: &mut R,
) -> Result<EntangledInterception> {
    if !strategy.is_active() {
        return Err(QkdError::InactiveEavesdropper);
    }
    let d = state.dimension();
    let bases = strategy.bases(d)?;
    let basis = bases[rng.random_range(0..bases.len())];
    let vectors = basis.vectors();
    // The reduced state of either half is diagonal with entries lambda_k^2.
    let row: Vec<f64> = vectors
        .iter()
        .map(|v| {
            v.entries()
                .iter()
                .zip(state.coeffs())
                .map(|(e, &lambda)| e.norm_sqr() * lambda * lambda)
                .sum()
        })
        .collect();
    let outcome = sample_outcome(&row, rng)?;
    let resent = vectors[outcome].clone();
    let (_, partner) =
        conditional_partner(state, &resent).expect("sampled outcome has positive probability");
    let (alice_state, bob_state) = assign_halves(strategy.target, partner, resent);
    Ok(EntangledInterception {
        alice_state,
        bob_state,
        record: EveRecord { basis, outcome },
    })
}

/// Exact disturbance of an eavesdropping strategy. Absolute values sit next to
/// their increase over the undisturbed protocol.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisturbanceReport {
    pub protocol: ProtocolId,
    pub strategy: EveStrategy,
    /// Matching-basis error rate of security-mode rounds.
    pub security_error_rate: Option<f64>,
    /// Probability that Bob's key symbol differs from Alice's on a kept round.
    pub key_error_rate: Option<f64>,
    pub key_error_increase: Option<f64>,
    /// `A_d` of the correlations the parties end up with.
    pub a_d: Option<f64>,
    pub a_d_increase: Option<f64>,
}

/// Resent states and their probabilities for a prepared input.
fn resend_ensemble(
    input: &AmplitudeVector,
    strategy: &EveStrategy,
) -> Result<Vec<(f64, AmplitudeVector)>> {
    if !strategy.is_active() {
        return Ok(vec![(1.0, input.clone())]);
    }
    let bases = strategy.bases(input.dimension())?;
    let weight = 1.0 / bases.len() as f64;
    let mut out = Vec::new();
    for basis in &bases {
        for (m, v) in basis.vectors().into_iter().enumerate() {
            let p = input.born_row(basis)?[m];
            if p > 0.0 {
                out.push((weight * p, v));
            }
        }
    }
    Ok(out)
}

/// `(security error, key error)` of the prepare-and-measure protocol.
fn practical_rates(d: usize, strategy: &EveStrategy, silent: bool) -> Result<(f64, f64)> {
    let bob_bases: &[u8] = if silent { &[1] } else { &[1, 2] };
    let mut security_error = 0.0;
    let mut key_error = 0.0;
    for a in 1..=2u8 {
        let alice = BasisSpec::alice(a, d)?;
        for i in 0..d {
            let prepared = alice.vector(i)?;
            for (p, resent) in resend_ensemble(&prepared, strategy)? {
                security_error += p * (1.0 - prepared.inner(&resent).norm_sqr());
                for &b in bob_bases {
                    let row = resent.born_row(&BasisSpec::bob(b, d)?)?;
                    for (j, q) in row.iter().enumerate() {
                        if practical_decode(d, a, b, j)? != i {
                            key_error += p * q / bob_bases.len() as f64;
                        }
                    }
                }
            }
        }
    }
    let inputs = (2 * d) as f64;
    Ok((security_error / inputs, key_error / inputs))
}

/// Joint tables in [`TERMS`] order after Eve's attack on `state`.
pub fn attacked_joint_tables(
    state: &SchmidtState,
    strategy: &EveStrategy,
) -> Result<Vec<Vec<f64>>> {
    let d = state.dimension();
    if !strategy.is_active() {
        return TERMS
            .iter()
            .map(|t| schmidt_joint_table(state, t.alice_basis, t.bob_basis))
            .collect();
    }
    let bases = strategy.bases(d)?;
    let weight = 1.0 / bases.len() as f64;
    let mut tables = vec![vec![0.0; d * d]; TERMS.len()];
    for basis in &bases {
        for eve_vector in basis.vectors() {
            let Some((p, partner)) = conditional_partner(state, &eve_vector) else {
                continue;
            };
            let (alice_state, bob_state) = assign_halves(strategy.target, partner, eve_vector);
            for (table, term) in tables.iter_mut().zip(TERMS) {
                let pa = alice_state.born_row(&BasisSpec::alice(term.alice_basis, d)?)?;
                let pb = bob_state.born_row(&BasisSpec::bob(term.bob_basis, d)?)?;
                for i in 0..d {
                    for j in 0..d {
                        table[i * d + j] += weight * p * pa[i] * pb[j];
                    }
                }
            }
        }
    }
    Ok(tables)
}

/// Exact disturbance caused by `strategy`.
///
/// The entanglement-based protocol needs the shared `state`; the outcome-reveal
/// BB84 variant has no check mode and is rejected.
pub fn expected_disturbance(
    d: usize,
    strategy: &EveStrategy,
    protocol: ProtocolId,
    state: Option<&SchmidtState>,
) -> Result<DisturbanceReport> {
    check_dimension(d)?;
    let mut report = DisturbanceReport {
        protocol,
        strategy: *strategy,
        security_error_rate: None,
        key_error_rate: None,
        key_error_increase: None,
        a_d: None,
        a_d_increase: None,
    };
    match protocol {
        ProtocolId::Practical | ProtocolId::PracticalSilent => {
            let silent = protocol == ProtocolId::PracticalSilent;
            let (security, key) = practical_rates(d, strategy, silent)?;
            let (_, baseline_key) = practical_rates(d, &EveStrategy::none(), silent)?;
            report.security_error_rate = Some(security);
            report.key_error_rate = Some(key);
            report.key_error_increase = Some(key - baseline_key);
        }
        ProtocolId::Zg => {
            let state = state.ok_or_else(|| {
                QkdError::InvalidParameter("entangled protocol needs the shared state".into())
            })?;
            if state.dimension() != d {
                return Err(QkdError::DimensionMismatch {
                    expected: d,
                    found: state.dimension(),
                });
            }
            let attacked = attacked_joint_tables(state, strategy)?;
            let baseline = attacked_joint_tables(state, &EveStrategy::none())?;
            let a_d = score_from_tables(d, &attacked).total;
            let a_d_baseline = score_from_tables(d, &baseline).total;
            let key = 1.0 - zg_inference_rates(d, &attacked).conditional_success;
            let key_baseline = 1.0 - zg_inference_rates(d, &baseline).conditional_success;
            report.key_error_rate = Some(key);
            report.key_error_increase = Some(key - key_baseline);
            report.a_d = Some(a_d);
            report.a_d_increase = Some(a_d - a_d_baseline);
        }
        ProtocolId::NaiveBb84 => {
            return Err(QkdError::UnsupportedProtocol(protocol.to_string()));
        }
    }
    Ok(report)
}
