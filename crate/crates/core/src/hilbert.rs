//! Measurement bases, states and Born-rule probabilities.
//!
//! Both parties measure in Fourier bases with a fractional phase shift. Alice's
//! basis `a` has vectors
//!
//! ```text
//! |i>_{A,a} = d^{-1/2} sum_k exp(2 pi i k (i + alpha_a) / d) |k>
//! ```
//!
//! and Bob's basis `b` has vectors with the outcome entering with the opposite
//! sign, `exp(2 pi i l (-j + beta_b) / d)`. The offsets are
//! `alpha = (0, 1/2)` and `beta = (1/4, -1/4)`.
//!
//! Offsets are kept as integer multiples of 1/4, so every phase is an exact
//! integer numerator over `4d` that is reduced before conversion to an angle.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QkdError, Result};

/// Tolerance on squared norms of states and amplitude vectors.
pub const NORM_TOL: f64 = 1e-12;

/// Tolerance on probability rows fed to [`sample_outcome`].
pub const ROW_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Alice,
    Bob,
}

/// A phase offset stored as an exact multiple of 1/4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PhaseOffset {
    quarters: i64,
}

impl PhaseOffset {
    pub const fn from_quarters(quarters: i64) -> Self {
        Self { quarters }
    }

    pub const fn quarters(self) -> i64 {
        self.quarters
    }

    pub fn value(self) -> f64 {
        self.quarters as f64 / 4.0
    }

    /// The offset attached to basis `index` of `side`.
    pub fn standard(side: Side, index: u8) -> Result<Self> {
        check_basis_index(index)?;
        let quarters = match (side, index) {
            (Side::Alice, 1) => 0,
            (Side::Alice, _) => 2,
            (Side::Bob, 1) => 1,
            (Side::Bob, _) => -1,
        };
        Ok(Self::from_quarters(quarters))
    }
}

pub(crate) fn check_basis_index(index: u8) -> Result<()> {
    if index == 1 || index == 2 {
        Ok(())
    } else {
        Err(QkdError::BasisIndex(index))
    }
}

pub(crate) fn check_dimension(d: usize) -> Result<()> {
    if d >= 2 {
        Ok(())
    } else {
        Err(QkdError::Dimension(d))
    }
}

pub(crate) fn check_outcome(index: usize, d: usize) -> Result<()> {
    if index < d {
        Ok(())
    } else {
        Err(QkdError::Outcome { index, d })
    }
}

/// `exp(2 pi i * numerator / (4d))` with the numerator reduced modulo `4d`.
fn quarter_phase(numerator: i64, d: usize) -> Complex64 {
    let period = 4 * d as i64;
    let reduced = numerator.rem_euclid(period);
    Complex64::from_polar(1.0, TAU * reduced as f64 / period as f64)
}

/// One of the four measurement bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisSpec {
    side: Side,
    index: u8,
    dimension: usize,
}

impl BasisSpec {
    pub fn new(side: Side, index: u8, dimension: usize) -> Result<Self> {
        check_dimension(dimension)?;
        check_basis_index(index)?;
        Ok(Self {
            side,
            index,
            dimension,
        })
    }

    pub fn alice(index: u8, dimension: usize) -> Result<Self> {
        Self::new(Side::Alice, index, dimension)
    }

    pub fn bob(index: u8, dimension: usize) -> Result<Self> {
        Self::new(Side::Bob, index, dimension)
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn index(&self) -> u8 {
        self.index
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn phase_offset(&self) -> PhaseOffset {
        PhaseOffset::standard(self.side, self.index).expect("index validated at construction")
    }

    /// The basis vector for `outcome`.
    pub fn vector(&self, outcome: usize) -> Result<AmplitudeVector> {
        let d = self.dimension;
        check_outcome(outcome, d)?;
        let q = self.phase_offset().quarters();
        let shift = match self.side {
            Side::Alice => 4 * outcome as i64 + q,
            Side::Bob => -4 * (outcome as i64) + q,
        };
        let scale = 1.0 / (d as f64).sqrt();
        let entries = (0..d as i64)
            .map(|k| quarter_phase(k * shift, d) * scale)
            .collect();
        Ok(AmplitudeVector { entries })
    }

    /// All `d` vectors, ordered by outcome.
    pub fn vectors(&self) -> Vec<AmplitudeVector> {
        (0..self.dimension)
            .map(|i| self.vector(i).expect("outcome in range"))
            .collect()
    }
}

/// `|i>_{A,a}`.
pub fn alice_basis_vector(d: usize, a: u8, i: usize) -> Result<AmplitudeVector> {
    BasisSpec::alice(a, d)?.vector(i)
}

/// `|j>_{B,b}`.
pub fn bob_basis_vector(d: usize, b: u8, j: usize) -> Result<AmplitudeVector> {
    BasisSpec::bob(b, d)?.vector(j)
}

/// A unit-norm pure state of a single d-level system.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeVector {
    entries: Vec<Complex64>,
}

impl AmplitudeVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = entries.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QkdError::NotNormalized(norm));
        }
        Ok(Self { entries })
    }

    /// Rescales `entries` to unit norm. Fails on the zero vector.
    pub fn normalized(entries: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = entries.iter().map(|c| c.norm_sqr()).sum();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(QkdError::NotNormalized(norm));
        }
        let scale = 1.0 / norm.sqrt();
        Ok(Self {
            entries: entries.into_iter().map(|c| c * scale).collect(),
        })
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn dimension(&self) -> usize {
        self.entries.len()
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &AmplitudeVector) -> Complex64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| x.conj() * y)
            .sum()
    }

    /// Born probabilities of measuring this state in `basis`.
    pub fn born_row(&self, basis: &BasisSpec) -> Result<Vec<f64>> {
        if basis.dimension() != self.dimension() {
            return Err(QkdError::DimensionMismatch {
                expected: basis.dimension(),
                found: self.dimension(),
            });
        }
        Ok(basis
            .vectors()
            .iter()
            .map(|v| v.inner(self).norm_sqr())
            .collect())
    }
}

/// Real Schmidt coefficients of `sum_i lambda_i |ii>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtState {
    coeffs: Vec<f64>,
}

impl SchmidtState {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        check_dimension(coeffs.len())?;
        let norm: f64 = coeffs.iter().map(|x| x * x).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QkdError::NotNormalized(norm));
        }
        Ok(Self { coeffs })
    }

    pub fn normalized(coeffs: Vec<f64>) -> Result<Self> {
        check_dimension(coeffs.len())?;
        let norm: f64 = coeffs.iter().map(|x| x * x).sum();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(QkdError::NotNormalized(norm));
        }
        let scale = 1.0 / norm.sqrt();
        Ok(Self {
            coeffs: coeffs.into_iter().map(|x| x * scale).collect(),
        })
    }

    /// The maximally entangled state.
    pub fn uniform(d: usize) -> Result<Self> {
        check_dimension(d)?;
        Ok(Self {
            coeffs: vec![1.0 / (d as f64).sqrt(); d],
        })
    }

    /// `|00>`.
    pub fn product(d: usize) -> Result<Self> {
        check_dimension(d)?;
        let mut coeffs = vec![0.0; d];
        coeffs[0] = 1.0;
        Ok(Self { coeffs })
    }

    pub fn dimension(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

fn check_indices(d: usize, a: u8, b: u8, i: usize, j: usize) -> Result<()> {
    check_dimension(d)?;
    check_basis_index(a)?;
    check_basis_index(b)?;
    check_outcome(i, d)?;
    check_outcome(j, d)
}

fn quarters(side: Side, index: u8) -> i64 {
    PhaseOffset::standard(side, index)
        .expect("validated basis index")
        .quarters()
}

/// Probability that Bob, measuring basis `b`, sees `j` when Alice prepared
/// `|i>_{A,a}`.
///
/// Evaluated as `|(1/d) sum_k exp(2 pi i k (i + j + alpha_a - beta_b) / d)|^2`;
/// it depends on `(i + j) mod d` and `(a, b)` only.
pub fn transition_prob(d: usize, a: u8, b: u8, i: usize, j: usize) -> Result<f64> {
    check_indices(d, a, b, i, j)?;
    let shift = 4 * (i + j) as i64 + quarters(Side::Alice, a) - quarters(Side::Bob, b);
    let amplitude: Complex64 = (0..d as i64).map(|k| quarter_phase(k * shift, d)).sum();
    Ok(amplitude.norm_sqr() / (d * d) as f64)
}

/// The closed form `1 / (d (1 - cos(2 pi (i + j + alpha_a - beta_b) / d)))`.
///
/// For the standard offsets this equals `d * transition_prob`, so each row
/// sums to `d` rather than 1. Kept for comparison with the Born values.
pub fn closed_form_transition_weight(d: usize, a: u8, b: u8, i: usize, j: usize) -> Result<f64> {
    check_indices(d, a, b, i, j)?;
    closed_form_weight_with_offsets(
        d,
        PhaseOffset::standard(Side::Alice, a)?,
        PhaseOffset::standard(Side::Bob, b)?,
        i,
        j,
    )
}

/// [`closed_form_transition_weight`] with arbitrary offsets. Integer offset
/// differences can make the denominator vanish, which is reported as
/// [`QkdError::SingularWeight`].
pub fn closed_form_weight_with_offsets(
    d: usize,
    alpha: PhaseOffset,
    beta: PhaseOffset,
    i: usize,
    j: usize,
) -> Result<f64> {
    check_dimension(d)?;
    check_outcome(i, d)?;
    check_outcome(j, d)?;
    let period = 4 * d as i64;
    let numerator = (4 * (i + j) as i64 + alpha.quarters() - beta.quarters()).rem_euclid(period);
    if numerator == 0 {
        return Err(QkdError::SingularWeight);
    }
    let angle = TAU * numerator as f64 / period as f64;
    Ok(1.0 / (d as f64 * (1.0 - angle.cos())))
}

/// Transition probabilities for all `(a, b, i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeTable {
    dimension: usize,
    values: Vec<f64>,
}

impl OutcomeTable {
    /// Born-rule table for the standard bases.
    pub fn born(d: usize) -> Result<Self> {
        check_dimension(d)?;
        let mut values = Vec::with_capacity(4 * d * d);
        for a in 1..=2u8 {
            for b in 1..=2u8 {
                // One row per (a, b): every other row is a cyclic shift.
                let base: Vec<f64> = (0..d)
                    .map(|s| transition_prob(d, a, b, 0, s))
                    .collect::<Result<_>>()?;
                for i in 0..d {
                    values.extend((0..d).map(|j| base[(i + j) % d]));
                }
            }
        }
        Ok(Self {
            dimension: d,
            values,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    fn offset(&self, a: u8, b: u8, i: usize) -> usize {
        debug_assert!(matches!(a, 1 | 2) && matches!(b, 1 | 2));
        let d = self.dimension;
        ((a as usize - 1) * 2 + (b as usize - 1)) * d * d + i * d
    }

    /// Bob's outcome distribution for Alice's `|i>_{A,a}` and Bob's basis `b`.
    pub fn row(&self, a: u8, b: u8, i: usize) -> Result<&[f64]> {
        check_basis_index(a)?;
        check_basis_index(b)?;
        check_outcome(i, self.dimension)?;
        let start = self.offset(a, b, i);
        Ok(&self.values[start..start + self.dimension])
    }

    pub fn get(&self, a: u8, b: u8, i: usize, j: usize) -> Result<f64> {
        check_outcome(j, self.dimension)?;
        Ok(self.row(a, b, i)?[j])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `P(A_a = i, B_b = j)` for the state `sum_k lambda_k |kk>`.
pub fn schmidt_joint_prob(state: &SchmidtState, a: u8, b: u8, i: usize, j: usize) -> Result<f64> {
    let d = state.dimension();
    check_indices(d, a, b, i, j)?;
    Ok(joint_amplitude(state, a, b, i, j).norm_sqr())
}

fn joint_amplitude(state: &SchmidtState, a: u8, b: u8, i: usize, j: usize) -> Complex64 {
    let d = state.dimension();
    let shift = 4 * (i as i64 - j as i64) + quarters(Side::Alice, a) + quarters(Side::Bob, b);
    let sum: Complex64 = state
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, &lambda)| quarter_phase(-(k as i64) * shift, d) * lambda)
        .sum();
    sum / d as f64
}

/// The `d x d` joint distribution for bases `(a, b)`, row-major in Alice's
/// outcome.
pub fn schmidt_joint_table(state: &SchmidtState, a: u8, b: u8) -> Result<Vec<f64>> {
    let d = state.dimension();
    check_basis_index(a)?;
    check_basis_index(b)?;
    let mut table = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            table.push(joint_amplitude(state, a, b, i, j).norm_sqr());
        }
    }
    Ok(table)
}

/// Draws an index with probability `row[k]`.
pub fn sample_outcome<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> Result<usize> {
    let sum: f64 = row.iter().sum();
    if row.is_empty()
        || row.iter().any(|&p| p.is_nan() || p < -ROW_TOL)
        || (sum - 1.0).abs() > ROW_TOL
    {
        return Err(QkdError::UnnormalizedRow(sum));
    }
    let target = rng.random::<f64>() * sum;
    let mut cumulative = 0.0;
    for (k, &p) in row.iter().enumerate() {
        cumulative += p;
        if target < cumulative && p > 0.0 {
            return Ok(k);
        }
    }
    // Rounding left the target past the last partial sum.
    Ok(row
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("normalized row has a positive entry"))
}
