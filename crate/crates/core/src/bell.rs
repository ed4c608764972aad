//! The four-term ordering functional
//!
//! ```text
//! A_d = P(A2 < B2) + P(B2 < A1) + P(A1 < B1) + P(B1 <= A2) >= 1
//! ```
//!
//! where `X_k` is party X's outcome in basis k. Every deterministic (local)
//! assignment scores at least 1; entangled states measured in the Fourier
//! bases of [`crate::hilbert`] go below.
//!
//! For real Schmidt states `sum_k lambda_k |kk>` each joint probability is a
//! real quadratic form in `lambda`, so `A_d(lambda) = lambda^T Q lambda` and the
//! optimum is the smallest eigenpair of `Q`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{QkdError, Result};
use crate::hilbert::{check_dimension, schmidt_joint_table, PhaseOffset, SchmidtState, Side};

/// Default residual tolerance for [`optimize_state`].
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

/// Largest dimension accepted by [`classical_min`].
pub const MAX_ENUMERATION_DIM: usize = 8;

/// Ordering relation between Alice's outcome `i` and Bob's outcome `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `i < j`
    AliceBelow,
    /// `j < i`
    BobBelow,
    /// `j <= i`
    BobAtMost,
}

impl Relation {
    pub fn holds(self, alice: usize, bob: usize) -> bool {
        match self {
            Relation::AliceBelow => alice < bob,
            Relation::BobBelow => bob < alice,
            Relation::BobAtMost => bob <= alice,
        }
    }

    /// Whether the relation holds for outcome difference `alice - bob`.
    fn holds_for_difference(self, diff: i64) -> bool {
        match self {
            Relation::AliceBelow => diff < 0,
            Relation::BobBelow => diff > 0,
            Relation::BobAtMost => diff >= 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BellTerm {
    pub alice_basis: u8,
    pub bob_basis: u8,
    pub relation: Relation,
}

/// The four terms, in order: `A2<B2`, `B2<A1`, `A1<B1`, `B1<=A2`.
pub const TERMS: [BellTerm; 4] = [
    BellTerm {
        alice_basis: 2,
        bob_basis: 2,
        relation: Relation::AliceBelow,
    },
    BellTerm {
        alice_basis: 1,
        bob_basis: 2,
        relation: Relation::BobBelow,
    },
    BellTerm {
        alice_basis: 1,
        bob_basis: 1,
        relation: Relation::AliceBelow,
    },
    BellTerm {
        alice_basis: 2,
        bob_basis: 1,
        relation: Relation::BobAtMost,
    },
];

/// Position in [`TERMS`] of the term measured with bases `(a, b)`.
pub fn term_index(a: u8, b: u8) -> Option<usize> {
    TERMS
        .iter()
        .position(|t| t.alice_basis == a && t.bob_basis == b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellScore {
    pub d: usize,
    /// Term probabilities in [`TERMS`] order.
    pub term_probs: [f64; 4],
    /// `P(A_a = B_b)` for the basis pair of each term.
    pub tie_probs: [f64; 4],
    pub total: f64,
}

/// Evaluates `A_d` and the tie probabilities for `state`.
pub fn zg_score(state: &SchmidtState) -> BellScore {
    let tables: Vec<Vec<f64>> = TERMS
        .iter()
        .map(|t| {
            schmidt_joint_table(state, t.alice_basis, t.bob_basis).expect("valid basis indices")
        })
        .collect();
    score_from_tables(state.dimension(), &tables)
}

/// Builds a [`BellScore`] from four `d x d` joint tables in [`TERMS`] order.
pub fn score_from_tables(d: usize, tables: &[Vec<f64>]) -> BellScore {
    let mut term_probs = [0.0; 4];
    let mut tie_probs = [0.0; 4];
    for (n, (term, table)) in TERMS.iter().zip(tables).enumerate() {
        for i in 0..d {
            for j in 0..d {
                let p = table[i * d + j];
                if term.relation.holds(i, j) {
                    term_probs[n] += p;
                }
                if i == j {
                    tie_probs[n] += p;
                }
            }
        }
    }
    BellScore {
        d,
        term_probs,
        tie_probs,
        total: term_probs.iter().sum(),
    }
}

/// Score of one deterministic assignment of outcomes.
pub fn classical_score(a1: usize, a2: usize, b1: usize, b2: usize) -> u32 {
    u32::from(a2 < b2) + u32::from(b2 < a1) + u32::from(a1 < b1) + u32::from(b1 <= a2)
}

/// Minimum of [`classical_score`] over all `d^4` deterministic assignments.
pub fn classical_min(d: usize) -> Result<u32> {
    check_dimension(d)?;
    if d > MAX_ENUMERATION_DIM {
        return Err(QkdError::TooLargeForEnumeration {
            d,
            max: MAX_ENUMERATION_DIM,
        });
    }
    let mut best = u32::MAX;
    for a1 in 0..d {
        for a2 in 0..d {
            for b1 in 0..d {
                for b2 in 0..d {
                    best = best.min(classical_score(a1, a2, b1, b2));
                }
            }
        }
    }
    Ok(best)
}

/// The symmetric matrix `Q` with `A_d(lambda) = lambda^T Q lambda` for unit
/// real `lambda`.
pub fn build_quadratic_form(d: usize) -> Result<DMatrix<f64>> {
    check_dimension(d)?;
    let n = d as i64;
    let period = 4 * n;
    let norm = 1.0 / (d * d) as f64;
    let mut q = DMatrix::<f64>::zeros(d, d);
    for term in TERMS {
        let offset = PhaseOffset::standard(Side::Alice, term.alice_basis)?.quarters()
            + PhaseOffset::standard(Side::Bob, term.bob_basis)?.quarters();
        for diff in -(n - 1)..n {
            if !term.relation.holds_for_difference(diff) {
                continue;
            }
            // Number of (i, j) pairs in 0..d with i - j = diff.
            let pairs = (n - diff.abs()) as f64;
            let shift = 4 * diff + offset;
            for k in 0..n {
                for l in 0..=k {
                    let reduced = ((k - l) * shift).rem_euclid(period);
                    let c = pairs * norm * (TAU * reduced as f64 / period as f64).cos();
                    q[(k as usize, l as usize)] += c;
                    if k != l {
                        q[(l as usize, k as usize)] += c;
                    }
                }
            }
        }
    }
    Ok(q)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimalState {
    pub state: SchmidtState,
    /// Smallest eigenvalue of `Q`, i.e. the optimal `A_d`.
    pub value: f64,
    /// `max |Q v - value v|` for the returned eigenvector.
    pub residual: f64,
}

/// Finds the real Schmidt state minimising `A_d`.
///
/// The eigenvector's sign is fixed so its largest-magnitude component is
/// positive, making the output reproducible.
pub fn optimize_state(d: usize, tol: f64) -> Result<OptimalState> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(QkdError::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let q = build_quadratic_form(d)?;
    let eigen = SymmetricEigen::try_new(q.clone(), f64::EPSILON, 10_000).ok_or(
        QkdError::EigenNonConvergence {
            residual: f64::INFINITY,
            tol,
        },
    )?;
    let (min_idx, value) = eigen
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("non-empty spectrum");
    let mut v: Vec<f64> = eigen.eigenvectors.column(min_idx).iter().copied().collect();
    let pivot = v.iter().enumerate().fold(0, |best, (k, x)| {
        if x.abs() > v[best].abs() + 1e-12 {
            k
        } else {
            best
        }
    });
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let state = SchmidtState::normalized(v)?;
    let lambda = nalgebra::DVector::from_column_slice(state.coeffs());
    let residual = (&q * &lambda - &lambda * value).amax();
    if residual > tol {
        return Err(QkdError::EigenNonConvergence { residual, tol });
    }
    Ok(OptimalState {
        state,
        value,
        residual,
    })
}

/// Complements of the four terms, named by the event they describe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderingProbs {
    pub a2_ge_b2: f64,
    pub a1_ge_b1: f64,
    pub b2_ge_a1: f64,
    pub b1_gt_a2: f64,
}

pub fn ordering_probs(state: &SchmidtState) -> OrderingProbs {
    let d = state.dimension();
    let sum = |a: u8, b: u8, event: fn(usize, usize) -> bool| -> f64 {
        let table = schmidt_joint_table(state, a, b).expect("valid basis indices");
        let mut total = 0.0;
        for i in 0..d {
            for j in 0..d {
                if event(i, j) {
                    total += table[i * d + j];
                }
            }
        }
        total
    };
    OrderingProbs {
        a2_ge_b2: sum(2, 2, |i, j| i >= j),
        a1_ge_b1: sum(1, 1, |i, j| i >= j),
        b2_ge_a1: sum(1, 2, |i, j| j >= i),
        b1_gt_a2: sum(2, 1, |i, j| j > i),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellScanRow {
    pub d: usize,
    pub a_d_optimal: f64,
    pub a_d_uniform: f64,
}

/// Optimal and maximally-entangled `A_d` for each `d` in `d_min..=d_max`.
pub fn bell_scan(d_min: usize, d_max: usize) -> Result<Vec<BellScanRow>> {
    check_dimension(d_min)?;
    if d_max < d_min {
        return Err(QkdError::InvalidParameter(format!(
            "empty range {d_min}..={d_max}"
        )));
    }
    (d_min..=d_max)
        .map(|d| {
            let optimal = optimize_state(d, DEFAULT_EIGEN_TOL)?;
            Ok(BellScanRow {
                d,
                a_d_optimal: optimal.value,
                a_d_uniform: zg_score(&SchmidtState::uniform(d)?).total,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn classical_bound_small_d() {
        assert_eq!(classical_min(2).unwrap(), 1);
        assert_eq!(classical_min(3).unwrap(), 1);
        assert_eq!(classical_score(0, 0, 0, 0), 1);
        assert!(matches!(
            classical_min(9),
            Err(QkdError::TooLargeForEnumeration { d: 9, .. })
        ));
    }

    #[test]
    fn product_state_respects_classical_bound() {
        for d in 2..8 {
            let score = zg_score(&SchmidtState::product(d).unwrap());
            assert!(score.total >= 1.0 - 1e-12, "d={d}: {}", score.total);
        }
    }

    #[test]
    fn uniform_qubit_violates() {
        let score = zg_score(&SchmidtState::uniform(2).unwrap());
        assert!(score.total < 1.0);
        let sum: f64 = score.term_probs.iter().sum();
        assert!((score.total - sum).abs() < 1e-12);
        for p in score.term_probs.iter().chain(&score.tie_probs) {
            assert!((0.0..=1.0).contains(p));
        }
    }

    /// One-parameter sweep over unit (lambda_0, lambda_1).
    fn grid_search_d2() -> f64 {
        let steps = 200_000;
        (0..=steps)
            .map(|s| {
                let t = PI * s as f64 / steps as f64;
                zg_score(&SchmidtState::normalized(vec![t.cos(), t.sin()]).unwrap()).total
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn optimum_d2_matches_grid_search() {
        let opt = optimize_state(2, DEFAULT_EIGEN_TOL).unwrap();
        let grid = grid_search_d2();
        assert!((opt.value - grid).abs() < 1e-4, "{} vs {grid}", opt.value);
        assert!(opt.value < 1.0);
        assert!((zg_score(&opt.state).total - opt.value).abs() < 1e-4);
    }

    #[test]
    fn optimum_d4_beats_uniform() {
        let opt = optimize_state(4, DEFAULT_EIGEN_TOL).unwrap();
        let uniform = zg_score(&SchmidtState::uniform(4).unwrap()).total;
        assert!(uniform - opt.value > 1e-6);
        let norm: f64 = opt.state.coeffs().iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_is_symmetric_and_bounded() {
        for d in 2..=10 {
            let q = build_quadratic_form(d).unwrap();
            assert_eq!(q, q.transpose());
            let eig = SymmetricEigen::new(q);
            assert!(eig.eigenvalues.iter().all(|&x| x <= 4.0 + 1e-12));
        }
    }

    #[test]
    fn optimizer_rejects_bad_tolerance() {
        assert!(optimize_state(3, 0.0).is_err());
        assert!(optimize_state(1, 1e-10).is_err());
    }

    #[test]
    fn ordering_complements() {
        let state = optimize_state(5, DEFAULT_EIGEN_TOL).unwrap().state;
        let score = zg_score(&state);
        let ord = ordering_probs(&state);
        assert!((ord.a2_ge_b2 - (1.0 - score.term_probs[0])).abs() < 1e-12);
        assert!((ord.b2_ge_a1 - (1.0 - score.term_probs[1])).abs() < 1e-12);
        assert!((ord.a1_ge_b1 - (1.0 - score.term_probs[2])).abs() < 1e-12);
        assert!((ord.b1_gt_a2 - (1.0 - score.term_probs[3])).abs() < 1e-12);
    }

    #[test]
    fn ordering_trend_with_dimension() {
        let at = |d| ordering_probs(&optimize_state(d, DEFAULT_EIGEN_TOL).unwrap().state);
        let (lo, hi) = (at(2), at(8));
        let total = |o: OrderingProbs| o.a2_ge_b2 + o.a1_ge_b1 + o.b2_ge_a1 + o.b1_gt_a2;
        assert!(total(hi) > total(lo));
        assert!(hi.b1_gt_a2 > lo.b1_gt_a2);
        // The three non-strict events stay near 0.9 and dip slightly.
        for (x, y) in [
            (hi.a2_ge_b2, lo.a2_ge_b2),
            (hi.a1_ge_b1, lo.a1_ge_b1),
            (hi.b2_ge_a1, lo.b2_ge_a1),
        ] {
            assert!(x > 0.9 && x < y);
        }
    }

    #[test]
    fn product_ordering_uses_marginals() {
        let d = 4;
        let state = SchmidtState::product(d).unwrap();
        let ord = ordering_probs(&state);
        // |00> gives uniform marginals in every Fourier basis.
        let tri = (d * (d + 1) / 2) as f64 / (d * d) as f64;
        let strict = (d * (d - 1) / 2) as f64 / (d * d) as f64;
        assert!((ord.a2_ge_b2 - tri).abs() < 1e-12);
        assert!((ord.a1_ge_b1 - tri).abs() < 1e-12);
        assert!((ord.b2_ge_a1 - tri).abs() < 1e-12);
        assert!((ord.b1_gt_a2 - strict).abs() < 1e-12);
    }

    #[test]
    fn scan_rows() {
        let rows = bell_scan(2, 6).unwrap();
        assert_eq!(rows.len(), 5);
        for row in rows {
            assert!(row.a_d_optimal < 1.0);
            assert!(row.a_d_optimal <= row.a_d_uniform + 1e-12);
        }
        assert!(bell_scan(5, 4).is_err());
    }
}
