//! Channel capacities of the prepare-and-measure protocol versus standard QKD.
//!
//! Standard QKD behaves like an erasure channel that loses half of the rounds,
//! giving `0.5 log2 d` bits per round. The no-discard protocol keeps every
//! round but Bob's symbol is noisy; its capacity is the mutual information
//! between Alice's dit and Bob's outcome given both bases,
//! `log2 d - H(row)`, where every transition row has the same entropy.
//!
//! The four-fold sum `2 log2 d + sum q log2 q` with `q = p / 4d` is also
//! reported. With Born probabilities it equals the mutual information minus
//! exactly 2 bits.

use std::io::Write;

use serde::Serialize;

use crate::error::{QkdError, Result};
use crate::format::g12;
use crate::hilbert::{check_dimension, transition_prob, OutcomeTable};
use crate::protocol::{BobMode, ProtocolId, SiftDecision, Transcript};

pub const CSV_HEADER: &str = "d,standard_bits,eq9_bits,mi_bits,ratio";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityReport {
    pub d: usize,
    pub standard_bits: f64,
    pub eq9_bits: f64,
    pub mi_bits: f64,
    /// `mi_bits / standard_bits`.
    pub ratio: f64,
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(QkdError::InvalidParameter(format!(
            "{what} must lie in [0, 1], got {p}"
        )))
    }
}

/// Shannon entropy in bits; zero entries contribute nothing.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Capacity of a `d`-ary erasure channel.
pub fn erasure_capacity(p_erase: f64, d: usize) -> Result<f64> {
    check_probability(p_erase, "erasure probability")?;
    Ok((1.0 - p_erase) * (d as f64).log2())
}

/// `0.5 log2 d`: half the rounds are erased by basis sifting.
pub fn standard_qkd_capacity(d: usize) -> f64 {
    0.5 * (d as f64).log2()
}

/// Output distribution of a symmetric dit-flip channel: the symbol survives
/// with probability `1 - flip` and otherwise becomes one of the other `d - 1`
/// values uniformly.
fn apply_flip(row: &[f64], flip: f64) -> Vec<f64> {
    if flip == 0.0 {
        return row.to_vec();
    }
    let others = (row.len() - 1) as f64;
    row.iter()
        .map(|&r| (1.0 - flip) * r + flip * (1.0 - r) / others)
        .collect()
}

/// Standard capacity when both protocols share a symmetric dit-flip channel.
pub fn standard_qkd_capacity_noisy(d: usize, flip: f64) -> Result<f64> {
    check_dimension(d)?;
    check_probability(flip, "flip probability")?;
    let mut identity = vec![0.0; d];
    identity[0] = 1.0;
    let noise = entropy_bits(&apply_flip(&identity, flip));
    Ok(0.5 * ((d as f64).log2() - noise))
}

fn base_row(d: usize, flip: f64) -> Result<Vec<f64>> {
    check_dimension(d)?;
    check_probability(flip, "flip probability")?;
    let row: Vec<f64> = (0..d)
        .map(|j| transition_prob(d, 1, 1, 0, j))
        .collect::<Result<_>>()?;
    Ok(apply_flip(&row, flip))
}

/// `log2 d - H(j | i, a, b)` in bits.
pub fn practical_capacity_mi(d: usize) -> Result<f64> {
    practical_capacity_mi_noisy(d, 0.0)
}

pub fn practical_capacity_mi_noisy(d: usize, flip: f64) -> Result<f64> {
    let row = base_row(d, flip)?;
    Ok((d as f64).log2() - entropy_bits(&row))
}

/// `2 log2 d + sum_{a,b,i,j} q log2 q` with `q = p(a,b,i,j) / 4d`.
pub fn eq9_capacity(d: usize) -> Result<f64> {
    eq9_capacity_noisy(d, 0.0)
}

pub fn eq9_capacity_noisy(d: usize, flip: f64) -> Result<f64> {
    check_probability(flip, "flip probability")?;
    let table = OutcomeTable::born(d)?;
    let scale = 1.0 / (4 * d) as f64;
    let mut sum = 0.0;
    for a in 1..=2 {
        for b in 1..=2 {
            for i in 0..d {
                for p in apply_flip(table.row(a, b, i)?, flip) {
                    let q = p * scale;
                    if q > 0.0 {
                        sum += q * q.log2();
                    }
                }
            }
        }
    }
    Ok(2.0 * (d as f64).log2() + sum)
}

pub fn capacity_report(d: usize, flip: f64) -> Result<CapacityReport> {
    let standard_bits = standard_qkd_capacity_noisy(d, flip)?;
    let mi_bits = practical_capacity_mi_noisy(d, flip)?;
    Ok(CapacityReport {
        d,
        standard_bits,
        eq9_bits: eq9_capacity_noisy(d, flip)?,
        mi_bits,
        ratio: mi_bits / standard_bits,
    })
}

/// One report per dimension in `d_min..=d_max`, ascending.
pub fn capacity_scan(d_min: usize, d_max: usize) -> Result<Vec<CapacityReport>> {
    capacity_scan_with_noise(d_min, d_max, 0.0)
}

pub fn capacity_scan_with_noise(
    d_min: usize,
    d_max: usize,
    flip: f64,
) -> Result<Vec<CapacityReport>> {
    check_dimension(d_min)?;
    if d_max < d_min {
        return Err(QkdError::InvalidParameter(format!(
            "empty range {d_min}..={d_max}"
        )));
    }
    (d_min..=d_max).map(|d| capacity_report(d, flip)).collect()
}

/// Writes reports as CSV with twelve significant digits.
pub fn write_csv<W: Write>(reports: &[CapacityReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.d,
            g12(r.standard_bits),
            g12(r.eq9_bits),
            g12(r.mi_bits),
            g12(r.ratio)
        )?;
    }
    Ok(())
}

/// Plug-in estimate of the mutual information (bits) between Alice's dit and
/// Bob's outcome on key-mode rounds, conditioned on both bases.
pub fn empirical_key_information(transcript: &Transcript) -> Result<f64> {
    if !matches!(
        transcript.protocol,
        ProtocolId::Practical | ProtocolId::PracticalSilent
    ) {
        return Err(QkdError::UnsupportedProtocol(
            transcript.protocol.to_string(),
        ));
    }
    let d = transcript.d;
    let mut counts = vec![vec![0usize; d * d]; 4];
    for r in &transcript.rounds {
        if r.bob_mode == Some(BobMode::Key) && r.sift_decision == SiftDecision::Kept {
            let pair = (r.alice_basis as usize - 1) * 2 + (r.bob_basis as usize - 1);
            counts[pair][r.alice_value as usize * d + r.bob_outcome as usize] += 1;
        }
    }
    let total: usize = counts.iter().flatten().sum();
    if total == 0 {
        return Err(QkdError::InvalidParameter(
            "transcript has no key rounds".into(),
        ));
    }
    let mut info = 0.0;
    for cell in &counts {
        let n: usize = cell.iter().sum();
        if n == 0 {
            continue;
        }
        let n = n as f64;
        let joint: Vec<f64> = cell.iter().map(|&c| c as f64 / n).collect();
        let alice: Vec<f64> = (0..d)
            .map(|i| joint[i * d..(i + 1) * d].iter().sum())
            .collect();
        let bob: Vec<f64> = (0..d)
            .map(|j| (0..d).map(|i| joint[i * d + j]).sum())
            .collect();
        let mi = entropy_bits(&alice) + entropy_bits(&bob) - entropy_bits(&joint);
        info += n / total as f64 * mi;
    }
    Ok(info)
}
