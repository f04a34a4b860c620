//! Bit-indexed beam groups and the detection-pattern decoder.
//!
//! Beam `i` belongs to group `k` (0-based) iff bit `k` of `i` is set, so the
//! `log2(N)` groups act like the parity pattern of a Hamming code: the set of
//! groups in which the user is detected spells out the beam index in binary.
//! Beam 0 belongs to no group and is returned when nothing is detected.

use crate::error::{Error, Result};

/// The `log2(N)` beam groups for an `N`-beam codebook.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupDesign {
    n_beams: usize,
    groups: Vec<Vec<usize>>,
}

/// Per-group detection verdicts, index-aligned with [`GroupDesign::groups`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionVector(pub Vec<bool>);

/// True iff `n` is a power of two and at least 2.
pub fn is_valid_beam_count(n: usize) -> bool {
    n >= 2 && n.is_power_of_two()
}

/// Bit test: does beam `beam` belong to group `group` (0-based)?
#[inline]
pub fn membership(beam: usize, group: usize) -> bool {
    (beam >> group) & 1 == 1
}

/// Decodes a verdict vector to a beam index: sum of 2^k over detected groups.
///
/// The all-false vector decodes to beam 0. Every vector decodes; an
/// inconsistent pattern simply names the beam its bits spell.
#[inline]
pub fn decode(verdicts: &[bool]) -> usize {
    verdicts
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &v)| acc | ((v as usize) << k))
}

impl GroupDesign {
    /// Builds the groups for `n_beams` (power of two, >= 2).
    pub fn build(n_beams: usize) -> Result<Self> {
        if !is_valid_beam_count(n_beams) {
            return Err(Error::NotPowerOfTwo(n_beams));
        }
        let d = n_beams.trailing_zeros() as usize;
        let groups = (0..d)
            .map(|k| (0..n_beams).filter(|&i| membership(i, k)).collect())
            .collect();
        Ok(Self { n_beams, groups })
    }

    pub fn n_beams(&self) -> usize {
        self.n_beams
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Members of group `k` (0-based), ascending.
    pub fn group(&self, k: usize) -> &[usize] {
        &self.groups[k]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Verdicts a noise-free detector would produce for a user in `beam`.
    pub fn encode(&self, beam: usize) -> Result<DetectionVector> {
        if beam >= self.n_beams {
            return Err(Error::BeamOutOfRange {
                index: beam,
                n_beams: self.n_beams,
            });
        }
        Ok(DetectionVector(
            (0..self.n_groups()).map(|k| membership(beam, k)).collect(),
        ))
    }

    /// Decodes verdicts to the selected beam index.
    pub fn decode(&self, v: &DetectionVector) -> usize {
        debug_assert_eq!(v.0.len(), self.n_groups());
        decode(&v.0)
    }
}
