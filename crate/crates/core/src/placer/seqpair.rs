use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PlacerError;
use crate::geom::Point;

/// Two permutations of macro indices. `a` precedes `b` in both sequences
/// means `a` is left of `b`; `a` precedes `b` only in `pos` means `a` is above `b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SequencePair {
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

impl SequencePair {
    pub fn identity(n: usize) -> Self {
        Self {
            pos: (0..n).collect(),
            neg: (0..n).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut sp = Self::identity(n);
        for seq in [&mut sp.pos, &mut sp.neg] {
            for i in (1..n).rev() {
                seq.swap(i, rng.gen_range(0..=i));
            }
        }
        sp
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    pub fn validate(&self) -> Result<(), PlacerError> {
        let n = self.pos.len();
        if self.neg.len() != n {
            return Err(PlacerError::BadPermutation(format!(
                "sequence lengths differ ({} vs {})",
                n,
                self.neg.len()
            )));
        }
        for (name, seq) in [("pos", &self.pos), ("neg", &self.neg)] {
            let mut seen = vec![false; n];
            for &v in seq {
                if v >= n || std::mem::replace(&mut seen[v], true) {
                    return Err(PlacerError::BadPermutation(format!(
                        "{name} is not a permutation of 0..{n}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn inverse(seq: &[usize]) -> Vec<usize> {
        let mut inv = vec![0; seq.len()];
        for (i, &v) in seq.iter().enumerate() {
            inv[v] = i;
        }
        inv
    }
}

/// Packs macros to the lower left via longest paths in the horizontal and
/// vertical constraint graphs implied by the sequence pair.
pub fn evaluate_sequence_pair(
    sp: &SequencePair,
    sizes: &[(f64, f64)],
) -> Result<Vec<Point>, PlacerError> {
    sp.validate()?;
    if sizes.len() != sp.len() {
        return Err(PlacerError::BadPermutation(format!(
            "{} sizes for {} macros",
            sizes.len(),
            sp.len()
        )));
    }
    Ok(decode(sp, sizes))
}

/// Unchecked decode; `sp` must be valid for `sizes`.
pub(crate) fn decode(sp: &SequencePair, sizes: &[(f64, f64)]) -> Vec<Point> {
    let n = sp.len();
    let pos_at = SequencePair::inverse(&sp.pos);
    let neg_at = SequencePair::inverse(&sp.neg);
    let mut out = vec![Point::default(); n];

    // Left-of: a before b in both. Visiting in pos order settles all predecessors.
    for (i, &b) in sp.pos.iter().enumerate() {
        let mut x: f64 = 0.0;
        for &a in &sp.pos[..i] {
            if neg_at[a] < neg_at[b] {
                x = x.max(out[a].x + sizes[a].0);
            }
        }
        out[b].x = x;
    }
    // Below: b after a in pos but before a in neg. Visit in neg order.
    for (i, &a) in sp.neg.iter().enumerate() {
        let mut y: f64 = 0.0;
        for &b in &sp.neg[..i] {
            if pos_at[b] > pos_at[a] {
                y = y.max(out[b].y + sizes[b].1);
            }
        }
        out[a].y = y;
    }
    out
}
