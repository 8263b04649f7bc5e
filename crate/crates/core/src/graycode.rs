//! Greedy nearest-neighbour chain ordering and bit labelling.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Serialize, Serializer};

use crate::constellation::EffectiveSymbol;
use crate::error::{Error, Result};

/// A `width`-bit label; bit `width-1` is written first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitLabel {
    pub value: u32,
    pub width: u32,
}

impl BitLabel {
    pub fn new(value: u32, width: u32) -> Self {
        debug_assert!(width >= 32 || value < (1 << width));
        BitLabel { value, width }
    }

    pub fn hamming(self, other: BitLabel) -> u32 {
        (self.value ^ other.value).count_ones()
    }
}

impl fmt::Display for BitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in (0..self.width).rev() {
            f.write_str(if self.value >> bit & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for BitLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Binary-reflected Gray code of `i`.
pub fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

/// Constellation points with their bit labels. `labels[i]` belongs to
/// `points[i]`; the label-to-index map is kept for the transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledConstellation {
    pub points: Vec<EffectiveSymbol>,
    pub labels: Vec<BitLabel>,
    by_label: Vec<usize>,
}

impl LabeledConstellation {
    /// Pairs points with labels; the labels must be a permutation of all
    /// `bits`-bit values.
    pub fn new(points: Vec<EffectiveSymbol>, labels: Vec<BitLabel>, bits: u32) -> Result<Self> {
        let size = check_size(points.len(), bits)?;
        if labels.len() != size {
            return Err(Error::LabelLength {
                expected: size,
                bits,
                got: labels.len(),
            });
        }
        let mut by_label = vec![usize::MAX; size];
        for (i, l) in labels.iter().enumerate() {
            if l.width != bits
                || l.value as usize >= size
                || by_label[l.value as usize] != usize::MAX
            {
                return Err(Error::InvalidConfig(format!(
                    "labels are not a permutation of all {bits}-bit strings"
                )));
            }
            by_label[l.value as usize] = i;
        }
        Ok(LabeledConstellation {
            points,
            labels,
            by_label,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits(&self) -> u32 {
        self.len().trailing_zeros()
    }

    /// Index of the point carrying `label`.
    pub fn index_of(&self, label: u32) -> usize {
        self.by_label[label as usize]
    }

    pub fn complex_points(&self) -> Vec<Complex64> {
        self.points.iter().map(|s| s.point).collect()
    }

    /// Sum of `|g_i - g_j|` over unordered pairs.
    pub fn total_pairwise_distance(&self) -> f64 {
        total_pairwise_distance(&self.complex_points())
    }
}

pub fn total_pairwise_distance(points: &[Complex64]) -> f64 {
    let mut total = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            total += (a - b).norm();
        }
    }
    total
}

fn check_size(len: usize, bits: u32) -> Result<usize> {
    if bits == 0 || bits >= usize::BITS {
        return Err(Error::InvalidConfig(format!(
            "labels need at least one bit, got {bits}"
        )));
    }
    let size = 1usize << bits;
    if len != size {
        return Err(Error::LabelLength {
            expected: size,
            bits,
            got: len,
        });
    }
    Ok(size)
}

/// Greedy nearest-neighbour chain from a uniformly random start.
pub fn order_chain<R: Rng + ?Sized>(
    selected: &[EffectiveSymbol],
    rng: &mut R,
) -> Vec<EffectiveSymbol> {
    if selected.is_empty() {
        return Vec::new();
    }
    let start = rng.random_range(0..selected.len());
    order_chain_from(selected, start)
}

/// Greedy chain: from the current point, step to the nearest unvisited one
/// (ties to the lowest pattern id).
pub fn order_chain_from(selected: &[EffectiveSymbol], start: usize) -> Vec<EffectiveSymbol> {
    let mut remaining: Vec<EffectiveSymbol> = selected.to_vec();
    let mut chain = Vec::with_capacity(selected.len());
    chain.push(remaining.remove(start));
    while !remaining.is_empty() {
        let cur = chain.last().expect("non-empty").point;
        let mut best = 0;
        for (i, s) in remaining.iter().enumerate().skip(1) {
            let d = (s.point - cur).norm();
            let bd = (remaining[best].point - cur).norm();
            if d < bd || (d == bd && s.reflection < remaining[best].reflection) {
                best = i;
            }
        }
        chain.push(remaining.remove(best));
    }
    chain
}

/// Position `i` of the chain gets the Gray code of `i`.
pub fn assign_gray_labels(chain: Vec<EffectiveSymbol>, bits: u32) -> Result<LabeledConstellation> {
    let size = check_size(chain.len(), bits)?;
    let labels = (0..size as u32)
        .map(|i| BitLabel::new(gray(i), bits))
        .collect();
    LabeledConstellation::new(chain, labels, bits)
}

/// Position `i` gets plain binary `i`.
pub fn assign_natural_labels(
    points: Vec<EffectiveSymbol>,
    bits: u32,
) -> Result<LabeledConstellation> {
    let size = check_size(points.len(), bits)?;
    let labels = (0..size as u32).map(|i| BitLabel::new(i, bits)).collect();
    LabeledConstellation::new(points, labels, bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::Reflection;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn syms(v: &[f64]) -> Vec<EffectiveSymbol> {
        v.iter()
            .enumerate()
            .map(|(i, &x)| EffectiveSymbol {
                reflection: Reflection::Pattern(i),
                point: Complex64::new(x, 0.0),
                tx_phase: 0.0,
                gain: x.abs(),
            })
            .collect()
    }

    fn reals(c: &[EffectiveSymbol]) -> Vec<f64> {
        c.iter().map(|s| s.point.re).collect()
    }

    #[test]
    fn chain_hand_traces() {
        assert_eq!(
            reals(&order_chain_from(&syms(&[0., 3., 1., 7.]), 0)),
            vec![0., 1., 3., 7.]
        );
        assert_eq!(
            reals(&order_chain_from(&syms(&[5., -40.]), 1)),
            vec![-40., 5.]
        );
        assert_eq!(
            reals(&order_chain_from(&syms(&[2., 0., 3., 1., 4.]), 4)),
            vec![4., 3., 2., 1., 0.]
        );
    }

    #[test]
    fn chain_tie_prefers_lower_pattern_id() {
        // from 0, both -1 (id 1) and 1 (id 2) are at distance 1
        assert_eq!(
            reals(&order_chain_from(&syms(&[0., -1., 1.]), 0)),
            vec![0., -1., 1.]
        );
    }

    #[test]
    fn gray_sequences() {
        let l = assign_gray_labels(syms(&[0., 1., 2., 3.]), 2).unwrap();
        let s: Vec<String> = l.labels.iter().map(|b| b.to_string()).collect();
        assert_eq!(s, ["00", "01", "11", "10"]);
        let l = assign_gray_labels(syms(&[0.; 8]), 3).unwrap();
        assert_eq!(l.labels[3].to_string(), "010");
        assert_eq!(l.labels[4].to_string(), "110");
        assert_eq!(l.labels[3].hamming(l.labels[4]), 1);
        let l = assign_gray_labels(syms(&[0., 1.]), 1).unwrap();
        assert_eq!(
            l.labels.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
            ["0", "1"]
        );
    }

    #[test]
    fn natural_labels() {
        let l = assign_natural_labels(syms(&[0., 1., 2., 3.]), 2).unwrap();
        let s: Vec<String> = l.labels.iter().map(|b| b.to_string()).collect();
        assert_eq!(s, ["00", "01", "10", "11"]);
        assert_eq!(l.labels[1].hamming(l.labels[2]), 2);
        assert!(assign_natural_labels(syms(&[0.]), 0).is_err());
        assert!(matches!(
            assign_gray_labels(syms(&[0., 1., 2.]), 2),
            Err(Error::LabelLength { .. })
        ));
    }

    #[test]
    fn label_map_is_invertible() {
        let l = assign_gray_labels(syms(&[0.; 16]), 4).unwrap();
        for (i, lab) in l.labels.iter().enumerate() {
            assert_eq!(l.index_of(lab.value), i);
        }
        let dup = vec![BitLabel::new(0, 1), BitLabel::new(0, 1)];
        assert!(LabeledConstellation::new(syms(&[0., 1.]), dup, 1).is_err());
    }

    proptest! {
        #[test]
        fn chain_is_permutation_with_gray_adjacency(
            v in (1u32..6).prop_flat_map(|b| {
                prop::collection::vec((-9.0f64..9.0, -9.0f64..9.0), 1usize << b)
            }),
            seed in any::<u64>(),
        ) {
            let pts: Vec<EffectiveSymbol> = v.iter().enumerate().map(|(i, &(a, b))| EffectiveSymbol {
                reflection: Reflection::Pattern(i),
                point: Complex64::new(a, b),
                tx_phase: 0.0,
                gain: 0.0,
            }).collect();
            let chain = order_chain(&pts, &mut stream(seed, "design", 0));
            let mut ids: Vec<_> = chain.iter().map(|s| s.reflection).collect();
            ids.sort();
            prop_assert_eq!(ids, pts.iter().map(|s| s.reflection).collect::<Vec<_>>());
            let bits = pts.len().trailing_zeros();
            let lab = assign_gray_labels(chain, bits).unwrap();
            for w in lab.labels.windows(2) {
                prop_assert_eq!(w[0].hamming(w[1]), 1);
            }
        }
    }
}
