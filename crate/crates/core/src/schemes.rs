//! Constellation designers: the K-means pipeline and the three baselines.
//!
//! All designers work on the transmitter's view of the channel
//! ([`ChannelRealization::design_channel`]), so imperfect CSI affects every
//! scheme alike.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_and_select, CentroidTrace, ClusterState, SelectedConstellation};
use crate::constellation::{
    build_effective_symbols, enumerate_patterns_capped, EffectiveSymbol, PhaseRule, Reflection,
};
use crate::error::{Error, Result};
use crate::graycode::{
    assign_gray_labels, assign_natural_labels, gray, order_chain, total_pairwise_distance,
    BitLabel, LabeledConstellation,
};
use crate::rng::Stream;
use crate::sysmodel::{ChannelRealization, SystemConfig};

/// Anything that turns a channel realization into a labelled constellation.
pub trait Designer: Sync {
    fn design(
        &self,
        ch: &ChannelRealization,
        cfg: &SystemConfig,
        rng: &mut Stream,
    ) -> Result<LabeledConstellation>;
}

impl<F> Designer for F
where
    F: Fn(&ChannelRealization, &SystemConfig, &mut Stream) -> Result<LabeledConstellation> + Sync,
{
    fn design(
        &self,
        ch: &ChannelRealization,
        cfg: &SystemConfig,
        rng: &mut Stream,
    ) -> Result<LabeledConstellation> {
        self(ch, cfg, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeId {
    Proposed,
    ProposedNoSym,
    ProposedNoGray,
    SchemeA,
    SchemeB,
    SchemeC,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        SchemeId::Proposed,
        SchemeId::ProposedNoSym,
        SchemeId::ProposedNoGray,
        SchemeId::SchemeA,
        SchemeId::SchemeB,
        SchemeId::SchemeC,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            SchemeId::Proposed => "proposed",
            SchemeId::ProposedNoSym => "proposed-no-sym",
            SchemeId::ProposedNoGray => "proposed-no-gray",
            SchemeId::SchemeA => "scheme-a",
            SchemeId::SchemeB => "scheme-b",
            SchemeId::SchemeC => "scheme-c",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.tag() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme '{s}'")))
    }
}

impl Designer for SchemeId {
    fn design(
        &self,
        ch: &ChannelRealization,
        cfg: &SystemConfig,
        rng: &mut Stream,
    ) -> Result<LabeledConstellation> {
        match self {
            SchemeId::Proposed => design_proposed(ch, cfg, ProposedOptions::default(), rng),
            SchemeId::ProposedNoSym => design_proposed(
                ch,
                cfg,
                ProposedOptions {
                    symmetric: false,
                    ..Default::default()
                },
                rng,
            ),
            SchemeId::ProposedNoGray => design_proposed(
                ch,
                cfg,
                ProposedOptions {
                    gray: false,
                    ..Default::default()
                },
                rng,
            ),
            SchemeId::SchemeA => {
                let symbols = plain_symbols(ch, cfg, rng)?;
                design_scheme_a(&symbols, cfg.n_points, rng)
            }
            SchemeId::SchemeB => design_scheme_b(ch, cfg),
            SchemeId::SchemeC => {
                let symbols = plain_symbols(ch, cfg, rng)?;
                design_scheme_c(&symbols, cfg.n_points, rng)
            }
        }
    }
}

/// Variant switches for the K-means designer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProposedOptions {
    /// Pair antipodal patterns with `θ` and `θ + π`; otherwise every symbol
    /// draws its own phase.
    pub symmetric: bool,
    /// Chain-ordered Gray labels; otherwise natural binary in selection order.
    pub gray: bool,
}

impl Default for ProposedOptions {
    fn default() -> Self {
        ProposedOptions {
            symmetric: true,
            gray: true,
        }
    }
}

/// Everything the K-means designer produced, for dumps and plots.
#[derive(Debug, Clone)]
pub struct ProposedDesign {
    /// All `R` effective symbols in gain-sorted order.
    pub symbols: Vec<EffectiveSymbol>,
    pub clusters: ClusterState,
    pub selected: SelectedConstellation,
    pub constellation: LabeledConstellation,
}

/// Effective symbols with `x_r = 1`, i.e. without transmit-phase design.
pub fn plain_symbols(
    ch: &ChannelRealization,
    cfg: &SystemConfig,
    rng: &mut Stream,
) -> Result<Vec<EffectiveSymbol>> {
    let patterns = enumerate_patterns_capped(cfg.phase_levels, cfg.n_elements, cfg.pattern_cap)?;
    build_effective_symbols(&patterns, ch.design_channel(), PhaseRule::Unrotated, rng)
}

pub fn design_proposed(
    ch: &ChannelRealization,
    cfg: &SystemConfig,
    opts: ProposedOptions,
    rng: &mut Stream,
) -> Result<LabeledConstellation> {
    design_proposed_detailed(ch, cfg, opts, rng, None).map(|d| d.constellation)
}

/// Symbols → K-means → per-cluster selection → chain + Gray labels.
///
/// With `cfg.kmeans_restarts > 1` the clustering is repeated from fresh
/// random seeds and the selection with the largest total pairwise distance
/// wins (first one on ties). A trace, if requested, covers the winning run.
pub fn design_proposed_detailed(
    ch: &ChannelRealization,
    cfg: &SystemConfig,
    opts: ProposedOptions,
    rng: &mut Stream,
    trace: Option<&mut CentroidTrace>,
) -> Result<ProposedDesign> {
    cfg.validate()?;
    let patterns = enumerate_patterns_capped(cfg.phase_levels, cfg.n_elements, cfg.pattern_cap)?;
    let rule = if opts.symmetric {
        PhaseRule::Symmetric
    } else {
        PhaseRule::Independent
    };
    let symbols = build_effective_symbols(&patterns, ch.design_channel(), rule, rng)?;

    let mut best: Option<(f64, SelectedConstellation, ClusterState, CentroidTrace)> = None;
    for _ in 0..cfg.kmeans_restarts {
        let mut run_trace = CentroidTrace::default();
        let (selected, state) = cluster_and_select(
            &symbols,
            cfg.n_points,
            cfg.max_kmeans_iters,
            rng,
            trace.as_ref().map(|_| &mut run_trace),
        )?;
        let spread = total_pairwise_distance(&selected.points());
        if best.as_ref().is_none_or(|b| spread > b.0) {
            best = Some((spread, selected, state, run_trace));
        }
    }
    let (_, selected, clusters, run_trace) = best.expect("at least one restart");
    if let Some(t) = trace {
        *t = run_trace;
    }

    let bits = cfg.n_bits();
    let constellation = if opts.gray {
        assign_gray_labels(order_chain(&selected.members, rng), bits)?
    } else {
        assign_natural_labels(selected.members.clone(), bits)?
    };
    Ok(ProposedDesign {
        symbols,
        clusters,
        selected,
        constellation,
    })
}

fn same_point(a: Complex64, b: Complex64) -> bool {
    a == b
}

/// Greedy sum-distance maximization: start from the farthest pair, then keep
/// adding the symbol with the largest summed distance to the chosen set.
/// Symbols that coincide with an already chosen point are skipped while any
/// other candidate remains. Labels come from the Gray chain.
pub fn design_scheme_a(
    symbols: &[EffectiveSymbol],
    n_points: usize,
    rng: &mut Stream,
) -> Result<LabeledConstellation> {
    let chosen = scheme_a_select(symbols, n_points)?;
    let bits = n_points.trailing_zeros();
    assign_gray_labels(order_chain(&chosen, rng), bits)
}

pub fn scheme_a_select(
    symbols: &[EffectiveSymbol],
    n_points: usize,
) -> Result<Vec<EffectiveSymbol>> {
    let r = symbols.len();
    if r < n_points || n_points == 0 {
        return Err(Error::NotEnoughPoints {
            needed: n_points,
            available: r,
        });
    }
    if n_points == 1 {
        return Ok(vec![symbols[0]]);
    }
    let mut first = (0, 1, f64::NEG_INFINITY);
    for i in 0..r {
        for j in i + 1..r {
            let d = (symbols[i].point - symbols[j].point).norm();
            if d > first.2 {
                first = (i, j, d);
            }
        }
    }
    let mut taken = vec![false; r];
    let mut chosen = vec![first.0, first.1];
    taken[first.0] = true;
    taken[first.1] = true;
    // running summed distance to the chosen set
    let mut score: Vec<f64> = symbols
        .iter()
        .map(|s| {
            (s.point - symbols[first.0].point).norm() + (s.point - symbols[first.1].point).norm()
        })
        .collect();
    while chosen.len() < n_points {
        let duplicate = |k: usize| {
            chosen
                .iter()
                .any(|&c| same_point(symbols[k].point, symbols[c].point))
        };
        let pick = |allow_dup: bool| {
            let mut best: Option<usize> = None;
            for k in 0..r {
                if taken[k] || (!allow_dup && duplicate(k)) {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) => {
                        score[k] > score[b]
                            || (score[k] == score[b]
                                && symbols[k].reflection < symbols[b].reflection)
                    }
                };
                if better {
                    best = Some(k);
                }
            }
            best
        };
        let k = pick(false).or_else(|| pick(true)).expect("r >= n_points");
        taken[k] = true;
        chosen.push(k);
        for (s, sym) in score.iter_mut().zip(symbols) {
            *s += (sym.point - symbols[k].point).norm();
        }
    }
    Ok(chosen.into_iter().map(|k| symbols[k]).collect())
}

/// Single active element plus BPSK: the first `2^(b-1)` elements each carry
/// `±||z_n||`. Labels are the Gray code of the element index followed by the
/// BPSK bit (`0` for `+1`).
pub fn design_scheme_b(
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> Result<LabeledConstellation> {
    let bits = cfg.n_bits();
    if bits == 0 {
        return Err(Error::InvalidConfig(
            "scheme-b needs at least one bit".into(),
        ));
    }
    let active = 1usize << (bits - 1);
    let z = ch.design_channel();
    if active > z.nrows() {
        return Err(Error::InvalidConfig(format!(
            "scheme-b needs {active} RIS elements for {bits} bits, only {} available",
            z.nrows()
        )));
    }
    let mut points = Vec::with_capacity(2 * active);
    let mut labels = Vec::with_capacity(2 * active);
    for n in 0..active {
        let gain = z.row(n).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for (bpsk_bit, sign, phase) in [(0u32, 1.0, 0.0), (1, -1.0, std::f64::consts::PI)] {
            points.push(EffectiveSymbol {
                reflection: Reflection::SingleElement(n),
                point: Complex64::new(sign * gain, 0.0),
                tx_phase: phase,
                gain,
            });
            labels.push(BitLabel::new(gray(n as u32) << 1 | bpsk_bit, bits));
        }
    }
    LabeledConstellation::new(points, labels, bits)
}

/// `L` symbols drawn uniformly without replacement, natural labels in draw order.
pub fn design_scheme_c(
    symbols: &[EffectiveSymbol],
    n_points: usize,
    rng: &mut Stream,
) -> Result<LabeledConstellation> {
    if symbols.len() < n_points {
        return Err(Error::NotEnoughPoints {
            needed: n_points,
            available: symbols.len(),
        });
    }
    let picked = index::sample(rng, symbols.len(), n_points)
        .into_iter()
        .map(|i| symbols[i])
        .collect();
    assign_natural_labels(picked, n_points.trailing_zeros())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::sysmodel::generate_channel;
    use ndarray::{Array1, Array2};
    use std::collections::HashSet;

    fn real_syms(v: &[f64]) -> Vec<EffectiveSymbol> {
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

    fn reals(v: &[EffectiveSymbol]) -> Vec<f64> {
        let mut r: Vec<f64> = v.iter().map(|s| s.point.re).collect();
        r.sort_by(f64::total_cmp);
        r
    }

    #[test]
    fn tags_round_trip() {
        for id in SchemeId::ALL {
            assert_eq!(id.tag().parse::<SchemeId>().unwrap(), id);
        }
        assert!("scheme-d".parse::<SchemeId>().is_err());
    }

    #[test]
    fn scheme_a_hand_cases() {
        let s = real_syms(&[0., 1., 2., 10.]);
        assert_eq!(reals(&scheme_a_select(&s, 2).unwrap()), vec![0., 10.]);
        assert_eq!(
            reals(&scheme_a_select(&s, 4).unwrap()),
            vec![0., 1., 2., 10.]
        );
        assert!(scheme_a_select(&s, 8).is_err());
    }

    #[test]
    fn scheme_a_skips_coincident_points() {
        let s = real_syms(&[5., 5., 1., 1., 3., 3.]);
        assert_eq!(reals(&scheme_a_select(&s, 3).unwrap()), vec![1., 3., 5.]);
        // falls back to duplicates only once distinct values run out
        assert_eq!(reals(&scheme_a_select(&s, 4).unwrap()).len(), 4);
    }

    #[test]
    fn scheme_b_layout() {
        let g = Array2::from_shape_fn((4, 1), |(n, _)| Complex64::new(n as f64 + 1.0, 0.0));
        let h = Array1::from_elem(4, Complex64::new(1.0, 0.0));
        let ch = ChannelRealization::from_parts(g, h).unwrap();
        let cfg = SystemConfig::new(4, 1, 2, 4).unwrap();
        let c = design_scheme_b(&ch, &cfg).unwrap();
        assert_eq!(reals(&c.points), vec![-2., -1., 1., 2.]);
        let labels: Vec<String> = c.labels.iter().map(|l| l.to_string()).collect();
        assert_eq!(labels, ["00", "01", "10", "11"]);

        let cfg8 = SystemConfig::new(7, 3, 2, 8).unwrap();
        let ch8 = generate_channel(&cfg8, &mut stream(1, "channel", 0));
        let c8 = design_scheme_b(&ch8, &cfg8).unwrap();
        assert_eq!(c8.len(), 8);
        let elems: HashSet<_> = c8.points.iter().map(|s| s.reflection).collect();
        assert_eq!(elems.len(), 4);

        let small = SystemConfig::new(3, 1, 2, 8).unwrap();
        let ch3 = generate_channel(&small, &mut stream(1, "channel", 0));
        assert!(design_scheme_b(&ch3, &small).is_err());
    }

    #[test]
    fn scheme_b_equal_rows_collapse() {
        let g = Array2::from_elem((2, 2), Complex64::new(1.0, 0.0));
        let h = Array1::from_elem(2, Complex64::new(1.0, 0.0));
        let ch = ChannelRealization::from_parts(g, h).unwrap();
        let cfg = SystemConfig::new(2, 2, 2, 4).unwrap();
        let c = design_scheme_b(&ch, &cfg).unwrap();
        assert_eq!(c.points[0].point, c.points[2].point);
        assert_eq!(c.points[1].point, c.points[3].point);
    }

    #[test]
    fn scheme_c_determinism_and_membership() {
        let s = real_syms(&[0., 1., 2., 3., 4., 5., 6., 7.]);
        let a = design_scheme_c(&s, 4, &mut stream(3, "design", 0)).unwrap();
        let b = design_scheme_c(&s, 4, &mut stream(3, "design", 0)).unwrap();
        assert_eq!(a, b);
        let ids: HashSet<_> = a.points.iter().map(|p| p.reflection).collect();
        assert_eq!(ids.len(), 4);
    }

    #[test]
    fn scheme_c_is_uniform() {
        let s = real_syms(&[0., 1., 2., 3., 4., 5., 6., 7.]);
        let mut counts = [0usize; 8];
        for t in 0..1000 {
            let c = design_scheme_c(&s, 4, &mut stream(11, "design", t)).unwrap();
            for p in &c.points {
                counts[p.reflection.id()] += 1;
            }
        }
        for c in counts {
            let f = c as f64 / 1000.0;
            assert!((f - 0.5).abs() < 0.05, "frequency {f}");
        }
    }

    #[test]
    fn proposed_pipeline_small_setup() {
        let cfg = SystemConfig::new(5, 3, 2, 4).unwrap();
        for seed in 0..20 {
            let ch = generate_channel(&cfg, &mut stream(seed, "channel", 0));
            let c = SchemeId::Proposed
                .design(&ch, &cfg, &mut stream(seed, "design", 0))
                .unwrap();
            assert_eq!(c.len(), 4);
            for w in c.labels.windows(2) {
                assert_eq!(w[0].hamming(w[1]), 1);
            }
            let ids: HashSet<usize> = c.points.iter().map(|p| p.pattern_id().unwrap()).collect();
            assert_eq!(ids.len(), 4);
            assert!(ids.iter().all(|&i| i < 32));
        }
    }

    #[test]
    fn every_scheme_returns_l_points_with_bijective_labels() {
        let mut cfg = SystemConfig::new(7, 3, 2, 8).unwrap();
        cfg.kmeans_restarts = 2;
        let ch = generate_channel(&cfg, &mut stream(5, "channel", 0));
        for id in SchemeId::ALL {
            let c = id.design(&ch, &cfg, &mut stream(5, "design", 0)).unwrap();
            assert_eq!(c.len(), 8, "{id}");
            let labels: HashSet<_> = c.labels.iter().map(|l| l.value).collect();
            assert_eq!(labels.len(), 8, "{id}");
        }
    }

    #[test]
    fn restarts_never_reduce_spread() {
        let mut cfg = SystemConfig::new(6, 2, 2, 8).unwrap();
        let ch = generate_channel(&cfg, &mut stream(9, "channel", 0));
        let one = design_proposed_detailed(
            &ch,
            &cfg,
            Default::default(),
            &mut stream(9, "design", 0),
            None,
        )
        .unwrap();
        cfg.kmeans_restarts = 5;
        let five = design_proposed_detailed(
            &ch,
            &cfg,
            Default::default(),
            &mut stream(9, "design", 0),
            None,
        )
        .unwrap();
        // same θ draws, and the first restart reproduces the single run
        assert_eq!(one.symbols, five.symbols);
        assert!(
            total_pairwise_distance(&five.selected.points())
                >= total_pairwise_distance(&one.selected.points())
        );
    }
}
