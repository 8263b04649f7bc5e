//! Reflection patterns, MRT composite gains and the effective symbol set.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sysmodel::DEFAULT_PATTERN_CAP;

/// `exp(j 2π k / B)`, exact at quarter turns so that `B = 2` and `B = 4`
/// patterns negate bit-exactly.
pub fn unit_root(k: usize, phase_levels: usize) -> Complex64 {
    let k = k % phase_levels;
    if (4 * k).is_multiple_of(phase_levels) {
        match 4 * k / phase_levels {
            0 => return Complex64::new(1.0, 0.0),
            1 => return Complex64::new(0.0, 1.0),
            2 => return Complex64::new(-1.0, 0.0),
            _ => return Complex64::new(0.0, -1.0),
        }
    }
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / phase_levels as f64)
}

/// One RIS configuration: a phase index per element.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionPattern {
    pub id: usize,
    pub phase_levels: usize,
    pub phase_indices: Vec<usize>,
    pub coefficients: Vec<Complex64>,
}

impl ReflectionPattern {
    /// Decodes a pattern id; element 0 is the least significant base-`B` digit.
    pub fn from_id(id: usize, phase_levels: usize, n_elements: usize) -> Self {
        let mut rest = id;
        let phase_indices: Vec<usize> = (0..n_elements)
            .map(|_| {
                let d = rest % phase_levels;
                rest /= phase_levels;
                d
            })
            .collect();
        let coefficients = phase_indices
            .iter()
            .map(|&k| unit_root(k, phase_levels))
            .collect();
        ReflectionPattern {
            id,
            phase_levels,
            phase_indices,
            coefficients,
        }
    }

    /// Phase indices as a base-`B` digit string, element 0 first.
    pub fn digit_string(&self) -> String {
        phase_digit_string(&self.phase_indices, self.phase_levels)
    }
}

pub(crate) fn phase_digit_string(indices: &[usize], phase_levels: usize) -> String {
    if phase_levels <= 36 {
        indices
            .iter()
            .map(|&d| char::from_digit(d as u32, 36).expect("digit < 36"))
            .collect()
    } else {
        indices
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(":")
    }
}

pub fn enumerate_patterns(
    phase_levels: usize,
    n_elements: usize,
) -> Result<Vec<ReflectionPattern>> {
    enumerate_patterns_capped(phase_levels, n_elements, DEFAULT_PATTERN_CAP)
}

/// All `B^N` patterns in base-`B` counting order.
pub fn enumerate_patterns_capped(
    phase_levels: usize,
    n_elements: usize,
    cap: usize,
) -> Result<Vec<ReflectionPattern>> {
    if phase_levels < 2 {
        return Err(Error::InvalidConfig(format!(
            "phase levels must be >= 2, got {phase_levels}"
        )));
    }
    if n_elements == 0 {
        return Err(Error::InvalidConfig("need at least one RIS element".into()));
    }
    let total = u32::try_from(n_elements)
        .ok()
        .and_then(|n| phase_levels.checked_pow(n))
        .filter(|&r| r <= cap)
        .ok_or(Error::TooManyPatterns {
            phase_levels,
            n_elements,
            cap,
        })?;
    Ok((0..total)
        .map(|id| ReflectionPattern::from_id(id, phase_levels, n_elements))
        .collect())
}

/// Which RIS configuration produced a symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Reflection {
    /// A unit-modulus pattern from the `B^N` set.
    Pattern(usize),
    /// On/off keying: only this element reflects, all others are off.
    SingleElement(usize),
}

impl Reflection {
    pub fn coefficients(&self, phase_levels: usize, n_elements: usize) -> Vec<Complex64> {
        match *self {
            Reflection::Pattern(id) => {
                ReflectionPattern::from_id(id, phase_levels, n_elements).coefficients
            }
            Reflection::SingleElement(n) => {
                let mut c = vec![Complex64::new(0.0, 0.0); n_elements];
                c[n] = Complex64::new(1.0, 0.0);
                c
            }
        }
    }

    /// Identifier written to constellation dumps (`pattern_id` column).
    pub fn id(&self) -> usize {
        match *self {
            Reflection::Pattern(id) | Reflection::SingleElement(id) => id,
        }
    }

    /// Pattern description written to constellation dumps.
    pub fn describe(&self, phase_levels: usize, n_elements: usize) -> String {
        match *self {
            Reflection::Pattern(id) => {
                ReflectionPattern::from_id(id, phase_levels, n_elements).digit_string()
            }
            Reflection::SingleElement(n) => format!("e{n}"),
        }
    }
}

/// One candidate constellation point `g_r = ξ_r^T Z w_r x_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSymbol {
    pub reflection: Reflection,
    pub point: Complex64,
    /// Phase of the transmit signal `x_r`, in `[0, 2π)`.
    pub tx_phase: f64,
    /// `||ξ_r^T Z||`, the magnitude delivered by MRT.
    pub gain: f64,
}

impl EffectiveSymbol {
    pub fn pattern_id(&self) -> Option<usize> {
        match self.reflection {
            Reflection::Pattern(id) => Some(id),
            Reflection::SingleElement(_) => None,
        }
    }
}

/// Row vector `ξ^T Z`.
pub fn composite_row(
    coefficients: &[Complex64],
    z: &Array2<Complex64>,
) -> Result<Array1<Complex64>> {
    if coefficients.len() != z.nrows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} reflection coefficients", z.nrows()),
            got: format!("{}", coefficients.len()),
        });
    }
    let mut row = Array1::zeros(z.ncols());
    for (xi, zrow) in coefficients.iter().zip(z.rows()) {
        row.zip_mut_with(&zrow, |acc, &zv| *acc += xi * zv);
    }
    Ok(row)
}

/// `||ξ^T Z||`, the composite channel magnitude seen through MRT.
pub fn effective_gain(pattern: &ReflectionPattern, z: &Array2<Complex64>) -> Result<f64> {
    Ok(norm(&composite_row(&pattern.coefficients, z)?))
}

fn norm(v: &Array1<Complex64>) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Composite `ξ^T Z w` over the true channel `z_true` when the MRT beam
/// `w = (ξ^T Ẑ)^H / ||ξ^T Ẑ||` was computed from `z_design`.
pub fn mrt_composite(
    coefficients: &[Complex64],
    z_true: &Array2<Complex64>,
    z_design: &Array2<Complex64>,
) -> Result<Complex64> {
    let h_true = composite_row(coefficients, z_true)?;
    let h_design = composite_row(coefficients, z_design)?;
    let scale = norm(&h_design);
    if scale == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(h_true
        .iter()
        .zip(h_design.iter())
        .map(|(t, d)| t * d.conj())
        .sum::<Complex64>()
        / scale)
}

/// How transmit phases `x_r` are assigned over the gain-sorted symbol list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseRule {
    /// Odd sorted positions draw `θ ~ U[0, π)`, each even position takes its
    /// predecessor's phase plus `π`.
    Symmetric,
    /// The symmetric rule with every drawn `θ` replaced by a constant.
    SymmetricFixed(f64),
    /// Every symbol draws its own `θ ~ U[0, π)`; no paired rotation.
    Independent,
    /// `x_r = 1` for every symbol: no transmit-phase design.
    Unrotated,
}

const PARALLEL_GAIN_THRESHOLD: usize = 1 << 12;

/// Evaluates all gains, sorts by descending gain (ties by ascending pattern id)
/// and assigns transmit phases per `rule`. The output is in sorted order.
pub fn build_effective_symbols<R: Rng + ?Sized>(
    patterns: &[ReflectionPattern],
    z: &Array2<Complex64>,
    rule: PhaseRule,
    rng: &mut R,
) -> Result<Vec<EffectiveSymbol>> {
    if patterns.is_empty() {
        return Err(Error::NotEnoughPoints {
            needed: 1,
            available: 0,
        });
    }
    let gains: Vec<f64> = if patterns.len() >= PARALLEL_GAIN_THRESHOLD {
        patterns
            .par_iter()
            .map(|p| effective_gain(p, z))
            .collect::<Result<_>>()?
    } else {
        patterns
            .iter()
            .map(|p| effective_gain(p, z))
            .collect::<Result<_>>()?
    };

    let mut order: Vec<usize> = (0..patterns.len()).collect();
    order.sort_by(|&a, &b| {
        gains[b]
            .total_cmp(&gains[a])
            .then(patterns[a].id.cmp(&patterns[b].id))
    });

    let mut out = Vec::with_capacity(order.len());
    let mut prev_phasor = Complex64::new(1.0, 0.0);
    let mut prev_theta = 0.0;
    for (pos, &idx) in order.iter().enumerate() {
        let gain = gains[idx];
        let (theta, phasor) = match rule {
            PhaseRule::Unrotated => (0.0, Complex64::new(1.0, 0.0)),
            PhaseRule::Independent => {
                let t = rng.random_range(0.0..PI);
                (t, Complex64::from_polar(1.0, t))
            }
            PhaseRule::Symmetric | PhaseRule::SymmetricFixed(_) if pos % 2 == 0 => {
                let t = match rule {
                    PhaseRule::SymmetricFixed(t) => t,
                    _ => rng.random_range(0.0..PI),
                };
                (t, Complex64::from_polar(1.0, t))
            }
            // second member of a pair: rotate the predecessor by π
            _ => (prev_theta + PI, -prev_phasor),
        };
        prev_theta = theta;
        prev_phasor = phasor;
        out.push(EffectiveSymbol {
            reflection: Reflection::Pattern(patterns[idx].id),
            point: phasor * gain,
            tx_phase: theta.rem_euclid(2.0 * PI),
            gain,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::sysmodel::{generate_channel, SystemConfig};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_by_two_binary_patterns() {
        let p = enumerate_patterns(2, 2).unwrap();
        let coeffs: Vec<Vec<Complex64>> = p.iter().map(|p| p.coefficients.clone()).collect();
        assert_eq!(
            coeffs,
            vec![
                vec![c(1., 0.), c(1., 0.)],
                vec![c(-1., 0.), c(1., 0.)],
                vec![c(1., 0.), c(-1., 0.)],
                vec![c(-1., 0.), c(-1., 0.)],
            ]
        );
    }

    #[test]
    fn counts_and_roots() {
        assert_eq!(enumerate_patterns(2, 7).unwrap().len(), 128);
        let p = enumerate_patterns(4, 1).unwrap();
        let roots: Vec<Complex64> = p.iter().map(|p| p.coefficients[0]).collect();
        assert_eq!(roots, vec![c(1., 0.), c(0., 1.), c(-1., 0.), c(0., -1.)]);
        for p in enumerate_patterns(3, 3).unwrap() {
            for x in &p.coefficients {
                assert!((x.norm() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn enumeration_rejects_bad_input() {
        assert!(enumerate_patterns(1, 3).is_err());
        assert!(enumerate_patterns(2, 0).is_err());
        assert!(matches!(
            enumerate_patterns_capped(2, 5, 16),
            Err(Error::TooManyPatterns { .. })
        ));
        assert!(enumerate_patterns(2, 200).is_err());
    }

    #[test]
    fn digit_string_is_element_zero_first() {
        let p = ReflectionPattern::from_id(6, 2, 4);
        assert_eq!(p.phase_indices, vec![0, 1, 1, 0]);
        assert_eq!(p.digit_string(), "0110");
    }

    #[test]
    fn hand_gains() {
        let z = Array2::from_shape_vec((2, 1), vec![c(1., 0.), c(1., 0.)]).unwrap();
        let p = enumerate_patterns(2, 2).unwrap();
        assert_eq!(effective_gain(&p[0], &z).unwrap(), 2.0);
        assert_eq!(effective_gain(&p[2], &z).unwrap(), 0.0);
        let z3 = Array2::<Complex64>::zeros((3, 1));
        assert!(effective_gain(&p[0], &z3).is_err());
    }

    #[test]
    fn gain_matches_direct_mrt_evaluation() {
        let cfg = SystemConfig::new(4, 3, 2, 4).unwrap();
        let ch = generate_channel(&cfg, &mut stream(5, "channel", 0));
        for p in enumerate_patterns(2, 4).unwrap() {
            // h^H = ξ^T Z, w = h / ||h||, composite = h^H w
            let mut hh = [c(0., 0.); 3];
            for n in 0..4 {
                for (m, acc) in hh.iter_mut().enumerate() {
                    *acc += p.coefficients[n] * ch.z_cascade[[n, m]];
                }
            }
            let hn = hh.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let comp: Complex64 = hh.iter().map(|x| x * x.conj() / hn).sum();
            let g = effective_gain(&p, &ch.z_cascade).unwrap();
            assert!((comp.re - g).abs() < 1e-12 && comp.im.abs() < 1e-12);
            let via = mrt_composite(&p.coefficients, &ch.z_cascade, &ch.z_cascade).unwrap();
            assert!((via - comp).norm() < 1e-12);
        }
    }

    fn symbols(rule: PhaseRule, seed: u64) -> Vec<EffectiveSymbol> {
        let cfg = SystemConfig::new(7, 3, 2, 8).unwrap();
        let ch = generate_channel(&cfg, &mut stream(seed, "channel", 0));
        let pats = enumerate_patterns(2, 7).unwrap();
        build_effective_symbols(&pats, &ch.z_cascade, rule, &mut stream(seed, "design", 0)).unwrap()
    }

    #[test]
    fn binary_patterns_form_antipodal_pairs() {
        let syms = symbols(PhaseRule::Symmetric, 3);
        assert_eq!(syms.len(), 128);
        let full = (1usize << 7) - 1;
        for pair in syms.chunks(2) {
            assert_eq!(pair[0].point, -pair[1].point);
            let (a, b) = (pair[0].pattern_id().unwrap(), pair[1].pattern_id().unwrap());
            assert_eq!(a ^ b, full, "pair is not a pattern and its negation");
        }
    }

    #[test]
    fn zero_theta_alternates_sign_on_real_axis() {
        let syms = symbols(PhaseRule::SymmetricFixed(0.0), 4);
        for (k, s) in syms.iter().enumerate() {
            assert_eq!(s.point.im, 0.0);
            if k % 2 == 1 {
                assert_eq!(s.point, -syms[k - 1].point);
                assert!(s.point.re <= 0.0);
            }
        }
    }

    #[test]
    fn sorted_magnitudes_and_paired_phases() {
        for rule in [
            PhaseRule::Symmetric,
            PhaseRule::Independent,
            PhaseRule::Unrotated,
        ] {
            let syms = symbols(rule, 8);
            for w in syms.windows(2) {
                assert!(w[0].gain >= w[1].gain);
            }
            for s in &syms {
                assert!((s.point.norm() - s.gain).abs() <= 1e-12 * s.gain.max(1.0));
                assert!((0.0..2.0 * PI).contains(&s.tx_phase));
            }
            if rule == PhaseRule::Symmetric {
                for k in (1..syms.len()).step_by(2) {
                    let d = (syms[k].tx_phase - syms[k - 1].tx_phase).rem_euclid(2.0 * PI);
                    assert!((d - PI).abs() < 1e-12);
                }
            }
        }
        for s in symbols(PhaseRule::Unrotated, 8) {
            assert!(s.point.im == 0.0 && s.point.re >= 0.0);
        }
    }

    #[test]
    fn ties_break_by_pattern_id() {
        // Every pattern has the same gain on a zero channel.
        let pats = enumerate_patterns(2, 3).unwrap();
        let z = Array2::<Complex64>::zeros((3, 2));
        let syms = build_effective_symbols(&pats, &z, PhaseRule::Unrotated, &mut stream(0, "d", 0))
            .unwrap();
        let ids: Vec<usize> = syms.iter().map(|s| s.pattern_id().unwrap()).collect();
        assert_eq!(ids, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn single_element_coefficients() {
        let c = Reflection::SingleElement(2).coefficients(2, 4);
        assert_eq!(c.iter().filter(|x| x.norm() > 0.0).count(), 1);
        assert_eq!(c[2], Complex64::new(1.0, 0.0));
        assert_eq!(Reflection::SingleElement(2).describe(2, 4), "e2");
    }
}
