//! Pairwise error probabilities, the averaged union bound on BER and the
//! operation-count estimates for each designer.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::graycode::LabeledConstellation;
use crate::rng::{label, stream};
use crate::schemes::Designer;
use crate::sysmodel::{realization_for_block, SystemConfig};

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Transmit power giving `snr_db` at noise variance `noise_var` (`SNR = ρ/σ²`).
pub fn tx_power_for_snr(snr_db: f64, noise_var: f64) -> f64 {
    noise_var * 10f64.powf(snr_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseErrorTerm {
    pub l: usize,
    pub l_hat: usize,
    /// `ρ/(2σ²) |ĝ_l − ĝ_l̂|²`
    pub kappa: f64,
    /// Bits that differ between the two labels.
    pub n_bit_errors: u32,
}

impl PairwiseErrorTerm {
    pub fn pep(&self) -> f64 {
        q_function(self.kappa.sqrt())
    }
}

/// Every ordered pair `l ≠ l̂`.
pub fn pep_terms(
    c: &LabeledConstellation,
    tx_power: f64,
    noise_var: f64,
) -> Vec<PairwiseErrorTerm> {
    let scale = tx_power / (2.0 * noise_var);
    let mut out = Vec::with_capacity(c.len() * c.len().saturating_sub(1));
    for (l, (a, la)) in c.points.iter().zip(&c.labels).enumerate() {
        for (l_hat, (b, lb)) in c.points.iter().zip(&c.labels).enumerate() {
            if l == l_hat {
                continue;
            }
            out.push(PairwiseErrorTerm {
                l,
                l_hat,
                kappa: scale * (a.point - b.point).norm_sqr(),
                n_bit_errors: la.hamming(*lb),
            });
        }
    }
    out
}

/// `Σ N(l,l̂) Q(√κ)` for one constellation, not yet normalized.
pub fn weighted_pep_sum(c: &LabeledConstellation, tx_power: f64, noise_var: f64) -> f64 {
    pep_terms(c, tx_power, noise_var)
        .iter()
        .map(|t| t.n_bit_errors as f64 * t.pep())
        .sum()
}

/// Union bound on BER for a single fixed constellation.
pub fn union_bound(c: &LabeledConstellation, tx_power: f64, noise_var: f64) -> f64 {
    weighted_pep_sum(c, tx_power, noise_var) / (c.len() as f64 * c.bits() as f64)
}

/// Union bound averaged over `cfg.bound_randomizations` channel draws.
///
/// Randomization `s` uses the same channel and design streams as coherence
/// block `s` of the Monte Carlo sweep.
pub fn ber_upper_bound(
    cfg: &SystemConfig,
    designer: &dyn Designer,
    snr_db: &[f64],
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !cfg.noise_var.is_finite() || cfg.noise_var <= 0.0 {
        return Err(Error::InvalidConfig(
            "SNR sweeps need noise variance > 0".into(),
        ));
    }
    let s_count = cfg.bound_randomizations;
    let per_draw: Vec<Vec<f64>> = (0..s_count as u64)
        .into_par_iter()
        .map(|s| {
            let ch = realization_for_block(cfg, s)?;
            let c = designer.design(&ch, cfg, &mut stream(cfg.seed, label::DESIGN, s))?;
            Ok(snr_db
                .iter()
                .map(|&snr| {
                    weighted_pep_sum(&c, tx_power_for_snr(snr, cfg.noise_var), cfg.noise_var)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let norm = s_count as f64 * cfg.n_points as f64 * cfg.n_bits() as f64;
    Ok((0..snr_db.len())
        .map(|i| per_draw.iter().map(|v| v[i]).sum::<f64>() / norm)
        .collect())
}

/// Stage costs of the K-means design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProposedComplexity {
    /// Gain evaluation and sorting: `R log R + R L`.
    pub gains_and_sort: f64,
    /// Lloyd iterations: `R E L`.
    pub clustering: f64,
    /// Representative selection: `R L − R + L`.
    pub selection: f64,
    /// Chain ordering: `(L² − L)/2`.
    pub gray_chain: f64,
    /// Sum of the four stages.
    pub exact_total: f64,
    /// `R log R + R E L + R L − R + L²`.
    pub simplified: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub n_patterns: f64,
    pub proposed: ProposedComplexity,
    /// `R log R + E L² + L²`
    pub scheme_a: f64,
    /// `R + L log L`
    pub scheme_b: f64,
    /// `L`
    pub scheme_c: f64,
}

/// Operation counts with base-2 logarithms.
pub fn complexity_estimate(
    phase_levels: usize,
    n_elements: usize,
    max_iters: usize,
    n_points: usize,
) -> Result<ComplexityReport> {
    if phase_levels < 2 || n_elements == 0 || max_iters == 0 {
        return Err(Error::InvalidConfig(
            "complexity needs B >= 2, N >= 1, E >= 1".into(),
        ));
    }
    if n_points < 2 || !n_points.is_power_of_two() {
        return Err(Error::InvalidConfig(format!(
            "L = {n_points} must be a power of two >= 2"
        )));
    }
    let r = (phase_levels as f64).powi(n_elements as i32);
    let log_r = n_elements as f64 * (phase_levels as f64).log2();
    let (e, l) = (max_iters as f64, n_points as f64);
    let gains_and_sort = r * log_r + r * l;
    let clustering = r * e * l;
    let selection = r * l - r + l;
    let gray_chain = (l * l - l) / 2.0;
    Ok(ComplexityReport {
        n_patterns: r,
        proposed: ProposedComplexity {
            gains_and_sort,
            clustering,
            selection,
            gray_chain,
            exact_total: gains_and_sort + clustering + selection + gray_chain,
            simplified: r * log_r + r * e * l + r * l - r + l * l,
        },
        scheme_a: r * log_r + e * l * l + l * l,
        scheme_b: r + l * l.log2(),
        scheme_c: l,
    })
}
