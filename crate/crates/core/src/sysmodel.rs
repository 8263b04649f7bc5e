//! System configuration and random channel realizations.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Default upper limit on the number of enumerated reflection patterns.
pub const DEFAULT_PATTERN_CAP: usize = 1 << 20;

/// How the transmitter learns the cascaded channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum CsiModel {
    Perfect,
    /// Additive estimation error with per-entry variance `noise / pilot`
    /// (both given in dBm).
    Imperfect {
        noise_dbm: f64,
        pilot_dbm: f64,
    },
}

impl CsiModel {
    /// Per-entry variance of the estimation error on the linear scale.
    pub fn error_variance(&self) -> Result<f64> {
        match *self {
            CsiModel::Perfect => Ok(0.0),
            CsiModel::Imperfect {
                noise_dbm,
                pilot_dbm,
            } => csi_error_variance(noise_dbm, pilot_dbm),
        }
    }
}

pub fn dbm_to_milliwatts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// `σ_z² / p_ul` evaluated on the linear scale.
pub fn csi_error_variance(noise_dbm: f64, pilot_dbm: f64) -> Result<f64> {
    let pilot = dbm_to_milliwatts(pilot_dbm);
    if !pilot.is_finite() || pilot <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "pilot power must be positive, got {pilot_dbm} dBm"
        )));
    }
    let noise = dbm_to_milliwatts(noise_dbm);
    if !noise.is_finite() || noise < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "CSI noise power must be finite, got {noise_dbm} dBm"
        )));
    }
    Ok(noise / pilot)
}

/// Global simulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// RIS elements `N`.
    pub n_elements: usize,
    /// BS antennas `M`.
    pub n_antennas: usize,
    /// Discrete phase levels `B`.
    pub phase_levels: usize,
    /// Constellation size `L`, a power of two.
    pub n_points: usize,
    /// Transmit power `ρ` (linear).
    pub tx_power: f64,
    /// Receiver noise variance `σ²` (linear).
    pub noise_var: f64,
    pub csi: CsiModel,
    /// Channel randomizations `S` for the union bound.
    pub bound_randomizations: usize,
    /// Lloyd iteration cap `E`.
    pub max_kmeans_iters: usize,
    /// Independent K-means runs per design; the best selection is kept.
    pub kmeans_restarts: usize,
    pub pattern_cap: usize,
    pub seed: u64,
}

impl SystemConfig {
    /// Configuration with unit power/noise, perfect CSI, `S = 1000`, `E = 100`.
    pub fn new(
        n_elements: usize,
        n_antennas: usize,
        phase_levels: usize,
        n_points: usize,
    ) -> Result<Self> {
        let cfg = SystemConfig {
            n_elements,
            n_antennas,
            phase_levels,
            n_points,
            tx_power: 1.0,
            noise_var: 1.0,
            csi: CsiModel::Perfect,
            bound_randomizations: 1000,
            max_kmeans_iters: 100,
            kmeans_restarts: 1,
            pattern_cap: DEFAULT_PATTERN_CAP,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Bits per symbol `b = log2 L`.
    pub fn n_bits(&self) -> u32 {
        self.n_points.trailing_zeros()
    }

    /// Number of reflection patterns `R = B^N`, or `None` on overflow.
    pub fn n_patterns(&self) -> Option<usize> {
        u32::try_from(self.n_elements)
            .ok()
            .and_then(|n| self.phase_levels.checked_pow(n))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_elements == 0 {
            return bad("need at least one RIS element".into());
        }
        if self.n_antennas == 0 {
            return bad("need at least one transmit antenna".into());
        }
        if self.phase_levels < 2 {
            return bad(format!(
                "phase levels must be >= 2, got {}",
                self.phase_levels
            ));
        }
        if self.n_points < 2 || !self.n_points.is_power_of_two() {
            return bad(format!(
                "constellation size must be a power of two >= 2, got {}",
                self.n_points
            ));
        }
        match self.n_patterns() {
            Some(r) if r > self.pattern_cap => {
                return Err(Error::TooManyPatterns {
                    phase_levels: self.phase_levels,
                    n_elements: self.n_elements,
                    cap: self.pattern_cap,
                })
            }
            Some(r) if r < self.n_points => {
                return bad(format!(
                    "constellation size {} exceeds the {} available patterns",
                    self.n_points, r
                ))
            }
            Some(_) => {}
            None => {
                return Err(Error::TooManyPatterns {
                    phase_levels: self.phase_levels,
                    n_elements: self.n_elements,
                    cap: self.pattern_cap,
                })
            }
        }
        if !self.tx_power.is_finite() || self.tx_power <= 0.0 {
            return bad(format!(
                "transmit power must be positive, got {}",
                self.tx_power
            ));
        }
        if !self.noise_var.is_finite() || self.noise_var < 0.0 {
            return bad(format!(
                "noise variance must be >= 0, got {}",
                self.noise_var
            ));
        }
        if self.bound_randomizations == 0 {
            return bad("bound randomizations S must be >= 1".into());
        }
        if self.max_kmeans_iters == 0 {
            return bad("K-means iteration cap E must be >= 1".into());
        }
        if self.kmeans_restarts == 0 {
            return bad("K-means restarts must be >= 1".into());
        }
        self.csi.error_variance()?;
        Ok(())
    }
}

/// One coherence block: `G`, `h_r`, the cascaded channel `Z = diag(h_r^H) G`
/// and, under imperfect CSI, the transmitter's estimate of `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub g_matrix: Array2<Complex64>,
    pub h_r: Array1<Complex64>,
    pub z_cascade: Array2<Complex64>,
    pub z_estimated: Option<Array2<Complex64>>,
}

impl ChannelRealization {
    /// Builds the realization from `G` and `h_r`, computing `Z`.
    pub fn from_parts(g_matrix: Array2<Complex64>, h_r: Array1<Complex64>) -> Result<Self> {
        if g_matrix.nrows() != h_r.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("G with {} rows", h_r.len()),
                got: format!("{} rows", g_matrix.nrows()),
            });
        }
        let mut z_cascade = g_matrix.clone();
        for (mut row, h) in z_cascade.rows_mut().into_iter().zip(h_r.iter()) {
            let hc = h.conj();
            row.mapv_inplace(|g| hc * g);
        }
        Ok(ChannelRealization {
            g_matrix,
            h_r,
            z_cascade,
            z_estimated: None,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.z_cascade.nrows()
    }

    pub fn n_antennas(&self) -> usize {
        self.z_cascade.ncols()
    }

    /// The channel the transmitter designs on: `Ẑ` if present, else `Z`.
    pub fn design_channel(&self) -> &Array2<Complex64> {
        self.z_estimated.as_ref().unwrap_or(&self.z_cascade)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let matrix = |m: &Array2<Complex64>| -> serde_json::Value {
            m.rows()
                .into_iter()
                .map(|row| row.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>())
                .collect::<Vec<_>>()
                .into()
        };
        serde_json::json!({
            "n_elements": self.n_elements(),
            "n_antennas": self.n_antennas(),
            "g_matrix": matrix(&self.g_matrix),
            "h_r": self.h_r.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
            "z_cascade": matrix(&self.z_cascade),
            "z_estimated": self.z_estimated.as_ref().map(matrix),
        })
    }
}

/// Zero-mean circularly-symmetric complex Gaussian with the given variance.
pub fn sample_cscg<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Draws `G` and `h_r` with i.i.d. unit-variance CSCG entries.
pub fn generate_channel(cfg: &SystemConfig, stream: &mut Stream) -> ChannelRealization {
    let (n, m) = (cfg.n_elements, cfg.n_antennas);
    let g = Array2::from_shape_simple_fn((n, m), || sample_cscg(stream, 1.0));
    let h = Array1::from_shape_simple_fn(n, || sample_cscg(stream, 1.0));
    ChannelRealization::from_parts(g, h).expect("shapes agree by construction")
}

/// Attaches `Ẑ = Z + E` with `E` i.i.d. CSCG of variance `error_variance`.
pub fn apply_csi_error(
    mut ch: ChannelRealization,
    error_variance: f64,
    stream: &mut Stream,
) -> Result<ChannelRealization> {
    if !error_variance.is_finite() || error_variance < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "CSI error variance must be finite and >= 0, got {error_variance}"
        )));
    }
    let est = if error_variance == 0.0 {
        ch.z_cascade.clone()
    } else {
        ch.z_cascade
            .mapv(|z| z + sample_cscg(stream, error_variance))
    };
    ch.z_estimated = Some(est);
    Ok(ch)
}

/// Channel for coherence block `block`, including the CSI perturbation when the
/// configuration asks for one. Streams are keyed by block index.
pub fn realization_for_block(cfg: &SystemConfig, block: u64) -> Result<ChannelRealization> {
    use crate::rng::{label, stream};
    let ch = generate_channel(cfg, &mut stream(cfg.seed, label::CHANNEL, block));
    match cfg.csi {
        CsiModel::Perfect => Ok(ch),
        CsiModel::Imperfect { .. } => apply_csi_error(
            ch,
            cfg.csi.error_variance()?,
            &mut stream(cfg.seed, label::CSI, block),
        ),
    }
}
