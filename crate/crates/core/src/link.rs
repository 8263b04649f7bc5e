//! Transmission, ML detection and Monte Carlo BER sweeps.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::analysis::tx_power_for_snr;
use crate::constellation::mrt_composite;
use crate::error::{Error, Result};
use crate::graycode::{BitLabel, LabeledConstellation};
use crate::rng::{label, stream, Stream};
use crate::schemes::Designer;
use crate::sysmodel::{realization_for_block, sample_cscg, ChannelRealization, SystemConfig};

/// A detected (or transmitted) constellation index with its bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxSymbol {
    pub index: usize,
    pub bits: BitLabel,
}

/// `y = √ρ g + n`, `n ~ CN(0, σ²)`.
pub fn transmit<R: Rng + ?Sized>(
    point: Complex64,
    tx_power: f64,
    noise_var: f64,
    rng: &mut R,
) -> Complex64 {
    let clean = point * tx_power.sqrt();
    if noise_var == 0.0 {
        return clean;
    }
    clean + sample_cscg(rng, noise_var)
}

/// Index minimizing `|y − √ρ g_l|²`, ties to the lowest index.
pub fn nearest_index(y: Complex64, scaled_points: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (l, p) in scaled_points.iter().enumerate() {
        let d = (y - p).norm_sqr();
        if d < best_d {
            best = l;
            best_d = d;
        }
    }
    best
}

/// Maximum-likelihood detection over the designed constellation.
pub fn detect_ml(y: Complex64, c: &LabeledConstellation, tx_power: f64) -> TxSymbol {
    let amp = tx_power.sqrt();
    let scaled: Vec<Complex64> = c.points.iter().map(|s| s.point * amp).collect();
    let index = nearest_index(y, &scaled);
    TxSymbol {
        index,
        bits: c.labels[index],
    }
}

/// Points actually delivered over the true channel. Under perfect CSI these
/// are the designed points; otherwise each pattern's MRT beam is computed from
/// the estimate and applied to the true cascaded channel.
pub fn received_points(
    c: &LabeledConstellation,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> Result<Vec<Complex64>> {
    let Some(z_est) = ch.z_estimated.as_ref() else {
        return Ok(c.complex_points());
    };
    c.points
        .iter()
        .map(|s| {
            let x = if s.gain > 0.0 {
                s.point / s.gain
            } else {
                Complex64::from_polar(1.0, s.tx_phase)
            };
            let coeffs = s.reflection.coefficients(cfg.phase_levels, cfg.n_elements);
            Ok(mrt_composite(&coeffs, &ch.z_cascade, z_est)? * x)
        })
        .collect()
}

/// SNR grid and trial budget for a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub snr_db: Vec<f64>,
    /// Trials per SNR point.
    pub trials: u64,
    /// Trials sharing one channel realization; `None` keeps one channel for
    /// the whole sweep.
    pub coherence_trials: Option<u64>,
}

impl SweepConfig {
    pub fn new(snr_db: Vec<f64>, trials: u64) -> Self {
        SweepConfig {
            snr_db,
            trials,
            coherence_trials: Some(1000),
        }
    }

    fn block_len(&self) -> u64 {
        self.coherence_trials.unwrap_or(self.trials).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub snr_db: Vec<f64>,
    pub ber_sim: Vec<f64>,
    pub ber_bound: Option<Vec<f64>>,
    pub trials: Vec<u64>,
    pub bit_errors: Vec<u64>,
    pub bits_per_symbol: u32,
}

impl BerCurve {
    pub fn from_counts(
        snr_db: Vec<f64>,
        trials: Vec<u64>,
        bit_errors: Vec<u64>,
        bits_per_symbol: u32,
    ) -> Self {
        let ber_sim = trials
            .iter()
            .zip(&bit_errors)
            .map(|(&t, &e)| e as f64 / (t as f64 * bits_per_symbol as f64))
            .collect();
        BerCurve {
            snr_db,
            ber_sim,
            ber_bound: None,
            trials,
            bit_errors,
            bits_per_symbol,
        }
    }

    pub fn len(&self) -> usize {
        self.snr_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snr_db.is_empty()
    }

    /// Binomial standard error of `ber_sim[i]` over all simulated bits.
    pub fn standard_error(&self, i: usize) -> f64 {
        let p = self.ber_sim[i];
        let n = self.trials[i] as f64 * self.bits_per_symbol as f64;
        (p * (1.0 - p) / n).sqrt()
    }

    /// SNR at which the curve first falls to `target`, interpolated linearly
    /// in `log10(BER)` between grid points.
    pub fn snr_at_ber(&self, target: f64) -> Option<f64> {
        for i in 1..self.len() {
            let (a, b) = (self.ber_sim[i - 1], self.ber_sim[i]);
            if a >= target && b < target {
                if b <= 0.0 {
                    return Some(self.snr_db[i]);
                }
                let frac = (a.log10() - target.log10()) / (a.log10() - b.log10());
                return Some(self.snr_db[i - 1] + frac * (self.snr_db[i] - self.snr_db[i - 1]));
            }
        }
        None
    }
}

struct BlockPlan {
    constellation: LabeledConstellation,
    received: Vec<Complex64>,
}

/// Monte Carlo BER over `sweep.snr_db`.
///
/// Channel realization `k` (streams keyed by block index) serves trials
/// `k·K .. (k+1)·K`; its constellation is designed on the transmitter's
/// channel view. Trial `t` draws its bits and unit noise from stream
/// `(seed, "trial", t)` and reuses them at every SNR point, so the curve is
/// independent of thread count and SNR points share random numbers.
pub fn run_ber_sweep(
    cfg: &SystemConfig,
    designer: &dyn Designer,
    sweep: &SweepConfig,
) -> Result<BerCurve> {
    cfg.validate()?;
    if sweep.trials == 0 {
        return Err(Error::InvalidConfig(
            "need at least one trial per SNR point".into(),
        ));
    }
    if sweep.snr_db.is_empty() {
        return Err(Error::InvalidConfig("empty SNR grid".into()));
    }
    if !cfg.noise_var.is_finite() || cfg.noise_var <= 0.0 {
        return Err(Error::InvalidConfig(
            "SNR sweeps need noise variance > 0".into(),
        ));
    }
    let block_len = sweep.block_len();
    let n_blocks = sweep.trials.div_ceil(block_len);
    let plans: Vec<BlockPlan> = (0..n_blocks)
        .into_par_iter()
        .map(|k| {
            let ch = realization_for_block(cfg, k)?;
            let constellation =
                designer.design(&ch, cfg, &mut stream(cfg.seed, label::DESIGN, k))?;
            if constellation.len() != cfg.n_points {
                return Err(Error::LabelLength {
                    expected: cfg.n_points,
                    bits: cfg.n_bits(),
                    got: constellation.len(),
                });
            }
            let received = received_points(&constellation, &ch, cfg)?;
            Ok(BlockPlan {
                constellation,
                received,
            })
        })
        .collect::<Result<_>>()?;

    let amps: Vec<f64> = sweep
        .snr_db
        .iter()
        .map(|&s| tx_power_for_snr(s, cfg.noise_var).sqrt())
        .collect();
    let sigma = cfg.noise_var.sqrt();
    let n_points = cfg.n_points as u64;

    const CHUNK: u64 = 4096;
    let chunk_len = block_len.min(CHUNK);
    let chunks_per_block = block_len.div_ceil(chunk_len);
    let errors = (0..n_blocks * chunks_per_block)
        .into_par_iter()
        .map(|job| {
            let block = job / chunks_per_block;
            let start = block * block_len + (job % chunks_per_block) * chunk_len;
            let end = (start + chunk_len)
                .min((block + 1) * block_len)
                .min(sweep.trials);
            let plan = &plans[block as usize];
            let c = &plan.constellation;
            let scaled: Vec<Vec<Complex64>> = amps
                .iter()
                .map(|&a| c.points.iter().map(|s| s.point * a).collect())
                .collect();
            let mut errs = vec![0u64; amps.len()];
            for t in start..end {
                let mut rng: Stream = stream(cfg.seed, label::TRIAL, t);
                let tx_label = rng.random_range(0..n_points) as u32;
                let tx = c.index_of(tx_label);
                let noise = sample_cscg(&mut rng, 1.0) * sigma;
                for (i, &a) in amps.iter().enumerate() {
                    let y = plan.received[tx] * a + noise;
                    let det = nearest_index(y, &scaled[i]);
                    errs[i] += c.labels[tx].hamming(c.labels[det]) as u64;
                }
            }
            errs
        })
        .reduce(
            || vec![0u64; amps.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    Ok(BerCurve::from_counts(
        sweep.snr_db.clone(),
        vec![sweep.trials; sweep.snr_db.len()],
        errors,
        cfg.n_bits(),
    ))
}
