//! `risim`: design RIS index-modulation constellations, simulate their BER and
//! report design complexity.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use risim_core::clustering::CentroidTrace;
use risim_core::io::{write_ber_csv, write_constellation_csv, write_symbols_csv};
use risim_core::rng::{label, stream};
use risim_core::schemes::{
    design_proposed_detailed, design_scheme_a, design_scheme_c, plain_symbols,
};
use risim_core::sysmodel::realization_for_block;
use risim_core::{
    ber_upper_bound, complexity_estimate, run_ber_sweep, CsiModel, Designer, EffectiveSymbol,
    LabeledConstellation, ProposedOptions, SchemeId, SweepConfig, SystemConfig,
};

#[derive(Parser)]
#[command(
    name = "risim",
    version,
    about = "RIS index-modulation constellation design and BER simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design one constellation on the first channel realization.
    Design(DesignArgs),
    /// Monte Carlo BER sweep, optionally with the union bound.
    Ber(BerArgs),
    /// Operation counts of every scheme as JSON.
    Complexity(ComplexityArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum CsiArg {
    Perfect,
    Imperfect,
}

#[derive(Args, Debug)]
struct SystemArgs {
    /// RIS elements N.
    #[arg(long)]
    n_elements: usize,
    /// BS antennas M.
    #[arg(long)]
    n_antennas: usize,
    /// Discrete phase levels B.
    #[arg(long, default_value_t = 2)]
    phase_levels: usize,
    /// Constellation size L (power of two).
    #[arg(long)]
    points: usize,
    #[arg(long, default_value = "proposed", value_parser = parse_scheme)]
    scheme: SchemeId,
    #[arg(long, env = "RISIM_SEED")]
    seed: u64,
    #[arg(long, value_enum, default_value_t = CsiArg::Perfect)]
    csi: CsiArg,
    /// CSI estimation noise power in dBm.
    #[arg(long, default_value_t = -50.0, allow_negative_numbers = true)]
    sigma_z_dbm: f64,
    /// Uplink pilot power in dBm.
    #[arg(long, default_value_t = -30.0, allow_negative_numbers = true)]
    pilot_dbm: f64,
    /// Lloyd iteration cap E.
    #[arg(long, default_value_t = 100)]
    kmeans_iters: usize,
    /// K-means restarts per design; the widest selection is kept.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Independent transmit phases instead of antipodal pairs.
    #[arg(long)]
    no_sym: bool,
    /// Natural binary labels instead of the Gray chain.
    #[arg(long)]
    no_gray: bool,
    #[arg(long, default_value = ".")]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct DesignArgs {
    #[command(flatten)]
    sys: SystemArgs,
    /// Also write the per-iteration centroid trace (K-means schemes only).
    #[arg(long)]
    trace: bool,
}

#[derive(Args, Debug)]
struct BerArgs {
    #[command(flatten)]
    sys: SystemArgs,
    /// SNR grid in dB as start:stop:step, or a single value.
    #[arg(long, value_parser = parse_snr, allow_hyphen_values = true)]
    snr: SnrGrid,
    /// Trials per SNR point.
    #[arg(long)]
    trials: u64,
    /// Trials sharing one channel realization.
    #[arg(long, default_value_t = 1000)]
    coherence_trials: u64,
    /// Also evaluate the union bound.
    #[arg(long)]
    bound: bool,
    /// Channel randomizations S for the bound.
    #[arg(long, default_value_t = 1000)]
    bound_s: usize,
}

#[derive(Args, Debug)]
struct ComplexityArgs {
    #[arg(long, default_value_t = 2)]
    phase_levels: usize,
    #[arg(long)]
    n_elements: usize,
    #[arg(long, default_value_t = 100)]
    kmeans_iters: usize,
    #[arg(long)]
    points: usize,
    /// Write complexity.json here instead of printing.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
struct SnrGrid {
    start: f64,
    stop: f64,
    step: f64,
    points: Vec<f64>,
}

fn parse_scheme(s: &str) -> Result<SchemeId, String> {
    s.parse().map_err(|_| {
        let tags: Vec<&str> = SchemeId::ALL.iter().map(|id| id.tag()).collect();
        format!("expected one of {}", tags.join(", "))
    })
}

fn parse_snr(s: &str) -> Result<SnrGrid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = match parts[..] {
        [x] => (x, x, 1.0),
        [a, b, c] => (a, b, c),
        _ => return Err("expected start:stop:step".into()),
    };
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err("grid values must be finite".into());
    }
    if step <= 0.0 || stop < start {
        return Err("need step > 0 and stop >= start".into());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n >= 100_000 {
        return Err("grid has too many points".into());
    }
    let points = (0..=n).map(|i| start + i as f64 * step).collect();
    Ok(SnrGrid {
        start,
        stop,
        step,
        points,
    })
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    config: &'a SystemConfig,
    scheme: SchemeId,
    csi: CsiArg,
    no_sym: bool,
    no_gray: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    snr: Option<&'a SnrGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coherence_trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound_randomizations: Option<usize>,
    outputs: Vec<String>,
    tool_version: &'static str,
    timestamp_unix: u64,
}

/// Errors split by exit code: bad input is 2, everything else 1.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design(a) => cmd_design(a),
        Command::Ber(a) => cmd_ber(a),
        Command::Complexity(a) => cmd_complexity(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn system_config(a: &SystemArgs) -> Result<SystemConfig, Failure> {
    let mut cfg =
        SystemConfig::new(a.n_elements, a.n_antennas, a.phase_levels, a.points).map_err(usage)?;
    cfg.seed = a.seed;
    cfg.max_kmeans_iters = a.kmeans_iters;
    cfg.kmeans_restarts = a.restarts;
    if a.csi == CsiArg::Imperfect {
        cfg.csi = CsiModel::Imperfect {
            noise_dbm: a.sigma_z_dbm,
            pilot_dbm: a.pilot_dbm,
        };
        cfg.csi.error_variance().map_err(usage)?;
    }
    cfg.validate().map_err(usage)?;
    if (a.no_sym || a.no_gray) && a.scheme != SchemeId::Proposed {
        return Err(usage(anyhow::anyhow!(
            "--no-sym/--no-gray only apply to --scheme proposed"
        )));
    }
    Ok(cfg)
}

/// `--no-sym`/`--no-gray` on `proposed` select the matching ablation.
fn effective_scheme(a: &SystemArgs) -> Result<SchemeId, Failure> {
    match (a.scheme, a.no_sym, a.no_gray) {
        (id, false, false) => Ok(id),
        (SchemeId::Proposed, true, false) => Ok(SchemeId::ProposedNoSym),
        (SchemeId::Proposed, false, true) => Ok(SchemeId::ProposedNoGray),
        _ => Err(usage(anyhow::anyhow!(
            "--no-sym and --no-gray cannot be combined"
        ))),
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

struct DesignOutput {
    constellation: LabeledConstellation,
    /// Symbol set the scheme selected from.
    candidates: Vec<EffectiveSymbol>,
    trace: Option<CentroidTrace>,
}

fn design_with_candidates(
    scheme: SchemeId,
    cfg: &SystemConfig,
    want_trace: bool,
) -> anyhow::Result<(DesignOutput, risim_core::ChannelRealization)> {
    let ch = realization_for_block(cfg, 0)?;
    let mut rng = stream(cfg.seed, label::DESIGN, 0);
    let out = match scheme {
        SchemeId::Proposed | SchemeId::ProposedNoSym | SchemeId::ProposedNoGray => {
            let opts = ProposedOptions {
                symmetric: scheme != SchemeId::ProposedNoSym,
                gray: scheme != SchemeId::ProposedNoGray,
            };
            let mut trace = CentroidTrace::default();
            let d = design_proposed_detailed(
                &ch,
                cfg,
                opts,
                &mut rng,
                want_trace.then_some(&mut trace),
            )?;
            DesignOutput {
                constellation: d.constellation,
                candidates: d.symbols,
                trace: want_trace.then_some(trace),
            }
        }
        SchemeId::SchemeA | SchemeId::SchemeC => {
            let symbols = plain_symbols(&ch, cfg, &mut rng)?;
            let constellation = if scheme == SchemeId::SchemeA {
                design_scheme_a(&symbols, cfg.n_points, &mut rng)?
            } else {
                design_scheme_c(&symbols, cfg.n_points, &mut rng)?
            };
            DesignOutput {
                constellation,
                candidates: symbols,
                trace: None,
            }
        }
        SchemeId::SchemeB => {
            let constellation = scheme.design(&ch, cfg, &mut rng)?;
            let candidates = constellation.points.clone();
            DesignOutput {
                constellation,
                candidates,
                trace: None,
            }
        }
    };
    Ok((out, ch))
}

fn cmd_design(a: DesignArgs) -> Result<(), Failure> {
    let cfg = system_config(&a.sys)?;
    let scheme = effective_scheme(&a.sys)?;
    if a.trace
        && !matches!(
            scheme,
            SchemeId::Proposed | SchemeId::ProposedNoSym | SchemeId::ProposedNoGray
        )
    {
        return Err(usage(anyhow::anyhow!("--trace needs a K-means scheme")));
    }
    let dir = &a.sys.output;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let (out, ch) = design_with_candidates(scheme, &cfg, a.trace)?;
    let tag = scheme.tag();
    let constellation_path = dir.join(format!("constellation_{tag}.csv"));
    let scatter_path = dir.join(format!("scatter_{tag}.csv"));
    let channel_path = dir.join("channel.json");
    write_constellation_csv(
        create(&constellation_path)?,
        &out.constellation,
        cfg.phase_levels,
        cfg.n_elements,
    )?;
    write_symbols_csv(
        create(&scatter_path)?,
        &out.candidates,
        cfg.phase_levels,
        cfg.n_elements,
    )?;
    write_json(&channel_path, &ch.to_json())?;
    let mut outputs = vec![constellation_path, scatter_path, channel_path];
    if let Some(trace) = &out.trace {
        let p = dir.join(format!("trace_{tag}.json"));
        write_json(&p, trace)?;
        outputs.push(p);
    }

    let manifest_path = dir.join(format!("design_{tag}.manifest.json"));
    let manifest = RunManifest {
        command: "design",
        config: &cfg,
        scheme,
        csi: a.sys.csi,
        no_sym: a.sys.no_sym,
        no_gray: a.sys.no_gray,
        snr: None,
        trials: None,
        coherence_trials: None,
        bound_randomizations: None,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        tool_version: env!("CARGO_PKG_VERSION"),
        timestamp_unix: timestamp(),
    };
    write_json(&manifest_path, &manifest)?;
    println!(
        "{tag}: {} points, total pairwise distance {:.6}, wrote {}",
        out.constellation.len(),
        out.constellation.total_pairwise_distance(),
        dir.display()
    );
    Ok(())
}

fn cmd_ber(a: BerArgs) -> Result<(), Failure> {
    let mut cfg = system_config(&a.sys)?;
    let scheme = effective_scheme(&a.sys)?;
    if a.trials == 0 || a.coherence_trials == 0 {
        return Err(usage(anyhow::anyhow!(
            "--trials and --coherence-trials must be >= 1"
        )));
    }
    cfg.bound_randomizations = a.bound_s;
    cfg.validate().map_err(usage)?;
    let dir = &a.sys.output;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let sweep = SweepConfig {
        snr_db: a.snr.points.clone(),
        trials: a.trials,
        coherence_trials: Some(a.coherence_trials),
    };
    let mut curve = run_ber_sweep(&cfg, &scheme, &sweep)?;
    if a.bound {
        curve.ber_bound = Some(ber_upper_bound(&cfg, &scheme, &a.snr.points)?);
    }

    let tag = scheme.tag();
    let csv_path = dir.join(format!("ber_{tag}.csv"));
    write_ber_csv(create(&csv_path)?, &curve)?;
    let manifest = RunManifest {
        command: "ber",
        config: &cfg,
        scheme,
        csi: a.sys.csi,
        no_sym: a.sys.no_sym,
        no_gray: a.sys.no_gray,
        snr: Some(&a.snr),
        trials: Some(a.trials),
        coherence_trials: Some(a.coherence_trials),
        bound_randomizations: a.bound.then_some(a.bound_s),
        outputs: vec![csv_path.display().to_string()],
        tool_version: env!("CARGO_PKG_VERSION"),
        timestamp_unix: timestamp(),
    };
    write_json(&dir.join(format!("ber_{tag}.manifest.json")), &manifest)?;
    for (i, snr) in curve.snr_db.iter().enumerate() {
        match &curve.ber_bound {
            Some(b) => println!(
                "{snr:>7.2} dB  ber {:.4e}  bound {:.4e}",
                curve.ber_sim[i], b[i]
            ),
            None => println!("{snr:>7.2} dB  ber {:.4e}", curve.ber_sim[i]),
        }
    }
    Ok(())
}

fn cmd_complexity(a: ComplexityArgs) -> Result<(), Failure> {
    let report = complexity_estimate(a.phase_levels, a.n_elements, a.kmeans_iters, a.points)
        .map_err(usage)?;
    match &a.output {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write_json(&dir.join("complexity.json"), &report)?;
        }
        None => println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?
        ),
    }
    Ok(())
}
