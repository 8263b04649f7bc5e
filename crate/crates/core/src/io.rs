//! CSV interchange formats.
//!
//! Constellation dumps: `pattern_id,phase_indices,re,im,gain,tx_phase_rad[,label]`.
//! `phase_indices` lists one base-`B` digit per element, element 0 first;
//! single-element (on/off) symbols are written as `e<n>`. Labels are bit
//! strings, most significant bit first.
//!
//! BER curves: `snr_db,ber_sim,ber_bound,trials,bit_errors`, with an empty
//! `ber_bound` field when no bound was computed.

use std::io::{Read, Write};

use crate::constellation::EffectiveSymbol;
use crate::error::{Error, Result};
use crate::graycode::LabeledConstellation;
use crate::link::BerCurve;

pub const SYMBOL_HEADER: [&str; 6] = [
    "pattern_id",
    "phase_indices",
    "re",
    "im",
    "gain",
    "tx_phase_rad",
];
pub const BER_HEADER: [&str; 5] = ["snr_db", "ber_sim", "ber_bound", "trials", "bit_errors"];

fn symbol_record(s: &EffectiveSymbol, phase_levels: usize, n_elements: usize) -> Vec<String> {
    vec![
        s.reflection.id().to_string(),
        s.reflection.describe(phase_levels, n_elements),
        s.point.re.to_string(),
        s.point.im.to_string(),
        s.gain.to_string(),
        s.tx_phase.to_string(),
    ]
}

/// All candidate symbols, without labels.
pub fn write_symbols_csv<W: Write>(
    w: W,
    symbols: &[EffectiveSymbol],
    phase_levels: usize,
    n_elements: usize,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SYMBOL_HEADER)?;
    for s in symbols {
        out.write_record(symbol_record(s, phase_levels, n_elements))?;
    }
    out.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// The labelled constellation in label-assignment order.
pub fn write_constellation_csv<W: Write>(
    w: W,
    c: &LabeledConstellation,
    phase_levels: usize,
    n_elements: usize,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = SYMBOL_HEADER.to_vec();
    header.push("label");
    out.write_record(&header)?;
    for (s, l) in c.points.iter().zip(&c.labels) {
        let mut rec = symbol_record(s, phase_levels, n_elements);
        rec.push(l.to_string());
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn write_ber_csv<W: Write>(w: W, curve: &BerCurve) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(BER_HEADER)?;
    for i in 0..curve.len() {
        let bound = curve
            .ber_bound
            .as_ref()
            .map(|b| b[i].to_string())
            .unwrap_or_default();
        out.write_record([
            curve.snr_db[i].to_string(),
            curve.ber_sim[i].to_string(),
            bound,
            curve.trials[i].to_string(),
            curve.bit_errors[i].to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// Reads a BER CSV by header name. `bits_per_symbol` is recovered from the
/// first row with errors, falling back to 1.
pub fn read_ber_csv<R: Read>(r: R) -> Result<BerCurve> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Csv(format!("missing column {name}")))
    };
    let (i_snr, i_sim, i_bound, i_trials, i_err) = (
        col("snr_db")?,
        col("ber_sim")?,
        col("ber_bound")?,
        col("trials")?,
        col("bit_errors")?,
    );
    let parse_f = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Csv(format!("{s}: {e}")))
    };
    let parse_u = |s: &str| {
        s.parse::<u64>()
            .map_err(|e| Error::Csv(format!("{s}: {e}")))
    };
    let (mut snr, mut sim, mut bound, mut trials, mut errs) =
        (vec![], vec![], vec![], vec![], vec![]);
    let mut any_bound = false;
    for rec in rdr.records() {
        let rec = rec?;
        snr.push(parse_f(&rec[i_snr])?);
        sim.push(parse_f(&rec[i_sim])?);
        if rec[i_bound].is_empty() {
            bound.push(f64::NAN);
        } else {
            any_bound = true;
            bound.push(parse_f(&rec[i_bound])?);
        }
        trials.push(parse_u(&rec[i_trials])?);
        errs.push(parse_u(&rec[i_err])?);
    }
    let bits = sim
        .iter()
        .zip(trials.iter().zip(&errs))
        .find(|(&p, (_, &e))| p > 0.0 && e > 0)
        .map(|(&p, (&t, &e))| (e as f64 / (p * t as f64)).round() as u32)
        .unwrap_or(1);
    Ok(BerCurve {
        snr_db: snr,
        ber_sim: sim,
        ber_bound: any_bound.then_some(bound),
        trials,
        bit_errors: errs,
        bits_per_symbol: bits,
    })
}
