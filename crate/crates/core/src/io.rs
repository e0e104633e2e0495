//! File formats: reservoir dumps, adaptation traces, per-neuron tables.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::balance::TraceRecord;
use crate::error::{Error, Result};
use crate::experiment::NeuronDiagnostics;
use crate::readout::Readout;
use crate::reservoir::EIReservoir;
use crate::scalar::Real;

pub const DUMP_FORMAT: &str = "eirc-reservoir";
pub const DUMP_VERSION: u32 = 1;

/// Versioned container for a reservoir and an optional trained readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct ReservoirDump<T> {
    pub format: String,
    pub version: u32,
    pub scalar: String,
    pub reservoir: EIReservoir<T>,
    pub readout: Option<Readout<T>>,
}

fn all_finite<T: Real>(xs: &[T]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

/// Writes `res` (and `readout`) as JSON. Floats are written in shortest
/// round-trip form, so reading the file back gives identical bits.
pub fn write_reservoir<T: Real, W: Write>(
    out: W,
    res: &EIReservoir<T>,
    readout: Option<&Readout<T>>,
) -> Result<()> {
    if !res.weights_finite() || !all_finite(res.potential()) || !all_finite(res.rates()) {
        return Err(Error::Format("cannot dump a reservoir with non-finite values".into()));
    }
    if let Some(ro) = readout {
        if ro.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Format("cannot dump a non-finite readout".into()));
        }
    }
    let dump = ReservoirDump {
        format: DUMP_FORMAT.to_string(),
        version: DUMP_VERSION,
        scalar: T::NAME.to_string(),
        reservoir: res.clone(),
        readout: readout.cloned(),
    };
    serde_json::to_writer(out, &dump)?;
    Ok(())
}

pub fn read_reservoir<T: Real, R: Read>(input: R) -> Result<(EIReservoir<T>, Option<Readout<T>>)> {
    let value: serde_json::Value = serde_json::from_reader(input)?;
    let header = |key: &str| value.get(key).cloned().unwrap_or(serde_json::Value::Null);
    if header("format") != DUMP_FORMAT {
        return Err(Error::Format(format!("not a reservoir dump (format {})", header("format"))));
    }
    if header("version") != DUMP_VERSION {
        return Err(Error::Format(format!("unsupported dump version {}", header("version"))));
    }
    if header("scalar") != T::NAME {
        return Err(Error::Format(format!(
            "dump holds {} values, requested {}",
            header("scalar"),
            T::NAME
        )));
    }
    let dump: ReservoirDump<T> = serde_json::from_value(value)?;
    let mut res = dump.reservoir;
    res.restore_after_load()?;
    if let Some(ro) = &dump.readout {
        let expected = res.len() + usize::from(ro.bias);
        if ro.weights.nrows() != expected {
            return Err(Error::Dimension { expected, found: ro.weights.nrows() });
        }
    }
    Ok((res, dump.readout))
}

pub fn save_reservoir<T: Real>(
    path: &Path,
    res: &EIReservoir<T>,
    readout: Option<&Readout<T>>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_reservoir(&mut w, res, readout)?;
    w.flush()?;
    Ok(())
}

pub fn load_reservoir<T: Real>(path: &Path) -> Result<(EIReservoir<T>, Option<Readout<T>>)> {
    read_reservoir(BufReader::new(File::open(path)?))
}

pub const TRACE_HEADER: [&str; 5] = ["step", "beta", "mean_rate", "metric_name", "metric_value"];

/// Adaptation trace as CSV with [`TRACE_HEADER`] columns.
pub fn write_trace<W: Write>(out: W, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.step.to_string(),
            r.beta.to_string(),
            r.mean_rate.to_string(),
            r.metric_name.clone().unwrap_or_default(),
            r.metric_value.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const NEURON_HEADER: [&str; 6] =
    ["neuron", "type", "mean_rate", "local_beta", "entropy", "output_weight"];

/// One row per neuron: type, mean rate, local balance, entropy and the
/// Euclidean norm of its readout weights (empty without a readout).
pub fn write_neuron_table<W: Write>(
    out: W,
    res: &EIReservoir<f64>,
    diag: &NeuronDiagnostics,
    readout: Option<&Readout<f64>>,
) -> Result<()> {
    let n = res.len();
    if diag.mean_rate.len() != n || diag.entropy.len() != n {
        return Err(Error::Dimension { expected: n, found: diag.mean_rate.len() });
    }
    let local = res.local_balance();
    let norms = readout.map(|ro| ro.neuron_weight_norms());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(NEURON_HEADER)?;
    for i in 0..n {
        w.write_record([
            i.to_string(),
            res.neuron_types()[i].symbol().to_string(),
            diag.mean_rate[i].to_string(),
            local[i].to_string(),
            diag.entropy[i].to_string(),
            norms.as_ref().map(|v| v[i].to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
