//! SNR sweeps and their tabular output.
//!
//! MI tables use the CSV header `snr_db,scheme,n,mi_bits,std_err,method` and
//! SER tables `snr_db,scheme,n,ser,ci95,trials`. Capacity reference rows use
//! scheme `capacity` and method `closed-form`. The JSON form mirrors the CSV
//! rows as an array of objects.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{invalid, Result};
use crate::link::{measure_ser, SimRun};
use crate::mi::{shannon_capacity, ChannelSpec, Estimator};
use crate::par::Exec;

pub const MI_CSV_HEADER: &str = "snr_db,scheme,n,mi_bits,std_err,method";
pub const SER_CSV_HEADER: &str = "snr_db,scheme,n,ser,ci95,trials";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiRow {
    pub snr_db: f64,
    pub scheme: String,
    pub n: usize,
    pub mi_bits: f64,
    pub std_err: f64,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerRow {
    pub snr_db: f64,
    pub scheme: String,
    pub n: usize,
    pub ser: f64,
    pub ci95: f64,
    pub trials: u64,
}

/// A row that could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFailure {
    pub snr_db: f64,
    pub scheme: String,
    pub message: String,
}

/// Rows of a sweep plus any rows that failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable<R> {
    pub rows: Vec<R>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<RowFailure>,
}

impl<R> Default for SweepTable<R> {
    fn default() -> Self {
        SweepTable {
            rows: Vec::new(),
            failures: Vec::new(),
        }
    }
}

impl<R: Serialize> SweepTable<R> {
    pub fn extend(&mut self, other: SweepTable<R>) {
        self.rows.extend(other.rows);
        self.failures.extend(other.failures);
    }

    /// Writes the rows as CSV with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// JSON array of row objects.
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rows)?)
    }
}

pub type MiTable = SweepTable<MiRow>;

/// Reads MI rows written by [`SweepTable::write_csv`].
pub fn read_mi_csv<R: std::io::Read>(input: R) -> Result<Vec<MiRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != MI_CSV_HEADER {
        return Err(crate::error::Error::Format(format!(
            "expected header '{MI_CSV_HEADER}', got '{header}'"
        )));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
pub type SerTable = SweepTable<SerRow>;

/// Seed of row `row` derived from a sweep seed (SplitMix64 finalizer).
pub fn row_seed(seed: u64, row: usize) -> u64 {
    let mut z = seed.wrapping_add((row as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Inclusive dB grid `start, start+step, ...` up to `stop`.
pub fn snr_range_db(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if ![start, stop, step].iter().all(|v| v.is_finite()) || step <= 0.0 || stop < start {
        return Err(invalid(format!("bad SNR range {start}:{stop}:{step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

/// MI of a fixed constellation over an SNR grid.
///
/// The constellation is held at its target power and the noise variance of
/// each row is `P̄ / S`. Monte Carlo rows get independent seeds derived from
/// the estimator seed and the row index, so any subset of rows can be
/// recomputed on its own. Rows run through `exec`.
pub fn mi_sweep(
    c: &Constellation,
    snr_grid_db: &[f64],
    estimator: &Estimator,
    exec: Exec,
) -> Result<MiTable> {
    if snr_grid_db.is_empty() {
        return Err(invalid("SNR grid is empty"));
    }
    let base_seed = match estimator {
        Estimator::MonteCarlo(ctl) => ctl.seed,
        Estimator::Grid(_) => 0,
    };
    let scheme = c.scheme().to_string();
    let results = exec.map(snr_grid_db.len(), |i| {
        let snr_db = snr_grid_db[i];
        let est = estimator.reseeded(row_seed(base_seed, i));
        ChannelSpec::for_constellation(c, snr_db)
            .and_then(|ch| est.estimate(c, ch.noise_variance))
            .map(|e| MiRow {
                snr_db,
                scheme: scheme.clone(),
                n: c.len(),
                mi_bits: e.bits,
                std_err: e.std_error,
                method: e.method.as_str().to_string(),
            })
            .map_err(|e| RowFailure {
                snr_db,
                scheme: scheme.clone(),
                message: format!("row {i} ({snr_db} dB): {e}"),
            })
    });
    let mut table = MiTable::default();
    for r in results {
        match r {
            Ok(row) => table.rows.push(row),
            Err(f) => table.failures.push(f),
        }
    }
    Ok(table)
}

/// Capacity reference rows for an SNR grid.
pub fn capacity_rows(snr_grid_db: &[f64]) -> MiTable {
    SweepTable {
        rows: snr_grid_db
            .iter()
            .map(|&snr_db| MiRow {
                snr_db,
                scheme: "capacity".into(),
                n: 0,
                mi_bits: shannon_capacity(crate::db_to_linear(snr_db)),
                std_err: 0.0,
                method: "closed-form".into(),
            })
            .collect(),
        failures: Vec::new(),
    }
}

/// Symbol error rate over an SNR grid.
pub fn ser_sweep(
    c: &Constellation,
    snr_grid_db: &[f64],
    n_symbols: u64,
    seed: u64,
    exec: Exec,
) -> Result<SerTable> {
    if snr_grid_db.is_empty() {
        return Err(invalid("SNR grid is empty"));
    }
    let scheme = c.scheme().to_string();
    let mut table = SerTable::default();
    for (i, &snr_db) in snr_grid_db.iter().enumerate() {
        let run = SimRun {
            constellation: c,
            snr_db,
            n_symbols,
            seed: row_seed(seed, i),
        };
        match measure_ser(&run, exec) {
            Ok(r) => table.rows.push(SerRow {
                snr_db,
                scheme: scheme.clone(),
                n: c.len(),
                ser: r.ser,
                ci95: r.ci95_halfwidth,
                trials: r.trials,
            }),
            Err(e) => table.failures.push(RowFailure {
                snr_db,
                scheme: scheme.clone(),
                message: format!("row {i} ({snr_db} dB): {e}"),
            }),
        }
    }
    Ok(table)
}
