use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of the experiment CSV.
pub const CSV_COLUMNS: [&str; 9] = ["experiment", "trial", "seed", "p", "n", "model", "t", "metric", "value"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Krr,
    Linear,
    GdKernelT,
    GdLinearT,
    GpOpt,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub trial: usize,
    pub seed: u64,
    pub p: usize,
    pub n: usize,
    pub model: Model,
    pub t: Option<u64>,
    pub metric: String,
    pub value: f64,
}

/// A trial that failed; logged in the sidecar instead of the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub p: usize,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub message: String,
}

pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in records {
        if !r.value.is_finite() {
            return Err(Error::NonFinite("record value"));
        }
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::Io(format!("unexpected CSV header: {headers:?}")));
    }
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}
