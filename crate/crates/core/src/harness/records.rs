use std::io::{Read, Write};

use crate::metrics::RoundMetrics;

use super::HarnessError;

/// Exact header of every per-round CSV.
pub const ROUND_HEADER: [&str; 8] = [
    "round",
    "u_max",
    "v_g",
    "established",
    "removed",
    "total_lightpaths",
    "unroutable_fraction",
    "mu_mean",
];

/// Formats a real with six fractional digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.6}")
}

/// Rounds a real to what [`fmt_real`] preserves.
pub fn quantize(x: f64) -> f64 {
    fmt_real(x).parse().unwrap_or(x)
}

/// The record as it will read back from CSV.
pub fn quantize_record(m: &RoundMetrics) -> RoundMetrics {
    RoundMetrics {
        u_max: quantize(m.u_max),
        v_g: quantize(m.v_g),
        unroutable_fraction: quantize(m.unroutable_fraction),
        mu_mean: m.mu_mean.map(quantize),
        ..m.clone()
    }
}

fn csv_err(e: csv::Error) -> HarnessError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    HarnessError::Csv {
        line,
        reason: e.to_string(),
    }
}

pub fn write_rounds<W: Write>(records: &[RoundMetrics], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(ROUND_HEADER).map_err(csv_err)?;
    for m in records {
        w.write_record([
            m.round.to_string(),
            fmt_real(m.u_max),
            fmt_real(m.v_g),
            m.established.to_string(),
            m.removed.to_string(),
            m.total_lightpaths.to_string(),
            fmt_real(m.unroutable_fraction),
            m.mu_mean.map(fmt_real).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    i: usize,
    line: usize,
) -> Result<T, HarnessError> {
    let raw = &record[i];
    raw.parse().map_err(|_| HarnessError::Csv {
        line,
        reason: format!("bad {} value {raw:?}", ROUND_HEADER[i]),
    })
}

pub fn read_rounds<R: Read>(input: R) -> Result<Vec<RoundMetrics>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(ROUND_HEADER) {
        return Err(HarnessError::Csv {
            line: 1,
            reason: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut records = Vec::new();
    for (k, row) in r.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let line = k + 2;
        records.push(RoundMetrics {
            round: field(&row, 0, line)?,
            u_max: field(&row, 1, line)?,
            v_g: field(&row, 2, line)?,
            established: field(&row, 3, line)?,
            removed: field(&row, 4, line)?,
            total_lightpaths: field(&row, 5, line)?,
            unroutable_fraction: field(&row, 6, line)?,
            mu_mean: if row[7].is_empty() {
                None
            } else {
                Some(field(&row, 7, line)?)
            },
        });
    }
    Ok(records)
}
