//! CSV files: comma-separated, one header row, LF line endings, floats in
//! shortest round-trip decimal form.
//!
//! Headers:
//!
//! ```text
//! cycles       m,q,t
//! perpetuity   y_inf,n_trunc,a_trunc,flagged
//! ruin table   u,lower,upper,direct,stderr_lower,stderr_direct,n_paths
//! tail report  estimator,value,ci_lo,ci_hi,k_or_window
//! ```

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cycle::CycleSample;
use crate::engine::{PerpetuitySample, RuinEstimate};
use crate::error::{Error, Result};
use crate::stats::Estimate;
use crate::tail::{Interval, TailEstimate};

pub const CYCLE_HEADER: &str = "m,q,t";
pub const PERPETUITY_HEADER: &str = "y_inf,n_trunc,a_trunc,flagged";
pub const RUIN_HEADER: &str = "u,lower,upper,direct,stderr_lower,stderr_direct,n_paths";
pub const TAIL_HEADER: &str = "estimator,value,ci_lo,ci_hi,k_or_window";

#[derive(Serialize, Deserialize)]
struct CycleRecord {
    m: f64,
    q: f64,
    t: f64,
}

#[derive(Serialize, Deserialize)]
struct PerpetuityRecord {
    y_inf: f64,
    n_trunc: usize,
    a_trunc: f64,
    flagged: u8,
}

#[derive(Serialize, Deserialize)]
struct RuinRecord {
    u: f64,
    lower: f64,
    upper: f64,
    direct: Option<f64>,
    stderr_lower: f64,
    stderr_direct: Option<f64>,
    n_paths: u64,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

fn write_records<T: Serialize>(header: &str, records: impl IntoIterator<Item = T>) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header.split(',')).expect("in-memory write");
    for r in records {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn read_records<T: DeserializeOwned>(text: &str, header: &str) -> Result<Vec<T>> {
    if text.is_empty() {
        return Err(Error::Csv("empty file".into()));
    }
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let found = r.headers().map_err(csv_err)?.iter().collect::<Vec<_>>().join(",");
    if found != header {
        return Err(Error::Csv(format!("expected header `{header}`, got `{found}`")));
    }
    r.deserialize().map(|rec| rec.map_err(csv_err)).collect()
}

pub fn write_cycles(cycles: &[CycleSample]) -> String {
    write_records(CYCLE_HEADER, cycles.iter().map(|c| CycleRecord { m: c.m, q: c.q, t: c.t }))
}

/// `(m, q, t)` triples; the log price is recovered as `-ln m`.
pub fn read_cycles(text: &str) -> Result<Vec<CycleSample>> {
    Ok(read_records::<CycleRecord>(text, CYCLE_HEADER)?
        .into_iter()
        .map(|r| CycleSample {
            m: r.m,
            q: r.q,
            t: r.t,
            v_end: -r.m.ln(),
            saturated: false,
        })
        .collect())
}

pub fn write_perpetuities(samples: &[PerpetuitySample]) -> String {
    write_records(
        PERPETUITY_HEADER,
        samples.iter().map(|s| PerpetuityRecord {
            y_inf: s.y_inf,
            n_trunc: s.n_trunc,
            a_trunc: s.a_trunc,
            flagged: u8::from(s.flagged),
        }),
    )
}

pub fn read_perpetuities(text: &str) -> Result<Vec<PerpetuitySample>> {
    Ok(read_records::<PerpetuityRecord>(text, PERPETUITY_HEADER)?
        .into_iter()
        .map(|r| PerpetuitySample {
            y_inf: r.y_inf,
            n_trunc: r.n_trunc,
            a_trunc: r.a_trunc,
            flagged: r.flagged != 0,
        })
        .collect())
}

/// Ruin table; an undefined upper bound is written as `inf`, a missing
/// direct estimate as empty fields.
pub fn write_ruin_table(rows: &[RuinEstimate]) -> String {
    write_records(
        RUIN_HEADER,
        rows.iter().map(|r| RuinRecord {
            u: r.u,
            lower: r.lower,
            upper: r.upper.unwrap_or(f64::INFINITY),
            direct: r.direct.map(|d| d.value),
            stderr_lower: r.gbar_u.stderr,
            stderr_direct: r.direct.map(|d| d.stderr),
            n_paths: r.n_paths,
        }),
    )
}

/// A parsed ruin-table row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuinRow {
    pub u: f64,
    pub lower: f64,
    pub upper: Option<f64>,
    pub direct: Option<Estimate>,
    pub stderr_lower: f64,
    pub n_paths: u64,
}

impl From<&RuinEstimate> for RuinRow {
    fn from(r: &RuinEstimate) -> Self {
        Self {
            u: r.u,
            lower: r.lower,
            upper: r.upper,
            direct: r.direct,
            stderr_lower: r.gbar_u.stderr,
            n_paths: r.n_paths,
        }
    }
}

pub fn read_ruin_table(text: &str) -> Result<Vec<RuinRow>> {
    Ok(read_records::<RuinRecord>(text, RUIN_HEADER)?
        .into_iter()
        .map(|r| RuinRow {
            u: r.u,
            lower: r.lower,
            upper: r.upper.is_finite().then_some(r.upper),
            direct: match (r.direct, r.stderr_direct) {
                (Some(value), Some(stderr)) if !value.is_nan() => Some(Estimate { value, stderr }),
                _ => None,
            },
            stderr_lower: r.stderr_lower,
            n_paths: r.n_paths,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub estimator: String,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub k_or_window: String,
}

/// Rows `hill` (k), `slope` and `c_plus` (window `lo;hi`).
pub fn tail_rows(t: &TailEstimate) -> Vec<TailRow> {
    let window = format!("{};{}", t.u_window.0, t.u_window.1);
    let row = |estimator: &str, i: Interval, k_or_window: String| TailRow {
        estimator: estimator.into(),
        value: i.value,
        ci_lo: i.lo,
        ci_hi: i.hi,
        k_or_window,
    };
    vec![
        row("hill", t.beta_hat_hill, t.k_used.to_string()),
        row("slope", t.beta_hat_slope, window.clone()),
        row("c_plus", t.c_plus_hat.estimate, window),
    ]
}

pub fn write_tail_report(rows: &[TailRow]) -> String {
    write_records(TAIL_HEADER, rows)
}

pub fn read_tail_report(text: &str) -> Result<Vec<TailRow>> {
    read_records(text, TAIL_HEADER)
}
