//! CSV renderings of experiment results.

use super::{CurveRow, ExperimentResult};
use crate::error::Result;
use crate::scalar::Real;

pub const STUDENT_HEADER: [&str; 7] = ["replication", "i", "context", "stop_slot", "explored", "score", "cost"];

pub const CURVE_HEADER: [&str; 7] = ["policy", "n", "R", "R_e", "R_s", "bound", "stderr"];

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row per student, replications in order.
pub fn students_csv<S: Real>(result: &ExperimentResult<S>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(STUDENT_HEADER)?;
    for r in result.rows() {
        w.write_record([
            r.replication.to_string(),
            r.i.to_string(),
            r.context.to_string(),
            r.stop_slot.to_string(),
            r.explored.to_string(),
            r.score.to_string(),
            r.cost.to_string(),
        ])?;
    }
    finish(w)
}

/// One row per grid point; the bound column is empty for policies without
/// exploration constants.
pub fn curve_csv<S: Real>(rows: &[CurveRow<S>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CURVE_HEADER)?;
    for r in rows {
        w.write_record([
            r.policy.to_string(),
            r.n.to_string(),
            r.regret.to_string(),
            r.regret_explore.to_string(),
            r.regret_exploit.to_string(),
            r.bound.map(|b| b.to_string()).unwrap_or_default(),
            r.stderr.to_string(),
        ])?;
    }
    finish(w)
}
