//! CSV and manifest writers. Every file goes to a temporary sibling first
//! and is renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pipg::solvers::Trace;

use crate::error::CliError;

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::io(path, std::io::Error::other("not a file path")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// `pass,iter,rmse`, or `pass,iter` when no record carries an error value.
pub fn trace_csv(trace: &Trace) -> String {
    let with_rmse = trace.records.iter().any(|r| r.rmse.is_some());
    let mut out = String::from(if with_rmse {
        "pass,iter,rmse\n"
    } else {
        "pass,iter\n"
    });
    for r in &trace.records {
        match r.rmse {
            Some(e) if with_rmse => writeln!(out, "{},{},{e}", r.pass, r.iteration),
            _ => writeln!(out, "{},{}", r.pass, r.iteration),
        }
        .expect("writing to a String cannot fail");
    }
    out
}

/// `index,mean,two_sigma` with 1-based indices; `two_sigma` is left empty
/// for solvers without a covariance.
pub fn posterior_csv(trace: &Trace) -> String {
    let mut out = String::from("index,mean,two_sigma\n");
    for (i, m) in trace.estimate.iter().enumerate() {
        match &trace.posterior {
            Some(p) => writeln!(out, "{},{m},{}", i + 1, 2.0 * p.cov()[(i, i)].sqrt()),
            None => writeln!(out, "{},{m},", i + 1),
        }
        .expect("writing to a String cannot fail");
    }
    out
}

/// `iter,index,value`, one line per snapshot and coordinate.
pub fn cov_diag_csv(trace: &Trace) -> String {
    let mut out = String::from("iter,index,value\n");
    for snap in &trace.cov_snapshots {
        for (i, v) in snap.diagonal.iter().enumerate() {
            writeln!(out, "{},{},{v}", snap.iteration, i + 1)
                .expect("writing to a String cannot fail");
        }
    }
    out
}
