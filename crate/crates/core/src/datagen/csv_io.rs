//! CSV exchange format for generated problems.
//!
//! Dataset file: header `y,x_1,...,x_d`, one record per line. Ground truth
//! lives next to it in `theta_star.csv`, one value per line, no header.
//! Floats are written in Rust's shortest round-trip form so a re-import is
//! bit-exact.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use super::GeneratedProblem;
use crate::data::{Dataset, Observation};
use crate::error::{PipgError, Result};

pub const GROUND_TRUTH_FILE: &str = "theta_star.csv";

fn csv_err(e: csv::Error) -> PipgError {
    let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => PipgError::Io(io),
        other => PipgError::Parse {
            row,
            message: format!("{other:?}"),
        },
    }
}

pub fn write_dataset_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header: Vec<String> = std::iter::once("y".to_string())
        .chain((1..=dataset.dim()).map(|i| format!("x_{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for obs in dataset {
        write!(w, "{}", obs.y)?;
        for v in obs.regressor.iter() {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;

    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.is_empty() || &headers[0] != "y" {
        return Err(PipgError::Parse {
            row: 1,
            message: "header must start with `y`".into(),
        });
    }
    for (i, h) in headers.iter().enumerate().skip(1) {
        if h != format!("x_{i}") {
            return Err(PipgError::Parse {
                row: 1,
                message: format!("expected column `x_{i}`, found `{h}`"),
            });
        }
    }
    let dim = headers.len() - 1;
    if dim == 0 {
        return Err(PipgError::Parse {
            row: 1,
            message: "no regressor columns".into(),
        });
    }

    let mut observations = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let values = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| PipgError::Parse {
                    row,
                    message: format!("cannot parse `{field}` as a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PipgError::Parse {
                row,
                message: "non-finite value".into(),
            });
        }
        observations.push(Observation::new(
            values[0],
            DVector::from_column_slice(&values[1..]),
        ));
    }
    Dataset::new(dim, observations)
}

pub fn import_ground_truth(path: &Path) -> Result<DVector<f64>> {
    let text = std::fs::read_to_string(path)?;
    let values = text
        .lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            line.trim().parse::<f64>().map_err(|_| PipgError::Parse {
                row: i + 1,
                message: format!("cannot parse `{line}` as a number"),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DVector::from_vec(values))
}

fn sidecar_path(dataset_path: &Path) -> PathBuf {
    dataset_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(GROUND_TRUTH_FILE)
}

/// Writes the dataset to `path` and the ground truth to the sidecar file in
/// the same directory.
pub fn export_problem(path: &Path, problem: &GeneratedProblem) -> Result<()> {
    write_dataset_csv(path, &problem.dataset)?;
    let mut w = BufWriter::new(File::create(sidecar_path(path))?);
    for v in problem.ground_truth.iter() {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset and, when the sidecar exists, its ground truth.
pub fn import_dataset(path: &Path) -> Result<(Dataset, Option<DVector<f64>>)> {
    let dataset = read_dataset_csv(path)?;
    let sidecar = sidecar_path(path);
    let truth = if sidecar.exists() {
        let t = import_ground_truth(&sidecar)?;
        if t.len() != dataset.dim() {
            return Err(PipgError::InvalidArgument(format!(
                "ground truth has {} values, dataset dimension is {}",
                t.len(),
                dataset.dim()
            )));
        }
        Some(t)
    } else {
        None
    };
    Ok((dataset, truth))
}
