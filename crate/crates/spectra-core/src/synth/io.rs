use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::matrix::DenseMatrix;
use crate::synth::logistic::LogisticProblem;

const MAGIC: &[u8; 4] = b"SPLG";
const VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidSpec(format!("dataset io failure: {e}"))
}

fn write_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(io_err)
}

fn write_f64_slice(w: &mut impl Write, data: &[f64]) -> Result<()> {
    for v in data {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

fn write_matrix(w: &mut impl Write, m: &DenseMatrix) -> Result<()> {
    // Row-major layout so the file is shape-header + doubles, independent
    // of the in-memory storage order.
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_all(&m[(i, j)].to_le_bytes()).map_err(io_err)?;
        }
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(io_err)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(io_err)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_matrix(r: &mut impl Read, rows: usize, cols: usize) -> Result<DenseMatrix> {
    let mut m = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = read_f64(r)?;
        }
    }
    Ok(m)
}

/// Writes the problem to a binary container: magic, version, dimensions,
/// ground truth, then (features, labels) for train and test splits.
pub fn dump_dataset(problem: &LogisticProblem, path: &Path) -> Result<()> {
    problem.validate()?;
    let (d, d2) = problem.dim();
    if d != d2 {
        return Err(Error::ShapeMismatch("features must be square".into()));
    }
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC).map_err(io_err)?;
    write_u32(&mut w, VERSION)?;
    write_u32(&mut w, d as u32)?;
    write_u32(&mut w, problem.features.len() as u32)?;
    write_u32(&mut w, problem.test_features.len() as u32)?;
    write_matrix(&mut w, &problem.ground_truth)?;
    for a in &problem.features {
        write_matrix(&mut w, a)?;
    }
    write_f64_slice(&mut w, &problem.labels)?;
    for a in &problem.test_features {
        write_matrix(&mut w, a)?;
    }
    write_f64_slice(&mut w, &problem.test_labels)?;
    w.flush().map_err(io_err)
}

/// Reads a problem previously written by `dump_dataset`.
pub fn load_dataset(path: &Path) -> Result<LogisticProblem> {
    let file = File::open(path).map_err(io_err)?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(Error::InvalidSpec("not a dataset container".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::InvalidSpec(format!(
            "unsupported dataset container version {version}"
        )));
    }
    let d = read_u32(&mut r)? as usize;
    let n_train = read_u32(&mut r)? as usize;
    let n_test = read_u32(&mut r)? as usize;
    let ground_truth = read_matrix(&mut r, d, d)?;
    let mut features = Vec::with_capacity(n_train);
    for _ in 0..n_train {
        features.push(read_matrix(&mut r, d, d)?);
    }
    let mut labels = Vec::with_capacity(n_train);
    for _ in 0..n_train {
        labels.push(read_f64(&mut r)?);
    }
    let mut test_features = Vec::with_capacity(n_test);
    for _ in 0..n_test {
        test_features.push(read_matrix(&mut r, d, d)?);
    }
    let mut test_labels = Vec::with_capacity(n_test);
    for _ in 0..n_test {
        test_labels.push(read_f64(&mut r)?);
    }
    let problem = LogisticProblem {
        features,
        labels,
        test_features,
        test_labels,
        ground_truth,
    };
    problem.validate()?;
    Ok(problem)
}
