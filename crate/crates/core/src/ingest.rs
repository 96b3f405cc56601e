//! LIBSVM-format ingestion and seeded synthetic instances.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::SparseRowMatrix;
use crate::problems::{ObservedEntry, Problem};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: SparseRowMatrix,
    /// Each label is `+1.0` or `-1.0`.
    pub labels: Vec<f64>,
    pub provenance: String,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn into_problem(self) -> Result<Problem> {
        Problem::logistic(self.features, self.labels)
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses `<label> <idx>:<val> …` lines with 1-based, strictly increasing
/// indices. Labels `> 0` map to `+1`, everything else to `−1`.
pub fn parse_libsvm<R: BufRead>(reader: R, cols: Option<usize>) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut max_col = 0usize;
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tokens = body.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label `{label_tok}`")))?;
        if !label.is_finite() {
            return Err(parse_err(lineno, "non-finite label"));
        }
        let mut row: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("missing `:` in `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad index in `{tok}`")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "indices are 1-based"));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad value in `{tok}`")))?;
            if !val.is_finite() {
                return Err(parse_err(lineno, format!("non-finite value in `{tok}`")));
            }
            let col = idx - 1;
            if row.last().is_some_and(|&(c, _)| c >= col) {
                return Err(parse_err(lineno, format!("index {idx} not increasing")));
            }
            max_col = max_col.max(idx);
            row.push((col, val));
        }
        rows.push(row);
        labels.push(if label > 0.0 { 1.0 } else { -1.0 });
    }
    let cols = match cols {
        Some(c) if c < max_col => {
            return Err(Error::config("cols", format!("{c} columns but index {max_col} seen")))
        }
        Some(c) => c,
        None => max_col,
    };
    Ok(Dataset {
        features: SparseRowMatrix::from_rows(cols, rows)?,
        labels,
        provenance: String::new(),
    })
}

/// Reads a LIBSVM file, decompressing when the name ends in `.gz`.
pub fn read_libsvm_file(path: &Path, cols: Option<usize>) -> Result<Dataset> {
    let file = File::open(path)?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    let mut ds = parse_libsvm(BufReader::new(reader), cols)?;
    ds.provenance = path.display().to_string();
    Ok(ds)
}

pub fn write_libsvm<W: Write>(ds: &Dataset, mut w: W) -> Result<()> {
    for (i, y) in ds.labels.iter().enumerate() {
        write!(w, "{}", if *y > 0.0 { "+1" } else { "-1" })?;
        let (idx, vals) = ds.features.row(i);
        for (c, v) in idx.iter().zip(vals) {
            write!(w, " {}:{}", c + 1, v)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Sparse features with labels from a planted sparse linear model.
pub fn synth_logistic(n: usize, m: usize, sparsity: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || m == 0 {
        return Err(Error::config("synth", "n and m must be positive"));
    }
    if !(sparsity > 0.0 && sparsity <= 1.0) {
        return Err(Error::config("sparsity", "must lie in ]0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support = (n / 10).max(1);
    let mut planted = vec![0.0; n];
    for j in index::sample(&mut rng, n, support).into_iter() {
        planted[j] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    }
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let mut row: Vec<(usize, f64)> = (0..n)
            .filter(|_| rng.gen_bool(sparsity))
            .map(|j| (j, 0.0))
            .collect();
        if row.is_empty() {
            row.push((rng.gen_range(0..n), 0.0));
        }
        for entry in row.iter_mut() {
            entry.1 = rng.gen_range(-1.0..1.0);
        }
        let z: f64 = row.iter().map(|&(j, v)| planted[j] * v).sum();
        let noise = 0.1 * rng.gen_range(-1.0..1.0);
        labels.push(if z + noise > 0.0 { 1.0 } else { -1.0 });
        rows.push(row);
    }
    Ok(Dataset {
        features: SparseRowMatrix::from_rows(n, rows)?,
        labels,
        provenance: format!("synth_logistic(n={n}, m={m}, sparsity={sparsity}, seed={seed})"),
    })
}

/// Rank-`rank` targets plus noise observed on `observed` distinct entries.
pub fn synth_completion(rows: usize, cols: usize, observed: usize, rank: usize, seed: u64) -> Result<Problem> {
    if rows == 0 || cols == 0 || rank == 0 || observed == 0 {
        return Err(Error::config("synth", "dimensions, rank and |Ω| must be positive"));
    }
    if observed > rows * cols {
        return Err(Error::config(
            "observed",
            format!("|Ω| = {observed} exceeds {rows}×{cols} entries"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (rank as f64).sqrt();
    let u: Vec<f64> = (0..rows * rank).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
    let v: Vec<f64> = (0..cols * rank).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
    let mut positions = index::sample(&mut rng, rows * cols, observed).into_vec();
    positions.sort_unstable();
    let entries = positions
        .into_iter()
        .map(|p| {
            let (r, c) = (p / cols, p % cols);
            let clean: f64 = (0..rank).map(|k| u[r * rank + k] * v[c * rank + k]).sum();
            ObservedEntry {
                row: r,
                col: c,
                target: clean + 0.1 * rng.gen_range(-1.0..1.0),
            }
        })
        .collect();
    Problem::completion(rows, cols, entries)
}
