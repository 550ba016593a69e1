//! Classical verification oracle and clustering quality metrics.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Laplacian;
use crate::linalg::symmetric_eigen;

/// Dense-eigensolver spectral bipartition.
#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub fiedler_value: f64,
    pub fiedler_vector: Vec<f64>,
    /// 1 where the Fiedler component is `>= 0`, else 0.
    pub labels: Vec<usize>,
}

/// Full eigendecomposition of `L` and the sign partition of its Fiedler vector.
pub fn classical_fiedler(lap: &Laplacian) -> Result<OracleResult> {
    fiedler_of_matrix(lap.matrix())
}

pub fn fiedler_of_matrix(l: &DMatrix<f64>) -> Result<OracleResult> {
    if l.nrows() < 2 {
        return Err(Error::InvalidArgument(
            "Fiedler vector needs at least two vertices".into(),
        ));
    }
    let eig = symmetric_eigen(l)?;
    let fiedler_vector = eig.vector(1);
    let labels = fiedler_vector.iter().map(|&v| usize::from(v >= 0.0)).collect();
    Ok(OracleResult {
        fiedler_value: eig.eigenvalues[1],
        eigenvalues: eig.eigenvalues,
        fiedler_vector,
        labels,
    })
}

fn check_lengths(a: &[usize], b: &[usize]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            got: a.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("empty labelling".into()));
    }
    Ok(())
}

/// Binary accuracy maximised over the two label assignments.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred, truth)?;
    if pred.iter().chain(truth).any(|&l| l > 1) {
        return Err(Error::InvalidArgument("accuracy expects binary {0, 1} labels".into()));
    }
    let agree = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    let n = pred.len();
    Ok(agree.max(n - agree) as f64 / n as f64)
}

struct Contingency {
    cells: Vec<f64>,
    rows: Vec<f64>,
    cols: Vec<f64>,
    n: f64,
}

fn contingency(a: &[usize], b: &[usize]) -> Contingency {
    let index = |xs: &[usize]| {
        let mut map = HashMap::new();
        for &x in xs {
            let next = map.len();
            map.entry(x).or_insert(next);
        }
        map
    };
    let (ia, ib) = (index(a), index(b));
    let (ra, rb) = (ia.len(), ib.len());
    let mut cells = vec![0.0; ra * rb];
    let mut rows = vec![0.0; ra];
    let mut cols = vec![0.0; rb];
    for (x, y) in a.iter().zip(b) {
        let (i, j) = (ia[x], ib[y]);
        cells[i * rb + j] += 1.0;
        rows[i] += 1.0;
        cols[j] += 1.0;
    }
    Contingency {
        cells,
        rows,
        cols,
        n: a.len() as f64,
    }
}

fn comb2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Hubert–Arabie adjusted Rand index.
pub fn adjusted_rand_index(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred, truth)?;
    if pred.len() < 2 {
        return Err(Error::InvalidArgument("ARI needs at least two points".into()));
    }
    let t = contingency(pred, truth);
    let index: f64 = t.cells.iter().map(|&c| comb2(c)).sum();
    let sum_a: f64 = t.rows.iter().map(|&c| comb2(c)).sum();
    let sum_b: f64 = t.cols.iter().map(|&c| comb2(c)).sum();
    let expected = sum_a * sum_b / comb2(t.n);
    let max = 0.5 * (sum_a + sum_b);
    if (max - expected).abs() < 1e-300 {
        // both partitions trivial (all-in-one or all-singletons)
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

fn entropy(counts: &[f64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalised by the arithmetic mean of the two
/// entropies (natural log). A constant labelling scores 0.
pub fn normalized_mutual_info(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let t = contingency(pred, truth);
    let ha = entropy(&t.rows, t.n);
    let hb = entropy(&t.cols, t.n);
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let rb = t.cols.len();
    let mut mi = 0.0;
    for (i, &ri) in t.rows.iter().enumerate() {
        for (j, &cj) in t.cols.iter().enumerate() {
            let c = t.cells[i * rb + j];
            if c > 0.0 {
                mi += c / t.n * (c * t.n / (ri * cj)).ln();
            }
        }
    }
    Ok((mi / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

/// `fᵀ L f` for a sign vector `f ∈ {-1, +1}ᴺ`.
pub fn cut_value(signs: &[i8], l: &DMatrix<f64>) -> Result<f64> {
    if l.nrows() != signs.len() || l.ncols() != signs.len() {
        return Err(Error::DimensionMismatch {
            expected: l.nrows(),
            got: signs.len(),
        });
    }
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::InvalidArgument("sign vector entries must be +1 or -1".into()));
    }
    let n = signs.len();
    let mut total = 0.0;
    for j in 0..n {
        let col = l.column(j);
        let dot: f64 = (0..n).map(|i| col[i] * f64::from(signs[i])).sum();
        total += f64::from(signs[j]) * dot;
    }
    Ok(total)
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Maps arbitrary integer labels onto `{0, 1, …}` in order of first appearance.
pub fn relabel(labels: &[i64]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}
