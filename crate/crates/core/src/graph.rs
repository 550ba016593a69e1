//! From point clouds to the unnormalized graph Laplacian `L = D - W`.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// Edge weights at or below this are treated as absent.
pub const EDGE_EPS: f64 = 1e-15;

/// A labelled or unlabelled point cloud, one row per point.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub points: DMatrix<f64>,
    pub labels: Option<Vec<i64>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, points: DMatrix<f64>, labels: Option<Vec<i64>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != points.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: points.nrows(),
                    got: l.len(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            points,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dims(&self) -> usize {
        self.points.ncols()
    }

    /// Reads the `f0,…,f{d-1}[,label]` CSV layout.
    pub fn from_csv_reader<R: Read>(name: impl Into<String>, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let mut n_features = 0;
        let mut label_col = None;
        for (i, h) in headers.iter().enumerate() {
            if h == "label" {
                if i + 1 != headers.len() {
                    return Err(Error::InvalidArgument("'label' must be the last column".into()));
                }
                label_col = Some(i);
            } else if h == format!("f{n_features}") {
                n_features += 1;
            } else {
                return Err(Error::InvalidArgument(format!(
                    "unexpected column '{h}' (expected f{n_features} or label)"
                )));
            }
        }
        if n_features == 0 {
            return Err(Error::InvalidArgument("dataset has no feature columns".into()));
        }
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            for c in 0..n_features {
                let v: f64 = record[c].parse().map_err(|_| {
                    Error::InvalidArgument(format!("row {row}, column f{c}: '{}' is not a number", &record[c]))
                })?;
                values.push(v);
            }
            if let Some(lc) = label_col {
                let l: i64 = record[lc].parse().map_err(|_| {
                    Error::InvalidArgument(format!("row {row}: label '{}' is not an integer", &record[lc]))
                })?;
                labels.push(l);
            }
        }
        let n = values.len() / n_features;
        let points = DMatrix::from_row_slice(n, n_features, &values);
        Self::new(name, points, label_col.map(|_| labels))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(name, file)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dims()).map(|c| format!("f{c}")).collect();
        if self.labels.is_some() {
            header.push("label".into());
        }
        w.write_record(&header)?;
        for r in 0..self.len() {
            let mut rec: Vec<String> = (0..self.dims()).map(|c| self.points[(r, c)].to_string()).collect();
            if let Some(l) = &self.labels {
                rec.push(l[r].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Draws `n` distinct rows without replacement, in draw order.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n > self.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot subsample {n} of {} points",
                self.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx = sample(&mut rng, self.len(), n).into_vec();
        Ok(self.select(&idx))
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        let points = DMatrix::from_fn(rows.len(), self.dims(), |r, c| self.points[(rows[r], c)]);
        let labels = self.labels.as_ref().map(|l| rows.iter().map(|&r| l[r]).collect());
        Dataset {
            name: self.name.clone(),
            points,
            labels,
        }
    }
}

/// Maps every feature column affinely onto `[-1, 1]`; constant columns map to 0.
pub fn rescale_features(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.nrows() < 2 {
        return Err(Error::InvalidArgument("need at least two points to rescale".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature matrix"));
    }
    let mut out = x.clone();
    for c in 0..x.ncols() {
        let col = x.column(c);
        let lo = col.min();
        let hi = col.max();
        let span = hi - lo;
        for r in 0..x.nrows() {
            out[(r, c)] = if span > 0.0 {
                (2.0 * (x[(r, c)] - lo) / span - 1.0).clamp(-1.0, 1.0)
            } else {
                0.0
            };
        }
    }
    Ok(out)
}

/// Symmetric, nonnegative edge weights with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMatrix {
    w: DMatrix<f64>,
    gamma: f64,
    k: Option<usize>,
}

impl AffinityMatrix {
    /// Wraps an explicit weight matrix after checking the invariants.
    pub fn from_weights(w: DMatrix<f64>, gamma: f64) -> Result<Self> {
        let n = w.nrows();
        if w.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: w.ncols(),
            });
        }
        for i in 0..n {
            if w[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument("affinity diagonal must be zero".into()));
            }
            for j in 0..n {
                let v = w[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidArgument(format!(
                        "weight W[{i},{j}] = {v} outside [0, 1]"
                    )));
                }
                if v != w[(j, i)] {
                    return Err(Error::NotSymmetric((v - w[(j, i)]).abs()));
                }
            }
        }
        Ok(Self { w, gamma, k: None })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k(&self) -> Option<usize> {
        self.k
    }

    pub fn len(&self) -> usize {
        self.w.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.w.nrows() == 0
    }
}

/// `w_ij = exp(-γ ‖x_i - x_j‖²)` off the diagonal.
pub fn gaussian_affinity(x: &DMatrix<f64>, gamma: f64) -> Result<AffinityMatrix> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let n = x.nrows();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = (x.row(i) - x.row(j)).norm_squared();
            let v = (-gamma * d2).exp();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(AffinityMatrix { w, gamma, k: None })
}

/// Keeps edge `(i, j)` when either endpoint has the other among its `k`
/// strongest neighbours (ties go to the lower index). Kept weights are unchanged.
pub fn knn_sparsify(aff: &AffinityMatrix, k: usize) -> Result<AffinityMatrix> {
    let n = aff.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "k must satisfy 1 <= k < N = {n}, got {k}"
        )));
    }
    let w = &aff.w;
    let mut keep = vec![false; n * n];
    let mut neighbours: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        neighbours.clear();
        neighbours.extend((0..n).filter(|&j| j != i));
        neighbours.sort_by(|&a, &b| w[(i, b)].total_cmp(&w[(i, a)]).then(a.cmp(&b)));
        for &j in &neighbours[..k] {
            keep[i * n + j] = true;
            keep[j * n + i] = true;
        }
    }
    let sparse = DMatrix::from_fn(n, n, |i, j| if keep[i * n + j] { w[(i, j)] } else { 0.0 });
    Ok(AffinityMatrix {
        w: sparse,
        gamma: aff.gamma,
        k: Some(k),
    })
}

/// Number of connected components over edges heavier than [`EDGE_EPS`].
pub fn connected_components(w: &DMatrix<f64>) -> usize {
    let n = w.nrows();
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if !seen[v] && w[(u, v)] > EDGE_EPS {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    components
}

pub fn is_connected(aff: &AffinityMatrix) -> bool {
    connected_components(&aff.w) <= 1
}

/// Unnormalized graph Laplacian with its connectivity flag.
#[derive(Clone, Debug, PartialEq)]
pub struct Laplacian {
    l: DMatrix<f64>,
    connected: bool,
}

impl Laplacian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn connected(&self) -> bool {
        self.connected
    }

    pub fn len(&self) -> usize {
        self.l.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.l.nrows() == 0
    }

    /// Builds `D - W` directly from a weight matrix (validated as an affinity).
    pub fn from_weights(w: DMatrix<f64>) -> Result<Self> {
        Ok(build_laplacian(&AffinityMatrix::from_weights(w, 1.0)?))
    }
}

/// `L = diag(W·1) - W`.
pub fn build_laplacian(aff: &AffinityMatrix) -> Laplacian {
    let w = &aff.w;
    let n = w.nrows();
    let mut l = -w.clone();
    for i in 0..n {
        l[(i, i)] = w.row(i).sum();
    }
    Laplacian {
        l,
        connected: connected_components(w) <= 1,
    }
}

/// Principal axes of a point cloud.
#[derive(Clone, Debug)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Columns are principal axes, by decreasing variance.
    pub components: DMatrix<f64>,
    pub explained_variance: Vec<f64>,
}

impl Pca {
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        let total: f64 = self.explained_variance.iter().sum();
        self.explained_variance.iter().map(|v| v / total).collect()
    }

    pub fn transform(&self, x: &DMatrix<f64>, target_dims: usize) -> DMatrix<f64> {
        let centered = DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| x[(r, c)] - self.mean[c]);
        centered * self.components.columns(0, target_dims)
    }
}

/// Fits principal axes from the mean-centered covariance. Each axis is
/// oriented so its largest-magnitude loading is positive.
pub fn pca_fit(x: &DMatrix<f64>) -> Result<Pca> {
    let (n, d) = x.shape();
    if n < 2 || d == 0 {
        return Err(Error::InvalidArgument(
            "PCA needs at least two points and one feature".into(),
        ));
    }
    let mean: Vec<f64> = (0..d).map(|c| x.column(c).mean()).collect();
    let centered = DMatrix::from_fn(n, d, |r, c| x[(r, c)] - mean[c]);
    let mut cov = centered.transpose() * &centered / (n as f64 - 1.0);
    cov = (&cov + cov.transpose()) * 0.5;
    let eig = symmetric_eigen(&cov)?;
    let mut components = DMatrix::zeros(d, d);
    let mut explained_variance = Vec::with_capacity(d);
    for (out, k) in (0..d).rev().enumerate() {
        let mut v = eig.vector(k);
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.set_column(out, &nalgebra::DVector::from_vec(v));
        explained_variance.push(eig.eigenvalues[k].max(0.0));
    }
    Ok(Pca {
        mean,
        components,
        explained_variance,
    })
}

/// Projects onto the `target_dims` highest-variance principal axes.
pub fn pca_reduce(x: &DMatrix<f64>, target_dims: usize) -> Result<DMatrix<f64>> {
    if target_dims == 0 || target_dims > x.ncols() {
        return Err(Error::InvalidArgument(format!(
            "target_dims must be in 1..={}, got {target_dims}",
            x.ncols()
        )));
    }
    Ok(pca_fit(x)?.transform(x, target_dims))
}
