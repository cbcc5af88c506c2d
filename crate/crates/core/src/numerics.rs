//! Small dense linear algebra kernel: least squares by Cholesky on the normal
//! equations, sparse projection, power iteration and Mahalanobis norms.

use crate::error::{Error, Result};
use crate::rng::{tag, Stream};
use serde::{Deserialize, Serialize};
use std::ops::{Deref, DerefMut};

/// Row-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Dense vector of finite reals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn try_new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("vector"));
        }
        Ok(Self(entries))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn nnz(&self) -> usize {
        self.0.iter().filter(|&&x| x != 0.0).count()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|x| c * x).collect())
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for DenseVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DenseVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                what: "matrix entries",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    what: "matrix row",
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ v`
    pub fn t_matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// `AᵀA` as a dense `cols × cols` matrix.
    pub fn gram(&self) -> DenseMatrix {
        let p = self.cols;
        let mut g = vec![0.0; p * p];
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..p {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                let dst = &mut g[a * p..a * p + p];
                for b in a..p {
                    dst[b] += ra * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g[a * p + b] = g[b * p + a];
            }
        }
        DenseMatrix {
            rows: p,
            cols: p,
            data: g,
        }
    }

    /// Submatrix made of the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }
}

/// In-place Cholesky of a symmetric `p × p` matrix (lower triangle).
fn cholesky(g: &mut [f64], p: usize) -> Result<()> {
    let scale = (0..p).map(|i| g[i * p + i].abs()).fold(0.0, f64::max);
    let floor = 1e-13 * scale.max(f64::MIN_POSITIVE);
    for j in 0..p {
        let mut d = g[j * p + j];
        for k in 0..j {
            d -= g[j * p + k] * g[j * p + k];
        }
        if !(d > floor) {
            return Err(Error::RankDeficient);
        }
        let d = d.sqrt();
        g[j * p + j] = d;
        for i in j + 1..p {
            let mut s = g[i * p + j];
            for k in 0..j {
                s -= g[i * p + k] * g[j * p + k];
            }
            g[i * p + j] = s / d;
        }
    }
    Ok(())
}

fn cholesky_solve(l: &[f64], p: usize, rhs: &mut [f64]) {
    for i in 0..p {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[i * p + k] * rhs[k];
        }
        rhs[i] = s / l[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = rhs[i];
        for k in i + 1..p {
            s -= l[k * p + i] * rhs[k];
        }
        rhs[i] = s / l[i * p + i];
    }
}

/// `argmin_w ‖A w − b‖² + ridge ‖w‖²` via the normal equations.
///
/// Fails with [`Error::RankDeficient`] when the (regularized) normal matrix
/// is not numerically positive definite.
pub fn solve_least_squares(a: &DenseMatrix, b: &[f64], ridge: f64) -> Result<DenseVector> {
    if b.len() != a.rows() {
        return Err(Error::Dimension {
            what: "least squares rhs",
            expected: a.rows(),
            found: b.len(),
        });
    }
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::InvalidSpec("least squares needs n, p >= 1".into()));
    }
    if !(ridge >= 0.0) {
        return Err(Error::InvalidSpec(format!("ridge must be >= 0, got {ridge}")));
    }
    let p = a.cols();
    let mut g = a.gram().data;
    for i in 0..p {
        g[i * p + i] += ridge;
    }
    let mut rhs = a.t_matvec(b);
    cholesky(&mut g, p)?;
    cholesky_solve(&g, p, &mut rhs);
    DenseVector::try_new(rhs)
}

/// Jitter used when the plain normal equations are singular.
pub fn default_jitter(a: &DenseMatrix) -> f64 {
    let p = a.cols().max(1) as f64;
    let trace: f64 = a.as_slice().iter().map(|x| x * x).sum();
    1e-8 * trace / p
}

/// Least squares that retries once with [`default_jitter`] on rank deficiency.
pub fn solve_least_squares_jittered(a: &DenseMatrix, b: &[f64]) -> Result<DenseVector> {
    match solve_least_squares(a, b, 0.0) {
        Err(Error::RankDeficient) => solve_least_squares(a, b, default_jitter(a)),
        other => other,
    }
}

/// Keeps the `k` largest-magnitude entries of `v` and zeroes the rest.
/// Among equal magnitudes the lower index wins.
pub fn top_k_project(v: &[f64], k: usize) -> DenseVector {
    let p = v.len();
    if k >= p {
        return DenseVector(v.to_vec());
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
    let mut out = vec![0.0; p];
    for &i in &order[..k] {
        out[i] = v[i];
    }
    DenseVector(out)
}

const POWER_MAX_ITERS: usize = 200;
const POWER_TOL: f64 = 1e-9;

/// `λ_max(AᵀA)` by power iteration from a fixed pseudo-random start.
pub fn spectral_norm_sq(a: &DenseMatrix) -> f64 {
    let p = a.cols();
    if p == 0 || a.rows() == 0 {
        return 0.0;
    }
    let mut stream = Stream::derived(0, &[tag::POWER_ITERATION, p as u64]);
    let mut v: Vec<f64> = (0..p).map(|_| stream.normal()).collect();
    let n0 = norm2(&v);
    v.iter_mut().for_each(|x| *x /= n0);

    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let av = a.matvec(&v);
        let w = a.t_matvec(&av);
        // Rayleigh quotient of the unit vector v
        let next = dot(&av, &av);
        let wn = norm2(&w);
        if wn == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / wn).collect();
        let converged = (next - lambda).abs() <= POWER_TOL * next.abs();
        lambda = next;
        if converged {
            break;
        }
    }
    let av = a.matvec(&v);
    dot(&av, &av).max(lambda)
}

/// `√(wᵀ Σ w)`.
pub fn sigma_norm(w: &[f64], sigma: &DenseMatrix) -> Result<f64> {
    if sigma.rows() != w.len() || sigma.cols() != w.len() {
        return Err(Error::Dimension {
            what: "sigma norm",
            expected: w.len(),
            found: sigma.rows(),
        });
    }
    let q = dot(w, &sigma.matvec(w));
    if q < -1e-12 {
        return Err(Error::NotPsd(q));
    }
    Ok(q.max(0.0).sqrt())
}

/// Σ-norm for a diagonal covariance given by its diagonal.
pub fn sigma_norm_diag(w: &[f64], diag: &[f64]) -> f64 {
    w.iter()
        .zip(diag)
        .map(|(x, d)| d * x * x)
        .sum::<f64>()
        .sqrt()
}
