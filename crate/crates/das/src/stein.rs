//! Kernel-based estimation of the score function and of rows/diagonal of its
//! Jacobian from samples, via the ridge-regularized Stein identity with an
//! RBF kernel.

use crate::error::{DasError, Result};
use crate::synth::Dataset;
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BandwidthRule {
    MedianHeuristic,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinConfig {
    pub bandwidth: BandwidthRule,
    /// Ridge eta; applied as n * eta on the kernel diagonal.
    pub ridge: f64,
    /// Maximum right-hand-side columns per triangular solve batch.
    pub chunk: usize,
}

impl Default for SteinConfig {
    fn default() -> Self {
        SteinConfig {
            bandwidth: BandwidthRule::MedianHeuristic,
            ridge: 0.001,
            chunk: 256,
        }
    }
}

impl SteinConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ridge > 0.0) {
            return Err(DasError::InvalidParameter(format!(
                "ridge must be > 0, got {}",
                self.ridge
            )));
        }
        if let BandwidthRule::Fixed(h) = self.bandwidth {
            if !(h > 0.0) {
                return Err(DasError::InvalidParameter(format!(
                    "fixed bandwidth must be > 0, got {h}"
                )));
            }
        }
        if self.chunk == 0 {
            return Err(DasError::InvalidParameter("chunk must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-sample estimates of one row of the score Jacobian.
#[derive(Debug, Clone)]
pub struct ScoreJacobianRows {
    /// Column index of the leaf within the supplied dataset.
    pub row_index: usize,
    /// n x m, entry (i, j) = estimate of d s_l / d x_j at sample i.
    pub entries: DMatrix<f64>,
    /// Column labels: indices into the supplied dataset's columns.
    pub columns: Vec<usize>,
}

/// Median of pairwise Euclidean distances over a subsample of at most 1000
/// rows. Subsampling uses a seed derived from (n, d) so results are
/// reproducible. Falls back to 1.0 when the median is zero.
pub fn median_heuristic(x: &Dataset) -> Result<f64> {
    let n = x.n();
    if n < 2 {
        return Err(DasError::InsufficientSamples { needed: 2, got: n });
    }
    let cap = 1000usize;
    let rows: Vec<usize> = if n <= cap {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6d65_6469_616e ^ (n as u64) ^ ((x.d() as u64) << 32));
        let mut idx: Vec<usize> = sample(&mut rng, n, cap).into_vec();
        idx.sort_unstable();
        idx
    };
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for (a, &i) in rows.iter().enumerate() {
        let ri = x.row(i);
        for &j in rows.iter().skip(a + 1) {
            let rj = x.row(j);
            let sq: f64 = ri
                .iter()
                .zip(rj)
                .map(|(u, v)| (u - v) * (u - v))
                .sum();
            dists.push(sq.sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = dists.len();
    let med = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    Ok(if med > 0.0 { med } else { 1.0 })
}

/// Factorized kernel system shared by the estimators.
struct KernelSystem {
    xmat: DMatrix<f64>,
    kernel: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    row_sums: Vec<f64>,
    h2: f64,
    chunk: usize,
}

impl KernelSystem {
    fn build(x: &Dataset, cfg: &SteinConfig) -> Result<Self> {
        cfg.validate()?;
        let n = x.n();
        if n < 2 {
            return Err(DasError::InsufficientSamples { needed: 2, got: n });
        }
        let d = x.d();
        let h = match cfg.bandwidth {
            BandwidthRule::MedianHeuristic => median_heuristic(x)?,
            BandwidthRule::Fixed(h) => h,
        };
        let h2 = h * h;
        let xmat = DMatrix::from_fn(n, d, |i, j| x.get(i, j));
        let mut kernel = DMatrix::zeros(n, n);
        for i in 0..n {
            kernel[(i, i)] = 1.0;
            let ri = x.row(i);
            for j in (i + 1)..n {
                let rj = x.row(j);
                let sq: f64 = ri
                    .iter()
                    .zip(rj)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum();
                let k = (-sq / (2.0 * h2)).exp();
                kernel[(i, j)] = k;
                kernel[(j, i)] = k;
            }
        }
        let row_sums: Vec<f64> = (0..n).map(|i| kernel.row(i).sum()).collect();
        let chol = factorize(&kernel, n, cfg.ridge)?;
        Ok(KernelSystem {
            xmat,
            kernel,
            chol,
            row_sums,
            h2,
            chunk: cfg.chunk,
        })
    }

    fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = rhs.clone();
        let cols = rhs.ncols();
        let mut start = 0;
        while start < cols {
            let len = self.chunk.min(cols - start);
            let mut block = out.columns_mut(start, len);
            self.chol.solve_mut(&mut block);
            start += len;
        }
        out
    }

    /// First-order estimate G of the score at each sample.
    fn gradient(&self) -> DMatrix<f64> {
        let kx = &self.kernel * &self.xmat;
        let n = self.xmat.nrows();
        let d = self.xmat.ncols();
        let mut rhs = DMatrix::zeros(n, d);
        for i in 0..n {
            for j in 0..d {
                rhs[(i, j)] = (kx[(i, j)] - self.row_sums[i] * self.xmat[(i, j)]) / self.h2;
            }
        }
        self.solve(&rhs)
    }

    /// Second-derivative kernel sums for the diagonal:
    /// N_ij = sum_k ((x_i - x_k)_j^2 / h^4 - 1 / h^2) K_ik.
    fn diag_second_rhs(&self) -> DMatrix<f64> {
        let n = self.xmat.nrows();
        let d = self.xmat.ncols();
        let xsq = self.xmat.map(|v| v * v);
        let kx = &self.kernel * &self.xmat;
        let kxsq = &self.kernel * &xsq;
        let h4 = self.h2 * self.h2;
        DMatrix::from_fn(n, d, |i, j| {
            let xij = self.xmat[(i, j)];
            (xij * xij * self.row_sums[i] - 2.0 * xij * kx[(i, j)] + kxsq[(i, j)]) / h4
                - self.row_sums[i] / self.h2
        })
    }

    /// Second-derivative kernel sums for row l:
    /// M_ij = sum_k (x_i - x_k)_l (x_i - x_k)_j K_ik / h^4, minus the
    /// diagonal correction sum_k K_ik / h^2 at j = l.
    fn row_second_rhs(&self, l: usize) -> DMatrix<f64> {
        let n = self.xmat.nrows();
        let d = self.xmat.ncols();
        let kx = &self.kernel * &self.xmat;
        // Columns scaled by coordinate l per row: (x_k)_l * (x_k)_j.
        let scaled = DMatrix::from_fn(n, d, |k, j| self.xmat[(k, l)] * self.xmat[(k, j)]);
        let kscaled = &self.kernel * &scaled;
        let h4 = self.h2 * self.h2;
        let mut m = DMatrix::from_fn(n, d, |i, j| {
            let xil = self.xmat[(i, l)];
            let xij = self.xmat[(i, j)];
            (xil * xij * self.row_sums[i] - xil * kx[(i, j)] - xij * kx[(i, l)]
                + kscaled[(i, j)])
                / h4
        });
        for i in 0..n {
            m[(i, l)] -= self.row_sums[i] / self.h2;
        }
        m
    }
}

fn factorize(
    kernel: &DMatrix<f64>,
    n: usize,
    ridge: f64,
) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    for eta in [ridge, ridge * 10.0] {
        let mut reg = kernel.clone();
        for i in 0..n {
            reg[(i, i)] += n as f64 * eta;
        }
        if let Some(c) = nalgebra::Cholesky::new(reg) {
            return Ok(c);
        }
    }
    Err(DasError::NumericalFailure(
        "kernel factorization failed after ridge increase".into(),
    ))
}

/// Per-sample score estimates, n x d.
pub fn stein_gradient(x: &Dataset, cfg: &SteinConfig) -> Result<DMatrix<f64>> {
    Ok(KernelSystem::build(x, cfg)?.gradient())
}

/// Per-sample estimates of the score Jacobian's diagonal, n x d.
pub fn stein_hessian_diag(x: &Dataset, cfg: &SteinConfig) -> Result<DMatrix<f64>> {
    let sys = KernelSystem::build(x, cfg)?;
    let grad = sys.gradient();
    let second = sys.solve(&sys.diag_second_rhs());
    Ok(DMatrix::from_fn(grad.nrows(), grad.ncols(), |i, j| {
        -grad[(i, j)] * grad[(i, j)] + second[(i, j)]
    }))
}

/// Per-sample estimates of row `l` of the score Jacobian, n x d over all
/// columns of `x` (entry (i, l) is the diagonal element).
pub fn stein_hessian_row(x: &Dataset, l: usize, cfg: &SteinConfig) -> Result<ScoreJacobianRows> {
    if l >= x.d() {
        return Err(DasError::InvalidParameter(format!(
            "row index {l} out of range for d = {}",
            x.d()
        )));
    }
    let sys = KernelSystem::build(x, cfg)?;
    let grad = sys.gradient();
    let second = sys.solve(&sys.row_second_rhs(l));
    let entries = DMatrix::from_fn(grad.nrows(), grad.ncols(), |i, j| {
        -grad[(i, l)] * grad[(i, j)] + second[(i, j)]
    });
    Ok(ScoreJacobianRows {
        row_index: l,
        entries,
        columns: (0..x.d()).collect(),
    })
}
