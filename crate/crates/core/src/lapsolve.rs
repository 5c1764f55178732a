//! Laplacian systems `L x = y` with `L = B^T W B`.
//!
//! Two backends: a dense Cholesky factorization of `L + J/n` (the oracle, exact
//! to machine precision) and Jacobi-preconditioned conjugate gradient.
//!
//! The iterative backend certifies the relative `L`-norm error through the
//! preconditioned residual. With `A = D^{-1/2} L D^{-1/2}` and `r = y - L x`,
//!
//! ```text
//! ||x - L^+ y||_L / ||L^+ y||_L <= sqrt(2 / lambda_min(A)) * sqrt(r^T D^-1 r / y^T D^-1 y)
//! ```
//!
//! because `lambda_max(A) <= 2` for any Laplacian. `lambda_min(A)` (smallest
//! nonzero eigenvalue) is estimated by the smallest Ritz value of the Lanczos
//! tridiagonal that CG builds implicitly, so the conversion factor costs nothing
//! beyond a bisection on a `k x k` tridiagonal.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::graph::Graph;

pub const DEFAULT_ORACLE_CAP: usize = 512;
pub const DEFAULT_EPS_L: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 20_000;

/// Positive, finite conductances, one per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights(Vec<f64>);

impl EdgeWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((e, w)) = values
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidParameter(format!(
                "edge weight {e} must be positive and finite, got {w}"
            )));
        }
        Ok(EdgeWeights(values))
    }

    pub fn uniform(m: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    ExactDense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub mode: SolverMode,
    /// Relative `L`-norm error bound for the iterative backend.
    pub eps_l: f64,
    pub max_iterations: usize,
    /// Largest `n` the dense backend accepts.
    pub oracle_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: SolverMode::Iterative,
            eps_l: DEFAULT_EPS_L,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            oracle_cap: DEFAULT_ORACLE_CAP,
        }
    }
}

impl SolverConfig {
    pub fn exact() -> Self {
        SolverConfig {
            mode: SolverMode::ExactDense,
            ..Default::default()
        }
    }

    pub fn iterative(eps_l: f64) -> Self {
        SolverConfig {
            eps_l,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == SolverMode::Iterative && !(self.eps_l > 0.0 && self.eps_l < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps_L must lie in (0, 1), got {}",
                self.eps_l
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Row-major `rows x cols` block of right-hand sides or solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Block {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Block {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut block = Block::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            check_len(rows, col.len())?;
            for (i, &v) in col.iter().enumerate() {
                block.data[i * block.cols + j] = v;
            }
        }
        Ok(block)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
}

/// Compressed weighted adjacency: `(L x)_u = d_u x_u - sum_v w_uv x_v`.
#[derive(Debug, Clone)]
pub struct Laplacian {
    diag: Vec<f64>,
    offsets: Vec<usize>,
    neighbor: Vec<usize>,
    weight: Vec<f64>,
}

impl Laplacian {
    pub fn new(g: &Graph, w: &EdgeWeights) -> Result<Self> {
        check_len(g.m(), w.len())?;
        let n = g.n();
        let mut diag = vec![0.0; n];
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbor = Vec::with_capacity(2 * g.m());
        let mut weight = Vec::with_capacity(2 * g.m());
        offsets.push(0);
        for u in 0..n {
            for &(v, e) in g.neighbors(u) {
                let we = w.values()[e];
                diag[u] += we;
                neighbor.push(v);
                weight.push(we);
            }
            offsets.push(neighbor.len());
        }
        Ok(Laplacian {
            diag,
            offsets,
            neighbor,
            weight,
        })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|u| {
                let mut acc = self.diag[u] * x[u];
                for k in self.offsets[u]..self.offsets[u + 1] {
                    acc -= self.weight[k] * x[self.neighbor[k]];
                }
                acc
            })
            .collect()
    }

    fn apply_block(&self, x: &[f64], out: &mut [f64], cols: usize) {
        for (u, row) in out.chunks_exact_mut(cols).enumerate() {
            self.apply_row(x, row, u, cols);
        }
    }

    #[inline]
    fn apply_row(&self, x: &[f64], row: &mut [f64], u: usize, cols: usize) {
        let d = self.diag[u];
        for (o, &xi) in row.iter_mut().zip(&x[u * cols..(u + 1) * cols]) {
            *o = d * xi;
        }
        let span = self.offsets[u]..self.offsets[u + 1];
        for (&wk, &v) in self.weight[span.clone()].iter().zip(&self.neighbor[span]) {
            for (o, &xv) in row.iter_mut().zip(&x[v * cols..(v + 1) * cols]) {
                *o -= wk * xv;
            }
        }
    }

    /// `out = L x` blockwise, accumulating the columnwise dot products `x . L x` into `dots`.
    fn apply_block_dot(&self, x: &[f64], out: &mut [f64], dots: &mut [f64], cols: usize) {
        dots.iter_mut().for_each(|v| *v = 0.0);
        for (u, row) in out.chunks_exact_mut(cols).enumerate() {
            self.apply_row(x, row, u, cols);
            for ((acc, &a), &b) in dots.iter_mut().zip(&x[u * cols..(u + 1) * cols]).zip(row.iter()) {
                *acc += a * b;
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut l = DMatrix::zeros(n, n);
        for u in 0..n {
            l[(u, u)] = self.diag[u];
            for k in self.offsets[u]..self.offsets[u + 1] {
                l[(u, self.neighbor[k])] -= self.weight[k];
            }
        }
        l
    }
}

/// Result of a single solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Achieved `||L x - y||_2 / ||y||_2`.
    pub residual: f64,
    /// Whether `y` had a nonzero mean that was projected out.
    pub projected: bool,
}

#[derive(Debug, Clone)]
pub struct BatchSolution {
    pub x: Block,
    pub iterations: usize,
    pub residual: f64,
    pub projected: bool,
}

enum Backend {
    Dense(Cholesky<f64, Dyn>),
    Iterative,
}

/// A reusable solver for one weighted graph.
pub struct LaplacianSolver {
    laplacian: Laplacian,
    cfg: SolverConfig,
    backend: Backend,
}

impl LaplacianSolver {
    pub fn new(g: &Graph, w: &EdgeWeights, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let laplacian = Laplacian::new(g, w)?;
        let backend = match cfg.mode {
            SolverMode::ExactDense => Backend::Dense(grounded_cholesky(&laplacian, cfg.oracle_cap)?),
            SolverMode::Iterative => Backend::Iterative,
        };
        Ok(LaplacianSolver {
            laplacian,
            cfg: *cfg,
            backend,
        })
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.laplacian
    }

    pub fn solve(&self, y: &[f64]) -> Result<Solution> {
        check_len(self.laplacian.n(), y.len())?;
        let rhs = Block::from_columns(y.len(), &[y.to_vec()])?;
        let batch = self.solve_batch(&rhs)?;
        Ok(Solution {
            x: batch.x.column(0),
            iterations: batch.iterations,
            residual: batch.residual,
            projected: batch.projected,
        })
    }

    /// Solves every column of `rhs` independently. Columns are processed in
    /// parallel chunks; the result for each column does not depend on chunking.
    pub fn solve_batch(&self, rhs: &Block) -> Result<BatchSolution> {
        let n = self.laplacian.n();
        check_len(n, rhs.rows())?;
        let mut rhs = rhs.clone();
        let projected = project_columns(&mut rhs);
        let x = match &self.backend {
            Backend::Dense(chol) => dense_solve_block(chol, &rhs),
            Backend::Iterative => {
                const CHUNK: usize = 64;
                let chunks: Vec<(usize, usize)> = (0..rhs.cols())
                    .step_by(CHUNK)
                    .map(|s| (s, (s + CHUNK).min(rhs.cols())))
                    .collect();
                let solved: Vec<Result<(Block, usize)>> = chunks
                    .par_iter()
                    .map(|&(s, t)| {
                        let sub = sub_block(&rhs, s, t);
                        pcg_block(&self.laplacian, &sub, &self.cfg)
                    })
                    .collect();
                let mut x = Block::zeros(n, rhs.cols());
                let mut iterations = 0;
                for (&(s, t), part) in chunks.iter().zip(solved) {
                    let (part, iters) = part?;
                    iterations = iterations.max(iters);
                    for i in 0..n {
                        x.row_mut(i)[s..t].copy_from_slice(part.row(i));
                    }
                }
                return Ok(self.finish(x, &rhs, iterations, projected));
            }
        };
        Ok(self.finish(x, &rhs, 0, projected))
    }

    fn finish(&self, mut x: Block, rhs: &Block, iterations: usize, projected: bool) -> BatchSolution {
        project_columns(&mut x);
        let mut lx = vec![0.0; x.data.len()];
        self.laplacian.apply_block(&x.data, &mut lx, x.cols);
        let mut residual: f64 = 0.0;
        for j in 0..x.cols {
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..x.rows {
                let yi = rhs.get(i, j);
                let ri = lx[i * x.cols + j] - yi;
                num += ri * ri;
                den += yi * yi;
            }
            if den > 0.0 {
                residual = residual.max((num / den).sqrt());
            }
        }
        BatchSolution {
            x,
            iterations,
            residual,
            projected,
        }
    }
}

/// Solves `L x = y` once. See [`LaplacianSolver`] for repeated solves.
pub fn solve(g: &Graph, w: &EdgeWeights, y: &[f64], cfg: &SolverConfig) -> Result<Solution> {
    LaplacianSolver::new(g, w, cfg)?.solve(y)
}

/// Dense Moore-Penrose pseudoinverse of `L`, computed as `(L + J/n)^{-1} - J/n`.
pub fn pseudoinverse_dense(g: &Graph, w: &EdgeWeights) -> Result<DMatrix<f64>> {
    pseudoinverse_dense_capped(g, w, DEFAULT_ORACLE_CAP)
}

pub fn pseudoinverse_dense_capped(g: &Graph, w: &EdgeWeights, cap: usize) -> Result<DMatrix<f64>> {
    let laplacian = Laplacian::new(g, w)?;
    let n = laplacian.n();
    let chol = grounded_cholesky(&laplacian, cap)?;
    let mut inv = chol.inverse();
    let shift = 1.0 / n as f64;
    inv.iter_mut().for_each(|v| *v -= shift);
    // symmetrize away rounding asymmetry
    let sym = (&inv + inv.transpose()) * 0.5;
    Ok(sym)
}

fn grounded_cholesky(laplacian: &Laplacian, cap: usize) -> Result<Cholesky<f64, Dyn>> {
    let n = laplacian.n();
    if n > cap {
        return Err(Error::CapExceeded { size: n, cap });
    }
    let mut l = laplacian.to_dense();
    let shift = 1.0 / n as f64;
    l.iter_mut().for_each(|v| *v += shift);
    Cholesky::new(l).ok_or_else(|| Error::InvalidGraph("grounded Laplacian is not positive definite".into()))
}

fn dense_solve_block(chol: &Cholesky<f64, Dyn>, rhs: &Block) -> Block {
    let rhs_mat = DMatrix::from_fn(rhs.rows, rhs.cols, |i, j| rhs.get(i, j));
    let sol = chol.solve(&rhs_mat);
    let mut x = Block::zeros(rhs.rows, rhs.cols);
    for i in 0..rhs.rows {
        for j in 0..rhs.cols {
            x.data[i * rhs.cols + j] = sol[(i, j)];
        }
    }
    x
}

/// Removes each column's mean. Returns whether any mean was non-negligible.
fn project_columns(block: &mut Block) -> bool {
    let mut projected = false;
    if block.rows == 0 {
        return false;
    }
    for j in 0..block.cols {
        let (mut sum, mut l1) = (0.0, 0.0);
        for i in 0..block.rows {
            let v = block.get(i, j);
            sum += v;
            l1 += v.abs();
        }
        if sum == 0.0 {
            continue;
        }
        if sum.abs() > 1e-9 * l1.max(1.0) {
            projected = true;
        }
        let mean = sum / block.rows as f64;
        for i in 0..block.rows {
            block.data[i * block.cols + j] -= mean;
        }
    }
    projected
}

fn sub_block(block: &Block, start: usize, end: usize) -> Block {
    let cols = end - start;
    let mut out = Block::zeros(block.rows, cols);
    for i in 0..block.rows {
        out.row_mut(i).copy_from_slice(&block.row(i)[start..end]);
    }
    out
}

/// Per-column CG state kept alongside the shared row-major work arrays.
struct ColumnState {
    id: usize,
    rz: f64,
    ynorm: f64,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    next_check: usize,
}

/// Lockstep Jacobi-PCG over the columns of `rhs`. Converged columns are
/// written out and compacted away.
fn pcg_block(lap: &Laplacian, rhs: &Block, cfg: &SolverConfig) -> Result<(Block, usize)> {
    let n = rhs.rows;
    let mut out = Block::zeros(n, rhs.cols);
    let inv_diag: Vec<f64> = lap.diag.iter().map(|d| 1.0 / d).collect();

    let mut states: Vec<ColumnState> = Vec::new();
    let mut live: Vec<usize> = Vec::new();
    for j in 0..rhs.cols {
        let ynorm: f64 = (0..n).map(|i| rhs.get(i, j).powi(2) * inv_diag[i]).sum();
        if ynorm > 0.0 {
            live.push(j);
            states.push(ColumnState {
                id: j,
                rz: ynorm,
                ynorm,
                alphas: Vec::new(),
                betas: Vec::new(),
                next_check: 0,
            });
        }
    }
    let mut k = live.len();
    if k == 0 {
        return Ok((out, 0));
    }
    let mut x = vec![0.0; n * k];
    let mut r = sub_columns(rhs, &live);
    let mut p: Vec<f64> = r
        .chunks(k)
        .zip(&inv_diag)
        .flat_map(|(row, &di)| row.iter().map(move |v| v * di))
        .collect();
    let mut q = vec![0.0; n * k];
    let mut pq = vec![0.0; k];
    let mut rz_new = vec![0.0; k];
    let mut alpha = vec![0.0; k];
    let mut beta = vec![0.0; k];
    let mut r_sum = vec![0.0; k];
    let mut r_dot_d = vec![0.0; k];
    let mut mean = vec![0.0; k];
    let inv_diag_sum: f64 = inv_diag.iter().sum();
    let mut worst = 0.0f64;

    let mut iteration = 0;
    while k > 0 {
        if iteration >= cfg.max_iterations {
            for s in &states {
                worst = worst.max((s.rz / s.ynorm).sqrt());
            }
            return Err(Error::NonConvergence {
                iterations: iteration,
                residual: worst,
            });
        }
        iteration += 1;
        lap.apply_block_dot(&p, &mut q, &mut pq, k);
        for j in 0..k {
            alpha[j] = if pq[j] > 0.0 { states[j].rz / pq[j] } else { 0.0 };
        }
        rz_new.iter_mut().for_each(|v| *v = 0.0);
        r_sum.iter_mut().for_each(|v| *v = 0.0);
        r_dot_d.iter_mut().for_each(|v| *v = 0.0);
        let rows = x
            .chunks_exact_mut(k)
            .zip(r.chunks_exact_mut(k))
            .zip(p.chunks_exact(k).zip(q.chunks_exact(k)))
            .zip(&inv_diag);
        for (((xr, rr), (pr, qr)), &di) in rows {
            let cols = xr
                .iter_mut()
                .zip(rr.iter_mut())
                .zip(pr.iter().zip(qr))
                .zip(alpha.iter().zip(rz_new.iter_mut()))
                .zip(r_sum.iter_mut().zip(r_dot_d.iter_mut()));
            for ((((xv, rv), (&pv, &qv)), (&a, acc)), (sum, dot)) in cols {
                *xv += a * pv;
                *rv -= a * qv;
                *sum += *rv;
                *dot += *rv * di;
                *acc += *rv * *rv * di;
            }
        }
        // Rounding slowly pushes r off the mean-zero subspace; once that drift
        // is comparable to r, CG starts resolving the null space. Remove the
        // mean now (applied in the direction update below) and correct rz.
        for j in 0..k {
            let mu = r_sum[j] / n as f64;
            mean[j] = mu;
            rz_new[j] += mu * (mu * inv_diag_sum - 2.0 * r_dot_d[j]);
        }
        let mut done = vec![false; k];
        for j in 0..k {
            let s = &mut states[j];
            if !(pq[j] > 0.0) || !rz_new[j].is_finite() {
                // breakdown: Krylov space exhausted
                done[j] = true;
                continue;
            }
            beta[j] = rz_new[j] / s.rz;
            s.alphas.push(alpha[j]);
            s.betas.push(beta[j]);
            s.rz = rz_new[j];
            let relres = (s.rz / s.ynorm).sqrt();
            if relres <= cfg.eps_l && iteration >= s.next_check {
                let lambda = smallest_ritz_value(&s.alphas, &s.betas);
                let factor = (2.0 / lambda.max(f64::MIN_POSITIVE)).sqrt();
                if factor * relres <= cfg.eps_l || s.rz == 0.0 {
                    done[j] = true;
                } else {
                    s.next_check = iteration + 1 + iteration / 8;
                }
            }
        }
        for ((pr, rr), &di) in p.chunks_exact_mut(k).zip(r.chunks_exact_mut(k)).zip(&inv_diag) {
            for ((pv, rv), (&b, &mu)) in pr.iter_mut().zip(rr.iter_mut()).zip(beta.iter().zip(&mean)) {
                *rv -= mu;
                *pv = *rv * di + b * *pv;
            }
        }
        if done.iter().any(|&d| d) {
            let keep: Vec<usize> = (0..k).filter(|&j| !done[j]).collect();
            for j in (0..k).filter(|&j| done[j]) {
                let id = states[j].id;
                for i in 0..n {
                    out.data[i * out.cols + id] = x[i * k + j];
                }
            }
            x = compact(&x, k, &keep);
            r = compact(&r, k, &keep);
            p = compact(&p, k, &keep);
            let mut idx = 0;
            states.retain(|_| {
                let keep_it = !done[idx];
                idx += 1;
                keep_it
            });
            k = keep.len();
            q = vec![0.0; n * k];
            pq.truncate(k);
            rz_new.truncate(k);
            alpha.truncate(k);
            beta.truncate(k);
            r_sum.truncate(k);
            r_dot_d.truncate(k);
            mean.truncate(k);
        }
    }
    Ok((out, iteration))
}

fn sub_columns(block: &Block, cols: &[usize]) -> Vec<f64> {
    let k = cols.len();
    let mut out = vec![0.0; block.rows * k];
    for i in 0..block.rows {
        for (jj, &j) in cols.iter().enumerate() {
            out[i * k + jj] = block.get(i, j);
        }
    }
    out
}

fn compact(data: &[f64], k: usize, keep: &[usize]) -> Vec<f64> {
    let rows = data.len().checked_div(k).unwrap_or(0);
    let mut out = Vec::with_capacity(rows * keep.len());
    for i in 0..rows {
        for &j in keep {
            out.push(data[i * k + j]);
        }
    }
    out
}

/// Smallest eigenvalue of the Lanczos tridiagonal assembled from CG step
/// lengths `alphas` and direction coefficients `betas`, by Sturm bisection.
pub(crate) fn smallest_ritz_value(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    if k == 0 {
        return 0.0;
    }
    let mut diag = Vec::with_capacity(k);
    let mut off_sq = Vec::with_capacity(k.saturating_sub(1));
    for j in 0..k {
        let mut d = 1.0 / alphas[j];
        if j > 0 {
            d += betas[j - 1] / alphas[j - 1];
        }
        diag.push(d);
        if j + 1 < k {
            off_sq.push(betas[j] / (alphas[j] * alphas[j]));
        }
    }
    // number of eigenvalues strictly below x
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut q = diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for j in 1..k {
            let prev = if q == 0.0 { f64::EPSILON } else { q };
            q = diag[j] - x - off_sq[j - 1] / prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let upper_bound = diag
        .iter()
        .enumerate()
        .map(|(j, d)| {
            let left = if j > 0 { off_sq[j - 1].sqrt() } else { 0.0 };
            let right = if j + 1 < k { off_sq[j].sqrt() } else { 0.0 };
            d + left + right
        })
        .fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0, upper_bound);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::close;

    mod approx_eq {
        pub fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol * (1.0 + b.abs())
        }
    }

    fn k2() -> Graph {
        Graph::parse_edge_list("0 1").unwrap()
    }

    fn triangle() -> Graph {
        Graph::parse_edge_list("0 1\n1 2\n0 2").unwrap()
    }

    #[test]
    fn k2_single_resistor() {
        let g = k2();
        let w = EdgeWeights::uniform(1, 1.0).unwrap();
        for cfg in [SolverConfig::exact(), SolverConfig::default()] {
            let sol = solve(&g, &w, &[-1.0, 1.0], &cfg).unwrap();
            assert!(close(sol.x[0], -0.5, 1e-12) && close(sol.x[1], 0.5, 1e-12), "{:?}", sol.x);
            assert!(!sol.projected);
        }
    }

    #[test]
    fn triangle_effective_resistance() {
        let g = triangle();
        let w = EdgeWeights::uniform(3, 1.0).unwrap();
        for cfg in [SolverConfig::exact(), SolverConfig::default()] {
            for &(u, v) in g.edges() {
                let mut y = vec![0.0; 3];
                y[u] = -1.0;
                y[v] = 1.0;
                let x = solve(&g, &w, &y, &cfg).unwrap().x;
                assert!(close(x[v] - x[u], 2.0 / 3.0, 1e-10));
            }
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = triangle();
        let w = EdgeWeights::uniform(3, 2.0).unwrap();
        for cfg in [SolverConfig::exact(), SolverConfig::default()] {
            let sol = solve(&g, &w, &[0.0; 3], &cfg).unwrap();
            assert_eq!(sol.x, vec![0.0; 3]);
        }
    }

    #[test]
    fn nonzero_mean_is_projected_and_recorded() {
        let g = triangle();
        let w = EdgeWeights::uniform(3, 1.0).unwrap();
        let sol = solve(&g, &w, &[1.0, 0.0, 0.0], &SolverConfig::default()).unwrap();
        assert!(sol.projected);
        assert!(sol.x.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn pseudoinverse_small_cases() {
        let p = pseudoinverse_dense(&k2(), &EdgeWeights::uniform(1, 1.0).unwrap()).unwrap();
        let expected = [[0.25, -0.25], [-0.25, 0.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(p[(i, j)], expected[i][j], 1e-14));
            }
        }
        let p = pseudoinverse_dense(&triangle(), &EdgeWeights::uniform(3, 1.0).unwrap()).unwrap();
        for i in 0..3 {
            assert!(close(p[(i, i)], 2.0 / 9.0, 1e-14));
            assert!(p.row(i).sum().abs() < 1e-14);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let g = triangle();
        let w = EdgeWeights::uniform(3, 1.0).unwrap();
        assert!(matches!(
            pseudoinverse_dense_capped(&g, &w, 2),
            Err(Error::CapExceeded { size: 3, cap: 2 })
        ));
        let cfg = SolverConfig {
            oracle_cap: 2,
            ..SolverConfig::exact()
        };
        assert!(LaplacianSolver::new(&g, &w, &cfg).is_err());
    }

    #[test]
    fn non_convergence_reports_residual() {
        let g = Graph::new(6, (0..5).map(|i| (i, i + 1))).unwrap();
        let w = EdgeWeights::new(vec![1.0, 1e3, 1e-3, 5.0, 1.0]).unwrap();
        let cfg = SolverConfig {
            max_iterations: 1,
            ..SolverConfig::default()
        };
        let y = [1.0, 0.0, 0.0, 0.0, 0.0, -1.0];
        match solve(&g, &w, &y, &cfg) {
            Err(Error::NonConvergence { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        let g = triangle();
        let w = EdgeWeights::uniform(3, 1.0).unwrap();
        assert!(matches!(
            solve(&g, &w, &[1.0, -1.0], &SolverConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Laplacian::new(&g, &EdgeWeights::uniform(2, 1.0).unwrap()).is_err());
    }

    #[test]
    fn invalid_config_and_weights() {
        assert!(EdgeWeights::new(vec![1.0, 0.0]).is_err());
        assert!(EdgeWeights::new(vec![f64::NAN]).is_err());
        assert!(SolverConfig::iterative(1.0).validate().is_err());
        assert!(SolverConfig::iterative(0.0).validate().is_err());
    }

    #[test]
    fn ritz_value_of_diagonal_case() {
        // one step: T = [1/alpha]
        assert!(close(smallest_ritz_value(&[2.0], &[0.0]), 0.5, 1e-12));
    }
}
