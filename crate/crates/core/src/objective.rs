//! Smooth part `f(x) = sum_j phi_j(e_j^T A x)` in partially separable form,
//! with residual/gradient oracles, per-block Lipschitz constants and the
//! column supports `I_i` that drive the per-iteration cost model.
//!
//! The matrix is stored column-block-major: for every block `i` we keep the
//! rows that touch it and the dense sub-block `A_ji` per touching row. That
//! is the only access pattern the solvers need (block gradients and
//! residual maintenance both walk one block column at a time).
//!
//! The objective is stateless: residuals `r = A x` are owned by the caller
//! and passed in, because the efficient solver maintains two of them.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::blockspace::{BlockMetric, BlockPartition, BlockVector, MetricBlock, Weights};
use crate::error::{Error, Result};

/// Convex scalar loss applied to one row of `A x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarLoss {
    /// `phi(t) = (t - b)^2 / 2`; smoothness constant 1.
    Square { target: f64 },
    /// `phi(t) = log(1 + exp(-b t))` with `b` in `{-1, +1}`; smoothness 1/4.
    Logistic { label: f64 },
}

impl ScalarLoss {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            ScalarLoss::Square { target } => {
                let d = t - target;
                0.5 * d * d
            }
            ScalarLoss::Logistic { label } => {
                // log(1+exp(u)) without overflow
                let u = -label * t;
                u.max(0.0) + (-u.abs()).exp().ln_1p()
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            ScalarLoss::Square { target } => t - target,
            ScalarLoss::Logistic { label } => -label / (1.0 + (label * t).exp()),
        }
    }

    /// Upper bound on `phi''`.
    pub fn curvature(&self) -> f64 {
        match self {
            ScalarLoss::Square { .. } => 1.0,
            ScalarLoss::Logistic { .. } => 0.25,
        }
    }

    pub fn is_square(&self) -> bool {
        matches!(self, ScalarLoss::Square { .. })
    }
}

/// Builds one square loss per entry of `targets`.
pub fn square_losses(targets: &[f64]) -> Vec<ScalarLoss> {
    targets.iter().map(|&b| ScalarLoss::Square { target: b }).collect()
}

/// Builds one logistic loss per label; labels must be -1 or +1.
pub fn logistic_losses(labels: &[f64]) -> Result<Vec<ScalarLoss>> {
    labels
        .iter()
        .map(|&b| {
            if b == 1.0 || b == -1.0 {
                Ok(ScalarLoss::Logistic { label: b })
            } else {
                Err(Error::InvalidObjective(format!(
                    "logistic labels must be -1 or +1, got {b}"
                )))
            }
        })
        .collect()
}

/// Sparse matrix in column-block-major layout. For block `i`,
/// `row_idx[col_ptr[i]..col_ptr[i+1]]` lists the touching rows `I_i` and the
/// corresponding dense sub-blocks `A_ji` (stride `N_i`) live in `vals`.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    rows: usize,
    partition: Arc<BlockPartition>,
    col_ptr: Vec<usize>,
    val_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Assembles from 0-indexed `(row, col, value)` triplets; duplicate
    /// coordinates are summed, explicit zeros dropped, and all-zero
    /// sub-blocks never stored.
    pub fn from_triplets(
        partition: &Arc<BlockPartition>,
        rows: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let n = partition.block_count();
        let dim = partition.total_dim();
        // column -> block lookup
        let mut col_block = vec![0usize; dim];
        for i in 0..n {
            for c in partition.range(i) {
                col_block[c] = i;
            }
        }
        // accumulate dense sub-blocks per (block, row)
        let mut per_block: Vec<std::collections::BTreeMap<usize, Vec<f64>>> =
            vec![std::collections::BTreeMap::new(); n];
        for &(r, c, v) in triplets {
            if r >= rows {
                return Err(Error::InvalidObjective(format!(
                    "row index {r} out of range (m = {rows})"
                )));
            }
            if c >= dim {
                return Err(Error::InvalidObjective(format!(
                    "column index {c} out of range (N = {dim})"
                )));
            }
            if v == 0.0 {
                continue;
            }
            let i = col_block[c];
            let off = c - partition.range(i).start;
            let ni = partition.size(i);
            per_block[i]
                .entry(r)
                .or_insert_with(|| vec![0.0; ni])
                [off] += v;
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut val_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        val_ptr.push(0);
        for entries in per_block {
            for (r, sub) in entries {
                if sub.iter().all(|&x| x == 0.0) {
                    continue; // duplicates canceled out
                }
                row_idx.push(r);
                vals.extend_from_slice(&sub);
            }
            col_ptr.push(row_idx.len());
            val_ptr.push(vals.len());
        }
        Ok(Self {
            rows,
            partition: Arc::clone(partition),
            col_ptr,
            val_ptr,
            row_idx,
            vals,
        })
    }

    /// Convenience assembly from dense rows (tests and tiny instances).
    pub fn from_dense_rows(partition: &Arc<BlockPartition>, rows: &[Vec<f64>]) -> Result<Self> {
        let mut triplets = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != partition.total_dim() {
                return Err(Error::LengthMismatch {
                    expected: partition.total_dim(),
                    got: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(partition, rows.len(), &triplets)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.partition.total_dim()
    }

    pub fn partition(&self) -> &Arc<BlockPartition> {
        &self.partition
    }

    /// The rows with a nonzero block-`i` sub-block (`I_i`).
    pub fn column_support(&self, i: usize) -> &[usize] {
        &self.row_idx[self.col_ptr[i]..self.col_ptr[i + 1]]
    }

    /// Iterates `(row, sub-block)` pairs of block column `i`.
    pub fn block_column(&self, i: usize) -> impl Iterator<Item = (usize, &[f64])> {
        let ni = self.partition.size(i);
        let rows = &self.row_idx[self.col_ptr[i]..self.col_ptr[i + 1]];
        let vals = &self.vals[self.val_ptr[i]..self.val_ptr[i + 1]];
        rows.iter().enumerate().map(move |(t, &r)| (r, &vals[t * ni..(t + 1) * ni]))
    }

    /// Total number of stored nonzero blocks, `nnz(A) = sum_i |I_i|`.
    pub fn nonzero_blocks(&self) -> usize {
        self.row_idx.len()
    }

    /// `out = A x` (dense output of length `m`).
    pub fn multiply_into(&self, x: &BlockVector, out: &mut [f64]) {
        assert_eq!(out.len(), self.rows);
        out.fill(0.0);
        for i in 0..self.partition.block_count() {
            let xb = x.block(i);
            for (r, sub) in self.block_column(i) {
                out[r] += dot(sub, xb);
            }
        }
    }

    /// `out_j += coeff * (A_ji . t)` over the support of block `i`.
    pub fn add_scaled_block_column(&self, i: usize, t: &[f64], coeff: f64, out: &mut [f64]) {
        for (r, sub) in self.block_column(i) {
            out[r] += coeff * dot(sub, t);
        }
    }

    /// Scales every dense column to unit Euclidean norm (zero columns are
    /// left untouched; they get rejected at objective assembly anyway).
    pub fn normalize_columns(&mut self) {
        let dim = self.partition.total_dim();
        let mut norms = vec![0.0f64; dim];
        for i in 0..self.partition.block_count() {
            let base = self.partition.range(i).start;
            let ni = self.partition.size(i);
            let vals = &self.vals[self.val_ptr[i]..self.val_ptr[i + 1]];
            for (t, _) in self.column_support(i).iter().enumerate() {
                for c in 0..ni {
                    let v = vals[t * ni + c];
                    norms[base + c] += v * v;
                }
            }
        }
        for i in 0..self.partition.block_count() {
            let base = self.partition.range(i).start;
            let ni = self.partition.size(i);
            let vals = &mut self.vals[self.val_ptr[i]..self.val_ptr[i + 1]];
            for t in 0..vals.len() / ni {
                for c in 0..ni {
                    let nrm = norms[base + c].sqrt();
                    if nrm > 0.0 {
                        vals[t * ni + c] /= nrm;
                    }
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Which estimate backs the full-sampling smoothness weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalEsoMethod {
    /// Power iteration on the curvature-weighted normal matrix, inflated by
    /// 1% so the result stays an overapproximation.
    PowerIteration,
    /// Trace bound `sum_j gamma_j ||row_j||^2_{B^{-1}}`; always at least the
    /// power-iteration value.
    TraceBound,
}

/// `f(x) = sum_j phi_j((A x)_j)` with gradient oracles and smoothness data.
#[derive(Debug, Clone)]
pub struct SmoothObjective {
    matrix: SparseMatrix,
    losses: Vec<ScalarLoss>,
    metric: BlockMetric,
}

impl SmoothObjective {
    pub fn new(matrix: SparseMatrix, losses: Vec<ScalarLoss>, metric: BlockMetric) -> Result<Self> {
        if losses.len() != matrix.rows() {
            return Err(Error::LengthMismatch {
                expected: matrix.rows(),
                got: losses.len(),
            });
        }
        if metric.partition() != matrix.partition() {
            return Err(Error::InvalidObjective("metric partition differs from matrix partition".into()));
        }
        for i in 0..matrix.partition().block_count() {
            if matrix.column_support(i).is_empty() {
                return Err(Error::InvalidObjective(format!(
                    "block column {i} is entirely zero; it carries no curvature information"
                )));
            }
        }
        Ok(Self { matrix, losses, metric })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn losses(&self) -> &[ScalarLoss] {
        &self.losses
    }

    pub fn metric(&self) -> &BlockMetric {
        &self.metric
    }

    pub fn partition(&self) -> &Arc<BlockPartition> {
        self.matrix.partition()
    }

    pub fn is_quadratic(&self) -> bool {
        self.losses.iter().all(ScalarLoss::is_square)
    }

    pub fn residual(&self, x: &BlockVector) -> Vec<f64> {
        let mut r = vec![0.0; self.matrix.rows()];
        self.matrix.multiply_into(x, &mut r);
        r
    }

    pub fn value_from_residual(&self, r: &[f64]) -> f64 {
        self.losses.iter().zip(r).map(|(l, &t)| l.value(t)).sum()
    }

    pub fn value(&self, x: &BlockVector) -> f64 {
        self.value_from_residual(&self.residual(x))
    }

    /// Writes `grad_i f = sum_{j in I_i} A_ji phi_j'(r_j)` into `out`,
    /// given the residual `r = A y` for the query point `y` (the caller's
    /// contract; staleness is not detectable here). Returns the number of
    /// stored rows touched, which is exactly `|I_i|`.
    pub fn block_gradient_into(&self, i: usize, r: &[f64], out: &mut [f64]) -> u64 {
        out.fill(0.0);
        let mut touched = 0u64;
        for (row, sub) in self.matrix.block_column(i) {
            let d = self.losses[row].derivative(r[row]);
            for (o, &a) in out.iter_mut().zip(sub) {
                *o += a * d;
            }
            touched += 1;
        }
        touched
    }

    /// Like [`Self::block_gradient_into`] but reads the residual as the
    /// affine combination `alpha * u + w` row by row, which is how the
    /// residual-maintained solver stores it. Touches `|I_i|` rows.
    pub fn block_gradient_affine_into(
        &self,
        i: usize,
        u: &[f64],
        w: &[f64],
        alpha: f64,
        out: &mut [f64],
    ) -> u64 {
        out.fill(0.0);
        let mut touched = 0u64;
        for (row, sub) in self.matrix.block_column(i) {
            let d = self.losses[row].derivative(alpha * u[row] + w[row]);
            for (o, &a) in out.iter_mut().zip(sub) {
                *o += a * d;
            }
            touched += 1;
        }
        touched
    }

    /// Full gradient, assembled blockwise (diagnostics and tests).
    pub fn gradient(&self, x: &BlockVector) -> BlockVector {
        let r = self.residual(x);
        let mut g = BlockVector::zeros(self.partition());
        for i in 0..self.partition().block_count() {
            let range = self.partition().range(i);
            self.block_gradient_into(i, &r, &mut g.values_mut()[range]);
        }
        g
    }

    /// Block Lipschitz constants `L_i = lambda_max(B_i^{-1/2} G_i B_i^{-1/2})`
    /// with `G_i = sum_j gamma_j A_ji A_ji^T`. For scalar blocks under the
    /// identity metric this is the curvature-weighted squared column norm.
    pub fn block_lipschitz_constants(&self) -> Weights {
        let p = self.partition();
        let mut out = Vec::with_capacity(p.block_count());
        for i in 0..p.block_count() {
            let ni = p.size(i);
            if ni == 1 {
                let mut acc = 0.0;
                for (row, sub) in self.matrix.block_column(i) {
                    acc += self.losses[row].curvature() * sub[0] * sub[0];
                }
                let scaled = match self.metric.block(i) {
                    MetricBlock::Identity => acc,
                    MetricBlock::Diagonal(d) => acc / d[0],
                    MetricBlock::Dense { matrix, .. } => acc / matrix[(0, 0)],
                };
                out.push(scaled);
            } else {
                let mut g = DMatrix::<f64>::zeros(ni, ni);
                for (row, sub) in self.matrix.block_column(i) {
                    let gamma = self.losses[row].curvature();
                    for a in 0..ni {
                        for b in 0..ni {
                            g[(a, b)] += gamma * sub[a] * sub[b];
                        }
                    }
                }
                out.push(metric_weighted_lambda_max(&g, self.metric.block(i)));
            }
        }
        Weights::new(out).expect("positive by zero-column rejection")
    }

    /// Largest generalized eigenvalue of `H x = lambda B x`, where
    /// `H = sum_j gamma_j a_j a_j^T` is the curvature-weighted normal
    /// matrix. Power iteration, 200 rounds or relative change below 1e-10.
    pub fn lambda_max(&self) -> f64 {
        let p = self.partition();
        let mut rng = ChaCha8Rng::seed_from_u64(0x0f1e_2d3c);
        let mut x = BlockVector::zeros(p);
        for v in x.values_mut() {
            *v = rng.random::<f64>() - 0.5;
        }
        let mut lambda = 0.0f64;
        let mut scratch_m = vec![0.0; self.matrix.rows()];
        for _ in 0..200 {
            // y = H x
            self.matrix.multiply_into(&x, &mut scratch_m);
            for (j, t) in scratch_m.iter_mut().enumerate() {
                *t *= self.losses[j].curvature();
            }
            let mut y = BlockVector::zeros(p);
            for i in 0..p.block_count() {
                let range = p.range(i);
                let out = &mut y.values_mut()[range];
                for (row, sub) in self.matrix.block_column(i) {
                    for (o, &a) in out.iter_mut().zip(sub) {
                        *o += a * scratch_m[row];
                    }
                }
            }
            // Rayleigh quotient in the B inner product
            let xhx: f64 = x.values().iter().zip(y.values()).map(|(a, b)| a * b).sum();
            let mut bx = BlockVector::zeros(p);
            for i in 0..p.block_count() {
                let range = p.range(i);
                self.metric.apply_block(i, x.block(i), &mut bx.values_mut()[range]);
            }
            let xbx: f64 = x.values().iter().zip(bx.values()).map(|(a, b)| a * b).sum();
            let new_lambda = xhx / xbx;
            // next iterate: x <- B^{-1} y, normalized
            let mut nx = BlockVector::zeros(p);
            for i in 0..p.block_count() {
                let range = p.range(i);
                self.metric.solve_block(i, y.block(i), &mut nx.values_mut()[range]);
            }
            let norm: f64 = nx.values().iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            for v in nx.values_mut() {
                *v /= norm;
            }
            x = nx;
            if (new_lambda - lambda).abs() <= 1e-10 * new_lambda.abs().max(1.0) {
                lambda = new_lambda;
                break;
            }
            lambda = new_lambda;
        }
        lambda
    }

    /// Uniform weights `v_i = L_total` valid for the full sampling.
    pub fn global_lipschitz_weights(&self, method: GlobalEsoMethod) -> Weights {
        let n = self.partition().block_count();
        let total = match method {
            GlobalEsoMethod::PowerIteration => 1.01 * self.lambda_max(),
            GlobalEsoMethod::TraceBound => {
                let mut per_row = vec![0.0f64; self.matrix.rows()];
                for i in 0..n {
                    let ni = self.partition().size(i);
                    let mut solved = vec![0.0; ni];
                    for (row, sub) in self.matrix.block_column(i) {
                        self.metric.solve_block(i, sub, &mut solved);
                        per_row[row] += dot(sub, &solved);
                    }
                }
                per_row
                    .iter()
                    .enumerate()
                    .map(|(j, &s)| self.losses[j].curvature() * s)
                    .sum()
            }
        };
        Weights::uniform(n, total).expect("positive by zero-column rejection")
    }

    /// Direct minimizer of an all-square objective via the normal
    /// equations. Fails for non-quadratic losses or a singular system.
    pub fn quadratic_minimizer(&self) -> Result<BlockVector> {
        if !self.is_quadratic() {
            return Err(Error::InvalidObjective(
                "direct solve needs square losses; run a reference solve instead".into(),
            ));
        }
        let dim = self.partition().total_dim();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs = DVector::<f64>::zeros(dim);
        // assemble dense rows of A from the block-column storage
        let mut dense_rows = vec![vec![0.0f64; dim]; self.matrix.rows()];
        for i in 0..self.partition().block_count() {
            let base = self.partition().range(i).start;
            for (row, sub) in self.matrix.block_column(i) {
                for (c, &v) in sub.iter().enumerate() {
                    dense_rows[row][base + c] = v;
                }
            }
        }
        for (j, row) in dense_rows.iter().enumerate() {
            let b = match self.losses[j] {
                ScalarLoss::Square { target } => target,
                ScalarLoss::Logistic { .. } => unreachable!(),
            };
            for a in 0..dim {
                if row[a] == 0.0 {
                    continue;
                }
                rhs[a] += row[a] * b;
                for bcol in 0..dim {
                    h[(a, bcol)] += row[a] * row[bcol];
                }
            }
        }
        let lu = h.lu();
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidObjective("singular normal matrix".into()))?;
        BlockVector::from_values(self.partition(), sol.as_slice().to_vec())
    }
}

fn metric_weighted_lambda_max(g: &DMatrix<f64>, block: &MetricBlock) -> f64 {
    let scaled = match block {
        MetricBlock::Identity => g.clone(),
        MetricBlock::Diagonal(d) => {
            let mut s = g.clone();
            for r in 0..s.nrows() {
                for c in 0..s.ncols() {
                    s[(r, c)] /= (d[r] * d[c]).sqrt();
                }
            }
            s
        }
        MetricBlock::Dense { chol, .. } => {
            let l = chol.l();
            let w = l.solve_lower_triangular(g).expect("cholesky factor is nonsingular");
            let wt = w.transpose();
            l.solve_lower_triangular(&wt)
                .expect("cholesky factor is nonsingular")
        }
    };
    let sym = (&scaled + scaled.transpose()) * 0.5;
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Triplet data read from a coordinate-list file.
#[derive(Debug, Clone)]
pub struct CooData {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn data_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::DataFormat {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Coordinate-list text: first line `m N nnz`, then `row col value` triples,
/// 1-indexed.
pub fn load_coordinate_file(path: &Path) -> Result<CooData> {
    let reader = open(path)?;
    let mut lines = reader.lines().enumerate();
    let (rows, cols, nnz) = loop {
        match lines.next() {
            Some((idx, line)) => {
                let line = line.map_err(|e| data_err(path, idx + 1, e.to_string()))?;
                let t = line.trim();
                if t.is_empty() {
                    continue;
                }
                let parts: Vec<&str> = t.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(data_err(path, idx + 1, "header must be `m N nnz`"));
                }
                let m: usize = parts[0].parse().map_err(|_| data_err(path, idx + 1, "bad m"))?;
                let n: usize = parts[1].parse().map_err(|_| data_err(path, idx + 1, "bad N"))?;
                let z: usize = parts[2].parse().map_err(|_| data_err(path, idx + 1, "bad nnz"))?;
                break (m, n, z);
            }
            None => return Err(data_err(path, 1, "empty file")),
        }
    };
    let mut triplets = Vec::with_capacity(nnz);
    for (idx, line) in lines {
        let line = line.map_err(|e| data_err(path, idx + 1, e.to_string()))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(data_err(path, idx + 1, "expected `row col value`"));
        }
        let r: usize = parts[0].parse().map_err(|_| data_err(path, idx + 1, "bad row index"))?;
        let c: usize = parts[1].parse().map_err(|_| data_err(path, idx + 1, "bad column index"))?;
        let v: f64 = parts[2].parse().map_err(|_| data_err(path, idx + 1, "bad value"))?;
        if r == 0 || r > rows {
            return Err(data_err(path, idx + 1, format!("row {r} outside 1..={rows}")));
        }
        if c == 0 || c > cols {
            return Err(data_err(path, idx + 1, format!("column {c} outside 1..={cols}")));
        }
        triplets.push((r - 1, c - 1, v));
    }
    if triplets.len() != nnz {
        return Err(data_err(
            path,
            1,
            format!("header promises {nnz} entries, file has {}", triplets.len()),
        ));
    }
    Ok(CooData { rows, cols, triplets })
}

/// Targets/labels file: one real per line.
pub fn load_targets_file(path: &Path) -> Result<Vec<f64>> {
    let reader = open(path)?;
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| data_err(path, idx + 1, e.to_string()))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| data_err(path, idx + 1, "bad value"))?;
        out.push(v);
    }
    Ok(out)
}

/// Row-oriented sparse classification data: `label idx:val ...` per line,
/// indices 1-based.
#[derive(Debug, Clone)]
pub struct RowSparseData {
    pub labels: Vec<f64>,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

pub fn load_row_sparse_file(path: &Path) -> Result<RowSparseData> {
    let reader = open(path)?;
    let mut labels = Vec::new();
    let mut triplets = Vec::new();
    let mut cols = 0usize;
    let mut row = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| data_err(path, idx + 1, e.to_string()))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut parts = t.split_whitespace();
        let label: f64 = parts
            .next()
            .unwrap()
            .parse()
            .map_err(|_| data_err(path, idx + 1, "bad label"))?;
        labels.push(label);
        for feat in parts {
            let (is, vs) = feat
                .split_once(':')
                .ok_or_else(|| data_err(path, idx + 1, format!("expected idx:val, got `{feat}`")))?;
            let i: usize = is.parse().map_err(|_| data_err(path, idx + 1, "bad feature index"))?;
            let v: f64 = vs.parse().map_err(|_| data_err(path, idx + 1, "bad feature value"))?;
            if i == 0 {
                return Err(data_err(path, idx + 1, "feature indices are 1-based"));
            }
            cols = cols.max(i);
            triplets.push((row, i - 1, v));
        }
        row += 1;
    }
    Ok(RowSparseData { labels, cols, triplets })
}
