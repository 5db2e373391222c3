//! Block-partitioned vectors over `R^N = R^{N_1} x ... x R^{N_n}` with
//! per-block metrics and weighted norms.
//!
//! All block data lives in one contiguous buffer addressed through an offset
//! table; the embedding matrices `U_i` are never materialized, slicing does
//! their job. Per-block metrics `B_i` are identity, positive diagonal or
//! small dense SPD matrices; dense blocks are factorized once at
//! construction because `B_i^{-1}` is applied on every prox step.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative tolerance used for floating comparisons throughout the crate
/// unless a caller supplies its own.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Relative deviation of `a` from `b`, normalized by `max(1, |a|, |b|)`.
pub fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// A partition of `[0, N)` into `n` contiguous blocks of sizes `N_i >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    sizes: Vec<usize>,
    offsets: Vec<usize>, // length n + 1, offsets[n] = N
}

impl BlockPartition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidPartition("no blocks".into()));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidPartition("zero-sized block".into()));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0usize;
        offsets.push(0);
        for &s in &sizes {
            acc += s;
            offsets.push(acc);
        }
        Ok(Self { sizes, offsets })
    }

    /// `n` blocks of one coordinate each.
    pub fn scalar(n: usize) -> Arc<Self> {
        Arc::new(Self::new(vec![1; n]).expect("n >= 1"))
    }

    /// `n` blocks of `size` coordinates each.
    pub fn uniform(n: usize, size: usize) -> Result<Arc<Self>> {
        Ok(Arc::new(Self::new(vec![size; n])?))
    }

    pub fn block_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn is_scalar(&self) -> bool {
        self.sizes.iter().all(|&s| s == 1)
    }
}

/// A point of `R^N` carrying its block partition.
#[derive(Debug, Clone)]
pub struct BlockVector {
    partition: Arc<BlockPartition>,
    values: Vec<f64>,
}

impl BlockVector {
    pub fn zeros(partition: &Arc<BlockPartition>) -> Self {
        Self {
            partition: Arc::clone(partition),
            values: vec![0.0; partition.total_dim()],
        }
    }

    pub fn from_values(partition: &Arc<BlockPartition>, values: Vec<f64>) -> Result<Self> {
        if values.len() != partition.total_dim() {
            return Err(Error::LengthMismatch {
                expected: partition.total_dim(),
                got: values.len(),
            });
        }
        Ok(Self {
            partition: Arc::clone(partition),
            values,
        })
    }

    pub fn partition(&self) -> &Arc<BlockPartition> {
        &self.partition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.values[self.partition.range(i)]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.partition.range(i);
        &mut self.values[r]
    }

    pub fn copy_from(&mut self, other: &BlockVector) {
        debug_assert!(same_partition(self, other));
        self.values.copy_from_slice(&other.values);
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &BlockVector) {
        debug_assert!(same_partition(self, other));
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    /// `self = (1 - theta) * x + theta * z`, the convex combination step.
    pub fn convex_combination(&mut self, theta: f64, x: &BlockVector, z: &BlockVector) {
        debug_assert!(same_partition(x, z));
        let c = 1.0 - theta;
        for ((y, a), b) in self.values.iter_mut().zip(&x.values).zip(&z.values) {
            *y = c * a + theta * b;
        }
    }
}

pub fn same_partition(a: &BlockVector, b: &BlockVector) -> bool {
    Arc::ptr_eq(&a.partition, &b.partition) || a.partition == b.partition
}

/// One block of a [`BlockMetric`].
#[derive(Debug, Clone)]
pub enum MetricBlock {
    Identity,
    /// Positive diagonal, one entry per coordinate of the block.
    Diagonal(Vec<f64>),
    /// Dense symmetric positive definite, factorized at construction.
    Dense {
        matrix: DMatrix<f64>,
        chol: Cholesky<f64, Dyn>,
    },
}

/// Per-block quadratic metric `B = diag(B_1, ..., B_n)`.
#[derive(Debug, Clone)]
pub struct BlockMetric {
    partition: Arc<BlockPartition>,
    blocks: Vec<MetricBlock>,
}

impl BlockMetric {
    pub fn identity(partition: &Arc<BlockPartition>) -> Self {
        Self {
            partition: Arc::clone(partition),
            blocks: vec![MetricBlock::Identity; partition.block_count()],
        }
    }

    /// Builds a diagonal metric from a full-length (`N`) positive diagonal.
    pub fn diagonal(partition: &Arc<BlockPartition>, diag: Vec<f64>) -> Result<Self> {
        if diag.len() != partition.total_dim() {
            return Err(Error::LengthMismatch {
                expected: partition.total_dim(),
                got: diag.len(),
            });
        }
        if diag.iter().any(|&d| !d.is_finite() || d <= 0.0) {
            return Err(Error::InvalidMetric("diagonal entries must be positive and finite".into()));
        }
        let blocks = (0..partition.block_count())
            .map(|i| MetricBlock::Diagonal(diag[partition.range(i)].to_vec()))
            .collect();
        Ok(Self {
            partition: Arc::clone(partition),
            blocks,
        })
    }

    /// Builds a metric from explicit per-block specifications. Dense blocks
    /// must be symmetric positive definite; the Cholesky factorization is
    /// the construction-time PD check.
    pub fn from_blocks(partition: &Arc<BlockPartition>, specs: Vec<MetricBlockSpec>) -> Result<Self> {
        if specs.len() != partition.block_count() {
            return Err(Error::LengthMismatch {
                expected: partition.block_count(),
                got: specs.len(),
            });
        }
        let mut blocks = Vec::with_capacity(specs.len());
        for (i, spec) in specs.into_iter().enumerate() {
            let ni = partition.size(i);
            let block = match spec {
                MetricBlockSpec::Identity => MetricBlock::Identity,
                MetricBlockSpec::Diagonal(d) => {
                    if d.len() != ni {
                        return Err(Error::LengthMismatch { expected: ni, got: d.len() });
                    }
                    if d.iter().any(|&x| !x.is_finite() || x <= 0.0) {
                        return Err(Error::InvalidMetric(format!(
                            "block {i}: diagonal entries must be positive"
                        )));
                    }
                    MetricBlock::Diagonal(d)
                }
                MetricBlockSpec::Dense(rows) => {
                    if rows.len() != ni || rows.iter().any(|r| r.len() != ni) {
                        return Err(Error::InvalidMetric(format!("block {i}: matrix must be {ni}x{ni}")));
                    }
                    let matrix = DMatrix::from_fn(ni, ni, |r, c| rows[r][c]);
                    let asym = (&matrix - matrix.transpose()).abs().max();
                    if asym > 1e-12 * (1.0 + matrix.abs().max()) {
                        return Err(Error::InvalidMetric(format!("block {i}: matrix is not symmetric")));
                    }
                    let chol = matrix.clone().cholesky().ok_or_else(|| {
                        Error::InvalidMetric(format!("block {i}: matrix is not positive definite"))
                    })?;
                    MetricBlock::Dense { matrix, chol }
                }
            };
            blocks.push(block);
        }
        Ok(Self {
            partition: Arc::clone(partition),
            blocks,
        })
    }

    pub fn partition(&self) -> &Arc<BlockPartition> {
        &self.partition
    }

    pub fn block(&self, i: usize) -> &MetricBlock {
        &self.blocks[i]
    }

    pub fn is_identity_block(&self, i: usize) -> bool {
        matches!(self.blocks[i], MetricBlock::Identity)
    }

    pub fn is_separable_block(&self, i: usize) -> bool {
        !matches!(self.blocks[i], MetricBlock::Dense { .. })
    }

    /// `out = B_i x`, for a single block.
    pub fn apply_block(&self, i: usize, x: &[f64], out: &mut [f64]) {
        match &self.blocks[i] {
            MetricBlock::Identity => out.copy_from_slice(x),
            MetricBlock::Diagonal(d) => {
                for ((o, &v), &s) in out.iter_mut().zip(x).zip(d) {
                    *o = s * v;
                }
            }
            MetricBlock::Dense { matrix, .. } => {
                let v = DVector::from_column_slice(x);
                let r = matrix * v;
                out.copy_from_slice(r.as_slice());
            }
        }
    }

    /// `out = B_i^{-1} x`, for a single block.
    pub fn solve_block(&self, i: usize, x: &[f64], out: &mut [f64]) {
        match &self.blocks[i] {
            MetricBlock::Identity => out.copy_from_slice(x),
            MetricBlock::Diagonal(d) => {
                for ((o, &v), &s) in out.iter_mut().zip(x).zip(d) {
                    *o = v / s;
                }
            }
            MetricBlock::Dense { chol, .. } => {
                let v = DVector::from_column_slice(x);
                let r = chol.solve(&v);
                out.copy_from_slice(r.as_slice());
            }
        }
    }

    /// `<B_i x, y>` for two block-i slices.
    pub fn quad_block(&self, i: usize, x: &[f64], y: &[f64]) -> f64 {
        match &self.blocks[i] {
            MetricBlock::Identity => dot(x, y),
            MetricBlock::Diagonal(d) => x
                .iter()
                .zip(y)
                .zip(d)
                .map(|((&a, &b), &s)| s * a * b)
                .sum(),
            MetricBlock::Dense { matrix, .. } => {
                let vx = DVector::from_column_slice(x);
                let vy = DVector::from_column_slice(y);
                (matrix * vx).dot(&vy)
            }
        }
    }
}

/// Input form for [`BlockMetric::from_blocks`].
#[derive(Debug, Clone)]
pub enum MetricBlockSpec {
    Identity,
    Diagonal(Vec<f64>),
    Dense(Vec<Vec<f64>>),
}

/// A strictly positive weight per block (used for `w`, `v`, `p` and their
/// elementwise combinations).
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if w.iter().any(|&x| !x.is_finite() || x <= 0.0) {
            return Err(Error::InvalidWeights("weights must be positive and finite".into()));
        }
        Ok(Self(w))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Elementwise Hadamard product `self o other`.
    pub fn hadamard(&self, other: &Weights) -> Result<Weights> {
        check_len(self.len(), other.len())?;
        Weights::new(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    /// Elementwise `w_i / d_i^2`; used to form `v o p^{-2}`.
    pub fn div_sq(&self, d: &[f64]) -> Result<Weights> {
        check_len(self.len(), d.len())?;
        Weights::new(self.0.iter().zip(d).map(|(a, b)| a / (b * b)).collect())
    }

    pub fn scale(&self, c: f64) -> Result<Weights> {
        Weights::new(self.0.iter().map(|a| a * c).collect())
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `<B_i x^i, x^i>`, the squared block norm. Panics if `i` is out of range.
pub fn block_norm_sq(x: &BlockVector, i: usize, m: &BlockMetric) -> f64 {
    assert!(i < x.partition().block_count(), "block index {i} out of range");
    let b = x.block(i);
    m.quad_block(i, b, b)
}

/// `sum_i w_i <B_i x^i, x^i>`, the squared weighted norm.
pub fn weighted_norm_sq(x: &BlockVector, w: &Weights, m: &BlockMetric) -> Result<f64> {
    check_len(x.partition().block_count(), w.len())?;
    let mut acc = 0.0;
    for i in 0..w.len() {
        let b = x.block(i);
        acc += w.get(i) * m.quad_block(i, b, b);
    }
    Ok(acc)
}

/// `sum_i w_i <x^i, y^i>`, the weighted inner product. Per-block products
/// are standard Euclidean, no metric.
pub fn weighted_inner(x: &BlockVector, y: &BlockVector, w: &Weights) -> Result<f64> {
    if !same_partition(x, y) {
        return Err(Error::InvalidPartition("partition mismatch".into()));
    }
    check_len(x.partition().block_count(), w.len())?;
    let mut acc = 0.0;
    for i in 0..w.len() {
        acc += w.get(i) * dot(x.block(i), y.block(i));
    }
    Ok(acc)
}

/// Copies the blocks listed in `s` and zeros every other block.
pub fn restrict(h: &BlockVector, s: &[usize]) -> BlockVector {
    let mut out = BlockVector::zeros(h.partition());
    for &i in s {
        out.block_mut(i).copy_from_slice(h.block(i));
    }
    out
}

/// Block scaling: block `i` of the result is `v_i * x^i`.
pub fn scale_blocks(v: &Weights, x: &BlockVector) -> Result<BlockVector> {
    check_len(x.partition().block_count(), v.len())?;
    let mut out = x.clone();
    for i in 0..v.len() {
        let c = v.get(i);
        for e in out.block_mut(i) {
            *e *= c;
        }
    }
    Ok(out)
}

/// `B x`: the vector whose i-th block is `B_i x^i`.
pub fn metric_apply(m: &BlockMetric, x: &BlockVector) -> BlockVector {
    let mut out = BlockVector::zeros(x.partition());
    for i in 0..x.partition().block_count() {
        let r = x.partition().range(i);
        m.apply_block(i, x.block(i), &mut out.values_mut()[r]);
    }
    out
}

/// `B^{-1} x`: the vector whose i-th block is `B_i^{-1} x^i`.
pub fn metric_solve(m: &BlockMetric, x: &BlockVector) -> BlockVector {
    let mut out = BlockVector::zeros(x.partition());
    for i in 0..x.partition().block_count() {
        let r = x.partition().range(i);
        m.solve_block(i, x.block(i), &mut out.values_mut()[r]);
    }
    out
}
