//! Evaluation of the method's convergence guarantees and the
//! convex-combination diagnostics that underpin the proximal ones.
//!
//! The four main guarantees share one constant
//!
//! ```text
//! C = (1 - theta0) (F(x0) - F(y)) + (theta0^2 / 2) ||x0 - y||^2_{v o p^{-2}}
//! ```
//!
//! and read `C / ((k-1) theta0 + 1)` for the constant schedule and
//! `4C / ((k-1) theta0 + 2)^2` for the accelerated one. The named presets
//! plug specific `theta0`, `p` and `v` into those two shapes; that is what
//! [`corollary_bound`] evaluates.
//!
//! The gamma table tracks the coefficients expressing each block of `x_k`
//! as a convex combination of the history `z_0, ..., z_k`. With
//! `theta0 <= min_i p_i` and a nonincreasing schedule the coefficients are
//! nonnegative and sum to one per block, which makes
//! `psi(x_k) <= psi_hat_k` -- the inequality the proximal bounds lean on.
//! It is a test harness, so the table is dense and capped.

use crate::blockspace::{weighted_norm_sq, BlockMetric, BlockVector, Weights};
use crate::error::{Error, Result};
use crate::regularizer::Regularizer;
use crate::sampling::ProbabilityVector;
use crate::solver::Preset;

/// Default iteration cap for the gamma diagnostics.
pub const DEFAULT_GAMMA_CAP: usize = 200;

/// `C = (1 - theta0)(F(x0) - F(y)) + (theta0^2/2) ||x0 - y||^2_{v o p^{-2}}`.
#[allow(clippy::too_many_arguments)]
pub fn bound_constant(
    x0: &BlockVector,
    y: &BlockVector,
    f0: f64,
    fy: f64,
    v: &Weights,
    p: &ProbabilityVector,
    theta0: f64,
    metric: &BlockMetric,
) -> Result<f64> {
    if !(theta0 > 0.0 && theta0 <= 1.0) {
        return Err(Error::InvalidConfig(format!("theta0 {theta0} outside (0, 1]")));
    }
    let mut diff = x0.clone();
    diff.axpy(-1.0, y);
    let w = v.div_sq(p.as_slice())?;
    let r2 = weighted_norm_sq(&diff, &w, metric)?;
    Ok((1.0 - theta0) * (f0 - fy) + 0.5 * theta0 * theta0 * r2)
}

/// `C / ((k-1) theta0 + 1)`, the constant-schedule guarantee at iteration k.
pub fn bound_nonaccelerated(c: f64, theta0: f64, k: usize) -> f64 {
    c / ((k as f64 - 1.0) * theta0 + 1.0)
}

/// `4C / ((k-1) theta0 + 2)^2`, the accelerated guarantee at iteration k.
pub fn bound_accelerated(c: f64, theta0: f64, k: usize) -> f64 {
    let d = (k as f64 - 1.0) * theta0 + 2.0;
    4.0 * c / (d * d)
}

/// Instance quantities the preset bounds are made of. Distances are to a
/// known minimizer.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    /// `F(x0) - F*`.
    pub delta0: f64,
    /// `||x0 - x*||^2_v`.
    pub r2_v: f64,
    /// `||x0 - x*||^2_{v o p^{-2}}`.
    pub r2_vp2: f64,
    /// `min_i p_i`.
    pub min_p: f64,
    /// Block count.
    pub n: usize,
    /// `E|S|` (uniform presets).
    pub tau: Option<f64>,
}

/// The closed-form guarantee of a named preset at iteration `k >= 1`.
pub fn corollary_bound(preset: Preset, inputs: &BoundInputs, k: usize) -> Result<f64> {
    let kf = k as f64;
    let value = match preset {
        // deterministic, constant schedule
        Preset::Gd | Preset::ProxGd => inputs.r2_v / (2.0 * kf),
        // deterministic, accelerated schedule
        Preset::Agd | Preset::AccProxGd => 2.0 * inputs.r2_v / ((kf + 1.0) * (kf + 1.0)),
        // arbitrary sampling, constant theta0 = min p
        Preset::Pcd => {
            let c = (1.0 - inputs.min_p) * inputs.delta0 + 0.5 * inputs.r2_v;
            c / ((kf - 1.0) * inputs.min_p + 1.0)
        }
        // arbitrary sampling, accelerated from theta0 = 1
        Preset::Apcd => 2.0 * inputs.r2_vp2 / ((kf + 1.0) * (kf + 1.0)),
        // uniform sampling, constant theta0 = tau/n
        Preset::Pcdm => {
            let tau = inputs.tau.ok_or_else(|| {
                Error::InvalidConfig("the pcdm bound needs E|S|".into())
            })?;
            let nf = inputs.n as f64;
            nf / ((kf - 1.0) * tau + nf)
                * ((1.0 - tau / nf) * inputs.delta0 + 0.5 * inputs.r2_v)
        }
        // arbitrary sampling, accelerated from theta0 = min p
        Preset::Approxis => {
            let t0 = inputs.min_p;
            let c = (1.0 - t0) * inputs.delta0 + 0.5 * t0 * t0 * inputs.r2_vp2;
            bound_accelerated(c, t0, k)
        }
    };
    Ok(value)
}

/// Per-block convex-combination coefficients of `x_k` over `z_0, ..., z_k`,
/// maintained by the recursion
///
/// ```text
/// gamma_{k+1,l} = (1 - theta_k) gamma_{k,l}                        l < k
/// gamma_{k+1,k} = (1 - theta_k) gamma_{k,k} + theta_k - theta_k/p_i
/// gamma_{k+1,k+1} = theta_k / p_i
/// ```
#[derive(Debug, Clone)]
pub struct GammaTable {
    /// `gamma[i][l]` for `l = 0..=k`.
    gamma: Vec<Vec<f64>>,
    p: Vec<f64>,
    k: usize,
    cap: usize,
}

impl GammaTable {
    pub fn new(p: &ProbabilityVector, cap: usize) -> Self {
        let n = p.len();
        Self {
            gamma: vec![vec![1.0]; n],
            p: p.as_slice().to_vec(),
            k: 0,
            cap,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Applies one recursion step with the stepsize `theta_k` in force at
    /// iteration `k`.
    pub fn step(&mut self, theta_k: f64) -> Result<()> {
        if self.k >= self.cap {
            return Err(Error::DiagnosticCapExceeded(self.cap));
        }
        for (i, row) in self.gamma.iter_mut().enumerate() {
            let pi = self.p[i];
            let last = *row.last().unwrap();
            for coeff in row.iter_mut() {
                *coeff *= 1.0 - theta_k;
            }
            let len = row.len();
            // the l = k slot had the uniform scaling applied; rewrite it
            row[len - 1] = (1.0 - theta_k) * last + theta_k - theta_k / pi;
            row.push(theta_k / pi);
        }
        self.k += 1;
        Ok(())
    }

    pub fn coefficient(&self, i: usize, l: usize) -> f64 {
        self.gamma[i][l]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.gamma[i]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.gamma[i].iter().sum()
    }

    pub fn min_coefficient(&self) -> f64 {
        self.gamma
            .iter()
            .flat_map(|r| r.iter())
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Rebuilds `x_k` from the stored `z` history:
    /// `x_k^i = sum_l gamma_{k,l}^i z_l^i`.
    pub fn reconstruct_x(&self, z_history: &[BlockVector]) -> Result<BlockVector> {
        if z_history.len() < self.k + 1 {
            return Err(Error::HistoryUnavailable);
        }
        let partition = z_history[0].partition();
        if partition.block_count() != self.gamma.len() {
            return Err(Error::LengthMismatch {
                expected: self.gamma.len(),
                got: partition.block_count(),
            });
        }
        let mut x = BlockVector::zeros(partition);
        for i in 0..self.gamma.len() {
            for (l, &coeff) in self.gamma[i].iter().enumerate() {
                let src = z_history[l].block(i);
                let dst = x.block_mut(i);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += coeff * s;
                }
            }
        }
        Ok(x)
    }

    /// `psi_hat_k = sum_i sum_l gamma_{k,l}^i psi^i(z_l^i)`; an upper bound
    /// on `psi(x_k)` whenever the coefficients are a convex combination.
    pub fn psi_hat(&self, z_history: &[BlockVector], reg: &Regularizer) -> Result<f64> {
        if z_history.len() < self.k + 1 {
            return Err(Error::HistoryUnavailable);
        }
        let mut acc = 0.0;
        for i in 0..self.gamma.len() {
            for (l, &coeff) in self.gamma[i].iter().enumerate() {
                acc += coeff * reg.block_value(i, z_history[l].block(i));
            }
        }
        Ok(acc)
    }
}
