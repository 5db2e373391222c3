//! The randomized block coordinate descent iteration in three
//! interchangeable realizations, the theta-schedules that switch it
//! between O(1/k) and O(1/k^2) regimes, and the eight named presets it
//! collapses to.
//!
//! One iteration at extrapolation parameter `theta_k` reads
//!
//! ```text
//! y_k     = (1 - theta_k) x_k + theta_k z_k
//! S_k     ~ sampling
//! z_{k+1} = z_k, except for i in S_k:
//!             argmin_z <grad_i f(y_k), z> + (theta_k v_i / 2 p_i) ||z - z_k^i||_i^2 + psi^i(z)
//! x_{k+1} = y_k + theta_k p^{-1} . (z_{k+1} - z_k)
//! ```
//!
//! The generic realization carries `x` and `z` explicitly. The efficient
//! realization substitutes `g_k = alpha_k^{-1}(y_k - z_k)` with
//! `alpha_0 = 1, alpha_k = (1 - theta_k) alpha_{k-1}` and maintains the
//! residuals `u = A g` and `w = A z`, so one iteration touches only the
//! column supports of the sampled blocks -- no full-dimensional pass.
//! Both draw one subset per iteration from the same seeded generator, so a
//! seed pins the whole trajectory in either realization.

use std::io::{BufRead, Write};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::blockspace::{BlockVector, Weights};
use crate::error::{Error, Result};
use crate::eso;
use crate::objective::SmoothObjective;
use crate::regularizer::Regularizer;
use crate::sampling::Sampling;

/// Smallest transfer coefficient `alpha_k = prod (1 - theta_l)` the
/// residual-maintained realization accepts before declaring the run out of
/// numerical range; `g ~ 1/alpha` beyond this point.
const MIN_TRANSFER_ALPHA: f64 = 1e-290;

/// One step of the accelerated stepsize recursion
/// `theta' = (sqrt(theta^4 + 4 theta^2) - theta^2) / 2`, written in the
/// cancellation-free form `theta (sqrt(theta^2 + 4) - theta) / 2`.
///
/// The output satisfies `(1 - theta') / theta'^2 = 1 / theta^2` and the
/// envelope `theta_k <= 2 / (k + 2/theta_0)`. Panics outside `(0, 1]`.
pub fn theta_next(theta: f64) -> f64 {
    assert!(theta > 0.0 && theta <= 1.0, "theta {theta} outside (0, 1]");
    theta * ((theta * theta + 4.0).sqrt() - theta) / 2.0
}

/// Stepsize schedule: constant (simple variant) or the square-root
/// recursion (accelerated variant).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaSchedule {
    Constant(f64),
    Accelerated(f64),
}

impl ThetaSchedule {
    pub fn theta0(&self) -> f64 {
        match *self {
            ThetaSchedule::Constant(t) | ThetaSchedule::Accelerated(t) => t,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ThetaSchedule::Constant(_))
    }

    pub fn is_accelerated(&self) -> bool {
        matches!(self, ThetaSchedule::Accelerated(_))
    }

    fn advance(&self, theta: f64) -> f64 {
        match self {
            ThetaSchedule::Constant(t0) => *t0,
            ThetaSchedule::Accelerated(_) => theta_next(theta),
        }
    }

    /// The first `k` values `theta_0, ..., theta_{k-1}`.
    pub fn sequence(&self, k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(k);
        let mut t = self.theta0();
        for _ in 0..k {
            out.push(t);
            t = self.advance(t);
        }
        out
    }
}

/// Which realization of the iteration runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Explicit x/z sequences (the reference realization).
    Generic,
    /// Same loop restricted to `psi = 0`; shares the generic code path so
    /// the two are bitwise identical under the same seed.
    Smooth,
    /// Residual-maintained change of variables; no full-dimensional pass.
    Efficient,
}

/// Everything a run needs besides the problem and the starting point.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub sampling: Sampling,
    pub v: Weights,
    pub schedule: ThetaSchedule,
    pub iterations: usize,
    pub seed: u64,
    pub variant: Variant,
    /// Log every `stride`-th iteration; `None` applies the default rule
    /// (every iteration up to 10^4 total, then ceil(K / 10^4)).
    pub log_stride: Option<usize>,
    /// Evaluate F/f/psi for logged iterations. Disable for cost
    /// benchmarks; the columns become NaN.
    pub eval_objective: bool,
    /// Maintain the running average iterate of the constant-theta bound.
    pub track_average: bool,
    /// Record iterates `x_k`, `z_k` and the theta sequence up to this
    /// iteration (gamma diagnostics).
    pub history_cap: Option<usize>,
}

impl SolverConfig {
    pub fn new(
        sampling: Sampling,
        v: Weights,
        schedule: ThetaSchedule,
        iterations: usize,
        seed: u64,
    ) -> Self {
        Self {
            sampling,
            v,
            schedule,
            iterations,
            seed,
            variant: Variant::Generic,
            log_stride: None,
            eval_objective: true,
            track_average: false,
            history_cap: None,
        }
    }

    fn stride(&self) -> usize {
        match self.log_stride {
            Some(s) => s.max(1),
            None => {
                if self.iterations <= 10_000 {
                    1
                } else {
                    self.iterations.div_ceil(10_000)
                }
            }
        }
    }
}

/// One logged iteration. `touched_nnz` is cumulative over the run.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub k: usize,
    pub objective: f64,
    pub smooth: f64,
    pub penalty: f64,
    pub theta: f64,
    pub touched_nnz: u64,
    pub wall_ns: u128,
}

/// The logged course of one run.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub points: Vec<TracePoint>,
}

impl Trace {
    pub const CSV_HEADER: &'static str = "k,F,f,psi,theta,touched_nnz,wall_ns";

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                p.k, p.objective, p.smooth, p.penalty, p.theta, p.touched_nnz, p.wall_ns
            )?;
        }
        Ok(())
    }

    /// Writes the trace with two extra columns of theoretical bounds,
    /// aligned with the logged iterations.
    pub fn write_csv_with_bounds<W: Write>(
        &self,
        w: &mut W,
        bounds: &[(f64, f64)],
    ) -> std::io::Result<()> {
        writeln!(w, "{},bound_nonacc,bound_acc", Self::CSV_HEADER)?;
        for (p, (bn, ba)) in self.points.iter().zip(bounds) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                p.k, p.objective, p.smooth, p.penalty, p.theta, p.touched_nnz, p.wall_ns, bn, ba
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Trace> {
        let mut points = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::DataFormat {
                path: "<trace>".into(),
                line: idx + 1,
                message: e.to_string(),
            })?;
            if idx == 0 {
                continue; // header
            }
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let cells: Vec<&str> = t.split(',').collect();
            if cells.len() < 7 {
                return Err(Error::DataFormat {
                    path: "<trace>".into(),
                    line: idx + 1,
                    message: format!("expected 7+ columns, got {}", cells.len()),
                });
            }
            let parse_f = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| Error::DataFormat {
                    path: "<trace>".into(),
                    line: idx + 1,
                    message: format!("bad {what} `{s}`"),
                })
            };
            points.push(TracePoint {
                k: cells[0].parse().map_err(|_| Error::DataFormat {
                    path: "<trace>".into(),
                    line: idx + 1,
                    message: format!("bad k `{}`", cells[0]),
                })?,
                objective: parse_f(cells[1], "F")?,
                smooth: parse_f(cells[2], "f")?,
                penalty: parse_f(cells[3], "psi")?,
                theta: parse_f(cells[4], "theta")?,
                touched_nnz: cells[5].parse().map_err(|_| Error::DataFormat {
                    path: "<trace>".into(),
                    line: idx + 1,
                    message: format!("bad touched_nnz `{}`", cells[5]),
                })?,
                wall_ns: cells[6].parse().map_err(|_| Error::DataFormat {
                    path: "<trace>".into(),
                    line: idx + 1,
                    message: format!("bad wall_ns `{}`", cells[6]),
                })?,
            });
        }
        Ok(Trace { points })
    }
}

/// Recorded iterates for the convex-combination diagnostics.
#[derive(Debug, Clone)]
pub struct RunHistory {
    /// `z_0, ..., z_cap`.
    pub z: Vec<BlockVector>,
    /// `x_0, ..., x_cap`.
    pub x: Vec<BlockVector>,
    /// `theta_0, ..., theta_{cap-1}` as used by the iterations.
    pub theta: Vec<f64>,
}

/// Output of one run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: Trace,
    /// Final iterate `x_K`.
    pub x: BlockVector,
    /// Final running average (constant-theta mode with tracking enabled).
    pub x_hat: Option<BlockVector>,
    pub history: Option<RunHistory>,
    /// Total stored rows touched by block-gradient evaluations.
    pub touched_nnz: u64,
}

fn validate(
    obj: &SmoothObjective,
    reg: &Regularizer,
    x0: &BlockVector,
    config: &SolverConfig,
) -> Result<()> {
    let n = obj.partition().block_count();
    if config.sampling.n() != n {
        return Err(Error::InvalidConfig(format!(
            "sampling ranges over {} blocks, problem has {n}",
            config.sampling.n()
        )));
    }
    if config.v.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: config.v.len() });
    }
    if x0.partition().as_ref() != obj.partition().as_ref() {
        return Err(Error::InvalidConfig("x0 partition differs from the problem's".into()));
    }
    reg.validate_against(obj.partition(), obj.metric())?;
    let theta0 = config.schedule.theta0();
    if !(theta0 > 0.0 && theta0 <= 1.0) {
        return Err(Error::InvalidConfig(format!("theta0 {theta0} outside (0, 1]")));
    }
    if !reg.is_zero() {
        let min_p = config.sampling.min_probability();
        if theta0 > min_p {
            return Err(Error::InvalidConfig(format!(
                "proximal runs need theta0 <= min_i p_i; got theta0 = {theta0} > min p = {min_p}"
            )));
        }
        if reg.value(x0).is_infinite() {
            return Err(Error::InvalidConfig("x0 lies outside the domain of the regularizer".into()));
        }
    }
    if config.variant == Variant::Smooth && !reg.is_zero() {
        return Err(Error::InvalidConfig("the smooth realization requires psi = 0".into()));
    }
    if config.variant == Variant::Efficient
        && config.schedule == ThetaSchedule::Constant(1.0)
        && config.sampling.min_probability() < 1.0
    {
        // alpha_k = 0 with a nonzero transfer coefficient; only the
        // all-ones collapse path supports theta_k = 1 here
        return Err(Error::InvalidConfig(
            "the efficient realization rejects constant theta = 1 except under the full sampling".into(),
        ));
    }
    Ok(())
}

struct AverageTracker {
    sum_prev: BlockVector, // sum of x_1 ... x_{k-1}
    theta0: f64,
    count: usize, // k
    current: Option<BlockVector>,
}

impl AverageTracker {
    fn new(x0: &BlockVector, theta0: f64) -> Self {
        Self {
            sum_prev: BlockVector::zeros(x0.partition()),
            theta0,
            count: 0,
            current: None,
        }
    }

    /// Feed `x_k` for `k = 1, 2, ...` in order.
    fn push(&mut self, xk: &BlockVector) {
        self.count += 1;
        let k = self.count;
        let denom = 1.0 + (k as f64 - 1.0) * self.theta0;
        let mut avg = xk.clone();
        avg.axpy(self.theta0, &self.sum_prev);
        for v in avg.values_mut() {
            *v /= denom;
        }
        self.current = Some(avg);
        self.sum_prev.axpy(1.0, xk);
    }
}

/// Runs the realization selected by `config.variant`.
pub fn run(
    obj: &SmoothObjective,
    reg: &Regularizer,
    x0: &BlockVector,
    config: &SolverConfig,
) -> Result<RunResult> {
    match config.variant {
        Variant::Generic => run_generic(obj, reg, x0, config),
        Variant::Smooth => {
            if !reg.is_zero() {
                return Err(Error::InvalidConfig("the smooth realization requires psi = 0".into()));
            }
            run_smooth(obj, x0, config)
        }
        Variant::Efficient => run_efficient(obj, reg, x0, config),
    }
}

/// The smooth specialization: the generic loop with `psi = 0`, where the
/// prox step reduces to `z - B_i^{-1} grad / tau` explicitly.
pub fn run_smooth(obj: &SmoothObjective, x0: &BlockVector, config: &SolverConfig) -> Result<RunResult> {
    let reg = Regularizer::zero(obj.partition().block_count());
    let mut cfg = config.clone();
    cfg.variant = Variant::Generic;
    run_generic(obj, &reg, x0, &cfg)
}

/// Reference realization carrying `x_k` and `z_k` explicitly. Residuals
/// `A x`, `A z` are maintained incrementally, so gradient work still only
/// touches sampled column supports; the per-iteration full-dimensional
/// vector operations are what the efficient realization removes.
pub fn run_generic(
    obj: &SmoothObjective,
    reg: &Regularizer,
    x0: &BlockVector,
    config: &SolverConfig,
) -> Result<RunResult> {
    validate(obj, reg, x0, config)?;
    let partition = obj.partition();
    let n = partition.block_count();
    let m = obj.matrix().rows();
    let p = config.sampling.probability_vector();
    let stride = config.stride();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut x = x0.clone();
    let mut z = x0.clone();
    let mut y = x0.clone();

    let mut r_z = vec![0.0; m];
    obj.matrix().multiply_into(&z, &mut r_z);
    let mut r_x = r_z.clone();
    let mut r_y = r_z.clone();

    let mut theta = config.schedule.theta0();
    let mut counter: u64 = 0;
    let start = Instant::now();
    let mut trace = Trace::default();

    let max_block = (0..n).map(|i| partition.size(i)).max().unwrap();
    let mut gbuf = vec![0.0; max_block];
    let mut znew = vec![0.0; max_block];
    let mut sset: Vec<usize> = Vec::new();

    let mut averager = if config.track_average && config.schedule.is_constant() {
        Some(AverageTracker::new(x0, theta))
    } else {
        None
    };
    let mut history = config.history_cap.map(|_| RunHistory {
        z: vec![z.clone()],
        x: vec![x.clone()],
        theta: Vec::new(),
    });

    for k in 0..config.iterations {
        // y_k = (1 - theta) x_k + theta z_k; theta = 1 short-circuits to
        // z_k so the collapse identities hold bitwise
        if theta == 1.0 {
            y.copy_from(&z);
            r_y.copy_from_slice(&r_z);
        } else {
            y.convex_combination(theta, &x, &z);
            for j in 0..m {
                r_y[j] = (1.0 - theta) * r_x[j] + theta * r_z[j];
            }
        }
        config.sampling.draw_into(&mut rng, &mut sset);

        // x_{k+1} starts from y_k and changes only sampled blocks
        x.copy_from(&y);
        r_x.copy_from_slice(&r_y);

        for &i in &sset {
            let ni = partition.size(i);
            let g = &mut gbuf[..ni];
            counter += obj.block_gradient_into(i, &r_y, g);
            let tau = theta * config.v.get(i) / p.get(i);
            let zn = &mut znew[..ni];
            reg.prox_step(i, g, z.block(i), tau, obj.metric(), zn);

            let coeff = theta / p.get(i);
            {
                let zb = z.block(i);
                let xb = x.block_mut(i);
                if coeff == 1.0 {
                    xb.copy_from_slice(zn);
                } else {
                    for c in 0..ni {
                        xb[c] = y.block(i)[c] + coeff * (zn[c] - zb[c]);
                    }
                }
            }
            // residual maintenance over the same column support
            {
                let zb = z.block(i);
                for c in 0..ni {
                    let d = zn[c] - zb[c];
                    gbuf[c] = d; // reuse as the delta buffer
                }
            }
            let delta = &gbuf[..ni];
            obj.matrix().add_scaled_block_column(i, delta, 1.0, &mut r_z);
            obj.matrix().add_scaled_block_column(i, delta, coeff, &mut r_x);
            z.block_mut(i).copy_from_slice(zn);
        }

        let kk = k + 1;
        if let Some(avg) = averager.as_mut() {
            avg.push(&x);
        }
        if let Some(h) = history.as_mut() {
            if kk <= config.history_cap.unwrap() {
                h.theta.push(theta);
                h.z.push(z.clone());
                h.x.push(x.clone());
            }
        }
        if kk % stride == 0 || kk == config.iterations {
            let (fx, psix, total) = if config.eval_objective {
                let fx = obj.value_from_residual(&r_x);
                let psix = reg.value(&x);
                (fx, psix, fx + psix)
            } else {
                (f64::NAN, f64::NAN, f64::NAN)
            };
            trace.points.push(TracePoint {
                k: kk,
                objective: total,
                smooth: fx,
                penalty: psix,
                theta,
                touched_nnz: counter,
                wall_ns: start.elapsed().as_nanos(),
            });
        }
        theta = config.schedule.advance(theta);
    }

    Ok(RunResult {
        trace,
        x,
        x_hat: averager.and_then(|a| a.current),
        history,
        touched_nnz: counter,
    })
}

/// Residual-maintained realization. State is `(z_k, g_k, alpha_k)` with
/// `u = A g` and `w = A z`; block gradients read `phi_j'(alpha u_j + w_j)`
/// over the sampled column supports only. Iterates are reconstructed as
/// `x_{k+1} = z_{k+1} + alpha_k g_{k+1}` for logging and output.
pub fn run_efficient(
    obj: &SmoothObjective,
    reg: &Regularizer,
    x0: &BlockVector,
    config: &SolverConfig,
) -> Result<RunResult> {
    validate(obj, reg, x0, config)?;
    let partition = obj.partition();
    let n = partition.block_count();
    let m = obj.matrix().rows();
    let p = config.sampling.probability_vector();
    let stride = config.stride();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut z = x0.clone();
    let mut g = BlockVector::zeros(partition);
    let mut alpha = 1.0f64;

    let mut w = vec![0.0; m];
    obj.matrix().multiply_into(&z, &mut w);
    let mut u = vec![0.0; m];

    let mut theta = config.schedule.theta0();
    let mut counter: u64 = 0;
    let start = Instant::now();
    let mut trace = Trace::default();

    let max_block = (0..n).map(|i| partition.size(i)).max().unwrap();
    let mut gradbuf = vec![0.0; max_block];
    let mut znew = vec![0.0; max_block];
    // per-iteration steps t_k^i, flat with offsets: all gradients are taken
    // at the iteration-start point, so updates apply only after every
    // sampled block has solved its subproblem
    let mut steps: Vec<f64> = Vec::new();
    let mut step_off: Vec<usize> = Vec::new();
    let mut sset: Vec<usize> = Vec::new();

    let mut averager = if config.track_average && config.schedule.is_constant() {
        Some(AverageTracker::new(x0, theta))
    } else {
        None
    };
    let mut history = config.history_cap.map(|_| RunHistory {
        z: vec![z.clone()],
        x: vec![x0.clone()],
        theta: Vec::new(),
    });

    let reconstruct = |z: &BlockVector, g: &BlockVector, alpha_k: f64| -> BlockVector {
        let mut x = z.clone();
        x.axpy(alpha_k, g);
        x
    };

    let mut final_x = x0.clone();
    if config.iterations == 0 {
        return Ok(RunResult {
            trace,
            x: final_x,
            x_hat: None,
            history,
            touched_nnz: 0,
        });
    }

    for k in 0..config.iterations {
        config.sampling.draw_into(&mut rng, &mut sset);

        // phase 1: solve every subproblem at the frozen gradient point
        steps.clear();
        step_off.clear();
        for &i in &sset {
            let ni = partition.size(i);
            let gr = &mut gradbuf[..ni];
            counter += obj.block_gradient_affine_into(i, &u, &w, alpha, gr);
            let tau = theta * config.v.get(i) / p.get(i);
            let zn = &mut znew[..ni];
            reg.prox_step(i, gr, z.block(i), tau, obj.metric(), zn);
            step_off.push(steps.len());
            for (&new, &old) in zn.iter().zip(z.block(i)) {
                steps.push(new - old);
            }
        }

        // phase 2: apply the block and residual updates
        for (si, &i) in sset.iter().enumerate() {
            let ni = partition.size(i);
            let t = &steps[step_off[si]..step_off[si] + ni];
            // g^i <- g^i - alpha^{-1} (1 - theta/p_i) t ; the collapse
            // coefficient 1 - theta/p_i = 0 skips the division entirely
            let coeff = 1.0 - theta / p.get(i);
            if coeff != 0.0 {
                if alpha < MIN_TRANSFER_ALPHA {
                    // (1 - theta)^k underflowed; only constant schedules
                    // off the collapse path can get here
                    return Err(Error::InvalidConfig(
                        "the transfer sequence underflowed; use the accelerated schedule or the \
                         generic realization for runs this long"
                            .into(),
                    ));
                }
                let factor = coeff / alpha;
                for (gc, &tc) in g.block_mut(i).iter_mut().zip(t.iter()) {
                    *gc -= factor * tc;
                }
                obj.matrix().add_scaled_block_column(i, t, -factor, &mut u);
            }
            obj.matrix().add_scaled_block_column(i, t, 1.0, &mut w);
            for (zc, &tc) in z.block_mut(i).iter_mut().zip(t.iter()) {
                *zc += tc;
            }
        }

        let kk = k + 1;
        let alpha_k = alpha; // alpha_k before the end-of-iteration update
        let theta_next_val = config.schedule.advance(theta);
        alpha *= 1.0 - theta_next_val;

        let want_history = history.is_some() && kk <= config.history_cap.unwrap();
        let want_log = kk % stride == 0 || kk == config.iterations;
        let want_avg = averager.is_some();
        if want_history || want_log || want_avg || kk == config.iterations {
            let xk = reconstruct(&z, &g, alpha_k);
            if let Some(avg) = averager.as_mut() {
                avg.push(&xk);
            }
            if want_history {
                let h = history.as_mut().unwrap();
                h.theta.push(theta);
                h.z.push(z.clone());
                h.x.push(xk.clone());
            }
            if want_log {
                let (fx, psix, total) = if config.eval_objective {
                    let fx = obj.value(&xk);
                    let psix = reg.value(&xk);
                    (fx, psix, fx + psix)
                } else {
                    (f64::NAN, f64::NAN, f64::NAN)
                };
                trace.points.push(TracePoint {
                    k: kk,
                    objective: total,
                    smooth: fx,
                    penalty: psix,
                    theta,
                    touched_nnz: counter,
                    wall_ns: start.elapsed().as_nanos(),
                });
            }
            if kk == config.iterations {
                final_x = xk;
            }
        }
        theta = theta_next_val;
    }

    Ok(RunResult {
        trace,
        x: final_x,
        x_hat: averager.and_then(|a| a.current),
        history,
        touched_nnz: counter,
    })
}

/// The named methods the iteration specializes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Full sampling, constant theta = 1, smooth only.
    Gd,
    /// Full sampling, accelerated from theta0 = 1, smooth only.
    Agd,
    /// Arbitrary sampling, constant theta0 = min_i p_i, smooth only.
    Pcd,
    /// Arbitrary sampling, accelerated from theta0 = 1, smooth only.
    Apcd,
    /// Full sampling, constant theta = 1, proximal.
    ProxGd,
    /// Full sampling, accelerated from theta0 = 1, proximal.
    AccProxGd,
    /// Uniform sampling, constant theta0 = E|S|/n, proximal; the
    /// single-sequence collapse case.
    Pcdm,
    /// Arbitrary sampling, accelerated from theta0 = min_i p_i, proximal.
    Approxis,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::Gd,
        Preset::Agd,
        Preset::Pcd,
        Preset::Apcd,
        Preset::ProxGd,
        Preset::AccProxGd,
        Preset::Pcdm,
        Preset::Approxis,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Gd => "gd",
            Preset::Agd => "agd",
            Preset::Pcd => "pcd",
            Preset::Apcd => "apcd",
            Preset::ProxGd => "prox_gd",
            Preset::AccProxGd => "acc_prox_gd",
            Preset::Pcdm => "pcdm",
            Preset::Approxis => "approxis",
        }
    }

    pub fn requires_zero_reg(&self) -> bool {
        matches!(self, Preset::Gd | Preset::Agd | Preset::Pcd | Preset::Apcd)
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Preset::Gd | Preset::Agd | Preset::ProxGd | Preset::AccProxGd)
    }

    pub fn is_accelerated(&self) -> bool {
        matches!(self, Preset::Agd | Preset::Apcd | Preset::AccProxGd | Preset::Approxis)
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "gd" => Ok(Preset::Gd),
            "agd" => Ok(Preset::Agd),
            "pcd" => Ok(Preset::Pcd),
            "apcd" => Ok(Preset::Apcd),
            "prox_gd" => Ok(Preset::ProxGd),
            "acc_prox_gd" => Ok(Preset::AccProxGd),
            "pcdm" => Ok(Preset::Pcdm),
            "approxis" => Ok(Preset::Approxis),
            other => Err(Error::InvalidConfig(format!("unknown preset `{other}`"))),
        }
    }
}

/// Builds the exact `(sampling, schedule, theta0, v)` tuple of a named
/// preset. Deterministic presets force the full sampling; randomized ones
/// default to serial-uniform when no sampling is given. The weights come
/// from the matching exact rule (serial or full); other samplings need
/// `user_v`.
pub fn preset_config(
    preset: Preset,
    obj: &SmoothObjective,
    reg: &Regularizer,
    sampling: Option<Sampling>,
    user_v: Option<Weights>,
) -> Result<SolverConfig> {
    let n = obj.partition().block_count();
    if preset.requires_zero_reg() && !reg.is_zero() {
        return Err(Error::InvalidConfig(format!(
            "preset `{}` solves the smooth problem; drop the regularizer or use its proximal counterpart",
            preset.name()
        )));
    }
    let sampling = match (preset.is_deterministic(), sampling) {
        (true, Some(s)) => {
            if s.min_probability() < 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "preset `{}` is deterministic and requires the full sampling",
                    preset.name()
                )));
            }
            s
        }
        (true, None) => Sampling::full(n)?,
        (false, Some(s)) => s,
        (false, None) => Sampling::serial_uniform(n)?,
    };
    if preset == Preset::Pcdm && !sampling.is_uniform() {
        return Err(Error::InvalidConfig(
            "the pcdm preset is defined for uniform samplings".into(),
        ));
    }
    let v = match user_v {
        Some(v) => {
            if v.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: v.len() });
            }
            v
        }
        None => {
            if sampling.min_probability() >= 1.0 {
                eso::full_eso(obj)
            } else if sampling.is_serial() {
                eso::serial_eso(obj)
            } else {
                return Err(Error::InvalidConfig(
                    "no closed-form weights for this sampling; supply v explicitly and certify it"
                        .into(),
                ));
            }
        }
    };
    let schedule = match preset {
        Preset::Gd | Preset::ProxGd => ThetaSchedule::Constant(1.0),
        Preset::Agd | Preset::AccProxGd | Preset::Apcd => ThetaSchedule::Accelerated(1.0),
        Preset::Pcd => ThetaSchedule::Constant(sampling.min_probability()),
        Preset::Pcdm => {
            ThetaSchedule::Constant(sampling.expected_size() / n as f64)
        }
        Preset::Approxis => ThetaSchedule::Accelerated(sampling.min_probability()),
    };
    Ok(SolverConfig::new(sampling, v, schedule, 0, 0))
}
