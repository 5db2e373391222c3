//! Resolution of flags + config file into a runnable experiment: problem
//! data, regularizer, sampling, schedule, weights and run knobs.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

use alpha_core::blockspace::{BlockMetric, BlockPartition, BlockVector, Weights};
use alpha_core::eso;
use alpha_core::objective::{
    load_coordinate_file, load_row_sparse_file, load_targets_file, logistic_losses,
    square_losses, SmoothObjective, SparseMatrix,
};
use alpha_core::eso::EsoMethod;
use alpha_core::regularizer::{BlockPenalty, Regularizer};
use alpha_core::sampling::{Sampling, DEFAULT_ATOM_CAP};
use alpha_core::solver::{preset_config, Preset, SolverConfig, ThetaSchedule, Variant};

use crate::RunArgs;

/// Atom-enumeration cap, overridable through `ALPHA_ATOM_CAP`.
pub fn atom_cap() -> u128 {
    std::env::var("ALPHA_ATOM_CAP")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_ATOM_CAP)
}

/// How the weights are to be vetted before running.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertifyMode {
    Psd,
    MonteCarlo,
    Off,
}

/// A fully resolved experiment.
pub struct Experiment {
    pub objective: SmoothObjective,
    pub regularizer: Regularizer,
    pub base_config: SolverConfig,
    pub v_method: EsoMethod,
    pub preset: Option<Preset>,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub want_bound: bool,
    pub xstar_path: Option<PathBuf>,
    pub compute_xstar: bool,
    pub gamma_diagnostics: bool,
    pub certify_mode: CertifyMode,
    pub trials: usize,
    pub jobs: usize,
}

/// Reads a flat `key=value` file; keys mirror the long flag names.
fn read_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut map = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), idx + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

struct Resolver {
    file: HashMap<String, String>,
}

impl Resolver {
    fn get<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>> {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| anyhow!("config key `{key}`: cannot parse `{raw}`")),
            None => Ok(None),
        }
    }

    fn get_flag(&self, cli: bool, key: &str) -> Result<bool> {
        if cli {
            return Ok(true);
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse::<bool>()
                .map_err(|_| anyhow!("config key `{key}`: expected true/false, got `{raw}`")),
            None => Ok(false),
        }
    }
}

pub fn resolve(args: &RunArgs) -> Result<Experiment> {
    let file = match &args.config {
        Some(path) => read_config_file(path)?,
        None => HashMap::new(),
    };
    let r = Resolver { file };

    // -------- problem data
    let data: Option<PathBuf> = r.get(args.data.clone(), "data")?;
    let data = data.ok_or_else(|| anyhow!("--data is required"))?;
    let targets_path: Option<PathBuf> = r.get(args.targets.clone(), "targets")?;
    let loss = r
        .get(args.loss.clone(), "loss")?
        .unwrap_or_else(|| "quadratic".to_string());
    let normalize = r.get_flag(args.normalize, "normalize")?;

    let (mut matrix, targets, partition) = match &targets_path {
        Some(tp) => {
            let coo = load_coordinate_file(&data)?;
            let partition = BlockPartition::scalar(coo.cols);
            let matrix = SparseMatrix::from_triplets(&partition, coo.rows, &coo.triplets)?;
            let targets = load_targets_file(tp)?;
            if targets.len() != coo.rows {
                bail!(
                    "targets file has {} entries, matrix has {} rows",
                    targets.len(),
                    coo.rows
                );
            }
            (matrix, targets, partition)
        }
        None => {
            let rs = load_row_sparse_file(&data)?;
            let partition = BlockPartition::scalar(rs.cols);
            let matrix = SparseMatrix::from_triplets(&partition, rs.labels.len(), &rs.triplets)?;
            (matrix, rs.labels.clone(), partition)
        }
    };
    if normalize {
        matrix.normalize_columns();
    }
    let losses = match loss.as_str() {
        "quadratic" => square_losses(&targets),
        "logistic" => logistic_losses(&targets)?,
        other => bail!("unknown loss `{other}` (expected quadratic or logistic)"),
    };
    let metric = BlockMetric::identity(&partition);
    let objective = SmoothObjective::new(matrix, losses, metric)?;
    let n = partition.block_count();

    // -------- regularizer
    let reg_kind = r
        .get(args.reg.clone(), "reg")?
        .unwrap_or_else(|| "none".to_string());
    let lambda = r.get(args.lambda, "lambda")?.unwrap_or(0.1);
    let regularizer = match reg_kind.as_str() {
        "none" => Regularizer::zero(n),
        "l1" => Regularizer::uniform(n, BlockPenalty::L1 { lambda })?,
        "sql2" => Regularizer::uniform(n, BlockPenalty::SqL2 { lambda })?,
        "box" => {
            let spec: String = r
                .get(args.r#box.clone(), "box")?
                .ok_or_else(|| anyhow!("--reg box needs --box lo,hi"))?;
            let (lo, hi) = spec
                .split_once(',')
                .ok_or_else(|| anyhow!("--box expects `lo,hi`"))?;
            let lo: f64 = lo.trim().parse().context("bad box lower bound")?;
            let hi: f64 = hi.trim().parse().context("bad box upper bound")?;
            Regularizer::uniform(n, BlockPenalty::Box { lo, hi })?
        }
        other => bail!("unknown regularizer `{other}`"),
    };

    // -------- sampling / schedule / weights
    let sampling_spec: Option<String> = r.get(args.sampling.clone(), "sampling")?;
    let sampling = sampling_spec
        .map(|s| Sampling::parse(&s, n))
        .transpose()?;
    let preset: Option<Preset> = r
        .get(args.preset.clone(), "preset")?
        .map(|s| Preset::from_str(&s))
        .transpose()?;
    let eso_source: Option<String> = r.get(args.eso.clone(), "eso")?;
    let user_v: Option<Weights> = match r.get(args.v.clone(), "v")? {
        Some(spec) => {
            let vals: Vec<f64> = spec
                .split(',')
                .map(|t| t.trim().parse::<f64>().context("bad value in --v"))
                .collect::<Result<_>>()?;
            Some(Weights::new(vals)?)
        }
        None => None,
    };
    if matches!(eso_source.as_deref(), Some("user")) && user_v.is_none() {
        bail!("--eso user requires --v");
    }

    let mut v_method = EsoMethod::UserSupplied;
    let mut base_config = match preset {
        Some(p) => {
            let explicit_v = match eso_source.as_deref() {
                Some("serial") => {
                    v_method = EsoMethod::SerialExact;
                    Some(eso::serial_eso(&objective))
                }
                Some("full") => {
                    v_method = EsoMethod::FullExact;
                    Some(eso::full_eso(&objective))
                }
                Some("user") => user_v.clone(),
                Some(other) => bail!("unknown --eso source `{other}`"),
                None => user_v.clone(),
            };
            if eso_source.is_none() && user_v.is_none() {
                // the preset resolves the source itself: exact rules for
                // full and serial samplings
                v_method = match &sampling {
                    Some(s) if s.min_probability() < 1.0 && s.is_serial() => EsoMethod::SerialExact,
                    Some(s) if s.min_probability() >= 1.0 => EsoMethod::FullExact,
                    Some(_) => EsoMethod::UserSupplied,
                    None => {
                        if p.is_deterministic() {
                            EsoMethod::FullExact
                        } else {
                            EsoMethod::SerialExact
                        }
                    }
                };
            }
            preset_config(p, &objective, &regularizer, sampling, explicit_v)?
        }
        None => {
            let sampling = sampling.unwrap_or(Sampling::serial_uniform(n)?);
            let v = match eso_source.as_deref() {
                Some("serial") => {
                    v_method = EsoMethod::SerialExact;
                    eso::serial_eso(&objective)
                }
                Some("full") => {
                    v_method = EsoMethod::FullExact;
                    eso::full_eso(&objective)
                }
                Some("user") => user_v.clone().unwrap(),
                Some(other) => bail!("unknown --eso source `{other}`"),
                None => {
                    if let Some(v) = user_v.clone() {
                        v
                    } else if sampling.min_probability() >= 1.0 {
                        v_method = EsoMethod::FullExact;
                        eso::full_eso(&objective)
                    } else if sampling.is_serial() {
                        v_method = EsoMethod::SerialExact;
                        eso::serial_eso(&objective)
                    } else {
                        bail!(
                            "no closed-form weights for this sampling; pass --eso user --v <...> \
                             and certify them"
                        );
                    }
                }
            };
            let default_theta0 = if regularizer.is_zero() {
                1.0
            } else {
                sampling.min_probability()
            };
            let schedule = ThetaSchedule::Accelerated(default_theta0);
            SolverConfig::new(sampling, v, schedule, 0, 0)
        }
    };

    // schedule kind / theta0 overrides
    let schedule_kind: Option<String> = r.get(args.schedule.clone(), "schedule")?;
    if let Some(kind) = schedule_kind {
        let t0 = base_config.schedule.theta0();
        base_config.schedule = match kind.as_str() {
            "constant" => ThetaSchedule::Constant(t0),
            "accelerated" => ThetaSchedule::Accelerated(t0),
            other => bail!("unknown schedule `{other}`"),
        };
    }
    if let Some(t0) = r.get(args.theta0, "theta0")? {
        base_config.schedule = match base_config.schedule {
            ThetaSchedule::Constant(_) => ThetaSchedule::Constant(t0),
            ThetaSchedule::Accelerated(_) => ThetaSchedule::Accelerated(t0),
        };
    }

    base_config.iterations = r.get(args.iters, "iters")?.unwrap_or(100);
    base_config.log_stride = r.get(args.log_stride, "log-stride")?;
    base_config.eval_objective = !r.get_flag(args.no_eval, "no-eval")?;
    let variant: Option<String> = r.get(args.variant.clone(), "variant")?;
    base_config.variant = match variant.as_deref() {
        None | Some("generic") => Variant::Generic,
        Some("smooth") => Variant::Smooth,
        Some("efficient") => Variant::Efficient,
        Some(other) => bail!("unknown variant `{other}`"),
    };

    // -------- seeds
    let seed = r.get(args.seed, "seed")?.unwrap_or(0);
    let seeds_spec: Option<String> = r.get(args.seeds.clone(), "seeds")?;
    let seeds: Vec<u64> = match seeds_spec {
        Some(spec) => {
            let (a, b) = spec
                .split_once("..")
                .ok_or_else(|| anyhow!("--seeds expects `a..b`"))?;
            let a: u64 = a.trim().parse().context("bad seed range start")?;
            let b: u64 = b.trim().parse().context("bad seed range end")?;
            if b < a {
                bail!("--seeds range is empty");
            }
            (a..=b).collect()
        }
        None => vec![seed],
    };
    base_config.seed = seeds[0];

    let certify_mode = match r
        .get(args.certify.clone(), "certify")?
        .unwrap_or_else(|| "off".to_string())
        .as_str()
    {
        "psd" => CertifyMode::Psd,
        "mc" => CertifyMode::MonteCarlo,
        "off" => CertifyMode::Off,
        other => bail!("unknown --certify mode `{other}`"),
    };

    let gamma = matches!(
        r.get(args.diagnostics.clone(), "diagnostics")?.as_deref(),
        Some("gamma")
    );

    Ok(Experiment {
        objective,
        regularizer,
        base_config,
        v_method,
        preset,
        seeds,
        out: r.get(args.out.clone(), "out")?,
        want_bound: r.get_flag(args.bound, "bound")?,
        xstar_path: r.get(args.xstar.clone(), "xstar")?,
        compute_xstar: r.get_flag(args.compute_xstar, "compute-xstar")?,
        gamma_diagnostics: gamma,
        certify_mode,
        trials: r.get(args.trials, "trials")?.unwrap_or(1000),
        jobs: r.get(args.jobs, "jobs")?.unwrap_or(1).max(1),
    })
}

impl Experiment {
    pub fn partition(&self) -> &std::sync::Arc<BlockPartition> {
        self.objective.partition()
    }

    pub fn x0(&self) -> BlockVector {
        BlockVector::zeros(self.partition())
    }

    /// `F = f + psi` at a point.
    pub fn composite_value(&self, x: &BlockVector) -> f64 {
        self.objective.value(x) + self.regularizer.value(x)
    }

    /// The minimizer, from file or computed on demand.
    pub fn minimizer(&self) -> Result<BlockVector> {
        if let Some(path) = &self.xstar_path {
            let vals = load_targets_file(path)?;
            return Ok(BlockVector::from_values(self.partition(), vals)?);
        }
        if !self.compute_xstar {
            bail!("a minimizer is needed: pass --xstar <file> or --compute-xstar");
        }
        if self.regularizer.is_zero() && self.objective.is_quadratic() {
            if let Ok(x) = self.objective.quadratic_minimizer() {
                return Ok(x);
            }
        }
        // long accelerated proximal reference run
        let mut config = preset_config(
            Preset::AccProxGd,
            &self.objective,
            &self.regularizer,
            None,
            None,
        )?;
        config.iterations = 100_000;
        config.log_stride = Some(config.iterations);
        let res = alpha_core::solver::run_generic(
            &self.objective,
            &self.regularizer,
            &self.x0(),
            &config,
        )?;
        Ok(res.x)
    }

    /// Trace path for one seed of a sweep: `t.csv` becomes `t.seed<k>.csv`.
    pub fn out_path_for_seed(&self, seed: u64) -> Option<PathBuf> {
        let out = self.out.as_ref()?;
        if self.seeds.len() == 1 {
            return Some(out.clone());
        }
        let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
        let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
        let name = format!("{stem}.seed{seed}.{ext}");
        Some(out.with_file_name(name))
    }
}
