//! Rank sweeps: one shared set of starting points, fits at every rank, MCI
//! islands and any subset of the baselines, with deterministic parallelism.

use std::path::PathBuf;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    self, FitPlan, Method, MethodResult, Selection, DEFAULT_COPHENETIC_DROP, DEFAULT_ELBOW_TOLERANCE,
    DEFAULT_SLOPE_RTOL,
};
use crate::error::{Error, Result};
use crate::init::{make_init_set, InitSet};
use crate::masked::{estimate_iteration_cost, masked_error, masked_fit};
use crate::matcore::{generate_wold_mask, load_matrix, DenseMatrix, MatrixFormat, DEFAULT_HOLDOUT_FRACTION};
use crate::rng;
use crate::rsic::{self, IslandParams, MciCurve, DEFAULT_THETA, DEFAULT_THETA_FLAT};
use crate::solver::{fit, relative_residual, Algorithm, FactorPair};

mod report;

pub use report::{emit_report, write_timing, REPORT_SCHEMA_VERSION};

pub const DEFAULT_SEED: u64 = 123_456_789;
pub const DEFAULT_INITS: usize = 100;
pub const DEFAULT_SCD_ITERS: usize = 100;
pub const DEFAULT_MU_ITERS: usize = 500;
pub const DEFAULT_K_MIN: usize = 2;
pub const DEFAULT_K_MAX_CAP: usize = 64;
pub const DEFAULT_REPEATS: usize = 10;
pub const DEFAULT_COST_CEILING: u128 = 1_000_000_000_000;

const CV_TAG: &str = "imputation-cv";

/// Everything that determines a sweep.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub input: Option<PathBuf>,
    pub format: MatrixFormat,
    pub k_min: usize,
    /// `None` means `min(m, n, 64)`.
    pub k_max: Option<usize>,
    pub inits: usize,
    pub scd_iters: usize,
    pub mu_iters: usize,
    pub algorithm: Algorithm,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub holdout_fraction: f64,
    /// Repeats for the permutation and imputation methods.
    pub repeats: usize,
    pub theta: f64,
    pub theta_flat: f64,
    pub cophenetic_drop: f64,
    pub elbow_tolerance: f64,
    pub normalize_residuals: bool,
    pub smooth_mci: bool,
    pub cost_ceiling: u128,
    pub threads: usize,
    pub out: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            input: None,
            format: MatrixFormat::Csv { header: false },
            k_min: DEFAULT_K_MIN,
            k_max: None,
            inits: DEFAULT_INITS,
            scd_iters: DEFAULT_SCD_ITERS,
            mu_iters: DEFAULT_MU_ITERS,
            algorithm: Algorithm::Scd,
            methods: vec![Method::Mci],
            seed: DEFAULT_SEED,
            holdout_fraction: DEFAULT_HOLDOUT_FRACTION,
            repeats: DEFAULT_REPEATS,
            theta: DEFAULT_THETA,
            theta_flat: DEFAULT_THETA_FLAT,
            cophenetic_drop: DEFAULT_COPHENETIC_DROP,
            elbow_tolerance: DEFAULT_ELBOW_TOLERANCE,
            normalize_residuals: false,
            smooth_mci: false,
            cost_ceiling: DEFAULT_COST_CEILING,
            threads: 1,
            out: None,
        }
    }
}

impl SweepConfig {
    pub fn iterations(&self) -> usize {
        match self.algorithm {
            Algorithm::Scd => self.scd_iters,
            Algorithm::Mu => self.mu_iters,
        }
    }

    pub fn resolved_k_max(&self, m: usize, n: usize) -> usize {
        self.k_max.unwrap_or_else(|| m.min(n).min(DEFAULT_K_MAX_CAP))
    }

    /// Checks the settings against a matrix of shape `m x n`.
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        let k_max = self.resolved_k_max(m, n);
        let bad = |msg: String| Err(Error::Parameter(msg));
        if self.k_min < 2 || self.k_min > k_max || k_max > m.min(n) {
            return bad(format!(
                "ranks must satisfy 2 <= k_min <= k_max <= min(m, n) = {}; got {}..{k_max}",
                m.min(n),
                self.k_min
            ));
        }
        if self.inits < 2 {
            return bad(format!("at least 2 initializations are required, got {}", self.inits));
        }
        if self.scd_iters == 0 || self.mu_iters == 0 {
            return bad("iteration counts must be positive".into());
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return bad(format!("holdout fraction must lie in (0, 1), got {}", self.holdout_fraction));
        }
        if !(self.theta > 0.0) || !(self.theta_flat >= 0.0) {
            return bad("theta must be positive and theta-flat non-negative".into());
        }
        if self.threads == 0 {
            return bad("thread budget must be positive".into());
        }
        let needs_repeats = self.methods.iter().any(|m| matches!(m, Method::Permutation | Method::Kscv | Method::Madimput));
        if needs_repeats && (self.repeats < 2 || self.repeats > self.inits) {
            return bad(format!(
                "repeats must lie in 2..={} (the number of initializations), got {}",
                self.inits, self.repeats
            ));
        }
        if self.methods.contains(&Method::Mci) && k_max - self.k_min < 2 {
            return bad("MCI islands need at least 3 ranks".into());
        }
        if self.methods.contains(&Method::Elbow) && k_max - self.k_min < 2 {
            return bad("the elbow needs at least 3 ranks".into());
        }
        Ok(())
    }

    /// The part of the configuration that determines report content.
    pub fn echo(&self, m: usize, n: usize) -> ConfigEcho {
        ConfigEcho {
            input: self.input.as_ref().map(|p| p.display().to_string()),
            format: format_name(self.format).to_string(),
            k_min: self.k_min,
            k_max: self.resolved_k_max(m, n),
            inits: self.inits,
            scd_iters: self.scd_iters,
            mu_iters: self.mu_iters,
            algorithm: self.algorithm,
            methods: self.methods.clone(),
            seed: self.seed,
            holdout_fraction: self.holdout_fraction,
            repeats: self.repeats,
            theta: self.theta,
            theta_flat: self.theta_flat,
            cophenetic_drop: self.cophenetic_drop,
            elbow_tolerance: self.elbow_tolerance,
            normalize_residuals: self.normalize_residuals,
            smooth_mci: self.smooth_mci,
            cost_ceiling: self.cost_ceiling,
        }
    }
}

fn format_name(f: MatrixFormat) -> &'static str {
    match f {
        MatrixFormat::Csv { header: false } => "csv",
        MatrixFormat::Csv { header: true } => "csv-header",
        MatrixFormat::MatrixMarket => "mtx",
    }
}

/// Configuration as recorded in the report. Thread budget and output
/// directory are left out because they do not affect results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub input: Option<String>,
    pub format: String,
    pub k_min: usize,
    pub k_max: usize,
    pub inits: usize,
    pub scd_iters: usize,
    pub mu_iters: usize,
    pub algorithm: Algorithm,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub holdout_fraction: f64,
    pub repeats: usize,
    pub theta: f64,
    pub theta_flat: f64,
    pub cophenetic_drop: f64,
    pub elbow_tolerance: f64,
    pub normalize_residuals: bool,
    pub smooth_mci: bool,
    pub cost_ceiling: u128,
}

/// Structured result of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSweepReport {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub rows: usize,
    pub cols: usize,
    pub ranks: Vec<usize>,
    /// Raw MCI per rank; empty unless the shared fits ran.
    pub mci: Vec<f64>,
    /// Curve the islands were detected on (smoothed if requested).
    pub mci_detection: Vec<f64>,
    pub islands: Vec<usize>,
    /// Mean and median relative residual over runs, per rank.
    pub mean_residual: Vec<f64>,
    pub median_residual: Vec<f64>,
    /// Estimated multiplications per iteration, per rank, without and with missing values.
    pub iteration_cost: Vec<u128>,
    pub masked_iteration_cost: Vec<u128>,
    /// One entry per requested method, in request order.
    pub methods: Vec<MethodResult>,
}

impl RankSweepReport {
    pub fn method(&self, m: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|r| r.method == m)
    }
}

/// Wall-clock seconds per phase, kept apart from the report so that the
/// report stays reproducible.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timing {
    pub phases: Vec<(String, f64)>,
}

impl Timing {
    fn record<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        info!("{name}: {secs:.2}s");
        self.phases.push((name.to_string(), secs));
        out
    }
}

/// Loads the configured input and runs [`run_sweep_on`].
pub fn run_sweep(config: &SweepConfig) -> Result<(RankSweepReport, Timing)> {
    let path = config
        .input
        .as_ref()
        .ok_or_else(|| Error::Parameter("no input matrix given".into()))?;
    let a = load_matrix(path, config.format)?;
    run_sweep_on(&a, config)
}

/// Runs a sweep on `a` inside a thread pool of `config.threads` workers.
pub fn run_sweep_on(a: &DenseMatrix, config: &SweepConfig) -> Result<(RankSweepReport, Timing)> {
    a.ensure_non_negative()?;
    let (m, n) = a.shape();
    config.validate(m, n)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot build thread pool: {e}")))?;
    pool.install(|| Sweep::new(a, config).run())
}

/// Which methods consume the shared fits.
fn uses_shared_fits(m: Method) -> bool {
    matches!(m, Method::Mci | Method::Elbow | Method::Cophenetic | Method::Dispersion)
}

struct Sweep<'a> {
    a: &'a DenseMatrix,
    config: &'a SweepConfig,
    k_min: usize,
    k_max: usize,
}

/// Per-rank summaries of the shared fits.
#[derive(Default)]
struct SharedCurves {
    mci: Vec<f64>,
    /// `residuals[t][r]`: relative residual of run `r` at rank `k_min + t`.
    residuals: Vec<Vec<f64>>,
    cophenetic: Vec<f64>,
    dispersion: Vec<f64>,
}

impl<'a> Sweep<'a> {
    fn new(a: &'a DenseMatrix, config: &'a SweepConfig) -> Self {
        let (m, n) = a.shape();
        Self {
            a,
            config,
            k_min: config.k_min,
            k_max: config.resolved_k_max(m, n),
        }
    }

    fn ranks(&self) -> std::ops::RangeInclusive<usize> {
        self.k_min..=self.k_max
    }

    fn dense_cost(&self, rows: usize, cols: usize) -> u128 {
        self.ranks()
            .map(|k| estimate_iteration_cost(rows as u64, cols as u64, k as u64, false))
            .sum()
    }

    /// Projected multiplications for everything `method` has to fit.
    fn projected_cost(&self, method: Method) -> u128 {
        let (m, n) = self.a.shape();
        let c = self.config;
        let iters = c.iterations() as u128;
        match method {
            Method::Mci | Method::Elbow | Method::Cophenetic | Method::Dispersion => {
                c.inits as u128 * iters * self.dense_cost(m, n)
            }
            Method::Permutation => 2 * c.repeats as u128 * iters * self.dense_cost(m, n),
            Method::Ari => 2 * c.inits as u128 * iters * self.dense_cost(m, n / 2),
            Method::Kscv | Method::Madimput => {
                let per_iter: u128 = self
                    .ranks()
                    .map(|k| estimate_iteration_cost(m as u64, n as u64, k as u64, true))
                    .sum();
                c.repeats as u128 * c.scd_iters as u128 * per_iter
            }
        }
    }

    fn run(self) -> Result<(RankSweepReport, Timing)> {
        let c = self.config;
        let (m, n) = self.a.shape();
        let mut timing = Timing::default();
        let inits = timing.record("initialization", || {
            make_init_set(m, n, self.k_min, self.k_max, c.inits, c.seed)
        })?;
        let plan = FitPlan {
            inits: &inits,
            algorithm: c.algorithm,
            iterations: c.iterations(),
            seed: c.seed,
        };

        let feasible = |method: Method| self.projected_cost(method) <= c.cost_ceiling;
        let shared_needed = c
            .methods
            .iter()
            .any(|&meth| (uses_shared_fits(meth) || meth == Method::Permutation) && feasible(meth))
            && feasible(Method::Mci);
        let shared = if shared_needed {
            let needs_consensus = c
                .methods
                .iter()
                .any(|m| matches!(m, Method::Cophenetic | Method::Dispersion));
            timing.record("shared fits", || self.shared_fits(&inits, needs_consensus))?
        } else {
            SharedCurves::default()
        };

        let mut report = RankSweepReport {
            schema_version: REPORT_SCHEMA_VERSION,
            config: c.echo(m, n),
            rows: m,
            cols: n,
            ranks: self.ranks().collect(),
            mci: shared.mci.clone(),
            mci_detection: Vec::new(),
            islands: Vec::new(),
            mean_residual: shared.residuals.iter().map(|r| mean(r)).collect(),
            median_residual: shared.residuals.iter().map(|r| baselines::median(r)).collect(),
            iteration_cost: self
                .ranks()
                .map(|k| estimate_iteration_cost(m as u64, n as u64, k as u64, false))
                .collect(),
            masked_iteration_cost: self
                .ranks()
                .map(|k| estimate_iteration_cost(m as u64, n as u64, k as u64, true))
                .collect(),
            methods: Vec::new(),
        };

        let cv_methods = c.methods.iter().any(|m| m.is_masked() && feasible(*m));
        let cv_samples = if cv_methods {
            Some(timing.record("imputation fits", || self.cv_samples(&inits))?)
        } else {
            None
        };

        for &method in &c.methods {
            let projected_cost = self.projected_cost(method);
            let mut result = MethodResult {
                method,
                metric: metric_name(method).to_string(),
                k_min: self.k_min,
                per_rank_metric: Vec::new(),
                selected: Selection::Undetermined,
                projected_cost,
            };
            if projected_cost > c.cost_ceiling {
                info!("{method}: projected cost {projected_cost} exceeds ceiling {}; skipped", c.cost_ceiling);
                result.selected = Selection::NotApplicable {
                    reason: format!(
                        "projected cost {projected_cost} exceeds the ceiling {}",
                        c.cost_ceiling
                    ),
                };
                report.methods.push(result);
                continue;
            }
            let (curve, selected) = match method {
                Method::Mci => {
                    let (detection, islands) = self.islands(&shared.mci)?;
                    report.mci_detection = detection;
                    report.islands = islands.clone();
                    let sel = if islands.is_empty() {
                        Selection::Undetermined
                    } else {
                        Selection::Ranks { ranks: islands }
                    };
                    (shared.mci.clone(), sel)
                }
                Method::Elbow => baselines::elbow_select(self.k_min, &report.mean_residual, c.elbow_tolerance)?,
                Method::Cophenetic => {
                    let sel = baselines::select_cophenetic(self.k_min, &shared.cophenetic, c.cophenetic_drop);
                    (shared.cophenetic.clone(), sel)
                }
                Method::Dispersion => {
                    let sel = baselines::select_dispersion(self.k_min, &shared.dispersion);
                    (shared.dispersion.clone(), sel)
                }
                Method::Permutation => timing.record("permutation", || self.permutation(&plan, &shared))?,
                Method::Ari => timing.record("split-half ARI", || baselines::ari_split_select(self.a, &plan))?,
                Method::Kscv => baselines::ks_cv_select(self.k_min, cv_samples.as_ref().unwrap())?,
                Method::Madimput => baselines::madimput_select(self.k_min, cv_samples.as_ref().unwrap())?,
            };
            info!("{method}: {selected:?}");
            result.per_rank_metric = curve;
            result.selected = selected;
            report.methods.push(result);
        }
        Ok((report, timing))
    }

    fn shared_fits(&self, inits: &InitSet, needs_consensus: bool) -> Result<SharedCurves> {
        let c = self.config;
        let scale = if c.normalize_residuals {
            1.0 / self.a.frobenius_norm()
        } else {
            1.0
        };
        let mut out = SharedCurves::default();
        for k in self.ranks() {
            let fits = (0..inits.runs())
                .into_par_iter()
                .map(|r| {
                    let (w0, h0) = inits.slice(r, k)?;
                    fit(self.a, &w0, &h0, c.algorithm, c.iterations())
                })
                .collect::<Result<Vec<FactorPair>>>()?;
            let stack = rsic::build_residual_stack(self.a, &fits)?;
            let mci = if scale == 1.0 {
                rsic::mci(&stack)
            } else {
                rsic::mci(&stack.scaled(scale))
            };
            drop(stack);
            out.mci.push(mci);
            out.residuals.push(
                fits.iter()
                    .map(|f| relative_residual(self.a, f))
                    .collect::<Result<Vec<f64>>>()?,
            );
            if needs_consensus {
                let cons = baselines::consensus(&fits)?;
                out.dispersion.push(baselines::dispersion_coefficient(&cons));
                out.cophenetic.push(if cons.size() >= 3 {
                    baselines::cophenetic_coefficient(&cons)?.coefficient
                } else {
                    0.0
                });
            }
            info!("rank {k}: MCI {mci:.6e}");
        }
        Ok(out)
    }

    fn islands(&self, mci: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
        let c = self.config;
        let mut params = IslandParams::for_matrix(self.a, c.theta);
        params.theta_flat = c.theta_flat;
        if c.normalize_residuals {
            params.floor /= self.a.frobenius_norm();
        }
        let mut curve = MciCurve::new(self.k_min, mci.to_vec())?;
        if c.smooth_mci {
            curve = curve.smoothed();
        }
        let islands = rsic::detect_islands(&curve, &params)?;
        Ok((curve.values, islands))
    }

    fn permutation(&self, plan: &FitPlan<'_>, shared: &SharedCurves) -> Result<(Vec<f64>, Selection)> {
        let repeats = self.config.repeats;
        if shared.residuals.is_empty() {
            return baselines::permutation_select(self.a, plan, repeats);
        }
        let unpermuted: Vec<Vec<f64>> = (0..repeats)
            .map(|r| shared.residuals.iter().map(|per_run| per_run[r]).collect())
            .collect();
        let permuted = (0..repeats)
            .into_par_iter()
            .map(|r| baselines::permuted_residual_curve(self.a, plan, r))
            .collect::<Result<Vec<_>>>()?;
        baselines::select_from_curves(self.k_min, &unpermuted, &permuted, DEFAULT_SLOPE_RTOL)
    }

    /// Masked errors per rank (outer) and repeat (inner). Repeat `r` holds out
    /// a fresh pattern and starts from run `r` of the shared initializations.
    fn cv_samples(&self, inits: &InitSet) -> Result<Vec<Vec<f64>>> {
        let c = self.config;
        let (m, n) = self.a.shape();
        let masks = (0..c.repeats)
            .map(|r| {
                let mut s = rng::stream(c.seed, CV_TAG, &[r as u64]);
                generate_wold_mask(m, n, c.holdout_fraction, &mut s)
            })
            .collect::<Result<Vec<_>>>()?;
        let tasks: Vec<(usize, usize)> = self
            .ranks()
            .flat_map(|k| (0..c.repeats).map(move |r| (k, r)))
            .collect();
        let errors = tasks
            .par_iter()
            .map(|&(k, r)| {
                let (w0, h0) = inits.slice(r, k)?;
                let f = masked_fit(self.a, &masks[r], &w0, &h0, c.scd_iters)?;
                masked_error(self.a, &masks[r], &f)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(errors.chunks(c.repeats).map(<[f64]>::to_vec).collect())
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn metric_name(m: Method) -> &'static str {
    match m {
        Method::Mci => "mean coordinatewise IQR of residuals",
        Method::Elbow => "normalized distance to the end-to-end chord of the mean relative residual",
        Method::Cophenetic => "cophenetic correlation of the consensus matrix",
        Method::Dispersion => "dispersion coefficient of the consensus matrix",
        Method::Permutation => "mean slope difference, original minus shuffled",
        Method::Ari => "mean split-half adjusted Rand index",
        Method::Kscv => "mean held-out error",
        Method::Madimput => "median absolute deviation of held-out error",
    }
}
