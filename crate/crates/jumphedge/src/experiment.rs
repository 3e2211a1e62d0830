//! Config-driven studies: convergence-rate sweeps, the compensated-Poisson
//! counterexample, cardinality of combined nets and numerical bound checks.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::approx::{self, JumpScale, SchemeErrors, Threshold, Trajectory};
use crate::hedging::{self, Evaluator, RateCase, StrategyFn, StrategySpec, TableConfig, WeightPath};
use crate::levy::{Atom, Cgmy, LevyMeasure, LevyModel, ModelSummary};
use crate::nets::TimeNet;
use crate::norms::{self, BootstrapConfig, Cell, NormEstimate};
use crate::path::{flag, EngineSummary, KnotGrid, PathEngine, SimConfig, Skeleton};
use crate::payoff::Payoff;
use crate::rng::{stream, Domain};
use crate::semigroup::{BoundCheck, DensityBackend, Semigroup};
use crate::stats::{self, SlopeFit};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("{context}: {message}")]
    Stage { context: String, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

fn stage<E: std::fmt::Display>(context: &'static str) -> impl Fn(E) -> ExperimentError {
    move |e| ExperimentError::Stage { context: context.into(), message: e.to_string() }
}

pub const SCHEMA_VERSION: u32 = 1;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureConfig {
    None,
    Cgmy { c: f64, g: f64, m: f64, y: f64 },
    Atoms { atoms: Vec<Atom> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub sigma: f64,
    pub measure: MeasureConfig,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "one")]
    pub s0: f64,
}

impl ModelConfig {
    /// Builds the model with its drift calibrated so that S is a martingale.
    pub fn build(&self) -> Result<LevyModel> {
        let measure = match &self.measure {
            MeasureConfig::None => LevyMeasure::zero(),
            MeasureConfig::Cgmy { c, g, m, y } => LevyMeasure::Cgmy(Cgmy { c: *c, g: *g, m: *m, y: *y }),
            MeasureConfig::Atoms { atoms } => LevyMeasure::Atoms(atoms.clone()),
        };
        if !(self.s0 > 0.0) {
            return Err(ExperimentError::Config(format!("s0 must be positive, got {}", self.s0)));
        }
        LevyModel::new(0.0, self.sigma, measure, self.horizon)
            .and_then(|m| m.calibrate())
            .map_err(stage("model"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum EpsRule {
    /// ε_n from the rate classification.
    #[default]
    Classified,
    /// ε_n = scale · n^{−exponent}.
    Power {
        #[serde(default = "one")]
        scale: f64,
        exponent: f64,
    },
    /// One value per entry of the n sweep.
    List { values: Vec<f64> },
}


#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeConfig {
    Riemann,
    Corrected {
        #[serde(default)]
        eps: EpsRule,
        /// Overrides κ = (1 − θ)/2.
        #[serde(default)]
        kappa: Option<f64>,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    /// Overrides the classified θ of the adapted nets.
    #[serde(default)]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default = "default_quantile")]
    pub quantile: f64,
    #[serde(default = "default_states")]
    pub outer_states: usize,
    #[serde(default = "default_states")]
    pub inner_branches: usize,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    /// Number of intervals of the adapted net whose knots are the conditioning times.
    #[serde(default = "default_conditioning")]
    pub conditioning_intervals: usize,
    /// Runs the nested simulation behind the bmo estimate.
    #[serde(default = "default_true")]
    pub nested: bool,
}

fn default_quantile() -> f64 {
    0.95
}
fn default_states() -> usize {
    64
}
fn default_resamples() -> usize {
    200
}
fn default_conditioning() -> usize {
    8
}
fn default_true() -> bool {
    true
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            quantile: default_quantile(),
            outer_states: default_states(),
            inner_branches: default_states(),
            bootstrap_resamples: default_resamples(),
            conditioning_intervals: default_conditioning(),
            nested: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    #[serde(default = "default_l2_tol")]
    pub l2_tolerance: f64,
    #[serde(default = "default_bmo_tol")]
    pub bmo_tolerance: f64,
    #[serde(default = "default_fit_points")]
    pub fit_points: usize,
    /// Required ratio of scheme error to reference-integral refinement gap.
    #[serde(default = "default_gap_ratio")]
    pub gap_ratio: f64,
}

fn default_l2_tol() -> f64 {
    0.15
}
fn default_bmo_tol() -> f64 {
    0.2
}
fn default_fit_points() -> usize {
    4
}
fn default_gap_ratio() -> f64 {
    10.0
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig {
            l2_tolerance: default_l2_tol(),
            bmo_tolerance: default_bmo_tol(),
            fit_points: default_fit_points(),
            gap_ratio: default_gap_ratio(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub model: ModelConfig,
    pub payoff: Payoff,
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub net: NetConfig,
    pub n_sweep: Vec<usize>,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub backend: DensityBackend,
    #[serde(default)]
    pub table: TableConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub targets: TargetConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn check_schema(schema: u32) -> Result<()> {
    if schema != SCHEMA_VERSION {
        return Err(ExperimentError::Config(format!("unsupported schema {schema}, expected {SCHEMA_VERSION}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema)?;
        self.payoff.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        if self.n_sweep.is_empty() || self.n_sweep.windows(2).any(|w| w[0] >= w[1]) || self.n_sweep[0] == 0 {
            return Err(ExperimentError::Config("n_sweep must be a strictly increasing list of positive sizes".into()));
        }
        if self.sim.paths < norms::MIN_SAMPLES {
            return Err(ExperimentError::Config(format!("need at least {} paths", norms::MIN_SAMPLES)));
        }
        if self.sim.fine_refinement < 2 || !self.sim.fine_refinement.is_multiple_of(2) {
            return Err(ExperimentError::Config("fine_refinement must be even and at least 2".into()));
        }
        if !(0.0..1.0).contains(&self.estimator.quantile) || self.estimator.quantile <= 0.0 {
            return Err(ExperimentError::Config("estimator quantile must lie in (0, 1)".into()));
        }
        if let SchemeConfig::Corrected { eps: EpsRule::List { values }, .. } = &self.scheme {
            if values.len() != self.n_sweep.len() {
                return Err(ExperimentError::Config("eps list must match n_sweep".into()));
            }
        }
        Ok(())
    }
}

/// θ, κ and ε_n actually used by a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct Plan {
    pub case: Option<RateCase>,
    pub theta: f64,
    pub kappa: f64,
    pub eps: Vec<f64>,
    pub corrected: bool,
    pub eta: f64,
    pub target_slope: Option<f64>,
}

pub fn plan(cfg: &ExperimentConfig, model: &LevyModel) -> Result<Plan> {
    let eta = cfg.payoff.holder_exponent();
    let case = hedging::classify_rate_case(&hedging::RegimeInput::from_model(model, eta)).map_err(|e| e.to_string());
    let ns: Vec<f64> = cfg.n_sweep.iter().map(|&n| n as f64).collect();
    let need = |what: &str| -> Result<RateCase> {
        case.clone().map_err(|e| ExperimentError::Config(format!("{what} not given and classification failed: {e}")))
    };
    let theta = match cfg.net.theta {
        Some(t) if t > 0.0 && t <= 1.0 => t,
        Some(t) => return Err(ExperimentError::Config(format!("θ must lie in (0, 1], got {t}"))),
        None => need("net θ")?.theta,
    };
    let (corrected, kappa, eps, target) = match &cfg.scheme {
        SchemeConfig::Riemann => (false, 0.0, vec![f64::INFINITY; ns.len()], Some(-0.5)),
        SchemeConfig::Corrected { eps, kappa } => {
            let kappa = kappa.unwrap_or((1.0 - theta) / 2.0);
            let (values, target) = match eps {
                EpsRule::Classified => {
                    let law = need("eps rule")?.law;
                    (ns.iter().map(|&n| law.eps(n)).collect(), Some(law.target_slope()))
                }
                EpsRule::Power { scale, exponent } => {
                    let target = case.as_ref().ok().map(|c| c.law.target_slope());
                    (ns.iter().map(|&n| scale * n.powf(-exponent)).collect(), target)
                }
                EpsRule::List { values } => (values.clone(), case.as_ref().ok().map(|c| c.law.target_slope())),
            };
            (true, kappa, values, target)
        }
    };
    Ok(Plan { case: case.ok(), theta, kappa, eps, corrected, eta, target_slope: target })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub eps: f64,
    pub card_mean: f64,
    pub card_se: f64,
    pub l2: f64,
    pub l2_se: f64,
    pub s2: f64,
    pub s2_se: f64,
    pub bmo: f64,
    pub bmo_se: f64,
    pub bmoproxy: f64,
    pub max_jump_q95: f64,
    /// 0.95-quantile over paths of max_t |ΔE_t| / Φ̄_t.
    pub jump_weight_q95: f64,
    pub gap_l2: f64,
    pub gap_flag: bool,
    pub missed_crossings: f64,
    pub envelope_ratio_max: f64,
    pub uncorrected_above: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeSummary {
    pub l2: Option<SlopeFit>,
    pub l2_full: Option<SlopeFit>,
    pub bmo: Option<SlopeFit>,
    /// Slope of jump_weight_q95 against ε_n.
    pub jump_weight_vs_eps: Option<SlopeFit>,
    pub fitted_n: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub model: ModelSummary,
    pub payoff: Payoff,
    pub plan: Plan,
    pub engine: EngineSummary,
    pub strategy_tau_min: f64,
    pub paths: usize,
    pub rows: Vec<RateRow>,
    pub slopes: SlopeSummary,
    pub bmo_quantile_sensitivity: Vec<(usize, Vec<f64>)>,
    pub pass: bool,
    pub verdicts: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default)]
struct OuterState {
    x: f64,
    phi_bar: f64,
}

struct PathOutcome {
    errs: Vec<SchemeErrors>,
    gap: f64,
    states: Vec<OuterState>,
}

fn event_at(times: &[f64], t: f64, tol: f64) -> Option<usize> {
    let k = times.partition_point(|&v| v < t - tol);
    (k < times.len() && (times[k] - t).abs() <= tol).then_some(k)
}

/// Everything a sweep needs, built once.
pub struct Study {
    pub model: LevyModel,
    pub spec: Arc<StrategySpec>,
    pub evaluator: Evaluator,
    pub engine: PathEngine,
    pub plan: Plan,
    pub nets: Vec<TimeNet>,
    pub thresholds: Vec<Threshold>,
    pub conditioning: TimeNet,
    pub grid: KnotGrid,
    pub s0: f64,
}

impl Study {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cfg.model.build()?;
        let plan = plan(cfg, &model)?;
        let spec = Arc::new(StrategySpec::new(&model, cfg.payoff).map_err(stage("strategy"))?);
        let evaluator = spec.evaluator(&cfg.table).map_err(stage("strategy table"))?;
        let engine = PathEngine::new(&model, cfg.sim.delta_sim, cfg.sim.small_jump_mode).map_err(stage("path engine"))?;
        let horizon = model.horizon;
        let nets = cfg
            .n_sweep
            .iter()
            .map(|&n| TimeNet::adapted(plan.theta, n, horizon))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(stage("nets"))?;
        let conditioning = TimeNet::adapted(plan.theta, cfg.estimator.conditioning_intervals.max(1), horizon).map_err(stage("nets"))?;
        let mut all: Vec<&TimeNet> = nets.iter().collect();
        all.push(&conditioning);
        let grid = KnotGrid::build(&all, cfg.sim.fine_refinement).map_err(stage("grid"))?;
        let thresholds = plan
            .eps
            .iter()
            .map(|&e| Threshold::new(e, plan.kappa, JumpScale::Relative))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(stage("threshold"))?;
        Ok(Study { model, spec, evaluator, engine, plan, nets, thresholds, conditioning, grid, s0: cfg.model.s0 })
    }

    fn nested_possible(&self) -> bool {
        self.nets.iter().all(|n| self.conditioning.is_embedded_in(n))
    }

    fn outer_path(&self, seed: u64, i: usize, keep_states: bool, sk: &mut Skeleton, tr: &mut Trajectory) -> Result<PathOutcome> {
        let horizon = self.model.horizon;
        self.engine.simulate_into(&self.grid, 0.0, 0.0, &mut stream(seed, Domain::OuterPath, i as u64), sk);
        tr.fill(sk, self.s0, horizon, &self.evaluator);
        let wp = WeightPath::new(&tr.s_pre, &tr.s_post, self.plan.eta);
        let errs = self
            .nets
            .iter()
            .zip(&self.thresholds)
            .map(|(net, thr)| approx::scheme_errors(tr, net, thr, Some(&wp.phi_bar)))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(stage("scheme errors"))?;
        let gap = approx::ground_truth(tr) - approx::ground_truth_half(tr);
        let mut states = Vec::new();
        if keep_states {
            let tol = 1e-12 * horizon;
            for &a in &self.conditioning.knots()[..self.conditioning.intervals()] {
                let k = event_at(&tr.times, a, tol).ok_or_else(|| ExperimentError::Stage {
                    context: "conditioning".into(),
                    message: format!("time {a} missing from skeleton"),
                })?;
                states.push(OuterState { x: sk.x_post[k], phi_bar: wp.phi_bar[k] });
            }
        }
        Ok(PathOutcome { errs, gap, states })
    }

    /// E_T − E_a on `branches` continuations from each outer state, per net.
    fn inner_cells(&self, seed: u64, states: &[(usize, OuterState)], branches: usize) -> Result<Vec<Vec<Cell>>> {
        let horizon = self.model.horizon;
        let knots = self.conditioning.knots();
        let corrected = self.plan.corrected;
        let per_cell: Vec<Vec<Vec<f64>>> = states
            .par_iter()
            .enumerate()
            .map_init(
                || (Skeleton::default(), Trajectory::default()),
                |(sk, tr), (c, (j, st))| -> Result<Vec<Vec<f64>>> {
                    let a = knots[*j];
                    let mut out = vec![Vec::with_capacity(branches); self.nets.len()];
                    for m in 0..branches {
                        let mut rng = stream(seed, Domain::InnerPath, (c * branches + m) as u64);
                        self.engine.simulate_into(&self.grid, a, st.x, &mut rng, sk);
                        tr.fill(sk, self.s0, horizon, &self.evaluator);
                        for (ni, (net, thr)) in self.nets.iter().zip(&self.thresholds).enumerate() {
                            let e = approx::scheme_errors(tr, net, thr, None).map_err(stage("inner scheme errors"))?;
                            out[ni].push(if corrected { e.corrected_terminal } else { e.riemann_terminal });
                        }
                    }
                    Ok(out)
                },
            )
            .collect::<Result<Vec<_>>>()?;
        let mut cells = vec![Vec::with_capacity(states.len()); self.nets.len()];
        for ((j, st), vals) in states.iter().zip(per_cell) {
            for (ni, v) in vals.into_iter().enumerate() {
                cells[ni].push(Cell { a: knots[*j], weight: st.phi_bar, inner: v });
            }
        }
        Ok(cells)
    }
}

fn fit_rows(rows: &[RateRow], fit_points: usize, value: impl Fn(&RateRow) -> f64) -> (Option<SlopeFit>, Vec<usize>) {
    let usable: Vec<&RateRow> = rows.iter().filter(|r| !r.gap_flag).collect();
    let take = usable.len().saturating_sub(fit_points);
    let chosen = &usable[take..];
    let ns: Vec<f64> = chosen.iter().map(|r| r.n as f64).collect();
    let vs: Vec<f64> = chosen.iter().map(|r| value(r)).collect();
    (if chosen.len() >= 2 { stats::loglog_slope(&ns, &vs) } else { None }, chosen.iter().map(|r| r.n).collect())
}

/// Runs the sweep: simulation, error norms per n, slope fits and verdicts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    let study = Study::new(cfg)?;
    let seed = cfg.sim.seed;
    let est = &cfg.estimator;
    let nested = est.nested && study.nested_possible();
    let keep = if nested { est.outer_states.min(cfg.sim.paths) } else { 0 };
    let outcomes: Vec<PathOutcome> = (0..cfg.sim.paths)
        .into_par_iter()
        .map_init(
            || (Skeleton::default(), Trajectory::default()),
            |(sk, tr), i| study.outer_path(seed, i, i < keep, sk, tr),
        )
        .collect::<Result<Vec<_>>>()?;

    let cells = if nested {
        let states: Vec<(usize, OuterState)> = (0..study.conditioning.intervals())
            .flat_map(|j| outcomes[..keep].iter().map(move |o| (j, o.states[j])))
            .collect();
        Some(study.inner_cells(seed, &states, est.inner_branches)?)
    } else {
        None
    };

    let boot = BootstrapConfig { resamples: est.bootstrap_resamples, seed };
    let q = est.quantile;
    let gap: Vec<f64> = outcomes.iter().map(|o| o.gap).collect();
    let gap_l2 = (gap.iter().map(|g| g * g).sum::<f64>() / gap.len() as f64).sqrt();
    let corrected = study.plan.corrected;
    let mut rows = Vec::with_capacity(cfg.n_sweep.len());
    let mut sensitivity = Vec::new();
    for (ni, &n) in cfg.n_sweep.iter().enumerate() {
        let pick = |f: &dyn Fn(&SchemeErrors) -> f64| -> Vec<f64> { outcomes.iter().map(|o| f(&o.errs[ni])).collect() };
        let terminal = pick(&|e| if corrected { e.corrected_terminal } else { e.riemann_terminal });
        let sup = pick(&|e| if corrected { e.corrected_sup } else { e.riemann_sup });
        let jumps = pick(&|e| if corrected { e.corrected_max_jump } else { e.riemann_max_jump });
        let jump_weight = pick(&|e| if corrected { e.corrected_jump_over_weight } else { e.riemann_jump_over_weight });
        let card = pick(&|e| e.cardinality as f64);
        let l2 = norms::lp_norm(&terminal, 2.0, &boot).map_err(stage("l2"))?;
        let s2 = norms::sp_norm(&sup, 2.0, &boot).map_err(stage("s2"))?;
        let bmo = match &cells {
            Some(c) => {
                sensitivity.push((n, norms::bmo2_at_quantiles(&c[ni], &[0.9, 0.95, 0.99])));
                norms::bmo2_weighted(&c[ni], q, &boot).map_err(stage("bmo"))?
            }
            None => NormEstimate { value: f64::NAN, se: f64::NAN, outer: 0, inner: 0, kind: norms::EstimatorKind::Bmo2 },
        };
        let proxy = norms::bmo_to_bmo_proxy(&bmo, &jump_weight, q, &boot);
        let eps = study.plan.eps[ni];
        let missed = if corrected {
            study.engine.missed_crossing_intensity(eps, study.plan.kappa).map_err(stage("missed crossings"))?
        } else {
            0.0
        };
        rows.push(RateRow {
            n,
            eps,
            card_mean: stats::mean(&card),
            card_se: stats::std_error(&card),
            l2: l2.value,
            l2_se: l2.se,
            s2: s2.value,
            s2_se: s2.se,
            bmo: bmo.value,
            bmo_se: bmo.se,
            bmoproxy: proxy.value,
            max_jump_q95: stats::quantile(&jumps, 0.95),
            jump_weight_q95: stats::quantile(&jump_weight, 0.95),
            gap_l2,
            gap_flag: l2.value > 0.0 && l2.value < cfg.targets.gap_ratio * gap_l2,
            missed_crossings: missed,
            envelope_ratio_max: outcomes.iter().map(|o| o.errs[ni].envelope_ratio).fold(0.0, f64::max),
            uncorrected_above: outcomes.iter().map(|o| o.errs[ni].uncorrected_above).sum(),
        });
    }

    let fp = cfg.targets.fit_points;
    let (l2_fit, fitted_n) = fit_rows(&rows, fp, |r| r.l2);
    let (bmo_fit, _) = if cells.is_some() { fit_rows(&rows, fp, |r| r.bmo) } else { (None, vec![]) };
    let l2_full = stats::loglog_slope(&rows.iter().map(|r| r.n as f64).collect::<Vec<_>>(), &rows.iter().map(|r| r.l2).collect::<Vec<_>>());
    let jump_weight_vs_eps = if corrected {
        stats::loglog_slope(&rows.iter().map(|r| r.eps).collect::<Vec<_>>(), &rows.iter().map(|r| r.jump_weight_q95).collect::<Vec<_>>())
    } else {
        None
    };

    let mut verdicts = Vec::new();
    let trivial = rows.iter().all(|r| r.l2 == 0.0);
    let pass = if trivial {
        verdicts.push("all errors vanish identically; rate check is trivial".into());
        true
    } else if let Some(target) = study.plan.target_slope {
        let mut ok = true;
        match &l2_fit {
            Some(f) => {
                let good = f.slope <= target + cfg.targets.l2_tolerance;
                verdicts.push(format!("L2 slope {:.4} vs target {:.4} + {}: {}", f.slope, target, cfg.targets.l2_tolerance, if good { "PASS" } else { "FAIL" }));
                ok &= good;
            }
            None => {
                verdicts.push("L2 slope could not be fitted (too few unflagged rows)".into());
                ok = false;
            }
        }
        if cells.is_some() {
            match &bmo_fit {
                Some(f) => {
                    let good = f.slope <= target + cfg.targets.bmo_tolerance;
                    verdicts.push(format!("bmo slope {:.4} vs target {:.4} + {}: {}", f.slope, target, cfg.targets.bmo_tolerance, if good { "PASS" } else { "FAIL" }));
                    ok &= good;
                }
                None => {
                    verdicts.push("bmo slope could not be fitted".into());
                    ok = false;
                }
            }
        }
        ok
    } else {
        verdicts.push("no target rate for this configuration".into());
        true
    };
    for r in rows.iter().filter(|r| r.gap_flag) {
        verdicts.push(format!("n = {}: scheme error {:.3e} within {}x of the reference gap {:.3e}; excluded from fit", r.n, r.l2, cfg.targets.gap_ratio, r.gap_l2));
    }

    let report = ErrorReport {
        model: study.model.summary(),
        payoff: cfg.payoff,
        plan: study.plan.clone(),
        engine: study.engine.summary(),
        strategy_tau_min: study.evaluator.tau_min(),
        paths: cfg.sim.paths,
        rows,
        slopes: SlopeSummary { l2: l2_fit, l2_full, bmo: bmo_fit, jump_weight_vs_eps, fitted_n },
        bmo_quantile_sensitivity: sensitivity,
        pass,
        verdicts,
    };
    if let Some(dir) = &cfg.output.dir {
        write_report(dir, &report)?;
    }
    Ok(report)
}

pub const RATES_HEADER: &str = "n,eps,card_mean,card_se,l2,l2_se,s2,s2_se,bmo,bmo_se,bmoproxy,max_jump_q95";

pub fn rates_csv(rows: &[RateRow]) -> String {
    let mut s = String::from(RATES_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.n, r.eps, r.card_mean, r.card_se, r.l2, r.l2_se, r.s2, r.s2_se, r.bmo, r.bmo_se, r.bmoproxy, r.max_jump_q95
        ));
    }
    s
}

/// Writes `bytes` to `dir/name` through a temporary file and rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(dir.join(name)).map_err(|e| ExperimentError::Io(e.error))?;
    Ok(())
}

pub fn write_report(dir: &Path, report: &ErrorReport) -> Result<()> {
    write_atomic(dir, "rates.csv", rates_csv(&report.rows).as_bytes())?;
    write_atomic(dir, "report.json", &serde_json::to_vec_pretty(report)?)
}

fn default_cx_rate() -> f64 {
    0.5
}
fn default_cx_f() -> f64 {
    0.4
}
fn default_cx_nets() -> Vec<usize> {
    vec![2, 8, 32, 128]
}
fn default_cx_paths() -> usize {
    100_000
}
fn default_cx_eps() -> f64 {
    0.3
}
fn default_cx_sweep() -> Vec<f64> {
    vec![0.3, 0.1, 0.03]
}

/// Compensated Poisson S = J − rt with ϑ_t = ϑ₀ + ∫_{(0, t∧ρ₂]} f(s, J_{s−}) dS_s,
/// f equal to `f_first` while J = 0 and `f_later` afterwards.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub schema: u32,
    #[serde(default = "default_cx_rate")]
    pub rate: f64,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "default_cx_f")]
    pub f_first: f64,
    #[serde(default)]
    pub f_later: Option<f64>,
    #[serde(default)]
    pub theta0: f64,
    #[serde(default = "default_cx_nets")]
    pub nets: Vec<usize>,
    #[serde(default = "default_cx_paths")]
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cx_eps")]
    pub eps: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default = "default_cx_sweep")]
    pub eps_sweep: Vec<f64>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl CounterexampleConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn f_later(&self) -> f64 {
        self.f_later.unwrap_or(self.f_first)
    }

    /// δ = inf|f(·, 0)| − rT sup|f|.
    pub fn delta(&self) -> f64 {
        self.f_first.abs() - self.rate * self.horizon * self.f_first.abs().max(self.f_later().abs())
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema)?;
        if !(self.rate > 0.0 && self.horizon > 0.0) {
            return Err(ExperimentError::Config("rate and horizon must be positive".into()));
        }
        if !(self.delta() > 0.0) {
            return Err(ExperimentError::Config(format!("need δ = |f(·,0)| − rT‖f‖∞ > 0, got {}", self.delta())));
        }
        if self.nets.is_empty() || self.nets.contains(&0) || self.paths < norms::MIN_SAMPLES {
            return Err(ExperimentError::Config("need nonempty positive net sizes and at least 100 paths".into()));
        }
        Ok(())
    }

    fn theta(&self, t: f64, rho: &[f64], left: bool) -> f64 {
        let r1 = rho.first().copied().unwrap_or(f64::INFINITY);
        let r2 = rho.get(1).copied().unwrap_or(f64::INFINITY);
        let hit = |r: f64| if left { r < t } else { r <= t };
        let mut v = self.theta0;
        if hit(r1) {
            v += self.f_first;
        }
        if hit(r2) {
            v += self.f_later();
        }
        let drift = self.f_first * t.min(r1) + self.f_later() * (t.min(r2) - r1).max(0.0);
        v - self.rate * drift
    }

    fn trajectory(&self, grid: &[f64], jumps: &[f64], tr: &mut Trajectory) {
        tr.times.clear();
        tr.s_pre.clear();
        tr.s_post.clear();
        tr.theta_pre.clear();
        tr.theta_post.clear();
        tr.flags.clear();
        let (mut gi, mut ji) = (0, 0);
        let mut count = 0.0;
        while gi < grid.len() || ji < jumps.len() {
            let tg = grid.get(gi).copied().unwrap_or(f64::INFINITY);
            let tj = jumps.get(ji).copied().unwrap_or(f64::INFINITY);
            let (t, fl) = if tg <= tj {
                gi += 1;
                (tg, flag::KNOT | flag::NET)
            } else {
                (tj, 0)
            };
            let pre = count - self.rate * t;
            let mut fl = fl;
            while ji < jumps.len() && jumps[ji] == t {
                count += 1.0;
                ji += 1;
                fl |= flag::JUMP;
            }
            tr.times.push(t);
            tr.s_pre.push(pre);
            tr.s_post.push(count - self.rate * t);
            tr.theta_pre.push(self.theta(t, jumps, true));
            tr.theta_post.push(self.theta(t, jumps, false));
            tr.flags.push(fl);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleRow {
    pub n: usize,
    pub frequency: f64,
    pub frequency_se: f64,
    /// P(0 < ρ₁ < ρ₂ < t₁) = 1 − e^{−rt₁}(1 + rt₁).
    pub oracle_first_interval: f64,
    /// P(ρ₁, ρ₂ in the same interval of the net).
    pub oracle_same_interval: f64,
    pub riemann_jump_q95: f64,
    pub corrected_max_jump: f64,
    pub uncorrected_above: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub delta: f64,
    pub rows: Vec<CounterexampleRow>,
    /// (ε, max over paths and nets of max_t |ΔE^corr_t|).
    pub corrected_eps_sweep: Vec<(f64, f64)>,
    pub pass: bool,
}

pub fn run_counterexample(cfg: &CounterexampleConfig) -> Result<CounterexampleReport> {
    cfg.validate()?;
    let horizon = cfg.horizon;
    let nets = cfg
        .nets
        .iter()
        .map(|&n| TimeNet::adapted(1.0, n, horizon))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(stage("nets"))?;
    let mut union = nets[0].clone();
    for n in &nets[1..] {
        union = union.combine(n.knots());
    }
    let grid = union.knots().to_vec();
    let mut eps_list = vec![cfg.eps];
    eps_list.extend(cfg.eps_sweep.iter().copied().filter(|&e| e != cfg.eps));
    let thresholds = eps_list
        .iter()
        .map(|&e| Threshold::new(e, cfg.kappa, JumpScale::Absolute))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(stage("threshold"))?;
    let delta = cfg.delta();
    let lambda = cfg.rate * horizon;
    let per_path: Vec<Vec<Vec<SchemeErrors>>> = (0..cfg.paths)
        .into_par_iter()
        .map_init(Trajectory::default, |tr, i| -> Result<Vec<Vec<SchemeErrors>>> {
            use rand::Rng;
            use rand_distr::{Distribution, Poisson};
            let mut rng = stream(cfg.seed, Domain::Counterexample, i as u64);
            let count = Poisson::new(lambda).map(|p| p.sample(&mut rng) as usize).unwrap_or(0);
            let mut jumps: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * horizon).collect();
            jumps.sort_by(f64::total_cmp);
            cfg.trajectory(&grid, &jumps, tr);
            nets.iter()
                .map(|net| {
                    thresholds
                        .iter()
                        .map(|thr| approx::scheme_errors(tr, net, thr, None).map_err(stage("scheme errors")))
                        .collect()
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let npaths = cfg.paths as f64;
    let mut rows = Vec::new();
    for (ni, net) in nets.iter().enumerate() {
        let hits = per_path.iter().filter(|p| p[ni][0].riemann_max_jump >= delta).count() as f64;
        let freq = hits / npaths;
        let knots = net.knots();
        let t1 = knots[1];
        let rt = cfg.rate * t1;
        let oracle_first = 1.0 - (-rt).exp() * (1.0 + rt);
        let oracle_same: f64 = knots
            .windows(2)
            .map(|w| {
                let rd = cfg.rate * (w[1] - w[0]);
                (-cfg.rate * w[0]).exp() * (1.0 - (-rd).exp() * (1.0 + rd))
            })
            .sum();
        let rjumps: Vec<f64> = per_path.iter().map(|p| p[ni][0].riemann_max_jump).collect();
        let corrected_max = per_path.iter().map(|p| p[ni][0].corrected_max_jump).fold(0.0, f64::max);
        let above: usize = per_path.iter().map(|p| p[ni][0].uncorrected_above).sum();
        rows.push(CounterexampleRow {
            n: net.intervals(),
            frequency: freq,
            frequency_se: (freq * (1.0 - freq) / npaths).sqrt(),
            oracle_first_interval: oracle_first,
            oracle_same_interval: oracle_same,
            riemann_jump_q95: stats::quantile(&rjumps, 0.95),
            corrected_max_jump: corrected_max,
            uncorrected_above: above,
            pass: freq > 0.8 * oracle_first && above == 0,
        });
    }
    let corrected_eps_sweep = eps_list
        .iter()
        .enumerate()
        .map(|(ti, &e)| (e, per_path.iter().flat_map(|p| p.iter().map(move |n| n[ti].corrected_max_jump)).fold(0.0, f64::max)))
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    let report = CounterexampleReport { delta, rows, corrected_eps_sweep, pass };
    if let Some(dir) = &cfg.output.dir {
        write_atomic(dir, "counterexample.json", &serde_json::to_vec_pretty(&report)?)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct CardinalityRow {
    pub n: usize,
    pub eps: f64,
    pub mean: f64,
    pub se: f64,
    pub l2: f64,
    pub ratio_to_n: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CardinalityReport {
    pub rows: Vec<CardinalityRow>,
    /// max/min of the per-n ratios mean/n.
    pub band: f64,
    pub upper: f64,
    pub missed_crossings: Vec<f64>,
}

/// Mean and L₂ size of τ_n ⊔ ρ(ε_n, κ) per n; needs only simulated jumps.
pub fn run_cardinality_study(cfg: &ExperimentConfig) -> Result<CardinalityReport> {
    cfg.validate()?;
    let model = cfg.model.build()?;
    let plan = plan(cfg, &model)?;
    if !plan.corrected {
        return Err(ExperimentError::Config("cardinality study needs the corrected scheme".into()));
    }
    let engine = PathEngine::new(&model, cfg.sim.delta_sim, cfg.sim.small_jump_mode).map_err(stage("path engine"))?;
    let horizon = model.horizon;
    let nets = cfg
        .n_sweep
        .iter()
        .map(|&n| TimeNet::adapted(plan.theta, n, horizon))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(stage("nets"))?;
    let refs: Vec<&TimeNet> = nets.iter().collect();
    let grid = KnotGrid::build(&refs, 1).map_err(stage("grid"))?;
    let thresholds: Vec<Threshold> = plan
        .eps
        .iter()
        .map(|&e| Threshold::new(e, plan.kappa, JumpScale::Relative))
        .collect::<std::result::Result<_, _>>()
        .map_err(stage("threshold"))?;
    let zero = Evaluator::Constant(0.0);
    let counts: Vec<Vec<f64>> = (0..cfg.sim.paths)
        .into_par_iter()
        .map_init(
            || (Skeleton::default(), Trajectory::default()),
            |(sk, tr), i| {
                engine.simulate_into(&grid, 0.0, 0.0, &mut stream(cfg.sim.seed, Domain::OuterPath, i as u64), sk);
                tr.fill(sk, cfg.model.s0, horizon, &zero);
                nets.iter()
                    .zip(&thresholds)
                    .map(|(net, thr)| {
                        let crossings = thr.crossings(tr, horizon);
                        let extra = (0..tr.len()).filter(|&k| crossings[k] && tr.flags[k] & flag::NET == 0).count();
                        (net.cardinality() + extra) as f64
                    })
                    .collect()
            },
        )
        .collect();
    let mut rows = Vec::new();
    let mut missed = Vec::new();
    for (ni, &n) in cfg.n_sweep.iter().enumerate() {
        let c: Vec<f64> = counts.iter().map(|v| v[ni]).collect();
        let mean = stats::mean(&c);
        rows.push(CardinalityRow {
            n,
            eps: plan.eps[ni],
            mean,
            se: stats::std_error(&c),
            l2: (c.iter().map(|x| x * x).sum::<f64>() / c.len() as f64).sqrt(),
            ratio_to_n: mean / n as f64,
        });
        missed.push(engine.missed_crossing_intensity(plan.eps[ni], plan.kappa).map_err(stage("missed crossings"))?);
    }
    let hi = rows.iter().map(|r| r.ratio_to_n).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.ratio_to_n).fold(f64::INFINITY, f64::min);
    let report = CardinalityReport { rows, band: hi / lo, upper: hi, missed_crossings: missed };
    if let Some(dir) = &cfg.output.dir {
        write_atomic(dir, "cardinality.json", &serde_json::to_vec_pretty(&report)?)?;
    }
    Ok(report)
}

/// max over `times` of |∫ p_t − 1| before renormalisation.
pub fn density_mass_error(sg: &Semigroup, times: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &t in times {
        let d = sg.density(t).map_err(stage("density"))?;
        worst = worst.max((d.raw_mass - 1.0).abs());
    }
    Ok(worst)
}

/// max |P_{s+t} g(y) − P_s(P_t g)(y)| over the given triples.
pub fn composition_error(sg: &Semigroup, g: &Payoff, triples: &[(f64, f64, f64)]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &(s, t, y) in triples {
        let direct = sg.apply(g, s + t, y).map_err(stage("semigroup"))?;
        let failure = std::sync::Mutex::new(None);
        let inner = |z: f64| match sg.apply(g, t, z) {
            Ok(v) => v,
            Err(e) => {
                failure.lock().expect("lock").get_or_insert(e);
                f64::NAN
            }
        };
        let composed = sg.apply_fn(&inner, s, y).map_err(stage("semigroup"))?;
        if let Some(e) = failure.into_inner().expect("lock") {
            return Err(stage("semigroup")(e));
        }
        worst = worst.max((direct - composed).abs());
    }
    Ok(worst)
}

/// max |∂_y P_t g(y) − central difference with h = 1e−4·y|.
pub fn gradient_fd_error(sg: &Semigroup, g: &Payoff, pairs: &[(f64, f64)]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &(t, y) in pairs {
        let grad = sg.gradient(g, t, y).map_err(stage("gradient"))?;
        let h = 1e-4 * y;
        let fd = (sg.apply(g, t, y + h).map_err(stage("semigroup"))? - sg.apply(g, t, y - h).map_err(stage("semigroup"))?) / (2.0 * h);
        worst = worst.max((grad - fd).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightCheck {
    pub eta: f64,
    pub q: f64,
    /// q-th power of the SM ratio estimate, comparable to the bound.
    pub ratio_pow_q: f64,
    pub ratio_pow_q_se: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Nested estimate of E[sup_{t≥a} Φ(η)_t^q | F_a] / Φ(η)_a^q against its closed-form bound.
#[allow(clippy::too_many_arguments)]
pub fn weight_regularity(
    engine: &PathEngine,
    eta: f64,
    q: f64,
    conditioning: &TimeNet,
    refinement: usize,
    outer: usize,
    inner: usize,
    quantile: f64,
    seed: u64,
) -> Result<WeightCheck> {
    let model = engine.model();
    let horizon = model.horizon;
    let grid = KnotGrid::build(&[conditioning], refinement).map_err(stage("grid"))?;
    let knots = conditioning.knots();
    let tol = 1e-12 * horizon;
    let cells_a: Vec<(usize, usize)> = (0..conditioning.intervals()).flat_map(|j| (0..outer).map(move |k| (j, k))).collect();
    let cells: Vec<Cell> = cells_a
        .par_iter()
        .enumerate()
        .map_init(Skeleton::default, |sk, (c, &(j, k))| {
            engine.simulate_into(&grid, 0.0, 0.0, &mut stream(seed, Domain::OuterPath, k as u64), sk);
            let s_pre: Vec<f64> = sk.x_pre.iter().map(|x| x.exp()).collect();
            let s_post: Vec<f64> = sk.x_post.iter().map(|x| x.exp()).collect();
            let wp = WeightPath::new(&s_pre, &s_post, eta);
            let ka = event_at(&sk.times, knots[j], tol).expect("conditioning knot on grid");
            let (xa, sup_a, phi_a) = (sk.x_post[ka], wp.theta[ka], wp.phi[ka]);
            let mut vals = Vec::with_capacity(inner);
            for m in 0..inner {
                engine.simulate_into(&grid, knots[j], xa, &mut stream(seed, Domain::InnerPath, (c * inner + m) as u64), sk);
                let s_pre: Vec<f64> = sk.x_pre.iter().map(|x| x.exp()).collect();
                let s_post: Vec<f64> = sk.x_post.iter().map(|x| x.exp()).collect();
                let w = WeightPath::continued(&s_pre, &s_post, eta, sup_a, 0.0);
                vals.push(w.phi.iter().copied().fold(phi_a, f64::max));
            }
            Cell { a: knots[j], weight: phi_a, inner: vals }
        })
        .collect();
    let est = norms::sm_p_ratio(&cells, q, quantile, &BootstrapConfig { resamples: 200, seed }).map_err(stage("sm ratio"))?;
    let psi = model.psi(num_complex::Complex64::new(0.0, -1.0)).map_err(stage("exponent"))?;
    let moment = (horizon * model.cumulant_real(q).map_err(stage("moment"))?).exp();
    let bound = norms::sm_q_bound(horizon, psi.norm(), q, eta, moment);
    let ratio_pow_q = est.value.powf(q);
    let se = q * est.value.powf(q - 1.0) * est.se;
    Ok(WeightCheck { eta, q, ratio_pow_q, ratio_pow_q_se: se, bound, pass: ratio_pow_q <= bound + 4.0 * se })
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleCheck {
    pub times: Vec<f64>,
    pub means: Vec<f64>,
    pub ses: Vec<f64>,
    /// max over pairs of |difference| / combined SE.
    pub max_z: f64,
    pub pass: bool,
}

/// E[ϑ_t S_t] at several t from exact increments of X.
pub fn strategy_martingale(engine: &PathEngine, strategy: &dyn StrategyFn, s0: f64, times: &[f64], paths: usize, seed: u64) -> MartingaleCheck {
    let horizon = engine.model().horizon;
    let mut means = Vec::new();
    let mut ses = Vec::new();
    for (j, &t) in times.iter().enumerate() {
        let v: Vec<f64> = (0..paths)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, Domain::Sampling, (j * paths + i) as u64);
                let s = s0 * engine.sample_increment(t, &mut rng).exp();
                strategy.theta(horizon - t, s) * s
            })
            .collect();
        means.push(stats::mean(&v));
        ses.push(stats::std_error(&v));
    }
    let mut max_z = 0.0f64;
    for a in 0..times.len() {
        for b in a + 1..times.len() {
            let z = (means[a] - means[b]).abs() / (ses[a] * ses[a] + ses[b] * ses[b]).sqrt();
            max_z = max_z.max(if z.is_nan() { 0.0 } else { z });
        }
    }
    MartingaleCheck { times: times.to_vec(), means, ses, max_z, pass: max_z <= 4.0 }
}

/// Growth-envelope ratio on `samples` random (t, S_t) and on twice as many.
#[allow(clippy::too_many_arguments)]
pub fn growth_envelope_check(
    engine: &PathEngine,
    strategy: &dyn StrategyFn,
    case: &hedging::GrowthCase,
    eta: f64,
    s0: f64,
    samples: usize,
    guard: f64,
    seed: u64,
) -> BoundCheck {
    let horizon = engine.model().horizon;
    let draws: Vec<(f64, f64, f64)> = (0..2 * samples)
        .into_par_iter()
        .map(|i| {
            use rand::Rng;
            let mut rng = stream(seed, Domain::Sampling, i as u64);
            let t = rng.random::<f64>() * horizon * (1.0 - guard);
            let s = s0 * engine.sample_increment(t, &mut rng).exp();
            (t, s, strategy.theta(horizon - t, s))
        })
        .collect();
    let ratio = |d: &[(f64, f64, f64)]| hedging::growth_envelope_ratio(case, eta, horizon, d);
    let (a, b) = (ratio(&draws[..samples]), ratio(&draws));
    BoundCheck { max_ratio: a, max_ratio_doubled: b, relative_change: if a > 0.0 { (b - a).abs() / a } else { 0.0 } }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub mass_error: f64,
    pub composition_error: f64,
    pub gradient_error: Option<f64>,
    pub holder: BoundCheck,
    pub envelope: BoundCheck,
    pub growth: Option<BoundCheck>,
    pub martingale: MartingaleCheck,
    pub weights: Vec<WeightCheck>,
    pub pass: bool,
    pub verdicts: Vec<String>,
}

/// Semigroup, envelope, weight and martingale checks for the configured model and payoff.
pub fn run_check_bounds(cfg: &ExperimentConfig) -> Result<BoundsReport> {
    cfg.validate()?;
    let model = cfg.model.build()?;
    let horizon = model.horizon;
    let sg = Semigroup::new(&model, cfg.backend);
    let g = &cfg.payoff;
    let times: Vec<f64> = [0.05, 0.1, 0.25, 0.5, 1.0].iter().map(|f| f * horizon).collect();
    let ys = [0.6, 0.8, 0.9, 1.0, 1.1, 1.25, 1.6];
    let mass_error = density_mass_error(&sg, &times)?;
    let triples: Vec<(f64, f64, f64)> = [(0.2, 0.3, 0.9), (0.5, 0.5, 1.0), (0.25, 0.1, 1.2)].iter().map(|&(s, t, y)| (s * horizon, t * horizon, y)).collect();
    let composition_error = composition_error(&sg, g, &triples)?;
    let gradient_error = if model.sigma > 0.0 {
        let pairs: Vec<(f64, f64)> = times.iter().flat_map(|&t| ys.iter().map(move |&y| (t, y))).collect();
        Some(gradient_fd_error(&sg, g, &pairs)?)
    } else {
        None
    };
    let holder = sg.check_holder_bound(g, &times, 1000, cfg.sim.seed).map_err(stage("holder"))?;
    let envelope = sg.check_envelope(g, &times, &ys).map_err(stage("envelope"))?;
    let spec = Arc::new(StrategySpec::new(&model, *g).map_err(stage("strategy"))?);
    let evaluator = spec.evaluator(&cfg.table).map_err(stage("strategy table"))?;
    let engine = PathEngine::new(&model, cfg.sim.delta_sim, cfg.sim.small_jump_mode).map_err(stage("path engine"))?;
    let eta = g.holder_exponent();
    let growth = hedging::classify_growth(&hedging::RegimeInput::from_model(&model, eta))
        .ok()
        .map(|case| growth_envelope_check(&engine, &evaluator, &case, eta, cfg.model.s0, cfg.sim.paths / 2, 1e-3, cfg.sim.seed));
    let mtimes: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|f| f * horizon).collect();
    let martingale = strategy_martingale(&engine, &evaluator, cfg.model.s0, &mtimes, cfg.sim.paths, cfg.sim.seed);
    let cond = TimeNet::adapted(1.0, cfg.estimator.conditioning_intervals, horizon).map_err(stage("nets"))?;
    let weights = [0.0, 1.0]
        .iter()
        .map(|&e| {
            weight_regularity(&engine, e, 2.0, &cond, 16, cfg.estimator.outer_states, cfg.estimator.inner_branches, cfg.estimator.quantile, cfg.sim.seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut verdicts = Vec::new();
    let mut check = |ok: bool, what: String| {
        verdicts.push(format!("{what}: {}", if ok { "PASS" } else { "FAIL" }));
        ok
    };
    let mut pass = check(mass_error < 1e-6, format!("density mass error {mass_error:.3e}"));
    pass &= check(composition_error < 1e-5, format!("composition error {composition_error:.3e}"));
    if let Some(e) = gradient_error {
        pass &= check(e < 1e-4, format!("gradient vs finite difference {e:.3e}"));
    }
    pass &= check(holder.stable(0.1), format!("Hölder ratio {:.4} -> {:.4}", holder.max_ratio, holder.max_ratio_doubled));
    pass &= check(envelope.stable(0.1), format!("envelope ratio {:.4} -> {:.4}", envelope.max_ratio, envelope.max_ratio_doubled));
    if let Some(gc) = &growth {
        pass &= check(gc.stable(0.1), format!("growth ratio {:.4} -> {:.4}", gc.max_ratio, gc.max_ratio_doubled));
    }
    pass &= check(martingale.pass, format!("E[ϑS] constancy, max z {:.2}", martingale.max_z));
    for w in &weights {
        pass &= check(w.pass, format!("SM_2 ratio η = {}: {:.4} vs bound {:.4}", w.eta, w.ratio_pow_q, w.bound));
    }
    let report = BoundsReport { mass_error, composition_error, gradient_error, holder, envelope, growth, martingale, weights, pass, verdicts };
    if let Some(dir) = &cfg.output.dir {
        write_atomic(dir, "bounds.json", &serde_json::to_vec_pretty(&report)?)?;
    }
    Ok(report)
}
