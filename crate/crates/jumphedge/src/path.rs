//! Simulation of log-price skeletons: jumps above a cut-off are drawn exactly
//! (compound Poisson with inverse-CDF sizes), jumps below it are replaced by a
//! Gaussian with matching variance or by their mean, and the drift is set so
//! that the simulated eˣ is an exact martingale.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::levy::{LevyError, LevyMeasure, LevyModel};
use crate::nets::TimeNet;
use crate::quad::{self, QuadConfig};

#[derive(Debug, Error)]
pub enum PathError {
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error("simulation parameter: {0}")]
    InvalidParameter(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SmallJumpMode {
    #[default]
    GaussianSubstitute,
    DriftOnly,
}

/// Target expected number of simulated jumps per unit of horizon when no cut-off is given.
pub const DEFAULT_JUMP_BUDGET: f64 = 1e4;
const TABLE_POINTS: usize = 4096;

/// Event flags on a skeleton.
pub mod flag {
    pub const KNOT: u8 = 1;
    pub const NET: u8 = 2;
    pub const AUX_ODD: u8 = 4;
    pub const JUMP: u8 = 8;
}

/// Sorted deterministic knots with their flags: the union of all nets of a
/// study, each interval refined by auxiliary points.
#[derive(Debug, Clone)]
pub struct KnotGrid {
    pub times: Vec<f64>,
    pub flags: Vec<u8>,
}

impl KnotGrid {
    /// Union of `nets`, each resulting interval split into `refinement` equal parts.
    pub fn build(nets: &[&TimeNet], refinement: usize) -> Result<Self, PathError> {
        if nets.is_empty() || refinement == 0 {
            return Err(PathError::InvalidParameter("need at least one net and refinement ≥ 1".into()));
        }
        let horizon = nets[0].horizon();
        let mut union = nets[0].clone();
        for net in &nets[1..] {
            if net.horizon() != horizon {
                return Err(PathError::InvalidParameter("nets with different horizons".into()));
            }
            union = union.combine(net.knots());
        }
        let k = union.knots();
        let mut times = Vec::with_capacity((k.len() - 1) * refinement + 1);
        let mut flags = Vec::with_capacity(times.capacity());
        for w in k.windows(2) {
            times.push(w[0]);
            flags.push(flag::KNOT | flag::NET);
            let h = (w[1] - w[0]) / refinement as f64;
            for j in 1..refinement {
                times.push(w[0] + j as f64 * h);
                flags.push(if j % 2 == 1 { flag::KNOT | flag::AUX_ODD } else { flag::KNOT });
            }
        }
        times.push(horizon);
        flags.push(flag::KNOT | flag::NET);
        Ok(KnotGrid { times, flags })
    }

    pub fn from_times(times: Vec<f64>) -> Self {
        let flags = vec![flag::KNOT | flag::NET; times.len()];
        KnotGrid { times, flags }
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }
}

/// A simulated path on [t₀, T]: one entry per event (knot and/or jump).
#[derive(Debug, Clone, Default)]
pub struct Skeleton {
    pub times: Vec<f64>,
    pub x_pre: Vec<f64>,
    pub x_post: Vec<f64>,
    pub flags: Vec<u8>,
}

impl Skeleton {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn clear(&mut self) {
        self.times.clear();
        self.x_pre.clear();
        self.x_post.clear();
        self.flags.clear();
    }

    fn push(&mut self, t: f64, xp: f64, xq: f64, f: u8) {
        self.times.push(t);
        self.x_pre.push(xp);
        self.x_post.push(xq);
        self.flags.push(f);
    }

    pub fn jump_x(&self, k: usize) -> f64 {
        self.x_post[k] - self.x_pre[k]
    }

    pub fn terminal(&self) -> f64 {
        self.x_post[self.len() - 1]
    }

    /// Writes the skeleton as CSV; `crossing` marks events flagged by a threshold rule.
    pub fn write_csv(&self, path: &Path, crossing: &[bool]) -> Result<(), PathError> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        writeln!(tmp, "time,x_pre,x_post,jump_x,crossing_flag")?;
        for k in 0..self.len() {
            let c = crossing.get(k).copied().unwrap_or(false) as u8;
            writeln!(tmp, "{},{},{},{},{}", self.times[k], self.x_pre[k], self.x_post[k], self.jump_x(k), c)?;
        }
        tmp.persist(path).map_err(|e| PathError::Io(e.error))?;
        Ok(())
    }
}

/// Inverse-CDF table for the jump law on one side of the origin.
#[derive(Debug, Clone)]
struct SideTable {
    log_nodes: Vec<f64>,
    cum: Vec<f64>,
}

impl SideTable {
    fn mass(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }

    fn sample(&self, u: f64) -> f64 {
        let w = u * self.mass();
        let k = self.cum.partition_point(|&c| c < w).clamp(1, self.cum.len() - 1);
        let (c0, c1) = (self.cum[k - 1], self.cum[k]);
        let frac = if c1 > c0 { (w - c0) / (c1 - c0) } else { 0.5 };
        (self.log_nodes[k - 1] + frac * (self.log_nodes[k] - self.log_nodes[k - 1])).exp()
    }
}

#[derive(Debug, Clone)]
enum JumpSampler {
    Atoms { sizes: Vec<f64>, cum: Vec<f64> },
    Density { pos: SideTable, neg: SideTable },
}

impl JumpSampler {
    fn intensity(&self) -> f64 {
        match self {
            JumpSampler::Atoms { cum, .. } => *cum.last().unwrap_or(&0.0),
            JumpSampler::Density { pos, neg } => pos.mass() + neg.mass(),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            JumpSampler::Atoms { sizes, cum } => {
                let w = rng.random::<f64>() * cum[cum.len() - 1];
                let k = cum.partition_point(|&c| c <= w).min(sizes.len() - 1);
                sizes[k]
            }
            JumpSampler::Density { pos, neg } => {
                let total = pos.mass() + neg.mass();
                if rng.random::<f64>() * total < pos.mass() {
                    pos.sample(rng.random())
                } else {
                    -neg.sample(rng.random())
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Jumps with |x| ≤ delta_sim are not simulated individually.
    #[serde(default)]
    pub delta_sim: Option<f64>,
    #[serde(default)]
    pub small_jump_mode: SmallJumpMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_refinement")]
    pub fine_refinement: usize,
}

fn default_paths() -> usize {
    10_000
}
fn default_refinement() -> usize {
    32
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            delta_sim: None,
            small_jump_mode: SmallJumpMode::GaussianSubstitute,
            seed: 0,
            paths: default_paths(),
            fine_refinement: default_refinement(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EngineSummary {
    pub delta_sim: f64,
    pub jump_intensity: f64,
    pub small_jump_variance: f64,
    pub sigma_eff: f64,
    pub drift: f64,
    pub mode: SmallJumpMode,
}

#[derive(Debug, Clone)]
pub struct PathEngine {
    model: LevyModel,
    delta: f64,
    sigma_eff: f64,
    drift: f64,
    small_var: f64,
    big_compensator: f64,
    mode: SmallJumpMode,
    sampler: JumpSampler,
}

impl PathEngine {
    pub fn new(model: &LevyModel, delta_sim: Option<f64>, mode: SmallJumpMode) -> Result<Self, PathError> {
        let sigma = model.sigma;
        let (delta, sampler) = match &model.measure {
            LevyMeasure::Atoms(atoms) => {
                let live: Vec<_> = atoms.iter().filter(|a| a.rate > 0.0).collect();
                let sizes = live.iter().map(|a| a.size).collect();
                let mut acc = 0.0;
                let cum = live
                    .iter()
                    .map(|a| {
                        acc += a.rate;
                        acc
                    })
                    .collect();
                (0.0, JumpSampler::Atoms { sizes, cum })
            }
            _ => {
                let delta = match delta_sim {
                    Some(d) if d > 0.0 && d < 1.0 => d,
                    Some(d) => return Err(PathError::InvalidParameter(format!("delta_sim must lie in (0, 1), got {d}"))),
                    None => default_cutoff(model)?,
                };
                let pos = side_table(model, 1.0, delta)?;
                let neg = side_table(model, -1.0, delta)?;
                (delta, JumpSampler::Density { pos, neg })
            }
        };
        let small_var = if delta > 0.0 { model.integrate_band(&|x| x * x, 0.0, delta, &[])? } else { 0.0 };
        let sigma_eff = match mode {
            SmallJumpMode::GaussianSubstitute => (sigma * sigma + small_var).sqrt(),
            SmallJumpMode::DriftOnly => sigma,
        };
        let big = model.integrate_band(&|x| x.exp_m1(), delta, f64::INFINITY, &[])?;
        let drift = -0.5 * sigma_eff * sigma_eff - big;
        Ok(PathEngine { model: model.clone(), delta, sigma_eff, drift, small_var, big_compensator: big, mode, sampler })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn summary(&self) -> EngineSummary {
        EngineSummary {
            delta_sim: self.delta,
            jump_intensity: self.sampler.intensity(),
            small_jump_variance: self.small_var,
            sigma_eff: self.sigma_eff,
            drift: self.drift,
            mode: self.mode,
        }
    }

    pub fn small_jump_variance(&self) -> f64 {
        self.small_var
    }

    /// ∫_{|x|>δ} (eˣ − 1) ν(dx), the compensator rate of the simulated jumps of S/S₋.
    pub fn simulated_compensator(&self) -> f64 {
        self.big_compensator
    }

    pub fn jump_intensity(&self) -> f64 {
        self.sampler.intensity()
    }

    /// Simulates on [t₀, T] from X_{t₀} = x₀, using the grid knots in [t₀, T].
    pub fn simulate_into<R: Rng>(&self, grid: &KnotGrid, t0: f64, x0: f64, rng: &mut R, out: &mut Skeleton) {
        out.clear();
        let horizon = grid.horizon();
        let start = grid.times.partition_point(|&t| t < t0);
        let lambda = self.sampler.intensity() * (horizon - t0);
        let count = if lambda > 0.0 {
            Poisson::new(lambda).map(|p| p.sample(rng) as usize).unwrap_or(0)
        } else {
            0
        };
        let mut jump_times: Vec<f64> = (0..count).map(|_| t0 + rng.random::<f64>() * (horizon - t0)).collect();
        jump_times.sort_by(f64::total_cmp);
        let start_flags = if start < grid.times.len() && grid.times[start] == t0 { grid.flags[start] } else { 0 };
        let first_knot = if start_flags != 0 { start + 1 } else { start };
        out.push(t0, x0, x0, start_flags);
        let (mut gi, mut ji) = (first_knot, 0usize);
        let mut x = x0;
        let mut t = t0;
        while gi < grid.times.len() || ji < jump_times.len() {
            let tg = grid.times.get(gi).copied().unwrap_or(f64::INFINITY);
            let tj = jump_times.get(ji).copied().unwrap_or(f64::INFINITY);
            let (te, mut fl) = if tg <= tj { (tg, grid.flags[gi]) } else { (tj, 0u8) };
            let dt = te - t;
            if dt > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                x += self.drift * dt + self.sigma_eff * dt.sqrt() * z;
            }
            let pre = x;
            if tg <= tj {
                gi += 1;
            }
            while ji < jump_times.len() && jump_times[ji] == te {
                x += self.sampler.sample(rng);
                fl |= flag::JUMP;
                ji += 1;
            }
            out.push(te, pre, x, fl);
            t = te;
        }
    }

    pub fn simulate<R: Rng>(&self, grid: &KnotGrid, t0: f64, x0: f64, rng: &mut R) -> Skeleton {
        let mut s = Skeleton::default();
        self.simulate_into(grid, t0, x0, rng, &mut s);
        s
    }

    /// Draws X_τ − X_0 without intermediate knots.
    pub fn sample_increment<R: Rng>(&self, tau: f64, rng: &mut R) -> f64 {
        let lambda = self.sampler.intensity() * tau;
        let count = if lambda > 0.0 { Poisson::new(lambda).map(|p| p.sample(rng) as usize).unwrap_or(0) } else { 0 };
        let z: f64 = StandardNormal.sample(rng);
        let mut x = self.drift * tau + self.sigma_eff * tau.sqrt() * z;
        for _ in 0..count {
            x += self.sampler.sample(rng);
        }
        x
    }

    /// Expected number of threshold crossings lost to the cut-off:
    /// ∫₀ᵀ ν({|x| ≤ δ : |eˣ − 1| > ε(T − t)^κ}) dt.
    pub fn missed_crossing_intensity(&self, eps: f64, kappa: f64) -> Result<f64, PathError> {
        if self.delta == 0.0 {
            return Ok(0.0);
        }
        let horizon = self.model.horizon;
        let delta = self.delta;
        let model = &self.model;
        let band = |level: f64| -> Result<f64, LevyError> {
            let up = level.ln_1p();
            let mut m = 0.0;
            if up < delta {
                m += model.integrate_side(&|_| 1.0, 1.0, up, delta, &[])?;
            }
            if level < 1.0 {
                let down = -(-level).ln_1p();
                if down < delta {
                    m += model.integrate_side(&|_| 1.0, -1.0, down, delta, &[])?;
                }
            }
            Ok(m)
        };
        if kappa == 0.0 {
            return Ok(horizon * band(eps)?);
        }
        let mut failure = None;
        let cfg = QuadConfig { abs_tol: 1e-10, rel_tol: 1e-8, max_intervals: 400 };
        // Substitute s = (T − t)^{1/4} to tame the endpoint singularity at t = T.
        let q = quad::integrate(
            |s| {
                let tau = s.powi(4);
                match band(eps * tau.powf(kappa)) {
                    Ok(v) => v * 4.0 * s.powi(3),
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            },
            0.0,
            horizon.powf(0.25),
            &cfg,
        )
        .map_err(LevyError::from)?;
        if let Some(e) = failure {
            return Err(e.into());
        }
        Ok(q.value)
    }
}

/// Cut-off δ with ν({|x| > δ}) = budget / T.
fn default_cutoff(model: &LevyModel) -> Result<f64, PathError> {
    let target = DEFAULT_JUMP_BUDGET / model.horizon;
    let (mut lo, mut hi) = ((1e-12f64).ln(), (0.5f64).ln());
    if model.intensity_above(hi.exp())? >= target {
        return Ok(hi.exp());
    }
    if model.intensity_above(lo.exp())? <= target {
        return Ok(lo.exp());
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if model.intensity_above(mid.exp())? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi.exp())
}

fn side_table(model: &LevyModel, sign: f64, delta: f64) -> Result<SideTable, PathError> {
    let total = model.integrate_side(&|_| 1.0, sign, delta, f64::INFINITY, &[])?;
    let mut xmax = 1.0f64;
    while xmax < 200.0 && model.integrate_side(&|_| 1.0, sign, xmax, f64::INFINITY, &[])? > 1e-13 * total {
        xmax *= 2.0;
    }
    let (l0, l1) = (delta.ln(), xmax.max(2.0 * delta).ln());
    let step = (l1 - l0) / (TABLE_POINTS - 1) as f64;
    let log_nodes: Vec<f64> = (0..TABLE_POINTS).map(|i| l0 + i as f64 * step).collect();
    let mut cum = vec![0.0; TABLE_POINTS];
    for i in 1..TABLE_POINTS {
        let (a, b) = (log_nodes[i - 1].exp(), log_nodes[i].exp());
        let m = model.integrate_side(&|_| 1.0, sign, a, b, &[])?;
        cum[i] = cum[i - 1] + m;
    }
    Ok(SideTable { log_nodes, cum })
}
