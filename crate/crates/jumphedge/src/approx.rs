//! Riemann and jump-corrected approximations of ∫ϑ dS on a skeleton, the
//! fine-grid reference integral and the resulting error processes.

use thiserror::Error;

use crate::hedging::StrategyFn;
use crate::levy::{LevyError, LevyModel};
use crate::nets::TimeNet;
use crate::path::{flag, Skeleton};

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("net knot {time} is not a skeleton event")]
    NetNotEmbedded { time: f64 },
    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),
    #[error(transparent)]
    Levy(#[from] LevyError),
}

pub type Result<T> = std::result::Result<T, ApproxError>;

/// Prices and strategy values at every skeleton event, before and after the event.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub s_pre: Vec<f64>,
    pub s_post: Vec<f64>,
    pub theta_pre: Vec<f64>,
    pub theta_post: Vec<f64>,
    pub flags: Vec<u8>,
}

impl Trajectory {
    /// S = s_scale·e^X with ϑ from a Markov strategy; values at T are never used as integrands.
    pub fn from_skeleton(sk: &Skeleton, s_scale: f64, horizon: f64, strategy: &dyn StrategyFn) -> Self {
        let mut tr = Trajectory::default();
        tr.fill(sk, s_scale, horizon, strategy);
        tr
    }

    /// Reuses the allocations of `self`.
    pub fn fill(&mut self, sk: &Skeleton, s_scale: f64, horizon: f64, strategy: &dyn StrategyFn) {
        let n = sk.len();
        self.times.clear();
        self.times.extend_from_slice(&sk.times);
        self.flags.clear();
        self.flags.extend_from_slice(&sk.flags);
        self.s_pre.clear();
        self.s_post.clear();
        self.theta_pre.clear();
        self.theta_post.clear();
        for k in 0..n {
            let (sp, sq) = (s_scale * sk.x_pre[k].exp(), s_scale * sk.x_post[k].exp());
            self.s_pre.push(sp);
            self.s_post.push(sq);
            let tau = horizon - sk.times[k];
            if tau > 0.0 {
                self.theta_pre.push(strategy.theta(tau, sp));
                self.theta_post.push(strategy.theta(tau, sq));
            } else {
                let last = self.theta_post.last().copied().unwrap_or(0.0);
                self.theta_pre.push(last);
                self.theta_post.push(last);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_jump(&self, k: usize) -> bool {
        self.flags[k] & flag::JUMP != 0
    }
}

/// How jump size is measured against ε(T − t)^κ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpScale {
    /// |ΔS_t| / S_{t−}.
    Relative,
    /// |ΔS_t|, for additive price models.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub eps: f64,
    pub kappa: f64,
    pub scale: JumpScale,
}

impl Threshold {
    pub fn new(eps: f64, kappa: f64, scale: JumpScale) -> Result<Self> {
        if !(eps > 0.0) || !(0.0..0.5).contains(&kappa) {
            return Err(ApproxError::InvalidThreshold(format!("need ε > 0 and κ ∈ [0, 1/2), got ε = {eps}, κ = {kappa}")));
        }
        Ok(Threshold { eps, kappa, scale })
    }

    pub fn level(&self, t: f64, horizon: f64) -> f64 {
        if self.kappa == 0.0 {
            self.eps
        } else {
            self.eps * (horizon - t).powf(self.kappa)
        }
    }

    /// Size of a jump in the units the level is expressed in.
    pub fn size(&self, s_pre: f64, s_post: f64) -> f64 {
        match self.scale {
            JumpScale::Relative => ((s_post - s_pre) / s_pre).abs(),
            JumpScale::Absolute => (s_post - s_pre).abs(),
        }
    }

    /// Crossing times ρᵢ(ε, κ) strictly before T.
    pub fn crossings(&self, tr: &Trajectory, horizon: f64) -> Vec<bool> {
        (0..tr.len())
            .map(|k| tr.is_jump(k) && tr.times[k] < horizon && self.size(tr.s_pre[k], tr.s_post[k]) > self.level(tr.times[k], horizon))
            .collect()
    }
}

/// Event index of every net knot at or after the trajectory start.
pub fn embed(tr: &Trajectory, net: &TimeNet) -> Result<Vec<usize>> {
    let t0 = tr.times[0];
    let tol = 1e-12 * net.horizon();
    let mut out = Vec::new();
    let mut k = 0;
    for &t in net.knots().iter().filter(|&&t| t >= t0 - tol) {
        while k < tr.len() && tr.times[k] < t - tol {
            k += 1;
        }
        if k == tr.len() || (tr.times[k] - t).abs() > tol {
            return Err(ApproxError::NetNotEmbedded { time: t });
        }
        out.push(k);
    }
    if out.first() != Some(&0) {
        return Err(ApproxError::NetNotEmbedded { time: t0 });
    }
    Ok(out)
}

/// Left-point sum over the skeleton events kept by `keep`, with jumps paid at ϑ_{t−}.
pub fn ground_truth_where(tr: &Trajectory, keep: impl Fn(usize) -> bool) -> f64 {
    let mut acc = crate::stats::Neumaier::default();
    let mut last = 0;
    for k in 1..tr.len() {
        if !(keep(k) || tr.is_jump(k) || k + 1 == tr.len()) {
            continue;
        }
        acc.add(tr.theta_post[last] * (tr.s_pre[k] - tr.s_post[last]));
        acc.add(tr.theta_pre[k] * (tr.s_post[k] - tr.s_pre[k]));
        last = k;
    }
    acc.value()
}

/// ∫_{(t₀,T]} ϑ_{u−} dS_u on all skeleton events.
pub fn ground_truth(tr: &Trajectory) -> f64 {
    ground_truth_where(tr, |_| true)
}

/// Reference integral on the grid with every odd auxiliary knot removed (refinement M/2).
pub fn ground_truth_half(tr: &Trajectory) -> f64 {
    ground_truth_where(tr, |k| tr.flags[k] & flag::AUX_ODD == 0)
}

/// A^Rm over (t₀, T]: Σ ϑ_{t_{i−1}−}(S_{tᵢ} − S_{t_{i−1}}).
pub fn riemann(tr: &Trajectory, net: &TimeNet) -> Result<f64> {
    let idx = embed(tr, net)?;
    let mut acc = crate::stats::Neumaier::default();
    for w in idx.windows(2) {
        acc.add(tr.theta_pre[w[0]] * (tr.s_post[w[1]] - tr.s_post[w[0]]));
    }
    Ok(acc.value())
}

/// A^corr over (t₀, T]: the Riemann sum plus (ϑ_{ρ−} − ϑ^τ_ρ)ΔS_ρ at each crossing before T.
pub fn corrected(tr: &Trajectory, net: &TimeNet, thr: &Threshold) -> Result<f64> {
    let idx = embed(tr, net)?;
    let base = riemann(tr, net)?;
    let cross = thr.crossings(tr, net.horizon());
    let mut acc = crate::stats::Neumaier::default();
    acc.add(base);
    for w in idx.windows(2) {
        let frozen = tr.theta_pre[w[0]];
        for k in w[0] + 1..=w[1] {
            if cross[k] {
                acc.add((tr.theta_pre[k] - frozen) * (tr.s_post[k] - tr.s_pre[k]));
            }
        }
    }
    Ok(acc.value())
}

/// Pathwise summary of both error processes E = ∫ϑdS − A on (t₀, T].
#[derive(Debug, Clone, Copy, Default)]
pub struct SchemeErrors {
    pub ground_truth: f64,
    pub riemann_terminal: f64,
    pub corrected_terminal: f64,
    pub riemann_sup: f64,
    pub corrected_sup: f64,
    pub riemann_max_jump: f64,
    pub corrected_max_jump: f64,
    /// max |ΔE^Rm_t| / Φ̄_t and max |ΔE^corr_t| / Φ̄_t, when weights are supplied.
    pub riemann_jump_over_weight: f64,
    pub corrected_jump_over_weight: f64,
    /// max over uncorrected jumps of |ΔE^corr_t| / (|ϑ_{t−} − ϑ^τ_t|·scale·ε(T − t)^κ).
    pub envelope_ratio: f64,
    /// Uncorrected jumps whose size exceeds the level; zero by construction.
    pub uncorrected_above: usize,
    pub crossings: usize,
    /// #(τ ⊔ ρ(ε, κ)) restricted to [t₀, T].
    pub cardinality: usize,
}

/// Error increments (ϑ_{u−} − ϑ^τ_u) dS_u summed event by event, so that a
/// constant strategy yields exact zeros.
pub fn scheme_errors(tr: &Trajectory, net: &TimeNet, thr: &Threshold, phi_bar: Option<&[f64]>) -> Result<SchemeErrors> {
    let horizon = net.horizon();
    let idx = embed(tr, net)?;
    let cross = thr.crossings(tr, horizon);
    let mut out = SchemeErrors { ground_truth: ground_truth(tr), cardinality: idx.len(), ..Default::default() };
    let mut e_rm = crate::stats::Neumaier::default();
    let mut e_corr = crate::stats::Neumaier::default();
    for w in idx.windows(2) {
        let frozen = tr.theta_pre[w[0]];
        for k in w[0] + 1..=w[1] {
            let cont = (tr.theta_post[k - 1] - frozen) * (tr.s_pre[k] - tr.s_post[k - 1]);
            e_rm.add(cont);
            e_corr.add(cont);
            out.riemann_sup = out.riemann_sup.max(e_rm.value().abs());
            out.corrected_sup = out.corrected_sup.max(e_corr.value().abs());
            if !tr.is_jump(k) {
                continue;
            }
            let diff = tr.theta_pre[k] - frozen;
            let jump = diff * (tr.s_post[k] - tr.s_pre[k]);
            e_rm.add(jump);
            out.riemann_max_jump = out.riemann_max_jump.max(jump.abs());
            if let Some(pb) = phi_bar {
                out.riemann_jump_over_weight = out.riemann_jump_over_weight.max(jump.abs() / pb[k]);
            }
            if cross[k] {
                out.crossings += 1;
                if idx.binary_search(&k).is_err() {
                    out.cardinality += 1;
                }
            } else {
                e_corr.add(jump);
                out.corrected_max_jump = out.corrected_max_jump.max(jump.abs());
                if let Some(pb) = phi_bar {
                    out.corrected_jump_over_weight = out.corrected_jump_over_weight.max(jump.abs() / pb[k]);
                }
                let size = thr.size(tr.s_pre[k], tr.s_post[k]);
                let level = thr.level(tr.times[k], horizon);
                if tr.times[k] < horizon && size > level {
                    out.uncorrected_above += 1;
                }
                if diff != 0.0 && tr.times[k] < horizon {
                    let scale = match thr.scale {
                        JumpScale::Relative => tr.s_pre[k],
                        JumpScale::Absolute => 1.0,
                    };
                    out.envelope_ratio = out.envelope_ratio.max(jump.abs() / (diff.abs() * scale * level));
                }
            }
            out.riemann_sup = out.riemann_sup.max(e_rm.value().abs());
            out.corrected_sup = out.corrected_sup.max(e_corr.value().abs());
        }
    }
    out.riemann_terminal = e_rm.value();
    out.corrected_terminal = e_corr.value();
    Ok(out)
}

/// Compensator rates of relative jumps of S split at a level: jumps with
/// |ΔS/S₋| above the level, and simulated jumps (|x| > δ) at or below it.
#[derive(Debug, Clone)]
pub struct CompensatorProfile {
    log_levels: Vec<f64>,
    large: Vec<f64>,
    small_simulated: Vec<f64>,
    simulated_total: f64,
}

impl CompensatorProfile {
    pub fn new(model: &LevyModel, delta: f64, simulated_total: f64, min_level: f64, max_level: f64, points: usize) -> Result<Self> {
        if !(min_level > 0.0 && max_level > min_level) || points < 2 {
            return Err(ApproxError::InvalidThreshold(format!("bad level range [{min_level}, {max_level}]")));
        }
        let (lo, hi) = (min_level.ln(), max_level.ln());
        let mut p = CompensatorProfile { log_levels: Vec::new(), large: Vec::new(), small_simulated: Vec::new(), simulated_total };
        let up = delta.exp_m1();
        let down = -(-delta).exp_m1();
        for j in 0..points {
            let ll = lo + (hi - lo) * j as f64 / (points - 1) as f64;
            let level = ll.exp();
            let large = model.integrate_z(&|z| z, level, f64::INFINITY)?;
            // Simulated band: z > up on the positive side, z < −down on the negative side.
            let mut small = 0.0;
            if level > up {
                small += model.integrate_z(&|z| if z > 0.0 { z } else { 0.0 }, up, level)?;
            }
            if level > down {
                small += model.integrate_z(&|z| if z < 0.0 { z } else { 0.0 }, down, level)?;
            }
            p.log_levels.push(ll);
            p.large.push(large);
            p.small_simulated.push(small);
        }
        Ok(p)
    }

    fn interp(&self, values: &[f64], level: f64) -> f64 {
        let ll = level.ln().clamp(self.log_levels[0], *self.log_levels.last().unwrap());
        let j = self.log_levels.partition_point(|&v| v < ll).clamp(1, self.log_levels.len() - 1);
        let w = (ll - self.log_levels[j - 1]) / (self.log_levels[j] - self.log_levels[j - 1]);
        values[j - 1] * (1.0 - w) + values[j] * w
    }

    pub fn large(&self, level: f64) -> f64 {
        self.interp(&self.large, level)
    }

    pub fn small_simulated(&self, level: f64) -> f64 {
        self.interp(&self.small_simulated, level)
    }
}

/// Terminal values of the three components with E^corr = E^C + E^S − E^D up to `residual`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Decomposition {
    pub continuous: f64,
    pub small_jumps: f64,
    pub drift: f64,
    pub corrected: f64,
    pub residual: f64,
}

/// Splits E^corr into the continuous martingale part, the compensated
/// uncorrected jumps and the compensator of the corrected jumps.
pub fn error_decomposition(tr: &Trajectory, net: &TimeNet, thr: &Threshold, profile: Option<&CompensatorProfile>) -> Result<Decomposition> {
    if thr.scale != JumpScale::Relative {
        return Err(ApproxError::InvalidThreshold("decomposition needs relative jump sizes".into()));
    }
    let horizon = net.horizon();
    let idx = embed(tr, net)?;
    let cross = thr.crossings(tr, horizon);
    let mut c = crate::stats::Neumaier::default();
    let mut s = crate::stats::Neumaier::default();
    let mut d = crate::stats::Neumaier::default();
    let mut e = crate::stats::Neumaier::default();
    for w in idx.windows(2) {
        let frozen = tr.theta_pre[w[0]];
        for k in w[0] + 1..=w[1] {
            let diff = tr.theta_post[k - 1] - frozen;
            let ds = tr.s_pre[k] - tr.s_post[k - 1];
            c.add(diff * ds);
            e.add(diff * ds);
            if let Some(p) = profile {
                let dt = tr.times[k] - tr.times[k - 1];
                let level = thr.level(tr.times[k - 1], horizon);
                let weight = diff * tr.s_post[k - 1] * dt;
                c.add(weight * p.simulated_total);
                s.add(-weight * p.small_simulated(level));
                d.add(weight * p.large(level));
            }
            if tr.is_jump(k) && !cross[k] {
                let jump = (tr.theta_pre[k] - frozen) * (tr.s_post[k] - tr.s_pre[k]);
                s.add(jump);
                e.add(jump);
            }
        }
    }
    let (continuous, small_jumps, drift, corrected) = (c.value(), s.value(), d.value(), e.value());
    Ok(Decomposition { continuous, small_jumps, drift, corrected, residual: continuous + small_jumps - drift - corrected })
}
