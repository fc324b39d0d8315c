//! Bounded and almost periodic mild solutions via the Green-function integral.
//!
//! The linear solution `u(t) = int_{-inf}^t U(t,s) h(s) ds` is computed for all
//! times of a [`TimeMesh`] at once by marching the per-mode exponential quadrature
//! of [`march`]. Picard iteration repeats that march with `h = f(., u_n(.))`.

mod constants;
mod family;
mod march;
mod mesh;
mod source;
mod trajectory;

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apfun::{AlmostPeriodReport, NormKind, Side, Verdict};
use crate::error::{Error, Result};
use crate::quad;
use crate::spectral::AlphaWeights;

pub use constants::{constants, Constants};
pub use family::{DiagonalFamily, ModalFamily};
pub use march::Plan;
pub use mesh::TimeMesh;
pub use source::{FnSource, ForcingTerm, ModalForcing, ModalSine, Plus, Source, ZeroSource};
pub use trajectory::Trajectory;

/// Time grid, truncation and iteration settings of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    /// The integral from minus infinity starts `tail_cut` before `t0`.
    pub tail_cut: f64,
    /// Absolute tolerance of adaptive quadratures used by the checks.
    pub quad_tol: f64,
    pub max_iter: usize,
    pub stop_tol: f64,
    pub rho: f64,
    pub alpha: f64,
    pub p: f64,
    /// `gamma = gamma_ratio * delta`.
    pub gamma_ratio: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            t0: 0.0,
            t1: 20.0,
            dt: 1e-2,
            tail_cut: 3.0,
            quad_tol: 1e-10,
            max_iter: 25,
            stop_tol: 1e-9,
            rho: 1.0,
            alpha: 0.6,
            p: 1.0,
            gamma_ratio: 0.5,
        }
    }
}

impl SolveConfig {
    /// Check the settings on their own; returns the dotted key of the first bad field.
    pub fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let bad = |k: &'static str, m: String| Err((k, m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", format!("must be positive, got {}", self.dt));
        }
        if !(self.t0.is_finite() && self.t1.is_finite() && self.t1 > self.t0) {
            return bad("t1", format!("must exceed t0 = {}, got {}", self.t0, self.t1));
        }
        if self.t1 - self.t0 < self.dt {
            return bad("t1", "time window shorter than one step".into());
        }
        if !(self.tail_cut > 0.0 && self.tail_cut.is_finite()) {
            return bad("tail_cut", format!("must be positive, got {}", self.tail_cut));
        }
        if !(self.quad_tol > 0.0) {
            return bad("quad_tol", format!("must be positive, got {}", self.quad_tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter", "must be at least 1".into());
        }
        if !(self.stop_tol > 0.0) {
            return bad("stop_tol", format!("must be positive, got {}", self.stop_tol));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho", format!("must be positive, got {}", self.rho));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha", format!("must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return bad("p", format!("must be at least 1, got {}", self.p));
        }
        if !(self.gamma_ratio > 0.0 && self.gamma_ratio < 1.0) {
            return bad("gamma_ratio", format!("must lie in (0, 1), got {}", self.gamma_ratio));
        }
        Ok(())
    }

    /// Full validation, including `exp(-delta tail_cut) <= stop_tol / 10`.
    pub fn validate(&self, delta: f64) -> Result<()> {
        self.check().map_err(|(k, m)| Error::invalid(format!("solver.{k}: {m}")))?;
        let tail = (-delta * self.tail_cut).exp();
        if tail > self.stop_tol / 10.0 {
            return Err(Error::invalid(format!(
                "solver.tail_cut: exp(-delta * tail_cut) = {tail:e} exceeds stop_tol / 10 = {:e} (delta = {delta})",
                self.stop_tol / 10.0
            )));
        }
        Ok(())
    }

    /// Smallest tail cut satisfying the truncation invariant for decay rate `delta`.
    pub fn min_tail_cut(&self, delta: f64) -> f64 {
        (10.0 / self.stop_tol).ln() / delta
    }
}

/// A family, a mesh and its quadrature plan, reusable across sweeps.
pub struct Prepared<'a, F: ModalFamily + ?Sized> {
    family: &'a F,
    cfg: SolveConfig,
    mesh: TimeMesh,
    plan: Plan,
}

impl<'a, F: ModalFamily + ?Sized> Prepared<'a, F> {
    pub fn new(family: &'a F, cfg: &SolveConfig, extra_breaks: &[f64]) -> Result<Self> {
        cfg.validate(family.decay_rate())?;
        let lo = cfg.t0 - cfg.tail_cut - cfg.dt;
        let hi = cfg.t1 + cfg.tail_cut + cfg.dt;
        let mut breaks = family.breakpoints(lo, hi);
        breaks.extend_from_slice(extra_breaks);
        let mesh = TimeMesh::new(cfg.t0, cfg.t1, cfg.dt, cfg.tail_cut, &breaks)?;
        let plan = Plan::new(family, &mesh)?;
        Ok(Prepared { family, cfg: cfg.clone(), mesh, plan })
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }
    pub fn config(&self) -> &SolveConfig {
        &self.cfg
    }

    /// `f(t, u(t))` at every mesh point, point-major.
    pub fn source_values<S: Source + ?Sized>(&self, source: &S, u: &[f64]) -> Result<Vec<f64>> {
        let dim = self.family.dim();
        if source.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: source.dim() });
        }
        let times = self.mesh.times();
        let sides = self.mesh.sides();
        let mut out = vec![0.0; dim * times.len()];
        out.par_chunks_mut(dim)
            .enumerate()
            .try_for_each(|(p, o)| source.eval(times[p], sides[p], &u[p * dim..(p + 1) * dim], o))?;
        Ok(out)
    }

    /// One application of the solution map: `u -> int G(., s) f(s, u(s)) ds`.
    pub fn sweep<S: Source + ?Sized>(&self, source: &S, u: &[f64]) -> Result<Vec<f64>> {
        let f = self.source_values(source, u)?;
        self.plan.solve(self.family, &f)
    }

    pub fn trajectory(&self, values: Vec<f64>) -> Result<Trajectory> {
        Trajectory::new(self.mesh.clone(), self.family.components(), self.family.modes(), values)
    }
}

/// Bounded solution of the linear problem `x' = A(t) x + h(t)`.
pub fn solve_linear<F, S>(family: &F, h: &S, cfg: &SolveConfig) -> Result<Trajectory>
where
    F: ModalFamily + ?Sized,
    S: Source + ?Sized,
{
    let lo = cfg.t0 - cfg.tail_cut - cfg.dt;
    let prep = Prepared::new(family, cfg, &h.breakpoints(lo, cfg.t1 + cfg.tail_cut + cfg.dt))?;
    let zero = vec![0.0; family.dim() * prep.mesh.len()];
    let u = prep.sweep(h, &zero)?;
    prep.trajectory(u)
}

/// Admission rule for Picard iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ContractionGate {
    /// Bound on the Lipschitz constant of `f` on the ball (`||L_rho||`).
    pub lipschitz: f64,
    /// Solution-operator constant the contraction condition is checked against.
    pub k_contraction: f64,
    /// Iterate even when `lipschitz * k_contraction >= 1`.
    pub force: bool,
}

impl ContractionGate {
    pub fn product(&self) -> f64 {
        self.lipschitz * self.k_contraction
    }
    pub fn check(&self) -> Result<()> {
        if self.product() < 1.0 || self.force {
            Ok(())
        } else {
            Err(Error::ContractionViolated(format!(
                "lipschitz bound {} times constant {} is {} >= 1",
                self.lipschitz,
                self.k_contraction,
                self.product()
            )))
        }
    }
}

/// Iteration history of a Picard solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub converged: bool,
    /// `sup_t |u_n(t) - u_{n-1}(t)|_alpha` for `n = 1, 2, ...`.
    pub residuals: Vec<f64>,
    /// Successive residual ratios (defined once the previous residual is nonzero).
    pub ratios: Vec<f64>,
    pub max_ratio: Option<f64>,
    pub lipschitz: f64,
    pub k_contraction: f64,
    pub contraction_product: f64,
    pub contraction_margin: f64,
    pub forced: bool,
    pub stop_tol: f64,
    pub rho: f64,
    pub sup_norm: f64,
}

/// Fixed point of `u -> int G(., s) f(s, u(s)) ds` in the `rho`-ball of the alpha norm.
///
/// `start` is a constant initial state; `None` starts from zero.
pub fn picard_solve<F, S>(
    family: &F,
    f: &S,
    cfg: &SolveConfig,
    gate: &ContractionGate,
    start: Option<&[f64]>,
) -> Result<(Trajectory, ConvergenceReport)>
where
    F: ModalFamily + ?Sized,
    S: Source + ?Sized,
{
    gate.check()?;
    let lo = cfg.t0 - cfg.tail_cut - cfg.dt;
    let prep = Prepared::new(family, cfg, &f.breakpoints(lo, cfg.t1 + cfg.tail_cut + cfg.dt))?;
    let weights = family.weights(cfg.alpha)?;
    let dim = family.dim();
    let n = prep.mesh.len();
    let mut u = match start {
        None => vec![0.0; dim * n],
        Some(s) if s.len() == dim => s.repeat(n),
        Some(s) => return Err(Error::DimensionMismatch { expected: dim, got: s.len() }),
    };
    let out_idx = prep.mesh.output_indices().to_vec();
    let times = prep.mesh.times().to_vec();
    let mut residuals = Vec::new();
    let mut ratios = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let next = prep.sweep(f, &u)?;
        let mut res: f64 = 0.0;
        let mut worst = (0.0, f64::NEG_INFINITY);
        for &p in &out_idx {
            res = res.max(weights.norm_diff(&next[p * dim..(p + 1) * dim], &u[p * dim..(p + 1) * dim]));
            let nrm = weights.norm(&next[p * dim..(p + 1) * dim]);
            if nrm > worst.1 {
                worst = (times[p], nrm);
            }
        }
        if worst.1 > cfg.rho * (1.0 + 1e-12) {
            return Err(Error::LeftBall { t: worst.0, norm: worst.1, rho: cfg.rho });
        }
        if let Some(&prev) = residuals.last() {
            if prev > 0.0 {
                ratios.push(res / prev);
            }
        }
        residuals.push(res);
        u = next;
        if res < cfg.stop_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations: residuals.len(), residual: *residuals.last().unwrap() });
    }
    let traj = prep.trajectory(u)?;
    let report = ConvergenceReport {
        iterations: residuals.len(),
        converged,
        max_ratio: ratios.iter().copied().reduce(f64::max),
        residuals,
        ratios,
        lipschitz: gate.lipschitz,
        k_contraction: gate.k_contraction,
        contraction_product: gate.product(),
        contraction_margin: 1.0 - gate.product(),
        forced: gate.product() >= 1.0,
        stop_tol: cfg.stop_tol,
        rho: cfg.rho,
        sup_norm: traj.sup_norm(&weights),
    };
    Ok((traj, report))
}

/// Comparison of a linear solution with its a priori bounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LinearBoundReport {
    pub sup_alpha_norm: f64,
    pub forcing_sup: f64,
    pub forcing_bsp: f64,
    pub p: f64,
    pub bound_inf: f64,
    pub bound_bsp: f64,
    pub margin_inf: f64,
    pub margin_bsp: f64,
    pub pass: bool,
}

/// Check `sup |u|_alpha <= K_inf |h|_inf` and the Stepanov counterpart.
///
/// For `p = 1` the Stepanov line uses `K_inf` with the sup norm of `h`.
pub fn linear_bound_check<S: Source + ?Sized>(
    u: &Trajectory,
    h: &S,
    k: &Constants,
    w_alpha: &AlphaWeights,
) -> Result<LinearBoundReport> {
    let comps = u.components();
    let modes = u.modes();
    let w0 = AlphaWeights::from_weights(vec![1.0; modes], comps);
    let mesh = u.mesh();
    let times = mesh.times();
    let sides = mesh.sides();
    let zero = vec![0.0; u.dim()];
    let mut buf = vec![0.0; u.dim()];
    let mut hn = Vec::with_capacity(times.len());
    for (&t, &s) in times.iter().zip(sides) {
        h.eval(t, s, &zero, &mut buf)?;
        hn.push(w0.norm(&buf));
    }
    let forcing_sup = hn.iter().copied().fold(0.0, f64::max);
    let forcing_bsp = mesh_stepanov_norm(mesh, &hn, k.p)?;
    let sup = u.sup_norm(w_alpha);
    let bound_inf = k.k_inf * forcing_sup;
    let bound_bsp = if k.p == 1.0 { k.k_inf * forcing_sup } else { k.k_bsp * forcing_bsp };
    let tol = 1e-12 * bound_inf.max(1e-300);
    Ok(LinearBoundReport {
        sup_alpha_norm: sup,
        forcing_sup,
        forcing_bsp,
        p: k.p,
        bound_inf,
        bound_bsp,
        margin_inf: bound_inf - sup,
        margin_bsp: bound_bsp - sup,
        pass: sup <= bound_inf + tol && sup <= bound_bsp + tol,
    })
}

/// `sup_t (int_t^{t+1} g^p)^{1/p}` for mesh samples `g`, trapezoid per cell.
pub fn mesh_stepanov_norm(mesh: &TimeMesh, g: &[f64], p: f64) -> Result<f64> {
    let times = mesh.times();
    if mesh.end() - mesh.start() < 1.0 {
        return Err(Error::WindowTooShort { len: mesh.end() - mesh.start() });
    }
    let mut cum = vec![0.0; times.len()];
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        cum[i] = cum[i - 1] + 0.5 * h * (g[i - 1].powf(p) + g[i].powf(p));
    }
    let at = |t: f64| {
        let j = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1);
        let (a, b) = (times[j - 1], times[j]);
        if b == a {
            cum[j]
        } else {
            cum[j - 1] + (cum[j] - cum[j - 1]) * (t - a) / (b - a)
        }
    };
    let mut best: f64 = 0.0;
    for &t in times {
        if t + 1.0 > mesh.end() + 1e-12 {
            break;
        }
        best = best.max(at(t + 1.0) - at(t));
    }
    Ok(best.max(0.0).powf(1.0 / p))
}

/// Worst violation of the two-point mild-solution identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IdentityReport {
    pub pairs: usize,
    pub max_error: f64,
    pub worst_pair: [f64; 2],
    pub tolerance: f64,
    pub pass: bool,
}

/// Check `u(t) = U(t,sigma) u(sigma) + int_sigma^t U(t,s) f(s, u(s)) ds` on random output-node pairs.
///
/// The integral is recomputed by adaptive Gauss-Kronrod on the original time
/// variable with `u(s)` interpolated from the trajectory, independently of the
/// marching scheme. Errors are measured in the unweighted pair norm.
#[allow(clippy::too_many_arguments)]
pub fn restriction_identity<F, S>(
    family: &F,
    f: &S,
    u: &Trajectory,
    pairs: usize,
    max_lag: f64,
    seed: u64,
    quad_tol: f64,
    tolerance: f64,
) -> Result<IdentityReport>
where
    F: ModalFamily + ?Sized,
    S: Source + ?Sized,
{
    let n_out = u.output_len();
    let dt = u.mesh().dt();
    let max_steps = ((max_lag / dt).round() as usize).clamp(1, n_out - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<(usize, usize)> = (0..pairs)
        .map(|_| {
            let lag = rng.gen_range(1..=max_steps);
            let i = rng.gen_range(0..n_out - lag);
            (i, i + lag)
        })
        .collect();
    let dim = u.dim();
    let k = family.modes();
    let w0 = AlphaWeights::from_weights(vec![1.0; k], family.components());
    let errs: Vec<(f64, f64, f64)> = picks
        .par_iter()
        .map(|&(i, j)| {
            let (sigma, t) = (u.output_time(i), u.output_time(j));
            let failure: RefCell<Option<Error>> = RefCell::new(None);
            let mut breaks: Vec<f64> = u.mesh().segments().iter().map(|&(a, _)| u.mesh().times()[a]).collect();
            breaks.extend(f.breakpoints(sigma, t));
            breaks.extend(family.breakpoints(sigma, t));
            let integrand = |s: f64, out: &mut [f64]| {
                let mut x = vec![0.0; dim];
                let r = u.sample(s, &mut x).and_then(|_| f.eval(s, Side::Right, &x, out)).and_then(|_| {
                    for c in 0..family.components() {
                        for m in 0..k {
                            out[c * k + m] *= family.multiplier(c, m, t, s)?;
                        }
                    }
                    Ok(())
                });
                if let Err(e) = r {
                    out.fill(0.0);
                    failure.borrow_mut().get_or_insert(e);
                }
            };
            let integral = quad::integrate_vec(integrand, dim, sigma, t, quad_tol, &breaks, |v| {
                v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
            });
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            let us = u.output(i);
            let mut rhs = integral;
            for c in 0..family.components() {
                for m in 0..k {
                    rhs[c * k + m] += family.multiplier(c, m, t, sigma)? * us[c * k + m];
                }
            }
            Ok((sigma, t, w0.norm_diff(&rhs, u.output(j))))
        })
        .collect::<Result<_>>()?;
    let worst = errs.iter().copied().fold((0.0, 0.0, 0.0), |a, b| if b.2 > a.2 { b } else { a });
    Ok(IdentityReport {
        pairs,
        max_error: worst.2,
        worst_pair: [worst.0, worst.1],
        tolerance,
        pass: worst.2 <= tolerance,
    })
}

/// Transfer of input almost periods to the solution.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ApSolutionReport {
    pub epsilon: f64,
    /// Stability constant `K / (1 - L K)` of the fixed-point map.
    pub constant: f64,
    pub bound: f64,
    pub taus: Vec<f64>,
    pub distances: Vec<f64>,
    /// Largest `distance / epsilon` over the checked shifts.
    pub empirical_constant: Option<f64>,
    pub pass: bool,
    pub solution_report: AlmostPeriodReport,
}

/// `sup_t |u(t + tau) - u(t)|` over the output grid.
pub fn shift_distance(u: &Trajectory, weights: &AlphaWeights, tau: f64) -> Result<f64> {
    let n = u.output_len();
    let dt = u.mesh().dt();
    let s = tau / dt;
    let base = s.floor();
    let frac = if (s - s.round()).abs() < 1e-6 { 0.0 } else { s - base };
    let shift = if frac == 0.0 { s.round() } else { base };
    if shift < 0.0 || shift as usize + usize::from(frac > 0.0) >= n {
        return Err(Error::NoAdmissibleShift { tau, lo: u.output_time(0), hi: u.output_time(n - 1) });
    }
    let shift = shift as usize;
    let last = n - 1 - shift - usize::from(frac > 0.0);
    let dim = u.dim();
    let mut buf = vec![0.0; dim];
    let mut best: f64 = 0.0;
    for i in 0..=last {
        let a = u.output(i + shift);
        if frac > 0.0 {
            let b = u.output(i + shift + 1);
            for d in 0..dim {
                buf[d] = (1.0 - frac) * a[d] + frac * b[d];
            }
        } else {
            buf.copy_from_slice(a);
        }
        best = best.max(weights.norm_diff(&buf, u.output(i)));
    }
    Ok(best)
}

/// For every input `eps`-almost period `tau`, check `sup_t |u(t+tau) - u(t)|_alpha <= C eps`.
pub fn verify_ap_solution(
    u: &Trajectory,
    weights: &AlphaWeights,
    inputs: &AlmostPeriodReport,
    constant: f64,
) -> Result<ApSolutionReport> {
    let eps = inputs.epsilon;
    let taus = inputs.almost_periods.clone();
    let distances: Vec<f64> = taus.iter().map(|&tau| shift_distance(u, weights, tau)).collect::<Result<_>>()?;
    let bound = constant * eps;
    let passing: Vec<(f64, f64)> =
        taus.iter().copied().zip(distances.iter().copied()).filter(|&(_, d)| d <= bound).collect();
    let aps: Vec<f64> = passing.iter().map(|p| p.0).collect();
    let (lo, hi) = (inputs.tau_range[0], inputs.tau_range[1]);
    let inclusion_length = (aps.len() >= 2).then(|| aps.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max));
    let relatively_dense = inclusion_length
        .is_some_and(|l| aps[0] - lo <= l + 1e-12 && hi - aps[aps.len() - 1] <= l + 1e-12 && hi - lo >= 2.0 * l);
    let closest = taus.iter().zip(&distances).fold(None::<[f64; 2]>, |acc, (&t, &d)| match acc {
        Some(c) if c[1] <= d => Some(c),
        _ => Some([t, d]),
    });
    let solution_report = AlmostPeriodReport {
        epsilon: bound,
        norm_kind: NormKind::Bohr,
        tau_range: [lo, hi],
        tau_step: inputs.tau_step,
        distances: passing.iter().map(|p| p.1).collect(),
        almost_periods: aps,
        inclusion_length,
        relatively_dense,
        continuous: true,
        verdict: if relatively_dense { Verdict::BohrAp } else { Verdict::Inconclusive },
        closest,
        note: taus.is_empty().then(|| "no input almost periods in range; transfer check is vacuous".to_string()),
    };
    Ok(ApSolutionReport {
        epsilon: eps,
        constant,
        bound,
        empirical_constant: distances.iter().map(|d| d / eps).reduce(f64::max),
        pass: distances.iter().all(|&d| d <= bound),
        taus,
        distances,
        solution_report,
    })
}
