//! The predator-prey reaction-diffusion system with almost periodic coefficients.
//!
//! On `[0, L]` with Dirichlet conditions the system reads
//!
//! ```text
//! u' = d1(t) u_xx + a(t) u - c1(t) u v / (1 + |v_x|)
//! v' = d2(t) v_xx - b(t) v + c2(t) u v / (1 + |u_x|)
//! ```
//!
//! The diffusion and the damping `b` form the evolution family, the remaining
//! terms are the nonlinearity `f` with `f(t, 0) = 0`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::apfun::{
    compose, find_joint_almost_periods, sp_distance, AlmostPeriodReport, Coefficient, NormKind, Side, Signal,
};
use crate::error::{Error, Result};
use crate::evolution::{
    verify_alpha_estimate, verify_dichotomy, AlphaEstimateReport, DichotomyData, DichotomyReport, EvolutionSystem,
};
use crate::io::write_json;
use crate::solver::{
    constants, picard_solve, verify_ap_solution, ApSolutionReport, Constants, ContractionGate, ConvergenceReport,
    ForcingTerm, ModalForcing, Plus, SolveConfig, Source, Trajectory,
};
use crate::spectral::{eigenvalue, AlphaWeights, FieldPair, PaddedTransform};

/// Parameters of the predator-prey system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LVParams {
    pub d_tilde_1: f64,
    pub d_hat_1: f64,
    pub d_tilde_2: f64,
    pub d_hat_2: f64,
    pub a_tilde: f64,
    pub b_tilde: f64,
    pub c_tilde: f64,
    pub length: f64,
    pub modes: usize,
    pub alpha: f64,
    /// Optional state-independent forcing added to the nonlinearity.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub forcing: Vec<ForcingTerm>,
}

impl Default for LVParams {
    fn default() -> Self {
        LVParams {
            d_tilde_1: 3.0,
            d_hat_1: 1.0,
            d_tilde_2: 3.0,
            d_hat_2: 1.0,
            a_tilde: 0.05,
            b_tilde: 0.5,
            c_tilde: 0.1,
            length: 1.0,
            modes: 32,
            alpha: 0.6,
            forcing: Vec::new(),
        }
    }
}

impl LVParams {
    /// Check the parameter constraints; returns the key of the first bad field.
    pub fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let nonneg = [
            ("d_tilde_1", self.d_tilde_1),
            ("d_hat_1", self.d_hat_1),
            ("d_tilde_2", self.d_tilde_2),
            ("d_hat_2", self.d_hat_2),
            ("a_tilde", self.a_tilde),
            ("b_tilde", self.b_tilde),
            ("c_tilde", self.c_tilde),
        ];
        for (k, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err((k, format!("must be nonnegative and finite, got {v}")));
            }
        }
        if self.d_tilde_1 <= 2.0 * self.d_hat_1 {
            return Err(("d_tilde_1", format!("must exceed 2 * d_hat_1 = {}", 2.0 * self.d_hat_1)));
        }
        if self.d_tilde_2 <= 2.0 * self.d_hat_2 {
            return Err(("d_tilde_2", format!("must exceed 2 * d_hat_2 = {}", 2.0 * self.d_hat_2)));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(("length", format!("must be positive, got {}", self.length)));
        }
        if self.modes == 0 {
            return Err(("modes", "must be at least 1".into()));
        }
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return Err(("alpha", format!("must lie in (1/2, 1), got {}", self.alpha)));
        }
        for (i, term) in self.forcing.iter().enumerate() {
            if term.component > 1 || term.mode == 0 || term.mode > self.modes {
                return Err(("forcing", format!("term {i} addresses component {} mode {}", term.component, term.mode)));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(k, m)| Error::config(format!("lv.{k}"), m))
    }

    pub fn d1(&self) -> Coefficient {
        Coefficient::QuasiPeriodicCos { d_tilde: self.d_tilde_1, d_hat: self.d_hat_1 }
    }
    pub fn d2(&self) -> Coefficient {
        Coefficient::QuasiPeriodicCos { d_tilde: self.d_tilde_2, d_hat: self.d_hat_2 }
    }
    pub fn a(&self) -> Coefficient {
        Coefficient::PiecewiseA { a_tilde: self.a_tilde }
    }
    pub fn b(&self) -> Coefficient {
        Coefficient::PiecewiseB { b_tilde: self.b_tilde }
    }
    pub fn c1(&self) -> Coefficient {
        Coefficient::SinRecip { c_tilde: self.c_tilde }
    }
    pub fn c2(&self) -> Coefficient {
        Coefficient::CosRecip { c_tilde: self.c_tilde }
    }

    /// All time-dependent coefficients, forcing included, in a fixed order.
    pub fn coefficients(&self) -> Vec<Coefficient> {
        let mut v = vec![self.d1(), self.d2(), self.a(), self.b(), self.c1(), self.c2()];
        v.extend(self.forcing.iter().map(|t| t.coefficient.clone()));
        v
    }

    pub fn lambda1(&self) -> f64 {
        eigenvalue(1, self.length)
    }

    /// Evolution family of the linear part on `window`.
    pub fn system(&self, window: (f64, f64)) -> Result<EvolutionSystem> {
        self.validate()?;
        EvolutionSystem::new(self.d1(), self.d2(), self.b(), self.length, self.modes, window, 2.5e-3)
    }

    /// Forcing as a modal source on the pair.
    pub fn forcing_source(&self) -> Result<ModalForcing> {
        ModalForcing::new(2, self.modes, self.forcing.clone())
    }

    /// The smallness hypotheses of the existence result, in both exponent forms.
    pub fn hypotheses(&self, c_alpha: f64) -> Hypotheses {
        let l1 = self.lambda1();
        let growth = (l1 * self.length * self.length).exp();
        let small = |d_tilde: f64, d_hat: f64| {
            let ratio = d_hat / (d_tilde - 2.0 * d_hat);
            let bound_minus = 4.0 * PI * l1 * growth / (1.0 + PI);
            let bound_plus = 4.0 * PI * l1 / ((1.0 + PI) * growth);
            SmallnessCheck {
                ratio,
                bound_minus,
                bound_plus,
                holds_minus: ratio < bound_minus,
                holds_plus: ratio < bound_plus,
            }
        };
        let smallness = [small(self.d_tilde_1, self.d_hat_1), small(self.d_tilde_2, self.d_hat_2)];
        let a_tilde_bound = PI * l1 / (growth * c_alpha);
        let a_tilde_holds = self.a_tilde < a_tilde_bound;
        Hypotheses {
            diffusion_positive: self.check().is_ok(),
            all_hold: smallness.iter().all(|s| s.holds_plus) && a_tilde_holds,
            smallness,
            c_alpha,
            a_tilde_bound,
            a_tilde_holds,
        }
    }
}

/// One diffusion smallness condition `d_hat / (d_tilde - 2 d_hat) < bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SmallnessCheck {
    pub ratio: f64,
    /// Bound with `exp(-lambda_1 L^2)` in the denominator.
    pub bound_minus: f64,
    /// Bound with `exp(+lambda_1 L^2)` in the denominator; the smaller of the two.
    pub bound_plus: f64,
    pub holds_minus: bool,
    pub holds_plus: bool,
}

/// Status of the parameter hypotheses of the existence result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Hypotheses {
    pub diffusion_positive: bool,
    pub smallness: [SmallnessCheck; 2],
    pub c_alpha: f64,
    pub a_tilde_bound: f64,
    pub a_tilde_holds: bool,
    /// Conservative forms of all conditions hold.
    pub all_hold: bool,
}

/// Pseudo-spectral evaluation of the interaction terms.
#[derive(Clone, Debug)]
pub struct LvNonlinearity {
    transform: PaddedTransform,
    a: Coefficient,
    c1: Coefficient,
    c2: Coefficient,
}

impl LvNonlinearity {
    pub fn new(params: &LVParams) -> Result<Self> {
        Ok(LvNonlinearity {
            transform: PaddedTransform::new(params.length, params.modes)?,
            a: params.a(),
            c1: params.c1(),
            c2: params.c2(),
        })
    }

    pub fn modes(&self) -> usize {
        self.transform.modes()
    }

    /// `f(t, (u, v))` as a field pair.
    pub fn eval_pair(&self, t: f64, side: Side, state: &FieldPair) -> Result<FieldPair> {
        if state.u.modes() != self.modes() || state.u.length() != self.transform.length() {
            return Err(Error::DimensionMismatch { expected: self.modes(), got: state.u.modes() });
        }
        let mut out = vec![0.0; 2 * self.modes()];
        self.eval(t, side, &state.to_flat(), &mut out)?;
        FieldPair::from_flat(self.transform.length(), &out)
    }
}

impl Source for LvNonlinearity {
    fn dim(&self) -> usize {
        2 * self.modes()
    }

    fn eval(&self, t: f64, side: Side, x: &[f64], out: &mut [f64]) -> Result<()> {
        let k = self.modes();
        if x.len() != 2 * k || out.len() != 2 * k {
            return Err(Error::DimensionMismatch { expected: 2 * k, got: x.len().min(out.len()) });
        }
        let n = self.transform.points();
        let mut buf = vec![0.0; 6 * n];
        let (u, rest) = buf.split_at_mut(n);
        let (v, rest) = rest.split_at_mut(n);
        let (ux, rest) = rest.split_at_mut(n);
        let (vx, rest) = rest.split_at_mut(n);
        let (g1, g2) = rest.split_at_mut(n);
        self.transform.values(&x[..k], u);
        self.transform.values(&x[k..], v);
        self.transform.derivatives(&x[..k], ux);
        self.transform.derivatives(&x[k..], vx);
        let a = self.a.eval_side(t, side);
        let c1 = self.c1.eval_side(t, side);
        let c2 = self.c2.eval_side(t, side);
        for j in 0..n {
            let uv = u[j] * v[j];
            g1[j] = a * u[j] - c1 * uv / (1.0 + vx[j].abs());
            g2[j] = c2 * uv / (1.0 + ux[j].abs());
        }
        let (o1, o2) = out.split_at_mut(k);
        self.transform.project(g1, o1);
        self.transform.project(g2, o2);
        Ok(())
    }

    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.a.discontinuities(lo, hi)
    }
}

/// `f(t, state)` for the given parameters.
pub fn lv_nonlinearity(params: &LVParams, t: f64, state: &FieldPair) -> Result<FieldPair> {
    LvNonlinearity::new(params)?.eval_pair(t, Side::Right, state)
}

/// Local Lipschitz bound `L_rho(t) = a(t) + (c1(t) + c2(t)) rho (rho + 1)` on the `rho`-ball.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LipschitzBound {
    pub rho: f64,
    pub sup_a: f64,
    pub sup_c: f64,
    /// `sup_t L_rho(t) = 4 a_tilde + 2 c_tilde rho (rho + 1)`.
    pub sup: f64,
    #[serde(skip)]
    a: Coefficient,
    #[serde(skip)]
    c: [Coefficient; 2],
}

impl LipschitzBound {
    /// Pointwise value, with absolute values so it bounds sign-changing coefficients too.
    pub fn at(&self, t: f64) -> f64 {
        let r = self.rho * (self.rho + 1.0);
        self.a.eval(t).abs() + (self.c[0].eval(t).abs() + self.c[1].eval(t).abs()) * r
    }
}

pub fn lipschitz_bound(params: &LVParams, rho: f64) -> Result<LipschitzBound> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("rho must be positive, got {rho}")));
    }
    let sup_a = 4.0 * params.a_tilde;
    let sup_c = params.c_tilde;
    Ok(LipschitzBound {
        rho,
        sup_a,
        sup_c,
        sup: sup_a + 2.0 * sup_c * rho * (rho + 1.0),
        a: params.a(),
        c: [params.c1(), params.c2()],
    })
}

/// Randomized check of `|f(t,x) - f(t,y)|_0 <= L_rho(t) |x - y|_alpha` on the `rho`-ball.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LipschitzCheck {
    pub rho: f64,
    pub trials: usize,
    /// Largest `|f(t,x) - f(t,y)|_0 / (L_rho(t) |x - y|_alpha)`.
    pub max_ratio: f64,
    /// Allowed discretization slack.
    pub eta: f64,
    pub pass: bool,
}

/// Allowed pseudo-spectral slack of the Lipschitz check.
pub const LIPSCHITZ_ETA: f64 = 0.05;

/// A random pair state with a random spectral decay, scaled to alpha norm `radius`.
fn random_state(rng: &mut ChaCha8Rng, weights: &AlphaWeights, dim: usize, radius: f64) -> Vec<f64> {
    let k = dim / 2;
    let decay = rng.gen_range(0.0..4.0);
    let mut x: Vec<f64> = (0..dim).map(|i| rng.gen_range(-1.0..1.0) * ((i % k + 1) as f64).powf(-decay)).collect();
    let n = weights.norm(&x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v *= radius / n);
    }
    x
}

pub fn check_lipschitz(params: &LVParams, rho: f64, trials: usize, seed: u64) -> Result<LipschitzCheck> {
    params.validate()?;
    let bound = lipschitz_bound(params, rho)?;
    let f = LvNonlinearity::new(params)?;
    let dim = f.dim();
    let wa = AlphaWeights::new(params.length, params.modes, 2, params.alpha)?;
    let w0 = AlphaWeights::new(params.length, params.modes, 2, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut fx, mut fy) = (vec![0.0; dim], vec![0.0; dim]);
    let mut max_ratio: f64 = 0.0;
    for i in 0..trials {
        let t = rng.gen_range(-50.0..50.0);
        let r = rho * rng.gen::<f64>();
        let x = random_state(&mut rng, &wa, dim, r);
        // alternate between nearby and unrelated partners
        let y = if i % 2 == 0 {
            let h = random_state(&mut rng, &wa, dim, 1e-4 * rho);
            let mut y: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a + b).collect();
            let n = wa.norm(&y);
            if n > rho {
                y.iter_mut().for_each(|v| *v *= rho / n);
            }
            y
        } else {
            let r = rho * rng.gen::<f64>();
            random_state(&mut rng, &wa, dim, r)
        };
        let dx = wa.norm_diff(&x, &y);
        let l = bound.at(t);
        if dx == 0.0 || l == 0.0 {
            continue;
        }
        f.eval(t, Side::Right, &x, &mut fx)?;
        f.eval(t, Side::Right, &y, &mut fy)?;
        max_ratio = max_ratio.max(w0.norm_diff(&fx, &fy) / (l * dx));
    }
    Ok(LipschitzCheck { rho, trials, max_ratio, eta: LIPSCHITZ_ETA, pass: max_ratio <= 1.0 + LIPSCHITZ_ETA })
}

/// Empirical embedding constant `max |x|_0 / |x|_alpha` over random fields.
pub fn measure_c_alpha(length: f64, modes: usize, alpha: f64, trials: usize, seed: u64) -> Result<f64> {
    let wa = AlphaWeights::new(length, modes, 1, alpha)?;
    let w0 = AlphaWeights::new(length, modes, 1, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..trials {
        let decay = rng.gen_range(0.0..8.0);
        let x: Vec<f64> = (1..=modes).map(|k| rng.gen_range(-1.0..1.0) * (k as f64).powf(-decay)).collect();
        let n = wa.norm(&x);
        if n > 0.0 {
            best = best.max(w0.norm(&x) / n);
        }
    }
    Ok(best)
}

/// Admissible radii `[0, upper)` for the contraction argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RhoWindow {
    /// Largest admissible `sup L_rho`: the reciprocal of the solution-operator constant.
    pub k_cap: f64,
    /// Constant the cap is taken from.
    pub k_used: f64,
    /// Discriminant of the quadratic; absent when there is no interaction.
    pub discriminant: Option<f64>,
    /// Positive root of `2 c rho^2 + 2 c rho + 4 a - k_cap`, if any.
    pub rho1: Option<f64>,
    /// Right end of the window after capping at `rho_max`; `None` when unbounded.
    pub upper: Option<f64>,
    pub capped: bool,
    pub empty: bool,
}

impl RhoWindow {
    pub fn contains(&self, rho: f64) -> bool {
        if self.empty || !(rho > 0.0) {
            return false;
        }
        match self.upper {
            None => true,
            Some(u) if self.capped => rho <= u,
            Some(u) => rho < u,
        }
    }
}

/// Solve `2 c rho^2 + 2 c rho + (4 a - k_cap) = 0` for the admissible radii.
///
/// The cap uses the larger of the two smoothing-integral constants; the
/// Lipschitz bound already maps the alpha norm into the base norm, so no
/// further embedding factor enters. `rho_max` may be infinite.
pub fn rho_window(params: &LVParams, k: &Constants, rho_max: f64) -> RhoWindow {
    let k_used = k.k_inf.max(k.k_contraction);
    let k_cap = 1.0 / k_used;
    let (a, c) = (params.a_tilde, params.c_tilde);
    let c0 = 4.0 * a - k_cap;
    let finite_cap = rho_max.is_finite().then_some(rho_max);
    let empty = |discriminant| RhoWindow {
        k_cap,
        k_used,
        discriminant,
        rho1: None,
        upper: Some(0.0),
        capped: false,
        empty: true,
    };
    if c == 0.0 {
        if c0 >= 0.0 {
            return empty(None);
        }
        return RhoWindow {
            k_cap,
            k_used,
            discriminant: None,
            rho1: None,
            upper: finite_cap,
            capped: finite_cap.is_some(),
            empty: false,
        };
    }
    let disc = 4.0 * c * c - 8.0 * c * c0;
    if disc < 0.0 || c0 >= 0.0 {
        return empty(Some(disc));
    }
    let rho1 = (-2.0 * c + disc.sqrt()) / (4.0 * c);
    RhoWindow {
        k_cap,
        k_used,
        discriminant: Some(disc),
        rho1: Some(rho1),
        upper: Some(rho1.min(rho_max)),
        capped: rho_max < rho1,
        empty: false,
    }
}

/// Stepanov distances of `t -> f(t, u(t))` at almost periods of the solution.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompositionReport {
    /// Almost-period accuracy of the coefficients.
    pub epsilon: f64,
    pub p: f64,
    /// `C' = ||L_rho|| C + rho + 2 rho (rho + 1)`.
    pub constant: f64,
    pub bound: f64,
    pub taus: Vec<f64>,
    pub distances: Vec<f64>,
    pub empirical_constant: Option<f64>,
    pub pass: bool,
}

/// Check that the superposition `f(., u(.))` inherits the almost periods of `u`.
///
/// The constant combines the Lipschitz term `||L_rho|| C` for the state shift
/// with the coefficient shift at a state of size `rho`.
pub fn composition_check(
    params: &LVParams,
    u: &Trajectory,
    taus: &[f64],
    eps: f64,
    transfer_constant: f64,
    rho: f64,
    p: f64,
) -> Result<CompositionReport> {
    let f = LvNonlinearity::new(params)?;
    let sig = u.to_signal()?;
    let breaks = f.breakpoints(sig.t0(), sig.t_end());
    let g = compose(
        |t, side, x: &[f64], out: &mut [f64]| {
            // dimensions are fixed by construction
            f.eval(t, side, x, out).expect("state dimension matches the nonlinearity");
        },
        f.dim(),
        f.dim(),
        &breaks,
        &sig,
    )?;
    let l = lipschitz_bound(params, rho)?;
    let constant = l.sup * transfer_constant + rho + 2.0 * rho * (rho + 1.0);
    let bound = constant * eps;
    let distances = taus.iter().map(|&tau| sp_distance(&g, tau, p)).collect::<Result<Vec<_>>>()?;
    Ok(CompositionReport {
        epsilon: eps,
        p,
        constant,
        bound,
        empirical_constant: distances.iter().map(|d| d / eps).reduce(f64::max),
        pass: distances.iter().all(|&d| d <= bound),
        taus: taus.to_vec(),
        distances,
    })
}

/// Settings of the end-to-end demo beyond the solver configuration.
#[derive(Clone, Debug)]
pub struct DemoOptions {
    pub epsilon: f64,
    pub tau_range: (f64, f64),
    pub tau_step: f64,
    /// Stepanov exponent of the coefficient scan and the composition check.
    pub p: f64,
    /// Sampling step of the coefficient scan.
    pub scan_dt: f64,
    pub dichotomy_trials: usize,
    pub estimate_trials: usize,
    pub lipschitz_trials: usize,
    pub seed: u64,
    pub force: bool,
}

impl Default for DemoOptions {
    fn default() -> Self {
        DemoOptions {
            epsilon: 1e-2,
            tau_range: (1.0, 200.0),
            tau_step: 1e-2,
            p: 1.0,
            scan_dt: 1e-2,
            dichotomy_trials: 1000,
            estimate_trials: 500,
            lipschitz_trials: 400,
            seed: 0,
            force: false,
        }
    }
}

/// Solver settings of the demo: a window long enough for the almost-period scan and a radius inside the default window.
pub fn demo_solver_defaults() -> SolveConfig {
    SolveConfig { t1: 210.0, rho: 0.15, ..SolveConfig::default() }
}

/// Evolution-family reports of the demo.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DichotomyBundle {
    pub data: DichotomyData,
    pub dichotomy: DichotomyReport,
    pub alpha_estimate: AlphaEstimateReport,
}

/// Constants and the admissible radius.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstantsBundle {
    pub constants: Constants,
    pub lipschitz: LipschitzBound,
    pub lipschitz_check: LipschitzCheck,
    pub rho_window: RhoWindow,
}

/// Almost periods of the inputs and their transfer to the solution.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ApBundle {
    pub coefficients: AlmostPeriodReport,
    pub solution: ApSolutionReport,
    pub composition: CompositionReport,
}

/// Final summary of the demo.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DemoVerdict {
    pub params: LVParams,
    pub hypotheses: Hypotheses,
    pub rho: f64,
    pub rho_admissible: bool,
    pub contraction_product: f64,
    pub converged: bool,
    pub iterations: usize,
    pub sup_u: f64,
    pub sup_v: f64,
    pub sup_pair: f64,
    /// The computed solution stays in the `rho`-ball at every grid time.
    pub in_ball: bool,
    pub dichotomy_pass: bool,
    pub alpha_estimate_pass: bool,
    pub lipschitz_pass: bool,
    pub ap_transfer_pass: bool,
    pub composition_pass: bool,
    pub pass: bool,
}

/// Everything the demo produces.
#[derive(Clone, Debug)]
pub struct DemoBundle {
    pub solution: Trajectory,
    pub dichotomy: DichotomyBundle,
    pub constants: ConstantsBundle,
    pub convergence: ConvergenceReport,
    pub ap: ApBundle,
    pub verdict: DemoVerdict,
}

impl DemoBundle {
    /// Write the bundle files into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join("solution.csv"))?);
        self.solution.write_csv(&mut w)?;
        std::io::Write::flush(&mut w)?;
        write_json(&dir.join("dichotomy.json"), &self.dichotomy)?;
        write_json(&dir.join("constants.json"), &self.constants)?;
        write_json(&dir.join("convergence.json"), &self.convergence)?;
        write_json(&dir.join("ap_report.json"), &self.ap)?;
        write_json(&dir.join("verdict.json"), &self.verdict)?;
        Ok(())
    }
}

/// Sup over the output grid of each component's alpha norm.
fn component_sups(u: &Trajectory, alpha: f64, length: f64) -> Result<(f64, f64)> {
    let w = AlphaWeights::new(length, u.modes(), 1, alpha)?;
    let k = u.modes();
    let (mut su, mut sv) = (0.0f64, 0.0f64);
    for i in 0..u.output_len() {
        let x = u.output(i);
        su = su.max(w.norm(&x[..k]));
        sv = sv.max(w.norm(&x[k..]));
    }
    Ok((su, sv))
}

/// Dichotomy check, constants, radius window, Picard solve and almost-period transfer.
///
/// The solver's `alpha` is overridden by the parameters' `alpha`.
pub fn lv_demo(params: &LVParams, cfg: &SolveConfig, opts: &DemoOptions) -> Result<DemoBundle> {
    params.validate()?;
    let mut cfg = cfg.clone();
    cfg.alpha = params.alpha;
    cfg.check().map_err(|(k, m)| Error::config(format!("solver.{k}"), m))?;
    let window = (cfg.t0 - cfg.tail_cut - 1.0, cfg.t1 + cfg.tail_cut + 1.0);
    let sys = params.system(window)?;
    let delta = sys.delta();
    cfg.validate(delta)?;
    let gamma = cfg.gamma_ratio * delta;

    let dichotomy = verify_dichotomy(&sys, (cfg.t0, cfg.t1), opts.dichotomy_trials, opts.seed)?;
    let alpha_estimate =
        verify_alpha_estimate(&sys, params.alpha, gamma, (cfg.t0, cfg.t1), opts.estimate_trials, opts.seed ^ 0xA1)?;
    let m_alpha = alpha_estimate.m_alpha;
    // stable family: the unstable-part constant vanishes
    let k = constants(params.alpha, gamma, delta, m_alpha, 0.0, cfg.p)?;
    let data = DichotomyData { m: dichotomy.declared_m, delta, gamma, alpha: params.alpha, m_alpha, c_alpha: 0.0 };

    let c_alpha = measure_c_alpha(params.length, params.modes, params.alpha, 2000, opts.seed ^ 0xC0)?;
    let hypotheses = params.hypotheses(c_alpha);
    let lipschitz = lipschitz_bound(params, cfg.rho)?;
    let lipschitz_check = check_lipschitz(params, cfg.rho, opts.lipschitz_trials, opts.seed ^ 0x11)?;
    let window_rho = rho_window(params, &k, f64::INFINITY);
    let rho_admissible = window_rho.contains(cfg.rho);
    if !rho_admissible && !opts.force {
        return Err(Error::ContractionViolated(format!(
            "rho = {} outside the admissible window [0, {}) (cap {})",
            cfg.rho,
            window_rho.upper.unwrap_or(f64::INFINITY),
            window_rho.k_cap
        )));
    }
    let gate = ContractionGate { lipschitz: lipschitz.sup, k_contraction: window_rho.k_used, force: opts.force };

    let f = Plus(LvNonlinearity::new(params)?, params.forcing_source()?);
    let (solution, convergence) = picard_solve(&sys, &f, &cfg, &gate, None)?;

    let weights = sys.weights(params.alpha)?;
    let coeffs = params.coefficients();
    let signals = coeffs
        .iter()
        .map(|c| Signal::from_coefficients(std::slice::from_ref(c), cfg.t0, cfg.t1, opts.scan_dt))
        .collect::<Result<Vec<_>>>()?;
    let coefficients = find_joint_almost_periods(
        &signals,
        opts.epsilon,
        NormKind::Stepanov { p: opts.p },
        opts.tau_range,
        opts.tau_step,
    )?;
    let empirical = {
        let probe = verify_ap_solution(&solution, &weights, &coefficients, 0.0)?;
        probe.empirical_constant.unwrap_or(0.0)
    };
    let ap_solution = verify_ap_solution(&solution, &weights, &coefficients, empirical)?;
    let composition = composition_check(
        params,
        &solution,
        &ap_solution.solution_report.almost_periods,
        opts.epsilon,
        empirical,
        cfg.rho,
        opts.p,
    )?;

    let (sup_u, sup_v) = component_sups(&solution, params.alpha, params.length)?;
    let sup_pair = solution.sup_norm(&weights);
    let in_ball = sup_pair <= cfg.rho;
    let verdict = DemoVerdict {
        params: params.clone(),
        hypotheses,
        rho: cfg.rho,
        rho_admissible,
        contraction_product: gate.product(),
        converged: convergence.converged,
        iterations: convergence.iterations,
        sup_u,
        sup_v,
        sup_pair,
        in_ball,
        dichotomy_pass: dichotomy.pass,
        alpha_estimate_pass: alpha_estimate.pass,
        lipschitz_pass: lipschitz_check.pass,
        ap_transfer_pass: ap_solution.pass,
        composition_pass: composition.pass,
        pass: convergence.converged
            && in_ball
            && dichotomy.pass
            && alpha_estimate.pass
            && lipschitz_check.pass
            && ap_solution.pass
            && composition.pass,
    };
    Ok(DemoBundle {
        solution,
        dichotomy: DichotomyBundle { data, dichotomy, alpha_estimate },
        constants: ConstantsBundle { constants: k, lipschitz, lipschitz_check, rho_window: window_rho },
        convergence,
        ap: ApBundle { coefficients, solution: ap_solution, composition },
        verdict,
    })
}
