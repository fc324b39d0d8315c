//! Exact evolution family of `A(t) = diag(d1(t) Lap, d2(t) Lap - b(t))` on the sine basis.
//!
//! Every operator in the family is diagonal in the eigenbasis, so
//! `U(t, s)` multiplies u-mode `k` by `exp(-lambda_k int_s^t d1)` and v-mode `k`
//! by `exp(-int_s^t b - lambda_k int_s^t d2)`. The only numerical error is the
//! quadrature of the coefficient integrals, which are cached on a fine grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apfun::{Coefficient, Side};
use crate::error::{Error, Result};
use crate::quad;
use crate::solver::ModalFamily;
use crate::spectral::{eigenvalue, AlphaWeights, FieldPair};

/// `int_s^t c` by adaptive Gauss-Kronrod with panel breaks at the jumps of `c`.
pub fn integrate_coefficient(c: &Coefficient, s: f64, t: f64) -> Result<f64> {
    if s > t {
        return Err(Error::invalid(format!("integration limits reversed: s = {s} > t = {t}")));
    }
    let brk = c.discontinuities(s, t);
    Ok(quad::integrate(|x| c.eval(x), s, t, 1e-10, &brk))
}

/// Cached antiderivative `F(t) = int_lo^t c` on a fine grid with cubic Hermite lookup.
#[derive(Clone, Debug)]
pub struct Antiderivative {
    nodes: Vec<f64>,
    values: Vec<f64>,
    /// Right limit of `c` at `nodes[i]` (start of cell `i`).
    start_slope: Vec<f64>,
    /// Left limit of `c` at `nodes[i + 1]` (end of cell `i`).
    end_slope: Vec<f64>,
}

impl Antiderivative {
    pub fn new(c: &Coefficient, lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(hi > lo) || !(step > 0.0) {
            return Err(Error::invalid(format!("bad cache window [{lo}, {hi}] with step {step}")));
        }
        let n = ((hi - lo) / step).ceil() as usize;
        let mut nodes: Vec<f64> = (0..=n).map(|i| (lo + i as f64 * step).min(hi)).collect();
        *nodes.last_mut().unwrap() = hi;
        let tol = 1e-9 * step;
        for j in c.discontinuities(lo, hi) {
            if j > lo + tol && j < hi - tol && !nodes.iter().any(|&x| (x - j).abs() <= tol) {
                nodes.push(j);
            }
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() <= tol);
        let cells = nodes.len() - 1;
        let mut values = Vec::with_capacity(nodes.len());
        let mut start_slope = Vec::with_capacity(cells);
        let mut end_slope = Vec::with_capacity(cells);
        values.push(0.0);
        for i in 0..cells {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let mid = 0.5 * (a + b);
            let area = quad::gauss_legendre5(|x| c.eval_branch(x, mid), a, b);
            values.push(values[i] + area);
            start_slope.push(c.eval_branch(a, mid));
            end_slope.push(c.eval_branch(b, mid));
        }
        Ok(Antiderivative { nodes, values, start_slope, end_slope })
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }
    pub fn hi(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// `F(t)`.
    pub fn at(&self, t: f64) -> Result<f64> {
        let (lo, hi) = (self.lo(), self.hi());
        let tol = 1e-12 * (hi - lo).max(1.0);
        if !(t >= lo - tol && t <= hi + tol) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let t = t.clamp(lo, hi);
        let i = self.nodes.partition_point(|&x| x <= t).saturating_sub(1).min(self.nodes.len() - 2);
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let h = b - a;
        let s = (t - a) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(h00 * self.values[i]
            + h * h10 * self.start_slope[i]
            + h01 * self.values[i + 1]
            + h * h11 * self.end_slope[i])
    }

    /// `int_s^t c`.
    pub fn between(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.at(t)? - self.at(s)?)
    }
}

/// Constants of the exponential dichotomy and of the smoothing estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyData {
    #[serde(rename = "M")]
    pub m: f64,
    pub delta: f64,
    pub gamma: f64,
    pub alpha: f64,
    #[serde(rename = "mAlpha")]
    pub m_alpha: f64,
    #[serde(rename = "cAlpha")]
    pub c_alpha: f64,
}

/// The evolution family of the two-component diagonal system.
#[derive(Clone, Debug)]
pub struct EvolutionSystem {
    d1: Coefficient,
    d2: Coefficient,
    b: Coefficient,
    length: f64,
    modes: usize,
    lambdas: Vec<f64>,
    cache_d1: Antiderivative,
    cache_d2: Antiderivative,
    cache_b: Antiderivative,
    inf_d1: f64,
    inf_d2: f64,
    inf_b: f64,
}

fn sampled_inf(c: &Coefficient, lo: f64, hi: f64, step: f64) -> f64 {
    let n = ((hi - lo) / step).ceil() as usize;
    let mut m = f64::INFINITY;
    for i in 0..=n {
        let t = (lo + i as f64 * step).min(hi);
        m = m.min(c.eval_side(t, Side::Left)).min(c.eval_side(t, Side::Right));
    }
    m
}

impl EvolutionSystem {
    /// Build the family and its caches on `window`, with cache step `step`.
    pub fn new(
        d1: Coefficient,
        d2: Coefficient,
        b: Coefficient,
        length: f64,
        modes: usize,
        window: (f64, f64),
        step: f64,
    ) -> Result<Self> {
        if !(length > 0.0) || modes == 0 {
            return Err(Error::invalid("spatial domain needs a positive length and at least one mode"));
        }
        let (lo, hi) = window;
        // a lower bound valid on the whole line when available, else sampled on the window
        let lower = |c: &Coefficient| {
            let closed = c.inf_bound();
            if closed > 0.0 {
                closed
            } else {
                closed.max(sampled_inf(c, lo, hi, step))
            }
        };
        let inf_d1 = lower(&d1);
        let inf_d2 = lower(&d2);
        if !(inf_d1 > 0.0 && inf_d2 > 0.0) {
            return Err(Error::invalid(format!(
                "diffusion coefficients must be positive: inf d1 = {inf_d1}, inf d2 = {inf_d2}"
            )));
        }
        let inf_b = lower(&b);
        let lambdas = (1..=modes).map(|k| eigenvalue(k, length)).collect();
        Ok(EvolutionSystem {
            cache_d1: Antiderivative::new(&d1, lo, hi, step)?,
            cache_d2: Antiderivative::new(&d2, lo, hi, step)?,
            cache_b: Antiderivative::new(&b, lo, hi, step)?,
            d1,
            d2,
            b,
            length,
            modes,
            lambdas,
            inf_d1,
            inf_d2,
            inf_b,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn modes(&self) -> usize {
        self.modes
    }
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }
    pub fn d1(&self) -> &Coefficient {
        &self.d1
    }
    pub fn d2(&self) -> &Coefficient {
        &self.d2
    }
    pub fn b(&self) -> &Coefficient {
        &self.b
    }
    pub fn window(&self) -> (f64, f64) {
        (self.cache_d1.lo(), self.cache_d1.hi())
    }

    /// Decay exponent of the u-component: `lambda_1 inf d1`.
    pub fn delta_u(&self) -> f64 {
        self.lambdas[0] * self.inf_d1
    }
    /// Decay exponent of the v-component: `lambda_1 inf d2 + min(inf b, 0)`.
    pub fn delta_v(&self) -> f64 {
        self.lambdas[0] * self.inf_d2 + self.inf_b.min(0.0)
    }
    /// Dichotomy exponent of the pair.
    pub fn delta(&self) -> f64 {
        self.delta_u().min(self.delta_v())
    }

    /// Per-mode multipliers of `U(t, s)`, laid out as `[u modes, v modes]`.
    pub fn factors(&self, t: f64, s: f64) -> Result<Vec<f64>> {
        if t < s {
            return Err(Error::invalid(format!("evolution requires t >= s, got t = {t}, s = {s}")));
        }
        let i1 = self.cache_d1.between(s, t)?;
        let i2 = self.cache_d2.between(s, t)?;
        let ib = self.cache_b.between(s, t)?;
        let mut out = Vec::with_capacity(2 * self.modes);
        out.extend(self.lambdas.iter().map(|l| (-l * i1).exp()));
        out.extend(self.lambdas.iter().map(|l| (-ib - l * i2).exp()));
        Ok(out)
    }

    /// `U(t, s) x` on a flat `[u, v]` buffer.
    pub fn apply_flat(&self, t: f64, s: f64, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != 2 * self.modes {
            return Err(Error::DimensionMismatch { expected: 2 * self.modes, got: x.len() });
        }
        let f = self.factors(t, s)?;
        Ok(f.iter().zip(x).map(|(a, b)| a * b).collect())
    }

    fn check_pair(&self, x: &FieldPair) -> Result<()> {
        if x.u.modes() != self.modes || x.u.length() != self.length {
            return Err(Error::DimensionMismatch { expected: self.modes, got: x.u.modes() });
        }
        Ok(())
    }

    /// `U(t, s) x` for `t >= s`.
    pub fn apply_u(&self, t: f64, s: f64, x: &FieldPair) -> Result<FieldPair> {
        self.check_pair(x)?;
        FieldPair::from_flat(self.length, &self.apply_flat(t, s, &x.to_flat())?)
    }

    /// Green function of the exponentially stable family: `U(t, s)` for `s <= t`, zero otherwise.
    pub fn green_apply(&self, t: f64, s: f64, x: &FieldPair) -> Result<FieldPair> {
        self.check_pair(x)?;
        if s > t {
            return FieldPair::zeros(self.length, self.modes);
        }
        self.apply_u(t, s, x)
    }

    /// Pair norm weights for the alpha proxy.
    pub fn weights(&self, alpha: f64) -> Result<AlphaWeights> {
        AlphaWeights::new(self.length, self.modes, 2, alpha)
    }

    /// Closed-form smallest `m` with `|U(t,s)x|_alpha <= m (t-s)^(alpha-1) e^(-gamma (t-s)) |x|_0`
    /// implied by the lower bounds of the coefficients.
    ///
    /// Per mode the bound is `lambda^alpha sup_tau tau^(1-alpha) exp(-(lambda d - gamma) tau)`,
    /// attained at `tau = (1 - alpha) / (lambda d - gamma)`.
    pub fn m_alpha_bound(&self, alpha: f64, gamma: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        let mut m: f64 = 0.0;
        for &(rate_d, shift) in &[(self.inf_d1, 0.0), (self.inf_d2, self.inf_b.min(0.0))] {
            for &l in &self.lambdas {
                let r = l * rate_d + shift - gamma;
                if !(r > 0.0) {
                    return Err(Error::invalid(format!("gamma = {gamma} is not below the decay rate {}", r + gamma)));
                }
                let v = if alpha == 1.0 {
                    l
                } else {
                    l.powf(alpha) * ((1.0 - alpha) / r).powf(1.0 - alpha) * (alpha - 1.0).exp()
                };
                m = m.max(v);
            }
        }
        Ok(m)
    }
}

impl ModalFamily for EvolutionSystem {
    fn components(&self) -> usize {
        2
    }
    fn modes(&self) -> usize {
        self.modes
    }
    fn rate(&self, _comp: usize, k: usize) -> f64 {
        self.lambdas[k]
    }
    fn clock(&self, comp: usize, t: f64) -> Result<f64> {
        if comp == 0 {
            self.cache_d1.at(t)
        } else {
            self.cache_d2.at(t)
        }
    }
    fn clock_rate(&self, comp: usize, t: f64, side: Side) -> f64 {
        if comp == 0 {
            self.d1.eval_side(t, side)
        } else {
            self.d2.eval_side(t, side)
        }
    }
    fn damping(&self, comp: usize, t: f64) -> Result<f64> {
        if comp == 0 {
            Ok(0.0)
        } else {
            self.cache_b.at(t)
        }
    }
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut v = self.d1.discontinuities(lo, hi);
        v.extend(self.d2.discontinuities(lo, hi));
        v.extend(self.b.discontinuities(lo, hi));
        v
    }
    fn decay_rate(&self) -> f64 {
        self.delta()
    }
    fn window(&self) -> (f64, f64) {
        EvolutionSystem::window(self)
    }
    fn weights(&self, alpha: f64) -> Result<AlphaWeights> {
        EvolutionSystem::weights(self, alpha)
    }
}

/// Random trial: start time, elapsed time and initial state.
struct Trial {
    s: f64,
    tau: f64,
    x: Vec<f64>,
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let decay: f64 = rng.gen_range(0.0..2.0);
    (0..n)
        .map(|i| {
            let k = (i % (n / 2)) as f64 + 1.0;
            let g: f64 = rng.gen_range(-1.0..1.0);
            g * k.powf(-decay)
        })
        .collect()
}

fn make_trials(rng: &mut ChaCha8Rng, window: (f64, f64), trials: usize, n: usize) -> Vec<Trial> {
    let (lo, hi) = window;
    let tau_max = (hi - lo).min(2.0);
    (0..trials)
        .map(|_| {
            let tau = 10f64.powf(rng.gen_range(-4.0..0.0)) * tau_max;
            let s = rng.gen_range(lo..(hi - tau).max(lo + f64::MIN_POSITIVE));
            Trial { s, tau, x: random_state(rng, n) }
        })
        .collect()
}

/// Outcome of the randomized dichotomy check.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DichotomyReport {
    pub declared_m: f64,
    pub declared_delta: f64,
    pub delta_u: f64,
    pub delta_v: f64,
    /// Smallest `M` consistent with every trial at the declared exponents.
    pub fitted_m: f64,
    /// Largest exponent consistent with every trial at `M = 1`.
    pub fitted_delta: f64,
    pub trials: usize,
    pub pass: bool,
}

/// Check `|U(t,s)x| <= M e^(-delta (t-s)) |x|` on random trials, per component and for the pair.
pub fn verify_dichotomy(
    sys: &EvolutionSystem,
    window: (f64, f64),
    trials: usize,
    seed: u64,
) -> Result<DichotomyReport> {
    if !(window.1 > window.0) {
        return Err(Error::invalid("dichotomy window is empty"));
    }
    let k = sys.modes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = make_trials(&mut rng, window, trials, 2 * k);
    let w0 = sys.weights(0.0)?;
    let (du, dv) = (sys.delta_u(), sys.delta_v());
    let delta = du.min(dv);
    let res: Vec<(f64, f64)> = specs
        .par_iter()
        .map(|tr| {
            let y = sys.apply_flat(tr.s + tr.tau, tr.s, &tr.x)?;
            let nu = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
            // componentwise ratios against their own exponents, then the pair
            let ru = nu(&y[..k]) / nu(&tr.x[..k]) * (du * tr.tau).exp();
            let rv = nu(&y[k..]) / nu(&tr.x[k..]) * (dv * tr.tau).exp();
            let ratio = w0.norm(&y) / w0.norm(&tr.x);
            let rp = ratio * (delta * tr.tau).exp();
            let fitted = -ratio.ln() / tr.tau;
            Ok((ru.max(rv).max(rp), fitted))
        })
        .collect::<Result<Vec<_>>>()?;
    let fitted_m = res.iter().map(|r| r.0).fold(0.0, f64::max);
    let fitted_delta = res.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(DichotomyReport {
        declared_m: 1.0,
        declared_delta: delta,
        delta_u: du,
        delta_v: dv,
        fitted_m,
        fitted_delta,
        trials,
        pass: fitted_m <= 1.0 + 1e-9,
    })
}

/// Outcome of the randomized smoothing-estimate check.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AlphaEstimateReport {
    pub alpha: f64,
    pub gamma: f64,
    /// Closed-form constant used downstream.
    pub m_alpha: f64,
    /// Largest worst-mode ratio seen on the fitting set.
    pub m_alpha_empirical: f64,
    pub fit_trials: usize,
    pub check_trials: usize,
    /// Check-set trials whose worst-mode ratio exceeds `m_alpha`.
    pub violations: usize,
    pub worst_check_ratio: f64,
    pub pass: bool,
}

fn worst_mode_ratio(sys: &EvolutionSystem, tr: &Trial, alpha: f64, gamma: f64) -> Result<f64> {
    let f = sys.factors(tr.s + tr.tau, tr.s)?;
    let k = sys.modes();
    let mut worst: f64 = 0.0;
    for (i, fac) in f.iter().enumerate() {
        worst = worst.max(sys.lambdas()[i % k].powf(alpha) * fac);
    }
    Ok(worst / (tr.tau.powf(alpha - 1.0) * (-gamma * tr.tau).exp()))
}

/// Fit `m(alpha)` and verify it on a disjoint trial set.
///
/// The ratio of a trial is the operator norm `|U(t,s)|_{0 -> alpha}` (the worst
/// mode) divided by `(t-s)^(alpha-1) e^(-gamma (t-s))`; random states can only do
/// better than the worst mode.
pub fn verify_alpha_estimate(
    sys: &EvolutionSystem,
    alpha: f64,
    gamma: f64,
    window: (f64, f64),
    trials: usize,
    seed: u64,
) -> Result<AlphaEstimateReport> {
    let m_alpha = sys.m_alpha_bound(alpha, gamma)?;
    let k = sys.modes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fit = make_trials(&mut rng, window, trials, 2 * k);
    let check = make_trials(&mut rng, window, trials, 2 * k);
    let fit_r: Vec<f64> = fit.par_iter().map(|t| worst_mode_ratio(sys, t, alpha, gamma)).collect::<Result<_>>()?;
    let check_r: Vec<f64> = check.par_iter().map(|t| worst_mode_ratio(sys, t, alpha, gamma)).collect::<Result<_>>()?;
    let m_emp = fit_r.iter().copied().fold(0.0, f64::max);
    let violations = check_r.iter().filter(|&&r| r > m_alpha * (1.0 + 1e-12)).count();
    let worst = check_r.iter().copied().fold(0.0, f64::max);
    Ok(AlphaEstimateReport {
        alpha,
        gamma,
        m_alpha,
        m_alpha_empirical: m_emp,
        fit_trials: trials,
        check_trials: trials,
        violations,
        worst_check_ratio: worst,
        pass: m_alpha.is_finite() && violations == 0,
    })
}

/// Lags used by [`bi_ap_distance`]: geometric from 1e-3 to 4.
pub fn default_lags() -> Vec<f64> {
    (0..=24).map(|i| 1e-3 * 10f64.powf(i as f64 * (4000f64.log10() / 24.0))).collect()
}

/// `max |U(t+tau, s+tau)x - U(t,s)x| / |x|` over start times on a grid of step
/// `s_step` in `window`, the given lags and the probe states. With no probes the
/// operator norm (worst mode) is used.
pub fn bi_ap_distance(
    sys: &EvolutionSystem,
    tau: f64,
    window: (f64, f64),
    s_step: f64,
    lags: &[f64],
    probes: &[FieldPair],
) -> Result<f64> {
    let (lo, hi) = window;
    let hi_eff = hi - tau.max(0.0);
    let lo_eff = lo - tau.min(0.0);
    if !(hi_eff > lo_eff) || !(s_step > 0.0) {
        return Err(Error::NoAdmissibleShift { tau, lo, hi });
    }
    let n = ((hi_eff - lo_eff) / s_step).floor() as usize;
    let flats: Vec<Vec<f64>> = probes.iter().map(|p| p.to_flat()).collect();
    let w0 = sys.weights(0.0)?;
    let per_s: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let s = lo_eff + i as f64 * s_step;
            let mut worst: f64 = 0.0;
            for &lag in lags {
                let t = s + lag;
                if t > hi_eff {
                    continue;
                }
                let a = sys.factors(t + tau, s + tau)?;
                let b = sys.factors(t, s)?;
                if flats.is_empty() {
                    for (x, y) in a.iter().zip(&b) {
                        worst = worst.max((x - y).abs());
                    }
                } else {
                    for x in &flats {
                        let d: Vec<f64> = a.iter().zip(&b).zip(x).map(|((p, q), v)| (p - q) * v).collect();
                        worst = worst.max(w0.norm(&d) / w0.norm(x));
                    }
                }
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(per_s.into_iter().fold(0.0, f64::max))
}
