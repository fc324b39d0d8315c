use crate::apfun::Side;
use crate::error::{Error, Result};
use crate::spectral::AlphaWeights;

/// A diagonal linear family `x_{c,k}' = -(r_{c,k} d_c(t) + beta_c(t)) x_{c,k}`.
///
/// Component `c` runs on the clock `D_c(t) = int d_c` and is damped by
/// `B_c(t) = int beta_c`; mode `k` of that component has rate `r_{c,k}`.
/// Positive rates are stable (solved forward from the past), negative rates
/// unstable (solved backward from the future).
pub trait ModalFamily: Sync {
    fn components(&self) -> usize;
    fn modes(&self) -> usize;
    fn rate(&self, comp: usize, k: usize) -> f64;
    /// `D_c(t)` relative to an arbitrary fixed origin.
    fn clock(&self, comp: usize, t: f64) -> Result<f64>;
    /// `d_c(t)`, one-sided at discontinuities.
    fn clock_rate(&self, comp: usize, t: f64, side: Side) -> f64;
    /// `B_c(t)` relative to an arbitrary fixed origin.
    fn damping(&self, comp: usize, t: f64) -> Result<f64>;
    /// Discontinuities of `d_c` and `beta_c` in `[lo, hi]`.
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64>;
    /// Interval on which the clocks can be queried.
    fn window(&self) -> (f64, f64);
    fn weights(&self, alpha: f64) -> Result<AlphaWeights>;

    fn dim(&self) -> usize {
        self.components() * self.modes()
    }

    /// Dichotomy exponent: the smallest `|r| inf d`, estimated from the clocks on the window.
    fn decay_rate(&self) -> f64 {
        let (lo, hi) = self.window();
        let mut best = f64::INFINITY;
        for c in 0..self.components() {
            let n = 400;
            let mut inf_d = f64::INFINITY;
            for i in 0..=n {
                let t = lo + (hi - lo) * i as f64 / n as f64;
                inf_d = inf_d.min(self.clock_rate(c, t, Side::Right));
            }
            for k in 0..self.modes() {
                best = best.min(self.rate(c, k).abs() * inf_d);
            }
        }
        best
    }

    /// Multiplier of mode `(comp, k)` from `s` to `t`, in either time direction.
    fn multiplier(&self, comp: usize, k: usize, t: f64, s: f64) -> Result<f64> {
        let dc = self.clock(comp, t)? - self.clock(comp, s)?;
        let db = self.damping(comp, t)? - self.damping(comp, s)?;
        Ok((-self.rate(comp, k) * dc - db).exp())
    }
}

/// Constant-coefficient family `x' = -diag(r) x` with a single component.
#[derive(Clone, Debug)]
pub struct DiagonalFamily {
    rates: Vec<f64>,
    window: (f64, f64),
}

impl DiagonalFamily {
    pub fn new(rates: Vec<f64>, window: (f64, f64)) -> Result<Self> {
        if rates.is_empty() || rates.iter().any(|r| *r == 0.0 || !r.is_finite()) {
            return Err(Error::invalid("diagonal family needs nonzero finite rates"));
        }
        Ok(DiagonalFamily { rates, window })
    }
}

impl ModalFamily for DiagonalFamily {
    fn components(&self) -> usize {
        1
    }
    fn modes(&self) -> usize {
        self.rates.len()
    }
    fn rate(&self, _comp: usize, k: usize) -> f64 {
        self.rates[k]
    }
    fn clock(&self, _comp: usize, t: f64) -> Result<f64> {
        Ok(t)
    }
    fn clock_rate(&self, _comp: usize, _t: f64, _side: Side) -> f64 {
        1.0
    }
    fn damping(&self, _comp: usize, _t: f64) -> Result<f64> {
        Ok(0.0)
    }
    fn breakpoints(&self, _lo: f64, _hi: f64) -> Vec<f64> {
        Vec::new()
    }
    fn window(&self) -> (f64, f64) {
        self.window
    }
    fn weights(&self, _alpha: f64) -> Result<AlphaWeights> {
        Ok(AlphaWeights::from_weights(vec![1.0; self.rates.len()], 1))
    }
    fn decay_rate(&self) -> f64 {
        self.rates.iter().map(|r| r.abs()).fold(f64::INFINITY, f64::min)
    }
}
