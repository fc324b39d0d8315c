use serde::{Deserialize, Serialize};

use crate::apfun::{Coefficient, Side};
use crate::error::{Error, Result};

/// Right-hand side `f(t, x)` of the modal system, on flat `[component][mode]` buffers.
pub trait Source: Sync {
    fn dim(&self) -> usize;
    /// Write `f(t, x)` into `out`; at a discontinuity `side` selects the one-sided value.
    fn eval(&self, t: f64, side: Side, x: &[f64], out: &mut [f64]) -> Result<()>;
    /// Times in `[lo, hi]` where `f` may jump.
    fn breakpoints(&self, _lo: f64, _hi: f64) -> Vec<f64> {
        Vec::new()
    }
}

/// The zero right-hand side.
#[derive(Clone, Copy, Debug)]
pub struct ZeroSource(pub usize);

impl Source for ZeroSource {
    fn dim(&self) -> usize {
        self.0
    }
    fn eval(&self, _t: f64, _side: Side, _x: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        Ok(())
    }
}

/// One forced mode: `coefficient(t)` added to mode `mode` (1-based) of `component` (0-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingTerm {
    pub component: usize,
    pub mode: usize,
    pub coefficient: Coefficient,
}

/// State-independent forcing `h(t) = sum coefficient_j(t) phi_{k_j}` per component.
#[derive(Clone, Debug)]
pub struct ModalForcing {
    components: usize,
    modes: usize,
    terms: Vec<ForcingTerm>,
}

impl ModalForcing {
    pub fn new(components: usize, modes: usize, terms: Vec<ForcingTerm>) -> Result<Self> {
        for t in &terms {
            if t.component >= components || t.mode == 0 || t.mode > modes {
                return Err(Error::invalid(format!(
                    "forcing term (component {}, mode {}) outside {components} components x {modes} modes",
                    t.component, t.mode
                )));
            }
        }
        Ok(ModalForcing { components, modes, terms })
    }

    pub fn terms(&self) -> &[ForcingTerm] {
        &self.terms
    }
}

impl Source for ModalForcing {
    fn dim(&self) -> usize {
        self.components * self.modes
    }
    fn eval(&self, t: f64, side: Side, _x: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        for term in &self.terms {
            out[term.component * self.modes + term.mode - 1] += term.coefficient.eval_side(t, side);
        }
        Ok(())
    }
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.terms.iter().flat_map(|t| t.coefficient.discontinuities(lo, hi)).collect()
    }
}

/// Sum of two right-hand sides of equal dimension.
pub struct Plus<A, B>(pub A, pub B);

impl<A: Source, B: Source> Source for Plus<A, B> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, t: f64, side: Side, x: &[f64], out: &mut [f64]) -> Result<()> {
        if self.1.dim() != self.0.dim() {
            return Err(Error::DimensionMismatch { expected: self.0.dim(), got: self.1.dim() });
        }
        self.0.eval(t, side, x, out)?;
        let mut tmp = vec![0.0; out.len()];
        self.1.eval(t, side, x, &mut tmp)?;
        for (o, v) in out.iter_mut().zip(&tmp) {
            *o += v;
        }
        Ok(())
    }
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut v = self.0.breakpoints(lo, hi);
        v.extend(self.1.breakpoints(lo, hi));
        v
    }
}

impl<S: Source + ?Sized> Source for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: f64, side: Side, x: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).eval(t, side, x, out)
    }
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        (**self).breakpoints(lo, hi)
    }
}

/// Modewise map `f(t, x)_i = amplitude * sin(x_i)`.
#[derive(Clone, Copy, Debug)]
pub struct ModalSine {
    pub dim: usize,
    pub amplitude: f64,
}

impl Source for ModalSine {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _t: f64, _side: Side, x: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, v) in out.iter_mut().zip(x) {
            *o = self.amplitude * v.sin();
        }
        Ok(())
    }
}

/// Closure-backed right-hand side.
pub struct FnSource<F> {
    pub dim: usize,
    pub f: F,
    pub breaks: Vec<f64>,
}

impl<F> Source for FnSource<F>
where
    F: Fn(f64, Side, &[f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, side: Side, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(t, side, x, out);
        Ok(())
    }
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.breaks.iter().copied().filter(|&b| b >= lo && b <= hi).collect()
    }
}
