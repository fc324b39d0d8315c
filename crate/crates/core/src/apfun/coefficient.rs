use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Which one-sided limit to take at a discontinuity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Relative tolerance under which a time is treated as sitting on a jump.
const SNAP: f64 = 1e-12;

/// Closed-form scalar coefficient of time.
///
/// Point evaluation is right-continuous; one-sided limits are available
/// through [`Coefficient::eval_side`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Coefficient {
    Constant {
        c: f64,
    },
    /// `amplitude * sin(omega * t + phase)`.
    Harmonic {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `d_tilde + d_hat * (cos t + cos(pi t))`.
    QuasiPeriodicCos {
        d_tilde: f64,
        d_hat: f64,
    },
    /// `a_tilde * (2 + cos t + cos(sqrt2 t))` for `t >= 0`,
    /// `a_tilde * (2 + sin t + sin(sqrt2 t))` for `t < 0`.
    PiecewiseA {
        a_tilde: f64,
    },
    /// `b_tilde * (1 + sin t)` on `[2k pi, (2k+1) pi)`,
    /// `b_tilde * (1 + cos t)` on `[(2k+1) pi, (2k+2) pi)`.
    PiecewiseB {
        b_tilde: f64,
    },
    /// `c_tilde * sin(1 / p(t))` with `p(t) = 2 + sin t + sin(sqrt2 t)`.
    SinRecip {
        c_tilde: f64,
    },
    /// `c_tilde * cos(1 / p(t))`.
    CosRecip {
        c_tilde: f64,
    },
    Sum {
        left: Box<Coefficient>,
        right: Box<Coefficient>,
    },
    Scale {
        k: f64,
        inner: Box<Coefficient>,
    },
}

/// The strictly positive quasi-periodic denominator `2 + sin t + sin(sqrt2 t)`.
pub fn recip_denominator(t: f64) -> f64 {
    2.0 + t.sin() + (SQRT_2 * t).sin()
}

fn near_integer(q: f64) -> Option<f64> {
    let r = q.round();
    if (q - r).abs() <= SNAP * r.abs().max(1.0) {
        Some(r)
    } else {
        None
    }
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Coefficient::Constant { c }
    }

    pub fn sum(left: Coefficient, right: Coefficient) -> Self {
        Coefficient::Sum { left: Box::new(left), right: Box::new(right) }
    }

    pub fn scale(k: f64, inner: Coefficient) -> Self {
        Coefficient::Scale { k, inner: Box::new(inner) }
    }

    /// Right-continuous point value.
    pub fn eval(&self, t: f64) -> f64 {
        self.eval_side(t, Side::Right)
    }

    /// One-sided limit at `t` (equal to `eval` wherever the coefficient is continuous).
    pub fn eval_side(&self, t: f64, side: Side) -> f64 {
        match self {
            Coefficient::Constant { c } => *c,
            Coefficient::Harmonic { amplitude, omega, phase } => amplitude * (omega * t + phase).sin(),
            Coefficient::QuasiPeriodicCos { d_tilde, d_hat } => d_tilde + d_hat * (t.cos() + (PI * t).cos()),
            Coefficient::PiecewiseA { a_tilde } => {
                let positive = if t.abs() <= SNAP { side == Side::Right } else { t > 0.0 };
                if positive {
                    a_tilde * (2.0 + t.cos() + (SQRT_2 * t).cos())
                } else {
                    a_tilde * (2.0 + t.sin() + (SQRT_2 * t).sin())
                }
            }
            Coefficient::PiecewiseB { b_tilde } => {
                let q = t / PI;
                let branch = match near_integer(q) {
                    Some(r) => match side {
                        Side::Right => r,
                        Side::Left => r - 1.0,
                    },
                    None => q.floor(),
                };
                if branch.rem_euclid(2.0) == 0.0 {
                    b_tilde * (1.0 + t.sin())
                } else {
                    b_tilde * (1.0 + t.cos())
                }
            }
            Coefficient::SinRecip { c_tilde } => c_tilde * (1.0 / recip_denominator(t)).sin(),
            Coefficient::CosRecip { c_tilde } => c_tilde * (1.0 / recip_denominator(t)).cos(),
            Coefficient::Sum { left, right } => left.eval_side(t, side) + right.eval_side(t, side),
            Coefficient::Scale { k, inner } => k * inner.eval_side(t, side),
        }
    }

    /// Evaluate on the smooth branch that is active at `anchor`, extended to `t`.
    ///
    /// Used to get one-sided values at the ends of a panel that does not
    /// straddle a jump: pass the panel midpoint as `anchor`.
    pub fn eval_branch(&self, t: f64, anchor: f64) -> f64 {
        if t < anchor {
            self.eval_side(t, Side::Right)
        } else if t > anchor {
            self.eval_side(t, Side::Left)
        } else {
            self.eval(t)
        }
    }

    /// Jump locations in the closed interval `[lo, hi]`, sorted and deduplicated.
    pub fn discontinuities(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_discontinuities(lo, hi, &mut out);
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= SNAP * a.abs().max(1.0));
        out
    }

    fn collect_discontinuities(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        if !(lo <= hi) {
            return;
        }
        match self {
            Coefficient::PiecewiseA { a_tilde } => {
                if *a_tilde != 0.0 && lo <= 0.0 && 0.0 <= hi {
                    out.push(0.0);
                }
            }
            Coefficient::PiecewiseB { b_tilde } => {
                if *b_tilde == 0.0 {
                    return;
                }
                let k0 = (lo / PI).ceil() as i64;
                let k1 = (hi / PI).floor() as i64;
                for k in k0..=k1 {
                    out.push(k as f64 * PI);
                }
            }
            Coefficient::Sum { left, right } => {
                left.collect_discontinuities(lo, hi, out);
                right.collect_discontinuities(lo, hi, out);
            }
            Coefficient::Scale { k, inner } if *k != 0.0 => {
                inner.collect_discontinuities(lo, hi, out);
            }
            _ => {}
        }
    }

    /// A guaranteed lower bound of the coefficient over the whole real line.
    pub fn inf_bound(&self) -> f64 {
        self.bounds().0
    }

    /// A guaranteed upper bound of the coefficient over the whole real line.
    pub fn sup_bound(&self) -> f64 {
        self.bounds().1
    }

    fn bounds(&self) -> (f64, f64) {
        let span = |lo: f64, hi: f64, s: f64| if s >= 0.0 { (s * lo, s * hi) } else { (s * hi, s * lo) };
        match self {
            Coefficient::Constant { c } => (*c, *c),
            Coefficient::Harmonic { amplitude, .. } => (-amplitude.abs(), amplitude.abs()),
            Coefficient::QuasiPeriodicCos { d_tilde, d_hat } => {
                (d_tilde - 2.0 * d_hat.abs(), d_tilde + 2.0 * d_hat.abs())
            }
            Coefficient::PiecewiseA { a_tilde } => span(0.0, 4.0, *a_tilde),
            Coefficient::PiecewiseB { b_tilde } => span(0.0, 2.0, *b_tilde),
            Coefficient::SinRecip { c_tilde } | Coefficient::CosRecip { c_tilde } => (-c_tilde.abs(), c_tilde.abs()),
            Coefficient::Sum { left, right } => {
                let (a, b) = left.bounds();
                let (c, d) = right.bounds();
                (a + c, b + d)
            }
            Coefficient::Scale { k, inner } => {
                let (a, b) = inner.bounds();
                span(a, b, *k)
            }
        }
    }

    /// Supremum of the absolute value (a bound, tight for the named families).
    pub fn abs_bound(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.abs().max(hi.abs())
    }
}
