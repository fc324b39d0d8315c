use super::coefficient::Side;
use super::signal::{norm, Signal};
use crate::error::{Error, Result};

/// Norm used to measure translation distances.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    Bohr,
    Stepanov { p: f64 },
}

impl NormKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            NormKind::Stepanov { p } if !(*p >= 1.0 && p.is_finite()) => {
                Err(Error::invalid(format!("Stepanov exponent must be a finite p >= 1, got {p}")))
            }
            _ => Ok(()),
        }
    }
}

/// Nodes `(x, |f(x)|^p)` over the whole window, doubled at declared jumps.
pub(crate) fn norm_nodes(f: &Signal, p: f64) -> Vec<(f64, f64)> {
    let snap = f.snap();
    let mut out = Vec::with_capacity(f.len() + 2 * f.jumps().len());
    let mut jumps = f.jumps().iter().peekable();
    for i in 0..f.len() {
        let x = f.time(i);
        while let Some(j) = jumps.next_if(|j| j.t < x - snap) {
            out.push((j.t, norm(&j.left).powf(p)));
            out.push((j.t, norm(&j.right).powf(p)));
        }
        if let Some(j) = jumps.next_if(|j| (j.t - x).abs() <= snap) {
            if i > 0 {
                out.push((x, norm(&j.left).powf(p)));
            }
            if i + 1 < f.len() {
                out.push((x, norm(&j.right).powf(p)));
            }
            continue;
        }
        out.push((x, norm(f.sample(i)).powf(p)));
    }
    out
}

/// Distance nodes `(x, |f(x + tau) - f(x)|)` over the admissible window `[lo, hi]`.
struct ShiftNodes {
    nodes: Vec<(f64, f64)>,
    lo: f64,
    hi: f64,
}

/// Admissible window of a shift: `x` and `x + tau` both inside the signal.
fn admissible(f: &Signal, tau: f64) -> Result<(f64, f64)> {
    let (t0, end) = (f.t0(), f.t_end());
    let lo = t0.max(t0 - tau);
    let hi = end.min(end - tau);
    if !(hi >= lo - f.snap()) || !tau.is_finite() {
        return Err(Error::NoAdmissibleShift { tau, lo: t0, hi: end });
    }
    Ok((lo, hi))
}

fn shift_nodes(f: &Signal, tau: f64) -> Result<ShiftNodes> {
    let (lo, hi) = admissible(f, tau)?;
    shift_nodes_in(f, tau, lo, hi)
}

/// Distance nodes restricted to `[lo, hi]`, a subinterval of the admissible window.
fn shift_nodes_in(f: &Signal, tau: f64, lo: f64, hi: f64) -> Result<ShiftNodes> {
    let snap = f.snap();
    let t0 = f.t0();
    let dim = f.dim();
    let dt = f.dt();
    let q = tau / dt;
    let aligned = (q - q.round()).abs() <= 1e-9;
    let m = q.round() as i64;
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    let diff = |x: f64, side: Side, a: &mut [f64], b: &mut [f64]| -> Result<f64> {
        f.eval_side(x + tau, side, a)?;
        f.eval_side(x, side, b)?;
        let mut s = 0.0;
        for k in 0..dim {
            let d = a[k] - b[k];
            s += d * d;
        }
        Ok(s.sqrt())
    };

    // extra breakpoints: jumps of f(x) and of f(x + tau) strictly inside (lo, hi)
    let mut extra: Vec<f64> = f
        .jumps_in(lo + snap, hi - snap)
        .iter()
        .map(|j| j.t)
        .chain(f.jumps_in(lo + tau + snap, hi + tau - snap).iter().map(|j| j.t - tau))
        .collect();
    extra.sort_by(f64::total_cmp);

    let i_first = ((lo - t0) / dt - 1e-9).ceil().max(0.0) as usize;
    let i_last = (((hi - t0) / dt + 1e-9).floor() as usize).min(f.len() - 1);

    let mut nodes = Vec::with_capacity(i_last.saturating_sub(i_first) + 2 * extra.len() + 2);
    nodes.push((lo, diff(lo, Side::Right, &mut a, &mut b)?));
    let mut ex = extra.iter().copied().peekable();
    let mut i = i_first;
    loop {
        let x_grid = if i <= i_last { Some(f.time(i)) } else { None };
        let x_next_extra = ex.peek().copied();
        let take_extra = match (x_grid, x_next_extra) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(g), Some(e)) => e <= g + snap,
        };
        if take_extra {
            let e = ex.next().unwrap();
            if e > lo + snap && e < hi - snap {
                let vl = diff(e, Side::Left, &mut a, &mut b)?;
                let vr = diff(e, Side::Right, &mut a, &mut b)?;
                nodes.push((e, vl));
                nodes.push((e, vr));
            }
            // a grid point sitting on this breakpoint is represented by the pair
            if let Some(g) = x_grid {
                if (g - e).abs() <= snap {
                    i += 1;
                }
            }
            continue;
        }
        let Some(x) = x_grid else { break };
        if x > lo + snap && x < hi - snap {
            let v = if aligned {
                let j = i as i64 + m;
                let (sa, sb) = (f.sample(j as usize), f.sample(i));
                let mut s = 0.0;
                for k in 0..dim {
                    let d = sa[k] - sb[k];
                    s += d * d;
                }
                s.sqrt()
            } else {
                diff(x, Side::Right, &mut a, &mut b)?
            };
            nodes.push((x, v));
        }
        i += 1;
    }
    if hi > lo + snap {
        nodes.push((hi, diff(hi, Side::Left, &mut a, &mut b)?));
    }
    Ok(ShiftNodes { nodes, lo, hi })
}

/// Maximum over unit windows `[t, t+1]` (t on the grid, or `lo`) of the trapezoid
/// integral of `y^p` through the nodes.
fn max_window_integral(f: &Signal, nodes: &[(f64, f64)], lo: f64, hi: f64, p: f64) -> Result<f64> {
    let snap = f.snap();
    if hi - lo < 1.0 - snap {
        return Err(Error::WindowTooShort { len: hi - lo });
    }
    let ys: Vec<f64> = nodes.iter().map(|&(_, y)| if p == 1.0 { y } else { y.powf(p) }).collect();
    let mut cum = Vec::with_capacity(nodes.len());
    cum.push(0.0);
    for k in 1..nodes.len() {
        let h = nodes[k].0 - nodes[k - 1].0;
        cum.push(cum[k - 1] + 0.5 * h * (ys[k - 1] + ys[k]));
    }
    // integral from nodes[0].0 up to x, with `k` the last node index with x_k <= x
    let integral_to = |x: f64, k: usize| -> f64 {
        if k + 1 >= nodes.len() {
            return cum[nodes.len() - 1];
        }
        let (x0, x1) = (nodes[k].0, nodes[k + 1].0);
        let w = x - x0;
        if w <= 0.0 || x1 <= x0 {
            return cum[k];
        }
        let y = ys[k] + (ys[k + 1] - ys[k]) * (w / (x1 - x0));
        cum[k] + 0.5 * w * (ys[k] + y)
    };
    let t0 = f.t0();
    let dt = f.dt();
    let mut starts = Vec::new();
    let i_first = ((lo - t0) / dt - 1e-9).ceil().max(0.0) as usize;
    if (f.time(i_first) - lo).abs() > snap {
        starts.push(lo);
    }
    let mut i = i_first;
    while i < f.len() {
        let x = f.time(i);
        if x + 1.0 > hi + snap {
            break;
        }
        starts.push(x);
        i += 1;
    }
    if starts.is_empty() {
        starts.push(lo);
    }
    let mut best: f64 = 0.0;
    let mut ka = 0usize;
    let mut kb = 0usize;
    for &t in &starts {
        let u = (t + 1.0).min(hi);
        while ka + 1 < nodes.len() && nodes[ka + 1].0 <= t {
            ka += 1;
        }
        while kb + 1 < nodes.len() && nodes[kb + 1].0 <= u {
            kb += 1;
        }
        let v = integral_to(u, kb) - integral_to(t, ka);
        best = best.max(v);
    }
    Ok(best.max(0.0))
}

/// Stepanov norm: largest unit-window `L^p` norm.
pub fn sp_norm(f: &Signal, p: f64) -> Result<f64> {
    NormKind::Stepanov { p }.validate()?;
    if f.span() < 1.0 - f.snap() {
        return Err(Error::WindowTooShort { len: f.span() });
    }
    let nodes = norm_nodes(f, 1.0);
    let v = max_window_integral(f, &nodes, f.t0(), f.t_end(), p)?;
    Ok(v.powf(1.0 / p))
}

/// Stepanov distance between `f` and its translate by `tau`.
pub fn sp_distance(f: &Signal, tau: f64, p: f64) -> Result<f64> {
    NormKind::Stepanov { p }.validate()?;
    let sn = shift_nodes(f, tau)?;
    if sn.hi - sn.lo < 1.0 - f.snap() {
        return Err(Error::NoAdmissibleShift { tau, lo: f.t0(), hi: f.t_end() });
    }
    let v = max_window_integral(f, &sn.nodes, sn.lo, sn.hi, p)?;
    Ok(v.powf(1.0 / p))
}

/// Sup distance between `f` and its translate by `tau` over the sample grid and jump sides.
pub fn bohr_distance(f: &Signal, tau: f64) -> Result<f64> {
    let sn = shift_nodes(f, tau)?;
    Ok(sn.nodes.iter().map(|&(_, y)| y).fold(0.0, f64::max))
}

/// Length of the pieces [`distance_capped`] evaluates one after another.
const CHUNK: f64 = 16.0;

/// Distance in the requested norm, abandoned as soon as a piece of the window
/// exceeds `cap`. Returns the distance and `true`, or a lower bound above `cap`
/// and `false`. Window starts match those of [`distance`], so a complete result
/// agrees with it up to rounding.
pub(crate) fn distance_capped(f: &Signal, tau: f64, kind: NormKind, cap: f64) -> Result<(f64, bool)> {
    let (lo, hi) = admissible(f, tau)?;
    if hi - lo <= 2.0 * CHUNK {
        let d = distance(f, tau, kind)?;
        return Ok((d, d <= cap));
    }
    kind.validate()?;
    let (t0, dt) = (f.t0(), f.dt());
    // piece boundaries on the sample grid so that no extra window start is introduced
    let mut bounds = vec![lo];
    let mut next = lo + CHUNK;
    while next < hi - CHUNK {
        let g = t0 + ((next - t0) / dt).ceil() * dt;
        bounds.push(g);
        next = g + CHUNK;
    }
    bounds.push(hi);
    let mut worst: f64 = 0.0;
    for w in bounds.windows(2) {
        let d = match kind {
            NormKind::Bohr => {
                let sn = shift_nodes_in(f, tau, w[0], w[1])?;
                sn.nodes.iter().map(|&(_, y)| y).fold(0.0, f64::max)
            }
            NormKind::Stepanov { p } => {
                let end = (w[1] + 1.0).min(hi);
                let sn = shift_nodes_in(f, tau, w[0], end)?;
                max_window_integral(f, &sn.nodes, sn.lo, sn.hi, p)?.powf(1.0 / p)
            }
        };
        worst = worst.max(d);
        if worst > cap {
            return Ok((worst, false));
        }
    }
    Ok((worst, true))
}

/// Distance in the requested norm.
pub fn distance(f: &Signal, tau: f64, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Bohr => bohr_distance(f, tau),
        NormKind::Stepanov { p } => sp_distance(f, tau, p),
    }
}
