use rayon::prelude::*;

use super::coefficient::Side;
use super::signal::{Jump, Signal};
use crate::error::{Error, Result};

/// Pointwise composition `t -> f(t, u(t))` on the grid of `u`.
///
/// `f(t, side, x, out)` evaluates the map with the one-sided time convention
/// `side`; `breaks` lists the times where `f` itself jumps in `t`. Jumps of `u`
/// and of `f` are both carried into the result.
pub fn compose<F>(f: F, in_dim: usize, out_dim: usize, breaks: &[f64], u: &Signal) -> Result<Signal>
where
    F: Fn(f64, Side, &[f64], &mut [f64]) + Sync,
{
    if u.dim() != in_dim {
        return Err(Error::DimensionMismatch { expected: in_dim, got: u.dim() });
    }
    let mut data = vec![0.0; u.len() * out_dim];
    data.par_chunks_mut(out_dim).enumerate().for_each(|(i, out)| {
        f(u.time(i), Side::Right, u.sample(i), out);
    });
    let mut times: Vec<f64> = u.jumps().iter().map(|j| j.t).collect();
    times.extend(breaks.iter().copied().filter(|&t| t >= u.t0() && t <= u.t_end()));
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= u.snap());
    let mut jumps = Vec::with_capacity(times.len());
    let mut x = vec![0.0; in_dim];
    for t in times {
        let mut left = vec![0.0; out_dim];
        let mut right = vec![0.0; out_dim];
        u.eval_side(t, Side::Left, &mut x)?;
        f(t, Side::Left, &x, &mut left);
        u.eval_side(t, Side::Right, &mut x)?;
        f(t, Side::Right, &x, &mut right);
        if left != right {
            jumps.push(Jump { t, left, right });
        }
    }
    Signal::new(u.t0(), u.dt(), out_dim, data)?.with_jumps(jumps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apfun::Coefficient;

    #[test]
    fn identity_map() {
        let u = Signal::from_fn(0.0, 0.1, 50, 2, |t, o| {
            o[0] = t.sin();
            o[1] = t.cos();
        })
        .unwrap();
        let v = compose(|_, _, x, o| o.copy_from_slice(x), 2, 2, &[], &u).unwrap();
        assert_eq!(v.data(), u.data());
    }

    #[test]
    fn constant_coefficient_times_one() {
        let a = Coefficient::constant(2.0);
        let u = Signal::from_fn(0.0, 0.1, 50, 1, |_, o| o[0] = 1.0).unwrap();
        let v = compose(|t, s, x, o| o[0] = a.eval_side(t, s) * x[0], 1, 1, &[], &u).unwrap();
        assert!(v.data().iter().all(|&y| y == 2.0));
    }

    #[test]
    fn coefficient_jumps_are_carried() {
        let a = Coefficient::PiecewiseA { a_tilde: 1.0 };
        let u = Signal::from_fn(-1.0, 0.1, 21, 1, |_, o| o[0] = 1.0).unwrap();
        let brk = a.discontinuities(-1.0, 1.0);
        let v = compose(|t, s, x, o| o[0] = a.eval_side(t, s) * x[0], 1, 1, &brk, &u).unwrap();
        assert_eq!(v.jumps().len(), 1);
        assert!((v.jumps()[0].size() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let u = Signal::from_fn(0.0, 0.1, 5, 1, |_, o| o[0] = 1.0).unwrap();
        assert!(matches!(compose(|_, _, _, _| {}, 2, 1, &[], &u), Err(Error::DimensionMismatch { .. })));
    }
}
