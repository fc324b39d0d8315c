use crate::apfun::Side;
use crate::error::{Error, Result};

/// Time nodes of a solve, split into smooth segments at discontinuities.
///
/// A uniform grid of step `dt` covers `[t0 - pad, t1 + pad]`; each break
/// inside that span ends one segment and starts the next, so the break time
/// appears twice (left copy, then right copy). Consecutive points of one
/// segment form a cell.
#[derive(Clone, Debug)]
pub struct TimeMesh {
    times: Vec<f64>,
    sides: Vec<Side>,
    /// Inclusive index ranges of the segments.
    segments: Vec<(usize, usize)>,
    /// Indices of the output grid `t0 + i dt`.
    output: Vec<usize>,
    t0: f64,
    dt: f64,
}

impl TimeMesh {
    pub fn new(t0: f64, t1: f64, dt: f64, pad: f64, breaks: &[f64]) -> Result<Self> {
        if !(dt > 0.0 && t1 > t0 && pad >= 0.0) || !(t0.is_finite() && t1.is_finite()) {
            return Err(Error::invalid(format!("bad time grid t0 = {t0}, t1 = {t1}, dt = {dt}")));
        }
        let n_pad = (pad / dt - 1e-9).ceil().max(0.0) as usize;
        let n_out = ((t1 - t0) / dt + 1e-9).floor() as usize;
        let start = t0 - n_pad as f64 * dt;
        let total = n_pad + n_out + n_pad;
        let grid: Vec<f64> = (0..=total).map(|i| start + i as f64 * dt).collect();
        let end = grid[total];
        let tol = 1e-9 * dt;

        let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b > start + tol && b < end - tol).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= tol);

        let mut times = Vec::with_capacity(grid.len() + 2 * cuts.len());
        let mut sides = Vec::with_capacity(times.capacity());
        let mut segments = Vec::with_capacity(cuts.len() + 1);
        let mut output = Vec::with_capacity(n_out + 1);
        let mut seg_start = 0;
        let mut gi = 0;
        for cut in cuts.iter().copied().chain(std::iter::once(f64::INFINITY)) {
            // grid nodes strictly before the cut, with a node snapped onto the cut if close
            while gi <= total && grid[gi] < cut - tol {
                if gi >= n_pad && gi <= n_pad + n_out {
                    output.push(times.len());
                }
                times.push(grid[gi]);
                sides.push(Side::Right);
                gi += 1;
            }
            if cut.is_finite() {
                let snapped = gi <= total && (grid[gi] - cut).abs() <= tol;
                let t = if snapped { grid[gi] } else { cut };
                times.push(t);
                sides.push(Side::Left);
                segments.push((seg_start, times.len() - 1));
                seg_start = times.len();
                if snapped {
                    if gi >= n_pad && gi <= n_pad + n_out {
                        output.push(times.len());
                    }
                    gi += 1;
                }
                times.push(t);
                sides.push(Side::Right);
            }
        }
        if let Some(s) = sides.last_mut() {
            *s = Side::Left;
        }
        segments.push((seg_start, times.len() - 1));
        Ok(TimeMesh { times, sides, segments, output, t0, dt })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn sides(&self) -> &[Side] {
        &self.sides
    }
    pub fn segments(&self) -> &[(usize, usize)] {
        &self.segments
    }
    pub fn output_indices(&self) -> &[usize] {
        &self.output
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn t0(&self) -> f64 {
        self.t0
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn start(&self) -> f64 {
        self.times[0]
    }
    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }
    /// First and last output time.
    pub fn output_span(&self) -> (f64, f64) {
        (self.times[self.output[0]], self.times[*self.output.last().unwrap()])
    }

    /// Segment containing `t`, preferring the later one at a break.
    pub fn segment_of(&self, t: f64) -> Option<usize> {
        if t < self.start() || t > self.end() {
            return None;
        }
        let i = self.segments.partition_point(|&(a, _)| self.times[a] <= t);
        Some(i.saturating_sub(1))
    }

    /// Stencil of at most `n` consecutive points of segment `seg` around the cell starting at `i`.
    pub(crate) fn stencil(&self, seg: usize, i: usize, n: usize) -> (usize, usize) {
        let (a, b) = self.segments[seg];
        let len = (b - a + 1).min(n);
        let first = i.saturating_sub((len - 1) / 2).clamp(a, b + 1 - len);
        (first, len)
    }
}
