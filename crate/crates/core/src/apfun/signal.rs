use std::io::{Read, Write};

use super::coefficient::{Coefficient, Side};
use crate::error::{Error, Result};
use crate::io::fmt_f64;

/// A declared discontinuity of a sampled signal with both one-sided values.
#[derive(Clone, Debug, PartialEq)]
pub struct Jump {
    pub t: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl Jump {
    /// Euclidean size of the jump.
    pub fn size(&self) -> f64 {
        norm(&self.left.iter().zip(&self.right).map(|(a, b)| b - a).collect::<Vec<_>>())
    }
}

/// Uniformly sampled vector-valued function of time.
///
/// Between samples the signal is linear, except across declared jumps,
/// where it is linear on each side with the recorded one-sided values.
#[derive(Clone, Debug)]
pub struct Signal {
    t0: f64,
    dt: f64,
    dim: usize,
    data: Vec<f64>,
    jumps: Vec<Jump>,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Signal {
    /// Build from a flat row-major sample buffer.
    pub fn new(t0: f64, dt: f64, dim: usize, data: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("sample step must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("window start must be finite"));
        }
        if dim == 0 {
            return Err(Error::invalid("signal dimension must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::invalid("signal needs at least one sample"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: data.len() % dim });
        }
        Ok(Signal { t0, dt, dim, data, jumps: Vec::new() })
    }

    /// Build from one vector per sample.
    pub fn from_rows(t0: f64, dt: f64, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Signal::new(t0, dt, dim, data)
    }

    /// Sample `f` at `n` uniform points starting at `t0`.
    pub fn from_fn(t0: f64, dt: f64, n: usize, dim: usize, f: impl Fn(f64, &mut [f64])) -> Result<Self> {
        let mut data = vec![0.0; n * dim];
        for i in 0..n {
            f(t0 + i as f64 * dt, &mut data[i * dim..(i + 1) * dim]);
        }
        Signal::new(t0, dt, dim, data)
    }

    /// Sample a list of coefficients jointly on `[t0, t1]`, carrying their jumps.
    pub fn from_coefficients(coeffs: &[Coefficient], t0: f64, t1: f64, dt: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("need at least one coefficient"));
        }
        if !(t1 >= t0) {
            return Err(Error::invalid(format!("empty window [{t0}, {t1}]")));
        }
        let n = ((t1 - t0) / dt + 1e-9).floor() as usize + 1;
        let dim = coeffs.len();
        let sig = Signal::from_fn(t0, dt, n, dim, |t, out| {
            for (o, c) in out.iter_mut().zip(coeffs) {
                *o = c.eval(t);
            }
        })?;
        let end = sig.t_end();
        let mut times: Vec<f64> = coeffs.iter().flat_map(|c| c.discontinuities(t0, end)).collect();
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
        let jumps = times
            .into_iter()
            .map(|t| Jump {
                t,
                left: coeffs.iter().map(|c| c.eval_side(t, Side::Left)).collect(),
                right: coeffs.iter().map(|c| c.eval_side(t, Side::Right)).collect(),
            })
            .filter(|j| j.left != j.right)
            .collect();
        sig.with_jumps(jumps)
    }

    /// Attach declared jumps (sorted internally). Jumps outside the window are dropped.
    pub fn with_jumps(mut self, mut jumps: Vec<Jump>) -> Result<Self> {
        for j in &jumps {
            if j.left.len() != self.dim || j.right.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: j.left.len().min(j.right.len()) });
            }
        }
        let (lo, hi) = (self.t0 - self.snap(), self.t_end() + self.snap());
        jumps.retain(|j| j.t >= lo && j.t <= hi);
        jumps.sort_by(|a, b| a.t.total_cmp(&b.t));
        self.jumps = jumps;
        Ok(self)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }
    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }
    /// Window length `t_end - t0`.
    pub fn span(&self) -> f64 {
        self.t_end() - self.t0
    }

    /// Tolerance under which two times are treated as equal.
    pub(crate) fn snap(&self) -> f64 {
        1e-9 * self.dt
    }

    /// Same samples relabelled so that the result at `t` equals `self` at `t + tau`.
    pub fn shifted(&self, tau: f64) -> Signal {
        let mut s = self.clone();
        s.t0 -= tau;
        for j in &mut s.jumps {
            j.t -= tau;
        }
        s
    }

    fn check_range(&self, t: f64) -> Result<()> {
        let snap = self.snap();
        if t < self.t0 - snap || t > self.t_end() + snap || !t.is_finite() {
            return Err(Error::OutOfRange { t, lo: self.t0, hi: self.t_end() });
        }
        Ok(())
    }

    /// Index range of declared jumps with time in `[lo, hi]`.
    pub(crate) fn jumps_in(&self, lo: f64, hi: f64) -> &[Jump] {
        let a = self.jumps.partition_point(|j| j.t < lo);
        let b = self.jumps.partition_point(|j| j.t <= hi);
        &self.jumps[a..b.max(a)]
    }

    /// Right-continuous evaluation.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_side(t, Side::Right, &mut out)?;
        Ok(out)
    }

    /// One-sided evaluation into `out`.
    pub fn eval_side(&self, t: f64, side: Side, out: &mut [f64]) -> Result<()> {
        self.check_range(t)?;
        let n = self.len();
        let snap = self.snap();
        if n == 1 {
            out.copy_from_slice(self.sample(0));
            return Ok(());
        }
        let pos = ((t - self.t0) / self.dt).floor();
        let i = (pos.max(0.0) as usize).min(n - 2);
        let a = self.time(i);
        let b = self.time(i + 1);
        let inside = self.jumps_in(a - snap, b + snap);
        if inside.is_empty() {
            let w = ((t - a) / self.dt).clamp(0.0, 1.0);
            let (xa, xb) = (self.sample(i), self.sample(i + 1));
            for k in 0..self.dim {
                out[k] = xa[k] + w * (xb[k] - xa[k]);
            }
            return Ok(());
        }
        // jump-aware path: breakpoints (x, left value, right value)
        let mut pts: Vec<(f64, &[f64], &[f64])> = Vec::with_capacity(inside.len() + 2);
        let at_a = inside.first().filter(|j| (j.t - a).abs() <= snap);
        let at_b = inside.last().filter(|j| (j.t - b).abs() <= snap);
        match at_a {
            Some(j) => pts.push((a, &j.left, &j.right)),
            None => pts.push((a, self.sample(i), self.sample(i))),
        }
        for j in inside {
            if (j.t - a).abs() > snap && (j.t - b).abs() > snap {
                pts.push((j.t, &j.left, &j.right));
            }
        }
        match at_b {
            Some(j) => pts.push((b, &j.left, &j.right)),
            None => pts.push((b, self.sample(i + 1), self.sample(i + 1))),
        }
        for p in &pts {
            if (t - p.0).abs() <= snap {
                out.copy_from_slice(if side == Side::Left { p.1 } else { p.2 });
                return Ok(());
            }
        }
        let seg = pts.windows(2).find(|w| t > w[0].0 && t < w[1].0);
        let w = match seg {
            Some(w) => w,
            // t before a or after b by less than snap: clamp to the ends
            None if t < a => {
                out.copy_from_slice(pts[0].2);
                return Ok(());
            }
            None => {
                out.copy_from_slice(pts[pts.len() - 1].1);
                return Ok(());
            }
        };
        let (x0, _, v0) = w[0];
        let (x1, v1, _) = w[1];
        let lam = (t - x0) / (x1 - x0);
        for k in 0..self.dim {
            out[k] = v0[k] + lam * (v1[k] - v0[k]);
        }
        Ok(())
    }

    /// Restriction `s -> f(t + s)` for `s` in `[0, 1]`, sampled at `k` points.
    pub fn bochner_transform(&self, t: f64, k: usize) -> Result<Signal> {
        if k < 2 {
            return Err(Error::invalid("Bochner slice needs at least two samples"));
        }
        self.check_range(t)?;
        self.check_range(t + 1.0)?;
        let ds = 1.0 / (k - 1) as f64;
        let mut data = vec![0.0; k * self.dim];
        for i in 0..k {
            let s = if i + 1 == k { 1.0 } else { i as f64 * ds };
            let side = if i + 1 == k { Side::Left } else { Side::Right };
            self.eval_side(t + s, side, &mut data[i * self.dim..(i + 1) * self.dim])?;
        }
        let jumps = self.jumps_in(t, t + 1.0).iter().map(|j| Jump { t: j.t - t, ..j.clone() }).collect();
        Signal::new(0.0, ds, self.dim, data)?.with_jumps(jumps)
    }

    /// `(integral over the full window of |f|^p)^(1/p)` by jump-aware trapezoid.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::invalid(format!("p must be >= 1, got {p}")));
        }
        let nodes = super::norms::norm_nodes(self, p);
        let mut s = 0.0;
        for w in nodes.windows(2) {
            s += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
        }
        Ok(s.max(0.0).powf(1.0 / p))
    }

    /// Largest sample norm.
    pub fn sup_norm(&self) -> f64 {
        let mut m = (0..self.len()).map(|i| norm(self.sample(i))).fold(0.0, f64::max);
        for j in &self.jumps {
            m = m.max(norm(&j.left)).max(norm(&j.right));
        }
        m
    }

    /// Read a signal from CSV with header `t,x1,...,xm` and uniform time step.
    pub fn read_csv(reader: impl Read) -> Result<Signal> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "t" {
            return Err(Error::invalid("signal CSV header must be t,x1,...,xm"));
        }
        let dim = headers.len() - 1;
        let mut times = Vec::new();
        let mut data = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != dim + 1 {
                return Err(Error::invalid(format!(
                    "row {}: expected {} columns, got {}",
                    row + 1,
                    dim + 1,
                    rec.len()
                )));
            }
            let mut vals = rec.iter().map(|s| {
                s.parse::<f64>().map_err(|_| Error::invalid(format!("row {}: cannot parse number '{s}'", row + 1)))
            });
            times.push(vals.next().unwrap()?);
            for v in vals {
                data.push(v?);
            }
        }
        if times.is_empty() {
            return Err(Error::invalid("signal CSV has no samples"));
        }
        let dt = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
        if !(dt > 0.0) {
            return Err(Error::invalid("signal CSV times must be increasing"));
        }
        for (i, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
                return Err(Error::invalid(format!("signal CSV row {}: non-uniform time step", i + 2)));
            }
        }
        Signal::new(times[0], dt, dim, data)
    }

    /// Write as CSV with header `t,x1,...,xm`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let mut line = String::from("t");
        for k in 1..=self.dim {
            line.push_str(&format!(",x{k}"));
        }
        writeln!(w, "{line}")?;
        for i in 0..self.len() {
            line.clear();
            line.push_str(&fmt_f64(self.time(i)));
            for v in self.sample(i) {
                line.push(',');
                line.push_str(&fmt_f64(*v));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}
