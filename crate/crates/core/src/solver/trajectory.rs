use std::io::Write;

use super::mesh::TimeMesh;
use crate::apfun::Signal;
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::spectral::AlphaWeights;

/// Modal coefficients of a solution at every point of its mesh.
#[derive(Clone, Debug)]
pub struct Trajectory {
    mesh: TimeMesh,
    components: usize,
    modes: usize,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn new(mesh: TimeMesh, components: usize, modes: usize, values: Vec<f64>) -> Result<Self> {
        let dim = components * modes;
        if values.len() != dim * mesh.len() {
            return Err(Error::DimensionMismatch { expected: dim * mesh.len(), got: values.len() });
        }
        Ok(Trajectory { mesh, components, modes, values })
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }
    pub fn components(&self) -> usize {
        self.components
    }
    pub fn modes(&self) -> usize {
        self.modes
    }
    pub fn dim(&self) -> usize {
        self.components * self.modes
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// State at mesh point `p`.
    pub fn point(&self, p: usize) -> &[f64] {
        let d = self.dim();
        &self.values[p * d..(p + 1) * d]
    }

    /// State at output node `i`, i.e. at time `t0 + i dt`.
    pub fn output(&self, i: usize) -> &[f64] {
        self.point(self.mesh.output_indices()[i])
    }

    pub fn output_len(&self) -> usize {
        self.mesh.output_indices().len()
    }

    pub fn output_time(&self, i: usize) -> f64 {
        self.mesh.times()[self.mesh.output_indices()[i]]
    }

    /// State at an arbitrary time by cubic Lagrange interpolation inside its segment.
    pub fn sample(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let seg = self.mesh.segment_of(t).ok_or(Error::OutOfRange { t, lo: self.mesh.start(), hi: self.mesh.end() })?;
        let (a, b) = self.mesh.segments()[seg];
        let times = self.mesh.times();
        let i = (a + times[a..=b].partition_point(|&x| x <= t)).saturating_sub(1).clamp(a, b - 1);
        let (first, n) = self.mesh.stencil(seg, i, 4);
        out.fill(0.0);
        for j in 0..n {
            let mut w = 1.0;
            for l in 0..n {
                if l != j {
                    w *= (t - times[first + l]) / (times[first + j] - times[first + l]);
                }
            }
            for (o, v) in out.iter_mut().zip(self.point(first + j)) {
                *o += w * v;
            }
        }
        Ok(())
    }

    /// Largest weighted norm over the output grid.
    pub fn sup_norm(&self, weights: &AlphaWeights) -> f64 {
        (0..self.output_len()).map(|i| weights.norm(self.output(i))).fold(0.0, f64::max)
    }

    /// Largest weighted norm of the difference to `other` over the output grid.
    pub fn sup_distance(&self, other: &Trajectory, weights: &AlphaWeights) -> Result<f64> {
        if other.values.len() != self.values.len() {
            return Err(Error::DimensionMismatch { expected: self.values.len(), got: other.values.len() });
        }
        Ok((0..self.output_len()).map(|i| weights.norm_diff(self.output(i), other.output(i))).fold(0.0, f64::max))
    }

    /// Output grid as a [`Signal`] with one channel per mode and component.
    pub fn to_signal(&self) -> Result<Signal> {
        let mut data = Vec::with_capacity(self.output_len() * self.dim());
        for i in 0..self.output_len() {
            data.extend_from_slice(self.output(i));
        }
        Signal::new(self.mesh.t0(), self.mesh.dt(), self.dim(), data)
    }

    /// CSV rows `t,mode,component,value` over the output grid, modes 1-based, components `u`, `v`, ...
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        const NAMES: [&str; 4] = ["u", "v", "w", "z"];
        writeln!(w, "t,mode,component,value")?;
        for i in 0..self.output_len() {
            let t = fmt_f64(self.output_time(i));
            let x = self.output(i);
            for c in 0..self.components {
                let name = NAMES.get(c).map(|s| s.to_string()).unwrap_or_else(|| format!("c{}", c + 1));
                for k in 0..self.modes {
                    writeln!(w, "{t},{},{name},{}", k + 1, fmt_f64(x[c * self.modes + k]))?;
                }
            }
        }
        Ok(())
    }
}
