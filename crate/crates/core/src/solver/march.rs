//! Exponential quadrature of the Green-function integral along a [`TimeMesh`].
//!
//! On a cell `[a, b]` the integral `int_a^b e^{-r (D(b) - D(s)) - (B(b) - B(s))} f(s) ds`
//! is rewritten in the clock variable `w = D(s) - D(a)`, where the kernel is a
//! pure exponential. The rest of the integrand, `f e^{-(B(b) - B(s))} / d(s)`, is
//! interpolated by a cubic through the four nearest mesh points of the same
//! segment, and the resulting polynomial-times-exponential integrals are the
//! `phi` functions. The scheme is fourth order in `dt` for every rate, so stiff
//! high modes cost nothing extra.

use rayon::prelude::*;

use super::family::ModalFamily;
use super::mesh::TimeMesh;
use crate::error::{Error, Result};
use crate::special::phi1to4;

const STENCIL: usize = 4;
const FACT: [f64; 4] = [1.0, 1.0, 2.0, 6.0];

#[derive(Clone, Debug)]
struct Cell {
    /// Start point of the cell; it ends at `start + 1`.
    start: usize,
    first: usize,
    n: usize,
    delta: f64,
    db: f64,
    /// `coef[m][j]`: monomial coefficient `m` contributed by stencil value `j`, times the node factor.
    fwd: [[f64; STENCIL]; STENCIL],
    bwd: [[f64; STENCIL]; STENCIL],
    /// Point of the previous segment that shares the start time.
    carry_in: Option<usize>,
    /// Point of the next segment that shares the end time.
    carry_out: Option<usize>,
}

/// Precomputed cell geometry of one family on one mesh.
#[derive(Clone, Debug)]
pub struct Plan {
    cells: Vec<Vec<Cell>>,
    points: usize,
}

/// Inverse of the `n x n` Vandermonde matrix `V[j][m] = x_j^m`, by Gauss-Jordan elimination.
fn vandermonde_inverse(x: &[f64]) -> Result<[[f64; STENCIL]; STENCIL]> {
    let n = x.len();
    let mut a = [[0.0; 2 * STENCIL]; STENCIL];
    for j in 0..n {
        let mut p = 1.0;
        for m in 0..n {
            a[j][m] = p;
            p *= x[j];
        }
        a[j][n + j] = 1.0;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &k| a[i][col].abs().total_cmp(&a[k][col].abs())).unwrap();
        if a[piv][col] == 0.0 {
            return Err(Error::invalid("coincident interpolation nodes in time mesh"));
        }
        a.swap(col, piv);
        let d = a[col][col];
        for v in a[col].iter_mut().take(2 * n) {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    // the right half now holds V^{-1}, rows indexed by power m, columns by node j
    let mut out = [[0.0; STENCIL]; STENCIL];
    for (m, row) in out.iter_mut().enumerate().take(n) {
        for (j, v) in row.iter_mut().enumerate().take(n) {
            *v = a[m][n + j];
        }
    }
    Ok(out)
}

impl Plan {
    pub fn new<F: ModalFamily + ?Sized>(family: &F, mesh: &TimeMesh) -> Result<Self> {
        let (lo, hi) = family.window();
        if mesh.start() < lo - 1e-12 || mesh.end() > hi + 1e-12 {
            return Err(Error::OutOfRange { t: if mesh.start() < lo { mesh.start() } else { mesh.end() }, lo, hi });
        }
        let times = mesh.times();
        let sides = mesh.sides();
        let ncomp = family.components();
        let segs = mesh.segments();
        let mut cells = Vec::with_capacity(ncomp);
        for c in 0..ncomp {
            let clock: Vec<f64> = times.iter().map(|&t| family.clock(c, t)).collect::<Result<_>>()?;
            let damp: Vec<f64> = times.iter().map(|&t| family.damping(c, t)).collect::<Result<_>>()?;
            let rate: Vec<f64> = times.iter().zip(sides).map(|(&t, &s)| family.clock_rate(c, t, s)).collect();
            let mut cc = Vec::with_capacity(times.len());
            for (seg, &(a, b)) in segs.iter().enumerate() {
                for i in a..b {
                    let (first, n) = mesh.stencil(seg, i, STENCIL);
                    let delta = clock[i + 1] - clock[i];
                    if !(delta > 0.0) {
                        return Err(Error::invalid(format!(
                            "clock of component {c} is not increasing at t = {}",
                            times[i]
                        )));
                    }
                    let th: Vec<f64> = (first..first + n).map(|j| (clock[j] - clock[i]) / delta).collect();
                    let thb: Vec<f64> = th.iter().map(|x| 1.0 - x).collect();
                    let vf = vandermonde_inverse(&th)?;
                    let vb = vandermonde_inverse(&thb)?;
                    let mut fwd = [[0.0; STENCIL]; STENCIL];
                    let mut bwd = [[0.0; STENCIL]; STENCIL];
                    for j in 0..n {
                        let p = first + j;
                        let qf = (-(damp[i + 1] - damp[p])).exp() / rate[p];
                        let qb = (-(damp[i] - damp[p])).exp() / rate[p];
                        for m in 0..n {
                            fwd[m][j] = vf[m][j] * qf * FACT[m] * delta;
                            bwd[m][j] = vb[m][j] * qb * FACT[m] * delta;
                        }
                    }
                    cc.push(Cell {
                        start: i,
                        first,
                        n,
                        delta,
                        db: damp[i + 1] - damp[i],
                        fwd,
                        bwd,
                        carry_in: (i == a && seg > 0).then(|| segs[seg - 1].1),
                        carry_out: (i + 1 == b && seg + 1 < segs.len()).then(|| segs[seg + 1].0),
                    });
                }
            }
            cells.push(cc);
        }
        Ok(Plan { cells, points: times.len() })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// March one mode through the mesh. `g(p)` is the source value of this mode at point `p`.
    fn march_mode(&self, comp: usize, r: f64, g: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut x = vec![0.0; self.points];
        let cells = &self.cells[comp];
        if r > 0.0 {
            for cell in cells {
                if let Some(prev) = cell.carry_in {
                    x[cell.start] = x[prev];
                }
                let z = r * cell.delta;
                let ph = phi1to4(-z);
                let mut acc = 0.0;
                for j in 0..cell.n {
                    let mut w = 0.0;
                    for m in 0..cell.n {
                        w += cell.fwd[m][j] * ph[m];
                    }
                    acc += w * g(cell.first + j);
                }
                x[cell.start + 1] = (-z - cell.db).exp() * x[cell.start] + acc;
            }
        } else {
            for cell in cells.iter().rev() {
                let end = cell.start + 1;
                if let Some(next) = cell.carry_out {
                    x[end] = x[next];
                }
                let z = -r * cell.delta;
                let ph = phi1to4(-z);
                let mut acc = 0.0;
                for j in 0..cell.n {
                    let mut w = 0.0;
                    for m in 0..cell.n {
                        w += cell.bwd[m][j] * ph[m];
                    }
                    acc += w * g(cell.first + j);
                }
                x[cell.start] = (-z + cell.db).exp() * x[end] - acc;
            }
        }
        x
    }

    /// Bounded solution for the sampled source `f` (point-major, `dim` values per point).
    ///
    /// Stable modes start from zero at the first mesh point, unstable ones at the last.
    pub fn solve<F: ModalFamily + ?Sized>(&self, family: &F, f: &[f64]) -> Result<Vec<f64>> {
        let dim = family.dim();
        if f.len() != dim * self.points {
            return Err(Error::DimensionMismatch { expected: dim * self.points, got: f.len() });
        }
        let k = family.modes();
        let cols: Vec<Vec<f64>> = (0..dim)
            .into_par_iter()
            .map(|col| {
                let (c, m) = (col / k, col % k);
                self.march_mode(c, family.rate(c, m), |p| f[p * dim + col])
            })
            .collect();
        let mut out = vec![0.0; dim * self.points];
        for (col, v) in cols.iter().enumerate() {
            for (p, x) in v.iter().enumerate() {
                out[p * dim + col] = *x;
            }
        }
        Ok(out)
    }
}
