//! Dirichlet Laplacian on `(0, L)` in the sine eigenbasis.
//!
//! A field is `sum_k x_k phi_k` with `phi_k(x) = sqrt(2/L) sin(k pi x / L)`,
//! eigenvalues `lambda_k = (k pi / L)^2`, and the fractional norm proxy
//! `|x|_alpha = (sum_k lambda_k^(2 alpha) x_k^2)^(1/2)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Sine-series coefficients of a field with homogeneous Dirichlet boundary values.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    length: f64,
    coeffs: Vec<f64>,
}

/// `lambda_k = (k pi / L)^2`.
pub fn eigenvalue(k: usize, length: f64) -> f64 {
    let w = k as f64 * PI / length;
    w * w
}

/// Interior collocation points `x_j = j L / (K + 1)`, `j = 1..K`.
pub fn collocation_grid(length: f64, modes: usize) -> Vec<f64> {
    (1..=modes).map(|j| j as f64 * length / (modes + 1) as f64).collect()
}

fn check_domain(length: f64, modes: usize) -> Result<()> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::invalid(format!("domain length must be positive, got {length}")));
    }
    if modes == 0 {
        return Err(Error::invalid("need at least one mode"));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// `sin(k pi r)` with exact zeros at both ends of the interval.
fn sin_mode(k: usize, r: f64) -> f64 {
    if r == 0.0 || r == 1.0 {
        0.0
    } else {
        (k as f64 * PI * r).sin()
    }
}

impl SpectralField {
    pub fn new(length: f64, coeffs: Vec<f64>) -> Result<Self> {
        check_domain(length, coeffs.len())?;
        Ok(SpectralField { length, coeffs })
    }

    pub fn zeros(length: f64, modes: usize) -> Result<Self> {
        SpectralField::new(length, vec![0.0; modes])
    }

    /// The normalized eigenfunction `phi_k` (1-based `k`).
    pub fn mode(length: f64, modes: usize, k: usize) -> Result<Self> {
        if k == 0 || k > modes {
            return Err(Error::invalid(format!("mode index {k} outside 1..={modes}")));
        }
        let mut c = vec![0.0; modes];
        c[k - 1] = 1.0;
        SpectralField::new(length, c)
    }

    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }
    pub fn eigenvalues(&self) -> Vec<f64> {
        (1..=self.modes()).map(|k| eigenvalue(k, self.length)).collect()
    }

    /// Coefficients of the sine series interpolating `samples` on the collocation grid.
    pub fn project(samples: &[f64], length: f64, modes: usize) -> Result<Self> {
        check_domain(length, modes)?;
        if samples.len() != modes {
            return Err(Error::DimensionMismatch { expected: modes, got: samples.len() });
        }
        let n1 = (modes + 1) as f64;
        let scale = (2.0 * length).sqrt() / n1;
        let coeffs = (1..=modes)
            .map(|k| {
                let mut s = 0.0;
                for (j, y) in samples.iter().enumerate() {
                    s += sin_mode(k * (j + 1), 1.0 / n1) * y;
                }
                scale * s
            })
            .collect();
        SpectralField::new(length, coeffs)
    }

    /// Point values of the series at `grid` (points in `[0, L]`).
    pub fn reconstruct(&self, grid: &[f64]) -> Vec<f64> {
        let a = (2.0 / self.length).sqrt();
        grid.iter()
            .map(|&x| {
                let r = x / self.length;
                let mut s = 0.0;
                for (k, c) in self.coeffs.iter().enumerate() {
                    s += c * sin_mode(k + 1, r);
                }
                a * s
            })
            .collect()
    }

    /// Point values of the spatial derivative at `grid`.
    pub fn gradient(&self, grid: &[f64]) -> Vec<f64> {
        let a = (2.0 / self.length).sqrt();
        grid.iter()
            .map(|&x| {
                let mut s = 0.0;
                for (k, c) in self.coeffs.iter().enumerate() {
                    let w = (k + 1) as f64 * PI / self.length;
                    s += c * w * (w * x).cos();
                }
                a * s
            })
            .collect()
    }

    /// The fractional norm proxy `(sum lambda_k^(2 alpha) x_k^2)^(1/2)`.
    pub fn alpha_norm(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(AlphaWeights::new(self.length, self.modes(), 1, alpha)?.norm(&self.coeffs))
    }
}

/// A pair `(u, v)` of fields on the same domain and mode count.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldPair {
    pub u: SpectralField,
    pub v: SpectralField,
}

impl FieldPair {
    pub fn new(u: SpectralField, v: SpectralField) -> Result<Self> {
        if u.length != v.length || u.modes() != v.modes() {
            return Err(Error::DimensionMismatch { expected: u.modes(), got: v.modes() });
        }
        Ok(FieldPair { u, v })
    }

    pub fn zeros(length: f64, modes: usize) -> Result<Self> {
        FieldPair::new(SpectralField::zeros(length, modes)?, SpectralField::zeros(length, modes)?)
    }

    /// Coefficients laid out as `[u_1..u_K, v_1..v_K]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.u.coeffs.clone();
        out.extend_from_slice(&self.v.coeffs);
        out
    }

    pub fn from_flat(length: f64, flat: &[f64]) -> Result<Self> {
        if flat.is_empty() || !flat.len().is_multiple_of(2) {
            return Err(Error::invalid("flat pair buffer must have even nonzero length"));
        }
        let k = flat.len() / 2;
        FieldPair::new(SpectralField::new(length, flat[..k].to_vec())?, SpectralField::new(length, flat[k..].to_vec())?)
    }

    /// Sum of the component alpha norms.
    pub fn alpha_norm(&self, alpha: f64) -> Result<f64> {
        Ok(self.u.alpha_norm(alpha)? + self.v.alpha_norm(alpha)?)
    }
}

/// Precomputed `lambda_k^alpha` weights for fast norms of flat multi-component buffers.
///
/// The norm of a buffer with several components is the sum of the component norms.
#[derive(Clone, Debug)]
pub struct AlphaWeights {
    weights: Vec<f64>,
    components: usize,
}

impl AlphaWeights {
    pub fn new(length: f64, modes: usize, components: usize, alpha: f64) -> Result<Self> {
        check_domain(length, modes)?;
        check_alpha(alpha)?;
        let weights = (1..=modes).map(|k| eigenvalue(k, length).powf(alpha)).collect();
        Ok(AlphaWeights { weights, components })
    }

    /// Weights supplied directly (one per mode).
    pub fn from_weights(weights: Vec<f64>, components: usize) -> Self {
        AlphaWeights { weights, components }
    }

    pub fn modes(&self) -> usize {
        self.weights.len()
    }

    pub fn norm(&self, flat: &[f64]) -> f64 {
        let k = self.weights.len();
        let mut total = 0.0;
        for c in 0..self.components {
            let mut s = 0.0;
            for (w, x) in self.weights.iter().zip(&flat[c * k..(c + 1) * k]) {
                let y = w * x;
                s += y * y;
            }
            total += s.sqrt();
        }
        total
    }

    /// Norm of `a - b` without allocating.
    pub fn norm_diff(&self, a: &[f64], b: &[f64]) -> f64 {
        let k = self.weights.len();
        let mut total = 0.0;
        for c in 0..self.components {
            let mut s = 0.0;
            for i in 0..k {
                let y = self.weights[i] * (a[c * k + i] - b[c * k + i]);
                s += y * y;
            }
            total += s.sqrt();
        }
        total
    }
}

/// Pseudo-spectral transform pair on a padded collocation grid of `2K` points.
///
/// Fields are synthesized (values and derivatives) on the padded grid, combined
/// pointwise, and projected back by the discrete sine transform of the padded
/// grid, truncated to the first `K` modes.
#[derive(Clone, Debug)]
pub struct PaddedTransform {
    length: f64,
    modes: usize,
    points: usize,
    /// `points x modes`, row-major: `phi_k(x_j)`.
    synth: Vec<f64>,
    /// `points x modes`: `phi_k'(x_j)`.
    deriv: Vec<f64>,
    /// `modes x points`: projection weights.
    analyze: Vec<f64>,
}

impl PaddedTransform {
    pub fn new(length: f64, modes: usize) -> Result<Self> {
        check_domain(length, modes)?;
        let points = 2 * modes;
        let n1 = (points + 1) as f64;
        let a = (2.0 / length).sqrt();
        let mut synth = vec![0.0; points * modes];
        let mut deriv = vec![0.0; points * modes];
        let mut analyze = vec![0.0; modes * points];
        let scale = (2.0 * length).sqrt() / n1;
        for j in 1..=points {
            for k in 1..=modes {
                let theta = (j * k) as f64 * PI / n1;
                let w = k as f64 * PI / length;
                synth[(j - 1) * modes + (k - 1)] = a * theta.sin();
                deriv[(j - 1) * modes + (k - 1)] = a * w * theta.cos();
                analyze[(k - 1) * points + (j - 1)] = scale * theta.sin();
            }
        }
        Ok(PaddedTransform { length, modes, points, synth, deriv, analyze })
    }

    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn modes(&self) -> usize {
        self.modes
    }
    pub fn points(&self) -> usize {
        self.points
    }
    pub fn grid(&self) -> Vec<f64> {
        collocation_grid(self.length, self.points)
    }

    fn apply(mat: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
        for r in 0..rows {
            let row = &mat[r * cols..(r + 1) * cols];
            let mut s = 0.0;
            for c in 0..cols {
                s += row[c] * x[c];
            }
            out[r] = s;
        }
    }

    /// Values on the padded grid.
    pub fn values(&self, coeffs: &[f64], out: &mut [f64]) {
        Self::apply(&self.synth, self.points, self.modes, coeffs, out);
    }

    /// Derivative values on the padded grid.
    pub fn derivatives(&self, coeffs: &[f64], out: &mut [f64]) {
        Self::apply(&self.deriv, self.points, self.modes, coeffs, out);
    }

    /// First `K` sine coefficients of grid values.
    pub fn project(&self, values: &[f64], out: &mut [f64]) {
        Self::apply(&self.analyze, self.modes, self.points, values, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use proptest::prelude::*;

    #[test]
    fn eigenbasis_projection() {
        let grid = collocation_grid(1.0, 8);
        let phi1 = SpectralField::mode(1.0, 8, 1).unwrap();
        let samples = phi1.reconstruct(&grid);
        let back = SpectralField::project(&samples, 1.0, 8).unwrap();
        assert!((back.coeffs()[0] - 1.0).abs() < 1e-14);
        assert!(back.coeffs()[1..].iter().all(|c| c.abs() < 1e-14));
        let zero = SpectralField::project(&[0.0; 8], 1.0, 8).unwrap();
        assert!(zero.coeffs().iter().all(|&c| c == 0.0));
        assert!(SpectralField::project(&[0.0; 7], 1.0, 8).is_err());
    }

    #[test]
    fn parabola_coefficients_match_quadrature_up_to_aliasing() {
        let (l, k) = (1.0, 32);
        // oracle: L2 projection coefficients by adaptive quadrature
        let exact: Vec<f64> = (1..=200)
            .map(|m| {
                quad::integrate(|x| x * (l - x) * (2.0 / l).sqrt() * (m as f64 * PI * x / l).sin(), 0.0, l, 1e-14, &[])
            })
            .collect();
        for (m, e) in exact.iter().enumerate().take(10) {
            let m = m + 1;
            let closed = if m % 2 == 1 { 4.0 * 2f64.sqrt() / (m as f64 * PI).powi(3) } else { 0.0 };
            assert!((e - closed).abs() < 1e-13, "m={m}");
        }
        let grid = collocation_grid(l, k);
        let samples: Vec<f64> = grid.iter().map(|x| x * (l - x)).collect();
        let f = SpectralField::project(&samples, l, k).unwrap();
        for i in 0..k {
            // interpolation differs from projection only through aliased high modes
            let mut alias = 0.0;
            for m in 1..4 {
                for idx in [2 * m * (k + 1) - (i + 1), 2 * m * (k + 1) + (i + 1)] {
                    if idx <= exact.len() {
                        alias += exact[idx - 1].abs();
                    }
                }
            }
            assert!((f.coeffs()[i] - exact[i]).abs() <= alias + 1e-14, "k={} {} vs {}", i + 1, f.coeffs()[i], exact[i]);
        }
        assert!((f.coeffs()[0] - PARABOLA_C1).abs() < 1e-14);
    }

    /// First interpolating coefficient of x(1-x) at K = 32 (quadrature value 4 sqrt2 / pi^3 plus aliasing).
    const PARABOLA_C1: f64 = 0.182_442_167_126_885_07;

    #[test]
    fn reconstruct_inverts_project() {
        let grid = collocation_grid(2.5, 16);
        let samples: Vec<f64> = grid.iter().map(|x| (3.0 * x).sin() * x).collect();
        let f = SpectralField::project(&samples, 2.5, 16).unwrap();
        let back = f.reconstruct(&grid);
        for (a, b) in samples.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn dirichlet_boundary_is_exact() {
        let f = SpectralField::new(1.7, vec![0.3, -1.0, 2.0, 0.25]).unwrap();
        let v = f.reconstruct(&[0.0, 1.7]);
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn gradient_examples() {
        let phi1 = SpectralField::mode(2.0, 4, 1).unwrap();
        let g = phi1.gradient(&[1.0, 0.0]);
        assert!(g[0].abs() < 1e-15);
        assert!((g[1] - (2.0f64 / 2.0).sqrt() * PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = SpectralField::new(1.0, vec![0.7, -0.2, 0.4, 0.1, -0.3]).unwrap();
        let h = 1e-6;
        for &x in &[0.1, 0.33, 0.5, 0.77, 0.95] {
            let g = f.gradient(&[x])[0];
            let v = f.reconstruct(&[x - h, x + h]);
            let fd = (v[1] - v[0]) / (2.0 * h);
            assert!((g - fd).abs() <= 1e-6 * g.abs().max(1.0), "x={x}: {g} vs {fd}");
        }
    }

    #[test]
    fn alpha_norm_examples() {
        let phi1 = SpectralField::mode(1.0, 4, 1).unwrap();
        assert!((phi1.alpha_norm(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((phi1.alpha_norm(0.5).unwrap() - PI).abs() < 1e-14);
        let two = SpectralField::new(1.0, vec![1.0, 1.0]).unwrap();
        assert!((two.alpha_norm(0.5).unwrap() - PI * 5f64.sqrt()).abs() < 1e-13);
        assert!(phi1.alpha_norm(1.5).is_err());
        assert!(phi1.alpha_norm(-0.1).is_err());
    }

    #[test]
    fn parseval_by_trapezoid() {
        for &k in &[1usize, 7, 32, 64] {
            let coeffs: Vec<f64> = (0..k).map(|i| ((i * 7 + 3) % 11) as f64 / 5.0 - 1.0).collect();
            let f = SpectralField::new(1.3, coeffs.clone()).unwrap();
            let n = 4 * k;
            let grid: Vec<f64> = (0..=n).map(|j| 1.3 * j as f64 / n as f64).collect();
            let v = f.reconstruct(&grid);
            let h = 1.3 / n as f64;
            let integral: f64 = v.iter().map(|y| y * y).sum::<f64>() * h;
            let c2: f64 = coeffs.iter().map(|c| c * c).sum();
            assert!((integral - c2).abs() < 1e-8 * c2.max(1.0), "K={k}");
        }
    }

    #[test]
    fn padded_transform_is_consistent() {
        let t = PaddedTransform::new(1.0, 6).unwrap();
        let coeffs = [0.5, -0.25, 0.0, 1.0, 0.125, -2.0];
        let f = SpectralField::new(1.0, coeffs.to_vec()).unwrap();
        let grid = t.grid();
        let mut vals = vec![0.0; t.points()];
        t.values(&coeffs, &mut vals);
        let direct = f.reconstruct(&grid);
        for (a, b) in vals.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-13);
        }
        t.derivatives(&coeffs, &mut vals);
        let direct = f.gradient(&grid);
        for (a, b) in vals.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
        t.values(&coeffs, &mut vals);
        let mut back = vec![0.0; 6];
        t.project(&vals, &mut back);
        for (a, b) in back.iter().zip(&coeffs) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn flat_pair_roundtrip() {
        let p = FieldPair::new(
            SpectralField::new(1.0, vec![1.0, 2.0]).unwrap(),
            SpectralField::new(1.0, vec![3.0, 4.0]).unwrap(),
        )
        .unwrap();
        let flat = p.to_flat();
        assert_eq!(flat, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(FieldPair::from_flat(1.0, &flat).unwrap(), p);
        let w = AlphaWeights::new(1.0, 2, 2, 0.0).unwrap();
        assert!((w.norm(&flat) - (5f64.sqrt() + 5.0)).abs() < 1e-14);
        assert!((p.alpha_norm(0.0).unwrap() - w.norm(&flat)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn alpha_norm_is_monotone(coeffs in prop::collection::vec(-10.0f64..10.0, 1..40), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            // L <= pi gives lambda_1 >= 1
            let f = SpectralField::new(PI, coeffs).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(f.alpha_norm(lo).unwrap() <= f.alpha_norm(hi).unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn embedding_constants(coeffs in prop::collection::vec(-10.0f64..10.0, 1..40), a in 0.0f64..1.0, b in 0.0f64..1.0, l in 0.2f64..4.0) {
            let f = SpectralField::new(l, coeffs).unwrap();
            let (al, be) = if a <= b { (a, b) } else { (b, a) };
            let k = f.modes();
            let na = f.alpha_norm(al).unwrap();
            let nb = f.alpha_norm(be).unwrap();
            let lam1 = eigenvalue(1, l);
            let lamk = eigenvalue(k, l);
            prop_assert!(lamk.powf(al - be) * nb <= na * (1.0 + 1e-12) + 1e-300);
            prop_assert!(na <= lam1.powf(al - be) * nb * (1.0 + 1e-12) + 1e-300);
        }
    }
}
