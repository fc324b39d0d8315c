//! Special functions: the Gamma function and the phi-functions of
//! exponential integrators.

use crate::error::{Error, Result};

/// Gamma function for positive finite arguments.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::invalid(format!("gamma argument must be positive and finite, got {x}")));
    }
    Ok(statrs::function::gamma::gamma(x))
}

const FACT: [f64; 6] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0];

/// Values `phi_1(z), ..., phi_4(z)` where `phi_k(z) = sum_j z^j / (j + k)!`.
///
/// Used with `z <= 0`; for small `|z|` a truncated series avoids the
/// cancellation in the recurrence `phi_{k+1} = (phi_k - 1/k!) / z`.
pub fn phi1to4(z: f64) -> [f64; 4] {
    if z.abs() < 1.0 {
        let mut out = [0.0; 4];
        for (k, o) in out.iter_mut().enumerate() {
            // phi_{k+1}(z) = sum_j z^j / (j + k + 1)!
            let mut term = 1.0 / FACT[k + 1];
            let mut s = term;
            for j in 1..24 {
                term *= z / (j + k + 1) as f64;
                s += term;
                if term.abs() < 1e-18 * s.abs() {
                    break;
                }
            }
            *o = s;
        }
        out
    } else {
        let mut prev = z.exp();
        let mut out = [0.0; 4];
        for (k, o) in out.iter_mut().enumerate() {
            prev = (prev - 1.0 / FACT[k]) / z;
            *o = prev;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    /// Independent oracle: Euler's integral evaluated by adaptive quadrature.
    fn gamma_oracle(x: f64) -> f64 {
        // split at 1 to isolate the algebraic singularity for x < 1
        let head = if x < 1.0 {
            // s^{x-1} e^{-s} = s^{x-1}(e^{-s} - 1) + s^{x-1}
            quad::integrate(|s: f64| s.powf(x - 1.0) * ((-s).exp_m1()), 0.0, 1.0, 1e-14, &[]) + 1.0 / x
        } else {
            quad::integrate(|s: f64| s.powf(x - 1.0) * (-s).exp(), 0.0, 1.0, 1e-13, &[])
        };
        let tail = quad::integrate(|s: f64| s.powf(x - 1.0) * (-s).exp(), 1.0, 80.0, 1e-13, &[]);
        head + tail
    }

    #[test]
    fn gamma_matches_euler_integral() {
        for &x in &[0.4, 0.6, 1.0, 1.6, 2.5, 5.0, 7.3] {
            let g = gamma(x).unwrap();
            let o = gamma_oracle(x);
            assert!(((g - o) / o).abs() < 1e-10, "x={x}: {g} vs {o}");
        }
    }

    #[test]
    fn gamma_known_values() {
        assert!((gamma(0.5).unwrap() - std::f64::consts::PI.sqrt()).abs() < 1e-14);
        assert!((gamma(5.0).unwrap() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(gamma(0.0).is_err());
        assert!(gamma(-1.5).is_err());
        assert!(gamma(f64::NAN).is_err());
    }

    #[test]
    fn phi_functions_match_quadrature() {
        // phi_k(z) = 1/(k-1)! * int_0^1 e^{(1-s) z} s^{k-1} ds
        for &z in &[0.0, -1e-8, -0.3, -0.999, -1.0, -1.7, -12.0, -400.0] {
            let p = phi1to4(z);
            for k in 1..=4 {
                let o = quad::integrate(|s: f64| ((1.0 - s) * z).exp() * s.powi(k - 1), 0.0, 1.0, 1e-15, &[])
                    / FACT[(k - 1) as usize];
                let got = p[(k - 1) as usize];
                assert!((got - o).abs() <= 1e-13 * o.abs().max(1e-3), "z={z} k={k}: {got} vs {o}");
            }
        }
    }
}
