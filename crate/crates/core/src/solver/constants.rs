use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma;

/// Closed-form solution-operator constants.
///
/// `K_inf` bounds the bounded-forcing solution, `K_bsp` the Stepanov-bounded
/// forcing one, `K_contraction` enters the semilinear contraction condition.
/// `K_matched` is the constant obtained by integrating the smoothing estimate
/// exactly, `int_0^inf m tau^(alpha-1) e^(-gamma tau) = m Gamma(alpha) gamma^(-alpha)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    #[serde(rename = "mAlpha")]
    pub m_alpha: f64,
    #[serde(rename = "cAlpha")]
    pub c_alpha: f64,
    pub p: f64,
    /// Conjugate exponent; `None` stands for infinity.
    pub q: Option<f64>,
    #[serde(rename = "K_inf")]
    pub k_inf: f64,
    #[serde(rename = "K_bsp")]
    pub k_bsp: f64,
    #[serde(rename = "K_contraction")]
    pub k_contraction: f64,
    #[serde(rename = "K_matched")]
    pub k_matched: f64,
    /// Largest of the above; used wherever a single safe constant is needed.
    #[serde(rename = "K_conservative")]
    pub k_conservative: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn constants(alpha: f64, gamma_: f64, delta: f64, m_alpha: f64, c_alpha: f64, p: f64) -> Result<Constants> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    positive("gamma", gamma_)?;
    positive("delta", delta)?;
    positive("mAlpha", m_alpha)?;
    if !(c_alpha.is_finite() && c_alpha >= 0.0) {
        return Err(Error::invalid(format!("cAlpha must be nonnegative, got {c_alpha}")));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("p must be at least 1, got {p}")));
    }
    let unstable = if c_alpha > 0.0 { c_alpha / delta } else { 0.0 };
    let k_inf = m_alpha * gamma_.powf(alpha - 1.0) * gamma(1.0 - alpha)? + unstable;
    let k_contraction = m_alpha * gamma_.powf(alpha - 1.0) * gamma(1.0 + alpha)? + unstable;
    let k_matched = m_alpha * gamma_.powf(-alpha) * gamma(alpha)? + unstable;
    let (q, k_bsp) = if p == 1.0 {
        (None, k_inf)
    } else {
        let q = p / (p - 1.0);
        let geo = |x: f64| (x / 2.0).exp() / ((x / 2.0).exp() - 1.0);
        let stable = m_alpha * (2.0 / (q * gamma_)).powf(alpha) * gamma(q * (1.0 - alpha))?.powf(1.0 / q) * geo(gamma_);
        let back = c_alpha * (2.0 / (q * delta)).powf(1.0 / q) * geo(delta);
        (Some(q), stable + back)
    };
    let k_conservative = k_inf.max(k_contraction).max(k_matched).max(k_bsp);
    Ok(Constants {
        alpha,
        gamma: gamma_,
        delta,
        m_alpha,
        c_alpha,
        p,
        q,
        k_inf,
        k_bsp,
        k_contraction,
        k_matched,
        k_conservative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn contraction_constant_example() {
        let c = constants(0.5, 1.0, 1.0, 1.0, 1.0, 2.0).unwrap();
        assert!((c.k_contraction - (PI.sqrt() / 2.0 + 1.0)).abs() < 1e-12);
        assert!((c.k_contraction - 1.886_226_925_452_758).abs() < 1e-12);
        // Gamma(1/2) = sqrt(pi)
        assert!((c.k_inf - (PI.sqrt() + 1.0)).abs() < 1e-12);
        assert!((c.k_matched - (PI.sqrt() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn stepanov_constant_example() {
        // both terms carry (2 / (q gamma))^(1/2) = (1/2)^(1/2) and e / (e - 1)
        let c = constants(0.5, 2.0, 2.0, 1.0, 1.0, 2.0).unwrap();
        let direct = 2.0 * 0.5f64.sqrt() * E / (E - 1.0);
        assert!((c.k_bsp - direct).abs() < 1e-12);
        assert!((c.k_bsp - K_BSP_EXAMPLE).abs() < 1e-12);
        assert_eq!(c.q, Some(2.0));
    }

    const K_BSP_EXAMPLE: f64 = 2.237_252_914_212_928;

    #[test]
    fn p_one_uses_bounded_constant() {
        let c = constants(0.6, 1.5, 3.0, 2.0, 0.0, 1.0).unwrap();
        assert_eq!(c.q, None);
        assert_eq!(c.k_bsp, c.k_inf);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(constants(1.0, 1.0, 1.0, 1.0, 0.0, 2.0).is_err());
        assert!(constants(0.0, 1.0, 1.0, 1.0, 0.0, 2.0).is_err());
        assert!(constants(0.5, -1.0, 1.0, 1.0, 0.0, 2.0).is_err());
        assert!(constants(0.5, 1.0, 1.0, 1.0, 0.0, 0.5).is_err());
    }
}
