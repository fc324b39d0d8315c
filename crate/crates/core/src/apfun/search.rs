use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::norms::{bohr_distance, distance, distance_capped, NormKind};
use super::signal::{norm, Signal};
use crate::error::{Error, Result};

/// Classification outcome of an almost-period scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "BohrAP")]
    BohrAp,
    #[serde(rename = "StepanovAPOnly")]
    StepanovApOnly,
    Inconclusive,
}

/// Result of an epsilon-almost-period scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AlmostPeriodReport {
    pub epsilon: f64,
    pub norm_kind: NormKind,
    pub tau_range: [f64; 2],
    pub tau_step: f64,
    /// Found almost periods in ascending order.
    pub almost_periods: Vec<f64>,
    /// Distance measured at each found almost period.
    pub distances: Vec<f64>,
    pub inclusion_length: Option<f64>,
    pub relatively_dense: bool,
    pub continuous: bool,
    pub verdict: Verdict,
    /// Shift with the smallest distance in the scan, whether or not it qualified.
    pub closest: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

/// Samples whose forward difference is an isolated spike: larger than ten times the
/// median of the neighbouring differences and larger than `1e-6`.
pub fn detect_jumps(f: &Signal) -> Vec<f64> {
    let n = f.len();
    if n < 3 {
        return Vec::new();
    }
    let d: Vec<f64> = (0..n - 1)
        .map(|i| {
            let (a, b) = (f.sample(i), f.sample(i + 1));
            norm(&a.iter().zip(b).map(|(x, y)| y - x).collect::<Vec<_>>())
        })
        .collect();
    const W: usize = 4;
    let mut out = Vec::new();
    let mut buf = Vec::with_capacity(2 * W);
    for i in 0..d.len() {
        if d[i] <= 1e-6 {
            continue;
        }
        buf.clear();
        for j in i.saturating_sub(W)..(i + W + 1).min(d.len()) {
            if j != i {
                buf.push(d[j]);
            }
        }
        if buf.is_empty() {
            continue;
        }
        buf.sort_by(f64::total_cmp);
        let med =
            if buf.len() % 2 == 1 { buf[buf.len() / 2] } else { 0.5 * (buf[buf.len() / 2 - 1] + buf[buf.len() / 2]) };
        if d[i] > 10.0 * med {
            out.push(f.time(i));
        }
    }
    out
}

/// Largest sampled increment over a lag of `m` samples.
pub fn sample_modulus(f: &Signal, m: usize) -> f64 {
    let n = f.len();
    (0..n.saturating_sub(m))
        .map(|i| {
            let (a, b) = (f.sample(i), f.sample(i + m));
            a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
}

/// Sup-distance bound implied by a Stepanov distance `eps` for a signal with the
/// sampled modulus of continuity: `min_h eps * h^(-1/p) + 2 * omega(h)` over
/// dyadic lags `h <= 1`.
pub fn uc_bridge_bound(f: &Signal, eps: f64, p: f64) -> f64 {
    let dt = f.dt();
    let mut best = f64::INFINITY;
    let mut m = 1usize;
    while m as f64 * dt <= 1.0 + 1e-12 && m < f.len() {
        let h = m as f64 * dt;
        best = best.min(eps * h.powf(-1.0 / p) + 2.0 * sample_modulus(f, m));
        m *= 2;
    }
    best
}

fn tau_grid(range: (f64, f64), step: f64) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!("tau step must be positive, got {step}")));
    }
    if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid(format!("empty tau range [{lo}, {hi}]")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|j| lo + j as f64 * step).collect())
}

/// Scan translation numbers over a uniform grid and classify the signal.
pub fn find_almost_periods(
    f: &Signal,
    eps: f64,
    norm: NormKind,
    range: (f64, f64),
    step: f64,
) -> Result<AlmostPeriodReport> {
    find_joint_almost_periods(std::slice::from_ref(f), eps, norm, range, step)
}

/// Common almost periods of several signals: `tau` qualifies when it is an
/// `eps`-almost period of every signal.
pub fn find_joint_almost_periods(
    fs: &[Signal],
    eps: f64,
    norm: NormKind,
    range: (f64, f64),
    step: f64,
) -> Result<AlmostPeriodReport> {
    if fs.is_empty() {
        return Err(Error::invalid("no signals to scan"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {eps}")));
    }
    norm.validate()?;
    let taus = tau_grid(range, step)?;
    // worst distance over the signals, abandoned once it exceeds `cap`: the result is then a lower bound
    let worst_until = |tau: f64, cap: f64| -> Result<(f64, bool)> {
        let mut worst: f64 = 0.0;
        for f in fs {
            let (d, complete) =
                if cap.is_finite() { distance_capped(f, tau, norm, cap)? } else { (distance(f, tau, norm)?, true) };
            worst = worst.max(d);
            if !complete || worst > cap {
                return Ok((worst, false));
            }
        }
        Ok((worst, true))
    };
    let scan: Vec<(f64, bool)> = taus.par_iter().map(|&tau| worst_until(tau, eps)).collect::<Result<_>>()?;

    // survivors are measured again over the whole window in one piece
    let mut almost_periods = Vec::new();
    let mut distances = Vec::new();
    for (&tau, &(_, complete)) in taus.iter().zip(&scan) {
        if complete {
            let (d, _) = worst_until(tau, f64::INFINITY)?;
            if d <= eps {
                almost_periods.push(tau);
                distances.push(d);
            }
        }
    }
    // closest shift: exact among found ones, otherwise by best-first refinement of the lower bounds
    let closest = if let Some((i, &d)) = distances.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) {
        Some([almost_periods[i], d])
    } else {
        let mut order: Vec<usize> = (0..taus.len()).collect();
        order.sort_by(|&a, &b| scan[a].0.total_cmp(&scan[b].0).then(a.cmp(&b)));
        let mut best: Option<[f64; 2]> = None;
        for idx in order {
            if best.is_some_and(|b| scan[idx].0 >= b[1]) {
                break;
            }
            let (d, _) = worst_until(taus[idx], f64::INFINITY)?;
            if best.is_none_or(|b| d < b[1] || (d == b[1] && taus[idx] < b[0])) {
                best = Some([taus[idx], d]);
            }
        }
        best
    };
    let (lo, hi) = range;
    let inclusion_length = if almost_periods.len() >= 2 {
        Some(almost_periods.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max))
    } else {
        None
    };
    let relatively_dense = match inclusion_length {
        Some(l) => {
            let first = almost_periods[0];
            let last = *almost_periods.last().unwrap();
            first - lo <= l + 1e-12 && hi - last <= l + 1e-12 && hi - lo >= 2.0 * l
        }
        None => false,
    };
    let declared_jump = fs.iter().any(|f| f.jumps().iter().any(|j| j.size() > 1e-12));
    let detected = fs.iter().any(|f| !detect_jumps(f).is_empty());
    let continuous = !declared_jump && !detected;

    let verdict = if !relatively_dense {
        Verdict::Inconclusive
    } else if !continuous {
        Verdict::StepanovApOnly
    } else {
        match norm {
            NormKind::Bohr => Verdict::BohrAp,
            NormKind::Stepanov { p } => {
                // a continuous S^p almost period is a Bohr one up to the UC bridge
                let mut ok = true;
                for f in fs {
                    let bound = uc_bridge_bound(f, eps, p);
                    for &tau in &almost_periods {
                        if bohr_distance(f, tau)? > bound {
                            ok = false;
                        }
                    }
                }
                if ok {
                    Verdict::BohrAp
                } else {
                    Verdict::StepanovApOnly
                }
            }
        }
    };
    let note = if detected && !declared_jump {
        Some(
            "steep undeclared variation: uniform continuity is not supported at this resolution; \
             consistent with an almost automorphic but not Bohr almost periodic signal (not certified)"
                .to_string(),
        )
    } else {
        None
    };
    Ok(AlmostPeriodReport {
        epsilon: eps,
        norm_kind: norm,
        tau_range: [lo, hi],
        tau_step: step,
        almost_periods,
        distances,
        inclusion_length,
        relatively_dense,
        continuous,
        verdict,
        closest,
        note,
    })
}
