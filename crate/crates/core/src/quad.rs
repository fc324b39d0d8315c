//! Quadrature rules shared by the analysis, evolution and solver modules.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_64, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Five-point Gauss-Legendre nodes on [-1, 1].
pub const GL5_X: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
/// Five-point Gauss-Legendre weights on [-1, 1].
pub const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Gauss-Lobatto abscissae with four points on [0, 1].
pub fn lobatto4() -> [f64; 4] {
    let r = 0.5 / 5f64.sqrt();
    [0.0, 0.5 - r, 0.5 + r, 1.0]
}

/// Five-point Gauss-Legendre rule on [a, b].
pub fn gauss_legendre5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..5 {
        s += GL5_W[i] * f(c + h * GL5_X[i]);
    }
    s * h
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration of a scalar function.
///
/// `breaks` are interior points where the integrand may be discontinuous;
/// the interval is split there before adaptation so no panel straddles one.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, breaks: &[f64]) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(f64::total_cmp);
    pts.extend(inner);
    pts.push(hi);
    let total = hi - lo;
    let mut sum = 0.0;
    for w in pts.windows(2) {
        let mut stack = vec![(w[0], w[1], 0u32)];
        while let Some((x0, x1, depth)) = stack.pop() {
            let (v, err) = gk15(&f, x0, x1);
            let local = tol * (x1 - x0) / total;
            if err <= local.max(f64::EPSILON * v.abs()) || depth >= 48 {
                sum += v;
            } else {
                let m = 0.5 * (x0 + x1);
                stack.push((m, x1, depth + 1));
                stack.push((x0, m, depth + 1));
            }
        }
    }
    sign * sum
}

/// Adaptive Gauss-Kronrod integration of a vector-valued function.
///
/// `f(t, out)` writes the integrand at `t` into `out`. Panels are refined
/// until `norm` of the Kronrod/Gauss difference falls below the share of
/// `tol` proportional to the panel width.
pub fn integrate_vec<F, N>(f: F, dim: usize, a: f64, b: f64, tol: f64, breaks: &[f64], norm: N) -> Vec<f64>
where
    F: Fn(f64, &mut [f64]),
    N: Fn(&[f64]) -> f64,
{
    let mut total = vec![0.0; dim];
    if a >= b {
        return total;
    }
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    pts.extend(inner);
    pts.push(b);
    let len = b - a;
    let mut buf = vec![0.0; dim];
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    for w in pts.windows(2) {
        let mut stack = vec![(w[0], w[1], 0u32)];
        while let Some((x0, x1, depth)) = stack.pop() {
            let c = 0.5 * (x0 + x1);
            let h = 0.5 * (x1 - x0);
            f(c, &mut buf);
            for i in 0..dim {
                kron[i] = WGK[7] * buf[i];
                gauss[i] = WG[3] * buf[i];
            }
            for j in 0..7 {
                let x = h * XGK[j];
                for s in [c - x, c + x] {
                    f(s, &mut buf);
                    for i in 0..dim {
                        kron[i] += WGK[j] * buf[i];
                        if j % 2 == 1 {
                            gauss[i] += WG[j / 2] * buf[i];
                        }
                    }
                }
            }
            for i in 0..dim {
                kron[i] *= h;
                gauss[i] = (kron[i] - gauss[i] * h).abs();
            }
            let err = norm(&gauss);
            if err <= tol * (x1 - x0) / len || depth >= 48 {
                for i in 0..dim {
                    total[i] += kron[i];
                }
            } else {
                stack.push((c, x1, depth + 1));
                stack.push((x0, c, depth + 1));
            }
        }
    }
    total
}
