//! Numerical quadrature: adaptive Gauss–Kronrod (7/15) and Gauss–Legendre rules.

use crate::sum::CompensatedSum;

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

// Gauss weights for the 7-point rule embedded at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 48;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: (f64, f64),
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
    acc: &mut CompensatedSum,
) {
    let (value, err) = whole;
    if err <= abs_tol.max(rel_tol * value.abs()) || depth >= MAX_DEPTH || b - a <= f64::EPSILON * a.abs().max(b.abs()) {
        acc.add(value);
        return;
    }
    let mid = 0.5 * (a + b);
    let left = gk15(f, a, mid);
    let right = gk15(f, mid, b);
    adapt(f, a, mid, left, 0.5 * abs_tol, rel_tol, depth + 1, acc);
    adapt(f, mid, b, right, 0.5 * abs_tol, rel_tol, depth + 1, acc);
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]`.
///
/// Subintervals are bisected until the Kronrod/Gauss discrepancy is below
/// `max(abs_tol, rel_tol * |estimate|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -integrate(f, b, a, abs_tol, rel_tol);
    }
    let mut acc = CompensatedSum::new();
    let whole = gk15(&f, a, b);
    adapt(&f, a, b, whole, abs_tol, rel_tol, 0, &mut acc);
    acc.value()
}

/// Integrates over `[a, b]` after splitting it geometrically so that every
/// piece satisfies `hi / lo <= ratio`. Suited to integrands varying on a
/// logarithmic scale, such as `1 / log t` on `[2, 10^8]`. Requires `a > 0`.
pub fn integrate_geometric<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, ratio: f64, rel_tol: f64) -> f64 {
    debug_assert!(a > 0.0 && ratio > 1.0);
    let mut acc = CompensatedSum::new();
    let mut lo = a;
    while lo < b {
        let hi = (lo * ratio).min(b);
        acc.add(integrate(&f, lo, hi, 0.0, rel_tol));
        lo = hi;
    }
    acc.value()
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n(x) and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}
