//! Dickman's function ρ, the saddle function ξ(u), the integral
//! I(s) = ∫_0^s (e^v − 1)/v dv, and the large-u asymptotic for ρ.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, range, Result};
use crate::quad;
use crate::report::fmt_real;
use crate::sum::CompensatedSum;
use crate::EULER_GAMMA;

pub const DEFAULT_QUADRATURE_ORDER: usize = 8;
pub const DEFAULT_STEP: f64 = 1e-3;
pub const MAX_U: f64 = 500.0;

/// Equispaced nodes used to interpolate delayed values while marching.
const MARCH_STENCIL: usize = 8;

/// Split point between the power series and quadrature branches of I(s).
const INT_EXP_SERIES_MAX: f64 = 30.0;

/// log ρ tabulated on `u = i·h`, `h = 1/N`, so that every integer is a node.
///
/// Integrating `v·ρ'(v) + ρ(v − 1) = 0` from 1 to u and using ρ = 1 on
/// [0, 1] gives
///
/// ```text
/// u·ρ(u) = ρ(1) + ∫_1^u ρ(t) dt − ∫_0^{u−1} ρ(t) dt = ∫_{u−1}^u ρ(t) dt,
/// ```
///
/// which is marched node by node: ρ at a new node is the window integral of
/// the last N panels divided by u. Every term is positive, so relative
/// errors are averaged rather than amplified. The newest panel
/// `[u_j, u_j + h]` is integrated without knowing ρ(u_j + h) through
///
/// ```text
/// ∫_{u_j}^{u_j+h} ρ = h·ρ(u_j) − ∫_{u_j}^{u_j+h} (u_j + h − s)·ρ(s − 1)/s ds,
/// ```
///
/// whose right side needs only delayed values. That integral uses a
/// Gauss–Legendre panel and Lagrange interpolation of log ρ on nodes inside
/// the unit interval holding `s − 1` (ρ^(k) jumps at u = k).
#[derive(Clone, Debug)]
pub struct RhoGrid {
    u_max: f64,
    h: f64,
    nodes_per_unit: usize,
    quadrature_order: usize,
    log_rho: Vec<f64>,
}

/// A solution of `e^ξ = 1 + u·ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiValue {
    pub u: f64,
    pub xi: f64,
    /// `|e^ξ − 1 − u·ξ|` at the returned ξ.
    pub residual: f64,
}

fn lagrange_weights(nodes: usize, x: f64) -> Vec<f64> {
    (0..nodes)
        .map(|m| {
            (0..nodes)
                .filter(|&j| j != m)
                .map(|j| (x - j as f64) / (m as f64 - j as f64))
                .product()
        })
        .collect()
}

impl RhoGrid {
    pub fn build(u_max: f64, h: f64) -> Result<Self> {
        Self::build_with_order(u_max, h, DEFAULT_QUADRATURE_ORDER)
    }

    /// Builds the grid on `[0, u_max]`. The requested step is rounded to the
    /// nearest `1/N`.
    pub fn build_with_order(u_max: f64, h: f64, quadrature_order: usize) -> Result<Self> {
        if !(u_max > 0.0 && u_max <= MAX_U) {
            return domain(format!("u_max must lie in (0, {MAX_U}], got {u_max}"));
        }
        if !(1e-4..=1e-1).contains(&h) {
            return domain(format!("grid step h must lie in [1e-4, 1e-1], got {h}"));
        }
        if !(1..=64).contains(&quadrature_order) {
            return domain(format!("quadrature order must lie in [1, 64], got {quadrature_order}"));
        }
        let per_unit = (1.0 / h).round() as usize;
        let h = 1.0 / per_unit as f64;
        let last = (u_max * per_unit as f64).ceil() as usize + 1;
        let stencil = MARCH_STENCIL.min(per_unit + 1);
        // The window sum is rebuilt from scratch this often, which also resets
        // the scale it is accumulated in.
        let refresh = (per_unit / 8).max(1);

        let (gl_nodes, gl_weights) = quad::gauss_legendre(quadrature_order);
        // weights[offset][i] interpolates at Gauss node i of a delayed panel
        // starting `offset` nodes after the stencil start.
        let weights: Vec<Vec<Vec<f64>>> = (0..stencil - 1)
            .map(|offset| {
                gl_nodes
                    .iter()
                    .map(|&g| lagrange_weights(stencil, offset as f64 + 0.5 * (1.0 + g)))
                    .collect()
            })
            .collect();

        let mut log_rho = vec![0.0; last + 1];
        // log of ∫ ρ over [u_j, u_j + h]; ρ = 1 on the panels of [0, 1].
        let mut log_panel = vec![h.ln(); last];
        let mut window = CompensatedSum::new();
        let mut scale = 0.0;

        for n in (per_unit + 1)..=last {
            let j = n - 1;
            let delayed = j - per_unit;
            let unit = delayed / per_unit;
            let lo = unit * per_unit;
            let hi = (unit + 1) * per_unit;
            let start = delayed
                .saturating_sub(stencil / 2 - 1)
                .clamp(lo, hi + 1 - stencil);
            let offset = delayed - start;
            let lagged_nodes = &log_rho[start..start + stencil];
            let current = log_rho[j];
            let u_j = j as f64 * h;
            let mut correction = CompensatedSum::new();
            for (i, (&g, &w)) in gl_nodes.iter().zip(&gl_weights).enumerate() {
                let s = u_j + 0.5 * h * (1.0 + g);
                let lagged: f64 = weights[offset][i]
                    .iter()
                    .zip(lagged_nodes)
                    .map(|(a, b)| a * b)
                    .sum();
                correction.add(w * (0.5 * h * (1.0 - g)) * (lagged - current).exp() / s);
            }
            log_panel[j] = current + (h - 0.5 * h * correction.value()).ln();

            let first = n - per_unit;
            if (n - per_unit - 1).is_multiple_of(refresh) {
                scale = log_panel[first];
                window = log_panel[first..n].iter().map(|&l| (l - scale).exp()).collect();
            } else {
                window.add((log_panel[j] - scale).exp());
                window.add(-(log_panel[first - 1] - scale).exp());
            }
            log_rho[n] = scale + window.value().ln() - (n as f64 * h).ln();
        }

        Ok(RhoGrid {
            u_max,
            h,
            nodes_per_unit: per_unit,
            quadrature_order,
            log_rho,
        })
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    /// The step actually used (an exact reciprocal of an integer).
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn quadrature_order(&self) -> usize {
        self.quadrature_order
    }

    pub fn nodes_per_unit(&self) -> usize {
        self.nodes_per_unit
    }

    /// log ρ at the grid nodes `u = i·h`.
    pub fn log_rho_nodes(&self) -> &[f64] {
        &self.log_rho
    }

    pub fn node_u(&self, i: usize) -> f64 {
        i as f64 / self.nodes_per_unit as f64
    }

    /// log ρ(u). Exact on [0, 1], closed form `log(1 − log u)` on [1, 2],
    /// cubic interpolation within the enclosing unit interval beyond.
    pub fn log_rho(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return domain(format!("rho requires u >= 0, got {u}"));
        }
        if u > self.u_max {
            return range(format!("u = {u} exceeds the grid range {}", self.u_max));
        }
        if u <= 1.0 {
            return Ok(0.0);
        }
        if u <= 2.0 {
            return Ok((-u.ln()).ln_1p());
        }
        let n = self.nodes_per_unit;
        let pos = u * n as f64;
        let unit = ((pos / n as f64).floor() as usize).min(self.log_rho.len() / n - 1);
        let lo = unit * n;
        let hi = ((unit + 1) * n).min(self.log_rho.len() - 1);
        let base = (pos.floor() as usize).saturating_sub(1).clamp(lo, hi - 3);
        let w = lagrange_weights(4, pos - base as f64);
        Ok(w.iter().zip(&self.log_rho[base..base + 4]).map(|(a, b)| a * b).sum())
    }

    pub fn rho(&self, u: f64) -> Result<f64> {
        Ok(self.log_rho(u)?.exp())
    }

    /// Largest relative residual `|u·ρ'(u) + ρ(u − 1)| / ρ(u − 1)` over interior
    /// nodes `u >= 1 + h`, with ρ' taken as a centred difference. The node
    /// u = 2, where ρ'' jumps, is skipped.
    pub fn dde_residual(&self) -> f64 {
        let n = self.nodes_per_unit;
        let mut worst: f64 = 0.0;
        for i in (n + 1)..(self.log_rho.len() - 1) {
            if i == 2 * n || self.node_u(i) > self.u_max {
                continue;
            }
            let lag = self.log_rho[i - n];
            let up = (self.log_rho[i + 1] - lag).exp();
            let down = (self.log_rho[i - 1] - lag).exp();
            let res = self.node_u(i) * (up - down) / (2.0 * self.h) + 1.0;
            worst = worst.max(res.abs());
        }
        worst
    }

    /// CSV export: `u,log_rho` at every node up to `u_max`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["u", "log_rho"]).map_err(crate::report::csv_err)?;
        for (i, &l) in self.log_rho.iter().enumerate() {
            let u = self.node_u(i);
            if u > self.u_max {
                break;
            }
            wtr.write_record([fmt_real(u), fmt_real(l)]).map_err(crate::report::csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// The nonzero root of `e^ξ = 1 + u·ξ` for `u > 1`, and 0 at `u = 1`.
///
/// The root lies to the right of `log u`, where `e^ξ − 1 − uξ` is minimal.
/// Newton steps start from `log u + log log u` (u ≥ e) or `2(u − 1)`, and
/// fall back to bisection whenever they leave the bracket.
pub fn xi(u: f64) -> Result<XiValue> {
    if !(u >= 1.0) || !u.is_finite() {
        return domain(format!("xi requires finite u >= 1, got {u}"));
    }
    if u == 1.0 {
        return Ok(XiValue { u, xi: 0.0, residual: 0.0 });
    }
    let g = |x: f64| x.exp_m1() - u * x;
    let mut lo = u.ln();
    let seed = if u >= std::f64::consts::E {
        lo + lo.ln()
    } else {
        2.0 * (u - 1.0)
    };
    let mut hi = seed.max(2.0 * lo);
    while g(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = if seed > lo && seed < hi { seed } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let gx = g(x);
        if gx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = x.exp() - u;
        let mut next = x - gx / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - x).abs() <= 4.0 * f64::EPSILON * x;
        x = next;
        if done || hi - lo <= 4.0 * f64::EPSILON * x {
            break;
        }
    }
    Ok(XiValue { u, xi: x, residual: g(x).abs() })
}

/// The explicit terms `log u + log₂ u + log₂ u / log u` of the large-u
/// expansion of ξ(u).
pub fn xi_expansion(u: f64) -> Result<f64> {
    if !(u >= 10.0) {
        return domain(format!("xi expansion is only meaningful for u >= 10, got {u}"));
    }
    let l1 = u.ln();
    let l2 = l1.ln();
    Ok(l1 + l2 + l2 / l1)
}

fn int_exp_series(s: f64) -> f64 {
    // Σ s^k / (k·k!), all terms positive.
    let mut acc = CompensatedSum::new();
    let mut power_over_fact = 1.0;
    for k in 1..400 {
        power_over_fact *= s / k as f64;
        let term = power_over_fact / k as f64;
        acc.add(term);
        if term <= 1e-18 * acc.value() {
            break;
        }
    }
    acc.value()
}

/// I(s) = ∫_0^s (e^v − 1)/v dv.
pub fn int_exp(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return domain(format!("I(s) requires s >= 0, got {s}"));
    }
    if s > 700.0 {
        return range(format!("I(s) overflows double precision for s = {s}"));
    }
    if s <= INT_EXP_SERIES_MAX {
        return Ok(int_exp_series(s));
    }
    let tail = quad::integrate(|v: f64| v.exp_m1() / v, INT_EXP_SERIES_MAX, s, 0.0, 1e-14);
    Ok(int_exp_series(INT_EXP_SERIES_MAX) + tail)
}

/// ∫_1^u t ξ'(t) dt, computed by parts as `u·ξ(u) − ∫_1^u ξ(t) dt`.
pub fn xi_integral(u: f64) -> Result<f64> {
    let top = xi(u)?;
    if u == 1.0 {
        return Ok(0.0);
    }
    let area = quad::integrate_geometric(
        |t: f64| xi(t).map(|v| v.xi).unwrap_or(f64::NAN),
        1.0,
        u,
        2.0,
        1e-13,
    );
    Ok(u * top.xi - area)
}

/// log of `e^{γ − uξ(u) + ∫_1^u tξ'(t) dt} / √(2πu)`.
pub fn rho_asymptotic(u: f64) -> Result<f64> {
    if !(u >= 2.0) {
        return domain(format!("the rho asymptotic is evaluated for u >= 2, got {u}"));
    }
    let x = xi(u)?.xi;
    Ok(EULER_GAMMA - u * x + xi_integral(u)? - 0.5 * (2.0 * std::f64::consts::PI * u).ln())
}
