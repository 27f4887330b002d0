// SPDX-License-Identifier: Apache-2.0

//! One-dimensional Gauss rules and deterministic summation.

use gauss_quad::{GaussJacobi, GaussLaguerre, GaussLegendre};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Radial rule used in `t = ‖z‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialRule {
    /// Jacobi when the weight carries a non-integer `(1−t)^s`, Legendre on
    /// other bounded domains, Laguerre on the full space.
    Auto,
    GaussLegendre,
    GaussJacobi,
    GaussLaguerre,
}

/// Product quadrature descriptor for Gram assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureScheme {
    pub radial: RadialRule,
    /// Radial nodes; `None` picks 64 (bounded) or 96 (full space).
    pub radial_nodes: Option<usize>,
    /// Equispaced nodes per angle; `None` picks `2d + 8`.
    pub angular_nodes: Option<usize>,
    /// Gauss-Legendre nodes per collapsed simplex direction (balls, `n ≥ 2`).
    pub simplex_nodes: usize,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        QuadratureScheme {
            radial: RadialRule::Auto,
            radial_nodes: None,
            angular_nodes: None,
            simplex_nodes: 40,
        }
    }
}

/// Sums in a fixed binary tree so the result does not depend on how the
/// inputs were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    match xs.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum_complex(a) + pairwise_sum_complex(b)
        }
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Result<Vec<(f64, f64)>> {
    let rule = GaussLegendre::new(n)
        .map_err(|e| Error::IncompatibleScheme(format!("Gauss-Legendre({n}): {e}")))?;
    Ok(rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| ((x + 1.0) / 2.0, w / 2.0))
        .collect())
}

/// Gauss-Jacobi nodes and weights on `[0, 1]` for the weight `(1 − t)^alpha`.
pub fn gauss_jacobi_unit(n: usize, alpha: f64) -> Result<Vec<(f64, f64)>> {
    let rule = GaussJacobi::new(n, alpha, 0.0)
        .map_err(|e| Error::IncompatibleScheme(format!("Gauss-Jacobi({n}, {alpha}): {e}")))?;
    let scale = 0.5f64.powf(alpha + 1.0);
    Ok(rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| ((x + 1.0) / 2.0, w * scale))
        .collect())
}

/// `L_n(x)` and `L_{n−1}(x)` by the three-term recurrence in double-double
/// arithmetic; plain f64 loses about two digits near the smallest roots.
fn laguerre_pair(n: usize, x: TwoFloat) -> (TwoFloat, TwoFloat) {
    let one = TwoFloat::from(1.0);
    if n == 0 {
        return (one, TwoFloat::from(0.0));
    }
    let (mut prev, mut cur) = (one, one - x);
    for k in 1..n {
        let kf = TwoFloat::from(k as f64);
        let next = ((TwoFloat::from(2.0 * k as f64 + 1.0) - x) * cur - kf * prev)
            / TwoFloat::from(k as f64 + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Gauss-Laguerre nodes and weights for `∫₀^∞ f(u) e^{−u} du`.
///
/// Golub-Welsch nodes are polished by Newton steps on `L_n`, and the weights
/// come from `w = u / ((n+1)² L_{n+1}(u)²)`, which keeps full relative
/// accuracy in the tiny weights at large nodes.
pub fn gauss_laguerre(n: usize) -> Result<Vec<(f64, f64)>> {
    let rule = GaussLaguerre::new(n, 0.0)
        .map_err(|e| Error::IncompatibleScheme(format!("Gauss-Laguerre({n}): {e}")))?;
    let nf = TwoFloat::from(n as f64);
    let mut out = Vec::with_capacity(n);
    for &(x0, _) in rule.as_node_weight_pairs() {
        let mut x = TwoFloat::from(x0);
        for _ in 0..8 {
            let (ln, lnm1) = laguerre_pair(n, x);
            // x L_n'(x) = n (L_n − L_{n−1})
            let deriv = nf * (ln - lnm1) / x;
            let step = ln / deriv;
            x -= step;
            if f64::from(step).abs() <= 1e-30 * f64::from(x) {
                break;
            }
        }
        let (lnp1, _) = laguerre_pair(n + 1, x);
        let np1 = TwoFloat::from(n as f64 + 1.0);
        let w = x / (np1 * np1 * lnp1 * lnp1);
        out.push((f64::from(x), f64::from(w)));
    }
    Ok(out)
}
