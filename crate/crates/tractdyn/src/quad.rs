//! Adaptive composite Gauss–Legendre quadrature for vector-valued integrands.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 10;
const MAX_DEPTH: u32 = 40;

fn rule() -> &'static ([f64; ORDER], [f64; ORDER]) {
    static RULE: OnceLock<([f64; ORDER], [f64; ORDER])> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
fn gauss_legendre<const N: usize>(n: usize) -> ([f64; N], [f64; N]) {
    let mut nodes = [0.0; N];
    let mut weights = [0.0; N];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Per-component integrals with the `(node, weight)` pairs that produced them.
type RuleOutput = (Vec<f64>, Vec<(f64, f64)>);

/// One Gauss–Legendre panel: its integral and its `(node, weight)` pairs.
fn panel<F>(f: &mut F, a: f64, b: f64, dim: usize) -> Result<RuleOutput>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = vec![0.0; dim];
    let mut points = Vec::with_capacity(ORDER);
    for (x, w) in nodes.iter().zip(weights) {
        let at = mid + half * x;
        let v = f(at)?;
        for (s, vi) in acc.iter_mut().zip(&v) {
            *s += w * half * vi;
        }
        points.push((at, w * half));
    }
    Ok((acc, points))
}

/// Integrates every component of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Panels are bisected until the one-panel and two-half-panel estimates agree
/// to the panel's share of `tol` in every component. Nodes never touch the
/// endpoints. The evaluation order is fixed, so results are reproducible.
pub fn integrate<F>(f: F, a: f64, b: f64, dim: usize, tol: f64, initial: usize) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    adaptive_rule(f, a, b, dim, (tol, 0.0), initial).map(|(total, _)| total)
}

/// Like [`integrate`], but also returns the accepted quadrature rule as
/// `(node, weight)` pairs so that other integrands sampled at the same nodes
/// can reuse it.
///
/// `tol = (abs, rel)`: a panel is accepted once its two estimates agree to
/// its share of `abs` or to `rel` times its own value, whichever is larger.
/// The relative floor keeps noisy integrands from refining to full depth.
pub fn adaptive_rule<F>(mut f: F, a: f64, b: f64, dim: usize, tol: (f64, f64), initial: usize) -> Result<RuleOutput>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    if !(b > a) || initial == 0 {
        return Err(Error::InvalidInput(format!("bad quadrature interval [{a}, {b}]")));
    }
    let width = b - a;
    let mut total = vec![0.0; dim];
    let mut accepted = Vec::new();
    let h = width / initial as f64;
    for i in 0..initial {
        let lo = a + h * i as f64;
        let hi = if i + 1 == initial { b } else { lo + h };
        let (coarse, _) = panel(&mut f, lo, hi, dim)?;
        let mut stack = vec![(lo, hi, coarse, 0u32)];
        while let Some((lo, hi, coarse, depth)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let (left, left_nodes) = panel(&mut f, lo, mid, dim)?;
            let (right, right_nodes) = panel(&mut f, mid, hi, dim)?;
            let share = tol.0 * (hi - lo) / width;
            let converged = coarse
                .iter()
                .zip(left.iter().zip(&right))
                .all(|(c, (l, r))| (c - (l + r)).abs() <= share.max(tol.1 * (l + r).abs()));
            if converged || depth >= MAX_DEPTH {
                for (t, (l, r)) in total.iter_mut().zip(left.iter().zip(&right)) {
                    *t += l + r;
                }
                accepted.extend(left_nodes);
                accepted.extend(right_nodes);
            } else {
                // right pushed first so the left half is refined first
                stack.push((mid, hi, right, depth + 1));
                stack.push((lo, mid, left, depth + 1));
            }
        }
    }
    Ok((total, accepted))
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    integrate(|x| f(x).map(|v| vec![v]), a, b, 1, tol, 1).map(|v| v[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let (_, w) = rule();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomial_exact() {
        let v = integrate_scalar(|x| Ok(x.powi(7) - 3.0 * x * x), 0.0, 2.0, 1e-12).unwrap();
        assert!((v - (32.0 - 8.0)).abs() < 1e-11);
    }

    #[test]
    fn peaked_integrand() {
        // integral of 1/(x^2 + eps^2) over [-1,1] = 2 atan(1/eps)/eps
        let eps: f64 = 1e-3;
        let exact = 2.0 * (1.0 / eps).atan() / eps;
        let v = integrate_scalar(|x| Ok(1.0 / (x * x + eps * eps)), -1.0, 1.0, 1e-6).unwrap();
        assert!((v - exact).abs() < 1e-5, "{v} vs {exact}");
    }
}
