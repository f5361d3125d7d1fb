use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{canonical_cmp, preimages, Polynomial};
use crate::error::{Error, Result};
use crate::fit::{bisect, line_fit, Bracket};
use crate::Complex;

/// Default cap on the number of nodes at the deepest tree level.
pub const DEFAULT_NODE_BUDGET: u128 = 1 << 22;

const DEGENERATE: f64 = 1e-300;

/// A point of `p^{-n}(w)` with the derivative of `p^n` there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreimageNode {
    pub point: Complex,
    pub cumulative_derivative: Complex,
    pub depth: usize,
}

fn check_budget(p: &Polynomial, n: usize, budget: u128) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("tree depth must be at least 1".into()));
    }
    let needed = (p.degree() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(())
}

fn expand(p: &Polynomial, level: &[PreimageNode]) -> Result<Vec<PreimageNode>> {
    let children: Vec<Vec<PreimageNode>> = level
        .par_iter()
        .map(|node| {
            preimages(p, node.point).map(|zs| {
                zs.into_iter()
                    .map(|z| PreimageNode {
                        point: z,
                        cumulative_derivative: p.eval_with_derivative(z).1 * node.cumulative_derivative,
                        depth: node.depth + 1,
                    })
                    .collect()
            })
        })
        .collect::<Result<_>>()?;
    let mut next: Vec<PreimageNode> = children.into_iter().flatten().collect();
    next.sort_by(|a, b| canonical_cmp(&a.point, &b.point));
    Ok(next)
}

/// Depth-`n` preimages of `w` with chain-rule derivatives, canonically ordered.
pub fn preimage_tree(p: &Polynomial, w: Complex, n: usize) -> Result<Vec<PreimageNode>> {
    preimage_tree_with_budget(p, w, n, DEFAULT_NODE_BUDGET)
}

pub fn preimage_tree_with_budget(p: &Polynomial, w: Complex, n: usize, budget: u128) -> Result<Vec<PreimageNode>> {
    check_budget(p, n, budget)?;
    let mut level = vec![PreimageNode { point: w, cumulative_derivative: Complex::new(1.0, 0.0), depth: 0 }];
    for _ in 0..n {
        level = expand(p, &level)?;
    }
    Ok(level)
}

/// Per-level `log|(p^k)'|` values of a preimage tree, reusable across `t`.
#[derive(Debug, Clone)]
pub struct PressureTree {
    degree: usize,
    /// `levels[k-1]` holds the depth-`k` log-derivatives in canonical node order.
    levels: Vec<Vec<f64>>,
}

impl PressureTree {
    pub fn build(p: &Polynomial, w: Complex, n: usize, budget: u128) -> Result<Self> {
        check_budget(p, n, budget)?;
        let mut level = vec![PreimageNode { point: w, cumulative_derivative: Complex::new(1.0, 0.0), depth: 0 }];
        let mut levels = Vec::with_capacity(n);
        for _ in 0..n {
            level = expand(p, &level)?;
            let logs: Vec<f64> = level
                .iter()
                .map(|node| {
                    let m = node.cumulative_derivative.norm();
                    if m < DEGENERATE {
                        Err(Error::DegenerateDerivative(m))
                    } else {
                        Ok(m.ln())
                    }
                })
                .collect::<Result<_>>()?;
            levels.push(logs);
        }
        Ok(PressureTree { degree: p.degree(), levels })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `log Σ |(p^k)'|^{-t}` at depth `k` (1-based).
    pub fn log_level_sum(&self, t: f64, k: usize) -> f64 {
        let logs = &self.levels[k - 1];
        let top = logs.iter().map(|l| -t * l).fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = logs.iter().map(|l| (-t * l - top).exp()).sum();
        top + s.ln()
    }

    /// Level sums `Σ |(p^k)'|^{-t}` for `k = 1..=depth`.
    pub fn level_sums(&self, t: f64) -> Vec<f64> {
        (1..=self.depth()).map(|k| self.levels[k - 1].iter().map(|l| (-t * l).exp()).sum()).collect()
    }

    pub fn pressure(&self, t: f64) -> TreePressure {
        let per_depth: Vec<f64> = (1..=self.depth()).map(|k| self.log_level_sum(t, k) / k as f64).collect();
        let estimate = extrapolate(&per_depth);
        TreePressure { raw: *per_depth.last().unwrap(), per_depth, estimate }
    }
}

/// Finite-depth pressure values and their extrapolated limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreePressure {
    /// `(1/n) log Σ |(p^n)'|^{-t}` at the requested depth.
    pub raw: f64,
    /// The same quantity at every depth `1..=n`.
    pub per_depth: Vec<f64>,
    /// Growth rate of `log Σ` fitted over a window of four consecutive depths,
    /// maximised over the last three windows. The fit is Richardson
    /// extrapolation in `1/n`: it removes the `O(1/n)` offset left by the base
    /// point, and the window spans both parities of period-two oscillations.
    pub estimate: f64,
}

fn extrapolate(per_depth: &[f64]) -> f64 {
    let n = per_depth.len();
    if n < 2 {
        return per_depth[n - 1];
    }
    let window = n.min(4);
    let last = (n - window + 1).min(3);
    (0..last)
        .map(|shift| {
            let hi = n - shift;
            let ks: Vec<f64> = (hi - window + 1..=hi).map(|k| k as f64).collect();
            let ys: Vec<f64> = ks.iter().map(|&k| k * per_depth[k as usize - 1]).collect();
            line_fit(&ks, &ys).slope
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Tree pressure of `p` at `t`, base point `w`, depth `n`.
pub fn tree_pressure(p: &Polynomial, t: f64, w: Complex, n: usize) -> Result<TreePressure> {
    Ok(PressureTree::build(p, w, n, DEFAULT_NODE_BUDGET)?.pressure(t))
}

/// Per-level sums of the Poincaré series at `xi` for `N = 1..=n_max`.
pub fn poincare_series_partial(p: &Polynomial, t: f64, xi: Complex, n_max: usize) -> Result<Vec<f64>> {
    Ok(PressureTree::build(p, xi, n_max, DEFAULT_NODE_BUDGET)?.level_sums(t))
}

/// Sampled pressure function with the per-depth partials kept for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureCurve {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub depth_used: usize,
    /// `partials[i][k]` is the depth-`k+1` value at `t_grid[i]`.
    pub partials: Vec<Vec<f64>>,
}

pub fn pressure_curve(p: &Polynomial, w: Complex, depth: usize, t_grid: &[f64]) -> Result<PressureCurve> {
    if t_grid.is_empty() || t_grid.windows(2).any(|s| s[1] <= s[0]) {
        return Err(Error::InvalidGrid("t grid must be non-empty and increasing".into()));
    }
    let tree = PressureTree::build(p, w, depth, DEFAULT_NODE_BUDGET)?;
    let rows: Vec<TreePressure> = t_grid.iter().map(|&t| tree.pressure(t)).collect();
    Ok(PressureCurve {
        t_grid: t_grid.to_vec(),
        values: rows.iter().map(|r| r.estimate).collect(),
        depth_used: depth,
        partials: rows.into_iter().map(|r| r.per_depth).collect(),
    })
}

/// Zero of the extrapolated tree pressure on `[0.1, 2.0]`, base point at the
/// escape radius.
pub fn bowen_zero_poly(p: &Polynomial, depth: usize) -> Result<Bracket> {
    let w = Complex::new(p.escape_radius(), 0.0);
    let tree = PressureTree::build(p, w, depth, DEFAULT_NODE_BUDGET)?;
    bisect(|t| Ok(tree.pressure(t).estimate), 0.1, 2.0, 1e-4)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn square_tree_examples() {
        let p = Polynomial::parse("z^2").unwrap();
        let one = preimage_tree(&p, c(4.0, 0.0), 1).unwrap();
        assert_eq!(one.len(), 2);
        for node in &one {
            assert!((node.cumulative_derivative.norm() - 4.0).abs() < 1e-12);
        }
        let two = preimage_tree(&p, c(4.0, 0.0), 2).unwrap();
        assert_eq!(two.len(), 4);
        for node in &two {
            assert!((node.point.norm() - 2f64.sqrt()).abs() < 1e-12);
            assert!((node.cumulative_derivative.norm() - 8.0 * 2f64.sqrt()).abs() < 1e-11);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let p = Polynomial::parse("z^2").unwrap();
        let e = preimage_tree_with_budget(&p, c(4.0, 0.0), 5, 16).unwrap_err();
        assert_eq!(e.kind(), "BudgetExceeded");
    }

    #[test]
    fn critical_base_point_is_degenerate() {
        let p = Polynomial::parse("z^2-1").unwrap();
        let e = tree_pressure(&p, 1.0, c(-1.0, 0.0), 2).unwrap_err();
        assert_eq!(e.kind(), "DegenerateDerivative");
    }

    #[test]
    fn zero_temperature_counts_nodes() {
        let p = Polynomial::parse("z^2-1").unwrap();
        let tp = tree_pressure(&p, 0.0, c(3.0, 1.0), 8).unwrap();
        for v in &tp.per_depth {
            assert!((v - 2f64.ln()).abs() < 1e-12);
        }
        assert!((tp.estimate - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn square_pressure_estimate() {
        let p = Polynomial::parse("z^2").unwrap();
        let tp = tree_pressure(&p, 1.0, c(3.0, 0.0), 12).unwrap();
        assert!(tp.estimate.abs() < 1e-3, "{tp:?}");
    }

    #[test]
    fn poincare_first_level() {
        let p = Polynomial::parse("z^2").unwrap();
        let sums = poincare_series_partial(&p, 2.0, c(4.0, 0.0), 6).unwrap();
        assert!((sums[0] - 0.125).abs() < 1e-14);
        let counts = poincare_series_partial(&p, 0.0, c(4.0, 0.0), 6).unwrap();
        for (k, s) in counts.iter().enumerate() {
            assert_eq!(*s, 2f64.powi(k as i32 + 1));
        }
    }

    #[test]
    fn square_bowen_zero() {
        let p = Polynomial::parse("z^2").unwrap();
        let b = bowen_zero_poly(&p, 12).unwrap();
        assert!((b.root - 1.0).abs() < 0.01);
    }
}
