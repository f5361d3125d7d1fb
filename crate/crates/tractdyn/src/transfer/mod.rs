//! The transfer operator `L_t𝟙(w) = Σ |φ'(ξ)/φ(ξ)|^t` over `ξ ∈ exp^{-1}(w)`,
//! its iterates, and the pressure of an entire function.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{bisect, line_fit, Bracket};
use crate::tract::{Spacing, TractAtlas, TractBranch};
use crate::Complex;

/// Default largest `|k|` in a single transfer sum.
pub const DEFAULT_K_BUDGET: u64 = (1 << 17) - 1;
/// A block below this fraction of the running sum ends the summation.
pub const STOP_FRACTION: f64 = 1e-10;
/// Consecutive non-decreasing blocks that signal divergence.
pub const DIVERGENCE_BLOCKS: usize = 4;
/// Cap on the block ratio used by the tail bound.
pub const RATIO_CAP: f64 = 0.9;
/// Default per-level `|k|` range of the iterated operator.
pub const DEFAULT_BRANCH_BUDGET: u64 = 15;
/// Largest `|k|` range accepted per level.
pub const MAX_BRANCH_BUDGET: u64 = 512;
/// Deepest iterate supported.
pub const MAX_LEVELS: usize = 4;
/// Default cap on the number of tree nodes.
pub const DEFAULT_NODE_BUDGET: u128 = 1 << 22;
/// Bracket width for the Bowen zero.
pub const BOWEN_WIDTH: f64 = 0.02;
/// Upper end of the Bowen-zero search interval.
pub const BOWEN_MAX: f64 = 2.5;

/// Logarithms of `w`: `ξ_k = log|w| + i(arg w + 2πk)`, from `log_w = ξ_0`.
fn xi_k(log_w: Complex, k: i64) -> Complex {
    Complex::new(log_w.re, log_w.im + 2.0 * std::f64::consts::PI * k as f64)
}

/// `φ(ξ)` and `log|φ'(ξ)/φ(ξ)|`, the log-weight of one preimage.
fn preimage(branch: &TractBranch, xi: Complex) -> Result<(Complex, f64)> {
    let (z, d) = branch.phi_with_derivative_spaced(xi, Spacing::Sparse)?;
    let (z2, d2) = (z.norm_sqr(), d.norm_sqr());
    if z2 >= f64::MIN_POSITIVE && d2 >= f64::MIN_POSITIVE && z2.is_finite() && d2.is_finite() {
        return Ok((z, 0.5 * (d2.ln() - z2.ln())));
    }
    // squared norms under- or overflow here
    if z.norm() < 1e-300 {
        return Err(Error::ZeroDenominator);
    }
    Ok((z, d.norm().ln() - z.norm().ln()))
}

/// The `k` values of dyadic block `n`: `{0}` for `n = 0`, otherwise
/// `2^{n-1} ≤ |k| < 2^n`, negative before positive.
fn block_ks(n: usize) -> Vec<i64> {
    if n == 0 {
        return vec![0];
    }
    let (lo, hi) = (1i64 << (n - 1), 1i64 << n);
    (lo..hi).map(|k| -k).rev().chain(lo..hi).collect()
}

/// Blocks that fit completely inside `|k| ≤ k_budget`.
fn block_count(k_budget: u64) -> usize {
    (64 - (k_budget + 1).leading_zeros() - 1) as usize + 1
}

/// Sum of block `n` over every tract, in the order (tract, k).
fn block_sum(atlas: &TractAtlas, t: f64, w: Complex, n: usize) -> Result<(f64, usize)> {
    let ks = block_ks(n);
    let log_w = w.ln();
    let jobs: Vec<(usize, i64)> = (0..atlas.tracts.len()).flat_map(|i| ks.iter().map(move |&k| (i, k))).collect();
    let terms: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, k)| preimage(&atlas.tracts[i], xi_k(log_w, k)).map(|(_, lw)| (t * lw).exp()))
        .collect::<Result<_>>()?;
    Ok((terms.iter().sum(), terms.len()))
}

/// One evaluation of `L_t𝟙(w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferSample {
    pub w: Complex,
    pub t: f64,
    /// Sum of `blocks`.
    pub value: f64,
    pub terms_used: usize,
    /// Last block times `1/(1 - ratio)`, ratio the last block quotient capped at 0.9.
    pub tail_estimate: f64,
    /// Dyadic block sums, block `n` covering `2^{n-1} ≤ |k| < 2^n`.
    pub blocks: Vec<f64>,
}

fn check_point(atlas: &TractAtlas, t: f64, w: Complex) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("exponent t = {t} must be positive")));
    }
    if !(w.norm() > atlas.radius) {
        return Err(Error::InvalidInput(format!("|w| = {} must exceed R = {}", w.norm(), atlas.radius)));
    }
    Ok(())
}

/// `L_t𝟙(w)` summed block by block over `|k| ≤ k_budget`.
///
/// Only complete dyadic blocks are summed, so the effective range is
/// `k_budget` rounded down to `2^N - 1`. Summation stops early once a
/// block falls below [`STOP_FRACTION`] of the running sum while blocks
/// decrease; [`DIVERGENCE_BLOCKS`] non-decreasing blocks in a row raise
/// [`Error::DivergenceDetected`].
pub fn transfer_apply_point(atlas: &TractAtlas, t: f64, w: Complex, k_budget: u64) -> Result<TransferSample> {
    check_point(atlas, t, w)?;
    let mut blocks: Vec<f64> = Vec::new();
    let mut terms_used = 0;
    let mut rising = 0;
    for n in 0..block_count(k_budget) {
        let (b, count) = block_sum(atlas, t, w, n)?;
        terms_used += count;
        blocks.push(b);
        if n == 0 {
            continue;
        }
        let prev = blocks[n - 1];
        if b >= prev {
            rising += 1;
            if rising >= DIVERGENCE_BLOCKS {
                return Err(Error::DivergenceDetected { block: n });
            }
        } else {
            rising = 0;
            if b < STOP_FRACTION * blocks.iter().sum::<f64>() {
                break;
            }
        }
    }
    let value = blocks.iter().sum();
    let last = *blocks.last().unwrap();
    let ratio = match blocks.len() {
        1 => RATIO_CAP,
        n => (last / blocks[n - 2]).min(RATIO_CAP),
    };
    Ok(TransferSample { w, t, value, terms_used, tail_estimate: last / (1.0 - ratio), blocks })
}

/// Block `n` of the dyadic decomposition and its growth exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicBlock {
    pub n: usize,
    pub sum: f64,
    /// `log₂(sum_n / sum_{n-1})`, to be compared with `1 - t + β̂`; `NaN` for `n = 0`.
    pub exponent: f64,
}

/// Block sums of `L_t𝟙(w)` for `n = 0..blocks`, without early stopping or
/// divergence detection.
pub fn transfer_dyadic_profile(atlas: &TractAtlas, t: f64, w: Complex, blocks: usize) -> Result<Vec<DyadicBlock>> {
    check_point(atlas, t, w)?;
    let sums: Vec<f64> = (0..blocks).map(|n| block_sum(atlas, t, w, n).map(|(b, _)| b)).collect::<Result<_>>()?;
    Ok(sums
        .iter()
        .enumerate()
        .map(|(n, &sum)| {
            let exponent = if n == 0 { f64::NAN } else { (sum / sums[n - 1]).log2() };
            DyadicBlock { n, sum, exponent }
        })
        .collect())
}

/// Log-weights `log Π |φ'/φ|` of an `n`-level preimage tree, kept per level so
/// that `Lⁿ_t𝟙(w)` can be formed for any `t`.
///
/// Each level takes the preimages with `|k| ≤ branch_budget` in every tract
/// and keeps those with `|z| > R`, so the tree is that of `f` restricted to
/// the part of its tracts outside the disk. For disjoint-type functions no
/// preimage is dropped. Level 1 agrees with [`transfer_apply_point`] whenever
/// every preimage of `w` lies outside the disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferTree {
    pub w: Complex,
    pub branch_budget: u64,
    /// `levels[l-1]` holds the depth-`l` log-weights in canonical order.
    pub levels: Vec<Vec<f64>>,
}

impl TransferTree {
    pub fn build(atlas: &TractAtlas, w: Complex, n: usize, branch_budget: u64, node_budget: u128) -> Result<Self> {
        if n == 0 || n > MAX_LEVELS {
            return Err(Error::InvalidInput(format!("depth {n} must lie in 1..={MAX_LEVELS}")));
        }
        if branch_budget > MAX_BRANCH_BUDGET {
            return Err(Error::InvalidInput(format!("branch budget {branch_budget} exceeds {MAX_BRANCH_BUDGET}")));
        }
        if !(w.norm() > atlas.radius) {
            return Err(Error::InvalidInput(format!("|w| = {} must exceed R = {}", w.norm(), atlas.radius)));
        }
        let fan = atlas.tracts.len() as u128 * (2 * branch_budget as u128 + 1);
        let needed: u128 = (1..=n as u32).map(|l| fan.pow(l)).sum();
        if needed > node_budget {
            return Err(Error::BudgetExceeded { needed, budget: node_budget });
        }
        let b = branch_budget as i64;
        let mut frontier = vec![(w, 0.0)];
        let mut levels = Vec::with_capacity(n);
        for _ in 0..n {
            let children: Vec<Vec<(Complex, f64)>> = frontier
                .par_iter()
                .map(|&(z, lw)| {
                    let mut out = Vec::with_capacity(fan as usize);
                    let log_z = z.ln();
                    for branch in &atlas.tracts {
                        for k in -b..=b {
                            let (child, step) = preimage(branch, xi_k(log_z, k))?;
                            if child.norm() > atlas.radius {
                                out.push((child, lw + step));
                            }
                        }
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?;
            frontier = children.into_iter().flatten().collect();
            levels.push(frontier.iter().map(|(_, lw)| *lw).collect());
        }
        Ok(TransferTree { w, branch_budget, levels })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// `Lˡ_t𝟙(w)` for `l = 1..=depth`.
    pub fn level_sums(&self, t: f64) -> Vec<f64> {
        self.levels.iter().map(|lv| lv.iter().map(|lw| (t * lw).exp()).sum()).collect()
    }

    /// Slope of `log Lˡ_t𝟙(w)` against `l`.
    pub fn pressure(&self, t: f64) -> EntirePressure {
        let log_sums: Vec<f64> = self.level_sums(t).iter().map(|s| s.ln()).collect();
        let ls: Vec<f64> = (1..=log_sums.len()).map(|l| l as f64).collect();
        let (slope, residual) = if ls.len() < 2 {
            (log_sums[0], 0.0)
        } else {
            let fit = line_fit(&ls, &log_sums);
            (fit.slope, fit.residual)
        };
        EntirePressure { t, value: slope, residual, log_sums }
    }
}

/// `Lⁿ_t𝟙(w)` from an `n`-level tree.
pub fn transfer_iterate(atlas: &TractAtlas, t: f64, w: Complex, n: usize, branch_budget: u64) -> Result<f64> {
    check_point(atlas, t, w)?;
    let tree = TransferTree::build(atlas, w, n, branch_budget, DEFAULT_NODE_BUDGET)?;
    Ok(tree.level_sums(t)[n - 1])
}

/// Pressure estimate at one `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntirePressure {
    pub t: f64,
    /// Least-squares slope of `log Lˡ_t𝟙(w)` over `l = 1..=n`.
    pub value: f64,
    pub residual: f64,
    pub log_sums: Vec<f64>,
}

/// `P̂(t)` from levels `1..=n_max` (default 3) of the iterated operator.
pub fn pressure_entire(
    atlas: &TractAtlas,
    t: f64,
    w: Complex,
    n_max: usize,
    branch_budget: u64,
) -> Result<EntirePressure> {
    check_point(atlas, t, w)?;
    Ok(TransferTree::build(atlas, w, n_max, branch_budget, DEFAULT_NODE_BUDGET)?.pressure(t))
}

/// `P̂` on a grid of exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntirePressureCurve {
    pub t_grid: Vec<f64>,
    pub n_levels: usize,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub branch_budget: u64,
    /// Nodes per level of the tree behind the curve.
    pub level_nodes: Vec<usize>,
}

impl EntirePressureCurve {
    pub fn from_tree(tree: &TransferTree, t_grid: &[f64]) -> Result<Self> {
        if t_grid.is_empty() || t_grid.windows(2).any(|s| s[1] <= s[0]) {
            return Err(Error::InvalidGrid("t grid must be non-empty and increasing".into()));
        }
        let rows: Vec<EntirePressure> = t_grid.iter().map(|&t| tree.pressure(t)).collect();
        Ok(EntirePressureCurve {
            t_grid: t_grid.to_vec(),
            n_levels: tree.depth(),
            values: rows.iter().map(|r| r.value).collect(),
            residuals: rows.iter().map(|r| r.residual).collect(),
            branch_budget: tree.branch_budget,
            level_nodes: tree.levels.iter().map(Vec::len).collect(),
        })
    }

    /// Non-increasing in `t` up to `1e-6`.
    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|v| v[1] <= v[0] + 1e-6)
    }
}

/// Zero of `P` on `(theta + 0.05, 2.5]`, bisected to width [`BOWEN_WIDTH`].
pub fn bowen_zero_from<P: Fn(f64) -> f64>(pressure: P, theta: f64) -> Result<Bracket> {
    let lo = theta + 0.05;
    let (p_lo, p_hi) = (pressure(lo), pressure(BOWEN_MAX));
    if !(p_lo > 0.0) || !(p_hi < 0.0) {
        return Err(Error::NoSignChange { lo, hi: BOWEN_MAX, f_lo: p_lo, f_hi: p_hi });
    }
    bisect(|t| Ok(pressure(t)), lo, BOWEN_MAX, BOWEN_WIDTH)
}

/// Hyperbolic-dimension estimate: the zero of `P̂` above `Θ̂_f`.
pub fn bowen_zero_entire(tree: &TransferTree, theta: f64) -> Result<Bracket> {
    bowen_zero_from(|t| tree.pressure(t).value, theta)
}

/// Decay of `L_t𝟙` along `w = e^s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub t: f64,
    pub p_exponent: f64,
    /// `(s, L_t𝟙(e^s))`.
    pub values: Vec<(f64, f64)>,
    /// `L_t𝟙(e^s)·s^{1/p}`.
    pub scaled: Vec<f64>,
    /// Running maximum of `scaled`.
    pub running_sup: Vec<f64>,
    /// The last step raises the running sup by less than 10%.
    pub stable: bool,
    /// `max/min` of `L_t𝟙(e^s)·s^{t-1}` over the grid.
    pub band: f64,
}

/// Checks that `L_t𝟙(e^s)·s^{1/p}` stays bounded along `s_grid`.
pub fn decay_check(
    atlas: &TractAtlas,
    t: f64,
    p_exponent: f64,
    theta: f64,
    s_grid: &[f64],
    k_budget: u64,
) -> Result<DecayReport> {
    if !(t > 0.0) || !(p_exponent > 1.0) {
        return Err(Error::InvalidInput(format!("need t > 0 and p > 1 (t = {t}, p = {p_exponent})")));
    }
    if !(1.0 / p_exponent < t / theta - 1.0) {
        return Err(Error::InvalidInput(format!(
            "1/p = {} must be below t/Θ - 1 = {}",
            1.0 / p_exponent,
            t / theta - 1.0
        )));
    }
    if s_grid.len() < 2 || s_grid.windows(2).any(|s| s[1] <= s[0]) {
        return Err(Error::InvalidGrid("s grid needs two increasing values".into()));
    }
    let values: Vec<(f64, f64)> = s_grid
        .iter()
        .map(|&s| transfer_apply_point(atlas, t, Complex::new(s.exp(), 0.0), k_budget).map(|x| (s, x.value)))
        .collect::<Result<_>>()?;
    let scaled: Vec<f64> = values.iter().map(|(s, v)| v * s.powf(1.0 / p_exponent)).collect();
    let running_sup: Vec<f64> = scaled
        .iter()
        .scan(f64::NEG_INFINITY, |m, v| {
            *m = m.max(*v);
            Some(*m)
        })
        .collect();
    let n = running_sup.len();
    let stable = running_sup[n - 1] <= 1.1 * running_sup[n - 2];
    let linear: Vec<f64> = values.iter().map(|(s, v)| v * s.powf(t - 1.0)).collect();
    let hi = linear.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = linear.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(DecayReport { t, p_exponent, values, scaled, running_sup, stable, band: hi / lo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearizer::EntireFunction;
    use crate::tract::find_tracts;

    fn exp_atlas() -> TractAtlas {
        find_tracts(&EntireFunction::exp(), std::f64::consts::E).unwrap()
    }

    #[test]
    fn blocks_partition_the_range() {
        assert_eq!(block_ks(0), vec![0]);
        assert_eq!(block_ks(1), vec![-1, 1]);
        assert_eq!(block_ks(2), vec![-3, -2, 2, 3]);
        assert_eq!(block_count(0), 1);
        assert_eq!(block_count(1), 2);
        assert_eq!(block_count(6), 3);
        assert_eq!(block_count(7), 4);
    }

    #[test]
    fn exp_closed_form() {
        let atlas = exp_atlas();
        let w = Complex::new(2f64.exp(), 0.0);
        let s = transfer_apply_point(&atlas, 2.0, w, DEFAULT_K_BUDGET).unwrap();
        let coth1 = 1.0 / 1f64.tanh();
        assert!((s.value - coth1 / 4.0).abs() < 1e-6, "{}", s.value);
        assert_eq!(s.terms_used, 2 * DEFAULT_K_BUDGET as usize + 1);
        assert!((s.value - s.blocks.iter().sum::<f64>()).abs() <= 1e-12 * s.value);
    }

    #[test]
    fn slow_exponent_diverges() {
        let atlas = exp_atlas();
        let w = Complex::new(2f64.exp(), 0.0);
        let e = transfer_apply_point(&atlas, 0.5, w, DEFAULT_K_BUDGET).unwrap_err();
        assert_eq!(e.kind(), "DivergenceDetected");
    }

    #[test]
    fn first_level_matches_single_sum() {
        let atlas = exp_atlas();
        // every preimage of w has modulus above e
        let w = Complex::new(3f64.exp(), 1.0);
        let single = transfer_apply_point(&atlas, 1.7, w, 31).unwrap().value;
        let iterated = transfer_iterate(&atlas, 1.7, w, 1, 31).unwrap();
        assert!((single - iterated).abs() <= 1e-12 * single);
    }

    #[test]
    fn affine_bowen_root() {
        let b = bowen_zero_from(|t| (1.0 - t) * 2f64.ln(), 0.5).unwrap();
        assert!((b.root - 1.0).abs() < 1e-3);
        assert!(b.width() <= BOWEN_WIDTH);
    }

    #[test]
    fn rejects_zero_exponent_in_decay() {
        let e = decay_check(&exp_atlas(), 0.0, 2.0, 1.0, &[2.0, 4.0], 63).unwrap_err();
        assert_eq!(e.kind(), "InvalidInput");
    }
}
