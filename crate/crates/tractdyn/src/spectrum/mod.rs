//! Integral means of the rescaled maps `φ_T` and the limit spectrum `β_∞`.

use std::collections::HashMap;
use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{bisect, line_fit, Bracket};
use crate::tract::{TractBranch, MIN_OFFSET};
use crate::Complex;

/// Absolute tolerance on `∫_I |φ_T'|^t dy`, split between the two intervals.
pub const QUAD_TOL: f64 = 1e-8;
/// Relative floor per quadrature panel; far out in a tract `log|φ'|` carries
/// rounding noise near `1e-7`.
pub const QUAD_REL_FLOOR: f64 = 1e-6;
/// Tolerance used for spectral comparisons in reports.
pub const SPECTRAL_TOL: f64 = 0.05;
/// Bracket width for `Θ̂_f`.
pub const ROOT_WIDTH: f64 = 1e-3;
/// Exponents whose integrands drive the adaptive refinement of a [`MeansTable`].
pub const REFERENCE_TS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];

const INTERVALS: [(f64, f64); 2] = [(-2.0, -1.0), (1.0, 2.0)];

/// Default geometric grid `T_j = 2^j`, `j = 3..=14`.
pub fn default_t_scales() -> Vec<f64> {
    (3..=14).map(|j| 2f64.powi(j)).collect()
}

/// `log|φ_T'(r + iy)|` at the nodes of an adaptive rule on `I`, so the
/// integral means can be formed for any `t` without new evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeansTable {
    pub t_scale: f64,
    pub r: f64,
    /// `(weight, log|φ_T'|)` per node.
    pub nodes: Vec<(f64, f64)>,
}

impl MeansTable {
    /// Refines the rule until every `t` in `ref_ts` meets [`QUAD_TOL`].
    pub fn build(branch: &TractBranch, t_scale: f64, r: f64, ref_ts: &[f64]) -> Result<Self> {
        Self::build_with_tolerance(branch, t_scale, r, ref_ts, QUAD_TOL)
    }

    pub fn build_with_tolerance(
        branch: &TractBranch,
        t_scale: f64,
        r: f64,
        ref_ts: &[f64],
        quad_tol: f64,
    ) -> Result<Self> {
        if !(quad_tol > 0.0) {
            return Err(Error::InvalidInput(format!("quadrature tolerance {quad_tol} must be positive")));
        }
        if !(t_scale >= 1.0) {
            return Err(Error::InvalidGrid(format!("scale T = {t_scale} must be at least 1")));
        }
        if !(r > 0.0 && r < 1.0) || t_scale * r < MIN_OFFSET {
            return Err(Error::InvalidInput(format!("r = {r} must lie in (0, 1) with T·r ≥ {MIN_OFFSET}")));
        }
        let log_norm = branch.phi(Complex::new(t_scale, 0.0))?.norm().ln();
        let mut seen: HashMap<u64, f64> = HashMap::new();
        let mut log_speed = |y: f64| -> Result<f64> {
            if let Some(v) = seen.get(&y.to_bits()) {
                return Ok(*v);
            }
            let (_, d) = branch.phi_with_derivative(Complex::new(r, y) * t_scale)?;
            let v = t_scale.ln() + d.norm().ln() - log_norm;
            seen.insert(y.to_bits(), v);
            Ok(v)
        };
        let mut nodes = Vec::new();
        for (a, b) in INTERVALS {
            let (_, rule) = crate::quad::adaptive_rule(
                |y| log_speed(y).map(|l| ref_ts.iter().map(|t| (t * l).exp()).collect()),
                a,
                b,
                ref_ts.len(),
                (0.5 * quad_tol, QUAD_REL_FLOOR),
                4,
            )?;
            for (y, w) in rule {
                nodes.push((w, log_speed(y)?));
            }
        }
        Ok(MeansTable { t_scale, r, nodes })
    }

    /// `∫_I |φ_T'(r + iy)|^t dy`.
    pub fn integral(&self, t: f64) -> f64 {
        self.nodes.iter().map(|(w, l)| w * (t * l).exp()).sum()
    }

    /// `β_{φ_T}(r, t) = log ∫_I |φ_T'|^t dy / log(1/r)`.
    pub fn beta(&self, t: f64) -> f64 {
        self.integral(t).ln() / (1.0 / self.r).ln()
    }
}

/// `β_{φ_T}(r, t)` by adaptive Gauss–Legendre on `I = [-2,-1] ∪ [1,2]`.
pub fn integral_means(branch: &TractBranch, t_scale: f64, r: f64, t: f64) -> Result<f64> {
    Ok(MeansTable::build(branch, t_scale, r, &[t])?.beta(t))
}

/// `β_{φ_T}(r, t)` at `T = R/r` for each `R`; the values should agree.
pub fn r_independence(branch: &TractBranch, r: f64, t: f64, radii: &[f64]) -> Result<Vec<f64>> {
    radii.par_iter().map(|big_r| integral_means(branch, big_r / r, r, t)).collect()
}

/// Limit-spectrum estimate at one `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub t: f64,
    /// Intercept of the line through `(1/log T_j, β_j)` over the top half of the grid.
    pub estimate: f64,
    /// `max_j β_j` over the top half of the grid.
    pub raw_max: f64,
    /// `max - min` of `β_j` over the top half of the grid.
    pub drift: f64,
    /// `β_j = β_{φ_{T_j}}(1/T_j, t)` for the whole grid.
    pub sequence: Vec<f64>,
}

/// Means tables along the diagonal `r = 1/T` for a grid of scales.
#[derive(Debug, Clone)]
pub struct SpectrumSampler {
    pub t_scales: Vec<f64>,
    pub quad_tol: f64,
    tables: Vec<MeansTable>,
}

fn check_scales(t_scales: &[f64]) -> Result<()> {
    if t_scales.len() < 4 {
        return Err(Error::InvalidGrid("need at least four scales T".into()));
    }
    if t_scales.windows(2).any(|w| w[1] <= w[0]) || t_scales[0] < 1.0 / MIN_OFFSET.sqrt() {
        return Err(Error::InvalidGrid("scales T must increase and start above 1/√ε".into()));
    }
    Ok(())
}

impl SpectrumSampler {
    pub fn new(branch: &TractBranch, t_scales: &[f64]) -> Result<Self> {
        Self::with_tolerance(branch, t_scales, QUAD_TOL)
    }

    pub fn with_tolerance(branch: &TractBranch, t_scales: &[f64], quad_tol: f64) -> Result<Self> {
        check_scales(t_scales)?;
        let tables = t_scales
            .par_iter()
            .map(|&t_scale| MeansTable::build_with_tolerance(branch, t_scale, 1.0 / t_scale, &REFERENCE_TS, quad_tol))
            .collect::<Result<_>>()?;
        Ok(SpectrumSampler { t_scales: t_scales.to_vec(), quad_tol, tables })
    }

    pub fn beta(&self, t: f64) -> BetaEstimate {
        let sequence: Vec<f64> = self.tables.iter().map(|tab| tab.beta(t)).collect();
        let top = self.t_scales.len() / 2;
        let xs: Vec<f64> = self.t_scales[top..].iter().map(|s| 1.0 / s.ln()).collect();
        let ys = &sequence[top..];
        let estimate = line_fit(&xs, ys).intercept;
        let raw_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let raw_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        BetaEstimate { t, estimate, raw_max, drift: raw_max - raw_min, sequence }
    }

    /// `b̂_∞(t) = β̂_∞(t) - t + 1`.
    pub fn b(&self, t: f64) -> f64 {
        self.beta(t).estimate - t + 1.0
    }

    pub fn theta(&self) -> Result<Bracket> {
        theta_from(|t| self.b(t))
    }

    pub fn curve(&self, t_grid: &[f64]) -> Result<SpectrumCurve> {
        spectrum_curve(std::slice::from_ref(self), t_grid)
    }
}

/// `β̂_∞ = max_j β̂_{∞,j}` over the tracts sampled by `samplers`, which must
/// share one scale grid. Each row keeps the raw values of the maximising tract.
pub fn spectrum_curve(samplers: &[SpectrumSampler], t_grid: &[f64]) -> Result<SpectrumCurve> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("t grid must be non-empty and increasing".into()));
    }
    let first = samplers.first().ok_or_else(|| Error::InvalidInput("no tracts to sample".into()))?;
    if samplers.iter().any(|s| s.t_scales != first.t_scales) {
        return Err(Error::InvalidGrid("tracts sampled on different scale grids".into()));
    }
    let rows: Vec<BetaEstimate> = t_grid
        .iter()
        .map(|&t| samplers.iter().map(|s| s.beta(t)).max_by(|a, b| a.estimate.total_cmp(&b.estimate)).unwrap())
        .collect();
    let theta = theta_from(|t| samplers.iter().map(|s| s.b(t)).fold(f64::NEG_INFINITY, f64::max)).ok();
    Ok(SpectrumCurve {
        t_grid: t_grid.to_vec(),
        beta_inf: rows.iter().map(|r| r.estimate).collect(),
        b_inf: rows.iter().map(|r| r.estimate - r.t + 1.0).collect(),
        t_scales: first.t_scales.clone(),
        raw: rows.iter().map(|r| r.sequence.clone()).collect(),
        raw_max: rows.iter().map(|r| r.raw_max).collect(),
        drift: rows.iter().map(|r| r.drift).collect(),
        theta_hat: theta.map(|b| b.root),
        theta_bracket: theta.map(|b| (b.lo, b.hi)),
        quad_tol: first.quad_tol,
        spectral_tol: SPECTRAL_TOL,
    })
}

/// `β̂_∞(t)` over the scale grid `t_scales`.
pub fn beta_infinity(branch: &TractBranch, t: f64, t_scales: &[f64]) -> Result<BetaEstimate> {
    Ok(SpectrumSampler::new(branch, t_scales)?.beta(t))
}

/// `Θ̂_f`, the first zero of `b̂_∞` in `(0, 2]`.
pub fn theta_f(branch: &TractBranch, t_scales: &[f64]) -> Result<Bracket> {
    SpectrumSampler::new(branch, t_scales)?.theta()
}

/// First sign change of `b` on `(0, 2]`: a left-to-right scan with step 0.1,
/// then bisection to width [`ROOT_WIDTH`].
pub fn theta_from<B: Fn(f64) -> f64>(b: B) -> Result<Bracket> {
    let (b0, b2) = (b(0.0), b(2.0));
    if !(b0 > 0.0) || !(b2 <= SPECTRAL_TOL) {
        return Err(Error::NoSignChange { lo: 0.0, hi: 2.0, f_lo: b0, f_hi: b2 });
    }
    let mut prev = 0.0;
    for k in 1..=20 {
        let t = 0.1 * k as f64;
        if b(t) <= 0.0 {
            return bisect(|s| Ok(b(s)), prev, t, ROOT_WIDTH);
        }
        prev = t;
    }
    Err(Error::NoSignChange { lo: 0.0, hi: 2.0, f_lo: b0, f_hi: b2 })
}

/// Sampled `β̂_∞`, `b̂_∞` and `Θ̂_f` with the raw per-scale values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCurve {
    pub t_grid: Vec<f64>,
    pub beta_inf: Vec<f64>,
    /// `beta_inf[i] - t_grid[i] + 1`.
    pub b_inf: Vec<f64>,
    #[serde(rename = "T_grid")]
    pub t_scales: Vec<f64>,
    /// `raw[i][j] = β_{φ_{T_j}}(1/T_j, t_i)`.
    pub raw: Vec<Vec<f64>>,
    pub raw_max: Vec<f64>,
    pub drift: Vec<f64>,
    pub theta_hat: Option<f64>,
    pub theta_bracket: Option<(f64, f64)>,
    pub quad_tol: f64,
    pub spectral_tol: f64,
}

impl SpectrumCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,beta_inf,b_inf\n");
        for i in 0..self.t_grid.len() {
            writeln!(out, "{},{:.12e},{:.12e}", self.t_grid[i], self.beta_inf[i], self.b_inf[i]).unwrap();
        }
        out
    }

    /// The value at grid point `t`, if `t` is on the grid.
    pub fn beta_at(&self, t: f64) -> Option<f64> {
        self.t_grid.iter().position(|s| (s - t).abs() < 1e-12).map(|i| self.beta_inf[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeSpectrumReport {
    pub negative: bool,
    pub theta_hat: Option<f64>,
    /// `(t, b̂_∞(t))` with `t > Θ̂_f + 0.05` and `b̂_∞(t) ≥ 0.02`.
    pub violations: Vec<(f64, f64)>,
}

/// `b̂_∞(t) < 0.02` for every grid `t > Θ̂_f + 0.05`.
pub fn negative_spectrum_check(curve: &SpectrumCurve) -> NegativeSpectrumReport {
    let Some(theta) = curve.theta_hat else {
        return NegativeSpectrumReport { negative: false, theta_hat: None, violations: Vec::new() };
    };
    let violations: Vec<(f64, f64)> = curve
        .t_grid
        .iter()
        .zip(&curve.b_inf)
        .filter(|(t, b)| **t > theta + 0.05 && **b >= 0.02)
        .map(|(t, b)| (*t, *b))
        .collect();
    NegativeSpectrumReport { negative: violations.is_empty(), theta_hat: Some(theta), violations }
}

/// Spectrum of `F = f∘exp` against that of `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeReport {
    pub theta_inner: Option<f64>,
    pub theta_composite: Option<f64>,
    /// `(t, β̂_{∞,f}(t), β̂_{∞,F}(t))`.
    pub rows: Vec<(f64, f64, f64)>,
    /// `Θ̂_F ≤ Θ̂_f + 0.05`.
    pub theta_ok: bool,
    /// `β̂_{∞,F} ≤ β̂_{∞,f} + 0.05` on the whole grid.
    pub beta_ok: bool,
}

pub fn composite_spectrum_compare(
    inner: &TractBranch,
    composite: &TractBranch,
    t_grid: &[f64],
    t_scales: &[f64],
) -> Result<CompositeReport> {
    let f = SpectrumSampler::new(inner, t_scales)?.curve(t_grid)?;
    let big = SpectrumSampler::new(composite, t_scales)?.curve(t_grid)?;
    Ok(compare_curves(&f, &big))
}

/// The comparison behind [`composite_spectrum_compare`] on precomputed curves.
pub fn compare_curves(inner: &SpectrumCurve, composite: &SpectrumCurve) -> CompositeReport {
    let rows: Vec<(f64, f64, f64)> = inner
        .t_grid
        .iter()
        .zip(inner.beta_inf.iter().zip(&composite.beta_inf))
        .map(|(t, (a, b))| (*t, *a, *b))
        .collect();
    let theta_ok = match (inner.theta_hat, composite.theta_hat) {
        (Some(f), Some(big)) => big <= f + SPECTRAL_TOL,
        _ => false,
    };
    let beta_ok = rows.iter().all(|(_, f, big)| *big <= f + SPECTRAL_TOL);
    CompositeReport { theta_inner: inner.theta_hat, theta_composite: composite.theta_hat, rows, theta_ok, beta_ok }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearizer::{EntireFunction, FunctionDescriptor};
    use crate::tract::find_tracts;

    fn branch(s: &str) -> TractBranch {
        let f: EntireFunction = FunctionDescriptor::parse(s).unwrap().build().unwrap();
        find_tracts(&f, std::f64::consts::E).unwrap().tracts.remove(0)
    }

    #[test]
    fn exp_integral_means() {
        let b = branch("exp");
        for t in [0.0, 0.7, 2.0] {
            let v = integral_means(&b, 100.0, 0.01, t).unwrap();
            assert!((v - 0.1505150).abs() < 1e-7, "{v}");
        }
    }

    #[test]
    fn zero_exponent_is_arc_length() {
        let b = branch("exp(z^2)");
        let v = integral_means(&b, 50.0, 0.02, 0.0).unwrap();
        assert!((v - 2f64.ln() / 50f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn synthetic_theta() {
        let br = theta_from(|t| 1.0 - t).unwrap();
        assert!((br.root - 1.0).abs() < 1e-3);
        assert!(theta_from(|t| 1.0 + t).is_err());
    }

    #[test]
    fn exp_spectrum_vanishes() {
        let s = SpectrumSampler::new(&branch("exp"), &default_t_scales()).unwrap();
        for t in [0.5, 1.0, 2.0] {
            assert!(s.beta(t).estimate.abs() < 1e-9);
        }
        assert!((s.theta().unwrap().root - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_scales() {
        let b = branch("exp");
        assert_eq!(SpectrumSampler::new(&b, &[8.0, 4.0, 16.0, 32.0]).unwrap_err().kind(), "InvalidGrid");
    }
}
