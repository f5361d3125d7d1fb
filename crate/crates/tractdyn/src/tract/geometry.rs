use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{TractBranch, MIN_OFFSET};
use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::sampling::Halton;
use crate::Complex;

const HOLDER_BINS: usize = 20;

/// `φ_T(ξ) = φ(Tξ)/|φ(T)|`.
pub fn rescaled_map(branch: &TractBranch, t_scale: f64, xi: Complex) -> Result<Complex> {
    if !(t_scale >= 1.0) {
        return Err(Error::InvalidGrid(format!("scale T = {t_scale} must be at least 1")));
    }
    let norm = branch.phi(Complex::new(t_scale, 0.0))?.norm();
    if norm == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(branch.phi(xi * t_scale)? / norm)
}

/// Image of the parameter rectangle `[ε, 4] × [-4, 4]` under `φ_T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledBoundary {
    #[serde(rename = "T")]
    pub t_scale: f64,
    /// `|φ(T)|`.
    pub scale: f64,
    /// `φ_T(1)`, which lies on the unit circle.
    pub marker: Complex,
    /// Closed: the last point repeats the first.
    pub polyline: Vec<Complex>,
    /// `ε`; the traced curve is a level curve just inside the tract boundary.
    pub offset: f64,
}

fn rectangle_boundary(n_points: usize) -> Vec<Complex> {
    let eps = MIN_OFFSET;
    let corners = [Complex::new(eps, -4.0), Complex::new(4.0, -4.0), Complex::new(4.0, 4.0), Complex::new(eps, 4.0)];
    let lengths: Vec<f64> = (0..4).map(|k| (corners[(k + 1) % 4] - corners[k]).norm()).collect();
    let perimeter: f64 = lengths.iter().sum();
    let mut counts: Vec<usize> =
        lengths.iter().map(|l| ((n_points as f64 * l / perimeter).round() as usize).max(1)).collect();
    let assigned: usize = counts[..3].iter().sum();
    counts[3] = n_points.saturating_sub(assigned).max(1);
    let mut out = Vec::with_capacity(n_points + 1);
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        for i in 0..counts[k] {
            out.push(a + (b - a) * (i as f64 / counts[k] as f64));
        }
    }
    out
}

/// Traces `φ_T` around the parameter rectangle with `n_points` samples.
pub fn trace_boundary(branch: &TractBranch, t_scale: f64, n_points: usize) -> Result<RescaledBoundary> {
    if n_points < 64 {
        return Err(Error::InvalidInput(format!("need at least 64 boundary points, got {n_points}")));
    }
    if !(t_scale >= 1.0) {
        return Err(Error::InvalidGrid(format!("scale T = {t_scale} must be at least 1")));
    }
    let scale = branch.phi(Complex::new(t_scale, 0.0))?.norm();
    let params = rectangle_boundary(n_points);
    let mut polyline: Vec<Complex> =
        params.par_iter().map(|xi| branch.phi(xi * t_scale).map(|z| z / scale)).collect::<Result<_>>()?;
    polyline.push(polyline[0]);
    let marker = branch.phi(Complex::new(t_scale, 0.0))? / scale;
    Ok(RescaledBoundary { t_scale, scale, marker, polyline, offset: MIN_OFFSET })
}

/// `max|φ| / min|φ|` over `Q_T ∖ Q_{T/8}` (with `Re ξ ≥ ε`).
///
/// The sample is a Halton sequence plus the corners and side midpoints of
/// both rectangles, where the extremes of `|φ|` sit for the model maps.
pub fn exhaustion_ratio(branch: &TractBranch, t_scale: f64, samples: usize) -> Result<f64> {
    if samples < 100 {
        return Err(Error::InvalidInput(format!("need at least 100 samples, got {samples}")));
    }
    if !(t_scale >= 1.0) {
        return Err(Error::InvalidGrid(format!("scale T = {t_scale} must be at least 1")));
    }
    let outer = 4.0 * t_scale;
    let inner = outer / 8.0;
    let lo = MIN_OFFSET;
    let mut points = vec![
        Complex::new(outer, outer),
        Complex::new(outer, -outer),
        Complex::new(lo, outer),
        Complex::new(lo, -outer),
        Complex::new(outer, 0.0),
        Complex::new(outer / 2.0, outer),
        Complex::new(outer / 2.0, -outer),
        Complex::new(inner, 0.0),
        Complex::new(inner, inner),
        Complex::new(inner, -inner),
        Complex::new(lo, inner),
        Complex::new(lo, -inner),
        Complex::new(inner / 2.0, inner),
        Complex::new(inner / 2.0, -inner),
    ];
    let in_inner = |xi: &Complex| xi.re < inner && xi.im.abs() < inner;
    points.extend(
        Halton::new(2, 0)
            .map(|u| Complex::new(lo + (outer - lo) * u[0], outer * (2.0 * u[1] - 1.0)))
            .filter(|xi| !in_inner(xi))
            .take(samples),
    );
    let moduli: Vec<f64> = points.par_iter().map(|xi| branch.phi(*xi).map(|z| z.norm())).collect::<Result<_>>()?;
    let max = moduli.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = moduli.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(max / min)
}

/// Envelope fit of `log|g(ζ₁) - g(ζ₂)|` against `log|ζ₁ - ζ₂|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub alpha: f64,
    pub h: f64,
    pub pairs_used: usize,
    /// Pairs with `ζ₁ = ζ₂`, which carry no information.
    pub rejected: usize,
}

/// Fits the upper envelope of `y = log(|g(a) - g(b)|/scale)` against
/// `x = log|a - b|` over `pairs`: the points are sorted by `x`, split into
/// equal-count bins, and the line runs through the per-bin maxima.
pub fn holder_from_pairs<G>(g: G, scale: f64, pairs: &[(Complex, Complex)]) -> Result<HolderEstimate>
where
    G: Fn(Complex) -> Result<Complex> + Sync,
{
    let rejected = pairs.iter().filter(|(a, b)| a == b).count();
    let kept: Vec<&(Complex, Complex)> = pairs.iter().filter(|(a, b)| a != b).collect();
    let mut xy: Vec<(f64, f64)> = kept
        .par_iter()
        .map(|(a, b)| Ok(((a - b).norm().ln(), ((g(*a)? - g(*b)?).norm() / scale).ln())))
        .collect::<Result<_>>()?;
    xy.retain(|(_, y)| y.is_finite());
    if xy.len() < 2 * HOLDER_BINS {
        return Err(Error::InvalidInput("too few usable pairs for a Hölder fit".into()));
    }
    xy.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let per_bin = xy.len() / HOLDER_BINS;
    let (xs, ys): (Vec<f64>, Vec<f64>) = xy
        .chunks(per_bin)
        .filter(|chunk| chunk.len() == per_bin)
        .map(|chunk| *chunk.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap())
        .unzip();
    let fit = line_fit(&xs, &ys);
    Ok(HolderEstimate { alpha: fit.slope, h: fit.intercept.exp(), pairs_used: xy.len(), rejected })
}

/// Hölder exponent and constant of `g = φ∘T` on `Q_1`, normalised by `|g'(1)|`.
///
/// Pairs are `ζ` from a Halton sequence and `ζ + δe^{iθ}` with `δ`
/// log-uniform in `[1e-3, 1]`.
pub fn estimate_holder(branch: &TractBranch, t_scale: f64, pairs: usize) -> Result<HolderEstimate> {
    if pairs < 1000 {
        return Err(Error::InvalidInput(format!("need at least 1000 pairs, got {pairs}")));
    }
    if !(t_scale >= 1.0) {
        return Err(Error::InvalidGrid(format!("scale T = {t_scale} must be at least 1")));
    }
    let lo = MIN_OFFSET / t_scale;
    let inside = |z: &Complex| z.re >= lo && z.re <= 4.0 && z.im.abs() <= 4.0;
    let list: Vec<(Complex, Complex)> = Halton::new(4, 0)
        .filter_map(|u| {
            let a = Complex::new(lo + (4.0 - lo) * u[0], 8.0 * u[1] - 4.0);
            let step = Complex::from_polar(10f64.powf(-3.0 * u[2]), 2.0 * std::f64::consts::PI * u[3]);
            [a + step, a - step].into_iter().find(|b| inside(b)).map(|b| (a, b))
        })
        .take(pairs)
        .collect();
    let (_, dphi) = branch.phi_with_derivative(Complex::new(t_scale, 0.0))?;
    let scale = t_scale * dphi.norm();
    holder_from_pairs(|z| branch.phi(z * t_scale), scale, &list)
}

/// Outcome of the `|φ'/φ| ≤ 4π/Re ξ` check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `|φ'/φ|·Re ξ / 4π` seen; at most 1 when the bound holds.
    pub worst_ratio: f64,
}

/// Samples `ξ` with `Re ξ` log-uniform in `[ε, re_max]` and `|Im ξ| ≤ re_max`.
pub fn el_bound_violations(branch: &TractBranch, samples: usize, re_max: f64) -> Result<ElReport> {
    let points: Vec<Complex> = Halton::new(2, 0)
        .take(samples)
        .map(|u| Complex::new(MIN_OFFSET * (re_max / MIN_OFFSET).powf(u[0]), re_max * (2.0 * u[1] - 1.0)))
        .collect();
    let ratios: Vec<f64> = points
        .par_iter()
        .map(|xi| {
            let (z, d) = branch.phi_with_derivative(*xi)?;
            if z.norm() == 0.0 {
                return Ok(f64::INFINITY);
            }
            Ok((d / z).norm() * xi.re / (4.0 * std::f64::consts::PI))
        })
        .collect::<Result<_>>()?;
    Ok(ElReport {
        samples,
        violations: ratios.iter().filter(|r| **r > 1.0).count(),
        worst_ratio: ratios.iter().cloned().fold(0.0, f64::max),
    })
}

/// Distortion sanity along the real axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// `(x, |φ'(x)|/|φ'(1)|)` for log-spaced `x ∈ [1, 100]`.
    pub derivative_ratios: Vec<(f64, f64)>,
    /// `(T, |φ(T) - φ(1)| / (|φ'(1)| T²))` on the T-grid.
    pub growth_ratios: Vec<(f64, f64)>,
    /// Derivative ratios within `[1e-4 x^{-3}, 1e4 x]` and growth ratios at most `1e4`.
    pub pass: bool,
}

pub fn distortion_check(branch: &TractBranch, t_grid: &[f64]) -> Result<DistortionReport> {
    let one = Complex::new(1.0, 0.0);
    let (phi1, d1) = branch.phi_with_derivative(one)?;
    let d1 = d1.norm();
    let derivative_ratios: Vec<(f64, f64)> = (0..=40)
        .map(|k| {
            let x = 100f64.powf(k as f64 / 40.0);
            branch.phi_with_derivative(Complex::new(x, 0.0)).map(|(_, d)| (x, d.norm() / d1))
        })
        .collect::<Result<_>>()?;
    let growth_ratios: Vec<(f64, f64)> = t_grid
        .iter()
        .map(|&t| branch.phi(Complex::new(t, 0.0)).map(|z| (t, (z - phi1).norm() / (d1 * t * t))))
        .collect::<Result<_>>()?;
    let pass = derivative_ratios.iter().all(|&(x, r)| r >= 1e-4 * x.powi(-3) && r <= 1e4 * x)
        && growth_ratios.iter().all(|&(_, r)| r <= 1e4);
    Ok(DistortionReport { derivative_ratios, growth_ratios, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearizer::{EntireFunction, FunctionDescriptor};
    use crate::tract::find_tracts;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn branch(s: &str) -> TractBranch {
        let f: EntireFunction = FunctionDescriptor::parse(s).unwrap().build().unwrap();
        find_tracts(&f, std::f64::consts::E).unwrap().tracts.remove(0)
    }

    #[test]
    fn identity_rescaling() {
        let b = branch("exp");
        for t in [1.0, 7.0, 300.0] {
            assert!((rescaled_map(&b, t, c(1.0, 1.0)).unwrap() - c(1.0, 1.0)).norm() < 1e-10);
        }
        let sq = branch("exp(z^2)");
        assert!((rescaled_map(&sq, 5.0, c(1.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn boundary_of_identity() {
        let b = branch("exp");
        let trace = trace_boundary(&b, 5.0, 64).unwrap();
        assert_eq!(trace.polyline.first(), trace.polyline.last());
        assert!(trace.polyline.iter().any(|z| (z - c(4.0, 4.0)).norm() < 1e-9));
        assert!(trace.polyline.iter().any(|z| (z - c(4.0, -4.0)).norm() < 1e-9));
        assert!((trace.marker.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exhaustion_ratio_scale_invariant() {
        let b = branch("exp");
        let r4 = exhaustion_ratio(&b, 4.0, 200).unwrap();
        let r64 = exhaustion_ratio(&b, 64.0, 200).unwrap();
        assert!((r4 - r64).abs() < 1e-9);
        assert!((r4 - 8.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn holder_rejects_coincident_pairs() {
        let mut pairs: Vec<(Complex, Complex)> =
            (1..=100).map(|k| (c(1.0, 0.0), c(1.0 + k as f64 * 0.01, 0.0))).collect();
        pairs.push((c(2.0, 0.0), c(2.0, 0.0)));
        let est = holder_from_pairs(Ok, 1.0, &pairs).unwrap();
        assert_eq!(est.rejected, 1);
        assert!((est.alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_holder() {
        let est = estimate_holder(&branch("exp"), 8.0, 1000).unwrap();
        assert!((est.alpha - 1.0).abs() < 0.02, "{est:?}");
    }
}
