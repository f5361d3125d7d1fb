//! Logarithmic tracts and the inverse branch `φ` of `log f` on the right half-plane.
//!
//! `φ` is evaluated by continuation on a dyadic lattice of anchors in `ξ`.
//! Node `(j, m)` sits at `2^j (1 + i m)`; its parent is `(j + 1, m / 2)`
//! (truncated toward zero) off the real axis and the neighbouring level on
//! it, so every node is joined to the base point by a chain of steps of
//! bounded hyperbolic length. A node's value depends only on its chain, which
//! makes every evaluation independent of evaluation order and thread count.

mod export;
mod geometry;

use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::linearizer::EntireFunction;
use crate::Complex;

pub use export::{boundary_csv, boundary_svg};
pub use geometry::{
    distortion_check, el_bound_violations, estimate_holder, exhaustion_ratio, rescaled_map, trace_boundary,
    DistortionReport, ElReport, HolderEstimate, RescaledBoundary,
};

/// Smallest admissible `Re ξ`.
pub const MIN_OFFSET: f64 = 0.05;

const NEWTON_CAP: usize = 50;
const NEWTON_TOL: f64 = 1e-11;
const STAGNATION_TOL: f64 = 1e-6;
/// Largest continuation step as a fraction of the distance to `∂ℍ`.
///
/// Over such a step `|φ'|` shrinks at most by the Koebe factor
/// `(1-r)/(1+r)³ ≈ 0.26`, so a neighbouring sheet stays further than the
/// `π|φ'|/2` a step may move away from its prediction.
const STEP_FRACTION: f64 = 0.35;
/// Steps are also capped at `SQRT_STEP·√Re ξ`. The predictor misses by about
/// `|Δξ|²|φ'|/Re ξ`, so longer steps far out would mostly be rejected.
const SQRT_STEP: f64 = 1.0;
const MIN_STEP: f64 = 1e-12;
const SCAN_ANGLES: usize = 1024;

fn wrap(z: Complex) -> Complex {
    if z.im.abs() <= PI {
        return z;
    }
    let two_pi = 2.0 * PI;
    let im = z.im - two_pi * (z.im / two_pi).round();
    Complex::new(z.re, im)
}

/// How densely queries to one branch are spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    /// Neighbouring queries closer than `Re ξ`, as in quadrature.
    Dense,
    /// Queries about `2π` or more apart, as in the logarithms of one point.
    Sparse,
}

/// One logarithmic tract with its branch of `φ = (log f)^{-1}`.
#[derive(Debug)]
pub struct TractBranch {
    function: Arc<EntireFunction>,
    pub base_point: Complex,
    /// `log f(base_point)`, principal branch.
    pub base_log: Complex,
    root_level: i32,
    /// Lattice nodes, each stored with `f'/f` there.
    nodes: RwLock<FxHashMap<(i32, i64), (Complex, Complex)>>,
}

impl Clone for TractBranch {
    fn clone(&self) -> Self {
        TractBranch {
            function: Arc::clone(&self.function),
            base_point: self.base_point,
            base_log: self.base_log,
            root_level: self.root_level,
            nodes: RwLock::new(self.nodes.read().unwrap().clone()),
        }
    }
}

fn node_xi(j: i32, m: i64) -> Complex {
    let s = 2f64.powi(j);
    Complex::new(s, s * m as f64)
}

impl TractBranch {
    /// Branch through `base_point`, which must satisfy `log|f| > 0` there.
    pub fn new(function: Arc<EntireFunction>, base_point: Complex) -> Result<Self> {
        let lv = function.log_eval(base_point)?;
        let base_log = wrap(lv.log);
        if base_log.re < 1.0 {
            return Err(Error::InvalidInput(format!("base point {base_point} is too close to the tract boundary")));
        }
        Ok(TractBranch {
            function,
            base_point,
            base_log,
            root_level: base_log.re.log2().round() as i32,
            nodes: RwLock::new(FxHashMap::default()),
        })
    }

    pub fn function(&self) -> &EntireFunction {
        &self.function
    }

    /// A fresh branch with the same base point and empty caches.
    pub fn cold(&self) -> Self {
        TractBranch { nodes: RwLock::new(FxHashMap::default()), ..self.clone() }
    }

    fn parent(&self, j: i32, m: i64) -> (i32, i64) {
        if m != 0 {
            (j + 1, m / 2)
        } else if j > self.root_level {
            (j - 1, 0)
        } else {
            (j + 1, 0)
        }
    }

    fn node(&self, j: i32, m: i64) -> Result<(Complex, Complex)> {
        if let Some(zd) = self.nodes.read().unwrap().get(&(j, m)) {
            return Ok(*zd);
        }
        let (from_xi, from) = if (j, m) == (self.root_level, 0) {
            (self.base_log, (self.base_point, self.function.log_eval(self.base_point)?.dlog))
        } else {
            let (pj, pm) = self.parent(j, m);
            (node_xi(pj, pm), self.node(pj, pm)?)
        };
        let zd = self.continue_path(from_xi, from, node_xi(j, m))?;
        self.nodes.write().unwrap().insert((j, m), zd);
        Ok(zd)
    }

    /// Newton on `log f(z) = ξ` (mod `2πi`), started at `z`.
    ///
    /// Far out in a tract the evaluation of `log f` carries rounding noise
    /// that can exceed [`NEWTON_TOL`]; once the residual stops shrinking
    /// below [`STAGNATION_TOL`] the best iterate is accepted.
    ///
    /// Returns the accepted point with `f'/f` there. Residuals are compared
    /// squared to keep `hypot` out of the loop.
    fn correct(&self, mut z: Complex, xi: Complex) -> Option<(Complex, Complex)> {
        let mut best = (f64::INFINITY, z, Complex::new(0.0, 0.0));
        let mut stalls = 0;
        for _ in 0..NEWTON_CAP {
            let lv = self.function.log_eval(z).ok()?;
            if lv.dlog.norm_sqr() == 0.0 {
                return None;
            }
            let r = wrap(lv.log - xi);
            let res = r.norm_sqr();
            if res < NEWTON_TOL * NEWTON_TOL {
                return Some((z, lv.dlog));
            }
            if res > 0.25 * best.0 {
                stalls += 1;
                if stalls >= 3 && best.0 < STAGNATION_TOL * STAGNATION_TOL {
                    return Some((best.1, best.2));
                }
            } else {
                stalls = 0;
            }
            if res < best.0 {
                best = (res, z, lv.dlog);
            }
            z -= r / lv.dlog;
            if !z.re.is_finite() || !z.im.is_finite() {
                return None;
            }
        }
        None
    }

    /// Follows the straight segment from `xi0` to `xi1`, starting at `z0`
    /// where `f'/f = dlog0`. Returns the end point with `f'/f` there.
    fn continue_path(&self, xi0: Complex, (z0, dlog0): (Complex, Complex), xi1: Complex) -> Result<(Complex, Complex)> {
        let total = (xi1 - xi0).norm();
        if total == 0.0 {
            return Ok((z0, dlog0));
        }
        // A step of length `reach(re / (1 + STEP_FRACTION·drop))` from `re`
        // ends at `Re ξ ≥ re / (1 + STEP_FRACTION·drop)`, so the caps hold
        // at both of its ends.
        let drop = ((xi0.re - xi1.re) / total).max(0.0);
        let cap = |s: f64| {
            let re = (xi0.re + (xi1.re - xi0.re) * s) / (1.0 + STEP_FRACTION * drop);
            (STEP_FRACTION * re).min(SQRT_STEP * re.sqrt()) / total
        };
        let stall = |s: f64| {
            let at = xi0 + (xi1 - xi0) * s;
            Error::ContinuationStall { re: at.re, im: at.im }
        };
        let mut s = 0.0;
        let mut z = z0;
        let mut dlog = dlog0;
        let mut h = cap(0.0).min(1.0);
        while s < 1.0 {
            let next = if s + h >= 1.0 - 1e-9 { 1.0 } else { s + h };
            let xi_b = xi0 + (xi1 - xi0) * next;
            let dxi = xi_b - (xi0 + (xi1 - xi0) * s);
            let dphi = dlog.inv();
            let guess = z + dxi * dphi;
            let accepted = self.correct(guess, xi_b).filter(|(new, _)| {
                let allowed = 0.5 * dxi.norm_sqr().sqrt().min(PI) * dphi.norm_sqr().sqrt()
                    + 64.0 * f64::EPSILON * z.norm_sqr().sqrt();
                (new - guess).norm_sqr() <= allowed * allowed
            });
            match accepted {
                Some((new, d)) => {
                    z = new;
                    dlog = d;
                    s = next;
                    h = (h * 1.5).min(cap(s));
                }
                None => {
                    h *= 0.5;
                    if h * total < MIN_STEP {
                        return Err(stall(s));
                    }
                }
            }
        }
        Ok((z, dlog))
    }

    /// `φ(ξ)`: the point of this tract with `f(φ(ξ)) = e^ξ`.
    pub fn phi(&self, xi: Complex) -> Result<Complex> {
        Ok(self.phi_dlog(xi, Spacing::Dense)?.0)
    }

    /// Continues from the lattice node at level `j`, `2^j` the nearest power
    /// of two to `Re ξ` for dense queries and the next one above `Re ξ` for
    /// sparse ones. A dense node is shared by neighbouring queries; a sparse
    /// query would need one of its own, so it starts higher up.
    fn phi_dlog(&self, xi: Complex, spacing: Spacing) -> Result<(Complex, Complex)> {
        if !(xi.re >= MIN_OFFSET && xi.re.is_finite() && xi.im.is_finite()) {
            return Err(Error::InvalidInput(format!("ξ = {xi} is outside Re ξ ≥ {MIN_OFFSET}")));
        }
        let j = match spacing {
            Spacing::Dense => xi.re.log2().round() as i32,
            Spacing::Sparse => xi.re.log2().floor() as i32 + 1,
        };
        let m = (xi.im / 2f64.powi(j)).round() as i64;
        self.continue_path(node_xi(j, m), self.node(j, m)?, xi)
    }

    /// `φ(ξ)` and `φ'(ξ) = e^ξ / f'(φ(ξ))`.
    pub fn phi_with_derivative(&self, xi: Complex) -> Result<(Complex, Complex)> {
        self.phi_with_derivative_spaced(xi, Spacing::Dense)
    }

    /// [`TractBranch::phi_with_derivative`] for a query pattern of the given
    /// [`Spacing`]. Both choices give the same point up to rounding.
    pub fn phi_with_derivative_spaced(&self, xi: Complex, spacing: Spacing) -> Result<(Complex, Complex)> {
        let (z, dlog) = self.phi_dlog(xi, spacing)?;
        // |f'(φ)| = |dlog|·e^{Re ξ}
        if dlog.norm() == 0.0 || dlog.norm().ln() + xi.re < 1e-300f64.ln() {
            return Err(Error::ZeroDenominator);
        }
        Ok((z, dlog.inv()))
    }
}

pub fn phi_eval(branch: &TractBranch, xi: Complex) -> Result<Complex> {
    branch.phi(xi)
}

pub fn phi_derivative(branch: &TractBranch, xi: Complex) -> Result<Complex> {
    branch.phi_with_derivative(xi).map(|(_, d)| d)
}

/// The tracts of `f` over `{|w| > R}`.
#[derive(Debug, Clone)]
pub struct TractAtlas {
    pub function: Arc<EntireFunction>,
    pub radius: f64,
    pub tracts: Vec<TractBranch>,
}

/// Locates one base point per tract with `|f(z_b)| > R·e`.
pub fn find_tracts(f: &EntireFunction, radius: f64) -> Result<TractAtlas> {
    if !(radius >= 1.0) || radius < f.singular_radius() {
        return Err(Error::InvalidInput(format!(
            "radius {radius} must be at least max(1, singular radius {})",
            f.singular_radius()
        )));
    }
    let function = Arc::new(f.clone());
    let bases = base_points(f, radius)?;
    if bases.is_empty() {
        return Err(Error::NoTractFound);
    }
    let tracts = bases.into_iter().map(|z| TractBranch::new(Arc::clone(&function), z)).collect::<Result<_>>()?;
    Ok(TractAtlas { function, radius, tracts })
}

fn base_points(f: &EntireFunction, radius: f64) -> Result<Vec<Complex>> {
    let level = radius.ln() + 1.0;
    match f {
        EntireFunction::ExpPower { lambda, d, .. } => {
            // Re z^d = ρ^d sits one unit above the level of R·e
            let rho_d = (level - lambda.norm().ln() + 1.0).max(1.0);
            let rho = rho_d.powf(1.0 / *d as f64);
            Ok((0..*d).map(|j| Complex::from_polar(rho, 2.0 * std::f64::consts::PI * j as f64 / *d as f64)).collect())
        }
        EntireFunction::CompositeExp(inner) => {
            let inner_bases = base_points(inner, radius)?;
            if let Some(b) = inner_bases.iter().find(|b| b.re < 3.0) {
                return Err(Error::InvalidInput(format!("inner tract at {b} is not inside Re z ≥ 3")));
            }
            Ok(inner_bases.into_iter().map(|b| b.ln()).collect())
        }
        EntireFunction::Koenigs(_) => scan_circles(f, level),
    }
}

/// Doubles a circle radius until `log|f|` exceeds `level + 1` somewhere, then
/// returns the maximiser of each super-level arc. Arcs joined by a straight
/// segment on which `log|f|` stays above `level - 1` count as one tract.
fn scan_circles(f: &EntireFunction, level: f64) -> Result<Vec<Complex>> {
    let threshold = level + 1.0;
    let mut rho = 1.0;
    while rho < 1e12 {
        let samples: Vec<(Complex, f64)> = (0..SCAN_ANGLES)
            .map(|k| {
                let theta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / SCAN_ANGLES as f64;
                let z = Complex::from_polar(rho, theta);
                f.log_eval(z).map(|lv| (z, lv.log.re))
            })
            .collect::<Result<_>>()?;
        let above: Vec<bool> = samples.iter().map(|(_, v)| *v > threshold).collect();
        if above.iter().any(|a| *a) {
            let mut bases = arc_maxima(&samples, &above);
            merge_connected(f, &mut bases, level - 1.0)?;
            return Ok(bases);
        }
        rho *= 2.0;
    }
    Ok(Vec::new())
}

fn arc_maxima(samples: &[(Complex, f64)], above: &[bool]) -> Vec<Complex> {
    let n = samples.len();
    if above.iter().all(|a| *a) {
        let best = samples.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        return vec![best.0];
    }
    // start scanning just after a gap so no arc wraps around
    let start = (0..n).find(|&k| !above[k]).unwrap();
    let mut out = Vec::new();
    let mut current: Option<(Complex, f64)> = None;
    for step in 1..=n {
        let k = (start + step) % n;
        if above[k] {
            if current.is_none_or(|c| samples[k].1 > c.1) {
                current = Some(samples[k]);
            }
        } else if let Some(c) = current.take() {
            out.push(c.0);
        }
    }
    if let Some(c) = current {
        out.push(c.0);
    }
    out.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    out
}

fn merge_connected(f: &EntireFunction, bases: &mut Vec<Complex>, floor: f64) -> Result<()> {
    let mut i = 0;
    while i < bases.len() {
        let mut j = i + 1;
        while j < bases.len() {
            let (a, b) = (bases[i], bases[j]);
            let mut joined = true;
            for k in 1..64 {
                let z = a + (b - a) * (k as f64 / 64.0);
                if f.log_eval(z)?.log.re <= floor {
                    joined = false;
                    break;
                }
            }
            if joined {
                let keep_j = f.log_eval(b)?.log.re > f.log_eval(a)?.log.re;
                if keep_j {
                    bases[i] = b;
                }
                bases.remove(j);
            } else {
                j += 1;
            }
        }
        i += 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearizer::FunctionDescriptor;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn handle(s: &str) -> EntireFunction {
        FunctionDescriptor::parse(s).unwrap().build().unwrap()
    }

    #[test]
    fn exp_tract() {
        let atlas = find_tracts(&EntireFunction::exp(), std::f64::consts::E).unwrap();
        assert_eq!(atlas.tracts.len(), 1);
        let b = &atlas.tracts[0];
        assert!((b.base_point - c(3.0, 0.0)).norm() < 1e-12);
        assert!((b.phi(c(3.0, 2.0)).unwrap() - c(3.0, 2.0)).norm() < 1e-10);
        let (_, d) = b.phi_with_derivative(c(7.0, -40.0)).unwrap();
        assert!((d - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn square_exponent_has_two_tracts() {
        let atlas = find_tracts(&handle("exp(z^2)"), std::f64::consts::E).unwrap();
        assert_eq!(atlas.tracts.len(), 2);
        let right = &atlas.tracts[0];
        let left = &atlas.tracts[1];
        assert!((right.phi(c(4.0, 0.0)).unwrap() - c(2.0, 0.0)).norm() < 1e-10);
        assert!((left.phi(c(4.0, 0.0)).unwrap() - c(-2.0, 0.0)).norm() < 1e-10);
        let (_, d) = right.phi_with_derivative(c(4.0, 0.0)).unwrap();
        assert!((d - c(0.25, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn square_exponent_stays_on_its_sheet() {
        // f(φ(ξ)) = e^ξ holds on every sheet; only φ = √ξ pins the right one
        let atlas = find_tracts(&handle("exp(z^2)"), std::f64::consts::E).unwrap();
        let right = &atlas.tracts[0];
        for xi in [c(4.0, 1024.0), c(2048.0, 1024.0), c(1.0, -30000.0), c(0.5, 5e5)] {
            let z = right.phi(xi).unwrap();
            assert!((z - xi.sqrt()).norm() < 1e-8 * z.norm(), "ξ = {xi}: {z} vs {}", xi.sqrt());
        }
    }

    #[test]
    fn scaled_exponential_shift() {
        let atlas = find_tracts(&handle("0.25*exp(z)"), std::f64::consts::E).unwrap();
        let z = atlas.tracts[0].phi(c(2.0, 1.0)).unwrap();
        assert!((z - c(2.0 + 4f64.ln(), 1.0)).norm() < 1e-10);
    }

    #[test]
    fn koenigs_disjoint_tract() {
        let f = handle(r#"{"family":"koenigs","poly":"z^2","z0":[1,0],"kappa":[0.125,0]}"#);
        let atlas = find_tracts(&f, std::f64::consts::E).unwrap();
        assert_eq!(atlas.tracts.len(), 1);
        let z = atlas.tracts[0].phi(c(5.0, 3.0)).unwrap();
        assert!((z - c(40.0, 24.0)).norm() < 1e-8);
    }

    #[test]
    fn far_points_round_trip() {
        let f = handle("koenigs(2z^2-1, disjoint)");
        let atlas = find_tracts(&f, std::f64::consts::E).unwrap();
        let b = &atlas.tracts[0];
        for xi in [c(1.0, 3000.0), c(0.05, -17.0), c(900.0, 5.0)] {
            let z = b.phi(xi).unwrap();
            let lv = f.log_eval(z).unwrap();
            assert!(wrap(lv.log - xi).norm() < 1e-9, "{xi}");
        }
    }

    #[test]
    fn order_independent() {
        let f = handle("koenigs(z^2-1, disjoint)");
        let atlas = find_tracts(&f, std::f64::consts::E).unwrap();
        let b = &atlas.tracts[0];
        let targets = [c(1.0, 700.0), c(3.0, -2.0), c(0.3, 40.0)];
        let forward: Vec<Complex> = targets.iter().map(|x| b.phi(*x).unwrap()).collect();
        let fresh = b.cold();
        let backward: Vec<Complex> = targets.iter().rev().map(|x| fresh.phi(*x).unwrap()).collect();
        for (a, bk) in forward.iter().zip(backward.iter().rev()) {
            assert_eq!(a, bk);
        }
    }

    #[test]
    fn spacings_agree() {
        let f = handle("koenigs(z^2-1, disjoint)");
        let atlas = find_tracts(&f, std::f64::consts::E).unwrap();
        let b = &atlas.tracts[0];
        for xi in [c(2.0, 0.0), c(2.0, 2.0 * std::f64::consts::PI * 37.0), c(4.0, -900.0), c(0.7, 55.0)] {
            let (z0, d0) = b.phi_with_derivative_spaced(xi, Spacing::Dense).unwrap();
            let (z1, d1) = b.phi_with_derivative_spaced(xi, Spacing::Sparse).unwrap();
            assert!((z0 - z1).norm() <= 1e-10 * z0.norm(), "{xi}");
            assert!((d0 - d1).norm() <= 1e-8 * d0.norm(), "{xi}");
        }
    }

    #[test]
    fn rejects_small_offset() {
        let atlas = find_tracts(&EntireFunction::exp(), std::f64::consts::E).unwrap();
        assert!(atlas.tracts[0].phi(c(0.01, 0.0)).is_err());
    }
}
