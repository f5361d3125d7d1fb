//! Polynomial dynamics: evaluation, preimages, fixed points, Böttcher
//! coordinates and tree pressure.

mod bottcher;
mod parse;
mod roots;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Complex;

pub use bottcher::{
    bottcher_beta, bottcher_circle_means, bottcher_circle_means_multi, bottcher_inverse, bottcher_with_derivative, Arc,
};
pub use roots::{aberth, RootOptions};
pub use tree::{
    bowen_zero_poly, poincare_series_partial, preimage_tree, pressure_curve, tree_pressure, PreimageNode,
    PressureCurve, PressureTree, TreePressure, DEFAULT_NODE_BUDGET,
};

/// Residual tolerance for fixed points and for the Koenigs precondition.
pub const FIXED_POINT_TOL: f64 = 1e-10;

/// A polynomial of degree at least two, coefficients stored constant term first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "parse::PolyRepr", into = "parse::PolyRepr")]
pub struct Polynomial {
    coeffs: Vec<Complex>,
}

impl Polynomial {
    /// Builds a polynomial, trimming zero leading coefficients.
    pub fn new(mut coeffs: Vec<Complex>) -> Result<Self> {
        while coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            coeffs.pop();
        }
        if coeffs.len() < 3 {
            return Err(Error::InvalidInput("polynomial degree must be at least 2".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(Polynomial { coeffs })
    }

    /// Real-coefficient constructor, constant term first.
    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex::new(c, 0.0)).collect())
    }

    /// Parses the shorthand form, e.g. `z^2-1` or `2z^2 - 1`.
    pub fn parse(s: &str) -> Result<Self> {
        parse::parse_shorthand(s)
    }

    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> Complex {
        self.coeffs[self.degree()]
    }

    pub fn eval(&self, z: Complex) -> Complex {
        self.coeffs.iter().rev().fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first derivative by a single Horner pass.
    pub fn eval_with_derivative(&self, z: Complex) -> (Complex, Complex) {
        let mut v = Complex::new(0.0, 0.0);
        let mut dv = Complex::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dv = dv * z + v;
            v = v * z + c;
        }
        (v, dv)
    }

    pub fn derivative(&self) -> Vec<Complex> {
        self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
    }

    /// Taylor coefficients `p^(j)(z0)/j!` for `j = 0..=d`.
    pub fn taylor_at(&self, z0: Complex) -> Vec<Complex> {
        let mut c = self.coeffs.clone();
        let d = self.degree();
        // repeated synthetic division by (z - z0)
        let mut out = Vec::with_capacity(d + 1);
        for _ in 0..=d {
            let mut acc = Complex::new(0.0, 0.0);
            let mut next = vec![Complex::new(0.0, 0.0); c.len().saturating_sub(1)];
            for k in (0..c.len()).rev() {
                acc = acc * z0 + c[k];
                if k > 0 {
                    next[k - 1] = acc;
                }
            }
            out.push(acc);
            c = next;
        }
        out
    }

    /// Critical points (roots of p').
    pub fn critical_points(&self) -> Result<Vec<Complex>> {
        let dp = self.derivative();
        if dp.len() == 2 {
            return Ok(vec![-dp[0] / dp[1]]);
        }
        aberth(&dp, &RootOptions::default()).map(|r| r.roots)
    }

    /// Outer radius used to seed the Böttcher continuation: 2(1 + max|a_k|).
    pub fn escape_radius(&self) -> f64 {
        let m = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        2.0 * (1.0 + m)
    }

    /// Shorthand rendering, mainly for reports.
    pub fn to_shorthand(&self) -> String {
        parse::render(self)
    }
}

impl std::fmt::Display for Polynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_shorthand())
    }
}

/// Horner evaluation of `p` at `z`.
pub fn poly_eval(p: &Polynomial, z: Complex) -> Complex {
    p.eval(z)
}

/// All roots of `p(z) = w`, with multiplicity, in canonical order.
pub fn preimages(p: &Polynomial, w: Complex) -> Result<Vec<Complex>> {
    let mut c = p.coeffs.clone();
    c[0] -= w;
    let mut roots = aberth(&c, &RootOptions::default())?.roots;
    let tol = 1e-10 * (1.0 + w.norm());
    let worst = roots.iter().map(|r| (p.eval(*r) - w).norm()).fold(0.0, f64::max);
    if worst >= tol {
        return Err(Error::NonConvergence { residual: worst });
    }
    snap_multiple_roots(p, w, &mut roots, tol)?;
    Ok(roots)
}

/// Aberth converges only to about `sqrt(eps)` at a multiple root. A multiple
/// root of `p - w` is a critical point of `p`, so clustered roots are moved
/// onto the critical point when that point solves the equation.
fn snap_multiple_roots(p: &Polynomial, w: Complex, roots: &mut [Complex], tol: f64) -> Result<()> {
    let clustered = |a: &Complex, b: &Complex| (a - b).norm() < 1e-6 * (1.0 + a.norm());
    let any = roots.iter().enumerate().any(|(i, a)| roots[i + 1..].iter().any(|b| clustered(a, b)));
    if !any {
        return Ok(());
    }
    let crit = p.critical_points()?;
    for z in roots.iter_mut() {
        if let Some(c) = crit.iter().find(|c| clustered(c, z) && (p.eval(**c) - w).norm() < tol) {
            *z = *c;
        }
    }
    roots.sort_by(canonical_cmp);
    Ok(())
}

/// A finite fixed point with its multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRecord {
    pub location: Complex,
    pub multiplier: Complex,
    pub is_repelling: bool,
}

/// All finite fixed points of `p`, repelling or not, in canonical order.
pub fn find_repelling_fixed_points(p: &Polynomial) -> Result<Vec<FixedPointRecord>> {
    let mut c = p.coeffs.clone();
    c[1] -= Complex::new(1.0, 0.0);
    let roots = aberth(&c, &RootOptions::default())?.roots;
    roots
        .into_iter()
        .map(|z| {
            let residual = (p.eval(z) - z).norm();
            if residual >= FIXED_POINT_TOL * (1.0 + z.norm()) {
                return Err(Error::NonConvergence { residual });
            }
            let multiplier = p.eval_with_derivative(z).1;
            Ok(FixedPointRecord { location: z, multiplier, is_repelling: multiplier.norm() > 1.0 })
        })
        .collect()
}

/// Total order on complex numbers used wherever a canonical ordering is needed.
pub(crate) fn canonical_cmp(a: &Complex, b: &Complex) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}
