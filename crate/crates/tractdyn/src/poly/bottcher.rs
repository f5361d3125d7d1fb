use rayon::prelude::*;

use super::{preimages, Polynomial};
use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::quad;
use crate::Complex;

use std::f64::consts::PI;

/// Orbit points beyond this modulus use the asymptotic form of the Böttcher map.
const TOP_MODULUS: f64 = 1e6;
const NEWTON_CAP: usize = 40;
const MIN_STEP: f64 = 1e-12;

/// Closed angular interval `[start, end]` on a circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
}

impl Arc {
    pub fn full() -> Self {
        Arc { start: 0.0, end: 2.0 * PI }
    }

    pub fn is_full(&self) -> bool {
        (self.end - self.start - 2.0 * PI).abs() < 1e-15
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// Inverse-orbit chain `w_k ≈ h(z^{d^k})` along one ray.
struct Chain<'a> {
    p: &'a Polynomial,
    d: usize,
    /// `h(Z) ≈ scale·Z + shift` for large `Z`.
    scale: Complex,
    shift: Complex,
    crit: Vec<Complex>,
    theta: f64,
    ln_rho: f64,
    w: Vec<Complex>,
}

impl<'a> Chain<'a> {
    fn orbit_point(&self, ln_rho: f64, k: usize) -> Complex {
        let dk = (self.d as f64).powi(k as i32);
        let angle = (self.theta * dk).rem_euclid(2.0 * PI);
        Complex::from_polar((ln_rho * dk).exp(), angle)
    }

    fn top(&self) -> usize {
        self.w.len() - 1
    }

    fn asymptotic(&self, z: Complex) -> Complex {
        self.scale * z + self.shift
    }

    fn crit_distance(&self, w: Complex) -> f64 {
        self.crit.iter().map(|c| (w - c).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Seeds the chain at a radius where nearest-branch selection is safe.
    fn seed(p: &'a Polynomial, ln_rho: f64, theta: f64) -> Result<Self> {
        let d = p.degree();
        let lead = p.leading();
        let scale = lead.powf(-1.0 / (d as f64 - 1.0));
        let shift = -p.coeffs()[d - 1] / (lead * d as f64);
        let mut chain = Chain { p, d, scale, shift, crit: p.critical_points()?, theta, ln_rho, w: Vec::new() };
        let mut m = 0;
        while chain.orbit_point(ln_rho, m).norm() < TOP_MODULUS {
            m += 1;
        }
        let mut w = vec![Complex::new(0.0, 0.0); m + 1];
        w[m] = chain.asymptotic(chain.orbit_point(ln_rho, m));
        for k in (0..m).rev() {
            let guess = chain.asymptotic(chain.orbit_point(ln_rho, k));
            let cands = preimages(p, w[k + 1])?;
            w[k] = cands
                .into_iter()
                .min_by(|a, b| (a - guess).norm().total_cmp(&(b - guess).norm()))
                .expect("degree >= 2");
        }
        chain.w = w;
        Ok(chain)
    }

    fn newton(&self, start: Complex, target: Complex) -> Option<Complex> {
        let mut w = start;
        for _ in 0..NEWTON_CAP {
            let (v, dv) = self.p.eval_with_derivative(w);
            if dv.norm() == 0.0 {
                return None;
            }
            let step = (v - target) / dv;
            w -= step;
            if !w.re.is_finite() || !w.im.is_finite() {
                return None;
            }
            if step.norm() <= 4.0 * f64::EPSILON * (1.0 + w.norm()) {
                return Some(w);
            }
        }
        let residual = (self.p.eval(w) - target).norm();
        (residual <= 1e-12 * (1.0 + target.norm())).then_some(w)
    }

    /// Moves the whole chain to `ln_rho`; on failure the chain is unchanged.
    fn advance(&mut self, ln_rho: f64) -> bool {
        let mut w = self.w.clone();
        while self.orbit_point(ln_rho, w.len() - 1).norm() < TOP_MODULUS {
            let last = *w.last().unwrap();
            w.push(self.p.eval(last));
        }
        let m = w.len() - 1;
        w[m] = self.asymptotic(self.orbit_point(ln_rho, m));
        for k in (0..m).rev() {
            let old = w[k];
            match self.newton(old, w[k + 1]) {
                Some(new) if (new - old).norm() <= 0.25 * self.crit_distance(old) => w[k] = new,
                _ => return false,
            }
        }
        self.w = w;
        self.ln_rho = ln_rho;
        true
    }

    /// Continues inward (or outward) to `ln_rho` with adaptive steps in `ln ln ρ`.
    fn continue_to(&mut self, ln_rho: f64) -> Result<()> {
        let s_end = ln_rho.ln();
        let mut s = self.ln_rho.ln();
        let mut step = 0.02 / TOP_MODULUS.ln();
        while (s_end - s).abs() > 0.0 {
            let top_log = self.orbit_point(self.ln_rho, self.top()).norm().ln();
            let cap = 0.2 / top_log.max(1.0);
            step = step.min(cap);
            let next = if (s_end - s).abs() <= step { s_end } else { s + step * (s_end - s).signum() };
            if self.advance(next.exp()) {
                s = next;
                step *= 1.5;
            } else {
                step *= 0.5;
                if step < MIN_STEP {
                    return Err(Error::BranchLoss(self.ln_rho.exp()));
                }
            }
        }
        Ok(())
    }

    fn derivative(&self) -> Complex {
        let d = self.d as f64;
        let mut acc = self.scale;
        for k in 0..self.top() {
            let zk = self.orbit_point(self.ln_rho, k);
            let dp = self.p.eval_with_derivative(self.w[k]).1;
            acc *= d * zk.powu(self.d as u32 - 1) / dp;
        }
        acc
    }
}

/// Böttcher map `h` with `h(z^d) = p(h(z))` and its derivative at `z`, `|z| > 1`.
///
/// The inverse orbit is seeded at the escape radius, where the preimage
/// nearest the asymptotic value is the right branch, and then continued along
/// the ray through `z`. The derivative follows from the functional equation
/// along the same orbit.
pub fn bottcher_with_derivative(p: &Polynomial, z: Complex) -> Result<(Complex, Complex)> {
    let r = z.norm();
    if !(r > 1.0) {
        return Err(Error::InvalidInput(format!("Böttcher map needs |z| > 1, got {r}")));
    }
    let theta = z.arg();
    let start = r.max(p.escape_radius());
    let mut chain = Chain::seed(p, start.ln(), theta)?;
    if start > r {
        chain.continue_to(r.ln())?;
    }
    Ok((chain.w[0], chain.derivative()))
}

pub fn bottcher_inverse(p: &Polynomial, z: Complex) -> Result<Complex> {
    bottcher_with_derivative(p, z).map(|(h, _)| h)
}

/// `∫_arc |h'(z)|^{t_i} |dz|` on `|z| = r` for every `t_i`.
///
/// Full circles use the periodic trapezoid rule with doubling; partial arcs
/// use adaptive Gauss–Legendre.
pub fn bottcher_circle_means_multi(p: &Polynomial, r: f64, ts: &[f64], arc: Arc) -> Result<Vec<f64>> {
    if !(r - 1.0 >= 1e-4) {
        return Err(Error::InvalidInput(format!("radius {r} too close to the unit circle")));
    }
    let sample = |theta: f64| -> Result<Vec<f64>> {
        let (_, dh) = bottcher_with_derivative(p, Complex::from_polar(r, theta))?;
        let m = dh.norm();
        Ok(ts.iter().map(|t| m.powf(*t) * r).collect())
    };
    if !arc.is_full() {
        return quad::integrate(sample, arc.start, arc.end, ts.len(), 1e-8, 16);
    }

    let mut n = 64usize;
    let mut values: Vec<Vec<f64>> =
        (0..n).into_par_iter().map(|i| sample(2.0 * PI * i as f64 / n as f64)).collect::<Result<_>>()?;
    let total = |vals: &[Vec<f64>], n: usize| -> Vec<f64> {
        (0..ts.len()).map(|j| vals.iter().map(|v| v[j]).sum::<f64>() * 2.0 * PI / n as f64).collect()
    };
    let mut current = total(&values, n);
    while n < 1 << 18 {
        let fresh: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| sample(2.0 * PI * (2 * i + 1) as f64 / (2 * n) as f64))
            .collect::<Result<_>>()?;
        let mut merged = Vec::with_capacity(2 * n);
        for (a, b) in values.into_iter().zip(fresh) {
            merged.push(a);
            merged.push(b);
        }
        values = merged;
        n *= 2;
        let next = total(&values, n);
        let done = next.iter().zip(&current).all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1e-300));
        current = next;
        if done {
            break;
        }
    }
    Ok(current)
}

pub fn bottcher_circle_means(p: &Polynomial, r: f64, t: f64, arc: Arc) -> Result<f64> {
    bottcher_circle_means_multi(p, r, &[t], arc).map(|v| v[0])
}

/// Growth exponent of the circle means as `r → 1⁺`.
///
/// Fits `log ∫ |∂_θ h(re^{iθ})|^t dθ` against `|log log r|` across `radii` and
/// returns the slope. The angular-speed integral equals
/// `r^{t-1} ∫_{C_r} |h'|^t |dz|` and `log r ~ r - 1`, so the limit is the same
/// as for `log ∫_{C_r} |h'|^t |dz| / |log(r - 1)|`; the chosen variables make
/// the `t = 0` row exact at every radius.
pub fn bottcher_beta(p: &Polynomial, ts: &[f64], radii: &[f64]) -> Result<Vec<f64>> {
    if radii.len() < 2 {
        return Err(Error::InvalidGrid("need at least two radii".into()));
    }
    let means: Vec<Vec<f64>> =
        radii.iter().map(|&r| bottcher_circle_means_multi(p, r, ts, Arc::full())).collect::<Result<_>>()?;
    let xs: Vec<f64> = radii.iter().map(|r| r.ln().ln().abs()).collect();
    Ok(ts
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let ys: Vec<f64> = means.iter().zip(radii).map(|(m, r)| m[j].ln() + (t - 1.0) * r.ln()).collect();
            line_fit(&xs, &ys).slope
        })
        .collect())
}
