use serde::{Deserialize, Serialize};

use super::LogValue;
use crate::error::{Error, Result};
use crate::poly::{Polynomial, FIXED_POINT_TOL};
use crate::Complex;

/// Truncation target for the Taylor tail at the series radius.
const TAIL_TOL: f64 = 1e-14;
pub const MAX_ORDER: usize = 256;
/// Past this modulus the ladder continues on logarithms.
const LOG_SWITCH: f64 = 1e30;

/// Koenigs coefficients `a_1..a_K` of `f(z) = z0 + Σ a_n z^n` with `a_1 = 1`
/// and `f(λz) = p(f(z))`, `λ = p'(z0)`.
///
/// Matching `z^n` gives `(λ^n - λ) a_n = Σ_{j≥2} c_j [z^n] g^j` with
/// `g = f - z0` and `c_j` the Taylor coefficients of `p` at `z0`; the right
/// side only involves `a_1..a_{n-1}`.
pub fn koenigs_coefficients(p: &Polynomial, z0: Complex, order: usize) -> Result<Vec<Complex>> {
    let taylor = p.taylor_at(z0);
    let lambda = taylor[1];
    if lambda.norm() <= 1.0 {
        return Err(Error::NotRepelling(lambda.norm()));
    }
    let residual = (taylor[0] - z0).norm();
    if residual >= FIXED_POINT_TOL {
        return Err(Error::InvalidInput(format!("z0 is not a fixed point (residual {residual:.3e})")));
    }
    let d = p.degree();
    let zero = Complex::new(0.0, 0.0);
    // powers[j][n] = [z^n] g^j for j = 1..=d, n = 0..=order
    let mut powers = vec![vec![zero; order + 1]; d + 1];
    let mut lambda_n = Complex::new(1.0, 0.0);
    for n in 1..=order {
        lambda_n *= lambda;
        let mut rhs = zero;
        for j in 2..=d {
            let mut acc = zero;
            for i in 1..n {
                acc += powers[1][i] * powers[j - 1][n - i];
            }
            powers[j][n] = acc;
            rhs += taylor[j] * acc;
        }
        let a = if n == 1 { Complex::new(1.0, 0.0) } else { rhs / (lambda_n - lambda) };
        powers[1][n] = a;
    }
    Ok(powers[1][1..].to_vec())
}

/// The Poincaré function of `p` at a repelling fixed point, precomposed with `z ↦ κz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KoenigsLinearizer {
    pub p: Polynomial,
    pub z0: Complex,
    pub lambda: Complex,
    /// `a_1..a_K`, `a_1 = 1`.
    pub taylor: Vec<Complex>,
    pub series_radius: f64,
    pub kappa: Complex,
}

impl KoenigsLinearizer {
    pub fn new(p: Polynomial, z0: Complex, kappa: Complex) -> Result<Self> {
        if kappa.norm() == 0.0 {
            return Err(Error::InvalidInput("kappa must be non-zero".into()));
        }
        let lambda = p.eval_with_derivative(z0).1;
        if lambda.norm() <= 1.0 {
            return Err(Error::NotRepelling(lambda.norm()));
        }
        let crit_dist = p.critical_points()?.iter().map(|c| (c - z0).norm()).fold(f64::INFINITY, f64::min);
        let series_radius = 0.25 * lambda.norm() * crit_dist;
        let all = koenigs_coefficients(&p, z0, MAX_ORDER)?;
        let mut order = MAX_ORDER;
        for k in 2..=MAX_ORDER {
            let term = |i: usize| all[i - 1].norm() * series_radius.powi(i as i32);
            if term(k) < TAIL_TOL && term(k - 1) < TAIL_TOL {
                order = k;
                break;
            }
        }
        let taylor = all[..order].to_vec();
        Ok(KoenigsLinearizer { p, z0, lambda, taylor, series_radius, kappa })
    }

    /// Repelling fixed point with the largest multiplier, scale `κ`.
    pub fn at_dominant_fixed_point(p: Polynomial, kappa: Complex) -> Result<Self> {
        let best = crate::poly::find_repelling_fixed_points(&p)?
            .into_iter()
            .filter(|r| r.is_repelling)
            .max_by(|a, b| a.multiplier.norm().total_cmp(&b.multiplier.norm()))
            .ok_or(Error::NotRepelling(0.0))?;
        Self::new(p, best.location, kappa)
    }

    pub fn with_kappa(&self, kappa: Complex) -> Self {
        KoenigsLinearizer { kappa, ..self.clone() }
    }

    /// Smallest `n` with `|κz/λ^n| ≤ r₀`.
    pub fn ladder_depth(&self, z: Complex) -> usize {
        let u = (self.kappa * z).norm();
        if u <= self.series_radius {
            return 0;
        }
        let ratio = (u / self.series_radius).ln() / self.lambda.norm().ln();
        let mut n = ratio.ceil().max(0.0) as usize;
        while n > 0 && u / self.lambda.norm().powi(n as i32 - 1) <= self.series_radius {
            n -= 1;
        }
        while u / self.lambda.norm().powi(n as i32) > self.series_radius {
            n += 1;
        }
        n
    }

    fn series(&self, u: Complex) -> (Complex, Complex) {
        let mut s = Complex::new(0.0, 0.0);
        let mut ds = Complex::new(0.0, 0.0);
        // Horner on Σ a_n u^{n-1}, then one extra factor of u
        for a in self.taylor.iter().rev() {
            ds = ds * u + s;
            s = s * u + a;
        }
        let value = self.z0 + s * u;
        let derivative = s + ds * u;
        (value, derivative)
    }

    /// `(f, f')` through a ladder of exactly `depth` polynomial steps.
    pub fn eval_at_depth(&self, z: Complex, depth: usize) -> Result<(Complex, Complex)> {
        let scale = self.kappa / self.lambda.powi(depth as i32);
        let (mut v, ds) = self.series(scale * z);
        let mut dv = ds * scale;
        for _ in 0..depth {
            let (pv, pdv) = self.p.eval_with_derivative(v);
            dv *= pdv;
            v = pv;
            if !v.norm().is_finite() || !dv.norm().is_finite() {
                return Err(Error::Overflow);
            }
        }
        Ok((v, dv))
    }

    /// `f(z)` by ladder evaluation.
    pub fn eval(&self, z: Complex) -> Result<Complex> {
        self.eval_at_depth(z, self.ladder_depth(z)).map(|(v, _)| v)
    }

    /// `f'(z)` along the same ladder.
    pub fn derivative(&self, z: Complex) -> Result<Complex> {
        self.eval_at_depth(z, self.ladder_depth(z)).map(|(_, dv)| dv)
    }

    /// A logarithm of `f(z)` and the logarithmic derivative, without overflow.
    pub fn log_eval(&self, z: Complex) -> Result<LogValue> {
        let depth = self.ladder_depth(z);
        let scale = self.kappa / self.lambda.powi(depth as i32);
        let (mut v, ds) = self.series(scale * z);
        let mut dv = ds * scale;
        let mut step = 0;
        while step < depth && v.norm() < LOG_SWITCH {
            let (pv, pdv) = self.p.eval_with_derivative(v);
            dv *= pdv;
            v = pv;
            step += 1;
        }
        if v.norm() < 1e-300 {
            return Err(Error::ZeroDenominator);
        }
        let mut log = v.ln();
        let mut dlog = dv / v;
        if step < depth {
            let c = self.p.coeffs();
            let d = self.p.degree();
            let lead = c[d];
            let ln_lead = lead.ln();
            let rel: Vec<Complex> = c.iter().map(|a| a / lead).collect();
            for _ in step..depth {
                let inv = (-log).exp();
                let mut q = Complex::new(0.0, 0.0);
                let mut dq = Complex::new(0.0, 0.0);
                let mut w = Complex::new(1.0, 0.0);
                for j in (0..d).rev() {
                    w *= inv;
                    q += rel[j] * w;
                    dq += rel[j] * w * j as f64;
                }
                let one = Complex::new(1.0, 0.0);
                dlog *= (Complex::new(d as f64, 0.0) + dq) / (one + q);
                log = ln_lead + log * d as f64 + (one + q).ln();
                log.im = log.im.rem_euclid(2.0 * std::f64::consts::PI);
                if !log.re.is_finite() || !dlog.norm().is_finite() {
                    return Err(Error::Overflow);
                }
            }
        }
        Ok(LogValue { log, dlog })
    }

    /// Largest `log|f|` on a polar grid covering the closed disk of radius `rho`.
    pub fn max_log_modulus(&self, rho: f64) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for i in 0..=64 {
            let r = rho * i as f64 / 64.0;
            let count = if i == 0 { 1 } else { 256 };
            for j in 0..count {
                let z = Complex::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / count as f64);
                best = best.max(self.log_eval(z)?.log.re);
            }
        }
        Ok(best)
    }
}

/// Halves `κ` until `|f_κ| ≤ R` on the sampled closed disk of radius `2R`.
pub fn make_disjoint_type(lin: &KoenigsLinearizer, radius: f64) -> Result<KoenigsLinearizer> {
    if !(radius >= 1.0) {
        return Err(Error::InvalidInput("disjoint-type radius must be at least 1".into()));
    }
    if lin.z0.norm() == 0.0 {
        return Err(Error::InvalidInput("z0 = 0 cannot be separated from the disk".into()));
    }
    let mut current = lin.clone();
    loop {
        if current.max_log_modulus(2.0 * radius)? <= radius.ln() {
            return Ok(current);
        }
        let kappa = current.kappa * 0.5;
        if kappa.norm() < 1e-12 {
            return Err(Error::ScaleFloor);
        }
        current = current.with_kappa(kappa);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn exponential_series() {
        let p = Polynomial::parse("z^2").unwrap();
        let a = koenigs_coefficients(&p, c(1.0, 0.0), 12).unwrap();
        for (i, an) in a.iter().enumerate() {
            let n = i as u32 + 1;
            assert!((an - c(1.0 / factorial(n), 0.0)).norm() < 1e-15 * (1.0 + 1.0 / factorial(n)));
        }
        assert!((a[1].re - 0.5).abs() < 1e-15);
        assert!((a[2].re - 0.1666667).abs() < 1e-7);
    }

    #[test]
    fn cosh_series() {
        let p = Polynomial::parse("2z^2-1").unwrap();
        let a = koenigs_coefficients(&p, c(1.0, 0.0), 10).unwrap();
        for (i, an) in a.iter().enumerate() {
            let n = i as i32 + 1;
            let expect = 2f64.powi(n) / factorial(2 * n as u32);
            assert!((an.re - expect).abs() < 1e-14 * expect.max(1e-300) + 1e-300, "n={n}");
        }
    }

    #[test]
    fn not_repelling() {
        let p = Polynomial::parse("z^2").unwrap();
        let e = koenigs_coefficients(&p, c(0.0, 0.0), 4).unwrap_err();
        assert_eq!(e.kind(), "NotRepelling");
    }

    #[test]
    fn golden_values() {
        let exp = KoenigsLinearizer::new(Polynomial::parse("z^2").unwrap(), c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let v = exp.eval(c(2.0, std::f64::consts::PI)).unwrap();
        assert!((v - c(-7.3890561, 0.0)).norm() < 1e-7);
        assert!((exp.derivative(c(1.0, 0.0)).unwrap().re - std::f64::consts::E).abs() < 1e-12);

        let ch = KoenigsLinearizer::new(Polynomial::parse("2z^2-1").unwrap(), c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((ch.eval(c(1.0, 0.0)).unwrap().re - 2.1781836).abs() < 1e-7);
        assert!((ch.derivative(c(0.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn log_eval_matches_direct() {
        let lin = KoenigsLinearizer::new(Polynomial::parse("z^2-1").unwrap(), c(1.618033988749895, 0.0), c(1.0, 0.0))
            .unwrap();
        let z = c(7.0, 3.0);
        let (v, dv) = lin.eval_at_depth(z, lin.ladder_depth(z)).unwrap();
        let lv = lin.log_eval(z).unwrap();
        assert!((lv.log.exp() - v).norm() < 1e-10 * v.norm());
        assert!((lv.dlog - dv / v).norm() < 1e-10 * (dv / v).norm());
    }

    #[test]
    fn log_eval_past_overflow() {
        let exp = KoenigsLinearizer::new(Polynomial::parse("z^2").unwrap(), c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let z = c(5000.0, 3.0);
        let lv = exp.log_eval(z).unwrap();
        assert!((lv.log.re - 5000.0).abs() < 1e-9);
        let wrapped = (lv.log.im - 3.0).rem_euclid(2.0 * std::f64::consts::PI);
        assert!(wrapped.min(2.0 * std::f64::consts::PI - wrapped) < 1e-9);
        assert!((lv.dlog - c(1.0, 0.0)).norm() < 1e-9);
        assert_eq!(exp.eval(z).unwrap_err().kind(), "Overflow");
    }

    #[test]
    fn disjoint_scale_for_exponential() {
        let exp = KoenigsLinearizer::new(Polynomial::parse("z^2").unwrap(), c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let dj = make_disjoint_type(&exp, std::f64::consts::E).unwrap();
        assert_eq!(dj.kappa, c(0.125, 0.0));
        let again = make_disjoint_type(&dj, std::f64::consts::E).unwrap();
        assert_eq!(again.kappa, dj.kappa);
    }
}
