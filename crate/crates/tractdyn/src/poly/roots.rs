use crate::error::{Error, Result};
use crate::Complex;

/// Iteration controls for [`aberth`].
#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    pub max_iter: usize,
    /// Relative step size below which a root counts as settled.
    pub step_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { max_iter: 500, step_tol: 1e-15 }
    }
}

#[derive(Debug, Clone)]
pub struct Roots {
    /// Roots in canonical (real part, then imaginary part) order.
    pub roots: Vec<Complex>,
    pub iterations: usize,
}

fn horner(c: &[Complex], z: Complex) -> (Complex, Complex) {
    let mut v = Complex::new(0.0, 0.0);
    let mut dv = Complex::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dv = dv * z + v;
        v = v * z + a;
    }
    (v, dv)
}

/// All roots of the polynomial with coefficients `coeffs` (constant first) by
/// Aberth–Ehrlich iteration.
///
/// Starting values sit on a ring around the centroid of the roots, with a
/// fixed irrational angular offset so that symmetric polynomials do not start
/// on a symmetry axis. The result is a deterministic function of the input.
pub fn aberth(coeffs: &[Complex], opts: &RootOptions) -> Result<Roots> {
    let n = coeffs
        .len()
        .checked_sub(1)
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::InvalidInput("root finder needs degree at least 1".into()))?;
    let lead = coeffs[n];
    if lead.norm() == 0.0 {
        return Err(Error::InvalidInput("vanishing leading coefficient".into()));
    }
    let monic: Vec<Complex> = coeffs.iter().map(|c| c / lead).collect();
    if n == 1 {
        return Ok(Roots { roots: vec![-monic[0]], iterations: 0 });
    }

    let center = -monic[n - 1] / n as f64;
    let at_center = horner(&monic, center).0.norm();
    let radius = if at_center > 0.0 {
        at_center.powf(1.0 / n as f64)
    } else {
        1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max)
    };
    let mut z: Vec<Complex> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            center + Complex::from_polar(radius, angle)
        })
        .collect();

    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let mut settled = true;
        for k in 0..n {
            let (v, dv) = horner(&monic, z[k]);
            if v.norm() == 0.0 {
                continue;
            }
            let repulsion: Complex = (0..n)
                .filter(|&j| j != k)
                .map(|j| {
                    let d = z[k] - z[j];
                    if d.norm() == 0.0 {
                        Complex::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let step = if dv.norm() == 0.0 {
                // stationary point: nudge off it deterministically
                Complex::new(1e-8 * (1.0 + z[k].norm()), 0.0)
            } else {
                let ratio = v / dv;
                ratio / (Complex::new(1.0, 0.0) - ratio * repulsion)
            };
            if !step.re.is_finite() || !step.im.is_finite() {
                return Err(Error::NonConvergence { residual: f64::INFINITY });
            }
            z[k] -= step;
            if step.norm() > opts.step_tol * (1.0 + z[k].norm()) {
                settled = false;
            }
        }
        if settled {
            break;
        }
    }
    z.sort_by(super::canonical_cmp);
    Ok(Roots { roots: z, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(c: &[f64]) -> Vec<Complex> {
        c.iter().map(|&x| Complex::new(x, 0.0)).collect()
    }

    #[test]
    fn cubic_with_known_roots() {
        // (z-1)(z-2)(z+3) = z^3 - 7z + 6
        let r = aberth(&real(&[6.0, -7.0, 0.0, 1.0]), &RootOptions::default()).unwrap();
        let expect = [-3.0, 1.0, 2.0];
        for (z, e) in r.roots.iter().zip(expect) {
            assert!((z - Complex::new(e, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn roots_of_unity() {
        let mut c = vec![Complex::new(0.0, 0.0); 8];
        c[0] = Complex::new(-1.0, 0.0);
        c.push(Complex::new(1.0, 0.0));
        let r = aberth(&c, &RootOptions::default()).unwrap();
        for z in &r.roots {
            assert!((z.powu(8) - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn deterministic() {
        let c = real(&[0.3, -1.0, 0.0, 2.0, 1.0]);
        let a = aberth(&c, &RootOptions::default()).unwrap();
        let b = aberth(&c, &RootOptions::default()).unwrap();
        assert_eq!(a.roots, b.roots);
    }
}
