//! Small regression and root-bracketing helpers shared by the estimators.

use crate::error::{Error, Result};

/// Ordinary least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "line fit needs two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    LineFit { slope, intercept, residual: (ss / n).sqrt() }
}

/// Result of a bisection search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub root: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Bisects `f` on `[lo, hi]` until the bracket is narrower than `width`.
/// The reported root is the secant point of the final bracket.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, width: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(Bracket { root: lo, lo, hi: lo });
    }
    if f_hi == 0.0 {
        return Ok(Bracket { root: hi, lo: hi, hi });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(Bracket { root: mid, lo: mid, hi: mid });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    // secant point of the final bracket; exact for affine `f`
    let root = lo - f_lo * (hi - lo) / (f_hi - f_lo);
    Ok(Bracket { root, lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = line_fit(&xs, &ys);
        assert!((fit.slope + 0.5).abs() < 1e-14);
        assert!((fit.intercept - 2.0).abs() < 1e-14);
        assert!(fit.residual < 1e-14);
    }

    #[test]
    fn affine_root() {
        let b = bisect(|t| Ok((1.0 - t) * std::f64::consts::LN_2), 0.1, 2.0, 1e-6).unwrap();
        assert!((b.root - 1.0).abs() < 1e-6);
    }

    #[test]
    fn no_sign_change() {
        let e = bisect(|t| Ok(t + 1.0), 0.0, 1.0, 1e-3).unwrap_err();
        assert_eq!(e.kind(), "NoSignChange");
    }
}
