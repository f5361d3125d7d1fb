//! Entire-function handles: the exponential family `λe^{z^d}`, Koenigs
//! linearizers of polynomials, and composites `f∘exp`.

mod koenigs;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::Complex;

pub use koenigs::{koenigs_coefficients, make_disjoint_type, KoenigsLinearizer, MAX_ORDER};

/// `ln` of the largest finite double.
const LN_MAX: f64 = 709.78;
const TINY: f64 = 1e-300;

/// A logarithm of `f(z)` together with `f'(z)/f(z)`.
///
/// The imaginary part of `log` is only defined modulo `2π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub log: Complex,
    pub dlog: Complex,
}

/// An entire function with the evaluation hooks the tract code needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionDescriptor", into = "FunctionDescriptor")]
pub enum EntireFunction {
    /// `λ·exp(z^d)`.
    ExpPower {
        lambda: Complex,
        d: u32,
        /// Principal `log λ`, kept so that `log_eval` needs no logarithm.
        log_lambda: Complex,
    },
    Koenigs(KoenigsLinearizer),
    /// `inner(exp(z))`.
    CompositeExp(Box<EntireFunction>),
}

fn check_exp(re: f64) -> Result<()> {
    if re > LN_MAX || !re.is_finite() {
        Err(Error::Overflow)
    } else {
        Ok(())
    }
}

impl EntireFunction {
    pub fn exp_power(lambda: Complex, d: u32) -> Result<Self> {
        if d == 0 || lambda.norm() == 0.0 {
            return Err(Error::InvalidInput("exp_power needs d ≥ 1 and λ ≠ 0".into()));
        }
        Ok(EntireFunction::ExpPower { lambda, d, log_lambda: lambda.ln() })
    }

    pub fn exp() -> Self {
        EntireFunction::ExpPower { lambda: Complex::new(1.0, 0.0), d: 1, log_lambda: Complex::new(0.0, 0.0) }
    }

    pub fn composite(inner: EntireFunction) -> Self {
        EntireFunction::CompositeExp(Box::new(inner))
    }

    pub fn eval(&self, z: Complex) -> Result<Complex> {
        match self {
            EntireFunction::ExpPower { lambda, d, .. } => {
                let e = z.powu(*d);
                check_exp(e.re + lambda.norm().ln())?;
                Ok(lambda * e.exp())
            }
            EntireFunction::Koenigs(lin) => lin.eval(z),
            EntireFunction::CompositeExp(inner) => {
                check_exp(z.re)?;
                inner.eval(z.exp())
            }
        }
    }

    pub fn derivative(&self, z: Complex) -> Result<Complex> {
        match self {
            EntireFunction::ExpPower { lambda, d, .. } => {
                let e = z.powu(*d);
                let dz = z.powu(*d - 1) * *d as f64;
                check_exp(e.re + (lambda.norm() * dz.norm().max(TINY)).ln())?;
                Ok(lambda * dz * e.exp())
            }
            EntireFunction::Koenigs(lin) => lin.derivative(z),
            EntireFunction::CompositeExp(inner) => {
                check_exp(z.re)?;
                let w = z.exp();
                Ok(inner.derivative(w)? * w)
            }
        }
    }

    /// `log f(z)` and `f'(z)/f(z)` without forming `f(z)` where it would overflow.
    pub fn log_eval(&self, z: Complex) -> Result<LogValue> {
        match self {
            EntireFunction::ExpPower { d, log_lambda, .. } => {
                Ok(LogValue { log: log_lambda + z.powu(*d), dlog: z.powu(*d - 1) * *d as f64 })
            }
            EntireFunction::Koenigs(lin) => lin.log_eval(z),
            EntireFunction::CompositeExp(inner) => {
                check_exp(z.re)?;
                let w = z.exp();
                let lv = inner.log_eval(w)?;
                Ok(LogValue { log: lv.log, dlog: lv.dlog * w })
            }
        }
    }

    /// A radius `ρ` with every singular value inside the disk of radius `ρ`.
    pub fn singular_radius(&self) -> f64 {
        match self {
            // asymptotic value 0; for d ≥ 2 also the critical value λ
            EntireFunction::ExpPower { lambda, d, .. } => {
                if *d >= 2 {
                    lambda.norm()
                } else {
                    0.0
                }
            }
            // the singular values are the postcritical set of p
            EntireFunction::Koenigs(lin) => {
                let p = &lin.p;
                let cap = p.escape_radius();
                let mut best: f64 = 0.0;
                for c in p.critical_points().unwrap_or_default() {
                    let mut w = p.eval(c);
                    for _ in 0..64 {
                        best = best.max(w.norm());
                        if w.norm() > cap {
                            break;
                        }
                        w = p.eval(w);
                    }
                }
                best.min(cap)
            }
            // exp contributes the asymptotic value inner(0)
            EntireFunction::CompositeExp(inner) => {
                let at_zero = inner.eval(Complex::new(0.0, 0.0)).map(|v| v.norm()).unwrap_or(f64::INFINITY);
                inner.singular_radius().max(at_zero)
            }
        }
    }

    /// Short human-readable name used in reports.
    pub fn label(&self) -> String {
        match self {
            EntireFunction::ExpPower { lambda, d, .. } => {
                let power = if *d == 1 { "z".to_string() } else { format!("z^{d}") };
                if *lambda == Complex::new(1.0, 0.0) {
                    format!("exp({power})")
                } else {
                    format!("({lambda})*exp({power})")
                }
            }
            EntireFunction::Koenigs(lin) => format!("koenigs({}, z0={}, kappa={})", lin.p, lin.z0, lin.kappa),
            EntireFunction::CompositeExp(inner) => format!("({})∘exp", inner.label()),
        }
    }
}

/// `f(z)` for any handle.
pub fn function_eval(h: &EntireFunction, z: Complex) -> Result<Complex> {
    h.eval(z)
}

/// `f'(z)` for any handle.
pub fn function_derivative(h: &EntireFunction, z: Complex) -> Result<Complex> {
    h.derivative(z)
}

/// Derivative in the cylindrical metric, `|f'(z)|·|z|/|f(z)|`.
pub fn metric_derivative(h: &EntireFunction, z: Complex) -> Result<f64> {
    if z.norm() < TINY {
        return Err(Error::ZeroDenominator);
    }
    let lv = h.log_eval(z)?;
    if lv.log.re < TINY.ln() {
        return Err(Error::ZeroDenominator);
    }
    Ok(lv.dlog.norm() * z.norm())
}

fn pair(c: Complex) -> [f64; 2] {
    [c.re, c.im]
}

fn unpair([re, im]: [f64; 2]) -> Complex {
    Complex::new(re, im)
}

/// JSON form of a handle.
///
/// A Koenigs descriptor may omit `z0` (the repelling fixed point with the
/// largest multiplier is used) and `kappa` (default 1). With
/// `disjoint_radius` set, `κ` is halved until the handle is of disjoint type
/// for that radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FunctionDescriptor {
    ExpPower {
        lambda: [f64; 2],
        d: u32,
    },
    Koenigs {
        poly: Polynomial,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z0: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        disjoint_radius: Option<f64>,
    },
    CompositeExp {
        inner: Box<FunctionDescriptor>,
    },
}

impl FunctionDescriptor {
    pub fn build(&self) -> Result<EntireFunction> {
        match self {
            FunctionDescriptor::ExpPower { lambda, d } => EntireFunction::exp_power(unpair(*lambda), *d),
            FunctionDescriptor::Koenigs { poly, z0, kappa, disjoint_radius } => {
                let kappa = kappa.map(unpair).unwrap_or(Complex::new(1.0, 0.0));
                let lin = match z0 {
                    Some(z0) => KoenigsLinearizer::new(poly.clone(), unpair(*z0), kappa)?,
                    None => KoenigsLinearizer::at_dominant_fixed_point(poly.clone(), kappa)?,
                };
                let lin = match disjoint_radius {
                    Some(r) => make_disjoint_type(&lin, *r)?,
                    None => lin,
                };
                Ok(EntireFunction::Koenigs(lin))
            }
            FunctionDescriptor::CompositeExp { inner } => Ok(EntireFunction::composite(inner.build()?)),
        }
    }

    /// Parses JSON, or one of the shorthands `exp`, `exp(z^2)`, `0.25*exp(z)`,
    /// `koenigs(z^2-1)`, `koenigs(z^2-1, disjoint)`, `composite(<inner>)`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("function descriptor: {e}")));
        }
        let bad = || Error::InvalidInput(format!("unrecognised function `{s}`"));
        if let Some(body) = s.strip_prefix("composite(").and_then(|b| b.strip_suffix(')')) {
            return Ok(FunctionDescriptor::CompositeExp { inner: Box::new(Self::parse(body)?) });
        }
        if let Some(body) = s.strip_prefix("koenigs(").and_then(|b| b.strip_suffix(')')) {
            let (poly, disjoint) = match body.split_once(',') {
                Some((p, flag)) if flag.trim() == "disjoint" => (p, Some(std::f64::consts::E)),
                Some(_) => return Err(bad()),
                None => (body, None),
            };
            return Ok(FunctionDescriptor::Koenigs {
                poly: Polynomial::parse(poly)?,
                z0: None,
                kappa: None,
                disjoint_radius: disjoint,
            });
        }
        let (lambda, rest) = match s.split_once('*') {
            Some((l, r)) if r.starts_with("exp") => (l.trim().parse::<f64>().map_err(|_| bad())?, r),
            _ => (1.0, s),
        };
        let d = match rest {
            "exp" | "exp(z)" => 1,
            _ => rest
                .strip_prefix("exp(z^")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|k| k.parse::<u32>().ok())
                .ok_or_else(bad)?,
        };
        Ok(FunctionDescriptor::ExpPower { lambda: [lambda, 0.0], d })
    }
}

impl TryFrom<FunctionDescriptor> for EntireFunction {
    type Error = Error;

    fn try_from(d: FunctionDescriptor) -> Result<Self> {
        d.build()
    }
}

impl From<EntireFunction> for FunctionDescriptor {
    fn from(f: EntireFunction) -> Self {
        match f {
            EntireFunction::ExpPower { lambda, d, .. } => FunctionDescriptor::ExpPower { lambda: pair(lambda), d },
            EntireFunction::Koenigs(lin) => FunctionDescriptor::Koenigs {
                poly: lin.p,
                z0: Some(pair(lin.z0)),
                kappa: Some(pair(lin.kappa)),
                disjoint_radius: None,
            },
            EntireFunction::CompositeExp(inner) => {
                FunctionDescriptor::CompositeExp { inner: Box::new((*inner).into()) }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn exp_power_values() {
        let f = EntireFunction::exp_power(c(1.0, 0.0), 2).unwrap();
        let v = f.eval(c(1.0, 1.0)).unwrap();
        assert!((v - c(-0.4161468, 0.9092974)).norm() < 1e-7);
        assert_eq!(f.eval(c(30.0, 0.0)).unwrap_err().kind(), "Overflow");
    }

    #[test]
    fn composite_value() {
        let inner = EntireFunction::exp_power(c((-6f64).exp(), 0.0), 1).unwrap();
        let f = EntireFunction::composite(inner);
        let v = f.eval(c(10f64.ln(), 0.0)).unwrap();
        assert!((v.re - 4f64.exp()).abs() < 1e-9 * 4f64.exp());
    }

    #[test]
    fn metric_derivative_examples() {
        let e = EntireFunction::exp();
        assert!((metric_derivative(&e, c(3.0, 4.0)).unwrap() - 5.0).abs() < 1e-12);
        let sq = EntireFunction::exp_power(c(1.0, 0.0), 2).unwrap();
        assert!((metric_derivative(&sq, c(2.0, 0.0)).unwrap() - 8.0).abs() < 1e-12);
        let k = FunctionDescriptor::parse("koenigs(z^2)").unwrap().build().unwrap();
        assert!((metric_derivative(&k, c(2.0, 0.0)).unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(metric_derivative(&e, c(0.0, 0.0)).unwrap_err().kind(), "ZeroDenominator");
    }

    #[test]
    fn koenigs_of_square_is_exp() {
        let k = FunctionDescriptor::parse("koenigs(z^2)").unwrap().build().unwrap();
        assert!((k.eval(c(1.0, 0.0)).unwrap().re - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn descriptor_json_round_trip() {
        let src = r#"{"family":"composite_exp","inner":{"family":"exp_power","lambda":[0.25,0.0],"d":1}}"#;
        let f: EntireFunction = serde_json::from_str(src).unwrap();
        assert_eq!(serde_json::to_string(&f).unwrap(), src);
        let k: EntireFunction = serde_json::from_str(r#"{"family":"koenigs","poly":"z^2-1"}"#).unwrap();
        let again: EntireFunction = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
        assert_eq!(k, again);
    }

    #[test]
    fn shorthand_forms() {
        assert_eq!(
            FunctionDescriptor::parse("0.25*exp(z)").unwrap(),
            FunctionDescriptor::ExpPower { lambda: [0.25, 0.0], d: 1 }
        );
        assert_eq!(
            FunctionDescriptor::parse("exp(z^3)").unwrap(),
            FunctionDescriptor::ExpPower { lambda: [1.0, 0.0], d: 3 }
        );
        assert!(FunctionDescriptor::parse("sin(z)").is_err());
    }
}
