use serde::{Deserialize, Serialize};

use super::Polynomial;
use crate::error::{Error, Result};
use crate::Complex;

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
pub(super) enum PolyRepr {
    Coeffs { coeffs: Vec<[f64; 2]> },
    Shorthand(String),
}

impl TryFrom<PolyRepr> for Polynomial {
    type Error = Error;

    fn try_from(r: PolyRepr) -> Result<Self> {
        match r {
            PolyRepr::Coeffs { coeffs } => {
                Polynomial::new(coeffs.into_iter().map(|[re, im]| Complex::new(re, im)).collect())
            }
            PolyRepr::Shorthand(s) => parse_shorthand(&s),
        }
    }
}

impl From<Polynomial> for PolyRepr {
    fn from(p: Polynomial) -> Self {
        PolyRepr::Coeffs { coeffs: p.coeffs.iter().map(|c| [c.re, c.im]).collect() }
    }
}

/// Parses sums of terms `c`, `c*z`, `cz^k`, `z^k` with integer or decimal `c`.
pub(super) fn parse_shorthand(s: &str) -> Result<Polynomial> {
    let src: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if src.is_empty() {
        return Err(Error::InvalidInput("empty polynomial".into()));
    }
    let bad = |why: &str| Error::InvalidInput(format!("cannot parse polynomial `{s}`: {why}"));

    let mut terms = Vec::new();
    let mut start = 0;
    for (i, ch) in src.char_indices() {
        if (ch == '+' || ch == '-') && i > start {
            terms.push(&src[start..i]);
            start = i;
        }
    }
    terms.push(&src[start..]);

    let mut coeffs: Vec<f64> = Vec::new();
    for term in terms {
        let (sign, body) = match term.as_bytes().first() {
            Some(b'-') => (-1.0, &term[1..]),
            Some(b'+') => (1.0, &term[1..]),
            _ => (1.0, term),
        };
        if body.is_empty() {
            return Err(bad("dangling sign"));
        }
        let (coef, power) = match body.find('z') {
            None => (body.parse::<f64>().map_err(|_| bad("bad constant"))?, 0usize),
            Some(pos) => {
                let head = body[..pos].trim_end_matches('*');
                let coef =
                    if head.is_empty() { 1.0 } else { head.parse::<f64>().map_err(|_| bad("bad coefficient"))? };
                let tail = &body[pos + 1..];
                let power = if tail.is_empty() {
                    1
                } else if let Some(exp) = tail.strip_prefix('^') {
                    exp.parse::<usize>().map_err(|_| bad("bad exponent"))?
                } else {
                    return Err(bad("unexpected text after z"));
                };
                (coef, power)
            }
        };
        if coeffs.len() <= power {
            coeffs.resize(power + 1, 0.0);
        }
        coeffs[power] += sign * coef;
    }
    Polynomial::from_real(&coeffs)
}

fn fmt_real(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// Renders real-coefficient polynomials in shorthand, others as coefficient JSON.
pub(super) fn render(p: &Polynomial) -> String {
    if p.coeffs.iter().any(|c| c.im != 0.0) {
        let list: Vec<String> = p.coeffs.iter().map(|c| format!("[{},{}]", c.re, c.im)).collect();
        return format!("{{\"coeffs\":[{}]}}", list.join(","));
    }
    let mut out = String::new();
    for (k, c) in p.coeffs.iter().enumerate().rev() {
        let a = c.re;
        if a == 0.0 {
            continue;
        }
        let sign = if a < 0.0 { "-" } else { "+" };
        if out.is_empty() {
            if a < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(sign);
        }
        let mag = a.abs();
        let coef = if k > 0 && mag == 1.0 { String::new() } else { fmt_real(mag) };
        out.push_str(&coef);
        match k {
            0 => {}
            1 => out.push('z'),
            _ => out.push_str(&format!("z^{k}")),
        }
    }
    out
}
