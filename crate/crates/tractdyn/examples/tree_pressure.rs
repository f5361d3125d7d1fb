//! Tree pressure of a few quadratic polynomials and the zero of each curve.
//!
//! ```text
//! cargo run --release --example tree_pressure -- "z^2-1"
//! ```

use tractdyn::poly::{bowen_zero_poly, pressure_curve, Polynomial};
use tractdyn::Complex;

fn main() -> tractdyn::Result<()> {
    let polys: Vec<String> = std::env::args().skip(1).collect();
    let polys = if polys.is_empty() { vec!["z^2".into(), "z^2-1".into(), "z^2+0.25".into()] } else { polys };
    let ts = [0.0, 0.5, 1.0, 1.5, 2.0];
    for s in &polys {
        let p = Polynomial::parse(s)?;
        let w = Complex::new(p.escape_radius(), 0.0);
        let curve = pressure_curve(&p, w, 12, &ts)?;
        println!("{s}");
        for (t, v) in ts.iter().zip(&curve.values) {
            println!("  P({t:.1}) = {v:+.5}");
        }
        match bowen_zero_poly(&p, 12) {
            Ok(b) => println!("  zero = {:.4}  bracket [{:.4}, {:.4}]", b.root, b.lo, b.hi),
            Err(e) => println!("  zero: {e}"),
        }
    }
    Ok(())
}
