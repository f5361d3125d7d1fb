//! The Böttcher coordinate of the Chebyshev polynomial against its closed
//! form, and circle-mean growth exponents for `z^2 - 1`.

use tractdyn::poly::{bottcher_beta, bottcher_inverse, Polynomial};
use tractdyn::Complex;

fn main() -> tractdyn::Result<()> {
    let cheb = Polynomial::parse("z^2-2")?;
    for r in [1.05, 1.5, 3.0] {
        let z = Complex::from_polar(r, 0.7);
        let h = bottcher_inverse(&cheb, z)?;
        println!("r = {r:<4}  h(z) = {h:.12}  z + 1/z = {:.12}", z + z.inv());
    }

    let basilica = Polynomial::parse("z^2-1")?;
    let ts = [0.0, 0.5, 1.0, 1.5, 2.0];
    let radii = [1.1, 1.03, 1.01];
    let betas = bottcher_beta(&basilica, &ts, &radii)?;
    println!("\nz^2-1, radii {radii:?}");
    for (t, b) in ts.iter().zip(betas) {
        println!("  β({t:.1}) = {b:+.4}");
    }
    Ok(())
}
