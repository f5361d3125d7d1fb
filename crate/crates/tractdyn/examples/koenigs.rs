//! Poincaré linearizers: the exponential and Chebyshev cases, and the
//! disjoint-type rescaling of a fractal one.

use tractdyn::linearizer::{make_disjoint_type, KoenigsLinearizer};
use tractdyn::poly::Polynomial;
use tractdyn::Complex;

fn main() -> tractdyn::Result<()> {
    let one = Complex::new(1.0, 0.0);
    let square = KoenigsLinearizer::new(Polynomial::parse("z^2")?, one, one)?;
    let cheb = KoenigsLinearizer::new(Polynomial::parse("2z^2-1")?, one, one)?;
    for z in [Complex::new(1.5, 0.0), Complex::new(-0.3, 1.1)] {
        println!("z = {z}");
        println!("  z^2 linearizer    {:.14}   exp z       {:.14}", square.eval(z)?, z.exp());
        println!("  2z^2-1 linearizer {:.14}   cosh √(2z)  {:.14}", cheb.eval(z)?, (2.0 * z).sqrt().cosh());
    }

    let basilica = KoenigsLinearizer::at_dominant_fixed_point(Polynomial::parse("z^2-1")?, one)?;
    let disjoint = make_disjoint_type(&basilica, std::f64::consts::E)?;
    println!("\nz^2-1 at z0 = {:.6}: λ = {:.6}, series order {}", basilica.z0, basilica.lambda, basilica.taylor.len());
    println!("disjoint-type scale κ = {}", disjoint.kappa);
    Ok(())
}
