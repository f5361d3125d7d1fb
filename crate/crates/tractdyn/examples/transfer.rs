//! The transfer operator of `exp` against its cotangent closed form, the
//! dyadic block profile, and divergence below exponent one.

use tractdyn::linearizer::EntireFunction;
use tractdyn::tract::find_tracts;
use tractdyn::transfer::{transfer_apply_point, transfer_dyadic_profile, DEFAULT_K_BUDGET};
use tractdyn::Complex;

fn main() -> tractdyn::Result<()> {
    let atlas = find_tracts(&EntireFunction::exp(), std::f64::consts::E)?;
    for b in [2.0f64, 4.0, 8.0] {
        let s = transfer_apply_point(&atlas, 2.0, Complex::new(b.exp(), 0.0), DEFAULT_K_BUDGET)?;
        let exact = 1.0 / (2.0 * b * (b / 2.0).tanh());
        println!("L_2 1(e^{b}) = {:.9}  closed form {exact:.9}  tail ≤ {:.1e}", s.value, s.tail_estimate);
    }

    let w = Complex::new(3f64.exp(), 0.0);
    println!("\nblock exponents at t = 1.5 (expect → -0.5)");
    for block in transfer_dyadic_profile(&atlas, 1.5, w, 12)?.iter().skip(1) {
        println!("  n = {:>2}  sum {:.3e}  exponent {:+.4}", block.n, block.sum, block.exponent);
    }
    for t in [0.8, 1.1] {
        match transfer_apply_point(&atlas, t, w, DEFAULT_K_BUDGET) {
            Ok(s) => println!("t = {t}: {:.4} from {} terms", s.value, s.terms_used),
            Err(e) => println!("t = {t}: {e}"),
        }
    }
    Ok(())
}
