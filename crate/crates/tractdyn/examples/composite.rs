//! Spectra of `f = e^{z-6}` and of `F = f∘exp` side by side.

use tractdyn::linearizer::{EntireFunction, FunctionDescriptor};
use tractdyn::spectrum::composite_spectrum_compare;
use tractdyn::tract::find_tracts;

fn main() -> tractdyn::Result<()> {
    let inner = FunctionDescriptor::ExpPower { lambda: [(-6f64).exp(), 0.0], d: 1 }.build()?;
    let outer = EntireFunction::composite(inner.clone());
    let r = std::f64::consts::E;
    let (f, big) = (find_tracts(&inner, r)?, find_tracts(&outer, r)?);
    let scales: Vec<f64> = (3..=12).map(|j| 2f64.powi(j)).collect();
    let ts: Vec<f64> = (0..=8).map(|i| 0.25 * i as f64).collect();
    let report = composite_spectrum_compare(&f.tracts[0], &big.tracts[0], &ts, &scales)?;
    println!("{:>5} {:>9} {:>9}", "t", "β̂ f", "β̂ F");
    for (t, a, b) in &report.rows {
        println!("{t:>5.2} {a:>+9.4} {b:>+9.4}");
    }
    println!("Θ̂_f = {:?}, Θ̂_F = {:?}", report.theta_inner, report.theta_composite);
    Ok(())
}
