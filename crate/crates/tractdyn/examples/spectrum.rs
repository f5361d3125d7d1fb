//! Integral means spectrum `β̂_∞(t)` and `Θ̂` of a function given on the
//! command line.

use tractdyn::linearizer::FunctionDescriptor;
use tractdyn::spectrum::{negative_spectrum_check, spectrum_curve, SpectrumSampler};
use tractdyn::tract::find_tracts;

fn main() -> tractdyn::Result<()> {
    let handle = std::env::args().nth(1).unwrap_or_else(|| "0.25*exp(z)".into());
    let atlas = find_tracts(&FunctionDescriptor::parse(&handle)?.build()?, std::f64::consts::E)?;
    let scales: Vec<f64> = (3..=12).map(|j| 2f64.powi(j)).collect();
    let samplers = atlas.tracts.iter().map(|b| SpectrumSampler::new(b, &scales)).collect::<Result<Vec<_>, _>>()?;
    let ts: Vec<f64> = (0..=8).map(|i| 0.25 * i as f64).collect();
    let curve = spectrum_curve(&samplers, &ts)?;

    println!("{:>5} {:>9} {:>9} {:>8}", "t", "β̂", "b̂", "drift");
    for (i, t) in ts.iter().enumerate() {
        println!("{t:>5.2} {:>+9.4} {:>+9.4} {:>8.4}", curve.beta_inf[i], curve.b_inf[i], curve.drift[i]);
    }
    let neg = negative_spectrum_check(&curve);
    println!("Θ̂ = {:?}, negative spectrum: {}", curve.theta_hat, neg.negative);
    Ok(())
}
