//! Iterated-operator pressure of `e^z/4` and its zero above `Θ̂ = 1`.

use tractdyn::linearizer::FunctionDescriptor;
use tractdyn::tract::find_tracts;
use tractdyn::transfer::{bowen_zero_entire, EntirePressureCurve, TransferTree, DEFAULT_NODE_BUDGET};
use tractdyn::Complex;

fn main() -> tractdyn::Result<()> {
    let handle = std::env::args().nth(1).unwrap_or_else(|| "0.25*exp(z)".into());
    let atlas = find_tracts(&FunctionDescriptor::parse(&handle)?.build()?, std::f64::consts::E)?;
    let tree = TransferTree::build(&atlas, Complex::new(3f64.exp(), 0.0), 3, 15, DEFAULT_NODE_BUDGET)?;
    let ts: Vec<f64> = (0..=8).map(|i| 1.1 + 0.1 * i as f64).collect();
    let curve = EntirePressureCurve::from_tree(&tree, &ts)?;
    for (t, p) in ts.iter().zip(&curve.values) {
        println!("P({t:.1}) = {p:+.4}");
    }
    println!("monotone: {}, nodes per level {:?}", curve.is_monotone(), curve.level_nodes);
    match bowen_zero_entire(&tree, 1.0) {
        Ok(b) => println!("zero = {:.3} in [{:.3}, {:.3}]", b.root, b.lo, b.hi),
        Err(e) => println!("no zero: {e}"),
    }
    Ok(())
}
