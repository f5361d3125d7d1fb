//! Finds the tracts of a function, traces rescaled boundaries and writes
//! them as SVG next to the system temp dir.
//!
//! ```text
//! cargo run --release --example tracts -- "koenigs(z^2-1, disjoint)"
//! ```

use tractdyn::linearizer::FunctionDescriptor;
use tractdyn::tract::{boundary_svg, el_bound_violations, exhaustion_ratio, find_tracts, trace_boundary};

fn main() -> tractdyn::Result<()> {
    let handle = std::env::args().nth(1).unwrap_or_else(|| "exp(z^2)".into());
    let f = FunctionDescriptor::parse(&handle)?.build()?;
    let atlas = find_tracts(&f, std::f64::consts::E)?;
    println!("{}: {} tract(s)", f.label(), atlas.tracts.len());

    let dir = std::env::temp_dir().join("tractdyn-tracts");
    std::fs::create_dir_all(&dir).expect("temp dir is writable");
    for (i, branch) in atlas.tracts.iter().enumerate() {
        let traces =
            [1.0, 5.0, 20.0].map(|t| trace_boundary(branch, t, 512)).into_iter().collect::<Result<Vec<_>, _>>()?;
        let path = dir.join(format!("tract{i}.svg"));
        std::fs::write(&path, boundary_svg(&traces)).expect("svg written");
        let el = el_bound_violations(branch, 2000, 50.0)?;
        println!(
            "  tract {i}: base {:.4}, ratio(T=16) {:.3}, log-derivative bound worst {:.3}, {}",
            branch.base_point,
            exhaustion_ratio(branch, 16.0, 200)?,
            el.worst_ratio,
            path.display()
        );
    }
    Ok(())
}
