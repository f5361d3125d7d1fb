//! Drives the command pipeline from a config value instead of the binary:
//! a reduced spectrum run and the polynomial dimension estimate.

use tractdyn::cli::{cmd_hypdim_poly, cmd_spectrum, RunConfig};

fn main() -> tractdyn::Result<()> {
    let mut cfg = RunConfig::from_json(r#"{"function": {"family": "exp_power", "lambda": [1.0, 0.0], "d": 2}}"#)?;
    cfg.scales.j_max = 10;
    cfg.t_grid.step = 0.5;
    cfg.out_dir = std::env::temp_dir().join("tractdyn-run");
    println!("{}", cfg.to_json());

    let summary = cmd_spectrum(&cfg)?;
    println!("Θ̂ = {:?} over {} tract(s), max drift {:.4}", summary.theta_hat, summary.tracts, summary.max_drift);
    let poly = cmd_hypdim_poly("z^2-2", &cfg)?;
    println!("{}", serde_json::to_string(&poly).expect("serializes"));
    Ok(())
}
