//! Run configuration and the pipeline commands behind the `tractdyn` binary.
//!
//! Every command validates the configuration, runs the library kernels and
//! writes its artifacts under `out_dir`. Outputs depend only on the
//! configuration, never on timing or the worker count.

mod verify;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linearizer::{EntireFunction, FunctionDescriptor};
use crate::poly::{bowen_zero_poly, Polynomial};
use crate::spectrum::{
    negative_spectrum_check, spectrum_curve, NegativeSpectrumReport, SpectrumCurve, SpectrumSampler,
};
use crate::tract::{boundary_csv, boundary_svg, find_tracts, trace_boundary, TractAtlas, MIN_OFFSET};
use crate::transfer::{
    bowen_zero_entire, transfer_apply_point, EntirePressureCurve, TransferSample, TransferTree, MAX_LEVELS,
};
use crate::Complex;

pub use verify::{cmd_verify, VerifyLine, VerifyReport};

/// Geometric scale grid `T_j = 2^j`, `j = j_min..=j_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleGrid {
    pub j_min: i32,
    pub j_max: i32,
}

impl ScaleGrid {
    pub fn values(&self) -> Vec<f64> {
        (self.j_min..=self.j_max).map(|j| 2f64.powi(j)).collect()
    }
}

/// Exponents `min, min + step, …` up to `max` (inclusive within `step/2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl ExponentGrid {
    pub fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0) || !(self.max >= self.min) {
            return Vec::new();
        }
        let n = ((self.max - self.min) / self.step + 0.5).floor() as usize;
        // rounded to 12 digits so that 0.1-steps print cleanly
        (0..=n).map(|i| ((self.min + self.step * i as f64) * 1e12).round() / 1e12).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Cap on preimage-tree nodes, polynomial and entire.
    pub tree_nodes: u64,
    /// Largest `|k|` in a single transfer sum.
    pub k_terms: u64,
    /// Per-level `|k|` range of the iterated operator.
    pub branch: u64,
    /// Depth of the iterated operator.
    pub levels: usize,
    /// Depth of polynomial preimage trees.
    pub poly_depth: usize,
    /// Absolute quadrature tolerance for integral means.
    pub quad_tol: f64,
    /// Samples per traced tract boundary.
    pub boundary_points: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            tree_nodes: 1 << 22,
            k_terms: crate::transfer::DEFAULT_K_BUDGET,
            branch: crate::transfer::DEFAULT_BRANCH_BUDGET,
            levels: 3,
            poly_depth: 14,
            quad_tol: crate::spectrum::QUAD_TOL,
            boundary_points: 1024,
        }
    }
}

/// Everything a run depends on. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub function: FunctionDescriptor,
    /// `R` of the tract atlas.
    pub radius: f64,
    #[serde(rename = "T_grid")]
    pub scales: ScaleGrid,
    pub t_grid: ExponentGrid,
    pub budgets: Budgets,
    pub out_dir: PathBuf,
    /// Skip offset of the low-discrepancy sampling sequences.
    pub seed: u64,
    /// Scales `T` drawn by `tract-plot`.
    pub plot_scales: Vec<f64>,
    /// `s` with base point `w = e^s` for the iterated operator.
    pub base_log: f64,
    /// `s` values with `w = e^s` for `transfer`.
    pub transfer_logs: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            function: FunctionDescriptor::ExpPower { lambda: [1.0, 0.0], d: 1 },
            radius: std::f64::consts::E,
            scales: ScaleGrid { j_min: 3, j_max: 14 },
            t_grid: ExponentGrid { min: 0.0, max: 2.0, step: 0.1 },
            budgets: Budgets::default(),
            out_dir: PathBuf::from("out"),
            seed: 0,
            plot_scales: vec![1.0, 5.0, 20.0],
            base_log: 3.0,
            transfer_logs: vec![2.0, 4.0, 8.0, 16.0, 32.0],
        }
    }
}

fn sorted(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Budgets positive, grids non-empty and sorted.
    pub fn validate(&self) -> Result<()> {
        let b = &self.budgets;
        if b.tree_nodes == 0 || b.k_terms == 0 || b.branch == 0 || b.levels == 0 || b.poly_depth == 0 {
            return Err(Error::InvalidInput("budgets must be positive".into()));
        }
        if b.levels > MAX_LEVELS {
            return Err(Error::InvalidInput(format!("at most {MAX_LEVELS} levels")));
        }
        if !(b.quad_tol > 0.0) || b.boundary_points < 64 {
            return Err(Error::InvalidInput("quadrature tolerance must be positive and boundary points ≥ 64".into()));
        }
        if !(self.radius >= 1.0) {
            return Err(Error::InvalidInput(format!("radius {} must be at least 1", self.radius)));
        }
        let scales = self.scales.values();
        if scales.len() < 4 || scales[0] < 1.0 / MIN_OFFSET.sqrt() {
            return Err(Error::InvalidGrid("T grid needs j_min ≥ 3 and at least four scales".into()));
        }
        let ts = self.t_grid.values();
        if ts.is_empty() || ts[0] < 0.0 {
            return Err(Error::InvalidGrid("t grid is empty or negative".into()));
        }
        if self.plot_scales.is_empty() || !sorted(&self.plot_scales) || !(self.plot_scales[0] >= 1.0) {
            return Err(Error::InvalidGrid("plot scales must be increasing and at least 1".into()));
        }
        if self.transfer_logs.is_empty() || !sorted(&self.transfer_logs) || !(self.base_log > self.radius.ln()) {
            return Err(Error::InvalidGrid("transfer points must be increasing and outside the disk".into()));
        }
        if self.transfer_logs[0] <= self.radius.ln() {
            return Err(Error::InvalidGrid("transfer points must lie outside the disk".into()));
        }
        Ok(())
    }

    pub fn atlas(&self) -> Result<TractAtlas> {
        find_tracts(&self.function.build()?, self.radius)
    }
}

/// Exit status for an error: 2 for configuration problems, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidGrid(_) | Error::InvalidInput(_) => 2,
        _ => 3,
    }
}

/// `{"error": kind, "message": text}`.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({ "error": e.kind(), "message": e.to_string() }).to_string()
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::InvalidInput(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

/// One SVG and one CSV per tract and plot scale; returns the written paths.
pub fn cmd_tract_plot(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let atlas = cfg.atlas()?;
    let mut written = Vec::new();
    for (i, branch) in atlas.tracts.iter().enumerate() {
        for &t_scale in &cfg.plot_scales {
            let trace = trace_boundary(branch, t_scale, cfg.budgets.boundary_points)?;
            let stem = format!("tract{i}_T{t_scale}");
            let traces = std::slice::from_ref(&trace);
            written.push(write(&cfg.out_dir, &format!("{stem}.svg"), &boundary_svg(traces))?);
            written.push(write(&cfg.out_dir, &format!("{stem}.csv"), &boundary_csv(traces))?);
        }
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub function: String,
    pub tracts: usize,
    pub theta_hat: Option<f64>,
    pub negative_spectrum: NegativeSpectrumReport,
    /// Largest drift over the t grid.
    pub max_drift: f64,
    pub curve: SpectrumCurve,
}

pub fn spectrum_of(atlas: &TractAtlas, cfg: &RunConfig) -> Result<SpectrumCurve> {
    let scales = cfg.scales.values();
    let samplers: Vec<SpectrumSampler> = atlas
        .tracts
        .iter()
        .map(|b| SpectrumSampler::with_tolerance(b, &scales, cfg.budgets.quad_tol))
        .collect::<Result<_>>()?;
    spectrum_curve(&samplers, &cfg.t_grid.values())
}

/// `spectrum.csv` and `spectrum.json`.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<SpectrumSummary> {
    cfg.validate()?;
    let atlas = cfg.atlas()?;
    let curve = spectrum_of(&atlas, cfg)?;
    let summary = SpectrumSummary {
        function: atlas.function.label(),
        tracts: atlas.tracts.len(),
        theta_hat: curve.theta_hat,
        negative_spectrum: negative_spectrum_check(&curve),
        max_drift: curve.drift.iter().cloned().fold(0.0, f64::max),
        curve,
    };
    write(&cfg.out_dir, "spectrum.csv", &summary.curve.to_csv())?;
    write(&cfg.out_dir, "spectrum.json", &to_json(&summary))?;
    Ok(summary)
}

/// One `(t, s)` cell of the transfer table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRow {
    pub t: f64,
    pub s: f64,
    pub sample: Option<TransferSample>,
    /// Error kind when the sum was not formed, e.g. `DivergenceDetected`.
    pub error: Option<String>,
}

/// `L_t𝟙(e^s)` for every `t` on the grid (`t > 0`) and every configured `s`.
/// Divergent cells are reported, not raised.
pub fn cmd_transfer(cfg: &RunConfig) -> Result<Vec<TransferRow>> {
    cfg.validate()?;
    let atlas = cfg.atlas()?;
    let mut rows = Vec::new();
    for t in cfg.t_grid.values().into_iter().filter(|t| *t > 0.0) {
        for &s in &cfg.transfer_logs {
            let w = Complex::new(s.exp(), 0.0);
            let row = match transfer_apply_point(&atlas, t, w, cfg.budgets.k_terms) {
                Ok(sample) => TransferRow { t, s, sample: Some(sample), error: None },
                Err(e @ Error::DivergenceDetected { .. }) => {
                    TransferRow { t, s, sample: None, error: Some(e.kind().into()) }
                }
                Err(e) => return Err(e),
            };
            rows.push(row);
        }
    }
    write(&cfg.out_dir, "transfer.json", &to_json(&rows))?;
    Ok(rows)
}

fn pressure_tree(atlas: &TractAtlas, cfg: &RunConfig) -> Result<TransferTree> {
    let w = Complex::new(cfg.base_log.exp(), 0.0);
    TransferTree::build(atlas, w, cfg.budgets.levels, cfg.budgets.branch, cfg.budgets.tree_nodes as u128)
}

/// `P̂` over the positive part of the t grid, `pressure.json`.
pub fn cmd_pressure(cfg: &RunConfig) -> Result<EntirePressureCurve> {
    cfg.validate()?;
    let atlas = cfg.atlas()?;
    let tree = pressure_tree(&atlas, cfg)?;
    let ts: Vec<f64> = cfg.t_grid.values().into_iter().filter(|t| *t > 0.0).collect();
    let curve = EntirePressureCurve::from_tree(&tree, &ts)?;
    write(&cfg.out_dir, "pressure.json", &to_json(&curve))?;
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypdimReport {
    pub function: String,
    pub theta_hat: Option<f64>,
    pub bowen_zero: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub diagnostics: HypdimDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypdimDiagnostics {
    pub negative_spectrum: bool,
    pub pressure: EntirePressureCurve,
    /// Zero of the tree pressure of `p` for Koenigs handles.
    pub bowen_zero_poly: Option<f64>,
    /// Why no zero was reported.
    pub failure: Option<String>,
}

/// Tracts → spectrum → pressure → Bowen zero, `hypdim.json`.
pub fn cmd_hypdim(cfg: &RunConfig) -> Result<HypdimReport> {
    cfg.validate()?;
    let atlas = cfg.atlas()?;
    let curve = spectrum_of(&atlas, cfg)?;
    let negative = negative_spectrum_check(&curve);
    let tree = pressure_tree(&atlas, cfg)?;
    let ts: Vec<f64> = cfg.t_grid.values().into_iter().filter(|t| *t > 0.0).collect();
    let pressure = EntirePressureCurve::from_tree(&tree, &ts)?;
    let bowen_zero_poly = match atlas.function.as_ref() {
        EntireFunction::Koenigs(lin) => Some(bowen_zero_poly(&lin.p, cfg.budgets.poly_depth)?.root),
        _ => None,
    };
    let (zero, failure) = match curve.theta_hat {
        None => (None, Some("NoSignChange: b̂_∞ has no zero in (0, 2]".to_string())),
        Some(theta) => match bowen_zero_entire(&tree, theta) {
            Ok(b) => (Some(b), None),
            Err(e) => (None, Some(e.to_string())),
        },
    };
    let report = HypdimReport {
        function: atlas.function.label(),
        theta_hat: curve.theta_hat,
        bowen_zero: zero.map(|b| b.root),
        bracket: zero.map(|b| (b.lo, b.hi)),
        diagnostics: HypdimDiagnostics { negative_spectrum: negative.negative, pressure, bowen_zero_poly, failure },
    };
    write(&cfg.out_dir, "hypdim.json", &to_json(&report))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyHypdim {
    pub poly: String,
    pub depth: usize,
    pub bowen_zero: f64,
    pub bracket: (f64, f64),
}

/// Zero of the tree pressure of a polynomial.
pub fn cmd_hypdim_poly(poly: &str, cfg: &RunConfig) -> Result<PolyHypdim> {
    cfg.validate()?;
    let p = Polynomial::parse(poly)?;
    let needed = (p.degree() as u128).pow(cfg.budgets.poly_depth as u32 + 1);
    if needed > cfg.budgets.tree_nodes as u128 {
        return Err(Error::BudgetExceeded { needed, budget: cfg.budgets.tree_nodes as u128 });
    }
    let b = bowen_zero_poly(&p, cfg.budgets.poly_depth)?;
    let report =
        PolyHypdim { poly: p.to_shorthand(), depth: cfg.budgets.poly_depth, bowen_zero: b.root, bracket: (b.lo, b.hi) };
    write(&cfg.out_dir, "hypdim_poly.json", &to_json(&report))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn exponent_grid_is_inclusive() {
        let g = ExponentGrid { min: 0.0, max: 2.0, step: 0.1 };
        let v = g.values();
        assert_eq!(v.len(), 21);
        assert_eq!(v[3], 0.3);
        assert_eq!(*v.last().unwrap(), 2.0);
        assert!(ExponentGrid { min: 1.0, max: 0.0, step: 0.1 }.values().is_empty());
    }

    #[test]
    fn zero_plot_scale_is_a_grid_error() {
        let cfg = RunConfig { plot_scales: vec![0.0, 5.0], ..RunConfig::default() };
        let e = cfg.validate().unwrap_err();
        assert_eq!(e.kind(), "InvalidGrid");
        assert_eq!(exit_code(&e), 2);
        assert!(error_json(&e).starts_with(r#"{"error":"InvalidGrid""#));
    }

    #[test]
    fn partial_config_takes_defaults() {
        let cfg =
            RunConfig::from_json(r#"{"function": {"family": "exp_power", "lambda": [0.25, 0], "d": 1}}"#).unwrap();
        assert_eq!(cfg.scales, ScaleGrid { j_min: 3, j_max: 14 });
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }
}
