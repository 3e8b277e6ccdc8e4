//! Experiment orchestration: convergence studies, the d=3 comparison table,
//! the alpha study, CSV/plot emission and run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backward::{solve, BackwardError, SchemeParams, SolveResult};
use crate::driver::TruncationPolicy;
use crate::fit;
use crate::models::{self, BuiltinModel, Problem};
use crate::oracle::{self, OracleError, ReferenceSpec};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Model(#[from] models::ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Solve(#[from] BackwardError),
    #[error("model {0} has no closed-form reference; convergence studies need one")]
    NoReference(String),
    #[error("every row diverged; the convergence rate is undefined")]
    AllRowsDiverged,
    #[error("n list must be non-empty and strictly increasing")]
    BadNList,
    #[error("rows must be non-empty")]
    NoRows,
    #[error("fixed truncation mode needs fixed_n_level and fixed_r_level")]
    MissingFixedLevels,
    #[error("csv parse: {0}")]
    CsvParse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A study row reported as diverged when y0 is non-finite or its magnitude
/// passes this bound.
pub const DIVERGENCE_ABS: f64 = 1e3;

/// One (n, mode) outcome of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub h: f64,
    pub alpha: f64,
    pub truncation: String,
    pub y0_scheme: f64,
    pub y0_reference: f64,
    /// NaN when diverged (the CSV leaves the column empty).
    pub abs_error: f64,
    pub rel_error: f64,
    pub runtime_ms: u64,
    pub diverged: bool,
}

/// Study configuration; every field mirrors a CLI flag and the JSON config
/// file carries the same names.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub model: String,
    pub n_list: Vec<usize>,
    pub alpha: f64,
    pub alpha_list: Option<Vec<f64>>,
    /// Total quantizer node target M (per-dimension count is M^(1/d)).
    pub points: Option<usize>,
    pub delta: Option<f64>,
    pub kappa: Option<i64>,
    /// Truncation modes, one series per mode: "adaptive", "fixed", "none".
    pub modes: Vec<String>,
    pub fixed_n_level: Option<f64>,
    pub fixed_r_level: Option<f64>,
    pub workers: usize,
    pub seed: Option<u64>,
    /// Record wall-clock runtimes in rows. Off makes re-runs byte-identical.
    pub timing: bool,
    pub reference_nodes: Option<usize>,
    pub out_csv: Option<PathBuf>,
    pub out_plot: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            model: "d2_fig1".into(),
            n_list: vec![5, 10, 20, 40],
            alpha: 0.25,
            alpha_list: None,
            points: None,
            delta: None,
            kappa: None,
            modes: vec!["adaptive".into()],
            fixed_n_level: None,
            fixed_r_level: None,
            workers: 0,
            seed: None,
            timing: true,
            reference_nodes: None,
            out_csv: None,
            out_plot: None,
        }
    }
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| HarnessError::CsvParse(e.to_string()))
    }

    fn policy(&self, alpha: f64, mode: &str) -> Result<TruncationPolicy, HarnessError> {
        match mode {
            "adaptive" => Ok(TruncationPolicy::Adaptive { alpha }),
            "none" => Ok(TruncationPolicy::None),
            "fixed" => match (self.fixed_n_level, self.fixed_r_level) {
                (Some(n_level), Some(r_level)) => {
                    Ok(TruncationPolicy::Fixed { n_level, r_level })
                }
                _ => Err(HarnessError::MissingFixedLevels),
            },
            other => Err(HarnessError::CsvParse(format!(
                "unknown truncation mode {other:?}"
            ))),
        }
    }

    fn scheme_params(
        &self,
        problem_model: BuiltinModel,
        n: usize,
        alpha: f64,
        mode: &str,
    ) -> Result<SchemeParams, HarnessError> {
        let defaults = models::default_lattice(problem_model);
        let mut params = SchemeParams::new(
            n,
            self.points.unwrap_or(defaults.points),
            self.delta.unwrap_or(defaults.delta),
            self.kappa.unwrap_or(defaults.kappa),
            self.policy(alpha, mode)?,
        );
        params.workers = self.workers;
        Ok(params)
    }
}

/// Reference value for a problem at the configured node count.
pub fn reference_value(problem: &Problem, nodes: Option<usize>) -> Result<f64, HarnessError> {
    let spec = problem
        .reference
        .as_ref()
        .ok_or_else(|| HarnessError::NoReference("custom".into()))?;
    let spec = ReferenceSpec {
        nodes_per_dim: nodes.unwrap_or(spec.nodes_per_dim),
        ..spec.clone()
    };
    Ok(oracle::cole_hopf_y0(&spec)?)
}

fn make_row(
    n: usize,
    h: f64,
    alpha: f64,
    mode: &str,
    result: &SolveResult,
    y0_reference: f64,
    timing: bool,
) -> StudyRow {
    let y0 = result.y0;
    let diverged = !y0.is_finite() || y0.abs() > DIVERGENCE_ABS;
    let (abs_error, rel_error) = if diverged {
        (f64::NAN, f64::NAN)
    } else {
        let abs = (y0 - y0_reference).abs();
        (abs, abs / y0_reference.abs())
    };
    StudyRow {
        n,
        h,
        alpha,
        truncation: mode.to_string(),
        y0_scheme: y0,
        y0_reference,
        abs_error,
        rel_error,
        runtime_ms: if timing { result.runtime_ms } else { 0 },
        diverged,
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub rows: Vec<StudyRow>,
    /// Fitted log-log slope of |error| against n per mode; None when the
    /// mode had no usable (non-diverged) rows.
    pub rates: Vec<(String, Option<f64>)>,
    /// All errors at machine level; the rate fit is skipped.
    pub exact: bool,
}

/// Errors vs the closed-form reference across `n_list`, one series per
/// truncation mode, with the fitted convergence rate.
pub fn run_convergence(config: &StudyConfig) -> Result<ConvergenceStudy, HarnessError> {
    let model: BuiltinModel = config
        .model
        .parse()
        .map_err(HarnessError::Model)?;
    let problem = models::builtin(model);
    run_convergence_for(&problem, model, config)
}

pub fn run_convergence_for(
    problem: &Problem,
    model: BuiltinModel,
    config: &StudyConfig,
) -> Result<ConvergenceStudy, HarnessError> {
    if config.n_list.is_empty() || !config.n_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(HarnessError::BadNList);
    }
    let y0_ref = reference_value(problem, config.reference_nodes)?;
    let mut rows = Vec::new();
    for mode in &config.modes {
        for &n in &config.n_list {
            let params = config.scheme_params(model, n, config.alpha, mode)?;
            let result = solve(problem, &params)?;
            rows.push(make_row(
                n,
                problem.horizon / n as f64,
                config.alpha,
                mode,
                &result,
                y0_ref,
                config.timing,
            ));
        }
    }
    finish_convergence(rows, config)
}

fn finish_convergence(
    rows: Vec<StudyRow>,
    config: &StudyConfig,
) -> Result<ConvergenceStudy, HarnessError> {
    if rows.iter().all(|r| r.diverged) {
        return Err(HarnessError::AllRowsDiverged);
    }
    let exact = rows
        .iter()
        .filter(|r| !r.diverged)
        .all(|r| r.abs_error <= 1e-12);
    let mut rates = Vec::new();
    for mode in &config.modes {
        let (ns, errs): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| &r.truncation == mode && !r.diverged && r.abs_error > 1e-12)
            .map(|r| (r.n as f64, r.abs_error))
            .unzip();
        let rate = if exact {
            None
        } else {
            fit::loglog_slope(&ns, &errs).map(|s| -s)
        };
        rates.push((mode.clone(), rate));
    }
    write_outputs(&rows, config)?;
    Ok(ConvergenceStudy { rows, rates, exact })
}

fn write_outputs(rows: &[StudyRow], config: &StudyConfig) -> Result<(), HarnessError> {
    if let Some(path) = &config.out_csv {
        emit_csv(rows, path)?;
    }
    if let Some(path) = &config.out_plot {
        let sup = config
            .model
            .parse::<BuiltinModel>()
            .map(|m| models::builtin(m).terminal.sup_norm)
            .unwrap_or(1.0);
        emit_plot(rows, path, 10.0 * sup)?;
    }
    Ok(())
}

/// One model's entries in the d=3 comparison table.
#[derive(Debug, Clone)]
pub struct Table1Row {
    pub model: String,
    pub reference: f64,
    pub adaptive: StudyRow,
    pub untruncated: StudyRow,
}

/// The four-model comparison at n = 12, alpha = 1/4: adaptive truncation
/// against the raw scheme, with reference values and relative errors.
pub fn run_table1(config: &StudyConfig) -> Result<Vec<Table1Row>, HarnessError> {
    let n = *config.n_list.first().unwrap_or(&12);
    let mut out = Vec::new();
    for model in BuiltinModel::TABLE1 {
        let problem = models::builtin(model);
        let y0_ref = reference_value(&problem, config.reference_nodes)?;
        let h = problem.horizon / n as f64;
        let adaptive_params = config.scheme_params(model, n, config.alpha, "adaptive")?;
        let adaptive = solve(&problem, &adaptive_params)?;
        let none_params = config.scheme_params(model, n, config.alpha, "none")?;
        let untruncated = solve(&problem, &none_params)?;
        out.push(Table1Row {
            model: model.name().to_string(),
            reference: y0_ref,
            adaptive: make_row(n, h, config.alpha, "adaptive", &adaptive, y0_ref, config.timing),
            untruncated: make_row(n, h, config.alpha, "none", &untruncated, y0_ref, config.timing),
        });
    }
    if let Some(path) = &config.out_csv {
        let rows: Vec<StudyRow> = out
            .iter()
            .flat_map(|r| [r.adaptive.clone(), r.untruncated.clone()])
            .collect();
        emit_csv(&rows, path)?;
    }
    Ok(out)
}

/// Per-alpha convergence profiles on the d=1 model.
pub fn run_alpha_study(config: &StudyConfig) -> Result<Vec<StudyRow>, HarnessError> {
    let model: BuiltinModel = config.model.parse().map_err(HarnessError::Model)?;
    let problem = models::builtin(model);
    let alphas = config
        .alpha_list
        .clone()
        .unwrap_or_else(|| vec![0.0, 0.125, 0.25, 0.375, 0.625]);
    if config.n_list.is_empty() || !config.n_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(HarnessError::BadNList);
    }
    let y0_ref = reference_value(&problem, config.reference_nodes)?;
    let mut rows = Vec::new();
    for &alpha in &alphas {
        for &n in &config.n_list {
            let params = config.scheme_params(model, n, alpha, "adaptive")?;
            let result = solve(&problem, &params)?;
            rows.push(make_row(
                n,
                problem.horizon / n as f64,
                alpha,
                "adaptive",
                &result,
                y0_ref,
                config.timing,
            ));
        }
    }
    if let Some(path) = &config.out_csv {
        emit_csv(&rows, path)?;
    }
    if let Some(path) = &config.out_plot {
        emit_plot(&rows, path, 10.0 * problem.terminal.sup_norm)?;
    }
    Ok(rows)
}

pub const CSV_HEADER: &str =
    "n,h,alpha,truncation,y0_scheme,y0_reference,abs_error,rel_error,runtime_ms,diverged";

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes rows with the fixed header; floats carry 17 significant digits so
/// parsing them back is lossless. Diverged rows leave the error columns
/// empty and set the flag column to 1.
pub fn emit_csv(rows: &[StudyRow], path: &Path) -> Result<(), HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::NoRows);
    }
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let (abs_e, rel_e) = if r.diverged {
            (String::new(), String::new())
        } else {
            (fmt17(r.abs_error), fmt17(r.rel_error))
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            fmt17(r.h),
            fmt17(r.alpha),
            r.truncation,
            fmt17(r.y0_scheme),
            fmt17(r.y0_reference),
            abs_e,
            rel_e,
            r.runtime_ms,
            if r.diverged { 1 } else { 0 },
        )
        .unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parses a file produced by `emit_csv` back into rows.
pub fn parse_csv(path: &Path) -> Result<Vec<StudyRow>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::CsvParse("empty file".into()))?;
    if header != CSV_HEADER {
        return Err(HarnessError::CsvParse(format!("bad header {header:?}")));
    }
    let parse_f = |tok: &str, what: &str| -> Result<f64, HarnessError> {
        if tok.is_empty() {
            return Ok(f64::NAN);
        }
        tok.parse()
            .map_err(|_| HarnessError::CsvParse(format!("bad {what}: {tok:?}")))
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(HarnessError::CsvParse(format!(
                "row {}: expected 10 fields, found {}",
                i + 1,
                f.len()
            )));
        }
        rows.push(StudyRow {
            n: f[0]
                .parse()
                .map_err(|_| HarnessError::CsvParse(format!("bad n: {:?}", f[0])))?,
            h: parse_f(f[1], "h")?,
            alpha: parse_f(f[2], "alpha")?,
            truncation: f[3].to_string(),
            y0_scheme: parse_f(f[4], "y0_scheme")?,
            y0_reference: parse_f(f[5], "y0_reference")?,
            abs_error: parse_f(f[6], "abs_error")?,
            rel_error: parse_f(f[7], "rel_error")?,
            runtime_ms: f[8]
                .parse()
                .map_err(|_| HarnessError::CsvParse(format!("bad runtime: {:?}", f[8])))?,
            diverged: f[9] == "1",
        });
    }
    Ok(rows)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Standalone SVG: log-log |error| against n, one polyline per series
/// (series = mode, or mode at an alpha when several alphas appear). Errors
/// above `cap` plot at the cap; the CSV keeps the raw values.
pub fn emit_plot(rows: &[StudyRow], path: &Path, cap: f64) -> Result<(), HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::NoRows);
    }
    let multi_alpha = {
        let mut alphas: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
        alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        alphas.dedup();
        alphas.len() > 1
    };
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in rows {
        let label = if multi_alpha {
            format!("{} alpha={}", r.truncation, r.alpha)
        } else {
            r.truncation.clone()
        };
        let err = if r.diverged || !r.abs_error.is_finite() {
            cap
        } else {
            r.abs_error.min(cap).max(1e-16)
        };
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, pts)) => pts.push((r.n as f64, err)),
            None => series.push((label, vec![(r.n as f64, err)])),
        }
    }
    let (w, h) = (640.0, 420.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 20.0, 50.0);
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).log10()).collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.1.log10()))
        .collect();
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = bounds(&ys);
    let sx = |v: f64| ml + (v - x_lo) / (x_hi - x_lo).max(1e-12) * (w - ml - mr);
    let sy = |v: f64| h - mb - (v - y_lo) / (y_hi - y_lo).max(1e-12) * (h - mb - mt);
    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    )
    .unwrap();
    writeln!(svg, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>").unwrap();
    writeln!(
        svg,
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        w - ml - mr,
        h - mt - mb
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">n (log scale)</text>",
        (ml + w - mr) / 2.0,
        h - 12.0
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"14\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">|error| (log scale)</text>",
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    )
    .unwrap();
    for (si, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|(n, e)| format!("{:.2},{:.2}", sx(n.log10()), sy(e.log10())))
            .collect();
        writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            coords.join(" ")
        )
        .unwrap();
        let ly = mt + 16.0 + 16.0 * si as f64;
        writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            w - mr - 150.0,
            w - mr - 130.0
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\">{label}</text>",
            w - mr - 125.0,
            ly + 4.0
        )
        .unwrap();
    }
    writeln!(svg, "</svg>").unwrap();
    std::fs::write(path, svg)?;
    Ok(())
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn sample_rows() -> Vec<StudyRow> {
        vec![
            StudyRow {
                n: 5,
                h: 0.2,
                alpha: 0.25,
                truncation: "adaptive".into(),
                y0_scheme: 3.1,
                y0_reference: 3.3,
                abs_error: 0.2,
                rel_error: 0.2 / 3.3,
                runtime_ms: 12,
                diverged: false,
            },
            StudyRow {
                n: 10,
                h: 0.1,
                alpha: 0.25,
                truncation: "none".into(),
                y0_scheme: f64::NAN,
                y0_reference: 3.3,
                abs_error: f64::NAN,
                rel_error: f64::NAN,
                runtime_ms: 15,
                diverged: true,
            },
        ]
    }

    fn rows_equal(a: &StudyRow, b: &StudyRow) -> bool {
        a.n == b.n
            && a.h.to_bits() == b.h.to_bits()
            && a.alpha.to_bits() == b.alpha.to_bits()
            && a.truncation == b.truncation
            && (a.y0_scheme.to_bits() == b.y0_scheme.to_bits()
                || (a.y0_scheme.is_nan() && b.y0_scheme.is_nan()))
            && a.y0_reference.to_bits() == b.y0_reference.to_bits()
            && (a.abs_error.to_bits() == b.abs_error.to_bits()
                || (a.abs_error.is_nan() && b.abs_error.is_nan()))
            && a.runtime_ms == b.runtime_ms
            && a.diverged == b.diverged
    }

    #[test]
    fn csv_roundtrip_including_diverged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = sample_rows();
        emit_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[2].ends_with(",,,15,1"), "{}", lines[2]);
        let parsed = parse_csv(&path).unwrap();
        assert_eq!(parsed.len(), rows.len());
        for (a, b) in rows.iter().zip(&parsed) {
            assert!(rows_equal(a, b), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn emit_rejects_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            emit_csv(&[], &dir.path().join("x.csv")),
            Err(HarnessError::NoRows)
        ));
    }

    #[test]
    fn plot_has_one_polyline_per_series_with_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.svg");
        let mut rows = sample_rows();
        rows.push(StudyRow {
            n: 20,
            h: 0.05,
            alpha: 0.25,
            truncation: "adaptive".into(),
            y0_scheme: 3.2,
            y0_reference: 3.3,
            abs_error: 0.1,
            rel_error: 0.1 / 3.3,
            runtime_ms: 30,
            diverged: false,
        });
        emit_plot(&rows, &path, 60.0).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">adaptive</text>"));
        assert!(svg.contains(">none</text>"));
    }

    #[test]
    fn constant_terminal_study_is_exact() {
        let p = models::builtin(BuiltinModel::D1Alpha);
        let (problem, _) = models::custom(models::CustomProblemSpec {
            dim: 1,
            coeffs: p.coeffs.clone(),
            driver: p.driver.clone(),
            g: Arc::new(|_| 1.5),
            g_sup_norm: Some(1.5),
            g_lipschitz: Some(0.0),
            horizon: 1.0,
            x0: vec![1.0],
        })
        .unwrap();
        let mut problem = problem;
        problem.reference = Some(ReferenceSpec {
            a: 5.0,
            nu: 0.4,
            x0: vec![1.0],
            g: problem.terminal.g.clone(),
            horizon: 1.0,
            nodes_per_dim: 32,
        });
        let config = StudyConfig {
            model: "d1_alpha".into(),
            n_list: vec![2, 4],
            points: Some(8),
            delta: Some(0.05),
            kappa: Some(80),
            timing: false,
            ..Default::default()
        };
        let study = run_convergence_for(&problem, BuiltinModel::D1Alpha, &config).unwrap();
        assert!(study.exact);
        assert!(study.rates[0].1.is_none());
        assert!(study.rows.iter().all(|r| r.abs_error <= 1e-12));
    }

    #[test]
    fn config_json_roundtrip_with_defaults() {
        let cfg: StudyConfig =
            serde_json::from_str(r#"{"model":"model_I","n_list":[3,6],"timing":false}"#).unwrap();
        assert_eq!(cfg.model, "model_I");
        assert_eq!(cfg.n_list, vec![3, 6]);
        assert_eq!(cfg.alpha, 0.25);
        assert!(!cfg.timing);
        assert_eq!(cfg.modes, vec!["adaptive".to_string()]);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: StudyConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.model, cfg.model);
    }

    #[test]
    fn bad_n_list_rejected() {
        let config = StudyConfig {
            model: "d1_alpha".into(),
            n_list: vec![10, 10],
            ..Default::default()
        };
        assert!(matches!(
            run_convergence(&config),
            Err(HarnessError::BadNList)
        ));
    }
}
