use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use polyflow_core::flow::{run_flow, theorem_probe, FlowConfig, FlowKind, FlowTrace, MetricPolicy, ProbeVerdict, Termination};
use polyflow_core::verify::{
    first_variation, pointwise_identity_audit, random_smooth_section, richardson, tension_variation_residual,
    AuditReport, FIRST_VARIATION_FLOOR, TENSION_VARIATION_FLOOR,
};
use polyflow_core::{
    builtin_map, energy_report, induced_metric, orthonormal_frame, DomainGrid, EnergyReport, FrameField64, GridSpec,
    MapField64, MetricField, Model, SpaceForm,
};
use serde::Serialize;
use thiserror::Error;

use crate::config::{Action, ExperimentConfig, GridConfig, MetricChoice};

/// Variation step and accepted relative error of the first-variation check.
const VARIATION_T: f64 = 1e-3;
const VARIATION_TOL: f64 = 1e-4;
const TENSION_VARIATION_TOL: f64 = 1e-3;
/// Slack on E₃ increases between accepted steps of a fixed-metric flow.
const MONOTONE_SLACK: f64 = 1e-12;

pub const TRACE_HEADER: [&str; 9] = ["iter", "E", "E2", "E3", "Etilde4", "L4_tension", "sup_tau", "sup_descent", "dt"];

#[derive(Debug, Error)]
pub enum RunError {
    /// The configuration describes no valid experiment.
    #[error("{0}")]
    Setup(polyflow_core::Error),
    #[error("{0}")]
    Compute(polyflow_core::Error),
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write trace: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    AuditFailure,
}

#[derive(Clone, Debug, Serialize)]
struct TargetSummary {
    model: Model,
    curvature: f64,
    dim: usize,
}

/// E₂ ≤ ½·vol^{1/2}·(∫|τ|⁴)^{1/2}.
#[derive(Clone, Debug, Serialize)]
struct HolderCheck {
    lhs: f64,
    rhs: f64,
    pass: bool,
}

#[derive(Clone, Debug, Serialize)]
struct VariationRow {
    check: String,
    finite_difference: Option<f64>,
    analytic: Option<f64>,
    residual: f64,
    richardson_ratio: f64,
    pass: bool,
}

#[derive(Clone, Debug, Serialize)]
struct FlowSummary {
    config: FlowConfig,
    termination: Termination,
    iterations: usize,
    worst_relative_increase: f64,
    /// Asserted only for fixed-metric triharmonic flows.
    monotone: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    example: String,
    action: Action,
    target: TargetSummary,
    grid: GridConfig,
    metric: MetricChoice,
    seed: u64,
    energies: EnergyReport<f64>,
    holder: HolderCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    audit: Option<AuditReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variation: Option<Vec<VariationRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flow: Option<FlowSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe: Option<ProbeVerdict>,
    pub status: Status,
    pub failures: Vec<String>,
}

pub struct Outputs {
    pub summary: PathBuf,
    pub trace: Option<PathBuf>,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn setup(cfg: &ExperimentConfig) -> Result<(MapField64, FrameField64), polyflow_core::Error> {
    let space = match cfg.target.model {
        Some(model) => SpaceForm::with_model(model, cfg.target.curvature, cfg.target.dim)?,
        None => SpaceForm::new(cfg.target.curvature, cfg.target.dim)?,
    };
    let grid = Arc::new(DomainGrid::new(GridSpec {
        sizes: cfg.grid.sizes.clone(),
        lengths: cfg.grid.lengths.clone(),
        differentiation: cfg.grid.differentiation,
    })?);
    let map = builtin_map(cfg.initial_map.name, &cfg.initial_map.params, &grid, &space)?;
    let metric = match cfg.metric {
        MetricChoice::Identity => MetricField::identity(&grid),
        MetricChoice::Induced => induced_metric(&map)?,
    };
    let frame = orthonormal_frame(&grid, &metric)?;
    energy_report(&map, &frame, &cfg.p_list)?;
    Ok((map, frame))
}

fn holder(report: &EnergyReport<f64>) -> HolderCheck {
    let l4 = report.lp(4.0).unwrap_or(f64::NAN);
    let rhs = 0.5 * report.volume.sqrt() * l4.sqrt();
    HolderCheck {
        lhs: report.bienergy,
        rhs,
        pass: report.bienergy <= rhs + 1e-12,
    }
}

fn variation_rows(map: &MapField64, frame: &FrameField64, seed: u64) -> polyflow_core::Result<Vec<VariationRow>> {
    let frame = frame.freeze();
    let mut rows = Vec::new();
    for k in 1..=3 {
        let v = random_smooth_section(map, seed.wrapping_add(k as u64), 3, 0.1);
        let fv = first_variation(map, &v, &frame, k, VARIATION_T)?;
        let rich = richardson(
            |t| Ok(first_variation(map, &v, &frame, k, t)?.residual),
            VARIATION_T,
            FIRST_VARIATION_FLOOR,
        )?;
        rows.push(VariationRow {
            check: format!("first_variation_k{k}"),
            finite_difference: Some(fv.finite_difference),
            analytic: Some(fv.analytic),
            residual: fv.residual,
            richardson_ratio: rich.ratio,
            pass: fv.residual <= VARIATION_TOL && rich.pass,
        });
    }
    let v = random_smooth_section(map, seed, 3, 0.1);
    let scale = v.sup_norm(map).max(1.0);
    let rich = richardson(
        |t| tension_variation_residual(map, &v, &frame, t),
        VARIATION_T,
        TENSION_VARIATION_FLOOR * scale,
    )?;
    rows.push(VariationRow {
        check: "tension_variation".into(),
        finite_difference: None,
        analytic: None,
        residual: rich.coarse,
        richardson_ratio: rich.ratio,
        pass: rich.coarse <= TENSION_VARIATION_TOL && rich.pass,
    });
    Ok(rows)
}

pub fn write_trace(path: &Path, trace: &FlowTrace) -> Result<(), RunError> {
    let file = File::create(path).map_err(|e| RunError::Io { path: path.to_path_buf(), source: e })?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        let mut row = vec![r.iter.to_string()];
        row.extend(
            [r.energy, r.bienergy, r.trienergy, r.etilde4, r.l4_tension, r.sup_tau, r.sup_descent, r.dt]
                .iter()
                .map(|v| format!("{v:.16e}")),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| RunError::Io { path: path.to_path_buf(), source: e })?;
    Ok(())
}

/// Runs `cfg.action`, writes the outputs and returns the summary.
pub fn run(cfg: &ExperimentConfig) -> Result<(Summary, Outputs), RunError> {
    let (map, frame) = setup(cfg).map_err(RunError::Setup)?;
    if let Some(dir) = cfg.output_prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Io { path: dir.to_path_buf(), source: e })?;
    }
    let space = *map.space();
    let mut failures = Vec::new();
    let mut audit = None;
    let mut variation = None;
    let mut flow = None;
    let mut probe = None;
    let mut trace_path = None;
    let mut final_state = (map.clone(), frame.clone());

    match cfg.action {
        Action::Energies => {}
        Action::Audit => {
            let report = pointwise_identity_audit(&map, &frame, cfg.seed).map_err(RunError::Compute)?;
            failures.extend(report.failures().map(|c| c.name.clone()));
            audit = Some(report);
        }
        Action::VariationCheck => {
            let rows = variation_rows(&map, &frame, cfg.seed).map_err(RunError::Compute)?;
            failures.extend(rows.iter().filter(|r| !r.pass).map(|r| r.check.clone()));
            variation = Some(rows);
        }
        Action::Flow => {
            let flow_cfg = cfg.flow.as_ref().expect("validated").resolve();
            let start = match flow_cfg.metric_policy {
                MetricPolicy::FixedPrescribed => frame.freeze(),
                MetricPolicy::ReInduceEachStep => frame.clone(),
            };
            let result = run_flow(&map, &start, &flow_cfg).map_err(RunError::Compute)?;
            let path = with_suffix(&cfg.output_prefix, "_trace.csv");
            write_trace(&path, &result.trace)?;
            trace_path = Some(path);
            let worst = result.trace.worst_increase(flow_cfg.kind);
            let monotone = (flow_cfg.kind == FlowKind::Triharmonic
                && flow_cfg.metric_policy == MetricPolicy::FixedPrescribed)
                .then_some(worst <= MONOTONE_SLACK);
            if monotone == Some(false) {
                failures.push("e3_monotonicity".into());
            }
            probe = Some(theorem_probe(&result.map, &result.frame, &result.trace).map_err(RunError::Compute)?);
            flow = Some(FlowSummary {
                config: flow_cfg,
                termination: result.termination,
                iterations: result.trace.last().map_or(0, |r| r.iter),
                worst_relative_increase: if result.trace.records.len() > 1 { worst } else { 0.0 },
                monotone,
            });
            final_state = (result.map, result.frame);
        }
    }

    let energies = energy_report(&final_state.0, &final_state.1, &cfg.p_list).map_err(RunError::Compute)?;
    let holder = holder(&energies);
    if !holder.pass {
        failures.push("holder".into());
    }
    let summary = Summary {
        example: cfg.initial_map.name.to_string(),
        action: cfg.action,
        target: TargetSummary {
            model: space.model(),
            curvature: space.curvature(),
            dim: space.dim(),
        },
        grid: cfg.grid.clone(),
        metric: cfg.metric,
        seed: cfg.seed,
        energies,
        holder,
        audit,
        variation,
        flow,
        probe,
        status: if failures.is_empty() { Status::Ok } else { Status::AuditFailure },
        failures,
    };
    let summary_path = with_suffix(&cfg.output_prefix, "_summary.json");
    let file = File::create(&summary_path).map_err(|e| RunError::Io { path: summary_path.clone(), source: e })?;
    serde_json::to_writer_pretty(BufWriter::new(file), &summary)
        .map_err(|e| RunError::Io { path: summary_path.clone(), source: e.into() })?;
    Ok((summary, Outputs { summary: summary_path, trace: trace_path }))
}
