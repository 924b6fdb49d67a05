//! Gradient flows of E, E₂ and E₃ with Armijo backtracking.
//!
//! The descent field of E_k is τ_k. Stepping along τ_k itself is stable only
//! for dt ~ h^{2k}, which for the sixth-order triharmonic operator means
//! millions of steps. By default the step direction is the Sobolev gradient
//! V = P((1 + |k|²)^{−k} τ_k): a smoothed field with the same stationary
//! points whose slope ∫⟨τ_k, V⟩ is still a descent rate, so the Armijo test
//! keeps every accepted step energy-decreasing.

mod probe;

use serde::{Deserialize, Serialize};

use crate::domain_grid::{induced_metric, orthonormal_frame, FrameField, MetricMode};
use crate::energy::{energy_report_from, k_energy};
use crate::error::{Error, Result};
use crate::pullback::{MapField, Pullback, Section};
use crate::scalar::Scalar;

pub use probe::{theorem_probe, GradientNormDiagnostic, ProbeVerdict, Verdict, MINIMAL_TOL, TRIHARMONIC_PROBE_TOL};

/// Smallest step before a flow gives up.
pub const MIN_DT: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowKind {
    Harmonic,
    Biharmonic,
    Triharmonic,
}

impl FlowKind {
    /// k of the energy E_k being decreased.
    pub fn order(self) -> usize {
        match self {
            FlowKind::Harmonic => 1,
            FlowKind::Biharmonic => 2,
            FlowKind::Triharmonic => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricPolicy {
    FixedPrescribed,
    ReInduceEachStep,
}

/// How the step direction is built from the descent field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Preconditioner {
    /// V = τ_k.
    Identity,
    /// V = P((1 + |k|²)^{−k} τ_k).
    #[default]
    Sobolev,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub kind: FlowKind,
    pub dt0: f64,
    pub max_iters: usize,
    /// Stop once sup|τ_k| ≤ grad_tol.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub shrink: f64,
    /// Factor applied to dt after an accepted step.
    #[serde(default = "default_growth")]
    pub growth: f64,
    pub metric_policy: MetricPolicy,
    #[serde(default)]
    pub preconditioner: Preconditioner,
}

fn default_growth() -> f64 {
    1.5
}

impl FlowConfig {
    /// Defaults for a kind: Sobolev directions, dt0 = 0.5, metric re-induced
    /// after every step.
    pub fn new(kind: FlowKind) -> Self {
        FlowConfig {
            kind,
            dt0: 0.5,
            max_iters: 100_000,
            grad_tol: 1e-8,
            armijo_c: 1e-4,
            shrink: 0.5,
            growth: default_growth(),
            metric_policy: MetricPolicy::ReInduceEachStep,
            preconditioner: Preconditioner::Sobolev,
        }
    }

    /// Plain τ_k directions with dt0 = 0.1·h^{2k} (0.1·h⁴ for the triharmonic
    /// flow), left to the line search to adapt.
    pub fn unpreconditioned(kind: FlowKind, spacing: f64) -> Self {
        let power = match kind {
            FlowKind::Triharmonic => 4,
            k => 2 * k.order() as i32,
        };
        FlowConfig {
            dt0: 0.1 * spacing.powi(power),
            growth: 1.1,
            preconditioner: Preconditioner::Identity,
            ..FlowConfig::new(kind)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("dt0", self.dt0)?;
        positive("grad_tol", self.grad_tol)?;
        for (name, v) in [("armijo_c", self.armijo_c), ("shrink", self.shrink)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.growth >= 1.0 && self.growth.is_finite()) {
            return Err(Error::InvalidArgument(format!("growth must be ≥ 1, got {}", self.growth)));
        }
        Ok(())
    }
}

/// One row of the trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowRecord {
    pub iter: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "E2")]
    pub bienergy: f64,
    #[serde(rename = "E3")]
    pub trienergy: f64,
    #[serde(rename = "Etilde4")]
    pub etilde4: f64,
    #[serde(rename = "L4_tension")]
    pub l4_tension: f64,
    pub sup_tau: f64,
    /// sup|τ_k| at this iterate.
    pub sup_descent: f64,
    /// Step that produced this iterate (0 for the initial state).
    pub dt: f64,
}

/// Row 0 is the initial map; row j the iterate after the j-th accepted step.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
}

impl FlowTrace {
    pub fn last(&self) -> Option<&FlowRecord> {
        self.records.last()
    }

    /// Largest increase of the k-th energy between consecutive rows,
    /// relative to the earlier value.
    pub fn worst_increase(&self, kind: FlowKind) -> f64 {
        let pick = |r: &FlowRecord| match kind {
            FlowKind::Harmonic => r.energy,
            FlowKind::Biharmonic => r.bienergy,
            FlowKind::Triharmonic => r.trienergy,
        };
        self.records
            .windows(2)
            .map(|w| (pick(&w[1]) - pick(&w[0])) / pick(&w[0]).abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// The line search shrank dt below [`MIN_DT`].
    Stalled { dt: f64 },
    /// A re-induced metric degenerated; the run stops at the last regular iterate.
    Degenerate { node: usize },
}

#[derive(Clone, Debug)]
pub struct FlowRun<T: Scalar> {
    pub map: MapField<T>,
    pub frame: FrameField<T>,
    pub trace: FlowTrace,
    pub termination: Termination,
}

/// τ, τ₂ or τ₃ for the flow kind.
pub fn descent_field<T: Scalar>(map: &MapField<T>, frame: &FrameField<T>, kind: FlowKind) -> Result<Section<T>> {
    let pb = Pullback::new(map, frame)?;
    Ok(match kind {
        FlowKind::Harmonic => pb.tension(),
        FlowKind::Biharmonic => pb.bitension(),
        FlowKind::Triharmonic => pb.tritension_general(),
    })
}

struct State<T: Scalar> {
    energy: T,
    descent: Section<T>,
    sup_descent: T,
}

fn evaluate<T: Scalar>(map: &MapField<T>, frame: &FrameField<T>, kind: FlowKind, iter: usize, dt: f64) -> Result<(State<T>, FlowRecord)> {
    let pb = Pullback::new(map, frame)?;
    let ladder = pb.ladder();
    let tri = pb.tritension_general_from(&ladder);
    let report = energy_report_from(&pb, &ladder, &tri, &[4.0])?;
    let descent = match kind {
        FlowKind::Harmonic => ladder.tension.clone(),
        FlowKind::Biharmonic => pb.jacobi(&ladder.tension),
        FlowKind::Triharmonic => tri,
    };
    let energy = match kind {
        FlowKind::Harmonic => report.energy,
        FlowKind::Biharmonic => report.bienergy,
        FlowKind::Triharmonic => report.trienergy,
    };
    let sup_descent = descent.sup_norm(map);
    let record = FlowRecord {
        iter,
        energy: report.energy.to_f64_lossy(),
        bienergy: report.bienergy.to_f64_lossy(),
        trienergy: report.trienergy.to_f64_lossy(),
        etilde4: report.extended_four_energy.to_f64_lossy(),
        l4_tension: report.lp(4.0).map_or(f64::NAN, |v| v.to_f64_lossy()),
        sup_tau: report.sup_tau.to_f64_lossy(),
        sup_descent: sup_descent.to_f64_lossy(),
        dt,
    };
    Ok((State { energy, descent, sup_descent }, record))
}

/// Step direction and its slope ∫⟨τ_k, V⟩ > 0.
fn direction<T: Scalar>(map: &MapField<T>, frame: &FrameField<T>, descent: &Section<T>, cfg: &FlowConfig) -> (Section<T>, T) {
    let plain_slope = || frame.integrate(&descent.pointwise_norm_sq(map));
    if cfg.preconditioner == Preconditioner::Identity {
        return (descent.clone(), plain_slope());
    }
    let smoothed = map
        .grid()
        .sobolev_smooth(descent.values(), descent.dim(), cfg.kind.order() as i32);
    let v = Section::tangent(map, smoothed).expect("same shape as the descent field");
    let slope = frame.integrate(&descent.pointwise_inner(map, &v));
    if slope > T::zero() {
        (v, slope)
    } else {
        (descent.clone(), plain_slope())
    }
}

/// Outcome of one trial step.
#[derive(Clone, Debug)]
pub struct StepOutcome<T: Scalar> {
    pub map: MapField<T>,
    pub accepted: bool,
    pub dt_next: f64,
}

fn try_step<T: Scalar>(
    map: &MapField<T>,
    frame: &FrameField<T>,
    cfg: &FlowConfig,
    state: &State<T>,
    dt: f64,
) -> Result<StepOutcome<T>> {
    if state.sup_descent == T::zero() {
        return Ok(StepOutcome { map: map.clone(), accepted: true, dt_next: dt });
    }
    let (v, slope) = direction(map, frame, &state.descent, cfg);
    let candidate = map.exp_along(&v, T::of(dt));
    let e_new = k_energy(&Pullback::new(&candidate, frame)?, cfg.kind.order())?;
    let bound = state.energy - T::of(cfg.armijo_c * dt) * slope;
    if e_new.is_finite() && e_new <= bound {
        Ok(StepOutcome { map: candidate, accepted: true, dt_next: dt * cfg.growth })
    } else {
        let dt_next = dt * cfg.shrink;
        if dt_next < MIN_DT {
            return Err(Error::StepUnderflow { dt: dt_next });
        }
        Ok(StepOutcome { map: map.clone(), accepted: false, dt_next })
    }
}

/// A single Armijo trial: φ' = exp_φ(dt·V), accepted iff
/// E_k(φ') ≤ E_k(φ) − armijo_c·dt·∫⟨τ_k, V⟩. A rejected trial returns φ and
/// a shrunk dt. The frame is not rebuilt here.
pub fn flow_step<T: Scalar>(map: &MapField<T>, frame: &FrameField<T>, cfg: &FlowConfig, dt: f64) -> Result<StepOutcome<T>> {
    cfg.validate()?;
    let (state, _) = evaluate(map, frame, cfg.kind, 0, 0.0)?;
    try_step(map, frame, cfg, &state, dt)
}

fn rebuild_frame<T: Scalar>(map: &MapField<T>, frame: &FrameField<T>, policy: MetricPolicy) -> Result<FrameField<T>> {
    match policy {
        MetricPolicy::FixedPrescribed => Ok(frame.clone()),
        MetricPolicy::ReInduceEachStep => orthonormal_frame(map.grid(), &induced_metric(map)?),
    }
}

/// Iterates Armijo steps until sup|τ_k| ≤ grad_tol, `max_iters` accepted
/// steps, or a stalled line search. Only accepted steps count as
/// iterations; every one of them adds a trace row.
pub fn run_flow<T: Scalar>(map0: &MapField<T>, frame0: &FrameField<T>, cfg: &FlowConfig) -> Result<FlowRun<T>> {
    cfg.validate()?;
    if cfg.metric_policy == MetricPolicy::FixedPrescribed && frame0.mode() == MetricMode::Induced {
        return Err(Error::MetricMode("FixedPrescribed flow given an induced metric; freeze it first".into()));
    }
    let mut map = map0.clone();
    let mut frame = rebuild_frame(&map, frame0, cfg.metric_policy)?;
    let (mut state, record) = evaluate(&map, &frame, cfg.kind, 0, 0.0)?;
    let mut trace = FlowTrace { records: vec![record] };
    let tol = T::of(cfg.grad_tol);
    let mut dt = cfg.dt0;
    let mut termination = Termination::MaxIterations;
    for iter in 1..=cfg.max_iters {
        if state.sup_descent <= tol {
            termination = Termination::Converged;
            break;
        }
        let outcome = loop {
            match try_step(&map, &frame, cfg, &state, dt) {
                Ok(o) if o.accepted => break Some(o),
                Ok(o) => dt = o.dt_next,
                Err(Error::StepUnderflow { dt: small }) => {
                    termination = Termination::Stalled { dt: small };
                    break None;
                }
                Err(e) => return Err(e),
            }
        };
        let Some(outcome) = outcome else { break };
        match rebuild_frame(&outcome.map, &frame, cfg.metric_policy) {
            Ok(f) => frame = f,
            Err(Error::DegenerateImmersion { node, .. }) => {
                termination = Termination::Degenerate { node };
                break;
            }
            Err(e) => return Err(e),
        }
        map = outcome.map;
        let (next, record) = evaluate(&map, &frame, cfg.kind, iter, dt)?;
        state = next;
        trace.records.push(record);
        dt = outcome.dt_next;
    }
    if termination == Termination::MaxIterations && state.sup_descent <= tol {
        termination = Termination::Converged;
    }
    Ok(FlowRun { map, frame, trace, termination })
}
