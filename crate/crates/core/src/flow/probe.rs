use serde::Serialize;

use super::FlowTrace;
use crate::domain_grid::FrameField;
use crate::energy::{energy_report_from, lp_integral};
use crate::error::Result;
use crate::pullback::{MapField, Pullback, Section};
use crate::scalar::Scalar;

/// sup|τ₃| at or below which a state counts as triharmonic.
pub const TRIHARMONIC_PROBE_TOL: f64 = 1e-6;

/// sup|τ| at or below which a triharmonic state counts as minimal.
pub const MINIMAL_TOL: f64 = 1e-4;

/// ∫|α|^q|∇̄α|² below which the variance of |α| is reported.
const LEMMA_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Minimal,
    NotMinimal,
    NotTriharmonic,
}

/// ∫|α|^q|∇̄α|² and, once it is below tolerance, how far |α| is from constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientNormDiagnostic {
    pub field: String,
    pub q: f64,
    pub weighted_gradient_integral: f64,
    pub sup_norm: f64,
    pub norm_variance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeVerdict {
    pub sup_tau3: f64,
    pub etilde4: f64,
    pub l4_tension: f64,
    pub sup_tau: f64,
    /// Node variance of |τ|².
    pub tau_sq_variance: f64,
    pub sup_grad_lap_tau: f64,
    pub sup_lap_tau: f64,
    /// std(|τ|)/mean(|τ|), 0 when τ vanishes.
    pub cmc_variation: f64,
    pub lemma: Vec<GradientNormDiagnostic>,
    /// Δ̄τ ≈ 0, reported for flat targets only.
    pub biharmonic: Option<bool>,
    pub verdict: Verdict,
    pub iterations: usize,
    pub caveats: Vec<String>,
}

fn mean_and_variance(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (mean, v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n)
}

fn lemma_entry<T: Scalar>(
    map: &MapField<T>,
    frame: &FrameField<T>,
    name: &str,
    alpha: &Section<T>,
    grads: &[Section<T>],
    q: f64,
) -> GradientNormDiagnostic {
    let sq = alpha.pointwise_norm_sq(map);
    let mut grad_sq = vec![T::zero(); map.len()];
    for g in grads {
        for (o, v) in grad_sq.iter_mut().zip(g.pointwise_norm_sq(map)) {
            *o += v;
        }
    }
    let density: Vec<T> = sq
        .iter()
        .zip(&grad_sq)
        .map(|(&a, &g)| a.powf(T::of(q / 2.0)) * g)
        .collect();
    let integral = frame.integrate(&density).to_f64_lossy();
    let norms: Vec<f64> = sq.iter().map(|s| s.sqrt().to_f64_lossy()).collect();
    GradientNormDiagnostic {
        field: name.to_string(),
        q,
        weighted_gradient_integral: integral,
        sup_norm: norms.iter().fold(0.0, |m: f64, &x| m.max(x)),
        norm_variance: (integral <= LEMMA_TOL).then(|| mean_and_variance(&norms).1),
    }
}

/// Hypothesis and conclusion measures of the vanishing theorems at a
/// terminal state. Nothing is enforced; the record is descriptive.
pub fn theorem_probe<T: Scalar>(map: &MapField<T>, frame: &FrameField<T>, trace: &FlowTrace) -> Result<ProbeVerdict> {
    let pb = Pullback::new(map, frame)?;
    let ladder = pb.ladder();
    let tri = pb.tritension_general_from(&ladder);
    let report = energy_report_from(&pb, &ladder, &tri, &[4.0])?;
    let tau_sq: Vec<f64> = ladder
        .tension
        .pointwise_norm_sq(map)
        .into_iter()
        .map(|v| v.to_f64_lossy())
        .collect();
    let tau_norm: Vec<f64> = tau_sq.iter().map(|v| v.sqrt()).collect();
    let (mean_tau, var_tau) = mean_and_variance(&tau_norm);
    let grad_lap_sq = {
        let mut out = vec![T::zero(); map.len()];
        for g in &ladder.grad_lap_tension {
            for (o, v) in out.iter_mut().zip(g.pointwise_norm_sq(map)) {
                *o += v;
            }
        }
        out
    };
    let sup_grad_lap_tau = grad_lap_sq.iter().fold(T::zero(), |m, &v| m.max(v)).sqrt().to_f64_lossy();
    let sup_lap_tau = ladder.lap_tension.sup_norm(map).to_f64_lossy();
    let sup_tau3 = report.sup_tau3.to_f64_lossy();
    let sup_tau = report.sup_tau.to_f64_lossy();
    let c = map.space().curvature();

    let lemma = vec![
        lemma_entry(map, frame, "tau", &ladder.tension, &ladder.grad_tension, 2.0),
        lemma_entry(map, frame, "lap_tau", &ladder.lap_tension, &ladder.grad_lap_tension, 2.0),
    ];
    let verdict = if !(sup_tau3 <= TRIHARMONIC_PROBE_TOL) {
        Verdict::NotTriharmonic
    } else if sup_tau <= MINIMAL_TOL {
        Verdict::Minimal
    } else {
        Verdict::NotMinimal
    };
    let mut caveats = vec![
        "compact periodic grid: completeness and finiteness hypotheses hold trivially and are not tested".to_string(),
    ];
    if c > T::zero() {
        caveats.push("positive curvature target: the vanishing theorem does not apply".to_string());
    }
    if report.lp(4.0).is_none() {
        caveats.push("L4 norm unavailable".to_string());
    }
    Ok(ProbeVerdict {
        sup_tau3,
        etilde4: report.extended_four_energy.to_f64_lossy(),
        l4_tension: lp_integral(&pb, &ladder.tension, T::of(4.0)).to_f64_lossy(),
        sup_tau,
        tau_sq_variance: mean_and_variance(&tau_sq).1,
        sup_grad_lap_tau,
        sup_lap_tau,
        cmc_variation: if mean_tau > 0.0 { var_tau.sqrt() / mean_tau } else { 0.0 },
        lemma,
        biharmonic: (c == T::zero()).then_some(sup_lap_tau <= TRIHARMONIC_PROBE_TOL),
        verdict,
        iterations: trace.last().map_or(0, |r| r.iter),
        caveats,
    })
}
