use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain_grid::{Differentiation, FrameField};
use crate::error::Result;
use crate::pullback::{MapField, Pullback, Section, ISOMETRY_TOL};
use crate::scalar::{sup_abs, Scalar};

/// Random tangent quadruples drawn for the curvature pair-symmetry check.
pub const SYMMETRY_SAMPLES: usize = 1000;

/// Pointwise tolerance of discretized identities, before scaling by the
/// magnitude of the terms involved.
pub fn scheme_tolerance(scheme: Differentiation) -> f64 {
    match scheme {
        Differentiation::Spectral => 1e-8,
        Differentiation::CentralFD4 => 1e-5,
        Differentiation::CentralFD2 => 1e-3,
    }
}

fn roundoff<T: Scalar>(tol: f64) -> f64 {
    tol.max(T::epsilon().to_f64_lossy() * 64.0)
}

/// One named check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditCheck {
    pub name: String,
    pub max_residual: f64,
    pub nodes_failed: usize,
    pub tolerance: f64,
    pub pass: bool,
    /// `false` when the identity's hypotheses do not hold for this map; the
    /// residual is still reported but does not count against `pass`.
    pub applicable: bool,
}

impl AuditCheck {
    fn new(name: &str, residuals: &[f64], tolerance: f64, applicable: bool) -> Self {
        let max_residual = residuals.iter().fold(0.0_f64, |m, &r| if r.is_nan() { f64::NAN } else { m.max(r) });
        let nodes_failed = residuals.iter().filter(|&&r| !(r <= tolerance)).count();
        AuditCheck {
            name: name.to_string(),
            max_residual,
            nodes_failed: if applicable { nodes_failed } else { 0 },
            tolerance,
            pass: !applicable || (nodes_failed == 0 && max_residual <= tolerance),
            applicable,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn sup<T: Scalar>(v: &[T]) -> f64 {
    sup_abs(v).to_f64_lossy()
}

/// Pointwise identities along φ:
///
/// * `orthogonality`: Σ_j h(∇̄_{e_j}τ, dφe_j) + |τ|² = 0 (isometric maps only);
/// * `curvature_symmetry`: ⟨R(v₃,v₄)v₂,v₁⟩ = ⟨R(v₁,v₂)v₄,v₃⟩ on random quadruples;
/// * `bochner`: ⟨τ,Δ̄τ⟩ − ½Δ|τ|² − |∇̄τ|² = 0 with the positive scalar Δ;
/// * `curvature_sign`: c(Σ_i⟨Δ̄τ,dφe_i⟩² − |Δ̄τ|²|dφ|²) ≥ 0 (asserted for c ≤ 0);
/// * `kato_tau`, `kato_lap_tau`: |∇|α|| ≤ |∇̄α| where |α| > 1e-6·max(1, sup|α|).
pub fn pointwise_identity_audit<T: Scalar>(map: &MapField<T>, frame: &FrameField<T>, seed: u64) -> Result<AuditReport> {
    let pb = Pullback::new(map, frame)?;
    let ladder = pb.ladder();
    let space = map.space();
    let len = map.len();
    let tol = scheme_tolerance(map.grid().scheme());
    let c = space.curvature();
    let dphi = pb.differential();
    let tau = &ladder.tension;
    let tau_sq = tau.pointwise_norm_sq(map);
    let grad_sq = squared_sum(map, &ladder.grad_tension);
    let dphi_sq = pb.differential_norm_sq();
    let lap_sq = ladder.lap_tension.pointwise_norm_sq(map);
    let mut checks = Vec::new();

    // (a)
    let isometric = pb.isometry_deviation() <= T::of(ISOMETRY_TOL);
    let mut orth = vec![T::zero(); len];
    for (j, d) in dphi.iter().enumerate() {
        for (o, v) in orth.iter_mut().zip(ladder.grad_tension[j].pointwise_inner(map, d)) {
            *o += v;
        }
    }
    let orth_res: Vec<f64> = orth.iter().zip(&tau_sq).map(|(&o, &t)| (o + t).abs().to_f64_lossy()).collect();
    let orth_scale = 1.0 + sup(&tau_sq) + (sup(&grad_sq) * sup(&dphi_sq)).sqrt();
    checks.push(AuditCheck::new("orthogonality", &orth_res, tol * orth_scale, isometric));

    // (b)
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = map.ambient_dim();
    let mut sym_res = Vec::with_capacity(SYMMETRY_SAMPLES);
    let mut r = vec![T::zero(); n];
    for _ in 0..SYMMETRY_SAMPLES {
        let x = map.point(rng.gen_range(0..len));
        let v: Vec<Vec<T>> = (0..4)
            .map(|_| {
                let raw: Vec<T> = (0..n).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
                space.project_tangent(x, &raw).0
            })
            .collect();
        space.curvature_op_into(x, &v[2], &v[3], &v[1], &mut r);
        let lhs = space.inner(x, &r, &v[0]);
        space.curvature_op_into(x, &v[0], &v[1], &v[3], &mut r);
        let rhs = space.inner(x, &r, &v[2]);
        let size = v.iter().fold(T::one(), |p, w| p * (T::one() + space.norm(x, w)));
        sym_res.push(((lhs - rhs).abs() / (T::one() + c.abs() * size)).to_f64_lossy());
    }
    checks.push(AuditCheck::new("curvature_symmetry", &sym_res, roundoff::<T>(1e-12), true));

    // (c)
    let lap_scalar = frame.scalar_laplacian(&tau_sq);
    let tau_lap = tau.pointwise_inner(map, &ladder.lap_tension);
    let half = T::of(0.5);
    let boch_res: Vec<f64> = (0..len)
        .map(|i| (tau_lap[i] - half * lap_scalar[i] - grad_sq[i]).abs().to_f64_lossy())
        .collect();
    let boch_scale = 1.0 + (sup(&tau_sq) * sup(&lap_sq)).sqrt() + sup(&grad_sq);
    checks.push(AuditCheck::new("bochner", &boch_res, tol * boch_scale, true));

    // (d)
    let mut proj = vec![T::zero(); len];
    for d in dphi {
        for (p, v) in proj.iter_mut().zip(ladder.lap_tension.pointwise_inner(map, d)) {
            *p += v * v;
        }
    }
    let sign_res: Vec<f64> = (0..len)
        .map(|i| {
            let q = c * (proj[i] - lap_sq[i] * dphi_sq[i]);
            (-q).max(T::zero()).to_f64_lossy()
        })
        .collect();
    let sign_scale = 1.0 + sup(&lap_sq) * sup(&dphi_sq) * c.abs().to_f64_lossy();
    checks.push(AuditCheck::new("curvature_sign", &sign_res, roundoff::<T>(1e-10) * sign_scale, c <= T::zero()));

    // (e)
    for (name, alpha, grads) in [
        ("kato_tau", tau, &ladder.grad_tension),
        ("kato_lap_tau", &ladder.lap_tension, &ladder.grad_lap_tension),
    ] {
        let res = kato_residuals(map, frame, alpha, grads);
        let scale = 1.0 + sup(&squared_sum(map, grads)).sqrt();
        checks.push(AuditCheck::new(name, &res, tol * scale, true));
    }

    Ok(AuditReport { checks })
}

fn squared_sum<T: Scalar>(map: &MapField<T>, fields: &[Section<T>]) -> Vec<T> {
    let mut out = vec![T::zero(); map.len()];
    for f in fields {
        for (o, v) in out.iter_mut().zip(f.pointwise_norm_sq(map)) {
            *o += v;
        }
    }
    out
}

/// max(0, |∇|α|| − |∇̄α|) at eligible nodes, 0 elsewhere. ∇|α| is taken as
/// ∇|α|²/(2|α|) so the smooth |α|² is what gets differentiated.
fn kato_residuals<T: Scalar>(map: &MapField<T>, frame: &FrameField<T>, alpha: &Section<T>, grads: &[Section<T>]) -> Vec<f64> {
    let sq = alpha.pointwise_norm_sq(map);
    let sup_alpha = sup(&sq).sqrt();
    let threshold = 1e-6 * sup_alpha.max(1.0);
    let grad_sq = frame.scalar_gradient(&sq);
    let cov_sq = squared_sum(map, grads);
    (0..map.len())
        .map(|i| {
            let a = sq[i].sqrt();
            if a.to_f64_lossy() <= threshold {
                return 0.0;
            }
            let g2 = grad_sq.iter().fold(T::zero(), |s, g| s + g[i] * g[i]);
            let lhs = g2.sqrt() / (T::of(2.0) * a);
            (lhs - cov_sq[i].sqrt()).max(T::zero()).to_f64_lossy()
        })
        .collect()
}
