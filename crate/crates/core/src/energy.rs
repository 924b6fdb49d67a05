//! The k-energy ladder E, E₂, E₃, Ẽ₄ and the norms the vanishing theorems
//! take as hypotheses.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::domain_grid::FrameField;
use crate::error::{Error, Result};
use crate::pullback::{MapField, Pullback, Section, TensionLadder};
use crate::scalar::Scalar;

/// Energies and norms of one map. Keys of the Lᵖ maps are the exponents as
/// written by `{}` formatting (e.g. `"4"`, `"2.5"`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport<T: Scalar> {
    #[serde(rename = "E")]
    pub energy: T,
    #[serde(rename = "E2")]
    pub bienergy: T,
    #[serde(rename = "E3")]
    pub trienergy: T,
    /// ½∫|Δ̄τ|², a lower bound of E₄.
    #[serde(rename = "Etilde4")]
    pub extended_four_energy: T,
    /// ∫|τ|ᵖ for each requested p.
    #[serde(rename = "Lp_tension")]
    pub lp_tension: BTreeMap<String, T>,
    /// ∫|Δ̄τ|ᵖ for each requested p.
    #[serde(rename = "Lp_lap_tension")]
    pub lp_lap_tension: BTreeMap<String, T>,
    pub sup_tau: T,
    pub sup_tau3: T,
    /// sup|τ|/m; |H| for isometric immersions.
    pub mean_curvature_sup: T,
    pub volume: T,
}

impl<T: Scalar> EnergyReport<T> {
    pub fn lp(&self, p: f64) -> Option<T> {
        self.lp_tension.get(&p_key(p)).copied()
    }
}

pub(crate) fn p_key(p: f64) -> String {
    format!("{p}")
}

fn half<T: Scalar>() -> T {
    T::of(0.5)
}

/// ½∫Σ_i |V_i|² for a family of sections.
pub(crate) fn half_square_integral<T: Scalar>(pb: &Pullback<'_, T>, fields: &[Section<T>]) -> T {
    let map = pb.map();
    let mut density = vec![T::zero(); map.len()];
    for f in fields {
        for (d, v) in density.iter_mut().zip(f.pointwise_norm_sq(map)) {
            *d += v;
        }
    }
    half::<T>() * pb.frame().integrate(&density)
}

/// ∫|V|ᵖ.
pub fn lp_integral<T: Scalar>(pb: &Pullback<'_, T>, v: &Section<T>, p: T) -> T {
    let density: Vec<T> = v
        .pointwise_norm_sq(pb.map())
        .into_iter()
        .map(|s| s.powf(p * half::<T>()))
        .collect();
    pb.frame().integrate(&density)
}

/// E = ½∫|dφ|².
pub fn energy<T: Scalar>(pb: &Pullback<'_, T>) -> T {
    half_square_integral(pb, pb.differential())
}

/// E₁ = E, E₂ = ½∫|τ|², E₃ = ½∫|∇̄τ|².
pub fn k_energy<T: Scalar>(pb: &Pullback<'_, T>, k: usize) -> Result<T> {
    match k {
        1 => Ok(energy(pb)),
        2 => Ok(half_square_integral(pb, &[pb.tension()])),
        3 => Ok(half_square_integral(pb, &pb.nabla_bar_all(&pb.tension()))),
        _ => Err(Error::InvalidArgument(format!("k-energy defined for k ∈ {{1,2,3}}, got {k}"))),
    }
}

/// Builds the report from a ladder that has already been computed.
pub fn energy_report_from<T: Scalar>(
    pb: &Pullback<'_, T>,
    ladder: &TensionLadder<T>,
    tritension: &Section<T>,
    p_list: &[f64],
) -> Result<EnergyReport<T>> {
    if let Some(&p) = p_list.iter().find(|&&p| !(p >= 1.0 && p.is_finite())) {
        return Err(Error::InvalidArgument(format!("Lᵖ exponent must be a finite p ≥ 1, got {p}")));
    }
    let map = pb.map();
    let sup_tau = ladder.tension.sup_norm(map);
    let mut lp_tension = BTreeMap::new();
    let mut lp_lap_tension = BTreeMap::new();
    for &p in p_list {
        lp_tension.insert(p_key(p), lp_integral(pb, &ladder.tension, T::of(p)));
        lp_lap_tension.insert(p_key(p), lp_integral(pb, &ladder.lap_tension, T::of(p)));
    }
    Ok(EnergyReport {
        energy: energy(pb),
        bienergy: half_square_integral(pb, std::slice::from_ref(&ladder.tension)),
        trienergy: half_square_integral(pb, &ladder.grad_tension),
        extended_four_energy: half_square_integral(pb, std::slice::from_ref(&ladder.lap_tension)),
        lp_tension,
        lp_lap_tension,
        sup_tau,
        sup_tau3: tritension.sup_norm(map),
        mean_curvature_sup: sup_tau / T::of_usize(pb.frame().dims()),
        volume: pb.frame().volume(),
    })
}

/// E, E₂, E₃, Ẽ₄, ∫|τ|ᵖ and ∫|Δ̄τ|ᵖ for each p in `p_list`, and sup-norms.
pub fn energy_report<T: Scalar>(
    map: &MapField<T>,
    frame: &FrameField<T>,
    p_list: &[f64],
) -> Result<EnergyReport<T>> {
    let pb = Pullback::new(map, frame)?;
    let ladder = pb.ladder();
    let tri = pb.tritension_general_from(&ladder);
    energy_report_from(&pb, &ladder, &tri, p_list)
}

/// Ẽ₄ = ½∫|Δ̄τ|². E₄ itself also carries ½∫|d dτ|² ≥ 0, which is not
/// computed; the returned value is the lower bound E₄ ≥ Ẽ₄.
pub fn e4_lower_bound_check<T: Scalar>(map: &MapField<T>, frame: &FrameField<T>) -> Result<T> {
    let pb = Pullback::new(map, frame)?;
    let tau = pb.tension();
    Ok(half_square_integral(&pb, &[pb.rough_laplacian(&tau)]))
}
