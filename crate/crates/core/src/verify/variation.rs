use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain_grid::{FrameField, MetricMode};
use crate::energy::k_energy;
use crate::error::{Error, Result};
use crate::pullback::{MapField, Pullback, Section};
use crate::scalar::Scalar;

/// Accepted band for the ratio r(t)/r(t/2) of an O(t²) residual.
pub const RICHARDSON_BAND: (f64, f64) = (3.5, 4.5);

/// Relative first-variation residual below which only roundoff is left.
pub const FIRST_VARIATION_FLOOR: f64 = 1e-9;

/// Absolute tension-variation residual (per unit of sup|V|) below which only
/// roundoff is left.
pub const TENSION_VARIATION_FLOOR: f64 = 1e-7;

/// φ_t = exp_φ(tV).
pub fn vary<T: Scalar>(map: &MapField<T>, v: &Section<T>, t: T) -> MapField<T> {
    map.exp_along(v, t)
}

fn require_prescribed<T: Scalar>(frame: &FrameField<T>) -> Result<()> {
    match frame.mode() {
        MetricMode::Prescribed => Ok(()),
        MetricMode::Induced => Err(Error::MetricMode(
            "variations need a fixed prescribed metric; freeze the induced one first".into(),
        )),
    }
}

fn tension_of_order<T: Scalar>(pb: &Pullback<'_, T>, k: usize) -> Result<Section<T>> {
    match k {
        1 => Ok(pb.tension()),
        2 => Ok(pb.bitension()),
        3 => Ok(pb.tritension_general()),
        _ => Err(Error::InvalidArgument(format!("variation order must be 1, 2 or 3, got {k}"))),
    }
}

/// Both sides of dE_k/dt|₀ = −∫⟨τ_k, V⟩.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FirstVariation<T: Scalar> {
    /// (E_k(φ_t) − E_k(φ_{−t}))/2t.
    pub finite_difference: T,
    /// −∫⟨τ_k(φ), V⟩.
    pub analytic: T,
    /// |finite_difference − analytic| / (1 + |analytic|).
    pub residual: T,
}

pub fn first_variation<T: Scalar>(
    map: &MapField<T>,
    v: &Section<T>,
    frame: &FrameField<T>,
    k: usize,
    t: T,
) -> Result<FirstVariation<T>> {
    require_prescribed(frame)?;
    if !(t > T::zero()) {
        return Err(Error::InvalidArgument("variation step t must be positive".into()));
    }
    let pb = Pullback::new(map, frame)?;
    let tau_k = tension_of_order(&pb, k)?;
    let analytic = -frame.integrate(&tau_k.pointwise_inner(map, v));
    let plus = vary(map, v, t);
    let minus = vary(map, v, -t);
    let e_plus = k_energy(&Pullback::new(&plus, frame)?, k)?;
    let e_minus = k_energy(&Pullback::new(&minus, frame)?, k)?;
    let finite_difference = (e_plus - e_minus) / (T::of(2.0) * t);
    Ok(FirstVariation {
        finite_difference,
        analytic,
        residual: (finite_difference - analytic).abs() / (T::one() + analytic.abs()),
    })
}

/// |FD(t) − A| / (1 + |A|) for the k-th energy.
pub fn first_variation_residual<T: Scalar>(
    map: &MapField<T>,
    v: &Section<T>,
    frame: &FrameField<T>,
    k: usize,
    t: T,
) -> Result<T> {
    Ok(first_variation(map, v, frame, k, t)?.residual)
}

/// ‖P((τ(φ_t) − τ(φ_{−t}))/2t) − (−Δ̄V + ℛ(V))‖_∞.
pub fn tension_variation_residual<T: Scalar>(
    map: &MapField<T>,
    v: &Section<T>,
    frame: &FrameField<T>,
    t: T,
) -> Result<T> {
    require_prescribed(frame)?;
    if !(t > T::zero()) {
        return Err(Error::InvalidArgument("variation step t must be positive".into()));
    }
    let pb = Pullback::new(map, frame)?;
    let predicted = pb.curvature_contraction(v).combine(T::one(), &pb.rough_laplacian(v), -T::one());
    let plus = vary(map, v, t);
    let minus = vary(map, v, -t);
    let tp = Pullback::new(&plus, frame)?.tension();
    let tm = Pullback::new(&minus, frame)?.tension();
    let diff: Vec<T> = tp
        .values()
        .iter()
        .zip(tm.values())
        .map(|(&a, &b)| (a - b) / (T::of(2.0) * t))
        .collect();
    let measured = Section::tangent(map, diff)?;
    let err = measured.combine(T::one(), &predicted, -T::one());
    Ok(err.sup_norm(map))
}

/// Residuals at t and t/2 and whether they decay like t².
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Richardson<T: Scalar> {
    pub coarse: T,
    pub fine: T,
    pub ratio: T,
    pub floor: T,
    /// Ratio inside [`RICHARDSON_BAND`], or the coarse residual already at
    /// the roundoff floor (exactly quadratic energies leave nothing to decay).
    pub pass: bool,
}

pub fn richardson<T: Scalar>(residual: impl Fn(T) -> Result<T>, t: T, floor: T) -> Result<Richardson<T>> {
    let coarse = residual(t)?;
    let fine = residual(t / T::of(2.0))?;
    let ratio = coarse / fine;
    let in_band = ratio >= T::of(RICHARDSON_BAND.0) && ratio <= T::of(RICHARDSON_BAND.1);
    Ok(Richardson {
        coarse,
        fine,
        ratio,
        floor,
        pass: in_band || (coarse <= floor && fine <= floor),
    })
}

/// A seeded smooth tangent field: low Fourier modes in every ambient
/// component, amplitudes decaying like 1/(1 + |m|²), projected onto T_φN.
pub fn random_smooth_section<T: Scalar>(map: &MapField<T>, seed: u64, modes: usize, amplitude: T) -> Section<T> {
    let grid = map.grid();
    let n = map.ambient_dim();
    let two_pi = T::of(2.0) * T::PI();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m2 = if grid.dims() == 2 { modes as i64 } else { 0 };
    let mut terms = Vec::new();
    for m0 in -(modes as i64)..=(modes as i64) {
        for m1 in -m2..=m2 {
            let weight = T::one() / T::of(1.0 + (m0 * m0 + m1 * m1) as f64);
            let coeffs: Vec<(T, T)> = (0..n)
                .map(|_| (T::of(rng.gen_range(-1.0..1.0)), T::of(rng.gen_range(-1.0..1.0))))
                .collect();
            terms.push((m0, m1, weight, coeffs));
        }
    }
    let lengths = grid.lengths();
    let mut values = vec![T::zero(); map.len() * n];
    for node in 0..map.len() {
        let x = grid.coords(node);
        for (m0, m1, w, coeffs) in &terms {
            let mut phase = two_pi * T::of(*m0 as f64) * x[0] / lengths[0];
            if grid.dims() == 2 {
                phase += two_pi * T::of(*m1 as f64) * x[1] / lengths[1];
            }
            let (s, c) = phase.sin_cos();
            for (k, (a, b)) in coeffs.iter().enumerate() {
                values[node * n + k] += amplitude * *w * (*a * c + *b * s);
            }
        }
    }
    Section::tangent(map, values).expect("sized from the map")
}
