use serde::Serialize;

use crate::domain_grid::{DomainGrid, FrameField};
use crate::error::{Error, Result};
use crate::pullback::{MapField, Pullback};
use crate::scalar::Scalar;

/// sup|τ₃| below which a map counts as triharmonic for the Caccioppoli audit.
pub const TRIHARMONIC_TOL: f64 = 1e-5;

/// Quintic smoothstep 6u⁵ − 15u⁴ + 10u³ clamped to [0, 1]; max |S'| = 15/8.
pub fn smoothstep<T: Scalar>(u: T) -> T {
    let u = u.max(T::zero()).min(T::one());
    u * u * u * (u * (u * T::of(6.0) - T::of(15.0)) + T::of(10.0))
}

/// η = 1 on B_r(x₀), 0 outside B_{2r}(x₀), smooth in between.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffField<T> {
    pub eta: Vec<T>,
    /// Coordinate distance of each node to the center.
    pub distance: Vec<T>,
    pub center: usize,
    pub radius: T,
}

/// η(x) = S((2r − d(x))/r), d the periodic coordinate distance to `center`.
pub fn cutoff<T: Scalar>(grid: &DomainGrid<T>, center: usize, radius: T) -> Result<CutoffField<T>> {
    if center >= grid.len() {
        return Err(Error::InvalidArgument(format!("center node {center} outside a grid of {}", grid.len())));
    }
    let limit = grid.shortest_period() / T::of(2.0);
    if !(radius > T::zero()) || !(T::of(2.0) * radius < limit) {
        return Err(Error::RadiusTooLarge {
            radius: radius.to_f64_lossy(),
            limit: limit.to_f64_lossy(),
        });
    }
    let distance: Vec<T> = (0..grid.len())
        .map(|node| {
            let d = grid.periodic_offset(center, node);
            d[0].hypot(d[1])
        })
        .collect();
    let two = T::of(2.0);
    let eta = distance.iter().map(|&d| smoothstep((two * radius - d) / radius)).collect();
    Ok(CutoffField { eta, distance, center, radius })
}

impl<T: Scalar> CutoffField<T> {
    /// |∇η|² at every node: central second-order differences in coordinates,
    /// contracted with the frame.
    pub fn gradient_sq(&self, frame: &FrameField<T>) -> Vec<T> {
        let grid = frame.grid();
        let d = grid.dims();
        let partials: Vec<Vec<T>> = (0..d)
            .map(|a| {
                let h2 = T::of(2.0) * grid.spacing(a);
                (0..grid.len())
                    .map(|node| {
                        let idx = grid.multi_index(node);
                        let n = grid.sizes()[a];
                        let mut fwd = idx;
                        let mut bwd = idx;
                        fwd[a] = (idx[a] + 1) % n;
                        bwd[a] = (idx[a] + n - 1) % n;
                        (self.eta[grid.node_index(fwd)] - self.eta[grid.node_index(bwd)]) / h2
                    })
                    .collect()
            })
            .collect();
        (0..grid.len())
            .map(|node| {
                (0..d).fold(T::zero(), |s, i| {
                    let ei = frame.e(node, i);
                    let v = (0..d).fold(T::zero(), |acc, a| acc + ei[a] * partials[a][node]);
                    s + v * v
                })
            })
            .collect()
    }

    /// max_x |∇η|.
    pub fn max_gradient(&self, frame: &FrameField<T>) -> T {
        self.gradient_sq(frame).into_iter().fold(T::zero(), |m, v| m.max(v)).sqrt()
    }

    /// Indicator of B_r(x₀).
    pub fn inner_ball(&self) -> Vec<T> {
        self.distance
            .iter()
            .map(|&d| if d <= self.radius { T::one() } else { T::zero() })
            .collect()
    }
}

/// Both sides of the localized energy inequality and their difference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CaccioppoliMargin<T: Scalar> {
    /// (1/ε)∫|Δ̄τ|²|∇η|² − c∫|τ|⁴|∇η|².
    pub lhs: T,
    /// (1−ε)∫_{B_r}|∇̄Δ̄τ|² − (c/4)∫_{B_r}|∇|τ|²|² − c∫_{B_r}|τ|²|∇̄τ|².
    pub rhs: T,
    pub margin: T,
    /// margin ≥ −1e-8·(1 + |lhs|).
    pub pass: bool,
}

/// Evaluates the inequality for a (numerically) triharmonic map into N(c),
/// c ≤ 0, localized by `eta`.
pub fn caccioppoli_audit<T: Scalar>(
    map: &MapField<T>,
    frame: &FrameField<T>,
    eta: &CutoffField<T>,
    epsilon: T,
) -> Result<CaccioppoliMargin<T>> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(Error::InvalidArgument("ε must lie in (0, 1)".into()));
    }
    let c = map.space().curvature();
    if c > T::zero() {
        return Err(Error::InvalidArgument("the localized inequality needs c ≤ 0".into()));
    }
    if eta.eta.len() != map.len() {
        return Err(Error::Shape("cut-off and map live on different grids".into()));
    }
    let pb = Pullback::new(map, frame)?;
    let ladder = pb.ladder();
    let tri = pb.tritension_general_from(&ladder);
    let sup_tri = tri.sup_norm(map);
    if !(sup_tri <= T::of(TRIHARMONIC_TOL)) {
        return Err(Error::NotTriharmonic {
            sup_tritension: sup_tri.to_f64_lossy(),
            tolerance: TRIHARMONIC_TOL,
        });
    }
    let grad_eta = eta.gradient_sq(frame);
    let ball = eta.inner_ball();
    let tau_sq = ladder.tension.pointwise_norm_sq(map);
    let lap_sq = ladder.lap_tension.pointwise_norm_sq(map);
    let sum_sq = |fields: &[crate::pullback::Section<T>]| {
        let mut out = vec![T::zero(); map.len()];
        for f in fields {
            for (o, v) in out.iter_mut().zip(f.pointwise_norm_sq(map)) {
                *o += v;
            }
        }
        out
    };
    let grad_lap_sq = sum_sq(&ladder.grad_lap_tension);
    let grad_tau_sq = sum_sq(&ladder.grad_tension);
    let grad_norm_sq = frame.scalar_gradient(&tau_sq);

    let integral = |f: &dyn Fn(usize) -> T| frame.integrate(&(0..map.len()).map(f).collect::<Vec<T>>());
    let lhs = integral(&|i| lap_sq[i] * grad_eta[i]) / epsilon - c * integral(&|i| tau_sq[i] * tau_sq[i] * grad_eta[i]);
    let quarter = T::of(0.25);
    let rhs = (T::one() - epsilon) * integral(&|i| ball[i] * grad_lap_sq[i])
        - c * quarter
            * integral(&|i| ball[i] * grad_norm_sq.iter().fold(T::zero(), |s, g| s + g[i] * g[i]))
        - c * integral(&|i| ball[i] * tau_sq[i] * grad_tau_sq[i]);
    let margin = lhs - rhs;
    Ok(CaccioppoliMargin {
        lhs,
        rhs,
        margin,
        pass: margin >= -T::of(1e-8) * (T::one() + lhs.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_grid::{orthonormal_frame, Differentiation, GridSpec, MetricField};
    use crate::space_form::SpaceForm;
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn smoothstep_shape() {
        assert_eq!(smoothstep(-1.0_f64), 0.0);
        assert_eq!(smoothstep(2.0), 1.0);
        assert!((smoothstep(0.5_f64) - 0.5).abs() < 1e-15);
        let slope = (smoothstep(0.5_f64 + 1e-6) - smoothstep(0.5_f64 - 1e-6)) / 2e-6;
        assert!((slope - 15.0 / 8.0).abs() < 1e-6);
    }

    #[test]
    fn plateau_and_support() {
        let grid = DomainGrid::new(GridSpec::circle(256, 2.0 * PI, Differentiation::Spectral)).unwrap();
        let r = 2.0 * PI / 8.0;
        let cut = cutoff(&grid, 10, r).unwrap();
        for (node, (&e, &d)) in cut.eta.iter().zip(&cut.distance).enumerate() {
            assert!((0.0..=1.0).contains(&e));
            if d <= r {
                assert_eq!(e, 1.0, "node {node}");
            }
            if d >= 2.0 * r {
                assert_eq!(e, 0.0, "node {node}");
            }
        }
        assert!(matches!(cutoff(&grid, 0, 2.0), Err(Error::RadiusTooLarge { .. })));
        assert!(cutoff(&grid, 999, 0.1).is_err());
    }

    #[test]
    fn gradient_bound_on_circle() {
        let grid = Arc::new(DomainGrid::new(GridSpec::circle(256, 2.0 * PI, Differentiation::Spectral)).unwrap());
        let frame = orthonormal_frame(&grid, &MetricField::identity(&grid)).unwrap();
        let r = 2.0 * PI / 8.0;
        let cut = cutoff(&grid, 0, r).unwrap();
        let g = cut.max_gradient(&frame);
        assert!(g <= 2.0 / r && g > 1.5 / r, "{g}");
    }

    #[test]
    fn geodesic_margin_is_zero() {
        let grid = Arc::new(DomainGrid::new(GridSpec::circle(128, 2.0 * PI, Differentiation::Spectral)).unwrap());
        let h2 = SpaceForm::hyperboloid(-1.0, 2).unwrap();
        let map = MapField::from_fn(Arc::clone(&grid), h2, |[s, _]| {
            let u = 0.3 * s.sin();
            vec![u.cosh(), u.sinh(), 0.0]
        })
        .unwrap();
        let frame = orthonormal_frame(&grid, &MetricField::identity(&grid)).unwrap();
        let cut = cutoff(&grid, 0, 0.5).unwrap();
        // not triharmonic: a non-constant-speed segment
        assert!(matches!(caccioppoli_audit(&map, &frame, &cut, 0.5), Err(Error::NotTriharmonic { .. })));
        let point = MapField::from_fn(Arc::clone(&grid), SpaceForm::hyperboloid(-1.0, 2).unwrap(), |_| {
            vec![1.0, 0.0, 0.0]
        })
        .unwrap();
        let m = caccioppoli_audit(&point, &frame, &cut, 0.5).unwrap();
        assert_eq!(m.margin, 0.0);
        assert!(m.pass);
        assert!(caccioppoli_audit(&point, &frame, &cut, 1.5).is_err());
    }
}
