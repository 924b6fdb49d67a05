use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::DomainGrid;
use crate::error::{Error, Result};
use crate::pullback::MapField;
use crate::scalar::{compensated_sum, sup_abs, Scalar};

/// Threshold on eigenvalues (prescribed metrics) and determinants (induced ones).
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Where a metric came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricMode {
    /// Fixed independently of any map.
    Prescribed,
    /// Pulled back from a map, g = φ*h.
    Induced,
}

/// Per-node symmetric `dims × dims` metric, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField<T> {
    dims: usize,
    components: Vec<T>,
    mode: MetricMode,
}

impl<T: Scalar> MetricField<T> {
    pub fn identity(grid: &DomainGrid<T>) -> Self {
        let d = grid.dims();
        let mut g = vec![T::zero(); d * d];
        for a in 0..d {
            g[a * d + a] = T::one();
        }
        MetricField {
            dims: d,
            components: g.repeat(grid.len()),
            mode: MetricMode::Prescribed,
        }
    }

    /// A constant prescribed metric; `g` is row-major `dims × dims`.
    pub fn constant(grid: &DomainGrid<T>, g: &[T]) -> Result<Self> {
        let d = grid.dims();
        if g.len() != d * d {
            return Err(Error::Shape(format!("metric needs {} entries, got {}", d * d, g.len())));
        }
        Self::from_components(d, g.repeat(grid.len()), MetricMode::Prescribed)
    }

    /// Prescribed metric sampled from a function of node coordinates.
    pub fn from_fn(grid: &DomainGrid<T>, f: impl Fn([T; 2]) -> Vec<T>) -> Result<Self> {
        let d = grid.dims();
        let mut components = Vec::with_capacity(grid.len() * d * d);
        for node in 0..grid.len() {
            let g = f(grid.coords(node));
            if g.len() != d * d {
                return Err(Error::Shape(format!("metric needs {} entries, got {}", d * d, g.len())));
            }
            components.extend(g);
        }
        Self::from_components(d, components, MetricMode::Prescribed)
    }

    pub fn from_components(dims: usize, components: Vec<T>, mode: MetricMode) -> Result<Self> {
        if dims == 0 || !components.len().is_multiple_of(dims * dims) {
            return Err(Error::Shape("metric components do not tile dims × dims blocks".into()));
        }
        let m = MetricField { dims, components, mode };
        m.validate()?;
        Ok(m)
    }

    /// Checks symmetry and positive definiteness at every node.
    pub fn validate(&self) -> Result<()> {
        let tol = T::of(DEGENERACY_TOL);
        for node in 0..self.len() {
            let g = self.at(node);
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::DegenerateMetric { node, min_eigenvalue: f64::NAN });
            }
            let min_eig = match self.dims {
                1 => g[0],
                _ => {
                    let (a, b, c, d) = (g[0], g[1], g[2], g[3]);
                    if (b - c).abs() > tol * (T::one() + b.abs()) {
                        return Err(Error::DegenerateMetric { node, min_eigenvalue: f64::NAN });
                    }
                    let half = T::of(0.5);
                    let mean = half * (a + d);
                    let rad = (half * (a - d)).hypot(b);
                    mean - rad
                }
            };
            if !(min_eig > tol) {
                return Err(Error::DegenerateMetric {
                    node,
                    min_eigenvalue: min_eig.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.components.len() / (self.dims * self.dims)
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn mode(&self) -> MetricMode {
        self.mode
    }

    pub fn at(&self, node: usize) -> &[T] {
        let s = self.dims * self.dims;
        &self.components[node * s..(node + 1) * s]
    }

    pub fn components(&self) -> &[T] {
        &self.components
    }

    /// The same metric, relabelled as prescribed so it stays fixed under variations.
    pub fn freeze(&self) -> Self {
        MetricField {
            mode: MetricMode::Prescribed,
            ..self.clone()
        }
    }

    /// ‖g − other‖_∞ over all nodes and components.
    pub fn sup_deviation(&self, other: &MetricField<T>) -> T {
        self.components
            .iter()
            .zip(&other.components)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

/// Pulls back the target metric: g_ab = h(∂_aφ, ∂_bφ).
pub fn induced_metric<T: Scalar>(map: &MapField<T>) -> Result<MetricField<T>> {
    let grid = map.grid();
    let d = grid.dims();
    let space = map.space();
    let partials = map.coordinate_partials();
    let n = space.ambient_dim();
    let mut components = Vec::with_capacity(grid.len() * d * d);
    let tol = T::of(DEGENERACY_TOL);
    for node in 0..grid.len() {
        let x = map.point(node);
        let mut g = [T::zero(); 4];
        for a in 0..d {
            for b in a..d {
                let v = space.inner(
                    x,
                    &partials[a][node * n..(node + 1) * n],
                    &partials[b][node * n..(node + 1) * n],
                );
                g[a * d + b] = v;
                g[b * d + a] = v;
            }
        }
        let det = if d == 1 { g[0] } else { g[0] * g[3] - g[1] * g[2] };
        if !(det > tol) {
            return Err(Error::DegenerateImmersion {
                node,
                det: det.to_f64_lossy(),
            });
        }
        components.extend_from_slice(&g[..d * d]);
    }
    Ok(MetricField {
        dims: d,
        components,
        mode: MetricMode::Induced,
    })
}

/// Orthonormal frame {e_i} of a metric with the connection data ∇_{e_i}e_i.
#[derive(Clone, Debug)]
pub struct FrameField<T: Scalar> {
    grid: Arc<DomainGrid<T>>,
    metric: MetricField<T>,
    /// `[node][i][a]`: coordinate components e_i^a.
    e: Vec<T>,
    /// `[node][i][a]`: coordinate components of ∇_{e_i}e_i.
    div_terms: Vec<T>,
    vol: Vec<T>,
}

/// Gram–Schmidt frame of `metric` with e₁ ∝ ∂₁, plus Christoffel corrections.
pub fn orthonormal_frame<T: Scalar>(
    grid: &Arc<DomainGrid<T>>,
    metric: &MetricField<T>,
) -> Result<FrameField<T>> {
    let d = grid.dims();
    if metric.dims() != d || metric.len() != grid.len() {
        return Err(Error::Shape(format!(
            "metric of {} nodes × {}D does not match grid of {} nodes × {}D",
            metric.len(),
            metric.dims(),
            grid.len(),
            d
        )));
    }
    metric.validate()?;
    let len = grid.len();
    let dd = d * d;
    let mut e = vec![T::zero(); len * dd];
    let mut vol = vec![T::zero(); len];
    for node in 0..len {
        let g = metric.at(node);
        let ef = &mut e[node * dd..(node + 1) * dd];
        if d == 1 {
            ef[0] = T::one() / g[0].sqrt();
            vol[node] = g[0].sqrt();
        } else {
            let (g11, g12, g22) = (g[0], g[1], g[3]);
            ef[0] = T::one() / g11.sqrt();
            let perp = (g22 - g12 * g12 / g11).sqrt();
            ef[2] = -(g12 / g11) / perp;
            ef[3] = T::one() / perp;
            vol[node] = (g11 * g22 - g12 * g12).sqrt();
        }
    }

    let de: Vec<Vec<T>> = (0..d).map(|a| grid.derivative(&e, dd, a, sup_abs(&e))).collect();
    let comps = metric.components();
    let dg: Vec<Vec<T>> = (0..d).map(|a| grid.derivative(comps, dd, a, sup_abs(comps))).collect();

    let mut div_terms = vec![T::zero(); len * dd];
    let half = T::of(0.5);
    for node in 0..len {
        let g = metric.at(node);
        let ginv = invert(g, d);
        // Γ^b_{ac} = ½ g^{bq} (∂_a g_{qc} + ∂_c g_{qa} − ∂_q g_{ac})
        let dgn = |q: usize, r: usize, s: usize| dg[q][node * dd + r * d + s];
        let gamma = |b: usize, a: usize, c: usize| {
            let mut s = T::zero();
            for q in 0..d {
                s += ginv[b * d + q] * (dgn(a, q, c) + dgn(c, q, a) - dgn(q, a, c));
            }
            half * s
        };
        for i in 0..d {
            let ei = &e[node * dd + i * d..node * dd + (i + 1) * d];
            for b in 0..d {
                let mut v = T::zero();
                for a in 0..d {
                    v += ei[a] * de[a][node * dd + i * d + b];
                    for c in 0..d {
                        v += gamma(b, a, c) * ei[a] * ei[c];
                    }
                }
                div_terms[node * dd + i * d + b] = v;
            }
        }
    }
    Ok(FrameField {
        grid: Arc::clone(grid),
        metric: metric.clone(),
        e,
        div_terms,
        vol,
    })
}

fn invert<T: Scalar>(g: &[T], d: usize) -> [T; 4] {
    if d == 1 {
        [T::one() / g[0], T::zero(), T::zero(), T::zero()]
    } else {
        let det = g[0] * g[3] - g[1] * g[2];
        [g[3] / det, -g[1] / det, -g[2] / det, g[0] / det]
    }
}

impl<T: Scalar> FrameField<T> {
    pub fn grid(&self) -> &Arc<DomainGrid<T>> {
        &self.grid
    }

    pub fn metric(&self) -> &MetricField<T> {
        &self.metric
    }

    pub fn mode(&self) -> MetricMode {
        self.metric.mode()
    }

    pub fn dims(&self) -> usize {
        self.metric.dims()
    }

    pub fn len(&self) -> usize {
        self.vol.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vol.is_empty()
    }

    /// Coordinate components of e_i at a node.
    pub fn e(&self, node: usize, i: usize) -> &[T] {
        let d = self.dims();
        &self.e[node * d * d + i * d..node * d * d + (i + 1) * d]
    }

    /// Coordinate components of ∇_{e_i}e_i at a node.
    pub fn div_term(&self, node: usize, i: usize) -> &[T] {
        let d = self.dims();
        &self.div_terms[node * d * d + i * d..node * d * d + (i + 1) * d]
    }

    pub fn vol(&self, node: usize) -> T {
        self.vol[node]
    }

    pub fn volumes(&self) -> &[T] {
        &self.vol
    }

    /// A prescribed-mode copy, fixed while the map varies.
    pub fn freeze(&self) -> Self {
        FrameField {
            metric: self.metric.freeze(),
            ..self.clone()
        }
    }

    /// ∫_M f v_g.
    pub fn integrate(&self, f: &[T]) -> T {
        integrate(&self.grid, self, f)
    }

    /// Total volume ∫_M 1 v_g.
    pub fn volume(&self) -> T {
        let h = self.grid.cell_volume();
        compensated_sum(self.vol.iter().map(|&v| v * h))
    }

    /// Directional derivatives e_i(f) of a scalar field, one vector per i.
    pub fn scalar_gradient(&self, f: &[T]) -> Vec<Vec<T>> {
        let d = self.dims();
        let floor = sup_abs(f);
        let partials: Vec<Vec<T>> = (0..d).map(|a| self.grid.derivative(f, 1, a, floor)).collect();
        (0..d)
            .map(|i| {
                (0..self.len())
                    .map(|node| {
                        let ei = self.e(node, i);
                        (0..d).fold(T::zero(), |s, a| s + ei[a] * partials[a][node])
                    })
                    .collect()
            })
            .collect()
    }

    /// Positive scalar Laplacian Δf = −Σ_i (e_i e_i f − (∇_{e_i}e_i) f).
    pub fn scalar_laplacian(&self, f: &[T]) -> Vec<T> {
        let d = self.dims();
        let floor = sup_abs(f);
        let partials: Vec<Vec<T>> = (0..d).map(|a| self.grid.derivative(f, 1, a, floor)).collect();
        let mut out = vec![T::zero(); self.len()];
        for i in 0..d {
            let ei_f: Vec<T> = (0..self.len())
                .map(|node| {
                    let ei = self.e(node, i);
                    (0..d).fold(T::zero(), |s, a| s + ei[a] * partials[a][node])
                })
                .collect();
            let floor_i = sup_abs(&ei_f);
            let second: Vec<Vec<T>> = (0..d).map(|a| self.grid.derivative(&ei_f, 1, a, floor_i)).collect();
            for (node, o) in out.iter_mut().enumerate() {
                let ei = self.e(node, i);
                let div = self.div_term(node, i);
                for a in 0..d {
                    *o -= ei[a] * second[a][node] - div[a] * partials[a][node];
                }
            }
        }
        out
    }
}

/// Σ_nodes f·vol·Π h_a, compensated.
pub fn integrate<T: Scalar>(grid: &DomainGrid<T>, frame: &FrameField<T>, f: &[T]) -> T {
    debug_assert_eq!(f.len(), grid.len());
    let h = grid.cell_volume();
    compensated_sum(f.iter().zip(frame.volumes()).map(|(&v, &w)| v * w * h))
}
