//! Discrete maps φ: M → N(c), sections of φ⁻¹TN and the operator stack
//! dφ, τ, ∇̄, Δ̄, ℛ, J, τ₂, τ₃.
//!
//! Sections are stored in ambient coordinates and re-projected onto T_φN
//! after every derivative. Each section carries a `scale`: the largest
//! magnitude among the raw ambient terms it was assembled from. Spectral
//! derivatives use it to discard cancellation noise (a geodesic's τ is
//! roundoff of an O(1) quantity and differentiates to exactly zero).

use std::sync::Arc;

use crate::domain_grid::{DomainGrid, FrameField};
use crate::error::{Error, Result};
use crate::scalar::{sup_abs, Scalar};
use crate::space_form::SpaceForm;

/// Admissible ‖g − φ*h‖_∞ for the space-form tritension.
pub const ISOMETRY_TOL: f64 = 1e-6;

fn on_model_tol<T: Scalar>() -> T {
    T::of(1e-10).max(T::epsilon() * T::of(256.0))
}

/// A discrete map: ambient coordinates of φ(x) at every node.
#[derive(Clone, Debug)]
pub struct MapField<T: Scalar> {
    values: Vec<T>,
    space: SpaceForm<T>,
    grid: Arc<DomainGrid<T>>,
}

impl<T: Scalar> MapField<T> {
    /// Wraps node values, checking length and the model constraint.
    pub fn new(grid: Arc<DomainGrid<T>>, space: SpaceForm<T>, values: Vec<T>) -> Result<Self> {
        let n = space.ambient_dim();
        if values.len() != grid.len() * n {
            return Err(Error::Shape(format!(
                "{} values for {} nodes of ambient dimension {}",
                values.len(),
                grid.len(),
                n
            )));
        }
        let map = MapField { values, space, grid };
        let tol = on_model_tol::<T>();
        for node in 0..map.len() {
            let r = map.space.constraint_residual(map.point(node));
            if !(r <= tol) {
                return Err(Error::DegeneratePoint(format!(
                    "node {node} is off the model (residual {})", r.to_f64_lossy()
                )));
            }
        }
        Ok(map)
    }

    /// Samples `f` at node coordinates and retracts each sample onto the model.
    pub fn from_fn(
        grid: Arc<DomainGrid<T>>,
        space: SpaceForm<T>,
        f: impl Fn([T; 2]) -> Vec<T>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * space.ambient_dim());
        for node in 0..grid.len() {
            values.extend(space.project_point(&f(grid.coords(node)))?.0);
        }
        Self::new(grid, space, values)
    }

    pub fn point(&self, node: usize) -> &[T] {
        let n = self.space.ambient_dim();
        &self.values[node * n..(node + 1) * n]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn space(&self) -> &SpaceForm<T> {
        &self.space
    }

    pub fn grid(&self) -> &Arc<DomainGrid<T>> {
        &self.grid
    }

    pub fn ambient_dim(&self) -> usize {
        self.space.ambient_dim()
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Tangent-projected coordinate partials ∂_aφ, one field per axis.
    pub fn coordinate_partials(&self) -> Vec<Vec<T>> {
        let n = self.ambient_dim();
        let floor = sup_abs(&self.values);
        (0..self.grid.dims())
            .map(|a| {
                let mut d = self.grid.derivative(&self.values, n, a, floor);
                for (x, v) in self.values.chunks(n).zip(d.chunks_mut(n)) {
                    self.space.project_tangent_in_place(x, v);
                }
                d
            })
            .collect()
    }

    /// Largest model-constraint residual over the nodes.
    pub fn constraint_residual(&self) -> T {
        (0..self.len()).fold(T::zero(), |m, node| m.max(self.space.constraint_residual(self.point(node))))
    }

    /// φ_t(x) = exp_{φ(x)}(t V(x)).
    pub fn exp_along(&self, v: &Section<T>, t: T) -> Self {
        let n = self.ambient_dim();
        let mut values = vec![T::zero(); self.values.len()];
        let mut step = vec![T::zero(); n];
        for node in 0..self.len() {
            for (s, &vi) in step.iter_mut().zip(v.at(node)) {
                *s = t * vi;
            }
            self.space
                .exp_map_into(self.point(node), &step, &mut values[node * n..(node + 1) * n]);
        }
        MapField {
            values,
            space: self.space,
            grid: Arc::clone(&self.grid),
        }
    }
}

/// A vector field along φ, in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Section<T> {
    values: Vec<T>,
    dim: usize,
    scale: T,
}

impl<T: Scalar> Section<T> {
    /// Wraps raw values; the scale is their own magnitude.
    pub fn new(values: Vec<T>, dim: usize) -> Self {
        let scale = sup_abs(&values);
        Section { values, dim, scale }
    }

    pub fn with_scale(values: Vec<T>, dim: usize, scale: T) -> Self {
        Section { values, dim, scale }
    }

    pub fn zeros(len: usize, dim: usize) -> Self {
        Section::new(vec![T::zero(); len * dim], dim)
    }

    /// Projects ambient values onto the tangent spaces along `map`.
    pub fn tangent(map: &MapField<T>, mut values: Vec<T>) -> Result<Self> {
        let n = map.ambient_dim();
        if values.len() != map.len() * n {
            return Err(Error::Shape(format!(
                "{} section values for {} nodes of ambient dimension {}",
                values.len(),
                map.len(),
                n
            )));
        }
        let scale = sup_abs(&values);
        for (x, v) in map.values().chunks(n).zip(values.chunks_mut(n)) {
            map.space().project_tangent_in_place(x, v);
        }
        Ok(Section { values, dim: n, scale })
    }

    pub fn at(&self, node: usize) -> &[T] {
        &self.values[node * self.dim..(node + 1) * self.dim]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    /// a·self + b·other.
    pub fn combine(&self, a: T, other: &Section<T>, b: T) -> Section<T> {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Section {
            values,
            dim: self.dim,
            scale: (a.abs() * self.scale).max(b.abs() * other.scale),
        }
    }

    pub fn scaled(&self, a: T) -> Section<T> {
        Section {
            values: self.values.iter().map(|&x| a * x).collect(),
            dim: self.dim,
            scale: a.abs() * self.scale,
        }
    }

    /// h(V, W) at every node.
    pub fn pointwise_inner(&self, map: &MapField<T>, other: &Section<T>) -> Vec<T> {
        (0..self.len())
            .map(|node| map.space().inner(map.point(node), self.at(node), other.at(node)))
            .collect()
    }

    /// |V|² at every node.
    pub fn pointwise_norm_sq(&self, map: &MapField<T>) -> Vec<T> {
        (0..self.len())
            .map(|node| {
                let v = self.at(node);
                map.space().inner(map.point(node), v, v).max(T::zero())
            })
            .collect()
    }

    /// sup_x |V(x)|.
    pub fn sup_norm(&self, map: &MapField<T>) -> T {
        self.pointwise_norm_sq(map)
            .into_iter()
            .fold(T::zero(), |m, v| m.max(v))
            .sqrt()
    }

    /// Largest |⟨φ, V⟩| (model form) over the nodes.
    pub fn tangency_residual(&self, map: &MapField<T>) -> T {
        (0..self.len()).fold(T::zero(), |m, node| {
            m.max(map.space().tangency_residual(map.point(node), self.at(node)))
        })
    }
}

/// τ and its first derivatives up to Δ̄²τ, computed once and shared.
#[derive(Clone, Debug)]
pub struct TensionLadder<T> {
    pub tension: Section<T>,
    /// ∇̄_{e_i}τ for each frame index.
    pub grad_tension: Vec<Section<T>>,
    pub lap_tension: Section<T>,
    /// ∇̄_{e_i}Δ̄τ for each frame index.
    pub grad_lap_tension: Vec<Section<T>>,
    pub bilap_tension: Section<T>,
}

/// Operator context for a map and a domain frame.
#[derive(Clone, Debug)]
pub struct Pullback<'a, T: Scalar> {
    map: &'a MapField<T>,
    frame: &'a FrameField<T>,
    partials: Vec<Vec<T>>,
    dphi: Vec<Section<T>>,
}

impl<'a, T: Scalar> Pullback<'a, T> {
    pub fn new(map: &'a MapField<T>, frame: &'a FrameField<T>) -> Result<Self> {
        if frame.len() != map.len() || frame.dims() != map.grid().dims() {
            return Err(Error::Shape(format!(
                "frame ({} nodes, {}D) does not match map grid ({} nodes, {}D)",
                frame.len(),
                frame.dims(),
                map.len(),
                map.grid().dims()
            )));
        }
        let partials = map.coordinate_partials();
        let n = map.ambient_dim();
        let d = frame.dims();
        let scale = partials.iter().fold(T::zero(), |m, p| m.max(sup_abs(p)));
        let dphi = (0..d)
            .map(|i| {
                let mut v = vec![T::zero(); map.len() * n];
                for node in 0..map.len() {
                    let ei = frame.e(node, i);
                    for (a, p) in partials.iter().enumerate() {
                        for k in 0..n {
                            v[node * n + k] += ei[a] * p[node * n + k];
                        }
                    }
                }
                Section::with_scale(v, n, scale)
            })
            .collect();
        Ok(Pullback { map, frame, partials, dphi })
    }

    pub fn map(&self) -> &'a MapField<T> {
        self.map
    }

    pub fn frame(&self) -> &'a FrameField<T> {
        self.frame
    }

    fn space(&self) -> &SpaceForm<T> {
        self.map.space()
    }

    fn n(&self) -> usize {
        self.map.ambient_dim()
    }

    fn dims(&self) -> usize {
        self.frame.dims()
    }

    /// dφ(e_i) for each frame index.
    pub fn differential(&self) -> &[Section<T>] {
        &self.dphi
    }

    /// |dφ|² = Σ_i |dφ(e_i)|² at every node.
    pub fn differential_norm_sq(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.map.len()];
        for s in &self.dphi {
            for (o, v) in out.iter_mut().zip(s.pointwise_norm_sq(self.map)) {
                *o += v;
            }
        }
        out
    }

    /// dφ(X) for a per-node coordinate vector X.
    fn push_forward<'f>(&self, x: impl Fn(usize) -> &'f [T]) -> (Vec<T>, T)
    where
        T: 'f,
    {
        let n = self.n();
        let mut out = vec![T::zero(); self.map.len() * n];
        for node in 0..self.map.len() {
            let xa = x(node);
            for (a, p) in self.partials.iter().enumerate() {
                for k in 0..n {
                    out[node * n + k] += xa[a] * p[node * n + k];
                }
            }
        }
        let s = sup_abs(&out);
        (out, s)
    }

    fn coordinate_derivatives(&self, v: &Section<T>) -> Vec<Vec<T>> {
        let grid = self.map.grid();
        (0..self.dims())
            .map(|a| grid.derivative(v.values(), v.dim(), a, v.scale()))
            .collect()
    }

    /// P(Σ_a X^a ∂_aV) from precomputed coordinate derivatives; returns the
    /// unprojected magnitude alongside.
    fn directional<'f>(&self, derivs: &[Vec<T>], x: impl Fn(usize) -> &'f [T]) -> (Vec<T>, T)
    where
        T: 'f,
    {
        let n = self.n();
        let mut out = vec![T::zero(); self.map.len() * n];
        let mut raw = T::zero();
        for node in 0..self.map.len() {
            let xa = x(node);
            let w = &mut out[node * n..(node + 1) * n];
            for (a, d) in derivs.iter().enumerate() {
                for k in 0..n {
                    w[k] += xa[a] * d[node * n + k];
                }
            }
            raw = w.iter().fold(raw, |m, v| m.max(v.abs()));
            self.space().project_tangent_in_place(self.map.point(node), w);
        }
        (out, raw)
    }

    /// ∇̄_{e_i}V.
    pub fn nabla_bar(&self, v: &Section<T>, i: usize) -> Section<T> {
        let derivs = self.coordinate_derivatives(v);
        let (w, raw) = self.directional(&derivs, |node| self.frame.e(node, i));
        Section::with_scale(w, self.n(), raw.max(v.scale()))
    }

    /// ∇̄_{e_i}V for every frame index.
    pub fn nabla_bar_all(&self, v: &Section<T>) -> Vec<Section<T>> {
        let derivs = self.coordinate_derivatives(v);
        (0..self.dims())
            .map(|i| {
                let (w, raw) = self.directional(&derivs, |node| self.frame.e(node, i));
                Section::with_scale(w, self.n(), raw.max(v.scale()))
            })
            .collect()
    }

    /// τ(φ) = Σ_i ∇̄_{e_i}dφ(e_i) − dφ(∇_{e_i}e_i).
    pub fn tension(&self) -> Section<T> {
        let n = self.n();
        let mut tau = vec![T::zero(); self.map.len() * n];
        let mut scale = T::zero();
        for i in 0..self.dims() {
            let derivs = self.coordinate_derivatives(&self.dphi[i]);
            let (second, raw) = self.directional(&derivs, |node| self.frame.e(node, i));
            let (corr, raw_corr) = self.push_forward(|node| self.frame.div_term(node, i));
            for ((t, s), c) in tau.iter_mut().zip(&second).zip(&corr) {
                *t += *s - *c;
            }
            scale = scale.max(raw).max(raw_corr);
        }
        Section::with_scale(tau, n, scale)
    }

    /// (∇̄_{e_i}V for each i, Δ̄V) with Δ̄V = −Σ_i ∇̄_{e_i}∇̄_{e_i}V − ∇̄_{∇_{e_i}e_i}V.
    pub fn rough_laplacian_with_gradient(&self, v: &Section<T>) -> (Vec<Section<T>>, Section<T>) {
        let n = self.n();
        let derivs = self.coordinate_derivatives(v);
        let grads: Vec<Section<T>> = (0..self.dims())
            .map(|i| {
                let (w, raw) = self.directional(&derivs, |node| self.frame.e(node, i));
                Section::with_scale(w, n, raw.max(v.scale()))
            })
            .collect();
        let mut lap = vec![T::zero(); self.map.len() * n];
        let mut scale = v.scale();
        for (i, g) in grads.iter().enumerate() {
            let second_derivs = self.coordinate_derivatives(g);
            let (second, raw) = self.directional(&second_derivs, |node| self.frame.e(node, i));
            let (corr, raw_corr) = self.directional(&derivs, |node| self.frame.div_term(node, i));
            for ((l, s), c) in lap.iter_mut().zip(&second).zip(&corr) {
                *l -= *s - *c;
            }
            scale = scale.max(raw).max(raw_corr);
        }
        (grads, Section::with_scale(lap, n, scale))
    }

    /// Δ̄V (positive rough Laplacian).
    pub fn rough_laplacian(&self, v: &Section<T>) -> Section<T> {
        self.rough_laplacian_with_gradient(v).1
    }

    /// W^ℓ = Δ̄^{ℓ−1}τ.
    pub fn iterated_laplacian(&self, tau: &Section<T>, l: usize) -> Result<Section<T>> {
        if l == 0 {
            return Err(Error::InvalidArgument("iterated Laplacian order must be ≥ 1".into()));
        }
        let mut w = tau.clone();
        for _ in 1..l {
            w = self.rough_laplacian(&w);
        }
        Ok(w)
    }

    /// ℛ(V) = Σ_i R(V, dφe_i)dφe_i = c Σ_i (|dφe_i|² V − h(V, dφe_i) dφe_i).
    pub fn curvature_contraction(&self, v: &Section<T>) -> Section<T> {
        let n = self.n();
        let c = self.space().curvature();
        let mut out = vec![T::zero(); self.map.len() * n];
        if c == T::zero() {
            return Section::with_scale(out, n, T::zero());
        }
        let mut scale = T::zero();
        for node in 0..self.map.len() {
            let x = self.map.point(node);
            let vv = v.at(node);
            let o = &mut out[node * n..(node + 1) * n];
            for d in &self.dphi {
                let de = d.at(node);
                let a = self.space().inner(x, de, de);
                let b = self.space().inner(x, vv, de);
                for k in 0..n {
                    let (t1, t2) = (c * a * vv[k], c * b * de[k]);
                    scale = scale.max(t1.abs()).max(t2.abs());
                    o[k] += t1 - t2;
                }
            }
        }
        Section::with_scale(out, n, scale)
    }

    /// J(V) = Δ̄V − ℛ(V).
    pub fn jacobi(&self, v: &Section<T>) -> Section<T> {
        self.rough_laplacian(v).combine(T::one(), &self.curvature_contraction(v), -T::one())
    }

    /// τ₂(φ) = J(τ).
    pub fn bitension(&self) -> Section<T> {
        self.jacobi(&self.tension())
    }

    /// τ, ∇̄τ, Δ̄τ, ∇̄Δ̄τ and Δ̄²τ.
    pub fn ladder(&self) -> TensionLadder<T> {
        let tension = self.tension();
        let (grad_tension, lap_tension) = self.rough_laplacian_with_gradient(&tension);
        let (grad_lap_tension, bilap_tension) = self.rough_laplacian_with_gradient(&lap_tension);
        TensionLadder {
            tension,
            grad_tension,
            lap_tension,
            grad_lap_tension,
            bilap_tension,
        }
    }

    /// τ₃ = J(Δ̄τ) − Σ_i R(∇̄_{e_i}τ, τ)dφ(e_i).
    pub fn tritension_general(&self) -> Section<T> {
        self.tritension_general_from(&self.ladder())
    }

    pub fn tritension_general_from(&self, ladder: &TensionLadder<T>) -> Section<T> {
        let n = self.n();
        let c = self.space().curvature();
        let j = ladder
            .bilap_tension
            .combine(T::one(), &self.curvature_contraction(&ladder.lap_tension), -T::one());
        if c == T::zero() {
            return j;
        }
        // R(X,Y)Z = c(h(Y,Z)X − h(X,Z)Y) with X = ∇̄_iτ, Y = τ, Z = dφe_i
        let mut out = j.values().to_vec();
        let mut scale = j.scale();
        for node in 0..self.map.len() {
            let x = self.map.point(node);
            let tau = ladder.tension.at(node);
            for (i, d) in self.dphi.iter().enumerate() {
                let gi = ladder.grad_tension[i].at(node);
                let de = d.at(node);
                let a = self.space().inner(x, tau, de);
                let b = self.space().inner(x, gi, de);
                for k in 0..n {
                    let (t1, t2) = (c * a * gi[k], c * b * tau[k]);
                    scale = scale.max(t1.abs()).max(t2.abs());
                    out[node * n + k] -= t1 - t2;
                }
            }
        }
        Section::with_scale(out, n, scale)
    }

    /// ‖g − φ*h‖_∞ between the frame's metric and the pulled-back one.
    pub fn isometry_deviation(&self) -> T {
        let d = self.dims();
        let n = self.n();
        let mut dev = T::zero();
        for node in 0..self.map.len() {
            let g = self.frame.metric().at(node);
            for a in 0..d {
                for b in 0..d {
                    let h = self.space().form(
                        &self.partials[a][node * n..(node + 1) * n],
                        &self.partials[b][node * n..(node + 1) * n],
                    );
                    dev = dev.max((g[a * d + b] - h).abs());
                }
            }
        }
        dev
    }

    /// τ₃ for isometric immersions: Δ̄²τ − ℛ(Δ̄τ) − c h(τ,τ)τ.
    pub fn tritension_space_form(&self) -> Result<Section<T>> {
        self.tritension_space_form_from(&self.ladder())
    }

    pub fn tritension_space_form_from(&self, ladder: &TensionLadder<T>) -> Result<Section<T>> {
        let dev = self.isometry_deviation();
        if !(dev <= T::of(ISOMETRY_TOL)) {
            return Err(Error::NotIsometric {
                deviation: dev.to_f64_lossy(),
                tolerance: ISOMETRY_TOL,
            });
        }
        let c = self.space().curvature();
        let j = ladder
            .bilap_tension
            .combine(T::one(), &self.curvature_contraction(&ladder.lap_tension), -T::one());
        if c == T::zero() {
            return Ok(j);
        }
        let n = self.n();
        let norms = ladder.tension.pointwise_norm_sq(self.map);
        let mut out = j.values().to_vec();
        let mut scale = j.scale();
        for (node, &t2) in norms.iter().enumerate() {
            for (k, &t) in ladder.tension.at(node).iter().enumerate() {
                let term = c * t2 * t;
                scale = scale.max(term.abs());
                out[node * n + k] -= term;
            }
        }
        Ok(Section::with_scale(out, n, scale))
    }
}
