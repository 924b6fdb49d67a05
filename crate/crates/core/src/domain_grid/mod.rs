//! Periodic sampled domains (M,g): circles and flat-coordinate tori.
//!
//! Fields are stored node-major: a field with `dim` components on a grid of
//! `len` nodes is a `Vec<T>` of length `len * dim`, and node `(i, j)` of a
//! 2-D grid has flat index `i + sizes[0] * j`.

mod frame;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sup_abs, Scalar};

pub use frame::{induced_metric, integrate, orthonormal_frame, FrameField, MetricField, MetricMode};

/// Smallest number of nodes accepted per axis.
pub const MIN_NODES: usize = 16;

/// Fields with at least this many scalar entries are differentiated in parallel.
const PARALLEL_THRESHOLD: usize = 1 << 14;

/// Discrete derivative used for every ∂_a on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Differentiation {
    CentralFD2,
    CentralFD4,
    #[default]
    Spectral,
}

/// Shape of a periodic grid; `sizes.len()` is the domain dimension (1 or 2).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec<T> {
    pub sizes: Vec<usize>,
    pub lengths: Vec<T>,
    pub differentiation: Differentiation,
}

impl<T: Scalar> GridSpec<T> {
    pub fn circle(size: usize, length: T, differentiation: Differentiation) -> Self {
        GridSpec {
            sizes: vec![size],
            lengths: vec![length],
            differentiation,
        }
    }

    pub fn torus(sizes: [usize; 2], lengths: [T; 2], differentiation: Differentiation) -> Self {
        GridSpec {
            sizes: sizes.to_vec(),
            lengths: lengths.to_vec(),
            differentiation,
        }
    }
}

#[derive(Clone)]
struct FftPair<T> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

/// A materialized periodic grid with its differentiation operators.
#[derive(Clone)]
pub struct DomainGrid<T: Scalar> {
    spec: GridSpec<T>,
    spacing: Vec<T>,
    len: usize,
    plans: Vec<FftPair<T>>,
    /// Angular wavenumbers 2πm/L per axis in FFT order.
    wavenumbers: Vec<Vec<T>>,
}

impl<T: Scalar> fmt::Debug for DomainGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainGrid")
            .field("spec", &self.spec)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl<T: Scalar> DomainGrid<T> {
    /// Builds the grid, its spacings and differentiation plans.
    pub fn new(spec: GridSpec<T>) -> Result<Self> {
        let dims = spec.sizes.len();
        if dims == 0 || dims > 2 {
            return Err(Error::InvalidSpec(format!("dims must be 1 or 2, got {dims}")));
        }
        if spec.lengths.len() != dims {
            return Err(Error::InvalidSpec(format!(
                "{} sizes but {} lengths",
                dims,
                spec.lengths.len()
            )));
        }
        for (&n, &l) in spec.sizes.iter().zip(&spec.lengths) {
            if n < MIN_NODES {
                return Err(Error::InvalidSpec(format!(
                    "{n} nodes per axis is below the minimum of {MIN_NODES}"
                )));
            }
            if !(l > T::zero() && l.is_finite()) {
                return Err(Error::InvalidSpec(format!("period {l} must be positive and finite")));
            }
        }
        let mut planner = FftPlanner::new();
        let plans = spec
            .sizes
            .iter()
            .map(|&n| FftPair {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
            .collect();
        let wavenumbers = spec
            .sizes
            .iter()
            .zip(&spec.lengths)
            .map(|(&n, &l)| {
                let base = T::of(2.0) * T::PI() / l;
                (0..n)
                    .map(|m| {
                        let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                        base * T::of(signed)
                    })
                    .collect()
            })
            .collect();
        let spacing = spec
            .sizes
            .iter()
            .zip(&spec.lengths)
            .map(|(&n, &l)| l / T::of_usize(n))
            .collect();
        Ok(DomainGrid {
            len: spec.sizes.iter().product(),
            spec,
            spacing,
            plans,
            wavenumbers,
        })
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn dims(&self) -> usize {
        self.spec.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.spec.sizes
    }

    pub fn lengths(&self) -> &[T] {
        &self.spec.lengths
    }

    pub fn spacing(&self, axis: usize) -> T {
        self.spacing[axis]
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn scheme(&self) -> Differentiation {
        self.spec.differentiation
    }

    /// Coordinate cell volume Π h_a.
    pub fn cell_volume(&self) -> T {
        self.spacing.iter().fold(T::one(), |acc, &h| acc * h)
    }

    pub fn shortest_period(&self) -> T {
        self.spec.lengths.iter().fold(T::infinity(), |m, &l| m.min(l))
    }

    /// Per-axis integer indices of a node.
    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        let n0 = self.spec.sizes[0];
        [node % n0, node / n0]
    }

    pub fn node_index(&self, idx: [usize; 2]) -> usize {
        idx[0] + self.spec.sizes[0] * idx[1]
    }

    /// Coordinates of a node (unused axes are zero).
    pub fn coords(&self, node: usize) -> [T; 2] {
        let idx = self.multi_index(node);
        let mut x = [T::zero(); 2];
        for (a, xa) in x.iter_mut().enumerate().take(self.dims()) {
            *xa = T::of_usize(idx[a]) * self.spacing[a];
        }
        x
    }

    /// Periodic coordinate displacement from `from` to `to`, wrapped into
    /// [−L/2, L/2) per axis.
    pub fn periodic_offset(&self, from: usize, to: usize) -> [T; 2] {
        let (a, b) = (self.coords(from), self.coords(to));
        let mut d = [T::zero(); 2];
        for axis in 0..self.dims() {
            let l = self.spec.lengths[axis];
            let mut x = b[axis] - a[axis];
            let half = l / T::of(2.0);
            if x >= half {
                x -= l;
            } else if x < -half {
                x += l;
            }
            d[axis] = x;
        }
        d
    }

    fn stride(&self, axis: usize) -> usize {
        self.spec.sizes[..axis].iter().product()
    }

    fn line_base(&self, axis: usize, line: usize) -> usize {
        let stride = self.stride(axis);
        (line % stride) + (line / stride) * stride * self.spec.sizes[axis]
    }

    /// ∂/∂x_axis of a node-major field with `dim` components.
    ///
    /// For the spectral scheme, Fourier content below the roundoff plateau is
    /// discarded before differentiating: a coefficient survives only if it
    /// exceeds `8 eps · max(max_k |ĉ_k|, floor · n)`. `floor` is the magnitude of
    /// the terms the field was assembled from; pass zero when unknown. Without
    /// this, repeated differentiation amplifies roundoff as k_max^order.
    pub fn derivative(&self, field: &[T], dim: usize, axis: usize, floor: T) -> Vec<T> {
        debug_assert_eq!(field.len(), self.len * dim);
        match self.spec.differentiation {
            Differentiation::Spectral => self.spectral_derivative(field, dim, axis, floor),
            Differentiation::CentralFD2 => {
                let h2 = self.spacing[axis] * T::of(2.0);
                self.stencil(field, dim, axis, |f, k, n| (f(k + 1) - f(k + n - 1)) / h2)
            }
            Differentiation::CentralFD4 => {
                let h12 = self.spacing[axis] * T::of(12.0);
                let eight = T::of(8.0);
                self.stencil(field, dim, axis, |f, k, n| {
                    (eight * (f(k + 1) - f(k + n - 1)) - (f(k + 2) - f(k + n - 2))) / h12
                })
            }
        }
    }

    /// Derivative of a scalar field whose own magnitude sets the roundoff floor.
    pub fn derivative_scalar(&self, f: &[T], axis: usize) -> Vec<T> {
        self.derivative(f, 1, axis, sup_abs(f))
    }

    fn stencil<F>(&self, field: &[T], dim: usize, axis: usize, rule: F) -> Vec<T>
    where
        F: Fn(&dyn Fn(usize) -> T, usize, usize) -> T,
    {
        let n = self.spec.sizes[axis];
        let stride = self.stride(axis);
        let mut out = vec![T::zero(); field.len()];
        for line in 0..self.len / n {
            let base = self.line_base(axis, line);
            for comp in 0..dim {
                let at = |k: usize| field[(base + (k % n) * stride) * dim + comp];
                for k in 0..n {
                    out[(base + k * stride) * dim + comp] = rule(&at, k, n);
                }
            }
        }
        out
    }

    fn spectral_derivative(&self, field: &[T], dim: usize, axis: usize, floor: T) -> Vec<T> {
        let n = self.spec.sizes[axis];
        let lines = self.len / n;
        let stride = self.stride(axis);
        let plan = &self.plans[axis];
        let mut buf = vec![Complex::new(T::zero(), T::zero()); lines * dim * n];
        for line in 0..lines {
            let base = self.line_base(axis, line);
            for comp in 0..dim {
                let chunk = &mut buf[(line * dim + comp) * n..(line * dim + comp + 1) * n];
                for (k, c) in chunk.iter_mut().enumerate() {
                    *c = Complex::new(field[(base + k * stride) * dim + comp], T::zero());
                }
            }
        }
        run_batched(&plan.forward, &mut buf, n);

        let max_coeff = buf.iter().fold(T::zero(), |m, c| m.max(c.norm()));
        let rtol = T::of(8.0) * T::epsilon();
        let threshold = rtol * max_coeff.max(floor.abs() * T::of_usize(n));
        let k = &self.wavenumbers[axis];
        let nyquist = if n.is_multiple_of(2) { Some(n / 2) } else { None };
        let scale = T::one() / T::of_usize(n);
        for chunk in buf.chunks_mut(n) {
            for (m, c) in chunk.iter_mut().enumerate() {
                if c.norm() <= threshold || Some(m) == nyquist {
                    *c = Complex::new(T::zero(), T::zero());
                } else {
                    // (a + ib) · ik = −bk + iak, folded with the 1/n normalization
                    let km = k[m] * scale;
                    *c = Complex::new(-c.im * km, c.re * km);
                }
            }
        }
        run_batched(&plan.inverse, &mut buf, n);

        let mut out = vec![T::zero(); field.len()];
        for line in 0..lines {
            let base = self.line_base(axis, line);
            for comp in 0..dim {
                let chunk = &buf[(line * dim + comp) * n..(line * dim + comp + 1) * n];
                for (k, c) in chunk.iter().enumerate() {
                    out[(base + k * stride) * dim + comp] = c.re;
                }
            }
        }
        out
    }

    /// Applies (1 + |k|²)^(−power) to every component through the full
    /// periodic Fourier transform; |k| uses the coordinate wavenumbers.
    /// This is the Sobolev preconditioner used by the flows.
    pub fn sobolev_smooth(&self, field: &[T], dim: usize, power: i32) -> Vec<T> {
        let mut out = vec![T::zero(); field.len()];
        let mut data = vec![Complex::new(T::zero(), T::zero()); self.len];
        let inv_len = T::one() / T::of_usize(self.len);
        for comp in 0..dim {
            for (node, d) in data.iter_mut().enumerate() {
                *d = Complex::new(field[node * dim + comp], T::zero());
            }
            for axis in 0..self.dims() {
                self.transform_along(&mut data, axis, true);
            }
            for (node, d) in data.iter_mut().enumerate() {
                let idx = self.multi_index(node);
                let mut k2 = T::zero();
                for (axis, &i) in idx.iter().enumerate().take(self.dims()) {
                    let k = self.wavenumbers[axis][i];
                    k2 += k * k;
                }
                *d = *d * ((T::one() + k2).powi(-power) * inv_len);
            }
            for axis in 0..self.dims() {
                self.transform_along(&mut data, axis, false);
            }
            for (node, d) in data.iter().enumerate() {
                out[node * dim + comp] = d.re;
            }
        }
        out
    }

    fn transform_along(&self, data: &mut [Complex<T>], axis: usize, forward: bool) {
        let n = self.spec.sizes[axis];
        let stride = self.stride(axis);
        let plan = if forward { &self.plans[axis].forward } else { &self.plans[axis].inverse };
        let mut line_buf = vec![Complex::new(T::zero(), T::zero()); n];
        for line in 0..self.len / n {
            let base = self.line_base(axis, line);
            for (k, c) in line_buf.iter_mut().enumerate() {
                *c = data[base + k * stride];
            }
            plan.process(&mut line_buf);
            for (k, c) in line_buf.iter().enumerate() {
                data[base + k * stride] = *c;
            }
        }
    }
}

fn run_batched<T: Scalar>(plan: &Arc<dyn Fft<T>>, buf: &mut [Complex<T>], n: usize) {
    if buf.len() >= PARALLEL_THRESHOLD {
        let scratch_len = plan.get_inplace_scratch_len();
        buf.par_chunks_mut(n).for_each_init(
            || vec![Complex::new(T::zero(), T::zero()); scratch_len],
            |scratch, chunk| plan.process_with_scratch(chunk, scratch),
        );
    } else {
        plan.process(buf);
    }
}
