//! Exact geometry of the target space form N(c).
//!
//! Points and tangent vectors live in an ambient vector space: Euclidean
//! ℝⁿ for the flat model, Euclidean ℝⁿ⁺¹ for the sphere of radius 1/√c and
//! Minkowski ℝⁿ'¹ for the upper sheet of the hyperboloid ⟨x,x⟩_L = 1/c.
//! With that embedding the induced connection on φ⁻¹TN is the tangent
//! projection of the flat ambient derivative, so no Christoffel symbols of N
//! are ever needed.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ambient model of the space form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    Flat,
    Sphere,
    Hyperboloid,
}

/// Coordinates of a point of N, or of a vector tangent to N, in the ambient space.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct AmbientVector<T>(pub Vec<T>);

impl<T> Deref for AmbientVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for AmbientVector<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> From<Vec<T>> for AmbientVector<T> {
    fn from(v: Vec<T>) -> Self {
        AmbientVector(v)
    }
}

impl<T: Copy> From<&[T]> for AmbientVector<T> {
    fn from(v: &[T]) -> Self {
        AmbientVector(v.to_vec())
    }
}

/// The target N(c): sectional curvature, intrinsic dimension and ambient model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpaceForm<T> {
    curvature: T,
    dim: usize,
    model: Model,
}

impl<T: Scalar> SpaceForm<T> {
    /// Picks the model from the sign of `curvature`.
    pub fn new(curvature: T, dim: usize) -> Result<Self> {
        let model = if curvature > T::zero() {
            Model::Sphere
        } else if curvature < T::zero() {
            Model::Hyperboloid
        } else {
            Model::Flat
        };
        Self::with_model(model, curvature, dim)
    }

    pub fn with_model(model: Model, curvature: T, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpaceForm("dimension must be positive".into()));
        }
        if !curvature.is_finite() {
            return Err(Error::InvalidSpaceForm("curvature must be finite".into()));
        }
        let consistent = match model {
            Model::Flat => curvature == T::zero(),
            Model::Sphere => curvature > T::zero(),
            Model::Hyperboloid => curvature < T::zero(),
        };
        if !consistent {
            return Err(Error::InvalidSpaceForm(format!(
                "model {model:?} incompatible with curvature {curvature}"
            )));
        }
        Ok(SpaceForm {
            curvature,
            dim,
            model,
        })
    }

    pub fn flat(dim: usize) -> Result<Self> {
        Self::with_model(Model::Flat, T::zero(), dim)
    }

    pub fn sphere(curvature: T, dim: usize) -> Result<Self> {
        Self::with_model(Model::Sphere, curvature, dim)
    }

    pub fn hyperboloid(curvature: T, dim: usize) -> Result<Self> {
        Self::with_model(Model::Hyperboloid, curvature, dim)
    }

    #[inline]
    pub fn curvature(&self) -> T {
        self.curvature
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn model(&self) -> Model {
        self.model
    }

    #[inline]
    pub fn ambient_dim(&self) -> usize {
        match self.model {
            Model::Flat => self.dim,
            Model::Sphere | Model::Hyperboloid => self.dim + 1,
        }
    }

    /// Radius 1/√|c| of the curved models, `None` for the flat one.
    pub fn radius(&self) -> Option<T> {
        match self.model {
            Model::Flat => None,
            _ => Some(T::one() / self.curvature.abs().sqrt()),
        }
    }

    /// Model bilinear form: Euclidean, or Lorentzian ⟨u,v⟩_L = −u₀v₀ + Σ uᵢvᵢ.
    #[inline]
    pub fn form(&self, u: &[T], v: &[T]) -> T {
        let euclid = u.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        match self.model {
            Model::Hyperboloid => euclid - (u[0] * v[0] + u[0] * v[0]),
            _ => euclid,
        }
    }

    /// Distinguished base point: the origin, the north pole (R,0,…), or the
    /// hyperboloid vertex (R,0,…).
    pub fn origin(&self) -> AmbientVector<T> {
        let mut x = vec![T::zero(); self.ambient_dim()];
        if let Some(r) = self.radius() {
            x[0] = r;
        }
        AmbientVector(x)
    }

    /// Radial retraction of `x` onto the model.
    pub fn project_point(&self, x: &[T]) -> Result<AmbientVector<T>> {
        self.check_len(x)?;
        match self.model {
            Model::Flat => Ok(AmbientVector(x.to_vec())),
            Model::Sphere | Model::Hyperboloid => {
                let q = self.form(x, x);
                let ok = match self.model {
                    Model::Sphere => q > T::zero(),
                    _ => q < T::zero() && x[0] > T::zero(),
                };
                if !ok || !q.is_finite() {
                    return Err(Error::DegeneratePoint(format!(
                        "{:?} retraction undefined: quadratic form {}",
                        self.model, q
                    )));
                }
                let s = T::one() / (self.curvature.abs() * q.abs()).sqrt();
                Ok(AmbientVector(x.iter().map(|&xi| xi * s).collect()))
            }
        }
    }

    /// Orthogonal projection of `v` onto T_xN.
    pub fn project_tangent(&self, x: &[T], v: &[T]) -> AmbientVector<T> {
        let mut out = v.to_vec();
        self.project_tangent_in_place(x, &mut out);
        AmbientVector(out)
    }

    #[inline]
    pub fn project_tangent_in_place(&self, x: &[T], v: &mut [T]) {
        if self.model == Model::Flat {
            return;
        }
        let k = self.curvature * self.form(x, v);
        for (vi, &xi) in v.iter_mut().zip(x) {
            *vi -= k * xi;
        }
    }

    /// Fiber metric h on T_xN (positive definite on tangent vectors).
    #[inline]
    pub fn inner(&self, _x: &[T], u: &[T], v: &[T]) -> T {
        self.form(u, v)
    }

    /// |v| for a tangent vector, clamped at zero against roundoff in the
    /// Lorentzian form.
    #[inline]
    pub fn norm(&self, x: &[T], v: &[T]) -> T {
        self.inner(x, v, v).max(T::zero()).sqrt()
    }

    /// Closed-form exponential map, renormalized onto the model.
    pub fn exp_map(&self, x: &[T], v: &[T]) -> AmbientVector<T> {
        let mut out = vec![T::zero(); x.len()];
        self.exp_map_into(x, v, &mut out);
        AmbientVector(out)
    }

    pub fn exp_map_into(&self, x: &[T], v: &[T], out: &mut [T]) {
        let speed = self.norm(x, v);
        if speed == T::zero() {
            out.copy_from_slice(x);
            return;
        }
        match self.model {
            Model::Flat => {
                for ((o, &xi), &vi) in out.iter_mut().zip(x).zip(v) {
                    *o = xi + vi;
                }
                return;
            }
            Model::Sphere => {
                let theta = self.curvature.sqrt() * speed;
                let (a, b) = (theta.cos(), sinc(theta));
                for ((o, &xi), &vi) in out.iter_mut().zip(x).zip(v) {
                    *o = a * xi + b * vi;
                }
            }
            Model::Hyperboloid => {
                let theta = (-self.curvature).sqrt() * speed;
                let (a, b) = (theta.cosh(), sinhc(theta));
                for ((o, &xi), &vi) in out.iter_mut().zip(x).zip(v) {
                    *o = a * xi + b * vi;
                }
            }
        }
        self.renormalize(out);
    }

    /// Pulls a point that drifted by roundoff back onto the model.
    pub fn renormalize(&self, x: &mut [T]) {
        if self.model == Model::Flat {
            return;
        }
        let q = self.form(x, x);
        let valid = match self.model {
            Model::Sphere => q > T::zero(),
            _ => q < T::zero() && x[0] > T::zero(),
        };
        if valid {
            let s = T::one() / (self.curvature.abs() * q.abs()).sqrt();
            x.iter_mut().for_each(|xi| *xi *= s);
        }
    }

    /// Constant-curvature tensor R(X,Y)Z = c(h(Y,Z)X − h(X,Z)Y).
    pub fn curvature_op(&self, x: &[T], xv: &[T], yv: &[T], zv: &[T]) -> AmbientVector<T> {
        let mut out = vec![T::zero(); xv.len()];
        self.curvature_op_into(x, xv, yv, zv, &mut out);
        AmbientVector(out)
    }

    #[inline]
    pub fn curvature_op_into(&self, x: &[T], xv: &[T], yv: &[T], zv: &[T], out: &mut [T]) {
        let c = self.curvature;
        if c == T::zero() {
            out.iter_mut().for_each(|o| *o = T::zero());
            return;
        }
        let a = c * self.inner(x, yv, zv);
        let b = c * self.inner(x, xv, zv);
        for ((o, &xi), &yi) in out.iter_mut().zip(xv).zip(yv) {
            *o = a * xi - b * yi;
        }
    }

    /// Dimensionless defect of the model constraint: |c·Q(x) − 1| on the
    /// sphere, and on the hyperboloid the same defect divided by |c|·|x|²
    /// (Euclidean), since far from the vertex Q(x) is a difference of two
    /// large squares and cannot be stored more accurately than that.
    /// ∞ off the upper sheet, 0 for the flat model.
    pub fn constraint_residual(&self, x: &[T]) -> T {
        match self.model {
            Model::Flat => T::zero(),
            Model::Sphere => (self.curvature * self.form(x, x) - T::one()).abs(),
            Model::Hyperboloid => {
                if x[0] <= T::zero() {
                    T::infinity()
                } else {
                    let size = self.curvature.abs() * x.iter().fold(T::zero(), |a, &v| a + v * v);
                    (self.curvature * self.form(x, x) - T::one()).abs() / size.max(T::one())
                }
            }
        }
    }

    /// |⟨x,v⟩| in the model form scaled by √|c| (0 for the flat model).
    pub fn tangency_residual(&self, x: &[T], v: &[T]) -> T {
        match self.model {
            Model::Flat => T::zero(),
            _ => (self.form(x, v) * self.curvature.abs().sqrt()).abs(),
        }
    }

    fn check_len(&self, x: &[T]) -> Result<()> {
        if x.len() != self.ambient_dim() {
            return Err(Error::Shape(format!(
                "expected {} ambient coordinates, got {}",
                self.ambient_dim(),
                x.len()
            )));
        }
        Ok(())
    }
}

fn sinc<T: Scalar>(theta: T) -> T {
    if theta.abs() < T::of(1e-4) {
        let t2 = theta * theta;
        T::one() - t2 / T::of(6.0) + t2 * t2 / T::of(120.0)
    } else {
        theta.sin() / theta
    }
}

fn sinhc<T: Scalar>(theta: T) -> T {
    if theta.abs() < T::of(1e-4) {
        let t2 = theta * theta;
        T::one() + t2 / T::of(6.0) + t2 * t2 / T::of(120.0)
    } else {
        theta.sinh() / theta
    }
}
