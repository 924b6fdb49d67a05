//! Discrete variational calculus for k-harmonic maps into constant-curvature
//! space forms.
//!
//! Everything is generic over the scalar type (`f32` or `f64`); the aliases
//! at the bottom of this file fix it to `f64`, which is what the audits and
//! flows are tuned for.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builtin;
pub mod domain_grid;
pub mod energy;
pub mod error;
pub mod flow;
pub mod pullback;
pub mod scalar;
pub mod space_form;
pub mod verify;

pub use builtin::{builtin_map, Example};
pub use domain_grid::{
    induced_metric, integrate, orthonormal_frame, Differentiation, DomainGrid, FrameField, GridSpec,
    MetricField, MetricMode,
};
pub use energy::{e4_lower_bound_check, energy_report, k_energy, EnergyReport};
pub use error::{Error, Result};
pub use flow::{run_flow, theorem_probe, FlowConfig, FlowKind, FlowRun, FlowTrace, MetricPolicy, Preconditioner, ProbeVerdict, Verdict};
pub use pullback::{MapField, Pullback, Section, TensionLadder};
pub use scalar::Scalar;
pub use space_form::{AmbientVector, Model, SpaceForm};
pub use verify::{AuditReport, CutoffField};

pub type SpaceForm64 = SpaceForm<f64>;
pub type DomainGrid64 = DomainGrid<f64>;
pub type GridSpec64 = GridSpec<f64>;
pub type MetricField64 = MetricField<f64>;
pub type FrameField64 = FrameField<f64>;
pub type MapField64 = MapField<f64>;
pub type Section64 = Section<f64>;

pub type SpaceForm32 = SpaceForm<f32>;
pub type DomainGrid32 = DomainGrid<f32>;
pub type MapField32 = MapField<f32>;
pub type Section32 = Section<f32>;
