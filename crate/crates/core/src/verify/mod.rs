//! Numerical checks of the variational and pointwise identities.

mod audit;
mod cutoff;
mod variation;

pub use audit::{pointwise_identity_audit, scheme_tolerance, AuditCheck, AuditReport};
pub use cutoff::{caccioppoli_audit, cutoff, smoothstep, CaccioppoliMargin, CutoffField};
pub use variation::{
    first_variation, first_variation_residual, random_smooth_section, richardson, tension_variation_residual,
    vary, FirstVariation, Richardson, FIRST_VARIATION_FLOOR, RICHARDSON_BAND, TENSION_VARIATION_FLOOR,
};
