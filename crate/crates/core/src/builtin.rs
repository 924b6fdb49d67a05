//! Built-in test maps.
//!
//! One-parameter-family curves read only the first grid coordinate, so on a
//! torus they are constant along the second axis (maps, not immersions).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain_grid::DomainGrid;
use crate::error::{Error, Result};
use crate::pullback::MapField;
use crate::scalar::Scalar;
use crate::space_form::{Model, SpaceForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Example {
    Circle,
    PerturbedGeodesicH2,
    GreatCircleS2,
    TorusCliffordLike,
    GraphSurface,
}

/// A named real parameter with its default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub description: &'static str,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExampleSchema {
    pub name: Example,
    pub description: &'static str,
    pub requires: &'static str,
    pub params: &'static [ParamSpec],
}

const fn param(name: &'static str, default: f64, description: &'static str) -> ParamSpec {
    ParamSpec { name, default, description }
}

const SCHEMAS: [ExampleSchema; 5] = [
    ExampleSchema {
        name: Example::Circle,
        description: "round circle s ↦ r(cos(s/r), sin(s/r), 0, …)",
        requires: "flat target, dim ≥ 2; first grid length a multiple of 2πr",
        params: &[param("r", 1.0, "radius")],
    },
    ExampleSchema {
        name: Example::PerturbedGeodesicH2,
        description: "exp_o(loop·cos θ e₁ + amplitude·sin(kθ) e₂), θ = 2πs/L; a point when both amplitudes vanish",
        requires: "hyperboloid target, dim ≥ 2",
        params: &[
            param("amplitude", 0.05, "normal perturbation"),
            param("k", 3.0, "perturbation wave number (integer ≥ 1)"),
            param("loop", 0.0, "excursion along the e₁ geodesic"),
        ],
    },
    ExampleSchema {
        name: Example::GreatCircleS2,
        description: "equator θ ↦ R(cos θ, sin θ, 0, …), θ = 2π·winding·s/L",
        requires: "sphere target, dim ≥ 2",
        params: &[param("winding", 1.0, "number of turns (integer ≥ 1)")],
    },
    ExampleSchema {
        name: Example::TorusCliffordLike,
        description: "(r₁ cos θ₁, r₁ sin θ₁, r₂ cos θ₂, r₂ sin θ₂), θᵢ = 2πxᵢ/Lᵢ, completed onto the model",
        requires: "2-D grid; flat dim ≥ 4, sphere dim ≥ 3 with r₁² + r₂² = 1/c, or hyperboloid dim ≥ 4",
        params: &[
            param("r1", std::f64::consts::FRAC_1_SQRT_2, "first radius"),
            param("r2", std::f64::consts::FRAC_1_SQRT_2, "second radius"),
        ],
    },
    ExampleSchema {
        name: Example::GraphSurface,
        description: "flat torus (Lᵢ/2π)(cos θᵢ, sin θᵢ) with fifth coordinate amplitude·sin(kθ₁)sin(kθ₂)",
        requires: "2-D grid, flat target, dim ≥ 5",
        params: &[
            param("amplitude", 0.1, "graph height"),
            param("k", 1.0, "wave number (integer ≥ 1)"),
        ],
    },
];

impl Example {
    pub const ALL: [Example; 5] = [
        Example::Circle,
        Example::PerturbedGeodesicH2,
        Example::GreatCircleS2,
        Example::TorusCliffordLike,
        Example::GraphSurface,
    ];

    pub fn schema(self) -> &'static ExampleSchema {
        SCHEMAS.iter().find(|s| s.name == self).expect("every example has a schema")
    }

    pub fn name(self) -> &'static str {
        match self {
            Example::Circle => "Circle",
            Example::PerturbedGeodesicH2 => "PerturbedGeodesicH2",
            Example::GreatCircleS2 => "GreatCircleS2",
            Example::TorusCliffordLike => "TorusCliffordLike",
            Example::GraphSurface => "GraphSurface",
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Example {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Example::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownExample(s.to_string()))
    }
}

/// Every parameter resolved against the schema; unknown keys and non-finite
/// values are rejected.
fn resolve(example: Example, params: &BTreeMap<String, f64>) -> Result<BTreeMap<&'static str, f64>> {
    let schema = example.schema();
    if let Some(key) = params.keys().find(|k| !schema.params.iter().any(|p| p.name == k.as_str())) {
        return Err(Error::BadParams(format!("{example} has no parameter `{key}`")));
    }
    schema
        .params
        .iter()
        .map(|p| {
            let v = params.get(p.name).copied().unwrap_or(p.default);
            if v.is_finite() {
                Ok((p.name, v))
            } else {
                Err(Error::BadParams(format!("{example}.{} must be finite", p.name)))
            }
        })
        .collect()
}

fn positive_integer(example: Example, name: &str, v: f64) -> Result<f64> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v)
    } else {
        Err(Error::BadParams(format!("{example}.{name} must be an integer ≥ 1, got {v}")))
    }
}

fn require(cond: bool, example: Example, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::BadParams(format!("{example} requires {what}")))
    }
}

/// Deterministic sample of the named family on `grid`.
pub fn builtin_map<T: Scalar>(
    example: Example,
    params: &BTreeMap<String, f64>,
    grid: &Arc<DomainGrid<T>>,
    space: &SpaceForm<T>,
) -> Result<MapField<T>> {
    let p = resolve(example, params)?;
    let n = space.ambient_dim();
    let model = space.model();
    let dim = space.dim();
    let two_pi = 2.0 * std::f64::consts::PI;
    let lengths: Vec<f64> = grid.lengths().iter().map(|l| l.to_f64_lossy()).collect();
    let theta = |x: [T; 2], axis: usize| two_pi * x[axis].to_f64_lossy() / lengths[axis];
    let cast = |v: Vec<f64>| v.into_iter().map(T::of).collect::<Vec<T>>();
    let grid = Arc::clone(grid);
    match example {
        Example::Circle => {
            require(model == Model::Flat && dim >= 2, example, "a flat target of dimension ≥ 2")?;
            let r = p["r"];
            require(r > 0.0, example, "r > 0")?;
            let turns = lengths[0] / (two_pi * r);
            require(
                turns >= 0.5 && (turns - turns.round()).abs() <= 1e-9 * turns.max(1.0),
                example,
                "the first grid length to be a multiple of 2πr",
            )?;
            MapField::from_fn(grid, *space, |x| {
                let s = x[0].to_f64_lossy();
                let mut v = vec![0.0; n];
                v[0] = r * (s / r).cos();
                v[1] = r * (s / r).sin();
                cast(v)
            })
        }
        Example::PerturbedGeodesicH2 => {
            require(model == Model::Hyperboloid && dim >= 2, example, "a hyperboloid target of dimension ≥ 2")?;
            let (amp, lp) = (p["amplitude"], p["loop"]);
            let k = positive_integer(example, "k", p["k"])?;
            let origin = space.origin();
            MapField::from_fn(grid, *space, |x| {
                let t = theta(x, 0);
                let mut v = vec![T::zero(); n];
                v[1] = T::of(lp * t.cos());
                v[2] = T::of(amp * (k * t).sin());
                space.exp_map(&origin, &v).0
            })
        }
        Example::GreatCircleS2 => {
            require(model == Model::Sphere && dim >= 2, example, "a sphere target of dimension ≥ 2")?;
            let w = positive_integer(example, "winding", p["winding"])?;
            let radius = space.radius().expect("spheres have a radius").to_f64_lossy();
            MapField::from_fn(grid, *space, |x| {
                let t = w * theta(x, 0);
                let mut v = vec![0.0; n];
                v[0] = radius * t.cos();
                v[1] = radius * t.sin();
                cast(v)
            })
        }
        Example::TorusCliffordLike => {
            require(grid.dims() == 2, example, "a 2-D grid")?;
            let (r1, r2) = (p["r1"], p["r2"]);
            require(r1 > 0.0 && r2 > 0.0, example, "positive radii")?;
            let c = space.curvature().to_f64_lossy();
            // index of the first spatial coordinate
            let offset = match model {
                Model::Flat => {
                    require(dim >= 4, example, "a flat target of dimension ≥ 4")?;
                    0
                }
                Model::Sphere => {
                    require(dim >= 3, example, "a sphere target of dimension ≥ 3")?;
                    let excess = (r1 * r1 + r2 * r2) * c - 1.0;
                    require(excess.abs() <= 1e-12, example, "r₁² + r₂² = 1/c on a sphere")?;
                    0
                }
                Model::Hyperboloid => {
                    require(dim >= 4, example, "a hyperboloid target of dimension ≥ 4")?;
                    1
                }
            };
            MapField::from_fn(grid, *space, |x| {
                let (t1, t2) = (theta(x, 0), theta(x, 1));
                let mut v = vec![0.0; n];
                v[offset] = r1 * t1.cos();
                v[offset + 1] = r1 * t1.sin();
                v[offset + 2] = r2 * t2.cos();
                v[offset + 3] = r2 * t2.sin();
                if model == Model::Hyperboloid {
                    v[0] = (r1 * r1 + r2 * r2 - 1.0 / c).sqrt();
                }
                cast(v)
            })
        }
        Example::GraphSurface => {
            require(grid.dims() == 2, example, "a 2-D grid")?;
            require(model == Model::Flat && dim >= 5, example, "a flat target of dimension ≥ 5")?;
            let amp = p["amplitude"];
            let k = positive_integer(example, "k", p["k"])?;
            let (a1, a2) = (lengths[0] / two_pi, lengths[1] / two_pi);
            MapField::from_fn(grid, *space, |x| {
                let (t1, t2) = (theta(x, 0), theta(x, 1));
                let mut v = vec![0.0; n];
                v[0] = a1 * t1.cos();
                v[1] = a1 * t1.sin();
                v[2] = a2 * t2.cos();
                v[3] = a2 * t2.sin();
                v[4] = amp * (k * t1).sin() * (k * t2).sin();
                cast(v)
            })
        }
    }
}
