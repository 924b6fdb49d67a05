#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use polyflow_core::{
    builtin_map, induced_metric, orthonormal_frame, Differentiation, DomainGrid, Example, FrameField, GridSpec,
    MapField, MetricField, SpaceForm,
};

pub type Map = MapField<f64>;
pub type Frame = FrameField<f64>;

pub struct Fixture {
    pub name: String,
    pub map: Map,
    pub frame: Frame,
}

impl Fixture {
    fn new(name: impl Into<String>, map: Map, frame: Frame) -> Self {
        Fixture { name: name.into(), map, frame }
    }
}

pub fn grid1(n: usize, length: f64, scheme: Differentiation) -> Arc<DomainGrid<f64>> {
    Arc::new(DomainGrid::new(GridSpec::circle(n, length, scheme)).unwrap())
}

pub fn grid2(n: usize, lengths: [f64; 2], scheme: Differentiation) -> Arc<DomainGrid<f64>> {
    Arc::new(DomainGrid::new(GridSpec::torus([n, n], lengths, scheme)).unwrap())
}

pub fn identity_frame(grid: &Arc<DomainGrid<f64>>) -> Frame {
    orthonormal_frame(grid, &MetricField::identity(grid)).unwrap()
}

pub fn induced_frame(map: &Map) -> Frame {
    orthonormal_frame(map.grid(), &induced_metric(map).unwrap()).unwrap()
}

pub fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn flat(dim: usize) -> SpaceForm<f64> {
    SpaceForm::flat(dim).unwrap()
}

pub fn sphere(c: f64, dim: usize) -> SpaceForm<f64> {
    SpaceForm::sphere(c, dim).unwrap()
}

pub fn hyperboloid(c: f64, dim: usize) -> SpaceForm<f64> {
    SpaceForm::hyperboloid(c, dim).unwrap()
}

pub fn example(e: Example, kv: &[(&str, f64)], grid: &Arc<DomainGrid<f64>>, space: SpaceForm<f64>) -> Map {
    builtin_map(e, &params(kv), grid, &space).unwrap()
}

/// Round circle of radius r, arc-length parametrized, with the coordinate metric.
pub fn circle(r: f64, n: usize, scheme: Differentiation) -> (Map, Frame) {
    let grid = grid1(n, 2.0 * PI * r, scheme);
    let map = example(Example::Circle, &[("r", r)], &grid, flat(2));
    (map, identity_frame(&grid))
}

pub fn perturbed_h2(amplitude: f64, k: f64, lp: f64, n: usize) -> Map {
    let grid = grid1(n, 2.0 * PI, Differentiation::Spectral);
    example(
        Example::PerturbedGeodesicH2,
        &[("amplitude", amplitude), ("k", k), ("loop", lp)],
        &grid,
        hyperboloid(-1.0, 2),
    )
}

/// Every built-in family on a grid and target it accepts.
pub fn builtin_fixtures() -> Vec<Fixture> {
    let s = Differentiation::Spectral;
    let mut out = Vec::new();

    let (m, _) = circle(1.0, 256, s);
    out.push(Fixture::new("Circle r=1", m.clone(), induced_frame(&m)));
    let g = grid1(128, PI, s);
    let m = example(Example::Circle, &[("r", 0.5)], &g, flat(3));
    out.push(Fixture::new("Circle r=0.5 in R3", m, identity_frame(&g)));

    let m = perturbed_h2(0.05, 3.0, 0.0, 256);
    let f = identity_frame(m.grid());
    out.push(Fixture::new("PerturbedGeodesicH2 default", m, f));
    let m = perturbed_h2(0.05, 3.0, 0.5, 256);
    out.push(Fixture::new("PerturbedGeodesicH2 loop", m.clone(), induced_frame(&m)));

    let g = grid1(128, 2.0 * PI, s);
    let m = example(Example::GreatCircleS2, &[], &g, sphere(1.0, 2));
    out.push(Fixture::new("GreatCircleS2", m.clone(), induced_frame(&m)));
    let m = example(Example::GreatCircleS2, &[("winding", 2.0)], &g, sphere(4.0, 3));
    out.push(Fixture::new("GreatCircleS2 winding 2 in S3(4)", m, identity_frame(&g)));

    let g = grid2(32, [2.0 * PI * 0.6, 2.0 * PI * 0.8], s);
    let radii = [("r1", 0.6), ("r2", 0.8)];
    for (name, space) in [
        ("TorusCliffordLike flat", flat(4)),
        ("TorusCliffordLike sphere", sphere(1.0, 3)),
        ("TorusCliffordLike hyperboloid", hyperboloid(-1.0, 4)),
    ] {
        let m = example(Example::TorusCliffordLike, &radii, &g, space);
        out.push(Fixture::new(name, m.clone(), induced_frame(&m)));
    }

    let g = grid2(32, [2.0 * PI, 2.0 * PI], s);
    let m = example(Example::GraphSurface, &[("amplitude", 0.2), ("k", 1.0)], &g, flat(5));
    out.push(Fixture::new("GraphSurface", m.clone(), induced_frame(&m)));
    out
}

/// Three isometric immersions per model (each carries its induced metric).
pub fn isometric_immersions() -> Vec<(&'static str, Vec<Fixture>)> {
    let s = Differentiation::Spectral;
    let g1 = grid1(256, 2.0 * PI, s);
    let tg = grid2(32, [2.0 * PI * 0.6, 2.0 * PI * 0.8], s);
    let radii = [("r1", 0.6), ("r2", 0.8)];
    let immersed = |name: &str, m: Map| {
        let f = induced_frame(&m);
        Fixture::new(name, m, f)
    };

    let flat_set = vec![
        immersed("unit circle", example(Example::Circle, &[], &g1, flat(2))),
        immersed(
            "ellipse",
            MapField::from_fn(Arc::clone(&g1), flat(2), |[t, _]| vec![2.0 * t.cos(), t.sin()]).unwrap(),
        ),
        immersed("Clifford torus in R4", example(Example::TorusCliffordLike, &radii, &tg, flat(4))),
    ];
    let sphere_set = vec![
        immersed(
            "latitude circle",
            MapField::from_fn(Arc::clone(&g1), sphere(1.0, 2), |[t, _]| vec![0.8 * t.cos(), 0.8 * t.sin(), 0.6])
                .unwrap(),
        ),
        immersed(
            "wavy great circle",
            MapField::from_fn(Arc::clone(&g1), sphere(1.0, 2), |[t, _]| {
                vec![t.cos(), t.sin(), 0.2 * (2.0 * t).sin()]
            })
            .unwrap(),
        ),
        immersed("Clifford torus in S3", example(Example::TorusCliffordLike, &radii, &tg, sphere(1.0, 3))),
    ];
    let hyper_set = vec![
        immersed(
            "geodesic circle",
            MapField::from_fn(Arc::clone(&g1), hyperboloid(-1.0, 2), |[t, _]| {
                let rho: f64 = 0.7;
                vec![rho.cosh(), rho.sinh() * t.cos(), rho.sinh() * t.sin()]
            })
            .unwrap(),
        ),
        immersed("perturbed loop", perturbed_h2(0.05, 3.0, 0.5, 256)),
        immersed("flat torus in H4", example(Example::TorusCliffordLike, &radii, &tg, hyperboloid(-1.0, 4))),
    ];
    vec![("Flat", flat_set), ("Sphere", sphere_set), ("Hyperboloid", hyper_set)]
}

/// Harmonic maps: geodesics and constant maps.
pub fn geodesics() -> Vec<Fixture> {
    let s = Differentiation::Spectral;
    let g = grid1(256, 2.0 * PI, s);
    let mut out = Vec::new();
    for (name, kv, space) in [
        ("equator of S2", vec![], sphere(1.0, 2)),
        ("double equator of S2", vec![("winding", 2.0)], sphere(1.0, 2)),
        ("equator of S3(c=4)", vec![], sphere(4.0, 3)),
    ] {
        let m = example(Example::GreatCircleS2, &kv, &g, space);
        out.push(Fixture::new(name, m, identity_frame(&g)));
    }
    let m = perturbed_h2(0.0, 3.0, 0.0, 256);
    out.push(Fixture::new("vertex of H2 (zero amplitude)", m, identity_frame(&g)));
    let m = MapField::from_fn(Arc::clone(&g), flat(3), |_| vec![1.0, -2.0, 0.5]).unwrap();
    out.push(Fixture::new("constant map into R3", m, identity_frame(&g)));
    out
}
