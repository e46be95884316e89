//! Built-in example manifolds.
//!
//! The K-contact entries are contactizations written directly in adapted
//! coordinates (no Sasaki `Φ` tensor is involved):
//!
//! | name | m | g | contact coefficients |
//! |------|---|---|----------------------|
//! | `heisenberg` | 1 | δ | (−x2, 0) |
//! | `sasakian_sphere` | 1 | diag(1, sin²x1) | (0, −cos x1) |
//! | `product_contactization` | 2 | diag(1, sin²x1, 1, sin²x3) | (0, −cos x1, 0, −cos x3) |
//! | `torus_contactization` | 1 | δ | (0, −x1) |
//!
//! `sasakian_sphere` is the dense adapted chart of the Hopf fibration over the
//! round 2-sphere; `product_contactization` is a circle bundle over S²×S²,
//! a product of Kähler symmetric spaces with the round metric standing in
//! for Fubini–Study.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::{KContactSpec, ManifoldSpec, RiemannianSpec};

/// Keeps sphere charts away from the coordinate singularity `sin x1 = 0`.
const POLAR_MARGIN: f64 = 0.2;
const VERTICAL_RANGE: (f64, f64) = (-20.0, 20.0);
const AZIMUTH_RANGE: (f64, f64) = (-20.0, 20.0);
const FLAT_RANGE: (f64, f64) = (-5.0, 5.0);

fn polar() -> (f64, f64) {
    (POLAR_MARGIN, PI - POLAR_MARGIN)
}

/// What the holonomy pipeline should find for an entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedOutcome {
    /// Number of invariant subspaces.
    pub r: usize,
    pub dims: Vec<usize>,
    /// Holonomy is trivial, so every splitting is invariant.
    pub trivial: bool,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub spec: ManifoldSpec,
    pub base_point: Vec<f64>,
    pub loop_scale: f64,
    pub expected: ExpectedOutcome,
    /// 1-based coordinate blocks for product metrics.
    pub blocks: Option<Vec<Vec<usize>>>,
}

pub const NAMES: [&str; 8] = [
    "euclidean_plane",
    "euclidean_4",
    "round_sphere",
    "sphere_product",
    "heisenberg",
    "sasakian_sphere",
    "product_contactization",
    "torus_contactization",
];

pub const KCONTACT_NAMES: [&str; 4] = [
    "heisenberg",
    "sasakian_sphere",
    "product_contactization",
    "torus_contactization",
];

pub fn euclidean_spec(dim: usize) -> RiemannianSpec {
    let metric: Vec<String> = (0..dim * dim)
        .map(|idx| if idx / dim == idx % dim { "1" } else { "0" }.to_string())
        .collect();
    let refs: Vec<&str> = metric.iter().map(String::as_str).collect();
    RiemannianSpec::from_strings(dim, &refs, vec![FLAT_RANGE; dim]).expect("static spec")
}

pub fn round_sphere_spec() -> RiemannianSpec {
    RiemannianSpec::from_strings(2, &["1", "0", "0", "sin(x1)^2"], vec![polar(), AZIMUTH_RANGE])
        .expect("static spec")
}

pub fn sphere_product_spec() -> RiemannianSpec {
    RiemannianSpec::from_strings(
        4,
        &[
            "1", "0", "0", "0", //
            "0", "sin(x1)^2", "0", "0", //
            "0", "0", "1", "0", //
            "0", "0", "0", "sin(x3)^2",
        ],
        vec![polar(), AZIMUTH_RANGE, polar(), AZIMUTH_RANGE],
    )
    .expect("static spec")
}

pub fn heisenberg_spec() -> KContactSpec {
    KContactSpec::from_strings(
        1,
        &["1", "0", "0", "1"],
        &["-x2", "0"],
        vec![FLAT_RANGE, FLAT_RANGE, VERTICAL_RANGE],
    )
    .expect("static spec")
}

pub fn sasakian_sphere_spec() -> KContactSpec {
    KContactSpec::from_strings(
        1,
        &["1", "0", "0", "sin(x1)^2"],
        &["0", "-cos(x1)"],
        vec![polar(), AZIMUTH_RANGE, VERTICAL_RANGE],
    )
    .expect("static spec")
}

pub fn product_contactization_spec() -> KContactSpec {
    KContactSpec::from_strings(
        2,
        &[
            "1", "0", "0", "0", //
            "0", "sin(x1)^2", "0", "0", //
            "0", "0", "1", "0", //
            "0", "0", "0", "sin(x3)^2",
        ],
        &["0", "-cos(x1)", "0", "-cos(x3)"],
        vec![polar(), AZIMUTH_RANGE, polar(), AZIMUTH_RANGE, VERTICAL_RANGE],
    )
    .expect("static spec")
}

pub fn torus_contactization_spec() -> KContactSpec {
    KContactSpec::from_strings(
        1,
        &["1", "0", "0", "1"],
        &["0", "-x1"],
        vec![FLAT_RANGE, FLAT_RANGE, VERTICAL_RANGE],
    )
    .expect("static spec")
}

fn flat_outcome(k: usize) -> ExpectedOutcome {
    ExpectedOutcome {
        r: k,
        dims: vec![1; k],
        trivial: true,
    }
}

/// Looks up an entry by name.
pub fn entry(name: &str) -> Result<CatalogEntry> {
    let half = PI / 2.0;
    let e = match name {
        "euclidean_plane" => CatalogEntry {
            name: "euclidean_plane",
            spec: euclidean_spec(2).into(),
            base_point: vec![0.0, 0.0],
            loop_scale: 0.5,
            expected: flat_outcome(2),
            blocks: Some(vec![vec![1], vec![2]]),
        },
        "euclidean_4" => CatalogEntry {
            name: "euclidean_4",
            spec: euclidean_spec(4).into(),
            base_point: vec![0.0; 4],
            loop_scale: 0.5,
            expected: flat_outcome(4),
            blocks: Some(vec![vec![1, 2], vec![3, 4]]),
        },
        "round_sphere" => CatalogEntry {
            name: "round_sphere",
            spec: round_sphere_spec().into(),
            base_point: vec![half, 0.0],
            loop_scale: 0.4,
            expected: ExpectedOutcome {
                r: 1,
                dims: vec![2],
                trivial: false,
            },
            blocks: None,
        },
        "sphere_product" => CatalogEntry {
            name: "sphere_product",
            spec: sphere_product_spec().into(),
            base_point: vec![half, 0.0, half, 0.0],
            loop_scale: 0.4,
            expected: ExpectedOutcome {
                r: 2,
                dims: vec![2, 2],
                trivial: false,
            },
            blocks: Some(vec![vec![1, 2], vec![3, 4]]),
        },
        "heisenberg" => CatalogEntry {
            name: "heisenberg",
            spec: heisenberg_spec().into(),
            base_point: vec![0.0, 0.0, 0.0],
            loop_scale: 0.5,
            expected: flat_outcome(2),
            blocks: None,
        },
        "sasakian_sphere" => CatalogEntry {
            name: "sasakian_sphere",
            spec: sasakian_sphere_spec().into(),
            base_point: vec![half, 0.0, 0.0],
            loop_scale: 0.4,
            expected: ExpectedOutcome {
                r: 1,
                dims: vec![2],
                trivial: false,
            },
            blocks: None,
        },
        "product_contactization" => CatalogEntry {
            name: "product_contactization",
            spec: product_contactization_spec().into(),
            base_point: vec![half, 0.0, half, 0.0, 0.0],
            loop_scale: 0.4,
            expected: ExpectedOutcome {
                r: 2,
                dims: vec![2, 2],
                trivial: false,
            },
            blocks: None,
        },
        "torus_contactization" => CatalogEntry {
            name: "torus_contactization",
            spec: torus_contactization_spec().into(),
            base_point: vec![0.0, 0.0, 0.0],
            loop_scale: 0.5,
            expected: flat_outcome(2),
            blocks: None,
        },
        other => {
            return Err(Error::Config(format!(
                "unknown catalog entry `{other}` (known: {})",
                NAMES.join(", ")
            )))
        }
    };
    Ok(e)
}

pub fn all() -> Vec<CatalogEntry> {
    NAMES.iter().map(|n| entry(n).expect("listed name")).collect()
}
