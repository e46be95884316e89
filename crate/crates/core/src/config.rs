//! TOML input files.
//!
//! ```toml
//! kind = "kcontact"            # or "riemannian"
//! m = 1                        # kcontact; riemannian uses `dim`
//! metric = ["1", "0", "0", "sin(x1)^2"]
//! contact_coeffs = ["0", "-cos(x1)"]
//! domain_box = [[0.2, 2.9], [-20, 20], [-20, 20]]
//! base_point = [1.5707963267948966, 0, 0]
//! loop_scale = 0.4
//! blocks = [[1], [2]]          # optional, product-check only
//! samples_csv = "samples.csv"  # optional, decompose only
//!
//! [tolerances]                 # optional
//! positive_definite = 1e-10
//! residual = 1e-12
//! contact_determinant = 1e-10
//!
//! [curve]                      # optional, transport only
//! generator = "latitude(pi/3)" # or "rectangle(1, 2, [1.5, 0], 0.4, 0.2)"
//! # or: segments = [{ coords = ["1", "t"], t_range = [0, 6.283185307179586] }]
//! ```
//!
//! `catalog = "name"` selects a built-in spec and overrides `kind`, `dim`,
//! `m`, `metric`, `contact_coeffs`, `domain_box` and `tolerances`; the
//! remaining keys still apply. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::catalog::{self, CatalogEntry, ExpectedOutcome};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::manifold::{KContactSpec, ManifoldSpec, RiemannianSpec, Thresholds};
use crate::transport::{Curve, Segment};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub positive_definite: Option<f64>,
    pub residual: Option<f64>,
    pub contact_determinant: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub coords: Vec<String>,
    pub t_range: [f64; 2],
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub generator: Option<String>,
    pub segments: Option<Vec<SegmentConfig>>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub catalog: Option<String>,
    pub kind: Option<String>,
    pub dim: Option<usize>,
    pub m: Option<usize>,
    pub metric: Option<Vec<String>>,
    pub contact_coeffs: Option<Vec<String>>,
    pub domain_box: Option<Vec<[f64; 2]>>,
    pub base_point: Option<Vec<f64>>,
    pub loop_scale: Option<f64>,
    pub blocks: Option<Vec<Vec<usize>>>,
    pub samples_csv: Option<PathBuf>,
    pub tolerances: Option<ToleranceConfig>,
    pub curve: Option<CurveConfig>,
}

/// A resolved input: spec plus the optional extras.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub entry: CatalogEntry,
    pub curve: Option<Curve>,
    /// Resolved relative to the config file's directory.
    pub samples_csv: Option<PathBuf>,
}

impl ManifoldConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg = ManifoldConfig::from_toml(&text)?;
        let mut loaded = cfg.resolve()?;
        if let Some(csv) = &loaded.samples_csv {
            if csv.is_relative() {
                let dir = path.parent().unwrap_or(Path::new("."));
                loaded.samples_csv = Some(dir.join(csv));
            }
        }
        Ok(loaded)
    }

    fn thresholds(&self) -> Thresholds {
        let d = Thresholds::default();
        let t = self.tolerances.clone().unwrap_or_default();
        Thresholds {
            positive_definite: t.positive_definite.unwrap_or(d.positive_definite),
            residual: t.residual.unwrap_or(d.residual),
            contact_determinant: t.contact_determinant.unwrap_or(d.contact_determinant),
        }
    }

    fn spec(&self) -> Result<ManifoldSpec> {
        let kind = self
            .kind
            .as_deref()
            .ok_or_else(|| Error::Config("either `catalog` or `kind` is required".into()))?;
        let metric = self
            .metric
            .as_ref()
            .ok_or_else(|| Error::Config("`metric` is required".into()))?;
        let refs: Vec<&str> = metric.iter().map(String::as_str).collect();
        let domain: Vec<(f64, f64)> = self
            .domain_box
            .as_ref()
            .ok_or_else(|| Error::Config("`domain_box` is required".into()))?
            .iter()
            .map(|b| (b[0], b[1]))
            .collect();
        let thresholds = self.thresholds();
        match kind {
            "riemannian" => {
                if self.m.is_some() || self.contact_coeffs.is_some() {
                    return Err(Error::Config("`m` and `contact_coeffs` are kcontact-only".into()));
                }
                let dim = self
                    .dim
                    .ok_or_else(|| Error::Config("riemannian specs need `dim`".into()))?;
                Ok(RiemannianSpec::from_strings(dim, &refs, domain)?
                    .with_thresholds(thresholds)
                    .into())
            }
            "kcontact" => {
                if self.dim.is_some() {
                    return Err(Error::Config("kcontact specs take `m`, not `dim`".into()));
                }
                let m = self
                    .m
                    .ok_or_else(|| Error::Config("kcontact specs need `m`".into()))?;
                let coeffs = self
                    .contact_coeffs
                    .as_ref()
                    .ok_or_else(|| Error::Config("kcontact specs need `contact_coeffs`".into()))?;
                let coeff_refs: Vec<&str> = coeffs.iter().map(String::as_str).collect();
                Ok(KContactSpec::from_strings(m, &refs, &coeff_refs, domain)?
                    .with_thresholds(thresholds)
                    .into())
            }
            other => Err(Error::Config(format!(
                "unknown kind `{other}` (expected riemannian or kcontact)"
            ))),
        }
    }

    pub fn resolve(&self) -> Result<LoadedConfig> {
        let mut entry = match &self.catalog {
            Some(name) => catalog::entry(name)?,
            None => {
                let spec = self.spec()?;
                let base_point = self.base_point.clone().unwrap_or_else(|| {
                    spec.domain().bounds().iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
                });
                CatalogEntry {
                    name: "config",
                    spec,
                    base_point,
                    loop_scale: 0.1,
                    expected: ExpectedOutcome {
                        r: 0,
                        dims: Vec::new(),
                        trivial: false,
                    },
                    blocks: None,
                }
            }
        };
        if let Some(p) = &self.base_point {
            entry.base_point = p.clone();
        }
        if let Some(s) = self.loop_scale {
            entry.loop_scale = s;
        }
        if let Some(b) = &self.blocks {
            entry.blocks = Some(b.clone());
        }
        if entry.base_point.len() != entry.spec.dim() {
            return Err(Error::Config(format!(
                "base_point has {} coordinates, chart has {}",
                entry.base_point.len(),
                entry.spec.dim()
            )));
        }
        let curve = self.curve.as_ref().map(parse_curve).transpose()?;
        Ok(LoadedConfig {
            entry,
            curve,
            samples_csv: self.samples_csv.clone(),
        })
    }
}

fn parse_curve(c: &CurveConfig) -> Result<Curve> {
    match (&c.generator, &c.segments) {
        (Some(g), None) => parse_generator(g),
        (None, Some(segs)) => {
            if segs.is_empty() {
                return Err(Error::Config("`curve.segments` is empty".into()));
            }
            let segments = segs
                .iter()
                .map(|s| {
                    let coords: Vec<&str> = s.coords.iter().map(String::as_str).collect();
                    Segment::parse(&coords, (s.t_range[0], s.t_range[1]))
                })
                .collect::<Result<Vec<_>>>()?;
            Curve::new(segments)
        }
        _ => Err(Error::Config(
            "`curve` needs exactly one of `generator` or `segments`".into(),
        )),
    }
}

fn constant(src: &str) -> Result<f64> {
    let e: Expr = parse(src.trim()).map_err(|source| Error::Parse {
        context: format!("generator argument `{}`", src.trim()),
        source,
    })?;
    e.literal_value()
        .ok_or_else(|| Error::Config(format!("generator argument `{}` is not a constant", src.trim())))
}

fn index(src: &str) -> Result<usize> {
    src.trim()
        .parse()
        .map_err(|_| Error::Config(format!("expected a coordinate index, got `{}`", src.trim())))
}

/// Splits on commas outside brackets and parentheses.
fn split_args(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Parses `latitude(phi0)` or `rectangle(i, j, [c1, .., cn], w, h)`.
pub fn parse_generator(src: &str) -> Result<Curve> {
    let src = src.trim();
    let bad = || Error::Config(format!("cannot parse curve generator `{src}`"));
    let open = src.find('(').ok_or_else(bad)?;
    if !src.ends_with(')') {
        return Err(bad());
    }
    let name = src[..open].trim();
    let args = split_args(&src[open + 1..src.len() - 1]);
    match (name, args.as_slice()) {
        ("latitude", [phi0]) => Ok(Curve::latitude(constant(phi0)?)),
        ("rectangle", [i, j, center, w, h]) => {
            let center = center.trim();
            let inner = center
                .strip_prefix('[')
                .and_then(|c| c.strip_suffix(']'))
                .ok_or_else(bad)?;
            let center = split_args(inner)
                .into_iter()
                .map(constant)
                .collect::<Result<Vec<f64>>>()?;
            Curve::rectangle(index(i)?, index(j)?, &center, constant(w)?, constant(h)?)
        }
        _ => Err(bad()),
    }
}
