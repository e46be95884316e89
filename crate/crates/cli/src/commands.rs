use std::path::PathBuf;

use holonomy_lab::catalog::{self, CatalogEntry};
use holonomy_lab::config::{parse_generator, ManifoldConfig};
use holonomy_lab::connection::ChristoffelField;
use holonomy_lab::holonomy::{
    generate_loops, holonomy_algebra, invariant_decomposition, sample_holonomy, HolonomySample,
};
use holonomy_lab::manifold::{validate, ManifoldSpec, DEFAULT_VALIDATION_SAMPLES};
use holonomy_lab::report::{self, fmt_float, matrix_cells, matrix_headers, Table};
use holonomy_lab::theorem_lab::{
    de_rham_report, product_holonomy_check, verify_isomorphism, SamplingOptions, Verdict, BLOCK_TOLERANCE,
    DEFAULT_MATCH_TOLERANCE, DIAGRAM_TOLERANCE,
};
use holonomy_lab::transport::{project_to_isometry, richardson_check, transport, Curve, MIN_STEPS_PER_UNIT};
use holonomy_lab::{linalg, Error, KContactSpec, Result, RiemannianSpec};
use serde_json::Value;

use crate::output::Artifacts;
use crate::{Command, CommonArgs};

const DEFAULT_GRID: usize = 3;
const PROJECTOR_TOLERANCE: f64 = 1e-8;
const COMMUTATION_TOLERANCE: f64 = 1e-6;

struct Input {
    entry: CatalogEntry,
    curve: Option<Curve>,
    samples_csv: Option<PathBuf>,
    source: String,
}

fn load(args: &CommonArgs) -> Result<Input> {
    match (&args.catalog, &args.config) {
        (Some(name), None) => Ok(Input {
            entry: catalog::entry(name)?,
            curve: None,
            samples_csv: None,
            source: format!("catalog:{name}"),
        }),
        (None, Some(path)) => {
            let loaded = ManifoldConfig::load(path)?;
            Ok(Input {
                entry: loaded.entry,
                curve: loaded.curve,
                samples_csv: loaded.samples_csv,
                source: format!("config:{}", path.display()),
            })
        }
        _ => Err(Error::Config("exactly one of --catalog or --config is required".into())),
    }
}

fn check_options(args: &CommonArgs) -> Result<()> {
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("--{name} must be positive, got {v}")))
        }
    };
    if args.steps < MIN_STEPS_PER_UNIT {
        return Err(Error::Config(format!(
            "--steps must be at least {MIN_STEPS_PER_UNIT}, got {}",
            args.steps
        )));
    }
    positive("loops", args.loops as f64)?;
    positive("svd-tol", args.svd_tol)?;
    if let Some(s) = args.scale {
        positive("scale", s)?;
    }
    if let Some(t) = args.tol {
        positive("tol", t)?;
    }
    if let Some(n) = args.samples {
        positive("samples", n as f64)?;
    }
    Ok(())
}

fn require_seed(args: &CommonArgs, command: &str) -> Result<u64> {
    args.seed
        .ok_or_else(|| Error::Config(format!("{command} samples loops and needs an explicit --seed")))
}

fn kcontact<'a>(entry: &'a CatalogEntry, command: &str) -> Result<&'a KContactSpec> {
    match &entry.spec {
        ManifoldSpec::KContact(s) => Ok(s),
        ManifoldSpec::Riemannian(_) => Err(Error::Config(format!("{command} needs a kcontact spec"))),
    }
}

fn riemannian<'a>(entry: &'a CatalogEntry, command: &str) -> Result<&'a RiemannianSpec> {
    match &entry.spec {
        ManifoldSpec::Riemannian(s) => Ok(s),
        ManifoldSpec::KContact(_) => Err(Error::Config(format!("{command} needs a riemannian spec"))),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn matrix_lines(out: &mut Artifacts, label: &str, m: &nalgebra::DMatrix<f64>) {
    out.line(format!("{label}:"));
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:>22.15e}", m[(r, c)])).collect();
        out.line(format!("  {}", row.join(" ")));
    }
}

struct Context<'a> {
    args: &'a CommonArgs,
    input: Input,
    out: Artifacts,
}

impl<'a> Context<'a> {
    fn new(command: &'static str, args: &'a CommonArgs) -> Result<Self> {
        check_options(args)?;
        let input = load(args)?;
        let mut out = Artifacts::new(command);
        out.echo("source", &input.source);
        out.echo("kind", input.entry.spec.kind_name());
        out.echo("chart_dim", input.entry.spec.dim());
        out.echo("fiber_dim", input.entry.spec.fiber_dim());
        Ok(Context { args, input, out })
    }

    fn scale(&self) -> f64 {
        self.args.scale.unwrap_or(self.input.entry.loop_scale)
    }

    fn sampling(&mut self, command: &str) -> Result<SamplingOptions> {
        let opts = SamplingOptions {
            loops: self.args.loops,
            steps: self.args.steps,
            scale: self.scale(),
            seed: require_seed(self.args, command)?,
        };
        self.out.echo("base_point", &self.input.entry.base_point);
        self.out.echo("loops", opts.loops);
        self.out.echo("steps", opts.steps);
        self.out.echo("scale", opts.scale);
        self.out.echo("seed", opts.seed);
        Ok(opts)
    }
}

pub fn execute(command: &Command) -> Result<Artifacts> {
    let args = command.args();
    match command {
        Command::Validate(_) => validate_cmd(Context::new("validate", args)?),
        Command::Coeffs(_) => coeffs_cmd(Context::new("coeffs", args)?),
        Command::Transport(_) => transport_cmd(Context::new("transport", args)?),
        Command::Holonomy(_) => holonomy_cmd(Context::new("holonomy", args)?),
        Command::Decompose(_) => decompose_cmd(Context::new("decompose", args)?),
        Command::VerifyIsomorphism(_) => verify_cmd(Context::new("verify-isomorphism", args)?),
        Command::Derham(_) => derham_cmd(Context::new("derham", args)?),
        Command::ProductCheck(_) => product_cmd(Context::new("product-check", args)?),
    }
}

fn validate_cmd(mut cx: Context) -> Result<Artifacts> {
    let samples = cx.args.samples.unwrap_or(DEFAULT_VALIDATION_SAMPLES);
    let seed = cx.args.seed.unwrap_or(0);
    cx.out.echo("samples", samples);
    cx.out.echo("seed", seed);
    let report = validate(&cx.input.entry.spec, samples, seed);
    let n = cx.input.entry.spec.dim();
    let mut headers: Vec<String> = ["condition", "passed", "worst", "threshold", "witness_index"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    headers.extend((1..=n).map(|c| format!("x{c}")));
    let mut table = Table::new(headers);
    for c in &report.conditions {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let mut line = format!(
            "{}: {status} (worst {:.3e}, threshold {:.1e})",
            c.condition.name(),
            c.worst,
            c.threshold
        );
        if !c.passed {
            if let Some(w) = &c.witness {
                line.push_str(&format!(", witness {} at {}", c.detail, fmt_vec(w)));
            } else if !c.detail.is_empty() {
                line.push_str(&format!(", {}", c.detail));
            }
        }
        cx.out.line(line);
        let mut row = vec![
            c.condition.name().to_string(),
            c.passed.to_string(),
            fmt_float(c.worst),
            fmt_float(c.threshold),
            c.witness_index.map(|i| i.to_string()).unwrap_or_default(),
        ];
        match &c.witness {
            Some(w) => row.extend(w.iter().map(|x| fmt_float(*x))),
            None => row.extend(std::iter::repeat_n(String::new(), n)),
        }
        table.push(row);
    }
    cx.out.passed = report.passed();
    cx.out.result = to_json(&report);
    cx.out.table("validation.csv", table);
    Ok(cx.out)
}

fn grid(bounds: &[(f64, f64)], per_axis: usize) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for &(lo, hi) in bounds {
        let mut next = Vec::with_capacity(points.len() * per_axis);
        for p in &points {
            for i in 0..per_axis {
                let mut q: Vec<f64> = p.clone();
                q.push(lo + (hi - lo) * (i as f64 + 0.5) / per_axis as f64);
                next.push(q);
            }
        }
        points = next;
    }
    points
}

fn coeffs_cmd(mut cx: Context) -> Result<Artifacts> {
    let per_axis = cx.args.samples.unwrap_or(DEFAULT_GRID);
    cx.out.echo("grid_per_axis", per_axis);
    let spec = &cx.input.entry.spec;
    let field = match spec {
        ManifoldSpec::Riemannian(s) => ChristoffelField::levi_civita(s),
        ManifoldSpec::KContact(s) => ChristoffelField::adapted(s),
    };
    let points = grid(spec.domain().bounds(), per_axis);
    let evaluated = points
        .into_iter()
        .map(|p| field.coefficients_at(&p).map(|c| (p, c)))
        .collect::<Result<Vec<_>>>()?;
    let largest = evaluated
        .iter()
        .flat_map(|(_, c)| c.values().iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    cx.out.line(format!("connection: {:?}", field.kind()));
    cx.out.line(format!("points: {}", evaluated.len()));
    cx.out.line(format!("largest |coefficient|: {largest:.6e}"));
    cx.out.result = serde_json::json!({
        "connection": format!("{:?}", field.kind()),
        "points": evaluated.len(),
        "largest_abs_coefficient": largest,
    });
    cx.out.table("coefficients.csv", report::coefficients_table(&evaluated, spec.dim()));
    Ok(cx.out)
}

fn transport_cmd(mut cx: Context) -> Result<Artifacts> {
    let curve = match &cx.args.curve {
        Some(g) => parse_generator(g)?,
        None => cx
            .input
            .curve
            .clone()
            .ok_or_else(|| Error::Config("transport needs a curve (--curve or [curve] in the config)".into()))?,
    };
    let steps = cx.args.steps;
    cx.out.echo("curve", cx.args.curve.clone().unwrap_or_else(|| "config".into()));
    cx.out.echo("steps", steps);
    cx.out.echo("project", cx.args.project);
    let spec = &cx.input.entry.spec;
    let result = transport(spec, &curve, steps)?;
    let estimate = richardson_check(spec, &curve, steps)?;
    matrix_lines(&mut cx.out, "transport matrix", &result.matrix);
    cx.out.line(format!("metric drift: {:.6e}", result.metric_drift));
    cx.out.line(format!("steps used: {}", result.steps_used));
    cx.out.line(format!("Richardson estimate |M(s) - M(2s)|: {estimate:.6e}"));
    cx.out.line(format!("closure gap: {:.3e}", curve.closure_gap()));

    let g0 = spec.fiber_metric(&curve.start())?;
    let mut angle = None;
    if result.matrix.nrows() == 2 && curve.is_closed() {
        if let Some(l) = linalg::cholesky_lower(&g0) {
            let l_inv_t = l.clone().try_inverse().expect("Cholesky factor is invertible").transpose();
            let q = l.transpose() * &result.matrix * l_inv_t;
            let a = q[(1, 0)].atan2(q[(0, 0)]);
            cx.out.line(format!("rotation angle (orthonormal frame): {a:.15}"));
            angle = Some(a);
        }
    }
    let projected = if cx.args.project {
        let p = project_to_isometry(&result.matrix, &g0)
            .ok_or(Error::DegenerateTransport { det: result.matrix.determinant() })?;
        matrix_lines(&mut cx.out, "nearest isometry", &p);
        Some(p)
    } else {
        None
    };

    let k = result.matrix.nrows();
    let mut headers: Vec<String> = ["matrix", "steps_used", "metric_drift", "richardson"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    headers.extend(matrix_headers("m", k));
    let mut table = Table::new(headers);
    let mut push = |label: &str, m: &nalgebra::DMatrix<f64>| {
        let mut row = vec![
            label.to_string(),
            result.steps_used.to_string(),
            fmt_float(result.metric_drift),
            fmt_float(estimate),
        ];
        row.extend(matrix_cells(m));
        table.push(row);
    };
    push("transport", &result.matrix);
    if let Some(p) = &projected {
        push("projected", p);
    }
    cx.out.result = serde_json::json!({
        "transport": to_json(&result),
        "richardson": estimate,
        "rotation_angle": angle,
        "projected": projected.as_ref().map(|p| report::serialize_matrix(p, serde_json::value::Serializer).unwrap_or(Value::Null)),
    });
    cx.out.table("transport.csv", table);
    Ok(cx.out)
}

fn sample_at_base(cx: &mut Context, command: &str) -> Result<(holonomy_lab::holonomy::LoopFamily, HolonomySample)> {
    let opts = cx.sampling(command)?;
    let entry = &cx.input.entry;
    let family = generate_loops(&entry.spec, &entry.base_point, opts.loops, opts.scale, opts.seed)?;
    let sample = sample_holonomy(&entry.spec, &family, opts.steps)?;
    Ok((family, sample))
}

fn holonomy_cmd(mut cx: Context) -> Result<Artifacts> {
    cx.out.echo("svd_tol", cx.args.svd_tol);
    let (family, sample) = sample_at_base(&mut cx, "holonomy")?;
    cx.out.line(format!("loops: {}", sample.len()));
    cx.out.line(format!("flagged (drift > 1e-6): {}", sample.flagged.len()));
    cx.out.line(format!("max |M^T G M - G|: {:.3e}", sample.max_isometry_defect()));
    cx.out.line(format!("max |Q^T Q - I|: {:.3e}", sample.max_orthogonality_defect()));
    let algebra = holonomy_algebra(&sample, cx.args.svd_tol);
    match &algebra {
        Ok(a) => {
            cx.out.line(format!("holonomy algebra dimension: {}", a.dim()));
            cx.out.line(format!("excluded near -1: {}", a.excluded.len()));
        }
        Err(e) => cx.out.line(format!("holonomy algebra: unavailable ({e})")),
    }
    cx.out.result = serde_json::json!({
        "family": to_json(&family),
        "sample": to_json(&sample),
        "algebra": algebra.as_ref().map(to_json).unwrap_or(Value::Null),
    });
    cx.out.table("holonomy.csv", report::holonomy_table(&family, &sample));
    Ok(cx.out)
}

fn decompose_cmd(mut cx: Context) -> Result<Artifacts> {
    cx.out.echo("svd_tol", cx.args.svd_tol);
    let import = cx.args.samples_csv.clone().or_else(|| cx.input.samples_csv.clone());
    let (sample, family) = match &import {
        Some(path) => {
            let seed = require_seed(cx.args, "decompose")?;
            cx.out.echo("samples_csv", path.display().to_string());
            cx.out.echo("base_point", &cx.input.entry.base_point);
            cx.out.echo("seed", seed);
            let matrices = report::read_matrices(path)?;
            let base = cx.input.entry.base_point.clone();
            let g = cx.input.entry.spec.fiber_metric(&base)?;
            if matrices.first().is_some_and(|m| m.nrows() != g.nrows()) {
                return Err(Error::Config(format!(
                    "imported matrices are {0}x{0}, the fiber has dimension {1}",
                    matrices[0].nrows(),
                    g.nrows()
                )));
            }
            (HolonomySample::from_matrices(base, g, matrices)?, None)
        }
        None => {
            let (family, sample) = sample_at_base(&mut cx, "decompose")?;
            (sample, Some(family))
        }
    };
    let seed = require_seed(cx.args, "decompose")?;
    let d = invariant_decomposition(&sample, cx.args.svd_tol, seed)?;
    let res = d.check(&sample);
    cx.out.line(format!("samples: {}", sample.len()));
    cx.out.line(format!("r = {}, dims = {:?}", d.r, d.dims));
    cx.out.line(format!(
        "commutant dimension {}, symmetric commutant dimension {}",
        d.commutant_dim, d.symmetric_commutant_dim
    ));
    if d.r == 1 {
        cx.out.line("no orthogonal splitting found at these samples");
    }
    cx.out.line(format!(
        "projector residuals: identity {:.3e}, orthogonality {:.3e}, idempotence {:.3e}, symmetry {:.3e}",
        res.resolution_of_identity, res.orthogonality, res.idempotence, res.symmetry
    ));
    cx.out.line(format!(
        "commutation: orthonormal frame {:.3e}, frame components {:.3e}",
        res.commutation, res.frame_commutation
    ));
    cx.out.passed = res.resolution_of_identity < PROJECTOR_TOLERANCE
        && res.orthogonality < PROJECTOR_TOLERANCE
        && res.idempotence < PROJECTOR_TOLERANCE
        && res.symmetry < PROJECTOR_TOLERANCE
        && res.commutation < COMMUTATION_TOLERANCE;
    cx.out.result = serde_json::json!({
        "decomposition": to_json(&d),
        "residuals": to_json(&res),
    });
    cx.out.table("decomposition.csv", report::decomposition_table(&d));
    if let Some(f) = &family {
        cx.out.table("holonomy.csv", report::holonomy_table(f, &sample));
    }
    Ok(cx.out)
}

fn verify_cmd(mut cx: Context) -> Result<Artifacts> {
    let opts = cx.sampling("verify-isomorphism")?;
    let tol = cx.args.tol.unwrap_or(DIAGRAM_TOLERANCE);
    cx.out.echo("tol", tol);
    let entry = cx.input.entry.clone();
    let spec = kcontact(&entry, "verify-isomorphism")?;
    let r = verify_isomorphism(spec, &entry.base_point, opts)?;
    cx.out.line(format!("max |M_A - M_h|: {:.3e} (tolerance {tol:.1e})", r.max_residual));
    cx.out.line(format!("max Richardson estimate: {:.3e}", r.max_richardson));
    cx.out.line(format!(
        "residual <= 10 x Richardson estimate on every loop: {}",
        r.within_richardson_bound
    ));
    cx.out.line(format!(
        "vertical robustness (x_n = {} vs {}): {:.3e}",
        r.vertical_value,
        holonomy_lab::theorem_lab::VERTICAL_SHIFT_VALUE,
        r.vertical_residual
    ));
    cx.out.passed = r.max_residual < tol && r.within_richardson_bound;
    let mut table = Table::new(vec!["loop".into(), "residual".into(), "richardson".into()]);
    for (i, (res, est)) in r.residuals.iter().zip(&r.richardson).enumerate() {
        table.push(vec![i.to_string(), fmt_float(*res), fmt_float(*est)]);
    }
    cx.out.result = to_json(&r);
    cx.out.table("diagram.csv", table);
    Ok(cx.out)
}

fn derham_cmd(mut cx: Context) -> Result<Artifacts> {
    let opts = cx.sampling("derham")?;
    let tol = cx.args.tol.unwrap_or(DEFAULT_MATCH_TOLERANCE);
    cx.out.echo("tol", tol);
    cx.out.echo("svd_tol", cx.args.svd_tol);
    let entry = cx.input.entry.clone();
    let spec = kcontact(&entry, "derham")?;
    let r = de_rham_report(spec, &entry.base_point, opts, cx.args.svd_tol, tol)?;
    cx.out.line(format!("upstairs (adapted): r = {}, dims = {:?}", r.upstairs.r, r.upstairs.dims));
    cx.out.line(format!("downstairs (quotient): r = {}, dims = {:?}", r.downstairs.r, r.downstairs.dims));
    if r.trivial_group {
        cx.out.line("trivial group: decomposition non-unique");
    } else if r.upstairs.r == 1 && r.downstairs.r == 1 {
        cx.out.line("no orthogonal splitting found at these samples");
    }
    for ((i, j), d) in r.matching.iter().zip(&r.matched_residuals) {
        cx.out.line(format!("matched upstairs {} <-> downstairs {}: {d:.3e}", i + 1, j + 1));
    }
    cx.out.passed = r.verdict == Verdict::Pass;
    let mut matching = Table::new(vec!["upstairs".into(), "downstairs".into(), "residual".into()]);
    for ((i, j), d) in r.matching.iter().zip(&r.matched_residuals) {
        matching.push(vec![(i + 1).to_string(), (j + 1).to_string(), fmt_float(*d)]);
    }
    cx.out.table("derham_upstairs.csv", report::decomposition_table(&r.upstairs));
    cx.out.table("derham_downstairs.csv", report::decomposition_table(&r.downstairs));
    cx.out.table("derham_matching.csv", matching);
    cx.out.result = to_json(&r);
    Ok(cx.out)
}

fn product_cmd(mut cx: Context) -> Result<Artifacts> {
    let opts = cx.sampling("product-check")?;
    let tol = cx.args.tol.unwrap_or(BLOCK_TOLERANCE);
    cx.out.echo("tol", tol);
    let entry = cx.input.entry.clone();
    let spec = riemannian(&entry, "product-check")?;
    let blocks = entry
        .blocks
        .clone()
        .ok_or_else(|| Error::Partition("no block partition given (set `blocks` in the config)".into()))?;
    cx.out.echo("blocks", &blocks);
    let r = product_holonomy_check(spec, &blocks, &entry.base_point, opts)?;
    cx.out.line(format!("max off-block entry: {:.3e} (tolerance {tol:.1e})", r.max_off_block));
    cx.out.passed = r.max_off_block < tol;
    let mut table = Table::new(vec!["loop".into(), "off_block".into()]);
    for (i, v) in r.off_block.iter().enumerate() {
        table.push(vec![i.to_string(), fmt_float(*v)]);
    }
    cx.out.result = to_json(&r);
    cx.out.table("product.csv", table);
    Ok(cx.out)
}
