//! Named verification suites, run over sampled points of one metric.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::brst::{self, FieldKind, Sectors, Stage};
use crate::cartan::{gt0_table, gt1_table, gt_vphi0, gt_vphi1, normal_connection, normality_report, section, Connection, HField, Section};
use crate::dressing::{self, dress_boost, dress_frame, Composite};
use crate::dsl::{catalog_metric, MetricField};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetMatrix, Point};
use crate::riemann::{self, Geometry};
use crate::sample::{random_h_field, random_jet, random_lorentz};
use crate::tractor::{self, calibrate_convention_map, ConventionMap};

/// Metric jet order used by every suite.
pub const GEOMETRY_ORDER: usize = 4;

pub const SUITES: &[&str] = &[
    "riemann-laws",
    "cartan-gauge",
    "dressing-k1",
    "dressing-residual",
    "tractor-equivalence",
    "tractor-weyl",
    "brst-algebra",
    "brst-nilpotency",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSource {
    Catalog { name: String, params: BTreeMap<String, String> },
    File { path: PathBuf },
}

impl MetricSource {
    /// A catalog name, or a path if the argument names an existing file.
    pub fn parse(arg: &str, params: BTreeMap<String, String>) -> Result<MetricSource> {
        let path = Path::new(arg);
        if path.is_file() {
            if !params.is_empty() {
                return Err(Error::Config("--param only applies to catalog metrics".into()));
            }
            return Ok(MetricSource::File { path: path.to_path_buf() });
        }
        Ok(MetricSource::Catalog { name: arg.to_string(), params })
    }

    pub fn load(&self) -> Result<MetricField> {
        match self {
            MetricSource::Catalog { name, params } => catalog_metric(name, params),
            MetricSource::File { path } => MetricField::from_file(path),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteConfig {
    pub metric: MetricSource,
    pub suites: Vec<String>,
    pub points: usize,
    pub seed: u64,
    /// Keyed by check id (`suite.check`) or by suite name.
    pub tol_overrides: BTreeMap<String, f64>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl SuiteConfig {
    pub fn new(metric: MetricSource) -> SuiteConfig {
        SuiteConfig {
            metric,
            suites: Vec::new(),
            points: 20,
            seed: 0,
            tol_overrides: BTreeMap::new(),
            threads: None,
        }
    }

    /// Expands `all` and rejects unknown names and bad tolerances.
    pub fn validate(&mut self) -> Result<Vec<String>> {
        let mut expanded = Vec::new();
        for s in &self.suites {
            if s == "all" {
                expanded.extend(SUITES.iter().map(|x| x.to_string()));
            } else if SUITES.contains(&s.as_str()) {
                expanded.push(s.clone());
            } else {
                return Err(Error::Config(format!("unknown suite `{s}` (known: {}, all)", SUITES.join(", "))));
            }
        }
        let mut seen = Vec::new();
        expanded.retain(|s| {
            let fresh = !seen.contains(s);
            seen.push(s.clone());
            fresh
        });
        self.suites = expanded;
        if self.points == 0 {
            return Err(Error::Config("--points must be at least 1".into()));
        }
        let mut warnings = Vec::new();
        for (k, &v) in &self.tol_overrides {
            let known = SUITES.contains(&k.as_str()) || checks().iter().any(|c| c.id() == *k);
            if !known {
                return Err(Error::Config(format!("tolerance override for unknown check `{k}`")));
            }
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("tolerance for `{k}` must be positive, got {v}")));
            }
            if v < 1e-12 {
                warnings.push(format!("tolerance {v:e} for `{k}` is below double-precision headroom"));
            }
        }
        Ok(warnings)
    }

    fn tolerance(&self, c: &Check) -> f64 {
        self.tol_overrides
            .get(&c.id())
            .or_else(|| self.tol_overrides.get(c.suite))
            .copied()
            .unwrap_or(c.tol)
    }
}

/// Result of one check over the sample.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub suite: String,
    pub check_id: String,
    pub anchor: String,
    pub metric: String,
    pub points: usize,
    /// `None` when some point failed to evaluate.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    pub worst_point: Option<Vec<f64>>,
    pub block_diff: Option<BTreeMap<String, f64>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub version: String,
    pub seed: u64,
    pub timing: Timing,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub environment: Environment,
    pub config: SuiteConfig,
    pub warnings: Vec<String>,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per check, then a summary line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        for c in &self.checks {
            let res = c.max_residual.map_or_else(|| "error".to_string(), |r| format!("{r:.3e}"));
            let _ = write!(
                out,
                "{} {:<44} {} pts={} max={} tol={:.0e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.check_id,
                c.metric,
                c.points,
                res,
                c.tolerance
            );
            if let Some(e) = &c.error {
                let _ = write!(out, " ({e})");
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "{} checks, {} passed, {} failed, seed {}, {} ms",
            self.summary.total, self.summary.passed, self.summary.failed, self.environment.seed, self.environment.timing.elapsed_ms
        );
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Text => self.to_text(),
        }
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        std::fs::write(path, self.render(format))?;
        Ok(())
    }
}

/// Residual at one point with its per-block breakdown.
struct Sample {
    residual: f64,
    blocks: BTreeMap<String, f64>,
}

impl Sample {
    fn of(blocks: &[(&str, f64)]) -> Sample {
        let residual = blocks.iter().map(|b| b.1).fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
        Sample {
            residual,
            blocks: blocks.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    fn single(name: &str, r: f64) -> Sample {
        Sample::of(&[(name, r)])
    }
}

/// Shared per-run data.
struct Ctx {
    metric: MetricField,
    eta: Vec<f64>,
    n: usize,
    map: Option<std::result::Result<ConventionMap, String>>,
}

type CheckFn = fn(&Ctx, &Point, &mut ChaCha8Rng) -> Result<Sample>;

struct Check {
    suite: &'static str,
    name: &'static str,
    anchor: &'static str,
    tol: f64,
    run: CheckFn,
}

impl Check {
    fn id(&self) -> String {
        format!("{}.{}", self.suite, self.name)
    }
}

/// Ids of every check, in run order.
pub fn check_ids() -> Vec<String> {
    checks().iter().map(Check::id).collect()
}

fn geometry(ctx: &Ctx, p: &Point) -> Result<Geometry> {
    Geometry::new(&ctx.metric, p, GEOMETRY_ORDER)
}

fn random_section(rng: &mut ChaCha8Rng, p: &Point, n: usize, order: usize) -> Section {
    section(
        random_jet(rng, p, order, 1.0),
        (0..n).map(|_| random_jet(rng, p, order, 1.0)).collect(),
        random_jet(rng, p, order, 1.0),
    )
}

fn random_z(rng: &mut ChaCha8Rng, p: &Point, order: usize) -> Jet {
    random_jet(rng, p, order, 0.3).exp()
}

/// ϖ_N gauge transformed by a random H element.
fn generic_connection(ctx: &Ctx, geo: &Geometry, p: &Point, rng: &mut ChaCha8Rng) -> Result<(Connection, Connection)> {
    let wn = normal_connection(geo);
    let gamma = random_h_field(rng, p, GEOMETRY_ORDER, &ctx.eta)?;
    let w = wn.gauge_transform_h(&gamma)?;
    Ok((wn, w))
}

fn fully_dressed(w: &Connection, phi: &Section) -> Result<(Composite, Composite, Composite)> {
    let chi = Composite::new(w.clone(), phi.clone())?;
    let (chi1, _) = dress_boost(&chi)?;
    let (chil, _) = dress_frame(&chi1)?;
    Ok((chi, chi1, chil))
}

// riemann-laws

fn metricity(ctx: &Ctx, p: &Point, _: &mut ChaCha8Rng) -> Result<Sample> {
    Ok(Sample::single("nabla_g", riemann::metricity_residual(&geometry(ctx, p)?)?))
}

fn contracted_bianchi(ctx: &Ctx, p: &Point, _: &mut ChaCha8Rng) -> Result<Sample> {
    Ok(Sample::single("div_einstein", riemann::contracted_bianchi_residual(&geometry(ctx, p)?)?))
}

fn weyl_invariance(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let z = random_z(rng, p, GEOMETRY_ORDER);
    let hat = tractor::rescaled_geometry(&geo, &z, &ctx.eta)?;
    Ok(Sample::of(&[
        ("weyl", riemann::weyl_invariance_residual(&geo, &hat)),
        ("schouten", riemann::schouten_law_residual(&geo, &hat, &z)?),
    ]))
}

fn riemann_symmetries(ctx: &Ctx, p: &Point, _: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let n = ctx.n;
    let low = |a: usize, b: usize, c: usize, d: usize| -> f64 {
        (0..n).map(|r| geo.g.get(a, r).value() * geo.riemann.get(&[r, b, c, d]).value()).sum()
    };
    let (mut pair, mut bianchi, mut first) = (0.0f64, 0.0f64, 0.0f64);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    pair = pair.max((low(a, b, c, d) - low(c, d, a, b)).abs());
                    first = first.max((low(a, b, c, d) + low(b, a, c, d)).abs());
                    let r = |x: usize, y: usize, z: usize| geo.riemann.get(&[a, x, y, z]).value();
                    bianchi = bianchi.max((r(b, c, d) + r(c, d, b) + r(d, b, c)).abs());
                }
            }
        }
    }
    Ok(Sample::of(&[("pair_symmetry", pair), ("antisymmetry", first), ("first_bianchi", bianchi)]))
}

fn vielbein(ctx: &Ctx, p: &Point, _: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let e = geo.frame.e.values();
    let eta = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(ctx.eta.clone()));
    let r = (e.transpose() * eta * e - geo.g.values()).amax();
    Ok(Sample::single("frame_metric", r))
}

// cartan-gauge

fn gauge_tables(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = Geometry::new(&ctx.metric, p, 3)?;
    let w = normal_connection(&geo);
    let gamma = random_h_field(rng, p, 3, &ctx.eta)?;
    let matrix = w.gauge_transform_h(&gamma)?;
    let mut g0 = gamma.clone();
    g0.r = vec![Jet::zero(ctx.n, 3); ctx.n];
    let table = gt1_table(&gt0_table(&w, &g0)?, &gamma.r);
    let phi = random_section(rng, p, ctx.n, 3);
    let direct = gamma.inverse()?.matmul(&phi);
    let stepwise = gt_vphi1(&gt_vphi0(&phi, &g0)?, &gamma.r, &ctx.eta);
    Ok(Sample::of(&[
        ("connection", matrix.max_abs_diff(&table)),
        ("section", direct.max_abs_diff(&stepwise)),
    ]))
}

fn curvature_covariance(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let w = normal_connection(&geo);
    let om = w.curvature()?;
    let gamma = random_h_field(rng, p, GEOMETRY_ORDER, &ctx.eta)?;
    let (gm, gi) = (gamma.matrix()?, gamma.inverse()?);
    let wg = w.gauge_transform(&gm, &gi)?;
    Ok(Sample::of(&[
        ("covariance", wg.curvature()?.max_abs_diff(&om.conjugate(&gm, &gi))),
        ("bianchi", om.bianchi_residual(&w)?),
    ]))
}

fn normality(ctx: &Ctx, p: &Point, _: &mut ChaCha8Rng) -> Result<Sample> {
    let w = normal_connection(&geometry(ctx, p)?);
    let r = normality_report(&w, &w.curvature()?)?;
    Ok(Sample::of(&[
        ("torsion", r.torsion_norm),
        ("f", r.f_norm),
        ("ricci_type_trace", r.ricci_type_trace_norm),
    ]))
}

fn algebra_membership(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let (wn, w) = generic_connection(ctx, &geo, p, rng)?;
    Ok(Sample::of(&[("normal", wn.algebra_residual()), ("transformed", w.algebra_residual())]))
}

// dressing-k1

fn k1_erasure(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let wn = normal_connection(&geo);
    let mut g1 = HField::identity(ctx.n, ctx.n, GEOMETRY_ORDER, &ctx.eta);
    g1.r = (0..ctx.n).map(|_| random_jet(rng, p, GEOMETRY_ORDER, 0.5)).collect();
    let wg = wn.gauge_transform_h(&g1)?;
    let u1 = dressing::boost_dressing(&wg)?;
    let back = dressing::dress_connection(&wg, &u1.u, &u1.u_inv)?;
    let q = (0..ctx.n).map(|a| (u1.q[a].value() + g1.r[a].value()).abs()).fold(0.0, f64::max);
    Ok(Sample::of(&[("connection", back.max_abs_diff(&wn)), ("dressing_field", q)]))
}

// dressing-residual

fn cocycle_identity(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let (_, w) = generic_connection(ctx, &geo, p, rng)?;
    let (z, zp) = (random_z(rng, p, GEOMETRY_ORDER), random_z(rng, p, GEOMETRY_ORDER));
    let einv = w.soldering().inverse()?;
    let c = |x: &Jet| dressing::weyl_cocycle_frame(x, &einv, &ctx.eta);
    let (cz, czp, czzp) = (c(&z)?, c(&zp)?, c(&(&z * &zp))?);
    let rhs = czp.matrix.matmul(&czp.zmat.inverse()?).matmul(&cz.matrix).matmul(&czp.zmat);
    let frame = czzp.matrix.max_abs_diff(&rhs);
    let ginv = geo.ginv.clone();
    let h = |x: &Jet| dressing::weyl_cocycle_holonomic(x, &ginv);
    let (bz, bzp, bzzp) = (h(&z)?, h(&zp)?, h(&(&z * &zp))?);
    let rhs = bzp.matrix.matmul(&bzp.zmat.inverse()?).matmul(&bz.matrix).matmul(&bzp.zmat);
    Ok(Sample::of(&[("frame", frame), ("holonomic", bzzp.matrix.max_abs_diff(&rhs))]))
}

fn weyl_residual(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let (_, w) = generic_connection(ctx, &geo, p, rng)?;
    let phi = random_section(rng, p, ctx.n, GEOMETRY_ORDER);
    let z = random_z(rng, p, GEOMETRY_ORDER);
    let (chi, chi1, chil) = fully_dressed(&w, &phi)?;
    let einv = chi1.w.soldering().inverse()?;
    let c = dressing::weyl_cocycle_frame(&z, &einv, &ctx.eta)?;
    let first = c.act(&chi1)?.max_abs_diff(&dressing::redress_weyl_1(&chi, &z)?);
    // the gauge-transformed connection induces a rescaled metric
    let cb = dressing::weyl_cocycle_holonomic(&z, &w.induced_metric().inverse()?)?;
    let full = cb.act(&chil)?.max_abs_diff(&dressing::redress_weyl_l(&chi, &z)?);
    Ok(Sample::of(&[("first", first), ("full", full)]))
}

fn lorentz_residual(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let (_, w) = generic_connection(ctx, &geo, p, rng)?;
    let phi = random_section(rng, p, ctx.n, GEOMETRY_ORDER);
    let (chi, chi1, _) = fully_dressed(&w, &phi)?;
    let mut s = HField::identity(ctx.n, ctx.n, GEOMETRY_ORDER, &ctx.eta);
    s.s = JetMatrix::from_values(&random_lorentz(rng, &ctx.eta, 0.5), ctx.n, GEOMETRY_ORDER);
    let direct = chi1.dress(&s.matrix()?, &s.inverse()?)?;
    let redo = dressing::redress_lorentz_1(&chi, &s)?;
    let table = dressing::table_s::connection(&chi1.w, &s).max_abs_diff(&direct.w);
    Ok(Sample::of(&[("redress", direct.max_abs_diff(&redo)), ("table", table)]))
}

fn holonomic_composite(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let wn = normal_connection(&geo);
    let phi = random_section(rng, p, ctx.n, GEOMETRY_ORDER);
    let (_, _, chil) = fully_dressed(&wn, &phi)?;
    let (mut gamma, mut schouten, mut solder) = (0.0f64, 0.0f64, 0.0f64);
    for m in 0..ctx.n {
        let b = chil.w.blocks(m);
        for r in 0..ctx.n {
            solder = solder.max((b.theta[r].value() - if r == m { 1.0 } else { 0.0 }).abs());
            for v in 0..ctx.n {
                gamma = gamma.max((b.spin.get(r, v).value() - geo.christoffel.get(&[r, m, v]).value()).abs());
            }
            schouten = schouten.max((b.p[r].value() - geo.schouten.get(m, r).value()).abs());
        }
    }
    let gmat = dressing::tractor_metric_g(&geo.g);
    Ok(Sample::of(&[
        ("soldering", solder),
        ("christoffel", gamma),
        ("schouten", schouten),
        ("metric_compatibility", dressing::metric_compatibility(&chil.w, &gmat)),
    ]))
}

fn pairing_invariance(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let phi = random_section(rng, p, ctx.n, GEOMETRY_ORDER);
    let psi = random_section(rng, p, ctx.n, GEOMETRY_ORDER);
    let z = random_z(rng, p, GEOMETRY_ORDER);
    let gmat = dressing::tractor_metric_g(&geo.g);
    let cb = dressing::weyl_cocycle_holonomic(&z, &geo.ginv)?;
    let before = dressing::pairing_g(&phi, &psi, &gmat).value();
    let gz = dressing::tractor_metric_g(&geo.g.scale_jet(&(&z * &z)));
    let after = dressing::pairing_g(&cb.inverse.matmul(&phi), &cb.inverse.matmul(&psi), &gz).value();
    // Σ-pairing under a random H element
    let gamma = random_h_field(rng, p, GEOMETRY_ORDER, &ctx.eta)?;
    let gi = gamma.inverse()?;
    let sigma = JetMatrix::from_values(&crate::cartan::sigma(&ctx.eta), ctx.n, GEOMETRY_ORDER);
    let s0 = dressing::pairing_g(&phi, &psi, &sigma).value();
    let s1 = dressing::pairing_g(&gi.matmul(&phi), &gi.matmul(&psi), &sigma).value();
    Ok(Sample::of(&[("metric_g", (before - after).abs()), ("sigma", (s0 - s1).abs())]))
}

// tractor-equivalence

fn dressed_equals_tractor(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let map = match &ctx.map {
        Some(Ok(m)) => *m,
        Some(Err(e)) => return Err(Error::Calibration(e.clone())),
        None => return Err(Error::Calibration("not calibrated".into())),
    };
    let t = tractor::random_tractor(rng, p, 2);
    let r = tractor::equivalence_at(&ctx.metric, p, &map, &t)?;
    Ok(Sample::of(&[("sigma", r[0]), ("ell", r[1]), ("rho", r[2])]))
}

fn curvature_two_ways(ctx: &Ctx, p: &Point, _: &mut ChaCha8Rng) -> Result<Sample> {
    let (_, _, d) = tractor::tractor_curvature(&geometry(ctx, p)?)?;
    Ok(Sample::single("commutator_vs_assembled", d))
}

fn tractor_metric_parallel(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let conn = tractor::tractor_connection(&geo);
    let tractor_side = conn.metric_residual(&tractor::tractor_metric(&geo.ginv));
    let phi = random_section(rng, p, ctx.n, GEOMETRY_ORDER);
    let (_, _, chil) = fully_dressed(&normal_connection(&geo), &phi)?;
    let dressed_side = dressing::metric_compatibility(&chil.w, &dressing::tractor_metric_g(&geo.g));
    Ok(Sample::of(&[("tractor", tractor_side), ("dressed", dressed_side)]))
}

// tractor-weyl

fn connection_covariance(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let z = random_z(rng, p, GEOMETRY_ORDER);
    let hat = tractor::rescaled_geometry(&geo, &z, &ctx.eta)?;
    let t = tractor::random_tractor(rng, p, 3);
    let sigma = random_jet(rng, p, GEOMETRY_ORDER, 1.0);
    Ok(Sample::of(&[
        ("connection", tractor::weyl_covariance_residual(&geo, &hat, &z, &t)?),
        ("prolongation", tractor::prolongation_covariance_residual(&geo, &hat, &z, &sigma)?),
    ]))
}

fn tractor_pairing(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let z = random_z(rng, p, 3);
    let (t, u) = (tractor::random_tractor(rng, p, 3), tractor::random_tractor(rng, p, 3));
    let before = tractor::tractor_inner(&t, &u, &geo.ginv).value();
    let ghat = geo.g.scale_jet(&(&z * &z)).inverse()?;
    let (th, uh) = (
        tractor::weyl_transform_tractor(&t, &z, &geo.ginv)?,
        tractor::weyl_transform_tractor(&u, &z, &geo.ginv)?,
    );
    let after = tractor::tractor_inner(&th, &uh, &ghat).value();
    Ok(Sample::single("pairing", (before - after).abs()))
}

fn ae_witness(ctx: &Ctx, p: &Point, _: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let one = Jet::constant(ctx.n, GEOMETRY_ORDER, 1.0);
    let pro = tractor::ae_prolong(&geo, &one)?;
    let d = tractor::tractor_derivative(&geo, &pro.tractor)?;
    let mut ell = 0.0f64;
    for (m, dm) in d.iter().enumerate() {
        for v in 0..ctx.n {
            ell = ell.max((dm.ell[v].value() - pro.residual.get(m, v).value()).abs());
        }
    }
    let w = tractor::ae_witness(&geo, &one)?;
    // parallel exactly when almost Einstein
    let agree = if w.consistent(1e-9) { 0.0 } else { w.ae_residual.max(w.parallel_residual) };
    Ok(Sample::of(&[
        ("ell_row", ell),
        ("parallel_iff_ae", agree),
    ]))
}

// brst-algebra

fn ghost_membership(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let g = brst::random_ghost(rng, p, 3, &ctx.eta, 2, Sectors::ALL)?;
    Ok(Sample::single("sigma_antisymmetry", g.algebra_residual()))
}

fn dressed_ghosts(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let w = normal_connection(&geo);
    let g = brst::random_ghost(rng, p, 3, &ctx.eta, 2, Sectors::ALL)?;
    let first = brst::dressed_ghost(&w, &g, Stage::First)?;
    let full = brst::dressed_ghost(&w, &g, Stage::Full)?;
    let boost = brst::dressed_ghost(&w, &g.restrict(Sectors::BOOST), Stage::First)?;
    Ok(Sample::of(&[
        ("first_rules", first.residual()),
        ("first_oracle", first.oracle_residual()),
        ("full_rules", full.residual()),
        ("full_oracle", full.oracle_residual()),
        ("boost_drops_out", boost.rules.max_abs()),
    ]))
}

fn dressed_invariance(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let (_, w) = generic_connection(ctx, &geo, p, rng)?;
    let phi = random_section(rng, p, ctx.n, 3);
    let g = brst::random_ghost(rng, p, 3, &ctx.eta, 2, Sectors::NO_WEYL)?;
    let var = brst::composite_variation(&w, &phi, &g, Stage::Full)?;
    let conn = var.w.iter().map(brst::GMatrix::max_abs).fold(0.0, f64::max);
    Ok(Sample::of(&[("connection", conn), ("section", var.phi.max_abs())]))
}

fn weyl_tables(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let w = normal_connection(&geo);
    let phi = random_section(rng, p, ctx.n, 3);
    let (_, _, chil) = fully_dressed(&w, &phi)?;
    let g = brst::random_ghost(rng, p, 3, &ctx.eta, 2, Sectors::WEYL)?;
    let vw = brst::dressed_ghost(&w, &g, Stage::Full)?.closed_form;
    let eps = g.eps();
    let sw = brst::s_connection(&chil.w, &vw);
    let table = brst::sw_connection_table(&chil.w, &eps)?;
    let var = brst::composite_variation(&w, &phi, &g, Stage::Full)?;
    let mut conn = 0.0f64;
    let mut chain = 0.0f64;
    for m in 0..ctx.n {
        conn = conn.max(sw[m].max_abs_diff(&table[m]));
        chain = chain.max(var.w[m].max_abs_diff(&table[m]));
    }
    let so = brst::s_curvature(&chil.omega, &vw);
    let curv = so
        .iter()
        .zip(brst::sw_curvature_table_normal(&chil.omega, &eps, &geo.ginv))
        .map(|(a, b)| a.max_abs_diff(&b))
        .fold(0.0, f64::max);
    let sp = brst::s_section(&chil.phi, &vw);
    let sect = sp.max_abs_diff(&brst::sw_section_table(&chil.phi, &eps, &geo.ginv));
    let ghost = brst::s_ghost(&vw).max_abs_diff(&brst::sw_ghost_table(&eps, &geo.ginv));
    Ok(Sample::of(&[
        ("connection", conn),
        ("connection_chain_rule", chain),
        ("curvature", curv),
        ("section", sect),
        ("section_chain_rule", var.phi.max_abs_diff(&sp)),
        ("ghost", ghost),
    ]))
}

fn finite_consistency(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let w = normal_connection(&geo);
    let phi = random_section(rng, p, ctx.n, 3);
    let ts = [1e-2, 1e-3, 1e-4];
    let eps = brst::ghost_assemble(
        Jet::constant(ctx.n, 3, 0.8),
        &nalgebra::DMatrix::zeros(ctx.n, ctx.n),
        vec![Jet::zero(ctx.n, 3); ctx.n],
        &ctx.eta,
    )?;
    let boost = brst::random_ghost(rng, p, 3, &ctx.eta, 1, Sectors::BOOST)?;
    let all = brst::random_ghost(rng, p, 3, &ctx.eta, 1, Sectors::ALL)?;
    let score = |r: brst::ConvergenceReport| -> f64 {
        if !r.identity_at_zero {
            return f64::INFINITY;
        }
        if r.residuals.iter().all(|x| *x < 1e-13) {
            return 0.0;
        }
        let decreasing = r.residuals.windows(2).all(|w| w[1] < w[0]);
        if decreasing {
            (r.slope - 1.0).abs()
        } else {
            f64::INFINITY
        }
    };
    let m = |g: &brst::GhostField| g.component_matrix(0, Sectors::ALL);
    Ok(Sample::of(&[
        ("section_weyl", score(brst::finite_consistency(&w, &phi, &m(&eps), FieldKind::Section, &ts)?)),
        ("connection_boost", score(brst::finite_consistency(&w, &phi, &m(&boost), FieldKind::Connection, &ts)?)),
        ("connection", score(brst::finite_consistency(&w, &phi, &m(&all), FieldKind::Connection, &ts)?)),
        ("curvature", score(brst::finite_consistency(&w, &phi, &m(&all), FieldKind::Curvature, &ts)?)),
    ]))
}

// brst-nilpotency

fn nilpotency(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let (_, w) = generic_connection(ctx, &geo, p, rng)?;
    let om = w.curvature()?;
    let phi = random_section(rng, p, ctx.n, 3);
    let g = brst::random_ghost(rng, p, 3, &ctx.eta, 2, Sectors::ALL)?;
    let r = brst::nilpotency_check(&w, &om, &phi, &g.matrix());
    Ok(Sample::of(&[
        ("connection", r.connection),
        ("curvature", r.curvature),
        ("section", r.section),
        ("ghost", r.ghost),
    ]))
}

fn composite_nilpotency(ctx: &Ctx, p: &Point, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let geo = geometry(ctx, p)?;
    let w = normal_connection(&geo);
    let phi = random_section(rng, p, ctx.n, 3);
    let (_, _, chil) = fully_dressed(&w, &phi)?;
    let g = brst::random_ghost(rng, p, 3, &ctx.eta, 2, Sectors::ALL)?;
    let first = brst::dressed_ghost(&w, &g, Stage::First)?.closed_form;
    let chi = Composite::new(w.clone(), phi.clone())?;
    let (chi1, _) = dress_boost(&chi)?;
    let r1 = brst::nilpotency_check(&chi1.w, &chi1.omega, &chi1.phi, &first);
    let vw = brst::dressed_ghost(&w, &g.restrict(Sectors::WEYL), Stage::Full)?.closed_form;
    let rw = brst::nilpotency_check(&chil.w, &chil.omega, &chil.phi, &vw);
    Ok(Sample::of(&[("first", r1.max()), ("full", rw.max()), ("full_section", rw.section)]))
}

fn checks() -> Vec<Check> {
    macro_rules! c {
        ($suite:literal, $name:literal, $anchor:literal, $tol:expr, $f:expr) => {
            Check { suite: $suite, name: $name, anchor: $anchor, tol: $tol, run: $f }
        };
    }
    vec![
        c!("riemann-laws", "metricity", "Levi-Civita connection is metric", 1e-11, metricity),
        c!("riemann-laws", "contracted-bianchi", "Einstein tensor is divergence free", 1e-7, contracted_bianchi),
        c!("riemann-laws", "weyl-rescaling", "Weyl tensor invariant and Schouten shifts by the Weyl law", 1e-7, weyl_invariance),
        c!("riemann-laws", "riemann-symmetries", "Riemann pair symmetry and first Bianchi identity", 1e-9, riemann_symmetries),
        c!("riemann-laws", "vielbein", "soldering frame induces the metric", 1e-10, vielbein),
        c!("cartan-gauge", "gauge-tables", "block tables of the K0 and K1 gauge actions", 1e-9, gauge_tables),
        c!("cartan-gauge", "curvature-covariance", "curvature is gauge covariant and satisfies Bianchi", 1e-8, curvature_covariance),
        c!("cartan-gauge", "normality", "normal Cartan connection: no torsion, no f, traceless Weyl block", 1e-8, normality),
        c!("cartan-gauge", "algebra-membership", "connection takes values in the conformal algebra", 1e-10, algebra_membership),
        c!("dressing-k1", "k1-erasure", "boost dressing erases the K1 gauge freedom", 1e-9, k1_erasure),
        c!("dressing-residual", "cocycle-identity", "Weyl cocycles satisfy the 1-alpha-cocycle identity", 1e-10, cocycle_identity),
        c!("dressing-residual", "weyl-residual", "residual Weyl action by cocycle equals redressing", 1e-9, weyl_residual),
        c!("dressing-residual", "lorentz-residual", "residual Lorentz action on boost-dressed fields", 1e-9, lorentz_residual),
        c!("dressing-residual", "holonomic-composite", "fully dressed normal connection carries Christoffel and Schouten", 1e-9, holonomic_composite),
        c!("dressing-residual", "pairing-invariance", "bilinear forms invariant under residual transformations", 1e-10, pairing_invariance),
        c!("tractor-equivalence", "dressed-equals-tractor", "dressed normal Cartan derivative is the tractor connection", 1e-8, dressed_equals_tractor),
        c!("tractor-equivalence", "curvature-two-ways", "tractor curvature from commutator and from Weyl and Cotton", 1e-8, curvature_two_ways),
        c!("tractor-equivalence", "metric-parallel", "tractor metric is parallel", 1e-9, tractor_metric_parallel),
        c!("tractor-weyl", "connection-covariance", "tractor connection and prolongation are Weyl covariant", 1e-9, connection_covariance),
        c!("tractor-weyl", "pairing-invariance", "tractor metric pairing is Weyl invariant", 1e-10, tractor_pairing),
        c!("tractor-weyl", "ae-witness", "parallel tractors correspond to almost Einstein scales", 1e-8, ae_witness),
        c!("brst-algebra", "ghost-membership", "ghost takes values in the conformal algebra", 1e-11, ghost_membership),
        c!("brst-algebra", "dressed-ghosts", "composite ghosts of the boost and full dressings", 1e-9, dressed_ghosts),
        c!("brst-algebra", "dressed-invariance", "fully dressed fields are boost and Lorentz invariant", 1e-9, dressed_invariance),
        c!("brst-algebra", "weyl-tables", "Weyl BRST action on the fully dressed fields", 1e-8, weyl_tables),
        c!("brst-algebra", "finite-consistency", "BRST rules linearize finite gauge transformations (|slope - 1|)", 0.1, finite_consistency),
        c!("brst-nilpotency", "generic", "s squared vanishes on all fields", 1e-8, nilpotency),
        c!("brst-nilpotency", "composite", "s squared vanishes with composite ghosts", 1e-8, composite_nilpotency),
    ]
}

/// Seed of the generator used at one point of one check.
fn point_seed(seed: u64, check: usize, point: usize) -> u64 {
    let mut x = seed ^ ((check as u64) << 32) ^ point as u64;
    // splitmix64 finalizer
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn run_check(ctx: &Ctx, check: &Check, idx: usize, points: &[Point], seed: u64, tol: f64) -> CheckRecord {
    let samples: Vec<Result<Sample>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(point_seed(seed, idx, i));
            (check.run)(ctx, p, &mut rng)
        })
        .collect();
    let mut worst: Option<(usize, &Sample)> = None;
    let mut error = None;
    for (i, s) in samples.iter().enumerate() {
        match s {
            Ok(s) => {
                let replace = match worst {
                    None => true,
                    Some((_, w)) => s.residual > w.residual || (s.residual.is_nan() && !w.residual.is_nan()),
                };
                if replace {
                    worst = Some((i, s));
                }
            }
            Err(e) if error.is_none() => error = Some((i, e.to_string())),
            Err(_) => {}
        }
    }
    let max_residual = if error.is_some() { None } else { worst.map(|w| w.1.residual) };
    let passed = max_residual.is_some_and(|r| r <= tol);
    let (worst_point, block_diff) = match (&error, worst) {
        (Some((i, _)), _) => (Some(points[*i].coords().to_vec()), Some(BTreeMap::new())),
        (None, Some((i, s))) => (Some(points[i].coords().to_vec()), Some(s.blocks.clone())),
        _ => (None, None),
    };
    CheckRecord {
        suite: check.suite.to_string(),
        check_id: check.id(),
        anchor: check.anchor.to_string(),
        metric: ctx.metric.name().to_string(),
        points: points.len(),
        max_residual,
        tolerance: tol,
        passed,
        worst_point,
        block_diff,
        error: error.map(|e| e.1),
    }
}

/// Runs the configured suites; configuration problems abort before any
/// computation, check failures never do.
pub fn run_suite(config: &SuiteConfig) -> Result<Report> {
    let start = Instant::now();
    let mut config = config.clone();
    let warnings = config.validate()?;
    let metric = config.metric.load()?;
    let threads = config.threads.or_else(|| std::env::var("TRACTORLAB_THREADS").ok().and_then(|v| v.parse().ok()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let points = metric.sample_points(config.points, config.seed);
    let n = metric.dim();
    let eta = metric.eta();
    let checks = checks();
    let records = pool.install(|| {
        let map = config.suites.iter().any(|s| s == "tractor-equivalence").then(|| {
            calibrate_convention_map(&metric, &points, config.seed)
                .map(|c| c.map)
                .map_err(|e| e.to_string())
        });
        let ctx = Ctx { metric, eta, n, map };
        let mut records = Vec::new();
        for (idx, check) in checks.iter().enumerate() {
            if config.suites.iter().any(|s| s == check.suite) {
                records.push(run_check(&ctx, check, idx, &points, config.seed, config.tolerance(check)));
            }
        }
        records
    });
    let passed = records.iter().filter(|r| r.passed).count();
    Ok(Report {
        environment: Environment {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            timing: Timing {
                elapsed_ms: start.elapsed().as_millis() as u64,
            },
        },
        summary: Summary {
            total: records.len(),
            passed,
            failed: records.len() - passed,
        },
        config,
        warnings,
        checks: records,
    })
}
