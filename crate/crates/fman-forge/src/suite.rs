//! Suite execution: resolve the named objects a verification suite needs
//! from a manifest, run its checks at seeded sample points, and collect
//! the results into a deterministic, serializable run report.

use crate::compat::{
    almost_compat_residual, compat_residual_g1, compat_residual_g2, curvature_pencil_residual,
    nijenhuis_residual, riemannian_residual, transfer_endo, DEFAULT_LAMBDAS,
};
use crate::error::{Error, Result};
use crate::eventual::{certify, dualize, dual_unity_residual, inverse_residual, weak_vector_residual};
use crate::expr::jet::Scalar;
use crate::expr::{Expr, Flavor};
use crate::field::{CovectorFieldView, VectorFieldView};
use crate::fmanifold::{algebra_residual, hm_residual, FPatch, SampleOpts};
use crate::hydro::{
    commutation_defect, flow_condition_residual, parse_profiles, simulate, tsarev_residual,
    FlowSpec, GridOptions, Trajectory,
};
use crate::manifest::{Manifest, MetricEntries};
use crate::metric::{
    bianchi_residual, cheie_identity_residual, closedness_residual, coidentity_of,
    intersection_metric, invariance_residual, metric_compatibility_residual,
    total_symmetry_residual, weak_symmetry_residual, MetricField,
};
use crate::report::CheckReport;
use crate::ttstar::{
    dchk_residual, default_pencil_points, dual_dchk_suite, flat_pencil_residual, herm1_residual,
    herm1_duality_check, herm2_residual, ttstar_residuals, DiagTTData,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// The verification suites the command dispatcher understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    FManifold,
    Eventual,
    Dual,
    Compat,
    Riemannian,
    Hydro,
    Tsarev,
    TtStar,
    All,
}

impl Suite {
    pub const ALL_NAMES: [&'static str; 9] = [
        "f-manifold",
        "eventual",
        "dual",
        "compat",
        "riemannian",
        "hydro",
        "tsarev",
        "ttstar",
        "all",
    ];

    pub fn parse(name: &str) -> Result<Suite> {
        Ok(match name {
            "f-manifold" => Suite::FManifold,
            "eventual" => Suite::Eventual,
            "dual" => Suite::Dual,
            "compat" => Suite::Compat,
            "riemannian" => Suite::Riemannian,
            "hydro" => Suite::Hydro,
            "tsarev" => Suite::Tsarev,
            "ttstar" => Suite::TtStar,
            "all" => Suite::All,
            other => {
                return Err(Error::invalid(format!(
                    "unknown suite `{other}`; expected one of {}",
                    Suite::ALL_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::FManifold => "f-manifold",
            Suite::Eventual => "eventual",
            Suite::Dual => "dual",
            Suite::Compat => "compat",
            Suite::Riemannian => "riemannian",
            Suite::Hydro => "hydro",
            Suite::Tsarev => "tsarev",
            Suite::TtStar => "ttstar",
            Suite::All => "all",
        }
    }

    /// Default pass tolerance when neither the command line nor the
    /// manifest overrides it. Curvature-based suites allow for the noise
    /// floor of second-derivative assembly.
    pub fn default_tol(self) -> f64 {
        match self {
            Suite::Compat | Suite::Riemannian => 1e-7,
            Suite::Hydro | Suite::TtStar => 1e-8,
            _ => 1e-9,
        }
    }
}

/// Knobs shared by every check command.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Named vector field (eventual-identity suites); defaults to `E`,
    /// then to the first declared field.
    pub field: Option<String>,
    /// Named metric — or, for the hermitian suite, named hermitian data.
    pub metric: Option<String>,
    /// Named eventual-identity field for the twisted suites; falls back
    /// to `field`.
    pub eventual: Option<String>,
    /// Sample points per check (default 64).
    pub points: Option<usize>,
    /// Seed override; otherwise the manifest's, otherwise 42.
    pub seed: Option<u64>,
    /// Tolerance override; otherwise the manifest's, otherwise the
    /// suite default.
    pub tol: Option<f64>,
}

/// Outcome of one suite run against one manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub manifest: String,
    pub suite: String,
    pub engine_version: String,
    pub seed: u64,
    pub points: usize,
    pub checks: Vec<CheckReport>,
    pub pass: bool,
    /// Wall-clock duration; the only field exempt from byte-identical
    /// replay.
    pub wall_ms: f64,
}

impl RunReport {
    /// Fixed-width table: one line per check plus a trailing summary.
    pub fn table(&self) -> String {
        let mut out = format!(
            "manifest {}  suite {}  seed {}  pts {}  engine {}\n",
            self.manifest, self.suite, self.seed, self.points, self.engine_version
        );
        for c in &self.checks {
            out.push_str(&c.line());
            out.push('\n');
        }
        out.push_str(&format!(
            "overall: {} ({} checks, {:.1} ms)\n",
            if self.pass { "pass" } else { "FAIL" },
            self.checks.len(),
            self.wall_ms
        ));
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn sample_opts(man: &Manifest, suite: Suite, opts: &RunOptions) -> SampleOpts {
    SampleOpts {
        seed: opts.seed.or(man.seed()).unwrap_or(42),
        count: opts.points.unwrap_or(64),
        tol: opts.tol.or(man.tolerance()).unwrap_or(suite.default_tol()),
    }
}

fn renamed(mut r: CheckReport, name: impl Into<String>) -> CheckReport {
    r.name = name.into();
    r
}

/// Record a check outcome, converting an engine error into a failed
/// check that carries the error text.
fn push(
    checks: &mut Vec<CheckReport>,
    name: &str,
    patch: &str,
    so: &SampleOpts,
    outcome: Result<CheckReport>,
) {
    match outcome {
        Ok(rep) => checks.push(rep),
        Err(e) => checks.push(CheckReport::failed_with_error(
            name, patch, so.tol, so.seed, &e,
        )),
    }
}

fn field_view<S: Scalar>(patch: &Arc<FPatch>, exprs: &[Expr]) -> VectorFieldView<S> {
    VectorFieldView::from_exprs(Arc::clone(patch.chart()), exprs.to_vec())
}

fn metric_field<S: Scalar>(patch: &Arc<FPatch>, entries: &MetricEntries) -> MetricField<S> {
    match entries {
        MetricEntries::Diag(diag) => {
            MetricField::from_diag(Arc::clone(patch.chart()), diag.clone())
        }
        MetricEntries::Lower(lower) => {
            MetricField::from_lower(Arc::clone(patch.chart()), lower.clone())
        }
    }
}

fn resolve_field<'a>(
    man: &'a Manifest,
    requested: Option<&'a str>,
) -> Result<(&'a str, &'a Vec<Expr>)> {
    let name = match requested {
        Some(n) => n,
        None => man
            .default_field()
            .ok_or_else(|| Error::missing("vector field", "(none declared)"))?,
    };
    Ok((name, man.vector_field(name)?))
}

fn resolve_metric<'a>(
    man: &'a Manifest,
    requested: Option<&'a str>,
) -> Result<(&'a str, &'a MetricEntries)> {
    let name = match requested {
        Some(n) => n,
        None => man
            .default_metric()
            .ok_or_else(|| Error::missing("metric", "(none declared)"))?,
    };
    Ok((name, man.metric(name)?))
}

fn checks_f_manifold<S: Scalar>(man: &Manifest, so: &SampleOpts) -> Result<Vec<CheckReport>> {
    let m = man.patch().mult_view::<S>();
    let mut checks = Vec::new();
    push(&mut checks, "algebra", man.name(), so, algebra_residual(&m, so));
    push(&mut checks, "hertling-manin", man.name(), so, hm_residual(&m, so));
    Ok(checks)
}

fn checks_eventual<S: Scalar>(
    man: &Manifest,
    opts: &RunOptions,
    so: &SampleOpts,
) -> Result<Vec<CheckReport>> {
    let (_, exprs) = resolve_field(man, opts.field.as_deref())?;
    let e = field_view::<S>(man.patch(), exprs);
    let m = man.patch().mult_view::<S>();
    let mut checks = Vec::new();
    push(
        &mut checks,
        "eventual-characterization",
        man.name(),
        so,
        certify(&m, &e, so).map(|c| c.report().clone()),
    );
    push(&mut checks, "weak-vector", man.name(), so, weak_vector_residual(&m, &e, so));
    push(
        &mut checks,
        "algebra-inverse",
        man.name(),
        so,
        certify(&m, &e, so).and_then(|c| inverse_residual(&c, so)),
    );
    Ok(checks)
}

fn checks_dual<S: Scalar>(
    man: &Manifest,
    opts: &RunOptions,
    so: &SampleOpts,
) -> Result<Vec<CheckReport>> {
    let (_, exprs) = resolve_field(man, opts.field.as_deref())?;
    let e = field_view::<S>(man.patch(), exprs);
    let m = man.patch().mult_view::<S>();
    let mut checks = Vec::new();
    let cand = certify(&m, &e, so)?;
    checks.push(cand.report().clone());
    let d = dualize(&cand);
    push(
        &mut checks,
        "dual-algebra",
        man.name(),
        so,
        algebra_residual(d.dual(), so).map(|r| renamed(r, "dual-algebra")),
    );
    push(
        &mut checks,
        "dual-hertling-manin",
        man.name(),
        so,
        hm_residual(d.dual(), so).map(|r| renamed(r, "dual-hertling-manin")),
    );
    push(&mut checks, "dual-unity", man.name(), so, dual_unity_residual(&d, so));
    Ok(checks)
}

fn checks_compat<S: Scalar>(
    man: &Manifest,
    opts: &RunOptions,
    so: &SampleOpts,
) -> Result<Vec<CheckReport>> {
    let (_, gt_entries) = resolve_metric(man, opts.metric.as_deref())?;
    let gt = metric_field::<S>(man.patch(), gt_entries).flag_invariant();
    let ev_name = opts.eventual.as_deref().or(opts.field.as_deref());
    let (_, ev_exprs) = resolve_field(man, ev_name)?;
    let e = field_view::<S>(man.patch(), ev_exprs);
    let m = man.patch().mult_view::<S>();
    let cand = certify(&m, &e, so)?;
    let g = intersection_metric(&gt, &m, cand.inverse());
    let mut checks = Vec::new();
    push(
        &mut checks,
        "nijenhuis",
        man.name(),
        so,
        nijenhuis_residual(&transfer_endo(&g, &gt), so),
    );
    push(
        &mut checks,
        "almost-compatibility",
        man.name(),
        so,
        almost_compat_residual(&g, &gt, &DEFAULT_LAMBDAS, so),
    );
    push(
        &mut checks,
        "compatibility-gt-pairing",
        man.name(),
        so,
        compat_residual_g2(&g, &gt, so),
    );
    push(
        &mut checks,
        "compatibility-g-pairing",
        man.name(),
        so,
        compat_residual_g1(&g, &gt, so),
    );
    push(
        &mut checks,
        "curvature-pencil",
        man.name(),
        so,
        curvature_pencil_residual(&g, &gt, &DEFAULT_LAMBDAS, so),
    );
    Ok(checks)
}

fn checks_riemannian<S: Scalar>(
    man: &Manifest,
    opts: &RunOptions,
    so: &SampleOpts,
) -> Result<Vec<CheckReport>> {
    let (_, gt_entries) = resolve_metric(man, opts.metric.as_deref())?;
    let gt = metric_field::<S>(man.patch(), gt_entries).flag_invariant();
    let m = man.patch().mult_view::<S>();
    let mut checks = Vec::new();
    push(&mut checks, "nabla-g", man.name(), so, metric_compatibility_residual(&gt, so));
    push(&mut checks, "bianchi", man.name(), so, bianchi_residual(&gt, so));
    push(&mut checks, "metric-invariance", man.name(), so, invariance_residual(&gt, &m, so));
    push(&mut checks, "total-symmetry", man.name(), so, total_symmetry_residual(&m, &gt, so));
    push(
        &mut checks,
        "nabla-mult-vs-deps",
        man.name(),
        so,
        cheie_identity_residual(&m, &gt, so),
    );
    if let Ok((_, ev_exprs)) = resolve_field(man, opts.field.as_deref()) {
        let e = field_view::<S>(man.patch(), ev_exprs);
        push(
            &mut checks,
            "weak-symmetry",
            man.name(),
            so,
            weak_symmetry_residual(&m, &gt, &e, so),
        );
    }
    push(
        &mut checks,
        "coidentity-closedness",
        man.name(),
        so,
        closedness_residual(&coidentity_of(&gt, m.unity()), so),
    );
    for (name, exprs) in man.coidentities() {
        let eps = CovectorFieldView::<S>::from_exprs(Arc::clone(man.patch().chart()), exprs.clone());
        push(
            &mut checks,
            &format!("closedness-{name}"),
            man.name(),
            so,
            closedness_residual(&eps, so).map(|r| renamed(r, format!("closedness-{name}"))),
        );
    }
    push(&mut checks, "riemannian-condition", man.name(), so, riemannian_residual(&m, &gt, so));
    Ok(checks)
}

fn checks_hydro<S: Scalar>(man: &Manifest, so: &SampleOpts) -> Result<Vec<CheckReport>> {
    if man.flows().is_empty() {
        return Err(Error::missing("flow", "(none declared)"));
    }
    let m = man.patch().mult_view::<S>();
    let mut checks = Vec::new();
    for flow in man.flows() {
        let gt = metric_field::<S>(man.patch(), man.metric(&flow.metric)?).flag_invariant();
        let vel = field_view::<S>(man.patch(), man.vector_field(&flow.velocity)?);
        let name = format!("flow-condition-{}", flow.name);
        push(
            &mut checks,
            &name,
            man.name(),
            so,
            flow_condition_residual(&gt, &m, &vel, so).map(|r| renamed(r, name.clone())),
        );
    }
    Ok(checks)
}

fn checks_tsarev<S: Scalar>(
    man: &Manifest,
    opts: &RunOptions,
    so: &SampleOpts,
) -> Result<Vec<CheckReport>> {
    let mut checks = Vec::new();
    if let (Some(mname), Some(fname)) = (opts.metric.as_deref(), opts.field.as_deref()) {
        let gt = metric_field::<S>(man.patch(), man.metric(mname)?);
        let vel = field_view::<S>(man.patch(), man.vector_field(fname)?);
        push(&mut checks, "tsarev", man.name(), so, tsarev_residual(&gt, &vel, so));
        return Ok(checks);
    }
    if man.flows().is_empty() {
        return Err(Error::missing("flow", "(none declared)"));
    }
    for flow in man.flows() {
        let gt = metric_field::<S>(man.patch(), man.metric(&flow.metric)?);
        let vel = field_view::<S>(man.patch(), man.vector_field(&flow.velocity)?);
        let name = format!("tsarev-{}", flow.name);
        push(
            &mut checks,
            &name,
            man.name(),
            so,
            tsarev_residual(&gt, &vel, so).map(|r| renamed(r, name.clone())),
        );
    }
    Ok(checks)
}

fn checks_ttstar(man: &Manifest, opts: &RunOptions, so: &SampleOpts) -> Result<Vec<CheckReport>> {
    if man.flavor() != Flavor::Complex {
        return Err(Error::invalid(
            "the hermitian suite requires a complex-flavor manifest",
        ));
    }
    let h_name = match opts.metric.as_deref() {
        Some(n) => n,
        None => man
            .hermitian()
            .first()
            .map(|(n, _)| n.as_str())
            .ok_or_else(|| Error::missing("hermitian data", "(none declared)"))?,
    };
    let h = man.hermitian_entry(h_name)?.clone();
    let k = man
        .real_structures()
        .first()
        .map(|(_, v)| v.clone())
        .ok_or_else(|| Error::missing("real structure", "(none declared)"))?;
    let ev_name = opts.eventual.as_deref().or(opts.field.as_deref());
    let (_, ev_exprs) = resolve_field(man, ev_name)?;
    let ev = ev_exprs.clone();
    let data = DiagTTData::new(Arc::clone(man.patch()), h, k, Some(ev.clone()))?;
    let mut checks = Vec::new();
    match ttstar_residuals(&data, so) {
        Ok((r1, r2)) => {
            checks.push(r1);
            checks.push(r2);
        }
        Err(e) => {
            checks.push(CheckReport::failed_with_error(
                "higgs-symmetry",
                man.name(),
                so.tol,
                so.seed,
                &e,
            ));
            checks.push(CheckReport::failed_with_error(
                "curvature-commutator",
                man.name(),
                so.tol,
                so.seed,
                &e,
            ));
        }
    }
    push(&mut checks, "bilinear-compatibility", man.name(), so, dchk_residual(&data, so));
    push(
        &mut checks,
        "twisted-higgs-symmetry",
        man.name(),
        so,
        herm1_residual(&data, &ev, so),
    );
    push(
        &mut checks,
        "twisted-curvature-commutator",
        man.name(),
        so,
        herm2_residual(&data, &ev, so),
    );
    push(&mut checks, "dual-compatibility", man.name(), so, dual_dchk_suite(&data, &ev, so));
    push(
        &mut checks,
        "pencil-flatness",
        man.name(),
        so,
        flat_pencil_residual(&data, &default_pencil_points(), so),
    );
    push(
        &mut checks,
        "twisted-higgs-symmetry-dual",
        man.name(),
        so,
        herm1_duality_check(&data, &ev, so),
    );
    Ok(checks)
}

fn dispatch<S: Scalar>(
    man: &Manifest,
    suite: Suite,
    opts: &RunOptions,
    so: &SampleOpts,
) -> Result<Vec<CheckReport>> {
    match suite {
        Suite::FManifold => checks_f_manifold::<S>(man, so),
        Suite::Eventual => checks_eventual::<S>(man, opts, so),
        Suite::Dual => checks_dual::<S>(man, opts, so),
        Suite::Compat => checks_compat::<S>(man, opts, so),
        Suite::Riemannian => checks_riemannian::<S>(man, opts, so),
        Suite::Hydro => checks_hydro::<S>(man, so),
        Suite::Tsarev => checks_tsarev::<S>(man, opts, so),
        Suite::TtStar | Suite::All => unreachable!("handled by run_suite"),
    }
}

/// Which suites the manifest declares enough objects to run.
pub fn applicable_suites(man: &Manifest) -> Vec<Suite> {
    let mut suites = vec![Suite::FManifold];
    if !man.vector_fields().is_empty() {
        suites.push(Suite::Eventual);
        suites.push(Suite::Dual);
    }
    if !man.metrics().is_empty() && !man.vector_fields().is_empty() {
        suites.push(Suite::Compat);
    }
    if !man.metrics().is_empty() {
        suites.push(Suite::Riemannian);
    }
    if !man.flows().is_empty() {
        suites.push(Suite::Hydro);
        suites.push(Suite::Tsarev);
    }
    if !man.hermitian().is_empty() && !man.real_structures().is_empty() {
        suites.push(Suite::TtStar);
    }
    suites
}

/// Run one suite (or `all` applicable ones) against a manifest.
pub fn run_suite(man: &Manifest, suite: Suite, opts: &RunOptions) -> Result<RunReport> {
    let started = std::time::Instant::now();
    let mut checks = Vec::new();
    let suites = match suite {
        Suite::All => applicable_suites(man),
        single => vec![single],
    };
    let mut seed = 42;
    let mut points = 64;
    for sub in suites {
        let so = sample_opts(man, sub, opts);
        seed = so.seed;
        points = so.count;
        let batch = match sub {
            Suite::TtStar => checks_ttstar(man, opts, &so)?,
            _ => match man.flavor() {
                Flavor::Real => dispatch::<f64>(man, sub, opts, &so)?,
                Flavor::Complex => dispatch::<Complex64>(man, sub, opts, &so)?,
            },
        };
        checks.extend(batch);
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(RunReport {
        manifest: man.name().to_string(),
        suite: suite.name().to_string(),
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        points,
        checks,
        pass,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Default periodic initial profile for a simulation: each component
/// oscillates about the midpoint of its domain interval with a quarter
/// of the half-width as amplitude, so trajectories start well inside
/// the chart box.
pub fn default_profiles(man: &Manifest, length: f64) -> Result<Vec<Expr>> {
    let texts: Vec<String> = man
        .patch()
        .chart()
        .re_box()
        .iter()
        .map(|(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            let amp = 0.125 * (hi - lo);
            format!("{mid} + {amp}*sin(x)")
        })
        .collect();
    parse_profiles(&texts.iter().map(String::as_str).collect::<Vec<_>>(), length)
}

/// Outcome of `simulate`: the run report plus the trajectory of the first
/// flow for optional CSV dumping.
pub struct SimulationOutcome {
    pub report: RunReport,
    pub trajectory: Trajectory,
}

/// Certify and integrate the named flows. One flow simulates it; two
/// flows additionally measure the commutation defect
/// ‖Φ_A(T)Φ_B(T)u0 − Φ_B(T)Φ_A(T)u0‖_∞ on the same grid.
pub fn simulate_flows(
    man: &Manifest,
    flow_names: &[String],
    grid: &GridOptions,
    opts: &RunOptions,
) -> Result<SimulationOutcome> {
    if man.flavor() != Flavor::Real {
        return Err(Error::invalid("simulation requires a real-flavor manifest"));
    }
    if flow_names.is_empty() || flow_names.len() > 2 {
        return Err(Error::invalid(format!(
            "simulate takes one or two --flow names, got {}",
            flow_names.len()
        )));
    }
    let started = std::time::Instant::now();
    let so = sample_opts(man, Suite::Hydro, opts);
    let m = man.patch().mult_view::<f64>();
    let u0 = default_profiles(man, grid.length)?;
    let mut checks = Vec::new();
    let mut specs = Vec::new();
    for name in flow_names {
        let flow = man.flow(name)?;
        let gt = metric_field::<f64>(man.patch(), man.metric(&flow.metric)?).flag_invariant();
        let vel = field_view::<f64>(man.patch(), man.vector_field(&flow.velocity)?);
        let spec = FlowSpec::certified(flow.name.clone(), vel, &m, &gt, &so)?;
        let rep = spec
            .report()
            .expect("certified flow carries its report")
            .clone();
        checks.push(renamed(rep, format!("flow-condition-{}", flow.name)));
        specs.push(spec);
    }
    let trajectory = simulate(&m, &specs[0], &u0, grid)?;
    let final_state = trajectory.last();
    let steps = trajectory.states.len() - 1;
    checks.push(
        CheckReport::from_per_point(
            format!("simulate-{}", specs[0].name()),
            man.name(),
            f64::INFINITY,
            so.seed,
            vec![0.0],
        )
        .with_note("cells", format!("{}", grid.cells))
        .with_note("dt", format!("{}", grid.dt))
        .with_note("t-end", format!("{}", grid.t_end))
        .with_note("steps", format!("{steps}"))
        .with_note("final-time", format!("{:.6}", final_state.t))
        .with_note(
            "final-means",
            final_state
                .means()
                .iter()
                .map(|v| format!("{v:.6}"))
                .collect::<Vec<_>>()
                .join(", "),
        ),
    );
    if specs.len() == 2 {
        let defect = commutation_defect(&m, &specs[0], &specs[1], &u0, grid)?;
        let mut rep = CheckReport::from_per_point(
            format!("commutation-defect-{}-{}", specs[0].name(), specs[1].name()),
            man.name(),
            f64::INFINITY,
            so.seed,
            vec![defect],
        );
        rep.pass = defect.is_finite();
        rep.notes.insert("cells".into(), format!("{}", grid.cells));
        checks.push(rep);
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = RunReport {
        manifest: man.name().to_string(),
        suite: "simulate".to_string(),
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: so.seed,
        points: so.count,
        checks,
        pass,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok(SimulationOutcome { report, trajectory })
}
