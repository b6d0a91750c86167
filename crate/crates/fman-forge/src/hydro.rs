//! Quasilinear flows of hydrodynamic type attached to a patch: the
//! symmetry condition on velocity fields, the curvature identity its
//! solutions satisfy, the diagonal-coordinate reduction and its
//! functional freedom, twisting of flows by group elements, and a
//! periodic-grid simulator for measuring commutation defects.

use crate::error::{Error, Result};
use crate::eventual::{DualPatch, EventualCandidate};
use crate::expr::jet::Scalar;
use crate::expr::parse::parse;
use crate::expr::{Expr, Flavor};
use crate::field::{MultView, VectorFieldView};
use crate::fmanifold::SampleOpts;
use crate::metric::{intersection_metric, MetricField};
use crate::patch::Chart;
use crate::report::CheckReport;
use std::fmt::Write as _;
use std::sync::Arc;

/// A velocity field driving the quasilinear system u_t = X̃(u)∘u_x,
/// optionally carrying the symmetry-condition report it was certified
/// with.
#[derive(Clone)]
pub struct FlowSpec<S: Scalar> {
    name: String,
    velocity: VectorFieldView<S>,
    report: Option<CheckReport>,
}

impl<S: Scalar> FlowSpec<S> {
    pub fn new(name: impl Into<String>, velocity: VectorFieldView<S>) -> FlowSpec<S> {
        FlowSpec {
            name: name.into(),
            velocity,
            report: None,
        }
    }

    /// Run the symmetry condition against (g̃, ∘) and record the report.
    pub fn certified(
        name: impl Into<String>,
        velocity: VectorFieldView<S>,
        m: &MultView<S>,
        gt: &MetricField<S>,
        opts: &SampleOpts,
    ) -> Result<FlowSpec<S>> {
        let report = flow_condition_residual(gt, m, &velocity, opts)?;
        Ok(FlowSpec {
            name: name.into(),
            velocity,
            report: Some(report),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn velocity(&self) -> &VectorFieldView<S> {
        &self.velocity
    }

    pub fn report(&self) -> Option<&CheckReport> {
        self.report.as_ref()
    }

    pub fn is_certified(&self) -> bool {
        self.report.as_ref().map(|r| r.pass).unwrap_or(false)
    }
}

/// Max over basis pairs of |(∇̃_Z X̃)∘V − (∇̃_V X̃)∘Z|.
pub fn flow_condition_residual<S: Scalar>(
    gt: &MetricField<S>,
    m: &MultView<S>,
    x: &VectorFieldView<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    flow_condition_named(gt, m, x, "flow-condition", opts)
}

fn flow_condition_named<S: Scalar>(
    gt: &MetricField<S>,
    m: &MultView<S>,
    x: &VectorFieldView<S>,
    name: &str,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = m.dim();
    let points = m.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let xj = x.at(p, 1)?;
        let gamma = gt.christoffel_at(p, 0)?;
        let c = m.at(p, 0)?;
        // (∇̃_z X̃)^a = ∂_z X̃^a + Γ̃^a_{zm} X̃^m
        let nab = |z: usize, a: usize| {
            let mut acc = xj[a].partial(z);
            for mm in 0..n {
                acc = acc + gamma[(z * n + mm) * n + a].value() * xj[mm].value();
            }
            acc
        };
        let mut worst = 0.0f64;
        for z in 0..n {
            for v in (z + 1)..n {
                for k in 0..n {
                    let mut acc = S::zero();
                    for a in 0..n {
                        acc = acc + c.c(a, v, k).value() * nab(z, a);
                        acc = acc - c.c(a, z, k).value() * nab(v, a);
                    }
                    worst = worst.max(acc.abs());
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        name,
        m.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Max over basis triples of |Z∘R(V,Y)X̃ + V∘R(Y,Z)X̃ + Y∘R(Z,V)X̃|:
/// the cyclic curvature identity satisfied by solutions of the flow
/// condition even when the unrestricted curvature condition fails.
pub fn curvature_identity_residual<S: Scalar>(
    gt: &MetricField<S>,
    m: &MultView<S>,
    x: &VectorFieldView<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = m.dim();
    let points = m.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let r = gt.curvature_at(p)?;
        let xv = x.value(p)?;
        let c = m.at(p, 0)?;
        // (R(∂_i,∂_j)X̃)^l
        let rx = |i: usize, j: usize, l: usize| {
            let mut acc = S::zero();
            for k in 0..n {
                acc = acc + r[((i * n + j) * n + k) * n + l] * xv[k];
            }
            acc
        };
        let mut worst = 0.0f64;
        for z in 0..n {
            for v in 0..n {
                for y in 0..n {
                    for k in 0..n {
                        let mut acc = S::zero();
                        for l in 0..n {
                            acc = acc + c.c(z, l, k).value() * rx(v, y, l);
                            acc = acc + c.c(v, l, k).value() * rx(y, z, l);
                            acc = acc + c.c(y, l, k).value() * rx(z, v, l);
                        }
                        worst = worst.max(acc.abs());
                    }
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "curvature-identity",
        m.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Diagonal-coordinate reduction of the flow condition:
/// residual of ∂_i log√g̃_{jj} = ∂_iλ^j/(λ^i − λ^j) over i ≠ j.
/// Points where two characteristic speeds coincide are resampled; if
/// most of the domain is coincident the offending pair is reported.
pub fn tsarev_residual<S: Scalar>(
    gt: &MetricField<S>,
    velocities: &VectorFieldView<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = gt.dim();
    let raw = gt.chart().sample::<S>(opts.seed, 2 * opts.count)?;
    let mut points = Vec::with_capacity(opts.count);
    let mut coincident: Option<(usize, usize)> = None;
    for p in raw {
        let lam = velocities.value(&p)?;
        let mut ok = true;
        for i in 0..n {
            for j in (i + 1)..n {
                if (lam[i] - lam[j]).abs() < 1e-8 {
                    coincident = Some((i, j));
                    ok = false;
                }
            }
        }
        if ok {
            points.push(p);
            if points.len() == opts.count {
                break;
            }
        }
    }
    if points.len() < opts.count {
        let (i, j) = coincident.unwrap_or((0, 0));
        return Err(Error::CoincidentSpeeds { i, j });
    }

    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let gm = gt.at(p, 1)?;
        for i in 0..n {
            for j in 0..n {
                if i != j && gm.at(i, j).value().abs() > 1e-12 {
                    return Err(Error::invalid(
                        "diagonal-coordinate reduction requires a diagonal metric",
                    ));
                }
            }
        }
        let lj = velocities.at(p, 1)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let lhs = gm.at(j, j).partial(i) / (S::from_f64(2.0) * gm.at(j, j).value());
                let rhs = lj[j].partial(i) / (lj[i].value() - lj[j].value());
                worst = worst.max((lhs - rhs).abs());
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "tsarev",
        gt.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Twist a flow by a certified group element: the new velocity is X̃∘E.
pub fn twist_flow<S: Scalar>(
    m: &MultView<S>,
    flow: &FlowSpec<S>,
    cand: &EventualCandidate<S>,
) -> FlowSpec<S> {
    let velocity = m.product_view(flow.velocity(), cand.field());
    FlowSpec::new(format!("{}-twisted", flow.name()), velocity)
}

/// Check the twisted flow X = X̃∘E against the dual structure: the
/// symmetry condition with the dual multiplication and the Levi-Civita
/// connection of the intersection metric.
pub fn dual_flow_residual<S: Scalar>(
    dual: &DualPatch<S>,
    gt: &MetricField<S>,
    flow: &FlowSpec<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let g = intersection_metric(gt, dual.base(), dual.candidate().inverse());
    let twisted = twist_flow(dual.base(), flow, dual.candidate());
    flow_condition_named(&g, dual.dual(), twisted.velocity(), "dual-flow-condition", opts)
}

// ---------------------------------------------------------------------------
// Periodic-grid simulator

/// Discretization parameters for the periodic simulator.
#[derive(Clone, Copy, Debug)]
pub struct GridOptions {
    /// Number of grid cells; at least 8.
    pub cells: usize,
    /// Time step for the classical fourth-order integrator.
    pub dt: f64,
    /// Final time.
    pub t_end: f64,
    /// Period of the spatial domain.
    pub length: f64,
    /// Artificial-viscosity coefficient ν; the added term is
    /// ν·(u_{i+1} − 2u_i + u_{i−1}), i.e. ν·Δx²·u_xx.
    pub viscosity: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            cells: 64,
            dt: 1e-3,
            t_end: 0.5,
            length: std::f64::consts::TAU,
            viscosity: 0.5,
        }
    }
}

impl GridOptions {
    pub fn with_cells(mut self, cells: usize) -> Self {
        self.cells = cells;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_viscosity(mut self, viscosity: f64) -> Self {
        self.viscosity = viscosity;
        self
    }
}

/// The grid contents at one instant: cell i holds the solution n-vector
/// at x = i·Δx.
#[derive(Clone, Debug)]
pub struct GridState {
    pub t: f64,
    pub dx: f64,
    pub cells: Vec<Vec<f64>>,
}

impl GridState {
    pub fn sup_distance(&self, other: &GridState) -> f64 {
        let mut worst = 0.0f64;
        for (a, b) in self.cells.iter().zip(&other.cells) {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
        worst
    }

    /// Spatial mean of each component.
    pub fn means(&self) -> Vec<f64> {
        let n = self.cells[0].len();
        let mut out = vec![0.0; n];
        for cell in &self.cells {
            for (k, v) in cell.iter().enumerate() {
                out[k] += v;
            }
        }
        for v in &mut out {
            *v /= self.cells.len() as f64;
        }
        out
    }
}

/// The full time history of one run, one state per accepted step.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<GridState>,
}

impl Trajectory {
    pub fn last(&self) -> &GridState {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// Render as CSV with header "t,x,u1,…,un", one row per (step, cell).
    pub fn to_csv(&self) -> String {
        let n = self.states[0].cells[0].len();
        let mut out = String::from("t,x");
        for k in 1..=n {
            let _ = write!(out, ",u{k}");
        }
        out.push('\n');
        for state in &self.states {
            for (i, cell) in state.cells.iter().enumerate() {
                let _ = write!(out, "{},{}", state.t, i as f64 * state.dx);
                for v in cell {
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
        }
        out
    }
}

/// The one-coordinate chart on which periodic initial profiles live.
pub fn profile_chart(length: f64) -> Arc<Chart> {
    Chart::new_real(
        "line",
        Arc::new(vec!["x".to_string()]),
        vec![(0.0, length)],
    )
}

/// Parse initial-profile expressions in the single symbol x.
pub fn parse_profiles(texts: &[&str], length: f64) -> Result<Vec<Expr>> {
    let chart = profile_chart(length);
    texts
        .iter()
        .map(|t| parse(t, chart.coords(), Flavor::Real))
        .collect()
}

fn rhs(
    m: &MultView<f64>,
    velocity: &VectorFieldView<f64>,
    cells: &[Vec<f64>],
    dx: f64,
    nu: f64,
) -> Result<Vec<Vec<f64>>> {
    let mcells = cells.len();
    let n = m.dim();
    let mut out = Vec::with_capacity(mcells);
    for i in 0..mcells {
        let prev = &cells[(i + mcells - 1) % mcells];
        let next = &cells[(i + 1) % mcells];
        let here = &cells[i];
        let xv = velocity.value(here)?;
        let c = m.at(here, 0)?;
        let mut du = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    let ux = (next[b] - prev[b]) / (2.0 * dx);
                    acc += c.c(a, b, k).value() * xv[a] * ux;
                }
            }
            acc += nu * (next[k] - 2.0 * here[k] + prev[k]);
            du.push(acc);
        }
        out.push(du);
    }
    Ok(out)
}

/// Largest row sum of the velocity endomorphism c^k_{ab}X̃^a over the
/// grid: a bound on the characteristic speeds used for the CFL check.
fn max_speed(m: &MultView<f64>, velocity: &VectorFieldView<f64>, cells: &[Vec<f64>]) -> Result<f64> {
    let n = m.dim();
    let mut worst = 0.0f64;
    for cell in cells {
        let xv = velocity.value(cell)?;
        let c = m.at(cell, 0)?;
        for k in 0..n {
            let mut row = 0.0;
            for b in 0..n {
                let mut entry = 0.0;
                for a in 0..n {
                    entry += c.c(a, b, k).value() * xv[a];
                }
                row += entry.abs();
            }
            worst = worst.max(row);
        }
    }
    Ok(worst)
}

const CFL_LIMIT: f64 = 0.5;
const BLOWUP_LIMIT: f64 = 1e8;

fn integrate(
    m: &MultView<f64>,
    velocity: &VectorFieldView<f64>,
    start: GridState,
    grid: &GridOptions,
) -> Result<Trajectory> {
    let dx = start.dx;
    let mut states = vec![start];
    let mut step = 0usize;
    loop {
        let current = states.last().expect("non-empty");
        let remaining = grid.t_end - current.t;
        if remaining <= 1e-12 {
            break;
        }
        let dt = grid.dt.min(remaining);
        let cfl = max_speed(m, velocity, &current.cells)? * dt / dx;
        if cfl > CFL_LIMIT + 1e-12 {
            return Err(Error::CflViolation {
                step,
                cfl,
                limit: CFL_LIMIT,
            });
        }

        let u = &current.cells;
        let add = |base: &[Vec<f64>], k: &[Vec<f64>], h: f64| -> Vec<Vec<f64>> {
            base.iter()
                .zip(k)
                .map(|(b, kk)| b.iter().zip(kk).map(|(x, y)| x + h * y).collect())
                .collect()
        };
        let k1 = rhs(m, velocity, u, dx, grid.viscosity)?;
        let k2 = rhs(m, velocity, &add(u, &k1, dt / 2.0), dx, grid.viscosity)?;
        let k3 = rhs(m, velocity, &add(u, &k2, dt / 2.0), dx, grid.viscosity)?;
        let k4 = rhs(m, velocity, &add(u, &k3, dt), dx, grid.viscosity)?;
        let mut next = Vec::with_capacity(u.len());
        for i in 0..u.len() {
            let mut cell = Vec::with_capacity(u[i].len());
            for c in 0..u[i].len() {
                let v = u[i][c]
                    + dt / 6.0 * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
                if !v.is_finite() || v.abs() > BLOWUP_LIMIT {
                    return Err(Error::BlowUp { step });
                }
                cell.push(v);
            }
            next.push(cell);
        }
        let t = current.t + dt;
        states.push(GridState {
            t,
            dx,
            cells: next,
        });
        step += 1;
    }
    Ok(Trajectory { states })
}

/// Evolve u_t = X̃(u)∘u_x from expression-valued initial data on a
/// periodic grid of `grid.cells` cells.
pub fn simulate(
    m: &MultView<f64>,
    flow: &FlowSpec<f64>,
    u0: &[Expr],
    grid: &GridOptions,
) -> Result<Trajectory> {
    let n = m.dim();
    if grid.cells < 8 {
        return Err(Error::invalid(format!(
            "grid needs at least 8 cells, got {}",
            grid.cells
        )));
    }
    if u0.len() != n {
        return Err(Error::invalid(format!(
            "initial data has {} components but the patch has {n}",
            u0.len()
        )));
    }
    let dx = grid.length / grid.cells as f64;
    let mut cells = Vec::with_capacity(grid.cells);
    for i in 0..grid.cells {
        let x = i as f64 * dx;
        let mut cell = Vec::with_capacity(n);
        for e in u0 {
            cell.push(e.eval(&[x], 0)?.value());
        }
        cells.push(cell);
    }
    integrate(
        m,
        flow.velocity(),
        GridState { t: 0.0, dx, cells },
        grid,
    )
}

/// Continue a run from an existing state for another `grid.t_end` units
/// of time (the state's clock is reset so `t_end` is a duration).
pub fn simulate_from(
    m: &MultView<f64>,
    flow: &FlowSpec<f64>,
    start: &GridState,
    grid: &GridOptions,
) -> Result<Trajectory> {
    let restarted = GridState {
        t: 0.0,
        dx: start.dx,
        cells: start.cells.clone(),
    };
    integrate(m, flow.velocity(), restarted, grid)
}

/// ‖Φ_A(T)Φ_B(T)u0 − Φ_B(T)Φ_A(T)u0‖_∞ over the grid.
pub fn commutation_defect(
    m: &MultView<f64>,
    flow_a: &FlowSpec<f64>,
    flow_b: &FlowSpec<f64>,
    u0: &[Expr],
    grid: &GridOptions,
) -> Result<f64> {
    let ab = {
        let first = simulate(m, flow_b, u0, grid)?;
        let second = simulate_from(m, flow_a, first.last(), grid)?;
        second.last().clone()
    };
    let ba = {
        let first = simulate(m, flow_a, u0, grid)?;
        let second = simulate_from(m, flow_b, first.last(), grid)?;
        second.last().clone()
    };
    Ok(ab.sup_distance(&ba))
}
