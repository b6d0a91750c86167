//! Metric fields with jet-backed inverses, Levi-Civita connections and
//! curvature under one fixed sign convention, coidentities, and the
//! residual checks tying a metric to the multiplication: invariance, total
//! symmetry, the unconditional commutator identity against dε, and weak
//! symmetry along a distinguished field.

use crate::error::Result;
use crate::expr::jet::{Jet, Scalar};
use crate::expr::linalg::{invert_matrix_jet, JetMatrix};
use crate::expr::Expr;
use crate::field::{CovectorFieldView, MultView, VectorFieldView};
use crate::fmanifold::SampleOpts;
use crate::patch::Chart;
use crate::report::CheckReport;
use std::sync::Arc;

type MetricSupplier<S> = Arc<dyn Fn(&[S], usize) -> Result<JetMatrix<S>> + Send + Sync>;

/// Symmetric metric g_{ij} with jets up to `max_order` and a pointwise
/// inverse carried through jet arithmetic.
#[derive(Clone)]
pub struct MetricField<S: Scalar> {
    chart: Arc<Chart>,
    supplier: MetricSupplier<S>,
    max_order: usize,
    invariant: bool,
}

impl<S: Scalar> MetricField<S> {
    /// Full row-major entry matrix; entries must be symmetric.
    pub fn from_entries(chart: Arc<Chart>, entries: Vec<Expr>) -> MetricField<S> {
        let n = chart.dim();
        assert_eq!(entries.len(), n * n);
        let shared = Arc::new(entries);
        MetricField {
            chart,
            supplier: Arc::new(move |p, o| {
                let jets = shared
                    .iter()
                    .map(|e| e.eval(p, o))
                    .collect::<Result<Vec<_>>>()?;
                Ok(JetMatrix::from_rows(n, jets))
            }),
            max_order: 2,
            invariant: false,
        }
    }

    /// Lower-triangle entries (i ≥ j), row by row, mirrored to a full
    /// symmetric matrix.
    pub fn from_lower(chart: Arc<Chart>, lower: Vec<Expr>) -> MetricField<S> {
        let n = chart.dim();
        assert_eq!(lower.len(), n * (n + 1) / 2);
        let mut entries = vec![None; n * n];
        let mut it = lower.into_iter();
        for i in 0..n {
            for j in 0..=i {
                let e = it.next().unwrap();
                entries[i * n + j] = Some(e.clone());
                entries[j * n + i] = Some(e);
            }
        }
        MetricField::from_entries(chart, entries.into_iter().map(Option::unwrap).collect())
    }

    pub fn from_diag(chart: Arc<Chart>, diag: Vec<Expr>) -> MetricField<S> {
        let n = chart.dim();
        assert_eq!(diag.len(), n);
        let zero = Expr::lit(0.0, chart.coords(), chart.flavor());
        let mut entries = vec![zero; n * n];
        for (i, e) in diag.into_iter().enumerate() {
            entries[i * n + i] = e;
        }
        MetricField::from_entries(chart, entries)
    }

    pub fn from_fn(
        chart: Arc<Chart>,
        max_order: usize,
        f: impl Fn(&[S], usize) -> Result<JetMatrix<S>> + Send + Sync + 'static,
    ) -> MetricField<S> {
        MetricField {
            chart,
            supplier: Arc::new(f),
            max_order,
            invariant: false,
        }
    }

    pub fn flag_invariant(mut self) -> MetricField<S> {
        self.invariant = true;
        self
    }

    pub fn is_invariant(&self) -> bool {
        self.invariant
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn at(&self, point: &[S], order: usize) -> Result<JetMatrix<S>> {
        crate::field::check_order(order, self.max_order)?;
        (self.supplier)(point, order)
    }

    /// g^{ij} jets; reports the singularity when the metric degenerates.
    pub fn inverse_at(&self, point: &[S], order: usize) -> Result<JetMatrix<S>> {
        invert_matrix_jet(&self.at(point, order)?)
    }

    /// Γ^k_{ij} jets at the requested order (metric jets one order higher),
    /// layout (i·n + j)·n + k.
    pub fn christoffel_at(&self, point: &[S], order: usize) -> Result<Vec<Jet<S>>> {
        let n = self.dim();
        let g = self.at(point, order + 1)?;
        let ginv = self.inverse_at(point, order + 1)?;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                let mut rows = Vec::with_capacity(n);
                for l in 0..n {
                    // ∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij}
                    rows.push(
                        g.at(j, l)
                            .partial_jet(i)
                            .add(&g.at(i, l).partial_jet(j))
                            .sub(&g.at(i, j).partial_jet(l)),
                    );
                }
                for k in 0..n {
                    let mut acc = ginv.at(k, 0).mul(&rows[0]);
                    for l in 1..n {
                        acc = acc.add(&ginv.at(k, l).mul(&rows[l]));
                    }
                    out.push(acc.scale(S::from_f64(0.5)));
                }
            }
        }
        Ok(out)
    }

    /// Curvature values R^l_{kij} of R(∂_i,∂_j)∂_k = R^l_{kij}∂_l under
    /// R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}, layout ((i·n+j)·n+k)·n+l.
    pub fn curvature_at(&self, point: &[S]) -> Result<Vec<S>> {
        let n = self.dim();
        let gamma = self.christoffel_at(point, 1)?;
        let cval = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k].value();
        let cpar = |i: usize, j: usize, k: usize, s: usize| gamma[(i * n + j) * n + k].partial(s);
        let mut out = vec![S::zero(); n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = cpar(j, k, l, i) - cpar(i, k, l, j);
                        for mm in 0..n {
                            acc = acc + cval(i, mm, l) * cval(j, k, mm);
                            acc = acc - cval(j, mm, l) * cval(i, k, mm);
                        }
                        out[((i * n + j) * n + k) * n + l] = acc;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// g̃_{ij} = ε_k c^k_{ij}: the invariant metric a coidentity induces.
pub fn metric_from_coidentity<S: Scalar>(
    m: &MultView<S>,
    eps: &CovectorFieldView<S>,
) -> MetricField<S> {
    let mv = m.clone();
    let ev = eps.clone();
    let n = m.dim();
    let order = m.max_order().min(eps.max_order());
    MetricField::from_fn(Arc::clone(m.chart()), order, move |p, o| {
        let c = mv.at(p, o)?;
        let e = ev.at(p, o)?;
        Ok(JetMatrix::from_fn(n, |i, j| {
            let mut acc = c.c(i, j, 0).mul(&e[0]);
            for k in 1..n {
                acc = acc.add(&c.c(i, j, k).mul(&e[k]));
            }
            acc
        }))
    })
    .flag_invariant()
}

/// ε_i = g_{ij} e^j.
pub fn coidentity_of<S: Scalar>(
    g: &MetricField<S>,
    e: &VectorFieldView<S>,
) -> CovectorFieldView<S> {
    let gv = g.clone();
    let ev = e.clone();
    let n = g.dim();
    let order = g.max_order().min(e.max_order());
    CovectorFieldView::from_fn(Arc::clone(g.chart()), order, move |p, o| {
        let gm = gv.at(p, o)?;
        let ej = ev.at(p, o)?;
        Ok((0..n)
            .map(|i| {
                let mut acc = gm.at(i, 0).mul(&ej[0]);
                for j in 1..n {
                    acc = acc.add(&gm.at(i, j).mul(&ej[j]));
                }
                acc
            })
            .collect())
    })
}

/// Max |∂_iε_j − ∂_jε_i| over sample points: closedness of a coform.
pub fn closedness_residual<S: Scalar>(
    eps: &CovectorFieldView<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = eps.chart().dim();
    let points = eps.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let j = eps.at(p, 1)?;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in (a + 1)..n {
                worst = worst.max((j[b].partial(a) - j[a].partial(b)).abs());
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "coidentity-closedness",
        eps.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Max |g(∂_i∘∂_j, ∂_k) − g(∂_i, ∂_j∘∂_k)|.
pub fn invariance_residual<S: Scalar>(
    g: &MetricField<S>,
    m: &MultView<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = g.dim();
    let points = g.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let gm = g.at(p, 0)?;
        let c = m.at(p, 0)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = S::zero();
                    for b in 0..n {
                        acc = acc + c.c(i, j, b).value() * gm.at(b, k).value();
                        acc = acc - c.c(j, k, b).value() * gm.at(i, b).value();
                    }
                    worst = worst.max(acc.abs());
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "metric-invariance",
        g.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// g(X, Y) = g̃(E^{-1}∘X, Y): g_{ij} = (E^{-1})^m c^p_{mi} g̃_{pj},
/// computation-backed through the algebra inverse of E.
pub fn intersection_metric<S: Scalar>(
    gt: &MetricField<S>,
    m: &MultView<S>,
    e_inverse: &VectorFieldView<S>,
) -> MetricField<S> {
    let gv = gt.clone();
    let mv = m.clone();
    let iv = e_inverse.clone();
    let n = gt.dim();
    let order = gt
        .max_order()
        .min(m.max_order())
        .min(e_inverse.max_order());
    MetricField::from_fn(Arc::clone(gt.chart()), order, move |p, o| {
        let gm = gv.at(p, o)?;
        let c = mv.at(p, o)?;
        let inv = iv.at(p, o)?;
        // (E^{-1}∘)^p_i = c^p_{mi}(E^{-1})^m as jets.
        let mut endo = Vec::with_capacity(n * n);
        for i in 0..n {
            for pp in 0..n {
                let mut acc = c.c(0, i, pp).mul(&inv[0]);
                for mm in 1..n {
                    acc = acc.add(&c.c(mm, i, pp).mul(&inv[mm]));
                }
                endo.push(acc);
            }
        }
        Ok(JetMatrix::from_fn(n, |i, j| {
            let mut acc = endo[i * n].mul(&gm.at(0, j));
            for pp in 1..n {
                acc = acc.add(&endo[i * n + pp].mul(&gm.at(pp, j)));
            }
            acc
        }))
    })
    .flag_invariant()
}

/// Max |(∇_a g)_{ij}| — the Levi-Civita construction really is metric.
pub fn metric_compatibility_residual<S: Scalar>(
    g: &MetricField<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = g.dim();
    let points = g.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let gm = g.at(p, 1)?;
        let gamma = g.christoffel_at(p, 0)?;
        let gam = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k].value();
        let mut worst = 0.0f64;
        for a in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = gm.at(i, j).partial(a);
                    for mm in 0..n {
                        acc = acc - gam(a, i, mm) * gm.at(mm, j).value();
                        acc = acc - gam(a, j, mm) * gm.at(i, mm).value();
                    }
                    worst = worst.max(acc.abs());
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "nabla-g",
        g.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// First Bianchi identity: max |R^l_{kij} + R^l_{ijk} + R^l_{jki}|.
pub fn bianchi_residual<S: Scalar>(g: &MetricField<S>, opts: &SampleOpts) -> Result<CheckReport> {
    let n = g.dim();
    let points = g.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let r = g.curvature_at(p)?;
        let rr = |i: usize, j: usize, k: usize, l: usize| r[((i * n + j) * n + k) * n + l];
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let acc = rr(i, j, k, l) + rr(j, k, i, l) + rr(k, i, j, l);
                        worst = worst.max(acc.abs());
                    }
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "bianchi",
        g.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Covariant derivative of the multiplication, lowered:
/// T_{x,z,y,v} = g((∇_x ∘)(∂_z, ∂_y), ∂_v), layout ((x·n+z)·n+y)·n+v.
pub fn nabla_mult_lowered_at<S: Scalar>(
    m: &MultView<S>,
    g: &MetricField<S>,
    point: &[S],
) -> Result<Vec<S>> {
    let n = m.dim();
    let c = m.at(point, 1)?;
    let gm = g.at(point, 0)?;
    let gamma = g.christoffel_at(point, 0)?;
    let gam = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k].value();
    let mut out = vec![S::zero(); n * n * n * n];
    for x in 0..n {
        for z in 0..n {
            for y in 0..n {
                // (∇_x c)^k_{zy}
                let mut comp = vec![S::zero(); n];
                for k in 0..n {
                    let mut acc = c.c(z, y, k).partial(x);
                    for mm in 0..n {
                        acc = acc + gam(x, mm, k) * c.c(z, y, mm).value();
                        acc = acc - gam(x, z, mm) * c.c(mm, y, k).value();
                        acc = acc - gam(x, y, mm) * c.c(z, mm, k).value();
                    }
                    comp[k] = acc;
                }
                for v in 0..n {
                    let mut acc = S::zero();
                    for k in 0..n {
                        acc = acc + comp[k] * gm.at(k, v).value();
                    }
                    out[((x * n + z) * n + y) * n + v] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Asymmetry of the lowered ∇∘ tensor in its first two slots; vanishes
/// exactly when the coidentity is closed.
pub fn total_symmetry_residual<S: Scalar>(
    m: &MultView<S>,
    g: &MetricField<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = m.dim();
    let points = g.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let t = nabla_mult_lowered_at(m, g, p)?;
        let idx = |x: usize, z: usize, y: usize, v: usize| ((x * n + z) * n + y) * n + v;
        let mut worst = 0.0f64;
        for x in 0..n {
            for z in 0..n {
                for y in 0..n {
                    for v in 0..n {
                        worst = worst.max((t[idx(x, z, y, v)] - t[idx(z, x, y, v)]).abs());
                    }
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "total-symmetry",
        g.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Unconditional identity tying the ∇∘ commutator to dε:
/// 2T(X,Z,Y,V) − 2T(Z,X,Y,V) = dε(Y∘Z, X∘V) − dε(X∘Y, Z∘V).
pub fn cheie_identity_residual<S: Scalar>(
    m: &MultView<S>,
    g: &MetricField<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = m.dim();
    let eps = coidentity_of(g, m.unity());
    let points = g.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let t = nabla_mult_lowered_at(m, g, p)?;
        let c = m.at(p, 0)?;
        let ej = eps.at(p, 1)?;
        let idx = |x: usize, z: usize, y: usize, v: usize| ((x * n + z) * n + y) * n + v;
        // dε on basis products: dε(∂_a∘∂_b, ∂_c∘∂_d).
        let de = |a: usize, b: usize| ej[b].partial(a) - ej[a].partial(b);
        let dprod = |a: usize, b: usize, cc: usize, d: usize, c: &crate::field::MultJets<S>| {
            let mut acc = S::zero();
            for s in 0..n {
                for t in 0..n {
                    acc = acc + c.c(a, b, s).value() * c.c(cc, d, t).value() * de(s, t);
                }
            }
            acc
        };
        let mut worst = 0.0f64;
        for x in 0..n {
            for z in 0..n {
                for y in 0..n {
                    for v in 0..n {
                        let two = S::from_f64(2.0);
                        let lhs = two * (t[idx(x, z, y, v)] - t[idx(z, x, y, v)]);
                        let rhs = dprod(y, z, x, v, &c) - dprod(x, y, z, v, &c);
                        worst = worst.max((lhs - rhs).abs());
                    }
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "nabla-mult-vs-deps",
        g.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Max |T(E,Z,Y,V) − T(Z,E,Y,V)| with E contracted into a slot of the
/// lowered ∇∘ tensor.
pub fn weak_symmetry_residual<S: Scalar>(
    m: &MultView<S>,
    g: &MetricField<S>,
    e_field: &VectorFieldView<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = m.dim();
    let points = g.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let t = nabla_mult_lowered_at(m, g, p)?;
        let ev = e_field.value(p)?;
        let idx = |x: usize, z: usize, y: usize, v: usize| ((x * n + z) * n + y) * n + v;
        let mut worst = 0.0f64;
        for z in 0..n {
            for y in 0..n {
                for v in 0..n {
                    let mut acc = S::zero();
                    for a in 0..n {
                        acc = acc + ev[a] * (t[idx(a, z, y, v)] - t[idx(z, a, y, v)]);
                    }
                    worst = worst.max(acc.abs());
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "weak-symmetry",
        g.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse::parse;
    use crate::fmanifold::FPatch;
    use crate::patch::default_coords;

    fn opts() -> SampleOpts {
        SampleOpts::default()
    }

    fn parse_on(chart: &Arc<Chart>, t: &str) -> Expr {
        parse(t, chart.coords(), chart.flavor()).unwrap()
    }

    fn diag_metric(chart: &Arc<Chart>, texts: &[&str]) -> MetricField<f64> {
        let diag = texts.iter().map(|t| parse_on(chart, t)).collect();
        MetricField::from_diag(Arc::clone(chart), diag)
    }

    #[test]
    fn flat_metric_has_zero_connection_and_curvature() {
        let f = FPatch::semisimple("ss2", vec![(0.25, 1.25); 2]);
        let g = diag_metric(f.chart(), &["1", "1"]);
        let p = vec![0.6, 0.9];
        let gamma = g.christoffel_at(&p, 0).unwrap();
        assert!(gamma.iter().all(|j| j.value().abs() < 1e-15));
        let r = g.curvature_at(&p).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-15));
        assert!(metric_compatibility_residual(&g, &opts()).unwrap().pass);
        assert!(bianchi_residual(&g, &opts()).unwrap().pass);
    }

    #[test]
    fn separated_diagonal_metrics_are_flat() {
        let f = FPatch::semisimple("ss3", vec![(0.25, 1.25); 3]);
        let g = diag_metric(f.chart(), &["u1", "1 + u2^2", "exp(u3)"]);
        for p in f.chart().sample::<f64>(5, 8).unwrap() {
            let r = g.curvature_at(&p).unwrap();
            let worst = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(worst < 1e-10, "curvature {worst}");
        }
        let o = opts().with_tol(1e-8);
        assert!(metric_compatibility_residual(&g, &o).unwrap().pass);
        assert!(bianchi_residual(&g, &o).unwrap().pass);
    }

    #[test]
    #[allow(clippy::erasing_op, clippy::identity_op)]
    fn round_metric_recovers_unit_sectional_curvature() {
        // diag(1, sin(u1)^2): Gaussian curvature +1, so
        // g(R(∂_1,∂_2)∂_2, ∂_1) = det g = sin(u1)^2.
        let coords = default_coords(2);
        let chart = Chart::new_real("cap", Arc::clone(&coords), vec![(0.4, 1.2), (0.0, 1.0)]);
        let g = diag_metric(&chart, &["1", "sin(u1)^2"]);
        for p in chart.sample::<f64>(9, 16).unwrap() {
            let r = g.curvature_at(&p).unwrap();
            let gm = g.at(&p, 0).unwrap();
            let n = 2;
            // R(∂_1,∂_2)∂_2 lowered against ∂_1.
            let mut low = 0.0;
            for l in 0..n {
                low += r[((0 * n + 1) * n + 1) * n + l] * gm.at(l, 0).value();
            }
            let det = gm.at(0, 0).value() * gm.at(1, 1).value();
            assert!(
                (low / det - 1.0).abs() < 1e-6,
                "sectional {} at {:?}",
                low / det,
                p
            );
        }
    }

    #[test]
    fn coidentity_metrics_are_invariant_and_round_trip() {
        let f = FPatch::semisimple("ss3", vec![(0.25, 1.25); 3]);
        let m = f.mult_view::<f64>();
        // ε = Σ u^i du^i gives the Egorov-style metric diag(u^i).
        let eps = CovectorFieldView::from_exprs(
            Arc::clone(f.chart()),
            vec![
                parse_on(f.chart(), "u1"),
                parse_on(f.chart(), "u2"),
                parse_on(f.chart(), "u3"),
            ],
        );
        let g = metric_from_coidentity(&m, &eps);
        assert!(g.is_invariant());
        let p = vec![0.5, 0.75, 1.0];
        let gm = g.at(&p, 0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { p[i] } else { 0.0 };
                assert!((gm.at(i, j).value() - want).abs() < 1e-14);
            }
        }
        let inv = invariance_residual(&g, &m, &opts().with_tol(1e-12)).unwrap();
        assert!(inv.pass, "invariance: {}", inv.max_residual);

        // ε recovered from the metric, and it is closed.
        let back = coidentity_of(&g, m.unity());
        let j = back.at(&p, 0).unwrap();
        for i in 0..3 {
            assert!((j[i].value() - p[i]).abs() < 1e-14);
        }
        let cl = closedness_residual(&back, &opts()).unwrap();
        assert!(cl.pass, "closedness: {}", cl.max_residual);
    }

    #[test]
    fn off_diagonal_constant_metric_breaks_invariance_by_its_entry() {
        let f = FPatch::semisimple("ss2", vec![(0.25, 1.25); 2]);
        let m = f.mult_view::<f64>();
        let chart = f.chart();
        let entries = vec![
            parse_on(chart, "1"),
            parse_on(chart, "0.3"),
            parse_on(chart, "0.3"),
            parse_on(chart, "1"),
        ];
        let g = MetricField::from_entries(Arc::clone(chart), entries);
        let r = invariance_residual(&g, &m, &opts()).unwrap();
        assert!(!r.pass);
        assert!((r.max_residual - 0.3).abs() < 1e-12);
    }

    #[test]
    fn degenerate_coidentity_is_rejected_at_inversion() {
        let f = FPatch::semisimple("ss2", vec![(0.25, 1.25); 2]);
        let m = f.mult_view::<f64>();
        let eps = CovectorFieldView::from_exprs(
            Arc::clone(f.chart()),
            vec![parse_on(f.chart(), "1"), parse_on(f.chart(), "0")],
        );
        let g = metric_from_coidentity(&m, &eps);
        match g.inverse_at(&[0.5, 0.5], 0) {
            Err(crate::Error::SingularSystem { .. }) => {}
            other => panic!("expected a singular system, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn closedness_and_total_symmetry_agree_on_both_statuses() {
        let f = FPatch::semisimple("ss2", vec![(0.25, 1.25); 2]);
        let m = f.mult_view::<f64>();

        // Closed case: Egorov diag(u^i).
        let closed = diag_metric(f.chart(), &["u1", "u2"]).flag_invariant();
        let eps = coidentity_of(&closed, m.unity());
        let o8 = opts().with_tol(1e-8);
        let c1 = closedness_residual(&eps, &o8).unwrap();
        let t1 = total_symmetry_residual(&m, &closed, &o8).unwrap();
        assert!(c1.pass && t1.pass, "{} {}", c1.max_residual, t1.max_residual);

        // Non-closed case: diag(1, u1) has ε = du1 + u1 du2, dε ≠ 0.
        let skew = diag_metric(f.chart(), &["1", "u1"]).flag_invariant();
        let eps2 = coidentity_of(&skew, m.unity());
        let c2 = closedness_residual(&eps2, &o8).unwrap();
        let t2 = total_symmetry_residual(&m, &skew, &o8).unwrap();
        assert!(!c2.pass && !t2.pass);
        assert!((c2.max_residual - 1.0).abs() < 1e-12, "dε residual 1, got {}", c2.max_residual);
    }

    #[test]
    fn commutator_identity_holds_even_for_non_closed_coidentities() {
        let f = FPatch::semisimple("ss2", vec![(0.25, 1.25); 2]);
        let m = f.mult_view::<f64>();
        let o8 = opts().with_tol(1e-8);
        for diag in [["u1", "u2"], ["1", "u1"], ["1", "1"]] {
            let g = diag_metric(f.chart(), &diag).flag_invariant();
            let r = cheie_identity_residual(&m, &g, &o8).unwrap();
            assert!(r.pass, "diag {:?}: {}", diag, r.max_residual);
        }
    }

    #[test]
    fn weak_symmetry_follows_total_symmetry_and_detects_defects() {
        let f = FPatch::semisimple("ss2", vec![(0.25, 1.25); 2]);
        let m = f.mult_view::<f64>();
        let o8 = opts().with_tol(1e-8);

        let egorov = diag_metric(f.chart(), &["u1", "u2"]).flag_invariant();
        let e_diag = f.field_from_texts(&["1 + u1^2", "1 + u2^2"]).unwrap();
        let w = weak_symmetry_residual(&m, &egorov, &e_diag, &o8).unwrap();
        assert!(w.pass, "weak symmetry: {}", w.max_residual);

        let skew = diag_metric(f.chart(), &["1", "u1"]).flag_invariant();
        let w2 = weak_symmetry_residual(&m, &skew, m.unity(), &o8).unwrap();
        assert!(!w2.pass && w2.max_residual > 1e-2);
    }

    #[test]
    fn intersection_metric_divides_by_the_eventual_factors() {
        let f = FPatch::semisimple("ss2", vec![(0.25, 1.25); 2]);
        let m = f.mult_view::<f64>();
        let gt = diag_metric(f.chart(), &["u1", "u2"]).flag_invariant();
        let e_field = f.field_from_texts(&["1 + u1^2", "3"]).unwrap();
        let cand = crate::eventual::certify(&m, &e_field, &opts()).unwrap();
        let g = intersection_metric(&gt, &m, cand.inverse());

        let p = vec![0.5, 0.8];
        let gm = g.at(&p, 0).unwrap();
        assert!((gm.at(0, 0).value() - 0.5 / 1.25).abs() < 1e-12);
        assert!((gm.at(1, 1).value() - 0.8 / 3.0).abs() < 1e-12);
        assert!(gm.at(0, 1).value().abs() < 1e-14);

        // E = e returns the base metric; symmetry at sample points.
        let ge = intersection_metric(&gt, &m, m.unity());
        for p in f.chart().sample::<f64>(21, 64).unwrap() {
            let a = ge.at(&p, 0).unwrap();
            let b = gt.at(&p, 0).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a.at(i, j).value() - b.at(i, j).value()).abs() < 1e-13);
                }
            }
            let gi = g.at(&p, 0).unwrap();
            assert!((gi.at(0, 1).value() - gi.at(1, 0).value()).abs() < 1e-10);
        }
        assert!(invariance_residual(&g, &m, &opts().with_tol(1e-10)).unwrap().pass);
    }

    #[test]
    fn dual_connection_action_matches_the_koszul_form() {
        // 2 g*(∇_y du^a, du^b) = ∂_y g^{ab} − g([g*du^a, g*du^b], ∂_y)
        // for constant basis coforms.
        let coords = default_coords(2);
        let chart = Chart::new_real("k", Arc::clone(&coords), vec![(0.25, 1.25); 2]);
        let fixtures = [
            vec!["u1", "0", "0", "u2"],
            vec!["1 + u2^2", "0.2", "0.2", "2"],
            vec!["exp(u1)", "sin(u1) * 0.1", "sin(u1) * 0.1", "1 + u1^2 + u2^2"],
        ];
        for texts in fixtures {
            let entries = texts.iter().map(|t| parse_on(&chart, t)).collect();
            let g = MetricField::<f64>::from_entries(Arc::clone(&chart), entries);
            for p in chart.sample::<f64>(13, 8).unwrap() {
                let n = 2;
                let gamma = g.christoffel_at(&p, 0).unwrap();
                let ginv = g.inverse_at(&p, 1).unwrap();
                let gm = g.at(&p, 0).unwrap();
                for y in 0..n {
                    for a in 0..n {
                        for b in 0..n {
                            let mut lhs = 0.0;
                            for mm in 0..n {
                                lhs += -gamma[(y * n + mm) * n + a].value()
                                    * ginv.at(mm, b).value();
                            }
                            lhs *= 2.0;
                            let mut rhs = ginv.at(a, b).partial(y);
                            for k in 0..n {
                                let mut br = 0.0;
                                for mm in 0..n {
                                    br += ginv.at(a, mm).value() * ginv.at(b, k).partial(mm);
                                    br -= ginv.at(b, mm).value() * ginv.at(a, k).partial(mm);
                                }
                                rhs -= gm.at(k, y).value() * br;
                            }
                            assert!(
                                (lhs - rhs).abs() < 1e-9,
                                "koszul defect {} at y={y} a={a} b={b}",
                                (lhs - rhs).abs()
                            );
                        }
                    }
                }
            }
        }
    }
}
