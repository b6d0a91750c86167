//! F-manifold patches: a chart carrying an expression-backed commutative
//! multiplication with unity, the residual checks certifying the algebraic
//! axioms and the integrability condition on the multiplication, and the
//! product construction.

use crate::error::{Error, Result};
use crate::expr::jet::Scalar;
use crate::expr::{Expr, Flavor};
use crate::field::{lie_derivative_mult, MultTable, MultView, VectorFieldView};
use crate::patch::{default_coords, Chart};
use crate::report::CheckReport;
use std::sync::Arc;

/// Sampling and tolerance options shared by every residual check.
#[derive(Clone, Copy, Debug)]
pub struct SampleOpts {
    pub seed: u64,
    pub count: usize,
    pub tol: f64,
}

impl Default for SampleOpts {
    fn default() -> SampleOpts {
        SampleOpts {
            seed: 42,
            count: 64,
            tol: 1e-9,
        }
    }
}

impl SampleOpts {
    pub fn with_tol(mut self, tol: f64) -> SampleOpts {
        self.tol = tol;
        self
    }

    pub fn with_count(mut self, count: usize) -> SampleOpts {
        self.count = count;
        self
    }
}

/// A coordinate patch with a multiplication on its tangent bundle.
#[derive(Clone)]
pub struct FPatch {
    chart: Arc<Chart>,
    mult: Arc<MultTable>,
    unity: Arc<Vec<Expr>>,
    semisimple: bool,
    factors: Option<(Arc<FPatch>, Arc<FPatch>)>,
}

impl FPatch {
    pub fn new(
        chart: Arc<Chart>,
        mult: MultTable,
        unity: Vec<Expr>,
        semisimple: bool,
    ) -> Arc<FPatch> {
        assert_eq!(mult.dim(), chart.dim());
        assert_eq!(unity.len(), chart.dim());
        Arc::new(FPatch {
            chart,
            mult: Arc::new(mult),
            unity: Arc::new(unity),
            semisimple,
            factors: None,
        })
    }

    /// Canonical semisimple patch on the given box: ∂_i∘∂_j = δ_{ij}∂_j,
    /// e = Σ∂_i.
    pub fn semisimple(name: impl Into<String>, re_box: Vec<(f64, f64)>) -> Arc<FPatch> {
        let coords = default_coords(re_box.len());
        let chart = Chart::new_real(name, Arc::clone(&coords), re_box);
        let mult = MultTable::semisimple(&coords, Flavor::Real);
        let unity = (0..coords.len())
            .map(|_| Expr::lit(1.0, &coords, Flavor::Real))
            .collect();
        FPatch::new(chart, mult, unity, true)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn name(&self) -> &str {
        self.chart.name()
    }

    pub fn mult_table(&self) -> &Arc<MultTable> {
        &self.mult
    }

    pub fn unity_exprs(&self) -> &Arc<Vec<Expr>> {
        &self.unity
    }

    pub fn is_semisimple(&self) -> bool {
        self.semisimple
    }

    pub fn factors(&self) -> Option<&(Arc<FPatch>, Arc<FPatch>)> {
        self.factors.as_ref()
    }

    pub fn unity_view<S: Scalar>(&self) -> VectorFieldView<S> {
        VectorFieldView::from_exprs(Arc::clone(&self.chart), (*self.unity).clone())
    }

    pub fn mult_view<S: Scalar>(&self) -> MultView<S> {
        MultView::from_table(
            Arc::clone(&self.chart),
            Arc::clone(&self.mult),
            self.unity_view(),
        )
    }

    /// Expression-backed field from component source texts.
    pub fn field_from_texts(&self, texts: &[&str]) -> Result<VectorFieldView<f64>> {
        let exprs = texts
            .iter()
            .map(|t| crate::expr::parse::parse(t, self.chart.coords(), self.chart.flavor()))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorFieldView::from_exprs(Arc::clone(&self.chart), exprs))
    }
}

/// Block product of two patches on the concatenated chart.
pub fn product_patch(f1: &Arc<FPatch>, f2: &Arc<FPatch>) -> Result<Arc<FPatch>> {
    if f1.chart.flavor() != f2.chart.flavor() {
        return Err(Error::invalid("product of patches with different flavors"));
    }
    let n1 = f1.dim();
    let n2 = f2.dim();
    let n = n1 + n2;
    let coords = default_coords(n);
    let flavor = f1.chart.flavor();

    let mut re_box = f1.chart.re_box().to_vec();
    re_box.extend_from_slice(f2.chart.re_box());
    let chart = match flavor {
        Flavor::Real => Chart::new_real(format!("{}x{}", f1.name(), f2.name()), Arc::clone(&coords), re_box),
        Flavor::Complex => {
            let mut im_box = f1.chart.im_box().expect("complex chart").to_vec();
            im_box.extend_from_slice(f2.chart.im_box().expect("complex chart"));
            Chart::new_complex(
                format!("{}x{}", f1.name(), f2.name()),
                Arc::clone(&coords),
                re_box,
                im_box,
            )
        }
    };

    let map1: Vec<usize> = (0..n1).collect();
    let map2: Vec<usize> = (n1..n).collect();
    let zero = Expr::lit(0.0, &coords, flavor);
    let mut entries = Vec::with_capacity(n * (n + 1) / 2 * n);
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let e = if i < n1 && j < n1 && k < n1 {
                    f1.mult.entry(i, j, k).reindex(&map1, &coords)
                } else if i >= n1 && j >= n1 && k >= n1 {
                    f2.mult.entry(i - n1, j - n1, k - n1).reindex(&map2, &coords)
                } else {
                    zero.clone()
                };
                entries.push(e);
            }
        }
    }
    let mult = MultTable::from_entries(n, entries);

    let mut unity: Vec<Expr> = f1.unity.iter().map(|e| e.reindex(&map1, &coords)).collect();
    unity.extend(f2.unity.iter().map(|e| e.reindex(&map2, &coords)));

    let mut patch = FPatch {
        chart,
        mult: Arc::new(mult),
        unity: Arc::new(unity),
        semisimple: f1.semisimple && f2.semisimple,
        factors: Some((Arc::clone(f1), Arc::clone(f2))),
    };
    // A product of semisimple patches is the canonical semisimple patch.
    patch.semisimple = f1.semisimple && f2.semisimple;
    Ok(Arc::new(patch))
}

// ---------------------------------------------------------------------------
// Residual checks

/// Associativity and unity defects of the multiplication (values only).
pub fn algebra_residual<S: Scalar>(m: &MultView<S>, opts: &SampleOpts) -> Result<CheckReport> {
    let n = m.dim();
    let points = m.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let c = m.at(p, 0)?;
        let e = m.unity().at(p, 0)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    // Unity: c^k_{ij} e^i = δ^k_j.
                    if i == 0 {
                        let mut acc = S::zero();
                        for ii in 0..n {
                            acc = acc + c.c(ii, j, k).value() * e[ii].value();
                        }
                        let delta = if k == j { S::one() } else { S::zero() };
                        worst = worst.max((acc - delta).abs());
                    }
                    // Associativity: c^m_{ij} c^l_{mk} = c^m_{jk} c^l_{im}.
                    for l in 0..n {
                        let mut acc = S::zero();
                        for mm in 0..n {
                            acc = acc + c.c(i, j, mm).value() * c.c(mm, k, l).value();
                            acc = acc - c.c(j, k, mm).value() * c.c(i, mm, l).value();
                        }
                        worst = worst.max(acc.abs());
                    }
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "algebra",
        m.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Basis-indexed integrability defect of the multiplication at one point:
/// H(∂_a,∂_b,∂_c,∂_d) = L_{∂_a∘∂_b}(∘)(∂_c,∂_d)
///                    − ∂_a∘L_{∂_b}(∘)(∂_c,∂_d) − ∂_b∘L_{∂_a}(∘)(∂_c,∂_d),
/// laid out ((((a·n+b)·n+c)·n+d)·n+k).
pub fn hm_defect_at<S: Scalar>(m: &MultView<S>, point: &[S]) -> Result<Vec<S>> {
    let n = m.dim();
    let c = m.at(point, 1)?;
    let mut out = vec![S::zero(); n * n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                for d in 0..n {
                    for k in 0..n {
                        // L_{∂_a∘∂_b}(c)^k_{cd} with X^m = c^m_{ab}:
                        let mut acc = S::zero();
                        for mm in 0..n {
                            acc = acc + c.c(a, b, mm).value() * c.c(cc, d, k).partial(mm);
                            acc = acc - c.c(a, b, k).partial(mm) * c.c(cc, d, mm).value();
                            acc = acc + c.c(a, b, mm).partial(cc) * c.c(mm, d, k).value();
                            acc = acc + c.c(a, b, mm).partial(d) * c.c(cc, mm, k).value();
                        }
                        // ∂_a ∘ L_{∂_b}(c)(∂_c,∂_d), where L_{∂_b}c = ∂_b c:
                        for mm in 0..n {
                            acc = acc - c.c(a, mm, k).value() * c.c(cc, d, mm).partial(b);
                            acc = acc - c.c(b, mm, k).value() * c.c(cc, d, mm).partial(a);
                        }
                        out[((((a * n + b) * n + cc) * n + d) * n) + k] = acc;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Max integrability defect over basis 4-tuples at each sample point.
pub fn hm_residual<S: Scalar>(m: &MultView<S>, opts: &SampleOpts) -> Result<CheckReport> {
    let points = m.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let h = hm_defect_at(m, p)?;
        per_point.push(h.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    Ok(CheckReport::from_per_point(
        "hertling-manin",
        m.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Max |(L_E c)^k_{ij} − d·c^k_{ij}| over basis indices and points.
pub fn euler_residual<S: Scalar>(
    m: &MultView<S>,
    e: &VectorFieldView<S>,
    d: f64,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = m.dim();
    let lie = lie_derivative_mult(m, e);
    let points = m.chart().sample::<S>(opts.seed, opts.count)?;
    let df = S::from_f64(d);
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let t = lie.at(p)?;
        let c = m.at(p, 0)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let r = t[(i * n + j) * n + k] - df * c.c(i, j, k).value();
                    worst = worst.max(r.abs());
                }
            }
        }
        per_point.push(worst);
    }
    Ok(
        CheckReport::from_per_point("euler", m.chart().name(), opts.tol, opts.seed, per_point)
            .with_note("weight", format!("{d}")),
    )
}
