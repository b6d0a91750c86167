//! Field views: vector fields, covector fields, endomorphism fields, and
//! multiplication tensors on a chart.
//!
//! A view couples a jet supplier with the maximum order it can produce
//! exactly. Expression-backed views supply order 2 and can be differentiated
//! symbolically, so derived fields (brackets, products) stay expression-
//! backed whenever their inputs are. Computation-backed views supply exactly
//! the order their construction propagates; deeper requests raise
//! `OrderExhausted` instead of silently finite-differencing.

use crate::error::{Error, Result};
use crate::expr::jet::{sym_index, Jet, Scalar};
use crate::expr::{Expr, Flavor};
use crate::patch::Chart;
use std::sync::Arc;

type Supplier<S> = Arc<dyn Fn(&[S], usize) -> Result<Vec<Jet<S>>> + Send + Sync>;

pub(crate) fn check_order(requested: usize, available: usize) -> Result<()> {
    if requested > available {
        return Err(Error::OrderExhausted {
            requested,
            available,
        });
    }
    Ok(())
}

fn eval_expr_batch<S: Scalar>(exprs: &[Expr], point: &[S], order: usize) -> Result<Vec<Jet<S>>> {
    exprs.iter().map(|e| e.eval(point, order)).collect()
}

// ---------------------------------------------------------------------------
// Vector fields

#[derive(Clone)]
pub struct VectorFieldView<S: Scalar> {
    chart: Arc<Chart>,
    exprs: Option<Arc<Vec<Expr>>>,
    supplier: Supplier<S>,
    max_order: usize,
}

impl<S: Scalar> VectorFieldView<S> {
    pub fn from_exprs(chart: Arc<Chart>, exprs: Vec<Expr>) -> VectorFieldView<S> {
        assert_eq!(exprs.len(), chart.dim());
        let shared = Arc::new(exprs);
        let closure = Arc::clone(&shared);
        VectorFieldView {
            chart,
            exprs: Some(shared),
            supplier: Arc::new(move |p, o| eval_expr_batch(&closure, p, o)),
            max_order: 2,
        }
    }

    pub fn from_fn(
        chart: Arc<Chart>,
        max_order: usize,
        f: impl Fn(&[S], usize) -> Result<Vec<Jet<S>>> + Send + Sync + 'static,
    ) -> VectorFieldView<S> {
        VectorFieldView {
            chart,
            exprs: None,
            supplier: Arc::new(f),
            max_order,
        }
    }

    /// Constant field with real components (expression-backed, so it stays
    /// differentiable symbolically on both flavors).
    pub fn constant(chart: Arc<Chart>, values: &[f64]) -> VectorFieldView<S> {
        let coords = Arc::clone(chart.coords());
        let flavor = chart.flavor();
        let exprs = values
            .iter()
            .map(|&v| Expr::lit(v, &coords, flavor))
            .collect();
        VectorFieldView::from_exprs(chart, exprs)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn exprs(&self) -> Option<&Arc<Vec<Expr>>> {
        self.exprs.as_ref()
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn at(&self, point: &[S], order: usize) -> Result<Vec<Jet<S>>> {
        check_order(order, self.max_order)?;
        (self.supplier)(point, order)
    }

    pub fn value(&self, point: &[S]) -> Result<Vec<S>> {
        Ok(self.at(point, 0)?.iter().map(|j| j.value()).collect())
    }
}

/// Lie bracket [X,Y]^k = X^m ∂_m Y^k − Y^m ∂_m X^k (derivatives along the
/// holomorphic slots on complex charts). Expression-backed inputs give an
/// expression-backed bracket; otherwise the result computes jets one order
/// below its inputs.
pub fn bracket<S: Scalar>(x: &VectorFieldView<S>, y: &VectorFieldView<S>) -> VectorFieldView<S> {
    let chart = Arc::clone(&x.chart);
    let n = chart.dim();
    if let (Some(xe), Some(ye)) = (&x.exprs, &y.exprs) {
        let comps: Vec<Expr> = (0..n)
            .map(|k| {
                let mut acc = Expr::lit(0.0, chart.coords(), chart.flavor());
                for m in 0..n {
                    acc = acc
                        .add(&xe[m].mul(&ye[k].partial(m)))
                        .sub(&ye[m].mul(&xe[k].partial(m)));
                }
                acc
            })
            .collect();
        return VectorFieldView::from_exprs(chart, comps);
    }
    let xs = x.clone();
    let ys = y.clone();
    let max_order = x.max_order.min(y.max_order).saturating_sub(1);
    VectorFieldView::from_fn(chart, max_order, move |p, order| {
        let xj = xs.at(p, order + 1)?;
        let yj = ys.at(p, order + 1)?;
        Ok((0..n)
            .map(|k| {
                let mut acc = xj[0].mul(&yj[k].partial_jet(0));
                acc = acc.sub(&yj[0].mul(&xj[k].partial_jet(0)));
                for m in 1..n {
                    acc = acc.add(&xj[m].mul(&yj[k].partial_jet(m)));
                    acc = acc.sub(&yj[m].mul(&xj[k].partial_jet(m)));
                }
                acc
            })
            .collect())
    })
}

// ---------------------------------------------------------------------------
// Covector fields

#[derive(Clone)]
pub struct CovectorFieldView<S: Scalar> {
    chart: Arc<Chart>,
    exprs: Option<Arc<Vec<Expr>>>,
    supplier: Supplier<S>,
    max_order: usize,
}

impl<S: Scalar> CovectorFieldView<S> {
    pub fn from_exprs(chart: Arc<Chart>, exprs: Vec<Expr>) -> CovectorFieldView<S> {
        assert_eq!(exprs.len(), chart.dim());
        let shared = Arc::new(exprs);
        let closure = Arc::clone(&shared);
        CovectorFieldView {
            chart,
            exprs: Some(shared),
            supplier: Arc::new(move |p, o| eval_expr_batch(&closure, p, o)),
            max_order: 2,
        }
    }

    pub fn from_fn(
        chart: Arc<Chart>,
        max_order: usize,
        f: impl Fn(&[S], usize) -> Result<Vec<Jet<S>>> + Send + Sync + 'static,
    ) -> CovectorFieldView<S> {
        CovectorFieldView {
            chart,
            exprs: None,
            supplier: Arc::new(f),
            max_order,
        }
    }

    /// Basis coform du^a.
    pub fn basis(chart: Arc<Chart>, a: usize) -> CovectorFieldView<S> {
        let coords = Arc::clone(chart.coords());
        let flavor = chart.flavor();
        let exprs = (0..chart.dim())
            .map(|i| Expr::lit(if i == a { 1.0 } else { 0.0 }, &coords, flavor))
            .collect();
        CovectorFieldView::from_exprs(chart, exprs)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn exprs(&self) -> Option<&Arc<Vec<Expr>>> {
        self.exprs.as_ref()
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn at(&self, point: &[S], order: usize) -> Result<Vec<Jet<S>>> {
        check_order(order, self.max_order)?;
        (self.supplier)(point, order)
    }
}

// ---------------------------------------------------------------------------
// Endomorphism fields (A^k_j, row index k = output component)

#[derive(Clone)]
pub struct EndoView<S: Scalar> {
    chart: Arc<Chart>,
    exprs: Option<Arc<Vec<Expr>>>,
    supplier: Supplier<S>,
    max_order: usize,
}

impl<S: Scalar> EndoView<S> {
    pub fn from_exprs(chart: Arc<Chart>, entries: Vec<Expr>) -> EndoView<S> {
        let n = chart.dim();
        assert_eq!(entries.len(), n * n);
        let shared = Arc::new(entries);
        let closure = Arc::clone(&shared);
        EndoView {
            chart,
            exprs: Some(shared),
            supplier: Arc::new(move |p, o| eval_expr_batch(&closure, p, o)),
            max_order: 2,
        }
    }

    pub fn from_fn(
        chart: Arc<Chart>,
        max_order: usize,
        f: impl Fn(&[S], usize) -> Result<Vec<Jet<S>>> + Send + Sync + 'static,
    ) -> EndoView<S> {
        EndoView {
            chart,
            exprs: None,
            supplier: Arc::new(f),
            max_order,
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Entries as jets, row-major: index k * n + j holds A^k_j.
    pub fn at(&self, point: &[S], order: usize) -> Result<Vec<Jet<S>>> {
        check_order(order, self.max_order)?;
        (self.supplier)(point, order)
    }

    /// The image field A ∂_j as a view.
    pub fn column(&self, j: usize) -> VectorFieldView<S> {
        let n = self.chart.dim();
        if let Some(entries) = &self.exprs {
            let comps = (0..n).map(|k| entries[k * n + j].clone()).collect();
            return VectorFieldView::from_exprs(Arc::clone(&self.chart), comps);
        }
        let me = self.clone();
        VectorFieldView::from_fn(Arc::clone(&self.chart), self.max_order, move |p, o| {
            let a = me.at(p, o)?;
            Ok((0..n).map(|k| a[k * n + j].clone()).collect())
        })
    }

    /// Pointwise application (A X)^k = A^k_j X^j.
    pub fn apply(&self, x: &VectorFieldView<S>) -> VectorFieldView<S> {
        let n = self.chart.dim();
        if let (Some(entries), Some(xe)) = (&self.exprs, &x.exprs) {
            let comps = (0..n)
                .map(|k| {
                    let mut acc = entries[k * n].mul(&xe[0]);
                    for j in 1..n {
                        acc = acc.add(&entries[k * n + j].mul(&xe[j]));
                    }
                    acc
                })
                .collect();
            return VectorFieldView::from_exprs(Arc::clone(&self.chart), comps);
        }
        let me = self.clone();
        let xs = x.clone();
        let max_order = self.max_order.min(x.max_order);
        VectorFieldView::from_fn(Arc::clone(&self.chart), max_order, move |p, o| {
            let a = me.at(p, o)?;
            let xj = xs.at(p, o)?;
            Ok((0..n)
                .map(|k| {
                    let mut acc = a[k * n].mul(&xj[0]);
                    for j in 1..n {
                        acc = acc.add(&a[k * n + j].mul(&xj[j]));
                    }
                    acc
                })
                .collect())
        })
    }
}

// ---------------------------------------------------------------------------
// Multiplication tensors

/// Packed index for c^k_{ij} batches: symmetric pair (i, j), then k.
pub fn mult_index(n: usize, i: usize, j: usize, k: usize) -> usize {
    sym_index(n, i, j) * n + k
}

/// Expression-backed structure tensor, stored once per unordered pair.
#[derive(Clone, Debug)]
pub struct MultTable {
    n: usize,
    entries: Vec<Expr>,
}

impl MultTable {
    pub fn from_entries(n: usize, entries: Vec<Expr>) -> MultTable {
        assert_eq!(entries.len(), n * (n + 1) / 2 * n);
        MultTable { n, entries }
    }

    /// Canonical semisimple table: ∂_i ∘ ∂_j = δ_{ij} ∂_j.
    pub fn semisimple(coords: &Arc<Vec<String>>, flavor: Flavor) -> MultTable {
        let n = coords.len();
        let mut entries = Vec::with_capacity(n * (n + 1) / 2 * n);
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    let v = if i == j && j == k { 1.0 } else { 0.0 };
                    entries.push(Expr::lit(v, coords, flavor));
                }
            }
        }
        MultTable { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize, k: usize) -> &Expr {
        &self.entries[mult_index(self.n, i, j, k)]
    }

    /// Component expressions of the field ∂_i ∘ ∂_j.
    pub fn column_exprs(&self, i: usize, j: usize) -> Vec<Expr> {
        (0..self.n).map(|k| self.entry(i, j, k).clone()).collect()
    }
}

/// One evaluated batch of structure-tensor jets at a point.
pub struct MultJets<S: Scalar> {
    n: usize,
    jets: Vec<Jet<S>>,
}

impl<S: Scalar> MultJets<S> {
    pub fn new(n: usize, jets: Vec<Jet<S>>) -> MultJets<S> {
        assert_eq!(jets.len(), n * (n + 1) / 2 * n);
        MultJets { n, jets }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn c(&self, i: usize, j: usize, k: usize) -> &Jet<S> {
        &self.jets[mult_index(self.n, i, j, k)]
    }

    /// Contract two component-jet vectors: (X∘Y)^k = c^k_{ij} X^i Y^j.
    pub fn product(&self, x: &[Jet<S>], y: &[Jet<S>]) -> Vec<Jet<S>> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut acc: Option<Jet<S>> = None;
                for i in 0..n {
                    for j in 0..n {
                        let term = self.c(i, j, k).mul(&x[i]).mul(&y[j]);
                        acc = Some(match acc {
                            None => term,
                            Some(a) => a.add(&term),
                        });
                    }
                }
                acc.expect("n >= 1")
            })
            .collect()
    }
}

type MultSupplier<S> = Arc<dyn Fn(&[S], usize) -> Result<MultJets<S>> + Send + Sync>;

/// A multiplication on the tangent bundle of a chart: structure tensor
/// supplier plus its unity field. Expression-backed when it comes from a
/// table; computation-backed for derived multiplications (duals).
#[derive(Clone)]
pub struct MultView<S: Scalar> {
    chart: Arc<Chart>,
    unity: VectorFieldView<S>,
    table: Option<Arc<MultTable>>,
    supplier: MultSupplier<S>,
    max_order: usize,
}

impl<S: Scalar> MultView<S> {
    pub fn from_table(
        chart: Arc<Chart>,
        table: Arc<MultTable>,
        unity: VectorFieldView<S>,
    ) -> MultView<S> {
        assert_eq!(table.dim(), chart.dim());
        let closure = Arc::clone(&table);
        let n = chart.dim();
        MultView {
            chart,
            unity,
            table: Some(table),
            supplier: Arc::new(move |p, o| {
                Ok(MultJets::new(n, eval_expr_batch(&closure.entries, p, o)?))
            }),
            max_order: 2,
        }
    }

    pub fn from_fn(
        chart: Arc<Chart>,
        unity: VectorFieldView<S>,
        max_order: usize,
        f: impl Fn(&[S], usize) -> Result<MultJets<S>> + Send + Sync + 'static,
    ) -> MultView<S> {
        MultView {
            chart,
            unity,
            table: None,
            supplier: Arc::new(f),
            max_order,
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn unity(&self) -> &VectorFieldView<S> {
        &self.unity
    }

    pub fn table(&self) -> Option<&Arc<MultTable>> {
        self.table.as_ref()
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn at(&self, point: &[S], order: usize) -> Result<MultJets<S>> {
        check_order(order, self.max_order)?;
        (self.supplier)(point, order)
    }

    /// The field ∂_i ∘ ∂_j.
    pub fn basis_product(&self, i: usize, j: usize) -> VectorFieldView<S> {
        if let Some(t) = &self.table {
            return VectorFieldView::from_exprs(Arc::clone(&self.chart), t.column_exprs(i, j));
        }
        let me = self.clone();
        let n = self.dim();
        VectorFieldView::from_fn(Arc::clone(&self.chart), self.max_order, move |p, o| {
            let c = me.at(p, o)?;
            Ok((0..n).map(|k| c.c(i, j, k).clone()).collect())
        })
    }

    /// X ∘ Y as a view; expression-backed when every input is.
    pub fn product_view(
        &self,
        x: &VectorFieldView<S>,
        y: &VectorFieldView<S>,
    ) -> VectorFieldView<S> {
        let n = self.dim();
        if let (Some(t), Some(xe), Some(ye)) = (&self.table, &x.exprs, &y.exprs) {
            let comps: Vec<Expr> = (0..n)
                .map(|k| {
                    let mut acc = Expr::lit(0.0, self.chart.coords(), self.chart.flavor());
                    for i in 0..n {
                        for j in 0..n {
                            acc = acc.add(&t.entry(i, j, k).mul(&xe[i]).mul(&ye[j]));
                        }
                    }
                    acc
                })
                .collect();
            return VectorFieldView::from_exprs(Arc::clone(&self.chart), comps);
        }
        let me = self.clone();
        let xs = x.clone();
        let ys = y.clone();
        let max_order = self.max_order.min(x.max_order).min(y.max_order);
        VectorFieldView::from_fn(Arc::clone(&self.chart), max_order, move |p, o| {
            let c = me.at(p, o)?;
            let xj = xs.at(p, o)?;
            let yj = ys.at(p, o)?;
            Ok(c.product(&xj, &yj))
        })
    }

    /// Multiplication-by-X endomorphism (M_X)^k_j = c^k_{ij} X^i.
    pub fn mult_by(&self, x: &VectorFieldView<S>) -> EndoView<S> {
        let n = self.dim();
        if let (Some(t), Some(xe)) = (&self.table, &x.exprs) {
            let mut entries = Vec::with_capacity(n * n);
            for k in 0..n {
                for j in 0..n {
                    let mut acc = Expr::lit(0.0, self.chart.coords(), self.chart.flavor());
                    for i in 0..n {
                        acc = acc.add(&t.entry(i, j, k).mul(&xe[i]));
                    }
                    entries.push(acc);
                }
            }
            return EndoView::from_exprs(Arc::clone(&self.chart), entries);
        }
        let me = self.clone();
        let xs = x.clone();
        let max_order = self.max_order.min(x.max_order);
        EndoView::from_fn(Arc::clone(&self.chart), max_order, move |p, o| {
            let c = me.at(p, o)?;
            let xj = xs.at(p, o)?;
            let mut out = Vec::with_capacity(n * n);
            for k in 0..n {
                for j in 0..n {
                    let mut acc = c.c(0, j, k).mul(&xj[0]);
                    for i in 1..n {
                        acc = acc.add(&c.c(i, j, k).mul(&xj[i]));
                    }
                    out.push(acc);
                }
            }
            Ok(out)
        })
    }
}

// ---------------------------------------------------------------------------
// (1,2)-tensor views

/// Pointwise values of a (1,2)-tensor T^k_{ij}, layout (i*n + j)*n + k.
#[derive(Clone)]
pub struct Tensor12View<S: Scalar> {
    chart: Arc<Chart>,
    pub symmetric: bool,
    supplier: Arc<dyn Fn(&[S]) -> Result<Vec<S>> + Send + Sync>,
}

impl<S: Scalar> Tensor12View<S> {
    pub fn from_fn(
        chart: Arc<Chart>,
        symmetric: bool,
        f: impl Fn(&[S]) -> Result<Vec<S>> + Send + Sync + 'static,
    ) -> Tensor12View<S> {
        Tensor12View {
            chart,
            symmetric,
            supplier: Arc::new(f),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn at(&self, point: &[S]) -> Result<Vec<S>> {
        (self.supplier)(point)
    }
}

/// Lie derivative of the multiplication along X:
/// (L_X c)^k_{ij} = X^m ∂_m c^k_{ij} − (∂_m X^k) c^m_{ij}
///                + (∂_i X^m) c^k_{mj} + (∂_j X^m) c^k_{im}.
pub fn lie_derivative_mult<S: Scalar>(
    mult: &MultView<S>,
    x: &VectorFieldView<S>,
) -> Tensor12View<S> {
    let m = mult.clone();
    let xs = x.clone();
    let n = mult.dim();
    Tensor12View::from_fn(Arc::clone(mult.chart()), true, move |p| {
        let cj = m.at(p, 1)?;
        let xj = xs.at(p, 1)?;
        let mut out = vec![S::zero(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = S::zero();
                    for mm in 0..n {
                        acc = acc + xj[mm].value() * cj.c(i, j, k).partial(mm);
                        acc = acc - xj[k].partial(mm) * cj.c(i, j, mm).value();
                        acc = acc + xj[mm].partial(i) * cj.c(mm, j, k).value();
                        acc = acc + xj[mm].partial(j) * cj.c(i, mm, k).value();
                    }
                    out[(i * n + j) * n + k] = acc;
                }
            }
        }
        Ok(out)
    })
}

/// Validate a view's first-order jets against central finite differences of
/// its values (diagnostic for computation-backed suppliers). Returns the
/// largest absolute deviation seen.
pub fn fd_validate_gradient<S: Scalar>(
    view: &VectorFieldView<S>,
    points: &[Vec<S>],
    step: f64,
) -> Result<f64> {
    let n = view.chart.dim();
    let complex = S::IS_COMPLEX;
    let mut worst = 0.0f64;
    for p in points {
        let jets = view.at(p, 1)?;
        for slot_coord in 0..n {
            // Real direction, and imaginary direction on complex charts.
            let dirs: &[(f64, f64)] = if complex {
                &[(1.0, 0.0), (0.0, 1.0)]
            } else {
                &[(1.0, 0.0)]
            };
            let mut fd_parts: Vec<Vec<S>> = Vec::new();
            for (dre, dim_) in dirs {
                let mut plus = p.clone();
                plus[slot_coord] = plus[slot_coord] + S::from_re_im(dre * step, dim_ * step);
                let mut minus = p.clone();
                minus[slot_coord] = minus[slot_coord] - S::from_re_im(dre * step, dim_ * step);
                let vp = view.value(&plus)?;
                let vm = view.value(&minus)?;
                fd_parts.push(
                    vp.iter()
                        .zip(vm.iter())
                        .map(|(a, b)| (*a - *b) * S::from_f64(1.0 / (2.0 * step)))
                        .collect(),
                );
            }
            for k in 0..n {
                if complex {
                    let dx = fd_parts[0][k];
                    let dy = fd_parts[1][k];
                    let i_unit = S::from_re_im(0.0, 1.0);
                    let half = S::from_f64(0.5);
                    let hol = (dx - i_unit * dy) * half;
                    let anti = (dx + i_unit * dy) * half;
                    worst = worst.max((jets[k].partial(slot_coord) - hol).abs());
                    worst = worst.max((jets[k].partial(n + slot_coord) - anti).abs());
                } else {
                    worst = worst.max((jets[k].partial(slot_coord) - fd_parts[0][k]).abs());
                }
            }
        }
    }
    Ok(worst)
}
