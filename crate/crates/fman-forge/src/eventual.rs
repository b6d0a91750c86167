//! Eventual identities: inversion of vector fields in the multiplication
//! algebra, the Lie-derivative characterization of candidates, the induced
//! dual multiplication with swapped unity, integer powers with their bracket
//! law, and decomposition on product patches.

use crate::error::{Error, Result};
use crate::expr::jet::{Jet, Scalar};
use crate::expr::linalg::{solve_linear_jet, JetMatrix};
use crate::expr::Flavor;
use crate::field::{bracket, lie_derivative_mult, MultJets, MultView, VectorFieldView};
use crate::fmanifold::{FPatch, SampleOpts};
use crate::report::CheckReport;
use std::sync::Arc;

/// Pointwise inverse of X in the multiplication algebra: solves
/// (M_X)·v = e with jets carried through the solve by implicit
/// differentiation. Evaluation at points where M_X is singular reports
/// the singularity.
pub fn invert_field<S: Scalar>(m: &MultView<S>, x: &VectorFieldView<S>) -> VectorFieldView<S> {
    let a = m.mult_by(x);
    let e = m.unity().clone();
    let n = m.dim();
    let max_order = a.max_order().min(e.max_order());
    VectorFieldView::from_fn(Arc::clone(m.chart()), max_order, move |p, o| {
        let amat = JetMatrix::from_rows(n, a.at(p, o)?);
        solve_linear_jet(&amat, &e.at(p, o)?)
    })
}

/// Sample points where the candidate is invertible; more than half of the
/// draws rejected reports the domain as mostly singular.
pub fn sample_invertible<S: Scalar>(
    m: &MultView<S>,
    x: &VectorFieldView<S>,
    seed: u64,
    count: usize,
) -> Result<Vec<Vec<S>>> {
    let inv = invert_field(m, x);
    m.chart()
        .sample_admissible::<S>(seed, count, |p| inv.value(p).map(|_| ()))
}

/// A candidate paired with its cached algebra inverse and the residual
/// report of the characterization check run at certification time.
#[derive(Clone)]
pub struct EventualCandidate<S: Scalar> {
    mult: MultView<S>,
    field: VectorFieldView<S>,
    inverse: VectorFieldView<S>,
    report: CheckReport,
}

impl<S: Scalar> EventualCandidate<S> {
    pub fn mult(&self) -> &MultView<S> {
        &self.mult
    }

    pub fn field(&self) -> &VectorFieldView<S> {
        &self.field
    }

    pub fn inverse(&self) -> &VectorFieldView<S> {
        &self.inverse
    }

    pub fn report(&self) -> &CheckReport {
        &self.report
    }

    pub fn is_certified(&self) -> bool {
        self.report.pass
    }

    /// E^k in the algebra; k = 0 is the unity, negative powers run through
    /// the cached inverse.
    pub fn power(&self, k: i64) -> VectorFieldView<S> {
        if k == 0 {
            return self.mult.unity().clone();
        }
        let step = if k > 0 { &self.field } else { &self.inverse };
        let mut acc = step.clone();
        for _ in 1..k.abs() {
            acc = self.mult.product_view(&acc, step);
        }
        acc
    }
}

/// Max over basis pairs and admissible points of
/// |(L_E ∘)(∂_i,∂_j) − [e,E]∘∂_i∘∂_j|, the characterization that makes a
/// candidate an eventual identity.
pub fn char_residual<S: Scalar>(
    m: &MultView<S>,
    e_field: &VectorFieldView<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = m.dim();
    let lie = lie_derivative_mult(m, e_field);
    let weak = bracket(m.unity(), e_field);
    let points = sample_invertible(m, e_field, opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let t = lie.at(p)?;
        let w = weak.value(p)?;
        let c = m.at(p, 0)?;
        // (w ∘ ·)^k_b
        let mut wm = vec![S::zero(); n * n];
        for b in 0..n {
            for k in 0..n {
                let mut acc = S::zero();
                for a in 0..n {
                    acc = acc + c.c(a, b, k).value() * w[a];
                }
                wm[b * n + k] = acc;
            }
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut rhs = S::zero();
                    for b in 0..n {
                        rhs = rhs + c.c(i, j, b).value() * wm[b * n + k];
                    }
                    worst = worst.max((t[(i * n + j) * n + k] - rhs).abs());
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "eventual-characterization",
        m.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// The weak vector (L_E ∘)(e,e), as a values-only computed view.
pub fn weak_vector<S: Scalar>(m: &MultView<S>, e_field: &VectorFieldView<S>) -> VectorFieldView<S> {
    let lie = lie_derivative_mult(m, e_field);
    let unity = m.unity().clone();
    let n = m.dim();
    let slots = m.chart().slots();
    VectorFieldView::from_fn(Arc::clone(m.chart()), 0, move |p, _| {
        let t = lie.at(p)?;
        let ev = unity.value(p)?;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = S::zero();
            for i in 0..n {
                for j in 0..n {
                    acc = acc + t[(i * n + j) * n + k] * ev[i] * ev[j];
                }
            }
            out.push(Jet::constant(acc, slots, 0));
        }
        Ok(out)
    })
}

/// Pointwise agreement of (L_E ∘)(e,e) with the commutator [e,E].
pub fn weak_vector_residual<S: Scalar>(
    m: &MultView<S>,
    e_field: &VectorFieldView<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let wv = weak_vector(m, e_field);
    let br = bracket(m.unity(), e_field);
    let points = m.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let a = wv.value(p)?;
        let b = br.value(p)?;
        let worst = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (*x - *y).abs())
            .fold(0.0, f64::max);
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "weak-vector",
        m.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Consistency report of the cached inverse: max |E∘E^{-1} − e|.
pub fn inverse_residual<S: Scalar>(
    cand: &EventualCandidate<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let prod = cand.mult.product_view(&cand.field, &cand.inverse);
    let unity = cand.mult.unity();
    let points = sample_invertible(&cand.mult, &cand.field, opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let a = prod.value(p)?;
        let b = unity.value(p)?;
        per_point.push(
            a.iter()
                .zip(&b)
                .map(|(x, y)| (*x - *y).abs())
                .fold(0.0, f64::max),
        );
    }
    Ok(CheckReport::from_per_point(
        "algebra-inverse",
        cand.mult.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Build a candidate: cache the inverse and run the characterization check.
/// The result carries its report whether or not the check passed.
pub fn certify<S: Scalar>(
    m: &MultView<S>,
    e_field: &VectorFieldView<S>,
    opts: &SampleOpts,
) -> Result<EventualCandidate<S>> {
    let report = char_residual(m, e_field, opts)?;
    Ok(EventualCandidate {
        mult: m.clone(),
        field: e_field.clone(),
        inverse: invert_field(m, e_field),
        report,
    })
}

/// Product of two candidates in the algebra, re-certified.
pub fn ev_product<S: Scalar>(
    a: &EventualCandidate<S>,
    b: &EventualCandidate<S>,
    opts: &SampleOpts,
) -> Result<EventualCandidate<S>> {
    certify(&a.mult, &a.mult.product_view(&a.field, &b.field), opts)
}

/// Commutator of two candidates, re-certified; evaluation reports a
/// singular system wherever the bracket fails invertibility.
pub fn ev_bracket<S: Scalar>(
    a: &EventualCandidate<S>,
    b: &EventualCandidate<S>,
    opts: &SampleOpts,
) -> Result<EventualCandidate<S>> {
    certify(&a.mult, &bracket(&a.field, &b.field), opts)
}

/// Residual of the power-bracket law
/// [E^n, E^m] = (m−n)·E^{n+m−1}∘[e,E] at admissible points.
pub fn power_bracket_residual<S: Scalar>(
    cand: &EventualCandidate<S>,
    n_pow: i64,
    m_pow: i64,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let m = &cand.mult;
    let lhs = bracket(&cand.power(n_pow), &cand.power(m_pow));
    let rhs = m.product_view(&cand.power(n_pow + m_pow - 1), &bracket(m.unity(), &cand.field));
    let factor = S::from_f64((m_pow - n_pow) as f64);
    let points = sample_invertible(m, &cand.field, opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let a = lhs.value(p)?;
        let b = rhs.value(p)?;
        per_point.push(
            a.iter()
                .zip(&b)
                .map(|(x, y)| (*x - factor * *y).abs())
                .fold(0.0, f64::max),
        );
    }
    Ok(CheckReport::from_per_point(
        format!("power-bracket({n_pow},{m_pow})"),
        m.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

// ---------------------------------------------------------------------------
// Duality

/// The base multiplication together with the dual one
/// X∗Y = X∘Y∘E^{-1}, whose unity is E.
#[derive(Clone)]
pub struct DualPatch<S: Scalar> {
    base: MultView<S>,
    candidate: EventualCandidate<S>,
    dual: MultView<S>,
}

impl<S: Scalar> DualPatch<S> {
    pub fn base(&self) -> &MultView<S> {
        &self.base
    }

    pub fn candidate(&self) -> &EventualCandidate<S> {
        &self.candidate
    }

    pub fn dual(&self) -> &MultView<S> {
        &self.dual
    }
}

/// Construct the dual multiplication of a candidate:
/// c∗^k_{ij} = c^b_{ij} c^k_{bm} (E^{-1})^m, computation-backed, with
/// unity E.
pub fn dualize<S: Scalar>(cand: &EventualCandidate<S>) -> DualPatch<S> {
    let base = cand.mult.clone();
    let inv = cand.inverse.clone();
    let m = cand.mult.clone();
    let n = m.dim();
    let max_order = m.max_order().min(inv.max_order());
    let dual = MultView::from_fn(
        Arc::clone(base.chart()),
        cand.field.clone(),
        max_order,
        move |p, o| {
            let c = m.at(p, o)?;
            let iv = inv.at(p, o)?;
            // (· ∘ E^{-1})^k_b as jets.
            let mut endo = Vec::with_capacity(n * n);
            for b in 0..n {
                for k in 0..n {
                    let mut acc = c.c(0, b, k).mul(&iv[0]);
                    for mm in 1..n {
                        acc = acc.add(&c.c(mm, b, k).mul(&iv[mm]));
                    }
                    endo.push(acc);
                }
            }
            let mut entries = Vec::with_capacity(n * (n + 1) / 2 * n);
            for i in 0..n {
                for j in i..n {
                    for k in 0..n {
                        let mut acc = c.c(i, j, 0).mul(&endo[k]);
                        for b in 1..n {
                            acc = acc.add(&c.c(i, j, b).mul(&endo[b * n + k]));
                        }
                        entries.push(acc);
                    }
                }
            }
            Ok(MultJets::new(n, entries))
        },
    );
    DualPatch {
        base,
        candidate: cand.clone(),
        dual,
    }
}

/// Max |c∗^k_{ij}E^i − δ^k_j|: the dual unity really is E.
pub fn dual_unity_residual<S: Scalar>(d: &DualPatch<S>, opts: &SampleOpts) -> Result<CheckReport> {
    let n = d.dual.dim();
    let points = sample_invertible(&d.base, d.candidate.field(), opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let c = d.dual.at(p, 0)?;
        let ev = d.candidate.field().value(p)?;
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                let mut acc = S::zero();
                for i in 0..n {
                    acc = acc + c.c(i, j, k).value() * ev[i];
                }
                let delta = if j == k { S::one() } else { S::zero() };
                worst = worst.max((acc - delta).abs());
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "dual-unity",
        d.base.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Max difference between two multiplications' structure values at shared
/// sample points.
pub fn mult_agreement_residual<S: Scalar>(
    a: &MultView<S>,
    b: &MultView<S>,
    points: &[Vec<S>],
    name: &str,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = a.dim();
    let mut per_point = Vec::with_capacity(points.len());
    for p in points {
        let ca = a.at(p, 0)?;
        let cb = b.at(p, 0)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    worst = worst.max((ca.c(i, j, k).value() - cb.c(i, j, k).value()).abs());
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        name,
        a.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

// ---------------------------------------------------------------------------
// Decomposition on products

/// Split a candidate on a product patch into its factor parts E_k := e_k∘E.
/// Components across the factor blocks and cross-partials within a block
/// must vanish; a defect above tolerance reports the decomposition as
/// failed. On success returns the parts restricted to the factor charts.
pub fn decompose_on_product<S: Scalar>(
    prod: &Arc<FPatch>,
    e_field: &VectorFieldView<S>,
    opts: &SampleOpts,
) -> Result<(VectorFieldView<S>, VectorFieldView<S>, CheckReport)> {
    let (f1, f2) = prod
        .factors()
        .ok_or_else(|| Error::invalid("decomposition requires a patch built as a product"))?
        .clone();
    let n1 = f1.dim();
    let n = prod.dim();
    let m = prod.mult_view::<S>();

    // Lift each factor unity to the product chart and multiply into E.
    let lift = |lo: usize, hi: usize| -> VectorFieldView<S> {
        let exprs: Vec<_> = (0..n)
            .map(|k| {
                if (lo..hi).contains(&k) {
                    let src = if lo == 0 { &f1 } else { &f2 };
                    let map: Vec<usize> = (lo..hi).collect();
                    src.unity_exprs()[k - lo].reindex(&map, prod.chart().coords())
                } else {
                    crate::expr::Expr::lit(0.0, prod.chart().coords(), prod.chart().flavor())
                }
            })
            .collect();
        VectorFieldView::from_exprs(Arc::clone(prod.chart()), exprs)
    };
    let parts = [
        m.product_view(&lift(0, n1), e_field),
        m.product_view(&lift(n1, n), e_field),
    ];

    // Cross-block values and cross-partials at sample points.
    let points = prod.chart().sample::<S>(opts.seed, opts.count)?;
    let holo = |k: usize| k; // holomorphic slot of coordinate k
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let mut worst = 0.0f64;
        for (which, part) in parts.iter().enumerate() {
            let (inside, outside): (Vec<usize>, Vec<usize>) = if which == 0 {
                ((0..n1).collect(), (n1..n).collect())
            } else {
                ((n1..n).collect(), (0..n1).collect())
            };
            let jets = part.at(p, 1)?;
            for &k in &outside {
                worst = worst.max(jets[k].value().abs());
            }
            for &k in &inside {
                for &mm in &outside {
                    worst = worst.max(jets[k].partial(holo(mm)).abs());
                    if prod.chart().flavor() == Flavor::Complex {
                        worst = worst.max(jets[k].partial(n + mm).abs());
                    }
                }
            }
        }
        per_point.push(worst);
    }
    let report = CheckReport::from_per_point(
        "decomposition",
        prod.name(),
        opts.tol,
        opts.seed,
        per_point,
    );
    if !report.pass {
        return Err(Error::DecompositionDefect {
            defect: report.max_residual,
            tol: opts.tol,
            what: "candidate does not split along the product factors".to_string(),
        });
    }

    // Restrict each part to its factor chart through a section that anchors
    // the other factor at its box midpoint.
    let restrict_part = |which: usize| -> VectorFieldView<S> {
        let part = parts[which].clone();
        let (factor, lo) = if which == 0 {
            (Arc::clone(&f1), 0)
        } else {
            (Arc::clone(&f2), n1)
        };
        let nf = factor.dim();
        let other = if which == 0 { Arc::clone(&f2) } else { Arc::clone(&f1) };
        let anchor: Vec<S> = other
            .chart()
            .re_box()
            .iter()
            .zip(
                other
                    .chart()
                    .im_box()
                    .map(|b| b.to_vec())
                    .unwrap_or_else(|| vec![(0.0, 0.0); other.dim()]),
            )
            .map(|((rl, rh), (il, ih))| S::from_re_im((rl + rh) / 2.0, (il + ih) / 2.0))
            .collect();
        let complex = factor.chart().flavor() == Flavor::Complex;
        let max_order = part.max_order();
        VectorFieldView::from_fn(Arc::clone(factor.chart()), max_order, move |pf, o| {
            let nfull = anchor.len() + nf;
            let mut full = vec![S::zero(); nfull];
            for (t, v) in pf.iter().enumerate() {
                full[lo + t] = *v;
            }
            let mut ai = 0;
            for k in 0..nfull {
                if !(lo..lo + nf).contains(&k) {
                    full[k] = anchor[ai];
                    ai += 1;
                }
            }
            let jets = part.at(&full, o)?;
            let mut map: Vec<usize> = (lo..lo + nf).collect();
            if complex {
                map.extend((lo..lo + nf).map(|s| nfull + s));
            }
            Ok((lo..lo + nf).map(|k| jets[k].restrict(&map)).collect())
        })
    };
    Ok((restrict_part(0), restrict_part(1), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::MultTable;
    use crate::fmanifold::{algebra_residual, hm_residual, product_patch};
    use crate::patch::{default_coords, Chart};

    fn opts() -> SampleOpts {
        SampleOpts::default()
    }

    fn semisimple(n: usize) -> Arc<FPatch> {
        FPatch::semisimple(format!("ss{n}"), vec![(0.25, 1.25); n])
    }

    /// The non-semisimple plane: ∂_1 unity, ∂_2∘∂_2 = 0.
    fn nilpotent2() -> Arc<FPatch> {
        let coords = default_coords(2);
        let chart = Chart::new_real("nilpotent2", Arc::clone(&coords), vec![(0.25, 1.25); 2]);
        let p = |t: &str| crate::expr::parse::parse(t, &coords, Flavor::Real).unwrap();
        let entries = vec![p("1"), p("0"), p("0"), p("1"), p("0"), p("0")];
        FPatch::new(chart, MultTable::from_entries(2, entries), vec![p("1"), p("0")], false)
    }

    #[test]
    fn constant_field_inverts_componentwise_on_semisimple() {
        let f = semisimple(2);
        let m = f.mult_view::<f64>();
        let e2 = f.field_from_texts(&["2", "4"]).unwrap();
        let inv = invert_field(&m, &e2);
        let v = inv.value(&[0.7, 0.9]).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-14);
        assert!((v[1] - 0.25).abs() < 1e-14);

        let e = invert_field(&m, m.unity());
        let v = e.value(&[0.4, 1.1]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nilpotent_inverse_matches_the_closed_form_with_jets() {
        // E = f1∂_1 + f2∂_2 inverts to (1/f1)∂_1 − (f2/f1²)∂_2.
        let f = nilpotent2();
        let m = f.mult_view::<f64>();
        let e_field = f.field_from_texts(&["1 + u1^2", "u1 * u2"]).unwrap();
        let inv = invert_field(&m, &e_field);
        let closed = f
            .field_from_texts(&[
                "1 / (1 + u1^2)",
                "0 - (u1 * u2) / (1 + u1^2)^2",
            ])
            .unwrap();
        for p in f.chart().sample::<f64>(11, 16).unwrap() {
            let a = inv.at(&p, 2).unwrap();
            let b = closed.at(&p, 2).unwrap();
            for k in 0..2 {
                assert!((a[k].value() - b[k].value()).abs() < 1e-12);
                for s in 0..2 {
                    assert!((a[k].partial(s) - b[k].partial(s)).abs() < 1e-10);
                    for t in s..2 {
                        assert!((a[k].second(s, t) - b[k].second(s, t)).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn separated_variables_certify_and_cross_dependence_fails() {
        let f = semisimple(3);
        let m = f.mult_view::<f64>();
        let good = f
            .field_from_texts(&["1 + u1^2", "1 + u2^2", "1 + u3^2"])
            .unwrap();
        let r = char_residual(&m, &good, &opts()).unwrap();
        assert!(r.pass, "separated: {}", r.max_residual);
        assert!(r.max_residual < 1e-9);

        let f2 = semisimple(2);
        let m2 = f2.mult_view::<f64>();
        let bad = f2.field_from_texts(&["1 + u2^2", "1"]).unwrap();
        let r = char_residual(&m2, &bad, &opts()).unwrap();
        assert!(!r.pass);
        assert!(r.max_residual > 0.1, "cross-dependent: {}", r.max_residual);
    }

    #[test]
    fn euler_fields_certify_with_weak_vector_a_multiple_of_unity() {
        let f = semisimple(2);
        let m = f.mult_view::<f64>();
        let euler = f.field_from_texts(&["u1", "u2"]).unwrap();
        let r = char_residual(&m, &euler, &opts()).unwrap();
        assert!(r.pass && r.max_residual < 1e-9);

        let wv = weak_vector(&m, &euler);
        for p in f.chart().sample::<f64>(3, 8).unwrap() {
            let v = wv.value(&p).unwrap();
            assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
        }
        let wr = weak_vector_residual(&m, &euler, &opts()).unwrap();
        assert!(wr.pass, "weak consistency: {}", wr.max_residual);

        // The weak vector of the unity itself vanishes.
        let we = weak_vector(&m, m.unity());
        let v = we.value(&[0.5, 0.5]).unwrap();
        assert!(v[0].abs() < 1e-14 && v[1].abs() < 1e-14);
    }

    #[test]
    fn weak_vector_agrees_with_commutator_even_off_candidates() {
        // (L_X ∘)(e,e) = [e,X] holds for every field, eventual or not.
        let f = nilpotent2();
        let m = f.mult_view::<f64>();
        let x = f.field_from_texts(&["sin(u1) + u2", "u1 * u2^2"]).unwrap();
        let r = weak_vector_residual(&m, &x, &opts()).unwrap();
        assert!(r.pass, "identity broke: {}", r.max_residual);
    }

    #[test]
    fn nilpotent_candidate_certifies_when_f1_depends_only_on_u1() {
        let f = nilpotent2();
        let m = f.mult_view::<f64>();
        let good = f.field_from_texts(&["1 + u1^2", "u1 * u2"]).unwrap();
        let r = char_residual(&m, &good, &opts()).unwrap();
        assert!(r.pass, "nilpotent candidate: {}", r.max_residual);

        let bad = f.field_from_texts(&["1 + u2^2", "u1"]).unwrap();
        let r = char_residual(&m, &bad, &opts()).unwrap();
        assert!(!r.pass && r.max_residual > 1e-2);
    }

    #[test]
    fn dual_of_semisimple_scales_the_idempotents() {
        // E = Σ f_i ∂_i dualizes to ∂_i ∗ ∂_j = δ_ij (1/f_i) ∂_i.
        let f = semisimple(2);
        let m = f.mult_view::<f64>();
        let e_field = f.field_from_texts(&["1 + u1^2", "3"]).unwrap();
        let cand = certify(&m, &e_field, &opts()).unwrap();
        assert!(cand.is_certified());
        let d = dualize(&cand);
        let p = vec![0.5, 0.75];
        let c = d.dual().at(&p, 0).unwrap();
        let f1 = 1.0 + 0.25;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let want = if i == j && j == k {
                        if i == 0 {
                            1.0 / f1
                        } else {
                            1.0 / 3.0
                        }
                    } else {
                        0.0
                    };
                    assert!((c.c(i, j, k).value() - want).abs() < 1e-12);
                }
            }
        }
        assert!(dual_unity_residual(&d, &opts().with_tol(1e-10)).unwrap().pass);
    }

    #[test]
    fn dual_passes_the_axioms_and_dualizing_back_restores_the_base() {
        let f = nilpotent2();
        let m = f.mult_view::<f64>();
        let e_field = f.field_from_texts(&["1 + u1^2", "u1 * u2"]).unwrap();
        let cand = certify(&m, &e_field, &opts()).unwrap();
        assert!(cand.is_certified());
        let d = dualize(&cand);

        let o = opts();
        assert!(algebra_residual(d.dual(), &o).unwrap().pass);
        assert!(hm_residual(d.dual(), &o).unwrap().pass);

        // e is a certified candidate on the dual, and dualizing along it
        // restores the base structure values.
        let e_on_dual = certify(d.dual(), m.unity(), &o).unwrap();
        assert!(e_on_dual.is_certified());
        let back = dualize(&e_on_dual);
        let points = f.chart().sample::<f64>(42, 32).unwrap();
        let agree = mult_agreement_residual(back.dual(), &m, &points, "dual-involution", &o).unwrap();
        assert!(agree.pass, "involution: {}", agree.max_residual);
        assert!(agree.max_residual < 1e-9);
    }

    #[test]
    fn candidate_group_operations_recertify() {
        let f = semisimple(2);
        let m = f.mult_view::<f64>();
        let a = certify(&m, &f.field_from_texts(&["1 + u1^2", "2 + u2"]).unwrap(), &opts()).unwrap();
        let b = certify(&m, &f.field_from_texts(&["2 + u1", "1 + u2^2"]).unwrap(), &opts()).unwrap();
        assert!(a.is_certified() && b.is_certified());

        let prod = ev_product(&a, &b, &opts()).unwrap();
        assert!(prod.is_certified());
        let v = prod.field().value(&[1.0, 1.0]).unwrap();
        assert!((v[0] - 2.0 * 3.0).abs() < 1e-12);

        // E ∘ E^{-1} certifies with vanishing weak vector.
        let invcand = certify(&m, a.inverse(), &opts()).unwrap();
        assert!(invcand.is_certified(), "inverse closure: {}", invcand.report().max_residual);
        let unit = ev_product(&a, &invcand, &opts()).unwrap();
        assert!(unit.is_certified());
        let wv = weak_vector(&m, unit.field());
        let v = wv.value(&[0.8, 0.6]).unwrap();
        assert!(v[0].abs() < 1e-9 && v[1].abs() < 1e-9);

        // One-dimensional commutators certify wherever they are invertible.
        let f1 = semisimple(1);
        let m1 = f1.mult_view::<f64>();
        let c1 = certify(&m1, &f1.field_from_texts(&["1 + u1^2"]).unwrap(), &opts()).unwrap();
        let c2 = certify(&m1, &f1.field_from_texts(&["2 + u1"]).unwrap(), &opts()).unwrap();
        let br = ev_bracket(&c1, &c2, &opts()).unwrap();
        assert!(br.is_certified(), "1d bracket: {}", br.report().max_residual);
    }

    #[test]
    fn power_bracket_law_holds_on_certified_candidates() {
        let f = semisimple(2);
        let m = f.mult_view::<f64>();
        let cand = certify(
            &m,
            &f.field_from_texts(&["1 + u1^2", "1 + u2^2"]).unwrap(),
            &opts(),
        )
        .unwrap();
        assert!(cand.is_certified());
        let o = opts().with_tol(1e-8);
        for (n_pow, m_pow) in [(-1, 0), (0, 1), (1, 2), (-1, 2)] {
            let r = power_bracket_residual(&cand, n_pow, m_pow, &o).unwrap();
            assert!(r.pass, "({n_pow},{m_pow}): {}", r.max_residual);
        }
        let ir = inverse_residual(&cand, &opts().with_tol(1e-10)).unwrap();
        assert!(ir.pass, "inverse: {}", ir.max_residual);
    }

    #[test]
    fn decomposition_recovers_factor_candidates() {
        let f1 = semisimple(2);
        let f2 = nilpotent2();
        let prod = product_patch(&f1, &f2).unwrap();
        let e_field = prod
            .field_from_texts(&["1 + u1^2", "1 + u2^2", "1 + u3^2", "u3 * u4"])
            .unwrap();
        let (p1, p2, report) = decompose_on_product(&prod, &e_field, &opts()).unwrap();
        assert!(report.pass);
        assert!(report.max_residual < 1e-9);

        // Parts restrict to the original factor fields and certify there.
        let v1 = p1.value(&[0.5, 0.75]).unwrap();
        assert!((v1[0] - 1.25).abs() < 1e-12 && (v1[1] - 1.5625).abs() < 1e-12);
        let r1 = char_residual(&f1.mult_view(), &p1, &opts()).unwrap();
        assert!(r1.pass, "factor 1: {}", r1.max_residual);
        let r2 = char_residual(&f2.mult_view(), &p2, &opts()).unwrap();
        assert!(r2.pass, "factor 2: {}", r2.max_residual);

        // The unity decomposes into the factor unities.
        let (u1, u2, _) = decompose_on_product(&prod, &prod.unity_view(), &opts()).unwrap();
        assert_eq!(u1.value(&[0.5, 0.5]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(u2.value(&[0.5, 0.5]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn cross_terms_scale_the_decomposition_defect() {
        let prod = product_patch(&semisimple(1), &semisimple(1)).unwrap();
        let mut defects = Vec::new();
        for eps in [1e-3, 1e-2] {
            let e_field = prod
                .field_from_texts(&[&format!("1 + u1^2 + {eps} * u2"), "1 + u2^2"])
                .unwrap();
            match decompose_on_product(&prod, &e_field, &opts()) {
                Err(Error::DecompositionDefect { defect, .. }) => defects.push(defect),
                Err(e) => panic!("unexpected error: {e}"),
                Ok(_) => panic!("expected a decomposition defect"),
            }
        }
        let ratio = defects[1] / defects[0];
        assert!((5.0..=20.0).contains(&ratio), "defect scaling {ratio}");
    }
}
