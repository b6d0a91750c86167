//! Compatibility of metric pairs on a patch: the Nijenhuis obstruction,
//! pencil connections and curvature, the equivalent difference-tensor
//! conditions, the curvature condition tying the multiplication to a
//! metric, and the coform operators that transport one Levi-Civita
//! connection into the other.

use crate::error::{Error, Result};
use crate::expr::jet::Scalar;
use crate::expr::linalg::JetMatrix;
use crate::eventual::EventualCandidate;
use crate::field::{EndoView, MultView};
use crate::fmanifold::SampleOpts;
use crate::metric::MetricField;
use crate::report::CheckReport;
use std::sync::Arc;

/// Pencil weights used by default: spread across sign and magnitude.
pub const DEFAULT_LAMBDAS: [f64; 3] = [-0.5, 0.3, 2.0];

/// A = g* g̃ as an endomorphism view (A^k_j = g^{kb} g̃_{bj}).
pub fn transfer_endo<S: Scalar>(g: &MetricField<S>, gt: &MetricField<S>) -> EndoView<S> {
    let gv = g.clone();
    let gtv = gt.clone();
    let n = g.dim();
    let order = g.max_order().min(gt.max_order());
    EndoView::from_fn(Arc::clone(g.chart()), order, move |p, o| {
        let gi = gv.inverse_at(p, o)?;
        let gm = gtv.at(p, o)?;
        let mut out = Vec::with_capacity(n * n);
        for k in 0..n {
            for j in 0..n {
                let mut acc = gi.at(k, 0).mul(&gm.at(0, j));
                for b in 1..n {
                    acc = acc.add(&gi.at(k, b).mul(&gm.at(b, j)));
                }
                out.push(acc);
            }
        }
        Ok(out)
    })
}

/// Max component of the Nijenhuis tensor of an endomorphism field on
/// coordinate fields:
/// N^k_{ij} = −(A^m_i ∂_m A^k_j − A^m_j ∂_m A^k_i) + A^k_m(∂_i A^m_j − ∂_j A^m_i).
pub fn nijenhuis_residual<S: Scalar>(a: &EndoView<S>, opts: &SampleOpts) -> Result<CheckReport> {
    let n = a.chart().dim();
    let points = a.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let aj = a.at(p, 1)?;
        let av = |k: usize, j: usize| aj[k * n + j].value();
        let ap = |k: usize, j: usize, s: usize| aj[k * n + j].partial(s);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let mut acc = S::zero();
                    for mm in 0..n {
                        acc = acc - av(mm, i) * ap(k, j, mm);
                        acc = acc + av(mm, j) * ap(k, i, mm);
                        acc = acc + av(k, mm) * (ap(mm, j, i) - ap(mm, i, j));
                    }
                    worst = worst.max(acc.abs());
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "nijenhuis",
        a.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// The metric whose inverse is g* + λg̃*; evaluation reports a singular
/// system wherever the pencil degenerates.
pub fn pencil_metric<S: Scalar>(
    g: &MetricField<S>,
    gt: &MetricField<S>,
    lambda: f64,
) -> MetricField<S> {
    let gv = g.clone();
    let gtv = gt.clone();
    let n = g.dim();
    let order = g.max_order().min(gt.max_order());
    let lam = S::from_f64(lambda);
    MetricField::from_fn(Arc::clone(g.chart()), order, move |p, o| {
        let gi = gv.inverse_at(p, o)?;
        let gti = gtv.inverse_at(p, o)?;
        let sum = JetMatrix::from_fn(n, |i, j| gi.at(i, j).add(&gti.at(i, j).scale(lam)));
        crate::expr::linalg::invert_matrix_jet(&sum)
    })
}

fn pencil_points<S: Scalar>(
    g: &MetricField<S>,
    gt: &MetricField<S>,
    lambda: f64,
    opts: &SampleOpts,
) -> Result<Vec<Vec<S>>> {
    let h = pencil_metric(g, gt, lambda);
    g.chart()
        .sample_admissible::<S>(opts.seed, opts.count, |p| h.at(p, 0).map(|_| ()))
        .map_err(|e| match e {
            Error::DomainMostlySingular { .. } => Error::PencilDegenerate { lambda },
            other => other,
        })
}

/// Almost compatibility: max over λ, basis coforms and directions of
/// |g_λ*(∇^λ_X α) − g*(∇_X α) − λ g̃*(∇̃_X α)|.
pub fn almost_compat_residual<S: Scalar>(
    g: &MetricField<S>,
    gt: &MetricField<S>,
    lambdas: &[f64],
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = g.dim();
    let mut per_point = Vec::new();
    for &lambda in lambdas {
        let h = pencil_metric(g, gt, lambda);
        let lam = S::from_f64(lambda);
        for p in pencil_points(g, gt, lambda, opts)? {
            let hstar = h.inverse_at(&p, 0)?;
            let gstar = g.inverse_at(&p, 0)?;
            let gtstar = gt.inverse_at(&p, 0)?;
            let gam_h = h.christoffel_at(&p, 0)?;
            let gam_g = g.christoffel_at(&p, 0)?;
            let gam_gt = gt.christoffel_at(&p, 0)?;
            let mut worst = 0.0f64;
            for a in 0..n {
                for x in 0..n {
                    for j in 0..n {
                        let mut acc = S::zero();
                        for b in 0..n {
                            acc = acc - hstar.at(j, b).value() * gam_h[(x * n + b) * n + a].value();
                            acc = acc + gstar.at(j, b).value() * gam_g[(x * n + b) * n + a].value();
                            acc = acc
                                + lam
                                    * gtstar.at(j, b).value()
                                    * gam_gt[(x * n + b) * n + a].value();
                        }
                        worst = worst.max(acc.abs());
                    }
                }
            }
            per_point.push(worst);
        }
    }
    Ok(CheckReport::from_per_point(
        "almost-compatibility",
        g.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    )
    .with_note("lambdas", format!("{lambdas:?}")))
}

fn delta_pairing_residual<S: Scalar>(
    g: &MetricField<S>,
    gt: &MetricField<S>,
    pair_with_gt: bool,
    name: &str,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = g.dim();
    let points = g.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let pairing = if pair_with_gt {
            gt.inverse_at(p, 0)?
        } else {
            g.inverse_at(p, 0)?
        };
        let gam_g = g.christoffel_at(p, 0)?;
        let gam_gt = gt.christoffel_at(p, 0)?;
        // (Δ_x du^a)_b = Γ^{g,a}_{xb} − Γ̃^a_{xb}
        let d = |x: usize, a: usize, b: usize| {
            gam_g[(x * n + b) * n + a].value() - gam_gt[(x * n + b) * n + a].value()
        };
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in 0..n {
                for a in 0..n {
                    for bb in 0..n {
                        let mut acc = S::zero();
                        for b in 0..n {
                            for c in 0..n {
                                acc = acc
                                    + pairing.at(b, c).value()
                                        * (d(y, a, b) * d(x, bb, c) - d(x, a, b) * d(y, bb, c));
                            }
                        }
                        worst = worst.max(acc.abs());
                    }
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        name,
        g.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Compatibility via the difference tensor paired with g̃*:
/// g̃*(Δ_Yα, Δ_Xβ) = g̃*(Δ_Xα, Δ_Yβ).
pub fn compat_residual_g2<S: Scalar>(
    g: &MetricField<S>,
    gt: &MetricField<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    delta_pairing_residual(g, gt, true, "compatibility-gt-pairing", opts)
}

/// Same condition paired with g* instead; equivalent to the g̃* form.
pub fn compat_residual_g1<S: Scalar>(
    g: &MetricField<S>,
    gt: &MetricField<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    delta_pairing_residual(g, gt, false, "compatibility-g-pairing", opts)
}

/// Curvature side of compatibility:
/// max |g_λ*(R^λ α) − g*(R^g α) − λ g̃*(R^g̃ α)| over basis slots and λ.
pub fn curvature_pencil_residual<S: Scalar>(
    g: &MetricField<S>,
    gt: &MetricField<S>,
    lambdas: &[f64],
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = g.dim();
    let mut per_point = Vec::new();
    for &lambda in lambdas {
        let h = pencil_metric(g, gt, lambda);
        let lam = S::from_f64(lambda);
        for p in pencil_points(g, gt, lambda, opts)? {
            let hstar = h.inverse_at(&p, 0)?;
            let gstar = g.inverse_at(&p, 0)?;
            let gtstar = gt.inverse_at(&p, 0)?;
            let r_h = h.curvature_at(&p)?;
            let r_g = g.curvature_at(&p)?;
            let r_gt = gt.curvature_at(&p)?;
            let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
            let mut worst = 0.0f64;
            for a in 0..n {
                for i in 0..n {
                    for j in (i + 1)..n {
                        for b in 0..n {
                            let mut acc = S::zero();
                            for k in 0..n {
                                acc = acc - hstar.at(b, k).value() * r_h[idx(i, j, k, a)];
                                acc = acc + gstar.at(b, k).value() * r_g[idx(i, j, k, a)];
                                acc = acc + lam * gtstar.at(b, k).value() * r_gt[idx(i, j, k, a)];
                            }
                            worst = worst.max(acc.abs());
                        }
                    }
                }
            }
            per_point.push(worst);
        }
    }
    Ok(CheckReport::from_per_point(
        "curvature-pencil",
        g.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    )
    .with_note("lambdas", format!("{lambdas:?}")))
}

/// Curvature condition tying the multiplication to a metric:
/// max |Z∘R(V,Y)X + Y∘R(Z,V)X + V∘R(Y,Z)X| over basis 4-tuples.
pub fn riemannian_residual<S: Scalar>(
    m: &MultView<S>,
    g: &MetricField<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = m.dim();
    let points = g.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let r = g.curvature_at(p)?;
        let c = m.at(p, 0)?;
        let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    for v in 0..n {
                        for k in 0..n {
                            let mut acc = S::zero();
                            for l in 0..n {
                                acc = acc + c.c(z, l, k).value() * r[idx(v, y, x, l)];
                                acc = acc + c.c(y, l, k).value() * r[idx(z, v, x, l)];
                                acc = acc + c.c(v, l, k).value() * r[idx(y, z, x, l)];
                            }
                            worst = worst.max(acc.abs());
                        }
                    }
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "riemannian-condition",
        g.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Rotation-coefficient oracle for diagonal metrics:
/// β_{ij} = ∂_i√g_{jj}/√g_{ii}; residual of ∂_kβ_{ij} = β_{ik}β_{kj} over
/// distinct (i,j,k). An independent path to the same geometry as the
/// curvature condition on diagonal fixtures.
pub fn semi_hamiltonian_residual<S: Scalar>(
    g: &MetricField<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = g.dim();
    let points = g.chart().sample::<S>(opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let gm = g.at(p, 2)?;
        for i in 0..n {
            for j in 0..n {
                if i != j && gm.at(i, j).value().abs() > 1e-12 {
                    return Err(Error::invalid(
                        "rotation-coefficient oracle requires a diagonal metric",
                    ));
                }
            }
        }
        let s: Vec<_> = (0..n).map(|i| gm.at(i, i).sqrt()).collect();
        // β_{ij} and ∂_kβ_{ij} from the jets of √g_{jj}.
        let beta = |i: usize, j: usize| s[j].partial(i) / s[i].value();
        let dbeta = |k: usize, i: usize, j: usize| {
            (s[j].second(k, i) * s[i].value() - s[j].partial(i) * s[i].partial(k))
                / (s[i].value() * s[i].value())
        };
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    worst = worst.max((dbeta(k, i, j) - beta(i, k) * beta(k, j)).abs());
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "rotation-coefficients",
        g.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

// ---------------------------------------------------------------------------
// Coform transport operators

/// Per-point ingredients for the coform operators: metric values and
/// first partials, the coform multiplication, and the Levi-Civita data.
struct CoformContext<S: Scalar> {
    n: usize,
    c0: Vec<S>,      // c^k_{ij} values, (i·n+j)·n+k (full, symmetrized)
    gm: Vec<S>,      // g̃_{ij}
    gi: Vec<S>,      // g̃^{ij}
    gamma: Vec<S>,   // Γ̃^k_{ij}, (i·n+j)·n+k
}

impl<S: Scalar> CoformContext<S> {
    fn build(m: &MultView<S>, gt: &MetricField<S>, p: &[S]) -> Result<CoformContext<S>> {
        let n = m.dim();
        let c = m.at(p, 0)?;
        let mut c0 = vec![S::zero(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    c0[(i * n + j) * n + k] = c.c(i, j, k).value();
                }
            }
        }
        let gmj = gt.at(p, 0)?;
        let gij = gt.inverse_at(p, 0)?;
        let mut gm = vec![S::zero(); n * n];
        let mut gi = vec![S::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                gm[i * n + j] = gmj.at(i, j).value();
                gi[i * n + j] = gij.at(i, j).value();
            }
        }
        let gamma = gt
            .christoffel_at(p, 0)?
            .iter()
            .map(|j| j.value())
            .collect();
        Ok(CoformContext { n, c0, gm, gi, gamma })
    }

    /// Induced multiplication on coforms: (u∘v)_k = g̃_{kl} c^l_{ab} (g̃*u)^a (g̃*v)^b.
    fn cprod(&self, u: &[S], v: &[S]) -> Vec<S> {
        let n = self.n;
        let sharp = |w: &[S], a: usize| {
            let mut acc = S::zero();
            for mm in 0..n {
                acc = acc + self.gi[a * n + mm] * w[mm];
            }
            acc
        };
        let us: Vec<S> = (0..n).map(|a| sharp(u, a)).collect();
        let vs: Vec<S> = (0..n).map(|b| sharp(v, b)).collect();
        let mut out = vec![S::zero(); n];
        for k in 0..n {
            let mut acc = S::zero();
            for a in 0..n {
                for b in 0..n {
                    acc = acc + self.c0[(a * n + b) * n + k] * us[a] * vs[b];
                }
            }
            // lower the product index
            out[k] = acc;
        }
        let mut lowered = vec![S::zero(); n];
        for k in 0..n {
            let mut acc = S::zero();
            for l in 0..n {
                acc = acc + self.gm[k * n + l] * out[l];
            }
            lowered[k] = acc;
        }
        lowered
    }
}

/// (L_E g̃)_{ij} values at a point.
pub fn lie_metric_at<S: Scalar>(
    gt: &MetricField<S>,
    e_field: &crate::field::VectorFieldView<S>,
    p: &[S],
) -> Result<Vec<S>> {
    let n = gt.dim();
    let gm = gt.at(p, 1)?;
    let ej = e_field.at(p, 1)?;
    let mut out = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = S::zero();
            for mm in 0..n {
                acc = acc + ej[mm].value() * gm.at(i, j).partial(mm);
                acc = acc + ej[mm].partial(i) * gm.at(mm, j).value();
                acc = acc + ej[mm].partial(j) * gm.at(i, mm).value();
            }
            out[i * n + j] = acc;
        }
    }
    Ok(out)
}

/// Matrix of the coform operator
/// S(α) = ½ E^{-1,♭}∘(((L_E g̃)(e) + [e,E]♭)∘α − 2∇̃_{g̃*α}E♭)
/// at one point: entry (b,a) is (S(du^a))_b, layout b·n + a.
pub fn s_matrix_at<S: Scalar>(
    m: &MultView<S>,
    gt: &MetricField<S>,
    cand: &EventualCandidate<S>,
    p: &[S],
) -> Result<Vec<S>> {
    let n = m.dim();
    let ctx = CoformContext::build(m, gt, p)?;
    let gm = gt.at(p, 1)?;
    let ej = cand.field().at(p, 1)?;
    let uj = m.unity().at(p, 1)?;
    let inv = cand.inverse().at(p, 0)?;

    // w = (L_E g̃)(e) + [e,E]♭
    let lie = lie_metric_at(gt, cand.field(), p)?;
    let mut w = vec![S::zero(); n];
    for j in 0..n {
        let mut acc = S::zero();
        for i in 0..n {
            acc = acc + lie[i * n + j] * uj[i].value();
        }
        let mut br_flat = S::zero();
        for k in 0..n {
            let mut br = S::zero();
            for mm in 0..n {
                br = br + uj[mm].value() * ej[k].partial(mm);
                br = br - ej[mm].value() * uj[k].partial(mm);
            }
            br_flat = br_flat + ctx.gm[j * n + k] * br;
        }
        w[j] = acc + br_flat;
    }

    // E♭ with first partials: (E♭)_j = g̃_{jm}E^m.
    let eflat_partial = |i: usize, j: usize| {
        let mut acc = S::zero();
        for mm in 0..n {
            acc = acc + gm.at(j, mm).partial(i) * ej[mm].value();
            acc = acc + gm.at(j, mm).value() * ej[mm].partial(i);
        }
        acc
    };
    let eflat: Vec<S> = (0..n)
        .map(|j| {
            let mut acc = S::zero();
            for mm in 0..n {
                acc = acc + ctx.gm[j * n + mm] * ej[mm].value();
            }
            acc
        })
        .collect();

    // E^{-1,♭}
    let iflat: Vec<S> = (0..n)
        .map(|j| {
            let mut acc = S::zero();
            for mm in 0..n {
                acc = acc + ctx.gm[j * n + mm] * inv[mm].value();
            }
            acc
        })
        .collect();

    let mut out = vec![S::zero(); n * n];
    for a in 0..n {
        // ∇̃_{g̃*du^a} E♭: contract the covariant derivative with g̃^{a·}.
        let mut nab = vec![S::zero(); n];
        for j in 0..n {
            let mut acc = S::zero();
            for i in 0..n {
                let mut cov = eflat_partial(i, j);
                for mm in 0..n {
                    cov = cov - ctx.gamma[(i * n + j) * n + mm] * eflat[mm];
                }
                acc = acc + ctx.gi[a * n + i] * cov;
            }
            nab[j] = acc;
        }
        let alpha: Vec<S> = (0..n)
            .map(|i| if i == a { S::one() } else { S::zero() })
            .collect();
        let mut inner = ctx.cprod(&w, &alpha);
        for j in 0..n {
            inner[j] = inner[j] - S::from_f64(2.0) * nab[j];
        }
        let s_col = ctx.cprod(&iflat, &inner);
        for b in 0..n {
            out[b * n + a] = s_col[b] * S::from_f64(0.5);
        }
    }
    Ok(out)
}

/// Residual of ∇_Yα = ∇̃_Yα + S(α)∘Y♭ on basis coforms and directions,
/// with ∇ the Levi-Civita connection of the intersection metric.
pub fn s_transport_residual<S: Scalar>(
    m: &MultView<S>,
    gt: &MetricField<S>,
    g: &MetricField<S>,
    cand: &EventualCandidate<S>,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = m.dim();
    let points = crate::eventual::sample_invertible(m, cand.field(), opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let ctx = CoformContext::build(m, gt, p)?;
        let smat = s_matrix_at(m, gt, cand, p)?;
        let gam_g = g.christoffel_at(p, 0)?;
        let gam_gt = gt.christoffel_at(p, 0)?;
        let mut worst = 0.0f64;
        for a in 0..n {
            let s_col: Vec<S> = (0..n).map(|b| smat[b * n + a]).collect();
            for y in 0..n {
                let yflat: Vec<S> = (0..n).map(|j| ctx.gm[j * n + y]).collect();
                let rhs = ctx.cprod(&s_col, &yflat);
                for b in 0..n {
                    let lhs = -gam_g[(y * n + b) * n + a].value()
                        + gam_gt[(y * n + b) * n + a].value();
                    worst = worst.max((lhs - rhs[b]).abs());
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "connection-transport",
        m.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Residual of the coform curvature relation
/// R^g(X,Y)α = R^g̃(X,Y)α + Q(α,Y)∘X♭ − Q(α,X)∘Y♭ with
/// Q(α,X) = S(S(α)∘X♭) − (∇̃_X S)(α); the derivative of S uses central
/// differences of the S matrix with the Christoffel correction.
pub fn q_curvature_residual<S: Scalar>(
    m: &MultView<S>,
    gt: &MetricField<S>,
    g: &MetricField<S>,
    cand: &EventualCandidate<S>,
    fd_step: f64,
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = m.dim();
    let points = crate::eventual::sample_invertible(m, cand.field(), opts.seed, opts.count)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let ctx = CoformContext::build(m, gt, p)?;
        let smat = s_matrix_at(m, gt, cand, p)?;
        let r_g = g.curvature_at(p)?;
        let r_gt = gt.curvature_at(p)?;

        // Central differences of the S matrix along each coordinate.
        let mut ds = Vec::with_capacity(n);
        for x in 0..n {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[x] = hi[x] + S::from_f64(fd_step);
            lo[x] = lo[x] - S::from_f64(fd_step);
            let s_hi = s_matrix_at(m, gt, cand, &hi)?;
            let s_lo = s_matrix_at(m, gt, cand, &lo)?;
            let scale = S::from_f64(1.0 / (2.0 * fd_step));
            ds.push(
                s_hi.iter()
                    .zip(&s_lo)
                    .map(|(h, l)| (*h - *l) * scale)
                    .collect::<Vec<S>>(),
            );
        }

        let apply_s = |beta: &[S]| -> Vec<S> {
            (0..n)
                .map(|b| {
                    let mut acc = S::zero();
                    for a in 0..n {
                        acc = acc + smat[b * n + a] * beta[a];
                    }
                    acc
                })
                .collect()
        };

        // Q(du^a, ∂_x)
        let q = |a: usize, x: usize| -> Vec<S> {
            let s_col: Vec<S> = (0..n).map(|b| smat[b * n + a]).collect();
            let xflat: Vec<S> = (0..n).map(|j| ctx.gm[j * n + x]).collect();
            let first = apply_s(&ctx.cprod(&s_col, &xflat));
            // (∇̃_x S)(du^a)_b = ∂_x S_{ba} − Γ̃^m_{xb} S_{ma} + Σ_m S_{bm} Γ̃^a_{xm}
            (0..n)
                .map(|b| {
                    let mut nabla_s = ds[x][b * n + a];
                    for mm in 0..n {
                        nabla_s = nabla_s - ctx.gamma[(x * n + b) * n + mm] * smat[mm * n + a];
                        nabla_s = nabla_s + smat[b * n + mm] * ctx.gamma[(x * n + mm) * n + a];
                    }
                    first[b] - nabla_s
                })
                .collect()
        };

        let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
        let mut worst = 0.0f64;
        for a in 0..n {
            for i in 0..n {
                for j in (i + 1)..n {
                    let qj = q(a, j);
                    let qi = q(a, i);
                    let iflat: Vec<S> = (0..n).map(|b| ctx.gm[b * n + i]).collect();
                    let jflat: Vec<S> = (0..n).map(|b| ctx.gm[b * n + j]).collect();
                    let qj_i = ctx.cprod(&qj, &iflat);
                    let qi_j = ctx.cprod(&qi, &jflat);
                    for k in 0..n {
                        // (R(∂_i,∂_j)du^a)_k = −R^a_{kij}
                        let lhs = -r_g[idx(i, j, k, a)];
                        let rhs = -r_gt[idx(i, j, k, a)] + qj_i[k] - qi_j[k];
                        worst = worst.max((lhs - rhs).abs());
                    }
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "curvature-transport",
        m.chart().name(),
        opts.tol,
        opts.seed,
        per_point,
    )
    .with_note("fd_step", format!("{fd_step}")))
}
