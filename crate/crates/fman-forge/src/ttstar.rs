//! Diagonal tt*-geometry on a complex semisimple patch: hermitian data and
//! a real structure stored entrywise, Chern-connection coefficients, the
//! two harmonicity residuals, compatibility of the derived bilinear form,
//! the two twist-invariance conditions, the dual structure with a
//! principal-branch square root, and the flatness of the z-pencil of
//! connections.
//!
//! Conventions. The multiplication is diagonal in the chart coordinates,
//! ∂_i∘∂_i = m_i∂_i (canonical data has m_i = 1). The real structure acts
//! antilinearly through its stored coefficients, k̃(Σa^i∂_i) =
//! Σk_i·conj(a^i)∂_i, and the hermitian pairing is conjugate-linear in its
//! second argument, so the complex-bilinear form pairing ∂_i against
//! k̃∂_i has diagonal entries g̃_ii = H_ii·conj(k_i).

use crate::error::{Error, Result};
use crate::expr::jet::Jet;
use crate::expr::linalg::{invert_matrix_jet, JetMatrix};
use crate::expr::parse;
use crate::expr::{Expr, Flavor, Func, Kind};
use crate::field::{mult_index, MultTable};
use crate::fmanifold::{FPatch, SampleOpts};
use crate::patch::Chart;
use crate::report::CheckReport;
use num_complex::Complex64;
use std::sync::Arc;

type CJet = Jet<Complex64>;

/// Default parameters for the pencil of connections: one real, one
/// imaginary, one off the unit circle. z = 0 is a pole and is excluded.
pub fn default_pencil_points() -> Vec<Complex64> {
    vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(2.0, 0.0),
    ]
}

fn is_zero_lit(e: &Expr) -> bool {
    matches!(e.root().kind, Kind::Lit(v) if v == 0.0)
}

fn fmt_point(chart: &Chart, p: &[Complex64]) -> String {
    chart
        .coords()
        .iter()
        .zip(p)
        .map(|(name, v)| format!("{name} = {:.4}{:+.4}i", v.re, v.im))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Diagonal hermitian data on a complex patch with diagonal multiplication:
/// positive real-valued hermitian entries H_ii, unit-modulus real-structure
/// coefficients k_i, and an optional diagonal eventual identity with
/// holomorphic components f_i(u^i).
#[derive(Clone)]
pub struct DiagTTData {
    patch: Arc<FPatch>,
    h_diag: Vec<Expr>,
    /// log H_ii, kept symbolically so connection coefficients and their
    /// derivatives come from exact jets of the logarithm.
    log_h: Vec<Expr>,
    k_diag: Vec<Expr>,
    mult_diag: Vec<Expr>,
    eventual: Option<Vec<Expr>>,
}

impl DiagTTData {
    /// Wrap a complex patch whose multiplication table is diagonal. The
    /// entries are validated structurally here; the pointwise invariants
    /// (H real positive, |k| = 1, eventual components holomorphic) are
    /// checked against sample points by every residual operation.
    pub fn new(
        patch: Arc<FPatch>,
        h_diag: Vec<Expr>,
        k_diag: Vec<Expr>,
        eventual: Option<Vec<Expr>>,
    ) -> Result<DiagTTData> {
        let n = patch.dim();
        if patch.chart().flavor() != Flavor::Complex {
            return Err(Error::invalid(
                "tt*-data requires a complex chart".to_string(),
            ));
        }
        if h_diag.len() != n || k_diag.len() != n {
            return Err(Error::invalid(format!(
                "expected {n} hermitian and {n} real-structure entries, got {} and {}",
                h_diag.len(),
                k_diag.len()
            )));
        }
        if let Some(ev) = &eventual {
            if ev.len() != n {
                return Err(Error::invalid(format!(
                    "eventual identity has {} components on a {n}-dimensional patch",
                    ev.len()
                )));
            }
        }
        let table = patch.mult_table();
        let mut mult_diag = Vec::with_capacity(n);
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    if i == j && j == k {
                        continue;
                    }
                    if !is_zero_lit(table.entry(i, j, k)) {
                        return Err(Error::invalid(format!(
                            "multiplication is not diagonal: entry ({i},{j};{k}) is nonzero"
                        )));
                    }
                }
            }
            mult_diag.push(table.entry(i, i, i).clone());
        }
        let log_h = h_diag.iter().map(|h| h.call(Func::Log)).collect();
        Ok(DiagTTData {
            patch,
            h_diag,
            log_h,
            k_diag,
            mult_diag,
            eventual,
        })
    }

    /// Canonical diagonal data (∂_i∘∂_i = ∂_i) on a fresh complex chart,
    /// with entries parsed from source texts.
    pub fn canonical(
        name: impl Into<String>,
        re_box: Vec<(f64, f64)>,
        im_box: Vec<(f64, f64)>,
        h_texts: &[&str],
        k_texts: &[&str],
        ev_texts: Option<&[&str]>,
    ) -> Result<DiagTTData> {
        let n = re_box.len();
        let coords = crate::patch::default_coords(n);
        let chart = Chart::new_complex(name, Arc::clone(&coords), re_box, im_box);
        let mult = MultTable::semisimple(&coords, Flavor::Complex);
        let unity = (0..n)
            .map(|_| Expr::lit(1.0, &coords, Flavor::Complex))
            .collect();
        let patch = FPatch::new(chart, mult, unity, true);
        let parse_all = |texts: &[&str]| -> Result<Vec<Expr>> {
            texts
                .iter()
                .map(|t| parse::parse(t, &coords, Flavor::Complex))
                .collect()
        };
        let ev = match ev_texts {
            Some(texts) => Some(parse_all(texts)?),
            None => None,
        };
        DiagTTData::new(patch, parse_all(h_texts)?, parse_all(k_texts)?, ev)
    }

    pub fn patch(&self) -> &Arc<FPatch> {
        &self.patch
    }

    pub fn dim(&self) -> usize {
        self.patch.dim()
    }

    pub fn h_entries(&self) -> &[Expr] {
        &self.h_diag
    }

    pub fn k_entries(&self) -> &[Expr] {
        &self.k_diag
    }

    pub fn mult_entries(&self) -> &[Expr] {
        &self.mult_diag
    }

    pub fn eventual(&self) -> Option<&Vec<Expr>> {
        self.eventual.as_ref()
    }

    /// Sample points and verify the data invariants at each of them:
    /// H_ii real-valued (value equals its conjugate to 1e-12) and positive,
    /// |k_i| = 1 to 1e-10, and any stored eventual component holomorphic.
    fn validated_points(&self, opts: &SampleOpts) -> Result<Vec<Vec<Complex64>>> {
        let points = self.patch.chart().sample::<Complex64>(opts.seed, opts.count)?;
        for p in &points {
            for (i, h) in self.h_diag.iter().enumerate() {
                let v = h.eval(p, 0)?.value();
                if (v - v.conj()).norm() > 1e-12 * (1.0 + v.norm()) {
                    return Err(Error::invalid(format!(
                        "hermitian entry {} is not real-valued at {}: {v}",
                        i + 1,
                        fmt_point(self.patch.chart(), p)
                    )));
                }
                if v.re <= 0.0 {
                    return Err(Error::invalid(format!(
                        "hermitian entry {} is not positive at {}: {v}",
                        i + 1,
                        fmt_point(self.patch.chart(), p)
                    )));
                }
            }
            for (i, k) in self.k_diag.iter().enumerate() {
                let v = k.eval(p, 0)?.value();
                if (v.norm() - 1.0).abs() > 1e-10 {
                    return Err(Error::invalid(format!(
                        "real-structure entry {} has modulus {:.6e} at {}; expected unit",
                        i + 1,
                        v.norm(),
                        fmt_point(self.patch.chart(), p)
                    )));
                }
            }
        }
        if let Some(ev) = &self.eventual {
            check_holomorphic(ev, &points, self.patch.chart(), "eventual component")?;
        }
        Ok(points)
    }

    fn jets(&self, exprs: &[Expr], p: &[Complex64], order: usize) -> Result<Vec<CJet>> {
        exprs.iter().map(|e| e.eval(p, order)).collect()
    }
}

/// Reject expressions whose antiholomorphic Wirtinger derivatives exceed
/// 1e-12 at any of the given points.
fn check_holomorphic(
    exprs: &[Expr],
    points: &[Vec<Complex64>],
    chart: &Chart,
    what: &str,
) -> Result<()> {
    let n = chart.dim();
    for p in points {
        for (i, f) in exprs.iter().enumerate() {
            let j = f.eval(p, 1)?;
            let scale = 1.0 + j.value().norm();
            for s in n..2 * n {
                if j.partial(s).norm() > 1e-12 * scale {
                    return Err(Error::invalid(format!(
                        "{what} {} is not holomorphic: antiholomorphic derivative {:.3e} at {}",
                        i + 1,
                        j.partial(s).norm(),
                        fmt_point(chart, p)
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Diagonal entries of the complex bilinear form obtained by pairing the
/// frame against its image under the real structure: g̃_ii = H_ii·conj(k_i).
pub fn derived_bilinear(data: &DiagTTData) -> Vec<Expr> {
    data.h_diag
        .iter()
        .zip(&data.k_diag)
        .map(|(h, k)| h.mul(&k.call(Func::Conj)))
        .collect()
}

/// Connection coefficients of the hermitian structure in the holomorphic
/// frame at one point: entry x·n + i is the coefficient of ∂_i in D_{∂_x}∂_i,
/// namely ∂_x log H_ii. The (0,1)-part of the connection is ∂̄, whose
/// coefficients in this frame vanish identically.
pub fn chern_diag(data: &DiagTTData, point: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = data.dim();
    let logh = data.jets(&data.log_h, point, 1)?;
    let mut out = Vec::with_capacity(n * n);
    for x in 0..n {
        for i in 0..n {
            out.push(logh[i].partial(x));
        }
    }
    Ok(out)
}

/// Matrix commutator ab − ba of two row-major n×n complex matrices.
pub fn commutator(n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for s in 0..n {
                acc += a[r * n + s] * b[s * n + c] - b[r * n + s] * a[s * n + c];
            }
            out[r * n + c] = acc;
        }
    }
    out
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// n×n matrix of multiplication by ∂_x: a single diagonal entry m_x at
/// (x,x) for a diagonal multiplication.
fn mult_matrix(n: usize, x: usize, mx: Complex64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    out[x * n + x] = mx;
    out
}

/// Covariant derivative of an endomorphism along a slot for a connection
/// that is diagonal in the frame: (D_aT)^l_k = ∂_aT^l_k + (γ_a^l − γ_a^k)T^l_k.
fn endo_cov_deriv(
    n: usize,
    gamma: impl Fn(usize) -> Complex64,
    t: &[Complex64],
    dt: &[Complex64],
) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for l in 0..n {
        for k in 0..n {
            out[l * n + k] = dt[l * n + k] + (gamma(l) - gamma(k)) * t[l * n + k];
        }
    }
    out
}

/// The two harmonicity residuals. The first antisymmetrizes the covariant
/// derivative of the multiplication operators over coordinate pairs,
/// (D_aC_b − D_bC_a); the second evaluates R_{a,b̄} + [C_a, C♭_b̄] where
/// C♭ is the hermitian adjoint. For diagonal data the first vanishes
/// identically and the second reduces to |∂_a∂_b̄ log H_kk|.
pub fn ttstar_residuals(
    data: &DiagTTData,
    opts: &SampleOpts,
) -> Result<(CheckReport, CheckReport)> {
    let n = data.dim();
    let points = data.validated_points(opts)?;
    let mut per1 = Vec::with_capacity(points.len());
    let mut per2 = Vec::with_capacity(points.len());
    for p in &points {
        let logh = data.jets(&data.log_h, p, 2)?;
        let m = data.jets(&data.mult_diag, p, 1)?;
        let mut worst1 = 0.0f64;
        for a in 0..n {
            let gamma_a = |l: usize| logh[l].partial(a);
            for b in (a + 1)..n {
                let gamma_b = |l: usize| logh[l].partial(b);
                let cb = mult_matrix(n, b, m[b].value());
                let dcb_a = mult_matrix(n, b, m[b].partial(a));
                let ca = mult_matrix(n, a, m[a].value());
                let dca_b = mult_matrix(n, a, m[a].partial(b));
                let dacb = endo_cov_deriv(n, gamma_a, &cb, &dcb_a);
                let dbca = endo_cov_deriv(n, gamma_b, &ca, &dca_b);
                let diff: Vec<Complex64> =
                    dacb.iter().zip(&dbca).map(|(x, y)| x - y).collect();
                worst1 = worst1.max(max_abs(&diff));
            }
        }
        per1.push(worst1);

        let mut worst2 = 0.0f64;
        for a in 0..n {
            let ca = mult_matrix(n, a, m[a].value());
            for b in 0..n {
                let cb_adj = mult_matrix(n, b, m[b].value().conj());
                let mut total = commutator(n, &ca, &cb_adj);
                for k in 0..n {
                    total[k * n + k] -= logh[k].second(a, n + b);
                }
                worst2 = worst2.max(max_abs(&total));
            }
        }
        per2.push(worst2);
    }
    let patch = data.patch.name();
    Ok((
        CheckReport::from_per_point("higgs-symmetry", patch, opts.tol, opts.seed, per1),
        CheckReport::from_per_point("curvature-commutator", patch, opts.tol, opts.seed, per2),
    ))
}

/// Residuals of the derived bilinear form: symmetry, invariance for the
/// multiplication, and parallelism for the hermitian connection in both
/// the holomorphic and antiholomorphic directions.
pub fn dchk_residual(data: &DiagTTData, opts: &SampleOpts) -> Result<CheckReport> {
    let n = data.dim();
    let points = data.validated_points(opts)?;
    let gexprs = derived_bilinear(data);
    let zero = Complex64::new(0.0, 0.0);
    let mut per_point = Vec::with_capacity(points.len());
    let (mut sym_max, mut inv_max, mut hol_max, mut anti_max) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in &points {
        let gd = data.jets(&gexprs, p, 1)?;
        let logh = data.jets(&data.log_h, p, 1)?;
        let m = data.jets(&data.mult_diag, p, 0)?;
        // Full matrix of the form; diagonal storage makes symmetry
        // structural, but the residual is still evaluated.
        let gmat = |i: usize, j: usize| if i == j { gd[i].value() } else { zero };
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let s = (gmat(i, j) - gmat(j, i)).norm();
                sym_max = sym_max.max(s);
                worst = worst.max(s);
                for k in 0..n {
                    // g̃(∂_i∘∂_j, ∂_k) − g̃(∂_i, ∂_j∘∂_k) for the diagonal
                    // multiplication ∂_i∘∂_j = δ_ij m_i ∂_i.
                    let lhs = if i == j { m[i].value() * gmat(i, k) } else { zero };
                    let rhs = if j == k { m[j].value() * gmat(i, j) } else { zero };
                    let r = (lhs - rhs).norm();
                    inv_max = inv_max.max(r);
                    worst = worst.max(r);
                }
            }
        }
        for i in 0..n {
            for a in 0..n {
                // (D_ag̃)_ii = ∂_ag̃_ii − 2∂_a(log H_ii)·g̃_ii in holomorphic
                // directions; the (0,1)-part of the connection is ∂̄, so the
                // antiholomorphic residual is the bare derivative.
                let hol = (gd[i].partial(a)
                    - logh[i].partial(a) * gd[i].value() * 2.0)
                    .norm();
                let anti = gd[i].partial(n + a).norm();
                hol_max = hol_max.max(hol);
                anti_max = anti_max.max(anti);
                worst = worst.max(hol).max(anti);
            }
        }
        per_point.push(worst);
    }
    let mut report = CheckReport::from_per_point(
        "bilinear-compatibility",
        data.patch.name(),
        opts.tol,
        opts.seed,
        per_point,
    );
    report.notes.insert("symmetry".into(), format!("{sym_max:.3e}"));
    report.notes.insert("invariance".into(), format!("{inv_max:.3e}"));
    report
        .notes
        .insert("parallel-(1,0)".into(), format!("{hol_max:.3e}"));
    report
        .notes
        .insert("parallel-(0,1)".into(), format!("{anti_max:.3e}"));
    Ok(report)
}

fn herm1_named(
    data: &DiagTTData,
    ev: &[Expr],
    opts: &SampleOpts,
    name: &str,
) -> Result<CheckReport> {
    let n = data.dim();
    if ev.len() != n {
        return Err(Error::invalid(format!(
            "eventual identity has {} components on a {n}-dimensional patch",
            ev.len()
        )));
    }
    let points = data.validated_points(opts)?;
    check_holomorphic(ev, &points, data.patch.chart(), "eventual component")?;
    let zero = Complex64::new(0.0, 0.0);
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let logh = data.jets(&data.log_h, p, 1)?;
        let m = data.jets(&data.mult_diag, p, 1)?;
        let f = data.jets(ev, p, 1)?;
        // E∘∂_p∘∂_p = q_p∂_p with q_p = f_p·m_p²; ∂_y∘∂_p = δ_yp m_p∂_p.
        let q: Vec<CJet> = (0..n).map(|i| f[i].mul(&m[i]).mul(&m[i])).collect();
        let gamma = |x: usize, l: usize| logh[l].partial(x);
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in (x + 1)..n {
                for pp in 0..n {
                    let dj = |j: &CJet, dir: usize| j.partial(dir) + j.value() * gamma(dir, pp);
                    let t1 = if y == pp { dj(&q[pp], x) } else { zero }
                        - if x == pp { dj(&q[pp], y) } else { zero };
                    let v = if y == pp { dj(&m[pp], x) } else { zero }
                        - if x == pp { dj(&m[pp], y) } else { zero };
                    let t2 = f[pp].value() * m[pp].value() * v;
                    worst = worst.max((t1 - t2).norm());
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        name,
        data.patch.name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Antisymmetrized covariant derivative of the twisted products over
/// holomorphic basis triples:
/// D_X(E∘Y∘Z) − D_Y(E∘X∘Z) − E∘(D_X(Y∘Z) − D_Y(X∘Z)).
pub fn herm1_residual(
    data: &DiagTTData,
    ev: &[Expr],
    opts: &SampleOpts,
) -> Result<CheckReport> {
    herm1_named(data, ev, opts, "twisted-higgs-symmetry")
}

/// The same condition evaluated with a full (possibly non-diagonal)
/// hermitian matrix, whose connection is assembled from the matrix and its
/// inverse. `h_entries` is row-major n×n and must be hermitian at the
/// sample points. Diagonal data reproduces `herm1_residual`; data with
/// off-diagonal entries is reported without any pass guarantee.
pub fn herm1_full_residual(
    patch: &Arc<FPatch>,
    h_entries: &[Expr],
    ev: &[Expr],
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = patch.dim();
    if patch.chart().flavor() != Flavor::Complex {
        return Err(Error::invalid(
            "tt*-data requires a complex chart".to_string(),
        ));
    }
    if h_entries.len() != n * n || ev.len() != n {
        return Err(Error::invalid(format!(
            "expected {} hermitian entries and {n} eventual components, got {} and {}",
            n * n,
            h_entries.len(),
            ev.len()
        )));
    }
    let points = patch.chart().sample::<Complex64>(opts.seed, opts.count)?;
    check_holomorphic(ev, &points, patch.chart(), "eventual component")?;
    let mv = patch.mult_view::<Complex64>();
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let hj: Vec<CJet> = h_entries
            .iter()
            .map(|e| e.eval(p, 1))
            .collect::<Result<_>>()?;
        for r in 0..n {
            for c in 0..n {
                let d = hj[r * n + c].value() - hj[c * n + r].value().conj();
                if d.norm() > 1e-12 * (1.0 + hj[r * n + c].value().norm()) {
                    return Err(Error::invalid(format!(
                        "hermitian matrix is not self-adjoint at {}: entry ({r},{c})",
                        fmt_point(patch.chart(), p)
                    )));
                }
            }
        }
        let hm = JetMatrix::from_rows(n, hj.clone());
        let hinv = invert_matrix_jet(&hm)?;
        // Connection in the holomorphic frame: the coefficient of ∂_k in
        // D_x∂_l is a_x[k][l] = Σ_s ∂_xH_{ls}·(H^{-1})_{sk}.
        let a = |x: usize, k: usize, l: usize| {
            let mut acc = Complex64::new(0.0, 0.0);
            for s in 0..n {
                acc += hj[l * n + s].partial(x) * hinv.at(s, k).value();
            }
            acc
        };
        let cov = |x: usize, w: &[CJet]| -> Vec<Complex64> {
            (0..n)
                .map(|k| {
                    let mut acc = w[k].partial(x);
                    for l in 0..n {
                        acc += a(x, k, l) * w[l].value();
                    }
                    acc
                })
                .collect()
        };
        let mj = mv.at(p, 1)?;
        let evj = data_jets(ev, p, 1)?;
        let prod_values = |u: &[Complex64], v: &[Complex64]| -> Vec<Complex64> {
            (0..n)
                .map(|k| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..n {
                        for j in 0..n {
                            acc += mj.c(i, j, k).value() * u[i] * v[j];
                        }
                    }
                    acc
                })
                .collect()
        };
        let evv: Vec<Complex64> = evj.iter().map(|j| j.value()).collect();
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in (x + 1)..n {
                for pp in 0..n {
                    let yz: Vec<CJet> = (0..n).map(|k| mj.c(y, pp, k).clone()).collect();
                    let xz: Vec<CJet> = (0..n).map(|k| mj.c(x, pp, k).clone()).collect();
                    let eyz = mj.product(&evj, &yz);
                    let exz = mj.product(&evj, &xz);
                    let t1a = cov(x, &eyz);
                    let t1b = cov(y, &exz);
                    let va = cov(x, &yz);
                    let vb = cov(y, &xz);
                    let inner: Vec<Complex64> =
                        va.iter().zip(&vb).map(|(u, v)| u - v).collect();
                    let t2 = prod_values(&evv, &inner);
                    for k in 0..n {
                        worst = worst.max((t1a[k] - t1b[k] - t2[k]).norm());
                    }
                }
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "twisted-higgs-symmetry-full",
        patch.name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

fn data_jets(exprs: &[Expr], p: &[Complex64], order: usize) -> Result<Vec<CJet>> {
    exprs.iter().map(|e| e.eval(p, order)).collect()
}

/// Invariance of the Higgs–real-structure commutator under the inverse
/// twist: ‖[C_X, k̃C_Yk̃] − [C_{E^{-1}∘X}, k̃C_{E^{-1}∘Y}k̃]‖ over basis
/// pairs, where conjugating a multiplication operator by the real
/// structure conjugates its coefficients.
pub fn herm2_residual(
    data: &DiagTTData,
    ev: &[Expr],
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = data.dim();
    if ev.len() != n {
        return Err(Error::invalid(format!(
            "eventual identity has {} components on a {n}-dimensional patch",
            ev.len()
        )));
    }
    let points = data.validated_points(opts)?;
    check_holomorphic(ev, &points, data.patch.chart(), "eventual component")?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let m = data.jets(&data.mult_diag, p, 0)?;
        let f = data.jets(ev, p, 0)?;
        for i in 0..n {
            if (m[i].value() * f[i].value()).norm() < 1e-12 {
                return Err(Error::invalid(format!(
                    "eventual identity is not invertible at {}",
                    fmt_point(data.patch.chart(), p)
                )));
            }
        }
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in 0..n {
                let cx = mult_matrix(n, x, m[x].value());
                let kcyk = mult_matrix(n, y, m[y].value().conj());
                // E^{-1}∘∂_x = ∂_x/(m_x f_x); multiplying by it leaves a
                // single diagonal entry 1/f_x.
                let cxe = mult_matrix(n, x, 1.0 / f[x].value());
                let kcyek = mult_matrix(n, y, (1.0 / f[y].value()).conj());
                let lhs = commutator(n, &cx, &kcyk);
                let rhs = commutator(n, &cxe, &kcyek);
                let diff: Vec<Complex64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
                worst = worst.max(max_abs(&diff));
            }
        }
        per_point.push(worst);
    }
    Ok(CheckReport::from_per_point(
        "twisted-curvature-commutator",
        data.patch.name(),
        opts.tol,
        opts.seed,
        per_point,
    ))
}

/// Twist the data by a diagonal eventual identity: divide the hermitian
/// entries by the modulus of the twist eigenvalues t_i = w_i·m_i, rotate
/// the real structure by t^{1/2}/conj(t^{1/2}) with the principal square
/// root, replace the multiplication entries by 1/w_i with unity E, and
/// store the previous unity as the distinguished eventual identity of the
/// result. Sample points where a twist eigenvalue lands on the closed
/// negative real axis are reported as a branch-cut error.
pub fn dual_structure(
    data: &DiagTTData,
    ev: &[Expr],
    opts: &SampleOpts,
) -> Result<DiagTTData> {
    let n = data.dim();
    if ev.len() != n {
        return Err(Error::invalid(format!(
            "eventual identity has {} components on a {n}-dimensional patch",
            ev.len()
        )));
    }
    let points = data.validated_points(opts)?;
    check_holomorphic(ev, &points, data.patch.chart(), "eventual component")?;
    let mut offending = 0usize;
    let mut first = None;
    for p in &points {
        let m = data.jets(&data.mult_diag, p, 0)?;
        let f = data_jets(ev, p, 0)?;
        let bad = (0..n).any(|i| {
            let t = f[i].value() * m[i].value();
            t.im.abs() <= 1e-12 * (1.0 + t.norm()) && t.re <= 0.0
        });
        if bad {
            offending += 1;
            if first.is_none() {
                first = Some(fmt_point(data.patch.chart(), p));
            }
        }
    }
    if offending > 0 {
        return Err(Error::BranchCut {
            count: offending,
            first: first.unwrap(),
        });
    }
    let chart = data.patch.chart();
    let coords = chart.coords();
    let mut h_new = Vec::with_capacity(n);
    let mut k_new = Vec::with_capacity(n);
    let mut unity_new = Vec::with_capacity(n);
    let mut entries = vec![
        Expr::lit(0.0, coords, Flavor::Complex);
        n * (n + 1) / 2 * n
    ];
    for i in 0..n {
        let t = ev[i].mul(&data.mult_diag[i]);
        let sqrt_t = t.pow(0.5);
        let abs_t = t.mul(&t.call(Func::Conj)).call(Func::Sqrt);
        h_new.push(data.h_diag[i].div(&abs_t));
        k_new.push(data.k_diag[i].mul(&sqrt_t).div(&sqrt_t.call(Func::Conj)));
        unity_new.push(ev[i].clone());
        entries[mult_index(n, i, i, i)] =
            Expr::lit(1.0, coords, Flavor::Complex).div(&ev[i]);
    }
    let eventual_new = data.patch.unity_exprs().as_ref().clone();
    let dual_patch = FPatch::new(
        Arc::clone(chart),
        MultTable::from_entries(n, entries),
        unity_new,
        true,
    );
    DiagTTData::new(dual_patch, h_new, k_new, Some(eventual_new))
}

/// Run the harmonicity and bilinear-compatibility residuals on the twisted
/// structure, gated on the original data passing them together with both
/// twist-invariance conditions first.
pub fn dual_dchk_suite(
    data: &DiagTTData,
    ev: &[Expr],
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let (r1, r2) = ttstar_residuals(data, opts)?;
    let d = dchk_residual(data, opts)?;
    let h1 = herm1_residual(data, ev, opts)?;
    let h2 = herm2_residual(data, ev, opts)?;
    for rep in [&r1, &r2, &d, &h1, &h2] {
        if !rep.pass {
            return Err(Error::invalid(format!(
                "dual suite precondition failed: {} residual {:.3e} exceeds tolerance {:.3e}",
                rep.name, rep.max_residual, rep.tolerance
            )));
        }
    }
    let dual = dual_structure(data, ev, opts)?;
    let (s1, s2) = ttstar_residuals(&dual, opts)?;
    let sd = dchk_residual(&dual, opts)?;
    let per_point: Vec<f64> = (0..s1.per_point.len())
        .map(|i| s1.per_point[i].max(s2.per_point[i]).max(sd.per_point[i]))
        .collect();
    let mut report = CheckReport::from_per_point(
        "dual-compatibility",
        data.patch.name(),
        opts.tol,
        opts.seed,
        per_point,
    );
    report
        .notes
        .insert("higgs-symmetry".into(), format!("{:.3e}", s1.max_residual));
    report.notes.insert(
        "curvature-commutator".into(),
        format!("{:.3e}", s2.max_residual),
    );
    report.notes.insert(
        "bilinear-compatibility".into(),
        format!("{:.3e}", sd.max_residual),
    );
    Ok(report)
}

/// Curvature of the pencil of connections D + z^{-1}C + zC♭ on coordinate
/// pairs of types (1,0)-(1,0) and (1,0)-(0,1), maximized over the given
/// pencil parameters. Flatness for every z encodes both harmonicity
/// residuals at once.
pub fn flat_pencil_residual(
    data: &DiagTTData,
    zs: &[Complex64],
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let n = data.dim();
    if zs.is_empty() {
        return Err(Error::invalid("empty pencil parameter list".to_string()));
    }
    if zs.iter().any(|z| z.norm() == 0.0) {
        return Err(Error::invalid(
            "pencil parameter z = 0 is a pole of the connection".to_string(),
        ));
    }
    let points = data.validated_points(opts)?;
    let mut per_point = Vec::with_capacity(points.len());
    for p in &points {
        let logh = data.jets(&data.log_h, p, 2)?;
        let m = data.jets(&data.mult_diag, p, 1)?;
        let mc: Vec<CJet> = m.iter().map(|j| j.conj_swap(n)).collect();
        let mut worst = 0.0f64;
        for &z in zs {
            let zinv = 1.0 / z;
            let conn = |x: usize| -> Vec<Complex64> {
                let mut a = mult_matrix(n, x, zinv * m[x].value());
                for k in 0..n {
                    a[k * n + k] += logh[k].partial(x);
                }
                a
            };
            for x in 0..n {
                let ax = conn(x);
                for y in (x + 1)..n {
                    // F_{xy} = ∂_xA_y − ∂_yA_x + [A_x, A_y].
                    let ay = conn(y);
                    let mut f = commutator(n, &ax, &ay);
                    for k in 0..n {
                        f[k * n + k] += logh[k].second(x, y) - logh[k].second(y, x);
                    }
                    f[y * n + y] += zinv * m[y].partial(x);
                    f[x * n + x] -= zinv * m[x].partial(y);
                    worst = worst.max(max_abs(&f));
                }
                for y in 0..n {
                    // F_{x ȳ} = ∂_x(zC♭_ȳ) − ∂_ȳA_x + [A_x, zC♭_ȳ].
                    let aybar = mult_matrix(n, y, z * mc[y].value());
                    let mut f = commutator(n, &ax, &aybar);
                    f[y * n + y] += z * mc[y].partial(x);
                    for k in 0..n {
                        f[k * n + k] -= logh[k].second(n + y, x);
                    }
                    f[x * n + x] -= zinv * m[x].partial(n + y);
                    worst = worst.max(max_abs(&f));
                }
            }
        }
        per_point.push(worst);
    }
    let mut report = CheckReport::from_per_point(
        "pencil-flatness",
        data.patch.name(),
        opts.tol,
        opts.seed,
        per_point,
    );
    report.notes.insert(
        "z-list".into(),
        zs.iter()
            .map(|z| format!("{:.2}{:+.2}i", z.re, z.im))
            .collect::<Vec<_>>()
            .join(", "),
    );
    Ok(report)
}

/// Verify the twisted-product condition transfers to the dual structure:
/// gated on the original condition, twist the data and evaluate the same
/// condition there with the stored dual eventual identity (the previous
/// unity).
pub fn herm1_duality_check(
    data: &DiagTTData,
    ev: &[Expr],
    opts: &SampleOpts,
) -> Result<CheckReport> {
    let base = herm1_residual(data, ev, opts)?;
    if !base.pass {
        return Err(Error::invalid(format!(
            "dual condition requires the direct condition first: residual {:.3e} exceeds {:.3e}",
            base.max_residual, base.tolerance
        )));
    }
    let dual = dual_structure(data, ev, opts)?;
    let dual_ev = dual
        .eventual()
        .cloned()
        .expect("dual structure stores its eventual identity");
    herm1_named(&dual, &dual_ev, opts, "twisted-higgs-symmetry-dual")
}
