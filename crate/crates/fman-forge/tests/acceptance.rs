//! Acceptance gate: one test per release criterion, each printing a
//! single summary line. Run with `cargo test --test acceptance -- --nocapture`.

use fman_forge::compat::{
    almost_compat_residual, compat_residual_g1, compat_residual_g2, curvature_pencil_residual,
    nijenhuis_residual, riemannian_residual, semi_hamiltonian_residual, transfer_endo,
    DEFAULT_LAMBDAS,
};
use fman_forge::eventual::{
    certify, char_residual, decompose_on_product, dual_unity_residual, dualize, ev_bracket,
    ev_product, mult_agreement_residual, power_bracket_residual, sample_invertible,
};
use fman_forge::expr::parse::parse;
use fman_forge::expr::{Expr, Flavor};
use fman_forge::field::{MultTable, MultView};
use fman_forge::fmanifold::{algebra_residual, hm_residual, product_patch, FPatch, SampleOpts};
use fman_forge::hydro::{commutation_defect, parse_profiles, simulate, tsarev_residual, FlowSpec, GridOptions};
use fman_forge::manifest::load_builtin;
use fman_forge::metric::{
    bianchi_residual, cheie_identity_residual, closedness_residual, coidentity_of,
    intersection_metric, metric_compatibility_residual, total_symmetry_residual, MetricField,
};
use fman_forge::patch::{default_coords, Chart};
use fman_forge::ttstar::{
    dchk_residual, default_pencil_points, dual_dchk_suite, flat_pencil_residual, herm1_residual,
    herm2_residual, ttstar_residuals, DiagTTData,
};
use num_complex::Complex64;
use std::sync::Arc;

fn opts() -> SampleOpts {
    SampleOpts::default()
}

fn box_n(n: usize) -> Vec<(f64, f64)> {
    vec![(0.25, 1.25); n]
}

fn parse_on(chart: &Arc<Chart>, t: &str) -> Expr {
    parse(t, chart.coords(), chart.flavor()).expect("fixture expression parses")
}

fn diag_metric(chart: &Arc<Chart>, texts: &[&str]) -> MetricField<f64> {
    let diag = texts.iter().map(|t| parse_on(chart, t)).collect();
    MetricField::from_diag(Arc::clone(chart), diag).flag_invariant()
}

/// 2d patch with unity ∂1 and nilpotent ∂2; `eps` != 0 breaks the
/// integrability condition via c²₂₂ = eps·u1.
fn nilpotent2(eps: f64) -> Arc<FPatch> {
    let coords = default_coords(2);
    let chart = Chart::new_real("nilpotent2", Arc::clone(&coords), box_n(2));
    let p = |t: &str| parse(t, &coords, Flavor::Real).unwrap();
    let entries = vec![
        p("1"),
        p("0"),
        p("0"),
        p("1"),
        p("0"),
        p(&format!("{eps} * u1")),
    ];
    FPatch::new(
        chart,
        MultTable::from_entries(2, entries),
        vec![p("1"), p("0")],
        false,
    )
}

fn lcg(state: &mut u64) -> f64 {
    *state = state
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    ((*state >> 11) as f64) / ((1u64 << 53) as f64)
}

#[test]
fn a01_multiplication_axioms_hold_and_perturbations_fail_linearly() {
    let o = opts();
    for name in ["semisimple2", "semisimple3", "semisimple4", "hertling2d"] {
        let man = load_builtin(name).unwrap();
        let m = man.patch().mult_view::<f64>();
        let a = algebra_residual(&m, &o).unwrap();
        let h = hm_residual(&m, &o).unwrap();
        assert!(a.max_residual < 1e-9, "{name} algebra {:.3e}", a.max_residual);
        assert!(h.max_residual < 1e-9, "{name} integrability {:.3e}", h.max_residual);
    }

    let mut maxima = Vec::new();
    for eps in [1e-3, 1e-2, 1e-1] {
        let h = hm_residual(&nilpotent2(eps).mult_view::<f64>(), &o).unwrap();
        assert!(!h.pass, "perturbation eps={eps} must fail");
        maxima.push(h.max_residual);
    }
    for w in maxima.windows(2) {
        let ratio = w[1] / w[0];
        assert!(
            (5.0..=20.0).contains(&ratio),
            "defect growth {ratio:.2} not within x2 of linear"
        );
    }
    println!(
        "01 multiplication axioms + linear perturbation response: pass (growth {:.1}, {:.1})",
        maxima[1] / maxima[0],
        maxima[2] / maxima[1]
    );
}

#[test]
fn a02_characterization_separates_eventual_from_cross_dependent_fields() {
    let o = opts();
    let ss3 = FPatch::semisimple("semisimple3", box_n(3));
    let m = ss3.mult_view::<f64>();
    for texts in [
        ["u1", "u2", "u3"],
        ["1 + u1^2", "exp(u2)", "2 + sin(u3)"],
        ["u1^2", "1 + u2 + u2^2", "exp(1 - u3)"],
    ] {
        let e = ss3.field_from_texts(&texts).unwrap();
        let rep = char_residual(&m, &e, &o).unwrap();
        assert!(
            rep.max_residual < 1e-9,
            "separated candidate {texts:?} residual {:.3e}",
            rep.max_residual
        );
    }
    let bad = ss3.field_from_texts(&["u2", "u1", "u3"]).unwrap();
    let rep = char_residual(&m, &bad, &o).unwrap();
    assert!(
        rep.max_residual > 1e-2,
        "cross-dependent candidate must fail, got {:.3e}",
        rep.max_residual
    );
    println!(
        "02 eventual-identity characterization: pass (counterexample residual {:.3e})",
        rep.max_residual
    );
}

/// Certified fixtures reused by several gates: (patch, field components).
fn eventual_fixtures() -> Vec<(Arc<FPatch>, Vec<&'static str>)> {
    let hertling = load_builtin("hertling2d").unwrap().patch().clone();
    vec![
        (FPatch::semisimple("ss2", box_n(2)), vec!["u1", "u2"]),
        (
            FPatch::semisimple("ss3", box_n(3)),
            vec!["1 + u1^2", "1 + u2^2", "1 + u3^2"],
        ),
        (
            FPatch::semisimple("ss4", box_n(4)),
            vec!["u1", "u2", "u3", "u4"],
        ),
        (hertling, vec!["1 + x1^2", "x1*x2"]),
        (nilpotent2(0.0), vec!["1 + u1^2", "u1*u2"]),
    ]
}

#[test]
fn a03_dualizing_twice_restores_the_multiplication_and_swaps_identities() {
    let o = opts();
    for (patch, etexts) in eventual_fixtures() {
        let m = patch.mult_view::<f64>();
        let e = patch.field_from_texts(&etexts).unwrap();
        let cand = certify(&m, &e, &o).unwrap();
        assert!(cand.is_certified(), "{} fixture must certify", patch.name());
        let d = dualize(&cand);
        assert!(dual_unity_residual(&d, &o).unwrap().pass);

        // The original unity is an eventual identity of the dual ...
        let back = certify(d.dual(), m.unity(), &o).unwrap();
        assert!(
            back.report().max_residual < 1e-9,
            "{}: unity residual on dual {:.3e}",
            patch.name(),
            back.report().max_residual
        );

        // ... and dualizing through it reproduces the base multiplication.
        let dd = dualize(&back);
        let pts = sample_invertible(&m, &e, o.seed, o.count).unwrap();
        assert_eq!(pts.len(), o.count);
        let rep = mult_agreement_residual(dd.dual(), &m, &pts, "dual-of-dual", &o).unwrap();
        assert!(
            rep.max_residual < 1e-9,
            "{}: dual-of-dual residual {:.3e}",
            patch.name(),
            rep.max_residual
        );
    }
    println!("03 duality involution + identity swap on 5 fixtures: pass");
}

#[test]
fn a04_eventual_identities_close_under_product_inverse_and_bracket() {
    let o = opts();
    let prod = product_patch(
        &FPatch::semisimple("a2", box_n(2)),
        &FPatch::semisimple("b2", box_n(2)),
    )
    .unwrap();
    let hertling = load_builtin("hertling2d").unwrap().patch().clone();
    // (patch, first field, second field with invertible bracket)
    let fixtures: Vec<(Arc<FPatch>, Vec<&str>, Vec<&str>)> = vec![
        (
            FPatch::semisimple("ss2", box_n(2)),
            vec!["u1", "u2"],
            vec!["2 + u1^2", "2 + u2^2"],
        ),
        (
            FPatch::semisimple("ss3", box_n(3)),
            vec!["u1", "u2", "u3"],
            vec!["2 + u1^2", "2 + u2^2", "2 + u3^2"],
        ),
        (
            FPatch::semisimple("ss4", box_n(4)),
            vec!["u1", "u2", "u3", "u4"],
            vec!["2 + u1^2", "2 + u2^2", "2 + u3^2", "2 + u4^2"],
        ),
        (hertling, vec!["1 + x1^2", "x1*x2"], vec!["1", "0"]),
        (
            prod,
            vec!["u1", "u2", "u3", "u4"],
            vec!["2 + u1^2", "2 + u2^2", "2 + u3^2", "2 + u4^2"],
        ),
    ];
    for (patch, t1, t2) in &fixtures {
        let m = patch.mult_view::<f64>();
        let c1 = certify(&m, &patch.field_from_texts(t1).unwrap(), &o).unwrap();
        let c2 = certify(&m, &patch.field_from_texts(t2).unwrap(), &o).unwrap();
        assert!(c1.is_certified() && c2.is_certified());
        let prod_c = ev_product(&c1, &c2, &o).unwrap();
        assert!(prod_c.is_certified(), "{}: product", patch.name());
        let inv_c = certify(&m, c1.inverse(), &o).unwrap();
        assert!(inv_c.is_certified(), "{}: inverse", patch.name());
        let br_c = ev_bracket(&c1, &c2, &o).unwrap();
        assert!(br_c.is_certified(), "{}: bracket", patch.name());
    }

    // Brackets of powers of one eventual identity collapse:
    // [E^(n), E^(m)] = (m − n)·E^(n+m−1).
    let ss3 = FPatch::semisimple("ss3", box_n(3));
    let m3 = ss3.mult_view::<f64>();
    let euler = certify(&m3, &ss3.field_from_texts(&["u1", "u2", "u3"]).unwrap(), &o).unwrap();
    let hertling = load_builtin("hertling2d").unwrap().patch().clone();
    let mh = hertling.mult_view::<f64>();
    let h_cand = certify(&mh, &hertling.field_from_texts(&["1 + x1^2", "x1*x2"]).unwrap(), &o).unwrap();
    for (np, mp) in [(-1i64, 0i64), (0, 1), (1, 2), (-1, 2)] {
        for cand in [&euler, &h_cand] {
            let rep = power_bracket_residual(cand, np, mp, &o).unwrap();
            assert!(
                rep.max_residual < 1e-8,
                "power bracket ({np},{mp}) residual {:.3e}",
                rep.max_residual
            );
        }
    }
    println!("04 group structure (product/inverse/bracket + power brackets): pass");
}

#[test]
fn a05_products_decompose_and_dualization_commutes_with_products() {
    let o = opts();
    let f1 = FPatch::semisimple("a3", box_n(3));
    let f2 = FPatch::semisimple("b2", box_n(2));
    let prod = product_patch(&f1, &f2).unwrap();
    let mp = prod.mult_view::<f64>();
    let e_texts = ["u1", "u2", "u3", "1 + u4^2", "1 + u5^2"];
    let e = prod.field_from_texts(&e_texts).unwrap();

    // Round trip: the factor pieces reassemble to the original field.
    let (_, _, rep) = decompose_on_product(&prod, &e, &o).unwrap();
    assert!(
        rep.max_residual < 1e-9,
        "decomposition round-trip {:.3e}",
        rep.max_residual
    );

    // Dualizing the product equals the product of the factor duals,
    // compared entry by entry on the structure tensor.
    let dual_prod = dualize(&certify(&mp, &e, &o).unwrap());
    let d1 = dualize(
        &certify(
            &f1.mult_view::<f64>(),
            &f1.field_from_texts(&["u1", "u2", "u3"]).unwrap(),
            &o,
        )
        .unwrap(),
    );
    let d2 = dualize(
        &certify(
            &f2.mult_view::<f64>(),
            &f2.field_from_texts(&["1 + u1^2", "1 + u2^2"]).unwrap(),
            &o,
        )
        .unwrap(),
    );
    let pts = sample_invertible(&mp, &e, o.seed, o.count).unwrap();
    assert_eq!(pts.len(), o.count);
    let mut worst = 0.0f64;
    for p in &pts {
        let jp = dual_prod.dual().at(p, 0).unwrap();
        let j1 = d1.dual().at(&p[..3], 0).unwrap();
        let j2 = d2.dual().at(&p[3..], 0).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    let expected = if i < 3 && j < 3 && k < 3 {
                        j1.c(i, j, k).value()
                    } else if i >= 3 && j >= 3 && k >= 3 {
                        j2.c(i - 3, j - 3, k - 3).value()
                    } else {
                        0.0
                    };
                    worst = worst.max((jp.c(i, j, k).value() - expected).abs());
                }
            }
        }
    }
    assert!(worst < 1e-9, "dualize/product commutation defect {worst:.3e}");
    println!("05 product decomposition + dualize/product commutation: pass ({worst:.3e})");
}

/// Metric-pair fixtures reused by the pencil gates:
/// (label, multiplication, g, g-tilde, expected-to-pass).
fn pencil_fixtures() -> Vec<(&'static str, MultView<f64>, MetricField<f64>, MetricField<f64>, bool)> {
    let o = opts();
    let mut out = Vec::new();

    let ss3 = FPatch::semisimple("ss3", box_n(3));
    let m3 = ss3.mult_view::<f64>();
    let gt = diag_metric(ss3.chart(), &["u1", "u2", "u3"]);
    let cand = certify(&m3, &ss3.field_from_texts(&["1 + u1^2", "1 + u2^2", "1 + u3^2"]).unwrap(), &o).unwrap();
    let g = intersection_metric(&gt, &m3, cand.inverse());
    out.push(("egorov3", m3.clone(), g, gt.clone(), true));

    let cand = certify(&m3, &ss3.field_from_texts(&["u1", "u2", "u3"]).unwrap(), &o).unwrap();
    let g = intersection_metric(&gt, &m3, cand.inverse());
    out.push(("euler3", m3, g, gt, true));

    let ss2 = FPatch::semisimple("ss2", box_n(2));
    let m2 = ss2.mult_view::<f64>();
    let gt = diag_metric(ss2.chart(), &["exp(u1)", "exp(u2)"]);
    let cand = certify(&m2, &ss2.field_from_texts(&["u1", "u2"]).unwrap(), &o).unwrap();
    let g = intersection_metric(&gt, &m2, cand.inverse());
    out.push(("exp2", m2.clone(), g, gt, true));

    // A pair whose transfer endomorphism has torsion: g Euclidean, g̃ with
    // an off-diagonal entry depending on the other coordinate.
    let g = diag_metric(ss2.chart(), &["1", "1"]);
    let gt_rows = vec![
        parse_on(ss2.chart(), "1"),
        parse_on(ss2.chart(), "0.3 * u2"),
        parse_on(ss2.chart(), "1"),
    ];
    let gt = MetricField::from_lower(Arc::clone(ss2.chart()), gt_rows);
    out.push(("skew2", m2, g, gt, false));

    out
}

#[test]
fn a06_nijenhuis_torsion_agrees_with_the_direct_pencil_oracle() {
    let o = opts();
    let mut disagreements = 0;
    for (label, _m, g, gt, expect_pass) in pencil_fixtures() {
        let nij = nijenhuis_residual(&transfer_endo(&g, &gt), &o).unwrap();
        let pencil = almost_compat_residual(&g, &gt, &DEFAULT_LAMBDAS, &o).unwrap();
        if nij.pass != pencil.pass {
            disagreements += 1;
            eprintln!(
                "{label}: torsion {:.3e} vs pencil {:.3e}",
                nij.max_residual, pencil.max_residual
            );
        }
        assert_eq!(nij.pass, expect_pass, "{label}: torsion status");
        if expect_pass {
            assert!(
                nij.max_residual < 1e-9,
                "{label}: torsion residual {:.3e}",
                nij.max_residual
            );
        }
    }
    assert_eq!(disagreements, 0, "torsion and pencil oracles disagree");
    println!("06 Nijenhuis torsion cross-checked against pencil sweep: pass (0 disagreements)");
}

#[test]
fn a07_compatibility_pairings_and_curvature_pencil() {
    let o = opts().with_tol(1e-8);
    let fixtures = pencil_fixtures();

    // Headline fixture: both pairing residuals tiny and the curvature
    // pencil linear in lambda.
    let (_, _, g, gt, _) = &fixtures[0];
    let g2 = compat_residual_g2(g, gt, &o).unwrap();
    assert!(g2.max_residual < 1e-8, "g2 pairing {:.3e}", g2.max_residual);
    let pencil = curvature_pencil_residual(g, gt, &DEFAULT_LAMBDAS, &opts().with_tol(1e-7)).unwrap();
    assert!(
        pencil.max_residual < 1e-7,
        "curvature pencil {:.3e}",
        pencil.max_residual
    );

    // Both pairing variants agree in pass/fail on every fixture.
    for (label, _m, g, gt, _) in &fixtures {
        let r1 = compat_residual_g1(g, gt, &o).unwrap();
        let r2 = compat_residual_g2(g, gt, &o).unwrap();
        assert_eq!(
            r1.pass, r2.pass,
            "{label}: pairing variants disagree ({:.3e} vs {:.3e})",
            r1.max_residual, r2.max_residual
        );
    }
    println!(
        "07 compatibility pairings + curvature pencil: pass (pencil {:.3e})",
        pencil.max_residual
    );
}

#[test]
fn a08_connection_self_tests_and_closedness_matches_total_symmetry() {
    let o = opts().with_tol(1e-8);
    let ss2 = FPatch::semisimple("ss2", box_n(2));
    let ss3 = FPatch::semisimple("ss3", box_n(3));
    let m2 = ss2.mult_view::<f64>();
    let m3 = ss3.mult_view::<f64>();
    // (multiplication, metric, coidentity expected closed?)
    let fixtures: Vec<(&str, MultView<f64>, MetricField<f64>, bool)> = vec![
        ("flat2", m2.clone(), diag_metric(ss2.chart(), &["1", "1"]), true),
        ("swapped2", m2.clone(), diag_metric(ss2.chart(), &["u2", "1"]), false),
        ("exp-swapped2", m2.clone(), diag_metric(ss2.chart(), &["exp(u2)", "exp(u1)"]), false),
        ("egorov3", m3.clone(), diag_metric(ss3.chart(), &["u1", "u2", "u3"]), true),
        ("potential3", m3.clone(), diag_metric(ss3.chart(), &["u2*u3", "u1*u3", "u1*u2"]), true),
    ];
    for (label, m, g, expect_closed) in &fixtures {
        let nabla = metric_compatibility_residual(g, &o).unwrap();
        let bianchi = bianchi_residual(g, &o).unwrap();
        let cheie = cheie_identity_residual(m, g, &o).unwrap();
        for rep in [&nabla, &bianchi, &cheie] {
            assert!(
                rep.max_residual < 1e-8,
                "{label}: {} residual {:.3e}",
                rep.name,
                rep.max_residual
            );
        }
        let closed = closedness_residual(&coidentity_of(g, m.unity()), &o).unwrap();
        let total = total_symmetry_residual(m, g, &o).unwrap();
        assert_eq!(closed.pass, total.pass, "{label}: closedness vs total symmetry");
        assert_eq!(closed.pass, *expect_closed, "{label}: closedness status");
    }
    println!("08 connection self-tests + closedness/total-symmetry agreement: pass");
}

#[test]
fn a09_riemannian_condition_holds_on_both_sides_and_matches_rotation_oracle() {
    let o = opts().with_tol(1e-7);
    let ss3 = FPatch::semisimple("ss3", box_n(3));
    let m = ss3.mult_view::<f64>();
    let gt = diag_metric(ss3.chart(), &["u1", "u2", "u3"]);
    let e = ss3
        .field_from_texts(&["1 + u1^2", "1 + u2^2", "1 + u3^2"])
        .unwrap();
    let cand = certify(&m, &e, &o).unwrap();

    // Original side (∘, g̃) and dual side (∗, g) both satisfy the cyclic
    // curvature condition.
    let base = riemannian_residual(&m, &gt, &o).unwrap();
    assert!(base.max_residual < 1e-7, "base side {:.3e}", base.max_residual);
    let g = intersection_metric(&gt, &m, cand.inverse()).flag_invariant();
    let dual = dualize(&cand);
    let dual_side = riemannian_residual(dual.dual(), &g, &o).unwrap();
    assert!(
        dual_side.max_residual < 1e-7,
        "dual side {:.3e}",
        dual_side.max_residual
    );

    // Diagonal-metric cross-oracle: cyclic-curvature status agrees with
    // the rotation-coefficient condition, on a passing and a failing
    // fixture.
    for (label, texts, expect) in [
        ("egorov3", ["u1", "u2", "u3"], true),
        ("curved3", ["u2*u3", "u1*u3", "u1*u2"], false),
    ] {
        let gfix = diag_metric(ss3.chart(), &texts);
        let riem = riemannian_residual(&m, &gfix, &o).unwrap();
        let rot = semi_hamiltonian_residual(&gfix, &o).unwrap();
        assert_eq!(riem.pass, rot.pass, "{label}: oracles disagree");
        assert_eq!(riem.pass, expect, "{label}: unexpected status");
    }
    println!(
        "09 cyclic curvature on both sides + rotation-coefficient oracle: pass ({:.3e}, {:.3e})",
        base.max_residual, dual_side.max_residual
    );
}

#[test]
fn a10_transport_converges_tsarev_is_reparametrization_invariant_defects_shrink() {
    let o = opts().with_tol(1e-8);

    // Second-order convergence on constant transport.
    let patch = FPatch::semisimple("flows1d", vec![(0.25, 1.25)]);
    let m = patch.mult_view::<f64>();
    let gt = diag_metric(patch.chart(), &["1"]);
    let transport =
        FlowSpec::certified("transport", patch.field_from_texts(&["0.8"]).unwrap(), &m, &gt, &o)
            .unwrap();
    let length = std::f64::consts::TAU;
    let u0 = parse_profiles(&["0.75 + 0.1*sin(x)"], length).unwrap();
    let exact = |x: f64, t: f64| 0.75 + 0.1 * (x + 0.8 * t).sin();
    let mut errors = Vec::new();
    for cells in [64usize, 128, 256] {
        let grid = GridOptions::default()
            .with_cells(cells)
            .with_dt(5e-4)
            .with_t_end(0.5);
        let traj = simulate(&m, &transport, &u0, &grid).unwrap();
        let state = traj.last();
        let err = state
            .cells
            .iter()
            .enumerate()
            .map(|(i, u)| (u[0] - exact(i as f64 * state.dx, state.t)).abs())
            .fold(0.0f64, f64::max);
        errors.push(err);
    }
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    for r in ratios {
        assert!(
            (3.5..=4.5).contains(&r),
            "convergence ratio {r:.2} outside [3.5, 4.5] (errors {errors:?})"
        );
    }

    // Rescaling each diagonal entry by a function of its own coordinate
    // leaves the integrability condition untouched.
    let ss3 = FPatch::semisimple("ss3", box_n(3));
    let vel = ss3
        .field_from_texts(&["1 + u1^2", "1 + u2^2", "1 + u3^2"])
        .unwrap();
    let gt3 = diag_metric(ss3.chart(), &["u1", "u2", "u3"]);
    let rescaled = diag_metric(
        ss3.chart(),
        &["u1 / (1 + u1^2)", "u2 * exp(1 - u2)", "u3 / (2 + u3)"],
    );
    for (label, gfix) in [("original", &gt3), ("rescaled", &rescaled)] {
        let rep = tsarev_residual(gfix, &vel, &opts()).unwrap();
        assert!(
            rep.max_residual < 1e-9,
            "{label}: integrability residual {:.3e}",
            rep.max_residual
        );
    }

    // Commutation defects shrink monotonically under refinement.
    let linear =
        FlowSpec::certified("linear", patch.field_from_texts(&["u1"]).unwrap(), &m, &gt, &o)
            .unwrap();
    let quadratic =
        FlowSpec::certified("quadratic", patch.field_from_texts(&["u1^2"]).unwrap(), &m, &gt, &o)
            .unwrap();
    let mut defects = Vec::new();
    for cells in [64usize, 128, 256] {
        let grid = GridOptions::default()
            .with_cells(cells)
            .with_dt(5e-4)
            .with_t_end(0.25);
        defects.push(commutation_defect(&m, &linear, &quadratic, &u0, &grid).unwrap());
    }
    assert!(
        defects[0] > defects[1] && defects[1] > defects[2],
        "defects not monotone: {defects:?}"
    );
    println!(
        "10 transport convergence {:.2}/{:.2}, reparametrization invariance, defects {:.1e} > {:.1e} > {:.1e}: pass",
        ratios[0], ratios[1], defects[0], defects[1], defects[2]
    );
}

#[test]
fn a11_hermitian_package_randomized_canonical_and_curved() {
    let o = opts().with_tol(1e-8);

    // 20 randomized diagonal (H, k, E) fixtures satisfy both twisted
    // harmonicity conditions.
    let mut seed = 0x00AC_CE97u64;
    for draw in 0..20 {
        let n = 2 + (draw % 2);
        let (mut h, mut k, mut e) = (Vec::new(), Vec::new(), Vec::new());
        for i in 1..=n {
            let a = 0.1 + 0.4 * lcg(&mut seed);
            let b = -0.3 + 0.6 * lcg(&mut seed);
            let c = 0.05 + 0.2 * lcg(&mut seed);
            let j = 1 + (i % n);
            h.push(format!(
                "exp({a:.4}*(u{i} + conj(u{i})) + {b:.4}*u{i}*conj(u{i}) + {c:.4}*u{j}*conj(u{j}))"
            ));
            let phase = -0.8 + 1.6 * lcg(&mut seed);
            k.push(format!("exp({phase:.4}*(u{i} - conj(u{i})))"));
            let alpha = 1.5 + lcg(&mut seed);
            let beta = -0.3 + 0.6 * lcg(&mut seed);
            let gamma = 0.05 + 0.15 * lcg(&mut seed);
            e.push(format!("{alpha:.4} + {beta:.4}*u{i} + {gamma:.4}*u{i}^2"));
        }
        let data = DiagTTData::canonical(
            format!("draw{draw}"),
            vec![(0.4, 1.2); n],
            vec![(0.3, 0.9); n],
            &h.iter().map(String::as_str).collect::<Vec<_>>(),
            &k.iter().map(String::as_str).collect::<Vec<_>>(),
            Some(&e.iter().map(String::as_str).collect::<Vec<_>>()),
        )
        .unwrap();
        let ev = data.eventual().unwrap().clone();
        let h1 = herm1_residual(&data, &ev, &o).unwrap();
        let h2 = herm2_residual(&data, &ev, &o).unwrap();
        assert!(
            h1.max_residual < 1e-8 && h2.max_residual < 1e-8,
            "draw {draw}: {:.3e} / {:.3e}",
            h1.max_residual,
            h2.max_residual
        );
    }

    // The canonical pluriharmonic fixture passes the whole package.
    let data = DiagTTData::canonical(
        "ttdiag2",
        vec![(0.5, 1.5); 2],
        vec![(0.5, 1.5); 2],
        &["exp(u1 + conj(u1))", "exp(u2 + conj(u2))"],
        &["exp(conj(u1) - u1)", "exp(conj(u2) - u2)"],
        Some(&["u1", "u2"]),
    )
    .unwrap();
    let ev = data.eventual().unwrap().clone();
    let (r1, r2) = ttstar_residuals(&data, &o).unwrap();
    let reports = [
        r1,
        r2,
        dchk_residual(&data, &o).unwrap(),
        dual_dchk_suite(&data, &ev, &o).unwrap(),
        flat_pencil_residual(&data, &default_pencil_points(), &o).unwrap(),
    ];
    for rep in &reports {
        assert!(
            rep.max_residual < 1e-8,
            "{}: {:.3e}",
            rep.name,
            rep.max_residual
        );
    }

    // Non-pluriharmonic H fails harmonicity with the analytic residual
    // |∂∂̄ log H| = 1.
    let curved = DiagTTData::canonical(
        "curved1",
        vec![(0.5, 1.5)],
        vec![(0.25, 1.0)],
        &["exp(u1*conj(u1))"],
        &["1"],
        None,
    )
    .unwrap();
    let (_, r2) = ttstar_residuals(&curved, &o).unwrap();
    assert!(!r2.pass, "curved fixture must fail harmonicity");
    assert!(
        (r2.max_residual - 1.0).abs() < 1e-6,
        "curved residual {:.8} should equal the analytic value 1",
        r2.max_residual
    );
    println!(
        "11 hermitian package (20 randomized + canonical + curved): pass (curved residual {:.6})",
        r2.max_residual
    );
}

#[test]
fn a12_jets_match_finite_differences_and_wirtinger_parts_vanish() {
    // Real charts: gradient and Hessian vs central differences on 100
    // probes across four expression shapes.
    let coords = default_coords(3);
    let chart = Chart::new_real("probe3", Arc::clone(&coords), vec![(0.5, 1.5); 3]);
    let texts = [
        "sin(u1) * exp(u2) + u3^3",
        "log(1 + u1^2) / sqrt(u2 + u3)",
        "cos(u1 * u2) + u2 / (1 + u3^2)",
        "sqrt(u1) * u2^2 - u3 * sin(u2)",
    ];
    let h = 1e-4;
    let mut probes = 0;
    let mut worst_grad = 0.0f64;
    let mut worst_hess = 0.0f64;
    for (t_idx, text) in texts.iter().enumerate() {
        let expr = parse(text, &coords, Flavor::Real).unwrap();
        let f = |p: &[f64]| expr.eval(p, 0).unwrap().value();
        for p in chart.sample::<f64>(100 + t_idx as u64, 25).unwrap() {
            probes += 1;
            let jet = expr.eval(&p, 2).unwrap();
            for i in 0..3 {
                let mut pp = p.clone();
                let mut pm = p.clone();
                pp[i] += h;
                pm[i] -= h;
                let fd = (f(&pp) - f(&pm)) / (2.0 * h);
                let diff = (jet.partial(i) - fd).abs();
                worst_grad = worst_grad.max(diff);
                assert!(diff <= 1e-6 * (1.0 + fd.abs()), "{text}: d/du{i} {diff:.3e}");
                for j in 0..3 {
                    let fd2 = if i == j {
                        (f(&pp) - 2.0 * f(&p) + f(&pm)) / (h * h)
                    } else {
                        let shift = |si: f64, sj: f64| {
                            let mut q = p.clone();
                            q[i] += si;
                            q[j] += sj;
                            f(&q)
                        };
                        (shift(h, h) - shift(h, -h) - shift(-h, h) + shift(-h, -h))
                            / (4.0 * h * h)
                    };
                    let diff = (jet.second(i, j) - fd2).abs();
                    worst_hess = worst_hess.max(diff);
                    assert!(
                        diff <= 1e-6 * (1.0 + fd2.abs()),
                        "{text}: d2/du{i}du{j} {diff:.3e}"
                    );
                }
            }
        }
    }
    assert_eq!(probes, 100);

    // Complex charts: conj-free expressions have identically vanishing
    // antiholomorphic derivatives.
    let ccoords = default_coords(2);
    let cchart = Chart::new_complex(
        "probe2c",
        Arc::clone(&ccoords),
        vec![(0.5, 1.5); 2],
        vec![(0.5, 1.5); 2],
    );
    let ctexts = ["sin(u1) * exp(u2)", "u1^3 / (1 + u2^2)", "log(u1) + sqrt(u2) * u1"];
    let mut worst_wirt = 0.0f64;
    for text in ctexts {
        let expr = parse(text, &ccoords, Flavor::Complex).unwrap();
        for p in cchart.sample::<Complex64>(7, 25).unwrap() {
            let jet = expr.eval(&p, 1).unwrap();
            for i in 0..2 {
                let anti = jet.partial(2 + i).norm();
                worst_wirt = worst_wirt.max(anti);
                assert!(anti < 1e-12, "{text}: antiholomorphic part {anti:.3e}");
            }
        }
    }
    println!(
        "12 jet/finite-difference agreement on 100 probes: pass (grad {worst_grad:.1e}, hess {worst_hess:.1e}, wirtinger {worst_wirt:.1e})"
    );
}
