//! Pair an invariant metric g̃ with the intersection form g it induces
//! through an eventual identity, and verify their pencil: vanishing
//! Nijenhuis torsion of the transfer endomorphism, almost compatibility,
//! both Christoffel-pairing identities, and flatness of g − λ·g̃ along a
//! sweep of pencil parameters.
//!
//! Run with: cargo run --example metric_pencils

use fman_forge::compat::{
    almost_compat_residual, compat_residual_g1, compat_residual_g2, curvature_pencil_residual,
    nijenhuis_residual, riemannian_residual, transfer_endo, DEFAULT_LAMBDAS,
};
use fman_forge::eventual::certify;
use fman_forge::expr::parse::parse;
use fman_forge::fmanifold::{FPatch, SampleOpts};
use fman_forge::metric::{intersection_metric, metric_compatibility_residual, MetricField};
use fman_forge::Result;
use std::sync::Arc;

fn main() -> Result<()> {
    let opts = SampleOpts::default().with_tol(1e-7);

    // Three canonical coordinates with multiplication ∂i ∘ ∂j = δij ∂i,
    // the diagonal metric g̃ = Σ uᵢ (duᵢ)², and E with components 1 + uᵢ².
    let patch = FPatch::semisimple("egorov3", vec![(0.25, 1.25); 3]);
    let chart = patch.chart();
    let m = patch.mult_view::<f64>();
    let diag = ["u1", "u2", "u3"]
        .iter()
        .map(|t| parse(t, chart.coords(), chart.flavor()))
        .collect::<Result<Vec<_>>>()?;
    let gt = MetricField::from_diag(Arc::clone(chart), diag).flag_invariant();
    let e_field = patch.field_from_texts(&["1 + u1^2", "1 + u2^2", "1 + u3^2"])?;

    // g(X, Y) = g̃(E⁻¹ ∘ X, Y) is the intersection form of the pair.
    let cand = certify(&m, &e_field, &opts)?;
    println!("{}", cand.report().line());
    let g = intersection_metric(&gt, &m, cand.inverse());

    // Both metrics are flat ...
    println!("{}", metric_compatibility_residual(&gt, &opts)?.line());
    println!("{}", riemannian_residual(&m, &gt, &opts)?.line());

    // ... and they form a flat pencil: the transfer endomorphism
    // L = g⁻¹ g̃ is torsion-free and every g − λ·g̃ stays flat.
    let l = transfer_endo(&g, &gt);
    println!("{}", nijenhuis_residual(&l, &opts)?.line());
    println!(
        "{}",
        almost_compat_residual(&g, &gt, &DEFAULT_LAMBDAS, &opts)?.line()
    );
    println!("{}", compat_residual_g2(&g, &gt, &opts)?.line());
    println!("{}", compat_residual_g1(&g, &gt, &opts)?.line());
    let pencil = curvature_pencil_residual(&g, &gt, &DEFAULT_LAMBDAS, &opts)?;
    println!("{}", pencil.line());
    if let Some(lams) = pencil.notes.get("lambdas") {
        println!("  pencil parameters swept: {lams}");
    }

    Ok(())
}
