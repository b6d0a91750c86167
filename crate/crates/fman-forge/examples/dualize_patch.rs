//! Dualize a multiplication through an eventual identity E:
//! X ∗ Y = X ∘ Y ∘ E⁻¹. The dual is again an F-manifold patch with
//! unity E, dualizing twice returns the original multiplication, and on
//! a product patch an eventual identity splits into factor pieces.
//!
//! Run with: cargo run --example dualize_patch

use fman_forge::eventual::{
    certify, decompose_on_product, dual_unity_residual, dualize, mult_agreement_residual,
    sample_invertible,
};
use fman_forge::fmanifold::{algebra_residual, hm_residual, product_patch, FPatch, SampleOpts};
use fman_forge::Result;

fn main() -> Result<()> {
    let opts = SampleOpts::default();

    let ss3 = FPatch::semisimple("semisimple3", vec![(0.25, 1.25); 3]);
    let m = ss3.mult_view::<f64>();
    let euler = ss3.field_from_texts(&["u1", "u2", "u3"])?;

    // Certify E, then build the dual patch it induces.
    let cand = certify(&m, &euler, &opts)?;
    println!("{}", cand.report().line());
    let d = dualize(&cand);

    // The dual multiplication satisfies the same axioms, with unity E.
    println!("{}", algebra_residual(d.dual(), &opts)?.line());
    println!("{}", hm_residual(d.dual(), &opts)?.line());
    println!("{}", dual_unity_residual(&d, &opts)?.line());

    // The original unity is an eventual identity for the dual patch, and
    // dualizing through it restores the original multiplication.
    let back = certify(d.dual(), m.unity(), &opts)?;
    let dd = dualize(&back);
    let points = sample_invertible(&m, &euler, opts.seed, opts.count)?;
    println!(
        "{}",
        mult_agreement_residual(dd.dual(), &m, &points, "dual-of-dual", &opts)?.line()
    );

    // On a product patch, an eventual identity decomposes into eventual
    // identities of the factors.
    let prod = product_patch(
        &ss3,
        &FPatch::semisimple("semisimple2", vec![(0.25, 1.25); 2]),
    )?;
    let e_prod = prod.field_from_texts(&["u1", "u2", "u3", "1 + u4^2", "1 + u5^2"])?;
    let (_, _, rep) = decompose_on_product(&prod, &e_prod, &opts)?;
    println!("{}", rep.line());

    Ok(())
}
