//! Certify the multiplication axioms on a few built-in style patches:
//! associativity, unity, the integrability condition, and an Euler field.
//!
//! Run with: cargo run --example certify_patch

use fman_forge::fmanifold::{
    algebra_residual, euler_residual, hm_residual, product_patch, FPatch, SampleOpts,
};
use fman_forge::Result;

fn main() -> Result<()> {
    let opts = SampleOpts::default();

    let ss3 = FPatch::semisimple("semisimple3", vec![(0.25, 1.25); 3]);
    let m = ss3.mult_view::<f64>();
    println!("{}", algebra_residual(&m, &opts)?.line());
    println!("{}", hm_residual(&m, &opts)?.line());
    let euler = ss3.field_from_texts(&["u1", "u2", "u3"])?;
    println!("{}", euler_residual(&m, &euler, 1.0, &opts)?.line());

    // Products of patches stay certified.
    let prod = product_patch(&ss3, &FPatch::semisimple("semisimple2", vec![(0.25, 1.25); 2]))?;
    let mp = prod.mult_view::<f64>();
    println!("{}", algebra_residual(&mp, &opts)?.line());
    println!("{}", hm_residual(&mp, &opts)?.line());

    Ok(())
}
