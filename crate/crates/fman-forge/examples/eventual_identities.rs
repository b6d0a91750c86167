//! Certify eventual identities and explore their group structure: the
//! characterization residual, multiplicative inverses, products, Lie
//! brackets, and the power-bracket identity
//! [E^(n), E^(m)] = (m − n)·E^(n+m−1).
//!
//! Run with: cargo run --example eventual_identities

use fman_forge::eventual::{
    certify, ev_bracket, ev_product, inverse_residual, power_bracket_residual,
    weak_vector_residual,
};
use fman_forge::expr::parse::parse;
use fman_forge::expr::Flavor;
use fman_forge::field::MultTable;
use fman_forge::fmanifold::{FPatch, SampleOpts};
use fman_forge::patch::Chart;
use fman_forge::Result;
use std::sync::Arc;

fn main() -> Result<()> {
    let opts = SampleOpts::default();

    // A non-semisimple two-dimensional patch: ∂1 is the unity and
    // ∂2 ∘ ∂2 = 0, so the algebra has a nilpotent direction.
    let coords = Arc::new(vec!["x1".to_string(), "x2".to_string()]);
    let p = |t: &str| parse(t, &coords, Flavor::Real);
    let entries = vec![
        p("1")?, p("0")?, // ∂1 ∘ ∂1
        p("0")?, p("1")?, // ∂1 ∘ ∂2
        p("0")?, p("0")?, // ∂2 ∘ ∂2
    ];
    let chart = Chart::new_real("nilpotent2", Arc::clone(&coords), vec![(0.25, 1.25); 2]);
    let patch = FPatch::new(
        chart,
        MultTable::from_entries(2, entries),
        vec![p("1")?, p("0")?],
        false,
    );

    let m = patch.mult_view::<f64>();
    let e1 = patch.field_from_texts(&["1 + x1^2", "x1*x2"])?;

    // The characterization certificate and its companions.
    let cand = certify(&m, &e1, &opts)?;
    println!("{}", cand.report().line());
    println!("{}", weak_vector_residual(&m, &e1, &opts)?.line());
    println!("{}", inverse_residual(&cand, &opts)?.line());

    // Closure: products and brackets of eventual identities certify again.
    let unity_cand = certify(&m, &patch.unity_view(), &opts)?;
    println!("{}", ev_product(&cand, &cand, &opts)?.report().line());
    println!("{}", ev_bracket(&cand, &unity_cand, &opts)?.report().line());

    // The bracket of powers of a single eventual identity collapses to a
    // multiple of another power: [E^(n), E^(m)] = (m − n)·E^(n+m−1).
    for (np, mp) in [(-1, 0), (0, 1), (1, 2), (-1, 2)] {
        let rep = power_bracket_residual(&cand, np, mp, &opts)?;
        println!("{}  (n = {np}, m = {mp})", rep.line());
    }

    Ok(())
}
