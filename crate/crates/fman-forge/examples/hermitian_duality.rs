//! Diagonal hermitian geometry on a complex semisimple patch: the
//! harmonicity equations for (H, k), compatibility of the derived
//! bilinear pairing, the twisted variants for an eventual identity E,
//! duality of the whole package, and flatness of the associated
//! connection pencil on the z-punctured plane.
//!
//! Run with: cargo run --example hermitian_duality

use fman_forge::error::Error;
use fman_forge::expr::parse::parse;
use fman_forge::expr::Flavor;
use fman_forge::fmanifold::SampleOpts;
use fman_forge::ttstar::{
    dchk_residual, default_pencil_points, dual_dchk_suite, dual_structure, flat_pencil_residual,
    herm1_duality_check, herm1_residual, herm2_residual, ttstar_residuals, DiagTTData,
};
use fman_forge::Result;

fn main() -> Result<()> {
    let opts = SampleOpts::default().with_tol(1e-8);

    // Pluriharmonic hermitian data on two complex coordinates, with the
    // compatible real structure k and the Euler-type field E = (u1, u2).
    let data = DiagTTData::canonical(
        "ttdiag2",
        vec![(0.5, 1.5); 2],
        vec![(0.5, 1.5); 2],
        &["exp(u1 + conj(u1))", "exp(u2 + conj(u2))"],
        &["exp(conj(u1) - u1)", "exp(conj(u2) - u2)"],
        Some(&["u1", "u2"]),
    )?;
    let ev = data.eventual().expect("canonical data carries E").clone();

    // Harmonicity of the Higgs field and curvature of the Chern connection.
    let (r1, r2) = ttstar_residuals(&data, &opts)?;
    println!("{}", r1.line());
    println!("{}", r2.line());

    // The bilinear pairing g = H·k̄ is symmetric, multiplication-invariant,
    // and parallel for both connection pieces.
    println!("{}", dchk_residual(&data, &opts)?.line());

    // Twisting by E preserves both harmonicity equations.
    println!("{}", herm1_residual(&data, &ev, &opts)?.line());
    println!("{}", herm2_residual(&data, &ev, &opts)?.line());

    // The dual package (H/|E∘|, k·(E∘)^{1/2}/conj((E∘)^{1/2}), dual
    // multiplication) satisfies the same compatibility equations.
    println!("{}", dual_dchk_suite(&data, &ev, &opts)?.line());
    println!("{}", herm1_duality_check(&data, &ev, &opts)?.line());

    // The full one-parameter family of connections is flat away from the
    // origin of the spectral plane.
    let pencil = flat_pencil_residual(&data, &default_pencil_points(), &opts)?;
    println!("{}", pencil.line());
    if let Some(zs) = pencil.notes.get("z") {
        println!("  spectral points swept: {zs}");
    }

    // Dualizing requires a branch of (E∘)^{1/2}; a twist that crosses the
    // negative real axis is rejected rather than silently mis-branched.
    let bad = DiagTTData::canonical(
        "cut",
        vec![(0.5, 1.5); 2],
        vec![(0.5, 1.5); 2],
        &["1", "1"],
        &["1", "1"],
        None,
    )?;
    let neg = ["0 - 1", "1"]
        .iter()
        .map(|t| parse(t, bad.patch().chart().coords(), Flavor::Complex))
        .collect::<Result<Vec<_>>>()?;
    match dual_structure(&bad, &neg, &opts) {
        Err(Error::BranchCut { count, first }) => {
            println!("branch cut detected at {count} sample points (first: {first})");
        }
        other => println!("unexpected outcome: {:?}", other.map(|_| "dual data")),
    }

    Ok(())
}
