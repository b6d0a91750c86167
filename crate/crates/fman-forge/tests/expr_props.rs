//! Property and oracle tests for the expression layer.
//!
//! The finite-difference oracles here are the independent reference for jet
//! evaluation: central differences of plain value evaluations for gradients,
//! and central differences of first-order jets for Hessians (a pure
//! second-order value stencil at step 1e-5 drowns in roundoff near 1e-6).

use fman_forge::expr::parse::parse;
use fman_forge::expr::{Expr, Flavor, Func, Kind, Node};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn chart(names: &[&str]) -> Arc<Vec<String>> {
    Arc::new(names.iter().map(|s| s.to_string()).collect())
}

const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-6;

/// Central finite difference of a scalar function of one perturbed slot.
fn central<F: Fn(f64) -> f64>(f: F) -> f64 {
    (f(FD_STEP) - f(-FD_STEP)) / (2.0 * FD_STEP)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1.0f64.max(a.abs()).max(b.abs())
}

#[test]
fn gradient_and_hessian_match_central_differences() {
    // One entry per operator and function, in domains where each is smooth.
    let cases: &[(&str, &[&str], &[f64])] = &[
        ("u1 + u2 - 0.5*u1", &["u1", "u2"], &[0.3, -0.7]),
        ("u1*u2*u1", &["u1", "u2"], &[1.2, -0.4]),
        ("u1 / (1 + u2^2)", &["u1", "u2"], &[0.9, 0.6]),
        ("u1^3", &["u1"], &[-1.1]),
        ("u1^1.5", &["u1"], &[2.3]),
        ("sin(u1*u2)", &["u1", "u2"], &[0.8, -0.9]),
        ("cos(u1) * sin(u2)", &["u1", "u2"], &[0.2, 1.4]),
        ("exp(u1 - u2^2)", &["u1", "u2"], &[0.5, 0.3]),
        ("log(1 + u1^2 + u2^2)", &["u1", "u2"], &[0.7, -0.2]),
        ("sqrt(2 + u1)", &["u1"], &[1.7]),
        ("-(u1 - u2)^2 / (3 + u1)", &["u1", "u2"], &[0.4, 1.1]),
        (
            "sin(u1)^2 / (1 + exp(u2)) + sqrt(4 + u3)",
            &["u1", "u2", "u3"],
            &[0.6, -0.3, 0.9],
        ),
    ];

    for (text, names, point) in cases {
        let e = parse(text, &chart(names), Flavor::Real).unwrap();
        let n = point.len();
        let jet = e.eval(point, 2).unwrap();

        let value_at = |p: &[f64]| e.eval(p, 0).unwrap().value();
        let grad_at = |p: &[f64], s: usize| e.eval(p, 1).unwrap().partial(s);

        for s in 0..n {
            let fd = central(|h| {
                let mut p = point.to_vec();
                p[s] += h;
                value_at(&p)
            });
            assert!(
                rel_close(jet.partial(s), fd, FD_TOL),
                "{text}: d/d{} ad={} fd={}",
                names[s],
                jet.partial(s),
                fd
            );
        }
        for a in 0..n {
            for b in 0..n {
                let fd = central(|h| {
                    let mut p = point.to_vec();
                    p[b] += h;
                    grad_at(&p, a)
                });
                assert!(
                    rel_close(jet.second(a, b), fd, FD_TOL),
                    "{text}: d2/d{}d{} ad={} fd={}",
                    names[a],
                    names[b],
                    jet.second(a, b),
                    fd
                );
            }
        }
    }
}

#[test]
fn wirtinger_parts_match_real_finite_differences() {
    // For f(u, conj(u)) seen as a function of (x, y), the Wirtinger parts
    // satisfy d = (d_x - i d_y)/2 and dbar = (d_x + i d_y)/2.
    let cases: &[(&str, Complex64)] = &[
        ("u1*conj(u1)", Complex64::new(1.0, 1.0)),
        ("exp(u1) + conj(u1)^2", Complex64::new(0.3, -0.6)),
        ("u1^2 * conj(u1)", Complex64::new(-0.4, 0.8)),
        ("sin(u1*conj(u1))", Complex64::new(0.5, 0.2)),
    ];
    let names = chart(&["u1"]);
    for (text, u) in cases {
        let e = parse(text, &names, Flavor::Complex).unwrap();
        let jet = e.eval(&[*u], 1).unwrap();
        let value = |x: f64, y: f64| e.eval(&[Complex64::new(x, y)], 0).unwrap().value();
        let dx = {
            let f = |h: f64| value(u.re + h, u.im);
            (f(FD_STEP) - f(-FD_STEP)) / (2.0 * FD_STEP)
        };
        let dy = {
            let f = |h: f64| value(u.re, u.im + h);
            (f(FD_STEP) - f(-FD_STEP)) / (2.0 * FD_STEP)
        };
        let hol = (dx - Complex64::new(0.0, 1.0) * dy) * 0.5;
        let anti = (dx + Complex64::new(0.0, 1.0) * dy) * 0.5;
        assert!(
            (jet.partial(0) - hol).norm() < 1e-6 * (1.0 + hol.norm()),
            "{text}: hol ad={} fd={}",
            jet.partial(0),
            hol
        );
        assert!(
            (jet.partial(1) - anti).norm() < 1e-6 * (1.0 + anti.norm()),
            "{text}: anti ad={} fd={}",
            jet.partial(1),
            anti
        );
    }
}

#[test]
fn conj_free_expressions_are_holomorphic_at_random_points() {
    let names = chart(&["u1", "u2"]);
    let exprs = [
        "u1^3 + u2*u1",
        "exp(u1*u2)",
        "sin(u1) - u2^2/(3 + u1^2)",
        "sqrt(4 + u1^2)",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for text in exprs {
        let e = parse(text, &names, Flavor::Complex).unwrap();
        for _ in 0..100 {
            let p = [
                Complex64::new(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9)),
                Complex64::new(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9)),
            ];
            let jet = match e.eval(&p, 2) {
                Ok(j) => j,
                // sqrt/log branch guards can reject a draw; holomorphy is
                // only claimed where the expression evaluates.
                Err(_) => continue,
            };
            for anti in 2..4 {
                assert_eq!(jet.partial(anti), Complex64::new(0.0, 0.0), "{text}");
                for s in 0..4 {
                    assert_eq!(jet.second(anti, s), Complex64::new(0.0, 0.0), "{text}");
                }
            }
        }
    }
}

// Random AST generator for the print/reparse property. Spans are left empty;
// structural equality ignores them.

fn lit(v: f64) -> Node {
    Node {
        kind: Kind::Lit(v),
        span: (0, 0),
    }
}

fn arb_node() -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        (0u8..100, 0u8..100).prop_map(|(a, b)| lit(a as f64 + b as f64 / 100.0)),
        (0usize..3).prop_map(|i| Node {
            kind: Kind::Coord(i),
            span: (0, 0)
        }),
    ];
    leaf.prop_recursive(4, 64, 8, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node {
                kind: Kind::Add(Box::new(a), Box::new(b)),
                span: (0, 0)
            }),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node {
                kind: Kind::Sub(Box::new(a), Box::new(b)),
                span: (0, 0)
            }),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node {
                kind: Kind::Mul(Box::new(a), Box::new(b)),
                span: (0, 0)
            }),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node {
                kind: Kind::Div(Box::new(a), Box::new(b)),
                span: (0, 0)
            }),
            inner.clone().prop_map(|a| Node {
                kind: Kind::Neg(Box::new(a)),
                span: (0, 0)
            }),
            (inner.clone(), prop_oneof![Just(0.0), Just(1.0), Just(2.0), Just(3.0), Just(0.5)])
                .prop_map(|(a, p)| Node {
                    kind: Kind::Pow(Box::new(a), p),
                    span: (0, 0)
                }),
            (
                inner,
                prop_oneof![
                    Just(Func::Sin),
                    Just(Func::Cos),
                    Just(Func::Exp),
                    Just(Func::Log),
                    Just(Func::Sqrt)
                ]
            )
                .prop_map(|(a, f)| Node {
                    kind: Kind::Call(f, Box::new(a)),
                    span: (0, 0)
                }),
        ]
    })
}

proptest! {
    #[test]
    fn print_then_parse_is_structurally_identity(root in arb_node()) {
        let names = chart(&["u1", "u2", "u3"]);
        let e = Expr::new(root, Arc::clone(&names), Flavor::Real);
        let printed = e.pretty();
        let back = parse(&printed, &names, Flavor::Real).unwrap();
        prop_assert!(e.root().structurally_eq(back.root()), "printed: {printed}");
    }
}
