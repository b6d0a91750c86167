//! Expression trees over chart coordinates, their jet evaluation, and
//! symbolic differentiation.
//!
//! An `Expr` is a closed term over declared coordinate names, literals, the
//! arithmetic operators, constant powers, and the function set
//! {sin, cos, exp, log, sqrt, conj}. `conj` exists only on complex charts,
//! where evaluation uses Wirtinger slots (see `jet`). Symbolic derivatives
//! stay inside the same grammar: the derivative of `conj(f)` along slot `s`
//! is `conj` of the derivative of `f` along the swapped slot, so expression
//! fields remain expression fields under differentiation.

pub mod jet;
pub mod linalg;
pub mod parse;

use crate::error::{Error, Result};
use jet::{Jet, Scalar};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Real,
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Conj,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Conj => "conj",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "conj" => Func::Conj,
            _ => return None,
        })
    }
}

/// AST node with the byte span of the source text it came from. Nodes built
/// programmatically carry the empty span (0, 0).
#[derive(Clone, Debug)]
pub struct Node {
    pub kind: Kind,
    pub span: (usize, usize),
}

#[derive(Clone, Debug)]
pub enum Kind {
    Lit(f64),
    Coord(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    /// Constant exponent (integer or decimal); non-negative when parsed.
    Pow(Box<Node>, f64),
    Call(Func, Box<Node>),
}

impl Node {
    fn new(kind: Kind) -> Node {
        Node { kind, span: (0, 0) }
    }

    /// Structural equality, ignoring spans. Literals compare bit-exactly.
    pub fn structurally_eq(&self, other: &Node) -> bool {
        match (&self.kind, &other.kind) {
            (Kind::Lit(a), Kind::Lit(b)) => a.to_bits() == b.to_bits(),
            (Kind::Coord(a), Kind::Coord(b)) => a == b,
            (Kind::Neg(a), Kind::Neg(b)) => a.structurally_eq(b),
            (Kind::Add(a1, a2), Kind::Add(b1, b2))
            | (Kind::Sub(a1, a2), Kind::Sub(b1, b2))
            | (Kind::Mul(a1, a2), Kind::Mul(b1, b2))
            | (Kind::Div(a1, a2), Kind::Div(b1, b2)) => {
                a1.structurally_eq(b1) && a2.structurally_eq(b2)
            }
            (Kind::Pow(a, p), Kind::Pow(b, q)) => {
                p.to_bits() == q.to_bits() && a.structurally_eq(b)
            }
            (Kind::Call(f, a), Kind::Call(g, b)) => f == g && a.structurally_eq(b),
            _ => false,
        }
    }
}

/// A scalar function on a chart: AST plus the coordinate names it refers to.
#[derive(Clone, Debug)]
pub struct Expr {
    root: Node,
    coords: Arc<Vec<String>>,
    flavor: Flavor,
}

impl Expr {
    pub fn new(root: Node, coords: Arc<Vec<String>>, flavor: Flavor) -> Expr {
        Expr {
            root,
            coords,
            flavor,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn coords(&self) -> &Arc<Vec<String>> {
        &self.coords
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Total derivative slots: one per coordinate on real charts, a
    /// holomorphic/antiholomorphic pair per coordinate on complex charts.
    pub fn slots(&self) -> usize {
        match self.flavor {
            Flavor::Real => self.dim(),
            Flavor::Complex => 2 * self.dim(),
        }
    }

    // ---- builders ----------------------------------------------------

    pub fn lit(value: f64, coords: &Arc<Vec<String>>, flavor: Flavor) -> Expr {
        Expr::new(nlit(value), Arc::clone(coords), flavor)
    }

    pub fn coord(index: usize, coords: &Arc<Vec<String>>, flavor: Flavor) -> Expr {
        assert!(index < coords.len());
        Expr::new(Node::new(Kind::Coord(index)), Arc::clone(coords), flavor)
    }

    fn combine(&self, rhs: &Expr, f: impl FnOnce(Node, Node) -> Node) -> Expr {
        debug_assert_eq!(self.flavor, rhs.flavor);
        debug_assert_eq!(self.coords.len(), rhs.coords.len());
        Expr::new(
            f(self.root.clone(), rhs.root.clone()),
            Arc::clone(&self.coords),
            self.flavor,
        )
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        self.combine(rhs, nadd)
    }

    pub fn sub(&self, rhs: &Expr) -> Expr {
        self.combine(rhs, nsub)
    }

    pub fn mul(&self, rhs: &Expr) -> Expr {
        self.combine(rhs, nmul)
    }

    pub fn div(&self, rhs: &Expr) -> Expr {
        self.combine(rhs, ndiv)
    }

    pub fn neg(&self) -> Expr {
        Expr::new(nneg(self.root.clone()), Arc::clone(&self.coords), self.flavor)
    }

    pub fn pow(&self, p: f64) -> Expr {
        Expr::new(npow(self.root.clone(), p), Arc::clone(&self.coords), self.flavor)
    }

    pub fn call(&self, func: Func) -> Expr {
        debug_assert!(func != Func::Conj || self.flavor == Flavor::Complex);
        Expr::new(
            ncall(func, self.root.clone()),
            Arc::clone(&self.coords),
            self.flavor,
        )
    }

    pub fn scale(&self, c: f64) -> Expr {
        Expr::new(
            nmul(nlit(c), self.root.clone()),
            Arc::clone(&self.coords),
            self.flavor,
        )
    }

    /// Re-home the expression onto a chart with coordinate list `coords`,
    /// sending coordinate `i` to `map[i]`.
    pub fn reindex(&self, map: &[usize], coords: &Arc<Vec<String>>) -> Expr {
        assert_eq!(map.len(), self.dim());
        fn walk(node: &Node, map: &[usize]) -> Node {
            let kind = match &node.kind {
                Kind::Lit(v) => Kind::Lit(*v),
                Kind::Coord(i) => Kind::Coord(map[*i]),
                Kind::Neg(a) => Kind::Neg(Box::new(walk(a, map))),
                Kind::Add(a, b) => Kind::Add(Box::new(walk(a, map)), Box::new(walk(b, map))),
                Kind::Sub(a, b) => Kind::Sub(Box::new(walk(a, map)), Box::new(walk(b, map))),
                Kind::Mul(a, b) => Kind::Mul(Box::new(walk(a, map)), Box::new(walk(b, map))),
                Kind::Div(a, b) => Kind::Div(Box::new(walk(a, map)), Box::new(walk(b, map))),
                Kind::Pow(a, p) => Kind::Pow(Box::new(walk(a, map)), *p),
                Kind::Call(f, a) => Kind::Call(*f, Box::new(walk(a, map))),
            };
            Node {
                kind,
                span: node.span,
            }
        }
        Expr::new(walk(&self.root, map), Arc::clone(coords), self.flavor)
    }

    // ---- evaluation ---------------------------------------------------

    /// Evaluate to a jet of the requested order at the chart point `coords`.
    /// The scalar type must match the chart flavor.
    pub fn eval<S: Scalar>(&self, point: &[S], order: usize) -> Result<Jet<S>> {
        if S::IS_COMPLEX != (self.flavor == Flavor::Complex) {
            return Err(Error::invalid(
                "scalar type does not match chart flavor".to_string(),
            ));
        }
        if point.len() != self.dim() {
            return Err(Error::invalid(format!(
                "point has {} coordinates, chart has {}",
                point.len(),
                self.dim()
            )));
        }
        let slots = self.slots();
        let base: Vec<Jet<S>> = point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::coordinate(v, i, slots, order))
            .collect();
        self.eval_node(&self.root, &base)
    }

    fn eval_node<S: Scalar>(&self, node: &Node, base: &[Jet<S>]) -> Result<Jet<S>> {
        let n = self.dim();
        let slots = base[0].slots();
        let order = base[0].order();
        let domain = |what: &str| Error::Domain {
            start: node.span.0,
            end: node.span.1,
            what: what.to_string(),
        };
        let out = match &node.kind {
            Kind::Lit(v) => Jet::constant(S::from_f64(*v), slots, order),
            Kind::Coord(i) => base[*i].clone(),
            Kind::Neg(a) => self.eval_node(a, base)?.neg(),
            Kind::Add(a, b) => self.eval_node(a, base)?.add(&self.eval_node(b, base)?),
            Kind::Sub(a, b) => self.eval_node(a, base)?.sub(&self.eval_node(b, base)?),
            Kind::Mul(a, b) => self.eval_node(a, base)?.mul(&self.eval_node(b, base)?),
            Kind::Div(a, b) => {
                let den = self.eval_node(b, base)?;
                if den.value().abs() == 0.0 {
                    return Err(domain("division by zero"));
                }
                self.eval_node(a, base)?.div(&den)
            }
            Kind::Pow(a, p) => {
                let body = self.eval_node(a, base)?;
                let v = body.value();
                if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                    let k = *p as i32;
                    if k < 0 && v.abs() == 0.0 {
                        return Err(domain("negative power of zero"));
                    }
                    body.powi(k)
                } else if S::IS_COMPLEX {
                    if v.abs() == 0.0 {
                        return Err(domain("fractional power of zero"));
                    }
                    body.powf(*p)
                } else {
                    if v.re() <= 0.0 {
                        return Err(domain("fractional power of a nonpositive value"));
                    }
                    body.powf(*p)
                }
            }
            Kind::Call(func, a) => {
                let body = self.eval_node(a, base)?;
                let v = body.value();
                match func {
                    Func::Sin => body.sin(),
                    Func::Cos => body.cos(),
                    Func::Exp => body.exp(),
                    Func::Log => {
                        if S::IS_COMPLEX {
                            if v.abs() == 0.0 {
                                return Err(domain("log of zero"));
                            }
                        } else if v.re() <= 0.0 {
                            return Err(domain("log of a nonpositive value"));
                        }
                        body.ln()
                    }
                    Func::Sqrt => {
                        if S::IS_COMPLEX {
                            if v.abs() == 0.0 {
                                return Err(domain("square root of zero"));
                            }
                        } else if v.re() <= 0.0 {
                            return Err(domain("square root of a nonpositive value"));
                        }
                        body.sqrt()
                    }
                    Func::Conj => {
                        debug_assert!(S::IS_COMPLEX, "conj reaches eval only on complex charts");
                        body.conj_swap(n)
                    }
                }
            }
        };
        if !out.is_finite() {
            return Err(domain("non-finite intermediate value"));
        }
        Ok(out)
    }

    // ---- symbolic differentiation --------------------------------------

    /// Symbolic partial derivative along a slot. On complex charts slot
    /// `i < n` means the holomorphic direction of coordinate `i`, slot
    /// `n + i` the antiholomorphic one.
    pub fn partial(&self, slot: usize) -> Expr {
        assert!(slot < self.slots());
        Expr::new(
            self.diff_node(&self.root, slot),
            Arc::clone(&self.coords),
            self.flavor,
        )
    }

    fn swap_slot(&self, slot: usize) -> usize {
        match self.flavor {
            Flavor::Real => slot,
            Flavor::Complex => {
                let n = self.dim();
                if slot < n {
                    slot + n
                } else {
                    slot - n
                }
            }
        }
    }

    fn diff_node(&self, node: &Node, slot: usize) -> Node {
        match &node.kind {
            Kind::Lit(_) => nlit(0.0),
            Kind::Coord(i) => nlit(if slot == *i { 1.0 } else { 0.0 }),
            Kind::Neg(a) => nneg(self.diff_node(a, slot)),
            Kind::Add(a, b) => nadd(self.diff_node(a, slot), self.diff_node(b, slot)),
            Kind::Sub(a, b) => nsub(self.diff_node(a, slot), self.diff_node(b, slot)),
            Kind::Mul(a, b) => nadd(
                nmul(self.diff_node(a, slot), (**b).clone()),
                nmul((**a).clone(), self.diff_node(b, slot)),
            ),
            Kind::Div(a, b) => ndiv(
                nsub(
                    nmul(self.diff_node(a, slot), (**b).clone()),
                    nmul((**a).clone(), self.diff_node(b, slot)),
                ),
                npow((**b).clone(), 2.0),
            ),
            Kind::Pow(a, p) => {
                if *p == 0.0 {
                    return nlit(0.0);
                }
                let da = self.diff_node(a, slot);
                // Keep printed exponents non-negative: p·a^(p-1)·a' when
                // p >= 1, else p·a'/a^(1-p).
                if *p >= 1.0 {
                    nmul(nlit(*p), nmul(npow((**a).clone(), p - 1.0), da))
                } else {
                    nmul(nlit(*p), ndiv(da, npow((**a).clone(), 1.0 - p)))
                }
            }
            Kind::Call(func, a) => {
                let da = self.diff_node(a, slot);
                match func {
                    Func::Sin => nmul(ncall(Func::Cos, (**a).clone()), da),
                    Func::Cos => nneg(nmul(ncall(Func::Sin, (**a).clone()), da)),
                    Func::Exp => nmul(ncall(Func::Exp, (**a).clone()), da),
                    Func::Log => ndiv(da, (**a).clone()),
                    Func::Sqrt => ndiv(da, nmul(nlit(2.0), ncall(Func::Sqrt, (**a).clone()))),
                    Func::Conj => ncall(Func::Conj, self.diff_node(a, self.swap_slot(slot))),
                }
            }
        }
    }

    // ---- printing -------------------------------------------------------

    /// Fully parenthesized source form; reparsing yields a structurally
    /// equal AST.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        self.print_node(&self.root, &mut out);
        out
    }

    fn print_node(&self, node: &Node, out: &mut String) {
        match &node.kind {
            Kind::Lit(v) => out.push_str(&fmt_literal(*v)),
            Kind::Coord(i) => out.push_str(&self.coords[*i]),
            Kind::Neg(a) => {
                out.push_str("(-");
                self.print_node(a, out);
                out.push(')');
            }
            Kind::Add(a, b) => self.print_binary(a, " + ", b, out),
            Kind::Sub(a, b) => self.print_binary(a, " - ", b, out),
            Kind::Mul(a, b) => self.print_binary(a, " * ", b, out),
            Kind::Div(a, b) => self.print_binary(a, " / ", b, out),
            Kind::Pow(a, p) => {
                out.push('(');
                self.print_node(a, out);
                out.push_str(" ^ ");
                out.push_str(&fmt_literal(*p));
                out.push(')');
            }
            Kind::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                self.print_node(a, out);
                out.push(')');
            }
        }
    }

    fn print_binary(&self, a: &Node, op: &str, b: &Node, out: &mut String) {
        out.push('(');
        self.print_node(a, out);
        out.push_str(op);
        self.print_node(b, out);
        out.push(')');
    }
}

/// Positional decimal form (the grammar has no exponent notation). `Display`
/// for `f64` already avoids scientific notation and round-trips.
fn fmt_literal(v: f64) -> String {
    format!("{v}")
}

// Node constructors with just enough folding to keep symbolic derivatives
// from ballooning: additive/multiplicative identities and absorbing zeros.

fn is_lit(node: &Node, v: f64) -> bool {
    matches!(node.kind, Kind::Lit(x) if x == v)
}

pub(crate) fn nlit(v: f64) -> Node {
    if v < 0.0 {
        nneg(Node::new(Kind::Lit(-v)))
    } else {
        Node::new(Kind::Lit(v))
    }
}

pub(crate) fn nneg(a: Node) -> Node {
    if is_lit(&a, 0.0) {
        return a;
    }
    Node::new(Kind::Neg(Box::new(a)))
}

pub(crate) fn nadd(a: Node, b: Node) -> Node {
    if is_lit(&a, 0.0) {
        return b;
    }
    if is_lit(&b, 0.0) {
        return a;
    }
    Node::new(Kind::Add(Box::new(a), Box::new(b)))
}

pub(crate) fn nsub(a: Node, b: Node) -> Node {
    if is_lit(&b, 0.0) {
        return a;
    }
    if is_lit(&a, 0.0) {
        return nneg(b);
    }
    Node::new(Kind::Sub(Box::new(a), Box::new(b)))
}

pub(crate) fn nmul(a: Node, b: Node) -> Node {
    if is_lit(&a, 0.0) || is_lit(&b, 0.0) {
        return nlit(0.0);
    }
    if is_lit(&a, 1.0) {
        return b;
    }
    if is_lit(&b, 1.0) {
        return a;
    }
    Node::new(Kind::Mul(Box::new(a), Box::new(b)))
}

pub(crate) fn ndiv(a: Node, b: Node) -> Node {
    if is_lit(&a, 0.0) {
        return nlit(0.0);
    }
    if is_lit(&b, 1.0) {
        return a;
    }
    Node::new(Kind::Div(Box::new(a), Box::new(b)))
}

pub(crate) fn npow(a: Node, p: f64) -> Node {
    if p == 0.0 {
        return nlit(1.0);
    }
    if p == 1.0 {
        return a;
    }
    Node::new(Kind::Pow(Box::new(a), p))
}

pub(crate) fn ncall(f: Func, a: Node) -> Node {
    if f == Func::Conj {
        // conj of a real constant is itself; keeps derivative trees tidy.
        if let Kind::Lit(_) = a.kind {
            return a;
        }
    }
    Node::new(Kind::Call(f, Box::new(a)))
}
