use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{logistic_f64, Real};

#[derive(Clone, Copy)]
struct Edge {
    parent: u32,
    weight: f64,
}

#[derive(Clone, Copy)]
struct Node {
    start: u32,
    len: u32,
}

/// Record of elementary operations, replayed backwards to accumulate adjoints.
///
/// A tape belongs to a single evaluation and is not shared across threads.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    edges: RefCell<Vec<Edge>>,
    fault: RefCell<Option<String>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape")
            .field("nodes", &self.nodes.borrow().len())
            .field("edges", &self.edges.borrow().len())
            .finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::with_capacity(1 << 16)),
            edges: RefCell::new(Vec::with_capacity(1 << 17)),
            fault: RefCell::new(None),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A fresh independent variable.
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.push_node(std::iter::empty());
        Var { val: value, node: Some((self, idx)) }
    }

    pub fn inputs(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    /// Records that a value on this tape came from a computation with no derivative.
    /// The first such mark is reported by [`evaluate_with_gradient`](super::evaluate_with_gradient).
    pub fn mark_non_differentiable(&self, primitive: &str) {
        let mut fault = self.fault.borrow_mut();
        if fault.is_none() {
            *fault = Some(primitive.to_string());
        }
    }

    pub fn fault(&self) -> Option<String> {
        self.fault.borrow().clone()
    }

    fn push_node(&self, parents: impl Iterator<Item = (u32, f64)>) -> u32 {
        let mut edges = self.edges.borrow_mut();
        let start = edges.len() as u32;
        edges.extend(parents.map(|(parent, weight)| Edge { parent, weight }));
        let len = edges.len() as u32 - start;
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { start, len });
        (nodes.len() - 1) as u32
    }

    /// Adjoints of `output` with respect to every node on the tape.
    pub fn adjoints(&self, output: Var<'_>) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let edges = self.edges.borrow();
        let mut adj = vec![0.0; nodes.len()];
        let Some((tape, out)) = output.node else {
            return adj;
        };
        assert!(std::ptr::eq(tape, self), "output recorded on a different tape");
        adj[out as usize] = 1.0;
        for i in (0..=out as usize).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let n = nodes[i];
            for e in &edges[n.start as usize..(n.start + n.len) as usize] {
                adj[e.parent as usize] += a * e.weight;
            }
        }
        adj
    }

    /// Gradient of `output` with respect to `inputs`.
    pub fn gradient(&self, output: Var<'_>, inputs: &[Var<'_>]) -> Vec<f64> {
        let adj = self.adjoints(output);
        inputs
            .iter()
            .map(|v| match v.node {
                Some((_, idx)) => adj[idx as usize],
                None => 0.0,
            })
            .collect()
    }
}

/// Scalar recorded on a [`Tape`]; constants carry no tape node.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    val: f64,
    node: Option<(&'t Tape, u32)>,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some((_, idx)) => write!(f, "Var({} @{})", self.val, idx),
            None => write!(f, "Var({})", self.val),
        }
    }
}

impl<'t> Var<'t> {
    pub fn is_constant(&self) -> bool {
        self.node.is_none()
    }

    fn unary(self, val: f64, d: f64) -> Self {
        match self.node {
            None => Var { val, node: None },
            Some((tape, idx)) => Var { val, node: Some((tape, tape.push_node(std::iter::once((idx, d))))) },
        }
    }

    fn binary(self, other: Self, val: f64, da: f64, db: f64) -> Self {
        match (self.node, other.node) {
            (None, None) => Var { val, node: None },
            (Some((tape, a)), None) => Var { val, node: Some((tape, tape.push_node(std::iter::once((a, da))))) },
            (None, Some((tape, b))) => Var { val, node: Some((tape, tape.push_node(std::iter::once((b, db))))) },
            (Some((tape, a)), Some((_, b))) => {
                Var { val, node: Some((tape, tape.push_node([(a, da), (b, db)].into_iter()))) }
            }
        }
    }

    fn nary(val: f64, coeffs: impl Iterator<Item = f64>, xs: &[Var<'t>]) -> Self {
        let tape = xs.iter().find_map(|x| x.node.map(|(t, _)| t));
        match tape {
            None => Var { val, node: None },
            Some(tape) => {
                let parents =
                    coeffs.zip(xs).filter_map(|(c, x)| x.node.map(|(_, idx)| (idx, c))).filter(|&(_, c)| c != 0.0);
                Var { val, node: Some((tape, tape.push_node(parents))) }
            }
        }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.val + rhs.val, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.val - rhs.val, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, self.val * rhs.val, rhs.val, self.val)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q = self.val / rhs.val;
        self.binary(rhs, q, 1.0 / rhs.val, -q / rhs.val)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.unary(-self.val, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        self.unary(self.val + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        self.unary(self.val - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        self.unary(self.val * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        self.unary(self.val / rhs, 1.0 / rhs)
    }
}

impl<'t> Real for Var<'t> {
    #[inline]
    fn constant(x: f64) -> Self {
        Var { val: x, node: None }
    }
    #[inline]
    fn value(&self) -> f64 {
        self.val
    }
    fn identical(&self, other: &Self) -> bool {
        self.val.to_bits() == other.val.to_bits()
            && match (self.node, other.node) {
                (None, None) => true,
                (Some((_, a)), Some((_, b))) => a == b,
                _ => false,
            }
    }
    fn exp(self) -> Self {
        let e = self.val.exp();
        self.unary(e, e)
    }
    fn ln(self) -> Self {
        self.unary(self.val.ln(), 1.0 / self.val)
    }
    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        self.unary(s, 0.5 / s)
    }
    fn sin(self) -> Self {
        self.unary(self.val.sin(), self.val.cos())
    }
    fn cos(self) -> Self {
        self.unary(self.val.cos(), -self.val.sin())
    }
    fn tanh(self) -> Self {
        let t = self.val.tanh();
        self.unary(t, 1.0 - t * t)
    }
    fn asin(self) -> Self {
        self.unary(self.val.asin(), 1.0 / (1.0 - self.val * self.val).sqrt())
    }
    fn powi(self, n: i32) -> Self {
        let d = if n == 0 { 0.0 } else { n as f64 * self.val.powi(n - 1) };
        self.unary(self.val.powi(n), d)
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.val;
        self.unary(r, -r * r)
    }
    fn logistic(self) -> Self {
        let s = logistic_f64(self.val);
        self.unary(s, s * (1.0 - s))
    }
    fn linear_combination(coeffs: &[f64], xs: &[Self]) -> Self {
        debug_assert_eq!(coeffs.len(), xs.len());
        let mut acc = 0.0;
        for (c, x) in coeffs.iter().zip(xs) {
            acc += c * x.val;
        }
        Var::nary(acc, coeffs.iter().copied(), xs)
    }
    fn sum(xs: &[Self]) -> Self {
        let mut acc = 0.0;
        for x in xs {
            acc += x.val;
        }
        Var::nary(acc, std::iter::repeat(1.0), xs)
    }
    fn rsub(self, c: f64) -> Self {
        self.unary(c - self.val, -1.0)
    }
    fn rdiv(self, c: f64) -> Self {
        let q = c / self.val;
        self.unary(q, -q / self.val)
    }
}
