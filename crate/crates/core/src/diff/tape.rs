use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Real;
use crate::error::{Error, Result};

#[derive(Default)]
struct Nodes {
    vals: Vec<f64>,
    parents: Vec<[u32; 2]>,
    partials: Vec<[f64; 2]>,
}

/// Append-only record of scalar operations.
///
/// Every node stores at most two parents and the local partial derivatives
/// w.r.t. them, evaluated at record time. Leaves and constants have zero
/// partials.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Nodes>,
}

/// A scalar recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
    val: f64,
}

/// Adjoints of every node on a tape after a backward pass.
#[derive(Debug, Clone)]
pub struct Adjoints(Vec<f64>);

impl Adjoints {
    /// d(seeded output) / d(v).
    pub fn wrt(&self, v: Var<'_>) -> f64 {
        self.0[v.idx as usize]
    }

    pub fn wrt_all(&self, vs: &[Var<'_>]) -> Vec<f64> {
        vs.iter().map(|&v| self.wrt(v)).collect()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Tape {
            nodes: RefCell::new(Nodes {
                vals: Vec::with_capacity(n),
                parents: Vec::with_capacity(n),
                partials: Vec::with_capacity(n),
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drop all nodes while keeping the allocation. Requires that no `Var`
    /// borrows the tape.
    pub fn clear(&mut self) {
        let n = self.nodes.get_mut();
        n.vals.clear();
        n.parents.clear();
        n.partials.clear();
    }

    /// An independent input.
    pub fn var(&self, v: f64) -> Var<'_> {
        let idx = self.len() as u32;
        self.push(v, [idx, idx], [0.0, 0.0])
    }

    pub fn vars(&self, vs: &[f64]) -> Vec<Var<'_>> {
        vs.iter().map(|&v| self.var(v)).collect()
    }

    /// A constant; identical to a leaf whose adjoint is ignored.
    pub fn constant(&self, v: f64) -> Var<'_> {
        self.var(v)
    }

    #[inline]
    fn push(&self, val: f64, parents: [u32; 2], partials: [f64; 2]) -> Var<'_> {
        let mut n = self.nodes.borrow_mut();
        let idx = n.vals.len() as u32;
        n.vals.push(val);
        n.parents.push(parents);
        n.partials.push(partials);
        Var {
            tape: self,
            idx,
            val,
        }
    }

    /// Reverse sweep from a single output seeded with 1.
    pub fn backward(&self, output: Var<'_>) -> Adjoints {
        self.backward_seeded(&[(output, 1.0)])
    }

    /// Reverse sweep with arbitrary seeds: the result holds
    /// ∂(Σ seed_k · node_k)/∂(every node).
    pub fn backward_seeded(&self, seeds: &[(Var<'_>, f64)]) -> Adjoints {
        let mut adj = Vec::new();
        self.backward_into(seeds, &mut adj);
        Adjoints(adj)
    }

    /// As [`Tape::backward_seeded`], reusing `adj` as the buffer.
    pub fn backward_into(&self, seeds: &[(Var<'_>, f64)], adj: &mut Vec<f64>) {
        let n = self.nodes.borrow();
        adj.clear();
        adj.resize(n.vals.len(), 0.0);
        let mut top = 0;
        for &(v, s) in seeds {
            debug_assert!(std::ptr::eq(v.tape, self), "seed from another tape");
            adj[v.idx as usize] += s;
            top = top.max(v.idx as usize + 1);
        }
        for i in (0..top).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let [p0, p1] = n.parents[i];
            let [d0, d1] = n.partials[i];
            adj[p0 as usize] += a * d0;
            adj[p1 as usize] += a * d1;
        }
    }

    /// Index of the first recorded non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.nodes.borrow().vals.iter().position(|v| !v.is_finite())
    }
}

/// Evaluate `f` on a fresh tape at `at` and return the value and gradient.
/// Fails if any intermediate value is non-finite.
pub fn gradient_of<F>(f: F, at: &[f64]) -> Result<(f64, Vec<f64>)>
where
    F: for<'t> Fn(&[Var<'t>]) -> Var<'t>,
{
    let tape = Tape::new();
    let xs = tape.vars(at);
    let y = f(&xs);
    if let Some(i) = tape.first_non_finite() {
        let value = tape.nodes.borrow().vals[i];
        return Err(Error::NonFinite {
            context: "recorded expression",
            value,
        });
    }
    let adj = tape.backward(y);
    Ok((y.val, adj.wrt_all(&xs)))
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    #[inline]
    fn unary(self, val: f64, d: f64) -> Self {
        self.tape.push(val, [self.idx, self.idx], [d, 0.0])
    }

    #[inline]
    fn binary(self, other: Self, val: f64, da: f64, db: f64) -> Self {
        debug_assert!(std::ptr::eq(self.tape, other.tape), "mixed tapes");
        self.tape.push(val, [self.idx, other.idx], [da, db])
    }
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var({} @ {})", self.val, self.idx)
    }
}

impl<'t> Real for Var<'t> {
    #[inline]
    fn value(self) -> f64 {
        self.val
    }
    #[inline]
    fn lift(self, c: f64) -> Self {
        self.tape.constant(c)
    }
    #[inline]
    fn custom1(self, value: f64, d: f64) -> Self {
        self.unary(value, d)
    }
    #[inline]
    fn custom2(self, other: Self, value: f64, da: f64, db: f64) -> Self {
        self.binary(other, value, da, db)
    }
    #[inline]
    fn detach(self) -> Self {
        self.tape.constant(self.val)
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        self.binary(o, self.val + o.val, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        self.binary(o, self.val - o.val, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        self.binary(o, self.val * o.val, o.val, self.val)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let q = self.val / o.val;
        self.binary(o, q, 1.0 / o.val, -q / o.val)
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
    fn add(self, c: f64) -> Self {
        self.unary(self.val + c, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn sub(self, c: f64) -> Self {
        self.unary(self.val - c, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn mul(self, c: f64) -> Self {
        self.unary(self.val * c, c)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn div(self, c: f64) -> Self {
        self.unary(self.val / c, 1.0 / c)
    }
}

impl<'t> Add<Var<'t>> for f64 {
    type Output = Var<'t>;
    #[inline]
    fn add(self, v: Var<'t>) -> Var<'t> {
        v + self
    }
}

impl<'t> Sub<Var<'t>> for f64 {
    type Output = Var<'t>;
    #[inline]
    fn sub(self, v: Var<'t>) -> Var<'t> {
        v.unary(self - v.val, -1.0)
    }
}

impl<'t> Mul<Var<'t>> for f64 {
    type Output = Var<'t>;
    #[inline]
    fn mul(self, v: Var<'t>) -> Var<'t> {
        v * self
    }
}

impl<'t> Div<Var<'t>> for f64 {
    type Output = Var<'t>;
    #[inline]
    fn div(self, v: Var<'t>) -> Var<'t> {
        let q = self / v.val;
        v.unary(q, -q / v.val)
    }
}
