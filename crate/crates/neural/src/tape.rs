//! Scalar reverse-mode automatic differentiation on an explicit tape.
//!
//! Values are computed eagerly as nodes are pushed, so the tape doubles as
//! the forward evaluation; [`Tape::backward`] then sweeps the node list once
//! in reverse to produce the gradient of one scalar output with respect to
//! every node (and therefore every leaf) on the tape.
//!
//! Dense linear algebra is the hot path, so inner products do not expand
//! into `2·len` scalar nodes: the fused [`Op::Affine2`] and [`Op::Dot`]
//! nodes cover a whole neuron or feature combination in one node whose
//! local partials are applied in `O(len)` during the backward sweep. The
//! fused nodes address *contiguous* ranges of earlier nodes, which the layer
//! builders guarantee by construction.

/// Index of one scalar node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) u32);

/// A contiguous block of tape nodes (a vector value).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarRange {
    pub(crate) start: u32,
    pub(crate) len: u32,
}

impl VarRange {
    /// A zero-length block, for the optional second input segment of
    /// fused layers.
    pub fn empty() -> VarRange {
        VarRange { start: 0, len: 0 }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The `i`-th element of the block.
    pub fn var(&self, i: usize) -> Var {
        assert!((i as u32) < self.len, "range index out of bounds");
        Var(self.start + i as u32)
    }

    /// Splits off the sub-range `[offset, offset + len)`.
    pub fn slice(&self, offset: usize, len: usize) -> VarRange {
        assert!(offset + len <= self.len as usize, "slice out of bounds");
        VarRange {
            start: self.start + offset as u32,
            len: len as u32,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    /// `scale·x + shift` with constant coefficients; the shift is folded
    /// into the eagerly computed value, so only the scale is kept.
    AffineConst(u32, f64),
    Square(u32),
    /// `sqrt(x)`; the caller keeps arguments strictly positive.
    Sqrt(u32),
    Relu(u32),
    Silu(u32),
    Tanh(u32),
    Sigmoid(u32),
    /// `Σ_i w_{start+i}·x1_{start+i} (i < len1) + Σ_j w_{start+len1+j}·x2_{start+j} + bias`.
    Affine2 {
        w: u32,
        x1: u32,
        len1: u32,
        x2: u32,
        len2: u32,
        bias: u32,
    },
    /// `Σ_i a_{start+i}·b_{start+i}`.
    Dot {
        a: u32,
        b: u32,
        len: u32,
    },
}

/// Gradients of one backward sweep, indexed by tape node.
pub struct Adjoints {
    buf: Vec<f64>,
}

impl Adjoints {
    pub fn get(&self, v: Var) -> f64 {
        self.buf[v.0 as usize]
    }

    /// Gradient of the swept output w.r.t. each element of `range`.
    pub fn range(&self, range: VarRange) -> &[f64] {
        &self.buf[range.start as usize..(range.start + range.len) as usize]
    }
}

/// The tape: an append-only list of scalar operations with eagerly computed
/// values.
#[derive(Debug, Default)]
pub struct Tape {
    ops: Vec<Op>,
    vals: Vec<f64>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pre-allocates capacity for roughly `nodes` scalar operations.
    pub fn with_capacity(nodes: usize) -> Self {
        Self {
            ops: Vec::with_capacity(nodes),
            vals: Vec::with_capacity(nodes),
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Drops every node; ranges from before the call become invalid.
    pub fn clear(&mut self) {
        self.ops.clear();
        self.vals.clear();
    }

    pub fn value(&self, v: Var) -> f64 {
        self.vals[v.0 as usize]
    }

    /// Values of a contiguous block.
    pub fn values(&self, range: VarRange) -> &[f64] {
        &self.vals[range.start as usize..(range.start + range.len) as usize]
    }

    fn push(&mut self, op: Op, val: f64) -> Var {
        let id = u32::try_from(self.ops.len()).expect("tape exceeds u32 indexing");
        self.ops.push(op);
        self.vals.push(val);
        Var(id)
    }

    /// A differentiation leaf (input or parameter).
    pub fn leaf(&mut self, v: f64) -> Var {
        self.push(Op::Leaf, v)
    }

    /// A contiguous block of leaves.
    pub fn leaf_slice(&mut self, vs: &[f64]) -> VarRange {
        let start = self.ops.len() as u32;
        for &v in vs {
            self.push(Op::Leaf, v);
        }
        VarRange {
            start,
            len: vs.len() as u32,
        }
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(Op::Add(a.0, b.0), v)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(Op::Sub(a.0, b.0), v)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(Op::Mul(a.0, b.0), v)
    }

    /// `scale·x + shift` with constant coefficients.
    pub fn affine_const(&mut self, x: Var, scale: f64, shift: f64) -> Var {
        let v = scale * self.value(x) + shift;
        self.push(Op::AffineConst(x.0, scale), v)
    }

    pub fn square(&mut self, a: Var) -> Var {
        let x = self.value(a);
        self.push(Op::Square(a.0), x * x)
    }

    /// `sqrt(x)`; the argument must be strictly positive for a finite
    /// derivative (add a small constant first when in doubt).
    pub fn sqrt(&mut self, a: Var) -> Var {
        let v = self.value(a).sqrt();
        self.push(Op::Sqrt(a.0), v)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).max(0.0);
        self.push(Op::Relu(a.0), v)
    }

    pub fn silu(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let v = x * sigmoid(x);
        self.push(Op::Silu(a.0), v)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).tanh();
        self.push(Op::Tanh(a.0), v)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = sigmoid(self.value(a));
        self.push(Op::Sigmoid(a.0), v)
    }

    /// Fused neuron: `w · [x1; x2] + bias` over one or two contiguous input
    /// segments (`x2` may be empty).
    pub fn affine2(&mut self, w: VarRange, x1: VarRange, x2: VarRange, bias: Var) -> Var {
        assert_eq!(
            w.len(),
            x1.len() + x2.len(),
            "weight row does not match input segments"
        );
        let mut acc = self.vals[bias.0 as usize];
        for i in 0..x1.len() {
            acc += self.vals[(w.start as usize) + i] * self.vals[(x1.start as usize) + i];
        }
        for j in 0..x2.len() {
            acc +=
                self.vals[(w.start as usize) + x1.len() + j] * self.vals[(x2.start as usize) + j];
        }
        self.push(
            Op::Affine2 {
                w: w.start,
                x1: x1.start,
                len1: x1.len,
                x2: x2.start,
                len2: x2.len,
                bias: bias.0,
            },
            acc,
        )
    }

    /// Fused inner product of two equal-length contiguous blocks.
    pub fn dot(&mut self, a: VarRange, b: VarRange) -> Var {
        assert_eq!(a.len, b.len, "dot of unequal lengths");
        let mut acc = 0.0;
        for i in 0..a.len() {
            acc += self.vals[(a.start as usize) + i] * self.vals[(b.start as usize) + i];
        }
        self.push(
            Op::Dot {
                a: a.start,
                b: b.start,
                len: a.len,
            },
            acc,
        )
    }

    /// Sum of a contiguous block (an all-ones inner product without the
    /// ones): folded into a balanced tree of adds for clarity is not needed —
    /// one fused dot against the block itself would square it, so this walks
    /// a chain of adds. Use sparingly; prefer [`Tape::dot`] for reductions.
    pub fn sum(&mut self, r: VarRange) -> Var {
        assert!(!r.is_empty(), "sum of an empty range");
        let mut acc = r.var(0);
        for i in 1..r.len() {
            acc = self.add(acc, r.var(i));
        }
        acc
    }

    /// Elementwise sum of two equal-length blocks; the result is contiguous.
    pub fn map_add(&mut self, a: VarRange, b: VarRange) -> VarRange {
        assert_eq!(a.len, b.len, "blocks of unequal length");
        let start = self.len() as u32;
        for i in 0..a.len() {
            self.add(a.var(i), b.var(i));
        }
        VarRange { start, len: a.len }
    }

    /// Elementwise difference of two equal-length blocks.
    pub fn map_sub(&mut self, a: VarRange, b: VarRange) -> VarRange {
        assert_eq!(a.len, b.len, "blocks of unequal length");
        let start = self.len() as u32;
        for i in 0..a.len() {
            self.sub(a.var(i), b.var(i));
        }
        VarRange { start, len: a.len }
    }

    /// Elementwise product of two equal-length blocks.
    pub fn map_mul(&mut self, a: VarRange, b: VarRange) -> VarRange {
        assert_eq!(a.len, b.len, "blocks of unequal length");
        let start = self.len() as u32;
        for i in 0..a.len() {
            self.mul(a.var(i), b.var(i));
        }
        VarRange { start, len: a.len }
    }

    /// Elementwise logistic function over a block.
    pub fn map_sigmoid(&mut self, r: VarRange) -> VarRange {
        let start = self.len() as u32;
        for i in 0..r.len() {
            self.sigmoid(r.var(i));
        }
        VarRange { start, len: r.len }
    }

    /// Copies several blocks into one contiguous block (identity nodes), so
    /// scattered intermediate results can feed a fused layer.
    pub fn concat(&mut self, parts: &[VarRange]) -> VarRange {
        let start = self.len() as u32;
        let mut len = 0u32;
        for part in parts {
            for i in 0..part.len() {
                self.affine_const(part.var(i), 1.0, 0.0);
            }
            len += part.len;
        }
        VarRange { start, len }
    }

    /// Elementwise activation over a block; the results are contiguous.
    pub fn map_activation(&mut self, r: VarRange, act: Activation) -> VarRange {
        if matches!(act, Activation::Identity) {
            return r;
        }
        let start = self.ops.len() as u32;
        for i in 0..r.len() {
            let v = r.var(i);
            match act {
                Activation::Relu => self.relu(v),
                Activation::Silu => self.silu(v),
                Activation::Tanh => self.tanh(v),
                Activation::Identity => unreachable!(),
            };
        }
        VarRange { start, len: r.len }
    }

    /// Gradient of `output` with respect to every node, in one reverse
    /// sweep. Each node is visited exactly once; fused nodes scatter their
    /// `O(len)` local partials inline.
    pub fn backward(&self, output: Var) -> Adjoints {
        let n = self.ops.len();
        let mut adj = vec![0.0f64; n];
        adj[output.0 as usize] = 1.0;
        for id in (0..n).rev() {
            let a_out = adj[id];
            if a_out == 0.0 {
                continue;
            }
            match self.ops[id] {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    adj[a as usize] += a_out;
                    adj[b as usize] += a_out;
                }
                Op::Sub(a, b) => {
                    adj[a as usize] += a_out;
                    adj[b as usize] -= a_out;
                }
                Op::Mul(a, b) => {
                    adj[a as usize] += a_out * self.vals[b as usize];
                    adj[b as usize] += a_out * self.vals[a as usize];
                }
                Op::AffineConst(a, scale) => {
                    adj[a as usize] += a_out * scale;
                }
                Op::Square(a) => {
                    adj[a as usize] += a_out * 2.0 * self.vals[a as usize];
                }
                Op::Sqrt(a) => {
                    adj[a as usize] += a_out * 0.5 / self.vals[id];
                }
                Op::Relu(a) => {
                    if self.vals[a as usize] > 0.0 {
                        adj[a as usize] += a_out;
                    }
                }
                Op::Silu(a) => {
                    let x = self.vals[a as usize];
                    let s = sigmoid(x);
                    adj[a as usize] += a_out * (s + x * s * (1.0 - s));
                }
                Op::Tanh(a) => {
                    let t = self.vals[id];
                    adj[a as usize] += a_out * (1.0 - t * t);
                }
                Op::Sigmoid(a) => {
                    let s = self.vals[id];
                    adj[a as usize] += a_out * s * (1.0 - s);
                }
                Op::Affine2 {
                    w,
                    x1,
                    len1,
                    x2,
                    len2,
                    bias,
                } => {
                    for i in 0..len1 as usize {
                        let wi = (w as usize) + i;
                        let xi = (x1 as usize) + i;
                        adj[wi] += a_out * self.vals[xi];
                        adj[xi] += a_out * self.vals[wi];
                    }
                    for j in 0..len2 as usize {
                        let wj = (w as usize) + (len1 as usize) + j;
                        let xj = (x2 as usize) + j;
                        adj[wj] += a_out * self.vals[xj];
                        adj[xj] += a_out * self.vals[wj];
                    }
                    adj[bias as usize] += a_out;
                }
                Op::Dot { a, b, len } => {
                    for i in 0..len as usize {
                        let ai = (a as usize) + i;
                        let bi = (b as usize) + i;
                        adj[ai] += a_out * self.vals[bi];
                        adj[bi] += a_out * self.vals[ai];
                    }
                }
            }
        }
        Adjoints { buf: adj }
    }
}

/// Hidden-layer nonlinearity of a dense network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Silu,
    Tanh,
    Identity,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable logistic function, shared by the tape ops and the
/// plain (tape-free) inference path.
pub fn stable_sigmoid(x: f64) -> f64 {
    sigmoid(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_on_a_tiny_graph() {
        // f = (a + b)·a, df/da = 2a + b, df/db = a.
        let mut tape = Tape::new();
        let a = tape.leaf(3.0);
        let b = tape.leaf(-1.5);
        let s = tape.add(a, b);
        let f = tape.mul(s, a);
        assert_eq!(tape.value(f), 4.5);
        let adj = tape.backward(f);
        assert_eq!(adj.get(a), 2.0 * 3.0 - 1.5);
        assert_eq!(adj.get(b), 3.0);
    }

    #[test]
    fn fused_affine_matches_expanded_form() {
        let mut tape = Tape::new();
        let w = tape.leaf_slice(&[0.5, -2.0, 1.25]);
        let x = tape.leaf_slice(&[1.0, 2.0]);
        let y = tape.leaf_slice(&[-0.5]);
        let bias = tape.leaf(0.75);
        let out = tape.affine2(w, x, y, bias);
        assert!((tape.value(out) - (0.5 - 4.0 - 0.625 + 0.75)).abs() < 1e-15);
        let adj = tape.backward(out);
        assert_eq!(adj.range(w), &[1.0, 2.0, -0.5]);
        assert_eq!(adj.range(x), &[0.5, -2.0]);
        assert_eq!(adj.range(y), &[1.25]);
        assert_eq!(adj.get(bias), 1.0);
    }

    #[test]
    fn unused_nodes_cost_nothing_in_the_sweep() {
        let mut tape = Tape::new();
        let a = tape.leaf(1.0);
        let _orphan = tape.leaf(9.9);
        let f = tape.square(a);
        let adj = tape.backward(f);
        assert_eq!(adj.get(a), 2.0);
        assert_eq!(adj.get(_orphan), 0.0);
    }
}
