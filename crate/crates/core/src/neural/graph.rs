//! Reverse-mode tape over vectors.
//!
//! Each operation appends a node holding its output. Parameters are read
//! from a borrowed [`ParamStore`]; [`Graph::backward`] accumulates their
//! gradients into a [`Grads`] buffer.

use super::tensor::{Grads, ParamId, ParamStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param(ParamId),
    Row(ParamId, usize),
    MatVec(ParamId, Var),
    Add(Var, Var),
    Mul(Var, Var),
    ScaleBy(Var, Var),
    OneMinus(Var),
    Sigmoid(Var),
    Tanh(Var),
    Concat(Vec<Var>),
    Slice(Var, usize),
    Softmax(Var),
    WeightedSum(Var, Vec<Var>),
    ScatterAdd(Var, Vec<usize>),
    Pad(Var),
    Pick(Var, usize),
    Log(Var),
    Sum(Vec<Var>),
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: Vec<f64>,
}

pub struct Graph<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
}

impl<'p> Graph<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Graph {
            store,
            nodes: Vec::with_capacity(256),
        }
    }

    pub fn store(&self) -> &'p ParamStore {
        self.store
    }

    fn push(&mut self, op: Op, value: Vec<f64>) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Constant input; receives no gradient outside the tape.
    pub fn input(&mut self, value: Vec<f64>) -> Var {
        self.push(Op::Input, value)
    }

    pub fn zeros(&mut self, len: usize) -> Var {
        self.input(vec![0.0; len])
    }

    /// A whole parameter viewed as a flat vector.
    pub fn param(&mut self, id: ParamId) -> Var {
        let value = self.store.get(id).data.clone();
        self.push(Op::Param(id), value)
    }

    /// Row `row` of a matrix parameter (embedding lookup).
    pub fn row(&mut self, id: ParamId, row: usize) -> Var {
        let t = self.store.get(id);
        let cols = t.cols();
        let value = t.data[row * cols..(row + 1) * cols].to_vec();
        self.push(Op::Row(id, row), value)
    }

    /// `W x` for a matrix parameter `W` of shape rows x cols.
    pub fn matvec(&mut self, w: ParamId, x: Var) -> Var {
        let t = self.store.get(w);
        let (rows, cols) = (t.rows(), t.cols());
        let xv = &self.nodes[x.0].value;
        assert_eq!(xv.len(), cols, "matvec: {} expects {} inputs", self.store.params()[w.0].name, cols);
        let mut out = vec![0.0; rows];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &t.data[r * cols..(r + 1) * cols];
            *o = row.iter().zip(xv).map(|(a, b)| a * b).sum();
        }
        self.push(Op::MatVec(w, x), out)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(av.len(), bv.len(), "add: length mismatch");
        let value = av.iter().zip(bv).map(|(x, y)| x + y).collect();
        self.push(Op::Add(a, b), value)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(av.len(), bv.len(), "mul: length mismatch");
        let value = av.iter().zip(bv).map(|(x, y)| x * y).collect();
        self.push(Op::Mul(a, b), value)
    }

    /// Vector `v` scaled by the single-element `s`.
    pub fn scale_by(&mut self, s: Var, v: Var) -> Var {
        let k = self.nodes[s.0].value[0];
        let value = self.nodes[v.0].value.iter().map(|x| k * x).collect();
        self.push(Op::ScaleBy(s, v), value)
    }

    pub fn one_minus(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.iter().map(|x| 1.0 - x).collect();
        self.push(Op::OneMinus(a), value)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.iter().map(|&x| sigmoid(x)).collect();
        self.push(Op::Sigmoid(a), value)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.iter().map(|x| x.tanh()).collect();
        self.push(Op::Tanh(a), value)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut value = Vec::with_capacity(parts.iter().map(|p| self.nodes[p.0].value.len()).sum());
        for p in parts {
            value.extend_from_slice(&self.nodes[p.0].value);
        }
        self.push(Op::Concat(parts.to_vec()), value)
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Var {
        let value = self.nodes[a.0].value[start..start + len].to_vec();
        self.push(Op::Slice(a, start), value)
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        let value = softmax(&self.nodes[a.0].value);
        self.push(Op::Softmax(a), value)
    }

    /// `sum_t w[t] * vectors[t]`.
    pub fn weighted_sum(&mut self, weights: Var, vectors: &[Var]) -> Var {
        let w = &self.nodes[weights.0].value;
        assert_eq!(w.len(), vectors.len(), "weighted_sum: weight count");
        let dim = self.nodes[vectors[0].0].value.len();
        let mut value = vec![0.0; dim];
        for (wt, v) in w.iter().zip(vectors) {
            for (o, x) in value.iter_mut().zip(&self.nodes[v.0].value) {
                *o += wt * x;
            }
        }
        self.push(Op::WeightedSum(weights, vectors.to_vec()), value)
    }

    /// Out vector of length `size` with `out[index[t]] += src[t]`.
    pub fn scatter_add(&mut self, src: Var, index: &[usize], size: usize) -> Var {
        let s = &self.nodes[src.0].value;
        assert_eq!(s.len(), index.len(), "scatter_add: index count");
        let mut value = vec![0.0; size];
        for (x, &i) in s.iter().zip(index) {
            value[i] += x;
        }
        self.push(Op::ScatterAdd(src, index.to_vec()), value)
    }

    /// Extend with zeros to length `size`.
    pub fn pad(&mut self, a: Var, size: usize) -> Var {
        let mut value = self.nodes[a.0].value.clone();
        assert!(size >= value.len(), "pad: target shorter than input");
        value.resize(size, 0.0);
        self.push(Op::Pad(a), value)
    }

    pub fn pick(&mut self, a: Var, index: usize) -> Var {
        let value = vec![self.nodes[a.0].value[index]];
        self.push(Op::Pick(a, index), value)
    }

    pub fn log(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.iter().map(|x| x.ln()).collect();
        self.push(Op::Log(a), value)
    }

    /// Sum of single-element nodes.
    pub fn sum(&mut self, parts: &[Var]) -> Var {
        let total = parts.iter().map(|p| self.nodes[p.0].value.iter().sum::<f64>()).sum();
        self.push(Op::Sum(parts.to_vec()), vec![total])
    }

    /// `-ln(dist[target])`.
    pub fn nll(&mut self, dist: Var, target: usize) -> Var {
        let p = self.pick(dist, target);
        let lp = self.log(p);
        let neg = self.input(vec![-1.0]);
        self.scale_by(neg, lp)
    }

    /// Backpropagate from the scalar `loss`, adding parameter gradients to
    /// `grads`.
    pub fn backward(&self, loss: Var, grads: &mut Grads) {
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(vec![1.0; self.nodes[loss.0].value.len()]);

        fn acc(adj: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
            adj[v.0].get_or_insert_with(|| vec![0.0; len])
        }

        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => {
                    for (d, x) in grads.get_mut(*id).iter_mut().zip(&g) {
                        *d += x;
                    }
                }
                Op::Row(id, row) => {
                    let cols = g.len();
                    let dst = &mut grads.get_mut(*id)[row * cols..(row + 1) * cols];
                    for (d, x) in dst.iter_mut().zip(&g) {
                        *d += x;
                    }
                }
                Op::MatVec(w, x) => {
                    let t = self.store.get(*w);
                    let cols = t.cols();
                    let xv = &self.nodes[x.0].value;
                    let gw = grads.get_mut(*w);
                    for (r, &gr) in g.iter().enumerate() {
                        if gr == 0.0 {
                            continue;
                        }
                        for (d, xj) in gw[r * cols..(r + 1) * cols].iter_mut().zip(xv) {
                            *d += gr * xj;
                        }
                    }
                    let gx = acc(&mut adj, *x, cols);
                    for (r, &gr) in g.iter().enumerate() {
                        if gr == 0.0 {
                            continue;
                        }
                        for (d, wj) in gx.iter_mut().zip(&t.data[r * cols..(r + 1) * cols]) {
                            *d += gr * wj;
                        }
                    }
                }
                Op::Add(a, b) => {
                    for v in [a, b] {
                        for (d, x) in acc(&mut adj, *v, g.len()).iter_mut().zip(&g) {
                            *d += x;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    for ((d, x), y) in acc(&mut adj, *a, g.len()).iter_mut().zip(&g).zip(bv) {
                        *d += x * y;
                    }
                    for ((d, x), y) in acc(&mut adj, *b, g.len()).iter_mut().zip(&g).zip(av) {
                        *d += x * y;
                    }
                }
                Op::ScaleBy(s, v) => {
                    let k = self.nodes[s.0].value[0];
                    let vv = &self.nodes[v.0].value;
                    let ds: f64 = g.iter().zip(vv).map(|(x, y)| x * y).sum();
                    acc(&mut adj, *s, 1)[0] += ds;
                    for (d, x) in acc(&mut adj, *v, g.len()).iter_mut().zip(&g) {
                        *d += k * x;
                    }
                }
                Op::OneMinus(a) => {
                    for (d, x) in acc(&mut adj, *a, g.len()).iter_mut().zip(&g) {
                        *d -= x;
                    }
                }
                Op::Sigmoid(a) => {
                    for ((d, x), y) in acc(&mut adj, *a, g.len()).iter_mut().zip(&g).zip(&node.value) {
                        *d += x * y * (1.0 - y);
                    }
                }
                Op::Tanh(a) => {
                    for ((d, x), y) in acc(&mut adj, *a, g.len()).iter_mut().zip(&g).zip(&node.value) {
                        *d += x * (1.0 - y * y);
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let n = self.nodes[p.0].value.len();
                        for (d, x) in acc(&mut adj, *p, n).iter_mut().zip(&g[off..off + n]) {
                            *d += x;
                        }
                        off += n;
                    }
                }
                Op::Slice(a, start) => {
                    let n = self.nodes[a.0].value.len();
                    for (d, x) in acc(&mut adj, *a, n)[*start..].iter_mut().zip(&g) {
                        *d += x;
                    }
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let dot: f64 = g.iter().zip(y).map(|(x, p)| x * p).sum();
                    for ((d, x), p) in acc(&mut adj, *a, g.len()).iter_mut().zip(&g).zip(y) {
                        *d += p * (x - dot);
                    }
                }
                Op::WeightedSum(w, vectors) => {
                    let wv = &self.nodes[w.0].value;
                    let dw: Vec<f64> = vectors
                        .iter()
                        .map(|v| self.nodes[v.0].value.iter().zip(&g).map(|(a, b)| a * b).sum())
                        .collect();
                    for (d, x) in acc(&mut adj, *w, wv.len()).iter_mut().zip(&dw) {
                        *d += x;
                    }
                    for (v, wt) in vectors.iter().zip(wv) {
                        for (d, x) in acc(&mut adj, *v, g.len()).iter_mut().zip(&g) {
                            *d += wt * x;
                        }
                    }
                }
                Op::ScatterAdd(src, index) => {
                    let gs = acc(&mut adj, *src, index.len());
                    for (d, &i) in gs.iter_mut().zip(index) {
                        *d += g[i];
                    }
                }
                Op::Pad(a) => {
                    let n = self.nodes[a.0].value.len();
                    for (d, x) in acc(&mut adj, *a, n).iter_mut().zip(&g) {
                        *d += x;
                    }
                }
                Op::Pick(a, index) => {
                    let n = self.nodes[a.0].value.len();
                    acc(&mut adj, *a, n)[*index] += g[0];
                }
                Op::Log(a) => {
                    let av = &self.nodes[a.0].value;
                    for ((d, x), y) in acc(&mut adj, *a, g.len()).iter_mut().zip(&g).zip(av) {
                        *d += x / y;
                    }
                }
                Op::Sum(parts) => {
                    for p in parts {
                        let n = self.nodes[p.0].value.len();
                        for d in acc(&mut adj, *p, n).iter_mut() {
                            *d += g[0];
                        }
                    }
                }
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
