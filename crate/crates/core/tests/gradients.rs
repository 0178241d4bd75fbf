//! Finite-difference checks of every differentiable building block.

use paracomp::neural::{grad_check, Attention, Dense, Graph, LstmCell, ParamStore, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn inputs(g: &mut Graph, n: usize, dim: usize, offset: f64) -> Vec<Var> {
    (0..n)
        .map(|t| g.input((0..dim).map(|k| ((t * dim + k) as f64 * 0.37 + offset).sin()).collect()))
        .collect()
}

/// Scalar loss from a vector: cross-entropy against target 0.
fn ce(g: &mut Graph, v: Var) -> Var {
    let p = g.softmax(v);
    g.nll(p, 0)
}

fn check(mut store: ParamStore, forward: impl Fn(&mut Graph) -> Var) {
    let report = grad_check(
        &mut store,
        |s| {
            let mut g = Graph::new(s);
            let loss = forward(&mut g);
            let mut grads = s.zero_grads();
            g.backward(loss, &mut grads);
            (g.scalar(loss), grads)
        },
        EPS,
        TOL,
    )
    .unwrap();
    assert!(report.passed, "{report:?}");
    assert!(report.checked > 0);
}

#[test]
fn dense_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut store = ParamStore::new();
    let d = Dense::new(&mut store, "d", 5, 4, &mut rng);
    for v in store.get_mut(d.weight).data.iter_mut() {
        *v *= 5.0;
    }
    check(store, |g| {
        let x = inputs(g, 1, 5, 0.3)[0];
        let y = d.forward(g, x);
        let y = g.tanh(y);
        ce(g, y)
    });
}

#[test]
fn cross_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut store = ParamStore::new();
    let logits = store.add_uniform("logits", &[6], 2.0, &mut rng);
    check(store, |g| {
        let l = g.param(logits);
        let p = g.softmax(l);
        g.nll(p, 3)
    });
}

#[test]
fn lstm_three_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut store = ParamStore::new();
    let cell = LstmCell::new(&mut store, "lstm", 4, 5, &mut rng);
    for v in store.get_mut(cell.weight).data.iter_mut() {
        *v *= 5.0;
    }
    check(store, |g| {
        let xs = inputs(g, 3, 4, 0.1);
        let init = cell.zero_state(g);
        let (outs, last) = cell.forward(g, &xs, init).unwrap();
        let all = g.concat(&[outs[0], outs[1], last.h, last.c]);
        ce(g, all)
    });
}

#[test]
fn additive_attention() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut store = ParamStore::new();
    let att = Attention::new(&mut store, "att", 3, 4, 5, &mut rng);
    for id in [att.query_proj, att.key_proj, att.score] {
        for v in store.get_mut(id).data.iter_mut() {
            *v *= 8.0;
        }
    }
    let q = store.add_uniform("query", &[3], 0.8, &mut rng);
    check(store, |g| {
        let keys = inputs(g, 4, 4, 0.7);
        let query = g.param(q);
        let projected = att.project_keys(g, &keys);
        let out = att.attend(g, query, &keys, &projected).unwrap();
        let both = g.concat(&[out.context, out.weights]);
        ce(g, both)
    });
}
