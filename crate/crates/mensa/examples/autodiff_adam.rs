//! The scalar autodiff engine and Adam, end to end on a toy problem:
//! minimize f(a, b) = (a - 2)^2 + 5 * (b + 1)^2 by gradient descent.
//!
//! Run with: cargo run --release --example autodiff_adam

use mensa::diff::{adam_step, AdamConfig, AdamState, GradientMap, Graph, ParamStore, Tensor};

fn objective(a: f64, b: f64) -> (f64, f64, f64) {
    let mut g = Graph::new();
    let pa = g.leaf(a);
    let pb = g.leaf(b);
    let two = g.constant(2.0);
    let neg_one = g.constant(-1.0);

    let da = g.sub(pa, two);
    let da2 = g.mul(da, da);
    let db = g.sub(pb, neg_one);
    let db2 = g.mul(db, db);
    let db2_scaled = g.mul_const(db2, 5.0);
    let loss = g.add(da2, db2_scaled);

    let grads = g.backward(loss).expect("backward on a scalar loss");
    (g.value(loss), grads.wrt(pa), grads.wrt(pb))
}

fn main() {
    // sanity: the analytic gradient matches central finite differences
    let (loss, ga, gb) = objective(0.0, 0.0);
    let h = 1e-6;
    let fd_a = (objective(h, 0.0).0 - objective(-h, 0.0).0) / (2.0 * h);
    let fd_b = (objective(0.0, h).0 - objective(0.0, -h).0) / (2.0 * h);
    println!("at (0, 0): loss = {loss}");
    println!("  df/da = {ga}   (finite difference {fd_a})");
    println!("  df/db = {gb}   (finite difference {fd_b})");

    // descend with Adam
    let mut params = ParamStore::new();
    params
        .insert("theta", Tensor::from_vec(&[2], vec![0.0, 0.0]).unwrap())
        .unwrap();
    let mut adam = AdamState::new(
        AdamConfig {
            learning_rate: 0.05,
            ..Default::default()
        },
        &params,
    );

    for step in 1..=400 {
        let data = params.get("theta").unwrap().data();
        let (loss, ga, gb) = objective(data[0], data[1]);
        let mut grads = GradientMap::new();
        grads.insert("theta", vec![ga, gb]).unwrap();
        adam_step(&mut params, &grads, &mut adam).unwrap();
        if step % 100 == 0 {
            let d = params.get("theta").unwrap().data();
            println!("step {step:3}: loss {loss:.6} at ({:.4}, {:.4})", d[0], d[1]);
        }
    }
    let d = params.get("theta").unwrap().data();
    println!("minimum found at ({:.4}, {:.4}); true minimum is (2, -1)", d[0], d[1]);
}
