#![allow(dead_code)]

use csdp::cmc::CmcModel;

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Dense joint kernel `k[b][a]` from the product-of-mixtures definition.
pub fn kernel_by_definition(model: &CmcModel<f64>) -> Vec<Vec<f64>> {
    let space = model.space();
    let n = space.size().unwrap();
    let s = model.num_sequences();
    let mut k = vec![vec![0.0; n]; n];
    for a in 0..n {
        let xa = space.decode(a);
        for (b, row) in k.iter_mut().enumerate() {
            let xb = space.decode(b);
            row[a] = (0..s)
                .map(|j| {
                    (0..s)
                        .map(|i| model.weights().weight(j, i) * model.transition(j, i).prob(xb[j], xa[i]))
                        .sum::<f64>()
                })
                .product();
        }
    }
    k
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn power(k: &[Vec<f64>], t: usize) -> Vec<Vec<f64>> {
    let n = k.len();
    let mut out: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..t {
        out = matmul(k, &out);
    }
    out
}

pub fn stationary(k: &[Vec<f64>]) -> Vec<f64> {
    let n = k.len();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..5000 {
        v = (0..n).map(|b| (0..n).map(|a| k[b][a] * v[a]).sum()).collect();
    }
    v
}

/// `Pr[z | x]` for a uniform age `t`, as `cond[x][z]`, by Bayes on `K^t`.
pub fn backward_conditional(model: &CmcModel<f64>, t: usize) -> Vec<Vec<f64>> {
    let k = kernel_by_definition(model);
    let pi = stationary(&k);
    let kt = power(&k, t);
    let n = pi.len();
    (0..n)
        .map(|x| {
            let joint: Vec<f64> = (0..n).map(|z| pi[z] * kt[x][z]).collect();
            let px: f64 = joint.iter().sum();
            joint.iter().map(|j| j / px).collect()
        })
        .collect()
}

/// Largest TV between backward conditionals of snapshots differing in one
/// coordinate, conditioning on the whole snapshot.
pub fn delta_full(model: &CmcModel<f64>, t: usize) -> f64 {
    let cond = backward_conditional(model, t);
    let space = model.space();
    let n = cond.len();
    let mut best: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            if space.hamming(x, y) == 1 {
                let tv: f64 = cond[x].iter().zip(&cond[y]).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
                best = best.max(tv);
            }
        }
    }
    best
}
