//! Quadrature oracle for ⟨−L H_n, H_m⟩ shared by the integration targets.
//!
//! Basis functions and their derivatives are evaluated pointwise from a
//! separate Hermite recurrence: with t = α(x−β),
//! ∂H_n = α(√(2n)·h_{n−1} − t·h_n)·env and ∂²H_n = α²(t² − 2n − 1)·h_n·env.
#![allow(dead_code)]

use hyperherm::galerkin::{assemble, OperatorSpec, Polynomial};
use hyperherm::quadrature::gauss_hermite_rule;
use hyperherm::{BasisParams, IndexSet};

/// Orthonormal Hermite polynomials h_0..=h_n at t (weight e^{−t²}).
pub fn hermite_table(n: usize, t: f64) -> Vec<f64> {
    let mut h = vec![0.0; n + 1];
    h[0] = std::f64::consts::PI.powf(-0.25);
    if n > 0 {
        h[1] = 2f64.sqrt() * t * h[0];
    }
    for k in 1..n {
        h[k + 1] = ((2.0 / (k + 1) as f64).sqrt() * t * h[k]) - ((k as f64 / (k + 1) as f64).sqrt() * h[k - 1]);
    }
    h
}

pub fn oracle_matrix(op: &OperatorSpec, s: &IndexSet, p: &BasisParams, order: usize) -> Vec<Vec<f64>> {
    let d = s.dim();
    let rule = gauss_hermite_rule(order).unwrap();
    let maxdeg = s.max_degree();
    let n = s.len();
    let mut out = vec![vec![0.0; n]; n];
    let mut idx = vec![0usize; d];
    loop {
        let t: Vec<f64> = idx.iter().map(|&k| rule.nodes()[k]).collect();
        let w: f64 = idx.iter().map(|&k| rule.weights()[k]).product();
        // Integrating over x in each coordinate: dx = dt/α and each of the
        // two factors carries √α, so the envelope-free polynomials integrate
        // against the plain rule weights.
        let x: Vec<f64> = (0..d).map(|j| p.get(j).beta() + t[j] / p.get(j).alpha()).collect();
        let h: Vec<Vec<f64>> = t.iter().map(|&tj| hermite_table(maxdeg + 1, tj)).collect();
        let first = |j: usize, k: usize| {
            let a = p.get(j).alpha();
            let down = if k > 0 { (2.0 * k as f64).sqrt() * h[j][k - 1] } else { 0.0 };
            a * (down - t[j] * h[j][k])
        };
        let second = |j: usize, k: usize| {
            let a = p.get(j).alpha();
            a * a * (t[j] * t[j] - 2.0 * k as f64 - 1.0) * h[j][k]
        };
        let drift: Vec<f64> = op.drift().iter().map(|b| b.eval(&x)).collect();
        let pot = op.potential().eval(&x);
        for col in 0..n {
            let nn = s.get(col);
            let base: f64 = (0..d).map(|j| h[j][nn[j]]).product();
            let partial = |j: usize, f: f64| -> f64 {
                let rest: f64 = (0..d).filter(|&i| i != j).map(|i| h[i][nn[i]]).product();
                f * rest
            };
            let mut v = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let a = op.diffusion(i, j);
                    if a == 0.0 {
                        continue;
                    }
                    let dij = if i == j {
                        partial(i, second(i, nn[i]))
                    } else {
                        let rest: f64 = (0..d).filter(|&k| k != i && k != j).map(|k| h[k][nn[k]]).product();
                        first(i, nn[i]) * first(j, nn[j]) * rest
                    };
                    v += a * dij;
                }
                v -= drift[i] * partial(i, first(i, nn[i]));
            }
            v -= pot * base;
            if v == 0.0 {
                continue;
            }
            for (row, m) in s.iter().enumerate() {
                let hm: f64 = (0..d).map(|j| h[j][m[j]]).product();
                out[row][col] += w * v * hm;
            }
        }
        let mut j = 0;
        loop {
            if j == d {
                return out;
            }
            idx[j] += 1;
            if idx[j] < order {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// `−Δ`, `−Δ + |x|²` and `−Δ + x·∇ + 1 + |x|²`.
pub fn operators(d: usize) -> Vec<(&'static str, OperatorSpec)> {
    let drift: Vec<Polynomial> = (0..d).map(|j| Polynomial::linear(d, j, 1.0)).collect();
    let mixed = OperatorSpec::laplacian(d)
        .with_drift(drift)
        .unwrap()
        .with_potential(Polynomial::constant(d, 1.0).plus(&Polynomial::squared_norm(d, 1.0)))
        .unwrap();
    vec![
        ("laplacian", OperatorSpec::laplacian(d)),
        ("oscillator", OperatorSpec::harmonic_oscillator(d)),
        ("drift_potential", mixed),
    ]
}

/// Largest entrywise deviation between assembly and the oracle.
pub fn compare(op: &OperatorSpec, s: &IndexSet, p: &BasisParams) -> f64 {
    let m = assemble(op, s, p).unwrap();
    let order = s.max_degree() + 8;
    let oracle = oracle_matrix(op, s, p, order);
    let mut worst: f64 = 0.0;
    for (r, row) in oracle.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            worst = worst.max((m.get(r, c) - v).abs());
        }
    }
    worst
}
