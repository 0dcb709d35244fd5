//! Independent reference implementations shared by integration tests.

#![allow(dead_code)]

use cuisine_core::corpus::{Recipe, RecipeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn recipe(id: i64, cuisine: &str, ings: &[&str]) -> Recipe {
    Recipe::new(RecipeId::Int(id), Some(cuisine), ings.iter().copied()).unwrap()
}

/// Two recipes: `a` and `b` always together, `c` only with `d`.
pub fn cooccurrence_corpus() -> Vec<Recipe> {
    vec![recipe(1, "japanese", &["a", "b"]), recipe(2, "french", &["c", "d"])]
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Full-softmax skip-gram fitted by full-batch gradient ascent.
///
/// Maximizes `Σ_(a,b) log softmax_b(u_a · V)` over every token of the
/// vocabulary; returns the input vectors, one row per token.
pub fn full_softmax_skipgram(
    pairs: &[(usize, usize)],
    tokens: usize,
    dim: usize,
    iterations: usize,
    rate: f64,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u: Vec<Vec<f64>> = (0..tokens)
        .map(|_| (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..tokens)
        .map(|_| (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect())
        .collect();
    for _ in 0..iterations {
        let mut gu = vec![vec![0.0; dim]; tokens];
        let mut gv = vec![vec![0.0; dim]; tokens];
        for &(a, b) in pairs {
            let scores: Vec<f64> = v
                .iter()
                .map(|vt| u[a].iter().zip(vt).map(|(x, y)| x * y).sum())
                .collect();
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
            for t in 0..tokens {
                let p = (scores[t] - max).exp() / z;
                let coef = if t == b { 1.0 - p } else { -p };
                for k in 0..dim {
                    gu[a][k] += coef * v[t][k];
                    gv[t][k] += coef * u[a][k];
                }
            }
        }
        for t in 0..tokens {
            for k in 0..dim {
                u[t][k] += rate * gu[t][k];
                v[t][k] += rate * gv[t][k];
            }
        }
    }
    u
}

/// Central finite-difference gradient of `f` at `x`.
pub fn numeric_gradient(x: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + eps;
            let up = f(&probe);
            probe[i] = orig - eps;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}
