//! Reference computations written from the model definitions alone. Nothing
//! here calls into the library's likelihoods, grids or entropy code.
#![allow(dead_code)]

use std::f64::consts::{PI, SQRT_2};

pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn entropy(ps: &[f64]) -> f64 {
    ps.iter().filter(|p| **p > 0.0).map(|p| -p * p.ln()).sum()
}

/// I(θ; y) for a weighted grid and per-θ outcome probabilities.
pub fn mutual_information(grid: &[(f64, Vec<f64>)]) -> f64 {
    let total: f64 = grid.iter().map(|(w, _)| w).sum();
    let k = grid[0].1.len();
    let mut marginal = vec![0.0; k];
    let mut cond = 0.0;
    for (w, ps) in grid {
        let w = w / total;
        cond += w * entropy(ps);
        for (m, p) in marginal.iter_mut().zip(ps) {
            *m += w * p;
        }
    }
    entropy(&marginal) - cond
}

/// Probability of taking the delayed reward.
pub fn hd_delayed(log_k: f64, alpha: f64, ir: f64, dr: f64, delay: f64, eps: f64) -> f64 {
    let vd = dr / (1.0 + log_k.exp() * delay);
    eps + (1.0 - 2.0 * eps) * phi((vd - ir) / alpha)
}

/// Midpoint grid over log k ~ N(−4.25, 1.5) and α ~ HalfNormal(2), density weights.
pub fn hd_grid(n_k: usize, n_a: usize) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(n_k * n_a);
    for i in 0..n_k {
        let z = -6.0 + (i as f64 + 0.5) * 12.0 / n_k as f64;
        for j in 0..n_a {
            let a = (j as f64 + 0.5) * 12.0 / n_a as f64;
            out.push((-4.25 + 1.5 * z, a, normal_pdf(z) * normal_pdf(a / 2.0)));
        }
    }
    out
}

pub fn hd_eig(ir: f64, dr: f64, delay: f64, grid: &[(f64, f64, f64)]) -> f64 {
    let rows: Vec<(f64, Vec<f64>)> = grid
        .iter()
        .map(|&(lk, a, w)| {
            let p = hd_delayed(lk, a, ir, dr, delay, 0.01);
            (w, vec![p, 1.0 - p])
        })
        .collect();
    mutual_information(&rows)
}

fn choose(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    (0..=n).map(|k| choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)).collect()
}

/// Midpoint grid over θ ~ TruncatedNormal(1, 1, 0, ∞).
pub fn death_grid(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let th = (i as f64 + 0.5) * 8.0 / n as f64;
            (th, normal_pdf(th - 1.0))
        })
        .collect()
}

pub fn death_eig(population: u64, t: f64, grid: &[(f64, f64)]) -> f64 {
    let rows: Vec<(f64, Vec<f64>)> =
        grid.iter().map(|&(th, w)| (w, binomial_pmf(population, 1.0 - (-th * t).exp()))).collect();
    mutual_information(&rows)
}

/// Classical RK4 on the Lotka-Volterra system.
pub fn lv_rk4(p: [f64; 4], init: [f64; 2], t: f64, h: f64) -> [f64; 2] {
    let [a, b, g, d] = p;
    let f = |s: [f64; 2]| [a * s[0] - b * s[0] * s[1], d * s[0] * s[1] - g * s[1]];
    let steps = (t / h).round() as usize;
    let mut s = init;
    for _ in 0..steps {
        let k1 = f(s);
        let k2 = f([s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]]);
        let k3 = f([s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]]);
        let k4 = f([s[0] + h * k3[0], s[1] + h * k3[1]]);
        for i in 0..2 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    s
}

pub struct Moments {
    pub mean: f64,
    pub std_error: f64,
}

pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Moments { mean, std_error: (var / n).sqrt() }
}
