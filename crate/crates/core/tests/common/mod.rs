//! Reference implementations and fixtures shared by the integration tests.
//! Everything here is written from the textbook definitions, without calling
//! into the crate, so it can serve as an independent check.

#![allow(dead_code)]

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use speechcost_core::evaluation::{Gender, SampleMeta, Task};

pub fn sine(n: usize, f: f64, amp: f64, sr: f64) -> Vec<f64> {
    (0..n).map(|i| amp * (2.0 * PI * f * i as f64 / sr).sin()).collect()
}

pub fn white_noise(n: usize, sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect()
}

pub fn normal_vec(n: usize, mean: f64, seed: u64) -> Vec<f64> {
    white_noise(n, 1.0, seed).into_iter().map(|v| v + mean).collect()
}

/// `y = X·w + σ·ε` with standard normal `X` and `ε`.
pub fn linear_task(n: usize, w: &[f64], sigma: f64, seed: u64) -> (Array2<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, w.len()), |_| StandardNormal.sample(&mut rng));
    let y = x
        .rows()
        .into_iter()
        .map(|r| {
            let e: f64 = StandardNormal.sample(&mut rng);
            r.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + sigma * e
        })
        .collect();
    (x, y)
}

pub fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("f{j}")).collect()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn pop_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

pub fn rmse(p: &[f64], t: &[f64]) -> f64 {
    (p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / p.len() as f64).sqrt()
}

pub fn mae(p: &[f64], t: &[f64]) -> f64 {
    p.iter().zip(t).map(|(a, b)| (a - b).abs()).sum::<f64>() / p.len() as f64
}

/// Lin's concordance correlation with population moments.
pub fn ccc(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let n = a.len() as f64;
    let sab = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
    let denom = pop_var(a) + pop_var(b) + (ma - mb) * (ma - mb);
    if denom == 0.0 {
        0.0
    } else {
        2.0 * sab / denom
    }
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 60)
}

/// `E1(x) = ∫_1^∞ e^{-xt}/t dt`, written as `∫_0^∞ e^{-x e^u} du` and
/// integrated up to where the integrand is below 1e-300.
pub fn e1_quadrature(x: f64) -> f64 {
    let f = |u: f64| (-x * u.exp()).exp();
    // e^{-x e^u} < 1e-300 once x e^u > 700
    let upper = (700.0 / x).ln().max(1.0);
    // split the range so the adaptive rule sees the knee where x e^u ≈ 1
    let knee = (1.0 / x).ln().max(0.0).min(upper);
    // E1(x) ≈ e^{-x}/(x+1) sets the scale for a relative tolerance
    let tol = 1e-14 * (-x).exp() / (x + 1.0);
    integrate(&f, 0.0, knee, tol) + integrate(&f, knee, upper, tol)
}

/// Exact two-sided Wilcoxon p-value by enumerating every sign assignment.
pub fn wilcoxon_brute(before: &[f64], after: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = after
        .iter()
        .zip(before)
        .map(|(a, b)| a - b)
        .filter(|v| *v != 0.0)
        .collect();
    let n = d.len();
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    // average ranks by counting
    let ranks: Vec<f64> = abs
        .iter()
        .map(|&a| {
            let less = abs.iter().filter(|&&b| b < a).count() as f64;
            let equal = abs.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let total: f64 = ranks.iter().sum();
    let w = w_plus.min(total - w_plus);
    let mut at_most = 0u64;
    for mask in 0u64..(1u64 << n) {
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if s <= w + 1e-9 {
            at_most += 1;
        }
    }
    let p = (2.0 * at_most as f64 / (1u64 << n) as f64).min(1.0);
    (w, p)
}

/// `subjects` subjects with `per_subject` samples each; genders alternate,
/// tasks rotate and scores come from `score(subject)`.
pub fn metadata(subjects: usize, per_subject: usize, score: impl Fn(usize) -> u8) -> Vec<SampleMeta> {
    let mut out = Vec::new();
    for s in 0..subjects {
        for r in 0..per_subject {
            out.push(SampleMeta {
                sample_id: format!("s{s:03}_{r}"),
                subject_id: format!("s{s:03}"),
                gender: if s % 2 == 0 { Gender::Male } else { Gender::Female },
                task: Task::ALL[r % Task::ALL.len()],
                phq8: score(s),
                duration_s: 2.0 + (r as f64) * 0.5 + (s % 7) as f64 * 0.1,
            });
        }
    }
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

/// Greedy quotient mRMR recomputed from scratch at every step with the
/// reference correlation: no cached sums, no unit columns. Exact copies of a
/// selected feature only compete once nothing else is left.
pub fn brute_force_mrmr(x: &Array2<f64>, y: &[f64], k: usize) -> Vec<usize> {
    let p = x.ncols();
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < k {
        let copy = |j: usize| {
            chosen
                .iter()
                .any(|&s| pearson(&x.column(j).to_vec(), &x.column(s).to_vec()).abs() >= 1.0 - 1e-9)
        };
        let open: Vec<usize> = (0..p).filter(|j| !chosen.contains(j)).collect();
        let fresh: Vec<usize> = open.iter().copied().filter(|&j| !copy(j)).collect();
        let pool = if fresh.is_empty() { open } else { fresh };
        let mut best: Option<(usize, f64)> = None;
        for j in pool {
            let rel = pearson(&x.column(j).to_vec(), y).abs();
            let red = if chosen.is_empty() {
                1.0
            } else {
                chosen
                    .iter()
                    .map(|&s| pearson(&x.column(j).to_vec(), &x.column(s).to_vec()).abs())
                    .sum::<f64>()
                    / chosen.len() as f64
            };
            let score = rel / red.max(1e-12);
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        chosen.push(best.unwrap().0);
    }
    chosen
}
