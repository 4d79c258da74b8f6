//! Independent reference implementations used to check the library.
//! Deliberately naive: plain loops, no shared code with the crate.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::rngs::StdRng;
use rand::Rng;

/// Coherence score written step by step from the visibility matrix:
/// per-frame missed fractions, their forward differences, the cut set,
/// then mean / std / ratio / sum / max. Conventions on top: the maximum
/// is clamped at zero unless `raw_max`, epsilon is added to the sum, and a
/// single frame has no difference-based terms.
/// Returns `(score, [r_missed, v_missed, r_cut, c_missed, m_missed])`.
pub fn coherence_reference(vis: &[Vec<bool>], threshold: f64, epsilon: f64, raw_max: bool) -> (f64, [f64; 5]) {
    let frames = vis.len();
    let n = vis[0].len();

    let mut m = vec![0.0f64; frames];
    for i in 0..frames {
        let mut missing = 0.0;
        for j in 0..n {
            let p = if vis[i][j] { 1.0 } else { 0.0 };
            missing += 1.0 - p;
        }
        m[i] = missing / n as f64;
    }

    let mut delta = Vec::new();
    let mut frames_to_be_cut = Vec::new();
    let mut c_missed = 0.0;
    for i in 0..frames.saturating_sub(1) {
        let d = m[i + 1] - m[i];
        delta.push(d);
        if d > threshold {
            frames_to_be_cut.push(i);
            c_missed += d;
        }
    }

    let r_cut = frames_to_be_cut.len() as f64 / frames as f64;

    let mut total = 0.0;
    for v in &m {
        total += v;
    }
    let r_missed = total / frames as f64;

    let v_missed = if delta.is_empty() {
        0.0
    } else {
        let mut s = 0.0;
        for d in &delta {
            s += d;
        }
        let mu = s / delta.len() as f64;
        let mut var = 0.0;
        for d in &delta {
            var += (d - mu) * (d - mu);
        }
        (var / delta.len() as f64).sqrt()
    };

    let m_missed = if delta.is_empty() {
        0.0
    } else {
        let mut best = delta[0];
        for d in &delta[1..] {
            if *d > best {
                best = *d;
            }
        }
        if raw_max {
            best
        } else {
            best.max(0.0)
        }
    };

    let tsi_sum = r_missed + v_missed + r_cut + c_missed + m_missed;
    (
        1.0 / (tsi_sum + epsilon),
        [r_missed, v_missed, r_cut, c_missed, m_missed],
    )
}

pub fn random_visibility(rng: &mut StdRng, max_frames: usize, max_points: usize) -> Vec<Vec<bool>> {
    let frames = rng.random_range(1..=max_frames);
    let points = rng.random_range(1..=max_points);
    let density: f64 = rng.random_range(0.0..=1.0);
    (0..frames)
        .map(|_| (0..points).map(|_| rng.random_bool(density)).collect())
        .collect()
}

/// Tie-free Kendall tau by counting every pair.
pub fn kendall_by_pairs(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let s = (x[i] - x[j]) * (y[i] - y[j]);
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            }
        }
    }
    (concordant - discordant) as f64 / (n * (n - 1) / 2) as f64
}

/// Tie-free Spearman rho from squared rank differences.
pub fn spearman_by_d2(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; v.len()];
        for i in 0..v.len() {
            r[i] = 1.0 + v.iter().filter(|&&w| w < v[i]).count() as f64;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Every permutation of `0..n`, in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(current.clone());
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Raises the largest frame-to-frame jump in missed fraction above
/// `threshold` by hiding the same number of extra points in every frame
/// after it, which leaves all other jumps unchanged. `None` when the matrix
/// has a single frame or too few visible points to hide.
pub fn inject_spike(vis: &[Vec<bool>], threshold: f64) -> Option<Vec<Vec<bool>>> {
    if vis.len() < 2 {
        return None;
    }
    let n = vis[0].len();
    let hidden: Vec<usize> = vis.iter().map(|row| row.iter().filter(|v| !**v).count()).collect();
    let k = (1..vis.len())
        .max_by_key(|&i| hidden[i] as i64 - hidden[i - 1] as i64)
        .unwrap();
    let jump = hidden[k] as f64 - hidden[k - 1] as f64;
    let extra = ((threshold * n as f64 - jump).floor() + 1.0).max(1.0) as usize;
    if (k..vis.len()).any(|j| n - hidden[j] < extra) {
        return None;
    }
    let mut out = vis.to_vec();
    for row in &mut out[k..] {
        let mut left = extra;
        for v in row.iter_mut() {
            if left > 0 && *v {
                *v = false;
                left -= 1;
            }
        }
    }
    let spiked = (jump + extra as f64) / n as f64;
    assert!(spiked > threshold, "injected jump {spiked} must exceed {threshold}");
    Some(out)
}
