//! Rank correlation between automatic metrics and human ratings.
//!
//! Kendall's tau-b uses Knight's O(n log n) algorithm (sort by `x`, then count
//! the inversions a merge sort of `y` performs). Spearman's rho is the Pearson
//! correlation of average ranks, so ties are handled without the `d²`
//! shortcut.

use std::cmp::Ordering;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("samples differ in length: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least 2 paired observations, got {0}")]
    TooShort(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("degenerate sample: every value of {0} is tied")]
    Degenerate(&'static str),
}

/// Paired observations `(x[i], y[i])`, at least two, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample<T> {
    x: Vec<T>,
    y: Vec<T>,
}

impl<T: Scalar> PairedSample<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self, StatsError> {
        if x.len() != y.len() {
            return Err(StatsError::LengthMismatch { x: x.len(), y: y.len() });
        }
        if x.len() < 2 {
            return Err(StatsError::TooShort(x.len()));
        }
        if let Some(i) = x.iter().zip(&y).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(StatsError::NonFinite(i));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).expect("values are finite")
}

/// Sum of `t * (t - 1) / 2` over runs of equal adjacent items.
fn tied_pairs<I: Iterator<Item = bool>>(same_as_prev: I) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for same in same_as_prev {
        if same {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort of `v` counting inversions (strictly greater before smaller).
fn sort_counting_swaps<T: Scalar>(v: &mut [T], buf: &mut Vec<T>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_swaps(&mut v[..mid], buf) + sort_counting_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if cmp(&v[j], &v[i]) == Ordering::Less {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b: `(P - Q) / sqrt((P + Q + Tx) (P + Q + Ty))` where `Tx`, `Ty`
/// count pairs tied only in `x` or only in `y`.
pub fn kendall_tau<T: Scalar>(s: &PairedSample<T>) -> Result<T, StatsError> {
    let n = s.len();
    let mut pairs: Vec<(T, T)> = s.x.iter().copied().zip(s.y.iter().copied()).collect();
    pairs.sort_by(|a, b| cmp(&a.0, &b.0).then_with(|| cmp(&a.1, &b.1)));

    let total = (n as u64) * (n as u64 - 1) / 2;
    let x_ties = tied_pairs(pairs.windows(2).map(|w| w[0].0 == w[1].0));
    let joint_ties = tied_pairs(pairs.windows(2).map(|w| w[0] == w[1]));

    let mut ys: Vec<T> = pairs.iter().map(|p| p.1).collect();
    let swaps = sort_counting_swaps(&mut ys, &mut Vec::with_capacity(n));
    let y_ties = tied_pairs(ys.windows(2).map(|w| w[0] == w[1]));

    if x_ties == total {
        return Err(StatsError::Degenerate("x"));
    }
    if y_ties == total {
        return Err(StatsError::Degenerate("y"));
    }
    let concordant_minus_discordant =
        total as i64 - x_ties as i64 - y_ties as i64 + joint_ties as i64 - 2 * swaps as i64;
    let denom = ((total - x_ties) as f64) * ((total - y_ties) as f64);
    Ok(T::lit(concordant_minus_discordant as f64) / T::lit(denom).sqrt())
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| cmp(&values[a], &values[b]));
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end
        let rank = T::from_count(start + end + 1) / T::lit(2.0);
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson<T: Scalar>(x: &[T], y: &[T], name: (&'static str, &'static str)) -> Result<T, StatsError> {
    let n = T::from_count(x.len());
    let mx = x.iter().fold(T::zero(), |a, &v| a + v) / n;
    let my = y.iter().fold(T::zero(), |a, &v| a + v) / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() {
        return Err(StatsError::Degenerate(name.0));
    }
    if syy == T::zero() {
        return Err(StatsError::Degenerate(name.1));
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.max(-T::one()).min(T::one()))
}

pub fn spearman_rho<T: Scalar>(s: &PairedSample<T>) -> Result<T, StatsError> {
    pearson(&average_ranks(&s.x), &average_ranks(&s.y), ("x", "y"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: &[f64], y: &[f64]) -> PairedSample<f64> {
        PairedSample::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn small_examples() {
        let s = sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert_eq!(kendall_tau(&s).unwrap(), 1.0);
        assert_eq!(spearman_rho(&s).unwrap(), 1.0);
        let s = sample(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]);
        assert_eq!(kendall_tau(&s).unwrap(), -1.0);
        assert_eq!(spearman_rho(&s).unwrap(), -1.0);
        let s = sample(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]);
        assert_eq!(kendall_tau(&s).unwrap(), 1.0 / 3.0);
        assert_eq!(spearman_rho(&s).unwrap(), 0.5);
    }

    #[test]
    fn tau_b_with_ties() {
        // Pairs by hand: x=[1,1,2,3], y=[1,2,2,3]. Of 6 pairs: (0,1) tied in x only,
        // (1,2) tied in y only, the other 4 concordant.
        let s = sample(&[1.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 3.0]);
        let expected = 4.0 / (5.0f64 * 5.0).sqrt();
        assert!((kendall_tau(&s).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn degenerate_and_invalid_samples() {
        let s = sample(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]);
        assert_eq!(kendall_tau(&s), Err(StatsError::Degenerate("x")));
        assert_eq!(spearman_rho(&s), Err(StatsError::Degenerate("x")));
        let s = sample(&[1.0, 2.0], &[4.0, 4.0]);
        assert_eq!(kendall_tau(&s), Err(StatsError::Degenerate("y")));
        assert_eq!(PairedSample::new(vec![1.0], vec![1.0]), Err(StatsError::TooShort(1)));
        assert_eq!(
            PairedSample::new(vec![1.0, 2.0], vec![1.0]),
            Err(StatsError::LengthMismatch { x: 2, y: 1 })
        );
        assert_eq!(
            PairedSample::new(vec![1.0, f64::NAN], vec![1.0, 2.0]),
            Err(StatsError::NonFinite(1))
        );
    }
}
