//! Temporal coherence score computed from point-tracker visibility.
//!
//! The tracker reports, for every frame, which of its `N` seeded points are
//! still visible. Per frame we take the missed fraction `m[i]` and its
//! consecutive difference `dm[i] = m[i+1] - m[i]`, then reduce the series to
//! five components:
//!
//! * `r_missed`: mean of `m`;
//! * `v_missed`: population standard deviation of `dm`;
//! * `r_cut`: number of differences above the threshold, divided by the frame count;
//! * `c_missed`: sum of the differences above the threshold;
//! * `m_missed`: largest difference.
//!
//! The score is the reciprocal of their sum plus a small `epsilon`.

use serde::{Deserialize, Serialize};

use crate::scalar::{mean, Scalar};
use crate::types::{CoherenceComponents, MissingSeries, VisibilityMatrix};

/// Tracker grid side used when a request does not override it (`N = 100` points).
pub const DEFAULT_GRID_SIZE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CHScoreConfig<T> {
    /// Threshold on `dm[i]` (a fraction of points) above which a frame counts as a cut.
    pub threshold: T,
    pub epsilon: T,
    /// Clamp `m_missed` at zero. When false the raw maximum is used, which is
    /// negative for videos whose visibility only improves.
    pub clamp_negative_max: bool,
}

impl<T: Scalar> Default for CHScoreConfig<T> {
    fn default() -> Self {
        Self {
            threshold: T::lit(0.1),
            epsilon: T::lit(1e-6),
            clamp_negative_max: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("threshold must lie in (0, 1], got {0}")]
    Threshold(f64),
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
}

impl<T: Scalar> CHScoreConfig<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.threshold > T::zero() && self.threshold <= T::one()) {
            return Err(ConfigError::Threshold(self.threshold.to_f64().unwrap_or(f64::NAN)));
        }
        if !(self.epsilon > T::zero() && self.epsilon.is_finite()) {
            return Err(ConfigError::Epsilon(self.epsilon.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(())
    }
}

/// Everything computed on the way to the score, for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport<T> {
    pub score: T,
    pub components: CoherenceComponents<T>,
    pub series: MissingSeries<T>,
    pub config: CHScoreConfig<T>,
}

pub fn missing_series<T: Scalar>(vis: &VisibilityMatrix) -> MissingSeries<T> {
    let n = T::from_count(vis.points());
    let m = (0..vis.frames())
        .map(|i| T::from_count(vis.hidden_count(i)) / n)
        .collect();
    MissingSeries::from_fractions(m).expect("fractions of a valid matrix lie in [0, 1]")
}

pub fn coherence_components<T: Scalar>(series: &MissingSeries<T>, cfg: &CHScoreConfig<T>) -> CoherenceComponents<T> {
    let m = series.m();
    let dm = series.dm();
    let frames = T::from_count(m.len());

    let r_missed = mean(m).expect("series has at least one frame");

    let v_missed = match mean(dm) {
        Some(mean_dm) if dm.len() >= 2 => {
            let ss = dm.iter().fold(T::zero(), |acc, &d| acc + (d - mean_dm) * (d - mean_dm));
            (ss / T::from_count(dm.len())).sqrt()
        }
        _ => T::zero(),
    };

    let (cuts, c_missed) = dm
        .iter()
        .filter(|&&d| d > cfg.threshold)
        .fold((0usize, T::zero()), |(n, s), &d| (n + 1, s + d));
    let r_cut = T::from_count(cuts) / frames;

    let m_missed = match dm.iter().copied().reduce(T::max) {
        None => T::zero(),
        Some(max) if cfg.clamp_negative_max => max.max(T::zero()),
        Some(max) => max,
    };

    CoherenceComponents {
        r_missed,
        v_missed,
        r_cut,
        c_missed,
        m_missed,
        threshold: cfg.threshold,
    }
}

pub fn chscore<T: Scalar>(components: &CoherenceComponents<T>, cfg: &CHScoreConfig<T>) -> T {
    T::one() / (components.sum() + cfg.epsilon)
}

pub fn chscore_from_visibility<T: Scalar>(
    vis: &VisibilityMatrix,
    cfg: &CHScoreConfig<T>,
) -> Result<CoherenceReport<T>, ConfigError> {
    cfg.validate()?;
    let series = missing_series(vis);
    let components = coherence_components(&series, cfg);
    Ok(CoherenceReport {
        score: chscore(&components, cfg),
        components,
        series,
        config: *cfg,
    })
}
