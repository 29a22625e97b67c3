//! Inverse-exponential temporal frame sampling.
//!
//! The last frame of a clip is always kept. The other `n - 1` frames are drawn
//! without replacement from indices `0..N_v - 1`, where index `i` carries
//! weight `exp(-λ (N_v - 2 - i))`. With `λ = 0` this is uniform sampling; larger
//! `λ` concentrates the draw on the frames right before the end of the clip.
//!
//! Weighted sampling without replacement uses exponential keys: every eligible
//! index gets `key = ln(u) / w` for a uniform `u ∈ (0, 1]`, and the `n - 1`
//! largest keys win. The index with the largest key is distributed exactly
//! according to the normalized weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub lambda: f64,
    pub sample_size: usize,
    pub seed: u64,
}

impl SamplingConfig {
    pub fn new(lambda: f64, sample_size: usize, seed: u64) -> Result<Self> {
        let config = Self {
            lambda,
            sample_size,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.sample_size == 0 {
            return Err(Error::Domain("sample size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Selected frames, strictly increasing, always ending with `sequence_length - 1`.
    pub frame_indices: Vec<usize>,
    /// Selection distribution over indices `0..sequence_length - 1`.
    pub probabilities: Vec<f64>,
    pub config_used: SamplingConfig,
    pub sequence_length: usize,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

/// Unnormalized weights `exp(-λ (N_v - 2 - i))` for `i = 0..N_v - 1`.
///
/// The last weight is exactly 1, so the sum never underflows to zero.
fn raw_weights(sequence_length: usize, lambda: f64) -> Vec<f64> {
    let last = sequence_length - 2;
    (0..=last)
        .map(|i| (-lambda * (last - i) as f64).exp())
        .collect()
}

/// Selection probability of every non-final frame of a clip with `sequence_length` frames.
pub fn compute_weights(sequence_length: usize, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    if sequence_length < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 frames to define a distribution, got {sequence_length}"
        )));
    }
    if lambda == 0.0 {
        let p = 1.0 / (sequence_length - 1) as f64;
        return Ok(vec![p; sequence_length - 1]);
    }
    let mut weights = raw_weights(sequence_length, lambda);
    // Summed from the smallest weight up to limit rounding error.
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Indices of the non-final frames in the order they are drawn.
///
/// Returns `min(sample_size - 1, sequence_length - 1)` indices. The first
/// element is distributed exactly as [`compute_weights`].
pub fn weighted_draw_order(sequence_length: usize, config: &SamplingConfig) -> Result<Vec<usize>> {
    config.validate()?;
    if sequence_length == 0 {
        return Err(Error::Degenerate("clip has no frames".into()));
    }
    let take = (config.sample_size - 1).min(sequence_length - 1);
    if take == 0 {
        return Ok(Vec::new());
    }
    let weights = raw_weights(sequence_length, config.lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            // u in (0, 1] so ln(u) is finite.
            let u = 1.0 - rng.random::<f64>();
            let key = if w > 0.0 { u.ln() / w } else { f64::NEG_INFINITY };
            (key, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));
    Ok(keyed.into_iter().take(take).map(|(_, i)| i).collect())
}

pub fn draw_plan(sequence_length: usize, config: &SamplingConfig) -> Result<SamplingPlan> {
    config.validate()?;
    if sequence_length == 0 {
        return Err(Error::Precondition("clip has no frames".into()));
    }
    let last = sequence_length - 1;
    let (mut frame_indices, probabilities) = if sequence_length == 1 {
        (Vec::new(), Vec::new())
    } else if config.sample_size >= sequence_length {
        (
            (0..last).collect(),
            compute_weights(sequence_length, config.lambda)?,
        )
    } else {
        (
            weighted_draw_order(sequence_length, config)?,
            compute_weights(sequence_length, config.lambda)?,
        )
    };
    frame_indices.sort_unstable();
    frame_indices.push(last);
    Ok(SamplingPlan {
        frame_indices,
        probabilities,
        config_used: *config,
        sequence_length,
    })
}

pub fn plan_to_timestamps(plan: &SamplingPlan, fps: f64) -> Result<Vec<f64>> {
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(Error::Precondition(format!("fps must be positive, got {fps}")));
    }
    Ok(plan
        .frame_indices
        .iter()
        .map(|&i| i as f64 / fps)
        .collect())
}

/// JSON shape printed by the `sample` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanSummary {
    pub indices: Vec<usize>,
    pub probabilities: Vec<f64>,
    pub lambda: f64,
    pub n: usize,
    pub seed: u64,
}

impl From<&SamplingPlan> for PlanSummary {
    fn from(plan: &SamplingPlan) -> Self {
        Self {
            indices: plan.frame_indices.clone(),
            probabilities: plan.probabilities.clone(),
            lambda: plan.config_used.lambda,
            n: plan.config_used.sample_size,
            seed: plan.config_used.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lambda: f64, n: usize, seed: u64) -> SamplingConfig {
        SamplingConfig::new(lambda, n, seed).unwrap()
    }

    #[test]
    fn uniform_when_lambda_is_zero() {
        assert_eq!(compute_weights(5, 0.0).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn hand_computed_weights() {
        // e^-2, e^-1, 1 normalized; evaluated independently with Python's math.exp.
        let expected = [0.090_030_573_2, 0.244_728_471_1, 0.665_240_955_8];
        let got = compute_weights(4, 1.0).unwrap();
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 1e-9, "{g} vs {e}");
        }
    }

    #[test]
    fn two_frames_single_weight() {
        assert_eq!(compute_weights(2, 0.5).unwrap(), vec![1.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(compute_weights(10, 1.5), Err(Error::Domain(_))));
        assert!(matches!(compute_weights(10, -0.1), Err(Error::Domain(_))));
        assert!(matches!(compute_weights(10, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(compute_weights(1, 0.1), Err(Error::Degenerate(_))));
        assert!(matches!(SamplingConfig::new(0.1, 0, 1), Err(Error::Domain(_))));
        let bad = SamplingConfig {
            lambda: 0.1,
            sample_size: 0,
            seed: 0,
        };
        assert!(matches!(draw_plan(10, &bad), Err(Error::Domain(_))));
    }

    #[test]
    fn returns_everything_when_n_covers_clip() {
        let plan = draw_plan(3, &cfg(0.1, 5, 99)).unwrap();
        assert_eq!(plan.frame_indices, vec![0, 1, 2]);
    }

    #[test]
    fn single_frame_clip() {
        let plan = draw_plan(1, &cfg(0.3, 1, 0)).unwrap();
        assert_eq!(plan.frame_indices, vec![0]);
        assert!(plan.probabilities.is_empty());
        let plan = draw_plan(1, &cfg(0.3, 8, 0)).unwrap();
        assert_eq!(plan.frame_indices, vec![0]);
    }

    #[test]
    fn n_of_one_keeps_only_the_last_frame() {
        let plan = draw_plan(40, &cfg(0.5, 1, 3)).unwrap();
        assert_eq!(plan.frame_indices, vec![39]);
    }

    #[test]
    fn plan_shape() {
        let plan = draw_plan(50, &cfg(0.1, 10, 7)).unwrap();
        assert_eq!(plan.frame_indices.len(), 10);
        assert_eq!(*plan.frame_indices.last().unwrap(), 49);
        assert!(plan.frame_indices.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(plan.probabilities.len(), 49);
    }

    #[test]
    fn deterministic_for_equal_inputs() {
        let a = draw_plan(250, &cfg(0.04, 15, 1234)).unwrap();
        let b = draw_plan(250, &cfg(0.04, 15, 1234)).unwrap();
        assert_eq!(a, b);
        let c = draw_plan(250, &cfg(0.04, 15, 1235)).unwrap();
        assert_ne!(a.frame_indices, c.frame_indices);
    }

    #[test]
    fn large_lambda_prefers_late_frames() {
        let plan = draw_plan(250, &cfg(1.0, 15, 5)).unwrap();
        // With λ = 1 the tail dominates: the 14 drawn frames sit near the end.
        assert!(plan.frame_indices[0] > 200, "{:?}", plan.frame_indices);
    }

    #[test]
    fn timestamps() {
        let mut plan = draw_plan(11, &cfg(0.0, 20, 0)).unwrap();
        plan.frame_indices = vec![0, 10];
        assert_eq!(plan_to_timestamps(&plan, 10.0).unwrap(), vec![0.0, 1.0]);
        plan.frame_indices = vec![249];
        let ts = plan_to_timestamps(&plan, 25.0).unwrap();
        assert!((ts[0] - 9.96).abs() < 1e-12);
        plan.frame_indices = vec![0];
        assert!(matches!(plan_to_timestamps(&plan, 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn huge_clip_does_not_collapse() {
        let w = compute_weights(100_000, 1.0).unwrap();
        assert_eq!(w.len(), 99_999);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(w[0], 0.0);
        let plan = draw_plan(100_000, &cfg(1.0, 30, 11)).unwrap();
        assert_eq!(plan.frame_indices.len(), 30);
    }
}
