//! Distance normalization strategies mapping metric distances into bounded
//! network-output ranges, with exact inverses, plus the training-loss
//! arithmetic (L1 distance loss and the gain-weighted composite loss).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NormError {
    #[error("invalid normalization config: {0}")]
    InvalidConfig(String),
    #[error("negative distance {0}")]
    NegativeDistance(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("negative loss component {0}")]
    NegativeComponent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// y = d / d_max, range [0, 1]
    Linear,
    /// y = log(d + eps) / log(d_max + eps), range [0, 1]
    Logarithmic,
    /// y = 2 (d / d_max) - 1, range [-1, 1]
    LinearNegative,
    /// y = 2 log(d + eps) / log(d_max + eps) - 1, range [-1, 1]
    LogarithmicNegative,
}

impl Strategy {
    pub fn output_range(&self) -> (f64, f64) {
        match self {
            Strategy::Linear | Strategy::Logarithmic => (0.0, 1.0),
            Strategy::LinearNegative | Strategy::LogarithmicNegative => (-1.0, 1.0),
        }
    }

    fn is_logarithmic(&self) -> bool {
        matches!(self, Strategy::Logarithmic | Strategy::LogarithmicNegative)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationConfig {
    pub strategy: Strategy,
    pub d_max: f64,
    pub epsilon: f64,
}

pub const DEFAULT_D_MAX: f64 = 500.0;
pub const DEFAULT_EPSILON: f64 = 1.0;

impl NormalizationConfig {
    pub fn new(strategy: Strategy, d_max: f64, epsilon: f64) -> Result<Self, NormError> {
        if !d_max.is_finite() || d_max <= 0.0 {
            return Err(NormError::InvalidConfig(format!("d_max must be > 0, got {d_max}")));
        }
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(NormError::InvalidConfig(format!("epsilon must be >= 0, got {epsilon}")));
        }
        if strategy.is_logarithmic() {
            if epsilon == 0.0 {
                return Err(NormError::InvalidConfig(
                    "epsilon must be > 0 for logarithmic strategies".to_string(),
                ));
            }
            // denominator log(d_max + eps) must be positive
            if d_max + epsilon <= 1.0 {
                return Err(NormError::InvalidConfig(format!(
                    "d_max + epsilon must exceed 1 for logarithmic strategies, got {}",
                    d_max + epsilon
                )));
            }
        }
        Ok(NormalizationConfig { strategy, d_max, epsilon })
    }

    pub fn linear(d_max: f64) -> Result<Self, NormError> {
        Self::new(Strategy::Linear, d_max, 0.0)
    }
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig { strategy: Strategy::Linear, d_max: DEFAULT_D_MAX, epsilon: 0.0 }
    }
}

/// Map a metric distance into the strategy's bounded output range.
/// Distances above `d_max` are clamped to `d_max` before transforming.
pub fn normalize(d: f64, cfg: &NormalizationConfig) -> Result<f64, NormError> {
    if !d.is_finite() || d < 0.0 {
        return Err(NormError::NegativeDistance(d));
    }
    let d = d.min(cfg.d_max);
    let unit = match cfg.strategy {
        Strategy::Linear | Strategy::LinearNegative => d / cfg.d_max,
        Strategy::Logarithmic | Strategy::LogarithmicNegative => {
            (d + cfg.epsilon).ln() / (cfg.d_max + cfg.epsilon).ln()
        }
    };
    Ok(match cfg.strategy {
        Strategy::Linear | Strategy::Logarithmic => unit,
        Strategy::LinearNegative | Strategy::LogarithmicNegative => 2.0 * unit - 1.0,
    })
}

/// Invert `normalize`. Network outputs outside the attainable range are
/// clamped to it before inverting, so the result is always in [0, d_max].
/// Note the attainable range is narrower than the nominal one when eps < 1:
/// log strategies then map small distances below the nominal lower bound.
pub fn denormalize(y: f64, cfg: &NormalizationConfig) -> Result<f64, NormError> {
    if !y.is_finite() {
        return Err(NormError::InvalidConfig(format!("non-finite network output {y}")));
    }
    let unit_lo = match cfg.strategy {
        Strategy::Linear | Strategy::LinearNegative => 0.0,
        Strategy::Logarithmic | Strategy::LogarithmicNegative => {
            cfg.epsilon.ln() / (cfg.d_max + cfg.epsilon).ln()
        }
    };
    let (lo, hi) = match cfg.strategy {
        Strategy::Linear | Strategy::Logarithmic => (unit_lo, 1.0),
        Strategy::LinearNegative | Strategy::LogarithmicNegative => (2.0 * unit_lo - 1.0, 1.0),
    };
    let y = y.clamp(lo, hi);
    let unit = match cfg.strategy {
        Strategy::Linear | Strategy::Logarithmic => y,
        Strategy::LinearNegative | Strategy::LogarithmicNegative => (y + 1.0) / 2.0,
    };
    let d = match cfg.strategy {
        Strategy::Linear | Strategy::LinearNegative => unit * cfg.d_max,
        Strategy::Logarithmic | Strategy::LogarithmicNegative => {
            (unit * (cfg.d_max + cfg.epsilon).ln()).exp() - cfg.epsilon
        }
    };
    // exp/ln rounding can land epsilon-below zero or above d_max
    Ok(d.clamp(0.0, cfg.d_max))
}

/// Mean L1 distance between normalized predictions and targets.
pub fn distance_loss(pred_y: &[f64], gt_y: &[f64]) -> Result<f64, NormError> {
    if pred_y.len() != gt_y.len() {
        return Err(NormError::LengthMismatch(pred_y.len(), gt_y.len()));
    }
    if pred_y.is_empty() {
        return Err(NormError::EmptyInput);
    }
    let sum: f64 = pred_y.iter().zip(gt_y).map(|(p, g)| (p - g).abs()).sum();
    Ok(sum / pred_y.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossGains {
    pub box_gain: f64,
    pub cls_gain: f64,
    pub obj_gain: f64,
    pub dist_gain: f64,
}

impl LossGains {
    pub fn new(box_gain: f64, cls_gain: f64, obj_gain: f64, dist_gain: f64) -> Result<Self, NormError> {
        for g in [box_gain, cls_gain, obj_gain, dist_gain] {
            if !g.is_finite() || g < 0.0 {
                return Err(NormError::NegativeComponent(g));
            }
        }
        Ok(LossGains { box_gain, cls_gain, obj_gain, dist_gain })
    }
}

/// Gain-weighted sum of the four loss components.
pub fn composite_loss(
    box_loss: f64,
    cls_loss: f64,
    obj_loss: f64,
    dist_loss: f64,
    gains: &LossGains,
) -> Result<f64, NormError> {
    for c in [box_loss, cls_loss, obj_loss, dist_loss] {
        if !c.is_finite() || c < 0.0 {
            return Err(NormError::NegativeComponent(c));
        }
    }
    Ok(gains.box_gain * box_loss
        + gains.cls_gain * cls_loss
        + gains.obj_gain * obj_loss
        + gains.dist_gain * dist_loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::{prop, prop_assert, proptest};

    fn cfg(s: Strategy, d_max: f64, eps: f64) -> NormalizationConfig {
        NormalizationConfig::new(s, d_max, eps).unwrap()
    }

    #[test]
    fn linear_midpoint() {
        let c = cfg(Strategy::Linear, 500.0, 0.0);
        assert_eq!(normalize(250.0, &c).unwrap(), 0.5);
        assert_eq!(denormalize(0.5, &c).unwrap(), 250.0);
    }

    #[test]
    fn log_zero_distance() {
        let c = cfg(Strategy::Logarithmic, 500.0, 1.0);
        assert_eq!(normalize(0.0, &c).unwrap(), 0.0);
    }

    #[test]
    fn log_direct_evaluation() {
        // ln(101)/ln(501), evaluated independently
        let c = cfg(Strategy::Logarithmic, 500.0, 1.0);
        let expected = 101.0_f64.ln() / 501.0_f64.ln();
        assert_relative_eq!(normalize(100.0, &c).unwrap(), expected, max_relative = 1e-15);
    }

    #[test]
    fn linear_negative_endpoints() {
        let c = cfg(Strategy::LinearNegative, 500.0, 0.0);
        assert_eq!(normalize(0.0, &c).unwrap(), -1.0);
        assert_eq!(normalize(500.0, &c).unwrap(), 1.0);
    }

    #[test]
    fn log_endpoint_inverse() {
        let c = cfg(Strategy::Logarithmic, 500.0, 1.0);
        assert_relative_eq!(denormalize(1.0, &c).unwrap(), 500.0, max_relative = 1e-12);
    }

    #[test]
    fn log_negative_midpoint_inverse() {
        // exp(0.5 * ln 501) - 1 = sqrt(501) - 1
        let c = cfg(Strategy::LogarithmicNegative, 500.0, 1.0);
        let expected = 501.0_f64.sqrt() - 1.0;
        assert_relative_eq!(denormalize(0.0, &c).unwrap(), expected, max_relative = 1e-12);
        assert_relative_eq!(denormalize(0.0, &c).unwrap(), 21.3830, max_relative = 1e-4);
    }

    #[test]
    fn log_small_eps_round_trips_below_nominal_range() {
        // with eps < 1, distances below 1 - eps map under the nominal lower
        // bound; the inverse must still recover them
        let c = cfg(Strategy::LogarithmicNegative, 500.0, 0.1);
        let y = normalize(0.3, &c).unwrap();
        assert!(y < -1.0);
        assert_relative_eq!(denormalize(y, &c).unwrap(), 0.3, max_relative = 1e-9);
    }

    #[test]
    fn over_max_clamped() {
        let c = cfg(Strategy::Linear, 500.0, 0.0);
        assert_eq!(normalize(700.0, &c).unwrap(), 1.0);
        assert_eq!(denormalize(1.3, &c).unwrap(), 500.0);
    }

    #[test]
    fn negative_distance_rejected() {
        let c = cfg(Strategy::Linear, 500.0, 0.0);
        assert_eq!(normalize(-1.0, &c), Err(NormError::NegativeDistance(-1.0)));
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(NormalizationConfig::new(Strategy::Linear, 0.0, 0.0).is_err());
        assert!(NormalizationConfig::new(Strategy::Logarithmic, 500.0, 0.0).is_err());
        assert!(NormalizationConfig::new(Strategy::Logarithmic, 0.5, 0.4).is_err());
    }

    #[test]
    fn distance_loss_cases() {
        assert_eq!(distance_loss(&[0.5], &[0.5]).unwrap(), 0.0);
        assert_relative_eq!(distance_loss(&[0.2, 0.8], &[0.4, 0.4]).unwrap(), 0.3);
        assert_eq!(distance_loss(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(distance_loss(&[0.1], &[0.1, 0.2]), Err(NormError::LengthMismatch(1, 2)));
        assert_eq!(distance_loss(&[], &[]), Err(NormError::EmptyInput));
    }

    #[test]
    fn composite_loss_cases() {
        let g = LossGains::new(0.05, 0.3, 0.7, 0.01).unwrap();
        assert_relative_eq!(composite_loss(1.0, 1.0, 1.0, 1.0, &g).unwrap(), 1.06);
        assert_eq!(composite_loss(0.0, 0.0, 0.0, 0.0, &g).unwrap(), 0.0);
        let g2 = LossGains::new(0.05, 0.3, 0.7, 0.1).unwrap();
        assert_relative_eq!(composite_loss(1.0, 0.0, 0.0, 2.0, &g2).unwrap(), 0.25);
        assert!(composite_loss(-1.0, 0.0, 0.0, 0.0, &g).is_err());
    }

    #[test]
    fn composite_loss_linear_in_each_component() {
        let g = LossGains::new(0.05, 0.3, 0.7, 0.1).unwrap();
        let one = composite_loss(0.0, 0.0, 0.0, 1.0, &g).unwrap();
        let two = composite_loss(0.0, 0.0, 0.0, 2.0, &g).unwrap();
        assert_relative_eq!(two, 2.0 * one);
    }

    proptest! {
        #[test]
        fn round_trip_all_strategies(
            s in prop::sample::select(vec![
                Strategy::Linear, Strategy::Logarithmic,
                Strategy::LinearNegative, Strategy::LogarithmicNegative,
            ]),
            d_max in 10.0..2000.0f64,
            eps in prop::sample::select(vec![0.1, 1.0, 10.0]),
            frac in 0.0..1.0f64,
        ) {
            let c = NormalizationConfig::new(s, d_max, eps).unwrap();
            let d = frac * d_max;
            let back = denormalize(normalize(d, &c).unwrap(), &c).unwrap();
            prop_assert!((back - d).abs() <= 1e-9 * d.max(1.0));
        }

        #[test]
        fn monotone_and_in_range(
            s in prop::sample::select(vec![
                Strategy::Linear, Strategy::Logarithmic,
                Strategy::LinearNegative, Strategy::LogarithmicNegative,
            ]),
            d_max in 10.0..2000.0f64,
            f1 in 0.0..1.0f64,
            f2 in 0.0..1.0f64,
        ) {
            let c = NormalizationConfig::new(s, d_max, 1.0).unwrap();
            let (d1, d2) = (f1.min(f2) * d_max, f1.max(f2) * d_max);
            let (y1, y2) = (normalize(d1, &c).unwrap(), normalize(d2, &c).unwrap());
            let (lo, hi) = s.output_range();
            prop_assert!(y1 >= lo - 1e-12 && y2 <= hi + 1e-12);
            if d1 < d2 {
                prop_assert!(y1 < y2);
            }
        }
    }
}
