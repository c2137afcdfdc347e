use std::fmt;
use std::str::FromStr;

use hetgat::ModelConfig;

use crate::error::TrainError;

/// How training handles the dataset's graph sizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    /// Every sample must share one node count.
    #[default]
    Standard,
    /// Encoders come frozen from a pretrained model; only the
    /// preprocessing and readout layers train. Driven by
    /// [`crate::transfer_retrain`].
    Transfer,
    /// Samples are padded with isolated dummy nodes to the largest node
    /// count, so mixed sizes share one parameter shape.
    Homogenized,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Standard => "standard",
            Self::Transfer => "transfer",
            Self::Homogenized => "homogenized",
        };
        f.write_str(name)
    }
}

impl FromStr for Strategy {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, TrainError> {
        match s {
            "standard" => Ok(Self::Standard),
            "transfer" => Ok(Self::Transfer),
            "homogenized" => Ok(Self::Homogenized),
            other => Err(TrainError::Config(format!(
                "unknown strategy {other}; expected standard, transfer, or homogenized"
            ))),
        }
    }
}

/// Which architecture to train.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ModelKind {
    /// The heterogeneous graph attention model.
    #[default]
    HetGat,
    /// The dense baseline over the flattened feature matrix.
    Fcnn,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::HetGat => "hetgat",
            Self::Fcnn => "fcnn",
        };
        f.write_str(name)
    }
}

impl FromStr for ModelKind {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, TrainError> {
        match s {
            "hetgat" => Ok(Self::HetGat),
            "fcnn" => Ok(Self::Fcnn),
            other => Err(TrainError::Config(format!(
                "unknown model kind {other}; expected hetgat or fcnn"
            ))),
        }
    }
}

/// Full training recipe. Loss weights live on `model` so the model and
/// its training objective travel together through checkpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub kind: ModelKind,
    pub model: ModelConfig,
    pub strategy: Strategy,
}

impl Default for TrainConfig {
    /// Desk-scale defaults; the reference regime used batch size 128 and
    /// five-figure sample counts, both reachable through the fields.
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 16,
            epochs: 200,
            seed: 0,
            kind: ModelKind::HetGat,
            model: ModelConfig::default(),
            strategy: Strategy::Standard,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::Config(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be at least 1".into()));
        }
        self.model.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn zero_batch_and_zero_epochs_are_rejected() {
        let mut config = TrainConfig::default();
        config.batch_size = 0;
        assert!(config.validate().is_err());
        let mut config = TrainConfig::default();
        config.epochs = 0;
        assert!(config.validate().is_err());
    }

    #[test]
    fn negative_learning_rate_is_rejected() {
        let mut config = TrainConfig::default();
        config.learning_rate = -0.1;
        assert!(config.validate().is_err());
    }

    #[test]
    fn strategies_round_trip_through_text() {
        for strategy in [Strategy::Standard, Strategy::Transfer, Strategy::Homogenized] {
            let text = strategy.to_string();
            assert_eq!(text.parse::<Strategy>().unwrap(), strategy);
        }
        assert!("adaptive".parse::<Strategy>().is_err());
    }

    #[test]
    fn model_kinds_round_trip_through_text() {
        for kind in [ModelKind::HetGat, ModelKind::Fcnn] {
            assert_eq!(kind.to_string().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("transformer".parse::<ModelKind>().is_err());
    }
}
