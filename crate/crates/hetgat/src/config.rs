use crate::error::HetGatError;

/// Coefficients of the three training loss terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub flow: f64,
    pub conservation: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            flow: 0.005,
            conservation: 0.05,
        }
    }
}

/// Architecture hyperparameters shared by the graph model and the dense
/// baseline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    /// Node embedding width, split evenly across attention heads.
    pub embed_size: usize,
    pub heads: usize,
    pub v_layers: usize,
    pub r_layers: usize,
    /// Width of the preprocessing MLP and of the dense baseline.
    pub hidden_size: usize,
    /// Skips the demand-edge encoder layers entirely, leaving a plain
    /// graph attention model on road links.
    pub homogeneous_mode: bool,
    /// Also adds each demand edge in the reverse direction.
    pub reversed_virtual: bool,
    pub weights: LossWeights,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_size: 32,
            heads: 8,
            v_layers: 2,
            r_layers: 2,
            hidden_size: 64,
            homogeneous_mode: false,
            reversed_virtual: false,
            weights: LossWeights::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), HetGatError> {
        if self.heads == 0 || self.embed_size == 0 || self.hidden_size == 0 {
            return Err(HetGatError::Config(
                "embed size, head count, and hidden size must be positive".to_string(),
            ));
        }
        if self.embed_size % self.heads != 0 {
            return Err(HetGatError::Config(format!(
                "embed size {} is not divisible by {} heads",
                self.embed_size, self.heads
            )));
        }
        if self.v_layers == 0 || self.r_layers == 0 {
            return Err(HetGatError::Config(
                "encoder layer counts must be at least 1".to_string(),
            ));
        }
        let w = &self.weights;
        if !(w.alpha >= 0.0 && w.flow >= 0.0 && w.conservation >= 0.0) {
            return Err(HetGatError::Config(format!(
                "loss weights ({}, {}, {}) must be non-negative",
                w.alpha, w.flow, w.conservation
            )));
        }
        Ok(())
    }

    /// Per-head slice width.
    pub fn head_dim(&self) -> usize {
        self.embed_size / self.heads
    }
}
