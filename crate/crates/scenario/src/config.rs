use std::fmt;
use std::str::FromStr;

use crate::error::ScenarioError;

/// Capacity disruption severity. Each concrete level scales every link
/// capacity by its own uniform draw from the level's range; `MixedLmh`
/// cycles the three concrete levels across a dataset so per-level counts
/// stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisruptionLevel {
    Light,
    Medium,
    Heavy,
    MixedLmh,
}

impl DisruptionLevel {
    /// Uniform range for the per-link capacity factor, for concrete levels.
    pub fn capacity_range(self) -> Option<(f64, f64)> {
        match self {
            Self::Light => Some((0.8, 1.0)),
            Self::Medium => Some((0.5, 1.0)),
            Self::Heavy => Some((0.2, 1.0)),
            Self::MixedLmh => None,
        }
    }

    /// Concrete level used for the sample at `index` under this setting.
    pub fn for_sample(self, index: usize) -> Self {
        match self {
            Self::MixedLmh => [Self::Light, Self::Medium, Self::Heavy][index % 3],
            concrete => concrete,
        }
    }
}

impl fmt::Display for DisruptionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Light => "L",
            Self::Medium => "M",
            Self::Heavy => "H",
            Self::MixedLmh => "mixed-LMH",
        })
    }
}

impl FromStr for DisruptionLevel {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "L" => Ok(Self::Light),
            "M" => Ok(Self::Medium),
            "H" => Ok(Self::Heavy),
            "mixed-LMH" => Ok(Self::MixedLmh),
            other => Err(ScenarioError::Domain(format!(
                "unknown disruption level {other:?}, expected L, M, H, or mixed-LMH"
            ))),
        }
    }
}

/// Recipe for one generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Lower bound of the per-entry demand scaling factor.
    pub od_scale_low: f64,
    /// Upper bound of the per-entry demand scaling factor.
    pub od_scale_high: f64,
    pub disruption_level: DisruptionLevel,
    /// Fraction of positive OD entries hidden from the model input.
    pub mask_ratio: f64,
    /// Master seed; each sample derives its own stream from it.
    pub seed: u64,
    /// Number of samples to generate.
    pub samples: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            od_scale_low: 0.5,
            od_scale_high: 1.5,
            disruption_level: DisruptionLevel::MixedLmh,
            mask_ratio: 0.0,
            seed: 0,
            samples: 10,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.od_scale_low > 0.0 && self.od_scale_low <= self.od_scale_high) {
            return Err(ScenarioError::Domain(format!(
                "demand scale range ({}, {}) must satisfy 0 < low <= high",
                self.od_scale_low, self.od_scale_high
            )));
        }
        if !(0.0..=1.0).contains(&self.mask_ratio) {
            return Err(ScenarioError::Domain(format!(
                "mask ratio {} must lie in [0, 1]",
                self.mask_ratio
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_round_trip_through_strings() {
        for level in [
            DisruptionLevel::Light,
            DisruptionLevel::Medium,
            DisruptionLevel::Heavy,
            DisruptionLevel::MixedLmh,
        ] {
            assert_eq!(level.to_string().parse::<DisruptionLevel>().unwrap(), level);
        }
        assert!("light".parse::<DisruptionLevel>().is_err());
    }

    #[test]
    fn mixed_cycles_evenly() {
        let counts = (0..9).fold([0usize; 3], |mut acc, i| {
            match DisruptionLevel::MixedLmh.for_sample(i) {
                DisruptionLevel::Light => acc[0] += 1,
                DisruptionLevel::Medium => acc[1] += 1,
                DisruptionLevel::Heavy => acc[2] += 1,
                DisruptionLevel::MixedLmh => unreachable!(),
            }
            acc
        });
        assert_eq!(counts, [3, 3, 3]);
        assert_eq!(
            DisruptionLevel::Heavy.for_sample(17),
            DisruptionLevel::Heavy
        );
    }

    #[test]
    fn config_validation_catches_bad_ranges() {
        let mut config = ScenarioConfig::default();
        assert!(config.validate().is_ok());
        config.mask_ratio = 1.2;
        assert!(config.validate().is_err());
        config.mask_ratio = 0.4;
        config.od_scale_low = 0.0;
        assert!(config.validate().is_err());
        config.od_scale_low = 2.0;
        assert!(config.validate().is_err());
    }
}
