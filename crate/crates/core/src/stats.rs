//! Summary statistics for repeated runs.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StdConvention {
    /// Divide by `n`.
    #[default]
    Population,
    /// Divide by `n − 1`.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std_population: f64,
    pub std_sample: f64,
}

impl Summary {
    pub fn std(&self, convention: StdConvention) -> f64 {
        match convention {
            StdConvention::Population => self.std_population,
            StdConvention::Sample => self.std_sample,
        }
    }

    /// Conventions whose value rounds to `printed` at `decimals` places.
    pub fn conventions_matching(&self, printed: f64, decimals: i32) -> Vec<StdConvention> {
        [StdConvention::Population, StdConvention::Sample]
            .into_iter()
            .filter(|&c| (round_to(self.std(c), decimals) - printed).abs() < 0.5 * 10f64.powi(-decimals))
            .collect()
    }
}

pub fn round_to(v: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (v * s).round() / s
}

/// Mean and both standard deviations. A single value has zero spread under
/// either convention; an empty slice yields all zeros.
pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary {
            mean: 0.0,
            std_population: 0.0,
            std_sample: 0.0,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Summary {
        mean,
        std_population: (ss / n as f64).sqrt(),
        std_sample: if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 },
    }
}
