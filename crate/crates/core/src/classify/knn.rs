use serde::{Deserialize, Serialize};

use super::Encoded;

/// 1-nearest-neighbour under Euclidean distance. Equidistant exemplars are
/// resolved in favour of the earliest one in training order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestNeighbour {
    exemplars: Vec<Vec<f64>>,
    targets: Vec<usize>,
}

impl NearestNeighbour {
    pub(crate) fn fit(data: &Encoded<'_>) -> Self {
        Self {
            exemplars: data.rows.iter().map(|r| r.to_vec()).collect(),
            targets: data.targets.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0usize);
        for (e, &t) in self.exemplars.iter().zip(&self.targets) {
            let d: f64 = e.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.0 {
                best = (d, t);
            }
        }
        best.1
    }
}
