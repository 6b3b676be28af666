use serde::{Deserialize, Serialize};

use super::neighbors::k_nearest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KnnMethod {
    /// Distance to the k-th neighbor.
    #[default]
    Largest,
    Mean,
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub(crate) train: Vec<Vec<f64>>,
    pub(crate) k: usize,
    pub(crate) method: KnnMethod,
    pub(crate) p: f64,
}

impl KnnModel {
    pub fn new(train: Vec<Vec<f64>>, k: usize, method: KnnMethod, p: f64) -> Self {
        Self { train, k, method, p }
    }

    pub fn score(&self, x: &[f64], exclude: Option<usize>) -> f64 {
        let nn = k_nearest(&self.train, x, self.k, self.p, exclude);
        let d: Vec<f64> = nn.iter().map(|(d, _)| *d).collect();
        match self.method {
            KnnMethod::Largest => d[d.len() - 1],
            KnnMethod::Mean => d.iter().sum::<f64>() / d.len() as f64,
            KnnMethod::Median => {
                let m = d.len();
                if m % 2 == 1 {
                    d[m / 2]
                } else {
                    0.5 * (d[m / 2 - 1] + d[m / 2])
                }
            }
        }
    }
}
