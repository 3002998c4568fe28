use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum KernelSpec {
    Linear,
    #[serde(rename = "RBF")]
    Rbf {
        gamma: f64,
    },
}

impl KernelSpec {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            KernelSpec::Linear => true,
            KernelSpec::Rbf { gamma } => gamma.is_finite() && gamma > 0.0,
        }
    }
}
