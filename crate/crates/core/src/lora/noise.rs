use serde::{Deserialize, Serialize};

use super::LoraError;

/// Per-timestep signal and noise scales for `z_t = α_t·x + σ_t·ε`,
/// indexed by `t ∈ 1..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    alphas: Vec<f64>,
    sigmas: Vec<f64>,
}

impl NoiseSchedule {
    pub fn new(alphas: Vec<f64>, sigmas: Vec<f64>) -> Result<Self, LoraError> {
        if alphas.is_empty() || alphas.len() != sigmas.len() {
            return Err(LoraError::Schedule("need T >= 1 matching alphas and sigmas".into()));
        }
        if alphas.iter().chain(&sigmas).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(LoraError::Schedule("alphas and sigmas must be positive".into()));
        }
        if alphas.windows(2).any(|w| w[1] >= w[0]) || sigmas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LoraError::Schedule("alphas must decrease and sigmas increase".into()));
        }
        Ok(Self { alphas, sigmas })
    }

    /// `α_t = 1 − t/(T+1)`, `σ_t = t/(T+1)`.
    pub fn linear(steps: usize) -> Result<Self, LoraError> {
        let d = steps as f64 + 1.0;
        Self::new(
            (1..=steps).map(|t| 1.0 - t as f64 / d).collect(),
            (1..=steps).map(|t| t as f64 / d).collect(),
        )
    }

    pub fn steps(&self) -> usize {
        self.alphas.len()
    }

    /// `(α_t, σ_t)` for `t ∈ 1..=T`.
    pub fn at(&self, t: usize) -> Result<(f64, f64), LoraError> {
        if t == 0 || t > self.steps() {
            return Err(LoraError::Timestep { t, max: self.steps() });
        }
        Ok((self.alphas[t - 1], self.sigmas[t - 1]))
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self::linear(10).expect("linear schedule is valid")
    }
}

pub(crate) fn mix(alpha: f64, x: &[f64], sigma: f64, eps: &[f64]) -> Vec<f64> {
    x.iter().zip(eps).map(|(a, b)| alpha * a + sigma * b).collect()
}

/// Forward noising `z_t = α_t·x + σ_t·ε`.
pub fn add_noise(x: &[f64], t: usize, eps: &[f64], sched: &NoiseSchedule) -> Result<Vec<f64>, LoraError> {
    if x.len() != eps.len() {
        return Err(LoraError::Dimension(format!("image has {} entries, noise {}", x.len(), eps.len())));
    }
    let (alpha, sigma) = sched.at(t)?;
    Ok(mix(alpha, x, sigma, eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_process_arithmetic() {
        let s = NoiseSchedule { alphas: vec![1.0, 0.8, 0.0], sigmas: vec![0.0, 0.6, 1.0] };
        assert_eq!(add_noise(&[1.0, 2.0], 1, &[5.0, 5.0], &s).unwrap(), vec![1.0, 2.0]);
        assert_eq!(add_noise(&[1.0, 0.0], 2, &[0.0, 1.0], &s).unwrap(), vec![0.8, 0.6]);
        assert_eq!(add_noise(&[0.0, 0.0], 3, &[0.3, -0.2], &s).unwrap(), vec![0.3, -0.2]);
        assert!(matches!(add_noise(&[0.0], 4, &[0.0], &s), Err(LoraError::Timestep { t: 4, max: 3 })));
        assert!(matches!(add_noise(&[0.0], 0, &[0.0], &s), Err(LoraError::Timestep { .. })));
        assert!(add_noise(&[0.0], 1, &[0.0, 1.0], &s).is_err());
    }

    #[test]
    fn default_schedule_is_monotone() {
        let s = NoiseSchedule::default();
        assert_eq!(s.steps(), 10);
        assert_eq!(s.at(1).unwrap(), (1.0 - 1.0 / 11.0, 1.0 / 11.0));
        assert!(NoiseSchedule::new(vec![0.5, 0.6], vec![0.1, 0.2]).is_err());
        assert!(NoiseSchedule::new(vec![], vec![]).is_err());
    }
}
