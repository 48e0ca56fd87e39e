use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{LoraError, Matrix};

/// Maps a noisy latent and a condition to a predicted clean image.
/// Evaluation must be deterministic.
pub trait Denoiser {
    fn image_dim(&self) -> usize;
    fn cond_dim(&self) -> usize;
    fn evaluate(&self, z: &[f64], c: &[f64]) -> Vec<f64>;
    /// Analytic gradients are implemented for the affine model only.
    fn as_affine(&self) -> Option<&AffineDenoiser> {
        None
    }
}

/// `x̂ = P·z + Q·c + b`; θ is P, Q, b concatenated, each row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineDenoiser {
    pub p: Matrix,
    pub q: Matrix,
    pub b: Vec<f64>,
}

impl AffineDenoiser {
    pub fn new(p: Matrix, q: Matrix, b: Vec<f64>) -> Result<Self, LoraError> {
        let d = p.rows();
        if p.cols() != d || q.rows() != d || b.len() != d {
            return Err(LoraError::Dimension(format!(
                "P {}x{}, Q {}x{}, b {} are inconsistent",
                p.rows(),
                p.cols(),
                q.rows(),
                q.cols(),
                b.len()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(LoraError::NonFinite);
        }
        Ok(Self { p, q, b })
    }

    pub fn zeros(image_dim: usize, cond_dim: usize) -> Self {
        Self { p: Matrix::zeros(image_dim, image_dim), q: Matrix::zeros(image_dim, cond_dim), b: vec![0.0; image_dim] }
    }

    /// Entries drawn from N(0, scale²).
    pub fn random(image_dim: usize, cond_dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, scale.abs()).expect("finite scale");
        let mut m = Self::zeros(image_dim, cond_dim);
        let n = m.num_params();
        let theta: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        m.set_theta(&theta).expect("length matches");
        m
    }

    pub fn num_params(&self) -> usize {
        let d = self.p.rows();
        d * d + d * self.q.cols() + d
    }

    pub fn theta(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.num_params());
        t.extend_from_slice(self.p.data());
        t.extend_from_slice(self.q.data());
        t.extend_from_slice(&self.b);
        t
    }

    pub fn set_theta(&mut self, theta: &[f64]) -> Result<(), LoraError> {
        if theta.len() != self.num_params() {
            return Err(LoraError::Dimension(format!(
                "theta has {} entries, model has {}",
                theta.len(),
                self.num_params()
            )));
        }
        let (p, rest) = theta.split_at(self.p.data().len());
        let (q, b) = rest.split_at(self.q.data().len());
        self.p.data_mut().copy_from_slice(p);
        self.q.data_mut().copy_from_slice(q);
        self.b.copy_from_slice(b);
        Ok(())
    }
}

impl Denoiser for AffineDenoiser {
    fn image_dim(&self) -> usize {
        self.p.rows()
    }

    fn cond_dim(&self) -> usize {
        self.q.cols()
    }

    fn evaluate(&self, z: &[f64], c: &[f64]) -> Vec<f64> {
        let pz = self.p.mul_vec(z);
        let qc = self.q.mul_vec(c);
        pz.iter().zip(&qc).zip(&self.b).map(|((a, b), c)| a + b + c).collect()
    }

    fn as_affine(&self) -> Option<&AffineDenoiser> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_round_trip() {
        let mut m = AffineDenoiser::random(3, 2, 1.0, 4);
        let t = m.theta();
        assert_eq!(t.len(), 9 + 6 + 3);
        let mut other = AffineDenoiser::zeros(3, 2);
        other.set_theta(&t).unwrap();
        assert_eq!(other, m);
        assert!(m.set_theta(&t[1..]).is_err());
    }

    #[test]
    fn affine_evaluation() {
        let p = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap();
        let q = Matrix::from_rows(&[&[1.0], &[-1.0]]).unwrap();
        let m = AffineDenoiser::new(p, q, vec![0.5, 0.0]).unwrap();
        assert_eq!(m.evaluate(&[1.0, 1.0], &[3.0]), vec![4.5, -1.0]);
    }
}
