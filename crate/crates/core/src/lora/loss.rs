use serde::{Deserialize, Serialize};

use super::noise::mix;
use super::{AffineDenoiser, Denoiser, LoraError, Matrix, NoiseSchedule};

/// A style image and a regularization image sharing one description.
/// Fields are public so degenerate pairs can be built for analysis;
/// [`TrainingPair::new`] enforces the training invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub x_style: Vec<f64>,
    pub x_reg: Vec<f64>,
    pub c_style: Vec<f64>,
    pub c_reg: Vec<f64>,
}

impl TrainingPair {
    pub fn new(x_style: Vec<f64>, x_reg: Vec<f64>, c_style: Vec<f64>, c_reg: Vec<f64>) -> Result<Self, LoraError> {
        if x_style.len() != x_reg.len() {
            return Err(LoraError::Dimension(format!("images of {} and {} entries", x_style.len(), x_reg.len())));
        }
        if c_style.len() != c_reg.len() {
            return Err(LoraError::Dimension(format!("conditions of {} and {} entries", c_style.len(), c_reg.len())));
        }
        if c_style == c_reg {
            return Err(LoraError::IdenticalConditions);
        }
        if x_style.iter().chain(&x_reg).chain(&c_style).chain(&c_reg).any(|v| !v.is_finite()) {
            return Err(LoraError::NonFinite);
        }
        Ok(Self { x_style, x_reg, c_style, c_reg })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub w_t: f64,
    pub w_t_prime: f64,
}

impl LossWeights {
    pub fn new(lambda1: f64, lambda2: f64, w_t: f64, w_t_prime: f64) -> Result<Self, LoraError> {
        let lw = Self { lambda1, lambda2, w_t, w_t_prime };
        lw.validate()?;
        Ok(lw)
    }

    pub fn validate(&self) -> Result<(), LoraError> {
        if [self.lambda1, self.lambda2, self.w_t, self.w_t_prime].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(LoraError::Config(format!("loss weights must be finite and >= 0: {self:?}")));
        }
        Ok(())
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda1: 0.5, lambda2: 0.5, w_t: 0.5, w_t_prime: 0.5 }
    }
}

/// One Monte-Carlo sample of the training objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draws {
    /// Noise shared by both reconstruction terms.
    pub eps: Vec<f64>,
    pub t: usize,
    /// Re-noising draw shared by both consistency branches.
    pub eps_prime: Vec<f64>,
    pub t_prime: usize,
    /// Latent both consistency branches generate from.
    pub z_gen: Vec<f64>,
}

/// Whether the consistency gradient flows into the generated images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientFlow {
    #[default]
    ThroughGeneration,
    /// Generated images are treated as constants.
    Detached,
}

fn check_len(what: &str, v: &[f64], want: usize) -> Result<(), LoraError> {
    if v.len() != want {
        return Err(LoraError::Dimension(format!("{what} has {} entries, expected {want}", v.len())));
    }
    Ok(())
}

fn check_pair(den: &dyn Denoiser, pair: &TrainingPair) -> Result<(), LoraError> {
    let (d, k) = (den.image_dim(), den.cond_dim());
    check_len("x_style", &pair.x_style, d)?;
    check_len("x_reg", &pair.x_reg, d)?;
    check_len("c_style", &pair.c_style, k)?;
    check_len("c_reg", &pair.c_reg, k)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `λ₁‖x̂(α_t x_s + σ_t ε, c_s) − x_s‖² + λ₂‖x̂(α_t x_r + σ_t ε, c_r) − x_r‖²`.
pub fn reconstruction_loss(
    den: &dyn Denoiser,
    pair: &TrainingPair,
    eps: &[f64],
    t: usize,
    sched: &NoiseSchedule,
    lw: &LossWeights,
) -> Result<f64, LoraError> {
    check_pair(den, pair)?;
    check_len("eps", eps, den.image_dim())?;
    let (alpha, sigma) = sched.at(t)?;
    let term = |x: &[f64], c: &[f64]| sq_dist(&den.evaluate(&mix(alpha, x, sigma, eps), c), x);
    Ok(lw.lambda1 * term(&pair.x_style, &pair.c_style) + lw.lambda2 * term(&pair.x_reg, &pair.c_reg))
}

struct ConsistencyTrace {
    u_style: Vec<f64>,
    u_reg: Vec<f64>,
    y_style: Vec<f64>,
    y_reg: Vec<f64>,
}

fn consistency_trace(
    den: &dyn Denoiser,
    pair: &TrainingPair,
    z_gen: &[f64],
    eps_prime: &[f64],
    t_prime: usize,
    sched: &NoiseSchedule,
) -> Result<ConsistencyTrace, LoraError> {
    check_pair(den, pair)?;
    check_len("z_gen", z_gen, den.image_dim())?;
    check_len("eps_prime", eps_prime, den.image_dim())?;
    let (alpha, sigma) = sched.at(t_prime)?;
    let branch = |c: &[f64]| {
        let generated = den.evaluate(z_gen, c);
        let u = mix(alpha, &generated, sigma, eps_prime);
        let y = den.evaluate(&u, c);
        (u, y)
    };
    let (u_style, y_style) = branch(&pair.c_style);
    let (u_reg, y_reg) = branch(&pair.c_reg);
    Ok(ConsistencyTrace { u_style, u_reg, y_style, y_reg })
}

/// Generates from `z_gen` under each condition, re-noises both with the
/// shared `(ε′, t′)` and compares the re-denoised outputs.
pub fn context_consistency_loss(
    den: &dyn Denoiser,
    pair: &TrainingPair,
    z_gen: &[f64],
    eps_prime: &[f64],
    t_prime: usize,
    sched: &NoiseSchedule,
) -> Result<f64, LoraError> {
    let tr = consistency_trace(den, pair, z_gen, eps_prime, t_prime, sched)?;
    Ok(sq_dist(&tr.y_style, &tr.y_reg))
}

/// `w_t · L_rec + w_t′ · L_con` for one set of draws.
pub fn total_loss(
    den: &dyn Denoiser,
    pair: &TrainingPair,
    draws: &Draws,
    sched: &NoiseSchedule,
    lw: &LossWeights,
) -> Result<f64, LoraError> {
    let rec = reconstruction_loss(den, pair, &draws.eps, draws.t, sched, lw)?;
    let con = context_consistency_loss(den, pair, &draws.z_gen, &draws.eps_prime, draws.t_prime, sched)?;
    Ok(lw.w_t * rec + lw.w_t_prime * con)
}

struct AffineGrad {
    p: Matrix,
    q: Matrix,
    b: Vec<f64>,
}

impl AffineGrad {
    fn new(m: &AffineDenoiser) -> Self {
        Self { p: Matrix::zeros(m.p.rows(), m.p.cols()), q: Matrix::zeros(m.q.rows(), m.q.cols()), b: vec![0.0; m.b.len()] }
    }

    /// Accumulates the parameter gradient of `y = P z + Q c + b` given `∂L/∂y`.
    fn backprop(&mut self, g_y: &[f64], z: &[f64], c: &[f64]) {
        self.p.add_outer(g_y, z, 1.0);
        self.q.add_outer(g_y, c, 1.0);
        for (o, g) in self.b.iter_mut().zip(g_y) {
            *o += g;
        }
    }

    fn into_theta(self) -> Vec<f64> {
        let mut t = self.p.data().to_vec();
        t.extend_from_slice(self.q.data());
        t.extend(self.b);
        t
    }
}

/// Exact gradient of [`total_loss`] with respect to θ for fixed draws.
pub fn loss_gradient(
    den: &dyn Denoiser,
    pair: &TrainingPair,
    draws: &Draws,
    sched: &NoiseSchedule,
    lw: &LossWeights,
    flow: GradientFlow,
) -> Result<Vec<f64>, LoraError> {
    let m = den.as_affine().ok_or(LoraError::UnsupportedDenoiser)?;
    check_pair(den, pair)?;
    check_len("eps", &draws.eps, den.image_dim())?;
    let mut g = AffineGrad::new(m);

    let (alpha, sigma) = sched.at(draws.t)?;
    for (lambda, x, c) in [(lw.lambda1, &pair.x_style, &pair.c_style), (lw.lambda2, &pair.x_reg, &pair.c_reg)] {
        let z = mix(alpha, x, sigma, &draws.eps);
        let scale = 2.0 * lw.w_t * lambda;
        let g_y: Vec<f64> = m.evaluate(&z, c).iter().zip(x.iter()).map(|(y, x)| scale * (y - x)).collect();
        g.backprop(&g_y, &z, c);
    }

    let tr = consistency_trace(den, pair, &draws.z_gen, &draws.eps_prime, draws.t_prime, sched)?;
    let (alpha_p, _) = sched.at(draws.t_prime)?;
    let pt = m.p.transpose();
    for (sign, u, c) in [(1.0, &tr.u_style, &pair.c_style), (-1.0, &tr.u_reg, &pair.c_reg)] {
        let g_y: Vec<f64> =
            tr.y_style.iter().zip(&tr.y_reg).map(|(s, r)| sign * 2.0 * lw.w_t_prime * (s - r)).collect();
        g.backprop(&g_y, u, c);
        if flow == GradientFlow::ThroughGeneration {
            let g_gen: Vec<f64> = pt.mul_vec(&g_y).iter().map(|v| alpha_p * v).collect();
            g.backprop(&g_gen, &draws.z_gen, c);
        }
    }
    Ok(g.into_theta())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> TrainingPair {
        TrainingPair::new(vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, 0.0]).unwrap()
    }

    fn draws() -> Draws {
        Draws { eps: vec![0.3, -0.2], t: 2, eps_prime: vec![-0.1, 0.4], t_prime: 5, z_gen: vec![0.7, 0.1] }
    }

    /// Returns the training image matching the condition exactly.
    struct Oracle(TrainingPair);

    impl Denoiser for Oracle {
        fn image_dim(&self) -> usize {
            2
        }
        fn cond_dim(&self) -> usize {
            2
        }
        fn evaluate(&self, _z: &[f64], c: &[f64]) -> Vec<f64> {
            if c == self.0.c_style.as_slice() {
                self.0.x_style.clone()
            } else {
                self.0.x_reg.clone()
            }
        }
    }

    #[test]
    fn oracle_reconstructs_perfectly() {
        let sched = NoiseSchedule::default();
        let o = Oracle(pair());
        let lw = LossWeights::default();
        assert_eq!(reconstruction_loss(&o, &pair(), &[0.5, 0.5], 3, &sched, &lw).unwrap(), 0.0);
        assert_eq!(loss_gradient(&o, &pair(), &draws(), &sched, &lw, GradientFlow::default()), Err(LoraError::UnsupportedDenoiser));
    }

    #[test]
    fn hand_evaluated_affine_losses() {
        // P = I, Q = [[1, 0], [0, 2]], b = 0; α₂ = 9/11, σ₂ = 2/11.
        let m = AffineDenoiser::new(
            Matrix::identity(2),
            Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap(),
            vec![0.0, 0.0],
        )
        .unwrap();
        let sched = NoiseSchedule::default();
        let lw = LossWeights::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let d = draws();
        // style: z = (9/11 + 0.6/11, -0.4/11); x̂ = z + (1, 2); residual = z + (0, 2)
        let z = [9.6 / 11.0, -0.4 / 11.0];
        let expect = z[0] * z[0] + (z[1] + 2.0) * (z[1] + 2.0);
        let got = reconstruction_loss(&m, &pair(), &d.eps, d.t, &sched, &lw).unwrap();
        assert!((got - expect).abs() < 1e-12);
        // Consistency: (α′P + I)QΔ with Δ = (0, 1), α′ = 6/11 → (1 + 6/11)·(0, 2).
        let con = context_consistency_loss(&m, &pair(), &d.z_gen, &d.eps_prime, d.t_prime, &sched).unwrap();
        let v = (1.0 + 6.0 / 11.0) * 2.0;
        assert!((con - v * v).abs() < 1e-12);
    }

    #[test]
    fn consistency_vanishes_without_condition_dependence() {
        let sched = NoiseSchedule::default();
        let mut m = AffineDenoiser::random(2, 2, 0.5, 9);
        let d = draws();
        let same = TrainingPair { c_reg: pair().c_style, ..pair() };
        assert_eq!(context_consistency_loss(&m, &same, &d.z_gen, &d.eps_prime, 3, &sched).unwrap(), 0.0);
        m.q = Matrix::zeros(2, 2);
        assert_eq!(context_consistency_loss(&m, &pair(), &d.z_gen, &d.eps_prime, 3, &sched).unwrap(), 0.0);
    }

    #[test]
    fn dimension_checks() {
        let sched = NoiseSchedule::default();
        let m = AffineDenoiser::zeros(3, 2);
        let lw = LossWeights::default();
        assert!(matches!(reconstruction_loss(&m, &pair(), &[0.0; 3], 1, &sched, &lw), Err(LoraError::Dimension(_))));
        assert!(TrainingPair::new(vec![0.0], vec![0.0, 1.0], vec![1.0], vec![0.0]).is_err());
        assert_eq!(
            TrainingPair::new(vec![0.0], vec![1.0], vec![1.0], vec![1.0]),
            Err(LoraError::IdenticalConditions)
        );
        assert!(LossWeights::new(-0.1, 0.5, 0.5, 0.5).is_err());
    }
}
