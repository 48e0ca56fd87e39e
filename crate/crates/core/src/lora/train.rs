use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    context_consistency_loss, loss_gradient, reconstruction_loss, AffineDenoiser, Denoiser, Draws, GradientFlow,
    LoraError, LossWeights, NoiseSchedule, TextEncoder, TrainingPair,
};

/// Loss above which training is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Weights applied over the inclusive 1-based iteration range `first..=last`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub first: usize,
    pub last: usize,
    pub weights: LossWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Contiguous phases starting at iteration 1.
    pub phases: Vec<Phase>,
    pub step_size: f64,
    pub seed: u64,
    /// Draws averaged per gradient step.
    pub batch: usize,
    pub flow: GradientFlow,
    /// Fixed draws per pair used to evaluate the recorded loss curve.
    pub eval_draws: usize,
    /// θ is snapshotted every this many iterations (and at 0 and the end).
    pub snapshot_every: usize,
}

impl TrainConfig {
    /// 500 iterations at w = (0.5, 0.5), then 500 at (0.8, 0.2); λ₁ = λ₂ = 0.5.
    pub fn two_phase(step_size: f64, seed: u64) -> Self {
        Self {
            phases: vec![
                Phase { first: 1, last: 500, weights: LossWeights { lambda1: 0.5, lambda2: 0.5, w_t: 0.5, w_t_prime: 0.5 } },
                Phase { first: 501, last: 1000, weights: LossWeights { lambda1: 0.5, lambda2: 0.5, w_t: 0.8, w_t_prime: 0.2 } },
            ],
            step_size,
            seed,
            batch: 1,
            flow: GradientFlow::ThroughGeneration,
            eval_draws: 4,
            snapshot_every: 100,
        }
    }

    pub fn iterations(&self) -> usize {
        self.phases.last().map_or(0, |p| p.last)
    }

    pub fn weights_at(&self, iteration: usize) -> Option<LossWeights> {
        self.phases.iter().find(|p| (p.first..=p.last).contains(&iteration)).map(|p| p.weights)
    }

    pub fn validate(&self) -> Result<(), LoraError> {
        let mut next = 1;
        for p in &self.phases {
            if p.first != next || p.last < p.first {
                return Err(LoraError::Config(format!(
                    "phase {}..={} does not continue from iteration {next}",
                    p.first, p.last
                )));
            }
            p.weights.validate()?;
            next = p.last + 1;
        }
        if self.phases.is_empty() {
            return Err(LoraError::Config("no phases".into()));
        }
        if !(self.step_size.is_finite() && self.step_size >= 0.0) {
            return Err(LoraError::Config(format!("step size {} must be finite and >= 0", self.step_size)));
        }
        if self.batch == 0 || self.eval_draws == 0 || self.snapshot_every == 0 {
            return Err(LoraError::Config("batch, eval_draws and snapshot_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Loss curve entry: evaluation-set losses before the iteration's update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub iteration: usize,
    pub weights: LossWeights,
    pub reconstruction: f64,
    pub consistency: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRun {
    pub model: AffineDenoiser,
    /// `(iteration, θ)` after that many updates.
    pub snapshots: Vec<(usize, Vec<f64>)>,
    pub records: Vec<LossRecord>,
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn sample_draws(rng: &mut ChaCha8Rng, dim: usize, steps: usize) -> Draws {
    let t = rng.random_range(1..=steps);
    let t_prime = rng.random_range(1..=steps);
    let eps = normal_vec(rng, dim);
    let eps_prime = normal_vec(rng, dim);
    let z_gen = normal_vec(rng, dim);
    Draws { eps, t, eps_prime, t_prime, z_gen }
}

fn evaluate(
    model: &AffineDenoiser,
    eval: &[(usize, Draws)],
    dataset: &[TrainingPair],
    sched: &NoiseSchedule,
    lw: &LossWeights,
) -> Result<(f64, f64), LoraError> {
    let (mut rec, mut con) = (0.0, 0.0);
    for (i, d) in eval {
        rec += reconstruction_loss(model, &dataset[*i], &d.eps, d.t, sched, lw)?;
        con += context_consistency_loss(model, &dataset[*i], &d.z_gen, &d.eps_prime, d.t_prime, sched)?;
    }
    let n = eval.len() as f64;
    Ok((rec / n, con / n))
}

/// Seeded stochastic gradient descent on the weighted objective.
///
/// Sampling order per iteration: for each batch slot, the pair index, then
/// `t`, `t′`, `ε`, `ε′` and `z_gen`. The evaluation draws are sampled first.
pub fn fine_tune(
    init: &AffineDenoiser,
    dataset: &[TrainingPair],
    sched: &NoiseSchedule,
    cfg: &TrainConfig,
) -> Result<TrainingRun, LoraError> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(LoraError::Config("empty dataset".into()));
    }
    let dim = init.image_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let eval: Vec<(usize, Draws)> = (0..dataset.len())
        .flat_map(|i| std::iter::repeat_n(i, cfg.eval_draws))
        .map(|i| (i, sample_draws(&mut rng, dim, sched.steps())))
        .collect();

    let mut model = init.clone();
    let mut theta = model.theta();
    let mut records = Vec::with_capacity(cfg.iterations());
    let mut snapshots = vec![(0, theta.clone())];
    for iteration in 1..=cfg.iterations() {
        let lw = cfg.weights_at(iteration).expect("phases validated");
        let (reconstruction, consistency) = evaluate(&model, &eval, dataset, sched, &lw)?;
        let total = lw.w_t * reconstruction + lw.w_t_prime * consistency;
        if !(total.is_finite() && total <= DIVERGENCE_LIMIT) {
            return Err(LoraError::Diverged { iteration, loss: total });
        }
        records.push(LossRecord { iteration, weights: lw, reconstruction, consistency, total });

        let mut grad = vec![0.0; theta.len()];
        for _ in 0..cfg.batch {
            let pair = &dataset[rng.random_range(0..dataset.len())];
            let draws = sample_draws(&mut rng, dim, sched.steps());
            for (g, v) in grad.iter_mut().zip(loss_gradient(&model, pair, &draws, sched, &lw, cfg.flow)?) {
                *g += v;
            }
        }
        let scale = cfg.step_size / cfg.batch as f64;
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= scale * g;
        }
        model.set_theta(&theta)?;
        if iteration % cfg.snapshot_every == 0 || iteration == cfg.iterations() {
            snapshots.push((iteration, theta.clone()));
        }
    }
    Ok(TrainingRun { model, snapshots, records })
}

/// CSV with header `iteration,L_rec,L_con,L_tot`.
pub fn loss_curve_csv(records: &[LossRecord]) -> String {
    let mut out = String::from("iteration,L_rec,L_con,L_tot\n");
    for r in records {
        let _ = writeln!(out, "{},{},{},{}", r.iteration, r.reconstruction, r.consistency, r.total);
    }
    out
}

/// Mean total loss over the `window` records ending at index `end` (exclusive).
pub fn smoothed_total(records: &[LossRecord], end: usize, window: usize) -> f64 {
    let start = end.saturating_sub(window);
    let slice = &records[start..end];
    slice.iter().map(|r| r.total).sum::<f64>() / slice.len().max(1) as f64
}

const VOCAB: [&str; 12] =
    ["portrait", "face", "woman", "man", "smiling", "glasses", "hat", "young", "old", "profile", "beard", "hair"];

/// Toy style/regularization pairs on a `side × side` grid: the regularization
/// image is a smooth blob "photo", the style image its thresholded gradient
/// magnitude (a line drawing of the same subject).
pub fn synthetic_dataset(count: usize, side: usize, encoder: &TextEncoder, seed: u64) -> Result<Vec<TrainingPair>, LoraError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let blobs: Vec<(f64, f64, f64, f64)> = (0..3)
            .map(|_| {
                let cx = rng.random_range(0.2..0.8) * side as f64;
                let cy = rng.random_range(0.2..0.8) * side as f64;
                let r = rng.random_range(0.15..0.35) * side as f64;
                let a = rng.random_range(0.4..1.0);
                (cx, cy, r, a)
            })
            .collect();
        let photo: Vec<f64> = (0..side * side)
            .map(|i| {
                let (x, y) = ((i % side) as f64, (i / side) as f64);
                let v: f64 =
                    blobs.iter().map(|(cx, cy, r, a)| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (r * r)).exp()).sum();
                v.min(1.0)
            })
            .collect();
        let at = |x: usize, y: usize| photo[y.min(side - 1) * side + x.min(side - 1)];
        let grads: Vec<f64> = (0..side * side)
            .map(|i| {
                let (x, y) = (i % side, i / side);
                let gx = at(x + 1, y) - at(x.saturating_sub(1), y);
                let gy = at(x, y + 1) - at(x, y.saturating_sub(1));
                gx.hypot(gy)
            })
            .collect();
        let cut = grads.iter().cloned().fold(0.0, f64::max) * 0.5;
        let drawing: Vec<f64> = grads.iter().map(|g| if *g >= cut && cut > 0.0 { 1.0 } else { 0.0 }).collect();

        let mut tokens: Vec<&str> = Vec::new();
        while tokens.len() < 3 {
            let t = VOCAB[rng.random_range(0..VOCAB.len())];
            if !tokens.contains(&t) {
                tokens.push(t);
            }
        }
        let c_reg = encoder.encode(&tokens, false)?;
        let c_style = encoder.encode(&tokens, true)?;
        out.push(TrainingPair::new(drawing, photo, c_style, c_reg)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (AffineDenoiser, Vec<TrainingPair>, NoiseSchedule) {
        let enc = TextEncoder::default();
        let data = synthetic_dataset(1, 8, &enc, 3).unwrap();
        (AffineDenoiser::random(64, enc.dim, 0.05, 1), data, NoiseSchedule::default())
    }

    #[test]
    fn zero_step_keeps_theta_and_flat_curve() {
        let (init, data, sched) = setup();
        let mut cfg = TrainConfig::two_phase(0.0, 7);
        cfg.phases.truncate(1);
        cfg.phases[0].last = 50;
        let run = fine_tune(&init, &data, &sched, &cfg).unwrap();
        assert_eq!(run.model, init);
        assert!(run.records.iter().all(|r| r.total == run.records[0].total));
    }

    #[test]
    fn phase_validation() {
        let mut cfg = TrainConfig::two_phase(0.01, 0);
        assert_eq!(cfg.iterations(), 1000);
        assert_eq!(cfg.weights_at(500).unwrap().w_t, 0.5);
        assert_eq!(cfg.weights_at(501).unwrap().w_t, 0.8);
        cfg.phases[1].first = 502;
        assert!(cfg.validate().is_err());
        let (init, _, sched) = setup();
        assert!(fine_tune(&init, &[], &sched, &TrainConfig::two_phase(0.01, 0)).is_err());
    }

    #[test]
    fn huge_step_diverges() {
        let (init, data, sched) = setup();
        let err = fine_tune(&init, &data, &sched, &TrainConfig::two_phase(50.0, 7)).unwrap_err();
        assert!(matches!(err, LoraError::Diverged { .. }), "{err:?}");
    }

    #[test]
    fn csv_layout() {
        let r = LossRecord { iteration: 1, weights: LossWeights::default(), reconstruction: 1.5, consistency: 0.25, total: 0.875 };
        assert_eq!(loss_curve_csv(&[r]), "iteration,L_rec,L_con,L_tot\n1,1.5,0.25,0.875\n");
    }
}
