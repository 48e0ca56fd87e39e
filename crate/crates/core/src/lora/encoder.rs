use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::LoraError;

/// Reserved token marking the style prompt.
pub const IDENTIFIER_TOKEN: &str = "<sks>";
pub const DEFAULT_COND_DIM: usize = 16;
const DEFAULT_SEED: u64 = 0x5eed_1ea7;
/// Components live on a 2⁻²⁴ grid so that sums of token vectors are exact,
/// which makes encoding independent of token order and keeps
/// `c_style − c_reg` bit-equal to the identifier vector.
const GRID: f64 = (1u64 << 24) as f64;

/// Toy prompt encoder: each token maps to a pseudo-random unit vector and a
/// prompt is the sum of its token vectors.
///
/// Token vector: FNV-1a (64-bit) over the seed's little-endian bytes followed
/// by the token's UTF-8 bytes seeds a ChaCha8 stream; `dim` standard normal
/// draws are normalized and rounded to the 2⁻²⁴ grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextEncoder {
    pub dim: usize,
    pub seed: u64,
}

impl Default for TextEncoder {
    fn default() -> Self {
        Self { dim: DEFAULT_COND_DIM, seed: DEFAULT_SEED }
    }
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    bytes
        .into_iter()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

impl TextEncoder {
    pub fn token_vector(&self, token: &str) -> Vec<f64> {
        let key = fnv1a(self.seed.to_le_bytes().into_iter().chain(token.bytes()));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let raw: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        raw.iter().map(|v| (v / norm * GRID).round() / GRID).collect()
    }

    pub fn identifier_vector(&self) -> Vec<f64> {
        self.token_vector(IDENTIFIER_TOKEN)
    }

    /// Sum of token vectors, plus the identifier vector when requested.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S], has_identifier: bool) -> Result<Vec<f64>, LoraError> {
        if tokens.is_empty() {
            return Err(LoraError::EmptyPrompt);
        }
        let mut out = vec![0.0; self.dim];
        let id = has_identifier.then_some(IDENTIFIER_TOKEN);
        for tok in tokens.iter().map(AsRef::as_ref).chain(id) {
            for (o, v) in out.iter_mut().zip(self.token_vector(tok)) {
                *o += v;
            }
        }
        Ok(out)
    }
}
