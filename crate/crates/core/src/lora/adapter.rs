use serde::{Deserialize, Serialize};

use super::{LoraError, Matrix};

/// Low-rank factor pair: the update is `B · A` with `B` n×r and `A` r×m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AdapterRepr")]
pub struct LoraAdapter {
    b: Matrix,
    a: Matrix,
}

#[derive(Deserialize)]
struct AdapterRepr {
    b: Matrix,
    a: Matrix,
}

impl TryFrom<AdapterRepr> for LoraAdapter {
    type Error = LoraError;
    fn try_from(r: AdapterRepr) -> Result<Self, LoraError> {
        LoraAdapter::new(r.b, r.a)
    }
}

impl LoraAdapter {
    pub fn new(b: Matrix, a: Matrix) -> Result<Self, LoraError> {
        if b.cols() != a.rows() {
            return Err(LoraError::Shape(format!(
                "B is {}x{} but A is {}x{}",
                b.rows(),
                b.cols(),
                a.rows(),
                a.cols()
            )));
        }
        let rank = b.cols();
        if rank < 1 || rank >= b.rows().min(a.cols()) {
            return Err(LoraError::Rank { rank, rows: b.rows(), cols: a.cols() });
        }
        Ok(Self { b, a })
    }

    pub fn rank(&self) -> usize {
        self.b.cols()
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    /// Output shape `(n, m)` of the update.
    pub fn shape(&self) -> (usize, usize) {
        (self.b.rows(), self.a.cols())
    }

    pub fn delta(&self) -> Matrix {
        self.b.matmul(&self.a).expect("factor shapes checked at construction")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedAdapter {
    pub adapter: LoraAdapter,
    pub weight: f64,
}

/// Adapters to merge, each with its balancing weight.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MergeSpec(pub Vec<WeightedAdapter>);

impl MergeSpec {
    pub fn push(&mut self, adapter: LoraAdapter, weight: f64) {
        self.0.push(WeightedAdapter { adapter, weight });
    }
}

/// `W' = W + Σ wᵢ · Bᵢ · Aᵢ`. `base` is left untouched.
pub fn merge_lora(base: &Matrix, spec: &MergeSpec) -> Result<Matrix, LoraError> {
    let mut merged = base.clone();
    for (index, wa) in spec.0.iter().enumerate() {
        let (n, m) = wa.adapter.shape();
        if n != base.rows() || m != base.cols() {
            return Err(LoraError::AdapterShape {
                index,
                delta_rows: n,
                delta_cols: m,
                rows: base.rows(),
                cols: base.cols(),
            });
        }
        merged.add_scaled(&wa.adapter.delta(), wa.weight)?;
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn hand_computed_merge() {
        // [[1],[2]] · [[3,4]] = [[3,4],[6,8]]
        let base = Matrix::zeros(2, 2);
        let ad = LoraAdapter::new(m(&[&[1.0], &[2.0]]), m(&[&[3.0, 4.0]])).unwrap();
        let mut spec = MergeSpec::default();
        spec.push(ad, 1.0);
        assert_eq!(merge_lora(&base, &spec).unwrap(), m(&[&[3.0, 4.0], &[6.0, 8.0]]));
        assert_eq!(base, Matrix::zeros(2, 2));
    }

    #[test]
    fn zero_weights_are_identity() {
        let base = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0]]);
        let ad = LoraAdapter::new(m(&[&[1.0], &[1.0], &[1.0]]), m(&[&[2.0, 2.0, 2.0]])).unwrap();
        let mut spec = MergeSpec::default();
        spec.push(ad.clone(), 0.0);
        spec.push(ad, 0.0);
        assert_eq!(merge_lora(&base, &spec).unwrap(), base);
    }

    #[test]
    fn shape_mismatch_names_adapter() {
        let base = Matrix::zeros(3, 3);
        let ok = LoraAdapter::new(Matrix::zeros(3, 1), Matrix::zeros(1, 3)).unwrap();
        let bad = LoraAdapter::new(Matrix::zeros(4, 1), Matrix::zeros(1, 3)).unwrap();
        let mut spec = MergeSpec::default();
        spec.push(ok, 0.5);
        spec.push(bad, 0.5);
        assert!(matches!(merge_lora(&base, &spec), Err(LoraError::AdapterShape { index: 1, .. })));
    }

    #[test]
    fn rank_must_be_low() {
        assert!(matches!(
            LoraAdapter::new(Matrix::zeros(2, 2), Matrix::zeros(2, 2)),
            Err(LoraError::Rank { rank: 2, .. })
        ));
        assert!(LoraAdapter::new(Matrix::zeros(2, 1), Matrix::zeros(2, 3)).is_err());
    }
}
