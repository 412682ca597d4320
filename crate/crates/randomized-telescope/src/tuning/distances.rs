use crate::error::{Error, Result};
use crate::tuning::SubsequenceSelection;

/// Exponential moving average of squared distances between gradients at
/// different depths.
///
/// Entry `(i, j)` estimates `E‖Ḡᵢ − Ḡⱼ‖²`, where index 0 stands for the zero
/// vector, so row 0 tracks squared gradient norms. The table is symmetric
/// with a zero diagonal. Entries are undefined until the first `update`;
/// that first observation is stored directly rather than averaged against
/// the zero initialization, which would otherwise bias every estimate low
/// for the first few updates.
#[derive(Debug, Clone)]
pub struct SquaredDistanceTable {
    values: Vec<Vec<f64>>,
    seen: Vec<Vec<bool>>,
    decay: f64,
    horizon: usize,
}

impl SquaredDistanceTable {
    /// Creates an empty table for depths `1..=horizon` with EMA weight
    /// `decay` on the previous value (so `decay = 0.9` means new observations
    /// move an entry by a tenth of the gap).
    pub fn new(horizon: usize, decay: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter(
                "distance table needs at least one depth".into(),
            ));
        }
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ema decay must lie in (0, 1), got {decay}"
            )));
        }
        let n = horizon + 1;
        Ok(Self {
            values: vec![vec![0.0; n]; n],
            seen: vec![vec![false; n]; n],
            decay,
            horizon,
        })
    }

    /// Builds a table directly from a known `(horizon+1)×(horizon+1)` matrix
    /// of squared distances, e.g. exact values for a deterministic sequence.
    pub fn from_matrix(values: Vec<Vec<f64>>, decay: f64) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidParameter(
                "distance matrix needs at least two rows".into(),
            ));
        }
        let mut table = Self::new(n - 1, decay)?;
        for (i, row) in values.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "distance matrix must be square, row {i} has {} of {n} entries",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "squared distance ({i},{j}) must be finite and nonnegative, got {v}"
                    )));
                }
                if i == j && v != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "diagonal entry ({i},{i}) must be zero, got {v}"
                    )));
                }
                if values[j][i] != v {
                    return Err(Error::ShapeMismatch(format!(
                        "distance matrix must be symmetric, mismatch at ({i},{j})"
                    )));
                }
            }
        }
        table.values = values;
        for row in &mut table.seen {
            row.fill(true);
        }
        Ok(table)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    /// Current estimate of `E‖Ḡᵢ − Ḡⱼ‖²`. Zero for entries never updated.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        assert!(
            i <= self.horizon && j <= self.horizon,
            "distance index ({i},{j}) out of range for horizon {}",
            self.horizon
        );
        self.values[i][j]
    }

    /// Folds one joint observation of all depths into the averages.
    ///
    /// `gradients[i]` is `Ḡ_{i+1}(θ)`; all must share one dimension and be
    /// evaluated on the same stochastic sample, otherwise the pairwise
    /// distances measure noise rather than truncation error.
    pub fn update(&mut self, gradients: &[Vec<f64>]) -> Result<()> {
        if gradients.len() != self.horizon {
            return Err(Error::ShapeMismatch(format!(
                "expected {} gradients, got {}",
                self.horizon,
                gradients.len()
            )));
        }
        let dim = gradients[0].len();
        for (idx, g) in gradients.iter().enumerate() {
            if g.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "gradient {} has dimension {}, expected {dim}",
                    idx + 1,
                    g.len()
                )));
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "gradient {} has a non-finite entry",
                    idx + 1
                )));
            }
        }
        let zero = vec![0.0; dim];
        let grad = |i: usize| -> &[f64] {
            if i == 0 {
                &zero
            } else {
                &gradients[i - 1]
            }
        };
        for i in 0..=self.horizon {
            for j in (i + 1)..=self.horizon {
                let d: f64 = grad(i)
                    .iter()
                    .zip(grad(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let v = if self.seen[i][j] {
                    self.decay * self.values[i][j] + (1.0 - self.decay) * d
                } else {
                    d
                };
                self.values[i][j] = v;
                self.values[j][i] = v;
                self.seen[i][j] = true;
                self.seen[j][i] = true;
            }
        }
        Ok(())
    }

    /// Squared-norm estimates for the telescope differences along a
    /// subsequence: entry `k` is `E‖Ḡ_{S[k]} − Ḡ_{S[k−1]}‖²` with `S[−1] = 0`.
    pub fn delta_norms(&self, selection: &SubsequenceSelection) -> Vec<f64> {
        assert_eq!(
            selection.base_horizon(),
            self.horizon,
            "selection horizon does not match table horizon"
        );
        let mut prev = 0;
        selection
            .indices()
            .iter()
            .map(|&i| {
                let d = self.value(prev, i);
                prev = i;
                d
            })
            .collect()
    }
}
