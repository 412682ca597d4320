use crate::error::{Error, Result};
use crate::telescope::{CostModel, WeightKind};
use crate::tuning::{sequence_cost, SquaredDistanceTable};

/// A strictly increasing subset `S` of the depths `1..=H̄`, always ending at
/// `H̄` so the telescoped sum still targets the full-depth gradient.
///
/// Telescoping over a subsequence skips depths whose gradients barely differ:
/// positions `k` of `S` index differences `Ḡ_{S[k]} − Ḡ_{S[k−1]}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsequenceSelection {
    indices: Vec<usize>,
    base_horizon: usize,
}

impl SubsequenceSelection {
    pub fn new(indices: Vec<usize>, base_horizon: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter(
                "subsequence must be nonempty".into(),
            ));
        }
        if indices[0] == 0 {
            return Err(Error::InvalidParameter(
                "subsequence indices are 1-based".into(),
            ));
        }
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "subsequence indices must be strictly increasing".into(),
            ));
        }
        if *indices.last().unwrap() != base_horizon {
            return Err(Error::InvalidParameter(format!(
                "subsequence must end at the base horizon {base_horizon}, ends at {}",
                indices.last().unwrap()
            )));
        }
        Ok(Self {
            indices,
            base_horizon,
        })
    }

    /// Every depth: `[1, 2, ..., H̄]`.
    pub fn full(base_horizon: usize) -> Self {
        assert!(base_horizon >= 1);
        Self {
            indices: (1..=base_horizon).collect(),
            base_horizon,
        }
    }

    /// Just `[H̄]`: the plain full-depth estimator with no telescoping.
    pub fn last_only(base_horizon: usize) -> Self {
        assert!(base_horizon >= 1);
        Self {
            indices: vec![base_horizon],
            base_horizon,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Number of selected depths; never zero.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn base_horizon(&self) -> usize {
        self.base_horizon
    }
}

/// Picks a subsequence with low predicted `E[compute] · E‖Ĝ‖²` by local
/// search, evaluating candidates with [`sequence_cost`].
///
/// Two hill-climbing passes run independently: one grows from `[H̄]` by
/// inserting depths, one shrinks from `[1..H̄]` by deleting them. Each pass
/// scans candidate depths in increasing order, takes the first strictly
/// improving move, and restarts its scan until no move helps. The cheaper of
/// the two finalists wins, so the plain `[H̄]` estimator is always among the
/// candidates and the search can never do worse than it in predicted cost.
pub fn greedy_subsequence_select(
    table: &SquaredDistanceTable,
    costs: &CostModel,
    kind: WeightKind,
) -> Result<SubsequenceSelection> {
    let horizon = table.horizon();
    let cost_of = |indices: &[usize]| -> Result<f64> {
        let sel = SubsequenceSelection::new(indices.to_vec(), horizon)?;
        sequence_cost(table, costs, &sel, kind)
    };

    // Growing pass.
    let mut add = vec![horizon];
    let mut add_cost = cost_of(&add)?;
    'grow: loop {
        for i in 1..horizon {
            if add.binary_search(&i).is_ok() {
                continue;
            }
            let mut candidate = add.clone();
            let pos = candidate.binary_search(&i).unwrap_err();
            candidate.insert(pos, i);
            let c = cost_of(&candidate)?;
            if c < add_cost {
                add = candidate;
                add_cost = c;
                continue 'grow;
            }
        }
        break;
    }

    // Shrinking pass.
    let mut remove: Vec<usize> = (1..=horizon).collect();
    let mut remove_cost = cost_of(&remove)?;
    'shrink: loop {
        for pos in 0..remove.len().saturating_sub(1) {
            let mut candidate = remove.clone();
            candidate.remove(pos);
            let c = cost_of(&candidate)?;
            if c < remove_cost {
                remove = candidate;
                remove_cost = c;
                continue 'shrink;
            }
        }
        break;
    }

    let winner = if remove_cost < add_cost { remove } else { add };
    SubsequenceSelection::new(winner, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_table(rng: &mut ChaCha8Rng, horizon: usize) -> SquaredDistanceTable {
        let n = horizon + 1;
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.random_range(0.0..4.0);
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        SquaredDistanceTable::from_matrix(m, 0.9).unwrap()
    }

    fn all_subsequences(horizon: usize) -> Vec<Vec<usize>> {
        // Every subset of 1..horizon, each extended with the mandatory final
        // element.
        let free = horizon - 1;
        let mut out = Vec::with_capacity(1 << free);
        for mask in 0u32..(1 << free) {
            let mut s: Vec<usize> = (1..horizon).filter(|i| mask >> (i - 1) & 1 == 1).collect();
            s.push(horizon);
            out.push(s);
        }
        out
    }

    #[test]
    fn selection_validation() {
        assert!(SubsequenceSelection::new(vec![], 3).is_err());
        assert!(SubsequenceSelection::new(vec![0, 3], 3).is_err());
        assert!(SubsequenceSelection::new(vec![2, 2, 3], 3).is_err());
        assert!(SubsequenceSelection::new(vec![3, 1], 3).is_err());
        assert!(SubsequenceSelection::new(vec![1, 2], 3).is_err());
        let s = SubsequenceSelection::new(vec![1, 3], 3).unwrap();
        assert_eq!(s.indices(), &[1, 3]);
        assert_eq!(SubsequenceSelection::full(3).indices(), &[1, 2, 3]);
        assert_eq!(SubsequenceSelection::last_only(3).indices(), &[3]);
    }

    #[test]
    fn horizon_one_returns_the_only_legal_subsequence() {
        let table = SquaredDistanceTable::from_matrix(vec![vec![0.0, 2.0], vec![2.0, 0.0]], 0.9)
            .unwrap();
        let costs = CostModel::linear(1, true);
        let sel = greedy_subsequence_select(&table, &costs, WeightKind::SingleSample).unwrap();
        assert_eq!(sel.indices(), &[1]);
    }

    #[test]
    fn redundant_later_depths_get_skipped() {
        // All depths produce the same gradient as the final one, so every
        // pairwise distance among depths is zero and only the norm row has
        // mass. Telescoping past depth 1 buys nothing; the selection should
        // cost no more than using every depth.
        let h = 5;
        let n = h + 1;
        let mut m = vec![vec![0.0; n]; n];
        for j in 1..n {
            m[0][j] = 9.0;
            m[j][0] = 9.0;
        }
        let table = SquaredDistanceTable::from_matrix(m, 0.9).unwrap();
        let costs = CostModel::doubling(h, true);
        for kind in [WeightKind::SingleSample, WeightKind::RussianRoulette] {
            let sel = greedy_subsequence_select(&table, &costs, kind).unwrap();
            let got = sequence_cost(&table, &costs, &sel, kind).unwrap();
            let full = sequence_cost(&table, &costs, &SubsequenceSelection::full(h), kind)
                .unwrap();
            assert!(got <= full + 1e-12, "{kind:?}: {got} > {full}");
            assert_eq!(*sel.indices().last().unwrap(), h);
            // Cheap early depth should have been kept or added; nearly all the
            // useful signal is available at depth 1 for cost 2 instead of 32.
            assert!(sel.indices()[0] < h);
        }
    }

    #[test]
    fn useless_prefixes_fall_back_to_the_final_depth_alone() {
        // Early depths are far from the final gradient (huge distance to it)
        // while the final gradient itself is small, so any telescope through
        // them is expensive variance-wise. Expect the degenerate [H̄].
        let h = 4;
        let n = h + 1;
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = if j == h && i > 0 {
                    1e6
                } else if j == h {
                    0.01
                } else {
                    1e6
                };
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        let table = SquaredDistanceTable::from_matrix(m, 0.9).unwrap();
        let costs = CostModel::linear(h, true);
        for kind in [WeightKind::SingleSample, WeightKind::RussianRoulette] {
            let sel = greedy_subsequence_select(&table, &costs, kind).unwrap();
            assert_eq!(sel.indices(), &[h], "{kind:?}");
        }
    }

    #[test]
    fn greedy_never_beats_exhaustive_and_never_loses_to_the_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for h in 2..=6 {
            for trial in 0..12 {
                let table = random_table(&mut rng, h);
                let reuse = trial % 2 == 0;
                let costs = CostModel::doubling(h, reuse);
                for kind in [WeightKind::SingleSample, WeightKind::RussianRoulette] {
                    let greedy = greedy_subsequence_select(&table, &costs, kind).unwrap();
                    let got = sequence_cost(&table, &costs, &greedy, kind).unwrap();

                    let best = all_subsequences(h)
                        .into_iter()
                        .map(|s| {
                            let sel = SubsequenceSelection::new(s, h).unwrap();
                            sequence_cost(&table, &costs, &sel, kind).unwrap()
                        })
                        .fold(f64::INFINITY, f64::min);
                    let last = sequence_cost(
                        &table,
                        &costs,
                        &SubsequenceSelection::last_only(h),
                        kind,
                    )
                    .unwrap();
                    let full =
                        sequence_cost(&table, &costs, &SubsequenceSelection::full(h), kind)
                            .unwrap();

                    assert!(got >= best - 1e-9 * best.abs().max(1.0));
                    assert!(got <= last.min(full) + 1e-9 * got.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn greedy_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let table = random_table(&mut rng, 5);
        let costs = CostModel::linear(5, false);
        let a = greedy_subsequence_select(&table, &costs, WeightKind::RussianRoulette).unwrap();
        let b = greedy_subsequence_select(&table, &costs, WeightKind::RussianRoulette).unwrap();
        assert_eq!(a, b);
    }
}
