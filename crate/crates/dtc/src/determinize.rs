//! Non-determinism policies: keep admissible sets as opaque labels, pick one
//! action per state up front (min-norm / random), or pick per tree node by
//! action frequency (MaxFreq).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ActionId, ControllerTable, Label, SubsetView};

/// How rows of a table are labeled during tree construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EffectiveLabeling {
    /// Each row keeps its canonical admissible-set label; the tree
    /// represents the fully permissive controller.
    SetLabels,
    /// One action per table row, chosen before or during induction.
    SingleAction(Vec<ActionId>),
}

impl EffectiveLabeling {
    pub fn label(&self, table: &ControllerTable, row: usize) -> Label {
        match self {
            EffectiveLabeling::SetLabels => Label::Set(table.set_label(row)),
            EffectiveLabeling::SingleAction(actions) => Label::Action(actions[row]),
        }
    }

    pub fn is_determinized(&self) -> bool {
        matches!(self, EffectiveLabeling::SingleAction(_))
    }
}

/// Number of states in a view whose admissible set contains each action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyMap {
    counts: Vec<usize>, // indexed by ActionId
}

impl FrequencyMap {
    pub fn over(view: &SubsetView<'_>) -> Self {
        let table = view.table();
        let mut counts = vec![0usize; table.num_actions()];
        for &row in view.rows() {
            for &ActionId(a) in table.admissible(row as usize).ids() {
                counts[a as usize] += 1;
            }
        }
        FrequencyMap { counts }
    }

    pub fn count(&self, action: ActionId) -> usize {
        self.counts[action.0 as usize]
    }

    /// Actions that occur in the view, with their counts.
    pub fn present(&self) -> impl Iterator<Item = (ActionId, usize)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(a, &c)| (ActionId(a as u32), c))
    }
}

/// Set-label mode: rows with set-equal admissible sets share a label, and
/// the label decodes back to the exact set.
pub fn unique_labels(_table: &ControllerTable) -> EffectiveLabeling {
    EffectiveLabeling::SetLabels
}

/// A-priori determinization: each row takes the admissible action whose
/// vector is closest (Euclidean) to `reference`; ties go to the lowest
/// action id. `None` means the origin.
pub fn minnorm_det(
    table: &ControllerTable,
    reference: Option<&[f64]>,
) -> Result<EffectiveLabeling> {
    let m = table.action_dim();
    if let Some(r) = reference {
        if r.len() != m {
            return Err(Error::Dimension {
                expected: m,
                found: r.len(),
            });
        }
    }
    let dist2 = |a: ActionId| -> f64 {
        table
            .action_vector(a)
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let d = v - reference.map_or(0.0, |r| r[k]);
                d * d
            })
            .sum()
    };
    let mut chosen = Vec::with_capacity(table.num_states());
    for row in 0..table.num_states() {
        let ids = table.admissible(row).ids();
        let mut best = ids[0];
        let mut best_d = dist2(best);
        for &a in &ids[1..] {
            let d = dist2(a);
            if d < best_d {
                best = a;
                best_d = d;
            }
        }
        chosen.push(best);
    }
    Ok(EffectiveLabeling::SingleAction(chosen))
}

/// A-priori determinization: each row takes a uniformly random member of its
/// admissible set. Pure function of `(table, seed)`.
pub fn random_det(table: &ControllerTable, seed: u64) -> EffectiveLabeling {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = (0..table.num_states())
        .map(|row| {
            let ids = table.admissible(row).ids();
            ids[rng.gen_range(0..ids.len())]
        })
        .collect();
    EffectiveLabeling::SingleAction(chosen)
}

/// MaxFreq: builds the frequency map over the view and labels each row with
/// the most frequent action of its own admissible set (ties: lowest id).
/// Must be called fresh at every tree node — the map depends on the view.
pub fn maxfreq_assign(view: &SubsetView<'_>) -> Vec<ActionId> {
    let freq = FrequencyMap::over(view);
    let table = view.table();
    view.rows()
        .iter()
        .map(|&row| {
            let ids = table.admissible(row as usize).ids();
            let mut best = ids[0];
            let mut best_count = freq.count(best);
            for &a in &ids[1..] {
                let c = freq.count(a);
                if c > best_count {
                    best = a;
                    best_count = c;
                }
            }
            best
        })
        .collect()
}
