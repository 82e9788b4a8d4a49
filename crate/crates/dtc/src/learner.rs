//! Recursive decision-tree induction: entropy, split scoring, and the
//! base/recursive construction loop.
//!
//! Construction is exact: nodes are split until every leaf is pure under
//! the effective labels, so the tree reproduces the (possibly determinized)
//! controller with no approximation.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::determinize::{self, EffectiveLabeling};
use crate::error::{Error, Result};
use crate::model::{
    ActionId, ControllerTable, DecisionTree, Label, Predicate, SubsetView, TreeBuilder,
};
use crate::predicates::{best_axis_split, lc_split, oc1_split, Oc1Params, TrainerKind, TrainerParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitStrategy {
    Axis,
    Oc1,
    LogReg,
    LinSvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Determinizer {
    /// Keep admissible sets as opaque labels (fully permissive tree).
    None,
    /// Per-node most-frequent-action labeling, recomputed at every node.
    MaxFreq,
    /// A-priori: action closest to a reference vector.
    MinNorm,
    /// A-priori: seeded-random member of each admissible set.
    Random,
}

/// How the two child entropies combine into a split score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    /// Plain sum `entr(true side) + entr(false side)`.
    Sum,
    /// Size-weighted average of the child entropies.
    Weighted,
}

#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub split_strategy: SplitStrategy,
    pub determinizer: Determinizer,
    pub aggregation: Aggregation,
    pub seed: u64,
    pub max_depth: Option<usize>,
    /// Minimum score improvement accepted during local predicate search.
    pub tolerance: f64,
    /// Min-norm reference vector; `None` means the origin.
    pub minnorm_reference: Option<Vec<f64>>,
    /// Cooperative wall-clock budget, checked between node expansions.
    pub timeout: Option<Duration>,
    pub oc1: Oc1Params,
    pub trainer: TrainerParams,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            split_strategy: SplitStrategy::Axis,
            determinizer: Determinizer::None,
            aggregation: Aggregation::Sum,
            seed: 0,
            max_depth: None,
            tolerance: 1e-12,
            minnorm_reference: None,
            timeout: None,
            oc1: Oc1Params::default(),
            trainer: TrainerParams::default(),
        }
    }
}

impl LearnerConfig {
    fn validate(&self) -> Result<()> {
        // rejects NaN as well as non-positive values
        if self.tolerance.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        self.oc1.validate()?;
        self.trainer.validate()?;
        Ok(())
    }
}

/// Label counts over a subset of rows, maintained in ascending label order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelHistogram {
    counts: Vec<(Label, usize)>,
    total: usize,
}

impl LabelHistogram {
    pub fn from_labels<I: IntoIterator<Item = Label>>(labels: I) -> Self {
        let mut map: BTreeMap<Label, usize> = BTreeMap::new();
        for l in labels {
            *map.entry(l).or_insert(0) += 1;
        }
        let counts: Vec<(Label, usize)> = map.into_iter().collect();
        let total = counts.iter().map(|&(_, c)| c).sum();
        LabelHistogram { counts, total }
    }

    pub fn counts(&self) -> &[(Label, usize)] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn num_labels(&self) -> usize {
        self.counts.len()
    }

    pub fn is_pure(&self) -> bool {
        self.counts.len() == 1
    }
}

/// Shannon entropy in bits of a count vector. Zero counts are skipped; a
/// count equal to the total short-circuits to exactly `0.0`.
///
/// Every split score in the crate flows through this one function (in
/// ascending label order), which keeps independently computed scores
/// bit-identical.
pub fn entropy_from_counts<I: IntoIterator<Item = usize>>(counts: I, total: usize) -> f64 {
    debug_assert!(total > 0);
    let n = total as f64;
    let mut h = 0.0;
    for c in counts {
        if c == 0 {
            continue;
        }
        if c == total {
            return 0.0;
        }
        let p = c as f64 / n;
        h -= p * p.log2();
    }
    if h == 0.0 {
        0.0 // canonicalize -0.0
    } else {
        h
    }
}

/// Entropy of a label histogram: `-Σ p_u · log₂ p_u`.
pub fn entropy(h: &LabelHistogram) -> Result<f64> {
    if h.total() == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(entropy_from_counts(
        h.counts().iter().map(|&(_, c)| c),
        h.total(),
    ))
}

/// Combines per-side label counts into a split score. Degenerate splits
/// (either side empty) return `+∞` so they are never selected.
pub fn score_from_counts(
    true_counts: &[usize],
    true_total: usize,
    false_counts: &[usize],
    false_total: usize,
    agg: Aggregation,
) -> f64 {
    if true_total == 0 || false_total == 0 {
        return f64::INFINITY;
    }
    let ht = entropy_from_counts(true_counts.iter().copied(), true_total);
    let hf = entropy_from_counts(false_counts.iter().copied(), false_total);
    match agg {
        Aggregation::Sum => ht + hf,
        Aggregation::Weighted => {
            let n = (true_total + false_total) as f64;
            (true_total as f64 * ht + false_total as f64 * hf) / n
        }
    }
}

/// Scores predicate `p` on a view whose rows carry `labels` (parallel to
/// `view.rows()`).
pub fn split_score(
    view: &SubsetView<'_>,
    labels: &[Label],
    p: &Predicate,
    agg: Aggregation,
) -> f64 {
    debug_assert_eq!(view.len(), labels.len());
    let table = view.table();
    let mut true_map: BTreeMap<Label, usize> = BTreeMap::new();
    let mut false_map: BTreeMap<Label, usize> = BTreeMap::new();
    let mut true_total = 0usize;
    let mut false_total = 0usize;
    for (i, &row) in view.rows().iter().enumerate() {
        if p.eval(table.state(row as usize)) {
            *true_map.entry(labels[i]).or_insert(0) += 1;
            true_total += 1;
        } else {
            *false_map.entry(labels[i]).or_insert(0) += 1;
            false_total += 1;
        }
    }
    let tc: Vec<usize> = true_map.into_values().collect();
    let fc: Vec<usize> = false_map.into_values().collect();
    score_from_counts(&tc, true_total, &fc, false_total, agg)
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn child_seed(seed: u64, on_true_side: bool) -> u64 {
    splitmix64(seed ^ if on_true_side { 0xA5A5_A5A5_A5A5_A5A5 } else { 0x5A5A_5A5A_5A5A_5A5A })
}

/// A built tree together with the effective row labeling it represents.
/// For MaxFreq the labeling is the one recorded at leaf creation; for the
/// a-priori determinizers it is the upfront assignment.
#[derive(Debug)]
pub struct BuildResult {
    pub tree: DecisionTree,
    pub labeling: EffectiveLabeling,
}

struct Frame<'a> {
    view: SubsetView<'a>,
    parent: Option<(crate::model::NodeId, bool)>,
    depth: usize,
    seed: u64,
}

fn select_split(
    view: &SubsetView<'_>,
    labels: &[Label],
    cfg: &LearnerConfig,
    seed: u64,
    deadline: Option<Instant>,
) -> Result<Option<(Predicate, f64)>> {
    Ok(match cfg.split_strategy {
        SplitStrategy::Axis => best_axis_split(view, labels, cfg.aggregation),
        SplitStrategy::Oc1 => {
            let params = Oc1Params {
                seed,
                ..cfg.oc1.clone()
            };
            oc1_split(view, labels, &params, cfg.aggregation, cfg.tolerance, deadline)?
        }
        SplitStrategy::LogReg => lc_split(
            view,
            labels,
            &TrainerKind::LogReg(cfg.trainer.clone()),
            cfg.aggregation,
            seed,
            deadline,
        )?
        .or_else(|| best_axis_split(view, labels, cfg.aggregation)),
        SplitStrategy::LinSvm => lc_split(
            view,
            labels,
            &TrainerKind::LinSvm(cfg.trainer.clone()),
            cfg.aggregation,
            seed,
            deadline,
        )?
        .or_else(|| best_axis_split(view, labels, cfg.aggregation)),
    })
}

/// Builds an exact decision tree for `table` under `cfg`, returning both the
/// tree and the effective labeling it represents.
pub fn build(table: &ControllerTable, cfg: &LearnerConfig) -> Result<BuildResult> {
    cfg.validate()?;
    let deadline = cfg.timeout.map(|t| Instant::now() + t);

    let upfront_actions: Option<Vec<ActionId>> = match cfg.determinizer {
        Determinizer::None | Determinizer::MaxFreq => Option::None,
        Determinizer::MinNorm => {
            match determinize::minnorm_det(table, cfg.minnorm_reference.as_deref())? {
                EffectiveLabeling::SingleAction(ids) => Some(ids),
                EffectiveLabeling::SetLabels => unreachable!(),
            }
        }
        Determinizer::Random => match determinize::random_det(table, cfg.seed) {
            EffectiveLabeling::SingleAction(ids) => Some(ids),
            EffectiveLabeling::SetLabels => unreachable!(),
        },
    };
    // Per-table-row labels for all modes except MaxFreq, which relabels at
    // every node.
    let fixed: Option<Vec<Label>> = match cfg.determinizer {
        Determinizer::None => Some(
            (0..table.num_states())
                .map(|r| Label::Set(table.set_label(r)))
                .collect(),
        ),
        Determinizer::MaxFreq => Option::None,
        _ => upfront_actions
            .as_ref()
            .map(|ids| ids.iter().map(|&a| Label::Action(a)).collect()),
    };
    let maxfreq = matches!(cfg.determinizer, Determinizer::MaxFreq);
    let mut recorded: Vec<ActionId> = if maxfreq {
        vec![ActionId(0); table.num_states()]
    } else {
        Vec::new()
    };

    let mut builder = TreeBuilder::new(table.state_dim());
    let mut root = Option::None;
    let mut stack = vec![Frame {
        view: table.full_view(),
        parent: Option::None,
        depth: 0,
        seed: splitmix64(cfg.seed),
    }];

    while let Some(frame) = stack.pop() {
        if let Some(d) = deadline {
            if Instant::now() >= d {
                return Err(Error::Timeout);
            }
        }
        let node_actions: Option<Vec<ActionId>> = if maxfreq {
            Some(determinize::maxfreq_assign(&frame.view))
        } else {
            Option::None
        };
        let labels: Vec<Label> = match (&fixed, &node_actions) {
            (Some(fixed), _) => frame
                .view
                .rows()
                .iter()
                .map(|&r| fixed[r as usize])
                .collect(),
            (_, Some(actions)) => actions.iter().map(|&a| Label::Action(a)).collect(),
            _ => unreachable!(),
        };
        debug_assert!(!labels.is_empty());

        let pure = labels.iter().all(|&l| l == labels[0]);
        let node_id = if pure {
            if let Some(actions) = &node_actions {
                for (i, &row) in frame.view.rows().iter().enumerate() {
                    recorded[row as usize] = actions[i];
                }
            }
            builder.leaf(labels[0])
        } else {
            if let Some(limit) = cfg.max_depth {
                if frame.depth >= limit {
                    return Err(Error::DepthExceeded { limit });
                }
            }
            let chosen = select_split(&frame.view, &labels, cfg, frame.seed, deadline)?;
            let Some((predicate, _score)) = chosen else {
                let example: Vec<usize> = frame
                    .view
                    .rows()
                    .iter()
                    .take(3)
                    .map(|&r| r as usize)
                    .collect();
                return Err(Error::InconsistentData {
                    rows: frame.view.len(),
                    example,
                });
            };
            let (true_view, false_view) = frame.view.partition(&predicate);
            debug_assert!(!true_view.is_empty() && !false_view.is_empty());
            let id = builder.inner_placeholder(predicate);
            stack.push(Frame {
                view: false_view,
                parent: Some((id, false)),
                depth: frame.depth + 1,
                seed: child_seed(frame.seed, false),
            });
            stack.push(Frame {
                view: true_view,
                parent: Some((id, true)),
                depth: frame.depth + 1,
                seed: child_seed(frame.seed, true),
            });
            id
        };
        match frame.parent {
            Some((pid, side)) => builder.set_child(pid, side, node_id),
            Option::None => root = Some(node_id),
        }
    }

    let tree = builder.finish(root.expect("at least the root frame ran"))?;
    let labeling = match cfg.determinizer {
        Determinizer::None => EffectiveLabeling::SetLabels,
        Determinizer::MaxFreq => EffectiveLabeling::SingleAction(recorded),
        _ => EffectiveLabeling::SingleAction(upfront_actions.expect("computed above")),
    };
    Ok(BuildResult { tree, labeling })
}

/// Like [`build`], discarding the recorded labeling.
pub fn build_tree(table: &ControllerTable, cfg: &LearnerConfig) -> Result<DecisionTree> {
    build(table, cfg).map(|r| r.tree)
}

/// Follows predicates from the root and returns the reached leaf's label.
pub fn evaluate(tree: &DecisionTree, x: &[f64]) -> Result<Label> {
    tree.evaluate(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate_synthetic, SyntheticSpec};
    use crate::model::{Node, TableBuilder};

    fn labeled_1d(pairs: &[(f64, f64)]) -> ControllerTable {
        let mut b = TableBuilder::new(1, 1);
        for &(x, a) in pairs {
            b.push_row(&[x], &[a]).unwrap();
        }
        b.finish().unwrap()
    }

    fn labels_of(t: &ControllerTable) -> Vec<Label> {
        (0..t.num_states())
            .map(|r| Label::Set(t.set_label(r)))
            .collect()
    }

    #[test]
    fn entropy_of_pure_histogram_is_exactly_zero() {
        let h = LabelHistogram::from_labels(vec![Label::Action(ActionId(0)); 2]);
        assert_eq!(entropy(&h).unwrap(), 0.0);
        assert!(entropy(&h).unwrap().is_sign_positive());
    }

    #[test]
    fn entropy_of_even_split_is_exactly_one() {
        let h = LabelHistogram::from_labels(vec![
            Label::Action(ActionId(0)),
            Label::Action(ActionId(0)),
            Label::Action(ActionId(1)),
            Label::Action(ActionId(1)),
        ]);
        assert_eq!(entropy(&h).unwrap(), 1.0);
    }

    #[test]
    fn entropy_three_one() {
        let h = LabelHistogram::from_labels(vec![
            Label::Action(ActionId(0)),
            Label::Action(ActionId(0)),
            Label::Action(ActionId(0)),
            Label::Action(ActionId(1)),
        ]);
        // -0.75*log2(0.75) - 0.25*log2(0.25), frozen high-precision value
        let expected = 0.811_278_124_459_132_8;
        assert!((entropy(&h).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn entropy_of_empty_histogram_errors() {
        let h = LabelHistogram::from_labels(std::iter::empty());
        assert!(matches!(entropy(&h), Err(Error::EmptyInput)));
    }

    #[test]
    fn split_score_examples() {
        // {x=1:a, x=2:a, x=3:b, x=4:b}
        let t = labeled_1d(&[(1.0, 0.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)]);
        let view = t.full_view();
        let labels = labels_of(&t);
        // perfectly separating
        assert_eq!(
            split_score(&view, &labels, &Predicate::axis(0, 2.5), Aggregation::Sum),
            0.0
        );
        // non-splitting
        assert_eq!(
            split_score(&view, &labels, &Predicate::axis(0, 9.0), Aggregation::Sum),
            f64::INFINITY
        );

        // {x=1:a, x=2:a, x=3:b} with x <= 1.5 -> 0 + 1? No: false side {a,b}
        let t3 = labeled_1d(&[(1.0, 0.0), (2.0, 0.0), (3.0, 1.0)]);
        let v3 = t3.full_view();
        let l3 = labels_of(&t3);
        assert_eq!(
            split_score(&v3, &l3, &Predicate::axis(0, 1.5), Aggregation::Sum),
            1.0
        );
    }

    #[test]
    fn weighted_aggregation_weights_by_size() {
        let t = labeled_1d(&[(1.0, 0.0), (2.0, 0.0), (3.0, 1.0)]);
        let view = t.full_view();
        let labels = labels_of(&t);
        // true side {a} (1 row, H=0), false side {a,b} (2 rows, H=1)
        let s = split_score(&view, &labels, &Predicate::axis(0, 1.5), Aggregation::Weighted);
        assert!((s - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn scores_are_nonnegative_or_infinite() {
        let t = labeled_1d(&[(1.0, 0.0), (2.0, 1.0), (3.0, 0.0), (4.0, 2.0)]);
        let view = t.full_view();
        let labels = labels_of(&t);
        for thr in [0.5, 1.5, 2.5, 3.5, 4.5] {
            for agg in [Aggregation::Sum, Aggregation::Weighted] {
                let s = split_score(&view, &labels, &Predicate::axis(0, thr), agg);
                assert!(s >= 0.0 || s.is_infinite());
            }
        }
    }

    #[test]
    fn four_state_table_builds_one_inner_node() {
        let t = labeled_1d(&[(1.0, 0.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)]);
        let tree = build_tree(&t, &LearnerConfig::default()).unwrap();
        assert_eq!(tree.num_inner(), 1);
        assert_eq!(tree.num_leaves(), 2);
        match tree.node(tree.root()) {
            Node::Inner { predicate, .. } => {
                assert_eq!(*predicate, Predicate::axis(0, 2.5));
            }
            _ => panic!("root must be an inner node"),
        }
    }

    #[test]
    fn homogeneous_table_is_a_single_leaf() {
        let t = labeled_1d(&[(1.0, 5.0), (2.0, 5.0), (3.0, 5.0)]);
        let tree = build_tree(&t, &LearnerConfig::default()).unwrap();
        assert_eq!(tree.num_nodes(), 1);
        assert_eq!(tree.num_inner(), 0);
    }

    #[test]
    fn maxfreq_collapses_shared_action() {
        // x1:{a,b}, x2:{b}, x3:{b,c} -> all rows label b at the root
        let mut b = TableBuilder::new(1, 1);
        b.push_row(&[1.0], &[10.0]).unwrap();
        b.push_row(&[1.0], &[20.0]).unwrap();
        b.push_row(&[2.0], &[20.0]).unwrap();
        b.push_row(&[3.0], &[20.0]).unwrap();
        b.push_row(&[3.0], &[30.0]).unwrap();
        let t = b.finish().unwrap();
        let cfg = LearnerConfig {
            determinizer: Determinizer::MaxFreq,
            ..Default::default()
        };
        let result = build(&t, &cfg).unwrap();
        assert_eq!(result.tree.num_nodes(), 1);
        let EffectiveLabeling::SingleAction(ids) = result.labeling else {
            panic!()
        };
        assert_eq!(ids, vec![ActionId(1); 3]);
    }

    #[test]
    fn maxfreq_disjoint_sets_must_split() {
        let t = labeled_1d(&[(1.0, 0.0), (2.0, 1.0)]);
        let cfg = LearnerConfig {
            determinizer: Determinizer::MaxFreq,
            ..Default::default()
        };
        let tree = build_tree(&t, &cfg).unwrap();
        assert_eq!(tree.num_inner(), 1);
    }

    #[test]
    fn unique_labels_build_exact_permissive_tree() {
        let mut b = TableBuilder::new(1, 1);
        b.push_row(&[1.0], &[10.0]).unwrap();
        b.push_row(&[1.0], &[20.0]).unwrap();
        b.push_row(&[2.0], &[20.0]).unwrap();
        b.push_row(&[3.0], &[20.0]).unwrap();
        b.push_row(&[3.0], &[30.0]).unwrap();
        let t = b.finish().unwrap();
        let result = build(&t, &LearnerConfig::default()).unwrap();
        assert_eq!(result.labeling, EffectiveLabeling::SetLabels);
        assert_eq!(result.tree.num_leaves(), 3); // three distinct sets
        for row in 0..t.num_states() {
            let got = result.tree.evaluate(t.state(row)).unwrap();
            assert_eq!(got, Label::Set(t.set_label(row)));
        }
    }

    #[test]
    fn determinized_builds_respect_admissible_sets() {
        let spec = SyntheticSpec::random_family(11);
        let t = generate_synthetic(&spec, 11).unwrap();
        for det in [Determinizer::MinNorm, Determinizer::Random, Determinizer::MaxFreq] {
            let cfg = LearnerConfig {
                determinizer: det,
                seed: 3,
                ..Default::default()
            };
            let result = build(&t, &cfg).unwrap();
            let EffectiveLabeling::SingleAction(ids) = &result.labeling else {
                panic!()
            };
            assert_eq!(ids.len(), t.num_states());
            for (row, &id) in ids.iter().enumerate() {
                assert!(t.admissible(row).contains(id), "{det:?} row {row}");
                let got = result.tree.evaluate(t.state(row)).unwrap();
                assert_eq!(got, Label::Action(id), "{det:?} row {row}");
            }
        }
    }

    #[test]
    fn builds_are_deterministic() {
        let spec = SyntheticSpec::random_family(5);
        let t = generate_synthetic(&spec, 5).unwrap();
        for strategy in [SplitStrategy::Axis, SplitStrategy::Oc1, SplitStrategy::LogReg] {
            let cfg = LearnerConfig {
                split_strategy: strategy,
                determinizer: Determinizer::Random,
                seed: 17,
                ..Default::default()
            };
            let a = build_tree(&t, &cfg).unwrap();
            let b = build_tree(&t, &cfg).unwrap();
            assert_eq!(a, b, "{strategy:?}");
        }
    }

    #[test]
    fn equal_states_with_different_labels_are_inconsistent() {
        // 0.0 and -0.0 are distinct table states but no predicate separates
        // them
        let mut b = TableBuilder::new(1, 1);
        b.push_row(&[0.0], &[1.0]).unwrap();
        b.push_row(&[-0.0], &[2.0]).unwrap();
        let t = b.finish().unwrap();
        assert!(matches!(
            build_tree(&t, &LearnerConfig::default()),
            Err(Error::InconsistentData { rows: 2, .. })
        ));
    }

    #[test]
    fn depth_limit_is_enforced() {
        let t = labeled_1d(&[(1.0, 0.0), (2.0, 1.0)]);
        let cfg = LearnerConfig {
            max_depth: Some(0),
            ..Default::default()
        };
        assert!(matches!(
            build_tree(&t, &cfg),
            Err(Error::DepthExceeded { limit: 0 })
        ));
        let ok = LearnerConfig {
            max_depth: Some(1),
            ..Default::default()
        };
        assert!(build_tree(&t, &ok).is_ok());
    }

    #[test]
    fn zero_timeout_trips_immediately() {
        let t = labeled_1d(&[(1.0, 0.0), (2.0, 1.0)]);
        let cfg = LearnerConfig {
            timeout: Some(Duration::ZERO),
            ..Default::default()
        };
        assert!(matches!(build_tree(&t, &cfg), Err(Error::Timeout)));
    }

    #[test]
    fn invalid_tolerance_is_rejected() {
        let t = labeled_1d(&[(1.0, 0.0)]);
        let cfg = LearnerConfig {
            tolerance: 0.0,
            ..Default::default()
        };
        assert!(build_tree(&t, &cfg).is_err());
    }

    #[test]
    fn collapsible_family_maxfreq_vs_unique() {
        let t = generate_synthetic(&SyntheticSpec::collapsible(), 0).unwrap();
        let maxfreq = LearnerConfig {
            determinizer: Determinizer::MaxFreq,
            ..Default::default()
        };
        let tree = build_tree(&t, &maxfreq).unwrap();
        assert_eq!(tree.num_inner(), 3);
        assert_eq!(tree.num_leaves(), 4);

        let unique = build_tree(&t, &LearnerConfig::default()).unwrap();
        assert!(unique.num_leaves() >= 4);
    }

    #[test]
    fn node_ids_are_preorder() {
        let t = labeled_1d(&[(1.0, 0.0), (2.0, 0.0), (3.0, 1.0), (4.0, 2.0)]);
        let tree = build_tree(&t, &LearnerConfig::default()).unwrap();
        // root is node 0; the true subtree occupies the next id block
        assert_eq!(tree.root().0, 0);
        let mut expected = 0u32;
        let mut stack = vec![tree.root()];
        while let Some(id) = stack.pop() {
            assert_eq!(id.0, expected);
            expected += 1;
            if let Node::Inner { on_true, on_false, .. } = tree.node(id) {
                stack.push(*on_false);
                stack.push(*on_true);
            }
        }
    }
}
