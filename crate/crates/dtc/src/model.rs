//! Domain types: controller tables, predicates, decision trees, and
//! immutable row views used by the induction algorithm.
//!
//! Everything here is immutable after construction and safe to share
//! across worker threads.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Identifier of a single control action (an entry of the action dictionary).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub u32);

/// Identifier of a canonical admissible action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SetLabelId(pub u32);

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for SetLabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A non-empty set of admissible actions in canonical (sorted, deduplicated)
/// form. Two sets with the same members always compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionSet(Vec<ActionId>);

impl ActionSet {
    pub fn new(mut ids: Vec<ActionId>) -> Result<Self> {
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(Error::InvalidActionSet);
        }
        Ok(ActionSet(ids))
    }

    /// Member ids in ascending order.
    pub fn ids(&self) -> &[ActionId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn contains(&self, id: ActionId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    /// The lowest member id.
    pub fn min_id(&self) -> ActionId {
        self.0[0]
    }
}

/// Interner assigning one fresh consecutive label to each distinct action set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SetDictionary {
    sets: Vec<ActionSet>,
    index: HashMap<ActionSet, SetLabelId>,
}

impl SetDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the label of `set`, allocating the next consecutive id if the
    /// set has not been seen before. Set-equal inputs receive equal labels.
    pub fn intern(&mut self, set: ActionSet) -> SetLabelId {
        if let Some(&id) = self.index.get(&set) {
            return id;
        }
        let id = SetLabelId(self.sets.len() as u32);
        self.sets.push(set.clone());
        self.index.insert(set, id);
        id
    }

    pub fn lookup(&self, set: &ActionSet) -> Option<SetLabelId> {
        self.index.get(set).copied()
    }

    pub fn get(&self, id: SetLabelId) -> &ActionSet {
        &self.sets[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

fn state_key(state: &[f64]) -> u64 {
    // FNV-1a over the component bit patterns; equality is checked on the
    // actual values, so collisions only cost a comparison.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in state {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
    }
    h
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// An immutable lookup table: N distinct states, each with a non-empty
/// admissible action set, plus dictionaries for actions and canonical sets.
///
/// State equality is bitwise equality of the parsed 64-bit float components.
/// Rows that repeat a state are merged by unioning their action sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerTable {
    state_dim: usize,
    action_dim: usize,
    states: Vec<f64>, // row-major, num_states * state_dim
    row_sets: Vec<SetLabelId>,
    actions: Vec<Vec<f64>>, // ActionId -> vector
    sets: SetDictionary,
}

impl ControllerTable {
    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn num_states(&self) -> usize {
        self.row_sets.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_set_labels(&self) -> usize {
        self.sets.len()
    }

    pub fn state(&self, row: usize) -> &[f64] {
        let d = self.state_dim;
        &self.states[row * d..(row + 1) * d]
    }

    pub fn set_label(&self, row: usize) -> SetLabelId {
        self.row_sets[row]
    }

    pub fn admissible(&self, row: usize) -> &ActionSet {
        self.sets.get(self.row_sets[row])
    }

    pub fn action_vector(&self, id: ActionId) -> &[f64] {
        &self.actions[id.0 as usize]
    }

    pub fn action_set(&self, id: SetLabelId) -> &ActionSet {
        self.sets.get(id)
    }

    pub fn lookup_set_label(&self, set: &ActionSet) -> Option<SetLabelId> {
        self.sets.lookup(set)
    }

    /// Finds the action whose vector is bitwise equal to `vector`.
    pub fn lookup_action(&self, vector: &[f64]) -> Option<ActionId> {
        self.actions
            .iter()
            .position(|v| bits_eq(v, vector))
            .map(|i| ActionId(i as u32))
    }

    /// True when every state admits exactly one action.
    pub fn is_deterministic(&self) -> bool {
        self.row_sets
            .iter()
            .all(|&s| self.sets.get(s).len() == 1)
    }

    pub fn full_view(&self) -> SubsetView<'_> {
        SubsetView {
            table: self,
            rows: (0..self.num_states() as u32).collect(),
        }
    }
}

/// Incremental [`ControllerTable`] constructor.
///
/// Rows are pushed one state-action pair at a time, exactly as they appear
/// in the external CSV format: repeated states are merged, action vectors
/// and action sets are interned in order of first appearance.
#[derive(Debug)]
pub struct TableBuilder {
    state_dim: usize,
    action_dim: usize,
    states: Vec<f64>,
    row_actions: Vec<Vec<ActionId>>, // kept sorted per row
    actions: Vec<Vec<f64>>,
    action_index: HashMap<Vec<u64>, ActionId>,
    state_index: HashMap<u64, Vec<u32>>,
}

impl TableBuilder {
    pub fn new(state_dim: usize, action_dim: usize) -> Self {
        TableBuilder {
            state_dim,
            action_dim,
            states: Vec::new(),
            row_actions: Vec::new(),
            actions: Vec::new(),
            action_index: HashMap::new(),
            state_index: HashMap::new(),
        }
    }

    fn intern_action(&mut self, vector: &[f64]) -> ActionId {
        let key: Vec<u64> = vector.iter().map(|v| v.to_bits()).collect();
        if let Some(&id) = self.action_index.get(&key) {
            return id;
        }
        let id = ActionId(self.actions.len() as u32);
        self.actions.push(vector.to_vec());
        self.action_index.insert(key, id);
        id
    }

    fn find_row(&self, state: &[f64], key: u64) -> Option<u32> {
        let d = self.state_dim;
        self.state_index.get(&key).and_then(|rows| {
            rows.iter()
                .copied()
                .find(|&r| bits_eq(&self.states[r as usize * d..(r as usize + 1) * d], state))
        })
    }

    /// Adds one `(state, action vector)` pair.
    pub fn push_row(&mut self, state: &[f64], action: &[f64]) -> Result<()> {
        if state.len() != self.state_dim {
            return Err(Error::Dimension {
                expected: self.state_dim,
                found: state.len(),
            });
        }
        if action.len() != self.action_dim {
            return Err(Error::Dimension {
                expected: self.action_dim,
                found: action.len(),
            });
        }
        if !state.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { what: "state" });
        }
        if !action.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { what: "action" });
        }
        let action_id = self.intern_action(action);
        let key = state_key(state);
        match self.find_row(state, key) {
            Some(row) => {
                let set = &mut self.row_actions[row as usize];
                if let Err(pos) = set.binary_search(&action_id) {
                    set.insert(pos, action_id);
                }
            }
            None => {
                let row = self.row_actions.len() as u32;
                self.states.extend_from_slice(state);
                self.row_actions.push(vec![action_id]);
                self.state_index.entry(key).or_default().push(row);
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.row_actions.is_empty()
    }

    pub fn finish(self) -> Result<ControllerTable> {
        if self.row_actions.is_empty() {
            return Err(Error::EmptyController);
        }
        let mut sets = SetDictionary::new();
        let mut row_sets = Vec::with_capacity(self.row_actions.len());
        for ids in self.row_actions {
            let set = ActionSet::new(ids)?;
            row_sets.push(sets.intern(set));
        }
        Ok(ControllerTable {
            state_dim: self.state_dim,
            action_dim: self.action_dim,
            states: self.states,
            row_sets,
            actions: self.actions,
            sets,
        })
    }
}

/// A boolean test over states; rows where the predicate holds go to the
/// true (left) branch of a split.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    /// `x[feature] <= threshold`
    AxisAligned { feature: usize, threshold: f64 },
    /// `weights . x <= bias`
    Halfspace { weights: Vec<f64>, bias: f64 },
}

impl Predicate {
    pub fn axis(feature: usize, threshold: f64) -> Self {
        Predicate::AxisAligned { feature, threshold }
    }

    pub fn halfspace(weights: Vec<f64>, bias: f64) -> Self {
        Predicate::Halfspace { weights, bias }
    }

    pub fn eval(&self, x: &[f64]) -> bool {
        match self {
            Predicate::AxisAligned { feature, threshold } => x[*feature] <= *threshold,
            Predicate::Halfspace { weights, bias } => {
                let mut dot = 0.0;
                for (w, v) in weights.iter().zip(x) {
                    dot += w * v;
                }
                dot <= *bias
            }
        }
    }

    /// True when the predicate is well-formed for `dim`-dimensional states.
    pub fn fits_dim(&self, dim: usize) -> bool {
        match self {
            Predicate::AxisAligned { feature, .. } => *feature < dim,
            Predicate::Halfspace { weights, .. } => weights.len() == dim,
        }
    }
}

/// Read-only view over a subset of a table's rows. Row indices are kept
/// sorted and unique so that repeated partitioning stays canonical.
#[derive(Debug, Clone)]
pub struct SubsetView<'a> {
    table: &'a ControllerTable,
    rows: Vec<u32>,
}

impl<'a> SubsetView<'a> {
    pub fn from_rows(table: &'a ControllerTable, rows: Vec<u32>) -> Self {
        debug_assert!(rows.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(rows.iter().all(|&r| (r as usize) < table.num_states()));
        SubsetView { table, rows }
    }

    pub fn table(&self) -> &'a ControllerTable {
        self.table
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// State vector of the i-th row in the view.
    pub fn state(&self, i: usize) -> &'a [f64] {
        self.table.state(self.rows[i] as usize)
    }

    /// Splits the view into (rows where `p` holds, rows where it does not).
    /// Either side may be empty; together they restore the input view.
    pub fn partition(&self, p: &Predicate) -> (SubsetView<'a>, SubsetView<'a>) {
        let mut yes = Vec::new();
        let mut no = Vec::new();
        for &r in &self.rows {
            if p.eval(self.table.state(r as usize)) {
                yes.push(r);
            } else {
                no.push(r);
            }
        }
        (
            SubsetView { table: self.table, rows: yes },
            SubsetView { table: self.table, rows: no },
        )
    }
}

/// Leaf payload: a canonical-set label while the controller stays permissive,
/// or a single action once determinized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Set(SetLabelId),
    Action(ActionId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub u32);

const UNSET: NodeId = NodeId(u32::MAX);

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Inner {
        predicate: Predicate,
        on_true: NodeId,
        on_false: NodeId,
    },
    Leaf {
        label: Label,
    },
}

/// A full binary decision tree: every node carries either a predicate and
/// two children or a leaf label.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    state_dim: usize,
    nodes: Vec<Node>,
    root: NodeId,
}

impl DecisionTree {
    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_inner(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Inner { .. }))
            .count()
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.len() - self.num_inner()
    }

    /// Follows predicates from the root (true branch first) and returns the
    /// label of the reached leaf.
    pub fn evaluate(&self, x: &[f64]) -> Result<Label> {
        if x.len() != self.state_dim {
            return Err(Error::Dimension {
                expected: self.state_dim,
                found: x.len(),
            });
        }
        let mut id = self.root;
        loop {
            match self.node(id) {
                Node::Inner {
                    predicate,
                    on_true,
                    on_false,
                } => {
                    id = if predicate.eval(x) { *on_true } else { *on_false };
                }
                Node::Leaf { label } => return Ok(*label),
            }
        }
    }

    /// Leaf ids in decision-path order: depth-first from the root, true
    /// branch before false branch.
    pub fn leaves_in_path_order(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            match self.node(id) {
                Node::Inner {
                    on_true, on_false, ..
                } => {
                    stack.push(*on_false);
                    stack.push(*on_true);
                }
                Node::Leaf { .. } => out.push(id),
            }
        }
        out
    }
}

/// Builds trees node by node. Supports both bottom-up construction (tests,
/// DOT import) and top-down construction with child patching (the learner).
#[derive(Debug)]
pub struct TreeBuilder {
    state_dim: usize,
    nodes: Vec<Node>,
}

impl TreeBuilder {
    pub fn new(state_dim: usize) -> Self {
        TreeBuilder {
            state_dim,
            nodes: Vec::new(),
        }
    }

    pub fn leaf(&mut self, label: Label) -> NodeId {
        self.nodes.push(Node::Leaf { label });
        NodeId(self.nodes.len() as u32 - 1)
    }

    pub fn inner(&mut self, predicate: Predicate, on_true: NodeId, on_false: NodeId) -> NodeId {
        assert!(predicate.fits_dim(self.state_dim), "predicate dimension");
        self.nodes.push(Node::Inner {
            predicate,
            on_true,
            on_false,
        });
        NodeId(self.nodes.len() as u32 - 1)
    }

    /// Allocates an inner node whose children will be patched in later.
    pub fn inner_placeholder(&mut self, predicate: Predicate) -> NodeId {
        self.inner(predicate, UNSET, UNSET)
    }

    pub fn set_child(&mut self, id: NodeId, on_true_side: bool, child: NodeId) {
        match &mut self.nodes[id.0 as usize] {
            Node::Inner {
                on_true, on_false, ..
            } => {
                if on_true_side {
                    *on_true = child;
                } else {
                    *on_false = child;
                }
            }
            Node::Leaf { .. } => panic!("set_child on a leaf"),
        }
    }

    /// Finishes the tree, checking that every node is reachable from the
    /// root exactly once (i.e. the node set forms a tree) and that no
    /// placeholder child is left unset.
    pub fn finish(self, root: NodeId) -> Result<DecisionTree> {
        let n = self.nodes.len();
        if root.0 as usize >= n {
            return Err(Error::Dot(format!("root {} out of range", root.0)));
        }
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        let mut count = 0usize;
        while let Some(id) = stack.pop() {
            let idx = id.0 as usize;
            if idx >= n {
                return Err(Error::Dot(format!("child {} out of range", id.0)));
            }
            if seen[idx] {
                return Err(Error::Dot(format!("node {} has two parents", id.0)));
            }
            seen[idx] = true;
            count += 1;
            if let Node::Inner {
                on_true, on_false, ..
            } = &self.nodes[idx]
            {
                if *on_true == UNSET || *on_false == UNSET {
                    return Err(Error::Dot(format!("node {} has an unset child", id.0)));
                }
                stack.push(*on_false);
                stack.push(*on_true);
            }
        }
        if count != n {
            return Err(Error::Dot(format!(
                "{} of {} nodes unreachable from root",
                n - count,
                n
            )));
        }
        Ok(DecisionTree {
            state_dim: self.state_dim,
            nodes: self.nodes,
            root,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_1d(values: &[f64]) -> ControllerTable {
        let mut b = TableBuilder::new(1, 1);
        for (i, &v) in values.iter().enumerate() {
            b.push_row(&[v], &[i as f64]).unwrap();
        }
        b.finish().unwrap()
    }

    #[test]
    fn set_labels_ignore_member_order() {
        let mut dict = SetDictionary::new();
        let a = dict.intern(ActionSet::new(vec![ActionId(2), ActionId(5)]).unwrap());
        let b = dict.intern(ActionSet::new(vec![ActionId(5), ActionId(2)]).unwrap());
        assert_eq!(a, b);
        assert_eq!(dict.len(), 1);
    }

    #[test]
    fn empty_set_is_rejected() {
        assert!(matches!(
            ActionSet::new(vec![]),
            Err(Error::InvalidActionSet)
        ));
    }

    #[test]
    fn fresh_labels_are_consecutive() {
        let mut dict = SetDictionary::new();
        let ids: Vec<_> = [vec![1], vec![2], vec![1, 2]]
            .into_iter()
            .map(|ids| {
                dict.intern(
                    ActionSet::new(ids.into_iter().map(ActionId).collect()).unwrap(),
                )
            })
            .collect();
        assert_eq!(ids, vec![SetLabelId(0), SetLabelId(1), SetLabelId(2)]);
    }

    #[test]
    fn duplicate_states_merge_action_sets() {
        let mut b = TableBuilder::new(1, 1);
        b.push_row(&[1.0], &[5.0]).unwrap();
        b.push_row(&[1.0], &[7.0]).unwrap();
        let t = b.finish().unwrap();
        assert_eq!(t.num_states(), 1);
        assert_eq!(t.admissible(0).len(), 2);
        assert_eq!(t.num_actions(), 2);
    }

    #[test]
    fn partition_splits_by_threshold() {
        let t = table_1d(&[1.0, 2.0, 3.0]);
        let (yes, no) = t.full_view().partition(&Predicate::axis(0, 1.5));
        assert_eq!(yes.rows(), &[0]);
        assert_eq!(no.rows(), &[1, 2]);
    }

    #[test]
    fn partition_with_always_true_predicate() {
        let t = table_1d(&[1.0, 2.0, 3.0]);
        let p = Predicate::halfspace(vec![0.0], 0.0); // 0 <= 0 for every x
        let (yes, no) = t.full_view().partition(&p);
        assert_eq!(yes.len(), 3);
        assert!(no.is_empty());
    }

    #[test]
    fn partition_by_halfspace() {
        let mut b = TableBuilder::new(2, 1);
        b.push_row(&[1.0, 1.0], &[0.0]).unwrap();
        b.push_row(&[2.0, 0.0], &[1.0]).unwrap();
        let t = b.finish().unwrap();
        // x0 - x1 <= 0
        let (yes, no) = t.full_view().partition(&Predicate::halfspace(vec![1.0, -1.0], 0.0));
        assert_eq!(yes.rows(), &[0]);
        assert_eq!(no.rows(), &[1]);
    }

    #[test]
    fn single_leaf_tree_evaluates_to_its_label() {
        let mut b = TreeBuilder::new(3);
        let leaf = b.leaf(Label::Action(ActionId(7)));
        let tree = b.finish(leaf).unwrap();
        assert_eq!(
            tree.evaluate(&[0.0, 0.0, 0.0]).unwrap(),
            Label::Action(ActionId(7))
        );
        assert_eq!(tree.num_nodes(), 1);
        assert_eq!(tree.num_leaves(), 1);
    }

    #[test]
    fn evaluate_rejects_wrong_dimension() {
        let mut b = TreeBuilder::new(2);
        let leaf = b.leaf(Label::Action(ActionId(0)));
        let tree = b.finish(leaf).unwrap();
        assert!(matches!(
            tree.evaluate(&[1.0]),
            Err(Error::Dimension { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn builder_rejects_unreachable_nodes() {
        let mut b = TreeBuilder::new(1);
        let l0 = b.leaf(Label::Action(ActionId(0)));
        let _orphan = b.leaf(Label::Action(ActionId(1)));
        assert!(b.finish(l0).is_err());
    }

    #[test]
    fn builder_rejects_unset_children() {
        let mut b = TreeBuilder::new(1);
        let inner = b.inner_placeholder(Predicate::axis(0, 0.5));
        assert!(b.finish(inner).is_err());
    }

    #[test]
    fn full_binary_node_identity() {
        // root with two leaves, one replaced by another inner node
        let mut b = TreeBuilder::new(1);
        let l0 = b.leaf(Label::Action(ActionId(0)));
        let l1 = b.leaf(Label::Action(ActionId(1)));
        let l2 = b.leaf(Label::Action(ActionId(2)));
        let i1 = b.inner(Predicate::axis(0, 2.5), l1, l2);
        let root = b.inner(Predicate::axis(0, 1.5), l0, i1);
        let tree = b.finish(root).unwrap();
        assert_eq!(tree.num_nodes(), 2 * tree.num_leaves() - 1);
        assert_eq!(
            tree.leaves_in_path_order(),
            vec![l0, l1, l2],
            "true branch first, depth first"
        );
    }

    #[test]
    fn states_differ_bitwise() {
        let mut b = TableBuilder::new(1, 1);
        b.push_row(&[0.0], &[0.0]).unwrap();
        b.push_row(&[-0.0], &[1.0]).unwrap();
        let t = b.finish().unwrap();
        assert_eq!(t.num_states(), 2, "-0.0 and 0.0 are distinct states");
    }
}
