//! Shared fixtures for the acceptance suite: the reference example trees,
//! the 100-controller build matrix, a C-subset interpreter for emitted
//! code, and independent oracles.

use std::collections::HashMap;
use std::sync::LazyLock;
use std::time::Instant;

use dtc::ingest::{generate_synthetic, SyntheticSpec};
use dtc::learner::{build, BuildResult, Determinizer, LearnerConfig, SplitStrategy};
use dtc::model::{
    ControllerTable, DecisionTree, Label, Node, NodeId, Predicate, TableBuilder, TreeBuilder,
};

/// Two-room slice of the ten-room heating controller: the tree tests
/// rooms 2 and 5 (features 1 and 4) against 20.625 and switches each
/// room's heater.
pub fn heating_fixture() -> (ControllerTable, DecisionTree) {
    let mut b = TableBuilder::new(10, 2);
    let state = |x1: f64, x4: f64| {
        let mut s = [20.0; 10];
        s[1] = x1;
        s[4] = x4;
        s
    };
    b.push_row(&state(20.1, 20.5), &[1.0, 1.0]).unwrap();
    b.push_row(&state(20.1, 21.0), &[1.0, 0.0]).unwrap();
    b.push_row(&state(21.0, 20.5), &[0.0, 1.0]).unwrap();
    b.push_row(&state(21.0, 21.0), &[0.0, 0.0]).unwrap();
    let table = b.finish().unwrap();

    let a = |v: &[f64]| Label::Action(table.lookup_action(v).unwrap());
    let mut t = TreeBuilder::new(10);
    let n0 = t.inner_placeholder(Predicate::axis(1, 20.625));
    let n1 = t.inner_placeholder(Predicate::axis(4, 20.625));
    t.set_child(n0, true, n1);
    let l2 = t.leaf(a(&[1.0, 1.0]));
    t.set_child(n1, true, l2);
    let l3 = t.leaf(a(&[1.0, 0.0]));
    t.set_child(n1, false, l3);
    let n4 = t.inner_placeholder(Predicate::axis(4, 20.625));
    t.set_child(n0, false, n4);
    let l5 = t.leaf(a(&[0.0, 1.0]));
    t.set_child(n4, true, l5);
    let l6 = t.leaf(a(&[0.0, 0.0]));
    t.set_child(n4, false, l6);
    (table, t.finish(n0).unwrap())
}

/// Cart-pole tree over (x[0], x[1]) = (pole angle, angular velocity) with
/// six force leaves, left to right: 2.2, 3.6, -2.9, 3.9, -1.6, -3.7.
pub fn cartpole_fixture() -> (ControllerTable, DecisionTree) {
    let mut b = TableBuilder::new(2, 1);
    b.push_row(&[0.0, -1.0], &[2.2]).unwrap();
    b.push_row(&[0.0, -0.5], &[3.6]).unwrap();
    b.push_row(&[4.0, -0.5], &[-2.9]).unwrap();
    b.push_row(&[0.0, 0.0], &[3.9]).unwrap();
    b.push_row(&[0.0, 1.0], &[-1.6]).unwrap();
    b.push_row(&[4.0, 1.0], &[-3.7]).unwrap();
    let table = b.finish().unwrap();

    let a = |v: f64| Label::Action(table.lookup_action(&[v]).unwrap());
    let mut t = TreeBuilder::new(2);
    let n0 = t.inner_placeholder(Predicate::axis(1, -0.85));
    let l1 = t.leaf(a(2.2));
    t.set_child(n0, true, l1);
    let n2 = t.inner_placeholder(Predicate::axis(1, -0.05));
    t.set_child(n0, false, n2);
    let n3 = t.inner_placeholder(Predicate::axis(0, 3.72));
    t.set_child(n2, true, n3);
    let l4 = t.leaf(a(3.6));
    t.set_child(n3, true, l4);
    let l5 = t.leaf(a(-2.9));
    t.set_child(n3, false, l5);
    let n6 = t.inner_placeholder(Predicate::axis(0, 2.6));
    t.set_child(n2, false, n6);
    let n7 = t.inner_placeholder(Predicate::axis(1, 0.05));
    t.set_child(n6, true, n7);
    let l8 = t.leaf(a(3.9));
    t.set_child(n7, true, l8);
    let l9 = t.leaf(a(-1.6));
    t.set_child(n7, false, l9);
    let l10 = t.leaf(a(-3.7));
    t.set_child(n6, false, l10);
    (table, t.finish(n0).unwrap())
}

pub const STRATEGIES: [SplitStrategy; 4] = [
    SplitStrategy::Axis,
    SplitStrategy::Oc1,
    SplitStrategy::LogReg,
    SplitStrategy::LinSvm,
];

pub const DETERMINIZERS: [Determinizer; 4] = [
    Determinizer::None,
    Determinizer::MaxFreq,
    Determinizer::MinNorm,
    Determinizer::Random,
];

pub struct BuiltCase {
    pub table_index: usize,
    pub strategy: SplitStrategy,
    pub determinizer: Determinizer,
    pub result: BuildResult,
}

pub struct SharedSuite {
    pub tables: Vec<ControllerTable>,
    pub builds: Vec<BuiltCase>,
    pub build_seconds: f64,
}

/// 100 random controllers (d ≤ 5, ≤ 2000 states, ≤ 10 actions, admissible
/// sets of ≤ 4) times all sixteen strategy × determinizer combinations,
/// built once and shared across the acceptance checks.
pub static SUITE: LazyLock<SharedSuite> = LazyLock::new(|| {
    let tables: Vec<ControllerTable> = (0..100)
        .map(|seed| {
            let spec = SyntheticSpec::random_family(seed);
            generate_synthetic(&spec, seed).expect("suite table")
        })
        .collect();
    let started = Instant::now();
    let mut builds = Vec::with_capacity(tables.len() * 16);
    for (table_index, table) in tables.iter().enumerate() {
        for strategy in STRATEGIES {
            for determinizer in DETERMINIZERS {
                let cfg = LearnerConfig {
                    split_strategy: strategy,
                    determinizer,
                    seed: table_index as u64,
                    ..LearnerConfig::default()
                };
                let result = build(table, &cfg).unwrap_or_else(|e| {
                    panic!("table {table_index} {strategy:?}/{determinizer:?}: {e}")
                });
                builds.push(BuiltCase {
                    table_index,
                    strategy,
                    determinizer,
                    result,
                });
            }
        }
    }
    SharedSuite {
        tables,
        builds,
        build_seconds: started.elapsed().as_secs_f64(),
    }
});

/// Rows of the table that reach each leaf, keyed by leaf node id.
pub fn rows_per_leaf(tree: &DecisionTree, table: &ControllerTable) -> HashMap<u32, Vec<usize>> {
    let mut map: HashMap<u32, Vec<usize>> = HashMap::new();
    for row in 0..table.num_states() {
        let x = table.state(row);
        let mut id = tree.root();
        while let Node::Inner {
            predicate,
            on_true,
            on_false,
        } = tree.node(id)
        {
            id = if predicate.eval(x) { *on_true } else { *on_false };
        }
        map.entry(id.0).or_default().push(row);
    }
    map
}

pub fn leaf_label(tree: &DecisionTree, id: u32) -> Label {
    match tree.node(NodeId(id)) {
        Node::Leaf { label } => *label,
        Node::Inner { .. } => panic!("node {id} is not a leaf"),
    }
}

// ---------------------------------------------------------------------
// interpreter over the emitted C code
// ---------------------------------------------------------------------

/// One linear condition `Σ w_i·x[i] <= bound` as printed in the code.
#[derive(Debug, Clone, PartialEq)]
pub struct CCondition {
    pub terms: Vec<(f64, usize)>,
    pub bound: f64,
}

impl CCondition {
    fn eval(&self, x: &[f64]) -> bool {
        let mut sum = 0.0;
        for &(w, i) in &self.terms {
            sum += w * x[i];
        }
        sum <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CStatement {
    If {
        condition: CCondition,
        then_branch: Vec<CStatement>,
        else_branch: Vec<CStatement>,
    },
    Assign {
        index: usize,
        value: f64,
    },
}

fn parse_feature_ref(text: &str) -> usize {
    text.trim()
        .strip_prefix("x[")
        .and_then(|t| t.strip_suffix(']'))
        .and_then(|t| t.parse().ok())
        .unwrap_or_else(|| panic!("bad feature reference `{text}`"))
}

fn parse_condition(text: &str) -> CCondition {
    let (lhs, rhs) = text.split_once(" <= ").expect("condition without <=");
    let bound: f64 = rhs.trim().parse().expect("bad bound");
    let lhs = lhs.trim();
    let terms = if lhs == "0.0" {
        Vec::new()
    } else if !lhs.contains('*') {
        vec![(1.0, parse_feature_ref(lhs))]
    } else {
        lhs.split(" + ")
            .map(|term| {
                let (w, f) = term.split_once('*').expect("term without *");
                (w.trim().parse().expect("bad weight"), parse_feature_ref(f))
            })
            .collect()
    };
    CCondition { terms, bound }
}

fn parse_block(lines: &[&str], pos: &mut usize) -> Vec<CStatement> {
    let mut out = Vec::new();
    while *pos < lines.len() {
        let line = lines[*pos].trim();
        if line == "}" || line == "} else {" {
            return out;
        }
        *pos += 1;
        if let Some(rest) = line.strip_prefix("if (") {
            let cond_text = rest.strip_suffix(") {").expect("if line shape");
            let condition = parse_condition(cond_text);
            let then_branch = parse_block(lines, pos);
            assert_eq!(lines[*pos].trim(), "} else {", "expected else branch");
            *pos += 1;
            let else_branch = parse_block(lines, pos);
            assert_eq!(lines[*pos].trim(), "}", "expected closing brace");
            *pos += 1;
            out.push(CStatement::If {
                condition,
                then_branch,
                else_branch,
            });
        } else if let Some(rest) = line.strip_prefix("result[") {
            let (index, rest) = rest.split_once("] = ").expect("assignment shape");
            let value = rest
                .strip_suffix("f;")
                .expect("float literal suffix")
                .parse()
                .expect("bad literal");
            out.push(CStatement::Assign {
                index: index.parse().expect("bad index"),
                value,
            });
        } else {
            panic!("unrecognized line `{line}`");
        }
    }
    out
}

/// Parses the emitted `void controller(...)` source into statements.
pub fn parse_controller(source: &str) -> Vec<CStatement> {
    let lines: Vec<&str> = source.lines().collect();
    assert_eq!(
        lines.first().copied(),
        Some("void controller(const double* x, float* result) {"),
        "unexpected signature"
    );
    assert_eq!(lines.last().copied(), Some("}"), "unexpected footer");
    let body = &lines[1..lines.len() - 1];
    let mut pos = 0;
    let parsed = parse_block(body, &mut pos);
    assert_eq!(pos, body.len(), "trailing unparsed lines");
    parsed
}

/// Runs the parsed statements on `x`; returns the written result cells.
pub fn interpret(statements: &[CStatement], x: &[f64]) -> HashMap<usize, f64> {
    let mut result = HashMap::new();
    run_block(statements, x, &mut result);
    result
}

fn run_block(statements: &[CStatement], x: &[f64], result: &mut HashMap<usize, f64>) {
    for s in statements {
        match s {
            CStatement::Assign { index, value } => {
                result.insert(*index, *value);
            }
            CStatement::If {
                condition,
                then_branch,
                else_branch,
            } => {
                if condition.eval(x) {
                    run_block(then_branch, x, result);
                } else {
                    run_block(else_branch, x, result);
                }
            }
        }
    }
}

/// The result cells the table says a state should receive: admissible
/// vector `j`'s component `k` lands in cell `j·m + k`.
pub fn expected_cells(
    tree: &DecisionTree,
    table: &ControllerTable,
    x: &[f64],
) -> HashMap<usize, f64> {
    let label = tree.evaluate(x).unwrap();
    let mut out = HashMap::new();
    let m = table.action_dim();
    for (j, vector) in dtc::export::leaf_vectors(&label, table).iter().enumerate() {
        for (k, &v) in vector.iter().enumerate() {
            out.insert(j * m + k, v);
        }
    }
    out
}

/// Collapses every whitespace run to a single space and trims the ends;
/// the comparison relation for emitted-code shape checks.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
