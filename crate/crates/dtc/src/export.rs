//! Tree exporters: DOT graphs (with a bundled reader for round-trips),
//! nested-conditional C code, size statistics, and non-uniform quantizer
//! coder/decoder tables.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ActionSet, ControllerTable, DecisionTree, Label, Node, NodeId, Predicate, TreeBuilder,
};

/// Formats a float so that C reads it back as the same double: shortest
/// round-trip decimal, with `.0` appended to integral values.
fn fmt_dec(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') {
        s
    } else {
        format!("{s}.0")
    }
}

fn feature_name(names: Option<&[String]>, i: usize) -> String {
    match names.and_then(|n| n.get(i)) {
        Some(n) => n.clone(),
        None => format!("x[{i}]"),
    }
}

fn linear_form(weights: &[f64], names: Option<&[String]>, dec: bool) -> String {
    let fmt = |v: f64| if dec { fmt_dec(v) } else { format!("{v}") };
    let terms: Vec<String> = weights
        .iter()
        .enumerate()
        .filter(|&(_, &w)| w != 0.0)
        .map(|(i, &w)| format!("{}*{}", fmt(w), feature_name(names, i)))
        .collect();
    if terms.is_empty() {
        fmt(0.0)
    } else {
        terms.join(" + ")
    }
}

fn predicate_text(p: &Predicate, names: Option<&[String]>, dec: bool) -> String {
    let fmt = |v: f64| if dec { fmt_dec(v) } else { format!("{v}") };
    match p {
        Predicate::AxisAligned { feature, threshold } => {
            format!("{} <= {}", feature_name(names, *feature), fmt(*threshold))
        }
        Predicate::Halfspace { weights, bias } => {
            format!("{} <= {}", linear_form(weights, names, dec), fmt(*bias))
        }
    }
}

fn vector_text(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|c| format!("{c}")).collect();
    format!("({})", parts.join(", "))
}

/// Action vectors a leaf stands for: the single chosen action, or every
/// member of the admissible set in ascending id order.
pub fn leaf_vectors<'t>(label: &Label, table: &'t ControllerTable) -> Vec<&'t [f64]> {
    match label {
        Label::Action(a) => vec![table.action_vector(*a)],
        Label::Set(s) => table
            .action_set(*s)
            .ids()
            .iter()
            .map(|&a| table.action_vector(a))
            .collect(),
    }
}

fn leaf_text(label: &Label, table: &ControllerTable) -> String {
    let vectors = leaf_vectors(label, table);
    match label {
        Label::Action(_) => vector_text(vectors[0]),
        Label::Set(_) => {
            let parts: Vec<String> = vectors.iter().map(|v| vector_text(v)).collect();
            format!("{{{}}}", parts.join(", "))
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Emits the tree as a DOT digraph: one graph node per tree node, inner
/// nodes labeled with their predicate, leaves with their action vector(s),
/// edges labeled true/false.
pub fn emit_dot(tree: &DecisionTree, table: &ControllerTable) -> String {
    emit_dot_named(tree, table, None)
}

/// Like [`emit_dot`] with optional display names per feature (`x[i]` when
/// absent). Named output is presentational; the bundled reader only accepts
/// the default `x[i]` form.
pub fn emit_dot_named(
    tree: &DecisionTree,
    table: &ControllerTable,
    names: Option<&[String]>,
) -> String {
    let mut out = String::from("digraph DecisionTree {\n    node [shape=box];\n");
    for i in 0..tree.num_nodes() {
        let label = match tree.node(NodeId(i as u32)) {
            Node::Inner { predicate, .. } => predicate_text(predicate, names, false),
            Node::Leaf { label } => leaf_text(label, table),
        };
        out.push_str(&format!("    {i} [label=\"{}\"];\n", escape(&label)));
    }
    for i in 0..tree.num_nodes() {
        if let Node::Inner {
            on_true, on_false, ..
        } = tree.node(NodeId(i as u32))
        {
            out.push_str(&format!("    {i} -> {} [label=\"true\"];\n", on_true.0));
            out.push_str(&format!("    {i} -> {} [label=\"false\"];\n", on_false.0));
        }
    }
    out.push_str("}\n");
    out
}

fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let inner = text
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| Error::Dot(format!("expected a vector, found `{text}`")))?;
    inner
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Dot(format!("bad number in vector `{text}`")))
        })
        .collect()
}

/// Splits `{(a, b), (c, d)}` into its top-level vector chunks.
fn split_set(text: &str) -> Result<Vec<&str>> {
    let inner = text
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| Error::Dot(format!("expected a set, found `{text}`")))?;
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in inner.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(inner[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = inner[start..].trim();
    if !last.is_empty() {
        parts.push(last);
    }
    Ok(parts)
}

fn parse_feature(text: &str, names: Option<&[String]>) -> Result<usize> {
    if let Some(names) = names {
        if let Some(i) = names.iter().position(|n| n == text) {
            return Ok(i);
        }
    }
    text.strip_prefix("x[")
        .and_then(|t| t.strip_suffix(']'))
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Dot(format!("unknown feature `{text}`")))
}

fn parse_predicate(text: &str, dim: usize, names: Option<&[String]>) -> Result<Predicate> {
    let (lhs, rhs) = text
        .split_once(" <= ")
        .ok_or_else(|| Error::Dot(format!("expected a predicate, found `{text}`")))?;
    let bound: f64 = rhs
        .trim()
        .parse()
        .map_err(|_| Error::Dot(format!("bad threshold `{rhs}`")))?;
    let lhs = lhs.trim();
    if lhs == "0" || lhs == "0.0" {
        // linear form with every weight zero
        return Ok(Predicate::halfspace(vec![0.0; dim], bound));
    }
    if !lhs.contains('*') {
        let feature = parse_feature(lhs, names)?;
        if feature >= dim {
            return Err(Error::Dot(format!("feature {feature} out of range")));
        }
        return Ok(Predicate::axis(feature, bound));
    }
    let mut weights = vec![0.0f64; dim];
    for term in lhs.split(" + ") {
        let (w, name) = term
            .split_once('*')
            .ok_or_else(|| Error::Dot(format!("bad term `{term}`")))?;
        let weight: f64 = w
            .trim()
            .parse()
            .map_err(|_| Error::Dot(format!("bad weight `{w}`")))?;
        let feature = parse_feature(name.trim(), names)?;
        if feature >= dim {
            return Err(Error::Dot(format!("feature {feature} out of range")));
        }
        weights[feature] = weight;
    }
    Ok(Predicate::halfspace(weights, bound))
}

fn parse_leaf(text: &str, table: &ControllerTable) -> Result<Label> {
    if text.starts_with('{') {
        let mut ids = Vec::new();
        for part in split_set(text)? {
            let v = parse_vector(part)?;
            let id = table
                .lookup_action(&v)
                .ok_or_else(|| Error::Dot(format!("unknown action vector `{part}`")))?;
            ids.push(id);
        }
        let set = ActionSet::new(ids).map_err(|_| Error::Dot("empty set leaf".into()))?;
        let label = table
            .lookup_set_label(&set)
            .ok_or_else(|| Error::Dot(format!("unknown action set `{text}`")))?;
        Ok(Label::Set(label))
    } else {
        let v = parse_vector(text)?;
        let id = table
            .lookup_action(&v)
            .ok_or_else(|| Error::Dot(format!("unknown action vector `{text}`")))?;
        Ok(Label::Action(id))
    }
}

/// Parses a DOT document emitted by [`emit_dot`] back into a tree,
/// resolving leaf vectors through the table's dictionaries.
pub fn read_dot(text: &str, table: &ControllerTable) -> Result<DecisionTree> {
    read_dot_named(text, table, None)
}

/// Like [`read_dot`] for documents emitted with display names: `names`
/// maps each name back to its feature index.
pub fn read_dot_named(
    text: &str,
    table: &ControllerTable,
    names: Option<&[String]>,
) -> Result<DecisionTree> {
    let mut labels: Vec<(u32, String)> = Vec::new();
    let mut edges: Vec<(u32, u32, bool)> = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty()
            || line.starts_with("digraph")
            || line == "}"
            || line.starts_with("node ")
            || line.starts_with("edge ")
            || line.starts_with("graph ")
        {
            continue;
        }
        let line = line.strip_suffix(';').unwrap_or(line);
        let (head, attr) = line
            .split_once('[')
            .ok_or_else(|| Error::Dot(format!("unparseable line `{raw}`")))?;
        let attr = attr.strip_suffix(']').unwrap_or(attr);
        let label = attr
            .strip_prefix("label=\"")
            .and_then(|a| a.strip_suffix('"'))
            .ok_or_else(|| Error::Dot(format!("missing label in `{raw}`")))?;
        let label = unescape(label);
        if let Some((from, to)) = head.split_once("->") {
            let from: u32 = from
                .trim()
                .parse()
                .map_err(|_| Error::Dot(format!("bad node id in `{raw}`")))?;
            let to: u32 = to
                .trim()
                .parse()
                .map_err(|_| Error::Dot(format!("bad node id in `{raw}`")))?;
            let side = match label.as_str() {
                "true" => true,
                "false" => false,
                other => return Err(Error::Dot(format!("bad edge label `{other}`"))),
            };
            edges.push((from, to, side));
        } else {
            let id: u32 = head
                .trim()
                .parse()
                .map_err(|_| Error::Dot(format!("bad node id in `{raw}`")))?;
            labels.push((id, label));
        }
    }
    if labels.is_empty() {
        return Err(Error::Dot("no nodes found".into()));
    }
    labels.sort_by_key(|&(id, _)| id);
    if labels.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Dot("duplicate node id".into()));
    }
    // ids must be dense 0..n (as emitted)
    let n = labels.len() as u32;
    if labels.first().unwrap().0 != 0 || labels.last().unwrap().0 != n - 1 {
        return Err(Error::Dot("node ids are not dense".into()));
    }

    let mut builder = TreeBuilder::new(table.state_dim());
    let mut is_inner = vec![false; n as usize];
    for (id, text) in &labels {
        if text.contains(" <= ") {
            let p = parse_predicate(text, table.state_dim(), names)?;
            let got = builder.inner_placeholder(p);
            debug_assert_eq!(got.0, *id);
            is_inner[*id as usize] = true;
        } else {
            let label = parse_leaf(text, table)?;
            let got = builder.leaf(label);
            debug_assert_eq!(got.0, *id);
        }
    }
    let mut has_parent = vec![false; n as usize];
    let mut seen_edge = vec![(false, false); n as usize];
    for (from, to, side) in edges {
        if from >= n || to >= n {
            return Err(Error::Dot("edge references unknown node".into()));
        }
        if !is_inner[from as usize] {
            return Err(Error::Dot(format!("leaf {from} has an outgoing edge")));
        }
        let slot = &mut seen_edge[from as usize];
        let flag = if side { &mut slot.0 } else { &mut slot.1 };
        if *flag {
            return Err(Error::Dot(format!("node {from} has two {side} edges")));
        }
        *flag = true;
        if has_parent[to as usize] {
            return Err(Error::Dot(format!("node {to} has two parents")));
        }
        has_parent[to as usize] = true;
        builder.set_child(NodeId(from), side, NodeId(to));
    }
    for (i, &(t, f)) in seen_edge.iter().enumerate() {
        if is_inner[i] && (!t || !f) {
            return Err(Error::Dot(format!("inner node {i} is missing an edge")));
        }
    }
    let roots: Vec<u32> = (0..n).filter(|&i| !has_parent[i as usize]).collect();
    let [root] = roots.as_slice() else {
        return Err(Error::Dot(format!("expected one root, found {}", roots.len())));
    };
    builder.finish(NodeId(*root))
}

/// Emits the tree as a single nested-conditional C function
/// `void controller(const double* x, float* result)`. A leaf standing for
/// several admissible vectors writes vector `j`'s component `k` to
/// `result[j*m + k]`.
pub fn emit_c(tree: &DecisionTree, table: &ControllerTable) -> String {
    let mut out = String::from("void controller(const double* x, float* result) {\n");
    emit_c_node(tree, table, tree.root(), 1, &mut out);
    out.push_str("}\n");
    out
}

fn emit_c_node(
    tree: &DecisionTree,
    table: &ControllerTable,
    id: NodeId,
    depth: usize,
    out: &mut String,
) {
    let pad = "    ".repeat(depth);
    match tree.node(id) {
        Node::Inner {
            predicate,
            on_true,
            on_false,
        } => {
            out.push_str(&format!("{pad}if ({}) {{\n", predicate_text(predicate, None, true)));
            emit_c_node(tree, table, *on_true, depth + 1, out);
            out.push_str(&format!("{pad}}} else {{\n"));
            emit_c_node(tree, table, *on_false, depth + 1, out);
            out.push_str(&format!("{pad}}}\n"));
        }
        Node::Leaf { label } => {
            let m = table.action_dim();
            for (j, vector) in leaf_vectors(label, table).iter().enumerate() {
                for (k, &v) in vector.iter().enumerate() {
                    out.push_str(&format!("{pad}result[{}] = {}f;\n", j * m + k, fmt_dec(v)));
                }
            }
        }
    }
}

/// Size statistics of a built tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeStats {
    pub nodes: usize,
    pub inner_nodes: usize,
    pub paths: usize,
    pub bits: u32,
    pub seconds: f64,
}

fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// `nodes = 2·paths − 1` on every full binary tree; `bits` is the minimum
/// symbol width for the decision paths, `⌈log₂ paths⌉`.
pub fn compute_stats(tree: &DecisionTree, elapsed: Duration) -> TreeStats {
    let paths = tree.num_leaves();
    TreeStats {
        nodes: tree.num_nodes(),
        inner_nodes: tree.num_inner(),
        paths,
        bits: ceil_log2(paths),
        seconds: elapsed.as_secs_f64(),
    }
}

/// One side of an axis-aligned box: `lower < x_i <= upper`, either side
/// absent when unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Interval {
    fn unbounded() -> Self {
        Interval {
            lower: None,
            upper: None,
        }
    }

    fn contains(&self, v: f64) -> bool {
        self.lower.is_none_or(|l| v > l) && self.upper.is_none_or(|u| v <= u)
    }
}

/// One predicate along a decision path and the side the path took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Whether the region lies on the `<=` side.
    pub on_true: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    /// Intersection of per-feature intervals (axis-only trees).
    Box { intervals: Vec<Interval> },
    /// Ordered halfspace constraints along the decision path.
    Halfspaces { constraints: Vec<Constraint> },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Box { intervals } => {
                intervals.iter().zip(x).all(|(iv, &v)| iv.contains(v))
            }
            Region::Halfspaces { constraints } => constraints.iter().all(|c| {
                let mut dot = 0.0;
                for (w, v) in c.weights.iter().zip(x) {
                    dot += w * v;
                }
                (dot <= c.bias) == c.on_true
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoderEntry {
    pub symbol: usize,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderEntry {
    pub symbol: usize,
    pub actions: Vec<Vec<f64>>,
}

/// Sensor-side coder (state region → symbol) and controller-side decoder
/// (symbol → action vectors). Symbols are leaf positions in left-to-right
/// depth-first order; regions are pairwise disjoint and cover the whole
/// state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerTables {
    pub coder: Vec<CoderEntry>,
    pub decoder: Vec<DecoderEntry>,
}

impl QuantizerTables {
    /// Symbol of the region containing `x`.
    pub fn encode(&self, x: &[f64]) -> Option<usize> {
        self.coder
            .iter()
            .find(|e| e.region.contains(x))
            .map(|e| e.symbol)
    }

    pub fn decode(&self, symbol: usize) -> Option<&[Vec<f64>]> {
        self.decoder
            .iter()
            .find(|e| e.symbol == symbol)
            .map(|e| e.actions.as_slice())
    }
}

pub fn extract_quantizer(tree: &DecisionTree, table: &ControllerTable) -> QuantizerTables {
    let axis_only = (0..tree.num_nodes()).all(|i| {
        !matches!(
            tree.node(NodeId(i as u32)),
            Node::Inner {
                predicate: Predicate::Halfspace { .. },
                ..
            }
        )
    });
    let d = tree.state_dim();
    let mut coder = Vec::new();
    let mut decoder = Vec::new();
    // DFS, true branch first; the constraint stack describes the current path
    let mut path: Vec<(Predicate, bool)> = Vec::new();
    let mut symbol = 0usize;
    // (node, constraint to push before visiting, how many to pop after)
    enum Step {
        Visit(NodeId, Option<(Predicate, bool)>),
        Pop,
    }
    let mut stack = vec![Step::Visit(tree.root(), None)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Pop => {
                path.pop();
            }
            Step::Visit(id, constraint) => {
                if let Some(c) = constraint {
                    path.push(c);
                    stack.push(Step::Pop);
                }
                match tree.node(id) {
                    Node::Inner {
                        predicate,
                        on_true,
                        on_false,
                    } => {
                        stack.push(Step::Visit(*on_false, Some((predicate.clone(), false))));
                        stack.push(Step::Visit(*on_true, Some((predicate.clone(), true))));
                    }
                    Node::Leaf { label } => {
                        let region = if axis_only {
                            let mut intervals = vec![Interval::unbounded(); d];
                            for (p, side) in &path {
                                let Predicate::AxisAligned { feature, threshold } = p else {
                                    unreachable!()
                                };
                                let iv = &mut intervals[*feature];
                                if *side {
                                    iv.upper = Some(match iv.upper {
                                        Some(u) => u.min(*threshold),
                                        None => *threshold,
                                    });
                                } else {
                                    iv.lower = Some(match iv.lower {
                                        Some(l) => l.max(*threshold),
                                        None => *threshold,
                                    });
                                }
                            }
                            Region::Box { intervals }
                        } else {
                            let constraints = path
                                .iter()
                                .map(|(p, side)| {
                                    let (weights, bias) = match p {
                                        Predicate::AxisAligned { feature, threshold } => {
                                            let mut w = vec![0.0; d];
                                            w[*feature] = 1.0;
                                            (w, *threshold)
                                        }
                                        Predicate::Halfspace { weights, bias } => {
                                            (weights.clone(), *bias)
                                        }
                                    };
                                    Constraint {
                                        weights,
                                        bias,
                                        on_true: *side,
                                    }
                                })
                                .collect();
                            Region::Halfspaces { constraints }
                        };
                        coder.push(CoderEntry { symbol, region });
                        decoder.push(DecoderEntry {
                            symbol,
                            actions: leaf_vectors(label, table)
                                .into_iter()
                                .map(|v| v.to_vec())
                                .collect(),
                        });
                        symbol += 1;
                    }
                }
            }
        }
    }
    QuantizerTables { coder, decoder }
}

/// Paths of the four artifacts `build` writes for a controller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactPaths {
    pub dot: PathBuf,
    pub c: PathBuf,
    pub stats: PathBuf,
    pub quantizer: PathBuf,
}

/// Writes `<name>.dot`, `<name>.c`, `<name>.stats.json` and
/// `<name>.quantizer.json` into `dir`.
pub fn write_artifacts(
    tree: &DecisionTree,
    table: &ControllerTable,
    dir: &Path,
    name: &str,
    stats: &TreeStats,
    names: Option<&[String]>,
) -> Result<ArtifactPaths> {
    std::fs::create_dir_all(dir)?;
    let paths = ArtifactPaths {
        dot: dir.join(format!("{name}.dot")),
        c: dir.join(format!("{name}.c")),
        stats: dir.join(format!("{name}.stats.json")),
        quantizer: dir.join(format!("{name}.quantizer.json")),
    };
    std::fs::write(&paths.dot, emit_dot_named(tree, table, names))?;
    std::fs::write(&paths.c, emit_c(tree, table))?;
    let mut stats_json = serde_json::to_string_pretty(stats).expect("stats serialize");
    stats_json.push('\n');
    std::fs::write(&paths.stats, stats_json)?;
    let quantizer = extract_quantizer(tree, table);
    let mut quant_json = serde_json::to_string_pretty(&quantizer).expect("quantizer serialize");
    quant_json.push('\n');
    std::fs::write(&paths.quantizer, quant_json)?;
    Ok(paths)
}
