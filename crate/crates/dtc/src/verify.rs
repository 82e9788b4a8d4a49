//! Exactness verification against the source table, plus the benchmark
//! harness producing the eight-method comparison table on the bundled
//! synthetic suite.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::determinize::EffectiveLabeling;
use crate::error::Error;
use crate::ingest::{generate_synthetic, ExtraActions, SyntheticSpec};
use crate::learner::{build, Determinizer, LearnerConfig, SplitStrategy};
use crate::model::{ActionId, ControllerTable, DecisionTree, Label, SetLabelId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMode {
    /// The tree must decode every state to exactly its admissible set.
    Permissive,
    /// The tree must return the single recorded action, which must be
    /// admissible.
    Determinized,
}

/// One state where the tree disagrees with the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub row: usize,
    pub state: Vec<f64>,
    pub expected: String,
    pub got: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub mode: VerifyMode,
    pub rows_checked: usize,
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn vector_text(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|c| format!("{c}")).collect();
    format!("({})", parts.join(", "))
}

fn action_text(table: &ControllerTable, id: ActionId) -> String {
    vector_text(table.action_vector(id))
}

fn set_text(table: &ControllerTable, id: SetLabelId) -> String {
    let parts: Vec<String> = table
        .action_set(id)
        .ids()
        .iter()
        .map(|&a| action_text(table, a))
        .collect();
    format!("{{{}}}", parts.join(", "))
}

fn label_text(table: &ControllerTable, label: &Label) -> String {
    match label {
        Label::Action(a) => action_text(table, *a),
        Label::Set(s) => set_text(table, *s),
    }
}

/// Replays every table row through the tree and reports each disagreement.
///
/// In permissive mode the leaf label must decode (through the table's set
/// dictionary) to exactly the row's admissible set. In determinized mode
/// the leaf must carry the single action recorded for the row, and that
/// action must be admissible.
pub fn check_exact(
    tree: &DecisionTree,
    table: &ControllerTable,
    labeling: &EffectiveLabeling,
) -> VerifyReport {
    let mode = if labeling.is_determinized() {
        VerifyMode::Determinized
    } else {
        VerifyMode::Permissive
    };
    let mut violations = Vec::new();
    for row in 0..table.num_states() {
        let state = table.state(row);
        let got = match tree.evaluate(state) {
            Ok(label) => label,
            Err(e) => {
                violations.push(Violation {
                    row,
                    state: state.to_vec(),
                    expected: label_text(table, &labeling.label(table, row)),
                    got: format!("evaluation error: {e}"),
                });
                continue;
            }
        };
        let ok = match (mode, &got) {
            (VerifyMode::Permissive, Label::Set(s)) => *s == table.set_label(row),
            (VerifyMode::Determinized, Label::Action(a)) => {
                Label::Action(*a) == labeling.label(table, row)
                    && table.admissible(row).contains(*a)
            }
            _ => false,
        };
        if !ok {
            violations.push(Violation {
                row,
                state: state.to_vec(),
                expected: label_text(table, &labeling.label(table, row)),
                got: label_text(table, &got),
            });
        }
    }
    VerifyReport {
        mode,
        rows_checked: table.num_states(),
        violations,
    }
}

/// One method column of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodSpec {
    pub name: &'static str,
    pub split_strategy: SplitStrategy,
    pub determinizer: Determinizer,
}

/// The eight columns of the comparison table: plain strategies on set
/// labels, then MaxFreq and MinNorm each with axis and linear-classifier
/// ("LC", logistic regression) predicates.
pub fn method_matrix() -> Vec<MethodSpec> {
    use Determinizer::{MaxFreq, MinNorm, None as NoDet};
    use SplitStrategy::{Axis, LinSvm, LogReg, Oc1};
    vec![
        MethodSpec { name: "CART", split_strategy: Axis, determinizer: NoDet },
        MethodSpec { name: "LinSVM", split_strategy: LinSvm, determinizer: NoDet },
        MethodSpec { name: "LogReg", split_strategy: LogReg, determinizer: NoDet },
        MethodSpec { name: "OC1", split_strategy: Oc1, determinizer: NoDet },
        MethodSpec { name: "MaxFreq", split_strategy: Axis, determinizer: MaxFreq },
        MethodSpec { name: "MaxFreqLC", split_strategy: LogReg, determinizer: MaxFreq },
        MethodSpec { name: "MinNorm", split_strategy: Axis, determinizer: MinNorm },
        MethodSpec { name: "MinNormLC", split_strategy: LogReg, determinizer: MinNorm },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Wall-clock budget per build, checked between node expansions.
    pub timeout: Option<Duration>,
    /// Each cell runs seeds `base_seed .. base_seed + seeds_per_cell`.
    pub base_seed: u64,
    pub seeds_per_cell: usize,
    /// Worker threads for concurrent cells; `None` uses one per CPU.
    pub workers: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            timeout: Some(Duration::from_secs(60)),
            base_seed: 0,
            seeds_per_cell: 3,
            workers: None,
        }
    }
}

/// Median-of-seeds result of one (case, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub method: String,
    /// Median decision-path count; `None` when timed out or not applicable.
    pub paths: Option<usize>,
    pub timed_out: bool,
    pub not_applicable: bool,
    pub seconds: f64,
}

impl BenchmarkCell {
    /// Table-cell text: a count, `n/a`, or `∞`.
    pub fn text(&self) -> String {
        if self.not_applicable {
            "n/a".to_string()
        } else if self.timed_out {
            "∞".to_string()
        } else {
            self.paths.map_or_else(|| "?".to_string(), |p| p.to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub case: String,
    pub states: usize,
    pub cells: Vec<BenchmarkCell>,
}

fn run_cell(table: &ControllerTable, method: &MethodSpec, cfg: &BenchConfig) -> BenchmarkCell {
    if method.determinizer != Determinizer::None && table.is_deterministic() {
        return BenchmarkCell {
            method: method.name.to_string(),
            paths: None,
            timed_out: false,
            not_applicable: true,
            seconds: 0.0,
        };
    }
    let mut runs: Vec<(Option<usize>, f64)> = (0..cfg.seeds_per_cell.max(1))
        .map(|i| {
            let lc = LearnerConfig {
                split_strategy: method.split_strategy,
                determinizer: method.determinizer,
                seed: cfg.base_seed.wrapping_add(i as u64),
                timeout: cfg.timeout,
                ..LearnerConfig::default()
            };
            let started = Instant::now();
            let outcome = build(table, &lc);
            let seconds = started.elapsed().as_secs_f64();
            match outcome {
                Ok(result) => (Some(result.tree.num_leaves()), seconds),
                Err(Error::Timeout) => (None, seconds),
                Err(e) => {
                    debug_assert!(false, "benchmark cell failed: {e}");
                    (None, seconds)
                }
            }
        })
        .collect();
    // median with timeouts sorted last
    runs.sort_by(|a, b| match (a.0, b.0) {
        (Some(x), Some(y)) => x.cmp(&y).then(a.1.total_cmp(&b.1)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.1.total_cmp(&b.1),
    });
    let (paths, seconds) = runs[runs.len() / 2];
    BenchmarkCell {
        method: method.name.to_string(),
        paths,
        timed_out: paths.is_none(),
        not_applicable: false,
        seconds,
    }
}

/// Runs every method on every case and reports median decision paths per
/// cell. Cells of a case run concurrently up to the configured worker
/// count; a deterministic table marks determinizing methods `n/a`.
pub fn run_benchmark(
    suite: &[(String, ControllerTable)],
    methods: &[MethodSpec],
    cfg: &BenchConfig,
) -> Vec<BenchmarkRow> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .expect("benchmark worker pool");
    pool.install(|| {
        suite
            .iter()
            .map(|(name, table)| BenchmarkRow {
                case: name.clone(),
                states: table.num_states(),
                cells: methods
                    .par_iter()
                    .map(|m| run_cell(table, m, cfg))
                    .collect(),
            })
            .collect()
    })
}

/// Renders rows as an aligned plain-text table.
pub fn render_benchmark_text(rows: &[BenchmarkRow]) -> String {
    let mut headers = vec!["case".to_string(), "states".to_string()];
    if let Some(first) = rows.first() {
        headers.extend(first.cells.iter().map(|c| c.method.clone()));
    }
    let mut grid: Vec<Vec<String>> = vec![headers];
    for row in rows {
        let mut line = vec![row.case.clone(), row.states.to_string()];
        line.extend(row.cells.iter().map(|c| c.text()));
        grid.push(line);
    }
    let columns = grid.iter().map(|r| r.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..columns)
        .map(|c| {
            grid.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in &grid {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            let pad = widths[c].saturating_sub(cell.chars().count());
            if c + 1 < row.len() {
                line.extend(std::iter::repeat_n(' ', pad));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Renders rows as pretty-printed JSON mirroring [`BenchmarkRow`].
pub fn render_benchmark_json(rows: &[BenchmarkRow]) -> String {
    let mut text = serde_json::to_string_pretty(rows).expect("benchmark rows serialize");
    text.push('\n');
    text
}

/// Deterministic 8×8 grid split into four quadrants with one action each;
/// exercises the `n/a` benchmark rule.
fn deterministic_grid() -> SyntheticSpec {
    SyntheticSpec {
        grid: vec![(0..8).map(f64::from).collect(); 2],
        actions: (0..4).map(|a| vec![f64::from(a)]).collect(),
        cuts: vec![(0, 3.5), (1, 3.5)],
        region_sets: vec![vec![0], vec![1], vec![2], vec![3]],
        extra: ExtraActions::None,
        seed: 0,
    }
}

/// Large noisy controller used to demonstrate timeouts: per-state random
/// extra actions force the exact tree to shatter most of the grid.
fn noise_grid() -> SyntheticSpec {
    let mut grid = vec![vec![0.0, 1.0]; 10];
    grid[0] = (0..14).map(f64::from).collect();
    grid[1] = (0..14).map(f64::from).collect();
    let mut actions: Vec<Vec<f64>> = (0..4).map(|a| vec![f64::from(a)]).collect();
    actions.extend((0..16).map(|j| vec![100.0 + f64::from(j)]));
    SyntheticSpec {
        grid,
        actions,
        cuts: vec![(0, 6.5), (1, 6.5)],
        region_sets: vec![vec![0], vec![1], vec![2], vec![3]],
        extra: ExtraActions::Random {
            pool: (4..20).collect(),
            count: 1,
        },
        seed: 0,
    }
}

/// The synthetic suite the `bench` subcommand runs by default: the
/// collapsible family, a deterministic grid, two random families, and a
/// large noisy case that exceeds short timeouts.
pub fn bundled_suite() -> Vec<(String, ControllerTable)> {
    let make = |spec: &SyntheticSpec, seed: u64| generate_synthetic(spec, seed).expect("suite");
    vec![
        (
            "collapsible".to_string(),
            make(&SyntheticSpec::collapsible(), 0),
        ),
        ("grid-det".to_string(), make(&deterministic_grid(), 0)),
        (
            "random-0".to_string(),
            make(&SyntheticSpec::random_family(0), 0),
        ),
        (
            "random-1".to_string(),
            make(&SyntheticSpec::random_family(1), 1),
        ),
        ("noise-large".to_string(), make(&noise_grid(), 0)),
    ]
}
