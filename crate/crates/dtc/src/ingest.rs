//! Controller ingestion: the `dtc-csv v1` file format and synthetic
//! controller generation for tests and benchmarks.
//!
//! File layout:
//!
//! ```text
//! #dtc-csv v1
//! #PERMISSIVE            (or #NON-PERMISSIVE)
//! #state_dim=<d>,action_dim=<m>
//! <d+m comma-separated decimal fields per row>
//! ```
//!
//! Rows repeating a state are merged into one state whose admissible set is
//! the union of the rows' actions. Parsing is streaming and single-pass;
//! memory stays bounded by the table itself.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ControllerTable, TableBuilder};

pub const FORMAT_TAG: &str = "#dtc-csv v1";

/// The three `#`-prefixed lines that open every controller file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvHeader {
    pub permissive: bool,
    pub state_dim: usize,
    pub action_dim: usize,
}

impl CsvHeader {
    pub fn for_table(table: &ControllerTable) -> Self {
        CsvHeader {
            permissive: !table.is_deterministic(),
            state_dim: table.state_dim(),
            action_dim: table.action_dim(),
        }
    }

    fn parse(lines: [&str; 3]) -> Result<Self> {
        if lines[0] != FORMAT_TAG {
            return Err(Error::Header {
                line: 1,
                reason: format!("expected `{FORMAT_TAG}`, found `{}`", lines[0]),
            });
        }
        let permissive = match lines[1] {
            "#PERMISSIVE" => true,
            "#NON-PERMISSIVE" => false,
            other => {
                return Err(Error::Header {
                    line: 2,
                    reason: format!(
                        "expected `#PERMISSIVE` or `#NON-PERMISSIVE`, found `{other}`"
                    ),
                })
            }
        };
        let dims = lines[2]
            .strip_prefix("#state_dim=")
            .and_then(|rest| rest.split_once(",action_dim="))
            .and_then(|(d, m)| Some((d.parse::<usize>().ok()?, m.parse::<usize>().ok()?)));
        let (state_dim, action_dim) = dims.ok_or_else(|| Error::Header {
            line: 3,
            reason: format!(
                "expected `#state_dim=<d>,action_dim=<m>`, found `{}`",
                lines[2]
            ),
        })?;
        if state_dim == 0 || action_dim == 0 {
            return Err(Error::Header {
                line: 3,
                reason: "state_dim and action_dim must be at least 1".into(),
            });
        }
        Ok(CsvHeader {
            permissive,
            state_dim,
            action_dim,
        })
    }

    fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{FORMAT_TAG}")?;
        writeln!(
            w,
            "{}",
            if self.permissive {
                "#PERMISSIVE"
            } else {
                "#NON-PERMISSIVE"
            }
        )?;
        writeln!(
            w,
            "#state_dim={},action_dim={}",
            self.state_dim, self.action_dim
        )?;
        Ok(())
    }
}

/// Parses a controller table from a `dtc-csv v1` stream.
pub fn parse_csv<R: BufRead>(mut reader: R) -> Result<ControllerTable> {
    let mut buf = String::new();
    let mut lineno = 0usize;

    let mut read_line = |buf: &mut String, lineno: &mut usize| -> Result<bool> {
        buf.clear();
        let n = reader.read_line(buf)?;
        if n == 0 {
            return Ok(false);
        }
        *lineno += 1;
        while buf.ends_with('\n') || buf.ends_with('\r') {
            buf.pop();
        }
        Ok(true)
    };

    let mut header_lines: [String; 3] = Default::default();
    for slot in header_lines.iter_mut() {
        if !read_line(&mut buf, &mut lineno)? {
            return Err(Error::Header {
                line: lineno + 1,
                reason: "unexpected end of file inside header".into(),
            });
        }
        *slot = buf.clone();
    }
    let header = CsvHeader::parse([
        header_lines[0].as_str(),
        header_lines[1].as_str(),
        header_lines[2].as_str(),
    ])?;

    let d = header.state_dim;
    let m = header.action_dim;
    let mut builder = TableBuilder::new(d, m);
    let mut fields = vec![0.0f64; d + m];

    while read_line(&mut buf, &mut lineno)? {
        if buf.is_empty() {
            continue; // ignore blank lines
        }
        let mut count = 0usize;
        for (col, raw) in buf.split(',').enumerate() {
            if col >= d + m {
                count += 1;
                continue;
            }
            let text = raw.trim();
            let value: f64 = text.parse().map_err(|_| Error::Parse {
                line: lineno,
                column: col + 1,
                reason: format!("`{text}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    column: col + 1,
                    reason: format!("`{text}` is not finite"),
                });
            }
            fields[col] = value;
            count += 1;
        }
        if count != d + m {
            return Err(Error::MalformedRow {
                line: lineno,
                expected: d + m,
                found: count,
            });
        }
        builder.push_row(&fields[..d], &fields[d..])?;
    }
    builder.finish()
}

pub fn parse_csv_str(text: &str) -> Result<ControllerTable> {
    parse_csv(text.as_bytes())
}

pub fn read_csv_file(path: &Path) -> Result<ControllerTable> {
    parse_csv(BufReader::new(std::fs::File::open(path)?))
}

/// Writes `table` in `dtc-csv v1` form: one row per (state, admissible
/// action), states in table order, actions in ascending id order.
pub fn serialize_csv<W: Write>(table: &ControllerTable, w: &mut W) -> Result<()> {
    CsvHeader::for_table(table).write(w)?;
    let mut line = String::new();
    for row in 0..table.num_states() {
        let state = table.state(row);
        for &action in table.admissible(row).ids() {
            line.clear();
            for v in state {
                line.push_str(&format!("{v}"));
                line.push(',');
            }
            let vector = table.action_vector(action);
            for (i, v) in vector.iter().enumerate() {
                line.push_str(&format!("{v}"));
                if i + 1 < vector.len() {
                    line.push(',');
                }
            }
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}

pub fn serialize_csv_string(table: &ControllerTable) -> String {
    let mut out = Vec::new();
    serialize_csv(table, &mut out).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("CSV output is ASCII")
}

pub fn write_csv_file(table: &ControllerTable, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serialize_csv(table, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Extra per-state admissible actions layered on top of the region sets.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtraActions {
    None,
    /// State `s` additionally admits `pool[(s*count + j) % pool.len()]` for
    /// `j < count` — deterministic, evenly spread noise.
    Cycle { pool: Vec<u32>, count: usize },
    /// Each state additionally admits `count` distinct actions drawn from
    /// `pool` using the generation seed.
    Random { pool: Vec<u32>, count: usize },
}

/// Recipe for a synthetic controller: a grid of states carved into regions
/// by axis thresholds, a per-region admissible action set, and optional
/// permissiveness noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Per-feature grid values, strictly ascending; the state space is the
    /// full Cartesian product.
    pub grid: Vec<Vec<f64>>,
    /// Action vector pool; all other fields index into it.
    pub actions: Vec<Vec<f64>>,
    /// Axis cuts `(feature, threshold)` carving the grid into regions.
    pub cuts: Vec<(usize, f64)>,
    /// One admissible action set per region. Regions are indexed by the cut
    /// outcome bitmask: bit `i` is set iff `state[cuts[i].0] <= cuts[i].1`.
    pub region_sets: Vec<Vec<u32>>,
    /// Permissiveness degree beyond the region sets.
    pub extra: ExtraActions,
    /// Default RNG seed carried with the spec.
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.grid.is_empty() {
            return fail("grid has no features".into());
        }
        for (f, values) in self.grid.iter().enumerate() {
            if values.is_empty() {
                return fail(format!("feature {f} has an empty grid"));
            }
            if !values.iter().all(|v| v.is_finite()) {
                return fail(format!("feature {f} grid has a non-finite value"));
            }
            if values.windows(2).any(|w| w[0] >= w[1]) {
                return fail(format!("feature {f} grid is not strictly ascending"));
            }
        }
        if self.actions.is_empty() {
            return fail("action pool is empty".into());
        }
        let m = self.actions[0].len();
        if m == 0 {
            return fail("action vectors are zero-dimensional".into());
        }
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        for (i, a) in self.actions.iter().enumerate() {
            if a.len() != m {
                return fail(format!("action {i} has dimension {} != {m}", a.len()));
            }
            if !a.iter().all(|v| v.is_finite()) {
                return fail(format!("action {i} has a non-finite value"));
            }
            let key: Vec<u64> = a.iter().map(|v| v.to_bits()).collect();
            if let Some(j) = seen.insert(key, i) {
                return fail(format!("actions {j} and {i} are identical"));
            }
        }
        if self.cuts.len() > 16 {
            return fail("more than 16 cuts".into());
        }
        for &(f, t) in &self.cuts {
            if f >= self.grid.len() {
                return fail(format!("cut on feature {f} out of range"));
            }
            if !t.is_finite() {
                return fail(format!("cut on feature {f} has a non-finite threshold"));
            }
        }
        if self.region_sets.len() != 1 << self.cuts.len() {
            return fail(format!(
                "{} cuts require {} region sets, found {}",
                self.cuts.len(),
                1usize << self.cuts.len(),
                self.region_sets.len()
            ));
        }
        let id_ok = |id: u32| (id as usize) < self.actions.len();
        for (r, set) in self.region_sets.iter().enumerate() {
            if set.is_empty() {
                return fail(format!("region {r} has an empty action set"));
            }
            if !set.iter().all(|&id| id_ok(id)) {
                return fail(format!("region {r} references an unknown action"));
            }
        }
        match &self.extra {
            ExtraActions::None => {}
            ExtraActions::Cycle { pool, count } | ExtraActions::Random { pool, count } => {
                if *count > 0 && pool.is_empty() {
                    return fail("extra action pool is empty".into());
                }
                if !pool.iter().all(|&id| id_ok(id)) {
                    return fail("extra action pool references an unknown action".into());
                }
                if *count > pool.len() {
                    return fail(format!(
                        "cannot draw {count} distinct extras from a pool of {}",
                        pool.len()
                    ));
                }
            }
        }
        let states: usize = self
            .grid
            .iter()
            .try_fold(1usize, |acc, g| acc.checked_mul(g.len()))
            .filter(|&n| n <= 100_000_000)
            .ok_or_else(|| Error::Config("state space larger than 10^8".into()))?;
        let _ = states;
        Ok(())
    }

    /// The ten-feature "collapsible" controller: 4 regions cut by
    /// `x[1] <= 1.5` and `x[4] <= 1.5`, each region sharing one action across
    /// all of its states, plus one cycling noise action per state. A
    /// frequency-based determinizer can collapse it to 3 inner nodes, while
    /// set-label leaves need one leaf per distinct (region, noise) set.
    pub fn collapsible() -> SyntheticSpec {
        let mut grid = vec![vec![0.0, 1.0]; 10];
        grid[1] = vec![0.0, 1.0, 2.0, 3.0];
        grid[4] = vec![0.0, 1.0, 2.0, 3.0];
        let mut actions = vec![
            vec![0.0, 0.0], // region mask 0: x1 > 1.5, x4 > 1.5
            vec![1.0, 0.0], // region mask 1: x1 <= 1.5, x4 > 1.5
            vec![0.0, 1.0], // region mask 2: x1 > 1.5, x4 <= 1.5
            vec![1.0, 1.0], // region mask 3: x1 <= 1.5, x4 <= 1.5
        ];
        for j in 0..8 {
            actions.push(vec![10.0 + j as f64, 99.0]);
        }
        SyntheticSpec {
            grid,
            actions,
            cuts: vec![(1, 1.5), (4, 1.5)],
            region_sets: vec![vec![0], vec![1], vec![2], vec![3]],
            extra: ExtraActions::Cycle {
                pool: (4..12).collect(),
                count: 1,
            },
            seed: 0,
        }
    }

    /// A randomized spec family for property suites: up to 5 features,
    /// at most 2,000 states, at most 10 actions, and admissible sets of at
    /// most 4 actions. Pure function of `seed`.
    pub fn random_family(seed: u64) -> SyntheticSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let d = rng.gen_range(1..=5usize);
        let sizes: Vec<usize> = loop {
            let sizes: Vec<usize> = (0..d).map(|_| rng.gen_range(1..=6usize)).collect();
            let n: usize = sizes.iter().product();
            if (2..=2000).contains(&n) {
                break sizes;
            }
        };
        let grid: Vec<Vec<f64>> = sizes
            .iter()
            .map(|&k| {
                let mut values: Vec<f64> = (0..k)
                    .map(|_| rng.gen_range(-1000i64..=1000) as f64 / 50.0)
                    .collect();
                values.sort_by(f64::total_cmp);
                values.dedup();
                values
            })
            .collect();

        let m = rng.gen_range(1..=3usize);
        let a_count = rng.gen_range(2..=10usize);
        let mut actions: Vec<Vec<f64>> = Vec::with_capacity(a_count);
        while actions.len() < a_count {
            let candidate: Vec<f64> = (0..m)
                .map(|_| rng.gen_range(-500i64..=500) as f64 / 100.0)
                .collect();
            if !actions.iter().any(|a| a == &candidate) {
                actions.push(candidate);
            }
        }

        let k = rng.gen_range(1..=3usize);
        let cuts: Vec<(usize, f64)> = (0..k)
            .map(|_| {
                let f = rng.gen_range(0..d);
                let values = &grid[f];
                let threshold = if values.len() >= 2 {
                    let i = rng.gen_range(0..values.len() - 1);
                    (values[i] + values[i + 1]) / 2.0
                } else {
                    values[0]
                };
                (f, threshold)
            })
            .collect();

        let pick_distinct = |rng: &mut ChaCha8Rng, count: usize| -> Vec<u32> {
            let mut ids: Vec<u32> = (0..a_count as u32).collect();
            for j in 0..count {
                let swap = rng.gen_range(j..ids.len());
                ids.swap(j, swap);
            }
            ids.truncate(count);
            ids
        };
        let region_sets: Vec<Vec<u32>> = (0..1usize << k)
            .map(|_| {
                let size = rng.gen_range(1..=3usize.min(a_count));
                pick_distinct(&mut rng, size)
            })
            .collect();

        let extra = if rng.gen_bool(0.5) {
            ExtraActions::Random {
                pool: (0..a_count as u32).collect(),
                count: 1,
            }
        } else {
            ExtraActions::None
        };

        SyntheticSpec {
            grid,
            actions,
            cuts,
            region_sets,
            extra,
            seed,
        }
    }
}

/// Materializes the spec into a controller table. Deterministic for a fixed
/// `(spec, seed)` pair; the RNG is only consulted for `ExtraActions::Random`.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<ControllerTable> {
    spec.validate()?;
    let d = spec.grid.len();
    let m = spec.actions[0].len();
    let num_states: usize = spec.grid.iter().map(|g| g.len()).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut builder = TableBuilder::new(d, m);

    let mut idx = vec![0usize; d];
    let mut state = vec![0.0f64; d];
    let mut ids: Vec<u32> = Vec::new();
    for s in 0..num_states {
        for f in 0..d {
            state[f] = spec.grid[f][idx[f]];
        }
        let mut mask = 0usize;
        for (i, &(f, t)) in spec.cuts.iter().enumerate() {
            if state[f] <= t {
                mask |= 1 << i;
            }
        }
        ids.clear();
        ids.extend_from_slice(&spec.region_sets[mask]);
        match &spec.extra {
            ExtraActions::None => {}
            ExtraActions::Cycle { pool, count } => {
                for j in 0..*count {
                    ids.push(pool[(s * count + j) % pool.len()]);
                }
            }
            ExtraActions::Random { pool, count } => {
                let mut pool = pool.clone();
                for j in 0..*count {
                    let swap = rng.gen_range(j..pool.len());
                    pool.swap(j, swap);
                    ids.push(pool[j]);
                }
            }
        }
        for &a in ids.iter() {
            builder.push_row(&state, &spec.actions[a as usize])?;
        }
        // odometer: last feature varies fastest
        for f in (0..d).rev() {
            idx[f] += 1;
            if idx[f] < spec.grid[f].len() {
                break;
            }
            idx[f] = 0;
        }
    }
    builder.finish()
}
