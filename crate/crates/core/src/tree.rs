//! Cycle-level simulator for parallel merge trees built from the 2-way
//! merger, banked FIFOs, and rate converters.
//!
//! A tree with S unit-rate sorted sources has log2(S) levels of merger
//! nodes; the node width doubles toward the root (level k mergers run at
//! rate 2^(k+1):2^k), so the root emits w_root = S elements per cycle when
//! fully utilized. In PMT mode every input list is a source; in HPMT mode
//! each source is a many-leaf merger of K input lists, modeled as an ideal
//! single-rate sorted stream.
//!
//! The simulation advances all nodes on a shared clock: mergers fire when
//! every input bank is ready and downstream has space, rate converters
//! repack rows between widths with one cycle of latency, and each merger's
//! output appears after its pipeline latency. Starved cycles are counted
//! per node.

use crate::error::{ConfigError, ValidationError};
use crate::merger::{
    lanes_hold_valid, prime_lanes, selector_cycle, sort_pipe_row, BankFeed, MergerConfig, Variant,
};
use crate::oracle::oracle_merge_k;
use crate::record::{Direction, Record, SortRule};
use serde::Serialize;
use std::collections::VecDeque;

/// Tree flavor: plain parallel merge tree, or the hybrid with many-leaf
/// mergers at the leaves.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TreeMode {
    Pmt,
    /// Each source pre-merges `fan_in` input lists at unit rate.
    Hpmt {
        fan_in: usize,
    },
}

/// Static description of one merge tree.
#[derive(Clone, Debug)]
pub struct TreeTopology {
    /// Number of input lists.
    pub leaf_count: usize,
    /// Root output width; equals the number of unit-rate sources.
    pub w_root: usize,
    pub mode: TreeMode,
    /// Capacity of each merger input bank, in rows.
    pub fifo_depth: usize,
    /// Merger widths per level, leaves toward root.
    pub level_widths: Vec<usize>,
}

impl TreeTopology {
    pub fn sources(&self) -> usize {
        match self.mode {
            TreeMode::Pmt => self.leaf_count,
            TreeMode::Hpmt { fan_in } => self.leaf_count / fan_in,
        }
    }

    pub fn merger_count(&self) -> usize {
        self.sources() - 1
    }
}

/// Builds a balanced tree description. Sources and the root width must be
/// equal powers of two so leaf bandwidth matches root bandwidth.
pub fn build_tree(
    leaves: usize,
    w_root: usize,
    mode: TreeMode,
) -> Result<TreeTopology, ConfigError> {
    let sources = match mode {
        TreeMode::Pmt => leaves,
        TreeMode::Hpmt { fan_in } => {
            if fan_in == 0 || !leaves.is_multiple_of(fan_in) {
                return Err(ConfigError::BadTreeArity(format!(
                    "{leaves} leaves do not split into mergers of {fan_in} inputs"
                )));
            }
            leaves / fan_in
        }
    };
    if sources < 2 || !sources.is_power_of_two() {
        return Err(ConfigError::BadTreeArity(format!(
            "{sources} sources (must be a power of two >= 2)"
        )));
    }
    if w_root != sources {
        return Err(ConfigError::BadTreeArity(format!(
            "root width {w_root} must equal the source count {sources} for full utilization"
        )));
    }
    let depth = sources.trailing_zeros() as usize;
    let level_widths: Vec<usize> = (1..=depth).map(|k| 1 << k).collect();
    Ok(TreeTopology {
        leaf_count: leaves,
        w_root,
        mode,
        fifo_depth: 8,
        level_widths,
    })
}

/// Per-node stall count.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct NodeStalls {
    pub node: String,
    pub count: u64,
}

/// Simulation statistics.
#[derive(Clone, Debug, Serialize)]
pub struct TreeStats {
    pub cycles: u64,
    pub elements_output: u64,
    pub throughput: f64,
    pub stalls: Vec<NodeStalls>,
    /// Elements consumed from each source stream.
    pub dequeues: Vec<u64>,
    /// Valid-row rate at the root over the steady window (from first root
    /// output until the first source runs dry).
    pub root_utilization: f64,
    pub steady_window: (u64, u64),
}

/// Unit-rate sorted source.
struct Source {
    data: Vec<Record>,
    pos: usize,
    finished_at: Option<u64>,
}

/// Rate converter: repacks an element stream into rows of the consumer's
/// width, moving at most one row per cycle (one-cycle latency).
struct Converter {
    buf: VecDeque<Record>,
    upstream_done: bool,
}

impl Converter {
    fn new() -> Self {
        Converter {
            buf: VecDeque::new(),
            upstream_done: false,
        }
    }

    fn done(&self) -> bool {
        self.upstream_done && self.buf.is_empty()
    }
}

/// Banked input of one merger port.
struct QueueBanks {
    q: Vec<VecDeque<Record>>,
    popped: Vec<usize>,
    done: bool,
}

impl QueueBanks {
    fn new(w: usize) -> Self {
        QueueBanks {
            q: vec![VecDeque::new(); w],
            popped: vec![0; w],
            done: false,
        }
    }

    fn ready(&self) -> bool {
        self.done || self.q.iter().all(|b| !b.is_empty())
    }

    fn exhausted(&self) -> bool {
        self.done && self.q.iter().all(VecDeque::is_empty)
    }

    fn has_space(&self, depth: usize) -> bool {
        self.q.iter().all(|b| b.len() < depth)
    }

    /// Accepts the next consecutive elements of the stream, round-robin.
    fn push_row(&mut self, row: &[Record], start_bank: usize) {
        let w = self.q.len();
        for (k, &r) in row.iter().enumerate() {
            self.q[(start_bank + k) % w].push_back(r);
        }
    }
}

impl BankFeed for QueueBanks {
    fn pop(&mut self, bank: usize) -> Option<(usize, Record)> {
        match self.q[bank].pop_front() {
            Some(r) => {
                let pos = bank + self.popped[bank] * self.q.len();
                self.popped[bank] += 1;
                Some((pos, r))
            }
            None => {
                assert!(self.done, "selector popped a starved bank");
                None
            }
        }
    }
}

struct MergerNode {
    cfg: MergerConfig,
    lanes: Vec<crate::merger::Lane>,
    primed: bool,
    banks_a: QueueBanks,
    banks_b: QueueBanks,
    /// Fill bank index for each input's incoming stream.
    fill_a: usize,
    fill_b: usize,
    /// Output pipeline: bubbles model idle cycles; rows appear after the
    /// merger's pipeline latency.
    pipe: VecDeque<Option<Vec<Record>>>,
    stalls: u64,
    done: bool,
}

impl MergerNode {
    fn new(w: usize, skew: bool) -> Self {
        let cfg = MergerConfig::new(w, if skew { Variant::Skew } else { Variant::Plain });
        let latency = cfg.pipeline_depth();
        MergerNode {
            cfg,
            lanes: vec![Default::default(); w],
            primed: false,
            banks_a: QueueBanks::new(w),
            banks_b: QueueBanks::new(w),
            fill_a: 0,
            fill_b: 0,
            pipe: std::iter::repeat_with(|| None).take(latency).collect(),
            stalls: 0,
            done: false,
        }
    }

    /// One clock edge. Returns the burst of elements leaving the pipeline
    /// this cycle, if any.
    fn step(&mut self, out_space: bool) -> Option<Vec<Record>> {
        let mut inserted: Option<Vec<Record>> = None;
        let ready = self.banks_a.ready() && self.banks_b.ready();
        // The node still has work while either input or its own registers
        // hold data.
        let active =
            !self.banks_a.exhausted() || !self.banks_b.exhausted() || lanes_hold_valid(&self.lanes);
        if ready && active && out_space {
            if !self.primed {
                prime_lanes(
                    &self.cfg,
                    &mut self.lanes,
                    &mut self.banks_a,
                    &mut self.banks_b,
                );
                self.primed = true;
            } else {
                let outcome = selector_cycle(
                    &self.cfg,
                    &mut self.lanes,
                    &mut self.banks_a,
                    &mut self.banks_b,
                );
                let sorted = sort_pipe_row(self.cfg.rule(), false, outcome.row);
                let burst: Vec<Record> = sorted.into_iter().flatten().collect();
                inserted = Some(burst);
            }
        } else if active && out_space && !ready {
            self.stalls += 1;
        }
        self.pipe.push_back(inserted);
        let emitted = self.pipe.pop_front().flatten().filter(|b| !b.is_empty());
        // Done only once the pipeline has drained too, so downstream sees
        // end-of-stream strictly after the last burst.
        self.done = !active && self.pipe.iter().all(Option::is_none);
        emitted
    }
}

/// Runs the tree on one sorted list per leaf. Returns the merged output and
/// the collected statistics.
pub fn simulate(
    topo: &TreeTopology,
    inputs: &[Vec<Record>],
    skew_variant: bool,
) -> Result<(Vec<Record>, TreeStats), SimulateError> {
    if inputs.len() != topo.leaf_count {
        return Err(ConfigError::BadTreeArity(format!(
            "expected {} input lists, got {}",
            topo.leaf_count,
            inputs.len()
        ))
        .into());
    }
    let rule = SortRule::new(Direction::Descending, false);
    for (k, list) in inputs.iter().enumerate() {
        if let Some(offset) = rule.first_unsorted_offset(list) {
            return Err(ValidationError::UnsortedInput {
                name: format!("leaf {k}"),
                offset,
            }
            .into());
        }
    }

    // Sources: the lists themselves, or ideal many-leaf pre-merges.
    let mut sources: Vec<Source> = match topo.mode {
        TreeMode::Pmt => inputs
            .iter()
            .map(|l| Source {
                data: l.clone(),
                pos: 0,
                finished_at: None,
            })
            .collect(),
        TreeMode::Hpmt { fan_in } => inputs
            .chunks(fan_in)
            .map(|group| Source {
                data: oracle_merge_k(group, rule),
                pos: 0,
                finished_at: None,
            })
            .collect(),
    };
    let s = topo.sources();
    let depth = s.trailing_zeros() as usize;

    // nodes[lvl][idx]: level 0 nearest the sources (width 2).
    let mut nodes: Vec<Vec<MergerNode>> = (0..depth)
        .map(|lvl| {
            (0..s >> (lvl + 1))
                .map(|_| MergerNode::new(2 << lvl, skew_variant))
                .collect()
        })
        .collect();
    // converters[lvl][child]: between a width-(w/2) producer and the input
    // port of the level-`lvl` merger it feeds. Level 0 converters sit after
    // the sources.
    let mut convs: Vec<Vec<Converter>> = (0..depth)
        .map(|lvl| (0..s >> lvl).map(|_| Converter::new()).collect())
        .collect();

    let total: u64 = sources.iter().map(|src| src.data.len() as u64).sum();
    let mut output: Vec<Record> = Vec::with_capacity(total as usize);
    let mut cycle: u64 = 0;
    let mut first_out: Option<u64> = None;
    let mut last_full_cycle_rows: u64 = 0;
    let max_cycles = 16 * total + 10_000;

    while (output.len() as u64) < total {
        cycle += 1;
        assert!(cycle <= max_cycles, "tree simulation failed to drain");

        // Mergers fire root-first on start-of-cycle bank state.
        for lvl in (0..depth).rev() {
            for idx in 0..nodes[lvl].len() {
                let out_space = if lvl + 1 == depth {
                    true // the root drains into the unbounded collector
                } else {
                    let parent_conv = &convs[lvl + 1][idx];
                    let w_out = 2usize << lvl;
                    // Room for this burst plus everything already in flight.
                    let in_flight: usize = nodes[lvl][idx]
                        .pipe
                        .iter()
                        .map(|o| o.as_ref().map_or(0, Vec::len))
                        .sum();
                    // Space for this burst, everything in flight, and two
                    // assembled parent rows of slack.
                    parent_conv.buf.len() + in_flight + w_out
                        <= w_out * nodes[lvl][idx].pipe.len() + 4 * w_out
                };
                let burst = nodes[lvl][idx].step(out_space);
                if let Some(burst) = burst {
                    if lvl + 1 == depth {
                        if first_out.is_none() {
                            first_out = Some(cycle);
                        }
                        if sources.iter().all(|src| src.finished_at.is_none()) {
                            last_full_cycle_rows += 1;
                        }
                        output.extend(burst);
                    } else {
                        convs[lvl + 1][idx].buf.extend(burst);
                    }
                }
                if nodes[lvl][idx].done && lvl + 1 < depth {
                    convs[lvl + 1][idx].upstream_done = true;
                }
            }
        }

        // Converters move at most one row into their merger's banks.
        for lvl in 0..depth {
            for child in 0..convs[lvl].len() {
                let node = &mut nodes[lvl][child / 2];
                let w = node.cfg.w;
                let (banks, fill) = if child % 2 == 0 {
                    (&mut node.banks_a, &mut node.fill_a)
                } else {
                    (&mut node.banks_b, &mut node.fill_b)
                };
                let conv = &mut convs[lvl][child];
                if banks.has_space(topo.fifo_depth) {
                    if conv.buf.len() >= w {
                        let row: Vec<Record> = conv.buf.drain(..w).collect();
                        banks.push_row(&row, *fill);
                        *fill = (*fill + row.len()) % w;
                    } else if conv.upstream_done && !conv.buf.is_empty() {
                        let row: Vec<Record> = conv.buf.drain(..).collect();
                        banks.push_row(&row, *fill);
                        *fill = (*fill + row.len()) % w;
                    }
                }
                if conv.done() {
                    banks.done = true;
                }
            }
        }

        // Sources emit one element per cycle into their level-0 converter.
        for (k, src) in sources.iter_mut().enumerate() {
            let conv = &mut convs[0][k];
            if src.pos < src.data.len() {
                if conv.buf.len() < 4 {
                    conv.buf.push_back(src.data[src.pos]);
                    src.pos += 1;
                    if src.pos == src.data.len() {
                        src.finished_at = Some(cycle);
                    }
                }
            } else {
                conv.upstream_done = true;
                if src.data.is_empty() {
                    src.finished_at.get_or_insert(cycle);
                }
            }
        }
    }

    let window_start = first_out.unwrap_or(cycle);
    let window_end = sources
        .iter()
        .filter_map(|s| s.finished_at)
        .min()
        .unwrap_or(cycle)
        .max(window_start);
    let window_len = window_end.saturating_sub(window_start) + 1;
    let root_utilization = if total == 0 {
        1.0
    } else {
        last_full_cycle_rows as f64 / window_len as f64
    };

    let mut stalls = Vec::new();
    for (lvl, row) in nodes.iter().enumerate() {
        for (idx, n) in row.iter().enumerate() {
            stalls.push(NodeStalls {
                node: format!("merger-l{}-{}", lvl + 1, idx),
                count: n.stalls,
            });
        }
    }
    let stats = TreeStats {
        cycles: cycle,
        elements_output: output.len() as u64,
        throughput: if cycle > 0 {
            output.len() as f64 / cycle as f64
        } else {
            0.0
        },
        stalls,
        dequeues: sources.iter().map(|s| s.pos as u64).collect(),
        root_utilization,
        steady_window: (window_start, window_end),
    };
    Ok((output, stats))
}

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}
