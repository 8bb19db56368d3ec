//! Cycle-level model of the FLiMS 2-way high-throughput merger.
//!
//! The merger is w independent MAX selector units feeding a pipelined
//! butterfly of compare-and-swap stages. Lane `i` pairs bank `A_i` with bank
//! `B_{w-1-i}`; both inputs are stored round-robin across w banks, so the
//! indices dequeued from each list are strictly consecutive positions of the
//! original stream. Each cycle the selector picks the current top w of the
//! 2w primed heads as a rotated bitonic row, and the butterfly sorts that
//! row into the next w-wide chunk of output.
//!
//! Variants change the MAX units only:
//! * `Plain`: strict comparison, ties dequeue from B.
//! * `Skew`: a per-lane direction bit alternates tie wins between the
//!   inputs, balancing dequeue rates on duplicate-heavy data.
//! * `Stable`: ties win toward A, and transient {source, order, port} tags
//!   carried through the pipeline keep equal keys in original input order.
//! * `Flimsj`: a carried-over row register per lane lets the merger dequeue
//!   whole w-rows from a single input per cycle.
//!
//! Exhausted inputs are represented out-of-band as invalid lanes that lose
//! every comparison; the driver trims the output back to |A|+|B| elements,
//! so the full 64-bit key space stays usable.

use crate::error::{ConfigError, ValidationError};
use crate::record::{Direction, Record, SortRule};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Merger variant selector. Skew and stable are distinct variants by
/// construction; the two modifications cannot be combined.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Plain,
    Skew,
    Stable,
    Flimsj,
}

/// Degree of parallelism, direction, variant, and key mode for one merger.
#[derive(Clone, Copy, Debug)]
pub struct MergerConfig {
    pub w: usize,
    pub direction: Direction,
    pub variant: Variant,
    pub kv_mode: bool,
}

impl MergerConfig {
    pub fn new(w: usize, variant: Variant) -> Self {
        MergerConfig {
            w,
            direction: Direction::Descending,
            variant,
            kv_mode: false,
        }
    }

    pub fn rule(&self) -> SortRule {
        SortRule::new(self.direction, self.kv_mode)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.w < 2 || !self.w.is_power_of_two() {
            return Err(ConfigError::BadLaneCount(self.w));
        }
        Ok(())
    }

    /// Pipeline depth in stages: the selector stage plus log2(w) CAS stages,
    /// plus one synchronization stage for the whole-row variant.
    pub fn pipeline_depth(&self) -> usize {
        let lg = self.w.trailing_zeros() as usize;
        match self.variant {
            Variant::Flimsj => lg + 2,
            _ => lg + 1,
        }
    }
}

/// Per-lane selector state.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Lane {
    ca: Option<Record>,
    cb: Option<Record>,
    /// Carried-over row element (flimsj).
    cr: Option<Record>,
    /// Last winning side: false = A, true = B (skew, flimsj).
    dir: bool,
    /// Register roles (flimsj): true = cR holds the B-side head.
    src: bool,
    /// 2-bit batch-order counters (stable).
    order_a: u8,
    order_b: u8,
}

/// Pipeline element: a record plus the transient disambiguation tags used by
/// the stable variant. Tags never leave the pipeline.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PipeElem {
    pub(crate) rec: Option<Record>,
    from_a: bool,
    order: u8,
    port: u8,
}

impl PipeElem {
    fn untagged(rec: Option<Record>) -> Self {
        PipeElem {
            rec,
            from_a: false,
            order: 0,
            port: 0,
        }
    }
}

/// Emission-order comparison of two pipeline elements. Keys compare under
/// the configured rule; on equal keys the stable variant consults the tags:
/// A-source first, then the 2-bit order counters on a mod-4 circle (the
/// wrapped pair 00-vs-11 resolves toward 00), then the port number.
fn pipe_cmp(rule: SortRule, stable: bool, a: &PipeElem, b: &PipeElem) -> Ordering {
    let ord = rule.emit_cmp_opt(a.rec, b.rec);
    if ord != Ordering::Equal || !stable || a.rec.is_none() {
        return ord;
    }
    match (a.from_a, b.from_a) {
        (true, false) => return Ordering::Greater,
        (false, true) => return Ordering::Less,
        _ => {}
    }
    if a.order != b.order {
        // Counters decrement per dequeue, so the earlier batch sits one
        // ahead on the mod-4 circle.
        return if (a.order.wrapping_sub(b.order)) & 3 == 1 {
            Ordering::Greater
        } else {
            Ordering::Less
        };
    }
    a.port.cmp(&b.port)
}

/// A dequeued element with its position in the original stream.
pub(crate) type Dequeue = (usize, Record);

/// Round-robin banked reader. `pop(bank)` yields the next element stored in
/// that bank along with its position in the original stream.
pub(crate) trait BankFeed {
    fn pop(&mut self, bank: usize) -> Option<Dequeue>;
}

/// Banks over an in-memory slice: bank `i` holds positions i, i+w, i+2w, ...
struct SliceBanks<'a> {
    data: &'a [Record],
    w: usize,
    next: Vec<usize>,
}

impl<'a> SliceBanks<'a> {
    fn new(data: &'a [Record], w: usize) -> Self {
        SliceBanks {
            data,
            w,
            next: (0..w).collect(),
        }
    }
}

impl BankFeed for SliceBanks<'_> {
    fn pop(&mut self, bank: usize) -> Option<(usize, Record)> {
        let pos = self.next[bank];
        if pos < self.data.len() {
            self.next[bank] += self.w;
            Some((pos, self.data[pos]))
        } else {
            None
        }
    }
}

/// Primes lane registers from both feeds: the first w elements of each
/// input land in the cA/cB registers (plus the prefetched second B row for
/// flimsj). Returns the priming dequeues in position order.
pub(crate) fn prime_lanes(
    cfg: &MergerConfig,
    lanes: &mut [Lane],
    feed_a: &mut impl BankFeed,
    feed_b: &mut impl BankFeed,
) -> (Vec<Dequeue>, Vec<Dequeue>) {
    let w = cfg.w;
    let mut deq_a = Vec::new();
    let mut deq_b = Vec::new();
    for (i, lane) in lanes.iter_mut().enumerate() {
        lane.ca = refill(feed_a, i, &mut deq_a);
    }
    match cfg.variant {
        Variant::Flimsj => {
            for (i, lane) in lanes.iter_mut().enumerate() {
                lane.cr = refill(feed_b, w - 1 - i, &mut deq_b);
                lane.src = true;
            }
            for (i, lane) in lanes.iter_mut().enumerate() {
                lane.cb = refill(feed_b, w - 1 - i, &mut deq_b);
            }
        }
        _ => {
            for (i, lane) in lanes.iter_mut().enumerate() {
                lane.cb = refill(feed_b, w - 1 - i, &mut deq_b);
            }
        }
    }
    deq_a.sort_unstable_by_key(|&(p, _)| p);
    deq_b.sort_unstable_by_key(|&(p, _)| p);
    (deq_a, deq_b)
}

/// True while any lane register still holds a valid record.
pub(crate) fn lanes_hold_valid(lanes: &[Lane]) -> bool {
    lanes
        .iter()
        .any(|l| l.ca.is_some() || l.cb.is_some() || l.cr.is_some())
}

/// Everything one selector cycle produced.
pub(crate) struct SelectorOutcome {
    pub(crate) row: Vec<PipeElem>,
    /// (position, value) pairs dequeued from each input this cycle.
    pub(crate) deq_a: Vec<Dequeue>,
    pub(crate) deq_b: Vec<Dequeue>,
    /// Effective per-lane candidates at the start of the cycle.
    pub(crate) heads_a: Vec<Option<Record>>,
    pub(crate) heads_b: Vec<Option<Record>>,
}

/// One cycle of the distributed MAX units, shared by every variant and by
/// the tree simulator's merger nodes.
pub(crate) fn selector_cycle(
    cfg: &MergerConfig,
    lanes: &mut [Lane],
    feed_a: &mut impl BankFeed,
    feed_b: &mut impl BankFeed,
) -> SelectorOutcome {
    let w = cfg.w;
    let rule = cfg.rule();
    let mut row = Vec::with_capacity(w);
    let mut deq_a = Vec::new();
    let mut deq_b = Vec::new();
    let mut heads_a = Vec::with_capacity(w);
    let mut heads_b = Vec::with_capacity(w);

    match cfg.variant {
        Variant::Plain | Variant::Skew | Variant::Stable => {
            for (i, lane) in lanes.iter_mut().enumerate() {
                heads_a.push(lane.ca);
                heads_b.push(lane.cb);
                let take_a = select_take_a(cfg.variant, lane, &rule);
                let elem = if take_a {
                    let e = tag(cfg, lane.ca, true, lane.order_a, (w - 1 - i) as u8);
                    lane.order_a = lane.order_a.wrapping_sub(1) & 3;
                    lane.dir = false;
                    lane.ca = refill(feed_a, i, &mut deq_a);
                    e
                } else {
                    let e = tag(cfg, lane.cb, false, lane.order_b, i as u8);
                    lane.order_b = lane.order_b.wrapping_sub(1) & 3;
                    lane.dir = true;
                    lane.cb = refill(feed_b, w - 1 - i, &mut deq_b);
                    e
                };
                row.push(elem);
            }
        }
        Variant::Flimsj => {
            // Phase 1: every lane compares its effective A-side and B-side
            // heads and records which side won.
            for lane in lanes.iter_mut() {
                let a_side = if lane.src { lane.ca } else { lane.cr };
                let b_side = if lane.src { lane.cr } else { lane.cb };
                heads_a.push(a_side);
                heads_b.push(b_side);
                let take_a = rule.emit_cmp_opt(a_side, b_side) == Ordering::Greater;
                row.push(PipeElem::untagged(if take_a { a_side } else { b_side }));
                lane.dir = !take_a;
            }
            // Phase 2: dir_0 steers the whole-row fetch; lanes that consumed
            // their carried element relocate the to-be-overwritten head into
            // cR before the fetched row lands.
            let dir0 = lanes[0].dir;
            for lane in lanes.iter_mut() {
                if lane.src == lane.dir {
                    lane.src = dir0;
                    lane.cr = if dir0 { lane.cb } else { lane.ca };
                }
            }
            for (i, lane) in lanes.iter_mut().enumerate() {
                if dir0 {
                    lane.cb = refill(feed_b, w - 1 - i, &mut deq_b);
                } else {
                    lane.ca = refill(feed_a, i, &mut deq_a);
                }
            }
        }
    }

    deq_a.sort_unstable_by_key(|&(pos, _)| pos);
    deq_b.sort_unstable_by_key(|&(pos, _)| pos);
    SelectorOutcome {
        row,
        deq_a,
        deq_b,
        heads_a,
        heads_b,
    }
}

/// MAX-unit decision for the register-pair variants.
fn select_take_a(variant: Variant, lane: &Lane, rule: &SortRule) -> bool {
    match rule.emit_cmp_opt(lane.ca, lane.cb) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match (lane.ca, lane.cb) {
            // Ties on valid records: plain prefers B, skew alternates via
            // the direction bit, stable prefers A.
            (Some(_), Some(_)) => match variant {
                Variant::Plain => false,
                Variant::Skew => lane.dir,
                Variant::Stable => true,
                Variant::Flimsj => unreachable!("flimsj selects through its own path"),
            },
            // Sentinel vs sentinel: side is irrelevant; B keeps the plain shape.
            _ => false,
        },
    }
}

fn tag(cfg: &MergerConfig, rec: Option<Record>, from_a: bool, order: u8, port: u8) -> PipeElem {
    if cfg.variant == Variant::Stable {
        PipeElem {
            rec,
            from_a,
            order,
            port,
        }
    } else {
        PipeElem::untagged(rec)
    }
}

fn refill(feed: &mut impl BankFeed, bank: usize, deq: &mut Vec<Dequeue>) -> Option<Record> {
    match feed.pop(bank) {
        Some((pos, rec)) => {
            deq.push((pos, rec));
            Some(rec)
        }
        None => None,
    }
}

/// Applies one butterfly stage (CAS pairs at the given stride) in place.
/// The emission-order winner of each pair moves to the lower lane.
fn apply_cas_stage(rule: SortRule, stable: bool, row: &mut [PipeElem], stride: usize) {
    let w = row.len();
    let mut block = 0;
    while block < w {
        for k in 0..stride {
            let (lo, hi) = (block + k, block + k + stride);
            if pipe_cmp(rule, stable, &row[lo], &row[hi]) == Ordering::Less {
                row.swap(lo, hi);
            }
        }
        block += 2 * stride;
    }
}

/// Runs a pipeline row through every CAS stage at once (the combinational
/// view); used by the tree simulator, which models the delay separately.
pub(crate) fn sort_pipe_row(
    rule: SortRule,
    stable: bool,
    mut row: Vec<PipeElem>,
) -> Vec<Option<Record>> {
    let w = row.len();
    let mut stride = w / 2;
    while stride >= 1 {
        apply_cas_stage(rule, stable, &mut row, stride);
        stride /= 2;
    }
    row.into_iter().map(|e| e.rec).collect()
}

/// Sorts one rotated bitonic row through all log2(w) butterfly stages.
pub fn butterfly_sort_row(row: &[u64], direction: Direction) -> Vec<u64> {
    assert!(row.len().is_power_of_two());
    let rule = SortRule::new(direction, false);
    let elems: Vec<PipeElem> = row
        .iter()
        .map(|&v| PipeElem::untagged(Some(Record(v))))
        .collect();
    sort_pipe_row(rule, false, elems)
        .into_iter()
        .map(|o| o.expect("no sentinels in plain rows").0)
        .collect()
}

/// Per-cycle record of what the merger did.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TraceCycle {
    pub cycle: u64,
    /// Values dequeued from each input during this cycle, in stream-position
    /// order. Cycle 0 records the priming dequeues.
    #[serde(rename = "deqA")]
    pub deq_a: Vec<u64>,
    #[serde(rename = "deqB")]
    pub deq_b: Vec<u64>,
    /// Per-lane candidate heads at the start of the cycle (`null` marks an
    /// exhausted-input sentinel).
    #[serde(rename = "cA")]
    pub ca: Vec<Option<u64>>,
    #[serde(rename = "cB")]
    pub cb: Vec<Option<u64>>,
    /// Selector output row written into the pipeline this cycle.
    pub selector: Vec<Option<u64>>,
    /// The sorted row this cycle's selection produces, aligned logically to
    /// the selection cycle (the physical pipeline delays it by the depth).
    pub out: Option<Vec<Option<u64>>>,
}

/// Full execution trace of one merge.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CycleTrace {
    pub w: usize,
    pub cycles: Vec<TraceCycle>,
}

impl CycleTrace {
    /// Cumulative dequeues per input and the maximum over cycles of
    /// |cumA - cumB|.
    pub fn dequeue_balance(&self) -> (u64, u64, u64) {
        let (mut a, mut b, mut max) = (0u64, 0u64, 0u64);
        for c in &self.cycles {
            a += c.deq_a.len() as u64;
            b += c.deq_b.len() as u64;
            max = max.max(a.abs_diff(b));
        }
        (a, b, max)
    }
}

/// Cycle-level merger over two in-memory sorted lists.
pub struct Merger<'a> {
    cfg: MergerConfig,
    lanes: Vec<Lane>,
    banks_a: SliceBanks<'a>,
    banks_b: SliceBanks<'a>,
    /// Stage registers: `pipeline[s]` holds the row about to traverse stage
    /// `s` (for flimsj, slot 0 is the synchronization stage).
    pipeline: Vec<Option<Vec<PipeElem>>>,
    staged: Option<Vec<PipeElem>>,
    cycle: u64,
    trace: CycleTrace,
    emitted_rows: usize,
}

impl<'a> Merger<'a> {
    /// Primes the selector registers with the first w elements of each input
    /// (short inputs pad with invalid lanes) and records the priming
    /// dequeues as trace cycle 0. Inputs are assumed sorted; [`merge_full`]
    /// validates them first.
    pub fn new(
        cfg: MergerConfig,
        list_a: &'a [Record],
        list_b: &'a [Record],
    ) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let w = cfg.w;
        let mut banks_a = SliceBanks::new(list_a, w);
        let mut banks_b = SliceBanks::new(list_b, w);
        let mut lanes = vec![Lane::default(); w];
        let (deq_a, deq_b) = prime_lanes(&cfg, &mut lanes, &mut banks_a, &mut banks_b);

        let depth = cfg.pipeline_depth() - 1; // stages after the selector
        let trace = CycleTrace {
            w,
            cycles: vec![TraceCycle {
                cycle: 0,
                deq_a: deq_a.iter().map(|&(_, r)| r.0).collect(),
                deq_b: deq_b.iter().map(|&(_, r)| r.0).collect(),
                ca: vec![None; w],
                cb: vec![None; w],
                selector: vec![None; w],
                out: None,
            }],
        };
        Ok(Merger {
            cfg,
            lanes,
            banks_a,
            banks_b,
            pipeline: vec![None; depth],
            staged: None,
            cycle: 0,
            trace,
            emitted_rows: 0,
        })
    }

    pub fn config(&self) -> &MergerConfig {
        &self.cfg
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Runs the MAX units for one cycle: each lane writes its winner into
    /// the pipeline input register and dequeues the winning side's next bank
    /// head. Returns the selector row (a rotated bitonic sequence).
    pub fn selector_step(&mut self) -> Vec<Option<Record>> {
        self.cycle += 1;
        let outcome = selector_cycle(
            &self.cfg,
            &mut self.lanes,
            &mut self.banks_a,
            &mut self.banks_b,
        );
        self.trace.cycles.push(TraceCycle {
            cycle: self.cycle,
            deq_a: outcome.deq_a.iter().map(|&(_, r)| r.0).collect(),
            deq_b: outcome.deq_b.iter().map(|&(_, r)| r.0).collect(),
            ca: outcome.heads_a.iter().map(|o| o.map(|r| r.0)).collect(),
            cb: outcome.heads_b.iter().map(|o| o.map(|r| r.0)).collect(),
            selector: outcome.row.iter().map(|e| e.rec.map(|r| r.0)).collect(),
            out: None,
        });
        let row: Vec<Option<Record>> = outcome.row.iter().map(|e| e.rec).collect();
        self.staged = Some(outcome.row);
        row
    }

    /// Advances every pipeline stage by one cycle, feeding in the most
    /// recent selector row. Stage `s` applies CAS pairs at stride `w/2^s`;
    /// when the last stage drains, the fully sorted row is returned with its
    /// transient tags stripped.
    pub fn butterfly_step(&mut self) -> Option<Vec<Option<Record>>> {
        let rule = self.cfg.rule();
        let stable = self.cfg.variant == Variant::Stable;
        let sync_stages = usize::from(self.cfg.variant == Variant::Flimsj);
        let w = self.cfg.w;
        let depth = self.pipeline.len();

        let mut emerging: Option<Vec<PipeElem>> = None;
        for s in (0..depth).rev() {
            if let Some(mut row) = self.pipeline[s].take() {
                if s >= sync_stages {
                    let stride = w >> (s - sync_stages + 1);
                    apply_cas_stage(rule, stable, &mut row, stride);
                }
                if s + 1 == depth {
                    emerging = Some(row);
                } else {
                    self.pipeline[s + 1] = Some(row);
                }
            }
        }
        if let Some(row) = self.staged.take() {
            self.pipeline[0] = Some(row);
        }

        emerging.map(|row| {
            let out: Vec<Option<Record>> = row.iter().map(|e| e.rec).collect();
            self.emitted_rows += 1;
            let idx = self.emitted_rows; // selector cycles are 1-based
            self.trace.cycles[idx].out = Some(out.iter().map(|o| o.map(|r| r.0)).collect());
            out
        })
    }

    fn in_flight(&self) -> bool {
        self.staged.is_some() || self.pipeline.iter().any(Option::is_some)
    }
}

/// Validates and merges two sorted lists, returning the merged sequence and
/// the full cycle trace. The output is trimmed to exactly |A| + |B| leading
/// valid elements after the sentinel flood that handles end-of-input.
pub fn merge_full(
    list_a: &[Record],
    list_b: &[Record],
    cfg: &MergerConfig,
) -> Result<(Vec<Record>, CycleTrace), MergeError> {
    cfg.validate()?;
    let rule = cfg.rule();
    for (name, list) in [("A", list_a), ("B", list_b)] {
        if let Some(offset) = rule.first_unsorted_offset(list) {
            return Err(ValidationError::UnsortedInput {
                name: name.to_string(),
                offset,
            }
            .into());
        }
    }

    let total = list_a.len() + list_b.len();
    let mut merger = Merger::new(*cfg, list_a, list_b)?;
    let mut out: Vec<Record> = Vec::with_capacity(total);
    let mut selected = 0usize;
    // Every cycle selects at least one valid element while any remain, so
    // the selector loop is bounded by the element count.
    let max_cycles = total as u64 + 2;
    while selected < total {
        assert!(
            merger.cycle < max_cycles,
            "selector failed to make progress at cycle {}",
            merger.cycle
        );
        let row = merger.selector_step();
        selected += row.iter().flatten().count();
        if let Some(row) = merger.butterfly_step() {
            push_valid(&mut out, row, total);
        }
    }
    // Flush rows still in the pipeline; no further selections happen, so the
    // trace ends at the last cycle that carried data, and every selection
    // gets its logical output row attached.
    while merger.in_flight() {
        if let Some(row) = merger.butterfly_step() {
            push_valid(&mut out, row, total);
        }
    }
    debug_assert_eq!(out.len(), total);
    Ok((out, merger.trace))
}

fn push_valid(out: &mut Vec<Record>, row: Vec<Option<Record>>, total: usize) {
    for rec in row.into_iter().flatten() {
        if out.len() < total {
            out.push(rec);
        }
    }
}

/// Cumulative dequeues per input and the running-maximum imbalance of a
/// completed merge.
pub fn dequeue_balance(trace: &CycleTrace) -> (u64, u64, u64) {
    trace.dequeue_balance()
}

/// Errors produced by [`merge_full`].
#[derive(Debug, thiserror::Error)]
pub enum MergeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}
