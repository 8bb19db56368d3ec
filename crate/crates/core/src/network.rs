//! Comparator-network accounting for the family of high-throughput 2-way
//! merger designs: construction, closed-form comparator counts, pipeline
//! latencies, a reference evaluator, and DOT/JSON export.
//!
//! All networks here use the descending convention: a CAS edge `(a, b)` puts
//! the larger value on wire `a`. MAX edges share that data movement but mark
//! the selector stage, whose lower output is retained in the selector
//! registers rather than forwarded.

use crate::error::{ConfigError, ValidationError};
use serde::{Deserialize, Serialize};

/// The compared merger designs. MMS and VMS support count and latency
/// queries only; their two-block topologies are not modeled.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize, Hash)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    Basic,
    Pmt,
    Mms,
    Vms,
    Wms,
    Ehms,
    Flims,
    Flimsj,
}

impl Design {
    pub const ALL: [Design; 8] = [
        Design::Basic,
        Design::Pmt,
        Design::Mms,
        Design::Vms,
        Design::Wms,
        Design::Ehms,
        Design::Flims,
        Design::Flimsj,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Design::Basic => "basic",
            Design::Pmt => "pmt",
            Design::Mms => "mms",
            Design::Vms => "vms",
            Design::Wms => "wms",
            Design::Ehms => "ehms",
            Design::Flims => "flims",
            Design::Flimsj => "flimsj",
        }
    }
}

impl std::str::FromStr for Design {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "basic" => Ok(Design::Basic),
            "pmt" => Ok(Design::Pmt),
            "mms" => Ok(Design::Mms),
            "vms" => Ok(Design::Vms),
            "wms" => Ok(Design::Wms),
            "ehms" => Ok(Design::Ehms),
            "flims" => Ok(Design::Flims),
            "flimsj" => Ok(Design::Flimsj),
            other => Err(format!("unknown design '{other}'")),
        }
    }
}

/// Kind of a network stage.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    /// Selector stage built from MAX units.
    Max,
    /// Compare-and-swap stage.
    Cas,
    /// Non-comparing pipeline stage (selector feedback, synchronization,
    /// or barrel-shifter rotation).
    Pass,
}

/// One pipeline stage: comparator edges plus pass-through routing left over
/// from pruning (a `(src, dst)` move forwards a live value across a deleted
/// comparator whose other input was constant).
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Stage {
    pub kind: StageKind,
    pub cas: Vec<(u16, u16)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub moves: Vec<(u16, u16)>,
}

impl Stage {
    fn pass() -> Self {
        Stage {
            kind: StageKind::Pass,
            cas: Vec::new(),
            moves: Vec::new(),
        }
    }
}

/// A staged comparator network for one design instance.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ComparatorNetwork {
    pub design: Design,
    pub w: usize,
    pub ports: usize,
    /// Port indices carrying the merged result, in emission order.
    pub outputs: Vec<u16>,
    pub stages: Vec<Stage>,
}

impl ComparatorNetwork {
    /// Total comparator edges (MAX units count as one comparison each).
    pub fn comparators(&self) -> u64 {
        self.stages.iter().map(|s| s.cas.len() as u64).sum()
    }

    pub fn stage_count(&self) -> u64 {
        self.stages.len() as u64
    }

    fn validate(&self) -> Result<(), String> {
        for (i, st) in self.stages.iter().enumerate() {
            let mut seen = vec![false; self.ports];
            for &(a, b) in &st.cas {
                for p in [a as usize, b as usize] {
                    if p >= self.ports {
                        return Err(format!("stage {i}: port {p} out of range"));
                    }
                    if seen[p] {
                        return Err(format!("stage {i}: port {p} used twice"));
                    }
                    seen[p] = true;
                }
            }
        }
        Ok(())
    }
}

fn lg(w: usize) -> u64 {
    w.trailing_zeros() as u64
}

fn check_w(w: usize) -> Result<(), ConfigError> {
    if w < 2 || !w.is_power_of_two() {
        return Err(ConfigError::BadLaneCount(w));
    }
    Ok(())
}

/// Closed-form comparator count for each design.
pub fn comparator_count(design: Design, w: usize) -> Result<u64, ConfigError> {
    check_w(w)?;
    let w64 = w as u64;
    let l = lg(w);
    Ok(match design {
        Design::Basic => w64 + w64 * l,
        Design::Pmt | Design::Flims | Design::Flimsj => w64 + w64 * l / 2,
        Design::Mms | Design::Vms => 2 * w64 + w64 * l + 1,
        Design::Wms => 3 * w64 + w64 * l / 2,
        Design::Ehms => 5 * w64 / 2 + w64 * l / 2 + 2,
    })
}

/// Pipeline latency (stage count) for each design.
pub fn pipeline_latency(design: Design, w: usize) -> Result<u64, ConfigError> {
    check_w(w)?;
    let l = lg(w);
    Ok(match design {
        Design::Basic => l + 2,
        Design::Pmt => 2 * l + 1,
        Design::Mms | Design::Vms => 2 * l + 3,
        Design::Wms | Design::Ehms => l + 3,
        Design::Flims => l + 1,
        Design::Flimsj => l + 2,
    })
}

/// Butterfly stages over `width` consecutive wires starting at `base`:
/// log2(width) CAS stages at strides width/2, width/4, ..., 1.
fn butterfly_stages(base: u16, width: usize) -> Vec<Stage> {
    let mut out = Vec::new();
    let mut stride = width / 2;
    while stride >= 1 {
        let mut cas = Vec::with_capacity(width / 2);
        let mut block = 0;
        while block < width {
            for k in 0..stride {
                cas.push((
                    base + (block + k) as u16,
                    base + (block + k + stride) as u16,
                ));
            }
            block += 2 * stride;
        }
        out.push(Stage {
            kind: StageKind::Cas,
            cas,
            moves: Vec::new(),
        });
        stride /= 2;
    }
    out
}

/// Half-cleaner over 2w wires holding two descending w-lists: pairs
/// (i, 2w-1-i), leaving the top w on the low wires.
fn half_cleaner(w: usize, kind: StageKind) -> Stage {
    Stage {
        kind,
        cas: (0..w).map(|i| (i as u16, (2 * w - 1 - i) as u16)).collect(),
        moves: Vec::new(),
    }
}

/// Builds the comparator network for a design. MMS and VMS have no modeled
/// topology and return an error.
pub fn build_network(design: Design, w: usize) -> Result<ComparatorNetwork, ConfigError> {
    check_w(w)?;
    let net = match design {
        Design::Mms | Design::Vms => return Err(ConfigError::UnsupportedTopology(design)),
        Design::Flims => {
            let mut stages = vec![half_cleaner(w, StageKind::Max)];
            stages.extend(butterfly_stages(0, w));
            ComparatorNetwork {
                design,
                w,
                ports: 2 * w,
                outputs: (0..w as u16).collect(),
                stages,
            }
        }
        Design::Flimsj => {
            // Same datapath plus the whole-row synchronization stage.
            let mut stages = vec![half_cleaner(w, StageKind::Max), Stage::pass()];
            stages.extend(butterfly_stages(0, w));
            ComparatorNetwork {
                design,
                w,
                ports: 2 * w,
                outputs: (0..w as u16).collect(),
                stages,
            }
        }
        Design::Pmt => {
            // Barrel-shifter rotations ahead of the merger occupy log2(w)
            // non-comparing stages; the merger itself is the 2w-to-w bitonic
            // partial merger.
            let mut stages: Vec<Stage> = (0..lg(w)).map(|_| Stage::pass()).collect();
            stages.push(half_cleaner(w, StageKind::Cas));
            stages.extend(butterfly_stages(0, w));
            ComparatorNetwork {
                design,
                w,
                ports: 2 * w,
                outputs: (0..w as u16).collect(),
                stages,
            }
        }
        Design::Basic => {
            // Feedback selector stage, then the full 2w-to-2w bitonic
            // merger: both butterflies run in the same stage slots.
            let mut stages = vec![Stage::pass(), half_cleaner(w, StageKind::Cas)];
            let top = butterfly_stages(0, w);
            let bottom = butterfly_stages(w as u16, w);
            for (mut t, b) in top.into_iter().zip(bottom) {
                t.cas.extend(b.cas);
                stages.push(t);
            }
            ComparatorNetwork {
                design,
                w,
                ports: 2 * w,
                outputs: (0..2 * w as u16).collect(),
                stages,
            }
        }
        Design::Wms => pruned_odd_even(design, w, w)?,
        Design::Ehms => pruned_odd_even(design, w, w / 2)?,
    };
    debug_assert!(net.validate().is_ok(), "{:?}", net.validate());
    Ok(net)
}

/// Batcher odd-even merge of two descending sorted lists laid out on the
/// given wires. Returns stages aligned so both recursive halves advance in
/// lockstep; total stages = log2(len) + 1.
fn odd_even_merge_stages(l1: &[u16], l2: &[u16]) -> Vec<Vec<(u16, u16)>> {
    assert_eq!(l1.len(), l2.len());
    if l1.len() == 1 {
        return vec![vec![(l1[0], l2[0])]];
    }
    let even = |l: &[u16]| l.iter().copied().step_by(2).collect::<Vec<_>>();
    let odd = |l: &[u16]| l.iter().copied().skip(1).step_by(2).collect::<Vec<_>>();
    let se = odd_even_merge_stages(&even(l1), &even(l2));
    let so = odd_even_merge_stages(&odd(l1), &odd(l2));
    let mut stages: Vec<Vec<(u16, u16)>> = se
        .into_iter()
        .zip(so)
        .map(|(mut e, o)| {
            e.extend(o);
            e
        })
        .collect();
    let ws: Vec<u16> = l1.iter().chain(l2.iter()).copied().collect();
    let fin: Vec<(u16, u16)> = (0..ws.len() / 2 - 1)
        .map(|i| (ws[2 * i + 1], ws[2 * i + 2]))
        .collect();
    stages.push(fin);
    stages
}

/// Builds the WMS/EHMS merger by liveness-pruning the full 4w-to-4w
/// odd-even merger: the second input list keeps only its first `live2`
/// wires (w for WMS; w/2 for EHMS, whose extra w/2 inputs are unused), the
/// outputs keep only the top w, and every CAS with a statically-known input
/// collapses to a wire.
fn pruned_odd_even(
    design: Design,
    w: usize,
    live2: usize,
) -> Result<ComparatorNetwork, ConfigError> {
    let ports = 4 * w;
    let l1: Vec<u16> = (0..2 * w as u16).collect();
    let l2: Vec<u16> = (2 * w as u16..4 * w as u16).collect();
    let raw = odd_even_merge_stages(&l1, &l2);

    // Forward pass: dead wires carry the direction-extreme loser value.
    // A CAS with one dead input degenerates to a wire; when the live value
    // sits on the losing port it crosses over, recorded as a move.
    let mut dead = vec![false; ports];
    dead[2 * w + live2..4 * w].fill(true);
    type Edges = Vec<(u16, u16)>;
    let mut fwd: Vec<(Edges, Edges)> = Vec::with_capacity(raw.len());
    for stage in &raw {
        let mut cas = Vec::new();
        let mut moves = Vec::new();
        for &(a, b) in stage {
            let (da, db) = (dead[a as usize], dead[b as usize]);
            match (da, db) {
                (false, false) => cas.push((a, b)),
                (false, true) => {} // live value already on the winning wire
                (true, false) => {
                    // live value crosses onto the winning wire
                    moves.push((b, a));
                    dead[a as usize] = false;
                    dead[b as usize] = true;
                }
                (true, true) => {}
            }
        }
        fwd.push((cas, moves));
    }

    // Backward pass: only the top w output wires are observed; comparators
    // with no observed output disappear.
    let mut used = vec![false; ports];
    used[..w].fill(true);
    let mut stages_rev: Vec<Stage> = Vec::with_capacity(fwd.len());
    for (cas_all, moves_all) in fwd.iter().rev() {
        let mut cas = Vec::new();
        for &(a, b) in cas_all {
            if used[a as usize] || used[b as usize] {
                cas.push((a, b));
                used[a as usize] = true;
                used[b as usize] = true;
            }
        }
        let mut moves = Vec::new();
        for &(src, dst) in moves_all.iter().rev() {
            if used[dst as usize] {
                used[src as usize] = true;
                used[dst as usize] = false;
                moves.push((src, dst));
            }
        }
        moves.reverse();
        stages_rev.push(Stage {
            kind: StageKind::Cas,
            cas,
            moves,
        });
    }
    stages_rev.reverse();

    let mut stages = vec![Stage::pass()]; // separate selector stage
    stages.extend(stages_rev);
    Ok(ComparatorNetwork {
        design,
        w,
        ports,
        outputs: (0..w as u16).collect(),
        stages,
    })
}

/// Compares the built topology against the closed-form count; used to
/// surface the known divergence for WMS/EHMS rather than hiding it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountComparison {
    pub design: Design,
    pub w: usize,
    pub formula: u64,
    pub built: u64,
}

impl CountComparison {
    pub fn matches(&self) -> bool {
        self.formula == self.built
    }
}

pub fn compare_count(design: Design, w: usize) -> Result<CountComparison, ConfigError> {
    let net = build_network(design, w)?;
    Ok(CountComparison {
        design,
        w,
        formula: comparator_count(design, w)?,
        built: net.comparators(),
    })
}

/// Deterministic combinational evaluation, stage by stage. MAX edges follow
/// the plain selector rule, which moves data identically to a CAS.
pub fn evaluate_network(
    net: &ComparatorNetwork,
    inputs: &[u64],
) -> Result<Vec<u64>, ValidationError> {
    if inputs.len() != net.ports {
        return Err(ValidationError::ArityMismatch {
            expected: net.ports,
            got: inputs.len(),
        });
    }
    let mut wires = inputs.to_vec();
    for stage in &net.stages {
        for &(a, b) in &stage.cas {
            if wires[a as usize] < wires[b as usize] {
                wires.swap(a as usize, b as usize);
            }
        }
        for &(src, dst) in &stage.moves {
            wires[dst as usize] = wires[src as usize];
        }
    }
    Ok(wires)
}

/// Reads a network's designated output wires from an evaluated wire row.
pub fn read_outputs(net: &ComparatorNetwork, wires: &[u64]) -> Vec<u64> {
    net.outputs.iter().map(|&p| wires[p as usize]).collect()
}

/// Export format for [`export_network`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ExportFormat {
    Dot,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!("unknown export format '{other}'")),
        }
    }
}

/// Serializes a network; byte-deterministic for a given network.
pub fn export_network(net: &ComparatorNetwork, format: ExportFormat) -> String {
    match format {
        ExportFormat::Json => serde_json::to_string_pretty(net).expect("network serializes"),
        ExportFormat::Dot => export_dot(net),
    }
}

/// Parses a network previously exported as JSON.
pub fn import_network(json: &str) -> Result<ComparatorNetwork, serde_json::Error> {
    serde_json::from_str(json)
}

fn export_dot(net: &ComparatorNetwork) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "digraph {}_w{} {{", net.design.name(), net.w);
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  node [shape=circle, fontsize=10];");
    for p in 0..net.ports {
        let _ = writeln!(out, "  in{p} [shape=point, xlabel=\"{p}\"];");
    }
    // producer[p] = name of the node that last drove port p
    let mut producer: Vec<String> = (0..net.ports).map(|p| format!("in{p}")).collect();
    for (s, stage) in net.stages.iter().enumerate() {
        let _ = writeln!(
            out,
            "  subgraph cluster_s{s} {{ label=\"stage {s}\"; style=dashed;"
        );
        for (k, _) in stage.cas.iter().enumerate() {
            let label = match stage.kind {
                StageKind::Max => "MAX",
                _ => "CAS",
            };
            let _ = writeln!(out, "    s{s}c{k} [label=\"{label}\"];");
        }
        let _ = writeln!(out, "  }}");
        for (k, &(a, b)) in stage.cas.iter().enumerate() {
            let node = format!("s{s}c{k}");
            let _ = writeln!(out, "  {} -> {node};", producer[a as usize]);
            let _ = writeln!(out, "  {} -> {node};", producer[b as usize]);
            producer[a as usize] = node.clone();
            producer[b as usize] = node;
        }
        for &(src, dst) in &stage.moves {
            producer[dst as usize] = producer[src as usize].clone();
        }
    }
    for (k, &p) in net.outputs.iter().enumerate() {
        let _ = writeln!(out, "  out{k} [shape=point, xlabel=\"out{k}\"];");
        let _ = writeln!(out, "  {} -> out{k};", producer[p as usize]);
    }
    out.push_str("}\n");
    out
}
