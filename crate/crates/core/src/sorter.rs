//! Batch-oriented merge kernel and complete mergesort.
//!
//! [`kernel_merge`] is the fast equivalent of the cycle model's plain merge:
//! it fetches whole w-batches (reversing each B batch so lane i faces bank
//! B_{w-1-i}), keeps the carried-over row in registers, selects lane-wise
//! winners, steers each whole-row refill with the single lane-0 comparison,
//! and finishes every row with log2(w) butterfly exchange rounds. The lane
//! operations are written as plain loops a vector unit could map directly.
//!
//! [`sort`] builds on it: a bitonic sort-in-chunks pass produces fixed-size
//! sorted runs, then recursive 2-way merge passes combine them. Both phases
//! parallelize over disjoint regions, and the result is bit-identical for
//! any thread count.

use crate::error::ConfigError;
use crate::merger::MergeError;
use crate::record::{Direction, Record, SortRule};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;
use std::time::Instant;

/// Configuration for the complete sort.
#[derive(Clone, Copy, Debug)]
pub struct SortConfig {
    /// Elements per initial sorted run; a power-of-two multiple of `kernel_w`.
    pub chunk_size: usize,
    /// Lane count of the merge kernel.
    pub kernel_w: usize,
    /// Worker threads for the chunk and merge phases.
    pub threads: usize,
    pub direction: Direction,
    pub kv_mode: bool,
    /// Stable mode: equal keys keep their original order (records are
    /// tracked with their input index through every pass).
    pub stable: bool,
}

impl Default for SortConfig {
    fn default() -> Self {
        SortConfig {
            chunk_size: 512,
            kernel_w: 16,
            threads: 1,
            direction: Direction::Descending,
            kv_mode: false,
            stable: false,
        }
    }
}

impl SortConfig {
    pub fn rule(&self) -> SortRule {
        SortRule::new(self.direction, self.kv_mode)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.kernel_w < 2 || !self.kernel_w.is_power_of_two() {
            return Err(ConfigError::BadLaneCount(self.kernel_w));
        }
        if !self.chunk_size.is_multiple_of(self.kernel_w)
            || !(self.chunk_size / self.kernel_w).is_power_of_two()
        {
            return Err(ConfigError::BadChunkSize {
                chunk: self.chunk_size,
                kernel_w: self.kernel_w,
            });
        }
        if self.threads == 0 {
            return Err(ConfigError::BadThreadCount);
        }
        Ok(())
    }
}

/// Sorted runs over a flat buffer, as (offset, length) spans that partition it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSet {
    pub runs: Vec<(usize, usize)>,
}

/// Strict emission-order comparison used by the kernel lanes.
trait LaneOrder<T>: Copy {
    fn beats(&self, a: &T, b: &T) -> bool;
}

#[derive(Clone, Copy)]
struct RuleOrder(SortRule);

impl LaneOrder<Record> for RuleOrder {
    #[inline]
    fn beats(&self, a: &Record, b: &Record) -> bool {
        self.0.beats(*a, *b)
    }
}

/// Stable composite: records tagged with input sequence numbers; ties in
/// key resolve toward the earlier sequence number, so no two elements ever
/// compare equal.
#[derive(Clone, Copy)]
struct StableOrder(SortRule);

impl LaneOrder<(Record, u64)> for StableOrder {
    #[inline]
    fn beats(&self, a: &(Record, u64), b: &(Record, u64)) -> bool {
        match self.0.emit_cmp(a.0, b.0) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => a.1 < b.1,
        }
    }
}

/// Runs independent jobs across `threads` workers; with one thread or one
/// job everything executes inline, and results are identical either way.
fn parallel_jobs<J: Send, F: Fn(J) + Sync>(jobs: Vec<J>, threads: usize, f: F) {
    if threads <= 1 || jobs.len() <= 1 {
        for j in jobs {
            f(j);
        }
        return;
    }
    let queue: Vec<Mutex<Option<J>>> = jobs.into_iter().map(|j| Mutex::new(Some(j))).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads.min(queue.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                if i >= queue.len() {
                    break;
                }
                if let Some(j) = queue[i].lock().unwrap().take() {
                    f(j);
                }
            });
        }
    });
}

/// Loads the batch at `pos` into the lane registers. A reversed load places
/// element `pos + w-1-i` in lane i, matching the bank pairing of the cycle
/// model; lanes beyond the end of the input are marked invalid.
#[inline]
fn load_batch<T: Copy>(
    src: &[T],
    pos: usize,
    rev: bool,
    vals: &mut [T],
    valid: &mut [bool],
) -> usize {
    let w = vals.len();
    for i in 0..w {
        let idx = if rev { pos + (w - 1 - i) } else { pos + i };
        if idx < src.len() {
            vals[i] = src[idx];
            valid[i] = true;
        } else {
            valid[i] = false;
        }
    }
    src.len().min(pos + w)
}

/// Core batch-merge loop shared by the plain and stable instantiations.
/// Fills `out` (whose length must equal `a.len() + b.len()`) with the merge.
fn kernel_merge_into<T: Copy, O: LaneOrder<T>>(
    a: &[T],
    b: &[T],
    w: usize,
    order: O,
    out: &mut [T],
) {
    let total = a.len() + b.len();
    debug_assert_eq!(out.len(), total);
    if total == 0 {
        return;
    }
    let fill = if a.is_empty() { b[0] } else { a[0] };
    let mut ca = vec![fill; w];
    let mut cb = vec![fill; w];
    let mut cr = vec![fill; w];
    let (mut va, mut vb, mut vr) = (vec![false; w], vec![false; w], vec![false; w]);
    let mut src = vec![true; w];
    let mut dir = vec![false; w];
    let mut top = vec![fill; w];
    let mut topv = vec![false; w];

    // Prime: first A row, first B row into the carried registers, second B
    // row prefetched.
    let mut apos = load_batch(a, 0, false, &mut ca, &mut va);
    let mut bpos = load_batch(b, 0, true, &mut cr, &mut vr);
    bpos = load_batch(b, bpos, true, &mut cb, &mut vb);

    let mut filled = 0usize;
    let mut guard = 0usize;
    while filled < total {
        guard += 1;
        assert!(guard <= total + 2, "kernel failed to make progress");

        for i in 0..w {
            let (av, avalid) = if src[i] {
                (ca[i], va[i])
            } else {
                (cr[i], vr[i])
            };
            let (bv, bvalid) = if src[i] {
                (cr[i], vr[i])
            } else {
                (cb[i], vb[i])
            };
            let win_a = avalid && (!bvalid || order.beats(&av, &bv));
            if win_a {
                top[i] = av;
                topv[i] = avalid;
            } else {
                top[i] = bv;
                topv[i] = bvalid;
            }
            dir[i] = !win_a;
        }
        // One comparison (lane 0) steers the whole-row refill.
        let dir0 = dir[0];
        for i in 0..w {
            if src[i] == dir[i] {
                src[i] = dir0;
                if dir0 {
                    cr[i] = cb[i];
                    vr[i] = vb[i];
                } else {
                    cr[i] = ca[i];
                    vr[i] = va[i];
                }
            }
        }
        if dir0 {
            bpos = load_batch(b, bpos, true, &mut cb, &mut vb);
        } else {
            apos = load_batch(a, apos, false, &mut ca, &mut va);
        }

        // Butterfly exchange rounds; invalid lanes sink to the tail.
        let mut stride = w / 2;
        while stride >= 1 {
            let mut block = 0;
            while block < w {
                for k in 0..stride {
                    let (lo, hi) = (block + k, block + k + stride);
                    let swap = topv[hi] && (!topv[lo] || order.beats(&top[hi], &top[lo]));
                    if swap {
                        top.swap(lo, hi);
                        topv.swap(lo, hi);
                    }
                }
                block += 2 * stride;
            }
            stride /= 2;
        }
        for i in 0..w {
            if topv[i] && filled < total {
                out[filled] = top[i];
                filled += 1;
            }
        }
    }
    debug_assert_eq!(apos, a.len());
    debug_assert_eq!(bpos, b.len());
}

/// Merges two sorted lists with the batch kernel. Output is identical to
/// the cycle model's plain merge at the same w, byte for byte.
pub fn kernel_merge(
    a: &[Record],
    b: &[Record],
    kernel_w: usize,
    rule: SortRule,
) -> Result<Vec<Record>, MergeError> {
    if kernel_w < 2 || !kernel_w.is_power_of_two() {
        return Err(ConfigError::BadLaneCount(kernel_w).into());
    }
    for (name, list) in [("A", a), ("B", b)] {
        if let Some(offset) = rule.first_unsorted_offset(list) {
            return Err(crate::error::ValidationError::UnsortedInput {
                name: name.to_string(),
                offset,
            }
            .into());
        }
    }
    let mut out = vec![Record(0); a.len() + b.len()];
    kernel_merge_into(a, b, kernel_w, RuleOrder(rule), &mut out);
    Ok(out)
}

/// In-place bitonic sorting network over a power-of-two slice; the
/// emission-order winner of each surviving comparison lands first.
fn bitonic_sort_slice<T: Copy, O: LaneOrder<T>>(arr: &mut [T], order: O) {
    let n = arr.len();
    debug_assert!(n.is_power_of_two());
    let mut k = 2;
    while k <= n {
        let mut j = k / 2;
        while j >= 1 {
            for i in 0..n {
                let l = i ^ j;
                if l > i {
                    let forward = (i & k) == 0;
                    let swap = if forward {
                        order.beats(&arr[l], &arr[i])
                    } else {
                        order.beats(&arr[i], &arr[l])
                    };
                    if swap {
                        arr.swap(i, l);
                    }
                }
            }
            j /= 2;
        }
        k *= 2;
    }
}

/// Sorts a possibly-partial chunk. Full power-of-two chunks sort in place;
/// a short tail pads out of band with invalid lanes that lose every
/// comparison, then trims back to its true length, so zero-valued records
/// are never confused with padding.
fn sort_chunk<T: Copy, O: LaneOrder<T>>(chunk: &mut [T], chunk_size: usize, order: O) {
    if chunk.len() == chunk_size {
        bitonic_sort_slice(chunk, order);
        return;
    }
    #[derive(Clone, Copy)]
    struct OptOrder<O>(O);
    impl<T, O: LaneOrder<T>> LaneOrder<Option<T>> for OptOrder<O> {
        #[inline]
        fn beats(&self, a: &Option<T>, b: &Option<T>) -> bool {
            match (a, b) {
                (Some(x), Some(y)) => self.0.beats(x, y),
                (Some(_), None) => true,
                _ => false,
            }
        }
    }
    let n = chunk.len().next_power_of_two();
    let mut padded: Vec<Option<T>> = chunk.iter().map(|&v| Some(v)).collect();
    padded.resize(n, None);
    bitonic_sort_slice(&mut padded, OptOrder(order));
    for (dst, v) in chunk.iter_mut().zip(padded.into_iter().flatten()) {
        *dst = v;
    }
}

fn run_spans(len: usize, chunk_size: usize) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut off = 0;
    while off < len {
        let l = chunk_size.min(len - off);
        runs.push((off, l));
        off += l;
    }
    runs
}

fn sort_chunks_impl<T: Copy + Send + Sync, O: LaneOrder<T> + Send + Sync>(
    buffer: &mut [T],
    chunk_size: usize,
    threads: usize,
    order: O,
) {
    let parts: Vec<&mut [T]> = buffer.chunks_mut(chunk_size).collect();
    parallel_jobs(parts, threads, |chunk| sort_chunk(chunk, chunk_size, order));
}

/// Sorts each chunk_size-sized span of the buffer with the bitonic network,
/// returning the resulting run layout.
pub fn sort_chunks(
    buffer: &mut [Record],
    chunk_size: usize,
    cfg: &SortConfig,
) -> Result<RunSet, ConfigError> {
    let cfg = SortConfig { chunk_size, ..*cfg };
    cfg.validate()?;
    sort_chunks_impl(buffer, chunk_size, cfg.threads, RuleOrder(cfg.rule()));
    Ok(RunSet {
        runs: run_spans(buffer.len(), chunk_size),
    })
}

/// One merge pass: pairs runs left to right; an odd trailing run is carried
/// up unmerged.
fn merge_pass<T: Copy + Send + Sync, O: LaneOrder<T> + Send + Sync>(
    src: &[T],
    dst: &mut [T],
    runs: &[(usize, usize)],
    w: usize,
    order: O,
    threads: usize,
) -> Vec<(usize, usize)> {
    let mut next_runs = Vec::with_capacity(runs.len().div_ceil(2));
    let mut jobs: Vec<(&[T], &[T], &mut [T])> = Vec::new();
    let mut rest = dst;
    let mut carved = 0usize;
    let mut i = 0;
    while i < runs.len() {
        if i + 1 < runs.len() {
            let (ao, al) = runs[i];
            let (bo, bl) = runs[i + 1];
            let len = al + bl;
            let (head, tail) = std::mem::take(&mut rest).split_at_mut(len);
            rest = tail;
            jobs.push((&src[ao..ao + al], &src[bo..bo + bl], head));
            next_runs.push((carved, len));
            carved += len;
            i += 2;
        } else {
            let (o, l) = runs[i];
            let (head, tail) = std::mem::take(&mut rest).split_at_mut(l);
            rest = tail;
            head.copy_from_slice(&src[o..o + l]);
            next_runs.push((carved, l));
            carved += l;
            i += 1;
        }
    }
    parallel_jobs(jobs, threads, |(a, b, out)| {
        kernel_merge_into(a, b, w, order, out);
    });
    next_runs
}

#[allow(clippy::ptr_arg)] // the ping-pong scratch clone wants the Vec
fn sort_impl<T: Copy + Send + Sync, O: LaneOrder<T> + Send + Sync>(
    buffer: &mut Vec<T>,
    chunk_size: usize,
    w: usize,
    threads: usize,
    order: O,
) {
    sort_chunks_impl(buffer, chunk_size, threads, order);
    let mut runs = run_spans(buffer.len(), chunk_size);
    if runs.len() <= 1 {
        return;
    }
    let mut scratch = buffer.clone();
    let mut in_buffer = true;
    while runs.len() > 1 {
        runs = if in_buffer {
            merge_pass(buffer, &mut scratch, &runs, w, order, threads)
        } else {
            merge_pass(&scratch, buffer, &runs, w, order, threads)
        };
        in_buffer = !in_buffer;
    }
    if !in_buffer {
        buffer.copy_from_slice(&scratch);
    }
}

/// Complete sort: bitonic chunks then recursive kernel merges. The output
/// is bit-identical for any `threads` value.
pub fn sort(buffer: &mut Vec<Record>, cfg: &SortConfig) -> Result<(), ConfigError> {
    cfg.validate()?;
    if buffer.len() <= 1 {
        return Ok(());
    }
    if cfg.stable {
        let rule = cfg.rule();
        let mut tagged: Vec<(Record, u64)> = buffer
            .iter()
            .enumerate()
            .map(|(i, &r)| (r, i as u64))
            .collect();
        sort_impl(
            &mut tagged,
            cfg.chunk_size,
            cfg.kernel_w,
            cfg.threads,
            StableOrder(rule),
        );
        for (dst, (r, _)) in buffer.iter_mut().zip(tagged) {
            *dst = r;
        }
    } else {
        sort_impl(
            buffer,
            cfg.chunk_size,
            cfg.kernel_w,
            cfg.threads,
            RuleOrder(cfg.rule()),
        );
    }
    Ok(())
}

/// One throughput measurement row.
#[derive(Clone, Debug)]
pub struct BenchRow {
    pub size: usize,
    pub variant: String,
    pub threads: usize,
    pub elems_per_sec: f64,
}

/// Times [`sort`] on deterministic random data for each size. Measurement
/// only; no pass/fail semantics.
pub fn bench_sort(sizes: &[usize], cfg: &SortConfig) -> Result<Vec<BenchRow>, ConfigError> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let spec = crate::oracle::DatasetSpec::uniform(size, 0xF11A5 ^ size as u64);
        let data = crate::oracle::gen_dataset(&spec);
        let mut buf = data.clone();
        let start = Instant::now();
        sort(&mut buf, cfg)?;
        let secs = start.elapsed().as_secs_f64();
        rows.push(BenchRow {
            size,
            variant: format!(
                "{}-w{}",
                if cfg.stable { "stable" } else { "plain" },
                cfg.kernel_w
            ),
            threads: cfg.threads,
            elems_per_sec: if secs > 0.0 {
                size as f64 / secs
            } else {
                f64::INFINITY
            },
        });
    }
    Ok(rows)
}

/// Renders bench rows as CSV: `size,variant,threads,elems_per_sec`.
pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("size,variant,threads,elems_per_sec\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.0}\n",
            r.size, r.variant, r.threads, r.elems_per_sec
        ));
    }
    out
}
