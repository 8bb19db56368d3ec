//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured numbers. Criteria and tolerances are pinned in code.

use flims_core::oracle::{
    check_multiset, is_rotated_bitonic, oracle_merge, oracle_merge_k, random_sorted_list,
};
use flims_core::sorter::{bench_csv, bench_sort, kernel_merge, sort, SortConfig};
use flims_core::tree::{build_tree, simulate, TreeMode};
use flims_core::{
    build_network, comparator_count, dequeue_balance, merge_full, pipeline_latency, Design,
    Direction, MergerConfig, Record, SortRule, Variant,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const ALL_VARIANTS: [Variant; 4] = [
    Variant::Plain,
    Variant::Skew,
    Variant::Stable,
    Variant::Flimsj,
];

fn recs(v: &[u64]) -> Vec<Record> {
    v.iter().map(|&x| Record(x)).collect()
}

/// Criterion 1: the trace command reproduces the reference w=4 execution
/// table byte-for-byte in the JSON trace fields, in under a second.
#[test]
fn a01_golden_trace() {
    let start = Instant::now();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_flims"))
        .args([
            "trace",
            "--w",
            "4",
            "--a",
            "29,26,26,17,16,11,5,4,3,3",
            "--b",
            "22,21,19,18,15,12,9,8,7,0",
            "--json",
        ])
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    let got: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();

    let want = serde_json::json!([
        {"cycle": 0, "deqA": [29, 26, 26, 17], "deqB": [22, 21, 19, 18],
         "cA": [null, null, null, null], "cB": [null, null, null, null],
         "selector": [null, null, null, null], "out": null},
        {"cycle": 1, "deqA": [16, 11, 5], "deqB": [15],
         "cA": [29, 26, 26, 17], "cB": [18, 19, 21, 22],
         "selector": [29, 26, 26, 22], "out": [29, 26, 26, 22]},
        {"cycle": 2, "deqA": [4], "deqB": [12, 9, 8],
         "cA": [16, 11, 5, 17], "cB": [18, 19, 21, 15],
         "selector": [18, 19, 21, 17], "out": [21, 19, 18, 17]},
        {"cycle": 3, "deqA": [3, 3], "deqB": [7, 0],
         "cA": [16, 11, 5, 4], "cB": [8, 9, 12, 15],
         "selector": [16, 11, 12, 15], "out": [16, 15, 12, 11]},
        {"cycle": 4, "deqA": [], "deqB": [],
         "cA": [3, 3, 5, 4], "cB": [8, 9, 0, 7],
         "selector": [8, 9, 5, 7], "out": [9, 8, 7, 5]},
        {"cycle": 5, "deqA": [], "deqB": [],
         "cA": [3, 3, null, 4], "cB": [null, null, 0, null],
         "selector": [3, 3, 0, 4], "out": [4, 3, 3, 0]},
    ]);
    let got_cycles = got["cycles"].as_array().unwrap();
    let want_cycles = want.as_array().unwrap();
    assert_eq!(got_cycles.len(), want_cycles.len(), "cycle count");
    for (g, w) in got_cycles.iter().zip(want_cycles) {
        assert_eq!(
            serde_json::to_string(g).unwrap(),
            serde_json::to_string(w).unwrap(),
            "trace cycle mismatch"
        );
    }
    // Cumulative output reads back as the merged sequence of the table.
    let merged: Vec<u64> = got_cycles
        .iter()
        .filter_map(|c| c["out"].as_array())
        .flatten()
        .filter_map(|v| v.as_u64())
        .collect();
    assert_eq!(
        merged,
        vec![29, 26, 26, 22, 21, 19, 18, 17, 16, 15, 12, 11, 9, 8, 7, 5, 4, 3, 3, 0]
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("[PASS] acceptance 01 golden-trace: 6 cycles byte-exact in {elapsed:?}");
}

/// Criterion 2: every variant matches the reference merge on 1000 seeded
/// random pairs per (variant, w), lengths 0-4096, duplicate-heavy and
/// unique mixes, with zero mismatches in under two minutes.
#[test]
fn a02_oracle_equivalence() {
    let start = Instant::now();
    let mut checked = 0u64;
    for variant in ALL_VARIANTS {
        let kv = variant == Variant::Stable;
        let rule = SortRule::new(Direction::Descending, kv);
        for (wi, w) in [2usize, 4, 8, 16, 32].into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(0xACCE9 + wi as u64 + variant as u64 * 100);
            for _ in 0..1000 {
                let a = random_sorted_list(&mut rng, 4096, rule);
                let b = random_sorted_list(&mut rng, 4096, rule);
                let cfg = MergerConfig {
                    w,
                    direction: Direction::Descending,
                    variant,
                    kv_mode: kv,
                };
                let (out, _) = merge_full(&a, &b, &cfg).unwrap();
                let want = oracle_merge(&a, &b, rule, kv);
                if kv {
                    assert_eq!(out, want, "{variant:?} w={w} (stable oracle)");
                } else {
                    assert_eq!(out, want, "{variant:?} w={w}");
                }
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "[PASS] acceptance 02 oracle-equivalence: {checked} merges, 0 mismatches, {elapsed:?}"
    );
}

/// Criterion 3: on 100 random merges at w in {4,8}, every cycle has a
/// rotated-bitonic selector row, selects exactly the top-w of the primed
/// heads, and keeps the round-robin offsets complementary.
#[test]
fn a03_selector_invariants() {
    let mut cycles_checked = 0u64;
    let mut merges = 0;
    'outer: for round in 0.. {
        for variant in ALL_VARIANTS {
            for w in [4usize, 8] {
                if merges == 100 {
                    break 'outer;
                }
                merges += 1;
                let mut rng = ChaCha8Rng::seed_from_u64(0x53EC + round * 31 + w as u64);
                let rule = SortRule::default();
                let a = random_sorted_list(&mut rng, 1500, rule);
                let b = random_sorted_list(&mut rng, 1500, rule);
                let (_, trace) = merge_full(&a, &b, &MergerConfig::new(w, variant)).unwrap();

                let (mut cum_a, mut cum_b) = (0usize, 0usize);
                let mut full_width = true;
                for c in &trace.cycles {
                    if c.cycle == 0 {
                        cum_a += c.deq_a.len();
                        cum_b += c.deq_b.len();
                        continue;
                    }
                    // (a) rotated bitonic, with sentinels carrying the
                    // descending extreme.
                    let row: Vec<u64> = c.selector.iter().map(|o| o.unwrap_or(0)).collect();
                    assert!(
                        is_rotated_bitonic(&row),
                        "{variant:?} w={w} cycle {}",
                        c.cycle
                    );

                    // (b) selector multiset equals the top-w of the primed heads.
                    let mut heads: Vec<Option<u64>> =
                        c.ca.iter().chain(c.cb.iter()).copied().collect();
                    heads.sort_unstable_by_key(|o| std::cmp::Reverse(o.map(|v| (1, v))));
                    let mut top: Vec<Option<u64>> = heads[..w].to_vec();
                    top.sort_unstable();
                    let mut sel = c.selector.clone();
                    sel.sort_unstable();
                    assert_eq!(sel, top, "{variant:?} w={w} cycle {}", c.cycle);

                    // (c) offset identity while refills stay full-width.
                    if full_width && c.deq_a.len() + c.deq_b.len() < w {
                        full_width = false;
                    }
                    cum_a += c.deq_a.len();
                    cum_b += c.deq_b.len();
                    if full_width {
                        assert_eq!(
                            (cum_a + cum_b) % w,
                            0,
                            "{variant:?} w={w} cycle {}",
                            c.cycle
                        );
                    }
                    cycles_checked += 1;
                }
            }
        }
    }
    println!("[PASS] acceptance 03 selector-invariants: {merges} merges, {cycles_checked} cycles, 0 violations");
}

/// Criterion 4, closed forms: comparator counts and latencies match the
/// reference table for all eight designs at w = 4..512, and the built
/// topologies agree exactly for the four fully-modeled designs.
#[test]
fn a04_comparator_table_and_modeled_topologies() {
    let ws = [4usize, 8, 16, 32, 64, 128, 256, 512];
    let counts: [(Design, [u64; 8]); 8] = [
        (Design::Basic, [12, 32, 80, 192, 448, 1024, 2304, 5120]),
        (Design::Pmt, [8, 20, 48, 112, 256, 576, 1280, 2816]),
        (Design::Mms, [17, 41, 97, 225, 513, 1153, 2561, 5633]),
        (Design::Vms, [17, 41, 97, 225, 513, 1153, 2561, 5633]),
        (Design::Wms, [16, 36, 80, 176, 384, 832, 1792, 3840]),
        (Design::Ehms, [16, 34, 74, 162, 354, 770, 1666, 3586]),
        (Design::Flims, [8, 20, 48, 112, 256, 576, 1280, 2816]),
        (Design::Flimsj, [8, 20, 48, 112, 256, 576, 1280, 2816]),
    ];
    let latencies: [(Design, [u64; 8]); 8] = [
        (Design::Basic, [4, 5, 6, 7, 8, 9, 10, 11]),
        (Design::Pmt, [5, 7, 9, 11, 13, 15, 17, 19]),
        (Design::Mms, [7, 9, 11, 13, 15, 17, 19, 21]),
        (Design::Vms, [7, 9, 11, 13, 15, 17, 19, 21]),
        (Design::Wms, [5, 6, 7, 8, 9, 10, 11, 12]),
        (Design::Ehms, [5, 6, 7, 8, 9, 10, 11, 12]),
        (Design::Flims, [3, 4, 5, 6, 7, 8, 9, 10]),
        (Design::Flimsj, [4, 5, 6, 7, 8, 9, 10, 11]),
    ];
    for (design, want) in counts {
        for (i, &w) in ws.iter().enumerate() {
            assert_eq!(
                comparator_count(design, w).unwrap(),
                want[i],
                "{design:?} w={w}"
            );
        }
    }
    for (design, want) in latencies {
        for (i, &w) in ws.iter().enumerate() {
            assert_eq!(
                pipeline_latency(design, w).unwrap(),
                want[i],
                "{design:?} w={w}"
            );
        }
    }
    for design in [Design::Flims, Design::Flimsj, Design::Basic, Design::Pmt] {
        for &w in &ws {
            let net = build_network(design, w).unwrap();
            assert_eq!(
                net.comparators(),
                comparator_count(design, w).unwrap(),
                "{design:?} w={w} topology count"
            );
            assert_eq!(
                net.stage_count(),
                pipeline_latency(design, w).unwrap(),
                "{design:?} w={w} stage count"
            );
        }
    }
    println!("[PASS] acceptance 04 comparator-table: 8 designs x 8 widths, formulas and modeled topologies agree");
}

/// Criterion 4, liveness-pruned topologies: the odd-even constructions for
/// WMS and EHMS must match the published formulas exactly at w in {4,8,16}.
///
/// KNOWN DIVERGENCE: input/output liveness pruning of the 4w-to-4w
/// odd-even merger provably removes more comparators than the published
/// designs retain (their counts encode internal feedback structure that a
/// combinational liveness argument cannot see). The assertion below states
/// the criterion faithfully and fails with the full comparison so the
/// divergence is reported, not hidden.
#[test]
fn a04_wms_ehms_pruned_topology_matches_table() {
    let mut report = String::from("\nliveness-pruned odd-even merger vs published counts\n");
    let mut diverged = false;
    for design in [Design::Wms, Design::Ehms] {
        for w in [4usize, 8, 16] {
            let cmp = flims_core::compare_count(design, w).unwrap();
            report.push_str(&format!(
                "  {:?} w={}: formula {} built {}{}\n",
                design,
                w,
                cmp.formula,
                cmp.built,
                if cmp.matches() {
                    ""
                } else {
                    "  <-- divergence"
                }
            ));
            diverged |= !cmp.matches();
        }
    }
    println!("{report}");
    assert!(
        !diverged,
        "pruned WMS/EHMS comparator counts diverge from the published formulas:{report}"
    );
    println!("[PASS] acceptance 04b wms/ehms pruned topologies match the table");
}

/// Criterion 5: every binary rotated-bitonic row at w <= 8 emerges sorted
/// from the butterfly, and the full selector+butterfly path agrees with the
/// reference merge on every 0/1 sorted input pair, in under ten seconds.
#[test]
fn a05_butterfly_zero_one_exhaustive() {
    let start = Instant::now();
    let mut rows_checked = 0u64;
    for w in [2usize, 4, 8] {
        for bits in 0u32..(1 << w) {
            let base: Vec<u64> = (0..w).map(|i| ((bits >> i) & 1) as u64).collect();
            if !is_rotated_bitonic(&base) {
                continue;
            }
            for rot in 0..w {
                let mut row = base.clone();
                row.rotate_left(rot);
                let got = flims_core::butterfly_sort_row(&row, Direction::Descending);
                let mut want = row.clone();
                want.sort_unstable_by(|a, b| b.cmp(a));
                assert_eq!(got, want, "w={w} bits={bits:b} rot={rot}");
                rows_checked += 1;
            }
        }
    }
    // Full path: all 0/1 sorted list pairs (every length and popcount
    // through 2w) through every variant at w <= 8; rotations arise
    // naturally as the banks advance.
    let mut merges = 0u64;
    for w in [2usize, 4, 8] {
        for la in 0..=2 * w {
            for ones_a in 0..=la {
                let a = recs(&[vec![1u64; ones_a], vec![0u64; la - ones_a]].concat());
                for lb in 0..=2 * w {
                    for ones_b in 0..=lb {
                        let b = recs(&[vec![1u64; ones_b], vec![0u64; lb - ones_b]].concat());
                        for variant in ALL_VARIANTS {
                            let cfg = MergerConfig::new(w, variant);
                            let (out, _) = merge_full(&a, &b, &cfg).unwrap();
                            let want = oracle_merge(&a, &b, SortRule::default(), false);
                            assert_eq!(out, want, "w={w} la={la}/{ones_a} lb={lb}/{ones_b}");
                            merges += 1;
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("[PASS] acceptance 05 zero-one exhaustive: {rows_checked} rows, {merges} merges, {elapsed:?}");
}

/// Criterion 6: key-value merges with at least half the keys duplicated
/// preserve the exact multiset of 64-bit words across 1000 seeds.
#[test]
fn a06_tie_record_integrity() {
    let rule = SortRule::new(Direction::Descending, true);
    for seed in 0..1000u64 {
        let variant = ALL_VARIANTS[(seed % 4) as usize];
        let mut rng = ChaCha8Rng::seed_from_u64(0x71E + seed);
        // Keys drawn from a tiny range so duplication is guaranteed heavy.
        let mk = |rng: &mut ChaCha8Rng, len: usize| -> Vec<Record> {
            use rand::Rng;
            let mut v: Vec<Record> = (0..len)
                .map(|i| Record::from_kv(rng.gen_range(0..8u32), i as u32))
                .collect();
            v.sort_by(|x, y| y.kv_key().cmp(&x.kv_key()));
            v
        };
        use rand::Rng;
        let la = rng.gen_range(0..512);
        let lb = rng.gen_range(0..512);
        let a = mk(&mut rng, la);
        let b = mk(&mut rng, lb);
        let dup_share = {
            let mut keys: Vec<u32> = a.iter().chain(b.iter()).map(|r| r.kv_key()).collect();
            keys.sort_unstable();
            let total = keys.len();
            keys.dedup();
            if total == 0 {
                1.0
            } else {
                1.0 - keys.len() as f64 / total as f64
            }
        };
        if la + lb > 32 {
            assert!(dup_share >= 0.5, "seed {seed}: duplicate share {dup_share}");
        }
        let cfg = MergerConfig {
            w: 8,
            direction: Direction::Descending,
            variant,
            kv_mode: true,
        };
        let (out, _) = merge_full(&a, &b, &cfg).unwrap();
        let input: Vec<Record> = a.iter().chain(b.iter()).copied().collect();
        assert!(rule.is_sorted(&out), "seed {seed}");
        assert!(
            check_multiset(&out, &input),
            "seed {seed} variant {variant:?}: word multiset corrupted"
        );
    }
    println!("[PASS] acceptance 06 tie-record integrity: 1000 seeds, zero word loss");
}

/// Criterion 7: the stable variant emits equal keys with A-records first
/// and original order preserved inside each input, across 1000 seeds.
#[test]
fn a07_stability() {
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x57AB + seed);
        use rand::Rng;
        // Payload tags: A-records carry indices below 1<<20, B above.
        let mk = |rng: &mut ChaCha8Rng, len: usize, base: u32| -> Vec<Record> {
            let mut v: Vec<Record> = (0..len)
                .map(|i| Record::from_kv(rng.gen_range(0..16u32), base + i as u32))
                .collect();
            v.sort_by(|x, y| {
                y.kv_key()
                    .cmp(&x.kv_key())
                    .then(x.kv_payload().cmp(&y.kv_payload()))
            });
            v
        };
        let la = rng.gen_range(0..256);
        let lb = rng.gen_range(0..256);
        let a = mk(&mut rng, la, 0);
        let b = mk(&mut rng, lb, 1 << 20);
        let cfg = MergerConfig {
            w: 8,
            direction: Direction::Descending,
            variant: Variant::Stable,
            kv_mode: true,
        };
        let (out, _) = merge_full(&a, &b, &cfg).unwrap();
        // Scan every equal-key group: payload tags must step upward, which
        // encodes both "A before B" and original order within each input.
        for pair in out.windows(2) {
            if pair[0].kv_key() == pair[1].kv_key() {
                assert!(
                    pair[0].kv_payload() < pair[1].kv_payload(),
                    "seed {seed}: group order violated ({} then {})",
                    pair[0].kv_payload(),
                    pair[1].kv_payload()
                );
            }
        }
        assert_eq!(out, oracle_merge(&a, &b, cfg.rule(), true), "seed {seed}");
    }
    println!("[PASS] acceptance 07 stability: 1000 seeds, every tie group in original order");
}

/// Criterion 8: on 10^5 all-equal keys the plain variant drains one input
/// first while the skew variant stays balanced at every even cycle, for
/// w in {4, 8, 16}.
#[test]
fn a08_skew_balance() {
    let n = 100_000usize;
    for w in [4usize, 8, 16] {
        let a = vec![Record(7); n];
        let b = vec![Record(7); n];
        let (_, trace) = merge_full(&a, &b, &MergerConfig::new(w, Variant::Plain)).unwrap();
        let (ta, tb, imbalance) = dequeue_balance(&trace);
        assert_eq!(ta, n as u64);
        assert_eq!(tb, n as u64);
        assert!(
            imbalance >= (n - w) as u64,
            "w={w}: plain imbalance {imbalance} < {}",
            n - w
        );

        let (_, trace) = merge_full(&a, &b, &MergerConfig::new(w, Variant::Skew)).unwrap();
        let (mut ca, mut cb) = (0u64, 0u64);
        for c in &trace.cycles {
            ca += c.deq_a.len() as u64;
            cb += c.deq_b.len() as u64;
            if c.cycle % 2 == 0 {
                assert!(
                    ca.abs_diff(cb) <= w as u64,
                    "w={w} cycle {}: |{ca}-{cb}| > {w}",
                    c.cycle
                );
            }
        }
    }
    println!("[PASS] acceptance 08 skew balance: plain drains one side, skew stays within w at even cycles (w=4,8,16)");
}

/// Criterion 9: an 8-leaf tree on random sorted inputs reaches >= 0.95 root
/// utilization in steady state and reproduces the 8-way reference merge;
/// on all-duplicate input the skew variant strictly out-runs plain.
#[test]
fn a09_tree_simulation() {
    let mut topo = build_tree(8, 8, TreeMode::Pmt).unwrap();
    topo.fifo_depth = 16; // deep enough to absorb random dequeue jitter
    let inputs: Vec<Vec<Record>> = (0..8)
        .map(|k| {
            let spec = flims_core::oracle::DatasetSpec::uniform(4096, 0x7EE + k as u64).sorted();
            flims_core::oracle::gen_dataset(&spec)
        })
        .collect();
    let (out, stats) = simulate(&topo, &inputs, false).unwrap();
    assert_eq!(out, oracle_merge_k(&inputs, SortRule::default()));
    assert!(
        stats.root_utilization >= 0.95,
        "root utilization {} over window {:?}",
        stats.root_utilization,
        stats.steady_window
    );

    let dups: Vec<Vec<Record>> = (0..8).map(|_| vec![Record(9); 2048]).collect();
    let (_, plain) = simulate(&topo, &dups, false).unwrap();
    let (out_skew, skew) = simulate(&topo, &dups, true).unwrap();
    assert_eq!(out_skew.len(), 8 * 2048);
    assert!(
        skew.throughput > plain.throughput,
        "skew {} vs plain {}",
        skew.throughput,
        plain.throughput
    );
    println!(
        "[PASS] acceptance 09 tree: utilization {:.3}, skew {:.2} > plain {:.2} elems/cycle on duplicates",
        stats.root_utilization, skew.throughput, plain.throughput
    );
}

/// Criterion 10: the batch kernel is byte-identical to the cycle model's
/// plain merge on 1000 random pairs at w in {8,16}; a 2^20-element sort
/// equals the reference sort and is invariant under the thread count.
#[test]
fn a10_kernel_equivalence_and_sort() {
    let start = Instant::now();
    for (wi, w) in [8usize, 16].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x4E51 + wi as u64);
        for i in 0..1000 {
            let kv = i % 2 == 0;
            let rule = SortRule::new(Direction::Descending, kv);
            let a = random_sorted_list(&mut rng, 2048, rule);
            let b = random_sorted_list(&mut rng, 2048, rule);
            let got = kernel_merge(&a, &b, w, rule).unwrap();
            let cfg = MergerConfig {
                w,
                direction: Direction::Descending,
                variant: Variant::Plain,
                kv_mode: kv,
            };
            let (want, _) = merge_full(&a, &b, &cfg).unwrap();
            assert_eq!(got, want, "w={w} pair {i}");
        }
    }

    let data =
        flims_core::oracle::gen_dataset(&flims_core::oracle::DatasetSpec::uniform(1 << 20, 0xB16));
    let mut sorted1 = data.clone();
    sort(&mut sorted1, &SortConfig::default()).unwrap();
    let mut want = data.clone();
    want.sort_by(|x, y| y.0.cmp(&x.0));
    assert_eq!(sorted1, want, "sort vs reference sort");
    let mut sorted4 = data.clone();
    sort(
        &mut sorted4,
        &SortConfig {
            threads: 4,
            ..SortConfig::default()
        },
    )
    .unwrap();
    assert_eq!(sorted1, sorted4, "thread-count invariance");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("[PASS] acceptance 10 kernel equivalence + 2^20 sort: {elapsed:?}");
}

/// Criterion 11: hardware synthesis results and absolute CPU throughput
/// curves are outside desk scale; the bench harness stands in, emitting
/// locally measured curves for inspection only.
#[test]
fn a11_local_bench_harness_stands_in_for_hardware_results() {
    let mut rows = Vec::new();
    for w in [8usize, 16, 32] {
        let cfg = SortConfig {
            kernel_w: w,
            chunk_size: 512.max(w * 32),
            ..SortConfig::default()
        };
        rows.extend(bench_sort(&[1 << 16], &cfg).unwrap());
    }
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(r.elems_per_sec > 0.0);
    }
    let csv = bench_csv(&rows);
    assert!(csv.starts_with("size,variant,threads,elems_per_sec\n"));
    println!("[PASS] acceptance 11 local measurement only (no hardware claims):\n{csv}");
}
