mod common;

use std::collections::BTreeSet;

use leakcover::fixtures;
use leakcover::hdl::{elaborate, parse_rtl, FlatNetlist};
use leakcover::ifa::{enumerate_paths, EdgeGraph, LabelConfig, Labels, Limits, TaintSim};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn load(src: &str, labels: &str) -> (FlatNetlist, Labels) {
    let n = elaborate(&parse_rtl(src).unwrap()).unwrap();
    let l = LabelConfig::from_toml(labels).unwrap().resolve(&n).unwrap();
    (n, l)
}

/// Every simple path of at most `max_edges` edges ending in a sink, by
/// scanning the whole edge list at each step.
fn brute_force_paths(g: &EdgeGraph, labels: &Labels, max_edges: usize) -> BTreeSet<Vec<usize>> {
    fn go(
        g: &EdgeGraph,
        labels: &Labels,
        at: leakcover::ifa::BitRange,
        visited: &mut Vec<leakcover::hdl::SignalId>,
        stack: &mut Vec<usize>,
        max: usize,
        out: &mut BTreeSet<Vec<usize>>,
    ) {
        if stack.len() == max {
            return;
        }
        for e in &g.edges {
            if e.from.signal != at.signal || !e.from.overlaps(&at) {
                continue;
            }
            if visited.contains(&e.to.signal) || labels.declassifiers.contains(&e.to.signal) {
                continue;
            }
            stack.push(e.id);
            visited.push(e.to.signal);
            if labels.sinks.iter().any(|s| s.overlaps(&e.to)) {
                out.insert(stack.clone());
            }
            go(g, labels, e.to, visited, stack, max, out);
            visited.pop();
            stack.pop();
        }
    }
    let mut out = BTreeSet::new();
    for s in &labels.sources {
        go(g, labels, *s, &mut vec![s.signal], &mut Vec::new(), max_edges, &mut out);
    }
    out
}

#[test]
fn mux_has_one_path() {
    let (n, l) = load(fixtures::MUX, fixtures::MUX_LABELS);
    let set = enumerate_paths(&n, &EdgeGraph::build(&n), &l, Limits::default());
    assert_eq!(set.paths.len(), 1);
    assert_eq!(set.paths[0].signal_names(&n), ["secret", "out"]);
    assert!(set.paths[0].edges[0].is_conditional());
    assert!(!set.limits_hit());
}

#[test]
fn no_route_means_no_paths() {
    let src = "module m(input clk, input [3:0] k, input [3:0] p, output [3:0] o);
        reg [3:0] r; always @(posedge clk) r <= k; assign o = (r == 4'd3) ? p : 4'd0; endmodule";
    let (n, l) = load(src, "sensitive = [{ signal = \"k\" }]\nuntrusted = [{ signal = \"o\" }]");
    let set = enumerate_paths(&n, &EdgeGraph::build(&n), &l, Limits::default());
    assert!(set.paths.is_empty(), "selects are not data flows");
}

#[test]
fn minirv_paths_match_brute_force() {
    for trap in [0, 1] {
        let inputs = common::inputs(trap, None);
        let g = EdgeGraph::build(&inputs.netlist);
        let set = enumerate_paths(&inputs.netlist, &g, &inputs.labels, Limits::default());
        let oracle = brute_force_paths(&g, &inputs.labels, Limits::default().max_edges);
        let got: BTreeSet<Vec<usize>> = set.paths.iter().map(|p| p.edge_ids()).collect();
        assert_eq!(got, oracle, "TRAP_ILLEGAL={trap}");
        assert_eq!(set.paths.len(), if trap == 1 { 5 } else { 6 });
        // every path leaves the key port and never enters the cipher unit
        for p in &set.paths {
            let names = p.signal_names(&inputs.netlist);
            assert_eq!(names[0], "key_rdata");
            assert!(!names.iter().any(|s| s.starts_with("u_aes")), "{names:?}");
        }
    }
}

#[test]
fn ranking_prefers_fewer_conditions_then_shorter() {
    let inputs = common::inputs(1, None);
    let set = enumerate_paths(&inputs.netlist, &EdgeGraph::build(&inputs.netlist), &inputs.labels, Limits::default());
    let scores: Vec<_> = set.paths.iter().map(|p| (p.score(), p.edge_ids())).collect();
    let mut sorted = scores.clone();
    sorted.sort();
    assert_eq!(scores, sorted);
    for (i, p) in set.paths.iter().enumerate() {
        assert_eq!(p.id, format!("P{}", i + 1));
    }
}

#[test]
fn enumeration_is_deterministic() {
    let a = common::inputs(1, None);
    let b = common::inputs(1, None);
    let pa = enumerate_paths(&a.netlist, &EdgeGraph::build(&a.netlist), &a.labels, Limits::default());
    let pb = enumerate_paths(&b.netlist, &EdgeGraph::build(&b.netlist), &b.labels, Limits::default());
    assert_eq!(pa.paths, pb.paths);
}

#[test]
fn raising_limits_never_drops_paths() {
    let inputs = common::inputs(0, None);
    let g = EdgeGraph::build(&inputs.netlist);
    let ids = |max_paths, max_edges| -> BTreeSet<Vec<usize>> {
        enumerate_paths(&inputs.netlist, &g, &inputs.labels, Limits { max_paths, max_edges })
            .paths
            .iter()
            .map(|p| p.edge_ids())
            .collect()
    };
    let mut prev: Option<BTreeSet<Vec<usize>>> = None;
    for max_edges in 1..=8 {
        for max_paths in 1..=8 {
            let cur = ids(max_paths, max_edges);
            assert!(cur.len() <= max_paths);
            assert!(cur.is_superset(&ids(max_paths.saturating_sub(1), max_edges)));
            assert!(cur.is_superset(&ids(max_paths, max_edges - 1)));
            prev = Some(cur);
        }
    }
    assert!(prev.is_some());
    let small = enumerate_paths(&inputs.netlist, &g, &inputs.labels, Limits { max_paths: 2, max_edges: 8 });
    assert!(small.truncated);
    let short = enumerate_paths(&inputs.netlist, &g, &inputs.labels, Limits { max_paths: 256, max_edges: 2 });
    assert!(short.depth_limited);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Taint that reaches the output at run time implies a reported path.
    #[test]
    fn dynamic_taint_implies_static_path(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = common::circuits::random_circuit(&mut rng, 0);
        let labels = LabelConfig::from_toml("sensitive = [{ signal = \"i0\" }]\nuntrusted = [{ signal = \"o\" }]")
            .unwrap()
            .resolve(&c.netlist)
            .unwrap();
        let set = enumerate_paths(&c.netlist, &EdgeGraph::build(&c.netlist), &labels, Limits { max_paths: 10_000, max_edges: 16 });
        prop_assert!(!set.limits_hit());
        let mut t = TaintSim::new(&c.netlist, &labels);
        let inputs = c.netlist.free_inputs();
        let mut leaked = false;
        for _ in 0..24 {
            let drive: Vec<_> = inputs.iter().map(|&i| (i, rng.gen::<u64>() & 3)).collect();
            t.apply(&drive);
            leaked |= t.is_tainted(&labels.sinks[0]);
            t.tick();
        }
        if leaked {
            prop_assert!(!set.paths.is_empty(), "taint reached o but no path:\n{}", c.source);
        }
    }
}
