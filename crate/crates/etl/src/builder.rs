//! Graph-definition utilities: co-engagement sparsification, degree capping,
//! and supervision-edge extraction from event logs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use giglite_core::graph::EdgeInput;
use giglite_core::table::{parse_i64, parse_u64, RawTable};
use giglite_core::{derive_seed, DetRng, Direction, Graph, NodeRef};

use crate::error::EtlError;

// ---------------------------------------------------------------------------
// Jaccard co-engagement sparsification
// ---------------------------------------------------------------------------

/// Build an item-item edge list from bipartite (user, item) engagements.
///
/// Emits `(i, j, w)` for `i < j` with `w = |U_i ∩ U_j| / |U_i ∪ U_j| >= threshold`,
/// where `U_x` is the set of users engaging item `x`. Computed exactly by an
/// inverted-index join; output sorted by `(i, j)`.
pub fn jaccard_sparsify(
    bipartite_edges: &[(u64, u64)],
    threshold: f64,
) -> Result<Vec<(u64, u64, f64)>, EtlError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(EtlError::Config(format!(
            "jaccard threshold {threshold} outside [0, 1]"
        )));
    }
    // user -> sorted distinct items; also dedups the input.
    let mut by_user: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    for &(user, item) in bipartite_edges {
        by_user.entry(user).or_default().insert(item);
    }
    let mut item_degree: HashMap<u64, u64> = HashMap::new();
    for items in by_user.values() {
        for &i in items {
            *item_degree.entry(i).or_insert(0) += 1;
        }
    }
    let mut pair_counts: HashMap<(u64, u64), u64> = HashMap::new();
    for items in by_user.values() {
        let items: Vec<u64> = items.iter().copied().collect();
        for a in 0..items.len() {
            for b in a + 1..items.len() {
                *pair_counts.entry((items[a], items[b])).or_insert(0) += 1;
            }
        }
    }
    let mut out: Vec<(u64, u64, f64)> = Vec::new();
    for (&(i, j), &c) in &pair_counts {
        let union = item_degree[&i] + item_degree[&j] - c;
        let w = c as f64 / union as f64;
        if w >= threshold {
            out.push((i, j, w));
        }
    }
    out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Degree capping
// ---------------------------------------------------------------------------

/// Cap every node's per-triple, per-direction degree at `cap`.
///
/// Kept neighbors are chosen by seeded uniform sampling without replacement,
/// deterministic per (seed, node). Directed triples cap out-degrees first,
/// then in-degrees over the survivors; undirected triples keep an edge only
/// when both endpoints select it, so no degree can exceed the cap.
pub fn cap_degree(graph: &Graph, cap: usize, seed: u64) -> Result<Graph, EtlError> {
    assert!(cap >= 1, "cap_degree requires cap >= 1");
    let schema = graph.schema().clone();
    let mut kept_edges: Vec<EdgeInput> = Vec::new();

    for (ti, def) in schema.edge_types.iter().enumerate() {
        let n_edges = graph.edge_count_of_triple(ti);
        let mut keep = vec![true; n_edges];
        if def.directed {
            // Pass 1: each source keeps at most `cap` of its out-edges.
            cap_pass(graph, ti, Direction::Out, cap, seed, "cap_out", &keep)
                .into_iter()
                .for_each(|e| keep[e] = false);
            // Pass 2: each destination keeps at most `cap` of the survivors.
            cap_pass(graph, ti, Direction::In, cap, seed, "cap_in", &keep)
                .into_iter()
                .for_each(|e| keep[e] = false);
        } else {
            // Each endpoint picks a keep-set; an edge survives only if both
            // endpoints picked it.
            let chosen = undirected_keep_sets(graph, ti, cap, seed);
            for (e, k) in keep.iter_mut().enumerate() {
                *k = chosen[e] == 2;
            }
        }
        for (e, (src, dst, feats)) in graph.edges_of(ti).enumerate() {
            if keep[e] {
                kept_edges.push(EdgeInput {
                    triple_idx: ti,
                    src,
                    dst,
                    features: feats.map(|f| f.to_vec()),
                });
            }
        }
    }

    let nodes: Vec<(NodeRef, Vec<f32>)> = graph
        .all_nodes()
        .into_iter()
        .map(|n| {
            let f = graph.node_features(&n).unwrap().to_vec();
            (n, f)
        })
        .collect();
    Ok(Graph::from_parts(schema, nodes, kept_edges)?)
}

/// Returns the edge indices a capped pass drops.
fn cap_pass(
    graph: &Graph,
    triple_idx: usize,
    dir: Direction,
    cap: usize,
    seed: u64,
    domain: &str,
    alive: &[bool],
) -> Vec<usize> {
    let mut dropped = Vec::new();
    let type_name = if matches!(dir, Direction::Out) {
        &graph.schema().edge_types[triple_idx].triple.src
    } else {
        &graph.schema().edge_types[triple_idx].triple.dst
    };
    let t = graph.schema().node_type_index(type_name).unwrap();
    for &id in graph.node_ids_of_type(t) {
        let node = NodeRef::new(type_name.clone(), id);
        let entries: Vec<usize> = graph
            .neighbors(&node, triple_idx, dir)
            .unwrap()
            .iter()
            .map(|n| n.edge.index as usize)
            .filter(|&e| alive[e])
            .collect();
        if entries.len() <= cap {
            continue;
        }
        let mut rng = DetRng::new(derive_seed(seed, domain, id, triple_idx as u64));
        let picked = rng.sample_without_replacement(entries.len(), cap);
        let picked: BTreeSet<usize> = picked.into_iter().collect();
        for (i, &e) in entries.iter().enumerate() {
            if !picked.contains(&i) {
                dropped.push(e);
            }
        }
    }
    dropped
}

/// Per-edge count of endpoints that selected it (2 = kept).
fn undirected_keep_sets(graph: &Graph, triple_idx: usize, cap: usize, seed: u64) -> Vec<u8> {
    let n_edges = graph.edge_count_of_triple(triple_idx);
    let mut votes = vec![0u8; n_edges];
    let def = &graph.schema().edge_types[triple_idx];
    let mut sides: Vec<&String> = vec![&def.triple.src];
    if def.triple.dst != def.triple.src {
        sides.push(&def.triple.dst);
    }
    for type_name in sides {
        let t = graph.schema().node_type_index(type_name).unwrap();
        for &id in graph.node_ids_of_type(t) {
            let node = NodeRef::new(type_name.clone(), id);
            let entries: Vec<usize> = graph
                .neighbors(&node, triple_idx, Direction::Out)
                .unwrap()
                .iter()
                .map(|n| n.edge.index as usize)
                .collect();
            let picked: BTreeSet<usize> = if entries.len() <= cap {
                (0..entries.len()).collect()
            } else {
                let mut rng = DetRng::new(derive_seed(seed, "cap_und", id, triple_idx as u64));
                rng.sample_without_replacement(entries.len(), cap)
                    .into_iter()
                    .collect()
            };
            for (i, &e) in entries.iter().enumerate() {
                if picked.contains(&i) {
                    // Self-loops appear once in the merged neighbor list and
                    // count as both endpoint votes.
                    let (s, d) = graph.edge_endpoints(giglite_core::EdgeId {
                        triple: triple_idx as u32,
                        index: e as u32,
                    });
                    votes[e] += if s == d { 2 } else { 1 };
                }
            }
        }
    }
    votes
}

// ---------------------------------------------------------------------------
// Supervision edges
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SupervisionEdge {
    pub src: NodeRef,
    pub dst: NodeRef,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisionEdgeSet {
    pub edges: Vec<SupervisionEdge>,
    /// When set, supervision positives are excluded from message passing
    /// during sampling (default keeps them).
    pub disjoint_from_messages: bool,
}

impl SupervisionEdgeSet {
    pub fn positives(&self) -> impl Iterator<Item = &SupervisionEdge> {
        self.edges
            .iter()
            .filter(|e| e.polarity == Polarity::Positive)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &SupervisionEdge> {
        self.edges
            .iter()
            .filter(|e| e.polarity == Polarity::Negative)
    }
}

#[derive(Debug, Clone)]
pub struct EventRow {
    pub src: NodeRef,
    pub dst: NodeRef,
    pub timestamp: i64,
    pub kind: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupervisionPolicy {
    /// Inclusive timestamp window.
    pub window: (i64, i64),
    pub positive_kinds: Vec<String>,
    #[serde(default)]
    pub negative_kinds: Vec<String>,
    #[serde(default)]
    pub disjoint_from_messages: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SupervisionReport {
    pub rows_in: usize,
    pub outside_window: usize,
    pub unknown_kind: usize,
    pub missing_endpoint: usize,
    pub emitted: usize,
}

/// Extract supervision edges from event rows.
///
/// Rows inside the window with a positive kind become positive edges,
/// negative kinds become negative edges; duplicates collapse. A row whose
/// endpoint is missing from the graph is dropped and counted, not fatal.
/// The same (src, dst) may carry both polarities.
pub fn build_supervision_set(
    events: &[EventRow],
    graph: &Graph,
    policy: &SupervisionPolicy,
) -> (SupervisionEdgeSet, SupervisionReport) {
    let mut report = SupervisionReport {
        rows_in: events.len(),
        ..Default::default()
    };
    let mut set: BTreeSet<SupervisionEdge> = BTreeSet::new();
    for ev in events {
        if ev.timestamp < policy.window.0 || ev.timestamp > policy.window.1 {
            report.outside_window += 1;
            continue;
        }
        let polarity = if policy.positive_kinds.iter().any(|k| k == &ev.kind) {
            Polarity::Positive
        } else if policy.negative_kinds.iter().any(|k| k == &ev.kind) {
            Polarity::Negative
        } else {
            report.unknown_kind += 1;
            continue;
        };
        if !graph.contains(&ev.src) || !graph.contains(&ev.dst) {
            report.missing_endpoint += 1;
            continue;
        }
        set.insert(SupervisionEdge {
            src: ev.src.clone(),
            dst: ev.dst.clone(),
            polarity,
        });
    }
    report.emitted = set.len();
    (
        SupervisionEdgeSet {
            edges: set.into_iter().collect(),
            disjoint_from_messages: policy.disjoint_from_messages,
        },
        report,
    )
}

/// Parse an event table: `(src_type, src_id, dst_type, dst_id, timestamp,
/// event_kind)`.
pub fn parse_event_table(table: &RawTable) -> Result<Vec<EventRow>, EtlError> {
    let expected = [
        "src_type",
        "src_id",
        "dst_type",
        "dst_id",
        "timestamp",
        "event_kind",
    ];
    if table.columns != expected {
        return Err(EtlError::Schema(format!(
            "event table columns must be {expected:?}"
        )));
    }
    let mut out = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let line = i + 3;
        out.push(EventRow {
            src: NodeRef::new(row[0].clone(), parse_u64(&row[1], line, "src_id")?),
            dst: NodeRef::new(row[2].clone(), parse_u64(&row[3], line, "dst_id")?),
            timestamp: parse_i64(&row[4], line, "timestamp")?,
            kind: row[5].clone(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use giglite_core::graph::{EdgeTypeDef, NodeTypeDef};
    use giglite_core::{EdgeTypeTriple, GraphSchema};

    fn line_graph(n: u64) -> Graph {
        let schema = GraphSchema {
            node_types: vec![NodeTypeDef {
                name: "n".to_string(),
                feature_dim: Some(0),
            }],
            edge_types: vec![EdgeTypeDef {
                triple: EdgeTypeTriple::new("n", "e", "n"),
                directed: false,
                edge_feature_dim: Some(0),
            }],
        };
        let nodes = (0..n).map(|i| (NodeRef::new("n", i), vec![])).collect();
        let edges = (0..n - 1)
            .map(|i| EdgeInput {
                triple_idx: 0,
                src: NodeRef::new("n", i),
                dst: NodeRef::new("n", i + 1),
                features: None,
            })
            .collect();
        Graph::from_parts(schema, nodes, edges).unwrap()
    }

    fn star_graph(spokes: u64, directed: bool) -> Graph {
        let schema = GraphSchema {
            node_types: vec![NodeTypeDef {
                name: "n".to_string(),
                feature_dim: Some(0),
            }],
            edge_types: vec![EdgeTypeDef {
                triple: EdgeTypeTriple::new("n", "e", "n"),
                directed,
                edge_feature_dim: Some(0),
            }],
        };
        let nodes = (0..=spokes).map(|i| (NodeRef::new("n", i), vec![])).collect();
        let edges = (1..=spokes)
            .map(|i| EdgeInput {
                triple_idx: 0,
                src: NodeRef::new("n", 0),
                dst: NodeRef::new("n", i),
                features: None,
            })
            .collect();
        Graph::from_parts(schema, nodes, edges).unwrap()
    }

    #[test]
    fn jaccard_basic_threshold() {
        // U_i = {a,b,c}, U_j = {b,c,d}: |∩| = 2, |∪| = 4, w = 0.5.
        let edges = vec![
            (1u64, 10u64),
            (2, 10),
            (3, 10),
            (2, 20),
            (3, 20),
            (4, 20),
        ];
        let out = jaccard_sparsify(&edges, 0.4).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].0, out[0].1), (10, 20));
        assert!((out[0].2 - 0.5).abs() < 1e-12);
        let none = jaccard_sparsify(&edges, 0.6).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn jaccard_empty_input() {
        assert!(jaccard_sparsify(&[], 0.5).unwrap().is_empty());
    }

    #[test]
    fn jaccard_threshold_out_of_range() {
        assert!(jaccard_sparsify(&[], 1.5).is_err());
    }

    #[test]
    fn jaccard_symmetric_under_relabeling_and_order() {
        let edges = vec![(1u64, 5u64), (1, 6), (2, 5), (2, 6), (3, 6), (3, 7)];
        let base = jaccard_sparsify(&edges, 0.2).unwrap();
        let mut shuffled = edges.clone();
        shuffled.reverse();
        assert_eq!(jaccard_sparsify(&shuffled, 0.2).unwrap(), base);
        // Permuting user ids leaves the weighted item-item set unchanged.
        let renamed: Vec<(u64, u64)> = edges.iter().map(|&(u, i)| (u + 100, i)).collect();
        assert_eq!(jaccard_sparsify(&renamed, 0.2).unwrap(), base);
    }

    #[test]
    fn jaccard_monotone_in_threshold() {
        let edges: Vec<(u64, u64)> = (0..40u64)
            .flat_map(|u| (0..5u64).map(move |k| (u, (u * 7 + k * 3) % 13)))
            .collect();
        let lo = jaccard_sparsify(&edges, 0.1).unwrap();
        let hi = jaccard_sparsify(&edges, 0.5).unwrap();
        let lo_set: BTreeSet<(u64, u64)> = lo.iter().map(|&(i, j, _)| (i, j)).collect();
        for (i, j, _) in hi {
            assert!(lo_set.contains(&(i, j)));
        }
    }

    #[test]
    fn cap_degree_forced_cardinality() {
        let g = star_graph(5, false);
        let capped = cap_degree(&g, 3, 7).unwrap();
        assert_eq!(
            capped.degree(&NodeRef::new("n", 0), 0, Direction::Out),
            3
        );
        // Kept neighbors are a subset of the originals.
        for nbr in capped
            .neighbors(&NodeRef::new("n", 0), 0, Direction::Out)
            .unwrap()
        {
            assert!((1..=5).contains(&nbr.node.node_id));
        }
    }

    #[test]
    fn cap_not_binding_leaves_graph_unchanged() {
        let g = line_graph(4);
        let capped = cap_degree(&g, 10, 3).unwrap();
        assert_eq!(capped.edge_count(), g.edge_count());
    }

    #[test]
    fn cap_degree_deterministic() {
        let g = star_graph(8, true);
        let a = cap_degree(&g, 3, 99).unwrap();
        let b = cap_degree(&g, 3, 99).unwrap();
        let ea: Vec<_> = a.edges_of(0).map(|(s, d, _)| (s.node_id, d.node_id)).collect();
        let eb: Vec<_> = b.edges_of(0).map(|(s, d, _)| (s.node_id, d.node_id)).collect();
        assert_eq!(ea, eb);
        let c = cap_degree(&g, 3, 100).unwrap();
        let ec: Vec<_> = c.edges_of(0).map(|(s, d, _)| (s.node_id, d.node_id)).collect();
        // Different seed is allowed to differ (and does for this star).
        assert_eq!(ec.len(), 3);
    }

    #[test]
    fn cap_degree_bounds_both_directions() {
        // Directed bipartite-ish blob where both in and out degrees exceed
        // the cap before capping.
        let schema = GraphSchema {
            node_types: vec![NodeTypeDef {
                name: "n".to_string(),
                feature_dim: Some(0),
            }],
            edge_types: vec![EdgeTypeDef {
                triple: EdgeTypeTriple::new("n", "e", "n"),
                directed: true,
                edge_feature_dim: Some(0),
            }],
        };
        let n = 12u64;
        let nodes = (0..n).map(|i| (NodeRef::new("n", i), vec![])).collect();
        let mut edges = Vec::new();
        for s in 0..n {
            for d in 0..n {
                if s != d && (s + d) % 2 == 0 {
                    edges.push(EdgeInput {
                        triple_idx: 0,
                        src: NodeRef::new("n", s),
                        dst: NodeRef::new("n", d),
                        features: None,
                    });
                }
            }
        }
        let g = Graph::from_parts(schema, nodes, edges).unwrap();
        let capped = cap_degree(&g, 2, 5).unwrap();
        for i in 0..n {
            let node = NodeRef::new("n", i);
            assert!(capped.degree(&node, 0, Direction::Out) <= 2);
            assert!(capped.degree(&node, 0, Direction::In) <= 2);
            // Never increases.
            assert!(
                capped.degree(&node, 0, Direction::Out) <= g.degree(&node, 0, Direction::Out)
            );
        }
    }

    #[test]
    fn cap_degree_undirected_bounds() {
        let schema = GraphSchema {
            node_types: vec![NodeTypeDef {
                name: "n".to_string(),
                feature_dim: Some(0),
            }],
            edge_types: vec![EdgeTypeDef {
                triple: EdgeTypeTriple::new("n", "e", "n"),
                directed: false,
                edge_feature_dim: Some(0),
            }],
        };
        let n = 10u64;
        let nodes = (0..n).map(|i| (NodeRef::new("n", i), vec![])).collect();
        let mut edges = Vec::new();
        for s in 0..n {
            for d in s + 1..n {
                edges.push(EdgeInput {
                    triple_idx: 0,
                    src: NodeRef::new("n", s),
                    dst: NodeRef::new("n", d),
                    features: None,
                });
            }
        }
        let g = Graph::from_parts(schema, nodes, edges).unwrap();
        let capped = cap_degree(&g, 3, 11).unwrap();
        for i in 0..n {
            assert!(capped.degree(&NodeRef::new("n", i), 0, Direction::Out) <= 3);
        }
        // Subset of input edges.
        let orig: BTreeSet<(u64, u64)> = g
            .edges_of(0)
            .map(|(s, d, _)| (s.node_id, d.node_id))
            .collect();
        for (s, d, _) in capped.edges_of(0) {
            assert!(orig.contains(&(s.node_id, d.node_id)));
        }
    }

    #[test]
    fn supervision_window_and_polarity() {
        let g = line_graph(4);
        let policy = SupervisionPolicy {
            window: (0, 10),
            positive_kinds: vec!["friend".to_string()],
            negative_kinds: vec!["block".to_string()],
            disjoint_from_messages: false,
        };
        let mk = |s: u64, d: u64, t: i64, k: &str| EventRow {
            src: NodeRef::new("n", s),
            dst: NodeRef::new("n", d),
            timestamp: t,
            kind: k.to_string(),
        };
        let (set, report) = build_supervision_set(&[mk(0, 1, 5, "friend")], &g, &policy);
        assert_eq!(set.positives().count(), 1);
        assert_eq!(report.emitted, 1);

        let (set, _) = build_supervision_set(&[mk(0, 1, 11, "friend")], &g, &policy);
        assert!(set.edges.is_empty());

        // Both polarities on the same pair are retained.
        let (set, _) = build_supervision_set(
            &[mk(0, 1, 5, "friend"), mk(0, 1, 6, "block")],
            &g,
            &policy,
        );
        assert_eq!(set.positives().count(), 1);
        assert_eq!(set.negatives().count(), 1);
    }

    #[test]
    fn supervision_missing_endpoint_counted() {
        let g = line_graph(4);
        let policy = SupervisionPolicy {
            window: (0, 10),
            positive_kinds: vec!["friend".to_string()],
            negative_kinds: vec![],
            disjoint_from_messages: false,
        };
        let events = vec![EventRow {
            src: NodeRef::new("n", 0),
            dst: NodeRef::new("n", 99),
            timestamp: 1,
            kind: "friend".to_string(),
        }];
        let (set, report) = build_supervision_set(&events, &g, &policy);
        assert!(set.edges.is_empty());
        assert_eq!(report.missing_endpoint, 1);
    }

    #[test]
    fn event_table_parsing() {
        let t = RawTable {
            columns: [
                "src_type", "src_id", "dst_type", "dst_id", "timestamp", "event_kind",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            rows: vec![vec![
                "n".to_string(),
                "0".to_string(),
                "n".to_string(),
                "1".to_string(),
                "5".to_string(),
                "friend".to_string(),
            ]],
        };
        let rows = parse_event_table(&t).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].timestamp, 5);
        assert_eq!(rows[0].kind, "friend");
    }
}
