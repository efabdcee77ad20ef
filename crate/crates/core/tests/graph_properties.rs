//! Property tests over randomly generated graphs: neighbor ordering,
//! undirected symmetry, and load determinism.

use std::collections::BTreeSet;

use proptest::prelude::*;

use giglite_core::graph::{EdgeInput, EdgeTypeDef, NodeTypeDef};
use giglite_core::table::RawTable;
use giglite_core::{Direction, EdgeTypeTriple, Graph, GraphSchema, NodeRef};

fn schema(directed: bool) -> GraphSchema {
    GraphSchema {
        node_types: vec![NodeTypeDef {
            name: "n".to_string(),
            feature_dim: Some(1),
        }],
        edge_types: vec![EdgeTypeDef {
            triple: EdgeTypeTriple::new("n", "rel", "n"),
            directed,
            edge_feature_dim: Some(0),
        }],
    }
}

fn build(n: u64, pairs: &[(u64, u64)], directed: bool) -> Option<Graph> {
    let nodes = (0..n).map(|i| (NodeRef::new("n", i), vec![i as f32])).collect();
    // Dedup pairs up front (canonicalized for undirected) so construction
    // never trips the duplicate-edge check.
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for &(s, d) in pairs {
        let key = if directed {
            (s, d)
        } else {
            (s.min(d), s.max(d))
        };
        if seen.insert(key) {
            edges.push(EdgeInput {
                triple_idx: 0,
                src: NodeRef::new("n", s),
                dst: NodeRef::new("n", d),
                features: None,
            });
        }
    }
    Graph::from_parts(schema(directed), nodes, edges).ok()
}

proptest! {
    #[test]
    fn neighbors_sorted_ascending(
        n in 2u64..30,
        raw in proptest::collection::vec((0u64..30, 0u64..30), 0..80),
        directed in any::<bool>(),
    ) {
        let pairs: Vec<(u64, u64)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
        let g = build(n, &pairs, directed).unwrap();
        for id in 0..n {
            for dir in [Direction::Out, Direction::In] {
                let ns = g.neighbors(&NodeRef::new("n", id), 0, dir).unwrap();
                let ids: Vec<u64> = ns.iter().map(|x| x.node.node_id).collect();
                let mut sorted = ids.clone();
                sorted.sort_unstable();
                prop_assert_eq!(&ids, &sorted);
            }
        }
    }

    #[test]
    fn undirected_symmetry(
        n in 2u64..30,
        raw in proptest::collection::vec((0u64..30, 0u64..30), 0..80),
    ) {
        let pairs: Vec<(u64, u64)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
        let g = build(n, &pairs, false).unwrap();
        for u in 0..n {
            let nu: BTreeSet<u64> = g
                .neighbors(&NodeRef::new("n", u), 0, Direction::Out)
                .unwrap()
                .iter()
                .map(|x| x.node.node_id)
                .collect();
            for &v in &nu {
                let nv: BTreeSet<u64> = g
                    .neighbors(&NodeRef::new("n", v), 0, Direction::Out)
                    .unwrap()
                    .iter()
                    .map(|x| x.node.node_id)
                    .collect();
                prop_assert!(nv.contains(&u), "{v} missing reverse neighbor {u}");
            }
        }
    }
}

#[test]
fn load_is_deterministic_for_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let node_path = dir.path().join("nodes.tsv");
    let edge_path = dir.path().join("edges.tsv");

    let mut nodes = RawTable::new(vec!["node_type".into(), "node_id".into(), "f_0".into()]);
    for i in 0..6u64 {
        nodes.rows.push(vec!["n".into(), i.to_string(), format!("{i}.5")]);
    }
    nodes.write(&node_path).unwrap();

    let mut edges = RawTable::new(vec![
        "src_type".into(),
        "relation".into(),
        "dst_type".into(),
        "src_id".into(),
        "dst_id".into(),
    ]);
    for (s, d) in [(0u64, 1u64), (1, 2), (2, 5), (3, 4)] {
        edges.rows.push(vec![
            "n".into(),
            "rel".into(),
            "n".into(),
            s.to_string(),
            d.to_string(),
        ]);
    }
    edges.write(&edge_path).unwrap();

    let g1 = Graph::load(schema(false), &[&node_path], &[&edge_path]).unwrap();
    let g2 = Graph::load(schema(false), &[&node_path], &[&edge_path]).unwrap();
    assert_eq!(g1.node_count(), g2.node_count());
    assert_eq!(g1.edge_count(), g2.edge_count());
    for id in 0..6 {
        let a = g1.neighbors(&NodeRef::new("n", id), 0, Direction::Out).unwrap();
        let b = g2.neighbors(&NodeRef::new("n", id), 0, Direction::Out).unwrap();
        let av: Vec<_> = a.iter().map(|x| (x.node.clone(), x.edge)).collect();
        let bv: Vec<_> = b.iter().map(|x| (x.node.clone(), x.edge)).collect();
        assert_eq!(av, bv);
    }
    // Edge order in memory is the file order.
    let in_order: Vec<(u64, u64)> = g1
        .edges_of(0)
        .map(|(s, d, _)| (s.node_id, d.node_id))
        .collect();
    assert_eq!(in_order, vec![(0, 1), (1, 2), (2, 5), (3, 4)]);
}
