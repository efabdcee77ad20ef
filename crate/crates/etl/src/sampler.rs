//! Seeded, fanout-bounded k-hop subgraph sampling and training-sample
//! generation (the tabularization backend).
//!
//! Sampling is driven entirely by seeds derived from node identity, so the
//! subgraph rooted at a node is the same regardless of traversal order,
//! worker count, or which other roots are sampled alongside it. Subgraph
//! edges are oriented toward the root (src is the hop-farther node), which
//! is the direction the trainer consumes messages in.
//!
//! Directed triples expand along out-edges (the root aggregates the nodes
//! its edges point at, along the reversed edge); undirected triples expand
//! both directions merged. Revisited nodes are deduplicated but every
//! traversed edge is retained, so the result is a subgraph, not a tree.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use giglite_core::graph::{AdjEntry, NodeHandle};
use giglite_core::{derive_seed, DetRng, EdgeId, Graph, GraphError, NodeRef};

use crate::builder::SupervisionEdgeSet;
use crate::error::EtlError;

// ---------------------------------------------------------------------------
// Fanouts
// ---------------------------------------------------------------------------

/// Per-hop neighbor caps. `per_triple` overrides the default schedule for
/// specific edge types (keyed by triple label); override schedules must have
/// the same number of hops. A fanout of 0 prunes that hop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanoutSpec {
    pub default: Vec<u32>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_triple: BTreeMap<String, Vec<u32>>,
}

impl FanoutSpec {
    pub fn uniform(hops: usize, fanout: u32) -> FanoutSpec {
        FanoutSpec {
            default: vec![fanout; hops],
            per_triple: BTreeMap::new(),
        }
    }

    pub fn hops(&self) -> usize {
        self.default.len()
    }

    pub fn validate(&self) -> Result<(), EtlError> {
        if self.default.is_empty() {
            return Err(EtlError::Config("fanout list must be non-empty".to_string()));
        }
        for (label, hops) in &self.per_triple {
            if hops.len() != self.default.len() {
                return Err(EtlError::Config(format!(
                    "per-triple fanouts for {label} have {} hops, default has {}",
                    hops.len(),
                    self.default.len()
                )));
            }
        }
        Ok(())
    }

    /// Fanout schedule per schema triple index.
    pub fn resolve(&self, graph: &Graph) -> Vec<Vec<u32>> {
        graph
            .schema()
            .edge_types
            .iter()
            .map(|et| {
                self.per_triple
                    .get(&et.triple.label())
                    .cloned()
                    .unwrap_or_else(|| self.default.clone())
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Rooted subgraphs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphNode {
    #[serde(rename = "t")]
    pub node_type: String,
    #[serde(rename = "id")]
    pub node_id: u64,
    #[serde(rename = "h")]
    pub hop: u32,
    #[serde(rename = "x")]
    pub features: Vec<f32>,
}

impl SubgraphNode {
    pub fn node_ref(&self) -> NodeRef {
        NodeRef::new(self.node_type.clone(), self.node_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphEdge {
    /// Label of the edge's triple, e.g. `user|friend|user`.
    #[serde(rename = "r")]
    pub triple: String,
    #[serde(rename = "st")]
    pub src_type: String,
    #[serde(rename = "s")]
    pub src_id: u64,
    #[serde(rename = "dt")]
    pub dst_type: String,
    #[serde(rename = "d")]
    pub dst_id: u64,
    #[serde(rename = "f", default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f32>>,
}

impl SubgraphEdge {
    pub fn src_ref(&self) -> NodeRef {
        NodeRef::new(self.src_type.clone(), self.src_id)
    }

    pub fn dst_ref(&self) -> NodeRef {
        NodeRef::new(self.dst_type.clone(), self.dst_id)
    }
}

/// The k-hop message-passing neighborhood of one root node. Node and edge
/// lists are canonically ordered (nodes by hop then identity, edges by
/// triple then endpoints) so equal subgraphs serialize to equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootedSubgraph {
    pub root: NodeRef,
    pub nodes: Vec<SubgraphNode>,
    pub edges: Vec<SubgraphEdge>,
}

impl RootedSubgraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn max_hop(&self) -> u32 {
        self.nodes.iter().map(|n| n.hop).max().unwrap_or(0)
    }
}

/// Per-triple edge visibility used for split-masked sampling. Edges not in
/// the mask are invisible to expansion, exactly as if absent from the graph.
#[derive(Debug, Clone)]
pub struct EdgeMask {
    allowed: Vec<Vec<bool>>,
}

impl EdgeMask {
    pub fn from_predicate(graph: &Graph, pred: impl Fn(usize, u32) -> bool) -> EdgeMask {
        let allowed = (0..graph.schema().edge_types.len())
            .map(|ti| {
                (0..graph.edge_count_of_triple(ti) as u32)
                    .map(|e| pred(ti, e))
                    .collect()
            })
            .collect();
        EdgeMask { allowed }
    }

    pub fn allows(&self, triple_idx: usize, edge: u32) -> bool {
        self.allowed[triple_idx][edge as usize]
    }
}

/// Sample the fanout-bounded k-hop neighborhood of `root`.
///
/// At each hop every frontier node draws `min(degree, fanout[h])` neighbors
/// per triple, chosen without replacement by a PRNG seeded from
/// (global seed, "khop", node id, hop) over the node's full (mask-filtered)
/// neighbor list — the draw never depends on traversal state, which is what
/// lets a stateless remote service reproduce it. The traversal then drops
/// draws that landed on nodes visited at an earlier hop; draws converging on
/// the same new node within one hop keep their edges with the node recorded
/// once. With fanout >= degree this degenerates to BFS over unvisited
/// neighbors.
pub fn sample_k_hop(
    graph: &Graph,
    root: &NodeRef,
    fanouts: &FanoutSpec,
    seed: u64,
    mask: Option<&EdgeMask>,
) -> Result<RootedSubgraph, EtlError> {
    fanouts.validate()?;
    let root_h = graph
        .resolve(root)
        .ok_or_else(|| GraphError::UnknownNode(root.clone()))?;
    let schedules = fanouts.resolve(graph);

    struct EdgeRec {
        triple: usize,
        src: NodeHandle,
        dst: NodeHandle,
        edge: u32,
    }

    let mut visited: HashMap<NodeHandle, u32> = HashMap::new();
    visited.insert(root_h, 0);
    let mut frontier = vec![root_h];
    let mut edges: Vec<EdgeRec> = Vec::new();

    for hop in 0..fanouts.hops() {
        let mut next: Vec<NodeHandle> = Vec::new();
        for &v in &frontier {
            let vid = graph.handle_id(v);
            for ti in 0..graph.schema().edge_types.len() {
                let Some(nbr_type) = graph.expansion_neighbor_type(ti, v.type_idx) else {
                    continue;
                };
                let fanout = schedules[ti][hop] as usize;
                if fanout == 0 {
                    continue;
                }
                let entries = graph.expansion_entries(ti, v);
                let candidates: Vec<AdjEntry> = match mask {
                    None => entries.to_vec(),
                    Some(m) => entries
                        .iter()
                        .filter(|e| m.allows(ti, e.edge))
                        .copied()
                        .collect(),
                };
                let chosen: Vec<AdjEntry> = if candidates.len() <= fanout {
                    candidates
                } else {
                    let mut rng = DetRng::new(derive_seed(seed, "khop", vid, hop as u64));
                    rng.sample_without_replacement(candidates.len(), fanout)
                        .into_iter()
                        .map(|i| candidates[i])
                        .collect()
                };
                for entry in chosen {
                    let u = NodeHandle {
                        type_idx: nbr_type,
                        row: entry.nbr_row,
                    };
                    // Draws on nodes from earlier hops are dropped, edge
                    // included; a node first reached this hop keeps every
                    // converging edge but is recorded once.
                    match visited.get(&u) {
                        Some(&tag) if tag <= hop as u32 => continue,
                        Some(_) => {}
                        None => {
                            visited.insert(u, hop as u32 + 1);
                            next.push(u);
                        }
                    }
                    edges.push(EdgeRec {
                        triple: ti,
                        src: u,
                        dst: v,
                        edge: entry.edge,
                    });
                }
            }
        }
        next.sort_unstable();
        frontier = next;
    }

    // Canonical order, then hydrate features as the final pass.
    let mut node_list: Vec<(NodeHandle, u32)> = visited.into_iter().collect();
    node_list.sort_unstable_by_key(|&(h, hop)| (hop, h.type_idx, h.row));
    let nodes = node_list
        .into_iter()
        .map(|(h, hop)| {
            let nref = graph.handle_ref(h);
            SubgraphNode {
                node_type: nref.node_type,
                node_id: nref.node_id,
                hop,
                features: graph.features_of(h).to_vec(),
            }
        })
        .collect();

    edges.sort_unstable_by_key(|e| (e.triple, e.src, e.dst));
    let edges = edges
        .into_iter()
        .map(|e| {
            let src = graph.handle_ref(e.src);
            let dst = graph.handle_ref(e.dst);
            let features = graph
                .edge_features(EdgeId {
                    triple: e.triple as u32,
                    index: e.edge,
                })
                .map(|f| f.to_vec());
            SubgraphEdge {
                triple: graph.schema().edge_types[e.triple].triple.label(),
                src_type: src.node_type,
                src_id: src.node_id,
                dst_type: dst.node_type,
                dst_id: dst.node_id,
                features,
            }
        })
        .collect();

    Ok(RootedSubgraph {
        root: root.clone(),
        nodes,
        edges,
    })
}

// ---------------------------------------------------------------------------
// Training samples
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleKind {
    #[serde(rename = "node-classification")]
    NodeClassification,
    #[serde(rename = "node-anchor-link-prediction")]
    NodeAnchorLinkPrediction,
}

impl SampleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleKind::NodeClassification => "node-classification",
            SampleKind::NodeAnchorLinkPrediction => "node-anchor-link-prediction",
        }
    }

    pub fn parse(s: &str) -> Option<SampleKind> {
        match s {
            "node-classification" => Some(SampleKind::NodeClassification),
            "node-anchor-link-prediction" => Some(SampleKind::NodeAnchorLinkPrediction),
            _ => None,
        }
    }
}

/// One serialized training (or inference) record. Positive and hard-negative
/// nodes are the roots of their attached subgraphs. Link-prediction samples
/// carry at least one positive; node samples carry a label when used for
/// training and none when used as an inference carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub kind: SampleKind,
    pub anchor: RootedSubgraph,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positives: Vec<RootedSubgraph>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hard_negatives: Vec<RootedSubgraph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u32>,
}

impl TrainingSample {
    pub fn validate(&self) -> Result<(), EtlError> {
        match self.kind {
            SampleKind::NodeAnchorLinkPrediction => {
                if self.positives.is_empty() {
                    return Err(EtlError::Record {
                        line: 0,
                        msg: format!(
                            "link-prediction sample for {} has no positives",
                            self.anchor.root
                        ),
                    });
                }
            }
            SampleKind::NodeClassification => {
                if !self.positives.is_empty() || !self.hard_negatives.is_empty() {
                    return Err(EtlError::Record {
                        line: 0,
                        msg: format!(
                            "node sample for {} carries positives/negatives",
                            self.anchor.root
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum SampleMode<'a> {
    /// Positives are the anchor's message-graph neighbors.
    SelfSupervised,
    /// Positives (and hard negatives) come from user-defined supervision
    /// edges, decoupled from topology.
    Supervised(&'a SupervisionEdgeSet),
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub fanouts: FanoutSpec,
    pub n_pos: usize,
    pub n_hard_neg: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SamplerReport {
    pub anchors_total: usize,
    pub anchors_skipped: usize,
    pub samples_emitted: usize,
}

/// Generate link-prediction samples for every eligible anchor, in root-sorted
/// order regardless of worker count.
pub fn generate_link_samples(
    graph: &Graph,
    mode: SampleMode<'_>,
    cfg: &SamplerConfig,
) -> Result<(Vec<TrainingSample>, SamplerReport), EtlError> {
    if cfg.n_pos < 1 {
        return Err(EtlError::Config("n_pos must be >= 1".to_string()));
    }
    cfg.fanouts.validate()?;

    // Positive candidates per anchor, sorted; the message mask when
    // supervision is flagged disjoint from messages.
    let (anchors, pos_cands, neg_cands, mask) = match &mode {
        SampleMode::SelfSupervised => {
            let anchors = graph.all_nodes();
            (anchors, None, None, None)
        }
        SampleMode::Supervised(set) => {
            let mut pos: BTreeMap<NodeRef, Vec<NodeRef>> = BTreeMap::new();
            for e in set.positives() {
                pos.entry(e.src.clone()).or_default().push(e.dst.clone());
            }
            let mut neg: BTreeMap<NodeRef, Vec<NodeRef>> = BTreeMap::new();
            for e in set.negatives() {
                neg.entry(e.src.clone()).or_default().push(e.dst.clone());
            }
            for v in pos.values_mut().chain(neg.values_mut()) {
                v.sort();
                v.dedup();
            }
            let anchors: Vec<NodeRef> = pos.keys().cloned().collect();
            let mask = if set.disjoint_from_messages {
                Some(supervision_mask(graph, set))
            } else {
                None
            };
            (anchors, Some(pos), Some(neg), mask)
        }
    };

    let mut report = SamplerReport {
        anchors_total: anchors.len(),
        ..Default::default()
    };

    let results: Vec<Option<TrainingSample>> = anchors
        .par_iter()
        .map(|anchor| {
            let cands: Vec<NodeRef> = match &pos_cands {
                Some(map) => map.get(anchor).cloned().unwrap_or_default(),
                None => message_neighbors(graph, anchor),
            };
            if cands.is_empty() {
                return Ok(None);
            }
            let picked = pick(&cands, cfg.n_pos, cfg.seed, "pos", anchor.node_id);
            let negs: Vec<NodeRef> = match &neg_cands {
                Some(map) => {
                    let c = map.get(anchor).cloned().unwrap_or_default();
                    pick(&c, cfg.n_hard_neg, cfg.seed, "neg", anchor.node_id)
                }
                None => Vec::new(),
            };
            let mask_ref = mask.as_ref();
            let anchor_sg = sample_k_hop(graph, anchor, &cfg.fanouts, cfg.seed, mask_ref)?;
            let mut positives = Vec::with_capacity(picked.len());
            for p in &picked {
                positives.push(sample_k_hop(graph, p, &cfg.fanouts, cfg.seed, mask_ref)?);
            }
            let mut hard_negatives = Vec::with_capacity(negs.len());
            for nref in &negs {
                hard_negatives.push(sample_k_hop(graph, nref, &cfg.fanouts, cfg.seed, mask_ref)?);
            }
            Ok(Some(TrainingSample {
                kind: SampleKind::NodeAnchorLinkPrediction,
                anchor: anchor_sg,
                positives,
                hard_negatives,
                label: None,
            }))
        })
        .collect::<Result<Vec<_>, EtlError>>()?;

    let mut samples = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Some(s) => samples.push(s),
            None => report.anchors_skipped += 1,
        }
    }
    report.samples_emitted = samples.len();
    Ok((samples, report))
}

fn pick(cands: &[NodeRef], n: usize, seed: u64, domain: &str, anchor_id: u64) -> Vec<NodeRef> {
    if n == 0 || cands.is_empty() {
        return Vec::new();
    }
    if cands.len() <= n {
        return cands.to_vec();
    }
    let mut rng = DetRng::new(derive_seed(seed, domain, anchor_id, 0));
    rng.sample_without_replacement(cands.len(), n)
        .into_iter()
        .map(|i| cands[i].clone())
        .collect()
}

/// Self-supervised positive candidates: the anchor's message-graph neighbors
/// (out-direction for directed triples, merged for undirected), deduplicated
/// and sorted.
pub fn message_neighbors(graph: &Graph, node: &NodeRef) -> Vec<NodeRef> {
    let Some(h) = graph.resolve(node) else {
        return Vec::new();
    };
    let mut out: BTreeSet<NodeRef> = BTreeSet::new();
    for ti in 0..graph.schema().edge_types.len() {
        let Some(nbr_type) = graph.expansion_neighbor_type(ti, h.type_idx) else {
            continue;
        };
        let name = &graph.schema().node_types[nbr_type as usize].name;
        for e in graph.expansion_entries(ti, h) {
            out.insert(NodeRef::new(
                name.clone(),
                graph.node_ids_of_type(nbr_type as usize)[e.nbr_row as usize],
            ));
        }
    }
    out.into_iter().collect()
}

fn supervision_mask(graph: &Graph, set: &SupervisionEdgeSet) -> EdgeMask {
    let positives: HashSet<(NodeRef, NodeRef)> = set
        .positives()
        .map(|e| ordered_pair(&e.src, &e.dst))
        .collect();
    EdgeMask::from_predicate(graph, |ti, e| {
        let (s, d) = graph.edge_endpoints(EdgeId {
            triple: ti as u32,
            index: e,
        });
        !positives.contains(&ordered_pair(&s, &d))
    })
}

/// Unordered pair identity, canonical by (type, id).
pub fn ordered_pair(a: &NodeRef, b: &NodeRef) -> (NodeRef, NodeRef) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// One label-free node sample per graph node, in sorted order; the stream the
/// inferencer consumes to embed every node.
pub fn generate_inference_samples(
    graph: &Graph,
    fanouts: &FanoutSpec,
    seed: u64,
) -> Result<Vec<TrainingSample>, EtlError> {
    let nodes = graph.all_nodes();
    nodes
        .par_iter()
        .map(|n| {
            Ok(TrainingSample {
                kind: SampleKind::NodeClassification,
                anchor: sample_k_hop(graph, n, fanouts, seed, None)?,
                positives: Vec::new(),
                hard_negatives: Vec::new(),
                label: None,
            })
        })
        .collect::<Result<Vec<_>, EtlError>>()
}

/// Node-classification samples for labeled nodes.
pub fn generate_node_samples(
    graph: &Graph,
    labels: &BTreeMap<NodeRef, u32>,
    fanouts: &FanoutSpec,
    seed: u64,
) -> Result<Vec<TrainingSample>, EtlError> {
    labels
        .iter()
        .map(|(n, &label)| {
            Ok(TrainingSample {
                kind: SampleKind::NodeClassification,
                anchor: sample_k_hop(graph, n, fanouts, seed, None)?,
                positives: Vec::new(),
                hard_negatives: Vec::new(),
                label: Some(label),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Sample files
// ---------------------------------------------------------------------------

pub const SAMPLES_HEADER_PREFIX: &str = "# giglite-samples v1 kind=";

pub fn samples_to_string(kind: SampleKind, samples: &[TrainingSample]) -> Result<String, EtlError> {
    let mut out = String::new();
    out.push_str(SAMPLES_HEADER_PREFIX);
    out.push_str(kind.as_str());
    out.push('\n');
    for (i, s) in samples.iter().enumerate() {
        if s.kind != kind {
            return Err(EtlError::Record {
                line: i + 2,
                msg: format!(
                    "sample kind {} does not match stream kind {}",
                    s.kind.as_str(),
                    kind.as_str()
                ),
            });
        }
        let json = serde_json::to_string(s).map_err(|e| EtlError::Record {
            line: i + 2,
            msg: format!("serialize: {e}"),
        })?;
        out.push_str(&json);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_samples(
    path: &Path,
    kind: SampleKind,
    samples: &[TrainingSample],
) -> Result<(), EtlError> {
    let text = samples_to_string(kind, samples)?;
    let mut f = std::fs::File::create(path).map_err(|e| EtlError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    f.write_all(text.as_bytes()).map_err(|e| EtlError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn samples_from_str(text: &str) -> Result<(SampleKind, Vec<TrainingSample>), EtlError> {
    let mut lines = text.split_inclusive('\n');
    let header = lines.next().ok_or_else(|| EtlError::Record {
        line: 1,
        msg: "empty sample file".to_string(),
    })?;
    if !header.ends_with('\n') {
        return Err(EtlError::Record {
            line: 1,
            msg: "truncated header line".to_string(),
        });
    }
    let header = header.trim_end_matches('\n');
    let kind_str = header
        .strip_prefix(SAMPLES_HEADER_PREFIX)
        .ok_or_else(|| EtlError::Record {
            line: 1,
            msg: format!("expected header `{SAMPLES_HEADER_PREFIX}<kind>`"),
        })?;
    let kind = SampleKind::parse(kind_str).ok_or_else(|| EtlError::Record {
        line: 1,
        msg: format!("unknown sample kind `{kind_str}`"),
    })?;
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if !line.ends_with('\n') {
            return Err(EtlError::Record {
                line: line_no,
                msg: "truncated record (no trailing newline)".to_string(),
            });
        }
        let sample: TrainingSample =
            serde_json::from_str(line.trim_end_matches('\n')).map_err(|e| EtlError::Record {
                line: line_no,
                msg: format!("malformed record: {e}"),
            })?;
        if sample.kind != kind {
            return Err(EtlError::Record {
                line: line_no,
                msg: format!(
                    "record kind {} does not match stream kind {}",
                    sample.kind.as_str(),
                    kind.as_str()
                ),
            });
        }
        samples.push(sample);
    }
    Ok((kind, samples))
}

pub fn read_samples(path: &Path) -> Result<(SampleKind, Vec<TrainingSample>), EtlError> {
    let text = std::fs::read_to_string(path).map_err(|e| EtlError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    samples_from_str(&text)
}
