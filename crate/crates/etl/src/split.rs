//! Globally consistent, hash-based train/validation/test assignment.
//!
//! A subject's bucket is a pure function of (subject identity, seed,
//! fractions): `h = fnv1a64(seed ‖ subject bytes)`, mapped to `[0, 1)` and
//! thresholded by cumulative fractions. No coordination, no state; any
//! worker anywhere computes the same answer.
//!
//! Subject byte layouts (all integers little-endian, labels NUL-terminated):
//!
//! ```text
//! node:  "node\0" type 0x00 id
//! pair:  "edge\0" a.type 0x00 a.id b.type 0x00 b.id   with (a, b) sorted
//! ```
//!
//! Edge subjects use the unordered pair identity — relation and direction
//! are deliberately excluded so a supervision pair, the message edge it
//! shadows, and its reverse all land in the same bucket. That is what makes
//! the leakage guarantee hold across relations and directions.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use giglite_core::{fnv1a64_seeded, u01, Graph, NodeRef};

use crate::builder::SupervisionEdgeSet;
use crate::error::EtlError;
use crate::sampler::{
    ordered_pair, write_samples, RootedSubgraph, SampleKind, TrainingSample,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Train,
    Val,
    Test,
}

impl Bucket {
    pub const ALL: [Bucket; 3] = [Bucket::Train, Bucket::Val, Bucket::Test];

    pub fn idx(self) -> usize {
        match self {
            Bucket::Train => 0,
            Bucket::Val => 1,
            Bucket::Test => 2,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Bucket::Train => "train",
            Bucket::Val => "val",
            Bucket::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitStrategy {
    TransductiveLink,
    InductiveNode,
    UserDefinedLabels,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitConfig {
    /// (train, val, test); each in [0, 1], summing to 1 within 1e-9.
    pub fractions: (f64, f64, f64),
    pub seed: u64,
    pub strategy: SplitStrategy,
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), EtlError> {
        let (a, b, c) = self.fractions;
        for f in [a, b, c] {
            if !(0.0..=1.0).contains(&f) {
                return Err(EtlError::Config(format!("split fraction {f} outside [0, 1]")));
            }
        }
        if ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(EtlError::Config(format!(
                "split fractions sum to {}, expected 1",
                a + b + c
            )));
        }
        Ok(())
    }
}

pub fn node_subject_bytes(n: &NodeRef) -> Vec<u8> {
    let mut out = Vec::with_capacity(5 + n.node_type.len() + 9);
    out.extend_from_slice(b"node\0");
    out.extend_from_slice(n.node_type.as_bytes());
    out.push(0);
    out.extend_from_slice(&n.node_id.to_le_bytes());
    out
}

pub fn pair_subject_bytes(a: &NodeRef, b: &NodeRef) -> Vec<u8> {
    let (x, y) = ordered_pair(a, b);
    let mut out = Vec::with_capacity(5 + x.node_type.len() + y.node_type.len() + 20);
    out.extend_from_slice(b"edge\0");
    out.extend_from_slice(x.node_type.as_bytes());
    out.push(0);
    out.extend_from_slice(&x.node_id.to_le_bytes());
    out.extend_from_slice(y.node_type.as_bytes());
    out.push(0);
    out.extend_from_slice(&y.node_id.to_le_bytes());
    out
}

/// Threshold a unit-interval hash by cumulative fractions.
pub fn bucket_of(u: f64, fractions: (f64, f64, f64)) -> Bucket {
    if u < fractions.0 {
        Bucket::Train
    } else if u < fractions.0 + fractions.1 {
        Bucket::Val
    } else {
        Bucket::Test
    }
}

/// Bucket for an unordered node pair (an edge identity).
pub fn assign_pair(a: &NodeRef, b: &NodeRef, cfg: &SplitConfig) -> Bucket {
    let h = fnv1a64_seeded(cfg.seed, &pair_subject_bytes(a, b));
    bucket_of(u01(h), cfg.fractions)
}

/// Bucket for a node subject.
pub fn assign_node(n: &NodeRef, cfg: &SplitConfig) -> Bucket {
    let h = fnv1a64_seeded(cfg.seed, &node_subject_bytes(n));
    bucket_of(u01(h), cfg.fractions)
}

/// Whether a message pair bucketed `pair_bucket` is visible to datasets of
/// the `active` bucket: train sees train edges, val sees train edges, test
/// sees train and val edges. Val edges are excluded from val message graphs
/// (the stricter convention).
pub fn message_visible(active: Bucket, pair_bucket: Bucket) -> bool {
    match active {
        Bucket::Train | Bucket::Val => pair_bucket == Bucket::Train,
        Bucket::Test => pair_bucket != Bucket::Test,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitReport {
    pub input_samples: usize,
    pub emitted: [usize; 3],
    /// Input samples that contributed nothing to a bucket (all positives
    /// fell elsewhere).
    pub dropped_no_positive: [usize; 3],
    /// Message-edge counts per bucket (transductive only).
    pub message_edges: [usize; 3],
    /// Subgraph edges removed by message filtering.
    pub edges_filtered: usize,
}

#[derive(Debug, Clone)]
pub struct SplitDatasets {
    pub buckets: [Vec<TrainingSample>; 3],
    pub report: SplitReport,
}

impl SplitDatasets {
    pub fn bucket(&self, b: Bucket) -> &[TrainingSample] {
        &self.buckets[b.idx()]
    }
}

fn filter_subgraph(
    sg: &RootedSubgraph,
    keep_pair: &impl Fn(&NodeRef, &NodeRef) -> bool,
    removed: &mut usize,
) -> RootedSubgraph {
    let mut out = sg.clone();
    let before = out.edges.len();
    out.edges
        .retain(|e| keep_pair(&e.src_ref(), &e.dst_ref()));
    *removed += before - out.edges.len();
    out
}

/// Transductive link split: supervision pairs and message edges share one
/// hash identity. Each sample is re-emitted per bucket holding at least one
/// of its positives, with every attached subgraph filtered to that bucket's
/// visible message set.
pub fn apply_transductive_link_split(
    graph: &Graph,
    samples: &[TrainingSample],
    cfg: &SplitConfig,
) -> Result<SplitDatasets, EtlError> {
    cfg.validate()?;
    let mut report = SplitReport {
        input_samples: samples.len(),
        ..Default::default()
    };
    for ti in 0..graph.schema().edge_types.len() {
        for (s, d, _) in graph.edges_of(ti) {
            report.message_edges[assign_pair(&s, &d, cfg).idx()] += 1;
        }
    }

    let mut buckets: [Vec<TrainingSample>; 3] = Default::default();
    let mut edges_filtered = 0usize;
    for sample in samples {
        if sample.kind != SampleKind::NodeAnchorLinkPrediction {
            return Err(EtlError::Config(
                "transductive link split requires link-prediction samples".to_string(),
            ));
        }
        let anchor = &sample.anchor.root;
        let mut per_bucket: [Vec<&RootedSubgraph>; 3] = Default::default();
        for p in &sample.positives {
            per_bucket[assign_pair(anchor, &p.root, cfg).idx()].push(p);
        }
        for b in Bucket::ALL {
            let positives = &per_bucket[b.idx()];
            if positives.is_empty() {
                report.dropped_no_positive[b.idx()] += 1;
                continue;
            }
            let keep = |s: &NodeRef, d: &NodeRef| message_visible(b, assign_pair(s, d, cfg));
            let out = TrainingSample {
                kind: sample.kind,
                anchor: filter_subgraph(&sample.anchor, &keep, &mut edges_filtered),
                positives: positives
                    .iter()
                    .map(|p| filter_subgraph(p, &keep, &mut edges_filtered))
                    .collect(),
                hard_negatives: sample
                    .hard_negatives
                    .iter()
                    .map(|n| filter_subgraph(n, &keep, &mut edges_filtered))
                    .collect(),
                label: sample.label,
            };
            report.emitted[b.idx()] += 1;
            buckets[b.idx()].push(out);
        }
    }
    report.edges_filtered = edges_filtered;
    Ok(SplitDatasets { buckets, report })
}

/// User-defined-label split: only supervision pairs are bucketed; the full
/// message graph stays visible to every bucket.
pub fn apply_user_defined_split(
    supervision: &SupervisionEdgeSet,
    samples: &[TrainingSample],
    cfg: &SplitConfig,
) -> Result<SplitDatasets, EtlError> {
    cfg.validate()?;
    if supervision.edges.is_empty() {
        return Err(EtlError::Config(
            "user-defined split requires a non-empty supervision set".to_string(),
        ));
    }
    let mut report = SplitReport {
        input_samples: samples.len(),
        ..Default::default()
    };
    let mut buckets: [Vec<TrainingSample>; 3] = Default::default();
    for sample in samples {
        if sample.kind != SampleKind::NodeAnchorLinkPrediction {
            return Err(EtlError::Config(
                "user-defined split requires link-prediction samples".to_string(),
            ));
        }
        let anchor = &sample.anchor.root;
        let mut per_bucket: [Vec<RootedSubgraph>; 3] = Default::default();
        for p in &sample.positives {
            per_bucket[assign_pair(anchor, &p.root, cfg).idx()].push(p.clone());
        }
        for b in Bucket::ALL {
            let positives = std::mem::take(&mut per_bucket[b.idx()]);
            if positives.is_empty() {
                report.dropped_no_positive[b.idx()] += 1;
                continue;
            }
            report.emitted[b.idx()] += 1;
            buckets[b.idx()].push(TrainingSample {
                kind: sample.kind,
                anchor: sample.anchor.clone(),
                positives,
                hard_negatives: sample.hard_negatives.clone(),
                label: sample.label,
            });
        }
    }
    Ok(SplitDatasets { buckets, report })
}

/// Inductive node split: nodes are bucketed by hash; a bucket's message
/// graph is the subgraph induced on train ∪ own-bucket nodes.
pub fn apply_inductive_node_split(
    samples: &[TrainingSample],
    cfg: &SplitConfig,
) -> Result<SplitDatasets, EtlError> {
    cfg.validate()?;
    let mut report = SplitReport {
        input_samples: samples.len(),
        ..Default::default()
    };
    let mut buckets: [Vec<TrainingSample>; 3] = Default::default();
    for sample in samples {
        let b = assign_node(&sample.anchor.root, cfg);
        let allowed = |n: &NodeRef| {
            let nb = assign_node(n, cfg);
            nb == Bucket::Train || nb == b
        };
        let mut anchor = sample.anchor.clone();
        anchor.nodes.retain(|n| allowed(&n.node_ref()));
        let before = anchor.edges.len();
        anchor
            .edges
            .retain(|e| allowed(&e.src_ref()) && allowed(&e.dst_ref()));
        report.edges_filtered += before - anchor.edges.len();
        report.emitted[b.idx()] += 1;
        buckets[b.idx()].push(TrainingSample {
            kind: sample.kind,
            anchor,
            positives: sample.positives.clone(),
            hard_negatives: sample.hard_negatives.clone(),
            label: sample.label,
        });
    }
    Ok(SplitDatasets { buckets, report })
}

/// Strategy dispatcher used by the pipeline.
pub fn apply_split(
    graph: &Graph,
    samples: &[TrainingSample],
    supervision: Option<&SupervisionEdgeSet>,
    cfg: &SplitConfig,
) -> Result<SplitDatasets, EtlError> {
    match cfg.strategy {
        SplitStrategy::TransductiveLink => apply_transductive_link_split(graph, samples, cfg),
        SplitStrategy::InductiveNode => apply_inductive_node_split(samples, cfg),
        SplitStrategy::UserDefinedLabels => {
            let set = supervision.ok_or_else(|| {
                EtlError::Config(
                    "user-defined split requires a supervision edge set".to_string(),
                )
            })?;
            apply_user_defined_split(set, samples, cfg)
        }
    }
}

/// Write per-bucket files `<base>.train`, `<base>.val`, `<base>.test` in the
/// sampler's record format. Returns the three paths.
pub fn write_split_files(
    base: &Path,
    kind: SampleKind,
    datasets: &SplitDatasets,
) -> Result<[PathBuf; 3], EtlError> {
    let mut paths = Vec::with_capacity(3);
    for b in Bucket::ALL {
        let path = split_file_path(base, b);
        write_samples(&path, kind, datasets.bucket(b))?;
        paths.push(path);
    }
    Ok([paths[0].clone(), paths[1].clone(), paths[2].clone()])
}

pub fn split_file_path(base: &Path, bucket: Bucket) -> PathBuf {
    let mut name = base.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(bucket.suffix());
    base.with_file_name(name)
}

/// Canonical pair set visible to a bucket, for leakage scans and the
/// real-time server's masking.
pub fn visible_pairs(graph: &Graph, active: Bucket, cfg: &SplitConfig) -> HashSet<(NodeRef, NodeRef)> {
    let mut out = HashSet::new();
    for ti in 0..graph.schema().edge_types.len() {
        for (s, d, _) in graph.edges_of(ti) {
            if message_visible(active, assign_pair(&s, &d, cfg)) {
                out.insert(ordered_pair(&s, &d));
            }
        }
    }
    out
}
