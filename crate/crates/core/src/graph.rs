//! Immutable typed property graph.
//!
//! Loaded once from tabular files, validated, then shared read-only by the
//! sampler, split generator, and real-time backend. Adjacency is compressed
//! sparse row per edge-type triple, with rows sorted by neighbor id so every
//! traversal order is canonical. Canonical edge order (the order edges were
//! read from the file) is preserved as the edge index space; that order is
//! the determinism anchor for everything downstream.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::table::{parse_f32, parse_u64, RawTable};

/// A node identity: type label plus an id unique within that type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeRef {
    pub node_type: String,
    pub node_id: u64,
}

impl NodeRef {
    pub fn new(node_type: impl Into<String>, node_id: u64) -> Self {
        NodeRef {
            node_type: node_type.into(),
            node_id,
        }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.node_type, self.node_id)
    }
}

/// An edge type: (source node type, relation, destination node type).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeTypeTriple {
    pub src: String,
    pub relation: String,
    pub dst: String,
}

impl EdgeTypeTriple {
    pub fn new(
        src: impl Into<String>,
        relation: impl Into<String>,
        dst: impl Into<String>,
    ) -> Self {
        EdgeTypeTriple {
            src: src.into(),
            relation: relation.into(),
            dst: dst.into(),
        }
    }

    /// Compact label, e.g. `user|friend|user`. Type and relation names may
    /// not contain `|`, so the label parses back unambiguously.
    pub fn label(&self) -> String {
        format!("{}|{}|{}", self.src, self.relation, self.dst)
    }

    pub fn parse_label(label: &str) -> Option<EdgeTypeTriple> {
        let mut it = label.split('|');
        let src = it.next()?;
        let relation = it.next()?;
        let dst = it.next()?;
        if it.next().is_some() || src.is_empty() || relation.is_empty() || dst.is_empty() {
            return None;
        }
        Some(EdgeTypeTriple::new(src, relation, dst))
    }
}

impl fmt::Display for EdgeTypeTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeTypeDef {
    pub name: String,
    /// Expected feature dimensionality; `None` infers it from the data.
    pub feature_dim: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeTypeDef {
    pub triple: EdgeTypeTriple,
    pub directed: bool,
    /// Expected edge feature dimensionality; `None` infers it (0 = none).
    pub edge_feature_dim: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSchema {
    pub node_types: Vec<NodeTypeDef>,
    pub edge_types: Vec<EdgeTypeDef>,
}

fn valid_label(s: &str) -> bool {
    !s.is_empty() && !s.contains(['|', '\t', '\n'])
}

impl GraphSchema {
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut seen = HashSet::new();
        for nt in &self.node_types {
            if !valid_label(&nt.name) {
                return Err(GraphError::Schema(format!(
                    "invalid node type name `{}`",
                    nt.name
                )));
            }
            if !seen.insert(&nt.name) {
                return Err(GraphError::Schema(format!(
                    "duplicate node type `{}`",
                    nt.name
                )));
            }
        }
        let mut triples = HashSet::new();
        for et in &self.edge_types {
            for part in [&et.triple.src, &et.triple.relation, &et.triple.dst] {
                if !valid_label(part) {
                    return Err(GraphError::Schema(format!(
                        "invalid label `{part}` in triple {}",
                        et.triple
                    )));
                }
            }
            for side in [&et.triple.src, &et.triple.dst] {
                if !self.node_types.iter().any(|nt| &nt.name == side) {
                    return Err(GraphError::Schema(format!(
                        "triple {} references unknown node type `{side}`",
                        et.triple
                    )));
                }
            }
            if !triples.insert(&et.triple) {
                return Err(GraphError::Schema(format!(
                    "duplicate edge type {}",
                    et.triple
                )));
            }
        }
        Ok(())
    }

    pub fn node_type_index(&self, name: &str) -> Option<usize> {
        self.node_types.iter().position(|nt| nt.name == name)
    }

    pub fn triple_index(&self, triple: &EdgeTypeTriple) -> Option<usize> {
        self.edge_types.iter().position(|et| &et.triple == triple)
    }
}

/// Compact handle to a loaded node: (node type index, row in its table).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeHandle {
    pub type_idx: u32,
    pub row: u32,
}

/// Identifies one stored edge: (triple index, canonical edge index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId {
    pub triple: u32,
    pub index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
}

/// One adjacency entry: neighbor row (in the opposite side's node table)
/// plus the canonical edge index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdjEntry {
    pub nbr_row: u32,
    pub edge: u32,
}

#[derive(Debug, Clone)]
pub struct Neighbor {
    pub node: NodeRef,
    pub edge: EdgeId,
}

#[derive(Debug, Clone)]
struct NodeTable {
    ids: Vec<u64>,
    feats: Vec<f32>,
    dim: usize,
    index: HashMap<u64, u32>,
}

#[derive(Debug, Clone, Default)]
struct Csr {
    offsets: Vec<u32>,
    entries: Vec<AdjEntry>,
}

impl Csr {
    fn row(&self, r: u32) -> &[AdjEntry] {
        let a = self.offsets[r as usize] as usize;
        let b = self.offsets[r as usize + 1] as usize;
        &self.entries[a..b]
    }
}

#[derive(Debug, Clone)]
struct EdgeStore {
    src_rows: Vec<u32>,
    dst_rows: Vec<u32>,
    feats: Vec<f32>,
    efdim: usize,
    /// Indexed by src-type rows; entries point at dst-type rows.
    out_adj: Csr,
    /// Indexed by dst-type rows; entries point at src-type rows.
    in_adj: Csr,
    /// Same-type undirected triples only: both directions merged per row.
    merged_adj: Option<Csr>,
}

/// An edge row supplied to [`Graph::from_parts`].
#[derive(Debug, Clone)]
pub struct EdgeInput {
    pub triple_idx: usize,
    pub src: NodeRef,
    pub dst: NodeRef,
    pub features: Option<Vec<f32>>,
}

#[derive(Debug, Clone)]
pub struct Graph {
    schema: GraphSchema,
    node_tables: Vec<NodeTable>,
    edge_stores: Vec<EdgeStore>,
}

impl Graph {
    /// Build from already-parsed node rows and edge rows. Edge order within
    /// each triple is preserved as the canonical edge index space.
    pub fn from_parts(
        schema: GraphSchema,
        nodes: Vec<(NodeRef, Vec<f32>)>,
        edges: Vec<EdgeInput>,
    ) -> Result<Graph, GraphError> {
        schema.validate()?;

        // Group nodes by type; ids sorted ascending define the row order.
        let mut per_type: Vec<Vec<(u64, Vec<f32>)>> = vec![Vec::new(); schema.node_types.len()];
        for (nref, feats) in nodes {
            let t = schema.node_type_index(&nref.node_type).ok_or_else(|| {
                GraphError::Schema(format!("node {nref} has unknown node type"))
            })?;
            per_type[t].push((nref.node_id, feats));
        }
        let mut node_tables = Vec::with_capacity(per_type.len());
        for (t, mut rows) in per_type.into_iter().enumerate() {
            rows.sort_by_key(|(id, _)| *id);
            let name = &schema.node_types[t].name;
            let dim = match schema.node_types[t].feature_dim {
                Some(d) => d,
                None => rows.first().map(|(_, f)| f.len()).unwrap_or(0),
            };
            let mut ids = Vec::with_capacity(rows.len());
            let mut feats = Vec::with_capacity(rows.len() * dim);
            let mut index = HashMap::with_capacity(rows.len());
            for (id, f) in rows {
                if f.len() != dim {
                    return Err(GraphError::Schema(format!(
                        "node {name}:{id} has {} features, expected {dim} for type `{name}`",
                        f.len()
                    )));
                }
                if index.insert(id, ids.len() as u32).is_some() {
                    return Err(GraphError::Structural(format!(
                        "duplicate node {name}:{id}"
                    )));
                }
                ids.push(id);
                feats.extend_from_slice(&f);
            }
            if ids.len() > u32::MAX as usize {
                return Err(GraphError::Structural(format!(
                    "node type `{name}` exceeds supported size"
                )));
            }
            node_tables.push(NodeTable {
                ids,
                feats,
                dim,
                index,
            });
        }

        // Group edges per triple, keeping input order.
        let mut per_triple: Vec<Vec<EdgeInput>> = vec![Vec::new(); schema.edge_types.len()];
        for e in edges {
            if e.triple_idx >= schema.edge_types.len() {
                return Err(GraphError::Schema(format!(
                    "edge ({} -> {}) references unknown triple index {}",
                    e.src, e.dst, e.triple_idx
                )));
            }
            per_triple[e.triple_idx].push(e);
        }

        let mut edge_stores = Vec::with_capacity(per_triple.len());
        for (ti, list) in per_triple.into_iter().enumerate() {
            let def = &schema.edge_types[ti];
            let src_t = schema.node_type_index(&def.triple.src).unwrap();
            let dst_t = schema.node_type_index(&def.triple.dst).unwrap();
            let same_type = src_t == dst_t;
            let efdim = match def.edge_feature_dim {
                Some(d) => d,
                None => list
                    .first()
                    .map(|e| e.features.as_ref().map(|f| f.len()).unwrap_or(0))
                    .unwrap_or(0),
            };

            let mut src_rows = Vec::with_capacity(list.len());
            let mut dst_rows = Vec::with_capacity(list.len());
            let mut feats = Vec::with_capacity(list.len() * efdim);
            let mut seen: HashSet<(u32, u32)> = HashSet::with_capacity(list.len());
            for e in list {
                if e.src.node_type != def.triple.src || e.dst.node_type != def.triple.dst {
                    return Err(GraphError::Structural(format!(
                        "edge ({} -> {}) does not match triple {}",
                        e.src, e.dst, def.triple
                    )));
                }
                // Undirected same-type edges canonicalize to (min, max) so
                // duplicates across direction collapse and split hashing sees
                // one identity per edge.
                let (mut sid, mut did) = (e.src.node_id, e.dst.node_id);
                if !def.directed && same_type && sid > did {
                    std::mem::swap(&mut sid, &mut did);
                }
                let srow = *node_tables[src_t].index.get(&sid).ok_or_else(|| {
                    GraphError::Structural(format!(
                        "edge ({} -> {}) references missing endpoint {}:{sid}",
                        e.src, e.dst, def.triple.src
                    ))
                })?;
                let drow = *node_tables[dst_t].index.get(&did).ok_or_else(|| {
                    GraphError::Structural(format!(
                        "edge ({} -> {}) references missing endpoint {}:{did}",
                        e.src, e.dst, def.triple.dst
                    ))
                })?;
                if !seen.insert((srow, drow)) {
                    return Err(GraphError::Structural(format!(
                        "duplicate edge ({}:{sid} -> {}:{did}) in triple {}",
                        def.triple.src, def.triple.dst, def.triple
                    )));
                }
                let got = e.features.as_ref().map(|f| f.len()).unwrap_or(0);
                if got != efdim {
                    return Err(GraphError::Schema(format!(
                        "edge ({}:{sid} -> {}:{did}) has {got} features, triple {} declares {efdim}",
                        def.triple.src, def.triple.dst, def.triple
                    )));
                }
                if let Some(f) = e.features {
                    feats.extend_from_slice(&f);
                }
                src_rows.push(srow);
                dst_rows.push(drow);
            }
            if src_rows.len() > u32::MAX as usize {
                return Err(GraphError::Structural(format!(
                    "triple {} exceeds supported edge count",
                    def.triple
                )));
            }

            let out_adj = build_csr(node_tables[src_t].ids.len(), &src_rows, &dst_rows);
            let in_adj = build_csr(node_tables[dst_t].ids.len(), &dst_rows, &src_rows);
            let merged_adj = if !def.directed && same_type {
                Some(merge_csr(&out_adj, &in_adj))
            } else {
                None
            };
            edge_stores.push(EdgeStore {
                src_rows,
                dst_rows,
                feats,
                efdim,
                out_adj,
                in_adj,
                merged_adj,
            });
        }

        Ok(Graph {
            schema,
            node_tables,
            edge_stores,
        })
    }

    /// Load from canonical node/edge table files.
    ///
    /// Node tables: `(node_type, node_id, <feature columns>)`. Edge tables:
    /// `(src_type, relation, dst_type, src_id, dst_id, <feature columns>)`.
    pub fn load(
        schema: GraphSchema,
        node_tables: &[impl AsRef<Path>],
        edge_tables: &[impl AsRef<Path>],
    ) -> Result<Graph, GraphError> {
        let mut nodes = Vec::new();
        for path in node_tables {
            let t = RawTable::read(path.as_ref())?;
            nodes.extend(parse_node_rows(&t)?);
        }
        schema.validate()?;
        let mut edges = Vec::new();
        for path in edge_tables {
            let t = RawTable::read(path.as_ref())?;
            edges.extend(parse_edge_rows(&t, &schema)?);
        }
        Graph::from_parts(schema, nodes, edges)
    }

    pub fn schema(&self) -> &GraphSchema {
        &self.schema
    }

    pub fn node_count(&self) -> usize {
        self.node_tables.iter().map(|t| t.ids.len()).sum()
    }

    pub fn node_count_of_type(&self, type_idx: usize) -> usize {
        self.node_tables[type_idx].ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_stores.iter().map(|s| s.src_rows.len()).sum()
    }

    pub fn edge_count_of_triple(&self, triple_idx: usize) -> usize {
        self.edge_stores[triple_idx].src_rows.len()
    }

    pub fn contains(&self, node: &NodeRef) -> bool {
        self.resolve(node).is_some()
    }

    pub fn resolve(&self, node: &NodeRef) -> Option<NodeHandle> {
        let t = self.schema.node_type_index(&node.node_type)?;
        let row = *self.node_tables[t].index.get(&node.node_id)?;
        Some(NodeHandle {
            type_idx: t as u32,
            row,
        })
    }

    pub fn handle_ref(&self, h: NodeHandle) -> NodeRef {
        NodeRef {
            node_type: self.schema.node_types[h.type_idx as usize].name.clone(),
            node_id: self.handle_id(h),
        }
    }

    pub fn handle_id(&self, h: NodeHandle) -> u64 {
        self.node_tables[h.type_idx as usize].ids[h.row as usize]
    }

    pub fn features_of(&self, h: NodeHandle) -> &[f32] {
        let t = &self.node_tables[h.type_idx as usize];
        let r = h.row as usize;
        &t.feats[r * t.dim..(r + 1) * t.dim]
    }

    pub fn node_features(&self, node: &NodeRef) -> Result<&[f32], GraphError> {
        let h = self
            .resolve(node)
            .ok_or_else(|| GraphError::UnknownNode(node.clone()))?;
        Ok(self.features_of(h))
    }

    pub fn feature_dim(&self, type_idx: usize) -> usize {
        self.node_tables[type_idx].dim
    }

    pub fn node_ids_of_type(&self, type_idx: usize) -> &[u64] {
        &self.node_tables[type_idx].ids
    }

    /// Every node, ordered by (schema type order, id ascending).
    pub fn all_nodes(&self) -> Vec<NodeRef> {
        let mut out = Vec::with_capacity(self.node_count());
        for (t, table) in self.node_tables.iter().enumerate() {
            let name = &self.schema.node_types[t].name;
            for &id in &table.ids {
                out.push(NodeRef::new(name.clone(), id));
            }
        }
        out
    }

    pub fn edge_features(&self, id: EdgeId) -> Option<&[f32]> {
        let s = &self.edge_stores[id.triple as usize];
        if s.efdim == 0 {
            return None;
        }
        let i = id.index as usize;
        Some(&s.feats[i * s.efdim..(i + 1) * s.efdim])
    }

    /// Canonical endpoints (as stored) of an edge.
    pub fn edge_endpoints(&self, id: EdgeId) -> (NodeRef, NodeRef) {
        let s = &self.edge_stores[id.triple as usize];
        let def = &self.schema.edge_types[id.triple as usize];
        let src_t = self.schema.node_type_index(&def.triple.src).unwrap();
        let dst_t = self.schema.node_type_index(&def.triple.dst).unwrap();
        let sid = self.node_tables[src_t].ids[s.src_rows[id.index as usize] as usize];
        let did = self.node_tables[dst_t].ids[s.dst_rows[id.index as usize] as usize];
        (
            NodeRef::new(def.triple.src.clone(), sid),
            NodeRef::new(def.triple.dst.clone(), did),
        )
    }

    /// Edges of one triple in canonical (file) order.
    pub fn edges_of(
        &self,
        triple_idx: usize,
    ) -> impl Iterator<Item = (NodeRef, NodeRef, Option<&[f32]>)> + '_ {
        let count = self.edge_stores[triple_idx].src_rows.len() as u32;
        (0..count).map(move |i| {
            let id = EdgeId {
                triple: triple_idx as u32,
                index: i,
            };
            let (s, d) = self.edge_endpoints(id);
            (s, d, self.edge_features(id))
        })
    }

    fn adj_for(&self, triple_idx: usize, h: NodeHandle, dir: Direction) -> &[AdjEntry] {
        static EMPTY: [AdjEntry; 0] = [];
        let def = &self.schema.edge_types[triple_idx];
        let store = &self.edge_stores[triple_idx];
        let src_t = self.schema.node_type_index(&def.triple.src).unwrap() as u32;
        let dst_t = self.schema.node_type_index(&def.triple.dst).unwrap() as u32;
        if !def.directed {
            // Direction is ignored for undirected triples: both directions
            // are merged.
            if let Some(merged) = &store.merged_adj {
                if h.type_idx == src_t {
                    return merged.row(h.row);
                }
                return &EMPTY;
            }
            if h.type_idx == src_t {
                return store.out_adj.row(h.row);
            }
            if h.type_idx == dst_t {
                return store.in_adj.row(h.row);
            }
            return &EMPTY;
        }
        match dir {
            Direction::Out if h.type_idx == src_t => store.out_adj.row(h.row),
            Direction::In if h.type_idx == dst_t => store.in_adj.row(h.row),
            _ => &EMPTY,
        }
    }

    /// Row-level adjacency in the requested direction. Entries are sorted by
    /// neighbor id ascending. Undirected triples return the merged view for
    /// either direction.
    pub fn adj_entries(&self, triple_idx: usize, h: NodeHandle, dir: Direction) -> &[AdjEntry] {
        self.adj_for(triple_idx, h, dir)
    }

    /// The sampling view used by k-hop expansion: out-direction adjacency
    /// for directed triples, merged adjacency for undirected ones.
    pub fn expansion_entries(&self, triple_idx: usize, h: NodeHandle) -> &[AdjEntry] {
        self.adj_for(triple_idx, h, Direction::Out)
    }

    /// Node type index of the neighbors reached from a node of
    /// `node_type_idx` via `triple_idx`, or `None` if the triple does not
    /// touch that node type.
    pub fn expansion_neighbor_type(&self, triple_idx: usize, node_type_idx: u32) -> Option<u32> {
        let def = &self.schema.edge_types[triple_idx];
        let src_t = self.schema.node_type_index(&def.triple.src).unwrap() as u32;
        let dst_t = self.schema.node_type_index(&def.triple.dst).unwrap() as u32;
        if def.directed {
            (node_type_idx == src_t).then_some(dst_t)
        } else if node_type_idx == src_t {
            Some(dst_t)
        } else if node_type_idx == dst_t {
            Some(src_t)
        } else {
            None
        }
    }

    /// Ordered neighbor list (ascending by neighbor id) with edge handles.
    pub fn neighbors(
        &self,
        node: &NodeRef,
        triple_idx: usize,
        dir: Direction,
    ) -> Result<Vec<Neighbor>, GraphError> {
        let h = self
            .resolve(node)
            .ok_or_else(|| GraphError::UnknownNode(node.clone()))?;
        let nbr_type = match self.nbr_type_for(triple_idx, h.type_idx, dir) {
            Some(t) => t,
            None => return Ok(Vec::new()),
        };
        let name = &self.schema.node_types[nbr_type as usize].name;
        Ok(self
            .adj_for(triple_idx, h, dir)
            .iter()
            .map(|e| Neighbor {
                node: NodeRef::new(
                    name.clone(),
                    self.node_tables[nbr_type as usize].ids[e.nbr_row as usize],
                ),
                edge: EdgeId {
                    triple: triple_idx as u32,
                    index: e.edge,
                },
            })
            .collect())
    }

    fn nbr_type_for(&self, triple_idx: usize, type_idx: u32, dir: Direction) -> Option<u32> {
        let def = &self.schema.edge_types[triple_idx];
        let src_t = self.schema.node_type_index(&def.triple.src).unwrap() as u32;
        let dst_t = self.schema.node_type_index(&def.triple.dst).unwrap() as u32;
        if !def.directed {
            return self.expansion_neighbor_type(triple_idx, type_idx);
        }
        match dir {
            Direction::Out => (type_idx == src_t).then_some(dst_t),
            Direction::In => (type_idx == dst_t).then_some(src_t),
        }
    }

    pub fn degree(&self, node: &NodeRef, triple_idx: usize, dir: Direction) -> usize {
        self.resolve(node)
            .map(|h| self.adj_for(triple_idx, h, dir).len())
            .unwrap_or(0)
    }
}

fn build_csr(n_rows: usize, from: &[u32], to: &[u32]) -> Csr {
    let mut counts = vec![0u32; n_rows + 1];
    for &f in from {
        counts[f as usize + 1] += 1;
    }
    for i in 1..counts.len() {
        counts[i] += counts[i - 1];
    }
    let offsets = counts.clone();
    let mut cursor = counts;
    let mut entries = vec![
        AdjEntry {
            nbr_row: 0,
            edge: 0
        };
        from.len()
    ];
    for (e, (&f, &t)) in from.iter().zip(to).enumerate() {
        let pos = cursor[f as usize] as usize;
        entries[pos] = AdjEntry {
            nbr_row: t,
            edge: e as u32,
        };
        cursor[f as usize] += 1;
    }
    // Node rows are id-sorted, so sorting by row sorts by neighbor id.
    let mut csr = Csr { offsets, entries };
    for r in 0..n_rows {
        let a = csr.offsets[r] as usize;
        let b = csr.offsets[r + 1] as usize;
        csr.entries[a..b].sort_unstable_by_key(|e| (e.nbr_row, e.edge));
    }
    csr
}

/// Merge two same-type CSRs row-wise (both sorted by neighbor row), dropping
/// duplicate (neighbor, edge) pairs, which only arise from self-loops.
fn merge_csr(a: &Csr, b: &Csr) -> Csr {
    let n = a.offsets.len() - 1;
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0u32);
    let mut entries = Vec::new();
    for r in 0..n {
        let (mut i, mut j) = (0usize, 0usize);
        let ra = a.row(r as u32);
        let rb = b.row(r as u32);
        while i < ra.len() || j < rb.len() {
            let next = if j >= rb.len() || (i < ra.len() && (ra[i].nbr_row, ra[i].edge) <= (rb[j].nbr_row, rb[j].edge)) {
                let e = ra[i];
                i += 1;
                e
            } else {
                let e = rb[j];
                j += 1;
                e
            };
            if entries.last() != Some(&next) || offsets.last() == Some(&(entries.len() as u32)) {
                entries.push(next);
            }
        }
        offsets.push(entries.len() as u32);
    }
    Csr { offsets, entries }
}

fn parse_node_rows(t: &RawTable) -> Result<Vec<(NodeRef, Vec<f32>)>, GraphError> {
    if t.columns.len() < 2 || t.columns[0] != "node_type" || t.columns[1] != "node_id" {
        return Err(GraphError::Schema(
            "node table must start with columns (node_type, node_id)".to_string(),
        ));
    }
    let mut out = Vec::with_capacity(t.rows.len());
    for (i, row) in t.rows.iter().enumerate() {
        let line = i + 3;
        let id = parse_u64(&row[1], line, "node_id").map_err(GraphError::Table)?;
        let mut feats = Vec::with_capacity(row.len() - 2);
        for (c, cell) in row.iter().enumerate().skip(2) {
            feats.push(parse_f32(cell, line, &t.columns[c]).map_err(GraphError::Table)?);
        }
        out.push((NodeRef::new(row[0].clone(), id), feats));
    }
    Ok(out)
}

fn parse_edge_rows(t: &RawTable, schema: &GraphSchema) -> Result<Vec<EdgeInput>, GraphError> {
    let expected = ["src_type", "relation", "dst_type", "src_id", "dst_id"];
    if t.columns.len() < 5 || t.columns[..5] != expected {
        return Err(GraphError::Schema(
            "edge table must start with columns (src_type, relation, dst_type, src_id, dst_id)"
                .to_string(),
        ));
    }
    let mut out = Vec::with_capacity(t.rows.len());
    for (i, row) in t.rows.iter().enumerate() {
        let line = i + 3;
        let triple = EdgeTypeTriple::new(row[0].clone(), row[1].clone(), row[2].clone());
        let triple_idx = schema.triple_index(&triple).ok_or_else(|| {
            GraphError::Schema(format!("line {line}: unknown edge triple {triple}"))
        })?;
        let sid = parse_u64(&row[3], line, "src_id").map_err(GraphError::Table)?;
        let did = parse_u64(&row[4], line, "dst_id").map_err(GraphError::Table)?;
        let features = if row.len() > 5 {
            let mut f = Vec::with_capacity(row.len() - 5);
            for (c, cell) in row.iter().enumerate().skip(5) {
                f.push(parse_f32(cell, line, &t.columns[c]).map_err(GraphError::Table)?);
            }
            Some(f)
        } else {
            None
        };
        out.push(EdgeInput {
            triple_idx,
            src: NodeRef::new(triple.src.clone(), sid),
            dst: NodeRef::new(triple.dst.clone(), did),
            features,
        });
    }
    Ok(out)
}
