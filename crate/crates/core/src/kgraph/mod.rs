//! Typed property graph of patients, posologies, drugs, reasons and adverse
//! events, built from per-note extractions.

mod export;
pub mod fixtures;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{EntityAnnotation, EntityType, Extraction};
use crate::error::{Error, Result};

pub use export::{export_cypher, export_graphml, export_jsonl, import_jsonl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeKind {
    Posology,
    Patient,
    Drug,
    Ade,
    Reason,
}

impl NodeKind {
    pub const ALL: [NodeKind; 5] = [NodeKind::Posology, NodeKind::Patient, NodeKind::Drug, NodeKind::Ade, NodeKind::Reason];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Posology => "POSOLOGY",
            NodeKind::Patient => "PATIENT",
            NodeKind::Drug => "DRUG",
            NodeKind::Ade => "ADE",
            NodeKind::Reason => "REASON",
        }
    }

    /// Attribute keys every node of this kind carries.
    pub fn schema(self) -> &'static [&'static str] {
        match self {
            NodeKind::Posology => &["dosage", "duration", "form", "freq", "route", "name", "pos"],
            NodeKind::Drug => &["strength", "name", "str"],
            NodeKind::Patient => &[],
            NodeKind::Ade | NodeKind::Reason => &["name"],
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NodeKind {
    type Err = Error;

    /// Case-insensitive kind name.
    fn from_str(s: &str) -> Result<Self> {
        NodeKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown node kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeLabel {
    #[serde(rename = "HAS_PRESCRIPTION")]
    HasPrescription,
    #[serde(rename = "OF_DRUG")]
    OfDrug,
    #[serde(rename = "ADE-Drug")]
    AdeDrug,
    #[serde(rename = "Reason-Drug")]
    ReasonDrug,
}

impl EdgeLabel {
    pub const ALL: [EdgeLabel; 4] = [EdgeLabel::HasPrescription, EdgeLabel::OfDrug, EdgeLabel::AdeDrug, EdgeLabel::ReasonDrug];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeLabel::HasPrescription => "HAS_PRESCRIPTION",
            EdgeLabel::OfDrug => "OF_DRUG",
            EdgeLabel::AdeDrug => "ADE-Drug",
            EdgeLabel::ReasonDrug => "Reason-Drug",
        }
    }

    /// Required (source, target) kinds.
    pub fn signature(self) -> (NodeKind, NodeKind) {
        match self {
            EdgeLabel::HasPrescription => (NodeKind::Patient, NodeKind::Posology),
            EdgeLabel::OfDrug => (NodeKind::Posology, NodeKind::Drug),
            EdgeLabel::AdeDrug => (NodeKind::Drug, NodeKind::Ade),
            EdgeLabel::ReasonDrug => (NodeKind::Drug, NodeKind::Reason),
        }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EdgeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EdgeLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown edge label {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KgNode {
    pub id: usize,
    pub kind: NodeKind,
    pub attributes: BTreeMap<String, String>,
}

impl KgNode {
    pub fn attr(&self, key: &str) -> &str {
        self.attributes.get(key).map(String::as_str).unwrap_or("")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KgEdge {
    pub src: usize,
    pub dst: usize,
    pub label: EdgeLabel,
}

/// Nodes keyed by id, edges in insertion order, and an index of incident
/// edges per node.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<usize, KgNode>,
    edges: Vec<KgEdge>,
    incident: BTreeMap<usize, Vec<usize>>,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl KnowledgeGraph {
    /// Assemble a graph without checking it; see [`validate`].
    pub fn from_parts(nodes: Vec<KgNode>, edges: Vec<KgEdge>) -> Self {
        let mut g = Self::default();
        for n in nodes {
            g.nodes.insert(n.id, n);
        }
        for e in edges {
            g.push_edge(e);
        }
        g
    }

    fn push_edge(&mut self, e: KgEdge) {
        let i = self.edges.len();
        self.incident.entry(e.src).or_default().push(i);
        if e.dst != e.src {
            self.incident.entry(e.dst).or_default().push(i);
        }
        self.edges.push(e);
    }

    pub fn nodes(&self) -> impl Iterator<Item = &KgNode> {
        self.nodes.values()
    }

    pub fn node(&self, id: usize) -> Option<&KgNode> {
        self.nodes.get(&id)
    }

    pub fn edges(&self) -> &[KgEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes_of(&self, kind: NodeKind) -> impl Iterator<Item = &KgNode> {
        self.nodes.values().filter(move |n| n.kind == kind)
    }

    /// Edges touching `id`, in insertion order.
    pub fn incident_edges(&self, id: usize) -> impl Iterator<Item = &KgEdge> {
        self.incident.get(&id).into_iter().flatten().map(|&i| &self.edges[i])
    }

    /// Neighbour across `e` as seen from `id`.
    pub fn other_end(e: &KgEdge, id: usize) -> usize {
        if e.src == id { e.dst } else { e.src }
    }
}

/// Lowercase, trim and collapse internal whitespace.
pub fn normalize(surface: &str) -> String {
    surface.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Fields of a posology in canonical order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PosologyFields {
    pub name: String,
    pub dosage: String,
    pub duration: String,
    pub form: String,
    pub freq: String,
    pub route: String,
}

/// `name|dosage|duration|form|freq|route`.
pub fn compose_pos(f: &PosologyFields) -> String {
    [&f.name, &f.dosage, &f.duration, &f.form, &f.freq, &f.route].map(String::as_str).join("|")
}

/// `name|strength`.
pub fn compose_str(name: &str, strength: &str) -> String {
    format!("{name}|{strength}")
}

fn posology_attributes(f: &PosologyFields) -> BTreeMap<String, String> {
    [
        ("dosage", &f.dosage),
        ("duration", &f.duration),
        ("form", &f.form),
        ("freq", &f.freq),
        ("route", &f.route),
        ("name", &f.name),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.clone()))
    .chain([("pos".to_string(), compose_pos(f))])
    .collect()
}

fn posology_slot(f: &mut PosologyFields, t: EntityType) -> Option<&mut String> {
    match t {
        EntityType::Dosage => Some(&mut f.dosage),
        EntityType::Duration => Some(&mut f.duration),
        EntityType::Form => Some(&mut f.form),
        EntityType::Frequency => Some(&mut f.freq),
        EntityType::Route => Some(&mut f.route),
        _ => None,
    }
}

struct Builder {
    graph: KnowledgeGraph,
    edge_set: HashSet<KgEdge>,
    by_key: HashMap<(NodeKind, String), usize>,
    posology: BTreeMap<usize, PosologyFields>,
}

impl Builder {
    fn node(&mut self, kind: NodeKind, key: String, attributes: impl FnOnce() -> BTreeMap<String, String>) -> usize {
        if let Some(&id) = self.by_key.get(&(kind, key.clone())) {
            return id;
        }
        let id = self.graph.nodes.len();
        self.graph.nodes.insert(id, KgNode { id, kind, attributes: attributes() });
        self.by_key.insert((kind, key), id);
        id
    }

    fn edge(&mut self, src: usize, dst: usize, label: EdgeLabel) {
        let e = KgEdge { src, dst, label };
        if self.edge_set.insert(e) {
            self.graph.push_edge(e);
        }
    }
}

fn named(name: &str) -> BTreeMap<String, String> {
    BTreeMap::from([("name".to_string(), name.to_string())])
}

/// Build the graph. `patient_ids` maps document ids to patient ids; a
/// document missing from it is its own patient.
pub fn build_graph(extractions: &[Extraction], patient_ids: &BTreeMap<String, String>) -> Result<KnowledgeGraph> {
    let mut b = Builder { graph: KnowledgeGraph::default(), edge_set: HashSet::new(), by_key: HashMap::new(), posology: BTreeMap::new() };
    for ex in extractions {
        let by_id: HashMap<&str, &EntityAnnotation> = ex.entities.iter().map(|e| (e.id.as_str(), e)).collect();
        let mut linked: HashMap<&str, Vec<&EntityAnnotation>> = HashMap::new();
        for r in &ex.relations {
            let get = |id: &str| {
                by_id.get(id).copied().ok_or_else(|| {
                    Error::Reference(format!("relation {} in {} references unextracted entity {id}", r.id, ex.doc_id))
                })
            };
            let (drug, other) = (get(&r.arg_drug)?, get(&r.arg_other)?);
            if drug.entity_type != EntityType::Drug || other.entity_type == EntityType::Drug {
                return Err(Error::Integrity(format!("relation {} in {} does not link a drug to an attribute", r.id, ex.doc_id)));
            }
            linked.entry(drug.id.as_str()).or_default().push(other);
        }
        for v in linked.values_mut() {
            v.sort_by_key(|e| (e.start, e.end));
        }

        let patient_key = patient_ids.get(&ex.doc_id).cloned().unwrap_or_else(|| ex.doc_id.clone());
        let patient = b.node(NodeKind::Patient, patient_key.clone(), BTreeMap::new);
        for drug in ex.entities.iter().filter(|e| e.entity_type == EntityType::Drug) {
            let others = linked.get(drug.id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            let name = normalize(&drug.surface);
            let strength = others.iter().find(|e| e.entity_type == EntityType::Strength).map(|e| normalize(&e.surface)).unwrap_or_default();
            let s = compose_str(&name, &strength);
            let drug_id = b.node(NodeKind::Drug, s.clone(), || {
                BTreeMap::from([("strength".into(), strength.clone()), ("name".into(), name.clone()), ("str".into(), s.clone())])
            });
            let pos_id = b.node(NodeKind::Posology, format!("{patient_key}\u{0}{drug_id}"), BTreeMap::new);
            let fields = b.posology.entry(pos_id).or_insert_with(|| PosologyFields { name: name.clone(), ..Default::default() });
            for o in others {
                if let Some(slot) = posology_slot(fields, o.entity_type) {
                    let v = normalize(&o.surface);
                    if slot.is_empty() {
                        *slot = v;
                    } else if *slot != v {
                        log::debug!("posology {pos_id}: keeping {:?} over {v:?} for {}", slot, o.entity_type.as_str());
                    }
                }
            }
            b.edge(patient, pos_id, EdgeLabel::HasPrescription);
            b.edge(pos_id, drug_id, EdgeLabel::OfDrug);
            for o in others {
                let (kind, label) = match o.entity_type {
                    EntityType::Ade => (NodeKind::Ade, EdgeLabel::AdeDrug),
                    EntityType::Reason => (NodeKind::Reason, EdgeLabel::ReasonDrug),
                    _ => continue,
                };
                let n = normalize(&o.surface);
                let id = b.node(kind, n.clone(), || named(&n));
                b.edge(drug_id, id, label);
            }
        }
    }
    for (id, f) in &b.posology {
        b.graph.nodes.get_mut(id).unwrap().attributes = posology_attributes(f);
    }
    Ok(b.graph)
}

/// One schema violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub node: Option<usize>,
    pub edge: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every node and edge invariant. An empty report means the graph is
/// valid.
pub fn validate(g: &KnowledgeGraph) -> ValidationReport {
    let mut v = Vec::new();
    let mut node_issue = |id: usize, message: String| v.push(Violation { node: Some(id), edge: None, message });
    for (&key, n) in &g.nodes {
        if key != n.id {
            node_issue(key, format!("indexed under {key} but has id {}", n.id));
        }
        let expected: Vec<&str> = {
            let mut s = n.kind.schema().to_vec();
            s.sort();
            s
        };
        let actual: Vec<&str> = n.attributes.keys().map(String::as_str).collect();
        if expected != actual {
            node_issue(n.id, format!("{} attributes {actual:?} do not match schema {expected:?}", n.kind));
        }
        match n.kind {
            NodeKind::Posology => {
                let f = PosologyFields {
                    name: n.attr("name").into(),
                    dosage: n.attr("dosage").into(),
                    duration: n.attr("duration").into(),
                    form: n.attr("form").into(),
                    freq: n.attr("freq").into(),
                    route: n.attr("route").into(),
                };
                if n.attr("pos") != compose_pos(&f) {
                    node_issue(n.id, "pos is not the canonical concatenation".into());
                }
            }
            NodeKind::Drug if n.attr("str") != compose_str(n.attr("name"), n.attr("strength")) => {
                node_issue(n.id, "str is not the canonical concatenation".into());
            }
            _ => {}
        }
    }
    let mut seen = HashSet::new();
    for (i, e) in g.edges.iter().enumerate() {
        let mut edge_issue = |message: String| v.push(Violation { node: None, edge: Some(i), message });
        match (g.nodes.get(&e.src), g.nodes.get(&e.dst)) {
            (Some(s), Some(d)) => {
                let (ks, kd) = e.label.signature();
                if s.kind != ks || d.kind != kd {
                    edge_issue(format!("{} joins {} -> {}, expected {ks} -> {kd}", e.label, s.kind, d.kind));
                }
            }
            _ => edge_issue(format!("endpoint missing for {} -> {}", e.src, e.dst)),
        }
        if e.src == e.dst {
            edge_issue("self-loop".into());
        }
        if !seen.insert(*e) {
            edge_issue(format!("duplicate edge {} -[{}]-> {}", e.src, e.label, e.dst));
        }
    }
    ValidationReport { violations: v }
}
