//! JSONL, Cypher and GraphML renderings of a knowledge graph.

use serde::{Deserialize, Serialize};

use super::{KgEdge, KgNode, KnowledgeGraph, NodeKind};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Record {
    Node(KgNode),
    Edge(KgEdge),
}

/// Nodes sorted by id, then edges in graph order; one JSON object per line.
pub fn export_jsonl(g: &KnowledgeGraph) -> Result<String> {
    let mut out = String::new();
    for n in g.nodes() {
        out.push_str(&serde_json::to_string(n)?);
        out.push('\n');
    }
    for e in g.edges() {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn import_jsonl(content: &str) -> Result<KnowledgeGraph> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })? {
            Record::Node(n) => {
                if !edges.is_empty() {
                    return Err(Error::Parse { line: i + 1, message: "node record after edge records".into() });
                }
                nodes.push(n);
            }
            Record::Edge(e) => edges.push(e),
        }
    }
    Ok(KnowledgeGraph::from_parts(nodes, edges))
}

fn cypher_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out.push('\'');
    out
}

/// The property map MERGE matches on: drugs by `str`, adverse events and
/// reasons by `name`, patients and posologies by id.
fn merge_key(n: &KgNode) -> String {
    match n.kind {
        NodeKind::Drug => format!("{{str: {}}}", cypher_str(n.attr("str"))),
        NodeKind::Ade | NodeKind::Reason => format!("{{name: {}}}", cypher_str(n.attr("name"))),
        NodeKind::Patient | NodeKind::Posology => format!("{{id: {}}}", n.id),
    }
}

/// MERGE statements for every node, then every relationship.
pub fn export_cypher(g: &KnowledgeGraph) -> String {
    let mut out = String::new();
    for n in g.nodes() {
        out.push_str(&format!("MERGE (n:{} {})", n.kind, merge_key(n)));
        let mut sets = vec![format!("n.id = {}", n.id)];
        for key in n.kind.schema() {
            sets.push(format!("n.{key} = {}", cypher_str(n.attr(key))));
        }
        out.push_str(&format!(" SET {};\n", sets.join(", ")));
    }
    for e in g.edges() {
        let (Some(a), Some(b)) = (g.node(e.src), g.node(e.dst)) else { continue };
        out.push_str(&format!(
            "MATCH (a:{} {}), (b:{} {}) MERGE (a)-[:`{}`]->(b);\n",
            a.kind,
            merge_key(a),
            b.kind,
            merge_key(b),
            e.label
        ));
    }
    out
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

const NODE_KEYS: &[&str] = &["dosage", "duration", "form", "freq", "name", "pos", "route", "str", "strength"];

/// GraphML with a `kind` key, one string key per schema attribute and a
/// `label` key on edges.
pub fn export_graphml(g: &KnowledgeGraph) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"kind\" for=\"node\" attr.name=\"kind\" attr.type=\"string\"/>\n");
    for k in NODE_KEYS {
        out.push_str(&format!("  <key id=\"{k}\" for=\"node\" attr.name=\"{k}\" attr.type=\"string\"/>\n"));
    }
    out.push_str("  <key id=\"label\" for=\"edge\" attr.name=\"label\" attr.type=\"string\"/>\n");
    out.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");
    for n in g.nodes() {
        out.push_str(&format!("    <node id=\"n{}\">\n", n.id));
        out.push_str(&format!("      <data key=\"kind\">{}</data>\n", n.kind));
        for (k, v) in &n.attributes {
            out.push_str(&format!("      <data key=\"{}\">{}</data>\n", xml_escape(k), xml_escape(v)));
        }
        out.push_str("    </node>\n");
    }
    for (i, e) in g.edges().iter().enumerate() {
        out.push_str(&format!("    <edge id=\"e{i}\" source=\"n{}\" target=\"n{}\">\n", e.src, e.dst));
        out.push_str(&format!("      <data key=\"label\">{}</data>\n", e.label));
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}
