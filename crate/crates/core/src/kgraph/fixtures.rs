//! Small graphs and extractions with known structure, for tests, examples
//! and benchmarks.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{compose_pos, compose_str, EdgeLabel, KgEdge, KgNode, KnowledgeGraph, NodeKind, PosologyFields};
use crate::corpus::{EntityAnnotation, EntityType, Extraction, RelationAnnotation};

fn extraction(doc_id: &str, text: &str, spans: &[(EntityType, &str)], drug_links: &[usize]) -> Extraction {
    let mut entities = Vec::new();
    for (i, (t, surface)) in spans.iter().enumerate() {
        let start = text.find(surface).expect("surface occurs in text");
        let s = text[..start].chars().count();
        entities.push(EntityAnnotation::new(format!("T{}", i + 1), *t, s, s + surface.chars().count(), *surface));
    }
    let relations = drug_links
        .iter()
        .enumerate()
        .map(|(i, &o)| RelationAnnotation {
            id: format!("R{}", i + 1),
            relation_type: spans[o].0.relation_label(),
            arg_drug: "T1".into(),
            arg_other: format!("T{}", o + 1),
        })
        .collect();
    Extraction { doc_id: doc_id.into(), entities, relations }
}

/// One patient: "Coumadin 5mg for afib, caused bleeding." Builds to five
/// nodes and four edges.
pub fn coumadin_note() -> Extraction {
    extraction(
        "note1",
        "Coumadin 5mg for afib, caused bleeding.",
        &[(EntityType::Drug, "Coumadin"), (EntityType::Strength, "5mg"), (EntityType::Reason, "afib"), (EntityType::Ade, "bleeding")],
        &[1, 2, 3],
    )
}

/// Two notes: one drug with seven adverse events, another with two.
pub fn ade_star_notes() -> Vec<Extraction> {
    let ades = ["rash", "bleeding", "nausea", "dizziness", "hives", "confusion", "headache"];
    let text_a = format!("Coumadin caused {}.", ades.join(", "));
    let mut spans_a = vec![(EntityType::Drug, "Coumadin")];
    spans_a.extend(ades.iter().map(|a| (EntityType::Ade, *a)));
    let links_a: Vec<usize> = (1..spans_a.len()).collect();
    let a = extraction("star1", &text_a, &spans_a, &links_a);
    let b = extraction(
        "star2",
        "Lisinopril caused cough and hyperkalemia.",
        &[(EntityType::Drug, "Lisinopril"), (EntityType::Ade, "cough"), (EntityType::Ade, "hyperkalemia")],
        &[1, 2],
    );
    vec![a, b]
}

const WORDS: &[&str] = &["a", "b", "c", "x y", "it's", "<q>", "5mg", ""];

fn random_attributes(kind: NodeKind, rng: &mut ChaCha8Rng) -> BTreeMap<String, String> {
    let mut w = || WORDS.choose(rng).unwrap().to_string();
    match kind {
        NodeKind::Patient => BTreeMap::new(),
        NodeKind::Ade | NodeKind::Reason => BTreeMap::from([("name".into(), w())]),
        NodeKind::Drug => {
            let (name, strength) = (w(), w());
            BTreeMap::from([("str".into(), compose_str(&name, &strength)), ("name".into(), name), ("strength".into(), strength)])
        }
        NodeKind::Posology => {
            let f = PosologyFields { name: w(), dosage: w(), duration: w(), form: w(), freq: w(), route: w() };
            BTreeMap::from([
                ("dosage".into(), f.dosage.clone()),
                ("duration".into(), f.duration.clone()),
                ("form".into(), f.form.clone()),
                ("freq".into(), f.freq.clone()),
                ("route".into(), f.route.clone()),
                ("name".into(), f.name.clone()),
                ("pos".into(), compose_pos(&f)),
            ])
        }
    }
}

/// A schema-valid random graph with up to `max_nodes` nodes.
pub fn random_graph(seed: u64, max_nodes: usize) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(0..=max_nodes);
    let nodes: Vec<KgNode> = (0..n)
        .map(|id| {
            let kind = *NodeKind::ALL.choose(&mut rng).unwrap();
            KgNode { id, kind, attributes: random_attributes(kind, &mut rng) }
        })
        .collect();
    let mut edges = Vec::new();
    let attempts = rng.random_range(0..=2 * n);
    for _ in 0..attempts {
        let label = *EdgeLabel::ALL.choose(&mut rng).unwrap();
        let (ks, kd) = label.signature();
        let src: Vec<usize> = nodes.iter().filter(|x| x.kind == ks).map(|x| x.id).collect();
        let dst: Vec<usize> = nodes.iter().filter(|x| x.kind == kd).map(|x| x.id).collect();
        if let (Some(&s), Some(&d)) = (src.choose(&mut rng), dst.choose(&mut rng)) {
            let e = KgEdge { src: s, dst: d, label };
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
    }
    KnowledgeGraph::from_parts(nodes, edges)
}
