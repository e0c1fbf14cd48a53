//! Degree centrality, connected components, label-propagation communities
//! and a per-drug adverse-event report over a knowledge graph.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kgraph::{EdgeLabel, KnowledgeGraph, NodeKind};

/// Node kinds linking prescriptions to reasons.
pub const PRESCRIPTION_REASON_KINDS: [NodeKind; 3] = [NodeKind::Posology, NodeKind::Drug, NodeKind::Reason];

/// Adverse-event count above which a drug is flagged.
pub const DEFAULT_WATCH_THRESHOLD: usize = 5;

pub const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CentralityReport {
    pub kind: NodeKind,
    /// `(node id, degree)`, highest degree first, ties by ascending id.
    pub ranking: Vec<(usize, usize)>,
}

/// Undirected degree of every node of `kind`.
pub fn degree_centrality(g: &KnowledgeGraph, kind: NodeKind) -> CentralityReport {
    let mut ranking: Vec<(usize, usize)> = g.nodes_of(kind).map(|n| (n.id, g.incident_edges(n.id).count())).collect();
    ranking.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    CentralityReport { kind, ranking }
}

impl CentralityReport {
    pub fn to_text(&self, g: &KnowledgeGraph) -> String {
        let mut out = format!("{:>6}  {:>6}  {}\n", "id", "degree", "name");
        for &(id, d) in &self.ranking {
            let name = g.node(id).map(|n| n.attr("name")).unwrap_or("");
            out.push_str(&format!("{id:>6}  {d:>6}  {name}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentAssignment {
    /// Node id to component id; a component is named by its smallest node id.
    pub components: BTreeMap<usize, usize>,
}

impl ComponentAssignment {
    pub fn count(&self) -> usize {
        self.components.values().collect::<BTreeSet<_>>().len()
    }

    /// Members of every component, components ordered by id.
    pub fn groups(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&n, &c) in &self.components {
            out.entry(c).or_default().push(n);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:>9}  {:>5}  members\n", "component", "size");
        for (c, members) in self.groups() {
            let list: Vec<String> = members.iter().map(usize::to_string).collect();
            out.push_str(&format!("{c:>9}  {:>5}  {}\n", members.len(), list.join(" ")));
        }
        out
    }
}

fn find(parent: &mut BTreeMap<usize, usize>, x: usize) -> usize {
    let mut root = x;
    while parent[&root] != root {
        root = parent[&root];
    }
    let mut cur = x;
    while parent[&cur] != root {
        let next = parent[&cur];
        parent.insert(cur, root);
        cur = next;
    }
    root
}

/// Undirected components by union-find, optionally restricted to the
/// subgraph induced by `kinds`.
pub fn connected_components(g: &KnowledgeGraph, kinds: Option<&[NodeKind]>) -> ComponentAssignment {
    let keep = |k: NodeKind| kinds.is_none_or(|ks| ks.contains(&k));
    let mut parent: BTreeMap<usize, usize> = g.nodes().filter(|n| keep(n.kind)).map(|n| (n.id, n.id)).collect();
    for e in g.edges() {
        if parent.contains_key(&e.src) && parent.contains_key(&e.dst) {
            let (a, b) = (find(&mut parent, e.src), find(&mut parent, e.dst));
            // the smaller root wins so component ids are minimal members
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            parent.insert(hi, lo);
        }
    }
    let ids: Vec<usize> = parent.keys().copied().collect();
    let components = ids.into_iter().map(|n| (n, find(&mut parent, n))).collect();
    ComponentAssignment { components }
}

/// Asynchronous label propagation over `adjacency` (undirected, by index).
/// Every node starts with its own index as label; each sweep visits nodes in
/// an order shuffled by `seed` and adopts the most frequent neighbour label,
/// ties going to the smallest. Stops at a fixed point or after `MAX_SWEEPS`.
pub fn label_propagation(adjacency: &[Vec<usize>], seed: u64) -> Vec<usize> {
    let n = adjacency.len();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_SWEEPS {
        order.shuffle(&mut rng);
        let mut changed = false;
        for &v in &order {
            if adjacency[v].is_empty() {
                continue;
            }
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for &u in &adjacency[v] {
                *counts.entry(labels[u]).or_default() += 1;
            }
            let best = counts.iter().fold((usize::MAX, 0), |acc, (&l, &c)| if c > acc.1 { (l, c) } else { acc }).0;
            if best != labels[v] {
                labels[v] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    pub edge_label: EdgeLabel,
    pub seed: u64,
    /// Node id to community id; a community is named by a member node id.
    pub communities: BTreeMap<usize, usize>,
}

impl CommunityAssignment {
    pub fn count(&self) -> usize {
        self.communities.values().collect::<BTreeSet<_>>().len()
    }

    pub fn to_text(&self, g: &KnowledgeGraph) -> String {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&n, &c) in &self.communities {
            groups.entry(c).or_default().push(n);
        }
        let mut out = format!("{:>9}  {:>5}  members\n", "community", "size");
        for (c, members) in groups {
            let names: Vec<String> = members
                .iter()
                .map(|&m| g.node(m).map(|n| format!("{}:{}", n.kind, n.attr("name"))).unwrap_or_default())
                .collect();
            out.push_str(&format!("{c:>9}  {:>5}  {}\n", members.len(), names.join(", ")));
        }
        out
    }
}

/// Communities of the subgraph formed by edges labelled `edge_label`.
pub fn detect_communities(g: &KnowledgeGraph, edge_label: &str, seed: u64) -> Result<CommunityAssignment> {
    let label: EdgeLabel = edge_label.parse()?;
    let members: BTreeSet<usize> = g.edges().iter().filter(|e| e.label == label).flat_map(|e| [e.src, e.dst]).collect();
    let ids: Vec<usize> = members.into_iter().collect();
    let index: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut adjacency = vec![Vec::new(); ids.len()];
    for e in g.edges().iter().filter(|e| e.label == label) {
        let (a, b) = (index[&e.src], index[&e.dst]);
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let labels = label_propagation(&adjacency, seed);
    let communities = ids.iter().enumerate().map(|(i, &id)| (id, ids[labels[i]])).collect();
    Ok(CommunityAssignment { edge_label: label, seed, communities })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrugAdeEntry {
    pub drug: String,
    pub ades: Vec<String>,
    /// More adverse events than the watch threshold.
    pub monitor_closely: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrugAdeReport {
    pub threshold: usize,
    pub drugs: BTreeMap<usize, DrugAdeEntry>,
}

/// Distinct adverse-event names per drug node.
pub fn drug_ade_report(g: &KnowledgeGraph, threshold: usize) -> DrugAdeReport {
    let drugs = g
        .nodes_of(NodeKind::Drug)
        .map(|d| {
            let ades: BTreeSet<String> = g
                .incident_edges(d.id)
                .filter(|e| e.label == EdgeLabel::AdeDrug && e.src == d.id)
                .filter_map(|e| g.node(e.dst).map(|n| n.attr("name").to_string()))
                .collect();
            let entry = DrugAdeEntry { drug: d.attr("str").to_string(), monitor_closely: ades.len() > threshold, ades: ades.into_iter().collect() };
            (d.id, entry)
        })
        .collect();
    DrugAdeReport { threshold, drugs }
}

impl DrugAdeReport {
    pub fn to_text(&self) -> String {
        let w = self.drugs.values().map(|e| e.drug.len()).max().unwrap_or(0).max(4);
        let mut out = format!("{:>6}  {:<w$}  {:>4}  {:<7}  adverse events\n", "id", "drug", "ades", "monitor");
        for (id, e) in &self.drugs {
            let flag = if e.monitor_closely { "yes" } else { "" };
            out.push_str(&format!("{id:>6}  {:<w$}  {:>4}  {:<7}  {}\n", e.drug, e.ades.len(), flag, e.ades.join(", ")));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use std::collections::VecDeque;

    use super::*;
    use crate::kgraph::fixtures::{ade_star_notes, coumadin_note, random_graph};
    use crate::kgraph::{build_graph, export_jsonl};
    use proptest::prelude::*;

    fn star_graph() -> KnowledgeGraph {
        build_graph(&ade_star_notes(), &BTreeMap::new()).unwrap()
    }

    #[test]
    fn empty_graph() {
        let g = KnowledgeGraph::default();
        assert!(degree_centrality(&g, NodeKind::Drug).ranking.is_empty());
        assert_eq!(connected_components(&g, None).count(), 0);
        assert_eq!(detect_communities(&g, "ADE-Drug", 0).unwrap().count(), 0);
        assert!(drug_ade_report(&g, 5).drugs.is_empty());
    }

    #[test]
    fn star_degrees_and_flag() {
        let g = star_graph();
        let r = degree_centrality(&g, NodeKind::Drug);
        // 7 adverse events plus the posology link
        assert_eq!(r.ranking[0].1, 8);
        assert_eq!(g.node(r.ranking[0].0).unwrap().attr("name"), "coumadin");
        assert_eq!(r.ranking[1].1, 3);
        let report = drug_ade_report(&g, DEFAULT_WATCH_THRESHOLD);
        assert_eq!(report.drugs.len(), 2);
        let flagged: Vec<&DrugAdeEntry> = report.drugs.values().filter(|e| e.monitor_closely).collect();
        assert_eq!(flagged.len(), 1);
        assert_eq!(flagged[0].ades.len(), 7);
        assert!(report.to_text().contains("yes"));
    }

    #[test]
    fn drug_without_ades_is_listed_unflagged() {
        let mut note = coumadin_note();
        note.relations.retain(|r| r.relation_type != "ADE-Drug");
        let g = build_graph(&[note], &BTreeMap::new()).unwrap();
        let r = drug_ade_report(&g, 5);
        let e = r.drugs.values().next().unwrap();
        assert!(e.ades.is_empty() && !e.monitor_closely);
    }

    #[test]
    fn components_of_fixtures() {
        let g = star_graph();
        assert_eq!(connected_components(&g, None).count(), 2);
        let g = build_graph(&[coumadin_note()], &BTreeMap::new()).unwrap();
        assert_eq!(connected_components(&g, None).count(), 1);
        // without the drug connector the reason is cut off from the posology
        let c = connected_components(&g, Some(&[NodeKind::Posology, NodeKind::Reason]));
        assert_eq!(c.count(), 2);
        assert_eq!(connected_components(&g, Some(&PRESCRIPTION_REASON_KINDS)).count(), 1);
    }

    #[test]
    fn communities_on_stars_and_single_edge() {
        let c = detect_communities(&star_graph(), "ADE-Drug", 0).unwrap();
        assert_eq!(c.count(), 2);
        assert_eq!(c.communities.len(), 2 + 9);
        assert!(matches!(detect_communities(&star_graph(), "TREATS", 0), Err(crate::Error::Invalid(_))));
        let labels = label_propagation(&[vec![1], vec![0]], 0);
        assert_eq!(labels[0], labels[1]);
    }

    fn two_cliques() -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); 10];
        for block in [0..5, 5..10] {
            for a in block.clone() {
                for b in block.clone() {
                    if a != b {
                        adj[a].push(b);
                    }
                }
            }
        }
        adj[4].push(5);
        adj[5].push(4);
        adj
    }

    #[test]
    fn two_cliques_two_communities() {
        let labels = label_propagation(&two_cliques(), 0);
        assert_eq!(labels, vec![0, 0, 0, 0, 0, 5, 5, 5, 5, 5]);
    }

    fn bfs_components(g: &KnowledgeGraph) -> BTreeSet<BTreeSet<usize>> {
        let mut seen = BTreeSet::new();
        let mut out = BTreeSet::new();
        for n in g.nodes() {
            if !seen.insert(n.id) {
                continue;
            }
            let mut comp = BTreeSet::from([n.id]);
            let mut queue = VecDeque::from([n.id]);
            while let Some(v) = queue.pop_front() {
                for e in g.edges() {
                    let next = if e.src == v { e.dst } else if e.dst == v { e.src } else { continue };
                    if seen.insert(next) {
                        comp.insert(next);
                        queue.push_back(next);
                    }
                }
            }
            out.insert(comp);
        }
        out
    }

    proptest! {
        #[test]
        fn degrees_components_and_communities(seed in 0u64..100_000) {
            let g = random_graph(seed, 50);
            let before = export_jsonl(&g).unwrap();
            let mut total = 0;
            for kind in NodeKind::ALL {
                let r = degree_centrality(&g, kind);
                prop_assert_eq!(r.ranking.len(), g.nodes_of(kind).count());
                for &(id, d) in &r.ranking {
                    let brute = g.edges().iter().filter(|e| e.src == id || e.dst == id).count();
                    prop_assert_eq!(d, brute);
                    total += d;
                }
                prop_assert!(r.ranking.windows(2).all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0)));
            }
            prop_assert_eq!(total, 2 * g.edges().len());
            let groups: BTreeSet<BTreeSet<usize>> =
                connected_components(&g, None).groups().into_values().map(|v| v.into_iter().collect()).collect();
            prop_assert_eq!(groups, bfs_components(&g));
            let c = detect_communities(&g, "ADE-Drug", seed).unwrap();
            let comps = connected_components(&g, None).components;
            for (a, ca) in &c.communities {
                for (b, cb) in &c.communities {
                    if ca == cb {
                        prop_assert_eq!(comps[a], comps[b]);
                    }
                }
            }
            prop_assert_eq!(export_jsonl(&g).unwrap(), before);
        }
    }
}
