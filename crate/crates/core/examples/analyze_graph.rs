// Degree centrality, components, adverse-event communities and the
// drug watch list on a graph where one drug has many adverse events.

use std::collections::BTreeMap;

use medkg::analytics::{connected_components, degree_centrality, detect_communities, drug_ade_report, DEFAULT_WATCH_THRESHOLD};
use medkg::kgraph::fixtures::ade_star_notes;
use medkg::kgraph::{build_graph, NodeKind};

pub fn run_example() -> medkg::Result<()> {
    let graph = build_graph(&ade_star_notes(), &BTreeMap::new())?;
    print!("{}", degree_centrality(&graph, NodeKind::Drug).to_text(&graph));
    print!("{}", connected_components(&graph, None).to_text());
    print!("{}", detect_communities(&graph, "ADE-Drug", 0)?.to_text(&graph));
    print!("{}", drug_ade_report(&graph, DEFAULT_WATCH_THRESHOLD).to_text());
    Ok(())
}

fn main() -> medkg::Result<()> {
    run_example()
}
