// Build a knowledge graph from one extracted note and check it against the
// node and edge schema.

use std::collections::BTreeMap;

use medkg::kgraph::fixtures::coumadin_note;
use medkg::kgraph::{build_graph, validate};

pub fn run_example() -> medkg::Result<()> {
    let note = coumadin_note();
    let graph = build_graph(&[note], &BTreeMap::new())?;
    for n in graph.nodes() {
        println!("{:>2} {:<9} {:?}", n.id, n.kind.as_str(), n.attributes);
    }
    for e in graph.edges() {
        println!("{} -[{}]-> {}", e.src, e.label, e.dst);
    }
    let report = validate(&graph);
    println!("{} violations", report.violations.len());
    Ok(())
}

fn main() -> medkg::Result<()> {
    run_example()
}
