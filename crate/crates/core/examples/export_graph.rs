// Serialize a small graph as a Cypher script, GraphML and JSONL, and
// re-import the JSONL.

use std::collections::BTreeMap;

use medkg::kgraph::fixtures::coumadin_note;
use medkg::kgraph::{build_graph, export_cypher, export_graphml, export_jsonl, import_jsonl};

pub fn run_example() -> medkg::Result<()> {
    let graph = build_graph(&[coumadin_note()], &BTreeMap::new())?;
    println!("{}", export_cypher(&graph));
    println!("{}", export_graphml(&graph));
    let jsonl = export_jsonl(&graph)?;
    print!("{jsonl}");
    assert_eq!(import_jsonl(&jsonl)?, graph);
    Ok(())
}

fn main() -> medkg::Result<()> {
    run_example()
}
