// Generate a small synthetic corpus and show one note with its standoff
// annotations.

use medkg::corpus::{generate_synthetic_corpus, write_standoff, SyntheticConfig};

pub fn run_example() -> medkg::Result<()> {
    let corpus = generate_synthetic_corpus(5, 42, &SyntheticConfig::default())?;
    let doc = &corpus.documents[0];
    let (txt, ann) = write_standoff(doc);
    println!("== {}.txt ==\n{txt}", doc.doc_id);
    println!("== {}.ann ==\n{ann}", doc.doc_id);
    let entities: usize = corpus.documents.iter().map(|d| d.entities.len()).sum();
    let relations: usize = corpus.documents.iter().map(|d| d.relations.len()).sum();
    println!("{} notes, {entities} entities, {relations} relations", corpus.len());
    Ok(())
}

fn main() -> medkg::Result<()> {
    run_example()
}
