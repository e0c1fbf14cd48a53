// Train both models on synthetic notes, then run the full extraction
// (coreference, tagging, relation classification) on an unseen note.

use medkg::corpus::{generate_synthetic_corpus, SyntheticConfig};
use medkg::pipeline::{extract_document, train_ner_model, train_re_model, PipelineConfig};

pub fn run_example() -> medkg::Result<()> {
    let corpus = generate_synthetic_corpus(40, 1, &SyntheticConfig::default())?;
    let cfg = PipelineConfig { n_layers: 1, hidden_size: 32, ff_size: 64, epochs: 30, learning_rate: 1e-2, batch_size: 8, ..Default::default() };
    let (ner, _) = train_ner_model(&corpus.documents, &cfg)?;
    let (re, _) = train_re_model(&corpus.documents, &cfg)?;

    let note = "Coumadin 5mg tablet PO daily for atrial fibrillation.\nIt was stopped after the patient developed bleeding.\n";
    let x = extract_document("demo", note, &ner, &re, cfg.threshold)?;
    for e in &x.entities {
        println!("{}  {:<10} {:>3}..{:<3} {}", e.id, e.entity_type.as_str(), e.start, e.end, e.surface);
    }
    for r in &x.relations {
        println!("{}  {:<15} {} -> {}", r.id, r.relation_type, r.arg_drug, r.arg_other);
    }
    Ok(())
}

fn main() -> medkg::Result<()> {
    run_example()
}
