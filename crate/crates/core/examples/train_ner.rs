// Train a small tagger on synthetic notes and score it on held-out notes.
// The defaults of the command-line tool (two layers, width 64, ten epochs)
// reach a higher score; this keeps the run short.

use medkg::corpus::{generate_synthetic_corpus, split_train_dev, SyntheticConfig};
use medkg::crf_ner::predict_entities;
use medkg::pipeline::{evaluate_ner, train_ner_model, PipelineConfig};

pub fn run_example() -> medkg::Result<()> {
    let corpus = generate_synthetic_corpus(40, 0, &SyntheticConfig::default())?;
    let (train, dev) = split_train_dev(&corpus, 0.25, 0)?;
    let cfg = PipelineConfig { n_layers: 1, hidden_size: 32, ff_size: 64, epochs: 30, learning_rate: 1e-2, batch_size: 8, ..Default::default() };
    let (model, losses) = train_ner_model(&train.documents, &cfg)?;
    println!("epoch losses: {losses:.2?}");
    println!("{}", evaluate_ner(&model, &dev.documents)?.to_text());

    let note = "Started Metoprolol 25mg PO twice daily for hypertension.";
    for e in predict_entities(note, &model)? {
        println!("{:>10}  {:>3}..{:<3} {}", e.entity_type.as_str(), e.start, e.end, e.surface);
    }
    Ok(())
}

fn main() -> medkg::Result<()> {
    run_example()
}
