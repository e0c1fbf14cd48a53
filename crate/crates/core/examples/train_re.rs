// Build masked relation candidates from annotated notes, train the pair
// classifier briefly and score it on held-out notes.

use medkg::corpus::{generate_synthetic_corpus, split_train_dev, SyntheticConfig};
use medkg::pipeline::{build_vocabulary, evaluate_re, train_re_model, PipelineConfig};
use medkg::relex::{document_candidates, mask};

pub fn run_example() -> medkg::Result<()> {
    let corpus = generate_synthetic_corpus(40, 0, &SyntheticConfig::default())?;
    let (train, dev) = split_train_dev(&corpus, 0.25, 0)?;

    let doc = &train.documents[0];
    let vocab = build_vocabulary(&train.documents);
    for c in document_candidates(doc, &vocab, 128).iter().take(3) {
        let m = mask(c, &doc.text)?;
        println!("label {:?}: {}", m.label, m.masked_text);
    }

    let cfg = PipelineConfig { n_layers: 1, hidden_size: 32, ff_size: 64, epochs: 10, learning_rate: 3e-3, batch_size: 8, ..Default::default() };
    let (model, losses) = train_re_model(&train.documents, &cfg)?;
    println!("epoch losses: {losses:.3?}");
    println!("{}", evaluate_re(&model, &dev.documents, cfg.threshold)?.to_text());
    Ok(())
}

fn main() -> medkg::Result<()> {
    run_example()
}
