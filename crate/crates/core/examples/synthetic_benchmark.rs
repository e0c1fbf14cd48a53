// Train both models with the default configuration on 160 synthetic notes
// and score them on the 40 held out. Takes about a minute on one core in
// release mode.

use std::time::Instant;

use medkg::corpus::{generate_synthetic_corpus, split_train_dev, SyntheticConfig};
use medkg::eval::results_table;
use medkg::pipeline::{evaluate_ner, evaluate_re, train_ner_model, train_re_model, PipelineConfig};

pub fn run_example() -> medkg::Result<()> {
    let corpus = generate_synthetic_corpus(200, 0, &SyntheticConfig::default())?;
    let (train, dev) = split_train_dev(&corpus, 0.2, 0)?;
    let cfg = PipelineConfig::default();

    let t = Instant::now();
    let (ner, losses) = train_ner_model(&train.documents, &cfg)?;
    println!("tagger: losses {losses:.2?} in {:.1?}", t.elapsed());
    let ner_report = evaluate_ner(&ner, &dev.documents)?;

    let t = Instant::now();
    let (re, losses) = train_re_model(&train.documents, &cfg)?;
    println!("relations: losses {losses:.3?} in {:.1?}", t.elapsed());
    let re_report = evaluate_re(&re, &dev.documents, cfg.threshold)?;

    print!("{}", results_table(&[("transformer+crf", "ner", &ner_report), ("transformer", "re", &re_report)]));
    Ok(())
}

fn main() -> medkg::Result<()> {
    run_example()
}
