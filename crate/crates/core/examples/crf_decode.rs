// Decode a three-token sentence with a hand-built CRF: Viterbi path,
// log-partition and per-token marginals.

use ndarray::Array2;

use medkg::corpus::EntityType;
use medkg::crf_ner::{crf_log_partition, crf_marginals, crf_viterbi, CrfParams, Tag, TagSet, NUM_TAGS};

pub fn run_example() -> medkg::Result<()> {
    let mut params = CrfParams::zeros(NUM_TAGS, 1);
    let b = Tag::B(EntityType::Frequency).index();
    let i = Tag::I(EntityType::Frequency).index();
    let drug = Tag::B(EntityType::Drug).index();
    params.transitions[(b, i)] = 2.0;
    params.transitions[(0, i)] = -10.0;

    // "Aspirin twice daily": the last token looks like an isolated I- tag
    // on its own, the transition score pulls it into the frequency.
    let mut emissions = Array2::zeros((3, NUM_TAGS));
    emissions.row_mut(0)[drug] = 3.0;
    emissions.row_mut(1)[b] = 1.0;
    emissions.row_mut(2).fill(0.5);
    emissions.row_mut(2)[i] = 1.0;

    let (path, score) = crf_viterbi(emissions.view(), &params);
    let names = TagSet::default();
    let tags: Vec<&str> = path.iter().map(|&t| names.names()[t].as_str()).collect();
    println!("viterbi: {tags:?} score {score:.3}");
    println!("log Z:   {:.3}", crf_log_partition(emissions.view(), &params));
    let m = crf_marginals(emissions.view(), &params);
    for (pos, row) in m.rows().into_iter().enumerate() {
        let best = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        println!("token {pos}: most likely {} with p = {:.3}", names.names()[best.0], best.1);
    }
    Ok(())
}

fn main() -> medkg::Result<()> {
    run_example()
}
