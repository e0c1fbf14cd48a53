//! IOB2 codec, linear-chain CRF and the transformer+CRF entity tagger.

pub mod crf;
mod model;
pub mod tags;

pub use crate::textprep::align_labels as iob2_encode;
pub use crf::{crf_log_partition, crf_marginals, crf_nll_grad, crf_score, crf_viterbi, CrfParams};
pub use model::{prepare_ner_examples, predict_entities, train_ner, NerExample, NerHead, NerModel};
pub use tags::{iob2_decode, repair, Tag, TagSequence, TagSet, NUM_TAGS};
