use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::crf::{crf_nll_grad, crf_viterbi, CrfParams};
use super::tags::{from_indices, iob2_decode, to_indices, TagSet, NUM_TAGS};
use crate::corpus::{AnnotatedDocument, EntityAnnotation};
use crate::encoder::container::ModelFile;
use crate::encoder::{fit, forward, EncoderConfig, EncoderParams, Head, TrainConfig};
use crate::error::{Error, Result};
use crate::tensor::Tensors;
use crate::textprep::{align_labels, chunk_for_encoder, encode_for_encoder, tokenize, Chunk, Token, Vocabulary};

/// Transformer encoder + CRF tagger with its vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct NerModel {
    pub config: EncoderConfig,
    pub encoder: EncoderParams,
    pub crf: CrfParams,
    pub vocab: Vocabulary,
    pub seed: u64,
    /// Drug names seen in training, used by the coreference sieve.
    pub drug_lexicon: Vec<String>,
}

/// One chunk ready for the encoder, with gold word-level tag indices.
#[derive(Debug, Clone, PartialEq)]
pub struct NerExample {
    pub ids: Vec<usize>,
    pub segments: Vec<usize>,
    pub word_starts: Vec<usize>,
    pub gold: Vec<usize>,
}

/// CRF negative log-likelihood over first-subword emissions.
pub struct NerHead;

impl NerHead {
    pub fn emissions(crf: &CrfParams, out: &Array2<f64>, word_starts: &[usize]) -> (Array2<f64>, Array2<f64>) {
        let selected = out.select(Axis(0), word_starts);
        let emissions = selected.dot(&crf.emission);
        (selected, emissions)
    }
}

impl Head for NerHead {
    type Example = NerExample;
    type Params = CrfParams;

    fn inputs<'a>(&self, ex: &'a NerExample) -> (&'a [usize], &'a [usize]) {
        (&ex.ids, &ex.segments)
    }

    fn loss_grad(&self, crf: &CrfParams, ex: &NerExample, out: &Array2<f64>) -> (f64, Array2<f64>, CrfParams) {
        let mut d_out = Array2::zeros(out.dim());
        if ex.word_starts.is_empty() {
            return (0.0, d_out, crf.zeros_like());
        }
        let (selected, emissions) = Self::emissions(crf, out, &ex.word_starts);
        let (nll, d_emit, mut g) = crf_nll_grad(emissions.view(), &ex.gold, crf);
        g.emission = selected.t().dot(&d_emit);
        let d_sel = d_emit.dot(&crf.emission.t());
        for (row, &pos) in ex.word_starts.iter().enumerate() {
            let mut r = d_out.row_mut(pos);
            r += &d_sel.row(row);
        }
        (nll, d_out, g)
    }
}

fn chunk_document(doc_id: &str, tokens: &[Token], text: &str, vocab: &Vocabulary, max_len: usize) -> Vec<Chunk> {
    chunk_for_encoder(doc_id, tokens, text, vocab, max_len)
}

fn encode_chunk(chunk: &Chunk, vocab: &Vocabulary, max_len: usize) -> (Vec<usize>, Vec<usize>) {
    let enc = encode_for_encoder(&chunk.tokens, vocab, max_len);
    (enc.ids, enc.word_starts)
}

/// Tokenize, tag and chunk gold documents. Labels are aligned over the whole
/// document before chunking so an entity cut by a hard split still carries
/// its tags (the orphan `I-` is repaired on decode).
pub fn prepare_ner_examples(docs: &[AnnotatedDocument], vocab: &Vocabulary, max_len: usize) -> Result<Vec<NerExample>> {
    let mut out = Vec::new();
    for doc in docs {
        let tokens = tokenize(&doc.text);
        let tags = to_indices(&align_labels(&tokens, &doc.entities)?);
        for chunk in chunk_document(&doc.doc_id, &tokens, &doc.text, vocab, max_len) {
            let (ids, word_starts) = encode_chunk(&chunk, vocab, max_len);
            out.push(NerExample {
                segments: vec![0; ids.len()],
                ids,
                word_starts,
                gold: tags[chunk.token_range.clone()].to_vec(),
            });
        }
    }
    Ok(out)
}

impl NerModel {
    pub fn new(vocab: Vocabulary, config: EncoderConfig, seed: u64) -> Result<Self> {
        let config = config.with_vocab_size(vocab.len());
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = EncoderParams::init_with(&config, &mut rng);
        let crf = CrfParams::init(NUM_TAGS, config.hidden_size, &mut rng);
        Ok(Self { config, encoder, crf, vocab, seed, drug_lexicon: Vec::new() })
    }

    pub fn to_model_file(&self) -> ModelFile {
        let mut f = ModelFile::default();
        f.put_encoder_config(&self.config, self.seed);
        f.meta.insert("kind".into(), "ner".into());
        f.meta.insert("vocab".into(), self.vocab.to_text());
        f.meta.insert("tagset".into(), TagSet::default().names().join("\n"));
        f.meta.insert("drug_lexicon".into(), self.drug_lexicon.join("\n"));
        f.push_tensors(&self.encoder);
        f.push_tensors(&self.crf);
        f
    }

    pub fn from_model_file(f: &ModelFile) -> Result<Self> {
        if f.meta("kind")? != "ner" {
            return Err(Error::ModelFormat(format!("expected an ner model, found {}", f.meta("kind")?)));
        }
        let config = f.encoder_config()?;
        let vocab = Vocabulary::from_text(f.meta("vocab")?)?;
        if vocab.len() != config.vocab_size {
            return Err(Error::Mismatch(format!("vocabulary has {} entries, encoder expects {}", vocab.len(), config.vocab_size)));
        }
        if f.meta("tagset")? != TagSet::default().names().join("\n") {
            return Err(Error::ModelFormat("unexpected tag set".into()));
        }
        let encoder = f.encoder_params(&config)?;
        let mut crf = CrfParams::zeros(NUM_TAGS, config.hidden_size);
        f.load_tensors(&mut crf)?;
        let drug_lexicon = f.meta("drug_lexicon")?.lines().map(str::to_string).collect();
        Ok(Self { config, encoder, crf, vocab, seed: f.meta_parse("seed")?, drug_lexicon })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        self.to_model_file().write(path)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_model_file(&ModelFile::read(path)?)
    }

    /// Word-level emission scores for one chunk.
    pub fn chunk_emissions(&self, chunk: &Chunk) -> Result<Array2<f64>> {
        let (ids, word_starts) = encode_chunk(chunk, &self.vocab, self.config.max_len);
        let out = forward(&ids, &vec![0; ids.len()], &self.encoder, &self.config)?;
        Ok(NerHead::emissions(&self.crf, &out, &word_starts).1)
    }
}

/// Minimize CRF negative log-likelihood through the encoder. Returns the
/// per-epoch mean loss.
pub fn train_ner(model: &mut NerModel, examples: &[NerExample], train: &TrainConfig) -> Result<Vec<f64>> {
    fit(&NerHead, &mut model.crf, &mut model.encoder, &model.config, examples, train)
}

/// Tokenize, chunk, encode, Viterbi-decode and map spans back to document
/// offsets. Entity ids are `T1..` in text order.
pub fn predict_entities(doc_text: &str, model: &NerModel) -> Result<Vec<EntityAnnotation>> {
    if model.vocab.len() != model.config.vocab_size {
        return Err(Error::Mismatch(format!(
            "vocabulary has {} entries, encoder expects {}",
            model.vocab.len(),
            model.config.vocab_size
        )));
    }
    let tokens = tokenize(doc_text);
    let mut entities = Vec::new();
    for chunk in chunk_document("", &tokens, doc_text, &model.vocab, model.config.max_len) {
        let emissions = model.chunk_emissions(&chunk)?;
        let (path, _) = crf_viterbi(emissions.view(), &model.crf);
        let tags = from_indices(&path)?;
        entities.extend(iob2_decode(&tags, &chunk.tokens, doc_text)?);
    }
    for (i, e) in entities.iter_mut().enumerate() {
        e.id = format!("T{}", i + 1);
    }
    Ok(entities)
}
