//! Drug-centred relation extraction: candidate pairs within a paragraph,
//! entity masking, and a binary classifier over the encoder's `[CLS]` vector.

use std::collections::HashSet;

use ndarray::{s, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedDocument, EntityAnnotation, EntityType, RelationAnnotation};
use crate::encoder::container::ModelFile;
use crate::encoder::{fit, forward, EncoderConfig, EncoderParams, Head, TrainConfig};
use crate::error::{Error, Result};
use crate::span::CharIndex;
use crate::tensor::{normal, Tensors};
use crate::textprep::{chunk_for_encoder, encode_for_encoder, paragraph_pieces, tokenize, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationCandidate {
    pub doc_id: String,
    pub paragraph_index: usize,
    /// Char range of the paragraph in the document.
    pub paragraph: (usize, usize),
    pub drug: EntityAnnotation,
    pub other: EntityAnnotation,
    pub gold_label: Option<u8>,
}

/// A paragraph with the candidate's two entities replaced by mask tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedInstance {
    pub masked_text: String,
    pub label: Option<u8>,
    /// `(start, end, original surface)` of each mask in `masked_text`.
    #[serde(skip, default)]
    pub replacements: Vec<(usize, usize, String)>,
}

impl MaskedInstance {
    /// Put the original surfaces back.
    pub fn unmask(&self) -> String {
        let index = CharIndex::new(&self.masked_text);
        let mut out = String::new();
        let mut pos = 0;
        for (s, e, surface) in &self.replacements {
            out.push_str(index.slice(pos, *s).unwrap_or(""));
            out.push_str(surface);
            pos = *e;
        }
        out.push_str(index.slice(pos, index.len()).unwrap_or(""));
        out
    }
}

/// Paragraph char ranges of a document, cut so each fits the encoder input.
pub fn paragraphs(text: &str, vocab: &Vocabulary, max_len: usize) -> Vec<(usize, usize)> {
    let tokens = tokenize(text);
    chunk_for_encoder("", &tokens, text, vocab, max_len)
        .iter()
        .flat_map(|c| paragraph_pieces(c, text))
        .map(|r| (tokens[r.start].start, tokens[r.end - 1].end))
        .collect()
}

/// Every (drug, non-drug) pair lying in one paragraph. With `gold`, labels
/// are 1 for annotated pairs and 0 otherwise.
pub fn generate_candidates(
    doc_id: &str,
    entities: &[EntityAnnotation],
    gold: Option<&[RelationAnnotation]>,
    paragraphs: &[(usize, usize)],
) -> Vec<RelationCandidate> {
    let linked: Option<HashSet<(&str, &str)>> =
        gold.map(|rels| rels.iter().map(|r| (r.arg_drug.as_str(), r.arg_other.as_str())).collect());
    let mut out = Vec::new();
    for (pi, &(ps, pe)) in paragraphs.iter().enumerate() {
        let inside: Vec<&EntityAnnotation> = entities.iter().filter(|e| e.start >= ps && e.end <= pe).collect();
        for drug in inside.iter().filter(|e| e.entity_type == EntityType::Drug) {
            for other in inside.iter().filter(|e| e.entity_type != EntityType::Drug) {
                out.push(RelationCandidate {
                    doc_id: doc_id.to_string(),
                    paragraph_index: pi,
                    paragraph: (ps, pe),
                    drug: (*drug).clone(),
                    other: (*other).clone(),
                    gold_label: linked.as_ref().map(|l| l.contains(&(drug.id.as_str(), other.id.as_str())) as u8),
                });
            }
        }
    }
    out
}

/// Candidates for a gold document, paragraphs cut for `vocab`/`max_len`.
pub fn document_candidates(doc: &AnnotatedDocument, vocab: &Vocabulary, max_len: usize) -> Vec<RelationCandidate> {
    let paras = paragraphs(&doc.text, vocab, max_len);
    generate_candidates(&doc.doc_id, &doc.entities, Some(&doc.relations), &paras)
}

/// Replace both entity surfaces in the paragraph by their type masks,
/// right to left so earlier offsets stay valid.
pub fn mask(candidate: &RelationCandidate, text: &str) -> Result<MaskedInstance> {
    let (d, o) = (&candidate.drug, &candidate.other);
    if d.overlaps(o) {
        return Err(Error::Integrity(format!("entities {} and {} overlap", d.id, o.id)));
    }
    let index = CharIndex::new(text);
    let (ps, pe) = candidate.paragraph;
    let mut spans = [d, o];
    spans.sort_by_key(|e| e.start);
    for e in spans {
        if e.start < ps || e.end > pe || index.slice(e.start, e.end) != Some(e.surface.as_str()) {
            return Err(Error::Integrity(format!("entity {} does not lie in its paragraph", e.id)));
        }
    }
    let mut masked = index.slice(ps, pe).ok_or_else(|| Error::Invalid("paragraph outside text".into()))?.to_string();
    for e in spans.iter().rev() {
        let local = CharIndex::new(&masked);
        let (a, b) = (local.byte(e.start - ps), local.byte(e.end - ps));
        masked.replace_range(a..b, &e.entity_type.mask_token());
    }
    // mask positions in the masked text
    let mut replacements = Vec::with_capacity(2);
    let mut shift: isize = 0;
    for e in spans {
        let m = e.entity_type.mask_token().chars().count();
        let start = (e.start - ps) as isize + shift;
        replacements.push((start as usize, start as usize + m, e.surface.clone()));
        shift += m as isize - (e.end - e.start) as isize;
    }
    Ok(MaskedInstance { masked_text: masked, label: candidate.gold_label, replacements })
}

fn is_mask(surface: &str) -> bool {
    EntityType::ALL.iter().any(|t| t.mask_token() == surface)
}

/// `"<Type>-Drug"` from the non-drug argument's type.
pub fn derive_relation_type(candidate: &RelationCandidate) -> String {
    candidate.other.entity_type.relation_label()
}

/// Two-way classifier weights over the `[CLS]` vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ReHeadParams {
    pub weight: Array2<f64>,
    pub bias: Array2<f64>,
}

impl ReHeadParams {
    pub fn init(hidden: usize, rng: &mut impl rand::Rng) -> Self {
        Self { weight: normal(hidden, 2, 0.02, rng), bias: Array2::zeros((1, 2)) }
    }
}

impl Tensors for ReHeadParams {
    fn named(&self) -> Vec<(String, &Array2<f64>)> {
        vec![("re.weight".into(), &self.weight), ("re.bias".into(), &self.bias)]
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        vec![("re.weight".into(), &mut self.weight), ("re.bias".into(), &mut self.bias)]
    }

    fn zeros_like(&self) -> Self {
        Self { weight: Array2::zeros(self.weight.dim()), bias: Array2::zeros(self.bias.dim()) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReExample {
    pub ids: Vec<usize>,
    pub segments: Vec<usize>,
    pub label: usize,
}

/// Softmax cross-entropy on `[CLS]`.
pub struct ReHead;

fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let (a, b) = ((logits[0] - m).exp(), (logits[1] - m).exp());
    [a / (a + b), b / (a + b)]
}

impl ReHead {
    pub fn probabilities(head: &ReHeadParams, out: &Array2<f64>) -> [f64; 2] {
        let logits = out.slice(s![0..1, ..]).dot(&head.weight) + &head.bias;
        softmax2([logits[(0, 0)], logits[(0, 1)]])
    }
}

impl Head for ReHead {
    type Example = ReExample;
    type Params = ReHeadParams;

    fn inputs<'a>(&self, ex: &'a ReExample) -> (&'a [usize], &'a [usize]) {
        (&ex.ids, &ex.segments)
    }

    fn loss_grad(&self, head: &ReHeadParams, ex: &ReExample, out: &Array2<f64>) -> (f64, Array2<f64>, ReHeadParams) {
        let p = Self::probabilities(head, out);
        let loss = -p[ex.label].max(f64::MIN_POSITIVE).ln();
        let mut d_logits = Array2::from_shape_vec((1, 2), p.to_vec()).unwrap();
        d_logits[(0, ex.label)] -= 1.0;
        let cls = out.slice(s![0..1, ..]);
        let g = ReHeadParams { weight: cls.t().dot(&d_logits), bias: d_logits.clone() };
        let mut d_out = Array2::zeros(out.dim());
        d_out.slice_mut(s![0..1, ..]).assign(&d_logits.dot(&head.weight.t()));
        (loss, d_out, g)
    }
}

/// Encoder plus relation head with its vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationModel {
    pub config: EncoderConfig,
    pub encoder: EncoderParams,
    pub head: ReHeadParams,
    pub vocab: Vocabulary,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationPrediction {
    pub candidate: RelationCandidate,
    pub probability: f64,
    pub label: u8,
}

impl RelationModel {
    pub fn new(vocab: Vocabulary, config: EncoderConfig, seed: u64) -> Result<Self> {
        let config = config.with_vocab_size(vocab.len());
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = EncoderParams::init_with(&config, &mut rng);
        let head = ReHeadParams::init(config.hidden_size, &mut rng);
        Ok(Self { config, encoder, head, vocab, seed })
    }

    /// Encoder input for a masked paragraph. Segment id 1 marks the pieces
    /// from the first mask through the last.
    pub fn example(&self, masked_text: &str, label: usize) -> ReExample {
        let tokens = tokenize(masked_text);
        let enc = encode_for_encoder(&tokens, &self.vocab, self.config.max_len);
        let mut segments = vec![0; enc.ids.len()];
        let masks: Vec<usize> = (0..enc.word_starts.len()).filter(|&w| is_mask(&tokens[w].surface)).collect();
        if let (Some(&first), Some(&last)) = (masks.first(), masks.last()) {
            let end = enc.word_starts[last] + enc.pieces_per_word[last];
            segments[enc.word_starts[first]..end].fill(1);
        }
        ReExample { segments, ids: enc.ids, label }
    }

    /// Class probabilities `[unrelated, related]`.
    pub fn probabilities(&self, masked_text: &str) -> Result<[f64; 2]> {
        let ex = self.example(masked_text, 0);
        let out = forward(&ex.ids, &ex.segments, &self.encoder, &self.config)?;
        Ok(ReHead::probabilities(&self.head, &out))
    }

    pub fn to_model_file(&self) -> ModelFile {
        let mut f = ModelFile::default();
        f.put_encoder_config(&self.config, self.seed);
        f.meta.insert("kind".into(), "re".into());
        f.meta.insert("vocab".into(), self.vocab.to_text());
        f.push_tensors(&self.encoder);
        f.push_tensors(&self.head);
        f
    }

    pub fn from_model_file(f: &ModelFile) -> Result<Self> {
        if f.meta("kind")? != "re" {
            return Err(Error::ModelFormat(format!("expected an re model, found {}", f.meta("kind")?)));
        }
        let config = f.encoder_config()?;
        let vocab = Vocabulary::from_text(f.meta("vocab")?)?;
        if vocab.len() != config.vocab_size {
            return Err(Error::Mismatch(format!("vocabulary has {} entries, encoder expects {}", vocab.len(), config.vocab_size)));
        }
        let encoder = f.encoder_params(&config)?;
        let mut head = ReHeadParams { weight: Array2::zeros((config.hidden_size, 2)), bias: Array2::zeros((1, 2)) };
        f.load_tensors(&mut head)?;
        Ok(Self { config, encoder, head, vocab, seed: f.meta_parse("seed")? })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        self.to_model_file().write(path)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_model_file(&ModelFile::read(path)?)
    }
}

/// Fit the classifier on labelled instances. Both labels must be present.
pub fn train_re(model: &mut RelationModel, instances: &[MaskedInstance], train: &TrainConfig) -> Result<Vec<f64>> {
    let mut seen = [false; 2];
    let mut examples = Vec::with_capacity(instances.len());
    for inst in instances {
        let label = inst.label.ok_or_else(|| Error::Invalid("unlabelled training instance".into()))?;
        if label > 1 {
            return Err(Error::Invalid(format!("label {label} is not 0 or 1")));
        }
        seen[label as usize] = true;
        examples.push(model.example(&inst.masked_text, label as usize));
    }
    if !(seen[0] && seen[1]) {
        return Err(Error::Invalid("relation training set needs both labels".into()));
    }
    fit(&ReHead, &mut model.head, &mut model.encoder, &model.config, &examples, train)
}

/// Classify each candidate of one document: label 1 iff the related-class
/// probability reaches `threshold`.
pub fn predict_relations(
    candidates: &[RelationCandidate],
    text: &str,
    model: &RelationModel,
    threshold: f64,
) -> Result<Vec<RelationPrediction>> {
    candidates
        .iter()
        .map(|c| {
            let p = model.probabilities(&mask(c, text)?.masked_text)?[1];
            Ok(RelationPrediction { candidate: c.clone(), probability: p, label: (p >= threshold) as u8 })
        })
        .collect()
}

/// Typed relations from positive predictions, ids `R1..` in input order.
pub fn to_relations(predictions: &[RelationPrediction]) -> Vec<RelationAnnotation> {
    predictions
        .iter()
        .filter(|p| p.label == 1)
        .enumerate()
        .map(|(i, p)| RelationAnnotation {
            id: format!("R{}", i + 1),
            relation_type: derive_relation_type(&p.candidate),
            arg_drug: p.candidate.drug.id.clone(),
            arg_other: p.candidate.other.id.clone(),
        })
        .collect()
}

/// JSONL with one `{masked_text, label}` object per line.
pub fn instances_to_jsonl(instances: &[MaskedInstance]) -> Result<String> {
    let mut out = String::new();
    for inst in instances {
        out.push_str(&serde_json::to_string(inst)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn instances_from_jsonl(content: &str) -> Result<Vec<MaskedInstance>> {
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_standoff;
    use crate::encoder::grad;
    use rand::Rng;

    fn ent(id: &str, t: EntityType, s: usize, e: usize, text: &str) -> EntityAnnotation {
        EntityAnnotation::new(id, t, s, e, crate::span::char_slice(text, s, e).unwrap())
    }

    fn small_config() -> EncoderConfig {
        EncoderConfig { n_layers: 1, n_heads: 2, hidden_size: 16, max_len: 32, ff_size: 16, vocab_size: 0 }
    }

    #[test]
    fn candidate_counts() {
        let text = "Lisinopril 20mg daily PO. Aspirin 81mg.\n\nTylenol";
        let e = vec![
            ent("T1", EntityType::Drug, 0, 10, text),
            ent("T2", EntityType::Strength, 11, 15, text),
            ent("T3", EntityType::Frequency, 16, 21, text),
            ent("T4", EntityType::Route, 22, 24, text),
        ];
        let paras = vec![(0, 39), (41, 48)];
        assert_eq!(generate_candidates("d", &e, None, &paras).len(), 3);
        let mut e2 = e.clone();
        e2.truncate(3);
        e2.push(ent("T5", EntityType::Drug, 26, 33, text));
        let c = generate_candidates("d", &e2, None, &paras);
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|c| c.gold_label.is_none()));
        let only_other = vec![ent("T2", EntityType::Strength, 11, 15, text)];
        assert!(generate_candidates("d", &only_other, None, &paras).is_empty());
    }

    #[test]
    fn gold_labels_and_paragraphs() {
        let text = "Lisinopril 20mg daily.\n\nAspirin for pain.\n";
        let ann = "T1\tDrug 0 10\tLisinopril\nT2\tStrength 11 15\t20mg\nT3\tDrug 24 31\tAspirin\nT4\tReason 36 40\tpain\n\
                   R1\tStrength-Drug Arg1:T1 Arg2:T2\nR2\tReason-Drug Arg1:T3 Arg2:T4\n";
        let doc = parse_standoff(text, ann, "d").unwrap();
        let vocab = Vocabulary::build(tokenize(text).iter().map(|t| t.surface.as_str()));
        let c = document_candidates(&doc, &vocab, 128);
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|c| c.gold_label == Some(1)));
        assert_eq!(c[1].paragraph_index, 1);
    }

    fn cand(text: &str, d: (usize, usize), o: (usize, usize, EntityType)) -> RelationCandidate {
        RelationCandidate {
            doc_id: "d".into(),
            paragraph_index: 0,
            paragraph: (0, text.chars().count()),
            drug: ent("T1", EntityType::Drug, d.0, d.1, text),
            other: ent("T2", o.2, o.0, o.1, text),
            gold_label: Some(1),
        }
    }

    #[test]
    fn masks_both_entities() {
        let text = "Lisinopril 20mg";
        let m = mask(&cand(text, (0, 10), (11, 15, EntityType::Strength)), text).unwrap();
        assert_eq!(m.masked_text, "@Drug$ @Strength$");
        assert_eq!(m.unmask(), text);
        assert_eq!(m.label, Some(1));
        let text = "Coumadin10mg";
        let m = mask(&cand(text, (0, 8), (8, 12, EntityType::Strength)), text).unwrap();
        assert_eq!(m.masked_text, "@Drug$@Strength$");
        assert_eq!(m.unmask(), text);
        let text = "for pain take Tylenol";
        let m = mask(&cand(text, (14, 21), (4, 8, EntityType::Reason)), text).unwrap();
        assert_eq!(m.masked_text, "for @Reason$ take @Drug$");
        assert_eq!(m.unmask(), text);
        assert_eq!(tokenize(&m.masked_text).iter().filter(|t| t.surface.starts_with('@')).count(), 2);
    }

    #[test]
    fn overlapping_mask_is_error() {
        let text = "Lisinopril";
        assert!(mask(&cand(text, (0, 10), (2, 5, EntityType::Form)), text).is_err());
    }

    #[test]
    fn relation_types() {
        let text = "Lisinopril 20mg";
        for (t, label) in [(EntityType::Ade, "ADE-Drug"), (EntityType::Strength, "Strength-Drug"), (EntityType::Route, "Route-Drug")] {
            assert_eq!(derive_relation_type(&cand(text, (0, 10), (11, 15, t))), label);
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let inst = vec![
            MaskedInstance { masked_text: "@Drug$ @Route$".into(), label: Some(0), replacements: vec![] },
            MaskedInstance { masked_text: "@Drug$ x @ADE$".into(), label: None, replacements: vec![] },
        ];
        let s = instances_to_jsonl(&inst).unwrap();
        assert!(s.starts_with("{\"masked_text\":\"@Drug$ @Route$\",\"label\":0}\n"));
        assert_eq!(instances_from_jsonl(&s).unwrap(), inst);
    }

    fn toy_set() -> Vec<MaskedInstance> {
        let mk = |t: &str, l| MaskedInstance { masked_text: t.into(), label: Some(l), replacements: vec![] };
        vec![
            mk("@Drug$ @Strength$ daily .", 1),
            mk("@Drug$ . then @Reason$ noted .", 0),
            mk("@Drug$ given for @Reason$ .", 1),
            mk("@Drug$ stopped . @Strength$ later .", 0),
        ]
    }

    fn toy_model() -> RelationModel {
        let words: Vec<String> = toy_set().iter().flat_map(|i| tokenize(&i.masked_text)).map(|t| t.surface).collect();
        RelationModel::new(Vocabulary::build(words.iter().map(String::as_str)), small_config(), 5).unwrap()
    }

    #[test]
    fn separable_set_is_learned() {
        let mut m = toy_model();
        let train = TrainConfig { epochs: 10, batch_size: 1, learning_rate: 1e-2, seed: 0 };
        train_re(&mut m, &toy_set(), &train).unwrap();
        for inst in toy_set() {
            let p = m.probabilities(&inst.masked_text).unwrap();
            assert!((p[0] + p[1] - 1.0).abs() < 1e-9);
            assert_eq!((p[1] >= 0.5) as u8, inst.label.unwrap(), "{}: {p:?}", inst.masked_text);
        }
    }

    #[test]
    fn zero_epochs_and_single_class() {
        let mut m = toy_model();
        let before = m.clone();
        train_re(&mut m, &toy_set(), &TrainConfig { epochs: 0, ..Default::default() }).unwrap();
        assert_eq!(m, before);
        let ones: Vec<MaskedInstance> = toy_set().into_iter().filter(|i| i.label == Some(1)).collect();
        assert!(matches!(train_re(&mut m, &ones, &TrainConfig::default()), Err(Error::Invalid(_))));
    }

    #[test]
    fn empty_candidates_predict_nothing() {
        assert!(predict_relations(&[], "", &toy_model(), 0.5).unwrap().is_empty());
    }

    #[test]
    fn head_gradient_matches_finite_differences() {
        let m = toy_model();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut head = m.head.clone();
        head.weight.mapv_inplace(|_| rng.random_range(-1.0..1.0));
        let batch: Vec<ReExample> = toy_set().iter().map(|i| m.example(&i.masked_text, i.label.unwrap() as usize)).collect();
        let g = grad(&ReHead, &head, &m.encoder, &m.config, &batch).unwrap();
        let h = 1e-6;
        for ti in 0..2 {
            let analytic = g.head.named()[ti].1.clone();
            for idx in analytic.indexed_iter().map(|(i, _)| i).collect::<Vec<_>>() {
                let orig = head.named()[ti].1[idx];
                head.named_mut()[ti].1[idx] = orig + h;
                let up = grad(&ReHead, &head, &m.encoder, &m.config, &batch).unwrap().loss;
                head.named_mut()[ti].1[idx] = orig - h;
                let down = grad(&ReHead, &head, &m.encoder, &m.config, &batch).unwrap().loss;
                head.named_mut()[ti].1[idx] = orig;
                let fd = (up - down) / (2.0 * h);
                let an = analytic[idx];
                assert!((fd - an).abs() / fd.abs().max(an.abs()).max(1e-6) < 1e-4, "{idx:?}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn encoder_gradient_through_cls_matches_finite_differences() {
        let m = toy_model();
        let batch: Vec<ReExample> = toy_set().iter().map(|i| m.example(&i.masked_text, i.label.unwrap() as usize)).collect();
        let mut enc = m.encoder.clone();
        let g = grad(&ReHead, &m.head, &enc, &m.config, &batch).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-5;
        let names = g.encoder.named().len();
        for ti in 0..names {
            let analytic = g.encoder.named()[ti].1.clone();
            let idx = (rng.random_range(0..analytic.nrows()), rng.random_range(0..analytic.ncols()));
            let orig = enc.named()[ti].1[idx];
            enc.named_mut()[ti].1[idx] = orig + h;
            let up = grad(&ReHead, &m.head, &enc, &m.config, &batch).unwrap().loss;
            enc.named_mut()[ti].1[idx] = orig - h;
            let down = grad(&ReHead, &m.head, &enc, &m.config, &batch).unwrap().loss;
            enc.named_mut()[ti].1[idx] = orig;
            let fd = (up - down) / (2.0 * h);
            let an = analytic[idx];
            assert!((fd - an).abs() / fd.abs().max(an.abs()).max(1e-6) < 1e-4, "{}{idx:?}: {fd} vs {an}", g.encoder.named()[ti].0);
        }
    }

    #[test]
    fn model_file_round_trip() {
        let m = toy_model();
        let back = RelationModel::from_model_file(&ModelFile::from_bytes(&m.to_model_file().to_bytes()).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
