//! End-to-end commands. Every stage reads and writes plain files (standoff
//! corpora, model containers, JSONL) so each can run on its own.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analytics::{connected_components, degree_centrality, detect_communities, drug_ade_report, DEFAULT_WATCH_THRESHOLD};
use crate::corpus::{
    generate_synthetic_corpus, split_train_dev, AnnotatedDocument, Corpus, EntityAnnotation, EntityType, Extraction,
    RelationAnnotation, SyntheticConfig,
};
use crate::coref::{substitute, CorefResolver, MentionCluster, OffsetMap, Sieve};
use crate::crf_ner::{predict_entities, prepare_ner_examples, train_ner, NerModel};
use crate::encoder::{EncoderConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{score_ner, score_re, Matching, MetricReport};
use crate::kgraph::{build_graph, export_cypher, export_graphml, export_jsonl, import_jsonl, validate, KnowledgeGraph, NodeKind, ValidationReport};
use crate::relex::{document_candidates, generate_candidates, mask, paragraphs, predict_relations, to_relations, train_re, RelationModel};
use crate::span::CharIndex;
use crate::textprep::{tokenize, Vocabulary};

/// Write `bytes` to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Settings shared by all commands. Loaded from a `key = value` file and
/// overridden by command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub max_seq_len: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub n_layers: usize,
    pub n_heads: usize,
    pub hidden_size: usize,
    pub ff_size: usize,
    /// Model initialization and shuffling; the relation model uses `seed + 1`.
    pub seed: u64,
    pub split_seed: u64,
    pub dev_fraction: f64,
    pub threshold: f64,
    pub watch_threshold: usize,
    pub n_docs: usize,
    pub corpus: Option<PathBuf>,
    pub notes: Option<PathBuf>,
    pub ner_model: Option<PathBuf>,
    pub re_model: Option<PathBuf>,
    pub extractions: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub patients: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let enc = EncoderConfig::default();
        let train = TrainConfig::default();
        Self {
            max_seq_len: enc.max_len,
            batch_size: train.batch_size,
            epochs: train.epochs,
            learning_rate: train.learning_rate,
            n_layers: enc.n_layers,
            n_heads: enc.n_heads,
            hidden_size: enc.hidden_size,
            ff_size: enc.ff_size,
            seed: 0,
            split_seed: 0,
            dev_fraction: 0.2,
            threshold: 0.5,
            watch_threshold: DEFAULT_WATCH_THRESHOLD,
            n_docs: 200,
            corpus: None,
            notes: None,
            ner_model: None,
            re_model: None,
            extractions: None,
            graph: None,
            patients: None,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Usage(format!("bad value {value:?} for {key}")))
}

impl PipelineConfig {
    /// Set one field by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let path = || Some(PathBuf::from(value));
        match key {
            "max_seq_len" => self.max_seq_len = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "n_layers" => self.n_layers = parse_value(key, value)?,
            "n_heads" => self.n_heads = parse_value(key, value)?,
            "hidden_size" => self.hidden_size = parse_value(key, value)?,
            "ff_size" => self.ff_size = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "split_seed" => self.split_seed = parse_value(key, value)?,
            "dev_fraction" => self.dev_fraction = parse_value(key, value)?,
            "threshold" => self.threshold = parse_value(key, value)?,
            "watch_threshold" => self.watch_threshold = parse_value(key, value)?,
            "n_docs" => self.n_docs = parse_value(key, value)?,
            "corpus" => self.corpus = path(),
            "notes" => self.notes = path(),
            "ner_model" => self.ner_model = path(),
            "re_model" => self.re_model = path(),
            "extractions" => self.extractions = path(),
            "graph" => self.graph = path(),
            "patients" => self.patients = path(),
            _ => return Err(Error::Usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(content: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in content.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("config line {}: expected key = value", i + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingPath(path.to_path_buf()));
        }
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("max_seq_len", self.max_seq_len),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("hidden_size", self.hidden_size),
            ("ff_size", self.ff_size),
            ("n_docs", self.n_docs),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Usage(format!("{name} must be positive")));
        }
        if self.max_seq_len < 3 {
            return Err(Error::Usage("max_seq_len must leave room for [CLS], [SEP] and a token".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Usage("learning_rate must be positive".into()));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Usage("threshold must be finite".into()));
        }
        if !(self.dev_fraction > 0.0 && self.dev_fraction < 1.0) {
            return Err(Error::Usage("dev_fraction must lie in (0, 1)".into()));
        }
        self.encoder_config().with_vocab_size(1).validate().map_err(|e| Error::Usage(e.to_string()))
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            n_layers: self.n_layers,
            n_heads: self.n_heads,
            hidden_size: self.hidden_size,
            max_len: self.max_seq_len,
            ff_size: self.ff_size,
            vocab_size: 0,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { epochs: self.epochs, batch_size: self.batch_size, learning_rate: self.learning_rate, seed: self.seed }
    }

    fn re_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| Error::Usage(format!("missing {flag}")))
}

fn existing(path: &Path) -> Result<&Path> {
    if path.exists() { Ok(path) } else { Err(Error::MissingPath(path.to_path_buf())) }
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Vocabulary over the word tokens of `docs`.
pub fn build_vocabulary(docs: &[AnnotatedDocument]) -> Vocabulary {
    let words: Vec<String> = docs.iter().flat_map(|d| tokenize(&d.text)).map(|t| t.surface).collect();
    Vocabulary::build(words.iter().map(String::as_str))
}

/// Distinct annotated drug surfaces, sorted.
pub fn drug_lexicon(docs: &[AnnotatedDocument]) -> Vec<String> {
    let set: BTreeSet<&str> = docs
        .iter()
        .flat_map(|d| &d.entities)
        .filter(|e| e.entity_type == EntityType::Drug)
        .map(|e| e.surface.as_str())
        .collect();
    set.into_iter().map(str::to_string).collect()
}

pub fn load_split(cfg: &PipelineConfig) -> Result<(Corpus, Corpus)> {
    let corpus = Corpus::load_dir(require(&cfg.corpus, "--corpus")?)?;
    split_train_dev(&corpus, cfg.dev_fraction, cfg.split_seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome {
    pub losses: Vec<f64>,
    pub dev: MetricReport,
}

impl TrainOutcome {
    pub fn to_text(&self) -> String {
        let losses: Vec<String> = self.losses.iter().map(|l| format!("{l:.4}")).collect();
        format!("epoch losses: {}\n{}", losses.join(" "), self.dev.to_text())
    }
}

pub fn train_ner_model(train: &[AnnotatedDocument], cfg: &PipelineConfig) -> Result<(NerModel, Vec<f64>)> {
    let mut model = NerModel::new(build_vocabulary(train), cfg.encoder_config(), cfg.seed)?;
    model.drug_lexicon = drug_lexicon(train);
    let examples = prepare_ner_examples(train, &model.vocab, cfg.max_seq_len)?;
    let losses = train_ner(&mut model, &examples, &cfg.train_config())?;
    Ok((model, losses))
}

/// Strict entity scores of `model` on `docs`.
pub fn evaluate_ner(model: &NerModel, docs: &[AnnotatedDocument]) -> Result<MetricReport> {
    let gold: Vec<Extraction> = docs.iter().map(Extraction::from).collect();
    let predicted = docs
        .iter()
        .map(|d| Ok(Extraction { doc_id: d.doc_id.clone(), entities: predict_entities(&d.text, model)?, relations: vec![] }))
        .collect::<Result<Vec<_>>>()?;
    score_ner(&gold, &predicted, Matching::Strict)
}

pub fn train_re_model(train: &[AnnotatedDocument], cfg: &PipelineConfig) -> Result<(RelationModel, Vec<f64>)> {
    let mut model = RelationModel::new(build_vocabulary(train), cfg.encoder_config(), cfg.re_seed())?;
    let mut instances = Vec::new();
    for d in train {
        for c in document_candidates(d, &model.vocab, cfg.max_seq_len) {
            instances.push(mask(&c, &d.text)?);
        }
    }
    let losses = train_re(&mut model, &instances, &cfg.train_config())?;
    Ok((model, losses))
}

/// Typed-relation scores of `model` on `docs`, classifying pairs of gold
/// entities.
pub fn evaluate_re(model: &RelationModel, docs: &[AnnotatedDocument], threshold: f64) -> Result<MetricReport> {
    let gold: Vec<Extraction> = docs.iter().map(Extraction::from).collect();
    let mut predicted = Vec::with_capacity(docs.len());
    for d in docs {
        let candidates = document_candidates(d, &model.vocab, model.config.max_len);
        let relations = to_relations(&predict_relations(&candidates, &d.text, model, threshold)?);
        predicted.push(Extraction { doc_id: d.doc_id.clone(), entities: d.entities.clone(), relations });
    }
    score_re(&gold, &predicted)
}

fn write_outcome(out: &Path, outcome: &TrainOutcome) -> Result<()> {
    write_atomic(&sibling(out, ".metrics.json"), format!("{}\n", serde_json::to_string_pretty(outcome)?).as_bytes())
}

/// Write a synthetic standoff corpus of `cfg.n_docs` notes to `out`.
pub fn cmd_generate_corpus(cfg: &PipelineConfig, out: &Path) -> Result<String> {
    let corpus = generate_synthetic_corpus(cfg.n_docs, cfg.seed, &SyntheticConfig::default())?;
    corpus.write_dir(out)?;
    Ok(format!("wrote {} notes to {}\n", corpus.len(), out.display()))
}

/// Train the tagger on the training split and score it on the dev split.
/// Writes the model to `out` and the scores to `<out>.metrics.json`.
pub fn cmd_train_ner(cfg: &PipelineConfig, out: &Path) -> Result<TrainOutcome> {
    cfg.validate()?;
    let (train, dev) = load_split(cfg)?;
    log::info!("training tagger on {} notes, {} held out", train.len(), dev.len());
    let (model, losses) = train_ner_model(&train.documents, cfg)?;
    let outcome = TrainOutcome { losses, dev: evaluate_ner(&model, &dev.documents)? };
    model.save(out)?;
    write_outcome(out, &outcome)?;
    Ok(outcome)
}

/// Train the relation classifier and score it on dev pairs of gold entities.
pub fn cmd_train_re(cfg: &PipelineConfig, out: &Path) -> Result<TrainOutcome> {
    cfg.validate()?;
    let (train, dev) = load_split(cfg)?;
    log::info!("training relation classifier on {} notes, {} held out", train.len(), dev.len());
    let (model, losses) = train_re_model(&train.documents, cfg)?;
    let outcome = TrainOutcome { losses, dev: evaluate_re(&model, &dev.documents, cfg.threshold)? };
    model.save(out)?;
    write_outcome(out, &outcome)?;
    Ok(outcome)
}

/// Map entities found in coreference-substituted text back to the original.
/// An entity lying inside a substituted mention moves to the mention's
/// antecedent, merging with an entity already there; relations follow.
fn restore_offsets(
    doc_id: &str,
    text: &str,
    clusters: &[MentionCluster],
    map: &OffsetMap,
    entities: Vec<EntityAnnotation>,
    relations: Vec<RelationAnnotation>,
) -> Extraction {
    let index = CharIndex::new(text);
    let replaced: Vec<_> = clusters
        .iter()
        .flat_map(|c| c.mentions.iter().filter(move |m| **m != c.representative).map(move |m| (m, &c.representative)))
        .collect();
    let at = |e: EntityAnnotation, s: usize, t: usize| EntityAnnotation {
        start: s,
        end: t,
        surface: index.slice(s, t).unwrap_or_default().to_string(),
        ..e
    };
    let mut kept = Vec::with_capacity(entities.len());
    let mut moved = Vec::new();
    for e in entities {
        let (s, t) = map.map_span(e.start, e.end);
        match replaced.iter().find(|(m, _)| m.start <= s && t <= m.end) {
            Some((_, rep)) => moved.push(at(e, rep.start, rep.end)),
            None => kept.push(at(e, s, t)),
        }
    }
    let mut rename: HashMap<String, Option<String>> = HashMap::new();
    for m in moved {
        match kept.iter().find(|k: &&EntityAnnotation| k.overlaps(&m)) {
            Some(k) if k.span() == m.span() && k.entity_type == m.entity_type => {
                rename.insert(m.id.clone(), Some(k.id.clone()));
            }
            Some(_) => {
                rename.insert(m.id.clone(), None);
            }
            None => kept.push(m),
        }
    }
    kept.sort_by_key(|e| (e.start, e.end));
    for (i, e) in kept.iter_mut().enumerate() {
        let new_id = format!("T{}", i + 1);
        for target in rename.values_mut().flatten().filter(|t| **t == e.id) {
            *target = new_id.clone();
        }
        rename.insert(e.id.clone(), Some(new_id.clone()));
        e.id = new_id;
    }
    let mut seen = HashSet::new();
    let mut out_relations = Vec::new();
    for r in relations {
        let (Some(Some(drug)), Some(Some(other))) = (rename.get(&r.arg_drug), rename.get(&r.arg_other)) else { continue };
        if seen.insert((r.relation_type.clone(), drug.clone(), other.clone())) {
            out_relations.push(RelationAnnotation {
                id: format!("R{}", out_relations.len() + 1),
                relation_type: r.relation_type,
                arg_drug: drug.clone(),
                arg_other: other.clone(),
            });
        }
    }
    Extraction { doc_id: doc_id.to_string(), entities: kept, relations: out_relations }
}

/// Coreference substitution, entity tagging and relation classification on
/// one note. Offsets in the result refer to `text`.
pub fn extract_document(doc_id: &str, text: &str, ner: &NerModel, re: &RelationModel, threshold: f64) -> Result<Extraction> {
    let sieve = Sieve::new(ner.drug_lexicon.iter().map(String::as_str));
    let clusters = sieve.resolve(text);
    let (resolved, map) = substitute(text, &clusters)?;
    let entities = predict_entities(&resolved, ner)?;
    let paras = paragraphs(&resolved, &re.vocab, re.config.max_len);
    let candidates = generate_candidates(doc_id, &entities, None, &paras);
    let relations = to_relations(&predict_relations(&candidates, &resolved, re, threshold)?);
    Ok(restore_offsets(doc_id, text, &clusters, &map, entities, relations))
}

/// Notes from a `.txt` file or a directory of them, ids from file stems,
/// sorted by id.
pub fn load_notes(path: &Path) -> Result<Vec<(String, String)>> {
    let stem = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if path.is_file() {
        return Ok(vec![(stem(path), fs::read_to_string(path)?)]);
    }
    if !path.is_dir() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    files.into_iter().map(|p| Ok((stem(&p), fs::read_to_string(&p)?))).collect()
}

pub fn extractions_to_jsonl(extractions: &[Extraction]) -> Result<String> {
    let mut out = String::new();
    for x in extractions {
        out.push_str(&serde_json::to_string(x)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn extractions_from_jsonl(content: &str) -> Result<Vec<Extraction>> {
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() }))
        .collect()
}

/// Run both models over `cfg.notes` and write one extraction per line.
pub fn cmd_extract(cfg: &PipelineConfig, out: &Path) -> Result<Vec<Extraction>> {
    let notes = load_notes(require(&cfg.notes, "--input")?)?;
    let ner = NerModel::load(existing(require(&cfg.ner_model, "--ner-model")?)?)?;
    let re = RelationModel::load(existing(require(&cfg.re_model, "--re-model")?)?)?;
    if ner.vocab != re.vocab {
        log::warn!("tagger and relation classifier use different vocabularies");
    }
    let extractions = notes
        .iter()
        .map(|(id, text)| extract_document(id, text, &ner, &re, cfg.threshold))
        .collect::<Result<Vec<_>>>()?;
    write_atomic(out, extractions_to_jsonl(&extractions)?.as_bytes())?;
    Ok(extractions)
}

/// `doc_id <whitespace> patient_id` per line.
pub fn parse_patient_map(content: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(doc), Some(patient), None) => {
                map.insert(doc.to_string(), patient.to_string());
            }
            _ => return Err(Error::Parse { line: i + 1, message: "expected doc_id and patient_id".into() }),
        }
    }
    Ok(map)
}

/// Build the graph from `cfg.extractions`, write it as JSONL to `out` and
/// the validation report to `<out>.validation.json`.
pub fn cmd_build_graph(cfg: &PipelineConfig, out: &Path) -> Result<(KnowledgeGraph, ValidationReport)> {
    let input = existing(require(&cfg.extractions, "--input")?)?;
    let extractions = extractions_from_jsonl(&fs::read_to_string(input)?)?;
    let patients = match &cfg.patients {
        Some(p) => parse_patient_map(&fs::read_to_string(existing(p)?)?)?,
        None => BTreeMap::new(),
    };
    let graph = build_graph(&extractions, &patients)?;
    let report = validate(&graph);
    write_atomic(out, export_jsonl(&graph)?.as_bytes())?;
    write_atomic(&sibling(out, ".validation.json"), format!("{}\n", serde_json::to_string_pretty(&report)?).as_bytes())?;
    Ok((graph, report))
}

pub fn load_graph(path: &Path) -> Result<KnowledgeGraph> {
    import_jsonl(&fs::read_to_string(existing(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Analysis {
    Degree(NodeKind),
    Components(Option<Vec<NodeKind>>),
    Communities(String),
    DrugAde,
}

impl Analysis {
    /// `degree`, `components`, `communities` or `drug-ade`. `kinds` selects
    /// the degree kind (first entry) or the component subgraph; `edge_label`
    /// the community subgraph.
    pub fn from_name(name: &str, kinds: &[NodeKind], edge_label: Option<&str>) -> Result<Self> {
        Ok(match name {
            "degree" => Analysis::Degree(kinds.first().copied().unwrap_or(NodeKind::Drug)),
            "components" => Analysis::Components((!kinds.is_empty()).then(|| kinds.to_vec())),
            "communities" => Analysis::Communities(edge_label.unwrap_or("ADE-Drug").to_string()),
            "drug-ade" => Analysis::DrugAde,
            _ => return Err(Error::Usage(format!("unknown analysis {name:?}; expected degree, components, communities or drug-ade"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "text" => Ok(ReportFormat::Text),
            _ => Err(Error::Usage(format!("unknown report format {s:?}; expected json or text"))),
        }
    }
}

fn json_report<T: Serialize>(value: &T) -> Result<String> {
    Ok(format!("{}\n", serde_json::to_string_pretty(value)?))
}

/// Run one analysis over a graph and render it.
pub fn analyze(graph: &KnowledgeGraph, analysis: &Analysis, cfg: &PipelineConfig, format: ReportFormat) -> Result<String> {
    let json = format == ReportFormat::Json;
    Ok(match analysis {
        Analysis::Degree(kind) => {
            let r = degree_centrality(graph, *kind);
            if json { json_report(&r)? } else { r.to_text(graph) }
        }
        Analysis::Components(kinds) => {
            let r = connected_components(graph, kinds.as_deref());
            if json { json_report(&r)? } else { r.to_text() }
        }
        Analysis::Communities(label) => {
            let r = detect_communities(graph, label, cfg.seed)?;
            if json { json_report(&r)? } else { r.to_text(graph) }
        }
        Analysis::DrugAde => {
            let r = drug_ade_report(graph, cfg.watch_threshold);
            if json { json_report(&r)? } else { r.to_text() }
        }
    })
}

/// Analyze `cfg.graph`; the report goes to `out` when given.
pub fn cmd_analyze(cfg: &PipelineConfig, analysis: &Analysis, format: ReportFormat, out: Option<&Path>) -> Result<String> {
    let graph = load_graph(require(&cfg.graph, "--graph")?)?;
    let report = analyze(&graph, analysis, cfg, format)?;
    if let Some(out) = out {
        write_atomic(out, report.as_bytes())?;
    }
    Ok(report)
}

/// Serialize a graph as `cypher`, `graphml` or `jsonl`.
pub fn export(graph: &KnowledgeGraph, format: &str) -> Result<String> {
    match format {
        "cypher" => Ok(export_cypher(graph)),
        "graphml" => Ok(export_graphml(graph)),
        "jsonl" => export_jsonl(graph),
        _ => Err(Error::Usage(format!("unknown export format {format:?}; expected cypher, graphml or jsonl"))),
    }
}

pub fn cmd_export(cfg: &PipelineConfig, format: &str, out: &Path) -> Result<()> {
    let graph = load_graph(require(&cfg.graph, "--graph")?)?;
    let validation = validate(&graph);
    if !validation.is_empty() {
        return Err(Error::Integrity(format!("graph has {} schema violations", validation.violations.len())));
    }
    write_atomic(out, export(&graph, format)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coref::Mention;
    use crate::span::char_slice;
    use proptest::prelude::*;

    #[test]
    fn config_defaults_and_parsing() {
        let cfg = PipelineConfig::default();
        assert_eq!((cfg.max_seq_len, cfg.batch_size, cfg.epochs), (128, 17, 10));
        let cfg = PipelineConfig::parse("# run\nepochs = 3\nseed=7  # init\ncorpus = data/train\n\n").unwrap();
        assert_eq!((cfg.epochs, cfg.seed), (3, 7));
        assert_eq!(cfg.corpus, Some(PathBuf::from("data/train")));
        assert!(matches!(PipelineConfig::parse("colour = red"), Err(Error::Usage(_))));
        assert!(matches!(PipelineConfig::parse("epochs = many"), Err(Error::Usage(_))));
        assert!(matches!(PipelineConfig::parse("epochs"), Err(Error::Usage(_))));
        let mut bad = PipelineConfig::default();
        bad.batch_size = 0;
        assert!(matches!(bad.validate(), Err(Error::Usage(_))));
        bad = PipelineConfig { hidden_size: 10, n_heads: 4, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(PipelineConfig::default().validate().is_ok());
    }

    #[test]
    fn missing_paths_are_usage_errors() {
        let cfg = PipelineConfig { corpus: Some("/nonexistent/medkg".into()), ..Default::default() };
        let err = cmd_train_ner(&cfg, Path::new("/tmp/x.model")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = cmd_train_ner(&PipelineConfig::default(), Path::new("/tmp/x.model")).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        assert_eq!(load_notes(Path::new("/nonexistent/notes")).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn patient_map() {
        let m = parse_patient_map("note1 p1\n# c\nnote2\tp1\n").unwrap();
        assert_eq!(m.len(), 2);
        assert!(parse_patient_map("note1").is_err());
    }

    fn ent(id: &str, ty: EntityType, s: usize, e: usize, text: &str) -> EntityAnnotation {
        EntityAnnotation::new(id, ty, s, e, char_slice(text, s, e).unwrap())
    }

    #[test]
    fn pronoun_entities_move_to_antecedent() {
        let text = "Lisinopril was started. It caused cough.";
        let cluster = MentionCluster {
            representative: Mention { start: 0, end: 10, surface: "Lisinopril".into() },
            mentions: vec![
                Mention { start: 0, end: 10, surface: "Lisinopril".into() },
                Mention { start: 24, end: 26, surface: "It".into() },
            ],
        };
        let (resolved, map) = substitute(text, std::slice::from_ref(&cluster)).unwrap();
        assert_eq!(resolved, "Lisinopril was started. Lisinopril caused cough.");
        let entities = vec![
            ent("T1", EntityType::Drug, 0, 10, &resolved),
            ent("T2", EntityType::Drug, 24, 34, &resolved),
            ent("T3", EntityType::Ade, 42, 47, &resolved),
        ];
        let relations = vec![RelationAnnotation { id: "R1".into(), relation_type: "ADE-Drug".into(), arg_drug: "T2".into(), arg_other: "T3".into() }];
        let x = restore_offsets("d", text, &[cluster], &map, entities, relations);
        let spans: Vec<(usize, usize, &str)> = x.entities.iter().map(|e| (e.start, e.end, e.surface.as_str())).collect();
        assert_eq!(spans, vec![(0, 10, "Lisinopril"), (34, 39, "cough")]);
        assert_eq!(x.relations.len(), 1);
        assert_eq!((x.relations[0].arg_drug.as_str(), x.relations[0].arg_other.as_str()), ("T1", "T2"));
    }

    #[test]
    fn exports_by_name() {
        let g = KnowledgeGraph::default();
        assert_eq!(export(&g, "cypher").unwrap(), "");
        assert!(export(&g, "graphml").unwrap().contains("<graph"));
        assert_eq!(export(&g, "jsonl").unwrap(), "");
        assert!(matches!(export(&g, "dot"), Err(Error::Usage(_))));
        assert!(Analysis::from_name("pagerank", &[], None).is_err());
        assert_eq!(Analysis::from_name("degree", &[], None).unwrap(), Analysis::Degree(NodeKind::Drug));
    }

    proptest! {
        #[test]
        fn restored_offsets_slice_original(
            words in proptest::collection::vec(prop_oneof!["Aspirin", "Coumadin", "it", "They", "rash", "daily", "\\.", "was", "held"], 1..30),
            picks in proptest::collection::vec((0usize..30, 0usize..3), 0..8),
        ) {
            let text = words.join(" ");
            let sieve = Sieve::new(["Aspirin", "Coumadin"]);
            let clusters = sieve.resolve(&text);
            let (resolved, map) = substitute(&text, &clusters).unwrap();
            let tokens = tokenize(&resolved);
            let types = [EntityType::Drug, EntityType::Ade, EntityType::Frequency];
            let mut used = BTreeSet::new();
            let mut entities = Vec::new();
            for (i, ty) in picks {
                if i < tokens.len() && used.insert(i) {
                    let t = &tokens[i];
                    entities.push(ent(&format!("T{}", entities.len() + 1), types[ty], t.start, t.end, &resolved));
                }
            }
            let x = restore_offsets("d", &text, &clusters, &map, entities, vec![]);
            for e in &x.entities {
                prop_assert_eq!(char_slice(&text, e.start, e.end), Some(e.surface.as_str()));
            }
            for w in x.entities.windows(2) {
                prop_assert!(!w[0].overlaps(&w[1]));
            }
        }
    }
}
