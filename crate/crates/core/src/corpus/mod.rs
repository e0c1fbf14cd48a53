//! Annotated clinical-note corpora: entity and relation annotations, the
//! standoff file format, train/dev splitting and a synthetic note generator.

mod standoff;
pub mod synthetic;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::span::CharIndex;

pub use standoff::{parse_standoff, write_standoff};
pub use synthetic::{generate_synthetic_corpus, SyntheticConfig};

/// The closed set of entity types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityType {
    Drug,
    Strength,
    Dosage,
    Duration,
    Frequency,
    Form,
    Route,
    Reason,
    #[serde(rename = "ADE")]
    Ade,
}

impl EntityType {
    pub const ALL: [EntityType; 9] = [
        EntityType::Drug,
        EntityType::Strength,
        EntityType::Dosage,
        EntityType::Duration,
        EntityType::Frequency,
        EntityType::Form,
        EntityType::Route,
        EntityType::Reason,
        EntityType::Ade,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Drug => "Drug",
            EntityType::Strength => "Strength",
            EntityType::Dosage => "Dosage",
            EntityType::Duration => "Duration",
            EntityType::Frequency => "Frequency",
            EntityType::Form => "Form",
            EntityType::Route => "Route",
            EntityType::Reason => "Reason",
            EntityType::Ade => "ADE",
        }
    }

    /// Position in [`EntityType::ALL`].
    pub fn index(self) -> usize {
        EntityType::ALL.iter().position(|&t| t == self).unwrap()
    }

    /// The mask token standing in for an entity of this type, e.g. `@Drug$`.
    pub fn mask_token(self) -> String {
        format!("@{}$", self.as_str())
    }

    /// Relation label linking a drug to an entity of this type: `"<Type>-Drug"`.
    pub fn relation_label(self) -> String {
        format!("{}-Drug", self.as_str())
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EntityType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown entity type {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityAnnotation {
    pub id: String,
    pub entity_type: EntityType,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl EntityAnnotation {
    pub fn new(id: impl Into<String>, entity_type: EntityType, start: usize, end: usize, surface: impl Into<String>) -> Self {
        Self { id: id.into(), entity_type, start, end, surface: surface.into() }
    }

    pub fn span(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    pub fn overlaps(&self, other: &EntityAnnotation) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationAnnotation {
    pub id: String,
    pub relation_type: String,
    pub arg_drug: String,
    pub arg_other: String,
}

/// A clinical note with its gold annotations. Construction validates every
/// invariant and puts annotations in canonical order (entities by start
/// offset, relations by id).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub text: String,
    pub entities: Vec<EntityAnnotation>,
    pub relations: Vec<RelationAnnotation>,
}

/// Entities and typed relations found in one note. This is the record
/// passed between extraction, scoring and graph construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub doc_id: String,
    pub entities: Vec<EntityAnnotation>,
    pub relations: Vec<RelationAnnotation>,
}

impl From<&AnnotatedDocument> for Extraction {
    fn from(doc: &AnnotatedDocument) -> Self {
        Self { doc_id: doc.doc_id.clone(), entities: doc.entities.clone(), relations: doc.relations.clone() }
    }
}

/// Sort key that orders `T2` before `T10`.
pub(crate) fn natural_key(id: &str) -> (String, u64, String) {
    let prefix: String = id.chars().take_while(|c| !c.is_ascii_digit()).collect();
    let rest = &id[prefix.len()..];
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    let num = digits.parse().unwrap_or(u64::MAX);
    (prefix, num, id.to_string())
}

impl AnnotatedDocument {
    pub fn new(
        doc_id: impl Into<String>,
        text: impl Into<String>,
        mut entities: Vec<EntityAnnotation>,
        mut relations: Vec<RelationAnnotation>,
    ) -> Result<Self> {
        let doc_id = doc_id.into();
        let text = text.into();
        let index = CharIndex::new(&text);

        let mut ids = HashSet::new();
        for e in &entities {
            if !ids.insert(e.id.as_str()) {
                return Err(Error::Integrity(format!("{doc_id}: duplicate entity id {}", e.id)));
            }
            if e.start >= e.end || e.end > index.len() {
                return Err(Error::Integrity(format!(
                    "{doc_id}: entity {} has invalid offsets ({}, {})",
                    e.id, e.start, e.end
                )));
            }
            let slice = index.slice(e.start, e.end).unwrap();
            if slice != e.surface {
                return Err(Error::Integrity(format!(
                    "{doc_id}: entity {} surface {:?} does not match text {:?}",
                    e.id, e.surface, slice
                )));
            }
            if e.surface.contains(['\n', '\t']) {
                return Err(Error::Integrity(format!("{doc_id}: entity {} spans a line break", e.id)));
            }
        }

        entities.sort_by(|a, b| (a.start, a.end, natural_key(&a.id)).cmp(&(b.start, b.end, natural_key(&b.id))));
        for pair in entities.windows(2) {
            if pair[0].overlaps(&pair[1]) {
                return Err(Error::Integrity(format!(
                    "{doc_id}: entities {} and {} overlap",
                    pair[0].id, pair[1].id
                )));
            }
        }

        let by_id: HashMap<&str, &EntityAnnotation> = entities.iter().map(|e| (e.id.as_str(), e)).collect();
        let mut rel_ids = HashSet::new();
        for r in &relations {
            if !rel_ids.insert(r.id.as_str()) {
                return Err(Error::Integrity(format!("{doc_id}: duplicate relation id {}", r.id)));
            }
            let drug = by_id
                .get(r.arg_drug.as_str())
                .ok_or_else(|| Error::Reference(format!("{doc_id}: relation {} references unknown {}", r.id, r.arg_drug)))?;
            let other = by_id
                .get(r.arg_other.as_str())
                .ok_or_else(|| Error::Reference(format!("{doc_id}: relation {} references unknown {}", r.id, r.arg_other)))?;
            if drug.entity_type != EntityType::Drug {
                return Err(Error::Integrity(format!("{doc_id}: relation {} Arg1 is not a Drug", r.id)));
            }
            if other.entity_type == EntityType::Drug {
                return Err(Error::Integrity(format!("{doc_id}: relation {} Arg2 is a Drug", r.id)));
            }
            if r.relation_type != other.entity_type.relation_label() {
                return Err(Error::Integrity(format!(
                    "{doc_id}: relation {} labelled {} but links a {}",
                    r.id, r.relation_type, other.entity_type
                )));
            }
        }
        relations.sort_by_key(|r| natural_key(&r.id));

        Ok(Self { doc_id, text, entities, relations })
    }

    pub fn entity(&self, id: &str) -> Option<&EntityAnnotation> {
        self.entities.iter().find(|e| e.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<AnnotatedDocument>,
}

impl Corpus {
    pub fn new(documents: Vec<AnnotatedDocument>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &documents {
            if !seen.insert(d.doc_id.as_str()) {
                return Err(Error::Integrity(format!("duplicate doc_id {}", d.doc_id)));
            }
        }
        Ok(Self { documents })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Load every `<id>.txt` / `<id>.ann` pair from a directory, sorted by id.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::MissingPath(dir.to_path_buf()));
        }
        let mut ids: Vec<String> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .collect();
        ids.sort();
        let mut docs = Vec::with_capacity(ids.len());
        for id in ids {
            let text = fs::read_to_string(dir.join(format!("{id}.txt")))?;
            let ann_path = dir.join(format!("{id}.ann"));
            let ann = if ann_path.exists() { fs::read_to_string(ann_path)? } else { String::new() };
            docs.push(parse_standoff(&text, &ann, &id)?);
        }
        Corpus::new(docs)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for d in &self.documents {
            let (txt, ann) = write_standoff(d);
            fs::write(dir.join(format!("{}.txt", d.doc_id)), txt)?;
            fs::write(dir.join(format!("{}.ann", d.doc_id)), ann)?;
        }
        Ok(())
    }
}

/// Document-level train/dev partition. Dev receives `round(dev_fraction * N)`
/// documents (at least one, at most N - 1); both parts keep corpus order.
pub fn split_train_dev(corpus: &Corpus, dev_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if corpus.is_empty() {
        return Err(Error::Split("corpus is empty".into()));
    }
    if !(dev_fraction > 0.0 && dev_fraction < 1.0) {
        return Err(Error::Invalid(format!("dev fraction {dev_fraction} not in (0, 1)")));
    }
    let n = corpus.len();
    if n < 2 {
        return Err(Error::Split(format!("corpus too small to split ({n} document)")));
    }
    let n_dev = ((dev_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let dev_set: HashSet<usize> = order[..n_dev].iter().copied().collect();
    let (mut train, mut dev) = (Vec::new(), Vec::new());
    for (i, d) in corpus.documents.iter().enumerate() {
        if dev_set.contains(&i) {
            dev.push(d.clone());
        } else {
            train.push(d.clone());
        }
    }
    Ok((Corpus { documents: train }, Corpus { documents: dev }))
}
