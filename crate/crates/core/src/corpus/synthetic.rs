//! Templated prescription notes with exact gold offsets, used where real
//! annotated notes are unavailable.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnnotatedDocument, Corpus, EntityAnnotation, EntityType, RelationAnnotation};
use crate::error::{Error, Result};

pub const DRUGS: &[&str] = &[
    "Lisinopril", "Coumadin", "Metoprolol", "Aspirin", "Warfarin", "Heparin", "Furosemide", "Metformin",
    "Insulin", "Atorvastatin", "Amiodarone", "Digoxin", "Lasix", "Prednisone", "Vancomycin", "Ceftriaxone",
    "Levofloxacin", "Omeprazole", "Pantoprazole", "Simvastatin", "Amlodipine", "Hydralazine", "Diltiazem",
    "Gabapentin", "Oxycodone", "Morphine", "Acetaminophen", "Ibuprofen", "Docusate", "Senna", "Colace",
    "Lorazepam", "Haloperidol", "Clopidogrel", "Enoxaparin", "Allopurinol", "Tamsulosin", "Levothyroxine",
    "Carvedilol", "Spironolactone",
];

pub const STRENGTH_AMOUNTS: &[&str] = &["2.5", "5", "10", "20", "25", "40", "50", "81", "100", "125", "250", "325", "500", "650", "1000"];
pub const STRENGTH_UNITS: &[&str] = &["mg", "mcg"];
pub const DOSAGES: &[&str] = &["1 tab", "2 tabs", "one puff", "two puffs", "10 units", "1 drop", "half tab", "3 capsules"];
pub const FORMS: &[&str] = &["tablet", "capsule", "solution", "patch", "injection", "suspension", "cream", "inhaler"];
pub const ROUTES: &[&str] = &["PO", "IV", "orally", "subcutaneously", "topically", "SL", "IM", "by mouth"];
pub const FREQUENCIES: &[&str] = &["daily", "twice daily", "BID", "TID", "q8h", "every 6 hours", "at bedtime", "once a week", "QID"];
pub const DURATIONS: &[&str] = &["5 days", "7 days", "2 weeks", "10 days", "one month", "3 weeks"];
pub const REASONS: &[&str] = &[
    "hypertension", "atrial fibrillation", "pain", "constipation", "infection", "anxiety", "diabetes",
    "heart failure", "edema", "insomnia", "fever", "gout", "hypothyroidism", "DVT prophylaxis", "seizures",
];
pub const ADES: &[&str] = &[
    "rash", "bleeding", "nausea", "dizziness", "hypotension", "cough", "diarrhea", "hyperkalemia",
    "bradycardia", "hives", "confusion", "headache", "vomiting", "fatigue", "thrombocytopenia",
];
const FILLERS: &[&str] = &[
    "Vital signs stable.",
    "Patient seen in clinic today.",
    "Follow up in two weeks.",
    "No acute distress.",
    "Labs reviewed with the team.",
    "Patient tolerated the procedure well.",
];
const HEADERS: &[&str] = &["MEDICATIONS:", "HOSPITAL COURSE:", "DISCHARGE INSTRUCTIONS:", "PLAN:"];

#[derive(Clone, Copy)]
enum Part {
    Lit(&'static str),
    Slot(EntityType),
}

use EntityType as E;
use Part::{Lit, Slot};

const TEMPLATES: &[&[Part]] = &[
    &[Slot(E::Drug), Lit(" "), Slot(E::Strength), Lit(" "), Slot(E::Form), Lit(" "), Slot(E::Route), Lit(" "),
      Slot(E::Frequency), Lit(" for "), Slot(E::Reason), Lit("; patient developed "), Slot(E::Ade), Lit(".")],
    &[Lit("Started "), Slot(E::Drug), Lit(" "), Slot(E::Strength), Lit(" "), Slot(E::Route), Lit(" "),
      Slot(E::Frequency), Lit(" for "), Slot(E::Duration), Lit(" for "), Slot(E::Reason), Lit(".")],
    &[Lit("Patient was given "), Slot(E::Dosage), Lit(" of "), Slot(E::Drug), Lit(" "), Slot(E::Strength), Lit(" "),
      Slot(E::Frequency), Lit(".")],
    &[Slot(E::Drug), Lit(" was discontinued after the patient developed "), Slot(E::Ade), Lit(".")],
    &[Lit("Continue "), Slot(E::Drug), Lit(" "), Slot(E::Dosage), Lit(" "), Slot(E::Route), Lit(" "),
      Slot(E::Frequency), Lit(" for "), Slot(E::Reason), Lit(".")],
    &[Slot(E::Drug), Lit(" "), Slot(E::Strength), Lit(" "), Slot(E::Form), Lit(" taken "), Slot(E::Frequency),
      Lit(" for "), Slot(E::Duration), Lit(".")],
    &[Lit("Take "), Slot(E::Dosage), Lit(" "), Slot(E::Drug), Lit(" "), Slot(E::Strength), Lit(" "), Slot(E::Route),
      Lit(" "), Slot(E::Frequency), Lit(" as needed for "), Slot(E::Reason), Lit(".")],
    &[Slot(E::Drug), Lit(" "), Slot(E::Strength), Lit(" "), Slot(E::Route), Lit(" caused "), Slot(E::Ade),
      Lit(" and "), Slot(E::Ade), Lit(".")],
];

/// Shape of generated notes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub min_paragraphs: usize,
    pub max_paragraphs: usize,
    /// Probability that a paragraph carries two prescription sentences
    /// rather than one.
    pub two_drug_rate: f64,
    /// Probability that a paragraph has no prescription at all.
    pub empty_paragraph_rate: f64,
    pub filler_rate: f64,
    pub header_rate: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            min_paragraphs: 2,
            max_paragraphs: 4,
            two_drug_rate: 0.35,
            empty_paragraph_rate: 0.1,
            filler_rate: 0.3,
            header_rate: 0.3,
        }
    }
}

struct DocBuilder {
    text: String,
    chars: usize,
    entities: Vec<EntityAnnotation>,
    relations: Vec<RelationAnnotation>,
}

impl DocBuilder {
    fn push(&mut self, s: &str) {
        self.text.push_str(s);
        self.chars += s.chars().count();
    }

    fn push_entity(&mut self, ty: EntityType, surface: &str) -> String {
        let id = format!("T{}", self.entities.len() + 1);
        let start = self.chars;
        self.push(surface);
        self.entities.push(EntityAnnotation::new(id.clone(), ty, start, self.chars, surface));
        id
    }

    fn sentence(&mut self, rng: &mut ChaCha8Rng) {
        let template = TEMPLATES.choose(rng).unwrap();
        let mut drug_id = None;
        let mut others = Vec::new();
        for part in template.iter() {
            match *part {
                Lit(s) => self.push(s),
                Slot(ty) => {
                    let surface = sample_surface(ty, rng);
                    let id = self.push_entity(ty, &surface);
                    if ty == EntityType::Drug {
                        drug_id = Some(id);
                    } else {
                        others.push((id, ty));
                    }
                }
            }
        }
        let drug_id = drug_id.expect("every template names a drug");
        for (other, ty) in others {
            let id = format!("R{}", self.relations.len() + 1);
            self.relations.push(RelationAnnotation {
                id,
                relation_type: ty.relation_label(),
                arg_drug: drug_id.clone(),
                arg_other: other,
            });
        }
    }
}

fn sample_surface(ty: EntityType, rng: &mut ChaCha8Rng) -> String {
    let pick = |list: &[&str], rng: &mut ChaCha8Rng| list.choose(rng).unwrap().to_string();
    match ty {
        EntityType::Drug => pick(DRUGS, rng),
        EntityType::Strength => format!("{}{}", pick(STRENGTH_AMOUNTS, rng), pick(STRENGTH_UNITS, rng)),
        EntityType::Dosage => pick(DOSAGES, rng),
        EntityType::Duration => pick(DURATIONS, rng),
        EntityType::Frequency => pick(FREQUENCIES, rng),
        EntityType::Form => pick(FORMS, rng),
        EntityType::Route => pick(ROUTES, rng),
        EntityType::Reason => pick(REASONS, rng),
        EntityType::Ade => pick(ADES, rng),
    }
}

/// Generate `n_docs` notes; identical `(n_docs, seed, config)` give identical
/// corpora.
pub fn generate_synthetic_corpus(n_docs: usize, seed: u64, config: &SyntheticConfig) -> Result<Corpus> {
    if n_docs < 1 {
        return Err(Error::Invalid("n_docs must be at least 1".into()));
    }
    if config.min_paragraphs < 1 || config.max_paragraphs < config.min_paragraphs {
        return Err(Error::Invalid("paragraph bounds must satisfy 1 <= min <= max".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let mut b = DocBuilder { text: String::new(), chars: 0, entities: Vec::new(), relations: Vec::new() };
        let n_par = rng.random_range(config.min_paragraphs..=config.max_paragraphs);
        for p in 0..n_par {
            if p > 0 {
                b.push("\n\n");
            }
            let mut lines = 0;
            if rng.random_bool(config.header_rate) {
                b.push(HEADERS.choose(&mut rng).unwrap());
                lines += 1;
            }
            let n_drugs = if rng.random_bool(config.empty_paragraph_rate) {
                0
            } else if rng.random_bool(config.two_drug_rate) {
                2
            } else {
                1
            };
            let filler = n_drugs == 0 || rng.random_bool(config.filler_rate);
            let filler_pos = rng.random_range(0..=n_drugs);
            for s in 0..=n_drugs {
                if filler && s == filler_pos {
                    if lines > 0 {
                        b.push("\n");
                    }
                    b.push(FILLERS.choose(&mut rng).unwrap());
                    lines += 1;
                }
                if s < n_drugs {
                    if lines > 0 {
                        b.push("\n");
                    }
                    b.sentence(&mut rng);
                    lines += 1;
                }
            }
        }
        b.push("\n");
        docs.push(AnnotatedDocument::new(format!("note{d:04}"), b.text, b.entities, b.relations)?);
    }
    Corpus::new(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::char_slice;

    #[test]
    fn surfaces_match_offsets() {
        let c = generate_synthetic_corpus(1, 0, &SyntheticConfig::default()).unwrap();
        let d = &c.documents[0];
        assert!(!d.entities.is_empty());
        for e in &d.entities {
            assert_eq!(char_slice(&d.text, e.start, e.end), Some(e.surface.as_str()));
        }
    }

    #[test]
    fn deterministic() {
        let cfg = SyntheticConfig::default();
        assert_eq!(generate_synthetic_corpus(200, 0, &cfg).unwrap(), generate_synthetic_corpus(200, 0, &cfg).unwrap());
        assert_ne!(generate_synthetic_corpus(5, 0, &cfg).unwrap(), generate_synthetic_corpus(5, 1, &cfg).unwrap());
    }

    #[test]
    fn relation_labels_follow_rule() {
        let c = generate_synthetic_corpus(50, 3, &SyntheticConfig::default()).unwrap();
        for d in &c.documents {
            for r in &d.relations {
                let other = d.entity(&r.arg_other).unwrap();
                assert_eq!(r.relation_type, format!("{}-Drug", other.entity_type));
                assert_eq!(d.entity(&r.arg_drug).unwrap().entity_type, EntityType::Drug);
            }
        }
    }

    #[test]
    fn rejects_zero_docs() {
        assert!(generate_synthetic_corpus(0, 0, &SyntheticConfig::default()).is_err());
    }
}
