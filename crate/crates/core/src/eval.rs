//! Precision, recall and F1 for entity and relation predictions.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{EntityAnnotation, Extraction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 { 0.0 } else { a as f64 / b as f64 }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 }
}

impl Prf {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let (p, r) = (ratio(tp, tp + fp), ratio(tp, tp + fn_));
        Self { precision: p, recall: r, f1: f1(p, r), tp, fp, fn_ }
    }
}

/// Per-type, micro- and macro-averaged scores. Precision with nothing
/// predicted is reported as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_type: BTreeMap<String, Prf>,
    pub micro: Prf,
    #[serde(rename = "macro")]
    pub macro_avg: Prf,
    pub convention: String,
}

impl MetricReport {
    fn from_counts(counts: BTreeMap<String, (usize, usize, usize)>) -> Self {
        let per_type: BTreeMap<String, Prf> = counts.iter().map(|(k, &(t, p, n))| (k.clone(), Prf::from_counts(t, p, n))).collect();
        let (tp, fp, fn_) = counts.values().fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
        let micro = Prf::from_counts(tp, fp, fn_);
        let k = per_type.len().max(1) as f64;
        let (mp, mr) = (
            per_type.values().map(|x| x.precision).sum::<f64>() / k,
            per_type.values().map(|x| x.recall).sum::<f64>() / k,
        );
        let macro_avg = Prf { precision: mp, recall: mr, f1: per_type.values().map(|x| x.f1).sum::<f64>() / k, tp, fp, fn_ };
        Self { per_type, micro, macro_avg, convention: "precision is 0 when nothing is predicted".into() }
    }

    /// Aligned per-type table followed by micro and macro rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("{:<16} {:>9} {:>9} {:>9} {:>6} {:>6} {:>6}\n", "type", "precision", "recall", "f1", "tp", "fp", "fn");
        let rows = self.per_type.iter().map(|(k, v)| (k.as_str(), v)).chain([("micro", &self.micro), ("macro", &self.macro_avg)]);
        for (name, m) in rows {
            out.push_str(&format!(
                "{:<16} {:>9.4} {:>9.4} {:>9.4} {:>6} {:>6} {:>6}\n",
                name, m.precision, m.recall, m.f1, m.tp, m.fp, m.fn_
            ));
        }
        out
    }
}

/// Model / task / F1 summary in the shape of a results table.
pub fn results_table(rows: &[(&str, &str, &MetricReport)]) -> String {
    let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<w$}  {:<4}  {:>8}  {:>8}\n", "Model", "Task", "micro F1", "macro F1");
    for (model, task, r) in rows {
        out.push_str(&format!("{:<w$}  {:<4}  {:>7.1}%  {:>7.1}%\n", model, task, 100.0 * r.micro.f1, 100.0 * r.macro_avg.f1));
    }
    out
}

fn pair_up<'a>(gold: &'a [Extraction], predicted: &'a [Extraction]) -> Result<Vec<(&'a Extraction, &'a Extraction)>> {
    let pred: HashMap<&str, &Extraction> = predicted.iter().map(|e| (e.doc_id.as_str(), e)).collect();
    if pred.len() != predicted.len() || gold.len() != predicted.len() {
        return Err(Error::Mismatch("gold and predicted cover different documents".into()));
    }
    gold.iter()
        .map(|g| {
            pred.get(g.doc_id.as_str())
                .map(|p| (g, *p))
                .ok_or_else(|| Error::Mismatch(format!("no prediction for document {}", g.doc_id)))
        })
        .collect()
}

/// Span matching rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Matching {
    /// Type, start and end all equal.
    #[default]
    Strict,
    /// Same type and overlapping spans, matched one to one. For diagnosis.
    Lenient,
}

fn count<T>(
    counts: &mut BTreeMap<String, (usize, usize, usize)>,
    gold: &[T],
    pred: &[T],
    key: impl Fn(&T) -> String,
    same: impl Fn(&T, &T) -> bool,
) {
    let mut used = vec![false; gold.len()];
    for p in pred {
        let hit = gold.iter().enumerate().find(|(i, g)| !used[*i] && same(g, p)).map(|(i, _)| i);
        match hit {
            Some(i) => {
                used[i] = true;
                counts.entry(key(p)).or_default().0 += 1;
            }
            None => counts.entry(key(p)).or_default().1 += 1,
        }
    }
    for (g, u) in gold.iter().zip(used) {
        if !u {
            counts.entry(key(g)).or_default().2 += 1;
        }
    }
}

pub fn score_ner(gold: &[Extraction], predicted: &[Extraction], matching: Matching) -> Result<MetricReport> {
    let mut counts = BTreeMap::new();
    for (g, p) in pair_up(gold, predicted)? {
        count(
            &mut counts,
            &g.entities,
            &p.entities,
            |e| e.entity_type.as_str().to_string(),
            |a, b| {
                a.entity_type == b.entity_type
                    && match matching {
                        Matching::Strict => a.start == b.start && a.end == b.end,
                        Matching::Lenient => a.overlaps(b),
                    }
            },
        );
    }
    Ok(MetricReport::from_counts(counts))
}

type Resolved = (String, (usize, usize), (usize, usize));

fn resolve(ex: &Extraction) -> Result<Vec<Resolved>> {
    let by_id: HashMap<&str, &EntityAnnotation> = ex.entities.iter().map(|e| (e.id.as_str(), e)).collect();
    ex.relations
        .iter()
        .map(|r| {
            let find = |id: &str| {
                by_id.get(id).map(|e| e.span()).ok_or_else(|| {
                    Error::Reference(format!("relation {} in {} references missing entity {id}", r.id, ex.doc_id))
                })
            };
            Ok((r.relation_type.clone(), find(&r.arg_drug)?, find(&r.arg_other)?))
        })
        .collect()
}

/// A predicted relation matches when both argument spans and the type match.
pub fn score_re(gold: &[Extraction], predicted: &[Extraction]) -> Result<MetricReport> {
    let mut counts = BTreeMap::new();
    for (g, p) in pair_up(gold, predicted)? {
        count(&mut counts, &resolve(g)?, &resolve(p)?, |r| r.0.clone(), |a, b| a == b);
    }
    Ok(MetricReport::from_counts(counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EntityType, RelationAnnotation};
    use proptest::prelude::*;

    fn e(id: &str, t: EntityType, s: usize, end: usize) -> EntityAnnotation {
        EntityAnnotation::new(id, t, s, end, "x".repeat(end - s))
    }

    fn doc(entities: Vec<EntityAnnotation>, relations: Vec<RelationAnnotation>) -> Vec<Extraction> {
        vec![Extraction { doc_id: "d".into(), entities, relations }]
    }

    fn rel(t: &str, a: &str, b: &str) -> RelationAnnotation {
        RelationAnnotation { id: format!("R{a}{b}"), relation_type: t.into(), arg_drug: a.into(), arg_other: b.into() }
    }

    #[test]
    fn identity_scores_one() {
        let g = doc(vec![e("T1", EntityType::Drug, 0, 3), e("T2", EntityType::Route, 4, 6)], vec![]);
        let r = score_ner(&g, &g, Matching::Strict).unwrap();
        assert_eq!((r.micro.precision, r.micro.recall, r.micro.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_prediction() {
        let g = doc(vec![e("T1", EntityType::Drug, 0, 3)], vec![]);
        let p = doc(vec![], vec![]);
        let r = score_ner(&g, &p, Matching::Strict).unwrap();
        assert_eq!((r.micro.precision, r.micro.recall, r.micro.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn two_thirds() {
        let g = doc(vec![e("T1", EntityType::Drug, 0, 3), e("T2", EntityType::Route, 4, 6), e("T3", EntityType::Form, 7, 9)], vec![]);
        let p = doc(vec![e("T1", EntityType::Drug, 0, 3), e("T2", EntityType::Route, 4, 6), e("T3", EntityType::Form, 10, 12)], vec![]);
        let r = score_ner(&g, &p, Matching::Strict).unwrap();
        let third = 2.0 / 3.0;
        assert!((r.micro.precision - third).abs() < 1e-12 && (r.micro.recall - third).abs() < 1e-12 && (r.micro.f1 - third).abs() < 1e-12);
        assert_eq!((r.micro.tp, r.micro.fp, r.micro.fn_), (2, 1, 1));
        // lenient sees no overlap either
        assert_eq!(score_ner(&g, &p, Matching::Lenient).unwrap().micro.tp, 2);
    }

    #[test]
    fn lenient_matches_overlap() {
        let g = doc(vec![e("T1", EntityType::Drug, 0, 5)], vec![]);
        let p = doc(vec![e("T1", EntityType::Drug, 2, 7)], vec![]);
        assert_eq!(score_ner(&g, &p, Matching::Strict).unwrap().micro.tp, 0);
        assert_eq!(score_ner(&g, &p, Matching::Lenient).unwrap().micro.tp, 1);
    }

    #[test]
    fn document_mismatch() {
        let g = doc(vec![], vec![]);
        let mut p = doc(vec![], vec![]);
        p[0].doc_id = "other".into();
        assert!(matches!(score_ner(&g, &p, Matching::Strict), Err(Error::Mismatch(_))));
    }

    #[test]
    fn relation_scoring() {
        let ents = vec![e("T1", EntityType::Drug, 0, 3), e("T2", EntityType::Strength, 4, 6), e("T3", EntityType::Route, 7, 9)];
        let g = doc(ents.clone(), vec![rel("Strength-Drug", "T1", "T2"), rel("Route-Drug", "T1", "T3")]);
        assert_eq!(score_re(&g, &g).unwrap().micro.f1, 1.0);
        let wrong = doc(ents.clone(), vec![rel("Route-Drug", "T1", "T2")]);
        let r = score_re(&g, &wrong).unwrap();
        assert_eq!((r.micro.tp, r.micro.fp, r.micro.fn_), (0, 1, 2));
        let disjoint = doc(ents.clone(), vec![]);
        assert_eq!(score_re(&g, &disjoint).unwrap().micro.f1, 0.0);
        let dangling = doc(ents, vec![rel("Route-Drug", "T1", "T9")]);
        assert!(matches!(score_re(&g, &dangling), Err(Error::Reference(_))));
    }

    #[test]
    fn reports_render() {
        let g = doc(vec![e("T1", EntityType::Drug, 0, 3)], vec![]);
        let r = score_ner(&g, &g, Matching::Strict).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"micro\"") && json.contains("\"fn\":0"));
        assert!(r.to_text().contains("micro"));
        assert!(results_table(&[("encoder+crf", "NER", &r)]).contains("100.0%"));
    }

    fn arb_entities() -> impl Strategy<Value = Vec<EntityAnnotation>> {
        proptest::collection::btree_set((0usize..30, 0usize..9), 0..12).prop_map(|set| {
            set.into_iter()
                .enumerate()
                .map(|(i, (slot, t))| e(&format!("T{i}"), EntityType::ALL[t], slot * 4, slot * 4 + 3))
                .collect::<Vec<_>>()
        })
    }

    proptest! {
        #[test]
        fn swap_exchanges_precision_and_recall(a in arb_entities(), b in arb_entities()) {
            let (g, p) = (doc(a, vec![]), doc(b, vec![]));
            let x = score_ner(&g, &p, Matching::Strict).unwrap();
            let y = score_ner(&p, &g, Matching::Strict).unwrap();
            prop_assert_eq!(x.micro.precision, y.micro.recall);
            prop_assert_eq!(x.micro.recall, y.micro.precision);
            let sums = x.per_type.values().fold((0, 0, 0), |s, m| (s.0 + m.tp, s.1 + m.fp, s.2 + m.fn_));
            prop_assert_eq!(sums, (x.micro.tp, x.micro.fp, x.micro.fn_));
        }
    }
}
