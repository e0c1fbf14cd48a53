use super::{AnnotatedDocument, EntityAnnotation, EntityType, RelationAnnotation};
use crate::error::{Error, Result};

/// Parse a `.txt`/`.ann` pair.
///
/// Entity lines are `T<id>\t<Type> <start> <end>\t<surface>`, relation lines
/// `R<id>\t<RelType> Arg1:T<i> Arg2:T<j>`. Blank lines are skipped.
pub fn parse_standoff(text_content: &str, ann_content: &str, doc_id: &str) -> Result<AnnotatedDocument> {
    let mut entities = Vec::new();
    let mut relations = Vec::new();

    for (i, raw) in ann_content.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse { line: line_no, message: format!("{msg}: {raw:?}") };
        let fields: Vec<&str> = raw.splitn(3, '\t').collect();
        let id = fields[0];
        if id.starts_with('T') {
            if fields.len() != 3 {
                return Err(bad("entity line needs three tab-separated fields"));
            }
            let parts: Vec<&str> = fields[1].split(' ').collect();
            if parts.len() != 3 {
                return Err(bad("expected `<Type> <start> <end>`"));
            }
            let entity_type: EntityType = parts[0].parse().map_err(|_| bad("unknown entity type"))?;
            let start: usize = parts[1].parse().map_err(|_| bad("bad start offset"))?;
            let end: usize = parts[2].parse().map_err(|_| bad("bad end offset"))?;
            entities.push(EntityAnnotation::new(id, entity_type, start, end, fields[2]));
        } else if id.starts_with('R') {
            if fields.len() != 2 {
                return Err(bad("relation line needs two tab-separated fields"));
            }
            let parts: Vec<&str> = fields[1].split(' ').collect();
            if parts.len() != 3 {
                return Err(bad("expected `<RelType> Arg1:<id> Arg2:<id>`"));
            }
            let arg_drug = parts[1].strip_prefix("Arg1:").ok_or_else(|| bad("missing Arg1"))?;
            let arg_other = parts[2].strip_prefix("Arg2:").ok_or_else(|| bad("missing Arg2"))?;
            relations.push(RelationAnnotation {
                id: id.to_string(),
                relation_type: parts[0].to_string(),
                arg_drug: arg_drug.to_string(),
                arg_other: arg_other.to_string(),
            });
        } else {
            return Err(bad("unrecognised annotation line"));
        }
    }

    AnnotatedDocument::new(doc_id, text_content, entities, relations)
}

/// Serialize to `(txt, ann)` in canonical form: T lines by start offset,
/// then R lines by id.
pub fn write_standoff(doc: &AnnotatedDocument) -> (String, String) {
    let mut ann = String::new();
    for e in &doc.entities {
        ann.push_str(&format!("{}\t{} {} {}\t{}\n", e.id, e.entity_type, e.start, e.end, e.surface));
    }
    for r in &doc.relations {
        ann.push_str(&format!("{}\t{} Arg1:{} Arg2:{}\n", r.id, r.relation_type, r.arg_drug, r.arg_other));
    }
    (doc.text.clone(), ann)
}
