// Resolve pronouns to the drug they refer to, substitute them and map
// offsets in the rewritten note back to the original.

use medkg::coref::{resolve, substitute};
use medkg::span::char_slice;

pub fn run_example() -> medkg::Result<()> {
    let note = "Lisinopril 20mg daily was started. It was held after the patient developed cough.";
    let clusters = resolve(note);
    for c in &clusters {
        let ms: Vec<String> = c.mentions.iter().map(|m| format!("{}@{}", m.surface, m.start)).collect();
        println!("cluster of {:?}: {}", c.representative.surface, ms.join(", "));
    }
    let (rewritten, map) = substitute(note, &clusters)?;
    println!("{rewritten}");

    // "cough" in the rewritten note, back in the original
    let start = rewritten.find("cough").map(|b| rewritten[..b].chars().count()).unwrap();
    let (s, e) = map.map_span(start, start + 5);
    println!("rewritten {start}..{} -> original {s}..{e} = {:?}", start + 5, char_slice(note, s, e).unwrap());
    Ok(())
}

fn main() -> medkg::Result<()> {
    run_example()
}
