macro_rules! example {
    ($module:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(generate_corpus, "generate_corpus.rs");
example!(crf_decode, "crf_decode.rs");
example!(coref_demo, "coref_demo.rs");
example!(build_graph, "build_graph.rs");
example!(analyze_graph, "analyze_graph.rs");
example!(export_graph, "export_graph.rs");
example!(train_ner, "train_ner.rs");
example!(train_re, "train_re.rs");
example!(extract_notes, "extract_notes.rs");

#[test]
fn generate_corpus_runs() {
    generate_corpus::run_example().unwrap();
}

#[test]
fn crf_decode_runs() {
    crf_decode::run_example().unwrap();
}

#[test]
fn coref_demo_runs() {
    coref_demo::run_example().unwrap();
}

#[test]
fn build_graph_runs() {
    build_graph::run_example().unwrap();
}

#[test]
fn analyze_graph_runs() {
    analyze_graph::run_example().unwrap();
}

#[test]
fn export_graph_runs() {
    export_graph::run_example().unwrap();
}

#[test]
fn train_ner_runs() {
    train_ner::run_example().unwrap();
}

#[test]
fn train_re_runs() {
    train_re::run_example().unwrap();
}

#[test]
fn extract_notes_runs() {
    extract_notes::run_example().unwrap();
}
