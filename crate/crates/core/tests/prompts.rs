use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anaphora_core::corpus::{load_splits, LoadOptions};
use anaphora_core::prompt::{render, select_exemplars, Strategy};
use anaphora_core::{Dataset, Passage, Split};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn dataset() -> Dataset {
    let paths = ["train.jsonl", "validation.jsonl", "test.jsonl"].map(data);
    let report = load_splits(&paths, &LoadOptions::default()).unwrap();
    assert!(report.rejections.is_empty(), "{:?}", report.rejections);
    report.dataset
}

fn substitute(template: &str, p: &Passage, candidate: &str) -> String {
    template
        .replace("$sentence_ana$", &p.sentence_ana())
        .replace("$sentence_ant_ana$", &p.sentence_ant_ana())
        .replace("$anaphora$", &p.anaphor_surface)
        .replace("$antecedent_subtree$", candidate)
}

#[test]
fn zero_shot_matches_transcribed_templates() {
    let ds = dataset();
    for p in ds.split(Split::Test) {
        let yn = render(Strategy::YesNo, p, &[], Some(p.subtree_text())).unwrap();
        assert_eq!(
            yn.rendered,
            substitute(&golden("yes_no.template"), p, p.subtree_text())
        );
        for s in [Strategy::QuestionAnswering, Strategy::Tagging] {
            let inst = render(s, p, &[], None).unwrap();
            let expected = substitute(&golden(&format!("{s}.template")), p, "");
            assert_eq!(inst.rendered, expected, "{s} {}", p.id);
        }
    }
}

#[test]
fn figure_example_question() {
    let ds = dataset();
    let p = ds.get("test-01").unwrap();
    let yn = render(Strategy::YesNo, p, &[], Some("Budova")).unwrap();
    assert!(yn
        .rendered
        .contains(r#"does "která" refer to "Budova" ? Respond only YES or NO."#));
}

#[test]
fn few_shot_inserts_answered_blocks_before_query() {
    let ds = dataset();
    let eval_ids: BTreeSet<String> = ds.split(Split::Test).map(|p| p.id.clone()).collect();
    let three = select_exemplars(&ds, 3, 11, &eval_ids).unwrap();
    for s in [Strategy::QuestionAnswering, Strategy::Tagging] {
        let block = golden(&format!("{s}.exemplar"));
        for p in ds.split(Split::Test) {
            let zero = render(s, p, &[], None).unwrap().rendered;
            let one = render(s, p, &three[..1], None).unwrap().rendered;
            let all = render(s, p, &three, None).unwrap().rendered;

            let query_at = zero.find("SENTENCE: ").unwrap();
            let (head, query) = zero.split_at(query_at);
            let blocks: Vec<String> = three
                .iter()
                .map(|e| substitute(&block, e, e.subtree_text()))
                .collect();
            assert_eq!(one, format!("{head}{}{query}", blocks[0]));
            assert_eq!(all, format!("{head}{}{query}", blocks.concat()));
            assert!(one.ends_with(query) && all.ends_with(query));
            assert_eq!(all.matches(&p.sentence_ana()).count(), 1);
        }
    }
}
