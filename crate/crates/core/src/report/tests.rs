use super::*;
use crate::corpus::fixtures::building;
use crate::corpus::{Passage, Span};
use FailureReason::*;

struct Row {
    id: &'static str,
    coref: CorefType,
    pronoun: PronounCategory,
    distance: i64,
    in_antecedent: bool,
    subcorpus: Subcorpus,
    outcome: Option<FailureReason>,
}

fn rows() -> Vec<Row> {
    use CorefType::{Grammatical as G, Textual as T};
    use PronounCategory::{
        DefiniteDemonstrative as Dem, DefinitePersonal as Pers, Indefinite as Ind,
    };
    use Subcorpus::{Pcedt, Pdt, Pdtsc};
    let r = |id, coref, pronoun, distance, in_antecedent, subcorpus, outcome| Row {
        id,
        coref,
        pronoun,
        distance,
        in_antecedent,
        subcorpus,
        outcome,
    };
    vec![
        r("p01", G, Ind, 2, false, Pdt, None),
        r("p02", G, Ind, 4, false, Pcedt, Some(RootMissing)),
        r("p03", G, Pers, 7, false, Pdt, None),
        r("p04", T, Pers, 12, false, Pdtsc, None),
        r("p05", T, Pers, -3, false, Pdt, Some(FormatError)),
        r("p06", T, Dem, 25, false, Pcedt, None),
        r("p07", T, Dem, 1, true, Pdt, Some(ContainmentViolated)),
        r("p08", T, Ind, 40, false, Pdtsc, None),
        r("p09", G, Pers, 0, false, Pdt, None),
        r("p10", T, Dem, 8, false, Pcedt, Some(NoPrediction)),
    ]
}

fn fixture() -> (Dataset, Vec<(String, ScoreResult)>) {
    let mut passages = Vec::new();
    let mut results = Vec::new();
    for row in rows() {
        let mut p: Passage = building();
        p.id = row.id.into();
        p.metadata.coref_type = row.coref;
        p.metadata.pronoun_category = row.pronoun;
        p.metadata.distance = row.distance;
        p.metadata.anaphor_in_antecedent = row.in_antecedent;
        p.metadata.subcorpus = row.subcorpus;
        if row.in_antecedent {
            p.antecedent_subtree = Span { start: 0, end: 43 };
        }
        passages.push(p);
        results.push((
            row.id.to_string(),
            row.outcome
                .map_or_else(ScoreResult::correct, ScoreResult::incorrect),
        ));
    }
    (Dataset::new(passages).unwrap(), results)
}

fn report() -> StratifiedReport {
    let (ds, results) = fixture();
    aggregate(results.iter().map(|(id, r)| (id.as_str(), r)), &ds).unwrap()
}

fn ratio(cell: Option<&Cell>) -> (usize, usize) {
    let c = cell.expect("cell present");
    (c.correct, c.total)
}

#[test]
fn distance_buckets() {
    let mut m = building().metadata;
    let mut check = |distance, flag, expected| {
        m.distance = distance;
        m.anaphor_in_antecedent = flag;
        assert_eq!(bucket_distance(&m), expected, "{distance} {flag}");
    };
    check(3, false, DistanceBucket::D0To5);
    check(-2, false, DistanceBucket::Cataphora);
    check(1, true, DistanceBucket::AnaphorInAntecedent);
    check(-2, true, DistanceBucket::AnaphorInAntecedent);
    check(0, false, DistanceBucket::D0To5);
    check(5, false, DistanceBucket::D0To5);
    check(6, false, DistanceBucket::D6To10);
    check(10, false, DistanceBucket::D6To10);
    check(11, false, DistanceBucket::D11To20);
    check(20, false, DistanceBucket::D11To20);
    check(21, false, DistanceBucket::D21To30);
    check(30, false, DistanceBucket::D21To30);
    check(31, false, DistanceBucket::D31Plus);
}

#[test]
fn hand_counted_cells() {
    let r = report();
    assert_eq!(ratio(Some(&r.overall)), (6, 10));
    assert_eq!(ratio(r.by_coref_type.get(&CorefType::Grammatical)), (3, 4));
    assert_eq!(ratio(r.by_coref_type.get(&CorefType::Textual)), (3, 6));

    let pc = |p, t| ratio(r.by_pronoun_and_coref.get(&p).and_then(|m| m.get(&t)));
    use CorefType::{Grammatical as G, Textual as T};
    use PronounCategory::*;
    assert_eq!(pc(Indefinite, G), (1, 2));
    assert_eq!(pc(Indefinite, T), (1, 1));
    assert_eq!(pc(DefinitePersonal, G), (2, 2));
    assert_eq!(pc(DefinitePersonal, T), (1, 2));
    assert_eq!(pc(DefiniteDemonstrative, T), (1, 3));
    assert!(!r.by_pronoun_and_coref[&DefiniteDemonstrative].contains_key(&G));
    assert_eq!(ratio(r.by_pronoun_category.get(&Indefinite)), (2, 3));

    let d = |b| ratio(r.by_distance.get(&b));
    assert_eq!(d(DistanceBucket::Cataphora), (0, 1));
    assert_eq!(d(DistanceBucket::AnaphorInAntecedent), (0, 1));
    assert_eq!(d(DistanceBucket::D0To5), (2, 3));
    assert_eq!(d(DistanceBucket::D6To10), (1, 2));
    assert_eq!(d(DistanceBucket::D11To20), (1, 1));
    assert_eq!(d(DistanceBucket::D21To30), (1, 1));
    assert_eq!(d(DistanceBucket::D31Plus), (1, 1));

    assert_eq!(ratio(r.by_subcorpus.get(&Subcorpus::Pdt)), (3, 5));
    assert_eq!(ratio(r.by_subcorpus.get(&Subcorpus::Pcedt)), (1, 3));
    assert_eq!(ratio(r.by_subcorpus.get(&Subcorpus::Pdtsc)), (2, 2));

    assert_eq!(r.format_error_rate(), Some(0.1));
    assert_eq!(r.overall.failure_count(RootMissing), 1);
    assert_eq!(r.overall.failure_count(NoPrediction), 1);
}

#[test]
fn every_axis_sums_to_total() {
    let r = report();
    let total = r.overall.total;
    let sum = |cells: Vec<&Cell>| cells.iter().map(|c| c.total).sum::<usize>();
    assert_eq!(sum(r.by_coref_type.values().collect()), total);
    assert_eq!(sum(r.by_pronoun_category.values().collect()), total);
    assert_eq!(
        sum(r
            .by_pronoun_and_coref
            .values()
            .flat_map(|m| m.values())
            .collect()),
        total
    );
    assert_eq!(sum(r.by_distance.values().collect()), total);
    assert_eq!(sum(r.by_subcorpus.values().collect()), total);
    let correct: usize = r.by_coref_type.values().map(|c| c.correct).sum();
    assert_eq!(correct, r.overall.correct);
}

#[test]
fn rejects_unknown_and_duplicate_ids() {
    let (ds, _) = fixture();
    let ok = ScoreResult::correct();
    assert_eq!(
        aggregate([("zzz", &ok)], &ds),
        Err(ReportError::UnknownId("zzz".into()))
    );
    assert_eq!(
        aggregate([("p01", &ok), ("p01", &ok)], &ds),
        Err(ReportError::DuplicateId("p01".into()))
    );
}

#[test]
fn empty_report_is_still_a_document() {
    let (ds, _) = fixture();
    let r = aggregate(std::iter::empty(), &ds).unwrap();
    assert!(r.is_empty());
    assert_eq!(r.accuracy(), None);
    assert!(emit(&r, Format::Markdown).contains("No scored passages"));
    let json: StratifiedReport = serde_json::from_str(&emit(&r, Format::Json)).unwrap();
    assert_eq!(json, r);
    assert_eq!(emit(&r, Format::Csv).lines().count(), 1);
}

#[test]
fn json_and_csv_round_trip() {
    let r = report();
    let json = emit(&r, Format::Json);
    let back: StratifiedReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
    assert!(json.contains("\"accuracy\": 0.6"));

    let mut from_csv = read_csv_cells(&emit(&back, Format::Csv)).unwrap();
    let mut direct = r.rows();
    from_csv.sort();
    direct.sort();
    assert_eq!(from_csv, direct);
}

#[test]
fn markdown_marks_absent_cells() {
    let md = emit(&report(), Format::Markdown);
    assert!(
        md.contains("| n.pron.def.demon | \u{2212} | 0.333 | 0.333 |"),
        "{md}"
    );
    assert!(md.contains("| Accuracy | 0.750 | 0.500 | 0.600 |"));
    assert!(md.contains("| PDTSC 2.0 (Spoken Czech) | 1.000 | 2 |"));
}
