use corpus_forge::pii::scrub_pii;
use corpus_forge_fixtures::pii::PII_CASES;

#[test]
fn every_case_is_redacted_as_expected() {
    let mut failures = Vec::new();
    for case in PII_CASES {
        let (out, report) = scrub_pii(case.input);
        let (e, p, i) = case.expected_counts();
        let counts = (report.emails as usize, report.phones as usize, report.public_ips as usize);
        if out != case.expected || counts != (e, p, i) {
            failures.push(format!("{}: got {out:?} {counts:?}, want {:?} {:?}", case.name, case.expected, (e, p, i)));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn scrubbing_is_idempotent() {
    for case in PII_CASES {
        let (once, _) = scrub_pii(case.input);
        let (twice, report) = scrub_pii(&once);
        assert_eq!(once, twice, "{}", case.name);
        assert_eq!(report.total(), 0, "{}", case.name);
    }
}
