use secure_congest::Graph;
use secure_congest_bench::round_accounting;

#[test]
fn bound_holds_and_doubling_is_linear() {
    let corpus = vec![("C5".to_string(), Graph::cycle(5)), ("K4".to_string(), Graph::complete(4))];
    let report = round_accounting(&corpus, &["verify-coloring", "sum-to-root"], 8).unwrap();
    assert!(report.bounded, "{}", report.table());
    assert!(report.fitted_constant <= report.declared_constant);
    for d in &report.doubling {
        assert!((1.8..=2.2).contains(&d.ratio), "{}", report.table());
    }
    assert_eq!(report.rows.len(), 4);
    assert!(report.table().contains("fitted constant"));
}
