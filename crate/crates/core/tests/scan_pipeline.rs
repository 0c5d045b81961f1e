use iutmed::linmod::DataTable;
use iutmed::medtests::Method;
use iutmed::regions::ALPHA_MAX;
use iutmed::scan::{average_ranks, preprocess, qq_csv, qq_data, records_tsv, run_scan, scan_table, Limits, ScanConfig};
use iutmed::simlab::{scan_dataset, ScanDatasetSpec};
use proptest::prelude::*;

fn config(spec: &ScanDatasetSpec) -> ScanConfig {
    let mut mediators = vec!["M0".to_string()];
    mediators.extend(spec.null_names());
    ScanConfig {
        outcome: "Y".into(),
        exposures: vec!["G".into()],
        mediators,
        covariates: vec!["age".into(), "sex".into()],
        alphas: vec![0.05, 0.01],
        ..ScanConfig::default()
    }
}

/// Kolmogorov distance to U(0,1) restricted to [0, cut), with the jump at the cut included.
fn censored_ks(ps: &[f64], cut: f64) -> f64 {
    let mut xs: Vec<f64> = ps.iter().copied().filter(|&p| p < cut).collect();
    xs.sort_by(f64::total_cmp);
    let n = ps.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        d = d.max((x - i as f64 / n).abs()).max(((i + 1) as f64 / n - x).abs());
    }
    d.max((xs.len() as f64 / n - cut).abs())
}

#[test]
fn planted_pair_and_null_mediators() {
    let spec = ScanDatasetSpec::default();
    let cfg = config(&spec);
    let out = scan_table(&cfg, &scan_dataset(&spec).unwrap(), Some(2)).unwrap();
    assert_eq!(out.summary.pairs, 51);
    assert_eq!(out.summary.errors, 0);

    let planted = out.records.iter().find(|r| r.mediator == "M0").unwrap();
    let p = |m: Method| planted.report(m).unwrap().p_value().unwrap();
    assert!(p(Method::Ps) < 0.001);
    assert!(p(Method::Sobel) > p(Method::Maxp));

    let nulls: Vec<f64> =
        out.records.iter().filter(|r| r.mediator != "M0").map(|r| r.report(Method::Ps).unwrap().p_value().unwrap()).collect();
    let n = nulls.len() as f64;
    let critical = 1.628 / (n.sqrt() + 0.12 + 0.11 / n.sqrt());
    let d = censored_ks(&nulls, ALPHA_MAX);
    assert!(d < critical, "D = {d}, critical {critical}");
}

#[test]
fn output_is_identical_across_worker_counts() {
    let spec = ScanDatasetSpec { null_mediators: 20, ..ScanDatasetSpec::default() };
    let cfg = config(&spec);
    let table = scan_dataset(&spec).unwrap();
    let render = |w| {
        let out = scan_table(&cfg, &table, Some(w)).unwrap();
        records_tsv(&out.records, &cfg.methods, &cfg.alphas)
    };
    let one = render(1);
    assert_eq!(one, render(4));
    assert_eq!(one, render(16));
}

#[test]
fn maxp_rejections_carry_over() {
    let spec = ScanDatasetSpec { null_mediators: 30, planted_beta: 0.15, planted_gamma: 0.15, ..ScanDatasetSpec::default() };
    let cfg = ScanConfig { alphas: vec![0.1, 0.05, 0.01, 0.005, 0.001], ..config(&spec) };
    let out = scan_table(&cfg, &scan_dataset(&spec).unwrap(), None).unwrap();
    for r in &out.records {
        for &a in &cfg.alphas {
            if r.report(Method::Maxp).unwrap().rejects(a) == Some(true) {
                assert_eq!(r.report(Method::Ps).unwrap().rejects(a), Some(true));
                assert_eq!(r.report(Method::Asq).unwrap().rejects(a), Some(true));
            }
        }
    }
}

#[test]
fn sparse_and_empty_mediators_become_error_rows() {
    let n = 40;
    let g: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    let m: Vec<f64> = (0..n).map(|i| ((i * 7) % 11) as f64).collect();
    let y: Vec<f64> = (0..n).map(|i| ((i * 5) % 13) as f64 + g[i]).collect();
    let sparse: Vec<f64> = (0..n).map(|i| if i < 9 { m[i] + 1.0 } else { f64::NAN }).collect();
    let empty = vec![f64::NAN; n];
    let table = DataTable::from_columns([("Y", y), ("G", g), ("M", m), ("sparse", sparse), ("empty", empty)]).unwrap();
    let cfg = ScanConfig {
        outcome: "Y".into(),
        exposures: vec!["G".into()],
        mediators: vec!["M".into(), "sparse".into(), "empty".into()],
        ..ScanConfig::default()
    };
    let out = scan_table(&cfg, &table, Some(1)).unwrap();
    assert_eq!((out.summary.pairs, out.summary.ok, out.summary.errors), (3, 1, 2));
    let by = |name: &str| out.records.iter().find(|r| r.mediator == name).unwrap();
    assert!(by("M").error.is_none());
    assert!(by("sparse").error.as_deref().unwrap().contains("complete rows"));
    assert!(by("empty").fit.is_none());
    assert_eq!(out.summary.skipped_mediators.len(), 1);
    let tsv = records_tsv(&out.records, &cfg.methods, &cfg.alphas);
    assert_eq!(tsv.lines().count(), 4);
}

#[test]
fn missing_column_is_fatal() {
    let spec = ScanDatasetSpec { null_mediators: 2, ..ScanDatasetSpec::default() };
    let table = scan_dataset(&spec).unwrap();
    let mut cfg = config(&spec);
    cfg.covariates.push("bmi".into());
    assert!(scan_table(&cfg, &table, Some(1)).is_err());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.tsv");
    std::fs::write(&path, table.to_delimited('\t', "NA")).unwrap();
    let ok = ScanConfig { input: path.clone(), ..config(&spec) };
    assert_eq!(run_scan(&ok, Some(1)).unwrap().summary.ok, 3);
    let bad = ScanConfig { input: path, outcome: "Z".into(), ..config(&spec) };
    assert!(run_scan(&bad, Some(1)).is_err());
}

#[test]
fn qq_points_follow_the_records() {
    let spec = ScanDatasetSpec { null_mediators: 25, ..ScanDatasetSpec::default() };
    let cfg = config(&spec);
    let out = scan_table(&cfg, &scan_dataset(&spec).unwrap(), None).unwrap();
    let points = qq_data(&out.records, &cfg.methods).unwrap();
    assert!(points.iter().all(|p| p.method != Method::S));
    for m in [Method::Sobel, Method::Maxp, Method::Ps, Method::Asq] {
        let mine: Vec<_> = points.iter().filter(|p| p.method == m).collect();
        assert_eq!(mine.len(), 26);
        for w in mine.windows(2) {
            assert!(w[0].expected >= w[1].expected && w[0].observed >= w[1].observed - 1e-12);
        }
    }
    assert_eq!(qq_csv(&points).lines().count(), points.len() + 1);
    assert!(qq_data(&[], &cfg.methods).is_err());
}

fn finite_column() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![9 => -5.0..5.0f64, 1 => Just(f64::NAN)], 2..60)
        .prop_filter("needs an observed value", |v| v.iter().any(|x| !x.is_nan()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn reprocessing_preserves_ranks(col in finite_column(), lo in 0.01..2.0f64, width in 0.5..6.0f64, inv in any::<bool>()) {
        let limits = if inv { None } else { Limits::new(lo, lo + width).ok() };
        let once = preprocess(&col, limits, inv, 0.5).unwrap();
        let twice = preprocess(&once, limits, inv, 0.5).unwrap();
        let (r1, r2) = (average_ranks(&once), average_ranks(&twice));
        for (a, b) in r1.iter().zip(&r2) {
            prop_assert!((a.is_nan() && b.is_nan()) || a == b);
        }
        if limits.is_none() && !inv {
            prop_assert_eq!(once.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), twice.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        }
    }
}
