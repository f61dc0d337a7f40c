mod common;

use common::{mux, quick_config, read, runner};
use tabml::apply::{apply, ApplyOptions};
use tabml::csvio::read_table;
use tabml::Error;

#[test]
fn replication_and_prediction() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    std::fs::create_dir(&data).unwrap();
    mux(&data, "train", 6, 120, 1);
    let r = runner(&quick_config(&data, &tmp.path().join("out"), ""), &[]);
    r.run(None).unwrap();

    let repl_dir = tmp.path().join("repl");
    std::fs::create_dir(&repl_dir).unwrap();
    let repl = mux(&repl_dir, "fresh", 6, 70, 2);
    // Reorder columns and add one the models never saw.
    let t = read_table(&repl).unwrap();
    let mut text = String::from("extra,Class,R3,R2,R1,R0,A1,A0\n");
    for row in &t.rows {
        text.push_str(&format!("9,{},{},{},{},{},{},{}\n", row[6], row[5], row[4], row[3], row[2], row[1], row[0]));
    }
    let shuffled = repl_dir.join("shuffled.csv");
    std::fs::write(&shuffled, text).unwrap();

    let opts = ApplyOptions { experiment: r.layout.root.clone(), data: repl.clone(), target: None, predictions_only: false };
    let dir = apply(&opts).unwrap();
    let fm = read_table(&dir.join("evaluation/fold_metrics.csv")).unwrap();
    assert_eq!(fm.rows.len(), 12);
    assert!(read(dir.join("summary.md")).contains("### Mean metrics"));
    assert!(dir.join("figures/roc_all.svg").exists());

    let again = apply(&ApplyOptions { data: shuffled, ..opts.clone() }).unwrap();
    let a = read_table(&again.join("evaluation/summary_mean.csv")).unwrap();
    let b = read_table(&dir.join("evaluation/summary_mean.csv")).unwrap();
    let auc = a.column("roc_auc").unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x[auc], y[auc]);
    }

    // No outcome column: predictions only.
    let mut unlabeled = String::from("A0,A1,R0,R1,R2,R3\n");
    for row in &t.rows {
        unlabeled.push_str(&row[..6].join(","));
        unlabeled.push('\n');
    }
    let nolab = repl_dir.join("nolab.csv");
    std::fs::write(&nolab, unlabeled).unwrap();
    assert!(apply(&ApplyOptions { data: nolab.clone(), ..opts.clone() }).is_err());
    let pdir = apply(&ApplyOptions { data: nolab, predictions_only: true, ..opts.clone() }).unwrap();
    let p = read_table(&pdir.join("predictions.csv")).unwrap();
    assert_eq!(p.header.len(), 13);
    assert_eq!(p.header[1], "NB_fold0");
    assert_eq!(p.rows.len(), 70);
    assert!(p.rows.iter().flat_map(|r| &r[1..]).all(|v| (0.0..=1.0).contains(&v.parse::<f64>().unwrap())));

    // A missing training feature is named.
    let mut cut = String::from("A0,A1,R0,R1,Class\n");
    for row in &t.rows {
        cut.push_str(&format!("{},{}\n", row[..4].join(","), row[6]));
    }
    let cut_path = repl_dir.join("cut.csv");
    std::fs::write(&cut_path, cut).unwrap();
    let err = apply(&ApplyOptions { data: cut_path, ..opts.clone() }).unwrap_err();
    assert!(err.to_string().contains("R2") && err.to_string().contains("R3"), "{err}");
    assert_eq!(err.exit_code(), 2);

    let err = apply(&ApplyOptions { target: Some("nope".into()), ..opts }).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}
