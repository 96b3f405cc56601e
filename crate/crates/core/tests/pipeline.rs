use std::fs;

use bsfw::experiment::{compare, parse_config, read_summary, run_experiment, TRACE_HEADER};
use bsfw::ingest::{synth_logistic, write_libsvm};
use bsfw::parallel::Execution;

#[test]
fn libsvm_file_through_experiment_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.svm");
    let ds = synth_logistic(12, 60, 0.4, 9).unwrap();
    write_libsvm(&ds, fs::File::create(&data).unwrap()).unwrap();

    let text = format!(
        "dataset = {}\ntau = 3\nestimators = full, saga, sega\nseeds = 0, 1, 2\nbatch = 6\nT = 40\nK = 100\nrecord_gap = true\nout = {}\n",
        data.display(),
        dir.path().join("out").display()
    );
    let cfg = parse_config(&text).unwrap();
    let out = run_experiment(&cfg, Execution::default()).unwrap();
    assert_eq!(out.files.len(), 3 * 3 * 2 + 1);

    let summary = read_summary(fs::File::open(dir.path().join("out/summary.csv")).unwrap()).unwrap();
    let cmp = compare(&summary).unwrap();
    assert_eq!(cmp.total_pairs(), 9);
    for row in &summary {
        assert_eq!(row.iterations, 40);
        assert!(row.final_gap.unwrap() >= -1e-12);
    }
}

#[test]
fn golden_trace_schema() {
    let golden = include_str!("golden/saga_bsfw_seed1.csv");
    let mut lines = golden.lines();
    assert_eq!(lines.next().unwrap(), TRACE_HEADER.join(","));
    let mut last_t = None;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), TRACE_HEADER.len());
        let t: usize = cells[3].parse().unwrap();
        assert_eq!(t, last_t.map_or(0, |p| p + 1));
        last_t = Some(t);
        for c in [4, 5, 6, 11] {
            let v: f64 = cells[c].parse().unwrap();
            assert!(v.is_finite());
            // Seventeen significant digits in scientific notation.
            let mantissa = cells[c].split('e').next().unwrap();
            assert_eq!(mantissa.trim_start_matches('-').len(), 18);
        }
        assert!(cells[7] == "0" || cells[7] == "1");
        let _: u64 = cells[9].parse().unwrap();
    }
}
