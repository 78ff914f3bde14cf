//! The command-line pipeline end to end on the bundled fixture, driven
//! in-process. Equivalent shell commands are printed as they run.

use std::path::Path;

use ctrlsimp::cli;

fn step(args: &[&str]) {
    println!("$ ctrlsimp {}", args.join(" "));
    if let Err(e) = cli::run_from(std::iter::once("ctrlsimp").chain(args.iter().copied())) {
        eprintln!("{e}");
        std::process::exit(i32::from(e.kind.exit_code()));
    }
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let work = tmp.path();
    let p = |name: &str| work.join(name).to_str().unwrap().to_string();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pairs200.tsv");

    step(&["harmonize", "-i", fixture.to_str().unwrap(), "--dataset", "Fixture", "-o", &p("harmonized.jsonl")]);
    step(&["flatten", "-i", &p("harmonized.jsonl"), "-o", &p("flat.jsonl")]);
    step(&["filter-outliers", "-i", &p("flat.jsonl"), "-o", &p("filtered.jsonl")]);
    step(&["split", "-i", &p("filtered.jsonl"), "--out-dir", &p("split"), "--strategy-search"]);
    let pairs = p("split/pairs.jsonl");
    step(&["sample", "-i", &pairs, "--out-dir", &p("sampling"), "--modes", "global", "--sizes", "20:180:40"]);
    step(&["analyze", "-i", &pairs, "--out-dir", &p("analyze")]);

    let mut score_files = Vec::new();
    for (attribute, mock) in [("FKGL", "oracle"), ("FKGL", "truncate_p:0.5"), ("CHAR_COMPRESSION", "echo")] {
        let tag = format!("{}_{}", attribute.to_lowercase(), mock.replace(':', "_"));
        let prompts = p(&format!("{tag}.prompts.jsonl"));
        let runs = p(&format!("{tag}.runs"));
        let scores = p(&format!("{tag}.scores.jsonl"));
        step(&["build-prompts", "-i", &pairs, "-o", &prompts, "-a", attribute, "--split", "test"]);
        step(&["infer", "-p", &prompts, "--out-dir", &runs, "--mock", mock]);
        step(&["evaluate", "-p", &prompts, "--runs", &runs, "-o", &scores]);
        score_files.push(scores);
    }
    let mut report = vec!["report", "--out-dir"];
    let reports = p("reports");
    report.push(&reports);
    report.push("-s");
    report.extend(score_files.iter().map(String::as_str));
    step(&report);
}
