use std::path::{Path, PathBuf};

use bvbfv::cli::{
    main_with_args, parse_constants, parse_graph_caps, parse_truncation_caps, Cli, Command, TheoryDocument,
};
use bvbfv::graded_core::TruncationCaps;
use bvbfv::rg_flow::GraphCaps;
use clap::Parser;
use serde_json::Value;

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("bvbfv-cli-{}-{name}", std::process::id()))
}

/// Runs the CLI with the report redirected to a file; returns the exit code
/// and the parsed report, if one was written.
fn run(tag: &str, args: &[&str]) -> (i32, Option<Value>) {
    let out = scratch(&format!("{tag}.json"));
    let _ = std::fs::remove_file(&out);
    let mut argv = vec!["bvbfv".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--out".into());
    argv.push(out.display().to_string());
    let code = main_with_args(argv);
    let report = std::fs::read_to_string(&out).ok().map(|t| serde_json::from_str(&t).unwrap());
    let _ = std::fs::remove_file(&out);
    (code, report)
}

#[test]
fn examples_round_trip_in_canonical_form() {
    for name in ["bf_sl2.json", "bf_nonunimodular.json"] {
        let (doc, text) = TheoryDocument::read(&example(name)).unwrap();
        let th = doc.build(Some(&text), TruncationCaps::default(), None).unwrap();
        let once = TheoryDocument::from_theory(&th, doc.numerics.clone()).to_json();
        assert_eq!(once.trim_end(), text.trim_end(), "{name} is not canonical");
        let again = TheoryDocument::parse(&once).unwrap();
        let th2 = again.build(Some(&once), TruncationCaps::default(), None).unwrap();
        assert_eq!(TheoryDocument::from_theory(&th2, again.numerics.clone()).to_json(), once);
    }
}

#[test]
fn emitted_bf_theory_matches_the_bundled_example() {
    let emitted = scratch("emit-sl2.json");
    let (code, report) = run("emit", &["bf", "--algebra", "sl2", "--emit-theory", emitted.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report = report.unwrap();
    assert_eq!(report["command"], "bf");
    assert_eq!(report["pass"], true);
    let text = std::fs::read_to_string(&emitted).unwrap();
    let _ = std::fs::remove_file(&emitted);
    assert_eq!(text, std::fs::read_to_string(example("bf_sl2.json")).unwrap());
}

#[test]
fn exit_codes() {
    let sl2 = example("bf_sl2.json");
    let non = example("bf_nonunimodular.json");
    let (code, report) = run("mqme", &["check-mqme", sl2.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report = report.unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["command"], "check-mqme");
    assert!(report["verdicts"].as_array().unwrap().iter().all(|v| v["pass"] == true));

    assert_eq!(run("mqme-non", &["check-mqme", non.to_str().unwrap()]).0, 0);
    let (code, report) = run("qme-non", &["check-mqme", non.to_str().unwrap(), "--qme"]);
    assert_eq!(code, 1);
    assert_eq!(report.unwrap()["pass"], false);

    assert_eq!(run("flag", &["check-mqme", "--no-such-flag"]).0, 2);
    assert_eq!(run("missing", &["check-mqme", "/nonexistent/theory.json"]).0, 2);
    assert_eq!(run("algebra", &["bf", "--algebra", "e8"]).0, 2);
    assert_eq!(run("caps", &["check-mqme", sl2.to_str().unwrap(), "--truncation", "3,6"]).0, 2);
}

#[test]
fn bad_coefficient_is_reported_with_its_line() {
    let text = std::fs::read_to_string(example("bf_sl2.json")).unwrap();
    let line = text.lines().position(|l| l.contains("\"coeff\": \"2\"")).unwrap() + 1;
    let bad = text.replacen("\"coeff\": \"2\"", "\"coeff\": \"1/0\"", 1);
    let doc = TheoryDocument::parse(&bad).unwrap();
    let err = doc.build(Some(&bad), TruncationCaps::default(), None).unwrap_err().to_string();
    assert!(err.contains(&format!("line {line}")), "{err}");
    assert!(err.contains("interaction[1].coeff"), "{err}");

    let path = scratch("bad-coeff.json");
    std::fs::write(&path, &bad).unwrap();
    assert_eq!(run("bad-coeff", &["check-mqme", path.to_str().unwrap()]).0, 2);
    let _ = std::fs::remove_file(&path);
}

#[test]
fn schema_version_is_checked() {
    let text = std::fs::read_to_string(example("bf_sl2.json")).unwrap();
    let bad = text.replacen("\"schema_version\": 1", "\"schema_version\": 7", 1);
    let err = TheoryDocument::parse(&bad).unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("schema_version"), "{err}");
    assert!(TheoryDocument::parse("{").is_err());
}

#[test]
fn caps_strings() {
    assert_eq!(parse_truncation_caps("3,6,12").unwrap(), TruncationCaps::default());
    assert_eq!(parse_truncation_caps(" 2, 4 ,8").unwrap(), TruncationCaps::new(2, 4, 8).unwrap());
    for bad in ["", "3,6", "3,6,12,1", "a,b,c", "-1,6,12"] {
        assert!(parse_truncation_caps(bad).is_err(), "{bad:?}");
    }
    assert_eq!(parse_graph_caps("2,0,1").unwrap(), GraphCaps::new(2, 0, 1).unwrap());
    for bad in ["2,0", "x,0,1", "0,0,0", "4,0,0"] {
        assert!(parse_graph_caps(bad).is_err(), "{bad:?}");
    }
}

#[test]
fn caps_come_from_the_environment() {
    // Defaults only, so concurrently running tests see no difference.
    std::env::set_var("BVBFV_CAPS", "3,6,12");
    std::env::set_var("BVBFV_GRAPH_CAPS", "2,0,1");
    let cli = Cli::try_parse_from(["bvbfv", "rg-flow", "--algebra", "sl2"]).unwrap();
    assert_eq!(cli.truncation.as_deref(), Some("3,6,12"));
    match cli.command {
        Command::RgFlow { caps, .. } => assert_eq!(caps, "2,0,1"),
        other => panic!("{other:?}"),
    }
    let cli = Cli::try_parse_from(["bvbfv", "rg-flow", "--algebra", "sl2", "--caps", "1,1,0"]).unwrap();
    match cli.command {
        Command::RgFlow { caps, .. } => assert_eq!(caps, "1,1,0"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn constants_documents() {
    let g = parse_constants(r#"{"name": "ax+b", "dim": 2, "brackets": [{"a": 1, "b": 2, "c": 2, "value": "1"}]}"#)
        .unwrap();
    let reference = bvbfv::bf_theory::LieAlgebraData::builtin("nonabelian2").unwrap();
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                assert_eq!(g.f(a, b, c), reference.f(a, b, c), "({a}, {b}, {c})");
            }
        }
    }
    let zero_index = "{\n  \"name\": \"z\",\n  \"dim\": 2,\n  \"brackets\": [\n    {\"a\": 0, \"b\": 2, \"c\": 2, \"value\": \"5/3\"}\n  ]\n}";
    let err = parse_constants(zero_index).unwrap_err().to_string();
    assert!(err.contains("line 5"), "{err}");
    assert!(parse_constants(r#"{"name": "d", "dim": 2, "brackets": [{"a": 1, "b": 1, "c": 2, "value": "1"}]}"#).is_err());
    assert!(parse_constants(r#"{"name": "v", "dim": 2, "brackets": [{"a": 1, "b": 2, "c": 2, "value": "1/0"}]}"#).is_err());

    let path = scratch("constants.json");
    std::fs::write(&path, r#"{"name": "ax+b", "dim": 2, "brackets": [{"a": 1, "b": 2, "c": 2, "value": "1"}]}"#).unwrap();
    let (code, report) = run("bf-constants", &["bf", "--constants", path.to_str().unwrap()]);
    let _ = std::fs::remove_file(&path);
    assert_eq!(code, 0);
    let report = report.unwrap();
    assert!(report["flags"].as_array().unwrap().iter().any(|f| f == "anomalous"));
}
