//! End-to-end tests of the `prefrank` binary: subcommands, file formats,
//! exit codes, and output determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn prefrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prefrank"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

const FIVE_ROWS: &str = "\
year,student_id,position,faculty,course,level,form,financing
2016,158,1,SE-AOK,Medicine,O,N,A
2016,158,2,PTE-AOK,Medicine,O,N,A
2016,158,3,DE-AOK,Medicine,O,N,K
2016,158,4,SE-AOK,Medicine,O,N,A
2016,158,5,SE-FOK,Dentistry,O,N,K
";

/// Triplet form of the 7x7 Dentistry/Medicine reference matrix, plus its
/// object-index sidecar.
fn write_medicine_matrix(dir: &Path) -> std::path::PathBuf {
    let faculties = [
        "DE-AOK", "DE-FOK", "PTE-AOK", "SE-AOK", "SE-FOK", "SZTE-AOK", "SZTE-FOK",
    ];
    let matrix: [[i64; 7]; 7] = [
        [0, 138, 506, 127, 53, 308, 43],
        [146, 0, 144, 21, 37, 52, 76],
        [270, 87, 0, 140, 84, 273, 83],
        [634, 72, 778, 0, 244, 874, 68],
        [109, 178, 258, 101, 0, 129, 204],
        [560, 58, 835, 132, 49, 0, 72],
        [45, 137, 200, 17, 32, 122, 0],
    ];
    let mut triplets = String::from("i_key,j_key,value\n");
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != 0 {
                triplets.push_str(&format!("{},{},{v}\n", faculties[i], faculties[j]));
            }
        }
    }
    let path = dir.join("medicine.csv");
    fs::write(&path, triplets).unwrap();
    let mut index = String::from("index,key\n");
    for (i, f) in faculties.iter().enumerate() {
        index.push_str(&format!("{i},{f}\n"));
    }
    fs::write(dir.join("medicine.index.csv"), index).unwrap();
    path
}

#[test]
fn ingest_reports_per_year_stats() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("apps.csv");
    fs::write(&input, FIVE_ROWS).unwrap();

    let output = prefrank(&["ingest", input.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("year,students,contributing_students,objects,uw,w,mw,auw,aw,amw"));
    assert!(
        text.contains("2016,1,1,4,6,1,2,2,2,2"),
        "unexpected stats: {text}"
    );
}

#[test]
fn ingest_of_empty_file_warns_and_succeeds() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("empty.csv");
    fs::write(&input, "").unwrap();

    let output = prefrank(&["ingest", input.to_str().unwrap()]);
    assert!(output.status.success());
    assert!(stderr(&output).contains("no data rows"));
}

#[test]
fn one_bad_financing_token_among_a_thousand_rows() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("apps.csv");
    let mut contents =
        String::from("year,student_id,position,faculty,course,level,form,financing\n");
    for i in 0..999 {
        contents.push_str(&format!("2016,s{i},1,F{},c,O,N,A\n", i % 5));
    }
    contents.push_str("2016,oops,1,F0,c,O,N,Q\n");
    fs::write(&input, contents).unwrap();

    let output = prefrank(&["ingest", input.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(
        stdout(&output).contains("2016,999,"),
        "999 students survive"
    );
    assert_eq!(stderr(&output).matches("diagnostic:").count(), 1);
    assert!(stderr(&output).contains("financing"));
}

#[test]
fn bad_row_ratio_aborts_with_parse_exit_code() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("apps.csv");
    fs::write(
        &input,
        "year,student_id,position,faculty,course,level,form,financing\n\
         2016,a,0,F,c,O,N,A\n\
         2016,b,1,F,c,O,N,A\n",
    )
    .unwrap();

    let output = prefrank(&["ingest", input.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2), "{}", stderr(&output));
    assert!(stderr(&output).contains("malformed"));
}

#[test]
fn invalid_flags_use_validation_exit_code() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("apps.csv");
    fs::write(&input, FIVE_ROWS).unwrap();

    let output = prefrank(&["rank", input.to_str().unwrap(), "--scheme", "bogus"]);
    assert_eq!(output.status.code(), Some(3));

    let output = prefrank(&["rank", input.to_str().unwrap(), "--method", "elo"]);
    assert_eq!(output.status.code(), Some(3));

    let output = prefrank(&["rank"]);
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr(&output).contains("no input"));
}

#[test]
fn rank_from_prebuilt_matrix_reproduces_reference_ranks() {
    let dir = tempdir().unwrap();
    let matrix = write_medicine_matrix(dir.path());

    let output = prefrank(&["rank", "--matrix-in", matrix.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);

    // row sum: SE-AOK first with 2132, PTE-AOK last with -1784
    assert!(
        text.contains("1,SE-AOK,2132.000000,3208,0"),
        "row sum ranking:\n{text}"
    );
    assert!(text.contains("7,PTE-AOK,-1784.000000,3658,0"));
    // normalized row sum: -589/2939
    assert!(text.contains("6,DE-AOK,-0.200408,2939,0"));
    // least squares reorders the middle of the field
    assert!(text.contains("3,SZTE-AOK,-0.022154,3464,0"));
    assert!(text.contains("4,SZTE-FOK,-0.044703,1099,0"));
    assert!(text.contains("5,DE-AOK,-0.175931,2939,0"));
}

#[test]
fn eval_counts_contradictory_preferences() {
    let dir = tempdir().unwrap();
    let matrix = write_medicine_matrix(dir.path());

    let output = prefrank(&["eval", "--matrix-in", matrix.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(
        text.contains("matrix,matrix,rs,2195,8496,0.258357"),
        "eval rows:\n{text}"
    );
    assert!(text.contains("matrix,matrix,nrs,2195,8496,0.258357"));
    assert!(text.contains("matrix,matrix,ls,2253,8496,0.265184"));
}

#[test]
fn kendall_compares_rankings_of_one_year() {
    let dir = tempdir().unwrap();
    let matrix = write_medicine_matrix(dir.path());

    let output = prefrank(&["kendall", "--matrix-in", matrix.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("ranking,rs:matrix,nrs:matrix,ls:matrix"));
    // rs and nrs rank the seven faculties identically; ls swaps two pairs
    assert!(
        text.contains("rs:matrix,,1.000000,0.809524"),
        "tau row:\n{text}"
    );
}

#[test]
fn build_writes_loadable_matrices() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("apps.csv");
    fs::write(&input, FIVE_ROWS).unwrap();
    let out = dir.path().join("artifacts");

    let output = prefrank(&[
        "build",
        input.to_str().unwrap(),
        "--scheme",
        "uw,w,auw",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));

    for scheme in ["uw", "w", "auw"] {
        let path = out.join(format!("matrix_{scheme}_2016.csv"));
        let loaded =
            prefrank::matrixio::load_matrix(&path, prefrank::Granularity::Faculty).unwrap();
        assert_eq!(loaded.len(), 4, "{scheme} matrix objects");
    }
    // weighted entries survive as exact sixths
    let w = fs::read_to_string(out.join("matrix_w_2016.csv")).unwrap();
    assert!(
        w.contains("1/6"),
        "weighted matrix keeps exact weights:\n{w}"
    );

    let output = prefrank(&["build", input.to_str().unwrap()]);
    assert_eq!(
        output.status.code(),
        Some(3),
        "build without --out is a config error"
    );
}

#[test]
fn dense_json_build_round_trips() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("apps.csv");
    fs::write(&input, FIVE_ROWS).unwrap();
    let out = dir.path().join("artifacts");

    let output = prefrank(&[
        "build",
        input.to_str().unwrap(),
        "--dense-json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let path = out.join("matrix_uw_2016.json");
    let loaded = prefrank::matrixio::load_matrix(&path, prefrank::Granularity::Faculty).unwrap();
    assert_eq!(loaded.len(), 4);
}

#[test]
fn repeated_runs_are_byte_identical_except_the_timestamp() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("apps.csv");
    fs::write(&input, FIVE_ROWS).unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    for out in [&out_a, &out_b] {
        let output = prefrank(&[
            "rank",
            input.to_str().unwrap(),
            "--scheme",
            "uw,auw",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{}", stderr(&output));
    }

    let strip = |text: String| -> String {
        text.lines()
            .filter(|l| !l.starts_with("# generated_at_epoch"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let mut compared = 0;
    for entry in fs::read_dir(&out_a).unwrap() {
        let name = entry.unwrap().file_name();
        let a = strip(fs::read_to_string(out_a.join(&name)).unwrap());
        let b = strip(fs::read_to_string(out_b.join(&name)).unwrap());
        assert_eq!(a, b, "{name:?} differs");
        compared += 1;
    }
    assert_eq!(compared, 6, "two schemes times three methods");
}

#[test]
fn axioms_json_grid_has_twelve_cells_and_the_known_pattern() {
    let output = prefrank(&["axioms", "--trials", "5", "--json"]);
    assert!(output.status.success(), "{}", stderr(&output));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    let cells = doc["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 12);
    let satisfied = |axiom: &str, method: &str| -> bool {
        cells
            .iter()
            .find(|c| c["axiom"] == axiom && c["method"] == method)
            .map(|c| c["satisfied"].as_bool().unwrap())
            .unwrap()
    };
    assert!(!satisfied("size-invariance", "rs"));
    assert!(satisfied("size-invariance", "nrs"));
    assert!(satisfied("size-invariance", "ls"));
    assert!(!satisfied("bridge-player-independence", "rs"));
    assert!(!satisfied("bridge-player-independence", "nrs"));
    assert!(satisfied("bridge-player-independence", "ls"));
    // violations carry replayable witnesses with inlined matrices
    let witness = cells
        .iter()
        .find(|c| c["axiom"] == "size-invariance" && c["method"] == "rs")
        .and_then(|c| c.get("witness"))
        .unwrap();
    assert!(witness["base"]["matrix"].is_array());
    assert_eq!(witness["scores_before"], serde_json::json!(["-12", "-20"]));
}

#[test]
fn solver_failure_uses_solve_exit_code() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("chain.csv");
    // a single component well past the direct-solver cutoff, with cycles of
    // conflicting preferences so the conjugate gradient residual plateaus
    // above an unreachable tolerance
    let mut contents =
        String::from("year,student_id,position,faculty,course,level,form,financing\n");
    for i in 0..2100 {
        contents.push_str(&format!("2016,s{i},1,F{i:04},c,O,N,A\n"));
        contents.push_str(&format!("2016,s{i},2,F{:04},c,O,N,A\n", i + 1));
    }
    let mut k = 0;
    for i in (0..2098).step_by(2) {
        for _ in 0..(i % 3 + 1) {
            contents.push_str(&format!("2016,t{k},1,F{:04},c,O,N,A\n", i + 2));
            contents.push_str(&format!("2016,t{k},2,F{i:04},c,O,N,A\n"));
            k += 1;
        }
    }
    fs::write(&input, contents).unwrap();

    let output = prefrank(&[
        "rank",
        input.to_str().unwrap(),
        "--method",
        "ls",
        "--tolerance",
        "1e-300",
    ]);
    assert_eq!(output.status.code(), Some(4), "{}", stderr(&output));
    assert!(stderr(&output).contains("residual"));
}
