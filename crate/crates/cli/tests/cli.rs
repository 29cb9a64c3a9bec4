//! End-to-end runs of the binary: exit codes, certificates, and
//! byte-for-byte determinism of reports.

use std::io::Write;
use std::process::{Command, Output};

use tempfile::NamedTempFile;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_descent"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn doc(text: &str) -> NamedTempFile {
    let mut file = NamedTempFile::new().expect("tempfile");
    file.write_all(text.as_bytes()).expect("write");
    file
}

const BASIC_ATLAS: &str = r#"
[space]
points = ["1", "2", "3"]
opens = [["1", "2"], ["2", "3"]]

[poset]
elements = ["uv", "u", "v"]
relations = [["uv", "u"], ["uv", "v"]]

[diagram]
assignment = { uv = ["2"], u = ["1", "2"], v = ["2", "3"] }
"#;

const DISCRETE_NON_ATLAS: &str = r#"
[space]
points = ["1", "2", "3"]
opens = [["1", "2"], ["2", "3"]]

[poset]
elements = ["u", "v"]

[diagram]
assignment = { u = ["1", "2"], v = ["2", "3"] }
"#;

#[test]
fn check_atlas_passes_on_the_basic_example() {
    let file = doc(BASIC_ATLAS);
    for mode in ["basic", "finite-sets", "subsets"] {
        let out = run(&["check-atlas", "--mode", mode, file.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "mode {mode}");
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report["verdict"], "pass");
    }
}

#[test]
fn check_atlas_fails_with_certificate() {
    let file = doc(DISCRETE_NON_ATLAS);
    let out = run(&["check-atlas", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"], "fail");
    assert_eq!(report["witness"]["residue"][0], "2");
    assert_eq!(report["witness_revalidated"], true);
}

#[test]
fn input_errors_exit_with_2() {
    let file = doc("[space]\npoints = [\"p\", \"p\"]\n");
    let out = run(&["check-atlas", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // schema violation: unknown field
    let file = doc("[space]\npoints = [\"p\"]\nextra = 1\n");
    let out = run(&["check-atlas", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // poset relation that is not antisymmetric
    let file = doc(
        r#"
[space]
points = ["1"]

[poset]
elements = ["a", "b"]
relations = [["a", "b"], ["b", "a"]]

[diagram]
assignment = { a = [], b = [] }
"#,
    );
    let out = run(&["check-atlas", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let file = doc(BASIC_ATLAS);
    let path = file.path().to_str().unwrap();
    let a = run(&["equivalence-report", path]);
    let b = run(&["equivalence-report", path]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["corpus", "--seed", "5", "--count", "5", "--truncation", "2"]);
    let d = run(&["corpus", "--seed", "5", "--count", "5", "--truncation", "2"]);
    assert_eq!(c.stdout, d.stdout);
    assert_eq!(c.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    assert_eq!(report["options"]["seed"], "5");
}

#[test]
fn hypercover_on_a_cech_document() {
    // the Čech nerve of {U, V} truncated at level 1, written out
    let file = doc(
        r#"
[space]
points = ["1", "2", "3"]
opens = [["1", "2"], ["2", "3"]]

[labeled_sset]
truncation = 1

[[labeled_sset.level]]
n = 0
cells = ["u", "v"]
labels = { u = ["1", "2"], v = ["2", "3"] }
degeneracies = { u = ["uu"], v = ["vv"] }

[[labeled_sset.level]]
n = 1
cells = ["uu", "uv", "vu", "vv"]
labels = { uu = ["1", "2"], uv = ["2"], vu = ["2"], vv = ["2", "3"] }
faces = { uu = ["u", "u"], uv = ["v", "u"], vu = ["u", "v"], vv = ["v", "v"] }
"#,
    );
    let out = run(&["check-hypercover", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["details"]["dhi_agrees"], true);
}

#[test]
fn refine_then_no_hypercover_for_non_atlas() {
    let file = doc(DISCRETE_NON_ATLAS);
    let path = file.path().to_str().unwrap();
    let refined = run(&["refine", "--truncation", "2", path]);
    assert_eq!(refined.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&refined.stdout).unwrap();
    assert_eq!(report["details"]["level_sizes"][0], 2);
}

#[test]
fn descent_failure_certificate() {
    // locally-constant sheaf, discrete non-atlas: limit 4 vs 2 sections
    let file = doc(
        r#"
[space]
points = ["1", "2", "3"]
opens = [["1", "2"], ["2", "3"]]

[poset]
elements = ["u", "v"]

[diagram]
assignment = { u = ["1", "2"], v = ["2", "3"] }

[sheaf]
[[sheaf.over]]
open = []
sections = ["*"]
[[sheaf.over]]
open = ["2"]
sections = ["s0", "s1"]
[[sheaf.over]]
open = ["1", "2"]
sections = ["a0", "a1"]
[[sheaf.over]]
open = ["2", "3"]
sections = ["b0", "b1"]
[[sheaf.over]]
open = ["1", "2", "3"]
sections = ["g0", "g1"]

[[sheaf.restriction]]
from = ["1", "2"]
to = ["2"]
map = { a0 = "s0", a1 = "s1" }
[[sheaf.restriction]]
from = ["2", "3"]
to = ["2"]
map = { b0 = "s0", b1 = "s1" }
[[sheaf.restriction]]
from = ["1", "2", "3"]
to = ["1", "2"]
map = { g0 = "a0", g1 = "a1" }
[[sheaf.restriction]]
from = ["1", "2", "3"]
to = ["2", "3"]
map = { g0 = "b0", g1 = "b1" }
[[sheaf.restriction]]
from = ["1", "2"]
to = []
map = { a0 = "*", a1 = "*" }
[[sheaf.restriction]]
from = ["2", "3"]
to = []
map = { b0 = "*", b1 = "*" }
[[sheaf.restriction]]
from = ["2"]
to = []
map = { s0 = "*", s1 = "*" }
"#,
    );
    let out = run(&["check-descent", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"], "fail");
    assert_eq!(report["details"]["limit_size"], 4);
    assert_eq!(report["details"]["global_sections"], 2);
    assert_eq!(report["details"]["descent_witness"]["kind"], "not-surjective");
    assert_eq!(report["witness_revalidated"], true);
}
