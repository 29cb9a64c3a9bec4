//! Deterministic JSON reports. Field order is fixed by the struct
//! declarations and map keys are sorted, so identical inputs and
//! options produce byte-identical reports. Timing goes to stderr only.

use std::collections::BTreeMap;

use serde::Serialize;

use descent_core::descent::{DescentVerdict, DescentWitness};
use descent_core::lifting::{Verdict, Witness, WitnessKind};
use descent_core::order::{FiniteFrame, OpenSet};

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub options: BTreeMap<String, String>,
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_revalidated: Option<bool>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub details: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Serialize, PartialEq, Eq)]
pub struct WitnessReport {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Vec<(String, String)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuple: Option<Vec<String>>,
    pub region: Vec<String>,
    pub achieved: Vec<String>,
    pub residue: Vec<String>,
}

pub fn open_points(frame: &FiniteFrame, open: OpenSet) -> Vec<String> {
    (0..frame.point_count())
        .filter(|&p| open.contains_point(p))
        .map(|p| frame.points()[p].clone())
        .collect()
}

pub fn witness_report(frame: &FiniteFrame, witness: &Witness) -> WitnessReport {
    let (kind, assignment, level, tuple) = match &witness.kind {
        WitnessKind::Lifting { assignment } => (
            "lifting".to_string(),
            Some(assignment.clone()),
            None,
            None,
        ),
        WitnessKind::Boundary { level, tuple } => (
            "boundary".to_string(),
            None,
            Some(*level),
            Some(tuple.clone()),
        ),
    };
    WitnessReport {
        kind,
        assignment,
        level,
        tuple,
        region: open_points(frame, witness.region),
        achieved: open_points(frame, witness.achieved),
        residue: witness.residue.clone(),
    }
}

/// Structural soundness of a certificate: the residue is nonempty,
/// disjoint from the achieved part, and together they tile the region.
pub fn witness_is_sound(frame: &FiniteFrame, witness: &Witness) -> bool {
    if witness.residue.is_empty() {
        return false;
    }
    let mut residue = OpenSet::EMPTY;
    for name in &witness.residue {
        match frame.point_index(name) {
            Some(p) => residue = residue.union(OpenSet::from_bits(1 << p)),
            None => return false,
        }
    }
    residue.intersect(witness.achieved).is_empty()
        && residue.union(witness.achieved) == witness.region
        && witness.achieved.is_subset_of(witness.region)
}

pub fn verdict_fields(
    frame: &FiniteFrame,
    verdict: &Verdict,
    revalidated: Option<bool>,
) -> (Option<String>, Option<WitnessReport>, Option<bool>) {
    let word = if verdict.pass { "pass" } else { "fail" };
    let witness = verdict.witness.as_ref().map(|w| witness_report(frame, w));
    (Some(word.to_string()), witness, revalidated)
}

pub fn descent_witness_report(verdict: &DescentVerdict) -> Option<serde_json::Value> {
    verdict.witness.as_ref().map(|w| match w {
        DescentWitness::NotInjective { first, second } => serde_json::json!({
            "kind": "not-injective",
            "first": first,
            "second": second,
        }),
        DescentWitness::NotSurjective { family } => serde_json::json!({
            "kind": "not-surjective",
            "family": family,
        }),
    })
}

pub fn print_report(report: &Report) {
    println!(
        "{}",
        serde_json::to_string_pretty(report).expect("reports serialize")
    );
}
