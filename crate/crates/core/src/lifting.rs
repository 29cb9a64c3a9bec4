//! The local-lifting-problem engine and the atlas characterizations.
//!
//! A lifting problem asks whether the region of a partial diagram
//! `σ: K → I` is covered by the regions of its monotone completions
//! `τ: L → I`. Atlases are exactly the diagrams with this property
//! against all cone inclusions, and the module evaluates the six
//! equivalent formulations side by side.
//!
//! Compatibility orientation, fixed once for the whole library: `U`
//! monotone means `i <= j` implies `U_i ⊆ U_j`, so lower bounds in the
//! index poset carry smaller opens.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::order::{
    first_monotone_extension, for_each_monotone_extension, FiniteFrame, FinitePoset, MonotoneMap,
    OpenSet,
};
use crate::simplicial::{
    boundary_delta_plus, boundary_subposet, delta_plus, simplex_category_preorder,
    simplex_subposet, simplicial_envelope, EnvelopeCell,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LiftingError {
    #[error("diagram assignment is not monotone between `{0}` and `{1}`")]
    DiagramNotMonotone(String, String),
    #[error("assigned open {0} is not an open of the frame")]
    OpenNotInFrame(String),
    #[error("assigned open {member} is not contained in the target {target}")]
    NotContainedInTarget { member: String, target: String },
    #[error("sigma is not monotone")]
    SigmaNotMonotone,
    #[error("sigma has {got} entries for {want} shape elements")]
    SigmaWrongLength { got: usize, want: usize },
    #[error("sigma value {0} is outside the diagram index")]
    SigmaOutOfRange(usize),
    #[error("embedding is not injective")]
    EmbeddingNotInjective,
    #[error("embedding is not order-reflecting")]
    EmbeddingNotOrderReflecting,
    #[error("subset is not 0-coinitial in the problem shape")]
    NotCoinitial,
    #[error("target open is not an open of the frame")]
    TargetNotInFrame,
}

/// A poset-indexed diagram of opens: monotone `U: I → O(X)` together
/// with the open it is meant to cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenDiagram {
    index: FinitePoset,
    frame: FiniteFrame,
    opens: Vec<OpenSet>,
    target: OpenSet,
}

impl OpenDiagram {
    pub fn new(
        index: FinitePoset,
        frame: FiniteFrame,
        opens: Vec<OpenSet>,
        target: OpenSet,
    ) -> Result<Self, LiftingError> {
        assert_eq!(opens.len(), index.len(), "one open per index element");
        if !frame.contains_open(target) {
            return Err(LiftingError::TargetNotInFrame);
        }
        for &o in &opens {
            if !frame.contains_open(o) {
                return Err(LiftingError::OpenNotInFrame(frame.open_name(o)));
            }
            if !o.is_subset_of(target) {
                return Err(LiftingError::NotContainedInTarget {
                    member: frame.open_name(o),
                    target: frame.open_name(target),
                });
            }
        }
        for i in 0..index.len() {
            for j in 0..index.len() {
                if index.le(i, j) && !opens[i].is_subset_of(opens[j]) {
                    return Err(LiftingError::DiagramNotMonotone(
                        index.element(i).to_string(),
                        index.element(j).to_string(),
                    ));
                }
            }
        }
        Ok(OpenDiagram {
            index,
            frame,
            opens,
            target,
        })
    }

    /// The full frame as a diagram over its own inclusion order (a basis
    /// of the topology, hence an atlas).
    pub fn basis(frame: &FiniteFrame) -> Self {
        let index = frame.as_poset();
        let opens = frame.opens().to_vec();
        OpenDiagram::new(index, frame.clone(), opens, frame.top())
            .expect("inclusion order is monotone")
    }

    pub fn index(&self) -> &FinitePoset {
        &self.index
    }

    pub fn frame(&self) -> &FiniteFrame {
        &self.frame
    }

    pub fn open(&self, i: usize) -> OpenSet {
        self.opens[i]
    }

    pub fn opens(&self) -> &[OpenSet] {
        &self.opens
    }

    pub fn target(&self) -> OpenSet {
        self.target
    }

    /// The diagram as a monotone map `I → O(X)` into the inclusion poset.
    pub fn u_map(&self) -> MonotoneMap {
        let frame_poset = self.frame.as_poset();
        let map = self
            .opens
            .iter()
            .map(|&o| self.frame.open_index(o).expect("diagram opens are opens"))
            .collect();
        MonotoneMap::new(self.index.clone(), frame_poset, map)
            .expect("diagram assignment is monotone")
    }

    /// The region of a partial assignment: the target intersected with
    /// the opens at the assigned values. For an empty assignment this is
    /// the target itself (the empty meet in the slice over the target).
    pub fn region(&self, values: &[usize]) -> OpenSet {
        values
            .iter()
            .fold(self.target, |acc, &i| acc.intersect(self.opens[i]))
    }
}

/// A local lifting problem: an inclusion of finite shapes `K ⊆ L` and a
/// partial diagram `σ: K → I`.
#[derive(Debug, Clone)]
pub struct LiftingProblem {
    pub shape_small: FinitePoset,
    pub shape_big: FinitePoset,
    /// Element indices of `shape_small` inside `shape_big`.
    pub embedding: Vec<usize>,
    /// Assignment of diagram-index elements to `shape_small` elements.
    pub sigma: Vec<usize>,
}

impl LiftingProblem {
    pub fn new(
        shape_small: FinitePoset,
        shape_big: FinitePoset,
        embedding: Vec<usize>,
        sigma: Vec<usize>,
    ) -> Result<Self, LiftingError> {
        assert_eq!(embedding.len(), shape_small.len());
        if sigma.len() != shape_small.len() {
            return Err(LiftingError::SigmaWrongLength {
                got: sigma.len(),
                want: shape_small.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for &e in &embedding {
            if e >= shape_big.len() || !seen.insert(e) {
                return Err(LiftingError::EmbeddingNotInjective);
            }
        }
        for a in 0..shape_small.len() {
            for b in 0..shape_small.len() {
                if shape_small.le(a, b) != shape_big.le(embedding[a], embedding[b]) {
                    return Err(LiftingError::EmbeddingNotOrderReflecting);
                }
            }
        }
        Ok(LiftingProblem {
            shape_small,
            shape_big,
            embedding,
            sigma,
        })
    }

    /// The cone problem `K ⊂ K◁` for a shape and partial diagram.
    pub fn cone(shape: FinitePoset, sigma: Vec<usize>) -> Result<Self, LiftingError> {
        let (cone, cone_pt) = shape
            .left_cone()
            .expect("shape identifiers avoid the reserved prefix");
        let embedding = (0..shape.len())
            .map(|i| if i >= cone_pt { i + 1 } else { i })
            .collect();
        LiftingProblem::new(shape, cone, embedding, sigma)
    }
}

/// Structured description of why a check failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessKind {
    /// A lifting problem, described by its partial assignment
    /// (shape element, diagram index element).
    Lifting { assignment: Vec<(String, String)> },
    /// A boundary tuple of a labeled simplicial set.
    Boundary { level: usize, tuple: Vec<String> },
}

/// A counterexample certificate: the failing configuration, the region
/// it demands, the union its fillers achieve, and the points left over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub kind: WitnessKind,
    pub region: OpenSet,
    pub achieved: OpenSet,
    /// Point names of `region \ achieved`; nonempty on any failure.
    pub residue: Vec<String>,
}

/// Outcome of a check: pass, or fail with a certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub pass: bool,
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn pass() -> Self {
        Verdict {
            pass: true,
            witness: None,
        }
    }

    pub fn fail(witness: Witness) -> Self {
        Verdict {
            pass: false,
            witness: Some(witness),
        }
    }
}

pub(crate) fn residue_points(frame: &FiniteFrame, region: OpenSet, achieved: OpenSet) -> Vec<String> {
    region
        .difference(achieved)
        .points()
        .filter(|&p| p < frame.point_count())
        .map(|p| frame.points()[p].clone())
        .collect()
}

/// Checks one local lifting problem: enumerates all monotone fillers
/// `τ: L → I` extending `σ` and passes iff their regions cover the
/// region of `σ`. Fillers are enumerated in a fixed lexicographic order,
/// so failure witnesses are deterministic.
pub fn local_lifting_check(
    d: &OpenDiagram,
    p: &LiftingProblem,
) -> Result<Verdict, LiftingError> {
    for &v in &p.sigma {
        if v >= d.index.len() {
            return Err(LiftingError::SigmaOutOfRange(v));
        }
    }
    for a in 0..p.shape_small.len() {
        for b in 0..p.shape_small.len() {
            if p.shape_small.le(a, b) && !d.index.le(p.sigma[a], p.sigma[b]) {
                return Err(LiftingError::SigmaNotMonotone);
            }
        }
    }
    let region = d.region(&p.sigma);
    let mut fixed: Vec<Option<usize>> = vec![None; p.shape_big.len()];
    for (k, &l) in p.embedding.iter().enumerate() {
        fixed[l] = Some(p.sigma[k]);
    }
    let mut achieved = OpenSet::EMPTY;
    for_each_monotone_extension(&p.shape_big, &d.index, &fixed, &mut |tau| {
        achieved = achieved.union(d.region(tau));
    });
    achieved = achieved.intersect(region);
    if region.is_subset_of(achieved) {
        Ok(Verdict::pass())
    } else {
        let assignment = p
            .sigma
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                (
                    p.shape_small.element(k).to_string(),
                    d.index.element(v).to_string(),
                )
            })
            .collect();
        Ok(Verdict::fail(Witness {
            kind: WitnessKind::Lifting { assignment },
            region,
            achieved,
            residue: residue_points(&d.frame, region, achieved),
        }))
    }
}

/// How [`check_atlas`] quantifies over problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtlasMode {
    /// Global cover plus the binary-intersection condition
    /// `U_i ∩ U_j = ⋃_{k <= i,j} U_k`.
    Basic,
    /// Cone problems `K ⊂ K◁` for all discrete `K` with `|K| <= kmax`.
    FiniteSets { kmax: usize },
    /// Boundary-to-simplex subset-poset problems for `n <= nmax`.
    Subsets { nmax: usize },
}

/// Checks whether a diagram is an atlas for its target, in the requested
/// formulation. All formulations agree on every diagram.
pub fn check_atlas(d: &OpenDiagram, mode: AtlasMode) -> Verdict {
    match mode {
        AtlasMode::Basic => check_atlas_basic(d),
        AtlasMode::FiniteSets { kmax } => {
            for m in 0..=kmax {
                let shape = FinitePoset::discrete((0..m).map(|i| i.to_string()).collect())
                    .expect("numerals are distinct");
                let verdict = sweep_cone_problems(d, &shape, None);
                if !verdict.pass {
                    return verdict;
                }
            }
            Verdict::pass()
        }
        AtlasMode::Subsets { nmax } => {
            for n in 0..=nmax {
                let verdict = check_subset_problems(d, n);
                if !verdict.pass {
                    return verdict;
                }
            }
            Verdict::pass()
        }
    }
}

fn check_atlas_basic(d: &OpenDiagram) -> Verdict {
    // condition 1, stated directly: target = ⋃ U_i
    let union = d
        .opens
        .iter()
        .fold(OpenSet::EMPTY, |acc, &o| acc.union(o));
    if union != d.target {
        return Verdict::fail(Witness {
            kind: WitnessKind::Lifting { assignment: vec![] },
            region: d.target,
            achieved: union,
            residue: residue_points(&d.frame, d.target, union),
        });
    }
    // and U_i ∩ U_j = ⋃_{k <= i,j} U_k for all pairs
    for i in 0..d.index.len() {
        for j in 0..d.index.len() {
            let region = d.opens[i].intersect(d.opens[j]);
            let mut below = OpenSet::EMPTY;
            for k in 0..d.index.len() {
                if d.index.le(k, i) && d.index.le(k, j) {
                    below = below.union(d.opens[k]);
                }
            }
            if below != region {
                return Verdict::fail(Witness {
                    kind: WitnessKind::Lifting {
                        assignment: vec![
                            ("0".to_string(), d.index.element(i).to_string()),
                            ("1".to_string(), d.index.element(j).to_string()),
                        ],
                    },
                    region,
                    achieved: below,
                    residue: residue_points(&d.frame, region, below),
                });
            }
        }
    }
    Verdict::pass()
}

/// Runs every cone-type problem `K ⊂ L` against the diagram, where `L`
/// is `K` plus a single fresh minimum (the left cone when `shapes` is
/// `None`). The verdict of such a problem depends only on the values of
/// `σ` on the minimal elements of `K`, so the sweep enumerates tuples of
/// minimal values and checks one representative extension per tuple.
fn sweep_cone_problems(
    d: &OpenDiagram,
    shape: &FinitePoset,
    shapes: Option<(&FinitePoset, &[usize])>,
) -> Verdict {
    let (big, embedding): (FinitePoset, Vec<usize>) = match shapes {
        Some((l, emb)) => (l.clone(), emb.to_vec()),
        None => {
            let (cone, cone_pt) = shape
                .left_cone()
                .expect("shape identifiers avoid the reserved prefix");
            (
                cone,
                (0..shape.len())
                    .map(|i| if i >= cone_pt { i + 1 } else { i })
                    .collect(),
            )
        }
    };
    debug_assert_eq!(big.len(), shape.len() + 1);
    let mins = shape.minimal_elements();
    let mut tuple = vec![0usize; mins.len()];
    let verdict = sweep_rec(d, shape, &big, &embedding, &mins, &mut tuple, 0);
    verdict.unwrap_or_else(Verdict::pass)
}

fn sweep_rec(
    d: &OpenDiagram,
    shape: &FinitePoset,
    big: &FinitePoset,
    embedding: &[usize],
    mins: &[usize],
    tuple: &mut Vec<usize>,
    pos: usize,
) -> Option<Verdict> {
    if pos == mins.len() {
        let mut fixed = vec![None; shape.len()];
        for (t, &m) in mins.iter().enumerate() {
            fixed[m] = Some(tuple[t]);
        }
        let sigma = first_monotone_extension(shape, &d.index, &fixed)?;
        let problem =
            LiftingProblem::new(shape.clone(), big.clone(), embedding.to_vec(), sigma)
                .expect("sweep shapes embed");
        let verdict = local_lifting_check(d, &problem).expect("sweep sigma is monotone");
        return if verdict.pass { None } else { Some(verdict) };
    }
    for v in 0..d.index.len() {
        tuple[pos] = v;
        if let Some(fail) = sweep_rec(d, shape, big, embedding, mins, tuple, pos + 1) {
            return Some(fail);
        }
    }
    None
}

fn check_subset_problems(d: &OpenDiagram, n: usize) -> Verdict {
    let boundary = boundary_subposet(n);
    let simplex = simplex_subposet(n);
    // the boundary poset embeds into the simplex poset, whose extra
    // element (the full subset) is the unique minimum
    let embedding: Vec<usize> = boundary
        .poset
        .elements()
        .iter()
        .map(|e| simplex.poset.index_of(e).expect("proper subsets persist"))
        .collect();
    sweep_cone_problems(d, &boundary.poset, Some((&simplex.poset, &embedding)))
}

/// The posetal quotients of the truncated categories of simplices of
/// `∂Δⁿ ⊂ Δⁿ`, with the induced embedding. The quotient identifies each
/// degenerate simplex with its nondegenerate core, recovering the subset
/// posets.
pub fn simplex_category_posets(n: usize) -> (FinitePoset, FinitePoset, Vec<usize>) {
    let trunc = n;
    let (bsemi, bmasks) = boundary_delta_plus(n, if n == 0 { 0 } else { n - 1 });
    let benv = simplicial_envelope(&bsemi, trunc);
    let (dsemi, dmasks) = delta_plus(n, n);
    let denv = simplicial_envelope(&dsemi, trunc);

    let bpre = simplex_category_preorder(&benv.sset);
    let dpre = simplex_category_preorder(&denv.sset);
    let bq = crate::order::preorder_to_poset(&bpre);
    let dq = crate::order::preorder_to_poset(&dpre);

    let offset = |sizes: &[usize], level: usize| -> usize { sizes[..level].iter().sum() };
    let bsizes = benv.sset.sizes().to_vec();
    let dsizes = denv.sset.sizes().to_vec();

    let mut embedding = vec![usize::MAX; bq.poset.len()];
    for (level, level_cells) in benv.cells.iter().enumerate() {
        for (idx, cell) in level_cells.iter().enumerate() {
            let mask = bmasks[cell.core_level][cell.core as usize];
            let dcore = dmasks[cell.core_level]
                .binary_search(&mask)
                .expect("boundary cores are simplex cores");
            let dcell = EnvelopeCell {
                core_level: cell.core_level,
                core: dcore as u32,
                surj: cell.surj.clone(),
            };
            let didx = denv
                .cell_index(level, &dcell)
                .expect("boundary cells persist in the simplex");
            let bclass = bq.class_of[offset(&bsizes, level) + idx];
            let dclass = dq.class_of[offset(&dsizes, level) + didx as usize];
            if embedding[bclass] == usize::MAX {
                embedding[bclass] = dclass;
            } else {
                debug_assert_eq!(embedding[bclass], dclass, "embedding is class-consistent");
            }
        }
    }
    (bq.poset, dq.poset, embedding)
}

/// One verdict per condition of the six-fold atlas characterization.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// Conditions 1-6: cones over ∅ and a pair; cones over finite sets;
    /// semisimplicial boundary problems at n <= 1; the same for all
    /// n <= nmax; and the two simplicial variants computed through the
    /// posetal quotient of the categories of simplices.
    pub conditions: [Verdict; 6],
}

impl EquivalenceReport {
    pub fn all_agree(&self) -> bool {
        self.conditions.iter().all(|v| v.pass == self.conditions[0].pass)
    }

    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|v| v.pass)
    }
}

/// Evaluates the six equivalent atlas conditions; 2, 4, 6 are truncated
/// at `kmax = nmax + 1` and `nmax` respectively.
pub fn equivalence_report(d: &OpenDiagram, nmax: usize) -> EquivalenceReport {
    assert!(nmax >= 1, "nmax must be at least 1");
    let kmax = nmax + 1;

    let discrete_cone = |m: usize| -> Verdict {
        let shape = FinitePoset::discrete((0..m).map(|i| i.to_string()).collect())
            .expect("numerals are distinct");
        sweep_cone_problems(d, &shape, None)
    };

    let cond1 = [0usize, 2]
        .iter()
        .map(|&m| discrete_cone(m))
        .find(|v| !v.pass)
        .unwrap_or_else(Verdict::pass);
    let cond2 = check_atlas(d, AtlasMode::FiniteSets { kmax });
    let cond3 = (0..=1)
        .map(|n| check_subset_problems(d, n))
        .find(|v| !v.pass)
        .unwrap_or_else(Verdict::pass);
    let cond4 = check_atlas(d, AtlasMode::Subsets { nmax });

    let mixed = |n: usize| -> Verdict {
        let (k, l, embedding) = simplex_category_posets(n);
        sweep_cone_problems(d, &k, Some((&l, &embedding)))
    };
    let cond5 = (0..=1)
        .map(mixed)
        .find(|v| !v.pass)
        .unwrap_or_else(Verdict::pass);
    let cond6 = (0..=nmax)
        .map(mixed)
        .find(|v| !v.pass)
        .unwrap_or_else(Verdict::pass);

    EquivalenceReport {
        conditions: [cond1, cond2, cond3, cond4, cond5, cond6],
    }
}

/// Both verdicts behind [`pushout_transfer_check`]: the problem reduced
/// to the coinitial subset, and the full problem as given.
pub fn pushout_transfer_detail(
    d: &OpenDiagram,
    p: &LiftingProblem,
    k0: &BTreeSet<usize>,
) -> Result<(Verdict, Verdict), LiftingError> {
    if !p.shape_small.is_zero_coinitial(k0) {
        return Err(LiftingError::NotCoinitial);
    }
    let indices: Vec<usize> = k0.iter().copied().collect();
    let (sub, _) = p.shape_small.subposet(&indices);
    let sigma0: Vec<usize> = indices.iter().map(|&i| p.sigma[i]).collect();
    let reduced_problem = LiftingProblem::cone(sub, sigma0)?;
    let reduced = local_lifting_check(d, &reduced_problem)?;
    let full = local_lifting_check(d, p)?;
    Ok((reduced, full))
}

/// Concrete transfer of the lifting property along the cone pushout:
/// true iff a pass on the problem reduced to the 0-coinitial subset
/// implies a pass on the full problem.
pub fn pushout_transfer_check(
    d: &OpenDiagram,
    p: &LiftingProblem,
    k0: &BTreeSet<usize>,
) -> Result<bool, LiftingError> {
    let (reduced, full) = pushout_transfer_detail(d, p, k0)?;
    Ok(!reduced.pass || full.pass)
}
