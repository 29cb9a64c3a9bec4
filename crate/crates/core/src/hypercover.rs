//! Index diagrams as labeled truncated simplicial sets, and hypercover
//! verification.
//!
//! A labeled simplicial set is the concrete form of a simplicial
//! semi-representable presheaf: a left fibration over Δop together with
//! a functor to the frame, i.e. an open-set label on every simplex,
//! contravariant along faces and constant along degeneracies. The fill
//! condition is checked by two independent routes: directly, by
//! unioning filler labels over every boundary configuration, and in the
//! extension style, by quantifying over the opens that admit a filler.

use thiserror::Error;

use crate::lifting::{residue_points, Verdict, Witness, WitnessKind};
use crate::order::{FiniteFrame, OpenSet};
use crate::semirep::{FamilyMorphism, IndexedFamily, SemirepError};
use crate::simplicial::{SimplicialError, TruncatedSSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HypercoverError {
    #[error("label of cell {cell} at level {level} is not an open of the frame")]
    LabelNotOpen { level: usize, cell: u32 },
    #[error("label of cell {cell} at level {level} escapes the target")]
    LabelNotInTarget { level: usize, cell: u32 },
    #[error("face law fails at level {level}, cell {cell}: label(d_{i} x) must contain label(x)")]
    FaceLawViolated { level: usize, cell: u32, i: usize },
    #[error("degeneracy law fails at level {level}, cell {cell}: label(s_{j} x) must equal label(x)")]
    DegeneracyLawViolated { level: usize, cell: u32, j: usize },
    #[error("label table at level {level} has {got} entries for {want} cells")]
    LabelTableMismatch {
        level: usize,
        got: usize,
        want: usize,
    },
    #[error("name table does not match the shape")]
    NamesShapeMismatch,
    #[error("check level {0} exceeds the truncation {1}")]
    LevelOutOfRange(usize, usize),
    #[error("cover member {member} is not contained in {target}")]
    MemberNotContained { member: String, target: String },
    #[error("family does not cover {0}")]
    NotACover(String),
    #[error("target is not an open of the frame")]
    TargetNotInFrame,
    #[error(transparent)]
    Simplicial(#[from] SimplicialError),
    #[error(transparent)]
    Semirep(#[from] SemirepError),
}

/// A truncated simplicial set with open-set labels: the index diagram of
/// a simplicial semi-representable presheaf over the frame.
#[derive(Debug, Clone)]
pub struct LabeledSSet {
    shape: TruncatedSSet,
    labels: Vec<Vec<OpenSet>>,
    frame: FiniteFrame,
    target: OpenSet,
    names: Option<Vec<Vec<String>>>,
}

impl LabeledSSet {
    /// Validates the label laws; a violation is rejected, never repaired.
    pub fn new(
        shape: TruncatedSSet,
        labels: Vec<Vec<OpenSet>>,
        frame: FiniteFrame,
        target: OpenSet,
    ) -> Result<Self, HypercoverError> {
        if !frame.contains_open(target) {
            return Err(HypercoverError::TargetNotInFrame);
        }
        if labels.len() != shape.truncation() + 1 {
            return Err(HypercoverError::LabelTableMismatch {
                level: labels.len(),
                got: labels.len(),
                want: shape.truncation() + 1,
            });
        }
        for n in 0..=shape.truncation() {
            if labels[n].len() != shape.size(n) {
                return Err(HypercoverError::LabelTableMismatch {
                    level: n,
                    got: labels[n].len(),
                    want: shape.size(n),
                });
            }
            for (c, &l) in labels[n].iter().enumerate() {
                if !frame.contains_open(l) {
                    return Err(HypercoverError::LabelNotOpen {
                        level: n,
                        cell: c as u32,
                    });
                }
                if !l.is_subset_of(target) {
                    return Err(HypercoverError::LabelNotInTarget {
                        level: n,
                        cell: c as u32,
                    });
                }
            }
        }
        for n in 1..=shape.truncation() {
            for c in 0..shape.size(n) as u32 {
                for i in 0..=n {
                    let face = shape.face(n, i, c);
                    if !labels[n][c as usize].is_subset_of(labels[n - 1][face as usize]) {
                        return Err(HypercoverError::FaceLawViolated {
                            level: n,
                            cell: c,
                            i,
                        });
                    }
                }
            }
        }
        for n in 0..shape.truncation() {
            for c in 0..shape.size(n) as u32 {
                for j in 0..=n {
                    let img = shape.degeneracy(n, j, c);
                    if labels[n + 1][img as usize] != labels[n][c as usize] {
                        return Err(HypercoverError::DegeneracyLawViolated {
                            level: n,
                            cell: c,
                            j,
                        });
                    }
                }
            }
        }
        Ok(LabeledSSet {
            shape,
            labels,
            frame,
            target,
            names: None,
        })
    }

    /// Attaches display names to the cells.
    pub fn with_names(mut self, names: Vec<Vec<String>>) -> Result<Self, HypercoverError> {
        if names.len() != self.shape.truncation() + 1
            || names
                .iter()
                .zip(self.shape.sizes())
                .any(|(lvl, &sz)| lvl.len() != sz)
        {
            return Err(HypercoverError::NamesShapeMismatch);
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn shape(&self) -> &TruncatedSSet {
        &self.shape
    }

    pub fn frame(&self) -> &FiniteFrame {
        &self.frame
    }

    pub fn target(&self) -> OpenSet {
        self.target
    }

    pub fn label(&self, n: usize, c: u32) -> OpenSet {
        self.labels[n][c as usize]
    }

    pub fn labels(&self, n: usize) -> &[OpenSet] {
        &self.labels[n]
    }

    pub fn cell_name(&self, n: usize, c: u32) -> String {
        match &self.names {
            Some(names) => names[n][c as usize].clone(),
            None => format!("c{n}#{c}"),
        }
    }

    /// The region of a boundary tuple: the meet of the facet labels, or
    /// the target for the empty tuple at level 0.
    pub fn region_of_tuple(&self, n: usize, tuple: &[u32]) -> OpenSet {
        if n == 0 {
            self.target
        } else {
            tuple
                .iter()
                .fold(self.target, |acc, &c| {
                    acc.intersect(self.labels[n - 1][c as usize])
                })
        }
    }
}

/// Cells of one level sorted by face vector, for filler range queries.
struct FillerIndex {
    order: Vec<u32>,
}

impl FillerIndex {
    fn build(shape: &TruncatedSSet, n: usize) -> Self {
        let mut order: Vec<u32> = (0..shape.size(n) as u32).collect();
        if n > 0 {
            order.sort_by(|&a, &b| {
                (0..=n)
                    .map(|i| shape.face(n, i, a))
                    .cmp((0..=n).map(|i| shape.face(n, i, b)))
            });
        }
        FillerIndex { order }
    }

    fn fillers<'a>(&'a self, shape: &TruncatedSSet, n: usize, tuple: &[u32]) -> &'a [u32] {
        if n == 0 {
            // every vertex fills the empty boundary
            return &self.order;
        }
        let lo = self.order.partition_point(|&c| {
            (0..=n)
                .map(|i| shape.face(n, i, c))
                .lt(tuple.iter().copied())
        });
        let hi = self.order.partition_point(|&c| {
            (0..=n)
                .map(|i| shape.face(n, i, c))
                .le(tuple.iter().copied())
        });
        &self.order[lo..hi]
    }
}

fn boundary_witness(h: &LabeledSSet, n: usize, tuple: &[u32]) -> WitnessKind {
    WitnessKind::Boundary {
        level: n,
        tuple: tuple
            .iter()
            .map(|&c| h.cell_name(n.saturating_sub(1), c))
            .collect(),
    }
}

/// The hypercover fill condition, checked directly: at every level up to
/// `nmax`, the labels of the fillers of each boundary tuple must cover
/// the meet of the tuple's labels (the target itself at level 0).
pub fn check_hypercover(h: &LabeledSSet, nmax: usize) -> Result<Verdict, HypercoverError> {
    if nmax > h.shape.truncation() {
        return Err(HypercoverError::LevelOutOfRange(nmax, h.shape.truncation()));
    }
    for n in 0..=nmax {
        let index = FillerIndex::build(&h.shape, n);
        let mut failure: Option<Witness> = None;
        h.shape.for_each_boundary_tuple(n, &mut |tuple| {
            if failure.is_some() {
                return;
            }
            let region = h.region_of_tuple(n, tuple);
            let mut achieved = OpenSet::EMPTY;
            for &f in index.fillers(&h.shape, n, tuple) {
                achieved = achieved.union(h.labels[n][f as usize]);
            }
            achieved = achieved.intersect(region);
            if !region.is_subset_of(achieved) {
                failure = Some(Witness {
                    kind: boundary_witness(h, n, tuple),
                    region,
                    achieved,
                    residue: residue_points(&h.frame, region, achieved),
                });
            }
        });
        if let Some(w) = failure {
            return Ok(Verdict::fail(w));
        }
    }
    Ok(Verdict::pass())
}

/// The fill condition in extension style: for each boundary tuple with
/// region `U_σ`, the opens `W ⊆ U_σ` for which the boundary extends to a
/// filler with `W` below its label must cover `U_σ`. Equivalent to
/// [`check_hypercover`] instance by instance.
pub fn check_hypercover_dhi(h: &LabeledSSet, nmax: usize) -> Result<Verdict, HypercoverError> {
    if nmax > h.shape.truncation() {
        return Err(HypercoverError::LevelOutOfRange(nmax, h.shape.truncation()));
    }
    let opens = h.frame.opens().to_vec();
    for n in 0..=nmax {
        let index = FillerIndex::build(&h.shape, n);
        let mut failure: Option<Witness> = None;
        h.shape.for_each_boundary_tuple(n, &mut |tuple| {
            if failure.is_some() {
                return;
            }
            let region = h.region_of_tuple(n, tuple);
            let fillers = index.fillers(&h.shape, n, tuple);
            let mut achieved = OpenSet::EMPTY;
            for &w in &opens {
                if !w.is_subset_of(region) {
                    continue;
                }
                // does ∂Δⁿ ⊗ W → H extend to Δⁿ ⊗ W?
                let extends = fillers
                    .iter()
                    .any(|&f| w.is_subset_of(h.labels[n][f as usize]));
                if extends {
                    achieved = achieved.union(w);
                }
            }
            if !region.is_subset_of(achieved) {
                failure = Some(Witness {
                    kind: boundary_witness(h, n, tuple),
                    region,
                    achieved,
                    residue: residue_points(&h.frame, region, achieved),
                });
            }
        });
        if let Some(w) = failure {
            return Ok(Verdict::fail(w));
        }
    }
    Ok(Verdict::pass())
}

/// The Čech nerve of a cover of `v`: level-`n` cells are `(n+1)`-tuples
/// of cover indices, labeled by the meet of their members; faces delete
/// entries and degeneracies repeat them.
pub fn cech_nerve(
    frame: &FiniteFrame,
    cover: &[OpenSet],
    v: OpenSet,
    trunc: usize,
) -> Result<LabeledSSet, HypercoverError> {
    if !frame.contains_open(v) {
        return Err(HypercoverError::TargetNotInFrame);
    }
    for &m in cover {
        if !m.is_subset_of(v) {
            return Err(HypercoverError::MemberNotContained {
                member: frame.open_name(m),
                target: frame.open_name(v),
            });
        }
    }
    let union = cover.iter().fold(OpenSet::EMPTY, |acc, &m| acc.union(m));
    if union != v {
        return Err(HypercoverError::NotACover(frame.open_name(v)));
    }
    let m = cover.len();
    let sizes: Vec<usize> = (0..=trunc).map(|n| m.pow(n as u32 + 1)).collect();
    // cell id at level n = mixed-radix tuple, first entry most significant
    let decode = |n: usize, c: usize| -> Vec<usize> {
        let mut digits = vec![0usize; n + 1];
        let mut rest = c;
        for slot in (0..=n).rev() {
            digits[slot] = rest % m;
            rest /= m;
        }
        digits
    };
    let encode = |digits: &[usize]| -> u32 {
        digits.iter().fold(0usize, |acc, &d| acc * m + d) as u32
    };
    let mut faces: Vec<Vec<Vec<u32>>> = vec![Vec::new(); trunc + 1];
    for n in 1..=trunc {
        let mut tables = vec![vec![0u32; sizes[n]]; n + 1];
        for c in 0..sizes[n] {
            let digits = decode(n, c);
            for i in 0..=n {
                let mut d = digits.clone();
                d.remove(i);
                tables[i][c] = encode(&d);
            }
        }
        faces[n] = tables;
    }
    let mut degens: Vec<Vec<Vec<u32>>> = Vec::with_capacity(trunc);
    for n in 0..trunc {
        let mut tables = vec![vec![0u32; sizes[n]]; n + 1];
        for c in 0..sizes[n] {
            let digits = decode(n, c);
            for j in 0..=n {
                let mut d = digits.clone();
                d.insert(j, digits[j]);
                tables[j][c] = encode(&d);
            }
        }
        degens.push(tables);
    }
    let shape = TruncatedSSet::new(trunc, sizes.clone(), faces, degens)?;
    let labels: Vec<Vec<OpenSet>> = (0..=trunc)
        .map(|n| {
            (0..sizes[n])
                .map(|c| {
                    decode(n, c)
                        .iter()
                        .fold(v, |acc, &d| acc.intersect(cover[d]))
                })
                .collect()
        })
        .collect();
    let names: Vec<Vec<String>> = (0..=trunc)
        .map(|n| {
            (0..sizes[n])
                .map(|c| {
                    let digits: Vec<String> =
                        decode(n, c).iter().map(|d| d.to_string()).collect();
                    format!("({})", digits.join(","))
                })
                .collect()
        })
        .collect();
    LabeledSSet::new(shape, labels, frame.clone(), v)?.with_names(names)
}

/// The family presentation of a labeled simplicial set: one indexed
/// family per level, with a family morphism along every face and
/// degeneracy operator.
#[derive(Debug, Clone)]
pub struct LeveledFamilies {
    pub families: Vec<IndexedFamily>,
    /// `faces[n][i]` covers `d_i: level n → level n-1`, for `n >= 1`.
    pub faces: Vec<Vec<FamilyMorphism>>,
    /// `degens[n][j]` covers `s_j: level n → level n+1`, for `n < N`.
    pub degens: Vec<Vec<FamilyMorphism>>,
    pub target: OpenSet,
}

/// Splits a labeled simplicial set into its per-level indexed families;
/// the pointwise inequalities of the morphisms are exactly the label
/// laws.
pub fn labeled_to_families(h: &LabeledSSet) -> LeveledFamilies {
    let trunc = h.shape.truncation();
    let families: Vec<IndexedFamily> = (0..=trunc)
        .map(|n| {
            let index = (0..h.shape.size(n) as u32)
                .map(|c| h.cell_name(n, c))
                .collect();
            IndexedFamily::new(h.frame.clone(), index, h.labels[n].clone())
                .expect("labels are opens")
        })
        .collect();
    let mut faces = vec![Vec::new()];
    for n in 1..=trunc {
        let mut level = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let reindex = (0..h.shape.size(n) as u32)
                .map(|c| h.shape.face(n, i, c) as usize)
                .collect();
            level.push(
                FamilyMorphism::new(families[n].clone(), families[n - 1].clone(), reindex)
                    .expect("face law gives the pointwise inequality"),
            );
        }
        faces.push(level);
    }
    let mut degens = Vec::new();
    for n in 0..trunc {
        let mut level = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let reindex = (0..h.shape.size(n) as u32)
                .map(|c| h.shape.degeneracy(n, j, c) as usize)
                .collect();
            level.push(
                FamilyMorphism::new(families[n].clone(), families[n + 1].clone(), reindex)
                    .expect("degeneracy law gives pointwise equality"),
            );
        }
        degens.push(level);
    }
    LeveledFamilies {
        families,
        faces,
        degens,
        target: h.target,
    }
}

/// Reconstructs the labeled simplicial set from its family presentation.
/// Exact inverse of [`labeled_to_families`].
pub fn families_to_labeled(lf: &LeveledFamilies) -> Result<LabeledSSet, HypercoverError> {
    let trunc = lf.families.len() - 1;
    let frame = lf.families[0].frame().clone();
    let sizes: Vec<usize> = lf.families.iter().map(|f| f.len()).collect();
    let faces: Vec<Vec<Vec<u32>>> = (0..=trunc)
        .map(|n| {
            if n == 0 {
                Vec::new()
            } else {
                lf.faces[n]
                    .iter()
                    .map(|m| m.reindex().iter().map(|&c| c as u32).collect())
                    .collect()
            }
        })
        .collect();
    let degens: Vec<Vec<Vec<u32>>> = (0..trunc)
        .map(|n| {
            lf.degens[n]
                .iter()
                .map(|m| m.reindex().iter().map(|&c| c as u32).collect())
                .collect()
        })
        .collect();
    let shape = TruncatedSSet::new(trunc, sizes, faces, degens)?;
    let labels: Vec<Vec<OpenSet>> = lf.families.iter().map(|f| f.members().to_vec()).collect();
    let names: Vec<Vec<String>> = lf.families.iter().map(|f| f.index().to_vec()).collect();
    LabeledSSet::new(shape, labels, frame, lf.target)?.with_names(names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::FiniteFrame;

    fn line_frame() -> FiniteFrame {
        let points: Vec<String> = ["1", "2", "3"].iter().map(|s| s.to_string()).collect();
        let u = OpenSet::from_bits(0b011);
        let v = OpenSet::from_bits(0b110);
        FiniteFrame::closure(points, &[u, v]).unwrap()
    }

    fn constant_object(frame: &FiniteFrame, v: OpenSet, trunc: usize) -> LabeledSSet {
        let shape = TruncatedSSet::standard_simplex(0, trunc);
        let labels = vec![vec![v]; trunc + 1];
        LabeledSSet::new(shape, labels, frame.clone(), v).unwrap()
    }

    #[test]
    fn constant_object_passes_both_checks() {
        let frame = line_frame();
        let h = constant_object(&frame, frame.top(), 3);
        assert!(check_hypercover(&h, 3).unwrap().pass);
        assert!(check_hypercover_dhi(&h, 3).unwrap().pass);
    }

    #[test]
    fn cech_nerve_of_singleton_cover_is_constant() {
        let frame = line_frame();
        let h = cech_nerve(&frame, &[frame.top()], frame.top(), 2).unwrap();
        for n in 0..=2 {
            assert_eq!(h.shape().size(n), 1);
            assert_eq!(h.label(n, 0), frame.top());
        }
    }

    #[test]
    fn cech_nerve_level_one_labels() {
        // cover {U, V}: level 1 has 4 tuples labeled U, U∩V, U∩V, V
        let frame = line_frame();
        let u = OpenSet::from_bits(0b011);
        let v = OpenSet::from_bits(0b110);
        let h = cech_nerve(&frame, &[u, v], frame.top(), 2).unwrap();
        assert_eq!(h.shape().size(1), 4);
        let labels: Vec<OpenSet> = (0..4).map(|c| h.label(1, c)).collect();
        assert_eq!(labels, vec![u, u.intersect(v), u.intersect(v), v]);
        // degenerate edges carry the vertex labels
        for c in 0..h.shape().size(0) as u32 {
            let s = h.shape().degeneracy(0, 0, c);
            assert_eq!(h.label(1, s), h.label(0, c));
        }
    }

    #[test]
    fn cech_nerve_passes_hypercover_checks() {
        let frame = line_frame();
        let u = OpenSet::from_bits(0b011);
        let v = OpenSet::from_bits(0b110);
        let h = cech_nerve(&frame, &[u, v], frame.top(), 3).unwrap();
        assert!(check_hypercover(&h, 3).unwrap().pass);
        assert!(check_hypercover_dhi(&h, 3).unwrap().pass);
    }

    #[test]
    fn cech_nerve_rejects_non_covers() {
        let frame = line_frame();
        let u = OpenSet::from_bits(0b011);
        assert!(matches!(
            cech_nerve(&frame, &[u], frame.top(), 1),
            Err(HypercoverError::NotACover(_))
        ));
        assert!(matches!(
            cech_nerve(&frame, &[frame.top()], u, 1),
            Err(HypercoverError::MemberNotContained { .. })
        ));
    }

    #[test]
    fn label_laws_are_enforced() {
        let frame = line_frame();
        let u = OpenSet::from_bits(0b011);
        let shape = TruncatedSSet::standard_simplex(0, 1);
        // s_0(v) must carry the same label as v
        let labels = vec![vec![frame.top()], vec![u]];
        let err = LabeledSSet::new(shape.clone(), labels, frame.clone(), frame.top()).unwrap_err();
        assert!(matches!(err, HypercoverError::FaceLawViolated { .. })
            || matches!(err, HypercoverError::DegeneracyLawViolated { .. }));

        // a label outside the target is rejected
        let labels = vec![vec![frame.top()], vec![frame.top()]];
        let err = LabeledSSet::new(shape, labels, frame.clone(), u).unwrap_err();
        assert!(matches!(err, HypercoverError::LabelNotInTarget { .. }));
    }

    #[test]
    fn families_round_trip() {
        let frame = line_frame();
        let u = OpenSet::from_bits(0b011);
        let v = OpenSet::from_bits(0b110);
        let h = cech_nerve(&frame, &[u, v], frame.top(), 2).unwrap();
        let lf = labeled_to_families(&h);
        assert_eq!(lf.families[1].len(), 4);
        for (n, level) in lf.faces.iter().enumerate().skip(1) {
            for (i, m) in level.iter().enumerate() {
                let expected: Vec<usize> = (0..h.shape().size(n) as u32)
                    .map(|c| h.shape().face(n, i, c) as usize)
                    .collect();
                assert_eq!(m.reindex(), expected.as_slice());
            }
        }
        for level in &lf.degens {
            for m in level {
                assert!(m.is_local_iso());
            }
        }
        let back = families_to_labeled(&lf).unwrap();
        assert_eq!(back.shape(), h.shape());
        for n in 0..=2 {
            assert_eq!(back.labels(n), h.labels(n));
            for c in 0..back.shape().size(n) as u32 {
                assert_eq!(back.cell_name(n, c), h.cell_name(n, c));
            }
        }
    }

    #[test]
    fn dhi_agrees_with_direct_check_on_small_objects() {
        let frame = line_frame();
        let u = OpenSet::from_bits(0b011);
        let v = OpenSet::from_bits(0b110);
        // a passing instance and a failing instance
        let good = cech_nerve(&frame, &[u, v], frame.top(), 2).unwrap();
        // two disjoint-ish vertices that do not cover: drop one vertex
        let shape = TruncatedSSet::standard_simplex(0, 2);
        let bad = LabeledSSet::new(
            shape,
            vec![vec![u], vec![u], vec![u]],
            frame.clone(),
            frame.top(),
        )
        .unwrap();
        for (h, expect) in [(&good, true), (&bad, false)] {
            let direct = check_hypercover(h, 2).unwrap();
            let dhi = check_hypercover_dhi(h, 2).unwrap();
            assert_eq!(direct.pass, expect);
            assert_eq!(direct.pass, dhi.pass);
        }
    }

    #[test]
    fn failing_witness_has_sound_residue() {
        let frame = line_frame();
        let u = OpenSet::from_bits(0b011);
        let shape = TruncatedSSet::standard_simplex(0, 1);
        let h = LabeledSSet::new(shape, vec![vec![u], vec![u]], frame.clone(), frame.top())
            .unwrap();
        let verdict = check_hypercover(&h, 1).unwrap();
        assert!(!verdict.pass);
        let w = verdict.witness.unwrap();
        assert!(!w.residue.is_empty());
        let mut rebuilt = w.achieved;
        for name in &w.residue {
            let idx = frame.point_index(name).unwrap();
            rebuilt = rebuilt.union(OpenSet::from_bits(1 << idx));
        }
        assert_eq!(rebuilt, w.region);
    }
}
