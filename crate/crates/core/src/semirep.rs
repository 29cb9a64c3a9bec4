//! Semi-representable presheaves as set-indexed families of opens.
//!
//! A family `(S, X: S → O(X))` is the canonical carrier; totalization
//! into an honest presheaf of sets exists to validate the equivalence,
//! and every morphism factors uniquely as a fixed-index inequality
//! followed by a pure reindexing (a local isomorphism).

use std::collections::HashMap;

use thiserror::Error;

use crate::order::{FiniteFrame, FinitePoset, OpenSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemirepError {
    #[error("families live over different frames")]
    FrameMismatch,
    #[error("member `{0}` is not an open of the frame")]
    NotAnOpen(String),
    #[error("reindexing must respect members: `{index}` maps outside its open")]
    NotPointwise { index: String },
    #[error("reindex table has {got} entries for {want} indices")]
    BadReindex { got: usize, want: usize },
    #[error("presheaf restriction missing for {from} ⊇ {to}")]
    MissingRestriction { from: String, to: String },
    #[error("presheaf restrictions do not compose at {from} ⊇ {mid} ⊇ {to}")]
    NotFunctorial {
        from: String,
        mid: String,
        to: String,
    },
    #[error("restriction {from} → {to} is not a total map into the target set")]
    BadRestriction { from: String, to: String },
    #[error("diagram data missing for relation {0} <= {1}")]
    MissingDiagramData(String, String),
    #[error("diagram maps are not functorial along {0} <= {1} <= {2}")]
    DiagramNotFunctorial(String, String, String),
}

/// A set-indexed family of opens: a map `index → opens(frame)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedFamily {
    frame: FiniteFrame,
    index: Vec<String>,
    members: Vec<OpenSet>,
}

impl IndexedFamily {
    pub fn new(
        frame: FiniteFrame,
        index: Vec<String>,
        members: Vec<OpenSet>,
    ) -> Result<Self, SemirepError> {
        assert_eq!(index.len(), members.len(), "one member per index");
        for &m in &members {
            if !frame.contains_open(m) {
                return Err(SemirepError::NotAnOpen(frame.open_name(m)));
            }
        }
        Ok(IndexedFamily {
            frame,
            index,
            members,
        })
    }

    pub fn frame(&self) -> &FiniteFrame {
        &self.frame
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn index(&self) -> &[String] {
        &self.index
    }

    pub fn member(&self, s: usize) -> OpenSet {
        self.members[s]
    }

    pub fn members(&self) -> &[OpenSet] {
        &self.members
    }
}

/// A morphism of indexed families: a reindexing `f` with
/// `member(s) ⊆ member(f(s))` pointwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyMorphism {
    source: IndexedFamily,
    target: IndexedFamily,
    reindex: Vec<usize>,
}

impl FamilyMorphism {
    pub fn new(
        source: IndexedFamily,
        target: IndexedFamily,
        reindex: Vec<usize>,
    ) -> Result<Self, SemirepError> {
        if source.frame != target.frame {
            return Err(SemirepError::FrameMismatch);
        }
        if reindex.len() != source.len() {
            return Err(SemirepError::BadReindex {
                got: reindex.len(),
                want: source.len(),
            });
        }
        for (s, &t) in reindex.iter().enumerate() {
            if t >= target.len() || !source.member(s).is_subset_of(target.member(t)) {
                return Err(SemirepError::NotPointwise {
                    index: source.index[s].clone(),
                });
            }
        }
        Ok(FamilyMorphism {
            source,
            target,
            reindex,
        })
    }

    pub fn identity(f: &IndexedFamily) -> Self {
        FamilyMorphism {
            source: f.clone(),
            target: f.clone(),
            reindex: (0..f.len()).collect(),
        }
    }

    pub fn source(&self) -> &IndexedFamily {
        &self.source
    }

    pub fn target(&self) -> &IndexedFamily {
        &self.target
    }

    pub fn reindex(&self) -> &[usize] {
        &self.reindex
    }

    /// True iff every pointwise containment is an equality: the morphism
    /// is a pure reindexing.
    pub fn is_local_iso(&self) -> bool {
        self.reindex
            .iter()
            .enumerate()
            .all(|(s, &t)| self.source.member(s) == self.target.member(t))
    }

    pub fn compose(&self, then: &FamilyMorphism) -> Result<FamilyMorphism, SemirepError> {
        assert_eq!(
            self.target, then.source,
            "composition requires matching middle family"
        );
        let reindex = self.reindex.iter().map(|&s| then.reindex[s]).collect();
        FamilyMorphism::new(self.source.clone(), then.target.clone(), reindex)
    }
}

/// A presheaf of finite sets on a finite frame, with restriction maps
/// for every inclusion of opens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetPresheaf {
    frame: FiniteFrame,
    /// Section names per open, indexed like `frame.opens()`.
    sections: Vec<Vec<String>>,
    /// `restrictions[(from, to)][e]` for `opens[to] ⊆ opens[from]`.
    restrictions: HashMap<(usize, usize), Vec<usize>>,
}

impl SetPresheaf {
    /// Validates identity and composition of the restriction maps.
    pub fn new(
        frame: FiniteFrame,
        sections: Vec<Vec<String>>,
        restrictions: HashMap<(usize, usize), Vec<usize>>,
    ) -> Result<Self, SemirepError> {
        assert_eq!(sections.len(), frame.open_count());
        let opens = frame.opens().to_vec();
        let name = |i: usize| frame.open_name(opens[i]);
        for (from, &wf) in opens.iter().enumerate() {
            for (to, &wt) in opens.iter().enumerate() {
                if !wt.is_subset_of(wf) {
                    continue;
                }
                let table = restrictions.get(&(from, to)).ok_or_else(|| {
                    SemirepError::MissingRestriction {
                        from: name(from),
                        to: name(to),
                    }
                })?;
                if table.len() != sections[from].len()
                    || table.iter().any(|&e| e >= sections[to].len())
                {
                    return Err(SemirepError::BadRestriction {
                        from: name(from),
                        to: name(to),
                    });
                }
                if from == to && table.iter().enumerate().any(|(e, &img)| e != img) {
                    return Err(SemirepError::BadRestriction {
                        from: name(from),
                        to: name(to),
                    });
                }
            }
        }
        // composition: from ⊇ mid ⊇ to
        for (from, &wf) in opens.iter().enumerate() {
            for (mid, &wm) in opens.iter().enumerate() {
                if !wm.is_subset_of(wf) {
                    continue;
                }
                for (to, &wt) in opens.iter().enumerate() {
                    if !wt.is_subset_of(wm) {
                        continue;
                    }
                    let fm = &restrictions[&(from, mid)];
                    let mt = &restrictions[&(mid, to)];
                    let ft = &restrictions[&(from, to)];
                    for e in 0..sections[from].len() {
                        if mt[fm[e]] != ft[e] {
                            return Err(SemirepError::NotFunctorial {
                                from: name(from),
                                mid: name(mid),
                                to: name(to),
                            });
                        }
                    }
                }
            }
        }
        Ok(SetPresheaf {
            frame,
            sections,
            restrictions,
        })
    }

    pub fn frame(&self) -> &FiniteFrame {
        &self.frame
    }

    pub fn sections(&self, open_idx: usize) -> &[String] {
        &self.sections[open_idx]
    }

    pub fn sections_at(&self, open: OpenSet) -> &[String] {
        &self.sections[self.frame.open_index(open).expect("open of the frame")]
    }

    pub fn restrict(&self, from: usize, to: usize, e: usize) -> usize {
        self.restrictions[&(from, to)][e]
    }

    pub fn restrict_at(&self, from: OpenSet, to: OpenSet, e: usize) -> usize {
        let f = self.frame.open_index(from).expect("open of the frame");
        let t = self.frame.open_index(to).expect("open of the frame");
        self.restrict(f, t, e)
    }
}

/// Totalization of an indexed family: the coproduct of representables,
/// evaluated pointwise. `F(W) = { s : W ⊆ member(s) }` with identity
/// restriction on indices.
pub fn totalize(a: &IndexedFamily) -> SetPresheaf {
    let frame = a.frame.clone();
    let opens = frame.opens().to_vec();
    // indices of family members containing each open, in index order
    let carriers: Vec<Vec<usize>> = opens
        .iter()
        .map(|&w| {
            (0..a.len())
                .filter(|&s| w.is_subset_of(a.member(s)))
                .collect()
        })
        .collect();
    let sections: Vec<Vec<String>> = carriers
        .iter()
        .map(|c| c.iter().map(|&s| a.index[s].clone()).collect())
        .collect();
    let mut restrictions = HashMap::new();
    for (from, &wf) in opens.iter().enumerate() {
        for (to, &wt) in opens.iter().enumerate() {
            if !wt.is_subset_of(wf) {
                continue;
            }
            let table = carriers[from]
                .iter()
                .map(|s| {
                    carriers[to]
                        .binary_search(s)
                        .expect("carrier grows as the open shrinks")
                })
                .collect();
            restrictions.insert((from, to), table);
        }
    }
    SetPresheaf::new(frame, sections, restrictions).expect("totalization is functorial")
}

/// All morphisms `a → b`, in lexicographic order of their reindexings.
/// The count is `∏_s |{ t : member_a(s) ⊆ member_b(t) }|`.
pub fn hom_families(
    a: &IndexedFamily,
    b: &IndexedFamily,
) -> Result<Vec<FamilyMorphism>, SemirepError> {
    if a.frame != b.frame {
        return Err(SemirepError::FrameMismatch);
    }
    let candidates: Vec<Vec<usize>> = (0..a.len())
        .map(|s| {
            (0..b.len())
                .filter(|&t| a.member(s).is_subset_of(b.member(t)))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut reindex = vec![0usize; a.len()];
    fn go(
        candidates: &[Vec<usize>],
        pos: usize,
        reindex: &mut Vec<usize>,
        a: &IndexedFamily,
        b: &IndexedFamily,
        out: &mut Vec<FamilyMorphism>,
    ) {
        if pos == candidates.len() {
            out.push(
                FamilyMorphism::new(a.clone(), b.clone(), reindex.clone())
                    .expect("candidates are pointwise valid"),
            );
            return;
        }
        for &t in &candidates[pos] {
            reindex[pos] = t;
            go(candidates, pos + 1, reindex, a, b, out);
        }
    }
    go(&candidates, 0, &mut reindex, a, b, &mut out);
    Ok(out)
}

/// The hom-set cardinality `∏_s |{ t : member_a(s) ⊆ member_b(t) }|`
/// without materializing the morphisms.
pub fn hom_count(a: &IndexedFamily, b: &IndexedFamily) -> Result<u128, SemirepError> {
    if a.frame != b.frame {
        return Err(SemirepError::FrameMismatch);
    }
    let mut count: u128 = 1;
    for s in 0..a.len() {
        let c = (0..b.len())
            .filter(|&t| a.member(s).is_subset_of(b.member(t)))
            .count() as u128;
        count *= c;
    }
    Ok(count)
}

/// The unique factorization of a family morphism into a fixed-index part
/// (identity reindexing into the pulled-back family) followed by a local
/// isomorphism (pointwise equalities).
pub fn factor_local_iso(m: &FamilyMorphism) -> (FamilyMorphism, FamilyMorphism) {
    let pulled_members: Vec<OpenSet> = m.reindex.iter().map(|&t| m.target.member(t)).collect();
    let pulled = IndexedFamily::new(
        m.source.frame.clone(),
        m.source.index.clone(),
        pulled_members,
    )
    .expect("members of the target are opens");
    let fixed_index = FamilyMorphism::new(
        m.source.clone(),
        pulled.clone(),
        (0..m.source.len()).collect(),
    )
    .expect("pullback members contain the source members");
    let local_iso = FamilyMorphism::new(pulled, m.target.clone(), m.reindex.clone())
        .expect("pullback members equal their images");
    debug_assert!(local_iso.is_local_iso());
    (fixed_index, local_iso)
}

/// A functor from a finite poset to finite sets: one set per element and
/// a map along every relation.
#[derive(Debug, Clone)]
pub struct SetDiagram {
    shape: FinitePoset,
    sets: Vec<Vec<String>>,
    maps: HashMap<(usize, usize), Vec<usize>>,
}

impl SetDiagram {
    pub fn new(
        shape: FinitePoset,
        sets: Vec<Vec<String>>,
        maps: HashMap<(usize, usize), Vec<usize>>,
    ) -> Result<Self, SemirepError> {
        assert_eq!(sets.len(), shape.len());
        for i in 0..shape.len() {
            for j in 0..shape.len() {
                if !shape.le(i, j) {
                    continue;
                }
                let table = maps.get(&(i, j)).ok_or_else(|| {
                    SemirepError::MissingDiagramData(
                        shape.element(i).to_string(),
                        shape.element(j).to_string(),
                    )
                })?;
                if table.len() != sets[i].len() || table.iter().any(|&e| e >= sets[j].len()) {
                    return Err(SemirepError::BadRestriction {
                        from: shape.element(i).to_string(),
                        to: shape.element(j).to_string(),
                    });
                }
                if i == j && table.iter().enumerate().any(|(e, &img)| e != img) {
                    return Err(SemirepError::BadRestriction {
                        from: shape.element(i).to_string(),
                        to: shape.element(j).to_string(),
                    });
                }
            }
        }
        for i in 0..shape.len() {
            for j in 0..shape.len() {
                for k in 0..shape.len() {
                    if shape.le(i, j) && shape.le(j, k) {
                        let ij = &maps[&(i, j)];
                        let jk = &maps[&(j, k)];
                        let ik = &maps[&(i, k)];
                        if (0..sets[i].len()).any(|e| jk[ij[e]] != ik[e]) {
                            return Err(SemirepError::DiagramNotFunctorial(
                                shape.element(i).to_string(),
                                shape.element(j).to_string(),
                                shape.element(k).to_string(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(SetDiagram { shape, sets, maps })
    }

    /// Constant diagram at a fixed finite set.
    pub fn constant(shape: FinitePoset, set: Vec<String>) -> Self {
        let sets = vec![set; shape.len()];
        let mut maps = HashMap::new();
        for i in 0..shape.len() {
            for j in 0..shape.len() {
                if shape.le(i, j) {
                    maps.insert((i, j), (0..sets[i].len()).collect());
                }
            }
        }
        SetDiagram::new(shape, sets, maps).expect("constant diagram is functorial")
    }

    pub fn shape(&self) -> &FinitePoset {
        &self.shape
    }

    pub fn set(&self, k: usize) -> &[String] {
        &self.sets[k]
    }

    pub fn map(&self, from: usize, to: usize) -> &[usize] {
        &self.maps[&(from, to)]
    }
}

/// A functor from a finite poset to indexed families, with a family
/// morphism along every relation.
#[derive(Debug, Clone)]
pub struct FamilyDiagram {
    shape: FinitePoset,
    families: Vec<IndexedFamily>,
    reindexings: HashMap<(usize, usize), Vec<usize>>,
}

impl FamilyDiagram {
    pub fn new(
        shape: FinitePoset,
        families: Vec<IndexedFamily>,
        reindexings: HashMap<(usize, usize), Vec<usize>>,
    ) -> Result<Self, SemirepError> {
        assert_eq!(families.len(), shape.len());
        for i in 0..shape.len() {
            for j in 0..shape.len() {
                if !shape.le(i, j) {
                    continue;
                }
                let table = reindexings.get(&(i, j)).ok_or_else(|| {
                    SemirepError::MissingDiagramData(
                        shape.element(i).to_string(),
                        shape.element(j).to_string(),
                    )
                })?;
                // validates the pointwise containments
                FamilyMorphism::new(families[i].clone(), families[j].clone(), table.clone())?;
                if i == j && table.iter().enumerate().any(|(e, &img)| e != img) {
                    return Err(SemirepError::BadReindex {
                        got: table.len(),
                        want: families[i].len(),
                    });
                }
            }
        }
        for i in 0..shape.len() {
            for j in 0..shape.len() {
                for k in 0..shape.len() {
                    if shape.le(i, j) && shape.le(j, k) {
                        let ij = &reindexings[&(i, j)];
                        let jk = &reindexings[&(j, k)];
                        let ik = &reindexings[&(i, k)];
                        if (0..families[i].len()).any(|e| jk[ij[e]] != ik[e]) {
                            return Err(SemirepError::DiagramNotFunctorial(
                                shape.element(i).to_string(),
                                shape.element(j).to_string(),
                                shape.element(k).to_string(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(FamilyDiagram {
            shape,
            families,
            reindexings,
        })
    }

    /// Constant diagram at a fixed family.
    pub fn constant(shape: FinitePoset, family: IndexedFamily) -> Self {
        let n = shape.len();
        let mut reindexings = HashMap::new();
        for i in 0..n {
            for j in 0..n {
                if shape.le(i, j) {
                    reindexings.insert((i, j), (0..family.len()).collect());
                }
            }
        }
        FamilyDiagram::new(shape, vec![family; n], reindexings)
            .expect("constant diagram is functorial")
    }

    pub fn shape(&self) -> &FinitePoset {
        &self.shape
    }

    pub fn family(&self, k: usize) -> &IndexedFamily {
        &self.families[k]
    }

    pub fn reindexing(&self, from: usize, to: usize) -> &[usize] {
        &self.reindexings[&(from, to)]
    }
}

/// Tensoring of a family diagram by a set diagram over the same shape:
/// at each element the index set becomes `F(k) × D(k).index`, with
/// members inherited from `D` and morphisms acting componentwise.
pub fn tensor_family(f: &SetDiagram, d: &FamilyDiagram) -> Result<FamilyDiagram, SemirepError> {
    assert_eq!(
        f.shape(),
        d.shape(),
        "tensor factors must share their shape"
    );
    let shape = d.shape().clone();
    let mut families = Vec::with_capacity(shape.len());
    for k in 0..shape.len() {
        let dk = d.family(k);
        let mut index = Vec::with_capacity(f.set(k).len() * dk.len());
        let mut members = Vec::with_capacity(index.capacity());
        for a in f.set(k) {
            for (s, name) in dk.index().iter().enumerate() {
                index.push(format!("({a},{name})"));
                members.push(dk.member(s));
            }
        }
        families.push(IndexedFamily::new(dk.frame().clone(), index, members)?);
    }
    let mut reindexings = HashMap::new();
    for i in 0..shape.len() {
        for j in 0..shape.len() {
            if !shape.le(i, j) {
                continue;
            }
            let fa = f.map(i, j);
            let da = d.reindexing(i, j);
            let di = d.family(i).len();
            let dj = d.family(j).len();
            let mut table = Vec::with_capacity(f.set(i).len() * di);
            for a in 0..f.set(i).len() {
                for s in 0..di {
                    table.push(fa[a] * dj + da[s]);
                }
            }
            reindexings.insert((i, j), table);
        }
    }
    FamilyDiagram::new(shape, families, reindexings)
}
