//! Finite posets, monotone maps, preorders, and finite frames of open sets.
//!
//! Posets are stored extensionally: a list of element identifiers plus a
//! boolean order matrix. Frames are families of point subsets (bitmasks)
//! closed under union and intersection, so joins and meets are literal
//! set operations. These two representations carry the whole library.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Prefix reserved for identifiers the library generates itself (cone
/// points, pushout classes). User-supplied identifiers must not use it.
pub const RESERVED_PREFIX: &str = "*";

const CONE_ID: &str = "*cone";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrderError {
    #[error("duplicate element identifier `{0}`")]
    DuplicateElement(String),
    #[error("unknown element identifier `{0}`")]
    UnknownElement(String),
    #[error("relation is not reflexive at `{0}`")]
    NotReflexive(String),
    #[error("relation is not transitive: `{0}` <= `{1}` <= `{2}` but not `{0}` <= `{2}`")]
    NotTransitive(String, String, String),
    #[error("relation is not antisymmetric: `{0}` and `{1}` are mutually related")]
    NotAntisymmetric(String, String),
    #[error("map does not preserve order: {0} <= {1} in the source")]
    NotMonotone(String, String),
    #[error("assignment has {got} entries for {want} source elements")]
    BadAssignment { got: usize, want: usize },
    #[error("cone identifier `{0}` collides with an existing element")]
    ConeIdCollision(String),
    #[error("maps must share the same source poset")]
    SourceMismatch,
    #[error("map target does not match the expected poset")]
    TargetMismatch,
    #[error("frame supports at most 64 points, got {0}")]
    TooManyPoints(usize),
    #[error("frame closure exceeded {0} open sets")]
    TooManyOpens(usize),
    #[error("subset is not an open of the frame: {0}")]
    NotAnOpen(String),
    #[error("family member {member} is not contained in {target}")]
    NotContained { member: String, target: String },
    #[error("frame is missing its {0} element")]
    MissingExtreme(&'static str),
    #[error("frame opens are not closed under {0}")]
    NotClosed(&'static str),
}

/// An open set of a [`FiniteFrame`], as a bitmask over the frame's points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct OpenSet(u64);

impl OpenSet {
    pub const EMPTY: OpenSet = OpenSet(0);

    pub fn from_bits(bits: u64) -> Self {
        OpenSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains_point(self, p: usize) -> bool {
        (self.0 >> p) & 1 == 1
    }

    pub fn is_subset_of(self, other: OpenSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: OpenSet) -> OpenSet {
        OpenSet(self.0 | other.0)
    }

    pub fn intersect(self, other: OpenSet) -> OpenSet {
        OpenSet(self.0 & other.0)
    }

    pub fn difference(self, other: OpenSet) -> OpenSet {
        OpenSet(self.0 & !other.0)
    }

    pub fn points(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..64).filter(move |p| (bits >> p) & 1 == 1)
    }
}

/// A finite partially ordered set with opaque string identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePoset {
    elements: Vec<String>,
    leq: Vec<bool>,
}

impl FinitePoset {
    /// Builds a poset from a full order matrix, validating reflexivity,
    /// transitivity, antisymmetry, and distinctness of identifiers.
    pub fn new(elements: Vec<String>, leq: Vec<bool>) -> Result<Self, OrderError> {
        let n = elements.len();
        assert_eq!(leq.len(), n * n, "order matrix must be {n}x{n}");
        check_distinct(&elements)?;
        for i in 0..n {
            if !leq[i * n + i] {
                return Err(OrderError::NotReflexive(elements[i].clone()));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if !leq[i * n + j] {
                    continue;
                }
                if i != j && leq[j * n + i] {
                    return Err(OrderError::NotAntisymmetric(
                        elements[i].clone(),
                        elements[j].clone(),
                    ));
                }
                for k in 0..n {
                    if leq[j * n + k] && !leq[i * n + k] {
                        return Err(OrderError::NotTransitive(
                            elements[i].clone(),
                            elements[j].clone(),
                            elements[k].clone(),
                        ));
                    }
                }
            }
        }
        Ok(FinitePoset { elements, leq })
    }

    /// Builds a poset from generating relations `a <= b`, taking the
    /// reflexive-transitive closure. Fails if the closure is not
    /// antisymmetric.
    pub fn from_relations<S: AsRef<str>>(
        elements: Vec<String>,
        relations: &[(S, S)],
    ) -> Result<Self, OrderError> {
        check_distinct(&elements)?;
        let n = elements.len();
        let mut leq = vec![false; n * n];
        for i in 0..n {
            leq[i * n + i] = true;
        }
        for (a, b) in relations {
            let i = index_of(&elements, a.as_ref())?;
            let j = index_of(&elements, b.as_ref())?;
            leq[i * n + j] = true;
        }
        transitive_close(&mut leq, n);
        FinitePoset::new(elements, leq)
    }

    pub fn empty() -> Self {
        FinitePoset {
            elements: Vec::new(),
            leq: Vec::new(),
        }
    }

    /// Discrete poset: no relations besides equality.
    pub fn discrete(elements: Vec<String>) -> Result<Self, OrderError> {
        let rels: [(&str, &str); 0] = [];
        FinitePoset::from_relations(elements, &rels)
    }

    /// Total order in the listed element order.
    pub fn chain(elements: Vec<String>) -> Result<Self, OrderError> {
        let rels: Vec<(String, String)> = elements
            .windows(2)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        FinitePoset::from_relations(elements, &rels)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &str {
        &self.elements[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.elements.iter().position(|e| e == id)
    }

    pub fn le(&self, i: usize, j: usize) -> bool {
        self.leq[i * self.elements.len() + j]
    }

    pub fn lt(&self, i: usize, j: usize) -> bool {
        i != j && self.le(i, j)
    }

    pub fn comparable(&self, i: usize, j: usize) -> bool {
        self.le(i, j) || self.le(j, i)
    }

    /// Elements with nothing strictly below them.
    pub fn minimal_elements(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| (0..self.len()).all(|j| !self.lt(j, i)))
            .collect()
    }

    /// True iff every element of the poset is bounded below by a member
    /// of `s0`.
    pub fn is_zero_coinitial(&self, s0: &BTreeSet<usize>) -> bool {
        (0..self.len()).all(|x| s0.iter().any(|&s| self.le(s, x)))
    }

    /// Identifier-level variant of [`Self::is_zero_coinitial`]; rejects
    /// unknown identifiers.
    pub fn is_zero_coinitial_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<bool, OrderError> {
        let mut s0 = BTreeSet::new();
        for id in ids {
            s0.insert(index_of(&self.elements, id.as_ref())?);
        }
        Ok(self.is_zero_coinitial(&s0))
    }

    /// Adjoins a fresh minimum below everything. Returns the cone and the
    /// index of the cone point.
    pub fn left_cone(&self) -> Result<(FinitePoset, usize), OrderError> {
        if self.elements.iter().any(|e| e == CONE_ID) {
            return Err(OrderError::ConeIdCollision(CONE_ID.to_string()));
        }
        let n = self.len();
        let mut elements = Vec::with_capacity(n + 1);
        elements.push(CONE_ID.to_string());
        elements.extend(self.elements.iter().cloned());
        let m = n + 1;
        let mut leq = vec![false; m * m];
        for j in 0..m {
            leq[j] = true; // cone point below everything
        }
        for i in 0..n {
            leq[(i + 1) * m + (i + 1)] = true;
            for j in 0..n {
                if self.le(i, j) {
                    leq[(i + 1) * m + (j + 1)] = true;
                }
            }
        }
        Ok((FinitePoset { elements, leq }, 0))
    }

    /// Full subposet on the given element indices (kept in the given
    /// order). Returns the subposet and the index map into `self`.
    pub fn subposet(&self, indices: &[usize]) -> (FinitePoset, Vec<usize>) {
        let elements: Vec<String> = indices.iter().map(|&i| self.elements[i].clone()).collect();
        let m = indices.len();
        let mut leq = vec![false; m * m];
        for a in 0..m {
            for b in 0..m {
                leq[a * m + b] = self.le(indices[a], indices[b]);
            }
        }
        (FinitePoset { elements, leq }, indices.to_vec())
    }

    /// The coslice `i ↓ P` of everything above `i`, with its inclusion.
    pub fn upward_slice(&self, i: usize) -> (FinitePoset, Vec<usize>) {
        let indices: Vec<usize> = (0..self.len()).filter(|&j| self.le(i, j)).collect();
        self.subposet(&indices)
    }

    /// A deterministic linear extension (Kahn's algorithm with smallest
    /// index first).
    pub fn linear_extension(&self) -> Vec<usize> {
        let n = self.len();
        let mut placed = vec![false; n];
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let next = (0..n)
                .find(|&i| !placed[i] && (0..n).all(|j| placed[j] || !self.lt(j, i)))
                .expect("acyclic order always has a minimal unplaced element");
            placed[next] = true;
            out.push(next);
        }
        out
    }

    /// Exhaustive isomorphism search; intended for desk-scale posets.
    pub fn is_isomorphic_to(&self, other: &FinitePoset) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let n = self.len();
        // signature pruning: (below-count, above-count) must match
        let sig = |p: &FinitePoset, i: usize| {
            let below = (0..n).filter(|&j| p.le(j, i)).count();
            let above = (0..n).filter(|&j| p.le(i, j)).count();
            (below, above)
        };
        let sig_a: Vec<_> = (0..n).map(|i| sig(self, i)).collect();
        let sig_b: Vec<_> = (0..n).map(|i| sig(other, i)).collect();
        {
            let mut sa = sig_a.clone();
            let mut sb = sig_b.clone();
            sa.sort_unstable();
            sb.sort_unstable();
            if sa != sb {
                return false;
            }
        }
        let mut assigned = vec![usize::MAX; n];
        let mut used = vec![false; n];
        fn go(
            a: &FinitePoset,
            b: &FinitePoset,
            sig_a: &[(usize, usize)],
            sig_b: &[(usize, usize)],
            assigned: &mut [usize],
            used: &mut [bool],
            i: usize,
        ) -> bool {
            let n = assigned.len();
            if i == n {
                return true;
            }
            for cand in 0..n {
                if used[cand] || sig_a[i] != sig_b[cand] {
                    continue;
                }
                let ok = (0..i).all(|j| {
                    a.le(i, j) == b.le(cand, assigned[j]) && a.le(j, i) == b.le(assigned[j], cand)
                });
                if ok {
                    assigned[i] = cand;
                    used[cand] = true;
                    if go(a, b, sig_a, sig_b, assigned, used, i + 1) {
                        return true;
                    }
                    used[cand] = false;
                }
            }
            false
        }
        go(self, other, &sig_a, &sig_b, &mut assigned, &mut used, 0)
    }
}

/// A monotone (order-preserving) map between finite posets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneMap {
    source: FinitePoset,
    target: FinitePoset,
    map: Vec<usize>,
}

impl MonotoneMap {
    pub fn new(
        source: FinitePoset,
        target: FinitePoset,
        map: Vec<usize>,
    ) -> Result<Self, OrderError> {
        if map.len() != source.len() {
            return Err(OrderError::BadAssignment {
                got: map.len(),
                want: source.len(),
            });
        }
        for &v in &map {
            if v >= target.len() {
                return Err(OrderError::UnknownElement(format!("#{v}")));
            }
        }
        for i in 0..source.len() {
            for j in 0..source.len() {
                if source.le(i, j) && !target.le(map[i], map[j]) {
                    return Err(OrderError::NotMonotone(
                        source.element(i).to_string(),
                        source.element(j).to_string(),
                    ));
                }
            }
        }
        Ok(MonotoneMap {
            source,
            target,
            map,
        })
    }

    /// Builds the map from identifier pairs `source element -> target
    /// element`.
    pub fn from_ids<S: AsRef<str>>(
        source: FinitePoset,
        target: FinitePoset,
        assignment: &[(S, S)],
    ) -> Result<Self, OrderError> {
        let mut map = vec![usize::MAX; source.len()];
        for (a, b) in assignment {
            let i = index_of(source.elements(), a.as_ref())?;
            let j = index_of(target.elements(), b.as_ref())?;
            map[i] = j;
        }
        if let Some(i) = map.iter().position(|&v| v == usize::MAX) {
            return Err(OrderError::UnknownElement(source.element(i).to_string()));
        }
        MonotoneMap::new(source, target, map)
    }

    pub fn identity(p: FinitePoset) -> Self {
        let map = (0..p.len()).collect();
        MonotoneMap {
            source: p.clone(),
            target: p,
            map,
        }
    }

    pub fn source(&self) -> &FinitePoset {
        &self.source
    }

    pub fn target(&self) -> &FinitePoset {
        &self.target
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.map
    }
}

/// A finite preorder: reflexive and transitive, antisymmetry not required.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePreorder {
    elements: Vec<String>,
    rel: Vec<bool>,
}

impl FinitePreorder {
    pub fn new(elements: Vec<String>, rel: Vec<bool>) -> Result<Self, OrderError> {
        let n = elements.len();
        assert_eq!(rel.len(), n * n, "relation matrix must be {n}x{n}");
        check_distinct(&elements)?;
        for i in 0..n {
            if !rel[i * n + i] {
                return Err(OrderError::NotReflexive(elements[i].clone()));
            }
            for j in 0..n {
                if !rel[i * n + j] {
                    continue;
                }
                for k in 0..n {
                    if rel[j * n + k] && !rel[i * n + k] {
                        return Err(OrderError::NotTransitive(
                            elements[i].clone(),
                            elements[j].clone(),
                            elements[k].clone(),
                        ));
                    }
                }
            }
        }
        Ok(FinitePreorder { elements, rel })
    }

    /// Reflexive-transitive closure of the given generating relations.
    pub fn from_relations<S: AsRef<str>>(
        elements: Vec<String>,
        relations: &[(S, S)],
    ) -> Result<Self, OrderError> {
        check_distinct(&elements)?;
        let n = elements.len();
        let mut rel = vec![false; n * n];
        for i in 0..n {
            rel[i * n + i] = true;
        }
        for (a, b) in relations {
            let i = index_of(&elements, a.as_ref())?;
            let j = index_of(&elements, b.as_ref())?;
            rel[i * n + j] = true;
        }
        transitive_close(&mut rel, n);
        Ok(FinitePreorder { elements, rel })
    }

    pub fn from_poset(p: &FinitePoset) -> Self {
        FinitePreorder {
            elements: p.elements.clone(),
            rel: p.leq.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.elements.iter().position(|e| e == id)
    }

    pub fn le(&self, i: usize, j: usize) -> bool {
        self.rel[i * self.elements.len() + j]
    }
}

/// Result of the posetal quotient of a preorder: the quotient poset plus
/// the surjection sending each element to its class index.
#[derive(Debug, Clone)]
pub struct PosetQuotient {
    pub poset: FinitePoset,
    pub class_of: Vec<usize>,
}

/// Identifies mutually related elements, producing a genuine poset.
/// Quotient classes are named after their lexicographically least member.
pub fn preorder_to_poset(q: &FinitePreorder) -> PosetQuotient {
    let n = q.len();
    let mut class_of = vec![usize::MAX; n];
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..n {
        if class_of[i] != usize::MAX {
            continue;
        }
        let c = reps.len();
        reps.push(i);
        for j in i..n {
            if q.le(i, j) && q.le(j, i) {
                class_of[j] = c;
            }
        }
    }
    let m = reps.len();
    let mut names: Vec<String> = Vec::with_capacity(m);
    for c in 0..m {
        let name = (0..n)
            .filter(|&i| class_of[i] == c)
            .map(|i| q.elements[i].as_str())
            .min()
            .expect("class is inhabited")
            .to_string();
        names.push(name);
    }
    let mut leq = vec![false; m * m];
    for a in 0..m {
        for b in 0..m {
            leq[a * m + b] = q.le(reps[a], reps[b]);
        }
    }
    let poset = FinitePoset::new(names, leq).expect("quotient of a preorder is a poset");
    PosetQuotient { poset, class_of }
}

/// Pushout of posets `P <- R -> Q` with its two canonical maps.
#[derive(Debug, Clone)]
pub struct PosetPushout {
    pub poset: FinitePoset,
    pub from_left: MonotoneMap,
    pub from_right: MonotoneMap,
}

/// Computes the pushout in posets: the preorder pushout of the underlying
/// relations followed by the posetal quotient.
pub fn poset_pushout(f: &MonotoneMap, g: &MonotoneMap) -> Result<PosetPushout, OrderError> {
    if f.source() != g.source() {
        return Err(OrderError::SourceMismatch);
    }
    let r = f.source();
    let p = f.target();
    let q = g.target();
    let np = p.len();
    let nq = q.len();
    let n = np + nq;
    // tagged disjoint union; `l:` and `r:` keep names collision-free
    let mut elements: Vec<String> = Vec::with_capacity(n);
    elements.extend(p.elements().iter().map(|e| format!("l:{e}")));
    elements.extend(q.elements().iter().map(|e| format!("r:{e}")));
    let mut rel = vec![false; n * n];
    for i in 0..n {
        rel[i * n + i] = true;
    }
    for i in 0..np {
        for j in 0..np {
            if p.le(i, j) {
                rel[i * n + j] = true;
            }
        }
    }
    for i in 0..nq {
        for j in 0..nq {
            if q.le(i, j) {
                rel[(np + i) * n + (np + j)] = true;
            }
        }
    }
    for x in 0..r.len() {
        let i = f.apply(x);
        let j = np + g.apply(x);
        rel[i * n + j] = true;
        rel[j * n + i] = true;
    }
    transitive_close(&mut rel, n);
    let pre = FinitePreorder::new(elements, rel)?;
    let PosetQuotient { poset, class_of } = preorder_to_poset(&pre);
    let from_left = MonotoneMap::new(p.clone(), poset.clone(), class_of[..np].to_vec())?;
    let from_right = MonotoneMap::new(q.clone(), poset.clone(), class_of[np..].to_vec())?;
    Ok(PosetPushout {
        poset,
        from_left,
        from_right,
    })
}

/// The frame of open sets of a finite space: a family of point subsets
/// containing top and bottom and closed under union and intersection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteFrame {
    points: Vec<String>,
    opens: Vec<OpenSet>,
}

const MAX_OPENS: usize = 4096;

impl FiniteFrame {
    /// Validates an explicitly given family of opens.
    pub fn new(points: Vec<String>, mut opens: Vec<OpenSet>) -> Result<Self, OrderError> {
        if points.len() > 64 {
            return Err(OrderError::TooManyPoints(points.len()));
        }
        check_distinct(&points)?;
        opens.sort_unstable_by_key(|o| (o.len(), o.bits()));
        opens.dedup();
        let top = full_mask(points.len());
        if !opens.contains(&OpenSet::EMPTY) {
            return Err(OrderError::MissingExtreme("bottom"));
        }
        if !opens.contains(&top) {
            return Err(OrderError::MissingExtreme("top"));
        }
        for a in &opens {
            if !a.is_subset_of(top) {
                return Err(OrderError::NotAnOpen(format!("{:#b}", a.bits())));
            }
            for b in &opens {
                if !opens.contains(&a.union(*b)) {
                    return Err(OrderError::NotClosed("union"));
                }
                if !opens.contains(&a.intersect(*b)) {
                    return Err(OrderError::NotClosed("intersection"));
                }
            }
        }
        Ok(FiniteFrame { points, opens })
    }

    /// Closes a family of generator opens under union and intersection and
    /// adjoins top and bottom.
    pub fn closure(points: Vec<String>, generators: &[OpenSet]) -> Result<Self, OrderError> {
        if points.len() > 64 {
            return Err(OrderError::TooManyPoints(points.len()));
        }
        check_distinct(&points)?;
        let top = full_mask(points.len());
        for g in generators {
            if !g.is_subset_of(top) {
                return Err(OrderError::NotAnOpen(format!("{:#b}", g.bits())));
            }
        }
        let mut set: BTreeSet<OpenSet> = generators.iter().copied().collect();
        set.insert(OpenSet::EMPTY);
        set.insert(top);
        loop {
            let snapshot: Vec<OpenSet> = set.iter().copied().collect();
            let before = set.len();
            for (i, a) in snapshot.iter().enumerate() {
                for b in &snapshot[i + 1..] {
                    set.insert(a.union(*b));
                    set.insert(a.intersect(*b));
                }
            }
            if set.len() > MAX_OPENS {
                return Err(OrderError::TooManyOpens(MAX_OPENS));
            }
            if set.len() == before {
                break;
            }
        }
        let mut opens: Vec<OpenSet> = set.into_iter().collect();
        opens.sort_unstable_by_key(|o| (o.len(), o.bits()));
        Ok(FiniteFrame { points, opens })
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn point_index(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p == name)
    }

    /// Opens in canonical order: by size, then by bitmask.
    pub fn opens(&self) -> &[OpenSet] {
        &self.opens
    }

    pub fn open_count(&self) -> usize {
        self.opens.len()
    }

    pub fn top(&self) -> OpenSet {
        full_mask(self.points.len())
    }

    pub fn bottom(&self) -> OpenSet {
        OpenSet::EMPTY
    }

    pub fn contains_open(&self, o: OpenSet) -> bool {
        self.opens.binary_search_by_key(&(o.len(), o.bits()), |x| (x.len(), x.bits())).is_ok()
    }

    pub fn open_index(&self, o: OpenSet) -> Option<usize> {
        self.opens
            .binary_search_by_key(&(o.len(), o.bits()), |x| (x.len(), x.bits()))
            .ok()
    }

    /// Canonical display name of an open: its sorted point list in braces.
    pub fn open_name(&self, o: OpenSet) -> String {
        let names: Vec<&str> = (0..self.points.len())
            .filter(|&p| o.contains_point(p))
            .map(|p| self.points[p].as_str())
            .collect();
        format!("{{{}}}", names.join(","))
    }

    /// Resolves a list of point names to an open set; the result must be
    /// an open of the frame.
    pub fn open_from_points<S: AsRef<str>>(&self, names: &[S]) -> Result<OpenSet, OrderError> {
        let mut bits = 0u64;
        for name in names {
            let p = self
                .point_index(name.as_ref())
                .ok_or_else(|| OrderError::UnknownElement(name.as_ref().to_string()))?;
            bits |= 1 << p;
        }
        let o = OpenSet::from_bits(bits);
        if !self.contains_open(o) {
            return Err(OrderError::NotAnOpen(self.open_name(o)));
        }
        Ok(o)
    }

    /// The inclusion order on opens as a poset, with canonical names.
    pub fn as_poset(&self) -> FinitePoset {
        let names: Vec<String> = self.opens.iter().map(|&o| self.open_name(o)).collect();
        let n = names.len();
        let mut leq = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                leq[i * n + j] = self.opens[i].is_subset_of(self.opens[j]);
            }
        }
        FinitePoset::new(names, leq).expect("inclusion order is a partial order")
    }

    /// True iff the union of the family equals `v`. Family members must
    /// be contained in `v`.
    pub fn covers(&self, family: &[OpenSet], v: OpenSet) -> Result<bool, OrderError> {
        for &m in family {
            if !m.is_subset_of(v) {
                return Err(OrderError::NotContained {
                    member: self.open_name(m),
                    target: self.open_name(v),
                });
            }
        }
        let union = family
            .iter()
            .fold(OpenSet::EMPTY, |acc, &m| acc.union(m));
        Ok(union == v)
    }
}

impl fmt::Display for FiniteFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "frame on {{{}}} with {} opens",
            self.points.join(","),
            self.opens.len()
        )
    }
}

/// The Alexandrov frame of a finite preorder: points are the elements,
/// opens are the up-closed subsets.
pub fn alexandrov_frame(p: &FinitePreorder) -> Result<FiniteFrame, OrderError> {
    let n = p.len();
    if n > 20 {
        // 2^n candidate subsets; anything larger is out of desk scale
        return Err(OrderError::TooManyPoints(n));
    }
    let mut opens = Vec::new();
    for bits in 0u64..(1u64 << n) {
        let up_closed = (0..n).all(|i| {
            (bits >> i) & 1 == 0 || (0..n).all(|j| !p.le(i, j) || (bits >> j) & 1 == 1)
        });
        if up_closed {
            opens.push(OpenSet::from_bits(bits));
        }
    }
    FiniteFrame::new(p.elements().to_vec(), opens)
}

/// The meet `⋂_{k:K} U(α(k))` of a diagram of opens over a finite shape.
/// For empty `K` this is the top of the frame. `u` must land in the
/// frame's inclusion poset and `alpha` in `u`'s source.
pub fn meet_over(
    frame: &FiniteFrame,
    u: &MonotoneMap,
    alpha: &MonotoneMap,
) -> Result<OpenSet, OrderError> {
    if u.target() != &frame.as_poset() {
        return Err(OrderError::TargetMismatch);
    }
    if alpha.target() != u.source() {
        return Err(OrderError::TargetMismatch);
    }
    let mut meet = frame.top();
    for k in 0..alpha.source().len() {
        let open = frame.opens()[u.apply(alpha.apply(k))];
        meet = meet.intersect(open);
    }
    Ok(meet)
}

fn full_mask(n: usize) -> OpenSet {
    if n == 0 {
        OpenSet::EMPTY
    } else {
        OpenSet::from_bits(u64::MAX >> (64 - n))
    }
}

fn check_distinct(ids: &[String]) -> Result<(), OrderError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(OrderError::DuplicateElement(id.clone()));
        }
    }
    Ok(())
}

fn index_of(ids: &[String], id: &str) -> Result<usize, OrderError> {
    ids.iter()
        .position(|e| e == id)
        .ok_or_else(|| OrderError::UnknownElement(id.to_string()))
}

fn transitive_close(rel: &mut [bool], n: usize) {
    for k in 0..n {
        for i in 0..n {
            if rel[i * n + k] {
                for j in 0..n {
                    if rel[k * n + j] {
                        rel[i * n + j] = true;
                    }
                }
            }
        }
    }
}

/// Enumerates all monotone maps `src -> tgt` extending the partial
/// assignment `fixed`, invoking `visit` on each complete assignment.
/// Elements are filled along a fixed linear extension with candidates in
/// increasing index order, so the enumeration order is deterministic.
pub fn for_each_monotone_extension<F: FnMut(&[usize])>(
    src: &FinitePoset,
    tgt: &FinitePoset,
    fixed: &[Option<usize>],
    visit: &mut F,
) {
    assert_eq!(fixed.len(), src.len());
    let order = src.linear_extension();
    let mut assign: Vec<Option<usize>> = fixed.to_vec();
    fn go<F: FnMut(&[usize])>(
        src: &FinitePoset,
        tgt: &FinitePoset,
        order: &[usize],
        pos: usize,
        assign: &mut Vec<Option<usize>>,
        visit: &mut F,
    ) {
        if pos == order.len() {
            let complete: Vec<usize> = assign.iter().map(|a| a.unwrap()).collect();
            visit(&complete);
            return;
        }
        let x = order[pos];
        if let Some(v) = assign[x] {
            if candidate_ok(src, tgt, assign, x, v) {
                go(src, tgt, order, pos + 1, assign, visit);
            }
            return;
        }
        for v in 0..tgt.len() {
            if candidate_ok(src, tgt, assign, x, v) {
                assign[x] = Some(v);
                go(src, tgt, order, pos + 1, assign, visit);
                assign[x] = None;
            }
        }
    }
    fn candidate_ok(
        src: &FinitePoset,
        tgt: &FinitePoset,
        assign: &[Option<usize>],
        x: usize,
        v: usize,
    ) -> bool {
        for y in 0..src.len() {
            if let Some(w) = assign[y] {
                if y == x {
                    continue;
                }
                if src.le(y, x) && !tgt.le(w, v) {
                    return false;
                }
                if src.le(x, y) && !tgt.le(v, w) {
                    return false;
                }
            }
        }
        true
    }
    go(src, tgt, &order, 0, &mut assign, visit);
}

/// The first monotone extension of `fixed` in enumeration order, if any.
pub fn first_monotone_extension(
    src: &FinitePoset,
    tgt: &FinitePoset,
    fixed: &[Option<usize>],
) -> Option<Vec<usize>> {
    // same traversal as the full enumeration, with early exit
    assert_eq!(fixed.len(), src.len());
    let order = src.linear_extension();
    let mut assign: Vec<Option<usize>> = fixed.to_vec();
    fn go(
        src: &FinitePoset,
        tgt: &FinitePoset,
        order: &[usize],
        pos: usize,
        assign: &mut Vec<Option<usize>>,
    ) -> Result<(), Vec<usize>> {
        if pos == order.len() {
            return Err(assign.iter().map(|a| a.unwrap()).collect());
        }
        let x = order[pos];
        if let Some(v) = assign[x] {
            if ok(src, tgt, assign, x, v) {
                go(src, tgt, order, pos + 1, assign)?;
            }
            return Ok(());
        }
        for v in 0..tgt.len() {
            if ok(src, tgt, assign, x, v) {
                assign[x] = Some(v);
                let r = go(src, tgt, order, pos + 1, assign);
                assign[x] = None;
                r?;
            }
        }
        Ok(())
    }
    fn ok(
        src: &FinitePoset,
        tgt: &FinitePoset,
        assign: &[Option<usize>],
        x: usize,
        v: usize,
    ) -> bool {
        for y in 0..src.len() {
            if let Some(w) = assign[y] {
                if y == x {
                    continue;
                }
                if src.le(y, x) && !tgt.le(w, v) {
                    return false;
                }
                if src.le(x, y) && !tgt.le(v, w) {
                    return false;
                }
            }
        }
        true
    }
    go(src, tgt, &order, 0, &mut assign).err()
}

/// True iff at least one monotone extension of `fixed` exists.
pub fn monotone_extension_exists(
    src: &FinitePoset,
    tgt: &FinitePoset,
    fixed: &[Option<usize>],
) -> bool {
    first_monotone_extension(src, tgt, fixed).is_some()
}
