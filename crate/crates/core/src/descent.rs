//! Set-valued sheaves on finite locales and descent verification.
//!
//! Compatibility orientation (fixed here for the whole module): the
//! diagram assignment is monotone, so `i <= j` gives `U_i ⊆ U_j`, lower
//! bounds carry smaller opens, and a family is compatible when each
//! section restricts downward to the section at every smaller index.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::hypercover::LabeledSSet;
use crate::lifting::OpenDiagram;
use crate::order::{alexandrov_frame, FinitePreorder, OpenSet, OrderError};
use crate::semirep::{SemirepError, SetPresheaf};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DescentError {
    #[error("projection is not continuous: `{0}` maps above `{1}` inconsistently")]
    NotContinuous(String, String),
    #[error("projection table has {got} entries for {want} total-space points")]
    BadProjection { got: usize, want: usize },
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Semirep(#[from] SemirepError),
}

/// A set-valued presheaf together with a flag recording that the sheaf
/// condition has been verified.
#[derive(Debug, Clone)]
pub struct SetSheaf {
    presheaf: SetPresheaf,
    sheaf_checked: bool,
}

impl SetSheaf {
    /// Wraps a presheaf without running the sheaf checker.
    pub fn unchecked(presheaf: SetPresheaf) -> Self {
        SetSheaf {
            presheaf,
            sheaf_checked: false,
        }
    }

    /// Wraps a presheaf and records the checker's verdict.
    pub fn verified(presheaf: SetPresheaf) -> Self {
        let ok = is_sheaf(&presheaf);
        SetSheaf {
            presheaf,
            sheaf_checked: ok,
        }
    }

    pub fn presheaf(&self) -> &SetPresheaf {
        &self.presheaf
    }

    /// True iff the sheaf condition has been checked and holds.
    pub fn sheaf_checked(&self) -> bool {
        self.sheaf_checked
    }
}

/// The sheaf condition, checked exhaustively: for every open `V` and
/// every covering family of subopens, the sections over `V` must biject
/// with the compatible families. Covering families are enumerated as
/// antichains; a general family and the antichain of its maximal
/// members generate the same sieve and have the same compatible tuples,
/// so nothing is lost. The empty cover of the empty open is included,
/// forcing `F(∅)` to be a singleton.
pub fn is_sheaf(f: &SetPresheaf) -> bool {
    let frame = f.frame();
    assert!(
        frame.open_count() <= 64,
        "sheaf checking is exponential in the number of opens"
    );
    let opens = frame.opens().to_vec();
    for (v_idx, &v) in opens.iter().enumerate() {
        // subopens of v, largest first so antichain pruning bites early
        let mut sub: Vec<usize> = (0..opens.len())
            .filter(|&w| opens[w].is_subset_of(v))
            .collect();
        sub.sort_by_key(|&w| std::cmp::Reverse(opens[w].len()));
        let mut family: Vec<usize> = Vec::new();
        if !sheaf_condition_over_antichains(f, v_idx, v, &sub, 0, OpenSet::EMPTY, &mut family) {
            return false;
        }
    }
    true
}

/// Walks the antichains of the subopens of `v` whose union is `v`,
/// returning false as soon as one violates the equalizer condition.
fn sheaf_condition_over_antichains(
    f: &SetPresheaf,
    v_idx: usize,
    v: OpenSet,
    sub: &[usize],
    pos: usize,
    union: OpenSet,
    family: &mut Vec<usize>,
) -> bool {
    if union == v {
        if !equalizer_condition(f, v_idx, family) {
            return false;
        }
        // extending an already-covering antichain only repeats work
    }
    if pos == sub.len() {
        return true;
    }
    // any chance of completing the union?
    let mut reach = union;
    for &w in &sub[pos..] {
        reach = reach.union(f.frame().opens()[w]);
    }
    if !v.is_subset_of(reach) {
        return true;
    }
    // skip sub[pos]
    if !sheaf_condition_over_antichains(f, v_idx, v, sub, pos + 1, union, family) {
        return false;
    }
    // take sub[pos] if it stays an antichain
    let w = sub[pos];
    let wo = f.frame().opens()[w];
    let antichain = family.iter().all(|&x| {
        let xo = f.frame().opens()[x];
        !xo.is_subset_of(wo) && !wo.is_subset_of(xo)
    });
    if antichain {
        family.push(w);
        let ok =
            sheaf_condition_over_antichains(f, v_idx, v, sub, pos + 1, union.union(wo), family);
        family.pop();
        if !ok {
            return false;
        }
    }
    true
}

/// Compares `F(v)` with the compatible tuples over the family.
fn equalizer_condition(f: &SetPresheaf, v_idx: usize, family: &[usize]) -> bool {
    let tuples = compatible_tuples(f, family);
    let sections = f.sections(v_idx).len();
    if tuples.len() != sections {
        return false;
    }
    // the comparison map must be a bijection onto the tuples
    let mut seen = std::collections::BTreeSet::new();
    for e in 0..sections {
        let image: Vec<usize> = family
            .iter()
            .map(|&w| f.restrict(v_idx, w, e))
            .collect();
        if !tuples.contains(&image) || !seen.insert(image) {
            return false;
        }
    }
    true
}

/// All tuples `(s_w)` over the family agreeing on pairwise meets,
/// in lexicographic order.
fn compatible_tuples(f: &SetPresheaf, family: &[usize]) -> Vec<Vec<usize>> {
    let frame = f.frame();
    let mut out = Vec::new();
    let mut tuple: Vec<usize> = Vec::new();
    fn go(
        f: &SetPresheaf,
        family: &[usize],
        meets: &dyn Fn(usize, usize) -> usize,
        tuple: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let pos = tuple.len();
        if pos == family.len() {
            out.push(tuple.clone());
            return;
        }
        'next: for s in 0..f.sections(family[pos]).len() {
            for (prev, &w) in family[..pos].iter().enumerate() {
                let m = meets(w, family[pos]);
                if f.restrict(w, m, tuple[prev]) != f.restrict(family[pos], m, s) {
                    continue 'next;
                }
            }
            tuple.push(s);
            go(f, family, meets, tuple, out);
            tuple.pop();
        }
    }
    let meets = |a: usize, b: usize| -> usize {
        frame
            .open_index(frame.opens()[a].intersect(frame.opens()[b]))
            .expect("frames are meet-closed")
    };
    go(f, family, &meets, &mut tuple, &mut out);
    out
}

/// The sheaf of continuous sections of a map of finite Alexandrov
/// spaces `p: E → X`. Continuity for the specialization preorders is
/// exactly monotonicity, which is validated. Sections over an open are
/// named by their value tuples in point order.
pub fn sections_sheaf(
    total: &FinitePreorder,
    base: &FinitePreorder,
    projection: &[usize],
) -> Result<SetSheaf, DescentError> {
    if projection.len() != total.len() {
        return Err(DescentError::BadProjection {
            got: projection.len(),
            want: total.len(),
        });
    }
    for a in 0..total.len() {
        for b in 0..total.len() {
            if total.le(a, b) && !base.le(projection[a], projection[b]) {
                return Err(DescentError::NotContinuous(
                    total.elements()[a].clone(),
                    total.elements()[b].clone(),
                ));
            }
        }
    }
    let frame = alexandrov_frame(base)?;
    let fibers: Vec<Vec<usize>> = (0..base.len())
        .map(|x| (0..total.len()).filter(|&e| projection[e] == x).collect())
        .collect();

    // sections over each open, with a name lookup for restrictions
    let mut sections: Vec<Vec<String>> = Vec::with_capacity(frame.open_count());
    let mut lookup: Vec<HashMap<String, usize>> = Vec::with_capacity(frame.open_count());
    let mut values: Vec<Vec<Vec<usize>>> = Vec::with_capacity(frame.open_count());
    for &open in frame.opens() {
        let points: Vec<usize> = open.points().filter(|&p| p < base.len()).collect();
        let mut level_sections = Vec::new();
        let mut assignment: Vec<usize> = Vec::new();
        enumerate_sections(
            total,
            base,
            &fibers,
            &points,
            &mut assignment,
            &mut level_sections,
        );
        let names: Vec<String> = level_sections
            .iter()
            .map(|s| section_name(total, &points, s))
            .collect();
        let map = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        sections.push(names);
        lookup.push(map);
        values.push(level_sections);
    }

    let mut restrictions = HashMap::new();
    for (from, &wf) in frame.opens().iter().enumerate() {
        let from_points: Vec<usize> = wf.points().filter(|&p| p < base.len()).collect();
        for (to, &wt) in frame.opens().iter().enumerate() {
            if !wt.is_subset_of(wf) {
                continue;
            }
            let keep: Vec<usize> = from_points
                .iter()
                .enumerate()
                .filter(|&(_, &p)| wt.contains_point(p))
                .map(|(slot, _)| slot)
                .collect();
            let to_points: Vec<usize> = wt.points().filter(|&p| p < base.len()).collect();
            let table: Vec<usize> = values[from]
                .iter()
                .map(|s| {
                    let restricted: Vec<usize> = keep.iter().map(|&slot| s[slot]).collect();
                    lookup[to][&section_name(total, &to_points, &restricted)]
                })
                .collect();
            restrictions.insert((from, to), table);
        }
    }
    let presheaf = SetPresheaf::new(frame, sections, restrictions)?;
    Ok(SetSheaf::unchecked(presheaf))
}

fn enumerate_sections(
    total: &FinitePreorder,
    base: &FinitePreorder,
    fibers: &[Vec<usize>],
    points: &[usize],
    assignment: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let pos = assignment.len();
    if pos == points.len() {
        out.push(assignment.clone());
        return;
    }
    // a continuous section is a monotone choice within the fibers
    'next: for &e in &fibers[points[pos]] {
        for prev in 0..pos {
            let pa = points[prev];
            let pb = points[pos];
            let ea = assignment[prev];
            if base.le(pa, pb) && !total.le(ea, e) {
                continue 'next;
            }
            if base.le(pb, pa) && !total.le(e, ea) {
                continue 'next;
            }
        }
        assignment.push(e);
        enumerate_sections(total, base, fibers, points, assignment, out);
        assignment.pop();
    }
}

fn section_name(total: &FinitePreorder, points: &[usize], values: &[usize]) -> String {
    debug_assert_eq!(points.len(), values.len());
    let parts: Vec<&str> = values
        .iter()
        .map(|&e| total.elements()[e].as_str())
        .collect();
    format!("({})", parts.join(","))
}

/// The limit of a presheaf over an open diagram: compatible families of
/// sections, together with the comparison map from the sections over
/// the diagram target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramLimit {
    /// Compatible families in lexicographic order; entry `i` of a family
    /// is a section index in `F(U_i)`.
    pub families: Vec<Vec<usize>>,
    /// For each section of `F(target)`, the index of its family.
    pub comparison: Vec<usize>,
}

/// Computes the limit set `{(s_i) : s_j|U_i = s_i for i <= j}` and the
/// comparison map `F(target) → limit`.
pub fn limit_over_diagram(f: &SetPresheaf, d: &OpenDiagram) -> DiagramLimit {
    let frame = f.frame();
    let open_idx: Vec<usize> = (0..d.index().len())
        .map(|i| frame.open_index(d.open(i)).expect("diagram opens are opens"))
        .collect();
    let mut families = Vec::new();
    let mut family: Vec<usize> = Vec::new();
    collect_families(f, d, &open_idx, &mut family, &mut families);
    let family_pos: BTreeMap<&[usize], usize> = families
        .iter()
        .enumerate()
        .map(|(i, fam)| (fam.as_slice(), i))
        .collect();
    let target_idx = frame.open_index(d.target()).expect("target is an open");
    let comparison = (0..f.sections(target_idx).len())
        .map(|t| {
            let image: Vec<usize> = open_idx
                .iter()
                .map(|&w| f.restrict(target_idx, w, t))
                .collect();
            *family_pos
                .get(image.as_slice())
                .expect("restrictions of a global section are compatible")
        })
        .collect();
    DiagramLimit {
        families,
        comparison,
    }
}

fn collect_families(
    f: &SetPresheaf,
    d: &OpenDiagram,
    open_idx: &[usize],
    family: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let pos = family.len();
    if pos == open_idx.len() {
        out.push(family.clone());
        return;
    }
    'next: for s in 0..f.sections(open_idx[pos]).len() {
        for prev in 0..pos {
            // i <= j means U_i ⊆ U_j: the bigger section restricts down
            if d.index().le(prev, pos) && f.restrict(open_idx[pos], open_idx[prev], s) != family[prev]
            {
                continue 'next;
            }
            if d.index().le(pos, prev) && f.restrict(open_idx[prev], open_idx[pos], family[prev]) != s
            {
                continue 'next;
            }
        }
        family.push(s);
        collect_families(f, d, open_idx, family, out);
        family.pop();
    }
}

/// Why a descent check failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DescentWitness {
    /// Two distinct global sections with the same restrictions.
    NotInjective { first: String, second: String },
    /// A compatible family hit by no global section.
    NotSurjective { family: Vec<(String, String)> },
}

/// Outcome of a descent check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescentVerdict {
    pub pass: bool,
    pub witness: Option<DescentWitness>,
}

/// Descent along a diagram: the comparison map from sections over the
/// target to the limit over the diagram must be a bijection.
pub fn check_descent(f: &SetSheaf, d: &OpenDiagram) -> DescentVerdict {
    let presheaf = f.presheaf();
    let frame = presheaf.frame();
    let limit = limit_over_diagram(presheaf, d);
    let target_idx = frame.open_index(d.target()).expect("target is an open");
    let target_sections = presheaf.sections(target_idx);

    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    for (t, &fam) in limit.comparison.iter().enumerate() {
        if let Some(&first) = seen.get(&fam) {
            return DescentVerdict {
                pass: false,
                witness: Some(DescentWitness::NotInjective {
                    first: target_sections[first].clone(),
                    second: target_sections[t].clone(),
                }),
            };
        }
        seen.insert(fam, t);
    }
    if seen.len() != limit.families.len() {
        let missing = (0..limit.families.len())
            .find(|i| !seen.contains_key(i))
            .expect("some family is not hit");
        let fam = &limit.families[missing];
        let open_idx: Vec<usize> = (0..d.index().len())
            .map(|i| frame.open_index(d.open(i)).expect("diagram opens are opens"))
            .collect();
        let described = fam
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                (
                    d.index().element(i).to_string(),
                    presheaf.sections(open_idx[i])[s].clone(),
                )
            })
            .collect();
        return DescentVerdict {
            pass: false,
            witness: Some(DescentWitness::NotSurjective { family: described }),
        };
    }
    DescentVerdict {
        pass: true,
        witness: None,
    }
}

/// The limit computed over a labeled refinement at simplicial levels 0
/// and 1: families over the vertices, compatible along the edges. For a
/// nerve refinement this is the set-level shadow of cofinality and has
/// the same cardinality as [`limit_over_diagram`].
pub fn limit_over_refinement(f: &SetPresheaf, h: &LabeledSSet) -> usize {
    let frame = f.frame();
    let shape = h.shape();
    let vertex_open: Vec<usize> = (0..shape.size(0) as u32)
        .map(|c| frame.open_index(h.label(0, c)).expect("labels are opens"))
        .collect();
    let edge_open: Vec<usize> = (0..shape.size(1) as u32)
        .map(|c| frame.open_index(h.label(1, c)).expect("labels are opens"))
        .collect();
    let mut count = 0usize;
    let mut assignment: Vec<usize> = Vec::new();
    fn go(
        f: &SetPresheaf,
        shape: &crate::simplicial::TruncatedSSet,
        vertex_open: &[usize],
        edge_open: &[usize],
        assignment: &mut Vec<usize>,
        count: &mut usize,
    ) {
        let pos = assignment.len();
        if pos == vertex_open.len() {
            *count += 1;
            return;
        }
        'next: for s in 0..f.sections(vertex_open[pos]).len() {
            // edge compatibility against already-assigned vertices
            for e in 0..shape.size(1) as u32 {
                let v0 = shape.face(1, 0, e) as usize;
                let v1 = shape.face(1, 1, e) as usize;
                let (a, b) = (v1, v0); // d1 is the source vertex, d0 the target
                let (known, new) = if a == pos && b < pos {
                    (b, a)
                } else if b == pos && a < pos {
                    (a, b)
                } else if a == pos && b == pos {
                    (pos, pos)
                } else {
                    continue;
                };
                let sa = if known == pos { s } else { assignment[known] };
                let sb = if new == pos { s } else { assignment[new] };
                let eo = edge_open[e as usize];
                if f.restrict(vertex_open[known], eo, sa) != f.restrict(vertex_open[new], eo, sb) {
                    continue 'next;
                }
            }
            assignment.push(s);
            go(f, shape, vertex_open, edge_open, assignment, count);
            assignment.pop();
        }
    }
    go(
        f,
        shape,
        &vertex_open,
        &edge_open,
        &mut assignment,
        &mut count,
    );
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::{check_atlas, AtlasMode};
    use crate::nerve::refine_diagram;
    use crate::order::{FiniteFrame, FinitePoset};

    fn preorder(elems: &[&str], rels: &[(&str, &str)]) -> FinitePreorder {
        FinitePreorder::from_relations(elems.iter().map(|s| s.to_string()).collect(), rels)
            .unwrap()
    }

    /// Three-point line space: {2} is the minimal open, U = {1,2} and
    /// V = {2,3} are open (opens are up-sets of the specialization order).
    fn line_space() -> FinitePreorder {
        preorder(&["2", "1", "3"], &[("1", "2"), ("3", "2")])
    }

    fn line_frame() -> FiniteFrame {
        alexandrov_frame(&line_space()).unwrap()
    }

    fn basic_atlas(frame: &FiniteFrame) -> OpenDiagram {
        let u = frame.open_from_points(&["1", "2"]).unwrap();
        let v = frame.open_from_points(&["2", "3"]).unwrap();
        let index = FinitePoset::from_relations(
            vec!["uv".into(), "u".into(), "v".into()],
            &[("uv", "u"), ("uv", "v")],
        )
        .unwrap();
        OpenDiagram::new(
            index,
            frame.clone(),
            vec![u.intersect(v), u, v],
            frame.top(),
        )
        .unwrap()
    }

    /// The sheaf of sections of the fold map X ⊔ X → X.
    fn fold_sheaf(base: &FinitePreorder) -> SetSheaf {
        let n = base.len();
        let mut elems: Vec<String> = Vec::new();
        let mut rels: Vec<(String, String)> = Vec::new();
        for copy in 0..2 {
            for e in base.elements() {
                elems.push(format!("{e}#{copy}"));
            }
            for a in 0..n {
                for b in 0..n {
                    if base.le(a, b) {
                        rels.push((
                            format!("{}#{copy}", base.elements()[a]),
                            format!("{}#{copy}", base.elements()[b]),
                        ));
                    }
                }
            }
        }
        let total = FinitePreorder::from_relations(elems, &rels).unwrap();
        let projection: Vec<usize> = (0..2 * n).map(|e| e % n).collect();
        sections_sheaf(&total, base, &projection).unwrap()
    }

    #[test]
    fn empty_open_needs_singleton() {
        // F(∅) with 2 elements violates the empty-cover condition
        let point = preorder(&["p"], &[]);
        let frame = alexandrov_frame(&point).unwrap();
        let sections = vec![vec!["x".into(), "y".into()], vec!["s".into()]];
        let mut restrictions = HashMap::new();
        restrictions.insert((0, 0), vec![0, 1]);
        restrictions.insert((1, 1), vec![0]);
        restrictions.insert((1, 0), vec![0]);
        let f = SetPresheaf::new(frame, sections, restrictions).unwrap();
        assert!(!is_sheaf(&f));
    }

    #[test]
    fn sections_sheaves_are_sheaves() {
        for base in [
            preorder(&["p"], &[]),
            preorder(&["a", "b"], &[]),
            line_space(),
        ] {
            // identity bundle: singleton sections everywhere
            let n = base.len();
            let identity = sections_sheaf(&base, &base, &(0..n).collect::<Vec<_>>()).unwrap();
            let frame = identity.presheaf().frame().clone();
            for w in 0..frame.open_count() {
                assert_eq!(identity.presheaf().sections(w).len(), 1);
            }
            assert!(is_sheaf(identity.presheaf()));

            let fold = fold_sheaf(&base);
            assert!(is_sheaf(fold.presheaf()));
        }
    }

    #[test]
    fn fold_sheaf_counts_components() {
        // |F(V)| = 2^(number of connected components of V)
        let base = preorder(&["a", "b"], &[]);
        let fold = fold_sheaf(&base);
        let frame = fold.presheaf().frame();
        let both = frame.top();
        assert_eq!(fold.presheaf().sections_at(both).len(), 4);
        let single = frame.open_from_points(&["a"]).unwrap();
        assert_eq!(fold.presheaf().sections_at(single).len(), 2);
        assert_eq!(fold.presheaf().sections_at(frame.bottom()).len(), 1);

        // connected space: two global sections
        let fold = fold_sheaf(&line_space());
        let frame = fold.presheaf().frame();
        assert_eq!(fold.presheaf().sections_at(frame.top()).len(), 2);
    }

    #[test]
    fn empty_fiber_kills_sections() {
        let base = preorder(&["a", "b"], &[]);
        let total = preorder(&["a0"], &[]);
        let sheaf = sections_sheaf(&total, &base, &[0]).unwrap();
        let frame = sheaf.presheaf().frame();
        // any open containing b has no sections
        assert_eq!(sheaf.presheaf().sections_at(frame.top()).len(), 0);
        let b_only = frame.open_from_points(&["b"]).unwrap();
        assert_eq!(sheaf.presheaf().sections_at(b_only).len(), 0);
        let a_only = frame.open_from_points(&["a"]).unwrap();
        assert_eq!(sheaf.presheaf().sections_at(a_only).len(), 1);
    }

    #[test]
    fn constant_presheaf_on_disconnected_open_is_not_a_sheaf() {
        // constant 2-element presheaf on the discrete 2-point space
        let base = preorder(&["a", "b"], &[]);
        let frame = alexandrov_frame(&base).unwrap();
        let sections: Vec<Vec<String>> = (0..frame.open_count())
            .map(|_| vec!["x".into(), "y".into()])
            .collect();
        let mut restrictions = HashMap::new();
        for from in 0..frame.open_count() {
            for to in 0..frame.open_count() {
                if frame.opens()[to].is_subset_of(frame.opens()[from]) {
                    restrictions.insert((from, to), vec![0, 1]);
                }
            }
        }
        let f = SetPresheaf::new(frame, sections, restrictions).unwrap();
        assert!(!is_sheaf(&f));
    }

    #[test]
    fn limit_over_singleton_is_identity() {
        let sheaf = fold_sheaf(&line_space());
        let frame = sheaf.presheaf().frame().clone();
        let index = FinitePoset::discrete(vec!["v".into()]).unwrap();
        let d = OpenDiagram::new(index, frame.clone(), vec![frame.top()], frame.top()).unwrap();
        let limit = limit_over_diagram(sheaf.presheaf(), &d);
        assert_eq!(limit.families.len(), 2);
        assert_eq!(limit.comparison, vec![0, 1]);
    }

    #[test]
    fn limit_over_cospan_is_pullback() {
        let sheaf = fold_sheaf(&line_space());
        let frame = sheaf.presheaf().frame().clone();
        let d = basic_atlas(&frame);
        let limit = limit_over_diagram(sheaf.presheaf(), &d);
        // the basic atlas of a connected space glues to 2 sections
        assert_eq!(limit.families.len(), 2);
        let verdict = check_descent(&sheaf, &d);
        assert!(verdict.pass);
    }

    #[test]
    fn discrete_non_atlas_fails_descent() {
        let sheaf = fold_sheaf(&line_space());
        let frame = sheaf.presheaf().frame().clone();
        let u = frame.open_from_points(&["1", "2"]).unwrap();
        let v = frame.open_from_points(&["2", "3"]).unwrap();
        let index = FinitePoset::discrete(vec!["u".into(), "v".into()]).unwrap();
        let d = OpenDiagram::new(index, frame.clone(), vec![u, v], frame.top()).unwrap();
        assert!(!check_atlas(&d, AtlasMode::Basic).pass);
        let limit = limit_over_diagram(sheaf.presheaf(), &d);
        assert_eq!(limit.families.len(), 4);
        assert_eq!(sheaf.presheaf().sections_at(frame.top()).len(), 2);
        let verdict = check_descent(&sheaf, &d);
        assert!(!verdict.pass);
        assert!(matches!(
            verdict.witness,
            Some(DescentWitness::NotSurjective { .. })
        ));
    }

    #[test]
    fn non_sheaf_fails_surjectivity_on_the_basic_atlas() {
        // F(X) = 1 but F(U), F(V) both 2 with collapsing restrictions
        let frame = line_frame();
        let u = frame.open_from_points(&["1", "2"]).unwrap();
        let v = frame.open_from_points(&["2", "3"]).unwrap();
        let sections: Vec<Vec<String>> = frame
            .opens()
            .iter()
            .map(|&w| {
                if w == u || w == v {
                    vec!["x".into(), "y".into()]
                } else {
                    vec!["z".into()]
                }
            })
            .collect();
        let mut restrictions = HashMap::new();
        for from in 0..frame.open_count() {
            for to in 0..frame.open_count() {
                if !frame.opens()[to].is_subset_of(frame.opens()[from]) {
                    continue;
                }
                let table = if from == to {
                    (0..sections[from].len()).collect()
                } else {
                    vec![0; sections[from].len()]
                };
                restrictions.insert((from, to), table);
            }
        }
        let f = SetPresheaf::new(frame.clone(), sections, restrictions).unwrap();
        assert!(!is_sheaf(&f));
        let d = basic_atlas(&frame);
        let verdict = check_descent(&SetSheaf::unchecked(f), &d);
        assert!(!verdict.pass);
        assert!(matches!(
            verdict.witness,
            Some(DescentWitness::NotSurjective { .. })
        ));
    }

    #[test]
    fn injectivity_failures_are_reported() {
        // F(X) = 2 collapsing to singletons below
        let frame = line_frame();
        let top_idx = frame.open_index(frame.top()).unwrap();
        let sections: Vec<Vec<String>> = (0..frame.open_count())
            .map(|w| {
                if w == top_idx {
                    vec!["x".into(), "y".into()]
                } else {
                    vec!["z".into()]
                }
            })
            .collect();
        let mut restrictions = HashMap::new();
        for from in 0..frame.open_count() {
            for to in 0..frame.open_count() {
                if !frame.opens()[to].is_subset_of(frame.opens()[from]) {
                    continue;
                }
                let table = if from == to {
                    (0..sections[from].len()).collect()
                } else {
                    vec![0; sections[from].len()]
                };
                restrictions.insert((from, to), table);
            }
        }
        let f = SetPresheaf::new(frame.clone(), sections, restrictions).unwrap();
        let d = basic_atlas(&frame);
        let verdict = check_descent(&SetSheaf::unchecked(f), &d);
        assert!(!verdict.pass);
        assert!(matches!(
            verdict.witness,
            Some(DescentWitness::NotInjective { .. })
        ));
    }

    #[test]
    fn refinement_limit_matches_diagram_limit() {
        let sheaf = fold_sheaf(&line_space());
        let frame = sheaf.presheaf().frame().clone();
        let d = basic_atlas(&frame);
        let h = refine_diagram(&d, 1).unwrap();
        let direct = limit_over_diagram(sheaf.presheaf(), &d);
        assert_eq!(limit_over_refinement(sheaf.presheaf(), &h), direct.families.len());
    }

    #[test]
    fn verified_flag() {
        let sheaf = fold_sheaf(&line_space());
        assert!(!sheaf.sheaf_checked());
        let verified = SetSheaf::verified(sheaf.presheaf().clone());
        assert!(verified.sheaf_checked());
    }
}
