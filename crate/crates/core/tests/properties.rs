//! Cross-module property tests: the structural invariants that hold on
//! randomly generated instances. Generators are the seeded corpus ones,
//! so failures reproduce from the printed seed.

use std::collections::BTreeSet;

use proptest::prelude::*;

use descent_core::corpus::{random_diagram, random_labeled_sset, random_poset, random_space, seeded_rng};
use descent_core::descent::{check_descent, limit_over_diagram, limit_over_refinement, sections_sheaf};
use descent_core::hypercover::{
    cech_nerve, check_hypercover, check_hypercover_dhi, families_to_labeled, labeled_to_families,
};
use descent_core::lifting::{
    check_atlas, equivalence_report, local_lifting_check, pushout_transfer_check, AtlasMode,
    LiftingProblem, OpenDiagram,
};
use descent_core::nerve::{
    nerve_truncated, refine_diagram, transpose_from_assignment, transpose_to_assignment,
    SimplicialMap,
};
use descent_core::order::{
    alexandrov_frame, for_each_monotone_extension, meet_over, poset_pushout, preorder_to_poset,
    FinitePoset, FinitePreorder, MonotoneMap, OpenSet,
};
use descent_core::semirep::{hom_count, hom_families, IndexedFamily};
use descent_core::simplicial::TruncatedSSet;
use rand::Rng;

proptest! {
    #[test]
    fn covers_is_monotone_under_enlargement(seed in 0u64..500) {
        let mut rng = seeded_rng(seed);
        let frame = random_space(&mut rng, 5);
        let v = frame.opens()[rng.gen_range(0..frame.open_count())];
        let mut family: Vec<OpenSet> = frame
            .opens()
            .iter()
            .copied()
            .filter(|o| o.is_subset_of(v) && rng.gen_bool(0.4))
            .collect();
        let before = frame.covers(&family, v).unwrap();
        // enlarging the family preserves a positive verdict
        family.extend(
            frame
                .opens()
                .iter()
                .copied()
                .filter(|o| o.is_subset_of(v) && rng.gen_bool(0.4)),
        );
        let after = frame.covers(&family, v).unwrap();
        prop_assert!(!before || after);
    }

    #[test]
    fn hom_count_matches_enumeration(seed in 0u64..300) {
        let mut rng = seeded_rng(seed);
        let frame = random_space(&mut rng, 4);
        let mut make = |len: usize| {
            let members: Vec<OpenSet> = (0..len)
                .map(|_| frame.opens()[rng.gen_range(0..frame.open_count())])
                .collect();
            let index = (0..len).map(|s| format!("s{s}")).collect();
            IndexedFamily::new(frame.clone(), index, members).unwrap()
        };
        let la = seed as usize % 4;
        let lb = (seed as usize / 4) % 4;
        let a = make(la);
        let b = make(lb);
        prop_assert_eq!(
            hom_families(&a, &b).unwrap().len() as u128,
            hom_count(&a, &b).unwrap()
        );
    }

    #[test]
    fn preorder_round_trip_is_identity(seed in 0u64..300) {
        let mut rng = seeded_rng(seed);
        let poset = random_poset(&mut rng, 6);
        let quotient = preorder_to_poset(&FinitePreorder::from_poset(&poset));
        prop_assert_eq!(&quotient.poset, &poset);
        let identity: Vec<usize> = (0..poset.len()).collect();
        prop_assert_eq!(quotient.class_of, identity);
    }
}

#[test]
fn meet_over_reduces_to_coinitial_subsets() {
    let mut rng = seeded_rng(41);
    for _ in 0..150 {
        let frame = random_space(&mut rng, 5);
        let d = random_diagram(&mut rng, &frame, 5);
        let u = d.u_map();
        let k = random_poset(&mut rng, 4);
        // random monotone alpha: K -> I, if one exists
        let Some(alpha_map) = descent_core::order::first_monotone_extension(
            &k,
            d.index(),
            &vec![None; k.len()],
        ) else {
            continue;
        };
        let alpha = MonotoneMap::new(k.clone(), d.index().clone(), alpha_map).unwrap();
        let full = meet_over(&frame, &u, &alpha).unwrap();
        // every 0-coinitial subset computes the same meet
        for bits in 0u32..(1 << k.len()) {
            let subset: BTreeSet<usize> = (0..k.len()).filter(|&i| (bits >> i) & 1 == 1).collect();
            if !k.is_zero_coinitial(&subset) {
                continue;
            }
            let indices: Vec<usize> = subset.iter().copied().collect();
            let (sub, _) = k.subposet(&indices);
            let restricted: Vec<usize> = indices.iter().map(|&i| alpha.apply(i)).collect();
            let alpha0 = MonotoneMap::new(sub, d.index().clone(), restricted).unwrap();
            assert_eq!(meet_over(&frame, &u, &alpha0).unwrap(), full);
        }
    }
}

#[test]
fn cone_pushout_holds_on_random_six_element_posets() {
    let mut rng = seeded_rng(17);
    for _ in 0..120 {
        let k = random_poset(&mut rng, 6);
        let (expected, _) = k.left_cone().unwrap();
        for bits in 0u32..(1 << k.len()) {
            let subset: BTreeSet<usize> = (0..k.len()).filter(|&i| (bits >> i) & 1 == 1).collect();
            if !k.is_zero_coinitial(&subset) {
                continue;
            }
            let indices: Vec<usize> = subset.iter().copied().collect();
            let (k0, _) = k.subposet(&indices);
            let (k0_cone, _) = k0.left_cone().unwrap();
            let cone_leg =
                MonotoneMap::new(k0.clone(), k0_cone, (0..k0.len()).map(|i| i + 1).collect())
                    .unwrap();
            let incl_leg = MonotoneMap::new(k0, k.clone(), indices).unwrap();
            let pushout = poset_pushout(&cone_leg, &incl_leg).unwrap();
            assert!(pushout.poset.is_isomorphic_to(&expected));
        }
    }
}

#[test]
fn atlas_modes_agree_on_six_point_spaces() {
    let mut rng = seeded_rng(23);
    for _ in 0..120 {
        let frame = random_space(&mut rng, 6);
        let d = random_diagram(&mut rng, &frame, 5);
        let basic = check_atlas(&d, AtlasMode::Basic).pass;
        assert_eq!(basic, check_atlas(&d, AtlasMode::FiniteSets { kmax: 4 }).pass);
        assert_eq!(basic, check_atlas(&d, AtlasMode::Subsets { nmax: 3 }).pass);
        let report = equivalence_report(&d, 3);
        assert!(report.all_agree());
        assert_eq!(basic, report.all_pass());
    }
}

#[test]
fn failure_witnesses_are_sound() {
    let mut rng = seeded_rng(29);
    let mut seen_failures = 0;
    for _ in 0..200 {
        let frame = random_space(&mut rng, 5);
        let d = random_diagram(&mut rng, &frame, 5);
        let verdict = check_atlas(&d, AtlasMode::Subsets { nmax: 2 });
        let Some(w) = verdict.witness else { continue };
        seen_failures += 1;
        assert!(!w.residue.is_empty());
        let mut rebuilt = w.achieved;
        for name in &w.residue {
            let p = frame.point_index(name).unwrap();
            rebuilt = rebuilt.union(OpenSet::from_bits(1 << p));
        }
        assert_eq!(rebuilt, w.region);
        assert!(w.achieved.is_subset_of(w.region));
    }
    assert!(seen_failures > 10, "the generator produces non-atlases");
}

#[test]
fn lifting_transfer_never_violated() {
    let mut rng = seeded_rng(31);
    for _ in 0..80 {
        let frame = random_space(&mut rng, 5);
        let d = random_diagram(&mut rng, &frame, 4);
        let k = random_poset(&mut rng, 3);
        let mut sigmas: Vec<Vec<usize>> = Vec::new();
        for_each_monotone_extension(&k, d.index(), &vec![None; k.len()], &mut |sigma| {
            sigmas.push(sigma.to_vec());
        });
        for sigma in sigmas.into_iter().take(20) {
            let p = LiftingProblem::cone(k.clone(), sigma).unwrap();
            for bits in 0u32..(1 << k.len()) {
                let subset: BTreeSet<usize> =
                    (0..k.len()).filter(|&i| (bits >> i) & 1 == 1).collect();
                if !k.is_zero_coinitial(&subset) {
                    continue;
                }
                assert!(pushout_transfer_check(&d, &p, &subset).unwrap());
            }
        }
    }
}

#[test]
fn families_round_trip_on_random_objects() {
    let mut rng = seeded_rng(37);
    for _ in 0..40 {
        let frame = random_space(&mut rng, 4);
        let target = frame.opens()[rng.gen_range(0..frame.open_count())];
        let h = random_labeled_sset(&mut rng, &frame, 2, target);
        let families = labeled_to_families(&h);
        let back = families_to_labeled(&families).unwrap();
        assert_eq!(back.shape(), h.shape());
        for n in 0..=h.shape().truncation() {
            assert_eq!(back.labels(n), h.labels(n));
        }
    }
}

#[test]
fn degenerate_fillers_never_help() {
    // removing degenerate fillers does not change any verdict at a level
    // whose boundary labels are already present at the level below
    let mut rng = seeded_rng(43);
    for _ in 0..60 {
        let frame = random_space(&mut rng, 4);
        let target = frame.opens()[rng.gen_range(0..frame.open_count())];
        let h = random_labeled_sset(&mut rng, &frame, 2, target);
        let shape = h.shape();
        for n in 1..=shape.truncation() {
            for tuple in shape.boundary_tuples(n) {
                let region = h.region_of_tuple(n, &tuple);
                let mut all = OpenSet::EMPTY;
                let mut nondeg_only = OpenSet::EMPTY;
                for c in 0..shape.size(n) as u32 {
                    if (0..=n).any(|i| shape.face(n, i, c) != tuple[i]) {
                        continue;
                    }
                    all = all.union(h.label(n, c));
                    if !shape.is_degenerate(n, c) {
                        nondeg_only = nondeg_only.union(h.label(n, c));
                    }
                }
                let pass_all = region.is_subset_of(all);
                let pass_nondeg = region.is_subset_of(nondeg_only);
                // a degenerate filler repeats a label from the level
                // below, and that label contains the region only if some
                // facet already achieves it; at n >= 1 the facet itself
                // comes back as a degenerate filler's core image, so the
                // verdicts agree whenever the boundary is present
                if pass_all != pass_nondeg {
                    // the only gap: a degenerate filler whose label covers
                    // the region; its core is a cell at level n-1 with the
                    // same label, so the region equals that label
                    let witness = (0..shape.size(n) as u32).find(|&c| {
                        shape.is_degenerate(n, c)
                            && (0..=n).all(|i| shape.face(n, i, c) == tuple[i])
                            && region.is_subset_of(h.label(n, c))
                    });
                    assert!(witness.is_some());
                }
            }
        }
    }
}

#[test]
fn cech_nerves_always_pass() {
    let mut rng = seeded_rng(47);
    for _ in 0..60 {
        let frame = random_space(&mut rng, 4);
        let v = frame.opens()[rng.gen_range(0..frame.open_count())];
        let mut cover: Vec<OpenSet> = frame
            .opens()
            .iter()
            .copied()
            .filter(|o| o.is_subset_of(v) && rng.gen_bool(0.5))
            .collect();
        let union = cover.iter().fold(OpenSet::EMPTY, |acc, &o| acc.union(o));
        if union != v {
            cover.push(v);
        }
        cover.truncate(4);
        let union = cover.iter().fold(OpenSet::EMPTY, |acc, &o| acc.union(o));
        if union != v {
            cover.push(v);
        }
        let nerve = cech_nerve(&frame, &cover, v, 3).unwrap();
        assert!(check_hypercover(&nerve, 3).unwrap().pass);
        assert!(check_hypercover_dhi(&nerve, 3).unwrap().pass);
    }
}

#[test]
fn nerve_transpose_round_trips_both_ways() {
    let mut rng = seeded_rng(53);
    let mut exercised = 0;
    for _ in 0..25 {
        let poset = random_poset(&mut rng, 4);
        let trunc = 2;
        let nv = nerve_truncated(&poset, trunc).unwrap();
        // a small shape with valid identities
        let frame = random_space(&mut rng, 3);
        let k = random_labeled_sset(&mut rng, &frame, trunc, frame.top())
            .shape()
            .clone();
        if k.cell_count() > 30 {
            continue;
        }
        let assignments = enumerate_monotone_assignments(&k, &poset);
        let maps = enumerate_simplicial_maps(&k, &nv.shape().clone());
        assert_eq!(assignments.len(), maps.len(), "adjunction bijection");
        for assignment in &assignments {
            let m = transpose_from_assignment(&k, assignment, &nv).unwrap();
            let back = transpose_to_assignment(&m, &nv);
            assert_eq!(&back, assignment);
            exercised += 1;
        }
        for levels in &maps {
            let m = SimplicialMap::new(&k, nv.shape(), levels.clone()).unwrap();
            let assignment = transpose_to_assignment(&m, &nv);
            let again = transpose_from_assignment(&k, &assignment, &nv).unwrap();
            assert_eq!(again.levels, m.levels);
        }
    }
    assert!(exercised > 50);
}

fn enumerate_monotone_assignments(k: &TruncatedSSet, poset: &FinitePoset) -> Vec<Vec<Vec<usize>>> {
    // flatten cells, assign elements with operator-edge constraints
    let mut cells: Vec<(usize, u32)> = Vec::new();
    for n in 0..=k.truncation() {
        for c in 0..k.size(n) as u32 {
            cells.push((n, c));
        }
    }
    let mut out = Vec::new();
    let mut assignment: Vec<Vec<usize>> = (0..=k.truncation())
        .map(|n| vec![usize::MAX; k.size(n)])
        .collect();
    fn ok(
        k: &TruncatedSSet,
        poset: &FinitePoset,
        assignment: &[Vec<usize>],
        n: usize,
        c: u32,
        v: usize,
    ) -> bool {
        if n >= 1 {
            for i in 0..=n {
                let w = assignment[n - 1][k.face(n, i, c) as usize];
                if w != usize::MAX && !poset.le(v, w) {
                    return false;
                }
            }
        }
        if n < k.truncation() {
            for j in 0..=n {
                let w = assignment[n + 1][k.degeneracy(n, j, c) as usize];
                if w != usize::MAX && !poset.le(v, w) {
                    return false;
                }
            }
        }
        // edges into this cell from below and above
        if n + 1 <= k.truncation() {
            for c2 in 0..k.size(n + 1) as u32 {
                let w = assignment[n + 1][c2 as usize];
                if w == usize::MAX {
                    continue;
                }
                for i in 0..=n + 1 {
                    if k.face(n + 1, i, c2) == c && !poset.le(w, v) {
                        return false;
                    }
                }
            }
        }
        if n >= 1 {
            for c2 in 0..k.size(n - 1) as u32 {
                let w = assignment[n - 1][c2 as usize];
                if w == usize::MAX {
                    continue;
                }
                for j in 0..n {
                    if k.degeneracy(n - 1, j, c2) == c && !poset.le(w, v) {
                        return false;
                    }
                }
            }
        }
        true
    }
    fn go(
        k: &TruncatedSSet,
        poset: &FinitePoset,
        cells: &[(usize, u32)],
        pos: usize,
        assignment: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if pos == cells.len() {
            out.push(assignment.clone());
            return;
        }
        let (n, c) = cells[pos];
        for v in 0..poset.len() {
            if ok(k, poset, assignment, n, c, v) {
                assignment[n][c as usize] = v;
                go(k, poset, cells, pos + 1, assignment, out);
                assignment[n][c as usize] = usize::MAX;
            }
        }
    }
    go(k, poset, &cells, 0, &mut assignment, &mut out);
    out
}

fn enumerate_simplicial_maps(k: &TruncatedSSet, dst: &TruncatedSSet) -> Vec<Vec<Vec<u32>>> {
    let mut cells: Vec<(usize, u32)> = Vec::new();
    for n in 0..=k.truncation() {
        for c in 0..k.size(n) as u32 {
            cells.push((n, c));
        }
    }
    let mut out = Vec::new();
    let mut levels: Vec<Vec<u32>> = (0..=k.truncation())
        .map(|n| vec![u32::MAX; k.size(n)])
        .collect();
    fn consistent(
        k: &TruncatedSSet,
        dst: &TruncatedSSet,
        levels: &[Vec<u32>],
        n: usize,
        c: u32,
        img: u32,
    ) -> bool {
        if n >= 1 {
            for i in 0..=n {
                let fk = levels[n - 1][k.face(n, i, c) as usize];
                if fk != u32::MAX && dst.face(n, i, img) != fk {
                    return false;
                }
            }
        }
        if n < k.truncation() {
            for j in 0..=n {
                let sk = levels[n + 1][k.degeneracy(n, j, c) as usize];
                if sk != u32::MAX && dst.degeneracy(n, j, img) != sk {
                    return false;
                }
            }
        }
        // maps out of other assigned cells into this one
        if n + 1 <= k.truncation() {
            for c2 in 0..k.size(n + 1) as u32 {
                let w = levels[n + 1][c2 as usize];
                if w == u32::MAX {
                    continue;
                }
                for i in 0..=n + 1 {
                    if k.face(n + 1, i, c2) == c && dst.face(n + 1, i, w) != img {
                        return false;
                    }
                }
            }
        }
        if n >= 1 {
            for c2 in 0..k.size(n - 1) as u32 {
                let w = levels[n - 1][c2 as usize];
                if w == u32::MAX {
                    continue;
                }
                for j in 0..n {
                    if k.degeneracy(n - 1, j, c2) == c && dst.degeneracy(n - 1, j, w) != img {
                        return false;
                    }
                }
            }
        }
        true
    }
    fn go(
        k: &TruncatedSSet,
        dst: &TruncatedSSet,
        cells: &[(usize, u32)],
        pos: usize,
        levels: &mut Vec<Vec<u32>>,
        out: &mut Vec<Vec<Vec<u32>>>,
    ) {
        if pos == cells.len() {
            out.push(levels.clone());
            return;
        }
        let (n, c) = cells[pos];
        for img in 0..dst.size(n) as u32 {
            if consistent(k, dst, levels, n, c, img) {
                levels[n][c as usize] = img;
                go(k, dst, cells, pos + 1, levels, out);
                levels[n][c as usize] = u32::MAX;
            }
        }
    }
    go(k, dst, &cells, 0, &mut levels, &mut out);
    out
}

#[test]
fn descent_is_invariant_under_diagram_isomorphism() {
    let mut rng = seeded_rng(59);
    for _ in 0..40 {
        // a base space, its fold sheaf, and a random diagram
        let n = rng.gen_range(1..=4);
        let elements: Vec<String> = (0..n).map(|i| format!("b{i}")).collect();
        let mut rels = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.gen_bool(0.3) {
                    rels.push((format!("b{i}"), format!("b{j}")));
                }
            }
        }
        let base = FinitePreorder::from_relations(elements, &rels).unwrap();
        let frame = alexandrov_frame(&base).unwrap();
        let total = {
            let mut elems = Vec::new();
            let mut rels2 = Vec::new();
            for copy in 0..2 {
                for e in base.elements() {
                    elems.push(format!("{e}#{copy}"));
                }
                for a in 0..n {
                    for b in 0..n {
                        if a != b && base.le(a, b) {
                            rels2.push((
                                format!("{}#{copy}", base.elements()[a]),
                                format!("{}#{copy}", base.elements()[b]),
                            ));
                        }
                    }
                }
            }
            FinitePreorder::from_relations(elems, &rels2).unwrap()
        };
        let projection: Vec<usize> = (0..2 * n).map(|e| e % n).collect();
        let sheaf = sections_sheaf(&total, &base, &projection).unwrap();
        let d = random_diagram(&mut rng, &frame, 4);

        // relabel the index poset along a random permutation
        let m = d.index().len();
        let mut perm: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let names: Vec<String> = (0..m).map(|i| format!("r{i}")).collect();
        let mut leq = vec![false; m * m];
        for a in 0..m {
            for b in 0..m {
                leq[a * m + b] = d.index().le(perm[a], perm[b]);
            }
        }
        let relabeled_index = FinitePoset::new(names, leq).unwrap();
        let relabeled_opens: Vec<OpenSet> = (0..m).map(|i| d.open(perm[i])).collect();
        let relabeled = OpenDiagram::new(
            relabeled_index,
            frame.clone(),
            relabeled_opens,
            d.target(),
        )
        .unwrap();

        let original = check_descent(&sheaf, &d);
        let permuted = check_descent(&sheaf, &relabeled);
        assert_eq!(original.pass, permuted.pass);
        assert_eq!(
            limit_over_diagram(sheaf.presheaf(), &d).families.len(),
            limit_over_diagram(sheaf.presheaf(), &relabeled).families.len()
        );
    }
}

#[test]
fn refinement_limits_match_diagram_limits() {
    let mut rng = seeded_rng(61);
    for _ in 0..30 {
        let n = rng.gen_range(1..=4);
        let elements: Vec<String> = (0..n).map(|i| format!("b{i}")).collect();
        let mut rels = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.gen_bool(0.3) {
                    rels.push((format!("b{i}"), format!("b{j}")));
                }
            }
        }
        let base = FinitePreorder::from_relations(elements, &rels).unwrap();
        let frame = alexandrov_frame(&base).unwrap();
        let m = base.len();
        let identity = sections_sheaf(&base, &base, &(0..m).collect::<Vec<_>>()).unwrap();
        let d = random_diagram(&mut rng, &frame, 4);
        let refined = refine_diagram(&d, 1).unwrap();
        let direct = limit_over_diagram(identity.presheaf(), &d);
        assert_eq!(
            limit_over_refinement(identity.presheaf(), &refined),
            direct.families.len()
        );
    }
}

#[test]
fn local_lifting_is_monotone_in_the_diagram() {
    // growing the diagram downward never turns a pass into a fail
    let mut rng = seeded_rng(67);
    for _ in 0..60 {
        let frame = random_space(&mut rng, 4);
        let d = random_diagram(&mut rng, &frame, 4);
        let idx = d.index();

        // extend the index poset with a fresh minimum assigned the bottom
        let mut names: Vec<String> = idx.elements().to_vec();
        names.push("fresh-min".to_string());
        let m = names.len();
        let mut leq = vec![false; m * m];
        for a in 0..m - 1 {
            for b in 0..m - 1 {
                leq[a * m + b] = idx.le(a, b);
            }
        }
        for b in 0..m {
            leq[(m - 1) * m + b] = true;
        }
        leq[(m - 1) * m + (m - 1)] = true;
        let bigger_index = FinitePoset::new(names, leq).unwrap();
        let mut opens = d.opens().to_vec();
        opens.push(frame.bottom());
        let bigger = OpenDiagram::new(bigger_index, frame.clone(), opens, d.target()).unwrap();

        let k = random_poset(&mut rng, 3);
        let mut sigmas: Vec<Vec<usize>> = Vec::new();
        for_each_monotone_extension(&k, idx, &vec![None; k.len()], &mut |sigma| {
            sigmas.push(sigma.to_vec());
        });
        for sigma in sigmas.into_iter().take(10) {
            let p = LiftingProblem::cone(k.clone(), sigma.clone()).unwrap();
            let small = local_lifting_check(&d, &p).unwrap();
            let p_big = LiftingProblem::cone(k.clone(), sigma).unwrap();
            let big = local_lifting_check(&bigger, &p_big).unwrap();
            assert!(!small.pass || big.pass);
        }
    }
}
