//! Seeded generators of test instances: exhaustive families of small
//! preorders and posets, and reproducible random diagrams, labeled
//! objects, and bundles. Everything is deterministic in the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hypercover::LabeledSSet;
use crate::lifting::OpenDiagram;
use crate::order::{alexandrov_frame, FiniteFrame, FinitePoset, FinitePreorder, OpenSet};
use crate::simplicial::{simplicial_envelope, TruncatedSemiSSet};

/// All labeled preorders on `n` elements (reflexive-transitive boolean
/// relations). Exhaustive and only sensible for `n <= 4`.
pub fn all_preorders(n: usize) -> Vec<FinitePreorder> {
    let elements: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let off_diag: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j)
        .collect();
    let mut out = Vec::new();
    for bits in 0u64..(1u64 << off_diag.len()) {
        let mut rel = vec![false; n * n];
        for i in 0..n {
            rel[i * n + i] = true;
        }
        for (b, &(i, j)) in off_diag.iter().enumerate() {
            if (bits >> b) & 1 == 1 {
                rel[i * n + j] = true;
            }
        }
        // keep only the transitive ones
        let transitive = (0..n).all(|i| {
            (0..n).all(|j| {
                !rel[i * n + j]
                    || (0..n).all(|k| !rel[j * n + k] || rel[i * n + k])
            })
        });
        if transitive {
            out.push(FinitePreorder::new(elements.clone(), rel).expect("validated above"));
        }
    }
    out
}

/// All posets on `n` elements up to isomorphism.
pub fn all_posets_up_to_iso(n: usize) -> Vec<FinitePoset> {
    let mut classes: Vec<FinitePoset> = Vec::new();
    for pre in all_preorders(n) {
        let Ok(poset) = FinitePoset::new(
            pre.elements().to_vec(),
            (0..n * n)
                .map(|idx| pre.le(idx / n, idx % n))
                .collect(),
        ) else {
            continue; // not antisymmetric
        };
        if !classes.iter().any(|p| p.is_isomorphic_to(&poset)) {
            classes.push(poset);
        }
    }
    classes
}

/// The corpus RNG: a fixed stream cipher, so seeds reproduce the same
/// instances on every platform and toolchain.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random poset with between 1 and `max_elems` elements, built as the
/// transitive closure of a random relation on an index chain.
pub fn random_poset(rng: &mut ChaCha8Rng, max_elems: usize) -> FinitePoset {
    let n = rng.gen_range(1..=max_elems);
    let elements: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
    let p: f64 = rng.gen_range(0.15..0.65);
    let mut rels: Vec<(String, String)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                rels.push((format!("i{i}"), format!("i{j}")));
            }
        }
    }
    FinitePoset::from_relations(elements, &rels).expect("a DAG closure is a poset")
}

/// A random finite space with between 1 and `max_points` points, as the
/// Alexandrov frame of a random preorder.
pub fn random_space(rng: &mut ChaCha8Rng, max_points: usize) -> FiniteFrame {
    let n = rng.gen_range(1..=max_points);
    let elements: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let p: f64 = rng.gen_range(0.1..0.6);
    let mut rels: Vec<(String, String)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(p) {
                rels.push((format!("x{i}"), format!("x{j}")));
            }
        }
    }
    let pre = FinitePreorder::from_relations(elements, &rels).expect("closure of a relation");
    alexandrov_frame(&pre).expect("few points")
}

/// A random monotone diagram of opens over the frame. The target is
/// usually the top, so both atlases and non-atlases occur.
pub fn random_diagram(rng: &mut ChaCha8Rng, frame: &FiniteFrame, max_elems: usize) -> OpenDiagram {
    let index = random_poset(rng, max_elems);
    let order = index.linear_extension();
    let mut opens = vec![OpenSet::EMPTY; index.len()];
    for &x in &order {
        let mut lower = OpenSet::EMPTY;
        for y in 0..index.len() {
            if y != x && index.le(y, x) {
                lower = lower.union(opens[y]);
            }
        }
        let candidates: Vec<OpenSet> = frame
            .opens()
            .iter()
            .copied()
            .filter(|o| lower.is_subset_of(*o))
            .collect();
        opens[x] = candidates[rng.gen_range(0..candidates.len())];
    }
    let target = if rng.gen_bool(0.8) {
        frame.top()
    } else {
        // the join of the assigned opens, so the global cover holds
        opens.iter().fold(OpenSet::EMPTY, |acc, &o| acc.union(o))
    };
    OpenDiagram::new(index, frame.clone(), opens, target).expect("construction is monotone")
}

/// A random labeled simplicial set over the frame: a random truncated
/// semisimplicial set (new cells attach to compatible boundary tuples),
/// its simplicial envelope, and labels drawn downward along faces.
pub fn random_labeled_sset(
    rng: &mut ChaCha8Rng,
    frame: &FiniteFrame,
    trunc: usize,
    target: OpenSet,
) -> LabeledSSet {
    // cell budgets keep the envelope at or below ~200 cells
    let budget = [4usize, 8, 12, 20];
    let mut sizes = vec![rng.gen_range(1..=budget[0])];
    let mut faces: Vec<Vec<Vec<u32>>> = vec![Vec::new()];
    for n in 1..=trunc {
        let semi = TruncatedSemiSSet::new(n - 1, sizes.clone(), faces.clone())
            .expect("previous levels are valid");
        let tuples = semi_boundary_tuples(&semi, n);
        let mut level_faces: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
        let mut count = 0usize;
        let cap = budget.get(n).copied().unwrap_or(8);
        for tuple in &tuples {
            if count >= cap {
                break;
            }
            if rng.gen_bool(0.4) {
                for (i, &f) in tuple.iter().enumerate() {
                    level_faces[i].push(f);
                }
                count += 1;
            }
        }
        sizes.push(count);
        faces.push(level_faces);
    }
    let semi = TruncatedSemiSSet::new(trunc, sizes.clone(), faces).expect("attached to tuples");
    let env = simplicial_envelope(&semi, trunc);

    // labels on the cores, drawn inside the meet of the face labels
    let mut core_labels: Vec<Vec<OpenSet>> = Vec::with_capacity(trunc + 1);
    for k in 0..=trunc {
        let mut lvl = Vec::with_capacity(semi.size(k));
        for c in 0..semi.size(k) as u32 {
            let bound = if k == 0 {
                target
            } else {
                (0..=k).fold(target, |acc, i| {
                    acc.intersect(core_labels[k - 1][semi.face(k, i, c) as usize])
                })
            };
            let candidates: Vec<OpenSet> = frame
                .opens()
                .iter()
                .copied()
                .filter(|o| o.is_subset_of(bound))
                .collect();
            lvl.push(candidates[rng.gen_range(0..candidates.len())]);
        }
        core_labels.push(lvl);
    }
    let labels: Vec<Vec<OpenSet>> = env
        .cells
        .iter()
        .map(|lvl| {
            lvl.iter()
                .map(|cell| core_labels[cell.core_level][cell.core as usize])
                .collect()
        })
        .collect();
    LabeledSSet::new(env.sset, labels, frame.clone(), target).expect("labels follow the laws")
}

fn semi_boundary_tuples(semi: &TruncatedSemiSSet, n: usize) -> Vec<Vec<u32>> {
    // brute force is fine at corpus scale
    let lower = n - 1;
    let m = semi.size(lower) as u32;
    let mut out = Vec::new();
    let mut tuple = vec![0u32; n + 1];
    fn rec(
        semi: &TruncatedSemiSSet,
        n: usize,
        pos: usize,
        m: u32,
        tuple: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if pos == n + 1 {
            out.push(tuple.clone());
            return;
        }
        'next: for c in 0..m {
            if n >= 2 {
                for i in 0..pos {
                    if semi.face(n - 1, i, c) != semi.face(n - 1, pos - 1, tuple[i]) {
                        continue 'next;
                    }
                }
            }
            tuple[pos] = c;
            rec(semi, n, pos + 1, m, tuple, out);
        }
    }
    rec(semi, n, 0, m, &mut tuple, &mut out);
    out
}

/// A random finite bundle over the base space: a total preorder mapping
/// continuously onto the base, with fibers of size 0 to 2.
pub fn random_bundle(
    rng: &mut ChaCha8Rng,
    base: &FinitePreorder,
) -> (FinitePreorder, Vec<usize>) {
    let mut elements = Vec::new();
    let mut projection = Vec::new();
    for (x, name) in base.elements().iter().enumerate() {
        let fiber = rng.gen_range(0..=2);
        for c in 0..fiber {
            elements.push(format!("{name}^{c}"));
            projection.push(x);
        }
    }
    let total_n = elements.len();
    let mut rels: Vec<(String, String)> = Vec::new();
    for a in 0..total_n {
        for b in 0..total_n {
            if a != b && base.le(projection[a], projection[b]) && rng.gen_bool(0.5) {
                rels.push((elements[a].clone(), elements[b].clone()));
            }
        }
    }
    let total = FinitePreorder::from_relations(elements, &rels)
        .expect("closure of relations over the base stays over the base");
    (total, projection)
}

/// A named diagram of the standard corpus.
#[derive(Debug, Clone)]
pub struct NamedDiagram {
    pub name: String,
    pub diagram: OpenDiagram,
}

/// The standard diagram corpus: for every labeled preorder on up to
/// `exhaustive_points` points, a handful of small canonical diagrams
/// over its Alexandrov frame (a singleton, a basic two-open refinement,
/// a discrete pair, and one seeded random diagram), plus `n_random`
/// seeded random diagrams over random spaces. All index posets stay
/// small, so every diagram supports nerve refinement at truncation 3.
pub fn standard_corpus(seed: u64, exhaustive_points: usize, n_random: usize) -> Vec<NamedDiagram> {
    let mut rng = seeded_rng(seed);
    let mut out = Vec::new();
    for points in 0..=exhaustive_points {
        for (pi, pre) in all_preorders(points).into_iter().enumerate() {
            let frame = alexandrov_frame(&pre).expect("few points");
            let tag = format!("ex{points}-{pi}");
            out.extend(canonical_diagrams(&mut rng, &frame, &tag));
        }
    }
    for r in 0..n_random {
        let frame = random_space(&mut rng, 5);
        let diagram = random_diagram(&mut rng, &frame, 5);
        out.push(NamedDiagram {
            name: format!("rand-{r}"),
            diagram,
        });
    }
    out
}

fn canonical_diagrams(rng: &mut ChaCha8Rng, frame: &FiniteFrame, tag: &str) -> Vec<NamedDiagram> {
    let mut out = Vec::new();
    let top = frame.top();
    // singleton diagram at the top
    let singleton = OpenDiagram::new(
        FinitePoset::discrete(vec!["v".into()]).expect("one element"),
        frame.clone(),
        vec![top],
        top,
    )
    .expect("singleton is monotone");
    out.push(NamedDiagram {
        name: format!("{tag}-singleton"),
        diagram: singleton,
    });

    // the largest pair of proper opens whose union is the top, if any
    let mut pair: Option<(OpenSet, OpenSet)> = None;
    let opens = frame.opens();
    for (a, &u) in opens.iter().enumerate() {
        for &v in &opens[a + 1..] {
            if u == top || v == top {
                continue;
            }
            if u.union(v) == top {
                let better = match pair {
                    None => true,
                    Some((pu, pv)) => u.len() + v.len() > pu.len() + pv.len(),
                };
                if better {
                    pair = Some((u, v));
                }
            }
        }
    }
    if let Some((u, v)) = pair {
        let index = FinitePoset::from_relations(
            vec!["uv".into(), "u".into(), "v".into()],
            &[("uv", "u"), ("uv", "v")],
        )
        .expect("three elements");
        out.push(NamedDiagram {
            name: format!("{tag}-basic"),
            diagram: OpenDiagram::new(
                index,
                frame.clone(),
                vec![u.intersect(v), u, v],
                top,
            )
            .expect("intersection sits below"),
        });
        let discrete = FinitePoset::discrete(vec!["u".into(), "v".into()]).expect("two");
        out.push(NamedDiagram {
            name: format!("{tag}-pair"),
            diagram: OpenDiagram::new(discrete, frame.clone(), vec![u, v], top)
                .expect("discrete is monotone"),
        });
    }

    out.push(NamedDiagram {
        name: format!("{tag}-random"),
        diagram: random_diagram(rng, frame, 4),
    });
    out
}

/// A named labeled object corpus for the fill-condition cross-checks:
/// Čech nerves over random covers and random labeled objects.
pub fn labeled_corpus(
    seed: u64,
    n_random: usize,
    trunc: usize,
) -> Vec<(String, LabeledSSet)> {
    let mut rng = seeded_rng(seed);
    let mut out = Vec::new();
    let mut made = 0usize;
    while made < n_random {
        let frame = random_space(&mut rng, 4);
        if rng.gen_bool(0.3) {
            // a Čech nerve of a random cover of a random open
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
            if cover.len() > 4 {
                cover.truncate(4);
                cover.push(v);
            }
            let nerve = crate::hypercover::cech_nerve(&frame, &cover, v, trunc)
                .expect("completed to a cover");
            out.push((format!("cech-{made}"), nerve));
        } else {
            let v = frame.opens()[rng.gen_range(0..frame.open_count())];
            out.push((
                format!("labeled-{made}"),
                random_labeled_sset(&mut rng, &frame, trunc, v),
            ));
        }
        made += 1;
    }
    out
}
