//! The tautological nerve of a poset, its counit and refinements, and
//! homology of truncated simplicial sets.
//!
//! An n-simplex of the nerve is an order-reversing map from the poset of
//! inhabited subsets of `{0..n}` (reverse inclusion) to the index poset;
//! simplicial operators act by precomposition with the induced subset
//! maps. This finite description stands in for functors on the full
//! category of simplices: every simplex factors uniquely through its
//! nondegenerate core, and cell values are stored flat (one byte per
//! subset) so nerves with millions of simplices stay cheap.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::hypercover::{HypercoverError, LabeledSSet};
use crate::lifting::OpenDiagram;
use crate::order::FinitePoset;
use crate::simplicial::{subset_rank_order, SimplicialError, TruncatedSSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NerveError {
    #[error("nerve construction supports at most 255 poset elements, got {0}")]
    PosetTooLarge(usize),
    #[error("element {0} is not in the poset")]
    ElementOutOfRange(usize),
    #[error("maximum degree {maxdeg} needs truncation at least {} (got {trunc})", maxdeg + 1)]
    MaxDegreeTooLarge { maxdeg: usize, trunc: usize },
    #[error("assignment at level {level}, cell {cell} is not monotone along the operators")]
    NonMonotoneAssignment { level: usize, cell: u32 },
    #[error("assignment table does not match the shape")]
    AssignmentShapeMismatch,
    #[error("map does not commute with the simplicial operators at level {level}, cell {cell}")]
    NotSimplicial { level: usize, cell: u32 },
    #[error("map table does not match the shapes")]
    MapShapeMismatch,
    #[error(transparent)]
    Simplicial(#[from] SimplicialError),
    #[error(transparent)]
    Hypercover(#[from] HypercoverError),
}

/// One n-simplex of a truncated nerve: its order-reversing value map,
/// indexed by subset masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NerveSimplex {
    pub dim: usize,
    /// Subset masks in canonical order (decreasing size, then mask).
    pub masks: Vec<u32>,
    /// Poset element index per mask, parallel to `masks`.
    pub values: Vec<u8>,
}

impl NerveSimplex {
    /// The value at an inhabited subset of `{0..dim}`.
    pub fn value_at(&self, mask: u32) -> usize {
        let pos = self
            .masks
            .iter()
            .position(|&m| m == mask)
            .expect("mask of the simplex dimension");
        self.values[pos] as usize
    }

    /// The value at the full subset: evaluation at the initial object of
    /// the category of simplices.
    pub fn counit(&self) -> usize {
        self.values[0] as usize
    }
}

/// Evaluation of a nerve simplex at the initial object of its simplex
/// category (the full subset).
pub fn counit_eval(x: &NerveSimplex) -> usize {
    x.counit()
}

/// The tautological nerve of a finite poset, truncated at level `N`.
#[derive(Debug, Clone)]
pub struct TruncatedNerve {
    poset: FinitePoset,
    trunc: usize,
    shape: TruncatedSSet,
    /// Flattened value maps per level; stride `2^(n+1) - 1`.
    values: Vec<Vec<u8>>,
    /// Canonical mask order per level, full subset first.
    mask_orders: Vec<Vec<u32>>,
}

impl TruncatedNerve {
    pub fn poset(&self) -> &FinitePoset {
        &self.poset
    }

    pub fn truncation(&self) -> usize {
        self.trunc
    }

    pub fn shape(&self) -> &TruncatedSSet {
        &self.shape
    }

    pub fn level_size(&self, n: usize) -> usize {
        self.shape.size(n)
    }

    pub fn stride(&self, n: usize) -> usize {
        (1usize << (n + 1)) - 1
    }

    pub fn key(&self, n: usize, c: u32) -> &[u8] {
        let stride = self.stride(n);
        &self.values[n][c as usize * stride..(c as usize + 1) * stride]
    }

    /// The value of a cell at the full subset.
    pub fn counit(&self, n: usize, c: u32) -> usize {
        self.key(n, c)[0] as usize
    }

    pub fn simplex(&self, n: usize, c: u32) -> NerveSimplex {
        NerveSimplex {
            dim: n,
            masks: self.mask_orders[n].clone(),
            values: self.key(n, c).to_vec(),
        }
    }

    /// Finds the cell with the given value key by binary search.
    pub fn find(&self, n: usize, key: &[u8]) -> Option<u32> {
        let stride = self.stride(n);
        let total = self.shape.size(n);
        let mut lo = 0usize;
        let mut hi = total;
        while lo < hi {
            let mid = (lo + hi) / 2;
            let k = &self.values[n][mid * stride..(mid + 1) * stride];
            if k < key {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo < total && self.key(n, lo as u32) == key {
            Some(lo as u32)
        } else {
            None
        }
    }

    /// Display form of a cell: values in canonical mask order, grouped
    /// by subset size.
    pub fn simplex_name(&self, n: usize, c: u32) -> String {
        let key = self.key(n, c);
        let masks = &self.mask_orders[n];
        let mut groups: Vec<String> = Vec::new();
        let mut start = 0;
        let mut size = masks[0].count_ones();
        let mut current = Vec::new();
        for (pos, &mask) in masks.iter().enumerate() {
            if mask.count_ones() != size {
                groups.push(current.join(","));
                current = Vec::new();
                size = mask.count_ones();
            }
            current.push(self.poset.element(key[pos] as usize).to_string());
            let _ = start;
            start = pos;
        }
        groups.push(current.join(","));
        format!("[{}]", groups.join("|"))
    }
}

/// Builds the truncated nerve: level `n` holds every order-reversing map
/// from the subset poset of `{0..n}` to the poset, enumerated in
/// lexicographic key order.
pub fn nerve_truncated(poset: &FinitePoset, trunc: usize) -> Result<TruncatedNerve, NerveError> {
    if poset.len() > 255 {
        return Err(NerveError::PosetTooLarge(poset.len()));
    }
    let nelem = poset.len();
    let leq: Vec<bool> = {
        let mut m = vec![false; nelem * nelem];
        for a in 0..nelem {
            for b in 0..nelem {
                m[a * nelem + b] = poset.le(a, b);
            }
        }
        m
    };

    let mut values: Vec<Vec<u8>> = Vec::with_capacity(trunc + 1);
    let mut mask_orders: Vec<Vec<u32>> = Vec::with_capacity(trunc + 1);
    for n in 0..=trunc {
        let (masks, pos_of_mask) = subset_rank_order(n);
        let stride = masks.len();
        // positions of the immediate supersets of each mask
        let sup_positions: Vec<Vec<u32>> = masks
            .iter()
            .map(|&m| {
                (0..=n as u32)
                    .filter(|&b| (m >> b) & 1 == 0)
                    .map(|b| pos_of_mask[(m | (1 << b)) as usize])
                    .collect()
            })
            .collect();
        let mut level = Vec::new();
        let mut key = vec![0u8; stride];
        enumerate_keys(
            nelem,
            &leq,
            &sup_positions,
            &mut key,
            0,
            stride,
            &mut level,
        );
        values.push(level);
        mask_orders.push(masks);
    }
    let sizes: Vec<usize> = (0..=trunc)
        .map(|n| values[n].len() / ((1usize << (n + 1)) - 1))
        .collect();

    // helper for locating a key at a level by binary search
    let find = |n: usize, key: &[u8]| -> u32 {
        let stride = (1usize << (n + 1)) - 1;
        let level = &values[n];
        let total = sizes[n];
        let mut lo = 0usize;
        let mut hi = total;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if &level[mid * stride..(mid + 1) * stride] < key {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        debug_assert!(lo < total && &level[lo * stride..(lo + 1) * stride] == key);
        lo as u32
    };

    let mut faces: Vec<Vec<Vec<u32>>> = vec![Vec::new(); trunc + 1];
    for n in 1..=trunc {
        let stride_lo = (1usize << n) - 1;
        let stride_hi = (1usize << (n + 1)) - 1;
        let (_, pos_hi) = subset_rank_order(n);
        let masks_lo = &mask_orders[n - 1];
        let mut tables = Vec::with_capacity(n + 1);
        for i in 0..=n {
            // gather positions: value at T of the face is the value at
            // δ_i(T) of the cell
            let gather: Vec<u32> = masks_lo
                .iter()
                .map(|&t| pos_hi[delta_mask(t, i) as usize])
                .collect();
            let mut table = vec![0u32; sizes[n]];
            let mut face_key = vec![0u8; stride_lo];
            for c in 0..sizes[n] {
                let key = &values[n][c * stride_hi..(c + 1) * stride_hi];
                for (p, &g) in gather.iter().enumerate() {
                    face_key[p] = key[g as usize];
                }
                table[c] = find(n - 1, &face_key);
            }
            tables.push(table);
        }
        faces[n] = tables;
    }

    let mut degens: Vec<Vec<Vec<u32>>> = Vec::with_capacity(trunc);
    for n in 0..trunc {
        let stride_lo = (1usize << (n + 1)) - 1;
        let stride_hi = (1usize << (n + 2)) - 1;
        let (_, pos_lo) = subset_rank_order(n);
        let masks_hi = {
            let (m, _) = subset_rank_order(n + 1);
            m
        };
        let mut tables = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let gather: Vec<u32> = masks_hi
                .iter()
                .map(|&t| pos_lo[epsilon_mask(t, j) as usize])
                .collect();
            let mut table = vec![0u32; sizes[n]];
            let mut degen_key = vec![0u8; stride_hi];
            for c in 0..sizes[n] {
                let key = &values[n][c * stride_lo..(c + 1) * stride_lo];
                for (p, &g) in gather.iter().enumerate() {
                    degen_key[p] = key[g as usize];
                }
                table[c] = find(n + 1, &degen_key);
            }
            tables.push(table);
        }
        degens.push(tables);
    }

    let shape = TruncatedSSet::new(trunc, sizes, faces, degens)?;
    Ok(TruncatedNerve {
        poset: poset.clone(),
        trunc,
        shape,
        values,
        mask_orders,
    })
}

fn enumerate_keys(
    nelem: usize,
    leq: &[bool],
    sup_positions: &[Vec<u32>],
    key: &mut Vec<u8>,
    pos: usize,
    stride: usize,
    out: &mut Vec<u8>,
) {
    if pos == stride {
        out.extend_from_slice(key);
        return;
    }
    'candidates: for v in 0..nelem {
        // order-reversing: supersets carry smaller elements
        for &q in &sup_positions[pos] {
            if !leq[key[q as usize] as usize * nelem + v] {
                continue 'candidates;
            }
        }
        key[pos] = v as u8;
        enumerate_keys(nelem, leq, sup_positions, key, pos + 1, stride, out);
    }
}

/// Image of a subset mask under the coface `δ_i` (vertices >= i shift up).
fn delta_mask(t: u32, i: usize) -> u32 {
    let low = t & ((1 << i) - 1);
    let high = (t >> i) << (i + 1);
    low | high
}

/// Image of a subset mask under the codegeneracy `ε_j` (j and j+1 merge).
fn epsilon_mask(t: u32, j: usize) -> u32 {
    let low = t & ((1 << (j + 1)) - 1);
    let high = (t >> (j + 2)) << (j + 1);
    let merged = if (t >> (j + 1)) & 1 == 1 { 1 << j } else { 0 };
    low | high | merged
}

/// Precomposing a diagram with the nerve counit: the labeled simplicial
/// set whose cell labels are the diagram opens at the counit values.
/// Cells get display names when the nerve is small.
pub fn refine_diagram(d: &OpenDiagram, trunc: usize) -> Result<LabeledSSet, NerveError> {
    let nerve = nerve_truncated(d.index(), trunc)?;
    let labels: Vec<Vec<_>> = (0..=trunc)
        .map(|n| {
            (0..nerve.level_size(n) as u32)
                .map(|c| d.open(nerve.counit(n, c)))
                .collect()
        })
        .collect();
    let labeled = LabeledSSet::new(
        nerve.shape.clone(),
        labels,
        d.frame().clone(),
        d.target(),
    )?;
    if nerve.shape.cell_count() <= 10_000 {
        let names: Vec<Vec<String>> = (0..=trunc)
            .map(|n| {
                (0..nerve.level_size(n) as u32)
                    .map(|c| nerve.simplex_name(n, c))
                    .collect()
            })
            .collect();
        Ok(labeled.with_names(names)?)
    } else {
        Ok(labeled)
    }
}

/// A level-wise map of truncated simplicial sets, validated to commute
/// with all faces and degeneracies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialMap {
    pub levels: Vec<Vec<u32>>,
}

impl SimplicialMap {
    pub fn new(
        src: &TruncatedSSet,
        dst: &TruncatedSSet,
        levels: Vec<Vec<u32>>,
    ) -> Result<Self, NerveError> {
        if levels.len() != src.truncation() + 1
            || src.truncation() != dst.truncation()
            || levels
                .iter()
                .zip(src.sizes())
                .any(|(lvl, &sz)| lvl.len() != sz)
            || levels
                .iter()
                .zip(dst.sizes())
                .any(|(lvl, &sz)| lvl.iter().any(|&c| c as usize >= sz))
        {
            return Err(NerveError::MapShapeMismatch);
        }
        for n in 1..=src.truncation() {
            for c in 0..src.size(n) as u32 {
                for i in 0..=n {
                    if dst.face(n, i, levels[n][c as usize]) != levels[n - 1][src.face(n, i, c) as usize]
                    {
                        return Err(NerveError::NotSimplicial { level: n, cell: c });
                    }
                }
            }
        }
        for n in 0..src.truncation() {
            for c in 0..src.size(n) as u32 {
                for j in 0..=n {
                    if dst.degeneracy(n, j, levels[n][c as usize])
                        != levels[n + 1][src.degeneracy(n, j, c) as usize]
                    {
                        return Err(NerveError::NotSimplicial { level: n, cell: c });
                    }
                }
            }
        }
        Ok(SimplicialMap { levels })
    }
}

/// One direction of the nerve adjunction: a simplicial map into the
/// nerve transposes to the assignment of counit values.
pub fn transpose_to_assignment(m: &SimplicialMap, nerve: &TruncatedNerve) -> Vec<Vec<usize>> {
    m.levels
        .iter()
        .enumerate()
        .map(|(n, lvl)| lvl.iter().map(|&c| nerve.counit(n, c)).collect())
        .collect()
}

/// The other direction: an assignment of poset elements to the cells of
/// `k`, monotone along the face/degeneracy preorder, transposes to a
/// simplicial map into the nerve. Rejects non-monotone assignments.
pub fn transpose_from_assignment(
    k: &TruncatedSSet,
    assignment: &[Vec<usize>],
    nerve: &TruncatedNerve,
) -> Result<SimplicialMap, NerveError> {
    if assignment.len() != k.truncation() + 1
        || assignment
            .iter()
            .zip(k.sizes())
            .any(|(lvl, &sz)| lvl.len() != sz)
        || assignment
            .iter()
            .flatten()
            .any(|&v| v >= nerve.poset.len())
    {
        return Err(NerveError::AssignmentShapeMismatch);
    }
    let poset = &nerve.poset;
    // monotone along every operator edge x → d_i x and x → s_j x
    for n in 0..=k.truncation() {
        for c in 0..k.size(n) as u32 {
            let v = assignment[n][c as usize];
            if n >= 1 {
                for i in 0..=n {
                    let w = assignment[n - 1][k.face(n, i, c) as usize];
                    if !poset.le(v, w) {
                        return Err(NerveError::NonMonotoneAssignment { level: n, cell: c });
                    }
                }
            }
            if n < k.truncation() {
                for j in 0..=n {
                    let w = assignment[n + 1][k.degeneracy(n, j, c) as usize];
                    if !poset.le(v, w) {
                        return Err(NerveError::NonMonotoneAssignment { level: n, cell: c });
                    }
                }
            }
        }
    }
    let mut levels = Vec::with_capacity(k.truncation() + 1);
    for n in 0..=k.truncation() {
        let masks = &nerve.mask_orders[n];
        let mut lvl = Vec::with_capacity(k.size(n));
        for c in 0..k.size(n) as u32 {
            // value at T is the assignment at the T-face of the cell
            let key: Vec<u8> = masks
                .iter()
                .map(|&t| {
                    let verts: Vec<usize> =
                        (0..=n).filter(|&b| (t >> b) & 1 == 1).collect();
                    let (lv, sub) = k.apply_injection(n, c, &verts);
                    assignment[lv][sub as usize] as u8
                })
                .collect();
            let idx = nerve
                .find(n, &key)
                .expect("monotone assignments transpose to order-reversing keys");
            lvl.push(idx);
        }
        levels.push(lvl);
    }
    SimplicialMap::new(k, &nerve.shape, levels)
}

/// Checks the slice lemma instance at `i`: the nerve of the coslice
/// `i ↓ I` must match, level by level and compatibly with all operators
/// and counit values, the cells of the nerve of `I` whose counit is
/// above `i`.
pub fn slice_refinement_check(
    i: usize,
    poset: &FinitePoset,
    trunc: usize,
) -> Result<bool, NerveError> {
    if i >= poset.len() {
        return Err(NerveError::ElementOutOfRange(i));
    }
    let full = nerve_truncated(poset, trunc)?;
    let (slice, slice_indices) = poset.upward_slice(i);
    let slice_nerve = nerve_truncated(&slice, trunc)?;
    // translate a slice key to a full-poset key
    let to_full = |key: &[u8]| -> Vec<u8> {
        key.iter().map(|&v| slice_indices[v as usize] as u8).collect()
    };
    let mut match_table: Vec<Vec<u32>> = Vec::with_capacity(trunc + 1);
    for n in 0..=trunc {
        // the qualifying cells of the full nerve, in order
        let qualifying: Vec<u32> = (0..full.level_size(n) as u32)
            .filter(|&c| poset.le(i, full.counit(n, c)))
            .collect();
        if qualifying.len() != slice_nerve.level_size(n) {
            return Ok(false);
        }
        let mut table = Vec::with_capacity(qualifying.len());
        for c in 0..slice_nerve.level_size(n) as u32 {
            let key = to_full(slice_nerve.key(n, c));
            match full.find(n, &key) {
                Some(idx) if poset.le(i, full.counit(n, idx)) => table.push(idx),
                _ => return Ok(false),
            }
        }
        // the translation must hit every qualifying cell exactly once
        let mut sorted = table.clone();
        sorted.sort_unstable();
        if sorted != qualifying {
            return Ok(false);
        }
        match_table.push(table);
    }
    // the identification must commute with faces and degeneracies
    for n in 1..=trunc {
        for c in 0..slice_nerve.level_size(n) as u32 {
            for fi in 0..=n {
                let lhs = match_table[n - 1][slice_nerve.shape.face(n, fi, c) as usize];
                let rhs = full.shape.face(n, fi, match_table[n][c as usize]);
                if lhs != rhs {
                    return Ok(false);
                }
            }
        }
    }
    for n in 0..trunc {
        for c in 0..slice_nerve.level_size(n) as u32 {
            for j in 0..=n {
                let lhs = match_table[n + 1][slice_nerve.shape.degeneracy(n, j, c) as usize];
                let rhs = full.shape.degeneracy(n, j, match_table[n][c as usize]);
                if lhs != rhs {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// One homology group of the normalized chain complex: free rank and
/// torsion coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomologyGroup {
    pub betti: usize,
    pub torsion: Vec<BigUint>,
}

/// Integral homology of the normalized chain complex on nondegenerate
/// cells, in degrees `0..=maxdeg`. Needs `maxdeg <= N - 1` so that the
/// boundary out of degree `maxdeg + 1` is determined by the truncation.
pub fn homology(s: &TruncatedSSet, maxdeg: usize) -> Result<Vec<HomologyGroup>, NerveError> {
    if maxdeg + 1 > s.truncation() && !(s.truncation() == 0 && maxdeg == 0 && s.size(0) == 0) {
        if maxdeg + 1 > s.truncation() {
            return Err(NerveError::MaxDegreeTooLarge {
                maxdeg,
                trunc: s.truncation(),
            });
        }
    }
    // nondegenerate cells and their row numbers per level
    let mut rows: Vec<BTreeMap<u32, u32>> = Vec::with_capacity(maxdeg + 2);
    let mut dims: Vec<usize> = Vec::with_capacity(maxdeg + 2);
    for k in 0..=maxdeg + 1 {
        let cells = s.nondegenerate_cells(k);
        dims.push(cells.len());
        rows.push(cells.iter().enumerate().map(|(r, &c)| (c, r as u32)).collect());
    }

    let mut ranks = vec![0usize; maxdeg + 3];
    let mut torsion: Vec<Vec<BigUint>> = vec![Vec::new(); maxdeg + 2];
    for k in 1..=maxdeg + 1 {
        // streaming over columns: boundaries of nondegenerate k-cells
        let max_rank = (dims[k - 1] - ranks[k - 1]).min(dims[k]);
        let cells: Vec<u32> = rows[k].keys().copied().collect();
        let boundary_of = |cell: u32| -> Vec<(u32, i64)> {
            let mut col: BTreeMap<u32, i64> = BTreeMap::new();
            for i in 0..=k {
                let f = s.face(k, i, cell);
                if let Some(&r) = rows[k - 1].get(&f) {
                    let sign = if i % 2 == 0 { 1 } else { -1 };
                    *col.entry(r).or_insert(0) += sign;
                }
            }
            col.into_iter().filter(|&(_, v)| v != 0).collect()
        };
        let mut reducer = SparseReducer::new();
        let mut fed = vec![false; cells.len()];
        let saturated = |r: &SparseReducer| r.rank() == max_rank && r.all_unit_pivots();
        // first pass: columns whose leading row is free become pivots
        // with no reduction work, which keeps fill-in low
        for (idx, &cell) in cells.iter().enumerate() {
            let col = boundary_of(cell);
            match col.first() {
                Some(&(r, _)) if !reducer.has_pivot(r) => {
                    reducer.add_column(col);
                    fed[idx] = true;
                }
                None => fed[idx] = true,
                _ => {}
            }
            if saturated(&reducer) {
                break;
            }
        }
        if !saturated(&reducer) {
            for (idx, &cell) in cells.iter().enumerate() {
                if fed[idx] {
                    continue;
                }
                reducer.add_column(boundary_of(cell));
                if saturated(&reducer) {
                    break;
                }
            }
        }
        let summary = reducer.finish();
        ranks[k] = summary.rank;
        torsion[k] = summary.nonunit_invariants;
    }

    let groups = (0..=maxdeg)
        .map(|k| HomologyGroup {
            betti: dims[k] - ranks[k] - ranks[k + 1],
            torsion: torsion[k + 1].clone(),
        })
        .collect();
    Ok(groups)
}

struct SnfSummary {
    rank: usize,
    nonunit_invariants: Vec<BigUint>,
}

/// Streaming integer column reduction. Columns are reduced against the
/// accumulated pivots with gcd exchanges (elementary integer column
/// operations, which preserve the Smith normal form). If every pivot
/// ends up a unit the invariant factors are all 1; otherwise the small
/// residual system is finished with a dense bignum Smith reduction.
struct SparseReducer {
    pivots: BTreeMap<u32, Vec<(u32, i64)>>,
    overflowed: bool,
    raw_columns: Vec<Vec<(u32, i64)>>,
}

impl SparseReducer {
    fn new() -> Self {
        SparseReducer {
            pivots: BTreeMap::new(),
            overflowed: false,
            raw_columns: Vec::new(),
        }
    }

    fn rank(&self) -> usize {
        self.pivots.len()
    }

    fn has_pivot(&self, row: u32) -> bool {
        self.pivots.contains_key(&row)
    }

    fn all_unit_pivots(&self) -> bool {
        self.pivots.values().all(|p| p[0].1.abs() == 1)
    }

    fn add_column(&mut self, col: Vec<(u32, i64)>) {
        self.raw_columns.push(col.clone());
        if self.overflowed {
            return;
        }
        let mut col = col;
        loop {
            let Some(&(row, _)) = col.first() else {
                return;
            };
            let Some(pivot) = self.pivots.get_mut(&row) else {
                self.pivots.insert(row, col);
                return;
            };
            // gcd exchange at the shared leading row
            loop {
                let a = col[0].1;
                let b = pivot[0].1;
                let q = a / b;
                if q != 0 {
                    match sparse_axpy(&col, pivot, -q) {
                        Some(c) => col = c,
                        None => {
                            self.overflowed = true;
                            return;
                        }
                    }
                }
                if col.first().map(|&(r, _)| r) != Some(row) {
                    break;
                }
                // remainder is smaller in absolute value; swap roles
                std::mem::swap(&mut col, pivot);
            }
        }
    }

    fn finish(self) -> SnfSummary {
        if self.overflowed {
            // exact fallback on the raw columns
            return dense_snf_summary(&self.raw_columns);
        }
        let rank = self.pivots.len();
        if self.all_unit_pivots() {
            return SnfSummary {
                rank,
                nonunit_invariants: Vec::new(),
            };
        }
        // finish the non-unit residue exactly
        let cols: Vec<Vec<(u32, i64)>> = self.pivots.into_values().collect();
        dense_snf_summary(&cols)
    }
}

/// `x + s*y` for sparse columns sorted by row; `None` on i64 overflow.
fn sparse_axpy(x: &[(u32, i64)], y: &[(u32, i64)], s: i64) -> Option<Vec<(u32, i64)>> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let mut ix = 0;
    let mut iy = 0;
    while ix < x.len() || iy < y.len() {
        let (row, val) = if iy >= y.len() || (ix < x.len() && x[ix].0 < y[iy].0) {
            let e = x[ix];
            ix += 1;
            (e.0, e.1)
        } else if ix >= x.len() || y[iy].0 < x[ix].0 {
            let e = y[iy];
            iy += 1;
            (e.0, e.1.checked_mul(s)?)
        } else {
            let a = x[ix];
            let b = y[iy];
            ix += 1;
            iy += 1;
            (a.0, a.1.checked_add(b.1.checked_mul(s)?)?)
        };
        if val != 0 {
            out.push((row, val));
        }
    }
    Some(out)
}

fn dense_snf_summary(cols: &[Vec<(u32, i64)>]) -> SnfSummary {
    // compact the row space
    let mut row_ids: Vec<u32> = cols.iter().flatten().map(|&(r, _)| r).collect();
    row_ids.sort_unstable();
    row_ids.dedup();
    let row_pos: BTreeMap<u32, usize> = row_ids.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let mut m: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); cols.len()]; row_ids.len()];
    for (j, col) in cols.iter().enumerate() {
        for &(r, v) in col {
            m[row_pos[&r]][j] = BigInt::from(v);
        }
    }
    let diag = dense_snf(m);
    let rank = diag.len();
    let nonunit_invariants = diag
        .into_iter()
        .filter(|d| d.magnitude() > &BigUint::from(1u32))
        .map(|d| d.magnitude().clone())
        .collect();
    SnfSummary {
        rank,
        nonunit_invariants,
    }
}

/// Classical Smith reduction over the integers; returns the nonzero
/// diagonal in divisibility order.
fn dense_snf(mut m: Vec<Vec<BigInt>>) -> Vec<BigInt> {
    let rows = m.len();
    let cols = if rows > 0 { m[0].len() } else { 0 };
    let mut diag = Vec::new();
    let mut k = 0;
    while k < rows.min(cols) {
        // smallest nonzero entry in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in k..rows {
            for j in k..cols {
                if m[i][j].is_zero() {
                    continue;
                }
                if best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        m.swap(k, bi);
        for row in m.iter_mut() {
            row.swap(k, bj);
        }
        let mut clean = true;
        for i in k + 1..rows {
            if m[i][k].is_zero() {
                continue;
            }
            let q = &m[i][k] / &m[k][k];
            if !q.is_zero() {
                for j in k..cols {
                    let t = &m[k][j] * &q;
                    m[i][j] -= t;
                }
            }
            if !m[i][k].is_zero() {
                clean = false;
            }
        }
        for j in k + 1..cols {
            if m[k][j].is_zero() {
                continue;
            }
            let q = &m[k][j] / &m[k][k];
            if !q.is_zero() {
                for i in k..rows {
                    let t = &m[i][k] * &q;
                    m[i][j] -= t;
                }
            }
            if !m[k][j].is_zero() {
                clean = false;
            }
        }
        if !clean {
            continue;
        }
        // divisibility: fold in any entry the pivot does not divide
        let mut fixed = None;
        'scan: for i in k + 1..rows {
            for j in k + 1..cols {
                if !(&m[i][j] % &m[k][k]).is_zero() {
                    fixed = Some(i);
                    break 'scan;
                }
            }
        }
        if let Some(i) = fixed {
            let row: Vec<BigInt> = m[i].clone();
            for (j, v) in row.into_iter().enumerate() {
                m[k][j] += v;
            }
            continue;
        }
        diag.push(m[k][k].abs());
        k += 1;
    }
    diag
}
