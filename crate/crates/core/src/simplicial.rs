//! Truncated simplicial and semisimplicial sets.
//!
//! Cells are anonymous indices per level; face and degeneracy maps are
//! stored as flat tables and every simplicial identity that is defined
//! within the truncation is validated at construction time. The module
//! also provides the subset-poset models of simplices and their
//! boundaries, Eilenberg-Zilber decomposition, boundary-tuple
//! enumeration, and the simplicial envelope of a semisimplicial set.

use std::collections::HashMap;

use thiserror::Error;

use crate::order::{FinitePoset, FinitePreorder};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimplicialError {
    #[error("face table at level {level} index {i} has {got} entries, expected {want}")]
    BadFaceTable {
        level: usize,
        i: usize,
        got: usize,
        want: usize,
    },
    #[error("degeneracy table at level {level} index {j} has {got} entries, expected {want}")]
    BadDegeneracyTable {
        level: usize,
        j: usize,
        got: usize,
        want: usize,
    },
    #[error("cell index out of range at level {level}")]
    CellOutOfRange { level: usize },
    #[error("simplicial identity {identity} fails at level {level}, cell {cell}")]
    IdentityViolation {
        identity: &'static str,
        level: usize,
        cell: u32,
    },
    #[error("Eilenberg-Zilber decomposition is inconsistent at level {level}, cell {cell}")]
    EzInconsistent { level: usize, cell: u32 },
    #[error("level {0} exceeds the truncation {1}")]
    LevelOutOfRange(usize, usize),
}

/// An order-preserving surjection `[n] ↠ [k]`, stored by its values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Surjection {
    values: Vec<u8>,
}

impl Surjection {
    pub fn new(values: Vec<u8>) -> Self {
        assert!(!values.is_empty(), "surjection needs an inhabited domain");
        for w in values.windows(2) {
            assert!(
                w[0] == w[1] || w[0] + 1 == w[1],
                "values must be monotone and surjective"
            );
        }
        assert_eq!(values[0], 0, "surjection must start at 0");
        Surjection { values }
    }

    pub fn identity(n: usize) -> Self {
        Surjection {
            values: (0..=n as u8).collect(),
        }
    }

    /// Domain dimension `n` of `[n] ↠ [k]`.
    pub fn dom(&self) -> usize {
        self.values.len() - 1
    }

    /// Codomain dimension `k` of `[n] ↠ [k]`.
    pub fn cod(&self) -> usize {
        *self.values.last().unwrap() as usize
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn is_identity(&self) -> bool {
        self.dom() == self.cod()
    }

    /// Precompose with the elementary degeneracy repeating position `j`.
    pub fn after_merge(&self, j: usize) -> Surjection {
        let mut values = Vec::with_capacity(self.values.len() + 1);
        for (a, &v) in self.values.iter().enumerate() {
            values.push(v);
            if a == j {
                values.push(v);
            }
        }
        Surjection { values }
    }
}

/// All order-preserving surjections `[n] ↠ [k]`, in lexicographic order.
pub fn surjections(n: usize, k: usize) -> Vec<Surjection> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut values = vec![0u8; n + 1];
    fn go(values: &mut Vec<u8>, pos: usize, n: usize, k: usize, out: &mut Vec<Surjection>) {
        if pos == n + 1 {
            if values[n] == k as u8 {
                out.push(Surjection {
                    values: values.clone(),
                });
            }
            return;
        }
        if pos == 0 {
            values[0] = 0;
            go(values, 1, n, k, out);
            return;
        }
        for step in 0..=1u8 {
            let v = values[pos - 1] + step;
            if v as usize <= k && (v as usize) + (n - pos) >= k {
                values[pos] = v;
                go(values, pos + 1, n, k, out);
            }
        }
    }
    go(&mut values, 0, n, k, &mut out);
    out
}

/// A simplicial set truncated at level `N`: cells for `0 <= n <= N`, face
/// maps `d_i` for `n >= 1`, degeneracy maps `s_j` for `n < N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSSet {
    trunc: usize,
    sizes: Vec<usize>,
    /// `faces[n][i][c]` is `d_i c` for a cell `c` at level `n >= 1`.
    faces: Vec<Vec<Vec<u32>>>,
    /// `degens[n][j][c]` is `s_j c` for a cell `c` at level `n < trunc`.
    degens: Vec<Vec<Vec<u32>>>,
    /// Smallest `j` with a preimage under `s_j`, per cell.
    degen_witness: Vec<Vec<Option<(u8, u32)>>>,
}

impl TruncatedSSet {
    pub fn new(
        trunc: usize,
        sizes: Vec<usize>,
        faces: Vec<Vec<Vec<u32>>>,
        degens: Vec<Vec<Vec<u32>>>,
    ) -> Result<Self, SimplicialError> {
        assert_eq!(sizes.len(), trunc + 1);
        assert_eq!(faces.len(), trunc + 1);
        assert_eq!(degens.len(), trunc);
        let mut sset = TruncatedSSet {
            trunc,
            sizes,
            faces,
            degens,
            degen_witness: Vec::new(),
        };
        sset.validate_tables()?;
        sset.validate_identities()?;
        sset.build_witnesses();
        Ok(sset)
    }

    fn validate_tables(&self) -> Result<(), SimplicialError> {
        for n in 0..=self.trunc {
            let want_faces = if n == 0 { 0 } else { n + 1 };
            if self.faces[n].len() != want_faces {
                return Err(SimplicialError::BadFaceTable {
                    level: n,
                    i: 0,
                    got: self.faces[n].len(),
                    want: want_faces,
                });
            }
            for (i, table) in self.faces[n].iter().enumerate() {
                if table.len() != self.sizes[n] {
                    return Err(SimplicialError::BadFaceTable {
                        level: n,
                        i,
                        got: table.len(),
                        want: self.sizes[n],
                    });
                }
                if table.iter().any(|&c| c as usize >= self.sizes[n - 1]) {
                    return Err(SimplicialError::CellOutOfRange { level: n - 1 });
                }
            }
        }
        for n in 0..self.trunc {
            if self.degens[n].len() != n + 1 {
                return Err(SimplicialError::BadDegeneracyTable {
                    level: n,
                    j: 0,
                    got: self.degens[n].len(),
                    want: n + 1,
                });
            }
            for (j, table) in self.degens[n].iter().enumerate() {
                if table.len() != self.sizes[n] {
                    return Err(SimplicialError::BadDegeneracyTable {
                        level: n,
                        j,
                        got: table.len(),
                        want: self.sizes[n],
                    });
                }
                if table.iter().any(|&c| c as usize >= self.sizes[n + 1]) {
                    return Err(SimplicialError::CellOutOfRange { level: n + 1 });
                }
            }
        }
        Ok(())
    }

    fn validate_identities(&self) -> Result<(), SimplicialError> {
        // d_i d_j = d_{j-1} d_i for i < j
        for n in 2..=self.trunc {
            for j in 1..=n {
                for i in 0..j {
                    for c in 0..self.sizes[n] as u32 {
                        let a = self.faces[n - 1][i][self.faces[n][j][c as usize] as usize];
                        let b = self.faces[n - 1][j - 1][self.faces[n][i][c as usize] as usize];
                        if a != b {
                            return Err(SimplicialError::IdentityViolation {
                                identity: "d_i d_j = d_{j-1} d_i",
                                level: n,
                                cell: c,
                            });
                        }
                    }
                }
            }
        }
        // s_i s_j = s_{j+1} s_i for i <= j
        for n in 0..self.trunc {
            if n + 2 > self.trunc {
                break;
            }
            for j in 0..=n {
                for i in 0..=j {
                    for c in 0..self.sizes[n] as u32 {
                        let a = self.degens[n + 1][i][self.degens[n][j][c as usize] as usize];
                        let b = self.degens[n + 1][j + 1][self.degens[n][i][c as usize] as usize];
                        if a != b {
                            return Err(SimplicialError::IdentityViolation {
                                identity: "s_i s_j = s_{j+1} s_i",
                                level: n,
                                cell: c,
                            });
                        }
                    }
                }
            }
        }
        // mixed identities d_i s_j at each level where s_j is defined
        for n in 0..self.trunc {
            for j in 0..=n {
                for c in 0..self.sizes[n] as u32 {
                    let sj = self.degens[n][j][c as usize] as usize;
                    for i in 0..=n + 1 {
                        let lhs = self.faces[n + 1][i][sj];
                        let ok = if i == j || i == j + 1 {
                            lhs == c
                        } else if i < j {
                            // d_i s_j = s_{j-1} d_i
                            lhs == self.degens[n - 1][j - 1][self.faces[n][i][c as usize] as usize]
                        } else {
                            // i > j+1: d_i s_j = s_j d_{i-1}
                            lhs == self.degens[n - 1][j][self.faces[n][i - 1][c as usize] as usize]
                        };
                        if !ok {
                            return Err(SimplicialError::IdentityViolation {
                                identity: "d_i s_j",
                                level: n,
                                cell: c,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn build_witnesses(&mut self) {
        let mut witness: Vec<Vec<Option<(u8, u32)>>> =
            self.sizes.iter().map(|&s| vec![None; s]).collect();
        for n in 0..self.trunc {
            for j in 0..=n {
                for y in 0..self.sizes[n] as u32 {
                    let img = self.degens[n][j][y as usize] as usize;
                    if witness[n + 1][img].is_none() {
                        witness[n + 1][img] = Some((j as u8, y));
                    }
                }
            }
        }
        self.degen_witness = witness;
    }

    pub fn truncation(&self) -> usize {
        self.trunc
    }

    pub fn size(&self, n: usize) -> usize {
        self.sizes[n]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn cell_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn face(&self, n: usize, i: usize, c: u32) -> u32 {
        self.faces[n][i][c as usize]
    }

    pub fn degeneracy(&self, n: usize, j: usize, c: u32) -> u32 {
        self.degens[n][j][c as usize]
    }

    pub fn is_degenerate(&self, n: usize, c: u32) -> bool {
        self.degen_witness[n][c as usize].is_some()
    }

    pub fn nondegenerate_cells(&self, n: usize) -> Vec<u32> {
        (0..self.sizes[n] as u32)
            .filter(|&c| !self.is_degenerate(n, c))
            .collect()
    }

    /// The unique decomposition of a cell as a degeneracy of a
    /// nondegenerate cell: returns `(core_level, core, surjection)` with
    /// `c = core · surj`.
    pub fn ez_decompose(
        &self,
        n: usize,
        c: u32,
    ) -> Result<(usize, u32, Surjection), SimplicialError> {
        let mut level = n;
        let mut cell = c;
        let mut surj = Surjection::identity(n);
        while let Some((j, y)) = self.degen_witness[level][cell as usize] {
            // cell = s_j y, so the composite surjection merges j, j+1
            surj = surj.merge_codomain(j as usize);
            level -= 1;
            cell = y;
        }
        // reapplying the degeneracies must reproduce the cell
        let rebuilt = self.apply_surjection(level, cell, &surj);
        if rebuilt != (n, c) {
            return Err(SimplicialError::EzInconsistent { level: n, cell: c });
        }
        Ok((level, cell, surj))
    }

    /// Applies the simplicial operator of an injective monotone map
    /// `δ: [k] → [n]` (given by its image values) to a cell at level `n`.
    pub fn apply_injection(&self, n: usize, c: u32, image: &[usize]) -> (usize, u32) {
        debug_assert!(image.windows(2).all(|w| w[0] < w[1]));
        let mut cell = c;
        let mut level = n;
        // remove skipped vertices from the top down
        for v in (0..=n).rev() {
            if !image.contains(&v) {
                cell = self.faces[level][v][cell as usize];
                level -= 1;
            }
        }
        (level, cell)
    }

    /// Applies the operator of a surjection `σ: [m] ↠ [k]` to a cell at
    /// level `k`, producing a cell at level `m`.
    pub fn apply_surjection(&self, k: usize, c: u32, surj: &Surjection) -> (usize, u32) {
        debug_assert_eq!(surj.cod(), k);
        fn go(sset: &TruncatedSSet, level: usize, cell: u32, values: &[u8]) -> (usize, u32) {
            let m = values.len() - 1;
            if m == *values.last().unwrap() as usize {
                return (level, cell);
            }
            let a = values
                .windows(2)
                .position(|w| w[0] == w[1])
                .expect("non-identity surjection repeats a value");
            let mut shorter = values.to_vec();
            shorter.remove(a + 1);
            let (lvl, inner) = go(sset, level, cell, &shorter);
            (lvl + 1, sset.degens[lvl][a][inner as usize])
        }
        go(self, k, c, surj.values())
    }

    /// Applies an arbitrary monotone operator `α: [m] → [n]` to a cell at
    /// level `n`, factoring through image and surjection.
    pub fn apply_monotone(&self, n: usize, c: u32, op: &[usize]) -> (usize, u32) {
        debug_assert!(op.windows(2).all(|w| w[0] <= w[1]));
        debug_assert!(op.iter().all(|&v| v <= n));
        let mut image: Vec<usize> = op.to_vec();
        image.dedup();
        let (k, core) = self.apply_injection(n, c, &image);
        let values: Vec<u8> = op
            .iter()
            .map(|v| image.iter().position(|w| w == v).unwrap() as u8)
            .collect();
        let surj = Surjection::new(values);
        if surj.is_identity() {
            return (k, core);
        }
        self.apply_surjection(k, core, &surj)
    }

    /// The boundary of a cell as the tuple `(d_0 c, …, d_n c)`.
    pub fn face_vector(&self, n: usize, c: u32) -> Vec<u32> {
        (0..=n).map(|i| self.faces[n][i][c as usize]).collect()
    }

    /// Streams every compatible boundary tuple at level `n`: tuples
    /// `(x_0, …, x_n)` of `(n-1)`-cells with `d_i x_j = d_{j-1} x_i` for
    /// `i < j` (the maps `∂Δⁿ → S`). For `n = 0`, the single empty tuple.
    pub fn for_each_boundary_tuple<F: FnMut(&[u32])>(&self, n: usize, visit: &mut F) {
        assert!(n <= self.trunc);
        if n == 0 {
            visit(&[]);
            return;
        }
        if n == 1 {
            // vertices have no faces, so any ordered pair qualifies
            for a in 0..self.sizes[0] as u32 {
                for b in 0..self.sizes[0] as u32 {
                    visit(&[a, b]);
                }
            }
            return;
        }
        let lower = n - 1;
        // cells at level n-1 sorted by face vector, so prefix constraints
        // become contiguous ranges
        let mut order: Vec<u32> = (0..self.sizes[lower] as u32).collect();
        order.sort_by(|&a, &b| {
            (0..=lower)
                .map(|i| self.faces[lower][i][a as usize])
                .cmp((0..=lower).map(|i| self.faces[lower][i][b as usize]))
        });
        let mut tuple = vec![0u32; n + 1];
        self.boundary_rec(n, 0, &order, &mut tuple, visit);
    }

    fn boundary_rec<F: FnMut(&[u32])>(
        &self,
        n: usize,
        j: usize,
        order: &[u32],
        tuple: &mut Vec<u32>,
        visit: &mut F,
    ) {
        let lower = n - 1;
        if j == n + 1 {
            visit(tuple);
            return;
        }
        if j == 0 {
            for c in 0..self.sizes[lower] as u32 {
                tuple[0] = c;
                self.boundary_rec(n, 1, order, tuple, visit);
            }
            return;
        }
        // x_j must have faces d_i x_j = d_{j-1} x_i for i < j
        let prefix: Vec<u32> = (0..j)
            .map(|i| self.faces[lower][j - 1][tuple[i] as usize])
            .collect();
        let lo = order.partition_point(|&c| {
            (0..j)
                .map(|i| self.faces[lower][i][c as usize])
                .lt(prefix.iter().copied())
        });
        let hi = order.partition_point(|&c| {
            (0..j)
                .map(|i| self.faces[lower][i][c as usize])
                .le(prefix.iter().copied())
        });
        for &c in &order[lo..hi] {
            tuple[j] = c;
            self.boundary_rec(n, j + 1, order, tuple, visit);
        }
    }

    /// Materialized form of [`Self::for_each_boundary_tuple`].
    pub fn boundary_tuples(&self, n: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        self.for_each_boundary_tuple(n, &mut |t| out.push(t.to_vec()));
        out
    }

    /// The standard simplex `Δⁿ` truncated at `trunc`.
    pub fn standard_simplex(n: usize, trunc: usize) -> TruncatedSSet {
        let (semi, _) = delta_plus(n, trunc.min(n));
        simplicial_envelope(&semi, trunc).sset
    }
}

impl Surjection {
    /// Postcompose with the elementary surjection `ε_j` merging `j` and
    /// `j+1` in the codomain.
    fn merge_codomain(&self, j: usize) -> Surjection {
        let values = self
            .values
            .iter()
            .map(|&v| if (v as usize) <= j { v } else { v - 1 })
            .collect();
        Surjection { values }
    }
}

/// A semisimplicial set truncated at level `N`: face maps only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSemiSSet {
    trunc: usize,
    sizes: Vec<usize>,
    faces: Vec<Vec<Vec<u32>>>,
}

impl TruncatedSemiSSet {
    pub fn new(
        trunc: usize,
        sizes: Vec<usize>,
        faces: Vec<Vec<Vec<u32>>>,
    ) -> Result<Self, SimplicialError> {
        assert_eq!(sizes.len(), trunc + 1);
        assert_eq!(faces.len(), trunc + 1);
        for n in 1..=trunc {
            if faces[n].len() != n + 1 {
                return Err(SimplicialError::BadFaceTable {
                    level: n,
                    i: 0,
                    got: faces[n].len(),
                    want: n + 1,
                });
            }
            for (i, table) in faces[n].iter().enumerate() {
                if table.len() != sizes[n] {
                    return Err(SimplicialError::BadFaceTable {
                        level: n,
                        i,
                        got: table.len(),
                        want: sizes[n],
                    });
                }
                if table.iter().any(|&c| c as usize >= sizes[n - 1]) {
                    return Err(SimplicialError::CellOutOfRange { level: n - 1 });
                }
            }
        }
        for n in 2..=trunc {
            for j in 1..=n {
                for i in 0..j {
                    for c in 0..sizes[n] {
                        let a = faces[n - 1][i][faces[n][j][c] as usize];
                        let b = faces[n - 1][j - 1][faces[n][i][c] as usize];
                        if a != b {
                            return Err(SimplicialError::IdentityViolation {
                                identity: "d_i d_j = d_{j-1} d_i",
                                level: n,
                                cell: c as u32,
                            });
                        }
                    }
                }
            }
        }
        Ok(TruncatedSemiSSet {
            trunc,
            sizes,
            faces,
        })
    }

    pub fn truncation(&self) -> usize {
        self.trunc
    }

    pub fn size(&self, n: usize) -> usize {
        self.sizes[n]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn face(&self, n: usize, i: usize, c: u32) -> u32 {
        self.faces[n][i][c as usize]
    }

    pub fn apply_injection(&self, n: usize, c: u32, image: &[usize]) -> (usize, u32) {
        let mut cell = c;
        let mut level = n;
        for v in (0..=n).rev() {
            if !image.contains(&v) {
                cell = self.faces[level][v][cell as usize];
                level -= 1;
            }
        }
        (level, cell)
    }
}

/// `Δ₊ⁿ`: cells at level `k` are the `(k+1)`-subsets of `{0..n}`.
/// Returns the semisimplicial set and the subset masks per level.
pub fn delta_plus(n: usize, trunc: usize) -> (TruncatedSemiSSet, Vec<Vec<u32>>) {
    subsets_semisimplicial(n, trunc, false)
}

/// `∂Δ₊ⁿ`: as [`delta_plus`] but without the full subset.
pub fn boundary_delta_plus(n: usize, trunc: usize) -> (TruncatedSemiSSet, Vec<Vec<u32>>) {
    subsets_semisimplicial(n, trunc, true)
}

fn subsets_semisimplicial(
    n: usize,
    trunc: usize,
    proper_only: bool,
) -> (TruncatedSemiSSet, Vec<Vec<u32>>) {
    let full: u32 = ((1u64 << (n + 1)) - 1) as u32;
    let mut masks: Vec<Vec<u32>> = vec![Vec::new(); trunc + 1];
    for m in 1..=full {
        if proper_only && m == full {
            continue;
        }
        let k = m.count_ones() as usize - 1;
        if k <= trunc {
            masks[k].push(m);
        }
    }
    let sizes: Vec<usize> = masks.iter().map(|v| v.len()).collect();
    let mut faces: Vec<Vec<Vec<u32>>> = vec![Vec::new(); trunc + 1];
    for k in 1..=trunc {
        let mut tables = vec![vec![0u32; sizes[k]]; k + 1];
        for (c, &mask) in masks[k].iter().enumerate() {
            let verts: Vec<u32> = (0..=n as u32).filter(|&v| (mask >> v) & 1 == 1).collect();
            for (i, &v) in verts.iter().enumerate() {
                let sub = mask & !(1 << v);
                let idx = masks[k - 1]
                    .binary_search(&sub)
                    .expect("face subset present");
                tables[i][c] = idx as u32;
            }
        }
        faces[k] = tables;
    }
    let sset =
        TruncatedSemiSSet::new(trunc, sizes, faces).expect("subset faces satisfy identities");
    (sset, masks)
}

/// A cell of a simplicial envelope: a core cell of the underlying
/// semisimplicial set together with the degenerating surjection.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnvelopeCell {
    pub core_level: usize,
    pub core: u32,
    pub surj: Surjection,
}

/// A simplicial envelope: the simplicial set freely generated by a
/// semisimplicial set, with its defining cell decomposition retained.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub sset: TruncatedSSet,
    pub cells: Vec<Vec<EnvelopeCell>>,
}

impl Envelope {
    pub fn cell_index(&self, n: usize, cell: &EnvelopeCell) -> Option<u32> {
        self.cells[n]
            .iter()
            .position(|c| c == cell)
            .map(|i| i as u32)
    }
}

/// Left Kan extension of a semisimplicial set along `Δ₊ ⊂ Δ`: level-`n`
/// cells are pairs (core cell of `g`, surjection), faces and degeneracies
/// act by factoring composite operators through their image.
pub fn simplicial_envelope(g: &TruncatedSemiSSet, trunc: usize) -> Envelope {
    let mut cells: Vec<Vec<EnvelopeCell>> = Vec::with_capacity(trunc + 1);
    let mut index: Vec<HashMap<EnvelopeCell, u32>> = Vec::with_capacity(trunc + 1);
    for m in 0..=trunc {
        let mut level_cells = Vec::new();
        for k in 0..=m.min(g.truncation()) {
            for core in 0..g.size(k) as u32 {
                for surj in surjections(m, k) {
                    level_cells.push(EnvelopeCell {
                        core_level: k,
                        core,
                        surj,
                    });
                }
            }
        }
        let mut map = HashMap::with_capacity(level_cells.len());
        for (i, c) in level_cells.iter().enumerate() {
            map.insert(c.clone(), i as u32);
        }
        cells.push(level_cells);
        index.push(map);
    }
    let sizes: Vec<usize> = cells.iter().map(|v| v.len()).collect();

    let mut faces: Vec<Vec<Vec<u32>>> = vec![Vec::new(); trunc + 1];
    for m in 1..=trunc {
        let mut tables = vec![vec![0u32; sizes[m]]; m + 1];
        for (c, cell) in cells[m].iter().enumerate() {
            for i in 0..=m {
                // composite σ ∘ δ_i : [m-1] -> [core_level]
                let composite: Vec<usize> = (0..m)
                    .map(|a| cell.surj.values()[if a < i { a } else { a + 1 }] as usize)
                    .collect();
                let mut image = composite.clone();
                image.dedup();
                let (k2, core2) = g.apply_injection(cell.core_level, cell.core, &image);
                debug_assert_eq!(k2, image.len() - 1);
                let values: Vec<u8> = composite
                    .iter()
                    .map(|v| image.iter().position(|w| w == v).unwrap() as u8)
                    .collect();
                let face_cell = EnvelopeCell {
                    core_level: k2,
                    core: core2,
                    surj: Surjection::new(values),
                };
                tables[i][c] = index[m - 1][&face_cell];
            }
        }
        faces[m] = tables;
    }

    let mut degens: Vec<Vec<Vec<u32>>> = Vec::with_capacity(trunc);
    for m in 0..trunc {
        let mut tables = vec![vec![0u32; sizes[m]]; m + 1];
        for (c, cell) in cells[m].iter().enumerate() {
            for j in 0..=m {
                let degen_cell = EnvelopeCell {
                    core_level: cell.core_level,
                    core: cell.core,
                    surj: cell.surj.after_merge(j),
                };
                tables[j][c] = index[m + 1][&degen_cell];
            }
        }
        degens.push(tables);
    }

    let sset = TruncatedSSet::new(trunc, sizes, faces, degens)
        .expect("envelope construction satisfies the simplicial identities");
    Envelope { sset, cells }
}

/// The poset of inhabited subsets of `{0..n}` under reverse inclusion:
/// the category of nondegenerate simplices of `Δⁿ`. Elements are ordered
/// by decreasing size, then by mask, so the full subset comes first.
#[derive(Debug, Clone)]
pub struct SubsetPosetModel {
    pub n: usize,
    pub poset: FinitePoset,
    pub masks: Vec<u32>,
    /// Indices of the size-`n` subsets (the facets of `Δⁿ`).
    pub facets: Vec<usize>,
}

/// Canonical enumeration of inhabited subsets of `{0..n}`: decreasing
/// popcount, then increasing mask. Returns the masks and a position
/// lookup indexed by mask.
pub fn subset_rank_order(n: usize) -> (Vec<u32>, Vec<u32>) {
    let full = ((1u64 << (n + 1)) - 1) as u32;
    let mut masks: Vec<u32> = (1..=full).collect();
    masks.sort_unstable_by_key(|m| (std::cmp::Reverse(m.count_ones()), *m));
    let mut pos = vec![u32::MAX; full as usize + 1];
    for (i, &m) in masks.iter().enumerate() {
        pos[m as usize] = i as u32;
    }
    (masks, pos)
}

fn subset_model(n: usize, proper_only: bool) -> SubsetPosetModel {
    let (mut masks, _) = subset_rank_order(n);
    if proper_only {
        masks.retain(|&m| m != ((1u64 << (n + 1)) - 1) as u32);
    }
    let names: Vec<String> = masks.iter().map(|&m| subset_name(m, n)).collect();
    let sz = masks.len();
    let mut leq = vec![false; sz * sz];
    for a in 0..sz {
        for b in 0..sz {
            // reverse inclusion: T <= T' iff T ⊇ T'
            leq[a * sz + b] = masks[b] & !masks[a] == 0;
        }
    }
    let poset = FinitePoset::new(names, leq).expect("reverse inclusion is a partial order");
    let facets = (0..sz)
        .filter(|&i| masks[i].count_ones() as usize == n)
        .collect();
    SubsetPosetModel {
        n,
        poset,
        masks,
        facets,
    }
}

fn subset_name(mask: u32, n: usize) -> String {
    let verts: Vec<String> = (0..=n)
        .filter(|&v| (mask >> v) & 1 == 1)
        .map(|v| v.to_string())
        .collect();
    format!("{{{}}}", verts.join(","))
}

/// The subset-poset model of `∫₊Δ₊ⁿ`: all inhabited subsets, with the
/// full subset as unique minimum.
pub fn simplex_subposet(n: usize) -> SubsetPosetModel {
    subset_model(n, false)
}

/// The subset-poset model of `∫₊∂Δ₊ⁿ`: inhabited proper subsets, with
/// the facets flagged. For `n = 0` the poset is empty.
pub fn boundary_subposet(n: usize) -> SubsetPosetModel {
    subset_model(n, true)
}

/// The homotopy preorder of the truncated category of simplices: objects
/// are all cells, with `x <= y` iff `y` is the image of `x` under some
/// composite of faces and degeneracies.
pub fn simplex_category_preorder(s: &TruncatedSSet) -> FinitePreorder {
    let total: usize = s.sizes().iter().sum();
    let offset: Vec<usize> = s
        .sizes()
        .iter()
        .scan(0, |acc, &sz| {
            let o = *acc;
            *acc += sz;
            Some(o)
        })
        .collect();
    let names: Vec<String> = (0..=s.truncation())
        .flat_map(|n| (0..s.size(n)).map(move |c| format!("c{n}_{c}")))
        .collect();
    let mut rel = vec![false; total * total];
    for i in 0..total {
        rel[i * total + i] = true;
    }
    for n in 0..=s.truncation() {
        for c in 0..s.size(n) {
            let from = offset[n] + c;
            if n >= 1 {
                for i in 0..=n {
                    let to = offset[n - 1] + s.face(n, i, c as u32) as usize;
                    rel[from * total + to] = true;
                }
            }
            if n < s.truncation() {
                for j in 0..=n {
                    let to = offset[n + 1] + s.degeneracy(n, j, c as u32) as usize;
                    rel[from * total + to] = true;
                }
            }
        }
    }
    for k in 0..total {
        for i in 0..total {
            if rel[i * total + k] {
                for j in 0..total {
                    if rel[k * total + j] {
                        rel[i * total + j] = true;
                    }
                }
            }
        }
    }
    FinitePreorder::new(names, rel).expect("closure of a reflexive relation")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::preorder_to_poset;

    #[test]
    fn surjection_enumeration() {
        assert_eq!(surjections(1, 0).len(), 1);
        assert_eq!(surjections(2, 1).len(), 2);
        assert_eq!(surjections(2, 0).len(), 1);
        assert_eq!(surjections(3, 1).len(), 3);
        assert_eq!(surjections(1, 1).len(), 1);
        assert!(surjections(1, 2).is_empty());
    }

    #[test]
    fn subset_posets() {
        let s0 = simplex_subposet(0);
        assert_eq!(s0.poset.len(), 1);

        let s1 = simplex_subposet(1);
        assert_eq!(s1.poset.len(), 3);
        let full = s1.poset.index_of("{0,1}").unwrap();
        assert_eq!(s1.poset.minimal_elements(), vec![full]);
        assert!(s1.poset.le(full, s1.poset.index_of("{0}").unwrap()));
        assert!(s1.poset.le(full, s1.poset.index_of("{1}").unwrap()));

        let s2 = simplex_subposet(2);
        assert_eq!(s2.poset.len(), 7);

        let b0 = boundary_subposet(0);
        assert!(b0.poset.is_empty());

        let b1 = boundary_subposet(1);
        assert_eq!(b1.poset.len(), 2);
        assert!(!b1.poset.comparable(0, 1));

        let b2 = boundary_subposet(2);
        assert_eq!(b2.poset.len(), 6);
        assert_eq!(b2.facets.len(), 3);
        let facet_set: std::collections::BTreeSet<usize> = b2.facets.iter().copied().collect();
        assert!(b2.poset.is_zero_coinitial(&facet_set));
    }

    #[test]
    fn simplex_subposet_is_cone_of_boundary() {
        for n in 1..=3 {
            let (cone, _) = boundary_subposet(n).poset.left_cone().unwrap();
            assert!(simplex_subposet(n).poset.is_isomorphic_to(&cone), "n={n}");
        }
    }

    #[test]
    fn standard_simplex_counts() {
        // Δ¹ at truncation 2: monotone maps [k] -> [1] per level
        let d1 = TruncatedSSet::standard_simplex(1, 2);
        assert_eq!(d1.sizes(), &[2, 3, 4]);
        // Δ⁰: exactly one cell per level
        let d0 = TruncatedSSet::standard_simplex(0, 3);
        assert_eq!(d0.sizes(), &[1, 1, 1, 1]);
    }

    #[test]
    fn envelope_of_boundary_is_discrete_on_vertices() {
        let (b1, _) = boundary_delta_plus(1, 1);
        let env = simplicial_envelope(&b1, 2);
        assert_eq!(env.sset.sizes(), &[2, 2, 2]);
        for n in 1..=2 {
            for c in 0..env.sset.size(n) as u32 {
                assert!(env.sset.is_degenerate(n, c));
            }
        }
    }

    #[test]
    fn ez_decomposition() {
        let d1 = TruncatedSSet::standard_simplex(1, 2);
        for n in 0..=2 {
            for c in 0..d1.size(n) as u32 {
                let (k, core, surj) = d1.ez_decompose(n, c).unwrap();
                if !d1.is_degenerate(n, c) {
                    assert_eq!((k, core), (n, c));
                    assert!(surj.is_identity());
                } else {
                    assert!(!d1.is_degenerate(k, core));
                    assert_eq!(d1.apply_surjection(k, core, &surj), (n, c));
                }
            }
        }
        // s_0 v decomposes as (v, [1] ↠ [0])
        let v = 0u32;
        let s0v = d1.degeneracy(0, 0, v);
        let (k, core, surj) = d1.ez_decompose(1, s0v).unwrap();
        assert_eq!((k, core), (0, v));
        assert_eq!(surj.values(), &[0, 0]);
    }

    #[test]
    fn ez_double_degeneracy() {
        // oracle: s_1 s_0 v must decompose through the unique [2] ↠ [0]
        let d0 = TruncatedSSet::standard_simplex(0, 2);
        let v = 0u32;
        let s0v = d0.degeneracy(0, 0, v);
        let s1s0v = d0.degeneracy(1, 1, s0v);
        let (k, core, surj) = d0.ez_decompose(2, s1s0v).unwrap();
        assert_eq!((k, core), (0, v));
        assert_eq!(surj.values(), &[0, 0, 0]);
    }

    #[test]
    fn ez_is_bijective_with_pairs() {
        // cells at level n biject with (nondegenerate k-cell, [n] ↠ [k])
        let d2 = TruncatedSSet::standard_simplex(2, 3);
        for n in 0..=3usize {
            let mut seen = std::collections::HashSet::new();
            for c in 0..d2.size(n) as u32 {
                let (k, core, surj) = d2.ez_decompose(n, c).unwrap();
                assert!(seen.insert((k, core, surj.values().to_vec())));
            }
            let expected: usize = (0..=n)
                .map(|k| d2.nondegenerate_cells(k).len() * surjections(n, k).len())
                .sum();
            assert_eq!(seen.len(), expected, "level {n}");
        }
    }

    #[test]
    fn boundary_tuples_level_zero_and_one() {
        let d1 = TruncatedSSet::standard_simplex(1, 2);
        assert_eq!(d1.boundary_tuples(0), vec![Vec::<u32>::new()]);
        // ordered pairs of the two vertices: no constraint at n = 1
        assert_eq!(d1.boundary_tuples(1).len(), 4);
    }

    #[test]
    fn boundary_tuples_single_vertex() {
        let d0 = TruncatedSSet::standard_simplex(0, 2);
        assert_eq!(d0.boundary_tuples(1), vec![vec![0, 0]]);
        assert_eq!(d0.boundary_tuples(2), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn boundary_tuples_satisfy_compatibility() {
        let d2 = TruncatedSSet::standard_simplex(2, 3);
        for n in 2..=3usize {
            let tuples = d2.boundary_tuples(n);
            // brute-force oracle over all raw tuples
            let m = d2.size(n - 1) as u32;
            let mut expected = 0usize;
            let mut raw = vec![0u32; n + 1];
            fn rec(
                s: &TruncatedSSet,
                n: usize,
                pos: usize,
                m: u32,
                raw: &mut Vec<u32>,
                count: &mut usize,
            ) {
                if pos == n + 1 {
                    let ok = (0..n + 1).all(|j| {
                        (0..j).all(|i| s.face(n - 1, i, raw[j]) == s.face(n - 1, j - 1, raw[i]))
                    });
                    if ok {
                        *count += 1;
                    }
                    return;
                }
                for c in 0..m {
                    raw[pos] = c;
                    rec(s, n, pos + 1, m, raw, count);
                }
            }
            rec(&d2, n, 0, m, &mut raw, &mut expected);
            assert_eq!(tuples.len(), expected, "level {n}");
        }
    }

    #[test]
    fn envelope_counts_for_delta1() {
        // Δ¹₊ at level 1 of the envelope: the edge plus two degenerate
        // vertices
        let (g, _) = delta_plus(1, 1);
        let env = simplicial_envelope(&g, 1);
        assert_eq!(env.sset.size(1), 3);
        assert_eq!(env.sset.nondegenerate_cells(1).len(), 1);
    }

    #[test]
    fn envelope_ez_returns_defining_pair() {
        let (g, _) = delta_plus(2, 2);
        let env = simplicial_envelope(&g, 3);
        for n in 0..=3usize {
            for (c, cell) in env.cells[n].iter().enumerate() {
                let (k, core, surj) = env.sset.ez_decompose(n, c as u32).unwrap();
                assert_eq!(k, cell.core_level);
                // the core, as an envelope cell, is the defining core with
                // the identity surjection
                let representative = EnvelopeCell {
                    core_level: cell.core_level,
                    core: cell.core,
                    surj: Surjection::identity(cell.core_level),
                };
                assert_eq!(Some(core), env.cell_index(k, &representative));
                assert_eq!(&surj, &cell.surj);
            }
        }
    }

    #[test]
    fn simplex_category_quotient_of_delta1() {
        // h₀ of ∫Δ¹ truncated at 2 quotients to the subset poset of Δ¹
        let d1 = TruncatedSSet::standard_simplex(1, 2);
        let pre = simplex_category_preorder(&d1);
        let quot = preorder_to_poset(&pre);
        assert!(quot.poset.is_isomorphic_to(&simplex_subposet(1).poset));
    }

    #[test]
    fn identity_violation_is_rejected() {
        // one vertex, one edge looping on it, with a corrupted degeneracy
        let sizes = vec![2, 3];
        let faces = vec![Vec::new(), vec![vec![0, 0, 1], vec![0, 0, 1]]];
        let degens = vec![vec![vec![1, 2]]];
        assert!(TruncatedSSet::new(1, sizes.clone(), faces.clone(), degens).is_ok());
        let bad_degens = vec![vec![vec![2, 1]]];
        let err = TruncatedSSet::new(1, sizes, faces, bad_degens).unwrap_err();
        assert!(matches!(err, SimplicialError::IdentityViolation { .. }));
    }
}
