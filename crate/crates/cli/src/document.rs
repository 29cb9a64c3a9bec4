//! The input document: one TOML file per invocation, with sections for
//! the space, poset, diagram, cover, sheaf, labeled simplicial set, and
//! options. Each section validates into the corresponding library value;
//! errors carry the offending section and field.

use std::collections::HashMap;

use serde::Deserialize;

use descent_core::descent::SetSheaf;
use descent_core::hypercover::LabeledSSet;
use descent_core::lifting::OpenDiagram;
use descent_core::order::{FiniteFrame, FinitePoset, OpenSet};
use descent_core::semirep::SetPresheaf;
use descent_core::simplicial::TruncatedSSet;

#[derive(Debug)]
pub struct InputError {
    pub path: String,
    pub message: String,
}

impl InputError {
    fn new(path: &str, message: impl ToString) -> Self {
        InputError {
            path: path.to_string(),
            message: message.to_string(),
        }
    }
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub space: Option<SpaceSection>,
    pub poset: Option<PosetSection>,
    pub diagram: Option<DiagramSection>,
    pub cover: Option<CoverSection>,
    pub sheaf: Option<SheafSection>,
    pub labeled_sset: Option<LabeledSection>,
    #[serde(default)]
    pub options: OptionsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub points: Vec<String>,
    /// Generator opens as point lists; the family is closed under union
    /// and intersection and the top and bottom are adjoined.
    #[serde(default)]
    pub opens: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosetSection {
    pub elements: Vec<String>,
    /// Pairs `[a, b]` meaning `a <= b`; the reflexive-transitive closure
    /// is applied.
    #[serde(default)]
    pub relations: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramSection {
    /// Poset element -> open (point list).
    pub assignment: HashMap<String, Vec<String>>,
    pub target: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverSection {
    pub family: Vec<Vec<String>>,
    pub target: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SheafSection {
    #[serde(default)]
    pub over: Vec<SheafOver>,
    #[serde(default)]
    pub restriction: Vec<SheafRestriction>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SheafOver {
    pub open: Vec<String>,
    pub sections: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SheafRestriction {
    pub from: Vec<String>,
    pub to: Vec<String>,
    pub map: HashMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledSection {
    pub truncation: usize,
    pub target: Option<Vec<String>>,
    pub level: Vec<LabeledLevel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledLevel {
    pub n: usize,
    pub cells: Vec<String>,
    pub labels: HashMap<String, Vec<String>>,
    /// For `n >= 1`: cell -> its `n+1` faces at level `n-1`.
    #[serde(default)]
    pub faces: HashMap<String, Vec<String>>,
    /// For `n < truncation`: cell -> its `n+1` degeneracies at level `n+1`.
    #[serde(default)]
    pub degeneracies: HashMap<String, Vec<String>>,
}

#[derive(Debug, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct OptionsSection {
    pub truncation: Option<usize>,
    pub nmax: Option<usize>,
    pub kmax: Option<usize>,
    pub seed: Option<u64>,
    pub maxdeg: Option<usize>,
    pub mode: Option<String>,
    pub count: Option<usize>,
}

pub fn parse(text: &str) -> Result<Document, InputError> {
    toml::from_str(text).map_err(|e| InputError::new("document", e))
}

impl Document {
    pub fn frame(&self) -> Result<FiniteFrame, InputError> {
        let space = self
            .space
            .as_ref()
            .ok_or_else(|| InputError::new("space", "section is required by this command"))?;
        let mut generators = Vec::new();
        for (i, open) in space.opens.iter().enumerate() {
            let mut bits = 0u64;
            for name in open {
                let p = space
                    .points
                    .iter()
                    .position(|q| q == name)
                    .ok_or_else(|| {
                        InputError::new(&format!("space.opens[{i}]"), format!("unknown point `{name}`"))
                    })?;
                bits |= 1 << p;
            }
            generators.push(OpenSet::from_bits(bits));
        }
        FiniteFrame::closure(space.points.clone(), &generators)
            .map_err(|e| InputError::new("space", e))
    }

    pub fn poset(&self) -> Result<FinitePoset, InputError> {
        let section = self
            .poset
            .as_ref()
            .ok_or_else(|| InputError::new("poset", "section is required by this command"))?;
        let mut relations = Vec::new();
        for (i, pair) in section.relations.iter().enumerate() {
            if pair.len() != 2 {
                return Err(InputError::new(
                    &format!("poset.relations[{i}]"),
                    "a relation is a pair [a, b]",
                ));
            }
            relations.push((pair[0].clone(), pair[1].clone()));
        }
        FinitePoset::from_relations(section.elements.clone(), &relations)
            .map_err(|e| InputError::new("poset", e))
    }

    fn open_at(&self, frame: &FiniteFrame, path: &str, names: &[String]) -> Result<OpenSet, InputError> {
        frame
            .open_from_points(names)
            .map_err(|e| InputError::new(path, e))
    }

    fn target_or_top(
        &self,
        frame: &FiniteFrame,
        path: &str,
        target: &Option<Vec<String>>,
    ) -> Result<OpenSet, InputError> {
        match target {
            Some(names) => self.open_at(frame, path, names),
            None => Ok(frame.top()),
        }
    }

    pub fn diagram(&self) -> Result<OpenDiagram, InputError> {
        let frame = self.frame()?;
        let poset = self.poset()?;
        let section = self
            .diagram
            .as_ref()
            .ok_or_else(|| InputError::new("diagram", "section is required by this command"))?;
        let mut opens = Vec::with_capacity(poset.len());
        for elem in poset.elements() {
            let names = section.assignment.get(elem).ok_or_else(|| {
                InputError::new("diagram.assignment", format!("missing element `{elem}`"))
            })?;
            opens.push(self.open_at(&frame, &format!("diagram.assignment.{elem}"), names)?);
        }
        for key in section.assignment.keys() {
            if poset.index_of(key).is_none() {
                return Err(InputError::new(
                    "diagram.assignment",
                    format!("`{key}` is not a poset element"),
                ));
            }
        }
        let target = self.target_or_top(&frame, "diagram.target", &section.target)?;
        OpenDiagram::new(poset, frame, opens, target).map_err(|e| InputError::new("diagram", e))
    }

    pub fn cover(&self) -> Result<(FiniteFrame, Vec<OpenSet>, OpenSet), InputError> {
        let frame = self.frame()?;
        let section = self
            .cover
            .as_ref()
            .ok_or_else(|| InputError::new("cover", "section is required by this command"))?;
        let mut family = Vec::new();
        for (i, names) in section.family.iter().enumerate() {
            family.push(self.open_at(&frame, &format!("cover.family[{i}]"), names)?);
        }
        let target = self.target_or_top(&frame, "cover.target", &section.target)?;
        Ok((frame, family, target))
    }

    pub fn labeled(&self) -> Result<LabeledSSet, InputError> {
        let frame = self.frame()?;
        let section = self
            .labeled_sset
            .as_ref()
            .ok_or_else(|| InputError::new("labeled_sset", "section is required by this command"))?;
        let trunc = section.truncation;
        let mut levels: Vec<Option<&LabeledLevel>> = vec![None; trunc + 1];
        for level in &section.level {
            if level.n > trunc {
                return Err(InputError::new(
                    "labeled_sset.level",
                    format!("level {} exceeds the truncation {trunc}", level.n),
                ));
            }
            if levels[level.n].replace(level).is_some() {
                return Err(InputError::new(
                    "labeled_sset.level",
                    format!("level {} appears twice", level.n),
                ));
            }
        }
        let mut sizes = Vec::with_capacity(trunc + 1);
        let mut names: Vec<Vec<String>> = Vec::with_capacity(trunc + 1);
        for n in 0..=trunc {
            let level = levels[n].ok_or_else(|| {
                InputError::new("labeled_sset.level", format!("missing level {n}"))
            })?;
            sizes.push(level.cells.len());
            names.push(level.cells.clone());
        }
        let index_of = |n: usize, name: &str| -> Result<u32, InputError> {
            names[n]
                .iter()
                .position(|c| c == name)
                .map(|i| i as u32)
                .ok_or_else(|| {
                    InputError::new(
                        &format!("labeled_sset.level[{n}]"),
                        format!("unknown cell `{name}`"),
                    )
                })
        };
        let mut faces: Vec<Vec<Vec<u32>>> = vec![Vec::new(); trunc + 1];
        for n in 1..=trunc {
            let level = levels[n].unwrap();
            let mut tables = vec![vec![0u32; sizes[n]]; n + 1];
            for (c, cell) in level.cells.iter().enumerate() {
                let entry = level.faces.get(cell).ok_or_else(|| {
                    InputError::new(
                        &format!("labeled_sset.level[{n}].faces"),
                        format!("missing faces of `{cell}`"),
                    )
                })?;
                if entry.len() != n + 1 {
                    return Err(InputError::new(
                        &format!("labeled_sset.level[{n}].faces.{cell}"),
                        format!("expected {} faces", n + 1),
                    ));
                }
                for (i, fname) in entry.iter().enumerate() {
                    tables[i][c] = index_of(n - 1, fname)?;
                }
            }
            faces[n] = tables;
        }
        let mut degens: Vec<Vec<Vec<u32>>> = Vec::with_capacity(trunc);
        for n in 0..trunc {
            let level = levels[n].unwrap();
            let mut tables = vec![vec![0u32; sizes[n]]; n + 1];
            for (c, cell) in level.cells.iter().enumerate() {
                let entry = level.degeneracies.get(cell).ok_or_else(|| {
                    InputError::new(
                        &format!("labeled_sset.level[{n}].degeneracies"),
                        format!("missing degeneracies of `{cell}`"),
                    )
                })?;
                if entry.len() != n + 1 {
                    return Err(InputError::new(
                        &format!("labeled_sset.level[{n}].degeneracies.{cell}"),
                        format!("expected {} degeneracies", n + 1),
                    ));
                }
                for (j, dname) in entry.iter().enumerate() {
                    tables[j][c] = index_of(n + 1, dname)?;
                }
            }
            degens.push(tables);
        }
        let shape = TruncatedSSet::new(trunc, sizes, faces, degens)
            .map_err(|e| InputError::new("labeled_sset", e))?;
        let mut labels: Vec<Vec<OpenSet>> = Vec::with_capacity(trunc + 1);
        for n in 0..=trunc {
            let level = levels[n].unwrap();
            let mut lvl = Vec::with_capacity(level.cells.len());
            for cell in &level.cells {
                let names = level.labels.get(cell).ok_or_else(|| {
                    InputError::new(
                        &format!("labeled_sset.level[{n}].labels"),
                        format!("missing label of `{cell}`"),
                    )
                })?;
                lvl.push(self.open_at(
                    &frame,
                    &format!("labeled_sset.level[{n}].labels.{cell}"),
                    names,
                )?);
            }
            labels.push(lvl);
        }
        let target = self.target_or_top(&frame, "labeled_sset.target", &section.target)?;
        LabeledSSet::new(shape, labels, frame, target)
            .map_err(|e| InputError::new("labeled_sset", e))?
            .with_names(names)
            .map_err(|e| InputError::new("labeled_sset", e))
    }

    pub fn sheaf(&self) -> Result<SetSheaf, InputError> {
        let frame = self.frame()?;
        let section = self
            .sheaf
            .as_ref()
            .ok_or_else(|| InputError::new("sheaf", "section is required by this command"))?;
        let mut sections: Vec<Vec<String>> = vec![Vec::new(); frame.open_count()];
        let mut given: Vec<bool> = vec![false; frame.open_count()];
        for (i, over) in section.over.iter().enumerate() {
            let open = self.open_at(&frame, &format!("sheaf.over[{i}].open"), &over.open)?;
            let idx = frame.open_index(open).expect("validated open");
            if given[idx] {
                return Err(InputError::new(
                    &format!("sheaf.over[{i}]"),
                    format!("duplicate sections for {}", frame.open_name(open)),
                ));
            }
            sections[idx] = over.sections.clone();
            given[idx] = true;
        }
        if let Some(missing) = given.iter().position(|&g| !g) {
            return Err(InputError::new(
                "sheaf.over",
                format!(
                    "missing sections for open {}",
                    frame.open_name(frame.opens()[missing])
                ),
            ));
        }

        // explicit restriction tables, keyed by open indices
        let mut explicit: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, r) in section.restriction.iter().enumerate() {
            let path = format!("sheaf.restriction[{i}]");
            let from_open = self.open_at(&frame, &path, &r.from)?;
            let to_open = self.open_at(&frame, &path, &r.to)?;
            if !to_open.is_subset_of(from_open) {
                return Err(InputError::new(&path, "`to` must be contained in `from`"));
            }
            let from = frame.open_index(from_open).expect("validated");
            let to = frame.open_index(to_open).expect("validated");
            let mut table = vec![usize::MAX; sections[from].len()];
            for (name, image) in &r.map {
                let e = sections[from]
                    .iter()
                    .position(|s| s == name)
                    .ok_or_else(|| InputError::new(&path, format!("unknown section `{name}`")))?;
                let img = sections[to]
                    .iter()
                    .position(|s| s == image)
                    .ok_or_else(|| InputError::new(&path, format!("unknown section `{image}`")))?;
                table[e] = img;
            }
            if let Some(e) = table.iter().position(|&x| x == usize::MAX) {
                return Err(InputError::new(
                    &path,
                    format!("section `{}` has no image", sections[from][e]),
                ));
            }
            explicit.insert((from, to), table);
        }

        // complete by identities and composites along immediate inclusions
        let opens = frame.opens().to_vec();
        let mut restrictions: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for from in 0..opens.len() {
            restrictions.insert((from, from), (0..sections[from].len()).collect());
        }
        for (&key, table) in &explicit {
            restrictions.insert(key, table.clone());
        }
        // fill remaining comparable pairs by shortest chains of known maps
        let mut progress = true;
        while progress {
            progress = false;
            for from in 0..opens.len() {
                for to in 0..opens.len() {
                    if from == to
                        || !opens[to].is_subset_of(opens[from])
                        || restrictions.contains_key(&(from, to))
                    {
                        continue;
                    }
                    // compose through any middle open with both legs known
                    let mid = (0..opens.len()).find(|&m| {
                        m != from
                            && m != to
                            && opens[m].is_subset_of(opens[from])
                            && opens[to].is_subset_of(opens[m])
                            && restrictions.contains_key(&(from, m))
                            && restrictions.contains_key(&(m, to))
                    });
                    if let Some(m) = mid {
                        let fm = restrictions[&(from, m)].clone();
                        let mt = restrictions[&(m, to)].clone();
                        let composite = fm.iter().map(|&e| mt[e]).collect();
                        restrictions.insert((from, to), composite);
                        progress = true;
                    }
                }
            }
        }
        let presheaf = SetPresheaf::new(frame, sections, restrictions)
            .map_err(|e| InputError::new("sheaf", e))?;
        Ok(SetSheaf::unchecked(presheaf))
    }
}
