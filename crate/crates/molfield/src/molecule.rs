//! Canonical in-memory molecule: a flat list of atoms with element symbols,
//! Cartesian coordinates in Angstrom and an optional sub-entity tag.

/// One atom. `element` is a normalized symbol ("C", "Cl"); whether it is
/// known is decided against an [`crate::elements::ElementTable`] at use time.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub element: String,
    pub position: [f64; 3],
    /// Label distinguishing sub-entities of a complex, e.g. "protein" or
    /// "ligand" for PDB records. `None` for single-entity formats.
    pub entity_tag: Option<String>,
}

impl Atom {
    pub fn new(element: impl Into<String>, position: [f64; 3]) -> Self {
        Atom {
            element: element.into(),
            position,
            entity_tag: None,
        }
    }

    pub fn with_entity(mut self, tag: impl Into<String>) -> Self {
        self.entity_tag = Some(tag.into());
        self
    }
}

/// An ordered collection of atoms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Molecule {
    pub atoms: Vec<Atom>,
    pub name: String,
    /// Where the molecule came from: a file path or "inline".
    pub source: String,
}

impl Molecule {
    pub fn new(name: impl Into<String>) -> Self {
        Molecule {
            atoms: Vec::new(),
            name: name.into(),
            source: "inline".into(),
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Axis-aligned bounding box over atom positions, `None` when empty.
    pub fn bounding_box(&self) -> Option<([f64; 3], [f64; 3])> {
        let first = self.atoms.first()?;
        let mut lo = first.position;
        let mut hi = first.position;
        for atom in &self.atoms[1..] {
            for axis in 0..3 {
                lo[axis] = lo[axis].min(atom.position[axis]);
                hi[axis] = hi[axis].max(atom.position[axis]);
            }
        }
        Some((lo, hi))
    }
}
