//! PDB fixed-column ATOM/HETATM records.
//!
//! Column layout (1-based, inclusive): record name 1-6, atom name 13-16,
//! altLoc 17, residue name 18-20, chain 22, residue seq 23-26, insertion
//! code 27, x 31-38, y 39-46, z 47-54, element 77-78.

use std::collections::HashSet;

use super::{check_element, ParseError, ParseOptions};
use crate::elements::{normalize_symbol, ElementTable};
use crate::molecule::{Atom, Molecule};

const WATER_RESIDUES: &[&str] = &["HOH", "WAT", "DOD"];

fn columns(line: &str, start: usize, end: usize) -> &str {
    // 1-based inclusive columns on a char-per-byte line; PDB is ASCII.
    let bytes = line.as_bytes();
    let lo = (start - 1).min(bytes.len());
    let hi = end.min(bytes.len());
    std::str::from_utf8(&bytes[lo..hi]).unwrap_or("")
}

fn parse_coord(line: &str, lo: usize, hi: usize, line_no: usize) -> Result<f64, ParseError> {
    let raw = columns(line, lo, hi).trim();
    raw.parse().map_err(|_| ParseError::Malformed {
        line: line_no,
        message: format!("coordinate column {lo}-{hi} {raw:?} is not a number"),
    })
}

/// Derive the element from the name field (columns 13-16) when columns
/// 77-78 are blank. Digits are stripped; a leading two-letter symbol wins
/// when it names a known element, otherwise the first letter is used.
fn element_from_name(name: &str, table: &ElementTable) -> Option<String> {
    let cleaned: String = name.chars().filter(|c| c.is_ascii_alphabetic()).collect();
    if cleaned.is_empty() {
        return None;
    }
    if cleaned.len() >= 2 {
        let two = normalize_symbol(&cleaned[..2]);
        if table.contains(&two) {
            return Some(two);
        }
    }
    Some(normalize_symbol(&cleaned[..1]))
}

pub fn parse_pdb(
    text: &str,
    table: &ElementTable,
    options: &ParseOptions,
) -> Result<Molecule, ParseError> {
    let mut mol = Molecule::new("");
    let mut seen_records = false;
    // (chain, resseq+icode, atom name) already taken by a first altloc
    let mut altloc_seen: HashSet<(String, String, String)> = HashSet::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let record = columns(line, 1, 6).trim_end();
        let is_atom = record == "ATOM";
        let is_hetatm = record == "HETATM";
        if !is_atom && !is_hetatm {
            continue;
        }
        seen_records = true;

        let res_name = columns(line, 18, 20).trim().to_ascii_uppercase();
        if options.exclude_waters && WATER_RESIDUES.contains(&res_name.as_str()) {
            continue;
        }

        let alt_loc = columns(line, 17, 17).trim();
        let name = columns(line, 13, 16).trim().to_string();
        let chain = columns(line, 22, 22).to_string();
        let res_key = columns(line, 23, 27).trim().to_string();
        if !alt_loc.is_empty() {
            let key = (chain.clone(), res_key, name.clone());
            if !altloc_seen.insert(key) {
                continue; // keep only the first altloc of each atom
            }
        }

        let x = parse_coord(line, 31, 38, line_no)?;
        let y = parse_coord(line, 39, 46, line_no)?;
        let z = parse_coord(line, 47, 54, line_no)?;

        let element_field = columns(line, 77, 78).trim();
        let symbol = if element_field.is_empty() {
            element_from_name(&name, table).ok_or(ParseError::Malformed {
                line: line_no,
                message: "cannot derive element from atom name".into(),
            })?
        } else {
            normalize_symbol(element_field)
        };
        check_element(table, options, &symbol, line_no)?;

        let tag = if is_atom { "protein" } else { "ligand" };
        mol.atoms.push(Atom::new(symbol, [x, y, z]).with_entity(tag));
    }

    if !seen_records {
        return Err(ParseError::NoRecords);
    }
    Ok(mol)
}
