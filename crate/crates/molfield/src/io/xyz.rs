//! XYZ format: line 1 atom count, line 2 comment, then `symbol x y z` per atom.

use super::{check_element, ParseError, ParseOptions};
use crate::elements::{normalize_symbol, ElementTable};
use crate::molecule::{Atom, Molecule};

pub fn parse_xyz(
    text: &str,
    table: &ElementTable,
    options: &ParseOptions,
) -> Result<Molecule, ParseError> {
    let mut lines = text.lines().enumerate();

    let (count_line_no, count_line) = lines.next().ok_or(ParseError::Malformed {
        line: 1,
        message: "empty input, expected atom count".into(),
    })?;
    let declared: usize = count_line.trim().parse().map_err(|_| ParseError::Malformed {
        line: count_line_no + 1,
        message: format!("atom count {:?} is not an integer", count_line.trim()),
    })?;

    let (_, comment) = lines.next().ok_or(ParseError::CountMismatch {
        declared,
        found: 0,
    })?;

    let mut mol = Molecule::new(comment.trim());
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if mol.atoms.len() == declared {
            // extra non-blank content past the declared block
            return Err(ParseError::CountMismatch {
                declared,
                found: mol.atoms.len() + 1,
            });
        }
        let mut parts = raw.split_whitespace();
        let symbol = parts.next().ok_or(ParseError::Malformed {
            line,
            message: "missing element symbol".into(),
        })?;
        let mut coord = [0.0f64; 3];
        for (axis, c) in coord.iter_mut().enumerate() {
            let token = parts.next().ok_or(ParseError::Malformed {
                line,
                message: format!("missing coordinate {}", axis + 1),
            })?;
            *c = token.parse().map_err(|_| ParseError::Malformed {
                line,
                message: format!("coordinate {token:?} is not a number"),
            })?;
            if !c.is_finite() {
                return Err(ParseError::Malformed {
                    line,
                    message: format!("coordinate {token:?} is not finite"),
                });
            }
        }
        let symbol = normalize_symbol(symbol);
        check_element(table, options, &symbol, line)?;
        mol.atoms.push(Atom::new(symbol, coord));
    }

    if mol.atoms.len() != declared {
        return Err(ParseError::CountMismatch {
            declared,
            found: mol.atoms.len(),
        });
    }
    Ok(mol)
}

/// Serialize to XYZ with 6-decimal coordinates.
pub fn write_xyz(mol: &Molecule) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "{}", mol.atoms.len());
    let _ = writeln!(out, "{}", mol.name);
    for atom in &mol.atoms {
        let _ = writeln!(
            out,
            "{} {:.6} {:.6} {:.6}",
            atom.element, atom.position[0], atom.position[1], atom.position[2]
        );
    }
    out
}
