//! SDF / MDL molfile, V2000 connection tables. Atoms only; the bond block
//! is skipped without validation. Records are separated by `$$$$`.

use super::{check_element, ParseError, ParseOptions};
use crate::elements::{normalize_symbol, ElementTable};
use crate::molecule::{Atom, Molecule};

fn split_records(text: &str) -> Vec<(usize, Vec<&str>)> {
    // Returns (1-based line offset of record start, record lines).
    let mut records = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut start = 1usize;
    for (idx, line) in text.lines().enumerate() {
        if line.trim_end() == "$$$$" {
            records.push((start, std::mem::take(&mut current)));
            start = idx + 2;
        } else {
            current.push(line);
        }
    }
    if current.iter().any(|l| !l.trim().is_empty()) {
        records.push((start, current));
    }
    records
}

fn parse_counts(line: &str, line_no: usize) -> Result<(usize, usize), ParseError> {
    // Fixed-column first (aaabbb...), whitespace-split fallback for loose files.
    let fixed = |lo: usize, hi: usize| -> Option<usize> {
        line.get(lo..hi)?.trim().parse().ok()
    };
    if let (Some(atoms), Some(bonds)) = (fixed(0, 3), fixed(3, 6)) {
        return Ok((atoms, bonds));
    }
    let mut parts = line.split_whitespace();
    let atoms = parts.next().and_then(|t| t.parse().ok());
    let bonds = parts.next().and_then(|t| t.parse().ok());
    match (atoms, bonds) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(ParseError::Malformed {
            line: line_no,
            message: format!("malformed V2000 counts line {line:?}"),
        }),
    }
}

pub fn parse_sdf(
    text: &str,
    table: &ElementTable,
    options: &ParseOptions,
) -> Result<Molecule, ParseError> {
    let records = split_records(text);
    if records.is_empty() {
        return Err(ParseError::Malformed {
            line: 1,
            message: "empty SDF input".into(),
        });
    }
    if options.sdf_record == 0 || options.sdf_record > records.len() {
        return Err(ParseError::RecordOutOfRange {
            requested: options.sdf_record,
            available: records.len(),
        });
    }
    let (base_line, lines) = &records[options.sdf_record - 1];

    if lines.len() < 4 {
        return Err(ParseError::Malformed {
            line: *base_line,
            message: "record too short for a V2000 header".into(),
        });
    }
    let counts_line_no = base_line + 3;
    let (atom_count, _bond_count) = parse_counts(lines[3], counts_line_no)?;

    let atom_lines = &lines[4..];
    if atom_lines.len() < atom_count {
        return Err(ParseError::Truncated {
            declared: atom_count,
            found: atom_lines.len(),
        });
    }

    let mut mol = Molecule::new(lines[0].trim());
    for (offset, raw) in atom_lines[..atom_count].iter().enumerate() {
        let line_no = base_line + 4 + offset;
        let mut parts = raw.split_whitespace();
        let mut coord = [0.0f64; 3];
        for (axis, c) in coord.iter_mut().enumerate() {
            let token = parts.next().ok_or(ParseError::Truncated {
                declared: atom_count,
                found: offset,
            })?;
            *c = token.parse().map_err(|_| ParseError::Malformed {
                line: line_no,
                message: format!("coordinate {axis} {token:?} is not a number"),
            })?;
        }
        let symbol = parts.next().ok_or(ParseError::Malformed {
            line: line_no,
            message: "missing element symbol in atom block".into(),
        })?;
        let symbol = normalize_symbol(symbol);
        check_element(table, options, &symbol, line_no)?;
        mol.atoms.push(Atom::new(symbol, coord));
    }
    Ok(mol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ElementTable {
        ElementTable::default()
    }

    fn record(name: &str, atoms: &[(&str, f64, f64, f64)]) -> String {
        let mut s = format!("{name}\n  program\ncomment\n{:3}{:3}  0  0  0  0  0  0  0  0999 V2000\n", atoms.len(), 0);
        for (sym, x, y, z) in atoms {
            s.push_str(&format!(
                "{x:10.4}{y:10.4}{z:10.4} {sym:<3} 0  0  0  0  0  0  0  0  0  0  0  0\n"
            ));
        }
        s.push_str("M  END\n");
        s
    }

    #[test]
    fn minimal_single_carbon() {
        let text = record("one-carbon", &[("C", 0.0, 0.0, 0.0)]);
        let mol = parse_sdf(&text, &table(), &ParseOptions::default()).unwrap();
        assert_eq!(mol.atoms.len(), 1);
        assert_eq!(mol.atoms[0].element, "C");
        assert_eq!(mol.name, "one-carbon");
    }

    #[test]
    fn record_index_selects_later_record() {
        let text = format!(
            "{}$$$$\n{}$$$$\n{}$$$$\n",
            record("first", &[("C", 0.0, 0.0, 0.0)]),
            record("second", &[("O", 1.0, 0.0, 0.0), ("H", 2.0, 0.0, 0.0)]),
            record("third", &[("N", 0.0, 1.0, 0.0)])
        );
        let opts = ParseOptions {
            sdf_record: 2,
            ..ParseOptions::default()
        };
        let mol = parse_sdf(&text, &table(), &opts).unwrap();
        assert_eq!(mol.name, "second");
        assert_eq!(mol.atoms.len(), 2);

        let first = parse_sdf(&text, &table(), &ParseOptions::default()).unwrap();
        assert_eq!(first.name, "first");
    }

    #[test]
    fn record_out_of_range() {
        let text = record("only", &[("C", 0.0, 0.0, 0.0)]);
        let opts = ParseOptions {
            sdf_record: 3,
            ..ParseOptions::default()
        };
        assert!(matches!(
            parse_sdf(&text, &table(), &opts).unwrap_err(),
            ParseError::RecordOutOfRange {
                requested: 3,
                available: 1
            }
        ));
    }

    #[test]
    fn truncated_atom_block() {
        let text = "mol\n\n\n  5  0  0  0  0  0  0  0  0  0999 V2000\n\
                    0.0 0.0 0.0 C\n0.0 0.0 0.0 C\n0.0 0.0 0.0 C\n";
        assert!(matches!(
            parse_sdf(text, &table(), &ParseOptions::default()).unwrap_err(),
            ParseError::Truncated { declared: 5, .. }
        ));
    }

    #[test]
    fn malformed_counts_line() {
        let text = "mol\n\n\nnot a counts line\n";
        assert!(matches!(
            parse_sdf(text, &table(), &ParseOptions::default()).unwrap_err(),
            ParseError::Malformed { .. }
        ));
    }

    #[test]
    fn bonds_are_ignored() {
        let mut text = record("ethane-ish", &[("C", 0.0, 0.0, 0.0), ("C", 1.5, 0.0, 0.0)]);
        // splice a bond line before M END; content deliberately nonsense
        text = text.replace("M  END", "  1  2 99  0\nM  END");
        let mol = parse_sdf(&text, &table(), &ParseOptions::default()).unwrap();
        assert_eq!(mol.atoms.len(), 2);
    }
}
