//! Single-pass SMILES parser.

use std::collections::HashMap;

use super::{Atom, Bond, BondOrder, Element, MolecularGraph, ParseError};

/// Parses a SMILES string into a molecular graph with implicit hydrogens
/// assigned by organic-subset valence rules.
pub fn parse_smiles(text: &str) -> Result<MolecularGraph, ParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    Parser::new(trimmed).run()
}

#[derive(Debug, Clone)]
struct DraftAtom {
    element: Element,
    aromatic: bool,
    charge: i8,
    isotope: Option<u16>,
    bracket: bool,
    bracket_h: u8,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<DraftAtom>,
    bonds: Vec<Bond>,
    /// Attachment point for the next atom.
    prev: Option<usize>,
    /// Bond symbol waiting for its right-hand atom: (order, position, char).
    pending: Option<(BondOrder, usize, char)>,
    branch_stack: Vec<usize>,
    /// Open ring closures: digit -> (atom, declared order, open position).
    rings: HashMap<u16, (usize, Option<BondOrder>, usize)>,
    stereo: bool,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
            atoms: Vec::new(),
            bonds: Vec::new(),
            prev: None,
            pending: None,
            branch_stack: Vec::new(),
            rings: HashMap::new(),
            stereo: false,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn unexpected(&self, position: usize) -> ParseError {
        let found = self.bytes.get(position).map(|&b| b as char).unwrap_or('$');
        ParseError::Unexpected { position, found }
    }

    fn run(mut self) -> Result<MolecularGraph, ParseError> {
        while let Some(b) = self.peek() {
            match b {
                b'[' => {
                    self.pos += 1;
                    let atom = self.parse_bracket_atom()?;
                    self.push_atom(atom)?;
                }
                b'A'..=b'Z' => {
                    let atom = self.parse_organic_atom()?;
                    self.push_atom(atom)?;
                }
                b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                    self.pos += 1;
                    let symbol = (b as char).to_ascii_uppercase().to_string();
                    let element = Element::from_symbol(&symbol)
                        .ok_or_else(|| ParseError::UnknownElement(symbol))?;
                    self.push_atom(DraftAtom {
                        element,
                        aromatic: true,
                        charge: 0,
                        isotope: None,
                        bracket: false,
                        bracket_h: 0,
                    })?;
                }
                b'-' => self.set_pending(BondOrder::Single, '-')?,
                b'=' => self.set_pending(BondOrder::Double, '=')?,
                b'#' => self.set_pending(BondOrder::Triple, '#')?,
                b':' => self.set_pending(BondOrder::Aromatic, ':')?,
                b'/' | b'\\' => {
                    self.stereo = true;
                    self.set_pending(BondOrder::Single, b as char)?;
                }
                b'0'..=b'9' => {
                    let digit = (b - b'0') as u16;
                    let at = self.pos;
                    self.pos += 1;
                    self.close_or_open_ring(digit, at)?;
                }
                b'%' => {
                    let at = self.pos;
                    self.pos += 1;
                    let d1 = self.bump().filter(u8::is_ascii_digit);
                    let d2 = self.bump().filter(u8::is_ascii_digit);
                    match (d1, d2) {
                        (Some(a), Some(c)) => {
                            let digit = (a - b'0') as u16 * 10 + (c - b'0') as u16;
                            self.close_or_open_ring(digit, at)?;
                        }
                        _ => return Err(self.unexpected(at)),
                    }
                }
                b'(' => {
                    if self.pending.is_some() || self.prev.is_none() {
                        return Err(self.unexpected(self.pos));
                    }
                    self.branch_stack.push(self.prev.unwrap());
                    self.pos += 1;
                }
                b')' => {
                    if self.pending.is_some() {
                        return Err(self.unexpected(self.pos));
                    }
                    match self.branch_stack.pop() {
                        Some(p) => self.prev = Some(p),
                        None => return Err(ParseError::UnmatchedParenthesis),
                    }
                    self.pos += 1;
                }
                b'.' => {
                    if self.pending.is_some() || !self.branch_stack.is_empty() {
                        return Err(self.unexpected(self.pos));
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                _ => return Err(self.unexpected(self.pos)),
            }
        }

        if let Some((_, at, _)) = self.pending {
            return Err(self.unexpected(at));
        }
        if !self.branch_stack.is_empty() {
            return Err(ParseError::UnmatchedParenthesis);
        }
        if let Some((&digit, _)) = self.rings.iter().min_by_key(|(&d, _)| d) {
            return Err(ParseError::UnclosedRing(digit));
        }

        self.finish()
    }

    fn set_pending(&mut self, order: BondOrder, ch: char) -> Result<(), ParseError> {
        if self.pending.is_some() || self.prev.is_none() {
            return Err(self.unexpected(self.pos));
        }
        self.pending = Some((order, self.pos, ch));
        self.pos += 1;
        Ok(())
    }

    /// Default order for a bond with no explicit symbol.
    fn implied_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].aromatic && self.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn add_bond(&mut self, a: usize, b: usize, order: BondOrder, at: usize) -> Result<(), ParseError> {
        if a == b {
            return Err(self.unexpected(at));
        }
        let (lo, hi) = (a.min(b), a.max(b));
        if self.bonds.iter().any(|bd| bd.a == lo && bd.b == hi) {
            return Err(self.unexpected(at));
        }
        self.bonds.push(Bond { order, a: lo, b: hi });
        Ok(())
    }

    fn push_atom(&mut self, atom: DraftAtom) -> Result<(), ParseError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let order = match self.pending.take() {
                Some((order, _, _)) => order,
                None => self.implied_order(prev, idx),
            };
            self.add_bond(prev, idx, order, self.pos)?;
        } else if let Some((_, at, _)) = self.pending {
            return Err(self.unexpected(at));
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn close_or_open_ring(&mut self, digit: u16, at: usize) -> Result<(), ParseError> {
        let current = match self.prev {
            Some(p) => p,
            None => return Err(self.unexpected(at)),
        };
        let declared = self.pending.take().map(|(order, _, _)| order);
        match self.rings.remove(&digit) {
            Some((other, opened_order, _)) => {
                let order = match (opened_order, declared) {
                    (Some(a), Some(b)) if a != b => return Err(self.unexpected(at)),
                    (Some(a), _) => a,
                    (None, Some(b)) => b,
                    (None, None) => self.implied_order(other, current),
                };
                self.add_bond(other, current, order, at)?;
            }
            None => {
                self.rings.insert(digit, (current, declared, at));
            }
        }
        Ok(())
    }

    fn parse_organic_atom(&mut self) -> Result<DraftAtom, ParseError> {
        let start = self.pos;
        let first = self.bump().unwrap() as char;
        // Two-letter organic-subset symbols first.
        let symbol = if (first == 'C' && self.peek() == Some(b'l'))
            || (first == 'B' && self.peek() == Some(b'r'))
        {
            self.pos += 1;
            format!("{}{}", first, self.bytes[self.pos - 1] as char)
        } else {
            first.to_string()
        };
        match symbol.as_str() {
            "B" | "C" | "N" | "O" | "P" | "S" | "F" | "Cl" | "Br" | "I" => {
                let element = Element::from_symbol(&symbol)
                    .ok_or_else(|| ParseError::UnknownElement(symbol.clone()))?;
                Ok(DraftAtom {
                    element,
                    aromatic: false,
                    charge: 0,
                    isotope: None,
                    bracket: false,
                    bracket_h: 0,
                })
            }
            _ => {
                let _ = start;
                Err(ParseError::UnknownElement(symbol))
            }
        }
    }

    fn parse_bracket_atom(&mut self) -> Result<DraftAtom, ParseError> {
        // [isotope? symbol chirality? Hcount? charge? (:class)?]
        let mut isotope: Option<u16> = None;
        while let Some(b) = self.peek() {
            if b.is_ascii_digit() {
                let d = (b - b'0') as u16;
                isotope = Some(isotope.unwrap_or(0) * 10 + d);
                self.pos += 1;
            } else {
                break;
            }
        }

        let sym_start = self.pos;
        let first = match self.bump() {
            Some(b) if (b as char).is_ascii_alphabetic() => b as char,
            Some(_) => return Err(self.unexpected(sym_start)),
            None => return Err(ParseError::UnclosedBracket),
        };
        let aromatic = first.is_ascii_lowercase();
        let mut symbol = first.to_ascii_uppercase().to_string();
        // Greedy two-letter symbol match ([Na], [Cl], [se], ...). 'H' never
        // extends a symbol here since it denotes the hydrogen count.
        if let Some(b) = self.peek() {
            if b.is_ascii_lowercase() && b != b'h' {
                let two = format!("{}{}", symbol, b as char);
                if Element::from_symbol(&two).is_some() {
                    symbol = two;
                    self.pos += 1;
                }
            }
        }
        let element = match Element::from_symbol(&symbol) {
            Some(e) => e,
            None => return Err(ParseError::UnknownElement(symbol)),
        };
        // Lowercase aromatic forms are only valid for a small set.
        if aromatic && !matches!(symbol.as_str(), "B" | "C" | "N" | "O" | "P" | "S" | "Se" | "As" | "Te") {
            return Err(ParseError::UnknownElement(symbol.to_lowercase()));
        }

        while let Some(b'@') = self.peek() {
            self.stereo = true;
            self.pos += 1;
        }

        let mut bracket_h = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            bracket_h = 1;
            if let Some(b) = self.peek() {
                if b.is_ascii_digit() {
                    bracket_h = b - b'0';
                    self.pos += 1;
                }
            }
        }

        let mut charge: i8 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit: i8 = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            charge = unit;
            if let Some(b) = self.peek() {
                if b.is_ascii_digit() {
                    charge = unit * (b - b'0') as i8;
                    self.pos += 1;
                } else {
                    while self.peek() == Some(sign) {
                        charge += unit;
                        self.pos += 1;
                    }
                }
            }
        }

        // Atom-map class labels are parsed and ignored.
        if self.peek() == Some(b':') {
            self.pos += 1;
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
        }

        match self.bump() {
            Some(b']') => Ok(DraftAtom {
                element,
                aromatic,
                charge,
                isotope,
                bracket: true,
                bracket_h,
            }),
            Some(_) => Err(self.unexpected(self.pos - 1)),
            None => Err(ParseError::UnclosedBracket),
        }
    }

    fn finish(self) -> Result<MolecularGraph, ParseError> {
        let Parser { atoms: drafts, bonds, stereo, .. } = self;

        // Explicit valence per atom; aromatic bonds count 1 each.
        let mut bond_sum = vec![0u8; drafts.len()];
        let mut aromatic_bonds = vec![0u8; drafts.len()];
        let mut has_multiple = vec![false; drafts.len()];
        for bond in &bonds {
            for idx in [bond.a, bond.b] {
                bond_sum[idx] = bond_sum[idx].saturating_add(bond.order.valence());
                if bond.order == BondOrder::Aromatic {
                    aromatic_bonds[idx] += 1;
                }
                if matches!(bond.order, BondOrder::Double | BondOrder::Triple) {
                    has_multiple[idx] = true;
                }
            }
        }

        let mut atoms = Vec::with_capacity(drafts.len());
        for (i, draft) in drafts.into_iter().enumerate() {
            // A lowercase atom must sit in an aromatic system; bracket-
            // specified aromatic atoms are taken at face value.
            if draft.aromatic && !draft.bracket && aromatic_bonds[i] < 2 {
                return Err(ParseError::BadAromaticity(
                    draft.element.symbol().to_lowercase(),
                ));
            }
            let implicit_h = if draft.bracket {
                draft.bracket_h
            } else {
                let valences = draft.element.standard_valences();
                if draft.aromatic {
                    // Aromatic atoms use only their lowest standard valence
                    // plus one ring-system unit; the extra unit is already
                    // spent when the atom carries an exocyclic double bond
                    // (pyridinone-style c(=O)).
                    let max = *valences.last().unwrap();
                    if bond_sum[i] > max {
                        return Err(ParseError::ValenceOverflow {
                            symbol: draft.element.symbol().to_string(),
                            total: bond_sum[i],
                        });
                    }
                    let adjusted = bond_sum[i] + u8::from(!has_multiple[i]);
                    valences[0].saturating_sub(adjusted)
                } else {
                    let total = bond_sum[i];
                    match valences.iter().find(|&&v| v >= total) {
                        Some(v) => v - total,
                        None => {
                            return Err(ParseError::ValenceOverflow {
                                symbol: draft.element.symbol().to_string(),
                                total,
                            })
                        }
                    }
                }
            };
            atoms.push(Atom {
                element: draft.element,
                formal_charge: draft.charge,
                is_aromatic: draft.aromatic,
                implicit_h,
                in_ring: false,
                degree: 0,
                isotope: draft.isotope,
                bracket: draft.bracket,
            });
        }

        Ok(MolecularGraph::new(atoms, bonds, stereo))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methane() {
        let g = parse_smiles("C").unwrap();
        assert_eq!(g.atoms().len(), 1);
        assert_eq!(g.bonds().len(), 0);
        assert_eq!(g.atoms()[0].implicit_h, 4);
    }

    #[test]
    fn benzene() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(g.atoms().len(), 6);
        assert_eq!(g.bonds().len(), 6);
        assert!(g.atoms().iter().all(|a| a.is_aromatic && a.implicit_h == 1));
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn acetic_acid_valences() {
        // Hand valence enumeration: CH3-C(=O)-OH.
        let g = parse_smiles("CC(=O)O").unwrap();
        assert_eq!(g.atoms().len(), 4);
        let orders: Vec<BondOrder> = g.bonds().iter().map(|b| b.order).collect();
        assert_eq!(orders, vec![BondOrder::Single, BondOrder::Double, BondOrder::Single]);
        assert_eq!(g.atoms()[0].implicit_h, 3);
        assert_eq!(g.atoms()[1].implicit_h, 0);
        assert_eq!(g.atoms()[2].implicit_h, 0, "carbonyl O");
        assert_eq!(g.atoms()[3].implicit_h, 1, "hydroxyl O");
    }

    #[test]
    fn unclosed_ring_is_error() {
        assert_eq!(parse_smiles("C1CC"), Err(ParseError::UnclosedRing(1)));
    }

    #[test]
    fn unmatched_parens() {
        assert_eq!(parse_smiles("C(C"), Err(ParseError::UnmatchedParenthesis));
        assert_eq!(parse_smiles("CC)"), Err(ParseError::UnmatchedParenthesis));
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_smiles(""), Err(ParseError::EmptyInput));
        assert_eq!(parse_smiles("   "), Err(ParseError::EmptyInput));
    }

    #[test]
    fn unknown_element() {
        assert!(matches!(parse_smiles("Zz"), Err(ParseError::UnknownElement(_))));
        assert!(matches!(parse_smiles("[Xx]"), Err(ParseError::UnknownElement(_))));
    }

    #[test]
    fn valence_overflow() {
        assert!(matches!(
            parse_smiles("C(C)(C)(C)(C)C"),
            Err(ParseError::ValenceOverflow { .. })
        ));
        // Hypervalent nitrogen and sulfur within the standard lists are fine.
        assert!(parse_smiles("N(=O)=O").is_ok());
        assert!(parse_smiles("CS(=O)(=O)C").is_ok());
    }

    #[test]
    fn bracket_atoms() {
        let g = parse_smiles("[NH4+]").unwrap();
        let a = &g.atoms()[0];
        assert_eq!(a.implicit_h, 4);
        assert_eq!(a.formal_charge, 1);
        assert!(a.bracket);

        let g = parse_smiles("[13CH4]").unwrap();
        assert_eq!(g.atoms()[0].isotope, Some(13));
        assert_eq!(g.atoms()[0].implicit_h, 4);

        let g = parse_smiles("[O-]S(=O)(=O)[O-]").unwrap();
        assert_eq!(g.net_charge(), -2);

        let g = parse_smiles("[S+2]([O-])[O-]").unwrap();
        assert_eq!(g.atoms()[0].formal_charge, 2);
    }

    #[test]
    fn pyrrole_and_pyridine_hydrogens() {
        let g = parse_smiles("c1cc[nH]c1").unwrap();
        let n = g.atoms().iter().find(|a| a.element.symbol() == "N").unwrap();
        assert_eq!(n.implicit_h, 1);

        let g = parse_smiles("c1ccncc1").unwrap();
        let n = g.atoms().iter().find(|a| a.element.symbol() == "N").unwrap();
        assert_eq!(n.implicit_h, 0);

        let g = parse_smiles("c1ccsc1").unwrap();
        let s = g.atoms().iter().find(|a| a.element.symbol() == "S").unwrap();
        assert_eq!(s.implicit_h, 0, "thiophene sulfur carries no hydrogen");
    }

    #[test]
    fn fused_ring_junctions() {
        let g = parse_smiles("c1ccc2ccccc2c1").unwrap();
        let h: u32 = g.implicit_h_total();
        assert_eq!(h, 8, "naphthalene C10H8");
    }

    #[test]
    fn stereo_parsed_and_discarded() {
        let g = parse_smiles("C/C=C/C").unwrap();
        assert!(g.stereo_discarded());
        assert_eq!(g.bonds().iter().filter(|b| b.order == BondOrder::Double).count(), 1);

        let g = parse_smiles("[C@@H](N)(C)O").unwrap();
        assert!(g.stereo_discarded());
        assert_eq!(g.atoms()[0].implicit_h, 1);

        let g = parse_smiles("CCO").unwrap();
        assert!(!g.stereo_discarded());
    }

    #[test]
    fn ring_closure_with_explicit_bond() {
        let g = parse_smiles("C=1CCCCC=1").unwrap();
        assert_eq!(g.bonds().iter().filter(|b| b.order == BondOrder::Double).count(), 1);
        // Conflicting ring-bond declarations fail.
        assert!(parse_smiles("C=1CCCCC-1").is_err());
    }

    #[test]
    fn percent_ring_closure() {
        let g = parse_smiles("C%12CCCCC%12").unwrap();
        assert_eq!(g.ring_count(), 1);
    }

    #[test]
    fn charge_runs() {
        let g = parse_smiles("[Fe++]").unwrap();
        assert_eq!(g.atoms()[0].formal_charge, 2);
        let g = parse_smiles("[Fe+2]").unwrap();
        assert_eq!(g.atoms()[0].formal_charge, 2);
    }

    #[test]
    fn dot_needs_fresh_atom() {
        assert!(parse_smiles("C.=C").is_err());
        assert!(parse_smiles("=C").is_err());
        assert!(parse_smiles("CC=").is_err());
    }

    #[test]
    fn lowercase_outside_ring_rejected() {
        assert!(matches!(parse_smiles("cC"), Err(ParseError::BadAromaticity(_))));
    }

    #[test]
    fn heavy_atom_count_matches_token_count() {
        // Round-trip atom count on a layered example.
        let g = parse_smiles("CC(=O)Nc1ccc(O)cc1").unwrap();
        assert_eq!(g.heavy_atom_count(), 11);
    }

    #[test]
    fn aromatic_exocyclic_double_bonds() {
        // Canonical aromatic forms of carbonyl-bearing rings.
        let cases = [
            ("O=c1cccc[nH]1", "C5H5NO"),             // 2-pyridone
            ("Cn1c(=O)c2c(ncn2C)n(C)c1=O", "C8H10N4O2"), // caffeine
            ("c1ccoc1", "C4H4O"),                    // furan
            ("CC(=O)Oc1ccccc1C(=O)O", "C9H8O4"),     // aspirin
            ("CN1CCC[C@H]1c1cccnc1", "C10H14N2"),    // nicotine
            ("O=c1ccc2ccccc2o1", "C9H6O2"),          // coumarin
        ];
        for (smi, formula) in cases {
            let g = parse_smiles(smi).unwrap();
            assert_eq!(g.molecular_formula(), formula, "formula of {smi}");
        }
    }

    #[test]
    fn duplicate_ring_bond_rejected() {
        // Two parallel bonds between the same atom pair.
        assert!(parse_smiles("C12CC12").is_err());
        assert!(parse_smiles("C11").is_err());
    }
}
