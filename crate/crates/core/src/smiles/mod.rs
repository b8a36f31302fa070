//! SMILES parsing into validated molecular graphs.
//!
//! The supported subset covers what small-molecule QSAR datasets actually
//! contain: the organic subset with aromatic lowercase forms, bracket atoms
//! with isotopes/charges/explicit hydrogens, ring closures (including `%nn`),
//! branches, and dot-disconnected components. Stereo markers (`/ \ @ @@`) are
//! parsed and discarded with a recorded flag. Aromatic bonds are kept as a
//! distinct bond order; there is no kekulization.

mod parse;

pub use parse::parse_smiles;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while parsing a SMILES string.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("ring bond {0} opened but never closed")]
    UnclosedRing(u16),
    #[error("unmatched parenthesis")]
    UnmatchedParenthesis,
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("explicit bonds on {symbol} total {total}, above its maximum valence")]
    ValenceOverflow { symbol: String, total: u8 },
    #[error("bracket atom opened but never closed")]
    UnclosedBracket,
    #[error("aromatic atom `{0}` participates in fewer than 2 aromatic bonds")]
    BadAromaticity(String),
    #[error("unexpected `{found}` at position {position}")]
    Unexpected { position: usize, found: char },
}

/// Bond order. Aromatic is a first-class order, not a resonance annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's explicit valence. Aromatic counts 1; the
    /// aromatic-system adjustment is applied once per aromatic atom.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    /// Stable small code used in fingerprint invariants.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

/// A heavy atom in the molecular graph. Hydrogens are implicit counts, never
/// graph vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    pub is_aromatic: bool,
    /// Implicit hydrogen count; for bracket atoms this is the explicit `Hn`
    /// count from the brackets.
    pub implicit_h: u8,
    pub in_ring: bool,
    /// Number of explicit (heavy-atom) connections.
    pub degree: u8,
    /// Isotope label from brackets; recorded but excluded from invariants.
    pub isotope: Option<u16>,
    /// Whether the atom came from a bracket expression.
    pub bracket: bool,
}

/// A bond between two distinct atoms, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub order: BondOrder,
    pub a: usize,
    pub b: usize,
}

/// Parsed molecular graph with implicit hydrogens assigned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// adjacency[i] = (neighbor atom index, bond index), in insertion order.
    adjacency: Vec<Vec<(usize, usize)>>,
    /// True when the input carried stereo markers that were discarded.
    stereo_discarded: bool,
}

impl MolecularGraph {
    pub(crate) fn new(atoms: Vec<Atom>, bonds: Vec<Bond>, stereo_discarded: bool) -> Self {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (bi, bond) in bonds.iter().enumerate() {
            adjacency[bond.a].push((bond.b, bi));
            adjacency[bond.b].push((bond.a, bi));
        }
        let mut graph = MolecularGraph { atoms, bonds, adjacency, stereo_discarded };
        graph.assign_degrees();
        graph.assign_ring_membership();
        graph
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Neighbors of atom `i` as (neighbor index, bond order) pairs.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, BondOrder)> + '_ {
        self.adjacency[i].iter().map(|&(n, bi)| (n, self.bonds[bi].order))
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn stereo_discarded(&self) -> bool {
        self.stereo_discarded
    }

    pub fn net_charge(&self) -> i32 {
        self.atoms.iter().map(|a| a.formal_charge as i32).sum()
    }

    pub fn implicit_h_total(&self) -> u32 {
        self.atoms.iter().map(|a| a.implicit_h as u32).sum()
    }

    /// Component label per atom, labels dense from 0 in first-seen order.
    pub fn component_labels(&self) -> Vec<usize> {
        let n = self.atoms.len();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            stack.push(start);
            label[start] = next;
            while let Some(v) = stack.pop() {
                for &(w, _) in &self.adjacency[v] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn num_components(&self) -> usize {
        if self.atoms.is_empty() {
            0
        } else {
            *self.component_labels().iter().max().unwrap() + 1
        }
    }

    /// Cycle rank: bonds - atoms + components.
    pub fn ring_count(&self) -> usize {
        (self.bonds.len() + self.num_components()).saturating_sub(self.atoms.len())
    }

    /// Element counts including implicit hydrogens.
    pub fn element_counts(&self) -> BTreeMap<&'static str, u32> {
        let mut counts: BTreeMap<&'static str, u32> = BTreeMap::new();
        for atom in &self.atoms {
            *counts.entry(atom.element.symbol()).or_insert(0) += 1;
            if atom.implicit_h > 0 {
                *counts.entry("H").or_insert(0) += atom.implicit_h as u32;
            }
        }
        counts
    }

    /// Molecular formula in Hill order: C first and H second when carbon is
    /// present, otherwise all elements alphabetically.
    pub fn molecular_formula(&self) -> String {
        let counts = self.element_counts();
        let mut out = String::new();
        let mut push = |sym: &str, n: u32| {
            out.push_str(sym);
            if n > 1 {
                out.push_str(&n.to_string());
            }
        };
        if let Some(&c) = counts.get("C") {
            push("C", c);
            if let Some(&h) = counts.get("H") {
                push("H", h);
            }
            for (sym, &n) in &counts {
                if *sym != "C" && *sym != "H" {
                    push(sym, n);
                }
            }
        } else {
            for (sym, &n) in &counts {
                push(sym, n);
            }
        }
        out
    }

    /// Molecular weight from standard atomic weights, implicit H included.
    /// Summed over sorted element counts so the value is exactly invariant
    /// under atom reordering.
    pub fn molecular_weight(&self) -> f64 {
        self.element_counts()
            .iter()
            .map(|(sym, &n)| n as f64 * Element::from_symbol(sym).expect("known element").mass())
            .sum()
    }

    /// All-pairs shortest path distances within each connected component,
    /// summed over unordered pairs (the Wiener index, per component).
    pub fn wiener_index(&self) -> f64 {
        let n = self.atoms.len();
        let mut total = 0u64;
        let mut dist = vec![u32::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        for src in 0..n {
            dist.iter_mut().for_each(|d| *d = u32::MAX);
            dist[src] = 0;
            queue.push_back(src);
            while let Some(v) = queue.pop_front() {
                for &(w, _) in &self.adjacency[v] {
                    if dist[w] == u32::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            for &d in dist.iter().skip(src + 1) {
                if d != u32::MAX {
                    total += d as u64;
                }
            }
        }
        total as f64
    }

    fn assign_degrees(&mut self) {
        for i in 0..self.atoms.len() {
            self.atoms[i].degree = self.adjacency[i].len() as u8;
        }
    }

    /// Marks atoms on cycles: a bond is in a ring iff it is not a bridge.
    fn assign_ring_membership(&mut self) {
        let n = self.atoms.len();
        if n == 0 {
            return;
        }
        let mut disc = vec![0usize; n];
        let mut low = vec![0usize; n];
        let mut visited = vec![false; n];
        let mut is_bridge = vec![false; self.bonds.len()];
        let mut timer = 1usize;
        // Iterative DFS; (vertex, parent bond, neighbor cursor).
        let mut stack: Vec<(usize, usize, usize)> = Vec::new();
        for start in 0..n {
            if visited[start] {
                continue;
            }
            visited[start] = true;
            disc[start] = timer;
            low[start] = timer;
            timer += 1;
            stack.push((start, usize::MAX, 0));
            while let Some(&mut (v, pbond, ref mut cursor)) = stack.last_mut() {
                if *cursor < self.adjacency[v].len() {
                    let (w, bi) = self.adjacency[v][*cursor];
                    *cursor += 1;
                    if bi == pbond {
                        continue;
                    }
                    if visited[w] {
                        low[v] = low[v].min(disc[w]);
                    } else {
                        visited[w] = true;
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, bi, 0));
                    }
                } else {
                    stack.pop();
                    if let Some(&mut (parent, _, _)) = stack.last_mut() {
                        low[parent] = low[parent].min(low[v]);
                        if low[v] > disc[parent] {
                            is_bridge[pbond] = true;
                        }
                    }
                }
            }
        }
        for (bi, bond) in self.bonds.iter().enumerate() {
            if !is_bridge[bi] {
                self.atoms[bond.a].in_ring = true;
                self.atoms[bond.b].in_ring = true;
            }
        }
    }

    /// True for bonds on a cycle (used by the rotatable-bond descriptor).
    pub fn bond_in_ring(&self, bond_index: usize) -> bool {
        let bond = &self.bonds[bond_index];
        // Recompute cheaply: a bond is in a ring iff removing it keeps its
        // endpoints connected. Ring atoms alone are not sufficient, so walk.
        if !(self.atoms[bond.a].in_ring && self.atoms[bond.b].in_ring) {
            return false;
        }
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut stack = vec![bond.a];
        seen[bond.a] = true;
        while let Some(v) = stack.pop() {
            for &(w, bi) in &self.adjacency[v] {
                if bi == bond_index || seen[w] {
                    continue;
                }
                if w == bond.b {
                    return true;
                }
                seen[w] = true;
                stack.push(w);
            }
        }
        false
    }
}

/// Chemical element, stored as its periodic-table symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element(u8);

/// (symbol, atomic number, standard atomic weight)
const ELEMENTS: &[(&str, u8, f64)] = &[
    ("H", 1, 1.008),
    ("Li", 3, 6.94),
    ("Be", 4, 9.0122),
    ("B", 5, 10.81),
    ("C", 6, 12.011),
    ("N", 7, 14.007),
    ("O", 8, 15.999),
    ("F", 9, 18.998),
    ("Na", 11, 22.990),
    ("Mg", 12, 24.305),
    ("Al", 13, 26.982),
    ("Si", 14, 28.085),
    ("P", 15, 30.974),
    ("S", 16, 32.06),
    ("Cl", 17, 35.45),
    ("K", 19, 39.098),
    ("Ca", 20, 40.078),
    ("Ti", 22, 47.867),
    ("Cr", 24, 51.996),
    ("Mn", 25, 54.938),
    ("Fe", 26, 55.845),
    ("Co", 27, 58.933),
    ("Ni", 28, 58.693),
    ("Cu", 29, 63.546),
    ("Zn", 30, 65.38),
    ("As", 33, 74.922),
    ("Se", 34, 78.971),
    ("Br", 35, 79.904),
    ("Sn", 50, 118.71),
    ("Te", 52, 127.60),
    ("I", 53, 126.904),
    ("Pt", 78, 195.08),
    ("Au", 79, 196.97),
    ("Hg", 80, 200.59),
    ("Pb", 82, 207.2),
];

impl Element {
    /// Looks a symbol up in the periodic table subset this crate knows.
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        ELEMENTS
            .iter()
            .position(|&(s, _, _)| s == symbol)
            .map(|i| Element(i as u8))
    }

    pub fn symbol(&self) -> &'static str {
        ELEMENTS[self.0 as usize].0
    }

    pub fn atomic_number(&self) -> u8 {
        ELEMENTS[self.0 as usize].1
    }

    pub fn mass(&self) -> f64 {
        ELEMENTS[self.0 as usize].2
    }

    /// Standard valence list for organic-subset atoms, lowest first.
    /// Empty for elements that only appear in brackets.
    pub fn standard_valences(&self) -> &'static [u8] {
        match self.symbol() {
            "B" => &[3],
            "C" => &[4],
            "N" => &[3, 5],
            "O" => &[2],
            "P" => &[3, 5],
            "S" => &[2, 4, 6],
            "F" | "Cl" | "Br" | "I" => &[1],
            _ => &[],
        }
    }

    pub fn is_halogen(&self) -> bool {
        matches!(self.symbol(), "F" | "Cl" | "Br" | "I")
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_hill_order() {
        let g = parse_smiles("CCO").unwrap();
        assert_eq!(g.molecular_formula(), "C2H6O");
        let g = parse_smiles("[NH4+]").unwrap();
        assert_eq!(g.molecular_formula(), "H4N");
        assert_eq!(g.net_charge(), 1);
        let g = parse_smiles("c1ccccc1O").unwrap();
        assert_eq!(g.molecular_formula(), "C6H6O");
    }

    #[test]
    fn ring_membership_and_cycle_rank() {
        let g = parse_smiles("c1ccccc1O").unwrap();
        assert_eq!(g.ring_count(), 1);
        let ring_atoms = g.atoms().iter().filter(|a| a.in_ring).count();
        assert_eq!(ring_atoms, 6);
        assert!(!g.atoms()[6].in_ring);

        let chain = parse_smiles("CCCC").unwrap();
        assert_eq!(chain.ring_count(), 0);
        assert!(chain.atoms().iter().all(|a| !a.in_ring));

        let naphthalene = parse_smiles("c1ccc2ccccc2c1").unwrap();
        assert_eq!(naphthalene.ring_count(), 2);
        assert!(naphthalene.atoms().iter().all(|a| a.in_ring));
    }

    #[test]
    fn components_and_dot_disconnect() {
        let g = parse_smiles("CCO.[Na+]").unwrap();
        assert_eq!(g.num_components(), 2);
        assert_eq!(g.net_charge(), 1);
    }

    #[test]
    fn wiener_index_linear_chain() {
        // Butane: pairwise distances 1,2,3,1,2,1 -> 10.
        let g = parse_smiles("CCCC").unwrap();
        assert_eq!(g.wiener_index(), 10.0);
    }

    #[test]
    fn methane_weight() {
        let g = parse_smiles("C").unwrap();
        assert!((g.molecular_weight() - 16.043).abs() < 1e-9);
    }

    #[test]
    fn bond_ring_query() {
        let g = parse_smiles("C1CC1C").unwrap();
        let in_ring: Vec<bool> = (0..g.bonds().len()).map(|i| g.bond_in_ring(i)).collect();
        assert_eq!(in_ring.iter().filter(|&&b| b).count(), 3);
        assert_eq!(in_ring.iter().filter(|&&b| !b).count(), 1);
    }
}
