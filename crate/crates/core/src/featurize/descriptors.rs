//! Graph-derived physicochemical descriptor set.
//!
//! A compact, fully 2D-computable stand-in for the usual large descriptor
//! packages: composition counts, ring statistics, hydrogen-bonding proxies,
//! topology (Wiener index), and simple shape/charge summaries. The schema is
//! fixed and versioned; every molecule in a run gets the same column order.

use serde::{Deserialize, Serialize};

use crate::smiles::{BondOrder, MolecularGraph};

/// Bumped whenever the schema below changes shape or meaning.
pub const DESCRIPTOR_SCHEMA_VERSION: u32 = 1;

const NAMES: &[&str] = &[
    "mol_weight",
    "heavy_atom_count",
    "carbon_count",
    "nitrogen_count",
    "oxygen_count",
    "sulfur_count",
    "phosphorus_count",
    "halogen_count",
    "other_element_count",
    "ring_count",
    "ring_atom_count",
    "aromatic_atom_count",
    "aromatic_bond_count",
    "double_bond_count",
    "triple_bond_count",
    "rotatable_bond_count",
    "hbond_donor_count",
    "hbond_acceptor_count",
    "mean_degree",
    "max_degree",
    "wiener_index",
    "frac_sp3_carbon",
    "net_formal_charge",
    "implicit_h_total",
    "heteroatom_fraction",
    "component_count",
];

/// Column names of the descriptor schema, in output order.
pub fn descriptor_names() -> &'static [&'static str] {
    NAMES
}

/// Real vector over the fixed descriptor schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorVector {
    values: Vec<f64>,
}

impl DescriptorVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        NAMES.iter().position(|&n| n == name).map(|i| self.values[i])
    }
}

/// Computes the descriptor vector for one molecule. All entries are finite.
pub fn physchem_descriptors(graph: &MolecularGraph) -> DescriptorVector {
    let n = graph.heavy_atom_count();
    let atoms = graph.atoms();

    let mut carbon = 0u32;
    let mut nitrogen = 0u32;
    let mut oxygen = 0u32;
    let mut sulfur = 0u32;
    let mut phosphorus = 0u32;
    let mut halogen = 0u32;
    let mut other = 0u32;
    let mut aromatic_atoms = 0u32;
    let mut ring_atoms = 0u32;
    let mut donors = 0u32;
    let mut acceptors = 0u32;
    let mut max_degree = 0u32;
    let mut degree_sum = 0u32;

    for atom in atoms {
        match atom.element.symbol() {
            "C" => carbon += 1,
            "N" => nitrogen += 1,
            "O" => oxygen += 1,
            "S" => sulfur += 1,
            "P" => phosphorus += 1,
            _ if atom.element.is_halogen() => halogen += 1,
            _ => other += 1,
        }
        if atom.is_aromatic {
            aromatic_atoms += 1;
        }
        if atom.in_ring {
            ring_atoms += 1;
        }
        let is_n_or_o = matches!(atom.element.symbol(), "N" | "O");
        if is_n_or_o {
            acceptors += 1;
            if atom.implicit_h > 0 {
                donors += 1;
            }
        }
        max_degree = max_degree.max(atom.degree as u32);
        degree_sum += atom.degree as u32;
    }

    let mut aromatic_bonds = 0u32;
    let mut double_bonds = 0u32;
    let mut triple_bonds = 0u32;
    let mut rotatable = 0u32;
    for (bi, bond) in graph.bonds().iter().enumerate() {
        match bond.order {
            BondOrder::Aromatic => aromatic_bonds += 1,
            BondOrder::Double => double_bonds += 1,
            BondOrder::Triple => triple_bonds += 1,
            BondOrder::Single => {
                let a = &atoms[bond.a];
                let b = &atoms[bond.b];
                if a.degree >= 2 && b.degree >= 2 && !graph.bond_in_ring(bi) {
                    rotatable += 1;
                }
            }
        }
    }

    // Carbons whose every explicit bond is single.
    let mut sp3_carbons = 0u32;
    for (i, atom) in atoms.iter().enumerate() {
        if atom.element.symbol() == "C"
            && !atom.is_aromatic
            && graph.neighbors(i).all(|(_, order)| order == BondOrder::Single)
        {
            sp3_carbons += 1;
        }
    }
    let frac_sp3 = if carbon > 0 { sp3_carbons as f64 / carbon as f64 } else { 0.0 };
    let hetero_frac = if n > 0 { (n as u32 - carbon) as f64 / n as f64 } else { 0.0 };
    let mean_degree = if n > 0 { degree_sum as f64 / n as f64 } else { 0.0 };

    let values = vec![
        graph.molecular_weight(),
        n as f64,
        carbon as f64,
        nitrogen as f64,
        oxygen as f64,
        sulfur as f64,
        phosphorus as f64,
        halogen as f64,
        other as f64,
        graph.ring_count() as f64,
        ring_atoms as f64,
        aromatic_atoms as f64,
        aromatic_bonds as f64,
        double_bonds as f64,
        triple_bonds as f64,
        rotatable as f64,
        donors as f64,
        acceptors as f64,
        mean_degree,
        max_degree as f64,
        graph.wiener_index(),
        frac_sp3,
        graph.net_charge() as f64,
        graph.implicit_h_total() as f64,
        hetero_frac,
        graph.num_components() as f64,
    ];
    debug_assert_eq!(values.len(), NAMES.len());
    debug_assert!(values.iter().all(|v| v.is_finite()));
    DescriptorVector { values }
}
