//! Composite Hilbert spaces atom ⊗ mode1 ⊗ mode2 and symmetry sectors.
//!
//! The basis is ordered row-major with the atom index slowest:
//! `index = (atom·(cutoff1+1) + n1)·(cutoff2+1) + n2`. A cutoff is the
//! maximum occupation of a mode; creation above the cutoff annihilates the
//! component (see the truncation rule in [`crate::ops`]). For two-level
//! atoms level 0 is the electronic ground state |−⟩ and level 1 the excited
//! state |+⟩.

use std::collections::BTreeMap;

use crate::sparse::SparseOperator;
use crate::{Error, Result};

/// Tensor-product space of a 1-, 2- or 3-level atom and two truncated modes.
///
/// Single-mode problems use `cutoff2 = 0`, which makes mode 2 a frozen
/// vacuum spectator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    pub atom_dim: usize,
    pub cutoff1: usize,
    pub cutoff2: usize,
}

impl HilbertSpace {
    /// Builds a space, rejecting unsupported atomic level counts.
    pub fn new(atom_dim: usize, cutoff1: usize, cutoff2: usize) -> Result<Self> {
        if !(1..=3).contains(&atom_dim) {
            return Err(Error::AtomDim(atom_dim));
        }
        Ok(HilbertSpace {
            atom_dim,
            cutoff1,
            cutoff2,
        })
    }

    pub fn total_dim(&self) -> usize {
        self.atom_dim * (self.cutoff1 + 1) * (self.cutoff2 + 1)
    }

    /// Number of Fock levels of mode 1 (cutoff1 + 1).
    pub fn dim1(&self) -> usize {
        self.cutoff1 + 1
    }

    /// Number of Fock levels of mode 2 (cutoff2 + 1).
    pub fn dim2(&self) -> usize {
        self.cutoff2 + 1
    }

    /// Flattens (atom_level, n1, n2) into a basis index.
    pub fn basis_index(&self, atom_level: usize, n1: usize, n2: usize) -> Result<usize> {
        if atom_level >= self.atom_dim {
            return Err(Error::CoordinateOutOfRange {
                name: "atom_level",
                value: atom_level,
                max: self.atom_dim - 1,
            });
        }
        if n1 > self.cutoff1 {
            return Err(Error::CoordinateOutOfRange {
                name: "n1",
                value: n1,
                max: self.cutoff1,
            });
        }
        if n2 > self.cutoff2 {
            return Err(Error::CoordinateOutOfRange {
                name: "n2",
                value: n2,
                max: self.cutoff2,
            });
        }
        Ok((atom_level * self.dim1() + n1) * self.dim2() + n2)
    }

    /// Inverse of [`basis_index`](Self::basis_index).
    pub fn basis_unindex(&self, index: usize) -> (usize, usize, usize) {
        debug_assert!(index < self.total_dim());
        let n2 = index % self.dim2();
        let rest = index / self.dim2();
        let n1 = rest % self.dim1();
        let atom = rest / self.dim1();
        (atom, n1, n2)
    }
}

/// One block of a conserved-operator decomposition: all basis states (or
/// eigenvectors, for a non-diagonal conserved operator) sharing one
/// eigenvalue within 1e-10.
#[derive(Clone, Debug)]
pub struct Sector {
    pub eigenvalue: f64,
    pub member_indices: Vec<usize>,
}

/// Splits the basis into sectors of a Hermitian conserved operator.
///
/// Diagonal operators are grouped exactly from their diagonal values. A
/// non-diagonal Hermitian operator is first diagonalized and the sectors
/// label its eigenspaces; `member_indices` then enumerates eigenvector
/// columns rather than Fock basis states.
pub fn sector_split(space: &HilbertSpace, conserved: &SparseOperator) -> Result<Vec<Sector>> {
    if conserved.space() != *space {
        return Err(Error::SpaceMismatch);
    }
    let dev = conserved.hermiticity_deviation();
    if dev > 1e-12 {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let values: Vec<f64> = if conserved.is_diagonal() {
        (0..space.total_dim())
            .map(|i| conserved.get(i, i).re)
            .collect()
    } else {
        let eig = nalgebra::SymmetricEigen::new(conserved.to_dense());
        eig.eigenvalues.iter().copied().collect()
    };
    Ok(group_by_value(&values, 1e-10))
}

/// Groups indices by value with the given absolute tolerance. Values whose
/// sorted neighbours differ by more than `tol` start a new sector.
pub(crate) fn group_by_value(values: &[f64], tol: f64) -> Vec<Sector> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut sectors: Vec<Sector> = Vec::new();
    for idx in order {
        let v = values[idx];
        match sectors.last_mut() {
            Some(s) if (v - s.eigenvalue).abs() <= tol => s.member_indices.push(idx),
            _ => sectors.push(Sector {
                eigenvalue: v,
                member_indices: vec![idx],
            }),
        }
    }
    for s in &mut sectors {
        s.member_indices.sort_unstable();
    }
    sectors
}

/// Partition of the basis by the joint eigenvalue tuple of several diagonal
/// operators, used by the sector-reduced propagator. Non-diagonal operators
/// are ignored by this routine.
pub(crate) fn joint_diagonal_partition(
    space: &HilbertSpace,
    diagonals: &[&SparseOperator],
) -> Vec<Vec<usize>> {
    let dim = space.total_dim();
    if diagonals.is_empty() {
        return vec![(0..dim).collect()];
    }
    // Diagonal conserved quantities here are half-integer combinations of
    // occupation numbers, so quantizing at 1e-6 is exact.
    let mut groups: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for i in 0..dim {
        let key: Vec<i64> = diagonals
            .iter()
            .map(|op| (op.get(i, i).re * 1e6).round() as i64)
            .collect();
        groups.entry(key).or_default().push(i);
    }
    groups.into_values().collect()
}
