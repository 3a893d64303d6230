//! Sparse complex operators over a [`HilbertSpace`].
//!
//! Entries live in a `BTreeMap` keyed by (row, col), which makes every
//! iteration order, and therefore every accumulated floating-point sum,
//! deterministic across runs. At the desk-scale dimensions this crate
//! targets (≲ 3000) that matters more than raw speed.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::hilbert::HilbertSpace;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SparseOperator {
    space: HilbertSpace,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl SparseOperator {
    pub fn zero(space: &HilbertSpace) -> Self {
        SparseOperator {
            space: *space,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let mut entries = BTreeMap::new();
        for i in 0..space.total_dim() {
            entries.insert((i, i), Complex64::new(1.0, 0.0));
        }
        SparseOperator {
            space: *space,
            entries,
        }
    }

    /// Builds an operator from (row, col, value) triplets; duplicates are
    /// summed, out-of-range indices rejected.
    pub fn from_triplets<I>(space: &HilbertSpace, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let dim = space.total_dim();
        let mut op = SparseOperator::zero(space);
        for (r, c, v) in triplets {
            if r >= dim {
                return Err(Error::CoordinateOutOfRange {
                    name: "row",
                    value: r,
                    max: dim - 1,
                });
            }
            if c >= dim {
                return Err(Error::CoordinateOutOfRange {
                    name: "col",
                    value: c,
                    max: dim - 1,
                });
            }
            op.insert_add(r, c, v);
        }
        Ok(op)
    }

    /// Diagonal operator with values produced per basis index.
    pub fn diagonal<F>(space: &HilbertSpace, f: F) -> Self
    where
        F: Fn(usize) -> Complex64,
    {
        let mut entries = BTreeMap::new();
        for i in 0..space.total_dim() {
            let v = f(i);
            if v != Complex64::new(0.0, 0.0) {
                entries.insert((i, i), v);
            }
        }
        SparseOperator {
            space: *space,
            entries,
        }
    }

    pub fn from_dense(space: &HilbertSpace, m: &DMatrix<Complex64>, drop_tol: f64) -> Self {
        assert_eq!(m.nrows(), space.total_dim());
        assert_eq!(m.ncols(), space.total_dim());
        let mut entries = BTreeMap::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v.norm() > drop_tol {
                    entries.insert((r, c), v);
                }
            }
        }
        SparseOperator {
            space: *space,
            entries,
        }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn insert_add(&mut self, row: usize, col: usize, value: Complex64) {
        let e = self
            .entries
            .entry((row, col))
            .or_insert(Complex64::new(0.0, 0.0));
        *e += value;
        if e.norm() == 0.0 {
            self.entries.remove(&(row, col));
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries
            .get(&(row, col))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn dagger(&self) -> Self {
        let mut entries = BTreeMap::new();
        for (&(r, c), &v) in &self.entries {
            entries.insert((c, r), v.conj());
        }
        SparseOperator {
            space: self.space,
            entries,
        }
    }

    /// O + O†, the ubiquitous "+ h.c." of interaction Hamiltonians.
    pub fn plus_dagger(&self) -> Self {
        self + &self.dagger()
    }

    pub fn scaled(&self, z: Complex64) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|&(_, &v)| (v * z).norm() != 0.0)
            .map(|(&k, &v)| (k, v * z))
            .collect();
        SparseOperator {
            space: self.space,
            entries,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.keys().all(|&(r, c)| r == c)
    }

    /// max |O − O†| over all entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for (&(r, c), &v) in &self.entries {
            dev = dev.max((v - self.get(c, r).conj()).norm());
        }
        dev
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Drops entries of magnitude ≤ `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|&(_, &v)| v.norm() > tol)
            .map(|(&k, &v)| (k, v))
            .collect();
        SparseOperator {
            space: self.space,
            entries,
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.space.total_dim();
        let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (&(r, c), &v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    /// Dense block of the operator restricted to a sorted index set.
    pub fn restricted_dense(&self, indices: &[usize]) -> DMatrix<Complex64> {
        let n = indices.len();
        let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for (&(r, c), &v) in &self.entries {
            if let (Ok(ri), Ok(ci)) = (indices.binary_search(&r), indices.binary_search(&c)) {
                m[(ri, ci)] = v;
            }
        }
        m
    }

    pub fn apply_slice(&self, input: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(input.len(), self.space.total_dim());
        assert_eq!(out.len(), input.len());
        out.fill(Complex64::new(0.0, 0.0));
        for (&(r, c), &v) in &self.entries {
            out[r] += v * input[c];
        }
    }

    pub fn apply_vec(&self, input: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); input.len()];
        self.apply_slice(input, &mut out);
        out
    }

    /// Sparse matrix product, row-range lookups on the right factor.
    fn matmul(&self, rhs: &SparseOperator) -> SparseOperator {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        let mut out = SparseOperator::zero(&self.space);
        for (&(r, k), &a) in &self.entries {
            for (&(_, c), &b) in rhs.entries.range((k, 0)..=(k, usize::MAX)) {
                out.insert_add(r, c, a * b);
            }
        }
        out
    }
}

impl Add for &SparseOperator {
    type Output = SparseOperator;
    fn add(self, rhs: &SparseOperator) -> SparseOperator {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        let mut out = self.clone();
        for (&(r, c), &v) in &rhs.entries {
            out.insert_add(r, c, v);
        }
        out
    }
}

impl Sub for &SparseOperator {
    type Output = SparseOperator;
    fn sub(self, rhs: &SparseOperator) -> SparseOperator {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        let mut out = self.clone();
        for (&(r, c), &v) in &rhs.entries {
            out.insert_add(r, c, -v);
        }
        out
    }
}

impl Mul for &SparseOperator {
    type Output = SparseOperator;
    fn mul(self, rhs: &SparseOperator) -> SparseOperator {
        self.matmul(rhs)
    }
}

impl Neg for &SparseOperator {
    type Output = SparseOperator;
    fn neg(self) -> SparseOperator {
        self.scaled(Complex64::new(-1.0, 0.0))
    }
}

/// [A, B] = AB − BA.
pub fn commutator(a: &SparseOperator, b: &SparseOperator) -> SparseOperator {
    &(a * b) - &(b * a)
}
