//! Exact unitary dynamics via per-sector eigendecomposition.
//!
//! Every catalog Hamiltonian is time-independent in its declared picture, so
//! e^{−iHt} follows from one Hermitian eigendecomposition per conserved
//! sector instead of a step integrator: spectra are exact and long-time
//! trajectories are drift-free. The basis is partitioned by the joint
//! eigenvalue tuple of all *diagonal* registered constants of motion (the
//! whole space if there are none), H is diagonalized in each block, and a
//! state advances by phase rotation of its sector coefficients.
//!
//! Truncation is monitored rather than assumed: the population within
//! `photon_change` levels of either cutoff is tracked as a running maximum
//! (`leaked_norm`), and evolution aborts once it exceeds the guard
//! threshold, because amplitude that reaches the boundary band is amplitude
//! the truncated ladder may be corrupting.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::hilbert::{joint_diagonal_partition, HilbertSpace};
use crate::models::BuiltModel;
use crate::sparse::SparseOperator;
use crate::states::StateVector;
use crate::{Error, Result};

/// Sampled trajectory: times, one named column per observable, and the
/// running-maximum boundary population.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<(String, Vec<Complex64>)>,
    pub leaked_norm: Vec<f64>,
}

impl TimeSeries {
    pub fn column(&self, name: &str) -> Option<&[Complex64]> {
        self.values
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// CSV rendering: `time`, one column per observable (split into
    /// `name.re`/`name.im` when the imaginary part is not negligible), and
    /// `leaked_norm` last. Full-precision scientific notation.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["time".to_string()];
        let mut complex_cols = Vec::with_capacity(self.values.len());
        for (name, column) in &self.values {
            let complex = column.iter().any(|v| v.im.abs() > 1e-9);
            complex_cols.push(complex);
            if complex {
                header.push(format!("{name}.re"));
                header.push(format!("{name}.im"));
            } else {
                header.push(name.clone());
            }
        }
        header.push("leaked_norm".to_string());
        let mut out = header.join(",");
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.16e}")];
            for ((_, column), complex) in self.values.iter().zip(&complex_cols) {
                row.push(format!("{:.16e}", column[i].re));
                if *complex {
                    row.push(format!("{:.16e}", column[i].im));
                }
            }
            row.push(format!("{:.16e}", self.leaked_norm[i]));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

struct SectorEigen {
    indices: Vec<usize>,
    eigenvalues: DVector<f64>,
    vectors: DMatrix<Complex64>,
}

/// Cyclic complex Jacobi sweeps applied to V†HV, started from an existing
/// eigendecomposition. The QL-based solver can leave eigenpair residuals of
/// order 1e-9·‖H‖ inside nearly degenerate clusters (orthonormal vectors,
/// accurate Rayleigh quotients, but mixed within the cluster), which a
/// propagator turns into t·‖Hv − λv‖ phase errors. Starting nearly diagonal,
/// the sweeps converge quadratically and restore residuals to machine level.
fn jacobi_polish(
    dense: &DMatrix<Complex64>,
    vectors: DMatrix<Complex64>,
) -> (DVector<f64>, DMatrix<Complex64>) {
    let n = vectors.ncols();
    let mut m = vectors.adjoint() * dense * &vectors;
    let mut v = vectors;
    let scale = dense
        .iter()
        .map(|x| x.norm())
        .fold(f64::MIN_POSITIVE, f64::max);
    let threshold = scale * 1e-16;
    for _ in 0..4 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let b = m[(p, q)];
                let babs = b.norm();
                if babs <= threshold {
                    continue;
                }
                rotated = true;
                let u = b / babs;
                let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * babs);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = t * cos;
                // R = [[u·cos, −u·sin], [sin, cos]] diagonalizes the (p,q)
                // block; apply M ← R†MR and V ← VR.
                let (rpp, rpq) = (u * cos, -u * sin);
                let (rqp, rqq) = (Complex64::new(sin, 0.0), Complex64::new(cos, 0.0));
                for k in 0..n {
                    let (mp, mq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = mp * rpp + mq * rqp;
                    m[(k, q)] = mp * rpq + mq * rqq;
                }
                for k in 0..n {
                    let (mp, mq) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = rpp.conj() * mp + rqp.conj() * mq;
                    m[(q, k)] = rpq.conj() * mp + rqq.conj() * mq;
                }
                for k in 0..v.nrows() {
                    let (vp, vq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vp * rpp + vq * rqp;
                    v[(k, q)] = vp * rpq + vq * rqq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let values = DVector::from_iterator(n, m.diagonal().iter().map(|x| x.re));
    (values, v)
}

/// Reusable propagation plan for one Hamiltonian: sector eigendecompositions
/// plus the truncation-boundary membership mask.
pub struct EvolutionPlan {
    space: HilbertSpace,
    sectors: Vec<SectorEigen>,
    boundary: Vec<bool>,
    guard: f64,
}

pub const DEFAULT_GUARD: f64 = 1e-8;

impl EvolutionPlan {
    pub fn new(model: &BuiltModel) -> Result<Self> {
        Self::with_guard(model, DEFAULT_GUARD)
    }

    pub fn with_guard(model: &BuiltModel, guard: f64) -> Result<Self> {
        if !(guard > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "guard threshold must be positive, got {guard}"
            )));
        }
        let space = model.hamiltonian.space();
        let diagonals: Vec<&SparseOperator> = model
            .conserved
            .iter()
            .map(|(_, k)| k)
            .filter(|k| k.is_diagonal())
            .collect();
        let partition = joint_diagonal_partition(&space, &diagonals);
        let mut sectors = Vec::with_capacity(partition.len());
        for indices in partition {
            let dense = model.hamiltonian.restricted_dense(&indices);
            let eig = SymmetricEigen::new(dense);
            sectors.push(SectorEigen {
                indices,
                eigenvalues: eig.eigenvalues,
                vectors: eig.eigenvectors,
            });
        }
        let (k1, k2) = model.photon_change;
        let boundary = (0..space.total_dim())
            .map(|i| {
                let (_, n1, n2) = space.basis_unindex(i);
                n1 + k1 > space.cutoff1 || n2 + k2 > space.cutoff2
            })
            .collect();
        Ok(EvolutionPlan { space, sectors, boundary, guard })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    /// Assembles U(t) = Σ_sectors V e^{−iΛt} V† as a sparse operator.
    pub fn propagator(&self, t: f64) -> SparseOperator {
        let mut u = SparseOperator::zero(&self.space);
        for sector in &self.sectors {
            let dim = sector.indices.len();
            let phases = DVector::from_iterator(
                dim,
                sector
                    .eigenvalues
                    .iter()
                    .map(|&e| (Complex64::new(0.0, -e * t)).exp()),
            );
            let block = &sector.vectors
                * DMatrix::from_diagonal(&phases)
                * sector.vectors.adjoint();
            for r in 0..dim {
                for col in 0..dim {
                    let v = block[(r, col)];
                    if v.norm_sqr() > 1e-32 {
                        u.insert_add(sector.indices[r], sector.indices[col], v);
                    }
                }
            }
        }
        u
    }

    /// Sector coefficients V†ψ, computed once per trajectory. Sectors the
    /// state has no support in are skipped exactly.
    fn prepare(&self, psi: &StateVector) -> Vec<Option<DVector<Complex64>>> {
        self.sectors
            .iter()
            .map(|sector| {
                let gathered = DVector::from_iterator(
                    sector.indices.len(),
                    sector.indices.iter().map(|&i| psi.amplitudes[i]),
                );
                if gathered.iter().all(|v| v.norm_sqr() == 0.0) {
                    None
                } else {
                    Some(sector.vectors.adjoint() * gathered)
                }
            })
            .collect()
    }

    fn reconstruct(
        &self,
        prepared: &[Option<DVector<Complex64>>],
        t: f64,
    ) -> Vec<Complex64> {
        let mut amps = vec![Complex64::new(0.0, 0.0); self.space.total_dim()];
        for (sector, coeffs) in self.sectors.iter().zip(prepared) {
            let Some(coeffs) = coeffs else { continue };
            let rotated = DVector::from_iterator(
                coeffs.len(),
                coeffs
                    .iter()
                    .zip(sector.eigenvalues.iter())
                    .map(|(c, &e)| c * Complex64::new(0.0, -e * t).exp()),
            );
            let local = &sector.vectors * rotated;
            for (slot, v) in sector.indices.iter().zip(local.iter()) {
                amps[*slot] = *v;
            }
        }
        amps
    }

    fn boundary_population(&self, amps: &[Complex64]) -> f64 {
        amps.iter()
            .zip(&self.boundary)
            .filter(|(_, b)| **b)
            .map(|(a, _)| a.norm_sqr())
            .sum()
    }

    pub fn evolve(&self, psi0: &StateVector, t: f64) -> Result<StateVector> {
        if psi0.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        let prepared = self.prepare(psi0);
        let amps = self.reconstruct(&prepared, t);
        let leaked = self.boundary_population(&amps);
        if leaked > self.guard {
            return Err(Error::GuardExceeded { time: t, leaked, guard: self.guard });
        }
        StateVector::from_amplitudes(self.space, amps)
    }

    /// Expectation values of the named observables along a trajectory.
    pub fn evolve_series(
        &self,
        psi0: &StateVector,
        times: &[f64],
        observables: &[(String, SparseOperator)],
    ) -> Result<TimeSeries> {
        self.run_series(psi0, times, observables, None)
    }

    /// Variance ⟨Ô²⟩ − ⟨Ô⟩² of a Hermitian observable along a trajectory.
    pub fn variance_series(
        &self,
        psi0: &StateVector,
        times: &[f64],
        name: &str,
        op: &SparseOperator,
    ) -> Result<TimeSeries> {
        let dev = op.hermiticity_deviation();
        if dev > 1e-12 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        self.run_series(psi0, times, &[], Some((name, op)))
    }

    fn run_series(
        &self,
        psi0: &StateVector,
        times: &[f64],
        observables: &[(String, SparseOperator)],
        variance_of: Option<(&str, &SparseOperator)>,
    ) -> Result<TimeSeries> {
        if psi0.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        for (name, op) in observables {
            if op.space() != self.space {
                return Err(Error::InvalidParameter(format!(
                    "observable {name} lives on a different space"
                )));
            }
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter(
                "time grid must be non-decreasing".into(),
            ));
        }
        let prepared = self.prepare(psi0);
        let mut columns: Vec<(String, Vec<Complex64>)> = observables
            .iter()
            .map(|(name, _)| (name.clone(), Vec::with_capacity(times.len())))
            .collect();
        if let Some((name, _)) = variance_of {
            columns.push((name.to_string(), Vec::with_capacity(times.len())));
        }
        let mut leaked_norm = Vec::with_capacity(times.len());
        let mut high_water: f64 = 0.0;
        for &t in times {
            let amps = self.reconstruct(&prepared, t);
            high_water = high_water.max(self.boundary_population(&amps));
            if high_water > self.guard {
                return Err(Error::GuardExceeded {
                    time: t,
                    leaked: high_water,
                    guard: self.guard,
                });
            }
            leaked_norm.push(high_water);
            for (slot, (_, op)) in observables.iter().enumerate() {
                let applied = op.apply_vec(&amps);
                let val: Complex64 = amps
                    .iter()
                    .zip(&applied)
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                columns[slot].1.push(val);
            }
            if let Some((_, op)) = variance_of {
                let applied = op.apply_vec(&amps);
                let mean: Complex64 = amps
                    .iter()
                    .zip(&applied)
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let second: f64 = applied.iter().map(|v| v.norm_sqr()).sum();
                let var = second - mean.norm_sqr();
                columns.last_mut().unwrap().1.push(Complex64::new(var, 0.0));
            }
        }
        Ok(TimeSeries {
            times: times.to_vec(),
            values: columns,
            leaked_norm,
        })
    }
}
