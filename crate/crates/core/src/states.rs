//! State factories and observables.
//!
//! Families covered: Fock products |a, n₁, n₂⟩, coherent products, SU(2)
//! coherent states |τ, j⟩ = exp(βĴ₊ − β*Ĵ₋)|j,−j⟩ with β = arctan|τ|·e^{i argτ},
//! pair-coherent states |ξ; q⟩ with âₓâ_y|ξ;q⟩ = ξ|ξ;q⟩ and n̂ₓ−n̂_y = q,
//! displaced squeezed states D(α)S(ξ)|0⟩ with S(ξ) = exp(ξâ†² − ξ*â²),
//! single-mode and pair cats, rotated-axis and circular Fock states, and the
//! shared-single-photon pair (e^{iφ}|0,1⟩ + |1,0⟩)/√2.
//!
//! Every factory checks that the discarded tail beyond the cutoffs stays
//! below 1e-8 and reports the tail mass otherwise. States built by an exact
//! in-sector exponential (SU(2) coherent, rotated Fock) have zero tail by
//! construction but demand cutoffs that contain the whole sector. For
//! displaced squeezed states the exponential is exactly unitary on the
//! truncated space, so the reported "tail" is the mass in the top two Fock
//! levels, a conservative proxy for the discarded population.
//!
//! Observables: expectations, variances, overlap fidelity, reduced
//! electronic populations, position-space densities on a (x′, y′) grid in
//! units of 1/β with β = √(mν/ħ), and two-mode quadrature squeezing against
//! the 1/4 vacuum benchmark.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hilbert::HilbertSpace;
use crate::ops::{
    self, circular_op, mode_op, mode_rotation, quadrature_ops, LadderKind, Mode,
};
use crate::sparse::SparseOperator;
use crate::special::hermite_functions;
use crate::{Error, Result};

const TAIL_LIMIT: f64 = 1e-8;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Pure state on a composite space. Amplitudes are indexed by
/// [`HilbertSpace::basis_index`].
#[derive(Clone, Debug)]
pub struct StateVector {
    pub space: HilbertSpace,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Wraps raw amplitudes, renormalizing. Errors on a numerically null
    /// vector.
    pub fn from_amplitudes(space: HilbertSpace, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::SpaceMismatch);
        }
        let mut state = StateVector { space, amplitudes };
        let n = state.norm();
        if n < 1e-12 {
            return Err(Error::InvalidParameter(
                "state vector has numerically zero norm".into(),
            ));
        }
        for a in &mut state.amplitudes {
            *a /= n;
        }
        Ok(state)
    }

    pub fn basis(space: HilbertSpace, atom: usize, n1: usize, n2: usize) -> Result<Self> {
        let idx = space.basis_index(atom, n1, n2)?;
        let mut amplitudes = vec![c(0.0, 0.0); space.total_dim()];
        amplitudes[idx] = c(1.0, 0.0);
        Ok(StateVector { space, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Normalized linear combination Σ w_k |ψ_k⟩.
    pub fn superpose(terms: &[(Complex64, &StateVector)]) -> Result<Self> {
        let space = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty superposition".into()))?
            .1
            .space;
        let mut amplitudes = vec![c(0.0, 0.0); space.total_dim()];
        for (w, psi) in terms {
            if psi.space != space {
                return Err(Error::SpaceMismatch);
            }
            for (acc, a) in amplitudes.iter_mut().zip(&psi.amplitudes) {
                *acc += w * a;
            }
        }
        StateVector::from_amplitudes(space, amplitudes)
    }

    pub fn expectation(&self, op: &SparseOperator) -> Result<Complex64> {
        if op.space() != self.space {
            return Err(Error::SpaceMismatch);
        }
        let applied = op.apply_vec(&self.amplitudes);
        Ok(self
            .amplitudes
            .iter()
            .zip(&applied)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// ⟨Ô²⟩ − ⟨Ô⟩² for Hermitian Ô.
    pub fn variance(&self, op: &SparseOperator) -> Result<f64> {
        if op.space() != self.space {
            return Err(Error::SpaceMismatch);
        }
        let applied = op.apply_vec(&self.amplitudes);
        let mean: Complex64 = self
            .amplitudes
            .iter()
            .zip(&applied)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let second: f64 = applied.iter().map(|v| v.norm_sqr()).sum();
        Ok(second - mean.norm_sqr())
    }

    /// Population per atomic level, tracing out both modes.
    pub fn electronic_populations(&self) -> Vec<f64> {
        let mut pops = vec![0.0; self.space.atom_dim];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let (level, _, _) = self.space.basis_unindex(i);
            pops[level] += a.norm_sqr();
        }
        pops
    }

    pub fn to_document(&self) -> StateDocument {
        StateDocument {
            atom_dim: self.space.atom_dim,
            cutoff1: self.space.cutoff1,
            cutoff2: self.space.cutoff2,
            amplitudes: self.amplitudes.iter().map(|a| (a.re, a.im)).collect(),
        }
    }
}

/// |⟨a|b⟩|².
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Self-describing serialized form: space header plus (re, im) pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateDocument {
    pub atom_dim: usize,
    pub cutoff1: usize,
    pub cutoff2: usize,
    pub amplitudes: Vec<(f64, f64)>,
}

impl StateDocument {
    pub fn to_state(&self) -> Result<StateVector> {
        let space = HilbertSpace::new(self.atom_dim, self.cutoff1, self.cutoff2)?;
        StateVector::from_amplitudes(
            space,
            self.amplitudes.iter().map(|&(re, im)| c(re, im)).collect(),
        )
    }
}

/// Mixed state as a dense Hermitian matrix in the composite basis.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub space: HilbertSpace,
    pub matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(psi: &StateVector) -> Self {
        let d = psi.space.total_dim();
        let v = nalgebra::DVector::from_column_slice(&psi.amplitudes);
        DensityMatrix {
            space: psi.space,
            matrix: DMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj()),
        }
    }

    /// Equal-weight classical mixture of pure states.
    pub fn mixture(states: &[StateVector]) -> Result<Self> {
        let space = states
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?
            .space;
        let d = space.total_dim();
        let w = 1.0 / states.len() as f64;
        let mut matrix = DMatrix::from_element(d, d, c(0.0, 0.0));
        for psi in states {
            if psi.space != space {
                return Err(Error::SpaceMismatch);
            }
            for i in 0..d {
                for j in 0..d {
                    matrix[(i, j)] += psi.amplitudes[i] * psi.amplitudes[j].conj() * w;
                }
            }
        }
        Ok(DensityMatrix { space, matrix })
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.space.total_dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// Reduced state of the two vibrational modes: trace over the
    /// electronic factor. The basis ordering keeps each atom level a
    /// contiguous block, so this sums the diagonal blocks.
    pub fn motional_reduced(&self) -> DMatrix<Complex64> {
        let d_mode = self.space.dim1() * self.space.dim2();
        let mut out = DMatrix::from_element(d_mode, d_mode, c(0.0, 0.0));
        for a in 0..self.space.atom_dim {
            let off = a * d_mode;
            for r in 0..d_mode {
                for col in 0..d_mode {
                    out[(r, col)] += self.matrix[(off + r, off + col)];
                }
            }
        }
        out
    }

    /// Checks trace ≈ 1, Hermiticity, and spectrum ≥ −1e-8.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace {tr} deviates from one"
            )));
        }
        let mut herm_dev: f64 = 0.0;
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                herm_dev = herm_dev.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        if herm_dev > 1e-10 {
            return Err(Error::NotHermitian { deviation: herm_dev });
        }
        let eig = nalgebra::SymmetricEigen::new(self.matrix.clone());
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-8 {
            return Err(Error::InvalidParameter(format!(
                "density matrix has negative eigenvalue {min}"
            )));
        }
        Ok(())
    }

    /// tr(ρÔ).
    pub fn expectation(&self, op: &SparseOperator) -> Result<Complex64> {
        if op.space() != self.space {
            return Err(Error::SpaceMismatch);
        }
        let mut sum = c(0.0, 0.0);
        for (row, col, v) in op.iter() {
            sum += self.matrix[(col, row)] * v;
        }
        Ok(sum)
    }

    /// ⟨ψ|ρ|ψ⟩, the fidelity against a pure target.
    pub fn fidelity_pure(&self, psi: &StateVector) -> Result<f64> {
        if psi.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        let mut sum = c(0.0, 0.0);
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                sum += psi.amplitudes[i].conj() * self.matrix[(i, j)] * psi.amplitudes[j];
            }
        }
        Ok(sum.re)
    }

    pub fn purity(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                sum += (self.matrix[(i, j)] * self.matrix[(j, i)]).re;
            }
        }
        sum
    }

    pub fn electronic_populations(&self) -> Vec<f64> {
        let mut pops = vec![0.0; self.space.atom_dim];
        for i in 0..self.space.total_dim() {
            let (level, _, _) = self.space.basis_unindex(i);
            pops[level] += self.matrix[(i, i)].re;
        }
        pops
    }
}

/// Recipe accepted by [`make_state`]. All mode-only families sit on atom
/// level 0; atomic superpositions are built with [`StateVector::superpose`].
#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    Fock { atom: usize, n1: usize, n2: usize },
    /// |atom⟩ ⊗ |α₁⟩ ⊗ |α₂⟩.
    Coherent { atom: usize, alpha1: Complex64, alpha2: Complex64 },
    /// |τ, j⟩ in the N = 2j total-quanta sector.
    Su2Coherent { tau: Complex64, twice_j: usize },
    PairCoherent { xi: Complex64, q: usize },
    /// D(α)S(ξ)|0⟩ on mode 1 (in that order), mode 2 in vacuum.
    Squeezed { alpha: Complex64, xi: Complex64 },
    /// N(|α⟩ + e^{iφ}|−α⟩) on mode 1.
    Cat { alpha: Complex64, phi: f64 },
    /// N_φ(|ξ; q⟩ + e^{iφ}|−ξ; q⟩).
    PairCat { xi: Complex64, q: usize, phi: f64 },
    /// |N, 0⟩ rotated by the Ĵ₂-generated mode rotation U(θ).
    RotatedFock { n: usize, theta: f64 },
    /// (â_r†)^{n_r} (â_l†)^{n_l} |0,0⟩ / √(n_r! n_l!).
    CircularFock { n_r: usize, n_l: usize },
    /// (e^{iφ}|0,1⟩ + |1,0⟩)/√2, the two modes sharing a single photon.
    EprPair { phi: f64 },
}

/// Σ_m x^{2m} / (m! (m+q)!) = I_q(2x)/x^q, finite at x = 0.
fn bessel_i_scaled(q: usize, x: f64) -> f64 {
    let mut qfact = 1.0;
    for i in 1..=q {
        qfact *= i as f64;
    }
    let mut term = 1.0 / qfact;
    let mut sum = term;
    for m in 1..300 {
        term *= x * x / (m as f64 * (m + q) as f64);
        sum += term;
        if term < sum.abs() * 1e-17 {
            break;
        }
    }
    sum
}

fn check_tail(tail: f64) -> Result<()> {
    if !(tail.abs() < TAIL_LIMIT) {
        return Err(Error::InsufficientCutoff { tail, limit: TAIL_LIMIT });
    }
    Ok(())
}

/// Single-mode coherent amplitudes up to `cutoff`, plus the Poisson tail
/// mass beyond it.
pub(crate) fn coherent_amplitudes(alpha: Complex64, cutoff: usize) -> (Vec<Complex64>, f64) {
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut coeff = c((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    let mut mass = 0.0;
    for n in 0..=cutoff {
        if n > 0 {
            coeff *= alpha / (n as f64).sqrt();
        }
        mass += coeff.norm_sqr();
        amps.push(coeff);
    }
    (amps, (1.0 - mass).max(0.0))
}

fn place_mode1(space: HilbertSpace, atom: usize, amps: &[Complex64]) -> Result<StateVector> {
    let mut amplitudes = vec![c(0.0, 0.0); space.total_dim()];
    for (n, &a) in amps.iter().enumerate() {
        amplitudes[space.basis_index(atom, n, 0)?] = a;
    }
    Ok(StateVector { space, amplitudes })
}

fn pair_coherent_amplitudes(
    space: HilbertSpace,
    xi: Complex64,
    q: usize,
) -> Result<(Vec<Complex64>, f64)> {
    if space.cutoff1 < q {
        return Err(Error::InsufficientCutoff { tail: 1.0, limit: TAIL_LIMIT });
    }
    let norm = bessel_i_scaled(q, xi.norm()).sqrt().recip();
    let lmax = (space.cutoff1 - q).min(space.cutoff2);
    let mut amplitudes = vec![c(0.0, 0.0); space.total_dim()];
    let mut coeff = c(1.0, 0.0);
    let mut qfact = 1.0;
    for i in 1..=q {
        qfact *= i as f64;
    }
    coeff /= qfact.sqrt();
    let mut mass = 0.0;
    for l in 0..=lmax {
        if l > 0 {
            coeff *= xi / ((l * (l + q)) as f64).sqrt();
        }
        let a = coeff * norm;
        mass += a.norm_sqr();
        amplitudes[space.basis_index(0, l + q, l)?] = a;
    }
    Ok((amplitudes, (1.0 - mass).max(0.0)))
}

/// Matrix exp(G) on the mode-1 Fock factor for anti-Hermitian G.
fn mode1_expm(space: HilbertSpace, build: impl Fn(&mut DMatrix<Complex64>)) -> DMatrix<Complex64> {
    let d = space.dim1();
    let mut g = DMatrix::from_element(d, d, c(0.0, 0.0));
    build(&mut g);
    let m = g.map(|v| v * Complex64::i()); // iG is Hermitian
    ops::expm_minus_i_hermitian(m, 1.0)
}

/// Builds the requested state, verifying the truncation tail.
pub fn make_state(space: &HilbertSpace, spec: &StateSpec) -> Result<StateVector> {
    let space = *space;
    match spec {
        StateSpec::Fock { atom, n1, n2 } => StateVector::basis(space, *atom, *n1, *n2),

        StateSpec::Coherent { atom, alpha1, alpha2 } => {
            if *atom >= space.atom_dim {
                return Err(Error::CoordinateOutOfRange {
                    name: "atom",
                    value: *atom,
                    max: space.atom_dim - 1,
                });
            }
            let (a1, tail1) = coherent_amplitudes(*alpha1, space.cutoff1);
            let (a2, tail2) = coherent_amplitudes(*alpha2, space.cutoff2);
            check_tail(tail1.max(tail2))?;
            let mut amplitudes = vec![c(0.0, 0.0); space.total_dim()];
            for (n1, &x) in a1.iter().enumerate() {
                for (n2, &y) in a2.iter().enumerate() {
                    amplitudes[space.basis_index(*atom, n1, n2)?] = x * y;
                }
            }
            StateVector::from_amplitudes(space, amplitudes)
        }

        StateSpec::Su2Coherent { tau, twice_j } => {
            let n = *twice_j;
            if space.cutoff1 < n || space.cutoff2 < n {
                return Err(Error::InsufficientCutoff { tail: 1.0, limit: TAIL_LIMIT });
            }
            let start = StateVector::basis(space, 0, 0, n)?; // |j, −j⟩
            if tau.norm() == 0.0 {
                return Ok(start);
            }
            let beta = Complex64::from_polar(tau.norm().atan(), tau.arg());
            let ax = mode_op(&space, Mode::One, LadderKind::Annihilate);
            let ay = mode_op(&space, Mode::Two, LadderKind::Annihilate);
            // Ĵ₊ = âₓ†â_y, Ĵ₋ = â_y†âₓ
            let jplus = &ax.dagger() * &ay;
            let generator = &jplus.scaled(beta) - &jplus.dagger().scaled(beta.conj());
            let sector: Vec<usize> = (0..space.total_dim())
                .filter(|&i| {
                    let (a, n1, n2) = space.basis_unindex(i);
                    a == 0 && n1 + n2 == n
                })
                .collect();
            let u = ops::expm_skew(&space, &generator, &[sector]);
            StateVector::from_amplitudes(space, u.apply_vec(&start.amplitudes))
        }

        StateSpec::PairCoherent { xi, q } => {
            let (amplitudes, tail) = pair_coherent_amplitudes(space, *xi, *q)?;
            check_tail(tail)?;
            StateVector::from_amplitudes(space, amplitudes)
        }

        StateSpec::Squeezed { alpha, xi } => {
            let squeeze = mode1_expm(space, |g| {
                let d = g.nrows();
                for n in 0..d.saturating_sub(2) {
                    let amp = (((n + 1) * (n + 2)) as f64).sqrt();
                    g[(n + 2, n)] += xi * amp;
                    g[(n, n + 2)] -= xi.conj() * amp;
                }
            });
            let displace = mode1_expm(space, |g| {
                let d = g.nrows();
                for n in 0..d.saturating_sub(1) {
                    let amp = ((n + 1) as f64).sqrt();
                    g[(n + 1, n)] += alpha * amp;
                    g[(n, n + 1)] -= alpha.conj() * amp;
                }
            });
            let d = space.dim1();
            let mut v = nalgebra::DVector::from_element(d, c(0.0, 0.0));
            v[0] = c(1.0, 0.0);
            let v = &displace * (&squeeze * v);
            // boundary-mass proxy for the discarded tail
            let tail: f64 = (d.saturating_sub(2)..d).map(|n| v[n].norm_sqr()).sum();
            check_tail(tail)?;
            place_mode1(space, 0, v.as_slice())
        }

        StateSpec::Cat { alpha, phi } => {
            let (plus, tail) = coherent_amplitudes(*alpha, space.cutoff1);
            let (minus, _) = coherent_amplitudes(-*alpha, space.cutoff1);
            check_tail(tail)?;
            let phase = Complex64::from_polar(1.0, *phi);
            let amps: Vec<Complex64> = plus
                .iter()
                .zip(&minus)
                .map(|(p, m)| p + phase * m)
                .collect();
            let state = place_mode1(space, 0, &amps)?;
            let n = state.norm();
            if n < 1e-9 {
                return Err(Error::InvalidParameter(
                    "cat components cancel at this amplitude and phase".into(),
                ));
            }
            StateVector::from_amplitudes(space, state.amplitudes)
        }

        StateSpec::PairCat { xi, q, phi } => {
            let (plus, tail) = pair_coherent_amplitudes(space, *xi, *q)?;
            let (minus, _) = pair_coherent_amplitudes(space, -*xi, *q)?;
            check_tail(tail)?;
            let phase = Complex64::from_polar(1.0, *phi);
            let amps: Vec<Complex64> = plus
                .iter()
                .zip(&minus)
                .map(|(p, m)| p + phase * m)
                .collect();
            let probe = StateVector { space, amplitudes: amps };
            if probe.norm() < 1e-9 {
                return Err(Error::InvalidParameter(
                    "pair-cat components cancel at this amplitude and phase".into(),
                ));
            }
            StateVector::from_amplitudes(space, probe.amplitudes)
        }

        StateSpec::RotatedFock { n, theta } => {
            if space.cutoff1 < *n || space.cutoff2 < *n {
                return Err(Error::InsufficientCutoff { tail: 1.0, limit: TAIL_LIMIT });
            }
            let start = StateVector::basis(space, 0, *n, 0)?;
            let u = mode_rotation(&space, *theta);
            StateVector::from_amplitudes(space, u.apply_vec(&start.amplitudes))
        }

        StateSpec::CircularFock { n_r, n_l } => {
            let n = n_r + n_l;
            if space.cutoff1 < n || space.cutoff2 < n {
                return Err(Error::InsufficientCutoff { tail: 1.0, limit: TAIL_LIMIT });
            }
            let mut v = StateVector::basis(space, 0, 0, 0)?.amplitudes;
            let create_r = circular_op(&space, crate::ops::CircularMode::Right, LadderKind::Create);
            let create_l = circular_op(&space, crate::ops::CircularMode::Left, LadderKind::Create);
            for _ in 0..*n_r {
                v = create_r.apply_vec(&v);
            }
            for _ in 0..*n_l {
                v = create_l.apply_vec(&v);
            }
            StateVector::from_amplitudes(space, v)
        }

        StateSpec::EprPair { phi } => {
            if space.cutoff1 < 1 || space.cutoff2 < 1 {
                return Err(Error::InsufficientCutoff { tail: 1.0, limit: TAIL_LIMIT });
            }
            let mut amplitudes = vec![c(0.0, 0.0); space.total_dim()];
            let w = std::f64::consts::FRAC_1_SQRT_2;
            amplitudes[space.basis_index(0, 0, 1)?] = Complex64::from_polar(w, *phi);
            amplitudes[space.basis_index(0, 1, 0)?] = c(w, 0.0);
            StateVector::from_amplitudes(space, amplitudes)
        }
    }
}

/// |Ψ(x′, y′)|² on the supplied grid, electronic part traced out. Lengths
/// are in units of 1/β, β = √(mν/ħ), so the two-mode vacuum density is
/// π⁻¹e^{−(x′²+y′²)}.
pub fn spatial_density(state: &StateVector, grid: &[(f64, f64)]) -> Vec<f64> {
    let space = state.space;
    grid.iter()
        .map(|&(x, y)| {
            let hx = hermite_functions(space.cutoff1, x);
            let hy = hermite_functions(space.cutoff2, y);
            let mut density = 0.0;
            for level in 0..space.atom_dim {
                let mut wave = c(0.0, 0.0);
                for n1 in 0..space.dim1() {
                    for n2 in 0..space.dim2() {
                        let idx = space.basis_index(level, n1, n2).unwrap();
                        let a = state.amplitudes[idx];
                        if a.norm_sqr() > 0.0 {
                            wave += a * hx[n1] * hy[n2];
                        }
                    }
                }
                density += wave.norm_sqr();
            }
            density
        })
        .collect()
}

/// Two-mode quadrature variances against the coherent-state benchmark 1/4.
/// The boolean flags use a 1e-9 guard band so that roundoff on exactly
/// coherent inputs never reports squeezing.
pub fn squeezing_check(
    state: &StateVector,
    phase1: f64,
    phase2: f64,
) -> Result<(f64, f64, bool, bool)> {
    let (d1, d2) = quadrature_ops(&state.space, phase1, phase2);
    let v1 = state.variance(&d1)?;
    let v2 = state.variance(&d2)?;
    Ok((v1, v2, v1 < 0.25 - 1e-9, v2 < 0.25 - 1e-9))
}
