//! Elementary and composite operators: ladder operators, pseudospin,
//! three-level projectors, Schwinger angular momentum, circular-mode
//! operators, the Lamb-Dicke operator functions f̂ₖ(n̂;η), kick operators
//! e^{iη(â+â†)}, mode-basis rotations and two-mode quadratures.
//!
//! Truncation rule: â† applied to the cutoff state yields zero (the
//! component is discarded, not an error). Every evolution carries a leak
//! guard that reports how much population reaches the cutoff boundary, see
//! [`crate::evolve`].
//!
//! Conventions. The two-level atom has |−⟩ = level 0, |+⟩ = level 1 with
//! 2Ŝz|±⟩ = ±|±⟩, Ŝ±|∓⟩ = |±⟩. Modes map to Schwinger angular momentum as
//! Ĵ₁ = (âₓ†â_y + â_y†âₓ)/2, Ĵ₂ = (âₓ†â_y − â_y†âₓ)/2i, Ĵ₃ = (n̂ₓ − n̂_y)/2
//! with mode 1 = x, mode 2 = y. Circular quanta are â_r = (âₓ − iâ_y)/√2,
//! â_l = (âₓ + iâ_y)/√2, so that L̂z = n̂_r − n̂_l = 2Ĵ₂.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::hilbert::HilbertSpace;
use crate::sparse::SparseOperator;
use crate::special::{laguerre, sqrt_factorial_ratio};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub fn cutoff(self, space: &HilbertSpace) -> usize {
        match self {
            Mode::One => space.cutoff1,
            Mode::Two => space.cutoff2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadderKind {
    Annihilate,
    Create,
    Number,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinKind {
    Sz,
    SPlus,
    SMinus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AngularComponent {
    J1,
    J2,
    J3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircularMode {
    Right,
    Left,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Ladder or number operator of one mode, identity elsewhere.
pub fn mode_op(space: &HilbertSpace, mode: Mode, kind: LadderKind) -> SparseOperator {
    let mut op = SparseOperator::zero(space);
    for i in 0..space.total_dim() {
        let (a, n1, n2) = space.basis_unindex(i);
        let n = match mode {
            Mode::One => n1,
            Mode::Two => n2,
        };
        match kind {
            LadderKind::Number => {
                if n > 0 {
                    op.insert_add(i, i, c(n as f64, 0.0));
                }
            }
            LadderKind::Annihilate => {
                if n > 0 {
                    let j = match mode {
                        Mode::One => space.basis_index(a, n1 - 1, n2).unwrap(),
                        Mode::Two => space.basis_index(a, n1, n2 - 1).unwrap(),
                    };
                    op.insert_add(j, i, c((n as f64).sqrt(), 0.0));
                }
            }
            LadderKind::Create => {
                if n < mode.cutoff(space) {
                    let j = match mode {
                        Mode::One => space.basis_index(a, n1 + 1, n2).unwrap(),
                        Mode::Two => space.basis_index(a, n1, n2 + 1).unwrap(),
                    };
                    op.insert_add(j, i, c((n as f64 + 1.0).sqrt(), 0.0));
                }
            }
        }
    }
    op
}

/// Pseudospin-½ operator of a two-level atom, identity on the modes.
pub fn spin_op(space: &HilbertSpace, kind: SpinKind) -> Result<SparseOperator> {
    if space.atom_dim != 2 {
        return Err(Error::NotTwoLevel(space.atom_dim));
    }
    let mut op = SparseOperator::zero(space);
    for n1 in 0..space.dim1() {
        for n2 in 0..space.dim2() {
            let g = space.basis_index(0, n1, n2).unwrap();
            let e = space.basis_index(1, n1, n2).unwrap();
            match kind {
                SpinKind::Sz => {
                    op.insert_add(g, g, c(-0.5, 0.0));
                    op.insert_add(e, e, c(0.5, 0.0));
                }
                SpinKind::SPlus => op.insert_add(e, g, c(1.0, 0.0)),
                SpinKind::SMinus => op.insert_add(g, e, c(1.0, 0.0)),
            }
        }
    }
    Ok(op)
}

/// |bra⟩⟨ket| on the atomic levels, identity on the modes.
pub fn projector_op(space: &HilbertSpace, bra_level: usize, ket_level: usize) -> Result<SparseOperator> {
    for (name, level) in [("bra_level", bra_level), ("ket_level", ket_level)] {
        if level >= space.atom_dim {
            return Err(Error::CoordinateOutOfRange {
                name,
                value: level,
                max: space.atom_dim - 1,
            });
        }
    }
    let mut op = SparseOperator::zero(space);
    for n1 in 0..space.dim1() {
        for n2 in 0..space.dim2() {
            op.insert_add(
                space.basis_index(bra_level, n1, n2).unwrap(),
                space.basis_index(ket_level, n1, n2).unwrap(),
                c(1.0, 0.0),
            );
        }
    }
    Ok(op)
}

/// Schwinger angular momentum component built from the two modes.
pub fn schwinger(space: &HilbertSpace, component: AngularComponent) -> SparseOperator {
    let ax = mode_op(space, Mode::One, LadderKind::Annihilate);
    let ay = mode_op(space, Mode::Two, LadderKind::Annihilate);
    match component {
        AngularComponent::J1 => {
            (&(&ax.dagger() * &ay) + &(&ay.dagger() * &ax)).scaled(c(0.5, 0.0))
        }
        AngularComponent::J2 => {
            (&(&ax.dagger() * &ay) - &(&ay.dagger() * &ax)).scaled(c(0.0, -0.5))
        }
        AngularComponent::J3 => {
            (&mode_op(space, Mode::One, LadderKind::Number)
                - &mode_op(space, Mode::Two, LadderKind::Number))
                .scaled(c(0.5, 0.0))
        }
    }
}

/// Orbital angular momentum L̂z = n̂_r − n̂_l = 2Ĵ₂.
pub fn lz(space: &HilbertSpace) -> SparseOperator {
    schwinger(space, AngularComponent::J2).scaled(c(2.0, 0.0))
}

/// Circular-mode ladder operator; `Number` composes â†â of that circular mode.
pub fn circular_op(space: &HilbertSpace, which: CircularMode, kind: LadderKind) -> SparseOperator {
    let ax = mode_op(space, Mode::One, LadderKind::Annihilate);
    let ay = mode_op(space, Mode::Two, LadderKind::Annihilate);
    let inv_sqrt2 = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let sign = match which {
        CircularMode::Right => c(0.0, -1.0),
        CircularMode::Left => c(0.0, 1.0),
    };
    let ann = (&ax + &ay.scaled(sign)).scaled(inv_sqrt2);
    match kind {
        LadderKind::Annihilate => ann,
        LadderKind::Create => ann.dagger(),
        LadderKind::Number => &ann.dagger() * &ann,
    }
}

/// Diagonal Lamb-Dicke operator function
/// f̂ₖ(n̂;η) = e^{−η²/2} Σ_l (iη)^{2l} (â†)^l â^l / ((l+k)! l!),
/// evaluated in closed form per Fock level as
/// e^{−η²/2} · n!/(n+k)! · Lₙ^{(k)}(η²).
pub fn f_k_operator(space: &HilbertSpace, mode: Mode, k: usize, eta: f64) -> SparseOperator {
    let gauss = (-eta * eta / 2.0).exp();
    SparseOperator::diagonal(space, |i| {
        let (_, n1, n2) = space.basis_unindex(i);
        let n = match mode {
            Mode::One => n1,
            Mode::Two => n2,
        };
        let ratio = sqrt_factorial_ratio(n, k);
        c(gauss * ratio * ratio * laguerre(n, k, eta * eta), 0.0)
    })
}

/// Vibronic Rabi frequency of the k-th red sideband,
/// Ω_{n,n+k} = (iη)^k Ω e^{−η²/2} √(n!/(n+k)!) Lₙ^{(k)}(η²).
/// In the Lamb-Dicke limit this reduces to iηΩ√(n+1) for k = 1.
pub fn vibronic_rabi(n: usize, k: usize, eta: f64, omega: f64) -> Complex64 {
    let i_eta_k = Complex64::i().powu(k as u32) * eta.powi(k as i32);
    i_eta_k
        * omega
        * (-eta * eta / 2.0).exp()
        * sqrt_factorial_ratio(n, k)
        * laguerre(n, k, eta * eta)
}

/// Kick operator e^{iη(â+â†)} on one mode from its normally ordered double
/// sum e^{−η²/2} Σ_{p,q} (iη)^{p+q} (â†)^p â^q / (p! q!). The p,q ranges are
/// exhausted on the truncated space, so every omitted term is exactly zero
/// there (truncation rule) and no entry changes by more than 1e-14.
pub fn kick_operator(space: &HilbertSpace, mode: Mode, eta: f64) -> SparseOperator {
    let cutoff = mode.cutoff(space);
    let gauss = (-eta * eta / 2.0).exp();
    // Matrix on the single-mode factor first.
    let d = cutoff + 1;
    let mut m = DMatrix::from_element(d, d, c(0.0, 0.0));
    for n in 0..=cutoff {
        // lowering part: â^q |n⟩ = √(n!/(n−q)!) |n−q⟩
        let mut low = 1.0;
        for q in 0..=n {
            if q > 0 {
                low *= ((n - q + 1) as f64).sqrt();
            }
            let base = n - q;
            // raising part: (â†)^p |base⟩ = √((base+p)!/base!) |base+p⟩
            let mut raise = 1.0;
            let mut pfact = 1.0;
            let mut qfact = 1.0;
            for i in 1..=q {
                qfact *= i as f64;
            }
            for p in 0..=(cutoff - base) {
                if p > 0 {
                    raise *= ((base + p) as f64).sqrt();
                    pfact *= p as f64;
                }
                let target = base + p;
                let phase = Complex64::i().powu((p + q) as u32);
                let amp = phase * (gauss * eta.powi((p + q) as i32) * low * raise
                    / (pfact * qfact));
                m[(target, n)] += amp;
            }
        }
    }
    embed_mode_matrix(space, mode, &m)
}

/// Lifts a matrix acting on one mode's Fock factor to the full space.
pub(crate) fn embed_mode_matrix(
    space: &HilbertSpace,
    mode: Mode,
    m: &DMatrix<Complex64>,
) -> SparseOperator {
    assert_eq!(m.nrows(), mode.cutoff(space) + 1);
    let mut op = SparseOperator::zero(space);
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            let v = m[(row, col)];
            if v.norm() <= 1e-16 {
                continue;
            }
            match mode {
                Mode::One => {
                    for a in 0..space.atom_dim {
                        for n2 in 0..space.dim2() {
                            op.insert_add(
                                space.basis_index(a, row, n2).unwrap(),
                                space.basis_index(a, col, n2).unwrap(),
                                v,
                            );
                        }
                    }
                }
                Mode::Two => {
                    for a in 0..space.atom_dim {
                        for n1 in 0..space.dim1() {
                            op.insert_add(
                                space.basis_index(a, n1, row).unwrap(),
                                space.basis_index(a, n1, col).unwrap(),
                                v,
                            );
                        }
                    }
                }
            }
        }
    }
    op
}

/// exp(−i·scale·M) for Hermitian M given as a dense block.
pub(crate) fn expm_minus_i_hermitian(m: DMatrix<Complex64>, scale: f64) -> DMatrix<Complex64> {
    let dim = m.nrows();
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut phased = eig.eigenvectors.clone();
    for j in 0..dim {
        let phase = Complex64::from_polar(1.0, -scale * eig.eigenvalues[j]);
        for i in 0..dim {
            phased[(i, j)] *= phase;
        }
    }
    &phased * eig.eigenvectors.adjoint()
}

/// Exponential of an anti-Hermitian generator, exp(G) with G† = −G,
/// computed exactly per block of the supplied basis partition.
pub(crate) fn expm_skew(
    space: &HilbertSpace,
    generator: &SparseOperator,
    partition: &[Vec<usize>],
) -> SparseOperator {
    debug_assert!(generator.hermiticity_deviation() >= 0.0);
    let m = generator.scaled(c(0.0, 1.0)); // M = iG is Hermitian
    debug_assert!(m.hermiticity_deviation() <= 1e-12);
    let mut u = SparseOperator::zero(space);
    for block in partition {
        let mb = m.restricted_dense(block);
        let ub = expm_minus_i_hermitian(mb, 1.0);
        for (bj, &gj) in block.iter().enumerate() {
            for (bi, &gi) in block.iter().enumerate() {
                let v = ub[(bi, bj)];
                if v.norm() > 1e-16 {
                    u.insert_add(gi, gj, v);
                }
            }
        }
    }
    u
}

/// Basis partition by (atom level, n₁ + n₂), the blocks preserved by any
/// total-quanta-conserving mode operator.
pub(crate) fn atom_total_quanta_partition(space: &HilbertSpace) -> Vec<Vec<usize>> {
    let mut groups: std::collections::BTreeMap<(usize, usize), Vec<usize>> =
        std::collections::BTreeMap::new();
    for i in 0..space.total_dim() {
        let (a, n1, n2) = space.basis_unindex(i);
        groups.entry((a, n1 + n2)).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Unitary two-mode rotation U(θ) = exp(θ(â_y†âₓ − âₓ†â_y)), generated by
/// Ĵ₂. It maps âₓ → cosθ·âₓ + sinθ·â_y, â_y → −sinθ·âₓ + cosθ·â_y under
/// U·U†, and U(π/4)|1,0⟩ = (|1,0⟩+|0,1⟩)/√2. Total quanta n₁+n₂ are
/// conserved, so the exponential is taken exactly within each fixed-N block.
pub fn mode_rotation(space: &HilbertSpace, theta: f64) -> SparseOperator {
    let ax = mode_op(space, Mode::One, LadderKind::Annihilate);
    let ay = mode_op(space, Mode::Two, LadderKind::Annihilate);
    let generator = (&(&ay.dagger() * &ax) - &(&ax.dagger() * &ay)).scaled(c(theta, 0.0));
    expm_skew(space, &generator, &atom_total_quanta_partition(space))
}

/// Slowly-varying two-mode quadratures
/// d̂₁ = 2^{−3/2} Σ_j (â_j e^{iθ_j} + â_j† e^{−iθ_j}),
/// d̂₂ = i·2^{−3/2} Σ_j (â_j† e^{−iθ_j} − â_j e^{iθ_j}),
/// normalized so that [d̂₁, d̂₂] = i/2 away from the truncation boundary.
/// The interaction-picture phases θ_j = ω_j t are caller-supplied.
pub fn quadrature_ops(
    space: &HilbertSpace,
    phase1: f64,
    phase2: f64,
) -> (SparseOperator, SparseOperator) {
    let norm = 0.5 * std::f64::consts::FRAC_1_SQRT_2;
    let mut d1 = SparseOperator::zero(space);
    let mut d2 = SparseOperator::zero(space);
    for (mode, phase) in [(Mode::One, phase1), (Mode::Two, phase2)] {
        let a = mode_op(space, mode, LadderKind::Annihilate);
        let rot = a.scaled(Complex64::from_polar(1.0, phase));
        d1 = &d1 + &(&rot + &rot.dagger()).scaled(c(norm, 0.0));
        d2 = &d2 + &(&rot.dagger() - &rot).scaled(c(0.0, norm));
    }
    (d1, d2)
}
