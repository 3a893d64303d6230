//! Hamiltonian catalog (ħ = 1, angular frequencies).
//!
//! Cavity-QED family:
//! - `Jc`: H = ω₀Ŝz + ωn̂₁ + (λâ₁†Ŝ₋ + h.c.)
//! - `Lambda3`: H = g₁(â₁†|0⟩⟨1| + h.c.) + g₂(â₂†|2⟩⟨1| + h.c.) on a
//!   three-level atom, level 1 being the shared upper level
//! - `DegenerateOnePhoton`: H = ω(n̂₁+n̂₂) + ω₀Ŝz
//!   + Σ_μ g_μ(e^{−iφ_μ}â_μ†Ŝ₋ + h.c.), with constants of motion
//!   N̂ = n̂₁+n̂₂+Ŝz+½ and the coupling-weighted Ĉ
//! - `Raman` / `RamanStark`: effective two-photon exchange g_R â₁â₂†Ŝ₊ + h.c.,
//!   optionally with intensity-dependent Stark-shifted level energies
//! - `NondegTwoPhoton`: H = ω₁n̂₁ + ω₂n̂₂ + (ω₀+β₂n̂₂−β₁n̂₁)Ŝz
//!   + (λâ₁â₂Ŝ₊ + h.c.), conserving N̂ = n̂₁+n̂₂+2Ŝz+1 and D̂ = n̂₁−n̂₂
//! - `IntensityDependent`: H = ω(n̂₁+n̂₂) + ω₀G(n̂₁,n̂₂)Ŝz
//!   + λ[â₁â₂F(n̂₁,n̂₂)Ŝ₊ + h.c.] with number-diagonal F, G
//! - `DegenerateTwoPhoton`: all six couplings s, r₁, r₂, λ₁, λ₂, g of the
//!   degenerate two-photon family; the parity preset g=0, λ₁=−λ₂=λ gains the
//!   extra constant Ĉ = â₁†â₂ + â₁â₂†
//!
//! Trapped-ion family (always interaction-picture; the resonance condition
//! ω_L − ω₀ = m_xν_x + m_yν_y is assumed by construction):
//! - `IonSideband1D`: nonlinear k-quantum sideband
//!   H = Ωe^{iΦ} f̂_k(n̂;η)(iηâ)^k Ŝ₊ + h.c., or the bare Lamb-Dicke monomial
//! - `Ion2D`: compiled bichromatic configuration ĝ(m_x, m_y) with per-axis
//!   red/blue factors and ε ∈ {0,1} selecting whether the electronic flip
//!   participates
//! - `QndCoupler`: H = |Ω_Lx − Ω_Ly − χQ̂|(σ₊+σ₋) with Q̂ = n̂ₓ−n̂_y
//! - `BimodalCatCoupler`: H = −χ(n̂ₓ−n̂_y)(σ₊+σ₋)
//! - `DarkState`: H = Ω(Â − ε)σ₊ + h.c. whose kernel ⊗ ground level is
//!   invariant under both H and spontaneous emission
//!
//! CQED models carry an `interaction_picture` flag (false = lab frame as
//! listed above; true = resonant rotating frame retaining only detunings and
//! couplings). Ion models are derived in the interaction picture and have no
//! lab-frame variant.

use std::sync::Arc;

use num_complex::Complex64;

use crate::hilbert::HilbertSpace;
use crate::ops::{
    f_k_operator, mode_op, projector_op, spin_op, LadderKind, Mode, SpinKind,
};
use crate::sparse::{commutator, SparseOperator};
use crate::{Error, Result};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Full,
    LambDicke,
}

/// Number-diagonal coefficient function F(n₁, n₂) or G(n₁, n₂).
#[derive(Clone)]
pub enum NumberFunction {
    One,
    /// c₀ + c₁·n₁ + c₂·n₂
    Affine { c0: f64, c1: f64, c2: f64 },
    Custom(Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>),
}

impl NumberFunction {
    pub fn eval(&self, n1: usize, n2: usize) -> f64 {
        match self {
            NumberFunction::One => 1.0,
            NumberFunction::Affine { c0, c1, c2 } => c0 + c1 * n1 as f64 + c2 * n2 as f64,
            NumberFunction::Custom(f) => f(n1, n2),
        }
    }
}

impl std::fmt::Debug for NumberFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NumberFunction::One => write!(f, "One"),
            NumberFunction::Affine { c0, c1, c2 } => {
                write!(f, "Affine({c0} + {c1}·n1 + {c2}·n2)")
            }
            NumberFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Vibrational operator Â and eigenvalue ε of a dark-state Hamiltonian
/// H = Ω(Â − ε)σ₊ + h.c.
#[derive(Clone, Debug)]
pub enum DarkKind {
    /// Â = âₓâ_y, ε = ξ: pair-coherent target |ξ; q⟩.
    Pair { xi: Complex64 },
    /// Â = αâₓâ_y + βâₓ†â_y†, ε = ζ: SU(1,1) intelligent-state target.
    Su11 { alpha: Complex64, beta: Complex64, zeta: Complex64 },
    /// Â = (âₓâ_y)², ε = ξ²: pair-cat target.
    PairSquare { xi: Complex64 },
    /// Single mode: Â = (μâ − νâ†)² with μ = cosh2r, ν = sinh2r and
    /// ε = (μα − να*)², whose kernel holds both displaced squeezed
    /// states D(±α)S(r)|0⟩ — the squeezed-cat target.
    SqueezedCat { alpha: Complex64, r: f64 },
}

#[derive(Clone, Debug)]
pub enum ModelSpec {
    Jc {
        omega: f64,
        omega0: f64,
        lambda: Complex64,
        interaction_picture: bool,
    },
    Lambda3 {
        g1: Complex64,
        g2: Complex64,
    },
    DegenerateOnePhoton {
        omega: f64,
        omega0: f64,
        g1: f64,
        g2: f64,
        phi1: f64,
        phi2: f64,
        interaction_picture: bool,
    },
    Raman {
        omega1: f64,
        omega2: f64,
        omega0: f64,
        g_r: Complex64,
        interaction_picture: bool,
    },
    RamanStark {
        omega1: f64,
        omega2: f64,
        e_lower: f64,
        e_upper: f64,
        beta1: f64,
        beta2: f64,
        g_r: Complex64,
        interaction_picture: bool,
    },
    NondegTwoPhoton {
        omega1: f64,
        omega2: f64,
        omega0: f64,
        beta1: f64,
        beta2: f64,
        lambda: Complex64,
        interaction_picture: bool,
    },
    IntensityDependent {
        omega: f64,
        omega0: f64,
        lambda: Complex64,
        f: NumberFunction,
        g: NumberFunction,
        interaction_picture: bool,
    },
    DegenerateTwoPhoton {
        omega: f64,
        omega0: f64,
        s: f64,
        r1: Complex64,
        r2: Complex64,
        lambda1: Complex64,
        lambda2: Complex64,
        g: Complex64,
        interaction_picture: bool,
    },
    IonSideband1D {
        k: usize,
        eta: f64,
        omega: f64,
        phase: f64,
        regime: Regime,
    },
    Ion2D {
        m_x: i32,
        m_y: i32,
        eta_x: f64,
        eta_y: f64,
        omega: f64,
        phase: f64,
        epsilon: u8,
        regime: Regime,
    },
    QndCoupler {
        omega_lx: f64,
        omega_ly: f64,
        chi: f64,
    },
    BimodalCatCoupler {
        chi: f64,
    },
    DarkState {
        kind: DarkKind,
        omega: f64,
        lower_variant: bool,
    },
}

/// Assembled Hamiltonian with its registered constants of motion and the
/// largest per-mode photon-number change any single H application causes
/// (used by the evolution leak guard).
#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub hamiltonian: SparseOperator,
    pub conserved: Vec<(String, SparseOperator)>,
    pub photon_change: (usize, usize),
}

impl BuiltModel {
    fn assemble(
        space: &HilbertSpace,
        hamiltonian: SparseOperator,
        conserved: Vec<(String, SparseOperator)>,
    ) -> Result<Self> {
        let dev = hamiltonian.hermiticity_deviation();
        if dev > 1e-12 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let mut dn1 = 0usize;
        let mut dn2 = 0usize;
        for (row, col, _) in hamiltonian.iter() {
            let (_, r1, r2) = space.basis_unindex(row);
            let (_, c1, c2) = space.basis_unindex(col);
            dn1 = dn1.max(r1.abs_diff(c1));
            dn2 = dn2.max(r2.abs_diff(c2));
        }
        Ok(BuiltModel {
            hamiltonian,
            conserved,
            photon_change: (dn1, dn2),
        })
    }

    /// Largest |[H, K]| entry over basis states whose occupations stay at
    /// least `photon_change` below both cutoffs, where the commutator is
    /// exact despite truncation.
    pub fn verify_conserved(&self) -> f64 {
        let space = self.hamiltonian.space();
        let lim1 = space.cutoff1.saturating_sub(self.photon_change.0);
        let lim2 = space.cutoff2.saturating_sub(self.photon_change.1);
        let interior = |idx: usize| {
            let (_, n1, n2) = space.basis_unindex(idx);
            n1 <= lim1 && n2 <= lim2
        };
        let mut worst: f64 = 0.0;
        for (_, k) in &self.conserved {
            let comm = commutator(&self.hamiltonian, k);
            for (row, col, v) in comm.iter() {
                if interior(row) && interior(col) {
                    worst = worst.max(v.norm());
                }
            }
        }
        worst
    }
}

fn number_diagonal(space: &HilbertSpace, f: impl Fn(usize, usize, usize) -> f64) -> SparseOperator {
    SparseOperator::diagonal(space, |i| {
        let (a, n1, n2) = space.basis_unindex(i);
        c(f(a, n1, n2), 0.0)
    })
}

/// N̂-type constants: α·n̂₁ + β·n̂₂ + γ·(2Ŝz+1)/2 as a diagonal operator.
fn linear_constant(space: &HilbertSpace, a1: f64, a2: f64, spin: f64) -> SparseOperator {
    number_diagonal(space, |a, n1, n2| {
        let sz = a as f64 - 0.5; // two-level only
        a1 * n1 as f64 + a2 * n2 as f64 + spin * (sz + 0.5)
    })
}

fn pair_annihilator(space: &HilbertSpace) -> SparseOperator {
    &mode_op(space, Mode::One, LadderKind::Annihilate)
        * &mode_op(space, Mode::Two, LadderKind::Annihilate)
}

/// One axis of a compiled sideband factor: red (m < 0) lowers with
/// f̂_{|m|}(iηâ)^{|m|}, blue (m > 0) raises with (iηâ†)^m f̂_m, carrier
/// (m = 0) is f̂₀. In the Lamb-Dicke regime the operator function collapses
/// to the bare monomial (iη)^{|m|}â^{|m|} (or raised), without factorial
/// weights.
fn axis_factor(space: &HilbertSpace, mode: Mode, m: i32, eta: f64, regime: Regime) -> SparseOperator {
    let k = m.unsigned_abs() as usize;
    let monomial = |kind: LadderKind| {
        let op = mode_op(space, mode, kind);
        let mut acc = SparseOperator::identity(space);
        for _ in 0..k {
            acc = &acc * &op;
        }
        acc.scaled(Complex64::i().powu(k as u32) * eta.powi(k as i32))
    };
    match regime {
        Regime::Full => {
            let fk = f_k_operator(space, mode, k, eta);
            if m < 0 {
                &fk * &monomial(LadderKind::Annihilate)
            } else if m > 0 {
                &monomial(LadderKind::Create) * &fk
            } else {
                fk
            }
        }
        Regime::LambDicke => {
            if m < 0 {
                monomial(LadderKind::Annihilate)
            } else if m > 0 {
                monomial(LadderKind::Create)
            } else {
                SparseOperator::identity(space)
            }
        }
    }
}

/// Compiles a bichromatic trapped-ion configuration addressing the
/// (m_x, m_y) vibronic resonance into an effective interaction-picture
/// Hamiltonian. ε = 1 attaches the electronic flip (ĝσ₊ + h.c.), ε = 0
/// leaves a pure mode coupling (ĝ + ĝ†).
pub fn ion_effective(
    m_x: i32,
    m_y: i32,
    eta_x: f64,
    eta_y: f64,
    omega: f64,
    phase: f64,
    epsilon: u8,
    regime: Regime,
    space: &HilbertSpace,
) -> Result<BuiltModel> {
    if epsilon > 1 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be 0 or 1, got {epsilon}"
        )));
    }
    if m_x.unsigned_abs() as usize > space.cutoff1 || m_y.unsigned_abs() as usize > space.cutoff2 {
        return Err(Error::InvalidParameter(
            "sideband order exceeds the mode cutoff".into(),
        ));
    }
    let fx = axis_factor(space, Mode::One, m_x, eta_x, regime);
    let fy = axis_factor(space, Mode::Two, m_y, eta_y, regime);
    let g = (&fx * &fy).scaled(Complex64::from_polar(omega, phase));
    let h = if epsilon == 1 {
        (&g * &spin_op(space, SpinKind::SPlus)?).plus_dagger()
    } else {
        g.plus_dagger()
    };

    let mut conserved = Vec::new();
    if m_x == 0 && m_y == 0 {
        conserved.push(("n1".into(), mode_op(space, Mode::One, LadderKind::Number)));
        conserved.push(("n2".into(), mode_op(space, Mode::Two, LadderKind::Number)));
    } else {
        // m_y·n̂ₓ − m_x·n̂_y is blind to the driven transition
        let (mut qa, mut qb) = (m_y as f64, -(m_x as f64));
        if qa < 0.0 || (qa == 0.0 && qb < 0.0) {
            qa = -qa;
            qb = -qb;
        }
        conserved.push(("Q".into(), linear_constant(space, qa, qb, 0.0)));
        if epsilon == 1 {
            // m_x·n̂ₓ + m_y·n̂_y − (m_x²+m_y²)(Ŝz+½)
            let (mut ma, mut mb, mut ms) = (
                m_x as f64,
                m_y as f64,
                -((m_x * m_x + m_y * m_y) as f64),
            );
            if ma < 0.0 || (ma == 0.0 && mb < 0.0) {
                ma = -ma;
                mb = -mb;
                ms = -ms;
            }
            conserved.push(("M".into(), linear_constant(space, ma, mb, ms)));
        }
    }
    if epsilon == 0 && space.atom_dim == 2 {
        conserved.push(("Sz".into(), spin_op(space, SpinKind::Sz)?));
    }
    BuiltModel::assemble(space, h, conserved)
}

/// Quantum-nondemolition coupler H = |Ω_Lx − Ω_Ly − χQ̂|(σ₊ + σ₋). The
/// absolute value acts on the eigenvalues of its diagonal argument, so each
/// ladder {|n+q, n⟩} Rabi-flops at the shared frequency |Ω_Lx − Ω_Ly − χq|.
pub fn qnd_model(omega_lx: f64, omega_ly: f64, chi: f64, space: &HilbertSpace) -> Result<BuiltModel> {
    if omega_lx == omega_ly {
        return Err(Error::InvalidParameter(
            "degenerate drive: omega_lx must differ from omega_ly".into(),
        ));
    }
    let rabi = number_diagonal(space, |_, n1, n2| {
        (omega_lx - omega_ly - chi * (n1 as f64 - n2 as f64)).abs()
    });
    let flip = &spin_op(space, SpinKind::SPlus)? + &spin_op(space, SpinKind::SMinus)?;
    let h = &rabi * &flip;
    let q = linear_constant(space, 1.0, -1.0, 0.0);
    BuiltModel::assemble(space, h, vec![("Q".into(), q)])
}

/// Dark-state Hamiltonian H = Ω(Â − ε)σ₊ + h.c. (or the σ₋ variant). A
/// vibrational state ψ with (Â − ε)ψ = 0 makes |−⟩⊗ψ invariant under both
/// H and spontaneous emission, so dissipation funnels the system into it.
/// With the lowering variant the kernel pairs with the excited level
/// instead; the dissipative protocols here use the raising form.
pub fn dark_hamiltonian(
    a_vib: &SparseOperator,
    eigenvalue: Complex64,
    omega: f64,
    lower_variant: bool,
    space: &HilbertSpace,
) -> Result<BuiltModel> {
    if a_vib.space() != *space {
        return Err(Error::SpaceMismatch);
    }
    let shifted = &*a_vib - &SparseOperator::identity(space).scaled(eigenvalue);
    let spin = if lower_variant {
        spin_op(space, SpinKind::SMinus)?
    } else {
        spin_op(space, SpinKind::SPlus)?
    };
    let h = (&shifted * &spin).scaled(c(omega, 0.0)).plus_dagger();
    BuiltModel::assemble(space, h, Vec::new())
}

/// Trap-frequency diagnostics for the secular centre-of-mass potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapValidation {
    /// |ν_x + ν_y − ν_z| ≤ 1e-9·ν_z.
    pub satisfied: bool,
    /// Small-denominator rational ν_x/ν_y ≈ p/q, if any: near-commensurate
    /// transverse frequencies let additional resonant terms survive the
    /// secular averaging.
    pub commensurate: Option<(u64, u64)>,
}

pub fn validate_trap(nu_x: f64, nu_y: f64, nu_z: f64) -> Result<TrapValidation> {
    if nu_x <= 0.0 || nu_y <= 0.0 || nu_z <= 0.0 {
        return Err(Error::InvalidParameter(
            "trap frequencies must be positive".into(),
        ));
    }
    let satisfied = (nu_x + nu_y - nu_z).abs() <= 1e-9 * nu_z;
    let ratio = nu_x / nu_y;
    let mut commensurate = None;
    for q in 1..=12u64 {
        let p = (ratio * q as f64).round();
        if p >= 1.0 && (ratio - p / q as f64).abs() <= 1e-9 * ratio {
            commensurate = Some((p as u64, q));
            break;
        }
    }
    Ok(TrapValidation { satisfied, commensurate })
}

/// Builds the Hamiltonian and conserved registry for any catalog entry.
pub fn build_model(spec: &ModelSpec, space: &HilbertSpace) -> Result<BuiltModel> {
    match spec {
        ModelSpec::Jc { omega, omega0, lambda, interaction_picture } => {
            let sz = spin_op(space, SpinKind::Sz)?;
            let n1 = mode_op(space, Mode::One, LadderKind::Number);
            let coupling = (&mode_op(space, Mode::One, LadderKind::Create)
                * &spin_op(space, SpinKind::SMinus)?)
                .scaled(*lambda)
                .plus_dagger();
            let h = if *interaction_picture {
                &sz.scaled(c(omega0 - omega, 0.0)) + &coupling
            } else {
                &(&sz.scaled(c(*omega0, 0.0)) + &n1.scaled(c(*omega, 0.0))) + &coupling
            };
            let n = linear_constant(space, 1.0, 0.0, 1.0);
            BuiltModel::assemble(space, h, vec![("N".into(), n)])
        }

        ModelSpec::Lambda3 { g1, g2 } => {
            if space.atom_dim != 3 {
                return Err(Error::InvalidParameter(format!(
                    "three-level atom required, space has atom_dim {}",
                    space.atom_dim
                )));
            }
            let t1 = (&mode_op(space, Mode::One, LadderKind::Create)
                * &projector_op(space, 0, 1)?)
                .scaled(*g1)
                .plus_dagger();
            let t2 = (&mode_op(space, Mode::Two, LadderKind::Create)
                * &projector_op(space, 2, 1)?)
                .scaled(*g2)
                .plus_dagger();
            let h = &t1 + &t2;
            // n̂₁ − |0⟩⟨0| and n̂₂ − |2⟩⟨2| survive both emission branches
            let k1 = &mode_op(space, Mode::One, LadderKind::Number) - &projector_op(space, 0, 0)?;
            let k2 = &mode_op(space, Mode::Two, LadderKind::Number) - &projector_op(space, 2, 2)?;
            BuiltModel::assemble(space, h, vec![("K1".into(), k1), ("K2".into(), k2)])
        }

        ModelSpec::DegenerateOnePhoton { omega, omega0, g1, g2, phi1, phi2, interaction_picture } => {
            let sz = spin_op(space, SpinKind::Sz)?;
            let sm = spin_op(space, SpinKind::SMinus)?;
            let mut coupling = SparseOperator::zero(space);
            for (mode, g, phi) in [(Mode::One, *g1, *phi1), (Mode::Two, *g2, *phi2)] {
                let term = (&mode_op(space, mode, LadderKind::Create) * &sm)
                    .scaled(Complex64::from_polar(g, -phi));
                coupling = &coupling + &term.plus_dagger();
            }
            let h = if *interaction_picture {
                &sz.scaled(c(omega0 - omega, 0.0)) + &coupling
            } else {
                let free = number_diagonal(space, |a, n1, n2| {
                    omega * (n1 + n2) as f64 + omega0 * (a as f64 - 0.5)
                });
                &free + &coupling
            };
            let n = linear_constant(space, 1.0, 1.0, 1.0);
            // coupling-weighted photon constant, invariant because the two
            // emission channels interfere with fixed relative phase
            let denom = g1 * g1 + g2 * g2;
            let cross = (&mode_op(space, Mode::One, LadderKind::Create)
                * &mode_op(space, Mode::Two, LadderKind::Annihilate))
                .scaled(Complex64::from_polar(g1 * g2 / denom, phi2 - phi1));
            let c_op = &number_diagonal(space, |_, n1, n2| {
                (g2 * g2 * n1 as f64 + g1 * g1 * n2 as f64) / denom
            }) - &cross.plus_dagger();
            BuiltModel::assemble(space, h, vec![("N".into(), n), ("C".into(), c_op)])
        }

        ModelSpec::Raman { omega1, omega2, omega0, g_r, interaction_picture } => {
            let coupling = (&(&mode_op(space, Mode::One, LadderKind::Annihilate)
                * &mode_op(space, Mode::Two, LadderKind::Create))
                * &spin_op(space, SpinKind::SPlus)?)
                .scaled(*g_r)
                .plus_dagger();
            let h = if *interaction_picture {
                let detuning = omega0 - omega1 + omega2;
                &spin_op(space, SpinKind::Sz)?.scaled(c(detuning, 0.0)) + &coupling
            } else {
                let free = number_diagonal(space, |a, n1, n2| {
                    omega1 * n1 as f64 + omega2 * n2 as f64 + omega0 * (a as f64 - 0.5)
                });
                &free + &coupling
            };
            let n = linear_constant(space, 1.0, 1.0, 0.0);
            let m = linear_constant(space, 1.0, 0.0, 1.0);
            BuiltModel::assemble(space, h, vec![("N".into(), n), ("M".into(), m)])
        }

        ModelSpec::RamanStark {
            omega1,
            omega2,
            e_lower,
            e_upper,
            beta1,
            beta2,
            g_r,
            interaction_picture,
        } => {
            let coupling = (&(&mode_op(space, Mode::One, LadderKind::Annihilate)
                * &mode_op(space, Mode::Two, LadderKind::Create))
                * &spin_op(space, SpinKind::SPlus)?)
                .scaled(*g_r)
                .plus_dagger();
            // Stark-shifted level energies replace the static ω₀Ŝz
            let levels = number_diagonal(space, |a, n1, n2| {
                if a == 0 {
                    e_lower + beta1 * n1 as f64
                } else {
                    e_upper + beta2 * n2 as f64
                }
            });
            let h = if *interaction_picture {
                let frame = number_diagonal(space, |a, n1, n2| {
                    omega1 * n1 as f64
                        + omega2 * n2 as f64
                        + (omega1 - omega2) * (a as f64 - 0.5)
                });
                &(&levels - &frame) + &coupling
            } else {
                let free = number_diagonal(space, |_, n1, n2| {
                    omega1 * n1 as f64 + omega2 * n2 as f64
                });
                &(&levels + &free) + &coupling
            };
            let n = linear_constant(space, 1.0, 1.0, 0.0);
            let m = linear_constant(space, 1.0, 0.0, 1.0);
            BuiltModel::assemble(space, h, vec![("N".into(), n), ("M".into(), m)])
        }

        ModelSpec::NondegTwoPhoton {
            omega1,
            omega2,
            omega0,
            beta1,
            beta2,
            lambda,
            interaction_picture,
        } => {
            let coupling = (&pair_annihilator(space) * &spin_op(space, SpinKind::SPlus)?)
                .scaled(*lambda)
                .plus_dagger();
            let shift = if *interaction_picture { omega1 + omega2 } else { 0.0 };
            let diag = number_diagonal(space, |a, n1, n2| {
                let sz = a as f64 - 0.5;
                let free = if *interaction_picture {
                    0.0
                } else {
                    omega1 * n1 as f64 + omega2 * n2 as f64
                };
                free + (omega0 - shift + beta2 * n2 as f64 - beta1 * n1 as f64) * sz
            });
            let h = &diag + &coupling;
            let n = linear_constant(space, 1.0, 1.0, 2.0);
            let d = linear_constant(space, 1.0, -1.0, 0.0);
            BuiltModel::assemble(space, h, vec![("N".into(), n), ("D".into(), d)])
        }

        ModelSpec::IntensityDependent { omega, omega0, lambda, f, g, interaction_picture } => {
            let f_diag = number_diagonal(space, |_, n1, n2| f.eval(n1, n2));
            let coupling = (&(&pair_annihilator(space) * &f_diag)
                * &spin_op(space, SpinKind::SPlus)?)
                .scaled(*lambda)
                .plus_dagger();
            let shift = if *interaction_picture { 2.0 * omega } else { 0.0 };
            let diag = number_diagonal(space, |a, n1, n2| {
                let sz = a as f64 - 0.5;
                let free = if *interaction_picture {
                    0.0
                } else {
                    omega * (n1 + n2) as f64
                };
                free + (omega0 * g.eval(n1, n2) - shift) * sz
            });
            let h = &diag + &coupling;
            let n = linear_constant(space, 1.0, 1.0, 2.0);
            let d = linear_constant(space, 1.0, -1.0, 0.0);
            BuiltModel::assemble(space, h, vec![("N".into(), n), ("D".into(), d)])
        }

        ModelSpec::DegenerateTwoPhoton {
            omega,
            omega0,
            s,
            r1,
            r2,
            lambda1,
            lambda2,
            g,
            interaction_picture,
        } => {
            let a1 = mode_op(space, Mode::One, LadderKind::Annihilate);
            let a2 = mode_op(space, Mode::Two, LadderKind::Annihilate);
            let sz = spin_op(space, SpinKind::Sz)?;
            let sp = spin_op(space, SpinKind::SPlus)?;
            let exchange = &a1 * &a2.dagger(); // â₁â₂†
            let mut h = exchange.scaled(*r1).plus_dagger();
            h = &h + &(&exchange.scaled(*r2) * &sz).plus_dagger();
            let two_photon = &(&(&a1 * &a1).scaled(*lambda1)
                + &(&a2 * &a2).scaled(*lambda2))
                + &(&a1 * &a2).scaled(*g);
            h = &h + &(&two_photon * &sp).plus_dagger();
            let shift = if *interaction_picture { 2.0 * omega } else { 0.0 };
            let diag = number_diagonal(space, |a, n1, n2| {
                let szv = a as f64 - 0.5;
                let free = if *interaction_picture {
                    0.0
                } else {
                    omega * (n1 + n2) as f64
                };
                free + (omega0 - shift) * szv + s * szv * (n1 + n2) as f64
            });
            h = &h + &diag;
            let n = linear_constant(space, 1.0, 1.0, 2.0);
            let mut conserved = vec![("N".into(), n)];
            // â₁†â₂ + â₁â₂† commutes with λ(â₁² − â₂²)Ŝ₊ + h.c. but with
            // neither the exchange couplings nor the â₁â₂ channel
            if r1.norm() == 0.0
                && r2.norm() == 0.0
                && g.norm() == 0.0
                && (*lambda1 + *lambda2).norm() == 0.0
            {
                let c_op = (&a1.dagger() * &a2).plus_dagger();
                conserved.push(("C".into(), c_op));
            }
            BuiltModel::assemble(space, h, conserved)
        }

        ModelSpec::IonSideband1D { k, eta, omega, phase, regime } => {
            let factor = axis_factor(space, Mode::One, -(*k as i32), *eta, *regime)
                .scaled(Complex64::from_polar(*omega, *phase));
            let h = (&factor * &spin_op(space, SpinKind::SPlus)?).plus_dagger();
            let constant = linear_constant(space, 1.0, 0.0, *k as f64);
            BuiltModel::assemble(space, h, vec![("K".into(), constant)])
        }

        ModelSpec::Ion2D { m_x, m_y, eta_x, eta_y, omega, phase, epsilon, regime } => {
            ion_effective(*m_x, *m_y, *eta_x, *eta_y, *omega, *phase, *epsilon, *regime, space)
        }

        ModelSpec::QndCoupler { omega_lx, omega_ly, chi } => {
            qnd_model(*omega_lx, *omega_ly, *chi, space)
        }

        ModelSpec::BimodalCatCoupler { chi } => {
            let q = linear_constant(space, 1.0, -1.0, 0.0);
            let flip = &spin_op(space, SpinKind::SPlus)? + &spin_op(space, SpinKind::SMinus)?;
            let h = (&q * &flip).scaled(c(-chi, 0.0));
            BuiltModel::assemble(space, h, vec![("Q".into(), q)])
        }

        ModelSpec::DarkState { kind, omega, lower_variant } => {
            let (a_vib, eps): (SparseOperator, Complex64) = match kind {
                DarkKind::Pair { xi } => (pair_annihilator(space), *xi),
                DarkKind::Su11 { alpha, beta, zeta } => {
                    let pair = pair_annihilator(space);
                    (
                        &pair.scaled(*alpha) + &pair.dagger().scaled(*beta),
                        *zeta,
                    )
                }
                DarkKind::PairSquare { xi } => {
                    let pair = pair_annihilator(space);
                    (&pair * &pair, xi * xi)
                }
                DarkKind::SqueezedCat { alpha, r } => {
                    let mu = (2.0 * r).cosh();
                    let nu = (2.0 * r).sinh();
                    let a = mode_op(space, Mode::One, LadderKind::Annihilate);
                    let b = &a.scaled(c(mu, 0.0)) - &a.dagger().scaled(c(nu, 0.0));
                    let eps = (mu * alpha - nu * alpha.conj()).powu(2);
                    (&b * &b, eps)
                }
            };
            let mut model = dark_hamiltonian(&a_vib, eps, *omega, *lower_variant, space)?;
            model.conserved = match kind {
                DarkKind::SqueezedCat { .. } => {
                    let parity = number_diagonal(space, |_, n1, _| 1.0 - 2.0 * (n1 % 2) as f64);
                    vec![("parity".into(), parity)]
                }
                _ => vec![("Q".into(), linear_constant(space, 1.0, -1.0, 0.0))],
            };
            Ok(model)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_state, StateSpec, StateVector};

    #[test]
    fn jc_vacuum_rabi_doublet() {
        let space = HilbertSpace::new(2, 5, 0).unwrap();
        let lambda = c(0.7, 0.2);
        let model = build_model(
            &ModelSpec::Jc { omega: 1.0, omega0: 1.0, lambda, interaction_picture: true },
            &space,
        )
        .unwrap();
        // one-excitation block spanned by |−,1,0⟩ and |+,0,0⟩
        let block = vec![
            space.basis_index(0, 1, 0).unwrap(),
            space.basis_index(1, 0, 0).unwrap(),
        ];
        let dense = model.hamiltonian.restricted_dense(&block);
        let eig = nalgebra::SymmetricEigen::new(dense);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + lambda.norm()).abs() < 1e-12);
        assert!((vals[1] - lambda.norm()).abs() < 1e-12);
    }

    #[test]
    fn jc_conserved_and_frames() {
        let space = HilbertSpace::new(2, 8, 0).unwrap();
        for ip in [false, true] {
            let model = build_model(
                &ModelSpec::Jc {
                    omega: 2.0,
                    omega0: 2.3,
                    lambda: c(0.5, 0.0),
                    interaction_picture: ip,
                },
                &space,
            )
            .unwrap();
            assert!(model.verify_conserved() <= 1e-12);
            assert_eq!(model.photon_change, (1, 0));
        }
    }

    #[test]
    fn lambda3_needs_three_levels() {
        let bad = HilbertSpace::new(2, 3, 3).unwrap();
        assert!(build_model(&ModelSpec::Lambda3 { g1: c(1.0, 0.0), g2: c(0.5, 0.0) }, &bad).is_err());
        let space = HilbertSpace::new(3, 6, 6).unwrap();
        let model =
            build_model(&ModelSpec::Lambda3 { g1: c(1.0, 0.0), g2: c(0.5, 0.3) }, &space).unwrap();
        assert!(model.verify_conserved() <= 1e-12);
        // |1, n₁, n₂⟩ couples down to |0, n₁+1, n₂⟩ with amplitude g₁√(n₁+1)
        let from = space.basis_index(1, 1, 0).unwrap();
        let to = space.basis_index(0, 2, 0).unwrap();
        let expect = c(1.0, 0.0) * 2.0f64.sqrt();
        assert!((model.hamiltonian.get(to, from) - expect).norm() < 1e-14);
    }

    #[test]
    fn raman_single_channel() {
        let space = HilbertSpace::new(2, 4, 4).unwrap();
        let g_r = c(0.9, -0.1);
        let model = build_model(
            &ModelSpec::Raman {
                omega1: 1.0,
                omega2: 1.4,
                omega0: 0.4,
                g_r,
                interaction_picture: true,
            },
            &space,
        )
        .unwrap();
        let from = space.basis_index(0, 1, 0).unwrap(); // |−,1,0⟩
        let to = space.basis_index(1, 0, 1).unwrap(); // |+,0,1⟩
        assert!((model.hamiltonian.get(to, from) - g_r).norm() < 1e-14);
        assert!(model.verify_conserved() <= 1e-12);
    }

    #[test]
    fn raman_stark_level_shifts() {
        let space = HilbertSpace::new(2, 5, 5).unwrap();
        let model = build_model(
            &ModelSpec::RamanStark {
                omega1: 1.0,
                omega2: 2.0,
                e_lower: 0.1,
                e_upper: 3.0,
                beta1: 0.05,
                beta2: 0.07,
                g_r: c(0.3, 0.0),
                interaction_picture: false,
            },
            &space,
        )
        .unwrap();
        let lower = space.basis_index(0, 2, 1).unwrap();
        let upper = space.basis_index(1, 2, 1).unwrap();
        // lab frame: modes + shifted level energies on the diagonal
        let expect_lower = 1.0 * 2.0 + 2.0 * 1.0 + 0.1 + 0.05 * 2.0;
        let expect_upper = 1.0 * 2.0 + 2.0 * 1.0 + 3.0 + 0.07 * 1.0;
        assert!((model.hamiltonian.get(lower, lower).re - expect_lower).abs() < 1e-12);
        assert!((model.hamiltonian.get(upper, upper).re - expect_upper).abs() < 1e-12);
        assert!(model.verify_conserved() <= 1e-12);
    }

    #[test]
    fn nondegenerate_two_photon_constants() {
        let space = HilbertSpace::new(2, 10, 10).unwrap();
        let model = build_model(
            &ModelSpec::NondegTwoPhoton {
                omega1: 1.0,
                omega2: 1.5,
                omega0: 2.5,
                beta1: 0.02,
                beta2: 0.03,
                lambda: c(0.4, 0.1),
                interaction_picture: false,
            },
            &space,
        )
        .unwrap();
        assert!(model.verify_conserved() <= 1e-12);
        assert_eq!(model.photon_change, (1, 1));
    }

    #[test]
    fn intensity_dependent_recovers_nondegenerate() {
        let space = HilbertSpace::new(2, 8, 8).unwrap();
        let (omega, omega0, beta1, beta2) = (1.2, 2.4, 0.05, 0.08);
        let lambda = c(0.3, -0.2);
        let reference = build_model(
            &ModelSpec::NondegTwoPhoton {
                omega1: omega,
                omega2: omega,
                omega0,
                beta1,
                beta2,
                lambda,
                interaction_picture: false,
            },
            &space,
        )
        .unwrap();
        let intensity = build_model(
            &ModelSpec::IntensityDependent {
                omega,
                omega0,
                lambda,
                f: NumberFunction::One,
                g: NumberFunction::Affine {
                    c0: 1.0,
                    c1: -beta1 / omega0,
                    c2: beta2 / omega0,
                },
                interaction_picture: false,
            },
            &space,
        )
        .unwrap();
        let diff = &reference.hamiltonian - &intensity.hamiltonian;
        assert!(diff.max_abs() < 1e-14);
    }

    #[test]
    fn degenerate_two_photon_parity_preset_constants() {
        let space = HilbertSpace::new(2, 30, 30).unwrap();
        let model = build_model(
            &ModelSpec::DegenerateTwoPhoton {
                omega: 1.0,
                omega0: 2.0,
                s: 0.0,
                r1: c(0.0, 0.0),
                r2: c(0.0, 0.0),
                lambda1: c(0.5, 0.0),
                lambda2: c(-0.5, 0.0),
                g: c(0.0, 0.0),
                interaction_picture: true,
            },
            &space,
        )
        .unwrap();
        assert_eq!(model.conserved.len(), 2);
        assert!(model.verify_conserved() <= 1e-12);
    }

    #[test]
    fn degenerate_two_photon_general_couplings() {
        let space = HilbertSpace::new(2, 8, 8).unwrap();
        let model = build_model(
            &ModelSpec::DegenerateTwoPhoton {
                omega: 1.0,
                omega0: 2.0,
                s: 0.1,
                r1: c(0.2, 0.1),
                r2: c(0.05, 0.0),
                lambda1: c(0.5, 0.0),
                lambda2: c(0.3, 0.2),
                g: c(0.4, 0.0),
                interaction_picture: false,
            },
            &space,
        )
        .unwrap();
        // only N̂ survives general couplings
        assert_eq!(model.conserved.len(), 1);
        assert!(model.verify_conserved() <= 1e-12);
        assert!(model.hamiltonian.hermiticity_deviation() <= 1e-12);
    }

    #[test]
    fn ion_sideband_matches_jc_in_lamb_dicke() {
        let space = HilbertSpace::new(2, 12, 0).unwrap();
        let (eta, omega) = (0.08, 1.3);
        let ion = build_model(
            &ModelSpec::IonSideband1D { k: 1, eta, omega, phase: 0.0, regime: Regime::LambDicke },
            &space,
        )
        .unwrap();
        let jc = build_model(
            &ModelSpec::Jc {
                omega: 1.0,
                omega0: 1.0,
                lambda: c(0.0, -eta * omega),
                interaction_picture: true,
            },
            &space,
        )
        .unwrap();
        let diff = &ion.hamiltonian - &jc.hamiltonian;
        assert!(diff.max_abs() < 1e-14);
    }

    #[test]
    fn ion_sideband_full_vs_lamb_dicke_deviation() {
        let space = HilbertSpace::new(2, 10, 0).unwrap();
        let eta = 0.05;
        let full = build_model(
            &ModelSpec::IonSideband1D { k: 1, eta, omega: 1.0, phase: 0.0, regime: Regime::Full },
            &space,
        )
        .unwrap();
        let ld = build_model(
            &ModelSpec::IonSideband1D {
                k: 1,
                eta,
                omega: 1.0,
                phase: 0.0,
                regime: Regime::LambDicke,
            },
            &space,
        )
        .unwrap();
        for n in 0..=3usize {
            let row = space.basis_index(1, n, 0).unwrap();
            let col = space.basis_index(0, n + 1, 0).unwrap();
            let a = full.hamiltonian.get(row, col);
            let b = ld.hamiltonian.get(row, col);
            let rel = (a - b).norm() / b.norm();
            assert!(rel <= 2.0 * eta * eta, "n={n}: relative deviation {rel}");
        }
    }

    #[test]
    fn ion2d_red_red_is_pair_lowering() {
        let space = HilbertSpace::new(2, 6, 6).unwrap();
        let (eta_x, eta_y, omega) = (0.2, 0.25, 1.1);
        let model = build_model(
            &ModelSpec::Ion2D {
                m_x: -1,
                m_y: -1,
                eta_x,
                eta_y,
                omega,
                phase: 0.0,
                epsilon: 1,
                regime: Regime::LambDicke,
            },
            &space,
        )
        .unwrap();
        // Ω′ = Ω(iηₓ)(iη_y) = −Ωηₓη_y on ⟨+,0,0|H|−,1,1⟩
        let row = space.basis_index(1, 0, 0).unwrap();
        let col = space.basis_index(0, 1, 1).unwrap();
        let expect = c(-omega * eta_x * eta_y, 0.0);
        assert!((model.hamiltonian.get(row, col) - expect).norm() < 1e-14);
        assert!(model.verify_conserved() <= 1e-12);
    }

    #[test]
    fn ion2d_beamsplitter_without_flip() {
        let space = HilbertSpace::new(2, 5, 5).unwrap();
        let model = build_model(
            &ModelSpec::Ion2D {
                m_x: 1,
                m_y: -1,
                eta_x: 0.1,
                eta_y: 0.1,
                omega: 1.0,
                phase: 0.0,
                epsilon: 0,
                regime: Regime::LambDicke,
            },
            &space,
        )
        .unwrap();
        // (iηₓ)(iη_y)âₓ†â_y + h.c.: ⟨−,1,0|H|−,0,1⟩ = −ηₓη_y
        let row = space.basis_index(0, 1, 0).unwrap();
        let col = space.basis_index(0, 0, 1).unwrap();
        assert!((model.hamiltonian.get(row, col) - c(-0.01, 0.0)).norm() < 1e-15);
        // no electronic operator: both spin blocks identical, Ŝz conserved
        assert!(model.conserved.iter().any(|(name, _)| name == "Sz"));
        assert!(model.verify_conserved() <= 1e-12);
    }

    #[test]
    fn ion2d_carrier_conserves_both_numbers() {
        let space = HilbertSpace::new(2, 4, 4).unwrap();
        let model = build_model(
            &ModelSpec::Ion2D {
                m_x: 0,
                m_y: 0,
                eta_x: 0.3,
                eta_y: 0.2,
                omega: 1.0,
                phase: 0.4,
                epsilon: 1,
                regime: Regime::Full,
            },
            &space,
        )
        .unwrap();
        assert_eq!(model.photon_change, (0, 0));
        assert!(model.verify_conserved() <= 1e-12);
    }

    #[test]
    fn qnd_shared_rabi_frequencies() {
        let space = HilbertSpace::new(2, 8, 8).unwrap();
        let (olx, oly, chi) = (2.0, 1.0, 0.3);
        let model = build_model(&ModelSpec::QndCoupler { omega_lx: olx, omega_ly: oly, chi }, &space)
            .unwrap();
        let q = 2i32;
        let expected = (olx - oly - chi * q as f64).abs();
        for n in 0..=5usize {
            let row = space.basis_index(1, n + q as usize, n).unwrap();
            let col = space.basis_index(0, n + q as usize, n).unwrap();
            let got = model.hamiltonian.get(row, col).re;
            assert!((got - expected).abs() < 1e-13, "n={n}");
        }
        assert!(model.verify_conserved() <= 1e-12);
        // a drive tuned to integer q* leaves that ladder dark
        let dark = build_model(
            &ModelSpec::QndCoupler { omega_lx: 2.0, omega_ly: 1.0, chi: 0.5 },
            &space,
        )
        .unwrap();
        let q_star = 2usize; // (2−1)/0.5
        let row = space.basis_index(1, q_star + 1, 1).unwrap();
        let col = space.basis_index(0, q_star + 1, 1).unwrap();
        assert!(dark.hamiltonian.get(row, col).norm() < 1e-14);
        assert!(build_model(
            &ModelSpec::QndCoupler { omega_lx: 1.0, omega_ly: 1.0, chi: 0.3 },
            &space
        )
        .is_err());
    }

    #[test]
    fn bimodal_cat_coupler_form() {
        let space = HilbertSpace::new(2, 5, 5).unwrap();
        let chi = 0.8;
        let model = build_model(&ModelSpec::BimodalCatCoupler { chi }, &space).unwrap();
        let row = space.basis_index(1, 3, 1).unwrap();
        let col = space.basis_index(0, 3, 1).unwrap();
        assert!((model.hamiltonian.get(row, col).re - (-chi * 2.0)).abs() < 1e-14);
        assert!(model.verify_conserved() <= 1e-12);
    }

    #[test]
    fn dark_pair_state_is_annihilated() {
        let space = HilbertSpace::new(2, 30, 30).unwrap();
        let xi = c(1.0, 0.0);
        let model = build_model(
            &ModelSpec::DarkState { kind: DarkKind::Pair { xi }, omega: 1.0, lower_variant: false },
            &space,
        )
        .unwrap();
        let psi = make_state(&space, &StateSpec::PairCoherent { xi, q: 2 }).unwrap();
        // ground ⊗ |ξ;q⟩ already has atom level 0
        let h_psi = model.hamiltonian.apply_vec(&psi.amplitudes);
        let norm: f64 = h_psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm < 1e-7, "‖H|dark⟩‖ = {norm}");
    }

    #[test]
    fn dark_squeezed_cat_kernel() {
        let space = HilbertSpace::new(2, 40, 0).unwrap();
        let (alpha, r) = (c(1.2, 0.0), 0.15);
        let model = build_model(
            &ModelSpec::DarkState {
                kind: DarkKind::SqueezedCat { alpha, r },
                omega: 1.0,
                lower_variant: false,
            },
            &space,
        )
        .unwrap();
        for sign in [1.0, -1.0] {
            let psi = make_state(
                &space,
                &StateSpec::Squeezed { alpha: alpha * sign, xi: c(r, 0.0) },
            )
            .unwrap();
            let h_psi = model.hamiltonian.apply_vec(&psi.amplitudes);
            let norm: f64 = h_psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!(norm < 1e-6, "sign {sign}: ‖H|ψ⟩‖ = {norm}");
        }
    }

    #[test]
    fn dark_lower_variant_pairs_with_excited() {
        let space = HilbertSpace::new(2, 25, 25).unwrap();
        let xi = c(0.8, 0.0);
        let model = build_model(
            &ModelSpec::DarkState { kind: DarkKind::Pair { xi }, omega: 1.0, lower_variant: true },
            &space,
        )
        .unwrap();
        let ground = make_state(&space, &StateSpec::PairCoherent { xi, q: 1 }).unwrap();
        // promote the pair-coherent state to the excited level
        let mut amps = vec![c(0.0, 0.0); space.total_dim()];
        for (i, a) in ground.amplitudes.iter().enumerate() {
            let (lvl, n1, n2) = space.basis_unindex(i);
            if a.norm_sqr() > 0.0 {
                assert_eq!(lvl, 0);
                amps[space.basis_index(1, n1, n2).unwrap()] = *a;
            }
        }
        let excited = StateVector::from_amplitudes(space, amps).unwrap();
        let h_exc = model.hamiltonian.apply_vec(&excited.amplitudes);
        let norm: f64 = h_exc.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm < 1e-7);
    }

    #[test]
    fn trap_validation_examples() {
        assert_eq!(
            validate_trap(1.0, 2.0, 3.0).unwrap(),
            TrapValidation { satisfied: true, commensurate: Some((1, 2)) }
        );
        assert!(!validate_trap(1.0, 1.0, 3.0).unwrap().satisfied);
        let iso = validate_trap(1.0, 1.0, 2.0).unwrap();
        assert!(iso.satisfied);
        assert_eq!(iso.commensurate, Some((1, 1)));
        let generic = validate_trap(1.0, std::f64::consts::SQRT_2, 1.0 + std::f64::consts::SQRT_2)
            .unwrap();
        assert!(generic.satisfied);
        assert_eq!(generic.commensurate, None);
        assert!(validate_trap(0.0, 1.0, 1.0).is_err());
    }
}
