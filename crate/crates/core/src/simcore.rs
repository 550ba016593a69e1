//! Dense statevector simulation of parameterized circuits.
//!
//! Basis index `k` encodes the register little-endian and zero-indexed: qubit
//! `q` is bit `q` of `k`. Rotations follow `R_P(θ) = exp(-iθP/2)`, so
//! `RY(π)|0⟩ = |1⟩` with a `+1` amplitude.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pure state of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Self { n_qubits, amplitudes }
    }

    /// Wraps amplitudes that are already normalized (within 1e-10).
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = qubits_for_len(amplitudes.len())?;
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("statevector amplitudes"));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "amplitudes have squared norm {norm}, expected 1"
            )));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::from_amplitudes(amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Hilbert-space dimension `2^n`.
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// The same state multiplied by the global phase `e^{iφ}`.
    pub fn with_global_phase(&self, phi: f64) -> Statevector {
        let phase = Complex64::from_polar(1.0, phi);
        Statevector {
            n_qubits: self.n_qubits,
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }

    /// Applies `m` to `target` on the subspace where `(k & ctrl_mask) == ctrl_value`.
    fn apply_1q(&mut self, m: &Mat2, target: usize, ctrl_mask: usize, ctrl_value: usize) {
        let tbit = 1usize << target;
        for k in 0..self.amplitudes.len() {
            if k & tbit != 0 || k & ctrl_mask != ctrl_value {
                continue;
            }
            let k1 = k | tbit;
            let a0 = self.amplitudes[k];
            let a1 = self.amplitudes[k1];
            self.amplitudes[k] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[k1] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "statevector length {len} is not a power of two >= 2"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Gate alphabet of the ansatz catalog and the sign-estimation circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    H,
    X,
    Cx,
    Cy,
    Cz,
    Crx,
    Cry,
    Crz,
    /// `diag(1, e^{iλ})` on the ancilla; equal to `RZ(λ)` up to the global
    /// phase `e^{iλ/2}`.
    AncillaPhase,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cy | GateKind::Cz | GateKind::Crx | GateKind::Cry | GateKind::Crz => 2,
            _ => 1,
        }
    }

    pub fn takes_angle(self) -> bool {
        matches!(
            self,
            GateKind::Rx
                | GateKind::Ry
                | GateKind::Rz
                | GateKind::Crx
                | GateKind::Cry
                | GateKind::Crz
                | GateKind::AncillaPhase
        )
    }

    /// Single-qubit rotations, the gates the two-term shift rule covers.
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }

    /// Target-qubit matrix (for controlled kinds, the controlled block).
    pub fn matrix(self, angle: f64) -> [[Complex64; 2]; 2] {
        let (s, c) = (angle / 2.0).sin_cos();
        let re = |x: f64| Complex64::new(x, 0.0);
        match self {
            GateKind::Rx | GateKind::Crx => [[re(c), -I * s], [-I * s, re(c)]],
            GateKind::Ry | GateKind::Cry => [[re(c), re(-s)], [re(s), re(c)]],
            GateKind::Rz | GateKind::Crz => [
                [Complex64::from_polar(1.0, -angle / 2.0), ZERO],
                [ZERO, Complex64::from_polar(1.0, angle / 2.0)],
            ],
            GateKind::H => [
                [re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)],
                [re(FRAC_1_SQRT_2), re(-FRAC_1_SQRT_2)],
            ],
            GateKind::X | GateKind::Cx => [[ZERO, ONE], [ONE, ZERO]],
            GateKind::Cy => [[ZERO, -I], [I, ZERO]],
            GateKind::Cz => [[ONE, ZERO], [ZERO, -ONE]],
            GateKind::AncillaPhase => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, angle)]],
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Cx => "CX",
            GateKind::Cy => "CY",
            GateKind::Cz => "CZ",
            GateKind::Crx => "CRX",
            GateKind::Cry => "CRY",
            GateKind::Crz => "CRZ",
            GateKind::AncillaPhase => "ANCILLA_PHASE",
        };
        f.write_str(s)
    }
}

/// Where a gate's rotation angle comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Angle {
    /// Index into the circuit's parameter vector.
    Slot(usize),
    Fixed(f64),
}

/// One gate application. For two-qubit kinds `qubits = [control, target]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub angle: Option<Angle>,
}

impl GateOp {
    pub fn param(kind: GateKind, qubits: &[usize], slot: usize) -> Self {
        Self {
            kind,
            qubits: qubits.to_vec(),
            angle: Some(Angle::Slot(slot)),
        }
    }

    pub fn fixed(kind: GateKind, qubits: &[usize], angle: f64) -> Self {
        Self {
            kind,
            qubits: qubits.to_vec(),
            angle: Some(Angle::Fixed(angle)),
        }
    }

    pub fn plain(kind: GateKind, qubits: &[usize]) -> Self {
        Self {
            kind,
            qubits: qubits.to_vec(),
            angle: None,
        }
    }

    pub fn slot(&self) -> Option<usize> {
        match self.angle {
            Some(Angle::Slot(s)) => Some(s),
            _ => None,
        }
    }

    fn resolve_angle(&self, theta: &[f64]) -> f64 {
        match self.angle {
            Some(Angle::Slot(s)) => theta[s],
            Some(Angle::Fixed(a)) => a,
            None => 0.0,
        }
    }

    fn target(&self) -> usize {
        *self.qubits.last().expect("validated gate has qubits")
    }

    fn control(&self) -> Option<usize> {
        (self.qubits.len() == 2).then(|| self.qubits[0])
    }
}

/// Ordered gate list acting on `|0…0⟩`, with `n_params` parameter slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitProgram {
    n_qubits: usize,
    ops: Vec<GateOp>,
    n_params: usize,
}

impl CircuitProgram {
    /// Validates qubit ranges, arities and that the referenced slots are
    /// exactly `{0, …, n_params-1}`, each used once.
    pub fn new(n_qubits: usize, ops: Vec<GateOp>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::MalformedCircuit("circuit needs at least one qubit".into()));
        }
        let mut slots = Vec::new();
        for (i, op) in ops.iter().enumerate() {
            if op.qubits.len() != op.kind.arity() {
                return Err(Error::MalformedCircuit(format!(
                    "op {i}: {} expects {} qubit(s), got {}",
                    op.kind,
                    op.kind.arity(),
                    op.qubits.len()
                )));
            }
            for &q in &op.qubits {
                if q >= n_qubits {
                    return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
                }
            }
            if op.qubits.len() == 2 && op.qubits[0] == op.qubits[1] {
                return Err(Error::MalformedCircuit(format!("op {i}: control and target coincide")));
            }
            match (op.kind.takes_angle(), op.angle) {
                (true, None) => return Err(Error::MalformedCircuit(format!("op {i}: {} needs an angle", op.kind))),
                (false, Some(_)) => return Err(Error::MalformedCircuit(format!("op {i}: {} takes no angle", op.kind))),
                (_, Some(Angle::Fixed(a))) if !a.is_finite() => return Err(Error::NonFinite("fixed gate angle")),
                (_, Some(Angle::Slot(s))) => slots.push(s),
                _ => {}
            }
        }
        slots.sort_unstable();
        let n_params = slots.len();
        if slots.iter().enumerate().any(|(i, &s)| i != s) {
            return Err(Error::MalformedCircuit(
                "parameter slots must be exactly 0..n_params, each used once".into(),
            ));
        }
        Ok(Self {
            n_qubits,
            ops,
            n_params,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Gate kind bound to each parameter slot, in slot order.
    pub fn slot_kinds(&self) -> Vec<GateKind> {
        let mut kinds = vec![GateKind::Rx; self.n_params];
        for op in &self.ops {
            if let Some(s) = op.slot() {
                kinds[s] = op.kind;
            }
        }
        kinds
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::ParamLength {
                expected: self.n_params,
                got: theta.len(),
            });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("parameter vector"));
        }
        Ok(())
    }

    /// Applies every op to `state`, optionally conditioned on `extra`
    /// `(qubit, value)` of a wider register.
    fn run(&self, state: &mut Statevector, theta: &[f64], extra: Option<(usize, bool)>) {
        for op in &self.ops {
            let m = op.kind.matrix(op.resolve_angle(theta));
            let mut mask = 0usize;
            let mut value = 0usize;
            if let Some(c) = op.control() {
                mask |= 1 << c;
                value |= 1 << c;
            }
            if let Some((q, on)) = extra {
                mask |= 1 << q;
                if on {
                    value |= 1 << q;
                }
            }
            state.apply_1q(&m, op.target(), mask, value);
        }
    }
}

/// `U(θ)|0…0⟩`.
pub fn apply_circuit(program: &CircuitProgram, theta: &[f64]) -> Result<Statevector> {
    program.check_theta(theta)?;
    let mut state = Statevector::zero(program.n_qubits);
    program.run(&mut state, theta, None);
    Ok(state)
}

/// Largest `|M_ij - M_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn check_observable(dim: usize, m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: m.nrows(),
        });
    }
    let asym = asymmetry(m);
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// `⟨ψ|M|ψ⟩` for a real symmetric `M`, without validation.
pub(crate) fn quadratic_form(amps: &[Complex64], m: &DMatrix<f64>) -> f64 {
    let n = amps.len();
    let mut total = 0.0;
    // column-major storage: walk columns for locality
    for j in 0..n {
        let col = m.column(j);
        let (mut re, mut im) = (0.0, 0.0);
        for i in 0..n {
            re += col[i] * amps[i].re;
            im += col[i] * amps[i].im;
        }
        total += amps[j].re * re + amps[j].im * im;
    }
    total
}

/// `⟨ψ|M|ψ⟩` for a dense real symmetric observable.
pub fn expectation(psi: &Statevector, m: &DMatrix<f64>) -> Result<f64> {
    check_observable(psi.dim(), m)?;
    Ok(quadratic_form(psi.amplitudes(), m))
}

/// `|⟨0|H^{⊗n}|ψ⟩|² = |Σ_k ψ_k|² / 2^n`.
pub fn uniform_overlap(psi: &Statevector) -> f64 {
    uniform_overlap_amps(psi.amplitudes())
}

pub(crate) fn uniform_overlap_amps(amps: &[Complex64]) -> f64 {
    let sum: Complex64 = amps.iter().sum();
    sum.norm_sqr() / amps.len() as f64
}

/// `|⟨ψ₁|ψ₂⟩|²`.
pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// How a single component's signed real part is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignBackend {
    /// Read `Re(e^{iλ} ψ_j)` from the simulated statevector.
    #[default]
    Direct,
    /// Simulate the ancilla sign-estimation circuit and return `⟨Z⟩` of the ancilla.
    Ancilla,
}

/// `Re⟨0|V_j† e^{iλ} U(θ)|0⟩`, where `V_j|0⟩ = |j⟩`.
pub fn component_sign_value(
    program: &CircuitProgram,
    theta: &[f64],
    j: usize,
    lambda: f64,
    backend: SignBackend,
) -> Result<f64> {
    let dim = 1usize << program.n_qubits;
    if j >= dim {
        return Err(Error::IndexOutOfRange { index: j, len: dim });
    }
    match backend {
        SignBackend::Direct => {
            let psi = apply_circuit(program, theta)?;
            Ok((Complex64::from_polar(1.0, lambda) * psi.amplitudes[j]).re)
        }
        SignBackend::Ancilla => {
            program.check_theta(theta)?;
            Ok(ancilla_sign_circuit(program, theta, j, lambda))
        }
    }
}

/// Simulates the sign-estimation circuit on `n + 1` qubits, the ancilla being
/// the most significant qubit `n`:
///
/// `H(a) · U controlled on a=1 · V_j controlled on a=0 · P(λ)(a) · H(a)`
///
/// The ancilla's `⟨Z⟩` is `Re⟨0|V_j† e^{iλ} U|0⟩`.
fn ancilla_sign_circuit(program: &CircuitProgram, theta: &[f64], j: usize, lambda: f64) -> f64 {
    let n = program.n_qubits;
    let anc = n;
    let mut state = Statevector::zero(n + 1);
    let h = GateKind::H.matrix(0.0);
    state.apply_1q(&h, anc, 0, 0);
    program.run(&mut state, theta, Some((anc, true)));
    let x = GateKind::X.matrix(0.0);
    for q in 0..n {
        if j >> q & 1 == 1 {
            state.apply_1q(&x, q, 1 << anc, 0);
        }
    }
    state.apply_1q(&GateKind::AncillaPhase.matrix(lambda), anc, 0, 0);
    state.apply_1q(&h, anc, 0, 0);
    let half = 1usize << n;
    let p0: f64 = state.amplitudes[..half].iter().map(|a| a.norm_sqr()).sum();
    let p1: f64 = state.amplitudes[half..].iter().map(|a| a.norm_sqr()).sum();
    p0 - p1
}
