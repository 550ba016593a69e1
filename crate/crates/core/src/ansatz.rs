//! Catalog of hardware-efficient ansatz circuits.
//!
//! Ids:
//! * `"A"`, `"B"`, `"C"`: the three comparison circuits (H/RZ/CX chain,
//!   RY/CZ ring, RX/RY/CX ring).
//! * `"1"`…`"19"`: the classic expressibility benchmark circuits, transcribed at
//!   four qubits and extended along the qubit chain for other widths.
//! * `"20"`…`"37"`: the two-rotation template family `R1, R2, entangler`.
//! * `"fig4"`: the 98-parameter experiment circuit used at seven qubits.
//! * `"template"`: a user-supplied [`Template`].
//!
//! Every id repeats its single-layer block `layers` times; parameter slots are
//! numbered in order of appearance.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::{CircuitProgram, GateKind, GateOp};

/// Single-qubit rotation axis of a template column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rotation {
    #[serde(alias = "RX", alias = "rx")]
    Rx,
    #[serde(alias = "RY", alias = "ry")]
    Ry,
    #[serde(alias = "RZ", alias = "rz")]
    Rz,
}

impl Rotation {
    fn gate(self) -> GateKind {
        match self {
            Rotation::Rx => GateKind::Rx,
            Rotation::Ry => GateKind::Ry,
            Rotation::Rz => GateKind::Rz,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Entangler {
    #[serde(alias = "CX", alias = "cx")]
    Cx,
    #[serde(alias = "CY", alias = "cy")]
    Cy,
    #[serde(alias = "CZ", alias = "cz")]
    Cz,
}

impl Entangler {
    fn gate(self) -> GateKind {
        match self {
            Entangler::Cx => GateKind::Cx,
            Entangler::Cy => GateKind::Cy,
            Entangler::Cz => GateKind::Cz,
        }
    }
}

/// Entangling pattern of a template layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entanglement {
    /// `E(0→1), E(1→2), …, E(n-2→n-1)`.
    Linear,
    /// The linear chain followed by the wrap-around `E(n-1→0)`.
    Circular,
}

/// One layer: `R1` on every qubit, `R2` on every qubit, then the entangler block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Template {
    pub r1: Rotation,
    pub r2: Rotation,
    pub ent_gate: Entangler,
    pub ent_type: Entanglement,
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{:?}/{:?}/{:?}", self.r1, self.r2, self.ent_gate, self.ent_type)
    }
}

const fn tpl(r1: Rotation, r2: Rotation, ent_gate: Entangler, ent_type: Entanglement) -> Template {
    Template {
        r1,
        r2,
        ent_gate,
        ent_type,
    }
}

use Entanglement::{Circular, Linear};
use Entangler::{Cx, Cy, Cz};
use Rotation::{Rx, Ry, Rz};

/// Rows `#20`…`#37` of the template comparison table.
pub const TEMPLATE_FAMILY: [(&str, Template); 18] = [
    ("20", tpl(Rz, Ry, Cx, Linear)),
    ("21", tpl(Rz, Ry, Cy, Linear)),
    ("22", tpl(Rz, Ry, Cz, Linear)),
    ("23", tpl(Rz, Rx, Cx, Linear)),
    ("24", tpl(Rz, Rx, Cy, Linear)),
    ("25", tpl(Rz, Rx, Cz, Linear)),
    ("26", tpl(Rx, Ry, Cx, Linear)),
    ("27", tpl(Rx, Ry, Cy, Linear)),
    ("28", tpl(Rx, Ry, Cz, Linear)),
    ("29", tpl(Rz, Ry, Cx, Circular)),
    ("30", tpl(Rz, Ry, Cy, Circular)),
    ("31", tpl(Rz, Ry, Cz, Circular)),
    ("32", tpl(Rz, Rx, Cx, Circular)),
    ("33", tpl(Rz, Rx, Cy, Circular)),
    ("34", tpl(Rz, Rx, Cz, Circular)),
    ("35", tpl(Rx, Ry, Cx, Circular)),
    ("36", tpl(Rx, Ry, Cy, Circular)),
    ("37", tpl(Rx, Ry, Cz, Circular)),
];

/// Closed-form parameter count of a catalog id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamFormula {
    /// `nL`
    N,
    /// `2nL`
    TwoN,
    /// `3nL`
    ThreeN,
    /// `4nL`
    FourN,
    /// `(3n-1)L`
    ThreeNMinusOne,
    /// `(4n-4)L`
    FourNMinusFour,
    /// `(5n-1)L`
    FiveNMinusOne,
    /// `(n²+3n)L`
    NSquaredPlusThreeN,
}

impl ParamFormula {
    pub fn eval(self, n: usize, layers: usize) -> usize {
        let per_layer = match self {
            ParamFormula::N => n,
            ParamFormula::TwoN => 2 * n,
            ParamFormula::ThreeN => 3 * n,
            ParamFormula::FourN => 4 * n,
            ParamFormula::ThreeNMinusOne => 3 * n - 1,
            ParamFormula::FourNMinusFour => 4 * n - 4,
            ParamFormula::FiveNMinusOne => 5 * n - 1,
            ParamFormula::NSquaredPlusThreeN => n * n + 3 * n,
        };
        per_layer * layers
    }
}

impl fmt::Display for ParamFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamFormula::N => "nL",
            ParamFormula::TwoN => "2nL",
            ParamFormula::ThreeN => "3nL",
            ParamFormula::FourN => "4nL",
            ParamFormula::ThreeNMinusOne => "(3n-1)L",
            ParamFormula::FourNMinusFour => "(4n-4)L",
            ParamFormula::FiveNMinusOne => "(5n-1)L",
            ParamFormula::NSquaredPlusThreeN => "(n^2+3n)L",
        })
    }
}

/// A registered circuit family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub id: String,
    pub formula: ParamFormula,
    pub min_qubits: usize,
    pub template: Option<Template>,
    pub description: String,
    pub provenance: &'static str,
}

impl CatalogEntry {
    pub fn spec(&self, n_qubits: usize, layers: usize) -> AnsatzSpec {
        AnsatzSpec {
            id: self.id.clone(),
            n_qubits,
            layers,
            template: self.template,
        }
    }
}

/// A concrete circuit request: catalog id, width and depth.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub id: String,
    pub n_qubits: usize,
    pub layers: usize,
    /// Required for id `"template"`; filled in automatically for `"20"`…`"37"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<Template>,
}

impl AnsatzSpec {
    pub fn new(id: impl Into<String>, n_qubits: usize, layers: usize) -> Self {
        let id = id.into();
        let template = family_template(&id);
        Self {
            id,
            n_qubits,
            layers,
            template,
        }
    }

    pub fn custom(template: Template, n_qubits: usize, layers: usize) -> Self {
        Self {
            id: "template".into(),
            n_qubits,
            layers,
            template: Some(template),
        }
    }

    /// Template the id resolves to, if it belongs to the template family.
    pub fn resolved_template(&self) -> Option<Template> {
        family_template(&self.id).or(if self.id == "template" { self.template } else { None })
    }
}

impl fmt::Display for AnsatzSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} (n={}, L={})", self.id, self.n_qubits, self.layers)
    }
}

fn family_template(id: &str) -> Option<Template> {
    TEMPLATE_FAMILY.iter().find(|(tid, _)| *tid == id).map(|(_, t)| *t)
}

fn classic_formula(id: u32) -> Option<ParamFormula> {
    use ParamFormula::*;
    Some(match id {
        1 | 2 | 10 | 15 => TwoN,
        3 | 4 | 16 | 17 => ThreeNMinusOne,
        5 | 6 => NSquaredPlusThreeN,
        7 | 8 => FiveNMinusOne,
        9 => N,
        11 | 12 => FourNMinusFour,
        13 | 14 => FourN,
        18 | 19 => ThreeN,
        _ => return None,
    })
}

fn classic_description(id: u32) -> &'static str {
    match id {
        1 => "RX, RZ on every qubit",
        2 => "RX, RZ, CX ladder",
        3 => "RX, RZ, CRZ ladder",
        4 => "RX, RZ, CRX ladder",
        5 => "RX, RZ, all-to-all CRZ, RX, RZ",
        6 => "RX, RZ, all-to-all CRX, RX, RZ",
        7 => "RX, RZ, even CRZ pairs, RX, RZ, odd CRZ pairs",
        8 => "RX, RZ, even CRX pairs, RX, RZ, odd CRX pairs",
        9 => "H, CZ ladder, RX",
        10 => "RY, CZ ring, RY",
        11 => "RY, RZ, even CX pairs, inner RY, RZ, odd CX pairs",
        12 => "RY, RZ, even CZ pairs, inner RY, RZ, odd CZ pairs",
        13 => "RY, CRZ ring, RY, reversed CRZ ring",
        14 => "RY, CRX ring, RY, reversed CRX ring",
        15 => "RY, CX ring, RY, reversed CX ring",
        16 => "RX, RZ, even then odd CRZ pairs",
        17 => "RX, RZ, even then odd CRX pairs",
        18 => "RX, RZ, CRZ ring",
        19 => "RX, RZ, CRX ring",
        _ => "",
    }
}

/// Every registered id with its parameter-count formula and provenance.
pub fn catalog() -> Vec<CatalogEntry> {
    let mut entries = vec![
        CatalogEntry {
            id: "A".into(),
            formula: ParamFormula::N,
            min_qubits: 2,
            template: None,
            description: "H, RZ, CX chain".into(),
            provenance: "three-ansatz comparison, circuit A",
        },
        CatalogEntry {
            id: "B".into(),
            formula: ParamFormula::TwoN,
            min_qubits: 2,
            template: None,
            description: "RY, CZ ring, RY (real amplitudes)".into(),
            provenance: "three-ansatz comparison, circuit B",
        },
        CatalogEntry {
            id: "C".into(),
            formula: ParamFormula::TwoN,
            min_qubits: 2,
            template: None,
            description: "RX, RY, wrap-first CX ring".into(),
            provenance: "three-ansatz comparison, circuit C",
        },
    ];
    for id in 1..=19 {
        entries.push(CatalogEntry {
            id: id.to_string(),
            formula: classic_formula(id).expect("ids 1..=19 are registered"),
            min_qubits: if id == 1 { 1 } else { 2 },
            template: None,
            description: classic_description(id).into(),
            provenance: "classic expressibility benchmark circuits",
        });
    }
    for (id, t) in TEMPLATE_FAMILY {
        entries.push(CatalogEntry {
            id: id.into(),
            formula: ParamFormula::TwoN,
            min_qubits: 2,
            template: Some(t),
            description: format!("template {t}"),
            provenance: "template family table",
        });
    }
    entries.push(CatalogEntry {
        id: "fig4".into(),
        formula: ParamFormula::TwoN,
        min_qubits: 2,
        template: None,
        description: "RX, RY, CX(n-1 -> 0) then CX chain; 98 parameters at n=7, L=7".into(),
        provenance: "simulation experiment circuit",
    });
    entries
}

/// Catalog lookup; `None` for unknown ids.
pub fn lookup(id: &str) -> Option<CatalogEntry> {
    catalog().into_iter().find(|e| e.id == id)
}

fn entry_for(spec: &AnsatzSpec) -> Result<(ParamFormula, usize)> {
    if spec.id == "template" {
        return match spec.template {
            Some(_) => Ok((ParamFormula::TwoN, 2)),
            None => Err(Error::InvalidArgument("id 'template' requires a template".into())),
        };
    }
    lookup(&spec.id)
        .map(|e| (e.formula, e.min_qubits))
        .ok_or_else(|| Error::UnknownAnsatz(spec.id.clone()))
}

/// Closed-form number of parameters of `spec`.
pub fn param_count(spec: &AnsatzSpec) -> Result<usize> {
    let (formula, _) = entry_for(spec)?;
    Ok(formula.eval(spec.n_qubits, spec.layers))
}

struct Builder {
    n: usize,
    ops: Vec<GateOp>,
    next_slot: usize,
}

impl Builder {
    fn rot(&mut self, kind: GateKind, q: usize) {
        self.ops.push(GateOp::param(kind, &[q], self.next_slot));
        self.next_slot += 1;
    }

    fn rot_all(&mut self, kind: GateKind) {
        for q in 0..self.n {
            self.rot(kind, q);
        }
    }

    fn crot(&mut self, kind: GateKind, control: usize, target: usize) {
        self.ops.push(GateOp::param(kind, &[control, target], self.next_slot));
        self.next_slot += 1;
    }

    fn gate(&mut self, kind: GateKind, qubits: &[usize]) {
        self.ops.push(GateOp::plain(kind, qubits));
    }

    /// Two-qubit gate (parameterized or not) on `control → target`.
    fn two(&mut self, kind: GateKind, control: usize, target: usize) {
        if kind.takes_angle() {
            self.crot(kind, control, target);
        } else {
            self.gate(kind, &[control, target]);
        }
    }

    /// `E(i+1 → i)` for `i = n-2, …, 0`.
    fn ladder_up(&mut self, kind: GateKind) {
        for i in (0..self.n - 1).rev() {
            self.two(kind, i + 1, i);
        }
    }

    /// `E(i+1 → i)` for every `i` of the given parity with `i + 1 < n`.
    fn pairs(&mut self, kind: GateKind, parity: usize) {
        for i in (parity..self.n - 1).step_by(2) {
            self.two(kind, i + 1, i);
        }
    }

    /// `E(i → i+1 mod n)` for `i = n-1, …, 0`.
    fn ring_down(&mut self, kind: GateKind) {
        for i in (0..self.n).rev() {
            self.two(kind, i, (i + 1) % self.n);
        }
    }

    /// `E(c → c-1 mod n)` for `c = n-1, 0, 1, …, n-2`.
    fn ring_back(&mut self, kind: GateKind) {
        let n = self.n;
        let order = std::iter::once(n - 1).chain(0..n - 1);
        for c in order {
            self.two(kind, c, (c + n - 1) % n);
        }
    }

    fn classic_layer(&mut self, id: u32) {
        use GateKind::*;
        let n = self.n;
        match id {
            1 => {
                self.rot_all(Rx);
                self.rot_all(Rz);
            }
            2..=4 => {
                self.rot_all(Rx);
                self.rot_all(Rz);
                self.ladder_up([Cx, Crz, Crx][(id - 2) as usize]);
            }
            5 | 6 => {
                let kind = if id == 5 { Crz } else { Crx };
                self.rot_all(Rx);
                self.rot_all(Rz);
                for c in (0..n).rev() {
                    for t in (0..n).rev().filter(|&t| t != c) {
                        self.crot(kind, c, t);
                    }
                }
                self.rot_all(Rx);
                self.rot_all(Rz);
            }
            7 | 8 => {
                let kind = if id == 7 { Crz } else { Crx };
                self.rot_all(Rx);
                self.rot_all(Rz);
                self.pairs(kind, 0);
                self.rot_all(Rx);
                self.rot_all(Rz);
                self.pairs(kind, 1);
            }
            9 => {
                for q in 0..n {
                    self.gate(H, &[q]);
                }
                for i in (0..n - 1).rev() {
                    self.gate(Cz, &[i, i + 1]);
                }
                self.rot_all(Rx);
            }
            10 => {
                self.rot_all(Ry);
                for i in (0..n - 1).rev() {
                    self.gate(Cz, &[i, i + 1]);
                }
                self.gate(Cz, &[0, n - 1]);
                self.rot_all(Ry);
            }
            11 | 12 => {
                let kind = if id == 11 { Cx } else { Cz };
                self.rot_all(Ry);
                self.rot_all(Rz);
                self.pairs(kind, 0);
                for q in 1..n - 1 {
                    self.rot(Ry, q);
                }
                for q in 1..n - 1 {
                    self.rot(Rz, q);
                }
                self.pairs(kind, 1);
            }
            13..=15 => {
                let kind = [Crz, Crx, Cx][(id - 13) as usize];
                self.rot_all(Ry);
                self.ring_down(kind);
                self.rot_all(Ry);
                self.ring_back(kind);
            }
            16 | 17 => {
                let kind = if id == 16 { Crz } else { Crx };
                self.rot_all(Rx);
                self.rot_all(Rz);
                self.pairs(kind, 0);
                self.pairs(kind, 1);
            }
            18 | 19 => {
                let kind = if id == 18 { Crz } else { Crx };
                self.rot_all(Rx);
                self.rot_all(Rz);
                self.ring_down(kind);
            }
            _ => unreachable!("classic ids are 1..=19"),
        }
    }

    fn template_layer(&mut self, t: &Template) {
        self.rot_all(t.r1.gate());
        self.rot_all(t.r2.gate());
        let g = t.ent_gate.gate();
        for i in 0..self.n - 1 {
            self.gate(g, &[i, i + 1]);
        }
        if t.ent_type == Entanglement::Circular {
            self.gate(g, &[self.n - 1, 0]);
        }
    }

    /// RX, RY, then `CX(n-1→0)` followed by the `CX(i→i+1)` chain.
    fn wrap_first_layer(&mut self) {
        self.rot_all(GateKind::Rx);
        self.rot_all(GateKind::Ry);
        self.gate(GateKind::Cx, &[self.n - 1, 0]);
        for i in 0..self.n - 1 {
            self.gate(GateKind::Cx, &[i, i + 1]);
        }
    }
}

/// Compiles `spec` into a gate list.
pub fn build_ansatz(spec: &AnsatzSpec) -> Result<CircuitProgram> {
    let (_, min_qubits) = entry_for(spec)?;
    let n = spec.n_qubits;
    if n < min_qubits.max(1) {
        return Err(Error::TooFewQubits {
            id: spec.id.clone(),
            n_qubits: n,
            min: min_qubits.max(1),
        });
    }
    if spec.layers == 0 {
        return Err(Error::InvalidArgument("ansatz needs at least one layer".into()));
    }
    let mut b = Builder {
        n,
        ops: Vec::new(),
        next_slot: 0,
    };
    let template = spec.resolved_template();
    for _ in 0..spec.layers {
        match (spec.id.as_str(), &template) {
            (_, Some(t)) => b.template_layer(t),
            ("A", _) => {
                for q in 0..n {
                    b.gate(GateKind::H, &[q]);
                }
                b.rot_all(GateKind::Rz);
                for i in 0..n - 1 {
                    b.gate(GateKind::Cx, &[i, i + 1]);
                }
            }
            ("B", _) => {
                b.rot_all(GateKind::Ry);
                b.gate(GateKind::Cz, &[0, n - 1]);
                for i in 0..n - 1 {
                    b.gate(GateKind::Cz, &[i, i + 1]);
                }
                b.rot_all(GateKind::Ry);
            }
            ("C", _) | ("fig4", _) => b.wrap_first_layer(),
            (id, _) => {
                let num: u32 = id.parse().map_err(|_| Error::UnknownAnsatz(id.to_string()))?;
                b.classic_layer(num);
            }
        }
    }
    CircuitProgram::new(n, b.ops)
}
