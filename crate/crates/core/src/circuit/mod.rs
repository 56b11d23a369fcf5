//! Parameterized circuits, statevector evolution and exact derivatives.

mod ansatz;
mod sim;

pub use ansatz::{
    build_ansatz, canonical_product_form, cz_ring_diagonal, effective_generators, full_hea, DepthPolicy,
    EffectiveGenerators, Family,
};
pub use sim::{check_nondegeneracy, evolve, partials, TangentFrame};

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::{expm_hermitian, hermitian_eig, DenseOperator, PauliKey, PauliSum, StateVector, C64};
use crate::{Error, Result, MAX_QUBITS};

/// Anything that maps a parameter vector to a state with exact derivatives.
pub trait StateModel: Send + Sync {
    fn n_qubits(&self) -> usize;
    fn n_params(&self) -> usize;
    fn initial_state(&self) -> &StateVector;
    fn evolve(&self, theta: &[f64]) -> Result<StateVector>;
    fn tangent_frame(&self, theta: &[f64]) -> Result<TangentFrame>;
}

/// Parameter vector in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamPoint(pub Vec<f64>);

impl ParamPoint {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Debug)]
enum GenKind {
    Pauli { key: PauliKey, coeff: f64 },
    Spectral { values: Vec<f64>, vectors: DMatrix<C64> },
}

/// Hermitian generator `H` of a rotation `exp(-i θ H)`.
///
/// Single Pauli terms are applied as signed index permutations; everything
/// else is applied through its eigendecomposition.
#[derive(Clone, Debug)]
pub struct Generator {
    n_qubits: usize,
    sum: Option<PauliSum>,
    dense: Option<DenseOperator>,
    kind: GenKind,
}

impl Generator {
    pub fn from_pauli_sum(h: PauliSum) -> Result<Self> {
        let n = h.n_qubits();
        if n == 0 {
            return Err(Error::InvalidAnsatz { n_qubits: 0, depth: 0 });
        }
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n));
        }
        let kind = match h.as_single() {
            Some((key, coeff)) => GenKind::Pauli { key, coeff },
            None if h.is_empty() => GenKind::Pauli {
                key: PauliKey::IDENTITY,
                coeff: 0.0,
            },
            None => spectral(&h.dense())?,
        };
        Ok(Self {
            n_qubits: n,
            sum: Some(h),
            dense: None,
            kind,
        })
    }

    pub fn from_label(label: &str) -> Result<Self> {
        Self::from_pauli_sum(PauliSum::from_label(label, 1.0)?)
    }

    /// Dense Hermitian generator (e.g. a perturbed Pauli string).
    pub fn from_dense(h: DenseOperator) -> Result<Self> {
        h.check_hermitian()?;
        let dim = h.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::DimensionMismatch(dim, dim.next_power_of_two().max(2)));
        }
        let kind = spectral(&h)?;
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            sum: None,
            dense: Some(h),
            kind,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Pauli expansion, when the generator was built from one.
    pub fn pauli_sum(&self) -> Option<&PauliSum> {
        self.sum.as_ref()
    }

    /// Pauli expansion, decomposing a dense generator if needed.
    pub fn to_pauli_sum(&self) -> PauliSum {
        match &self.sum {
            Some(s) => s.clone(),
            None => PauliSum::from_dense(self.dense.as_ref().expect("dense generator"), 1e-14)
                .expect("generator is Hermitian"),
        }
    }

    pub fn dense(&self) -> DenseOperator {
        match (&self.sum, &self.dense) {
            (_, Some(d)) => d.clone(),
            (Some(s), None) => s.dense(),
            _ => unreachable!("generator without representation"),
        }
    }

    pub fn is_single_pauli(&self) -> bool {
        matches!(self.kind, GenKind::Pauli { .. })
    }

    /// `dst += scale · H · src`.
    pub fn apply_add(&self, src: &[C64], dst: &mut [C64], scale: C64) {
        match (&self.kind, &self.sum, &self.dense) {
            (GenKind::Pauli { key, coeff }, _, _) => key.apply_add(src, dst, scale * *coeff),
            (_, Some(s), _) if s.len() * 4 < self.dim() => s.apply_add(src, dst, scale),
            (_, _, Some(d)) => matvec_add(d.matrix(), src, dst, scale),
            (_, Some(s), None) => s.apply_add(src, dst, scale),
            _ => unreachable!(),
        }
    }

    /// `psi <- exp(-i θ H) psi`.
    pub fn rotate(&self, psi: &mut [C64], theta: f64) {
        match &self.kind {
            GenKind::Pauli { key, coeff } => {
                let (s, c) = (theta * coeff).sin_cos();
                if s == 0.0 {
                    if c != 1.0 {
                        psi.iter_mut().for_each(|a| *a *= c);
                    }
                    return;
                }
                let x = key.x as usize;
                let src = psi.to_vec();
                let mis = C64::new(0.0, -s);
                // psi = c·src - i s·P src
                psi.iter_mut().zip(&src).for_each(|(p, a)| *p = a * c);
                for (j, a) in src.iter().enumerate() {
                    psi[j ^ x] += mis * key.column_phase(j) * a;
                }
            }
            GenKind::Spectral { values, vectors } => {
                let d = psi.len();
                let mut w = vec![C64::new(0.0, 0.0); d];
                for (i, wi) in w.iter_mut().enumerate() {
                    let col = vectors.column(i);
                    let mut acc = C64::new(0.0, 0.0);
                    for r in 0..d {
                        acc += col[r].conj() * psi[r];
                    }
                    *wi = acc * C64::from_polar(1.0, -theta * values[i]);
                }
                for (r, p) in psi.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (i, wi) in w.iter().enumerate() {
                        acc += vectors[(r, i)] * wi;
                    }
                    *p = acc;
                }
            }
        }
    }

    /// `m <- m · exp(-i θ H)`.
    pub fn right_rotate(&self, m: &mut DMatrix<C64>, theta: f64) {
        match &self.kind {
            GenKind::Pauli { key, coeff } => {
                let (s, c) = (theta * coeff).sin_cos();
                let x = key.x as usize;
                let src = m.clone();
                let mis = C64::new(0.0, -s);
                // (M P)[:, j] = phase(j) M[:, j ^ x]
                for j in 0..m.ncols() {
                    let ph = mis * key.column_phase(j);
                    let (mut dst, a, b) = (m.column_mut(j), src.column(j), src.column(j ^ x));
                    for r in 0..dst.nrows() {
                        dst[r] = a[r] * c + ph * b[r];
                    }
                }
            }
            GenKind::Spectral { .. } => {
                let u = self.exp_dense(theta);
                *m = &*m * u.matrix();
            }
        }
    }

    /// `exp(-i θ H)` as a matrix.
    pub fn exp_dense(&self, theta: f64) -> DenseOperator {
        match &self.kind {
            GenKind::Pauli { .. } => expm_hermitian(self.sum.as_ref().expect("Pauli generator"), theta),
            GenKind::Spectral { values, vectors } => {
                let mut vd = vectors.clone();
                for (c, l) in values.iter().enumerate() {
                    let p = C64::from_polar(1.0, -theta * l);
                    vd.column_mut(c).iter_mut().for_each(|z| *z *= p);
                }
                DenseOperator::from_matrix(vd * vectors.adjoint()).expect("square")
            }
        }
    }
}

fn spectral(h: &DenseOperator) -> Result<GenKind> {
    let (values, vectors) = hermitian_eig(h)?;
    Ok(GenKind::Spectral { values, vectors })
}

fn matvec_add(m: &DMatrix<C64>, src: &[C64], dst: &mut [C64], scale: C64) {
    for (j, a) in src.iter().enumerate() {
        if *a == C64::new(0.0, 0.0) {
            continue;
        }
        let s = scale * a;
        for (r, z) in m.column(j).iter().enumerate() {
            dst[r] += z * s;
        }
    }
}

/// Non-trainable unitary interleaved between parameterized slots.
#[derive(Clone, Debug)]
pub struct FixedGate {
    op: DenseOperator,
    diag: Option<Vec<C64>>,
}

impl FixedGate {
    pub fn new(op: DenseOperator) -> Result<Self> {
        op.check_unitary(1e-10)?;
        let diag = op.diagonal();
        Ok(Self { op, diag })
    }

    pub fn diagonal(values: Vec<C64>) -> Result<Self> {
        Self::new(DenseOperator::from_diagonal(&values))
    }

    pub fn op(&self) -> &DenseOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn apply(&self, psi: &mut [C64]) {
        match &self.diag {
            Some(d) => psi.iter_mut().zip(d).for_each(|(a, p)| *a *= p),
            None => {
                let src = psi.to_vec();
                psi.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
                matvec_add(self.op.matrix(), &src, psi, C64::new(1.0, 0.0));
            }
        }
    }

    /// `m <- m · F`.
    pub fn right_apply(&self, m: &mut DMatrix<C64>) {
        match &self.diag {
            Some(d) => {
                for (j, p) in d.iter().enumerate() {
                    m.column_mut(j).iter_mut().for_each(|z| *z *= p);
                }
            }
            None => *m = &*m * self.op.matrix(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Slot {
    Param(Generator),
    Fixed(FixedGate),
}

/// Ordered gate sequence acting on a reference state; slot 0 acts first.
#[derive(Clone, Debug)]
pub struct CircuitSpec {
    n_qubits: usize,
    slots: Vec<Slot>,
    initial_state: StateVector,
    family: String,
    depth: usize,
    n_params: usize,
}

impl CircuitSpec {
    pub fn new(n_qubits: usize, slots: Vec<Slot>, initial_state: StateVector) -> Result<Self> {
        Self::with_family(n_qubits, slots, initial_state, "custom", 0)
    }

    pub fn with_family(
        n_qubits: usize,
        slots: Vec<Slot>,
        initial_state: StateVector,
        family: &str,
        depth: usize,
    ) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidAnsatz { n_qubits, depth });
        }
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(n_qubits));
        }
        let dim = 1usize << n_qubits;
        if initial_state.dim() != dim {
            return Err(Error::DimensionMismatch(dim, initial_state.dim()));
        }
        let norm = initial_state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        let mut n_params = 0;
        for s in &slots {
            let d = match s {
                Slot::Param(g) => {
                    n_params += 1;
                    g.dim()
                }
                Slot::Fixed(f) => f.dim(),
            };
            if d != dim {
                return Err(Error::DimensionMismatch(dim, d));
            }
        }
        if n_params == 0 {
            return Err(Error::NoParameters);
        }
        Ok(Self {
            n_qubits,
            slots,
            initial_state,
            family: family.to_string(),
            depth,
            n_params,
        })
    }

    /// Parameterized circuit from generator labels on `|0...0>`.
    pub fn from_labels(labels: &[&str]) -> Result<Self> {
        let gens = labels.iter().map(|l| Generator::from_label(l)).collect::<Result<Vec<_>>>()?;
        let n = gens.first().ok_or(Error::EmptyGenerators)?.n_qubits();
        Self::new(n, gens.into_iter().map(Slot::Param).collect(), StateVector::zero_state(n))
    }

    pub fn from_generators(gens: Vec<PauliSum>, initial_state: StateVector) -> Result<Self> {
        let n = gens.first().ok_or(Error::EmptyGenerators)?.n_qubits();
        let slots = gens
            .into_iter()
            .map(|g| Generator::from_pauli_sum(g).map(Slot::Param))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, slots, initial_state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial_state
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn generators(&self) -> impl Iterator<Item = &Generator> {
        self.slots.iter().filter_map(|s| match s {
            Slot::Param(g) => Some(g),
            Slot::Fixed(_) => None,
        })
    }

    pub fn has_fixed_gates(&self) -> bool {
        self.slots.iter().any(|s| matches!(s, Slot::Fixed(_)))
    }

    pub fn with_initial_state(&self, state: StateVector) -> Result<Self> {
        Self::with_family(self.n_qubits, self.slots.clone(), state, &self.family, self.depth)
    }

    pub fn with_family_name(mut self, family: &str, depth: usize) -> Self {
        self.family = family.to_string();
        self.depth = depth;
        self
    }

    /// Same gate sequence with every generator passed through `f`.
    pub fn map_generators(&self, mut f: impl FnMut(usize, &Generator) -> Result<Generator>) -> Result<Self> {
        let mut k = 0;
        let slots = self
            .slots
            .iter()
            .map(|s| match s {
                Slot::Param(g) => {
                    let out = f(k, g).map(Slot::Param);
                    k += 1;
                    out
                }
                Slot::Fixed(fg) => Ok(Slot::Fixed(fg.clone())),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_family(self.n_qubits, slots, self.initial_state.clone(), &self.family, self.depth)
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::LengthMismatch {
                expected: self.n_params,
                got: theta.len(),
            });
        }
        Ok(())
    }
}

impl StateModel for CircuitSpec {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn n_params(&self) -> usize {
        self.n_params
    }

    fn initial_state(&self) -> &StateVector {
        &self.initial_state
    }

    fn evolve(&self, theta: &[f64]) -> Result<StateVector> {
        evolve(self, theta)
    }

    fn tangent_frame(&self, theta: &[f64]) -> Result<TangentFrame> {
        partials(self, theta)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SlotRepr {
    Param {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pauli: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<DenseOperator>,
    },
    Fixed {
        matrix: DenseOperator,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitRepr {
    n_qubits: usize,
    slots: Vec<SlotRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_state: Option<StateVector>,
    #[serde(default = "default_family")]
    family: String,
    #[serde(default)]
    depth: usize,
}

fn default_family() -> String {
    "custom".into()
}

impl Serialize for CircuitSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let slots = self
            .slots
            .iter()
            .map(|s| match s {
                Slot::Param(g) => match g.pauli_sum() {
                    Some(p) => SlotRepr::Param {
                        pauli: Some(pauli_text(p)),
                        matrix: None,
                    },
                    None => SlotRepr::Param {
                        pauli: None,
                        matrix: Some(g.dense()),
                    },
                },
                Slot::Fixed(f) => SlotRepr::Fixed { matrix: f.op().clone() },
            })
            .collect();
        CircuitRepr {
            n_qubits: self.n_qubits,
            slots,
            initial_state: Some(self.initial_state.clone()),
            family: self.family.clone(),
            depth: self.depth,
        }
        .serialize(serializer)
    }
}

/// Bare letters for a unit single-string generator, the full sum otherwise.
fn pauli_text(p: &PauliSum) -> String {
    match p.as_single() {
        Some((k, c)) if c == 1.0 => k.label(p.n_qubits()),
        _ => p.to_text(),
    }
}

impl<'de> Deserialize<'de> for CircuitSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = CircuitRepr::deserialize(deserializer)?;
        let n = repr.n_qubits;
        if n == 0 || n > MAX_QUBITS {
            return Err(D::Error::custom(Error::TooManyQubits(n)));
        }
        let mut slots = Vec::with_capacity(repr.slots.len());
        for s in repr.slots {
            let slot = match s {
                SlotRepr::Param { pauli: Some(p), matrix: None } => {
                    let sum: PauliSum = p.parse().map_err(D::Error::custom)?;
                    if sum.n_qubits() != n {
                        return Err(D::Error::custom(Error::QubitMismatch(n, sum.n_qubits())));
                    }
                    Slot::Param(Generator::from_pauli_sum(sum).map_err(D::Error::custom)?)
                }
                SlotRepr::Param { pauli: None, matrix: Some(m) } => {
                    Slot::Param(Generator::from_dense(m).map_err(D::Error::custom)?)
                }
                SlotRepr::Param { .. } => {
                    return Err(D::Error::custom("param slot needs exactly one of `pauli` or `matrix`"))
                }
                SlotRepr::Fixed { matrix } => Slot::Fixed(FixedGate::new(matrix).map_err(D::Error::custom)?),
            };
            slots.push(slot);
        }
        let state = repr.initial_state.unwrap_or_else(|| StateVector::zero_state(n));
        CircuitSpec::with_family(n, slots, state, &repr.family, repr.depth).map_err(D::Error::custom)
    }
}
