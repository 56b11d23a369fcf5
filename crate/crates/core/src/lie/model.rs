use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::closure::{default_tolerance, lie_closure, LieBasis};
use super::trunc::{lie_trunc, random_trunc, TruncationReport};
use crate::algebra::{expm_skew, DenseOperator, PauliSum, StateVector, C64};
use crate::circuit::{effective_generators, CircuitSpec, FixedGate, Generator, Slot, StateModel, TangentFrame};
use crate::{Error, Result};

/// How a truncated basis is turned into a state model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    /// `Π_j exp(-i c_j h_j) |ψ0>`, one slot per basis element.
    #[default]
    Product,
    /// `exp(-i Σ_j c_j h_j) |ψ0>`.
    SingleExp,
}

/// `F · exp(-i Σ_j c_j h_j) |ψ0>` with exact directional derivatives.
#[derive(Clone, Debug)]
pub struct SingleExpModel {
    n_qubits: usize,
    elements: Vec<PauliSum>,
    dense: Vec<DenseOperator>,
    initial_state: StateVector,
    trailing: Option<DenseOperator>,
}

impl SingleExpModel {
    fn exponent(&self, c: &[f64]) -> Result<DenseOperator> {
        if c.len() != self.elements.len() {
            return Err(Error::LengthMismatch {
                expected: self.elements.len(),
                got: c.len(),
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut a = DMatrix::<C64>::zeros(dim, dim);
        for (cj, h) in c.iter().zip(&self.dense) {
            a += h.matrix() * C64::new(0.0, -cj);
        }
        DenseOperator::from_matrix(a)
    }

    fn finish(&self, v: DenseOperator, psi0: &StateVector) -> Result<StateVector> {
        let out = v.apply(psi0)?;
        match &self.trailing {
            Some(f) => f.apply(&out),
            None => Ok(out),
        }
    }

    pub fn elements(&self) -> &[PauliSum] {
        &self.elements
    }
}

impl StateModel for SingleExpModel {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn n_params(&self) -> usize {
        self.elements.len()
    }

    fn initial_state(&self) -> &StateVector {
        &self.initial_state
    }

    fn evolve(&self, theta: &[f64]) -> Result<StateVector> {
        let a = self.exponent(theta)?;
        self.finish(expm_skew(&a, 1.0)?, &self.initial_state)
    }

    /// Directional derivatives from the block identity
    /// `exp([[A, E], [0, A]]) = [[e^A, D e^A(E)], [0, e^A]]`.
    fn tangent_frame(&self, theta: &[f64]) -> Result<TangentFrame> {
        let a = self.exponent(theta)?;
        let dim = a.dim();
        let state = self.finish(expm_skew(&a, 1.0)?, &self.initial_state)?;
        let mut partials = DMatrix::<C64>::zeros(dim, self.elements.len());
        for (j, h) in self.dense.iter().enumerate() {
            let mut block = DMatrix::<C64>::zeros(2 * dim, 2 * dim);
            block.view_mut((0, 0), (dim, dim)).copy_from(a.matrix());
            block.view_mut((dim, dim), (dim, dim)).copy_from(a.matrix());
            block
                .view_mut((0, dim), (dim, dim))
                .copy_from(&(h.matrix() * C64::new(0.0, -1.0)));
            let e = block.exp();
            let de = DenseOperator::from_matrix(e.view((0, dim), (dim, dim)).into_owned())?;
            let col = self.finish(de, &self.initial_state)?;
            partials.column_mut(j).copy_from_slice(col.amplitudes());
        }
        Ok(TangentFrame::new(state, partials))
    }
}

/// A truncated model in either parameterization.
#[derive(Clone, Debug)]
pub enum TruncatedCircuit {
    Product(CircuitSpec),
    SingleExp(SingleExpModel),
}

impl StateModel for TruncatedCircuit {
    fn n_qubits(&self) -> usize {
        match self {
            TruncatedCircuit::Product(c) => c.n_qubits(),
            TruncatedCircuit::SingleExp(m) => m.n_qubits(),
        }
    }

    fn n_params(&self) -> usize {
        match self {
            TruncatedCircuit::Product(c) => c.n_params(),
            TruncatedCircuit::SingleExp(m) => m.n_params(),
        }
    }

    fn initial_state(&self) -> &StateVector {
        match self {
            TruncatedCircuit::Product(c) => c.initial_state(),
            TruncatedCircuit::SingleExp(m) => m.initial_state(),
        }
    }

    fn evolve(&self, theta: &[f64]) -> Result<StateVector> {
        match self {
            TruncatedCircuit::Product(c) => c.evolve(theta),
            TruncatedCircuit::SingleExp(m) => m.evolve(theta),
        }
    }

    fn tangent_frame(&self, theta: &[f64]) -> Result<TangentFrame> {
        match self {
            TruncatedCircuit::Product(c) => c.tangent_frame(theta),
            TruncatedCircuit::SingleExp(m) => m.tangent_frame(theta),
        }
    }
}

fn product_circuit(
    generators: Vec<PauliSum>,
    initial_state: StateVector,
    trailing: Option<&DenseOperator>,
) -> Result<CircuitSpec> {
    let n = initial_state.n_qubits();
    let mut slots = generators
        .into_iter()
        .map(|g| Generator::from_pauli_sum(g).map(Slot::Param))
        .collect::<Result<Vec<_>>>()?;
    if let Some(f) = trailing {
        slots.push(Slot::Fixed(FixedGate::new(f.clone())?));
    }
    CircuitSpec::new(n, slots, initial_state)
}

/// State model over a basis. Elements are rescaled to unit Pauli-coefficient
/// norm so a single Pauli element gives the usual `exp(-i θ P)` rotation.
/// `trailing` is applied after the exponentials.
pub fn truncated_circuit(
    basis: &LieBasis,
    parameterization: Parameterization,
    initial_state: StateVector,
    trailing: Option<&DenseOperator>,
) -> Result<TruncatedCircuit> {
    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    if initial_state.dim() != basis.dim_hilbert {
        return Err(Error::DimensionMismatch(basis.dim_hilbert, initial_state.dim()));
    }
    let elements: Vec<PauliSum> = (0..basis.dim()).map(|j| basis.unit_coefficient_element(j)).collect();
    match parameterization {
        Parameterization::Product => Ok(TruncatedCircuit::Product(product_circuit(
            elements,
            initial_state,
            trailing,
        )?)),
        Parameterization::SingleExp => {
            let norm = initial_state.norm();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::NotNormalized(norm));
            }
            Ok(TruncatedCircuit::SingleExp(SingleExpModel {
                n_qubits: basis.n_qubits,
                dense: elements.iter().map(|e| e.dense()).collect(),
                elements,
                initial_state,
                trailing: trailing.cloned(),
            }))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieTruncOptions {
    pub depth_cap: usize,
    /// Defaults to the source circuit's parameter count.
    pub dim_budget: Option<usize>,
    pub closure_max_dim: usize,
}

impl Default for LieTruncOptions {
    fn default() -> Self {
        Self {
            depth_cap: 2,
            dim_budget: None,
            closure_max_dim: 4096,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomTruncOptions {
    pub keep: usize,
    pub seed: u64,
}

impl Default for RandomTruncOptions {
    fn default() -> Self {
        Self { keep: 2, seed: 7 }
    }
}

/// A truncated product-form circuit together with its provenance.
#[derive(Clone, Debug)]
pub struct TruncatedModel {
    pub circuit: CircuitSpec,
    pub basis: LieBasis,
    pub report: TruncationReport,
    /// Closure of the source circuit's effective generators, when computed.
    pub closure: Option<LieBasis>,
}

/// Closure of a circuit's effective generators.
pub fn circuit_closure(circuit: &CircuitSpec, max_dim: usize) -> Result<LieBasis> {
    let eff = effective_generators(circuit)?;
    lie_closure(&eff.generators, max_dim, default_tolerance(&eff.generators))
}

/// LieTrunc applied to a circuit: closure and truncation of the effective
/// generators, one product-form slot per kept element, then the circuit's
/// fixed gates as one trailing unitary.
pub fn lie_trunc_model(circuit: &CircuitSpec, opts: &LieTruncOptions) -> Result<TruncatedModel> {
    let eff = effective_generators(circuit)?;
    let tol = default_tolerance(&eff.generators);
    let closure = lie_closure(&eff.generators, opts.closure_max_dim, tol)?;
    let budget = opts.dim_budget.unwrap_or(circuit.n_params());
    let (basis, report) = lie_trunc(&closure, &eff.generators, opts.depth_cap, budget)?;
    let model = truncated_circuit(
        &basis,
        Parameterization::Product,
        circuit.initial_state().clone(),
        eff.trailing.as_ref(),
    )?;
    let TruncatedCircuit::Product(c) = model else {
        unreachable!("product parameterization requested")
    };
    Ok(TruncatedModel {
        circuit: c.with_family_name("lie_trunc", circuit.depth()),
        basis,
        report,
        closure: Some(closure),
    })
}

/// RandomTrunc applied to a circuit: keeps `keep` effective generator
/// directions and reassigns the circuit's slots to them round-robin, so the
/// parameter count is unchanged.
pub fn random_trunc_model(circuit: &CircuitSpec, opts: &RandomTruncOptions) -> Result<TruncatedModel> {
    let eff = effective_generators(circuit)?;
    let (basis, report, kept) = random_trunc(&eff.generators, opts.keep, opts.seed)?;
    let gens = (0..circuit.n_params()).map(|k| kept[k % kept.len()].clone()).collect();
    let c = product_circuit(gens, circuit.initial_state().clone(), eff.trailing.as_ref())?;
    Ok(TruncatedModel {
        circuit: c.with_family_name("random_trunc", circuit.depth()),
        basis,
        report,
        closure: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::full_hea;

    fn basis(labels: &[&str]) -> LieBasis {
        let g: Vec<PauliSum> = labels.iter().map(|l| l.parse().unwrap()).collect();
        lie_closure(&g, 64, 1e-10).unwrap()
    }

    #[test]
    fn single_element_forms_agree() {
        let b = basis(&["XY"]);
        let psi0 = StateVector::zero_state(2);
        let p = truncated_circuit(&b, Parameterization::Product, psi0.clone(), None).unwrap();
        let s = truncated_circuit(&b, Parameterization::SingleExp, psi0, None).unwrap();
        let a = p.evolve(&[0.4]).unwrap();
        let c = s.evolve(&[0.4]).unwrap();
        assert!(a.distance(&c) < 1e-12);
        let fa = p.tangent_frame(&[0.4]).unwrap();
        let fc = s.tangent_frame(&[0.4]).unwrap();
        assert!((&fa.partials - &fc.partials).norm() < 1e-10);
    }

    #[test]
    fn zero_parameters_give_initial_state() {
        let b = basis(&["X", "Z"]);
        let psi0 = StateVector::zero_state(1);
        for p in [Parameterization::Product, Parameterization::SingleExp] {
            let m = truncated_circuit(&b, p, psi0.clone(), None).unwrap();
            assert!(m.evolve(&[0.0; 3]).unwrap().distance(&psi0) < 1e-14);
        }
    }

    #[test]
    fn empty_basis_is_an_error() {
        let mut b = basis(&["X"]);
        b.elements.clear();
        b.depth_tags.clear();
        assert!(matches!(
            truncated_circuit(&b, Parameterization::Product, StateVector::zero_state(1), None),
            Err(Error::EmptyBasis)
        ));
    }

    #[test]
    fn models_keep_parameter_budget() {
        let full = full_hea(3, 2).unwrap();
        let lie = lie_trunc_model(&full, &LieTruncOptions::default()).unwrap();
        assert_eq!(lie.circuit.n_params(), full.n_params());
        assert!(lie.report.span_preserved);
        let rnd = random_trunc_model(&full, &RandomTruncOptions::default()).unwrap();
        assert_eq!(rnd.circuit.n_params(), full.n_params());
        assert_eq!(rnd.basis.dim(), 2);
        assert!(!rnd.report.span_preserved);
    }
}
