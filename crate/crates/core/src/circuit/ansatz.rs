use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CircuitSpec, FixedGate, Generator, Slot};
use crate::algebra::{DenseOperator, Pauli, PauliSum, StateVector, C64};
use crate::{lie, Error, Result};

/// Ansatz families understood by [`build_ansatz`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    FullHea,
    LieTrunc,
    RandomTrunc,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::FullHea => "full_hea",
            Family::LieTrunc => "lie_trunc",
            Family::RandomTrunc => "random_trunc",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_hea" | "full" => Ok(Family::FullHea),
            "lie_trunc" => Ok(Family::LieTrunc),
            "random_trunc" => Ok(Family::RandomTrunc),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

/// Polynomial depth budget `L <= c · n^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthPolicy {
    pub c: f64,
    pub p: f64,
}

impl Default for DepthPolicy {
    fn default() -> Self {
        Self { c: 8.0, p: 2.0 }
    }
}

impl DepthPolicy {
    pub fn limit(&self, n_qubits: usize) -> f64 {
        self.c * (n_qubits as f64).powf(self.p)
    }

    pub fn check(&self, circuit: &CircuitSpec) -> Result<()> {
        let limit = self.limit(circuit.n_qubits());
        if circuit.n_params() as f64 > limit {
            return Err(Error::DepthPolicy {
                params: circuit.n_params(),
                limit,
            });
        }
        Ok(())
    }
}

/// Diagonal of the CZ entangler: a ring for `n >= 3`, a single pair for `n = 2`.
pub fn cz_ring_diagonal(n: usize) -> Vec<C64> {
    let edges: Vec<(usize, usize)> = match n {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        _ => (0..n).map(|q| (q, (q + 1) % n)).collect(),
    };
    (0..1usize << n)
        .map(|j| {
            let bit = |q: usize| (j >> (n - 1 - q)) & 1 == 1;
            let flips = edges.iter().filter(|(a, b)| bit(*a) && bit(*b)).count();
            C64::new(if flips % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        })
        .collect()
}

/// Hardware-efficient ansatz: per layer an R_Y slot on every qubit, an R_Z slot
/// on every qubit, then the CZ entangler.
pub fn full_hea(n: usize, depth: usize) -> Result<CircuitSpec> {
    if n == 0 || depth == 0 {
        return Err(Error::InvalidAnsatz { n_qubits: n, depth });
    }
    let cz = if n >= 2 {
        Some(FixedGate::diagonal(cz_ring_diagonal(n))?)
    } else {
        None
    };
    let mut slots = Vec::with_capacity(depth * (2 * n + 1));
    for _ in 0..depth {
        for p in [Pauli::Y, Pauli::Z] {
            for q in 0..n {
                slots.push(Slot::Param(Generator::from_pauli_sum(PauliSum::single(n, q, p, 1.0))?));
            }
        }
        if let Some(cz) = &cz {
            slots.push(Slot::Fixed(cz.clone()));
        }
    }
    CircuitSpec::with_family(n, slots, StateVector::zero_state(n), Family::FullHea.as_str(), depth)
}

/// Builds an ansatz; truncated families start from `full_hea` and use the
/// default truncation settings.
pub fn build_ansatz(family: &str, n: usize, depth: usize) -> Result<CircuitSpec> {
    let full = full_hea(n, depth)?;
    match family.parse::<Family>()? {
        Family::FullHea => Ok(full),
        Family::LieTrunc => Ok(lie::lie_trunc_model(&full, &lie::LieTruncOptions::default())?
            .circuit
            .with_family_name(Family::LieTrunc.as_str(), depth)),
        Family::RandomTrunc => Ok(lie::random_trunc_model(&full, &lie::RandomTruncOptions::default())?
            .circuit
            .with_family_name(Family::RandomTrunc.as_str(), depth)),
    }
}

/// Generators with every fixed gate pushed to the end:
/// `U(θ) = F_total · Π_k exp(-i θ_k H'_k)` with `H'_k = F_<k^dag H_k F_<k`.
#[derive(Clone, Debug)]
pub struct EffectiveGenerators {
    pub generators: Vec<PauliSum>,
    /// Product of all fixed gates, `None` when the circuit has none.
    pub trailing: Option<DenseOperator>,
}

pub fn effective_generators(circuit: &CircuitSpec) -> Result<EffectiveGenerators> {
    let mut frame: Option<DenseOperator> = None;
    let mut generators = Vec::with_capacity(circuit.n_params());
    for slot in circuit.slots() {
        match slot {
            Slot::Fixed(f) => {
                frame = Some(match frame {
                    None => f.op().clone(),
                    Some(fr) => f.op().mul(&fr)?,
                });
            }
            Slot::Param(g) => match &frame {
                None => generators.push(g.to_pauli_sum()),
                Some(fr) => {
                    let conj = fr.dagger().mul(&g.dense())?.mul(fr)?;
                    let scale = conj.max_abs().max(1.0);
                    generators.push(PauliSum::from_dense(&conj, 1e-13 * scale)?);
                }
            },
        }
    }
    Ok(EffectiveGenerators {
        generators,
        trailing: frame,
    })
}

/// Equivalent circuit with all parameterized slots first and one trailing fixed gate.
pub fn canonical_product_form(circuit: &CircuitSpec) -> Result<CircuitSpec> {
    let eff = effective_generators(circuit)?;
    let mut slots = eff
        .generators
        .into_iter()
        .map(|g| Generator::from_pauli_sum(g).map(Slot::Param))
        .collect::<Result<Vec<_>>>()?;
    if let Some(f) = eff.trailing {
        slots.push(Slot::Fixed(FixedGate::new(f)?));
    }
    CircuitSpec::with_family(
        circuit.n_qubits(),
        slots,
        circuit.initial_state().clone(),
        circuit.family(),
        circuit.depth(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::gram_schmidt_pauli;
    use crate::circuit::evolve;

    #[test]
    fn hea_sizes() {
        let c = full_hea(2, 1).unwrap();
        assert_eq!(c.n_params(), 4);
        let labels: Vec<String> = c.generators().map(|g| g.pauli_sum().unwrap().to_text()).collect();
        assert_eq!(labels, ["1.0*YI", "1.0*IY", "1.0*ZI", "1.0*IZ"]);
        assert_eq!(cz_ring_diagonal(2).iter().filter(|z| z.re < 0.0).count(), 1);
        assert_eq!(full_hea(6, 2).unwrap().n_params(), 24);
        assert!(full_hea(0, 1).is_err());
        assert!(matches!(build_ansatz("qaoa", 2, 1), Err(Error::UnknownFamily(_))));
    }

    #[test]
    fn hea_span_dimension_n3() {
        let c = full_hea(3, 1).unwrap();
        let gens: Vec<PauliSum> = c.generators().map(|g| g.to_pauli_sum()).collect();
        let gs = gram_schmidt_pauli(&gens, 1e-10).unwrap();
        assert_eq!(gs.basis.len(), 6);
    }

    #[test]
    fn canonical_form_reproduces_states() {
        let c = full_hea(3, 2).unwrap();
        let p = canonical_product_form(&c).unwrap();
        let theta: Vec<f64> = (0..c.n_params()).map(|k| 0.37 * k as f64 - 1.1).collect();
        let a = evolve(&c, &theta).unwrap();
        let b = evolve(&p, &theta).unwrap();
        assert!(a.distance(&b) < 1e-12);
    }

    #[test]
    fn cz_conjugation_dresses_y() {
        // second-layer Y on qubit 1 of a 3-ring picks up Z on both neighbours
        let eff = effective_generators(&full_hea(3, 2).unwrap()).unwrap();
        assert_eq!(eff.generators[7].to_text(), "1.0*ZYZ");
        assert!(eff.trailing.is_some());
    }

    #[test]
    fn depth_policy() {
        let c = full_hea(2, 4).unwrap();
        assert!(DepthPolicy::default().check(&c).is_ok());
        assert!(DepthPolicy { c: 1.0, p: 1.0 }.check(&c).is_err());
    }
}
