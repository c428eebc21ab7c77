//! Instance file schema: JSON with explicit decimal floats, bit-exact across
//! a write/read cycle. Classical instances carry a flat real cost array and
//! real marginals; quantum instances carry row-major `[re, im]` pair arrays.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use otbarriers::classical::{ClassicalInstance, MarginalFamily};
use otbarriers::herm::{HermitianMatrix, ProductOperator};
use otbarriers::quantum::{DensityFamily, QuantumInstance};
use otbarriers::tensor::DenseTensor;
use otbarriers::OtError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum NumericArray {
    Real(Vec<f64>),
    Complex(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct Metadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InstanceFile {
    /// "classical" or "quantum".
    pub kind: String,
    pub dims: Vec<usize>,
    /// Flat cost: reals (classical) or `[re, im]` pairs row-major (quantum).
    pub cost: NumericArray,
    /// Marginal vectors (classical) or Hermitian `[re, im]` arrays (quantum).
    pub marginals: Vec<NumericArray>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

#[derive(Debug)]
pub enum LoadedInstance {
    Classical(ClassicalInstance),
    Quantum(QuantumInstance),
}

fn complex_matrix(n: usize, pairs: &[[f64; 2]], what: &str) -> Result<HermitianMatrix, OtError> {
    if pairs.len() != n * n {
        return Err(OtError::DimensionMismatch(format!(
            "{what}: expected {} (re,im) pairs for a {n}x{n} matrix, got {}",
            n * n,
            pairs.len()
        )));
    }
    let entries: Vec<Complex64> = pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect();
    HermitianMatrix::new(n, entries)
}

impl InstanceFile {
    pub fn to_instance(&self) -> Result<LoadedInstance, OtError> {
        match self.kind.as_str() {
            "classical" => self.to_classical().map(LoadedInstance::Classical),
            "quantum" => self.to_quantum().map(LoadedInstance::Quantum),
            other => Err(OtError::InvalidInput(format!(
                "unknown instance kind {other:?}; expected \"classical\" or \"quantum\""
            ))),
        }
    }

    pub fn to_classical(&self) -> Result<ClassicalInstance, OtError> {
        let NumericArray::Real(cost) = &self.cost else {
            return Err(OtError::InvalidInput(
                "classical cost must be a flat real array".into(),
            ));
        };
        let tensor = DenseTensor::new(self.dims.clone(), cost.clone())?;
        let mut vectors = Vec::with_capacity(self.marginals.len());
        for (i, m) in self.marginals.iter().enumerate() {
            let NumericArray::Real(v) = m else {
                return Err(OtError::InvalidInput(format!(
                    "classical marginal {i} must be a real array"
                )));
            };
            if v.len() != self.dims[i] {
                return Err(OtError::DimensionMismatch(format!(
                    "marginal {i} has {} entries, dims say {}",
                    v.len(),
                    self.dims[i]
                )));
            }
            vectors.push(v.clone());
        }
        let family = MarginalFamily::new(vectors)?;
        ClassicalInstance::new(tensor, family)
    }

    pub fn to_quantum(&self) -> Result<QuantumInstance, OtError> {
        let NumericArray::Complex(cost) = &self.cost else {
            return Err(OtError::InvalidInput(
                "quantum cost must be a flat array of [re, im] pairs".into(),
            ));
        };
        let total: usize = self.dims.iter().product();
        let matrix = complex_matrix(total, cost, "cost")?;
        let cost_op = ProductOperator::new(self.dims.clone(), matrix)?;
        let mut densities = Vec::with_capacity(self.marginals.len());
        if self.marginals.len() != self.dims.len() {
            return Err(OtError::DimensionMismatch(format!(
                "{} marginals for {} modes",
                self.marginals.len(),
                self.dims.len()
            )));
        }
        for (i, m) in self.marginals.iter().enumerate() {
            let NumericArray::Complex(pairs) = m else {
                return Err(OtError::InvalidInput(format!(
                    "quantum marginal {i} must be an array of [re, im] pairs"
                )));
            };
            densities.push(complex_matrix(
                self.dims[i],
                pairs,
                &format!("density {i}"),
            )?);
        }
        let family = DensityFamily::new(densities)?;
        QuantumInstance::new(cost_op, family)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), OtError> {
        fs::write(path, self.to_json() + "\n")
            .map_err(|e| OtError::InvalidInput(format!("cannot write {}: {e}", path.display())))
    }
}

/// Parses and validates an instance file; marginal positivity and density
/// definiteness failures are reported with precise messages.
pub fn load_instance(path: &Path) -> Result<LoadedInstance, OtError> {
    let file = load_instance_file(path)?;
    file.to_instance()
}

pub fn load_instance_file(path: &Path) -> Result<InstanceFile, OtError> {
    let data = fs::read_to_string(path)
        .map_err(|e| OtError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&data)
        .map_err(|e| OtError::InvalidInput(format!("cannot parse {}: {e}", path.display())))
}

/// Rebuilds the on-disk representation from a parsed instance; used by the
/// round-trip checks.
pub fn classical_to_file(inst: &ClassicalInstance, metadata: Option<Metadata>) -> InstanceFile {
    InstanceFile {
        kind: "classical".into(),
        dims: inst.dims().to_vec(),
        cost: NumericArray::Real(inst.cost().entries().to_vec()),
        marginals: inst
            .marginals()
            .vectors()
            .iter()
            .map(|v| NumericArray::Real(v.clone()))
            .collect(),
        metadata,
    }
}

pub fn quantum_to_file(inst: &QuantumInstance, metadata: Option<Metadata>) -> InstanceFile {
    let pairs = |h: &HermitianMatrix| -> Vec<[f64; 2]> {
        h.entries().iter().map(|z| [z.re, z.im]).collect()
    };
    InstanceFile {
        kind: "quantum".into(),
        dims: inst.dims().to_vec(),
        cost: NumericArray::Complex(pairs(inst.cost().matrix())),
        marginals: inst
            .densities()
            .densities()
            .iter()
            .map(|r| NumericArray::Complex(pairs(r)))
            .collect(),
        metadata,
    }
}
