//! Dirichlet-to-Neumann and Dirichlet-to-impedance maps and discrete norms.
//!
//! Sign table (normals point out of the bounded domain Ω⁻):
//!
//! | side     | DtN(s)                | DtI(s)             |
//! |----------|-----------------------|--------------------|
//! | interior | `V⁻¹(s)(+½M + K(s))`  | `DtN⁻(s) - s·I`    |
//! | exterior | `V⁻¹(s)(-½M + K(s))`  | `DtN⁺(s) + s·I`    |
//!
//! so that `DtN⁻ - DtN⁺ = V⁻¹M`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use super::assembly::{Assembler, LayerOperators, QuadParams, Symmetry};
use super::space::BoundarySpace;
use crate::linalg::{condition_number, max_generalized_eigenvalue, CMatrix, CVector, Factored};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Interior,
    Exterior,
}

impl Side {
    /// Coefficient of `M` in `V·DtN = (c·M + K)`.
    pub fn identity_coefficient(self) -> f64 {
        match self {
            Side::Interior => 0.5,
            Side::Exterior => -0.5,
        }
    }

    /// Sign `σ` in `DtI = DtN + σ·s·I`.
    pub fn impedance_sign(self) -> f64 {
        match self {
            Side::Interior => -1.0,
            Side::Exterior => 1.0,
        }
    }
}

/// `V(s)`, `K(s)` and the factorisation of `V(s)` at one frequency.
pub struct DtnOperator {
    s: Complex64,
    mass: Vec<f64>,
    k: CMatrix,
    v: CMatrix,
    v_lu: Factored,
}

impl DtnOperator {
    pub fn new(space: &BoundarySpace, s: Complex64, symmetry: Symmetry) -> Result<Self> {
        Self::with_params(space, s, symmetry, QuadParams::default())
    }

    pub fn with_params(space: &BoundarySpace, s: Complex64, symmetry: Symmetry, params: QuadParams) -> Result<Self> {
        let ops = Assembler::new(space, s, params)?.assemble(symmetry)?;
        Self::from_layers(space, ops)
    }

    pub fn from_layers(space: &BoundarySpace, ops: LayerOperators) -> Result<Self> {
        let v_lu = Factored::new(ops.v.clone(), &format!("single layer at s = {}", ops.s)).map_err(|e| {
            Error::LinearAlgebra(format!("{e}; cond(V) ≈ {:.3e}", condition_number(&ops.v)))
        })?;
        Ok(Self {
            s: ops.s,
            mass: space.mass_diagonal(),
            k: ops.k,
            v: ops.v,
            v_lu,
        })
    }

    pub fn s(&self) -> Complex64 {
        self.s
    }

    pub fn single_layer(&self) -> &CMatrix {
        &self.v
    }

    pub fn double_layer(&self) -> &CMatrix {
        &self.k
    }

    /// Right-hand side `(c·M + K)·g` for every column of `g`.
    fn rhs(&self, g: &CMatrix, side: Side) -> CMatrix {
        let c = side.identity_coefficient();
        let mut r = &self.k * g;
        for (i, m) in self.mass.iter().enumerate() {
            for j in 0..g.ncols() {
                r[(i, j)] += g[(i, j)] * (c * m);
            }
        }
        r
    }

    /// `DtN(s)` applied to every column of `g`.
    pub fn dtn(&self, g: &CMatrix, side: Side) -> Result<CMatrix> {
        if g.nrows() != self.v.nrows() {
            return Err(Error::Contract(format!(
                "data has {} coefficients, space has {}",
                g.nrows(),
                self.v.nrows()
            )));
        }
        let rhs = self.rhs(g, side);
        let lambda = self.v_lu.solve_matrix(&rhs)?;
        let residual = (&self.v * &lambda - &rhs).norm();
        let scale = rhs.norm().max(f64::MIN_POSITIVE);
        if residual > 1e-10 * scale {
            return Err(Error::LinearAlgebra(format!(
                "single layer solve at s = {} has relative residual {:.3e}",
                self.s,
                residual / scale
            )));
        }
        Ok(lambda)
    }

    /// `DtI(s) = DtN(s) ± s·I` applied to every column of `g`.
    pub fn dti(&self, g: &CMatrix, side: Side) -> Result<CMatrix> {
        Ok(self.dtn(g, side)? + g * (self.s * side.impedance_sign()))
    }

    /// Matrix of `DtN(s)`, or of `DtI(s)` when `impedance` is set.
    pub fn matrix(&self, side: Side, impedance: bool) -> Result<CMatrix> {
        let eye = CMatrix::identity(self.v.nrows(), self.v.nrows());
        if impedance {
            self.dti(&eye, side)
        } else {
            self.dtn(&eye, side)
        }
    }
}

pub fn dtn_apply(op: &DtnOperator, g: &CVector, side: Side) -> Result<CVector> {
    let col = CMatrix::from_column_slice(g.len(), 1, g.as_slice());
    Ok(op.dtn(&col, side)?.column(0).into_owned())
}

pub fn dti_apply(op: &DtnOperator, g: &CVector, side: Side) -> Result<CVector> {
    let col = CMatrix::from_column_slice(g.len(), 1, g.as_slice());
    Ok(op.dti(&col, side)?.column(0).into_owned())
}

/// Frequency-keyed cache of assembled and factorised operators.
pub struct DtnCache<'a> {
    space: &'a BoundarySpace,
    symmetry: Symmetry,
    entries: Mutex<HashMap<(u64, u64), Arc<DtnOperator>>>,
}

impl<'a> DtnCache<'a> {
    pub fn new(space: &'a BoundarySpace, symmetry: Symmetry) -> Self {
        Self {
            space,
            symmetry,
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn get(&self, s: Complex64) -> Result<Arc<DtnOperator>> {
        let key = (s.re.to_bits(), s.im.to_bits());
        if let Some(op) = self.entries.lock().unwrap().get(&key) {
            return Ok(op.clone());
        }
        let op = Arc::new(DtnOperator::new(self.space, s, self.symmetry)?);
        self.entries.lock().unwrap().insert(key, op.clone());
        Ok(op)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `√(eᴴ V(1) e)` for every column of `e`.
pub fn energy_norms(v1: &CMatrix, e: &CMatrix) -> Result<Vec<f64>> {
    let ve = v1 * e;
    (0..e.ncols())
        .map(|j| {
            let q: Complex64 = e.column(j).iter().zip(ve.column(j).iter()).map(|(a, b)| a.conj() * b).sum();
            let tol = 1e-10 * q.norm();
            if q.im.abs() > tol.max(1e-300) && q.im.abs() > 1e-10 * q.re.abs() {
                return Err(Error::MatrixIntegrity(format!(
                    "energy form has imaginary part {:.3e} (real part {:.3e})",
                    q.im, q.re
                )));
            }
            if q.re < -tol {
                return Err(Error::MatrixIntegrity(format!("energy form is negative: {:.3e}", q.re)));
            }
            Ok(q.re.max(0.0).sqrt())
        })
        .collect()
}

pub fn energy_norm(v1: &CMatrix, e: &CVector) -> Result<f64> {
    let col = CMatrix::from_column_slice(e.len(), 1, e.as_slice());
    Ok(energy_norms(v1, &col)?[0])
}

/// `√λ_max(Bᴴ N_out B, N_in)`, the norm of `B` from `(Cⁿ, N_in)` to
/// `(Cⁿ, N_out)`.
pub fn operator_norm(b: &CMatrix, norm_out: &CMatrix, norm_in: &CMatrix) -> Result<f64> {
    let gram = b.adjoint() * norm_out * b;
    let lmax = max_generalized_eigenvalue(&gram, norm_in)?;
    Ok(lmax.max(0.0).sqrt())
}
