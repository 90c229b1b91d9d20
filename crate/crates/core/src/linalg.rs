//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// LU factorisation with partial pivoting, kept for repeated solves.
pub struct Factored {
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl Factored {
    pub fn new(m: CMatrix, what: &str) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Contract(format!("{what}: matrix is not square")));
        }
        let n = m.nrows();
        let lu = m.lu();
        // Pivot magnitudes reveal exact breakdown; conditioning is the caller's business.
        let u = lu.u();
        let mut max_piv = 0.0f64;
        let mut min_piv = f64::INFINITY;
        for i in 0..n {
            let p = u[(i, i)].norm();
            max_piv = max_piv.max(p);
            min_piv = min_piv.min(p);
        }
        if n > 0 && !(min_piv > max_piv * 1e-300) {
            return Err(Error::LinearAlgebra(format!(
                "{what}: LU breakdown (pivot ratio {:.3e})",
                min_piv / max_piv
            )));
        }
        Ok(Self { lu, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &CVector) -> Result<CVector> {
        self.lu
            .solve(rhs)
            .ok_or_else(|| Error::LinearAlgebra("singular factorisation".into()))
    }

    pub fn solve_matrix(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.lu
            .solve(rhs)
            .ok_or_else(|| Error::LinearAlgebra("singular factorisation".into()))
    }
}

/// Spectral condition number `σ_max / σ_min`.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Largest eigenvalue of the Hermitian pencil `(a, b)` with `b` Hermitian
/// positive definite.
pub fn max_generalized_eigenvalue(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("norm matrix is not positive definite".into()))?;
    let l = chol.l();
    // C = L⁻¹ A L⁻ᴴ
    let linv_a = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::LinearAlgebra("triangular solve failed".into()))?;
    let c_h = l
        .solve_lower_triangular(&linv_a.adjoint())
        .ok_or_else(|| Error::LinearAlgebra("triangular solve failed".into()))?;
    let c = c_h.adjoint();
    let herm = (&c + c.adjoint()).map(|z| z * 0.5);
    let eig = herm.symmetric_eigenvalues();
    Ok(eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

/// Relative Frobenius asymmetry `‖M - Mᵀ‖ / ‖M‖` (plain transpose, not adjoint).
pub fn asymmetry(m: &CMatrix) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}
