//! Frequency-domain check of the DtN map against a point source outside the
//! domain.

use num_complex::Complex64;

use super::assembly::{assemble_single_layer, QuadParams, Symmetry};
use super::mesh::{dot, norm, sub, Point};
use super::operators::{dtn_apply, energy_norm, DtnOperator, Side};
use super::space::BoundarySpace;
use crate::kernels::{bessel_k01, fundamental_solution};
use crate::linalg::CMatrix;
use crate::{Error, Result};

/// Errors of `DtN⁻(s)` applied to the trace of `Φ(· - x₀; s)`.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedError {
    pub dofs: usize,
    pub absolute: f64,
    pub relative: f64,
}

/// Interior DtN of the trace of `x ↦ Φ(x - x₀; s)` compared with the
/// projected normal derivative, in the `V(1)` energy norm. `v1` is reused
/// when given.
pub fn manufactured_error(
    space: &BoundarySpace,
    s: Complex64,
    source: Point,
    params: QuadParams,
    v1: Option<&CMatrix>,
) -> Result<ManufacturedError> {
    let inside = space.panels().iter().any(|p| norm(sub(p.start, source)) < 1e-12);
    if inside {
        return Err(Error::Domain(format!("source point {source:?} lies on the boundary")));
    }
    let op = DtnOperator::with_params(space, s, Symmetry::Mirror, params)?;
    let owned;
    let v1 = match v1 {
        Some(v) => v,
        None => {
            owned = assemble_single_layer(space, Complex64::new(1.0, 0.0))?.entries;
            &owned
        }
    };
    let trace = space.l2_project(|_, x| {
        fundamental_solution(&sub(x, source), s, 2).unwrap_or(Complex64::new(f64::NAN, 0.0))
    });
    let exact = space.l2_project(|p, x| {
        let d = sub(x, source);
        let r = norm(d);
        let k1 = bessel_k01(s * r).map(|k| k.k1).unwrap_or(Complex64::new(f64::NAN, 0.0));
        -s * k1 * (dot(d, p.normal) / (2.0 * std::f64::consts::PI * r))
    });
    if trace.iter().chain(exact.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Domain(format!("point source at {source:?} is not defined on the boundary")));
    }
    let lambda = dtn_apply(&op, &trace, Side::Interior)?;
    let absolute = energy_norm(v1, &(&lambda - &exact))?;
    let reference = energy_norm(v1, &exact)?;
    Ok(ManufacturedError {
        dofs: space.dim(),
        absolute,
        relative: absolute / reference,
    })
}
