//! Implicit Runge-Kutta tableaux and the algebraic objects that drive
//! convolution quadrature: the stability function `R(z)` and the generating
//! matrix `Δ(ζ) = (A + ζ/(1-ζ) 𝟙bᵀ)⁻¹`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::linalg::{condition_number, CMatrix};
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

/// Tolerance for the structural identities (row sums, stiff accuracy, `c_m = 1`).
pub const STRUCTURE_TOL: f64 = 1e-13;
/// Tolerance for the simplifying order conditions `B`, `C`, `D`.
pub const ORDER_TOL: f64 = 1e-12;
/// Default limit on `cond₂(P)` for the eigenvector basis of `Δ(ζ)`.
pub const DEFAULT_EIGEN_CONDITION_LIMIT: f64 = 1e8;

/// Coefficients `(A, b, c)` of an `m`-stage Runge-Kutta method together with
/// its claimed classical order `p` and stage order `q`.
///
/// The claimed orders are metadata; [`ButcherTableau::validate`] re-derives
/// them from the coefficients.
#[derive(Debug, Clone)]
pub struct ButcherTableau {
    name: String,
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    order: usize,
    stage_order: usize,
    a_inv: Option<DMatrix<f64>>,
}

impl ButcherTableau {
    pub fn new(
        name: impl Into<String>,
        a: DMatrix<f64>,
        b: DVector<f64>,
        c: DVector<f64>,
        order: usize,
        stage_order: usize,
    ) -> Result<Self> {
        let m = b.len();
        if m == 0 || a.nrows() != m || a.ncols() != m || c.len() != m {
            return Err(Error::InvalidTableau(format!(
                "inconsistent shapes: A {}x{}, b {}, c {}",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len()
            )));
        }
        let a_inv = a.clone().try_inverse().filter(|inv| inv.iter().all(|x| x.is_finite()));
        Ok(Self {
            name: name.into(),
            a,
            b,
            c,
            order,
            stage_order,
            a_inv,
        })
    }

    /// Look up a tableau by its string id, e.g. `"radau-iia-3"`.
    pub fn from_id(id: &str) -> Result<Self> {
        let unknown = || Error::UnknownTableau(id.to_string());
        let (family, stages) = id.rsplit_once('-').ok_or_else(unknown)?;
        let m: usize = stages.parse().map_err(|_| unknown())?;
        match family {
            "radau-iia" => radau_iia(m),
            "lobatto-iiic" => lobatto_iiic(m),
            _ => Err(unknown()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn classical_order(&self) -> usize {
        self.order
    }

    pub fn stage_order(&self) -> usize {
        self.stage_order
    }

    pub fn a_inverse(&self) -> Result<&DMatrix<f64>> {
        self.a_inv
            .as_ref()
            .ok_or_else(|| Error::Singular(format!("coefficient matrix of {}", self.name)))
    }

    /// `max_j |b_j - A_{m,j}|`.
    fn stiff_accuracy_defect(&self) -> f64 {
        let m = self.stages();
        (0..m)
            .map(|j| (self.b[j] - self.a[(m - 1, j)]).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_stiffly_accurate(&self) -> bool {
        self.stiff_accuracy_defect() <= STRUCTURE_TOL
    }

    /// `R(z) = 1 + z bᵀ (I - zA)⁻¹ 𝟙`.
    pub fn stability_function(&self, z: Complex64) -> Result<Complex64> {
        let m = self.stages();
        let lhs = CMatrix::from_fn(m, m, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            Complex64::new(id, 0.0) - z * self.a[(i, j)]
        });
        let ones = DVector::from_element(m, Complex64::new(1.0, 0.0));
        let lu = lhs.lu();
        let x = lu
            .solve(&ones)
            .filter(|x| x.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
            .ok_or_else(|| Error::Singular(format!("I - zA at z = {z}")))?;
        let btx: Complex64 = (0..m).map(|i| x[i] * self.b[i]).sum();
        Ok(Complex64::new(1.0, 0.0) + z * btx)
    }

    /// The CQ generating matrix `Δ(ζ)` for `|ζ| < 1`.
    ///
    /// Stiffly accurate methods use `Δ(ζ) = A⁻¹(I - ζ 𝟙 e_mᵀ)`, which only
    /// touches the last column of `A⁻¹`; other methods fall back to inverting
    /// `A + ζ/(1-ζ) 𝟙bᵀ`.
    pub fn delta(&self, zeta: Complex64) -> Result<CMatrix> {
        if !(zeta.norm() < 1.0) {
            return Err(Error::Domain(format!("Δ(ζ) needs |ζ| < 1, got ζ = {zeta}")));
        }
        let m = self.stages();
        if self.is_stiffly_accurate() {
            let ainv = self.a_inverse()?;
            let mut d = CMatrix::from_fn(m, m, |i, j| Complex64::new(ainv[(i, j)], 0.0));
            for i in 0..m {
                let row_sum: f64 = (0..m).map(|j| ainv[(i, j)]).sum();
                d[(i, m - 1)] -= zeta * row_sum;
            }
            Ok(d)
        } else {
            delta_by_inversion(self, zeta)
        }
    }

    /// Diagonalise `Δ(ζ) = P diag(λ) P⁻¹`.
    ///
    /// For stiffly accurate methods the eigenvector belonging to `λ` is
    /// `(I - λA)⁻¹ 𝟙`, so only the eigenvalues need an iterative solver.
    pub fn delta_eigen(&self, zeta: Complex64, condition_limit: f64) -> Result<DeltaEigen> {
        let delta = self.delta(zeta)?;
        let m = self.stages();
        if !self.is_stiffly_accurate() {
            return Err(Error::InvalidTableau(format!(
                "{} is not stiffly accurate; Δ(ζ) eigenvectors are only available in closed form for stiffly accurate methods",
                self.name
            )));
        }
        let eigenvalues: Vec<Complex64> = if m == 1 {
            vec![delta[(0, 0)]]
        } else {
            let schur = nalgebra::Schur::try_new(delta.clone(), 1e-15 * delta.norm(), 10_000)
                .ok_or_else(|| Error::LinearAlgebra(format!("Schur iteration for Δ({zeta})")))?;
            let (_, t) = schur.unpack();
            (0..m).map(|i| t[(i, i)]).collect()
        };
        let mut vectors = CMatrix::zeros(m, m);
        for (col, &lambda) in eigenvalues.iter().enumerate() {
            let lhs = CMatrix::from_fn(m, m, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                Complex64::new(id, 0.0) - lambda * self.a[(i, j)]
            });
            let v = lhs
                .lu()
                .solve(&DVector::from_element(m, Complex64::new(1.0, 0.0)))
                .ok_or_else(|| Error::Singular(format!("I - λA at λ = {lambda}")))?;
            // fix the phase so the last component is real positive
            let v = &v / v[m - 1];
            let norm = v.norm();
            for i in 0..m {
                vectors[(i, col)] = v[i] / norm;
            }
        }
        let condition = if m == 1 { 1.0 } else { condition_number(&vectors) };
        if !(condition <= condition_limit) {
            return Err(Error::IllConditioned {
                zeta,
                condition,
                limit: condition_limit,
            });
        }
        let inverse = vectors
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular(format!("eigenvector basis at ζ = {zeta}")))?;
        Ok(DeltaEigen {
            values: eigenvalues,
            vectors,
            inverse,
            condition,
        })
    }

    /// Check the coefficients against the assumptions CQ relies on.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let m = self.stages();

        let cond = condition_number(&crate::linalg::to_complex(&self.a));
        checks.push(Check::new(
            "A invertible",
            cond.is_finite() && cond < 1e12 && self.a_inv.is_some(),
            format!("cond2(A) = {cond:.3e}"),
        ));

        let row_defect = (0..m)
            .map(|i| ((0..m).map(|j| self.a[(i, j)]).sum::<f64>() - self.c[i]).abs())
            .fold(0.0, f64::max);
        checks.push(Check::new(
            "row sums equal c",
            row_defect <= STRUCTURE_TOL,
            format!("max defect {row_defect:.2e}"),
        ));

        let sa_defect = self.stiff_accuracy_defect();
        let bt_ainv = self.a_inv.as_ref().map(|ainv| {
            (0..m)
                .map(|j| {
                    let v: f64 = (0..m).map(|i| self.b[i] * ainv[(i, j)]).sum();
                    let target = if j + 1 == m { 1.0 } else { 0.0 };
                    (v - target).abs()
                })
                .fold(0.0, f64::max)
        });
        checks.push(Check::new(
            "stiffly accurate",
            sa_defect <= STRUCTURE_TOL && bt_ainv.is_some_and(|d| d <= 1e-12),
            match bt_ainv {
                Some(d) => format!("max|b - A[m,:]| = {sa_defect:.2e}, max|bᵀA⁻¹ - e_m| = {d:.2e}"),
                None => format!("max|b - A[m,:]| = {sa_defect:.2e}, A singular"),
            },
        ));

        let cm_defect = (self.c[m - 1] - 1.0).abs();
        checks.push(Check::new(
            "c_m = 1",
            cm_defect <= STRUCTURE_TOL,
            format!("c_m = {:.16}", self.c[m - 1]),
        ));

        let b_order = self.quadrature_order();
        let c_order = self.simplifying_c_order();
        let d_order = self.simplifying_d_order();
        let derived = if b_order >= 1 {
            b_order.min(c_order + d_order + 1).min(2 * c_order + 2)
        } else {
            0
        };
        checks.push(Check::new(
            "classical order",
            derived >= self.order && self.order >= 1,
            format!(
                "claimed p = {}, B({b_order}) C({c_order}) D({d_order}) give p >= {derived}",
                self.order
            ),
        ));
        checks.push(Check::new(
            "stage order",
            c_order >= self.stage_order && self.stage_order <= self.order,
            format!("claimed q = {}, C({c_order}) holds", self.stage_order),
        ));

        let (contractive, worst) = self.sampled_imaginary_axis_contractivity();
        checks.push(Check::new(
            "|R(it)| < 1 on the imaginary axis",
            contractive,
            format!("max sampled |R(it)| = {worst:.15}"),
        ));

        ValidationReport {
            tableau: self.name.clone(),
            order: self.order,
            stage_order: self.stage_order,
            checks,
        }
    }

    /// Largest `k` with `Σ b_i c_i^{j-1} = 1/j` for all `j ≤ k`.
    fn quadrature_order(&self) -> usize {
        let m = self.stages();
        let mut k = 0;
        while k < 2 * m + 2 {
            let j = k + 1;
            let lhs: f64 = (0..m).map(|i| self.b[i] * self.c[i].powi(j as i32 - 1)).sum();
            if (lhs - 1.0 / j as f64).abs() > ORDER_TOL {
                break;
            }
            k = j;
        }
        k
    }

    /// Largest `k` with `Σ_j a_ij c_j^{l-1} = c_i^l / l` for all `l ≤ k`.
    fn simplifying_c_order(&self) -> usize {
        let m = self.stages();
        let mut k = 0;
        while k < 2 * m + 2 {
            let l = k + 1;
            let defect = (0..m)
                .map(|i| {
                    let lhs: f64 = (0..m)
                        .map(|j| self.a[(i, j)] * self.c[j].powi(l as i32 - 1))
                        .sum();
                    (lhs - self.c[i].powi(l as i32) / l as f64).abs()
                })
                .fold(0.0, f64::max);
            if defect > ORDER_TOL {
                break;
            }
            k = l;
        }
        k
    }

    /// Largest `k` with `Σ_i b_i c_i^{l-1} a_ij = b_j (1 - c_j^l) / l` for all `l ≤ k`.
    fn simplifying_d_order(&self) -> usize {
        let m = self.stages();
        let mut k = 0;
        while k < 2 * m + 2 {
            let l = k + 1;
            let defect = (0..m)
                .map(|j| {
                    let lhs: f64 = (0..m)
                        .map(|i| self.b[i] * self.c[i].powi(l as i32 - 1) * self.a[(i, j)])
                        .sum();
                    (lhs - self.b[j] * (1.0 - self.c[j].powi(l as i32)) / l as f64).abs()
                })
                .fold(0.0, f64::max);
            if defect > ORDER_TOL {
                break;
            }
            k = l;
        }
        k
    }

    /// Samples `1 - |R(it)|²` on a log grid of `t ∈ [1e-3, 1e6]`.
    ///
    /// `R = P/Q` with `Q(z) = det(I - zA)` and `P(z) = det(I - z(A - 𝟙bᵀ))`,
    /// so `1 - |R(it)|² = E(t)/|Q(it)|²` with the even polynomial
    /// `E(t) = |Q(it)|² - |P(it)|²`. Evaluating `E` from its coefficients
    /// resolves the tiny deviation from 1 near `t = 0` that direct evaluation of
    /// `|R|` rounds away. Coefficients below `1e-12` of the largest one are
    /// order-condition cancellations and are dropped.
    fn sampled_imaginary_axis_contractivity(&self) -> (bool, f64) {
        let m = self.stages();
        let q = det_i_minus_z(&self.a);
        let ones_bt = DMatrix::from_fn(m, m, |_, j| self.b[j]);
        let p = det_i_minus_z(&(&self.a - ones_bt));
        let eq = abs2_on_imaginary_axis(&q);
        let ep = abs2_on_imaginary_axis(&p);
        let len = eq.len().max(ep.len());
        let mut e: Vec<f64> = (0..len)
            .map(|k| eq.get(k).copied().unwrap_or(0.0) - ep.get(k).copied().unwrap_or(0.0))
            .collect();
        let scale = eq.iter().chain(&ep).fold(0.0f64, |a, &x| a.max(x.abs()));
        for coef in e.iter_mut() {
            if coef.abs() <= 1e-12 * scale {
                *coef = 0.0;
            }
        }
        let mut ok = true;
        let mut worst = 0.0f64;
        let samples = 400;
        for i in 0..samples {
            let t = 10f64.powf(-3.0 + 9.0 * i as f64 / (samples - 1) as f64);
            let e_t: f64 = e.iter().rev().fold(0.0, |acc, &coef| acc * t + coef);
            let q_t: f64 = eq.iter().rev().fold(0.0, |acc, &coef| acc * t + coef);
            if !(e_t > 0.0 && q_t > 0.0) {
                ok = false;
            }
            if let Ok(r) = self.stability_function(Complex64::new(0.0, t)) {
                worst = worst.max(r.norm());
            } else {
                ok = false;
            }
        }
        (ok, worst)
    }
}

impl fmt::Display for ButcherTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} (m = {}, p = {}, q = {})",
            self.name,
            self.stages(),
            self.order,
            self.stage_order
        )?;
        for i in 0..self.stages() {
            write!(f, "{:>22.16} |", self.c[i])?;
            for j in 0..self.stages() {
                write!(f, " {:>22.16}", self.a[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "{:>22} |", "")?;
        for j in 0..self.stages() {
            write!(f, " {:>22.16}", self.b[j])?;
        }
        Ok(())
    }
}

fn delta_by_inversion(t: &ButcherTableau, zeta: Complex64) -> Result<CMatrix> {
    let m = t.stages();
    let f = zeta / (Complex64::new(1.0, 0.0) - zeta);
    let mat = CMatrix::from_fn(m, m, |i, j| Complex64::new(t.a[(i, j)], 0.0) + f * t.b[j]);
    mat.try_inverse()
        .ok_or_else(|| Error::Singular(format!("A + ζ/(1-ζ)𝟙bᵀ at ζ = {zeta}")))
}

/// Direct inversion of `A + ζ/(1-ζ) 𝟙bᵀ`, kept public as the independent
/// route for checking [`ButcherTableau::delta`].
pub fn delta_direct(t: &ButcherTableau, zeta: Complex64) -> Result<CMatrix> {
    if !(zeta.norm() < 1.0) {
        return Err(Error::Domain(format!("Δ(ζ) needs |ζ| < 1, got ζ = {zeta}")));
    }
    delta_by_inversion(t, zeta)
}

/// Coefficients (ascending powers of `z`) of `det(I - zB)`, from the
/// Faddeev-LeVerrier recursion for the characteristic polynomial of `B`.
fn det_i_minus_z(b: &DMatrix<f64>) -> Vec<f64> {
    let n = b.nrows();
    // charpoly(λ) = Σ c_k λ^k with c_n = 1
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut mk = DMatrix::<f64>::zeros(n, n);
    let id = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        mk = b * &mk + &id * c[n - k + 1];
        let bm = b * &mk;
        c[n - k] = -bm.trace() / k as f64;
    }
    // det(I - zB) = z^n charpoly(1/z) = Σ_k c_k z^{n-k}
    (0..=n).map(|j| c[n - j]).collect()
}

/// Coefficients in `t` of `|Q(it)|²` for a real polynomial `Q`.
fn abs2_on_imaginary_axis(q: &[f64]) -> Vec<f64> {
    let n = q.len();
    let mut out = vec![0.0; 2 * n.max(1) - 1];
    // Q(it) = Σ q_k i^k t^k; |Q|² = Σ_{j,k} q_j q_k i^j (-i)^k t^{j+k}
    for j in 0..n {
        for k in 0..n {
            let phase = i_power(j as i64 - k as i64);
            out[j + k] += q[j] * q[k] * phase;
        }
    }
    out
}

/// Real part of `i^e` (the imaginary parts cancel in `|Q(it)|²`).
fn i_power(e: i64) -> f64 {
    match e.rem_euclid(4) {
        0 => 1.0,
        2 => -1.0,
        _ => 0.0,
    }
}

/// Eigendecomposition of `Δ(ζ)`.
#[derive(Debug, Clone)]
pub struct DeltaEigen {
    pub values: Vec<Complex64>,
    /// Columns are unit-norm eigenvectors.
    pub vectors: CMatrix,
    pub inverse: CMatrix,
    /// `cond₂` of `vectors`.
    pub condition: f64,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub tableau: String,
    pub order: usize,
    pub stage_order: usize,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "tableau {}: p = {}, q = {}",
            self.tableau, self.order, self.stage_order
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "  [{}] {:<36} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        write!(
            f,
            "overall: {}",
            if self.all_passed() { "PASS" } else { "FAIL" }
        )
    }
}

/// The `m`-stage Radau IIA method (order `2m - 1`, stage order `m`).
pub fn radau_iia(m: usize) -> Result<ButcherTableau> {
    let name = format!("radau-iia-{m}");
    match m {
        1 => ButcherTableau::new(
            name,
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 1.0),
            1,
            1,
        ),
        2 => {
            let a = DMatrix::from_row_slice(2, 2, &[5.0 / 12.0, -1.0 / 12.0, 3.0 / 4.0, 1.0 / 4.0]);
            let b = DVector::from_row_slice(&[3.0 / 4.0, 1.0 / 4.0]);
            let c = DVector::from_row_slice(&[1.0 / 3.0, 1.0]);
            ButcherTableau::new(name, a, b, c, 3, 2)
        }
        3 => {
            let s6 = 6f64.sqrt();
            let a = DMatrix::from_row_slice(
                3,
                3,
                &[
                    (88.0 - 7.0 * s6) / 360.0,
                    (296.0 - 169.0 * s6) / 1800.0,
                    (-2.0 + 3.0 * s6) / 225.0,
                    (296.0 + 169.0 * s6) / 1800.0,
                    (88.0 + 7.0 * s6) / 360.0,
                    (-2.0 - 3.0 * s6) / 225.0,
                    (16.0 - s6) / 36.0,
                    (16.0 + s6) / 36.0,
                    1.0 / 9.0,
                ],
            );
            let b = DVector::from_row_slice(&[(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0]);
            let c = DVector::from_row_slice(&[(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0]);
            ButcherTableau::new(name, a, b, c, 5, 3)
        }
        5 => {
            let c = radau_nodes(m)?;
            let a = collocation_matrix(&c);
            let b = DVector::from_fn(m, |j, _| a[(m - 1, j)]);
            ButcherTableau::new(name, a, b, DVector::from_vec(c), 2 * m - 1, m)
        }
        _ => Err(Error::NotImplemented(format!(
            "Radau IIA with {m} stages (supported: 1, 2, 3, 5)"
        ))),
    }
}

/// The `m`-stage Lobatto IIIC method (order `2m - 2`, stage order `m - 1`).
pub fn lobatto_iiic(m: usize) -> Result<ButcherTableau> {
    let name = format!("lobatto-iiic-{m}");
    match m {
        2 => ButcherTableau::new(
            name,
            DMatrix::from_row_slice(2, 2, &[0.5, -0.5, 0.5, 0.5]),
            DVector::from_row_slice(&[0.5, 0.5]),
            DVector::from_row_slice(&[0.0, 1.0]),
            2,
            1,
        ),
        3 => ButcherTableau::new(
            name,
            DMatrix::from_row_slice(
                3,
                3,
                &[
                    1.0 / 6.0,
                    -1.0 / 3.0,
                    1.0 / 6.0,
                    1.0 / 6.0,
                    5.0 / 12.0,
                    -1.0 / 12.0,
                    1.0 / 6.0,
                    2.0 / 3.0,
                    1.0 / 6.0,
                ],
            ),
            DVector::from_row_slice(&[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]),
            DVector::from_row_slice(&[0.0, 0.5, 1.0]),
            4,
            2,
        ),
        _ => Err(Error::NotImplemented(format!(
            "Lobatto IIIC with {m} stages (supported: 2, 3)"
        ))),
    }
}

/// Monomial coefficients (ascending) of the shifted Legendre polynomial
/// `P_n(2x - 1)`.
fn shifted_legendre_coefficients(n: usize) -> Vec<f64> {
    // P_n(2x-1) = (-1)^n Σ_k C(n,k) C(n+k,k) (-x)^k
    let binom = |n: usize, k: usize| -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    (0..=n)
        .map(|k| {
            let sign = if (n + k) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binom(n, k) * binom(n + k, k)
        })
        .collect()
}

/// Right Radau nodes on `[0, 1]`: zeros of `P_m(2x-1) - P_{m-1}(2x-1)`,
/// found as companion-matrix eigenvalues and polished by Newton.
fn radau_nodes(m: usize) -> Result<Vec<f64>> {
    let pm = shifted_legendre_coefficients(m);
    let pm1 = shifted_legendre_coefficients(m - 1);
    let poly: Vec<f64> = (0..=m)
        .map(|k| pm[k] - pm1.get(k).copied().unwrap_or(0.0))
        .collect();
    let lead = poly[m];
    let companion = DMatrix::from_fn(m, m, |i, j| {
        if i == m - 1 {
            -poly[j] / lead
        } else if j == i + 1 {
            1.0
        } else {
            0.0
        }
    });
    let roots = companion.complex_eigenvalues();
    let mut nodes: Vec<f64> = roots.iter().map(|z| z.re).collect();
    if roots.iter().any(|z| z.im.abs() > 1e-8) {
        return Err(Error::InvalidTableau("Radau polynomial has complex roots".into()));
    }
    let eval = |x: f64| -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &coef in poly.iter().rev() {
            dp = dp * x + p;
            p = p * x + coef;
        }
        (p, dp)
    };
    for x in nodes.iter_mut() {
        for _ in 0..50 {
            let (p, dp) = eval(*x);
            let dx = p / dp;
            *x -= dx;
            if dx.abs() < 1e-17 {
                break;
            }
        }
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes[m - 1] = 1.0;
    Ok(nodes)
}

/// Collocation coefficients `A_ij = ∫_0^{c_i} ℓ_j(τ) dτ` with the Lagrange
/// basis `ℓ_j` on the nodes `c`, integrated by Gauss-Legendre (exact for the
/// polynomial degree involved).
fn collocation_matrix(c: &[f64]) -> DMatrix<f64> {
    let m = c.len();
    let rule = gauss_legendre(m);
    let lagrange = |j: usize, x: f64| -> f64 {
        (0..m)
            .filter(|&l| l != j)
            .map(|l| (x - c[l]) / (c[j] - c[l]))
            .product()
    };
    DMatrix::from_fn(m, m, |i, j| {
        c[i] * rule.integrate(|x| lagrange(j, c[i] * x))
    })
}
