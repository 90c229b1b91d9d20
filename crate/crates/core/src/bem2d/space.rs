//! Discontinuous piecewise-polynomial trace spaces.
//!
//! On a panel of length `h` the basis is `φ_ℓ(u) = P_ℓ(2u/h - 1)`,
//! `ℓ = 0..=p`, with `P_ℓ` the Legendre polynomials. The basis is orthogonal,
//! `∫φ_ℓ² = h/(2ℓ+1)`, and the constant function has coefficient 1 on mode 0
//! and 0 elsewhere.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::mesh::{MeshSpec, Panel, Point, PolygonBoundary};
use crate::linalg::{CMatrix, CVector};
use crate::quadrature::{gauss_legendre, legendre_with_derivatives};
use crate::{Error, Result};

/// Gauss points per panel used by [`BoundarySpace::l2_project`].
pub const PROJECTION_ORDER: usize = 24;

#[derive(Debug, Clone)]
pub struct BoundarySpace {
    boundary: PolygonBoundary,
    degree: usize,
}

impl BoundarySpace {
    pub fn new(boundary: PolygonBoundary, degree: usize) -> Self {
        Self { boundary, degree }
    }

    pub fn boundary(&self) -> &PolygonBoundary {
        &self.boundary
    }

    pub fn panels(&self) -> &[Panel] {
        self.boundary.panels()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn local_dim(&self) -> usize {
        self.degree + 1
    }

    pub fn dim(&self) -> usize {
        self.panels().len() * self.local_dim()
    }

    /// Global index of mode `l` on panel `p`.
    pub fn dof(&self, p: usize, l: usize) -> usize {
        p * self.local_dim() + l
    }

    /// Basis values at arclength `u` on a panel of length `h`.
    pub fn basis(&self, h: f64, u: f64) -> Vec<f64> {
        legendre_with_derivatives(self.degree, 2.0 * u / h - 1.0).0
    }

    pub fn mass_diagonal(&self) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.dim());
        for p in self.panels() {
            for l in 0..self.local_dim() {
                d.push(p.length / (2 * l + 1) as f64);
            }
        }
        d
    }

    pub fn mass(&self) -> CMatrix {
        let d = self.mass_diagonal();
        CMatrix::from_diagonal(&CVector::from_iterator(d.len(), d.iter().map(|&x| Complex64::new(x, 0.0))))
    }

    /// Broken arclength stiffness `∫ φ_i' φ_j'`, block diagonal.
    pub fn stiffness(&self) -> CMatrix {
        let n = self.dim();
        let nl = self.local_dim();
        let rule = gauss_legendre(nl);
        // reference block on [-1, 1]: ∫ P_i' P_j' dξ
        let mut reference = vec![0.0; nl * nl];
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let (_, dp) = legendre_with_derivatives(self.degree, 2.0 * x - 1.0);
            for i in 0..nl {
                for j in 0..nl {
                    reference[i * nl + j] += 2.0 * w * dp[i] * dp[j];
                }
            }
        }
        let mut s = CMatrix::zeros(n, n);
        for (p, panel) in self.panels().iter().enumerate() {
            let scale = 2.0 / panel.length;
            for i in 0..nl {
                for j in 0..nl {
                    s[(self.dof(p, i), self.dof(p, j))] = Complex64::new(scale * reference[i * nl + j], 0.0);
                }
            }
        }
        s
    }

    /// Columns span the continuous functions in the space: one hat per
    /// panel junction (value 1 there, 0 at the other panel ends) followed by
    /// the bubbles `P_ℓ - P_{ℓ mod 2}`, `ℓ ≥ 2`, of every panel.
    pub fn continuous_embedding(&self) -> Result<CMatrix> {
        if self.degree == 0 {
            return Err(Error::Contract("piecewise constants have no continuous subspace".into()));
        }
        let np = self.panels().len();
        let nl = self.local_dim();
        let half = Complex64::new(0.5, 0.0);
        let mut e = CMatrix::zeros(self.dim(), np * (nl - 1));
        for p in 0..np {
            // junction between the end of p and the start of the next panel
            let q = self.boundary.next(p);
            e[(self.dof(p, 0), p)] = half;
            e[(self.dof(p, 1), p)] = half;
            e[(self.dof(q, 0), p)] = half;
            e[(self.dof(q, 1), p)] = -half;
        }
        let mut col = np;
        for p in 0..np {
            for l in 2..nl {
                e[(self.dof(p, l), col)] = Complex64::new(1.0, 0.0);
                e[(self.dof(p, l % 2), col)] = Complex64::new(-1.0, 0.0);
                col += 1;
            }
        }
        Ok(e)
    }

    /// `L²` projection of a complex function given on the boundary. The
    /// callback receives the panel so piecewise data such as normals are
    /// available.
    pub fn l2_project(&self, g: impl Fn(&Panel, Point) -> Complex64) -> CVector {
        let rule = gauss_legendre(PROJECTION_ORDER);
        let nl = self.local_dim();
        let mut out = CVector::zeros(self.dim());
        for (p, panel) in self.panels().iter().enumerate() {
            let h = panel.length;
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                let u = x * h;
                let val = g(panel, panel.at(u));
                let phi = self.basis(h, u);
                for l in 0..nl {
                    out[self.dof(p, l)] += val * (w * phi[l] * (2 * l + 1) as f64);
                }
            }
        }
        out
    }

    pub fn l2_project_real(&self, g: impl Fn(&Panel, Point) -> f64) -> CVector {
        self.l2_project(|p, x| Complex64::new(g(p, x), 0.0))
    }

    /// Value of a discrete function at arclength `u` on panel `p`.
    pub fn evaluate(&self, coeffs: &CVector, p: usize, u: f64) -> Complex64 {
        let phi = self.basis(self.panels()[p].length, u);
        (0..self.local_dim()).map(|l| coeffs[self.dof(p, l)] * phi[l]).sum()
    }

    /// `‖g - Πg‖_{L²}` for the projection `coeffs` of `g`, by quadrature.
    pub fn l2_error(&self, coeffs: &CVector, g: impl Fn(&Panel, Point) -> Complex64) -> f64 {
        let rule = gauss_legendre(PROJECTION_ORDER);
        let mut sum = 0.0;
        for (p, panel) in self.panels().iter().enumerate() {
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                let u = x * panel.length;
                let e = g(panel, panel.at(u)) - self.evaluate(coeffs, p, u);
                sum += w * panel.length * e.norm_sqr();
            }
        }
        sum.sqrt()
    }

    /// Text form: vertices, panel counts per edge, grading and degree.
    pub fn to_text(&self) -> String {
        let b = &self.boundary;
        let mut out = String::from("# rkcq boundary space\n");
        let _ = writeln!(out, "vertices {}", b.vertices().len());
        for v in b.vertices() {
            let _ = writeln!(out, "{:?} {:?}", v[0], v[1]);
        }
        let counts: Vec<String> = b.panels_per_edge().iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "panels_per_edge {}", counts.join(" "));
        let _ = writeln!(out, "target_h {:?}", b.spec().target_h);
        let _ = writeln!(out, "grading {:?}", b.spec().grading);
        let _ = writeln!(out, "degree {}", self.degree);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Config(format!("boundary space text: {msg}"));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut field = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing {key}")))?;
            line.strip_prefix(key)
                .map(|rest| rest.trim().to_string())
                .ok_or_else(|| bad(&format!("expected {key}, found {line:?}")))
        };
        let nv: usize = field("vertices")?.parse().map_err(|_| bad("vertex count"))?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = field("")?;
            let xy: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(&format!("coordinate {t:?}"))))
                .collect::<Result<_>>()?;
            if xy.len() != 2 {
                return Err(bad(&format!("vertex line {line:?}")));
            }
            vertices.push([xy[0], xy[1]]);
        }
        let counts: Vec<usize> = field("panels_per_edge")?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(&format!("panel count {t:?}"))))
            .collect::<Result<_>>()?;
        let target_h: f64 = field("target_h")?.parse().map_err(|_| bad("target_h"))?;
        let grading: f64 = field("grading")?.parse().map_err(|_| bad("grading"))?;
        let degree: usize = field("degree")?.parse().map_err(|_| bad("degree"))?;
        let boundary = PolygonBoundary::from_counts(&vertices, counts, MeshSpec { target_h, grading })?;
        Ok(Self::new(boundary, degree))
    }
}
