//! Galerkin matrices of the single and double layer operators.
//!
//! Panel pairs fall into three classes:
//!
//! * collinear and touching (a panel with itself or its neighbour on the
//!   same edge): the double integral depends on `x - y` only through
//!   `w = (x - y)·τ`, so it collapses to a 1D integral in `w` of `K₀(s|w|)`
//!   against a piecewise polynomial. The log singularity at `w = 0` is
//!   handled by tanh-sinh, the rest by Gauss pieces short enough to resolve
//!   the oscillation `e^{-s|w|}`. The double layer block vanishes.
//! * touching at a corner: Duffy's split of the parameter square into two
//!   triangles with the singular vertex at the apex, tanh-sinh in the radial
//!   variable.
//! * disjoint: tensor Gauss once the pair is well separated relative to its
//!   size and `|s|·size` is small, otherwise the longer piece is halved.
//!
//! Pairs with `Re(s)·dist` beyond [`QuadParams::decay_cutoff`] are dropped.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::mesh::{cross, dot, norm, sub, Panel, Point};
use super::space::BoundarySpace;
use crate::kernels::k01_unchecked;
use crate::linalg::{asymmetry, CMatrix};
use crate::quadrature::{gauss_legendre, tanh_sinh};
use crate::{Error, Result};

const INV_2PI: f64 = 0.5 / PI;
/// `K₀`, `K₁` underflow beyond this `Re z`.
const UNDERFLOW_RE: f64 = 700.0;
const MAX_DEPTH: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParams {
    /// Largest `|s|·length` of a piece integrated without subdivision.
    pub kappa: f64,
    /// Disjoint pieces are integrated directly once `dist ≥ eta·length`.
    pub eta: f64,
    /// Interactions with `Re(s)·dist` above this are neglected.
    pub decay_cutoff: f64,
    /// Added to every Gauss order.
    pub extra_order: usize,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            kappa: 3.0,
            eta: 1.0,
            decay_cutoff: 40.0,
            extra_order: 0,
        }
    }
}

/// How the `(P, Q)` / `(Q, P)` pair blocks are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    /// Every ordered pair is integrated on its own; the single layer is
    /// checked for symmetry before it is averaged.
    Verify,
    /// Each unordered pair is integrated once and mirrored.
    Mirror,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    SingleLayer,
    DoubleLayer,
    Mass,
    Stiffness,
}

#[derive(Debug, Clone)]
pub struct GalerkinMatrix {
    pub kind: OperatorKind,
    pub s: Option<Complex64>,
    pub entries: CMatrix,
}

/// `V(s)` and `K(s)` assembled together.
#[derive(Debug, Clone)]
pub struct LayerOperators {
    pub s: Complex64,
    pub v: CMatrix,
    pub k: CMatrix,
    /// `‖V - Vᵀ‖/‖V‖` before symmetrisation; zero in mirror mode.
    pub asymmetry: f64,
}

/// A sub-interval `[u0, u1]` of a panel.
#[derive(Debug, Clone, Copy)]
struct Piece<'a> {
    panel: &'a Panel,
    u0: f64,
    u1: f64,
}

impl<'a> Piece<'a> {
    fn whole(panel: &'a Panel) -> Self {
        Self {
            panel,
            u0: 0.0,
            u1: panel.length,
        }
    }

    fn len(&self) -> f64 {
        self.u1 - self.u0
    }

    fn a(&self) -> Point {
        self.panel.at(self.u0)
    }

    fn b(&self) -> Point {
        self.panel.at(self.u1)
    }

    /// The part within `len` of the start (or end) and the rest.
    fn cut(&self, at_start: bool, len: f64) -> (Self, Self) {
        if at_start {
            (Self { u1: self.u0 + len, ..*self }, Self { u0: self.u0 + len, ..*self })
        } else {
            (Self { u0: self.u1 - len, ..*self }, Self { u1: self.u1 - len, ..*self })
        }
    }

    fn halves(&self) -> (Self, Self) {
        let mid = 0.5 * (self.u0 + self.u1);
        (Self { u1: mid, ..*self }, Self { u0: mid, ..*self })
    }
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let t = (dot(sub(p, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
    norm(sub(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

fn piece_distance(p: &Piece, q: &Piece) -> f64 {
    let (a, b, c, d) = (p.a(), p.b(), q.a(), q.b());
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

fn collinear(p: &Panel, q: &Panel) -> bool {
    cross(p.tangent, q.tangent).abs() < 1e-14 && dot(sub(q.start, p.start), p.normal).abs() < 1e-14 * (p.length + q.length)
}

/// Accumulated `(deg+1)²` blocks of one panel pair: the single layer, the
/// double layer tested on `P`, and the double layer tested on `Q`
/// (stored transposed, i.e. indexed `[P-mode][Q-mode]`).
struct PairBlocks {
    nl: usize,
    v: Vec<Complex64>,
    k_pq: Vec<Complex64>,
    k_qp: Vec<Complex64>,
}

impl PairBlocks {
    fn new(nl: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); nl * nl];
        Self {
            nl,
            v: z.clone(),
            k_pq: z.clone(),
            k_qp: z,
        }
    }
}

#[inline]
fn legendre(deg: usize, h: f64, u: f64, out: &mut [f64]) {
    let x = 2.0 * u / h - 1.0;
    out[0] = 1.0;
    if deg >= 1 {
        out[1] = x;
    }
    for l in 1..deg {
        let lf = l as f64;
        out[l + 1] = ((2.0 * lf + 1.0) * x * out[l] - lf * out[l - 1]) / (lf + 1.0);
    }
}

/// Kernel values at one point pair: single layer, double layer with the
/// normal of `Q`, and with the normal of `P` (for the transposed block).
#[inline]
fn kernels(s: Complex64, x: Point, y: Point, nu_p: Point, nu_q: Point, double: bool) -> (Complex64, Complex64, Complex64) {
    kernels_at(s, sub(x, y), nu_p, nu_q, double)
}

/// As [`kernels`], from the separation `d = x - y`.
#[inline]
fn kernels_at(s: Complex64, d: Point, nu_p: Point, nu_q: Point, double: bool) -> (Complex64, Complex64, Complex64) {
    let r = norm(d);
    let z = s * r;
    let zero = Complex64::new(0.0, 0.0);
    if z.re > UNDERFLOW_RE {
        return (zero, zero, zero);
    }
    let (k0, k1) = k01_unchecked(z);
    let v = k0 * INV_2PI;
    if !double {
        return (v, zero, zero);
    }
    let f = s * k1 * (INV_2PI / r);
    (v, f * dot(d, nu_q), -f * dot(d, nu_p))
}

pub struct Assembler<'a> {
    space: &'a BoundarySpace,
    s: Complex64,
    params: QuadParams,
}

impl<'a> Assembler<'a> {
    pub fn new(space: &'a BoundarySpace, s: Complex64, params: QuadParams) -> Result<Self> {
        if !(s.re > 0.0) {
            return Err(Error::Domain(format!("layer operators need Re s > 0, got {s}")));
        }
        Ok(Self { space, s, params })
    }

    fn deg(&self) -> usize {
        self.space.degree()
    }

    fn separated_order(&self, ratio: f64) -> usize {
        let base = self.deg() + 1 + self.params.extra_order;
        if ratio >= 4.0 {
            base + 4
        } else if ratio >= 2.0 {
            base + 6
        } else {
            base + 9
        }
    }

    /// Tensor Gauss on two disjoint pieces.
    fn tensor(&self, p: &Piece, q: &Piece, order: usize, double: bool, acc: &mut PairBlocks) {
        let rule = gauss_legendre(order);
        let nl = acc.nl;
        let deg = self.deg();
        let n = rule.len();
        let mut bp = vec![0.0; n * nl];
        let mut bq = vec![0.0; n * nl];
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for (a, (&t, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let u = p.u0 + t * p.len();
            let v = q.u0 + t * q.len();
            legendre(deg, p.panel.length, u, &mut bp[a * nl..(a + 1) * nl]);
            legendre(deg, q.panel.length, v, &mut bq[a * nl..(a + 1) * nl]);
            for l in 0..nl {
                bp[a * nl + l] *= w * p.len();
                bq[a * nl + l] *= w * q.len();
            }
            xs.push(p.panel.at(u));
            ys.push(q.panel.at(v));
        }
        // first contraction over the Q nodes: T[a][j] = Σ_b k(x_a, y_b) bq[b][j]
        let zero = Complex64::new(0.0, 0.0);
        let mut tv = vec![zero; n * nl];
        let mut tpq = vec![zero; n * nl];
        let mut tqp = vec![zero; n * nl];
        for a in 0..n {
            for b in 0..n {
                let (kv, kpq, kqp) = kernels(self.s, xs[a], ys[b], p.panel.normal, q.panel.normal, double);
                for j in 0..nl {
                    let w = bq[b * nl + j];
                    tv[a * nl + j] += kv * w;
                    if double {
                        tpq[a * nl + j] += kpq * w;
                        tqp[a * nl + j] += kqp * w;
                    }
                }
            }
        }
        for a in 0..n {
            for i in 0..nl {
                let w = bp[a * nl + i];
                for j in 0..nl {
                    acc.v[i * nl + j] += tv[a * nl + j] * w;
                    if double {
                        acc.k_pq[i * nl + j] += tpq[a * nl + j] * w;
                        acc.k_qp[i * nl + j] += tqp[a * nl + j] * w;
                    }
                }
            }
        }
    }

    /// Disjoint pieces, subdivided until admissible.
    fn separated(&self, p: Piece, q: Piece, double: bool, acc: &mut PairBlocks, depth: usize) -> Result<()> {
        let d = piece_distance(&p, &q);
        if self.s.re * d > self.params.decay_cutoff {
            return Ok(());
        }
        let lmax = p.len().max(q.len());
        let oscillation = self.s.norm() * lmax;
        if d >= self.params.eta * lmax && oscillation <= self.params.kappa {
            self.tensor(&p, &q, self.separated_order(d / lmax), double, acc);
            return Ok(());
        }
        if depth >= MAX_DEPTH || d == 0.0 {
            return Err(Error::Assembly(0, 0, format!("subdivision of disjoint pieces did not terminate (distance {d:e})")));
        }
        if p.len() >= q.len() {
            let (p1, p2) = p.halves();
            self.separated(p1, q, double, acc, depth + 1)?;
            self.separated(p2, q, double, acc, depth + 1)
        } else {
            let (q1, q2) = q.halves();
            self.separated(p, q1, double, acc, depth + 1)?;
            self.separated(p, q2, double, acc, depth + 1)
        }
    }

    /// Pieces meeting at a common corner `p_at_start`/`q_at_start` tell which
    /// end of each piece is the shared point.
    fn corner(&self, p: Piece, p_at_start: bool, q: Piece, q_at_start: bool, acc: &mut PairBlocks, depth: usize) -> Result<()> {
        // Very unequal sides put a peak of width lq/lp into the angular
        // integrand; cut the longer piece down to the shorter one.
        if p.len() > 2.0 * q.len() || q.len() > 2.0 * p.len() {
            if depth >= MAX_DEPTH {
                return Err(Error::Assembly(0, 0, "corner subdivision did not terminate".into()));
            }
            return if p.len() > q.len() {
                let (near, far) = p.cut(p_at_start, q.len());
                self.corner(near, p_at_start, q, q_at_start, acc, depth + 1)?;
                self.separated(far, q, true, acc, 0)
            } else {
                let (near, far) = q.cut(q_at_start, p.len());
                self.corner(p, p_at_start, near, q_at_start, acc, depth + 1)?;
                self.separated(p, far, true, acc, 0)
            };
        }
        let lmax = p.len().max(q.len());
        if self.s.norm() * lmax > self.params.kappa {
            if depth >= MAX_DEPTH {
                return Err(Error::Assembly(0, 0, "corner subdivision did not terminate".into()));
            }
            let (p1, p2) = p.halves();
            let (q1, q2) = q.halves();
            let (pn, pf) = if p_at_start { (p1, p2) } else { (p2, p1) };
            let (qn, qf) = if q_at_start { (q1, q2) } else { (q2, q1) };
            self.corner(pn, p_at_start, qn, q_at_start, acc, depth + 1)?;
            self.separated(pn, qf, true, acc, 0)?;
            self.separated(pf, qn, true, acc, 0)?;
            return self.separated(pf, qf, true, acc, 0);
        }
        let nl = acc.nl;
        let deg = self.deg();
        let radial = tanh_sinh();
        let angular = gauss_legendre(deg + 12 + self.params.extra_order);
        let (lp, lq) = (p.len(), q.len());
        // arclength on the panel from the distance to the shared point
        let pu = |a: f64| if p_at_start { p.u0 + a } else { p.u1 - a };
        let qv = |b: f64| if q_at_start { q.u0 + b } else { q.u1 - b };
        // directions away from the shared point; x - y is formed from these
        // so that points very close to the vertex keep their separation
        let ep = if p_at_start { p.panel.tangent } else { [-p.panel.tangent[0], -p.panel.tangent[1]] };
        let eq = if q_at_start { q.panel.tangent } else { [-q.panel.tangent[0], -q.panel.tangent[1]] };
        let mut fp = vec![0.0; nl];
        let mut fq = vec![0.0; nl];
        for tri in 0..2 {
            for (&rho, &wr) in radial.nodes.iter().zip(&radial.weights) {
                for (&t, &wt) in angular.nodes.iter().zip(&angular.weights) {
                    let (a, b) = if tri == 0 { (rho, rho * t) } else { (rho * t, rho) };
                    let (u, v) = (pu(a * lp), qv(b * lq));
                    let w = wr * wt * rho * lp * lq;
                    let d = [a * lp * ep[0] - b * lq * eq[0], a * lp * ep[1] - b * lq * eq[1]];
                    if d == [0.0, 0.0] {
                        continue;
                    }
                    let (kv, kpq, kqp) = kernels_at(self.s, d, p.panel.normal, q.panel.normal, true);
                    legendre(deg, p.panel.length, u, &mut fp);
                    legendre(deg, q.panel.length, v, &mut fq);
                    for i in 0..nl {
                        for j in 0..nl {
                            let f = w * fp[i] * fq[j];
                            acc.v[i * nl + j] += kv * f;
                            acc.k_pq[i * nl + j] += kpq * f;
                            acc.k_qp[i * nl + j] += kqp * f;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Collinear panels with the same orientation that overlap or touch.
    fn collinear_touching(&self, p: &Panel, q: &Panel, acc: &mut PairBlocks) {
        let nl = acc.nl;
        let deg = self.deg();
        let (hp, hq) = (p.length, q.length);
        // x - y = (u + delta - v) τ
        let delta = dot(sub(p.start, q.start), p.tangent);
        let lo = delta - hq;
        let hi = delta + hp;
        let mut breaks = vec![lo, hi, delta, delta + hp - hq];
        if lo < 0.0 && hi > 0.0 {
            breaks.push(0.0);
        }
        breaks.retain(|&w| w >= lo && w <= hi);
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (hp + hq));

        let smod = self.s.norm();
        let step = self.params.kappa / smod;
        let gauss = gauss_legendre(deg + 10 + self.params.extra_order);
        let inner = gauss_legendre(deg + 1);
        let ts = tanh_sinh();
        let mut fp = vec![0.0; nl];
        let mut fq = vec![0.0; nl];

        let mut add = |w: f64, weight: f64, acc: &mut PairBlocks| {
            let z = self.s * w.abs();
            if z.re > UNDERFLOW_RE || w == 0.0 {
                return;
            }
            let kv = k01_unchecked(z).0 * INV_2PI * weight;
            let u_lo = (w - delta).max(0.0);
            let u_hi = (hq + w - delta).min(hp);
            if u_hi <= u_lo {
                return;
            }
            let len = u_hi - u_lo;
            for (&x, &wx) in inner.nodes.iter().zip(&inner.weights) {
                let u = u_lo + x * len;
                let v = u + delta - w;
                legendre(deg, hp, u, &mut fp);
                legendre(deg, hq, v, &mut fq);
                let c = kv * (wx * len);
                for i in 0..nl {
                    let ci = c * fp[i];
                    for j in 0..nl {
                        acc.v[i * nl + j] += ci * fq[j];
                    }
                }
            }
        };

        for win in breaks.windows(2) {
            let (a, b) = (win[0], win[1]);
            if b - a <= 0.0 {
                continue;
            }
            // orient the piece so that `start` is the end nearest the singularity
            let singular_at_a = a == 0.0;
            let singular_at_b = b == 0.0;
            let (start, end) = if singular_at_b { (b, a) } else { (a, b) };
            let dir = if end > start { 1.0 } else { -1.0 };
            let total = (end - start).abs();
            let mut pos = 0.0;
            if singular_at_a || singular_at_b {
                let first = total.min(step);
                for (&x, &wx) in ts.nodes.iter().zip(&ts.weights) {
                    add(start + dir * x * first, wx * first, acc);
                }
                pos = first;
            }
            while pos < total * (1.0 - 1e-14) {
                let len = step.min(total - pos);
                let (w1, w2) = (start + dir * pos, start + dir * (pos + len));
                let nearest = if w1 * w2 <= 0.0 { 0.0 } else { w1.abs().min(w2.abs()) };
                if self.s.re * nearest > self.params.decay_cutoff {
                    pos += len;
                    continue;
                }
                for (&x, &wx) in gauss.nodes.iter().zip(&gauss.weights) {
                    add(start + dir * (pos + x * len), wx * len, acc);
                }
                pos += len;
            }
        }
    }

    /// Blocks of the ordered pair `(P, Q)`; `P` indexes rows.
    fn pair(&self, ip: usize, iq: usize) -> Result<PairBlocks> {
        let panels = self.space.panels();
        let (p, q) = (&panels[ip], &panels[iq]);
        let nl = self.space.local_dim();
        let mut acc = PairBlocks::new(nl);
        let b = self.space.boundary();
        let wrap = |e: Error| match e {
            Error::Assembly(_, _, msg) => Error::Assembly(ip, iq, msg),
            other => other,
        };
        let touching_same_line = collinear(p, q) && (ip == iq || b.next(ip) == iq || b.next(iq) == ip);
        if touching_same_line {
            self.collinear_touching(p, q, &mut acc);
        } else if b.next(ip) == iq {
            // P ends where Q starts
            self.corner(Piece::whole(p), false, Piece::whole(q), true, &mut acc, 0).map_err(wrap)?;
        } else if b.next(iq) == ip {
            self.corner(Piece::whole(p), true, Piece::whole(q), false, &mut acc, 0).map_err(wrap)?;
        } else {
            let double = !collinear(p, q);
            self.separated(Piece::whole(p), Piece::whole(q), double, &mut acc, 0).map_err(wrap)?;
        }
        let finite = |v: &[Complex64]| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !(finite(&acc.v) && finite(&acc.k_pq) && finite(&acc.k_qp)) {
            return Err(Error::Assembly(ip, iq, format!("non-finite quadrature result at s = {}", self.s)));
        }
        Ok(acc)
    }

    /// Assemble `V(s)` and `K(s)`.
    pub fn assemble(&self, symmetry: Symmetry) -> Result<LayerOperators> {
        let np = self.space.panels().len();
        let nl = self.space.local_dim();
        let n = self.space.dim();
        let rows: Vec<Vec<(usize, PairBlocks)>> = (0..np)
            .into_par_iter()
            .map(|ip| {
                let start = if symmetry == Symmetry::Mirror { ip } else { 0 };
                (start..np).map(|iq| self.pair(ip, iq).map(|b| (iq, b))).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mut v = CMatrix::zeros(n, n);
        let mut k = CMatrix::zeros(n, n);
        for (ip, row) in rows.iter().enumerate() {
            for (iq, blk) in row {
                let iq = *iq;
                for i in 0..nl {
                    for j in 0..nl {
                        let (r, c) = (ip * nl + i, iq * nl + j);
                        v[(r, c)] = blk.v[i * nl + j];
                        k[(r, c)] = blk.k_pq[i * nl + j];
                        if symmetry == Symmetry::Mirror && ip != iq {
                            v[(c, r)] = blk.v[i * nl + j];
                            k[(c, r)] = blk.k_qp[i * nl + j];
                        }
                    }
                }
            }
        }
        let asym = asymmetry(&v);
        if symmetry == Symmetry::Verify {
            if asym > 1e-10 {
                return Err(Error::MatrixIntegrity(format!(
                    "single layer at s = {} has asymmetry {asym:.3e} > 1e-10",
                    self.s
                )));
            }
            v = (&v + v.transpose()).map(|z| z * 0.5);
        }
        Ok(LayerOperators { s: self.s, v, k, asymmetry: asym })
    }
}

pub fn assemble_layers(space: &BoundarySpace, s: Complex64, symmetry: Symmetry) -> Result<LayerOperators> {
    Assembler::new(space, s, QuadParams::default())?.assemble(symmetry)
}

pub fn assemble_single_layer(space: &BoundarySpace, s: Complex64) -> Result<GalerkinMatrix> {
    let ops = assemble_layers(space, s, Symmetry::Verify)?;
    Ok(GalerkinMatrix {
        kind: OperatorKind::SingleLayer,
        s: Some(s),
        entries: ops.v,
    })
}

pub fn assemble_double_layer(space: &BoundarySpace, s: Complex64) -> Result<GalerkinMatrix> {
    let ops = assemble_layers(space, s, Symmetry::Verify)?;
    Ok(GalerkinMatrix {
        kind: OperatorKind::DoubleLayer,
        s: Some(s),
        entries: ops.k,
    })
}

pub fn assemble_mass(space: &BoundarySpace) -> GalerkinMatrix {
    GalerkinMatrix {
        kind: OperatorKind::Mass,
        s: None,
        entries: space.mass(),
    }
}

pub fn assemble_stiffness(space: &BoundarySpace) -> GalerkinMatrix {
    GalerkinMatrix {
        kind: OperatorKind::Stiffness,
        s: None,
        entries: space.stiffness(),
    }
}
