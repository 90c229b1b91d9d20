//! Standard and differentiated CQ schemes for the interior scattering problem
//! driven by a travelling pulse.
//!
//! The incident field is `u(x, t) = ψ(t - d·x)` with
//! `ψ(τ) = cos(πτ/2)·exp(-(τ-τ₀)²/α)`, so the Dirichlet data is
//! `g = ψ(t - d·x)`, its time derivative is `ψ'(t - d·x)`, and the exact
//! interior Neumann trace is `λ = -ψ'(t - d·x)·(d·ν)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bem2d::{
    assemble_single_layer, dtn_apply, energy_norms, BoundarySpace, DtnOperator, Point, QuadParams, Side,
    Symmetry,
};
use crate::butcher::ButcherTableau;
use crate::cq::{apply_symbol, convergence_rate, CqOptions, StageGrid, Symbol};
use crate::linalg::{CMatrix, CVector};
use crate::{Error, Result};

/// Abscissa `Re s` of the inversion contour in [`Scattering::spatial_floor`].
pub const FLOOR_ABSCISSA: f64 = 1.0;

/// Highest derivative covered by the causality check.
pub const CAUSALITY_ORDER: usize = 9;
/// Bound on `|ψ⁽ʲ⁾|` over the boundary at `t = 0`.
pub const CAUSALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentWave {
    direction: Point,
    tau0: f64,
    alpha: f64,
}

impl IncidentWave {
    pub fn new(direction: Point, tau0: f64, alpha: f64) -> Result<Self> {
        let len = direction[0].hypot(direction[1]);
        if !((len - 1.0).abs() <= 1e-12) {
            return Err(Error::Config(format!("wave direction must be a unit vector, |d| = {len}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) || !tau0.is_finite() {
            return Err(Error::Config(format!("wave needs α > 0 and finite τ₀, got α = {alpha}, τ₀ = {tau0}")));
        }
        Ok(Self { direction, tau0, alpha })
    }

    /// `d = (1/√2, 1/√2)`, `τ₀ = 4`, `α = 0.05`.
    pub fn standard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            direction: [h, h],
            tau0: 4.0,
            alpha: 0.05,
        }
    }

    pub fn direction(&self) -> Point {
        self.direction
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn profile(&self, tau: f64) -> f64 {
        (PI * tau / 2.0).cos() * (-(tau - self.tau0).powi(2) / self.alpha).exp()
    }

    pub fn profile_derivative(&self, tau: f64) -> f64 {
        let e = (-(tau - self.tau0).powi(2) / self.alpha).exp();
        -(PI / 2.0) * (PI * tau / 2.0).sin() * e - self.profile(tau) * 2.0 * (tau - self.tau0) / self.alpha
    }

    /// `ψ, ψ', …, ψ⁽ⁿ⁾` at `τ`.
    ///
    /// `ψ = Re f` with `f = exp(Q)`, `Q(τ) = iπτ/2 - (τ-τ₀)²/α`, and
    /// `f⁽ʲ⁺¹⁾ = Q'f⁽ʲ⁾ + jQ''f⁽ʲ⁻¹⁾`.
    pub fn profile_derivatives(&self, tau: f64, n: usize) -> Vec<f64> {
        let q = Complex64::new(-(tau - self.tau0).powi(2) / self.alpha, PI * tau / 2.0);
        let dq = Complex64::new(-2.0 * (tau - self.tau0) / self.alpha, PI / 2.0);
        let ddq = -2.0 / self.alpha;
        let mut f = vec![q.exp()];
        for j in 0..n {
            let prev = if j > 0 { f[j - 1] * (j as f64 * ddq) } else { Complex64::new(0.0, 0.0) };
            f.push(dq * f[j] + prev);
        }
        f.iter().map(|z| z.re).collect()
    }

    /// Laplace transform `ψ̂(s)`, with the Gaussian integrated over the
    /// whole line (the part before `τ = 0` is below the causality tolerance).
    pub fn laplace_transform(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for beta in [PI / 2.0, -PI / 2.0] {
            let z = s - Complex64::new(0.0, beta);
            acc += (-z * self.tau0 + z * z * (self.alpha / 4.0)).exp();
        }
        acc * (0.5 * (PI * self.alpha).sqrt())
    }

    /// Frequency beyond which `|ψ̂(σ + iω)|` has dropped by `1e-10`.
    pub fn band_edge(&self) -> f64 {
        PI / 2.0 + (4.0 * 1e10f64.ln() / self.alpha).sqrt()
    }

    /// `t - d·x`.
    pub fn phase(&self, x: Point, t: f64) -> f64 {
        t - (self.direction[0] * x[0] + self.direction[1] * x[1])
    }

    /// Largest `|ψ⁽ʲ⁾(-d·x)|`, `j ≤ 9`, over panel endpoints and projection
    /// nodes; the wave must not have reached the scatterer at `t = 0`.
    pub fn check_causality(&self, space: &BoundarySpace) -> Result<f64> {
        let rule = crate::quadrature::gauss_legendre(crate::bem2d::space::PROJECTION_ORDER);
        let mut worst: f64 = 0.0;
        for p in space.panels() {
            let points = std::iter::once(p.start)
                .chain(std::iter::once(p.end))
                .chain(rule.nodes.iter().map(|&x| p.at(x * p.length)));
            for x in points {
                let d = self.profile_derivatives(self.phase(x, 0.0), CAUSALITY_ORDER);
                worst = d.iter().fold(worst, |m, v| m.max(v.abs()));
            }
        }
        if worst > CAUSALITY_TOL {
            return Err(Error::Config(format!(
                "incident wave is already on the boundary at t = 0 (|ψ⁽ʲ⁾| up to {worst:.3e})"
            )));
        }
        Ok(worst)
    }

    /// Projected exact interior Neumann trace `-ψ'(t - d·x)(d·ν)`.
    pub fn neumann_trace(&self, space: &BoundarySpace, t: f64) -> CVector {
        let d = self.direction;
        space.l2_project_real(|p, x| -self.profile_derivative(self.phase(x, t)) * (d[0] * p.normal[0] + d[1] * p.normal[1]))
    }
}

/// Stage samples of `g` (order 0) or `ġ` (order 1) as projected coefficient
/// vectors, one `(m·n) × 1` matrix per step `j = 0..=N`.
pub fn trace_samples(wave: &IncidentWave, space: &BoundarySpace, grid: &StageGrid, order: usize) -> Result<Vec<CMatrix>> {
    if order > 1 {
        return Err(Error::Contract(format!("trace samples of order {order}; only 0 and 1 are available")));
    }
    wave.check_causality(space)?;
    let n = space.dim();
    let m = grid.stages();
    let samples = (0..=grid.n_steps())
        .map(|j| {
            let mut col = CMatrix::zeros(m * n, 1);
            for l in 0..m {
                let t = grid.stage_time(j, l);
                let c = space.l2_project_real(|_, x| {
                    let tau = wave.phase(x, t);
                    if order == 0 {
                        wave.profile(tau)
                    } else {
                        wave.profile_derivative(tau)
                    }
                });
                col.view_mut((l * n, 0), (n, 1)).copy_from(&c);
            }
            col
        })
        .collect();
    Ok(samples)
}

/// One block of a [`ScatteringSymbol`]: `s^power · DtN(s)` or
/// `s^power · DtI(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Channel {
    pub impedance: bool,
    pub power: i32,
}

impl Channel {
    pub const DTN: Channel = Channel {
        impedance: false,
        power: 0,
    };
    pub const DTN_OVER_S: Channel = Channel {
        impedance: false,
        power: -1,
    };
    pub const DTI_OVER_S: Channel = Channel {
        impedance: true,
        power: -1,
    };
}

/// Block-diagonal symbol `diag(K_1(s), …, K_c(s))` over `c` copies of the
/// boundary space. Every block shares a single assembly and factorisation of
/// `V(s)` per frequency.
pub struct ScatteringSymbol<'a> {
    space: &'a BoundarySpace,
    side: Side,
    channels: Vec<Channel>,
    params: QuadParams,
}

impl<'a> ScatteringSymbol<'a> {
    pub fn new(space: &'a BoundarySpace, side: Side, channels: Vec<Channel>, params: QuadParams) -> Self {
        Self {
            space,
            side,
            channels,
            params,
        }
    }
}

impl Symbol for ScatteringSymbol<'_> {
    fn dim(&self) -> usize {
        self.channels.len() * self.space.dim()
    }

    fn apply(&self, s: Complex64, x: &CMatrix) -> Result<CMatrix> {
        let n = self.space.dim();
        let cols = x.ncols();
        let op = DtnOperator::with_params(self.space, s, Symmetry::Mirror, self.params)?;
        let mut stacked = CMatrix::zeros(n, cols * self.channels.len());
        for c in 0..self.channels.len() {
            stacked.columns_mut(c * cols, cols).copy_from(&x.rows(c * n, n));
        }
        let lambda = op.dtn(&stacked, self.side)?;
        let mut out = CMatrix::zeros(self.dim(), cols);
        for (c, ch) in self.channels.iter().enumerate() {
            let mut block = lambda.columns(c * cols, cols).into_owned();
            if ch.impedance {
                block += x.rows(c * n, n) * (s * self.side.impedance_sign());
            }
            out.rows_mut(c * n, n).copy_from(&(block * s.powi(ch.power)));
        }
        Ok(out)
    }

    fn name(&self) -> String {
        let names: Vec<String> = self
            .channels
            .iter()
            .map(|c| format!("s^{} {}", c.power, if c.impedance { "DtI" } else { "DtN" }))
            .collect();
        format!("scattering[{}]", names.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// `DtN(∂ₜᵏ) g`.
    Standard,
    /// `(∂ₜᵏ)⁻¹ DtN(∂ₜᵏ) ġ`.
    Differentiated,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Standard => "standard",
            Method::Differentiated => "differentiated",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Method::Standard),
            "differentiated" => Ok(Method::Differentiated),
            _ => Err(Error::Config(format!("unknown method `{s}` (standard, differentiated)"))),
        }
    }

    /// Rate predicted for a Radau IIA method with stage order `q` and
    /// classical order `p`.
    pub fn predicted_rate(self, q: usize, p: usize) -> usize {
        match self {
            Method::Standard => q.min(p),
            Method::Differentiated => (q + 2).min(p),
        }
    }

    fn channel(self) -> Channel {
        match self {
            Method::Standard => Channel::DTN,
            Method::Differentiated => Channel::DTN_OVER_S,
        }
    }

    fn data_order(self) -> usize {
        match self {
            Method::Standard => 0,
            Method::Differentiated => 1,
        }
    }
}

/// Outputs and errors of one scheme on one grid, at `t_1..=t_N`.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub method: Method,
    pub tableau: String,
    pub grid: StageGrid,
    pub outputs: Vec<CVector>,
    pub reference: Vec<CVector>,
    /// `V(1)` energy norm of `λᵏ(t_j) - Πλ(t_j)`.
    pub errors: Vec<f64>,
}

impl SchemeRun {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn times(&self) -> Vec<f64> {
        (1..=self.outputs.len()).map(|j| j as f64 * self.grid.k()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TimeDomainOptions {
    pub cq: CqOptions,
    pub quad: QuadParams,
}

impl Default for TimeDomainOptions {
    fn default() -> Self {
        Self {
            cq: CqOptions {
                oversampling: 2,
                skip_tol: 1e-14,
                ..CqOptions::default()
            },
            quad: QuadParams::default(),
        }
    }
}

/// Interior scattering of an [`IncidentWave`] on a fixed boundary space.
pub struct Scattering {
    space: BoundarySpace,
    wave: IncidentWave,
    t_final: f64,
    opts: TimeDomainOptions,
    v1: CMatrix,
}

impl Scattering {
    pub fn new(space: BoundarySpace, wave: IncidentWave, t_final: f64, opts: TimeDomainOptions) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::Config(format!("final time must be positive, got {t_final}")));
        }
        wave.check_causality(&space)?;
        let v1 = assemble_single_layer(&space, Complex64::new(1.0, 0.0))?.entries;
        Ok(Self {
            space,
            wave,
            t_final,
            opts,
            v1,
        })
    }

    pub fn space(&self) -> &BoundarySpace {
        &self.space
    }

    pub fn wave(&self) -> &IncidentWave {
        &self.wave
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn options(&self) -> &TimeDomainOptions {
        &self.opts
    }

    pub fn single_layer_at_one(&self) -> &CMatrix {
        &self.v1
    }

    pub fn grid(&self, tableau: &ButcherTableau, n_steps: usize) -> Result<StageGrid> {
        StageGrid::covering(self.t_final, n_steps, tableau)
    }

    /// Stage samples of `g` and `ġ`, stacked channel by channel in the order
    /// of `orders`.
    fn stacked_samples(&self, grid: &StageGrid, orders: &[usize]) -> Result<Vec<CMatrix>> {
        let n = self.space.dim();
        let m = grid.stages();
        let per_order: Vec<Vec<CMatrix>> = orders
            .iter()
            .map(|&o| trace_samples(&self.wave, &self.space, grid, o))
            .collect::<Result<_>>()?;
        let c = orders.len();
        Ok((0..=grid.n_steps())
            .map(|j| {
                // stage-major over the combined dimension c·n
                let mut col = CMatrix::zeros(m * c * n, 1);
                for l in 0..m {
                    for (ci, samples) in per_order.iter().enumerate() {
                        col.view_mut(((l * c + ci) * n, 0), (n, 1))
                            .copy_from(&samples[j].rows(l * n, n));
                    }
                }
                col
            })
            .collect())
    }

    /// Runs several methods on one grid, sharing every frequency solve.
    pub fn run(&self, tableau: &ButcherTableau, n_steps: usize, methods: &[Method]) -> Result<Vec<SchemeRun>> {
        if methods.is_empty() {
            return Ok(Vec::new());
        }
        let grid = self.grid(tableau, n_steps)?;
        let channels: Vec<Channel> = methods.iter().map(|m| m.channel()).collect();
        let orders: Vec<usize> = methods.iter().map(|m| m.data_order()).collect();
        let outputs = self.apply_channels(tableau, &grid, &channels, &orders)?;
        let n = self.space.dim();
        let reference: Vec<CVector> = (1..=n_steps)
            .map(|j| self.wave.neumann_trace(&self.space, j as f64 * grid.k()))
            .collect();
        methods
            .iter()
            .enumerate()
            .map(|(c, &method)| {
                let outs: Vec<CVector> = outputs[..n_steps].iter().map(|u| u.rows(c * n, n).column(0).into_owned()).collect();
                let diff = CMatrix::from_fn(n, n_steps, |i, j| outs[j][i] - reference[j][i]);
                let errors = energy_norms(&self.v1, &diff)?;
                Ok(SchemeRun {
                    method,
                    tableau: tableau.name().to_string(),
                    grid: grid.clone(),
                    outputs: outs,
                    reference: reference.clone(),
                    errors,
                })
            })
            .collect()
    }

    fn apply_channels(
        &self,
        tableau: &ButcherTableau,
        grid: &StageGrid,
        channels: &[Channel],
        orders: &[usize],
    ) -> Result<Vec<CMatrix>> {
        let symbol = ScatteringSymbol::new(&self.space, Side::Interior, channels.to_vec(), self.opts.quad);
        let samples = self.stacked_samples(grid, orders)?;
        apply_symbol(&symbol, tableau, grid, &samples, &self.opts.cq)
    }

    pub fn solve_standard(&self, tableau: &ButcherTableau, n_steps: usize) -> Result<SchemeRun> {
        Ok(self.run(tableau, n_steps, &[Method::Standard])?.remove(0))
    }

    pub fn solve_differentiated(&self, tableau: &ButcherTableau, n_steps: usize) -> Result<SchemeRun> {
        Ok(self.run(tableau, n_steps, &[Method::Differentiated])?.remove(0))
    }

    /// Compares `s⁻¹DtN` applied to `ġ` with `s⁻¹DtI` applied to `ġ` plus the
    /// nodal samples of `ġ` at the step times.
    pub fn decomposition_check(&self, tableau: &ButcherTableau, n_steps: usize) -> Result<DecompositionReport> {
        let grid = self.grid(tableau, n_steps)?;
        let outputs = self.apply_channels(
            tableau,
            &grid,
            &[Channel::DTN_OVER_S, Channel::DTI_OVER_S],
            &[1, 1],
        )?;
        let n = self.space.dim();
        let sign = Side::Interior.impedance_sign();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        let mut per_step = Vec::with_capacity(n_steps);
        for (j, u) in outputs[..n_steps].iter().enumerate() {
            let t = (j + 1) as f64 * grid.k();
            let gdot = self
                .space
                .l2_project_real(|_, x| self.wave.profile_derivative(self.wave.phase(x, t)));
            let dtn = u.rows(0, n).column(0).into_owned();
            let dti = u.rows(n, n).column(0).into_owned();
            // s⁻¹DtN = s⁻¹DtI - σ·I
            let residual = (&dtn - (&dti - &gdot * Complex64::new(sign, 0.0))).norm();
            let size = dtn.norm().max(gdot.norm());
            per_step.push(residual);
            worst = worst.max(residual);
            scale = scale.max(size);
        }
        Ok(DecompositionReport {
            per_step,
            max_residual: worst,
            max_relative: if scale > 0.0 { worst / scale } else { 0.0 },
        })
    }

    /// `‖Πλ‖` in the `V(1)` energy norm, maximised over the steps of `grid`.
    pub fn max_reference_norm(&self, grid: &StageGrid) -> Result<f64> {
        let n = self.space.dim();
        let steps = grid.n_steps();
        let refs: Vec<CVector> = (1..=steps)
            .map(|j| self.wave.neumann_trace(&self.space, j as f64 * grid.k()))
            .collect();
        let m = CMatrix::from_fn(n, steps, |i, j| refs[j][i]);
        Ok(energy_norms(&self.v1, &m)?.into_iter().fold(0.0, f64::max))
    }

    /// Spatial error of the semi-discrete problem: the largest `‖λ_h(t) - Πλ(t)‖`
    /// over the steps of `grid`, where `λ_h` is the exact-in-time Galerkin
    /// solution. Each frequency `s = σ + iω` gives the manufactured plane-wave
    /// error `DtN_h(Π e^{-s d·x}) - Π(-s (d·ν) e^{-s d·x})` scaled by `ψ̂(s)`,
    /// and the time error is recovered by trapezoidal Laplace inversion with
    /// period `2T` up to [`IncidentWave::band_edge`].
    pub fn spatial_floor(&self, grid: &StageGrid) -> Result<f64> {
        let d = self.wave.direction;
        let step = PI / self.t_final;
        let count = (self.wave.band_edge() / step).ceil() as usize + 1;
        let errors: Vec<Result<CVector>> = (0..count)
            .into_par_iter()
            .map(|j| {
                let s = Complex64::new(FLOOR_ABSCISSA, j as f64 * step);
                let op = DtnOperator::with_params(&self.space, s, Symmetry::Mirror, self.opts.quad)?;
                let plane = |x: Point| (-s * (d[0] * x[0] + d[1] * x[1])).exp();
                let g = self.space.l2_project(|_, x| plane(x));
                let exact = self.space.l2_project(|p, x| -s * (d[0] * p.normal[0] + d[1] * p.normal[1]) * plane(x));
                let weight = if j == 0 { 0.5 } else { 1.0 };
                Ok((dtn_apply(&op, &g, Side::Interior)? - exact) * (self.wave.laplace_transform(s) * weight))
            })
            .collect();
        let errors = errors.into_iter().collect::<Result<Vec<_>>>()?;
        let n = self.space.dim();
        let steps = grid.n_steps();
        let mut e = CMatrix::zeros(n, steps);
        for i in 0..steps {
            let t = (i + 1) as f64 * grid.k();
            let mut acc = CVector::zeros(n);
            for (j, ej) in errors.iter().enumerate() {
                acc.axpy(Complex64::new(0.0, j as f64 * step * t).exp(), ej, Complex64::new(1.0, 0.0));
            }
            let scale = (FLOOR_ABSCISSA * t).exp() * step / PI;
            e.set_column(i, &acc.map(|z| Complex64::new(z.re * scale, 0.0)));
        }
        Ok(energy_norms(&self.v1, &e)?.into_iter().fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub per_step: Vec<f64>,
    pub max_residual: f64,
    /// Residual relative to the largest output or data norm.
    pub max_relative: f64,
}

/// Rate fit over the consecutive ladder pairs whose errors both exceed
/// `10 · floor`.
#[derive(Debug, Clone)]
pub struct LadderFit {
    /// `(N, k, max error)` per run.
    pub points: Vec<(usize, f64, f64)>,
    /// Rate of each consecutive pair, `None` when the pair is below the floor.
    pub pair_rates: Vec<Option<f64>>,
    pub floor: f64,
}

impl LadderFit {
    pub fn new(runs: &[&SchemeRun], floor: f64) -> Result<Self> {
        let points: Vec<(usize, f64, f64)> = runs
            .iter()
            .map(|r| (r.grid.n_steps(), r.grid.k(), r.max_error()))
            .collect();
        let mut pair_rates = Vec::new();
        for w in points.windows(2) {
            let valid = w[0].2 > 10.0 * floor && w[1].2 > 10.0 * floor;
            if valid {
                let fit = convergence_rate(&[(w[0].1, w[0].2), (w[1].1, w[1].2)])?;
                pair_rates.push(Some(fit.pair_rates[0]));
            } else {
                pair_rates.push(None);
            }
        }
        Ok(Self {
            points,
            pair_rates,
            floor,
        })
    }

    /// Rates of the valid pairs, finest last.
    pub fn valid_rates(&self) -> Vec<f64> {
        self.pair_rates.iter().flatten().copied().collect()
    }

    /// Least-squares slope over the last `pairs` valid pairs.
    pub fn fitted_rate(&self, pairs: usize) -> Option<f64> {
        let idx: Vec<usize> = (0..self.pair_rates.len()).filter(|&i| self.pair_rates[i].is_some()).collect();
        if idx.is_empty() || pairs == 0 {
            return None;
        }
        let chosen = &idx[idx.len().saturating_sub(pairs)..];
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for &i in chosen {
            for p in [self.points[i], self.points[i + 1]] {
                if !pts.iter().any(|q| q.0 == p.1) {
                    pts.push((p.1, p.2));
                }
            }
        }
        convergence_rate(&pts).ok().map(|f| f.slope)
    }
}
