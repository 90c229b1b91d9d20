//! Runge-Kutta convolution quadrature.
//!
//! A convolution `K(∂ₜ)g` whose kernel is only known through its Laplace
//! transform `K(s)` is discretised as
//!
//! ```text
//! u(t_{n+1}) ≈ bᵀA⁻¹ Σ_{j=0}^{n} W_{n-j} g_j,    K(Δ(ζ)/k) = Σ W_n ζⁿ,
//! ```
//!
//! where `g_j` stacks the stage samples `g(t_j + c_l k)`. The weights are
//! Taylor coefficients, recovered by a trapezoidal rule on the circle
//! `|ζ| = ρ`, i.e. by an FFT.
//!
//! [`apply_symbol`] never forms the weights. It transforms the scaled data
//! to the frequency side, applies `K(λ_i/k)` once per eigenvalue of `Δ(ζ_q)`
//! and transforms back, which is the only affordable route when `K(s)`
//! involves a dense solve.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::butcher::{ButcherTableau, DeltaEigen, DEFAULT_EIGEN_CONDITION_LIMIT};
use crate::linalg::CMatrix;
use crate::{Error, Result};

/// An analytic operator family `s ↦ K(s)` acting on `Cᴰ`.
///
/// Implementations must be safe to evaluate at several frequencies
/// concurrently.
pub trait Symbol: Sync {
    fn dim(&self) -> usize;

    /// Apply `K(s)` to every column of `x` (`dim × r`).
    fn apply(&self, s: Complex64, x: &CMatrix) -> Result<CMatrix>;

    /// `K` is analytic for `Re s > sigma0`.
    fn sigma0(&self) -> f64 {
        0.0
    }

    /// Whether `K(s̄) = conj K(s)`, which lets real data be processed on half
    /// the frequencies.
    fn is_real(&self) -> bool {
        true
    }

    fn name(&self) -> String;
}

/// Scalar symbol given by a closure.
pub struct ScalarSymbol<F> {
    name: String,
    f: F,
}

impl<F> ScalarSymbol<F>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self {
            name: name.into(),
            f,
        }
    }
}

impl<F> Symbol for ScalarSymbol<F>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    fn dim(&self) -> usize {
        1
    }

    fn apply(&self, s: Complex64, x: &CMatrix) -> Result<CMatrix> {
        let v = (self.f)(s);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Domain(format!("{} is not finite at s = {s}", self.name)));
        }
        Ok(x * v)
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

/// `K(s) = s^μ` for integer `μ`.
pub fn power_symbol(mu: i32) -> ScalarSymbol<impl Fn(Complex64) -> Complex64 + Sync> {
    ScalarSymbol::new(format!("s^{mu}"), move |s: Complex64| s.powi(mu))
}

/// `K(s) = I` on `Cᴰ`.
pub struct Identity(pub usize);

impl Symbol for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, _s: Complex64, x: &CMatrix) -> Result<CMatrix> {
        Ok(x.clone())
    }

    fn name(&self) -> String {
        "identity".into()
    }
}

/// Uniform time grid `t_j = j k`, `j = 0..=N`, with stage times
/// `t_j + c_l k`.
#[derive(Debug, Clone)]
pub struct StageGrid {
    k: f64,
    n_steps: usize,
    c: Vec<f64>,
}

impl StageGrid {
    pub fn new(k: f64, n_steps: usize, tableau: &ButcherTableau) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Contract(format!("timestep must be positive, got {k}")));
        }
        if n_steps == 0 {
            return Err(Error::Contract("need at least one step".into()));
        }
        let c: Vec<f64> = tableau.c().iter().copied().collect();
        if c.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Contract(format!(
                "stage abscissae of {} are not nondecreasing",
                tableau.name()
            )));
        }
        Ok(Self { k, n_steps, c })
    }

    /// Grid with `N` steps covering `[0, T]`.
    pub fn covering(t_final: f64, n_steps: usize, tableau: &ButcherTableau) -> Result<Self> {
        Self::new(t_final / n_steps as f64, n_steps, tableau)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn t_final(&self) -> f64 {
        self.n_steps as f64 * self.k
    }

    pub fn stages(&self) -> usize {
        self.c.len()
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// `t_j + c_l k`.
    pub fn stage_time(&self, j: usize, l: usize) -> f64 {
        (j as f64 + self.c[l]) * self.k
    }

    /// All stage times, step-major, for `j = 0..=N`.
    pub fn stage_times(&self) -> Vec<f64> {
        (0..=self.n_steps)
            .flat_map(|j| (0..self.c.len()).map(move |l| (j, l)))
            .map(|(j, l)| self.stage_time(j, l))
            .collect()
    }

    /// `t_{n}` for the outputs `n = 1..=N+1`.
    pub fn output_times(&self) -> Vec<f64> {
        (1..=self.n_steps + 1).map(|n| n as f64 * self.k).collect()
    }
}

/// Tuning of the contour discretisation.
#[derive(Debug, Clone)]
pub struct CqOptions {
    /// Contour radius `ρ`; `None` picks [`default_radius`].
    pub radius: Option<f64>,
    /// Frequencies per step: `L = oversampling · (N+1)`.
    pub oversampling: usize,
    /// Frequency components whose data norm is below `skip_tol` times the
    /// largest one are not evaluated.
    pub skip_tol: f64,
    pub condition_limit: f64,
    pub parallel: bool,
}

impl Default for CqOptions {
    fn default() -> Self {
        Self {
            radius: None,
            oversampling: DEFAULT_OVERSAMPLING,
            skip_tol: 0.0,
            condition_limit: DEFAULT_EIGEN_CONDITION_LIMIT,
            parallel: true,
        }
    }
}

/// Default frequencies per step. With one frequency per step the scaled FFT
/// cannot do better than about `√ε`; four brings weights and identity
/// reproduction down to `~1e-13`.
pub const DEFAULT_OVERSAMPLING: usize = 4;

/// `ρ = ε^{1/((φ+1)(N+1))}`, balancing the aliasing error `ρ^L` against
/// roundoff amplified by `ρ^{-N}`. For `φ = 1` this is `ε^{1/(2(N+1))}`.
pub fn default_radius(n_steps: usize, oversampling: usize) -> f64 {
    let len = ((oversampling + 1) * (n_steps + 1)) as f64;
    f64::EPSILON.powf(1.0 / len)
}

impl CqOptions {
    pub fn with_oversampling(oversampling: usize) -> Self {
        Self {
            oversampling,
            ..Self::default()
        }
    }

    fn resolve(&self, n_steps: usize) -> Result<(usize, f64)> {
        if self.oversampling == 0 {
            return Err(Error::Contract("oversampling must be at least 1".into()));
        }
        let len = self.oversampling * (n_steps + 1);
        let radius = self
            .radius
            .unwrap_or_else(|| default_radius(n_steps, self.oversampling));
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::Contract(format!("contour radius must lie in (0, 1), got {radius}")));
        }
        Ok((len, radius))
    }
}

/// Explicit weights `W_0..=W_N`, each an `(mD) × (mD)` block.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    pub tableau: String,
    pub symbol: String,
    pub k: f64,
    pub dim: usize,
    pub stages: usize,
    pub blocks: Vec<CMatrix>,
}

impl WeightSequence {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// CSV with header `n,block_row,block_col,re,im`, one line per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,block_row,block_col,re,im\n");
        for (n, w) in self.blocks.iter().enumerate() {
            for i in 0..w.nrows() {
                for j in 0..w.ncols() {
                    let z = w[(i, j)];
                    let _ = writeln!(out, "{n},{i},{j},{:e},{:e}", z.re, z.im);
                }
            }
        }
        out
    }
}

struct Contour {
    len: usize,
    radius: f64,
}

impl Contour {
    fn zeta(&self, q: usize) -> Complex64 {
        let theta = 2.0 * std::f64::consts::PI * q as f64 / self.len as f64;
        Complex64::from_polar(self.radius, theta)
    }

    /// Frequencies that must be evaluated; the rest follow by conjugation
    /// when `half` is set.
    fn evaluated(&self, half: bool) -> usize {
        if half {
            self.len / 2 + 1
        } else {
            self.len
        }
    }
}

fn eigen_at(t: &ButcherTableau, zeta: Complex64, limit: f64) -> Result<DeltaEigen> {
    t.delta_eigen(zeta, limit)
}

fn eval_symbol(sym: &dyn Symbol, s: Complex64, x: &CMatrix) -> Result<CMatrix> {
    if !(s.re > 0.0) || !(s.re > sym.sigma0()) {
        return Err(Error::Contract(format!(
            "{} evaluated at s = {s}, outside its half-plane Re s > {}",
            sym.name(),
            sym.sigma0().max(0.0)
        )));
    }
    sym.apply(s, x).map_err(|e| Error::SymbolEvaluation {
        s,
        source: Box::new(e),
    })
}

fn map_frequencies<T: Send>(
    parallel: bool,
    count: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    if parallel {
        (0..count).into_par_iter().map(f).collect()
    } else {
        (0..count).map(f).collect()
    }
}

/// CQ weights `W_0..=W_N` of `sym` for the given tableau and grid.
pub fn weights(
    sym: &dyn Symbol,
    t: &ButcherTableau,
    grid: &StageGrid,
    opts: &CqOptions,
) -> Result<WeightSequence> {
    let n = grid.n_steps();
    let (len, radius) = opts.resolve(n)?;
    let contour = Contour { len, radius };
    let m = t.stages();
    let d = sym.dim();
    let md = m * d;
    let half = sym.is_real();
    let eye = CMatrix::identity(d, d);

    let blocks = map_frequencies(opts.parallel, contour.evaluated(half), |q| {
        let eig = eigen_at(t, contour.zeta(q), opts.condition_limit)?;
        // W(ζ) = (P ⊗ I) diag(K(λ_i/k)) (P⁻¹ ⊗ I)
        let mut out = CMatrix::zeros(md, md);
        for (i, &lambda) in eig.values.iter().enumerate() {
            let kd = eval_symbol(sym, lambda / grid.k(), &eye)?;
            for a in 0..m {
                for b in 0..m {
                    let coef = eig.vectors[(a, i)] * eig.inverse[(i, b)];
                    let mut view = out.view_mut((a * d, b * d), (d, d));
                    view += &kd * coef;
                }
            }
        }
        Ok(out)
    })?;

    // W_n = ρ^{-n}/L Σ_q W(ζ_q) e^{-2πi nq/L}
    let fft = FftPlanner::new().plan_fft_forward(len);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let mut result = vec![CMatrix::zeros(md, md); n + 1];
    for a in 0..md {
        for b in 0..md {
            for q in 0..len {
                buf[q] = if q < blocks.len() {
                    blocks[q][(a, b)]
                } else {
                    blocks[len - q][(a, b)].conj()
                };
            }
            fft.process(&mut buf);
            let mut scale = 1.0 / len as f64;
            for (nn, w) in result.iter_mut().enumerate() {
                w[(a, b)] = buf[nn] * scale;
                scale /= radius;
            }
        }
    }
    Ok(WeightSequence {
        tableau: t.name().to_string(),
        symbol: sym.name(),
        k: grid.k(),
        dim: d,
        stages: m,
        blocks: result,
    })
}

/// Row vector `bᵀA⁻¹`, or `None` for stiffly accurate tableaux where it is
/// the last unit vector.
fn output_row(t: &ButcherTableau) -> Result<Option<Vec<f64>>> {
    if t.is_stiffly_accurate() {
        return Ok(None);
    }
    let ainv = t.a_inverse()?;
    let m = t.stages();
    Ok(Some(
        (0..m)
            .map(|j| (0..m).map(|i| t.b()[i] * ainv[(i, j)]).sum())
            .collect(),
    ))
}

fn check_samples(samples: &[CMatrix], rows: usize, steps: usize) -> Result<usize> {
    if samples.len() != steps {
        return Err(Error::Contract(format!(
            "expected stage samples for {steps} steps, got {}",
            samples.len()
        )));
    }
    let cols = samples.first().map_or(1, |s| s.ncols());
    for (j, s) in samples.iter().enumerate() {
        if s.nrows() != rows || s.ncols() != cols {
            return Err(Error::Contract(format!(
                "step {j}: samples are {}x{}, expected {rows}x{cols}",
                s.nrows(),
                s.ncols()
            )));
        }
    }
    Ok(cols)
}

/// `u(t_{n+1}) = bᵀA⁻¹ Σ_{j≤n} W_{n-j} g_j` for `n = 0..=N`.
///
/// `samples[j]` stacks `g(t_j + c_l k)` stage by stage (`mD × r`).
pub fn apply_convolution(
    w: &WeightSequence,
    t: &ButcherTableau,
    samples: &[CMatrix],
) -> Result<Vec<CMatrix>> {
    let (m, d) = (w.stages, w.dim);
    if t.stages() != m {
        return Err(Error::Contract(format!(
            "weights have {m} stages, tableau {} has {}",
            t.name(),
            t.stages()
        )));
    }
    let cols = check_samples(samples, m * d, w.len())?;
    let row = output_row(t)?;
    let mut out = Vec::with_capacity(w.len());
    for n in 0..w.len() {
        let mut acc = CMatrix::zeros(d, cols);
        for (j, g) in samples.iter().enumerate().take(n + 1) {
            let wn = &w.blocks[n - j];
            match &row {
                None => {
                    let last = wn.rows((m - 1) * d, d);
                    acc += last * g;
                }
                Some(r) => {
                    let full = wn * g;
                    for (l, &rl) in r.iter().enumerate() {
                        acc += full.rows(l * d, d) * Complex64::new(rl, 0.0);
                    }
                }
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// `K(∂ₜᵏ)g` at `t_1..=t_{N+1}` without forming weights.
///
/// `samples[j]` (`j = 0..=N`) stacks `g(t_j + c_l k)` stage by stage as an
/// `mD × r` matrix; the `r` columns are independent data sets that share
/// every symbol evaluation.
pub fn apply_symbol(
    sym: &dyn Symbol,
    t: &ButcherTableau,
    grid: &StageGrid,
    samples: &[CMatrix],
    opts: &CqOptions,
) -> Result<Vec<CMatrix>> {
    let n = grid.n_steps();
    let m = t.stages();
    let d = sym.dim();
    let md = m * d;
    if m != grid.stages() {
        return Err(Error::Contract(format!(
            "grid has {} stages, tableau {} has {m}",
            grid.stages(),
            t.name()
        )));
    }
    let cols = check_samples(samples, md, n + 1)?;
    let (len, radius) = opts.resolve(n)?;
    let contour = Contour { len, radius };
    let row = output_row(t)?;
    let real_data = samples.iter().all(|s| s.iter().all(|z| z.im == 0.0));
    let half = real_data && sym.is_real();

    // Sequences laid out entry-major: seq[e * len + j], e = (row, col) of the sample.
    let entries = md * cols;
    let mut seq = vec![Complex64::new(0.0, 0.0); entries * len];
    let mut scale = 1.0;
    for (j, g) in samples.iter().enumerate() {
        for c in 0..cols {
            for r in 0..md {
                seq[(c * md + r) * len + j] = g[(r, c)] * scale;
            }
        }
        scale *= radius;
    }
    let mut planner = FftPlanner::new();
    let backward: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(len);
    backward.process(&mut seq);

    let count = contour.evaluated(half);
    let frequency_data = |q: usize| -> CMatrix {
        CMatrix::from_fn(md, cols, |r, c| seq[(c * md + r) * len + q])
    };
    let eigens: Vec<DeltaEigen> = map_frequencies(opts.parallel, count, |q| {
        eigen_at(t, contour.zeta(q), opts.condition_limit)
    })?;

    // Y_i = Σ_l (P⁻¹)_{il} G_l, the data in the eigenbasis.
    let project = |eig: &DeltaEigen, g: &CMatrix| -> Vec<CMatrix> {
        (0..m)
            .map(|i| {
                let mut y = CMatrix::zeros(d, cols);
                for l in 0..m {
                    y += g.rows(l * d, d) * eig.inverse[(i, l)];
                }
                y
            })
            .collect()
    };

    let threshold = if opts.skip_tol > 0.0 {
        let max = (0..count)
            .map(|q| {
                project(&eigens[q], &frequency_data(q))
                    .iter()
                    .map(|y| y.norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        opts.skip_tol * max
    } else {
        0.0
    };

    let responses: Vec<CMatrix> = map_frequencies(opts.parallel, count, |q| {
        let eig = &eigens[q];
        let ys = project(eig, &frequency_data(q));
        let mut out = CMatrix::zeros(d, cols);
        // Only the stages picked out by bᵀA⁻¹ are assembled.
        let stage_weights: Vec<(usize, Complex64)> = match &row {
            None => vec![(m - 1, Complex64::new(1.0, 0.0))],
            Some(r) => r
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(l, &v)| (l, Complex64::new(v, 0.0)))
                .collect(),
        };
        for (i, y) in ys.iter().enumerate() {
            let norm = y.norm();
            if norm == 0.0 || norm <= threshold {
                continue;
            }
            let z = eval_symbol(sym, eig.values[i] / grid.k(), y)?;
            let coef: Complex64 = stage_weights
                .iter()
                .map(|&(l, v)| v * eig.vectors[(l, i)])
                .sum();
            out += z * coef;
        }
        Ok(out)
    })?;

    let out_entries = d * cols;
    let mut back = vec![Complex64::new(0.0, 0.0); out_entries * len];
    for q in 0..len {
        let (src, conj) = if q < count { (q, false) } else { (len - q, true) };
        let u = &responses[src];
        for c in 0..cols {
            for r in 0..d {
                let v = u[(r, c)];
                back[(c * d + r) * len + q] = if conj { v.conj() } else { v };
            }
        }
    }
    let forward = planner.plan_fft_forward(len);
    forward.process(&mut back);

    let mut result = Vec::with_capacity(n + 1);
    let mut scale = 1.0 / len as f64;
    for step in 0..=n {
        let mut u = CMatrix::from_fn(d, cols, |r, c| back[(c * d + r) * len + step] * scale);
        if half {
            u.iter_mut().for_each(|z| z.im = 0.0);
        }
        result.push(u);
        scale /= radius;
    }
    Ok(result)
}

/// Observed convergence rates of an error sequence.
#[derive(Debug, Clone)]
pub struct RateFit {
    /// `log(e_i/e_{i+1}) / log(k_i/k_{i+1})` for consecutive pairs.
    pub pair_rates: Vec<f64>,
    /// Least-squares slope of `log e` against `log k`.
    pub slope: f64,
}

pub fn convergence_rate(errors: &[(f64, f64)]) -> Result<RateFit> {
    if errors.len() < 2 {
        return Err(Error::Contract(format!(
            "a rate needs at least two (k, error) points, got {}",
            errors.len()
        )));
    }
    for w in errors.windows(2) {
        if !(w[1].0 < w[0].0) {
            return Err(Error::Contract("timesteps must be strictly decreasing".into()));
        }
    }
    if let Some(&(k, e)) = errors.iter().find(|&&(k, e)| !(k > 0.0 && e > 0.0)) {
        return Err(Error::Contract(format!(
            "rates need positive timesteps and errors, got ({k}, {e})"
        )));
    }
    let pair_rates = errors
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect();
    let pts: Vec<(f64, f64)> = errors.iter().map(|&(k, e)| (k.ln(), e.ln())).collect();
    let nf = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(RateFit {
        pair_rates,
        slope: sxy / sxx,
    })
}
