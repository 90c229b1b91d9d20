//! The subcommands. Each writes its outputs and a `resolved-config.txt`
//! sidecar into the output directory and returns what it computed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rkcq::bem2d::{assemble_single_layer, manufactured_error, operator_norm, DtnOperator, ManufacturedError, Side, Symmetry};
use rkcq::butcher::{ButcherTableau, ValidationReport};
use rkcq::cq::{power_symbol, weights as cq_weights, CqOptions, StageGrid};
use rkcq::timedomain::{LadderFit, Method, Scattering, SchemeRun};
use rkcq::Complex64;

use crate::config::{ErrorNorm, RunConfig};
use crate::plot::{loglog, Guide, Series};
use crate::CliError;

pub const RESOLVED_CONFIG: &str = "resolved-config.txt";
pub const CONVERGENCE_HEADER: &str = "method,tableau,N,k,max_energy_error,pair_rate";
pub const BOUND_SCAN_HEADER: &str = "s_re,s_im,norm_dtn,norm_dti";
pub const MANUFACTURED_HEADER: &str = "h,dofs,absolute_error,relative_error";
/// Rates are fitted over this many of the finest valid ladder pairs.
pub const FIT_PAIRS: usize = 3;

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn prepare(out: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    fs::write(out.join(RESOLVED_CONFIG), cfg.resolved())?;
    Ok(())
}

/// Unknown ids are configuration errors.
pub fn validate_tableau(id: &str) -> Result<ValidationReport, CliError> {
    let t = ButcherTableau::from_id(id).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(t.validate())
}

/// CQ weights of `s^μ` on `weights_steps` steps of `[0, T]`, as
/// `weights.csv`.
pub fn weights(cfg: &RunConfig, out: &Path) -> Result<PathBuf, CliError> {
    prepare(out, cfg)?;
    let t = cfg.tableau()?;
    let grid = StageGrid::covering(cfg.t_final, cfg.weights_steps, &t)?;
    let opts = CqOptions {
        radius: cfg.radius,
        oversampling: cfg.oversampling,
        ..CqOptions::default()
    };
    let w = cq_weights(&power_symbol(cfg.weights_symbol_power), &t, &grid, &opts)?;
    let path = out.join("weights.csv");
    fs::write(&path, w.to_csv())?;
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub method: Method,
    pub predicted_rate: usize,
    pub fit: LadderFit,
    /// Slope over the [`FIT_PAIRS`] finest valid pairs.
    pub fitted_rate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceSummary {
    pub csv: PathBuf,
    pub svg: PathBuf,
    /// Spatial error floor, in the units of the error column.
    pub floor: f64,
    pub methods: Vec<MethodSummary>,
    pub warnings: Vec<String>,
}

impl ConvergenceSummary {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }
}

/// Runs the step ladder for every configured method, writing
/// `convergence.csv` row by row and `convergence.svg` at the end.
pub fn convergence(cfg: &RunConfig, out: &Path) -> Result<ConvergenceSummary, CliError> {
    prepare(out, cfg)?;
    let t = cfg.tableau()?;
    let sc = Scattering::new(cfg.space()?, cfg.wave()?, cfg.t_final, cfg.time_domain_options())?;
    let finest = sc.grid(&t, *cfg.ladder.last().unwrap())?;
    let scale = match cfg.error_norm {
        ErrorNorm::Absolute => 1.0,
        ErrorNorm::Relative => 1.0 / sc.max_reference_norm(&finest)?,
    };
    let floor = sc.spatial_floor(&finest)? * scale;

    let csv = out.join("convergence.csv");
    let mut w = BufWriter::new(File::create(&csv)?);
    writeln!(w, "{CONVERGENCE_HEADER}")?;
    w.flush()?;

    let mut runs: Vec<Vec<SchemeRun>> = vec![Vec::new(); cfg.methods.len()];
    for &n in &cfg.ladder {
        let batch = sc.run(&t, n, &cfg.methods).map_err(|e| {
            let names: Vec<&str> = cfg.methods.iter().map(|m| m.name()).collect();
            CliError::Runtime(format!("run {} N={n} ({}) failed: {e}", t.name(), names.join(", ")))
        })?;
        for (i, mut run) in batch.into_iter().enumerate() {
            run.errors.iter_mut().for_each(|e| *e *= scale);
            let rate = runs[i].last().map(|prev: &SchemeRun| {
                (prev.max_error() / run.max_error()).ln() / (prev.grid.k() / run.grid.k()).ln()
            });
            writeln!(
                w,
                "{},{},{n},{},{},{}",
                run.method.name(),
                t.name(),
                num(run.grid.k()),
                num(run.max_error()),
                rate.map_or(String::new(), num)
            )?;
            // Keep only what the fit and plot need.
            run.outputs.clear();
            run.reference.clear();
            runs[i].push(run);
        }
        w.flush()?;
    }
    drop(w);

    let mut warnings = Vec::new();
    if cfg.ladder.len() < 2 {
        warnings.push("ladder has a single entry: no rate can be fitted".to_string());
    }
    let (p, q) = (t.classical_order(), t.stage_order());
    let mut methods = Vec::new();
    for (i, &method) in cfg.methods.iter().enumerate() {
        let refs: Vec<&SchemeRun> = runs[i].iter().collect();
        let fit = LadderFit::new(&refs, floor)?;
        let fitted_rate = fit.fitted_rate(FIT_PAIRS);
        if cfg.ladder.len() >= 2 && fitted_rate.is_none() {
            warnings.push(format!("{}: no ladder pair lies above the error floor", method.name()));
        }
        methods.push(MethodSummary {
            method,
            predicted_rate: method.predicted_rate(q, p),
            fit,
            fitted_rate,
        });
    }

    let series: Vec<Series> = methods
        .iter()
        .map(|m| Series {
            label: m.method.name().to_string(),
            points: m.fit.points.iter().map(|&(_, k, e)| (k, e)).collect(),
        })
        .collect();
    let guides: Vec<Guide> = methods
        .iter()
        .filter_map(|m| {
            let &(_, k, e) = m.fit.points.first()?;
            Some(Guide {
                label: format!("k^{} ({})", m.predicted_rate, m.method.name()),
                rate: m.predicted_rate as f64,
                anchor: (k, e),
            })
        })
        .collect();
    let ylabel = match cfg.error_norm {
        ErrorNorm::Absolute => "max energy error",
        ErrorNorm::Relative => "max relative energy error",
    };
    let svg = out.join("convergence.svg");
    fs::write(&svg, loglog(&format!("{} on {} dofs", t.name(), sc.space().dim()), "k", ylabel, &series, &guides))?;

    Ok(ConvergenceSummary {
        csv,
        svg,
        floor,
        methods,
        warnings,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct BoundRow {
    pub s: Complex64,
    pub norm_dtn: f64,
    pub norm_dti: f64,
}

/// Frequencies `|s|·e^{iθ}` of the scan, θ spread evenly over
/// `|θ| ≤ π/2 - δ`. Points with `Re s < σ₀` lie outside the sector and are
/// left out.
pub fn scan_points(cfg: &RunConfig) -> Vec<Complex64> {
    let theta_max = std::f64::consts::FRAC_PI_2 - cfg.delta;
    let thetas: Vec<f64> = if cfg.scan_angles == 1 {
        vec![0.0]
    } else {
        (0..cfg.scan_angles)
            .map(|j| -theta_max + 2.0 * theta_max * j as f64 / (cfg.scan_angles - 1) as f64)
            .collect()
    };
    let mut pts = Vec::new();
    for &r in &cfg.scan_moduli {
        for &th in &thetas {
            let s = Complex64::from_polar(r, th);
            if s.re >= cfg.sigma0 {
                pts.push(s);
            }
        }
    }
    pts
}

/// Norms of the interior `DtN(s)` and `DtI(s)` on the continuous functions
/// of the trace space, from the `H¹` norm (`M + S`) to the `V(1)` energy
/// norm, as `bound_scan.csv`. Discontinuous data is not in `H¹(Γ)` and is
/// left out.
pub fn bound_scan(cfg: &RunConfig, out: &Path) -> Result<Vec<BoundRow>, CliError> {
    cfg.validate()?;
    prepare(out, cfg)?;
    let points = scan_points(cfg);
    if points.is_empty() {
        return Err(CliError::Config("no scan frequency lies in the sector Re s ≥ sigma0".into()));
    }
    let space = cfg.space()?;
    let v1 = assemble_single_layer(&space, Complex64::new(1.0, 0.0))?.entries;
    let e = space.continuous_embedding()?;
    let h1 = e.adjoint() * (space.mass() + space.stiffness()) * &e;
    let path = out.join("bound_scan.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "{BOUND_SCAN_HEADER}")?;
    let mut rows = Vec::new();
    for s in points {
        let op = DtnOperator::with_params(&space, s, Symmetry::Mirror, cfg.quad)?;
        let norm_dtn = operator_norm(&(op.matrix(Side::Interior, false)? * &e), &v1, &h1)?;
        let norm_dti = operator_norm(&(op.matrix(Side::Interior, true)? * &e), &v1, &h1)?;
        writeln!(w, "{},{},{},{}", num(s.re), num(s.im), num(norm_dtn), num(norm_dti))?;
        w.flush()?;
        rows.push(BoundRow { s, norm_dtn, norm_dti });
    }
    Ok(rows)
}

/// Manufactured DtN errors on `target_h` and its successive halvings, as
/// `manufactured.csv`.
pub fn manufactured(cfg: &RunConfig, out: &Path) -> Result<Vec<(f64, ManufacturedError)>, CliError> {
    prepare(out, cfg)?;
    let path = out.join("manufactured.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "{MANUFACTURED_HEADER}")?;
    let mut rows = Vec::new();
    for r in 0..=cfg.manufactured_refinements {
        let h = cfg.target_h / f64::from(1u32 << r);
        let space = cfg.space_with_h(h)?;
        let e = manufactured_error(&space, cfg.manufactured_s, cfg.manufactured_source, cfg.quad, None)
            .map_err(|e| match e {
                rkcq::Error::Domain(m) => CliError::Config(m),
                other => other.into(),
            })?;
        writeln!(w, "{},{},{},{}", num(h), e.dofs, num(e.absolute), num(e.relative))?;
        w.flush()?;
        rows.push((h, e));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_points_cover_the_sector() {
        let mut cfg = RunConfig::default();
        assert_eq!(scan_points(&cfg).len(), 5);
        assert!(scan_points(&cfg).iter().all(|s| s.im == 0.0));
        cfg.scan_angles = 3;
        cfg.scan_moduli = vec![64.0];
        let pts = scan_points(&cfg);
        assert_eq!(pts.len(), 3);
        let theta_max = std::f64::consts::FRAC_PI_2 - cfg.delta;
        assert!((pts[0].arg() + theta_max).abs() < 1e-12 && (pts[2].arg() - theta_max).abs() < 1e-12);
        // |s| = 4 at the sector edge has Re s < 1
        cfg.scan_moduli = vec![4.0];
        assert_eq!(scan_points(&cfg).len(), 1);
    }

    #[test]
    fn number_format_is_fixed() {
        assert_eq!(num(0.125), "1.250000000000e-1");
        assert_eq!(num(3.0), "3.000000000000e0");
    }
}
