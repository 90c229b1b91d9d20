//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated; polygon vertices are `x y` pairs separated by `;`. Every key
//! has a default, and [`RunConfig::resolved`] writes all of them back out in
//! a form that parses to the same configuration.

use std::fmt::Write as _;
use std::path::Path;

use rkcq::bem2d::{mesh_polygon, BoundarySpace, Point, QuadParams, L_SHAPE, UNIT_SQUARE};
use rkcq::butcher::ButcherTableau;
use rkcq::cq::CqOptions;
use rkcq::timedomain::{IncidentWave, Method, TimeDomainOptions};
use rkcq::Complex64;

use crate::CliError;

/// Documented keys, in the order they are echoed.
pub const KEYS: &[(&str, &str)] = &[
    ("geometry", "`lshape`, `square`, or a vertex list `x y; x y; ...`"),
    ("target_h", "largest panel length away from corners"),
    ("grading", "panel grading exponent toward corners (1 = uniform)"),
    ("degree", "polynomial degree of the trace space"),
    ("tableau", "Runge-Kutta tableau id, e.g. radau-iia-3"),
    ("methods", "comma list of standard, differentiated"),
    ("t_final", "final time T"),
    ("ladder", "comma list of step counts N, increasing"),
    ("direction", "unit propagation direction d as `dx, dy`"),
    ("tau0", "pulse centre τ₀"),
    ("alpha", "pulse width parameter α"),
    ("radius", "contour radius, or `auto`"),
    ("oversampling", "frequencies per step in the contour FFT"),
    ("skip_tol", "relative data size below which a frequency is skipped"),
    ("quad_kappa", "largest |s|·length integrated without subdivision"),
    ("quad_eta", "separation ratio for direct tensor Gauss"),
    ("quad_decay_cutoff", "drop interactions with Re(s)·dist above this"),
    ("quad_extra_order", "Gauss points added to every panel rule"),
    ("error_norm", "`absolute` or `relative` (divided by the largest reference norm)"),
    ("sigma0", "sector abscissa σ₀ for the bound scan"),
    ("delta", "sector angle margin δ for the bound scan"),
    ("scan_moduli", "comma list of |s| for the bound scan"),
    ("scan_angles", "number of arguments per |s|, spread over |θ| ≤ π/2 - δ"),
    ("manufactured_s", "frequency `re, im` of the manufactured check"),
    ("manufactured_source", "point source `x, y` outside the domain"),
    ("manufactured_refinements", "number of h-halvings after the base mesh"),
    ("weights_symbol_power", "μ in the scalar symbol s^μ written by `weights`"),
    ("weights_steps", "N for `weights`"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    LShape,
    Square,
    Polygon(Vec<Point>),
}

impl Geometry {
    pub fn vertices(&self) -> Vec<Point> {
        match self {
            Geometry::LShape => L_SHAPE.to_vec(),
            Geometry::Square => UNIT_SQUARE.to_vec(),
            Geometry::Polygon(v) => v.clone(),
        }
    }

    fn to_value(&self) -> String {
        match self {
            Geometry::LShape => "lshape".into(),
            Geometry::Square => "square".into(),
            Geometry::Polygon(v) => v
                .iter()
                .map(|p| format!("{:?} {:?}", p[0], p[1]))
                .collect::<Vec<_>>()
                .join("; "),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorNorm {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub target_h: f64,
    pub grading: f64,
    pub degree: usize,
    pub tableau: String,
    pub methods: Vec<Method>,
    pub t_final: f64,
    pub ladder: Vec<usize>,
    pub direction: Point,
    pub tau0: f64,
    pub alpha: f64,
    pub radius: Option<f64>,
    pub oversampling: usize,
    pub skip_tol: f64,
    pub quad: QuadParams,
    pub error_norm: ErrorNorm,
    pub sigma0: f64,
    pub delta: f64,
    pub scan_moduli: Vec<f64>,
    pub scan_angles: usize,
    pub manufactured_s: Complex64,
    pub manufactured_source: Point,
    pub manufactured_refinements: usize,
    pub weights_symbol_power: i32,
    pub weights_steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let wave = IncidentWave::standard();
        let td = TimeDomainOptions::default();
        Self {
            geometry: Geometry::LShape,
            target_h: 0.125,
            grading: 2.0,
            degree: 5,
            tableau: "radau-iia-3".into(),
            methods: vec![Method::Standard, Method::Differentiated],
            t_final: 12.0,
            ladder: vec![48, 96, 192, 384, 768],
            direction: wave.direction(),
            tau0: wave.tau0(),
            alpha: wave.alpha(),
            radius: None,
            oversampling: td.cq.oversampling,
            skip_tol: td.cq.skip_tol,
            quad: td.quad,
            error_norm: ErrorNorm::Absolute,
            sigma0: 1.0,
            delta: 0.2,
            scan_moduli: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            scan_angles: 1,
            manufactured_s: Complex64::new(2.0, 1.0),
            manufactured_source: [2.0, 2.0],
            manufactured_refinements: 2,
            weights_symbol_power: -1,
            weights_steps: 16,
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Config(format!("{key} = {value:?}: {what}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v.parse().map_err(|_| bad(key, v, "expected a number"))?;
    if !x.is_finite() {
        return Err(bad(key, v, "must be finite"));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize, CliError> {
    v.parse().map_err(|_| bad(key, v, "expected a non-negative integer"))
}

fn parse_list<T>(key: &str, v: &str, item: impl Fn(&str, &str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    if v.trim().is_empty() {
        return Err(bad(key, v, "empty list"));
    }
    v.split(',').map(|t| item(key, t.trim())).collect()
}

fn parse_pair(key: &str, v: &str) -> Result<[f64; 2], CliError> {
    let xs = parse_list(key, v, parse_f64)?;
    if xs.len() != 2 {
        return Err(bad(key, v, "expected two comma separated numbers"));
    }
    Ok([xs[0], xs[1]])
}

fn list_value<T: std::fmt::Debug>(xs: &[T]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses and validates. Keys not listed in [`KEYS`] and repeated keys
    /// are errors.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, found {line:?}", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(CliError::Config(format!("line {}: key `{key}` given twice", lineno + 1)));
            }
            cfg.set(key, value)?;
            seen.push(key.to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "geometry" => {
                self.geometry = match v {
                    "lshape" => Geometry::LShape,
                    "square" => Geometry::Square,
                    _ => {
                        let pts = v
                            .split(';')
                            .map(|p| {
                                let xy: Vec<&str> = p.split_whitespace().collect();
                                if xy.len() != 2 {
                                    return Err(bad(key, v, "vertices are `x y` pairs separated by `;`"));
                                }
                                Ok([parse_f64(key, xy[0])?, parse_f64(key, xy[1])?])
                            })
                            .collect::<Result<Vec<_>, _>>()?;
                        Geometry::Polygon(pts)
                    }
                }
            }
            "target_h" => self.target_h = parse_f64(key, v)?,
            "grading" => self.grading = parse_f64(key, v)?,
            "degree" => self.degree = parse_usize(key, v)?,
            "tableau" => self.tableau = v.to_string(),
            "methods" => {
                self.methods = parse_list(key, v, |_, t| Method::parse(t).map_err(|e| CliError::Config(e.to_string())))?
            }
            "t_final" => self.t_final = parse_f64(key, v)?,
            "ladder" => self.ladder = parse_list(key, v, parse_usize)?,
            "direction" => self.direction = parse_pair(key, v)?,
            "tau0" => self.tau0 = parse_f64(key, v)?,
            "alpha" => self.alpha = parse_f64(key, v)?,
            "radius" => self.radius = if v == "auto" { None } else { Some(parse_f64(key, v)?) },
            "oversampling" => self.oversampling = parse_usize(key, v)?,
            "skip_tol" => self.skip_tol = parse_f64(key, v)?,
            "quad_kappa" => self.quad.kappa = parse_f64(key, v)?,
            "quad_eta" => self.quad.eta = parse_f64(key, v)?,
            "quad_decay_cutoff" => self.quad.decay_cutoff = parse_f64(key, v)?,
            "quad_extra_order" => self.quad.extra_order = parse_usize(key, v)?,
            "error_norm" => {
                self.error_norm = match v {
                    "absolute" => ErrorNorm::Absolute,
                    "relative" => ErrorNorm::Relative,
                    _ => return Err(bad(key, v, "expected `absolute` or `relative`")),
                }
            }
            "sigma0" => self.sigma0 = parse_f64(key, v)?,
            "delta" => self.delta = parse_f64(key, v)?,
            "scan_moduli" => self.scan_moduli = parse_list(key, v, parse_f64)?,
            "scan_angles" => self.scan_angles = parse_usize(key, v)?,
            "manufactured_s" => {
                let p = parse_pair(key, v)?;
                self.manufactured_s = Complex64::new(p[0], p[1]);
            }
            "manufactured_source" => self.manufactured_source = parse_pair(key, v)?,
            "manufactured_refinements" => self.manufactured_refinements = parse_usize(key, v)?,
            "weights_symbol_power" => {
                self.weights_symbol_power = v.parse().map_err(|_| bad(key, v, "expected an integer"))?
            }
            "weights_steps" => self.weights_steps = parse_usize(key, v)?,
            _ => {
                let known: Vec<&str> = KEYS.iter().map(|k| k.0).collect();
                return Err(CliError::Config(format!("unknown key `{key}`; known keys: {}", known.join(", "))));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let err = |m: String| Err(CliError::Config(m));
        if let Geometry::Polygon(v) = &self.geometry {
            if v.len() < 3 {
                return err(format!("polygon needs at least 3 vertices, got {}", v.len()));
            }
        }
        if !(self.target_h > 0.0) {
            return err(format!("target_h must be positive, got {}", self.target_h));
        }
        if !(self.grading >= 1.0) {
            return err(format!("grading must be at least 1, got {}", self.grading));
        }
        ButcherTableau::from_id(&self.tableau).map_err(|e| CliError::Config(e.to_string()))?;
        if self.methods.is_empty() {
            return err("no methods given".into());
        }
        if !(self.t_final > 0.0) {
            return err(format!("t_final must be positive, got {}", self.t_final));
        }
        if self.ladder.is_empty() || self.ladder.contains(&0) {
            return err("ladder needs positive step counts".into());
        }
        if self.ladder.windows(2).any(|w| w[1] <= w[0]) {
            return err(format!("ladder must increase: {:?}", self.ladder));
        }
        IncidentWave::new(self.direction, self.tau0, self.alpha).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(r) = self.radius {
            if !(r > 0.0 && r < 1.0) {
                return err(format!("radius must lie in (0, 1), got {r}"));
            }
        }
        if self.oversampling == 0 {
            return err("oversampling must be at least 1".into());
        }
        if !(self.skip_tol >= 0.0 && self.skip_tol < 1.0) {
            return err(format!("skip_tol must lie in [0, 1), got {}", self.skip_tol));
        }
        if !(self.quad.kappa > 0.0 && self.quad.eta > 0.0 && self.quad.decay_cutoff > 0.0) {
            return err("quadrature parameters must be positive".into());
        }
        if !(self.sigma0 > 0.0) {
            return err(format!("sigma0 must be positive, got {}", self.sigma0));
        }
        if !(self.delta > 0.0 && self.delta < std::f64::consts::FRAC_PI_2) {
            return err(format!("delta must lie in (0, π/2), got {}", self.delta));
        }
        if self.scan_angles == 0 || self.scan_moduli.iter().any(|&m| !(m > 0.0)) {
            return err("bound scan needs positive moduli and at least one angle".into());
        }
        if !(self.manufactured_s.re > 0.0) {
            return err(format!("manufactured_s needs a positive real part, got {}", self.manufactured_s));
        }
        if self.weights_steps == 0 {
            return err("weights_steps must be positive".into());
        }
        Ok(())
    }

    /// Every key with its value in effect, one `key = value` line each.
    pub fn resolved(&self) -> String {
        let mut out = String::from("# resolved configuration: every value used by the run\n");
        let q = &self.quad;
        let values: Vec<String> = vec![
            self.geometry.to_value(),
            format!("{:?}", self.target_h),
            format!("{:?}", self.grading),
            self.degree.to_string(),
            self.tableau.clone(),
            self.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(", "),
            format!("{:?}", self.t_final),
            list_value(&self.ladder),
            list_value(&self.direction),
            format!("{:?}", self.tau0),
            format!("{:?}", self.alpha),
            self.radius.map_or("auto".into(), |r| format!("{r:?}")),
            self.oversampling.to_string(),
            format!("{:?}", self.skip_tol),
            format!("{:?}", q.kappa),
            format!("{:?}", q.eta),
            format!("{:?}", q.decay_cutoff),
            q.extra_order.to_string(),
            match self.error_norm {
                ErrorNorm::Absolute => "absolute".into(),
                ErrorNorm::Relative => "relative".into(),
            },
            format!("{:?}", self.sigma0),
            format!("{:?}", self.delta),
            list_value(&self.scan_moduli),
            self.scan_angles.to_string(),
            format!("{:?}, {:?}", self.manufactured_s.re, self.manufactured_s.im),
            list_value(&self.manufactured_source),
            self.manufactured_refinements.to_string(),
            self.weights_symbol_power.to_string(),
            self.weights_steps.to_string(),
        ];
        debug_assert_eq!(values.len(), KEYS.len());
        for ((key, _), v) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{key} = {v}");
        }
        out
    }

    pub fn tableau(&self) -> Result<ButcherTableau, CliError> {
        ButcherTableau::from_id(&self.tableau).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn wave(&self) -> Result<IncidentWave, CliError> {
        IncidentWave::new(self.direction, self.tau0, self.alpha).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn space_with_h(&self, target_h: f64) -> Result<BoundarySpace, CliError> {
        let boundary = mesh_polygon(&self.geometry.vertices(), target_h, self.grading)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(BoundarySpace::new(boundary, self.degree))
    }

    pub fn space(&self) -> Result<BoundarySpace, CliError> {
        self.space_with_h(self.target_h)
    }

    pub fn time_domain_options(&self) -> TimeDomainOptions {
        TimeDomainOptions {
            cq: CqOptions {
                radius: self.radius,
                oversampling: self.oversampling,
                skip_tol: self.skip_tol,
                ..CqOptions::default()
            },
            quad: self.quad,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.resolved()).unwrap(), cfg);
        let text = "geometry = 0 0; 2 0; 2 1; 0 1\nladder = 10, 20\nradius = 0.9\nmethods = differentiated\n";
        let custom = RunConfig::parse(text).unwrap();
        assert_eq!(custom.geometry.vertices().len(), 4);
        assert_eq!(RunConfig::parse(&custom.resolved()).unwrap(), custom);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "unknown_key = 1",
            "ladder = 10, 5",
            "sigma0 = 0",
            "sigma0 = -1",
            "degree = two",
            "tableau = radau-iia-x",
            "direction = 1, 1",
            "target_h = 1\ntarget_h = 2",
            "no equals sign",
            "radius = 1.5",
            "methods = ",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Config(_))), "{text:?} accepted");
        }
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = RunConfig::parse("# header\n\n  t_final = 6  \n").unwrap();
        assert_eq!(cfg.t_final, 6.0);
    }
}
