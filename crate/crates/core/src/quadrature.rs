//! Gauss-Legendre rules and the composite rules built from them.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Largest Gauss-Legendre order kept in the static cache.
pub const MAX_ORDER: usize = 64;

/// A quadrature rule on the reference interval `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Legendre polynomials `P_0..=P_n` at `x ∈ [-1, 1]` together with their
/// derivatives.
pub fn legendre_with_derivatives(n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for l in 1..n {
        let lf = l as f64;
        p[l + 1] = ((2.0 * lf + 1.0) * x * p[l] - lf * p[l - 1]) / (lf + 1.0);
        // P'_{l+1} = P'_{l-1} + (2l+1) P_l
        dp[l + 1] = dp[l - 1] + (2.0 * lf + 1.0) * p[l];
    }
    (p, dp)
}

fn compute_rule(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi's initial guess followed by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivatives(n, x);
            dp = d[n];
            let dx = p[n] / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivatives(n, x);
                dp = d[n];
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]; nodes ascending
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 0.5 * w;
    }
    Rule { nodes, weights }
}

/// Cached `n`-point Gauss-Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> &'static Rule {
    static CACHE: OnceLock<Vec<OnceLock<Rule>>> = OnceLock::new();
    assert!(
        (1..=MAX_ORDER).contains(&n),
        "Gauss-Legendre order {n} out of range"
    );
    let table = CACHE.get_or_init(|| (0..=MAX_ORDER).map(|_| OnceLock::new()).collect());
    table[n].get_or_init(|| compute_rule(n))
}

/// Tanh-sinh rule on `[0, 1]`, for integrands with integrable endpoint
/// singularities such as `log x` or `x^{-1/2}`.
///
/// Nodes near `0` are computed without cancellation, so the rule resolves a
/// singularity at the left endpoint to full precision. Cached.
pub fn tanh_sinh() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        const STEP: f64 = 1.0 / 12.0;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let half_pi = 0.5 * PI;
        let mut k: i64 = -64;
        loop {
            let t = k as f64 * STEP;
            let u = half_pi * t.sinh();
            // x = 1 / (1 + e^{-2u}), dx/du = 2 e^{-2|u|} / (1 + e^{-2|u|})²
            let e = (-2.0 * u.abs()).exp();
            let x = if u >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
            let w = STEP * half_pi * t.cosh() * 2.0 * e / ((1.0 + e) * (1.0 + e));
            if k > 0 && w < 1e-30 {
                break;
            }
            // Nodes closer than 1e-30 to an endpoint only add overflow risk.
            if w > 1e-30 && x > 1e-30 && x < 1.0 {
                nodes.push(x);
                weights.push(w);
            }
            k += 1;
        }
        Rule { nodes, weights }
    })
}

/// Uniform breakpoints on `[a, b]` with no piece longer than `max_piece`.
pub fn uniform_breakpoints(a: f64, b: f64, max_piece: f64) -> Vec<f64> {
    let pieces = ((b - a) / max_piece).ceil().max(1.0) as usize;
    (0..=pieces)
        .map(|i| if i == pieces { b } else { a + (b - a) * i as f64 / pieces as f64 })
        .collect()
}

/// Composite Gauss rule of order `order` per interval on the given
/// breakpoints, returned as absolute `(node, weight)` pairs.
pub fn composite(breaks: &[f64], order: usize) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(order);
    let mut out = Vec::with_capacity((breaks.len().saturating_sub(1)) * order);
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = b - a;
        if h <= 0.0 {
            continue;
        }
        for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
            out.push((a + h * x, h * wt));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_integrate_polynomials_exactly() {
        for n in 1..=40 {
            let rule = gauss_legendre(n);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 1.0).abs() < 1e-14, "n={n}");
            for deg in 0..(2 * n) {
                let approx = rule.integrate(|x| x.powi(deg as i32));
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((approx - exact).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        let rule = tanh_sinh();
        let approx = rule.integrate(|x| x.ln());
        assert!((approx + 1.0).abs() < 1e-14, "{approx}");
        // ∫₀¹ log(x) cos(x) dx = -Si(1)
        let approx = rule.integrate(|x| x.ln() * x.cos());
        assert!((approx + 0.946_083_070_367_183).abs() < 1e-14, "{approx}");
        let approx = rule.integrate(|x| x.sqrt().recip());
        assert!((approx - 2.0).abs() < 1e-12, "{approx}");
        assert!(rule.len() < 120, "{}", rule.len());
    }

    #[test]
    fn legendre_derivatives_match_closed_forms() {
        let (p, dp) = legendre_with_derivatives(3, 0.3);
        assert!((p[2] - 0.5 * (3.0 * 0.09 - 1.0)).abs() < 1e-15);
        assert!((dp[3] - 0.5 * (15.0 * 0.09 - 3.0)).abs() < 1e-15);
    }
}
