//! Gauss-Legendre rules and composite panel helpers.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Points per panel used throughout the crate.
pub const PANEL_ORDER: usize = 20;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// n-point rule on [-1, 1]; nodes by Newton iteration on P_n from the
    /// Tricomi initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 20-point rule.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(PANEL_ORDER))
    }

    /// Nodes and weights mapped to `[a, b]`, appended to the output vectors.
    pub fn map_into(&self, a: f64, b: f64, xs: &mut Vec<f64>, ws: &mut Vec<f64>) {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            xs.push(c + h * x);
            ws.push(h * w);
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Equally spaced breakpoints for `panels` panels on `[a, b]`.
pub fn uniform_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    (0..=panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .collect()
}

/// Splits panels near `center` until every panel within a few widths of it
/// is narrower than `width`.
pub fn refine_near(breaks: &[f64], center: f64, width: f64, max_panels: usize) -> Vec<f64> {
    let mut out = breaks.to_vec();
    loop {
        let mut next = Vec::with_capacity(out.len() * 2);
        let mut changed = false;
        next.push(out[0]);
        for w in out.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = b - a;
            let dist = if center < a {
                a - center
            } else if center > b {
                center - b
            } else {
                0.0
            };
            if len > width && dist < 2.0 * len {
                next.push(0.5 * (a + b));
                changed = true;
            }
            next.push(b);
        }
        out = next;
        if !changed || out.len() > max_panels {
            return out;
        }
    }
}

/// Composite nodes and weights for the given breakpoints.
pub fn composite(breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::standard();
    let mut xs = Vec::with_capacity(breaks.len() * PANEL_ORDER);
    let mut ws = Vec::with_capacity(breaks.len() * PANEL_ORDER);
    for w in breaks.windows(2) {
        rule.map_into(w[0], w[1], &mut xs, &mut ws);
    }
    (xs, ws)
}
