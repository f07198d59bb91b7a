//! Quadrature kernels: Gauss–Legendre panels, an adaptive driver, and
//! composite-Simpson grid rules.

use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("quadrature did not converge to tol {tol} on [{a}, {b}] (residual {residual})")]
    NotConverged {
        a: f64,
        b: f64,
        tol: f64,
        residual: f64,
    },
}

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Newton iteration on the Legendre recurrence; standard construction.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let pk = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = pk;
                }
                dp = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// The default order-32 panel rule used by the line integrals.
pub fn gl32() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(32))
}

pub fn gauss_rule(order: usize) -> GaussRule {
    GaussRule::new(order)
}

/// Adaptive Gauss–Legendre: bisect panels until whole-vs-halves agree
/// within the local tolerance budget.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    rule: &GaussRule,
) -> Result<f64, QuadError> {
    const MAX_DEPTH: usize = 40;
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        rule: &GaussRule,
        depth: usize,
    ) -> Result<f64, QuadError> {
        let m = 0.5 * (a + b);
        let left = rule.integrate(a, m, f);
        let right = rule.integrate(m, b, f);
        let err = (left + right - whole).abs();
        // never demand agreement below the roundoff floor of the values
        let floor = 1e-15 * (left.abs() + right.abs() + 1.0);
        if err <= tol.max(floor) || (b - a).abs() < 1e-14 {
            return Ok(left + right);
        }
        if depth == 0 {
            return Err(QuadError::NotConverged {
                a,
                b,
                tol,
                residual: err,
            });
        }
        let half_tol = 0.5 * tol;
        Ok(rec(f, a, m, left, half_tol, rule, depth - 1)?
            + rec(f, m, b, right, half_tol, rule, depth - 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    let whole = rule.integrate(a, b, f);
    rec(f, a, b, whole, tol, rule, MAX_DEPTH)
}

/// Composite Simpson weights for `n` panels (`n` even) over a span of
/// length `len`: h/3 * [1, 4, 2, 4, ..., 4, 1].
pub fn simpson_weights(n: usize, len: f64) -> Vec<f64> {
    assert!(
        n >= 2 && n.is_multiple_of(2),
        "composite Simpson needs an even panel count"
    );
    let h = len / n as f64;
    let mut w = vec![0.0; n + 1];
    w[0] = h / 3.0;
    w[n] = h / 3.0;
    for (i, wi) in w.iter_mut().enumerate().take(n).skip(1) {
        *wi = if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    w
}
