//! Flux, the action function, the Calabi invariant, and orbit actions.
//!
//! Throughout, the fixed primitive of ω = dx∧dy/2π is β = (x/2π) dy, and
//! the action function f of (ψ, y₊) is the unique solution of
//! df = ψ*β − β with f = y₊ (+ the integer offset N) on the outer boundary.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::map::{AnnulusPoint, LiftedMap, MapError, Mat2, Profile, TAU};
use crate::quad::{self, GaussRule, QuadError};

#[derive(Debug, Error)]
pub enum ActionError {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("correction field must be constant on each boundary circle")]
    FieldNotBoundaryConstant,
}

/// Quadrature configuration: Gauss–Legendre order for line panels, the
/// tensor grid for area integrals, and the adaptive tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureSettings {
    pub line_order: usize,
    pub area_grid: (usize, usize),
    pub tol: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            line_order: 32,
            area_grid: (512, 512),
            tol: 1e-9,
        }
    }
}

/// Everything needed to evaluate action-related quantities of one map.
pub struct ActionContext<'a> {
    pub map: &'a LiftedMap,
    /// Normalization shift N: the outer boundary value of f is y₊ + N.
    pub offset: i64,
    pub quad: QuadratureSettings,
    rule: GaussRule,
}

impl<'a> ActionContext<'a> {
    pub fn new(map: &'a LiftedMap) -> Self {
        Self::with_settings(map, 0, QuadratureSettings::default())
    }

    pub fn with_offset(map: &'a LiftedMap, offset: i64) -> Self {
        Self::with_settings(map, offset, QuadratureSettings::default())
    }

    pub fn with_settings(map: &'a LiftedMap, offset: i64, quad: QuadratureSettings) -> Self {
        let rule = GaussRule::new(quad.line_order);
        ActionContext {
            map,
            offset,
            quad,
            rule,
        }
    }

    fn boundary_plus(&self) -> f64 {
        self.map.y_plus + self.offset as f64
    }

    /// (ψ*β − β) evaluated on the constant direction `(dx, dy)` at the
    /// point of the segment `start + t * (dx, dy)`.
    fn pullback_integrand(
        &self,
        start: AnnulusPoint,
        dir: [f64; 2],
        t: f64,
    ) -> Result<f64, MapError> {
        let p = AnnulusPoint {
            x: start.x + t * dir[0],
            y: start.y + t * dir[1],
        };
        let (q, j) = apply_with_jacobian(self.map, p)?;
        let dy_img = j.0[1][0] * dir[0] + j.0[1][1] * dir[1];
        Ok((q.x * dy_img - p.x * dir[1]) / TAU)
    }

    /// ∫ (ψ*β − β) along the straight segment from `a` to `b`.
    pub fn segment_integral(&self, a: AnnulusPoint, b: AnnulusPoint) -> Result<f64, ActionError> {
        self.segment_integral_with_tol(a, b, self.quad.tol)
    }

    fn segment_integral_with_tol(
        &self,
        a: AnnulusPoint,
        b: AnnulusPoint,
        tol: f64,
    ) -> Result<f64, ActionError> {
        let dir = [b.x - a.x, b.y - a.y];
        if dir[0] == 0.0 && dir[1] == 0.0 {
            return Ok(0.0);
        }
        let err = std::cell::RefCell::new(None);
        let f = |t: f64| match self.pullback_integrand(a, dir, t) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        };
        let val = quad::integrate_adaptive(&f, 0.0, 1.0, tol, &self.rule)?;
        if let Some(e) = err.into_inner() {
            return Err(e.into());
        }
        Ok(val)
    }

    /// Flux of the lift: F = y₊ + y₋ − ∫_c (ψ*β − β) along c(t) = (t, 0).
    pub fn flux(&self) -> Result<f64, ActionError> {
        let line = self.segment_integral(
            AnnulusPoint { x: -1.0, y: 0.0 },
            AnnulusPoint { x: 1.0, y: 0.0 },
        )?;
        Ok(self.map.y_plus + self.map.y_minus - line)
    }

    /// f(p) integrated along the horizontal segment from (1, y_p) to p.
    pub fn action_at(&self, p: AnnulusPoint) -> Result<f64, ActionError> {
        let start = AnnulusPoint { x: 1.0, y: p.y };
        Ok(self.boundary_plus() + self.segment_integral(start, p)?)
    }

    /// f(p) along an arbitrary polyline from ∂₊A; used by the
    /// path-independence checks. The first vertex must satisfy x = 1.
    pub fn action_along(&self, path: &[AnnulusPoint]) -> Result<f64, ActionError> {
        assert!(path.len() >= 2 && (path[0].x - 1.0).abs() < 1e-12);
        let mut acc = self.boundary_plus();
        for w in path.windows(2) {
            acc += self.segment_integral(w[0], w[1])?;
        }
        Ok(acc)
    }

    /// f(p) by fixed knot-aligned Gauss panels along the horizontal
    /// segment. Produces a value that varies smoothly with p, which the
    /// finite-difference form checks require (adaptive panel splits are
    /// not smooth in the endpoint).
    pub fn action_at_smooth(&self, p: AnnulusPoint) -> Result<f64, ActionError> {
        let mut cuts: Vec<f64> = self
            .map
            .radial_breakpoints()
            .into_iter()
            .filter(|&c| c > p.x + 1e-12 && c < 1.0 - 1e-12)
            .collect();
        cuts.push(p.x);
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        let mut acc = self.boundary_plus();
        let err = std::cell::RefCell::new(None);
        for piece in cuts.windows(2) {
            let (lo, hi) = (piece[0], piece[1]);
            if hi - lo < 1e-14 {
                continue;
            }
            // integrate from x = 1 downwards: sign handled by orientation
            let a = AnnulusPoint { x: hi, y: p.y };
            let dir = [lo - hi, 0.0];
            let f = |t: f64| match self.pullback_integrand(a, dir, t) {
                Ok(v) => v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    0.0
                }
            };
            let panels = 4;
            for i in 0..panels {
                let t0 = i as f64 / panels as f64;
                let t1 = (i + 1) as f64 / panels as f64;
                acc += self.rule.integrate(t0, t1, &f);
            }
        }
        if let Some(e) = err.into_inner() {
            return Err(e.into());
        }
        Ok(acc)
    }

    /// f on a tensor grid: one cumulative x-sweep per y-line (lines are
    /// data-parallel; summation order within each line is fixed).
    pub fn action_grid(&self) -> Result<ActionGrid, ActionError> {
        let (nx, ny) = self.quad.area_grid;
        assert!(nx >= 2 && nx % 2 == 0 && ny >= 2 && ny % 2 == 0);
        let panel_tol = self.quad.tol / nx as f64;
        let lines: Vec<Result<Vec<f64>, ActionError>> = (0..ny)
            .into_par_iter()
            .map(|jy| {
                let y = TAU * jy as f64 / ny as f64;
                let mut vals = vec![0.0; nx + 1];
                vals[0] = self.boundary_plus();
                for i in 0..nx {
                    let xa = 1.0 - 2.0 * i as f64 / nx as f64;
                    let xb = 1.0 - 2.0 * (i + 1) as f64 / nx as f64;
                    let inc = self.segment_integral_with_tol(
                        AnnulusPoint { x: xa, y },
                        AnnulusPoint { x: xb, y },
                        panel_tol,
                    )?;
                    vals[i + 1] = vals[i] + inc;
                }
                Ok(vals)
            })
            .collect();
        let mut values = Vec::with_capacity((ny + 1) * (nx + 1));
        for line in lines {
            values.extend(line?);
        }
        // periodicity in y: close the grid with the first line
        let first_line = values[..nx + 1].to_vec();
        values.extend(first_line);
        Ok(ActionGrid { nx, ny, values })
    }

    /// Calabi invariant 𝒱 = ∫_A f ω / ∫_A ω (the offset N is included:
    /// the returned value is 𝒱(ψ̃) + N).
    pub fn calabi(&self) -> Result<f64, ActionError> {
        Ok(self.action_grid()?.average())
    }

    /// Recompute 𝒱 with the primitive β' = β + dg and report the
    /// discrepancy; Lemma-level the difference is exactly zero.
    pub fn calabi_independence_check(
        &self,
        field: &CorrectionField,
    ) -> Result<IndependenceReport, ActionError> {
        field.check_boundary_constant()?;
        let v_beta = self.calabi()?;
        let (nx, ny) = self.quad.area_grid;
        let panel_tol = self.quad.tol / nx as f64;
        let lines: Vec<Result<Vec<f64>, ActionError>> = (0..ny)
            .into_par_iter()
            .map(|jy| {
                let y = TAU * jy as f64 / ny as f64;
                let mut vals = vec![0.0; nx + 1];
                vals[0] = self.boundary_plus();
                for i in 0..nx {
                    let xa = 1.0 - 2.0 * i as f64 / nx as f64;
                    let xb = 1.0 - 2.0 * (i + 1) as f64 / nx as f64;
                    let a = AnnulusPoint { x: xa, y };
                    let dir = [xb - xa, 0.0];
                    let integrand = |t: f64| -> Result<f64, MapError> {
                        let p = AnnulusPoint {
                            x: a.x + t * dir[0],
                            y: a.y + t * dir[1],
                        };
                        let (q, j) = apply_with_jacobian(self.map, p)?;
                        let base =
                            (q.x * (j.0[1][0] * dir[0] + j.0[1][1] * dir[1]) - p.x * dir[1]) / TAU;
                        // (ψ*dg − dg)(dir) = ∇g(ψ p)·(J dir) − ∇g(p)·dir
                        let gq = field.gradient(q.x, q.y);
                        let gp = field.gradient(p.x, p.y);
                        let jdir = j.apply(dir);
                        Ok(base + gq[0] * jdir[0] + gq[1] * jdir[1]
                            - (gp[0] * dir[0] + gp[1] * dir[1]))
                    };
                    let err = std::cell::RefCell::new(None);
                    let f = |t: f64| match integrand(t) {
                        Ok(v) => v,
                        Err(e) => {
                            err.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    };
                    let inc = quad::integrate_adaptive(&f, 0.0, 1.0, panel_tol, &self.rule)?;
                    if let Some(e) = err.into_inner() {
                        return Err(e.into());
                    }
                    vals[i + 1] = vals[i] + inc;
                }
                Ok(vals)
            })
            .collect();
        let mut values = Vec::with_capacity((ny + 1) * (nx + 1));
        for line in lines {
            values.extend(line?);
        }
        let first_line = values[..nx + 1].to_vec();
        values.extend(first_line);
        let v_beta_prime = ActionGrid { nx, ny, values }.average();
        Ok(IndependenceReport {
            v_beta,
            v_beta_prime,
            diff: (v_beta - v_beta_prime).abs(),
        })
    }

    /// 𝒜(γ) = Σᵢ f(γᵢ).
    pub fn total_action(&self, points: &[AnnulusPoint]) -> Result<f64, ActionError> {
        let mut acc = 0.0;
        for p in points {
            acc += self.action_at(*p)?;
        }
        Ok(acc)
    }

    pub fn mean_action(&self, points: &[AnnulusPoint]) -> Result<f64, ActionError> {
        Ok(self.total_action(points)? / points.len() as f64)
    }

    /// Scaling checks for the q-fold power: 𝒱(ψ̃^q) = q 𝒱(ψ̃), the
    /// pointwise identity f_q = Σ_{i<q} f∘ψ^i at orbit points, and the
    /// mean-action scaling for orbits whose period q divides.
    /// Both Calabi invariants are computed with offset 0.
    pub fn power_map_scaling_check(
        &self,
        q: usize,
        orbits: &[OrbitRecord],
    ) -> Result<PowerScalingReport, ActionError> {
        assert!(q >= 1);
        let base_ctx = ActionContext::with_settings(self.map, 0, self.quad.clone());
        let power = self.map.power(q);
        let power_ctx = ActionContext::with_settings(&power, 0, self.quad.clone());
        let calabi_base = base_ctx.calabi()?;
        let calabi_power = power_ctx.calabi()?;
        let mut orbit_checks = Vec::new();
        for orbit in orbits {
            let mut pointwise_max_dev: f64 = 0.0;
            for p in &orbit.points {
                let mut sum = 0.0;
                let mut z = *p;
                for _ in 0..q {
                    sum += base_ctx.action_at(z)?;
                    z = self.map.apply(z)?;
                }
                let fq = power_ctx.action_at(*p)?;
                pointwise_max_dev = pointwise_max_dev.max((fq - sum).abs());
            }
            // induced ψ^q-orbit through points[0] when q divides the period
            let mean_scaling_dev = if orbit.period % q == 0 {
                let induced: Vec<AnnulusPoint> = orbit.points.iter().step_by(q).copied().collect();
                let mean_q = power_ctx.mean_action(&induced)?;
                let mean_base = base_ctx.mean_action(&orbit.points)?;
                Some((mean_q - q as f64 * mean_base).abs())
            } else {
                None
            };
            orbit_checks.push(OrbitScalingCheck {
                pointwise_max_dev,
                mean_scaling_dev,
            });
        }
        Ok(PowerScalingReport {
            q,
            calabi_base,
            calabi_power,
            expected_power: q as f64 * calabi_base,
            dev: (calabi_power - q as f64 * calabi_base).abs(),
            orbit_checks,
        })
    }
}

fn apply_with_jacobian(map: &LiftedMap, p: AnnulusPoint) -> Result<(AnnulusPoint, Mat2), MapError> {
    use crate::map::MapKind;
    match &map.kind {
        MapKind::Composition(maps) => {
            let mut j = Mat2::IDENTITY;
            let mut q = p;
            for m in maps {
                let (next, jm) = apply_with_jacobian(m, q)?;
                j = jm.mul(&j);
                q = next;
            }
            Ok((q, j))
        }
        _ => Ok((map.apply(p)?, map.jacobian(p)?)),
    }
}

/// Action-function values on the closed tensor grid
/// x_i = 1 − 2i/nx (i = 0..=nx), y_j = 2π j/ny (j = 0..=ny).
pub struct ActionGrid {
    pub nx: usize,
    pub ny: usize,
    values: Vec<f64>,
}

impl ActionGrid {
    pub fn value(&self, ix: usize, jy: usize) -> f64 {
        self.values[jy * (self.nx + 1) + ix]
    }

    pub fn x_node(&self, ix: usize) -> f64 {
        1.0 - 2.0 * ix as f64 / self.nx as f64
    }

    pub fn y_node(&self, jy: usize) -> f64 {
        TAU * jy as f64 / self.ny as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// ω-average over the annulus by tensor composite Simpson
    /// (pairwise reduction across lines keeps the result deterministic).
    pub fn average(&self) -> f64 {
        let wx = quad::simpson_weights(self.nx, 2.0);
        let wy = quad::simpson_weights(self.ny, TAU);
        let line_sums: Vec<f64> = (0..=self.ny)
            .map(|j| {
                let mut acc = 0.0;
                for (i, wxi) in wx.iter().enumerate() {
                    acc += wxi * self.value(i, j);
                }
                acc
            })
            .collect();
        let total = pairwise_sum(
            &line_sums
                .iter()
                .zip(&wy)
                .map(|(l, w)| l * w)
                .collect::<Vec<f64>>(),
        );
        total / (2.0 * TAU)
    }
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// A scalar field g with β' = β + dg used by the primitive-independence
/// check; it must be constant on each boundary circle.
#[derive(Debug, Clone)]
pub enum CorrectionField {
    /// g(x, y) = G(x).
    Radial(Profile),
    /// g(x, y) = G(x) · sin(k y); needs G(±1) = 0.
    Modulated { profile: Profile, harmonic: u32 },
}

impl CorrectionField {
    fn check_boundary_constant(&self) -> Result<(), ActionError> {
        match self {
            CorrectionField::Radial(_) => Ok(()),
            CorrectionField::Modulated { profile, .. } => {
                if profile.value(1.0).abs() < 1e-12 && profile.value(-1.0).abs() < 1e-12 {
                    Ok(())
                } else {
                    Err(ActionError::FieldNotBoundaryConstant)
                }
            }
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        match self {
            CorrectionField::Radial(g) => g.value(x),
            CorrectionField::Modulated { profile, harmonic } => {
                profile.value(x) * (*harmonic as f64 * y).sin()
            }
        }
    }

    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        match self {
            CorrectionField::Radial(g) => [g.derivative(x), 0.0],
            CorrectionField::Modulated { profile, harmonic } => {
                let k = *harmonic as f64;
                [
                    profile.derivative(x) * (k * y).sin(),
                    profile.value(x) * k * (k * y).cos(),
                ]
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceReport {
    pub v_beta: f64,
    pub v_beta_prime: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitScalingCheck {
    pub pointwise_max_dev: f64,
    pub mean_scaling_dev: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerScalingReport {
    pub q: usize,
    pub calabi_base: f64,
    pub calabi_power: f64,
    pub expected_power: f64,
    pub dev: f64,
    pub orbit_checks: Vec<OrbitScalingCheck>,
}

/// A periodic orbit with its action data.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitRecord {
    /// One period of the orbit, projected to y ∈ [0, 2π).
    pub points: Vec<AnnulusPoint>,
    pub period: usize,
    pub winding: i64,
    pub total_action: f64,
    pub mean_action: f64,
    pub residual: f64,
    pub family_suspected: bool,
}
