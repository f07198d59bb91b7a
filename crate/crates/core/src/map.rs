//! Lifted area-preserving diffeomorphisms of the annulus
//! A = [-1,1] x (R/2πZ), represented in the universal cover
//! [-1,1] x R. Every map here preserves the boundary circles as sets and
//! carries declared boundary rotation numbers for a chosen lift.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TAU: f64 = 2.0 * PI;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("point x = {x} outside the annulus [-1, 1]")]
    Domain { x: f64 },
    #[error("implicit midpoint step failed to converge (step {step}, residual {residual})")]
    IntegratorDivergence { step: f64, residual: f64 },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
}

/// A point of the lifted annulus: x in [-1,1], y in R (angular lift).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusPoint {
    pub x: f64,
    pub y: f64,
}

impl AnnulusPoint {
    pub fn new(x: f64, y: f64) -> Result<Self, MapError> {
        if !(-1.0..=1.0).contains(&x) {
            return Err(MapError::Domain { x });
        }
        Ok(AnnulusPoint { x, y })
    }

    /// Projection of the angular coordinate to [0, 2π).
    pub fn y_mod(&self) -> f64 {
        self.y.rem_euclid(TAU)
    }

    pub fn projected(&self) -> AnnulusPoint {
        AnnulusPoint {
            x: self.x,
            y: self.y_mod(),
        }
    }
}

/// Row-major 2x2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// Transpose action, used for pulling back one-form coefficients.
    pub fn apply_transpose(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[1][0] * v[1],
            self.0[0][1] * v[0] + self.0[1][1] * v[1],
        ]
    }
}

/// Quintic smoothstep: s(0)=0, s(1)=1, s' = s'' = 0 at both ends.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

pub fn smoothstep_deriv(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        0.0
    } else {
        30.0 * t * t * (t - 1.0) * (t - 1.0)
    }
}

/// Antiderivative of the quintic smoothstep with S(0) = 0.
pub fn smoothstep_antideriv(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        // S(1) = 1/2, constant slope 1 afterwards
        0.5 + (t - 1.0)
    } else {
        t * t * t * t * (t * (t - 3.0) + 2.5)
    }
}

/// A C¹ scalar profile on [-1, 1]. Plateau-based profiles are C² across
/// their joins (quintic blends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// Plateau values `plateaus[i]` held on \[knots\[2i\], knots\[2i+1\]\],
    /// quintic smoothstep blends in the gaps; clamped outside the knots.
    Smoothstep {
        plateaus: Vec<f64>,
        knots: Vec<f64>,
    },
}

impl Profile {
    pub fn constant(value: f64) -> Profile {
        Profile::Constant { value }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Profile {
        Profile::Polynomial { coeffs }
    }

    pub fn smoothstep(plateaus: Vec<f64>, knots: Vec<f64>) -> Result<Profile, MapError> {
        if plateaus.is_empty() || knots.len() != 2 * plateaus.len() {
            return Err(MapError::InvalidProfile(format!(
                "need 2 knots per plateau, got {} plateaus and {} knots",
                plateaus.len(),
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(MapError::InvalidProfile("knots must be sorted".into()));
        }
        if knots[0] < -1.0 - 1e-12 || *knots.last().unwrap() > 1.0 + 1e-12 {
            return Err(MapError::InvalidProfile("knots must lie in [-1, 1]".into()));
        }
        Ok(Profile::Smoothstep { plateaus, knots })
    }

    /// Two plateaus joined by one blend: `lo` on [-1, -1+width_lo],
    /// `hi` on [1-width_hi, 1].
    pub fn step(lo: f64, hi: f64, width_lo: f64, width_hi: f64) -> Profile {
        Profile::smoothstep(
            vec![lo, hi],
            vec![-1.0, -1.0 + width_lo, 1.0 - width_hi, 1.0],
        )
        .expect("valid step profile")
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Profile::Smoothstep { plateaus, knots } => {
                let n = plateaus.len();
                if x <= knots[0] {
                    return plateaus[0];
                }
                for i in 0..n {
                    if x <= knots[2 * i + 1] {
                        return plateaus[i];
                    }
                    if i + 1 < n && x < knots[2 * i + 2] {
                        let t = (x - knots[2 * i + 1]) / (knots[2 * i + 2] - knots[2 * i + 1]);
                        return plateaus[i] + (plateaus[i + 1] - plateaus[i]) * smoothstep(t);
                    }
                }
                plateaus[n - 1]
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Profile::Constant { .. } => 0.0,
            Profile::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * x + k as f64 * c;
                }
                acc
            }
            Profile::Smoothstep { plateaus, knots } => {
                let n = plateaus.len();
                if x <= knots[0] {
                    return 0.0;
                }
                for i in 0..n {
                    if x <= knots[2 * i + 1] {
                        return 0.0;
                    }
                    if i + 1 < n && x < knots[2 * i + 2] {
                        let w = knots[2 * i + 2] - knots[2 * i + 1];
                        let t = (x - knots[2 * i + 1]) / w;
                        return (plateaus[i + 1] - plateaus[i]) * smoothstep_deriv(t) / w;
                    }
                }
                0.0
            }
        }
    }

    /// Exact definite integral over [lo, hi] ⊆ [-1, 1].
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        if lo > hi {
            return -self.integral(hi, lo);
        }
        match self {
            Profile::Constant { value } => value * (hi - lo),
            Profile::Polynomial { coeffs } => {
                let anti = |x: f64| -> f64 {
                    let mut acc = 0.0;
                    for (k, c) in coeffs.iter().enumerate().rev() {
                        acc = acc * x + c / (k as f64 + 1.0);
                    }
                    acc * x
                };
                anti(hi) - anti(lo)
            }
            Profile::Smoothstep { plateaus, knots } => {
                // Piecewise closed form: plateaus are constants, blends are
                // affine in the smoothstep antiderivative.
                let n = plateaus.len();
                let mut acc = 0.0;
                let mut add_plateau = |a: f64, b: f64, v: f64| {
                    let s = a.max(lo);
                    let e = b.min(hi);
                    if e > s {
                        acc += v * (e - s);
                    }
                };
                add_plateau(-1.0, knots[1], plateaus[0]);
                for i in 1..n {
                    let a = knots[2 * i];
                    let b = if 2 * i + 1 < knots.len() {
                        knots[2 * i + 1]
                    } else {
                        1.0
                    };
                    add_plateau(a, b.max(a), plateaus[i]);
                }
                add_plateau(knots[2 * n - 1], 1.0, plateaus[n - 1]);
                for i in 0..n.saturating_sub(1) {
                    let a = knots[2 * i + 1];
                    let b = knots[2 * i + 2];
                    if b <= a {
                        continue;
                    }
                    let s = a.max(lo);
                    let e = b.min(hi);
                    if e > s {
                        let w = b - a;
                        let dv = plateaus[i + 1] - plateaus[i];
                        let t0 = (s - a) / w;
                        let t1 = (e - a) / w;
                        acc += plateaus[i] * (e - s)
                            + dv * w * (smoothstep_antideriv(t1) - smoothstep_antideriv(t0));
                    }
                }
                acc
            }
        }
    }

    pub fn negated(&self) -> Profile {
        match self {
            Profile::Constant { value } => Profile::Constant { value: -value },
            Profile::Polynomial { coeffs } => Profile::Polynomial {
                coeffs: coeffs.iter().map(|c| -c).collect(),
            },
            Profile::Smoothstep { plateaus, knots } => Profile::Smoothstep {
                plateaus: plateaus.iter().map(|v| -v).collect(),
                knots: knots.clone(),
            },
        }
    }

    /// Radial positions where the profile is not analytic (blend joins).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Constant { .. } | Profile::Polynomial { .. } => Vec::new(),
            Profile::Smoothstep { knots, .. } => knots.clone(),
        }
    }

    /// Widths of the constant collars at the two ends, capped at 1.
    pub fn collar_widths(&self) -> (f64, f64) {
        match self {
            Profile::Constant { .. } => (1.0, 1.0),
            Profile::Polynomial { coeffs } => {
                if coeffs.iter().skip(1).all(|c| *c == 0.0) {
                    (1.0, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            Profile::Smoothstep { plateaus, knots } => {
                if plateaus.len() == 1 {
                    return (1.0, 1.0);
                }
                let minus = (knots[1] + 1.0).clamp(0.0, 1.0);
                let plus = (1.0 - knots[knots.len() - 2]).clamp(0.0, 1.0);
                (minus, plus)
            }
        }
    }
}

/// Parameters for a Hamiltonian bump supported in an embedded disk of the
/// annulus interior. The Hamiltonian is
/// `strength * chi(r² / radius²)` with `chi` the Wendland C² profile and
/// `r` the distance to `center` (angular part taken mod 2π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpParams {
    pub center: [f64; 2],
    pub radius: f64,
    pub strength: f64,
    pub time: f64,
    /// Implicit-midpoint step size.
    #[serde(default = "default_bump_step")]
    pub step: f64,
}

fn default_bump_step() -> f64 {
    1e-2
}

impl BumpParams {
    fn validate(&self) -> Result<(), MapError> {
        if self.radius <= 0.0 || self.radius >= PI {
            return Err(MapError::InvalidMap("bump radius must be in (0, π)".into()));
        }
        if self.center[0].abs() + self.radius >= 1.0 {
            return Err(MapError::InvalidMap(
                "bump support must stay inside the open annulus".into(),
            ));
        }
        if self.step <= 0.0 {
            return Err(MapError::InvalidMap("bump step must be positive".into()));
        }
        Ok(())
    }

    /// Hamiltonian vector field for ω = dx∧dy / 2π: X_H = 2π (∂H/∂y, -∂H/∂x).
    fn field(&self, x: f64, y: f64) -> [f64; 2] {
        let dx = x - self.center[0];
        // periodic representative in (-π, π]; the cut lies outside the support
        let dy = (y - self.center[1] + PI).rem_euclid(TAU) - PI;
        let r2 = self.radius * self.radius;
        let u = (dx * dx + dy * dy) / r2;
        if u >= 1.0 {
            return [0.0, 0.0];
        }
        // chi(u) = (1-u)^4 (4u+1), chi'(u) = -20 u (1-u)^3
        let om = 1.0 - u;
        let dchi = -20.0 * u * om * om * om;
        let hx = self.strength * dchi * 2.0 * dx / r2;
        let hy = self.strength * dchi * 2.0 * dy / r2;
        [TAU * hy, -TAU * hx]
    }

    fn flow(&self, p: AnnulusPoint, time: f64) -> Result<AnnulusPoint, MapError> {
        let n_steps = (time.abs() / self.step).ceil().max(1.0) as usize;
        let h = time / n_steps as f64;
        let mut z = [p.x, p.y];
        for _ in 0..n_steps {
            z = self.midpoint_step(z, h)?;
        }
        if !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&z[0]) {
            return Err(MapError::Domain { x: z[0] });
        }
        Ok(AnnulusPoint {
            x: z[0].clamp(-1.0, 1.0),
            y: z[1],
        })
    }

    /// One implicit-midpoint step: the midpoint m solves
    /// m = z + (h/2) X(m), by Newton with a finite-difference field
    /// Jacobian.
    fn midpoint_step(&self, z: [f64; 2], h: f64) -> Result<[f64; 2], MapError> {
        let mut m = z;
        let mut residual = f64::INFINITY;
        for _ in 0..50 {
            let v = self.field(m[0], m[1]);
            let g = [m[0] - z[0] - 0.5 * h * v[0], m[1] - z[1] - 0.5 * h * v[1]];
            residual = g[0].abs().max(g[1].abs());
            if residual < 1e-13 {
                return Ok([2.0 * m[0] - z[0], 2.0 * m[1] - z[1]]);
            }
            let fd = 1e-7;
            let vx = self.field(m[0] + fd, m[1]);
            let vy = self.field(m[0], m[1] + fd);
            // J = I − (h/2) DX
            let j = [
                [
                    1.0 - 0.5 * h * (vx[0] - v[0]) / fd,
                    -0.5 * h * (vy[0] - v[0]) / fd,
                ],
                [
                    -0.5 * h * (vx[1] - v[1]) / fd,
                    1.0 - 0.5 * h * (vy[1] - v[1]) / fd,
                ],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() < 1e-300 {
                break;
            }
            m[0] -= (g[0] * j[1][1] - g[1] * j[0][1]) / det;
            m[1] -= (g[1] * j[0][0] - g[0] * j[1][0]) / det;
        }
        Err(MapError::IntegratorDivergence { step: h, residual })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    Rigid { theta0: f64 },
    Twist { profile: Profile },
    RadialShear { profile: Profile },
    HamiltonianBump(BumpParams),
    Composition(Vec<LiftedMap>),
}

/// A lifted annulus diffeomorphism with its declared boundary data.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMap {
    pub kind: MapKind,
    pub y_plus: f64,
    pub y_minus: f64,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub admissible: bool,
}

impl LiftedMap {
    pub fn rigid(theta0: f64) -> LiftedMap {
        LiftedMap {
            kind: MapKind::Rigid { theta0 },
            y_plus: theta0,
            y_minus: theta0,
            delta_plus: 1.0,
            delta_minus: 1.0,
            admissible: true,
        }
    }

    pub fn twist(profile: Profile) -> LiftedMap {
        Self::from_profile(profile, false)
    }

    pub fn radial_shear(profile: Profile) -> LiftedMap {
        Self::from_profile(profile, true)
    }

    fn from_profile(profile: Profile, shear: bool) -> LiftedMap {
        let y_plus = profile.value(1.0);
        let y_minus = profile.value(-1.0);
        let (delta_minus, delta_plus) = profile.collar_widths();
        let admissible = delta_plus > 0.0 && delta_minus > 0.0;
        let kind = if shear {
            MapKind::RadialShear { profile }
        } else {
            MapKind::Twist { profile }
        };
        LiftedMap {
            kind,
            y_plus,
            y_minus,
            delta_plus,
            delta_minus,
            admissible,
        }
    }

    pub fn hamiltonian_bump(params: BumpParams) -> Result<LiftedMap, MapError> {
        params.validate()?;
        let delta_plus = (1.0 - params.center[0] - params.radius).clamp(0.0, 1.0);
        let delta_minus = (1.0 + params.center[0] - params.radius).clamp(0.0, 1.0);
        Ok(LiftedMap {
            kind: MapKind::HamiltonianBump(params),
            y_plus: 0.0,
            y_minus: 0.0,
            delta_plus,
            delta_minus,
            admissible: true,
        })
    }

    /// Factors are applied left to right: `composition([a, b]) = b ∘ a`.
    pub fn composition(maps: Vec<LiftedMap>) -> LiftedMap {
        let y_plus = maps.iter().map(|m| m.y_plus).sum();
        let y_minus = maps.iter().map(|m| m.y_minus).sum();
        let delta_plus = maps.iter().map(|m| m.delta_plus).fold(1.0, f64::min);
        let delta_minus = maps.iter().map(|m| m.delta_minus).fold(1.0, f64::min);
        let admissible = maps.iter().all(|m| m.admissible);
        LiftedMap {
            kind: MapKind::Composition(maps),
            y_plus,
            y_minus,
            delta_plus,
            delta_minus,
            admissible,
        }
    }

    pub fn power(&self, q: usize) -> LiftedMap {
        LiftedMap::composition(vec![self.clone(); q])
    }

    /// Evaluate the lift ψ̃(x, y).
    pub fn apply(&self, p: AnnulusPoint) -> Result<AnnulusPoint, MapError> {
        if !(-1.0..=1.0).contains(&p.x) {
            return Err(MapError::Domain { x: p.x });
        }
        match &self.kind {
            MapKind::Rigid { theta0 } => Ok(AnnulusPoint {
                x: p.x,
                y: p.y + TAU * theta0,
            }),
            MapKind::Twist { profile } | MapKind::RadialShear { profile } => Ok(AnnulusPoint {
                x: p.x,
                y: p.y + TAU * profile.value(p.x),
            }),
            MapKind::HamiltonianBump(params) => params.flow(p, params.time),
            MapKind::Composition(maps) => maps.iter().try_fold(p, |acc, m| m.apply(acc)),
        }
    }

    /// q-fold iterate in the lift.
    pub fn iterate(&self, q: usize, p: AnnulusPoint) -> Result<AnnulusPoint, MapError> {
        (0..q).try_fold(p, |acc, _| self.apply(acc))
    }

    /// Jacobian of the lift: analytic for closed-form kinds, chain rule
    /// through compositions, central finite differences (step `FD_STEP`)
    /// for the Hamiltonian flow.
    pub fn jacobian(&self, p: AnnulusPoint) -> Result<Mat2, MapError> {
        if !(-1.0..=1.0).contains(&p.x) {
            return Err(MapError::Domain { x: p.x });
        }
        match &self.kind {
            MapKind::Rigid { .. } => Ok(Mat2::IDENTITY),
            MapKind::Twist { profile } | MapKind::RadialShear { profile } => {
                Ok(Mat2([[1.0, 0.0], [TAU * profile.derivative(p.x), 1.0]]))
            }
            MapKind::HamiltonianBump(_) => self.jacobian_fd(p),
            MapKind::Composition(maps) => {
                let mut j = Mat2::IDENTITY;
                let mut q = p;
                for m in maps {
                    j = m.jacobian(q)?.mul(&j);
                    q = m.apply(q)?;
                }
                Ok(j)
            }
        }
    }

    pub const FD_STEP: f64 = 1e-6;

    /// Central-difference Jacobian at a caller-chosen step (the default
    /// step balances truncation and roundoff at double precision).
    pub fn jacobian_fd_with_step(&self, p: AnnulusPoint, h: f64) -> Result<Mat2, MapError> {
        assert!(h > 0.0);
        self.jacobian_fd_impl(p, h)
    }

    fn jacobian_fd(&self, p: AnnulusPoint) -> Result<Mat2, MapError> {
        self.jacobian_fd_impl(p, Self::FD_STEP)
    }

    fn jacobian_fd_impl(&self, p: AnnulusPoint, h: f64) -> Result<Mat2, MapError> {
        // one-sided at the radial boundary
        let (xa, xb) = if p.x + h > 1.0 {
            (p.x - h, p.x)
        } else if p.x - h < -1.0 {
            (p.x, p.x + h)
        } else {
            (p.x - h, p.x + h)
        };
        let fxa = self.apply(AnnulusPoint { x: xa, y: p.y })?;
        let fxb = self.apply(AnnulusPoint { x: xb, y: p.y })?;
        let fya = self.apply(AnnulusPoint { x: p.x, y: p.y - h })?;
        let fyb = self.apply(AnnulusPoint { x: p.x, y: p.y + h })?;
        let dx = xb - xa;
        Ok(Mat2([
            [(fxb.x - fxa.x) / dx, (fyb.x - fya.x) / (2.0 * h)],
            [(fxb.y - fxa.y) / dx, (fyb.y - fya.y) / (2.0 * h)],
        ]))
    }

    /// Radial positions at which some factor's profile loses analyticity;
    /// line integrands are smooth between consecutive breakpoints.
    pub fn radial_breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(&mut out);
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        out
    }

    fn collect_breakpoints(&self, out: &mut Vec<f64>) {
        match &self.kind {
            MapKind::Rigid { .. } => {}
            MapKind::Twist { profile } | MapKind::RadialShear { profile } => {
                out.extend(profile.breakpoints());
            }
            MapKind::HamiltonianBump(params) => {
                out.push(params.center[0] - params.radius);
                out.push(params.center[0] + params.radius);
            }
            MapKind::Composition(maps) => {
                for m in maps {
                    m.collect_breakpoints(out);
                }
            }
        }
    }

    /// Analytic inverse where one exists; the bump inverts by reversing the
    /// flow (exact up to the midpoint solve tolerance).
    pub fn inverse(&self) -> Option<LiftedMap> {
        match &self.kind {
            MapKind::Rigid { theta0 } => Some(LiftedMap::rigid(-theta0)),
            MapKind::Twist { profile } => Some(LiftedMap::twist(profile.negated())),
            MapKind::RadialShear { profile } => Some(LiftedMap::radial_shear(profile.negated())),
            MapKind::HamiltonianBump(params) => {
                let mut rev = params.clone();
                rev.time = -rev.time;
                LiftedMap::hamiltonian_bump(rev).ok()
            }
            MapKind::Composition(maps) => {
                let inv: Option<Vec<LiftedMap>> = maps.iter().rev().map(|m| m.inverse()).collect();
                Some(LiftedMap::composition(inv?))
            }
        }
    }
}

/// Report of `check_admissibility`.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub area_defect_max: f64,
    pub boundary_rotation_verified: bool,
    pub measured_collar_plus: f64,
    pub measured_collar_minus: f64,
}

/// Samples a grid_n × grid_n grid: max |det J - 1|, whether the declared
/// collar rotations hold to `tol`, and the largest collars on which the
/// declared rotations hold at grid resolution.
pub fn check_admissibility(map: &LiftedMap, grid_n: usize, tol: f64) -> AdmissibilityReport {
    assert!(grid_n >= 2);
    let xs: Vec<f64> = (0..grid_n)
        .map(|i| -1.0 + 2.0 * i as f64 / (grid_n - 1) as f64)
        .collect();
    let ys: Vec<f64> = (0..grid_n)
        .map(|j| TAU * j as f64 / grid_n as f64)
        .collect();

    let mut area_defect_max: f64 = 0.0;
    for &x in &xs {
        for &y in &ys {
            if let Ok(j) = map.jacobian(AnnulusPoint { x, y }) {
                area_defect_max = area_defect_max.max((j.det() - 1.0).abs());
            }
        }
    }

    let rotates_by = |x: f64, shift: f64| -> bool {
        ys.iter().all(|&y| {
            map.apply(AnnulusPoint { x, y })
                .is_ok_and(|q| (q.x - x).abs() <= tol && (q.y - (y + shift)).abs() <= tol)
        })
    };

    // scan rows inward from each boundary
    let mut collar_plus = 0.0;
    for &x in xs.iter().rev() {
        if rotates_by(x, TAU * map.y_plus) {
            collar_plus = (1.0 - x).min(1.0);
        } else {
            break;
        }
    }
    let mut collar_minus = 0.0;
    for &x in xs.iter() {
        if rotates_by(x, TAU * map.y_minus) {
            collar_minus = (x + 1.0).min(1.0);
        } else {
            break;
        }
    }

    // declared collars hold (zero-width collar checks only the boundary row)
    let verified_plus = xs
        .iter()
        .filter(|&&x| x >= 1.0 - map.delta_plus - 1e-12)
        .all(|&x| rotates_by(x, TAU * map.y_plus));
    let verified_minus = xs
        .iter()
        .filter(|&&x| x <= -1.0 + map.delta_minus + 1e-12)
        .all(|&x| rotates_by(x, TAU * map.y_minus));

    AdmissibilityReport {
        area_defect_max,
        boundary_rotation_verified: verified_plus && verified_minus,
        measured_collar_plus: collar_plus,
        measured_collar_minus: collar_minus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> AnnulusPoint {
        AnnulusPoint { x, y }
    }

    #[test]
    fn rigid_rotation_by_half_is_rotation_by_pi() {
        let m = LiftedMap::rigid(0.5);
        let q = m.apply(pt(0.0, 0.0)).unwrap();
        assert!((q.x - 0.0).abs() < 1e-15);
        assert!((q.y - PI).abs() < 1e-15);
    }

    #[test]
    fn twist_profile_matches_closed_form() {
        // g = x/2 gives ψ(x,y) = (x, y + πx)
        let m = LiftedMap::twist(Profile::polynomial(vec![0.0, 0.5]));
        let q = m.apply(pt(0.3, 1.0)).unwrap();
        assert!((q.y - (1.0 + PI * 0.3)).abs() < 1e-14);
        assert_eq!(m.y_plus, 0.5);
        assert_eq!(m.y_minus, -0.5);
        assert!(!m.admissible);
    }

    #[test]
    fn empty_composition_is_identity() {
        let m = LiftedMap::composition(vec![]);
        let q = m.apply(pt(0.3, 1.0)).unwrap();
        assert_eq!(q, pt(0.3, 1.0));
    }

    #[test]
    fn iterate_matches_double_twist() {
        let m = LiftedMap::twist(Profile::polynomial(vec![0.0, 0.5]));
        let x0 = 0.4;
        let q = m.iterate(2, pt(x0, 0.0)).unwrap();
        assert!((q.y - TAU * x0).abs() < 1e-14);
        let r = m.iterate(1, pt(x0, 0.7)).unwrap();
        let s = m.apply(pt(x0, 0.7)).unwrap();
        assert_eq!(r, s);
    }

    #[test]
    fn jacobians() {
        let rot = LiftedMap::rigid(0.37);
        assert_eq!(rot.jacobian(pt(0.2, 0.1)).unwrap(), Mat2::IDENTITY);

        let tw = LiftedMap::twist(Profile::polynomial(vec![0.0, 0.5]));
        let j = tw.jacobian(pt(0.2, 0.1)).unwrap();
        assert!((j.0[1][0] - PI).abs() < 1e-14);
        assert!((j.det() - 1.0).abs() < 1e-15);

        let sh = LiftedMap::radial_shear(Profile::polynomial(vec![0.0, 0.0, 1.0]));
        let j = sh.jacobian(pt(0.4, 0.0)).unwrap();
        assert!((j.0[1][0] - TAU * 0.8).abs() < 1e-13);
        assert!((j.det() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equivariance_under_full_turn() {
        let maps = vec![
            LiftedMap::rigid(0.37),
            LiftedMap::twist(Profile::polynomial(vec![0.1, 0.5, -0.3])),
            LiftedMap::hamiltonian_bump(BumpParams {
                center: [0.1, 2.0],
                radius: 0.5,
                strength: 0.05,
                time: 1.0,
                step: 1e-2,
            })
            .unwrap(),
        ];
        for m in &maps {
            for i in 0..10 {
                let x = -0.9 + 0.19 * i as f64;
                let y = 0.7 * i as f64;
                let a = m.apply(pt(x, y + TAU)).unwrap();
                let b = m.apply(pt(x, y)).unwrap();
                assert!((a.x - b.x).abs() < 1e-12);
                assert!((a.y - (b.y + TAU)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bump_flow_is_area_preserving() {
        let m = LiftedMap::hamiltonian_bump(BumpParams {
            center: [0.0, PI],
            radius: 0.6,
            strength: 0.1,
            time: 1.0,
            step: 1e-2,
        })
        .unwrap();
        let j = m.jacobian(pt(0.2, PI + 0.3)).unwrap();
        assert!((j.det() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bump_outside_interior_rejected() {
        let err = LiftedMap::hamiltonian_bump(BumpParams {
            center: [0.8, 0.0],
            radius: 0.5,
            strength: 0.1,
            time: 1.0,
            step: 1e-2,
        });
        assert!(err.is_err());
    }

    #[test]
    fn admissibility_rigid() {
        let rep = check_admissibility(&LiftedMap::rigid(0.37), 50, 1e-10);
        assert!(rep.area_defect_max <= 1e-10);
        assert!(rep.boundary_rotation_verified);
        assert_eq!(rep.measured_collar_plus, 1.0);
        assert_eq!(rep.measured_collar_minus, 1.0);
    }

    #[test]
    fn admissibility_twist_has_no_collar() {
        let m = LiftedMap::twist(Profile::polynomial(vec![0.0, 0.5]));
        let rep = check_admissibility(&m, 50, 1e-10);
        assert!(!m.admissible);
        assert!(rep.measured_collar_plus < 0.05);
        assert!(rep.measured_collar_minus < 0.05);
        // declared collars are zero-width, so the declared rotations hold
        assert!(rep.boundary_rotation_verified);
    }

    #[test]
    fn admissibility_step_shear_collars() {
        let m = LiftedMap::radial_shear(Profile::step(0.0, 0.25, 0.3, 0.2));
        let rep = check_admissibility(&m, 101, 1e-10);
        assert!(m.admissible);
        assert!(rep.boundary_rotation_verified);
        assert!(rep.measured_collar_plus >= 0.2 - 0.03);
        assert!(rep.measured_collar_minus >= 0.3 - 0.03);
    }

    #[test]
    fn profile_integral_closed_forms() {
        let p = Profile::polynomial(vec![1.0, 2.0, 3.0]);
        assert!((p.integral(-1.0, 1.0) - 4.0).abs() < 1e-14);
        let s = Profile::step(-1.0, 1.0, 0.25, 0.25);
        // odd by symmetry
        assert!(s.integral(-1.0, 1.0).abs() < 1e-14);
        // numeric cross-check on a subinterval
        let quad = crate::quad::integrate_adaptive(
            &|x| s.value(x),
            -0.9,
            0.37,
            1e-12,
            crate::quad::gl32(),
        )
        .unwrap();
        assert!((s.integral(-0.9, 0.37) - quad).abs() < 1e-11);
    }

    #[test]
    fn inverse_round_trip() {
        let m = LiftedMap::composition(vec![
            LiftedMap::rigid(0.3),
            LiftedMap::radial_shear(Profile::step(0.1, -0.2, 0.2, 0.2)),
        ]);
        let inv = m.inverse().unwrap();
        let p = pt(0.33, 1.7);
        let q = inv.apply(m.apply(p).unwrap()).unwrap();
        assert!((q.x - p.x).abs() < 1e-12);
        assert!((q.y - p.y).abs() < 1e-12);
    }
}
