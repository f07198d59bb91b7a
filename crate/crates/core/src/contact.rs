//! Numerical verification of the mapping-torus contact form
//!
//!   λ₀ = (1−η′(θ)) f dθ + η′(θ) (f∘ψ) dθ + β + (θ−η(θ)) df + η(θ) ψ*df
//!
//! on \[0,1\]×A: the contact condition, the return-time and volume
//! identities, the dλ₀ = ω cancellation, the gluing compatibility at
//! θ = 1, and the binding rotation-number formulas.
//!
//! No particular η is canonical; `build_eta` returns one valid profile,
//! and any profile meeting the three constraints below yields a different
//! λ₀ with identical checked invariants.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::action::{ActionContext, ActionError};
use crate::map::{AnnulusPoint, TAU};
use crate::precision::looks_rational;
use crate::quad::{self, GaussRule};

#[derive(Debug, Error)]
pub enum ContactError {
    #[error("infeasible eta profile: {0}")]
    InfeasibleEta(String),
    #[error("map is not admissible (not a rotation on any boundary collar)")]
    NonAdmissibleMap,
    #[error(
        "rationality guard tripped: {value} is within 1e-9 of a rational with denominator <= 1e6"
    )]
    RationalityGuardTripped { value: f64 },
    #[error("p̃ = y₊ − y₋ + F = {value} is not a positive integer")]
    NonIntegerP { value: f64 },
    #[error(transparent)]
    Action(#[from] ActionError),
}

/// The blend profile η: \[0,1\] → ℝ with
///   η ≡ 0 on [0, θ_a],
///   η = θ − 1 on [θ_b, 1],
///   −min(f)/max(f) < η′ ≤ 1 everywhere.
/// Between θ_a and θ_c the derivative dips to −amp (a smoothstep
/// rise/flat/fall table); between θ_c and θ_b it climbs to 1.
#[derive(Debug, Clone, Serialize)]
pub struct EtaProfile {
    pub theta_a: f64,
    pub theta_c: f64,
    pub theta_b: f64,
    pub amp: f64,
    ramp: f64,
}

impl EtaProfile {
    /// Construct with dip amplitude `amp` and leading plateau `theta_a`;
    /// solves for the blend geometry so that η(θ_b) = θ_b − 1 exactly.
    pub fn with_amplitude(amp: f64, theta_a: f64) -> Result<EtaProfile, ContactError> {
        if !(amp > 0.0 && amp <= 1.0) {
            return Err(ContactError::InfeasibleEta(format!(
                "dip amplitude {amp} outside (0, 1]"
            )));
        }
        // tail = rise length T solves (3/4) A (1 − θ_a − 2T) = (3/2) T
        let tail = amp * (1.0 - theta_a) / (2.0 * (1.0 + amp));
        let theta_b = 1.0 - tail;
        let theta_c = theta_b - tail;
        let dip_len = theta_c - theta_a;
        if dip_len <= 0.0 {
            return Err(ContactError::InfeasibleEta("dip region is empty".into()));
        }
        Ok(EtaProfile {
            theta_a,
            theta_c,
            theta_b,
            amp,
            ramp: dip_len / 4.0,
        })
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        use crate::map::smoothstep as s;
        let (a, c, b, r) = (self.theta_a, self.theta_c, self.theta_b, self.ramp);
        if theta <= a {
            0.0
        } else if theta < a + r {
            -self.amp * s((theta - a) / r)
        } else if theta < c - r {
            -self.amp
        } else if theta < c {
            -self.amp * (1.0 - s((theta - (c - r)) / r))
        } else if theta < b {
            s((theta - c) / (b - c))
        } else {
            1.0
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        use crate::map::smoothstep_antideriv as sa;
        let (a, c, b, r) = (self.theta_a, self.theta_c, self.theta_b, self.ramp);
        let amp = self.amp;
        // cumulative values at the piece boundaries
        let at_ramp_up = -amp * r * 0.5;
        let at_flat_end = at_ramp_up - amp * (c - a - 2.0 * r);
        let at_c = at_flat_end - amp * r * 0.5;
        if theta <= a {
            0.0
        } else if theta < a + r {
            -amp * r * sa((theta - a) / r)
        } else if theta < c - r {
            at_ramp_up - amp * (theta - a - r)
        } else if theta < c {
            let t = (theta - (c - r)) / r;
            at_flat_end - amp * r * (t - sa(t))
        } else if theta < b {
            at_c + (b - c) * sa((theta - c) / (b - c))
        } else {
            theta - 1.0
        }
    }

    /// min and max of η′ over [0, 1].
    pub fn derivative_range(&self) -> (f64, f64) {
        (-self.amp, 1.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaBuild {
    pub eta: EtaProfile,
    pub f_min: f64,
    pub f_max: f64,
    /// η′ lower bound −min(f)/max(f) and the achieved margin above it.
    pub eta_prime_lower_bound: f64,
    pub margin_lower: f64,
}

/// Builds a valid η for the map of `ctx` (the offset is included in f).
/// The dip amplitude is half the allowed bound min(f)/max(f), computed on
/// the action grid.
pub fn build_eta(ctx: &ActionContext) -> Result<EtaBuild, ContactError> {
    let grid = ctx.action_grid()?;
    let (f_min, f_max) = (grid.min(), grid.max());
    if f_min <= 0.0 {
        return Err(ContactError::InfeasibleEta(format!(
            "action function must be positive; min f = {f_min} (raise the offset N)"
        )));
    }
    let ratio = f_min / f_max;
    let eta = EtaProfile::with_amplitude(0.5 * ratio, 0.05)?;
    let margin_lower = ratio - eta.amp;
    Ok(EtaBuild {
        eta,
        f_min,
        f_max,
        eta_prime_lower_bound: -ratio,
        margin_lower,
    })
}

/// λ₀ assembled from an action context and an η profile.
pub struct MappingTorusForm<'a> {
    pub ctx: &'a ActionContext<'a>,
    pub eta: EtaProfile,
}

impl<'a> MappingTorusForm<'a> {
    /// Requires an admissible map (the form must reduce to f dθ + β near
    /// the boundary) with a positive action function.
    pub fn build(ctx: &'a ActionContext<'a>) -> Result<(Self, EtaBuild), ContactError> {
        if !ctx.map.admissible {
            return Err(ContactError::NonAdmissibleMap);
        }
        let built = build_eta(ctx)?;
        Ok((
            MappingTorusForm {
                ctx,
                eta: built.eta.clone(),
            },
            built,
        ))
    }

    /// Assemble with a caller-supplied η and no hypothesis checks; meant
    /// for probing deliberately broken profiles.
    pub fn with_eta(ctx: &'a ActionContext<'a>, eta: EtaProfile) -> Self {
        MappingTorusForm { ctx, eta }
    }

    /// Pointwise ∇f from the defining one-form: df = ψ*β − β gives
    /// f_x = X J₂₁ / 2π and f_y = (X J₂₂ − x) / 2π.
    fn grad_f(&self, p: AnnulusPoint) -> Result<[f64; 2], ContactError> {
        let q = self.ctx.map.apply(p).map_err(ActionError::from)?;
        let j = self.ctx.map.jacobian(p).map_err(ActionError::from)?;
        Ok([q.x * j.0[1][0] / TAU, (q.x * j.0[1][1] - p.x) / TAU])
    }

    /// Coefficients (c_θ, c_x, c_y) of λ₀ at (θ, x, y). Uses the smooth
    /// fixed-panel action evaluator so the coefficients can be
    /// finite-differenced.
    pub fn coefficients(&self, theta: f64, p: AnnulusPoint) -> Result<[f64; 3], ContactError> {
        let f = self.ctx.action_at_smooth(p)?;
        let q = self.ctx.map.apply(p).map_err(ActionError::from)?;
        let f_psi = self.ctx.action_at_smooth(q)?;
        let dphi = self.eta.derivative(theta);
        let c_theta = (1.0 - dphi) * f + dphi * f_psi;

        let gf = self.grad_f(p)?;
        let gfq = self.grad_f(q)?;
        let j = self.ctx.map.jacobian(p).map_err(ActionError::from)?;
        // ψ*df at p: Jᵀ ∇f(ψ p)
        let pullback = j.apply_transpose(gfq);
        let e = self.eta.value(theta);
        let c_x = (theta - e) * gf[0] + e * pullback[0];
        let c_y = p.x / TAU + (theta - e) * gf[1] + e * pullback[1];
        Ok([c_theta, c_x, c_y])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContactReport {
    pub min_wedge_coeff: f64,
    pub argmin: (f64, f64, f64),
}

/// Evaluates (1−η′)f + η′ (f∘ψ) on an (θ, x, y) grid; positive minimum
/// means λ₀ is contact.
pub fn verify_contact(
    form: &MappingTorusForm,
    grid: (usize, usize, usize),
) -> Result<ContactReport, ContactError> {
    let (n_theta, nx, ny) = grid;
    let pairs = sample_f_pairs(form.ctx, nx, ny)?;
    let mut min_val = f64::INFINITY;
    let mut argmin = (0.0, 0.0, 0.0);
    for it in 0..=n_theta {
        let theta = it as f64 / n_theta as f64;
        let dphi = form.eta.derivative(theta);
        for &(x, y, f, f_psi) in &pairs {
            let val = (1.0 - dphi) * f + dphi * f_psi;
            if val < min_val {
                min_val = val;
                argmin = (theta, x, y);
            }
        }
    }
    Ok(ContactReport {
        min_wedge_coeff: min_val,
        argmin,
    })
}

fn sample_f_pairs(
    ctx: &ActionContext,
    nx: usize,
    ny: usize,
) -> Result<Vec<(f64, f64, f64, f64)>, ContactError> {
    let nodes: Vec<(f64, f64)> = (0..=nx)
        .flat_map(|i| {
            (0..ny).map(move |j| {
                (
                    -1.0 + 2.0 * i as f64 / nx as f64,
                    TAU * j as f64 / ny as f64,
                )
            })
        })
        .collect();
    let rows: Vec<Result<(f64, f64, f64, f64), ContactError>> = nodes
        .par_iter()
        .map(|&(x, y)| {
            let p = AnnulusPoint { x, y };
            let f = ctx.action_at(p)?;
            let q = ctx.map.apply(p).map_err(ActionError::from)?;
            let f_psi = ctx.action_at(q)?;
            Ok((x, y, f, f_psi))
        })
        .collect();
    rows.into_iter().collect()
}

/// Worst deviation of ∫₀¹ ((1−η′)f + η′ f∘ψ) dθ from f(x, y) over the
/// sample points; the exact integral is f because η(1) − η(0) = 0.
pub fn verify_return_time(
    form: &MappingTorusForm,
    sample_points: &[AnnulusPoint],
) -> Result<f64, ContactError> {
    let rule = GaussRule::new(16);
    let mut worst: f64 = 0.0;
    for &p in sample_points {
        let f = form.ctx.action_at(p)?;
        let q = form.ctx.map.apply(p).map_err(ActionError::from)?;
        let f_psi = form.ctx.action_at(q)?;
        let integrand = |theta: f64| f + form.eta.derivative(theta) * (f_psi - f);
        let time = quad::integrate_adaptive(&integrand, 0.0, 1.0, 1e-12, &rule)
            .map_err(ActionError::from)?;
        worst = worst.max((time - f).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeReport {
    pub volume: f64,
    pub two_calabi: f64,
    pub diff: f64,
}

/// vol(M_ψ, λ₀) = ∫ λ₀∧dλ₀ over \[0,1\]×A by composite Simpson, compared
/// against ω(A)·𝒱 = 2(𝒱+N). The f values here come from direct line
/// integrals, an independent route from the Calabi grid sweep.
pub fn verify_volume(
    form: &MappingTorusForm,
    grid: (usize, usize, usize),
) -> Result<VolumeReport, ContactError> {
    let (n_theta, nx, ny) = grid;
    let pairs = sample_f_pairs_closed(form.ctx, nx, ny)?;
    let wx = quad::simpson_weights(nx, 2.0);
    let wy = quad::simpson_weights(ny, TAU);
    // the θ-integral factorizes exactly: ∫ c_θ dθ = f + (∫η′)(f∘ψ − f)
    let wt = quad::simpson_weights(n_theta, 1.0);
    let eta_prime_integral: f64 = (0..=n_theta)
        .map(|it| wt[it] * form.eta.derivative(it as f64 / n_theta as f64))
        .sum();
    let mut volume = 0.0;
    for i in 0..=nx {
        for j in 0..=ny {
            let (f, f_psi) = pairs[i * (ny + 1) + j];
            volume += wx[i] * wy[j] * (f + eta_prime_integral * (f_psi - f));
        }
    }
    volume /= TAU;
    let two_calabi = 2.0 * form.ctx.calabi()?;
    Ok(VolumeReport {
        volume,
        two_calabi,
        diff: (volume - two_calabi).abs(),
    })
}

fn sample_f_pairs_closed(
    ctx: &ActionContext,
    nx: usize,
    ny: usize,
) -> Result<Vec<(f64, f64)>, ContactError> {
    let nodes: Vec<(usize, usize)> = (0..=nx)
        .flat_map(|i| (0..=ny).map(move |j| (i, j)))
        .collect();
    let rows: Vec<Result<(f64, f64), ContactError>> = nodes
        .par_iter()
        .map(|&(i, j)| {
            let x = -1.0 + 2.0 * i as f64 / nx as f64;
            let y = TAU * j as f64 / ny as f64;
            let p = AnnulusPoint { x, y };
            let f = ctx.action_at(p)?;
            let q = ctx.map.apply(p).map_err(ActionError::from)?;
            let f_psi = ctx.action_at(q)?;
            Ok((f, f_psi))
        })
        .collect();
    rows.into_iter().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FormIdentityReport {
    /// Worst |∂_θ c_x − ∂_x c_θ| (the dθ∧dx part of dλ₀ must cancel).
    pub max_theta_x_defect: f64,
    /// Worst |∂_θ c_y − ∂_y c_θ|.
    pub max_theta_y_defect: f64,
    /// Worst |∂_x c_y − ∂_y c_x − 1/2π| (the dx∧dy part must equal ω).
    pub max_area_defect: f64,
    /// Worst coefficient mismatch of λ₀(1,·) − ψ*λ₀(0,·).
    pub max_pullback_defect: f64,
}

/// Finite-difference checks (step 1e-5) of dλ₀ = ω and of the gluing
/// compatibility λ₀(1, x, y) = ψ*λ₀(0, x, y).
pub fn check_form_identities(
    form: &MappingTorusForm,
    samples: &[(f64, AnnulusPoint)],
) -> Result<FormIdentityReport, ContactError> {
    let h = 1e-5;
    let mut rep = FormIdentityReport {
        max_theta_x_defect: 0.0,
        max_theta_y_defect: 0.0,
        max_area_defect: 0.0,
        max_pullback_defect: 0.0,
    };
    for &(theta, p) in samples {
        let theta = theta.clamp(h, 1.0 - h);
        let x = p.x.clamp(-1.0 + h, 1.0 - h);
        let at = |th: f64, px: f64, py: f64| form.coefficients(th, AnnulusPoint { x: px, y: py });
        let c_tp = at(theta + h, x, p.y)?;
        let c_tm = at(theta - h, x, p.y)?;
        let c_xp = at(theta, x + h, p.y)?;
        let c_xm = at(theta, x - h, p.y)?;
        let c_yp = at(theta, x, p.y + h)?;
        let c_ym = at(theta, x, p.y - h)?;
        let d = |a: f64, b: f64| (a - b) / (2.0 * h);
        rep.max_theta_x_defect = rep
            .max_theta_x_defect
            .max((d(c_tp[1], c_tm[1]) - d(c_xp[0], c_xm[0])).abs());
        rep.max_theta_y_defect = rep
            .max_theta_y_defect
            .max((d(c_tp[2], c_tm[2]) - d(c_yp[0], c_ym[0])).abs());
        rep.max_area_defect = rep
            .max_area_defect
            .max((d(c_xp[2], c_xm[2]) - d(c_yp[1], c_ym[1]) - 1.0 / TAU).abs());

        // gluing: λ₀ at θ=1 against the pullback of λ₀ at θ=0
        let lhs = form.coefficients(1.0, AnnulusPoint { x, y: p.y })?;
        let q = form
            .ctx
            .map
            .apply(AnnulusPoint { x, y: p.y })
            .map_err(ActionError::from)?;
        let rhs0 = form.coefficients(0.0, q)?;
        let j = form
            .ctx
            .map
            .jacobian(AnnulusPoint { x, y: p.y })
            .map_err(ActionError::from)?;
        let spatial = j.apply_transpose([rhs0[1], rhs0[2]]);
        let defect = (lhs[0] - rhs0[0])
            .abs()
            .max((lhs[1] - spatial[0]).abs())
            .max((lhs[2] - spatial[1]).abs());
        rep.max_pullback_defect = rep.max_pullback_defect.max(defect);
    }
    Ok(rep)
}

/// Worst coefficient mismatch of λ₀(1, x, y) − ψ*λ₀(0, x, y) over the
/// sample points (the descent condition to the mapping torus).
pub fn pullback_defect(
    form: &MappingTorusForm,
    points: &[AnnulusPoint],
) -> Result<f64, ContactError> {
    let mut worst: f64 = 0.0;
    for &p in points {
        let lhs = form.coefficients(1.0, p)?;
        let q = form.ctx.map.apply(p).map_err(ActionError::from)?;
        let rhs0 = form.coefficients(0.0, q)?;
        let j = form.ctx.map.jacobian(p).map_err(ActionError::from)?;
        let spatial = j.apply_transpose([rhs0[1], rhs0[2]]);
        worst = worst
            .max((lhs[0] - rhs0[0]).abs())
            .max((lhs[1] - spatial[0]).abs())
            .max((lhs[2] - spatial[1]).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct BindingRotations {
    pub p_tilde: i64,
    /// In the page trivializations: (1/y₊, 1/(−y₋+F)).
    pub rot_page: [f64; 2],
    /// Of the p̃-fold covers in the Seifert-framed trivializations:
    /// (p̃/y₊ − 1, p̃/(−y₋+F) − 1).
    pub rot_seifert: [f64; 2],
    /// The knot-filtration weights rot(e_±) = 1/value − 1/p̃.
    pub rot_e: [f64; 2],
}

/// Rotation numbers of the two binding orbits; requires p̃ = y₊ − y₋ + F
/// to be a positive integer and both boundary action values to pass the
/// irrationality guard.
pub fn binding_rotation_numbers(
    y_plus: f64,
    y_minus: f64,
    flux: f64,
) -> Result<BindingRotations, ContactError> {
    let p_real = y_plus - y_minus + flux;
    let p_round = p_real.round();
    if (p_real - p_round).abs() > 1e-9 || p_round < 1.0 {
        return Err(ContactError::NonIntegerP { value: p_real });
    }
    let p = p_round as i64;
    let a = y_plus;
    let b = -y_minus + flux;
    for v in [a, b] {
        if looks_rational(v, 1_000_000, 1e-9) {
            return Err(ContactError::RationalityGuardTripped { value: v });
        }
    }
    let pf = p as f64;
    Ok(BindingRotations {
        p_tilde: p,
        rot_page: [1.0 / a, 1.0 / b],
        rot_seifert: [pf / a - 1.0, pf / b - 1.0],
        rot_e: [1.0 / a - 1.0 / pf, 1.0 / b - 1.0 / pf],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::QuadratureSettings;
    use crate::map::{LiftedMap, Profile};

    fn small_settings() -> QuadratureSettings {
        QuadratureSettings {
            line_order: 16,
            area_grid: (96, 32),
            tol: 1e-10,
        }
    }

    #[test]
    fn eta_satisfies_constraints() {
        for amp in [0.05, 0.25, 0.5] {
            let eta = EtaProfile::with_amplitude(amp, 0.05).unwrap();
            assert_eq!(eta.value(0.0), 0.0);
            assert!(eta.value(0.02).abs() < 1e-15);
            assert!(
                (eta.value(1.0)).abs() < 1e-12,
                "eta(1) = {}",
                eta.value(1.0)
            );
            assert!((eta.value(eta.theta_b) - (eta.theta_b - 1.0)).abs() < 1e-12);
            assert!((eta.derivative(0.99) - 1.0).abs() < 1e-15);
            // derivative bounds and C0 continuity of the derivative
            // (max |η''| is 1.875/ramp on the dip and 1.875/rise on the climb)
            let step = 1.0 / 2000.0;
            let max_second = (1.875 * amp / eta.ramp).max(1.875 / (eta.theta_b - eta.theta_c));
            let jump_cap = 1.5 * max_second * step;
            let mut prev = eta.derivative(0.0);
            for i in 1..=2000 {
                let th = i as f64 * step;
                let d = eta.derivative(th);
                assert!(d >= -amp - 1e-12 && d <= 1.0 + 1e-12);
                assert!((d - prev).abs() < jump_cap, "derivative jump at {th}");
                prev = d;
            }
            // value is the integral of the derivative
            let rule = GaussRule::new(16);
            let num =
                quad::integrate_adaptive(&|t| eta.derivative(t), 0.0, 0.77, 1e-13, &rule).unwrap();
            assert!((num - eta.value(0.77)).abs() < 1e-11);
        }
    }

    #[test]
    fn build_eta_margins() {
        // constant f: ratio 1, margin 0.5
        let m = LiftedMap::rigid(0.7);
        let ctx = ActionContext::with_settings(&m, 0, small_settings());
        let built = build_eta(&ctx).unwrap();
        assert!((built.margin_lower - 0.5).abs() < 1e-9);
        assert!(built.eta.amp <= 0.5 + 1e-12);

        // min f = 1/4, max f = 1/2 -> eta' > -1/2 everywhere
        let tw = LiftedMap::twist(Profile::polynomial(vec![0.0, 0.5]));
        let ctx = ActionContext::with_settings(&tw, 0, small_settings());
        let built = build_eta(&ctx).unwrap();
        let (lo, _) = built.eta.derivative_range();
        assert!(lo > -0.5);
        assert!((built.eta_prime_lower_bound - (-0.5)).abs() < 1e-6);

        // offset improves the feasibility ratio monotonically
        let ctx10 = ActionContext::with_settings(&tw, 10, small_settings());
        let b10 = build_eta(&ctx10).unwrap();
        assert!(b10.eta_prime_lower_bound < built.eta_prime_lower_bound);

        // negative action without offset is infeasible
        let back = LiftedMap::rigid(-0.3);
        let ctx = ActionContext::with_settings(&back, 0, small_settings());
        assert!(build_eta(&ctx).is_err());
    }

    #[test]
    fn form_refuses_non_admissible_map() {
        let tw = LiftedMap::twist(Profile::polynomial(vec![0.0, 0.5]));
        let ctx = ActionContext::with_settings(&tw, 1, small_settings());
        assert!(matches!(
            MappingTorusForm::build(&ctx),
            Err(ContactError::NonAdmissibleMap)
        ));
        // building just the profile is still allowed (only needs f > 0)
        assert!(build_eta(&ctx).is_ok());
    }

    #[test]
    fn contact_positive_for_rotation() {
        let m = LiftedMap::rigid(0.7);
        let ctx = ActionContext::with_settings(&m, 0, small_settings());
        let (form, _) = MappingTorusForm::build(&ctx).unwrap();
        let rep = verify_contact(&form, (8, 16, 8)).unwrap();
        assert!((rep.min_wedge_coeff - 0.7).abs() < 1e-9);
    }

    /// Rotation by 1/2 composed with a bump: f is genuinely y-dependent,
    /// so f∘ψ − f is large where the dip maps onto the flat region.
    fn bump_composition() -> LiftedMap {
        LiftedMap::composition(vec![
            LiftedMap::rigid(0.5),
            LiftedMap::hamiltonian_bump(crate::map::BumpParams {
                center: [0.0, std::f64::consts::PI],
                radius: 0.9,
                strength: -0.3,
                time: 1.0,
                step: 0.01,
            })
            .unwrap(),
        ])
    }

    fn bump_settings() -> QuadratureSettings {
        QuadratureSettings {
            line_order: 8,
            area_grid: (48, 24),
            tol: 1e-6,
        }
    }

    #[test]
    fn contact_violation_detected_with_bad_eta() {
        let m = bump_composition();
        let ctx = ActionContext::with_settings(&m, 0, bump_settings());
        // fixture precondition: some point has f∘ψ > f (1 + 1/amp), so an
        // η′ dip of the forced amplitude breaks contact positivity there
        let amp = 0.95;
        let pairs = sample_f_pairs(&ctx, 10, 8).unwrap();
        let min_f = pairs.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
        assert!(
            min_f > 0.0,
            "fixture needs positive action, min f = {min_f}"
        );
        let worst = pairs
            .iter()
            .map(|&(_, _, f, fp)| fp - f * (1.0 + 1.0 / amp))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(worst > 0.0, "fixture too weak to violate contact: {worst}");

        let eta = EtaProfile::with_amplitude(amp, 0.05).unwrap();
        let form = MappingTorusForm::with_eta(&ctx, eta);
        let rep = verify_contact(&form, (8, 10, 8)).unwrap();
        assert!(rep.min_wedge_coeff <= 0.0, "min = {}", rep.min_wedge_coeff);
    }

    #[test]
    fn return_time_identity() {
        let m = LiftedMap::rigid(0.7);
        let ctx = ActionContext::with_settings(&m, 0, small_settings());
        let (form, _) = MappingTorusForm::build(&ctx).unwrap();
        let pts: Vec<AnnulusPoint> = (0..20)
            .map(|i| AnnulusPoint {
                x: -0.9 + 0.09 * i as f64,
                y: 0.31 * i as f64,
            })
            .collect();
        let dev = verify_return_time(&form, &pts).unwrap();
        assert!(dev < 1e-10, "dev = {dev}");
    }

    #[test]
    fn return_time_detects_offset_eta() {
        // replacing η by η + c breaks η(1) − η(0) = 0 in the integrand:
        // the deviation is exactly |c| · |f∘ψ − f| at each point
        let m = bump_composition();
        let ctx = ActionContext::with_settings(&m, 0, bump_settings());
        let eta = EtaProfile::with_amplitude(0.2, 0.05).unwrap();
        let p = AnnulusPoint { x: 0.0, y: 0.4 };
        let f = ctx.action_at(p).unwrap();
        let q = m.apply(p).unwrap();
        let f_psi = ctx.action_at(q).unwrap();
        assert!((f_psi - f).abs() > 1e-3, "fixture point must have f∘ψ ≠ f");
        let c = 0.3;
        let rule = GaussRule::new(16);
        let time = quad::integrate_adaptive(
            &|t| f + (eta.derivative(t) + c) * (f_psi - f),
            0.0,
            1.0,
            1e-13,
            &rule,
        )
        .unwrap();
        assert!(((time - f).abs() - c * (f_psi - f).abs()).abs() < 1e-9);
    }

    #[test]
    fn volume_identity_rotation() {
        let m = LiftedMap::rigid(0.5);
        let ctx = ActionContext::with_settings(&m, 0, small_settings());
        let (form, _) = MappingTorusForm::build(&ctx).unwrap();
        let rep = verify_volume(&form, (32, 16, 8)).unwrap();
        assert!((rep.volume - 1.0).abs() < 1e-9);
        assert!((rep.two_calabi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn form_identities_hold() {
        let tw = LiftedMap::twist(Profile::step(-0.4, 0.4, 0.25, 0.25));
        let ctx = ActionContext::with_settings(&tw, 1, small_settings());
        let (form, _) = MappingTorusForm::build(&ctx).unwrap();
        let samples: Vec<(f64, AnnulusPoint)> = (0..12)
            .map(|i| {
                (
                    0.08 * i as f64 + 0.03,
                    AnnulusPoint {
                        x: -0.85 + 0.15 * i as f64,
                        y: 0.5 * i as f64,
                    },
                )
            })
            .collect();
        let rep = check_form_identities(&form, &samples).unwrap();
        assert!(rep.max_theta_x_defect < 1e-8, "{rep:?}");
        assert!(rep.max_theta_y_defect < 1e-8, "{rep:?}");
        assert!(rep.max_area_defect < 1e-7, "{rep:?}");
        assert!(rep.max_pullback_defect < 1e-8, "{rep:?}");

        // gluing compatibility at 100 points
        let pts: Vec<AnnulusPoint> = (0..100)
            .map(|i| AnnulusPoint {
                x: -0.99 + 0.02 * i as f64,
                y: 0.171 * i as f64,
            })
            .collect();
        let worst = pullback_defect(&form, &pts).unwrap();
        assert!(worst < 1e-8, "pullback defect {worst}");
    }

    #[test]
    fn binding_rotations_examples() {
        let e = std::f64::consts::E;
        let rot = binding_rotation_numbers(1.0 + e / 30.0, -(2.0 - e / 30.0), 0.0).unwrap();
        assert_eq!(rot.p_tilde, 3);
        assert!((rot.rot_e[0] - (1.0 / (1.0 + e / 30.0) - 1.0 / 3.0)).abs() < 1e-15);
        assert!((rot.rot_e[1] - (1.0 / (2.0 - e / 30.0) - 1.0 / 3.0)).abs() < 1e-15);
        assert!((rot.rot_page[0] * (1.0 + e / 30.0) - 1.0).abs() < 1e-15);
        assert!((rot.rot_seifert[0] - (3.0 / (1.0 + e / 30.0) - 1.0)).abs() < 1e-15);

        // golden-ratio pair: sum is not an integer
        let bad = binding_rotation_numbers(1.618033, -1.618033, 0.0);
        assert!(matches!(bad, Err(ContactError::NonIntegerP { .. })));

        // rational value trips the guard
        let bad = binding_rotation_numbers(0.5, -(2.5), 0.0);
        assert!(matches!(
            bad,
            Err(ContactError::RationalityGuardTripped { .. })
        ));

        // p̃ = 1 with irrational y₊ in (0,1)
        let a = 1.0 / std::f64::consts::SQRT_2;
        let rot = binding_rotation_numbers(a, a, 1.0).unwrap();
        assert_eq!(rot.p_tilde, 1);
        assert!((rot.rot_seifert[0] - (1.0 / a - 1.0)).abs() < 1e-15);
        assert!((rot.rot_seifert[1] - (1.0 / (1.0 - a) - 1.0)).abs() < 1e-12);
    }
}
