//! Grid-seeded damped-Newton search for simple periodic orbits, and the
//! witness-based check of the main mean-action inequality.
//!
//! A grid search can only exhibit witnesses: the reported minimum is the
//! smallest mean action *observed*, never a claim about the true infimum.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::action::{ActionContext, ActionError, OrbitRecord};
use crate::map::{AnnulusPoint, LiftedMap, TAU};
use crate::precision::looks_rational;

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("map is not admissible (not a rotation on any boundary collar)")]
    NonAdmissibleMap,
    #[error(transparent)]
    Action(#[from] ActionError),
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonParams {
    pub max_iter: usize,
    pub tol: f64,
    /// Smallest damping factor tried before a seed is declared stuck
    /// (steps halve from 1 while the residual fails to decrease).
    pub damping_min: f64,
}

impl Default for NewtonParams {
    fn default() -> Self {
        NewtonParams {
            max_iter: 50,
            tol: 1e-10,
            damping_min: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchConfig {
    pub q_max: usize,
    /// Winding interval per iterate count q; when None, defaults to
    /// ⌈q·min(y₋,y₊)⌉−1 ..= ⌊q·max(y₋,y₊)⌋+1.
    pub winding_range: Option<(i64, i64)>,
    pub seed_grid: (usize, usize),
    pub newton: NewtonParams,
    pub dedupe_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            q_max: 1,
            winding_range: None,
            seed_grid: (64, 64),
            newton: NewtonParams::default(),
            dedupe_tol: 1e-6,
        }
    }
}

impl SearchConfig {
    fn validate(&self) {
        assert!(self.q_max >= 1);
        assert!(
            self.dedupe_tol > self.newton.tol,
            "dedupe_tol must exceed newton.tol"
        );
    }
}

/// Levenberg-regularized damped Newton on ψ̃^q(z) − z − (0, 2πk) = 0 with
/// a finite-difference Jacobian. Returns the converged point.
fn newton_solve(
    map: &LiftedMap,
    q: usize,
    k: i64,
    seed: AnnulusPoint,
    params: &NewtonParams,
) -> Option<AnnulusPoint> {
    let target_shift = TAU * k as f64;
    let residual = |z: AnnulusPoint| -> Option<[f64; 2]> {
        let w = map.iterate(q, z).ok()?;
        Some([w.x - z.x, w.y - z.y - target_shift])
    };
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());

    let mut z = seed;
    let mut r = residual(z)?;
    for _ in 0..params.max_iter {
        if norm(r) <= params.tol {
            return Some(z);
        }
        // finite-difference Jacobian of the residual map
        let h = LiftedMap::FD_STEP;
        let (xa, xb) = if z.x + h > 1.0 {
            (z.x - h, z.x)
        } else if z.x - h < -1.0 {
            (z.x, z.x + h)
        } else {
            (z.x - h, z.x + h)
        };
        let rxa = residual(AnnulusPoint { x: xa, y: z.y })?;
        let rxb = residual(AnnulusPoint { x: xb, y: z.y })?;
        let rya = residual(AnnulusPoint { x: z.x, y: z.y - h })?;
        let ryb = residual(AnnulusPoint { x: z.x, y: z.y + h })?;
        let dx = xb - xa;
        let j = [
            [(rxb[0] - rxa[0]) / dx, (ryb[0] - rya[0]) / (2.0 * h)],
            [(rxb[1] - rxa[1]) / dx, (ryb[1] - rya[1]) / (2.0 * h)],
        ];
        let j_norm = j[0][0].abs() + j[0][1].abs() + j[1][0].abs() + j[1][1].abs();
        if j_norm < 1e-9 {
            // residual is locally constant (e.g. a rigid rotation off-resonance)
            return None;
        }
        // (JᵀJ + μI) δ = −Jᵀ r
        let mu = 1e-12 + 1e-6 * norm(r);
        let jtj = [
            [
                j[0][0] * j[0][0] + j[1][0] * j[1][0] + mu,
                j[0][0] * j[0][1] + j[1][0] * j[1][1],
            ],
            [
                j[0][0] * j[0][1] + j[1][0] * j[1][1],
                j[0][1] * j[0][1] + j[1][1] * j[1][1] + mu,
            ],
        ];
        let rhs = [
            -(j[0][0] * r[0] + j[1][0] * r[1]),
            -(j[0][1] * r[0] + j[1][1] * r[1]),
        ];
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let delta = [
            (rhs[0] * jtj[1][1] - rhs[1] * jtj[0][1]) / det,
            (rhs[1] * jtj[0][0] - rhs[0] * jtj[1][0]) / det,
        ];
        // damping: halve the step while the residual does not decrease
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > params.damping_min {
            let cand = AnnulusPoint {
                x: (z.x + lambda * delta[0]).clamp(-1.0, 1.0),
                y: z.y + lambda * delta[1],
            };
            if let Some(rc) = residual(cand) {
                if norm(rc) < norm(r) {
                    z = cand;
                    r = rc;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            return None;
        }
    }
    if norm(r) <= params.tol {
        Some(z)
    } else {
        None
    }
}

/// Angular distance on R/2πZ.
fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn point_dist(a: AnnulusPoint, b: AnnulusPoint) -> f64 {
    (a.x - b.x).abs().max(circ_dist(a.y, b.y))
}

struct RawOrbit {
    points: Vec<AnnulusPoint>, // projected, canonical rotation
    period: usize,
    winding: i64,
    residual: f64,
}

/// Reduce a converged ψ^q fixed point to its minimal-period orbit.
fn reduce_orbit(map: &LiftedMap, q: usize, k: i64, z: AnnulusPoint, tol: f64) -> Option<RawOrbit> {
    // lifted forward orbit
    let mut lifted = Vec::with_capacity(q + 1);
    lifted.push(z);
    for i in 0..q {
        lifted.push(map.apply(lifted[i]).ok()?);
    }
    // minimal divisor period: the whole orbit must close up at step d,
    // not just the base point (an accidental near-closure would mislabel
    // the period)
    let mut period = q;
    let mut winding = k;
    'divisors: for d in 1..=q {
        if !q.is_multiple_of(d) {
            continue;
        }
        let kd = (lifted[d].y - lifted[0].y) / TAU;
        if (kd - kd.round()).abs() > 10.0 * tol {
            continue;
        }
        let kd_int = kd.round() as i64;
        if kd_int * (q / d) as i64 != k {
            continue;
        }
        for i in 0..=(q - d) {
            let dx = (lifted[i + d].x - lifted[i].x).abs();
            let dy = (lifted[i + d].y - lifted[i].y - TAU * kd_int as f64).abs();
            if dx > 10.0 * tol || dy > 10.0 * tol {
                continue 'divisors;
            }
        }
        period = d;
        winding = kd_int;
        break;
    }
    let pts: Vec<AnnulusPoint> = lifted[..period].iter().map(|p| p.projected()).collect();
    // simple orbit check: points pairwise distinct
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if point_dist(pts[i], pts[j]) < tol * 10.0 {
                return None;
            }
        }
    }
    // fresh residual over one period, including the closing step
    let mut residual: f64 = 0.0;
    for i in 0..period {
        let next = map.apply(pts[i]).ok()?.projected();
        residual = residual.max(point_dist(next, pts[(i + 1) % period]));
    }
    // canonical rotation: start at the lexicographically least point
    let base = (0..period)
        .min_by(|&i, &j| {
            (pts[i].x, pts[i].y_mod())
                .partial_cmp(&(pts[j].x, pts[j].y_mod()))
                .unwrap()
        })
        .unwrap();
    let points: Vec<AnnulusPoint> = (0..period).map(|i| pts[(base + i) % period]).collect();
    Some(RawOrbit {
        points,
        period,
        winding,
        residual,
    })
}

fn orbits_equal(a: &RawOrbit, b: &RawOrbit, tol: f64) -> bool {
    if a.period != b.period || a.winding != b.winding {
        return false;
    }
    // canonical rotations may differ by one slot when points tie; try all
    let n = a.period;
    'shift: for s in 0..n {
        for i in 0..n {
            if point_dist(a.points[i], b.points[(i + s) % n]) > tol {
                continue 'shift;
            }
        }
        return true;
    }
    false
}

/// Finds simple periodic orbits of the map of `ctx` up to `cfg.q_max`.
/// Degenerate families (circles of periodic points) are thinned to at
/// most `seed_grid.0` representatives flagged `family_suspected`.
pub fn find_periodic_orbits(
    ctx: &ActionContext,
    cfg: &SearchConfig,
) -> Result<Vec<OrbitRecord>, OrbitError> {
    cfg.validate();
    let map = ctx.map;
    let (nx, ny) = cfg.seed_grid;
    let seeds: Vec<AnnulusPoint> = (0..nx)
        .flat_map(|i| {
            (0..ny).map(move |j| AnnulusPoint {
                x: -1.0 + 2.0 * i as f64 / (nx - 1).max(1) as f64,
                y: TAU * j as f64 / ny as f64,
            })
        })
        .collect();

    let mut raw: Vec<RawOrbit> = Vec::new();
    for q in 1..=cfg.q_max {
        let (k_lo, k_hi) = match cfg.winding_range {
            Some(r) => r,
            None => {
                let lo = map.y_plus.min(map.y_minus);
                let hi = map.y_plus.max(map.y_minus);
                (
                    (q as f64 * lo).ceil() as i64 - 1,
                    (q as f64 * hi).floor() as i64 + 1,
                )
            }
        };
        for k in k_lo..=k_hi {
            let found: Vec<RawOrbit> = seeds
                .par_iter()
                .filter_map(|&seed| {
                    let z = newton_solve(map, q, k, seed, &cfg.newton)?;
                    reduce_orbit(map, q, k, z, cfg.newton.tol)
                })
                .collect();
            raw.extend(found);
        }
    }

    // deduplicate under cyclic shift + 2π translation
    raw.sort_by(|a, b| {
        (a.period, a.winding, a.points[0].x, a.points[0].y)
            .partial_cmp(&(b.period, b.winding, b.points[0].x, b.points[0].y))
            .unwrap()
    });
    let mut unique: Vec<RawOrbit> = Vec::new();
    for cand in raw {
        // canonical base points of near-duplicates need not be adjacent
        // after the sort (y wraps), so scan the whole (period, winding)
        // class
        let dup = unique
            .iter()
            .filter(|u| u.period == cand.period && u.winding == cand.winding)
            .any(|u| orbits_equal(u, &cand, cfg.dedupe_tol));
        if !dup {
            unique.push(cand);
        }
    }

    // family detection per (period, winding) class
    let mut records: Vec<OrbitRecord> = Vec::new();
    let mut i = 0;
    while i < unique.len() {
        let mut j = i;
        while j < unique.len()
            && unique[j].period == unique[i].period
            && unique[j].winding == unique[i].winding
        {
            j += 1;
        }
        let class = &unique[i..j];
        let spacing = 2.0 / (nx.max(2) - 1) as f64;
        let family = class.len() > nx.max(ny) / 2 || {
            class.len() >= 8 && {
                let mut gaps: Vec<f64> = class
                    .windows(2)
                    .map(|w| point_dist(w[0].points[0], w[1].points[0]))
                    .collect();
                gaps.sort_by(f64::total_cmp);
                gaps[gaps.len() / 2] < 2.0 * spacing
            }
        };
        let keep: Vec<&RawOrbit> = if family && class.len() > nx {
            let stride = class.len() as f64 / nx as f64;
            (0..nx)
                .map(|t| &class[(t as f64 * stride) as usize])
                .collect()
        } else {
            class.iter().collect()
        };
        for orb in keep {
            let total_action = ctx.total_action(&orb.points)?;
            records.push(OrbitRecord {
                points: orb.points.clone(),
                period: orb.period,
                winding: orb.winding,
                total_action,
                mean_action: total_action / orb.period as f64,
                residual: orb.residual,
                family_suspected: family,
            });
        }
        i = j;
    }

    records.sort_by(|a, b| {
        (a.period, a.winding, a.points[0].x, a.points[0].y)
            .partial_cmp(&(b.period, b.winding, b.points[0].x, b.points[0].y))
            .unwrap()
    });
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisRoute {
    CalabiBelowMax,
    RationalBoundary,
    Fails,
}

#[derive(Debug, Clone, Serialize)]
pub struct MainInequalityReport {
    pub hypothesis_holds: bool,
    pub hypothesis_route: HypothesisRoute,
    pub calabi: f64,
    pub max_boundary_action: f64,
    /// Smallest mean action among the orbits found (a witness bound, not
    /// the true infimum).
    pub observed_inf_mean_action: Option<f64>,
    pub inequality_holds: Option<bool>,
    pub witness_orbit: Option<OrbitRecord>,
    pub orbits_found: usize,
}

/// Witness-based check of the main inequality: the hypothesis
/// 𝒱 < max{y₊, −y₋+F} (or a rational boundary rotation number), and
/// whether some found orbit has mean action ≤ 𝒱 + tol.
/// Refuses non-admissible maps.
pub fn verify_main_inequality(
    ctx: &ActionContext,
    cfg: &SearchConfig,
    tol: f64,
) -> Result<MainInequalityReport, OrbitError> {
    let map = ctx.map;
    if !map.admissible {
        return Err(OrbitError::NonAdmissibleMap);
    }
    let calabi = ctx.calabi()?;
    let flux = ctx.flux()?;
    let shift = ctx.offset as f64;
    let boundary_max = (map.y_plus + shift).max(-map.y_minus + flux + shift);

    let route = if calabi < boundary_max - 1e-12 {
        HypothesisRoute::CalabiBelowMax
    } else if looks_rational(map.y_plus, 1_000_000, 1e-9)
        || looks_rational(map.y_minus, 1_000_000, 1e-9)
    {
        HypothesisRoute::RationalBoundary
    } else {
        HypothesisRoute::Fails
    };
    let hypothesis_holds = route != HypothesisRoute::Fails;

    let orbits = find_periodic_orbits(ctx, cfg)?;
    let witness = orbits
        .iter()
        .min_by(|a, b| a.mean_action.total_cmp(&b.mean_action))
        .cloned();
    let observed = witness.as_ref().map(|w| w.mean_action);
    Ok(MainInequalityReport {
        hypothesis_holds,
        hypothesis_route: route,
        calabi,
        max_boundary_action: boundary_max,
        observed_inf_mean_action: observed,
        inequality_holds: observed.map(|m| m <= calabi + tol),
        witness_orbit: witness,
        orbits_found: orbits.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::QuadratureSettings;
    use crate::map::Profile;

    fn quick_settings() -> QuadratureSettings {
        QuadratureSettings {
            line_order: 16,
            area_grid: (128, 32),
            tol: 1e-10,
        }
    }

    fn small_cfg() -> SearchConfig {
        SearchConfig {
            seed_grid: (24, 24),
            ..SearchConfig::default()
        }
    }

    #[test]
    fn rational_rotation_two_point_family() {
        let m = LiftedMap::rigid(0.5);
        let ctx = ActionContext::with_settings(&m, 0, quick_settings());
        let cfg = SearchConfig {
            q_max: 2,
            ..small_cfg()
        };
        let orbits = find_periodic_orbits(&ctx, &cfg).unwrap();
        assert!(!orbits.is_empty());
        let two: Vec<&OrbitRecord> = orbits.iter().filter(|o| o.period == 2).collect();
        assert!(!two.is_empty(), "period-2 representatives expected");
        for o in two.iter().take(5) {
            assert_eq!(o.winding, 1);
            assert!(o.family_suspected);
            assert!((o.mean_action - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn irrational_rotation_has_no_orbits() {
        let m = LiftedMap::rigid(std::f64::consts::FRAC_1_SQRT_2);
        let ctx = ActionContext::with_settings(&m, 0, quick_settings());
        let cfg = SearchConfig {
            q_max: 8,
            seed_grid: (16, 16),
            ..SearchConfig::default()
        };
        let orbits = find_periodic_orbits(&ctx, &cfg).unwrap();
        assert!(orbits.is_empty());
    }

    #[test]
    fn twist_fixed_circle_found() {
        let m = LiftedMap::twist(Profile::polynomial(vec![0.0, 0.5]));
        let ctx = ActionContext::with_settings(&m, 0, quick_settings());
        let cfg = SearchConfig {
            q_max: 1,
            winding_range: Some((0, 0)),
            ..small_cfg()
        };
        let orbits = find_periodic_orbits(&ctx, &cfg).unwrap();
        assert!(!orbits.is_empty());
        for o in &orbits {
            assert_eq!(o.period, 1);
            assert!(o.points[0].x.abs() < 1e-8);
            assert!((o.mean_action - 0.25).abs() < 1e-8);
            assert!(o.family_suspected);
        }
    }

    #[test]
    fn orbits_reverify_under_fresh_evaluation() {
        let m = LiftedMap::rigid(1.0 / 3.0);
        let ctx = ActionContext::with_settings(&m, 0, quick_settings());
        let cfg = SearchConfig {
            q_max: 3,
            seed_grid: (12, 12),
            ..SearchConfig::default()
        };
        let orbits = find_periodic_orbits(&ctx, &cfg).unwrap();
        assert!(!orbits.is_empty());
        for o in &orbits {
            assert_eq!(o.period, 3);
            assert!(o.residual <= 10.0 * cfg.newton.tol);
            // lift closes with the recorded winding
            let mut z = o.points[0];
            for _ in 0..o.period {
                z = m.apply(z).unwrap();
            }
            assert!((z.y - o.points[0].y - TAU * o.winding as f64).abs() < 1e-8);
        }
        // no two returned orbits coincide under cyclic shift + translation
        for (i, a) in orbits.iter().enumerate() {
            for b in orbits.iter().skip(i + 1) {
                if a.period != b.period || a.winding != b.winding {
                    continue;
                }
                let coincide = (0..a.period).any(|s| {
                    (0..a.period).all(|t| {
                        point_dist(a.points[t], b.points[(t + s) % a.period]) <= cfg.dedupe_tol
                    })
                });
                assert!(!coincide, "duplicate orbits returned");
            }
        }
    }

    #[test]
    fn main_inequality_on_rotation() {
        let m = LiftedMap::rigid(0.5);
        let ctx = ActionContext::with_settings(&m, 0, quick_settings());
        let cfg = SearchConfig {
            q_max: 2,
            ..small_cfg()
        };
        let rep = verify_main_inequality(&ctx, &cfg, 1e-9).unwrap();
        assert!(rep.hypothesis_holds);
        assert_eq!(rep.hypothesis_route, HypothesisRoute::RationalBoundary);
        assert_eq!(rep.inequality_holds, Some(true));
        assert!((rep.observed_inf_mean_action.unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn main_inequality_rejects_irrational_rotation() {
        let m = LiftedMap::rigid(std::f64::consts::FRAC_1_SQRT_2);
        let ctx = ActionContext::with_settings(&m, 0, quick_settings());
        let cfg = SearchConfig {
            q_max: 4,
            seed_grid: (8, 8),
            ..SearchConfig::default()
        };
        let rep = verify_main_inequality(&ctx, &cfg, 1e-9).unwrap();
        assert!(!rep.hypothesis_holds);
        assert_eq!(rep.orbits_found, 0);
        assert_eq!(rep.inequality_holds, None);
    }

    #[test]
    fn non_admissible_map_refused() {
        let m = LiftedMap::twist(Profile::polynomial(vec![0.0, 0.5]));
        let ctx = ActionContext::with_settings(&m, 0, quick_settings());
        let err = verify_main_inequality(&ctx, &small_cfg(), 1e-9);
        assert!(matches!(err, Err(OrbitError::NonAdmissibleMap)));
    }
}
