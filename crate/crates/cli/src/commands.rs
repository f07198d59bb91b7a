use std::process::ExitCode;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use meanaction_core::action::{ActionContext, QuadratureSettings};
use meanaction_core::bounds::{
    disk_collapse_stats, hypothesis_classifier, penultimate_bound, MapInvariants, RationalFlags,
};
use meanaction_core::contact::{
    binding_rotation_numbers, check_form_identities, verify_contact, verify_return_time,
    verify_volume, MappingTorusForm,
};
use meanaction_core::ech::{
    ech_index, ech_index_oracle, generators_by_index, knot_filtrations, n_sequence,
    nk_lower_bound_check, sweep_key, w_sequence, width, EchError, Generator, SlopeData,
};
use meanaction_core::map::{AnnulusPoint, LiftedMap, TAU};
use meanaction_core::mapspec::MapSpec;
use meanaction_core::orbits::{find_periodic_orbits, SearchConfig};
use meanaction_core::precision::{looks_rational, PrecisionMode};
use meanaction_core::VERSION;

use crate::output::emit;
use crate::{Cli, Command, EchCommand, QuadArgs, SlopeArgs};

pub fn run(cli: Cli) -> Result<ExitCode> {
    let format = cli.format.clone();
    match cli.command {
        Command::Analyze {
            ref mapspec,
            ref quad,
        } => analyze(&format, mapspec, quad),
        Command::Orbits {
            ref mapspec,
            qmax,
            seeds,
            ref quad,
        } => orbits(&format, mapspec, qmax, seeds, quad),
        Command::ContactCheck {
            ref mapspec,
            ref quad,
            check_grid,
        } => contact_check(&format, mapspec, quad, check_grid, cli.seed),
        Command::Ech { ref op } => ech(&format, op),
        Command::Bound {
            ref mapspec,
            n,
            ref quad,
        } => bound(&format, mapspec, n, quad),
        Command::Classify {
            ref mapspec,
            y_plus_rational,
            y_minus_rational,
            ref quad,
        } => classify(&format, mapspec, y_plus_rational, y_minus_rational, quad),
        Command::VerifySuite { quick } => verify_suite(&format, quick),
    }
}

fn load_map(path: &str) -> Result<LiftedMap> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    let spec = MapSpec::from_json(&text).with_context(|| format!("parsing {path}"))?;
    Ok(spec.to_map()?)
}

fn settings(quad: &QuadArgs) -> Result<QuadratureSettings> {
    let (nx, ny) = quad.grid;
    anyhow::ensure!(
        nx >= 2 && nx.is_multiple_of(2) && ny >= 2 && ny.is_multiple_of(2),
        "area grid sides must be even and at least 2 (got {nx},{ny})"
    );
    anyhow::ensure!(quad.line_order >= 2, "line order must be at least 2");
    anyhow::ensure!(quad.tol > 0.0, "quadrature tolerance must be positive");
    Ok(QuadratureSettings {
        line_order: quad.line_order,
        area_grid: quad.grid,
        tol: quad.tol,
    })
}

/// Leading comment line carrying the reproducibility fields that the JSON
/// envelope holds, for CSV outputs.
fn csv_meta(quad: Option<&QuadArgs>, guard_eps: Option<f64>) -> String {
    let mut line = format!("# meanaction {VERSION}");
    if let Some(g) = guard_eps {
        line.push_str(&format!(" guard_eps={g}"));
    }
    if let Some(q) = quad {
        line.push_str(&format!(
            " tol={} grid={}x{} line_order={}",
            q.tol, q.grid.0, q.grid.1, q.line_order
        ));
    }
    line.push('\n');
    line
}

fn envelope(quad: Option<&QuadArgs>, guard_eps: Option<f64>) -> Value {
    json!({
        "version": VERSION,
        "guard_eps": guard_eps,
        "quadrature": quad.map(|q| json!({
            "tol": q.tol,
            "area_grid": [q.grid.0, q.grid.1],
            "line_order": q.line_order,
        })),
    })
}

fn merge(mut base: Value, payload: Value) -> Value {
    if let (Value::Object(b), Value::Object(p)) = (&mut base, payload) {
        for (k, v) in p {
            b.insert(k, v);
        }
    }
    base
}

fn analyze(format: &str, mapspec: &str, quad: &QuadArgs) -> Result<ExitCode> {
    let map = load_map(mapspec)?;
    let ctx = ActionContext::with_settings(&map, quad.offset, settings(quad)?);
    let flux = ctx.flux()?;
    let calabi = ctx.calabi()?;
    let shift = quad.offset as f64;
    let f_plus = map.y_plus + shift;
    let f_minus = -map.y_minus + flux + shift;
    let hypothesis = calabi < f_plus.max(f_minus) - 1e-12
        || looks_rational(map.y_plus, 1_000_000, 1e-9)
        || looks_rational(map.y_minus, 1_000_000, 1e-9);
    let payload = json!({
        "y_plus": map.y_plus,
        "y_minus": map.y_minus,
        "flux": flux,
        "calabi": calabi,
        "f_boundary": {"plus": f_plus, "minus": f_minus},
        "hypothesis_main_theorem": hypothesis,
        "admissible": map.admissible,
        "offset": quad.offset,
    });
    emit(format, &merge(envelope(Some(quad), None), payload), None);
    Ok(ExitCode::SUCCESS)
}

fn orbits(
    format: &str,
    mapspec: &str,
    qmax: usize,
    seeds: (usize, usize),
    quad: &QuadArgs,
) -> Result<ExitCode> {
    anyhow::ensure!(qmax >= 1, "qmax must be at least 1");
    anyhow::ensure!(
        seeds.0 >= 2 && seeds.1 >= 2,
        "seed grid sides must be at least 2"
    );
    let map = load_map(mapspec)?;
    let ctx = ActionContext::with_settings(&map, quad.offset, settings(quad)?);
    let cfg = SearchConfig {
        q_max: qmax,
        seed_grid: seeds,
        ..SearchConfig::default()
    };
    let records = find_periodic_orbits(&ctx, &cfg)?;
    let mut csv = csv_meta(Some(quad), None);
    csv.push_str("period,winding,x0,y0,total_action,mean_action,residual,family_suspected\n");
    for o in &records {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            o.period,
            o.winding,
            o.points[0].x,
            o.points[0].y,
            o.total_action,
            o.mean_action,
            o.residual,
            o.family_suspected
        ));
    }
    let payload = json!({
        "q_max": qmax,
        "seed_grid": [seeds.0, seeds.1],
        "orbits_found": records.len(),
        "orbits": records,
    });
    emit(
        format,
        &merge(envelope(Some(quad), None), payload),
        Some(csv),
    );
    Ok(ExitCode::SUCCESS)
}

fn contact_check(
    format: &str,
    mapspec: &str,
    quad: &QuadArgs,
    check_grid: (usize, usize, usize),
    seed: u64,
) -> Result<ExitCode> {
    anyhow::ensure!(
        check_grid.0 >= 2
            && check_grid.1 >= 2
            && check_grid.1.is_multiple_of(2)
            && check_grid.2 >= 2
            && check_grid.2.is_multiple_of(2),
        "check grid must be NTHETA,NX,NY with even NX, NY >= 2 (got {check_grid:?})"
    );
    let map = load_map(mapspec)?;
    let ctx = ActionContext::with_settings(&map, quad.offset, settings(quad)?);
    let (form, built) = MappingTorusForm::build(&ctx)?;

    let contact = verify_contact(&form, check_grid)?;
    // deterministic pseudo-random sample points from the seed
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let pts: Vec<AnnulusPoint> = (0..100)
        .map(|_| AnnulusPoint {
            x: -1.0 + 2.0 * next(),
            y: TAU * next(),
        })
        .collect();
    let return_dev = verify_return_time(&form, &pts)?;
    let volume = verify_volume(&form, (32, check_grid.1, check_grid.2))?;
    let samples: Vec<(f64, AnnulusPoint)> = (0..40)
        .map(|_| {
            (
                next(),
                AnnulusPoint {
                    x: -0.98 + 1.96 * next(),
                    y: TAU * next(),
                },
            )
        })
        .collect();
    let identities = check_form_identities(&form, &samples)?;

    let binding = match binding_rotation_numbers(map.y_plus, map.y_minus, ctx.flux()?) {
        Ok(rot) => serde_json::to_value(&rot)?,
        Err(e) => json!({"error": e.to_string()}),
    };

    let ok = contact.min_wedge_coeff > 0.0
        && return_dev <= 1e-8
        && volume.diff <= 1e-4 * volume.volume.abs().max(1.0)
        && identities.max_theta_x_defect <= 1e-6
        && identities.max_theta_y_defect <= 1e-6
        && identities.max_area_defect <= 1e-6
        && identities.max_pullback_defect <= 1e-6;

    let payload = json!({
        "offset": quad.offset,
        "f_min": built.f_min,
        "f_max": built.f_max,
        "eta": built.eta,
        "eta_prime_lower_bound": built.eta_prime_lower_bound,
        "eta_margin_lower": built.margin_lower,
        "min_wedge_coeff": contact.min_wedge_coeff,
        "return_time_deviation": return_dev,
        "volume": volume.volume,
        "two_calabi": volume.two_calabi,
        "volume_diff": volume.diff,
        "identity_defects": identities,
        "binding_rotations": binding,
        "all_checks_passed": ok,
    });
    emit(format, &merge(envelope(Some(quad), None), payload), None);
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn slope_data(args: &SlopeArgs) -> Result<SlopeData, EchError> {
    let mode = if args.high_precision {
        PrecisionMode::DoubleDouble
    } else {
        PrecisionMode::Double
    };
    Ok(SlopeData::new(args.a, args.b, args.p)?
        .with_guard(args.guard_eps)
        .with_precision(mode))
}

fn ech(format: &str, op: &EchCommand) -> Result<ExitCode> {
    match op {
        EchCommand::Index {
            slopes,
            mplus,
            mminus,
        } => {
            let s = slope_data(slopes)?;
            let g = Generator::new(*mplus, *mminus, s.p)?;
            let index = ech_index(&s, &g)?;
            let oracle = ech_index_oracle(&s, &g)?;
            let filt = knot_filtrations(&s, &g);
            let payload = json!({
                "a": s.a, "b": s.b, "p": s.p,
                "m_plus": mplus, "m_minus": mminus, "d": g.d(s.p),
                "index": index,
                "index_oracle": oracle,
                "width": width(&s, &g),
                "f_plus": filt.f_plus,
                "f_minus": filt.f_minus,
                "precision": s.precision,
            });
            emit(
                format,
                &merge(envelope(None, Some(s.guard_eps)), payload),
                None,
            );
            Ok(if index == oracle {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        EchCommand::Order { slopes, max_index } => {
            let s = slope_data(slopes)?;
            let gens = generators_by_index(&s, *max_index)?;
            let mut csv = csv_meta(None, Some(s.guard_eps));
            csv.push_str("rank,index,m_plus,m_minus,d,sweep_key,width\n");
            let rows: Vec<Value> = gens
                .iter()
                .enumerate()
                .map(|(rank, g)| {
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        rank,
                        2 * rank,
                        g.m_plus,
                        g.m_minus,
                        g.d(s.p),
                        sweep_key(&s, g),
                        width(&s, g)
                    ));
                    json!({
                        "rank": rank,
                        "index": 2 * rank,
                        "m_plus": g.m_plus,
                        "m_minus": g.m_minus,
                        "d": g.d(s.p),
                        "sweep_key": sweep_key(&s, g),
                        "width": width(&s, g),
                    })
                })
                .collect();
            let payload = json!({"a": s.a, "b": s.b, "p": s.p, "generators": rows});
            emit(
                format,
                &merge(envelope(None, Some(s.guard_eps)), payload),
                Some(csv),
            );
            Ok(ExitCode::SUCCESS)
        }
        EchCommand::Wk { slopes, kmax } => {
            let s = slope_data(slopes)?;
            let w = w_sequence(&s, *kmax)?;
            let mut csv = csv_meta(None, Some(s.guard_eps));
            csv.push_str("k,w\n");
            for (k, wk) in w.iter().enumerate() {
                csv.push_str(&format!("{k},{wk}\n"));
            }
            let payload = json!({"a": s.a, "b": s.b, "p": s.p, "k_max": kmax, "w": w});
            emit(
                format,
                &merge(envelope(None, Some(s.guard_eps)), payload),
                Some(csv),
            );
            Ok(ExitCode::SUCCESS)
        }
        EchCommand::Nseq { alpha, beta, count } => {
            let seq = n_sequence(*alpha, *beta, *count);
            let mut csv = csv_meta(None, Some(1e-9));
            csv.push_str("k,value\n");
            for (k, v) in seq.iter().enumerate() {
                csv.push_str(&format!("{k},{v}\n"));
            }
            let payload = json!({"alpha": alpha, "beta": beta, "values": seq});
            emit(
                format,
                &merge(envelope(None, Some(1e-9)), payload),
                Some(csv),
            );
            Ok(ExitCode::SUCCESS)
        }
        EchCommand::Nkbound { slopes, kmax } => {
            let s = slope_data(slopes)?;
            match nk_lower_bound_check(&s, *kmax) {
                Ok(rep) => {
                    let payload = json!({
                        "a": s.a, "b": s.b, "p": s.p,
                        "report": rep,
                        "all_pass": true,
                    });
                    emit(
                        format,
                        &merge(envelope(None, Some(s.guard_eps)), payload),
                        None,
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(EchError::BoundViolated { k, lhs, rhs, which }) => {
                    let payload = json!({
                        "a": s.a, "b": s.b, "p": s.p,
                        "all_pass": false,
                        "violation": {"k": k, "lhs": lhs, "rhs": rhs, "which": which},
                    });
                    emit(
                        format,
                        &merge(envelope(None, Some(s.guard_eps)), payload),
                        None,
                    );
                    Ok(ExitCode::from(2))
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn bound(format: &str, mapspec: &str, n: i64, quad: &QuadArgs) -> Result<ExitCode> {
    let map = load_map(mapspec)?;
    let ctx = ActionContext::with_settings(&map, 0, settings(quad)?);
    let inv = MapInvariants::from_context(&ctx)?;
    let b = penultimate_bound(&inv, n)?;
    let payload = json!({
        "invariants": inv,
        "n": n,
        "bound": b.bound,
        "gap_vs_calabi": b.gap_vs_calabi,
    });
    emit(format, &merge(envelope(Some(quad), None), payload), None);
    Ok(ExitCode::SUCCESS)
}

fn classify(
    format: &str,
    mapspec: &str,
    y_plus_rational: Option<bool>,
    y_minus_rational: Option<bool>,
    quad: &QuadArgs,
) -> Result<ExitCode> {
    let map = load_map(mapspec)?;
    let ctx = ActionContext::with_settings(&map, 0, settings(quad)?);
    let inv = MapInvariants::from_context(&ctx)?;
    let flags = RationalFlags {
        y_plus_rational,
        y_minus_rational,
    };
    let report = hypothesis_classifier(&inv, &flags);
    let collapse = disk_collapse_stats(&inv);
    let payload = json!({
        "invariants": inv,
        "classification": report,
        "disk_collapse": collapse,
    });
    emit(format, &merge(envelope(Some(quad), None), payload), None);
    Ok(ExitCode::SUCCESS)
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verify_suite(format: &str, quick: bool) -> Result<ExitCode> {
    let mut checks: Vec<Check> = Vec::new();
    let grid = if quick { (128, 16) } else { (256, 32) };
    let q = QuadratureSettings {
        line_order: 24,
        area_grid: grid,
        tol: 1e-9,
    };

    // twist closed forms
    {
        let coeffs = vec![0.15, 0.4, -0.25, 0.3];
        let g = meanaction_core::map::Profile::polynomial(coeffs.clone());
        let m = LiftedMap::twist(g.clone());
        let ctx = ActionContext::with_settings(&m, 0, q.clone());
        let (f_cf, v_cf) = meanaction_core::bounds::polynomial_twist_invariants(&coeffs);
        let flux_dev = (ctx.flux()? - f_cf).abs();
        let calabi_dev = (ctx.calabi()? - v_cf).abs();
        let f_dev = (ctx.action_at(AnnulusPoint { x: 0.3, y: 1.0 })?
            - (0.3 * g.value(0.3) + g.integral(0.3, 1.0)))
        .abs();
        checks.push(Check {
            name: "twist closed forms (flux, calabi, action)",
            pass: flux_dev < 1e-7 && calabi_dev < 1e-7 && f_dev < 1e-8,
            detail: format!("devs: flux {flux_dev:.1e}, calabi {calabi_dev:.1e}, f {f_dev:.1e}"),
        });
    }

    // map layer: equivariance, determinant, inverse
    {
        let m = LiftedMap::composition(vec![
            LiftedMap::rigid(0.45),
            LiftedMap::radial_shear(meanaction_core::map::Profile::step(0.2, -0.3, 0.25, 0.25)),
        ]);
        let mut worst_eq: f64 = 0.0;
        let mut worst_det: f64 = 0.0;
        let mut worst_inv: f64 = 0.0;
        let inv_map = m.inverse().unwrap();
        let n = if quick { 100 } else { 1000 };
        for i in 0..n {
            let x = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
            let y = 2.39996 * i as f64;
            let p = AnnulusPoint { x, y };
            let a = m.apply(AnnulusPoint { x, y: y + TAU })?;
            let b = m.apply(p)?;
            worst_eq = worst_eq.max((a.y - b.y - TAU).abs());
            worst_det = worst_det.max((m.jacobian(p)?.det() - 1.0).abs());
            let r = inv_map.apply(b)?;
            worst_inv = worst_inv.max((r.x - p.x).abs().max((r.y - p.y).abs()));
        }
        checks.push(Check {
            name: "map invariants (equivariance, det J, inverse)",
            pass: worst_eq < 1e-9 && worst_det < 1e-10 && worst_inv < 1e-9,
            detail: format!("eq {worst_eq:.1e}, det {worst_det:.1e}, inv {worst_inv:.1e}"),
        });
    }

    // path independence
    {
        let m = LiftedMap::composition(vec![
            LiftedMap::rigid(0.3),
            LiftedMap::radial_shear(meanaction_core::map::Profile::step(0.1, -0.2, 0.3, 0.3)),
        ]);
        let ctx = ActionContext::with_settings(&m, 0, q.clone());
        let mut worst: f64 = 0.0;
        for i in 0..20 {
            let p = AnnulusPoint {
                x: -0.9 + 0.09 * i as f64,
                y: 0.37 * i as f64,
            };
            let straight = ctx.action_at(p)?;
            let bent = ctx.action_along(&[
                AnnulusPoint { x: 1.0, y: 0.0 },
                AnnulusPoint { x: p.x, y: 0.0 },
                p,
            ])?;
            worst = worst.max((straight - bent).abs());
        }
        checks.push(Check {
            name: "action path independence",
            pass: worst < 1e-8,
            detail: format!("worst deviation {worst:.1e}"),
        });
    }

    // power map scaling
    {
        let m = LiftedMap::rigid(0.41);
        let ctx = ActionContext::with_settings(&m, 0, q.clone());
        let rep = ctx.power_map_scaling_check(3, &[])?;
        checks.push(Check {
            name: "power-map Calabi scaling",
            pass: rep.dev < 1e-9,
            detail: format!("|V(psi^3) - 3V| = {:.1e}", rep.dev),
        });
    }

    // lattice: oracle agreement, regression, filtration identity
    {
        let s = meanaction_core::ech::example_slopes();
        let max_index = if quick { 60 } else { 200 };
        let gens = generators_by_index(&s, max_index)?;
        let mut all = true;
        for (rank, g) in gens.iter().enumerate() {
            all &= ech_index(&s, g)? == 2 * rank as i64;
            all &= ech_index_oracle(&s, g)? == 2 * rank as i64;
            let filt = knot_filtrations(&s, g);
            all &= (filt.f_plus + filt.f_minus - width(&s, g)).abs() < 1e-12;
        }
        let w = w_sequence(&s, 11)?;
        all &= w == vec![0, 4, 5, 12, 13, 14, 15, 25, 26, 27, 28, 30];
        checks.push(Check {
            name: "lattice index formula vs oracle + w(k) regression",
            pass: all,
            detail: format!("{} generators checked", gens.len()),
        });
    }

    // quadratic lower bound
    {
        let s = meanaction_core::ech::example_slopes();
        let kmax = if quick { 100 } else { 1000 };
        let pass = nk_lower_bound_check(&s, kmax).is_ok();
        checks.push(Check {
            name: "N_{w(k)} quadratic lower bound",
            pass,
            detail: format!("k <= {kmax}"),
        });
    }

    // contact construction on a rotation
    {
        let m = LiftedMap::rigid(0.7);
        let ctx = ActionContext::with_settings(&m, 0, q.clone());
        let (form, _) = MappingTorusForm::build(&ctx)?;
        let contact = verify_contact(&form, (8, 24, 8))?;
        let pts: Vec<AnnulusPoint> = (0..30)
            .map(|i| AnnulusPoint {
                x: -0.9 + 0.06 * i as f64,
                y: 0.7 * i as f64,
            })
            .collect();
        let rt = verify_return_time(&form, &pts)?;
        let vol = verify_volume(&form, (16, 64, 8))?;
        checks.push(Check {
            name: "contact form (positivity, return time, volume)",
            pass: contact.min_wedge_coeff > 0.0 && rt < 1e-8 && vol.diff < 1e-6,
            detail: format!(
                "min {:.3}, rt {rt:.1e}, vol diff {:.1e}",
                contact.min_wedge_coeff, vol.diff
            ),
        });
    }

    // bounds layer identities
    {
        let hm_sym = (meanaction_core::bounds::harmonic_mean(2.0, 5.0)?
            - meanaction_core::bounds::harmonic_mean(5.0, 2.0)?)
        .abs();
        let (f, v) = meanaction_core::bounds::monomial_invariants(0.7, 4);
        let equality = (0.5 * f - v).abs();
        checks.push(Check {
            name: "bounds identities (hm symmetry, monomial equality line)",
            pass: hm_sym < 1e-15 && equality < 1e-15,
            detail: format!("hm {hm_sym:.1e}, equality {equality:.1e}"),
        });
    }

    let all_pass = checks.iter().all(|c| c.pass);
    let payload = json!({
        "quick": quick,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "pass": c.pass,
            "detail": c.detail,
        })).collect::<Vec<_>>(),
        "all_pass": all_pass,
    });
    emit(format, &merge(envelope(None, Some(1e-9)), payload), None);
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}
