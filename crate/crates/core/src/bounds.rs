//! Quantitative bounds around the main inequality: the harmonic-mean
//! upper bound, the hypothesis case classifier, the disk-collapse
//! criterion, and closed forms for the monomial twist family.

use serde::Serialize;
use thiserror::Error;

use crate::action::{ActionContext, ActionError};
use crate::precision::looks_rational;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("inputs must be positive (got {0})")]
    NonPositiveInput(f64),
}

/// The numerical invariants of one lifted map.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MapInvariants {
    pub y_plus: f64,
    pub y_minus: f64,
    pub flux: f64,
    pub calabi: f64,
}

impl MapInvariants {
    pub fn from_context(ctx: &ActionContext) -> Result<MapInvariants, ActionError> {
        Ok(MapInvariants {
            y_plus: ctx.map.y_plus,
            y_minus: ctx.map.y_minus,
            flux: ctx.flux()?,
            calabi: ctx.calabi()?,
        })
    }

    /// The outer and inner boundary values of the action function.
    pub fn boundary_pair(&self) -> (f64, f64) {
        (self.y_plus, -self.y_minus + self.flux)
    }

    pub fn p_tilde(&self) -> f64 {
        self.y_plus - self.y_minus + self.flux
    }
}

pub fn harmonic_mean(a: f64, b: f64) -> Result<f64, BoundsError> {
    if a <= 0.0 {
        return Err(BoundsError::NonPositiveInput(a));
    }
    if b <= 0.0 {
        return Err(BoundsError::NonPositiveInput(b));
    }
    Ok(2.0 * a * b / (a + b))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PenultimateBound {
    pub bound: f64,
    /// bound − (𝒱 + N); negative exactly when 𝒱 + N ≥ hm(...).
    pub gap_vs_calabi: f64,
}

/// √(hm(y₊+N, −y₋+F+N) · (𝒱+N)): the upper bound on the infimum of the
/// shifted mean action.
pub fn penultimate_bound(inv: &MapInvariants, n: i64) -> Result<PenultimateBound, BoundsError> {
    let (a0, b0) = inv.boundary_pair();
    let shifted = n as f64;
    let a = a0 + shifted;
    let b = b0 + shifted;
    let v = inv.calabi + shifted;
    if v <= 0.0 {
        return Err(BoundsError::NonPositiveInput(v));
    }
    let hm = harmonic_mean(a, b)?;
    let bound = (hm * v).sqrt();
    Ok(PenultimateBound {
        bound,
        gap_vs_calabi: bound - v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    #[serde(rename = "1a")]
    C1a,
    #[serde(rename = "1b")]
    C1b,
    #[serde(rename = "2a_i")]
    C2aI,
    #[serde(rename = "2a_ii")]
    C2aII,
    #[serde(rename = "2a_iii")]
    C2aIII,
    #[serde(rename = "2a_iv")]
    C2aIV,
    #[serde(rename = "2b")]
    C2b,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RationalityEvidence {
    Declared,
    ContinuedFraction,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct RationalFlags {
    pub y_plus_rational: Option<bool>,
    pub y_minus_rational: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifierReport {
    pub case: CaseLabel,
    pub hypothesis_holds: bool,
    pub m: f64,
    pub big_m: f64,
    pub harmonic_mean: f64,
    /// Which boundary attains the minimum action value.
    pub min_side_is_plus: bool,
    pub y_m_rational: bool,
    pub rationality_evidence: RationalityEvidence,
}

const RATIONAL_DEN_BOUND: u64 = 1_000_000;
const RATIONAL_EPS: f64 = 1e-9;
const TIE_EPS: f64 = 1e-12;

/// Case labels from the seven-way analysis, with
/// m = min{y₊, −y₋+F}, M = max{y₊, −y₋+F}, hm their harmonic mean.
/// A floating input can never prove irrationality, so the report carries
/// the evidence source (user flag vs continued-fraction test).
pub fn hypothesis_classifier(inv: &MapInvariants, flags: &RationalFlags) -> ClassifierReport {
    let (plus_val, minus_val) = inv.boundary_pair();
    let v = inv.calabi;
    let (m, big_m) = (plus_val.min(minus_val), plus_val.max(minus_val));
    let min_side_is_plus = plus_val <= minus_val;
    let hm = 2.0 * plus_val * minus_val / (plus_val + minus_val);

    let mut evidence = RationalityEvidence::ContinuedFraction;
    let mut rational = |x: f64, flag: Option<bool>| -> bool {
        match flag {
            Some(r) => {
                evidence = RationalityEvidence::Declared;
                r
            }
            None => looks_rational(x, RATIONAL_DEN_BOUND, RATIONAL_EPS),
        }
    };
    let y_plus_rational = rational(inv.y_plus, flags.y_plus_rational);
    let y_minus_rational = rational(inv.y_minus, flags.y_minus_rational);
    let y_m_rational = if min_side_is_plus {
        y_plus_rational
    } else {
        y_minus_rational
    };

    let case = if y_m_rational {
        if v < m - TIE_EPS {
            CaseLabel::C1a
        } else {
            CaseLabel::C1b
        }
    } else if v < hm - TIE_EPS {
        if (m - big_m).abs() <= TIE_EPS {
            CaseLabel::C2aI
        } else if v < m - TIE_EPS {
            CaseLabel::C2aII
        } else if min_side_is_plus {
            CaseLabel::C2aIV
        } else {
            CaseLabel::C2aIII
        }
    } else {
        CaseLabel::C2b
    };

    let hypothesis_holds = v < big_m - TIE_EPS || y_plus_rational || y_minus_rational;

    ClassifierReport {
        case,
        hypothesis_holds,
        m,
        big_m,
        harmonic_mean: hm,
        min_side_is_plus,
        y_m_rational,
        rationality_evidence: evidence,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseClassification {
    /// F/2 ≤ 𝒱: the annulus statement is not derivable from the disk
    /// statement via the fixed collapse.
    NewForAnnulus,
    MaybeReducible,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiskCollapse {
    pub f_kappa_origin: f64,
    pub calabi_kappa: f64,
    pub criterion_12fv: bool,
    pub classification: CollapseClassification,
    /// True when the boundary roles were swapped (−y₋+F > y₊) before
    /// applying the collapse formulas; the swap is conjugation by the
    /// half-turn (x,y) ↦ (−x,−y), which maps (y₊, y₋, F, 𝒱) to
    /// (−y₋, −y₊, −F, 𝒱−F) and leaves the criterion invariant.
    pub swapped: bool,
}

/// Collapsing the low-action boundary to a point: f_κ(0,0) = F/2,
/// 𝒱(ψ_κ) = 𝒱/2 + F/4, and the criterion F/2 ≤ 𝒱.
pub fn disk_collapse_stats(inv: &MapInvariants) -> DiskCollapse {
    let (plus_val, minus_val) = inv.boundary_pair();
    let swapped = plus_val < minus_val;
    let (flux, calabi) = if swapped {
        (-inv.flux, inv.calabi - inv.flux)
    } else {
        (inv.flux, inv.calabi)
    };
    let f_kappa_origin = 0.5 * flux;
    let calabi_kappa = 0.5 * calabi + 0.25 * flux;
    let criterion_12fv = f_kappa_origin <= calabi + 1e-12;
    DiskCollapse {
        f_kappa_origin,
        calabi_kappa,
        criterion_12fv,
        classification: if criterion_12fv {
            CollapseClassification::NewForAnnulus
        } else {
            CollapseClassification::MaybeReducible
        },
        swapped,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FamilyReport {
    pub flux: f64,
    pub calabi: f64,
    pub criterion_holds: bool,
}

/// Closed forms for the monomial twist family ψ(x,y) = (x, y + 2π c xⁿ):
/// F = 2c/(n+1) (n even) or 0 (n odd); 𝒱 = c/(n+1) (n even) or
/// 2c/(n+2) (n odd). Even n lands exactly on the F/2 = 𝒱 equality.
pub fn appendix_family_report(c: f64, n: u32) -> Result<FamilyReport, BoundsError> {
    if c <= 0.0 {
        return Err(BoundsError::NonPositiveInput(c));
    }
    let (flux, calabi) = monomial_invariants(c, n);
    Ok(FamilyReport {
        flux,
        calabi,
        criterion_holds: 0.5 * flux <= calabi + 1e-15,
    })
}

/// (F, 𝒱) of the twist by g(x) = c xⁿ.
pub fn monomial_invariants(c: f64, n: u32) -> (f64, f64) {
    if n.is_multiple_of(2) {
        (2.0 * c / (n as f64 + 1.0), c / (n as f64 + 1.0))
    } else {
        (0.0, 2.0 * c / (n as f64 + 2.0))
    }
}

/// (F, 𝒱) of the twist by a polynomial profile, by linearity over
/// monomials.
pub fn polynomial_twist_invariants(coeffs: &[f64]) -> (f64, f64) {
    let mut flux = 0.0;
    let mut calabi = 0.0;
    for (k, &c) in coeffs.iter().enumerate() {
        let (f, v) = signed_monomial_invariants(c, k as u32);
        flux += f;
        calabi += v;
    }
    (flux, calabi)
}

fn signed_monomial_invariants(c: f64, n: u32) -> (f64, f64) {
    // same closed forms, valid for any sign of c
    if n.is_multiple_of(2) {
        (2.0 * c / (n as f64 + 1.0), c / (n as f64 + 1.0))
    } else {
        (0.0, 2.0 * c / (n as f64 + 2.0))
    }
}
