//! Double-double arithmetic (~31 significant digits) for the lattice
//! guards, plus a continued-fraction rational detector.

use serde::Serialize;

/// Unevaluated sum hi + lo with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn from_u64(n: u64) -> Dd {
        // u64 up to 2^53 is exact; split larger values
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        Dd { hi, lo }.renorm()
    }

    fn renorm(self) -> Dd {
        let (s, e) = two_sum(self.hi, self.lo);
        Dd { hi: s, lo: e }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn floor(self) -> f64 {
        let fh = self.hi.floor();
        if self.hi == fh {
            // hi is integral; lo decides the side
            if self.lo < 0.0 {
                fh - 1.0
            } else {
                fh
            }
        } else {
            fh
        }
    }

    /// Distance to the nearest integer.
    pub fn dist_to_int(self) -> f64 {
        let n = self.to_f64().round();
        (self - Dd::from_f64(n)).to_f64().abs()
    }
}

impl std::ops::Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        Dd {
            hi: s,
            lo: e + self.lo + rhs.lo,
        }
        .renorm()
    }
}

impl std::ops::Sub for Dd {
    type Output = Dd;
    fn sub(self, rhs: Dd) -> Dd {
        self + Dd {
            hi: -rhs.hi,
            lo: -rhs.lo,
        }
    }
}

impl std::ops::Mul for Dd {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        Dd {
            hi: p,
            lo: e + self.hi * rhs.lo + self.lo * rhs.hi,
        }
        .renorm()
    }
}

impl std::ops::Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r2 = r - rhs * Dd::from_f64(q2);
        let q3 = r2.hi / rhs.hi;
        Dd::from_f64(q1) + Dd::from_f64(q2) + Dd::from_f64(q3)
    }
}

/// Precision used for lattice-guard arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum PrecisionMode {
    #[default]
    Double,
    DoubleDouble,
}

/// ⌊num/den⌋ with a guard: errors (returns None) when num/den is within
/// `guard_eps` of an integer.
pub fn guarded_floor_ratio(num: u64, den: f64, guard_eps: f64, mode: PrecisionMode) -> Option<i64> {
    match mode {
        PrecisionMode::Double => {
            let q = num as f64 / den;
            if (q - q.round()).abs() <= guard_eps {
                None
            } else {
                Some(q.floor() as i64)
            }
        }
        PrecisionMode::DoubleDouble => {
            let q = Dd::from_u64(num) / Dd::from_f64(den);
            if q.dist_to_int() <= guard_eps {
                None
            } else {
                Some(q.floor() as i64)
            }
        }
    }
}

/// Best rational approximation p/q with q <= max_den, via continued
/// fractions. Returns (p, q, |x - p/q|).
pub fn rational_approx(x: f64, max_den: u64) -> (i64, u64, f64) {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let mut v = x.abs();
    // convergents
    let (mut p0, mut q0, mut p1, mut q1): (i64, u64, i64, u64) = (1, 0, v.floor() as i64, 1);
    let mut frac = v - v.floor();
    for _ in 0..64 {
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
        let a = v.floor();
        if a as u64 > u64::MAX / 2 {
            break;
        }
        frac = v - a;
        let p2 = a as i64 * p1 + p0;
        let q2 = a as u64 * q1 + q0;
        if q2 > max_den {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    let err = (x.abs() - p1 as f64 / q1 as f64).abs();
    ((sign * p1 as f64) as i64, q1, err)
}

/// Heuristic rationality test. A bare distance cutoff is useless at f64
/// scale (every real has q ≤ max_den approximations with error ~ 1/q²),
/// so a convergent p/q only counts as a detection when it both lands
/// within `eps` and beats the Dirichlet scale 1/q² by a factor of 10³.
pub fn looks_rational(x: f64, max_den: u64, eps: f64) -> bool {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let mut v = x.abs();
    let (mut p1, mut q1): (i64, u64) = (v.floor() as i64, 1);
    let (mut p0, mut q0): (i64, u64) = (1, 0);
    let mut frac = v - v.floor();
    for _ in 0..64 {
        let err = (x - sign * p1 as f64 / q1 as f64).abs();
        if err <= eps && err * (q1 as f64) * (q1 as f64) <= 1e-3 {
            return true;
        }
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
        let a = v.floor();
        if a as u64 > u64::MAX / 2 {
            break;
        }
        frac = v - a;
        let p2 = a as i64 * p1 + p0;
        let q2 = a as u64 * q1 + q0;
        if q2 > max_den {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    false
}
