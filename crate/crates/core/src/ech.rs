//! Lattice combinatorics of the embedded contact homology of
//! L(p, p−1): the grading formula, its brute-force lattice-count oracle,
//! the sweep ordering of generators, knot-filtration values, the N_k
//! sequence, w(k), and the quadratic lower bound on N_{w(k)}.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::precision::{Dd, PrecisionMode};

#[derive(Debug, Error)]
pub enum EchError {
    #[error("invalid slope data: {0}")]
    InvalidSlope(String),
    #[error("floor guard tripped: {context} is within guard of an integer ({value})")]
    FloorGuardTripped { value: f64, context: String },
    #[error("sweep rank {rank} disagrees with the index formula ({actual_index} vs expected {expected_index}); guard too loose")]
    OrderingMismatch {
        rank: usize,
        expected_index: i64,
        actual_index: i64,
    },
    #[error("width {width} of generator {k} not located in the N-sequence")]
    RankNotFound { k: u64, width: f64 },
    #[error("{which} violated at k = {k}: lhs {lhs} < rhs {rhs}")]
    BoundViolated {
        k: u64,
        lhs: f64,
        rhs: f64,
        which: String,
    },
}

/// The pair (a, b) = (y₊, −y₋+F) with integer sum p, plus the guard
/// configuration for all floor evaluations.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeData {
    pub a: f64,
    pub b: f64,
    pub p: i64,
    pub guard_eps: f64,
    pub precision: PrecisionMode,
}

impl SlopeData {
    pub fn new(a: f64, b: f64, p: i64) -> Result<SlopeData, EchError> {
        if !(a > 0.0 && b > 0.0) {
            return Err(EchError::InvalidSlope("a and b must be positive".into()));
        }
        if p < 1 {
            return Err(EchError::InvalidSlope(
                "p must be a positive integer".into(),
            ));
        }
        if (a + b - p as f64).abs() > 1e-12 {
            return Err(EchError::InvalidSlope(format!(
                "a + b = {} differs from p = {}",
                a + b,
                p
            )));
        }
        Ok(SlopeData {
            a,
            b,
            p,
            guard_eps: 1e-9,
            precision: PrecisionMode::Double,
        })
    }

    pub fn with_guard(mut self, guard_eps: f64) -> SlopeData {
        self.guard_eps = guard_eps;
        self
    }

    pub fn with_precision(mut self, precision: PrecisionMode) -> SlopeData {
        self.precision = precision;
        self
    }

    fn floor_ratio(&self, num: u64, den: f64, context: &str) -> Result<i64, EchError> {
        crate::precision::guarded_floor_ratio(num, den, self.guard_eps, self.precision).ok_or(
            EchError::FloorGuardTripped {
                value: num as f64 / den,
                context: format!("{context} ({num}/{den})"),
            },
        )
    }
}

/// An orbit-set generator e₊^{m₊} e₋^{m₋} with m₊ ≡ m₋ (mod p);
/// its lattice point is V = (d, m₊) with d = (m₊ − m₋)/p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Generator {
    pub m_plus: u64,
    pub m_minus: u64,
}

impl Generator {
    pub fn new(m_plus: u64, m_minus: u64, p: i64) -> Result<Generator, EchError> {
        if (m_plus as i128 - m_minus as i128) % p as i128 != 0 {
            return Err(EchError::InvalidSlope(format!(
                "m₊ = {m_plus}, m₋ = {m_minus} are not congruent mod p = {p}"
            )));
        }
        Ok(Generator { m_plus, m_minus })
    }

    pub fn from_lattice(d: i64, m_plus: u64, p: i64) -> Option<Generator> {
        let m_minus = m_plus as i128 - d as i128 * p as i128;
        if m_minus < 0 {
            return None;
        }
        Some(Generator {
            m_plus,
            m_minus: m_minus as u64,
        })
    }

    pub fn d(&self, p: i64) -> i64 {
        ((self.m_plus as i128 - self.m_minus as i128) / p as i128) as i64
    }

    pub fn is_empty(&self) -> bool {
        self.m_plus == 0 && self.m_minus == 0
    }
}

/// Conley–Zehnder index of the k-fold cover of an elliptic orbit with
/// rotation number theta: CZ(γᵏ) = 2⌊kθ⌋ + 1.
pub fn cz_elliptic(
    theta: f64,
    k: u64,
    guard_eps: f64,
    precision: PrecisionMode,
) -> Result<i64, EchError> {
    assert!(k >= 1);
    let trip = |value: f64| EchError::FloorGuardTripped {
        value,
        context: format!("{k}·{theta}"),
    };
    let fl = match precision {
        PrecisionMode::Double => {
            let v = k as f64 * theta;
            if (v - v.round()).abs() <= guard_eps {
                return Err(trip(v));
            }
            v.floor() as i64
        }
        PrecisionMode::DoubleDouble => {
            let v = Dd::from_u64(k) * Dd::from_f64(theta);
            if v.dist_to_int() <= guard_eps {
                return Err(trip(v.to_f64()));
            }
            v.floor() as i64
        }
    };
    Ok(2 * fl + 1)
}

/// ECH index by the grading formula
/// I = −p d² + Σ_{i≤m₊}(2⌊i/a⌋+1) + Σ_{j≤m₋}(2⌊j/b⌋+1).
pub fn ech_index(s: &SlopeData, g: &Generator) -> Result<i64, EchError> {
    let d = g.d(s.p);
    let mut total = -s.p * d * d;
    for i in 1..=g.m_plus {
        total += 2 * s.floor_ratio(i, s.a, "i/a")? + 1;
    }
    for j in 1..=g.m_minus {
        total += 2 * s.floor_ratio(j, s.b, "j/b")? + 1;
    }
    Ok(total)
}

/// Brute-force oracle: twice the number of lattice points in the closed
/// triangle bounded by the horizontal axis, the skew axis of slope p, and
/// the line of slope a through V = (d, m₊), minus two. Enumerates the
/// bounding box with a pointwise membership test.
pub fn ech_index_oracle(s: &SlopeData, g: &Generator) -> Result<i64, EchError> {
    let d = g.d(s.p);
    let (a, p) = (s.a, s.p as f64);
    let m_plus = g.m_plus as f64;

    let x_int = d as f64 - m_plus / a; // L ∩ horizontal axis
    let skew_u = (m_plus - a * d as f64) / s.b; // L ∩ skew axis, u-coordinate
    let u_lo = x_int.floor() as i64;
    let u_hi = skew_u.ceil() as i64;
    let v_hi = (p * skew_u).ceil().max(m_plus) as i64;

    let mut count: i64 = 0;
    for u in u_lo..=u_hi {
        for v in 0..=v_hi {
            let line = m_plus + a * (u as f64 - d as f64);
            let on_line_gap = (v as f64 - line).abs();
            if on_line_gap <= s.guard_eps && !(u == d && v == g.m_plus as i64) {
                return Err(EchError::FloorGuardTripped {
                    value: line,
                    context: format!("lattice point ({u}, {v}) against the slope-a line"),
                });
            }
            let inside = v >= 0 && v as f64 >= p * u as f64 && (v as f64) <= line;
            if inside {
                count += 1;
            }
        }
    }
    Ok(2 * count - 2)
}

/// Sweep key of a lattice point: the line of slope a through V has
/// x-intercept shift m₊ − a d, the order in which points are swept up.
pub fn sweep_key(s: &SlopeData, g: &Generator) -> f64 {
    g.m_plus as f64 - s.a * g.d(s.p) as f64
}

/// Sum of the two knot filtrations: width = m₊/a + m₋/b.
pub fn width(s: &SlopeData, g: &Generator) -> f64 {
    g.m_plus as f64 * (1.0 / s.a) + g.m_minus as f64 * (1.0 / s.b)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Filtrations {
    pub f_plus: f64,
    pub f_minus: f64,
    pub sum: f64,
}

/// 𝓕_{e₊} = m₊(1/a − 1/p) + m₋/p and 𝓕_{e₋} = m₊/p + m₋(1/b − 1/p);
/// their sum is the width.
pub fn knot_filtrations(s: &SlopeData, g: &Generator) -> Filtrations {
    let p = s.p as f64;
    let f_plus = g.m_plus as f64 * (1.0 / s.a - 1.0 / p) + g.m_minus as f64 / p;
    let f_minus = g.m_plus as f64 / p + g.m_minus as f64 * (1.0 / s.b - 1.0 / p);
    Filtrations {
        f_plus,
        f_minus,
        sum: width(s, g),
    }
}

#[derive(Debug, Clone)]
struct HeapItem {
    key: f64,
    d: i64,
    m_plus: u64,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    // reversed: BinaryHeap is a max-heap, we want smallest key first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.d.cmp(&self.d))
            .then_with(|| other.m_plus.cmp(&self.m_plus))
    }
}

/// Lazily merged enumeration of the northwest-quadrant lattice points in
/// sweep order. Each row is a fixed d with m₊ ascending from max(0, pd).
struct SweepIter<'a> {
    s: &'a SlopeData,
    heap: BinaryHeap<HeapItem>,
    next_pos: i64,
    next_neg: i64,
}

impl<'a> SweepIter<'a> {
    fn new(s: &'a SlopeData) -> Self {
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem {
            key: 0.0,
            d: 0,
            m_plus: 0,
        });
        SweepIter {
            s,
            heap,
            next_pos: 1,
            next_neg: -1,
        }
    }

    // must evaluate as exactly the same expression as the pushed keys, or
    // a 1-ulp mismatch could delay a row activation past its first pop
    fn row_min_key(&self, d: i64) -> f64 {
        self.row_start(d) as f64 - self.s.a * d as f64
    }

    fn row_start(&self, d: i64) -> u64 {
        if d >= 0 {
            (self.s.p * d) as u64
        } else {
            0
        }
    }
}

impl<'a> Iterator for SweepIter<'a> {
    type Item = (Generator, f64);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let top_key = self.heap.peek().expect("sweep heap never empties").key;
            if self.row_min_key(self.next_pos) <= top_key {
                let d = self.next_pos;
                let m = self.row_start(d);
                self.heap.push(HeapItem {
                    key: m as f64 - self.s.a * d as f64,
                    d,
                    m_plus: m,
                });
                self.next_pos += 1;
                continue;
            }
            if self.row_min_key(self.next_neg) <= top_key {
                let d = self.next_neg;
                self.heap.push(HeapItem {
                    key: -self.s.a * d as f64,
                    d,
                    m_plus: 0,
                });
                self.next_neg -= 1;
                continue;
            }
            break;
        }
        let item = self.heap.pop()?;
        self.heap.push(HeapItem {
            key: item.key + 1.0,
            d: item.d,
            m_plus: item.m_plus + 1,
        });
        let g = Generator::from_lattice(item.d, item.m_plus, self.s.p)
            .expect("sweep stays in the northwest quadrant");
        Some((g, item.key))
    }
}

/// Generators in sweep order up to the given (even) ECH index, with the
/// index formula cross-checked against the rank at every step.
pub fn generators_by_index(s: &SlopeData, max_index: i64) -> Result<Vec<Generator>, EchError> {
    assert!(max_index >= 0 && max_index % 2 == 0);
    let n_wanted = (max_index / 2) as usize + 1;
    let mut out = Vec::with_capacity(n_wanted);
    let mut prev_key = f64::NEG_INFINITY;
    for (rank, (g, key)) in SweepIter::new(s).take(n_wanted).enumerate() {
        if key - prev_key <= s.guard_eps && rank > 0 {
            return Err(EchError::OrderingMismatch {
                rank,
                expected_index: 2 * rank as i64,
                actual_index: i64::MIN,
            });
        }
        prev_key = key;
        let idx = ech_index(s, &g)?;
        if idx != 2 * rank as i64 {
            return Err(EchError::OrderingMismatch {
                rank,
                expected_index: 2 * rank as i64,
                actual_index: idx,
            });
        }
        out.push(g);
    }
    Ok(out)
}

/// First `count` values of the sorted multiset {iα + jβ : i, j ≥ 0},
/// duplicates retained, N₀ = 0.
pub fn n_sequence(alpha: f64, beta: f64, count: usize) -> Vec<f64> {
    assert!(alpha > 0.0 && beta > 0.0 && count >= 1);
    NSeqIter::new(alpha, beta)
        .take(count)
        .map(|(v, _, _)| v)
        .collect()
}

struct NSeqIter {
    alpha: f64,
    beta: f64,
    heap: BinaryHeap<NSeqItem>,
    next_row: u64,
}

#[derive(Debug, Clone)]
struct NSeqItem {
    value: f64,
    i: u64,
    j: u64,
}

impl PartialEq for NSeqItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for NSeqItem {}
impl PartialOrd for NSeqItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for NSeqItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .value
            .total_cmp(&self.value)
            .then_with(|| other.i.cmp(&self.i))
            .then_with(|| other.j.cmp(&self.j))
    }
}

impl NSeqIter {
    fn new(alpha: f64, beta: f64) -> Self {
        let mut heap = BinaryHeap::new();
        heap.push(NSeqItem {
            value: 0.0,
            i: 0,
            j: 0,
        });
        NSeqIter {
            alpha,
            beta,
            heap,
            next_row: 1,
        }
    }
}

impl Iterator for NSeqIter {
    type Item = (f64, u64, u64);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let top = self.heap.peek().expect("sequence heap never empties").value;
            let row_min = self.next_row as f64 * self.alpha;
            if row_min <= top {
                self.heap.push(NSeqItem {
                    value: row_min,
                    i: self.next_row,
                    j: 0,
                });
                self.next_row += 1;
            } else {
                break;
            }
        }
        let item = self.heap.pop()?;
        self.heap.push(NSeqItem {
            value: item.i as f64 * self.alpha + (item.j + 1) as f64 * self.beta,
            i: item.i,
            j: item.j + 1,
        });
        Some((item.value, item.i, item.j))
    }
}

/// w(k) for k = 0..=k_max in one pass: the rank, in the N-sequence of
/// (1/a, 1/b), of the width of the index-2k generator.
pub fn w_sequence(s: &SlopeData, k_max: u64) -> Result<Vec<u64>, EchError> {
    let gens = generators_by_index(s, 2 * k_max as i64)?;
    let alpha = 1.0 / s.a;
    let beta = 1.0 / s.b;
    let tol = s.guard_eps;
    let mut out = Vec::with_capacity(gens.len());
    let mut seq = NSeqIter::new(alpha, beta).enumerate();
    let mut pending: Option<(usize, f64, u64, u64)> = None;
    for (k, g) in gens.iter().enumerate() {
        let target = g.m_plus as f64 * alpha + g.m_minus as f64 * beta;
        let scale = target.abs().max(1.0);
        let mut found: Option<u64> = None;
        loop {
            let (rank, value, i, j) = match pending.take() {
                Some(p) => (p.0, p.1, p.2, p.3),
                None => {
                    let (rank, (value, i, j)) = seq.next().expect("N-sequence is infinite");
                    (rank, value, i, j)
                }
            };
            if value > target + tol * scale {
                pending = Some((rank, value, i, j));
                break;
            }
            if (value - target).abs() <= tol * scale {
                if (i, j) == (g.m_plus, g.m_minus) {
                    if found.is_some() {
                        return Err(EchError::RankNotFound {
                            k: k as u64,
                            width: target,
                        });
                    }
                    found = Some(rank as u64);
                } else {
                    // a different pair within the guard window: ambiguous
                    return Err(EchError::RankNotFound {
                        k: k as u64,
                        width: target,
                    });
                }
            }
        }
        match found {
            Some(rank) => out.push(rank),
            None => {
                return Err(EchError::RankNotFound {
                    k: k as u64,
                    width: target,
                })
            }
        }
    }
    Ok(out)
}

pub fn w_of_k(s: &SlopeData, k: u64) -> Result<u64, EchError> {
    Ok(*w_sequence(s, k)?.last().expect("sequence nonempty"))
}

#[derive(Debug, Clone, Serialize)]
pub struct NkBoundReport {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub k_max: u64,
    pub min_margin_quadratic: f64,
    pub min_margin_nk: f64,
}

/// Verifies, for all k ≤ k_max, the quadratic bound
/// 2k(a+b)/(ab) ≤ N² + c₀N and the lower bound
/// N² ≥ 2k(a+b)/(ab) − c₁√k + c₂, where N = N_{w(k)}(1/a, 1/b) is the
/// width of the index-2k generator. Constants:
/// c₀ = (a+b)(max(a,b)+1)/(ab), c₁ = c₀·√(2(a+b)/(ab)), c₂ = 0.
pub fn nk_lower_bound_check(s: &SlopeData, k_max: u64) -> Result<NkBoundReport, EchError> {
    let gens = generators_by_index(s, 2 * k_max as i64)?;
    let ab_factor = (s.a + s.b) / (s.a * s.b);
    let c0 = ab_factor * (s.a.max(s.b) + 1.0);
    let c1 = c0 * (2.0 * ab_factor).sqrt();
    let c2 = 0.0;
    let fp_slack = 1e-9;
    let mut min_margin_quadratic = f64::INFINITY;
    let mut min_margin_nk = f64::INFINITY;
    for (k, g) in gens.iter().enumerate() {
        let n = width(s, g);
        let lhs_target = 2.0 * k as f64 * ab_factor;
        let quad_margin = n * n + c0 * n - lhs_target;
        if quad_margin < -fp_slack {
            return Err(EchError::BoundViolated {
                k: k as u64,
                lhs: n * n + c0 * n,
                rhs: lhs_target,
                which: "quadratic bound".into(),
            });
        }
        let nk_rhs = lhs_target - c1 * (k as f64).sqrt() + c2;
        let nk_margin = n * n - nk_rhs;
        if nk_margin < -fp_slack {
            return Err(EchError::BoundViolated {
                k: k as u64,
                lhs: n * n,
                rhs: nk_rhs,
                which: "N_{w(k)} lower bound".into(),
            });
        }
        min_margin_quadratic = min_margin_quadratic.min(quad_margin);
        min_margin_nk = min_margin_nk.min(nk_margin);
    }
    Ok(NkBoundReport {
        c0,
        c1,
        c2,
        k_max,
        min_margin_quadratic,
        min_margin_nk,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RelativeInvariants {
    pub c_a0: i64,
    pub q_a0: i64,
    pub c_ds: i64,
    pub q_ds: i64,
}

/// The relative first Chern class and self-intersection constants used to
/// assemble the index formula: both vanish on the page class, and the
/// Seifert-surface class contributes Q = −p d².
pub fn relative_invariant_constants(p: i64, d: i64) -> RelativeInvariants {
    RelativeInvariants {
        c_a0: 0,
        q_a0: 0,
        c_ds: 0,
        q_ds: -p * d * d,
    }
}

/// The slope fixture used throughout: a = 1 + e/30, b = 2 − e/30, p = 3.
pub fn example_slopes() -> SlopeData {
    let a = 1.0 + std::f64::consts::E / 30.0;
    SlopeData::new(a, 3.0 - a, 3).unwrap()
}
