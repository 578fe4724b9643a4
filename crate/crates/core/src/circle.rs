//! Circle geometry and translated dyadic filtrations.
//!
//! The circle is `[0, 1)` (one unit = one full turn). Arcs are half-open,
//! `(start, start + length]` taken modulo 1, so the level-0 dyadic interval
//! of the base filtration is `(0, 1]`.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rat::Rat;

/// Largest supported dyadic level on the circle (indices are `u64`).
pub const MAX_LEVEL: u32 = 62;

fn check_unit(value: &Rat) -> Result<()> {
    if value.is_negative() || *value >= Rat::one() {
        return Err(Error::OutOfUnitInterval {
            value: value.clone(),
        });
    }
    Ok(())
}

/// Distance from `x` to the nearest integer, for `x = r / q` with `0 <= r < q`.
fn nearest_integer_distance(r: &BigInt, q: &BigInt) -> Rat {
    let other = q - r;
    let num = if *r < other { r.clone() } else { other };
    Rat::from_bigints(num, q.clone()).expect("positive denominator")
}

/// `d(δ) = min_{n >= 0} dist(2^n δ, Z)`, exact for rational `δ ∈ [0, 1)`.
///
/// The doubling orbit of `p/q` has a transient of length `v_2(q)` followed
/// by a pure cycle over residues modulo the odd part of `q`, so the infimum
/// is a minimum over at most `q` orbit points.
pub fn dyadic_distance(delta: &Rat) -> Result<Rat> {
    check_unit(delta)?;
    if delta.is_dyadic() {
        return Ok(Rat::zero());
    }
    let q = delta.denom().clone();
    let p = delta.numer().clone();
    let twos = q.trailing_zeros().unwrap_or(0);
    let odd = &q >> twos;

    let mut best = Rat::one();
    // Transient: 2^n p mod q for n < twos.
    let mut r = p.clone() % &q;
    for _ in 0..twos {
        best = best.min(nearest_integer_distance(&r, &q));
        r = (r << 1u32) % &q;
    }
    // From n = twos on, 2^n p / q ≡ 2^(n - twos) p / odd (mod 1); purely periodic.
    let start = p % &odd;
    let mut r = start.clone();
    loop {
        best = best.min(nearest_integer_distance(&r, &odd));
        r = (r << 1u32) % &odd;
        if r == start {
            break;
        }
    }
    Ok(best)
}

/// `min_{i != j} d((δ_i - δ_j) mod 1)`.
pub fn pairwise_distance(deltas: &[Rat]) -> Result<Rat> {
    if deltas.len() < 2 {
        return Err(Error::TooFew {
            min: 2,
            got: deltas.len(),
        });
    }
    for d in deltas {
        check_unit(d)?;
    }
    let mut best: Option<Rat> = None;
    for (i, a) in deltas.iter().enumerate() {
        for b in &deltas[i + 1..] {
            // d(x) = d(1 - x): one orientation per unordered pair suffices.
            let d = dyadic_distance(&(a - b).frac())?;
            best = Some(match best {
                Some(cur) => cur.min(d),
                None => d,
            });
        }
    }
    Ok(best.expect("at least one pair"))
}

/// A translation `δ` of the dyadic filtration, with `d(δ)` memoized.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ShiftFile")]
pub struct Shift {
    delta: Rat,
    distance: Rat,
}

#[derive(Deserialize)]
struct ShiftFile {
    delta: Rat,
}

impl TryFrom<ShiftFile> for Shift {
    type Error = Error;
    fn try_from(raw: ShiftFile) -> Result<Self> {
        Shift::new(raw.delta)
    }
}

impl Shift {
    pub fn new(delta: Rat) -> Result<Self> {
        let distance = dyadic_distance(&delta)?;
        Ok(Shift { delta, distance })
    }

    /// The untranslated filtration, `δ = 0`.
    pub fn base() -> Self {
        Shift {
            delta: Rat::zero(),
            distance: Rat::zero(),
        }
    }

    pub fn delta(&self) -> &Rat {
        &self.delta
    }

    /// Memoized `d(δ)`.
    pub fn distance(&self) -> &Rat {
        &self.distance
    }

    pub fn is_admissible(&self) -> bool {
        self.distance.is_positive()
    }

    pub fn is_base(&self) -> bool {
        self.delta.is_zero()
    }

    pub fn require_admissible(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(Error::InadmissibleShift {
                delta: self.delta.clone(),
            })
        }
    }

    /// Index of the level-`n` interval whose closure-from-the-left contains
    /// the left endpoint `a`, i.e. the only candidate to contain an arc
    /// starting at `a`.
    pub fn index_from_left(&self, a: &Rat, level: u32) -> u64 {
        let y = (a - &self.delta).frac().mul_pow2(level as i32);
        y.floor().to_u64().expect("index fits u64")
    }

    /// Index of the level-`n` interval containing the point `t`.
    pub fn index_of_point(&self, t: &Rat, level: u32) -> u64 {
        let y = (t - &self.delta).frac().mul_pow2(level as i32);
        let c = y.ceil().to_u64().expect("index fits u64");
        if c == 0 {
            (1u64 << level) - 1
        } else {
            c - 1
        }
    }
}

/// Arc `(start, start + length]` of the circle, taken modulo 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ArcFile")]
pub struct Arc {
    start: Rat,
    length: Rat,
}

#[derive(Deserialize)]
struct ArcFile {
    start: Rat,
    length: Rat,
}

impl TryFrom<ArcFile> for Arc {
    type Error = Error;
    fn try_from(raw: ArcFile) -> Result<Self> {
        Arc::new(raw.start, raw.length)
    }
}

impl Arc {
    pub fn new(start: Rat, length: Rat) -> Result<Self> {
        check_unit(&start)?;
        if !length.is_positive() || length > Rat::one() {
            return Err(Error::InvalidArc(format!("length {length} not in (0, 1]")));
        }
        Ok(Arc { start, length })
    }

    pub fn full() -> Self {
        Arc {
            start: Rat::zero(),
            length: Rat::one(),
        }
    }

    /// The arc `(a, b]` traversed counterclockwise; `a == b` gives the full circle.
    pub fn between(a: &Rat, b: &Rat) -> Self {
        let start = a.frac();
        let mut length = (b - a).frac();
        if length.is_zero() {
            length = Rat::one();
        }
        Arc { start, length }
    }

    pub fn start(&self) -> &Rat {
        &self.start
    }

    pub fn length(&self) -> &Rat {
        &self.length
    }

    /// Right endpoint reduced modulo 1.
    pub fn end(&self) -> Rat {
        (&self.start + &self.length).frac()
    }

    pub fn is_full(&self) -> bool {
        self.length == Rat::one()
    }

    /// True when the arc passes through the point 0 ≡ 1 in its interior.
    pub fn wraps(&self) -> bool {
        &self.start + &self.length > Rat::one()
    }

    /// Half-open containment `t ∈ (start, start + length]` modulo 1.
    pub fn contains_point(&self, t: &Rat) -> bool {
        if self.is_full() {
            return true;
        }
        let offset = (t - &self.start).frac();
        offset.is_positive() && offset <= self.length
    }

    /// Set inclusion `other ⊆ self` modulo 1.
    pub fn contains_arc(&self, other: &Arc) -> bool {
        if self.is_full() {
            return true;
        }
        if other.length > self.length {
            return false;
        }
        let offset = (&other.start - &self.start).frac();
        offset + &other.length <= self.length
    }

    /// True when `t` lies strictly inside the arc, excluding both endpoints.
    pub fn has_interior_point(&self, t: &Rat) -> bool {
        let offset = (t - &self.start).frac();
        offset.is_positive() && offset < self.length
    }

    /// The arc as at most two linear pieces `(x, y]` of `[0, 1]`.
    pub fn linear_parts(&self) -> Vec<(Rat, Rat)> {
        let end = &self.start + &self.length;
        if end <= Rat::one() {
            vec![(self.start.clone(), end)]
        } else {
            vec![
                (self.start.clone(), Rat::one()),
                (Rat::zero(), end - Rat::one()),
            ]
        }
    }
}

/// Which of the two filtrations of a 1-d fit was used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Filtration {
    Base,
    Shifted,
}

/// `D_n^{δ,k}`: level `n`, index `k`, translated by `δ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "IntervalFile")]
pub struct DyadicInterval {
    level: u32,
    index: u64,
    shift: Shift,
}

#[derive(Deserialize)]
struct IntervalFile {
    level: u32,
    index: u64,
    shift: Shift,
}

impl TryFrom<IntervalFile> for DyadicInterval {
    type Error = Error;
    fn try_from(raw: IntervalFile) -> Result<Self> {
        DyadicInterval::new(raw.level, raw.index, raw.shift)
    }
}

impl DyadicInterval {
    pub fn new(level: u32, index: u64, shift: Shift) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::LevelOutOfRange {
                level: level as i64,
            });
        }
        if index >= 1u64 << level {
            return Err(Error::InvalidArc(format!(
                "index {index} out of range for level {level}"
            )));
        }
        Ok(DyadicInterval {
            level,
            index,
            shift,
        })
    }

    /// The whole circle as the level-0 interval of the base filtration.
    pub fn whole() -> Self {
        DyadicInterval {
            level: 0,
            index: 0,
            shift: Shift::base(),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn shift(&self) -> &Shift {
        &self.shift
    }

    pub fn length(&self) -> Rat {
        Rat::dyadic_unit(self.level)
    }

    pub fn arc(&self) -> Arc {
        interval_bounds(self)
    }

    /// The two level-`n + 1` halves.
    pub fn children(&self) -> [DyadicInterval; 2] {
        let level = self.level + 1;
        [2 * self.index, 2 * self.index + 1].map(|index| DyadicInterval {
            level,
            index,
            shift: self.shift.clone(),
        })
    }
}

/// Coordinates of `D_n^{δ,k}`: start `(δ + k 2^-n) mod 1`, length `2^-n`.
pub fn interval_bounds(d: &DyadicInterval) -> Arc {
    let unit = Rat::dyadic_unit(d.level);
    let k = Rat::from_bigints(BigInt::from(d.index), BigInt::one()).expect("unit denominator");
    Arc {
        start: (d.shift.delta() + &(k * &unit)).frac(),
        length: unit,
    }
}

/// Certificate that `interval` contains an arc with the stated size ratio.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitResult {
    pub filtration: Filtration,
    pub interval: DyadicInterval,
    /// `|interval| / |arc|`.
    pub ratio: Rat,
}

/// The level `n` with `d 2^{-n-1} <= len < d 2^{-n}`, for `0 < len < d`.
pub fn fit_level(len: &Rat, d: &Rat) -> u32 {
    debug_assert!(len.is_positive() && len < d);
    let mut n = 0u32;
    let mut scale = d.clone();
    // Invariant: scale = d 2^-n and len < scale.
    loop {
        let half = &scale * &Rat::new(1, 2);
        if len >= &half {
            return n;
        }
        scale = half;
        n += 1;
    }
}

/// The level-`n` interval of `shift` containing `arc`, if one does.
pub fn containing_interval(arc: &Arc, shift: &Shift, level: u32) -> Option<DyadicInterval> {
    if level == 0 {
        let whole = DyadicInterval {
            level: 0,
            index: 0,
            shift: shift.clone(),
        };
        return Some(whole);
    }
    if arc.is_full() {
        return None;
    }
    let index = shift.index_from_left(arc.start(), level);
    let d = DyadicInterval {
        level,
        index,
        shift: shift.clone(),
    };
    d.arc().contains_arc(arc).then_some(d)
}

/// Fit `arc` by the base or the `δ`-translated filtration with ratio at most `2/d(δ)`.
///
/// Long arcs (`|I| >= d(δ)`) go to the whole circle. Otherwise the level `n`
/// is pinned by `d 2^{-n-1} <= |I| < d 2^{-n}`; at that level the endpoints
/// of the two partitions are pairwise more than `|I|` apart, so one of the
/// partitions has no endpoint inside `I`. The base filtration wins ties.
pub fn fit_interval(arc: &Arc, shift: &Shift) -> Result<FitResult> {
    shift.require_admissible()?;
    let d = shift.distance();
    if arc.length() >= d {
        return Ok(FitResult {
            filtration: Filtration::Base,
            interval: DyadicInterval::whole(),
            ratio: arc.length().recip(),
        });
    }
    let level = fit_level(arc.length(), d);
    if level > MAX_LEVEL {
        return Err(Error::LevelOutOfRange {
            level: level as i64,
        });
    }
    let ratio = Rat::dyadic_unit(level) / arc.length();
    if let Some(interval) = containing_interval(arc, &Shift::base(), level) {
        return Ok(FitResult {
            filtration: Filtration::Base,
            interval,
            ratio,
        });
    }
    if let Some(interval) = containing_interval(arc, shift, level) {
        return Ok(FitResult {
            filtration: Filtration::Shifted,
            interval,
            ratio,
        });
    }
    Err(Error::NoFit(format!(
        "neither filtration fits arc {:?} at level {level}",
        arc
    )))
}

/// Smallest `|D| / |I|` over `D ∋ I` from any of `shifts`, levels `0..=max_level`.
///
/// No admissibility requirement: used to exhibit unbounded fit ratios when
/// `d(δ) = 0`.
pub fn best_fit_ratio(arc: &Arc, shifts: &[Shift], max_level: u32) -> (Rat, DyadicInterval) {
    let mut best = (arc.length().recip(), DyadicInterval::whole());
    for level in 1..=max_level.min(MAX_LEVEL) {
        if Rat::dyadic_unit(level) < *arc.length() {
            break;
        }
        for shift in shifts {
            if let Some(d) = containing_interval(arc, shift, level) {
                best = (d.length() / arc.length(), d);
                break;
            }
        }
    }
    best
}

/// The dyadic chain `D_0 ⊃ D_1 ⊃ … ⊃ D_depth` of `shift` containing `t`.
pub fn chain(t: &Rat, shift: &Shift, depth: u32) -> Vec<DyadicInterval> {
    (0..=depth)
        .map(|level| DyadicInterval {
            level,
            index: shift.index_of_point(t, level),
            shift: shift.clone(),
        })
        .collect()
}

/// The level-`n` endpoints `{δ + k 2^-n mod 1}` of a filtration.
pub fn level_points(shift: &Shift, level: u32) -> Vec<Rat> {
    let unit = Rat::dyadic_unit(level);
    (0..1u64 << level)
        .map(|k| (shift.delta() + &(Rat::integer(k as i64) * &unit)).frac())
        .collect()
}

/// True when `x` is a level-`n` endpoint of `shift`.
pub fn is_grid_point(x: &Rat, shift: &Shift, level: u32) -> bool {
    (x - shift.delta()).frac().mul_pow2(level as i32).is_integer()
}
