//! Translated dyadic systems on the real line with level-dependent offsets.
//!
//! Level `n` of a system is `{(k 2^{-n} + s_n, (k+1) 2^{-n} + s_n]}`. The
//! offsets used here are `s_n = δ` for `n >= 0` and, for negative levels,
//! `s_n = δ + (4^j - 1)/3` with `j = ⌈-n/2⌉`, so an odd negative level
//! shares the offset of the next coarser even level. Nesting between
//! consecutive levels (`(s_n - s_{n+1}) 2^{n+1} ∈ ℤ`) is checked on build.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::circle::{dyadic_distance, pairwise_distance};
use crate::error::{Error, Result};
use crate::rat::Rat;

/// A nested system of left-open dyadic partitions of ℝ on levels `n_min..=n_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RLevelSystem {
    delta: Rat,
    n_min: i32,
    n_max: i32,
    offsets: BTreeMap<i32, Rat>,
}

/// `(4^j - 1) / 3` as an integer.
fn coarse_offset(j: u32) -> Rat {
    let four_j = BigInt::one() << (2 * j as usize);
    Rat::from((four_j - 1) / 3)
}

fn check_levels(n_min: i32, n_max: i32) -> Result<()> {
    if n_min > 0 || n_max < 0 || n_min < -(crate::circle::MAX_LEVEL as i32) {
        return Err(Error::LevelOutOfRange {
            level: n_min.min(-n_max) as i64,
        });
    }
    if n_max > crate::circle::MAX_LEVEL as i32 {
        return Err(Error::LevelOutOfRange {
            level: n_max as i64,
        });
    }
    Ok(())
}

/// Build the `δ`-translated system on `n_min..=n_max` (`n_min <= 0 <= n_max`).
pub fn build_r_filtration(delta: &Rat, n_min: i32, n_max: i32) -> Result<RLevelSystem> {
    if dyadic_distance(delta)?.is_zero() && !delta.is_zero() {
        return Err(Error::InadmissibleShift {
            delta: delta.clone(),
        });
    }
    check_levels(n_min, n_max)?;
    let offsets = (n_min..=n_max)
        .map(|n| {
            let s = if n >= 0 {
                delta.clone()
            } else {
                delta + &coarse_offset(((-n + 1) / 2) as u32)
            };
            (n, s)
        })
        .collect();
    RLevelSystem::from_offsets(delta.clone(), n_min, n_max, offsets)
}

impl RLevelSystem {
    /// The untranslated system (all offsets zero).
    pub fn standard(n_min: i32, n_max: i32) -> Result<Self> {
        check_levels(n_min, n_max)?;
        let offsets = (n_min..=n_max).map(|n| (n, Rat::zero())).collect();
        Self::from_offsets(Rat::zero(), n_min, n_max, offsets)
    }

    /// Any offset table; rejected unless consecutive levels nest.
    pub fn from_offsets(
        delta: Rat,
        n_min: i32,
        n_max: i32,
        offsets: BTreeMap<i32, Rat>,
    ) -> Result<Self> {
        check_levels(n_min, n_max)?;
        if offsets.keys().copied().ne(n_min..=n_max) {
            return Err(Error::Config("offset table must cover every level".into()));
        }
        for n in n_min..n_max {
            let diff = &offsets[&n] - &offsets[&(n + 1)];
            if !diff.mul_pow2(n + 1).is_integer() {
                return Err(Error::NestingViolated {
                    level: n,
                    next: n + 1,
                    diff,
                });
            }
        }
        Ok(RLevelSystem {
            delta,
            n_min,
            n_max,
            offsets,
        })
    }

    pub fn delta(&self) -> &Rat {
        &self.delta
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<i32> {
        self.n_min..=self.n_max
    }

    pub fn offsets(&self) -> &BTreeMap<i32, Rat> {
        &self.offsets
    }

    pub fn offset(&self, n: i32) -> Option<&Rat> {
        self.offsets.get(&n)
    }

    /// `(k 2^{-n} + s_n, (k+1) 2^{-n} + s_n]`.
    pub fn interval(&self, n: i32, k: &BigInt) -> Option<(Rat, Rat)> {
        let s = self.offset(n)?;
        let lo = Rat::from(k.clone()).mul_pow2(-n) + s;
        let hi = &lo + &Rat::pow2(-n);
        Some((lo, hi))
    }

    /// Index of the level-`n` interval containing `(a, b]`, if one does.
    pub fn containing(&self, n: i32, a: &Rat, b: &Rat) -> Option<BigInt> {
        let s = self.offset(n)?;
        let k = (a - s).mul_pow2(n).floor();
        let (_, hi) = self.interval(n, &k)?;
        (b <= &hi).then_some(k)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RFit {
    pub system: usize,
    pub level: i32,
    #[serde(serialize_with = "serialize_display")]
    pub index: BigInt,
    pub lo: Rat,
    pub hi: Rat,
    pub ratio: Rat,
}

fn serialize_display<S: serde::Serializer>(n: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(n)
}

/// Smallest-ratio fit of `(a, b]` over all systems and levels, with no bound.
/// Ties go to the finer level, then the lower system index.
pub fn best_fit_r(a: &Rat, b: &Rat, systems: &[RLevelSystem]) -> Option<RFit> {
    let len = b - a;
    let mut levels: Vec<i32> = systems.iter().flat_map(|s| s.levels()).collect();
    levels.sort_unstable_by(|x, y| y.cmp(x));
    levels.dedup();
    for n in levels {
        if Rat::pow2(-n) < len {
            continue;
        }
        for (i, s) in systems.iter().enumerate() {
            if let Some(index) = s.containing(n, a, b) {
                let (lo, hi) = s.interval(n, &index).expect("level exists");
                return Some(RFit {
                    system: i,
                    level: n,
                    index,
                    ratio: Rat::pow2(-n) / &len,
                    lo,
                    hi,
                });
            }
        }
    }
    None
}

/// Fit `(a, b]` with ratio `<= 4 / d`, where `d` is the pairwise dyadic
/// distance of the systems' translates. Levels are tried from the finest
/// one that can hold the interval towards coarser ones.
pub fn fit_interval_r(a: &Rat, b: &Rat, systems: &[RLevelSystem]) -> Result<RFit> {
    if b <= a {
        return Err(Error::InvalidArc(format!("empty interval ({a}, {b}]")));
    }
    let deltas: Vec<Rat> = systems.iter().map(|s| s.delta().frac()).collect();
    let d = pairwise_distance(&deltas)?;
    if d.is_zero() {
        return Err(Error::InadmissibleFamily);
    }
    let bound = Rat::integer(4) / &d;
    let len = b - a;
    // Finest level with 2^{-n} >= |I|.
    let finest = (len.recip().to_f64().log2().floor() as i64 + 1)
        .to_i32()
        .unwrap_or(i32::MAX);
    let mut n = finest;
    while Rat::pow2(-n) < len {
        n -= 1;
    }
    while Rat::pow2(-(n + 1)) >= len {
        n += 1;
    }
    let n_max = systems.iter().map(|s| s.n_max).min().unwrap_or(0);
    let n_min = systems.iter().map(|s| s.n_min).max().unwrap_or(0);
    if n > n_max {
        return Err(Error::LevelOutOfRange { level: n as i64 });
    }
    while n >= n_min && Rat::pow2(-n) <= &bound * &len {
        for (i, s) in systems.iter().enumerate() {
            if let Some(index) = s.containing(n, a, b) {
                let (lo, hi) = s.interval(n, &index).expect("level exists");
                return Ok(RFit {
                    system: i,
                    level: n,
                    index,
                    ratio: Rat::pow2(-n) / &len,
                    lo,
                    hi,
                });
            }
        }
        n -= 1;
    }
    let best = best_fit_r(a, b, systems)
        .map(|f| format!("best available ratio {} at level {}", f.ratio, f.level))
        .unwrap_or_else(|| "no containing interval on any level".into());
    Err(Error::NoFit(format!(
        "({a}, {b}] has no fit with ratio <= {bound}; {best}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rat {
        Rat::new(p, q)
    }

    #[test]
    fn offsets_and_nesting() {
        let sys = build_r_filtration(&r(1, 3), -4, 3).unwrap();
        assert_eq!(sys.offset(0), Some(&r(1, 3)));
        assert_eq!(sys.offset(2), Some(&r(1, 3)));
        assert_eq!(sys.offset(-1), Some(&r(4, 3)));
        assert_eq!(sys.offset(-2), Some(&r(4, 3)));
        assert_eq!(sys.offset(-3), Some(&r(16, 3)));
        assert_eq!(sys.offset(-4), Some(&r(16, 3)));
        let json = serde_json::to_value(&sys).unwrap();
        assert_eq!(json["offsets"]["-3"], "16/3");
    }

    #[test]
    fn bad_offsets_rejected() {
        let mut offsets: BTreeMap<i32, Rat> = (-2..=2).map(|n| (n, r(1, 3))).collect();
        offsets.insert(-1, r(1, 2));
        assert!(matches!(
            RLevelSystem::from_offsets(r(1, 3), -2, 2, offsets),
            Err(Error::NestingViolated { level: -2, .. })
        ));
        assert!(build_r_filtration(&r(1, 2), -2, 2).is_err());
        assert!(build_r_filtration(&r(1, 3), 1, 2).is_err());
    }

    #[test]
    fn intervals_nest_across_levels() {
        let sys = build_r_filtration(&r(1, 3), -6, 4).unwrap();
        for n in -6..4 {
            for k in -3i64..3 {
                let (lo, hi) = sys.interval(n + 1, &BigInt::from(k)).unwrap();
                let parent = sys.containing(n, &lo, &hi);
                assert!(parent.is_some(), "level {n} child {k} has no parent");
            }
        }
    }

    #[test]
    fn fit_examples() {
        let base = RLevelSystem::standard(-8, 8).unwrap();
        let third = build_r_filtration(&r(1, 3), -8, 8).unwrap();
        let systems = [base, third];
        let fit = fit_interval_r(&r(3, 10), &r(4, 10), &systems).unwrap();
        assert!(fit.ratio <= Rat::integer(12));
        assert!(fit.lo <= r(3, 10) && r(4, 10) <= fit.hi);

        let err = fit_interval_r(&Rat::integer(10), &Rat::integer(10), &systems);
        assert!(err.is_err());
        let too_fine = fit_interval_r(&Rat::zero(), &r(1, 1 << 12), &systems);
        assert!(matches!(too_fine, Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn unbounded_family_without_shift_offsets() {
        // Two copies of the standard system cannot straddle 0.
        let a = RLevelSystem::standard(-8, 8).unwrap();
        let d = build_r_filtration(&r(1, 3), -8, 8).unwrap();
        assert!(fit_interval_r(&r(-1, 10), &r(1, 10), &[a.clone(), a.clone()]).is_err());
        assert!(fit_interval_r(&r(-1, 10), &r(1, 10), &[a, d]).is_ok());
    }
}
