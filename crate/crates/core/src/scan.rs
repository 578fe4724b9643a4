//! Exact sweep over all arcs with endpoints on a grid.
//!
//! Positions are rescaled by the common denominator `L` of the grid and the
//! breakpoints, values by the common denominator `V` of the values. For an
//! arc of scaled length `len` with scaled integral `S`,
//!
//! ```text
//! osc = Σ ℓ_s |w_s len - S| / (len² V)      avg|φ| = Σ ℓ_s |w_s| / (len V)
//! ```
//!
//! so every per-arc quantity is a ratio of integers. When `2 W L⁴` fits in
//! `i128` (W = max scaled |value|) no intermediate or cross product can
//! overflow and the sweep runs on machine integers; otherwise it falls back
//! to `Rat` arithmetic arc by arc.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::circle::Arc;
use crate::rat::{cmp_fractions, common_denominator, Rat};
use crate::step::StepFn;

/// A nonnegative exact quantity produced by the sweep.
#[derive(Clone, Debug)]
pub(crate) enum Q {
    /// `num / den`, to be divided by the kernel's value scale.
    Int(i128, i128),
    Big(Rat),
}

impl Q {
    fn cmp(&self, other: &Q) -> Ordering {
        match (self, other) {
            (Q::Int(a, b), Q::Int(c, d)) => {
                // Float screen first; the quotients carry relative error
                // below 1e-15, so a wider gap decides the order exactly.
                let x = *a as f64 / *b as f64;
                let y = *c as f64 / *d as f64;
                if (x - y).abs() > 1e-12 * x.abs().max(y.abs()) {
                    return x.partial_cmp(&y).expect("finite");
                }
                cmp_fractions(*a, *b, *c, *d)
            }
            (Q::Big(x), Q::Big(y)) => x.cmp(y),
            _ => unreachable!("one kernel never mixes representations"),
        }
    }

    fn zero(fast: bool) -> Q {
        if fast {
            Q::Int(0, 1)
        } else {
            Q::Big(Rat::zero())
        }
    }
}

fn raise(slot: &mut Q, b: &Q) {
    if b.cmp(slot) == Ordering::Greater {
        *slot = b.clone();
    }
}

struct Fast {
    scale_values: BigInt,
    length: i128,
    pos: Vec<i128>,
    /// Unrolled cuts over `[0, 2L]`; segment `s` is `(cuts[s], cuts[s + 1]]`.
    cuts: Vec<i128>,
    vals: Vec<i128>,
    prefix: Vec<i128>,
    prefix_abs: Vec<i128>,
    /// First segment touched by an arc starting at grid point `i`.
    start_seg: Vec<usize>,
    /// Last segment touched by an arc ending at grid point `i` (first copy).
    end_seg: Vec<usize>,
    /// Same, for the point shifted by `L` (second copy).
    end_seg_wrapped: Vec<usize>,
}

impl Fast {
    fn build(f: &StepFn, grid: &[Rat]) -> Option<Fast> {
        let length_big = common_denominator(grid.iter().chain(f.breakpoints()));
        let scale_values = common_denominator(f.values());
        let scaled_vals: Vec<BigInt> = f
            .values()
            .iter()
            .map(|v| v.numer() * (&scale_values / v.denom()))
            .collect();
        let w_max = scaled_vals
            .iter()
            .map(|w| if w.sign() == num_bigint::Sign::Minus { -w } else { w.clone() })
            .max()
            .unwrap_or_else(BigInt::one)
            .max(BigInt::one());
        let bound = BigInt::from(2) * &w_max * length_big.pow(4);
        if bound.bits() >= 126 {
            return None;
        }
        let length = length_big.to_i128()?;
        let scale = |r: &Rat| -> i128 {
            (r.numer() * (&length_big / r.denom()))
                .to_i128()
                .expect("bounded by L")
        };
        let w: Vec<i128> = scaled_vals.iter().map(|x| x.to_i128().expect("bounded")).collect();

        let bps: Vec<i128> = f.breakpoints().iter().map(scale).collect();
        let n = bps.len();
        let mut cuts = vec![0i128];
        let mut vals = vec![w[n - 1]];
        for i in 0..n {
            cuts.push(bps[i]);
            vals.push(w[i]);
        }
        let segs = vals.len();
        // Second copy: (L + cuts[j], L + cuts[j + 1]] with the same values.
        for j in 0..segs {
            cuts.push(length + cuts[j]);
            vals.push(vals[j]);
        }
        cuts.push(2 * length);
        let mut prefix = vec![0i128];
        let mut prefix_abs = vec![0i128];
        for s in 0..vals.len() {
            let len = cuts[s + 1] - cuts[s];
            prefix.push(prefix[s] + len * vals[s]);
            prefix_abs.push(prefix_abs[s] + len * vals[s].abs());
        }

        let pos: Vec<i128> = grid.iter().map(scale).collect();
        // Start segment: cuts[s] <= A < cuts[s + 1].
        let seg_from_right = |x: i128| cuts.partition_point(|&c| c <= x) - 1;
        // End segment: cuts[s] < B <= cuts[s + 1].
        let seg_from_left = |x: i128| cuts.partition_point(|&c| c < x) - 1;
        let start_seg = pos.iter().map(|&p| seg_from_right(p)).collect();
        let end_seg = pos
            .iter()
            .map(|&p| if p == 0 { usize::MAX } else { seg_from_left(p) })
            .collect();
        let end_seg_wrapped = pos.iter().map(|&p| seg_from_left(p + length)).collect();

        Some(Fast {
            scale_values,
            length,
            pos,
            cuts,
            vals,
            prefix,
            prefix_abs,
            start_seg,
            end_seg,
            end_seg_wrapped,
        })
    }

    fn primitive(&self, seg: usize, x: i128, abs: bool) -> i128 {
        let (p, v) = if abs {
            (self.prefix_abs[seg], self.vals[seg].abs())
        } else {
            (self.prefix[seg], self.vals[seg])
        };
        p + (x - self.cuts[seg]) * v
    }

    /// `(osc numerator, len, avg|φ| numerator)` for the arc `(g_a, g_{a+j}]`.
    fn arc(&self, a: usize, j: usize) -> (i128, i128, i128) {
        let m = self.pos.len();
        let start = self.pos[a];
        let sa = self.start_seg[a];
        let (end, eb) = if j == m {
            (start + self.length, self.end_seg_wrapped[a])
        } else {
            let b = (a + j) % m;
            if a + j >= m || self.pos[b] <= start {
                (self.pos[b] + self.length, self.end_seg_wrapped[b])
            } else {
                (self.pos[b], self.end_seg[b])
            }
        };
        let len = end - start;
        let integral = self.primitive(eb, end, false) - self.primitive(sa, start, false);
        let integral_abs = self.primitive(eb, end, true) - self.primitive(sa, start, true);
        let mut num = 0i128;
        for s in sa..=eb {
            let lo = self.cuts[s].max(start);
            let hi = self.cuts[s + 1].min(end);
            if hi > lo {
                num += (hi - lo) * (self.vals[s] * len - integral).abs();
            }
        }
        (num, len, integral_abs)
    }

    fn to_rat(&self, num: i128, den: i128) -> Rat {
        Rat::from_bigints(BigInt::from(num), BigInt::from(den) * &self.scale_values)
            .expect("positive denominator")
    }
}

/// One grid arc with its exact mean oscillation.
#[derive(Clone, Debug)]
pub(crate) struct ArcValue {
    pub a: usize,
    pub j: usize,
    osc: Q,
    len: Q,
}

pub(crate) struct ArcScan<'a> {
    f: &'a StepFn,
    abs: StepFn,
    grid: &'a [Rat],
    fast: Option<Fast>,
}

impl<'a> ArcScan<'a> {
    /// `grid` must be sorted, deduplicated and inside `[0, 1)`.
    pub fn new(f: &'a StepFn, grid: &'a [Rat]) -> Self {
        ArcScan {
            f,
            abs: f.abs(),
            grid,
            fast: Fast::build(f, grid),
        }
    }

    pub fn is_fast(&self) -> bool {
        self.fast.is_some()
    }

    fn size(&self) -> usize {
        self.grid.len()
    }

    pub fn arc(&self, a: usize, j: usize) -> Arc {
        let m = self.size();
        if j == m {
            Arc::between(&self.grid[a], &self.grid[a])
        } else {
            Arc::between(&self.grid[a], &self.grid[(a + j) % m])
        }
    }

    /// `(oscillation, length, average of |φ|)`.
    fn eval(&self, a: usize, j: usize) -> (Q, Q, Q) {
        match &self.fast {
            Some(fast) => {
                let (num, len, abs_num) = fast.arc(a, j);
                (Q::Int(num, len * len), Q::Int(len, 1), Q::Int(abs_num, len))
            }
            None => {
                let arc = self.arc(a, j);
                let osc = crate::bmo::mean_oscillation(self.f, &arc);
                let avg = crate::bmo::average(&self.abs, &arc);
                (Q::Big(osc), Q::Big(arc.length().clone()), Q::Big(avg))
            }
        }
    }

    pub fn to_rat(&self, q: &Q) -> Rat {
        match (q, &self.fast) {
            (Q::Int(n, d), Some(fast)) => fast.to_rat(*n, *d),
            (Q::Big(r), _) => r.clone(),
            _ => unreachable!("integer quantities come from the fast kernel"),
        }
    }

    pub fn oscillation_of(&self, v: &ArcValue) -> Rat {
        self.to_rat(&v.osc)
    }

    /// Larger oscillation wins; ties go to the longer arc, then the smaller
    /// start index. A total order, so parallel reduction is deterministic.
    fn better(x: &ArcValue, y: &ArcValue) -> bool {
        match x.osc.cmp(&y.osc) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match x.len.cmp(&y.len) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => x.a < y.a,
            },
        }
    }

    fn pick(x: ArcValue, y: ArcValue) -> ArcValue {
        if Self::better(&y, &x) {
            y
        } else {
            x
        }
    }

    /// Maximum oscillation over every grid arc, including the full circle.
    pub fn max_oscillation(&self) -> ArcValue {
        let m = self.size();
        (0..m)
            .into_par_iter()
            .map(|a| {
                let mut best: Option<ArcValue> = None;
                for j in 1..=m {
                    let (osc, len, _) = self.eval(a, j);
                    let cand = ArcValue { a, j, osc, len };
                    best = Some(match best {
                        Some(b) => Self::pick(b, cand),
                        None => cand,
                    });
                }
                best.expect("non-empty grid")
            })
            .reduce_with(Self::pick)
            .expect("non-empty grid")
    }

    /// For every grid point `t`: the maximum oscillation and the maximum
    /// average of `|φ|` over grid arcs containing `t`.
    pub fn pointwise(&self) -> (Vec<Rat>, Vec<Rat>) {
        let m = self.size();
        let fast = self.is_fast();
        let init = || (vec![Q::zero(fast); m], vec![Q::zero(fast); m]);
        let (sharp, maximal) = (0..m)
            .into_par_iter()
            .fold(init, |(mut sharp, mut maximal), a| {
                // Arc (g_a, g_{a+j}] contains g_{a+i} exactly for i <= j
                // (i = m meaning g_a itself, reached only by the full circle).
                let mut run_osc = Q::zero(fast);
                let mut run_avg = Q::zero(fast);
                for j in (1..=m).rev() {
                    let (osc, _, avg) = self.eval(a, j);
                    raise(&mut run_osc, &osc);
                    raise(&mut run_avg, &avg);
                    let t = (a + j) % m;
                    raise(&mut sharp[t], &run_osc);
                    raise(&mut maximal[t], &run_avg);
                }
                (sharp, maximal)
            })
            .reduce(init, |(mut s1, mut m1), (s2, m2)| {
                s1.iter_mut().zip(&s2).for_each(|(x, y)| raise(x, y));
                m1.iter_mut().zip(&m2).for_each(|(x, y)| raise(x, y));
                (s1, m1)
            });
        (
            sharp.iter().map(|q| self.to_rat(q)).collect(),
            maximal.iter().map(|q| self.to_rat(q)).collect(),
        )
    }

    /// Maxima over grid arcs containing an arbitrary point `t`.
    pub fn at_point(&self, t: &Rat) -> (Rat, Rat) {
        let m = self.size();
        let fast = self.is_fast();
        let mut best_osc = Q::zero(fast);
        let mut best_avg = Q::zero(fast);
        for a in 0..m {
            let offset = (t - &self.grid[a]).frac();
            // Smallest j whose arc reaches t; only the full circle contains g_a.
            let first = if offset.is_zero() {
                m
            } else {
                (1..=m)
                    .find(|&j| {
                        j == m || (&self.grid[(a + j) % m] - &self.grid[a]).frac() >= offset
                    })
                    .expect("j = m always qualifies")
            };
            for j in first..=m {
                let (osc, _, avg) = self.eval(a, j);
                raise(&mut best_osc, &osc);
                raise(&mut best_avg, &avg);
            }
        }
        (self.to_rat(&best_osc), self.to_rat(&best_avg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bmo::{average, mean_oscillation};

    fn r(p: i64, q: i64) -> Rat {
        Rat::new(p, q)
    }

    fn grid(den: i64) -> Vec<Rat> {
        (0..den).map(|k| r(k, den)).collect()
    }

    #[test]
    fn fast_kernel_matches_rational_path_on_every_arc() {
        let f = StepFn::new(
            vec![Rat::zero(), r(1, 3), r(1, 2), r(5, 6)],
            vec![r(3, 2), r(-1, 3), Rat::integer(2), r(1, 4)],
        )
        .unwrap();
        let g = grid(12);
        let scan = ArcScan::new(&f, &g);
        assert!(scan.is_fast());
        let abs = f.abs();
        for a in 0..g.len() {
            for j in 1..=g.len() {
                let arc = scan.arc(a, j);
                let (osc, len, avg) = scan.eval(a, j);
                assert_eq!(scan.to_rat(&osc), mean_oscillation(&f, &arc), "arc {arc:?}");
                assert_eq!(scan.to_rat(&avg), average(&abs, &arc));
                let Q::Int(l, _) = len else { panic!() };
                assert_eq!(Rat::new(l as i64, 12), *arc.length());
            }
        }
    }

    #[test]
    fn fallback_matches_fast_path() {
        let f = StepFn::new(vec![r(1, 5), r(2, 3)], vec![Rat::one(), r(-2, 7)]).unwrap();
        let g: Vec<Rat> = {
            let mut v: Vec<Rat> = grid(10).into_iter().chain([r(1, 3), r(2, 3)]).collect();
            v.sort();
            v.dedup();
            v
        };
        let fast = ArcScan::new(&f, &g);
        let mut slow = ArcScan::new(&f, &g);
        slow.fast = None;
        let (bf, bs) = (fast.max_oscillation(), slow.max_oscillation());
        assert_eq!((bf.a, bf.j), (bs.a, bs.j));
        assert_eq!(fast.oscillation_of(&bf), slow.oscillation_of(&bs));
        assert_eq!(fast.pointwise(), slow.pointwise());
        assert_eq!(fast.at_point(&r(1, 7)), slow.at_point(&r(1, 7)));
    }

    #[test]
    fn huge_denominators_take_the_rational_path() {
        let tiny = Rat::from_bigints(BigInt::one(), BigInt::from(10u64).pow(20)).unwrap();
        let f = StepFn::new(vec![Rat::zero(), tiny.clone()], vec![Rat::one(), Rat::zero()]).unwrap();
        let g = vec![Rat::zero(), tiny, r(1, 2)];
        assert!(!ArcScan::new(&f, &g).is_fast());
    }
}
