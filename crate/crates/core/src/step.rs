//! Piecewise-constant functions on the circle with rational data.

use serde::{Deserialize, Serialize};

use crate::circle::Arc;
use crate::error::{Error, Result};
use crate::rat::Rat;

/// Lengths of overlap between `arc` and each piece `(b_i, b_{i+1}]` (cyclic)
/// of the partition given by `breakpoints`.
pub fn piece_overlaps(breakpoints: &[Rat], arc: &Arc) -> Vec<Rat> {
    let n = breakpoints.len();
    if n <= 1 {
        return vec![arc.length().clone()];
    }
    let mut out = vec![Rat::zero(); n];
    for (x, y) in arc.linear_parts() {
        // Linear segments of [0, 1]: (0, b_0] and (b_{n-1}, 1] belong to the last piece.
        let mut add = |piece: usize, lo: &Rat, hi: &Rat| {
            let a = if lo > &x { lo } else { &x };
            let b = if hi < &y { hi } else { &y };
            if b > a {
                out[piece] += &(b - a);
            }
        };
        add(n - 1, &Rat::zero(), &breakpoints[0]);
        for i in 0..n - 1 {
            add(i, &breakpoints[i], &breakpoints[i + 1]);
        }
        add(n - 1, &breakpoints[n - 1], &Rat::one());
    }
    out
}

/// Exact step function on the circle.
///
/// Piece `i` is the arc `(breakpoints[i], breakpoints[i + 1]]`, the last one
/// wrapping to `breakpoints[0] + 1`. Stored canonically: equal neighbours are
/// merged and a constant is `{ breakpoints: [0], values: [c] }`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepFn {
    breakpoints: Vec<Rat>,
    values: Vec<Rat>,
    #[serde(skip)]
    cuts: Vec<Rat>,
    #[serde(skip)]
    cut_values: Vec<Rat>,
    #[serde(skip)]
    prefix: Vec<Rat>,
}

#[derive(Deserialize)]
struct StepFnFile {
    breakpoints: Vec<Rat>,
    values: Vec<Rat>,
}

impl<'de> Deserialize<'de> for StepFn {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = StepFnFile::deserialize(deserializer)?;
        StepFn::new(raw.breakpoints, raw.values).map_err(serde::de::Error::custom)
    }
}

impl StepFn {
    pub fn new(breakpoints: Vec<Rat>, values: Vec<Rat>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::InvalidStepFn(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        for b in &breakpoints {
            if b.is_negative() || *b >= Rat::one() {
                return Err(Error::InvalidStepFn(format!("breakpoint {b} outside [0, 1)")));
            }
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStepFn(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self::canonical(breakpoints, values))
    }

    pub fn constant(c: Rat) -> Self {
        Self::canonical(vec![Rat::zero()], vec![c])
    }

    /// Indicator of an arc (not the full circle) times `height`.
    pub fn indicator(arc: &Arc, height: Rat) -> Self {
        if arc.is_full() {
            return Self::constant(height);
        }
        let (a, b) = (arc.start().clone(), arc.end());
        let (bps, vals) = if a < b {
            (vec![a, b], vec![height, Rat::zero()])
        } else {
            (vec![b, a], vec![Rat::zero(), height])
        };
        Self::canonical(bps, vals)
    }

    /// Build from arbitrary (unsorted, possibly duplicated) breakpoints;
    /// the value of each piece is sampled by `f` at the piece's right end.
    fn from_sampler(mut points: Vec<Rat>, f: impl Fn(&Rat) -> Rat) -> Self {
        points.iter_mut().for_each(|p| *p = p.frac());
        points.sort();
        points.dedup();
        if points.is_empty() {
            points.push(Rat::zero());
        }
        let n = points.len();
        let values = (0..n)
            .map(|i| {
                let right = if i + 1 < n {
                    points[i + 1].clone()
                } else {
                    // Piece wraps: sample just after the last point.
                    &points[0] + &Rat::one()
                };
                // Midpoint lies strictly inside the piece.
                let mid = ((&points[i] + &right) * Rat::new(1, 2)).frac();
                f(&mid)
            })
            .collect();
        Self::canonical(points, values)
    }

    fn canonical(breakpoints: Vec<Rat>, values: Vec<Rat>) -> Self {
        let n = values.len();
        let mut keep: Vec<usize> = (0..n)
            .filter(|&i| values[i] != values[(i + n - 1) % n])
            .collect();
        let (bps, vals) = if keep.is_empty() {
            (vec![Rat::zero()], vec![values[0].clone()])
        } else {
            keep.sort();
            (
                keep.iter().map(|&i| breakpoints[i].clone()).collect(),
                keep.iter().map(|&i| values[i].clone()).collect(),
            )
        };
        let mut f = StepFn {
            breakpoints: bps,
            values: vals,
            cuts: Vec::new(),
            cut_values: Vec::new(),
            prefix: Vec::new(),
        };
        f.build_prefix();
        f
    }

    fn build_prefix(&mut self) {
        let n = self.breakpoints.len();
        let last = self.values[n - 1].clone();
        let mut cuts = vec![Rat::zero()];
        let mut cut_values = vec![last.clone()];
        for i in 0..n {
            cuts.push(self.breakpoints[i].clone());
            cut_values.push(self.values[i].clone());
        }
        cuts.push(Rat::one());
        // cut_values[j] is the value on (cuts[j], cuts[j + 1]].
        let mut prefix = vec![Rat::zero()];
        for j in 0..cuts.len() - 1 {
            let seg = (&cuts[j + 1] - &cuts[j]) * &cut_values[j];
            let next = prefix[j].clone() + seg;
            prefix.push(next);
        }
        self.cuts = cuts;
        self.cut_values = cut_values;
        self.prefix = prefix;
    }

    pub fn breakpoints(&self) -> &[Rat] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    pub fn num_pieces(&self) -> usize {
        self.values.len()
    }

    pub fn is_constant(&self) -> bool {
        self.values.len() == 1
    }

    /// Jump points; empty for a constant.
    pub fn jumps(&self) -> &[Rat] {
        if self.is_constant() {
            &[]
        } else {
            &self.breakpoints
        }
    }

    pub fn piece_arc(&self, i: usize) -> Arc {
        if self.is_constant() {
            return Arc::full();
        }
        let next = &self.breakpoints[(i + 1) % self.breakpoints.len()];
        Arc::between(&self.breakpoints[i], next)
    }

    pub fn max_value(&self) -> Rat {
        self.values.iter().max().expect("non-empty").clone()
    }

    pub fn min_value(&self) -> Rat {
        self.values.iter().min().expect("non-empty").clone()
    }

    /// `sup |φ|`.
    pub fn sup_abs(&self) -> Rat {
        self.values.iter().map(Rat::abs).max().expect("non-empty")
    }

    /// Value at `t`, using the half-open convention: `t` belongs to the piece
    /// whose right end it is (or lies inside).
    pub fn eval(&self, t: &Rat) -> Rat {
        let t = t.frac();
        if t.is_zero() {
            return self.cut_values.last().expect("non-empty").clone();
        }
        let j = self.segment_of(&t);
        self.cut_values[j].clone()
    }

    /// Segment `j` with `cuts[j] < x <= cuts[j + 1]`, for `x` in `(0, 1]`.
    fn segment_of(&self, x: &Rat) -> usize {
        // partition_point gives the first cut >= x.
        let p = self.cuts.partition_point(|c| c < x);
        p.max(1) - 1
    }

    /// `∫_0^x φ` for `x` in `[0, 1]`.
    fn primitive(&self, x: &Rat) -> Rat {
        if x.is_zero() {
            return Rat::zero();
        }
        let j = self.segment_of(x);
        &self.prefix[j] + &((x - &self.cuts[j]) * &self.cut_values[j])
    }

    pub fn total_integral(&self) -> Rat {
        self.prefix.last().expect("non-empty").clone()
    }

    /// `∫_I φ` via the prefix-sum primitive.
    pub fn integral(&self, arc: &Arc) -> Rat {
        arc.linear_parts()
            .iter()
            .map(|(x, y)| self.primitive(y) - self.primitive(x))
            .sum()
    }

    /// `∫_I φ` as the direct sum of overlap times value.
    pub fn integral_naive(&self, arc: &Arc) -> Rat {
        piece_overlaps(&self.breakpoints, arc)
            .iter()
            .zip(&self.values)
            .map(|(len, v)| len * v)
            .sum()
    }

    /// `(overlap, value)` for every piece meeting `arc` with positive length.
    pub fn overlaps(&self, arc: &Arc) -> Vec<(Rat, &Rat)> {
        piece_overlaps(&self.breakpoints, arc)
            .into_iter()
            .zip(&self.values)
            .filter(|(len, _)| len.is_positive())
            .collect()
    }

    /// `φ(· - shift)`.
    pub fn translate(&self, shift: &Rat) -> StepFn {
        let points = self.breakpoints.iter().map(|b| b + shift).collect();
        Self::from_sampler(points, |t| self.eval(&(t - shift)))
    }

    pub fn scale(&self, lambda: &Rat) -> StepFn {
        let values = self.values.iter().map(|v| v * lambda).collect();
        Self::canonical(self.breakpoints.clone(), values)
    }

    pub fn add_constant(&self, c: &Rat) -> StepFn {
        let values = self.values.iter().map(|v| v + c).collect();
        Self::canonical(self.breakpoints.clone(), values)
    }

    pub fn abs(&self) -> StepFn {
        let values = self.values.iter().map(Rat::abs).collect();
        Self::canonical(self.breakpoints.clone(), values)
    }

    pub fn add(&self, other: &StepFn) -> StepFn {
        let points = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .cloned()
            .collect();
        Self::from_sampler(points, |t| self.eval(t) + other.eval(t))
    }

    pub fn sub(&self, other: &StepFn) -> StepFn {
        self.add(&other.scale(&Rat::integer(-1)))
    }

    pub fn is_zero(&self) -> bool {
        self.is_constant() && self.values[0].is_zero()
    }
}
