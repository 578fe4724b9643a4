//! Product filtrations on the torus `T^m` built from `m + 1` translates.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bmo::normalize_grid;
use crate::circle::{
    containing_interval, fit_level, is_grid_point, pairwise_distance, Arc, DyadicInterval, Shift,
    MAX_LEVEL,
};
use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::report::Exact;
use crate::step::piece_overlaps;

/// `{δ_0, …, δ_m}` with `d({δ_i}) = min_{i≠j} d(δ_i - δ_j)` memoized.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftFamily {
    deltas: Vec<Rat>,
    distance: Rat,
}

impl ShiftFamily {
    pub fn new(deltas: Vec<Rat>) -> Result<Self> {
        let distance = pairwise_distance(&deltas)?;
        Ok(ShiftFamily { deltas, distance })
    }

    pub fn deltas(&self) -> &[Rat] {
        &self.deltas
    }

    pub fn distance(&self) -> &Rat {
        &self.distance
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn is_admissible(&self) -> bool {
        self.distance.is_positive()
    }

    /// Per-axis fit constant `c = 2 / d({δ_i})`.
    pub fn fit_constant(&self) -> Rat {
        Rat::integer(2) / &self.distance
    }

    fn shift(&self, i: usize) -> Shift {
        Shift::new(self.deltas[i].clone()).expect("validated by pairwise_distance")
    }
}

/// Axis-parallel box `Π (corner_i, corner_i + side_i]` on the torus.
/// A cube has all sides equal; general boxes are accepted by [`Cube::rect`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Cube {
    corner: Vec<Rat>,
    sides: Vec<Rat>,
}

impl Cube {
    pub fn cube(corner: Vec<Rat>, side: Rat) -> Result<Self> {
        let sides = vec![side; corner.len()];
        Self::rect(corner, sides)
    }

    pub fn rect(corner: Vec<Rat>, sides: Vec<Rat>) -> Result<Self> {
        if corner.is_empty() || corner.len() != sides.len() {
            return Err(Error::DimensionMismatch {
                expected: corner.len(),
                got: sides.len(),
            });
        }
        for (c, s) in corner.iter().zip(&sides) {
            Arc::new(c.clone(), s.clone())?;
        }
        Ok(Cube { corner, sides })
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    pub fn is_cube(&self) -> bool {
        self.sides.windows(2).all(|w| w[0] == w[1])
    }

    pub fn axis(&self, i: usize) -> Arc {
        Arc::new(self.corner[i].clone(), self.sides[i].clone()).expect("validated")
    }

    pub fn axes(&self) -> Vec<Arc> {
        (0..self.dim()).map(|i| self.axis(i)).collect()
    }

    pub fn volume(&self) -> Rat {
        self.sides.iter().fold(Rat::one(), |acc, s| acc * s)
    }

    pub fn corner(&self) -> &[Rat] {
        &self.corner
    }

    pub fn sides(&self) -> &[Rat] {
        &self.sides
    }
}

/// Product of dyadic intervals of one translate `δ_i` (applied to every axis).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DyadicCube {
    pub shift_index: usize,
    pub intervals: Vec<DyadicInterval>,
}

impl DyadicCube {
    pub fn axes(&self) -> Vec<Arc> {
        self.intervals.iter().map(DyadicInterval::arc).collect()
    }

    pub fn volume(&self) -> Rat {
        self.intervals
            .iter()
            .fold(Rat::one(), |acc, d| acc * d.length())
    }

    pub fn max_level(&self) -> u32 {
        self.intervals.iter().map(DyadicInterval::level).max().unwrap_or(0)
    }

    pub fn contains(&self, cube: &Cube) -> bool {
        self.axes()
            .iter()
            .zip(cube.axes())
            .all(|(d, j)| d.contains_arc(&j))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CubeFit {
    pub shift_index: usize,
    pub cube: DyadicCube,
    pub axis_ratios: Vec<Rat>,
    /// `vol(D) / vol(J)`.
    pub total_ratio: Rat,
    /// Per axis, the translates that fail to fit that axis at its level.
    pub disqualified: Vec<Vec<usize>>,
}

/// Fit `J` by one of the `m + 1` product filtrations with ratio `<= c^m`.
///
/// Each axis is fitted at the level pinned by `d({δ_i})` and its side; at
/// that level the endpoints of all translates are pairwise more than the
/// side apart, so at most one translate fails per axis and some translate
/// fits every axis. The smallest such index is returned.
pub fn fit_cube(cube: &Cube, family: &ShiftFamily) -> Result<CubeFit> {
    if family.len() != cube.dim() + 1 {
        return Err(Error::DimensionMismatch {
            expected: cube.dim() + 1,
            got: family.len(),
        });
    }
    if !family.is_admissible() {
        return Err(Error::InadmissibleFamily);
    }
    let d = family.distance();
    let shifts: Vec<Shift> = (0..family.len()).map(|i| family.shift(i)).collect();
    let levels: Vec<u32> = cube
        .sides()
        .iter()
        .map(|s| if s >= d { 0 } else { fit_level(s, d) })
        .collect();
    if let Some(&level) = levels.iter().find(|&&l| l > MAX_LEVEL) {
        return Err(Error::LevelOutOfRange {
            level: level as i64,
        });
    }
    // fits[i][a]: the level-n_a interval of translate i containing axis a.
    let fits: Vec<Vec<Option<DyadicInterval>>> = shifts
        .iter()
        .map(|s| {
            (0..cube.dim())
                .map(|a| containing_interval(&cube.axis(a), s, levels[a]))
                .collect()
        })
        .collect();
    let disqualified: Vec<Vec<usize>> = (0..cube.dim())
        .map(|a| (0..shifts.len()).filter(|&i| fits[i][a].is_none()).collect())
        .collect();
    let shift_index = (0..shifts.len())
        .find(|&i| fits[i].iter().all(Option::is_some))
        .ok_or_else(|| Error::NoFit(format!("no translate fits every axis of {cube:?}")))?;
    let intervals: Vec<DyadicInterval> = fits[shift_index]
        .iter()
        .map(|d| d.clone().expect("checked"))
        .collect();
    let axis_ratios: Vec<Rat> = intervals
        .iter()
        .zip(cube.sides())
        .map(|(d, s)| d.length() / s)
        .collect();
    let total_ratio = axis_ratios.iter().fold(Rat::one(), |acc, r| acc * r);
    Ok(CubeFit {
        shift_index,
        cube: DyadicCube {
            shift_index,
            intervals,
        },
        axis_ratios,
        total_ratio,
        disqualified,
    })
}

/// Step function on `T^m`: per-axis breakpoints and a row-major value tensor
/// (last axis fastest). Cell `(i_1, …, i_m)` is the product of the pieces
/// `(b_{i}, b_{i+1}]` of each axis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridFnFile")]
pub struct GridFn {
    breakpoints: Vec<Vec<Rat>>,
    values: Vec<Rat>,
}

#[derive(Deserialize)]
struct GridFnFile {
    breakpoints: Vec<Vec<Rat>>,
    values: Vec<Rat>,
}

impl TryFrom<GridFnFile> for GridFn {
    type Error = Error;
    fn try_from(raw: GridFnFile) -> Result<Self> {
        GridFn::new(raw.breakpoints, raw.values)
    }
}

impl GridFn {
    pub fn new(breakpoints: Vec<Vec<Rat>>, values: Vec<Rat>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidGridFn("dimension 0".into()));
        }
        for axis in &breakpoints {
            if axis.is_empty() {
                return Err(Error::InvalidGridFn("axis without breakpoints".into()));
            }
            if axis.iter().any(|b| b.is_negative() || *b >= Rat::one()) {
                return Err(Error::InvalidGridFn("breakpoint outside [0, 1)".into()));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGridFn("breakpoints not increasing".into()));
            }
        }
        let cells: usize = breakpoints.iter().map(Vec::len).product();
        if cells != values.len() {
            return Err(Error::InvalidGridFn(format!(
                "{} values for {cells} cells",
                values.len()
            )));
        }
        Ok(GridFn {
            breakpoints,
            values,
        })
    }

    /// Fill cell `idx` with `value(idx)`.
    pub fn from_cells(breakpoints: Vec<Vec<Rat>>, value: impl Fn(&[usize]) -> Rat) -> Result<Self> {
        let shape: Vec<usize> = breakpoints.iter().map(Vec::len).collect();
        let values = MultiIndex::new(&shape).map(|idx| value(&idx)).collect();
        Self::new(breakpoints, values)
    }

    pub fn constant(dim: usize, c: Rat) -> Self {
        GridFn {
            breakpoints: vec![vec![Rat::zero()]; dim],
            values: vec![c],
        }
    }

    pub fn dim(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn breakpoints(&self) -> &[Vec<Rat>] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// Breakpoints of axis `a` that can be jumps (none when the axis has one piece).
    pub fn axis_jumps(&self, a: usize) -> &[Rat] {
        if self.breakpoints[a].len() <= 1 {
            &[]
        } else {
            &self.breakpoints[a]
        }
    }

    fn shape(&self) -> Vec<usize> {
        self.breakpoints.iter().map(Vec::len).collect()
    }

    /// `(weight, value)` over cells meeting the box with positive volume.
    fn weighted_cells(&self, axes: &[Arc]) -> Vec<(Rat, &Rat)> {
        let overlaps: Vec<Vec<Rat>> = self
            .breakpoints
            .iter()
            .zip(axes)
            .map(|(b, arc)| piece_overlaps(b, arc))
            .collect();
        let live: Vec<Vec<usize>> = overlaps
            .iter()
            .map(|o| (0..o.len()).filter(|&i| o[i].is_positive()).collect())
            .collect();
        let shape = self.shape();
        let mut out = Vec::new();
        let live_shape: Vec<usize> = live.iter().map(Vec::len).collect();
        for sel in MultiIndex::new(&live_shape) {
            let mut weight = Rat::one();
            let mut flat = 0usize;
            for (a, &s) in sel.iter().enumerate() {
                let i = live[a][s];
                weight = weight * &overlaps[a][i];
                flat = flat * shape[a] + i;
            }
            out.push((weight, &self.values[flat]));
        }
        out
    }

    pub fn integral(&self, axes: &[Arc]) -> Rat {
        self.weighted_cells(axes)
            .into_iter()
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn average(&self, axes: &[Arc]) -> Rat {
        let vol = axes.iter().fold(Rat::one(), |acc, a| acc * a.length());
        self.integral(axes) / vol
    }

    pub fn mean_oscillation(&self, axes: &[Arc]) -> Rat {
        let cells = self.weighted_cells(axes);
        let vol = axes.iter().fold(Rat::one(), |acc, a| acc * a.length());
        let mean: Rat = cells.iter().map(|(w, v)| w * *v).sum::<Rat>() / &vol;
        let dev: Rat = cells.iter().map(|(w, v)| w * (*v - &mean).abs()).sum();
        dev / vol
    }

    /// Value at a point, half-open convention per axis.
    pub fn eval(&self, point: &[Rat]) -> Rat {
        let shape = self.shape();
        let mut flat = 0usize;
        for (a, t) in point.iter().enumerate() {
            let bps = &self.breakpoints[a];
            let t = t.frac();
            // Piece i is (b_i, b_{i+1}]; points up to b_0 (and above b_last) are in the last piece.
            let i = match bps.iter().rposition(|b| b < &t) {
                Some(i) => i,
                None => bps.len() - 1,
            };
            flat = flat * shape[a] + i;
        }
        self.values[flat].clone()
    }
}

/// Row-major iteration over `Π [0, shape_a)`.
struct MultiIndex {
    shape: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl MultiIndex {
    fn new(shape: &[usize]) -> Self {
        let next = if shape.iter().all(|&s| s > 0) {
            Some(vec![0; shape.len()])
        } else {
            None
        };
        MultiIndex {
            shape: shape.to_vec(),
            next,
        }
    }
}

impl Iterator for MultiIndex {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for a in (0..succ.len()).rev() {
            succ[a] += 1;
            if succ[a] < self.shape[a] {
                self.next = Some(succ);
                return Some(current);
            }
            succ[a] = 0;
        }
        Some(current)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DyadicNormMd {
    pub value: Rat,
    pub exact: bool,
    pub cube: DyadicCube,
}

/// Level-`n` intervals of one axis that matter for oscillation: every
/// interval straddling a jump, plus one representative inside each piece
/// (intervals inside the same piece have identical overlap vectors).
fn axis_candidates(bps: &[Rat], shift: &Shift, level: u32) -> Vec<u64> {
    let count = 1u64 << level;
    if bps.len() <= 1 || level == 0 {
        return vec![0];
    }
    let mut out = BTreeSet::new();
    for x in bps {
        if !is_grid_point(x, shift, level) {
            out.insert(shift.index_from_left(x, level));
        }
    }
    for (p, b) in bps.iter().enumerate() {
        let next = &bps[(p + 1) % bps.len()];
        let piece = Arc::between(b, next);
        // First level-n interval starting at or after b.
        let y = (b - shift.delta()).frac().mul_pow2(level as i32);
        let k = num_traits::ToPrimitive::to_u64(&y.ceil()).expect("fits") % count;
        let d = DyadicInterval::new(level, k, shift.clone()).expect("valid index");
        if piece.contains_arc(&d.arc()) {
            out.insert(k);
        }
    }
    out.into_iter().collect()
}

/// Max oscillation over equal-level product cubes of the `δ`-translated
/// grid (same `δ` on every axis), levels `0..=max_depth`.
pub fn dyadic_bmo_norm_md(f: &GridFn, delta: &Rat, max_depth: u32) -> Result<DyadicNormMd> {
    if max_depth > MAX_LEVEL {
        return Err(Error::LevelOutOfRange {
            level: max_depth as i64,
        });
    }
    let shift = Shift::new(delta.clone())?;
    let m = f.dim();
    let mut best: Option<(Rat, Vec<DyadicInterval>)> = None;
    for level in 0..=max_depth {
        let cands: Vec<Vec<u64>> = (0..m)
            .map(|a| axis_candidates(&f.breakpoints[a], &shift, level))
            .collect();
        let shape: Vec<usize> = cands.iter().map(Vec::len).collect();
        for sel in MultiIndex::new(&shape) {
            let intervals: Vec<DyadicInterval> = sel
                .iter()
                .enumerate()
                .map(|(a, &s)| DyadicInterval::new(level, cands[a][s], shift.clone()))
                .collect::<Result<_>>()?;
            let axes: Vec<Arc> = intervals.iter().map(DyadicInterval::arc).collect();
            let osc = f.mean_oscillation(&axes);
            if best.as_ref().is_none_or(|(b, _)| osc > *b) {
                best = Some((osc, intervals));
            }
        }
    }
    let (value, intervals) = best.expect("level 0 always scanned");
    let exact = (0..m).all(|a| {
        f.axis_jumps(a).iter().all(|x| {
            (x - delta)
                .frac()
                .dyadic_exponent()
                .is_some_and(|e| e <= max_depth as u64)
        })
    });
    Ok(DyadicNormMd {
        value,
        exact,
        cube: DyadicCube {
            shift_index: 0,
            intervals,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CubeWitness {
    pub cube: Cube,
    pub oscillation: Rat,
}

/// Max oscillation over cubes whose corner and opposite corner lie on the
/// per-axis grids (the full torus included).
pub fn classical_lower_bound_md(f: &GridFn, grids: &[Vec<Rat>]) -> Result<CubeWitness> {
    let m = f.dim();
    if grids.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: grids.len(),
        });
    }
    let grids: Vec<Vec<Rat>> = grids.iter().map(|g| normalize_grid(g)).collect();
    if grids.iter().any(Vec::is_empty) {
        return Err(Error::EmptyGrid);
    }
    let members: Vec<HashSet<&Rat>> = grids.iter().map(|g| g.iter().collect()).collect();
    let shape: Vec<usize> = grids.iter().map(Vec::len).collect();
    let corners: Vec<Vec<usize>> = MultiIndex::new(&shape).collect();

    let better = |x: &CubeWitness, y: &CubeWitness| -> bool {
        match x.oscillation.cmp(&y.oscillation) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match x.cube.sides[0].cmp(&y.cube.sides[0]) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => x.cube.corner < y.cube.corner,
            },
        }
    };
    let pick = |x: CubeWitness, y: CubeWitness| if better(&y, &x) { y } else { x };

    let best = corners
        .par_iter()
        .filter_map(|idx| {
            let corner: Vec<Rat> = idx.iter().enumerate().map(|(a, &i)| grids[a][i].clone()).collect();
            let sides = grids[0]
                .iter()
                .map(|g| {
                    let s = (g - &corner[0]).frac();
                    if s.is_zero() {
                        Rat::one()
                    } else {
                        s
                    }
                })
                .filter(|s| {
                    *s == Rat::one()
                        || (1..m).all(|a| members[a].contains(&(&corner[a] + s).frac()))
                });
            sides
                .map(|s| {
                    let cube = Cube::cube(corner.clone(), s).expect("grid cube");
                    let oscillation = f.mean_oscillation(&cube.axes());
                    CubeWitness { cube, oscillation }
                })
                .reduce(pick)
        })
        .reduce_with(pick)
        .expect("the full torus is always scanned");
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CubeProofTrace {
    pub fit: CubeFit,
    pub osc_cube: Exact,
    pub osc_dyadic: Exact,
    /// `2 · vol ratio · osc(D)`.
    pub middle: Exact,
    /// `2 c^m · norm_i`.
    pub right: Exact,
    pub beyond_depth: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquivalenceReportMd {
    pub dim: usize,
    pub deltas: Vec<Rat>,
    pub family_distance: Rat,
    /// `2 (2/d({δ_i}))^m`.
    pub bound_constant: Exact,
    pub classical_lower: Exact,
    pub dyadic_norms: Vec<Exact>,
    pub bound: Exact,
    pub margin: Exact,
    pub depth_used: u32,
    pub classical_witness: CubeWitness,
    pub norms_exact: Vec<bool>,
    pub theorem_holds: bool,
    pub proof_trace: CubeProofTrace,
}

impl EquivalenceReportMd {
    pub fn holds(&self) -> bool {
        self.theorem_holds && self.proof_trace.holds
    }
}

pub fn verify_equivalence_md(
    f: &GridFn,
    family: &ShiftFamily,
    depth: u32,
    grids: &[Vec<Rat>],
) -> Result<EquivalenceReportMd> {
    let m = f.dim();
    if family.len() != m + 1 {
        return Err(Error::DimensionMismatch {
            expected: m + 1,
            got: family.len(),
        });
    }
    if !family.is_admissible() {
        return Err(Error::InadmissibleFamily);
    }
    let norms: Vec<DyadicNormMd> = family
        .deltas()
        .iter()
        .map(|d| dyadic_bmo_norm_md(f, d, depth))
        .collect::<Result<_>>()?;
    let classical = classical_lower_bound_md(f, grids)?;
    let c = family.fit_constant();
    let c_m = (0..m).fold(Rat::one(), |acc, _| acc * &c);
    let constant = Rat::integer(2) * &c_m;
    let max_norm = norms
        .iter()
        .map(|n| n.value.clone())
        .max()
        .expect("m + 1 >= 2 norms");
    let bound = &constant * &max_norm;

    let fit = fit_cube(&classical.cube, family)?;
    let osc_dyadic = f.mean_oscillation(&fit.cube.axes());
    let beyond_depth = fit.cube.max_level() > depth;
    let norm_i = if beyond_depth {
        norms[fit.shift_index].value.clone().max(osc_dyadic.clone())
    } else {
        norms[fit.shift_index].value.clone()
    };
    let middle = Rat::integer(2) * &fit.total_ratio * &osc_dyadic;
    let right = &constant * &norm_i;
    let trace_holds = classical.oscillation <= middle && middle <= right;

    Ok(EquivalenceReportMd {
        dim: m,
        deltas: family.deltas().to_vec(),
        family_distance: family.distance().clone(),
        bound_constant: constant.into(),
        theorem_holds: classical.oscillation <= bound,
        margin: (&bound - &classical.oscillation).into(),
        classical_lower: classical.oscillation.clone().into(),
        dyadic_norms: norms.iter().map(|n| n.value.clone().into()).collect(),
        bound: bound.into(),
        depth_used: depth,
        norms_exact: norms.iter().map(|n| n.exact).collect(),
        proof_trace: CubeProofTrace {
            osc_cube: classical.oscillation.clone().into(),
            osc_dyadic: osc_dyadic.into(),
            middle: middle.into(),
            right: right.into(),
            beyond_depth,
            holds: trace_holds,
            fit,
        },
        classical_witness: classical,
    })
}
