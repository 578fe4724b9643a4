//! Mean oscillation, classical and translated-dyadic BMO norms, sharp and
//! maximal functions, and the two-filtration equivalence check.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::circle::{
    chain, fit_interval, is_grid_point, level_points, DyadicInterval, Filtration, Shift, MAX_LEVEL,
};
use crate::circle::Arc;
use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::report::Exact;
use crate::scan::ArcScan;
use crate::step::StepFn;

/// `φ_I = (1/|I|) ∫_I φ`.
pub fn average(f: &StepFn, arc: &Arc) -> Rat {
    f.integral(arc) / arc.length()
}

/// `(1/|I|) ∫_I |φ - φ_I|`.
pub fn mean_oscillation(f: &StepFn, arc: &Arc) -> Rat {
    if f.is_constant() {
        return Rat::zero();
    }
    let mean = average(f, arc);
    let total: Rat = f
        .overlaps(arc)
        .into_iter()
        .map(|(len, v)| len * (v - &mean).abs())
        .sum();
    total / arc.length()
}

/// An arc attaining (or witnessing) a reported oscillation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OscWitness {
    pub arc: Arc,
    pub oscillation: Rat,
    pub mean: Rat,
}

impl OscWitness {
    pub fn on(f: &StepFn, arc: Arc) -> Self {
        OscWitness {
            oscillation: mean_oscillation(f, &arc),
            mean: average(f, &arc),
            arc,
        }
    }
}

/// Depth-truncated dyadic BMO norm with its attaining interval.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicNorm {
    pub value: Rat,
    /// True when no interval deeper than the scan can straddle a jump.
    pub exact: bool,
    pub interval: DyadicInterval,
    pub witness: OscWitness,
}

/// Level-`n` intervals of `shift` that have a jump of `f` strictly inside.
fn straddling_indices(f: &StepFn, shift: &Shift, level: u32) -> BTreeSet<u64> {
    f.jumps()
        .iter()
        .filter(|x| !is_grid_point(x, shift, level))
        .map(|x| shift.index_from_left(x, level))
        .collect()
}

/// `sup` of the mean oscillation over `D_n^{δ,k}`, `0 <= n <= max_depth`.
///
/// Only intervals with a jump strictly inside can oscillate, so each level
/// costs at most one interval per jump.
pub fn dyadic_bmo_norm(f: &StepFn, shift: &Shift, max_depth: u32) -> Result<DyadicNorm> {
    if max_depth > MAX_LEVEL {
        return Err(Error::LevelOutOfRange {
            level: max_depth as i64,
        });
    }
    let whole = DyadicInterval::new(0, 0, shift.clone())?;
    let mut best = (whole.clone(), OscWitness::on(f, whole.arc()));
    for level in 1..=max_depth {
        for k in straddling_indices(f, shift, level) {
            let d = DyadicInterval::new(level, k, shift.clone())?;
            let w = OscWitness::on(f, d.arc());
            if w.oscillation > best.1.oscillation {
                best = (d, w);
            }
        }
    }
    let exact = f.jumps().iter().all(|x| {
        (x - shift.delta())
            .frac()
            .dyadic_exponent()
            .is_some_and(|e| e <= max_depth as u64)
    });
    Ok(DyadicNorm {
        value: best.1.oscillation.clone(),
        exact,
        interval: best.0,
        witness: best.1,
    })
}

/// Reduce modulo 1, sort and deduplicate.
pub fn normalize_grid(grid: &[Rat]) -> Vec<Rat> {
    let mut g: Vec<Rat> = grid.iter().map(Rat::frac).collect();
    g.sort();
    g.dedup();
    g
}

/// Both endpoint sets `{k 2^-depth}` and `{δ + k 2^-depth}` plus the jumps of `f`.
pub fn verification_grid(f: &StepFn, shift: &Shift, depth: u32) -> Vec<Rat> {
    let mut g = level_points(&Shift::base(), depth);
    g.extend(level_points(shift, depth));
    g.extend(f.jumps().iter().cloned());
    normalize_grid(&g)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalBound {
    pub value: Rat,
    pub witness: OscWitness,
}

/// Maximum mean oscillation over arcs with both endpoints on `grid`
/// (wrapping arcs and the full circle included). A lower bound for the
/// classical BMO norm.
pub fn classical_bmo_lower_bound(f: &StepFn, grid: &[Rat]) -> Result<ClassicalBound> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let grid = normalize_grid(grid);
    let scan = ArcScan::new(f, &grid);
    let best = scan.max_oscillation();
    let witness = OscWitness::on(f, scan.arc(best.a, best.j));
    debug_assert_eq!(witness.oscillation, scan.oscillation_of(&best));
    Ok(ClassicalBound {
        value: witness.oscillation.clone(),
        witness,
    })
}

fn check_point(t: &Rat) -> Result<()> {
    if t.is_negative() || *t >= Rat::one() {
        return Err(Error::OutOfUnitInterval { value: t.clone() });
    }
    Ok(())
}

/// Lower bound for `φ^#(t)`: max oscillation over grid arcs containing `t`.
pub fn sharp_function(f: &StepFn, t: &Rat, grid: &[Rat]) -> Result<Rat> {
    check_point(t)?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let grid = normalize_grid(grid);
    Ok(ArcScan::new(f, &grid).at_point(t).0)
}

/// Lower bound for the Hardy–Littlewood maximal function of `φ` at `t`.
pub fn hl_maximal_lower(f: &StepFn, t: &Rat, grid: &[Rat]) -> Result<Rat> {
    check_point(t)?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let grid = normalize_grid(grid);
    Ok(ArcScan::new(f, &grid).at_point(t).1)
}

/// Sharp and maximal lower bounds at every grid point, in grid order.
pub fn pointwise_on_grid(f: &StepFn, grid: &[Rat]) -> Result<(Vec<Rat>, Vec<Rat>, Vec<Rat>)> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let grid = normalize_grid(grid);
    let (sharp, maximal) = ArcScan::new(f, &grid).pointwise();
    Ok((grid, sharp, maximal))
}

/// Max oscillation over the chain of `shift`'s intervals containing `t`, levels `0..=depth`.
pub fn dyadic_sharp_function(f: &StepFn, t: &Rat, shift: &Shift, depth: u32) -> Result<Rat> {
    check_point(t)?;
    Ok(chain(t, shift, depth.min(MAX_LEVEL))
        .iter()
        .map(|d| mean_oscillation(f, &d.arc()))
        .max()
        .expect("level 0 present"))
}

/// Doob maximal function: max of `avg |φ|` over the chain containing `t`.
pub fn dyadic_maximal(f: &StepFn, t: &Rat, shift: &Shift, depth: u32) -> Result<Rat> {
    check_point(t)?;
    let abs = f.abs();
    Ok(chain(t, shift, depth.min(MAX_LEVEL))
        .iter()
        .map(|d| average(&abs, &d.arc()))
        .max()
        .expect("level 0 present"))
}

/// Replay of the fitting argument on one arc:
/// `osc(I) <= 2 ratio osc(D) <= (4/d) ‖φ‖_{BMO_F}` for the fitted `D` of filtration `F`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProofTrace {
    pub arc: Arc,
    pub filtration: Filtration,
    pub interval: DyadicInterval,
    pub ratio: Exact,
    pub osc_arc: Exact,
    pub osc_interval: Exact,
    /// `2 · ratio · osc(D)`.
    pub middle: Exact,
    /// `(4/d) · norm`, with `norm` the scanned dyadic norm of the fitted filtration.
    pub right: Exact,
    /// The fitted interval lies deeper than the scanned depth; `norm` is then
    /// raised to at least `osc(D)`, which is still a lower bound of the true norm.
    pub beyond_depth: bool,
    pub first_step_holds: bool,
    pub second_step_holds: bool,
}

impl ProofTrace {
    pub fn holds(&self) -> bool {
        self.first_step_holds && self.second_step_holds
    }
}

pub fn trace_fit(
    f: &StepFn,
    arc: &Arc,
    shift: &Shift,
    base_norm: &DyadicNorm,
    shifted_norm: &DyadicNorm,
    depth: u32,
) -> Result<ProofTrace> {
    let fit = fit_interval(arc, shift)?;
    let osc_arc = mean_oscillation(f, arc);
    let osc_interval = mean_oscillation(f, &fit.interval.arc());
    let norm = match fit.filtration {
        Filtration::Base => &base_norm.value,
        Filtration::Shifted => &shifted_norm.value,
    };
    let beyond_depth = fit.interval.level() > depth;
    let norm = if beyond_depth {
        norm.clone().max(osc_interval.clone())
    } else {
        norm.clone()
    };
    let constant = Rat::integer(4) / shift.distance();
    let middle = Rat::integer(2) * &fit.ratio * &osc_interval;
    let right = constant * norm;
    Ok(ProofTrace {
        arc: arc.clone(),
        filtration: fit.filtration,
        interval: fit.interval,
        ratio: fit.ratio.into(),
        first_step_holds: osc_arc <= middle,
        second_step_holds: middle <= right,
        osc_arc: osc_arc.into(),
        osc_interval: osc_interval.into(),
        middle: middle.into(),
        right: right.into(),
        beyond_depth,
    })
}

/// Both sides of `‖φ‖_BMO <= (4/d(δ)) max(‖φ‖_{BMO_D}, ‖φ‖_{BMO_{D^δ}})`, exact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquivalenceReport {
    pub delta: Rat,
    pub d_delta: Rat,
    pub bound_constant: Exact,
    pub classical_lower: Exact,
    pub dyadic_norm_base: Exact,
    pub dyadic_norm_shifted: Exact,
    pub bound: Exact,
    pub margin: Exact,
    pub depth_used: u32,
    pub classical_witness: OscWitness,
    pub base_witness: OscWitness,
    pub shifted_witness: OscWitness,
    /// The classical value is a grid lower bound, never the true norm.
    pub classical_exact: bool,
    pub base_exact: bool,
    pub shifted_exact: bool,
    /// `classical_lower <= bound`.
    pub theorem_holds: bool,
    /// Each dyadic norm `<= classical_lower`; `None` when the grid does not
    /// contain both depth-`N` endpoint sets, so the comparison is not implied.
    pub trivial_direction_holds: Option<bool>,
    pub proof_trace: ProofTrace,
}

impl EquivalenceReport {
    pub fn holds(&self) -> bool {
        self.theorem_holds && self.trivial_direction_holds != Some(false) && self.proof_trace.holds()
    }
}

pub fn verify_equivalence(
    f: &StepFn,
    shift: &Shift,
    depth: u32,
    grid: &[Rat],
) -> Result<EquivalenceReport> {
    shift.require_admissible()?;
    let base = dyadic_bmo_norm(f, &Shift::base(), depth)?;
    let shifted = dyadic_bmo_norm(f, shift, depth)?;
    let classical = classical_bmo_lower_bound(f, grid)?;

    let constant = Rat::integer(4) / shift.distance();
    let max_norm = base.value.clone().max(shifted.value.clone());
    let bound = &constant * &max_norm;
    let margin = &bound - &classical.value;

    let grid = normalize_grid(grid);
    let refines = [Shift::base(), shift.clone()]
        .iter()
        .all(|s| level_points(s, depth).iter().all(|p| grid.binary_search(p).is_ok()));
    let trivial = refines.then(|| base.value <= classical.value && shifted.value <= classical.value);

    let proof_trace = trace_fit(f, &classical.witness.arc, shift, &base, &shifted, depth)?;
    Ok(EquivalenceReport {
        delta: shift.delta().clone(),
        d_delta: shift.distance().clone(),
        bound_constant: constant.into(),
        theorem_holds: classical.value <= bound,
        classical_lower: classical.value.into(),
        dyadic_norm_base: base.value.into(),
        dyadic_norm_shifted: shifted.value.into(),
        bound: bound.into(),
        margin: margin.into(),
        depth_used: depth,
        classical_witness: classical.witness,
        base_witness: base.witness,
        shifted_witness: shifted.witness,
        classical_exact: false,
        base_exact: base.exact,
        shifted_exact: shifted.exact,
        trivial_direction_holds: trivial,
        proof_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rat {
        Rat::new(p, q)
    }

    fn half_indicator() -> StepFn {
        StepFn::new(vec![Rat::zero(), r(1, 2)], vec![Rat::one(), Rat::zero()]).unwrap()
    }

    fn haar() -> StepFn {
        StepFn::new(
            vec![Rat::zero(), r(1, 4), r(1, 2)],
            vec![Rat::one(), Rat::integer(-1), Rat::zero()],
        )
        .unwrap()
    }

    fn third() -> Shift {
        Shift::new(r(1, 3)).unwrap()
    }

    fn quarter_grid() -> Vec<Rat> {
        vec![Rat::zero(), r(1, 4), r(1, 2), r(3, 4)]
    }

    #[test]
    fn average_examples() {
        let f = half_indicator();
        assert_eq!(average(&f, &Arc::new(r(1, 4), r(1, 2)).unwrap()), r(1, 2));
        assert_eq!(average(&f, &Arc::full()), f.total_integral());
        assert_eq!(average(&f, &Arc::new(Rat::zero(), r(1, 4)).unwrap()), Rat::one());
    }

    #[test]
    fn oscillation_examples() {
        let f = half_indicator();
        assert_eq!(mean_oscillation(&f, &Arc::new(r(1, 4), r(1, 2)).unwrap()), r(1, 2));
        let c = StepFn::constant(r(7, 3));
        assert_eq!(mean_oscillation(&c, &Arc::new(r(1, 9), r(1, 5)).unwrap()), Rat::zero());
        // One unit jump splitting I = (0, 3/4] into fractions 1/3 and 2/3.
        let g = StepFn::new(vec![Rat::zero(), r(1, 4)], vec![Rat::one(), Rat::zero()]).unwrap();
        assert_eq!(mean_oscillation(&g, &Arc::new(Rat::zero(), r(3, 4)).unwrap()), r(4, 9));
    }

    #[test]
    fn dyadic_norm_examples() {
        let f = half_indicator();
        let n = dyadic_bmo_norm(&f, &Shift::base(), 3).unwrap();
        assert_eq!(n.value, r(1, 2));
        assert!(n.exact);
        assert_eq!(n.interval, DyadicInterval::whole());

        for depth in 0..8 {
            let n = dyadic_bmo_norm(&f, &third(), depth).unwrap();
            assert_eq!(n.value, r(1, 2));
            assert!(!n.exact);
        }

        let n = dyadic_bmo_norm(&haar(), &Shift::base(), 2).unwrap();
        assert_eq!(n.value, Rat::one());
        assert!(n.exact);
        assert_eq!((n.interval.level(), n.interval.index()), (1, 0));
    }

    #[test]
    fn dyadic_norm_constant_is_zero_and_exact() {
        let n = dyadic_bmo_norm(&StepFn::constant(r(3, 2)), &third(), 5).unwrap();
        assert_eq!(n.value, Rat::zero());
        assert!(n.exact);
    }

    #[test]
    fn dyadic_norm_rejects_excessive_depth() {
        assert!(dyadic_bmo_norm(&haar(), &Shift::base(), MAX_LEVEL + 1).is_err());
    }

    #[test]
    fn classical_examples() {
        let f = half_indicator();
        let c = classical_bmo_lower_bound(&f, &quarter_grid()).unwrap();
        assert_eq!(c.value, r(1, 2));
        let c = classical_bmo_lower_bound(&StepFn::constant(Rat::one()), &quarter_grid()).unwrap();
        assert_eq!(c.value, Rat::zero());
        let c = classical_bmo_lower_bound(&haar(), &quarter_grid()).unwrap();
        assert_eq!(c.value, Rat::one());
        assert_eq!(c.witness.arc, Arc::new(Rat::zero(), r(1, 2)).unwrap());
        assert_eq!(classical_bmo_lower_bound(&f, &[]), Err(Error::EmptyGrid));
    }

    #[test]
    fn sharp_examples() {
        let f = half_indicator();
        let c = StepFn::constant(Rat::integer(4));
        assert_eq!(sharp_function(&c, &r(1, 3), &quarter_grid()).unwrap(), Rat::zero());
        assert_eq!(dyadic_sharp_function(&c, &r(1, 3), &third(), 4).unwrap(), Rat::zero());
        assert_eq!(
            dyadic_sharp_function(&f, &r(1, 8), &Shift::base(), 3).unwrap(),
            r(1, 2)
        );
        assert_eq!(sharp_function(&f, &r(1, 2), &quarter_grid()).unwrap(), r(1, 2));
        assert!(sharp_function(&f, &Rat::one(), &quarter_grid()).is_err());
    }

    #[test]
    fn maximal_examples() {
        let c = StepFn::constant(Rat::integer(-3));
        assert_eq!(dyadic_maximal(&c, &r(2, 5), &third(), 6).unwrap(), Rat::integer(3));
        assert_eq!(hl_maximal_lower(&c, &r(2, 5), &quarter_grid()).unwrap(), Rat::integer(3));
        let f = half_indicator();
        assert_eq!(dyadic_maximal(&f, &r(3, 4), &Shift::base(), 3).unwrap(), r(1, 2));
        assert!(hl_maximal_lower(&f, &r(3, 4), &quarter_grid()).unwrap() >= r(1, 2));
    }

    #[test]
    fn pointwise_on_grid_agrees_with_single_points() {
        let f = haar();
        let grid: Vec<Rat> = (0..8).map(|k| r(k, 8)).collect();
        let (g, sharp, maximal) = pointwise_on_grid(&f, &grid).unwrap();
        for (i, t) in g.iter().enumerate() {
            assert_eq!(sharp[i], sharp_function(&f, t, &grid).unwrap());
            assert_eq!(maximal[i], hl_maximal_lower(&f, t, &grid).unwrap());
        }
    }

    #[test]
    fn equivalence_examples() {
        let f = half_indicator();
        let grid = verification_grid(&f, &third(), 8);
        let rep = verify_equivalence(&f, &third(), 8, &grid).unwrap();
        assert_eq!(rep.classical_lower.exact, r(1, 2));
        assert_eq!(rep.dyadic_norm_base.exact, r(1, 2));
        assert_eq!(rep.dyadic_norm_shifted.exact, r(1, 2));
        assert_eq!(rep.bound_constant.exact, Rat::integer(12));
        assert_eq!(rep.bound.exact, Rat::integer(6));
        assert_eq!(rep.margin.exact, r(11, 2));
        assert!(rep.holds());
        assert_eq!(rep.trivial_direction_holds, Some(true));

        let c = StepFn::constant(r(1, 9));
        let rep = verify_equivalence(&c, &third(), 8, &grid).unwrap();
        assert_eq!(rep.margin.exact, Rat::zero());
        assert!(rep.holds());

        let h = haar();
        let grid = verification_grid(&h, &third(), 8);
        let rep = verify_equivalence(&h, &third(), 8, &grid).unwrap();
        assert_eq!(rep.classical_lower.exact, Rat::one());
        assert_eq!(rep.dyadic_norm_base.exact, Rat::one());
        assert!(rep.margin.exact >= Rat::integer(11));
        assert!(rep.holds());
    }

    #[test]
    fn equivalence_rejects_inadmissible_shift() {
        let half = Shift::new(r(1, 2)).unwrap();
        assert!(verify_equivalence(&haar(), &half, 4, &quarter_grid()).is_err());
    }
}
