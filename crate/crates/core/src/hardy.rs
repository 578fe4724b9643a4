//! ∞-atoms and the splitting of atomic H¹ elements into base and translated
//! dyadic parts.
//!
//! Measures use the normalized circle (total mass 1); the size condition is
//! `sup |a| <= 1 / |support|` in those units.

use serde::{Deserialize, Serialize};

use crate::circle::{fit_interval, is_grid_point, Arc, DyadicInterval, Filtration, Shift};
use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::step::StepFn;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum AtomViolation {
    NonzeroMean { integral: Rat },
    SizeExceeded { sup: Rat, bound: Rat, excess: Rat },
    OutsideSupport { mass: Rat },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AtomCheck {
    pub valid: bool,
    pub violations: Vec<AtomViolation>,
}

/// Check mean zero, the size bound and support containment, exactly.
pub fn is_atom(profile: &StepFn, support: &Arc) -> AtomCheck {
    let mut violations = Vec::new();
    let integral = profile.total_integral();
    if !integral.is_zero() {
        violations.push(AtomViolation::NonzeroMean { integral });
    }
    let bound = support.length().recip();
    let sup = profile
        .overlaps(support)
        .into_iter()
        .map(|(_, v)| v.abs())
        .max()
        .unwrap_or_else(Rat::zero);
    if sup > bound {
        violations.push(AtomViolation::SizeExceeded {
            excess: &sup - &bound,
            sup,
            bound,
        });
    }
    let abs = profile.abs();
    let mass = abs.total_integral() - abs.integral(support);
    if mass.is_positive() {
        violations.push(AtomViolation::OutsideSupport { mass });
    }
    AtomCheck {
        valid: violations.is_empty(),
        violations,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AtomFile")]
pub struct Atom {
    support: Arc,
    profile: StepFn,
}

#[derive(Deserialize)]
struct AtomFile {
    support: Arc,
    profile: StepFn,
}

impl TryFrom<AtomFile> for Atom {
    type Error = Error;
    fn try_from(raw: AtomFile) -> Result<Self> {
        Atom::new(raw.support, raw.profile)
    }
}

impl Atom {
    pub fn new(support: Arc, profile: StepFn) -> Result<Self> {
        let check = is_atom(&profile, &support);
        if !check.valid {
            return Err(Error::InvalidAtom(format!("{:?}", check.violations)));
        }
        Ok(Atom { support, profile })
    }

    pub fn support(&self) -> &Arc {
        &self.support
    }

    pub fn profile(&self) -> &StepFn {
        &self.profile
    }
}

/// An atom rescaled onto a dyadic interval: `a = lambda · atom`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DyadicAtom {
    pub filtration: Filtration,
    pub interval: DyadicInterval,
    pub lambda: Rat,
    pub atom: Atom,
}

/// The dyadic interval of either filtration that *equals* `arc`, if any.
fn exact_dyadic_support(arc: &Arc, shift: &Shift) -> Option<(Filtration, DyadicInterval)> {
    let len = arc.length();
    if !(len.is_dyadic() && len.numer() == &1.into()) {
        return None;
    }
    let level = len.dyadic_exponent().expect("dyadic") as u32;
    [(Filtration::Base, Shift::base()), (Filtration::Shifted, shift.clone())]
        .into_iter()
        .find(|(_, s)| level == 0 || is_grid_point(arc.start(), s, level))
        .map(|(filtration, s)| {
            let index = s.index_from_left(arc.start(), level);
            let d = DyadicInterval::new(level, index, s).expect("valid index");
            (filtration, d)
        })
}

/// Re-express an atom as `lambda` times an atom supported on a dyadic
/// interval of the base or `δ`-translated filtration, `lambda <= 2/d(δ)`.
///
/// A support that already is a dyadic interval is kept (`lambda = 1`);
/// otherwise the support is fitted and the fit ratio becomes `lambda`.
pub fn atomize_dyadic(atom: &Atom, shift: &Shift) -> Result<DyadicAtom> {
    shift.require_admissible()?;
    let check = is_atom(&atom.profile, &atom.support);
    if !check.valid {
        return Err(Error::InvalidAtom(format!("{:?}", check.violations)));
    }
    let (filtration, interval, lambda) = match exact_dyadic_support(&atom.support, shift) {
        Some((filtration, d)) => (filtration, d, Rat::one()),
        None => {
            let fit = fit_interval(&atom.support, shift)?;
            (fit.filtration, fit.interval, fit.ratio)
        }
    };
    let profile = atom.profile.scale(&lambda.recip());
    let rescaled = Atom::new(interval.arc(), profile)?;
    Ok(DyadicAtom {
        filtration,
        interval,
        lambda,
        atom: rescaled,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TermFile")]
pub struct AtomTerm {
    pub coefficient: Rat,
    pub support: Arc,
    pub profile: StepFn,
}

#[derive(Deserialize)]
struct TermFile {
    coefficient: Rat,
    support: Arc,
    profile: StepFn,
}

impl TryFrom<TermFile> for AtomTerm {
    type Error = Error;
    fn try_from(raw: TermFile) -> Result<Self> {
        let atom = Atom::new(raw.support, raw.profile)?;
        Ok(AtomTerm::new(raw.coefficient, atom))
    }
}

impl AtomTerm {
    pub fn new(coefficient: Rat, atom: Atom) -> Self {
        AtomTerm {
            coefficient,
            support: atom.support,
            profile: atom.profile,
        }
    }

    pub fn atom(&self) -> Atom {
        Atom {
            support: self.support.clone(),
            profile: self.profile.clone(),
        }
    }
}

/// Finite sum `Σ c_j a_j`; serialized as the array of terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomicCombination {
    pub terms: Vec<AtomTerm>,
}

impl AtomicCombination {
    pub fn new(terms: Vec<AtomTerm>) -> Self {
        AtomicCombination { terms }
    }

    /// `Σ c_j a_j` as a step function.
    pub fn to_step_fn(&self) -> StepFn {
        self.terms.iter().fold(StepFn::constant(Rat::zero()), |acc, t| {
            acc.add(&t.profile.scale(&t.coefficient))
        })
    }

    /// `Σ |c_j|`, the cost of this particular decomposition.
    pub fn cost(&self) -> Rat {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct H1Decomposition {
    pub base: AtomicCombination,
    pub shifted: AtomicCombination,
    /// Per input term, the `lambda` absorbed into the coefficient.
    pub lambdas: Vec<Rat>,
    /// `Σ|new coefficients| / Σ|old coefficients|`; 1 for an empty or zero-cost input.
    pub cost_ratio: Rat,
}

impl H1Decomposition {
    /// `base + shifted - f`; the zero function when reconstruction is exact.
    pub fn residual(&self, f: &AtomicCombination) -> StepFn {
        self.base
            .to_step_fn()
            .add(&self.shifted.to_step_fn())
            .sub(&f.to_step_fn())
    }
}

/// Split `f` into base-dyadic and translated-dyadic atoms.
pub fn decompose_h1(f: &AtomicCombination, shift: &Shift) -> Result<H1Decomposition> {
    shift.require_admissible()?;
    let mut base = Vec::new();
    let mut shifted = Vec::new();
    let mut lambdas = Vec::with_capacity(f.terms.len());
    for term in &f.terms {
        let d = atomize_dyadic(&term.atom(), shift)?;
        let out = AtomTerm::new(&term.coefficient * &d.lambda, d.atom);
        match d.filtration {
            Filtration::Base => base.push(out),
            Filtration::Shifted => shifted.push(out),
        }
        lambdas.push(d.lambda);
    }
    let base = AtomicCombination::new(base);
    let shifted = AtomicCombination::new(shifted);
    let old = f.cost();
    let cost_ratio = if old.is_zero() {
        Rat::one()
    } else {
        (base.cost() + shifted.cost()) / old
    };
    Ok(H1Decomposition {
        base,
        shifted,
        lambdas,
        cost_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rat {
        Rat::new(p, q)
    }

    fn third() -> Shift {
        Shift::new(r(1, 3)).unwrap()
    }

    /// `h/2 · 1_{left half} - h/2 · 1_{right half}` normalized to the size bound.
    fn two_step_atom(start: Rat, length: Rat) -> Atom {
        let support = Arc::new(start.clone(), length.clone()).unwrap();
        let h = length.recip();
        let mid = &start + &(&length * &r(1, 2));
        let left = Arc::between(&start, &mid);
        let right = Arc::between(&mid, &(&start + &length));
        let profile = StepFn::indicator(&left, h.clone()).sub(&StepFn::indicator(&right, h));
        Atom::new(support, profile).unwrap()
    }

    #[test]
    fn atom_checks() {
        let profile = StepFn::new(
            vec![Rat::zero(), r(1, 4), r(1, 2)],
            vec![Rat::integer(2), Rat::integer(-2), Rat::zero()],
        )
        .unwrap();
        let support = Arc::new(Rat::zero(), r(1, 2)).unwrap();
        assert!(is_atom(&profile, &support).valid);

        let bump = StepFn::indicator(&support, Rat::one());
        let check = is_atom(&bump, &support);
        assert!(!check.valid);
        assert_eq!(
            check.violations,
            vec![AtomViolation::NonzeroMean { integral: r(1, 2) }]
        );

        assert!(is_atom(&StepFn::constant(Rat::zero()), &Arc::new(r(1, 7), r(1, 9)).unwrap()).valid);

        let tall = profile.scale(&Rat::integer(2));
        assert!(matches!(
            is_atom(&tall, &support).violations[..],
            [AtomViolation::SizeExceeded { .. }]
        ));
        let leaky = is_atom(&profile, &Arc::new(Rat::zero(), r(1, 4)).unwrap());
        assert!(leaky
            .violations
            .iter()
            .any(|v| matches!(v, AtomViolation::OutsideSupport { mass } if *mass == r(1, 2))));
    }

    #[test]
    fn atomize_examples() {
        let dyadic = two_step_atom(Rat::zero(), r(1, 2));
        let d = atomize_dyadic(&dyadic, &third()).unwrap();
        assert_eq!(d.filtration, Filtration::Base);
        assert_eq!((d.interval.level(), d.interval.index()), (1, 0));
        assert_eq!(d.lambda, Rat::one());

        let short = two_step_atom(r(3, 10), r(1, 10));
        let d = atomize_dyadic(&short, &third()).unwrap();
        assert_eq!(d.filtration, Filtration::Base);
        assert_eq!((d.interval.level(), d.interval.index()), (1, 0));
        assert_eq!(d.lambda, Rat::integer(5));
        assert_eq!(d.atom.profile().scale(&d.lambda), *short.profile());

        let wrapping = two_step_atom(r(19, 20), r(1, 10));
        let d = atomize_dyadic(&wrapping, &third()).unwrap();
        assert_eq!(d.filtration, Filtration::Shifted);
        assert_eq!(d.lambda, Rat::integer(5));
        assert!(is_atom(d.atom.profile(), d.atom.support()).valid);
    }

    #[test]
    fn shifted_dyadic_support_is_kept() {
        let atom = two_step_atom(r(1, 3), r(1, 2));
        let d = atomize_dyadic(&atom, &third()).unwrap();
        assert_eq!(d.filtration, Filtration::Shifted);
        assert_eq!(d.lambda, Rat::one());
    }

    #[test]
    fn atomize_rejects_bad_input() {
        let atom = two_step_atom(Rat::zero(), r(1, 2));
        assert!(atomize_dyadic(&atom, &Shift::new(r(1, 4)).unwrap()).is_err());
        assert!(Atom::new(
            Arc::full(),
            StepFn::constant(Rat::one())
        )
        .is_err());
    }

    #[test]
    fn decompose_examples() {
        let single = AtomicCombination::new(vec![AtomTerm::new(
            r(3, 2),
            two_step_atom(Rat::zero(), r(1, 4)),
        )]);
        let dec = decompose_h1(&single, &third()).unwrap();
        assert_eq!(dec.base.terms.len(), 1);
        assert!(dec.shifted.terms.is_empty());
        assert_eq!(dec.cost_ratio, Rat::one());

        let pair = AtomicCombination::new(vec![
            AtomTerm::new(Rat::integer(2), two_step_atom(r(3, 10), r(1, 10))),
            AtomTerm::new(r(-1, 3), two_step_atom(r(19, 20), r(1, 10))),
        ]);
        let dec = decompose_h1(&pair, &third()).unwrap();
        assert_eq!(dec.base.terms.len(), 1);
        assert_eq!(dec.shifted.terms.len(), 1);
        assert!(dec.cost_ratio <= Rat::integer(6));
        assert!(dec.residual(&pair).is_zero());

        let empty = AtomicCombination::default();
        let dec = decompose_h1(&empty, &third()).unwrap();
        assert!(dec.base.terms.is_empty() && dec.shifted.terms.is_empty());
        assert_eq!(dec.cost_ratio, Rat::one());
    }

    #[test]
    fn combination_file_roundtrip() {
        let pair = AtomicCombination::new(vec![AtomTerm::new(
            Rat::integer(2),
            two_step_atom(r(3, 10), r(1, 10)),
        )]);
        let json = serde_json::to_string(&pair).unwrap();
        assert!(json.starts_with(r#"[{"coefficient":"2","support":{"start":"3/10""#));
        assert_eq!(serde_json::from_str::<AtomicCombination>(&json).unwrap(), pair);
        let bad = r#"[{"coefficient":"1","support":{"start":"0","length":"1/2"},
            "profile":{"breakpoints":["0","1/2"],"values":["1","0"]}}]"#;
        assert!(serde_json::from_str::<AtomicCombination>(bad).is_err());
    }
}
