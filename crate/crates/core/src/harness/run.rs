use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::corpus::{generate_corpus, rng_for, Corpus, GridSample, Sample};
use super::dscan::{csv_error, scan_d_delta, DScan};
use crate::bmo::{
    average, dyadic_bmo_norm, mean_oscillation, normalize_grid, pointwise_on_grid,
    verification_grid, verify_equivalence, EquivalenceReport,
};
use crate::circle::{chain, dyadic_distance, fit_interval, fit_level, level_points, Arc, DyadicInterval, Shift};
use crate::error::{Error, Result};
use crate::hardy::{atomize_dyadic, decompose_h1, is_atom, Atom, AtomTerm, AtomicCombination};
use crate::multidim::{
    build_r_filtration, fit_cube, fit_interval_r, best_fit_r, verify_equivalence_md, Cube,
    EquivalenceReportMd, GridFn, RFit, RLevelSystem, ShiftFamily,
};
use crate::rat::Rat;
use crate::report::Exact;
use crate::step::StepFn;

/// Streams above the corpus entries, one per sampling suite.
const FIT_STREAM: u64 = 1 << 32;
const CUBE_STREAM: u64 = FIT_STREAM + 1;
const LINE_STREAM: u64 = FIT_STREAM + 2;
const ATOM_STREAM: u64 = FIT_STREAM + 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    DDelta,
    Fit,
    Norms,
    Verify,
    VerifyMd,
    VerifyR,
    Maximal,
    Atoms,
    Scan,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::DDelta,
        Command::Fit,
        Command::Norms,
        Command::Verify,
        Command::VerifyMd,
        Command::VerifyR,
        Command::Maximal,
        Command::Atoms,
        Command::Scan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::DDelta => "d-delta",
            Command::Fit => "fit",
            Command::Norms => "norms",
            Command::Verify => "verify",
            Command::VerifyMd => "verify-md",
            Command::VerifyR => "verify-r",
            Command::Maximal => "maximal",
            Command::Atoms => "atoms",
            Command::Scan => "scan",
        }
    }

    /// Shifts used when the configuration names none.
    pub fn default_shifts(self) -> Vec<Rat> {
        match self {
            Command::VerifyMd => vec![Rat::new(1, 7), Rat::new(2, 7), Rat::new(4, 7)],
            Command::VerifyR => vec![Rat::new(1, 3), Rat::new(2, 3)],
            _ => vec![Rat::new(1, 3)],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command {s:?}")))
    }
}

/// A failed check with enough context to replay it from the command line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub check: String,
    pub subject: String,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<StepFn>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_function: Option<GridFn>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub combination: Option<AtomicCombination>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arc: Option<Arc>,
    /// Command-line arguments that rerun the check, minus the function file.
    pub replay: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DDeltaRow {
    pub delta: Rat,
    pub d_delta: Rat,
    /// `4 / d(δ)`, absent when `d(δ) = 0`.
    pub bound_constant: Option<Exact>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FitSummary {
    pub delta: Rat,
    pub d_delta: Rat,
    pub bound: Exact,
    pub arcs: usize,
    pub max_ratio: Exact,
    pub max_ratio_arc: Arc,
    /// Some arc needed a ratio above half the bound.
    pub bound_scale_reached: bool,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormRow {
    pub name: String,
    pub base: Exact,
    pub shifted: Exact,
    pub base_exact: bool,
    pub shifted_exact: bool,
    pub base_interval: DyadicInterval,
    pub shifted_interval: DyadicInterval,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NamedReport {
    pub name: String,
    pub approximate: bool,
    pub report: EquivalenceReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PointwiseSummary {
    pub name: String,
    pub points: usize,
    pub chain_depth: u32,
    /// `min_t ((2/d) max_F M_F φ(t) - M φ(t))`.
    pub maximal_slack: Exact,
    /// `min_t ((4/d) max_F φ^#_F(t) - φ^#(t))`.
    pub sharp_slack: Exact,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CubeFitSummary {
    pub dim: usize,
    pub cubes: usize,
    pub bound: Exact,
    pub max_ratio: Exact,
    pub max_disqualified_per_axis: usize,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NamedReportMd {
    pub name: String,
    pub report: EquivalenceReportMd,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RCertificate {
    pub lo: Rat,
    pub hi: Rat,
    pub length: Rat,
    pub best: Option<RFit>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LineSummary {
    pub systems: Vec<RLevelSystem>,
    pub nesting_holds: bool,
    pub circle_consistent: bool,
    pub intervals: usize,
    pub fitted: usize,
    pub bound: Exact,
    pub max_ratio: Option<Exact>,
    pub certificates: Vec<RCertificate>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AtomSummary {
    pub atoms: usize,
    pub bound: Exact,
    pub max_lambda: Exact,
    pub combinations: usize,
    pub max_cost_ratio: Exact,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Suite {
    DDelta { rows: Vec<DDeltaRow> },
    Fit { shifts: Vec<FitSummary> },
    Norms { functions: Vec<NormRow> },
    Verify { functions: Vec<NamedReport> },
    Maximal { functions: Vec<PointwiseSummary> },
    VerifyMd { fit: CubeFitSummary, functions: Vec<NamedReportMd> },
    VerifyR(LineSummary),
    Atoms(AtomSummary),
    Scan(DScan),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub config_hash: String,
    pub seed: u64,
    pub depth: u32,
    pub shifts: Vec<Rat>,
    pub passed: bool,
    pub checks: usize,
    pub violations: Vec<Witness>,
    pub worst_margin: Option<Exact>,
    pub max_fit_ratio: Option<Exact>,
    pub suite: Suite,
}

struct Outcome {
    suite: Suite,
    checks: usize,
    violations: Vec<Witness>,
    worst_margin: Option<Rat>,
    max_fit_ratio: Option<Rat>,
}

impl Outcome {
    fn new(suite: Suite, checks: usize, violations: Vec<Witness>) -> Self {
        Outcome {
            suite,
            checks,
            violations,
            worst_margin: None,
            max_fit_ratio: None,
        }
    }
}

/// Run one suite on the corpus described by `config`.
pub fn run_experiment(command: Command, config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let corpus = generate_corpus(&config.corpus, config.seed)?;
    run_on_corpus(command, config, &corpus)
}

/// Run one suite on an explicit corpus (used to replay single functions).
pub fn run_on_corpus(command: Command, config: &ExperimentConfig, corpus: &Corpus) -> Result<RunReport> {
    config.validate()?;
    let shifts = if config.shifts.is_empty() {
        command.default_shifts()
    } else {
        config.shifts.clone()
    };
    let ctx = Ctx {
        command,
        config,
        shifts: &shifts,
    };
    let out = match command {
        Command::DDelta => ctx.d_delta()?,
        Command::Fit => ctx.fit(&corpus.arcs)?,
        Command::Norms => ctx.norms(&corpus.functions)?,
        Command::Verify => ctx.verify(&corpus.functions)?,
        Command::Maximal => ctx.maximal(&corpus.functions)?,
        Command::VerifyMd => ctx.verify_md(&corpus.grids)?,
        Command::VerifyR => ctx.verify_r()?,
        Command::Atoms => ctx.atoms(&corpus.atoms)?,
        Command::Scan => {
            let scan = scan_d_delta(config.max_q)?;
            let checks = scan.rows.len();
            Outcome::new(Suite::Scan(scan), checks, Vec::new())
        }
    };
    Ok(RunReport {
        command,
        config_hash: config.hash(),
        seed: config.seed,
        depth: config.depth,
        shifts,
        passed: out.violations.is_empty(),
        checks: out.checks,
        violations: out.violations,
        worst_margin: out.worst_margin.map(Exact::from),
        max_fit_ratio: out.max_fit_ratio.map(Exact::from),
        suite: out.suite,
    })
}

struct Ctx<'a> {
    command: Command,
    config: &'a ExperimentConfig,
    shifts: &'a [Rat],
}

fn max_opt(acc: Option<Rat>, x: &Rat) -> Option<Rat> {
    Some(acc.map_or_else(|| x.clone(), |a| a.max(x.clone())))
}

fn min_opt(acc: Option<Rat>, x: &Rat) -> Option<Rat> {
    Some(acc.map_or_else(|| x.clone(), |a| a.min(x.clone())))
}

pub fn random_arc(rng: &mut ChaCha8Rng) -> Arc {
    let q = rng.gen_range(2..=4096i64);
    let start = Rat::new(rng.gen_range(0..q), q);
    let len = Rat::new(rng.gen_range(1..=1000), 1000).mul_pow2(-rng.gen_range(0..=12));
    Arc::new(start, len).expect("length in (0, 1]")
}

impl Ctx<'_> {
    fn shift(&self) -> Result<Shift> {
        let s = Shift::new(self.shifts[0].clone())?;
        s.require_admissible()?;
        Ok(s)
    }

    fn replay(&self) -> Vec<String> {
        let mut args = vec![self.command.name().to_string()];
        for s in self.shifts {
            args.push("--delta".into());
            args.push(s.to_string());
        }
        args.extend([
            "--depth".into(),
            self.config.depth.to_string(),
            "--seed".into(),
            self.config.seed.to_string(),
            "--grid-per-axis".into(),
            self.config.grid_per_axis.to_string(),
        ]);
        args
    }

    fn witness(&self, check: &str, subject: &str, detail: String) -> Witness {
        Witness {
            check: check.into(),
            subject: subject.into(),
            detail,
            function: None,
            grid_function: None,
            combination: None,
            arc: None,
            replay: self.replay(),
        }
    }

    /// Verification grid plus the uniform points `k / grid_per_axis`.
    fn grid(&self, f: &StepFn, shift: &Shift) -> Vec<Rat> {
        let k = self.config.grid_per_axis as i64;
        let mut g = verification_grid(f, shift, self.config.depth);
        g.extend((0..k).map(|i| Rat::new(i, k)));
        normalize_grid(&g)
    }

    fn d_delta(&self) -> Result<Outcome> {
        let rows = self
            .shifts
            .iter()
            .map(|delta| {
                let d_delta = dyadic_distance(delta)?;
                let bound_constant = d_delta
                    .is_positive()
                    .then(|| Exact::from(Rat::integer(4) / &d_delta));
                Ok(DDeltaRow {
                    delta: delta.clone(),
                    d_delta,
                    bound_constant,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let n = rows.len();
        Ok(Outcome::new(Suite::DDelta { rows }, n, Vec::new()))
    }

    fn fit(&self, explicit: &[Arc]) -> Result<Outcome> {
        let mut summaries = Vec::new();
        let mut violations = Vec::new();
        let mut checks = 0;
        let mut overall: Option<Rat> = None;
        for (i, delta) in self.shifts.iter().enumerate() {
            let shift = Shift::new(delta.clone())?;
            shift.require_admissible()?;
            let bound = Rat::integer(2) / shift.distance();
            let mut rng = rng_for(self.config.seed, FIT_STREAM + i as u64);
            let mut max_ratio = Rat::zero();
            let mut max_arc = Arc::full();
            let mut bad = 0;
            let arcs: Vec<Arc> = if explicit.is_empty() {
                (0..self.config.samples).map(|_| random_arc(&mut rng)).collect()
            } else {
                explicit.to_vec()
            };
            for arc in arcs.iter().cloned() {
                let fit = fit_interval(&arc, &shift)?;
                checks += 1;
                let contained = fit.interval.arc().contains_arc(&arc);
                let exact_ratio = fit.ratio == fit.interval.length() / arc.length();
                if !(contained && exact_ratio && fit.ratio <= bound) {
                    bad += 1;
                    let mut w = self.witness(
                        "fit_interval",
                        &delta.to_string(),
                        format!("ratio {} against bound {bound}, contained {contained}", fit.ratio),
                    );
                    w.arc = Some(arc.clone());
                    violations.push(w);
                }
                if fit.ratio > max_ratio {
                    max_ratio = fit.ratio.clone();
                    max_arc = arc;
                }
            }
            overall = max_opt(overall, &max_ratio);
            summaries.push(FitSummary {
                delta: delta.clone(),
                d_delta: shift.distance().clone(),
                bound_scale_reached: max_ratio > &bound * &Rat::new(1, 2),
                bound: bound.into(),
                arcs: arcs.len(),
                max_ratio: max_ratio.into(),
                max_ratio_arc: max_arc,
                violations: bad,
            });
        }
        let mut out = Outcome::new(Suite::Fit { shifts: summaries }, checks, violations);
        out.max_fit_ratio = overall;
        Ok(out)
    }

    fn norms(&self, functions: &[Sample]) -> Result<Outcome> {
        let shift = self.shift()?;
        let depth = self.config.depth;
        let rows = functions
            .par_iter()
            .map(|s| {
                let base = dyadic_bmo_norm(&s.function, &Shift::base(), depth)?;
                let shifted = dyadic_bmo_norm(&s.function, &shift, depth)?;
                Ok(NormRow {
                    name: s.name.clone(),
                    base: base.value.into(),
                    shifted: shifted.value.into(),
                    base_exact: base.exact,
                    shifted_exact: shifted.exact,
                    base_interval: base.interval,
                    shifted_interval: shifted.interval,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Outcome::new(Suite::Norms { functions: rows }, 0, Vec::new()))
    }

    fn verify(&self, functions: &[Sample]) -> Result<Outcome> {
        let shift = self.shift()?;
        let reports = functions
            .par_iter()
            .map(|s| {
                let grid = self.grid(&s.function, &shift);
                let report = verify_equivalence(&s.function, &shift, self.config.depth, &grid)?;
                Ok(NamedReport {
                    name: s.name.clone(),
                    approximate: s.approximate,
                    report,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut violations = Vec::new();
        let mut worst: Option<Rat> = None;
        let mut max_ratio: Option<Rat> = None;
        for (s, r) in functions.iter().zip(&reports) {
            let rep = &r.report;
            worst = min_opt(worst, &rep.margin.exact);
            max_ratio = max_opt(max_ratio, &rep.proof_trace.ratio.exact);
            if !rep.holds() {
                let mut w = self.witness(
                    "verify_equivalence",
                    &s.name,
                    format!(
                        "classical {} vs bound {}; trivial direction {:?}; proof trace {}",
                        rep.classical_lower.exact,
                        rep.bound.exact,
                        rep.trivial_direction_holds,
                        rep.proof_trace.holds()
                    ),
                );
                w.function = Some(s.function.clone());
                w.arc = Some(rep.classical_witness.arc.clone());
                violations.push(w);
            }
        }
        let checks = reports.len();
        let mut out = Outcome::new(Suite::Verify { functions: reports }, checks, violations);
        out.worst_margin = worst;
        out.max_fit_ratio = max_ratio;
        Ok(out)
    }

    fn maximal(&self, functions: &[Sample]) -> Result<Outcome> {
        let shift = self.shift()?;
        let results = functions
            .par_iter()
            .map(|s| self.pointwise(s, &shift))
            .collect::<Result<Vec<_>>>()?;
        let mut violations = Vec::new();
        let mut summaries = Vec::new();
        let mut checks = 0;
        for (s, (summary, bad_points)) in functions.iter().zip(results) {
            checks += 2 * summary.points;
            for t in bad_points {
                let mut w = self.witness("pointwise_domination", &s.name, format!("fails at t = {t}"));
                w.function = Some(s.function.clone());
                violations.push(w);
            }
            summaries.push(summary);
        }
        Ok(Outcome::new(Suite::Maximal { functions: summaries }, checks, violations))
    }

    /// Pointwise domination on the grid. The dyadic chains go deep enough
    /// that every grid arc's fitted interval is inside them.
    fn pointwise(&self, s: &Sample, shift: &Shift) -> Result<(PointwiseSummary, Vec<Rat>)> {
        let f = &s.function;
        let d = shift.distance();
        let (grid, sharp, maximal) = pointwise_on_grid(f, &self.grid(f, shift))?;
        let min_gap = grid
            .windows(2)
            .map(|w| &w[1] - &w[0])
            .chain(std::iter::once(&grid[0] + &Rat::one() - grid.last().expect("non-empty")))
            .min()
            .expect("non-empty grid");
        let needed = if &min_gap >= d { 0 } else { fit_level(&min_gap, d) };
        let chain_depth = self.config.depth.max(needed);

        let abs = f.abs();
        let mut memo: HashMap<(bool, u32, u64), (Rat, Rat)> = HashMap::new();
        let two_over_d = Rat::integer(2) / d;
        let four_over_d = Rat::integer(4) / d;
        let mut maximal_slack: Option<Rat> = None;
        let mut sharp_slack: Option<Rat> = None;
        let mut bad = Vec::new();
        for (i, t) in grid.iter().enumerate() {
            let mut dy_sharp = Rat::zero();
            let mut dy_max = Rat::zero();
            for (is_base, sh) in [(true, Shift::base()), (false, shift.clone())] {
                for iv in chain(t, &sh, chain_depth) {
                    let (osc, avg) = memo
                        .entry((is_base, iv.level(), iv.index()))
                        .or_insert_with(|| {
                            let arc = iv.arc();
                            (mean_oscillation(f, &arc), average(&abs, &arc))
                        });
                    dy_sharp = dy_sharp.max(osc.clone());
                    dy_max = dy_max.max(avg.clone());
                }
            }
            let ms = &two_over_d * &dy_max - &maximal[i];
            let ss = &four_over_d * &dy_sharp - &sharp[i];
            if ms.is_negative() || ss.is_negative() {
                bad.push(t.clone());
            }
            maximal_slack = min_opt(maximal_slack, &ms);
            sharp_slack = min_opt(sharp_slack, &ss);
        }
        Ok((
            PointwiseSummary {
                name: s.name.clone(),
                points: grid.len(),
                chain_depth,
                maximal_slack: maximal_slack.expect("non-empty grid").into(),
                sharp_slack: sharp_slack.expect("non-empty grid").into(),
                violations: bad.len(),
            },
            bad,
        ))
    }

    fn verify_md(&self, grids: &[GridSample]) -> Result<Outcome> {
        let family = ShiftFamily::new(self.shifts.to_vec())?;
        if !family.is_admissible() {
            return Err(Error::InadmissibleFamily);
        }
        let m = family.len() - 1;
        let c = family.fit_constant();
        let bound = (0..m).fold(Rat::one(), |acc, _| acc * &c);
        let mut violations = Vec::new();

        let mut rng = rng_for(self.config.seed, CUBE_STREAM);
        let mut max_ratio = Rat::zero();
        let mut max_disq = 0;
        let mut bad_fits = 0;
        for _ in 0..self.config.samples {
            let arc = random_arc(&mut rng);
            let corner = (0..m)
                .map(|_| {
                    let q = rng.gen_range(2..=4096i64);
                    Rat::new(rng.gen_range(0..q), q)
                })
                .collect();
            let cube = Cube::cube(corner, arc.length().clone())?;
            let fit = fit_cube(&cube, &family)?;
            let disq = fit.disqualified.iter().map(Vec::len).max().unwrap_or(0);
            max_disq = max_disq.max(disq);
            if !fit.cube.contains(&cube) || fit.total_ratio > bound || disq > 1 {
                bad_fits += 1;
                violations.push(self.witness(
                    "fit_cube",
                    "random cube",
                    format!("{cube:?}: ratio {}, disqualified {:?}", fit.total_ratio, fit.disqualified),
                ));
            }
            max_ratio = max_ratio.max(fit.total_ratio);
        }
        let fit_summary = CubeFitSummary {
            dim: m,
            cubes: self.config.samples,
            bound: bound.into(),
            max_ratio: max_ratio.clone().into(),
            max_disqualified_per_axis: max_disq,
            violations: bad_fits,
        };

        let k = self.config.grid_per_axis as i64;
        let reports = grids
            .par_iter()
            .map(|g| {
                let f = &g.function;
                if f.dim() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        got: f.dim(),
                    });
                }
                let axis_grids: Vec<Vec<Rat>> = (0..m)
                    .map(|a| {
                        let mut pts: Vec<Rat> = (0..k).map(|i| Rat::new(i, k)).collect();
                        pts.extend(f.breakpoints()[a].iter().cloned());
                        normalize_grid(&pts)
                    })
                    .collect();
                let report = verify_equivalence_md(f, &family, self.config.depth, &axis_grids)?;
                Ok(NamedReportMd {
                    name: g.name.clone(),
                    report,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut worst: Option<Rat> = None;
        for (g, r) in grids.iter().zip(&reports) {
            worst = min_opt(worst, &r.report.margin.exact);
            if !r.report.holds() {
                let mut w = self.witness(
                    "verify_equivalence_md",
                    &g.name,
                    format!(
                        "classical {} vs bound {}; proof trace {}",
                        r.report.classical_lower.exact, r.report.bound.exact, r.report.proof_trace.holds
                    ),
                );
                w.grid_function = Some(g.function.clone());
                violations.push(w);
            }
        }
        let checks = self.config.samples + reports.len();
        let mut out = Outcome::new(
            Suite::VerifyMd {
                fit: fit_summary,
                functions: reports,
            },
            checks,
            violations,
        );
        out.worst_margin = worst;
        out.max_fit_ratio = Some(max_ratio);
        Ok(out)
    }

    fn verify_r(&self) -> Result<Outcome> {
        let (lo, hi) = self.config.r_levels;
        let deltas: Vec<Rat> = self.shifts.to_vec();
        let d = crate::circle::pairwise_distance(&deltas)?;
        if d.is_zero() {
            return Err(Error::InadmissibleFamily);
        }
        // Construction fails loudly on a nesting violation.
        let systems = deltas
            .iter()
            .map(|delta| build_r_filtration(delta, lo, hi))
            .collect::<Result<Vec<_>>>()?;
        let mut violations = Vec::new();
        let mut checks = systems.len();

        let mut circle_consistent = true;
        for sys in &systems {
            let shift = Shift::new(sys.delta().clone())?;
            for n in 0..=hi.min(10) {
                checks += 1;
                let s = sys.offset(n).expect("level built");
                let mut pts: Vec<Rat> = (0..1i64 << n)
                    .map(|k| (Rat::new(k, 1).mul_pow2(-n) + s).frac())
                    .collect();
                pts.sort();
                let mut circle = level_points(&shift, n as u32);
                circle.sort();
                if pts != circle {
                    circle_consistent = false;
                    violations.push(self.witness(
                        "line_circle_consistency",
                        &sys.delta().to_string(),
                        format!("level {n} endpoints differ from the circle filtration"),
                    ));
                }
            }
        }

        let bound = Rat::integer(4) / &d;
        let mut rng = rng_for(self.config.seed, LINE_STREAM);
        let mut certificates = Vec::new();
        let mut max_ratio: Option<Rat> = None;
        let mut fitted = 0;
        for _ in 0..self.config.samples {
            let e = rng.gen_range(-10..10);
            let len = Rat::new(1024 + rng.gen_range(0..1024), 1024).mul_pow2(e);
            let a = Rat::new(rng.gen_range(-65536..65536), 1024);
            let b = &a + &len;
            checks += 1;
            match fit_interval_r(&a, &b, &systems) {
                Ok(fit) => {
                    fitted += 1;
                    max_ratio = max_opt(max_ratio, &fit.ratio);
                }
                Err(e) => {
                    let best = best_fit_r(&a, &b, &systems);
                    violations.push(self.witness(
                        "fit_interval_r",
                        &format!("({a}, {b}]"),
                        e.to_string(),
                    ));
                    certificates.push(RCertificate {
                        lo: a,
                        hi: b,
                        length: len,
                        best,
                        message: e.to_string(),
                    });
                }
            }
        }
        let mut out = Outcome::new(
            Suite::VerifyR(LineSummary {
                systems,
                nesting_holds: true,
                circle_consistent,
                intervals: self.config.samples,
                fitted,
                bound: bound.into(),
                max_ratio: max_ratio.clone().map(Exact::from),
                certificates,
            }),
            checks,
            violations,
        );
        out.max_fit_ratio = max_ratio;
        Ok(out)
    }

    fn atoms(&self, corpus_atoms: &[Atom]) -> Result<Outcome> {
        let shift = self.shift()?;
        let bound = Rat::integer(2) / shift.distance();
        let mut rng = rng_for(self.config.seed, ATOM_STREAM);
        let atoms = corpus_atoms;
        let mut violations = Vec::new();
        let mut max_lambda = Rat::zero();
        let mut checks = 0;
        for (i, atom) in atoms.iter().enumerate() {
            checks += 1;
            let d = atomize_dyadic(atom, &shift)?;
            let valid = is_atom(d.atom.profile(), &d.interval.arc()).valid
                && d.atom.support() == &d.interval.arc();
            let rebuilt = d.atom.profile().scale(&d.lambda) == *atom.profile();
            max_lambda = max_lambda.max(d.lambda.clone());
            if !(valid && rebuilt && d.lambda <= bound) {
                let mut w = self.witness(
                    "atomize_dyadic",
                    &format!("atoms-{i}"),
                    format!("lambda {}, valid {valid}, rebuilt {rebuilt}", d.lambda),
                );
                w.combination = Some(AtomicCombination::new(vec![AtomTerm::new(Rat::one(), atom.clone())]));
                violations.push(w);
            }
        }
        let mut max_cost = Rat::zero();
        let chunks: Vec<&[Atom]> = atoms.chunks(5).collect();
        for (i, chunk) in chunks.iter().enumerate() {
            checks += 1;
            let terms = chunk
                .iter()
                .map(|a| {
                    let mut c = Rat::zero();
                    while c.is_zero() {
                        c = Rat::new(rng.gen_range(-4..=4), rng.gen_range(1..=4));
                    }
                    AtomTerm::new(c, a.clone())
                })
                .collect();
            let combo = AtomicCombination::new(terms);
            let dec = decompose_h1(&combo, &shift)?;
            max_cost = max_cost.max(dec.cost_ratio.clone());
            if !dec.residual(&combo).is_zero() || dec.cost_ratio > bound {
                let mut w = self.witness(
                    "decompose_h1",
                    &format!("combination-{i}"),
                    format!("cost ratio {}", dec.cost_ratio),
                );
                w.combination = Some(combo.clone());
                violations.push(w);
            }
        }
        let mut out = Outcome::new(
            Suite::Atoms(AtomSummary {
                atoms: atoms.len(),
                bound: bound.into(),
                max_lambda: max_lambda.clone().into(),
                combinations: chunks.len(),
                max_cost_ratio: max_cost.into(),
                violations: violations.len(),
            }),
            checks,
            violations,
        );
        out.max_fit_ratio = Some(max_lambda);
        Ok(out)
    }
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat tables for the suites that have one.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        match &self.suite {
            Suite::Scan(scan) => return scan.to_csv(),
            Suite::DDelta { rows } => {
                w.write_record(["delta", "d_delta"]).map_err(csv_error)?;
                for r in rows {
                    w.write_record([r.delta.to_string(), r.d_delta.to_string()])
                        .map_err(csv_error)?;
                }
            }
            Suite::Fit { shifts } => {
                w.write_record(["delta", "d_delta", "arcs", "max_ratio", "bound", "violations"])
                    .map_err(csv_error)?;
                for s in shifts {
                    w.write_record([
                        s.delta.to_string(),
                        s.d_delta.to_string(),
                        s.arcs.to_string(),
                        s.max_ratio.exact.to_string(),
                        s.bound.exact.to_string(),
                        s.violations.to_string(),
                    ])
                    .map_err(csv_error)?;
                }
            }
            Suite::Verify { functions } => {
                w.write_record([
                    "name",
                    "classical_lower",
                    "dyadic_norm_base",
                    "dyadic_norm_shifted",
                    "bound",
                    "margin",
                    "holds",
                ])
                .map_err(csv_error)?;
                for f in functions {
                    let r = &f.report;
                    w.write_record([
                        f.name.clone(),
                        r.classical_lower.exact.to_string(),
                        r.dyadic_norm_base.exact.to_string(),
                        r.dyadic_norm_shifted.exact.to_string(),
                        r.bound.exact.to_string(),
                        r.margin.exact.to_string(),
                        r.holds().to_string(),
                    ])
                    .map_err(csv_error)?;
                }
            }
            _ => {
                return Err(Error::Config(format!(
                    "csv output is not available for {}",
                    self.command
                )))
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv of ascii fields"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_verify_passes_with_constant_twelve() {
        let report = run_experiment(Command::Verify, &ExperimentConfig::default()).unwrap();
        assert!(report.passed);
        match &report.suite {
            Suite::Verify { functions } => {
                assert!(!functions.is_empty());
                for f in functions {
                    assert_eq!(f.report.bound_constant.exact, Rat::integer(12));
                }
            }
            other => panic!("unexpected suite {other:?}"),
        }
    }

    #[test]
    fn fit_rejects_half() {
        let config = ExperimentConfig {
            shifts: vec![Rat::new(1, 2)],
            ..ExperimentConfig::default()
        };
        let err = run_experiment(Command::Fit, &config).unwrap_err();
        assert!(err.to_string().contains("inadmissible shift: d(δ)=0"));
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("verify-x".parse::<Command>().is_err());
    }

    #[test]
    fn every_suite_runs_on_the_demo_corpus() {
        let config = ExperimentConfig {
            samples: 50,
            depth: 5,
            ..ExperimentConfig::default()
        };
        for c in Command::ALL {
            let report = run_experiment(c, &config).unwrap();
            assert_eq!(report, run_experiment(c, &config).unwrap());
            if c != Command::VerifyR {
                assert!(report.passed, "{c} failed: {:?}", report.violations);
            }
        }
    }
}
