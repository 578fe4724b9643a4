//! Deterministic test corpora. All randomness comes from `ChaCha8Rng`
//! seeded with the experiment seed; corpus entry `i` draws from stream `i`,
//! so entries do not disturb each other when the spec changes.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{CorpusEntry, Generator};
use crate::circle::Arc;
use crate::error::{Error, Result};
use crate::hardy::Atom;
use crate::multidim::GridFn;
use crate::rat::Rat;
use crate::step::StepFn;

const NON_DYADIC_DENOMINATORS: [i64; 5] = [3, 5, 7, 9, 12];
const ATOM_DENOMINATORS: [i64; 10] = [2, 3, 4, 5, 6, 7, 8, 12, 16, 32];

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::Dyadic => "dyadic",
            Generator::NonDyadic => "non_dyadic",
            Generator::Haar => "haar",
            Generator::LogDistance => "log_distance",
            Generator::Atoms => "atoms",
            Generator::Grid => "grid",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Sample {
    pub name: String,
    pub generator: Generator,
    /// Quantized stand-in for a function outside the step class.
    pub approximate: bool,
    pub function: StepFn,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GridSample {
    pub name: String,
    pub function: GridFn,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Corpus {
    pub functions: Vec<Sample>,
    pub atoms: Vec<Atom>,
    pub grids: Vec<GridSample>,
    /// Explicit arcs for the fit suite; random arcs are drawn when empty.
    pub arcs: Vec<Arc>,
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn generate_corpus(spec: &[CorpusEntry], seed: u64) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    for (i, entry) in spec.iter().enumerate() {
        if let Some(d) = entry.depth {
            if d == 0 || d > 12 {
                return Err(Error::Config(format!(
                    "{} depth must be in 1..=12, got {d}",
                    entry.generator.name()
                )));
            }
        }
        let mut rng = rng_for(seed, i as u64);
        for k in 0..entry.count {
            let name = format!("{}-{k}", entry.generator.name());
            let step = |function| Sample {
                name: name.clone(),
                generator: entry.generator,
                approximate: entry.generator == Generator::LogDistance,
                function,
            };
            match entry.generator {
                Generator::Dyadic => corpus.functions.push(step(random_dyadic(&mut rng, entry.depth))),
                Generator::NonDyadic => corpus.functions.push(step(random_non_dyadic(&mut rng))),
                Generator::Haar => {
                    let j = entry.depth.unwrap_or(3);
                    corpus.functions.push(step(random_haar(&mut rng, j)))
                }
                Generator::LogDistance => {
                    corpus.functions.push(step(log_distance(entry.depth.unwrap_or(5))))
                }
                Generator::Atoms => corpus.atoms.push(random_atom(&mut rng)),
                Generator::Grid => corpus.grids.push(GridSample {
                    name: name.clone(),
                    function: random_grid(&mut rng),
                }),
            }
        }
    }
    Ok(corpus)
}

/// `a / b` with `a ∈ [-4, 4]`, `b ∈ [1, 4]`.
fn small_rat(rng: &mut ChaCha8Rng) -> Rat {
    Rat::new(rng.gen_range(-4..=4), rng.gen_range(1..=4))
}

/// `count` distinct sorted multiples of `1/q`.
fn grid_subset(rng: &mut ChaCha8Rng, q: i64, count: usize) -> Vec<Rat> {
    let mut ks = sample(rng, q as usize, count).into_vec();
    ks.sort_unstable();
    ks.into_iter().map(|k| Rat::new(k as i64, q)).collect()
}

fn random_step(rng: &mut ChaCha8Rng, q: i64, max_pieces: usize) -> StepFn {
    let pieces = rng.gen_range(1..=max_pieces.min(q as usize));
    let breakpoints = grid_subset(rng, q, pieces);
    let values = (0..pieces).map(|_| small_rat(rng)).collect();
    StepFn::new(breakpoints, values).expect("sorted breakpoints in [0, 1)")
}

pub fn random_dyadic(rng: &mut ChaCha8Rng, depth: Option<u32>) -> StepFn {
    let j = depth.unwrap_or_else(|| rng.gen_range(1..=6));
    random_step(rng, 1 << j, 8)
}

pub fn random_non_dyadic(rng: &mut ChaCha8Rng) -> StepFn {
    let q = NON_DYADIC_DENOMINATORS[rng.gen_range(0..NON_DYADIC_DENOMINATORS.len())];
    random_step(rng, q, 6)
}

/// `h_{l,k}`: `+1` on the left half of `(k 2^-l, (k+1) 2^-l]`, `-1` on the right half.
pub fn haar_function(level: u32, k: u64) -> StepFn {
    let half = Rat::dyadic_unit(level + 1);
    let start = Rat::new(k as i64, 1).mul_pow2(-(level as i32));
    let left = Arc::new(start.clone(), half.clone()).expect("inside the circle");
    let right = Arc::new((&start + &half).frac(), half).expect("inside the circle");
    StepFn::indicator(&left, Rat::one()).add(&StepFn::indicator(&right, Rat::integer(-1)))
}

pub fn random_haar(rng: &mut ChaCha8Rng, depth: u32) -> StepFn {
    let mut f = StepFn::constant(Rat::zero());
    for level in 0..depth {
        for k in 0..1u64 << level {
            if rng.gen_bool(0.5) {
                f = f.add(&haar_function(level, k).scale(&small_rat(rng)));
            }
        }
    }
    f
}

/// `log(1 / |x|)` (distance to 0 on the circle) at piece midpoints of the
/// level-`depth` partition, rounded to multiples of `1/16`.
pub fn log_distance(depth: u32) -> StepFn {
    let n = 1u64 << depth;
    let breakpoints: Vec<Rat> = (0..n).map(|k| Rat::new(k as i64, n as i64)).collect();
    let values = (0..n)
        .map(|k| {
            let mid = (k as f64 + 0.5) / n as f64;
            let dist = mid.min(1.0 - mid);
            Rat::new((16.0 * (1.0 / dist).ln()).round() as i64, 16)
        })
        .collect();
    StepFn::new(breakpoints, values).expect("uniform partition")
}

/// Two-step mean-zero atom on a random rational arc, `sup ≤ 1/|I|`.
pub fn random_atom(rng: &mut ChaCha8Rng) -> Atom {
    let pick = |rng: &mut ChaCha8Rng| ATOM_DENOMINATORS[rng.gen_range(0..ATOM_DENOMINATORS.len())];
    let q = pick(rng);
    let start = Rat::new(rng.gen_range(0..q), q);
    let q = pick(rng);
    let len = Rat::new(rng.gen_range(1..q), q);
    let v = rng.gen_range(2..=5);
    let split = Rat::new(rng.gen_range(1..v), v);
    let left_len = &len * &split;
    let right_len = &len - &left_len;
    // h_l |left| = h_r |right|, max height = c / |I|.
    let scale = Rat::new(rng.gen_range(1..=4), 4) / (&len * &left_len.clone().max(right_len.clone()));
    let left = Arc::new(start.clone(), left_len.clone()).expect("inside the circle");
    let right = Arc::new((&start + &left_len).frac(), right_len.clone()).expect("inside the circle");
    let profile = StepFn::indicator(&left, &scale * &right_len)
        .add(&StepFn::indicator(&right, -(&scale * &left_len)));
    let support = Arc::new(start, len).expect("inside the circle");
    Atom::new(support, profile).expect("generator builds valid atoms")
}

pub fn random_grid(rng: &mut ChaCha8Rng) -> GridFn {
    let axes: Vec<Vec<Rat>> = (0..2)
        .map(|_| {
            let q = [2i64, 3, 4, 6, 8][rng.gen_range(0..5)];
            let pieces = rng.gen_range(1..=4.min(q as usize));
            grid_subset(rng, q, pieces)
        })
        .collect();
    let cells: usize = axes.iter().map(Vec::len).product();
    let values = (0..cells).map(|_| small_rat(rng)).collect();
    GridFn::new(axes, values).expect("sorted axes")
}
