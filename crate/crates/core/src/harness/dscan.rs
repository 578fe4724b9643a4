use num_integer::Integer;
use serde::Serialize;

use crate::circle::dyadic_distance;
use crate::error::{Error, Result};
use crate::rat::Rat;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DRow {
    pub delta: Rat,
    pub d_delta: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DScan {
    pub max_q: u64,
    pub rows: Vec<DRow>,
    pub positive: usize,
    /// Largest gap between consecutive positive-`d` points of `[0, 1]`
    /// (the endpoints 0 and 1 included).
    pub max_gap: Rat,
    /// Every interval of width `2/Q` meets a point with `d > 0`.
    pub dense_at_scale: bool,
    pub note: String,
}

/// All reduced `p/q` in `(0, 1)` with `q <= max_q`, ordered by `q` then `p`.
pub fn scan_d_delta(max_q: u64) -> Result<DScan> {
    if max_q < 2 {
        return Err(Error::Config(format!("max_q must be at least 2, got {max_q}")));
    }
    let mut rows = Vec::new();
    for q in 2..=max_q {
        for p in 1..q {
            if p.gcd(&q) == 1 {
                let delta = Rat::new(p as i64, q as i64);
                let d_delta = dyadic_distance(&delta)?;
                rows.push(DRow { delta, d_delta });
            }
        }
    }
    let mut points: Vec<Rat> = rows
        .iter()
        .filter(|r| r.d_delta.is_positive())
        .map(|r| r.delta.clone())
        .collect();
    let positive = points.len();
    points.sort();
    let mut prev = Rat::zero();
    let mut max_gap = Rat::zero();
    for p in points.iter().chain(std::iter::once(&Rat::one())) {
        max_gap = max_gap.max(p - &prev);
        prev = p.clone();
    }
    let dense_at_scale = max_gap <= Rat::new(2, max_q as i64);
    Ok(DScan {
        max_q,
        rows,
        positive,
        max_gap,
        dense_at_scale,
        note: "density is illustrated by the maximal gap between admissible shifts; \
               the claim that the admissible set has measure zero cannot be checked \
               by a finite computation"
            .into(),
    })
}

impl DScan {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["delta", "d_delta"]).map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([r.delta.to_string(), r.d_delta.to_string()])
                .map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv of ascii fields"))
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
