//! Exact open-interval and axis-box geometry inside the unit bin.
//!
//! Every coordinate is an exact rational; all overlap decisions use strict
//! comparisons, so boxes that merely share a face are disjoint (the placed
//! hypercubes are open).

use crate::rat::Rat;
use crate::{Error, Result};

/// Non-degenerate open interval `(lo, hi)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rat,
    hi: Rat,
}

impl Interval {
    pub fn new(lo: Rat, hi: Rat) -> Result<Interval> {
        if lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "degenerate interval ({lo}, {hi})"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> &Rat {
        &self.lo
    }

    pub fn hi(&self) -> &Rat {
        &self.hi
    }

    pub fn length(&self) -> Rat {
        &self.hi - &self.lo
    }

    /// Strict membership (the interval is open).
    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo < x && x < &self.hi
    }
}

/// Open axis-aligned box: a product of `d` open intervals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AxisBox {
    dims: Vec<Interval>,
}

impl AxisBox {
    pub fn new(dims: Vec<Interval>) -> Result<AxisBox> {
        if dims.is_empty() {
            return Err(Error::InvalidArgument("zero-dimensional box".into()));
        }
        Ok(AxisBox { dims })
    }

    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[Interval] {
        &self.dims
    }

    pub fn contains_point(&self, p: &[Rat]) -> Result<bool> {
        if p.len() != self.d() {
            return Err(Error::DimensionMismatch {
                left: self.d(),
                right: p.len(),
            });
        }
        Ok(self.dims.iter().zip(p).all(|(iv, x)| iv.contains(x)))
    }
}

fn check_class(k: u32) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("class k={k} must be >= 2")));
    }
    Ok(())
}

/// Rejects `eps` outside the open interval `(0, 1/(k-1))`.
fn check_eps(k: u32, eps: &Rat) -> Result<()> {
    if !eps.is_positive() || *eps >= Rat::ratio(1, (k - 1) as i64) {
        return Err(Error::InvalidEps {
            eps: eps.to_string(),
            why: format!("must lie in (0, 1/{})", k - 1),
        });
    }
    Ok(())
}

fn check_letter(k: u32, v: u32) -> Result<()> {
    if v < 1 || v > k {
        return Err(Error::LetterOutOfRange { letter: v, k });
    }
    Ok(())
}

/// Raw grid coordinate `(1+eps)(v-1)/k` for any `v`, without the snap-back at
/// `v = k`; the resulting box escapes the unit bin in that case.
pub fn base_coord_unclamped(k: u32, v: u32, eps: &Rat) -> Result<Rat> {
    check_class(k)?;
    check_letter(k, v)?;
    if !eps.is_positive() {
        return Err(Error::InvalidEps {
            eps: eps.to_string(),
            why: "must be positive".into(),
        });
    }
    Ok((Rat::one() + eps) * Rat::ratio(v as i64 - 1, k as i64))
}

/// Base-point coordinate of a class-`k` cube in letter position `v`:
/// `(1+eps)(v-1)/k` for `v < k`, snapped to `1 - (1+eps)/k` at `v = k` so the
/// cube stays inside the bin.
pub fn base_coord(k: u32, v: u32, eps: &Rat) -> Result<Rat> {
    check_class(k)?;
    check_eps(k, eps)?;
    check_letter(k, v)?;
    Ok(base_coord_inner(k, v, eps))
}

fn base_coord_inner(k: u32, v: u32, eps: &Rat) -> Rat {
    let side = side_length(k, eps);
    if v < k {
        (Rat::one() + eps) * Rat::ratio(v as i64 - 1, k as i64)
    } else {
        Rat::one() - side
    }
}

/// Side length `(1+eps)/k` of a class-`k` cube.
pub fn side_length(k: u32, eps: &Rat) -> Rat {
    (Rat::one() + eps) * Rat::ratio(1, k as i64)
}

/// The open interval occupied by a class-`k` cube in letter position `v`.
pub fn interval_of(k: u32, v: u32, eps: &Rat) -> Result<Interval> {
    check_class(k)?;
    check_eps(k, eps)?;
    check_letter(k, v)?;
    Ok(interval_of_inner(k, v, eps))
}

fn interval_of_inner(k: u32, v: u32, eps: &Rat) -> Interval {
    let lo = base_coord_inner(k, v, eps);
    let hi = &lo + &side_length(k, eps);
    Interval { lo, hi }
}

/// Placement interval restricted to `v < k`, valid up to and including the
/// homogeneous-packing boundary `eps = 1/(k-1)`.
pub(crate) fn interval_of_boundary(k: u32, v: u32, eps: &Rat) -> Result<Interval> {
    check_class(k)?;
    check_letter(k, v)?;
    if v >= k {
        return Err(Error::LetterOutOfRange { letter: v, k });
    }
    if !eps.is_positive() || *eps > Rat::ratio(1, (k - 1) as i64) {
        return Err(Error::InvalidEps {
            eps: eps.to_string(),
            why: format!("must lie in (0, 1/{}]", k - 1),
        });
    }
    Ok(interval_of_inner(k, v, eps))
}

/// Open intervals overlap iff `max(lo) < min(hi)`; shared endpoints do not
/// count.
pub fn intervals_overlap(a: &Interval, b: &Interval) -> bool {
    let lo = a.lo().max(b.lo());
    let hi = a.hi().min(b.hi());
    lo < hi
}

/// Open boxes overlap iff they overlap in every coordinate.
pub fn boxes_overlap(a: &AxisBox, b: &AxisBox) -> Result<bool> {
    if a.d() != b.d() {
        return Err(Error::DimensionMismatch {
            left: a.d(),
            right: b.d(),
        });
    }
    Ok(a.dims()
        .iter()
        .zip(b.dims())
        .all(|(x, y)| intervals_overlap(x, y)))
}

/// True iff every interval satisfies `lo >= 0` and `hi <= 1`.
pub fn box_in_unit(a: &AxisBox) -> bool {
    let zero = Rat::zero();
    let one = Rat::one();
    a.dims()
        .iter()
        .all(|iv| iv.lo() >= &zero && iv.hi() <= &one)
}

/// Exact truth of the class gap `y^(k)(k-1) < x^(k2)(k2)`.
///
/// Evaluates the comparison for any positive `eps`; when `eps <= 1/S^2` it is
/// guaranteed true (a test obligation, not a runtime assumption).
pub fn check_gap_fact(k: u32, k2: u32, s: u32, eps: &Rat) -> Result<bool> {
    if !(2 <= k && k < k2 && k2 <= s) {
        return Err(Error::InvalidArgument(format!(
            "need 2 <= k < k2 <= S, got k={k}, k2={k2}, S={s}"
        )));
    }
    if !eps.is_positive() || *eps >= Rat::one() {
        return Err(Error::InvalidEps {
            eps: eps.to_string(),
            why: "must lie in (0, 1)".into(),
        });
    }
    // y^(k)(k-1) = (k-1)(1+eps)/k, x^(k2)(k2) = 1 - (1+eps)/k2
    let upper = Rat::ratio(k as i64 - 1, k as i64) * (Rat::one() + eps);
    let lower = Rat::one() - side_length(k2, eps);
    Ok(upper < lower)
}
