//! Adversarial instance streams: the concatenation of per-class segments,
//! each repeating one cube class with run-length-encoded big-integer counts,
//! plus the offline bin certificate and the analytic lower bound that any
//! bounded-space algorithm must pay.
//!
//! Items are never materialized individually at large scale; a per-item
//! expansion exists below a configured cap for cross-validation.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::packing::EpsilonPacking;
use crate::rat::Rat;
use crate::{Caps, Error, Result};

/// Scaling of the common segment multiplier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scale {
    /// Multiplier `N = prod_k (k-1)^d` over the packed classes.
    Full,
    /// Multiplier `t * lcm_k (k-1)^d`: the smallest choice (at `t = 1`)
    /// that keeps every segment count divisible by its class capacity.
    Reduced(BigUint),
}

/// Run-length-encoded adversarial input: segment `l` carries
/// `2 * M * multiplier * nu_k` identical class-`k` cubes, classes ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceStream {
    pub d: usize,
    pub eps: Rat,
    pub m: BigUint,
    pub multiplier: BigUint,
    pub segments: Vec<(u32, BigUint)>,
}

impl InstanceStream {
    pub fn total_items(&self) -> BigUint {
        self.segments.iter().map(|(_, c)| c).sum()
    }

    /// Per-item expansion in stream order; the caller must enforce the cap.
    pub fn expand_items(&self) -> impl Iterator<Item = u32> + '_ {
        self.segments.iter().flat_map(|(k, count)| {
            let n = count.to_u64().expect("expansion caller checked the cap");
            std::iter::repeat_n(*k, n as usize)
        })
    }
}

/// Upper bound on copies of a class-`k` cube per unit bin: `(k-1)^d`.
/// The grid construction attains it; that no placement beats it is assumed
/// (verified for axis-aligned grids at small scale in the tests).
pub fn per_class_capacity(k: u32, d: usize) -> BigUint {
    assert!(k >= 2, "class k must be >= 2");
    BigUint::from(k - 1).pow(d as u32)
}

fn decimal_digits_estimate(n: &BigUint) -> u64 {
    // upper estimate via bits * log10(2); display-free and deterministic
    (n.bits() * 1233) / 4096 + 1
}

/// Builds the instance stream from a packing with exact per-class counts.
/// Lower-bound counted packings are rejected: the stream needs `nu_k`
/// exactly.
pub fn build_instance(
    p: &EpsilonPacking,
    m: &BigUint,
    scale: &Scale,
    caps: &Caps,
) -> Result<InstanceStream> {
    if m.is_zero() {
        return Err(Error::InvalidArgument(
            "the bounded-space constant M must be at least 1".into(),
        ));
    }
    let nu = p.nu();
    if let Some((k, _)) = nu.iter().find(|(_, c)| !c.exact) {
        return Err(Error::InexactCount { k: *k });
    }
    let classes: Vec<u32> = p.classes();
    if classes.is_empty() {
        return Err(Error::InvalidArgument(
            "an empty packing induces no instance".into(),
        ));
    }

    let multiplier = match scale {
        Scale::Full => {
            let mut n = BigUint::one();
            for &k in &classes {
                n *= per_class_capacity(k, p.d);
            }
            n
        }
        Scale::Reduced(t) => {
            if t.is_zero() {
                return Err(Error::InvalidArgument("reduced scale needs t >= 1".into()));
            }
            let mut l = BigUint::one();
            for &k in &classes {
                l = l.lcm(&per_class_capacity(k, p.d));
            }
            t * l
        }
    };

    let base = BigUint::from(2u32) * m * &multiplier;
    let mut segments = Vec::with_capacity(classes.len());
    let mut digits = 0u64;
    for &k in &classes {
        let count = &base * &nu[&k].count;
        digits += decimal_digits_estimate(&count);
        if digits > caps.instance_decimal_digits {
            return Err(Error::CapExceeded {
                what: "instance decimal digits",
                needed: digits.to_string(),
                cap: caps.instance_decimal_digits.to_string(),
            });
        }
        segments.push((k, count));
    }
    Ok(InstanceStream {
        d: p.d,
        eps: p.eps.clone(),
        m: m.clone(),
        multiplier,
        segments,
    })
}

/// Offline packing certificate: `2 M multiplier` bins, each holding one copy
/// of the source packing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OfflineCertificate {
    pub bin_count: BigUint,
    /// Explicit item-to-(bin, word) map in stream order, emitted only for
    /// small instances with a materialized source packing.
    pub assignment: Option<Vec<(u64, crate::codes::Word)>>,
}

/// The offline bound `2 M multiplier`. When a materialized source packing is
/// supplied and the instance expands below the per-item cap, an explicit
/// assignment is emitted and validated: every bin receives exactly the
/// source packing's cubes, class by class.
pub fn offline_bound(
    i: &InstanceStream,
    source: Option<&EpsilonPacking>,
    caps: &Caps,
) -> Result<OfflineCertificate> {
    let bin_count = BigUint::from(2u32) * &i.m * &i.multiplier;
    let mut assignment = None;

    if let Some(p) = source {
        let small = i.total_items() <= BigUint::from(caps.per_item);
        if small && p.is_materialized() {
            let bins = bin_count
                .to_u64()
                .ok_or_else(|| Error::Validation("bin count exceeds u64 for expansion".into()))?;
            let cubes = p.cubes().unwrap();
            let mut map = Vec::new();
            for (k, count) in &i.segments {
                let class_words: Vec<&crate::codes::Word> =
                    cubes.iter().filter(|c| c.k == *k).map(|c| &c.word).collect();
                let nu = class_words.len() as u64;
                let count = count
                    .to_u64()
                    .ok_or_else(|| Error::Validation("segment exceeds u64".into()))?;
                if nu == 0 || count != bins * nu {
                    return Err(Error::Validation(format!(
                        "segment k={k} carries {count} items but {bins} bins x {nu} slots"
                    )));
                }
                for j in 0..count {
                    map.push((j / nu, class_words[(j % nu) as usize].clone()));
                }
            }
            // each bin must hold the source packing exactly
            let mut per_bin: Vec<Vec<&crate::codes::Word>> = vec![vec![]; bins as usize];
            for (b, w) in &map {
                per_bin[*b as usize].push(w);
            }
            let mut reference: Vec<&crate::codes::Word> = cubes.iter().map(|c| &c.word).collect();
            reference.sort();
            for (b, mut contents) in per_bin.into_iter().enumerate() {
                contents.sort();
                if contents != reference {
                    return Err(Error::Validation(format!(
                        "bin {b} does not replicate the source packing"
                    )));
                }
            }
            assignment = Some(map);
        }
    }
    Ok(OfflineCertificate {
        bin_count,
        assignment,
    })
}

/// Exact lower bound on the bins any bounded-space algorithm uses:
/// `sum_l (count_l / (k_l - 1)^d - M)`, kept rational until the final floor.
pub fn universal_lower_bound(i: &InstanceStream) -> BigUint {
    let m = Rat::from_biguint(&i.m);
    let mut total = Rat::zero();
    for (k, count) in &i.segments {
        let cap = per_class_capacity(*k, i.d);
        total = total + Rat::from_biguint(count) / Rat::from_biguint(&cap) - &m;
    }
    let floor: BigInt = total.floor_int();
    // a negative lower bound carries no information; clamp at zero
    floor.to_biguint().unwrap_or_else(BigUint::zero)
}

// ---------------------------------------------------------------------------
// Wire formats: the line-oriented instance file and its JSON mirror.
// ---------------------------------------------------------------------------

impl InstanceStream {
    /// Bit-exact line format: header `d=.. eps=p/q M=.. mult=..`, then one
    /// `<k> <count>` line per segment.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "d={} eps={} M={} mult={}\n",
            self.d, self.eps, self.m, self.multiplier
        );
        for (k, count) in &self.segments {
            out.push_str(&format!("{k} {count}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<InstanceStream> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty instance file".into()))?;
        let mut d = None;
        let mut eps = None;
        let mut m = None;
        let mut mult = None;
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field {field:?}")))?;
            match key {
                "d" => {
                    d = Some(value.parse::<usize>().map_err(|e| {
                        Error::Parse(format!("bad dimension {value:?}: {e}"))
                    })?)
                }
                "eps" => eps = Some(value.parse::<Rat>()?),
                "M" => {
                    m = Some(
                        BigUint::parse_bytes(value.as_bytes(), 10)
                            .ok_or_else(|| Error::Parse(format!("bad M {value:?}")))?,
                    )
                }
                "mult" => {
                    mult = Some(
                        BigUint::parse_bytes(value.as_bytes(), 10)
                            .ok_or_else(|| Error::Parse(format!("bad mult {value:?}")))?,
                    )
                }
                other => return Err(Error::Parse(format!("unknown header key {other:?}"))),
            }
        }
        let (d, eps, m, multiplier) = match (d, eps, m, mult) {
            (Some(d), Some(e), Some(m), Some(x)) => (d, e, m, x),
            _ => return Err(Error::Parse("incomplete instance header".into())),
        };
        let mut segments = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let k: u32 = parts
                .next()
                .ok_or_else(|| Error::Parse("empty segment line".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad class: {e}")))?;
            let count = parts
                .next()
                .and_then(|s| BigUint::parse_bytes(s.as_bytes(), 10))
                .ok_or_else(|| Error::Parse(format!("bad segment count in {line:?}")))?;
            if parts.next().is_some() {
                return Err(Error::Parse(format!("trailing tokens in {line:?}")));
            }
            segments.push((k, count));
        }
        let stream = InstanceStream {
            d,
            eps,
            m,
            multiplier,
            segments,
        };
        verify_instance(&stream)?;
        Ok(stream)
    }

    pub fn to_json(&self) -> String {
        let dto = InstanceJson {
            d: self.d,
            eps: self.eps.clone(),
            m: self.m.to_string(),
            mult: self.multiplier.to_string(),
            segments: self
                .segments
                .iter()
                .map(|(k, c)| SegmentJson {
                    k: *k,
                    count: c.to_string(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&dto).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<InstanceStream> {
        let dto: InstanceJson = serde_json::from_str(text)?;
        let m = BigUint::parse_bytes(dto.m.as_bytes(), 10)
            .ok_or_else(|| Error::Parse(format!("bad M {:?}", dto.m)))?;
        let multiplier = BigUint::parse_bytes(dto.mult.as_bytes(), 10)
            .ok_or_else(|| Error::Parse(format!("bad mult {:?}", dto.mult)))?;
        let mut segments = Vec::new();
        for s in &dto.segments {
            let count = BigUint::parse_bytes(s.count.as_bytes(), 10)
                .ok_or_else(|| Error::Parse(format!("bad count {:?}", s.count)))?;
            segments.push((s.k, count));
        }
        let stream = InstanceStream {
            d: dto.d,
            eps: dto.eps,
            m,
            multiplier,
            segments,
        };
        verify_instance(&stream)?;
        Ok(stream)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    d: usize,
    eps: Rat,
    #[serde(rename = "M")]
    m: String,
    mult: String,
    segments: Vec<SegmentJson>,
}

#[derive(Serialize, Deserialize)]
struct SegmentJson {
    k: u32,
    count: String,
}

/// Structural well-formedness of a stream built by `build_instance`:
/// ascending classes, positive counts, the multiplier divisible by every
/// class capacity, and every count equal to `2 M multiplier nu` for an
/// integral `1 <= nu <= (k-1)^d`.
pub fn verify_instance(i: &InstanceStream) -> Result<()> {
    if i.d == 0 {
        return Err(Error::Validation("instance dimension must be >= 1".into()));
    }
    if !i.eps.is_positive() || i.eps >= Rat::one() {
        return Err(Error::Validation(format!(
            "instance eps {} outside (0, 1)",
            i.eps
        )));
    }
    if i.m.is_zero() || i.multiplier.is_zero() {
        return Err(Error::Validation("M and mult must be positive".into()));
    }
    if i.segments.is_empty() {
        return Err(Error::Validation("instance carries no segments".into()));
    }
    let base = BigUint::from(2u32) * &i.m * &i.multiplier;
    let mut prev_k = 1u32;
    for (k, count) in &i.segments {
        if *k <= prev_k {
            return Err(Error::Validation(format!(
                "segment classes must strictly ascend; {k} after {prev_k}"
            )));
        }
        prev_k = *k;
        if count.is_zero() {
            return Err(Error::Validation(format!("segment k={k} has count 0")));
        }
        let cap = per_class_capacity(*k, i.d);
        if !i.multiplier.is_multiple_of(&cap) {
            return Err(Error::Validation(format!(
                "multiplier not divisible by the class-{k} capacity"
            )));
        }
        let (nu, rem) = count.div_rem(&base);
        if !rem.is_zero() || nu.is_zero() || nu > cap {
            return Err(Error::Validation(format!(
                "segment k={k}: count {count} is not 2*M*mult*nu for 1 <= nu <= (k-1)^d"
            )));
        }
    }
    Ok(())
}
