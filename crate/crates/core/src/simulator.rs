//! Bounded-space online simulation over instance streams.
//!
//! A run feeds segments in order, either through exact big-integer
//! shortcuts (counted mode) or one item at a time (per-item mode, below the
//! expansion cap). The harness asserts the bounded-space contract
//! `open bins <= M` after every event, and reports exact totals and the
//! performance ratio against the offline certificate.
//!
//! `ClassNextFit` is the reference algorithm: one open bin per size class,
//! grid placement in lexicographic word order, least-recently-used class
//! eviction when the bin budget is hit. On single-class segments every
//! bounded-space algorithm degenerates to this behaviour up to `M` bins per
//! segment, which is exactly what the adversarial stream exploits.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::adversary::{self, InstanceStream};
use crate::codes::Word;
use crate::packing::{self, EpsilonPacking, PackingMode, PlacedCube};
use crate::rat::Rat;
use crate::{Caps, Error, Result};

/// Online bounded-space algorithm: processes items (or whole single-class
/// segments via exact arithmetic) and never keeps more than `declared_m`
/// bins open.
pub trait BoundedSpace {
    fn name(&self) -> &str;
    fn declared_m(&self) -> usize;
    /// Whether whole segments can be processed by exact arithmetic.
    fn supports_counted(&self) -> bool {
        true
    }
    /// Processes `count` identical class-`k` items; returns bins opened.
    fn on_segment(&mut self, k: u32, count: &BigUint) -> Result<BigUint>;
    /// Processes one class-`k` item; returns bins opened (0 or 1).
    fn on_item(&mut self, k: u32) -> Result<u32>;
    fn open_bins(&self) -> usize;
    /// End of stream; validates any remaining open bins.
    fn finish(&mut self) -> Result<()>;
}

struct OpenBin {
    remaining: BigUint,
    last_touch: u64,
    cursor: u64,
    cubes: Vec<PlacedCube>,
}

/// One open bin per size class, LRU class eviction, grid placement.
pub struct ClassNextFit {
    m: usize,
    d: usize,
    eps: Rat,
    materialize: bool,
    bins: BTreeMap<u32, OpenBin>,
    tick: u64,
}

impl ClassNextFit {
    pub fn new(m: usize, d: usize, eps: Rat, materialize: bool) -> Result<ClassNextFit> {
        if m == 0 {
            return Err(Error::InvalidArgument(
                "bounded-space algorithms need M >= 1".into(),
            ));
        }
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        Ok(ClassNextFit {
            m,
            d,
            eps,
            materialize,
            bins: BTreeMap::new(),
            tick: 0,
        })
    }

    fn capacity(&self, k: u32) -> BigUint {
        adversary::per_class_capacity(k, self.d)
    }

    /// Grid cell for the `cursor`-th item: the base-(k-1) digits of the
    /// cursor, most significant first, shifted to letters in `[1, k-1]`.
    fn word_at(&self, k: u32, cursor: u64) -> Word {
        let base = (k - 1) as u64;
        let mut letters = vec![1u32; self.d];
        let mut c = cursor;
        for i in (0..self.d).rev() {
            letters[i] = (c % base) as u32 + 1;
            c /= base;
            if c == 0 {
                break;
            }
        }
        Word { k, letters }
    }

    fn place_into(&self, bin: &mut OpenBin, k: u32) -> Result<()> {
        if self.materialize {
            let word = self.word_at(k, bin.cursor);
            bin.cubes.push(packing::place(k, &word, &self.eps)?);
        }
        bin.cursor += 1;
        Ok(())
    }

    fn close_bin(&self, bin: OpenBin) -> Result<()> {
        if self.materialize && !bin.cubes.is_empty() {
            let p = EpsilonPacking {
                d: self.d,
                eps: self.eps.clone(),
                mode: PackingMode::Materialized(bin.cubes),
                provenance: None,
            };
            let report = packing::validate(&p)?;
            if !report.valid() {
                return Err(Error::Validation(format!(
                    "closed bin fails geometric validation: {report:?}"
                )));
            }
        }
        Ok(())
    }

    fn evict_lru(&mut self) -> Result<()> {
        let victim = self
            .bins
            .iter()
            .min_by_key(|(k, b)| (b.last_touch, **k))
            .map(|(k, _)| *k)
            .expect("eviction requires an open bin");
        let bin = self.bins.remove(&victim).unwrap();
        self.close_bin(bin)
    }
}

impl BoundedSpace for ClassNextFit {
    fn name(&self) -> &str {
        "ClassNextFit"
    }

    fn declared_m(&self) -> usize {
        self.m
    }

    fn on_segment(&mut self, k: u32, count: &BigUint) -> Result<BigUint> {
        self.tick += 1;
        let tick = self.tick;
        let cap = self.capacity(k);
        let mut c = count.clone();
        if let Some(bin) = self.bins.get_mut(&k) {
            bin.last_touch = tick;
            if c < bin.remaining {
                bin.remaining -= c;
                return Ok(BigUint::zero());
            }
            c -= std::mem::take(&mut bin.remaining);
            let bin = self.bins.remove(&k).unwrap();
            self.close_bin(bin)?;
            if c.is_zero() {
                return Ok(BigUint::zero());
            }
        }
        // c > 0 items left and no class-k bin: the churn occupies one slot
        if self.bins.len() == self.m {
            self.evict_lru()?;
        }
        let (full, rem) = c.div_rem(&cap);
        let mut opened = full;
        if !rem.is_zero() {
            opened += 1u32;
            self.bins.insert(
                k,
                OpenBin {
                    remaining: &cap - &rem,
                    last_touch: tick,
                    cursor: rem.to_u64().unwrap_or(u64::MAX),
                    cubes: vec![],
                },
            );
        }
        Ok(opened)
    }

    fn on_item(&mut self, k: u32) -> Result<u32> {
        self.tick += 1;
        let tick = self.tick;
        if self.bins.contains_key(&k) {
            let mut bin = self.bins.remove(&k).unwrap();
            bin.last_touch = tick;
            self.place_into(&mut bin, k)?;
            bin.remaining -= 1u32;
            if bin.remaining.is_zero() {
                self.close_bin(bin)?;
            } else {
                self.bins.insert(k, bin);
            }
            return Ok(0);
        }
        if self.bins.len() == self.m {
            self.evict_lru()?;
        }
        let mut bin = OpenBin {
            remaining: self.capacity(k),
            last_touch: tick,
            cursor: 0,
            cubes: vec![],
        };
        self.place_into(&mut bin, k)?;
        bin.remaining -= 1u32;
        if bin.remaining.is_zero() {
            self.close_bin(bin)?;
        } else {
            self.bins.insert(k, bin);
        }
        Ok(1)
    }

    fn open_bins(&self) -> usize {
        self.bins.len()
    }

    fn finish(&mut self) -> Result<()> {
        let bins = std::mem::take(&mut self.bins);
        for (_, bin) in bins {
            self.close_bin(bin)?;
        }
        Ok(())
    }
}

/// Instantiates a registered algorithm. Identifiers are case-insensitive
/// and ignore `-`/`_`.
pub fn make_algorithm(
    id: &str,
    m: usize,
    d: usize,
    eps: &Rat,
    materialize: bool,
) -> Result<Box<dyn BoundedSpace>> {
    let norm: String = id
        .chars()
        .filter(|c| *c != '-' && *c != '_')
        .collect::<String>()
        .to_ascii_lowercase();
    match norm.as_str() {
        "classnextfit" => Ok(Box::new(ClassNextFit::new(m, d, eps.clone(), materialize)?)),
        _ => Err(Error::UnknownAlgorithm(id.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Counted,
    PerItem { materialize: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentReport {
    pub k: u32,
    pub bins_opened: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimReport {
    pub alg: String,
    pub m: usize,
    pub per_segment: Vec<SegmentReport>,
    pub total_bins: BigUint,
    pub offline_bound: BigUint,
    pub universal_lb: BigUint,
    pub ratio: Rat,
}

/// Runs a registered algorithm over the stream and reports exact totals.
pub fn run(
    i: &InstanceStream,
    alg_id: &str,
    m_override: Option<usize>,
    mode: SimMode,
    caps: &Caps,
) -> Result<SimReport> {
    let m = match m_override {
        Some(m) => m,
        None => i
            .m
            .to_usize()
            .ok_or_else(|| Error::InvalidArgument("instance M does not fit in memory".into()))?,
    };
    let materialize = matches!(
        mode,
        SimMode::PerItem {
            materialize: true
        }
    );
    let mut alg = make_algorithm(alg_id, m, i.d, &i.eps, materialize)?;
    run_with(i, alg.as_mut(), mode, caps)
}

/// Runs a caller-supplied algorithm over the stream, enforcing the
/// bounded-space contract after every event.
pub fn run_with(
    i: &InstanceStream,
    alg: &mut dyn BoundedSpace,
    mode: SimMode,
    caps: &Caps,
) -> Result<SimReport> {
    let declared = alg.declared_m();
    let counted = matches!(mode, SimMode::Counted) && alg.supports_counted();
    if !counted {
        let total = i.total_items();
        if total > BigUint::from(caps.per_item) {
            return Err(Error::CapExceeded {
                what: "per-item expansion",
                needed: total.to_string(),
                cap: caps.per_item.to_string(),
            });
        }
    }

    let mut per_segment = Vec::with_capacity(i.segments.len());
    let mut total_bins = BigUint::zero();
    let contract = |alg: &dyn BoundedSpace| -> Result<()> {
        let open = alg.open_bins();
        if open > declared {
            return Err(Error::Validation(format!(
                "bounded-space contract violated: {open} open bins > M = {declared}"
            )));
        }
        Ok(())
    };

    for (k, count) in &i.segments {
        let opened = if counted {
            let o = alg.on_segment(*k, count)?;
            contract(alg)?;
            o
        } else {
            let n = count.to_u64().expect("cap enforced above");
            let mut o = BigUint::zero();
            for _ in 0..n {
                o += alg.on_item(*k)?;
                contract(alg)?;
            }
            o
        };
        total_bins += &opened;
        per_segment.push(SegmentReport {
            k: *k,
            bins_opened: opened,
        });
    }
    alg.finish()?;

    let offline = adversary::offline_bound(i, None, caps)?.bin_count;
    let universal = adversary::universal_lower_bound(i);
    let ratio = Rat::from_biguint(&total_bins) / Rat::from_biguint(&offline);
    Ok(SimReport {
        alg: alg.name().to_string(),
        m: declared,
        per_segment,
        total_bins,
        offline_bound: offline,
        universal_lb: universal,
        ratio,
    })
}

/// Both checks of a finished run against its source packing: the universal
/// half-weight bound, and exact weight attainment (the reference algorithm
/// on divisible streams).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioCheck {
    pub ratio: Rat,
    pub weight: Rat,
    pub ge_half_weight: bool,
    pub equals_weight: bool,
}

pub fn ratio_check(report: &SimReport, p: &EpsilonPacking) -> RatioCheck {
    let weight = packing::weight(p).value;
    let half = &weight / &Rat::from_int(2);
    RatioCheck {
        ge_half_weight: report.ratio >= half,
        equals_weight: report.ratio == weight,
        ratio: report.ratio.clone(),
        weight,
    }
}

// ---------------------------------------------------------------------------
// Wire format.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SimReportJson {
    alg: String,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "totalBins")]
    total_bins: String,
    #[serde(rename = "offlineBound")]
    offline_bound: String,
    #[serde(rename = "universalLB")]
    universal_lb: String,
    ratio: Rat,
    #[serde(rename = "ratioDecimal")]
    ratio_decimal: String,
    #[serde(rename = "perSegment")]
    per_segment: Vec<SegmentJson>,
}

#[derive(Serialize, Deserialize)]
struct SegmentJson {
    k: u32,
    #[serde(rename = "binsOpened")]
    bins_opened: String,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        let dto = SimReportJson {
            alg: self.alg.clone(),
            m: self.m,
            total_bins: self.total_bins.to_string(),
            offline_bound: self.offline_bound.to_string(),
            universal_lb: self.universal_lb.to_string(),
            ratio: self.ratio.clone(),
            ratio_decimal: self.ratio.decimal(12),
            per_segment: self
                .per_segment
                .iter()
                .map(|s| SegmentJson {
                    k: s.k,
                    bins_opened: s.bins_opened.to_string(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&dto).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<SimReport> {
        let dto: SimReportJson = serde_json::from_str(text)?;
        let parse = |s: &str| {
            BigUint::parse_bytes(s.as_bytes(), 10)
                .ok_or_else(|| Error::Parse(format!("bad big integer {s:?}")))
        };
        let total_bins = parse(&dto.total_bins)?;
        let offline_bound = parse(&dto.offline_bound)?;
        let universal_lb = parse(&dto.universal_lb)?;
        let ratio = Rat::from_biguint(&total_bins) / Rat::from_biguint(&offline_bound);
        if ratio != dto.ratio {
            return Err(Error::Parse(format!(
                "stored ratio {} != recomputed {ratio}",
                dto.ratio
            )));
        }
        if dto.ratio_decimal != ratio.decimal(12) {
            return Err(Error::Parse("ratio decimal rendering mismatch".into()));
        }
        let mut per_segment = Vec::with_capacity(dto.per_segment.len());
        for s in &dto.per_segment {
            per_segment.push(SegmentReport {
                k: s.k,
                bins_opened: parse(&s.bins_opened)?,
            });
        }
        Ok(SimReport {
            alg: dto.alg,
            m: dto.m,
            per_segment,
            total_bins,
            offline_bound,
            universal_lb,
            ratio,
        })
    }
}
