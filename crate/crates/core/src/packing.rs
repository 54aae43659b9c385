//! ε-packings of the unit bin: placement of coded hypercubes, exact
//! disjointness validation, per-class counts and the packing weight.
//!
//! Materialized packings carry every placed cube and can be validated
//! geometrically; counted packings carry per-class counts backed by the code
//! family's size certificates, which is the only faithful way to handle
//! families whose codes have astronomically many words. All large-scale
//! claims flow through exact counting certificates, with the geometry
//! verified exhaustively at small scale.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::codes::{self, BuildOptions, CodeFamily, Word};
use crate::geometry::{self, AxisBox, Interval};
use crate::natlog::{self, ln_enclosure};
use crate::rat::Rat;
use crate::{Caps, Error, Result};

/// A class-`k` cube placed at the grid cell named by its word; the occupied
/// open box is derived at construction and cached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedCube {
    pub k: u32,
    pub word: Word,
    pub region: AxisBox,
}

/// The largest admissible epsilon at dimension `d`, namely `1/d^2`.
pub fn default_eps(d: usize) -> Rat {
    let d = num_bigint::BigInt::from(d);
    Rat::new(num_bigint::BigInt::from(1), &d * &d).expect("d >= 1")
}

/// Places the class-`k` cube named by `word`: the box
/// `I(w_1) x ... x I(w_d)`, always inside the unit bin.
pub fn place(k: u32, word: &Word, eps: &Rat) -> Result<PlacedCube> {
    if word.k != k {
        return Err(Error::InvalidArgument(format!(
            "word of class {} placed as class {k}",
            word.k
        )));
    }
    if word.d() == 0 {
        return Err(Error::InvalidArgument("empty word".into()));
    }
    let dims: Vec<Interval> = word
        .letters
        .iter()
        .map(|&v| geometry::interval_of(k, v, eps))
        .collect::<Result<_>>()?;
    let region = AxisBox::new(dims)?;
    debug_assert!(geometry::box_in_unit(&region));
    Ok(PlacedCube {
        k,
        word: word.clone(),
        region,
    })
}

/// Placement restricted to letters below `k`, valid up to the homogeneous
/// boundary `eps = 1/(k-1)` where the outer cubes touch the bin walls.
fn place_boundary(k: u32, word: &Word, eps: &Rat) -> Result<PlacedCube> {
    let dims: Vec<Interval> = word
        .letters
        .iter()
        .map(|&v| geometry::interval_of_boundary(k, v, eps))
        .collect::<Result<_>>()?;
    let region = AxisBox::new(dims)?;
    Ok(PlacedCube {
        k,
        word: word.clone(),
        region,
    })
}

/// Per-class cube count, exact or a certified lower bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCount {
    pub count: BigUint,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PackingMode {
    Materialized(Vec<PlacedCube>),
    Counted(BTreeMap<u32, ClassCount>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsilonPacking {
    pub d: usize,
    pub eps: Rat,
    pub mode: PackingMode,
    pub provenance: Option<String>,
}

impl EpsilonPacking {
    pub fn cubes(&self) -> Option<&[PlacedCube]> {
        match &self.mode {
            PackingMode::Materialized(cubes) => Some(cubes),
            PackingMode::Counted(_) => None,
        }
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self.mode, PackingMode::Materialized(_))
    }

    /// Per-class counts; derived by counting cubes when materialized.
    pub fn nu(&self) -> BTreeMap<u32, ClassCount> {
        match &self.mode {
            PackingMode::Materialized(cubes) => {
                let mut nu: BTreeMap<u32, ClassCount> = BTreeMap::new();
                for c in cubes {
                    nu.entry(c.k)
                        .or_insert(ClassCount {
                            count: BigUint::zero(),
                            exact: true,
                        })
                        .count += 1u32;
                }
                nu
            }
            PackingMode::Counted(nu) => nu.clone(),
        }
    }

    /// The represented classes (those with at least one cube certified).
    pub fn classes(&self) -> Vec<u32> {
        self.nu()
            .into_iter()
            .filter(|(_, c)| !c.count.is_zero())
            .map(|(k, _)| k)
            .collect()
    }

    /// True when every per-class count is exact.
    pub fn counts_exact(&self) -> bool {
        self.nu().values().all(|c| c.exact)
    }
}

/// The homogeneous grid packing of `(k-1)^d` cubes placed at every word of
/// `[k-1]^d`. Valid for `0 < eps <= 1/(k-1)`; at the boundary the outer
/// cubes touch the bin walls but stay open-contained.
pub fn homogeneous_packing(k: u32, d: usize, eps: &Rat, caps: &Caps) -> Result<EpsilonPacking> {
    if k < 2 || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "homogeneous packing needs k >= 2 and d >= 1, got k={k}, d={d}"
        )));
    }
    let total = BigUint::from(k - 1).pow(d as u32);
    if total > BigUint::from(caps.explicit_words) {
        return Err(Error::CapExceeded {
            what: "explicit cubes",
            needed: total.to_string(),
            cap: caps.explicit_words.to_string(),
        });
    }
    let mut cubes = Vec::new();
    let mut letters = vec![1u32; d];
    loop {
        let word = Word::new(k, letters.clone())?;
        cubes.push(place_boundary(k, &word, eps)?);
        // odometer over [k-1]^d, most significant first
        let mut i = d;
        loop {
            if i == 0 {
                return Ok(EpsilonPacking {
                    d,
                    eps: eps.clone(),
                    mode: PackingMode::Materialized(cubes),
                    provenance: Some(format!("homogeneous(k={k}, d={d})")),
                });
            }
            i -= 1;
            if letters[i] < k - 1 {
                letters[i] += 1;
                break;
            }
            letters[i] = 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssembleMode {
    Materialized,
    Counted,
}

/// Assembles the union packing of a separated family: every code's words
/// placed (materialized, explicit codes only) or the per-class counts taken
/// from the size certificates (counted).
pub fn assemble(
    family: &CodeFamily,
    eps: &Rat,
    mode: AssembleMode,
    caps: &Caps,
) -> Result<EpsilonPacking> {
    let s_sq = Rat::from_int(family.s as i64).pow(2);
    if !eps.is_positive() || eps * &s_sq > Rat::one() {
        return Err(Error::InvalidEps {
            eps: eps.to_string(),
            why: format!("must lie in (0, 1/{}^2] for S = {}", family.s, family.s),
        });
    }
    let provenance = Some(match family.kind {
        codes::FamilyKind::Warmup => format!("warmup(d={})", family.d),
        codes::FamilyKind::Probabilistic => {
            format!("probabilistic(d={}, seed={})", family.d, family.seed)
        }
    });

    match mode {
        AssembleMode::Materialized => {
            let mut total = BigUint::zero();
            for code in &family.codes {
                match code.words() {
                    Some(ws) => total += ws.len(),
                    None => {
                        return Err(Error::InvalidArgument(format!(
                            "cannot materialize implicit code k={}",
                            code.k
                        )))
                    }
                }
            }
            if total > BigUint::from(caps.explicit_words) {
                return Err(Error::CapExceeded {
                    what: "explicit cubes",
                    needed: total.to_string(),
                    cap: caps.explicit_words.to_string(),
                });
            }
            let mut cubes = Vec::new();
            for code in &family.codes {
                for w in code.words().unwrap() {
                    cubes.push(place(code.k, w, eps)?);
                }
            }
            Ok(EpsilonPacking {
                d: family.d,
                eps: eps.clone(),
                mode: PackingMode::Materialized(cubes),
                provenance,
            })
        }
        AssembleMode::Counted => {
            let mut nu = BTreeMap::new();
            for code in &family.codes {
                let count = code.size.integer_bound();
                if count.is_zero() {
                    continue; // class not certifiably represented
                }
                nu.insert(
                    code.k,
                    ClassCount {
                        count,
                        exact: code.size.is_exact(),
                    },
                );
            }
            Ok(EpsilonPacking {
                d: family.d,
                eps: eps.clone(),
                mode: PackingMode::Counted(nu),
                provenance,
            })
        }
    }
}

/// Result of the exact geometric validation of a materialized packing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub total: usize,
    /// Indices of cubes not contained in the unit bin.
    pub out_of_unit: Vec<usize>,
    /// Overlapping index pairs, lexicographic.
    pub overlaps: Vec<(usize, usize)>,
    /// Indices of cubes whose side differs from `(1+eps)/k`.
    pub side_mismatches: Vec<usize>,
}

impl ValidationReport {
    pub fn valid(&self) -> bool {
        self.out_of_unit.is_empty() && self.overlaps.is_empty() && self.side_mismatches.is_empty()
    }
}

/// Exhaustive O(n^2) validation: pairwise open-box disjointness, unit
/// containment, and the per-class side length `(1+eps)/k`. This is the
/// trusted path; `overlapping_pairs_sweep` cross-checks it.
pub fn validate(p: &EpsilonPacking) -> Result<ValidationReport> {
    let cubes = p.cubes().ok_or_else(|| {
        Error::InvalidArgument("counted packings cannot be validated geometrically".into())
    })?;
    let mut report = ValidationReport {
        total: cubes.len(),
        out_of_unit: vec![],
        overlaps: vec![],
        side_mismatches: vec![],
    };
    for (i, c) in cubes.iter().enumerate() {
        if c.region.d() != p.d {
            return Err(Error::DimensionMismatch {
                left: p.d,
                right: c.region.d(),
            });
        }
        if !geometry::box_in_unit(&c.region) {
            report.out_of_unit.push(i);
        }
        let side = geometry::side_length(c.k, &p.eps);
        if c.region.dims().iter().any(|iv| iv.length() != side) {
            report.side_mismatches.push(i);
        }
    }
    for i in 0..cubes.len() {
        for j in i + 1..cubes.len() {
            if geometry::boxes_overlap(&cubes[i].region, &cubes[j].region)? {
                report.overlaps.push((i, j));
            }
        }
    }
    Ok(report)
}

/// Independent overlap detection by a sweep along the first axis; used as a
/// cross-check of the exhaustive validator, never as the authority.
pub fn overlapping_pairs_sweep(cubes: &[PlacedCube]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by(|&a, &b| {
        cubes[a].region.dims()[0]
            .lo()
            .cmp(cubes[b].region.dims()[0].lo())
            .then(a.cmp(&b))
    });
    let mut active: Vec<usize> = vec![];
    let mut pairs = vec![];
    for &cur in &order {
        let cur_lo = cubes[cur].region.dims()[0].lo();
        active.retain(|&a| cubes[a].region.dims()[0].hi() > cur_lo);
        for &a in &active {
            let rest_overlap = cubes[a]
                .region
                .dims()
                .iter()
                .zip(cubes[cur].region.dims())
                .skip(1)
                .all(|(x, y)| geometry::intervals_overlap(x, y));
            if rest_overlap {
                pairs.push((a.min(cur), a.max(cur)));
            }
        }
        active.push(cur);
    }
    pairs.sort();
    pairs
}

/// The packing weight with its exactness flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightCertificate {
    pub value: Rat,
    pub exact: bool,
}

/// Exact rational weight: the sum over classes of `nu_k / (k-1)^d`. For
/// counted packings with lower-bound certificates the result is the
/// certified lower bound on the weight, flagged as such.
pub fn weight(p: &EpsilonPacking) -> WeightCertificate {
    let mut value = Rat::zero();
    let mut exact = true;
    for (k, c) in p.nu() {
        let cap = BigUint::from(k - 1).pow(p.d as u32);
        value = value + Rat::from_biguint(&c.count) / Rat::from_biguint(&cap);
        exact &= c.exact;
    }
    WeightCertificate { value, exact }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaOutcome {
    Holds,
    FailsAtThisD,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct CentralLemmaReport {
    pub d: usize,
    pub s: u32,
    pub weight: Rat,
    pub weight_exact: bool,
    pub outcome: LemmaOutcome,
    /// Enclosure width (bits) at which the comparison was decided.
    pub precision_bits: u32,
}

/// Builds the probabilistic family and counted packing at `eps = 1/d^2`,
/// then decides `5 w ln d >= d` by outward-rounded enclosures of `ln d`,
/// doubling the precision until the comparison is unambiguous.
pub fn central_lemma_check(
    d: usize,
    seed: u64,
    opts: &BuildOptions,
    start_bits: u32,
) -> Result<CentralLemmaReport> {
    let family = codes::build_separated_family(d, seed, opts)?;
    let eps = default_eps(d);
    let packing = assemble(&family, &eps, AssembleMode::Counted, &opts.caps)?;
    let w = weight(&packing);
    let report = |outcome, bits| CentralLemmaReport {
        d,
        s: family.s,
        weight: w.value.clone(),
        weight_exact: w.exact,
        outcome,
        precision_bits: bits,
    };

    let target = Rat::from_int(d as i64);
    let five_w = Rat::from_int(5) * &w.value;
    if !five_w.is_positive() {
        return Ok(report(LemmaOutcome::FailsAtThisD, 0));
    }
    let mut bits = start_bits.max(8);
    loop {
        let (lo, hi) = ln_enclosure(d as u64, bits);
        if &five_w * &lo >= target {
            return Ok(report(LemmaOutcome::Holds, bits));
        }
        if &five_w * &hi < target {
            return Ok(report(LemmaOutcome::FailsAtThisD, bits));
        }
        if bits >= natlog::MAX_BITS {
            return Ok(report(LemmaOutcome::Inconclusive, bits));
        }
        bits *= 2;
    }
}

// ---------------------------------------------------------------------------
// Wire format and verification.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PackingJson {
    d: usize,
    eps: Rat,
    mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    cubes: Option<Vec<CubeJson>>,
    nu: BTreeMap<u32, String>,
    weight: Rat,
    #[serde(rename = "weightKind")]
    weight_kind: String,
}

#[derive(Serialize, Deserialize)]
struct CubeJson {
    k: u32,
    word: Vec<u32>,
}

impl EpsilonPacking {
    pub fn to_json(&self) -> String {
        let w = weight(self);
        let nu = self
            .nu()
            .into_iter()
            .map(|(k, c)| (k, c.count.to_string()))
            .collect();
        let dto = PackingJson {
            d: self.d,
            eps: self.eps.clone(),
            mode: if self.is_materialized() {
                "materialized"
            } else {
                "counted"
            }
            .into(),
            cubes: self.cubes().map(|cs| {
                cs.iter()
                    .map(|c| CubeJson {
                        k: c.k,
                        word: c.word.letters.clone(),
                    })
                    .collect()
            }),
            nu,
            weight: w.value,
            weight_kind: if w.exact { "exact" } else { "lowerBound" }.into(),
        };
        let mut s = serde_json::to_string_pretty(&dto).expect("packing serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<EpsilonPacking> {
        let dto: PackingJson = serde_json::from_str(text)?;
        let exact = match dto.weight_kind.as_str() {
            "exact" => true,
            "lowerBound" => false,
            other => return Err(Error::Parse(format!("unknown weightKind {other:?}"))),
        };
        let mode = match dto.mode.as_str() {
            "materialized" => {
                let cubes_json = dto
                    .cubes
                    .as_ref()
                    .ok_or_else(|| Error::Parse("materialized packing lacks cubes".into()))?;
                let mut cubes = Vec::with_capacity(cubes_json.len());
                for cj in cubes_json {
                    if cj.word.len() != dto.d {
                        return Err(Error::Parse(format!(
                            "cube word of length {} in dimension {}",
                            cj.word.len(),
                            dto.d
                        )));
                    }
                    let word = Word::new(cj.k, cj.word.clone())?;
                    cubes.push(place(cj.k, &word, &dto.eps)?);
                }
                PackingMode::Materialized(cubes)
            }
            "counted" => {
                let mut nu = BTreeMap::new();
                for (k, s) in &dto.nu {
                    let count = BigUint::parse_bytes(s.as_bytes(), 10)
                        .ok_or_else(|| Error::Parse(format!("bad count {s:?}")))?;
                    if *k < 2 {
                        return Err(Error::Parse(format!("class {k} below 2")));
                    }
                    if count > BigUint::from(*k - 1).pow(dto.d as u32) {
                        return Err(Error::Parse(format!(
                            "class {k}: count {count} exceeds the per-bin capacity"
                        )));
                    }
                    nu.insert(*k, ClassCount { count, exact });
                }
                PackingMode::Counted(nu)
            }
            other => return Err(Error::Parse(format!("unknown packing mode {other:?}"))),
        };
        let p = EpsilonPacking {
            d: dto.d,
            eps: dto.eps,
            mode,
            provenance: None,
        };
        // stored counts and weight must agree with the reconstruction
        let nu = p.nu();
        for (k, s) in &dto.nu {
            let stored = BigUint::parse_bytes(s.as_bytes(), 10).unwrap();
            let derived = nu.get(k).map(|c| c.count.clone()).unwrap_or_default();
            if stored != derived {
                return Err(Error::Parse(format!(
                    "class {k}: stored count {stored} != derived {derived}"
                )));
            }
        }
        let w = weight(&p);
        if w.value != dto.weight {
            return Err(Error::Parse(format!(
                "stored weight {} != recomputed {}",
                dto.weight, w.value
            )));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{warmup_family, SizeCertificate};
    use num_traits::One;

    fn caps() -> Caps {
        Caps::default()
    }

    fn rat(p: i64, q: i64) -> Rat {
        Rat::ratio(p, q)
    }

    #[test]
    fn place_examples() {
        let e = rat(1, 9);
        let cube = place(3, &Word::new(3, vec![1, 3, 2]).unwrap(), &e).unwrap();
        let dims = cube.region.dims();
        assert_eq!((dims[0].lo(), dims[0].hi()), (&rat(0, 1), &rat(10, 27)));
        assert_eq!((dims[1].lo(), dims[1].hi()), (&rat(17, 27), &rat(1, 1)));
        assert_eq!((dims[2].lo(), dims[2].hi()), (&rat(10, 27), &rat(20, 27)));

        let e = rat(1, 5);
        let cube = place(2, &Word::new(2, vec![1, 1, 1, 1]).unwrap(), &e).unwrap();
        for iv in cube.region.dims() {
            assert_eq!((iv.lo(), iv.hi()), (&rat(0, 1), &rat(3, 5)));
        }

        let e = rat(1, 4);
        let cube = place(2, &Word::new(2, vec![2, 2]).unwrap(), &e).unwrap();
        for iv in cube.region.dims() {
            assert_eq!((iv.lo(), iv.hi()), (&rat(3, 8), &rat(1, 1)));
        }
    }

    #[test]
    fn homogeneous_counts_and_validity() {
        let p = homogeneous_packing(2, 3, &rat(1, 4), &caps()).unwrap();
        assert_eq!(p.cubes().unwrap().len(), 1);
        assert!(validate(&p).unwrap().valid());

        let p = homogeneous_packing(3, 2, &rat(1, 9), &caps()).unwrap();
        assert_eq!(p.cubes().unwrap().len(), 4);
        assert!(validate(&p).unwrap().valid());

        // boundary eps = 1/(k-1): outer cubes touch the walls, still valid
        let p = homogeneous_packing(5, 2, &rat(1, 4), &caps()).unwrap();
        assert_eq!(p.cubes().unwrap().len(), 16);
        let report = validate(&p).unwrap();
        assert!(report.valid(), "{report:?}");
        let touches_wall = p
            .cubes()
            .unwrap()
            .iter()
            .any(|c| c.region.dims().iter().any(|iv| iv.hi() == &Rat::one()));
        assert!(touches_wall);

        // beyond the boundary is rejected
        assert!(homogeneous_packing(5, 2, &rat(1, 3), &caps()).is_err());
        let tight = Caps {
            explicit_words: 10,
            ..Caps::default()
        };
        assert!(matches!(
            homogeneous_packing(5, 2, &rat(1, 4), &tight),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn homogeneous_weight_is_one() {
        for k in 2..=6u32 {
            for d in 1..=5usize {
                if BigUint::from(k - 1).pow(d as u32) > BigUint::from(3200u32) {
                    continue;
                }
                let eps = Rat::ratio(1, (k as i64) * (k as i64));
                let p = homogeneous_packing(k, d, &eps, &caps()).unwrap();
                let w = weight(&p);
                assert!(w.exact);
                assert_eq!(w.value, Rat::one(), "k={k}, d={d}");
            }
        }
    }

    #[test]
    fn assemble_warmup_examples() {
        let fam = warmup_family(3, &caps()).unwrap();
        let p = assemble(&fam, &rat(1, 9), AssembleMode::Materialized, &caps()).unwrap();
        assert_eq!(p.cubes().unwrap().len(), 5);
        assert!(validate(&p).unwrap().valid());
        let w = weight(&p);
        assert_eq!(w.value, rat(3, 2));
        assert!(w.exact);

        // eps above S^-2 = 1/9 is rejected
        assert!(matches!(
            assemble(&fam, &rat(1, 8), AssembleMode::Materialized, &caps()),
            Err(Error::InvalidEps { .. })
        ));
        // the boundary itself is fine
        assert!(assemble(&fam, &rat(1, 9), AssembleMode::Counted, &caps()).is_ok());
    }

    #[test]
    fn warmup_weights_are_harmonic_sums() {
        for d in 2..=9usize {
            let fam = warmup_family(d, &caps()).unwrap();
            let p = assemble(&fam, &default_eps(d), AssembleMode::Counted, &caps()).unwrap();
            let mut expect = Rat::zero();
            for k in 2..=d as i64 {
                expect = expect + rat(1, k - 1);
            }
            let w = weight(&p);
            assert_eq!(w.value, expect, "d={d}");
            assert!(w.exact);
        }
        let fam = warmup_family(4, &caps()).unwrap();
        let p = assemble(&fam, &default_eps(4), AssembleMode::Counted, &caps()).unwrap();
        assert_eq!(weight(&p).value, rat(11, 6));
        let fam = warmup_family(8, &caps()).unwrap();
        let p = assemble(&fam, &default_eps(8), AssembleMode::Counted, &caps()).unwrap();
        assert_eq!(weight(&p).value, rat(363, 140));
    }

    #[test]
    fn materialized_and_counted_assemblies_agree() {
        for d in 2..=5usize {
            let fam = warmup_family(d, &caps()).unwrap();
            let eps = default_eps(d);
            let m = assemble(&fam, &eps, AssembleMode::Materialized, &caps()).unwrap();
            let c = assemble(&fam, &eps, AssembleMode::Counted, &caps()).unwrap();
            assert_eq!(m.nu(), c.nu(), "d={d}");
            assert_eq!(weight(&m), weight(&c));
        }
    }

    #[test]
    fn validator_reports_the_exceptional_pair() {
        let e = rat(1, 4);
        let cubes = vec![
            place(2, &Word::new(2, vec![1, 1]).unwrap(), &e).unwrap(),
            place(2, &Word::new(2, vec![1, 2]).unwrap(), &e).unwrap(),
            place(2, &Word::new(2, vec![2, 2]).unwrap(), &e).unwrap(),
        ];
        let p = EpsilonPacking {
            d: 2,
            eps: e,
            mode: PackingMode::Materialized(cubes),
            provenance: None,
        };
        let report = validate(&p).unwrap();
        // letters {1,2} = {k-1,k} collide in every coordinate where they meet
        assert_eq!(report.overlaps, vec![(0, 1), (0, 2), (1, 2)]);
        assert!(report.out_of_unit.is_empty());
        assert!(report.side_mismatches.is_empty());
        assert!(!report.valid());

        assert_eq!(
            overlapping_pairs_sweep(p.cubes().unwrap()),
            report.overlaps
        );
    }

    #[test]
    fn single_cube_is_valid() {
        let e = rat(1, 9);
        let cube = place(3, &Word::new(3, vec![2, 2]).unwrap(), &e).unwrap();
        let p = EpsilonPacking {
            d: 2,
            eps: e,
            mode: PackingMode::Materialized(vec![cube]),
            provenance: None,
        };
        assert!(validate(&p).unwrap().valid());
    }

    #[test]
    fn sweep_agrees_with_bruteforce_on_warmup() {
        for d in 2..=5usize {
            let fam = warmup_family(d, &caps()).unwrap();
            let p = assemble(&fam, &default_eps(d), AssembleMode::Materialized, &caps()).unwrap();
            let report = validate(&p).unwrap();
            assert_eq!(
                overlapping_pairs_sweep(p.cubes().unwrap()),
                report.overlaps
            );
        }
    }

    #[test]
    fn counted_lower_bounds_flag_the_weight() {
        let mut nu = BTreeMap::new();
        nu.insert(
            2,
            ClassCount {
                count: BigUint::one(),
                exact: true,
            },
        );
        nu.insert(
            3,
            ClassCount {
                count: BigUint::from(6u32),
                exact: false,
            },
        );
        let p = EpsilonPacking {
            d: 3,
            eps: rat(1, 9),
            mode: PackingMode::Counted(nu),
            provenance: None,
        };
        let w = weight(&p);
        assert_eq!(w.value, Rat::one() + rat(6, 8));
        assert!(!w.exact);
    }

    #[test]
    fn central_lemma_small_d() {
        // d=8 clamps to S=2 and the single class already gives weight 1,
        // beating 8 / (5 ln 8)
        let r = central_lemma_check(8, 1, &BuildOptions::default(), 64).unwrap();
        assert_eq!(r.s, 2);
        assert_eq!(r.weight, Rat::one());
        assert_eq!(r.outcome, LemmaOutcome::Holds);

        // d=100: S=5 yet the weight certificate stays below 100 / (5 ln 100):
        // reported, never asserted
        let r = central_lemma_check(100, 42, &BuildOptions::default(), 64).unwrap();
        assert_eq!(r.s, 5);
        assert!(r.weight < Rat::from_int(4));
        assert_eq!(r.outcome, LemmaOutcome::FailsAtThisD);
    }

    #[test]
    fn packing_json_round_trip() {
        let fam = warmup_family(3, &caps()).unwrap();
        let p = assemble(&fam, &rat(1, 9), AssembleMode::Materialized, &caps()).unwrap();
        let js = p.to_json();
        let back = EpsilonPacking::from_json(&js).unwrap();
        assert_eq!(back.nu(), p.nu());
        assert_eq!(back.cubes().unwrap().len(), 5);
        assert_eq!(back.to_json(), js);

        let c = assemble(&fam, &rat(1, 9), AssembleMode::Counted, &caps()).unwrap();
        let js = c.to_json();
        let back = EpsilonPacking::from_json(&js).unwrap();
        assert_eq!(back.nu(), c.nu());
        assert!(js.contains("\"weight\": \"3/2\""));

        // tampered weight is rejected on load
        let bad = js.replace("\"3/2\"", "\"2/1\"");
        assert!(EpsilonPacking::from_json(&bad).is_err());
    }

    #[test]
    fn empty_family_gives_empty_packing() {
        let mut fam = warmup_family(2, &caps()).unwrap();
        fam.codes[0].repr = crate::codes::CodeRepr::Explicit(vec![]);
        fam.codes[0].size = SizeCertificate::Exact(BigUint::zero());
        let p = assemble(&fam, &rat(1, 4), AssembleMode::Counted, &caps()).unwrap();
        assert!(p.classes().is_empty());
        assert_eq!(weight(&p).value, Rat::zero());
        let m = assemble(&fam, &rat(1, 4), AssembleMode::Materialized, &caps()).unwrap();
        assert_eq!(m.cubes().unwrap().len(), 0);
        assert!(validate(&m).unwrap().valid());
    }
}
