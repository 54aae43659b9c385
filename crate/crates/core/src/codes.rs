//! Gapped codes and separated families, with exact counting certificates.
//!
//! A `k`-code is a set of `d`-letter words over `[k]`. Gapped codes give
//! same-class disjointness of the placed cubes; pairwise-separated codes give
//! cross-class disjointness. Small codes are materialized explicitly; large
//! ones are kept implicit as an index set `F` (where the alphabet is
//! `[k] \ {k-1}`) plus witness sets `J(l,k) = F_k \ F_l` on which at least
//! one letter must equal `k`. Sizes are certified exactly by
//! inclusion-exclusion when the event count permits, and by an exact rational
//! union bound otherwise.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::coordset::CoordSet;
use crate::natlog::{self, ln_enclosure};
use crate::rat::Rat;
use crate::rng::DetRng;
use crate::{Caps, Error, Result};

/// RNG stream tags, one per sampling purpose.
const STREAM_FSETS: u64 = 1;
const STREAM_SPOT: u64 = 2;

/// A `d`-letter word over the alphabet `[1, k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    pub k: u32,
    pub letters: Vec<u32>,
}

impl Word {
    pub fn new(k: u32, letters: Vec<u32>) -> Result<Word> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("class k={k} must be >= 2")));
        }
        for &v in &letters {
            if v < 1 || v > k {
                return Err(Error::LetterOutOfRange { letter: v, k });
            }
        }
        Ok(Word { k, letters })
    }

    pub fn d(&self) -> usize {
        self.letters.len()
    }

    /// 1-based letter access.
    pub fn letter(&self, i: u32) -> u32 {
        self.letters[(i - 1) as usize]
    }
}

/// Implicit code: membership is `letter in [k] \ {k-1}` on `f`,
/// `letter in [k-1]` off `f`, and for every `l` some coordinate of `j[l]`
/// carries letter `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplicitSpec {
    pub f: CoordSet,
    pub j: BTreeMap<u32, CoordSet>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeRepr {
    Explicit(Vec<Word>),
    Implicit(ImplicitSpec),
}

/// Exact or certified-lower-bound code size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SizeCertificate {
    Exact(BigUint),
    LowerBound(Rat),
}

impl SizeCertificate {
    pub fn is_exact(&self) -> bool {
        matches!(self, SizeCertificate::Exact(_))
    }

    /// Integer count implied by the certificate (counts are integers, so the
    /// ceiling of a rational lower bound is still a lower bound).
    pub fn integer_bound(&self) -> BigUint {
        match self {
            SizeCertificate::Exact(n) => n.clone(),
            SizeCertificate::LowerBound(b) => {
                if b.is_positive() {
                    b.ceil_int().to_biguint().unwrap()
                } else {
                    BigUint::zero()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Code {
    pub k: u32,
    pub d: usize,
    pub repr: CodeRepr,
    pub size: SizeCertificate,
    /// Whether `|L_k| >= (10/11)(k-1)^d` was certified at build time.
    pub certified: bool,
    /// Set when separation from some smaller class cannot be certified
    /// (an empty witness set); the code is flagged, never dropped.
    pub refusal: Option<String>,
}

impl Code {
    pub fn is_explicit(&self) -> bool {
        matches!(self.repr, CodeRepr::Explicit(_))
    }

    pub fn words(&self) -> Option<&[Word]> {
        match &self.repr {
            CodeRepr::Explicit(w) => Some(w),
            CodeRepr::Implicit(_) => None,
        }
    }

    pub fn implicit(&self) -> Option<&ImplicitSpec> {
        match &self.repr {
            CodeRepr::Implicit(s) => Some(s),
            CodeRepr::Explicit(_) => None,
        }
    }

    /// Membership test; for explicit codes a scan, for implicit codes the
    /// structural predicate.
    pub fn contains(&self, w: &Word) -> bool {
        if w.k != self.k || w.d() != self.d {
            return false;
        }
        match &self.repr {
            CodeRepr::Explicit(words) => words.contains(w),
            CodeRepr::Implicit(spec) => implicit_member(self.k, spec, w),
        }
    }
}

fn implicit_member(k: u32, spec: &ImplicitSpec, w: &Word) -> bool {
    for i in 1..=w.d() as u32 {
        let v = w.letter(i);
        if spec.f.contains(i) {
            if v == k - 1 {
                return false;
            }
        } else if v >= k {
            return false;
        }
    }
    spec.j
        .values()
        .all(|js| js.iter().any(|i| w.letter(i) == k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Warmup,
    Probabilistic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeFamily {
    pub d: usize,
    pub s: u32,
    pub kind: FamilyKind,
    pub seed: u64,
    /// `f_sets[i]` is the index set of class `k = i + 2`.
    pub f_sets: Vec<CoordSet>,
    /// Codes in ascending class order `k = 2..=s`.
    pub codes: Vec<Code>,
}

impl CodeFamily {
    pub fn code(&self, k: u32) -> Option<&Code> {
        if k < 2 || k > self.s {
            return None;
        }
        self.codes.get((k - 2) as usize)
    }

    pub fn f_of(&self, k: u32) -> Option<&CoordSet> {
        if k < 2 || k > self.s {
            return None;
        }
        self.f_sets.get((k - 2) as usize)
    }
}

/// Number of classes in the probabilistic construction:
/// `max(2, ceil(2d / (9 ln d)))`, decided through exact rational enclosures
/// of `ln d` (started at a 128-bit width, doubled until the ceiling is
/// unambiguous; a tie at an integer boundary resolves upward).
pub fn s_of(d: usize) -> u32 {
    s_of_with_bits(d, natlog::DEFAULT_SIZING_BITS)
}

pub fn s_of_with_bits(d: usize, start_bits: u32) -> u32 {
    assert!(d >= 2, "s_of requires d >= 2");
    let two_d = Rat::from_int(2 * d as i64);
    let nine = Rat::from_int(9);
    let mut bits = start_bits.max(16);
    loop {
        let (lo, hi) = ln_enclosure(d as u64, bits);
        let below = (&two_d / &(&nine * &hi)).ceil_int();
        let above = (&two_d / &(&nine * &lo)).ceil_int();
        if below == above || bits >= natlog::MAX_BITS {
            // `above == below` except at the (unreachable) precision stop,
            // where the boundary tie resolves upward
            let s = above.to_u32().expect("S fits in u32");
            return s.max(2);
        }
        bits *= 2;
    }
}

/// A generated family of index sets with its verified intersection profile.
#[derive(Debug, Clone)]
pub struct FFamily {
    /// `sets[i]` belongs to class `k = i + 2`; each has size `ceil(d/2)`.
    pub sets: Vec<CoordSet>,
    /// Verified pairwise intersection sizes, keyed by `(k, k2)`.
    pub intersections: BTreeMap<(u32, u32), usize>,
    pub max_intersection: usize,
    pub attempts: u64,
}

/// Samples `F_2..F_S` as independent uniform `ceil(d/2)`-subsets of `[1,d]`,
/// resampling the whole family until every pairwise intersection satisfies
/// the strict integer check `26 |F_k ∩ F_k2| < 7 d`. Deterministic in
/// `(d, s, seed)`.
pub fn gen_f_family(d: usize, s: u32, seed: u64, max_retries: u64) -> Result<FFamily> {
    if d < 2 || s < 2 {
        return Err(Error::InvalidArgument(format!(
            "need d >= 2 and S >= 2, got d={d}, S={s}"
        )));
    }
    let r = d.div_ceil(2);
    let count = (s - 1) as usize;
    let mut rng = DetRng::with_stream(seed, STREAM_FSETS);
    let mut worst: Option<(u32, u32, usize)> = None;

    for attempt in 1..=max_retries.max(1) {
        let sets: Vec<CoordSet> = (0..count).map(|_| rng.subset(d, r)).collect();
        let mut intersections = BTreeMap::new();
        let mut max_inter = 0usize;
        let mut bad: Option<(u32, u32, usize)> = None;
        'pairs: for a in 0..count {
            for b in a + 1..count {
                let inter = sets[a].intersection_len(&sets[b]);
                let (k, k2) = (a as u32 + 2, b as u32 + 2);
                intersections.insert((k, k2), inter);
                max_inter = max_inter.max(inter);
                if 26 * inter as u64 >= 7 * d as u64 {
                    bad = Some((k, k2, inter));
                    break 'pairs;
                }
            }
        }
        match bad {
            None => {
                return Ok(FFamily {
                    sets,
                    intersections,
                    max_intersection: max_inter,
                    attempts: attempt,
                })
            }
            Some(pair) => {
                if worst.is_none_or(|w| pair.2 > w.2) {
                    worst = Some(pair);
                }
            }
        }
    }
    let (k, k2, size) = worst.unwrap();
    Err(Error::RetriesExhausted {
        attempts: max_retries.max(1),
        k,
        k2,
        size,
        d,
    })
}

/// A code is gapped iff at every coordinate it misses letter `k-1` or letter
/// `k`. Explicit codes are scanned; implicit codes re-derive the property
/// from their alphabet structure rather than trusting a flag.
pub fn is_gapped(c: &Code) -> bool {
    match &c.repr {
        CodeRepr::Explicit(words) => {
            for i in 0..c.d {
                let mut has_km1 = false;
                let mut has_k = false;
                for w in words {
                    let v = w.letters[i];
                    if v == c.k - 1 {
                        has_km1 = true;
                    } else if v == c.k {
                        has_k = true;
                    }
                    if has_km1 && has_k {
                        return false;
                    }
                }
            }
            true
        }
        CodeRepr::Implicit(spec) => {
            // on f the alphabet misses k-1, off f it misses k
            spec.f.d() == c.d && spec.j.values().all(|js| js.is_subset_of(&spec.f))
        }
    }
}

/// Cross-class separation witness: some coordinate with `u_i < u.k` and
/// `w_i = w.k`.
pub fn words_separated(u: &Word, w: &Word) -> bool {
    u.letters
        .iter()
        .zip(&w.letters)
        .any(|(&a, &b)| a < u.k && b == w.k)
}

/// Outcome of a separation check between two codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeparationCheck {
    /// Exhaustive verification over all explicit pairs.
    Proven {
        separated: bool,
        witness: Option<(Word, Word)>,
    },
    /// Structural certificate verified, plus random member spot checks.
    Certified { spot_samples: usize },
    /// The structural certificate does not apply; a concrete violating pair
    /// is attached when one was found.
    Uncertified {
        reason: String,
        witness: Option<(Word, Word)>,
    },
}

impl SeparationCheck {
    pub fn is_separated(&self) -> bool {
        match self {
            SeparationCheck::Proven { separated, .. } => *separated,
            SeparationCheck::Certified { .. } => true,
            SeparationCheck::Uncertified { .. } => false,
        }
    }
}

/// Exhaustive explicit-pair verification stays below this many word pairs;
/// larger explicit codes fall back to the structural certificate.
const EXHAUSTIVE_PAIR_BUDGET: u64 = 4_000_000;

/// Verifies separation of `a` (smaller class) from `b` (larger class).
///
/// Explicit x explicit pairs within the pair budget are checked
/// exhaustively. Otherwise the structural certificate is verified instead —
/// every member of `b` carries letter `b.k` somewhere in a region where `a`
/// is guaranteed below `a.k` — and `samples` random member pairs are
/// additionally spot-checked.
pub fn are_separated(a: &Code, b: &Code, samples: usize) -> Result<SeparationCheck> {
    if a.d != b.d {
        return Err(Error::DimensionMismatch {
            left: a.d,
            right: b.d,
        });
    }
    if a.k >= b.k {
        return Err(Error::InvalidArgument(format!(
            "separation requires a.k < b.k, got {} and {}",
            a.k, b.k
        )));
    }

    if let (CodeRepr::Explicit(ua), CodeRepr::Explicit(wb)) = (&a.repr, &b.repr) {
        if (ua.len() as u64).saturating_mul(wb.len() as u64) > EXHAUSTIVE_PAIR_BUDGET {
            return certify_separation(a, b, samples);
        }
        for u in ua {
            for w in wb {
                if !words_separated(u, w) {
                    return Ok(SeparationCheck::Proven {
                        separated: false,
                        witness: Some((u.clone(), w.clone())),
                    });
                }
            }
        }
        return Ok(SeparationCheck::Proven {
            separated: true,
            witness: None,
        });
    }
    certify_separation(a, b, samples)
}

fn certify_separation(a: &Code, b: &Code, samples: usize) -> Result<SeparationCheck> {
    // region where every member of `a` is guaranteed to carry a letter < a.k
    let guard: CoordSet = match &a.repr {
        CodeRepr::Implicit(spec) => spec.f.complement(),
        CodeRepr::Explicit(words) => {
            let mut g = CoordSet::empty(a.d);
            for i in 1..=a.d as u32 {
                if words.iter().all(|w| w.letter(i) < a.k) {
                    g.insert(i);
                }
            }
            g
        }
    };

    match &b.repr {
        CodeRepr::Implicit(spec) => {
            let js = match spec.j.get(&a.k) {
                Some(js) => js,
                None => {
                    return Ok(SeparationCheck::Uncertified {
                        reason: format!("no witness set for class {}", a.k),
                        witness: None,
                    })
                }
            };
            if js.is_empty() {
                return Ok(SeparationCheck::Uncertified {
                    reason: format!("empty witness set J({},{})", a.k, b.k),
                    witness: None,
                });
            }
            if !js.is_subset_of(&guard) {
                return Ok(SeparationCheck::Uncertified {
                    reason: format!(
                        "witness set J({},{}) leaves the guaranteed-low region of class {}",
                        a.k, b.k, a.k
                    ),
                    witness: None,
                });
            }
        }
        CodeRepr::Explicit(words) => {
            for w in words {
                if !guard.iter().any(|i| w.letter(i) == b.k) {
                    return Ok(SeparationCheck::Uncertified {
                        reason: format!(
                            "a member of class {} has no letter {} inside the guaranteed-low \
                             region of class {}",
                            b.k, b.k, a.k
                        ),
                        witness: None,
                    });
                }
            }
        }
    }

    // spot checks on random member pairs
    let mut rng = DetRng::with_stream(STREAM_SPOT, ((a.k as u64) << 32) | b.k as u64);
    let mut done = 0usize;
    for _ in 0..samples {
        let (u, w) = match (sample_member(a, &mut rng), sample_member(b, &mut rng)) {
            (Some(u), Some(w)) => (u, w),
            _ => break, // a side looks empty; nothing more to sample
        };
        if !words_separated(&u, &w) {
            return Ok(SeparationCheck::Uncertified {
                reason: "spot check found a violating member pair".into(),
                witness: Some((u, w)),
            });
        }
        done += 1;
    }
    Ok(SeparationCheck::Certified { spot_samples: done })
}

/// Draws a uniform member of an explicit code, or rejection-samples the
/// membership predicate of an implicit one (up to a fixed retry budget).
pub fn sample_member(code: &Code, rng: &mut DetRng) -> Option<Word> {
    match &code.repr {
        CodeRepr::Explicit(words) => {
            if words.is_empty() {
                None
            } else {
                Some(words[rng.below(words.len() as u64) as usize].clone())
            }
        }
        CodeRepr::Implicit(spec) => {
            let k = code.k;
            for _ in 0..1000 {
                let letters: Vec<u32> = (1..=code.d as u32)
                    .map(|i| {
                        if spec.f.contains(i) {
                            // uniform over [k] \ {k-1} = {1..k-2, k}
                            let x = rng.below((k - 1) as u64) as u32;
                            if x < k - 2 {
                                x + 1
                            } else {
                                k
                            }
                        } else {
                            rng.below((k - 1) as u64) as u32 + 1
                        }
                    })
                    .collect();
                let w = Word { k, letters };
                if spec.j.values().all(|js| js.iter().any(|i| w.letter(i) == k)) {
                    return Some(w);
                }
            }
            None
        }
    }
}

fn validate_j_map(k: u32, f: &CoordSet, j: &BTreeMap<u32, CoordSet>) -> Result<()> {
    let expected: Vec<u32> = (2..k).collect();
    let keys: Vec<u32> = j.keys().copied().collect();
    if keys != expected {
        return Err(Error::InvalidArgument(format!(
            "witness map must cover classes 2..{k} exactly, got {keys:?}"
        )));
    }
    for (l, js) in j {
        if !js.is_subset_of(f) {
            return Err(Error::InvalidArgument(format!(
                "witness set J({l},{k}) is not contained in F"
            )));
        }
    }
    Ok(())
}

/// Exact count of words `v` over `([k] \ {k-1})^F` that are not `l`-bad for
/// any `l`, by inclusion-exclusion over the bad events:
/// `sum_T (-1)^|T| (k-2)^|U_T| (k-1)^(|F| - |U_T|)` with
/// `U_T = union of J(l,k) over l in T`.
pub fn count_good_exact(
    k: u32,
    f: &CoordSet,
    j: &BTreeMap<u32, CoordSet>,
    caps: &Caps,
) -> Result<BigUint> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("class k={k} must be >= 2")));
    }
    validate_j_map(k, f, j)?;
    let events: Vec<&CoordSet> = j.values().collect();
    if events.len() as u32 > caps.ie_events {
        return Err(Error::CapExceeded {
            what: "inclusion-exclusion events",
            needed: events.len().to_string(),
            cap: caps.ie_events.to_string(),
        });
    }

    let fl = f.len();
    // signed multiplicity of each union popcount over all 2^events subsets
    let mut acc = vec![0i64; fl + 1];
    let mut scratch: Vec<CoordSet> = (0..=events.len()).map(|_| CoordSet::empty(f.d())).collect();

    fn rec(
        level: usize,
        sign: i64,
        events: &[&CoordSet],
        scratch: &mut [CoordSet],
        acc: &mut [i64],
    ) {
        if level == events.len() {
            acc[scratch[level].len()] += sign;
            return;
        }
        let (head, tail) = scratch.split_at_mut(level + 1);
        tail[0].copy_from(&head[level]);
        rec(level + 1, sign, events, scratch, acc);

        let (head, tail) = scratch.split_at_mut(level + 1);
        tail[0].copy_from(&head[level]);
        tail[0].union_assign(events[level]);
        rec(level + 1, -sign, events, scratch, acc);
    }
    rec(0, 1, &events, &mut scratch, &mut acc);

    let low = BigUint::from(k - 2);
    let full = BigUint::from(k - 1);
    let low_pows: Vec<BigUint> = (0..=fl as u32).map(|e| low.pow(e)).collect();
    let full_pows: Vec<BigUint> = (0..=fl as u32).map(|e| full.pow(e)).collect();

    let mut total = BigInt::zero();
    for (c, &mult) in acc.iter().enumerate() {
        if mult == 0 {
            continue;
        }
        let term = BigInt::from(&low_pows[c] * &full_pows[fl - c]);
        total += term * BigInt::from(mult);
    }
    if total.is_negative() {
        return Err(Error::Validation(
            "inclusion-exclusion produced a negative count".into(),
        ));
    }
    Ok(total.to_biguint().unwrap())
}

/// Exact rational lower bound on the good fraction over `([k] \ {k-1})^F`
/// by the union bound: `1 - sum_l ((k-2)/(k-1))^|J(l,k)|`. May be negative,
/// in which case the certificate is inconclusive.
pub fn bound_good_fraction(k: u32, j: &BTreeMap<u32, CoordSet>) -> Rat {
    let mut bad = Rat::zero();
    let ratio = Rat::ratio(k as i64 - 2, k as i64 - 1);
    for js in j.values() {
        bad = bad + ratio.pow(js.len() as u32);
    }
    Rat::one() - bad
}

/// Lexicographic product of per-coordinate alphabets.
fn product_words(alphabets: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for alpha in alphabets {
        let mut next = Vec::with_capacity(out.len() * alpha.len());
        for prefix in &out {
            for &v in alpha {
                let mut w = prefix.clone();
                w.push(v);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildMode {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub mode: BuildMode,
    /// Size certification threshold (fraction of `(k-1)^d`).
    pub threshold: Rat,
    pub max_retries: u64,
    pub caps: Caps,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            mode: BuildMode::Implicit,
            threshold: Rat::ratio(10, 11),
            max_retries: 10_000,
            caps: Caps::default(),
        }
    }
}

fn certify_size(size: &SizeCertificate, threshold: &Rat, full_pow: &BigUint) -> bool {
    let target = threshold * &Rat::from_biguint(full_pow);
    match size {
        SizeCertificate::Exact(n) => Rat::from_biguint(n) >= target,
        SizeCertificate::LowerBound(b) => *b >= target,
    }
}

/// Builds the probabilistic separated family at dimension `d`: samples the
/// index sets, forms each class's witness sets, certifies sizes (exact
/// inclusion-exclusion preferred, union bound as fallback) and re-verifies
/// gappedness and pairwise separation before returning.
pub fn build_separated_family(d: usize, seed: u64, opts: &BuildOptions) -> Result<CodeFamily> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("d={d} must be >= 2")));
    }
    let s = s_of(d);
    let ff = gen_f_family(d, s, seed, opts.max_retries)?;

    let mut codes = Vec::with_capacity((s - 1) as usize);
    for k in 2..=s {
        let f = &ff.sets[(k - 2) as usize];
        let j: BTreeMap<u32, CoordSet> = (2..k)
            .map(|l| (l, f.difference(&ff.sets[(l - 2) as usize])))
            .collect();
        let refusal = j
            .iter()
            .find(|(_, js)| js.is_empty())
            .map(|(l, _)| format!("empty witness set J({l},{k}): separation not certifiable"));

        let full_pow = BigUint::from(k - 1).pow(d as u32);
        let off_pow = BigUint::from(k - 1).pow((d - f.len()) as u32);
        let (repr, size) = match opts.mode {
            BuildMode::Implicit => {
                let size = match count_good_exact(k, f, &j, &opts.caps) {
                    Ok(good) => SizeCertificate::Exact(good * &off_pow),
                    Err(Error::CapExceeded { .. }) => {
                        let frac = bound_good_fraction(k, &j);
                        SizeCertificate::LowerBound(frac * Rat::from_biguint(&full_pow))
                    }
                    Err(e) => return Err(e),
                };
                (
                    CodeRepr::Implicit(ImplicitSpec { f: f.clone(), j }),
                    size,
                )
            }
            BuildMode::Explicit => {
                let words = enumerate_filtered(k, d, f, &j, &opts.caps)?;
                let size = SizeCertificate::Exact(BigUint::from(words.len()));
                (CodeRepr::Explicit(words), size)
            }
        };
        let certified = certify_size(&size, &opts.threshold, &full_pow);
        codes.push(Code {
            k,
            d,
            repr,
            size,
            certified,
            refusal,
        });
    }

    let fam = CodeFamily {
        d,
        s,
        kind: FamilyKind::Probabilistic,
        seed,
        f_sets: ff.sets,
        codes,
    };
    ensure_family_certified(&fam)?;
    Ok(fam)
}

/// Materializes the good words of `([k]\{k-1})^F x [k-1]^(complement F)`,
/// in lexicographic order.
fn enumerate_filtered(
    k: u32,
    d: usize,
    f: &CoordSet,
    j: &BTreeMap<u32, CoordSet>,
    caps: &Caps,
) -> Result<Vec<Word>> {
    let fl = f.len();
    let on_count = BigUint::from(k - 1).pow(fl as u32);
    if on_count > BigUint::from(caps.explicit_words) {
        return Err(Error::CapExceeded {
            what: "explicit words",
            needed: on_count.to_string(),
            cap: caps.explicit_words.to_string(),
        });
    }

    let f_coords = f.indices();
    let slot_of: BTreeMap<u32, usize> = f_coords.iter().enumerate().map(|(s, &c)| (c, s)).collect();
    let on_alpha: Vec<u32> = (1..=k).filter(|&v| v != k - 1).collect();
    let on_tuples = product_words(&vec![on_alpha; fl]);
    let good: Vec<Vec<u32>> = on_tuples
        .into_iter()
        .filter(|tuple| {
            j.values()
                .all(|js| js.iter().any(|c| tuple[slot_of[&c]] == k))
        })
        .collect();

    let off_coords: Vec<u32> = f.complement().indices();
    let off_count = BigUint::from(k - 1).pow(off_coords.len() as u32);
    let total = BigUint::from(good.len()) * &off_count;
    if total > BigUint::from(caps.explicit_words) {
        return Err(Error::CapExceeded {
            what: "explicit words",
            needed: total.to_string(),
            cap: caps.explicit_words.to_string(),
        });
    }

    let off_alpha: Vec<u32> = (1..k).collect();
    let off_tuples = product_words(&vec![off_alpha; off_coords.len()]);
    let mut words = Vec::with_capacity(total.to_usize().unwrap_or(0));
    for tuple in &good {
        for off in &off_tuples {
            let mut letters = vec![0u32; d];
            for (slot, &c) in f_coords.iter().enumerate() {
                letters[(c - 1) as usize] = tuple[slot];
            }
            for (slot, &c) in off_coords.iter().enumerate() {
                letters[(c - 1) as usize] = off[slot];
            }
            words.push(Word { k, letters });
        }
    }
    words.sort();
    Ok(words)
}

/// The explicit separated family with `L_k = {w : w_k = k, w_i < k for i != k}`
/// for `2 <= k <= d`, of size `(k-1)^(d-1)` per class. Classes above the
/// explicit cap are stored implicitly (`F_k = {k}`, witness sets `{k}`) with
/// the same exact counts.
pub fn warmup_family(d: usize, caps: &Caps) -> Result<CodeFamily> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("d={d} must be >= 2")));
    }
    if d > u32::MAX as usize {
        return Err(Error::InvalidArgument("d too large".into()));
    }
    let s = d as u32;
    let mut f_sets = Vec::with_capacity((s - 1) as usize);
    let mut codes = Vec::with_capacity((s - 1) as usize);
    for k in 2..=s {
        let f = CoordSet::from_indices(d, &[k])?;
        let j: BTreeMap<u32, CoordSet> = (2..k).map(|l| (l, f.clone())).collect();
        let count = BigUint::from(k - 1).pow(d as u32 - 1);
        let repr = if count <= BigUint::from(caps.explicit_words) {
            let alphabets: Vec<Vec<u32>> = (1..=s)
                .map(|pos| if pos == k { vec![k] } else { (1..k).collect() })
                .collect();
            let words = product_words(&alphabets)
                .into_iter()
                .map(|letters| Word { k, letters })
                .collect();
            CodeRepr::Explicit(words)
        } else {
            CodeRepr::Implicit(ImplicitSpec { f: f.clone(), j })
        };
        let full_pow = BigUint::from(k - 1).pow(d as u32);
        let size = SizeCertificate::Exact(count);
        let certified = certify_size(&size, &Rat::ratio(10, 11), &full_pow);
        codes.push(Code {
            k,
            d,
            repr,
            size,
            certified,
            refusal: None,
        });
        f_sets.push(f);
    }
    let fam = CodeFamily {
        d,
        s,
        kind: FamilyKind::Warmup,
        seed: 0,
        f_sets,
        codes,
    };
    ensure_family_certified(&fam)?;
    Ok(fam)
}

/// Build-time self check: every code gapped, every pair separated (proven or
/// certified). Fails loudly if the construction ever produced an invalid
/// family.
fn ensure_family_certified(fam: &CodeFamily) -> Result<()> {
    for code in &fam.codes {
        if !is_gapped(code) {
            return Err(Error::Validation(format!(
                "constructed code k={} is not gapped",
                code.k
            )));
        }
    }
    for a in 0..fam.codes.len() {
        for b in a + 1..fam.codes.len() {
            let check = are_separated(&fam.codes[a], &fam.codes[b], 0)?;
            if !check.is_separated() {
                return Err(Error::Validation(format!(
                    "constructed codes k={} and k={} not separated: {:?}",
                    fam.codes[a].k, fam.codes[b].k, check
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Deep verification (the CLI `verify` path) and the JSON wire format.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct FamilyVerification {
    pub gapped_failures: Vec<u32>,
    pub separation_failures: Vec<(u32, u32, SeparationCheck)>,
    pub size_failures: Vec<(u32, String)>,
    pub fset_failures: Vec<String>,
    pub refusals: Vec<u32>,
}

impl FamilyVerification {
    pub fn ok(&self) -> bool {
        self.gapped_failures.is_empty()
            && self.separation_failures.is_empty()
            && self.size_failures.is_empty()
            && self.fset_failures.is_empty()
    }
}

/// Re-checks a family from first principles: gappedness, pairwise separation
/// (with `samples` spot checks per implicit pair), size certificates
/// (recomputed where the caps allow), explicit word validity, and the index
/// set profile.
pub fn verify_family(fam: &CodeFamily, samples: usize, caps: &Caps) -> Result<FamilyVerification> {
    let mut v = FamilyVerification {
        gapped_failures: vec![],
        separation_failures: vec![],
        size_failures: vec![],
        fset_failures: vec![],
        refusals: vec![],
    };

    if fam.codes.len() != (fam.s - 1) as usize || fam.f_sets.len() != (fam.s - 1) as usize {
        return Err(Error::Validation(format!(
            "family with S={} must carry {} codes and index sets",
            fam.s,
            fam.s - 1
        )));
    }

    // index set profile
    if fam.kind == FamilyKind::Probabilistic {
        let r = fam.d.div_ceil(2);
        for (i, f) in fam.f_sets.iter().enumerate() {
            if f.len() != r {
                v.fset_failures
                    .push(format!("|F_{}| = {} but ceil(d/2) = {}", i + 2, f.len(), r));
            }
        }
        for a in 0..fam.f_sets.len() {
            for b in a + 1..fam.f_sets.len() {
                let inter = fam.f_sets[a].intersection_len(&fam.f_sets[b]);
                if 26 * inter as u64 >= 7 * fam.d as u64 {
                    v.fset_failures.push(format!(
                        "|F_{} ∩ F_{}| = {inter} violates 26|∩| < 7d",
                        a + 2,
                        b + 2
                    ));
                }
            }
        }
    }

    for code in &fam.codes {
        let k = code.k;
        if code.d != fam.d {
            v.size_failures.push((k, "dimension mismatch".into()));
            continue;
        }
        if !is_gapped(code) {
            v.gapped_failures.push(k);
        }
        if code.refusal.is_some() {
            v.refusals.push(k);
        }

        // size certificate recomputation
        let f = &fam.f_sets[(k - 2) as usize];
        let j: BTreeMap<u32, CoordSet> = (2..k)
            .map(|l| (l, f.difference(&fam.f_sets[(l - 2) as usize])))
            .collect();
        let full_pow = BigUint::from(k - 1).pow(fam.d as u32);
        match &code.repr {
            CodeRepr::Explicit(words) => {
                if code.size != SizeCertificate::Exact(BigUint::from(words.len())) {
                    v.size_failures
                        .push((k, "stored count differs from word count".into()));
                }
                if words.windows(2).any(|w| w[0] >= w[1]) {
                    v.size_failures
                        .push((k, "explicit words not sorted/deduplicated".into()));
                }
                let spec = ImplicitSpec {
                    f: f.clone(),
                    j: j.clone(),
                };
                if let Some(bad) = words.iter().find(|w| !implicit_member(k, &spec, w)) {
                    v.size_failures.push((
                        k,
                        format!("word {:?} violates the membership predicate", bad.letters),
                    ));
                }
                if let Ok(good) = count_good_exact(k, f, &j, caps) {
                    let expect = good * BigUint::from(k - 1).pow((fam.d - f.len()) as u32);
                    if BigUint::from(words.len()) != expect {
                        v.size_failures
                            .push((k, format!("enumeration {} != counted {expect}", words.len())));
                    }
                }
            }
            CodeRepr::Implicit(spec) => {
                if spec.f != *f {
                    v.size_failures
                        .push((k, "implicit index set differs from family".into()));
                }
                if spec.j != j {
                    v.size_failures
                        .push((k, "witness sets differ from F_k \\ F_l".into()));
                }
                match &code.size {
                    SizeCertificate::Exact(n) => match count_good_exact(k, f, &j, caps) {
                        Ok(good) => {
                            let expect = good * BigUint::from(k - 1).pow((fam.d - f.len()) as u32);
                            if *n != expect {
                                v.size_failures
                                    .push((k, format!("stored {n} != recomputed {expect}")));
                            }
                        }
                        Err(Error::CapExceeded { .. }) => {
                            // exact recount out of reach; sanity bound only
                            if *n > full_pow {
                                v.size_failures.push((k, "count exceeds (k-1)^d".into()));
                            }
                        }
                        Err(e) => return Err(e),
                    },
                    SizeCertificate::LowerBound(b) => {
                        let frac = bound_good_fraction(k, &j);
                        let recomputed =
                            SizeCertificate::LowerBound(frac * Rat::from_biguint(&full_pow));
                        if recomputed.integer_bound() != code.size.integer_bound() {
                            v.size_failures
                                .push((k, format!("lower bound {b} does not match recomputation")));
                        }
                    }
                }
            }
        }

        let certified = certify_size(&code.size, &Rat::ratio(10, 11), &full_pow);
        if certified != code.certified {
            v.size_failures
                .push((k, "certified-threshold flag does not recompute".into()));
        }
    }

    for a in 0..fam.codes.len() {
        for b in a + 1..fam.codes.len() {
            let check = are_separated(&fam.codes[a], &fam.codes[b], samples)?;
            if !check.is_separated() {
                v.separation_failures
                    .push((fam.codes[a].k, fam.codes[b].k, check));
            }
        }
    }
    Ok(v)
}

#[derive(Serialize, Deserialize)]
struct FamilyJson {
    d: usize,
    #[serde(rename = "S")]
    s: u32,
    kind: String,
    seed: u64,
    #[serde(rename = "F")]
    f: Vec<Vec<u32>>,
    codes: Vec<CodeJson>,
}

#[derive(Serialize, Deserialize)]
struct CodeJson {
    k: u32,
    repr: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    words: Option<Vec<Vec<u32>>>,
    count: String,
    #[serde(rename = "countKind")]
    count_kind: String,
    #[serde(rename = "certified1011")]
    certified: bool,
}

impl CodeFamily {
    pub fn to_json(&self) -> String {
        let dto = FamilyJson {
            d: self.d,
            s: self.s,
            kind: match self.kind {
                FamilyKind::Warmup => "warmup".into(),
                FamilyKind::Probabilistic => "probabilistic".into(),
            },
            seed: self.seed,
            f: self.f_sets.iter().map(|f| f.indices()).collect(),
            codes: self
                .codes
                .iter()
                .map(|c| CodeJson {
                    k: c.k,
                    repr: if c.is_explicit() { "explicit" } else { "implicit" }.into(),
                    words: c
                        .words()
                        .map(|ws| ws.iter().map(|w| w.letters.clone()).collect()),
                    count: c.size.integer_bound().to_string(),
                    count_kind: if c.size.is_exact() { "exact" } else { "lowerBound" }.into(),
                    certified: c.certified,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&dto).expect("family serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<CodeFamily> {
        let dto: FamilyJson = serde_json::from_str(text)?;
        if dto.s < 2 || dto.d < 2 {
            return Err(Error::Parse("family needs d >= 2 and S >= 2".into()));
        }
        if dto.f.len() != (dto.s - 1) as usize || dto.codes.len() != (dto.s - 1) as usize {
            return Err(Error::Parse(format!(
                "family with S={} must carry {} index sets and codes",
                dto.s,
                dto.s - 1
            )));
        }
        let kind = match dto.kind.as_str() {
            "warmup" => FamilyKind::Warmup,
            "probabilistic" => FamilyKind::Probabilistic,
            other => return Err(Error::Parse(format!("unknown family kind {other:?}"))),
        };
        let f_sets: Vec<CoordSet> = dto
            .f
            .iter()
            .map(|ix| CoordSet::from_indices(dto.d, ix))
            .collect::<Result<_>>()?;

        let mut codes = Vec::with_capacity(dto.codes.len());
        for (i, cj) in dto.codes.iter().enumerate() {
            let k = i as u32 + 2;
            if cj.k != k {
                return Err(Error::Parse(format!(
                    "codes must ascend from k=2; slot {i} holds k={}",
                    cj.k
                )));
            }
            let count = BigUint::parse_bytes(cj.count.as_bytes(), 10)
                .ok_or_else(|| Error::Parse(format!("bad count {:?}", cj.count)))?;
            let f = &f_sets[i];
            let j: BTreeMap<u32, CoordSet> = (2..k)
                .map(|l| (l, f.difference(&f_sets[(l - 2) as usize])))
                .collect();
            let refusal = j
                .iter()
                .find(|(_, js)| js.is_empty())
                .map(|(l, _)| format!("empty witness set J({l},{k}): separation not certifiable"));
            let repr = match cj.repr.as_str() {
                "explicit" => {
                    let raw = cj.words.as_ref().ok_or_else(|| {
                        Error::Parse(format!("explicit code k={k} lacks its words"))
                    })?;
                    let mut words = Vec::with_capacity(raw.len());
                    for letters in raw {
                        if letters.len() != dto.d {
                            return Err(Error::Parse(format!(
                                "word of length {} in dimension {}",
                                letters.len(),
                                dto.d
                            )));
                        }
                        words.push(Word::new(k, letters.clone())?);
                    }
                    if BigUint::from(words.len()) != count {
                        return Err(Error::Parse(format!(
                            "explicit code k={k}: count {} != {} words",
                            count,
                            words.len()
                        )));
                    }
                    CodeRepr::Explicit(words)
                }
                "implicit" => CodeRepr::Implicit(ImplicitSpec { f: f.clone(), j }),
                other => return Err(Error::Parse(format!("unknown repr {other:?}"))),
            };
            let size = match cj.count_kind.as_str() {
                "exact" => SizeCertificate::Exact(count),
                "lowerBound" => SizeCertificate::LowerBound(Rat::from_biguint(&count)),
                other => return Err(Error::Parse(format!("unknown countKind {other:?}"))),
            };
            codes.push(Code {
                k,
                d: dto.d,
                repr,
                size,
                certified: cj.certified,
                refusal,
            });
        }
        Ok(CodeFamily {
            d: dto.d,
            s: dto.s,
            kind,
            seed: dto.seed,
            f_sets,
            codes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps() -> Caps {
        Caps::default()
    }

    fn explicit_code(k: u32, d: usize, words: &[&[u32]]) -> Code {
        let words: Vec<Word> = words
            .iter()
            .map(|ls| Word::new(k, ls.to_vec()).unwrap())
            .collect();
        let n = words.len();
        Code {
            k,
            d,
            repr: CodeRepr::Explicit(words),
            size: SizeCertificate::Exact(BigUint::from(n)),
            certified: false,
            refusal: None,
        }
    }

    #[test]
    fn s_of_examples() {
        assert_eq!(s_of(100), 5);
        assert_eq!(s_of(1000), 33);
        assert_eq!(s_of(8), 2);
        assert_eq!(s_of(2), 2);
        assert_eq!(s_of(12), 2);
    }

    #[test]
    fn f_family_reproducible_and_valid() {
        let a = gen_f_family(40, 5, 7, 100).unwrap();
        let b = gen_f_family(40, 5, 7, 100).unwrap();
        assert_eq!(a.sets, b.sets);
        assert_eq!(a.attempts, b.attempts);
        for f in &a.sets {
            assert_eq!(f.len(), 20);
        }
        for (&(k, k2), &inter) in &a.intersections {
            assert!(k < k2);
            assert!(26 * inter < 7 * 40, "pair ({k},{k2})");
        }
        assert!(a.max_intersection * 26 < 7 * 40);
    }

    #[test]
    fn f_family_single_set_is_vacuous() {
        let ff = gen_f_family(4, 2, 123, 10).unwrap();
        assert_eq!(ff.sets.len(), 1);
        assert_eq!(ff.sets[0].len(), 2);
        assert!(ff.intersections.is_empty());
    }

    #[test]
    fn f_family_tight_threshold_may_exhaust() {
        // d=26, S=13: 13-subsets of [26] must pairwise intersect in < 7;
        // success and documented exhaustion are both legitimate outcomes
        match gen_f_family(26, 13, 1, 50) {
            Ok(ff) => {
                for &inter in ff.intersections.values() {
                    assert!(26 * inter < 7 * 26);
                }
            }
            Err(Error::RetriesExhausted { attempts, .. }) => assert_eq!(attempts, 50),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn warmup_small_families() {
        let fam = warmup_family(2, &caps()).unwrap();
        assert_eq!(fam.s, 2);
        let l2 = fam.code(2).unwrap();
        assert_eq!(l2.words().unwrap(), &[Word::new(2, vec![1, 2]).unwrap()]);

        let fam = warmup_family(3, &caps()).unwrap();
        assert_eq!(fam.code(2).unwrap().size, SizeCertificate::Exact(1u32.into()));
        assert_eq!(fam.code(3).unwrap().size, SizeCertificate::Exact(4u32.into()));
        assert_eq!(fam.code(3).unwrap().words().unwrap().len(), 4);

        // the pair (1,2,1) in L_2 and (2,2,3) in L_3 separates via i=3
        let u = Word::new(2, vec![1, 2, 1]).unwrap();
        let w = Word::new(3, vec![2, 2, 3]).unwrap();
        assert!(fam.code(2).unwrap().contains(&u));
        assert!(fam.code(3).unwrap().contains(&w));
        assert!(words_separated(&u, &w));
    }

    #[test]
    fn warmup_sizes_match_formula() {
        for d in 2..=9usize {
            let fam = warmup_family(d, &caps()).unwrap();
            for k in 2..=d as u32 {
                let expect = BigUint::from(k - 1).pow(d as u32 - 1);
                assert_eq!(fam.code(k).unwrap().size, SizeCertificate::Exact(expect));
            }
        }
    }

    #[test]
    fn warmup_above_cap_goes_implicit() {
        let small = Caps {
            explicit_words: 10,
            ..Caps::default()
        };
        let fam = warmup_family(4, &small).unwrap();
        assert!(fam.code(2).unwrap().is_explicit()); // 1 word
        assert!(fam.code(3).unwrap().is_explicit()); // 8 words
        assert!(!fam.code(4).unwrap().is_explicit()); // 27 words > 10
        assert_eq!(
            fam.code(4).unwrap().size,
            SizeCertificate::Exact(27u32.into())
        );
        // implicit warm-up code still answers membership correctly
        let c4 = fam.code(4).unwrap();
        assert!(c4.contains(&Word::new(4, vec![1, 2, 3, 4]).unwrap()));
        assert!(!c4.contains(&Word::new(4, vec![1, 2, 4, 4]).unwrap()));
        assert!(!c4.contains(&Word::new(4, vec![1, 2, 3, 3]).unwrap()));
    }

    #[test]
    fn gapped_checks() {
        let fam = warmup_family(3, &caps()).unwrap();
        assert!(is_gapped(fam.code(3).unwrap()));

        let not_gapped = explicit_code(2, 2, &[&[2, 1], &[1, 2]]);
        assert!(!is_gapped(&not_gapped));

        let singleton = explicit_code(2, 2, &[&[1, 2]]);
        assert!(is_gapped(&singleton));
    }

    #[test]
    fn separation_explicit_cases() {
        let fam = warmup_family(3, &caps()).unwrap();
        let check = are_separated(fam.code(2).unwrap(), fam.code(3).unwrap(), 0).unwrap();
        assert_eq!(
            check,
            SeparationCheck::Proven {
                separated: true,
                witness: None
            }
        );

        let a = explicit_code(2, 2, &[&[1, 2]]);
        let b = explicit_code(3, 2, &[&[3, 1]]);
        assert!(are_separated(&a, &b, 0).unwrap().is_separated());

        let a = explicit_code(2, 2, &[&[2, 1]]);
        let b = explicit_code(3, 2, &[&[1, 3]]);
        assert!(are_separated(&a, &b, 0).unwrap().is_separated());

        let b_bad = explicit_code(3, 2, &[&[3, 2]]);
        match are_separated(&a, &b_bad, 0).unwrap() {
            SeparationCheck::Proven {
                separated: false,
                witness: Some((u, w)),
            } => {
                assert_eq!(u.letters, vec![2, 1]);
                assert_eq!(w.letters, vec![3, 2]);
            }
            other => panic!("expected a disproof with witness, got {other:?}"),
        }

        // dimension mismatch and class-order misuse
        let c = explicit_code(3, 3, &[&[1, 1, 3]]);
        assert!(are_separated(&a, &c, 0).is_err());
        assert!(are_separated(&b_bad, &a, 0).is_err());
    }

    #[test]
    fn count_good_exact_fixed_cases() {
        // k=2: no events, alphabet {2} only
        let f = CoordSet::from_indices(6, &[1, 2, 3]).unwrap();
        assert_eq!(
            count_good_exact(2, &f, &BTreeMap::new(), &caps()).unwrap(),
            BigUint::from(1u32)
        );

        // k=3, |F|=6, |J(2,3)|=3: 2^6 - 2^3 = 56
        let f = CoordSet::from_indices(8, &[1, 2, 3, 5, 6, 8]).unwrap();
        let j = BTreeMap::from([(2, CoordSet::from_indices(8, &[1, 5, 8]).unwrap())]);
        assert_eq!(
            count_good_exact(3, &f, &j, &caps()).unwrap(),
            BigUint::from(56u32)
        );

        // k=4, |F|=4, J(2)={1,2}, J(3)={2,3}: 81 - 36 - 36 + 24 = 33
        let f = CoordSet::from_indices(4, &[1, 2, 3, 4]).unwrap();
        let j = BTreeMap::from([
            (2, CoordSet::from_indices(4, &[1, 2]).unwrap()),
            (3, CoordSet::from_indices(4, &[2, 3]).unwrap()),
        ]);
        assert_eq!(
            count_good_exact(4, &f, &j, &caps()).unwrap(),
            BigUint::from(33u32)
        );
    }

    #[test]
    fn count_good_exact_cap_and_validation() {
        let tight = Caps {
            ie_events: 1,
            ..Caps::default()
        };
        let f = CoordSet::from_indices(4, &[1, 2, 3, 4]).unwrap();
        let j = BTreeMap::from([
            (2, CoordSet::from_indices(4, &[1]).unwrap()),
            (3, CoordSet::from_indices(4, &[2]).unwrap()),
        ]);
        assert!(matches!(
            count_good_exact(4, &f, &j, &tight),
            Err(Error::CapExceeded { .. })
        ));

        // missing event class
        let j_missing = BTreeMap::from([(2, CoordSet::from_indices(4, &[1]).unwrap())]);
        assert!(count_good_exact(4, &f, &j_missing, &caps()).is_err());

        // witness set outside F
        let f_small = CoordSet::from_indices(4, &[1, 2]).unwrap();
        let j_out = BTreeMap::from([(2, CoordSet::from_indices(4, &[3]).unwrap())]);
        assert!(count_good_exact(3, &f_small, &j_out, &caps()).is_err());
    }

    #[test]
    fn bound_good_fraction_cases() {
        assert_eq!(bound_good_fraction(2, &BTreeMap::new()), Rat::one());

        let j = BTreeMap::from([(2, CoordSet::from_indices(8, &[1, 5, 8]).unwrap())]);
        assert_eq!(bound_good_fraction(3, &j), Rat::ratio(7, 8));

        // k=33 with 31 witness sets of size 231 clears 10/11
        let mut j = BTreeMap::new();
        let big: Vec<u32> = (1..=231).collect();
        for l in 2..33u32 {
            j.insert(l, CoordSet::from_indices(500, &big).unwrap());
        }
        let b = bound_good_fraction(33, &j);
        assert!(b >= Rat::ratio(10, 11));
        assert!(b < Rat::one());
    }

    #[test]
    fn union_bound_never_exceeds_exact_fraction() {
        let mut rng = DetRng::new(2024);
        for _ in 0..60 {
            let k = rng.range_inclusive(2, 5) as u32;
            let fl = rng.range_inclusive(1, 8) as usize;
            let f = rng.subset(12, fl);
            let f_ix = f.indices();
            let mut j = BTreeMap::new();
            for l in 2..k {
                let take = rng.below(fl as u64 + 1) as usize;
                let mut js = CoordSet::empty(12);
                for &c in f_ix.iter().take(take) {
                    js.insert(c);
                }
                j.insert(l, js);
            }
            let exact = count_good_exact(k, &f, &j, &caps()).unwrap();
            let total = BigUint::from(k - 1).pow(fl as u32);
            let exact_frac = Rat::from_biguint(&exact) / Rat::from_biguint(&total);
            assert!(bound_good_fraction(k, &j) <= exact_frac);
        }
    }

    #[test]
    fn build_small_families() {
        // d=4 gives S=2: the single k=2 code has exactly one word
        let fam = build_separated_family(4, 9, &BuildOptions::default()).unwrap();
        assert_eq!(fam.s, 2);
        let c2 = fam.code(2).unwrap();
        assert_eq!(c2.size, SizeCertificate::Exact(1u32.into()));
        assert!(c2.certified);

        let fam = build_separated_family(
            12,
            5,
            &BuildOptions {
                mode: BuildMode::Explicit,
                ..BuildOptions::default()
            },
        )
        .unwrap();
        assert_eq!(fam.s, 2);
        let c2 = fam.code(2).unwrap();
        let words = c2.words().unwrap();
        assert_eq!(words.len(), 1);
        // the single word is 2 on F and 1 elsewhere
        let f = fam.f_of(2).unwrap();
        for i in 1..=12u32 {
            let expect = if f.contains(i) { 2 } else { 1 };
            assert_eq!(words[0].letter(i), expect);
        }
    }

    #[test]
    fn build_explicit_and_implicit_counts_agree() {
        for seed in [1u64, 2, 3] {
            let exp = build_separated_family(
                16,
                seed,
                &BuildOptions {
                    mode: BuildMode::Explicit,
                    ..BuildOptions::default()
                },
            )
            .unwrap();
            let imp = build_separated_family(16, seed, &BuildOptions::default()).unwrap();
            assert_eq!(exp.s, imp.s);
            for k in 2..=exp.s {
                assert_eq!(
                    exp.code(k).unwrap().size.integer_bound(),
                    imp.code(k).unwrap().size.integer_bound(),
                    "seed {seed}, k {k}"
                );
                assert!(imp.code(k).unwrap().size.is_exact());
            }
            let v = verify_family(&exp, 8, &caps()).unwrap();
            assert!(v.ok(), "{v:?}");
        }
    }

    #[test]
    fn family_json_round_trip() {
        let fam = warmup_family(4, &caps()).unwrap();
        let js = fam.to_json();
        let back = CodeFamily::from_json(&js).unwrap();
        assert_eq!(back, fam);
        assert_eq!(back.to_json(), js);

        let fam = build_separated_family(20, 11, &BuildOptions::default()).unwrap();
        let js = fam.to_json();
        let back = CodeFamily::from_json(&js).unwrap();
        assert_eq!(back, fam);
        let v = verify_family(&back, 4, &caps()).unwrap();
        assert!(v.ok(), "{v:?}");
    }

    #[test]
    fn verify_catches_tampering() {
        let fam = warmup_family(4, &caps()).unwrap();
        let js = fam.to_json();
        let tampered = js.replace("\"count\": \"8\"", "\"count\": \"9\"");
        assert_ne!(js, tampered);
        // the explicit word list no longer matches the stored count
        assert!(CodeFamily::from_json(&tampered).is_err());

        let mut fam2 = warmup_family(4, &caps()).unwrap();
        if let CodeRepr::Explicit(words) = &mut fam2.codes[1].repr {
            words[0].letters = vec![3, 3, 1, 1]; // breaks membership (w_3 != 3)
        }
        let v = verify_family(&fam2, 0, &caps()).unwrap();
        assert!(!v.ok());
    }

    #[test]
    fn implicit_members_sample_correctly() {
        let fam = build_separated_family(30, 3, &BuildOptions::default()).unwrap();
        let mut rng = DetRng::new(77);
        for code in &fam.codes {
            if let Some(spec) = code.implicit() {
                for _ in 0..50 {
                    let w = sample_member(code, &mut rng).expect("sampling succeeds");
                    assert!(implicit_member(code.k, spec, &w));
                    assert!(code.contains(&w));
                }
            }
        }
    }
}
