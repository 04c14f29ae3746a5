//! The measure induced by a function's jumps.
//!
//! Every jump of a regulated function contributes a point mass at its
//! `(time, size)` pair. This module queries that measure: counts over
//! time-by-size rectangles, sums of a monotone transform of the jump
//! sizes, point-mass families (counting and unit masses as special
//! cases), the cumulative jump function rebuilt from a weight family, and
//! size-layer witnesses that exhibit countability layer by layer.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ContinuousBase;
use crate::function::{bucket_of_jump_size, RegulatedFn};
use crate::index_set::{IndexKey, IndexSetExpr};
use crate::interval::IntervalSpec;
use crate::kahan::KahanSum;
use crate::train::{GeneratedTrain, JumpAtom, JumpTrain, TrainRule};
use crate::unordered::{FamilyRule, SumResult, WeightFamily};
use crate::MAX_GENERATED_TERMS;

/// A monotone size transform applied to absolute jump sizes: vanishes at
/// zero and strictly increases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiSpec {
    /// `x^exponent`, `exponent > 0`.
    Power { exponent: f64 },
    /// `x / (1 + x)` — bounded by 1.
    Bounded,
    /// `1 - exp(-x)` — bounded by 1.
    Expm,
}

impl PhiSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PhiSpec::Power { exponent } => x.powf(*exponent),
            PhiSpec::Bounded => x / (1.0 + x),
            PhiSpec::Expm => -(-x).exp_m1(),
        }
    }

    /// Parameter checks plus a probe-grid sanity pass: zero at zero,
    /// strictly increasing, finite.
    pub fn validate(&self) -> Result<()> {
        if let PhiSpec::Power { exponent } = self {
            if !(exponent.is_finite() && *exponent > 0.0) {
                return Err(Error::InvalidPhi {
                    reason: format!("power exponent must be positive and finite, got {exponent}"),
                });
            }
        }
        if self.eval(0.0) != 0.0 {
            return Err(Error::InvalidPhi { reason: "transform must vanish at zero".into() });
        }
        let probes = [0.0, 1e-9, 1e-6, 1e-3, 0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0];
        for pair in probes.windows(2) {
            let (a, b) = (self.eval(pair[0]), self.eval(pair[1]));
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidPhi {
                    reason: format!(
                        "transform must be finite and strictly increasing; probe {} -> {a}, {} -> {b}",
                        pair[0], pair[1]
                    ),
                });
            }
        }
        Ok(())
    }
}

impl FromStr for PhiSpec {
    type Err = Error;

    /// `"power:P"`, `"bounded"`, or `"expm"`.
    fn from_str(s: &str) -> Result<PhiSpec> {
        let spec = match s {
            "bounded" => PhiSpec::Bounded,
            "expm" => PhiSpec::Expm,
            _ => match s.strip_prefix("power:") {
                Some(p) => {
                    let exponent: f64 = p.parse().map_err(|_| Error::InvalidPhi {
                        reason: format!("cannot parse power exponent {p:?}"),
                    })?;
                    PhiSpec::Power { exponent }
                }
                None => {
                    return Err(Error::InvalidPhi {
                        reason: format!("unknown transform {s:?} (expected power:P, bounded, expm)"),
                    })
                }
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Bound on the transformed tail `sum over k > n of phi(|jump_k|)`.
/// Infinite exactly when that series is certified divergent.
///
/// Power transforms map the rules onto themselves: a geometric gap
/// sequence with ratio `r` transforms to ratio `r^p`, a power gap
/// sequence with exponent `q` to exponent `q * p`. The bounded transforms
/// are dominated by the identity, so the plain mass tail applies.
fn phi_tail(rule: &TrainRule, phi: &PhiSpec, n: u64) -> f64 {
    match phi {
        PhiSpec::Power { exponent: p } => match *rule {
            TrainRule::Geometric { ratio } => {
                let rp = ratio.powf(*p);
                if rp >= 1.0 {
                    f64::INFINITY
                } else {
                    rp.powi(n as i32 + 1) / (1.0 - rp)
                }
            }
            TrainRule::Power { exponent: q } => {
                let qp = q * p;
                if qp <= 1.0 {
                    f64::INFINITY
                } else if n == 0 {
                    1.0 + 1.0 / (qp - 1.0)
                } else {
                    (n as f64).powf(1.0 - qp) / (qp - 1.0)
                }
            }
        },
        PhiSpec::Bounded | PhiSpec::Expm => rule.tail_mass(n),
    }
}

/// Smallest term count whose transformed tail meets `tol` (clamped to the
/// term budget).
fn phi_terms_for_tol(rule: &TrainRule, phi: &PhiSpec, tol: f64) -> u64 {
    if phi_tail(rule, phi, MAX_GENERATED_TERMS) > tol {
        return MAX_GENERATED_TERMS;
    }
    let (mut lo, mut hi) = (0u64, MAX_GENERATED_TERMS);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if phi_tail(rule, phi, mid) > tol {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// A structural upper bound on the real keys a set can contain, when one
/// is provable from its shape.
fn loc_upper_bound(set: &IndexSetExpr) -> Option<f64> {
    match set {
        IndexSetExpr::Empty => Some(f64::NEG_INFINITY),
        IndexSetExpr::Explicit(keys) => Some(
            keys.iter()
                .filter_map(IndexKey::as_real)
                .fold(f64::NEG_INFINITY, f64::max),
        ),
        IndexSetExpr::Interval { hi: Some(v), .. } => Some(*v),
        IndexSetExpr::Intersection(parts) => {
            parts.iter().filter_map(loc_upper_bound).min_by(f64::total_cmp)
        }
        IndexSetExpr::Union(parts) => parts
            .iter()
            .map(loc_upper_bound)
            .collect::<Option<Vec<_>>>()
            .map(|bs| bs.into_iter().fold(f64::NEG_INFINITY, f64::max)),
        _ => None,
    }
}

/// Number of atoms with raw location `<= v` (`v` below the accumulation
/// point), by binary search on the nondecreasing rounded locations.
/// `None` when the count would exceed the term budget.
fn atoms_up_to_loc(rule: &TrainRule, v: f64) -> Option<u64> {
    if rule.raw_atom(1).loc > v {
        return Some(0);
    }
    let (mut lo, mut hi) = (1u64, MAX_GENERATED_TERMS);
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if rule.raw_atom(mid).loc <= v {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    if lo >= MAX_GENERATED_TERMS {
        None
    } else {
        Some(lo)
    }
}

/// The unordered sum of `phi(|jump|)` over the jumps of `f` at times in
/// `time_set`. Finite results carry a certified truncation bound; a
/// certified-divergent transformed tail over the full time axis yields
/// `Infinite`.
///
/// `time_set` must avoid the domain endpoints, where two-sided jumps are
/// undefined.
pub fn phi_sum(
    f: &RegulatedFn,
    phi: &PhiSpec,
    time_set: &IndexSetExpr,
    tol: f64,
) -> Result<SumResult> {
    if !(tol > 0.0) {
        return Err(Error::NonpositiveTolerance { tol });
    }
    phi.validate()?;
    time_set.validate()?;
    for e in [f.domain.left_endpoint(), f.domain.right_endpoint()].into_iter().flatten() {
        let key = IndexKey::real(e)?;
        if time_set.contains(&key, None) {
            return Err(Error::TimeSetTouchesBoundary { point: e });
        }
    }
    let in_set = |loc: f64, ordinal: Option<u64>| match IndexKey::real(loc) {
        Ok(key) => time_set.contains(&key, ordinal),
        Err(_) => false,
    };
    match &f.train {
        JumpTrain::Explicit(atoms) => {
            let mut acc = KahanSum::new();
            for a in atoms {
                let j = a.total_jump();
                if j != 0.0 && in_set(a.loc, None) {
                    acc.add(phi.eval(j.abs()));
                }
            }
            Ok(SumResult::Finite { value: acc.value(), error: 0.0 })
        }
        JumpTrain::Generated(g) => {
            let add_terms = |stop: u64| {
                let mut acc = KahanSum::new();
                for k in 1..=stop {
                    let a = g.atom(k);
                    let j = a.total_jump();
                    if j != 0.0 && in_set(a.loc, Some(k)) {
                        acc.add(phi.eval(j.abs()));
                    }
                }
                acc.value()
            };
            if phi_tail(&g.rule, phi, 0).is_infinite() {
                // No convergence certificate. A set whose real keys are
                // bounded below the accumulation point pins down finitely
                // many candidate atoms, making the sum exact.
                if !g.is_reflected() {
                    if let Some(v) = loc_upper_bound(time_set) {
                        if v < g.rule.loc_supremum() {
                            let stop = atoms_up_to_loc(&g.rule, v)
                                .ok_or(Error::MissingTailBound)?;
                            return Ok(SumResult::Finite { value: add_terms(stop), error: 0.0 });
                        }
                    }
                }
                return if *time_set == IndexSetExpr::All {
                    Ok(SumResult::Infinite)
                } else {
                    Err(Error::MissingTailBound)
                };
            }
            let stop = phi_terms_for_tol(&g.rule, phi, tol);
            Ok(SumResult::Finite {
                value: add_terms(stop),
                error: phi_tail(&g.rule, phi, stop),
            })
        }
    }
}

/// A set of jump sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizeSet {
    /// Sizes with `|x| >= eps` — bounded away from zero by construction.
    ComplementBall { eps: f64 },
    /// A union of closed intervals `[lo, hi]`; `null` bounds are
    /// unbounded.
    Intervals { cells: Vec<(Option<f64>, Option<f64>)> },
}

impl SizeSet {
    pub fn validate(&self) -> Result<()> {
        match self {
            SizeSet::ComplementBall { eps } => {
                if !(*eps > 0.0) {
                    return Err(Error::NonpositiveEpsilon { eps: *eps });
                }
            }
            SizeSet::Intervals { cells } => {
                for (lo, hi) in cells {
                    for b in [lo, hi] {
                        if b.is_some_and(f64::is_nan) {
                            return Err(Error::InvalidModel {
                                reason: "NaN size bound".into(),
                            });
                        }
                    }
                    if let (Some(l), Some(h)) = (lo, hi) {
                        if l > h {
                            return Err(Error::InvalidModel {
                                reason: format!("size interval out of order: {l} > {h}"),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            SizeSet::ComplementBall { eps } => x.abs() >= *eps,
            SizeSet::Intervals { cells } => cells.iter().any(|(lo, hi)| {
                lo.is_none_or(|l| x >= l) && hi.is_none_or(|h| x <= h)
            }),
        }
    }

    /// The infimum of `|x|` over the set: positive exactly when the set is
    /// bounded away from zero, which is what makes counts over generated
    /// rules finite.
    pub fn clearance(&self) -> f64 {
        match self {
            SizeSet::ComplementBall { eps } => *eps,
            SizeSet::Intervals { cells } => cells
                .iter()
                .map(|&(lo, hi)| {
                    let lo_le_zero = lo.is_none_or(|l| l <= 0.0);
                    let hi_ge_zero = hi.is_none_or(|h| h >= 0.0);
                    if lo_le_zero && hi_ge_zero {
                        0.0
                    } else if let Some(l) = lo.filter(|l| *l > 0.0) {
                        l
                    } else {
                        -hi.expect("negative interval has a finite upper bound")
                    }
                })
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// A time-by-size rectangle: jumps at times in `time` with sizes in
/// `size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub time: IndexSetExpr,
    pub size: SizeSet,
}

impl Rectangle {
    pub fn validate(&self) -> Result<()> {
        self.time.validate()?;
        self.size.validate()
    }

    fn matches(&self, loc: f64, jump: f64, ordinal: Option<u64>) -> bool {
        if !self.size.contains(jump) {
            return false;
        }
        match IndexKey::real(loc) {
            Ok(key) => self.time.contains(&key, ordinal),
            Err(_) => false,
        }
    }
}

/// Atoms with nonzero jump that any of the rectangles could match, each
/// with its generation ordinal when the train is generated.
fn candidate_atoms(f: &RegulatedFn, rects: &[Rectangle]) -> Result<Vec<(JumpAtom, Option<u64>)>> {
    match &f.train {
        JumpTrain::Explicit(atoms) => Ok(atoms
            .iter()
            .filter(|a| a.total_jump() != 0.0)
            .map(|a| (a.clone(), None))
            .collect()),
        JumpTrain::Generated(g) => {
            let clearance = rects.iter().map(|r| r.size.clearance()).fold(f64::INFINITY, f64::min);
            if !(clearance > 0.0) {
                return Err(Error::SizeSetTouchesZero);
            }
            let cutoff = g
                .level_cutoff(clearance)
                .ok_or(Error::UnboundedWindowWithoutCertificate)?;
            Ok((1..=cutoff)
                .map(|k| (g.atom(k), Some(k)))
                .filter(|(a, _)| a.total_jump() != 0.0)
                .collect())
        }
    }
}

/// How many jumps of `f` fall in the rectangle. Finite by construction:
/// for generated trains the size set must be bounded away from zero.
pub fn jump_count(f: &RegulatedFn, rect: &Rectangle) -> Result<u64> {
    Ok(jump_counts(f, std::slice::from_ref(rect))?[0])
}

/// Counts over several pairwise-disjoint rectangles (their counts add up
/// over unions). A jump matched by two rectangles is an error.
pub fn jump_counts(f: &RegulatedFn, rects: &[Rectangle]) -> Result<Vec<u64>> {
    for r in rects {
        r.validate()?;
    }
    let mut counts = vec![0u64; rects.len()];
    for (atom, ordinal) in candidate_atoms(f, rects)? {
        let j = atom.total_jump();
        let mut hit = false;
        for (r, c) in rects.iter().zip(counts.iter_mut()) {
            if r.matches(atom.loc, j, ordinal) {
                if hit {
                    return Err(Error::OverlappingRectangles { time: atom.loc });
                }
                hit = true;
                *c += 1;
            }
        }
    }
    Ok(counts)
}

/// Unit mass at each of the given points: measures count membership.
pub fn counting_family(points: &[f64]) -> Result<WeightFamily> {
    let mut entries = Vec::with_capacity(points.len());
    for &p in points {
        entries.push((IndexKey::real(p)?, 1.0));
    }
    let family = WeightFamily::Explicit(entries);
    let problems = family.problems();
    if !problems.is_empty() {
        return Err(Error::InvalidModel { reason: problems.join("; ") });
    }
    Ok(family)
}

/// A single unit mass: measures are indicators of membership.
pub fn dirac_family(point: f64) -> Result<WeightFamily> {
    Ok(WeightFamily::Explicit(vec![(IndexKey::real(point)?, 1.0)]))
}

/// The measure a weight family assigns to an index set: the unordered sum
/// of the weights inside it.
pub fn family_measure(family: &WeightFamily, set: &IndexSetExpr) -> Result<SumResult> {
    family.restrict(set)?.sum()
}

/// The cumulative jump function of a nonnegative weight family on
/// `[0, inf)`: value at `t` is the total weight at keys `<= t`. Each
/// weighted key becomes an atom with the whole displacement on the left,
/// so the result is right-continuous and its jump at `s` recovers the
/// weight there exactly.
pub fn cumulative_jump_function(family: &WeightFamily) -> Result<RegulatedFn> {
    let train = match family {
        WeightFamily::Explicit(entries) => JumpTrain::Explicit(explicit_atoms(entries)?),
        WeightFamily::Generated(g) => {
            if !g.masks.is_empty() {
                return Err(Error::InvalidModel {
                    reason: "cumulative function of a restricted generated family is not supported"
                        .into(),
                });
            }
            if g.rule.divergent() {
                return Err(Error::NotSummable);
            }
            match &g.rule {
                FamilyRule::Geometric { ratio } => generated_train(TrainRule::Geometric { ratio: *ratio }),
                FamilyRule::Power { exponent } => generated_train(TrainRule::Power { exponent: *exponent }),
                FamilyRule::Table { entries } => JumpTrain::Explicit(explicit_atoms(entries)?),
                FamilyRule::Harmonic | FamilyRule::Combine { .. } => {
                    return Err(Error::InvalidModel {
                        reason: "no cumulative-function form for this rule".into(),
                    })
                }
            }
        }
    };
    Ok(RegulatedFn::new(
        IntervalSpec::non_negative(),
        ContinuousBase::zero(),
        train,
    ))
}

fn generated_train(rule: TrainRule) -> JumpTrain {
    // The family rules and train rules share their key scheme, so the
    // mirror is the same rule with the displacement moved into the left
    // gap (right-continuity).
    JumpTrain::Generated(GeneratedTrain::new(rule).collapse_left())
}

fn explicit_atoms(entries: &[(IndexKey, f64)]) -> Result<Vec<JumpAtom>> {
    let mut atoms = Vec::new();
    for (key, w) in entries {
        let loc = key.as_real().ok_or_else(|| Error::InvalidModel {
            reason: format!("key {key} is not a time point"),
        })?;
        if !(loc > 0.0) {
            return Err(Error::InvalidModel {
                reason: format!("time keys must be strictly positive, got {loc}"),
            });
        }
        if *w < 0.0 || !w.is_finite() {
            return Err(Error::InvalidModel {
                reason: format!("weights must be finite and nonnegative, got {w} at {key}"),
            });
        }
        if *w > 0.0 {
            atoms.push(JumpAtom::new(loc, *w, 0.0));
        }
    }
    atoms.sort_by(|a, b| a.loc.total_cmp(&b.loc));
    for pair in atoms.windows(2) {
        if pair[0].loc == pair[1].loc {
            return Err(Error::InvalidModel {
                reason: format!("duplicate time key {}", pair[0].loc),
            });
        }
    }
    Ok(atoms)
}

/// Countability witness: the members of weight at least `1/depth`,
/// grouped into size layers (layer 1 holds weights `>= 1`, layer `m+1`
/// holds `[1/(m+1), 1/m)`). Every layer is finite — including for
/// divergent families — which exhibits the support as a countable union
/// of finite sets.
pub fn sigma_finite_witness(
    family: &WeightFamily,
    depth: u64,
) -> Result<Vec<(u64, Vec<IndexKey>)>> {
    if depth == 0 {
        return Err(Error::InvalidModel { reason: "witness depth must be positive".into() });
    }
    let mut layers: Vec<(u64, Vec<IndexKey>)> = Vec::new();
    for (key, w) in family.members_at_least(1.0 / depth as f64)? {
        let m = bucket_of_jump_size(w);
        match layers.binary_search_by_key(&m, |l| l.0) {
            Ok(i) => layers[i].1.push(key),
            Err(i) => layers.insert(i, (m, vec![key])),
        }
    }
    Ok(layers)
}
