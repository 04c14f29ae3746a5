//! Unordered sums over countable weight families.
//!
//! A weight family assigns a real weight to each key of a countable index
//! set. Sums are *unordered*: every result is either a certified finite
//! value with an explicit error bound, or a divergence verdict — never an
//! order-dependent partial answer. Generated families come from rules with
//! closed-form tail certificates; enumeration stops once the certificate
//! meets the requested tolerance (or the term budget, in which case the
//! larger achieved bound is reported honestly).

use ordered_float::NotNan;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index_set::{IndexKey, IndexSetExpr};
use crate::kahan::KahanSum;
use crate::{DEFAULT_TOLERANCE, DIVERGENCE_THRESHOLD, MAX_GENERATED_TERMS};

/// Outcome of an unordered sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SumResult {
    /// Converged: `value` is within `error` of the true sum.
    Finite { value: f64, error: f64 },
    /// Certified divergent, or magnitude beyond the divergence threshold.
    Infinite,
}

impl SumResult {
    pub fn value(&self) -> Option<f64> {
        match self {
            SumResult::Finite { value, .. } => Some(*value),
            SumResult::Infinite => None,
        }
    }

    /// The value and error of a finite result; panics on `Infinite`.
    /// Intended for tests and examples where finiteness is already known.
    pub fn unwrap_finite(&self) -> (f64, f64) {
        match self {
            SumResult::Finite { value, error } => (*value, *error),
            SumResult::Infinite => panic!("sum is infinite"),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SumResult::Infinite)
    }
}

/// Generation rule for a countable weight family. Members are indexed by
/// ordinals `k = 1, 2, ...`; each rule fixes the key and weight of member
/// `k` and a closed-form bound on the total absolute weight past `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum FamilyRule {
    /// Weight `ratio^k` at the key `1 - ratio^k`.
    Geometric { ratio: f64 },
    /// Weight `k^-exponent` at the key `1 - 1/(k+1)`. Divergent for
    /// `exponent <= 1`.
    Power { exponent: f64 },
    /// Weight `1/k` at the key `k`. The canonical certified-divergent
    /// family.
    Harmonic,
    /// A finite list of members carried on the ordinal domain (so stride
    /// sets and combinations apply); ordinals past the list weigh zero.
    Table { entries: Vec<(IndexKey, f64)> },
    /// Member-wise `alpha * left + beta * right` on the shared ordinal
    /// domain, keyed by the ordinal itself.
    Combine {
        alpha: f64,
        left: Box<GeneratedFamily>,
        beta: f64,
        right: Box<GeneratedFamily>,
    },
}

impl FamilyRule {
    /// Key and weight of member `k >= 1`.
    pub fn member(&self, k: u64) -> (IndexKey, f64) {
        debug_assert!(k >= 1);
        match self {
            FamilyRule::Geometric { ratio } => {
                let w = ratio.powi(k as i32);
                (real_key(1.0 - w), w)
            }
            FamilyRule::Power { exponent } => {
                (real_key(1.0 - 1.0 / (k as f64 + 1.0)), (k as f64).powf(-exponent))
            }
            FamilyRule::Harmonic => (real_key(k as f64), 1.0 / k as f64),
            FamilyRule::Table { entries } => match entries.get(k as usize - 1) {
                Some((key, w)) => (key.clone(), *w),
                None => (real_key(k as f64), 0.0),
            },
            FamilyRule::Combine { alpha, left, beta, right } => {
                let mut w = 0.0;
                if *alpha != 0.0 {
                    w += alpha * left.masked_member(k).1;
                }
                if *beta != 0.0 {
                    w += beta * right.masked_member(k).1;
                }
                (real_key(k as f64), w)
            }
        }
    }

    /// Upper bound on the total absolute weight of members past `k = n`;
    /// infinite exactly for certified-divergent rules. Closed forms are
    /// evaluated in `f64` (bound up to ordinary rounding).
    pub fn tail_mass(&self, n: u64) -> f64 {
        match self {
            FamilyRule::Geometric { ratio } => ratio.powi(n as i32 + 1) / (1.0 - ratio),
            FamilyRule::Power { exponent } => {
                if *exponent <= 1.0 {
                    f64::INFINITY
                } else if n == 0 {
                    1.0 + 1.0 / (exponent - 1.0)
                } else {
                    (n as f64).powf(1.0 - exponent) / (exponent - 1.0)
                }
            }
            FamilyRule::Harmonic => f64::INFINITY,
            FamilyRule::Table { entries } => {
                entries.iter().skip(n as usize).map(|(_, w)| w.abs()).sum()
            }
            FamilyRule::Combine { alpha, left, beta, right } => {
                let mut t = 0.0;
                if *alpha != 0.0 {
                    t += alpha.abs() * left.rule.tail_mass(n);
                }
                if *beta != 0.0 {
                    t += beta.abs() * right.rule.tail_mass(n);
                }
                t
            }
        }
    }

    /// Whether the total absolute weight is certified infinite.
    pub fn divergent(&self) -> bool {
        self.tail_mass(0).is_infinite()
    }

    /// An ordinal `N` such that every member past `N` has absolute weight
    /// `< eps`. May overshoot; callers re-test each member. `None` when no
    /// such bound exists (never for the shipped rules with `eps > 0`).
    pub fn weight_cutoff(&self, eps: f64) -> Option<u64> {
        debug_assert!(eps > 0.0);
        match self {
            FamilyRule::Geometric { ratio } => {
                let mut k = 0u64;
                while ratio.powi(k as i32 + 1) >= eps && k < MAX_GENERATED_TERMS {
                    k += 1;
                }
                Some(k)
            }
            FamilyRule::Power { exponent } => {
                let candidate = eps.powf(-1.0 / exponent) + 4.0;
                let mut k = if candidate.is_finite() && candidate >= 6.0 {
                    (candidate as u64).saturating_sub(5)
                } else {
                    0
                };
                while (k as f64 + 1.0).powf(-exponent) >= eps && k < MAX_GENERATED_TERMS {
                    k += 1;
                }
                Some(k)
            }
            FamilyRule::Harmonic => {
                let mut k = (1.0 / eps).min(MAX_GENERATED_TERMS as f64) as u64;
                k = k.saturating_sub(2);
                while 1.0 / (k as f64 + 1.0) >= eps && k < MAX_GENERATED_TERMS {
                    k += 1;
                }
                Some(k)
            }
            FamilyRule::Table { entries } => Some(entries.len() as u64),
            FamilyRule::Combine { alpha, left, beta, right } => {
                // |a*l + b*r| >= eps forces one side past eps/2 (scaled).
                let mut cut = 0u64;
                for (c, side) in [(alpha, left), (beta, right)] {
                    if *c != 0.0 {
                        cut = cut.max(side.rule.weight_cutoff(eps / (2.0 * c.abs()))?);
                    }
                }
                Some(cut)
            }
        }
    }

    /// The smallest term count whose tail certificate meets `tol`, found
    /// by binary search on the nonincreasing tail bound; clamped to the
    /// term budget when `tol` is out of reach.
    pub fn terms_for_tol(&self, tol: f64) -> u64 {
        if self.tail_mass(MAX_GENERATED_TERMS) > tol {
            return MAX_GENERATED_TERMS;
        }
        let (mut lo, mut hi) = (0u64, MAX_GENERATED_TERMS);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.tail_mass(mid) > tol {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Structural problems with the rule parameters.
    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            FamilyRule::Geometric { ratio } => {
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    out.push(format!("geometric ratio must lie in (0,1), got {ratio}"));
                }
            }
            FamilyRule::Power { exponent } => {
                if !(*exponent > 0.0) {
                    out.push(format!("power exponent must be positive, got {exponent}"));
                }
            }
            FamilyRule::Harmonic => {}
            FamilyRule::Table { entries } => {
                for (key, w) in entries {
                    if !w.is_finite() {
                        out.push(format!("non-finite weight at {key}"));
                    }
                }
            }
            FamilyRule::Combine { alpha, left, beta, right } => {
                for c in [alpha, beta] {
                    if !c.is_finite() {
                        out.push(format!("non-finite coefficient {c}"));
                    }
                }
                out.extend(left.rule.problems());
                out.extend(right.rule.problems());
            }
        }
        out
    }
}

fn real_key(x: f64) -> IndexKey {
    IndexKey::Real(NotNan::new(x).expect("rule keys are never NaN"))
}

/// A rule together with restriction masks. A member survives when every
/// mask contains its key (with its generation ordinal); excluded members
/// weigh zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedFamily {
    #[serde(flatten)]
    pub rule: FamilyRule,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub masks: Vec<IndexSetExpr>,
}

impl GeneratedFamily {
    pub fn new(rule: FamilyRule) -> Self {
        GeneratedFamily { rule, masks: Vec::new() }
    }

    /// Key and post-mask weight of member `k`.
    pub fn masked_member(&self, k: u64) -> (IndexKey, f64) {
        let (key, w) = self.rule.member(k);
        if self.masks.iter().all(|m| m.contains(&key, Some(k))) {
            (key, w)
        } else {
            (key, 0.0)
        }
    }

    fn sum_with_tol(&self, tol: f64) -> Result<SumResult> {
        if self.rule.divergent() {
            // Masks can only shrink a family; without them the rule's own
            // divergence certificate decides. With them no tail bound for
            // the restricted family exists.
            return if self.masks.is_empty() {
                Ok(SumResult::Infinite)
            } else {
                Err(Error::MissingTailBound)
            };
        }
        let stop = self.rule.terms_for_tol(tol);
        let mut acc = KahanSum::new();
        for k in 1..=stop {
            acc.add(self.masked_member(k).1);
            if acc.value().abs() > DIVERGENCE_THRESHOLD {
                return Ok(SumResult::Infinite);
            }
        }
        Ok(SumResult::Finite { value: acc.value(), error: self.rule.tail_mass(stop) })
    }

    /// Members with nonzero weight, enumerated until the tail certificate
    /// reaches `tol`.
    fn materialize(&self, tol: f64) -> Result<Vec<(IndexKey, u64, f64)>> {
        if self.rule.divergent() {
            return Err(Error::MissingTailBound);
        }
        let mut out = Vec::new();
        for k in 1..=self.rule.terms_for_tol(tol) {
            let (key, w) = self.masked_member(k);
            if w != 0.0 {
                out.push((key, k, w));
            }
        }
        Ok(out)
    }
}

/// A countable family of weighted keys.
///
/// JSON forms: `{"explicit": [["s1", 0.5], [1.5, 0.25]]}` or
/// `{"generated": {"rule": "geometric", "ratio": 0.5}}` (with optional
/// `"masks"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightFamily {
    Explicit(Vec<(IndexKey, f64)>),
    Generated(GeneratedFamily),
}

impl WeightFamily {
    pub fn explicit(entries: Vec<(IndexKey, f64)>) -> Self {
        WeightFamily::Explicit(entries)
    }

    pub fn generated(rule: FamilyRule) -> Self {
        WeightFamily::Generated(GeneratedFamily::new(rule))
    }

    /// The unordered sum at the default tolerance.
    pub fn sum(&self) -> Result<SumResult> {
        self.sum_with_tol(DEFAULT_TOLERANCE)
    }

    /// The unordered sum: a finite value with a certified truncation bound
    /// (zero for explicit families), or a divergence verdict.
    pub fn sum_with_tol(&self, tol: f64) -> Result<SumResult> {
        if !(tol > 0.0) {
            return Err(Error::NonpositiveTolerance { tol });
        }
        match self {
            WeightFamily::Explicit(entries) => {
                let mut acc = KahanSum::new();
                for (_, w) in entries {
                    acc.add(*w);
                    if acc.value().abs() > DIVERGENCE_THRESHOLD {
                        return Ok(SumResult::Infinite);
                    }
                }
                Ok(SumResult::Finite { value: acc.value(), error: 0.0 })
            }
            WeightFamily::Generated(g) => g.sum_with_tol(tol),
        }
    }

    /// The family restricted to `set`: weights outside it vanish. Explicit
    /// families filter eagerly; generated families stack a mask.
    pub fn restrict(&self, set: &IndexSetExpr) -> Result<WeightFamily> {
        set.validate()?;
        match self {
            WeightFamily::Explicit(entries) => Ok(WeightFamily::Explicit(
                entries.iter().filter(|(k, _)| set.contains(k, None)).cloned().collect(),
            )),
            WeightFamily::Generated(g) => {
                let mut masks = g.masks.clone();
                masks.push(set.clone());
                Ok(WeightFamily::Generated(GeneratedFamily { rule: g.rule.clone(), masks }))
            }
        }
    }

    /// Sum the family over each cell of a partition, splitting the
    /// tolerance across cells. Cells must be pairwise disjoint over the
    /// family's (materialized) members.
    pub fn partition_sum(&self, cells: &[IndexSetExpr], tol: f64) -> Result<Vec<f64>> {
        if !(tol > 0.0) {
            return Err(Error::NonpositiveTolerance { tol });
        }
        for cell in cells {
            cell.validate()?;
        }
        let cell_tol = tol / cells.len().max(1) as f64;
        for (key, ordinal, _) in self.members_with_ordinals(cell_tol)? {
            let hits = cells.iter().filter(|c| c.contains(&key, ordinal)).count();
            if hits > 1 {
                return Err(Error::OverlappingCells { index: key.to_string() });
            }
        }
        let mut out = Vec::with_capacity(cells.len());
        for cell in cells {
            match self.restrict(cell)?.sum_with_tol(cell_tol)? {
                SumResult::Finite { value, .. } => out.push(value),
                SumResult::Infinite => return Err(Error::NotSummable),
            }
        }
        Ok(out)
    }

    /// Keys whose weight is at least `1/n`, with the cardinality bound
    /// `floor(n * total)` certified by the family's total weight. Requires
    /// a summable family with nonnegative weights.
    pub fn support_at_least(&self, n: u64) -> Result<(Vec<IndexKey>, u64)> {
        if n == 0 {
            return Err(Error::InvalidModel { reason: "support level must be positive".into() });
        }
        // The bound only needs an upper estimate of the total, so a coarse
        // tolerance keeps heavy-tailed rules cheap.
        let total = match self.sum_with_tol(1e-6)? {
            SumResult::Finite { value, error } => value + error,
            SumResult::Infinite => return Err(Error::NotSummable),
        };
        let members = self
            .members_at_least(1.0 / n as f64)?
            .into_iter()
            .map(|(key, _)| key)
            .collect();
        // Counting bound: each member weighs at least 1/n, so at most
        // n * total of them fit. Tiny inflation absorbs f64 rounding.
        let bound = (n as f64 * total * (1.0 + 1e-12)).floor();
        Ok((members, bound as u64))
    }

    /// Members whose weight reaches `thresh`, sorted by key. Requires
    /// nonnegative weights.
    pub(crate) fn members_at_least(&self, thresh: f64) -> Result<Vec<(IndexKey, f64)>> {
        debug_assert!(thresh > 0.0);
        let mut members = Vec::new();
        let mut check = |key: IndexKey, w: f64| -> Result<()> {
            if w < 0.0 {
                return Err(Error::InvalidModel {
                    reason: format!("negative weight at {key} in a support query"),
                });
            }
            if w >= thresh {
                members.push((key, w));
            }
            Ok(())
        };
        match self {
            WeightFamily::Explicit(entries) => {
                for (key, w) in entries {
                    check(key.clone(), *w)?;
                }
            }
            WeightFamily::Generated(g) => {
                let cutoff = g
                    .rule
                    .weight_cutoff(thresh)
                    .ok_or(Error::UnboundedWindowWithoutCertificate)?;
                for k in 1..=cutoff {
                    let (key, w) = g.masked_member(k);
                    check(key, w)?;
                }
            }
        }
        members.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(members)
    }

    /// Members as `(key, ordinal, weight)` with nonzero weight; ordinals
    /// only for generated families.
    fn members_with_ordinals(&self, tol: f64) -> Result<Vec<(IndexKey, Option<u64>, f64)>> {
        match self {
            WeightFamily::Explicit(entries) => Ok(entries
                .iter()
                .filter(|(_, w)| *w != 0.0)
                .map(|(k, w)| (k.clone(), None, *w))
                .collect()),
            WeightFamily::Generated(g) => Ok(g
                .materialize(tol)?
                .into_iter()
                .map(|(k, n, w)| (k, Some(n), w))
                .collect()),
        }
    }

    /// Structural problems: non-finite weights, duplicate keys, bad rule
    /// parameters.
    pub fn problems(&self) -> Vec<String> {
        match self {
            WeightFamily::Explicit(entries) => {
                let mut out = Vec::new();
                let mut keys: Vec<&IndexKey> = entries.iter().map(|(k, _)| k).collect();
                keys.sort();
                for pair in keys.windows(2) {
                    if pair[0] == pair[1] {
                        out.push(format!("duplicate key {}", pair[0]));
                    }
                }
                out.dedup();
                for (key, w) in entries {
                    if !w.is_finite() {
                        out.push(format!("non-finite weight at {key}"));
                    }
                }
                out
            }
            WeightFamily::Generated(g) => g.rule.problems(),
        }
    }
}

/// The conical combination `alpha * left + beta * right`. Both families
/// must live on the same index domain: two explicit families with equal
/// key sets combine weight-by-key; two generated families combine
/// member-by-ordinal. Coefficients must be nonnegative, preserving
/// nonnegative families.
pub fn linear_combine(
    alpha: f64,
    left: &WeightFamily,
    beta: f64,
    right: &WeightFamily,
) -> Result<WeightFamily> {
    for c in [alpha, beta] {
        if c < 0.0 {
            return Err(Error::NegativeCoefficient { coefficient: c });
        }
        if !c.is_finite() {
            return Err(Error::InvalidModel { reason: format!("non-finite coefficient {c}") });
        }
    }
    match (left, right) {
        (WeightFamily::Explicit(a), WeightFamily::Explicit(b)) => {
            let mut a: Vec<(IndexKey, f64)> = a.clone();
            let mut b: Vec<(IndexKey, f64)> = b.clone();
            a.sort_by(|x, y| x.0.cmp(&y.0));
            b.sort_by(|x, y| x.0.cmp(&y.0));
            let keys_match =
                a.len() == b.len() && a.iter().zip(&b).all(|((ka, _), (kb, _))| ka == kb);
            if !keys_match {
                return Err(Error::MismatchedDomains {
                    detail: "explicit families must share their key set".into(),
                });
            }
            Ok(WeightFamily::Explicit(
                a.into_iter()
                    .zip(b)
                    .map(|((key, wa), (_, wb))| (key, alpha * wa + beta * wb))
                    .collect(),
            ))
        }
        (WeightFamily::Generated(l), WeightFamily::Generated(r)) => {
            Ok(WeightFamily::Generated(GeneratedFamily::new(FamilyRule::Combine {
                alpha,
                left: Box::new(l.clone()),
                beta,
                right: Box::new(r.clone()),
            })))
        }
        _ => Err(Error::MismatchedDomains {
            detail: "cannot combine a finite explicit family with a generated one".into(),
        }),
    }
}

/// A doubly indexed family, summed one index at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DoubleSeriesSpec {
    /// Term `row_ratio^r * col_ratio^c` over `r, c >= 1`.
    ProductGeometric { row_ratio: f64, col_ratio: f64 },
    /// The identically-zero family.
    Zero,
    /// A finite table of terms (row-major; ragged rows read as zero),
    /// with `beyond` bounding the absolute mass outside the table.
    Table {
        terms: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beyond: Option<f64>,
    },
}

/// Which index the iterated double sum exhausts first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumOrder {
    RowsFirst,
    ColsFirst,
}

/// Iterated sum of a double series in the given order. Summable double
/// families give the same answer in both orders, within the reported
/// errors.
pub fn sum_double(spec: &DoubleSeriesSpec, order: SumOrder, tol: f64) -> Result<SumResult> {
    if !(tol > 0.0) {
        return Err(Error::NonpositiveTolerance { tol });
    }
    match spec {
        DoubleSeriesSpec::Zero => Ok(SumResult::Finite { value: 0.0, error: 0.0 }),
        DoubleSeriesSpec::Table { terms, beyond } => {
            let bound = beyond.ok_or(Error::MissingTailBound)?;
            if !(bound >= 0.0) {
                return Err(Error::InvalidModel {
                    reason: format!("table tail bound must be nonnegative, got {bound}"),
                });
            }
            let cols = terms.iter().map(Vec::len).max().unwrap_or(0);
            let mut outer = KahanSum::new();
            match order {
                SumOrder::RowsFirst => {
                    for row in terms {
                        let mut inner = KahanSum::new();
                        for x in row {
                            inner.add(*x);
                        }
                        outer.add(inner.value());
                    }
                }
                SumOrder::ColsFirst => {
                    for c in 0..cols {
                        let mut inner = KahanSum::new();
                        for row in terms {
                            inner.add(row.get(c).copied().unwrap_or(0.0));
                        }
                        outer.add(inner.value());
                    }
                }
            }
            Ok(SumResult::Finite { value: outer.value(), error: bound })
        }
        DoubleSeriesSpec::ProductGeometric { row_ratio, col_ratio } => {
            for r in [row_ratio, col_ratio] {
                if !(*r > 0.0 && *r < 1.0) {
                    return Err(Error::InvalidModel {
                        reason: format!("product ratios must lie in (0,1), got {r}"),
                    });
                }
            }
            let (outer_ratio, inner_ratio) = match order {
                SumOrder::RowsFirst => (*row_ratio, *col_ratio),
                SumOrder::ColsFirst => (*col_ratio, *row_ratio),
            };
            // Each outer term is outer_ratio^i times the same inner sum;
            // the inner truncation error is amplified by the outer total.
            let outer_total_bound = outer_ratio / (1.0 - outer_ratio);
            let inner_tol = tol / (4.0 * outer_total_bound.max(1.0));
            let inner_rule = FamilyRule::Geometric { ratio: inner_ratio };
            let mut inner = KahanSum::new();
            let m = inner_rule.terms_for_tol(inner_tol);
            for k in 1..=m {
                inner.add(inner_rule.member(k).1);
            }
            let inner_err = inner_rule.tail_mass(m);
            let inner_bound = inner.value() + inner_err;

            let mut outer = KahanSum::new();
            let outer_rule = FamilyRule::Geometric { ratio: outer_ratio };
            let n = outer_rule.terms_for_tol(tol / (2.0 * inner_bound.max(f64::MIN_POSITIVE)));
            for k in 1..=n {
                outer.add(outer_rule.member(k).1 * inner.value());
            }
            let achieved =
                outer_rule.tail_mass(n) * inner_bound + inner_err * outer_total_bound;
            Ok(SumResult::Finite { value: outer.value(), error: achieved })
        }
    }
}
