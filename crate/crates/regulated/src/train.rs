//! Jump trains: where a regulated function jumps and by how much.
//!
//! A train is either an explicit, strictly ordered list of atoms or a
//! generated rule producing countably many atoms together with two
//! certificates: a tail-mass bound (the absolute gap mass past the first `n`
//! atoms) and a level cutoff (an index past which every atom is smaller than
//! a given threshold). All window scans and partial sums are driven by those
//! certificates, never by ad-hoc truncation.

use serde::{Deserialize, Serialize};

use crate::interval::IntervalSpec;
use crate::kahan::KahanSum;

/// Ceiling on lazily enumerated rule terms. When a rule's tail bound cannot
/// reach the requested tolerance within this many terms, partial sums stop
/// and report the tolerance actually achieved instead of looping without
/// bound.
pub const MAX_GENERATED_TERMS: u64 = 2_000_000;

/// One two-sided discontinuity.
///
/// `left_gap` is `f(loc) - f(loc-)`, `right_gap` is `f(loc+) - f(loc)`.
/// The total jump across the point is their sum. An atom with both gaps
/// zero is degenerate (no discontinuity) and is rejected by validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpAtom {
    pub loc: f64,
    pub left_gap: f64,
    pub right_gap: f64,
}

impl JumpAtom {
    pub fn new(loc: f64, left_gap: f64, right_gap: f64) -> Self {
        JumpAtom {
            loc,
            left_gap,
            right_gap,
        }
    }

    /// `f(loc+) - f(loc-)`, the jump across the point.
    pub fn total_jump(&self) -> f64 {
        self.left_gap + self.right_gap
    }

    /// `|left_gap| + |right_gap|`, the absolute gap mass. Dominates
    /// `|total_jump|`, so every tail bound stated in mass also bounds jumps.
    pub fn abs_mass(&self) -> f64 {
        self.left_gap.abs() + self.right_gap.abs()
    }

    pub fn is_degenerate(&self) -> bool {
        self.left_gap == 0.0 && self.right_gap == 0.0
    }

    /// Atom of the mirrored function `s -> f(-s)`: the location negates and
    /// the gaps swap roles. Exact in f64.
    pub fn reflected(&self) -> JumpAtom {
        JumpAtom {
            loc: -self.loc,
            left_gap: self.right_gap,
            right_gap: self.left_gap,
        }
    }
}

/// Pointwise atom transform applied lazily to generated rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomOp {
    /// Mirror the atom across zero (location negates, gaps swap).
    Reflect,
    /// Move the whole displacement into the left gap: `(l+r, 0)`. The
    /// transformed function takes its right-limit value everywhere.
    CollapseLeft,
    /// Move the whole displacement into the right gap: `(0, l+r)`. The
    /// transformed function takes its left-limit value everywhere.
    CollapseRight,
}

impl AtomOp {
    fn apply(self, a: JumpAtom) -> JumpAtom {
        match self {
            AtomOp::Reflect => a.reflected(),
            AtomOp::CollapseLeft => JumpAtom::new(a.loc, a.total_jump(), 0.0),
            AtomOp::CollapseRight => JumpAtom::new(a.loc, 0.0, a.total_jump()),
        }
    }
}

/// Closed-form rules generating countably many atoms, `k = 1, 2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "params", rename_all = "snake_case")]
pub enum TrainRule {
    /// Atom `k` sits at `1 - ratio^k` with right gap `ratio^k`. The atoms
    /// accumulate at 1 from the left; `0 < ratio < 1`.
    Geometric { ratio: f64 },
    /// Atom `k` sits at `1 - 1/(k+1)` with right gap `k^-exponent`;
    /// `exponent > 1` keeps the gap mass summable.
    Power { exponent: f64 },
}

impl TrainRule {
    /// The untransformed atom `k >= 1`.
    pub fn raw_atom(&self, k: u64) -> JumpAtom {
        match *self {
            TrainRule::Geometric { ratio } => {
                let gap = ratio.powi(k as i32);
                JumpAtom::new(1.0 - gap, 0.0, gap)
            }
            TrainRule::Power { exponent } => {
                let gap = (k as f64).powf(-exponent);
                JumpAtom::new(1.0 - 1.0 / (k as f64 + 1.0), 0.0, gap)
            }
        }
    }

    /// Upper bound on the absolute gap mass of all atoms past index `n`.
    /// Nonincreasing in `n`; finite for both rules. The closed form is
    /// evaluated in `f64`, so the bound holds up to ordinary rounding —
    /// negligible against every tolerance this crate works at.
    pub fn tail_mass(&self, n: u64) -> f64 {
        match *self {
            TrainRule::Geometric { ratio } => ratio.powi(n as i32 + 1) / (1.0 - ratio),
            TrainRule::Power { exponent } => {
                if n == 0 {
                    // sum_{k>=1} k^-p <= 1 + integral_1^inf x^-p dx
                    1.0 + 1.0 / (exponent - 1.0)
                } else {
                    // sum_{k>n} k^-p <= integral_n^inf x^-p dx
                    (n as f64).powf(1.0 - exponent) / (exponent - 1.0)
                }
            }
        }
    }

    /// Least upper bound of the raw atom locations — the accumulation
    /// point of the rule.
    pub fn loc_supremum(&self) -> f64 {
        match *self {
            TrainRule::Geometric { .. } | TrainRule::Power { .. } => 1.0,
        }
    }

    /// An index `N` such that every atom past `N` has absolute mass `< eps`.
    /// The bound may overshoot; callers re-test each enumerated atom, so it
    /// only needs to be a superset certificate.
    pub fn level_cutoff(&self, eps: f64) -> Option<u64> {
        match *self {
            TrainRule::Geometric { ratio } => {
                let mut k = 0u64;
                while ratio.powi(k as i32 + 1) >= eps {
                    k += 1;
                    if k >= MAX_GENERATED_TERMS {
                        break;
                    }
                }
                Some(k)
            }
            TrainRule::Power { exponent } => {
                let candidate = eps.powf(-1.0 / exponent);
                if candidate.is_finite() {
                    Some(candidate.ceil() as u64 + 4)
                } else {
                    Some(MAX_GENERATED_TERMS)
                }
            }
        }
    }

    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        match *self {
            TrainRule::Geometric { ratio } => {
                if !(ratio > 0.0 && ratio < 1.0) {
                    out.push(format!("geometric ratio must lie in (0, 1), got {ratio}"));
                }
            }
            TrainRule::Power { exponent } => {
                if !(exponent > 1.0) {
                    out.push(format!(
                        "power exponent must exceed 1 for summable gap mass, got {exponent}"
                    ));
                }
            }
        }
        out
    }
}

/// A generated train: a rule plus the lazily applied atom transforms that
/// reflection and one-sided derivation accumulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedTrain {
    #[serde(flatten)]
    pub rule: TrainRule,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ops: Vec<AtomOp>,
}

impl GeneratedTrain {
    pub fn new(rule: TrainRule) -> Self {
        GeneratedTrain { rule, ops: Vec::new() }
    }

    /// Atom `k` after the transform pipeline.
    pub fn atom(&self, k: u64) -> JumpAtom {
        let mut a = self.rule.raw_atom(k);
        for op in &self.ops {
            a = op.apply(a);
        }
        a
    }

    /// Tail bounds survive every transform: reflection preserves mass and
    /// collapsing can only shrink it.
    pub fn tail_mass(&self, n: u64) -> f64 {
        self.rule.tail_mass(n)
    }

    pub fn level_cutoff(&self, eps: f64) -> Option<u64> {
        self.rule.level_cutoff(eps)
    }

    fn push_op(&self, op: AtomOp) -> Self {
        let mut ops = self.ops.clone();
        match (ops.last(), op) {
            // Two mirrors cancel exactly.
            (Some(AtomOp::Reflect), AtomOp::Reflect) => {
                ops.pop();
            }
            // A collapse overwrites an adjacent earlier collapse: both read
            // only the total jump, which the earlier collapse preserved.
            (Some(AtomOp::CollapseLeft | AtomOp::CollapseRight), AtomOp::CollapseLeft)
            | (Some(AtomOp::CollapseLeft | AtomOp::CollapseRight), AtomOp::CollapseRight) => {
                ops.pop();
                ops.push(op);
            }
            _ => ops.push(op),
        }
        GeneratedTrain { rule: self.rule.clone(), ops }
    }

    pub fn reflect(&self) -> Self {
        self.push_op(AtomOp::Reflect)
    }

    /// Whether the pipeline mirrors the time axis (odd number of
    /// reflections); only reflections move atom locations.
    pub fn is_reflected(&self) -> bool {
        self.ops.iter().filter(|o| matches!(o, AtomOp::Reflect)).count() % 2 == 1
    }

    pub fn collapse_left(&self) -> Self {
        self.push_op(AtomOp::CollapseLeft)
    }

    pub fn collapse_right(&self) -> Self {
        self.push_op(AtomOp::CollapseRight)
    }

    /// Which side of each atom carries the displacement after the pipeline.
    /// `(all_left_gap_zero, all_right_gap_zero)` — the raw rules put the
    /// whole gap on the right.
    pub fn sidedness(&self) -> (bool, bool) {
        // State: does the displacement sit in the right gap (raw) or left?
        let mut right_side = true;
        for op in &self.ops {
            right_side = match op {
                AtomOp::Reflect => !right_side,
                AtomOp::CollapseLeft => false,
                AtomOp::CollapseRight => true,
            };
        }
        if right_side {
            (true, false)
        } else {
            (false, true)
        }
    }

    /// Enumerate every atom whose absolute mass could reach `eps`, apply the
    /// pipeline, and keep non-degenerate atoms; sorted by location.
    pub fn atoms_with_mass_at_least(&self, eps: f64) -> Vec<JumpAtom> {
        let cutoff = self.level_cutoff(eps).unwrap_or(MAX_GENERATED_TERMS);
        let mut out = Vec::new();
        for k in 1..=cutoff {
            let a = self.atom(k);
            if a.is_degenerate() {
                continue;
            }
            if a.abs_mass() >= eps {
                out.push(a);
            }
        }
        out.sort_by(|x, y| x.loc.total_cmp(&y.loc));
        out
    }

    /// Accumulate `total_jump` over atoms selected by `keep`, stopping once
    /// the tail bound reaches `tol` (or the term ceiling). Returns the
    /// compensated sum and the tail bound actually achieved.
    pub fn sum_jumps_where(&self, tol: f64, mut keep: impl FnMut(&JumpAtom) -> bool) -> (f64, f64) {
        let mut acc = KahanSum::new();
        let mut n = 0u64;
        while self.tail_mass(n) > tol && n < MAX_GENERATED_TERMS {
            n += 1;
            let a = self.atom(n);
            if !a.is_degenerate() && keep(&a) {
                acc.add(a.total_jump());
            }
        }
        (acc.value(), self.tail_mass(n))
    }

    /// Find the unique atom at exactly `t`, if one exists. Enumeration stops
    /// when raw locations stop strictly increasing (the representable run-up
    /// to the accumulation point is exhausted), when the gap mass underflows,
    /// or once the transformed locations have passed `t`.
    pub fn find_atom(&self, t: f64) -> Option<JumpAtom> {
        // Only a reflection moves locations, so transformed locations run
        // monotonically: increasing raw, decreasing after an odd number of
        // reflections.
        let reflected = self.is_reflected();
        // Nothing to find at or past the accumulation point.
        let sup = self.rule.loc_supremum();
        if (!reflected && t >= sup) || (reflected && t <= -sup) {
            return None;
        }
        let mut prev_raw_loc = f64::NEG_INFINITY;
        for k in 1..=MAX_GENERATED_TERMS {
            let raw = self.rule.raw_atom(k);
            if raw.abs_mass() == 0.0 || raw.loc <= prev_raw_loc {
                return None;
            }
            prev_raw_loc = raw.loc;
            let a = self.atom(k);
            if a.loc == t {
                // Where the rounded locations saturate, infinitely many
                // later atoms share this value: that is the accumulation
                // point of the rule, not an atom.
                if self.rule.raw_atom(k + 1).loc <= raw.loc {
                    return None;
                }
                return if a.is_degenerate() { None } else { Some(a) };
            }
            if (!reflected && a.loc > t) || (reflected && a.loc < t) {
                return None;
            }
        }
        None
    }
}

/// The discontinuity part of a regulated function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JumpTrain {
    /// Finitely many atoms, strictly increasing in location.
    Explicit(Vec<JumpAtom>),
    /// A rule with certificates; countably many atoms.
    Generated(GeneratedTrain),
}

impl JumpTrain {
    pub fn explicit(atoms: Vec<JumpAtom>) -> Self {
        JumpTrain::Explicit(atoms)
    }

    pub fn generated(rule: TrainRule) -> Self {
        JumpTrain::Generated(GeneratedTrain::new(rule))
    }

    /// The atom at exactly `t`, if any.
    pub fn find_atom(&self, t: f64) -> Option<JumpAtom> {
        match self {
            JumpTrain::Explicit(atoms) => {
                let idx = atoms.partition_point(|a| a.loc < t);
                atoms.get(idx).filter(|a| a.loc == t).copied()
            }
            JumpTrain::Generated(g) => g.find_atom(t),
        }
    }

    /// Accumulated total jump over atoms selected by `keep`, with the error
    /// bound achieved (zero for explicit trains).
    pub fn sum_jumps_where(&self, tol: f64, mut keep: impl FnMut(&JumpAtom) -> bool) -> (f64, f64) {
        match self {
            JumpTrain::Explicit(atoms) => {
                let mut acc = KahanSum::new();
                for a in atoms {
                    if keep(a) {
                        acc.add(a.total_jump());
                    }
                }
                (acc.value(), 0.0)
            }
            JumpTrain::Generated(g) => g.sum_jumps_where(tol, keep),
        }
    }

    /// Structural problems: ordering, degenerate atoms, rule parameters,
    /// certificate monotonicity, and containment in the interior of `domain`.
    pub fn problems(&self, domain: &IntervalSpec) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            JumpTrain::Explicit(atoms) => {
                for pair in atoms.windows(2) {
                    if !(pair[0].loc < pair[1].loc) {
                        out.push(format!(
                            "atom locations must be strictly increasing: {} then {}",
                            pair[0].loc, pair[1].loc
                        ));
                    }
                }
                for a in atoms {
                    if a.is_degenerate() {
                        out.push(format!("degenerate atom (both gaps zero) at {}", a.loc));
                    }
                    if !a.loc.is_finite() {
                        out.push(format!("non-finite atom location {}", a.loc));
                    } else if !domain.interior_contains(a.loc) {
                        out.push(format!(
                            "atom at {} is not in the domain interior",
                            a.loc
                        ));
                    }
                }
            }
            JumpTrain::Generated(g) => {
                out.extend(g.rule.problems());
                if out.is_empty() {
                    // Certificate probes: tail bounds must be finite and
                    // nonincreasing, cutoffs finite, atoms interior.
                    let mut prev = f64::INFINITY;
                    for n in [0u64, 1, 2, 4, 8, 16, 64, 256, 1024] {
                        let tm = g.tail_mass(n);
                        if !(tm.is_finite() && tm >= 0.0) {
                            out.push(format!("tail mass at n={n} is {tm}"));
                        }
                        if tm > prev {
                            out.push(format!("tail mass increases at n={n}"));
                        }
                        prev = tm;
                    }
                    for eps in [1.0, 0.1, 1e-3, 1e-6, 1e-9] {
                        if g.level_cutoff(eps).is_none() {
                            out.push(format!("no level cutoff for eps={eps}"));
                        }
                    }
                    for k in 1..=16 {
                        let a = g.atom(k);
                        if !domain.interior_contains(a.loc) {
                            out.push(format!(
                                "generated atom {k} at {} is not in the domain interior",
                                a.loc
                            ));
                        }
                    }
                }
            }
        }
        out
    }
}
