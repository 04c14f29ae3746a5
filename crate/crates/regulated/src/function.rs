//! Regulated functions: a continuous closed-form base plus a jump train.
//!
//! The evaluation law fixes the pointwise value from the train: the value at
//! `t` is the base plus every completed displacement strictly left of `t`
//! plus the left gap of the atom at `t` itself. One-sided limits drop or
//! complete the atom at `t`, so `right - left` recovers the atom's total
//! jump exactly, with no summation involved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ContinuousBase;
use crate::interval::IntervalSpec;
use crate::train::{JumpAtom, JumpTrain};
use crate::DEFAULT_TOLERANCE;

/// Layer depth used for generated trains when the caller does not ask for a
/// specific depth.
pub const DEFAULT_PARTITION_DEPTH: u64 = 16;

/// A regulated function on a closed host interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegulatedFn {
    pub domain: IntervalSpec,
    pub base: ContinuousBase,
    pub train: JumpTrain,
}

/// `(location, total jump)` pairs returned by jump scans.
pub type JumpPoint = (f64, f64);

impl RegulatedFn {
    pub fn new(domain: IntervalSpec, base: ContinuousBase, train: JumpTrain) -> Self {
        RegulatedFn { domain, base, train }
    }

    /// A function with no jumps.
    pub fn continuous(domain: IntervalSpec, base: ContinuousBase) -> Self {
        RegulatedFn::new(domain, base, JumpTrain::explicit(Vec::new()))
    }

    fn check_in_domain(&self, t: f64) -> Result<()> {
        if self.domain.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { point: t })
        }
    }

    /// Completed displacement strictly left of `t`, with achieved error
    /// bound (zero for explicit trains).
    fn mass_before(&self, t: f64, tol: f64) -> (f64, f64) {
        self.train.sum_jumps_where(tol, |a| a.loc < t)
    }

    /// Value at `t` under the evaluation law.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.eval_with_tol(t, DEFAULT_TOLERANCE)
    }

    /// Value at `t`, accumulating generated trains until their tail bound
    /// reaches `tol`.
    pub fn eval_with_tol(&self, t: f64, tol: f64) -> Result<f64> {
        self.check_in_domain(t)?;
        check_tol(tol)?;
        let (mass, _) = self.mass_before(t, tol);
        let left_gap = self.train.find_atom(t).map_or(0.0, |a| a.left_gap);
        Ok(self.base.eval(t) + mass + left_gap)
    }

    /// Limit from the left. Errors at the left endpoint, where no left
    /// neighborhood exists.
    pub fn left_limit(&self, t: f64) -> Result<f64> {
        self.left_limit_with_tol(t, DEFAULT_TOLERANCE)
    }

    pub fn left_limit_with_tol(&self, t: f64, tol: f64) -> Result<f64> {
        self.check_in_domain(t)?;
        check_tol(tol)?;
        if self.domain.left_endpoint() == Some(t) {
            return Err(Error::NoLeftNeighborhood { point: t });
        }
        let (mass, _) = self.mass_before(t, tol);
        Ok(self.base.eval(t) + mass)
    }

    /// Limit from the right. Errors at the right endpoint.
    pub fn right_limit(&self, t: f64) -> Result<f64> {
        self.right_limit_with_tol(t, DEFAULT_TOLERANCE)
    }

    pub fn right_limit_with_tol(&self, t: f64, tol: f64) -> Result<f64> {
        self.check_in_domain(t)?;
        check_tol(tol)?;
        if self.domain.right_endpoint() == Some(t) {
            return Err(Error::NoRightNeighborhood { point: t });
        }
        let (mass, _) = self.mass_before(t, tol);
        let at = self.train.find_atom(t).map_or(0.0, |a| a.total_jump());
        Ok(self.base.eval(t) + mass + at)
    }

    /// The jump `f(t+) - f(t-)`. Exact: reads the atom directly; zero when
    /// no atom sits at `t`. Errors at endpoints, where the two-sided jump
    /// is undefined.
    pub fn jump_at(&self, t: f64) -> Result<f64> {
        self.check_in_domain(t)?;
        if self.domain.is_endpoint(t) {
            return Err(Error::BoundaryPoint { point: t });
        }
        Ok(self.train.find_atom(t).map_or(0.0, |a| a.total_jump()))
    }

    /// Locations in `window` whose absolute jump reaches `eps`, with their
    /// jumps, sorted by location. The threshold comparison is an exact
    /// `>=`; atoms whose two gaps cancel (zero total jump) never count.
    pub fn jumps_at_least(&self, eps: f64, window: &IntervalSpec) -> Result<Vec<JumpPoint>> {
        if !(eps > 0.0) {
            return Err(Error::NonpositiveEpsilon { eps });
        }
        if !window.is_subset_of(&self.domain) {
            return Err(Error::WindowNotInDomain);
        }
        let keep = |a: &JumpAtom| {
            let j = a.total_jump();
            j != 0.0 && j.abs() >= eps && window.contains(a.loc)
        };
        match &self.train {
            JumpTrain::Explicit(atoms) => {
                Ok(atoms.iter().filter(|a| keep(a)).map(|a| (a.loc, a.total_jump())).collect())
            }
            JumpTrain::Generated(g) => {
                if g.level_cutoff(eps).is_none() {
                    return Err(Error::UnboundedWindowWithoutCertificate);
                }
                Ok(g.atoms_with_mass_at_least(eps)
                    .into_iter()
                    .filter(|a| keep(a))
                    .map(|a| (a.loc, a.total_jump()))
                    .collect())
            }
        }
    }

    /// Group the jumps in `window` into size layers: layer 1 holds jumps of
    /// size at least 1, layer `m+1` holds sizes in `[1/(m+1), 1/m)`. By
    /// construction the layers are pairwise disjoint and their union down
    /// to depth `m` is exactly `jumps_at_least(1/m)`.
    ///
    /// `depth`: explicit trains default to full coverage; generated trains
    /// default to [`DEFAULT_PARTITION_DEPTH`], with the unresolved mass
    /// below the last layer reported as `tail_bound`.
    pub fn layered_partition(
        &self,
        window: &IntervalSpec,
        depth: Option<u64>,
    ) -> Result<LayeredPartition> {
        if !window.is_subset_of(&self.domain) {
            return Err(Error::WindowNotInDomain);
        }
        let (atoms, base_tail): (Vec<JumpAtom>, f64) = match &self.train {
            JumpTrain::Explicit(list) => (list.clone(), 0.0),
            JumpTrain::Generated(g) => {
                let m = depth.unwrap_or(DEFAULT_PARTITION_DEPTH).max(1);
                let eps = 1.0 / m as f64;
                let cutoff = g.level_cutoff(eps).ok_or(Error::UnboundedWindowWithoutCertificate)?;
                ((1..=cutoff).map(|k| g.atom(k)).collect(), g.tail_mass(cutoff))
            }
        };
        let depth = depth.unwrap_or_else(|| {
            match &self.train {
                // Full coverage: deep enough for the smallest jump present.
                JumpTrain::Explicit(_) => atoms
                    .iter()
                    .filter(|a| a.total_jump() != 0.0 && window.contains(a.loc))
                    .map(|a| bucket_of_jump_size(a.total_jump().abs()))
                    .max()
                    .unwrap_or(1),
                JumpTrain::Generated(_) => DEFAULT_PARTITION_DEPTH,
            }
        });
        let depth = depth.max(1);

        let mut cells: Vec<(u64, Vec<JumpPoint>)> = Vec::new();
        let mut tail = base_tail;
        for a in &atoms {
            let j = a.total_jump();
            if j == 0.0 || !window.contains(a.loc) {
                continue;
            }
            let m = bucket_of_jump_size(j.abs());
            if m > depth {
                // Deeper than requested: certified as unresolved mass.
                tail += a.abs_mass();
                continue;
            }
            match cells.binary_search_by_key(&m, |c| c.0) {
                Ok(i) => cells[i].1.push((a.loc, j)),
                Err(i) => cells.insert(i, (m, vec![(a.loc, j)])),
            }
        }
        for (_, locs) in cells.iter_mut() {
            locs.sort_by(|x, y| x.0.total_cmp(&y.0));
        }
        Ok(LayeredPartition {
            depth,
            cells,
            tail_bound: tail,
        })
    }

    /// The mirrored function `s -> f(-s)`: domain reflects, the base is
    /// composed with `-t`, atom locations negate, and the two gaps swap
    /// roles. Exact, and an involution.
    pub fn reflect(&self) -> RegulatedFn {
        let train = match &self.train {
            JumpTrain::Explicit(atoms) => {
                let mut out: Vec<JumpAtom> = atoms.iter().map(JumpAtom::reflected).collect();
                out.reverse();
                JumpTrain::Explicit(out)
            }
            JumpTrain::Generated(g) => JumpTrain::Generated(g.reflect()),
        };
        RegulatedFn {
            domain: self.domain.reflected(),
            base: self.base.reflected_in_time(),
            train,
        }
    }

    /// The right-limit modification `t -> f(t+)`: every displacement moves
    /// into the left gap, producing a right-continuous function with the
    /// same jumps. Atoms whose gaps cancel disappear (their one-sided
    /// limits agree, so the modification is continuous there).
    pub fn derive_plus(&self) -> RegulatedFn {
        self.derive_one_sided(true)
    }

    /// The left-limit modification `t -> f(t-)`; mirror of
    /// [`RegulatedFn::derive_plus`].
    pub fn derive_minus(&self) -> RegulatedFn {
        self.derive_one_sided(false)
    }

    fn derive_one_sided(&self, plus: bool) -> RegulatedFn {
        let train = match &self.train {
            JumpTrain::Explicit(atoms) => JumpTrain::Explicit(
                atoms
                    .iter()
                    .filter(|a| a.total_jump() != 0.0)
                    .map(|a| {
                        let j = a.total_jump();
                        if plus {
                            JumpAtom::new(a.loc, j, 0.0)
                        } else {
                            JumpAtom::new(a.loc, 0.0, j)
                        }
                    })
                    .collect(),
            ),
            JumpTrain::Generated(g) => JumpTrain::Generated(if plus {
                g.collapse_left()
            } else {
                g.collapse_right()
            }),
        };
        RegulatedFn {
            domain: self.domain,
            base: self.base.clone(),
            train,
        }
    }

    /// Structural validation. Returns a report; never fails.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();

        let domain_ok = match self.domain {
            IntervalSpec::Compact { a, b } => a.is_finite() && b.is_finite() && a < b,
            IntervalSpec::From { a } | IntervalSpec::To { a } => a.is_finite(),
            IntervalSpec::Full => true,
        };
        checks.push(CheckItem::new(
            "domain_well_formed",
            domain_ok,
            if domain_ok { String::new() } else { "endpoints must be finite and ordered".into() },
        ));

        let problems = self.train.problems(&self.domain);
        checks.push(CheckItem::new(
            "train_structure",
            problems.is_empty(),
            problems.join("; "),
        ));

        let mut bad_point = None;
        for t in self.probe_grid() {
            if !self.base.eval(t).is_finite() {
                bad_point = Some(t);
                break;
            }
        }
        checks.push(CheckItem::new(
            "base_finite_on_probe_grid",
            bad_point.is_none(),
            bad_point.map_or(String::new(), |t| format!("base is not finite at {t}")),
        ));

        let (cadlag, left_continuous) = self.continuity_flags();
        ValidationReport {
            checks,
            cadlag,
            left_continuous,
        }
    }

    fn continuity_flags(&self) -> (bool, bool) {
        match &self.train {
            JumpTrain::Explicit(atoms) => (
                atoms.iter().all(|a| a.right_gap == 0.0),
                atoms.iter().all(|a| a.left_gap == 0.0),
            ),
            JumpTrain::Generated(g) => {
                let (left_zero, right_zero) = g.sidedness();
                (right_zero, left_zero)
            }
        }
    }

    fn probe_grid(&self) -> Vec<f64> {
        let (lo, hi) = match self.domain {
            IntervalSpec::Compact { a, b } => (a, b),
            IntervalSpec::From { a } => (a, a + 8.0),
            IntervalSpec::To { a } => (a - 8.0, a),
            IntervalSpec::Full => (-8.0, 8.0),
        };
        (0..=32).map(|i| lo + (hi - lo) * f64::from(i) / 32.0).collect()
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 {
        Ok(())
    } else {
        Err(Error::NonpositiveTolerance { tol })
    }
}

/// Smallest layer index `m >= 1` with `size >= 1/m`, decided by exact f64
/// comparisons against `1/m` so layer membership and threshold scans agree
/// bit-for-bit.
pub(crate) fn bucket_of_jump_size(size: f64) -> u64 {
    debug_assert!(size > 0.0);
    if size >= 1.0 {
        return 1;
    }
    let candidate = (1.0 / size).ceil();
    let mut m = if candidate.is_finite() && candidate >= 3.0 {
        (candidate as u64).saturating_sub(2)
    } else {
        1
    };
    loop {
        if size >= 1.0 / m as f64 {
            return m;
        }
        m += 1;
    }
}

/// Jumps grouped by size layer. Sparse: only nonempty layers are stored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayeredPartition {
    /// Deepest layer index covered.
    pub depth: u64,
    /// `(layer index, jumps)` for each nonempty layer, ascending by index;
    /// jumps sorted by location.
    pub cells: Vec<(u64, Vec<JumpPoint>)>,
    /// Bound on the absolute gap mass not represented in any layer
    /// (generated-rule remainders and jumps deeper than `depth`).
    pub tail_bound: f64,
}

impl LayeredPartition {
    /// The jumps in layer `m` (empty slice for an absent layer).
    pub fn layer(&self, m: u64) -> &[JumpPoint] {
        match self.cells.binary_search_by_key(&m, |c| c.0) {
            Ok(i) => &self.cells[i].1,
            Err(_) => &[],
        }
    }

    /// Union of layers `1..=m`, sorted by location.
    pub fn union_to_depth(&self, m: u64) -> Vec<JumpPoint> {
        let mut out: Vec<JumpPoint> = self
            .cells
            .iter()
            .filter(|(idx, _)| *idx <= m)
            .flat_map(|(_, pts)| pts.iter().copied())
            .collect();
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        out
    }

    /// Dense layer lists `1..=depth` for tabular output.
    pub fn dense_layers(&self) -> Vec<Vec<JumpPoint>> {
        (1..=self.depth).map(|m| self.layer(m).to_vec()).collect()
    }
}

/// Outcome of one validation check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckItem {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckItem { name, passed, detail }
    }
}

/// Validation report: individual checks plus one-sided continuity flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckItem>,
    /// Right-continuous at every atom (every displacement in the left gap).
    pub cadlag: bool,
    /// Left-continuous at every atom.
    pub left_continuous: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::TrainRule;

    fn step() -> RegulatedFn {
        // 0 on [0,1), 1 on [1,2]: single atom with the displacement in the
        // left gap.
        RegulatedFn::new(
            IntervalSpec::compact(0.0, 2.0).unwrap(),
            ContinuousBase::parse("0").unwrap(),
            JumpTrain::explicit(vec![JumpAtom::new(1.0, 1.0, 0.0)]),
        )
    }

    fn slope_with_two_sided_atom() -> RegulatedFn {
        RegulatedFn::new(
            IntervalSpec::compact(0.0, 2.0).unwrap(),
            ContinuousBase::parse("t").unwrap(),
            JumpTrain::explicit(vec![JumpAtom::new(1.0, 0.5, 0.25)]),
        )
    }

    fn geometric_fn() -> RegulatedFn {
        RegulatedFn::new(
            IntervalSpec::non_negative(),
            ContinuousBase::parse("0").unwrap(),
            JumpTrain::generated(TrainRule::Geometric { ratio: 0.5 }),
        )
    }

    #[test]
    fn evaluation_law_on_the_step() {
        let f = step();
        assert_eq!(f.eval(0.5).unwrap(), 0.0);
        assert_eq!(f.eval(1.0).unwrap(), 1.0);
        assert_eq!(f.eval(1.5).unwrap(), 1.0);
        assert_eq!(f.left_limit(1.0).unwrap(), 0.0);
        assert_eq!(f.right_limit(1.0).unwrap(), 1.0);
        assert_eq!(f.jump_at(1.0).unwrap(), 1.0);
        assert_eq!(f.jump_at(1.5).unwrap(), 0.0);
    }

    #[test]
    fn evaluation_law_with_both_gaps() {
        let f = slope_with_two_sided_atom();
        assert_eq!(f.eval(0.5).unwrap(), 0.5);
        assert_eq!(f.left_limit(1.0).unwrap(), 1.0);
        assert_eq!(f.eval(1.0).unwrap(), 1.5);
        assert_eq!(f.right_limit(1.0).unwrap(), 1.75);
        assert_eq!(f.eval(1.5).unwrap(), 2.25);
        assert_eq!(f.jump_at(1.0).unwrap(), 0.75);
    }

    #[test]
    fn endpoint_and_domain_errors() {
        let f = step();
        assert_eq!(f.eval(2.5), Err(Error::OutOfDomain { point: 2.5 }));
        assert_eq!(f.left_limit(0.0), Err(Error::NoLeftNeighborhood { point: 0.0 }));
        assert_eq!(f.right_limit(2.0), Err(Error::NoRightNeighborhood { point: 2.0 }));
        assert_eq!(f.jump_at(0.0), Err(Error::BoundaryPoint { point: 0.0 }));
        assert_eq!(f.jump_at(2.0), Err(Error::BoundaryPoint { point: 2.0 }));
        assert_eq!(
            f.eval_with_tol(1.0, 0.0),
            Err(Error::NonpositiveTolerance { tol: 0.0 })
        );
    }

    #[test]
    fn cancelling_gaps_shift_the_value_but_not_the_jump() {
        let f = RegulatedFn::new(
            IntervalSpec::compact(0.0, 2.0).unwrap(),
            ContinuousBase::parse("0").unwrap(),
            JumpTrain::explicit(vec![JumpAtom::new(1.0, 0.5, -0.5)]),
        );
        assert_eq!(f.eval(1.0).unwrap(), 0.5);
        assert_eq!(f.left_limit(1.0).unwrap(), 0.0);
        assert_eq!(f.right_limit(1.0).unwrap(), 0.0);
        assert_eq!(f.jump_at(1.0).unwrap(), 0.0);
        assert!(f.jumps_at_least(1e-9, &f.domain).unwrap().is_empty());
    }

    #[test]
    fn geometric_partial_values() {
        let f = geometric_fn();
        // Atoms below 0.9 are k = 1, 2, 3: mass 1/2 + 1/4 + 1/8.
        assert_eq!(f.eval(0.9).unwrap(), 0.875);
        // At an atom the left gap is zero, so the value is the left limit.
        assert_eq!(f.eval(0.5).unwrap(), 0.0);
        assert_eq!(f.right_limit(0.5).unwrap(), 0.5);
        // Full mass at the accumulation point.
        assert!((f.eval(1.0).unwrap() - 1.0).abs() <= 2e-12);
        assert_eq!(f.jump_at(1.0).unwrap(), 0.0);
    }

    #[test]
    fn jump_scan_on_explicit_and_generated() {
        let f = step();
        assert_eq!(
            f.jumps_at_least(0.5, &IntervalSpec::compact(0.0, 2.0).unwrap()).unwrap(),
            vec![(1.0, 1.0)]
        );

        let g = geometric_fn();
        let w = IntervalSpec::compact(0.0, 1.0).unwrap();
        assert_eq!(
            g.jumps_at_least(0.2, &w).unwrap(),
            vec![(0.5, 0.5), (0.75, 0.25)]
        );
        // Exact threshold inclusion at a representable size.
        assert_eq!(g.jumps_at_least(0.25, &w).unwrap().len(), 2);
        assert_eq!(g.jumps_at_least(0.2500001, &w).unwrap().len(), 1);

        assert_eq!(
            g.jumps_at_least(0.0, &w),
            Err(Error::NonpositiveEpsilon { eps: 0.0 })
        );
        assert_eq!(
            f.jumps_at_least(0.5, &IntervalSpec::compact(1.0, 3.0).unwrap()),
            Err(Error::WindowNotInDomain)
        );
    }

    #[test]
    fn bucket_boundaries_are_exact() {
        assert_eq!(bucket_of_jump_size(1.5), 1);
        assert_eq!(bucket_of_jump_size(1.0), 1);
        assert_eq!(bucket_of_jump_size(0.7), 2);
        assert_eq!(bucket_of_jump_size(0.5), 2);
        assert_eq!(bucket_of_jump_size(0.3), 4);
        assert_eq!(bucket_of_jump_size(0.25), 4);
        // The layer threshold is the computed quotient 1.0/3.0, which the
        // input equals bit-for-bit, so it lands in layer 3 — the same
        // comparison a threshold scan at 1/3 performs.
        assert_eq!(bucket_of_jump_size(1.0 / 3.0), 3);
        assert_eq!(bucket_of_jump_size(1e-9), 1_000_000_000);
    }

    #[test]
    fn layered_partition_of_a_small_train() {
        let f = RegulatedFn::new(
            IntervalSpec::compact(0.0, 10.0).unwrap(),
            ContinuousBase::parse("0").unwrap(),
            JumpTrain::explicit(vec![
                JumpAtom::new(1.0, 1.5, 0.0),
                JumpAtom::new(2.0, 0.0, 0.7),
                JumpAtom::new(3.0, 0.3, 0.0),
                JumpAtom::new(4.0, 0.1, 0.2),
                JumpAtom::new(5.0, 0.5, -0.5),
            ]),
        );
        let p = f.layered_partition(&f.domain, None).unwrap();
        assert_eq!(p.depth, 4);
        assert_eq!(p.tail_bound, 0.0);
        assert_eq!(p.layer(1), &[(1.0, 1.5)]);
        assert_eq!(p.layer(2), &[(2.0, 0.7)]);
        assert_eq!(p.layer(3), &[] as &[JumpPoint]);
        assert_eq!(p.layer(4), &[(3.0, 0.3), (4.0, 0.30000000000000004)]);

        // Union law against the threshold scan, layer by layer.
        for m in 1..=6 {
            assert_eq!(
                p.union_to_depth(m),
                f.jumps_at_least(1.0 / m as f64, &f.domain).unwrap(),
                "depth {m}"
            );
        }
    }

    #[test]
    fn layered_partition_of_the_geometric_train() {
        let f = geometric_fn();
        let p = f.layered_partition(&f.domain, Some(4)).unwrap();
        assert_eq!(p.depth, 4);
        assert_eq!(p.layer(1), &[] as &[JumpPoint]);
        assert_eq!(p.layer(2), &[(0.5, 0.5)]);
        assert_eq!(p.layer(3), &[] as &[JumpPoint]);
        assert_eq!(p.layer(4), &[(0.75, 0.25)]);
        // Unresolved mass: everything from atom 3 on, geometric tail 1/4.
        assert_eq!(p.tail_bound, 0.25);
        for m in 1..=4u64 {
            assert_eq!(
                p.union_to_depth(m),
                f.jumps_at_least(1.0 / m as f64, &f.domain).unwrap()
            );
        }
    }

    #[test]
    fn reflection_mirrors_jump_sets() {
        let f = step();
        let r = f.reflect();
        assert_eq!(r.domain, IntervalSpec::compact(-2.0, 0.0).unwrap());
        match &r.train {
            JumpTrain::Explicit(atoms) => {
                assert_eq!(atoms.as_slice(), &[JumpAtom::new(-1.0, 0.0, 1.0)]);
            }
            _ => unreachable!(),
        }
        assert_eq!(
            r.jumps_at_least(0.5, &r.domain).unwrap(),
            vec![(-1.0, 1.0)]
        );
        assert_eq!(r.reflect(), f);
        // Value law transports: r(s) = f(-s) away from atoms, and the
        // defining gaps swap, so r(-1) picks up no left gap.
        assert_eq!(r.eval(-1.0).unwrap(), 0.0);
        assert_eq!(r.right_limit(-1.0).unwrap(), 1.0);

        let g = geometric_fn().reflect();
        assert_eq!(
            g.jumps_at_least(0.2, &IntervalSpec::compact(-1.0, 0.0).unwrap()).unwrap(),
            vec![(-0.75, 0.25), (-0.5, 0.5)]
        );
        assert_eq!(g.reflect(), geometric_fn());
    }

    #[test]
    fn one_sided_modifications() {
        let f = slope_with_two_sided_atom();
        let plus = f.derive_plus();
        let minus = f.derive_minus();
        for t in [0.25, 0.5, 1.0, 1.3, 1.9] {
            assert_eq!(plus.eval(t).unwrap(), f.right_limit(t).unwrap());
            assert_eq!(minus.eval(t).unwrap(), f.left_limit(t).unwrap());
        }
        // Jumps survive unchanged.
        assert_eq!(plus.jump_at(1.0).unwrap(), 0.75);
        assert_eq!(minus.jump_at(1.0).unwrap(), 0.75);
        // A right-continuous function is a fixed point of derive_plus.
        assert_eq!(step().derive_plus(), step());
        assert_eq!(plus.derive_plus(), plus);
        // Cancelling gaps disappear: the modification is continuous there.
        let cancel = RegulatedFn::new(
            IntervalSpec::compact(0.0, 2.0).unwrap(),
            ContinuousBase::parse("0").unwrap(),
            JumpTrain::explicit(vec![JumpAtom::new(1.0, 0.5, -0.5)]),
        );
        assert_eq!(cancel.derive_plus().train, JumpTrain::explicit(vec![]));

        // Generated: the collapse is lazy but obeys the same law.
        let g = geometric_fn();
        let gp = g.derive_plus();
        for t in [0.5, 0.75, 0.9] {
            assert_eq!(gp.eval(t).unwrap(), g.right_limit(t).unwrap());
        }
        assert!(gp.validate().cadlag);
    }

    #[test]
    fn one_sided_limit_convergence_along_atom_locations() {
        // Jumps sampled along the atom sequence shrink below every eps past
        // the cutoff.
        let g = geometric_fn();
        if let JumpTrain::Generated(train) = &g.train {
            for eps in [0.5, 0.1, 1e-3, 1e-6] {
                let n = train.level_cutoff(eps).unwrap();
                let worst = (n + 1..n + 200)
                    .map(|k| train.atom(k).total_jump().abs())
                    .fold(0.0, f64::max);
                assert!(worst < eps);
            }
        } else {
            unreachable!()
        }
    }

    #[test]
    fn validation_reports() {
        let good = step().validate();
        assert!(good.is_valid());
        assert!(good.cadlag);
        assert!(!good.left_continuous);

        let geo = geometric_fn().validate();
        assert!(geo.is_valid());
        assert!(geo.left_continuous);
        assert!(!geo.cadlag);

        let dup = RegulatedFn::new(
            IntervalSpec::compact(0.0, 2.0).unwrap(),
            ContinuousBase::parse("0").unwrap(),
            JumpTrain::explicit(vec![
                JumpAtom::new(1.0, 1.0, 0.0),
                JumpAtom::new(1.0, 0.5, 0.0),
            ]),
        );
        let rep = dup.validate();
        assert!(!rep.is_valid());
        assert!(rep.checks.iter().any(|c| c.name == "train_structure" && !c.passed));

        let bad_base = RegulatedFn::continuous(
            IntervalSpec::compact(0.0, 2.0).unwrap(),
            ContinuousBase::parse("1/t").unwrap(),
        );
        assert!(!bad_base.validate().is_valid());
    }

    #[test]
    fn function_json_shape() {
        let f = step();
        let js = serde_json::to_string(&f).unwrap();
        assert_eq!(
            js,
            r#"{"domain":{"kind":"compact","a":0.0,"b":2.0},"base":"0","train":{"explicit":[{"loc":1.0,"left_gap":1.0,"right_gap":0.0}]}}"#
        );
        let back: RegulatedFn = serde_json::from_str(&js).unwrap();
        assert_eq!(back, f);
    }
}
