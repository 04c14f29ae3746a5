//! Seeded generation of regulated sample paths and the stopping-time
//! enumeration of their jumps.
//!
//! Paths are compound-Poisson: exponential interarrivals, i.i.d. jump
//! sizes, an optional continuous drift. The plain kind puts each whole
//! jump into the left gap (right-continuous paths); the split kind
//! divides every jump between the two gaps at a random fraction,
//! producing genuinely two-sided discontinuities. Everything is
//! deterministic given the model: the generator is ChaCha12 keyed by the
//! model seed, with one independent stream per ensemble member, so
//! generation order never affects results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ContinuousBase;
use crate::function::{JumpPoint, RegulatedFn};
use crate::interval::IntervalSpec;
use crate::jump_measure::{jump_count, Rectangle};
use crate::train::{JumpAtom, JumpTrain};

/// Distribution of the total jump sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpDist {
    /// Uniform on `[a, b]`.
    Uniform { a: f64, b: f64 },
    /// Gaussian with the given mean and standard deviation.
    Normal { mean: f64, sd: f64 },
    /// `x1` with probability `p`, else `x2`.
    TwoPoint { x1: f64, p: f64, x2: f64 },
}

impl JumpDist {
    fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidModel { reason });
        match *self {
            JumpDist::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a <= b) {
                    return bad(format!("uniform bounds out of order: [{a}, {b}]"));
                }
            }
            JumpDist::Normal { mean, sd } => {
                if !(mean.is_finite() && sd.is_finite() && sd >= 0.0) {
                    return bad(format!("normal parameters invalid: mean {mean}, sd {sd}"));
                }
            }
            JumpDist::TwoPoint { x1, p, x2 } => {
                if !(x1.is_finite() && x2.is_finite() && (0.0..=1.0).contains(&p)) {
                    return bad(format!("two-point parameters invalid: {x1}, {p}, {x2}"));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> f64 {
        match *self {
            JumpDist::Uniform { a, b } => Uniform::new_inclusive(a, b)
                .expect("bounds validated")
                .sample(rng),
            JumpDist::Normal { mean, sd } => {
                Normal::new(mean, sd).expect("parameters validated").sample(rng)
            }
            JumpDist::TwoPoint { x1, p, x2 } => {
                if rng.random::<f64>() < p {
                    x1
                } else {
                    x2
                }
            }
        }
    }
}

/// A recipe for one family of random regulated paths on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathModel {
    /// Right-continuous paths: each jump sits entirely in the left gap.
    CompoundPoisson {
        rate: f64,
        jump_dist: JumpDist,
        #[serde(default = "ContinuousBase::zero")]
        drift: ContinuousBase,
        horizon: f64,
        seed: u64,
    },
    /// Two-sided paths: each jump `J` is split at a uniform fraction `u`
    /// into a left gap `u * J` and a right gap carrying the exact
    /// remainder.
    SplitJump {
        rate: f64,
        jump_dist: JumpDist,
        #[serde(default = "ContinuousBase::zero")]
        drift: ContinuousBase,
        horizon: f64,
        seed: u64,
    },
}

impl PathModel {
    pub fn rate(&self) -> f64 {
        match self {
            PathModel::CompoundPoisson { rate, .. } | PathModel::SplitJump { rate, .. } => *rate,
        }
    }

    pub fn jump_dist(&self) -> &JumpDist {
        match self {
            PathModel::CompoundPoisson { jump_dist, .. }
            | PathModel::SplitJump { jump_dist, .. } => jump_dist,
        }
    }

    pub fn drift(&self) -> &ContinuousBase {
        match self {
            PathModel::CompoundPoisson { drift, .. } | PathModel::SplitJump { drift, .. } => drift,
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            PathModel::CompoundPoisson { horizon, .. } | PathModel::SplitJump { horizon, .. } => {
                *horizon
            }
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            PathModel::CompoundPoisson { seed, .. } | PathModel::SplitJump { seed, .. } => *seed,
        }
    }

    pub fn is_split(&self) -> bool {
        matches!(self, PathModel::SplitJump { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidModel { reason });
        if !(self.rate().is_finite() && self.rate() > 0.0) {
            return bad(format!("rate must be positive and finite, got {}", self.rate()));
        }
        if !(self.horizon().is_finite() && self.horizon() > 0.0) {
            return bad(format!("horizon must be positive and finite, got {}", self.horizon()));
        }
        self.jump_dist().validate()
    }
}

/// One realized trajectory: a regulated function on `[0, horizon]` with
/// an explicit, strictly ordered jump train, plus the coordinates that
/// reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    #[serde(rename = "fn")]
    pub f: RegulatedFn,
    pub seed: u64,
    /// Ensemble stream the path was drawn on (0 for single-path runs).
    pub stream: u64,
    pub model: PathModel,
}

/// Splits a total jump into `(left, right)` gaps at fraction `u`, with
/// the rounding error pushed into the right gap so that
/// `left + right == total` holds exactly in `f64` arithmetic.
pub fn split_gaps(total: f64, u: f64) -> (f64, f64) {
    let left = u * total;
    let mut right = total - left;
    // One compensation step per round: the residual is computed exactly
    // because the partial sum is already within a few ulps of the target.
    for _ in 0..4 {
        let sum = left + right;
        if sum == total {
            return (left, right);
        }
        right += total - sum;
    }
    (total, 0.0)
}

/// Draws the path for one ensemble stream of the model.
fn simulate_stream(model: &PathModel, stream: u64) -> Result<SamplePath> {
    model.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(model.seed());
    rng.set_stream(stream);
    let exp = Exp::new(model.rate()).expect("rate validated");
    let horizon = model.horizon();
    let mut atoms: Vec<JumpAtom> = Vec::new();
    let mut clock = 0.0f64;
    loop {
        let next = clock + exp.sample(&mut rng);
        if !(next < horizon) {
            break;
        }
        // A zero increment (or one below the clock's ulp) would duplicate
        // a location; such arrivals are dropped to keep the train
        // strictly increasing. No atom ever lands on 0.
        if next > clock && next > 0.0 {
            let size = model.jump_dist().sample(&mut rng);
            if model.is_split() {
                let u: f64 = rng.random();
                if size != 0.0 {
                    let (l, r) = split_gaps(size, u);
                    atoms.push(JumpAtom::new(next, l, r));
                }
            } else if size != 0.0 {
                atoms.push(JumpAtom::new(next, size, 0.0));
            }
        }
        clock = next;
    }
    let domain = IntervalSpec::compact(0.0, horizon).expect("horizon validated");
    Ok(SamplePath {
        f: RegulatedFn::new(domain, model.drift().clone(), JumpTrain::Explicit(atoms)),
        seed: model.seed(),
        stream,
        model: model.clone(),
    })
}

/// Draws the single path of the model (stream 0). Deterministic: the same
/// model yields a bit-identical path every time.
pub fn simulate(model: &PathModel) -> Result<SamplePath> {
    simulate_stream(model, 0)
}

/// The strictly increasing enumeration of a path's jump times, together
/// with the layer structure it was extracted from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingTimeSequence {
    /// All jump times, strictly increasing.
    pub times: Vec<f64>,
    /// Partition depth the layers were built at.
    pub depth: u64,
    /// Per-layer increasing enumerations, exactly as extracted before the
    /// merge.
    pub layers: Vec<(u64, Vec<f64>)>,
}

/// Increasing enumeration of a finite point set by repeated minimum
/// extraction: the first time is the least element, and each next time is
/// the least element strictly beyond the previous one. Linear scans by
/// construction — sorting is reserved for the tests as an independent
/// check.
fn increasing_enumeration(points: &[JumpPoint]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len());
    let mut prev = f64::NEG_INFINITY;
    loop {
        let mut next: Option<f64> = None;
        for &(loc, _) in points {
            if loc > prev && next.is_none_or(|n| loc < n) {
                next = Some(loc);
            }
        }
        match next {
            Some(s) => {
                out.push(s);
                prev = s;
            }
            None => break,
        }
    }
    out
}

/// Merges increasing sequences into one increasing sequence by always
/// taking the least head.
fn merge_increasing(seqs: &[(u64, Vec<f64>)]) -> Vec<f64> {
    let mut cursors = vec![0usize; seqs.len()];
    let mut out = Vec::with_capacity(seqs.iter().map(|(_, s)| s.len()).sum());
    loop {
        let mut best: Option<(f64, usize)> = None;
        for (i, (_, seq)) in seqs.iter().enumerate() {
            if let Some(&head) = seq.get(cursors[i]) {
                if best.is_none_or(|(b, _)| head < b) {
                    best = Some((head, i));
                }
            }
        }
        match best {
            Some((v, i)) => {
                cursors[i] += 1;
                out.push(v);
            }
            None => break,
        }
    }
    out
}

/// Enumerates the path's jump times as a strictly increasing sequence by
/// the layered construction: partition the jumps into size layers (each
/// finite), enumerate every layer by recursive minimum extraction, then
/// merge the layers. The result equals the sorted jump-location list —
/// the sort is the test oracle, not the implementation.
pub fn stopping_times(path: &SamplePath) -> StoppingTimeSequence {
    let partition = path
        .f
        .layered_partition(&path.f.domain, None)
        .expect("a path's own domain is always a valid window");
    let layers: Vec<(u64, Vec<f64>)> = partition
        .cells
        .iter()
        .map(|(m, pts)| (*m, increasing_enumeration(pts)))
        .collect();
    let times = merge_increasing(&layers);
    debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
    StoppingTimeSequence { times, depth: partition.depth, layers }
}

/// Per-stream jump counts over a rectangle, with their mean and sample
/// variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusStats {
    /// `(stream, count)` per ensemble member, in stream order.
    pub counts: Vec<(u64, u64)>,
    pub mean: f64,
    pub variance: f64,
}

/// Counts the jumps of `n_seeds` independent paths of the model inside
/// the rectangle. Streams are independent, so the ensemble is
/// reproducible member-by-member regardless of evaluation order.
pub fn empirical_jump_census(
    model: &PathModel,
    n_seeds: u64,
    rect: &Rectangle,
) -> Result<CensusStats> {
    if n_seeds == 0 {
        return Err(Error::InvalidModel { reason: "census needs at least one seed".into() });
    }
    let mut counts = Vec::with_capacity(n_seeds as usize);
    for stream in 0..n_seeds {
        let path = simulate_stream(model, stream)?;
        counts.push((stream, jump_count(&path.f, rect)?));
    }
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&(_, c)| c as f64).sum::<f64>() / n;
    let variance = if counts.len() < 2 {
        0.0
    } else {
        counts.iter().map(|&(_, c)| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    Ok(CensusStats { counts, mean, variance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_set::IndexSetExpr;
    use crate::jump_measure::SizeSet;

    fn base_model(seed: u64) -> PathModel {
        PathModel::CompoundPoisson {
            rate: 2.0,
            jump_dist: JumpDist::Uniform { a: 0.5, b: 1.5 },
            drift: ContinuousBase::zero(),
            horizon: 3.0,
            seed,
        }
    }

    fn atoms(path: &SamplePath) -> &[JumpAtom] {
        match &path.f.train {
            JumpTrain::Explicit(a) => a,
            JumpTrain::Generated(_) => panic!("simulated paths are explicit"),
        }
    }

    fn everything() -> Rectangle {
        Rectangle { time: IndexSetExpr::All, size: SizeSet::ComplementBall { eps: 1e-300 } }
    }

    #[test]
    fn identical_models_draw_identical_paths() {
        let a = simulate(&base_model(42)).unwrap();
        let b = simulate(&base_model(42)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&base_model(43)).unwrap();
        assert_ne!(atoms(&a), atoms(&c));
        // Streams are independent coordinates, not shifts of each other.
        let s1 = simulate_stream(&base_model(42), 1).unwrap();
        assert_ne!(atoms(&a), atoms(&s1));
        assert_eq!(s1, simulate_stream(&base_model(42), 1).unwrap());
    }

    #[test]
    fn vanishing_intensity_draws_no_atoms() {
        let model = PathModel::CompoundPoisson {
            rate: 1e-9,
            jump_dist: JumpDist::Uniform { a: 0.5, b: 1.5 },
            drift: ContinuousBase::zero(),
            horizon: 1.0,
            seed: 7,
        };
        assert!(atoms(&simulate(&model).unwrap()).is_empty());
    }

    #[test]
    fn atoms_are_strictly_ordered_inside_the_open_horizon() {
        for stream in 0..200 {
            let path = simulate_stream(&base_model(11), stream).unwrap();
            let a = atoms(&path);
            for w in a.windows(2) {
                assert!(w[0].loc < w[1].loc);
            }
            for atom in a {
                assert!(atom.loc > 0.0 && atom.loc < 3.0);
                assert!(atom.total_jump() != 0.0);
            }
        }
    }

    #[test]
    fn plain_paths_are_right_continuous_split_paths_are_not() {
        let plain = simulate(&base_model(5)).unwrap();
        assert!(plain.f.validate().cadlag);
        assert!(atoms(&plain).iter().all(|a| a.right_gap == 0.0));

        let split = PathModel::SplitJump {
            rate: 2.0,
            jump_dist: JumpDist::Uniform { a: 0.5, b: 1.5 },
            drift: ContinuousBase::zero(),
            horizon: 3.0,
            seed: 5,
        };
        let path = simulate(&split).unwrap();
        assert!(!atoms(&path).is_empty());
        assert!(atoms(&path).iter().any(|a| a.left_gap != 0.0 && a.right_gap != 0.0));
        // The two-sided jump still reads back exactly at every atom.
        for a in atoms(&path) {
            assert_eq!(path.f.jump_at(a.loc).unwrap(), a.left_gap + a.right_gap);
        }
    }

    #[test]
    fn gap_splitting_is_exact_for_all_fractions() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for _ in 0..20_000 {
            let total = match rng.random::<u8>() % 4 {
                0 => rng.random::<f64>() * 2.0 - 1.0,
                1 => (rng.random::<f64>() - 0.5) * 1e300,
                2 => (rng.random::<f64>() - 0.5) * 1e-300,
                _ => -(rng.random::<f64>()),
            };
            let u: f64 = rng.random();
            let (l, r) = split_gaps(total, u);
            assert_eq!(l + r, total, "split of {total} at {u} drifted");
        }
        for (total, u) in [(1.0, 0.0), (1.0, 1.0), (-3.5, 0.5), (0.1, 0.3), (1e-308, 0.7)] {
            let (l, r) = split_gaps(total, u);
            assert_eq!(l + r, total);
        }
        assert_eq!(split_gaps(0.0, 0.5), (0.0, 0.0));
    }

    #[test]
    fn ensemble_mean_count_tracks_the_intensity() {
        // Mean jump count over 10000 paths at rate 5 on [0, 10]: the count
        // is Poisson with mean 50, so the ensemble mean sits within
        // 3 standard errors of 50.
        let model = PathModel::CompoundPoisson {
            rate: 5.0,
            jump_dist: JumpDist::Uniform { a: 0.5, b: 1.5 },
            drift: ContinuousBase::zero(),
            horizon: 10.0,
            seed: 20260823,
        };
        let stats = empirical_jump_census(&model, 10_000, &everything()).unwrap();
        let se = (stats.variance / 10_000.0).sqrt();
        assert!(
            (stats.mean - 50.0).abs() <= 3.0 * se,
            "mean {} out of band (se {se})",
            stats.mean
        );
        // Poisson counts are not over- or under-dispersed.
        assert!((stats.variance - 50.0).abs() < 10.0, "variance {}", stats.variance);
    }

    #[test]
    fn stopping_times_match_the_sort_oracle() {
        // Hand case: jumps at 0.7, 0.3, 1.4 enumerate as 0.3 < 0.7 < 1.4.
        let f = RegulatedFn::new(
            IntervalSpec::compact(0.0, 2.0).unwrap(),
            ContinuousBase::zero(),
            JumpTrain::explicit(vec![
                JumpAtom::new(0.3, 0.4, 0.0),
                JumpAtom::new(0.7, 1.2, 0.0),
                JumpAtom::new(1.4, 0.05, 0.0),
            ]),
        );
        let path = SamplePath { f, seed: 0, stream: 0, model: base_model(0) };
        let seq = stopping_times(&path);
        assert_eq!(seq.times, vec![0.3, 0.7, 1.4]);
        // The three sizes land in three different layers.
        assert_eq!(seq.layers.iter().filter(|(_, l)| !l.is_empty()).count(), 3);

        // Empty path: empty sequence.
        let empty = simulate(&PathModel::CompoundPoisson {
            rate: 1e-9,
            jump_dist: JumpDist::Uniform { a: 0.5, b: 1.5 },
            drift: ContinuousBase::zero(),
            horizon: 1.0,
            seed: 3,
        })
        .unwrap();
        assert!(stopping_times(&empty).times.is_empty());

        // Randomized paths: the construction output equals the sorted
        // location list, and the per-layer sequences partition it.
        let model = PathModel::SplitJump {
            rate: 4.0,
            jump_dist: JumpDist::Normal { mean: 0.0, sd: 1.0 },
            drift: ContinuousBase::zero(),
            horizon: 5.0,
            seed: 17,
        };
        for stream in 0..100 {
            let path = simulate_stream(&model, stream).unwrap();
            let seq = stopping_times(&path);
            let mut sorted: Vec<f64> = atoms(&path).iter().map(|a| a.loc).collect();
            sorted.sort_by(f64::total_cmp);
            assert_eq!(seq.times, sorted);
            assert!(seq.times.windows(2).all(|w| w[0] < w[1]));
            let merged: usize = seq.layers.iter().map(|(_, l)| l.len()).sum();
            assert_eq!(merged, seq.times.len());
        }
    }

    #[test]
    fn census_over_the_empty_rectangle_is_zero() {
        let rect = Rectangle {
            time: IndexSetExpr::Empty,
            size: SizeSet::ComplementBall { eps: 0.1 },
        };
        let stats = empirical_jump_census(&base_model(1), 200, &rect).unwrap();
        assert!(stats.counts.iter().all(|&(_, c)| c == 0));
        assert_eq!(stats.mean, 0.0);
    }

    #[test]
    fn thinning_by_a_size_window_halves_the_rate() {
        // Jump sizes are +1 or -1 with equal probability; keeping only
        // sizes in [0.5, inf) keeps each jump independently with
        // probability 1/2, so the mean count drops to rate * T / 2 = 3.
        let model = PathModel::CompoundPoisson {
            rate: 2.0,
            jump_dist: JumpDist::TwoPoint { x1: 1.0, p: 0.5, x2: -1.0 },
            drift: ContinuousBase::zero(),
            horizon: 3.0,
            seed: 101,
        };
        let rect = Rectangle {
            time: IndexSetExpr::All,
            size: SizeSet::Intervals { cells: vec![(Some(0.5), None)] },
        };
        let stats = empirical_jump_census(&model, 5_000, &rect).unwrap();
        let se = (stats.variance / 5_000.0).sqrt();
        assert!(
            (stats.mean - 3.0).abs() <= 3.0 * se,
            "mean {} out of band (se {se})",
            stats.mean
        );
    }

    #[test]
    fn drift_flows_into_the_path_between_jumps() {
        let model = PathModel::CompoundPoisson {
            rate: 1e-9,
            jump_dist: JumpDist::Uniform { a: 0.5, b: 1.5 },
            drift: "0.1*t".parse().unwrap(),
            horizon: 1.0,
            seed: 7,
        };
        let path = simulate(&model).unwrap();
        assert!((path.f.eval(0.5).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn model_rejections() {
        let mut m = base_model(1);
        if let PathModel::CompoundPoisson { rate, .. } = &mut m {
            *rate = 0.0;
        }
        assert!(matches!(simulate(&m), Err(Error::InvalidModel { .. })));
        let bad_dist = PathModel::CompoundPoisson {
            rate: 1.0,
            jump_dist: JumpDist::Uniform { a: 2.0, b: 1.0 },
            drift: ContinuousBase::zero(),
            horizon: 1.0,
            seed: 0,
        };
        assert!(matches!(simulate(&bad_dist), Err(Error::InvalidModel { .. })));
        let bad_p = PathModel::CompoundPoisson {
            rate: 1.0,
            jump_dist: JumpDist::TwoPoint { x1: 1.0, p: 1.5, x2: -1.0 },
            drift: ContinuousBase::zero(),
            horizon: 1.0,
            seed: 0,
        };
        assert!(matches!(simulate(&bad_p), Err(Error::InvalidModel { .. })));
        assert!(matches!(
            empirical_jump_census(&base_model(1), 0, &everything()),
            Err(Error::InvalidModel { .. })
        ));
    }

    #[test]
    fn model_json_shape() {
        let js = r#"{"kind":"compound_poisson","rate":2.0,"jump_dist":{"normal":{"mean":0,"sd":1}},"drift":"0.1*t","horizon":10,"seed":42}"#;
        let model: PathModel = serde_json::from_str(js).unwrap();
        assert_eq!(model.rate(), 2.0);
        assert_eq!(model.jump_dist(), &JumpDist::Normal { mean: 0.0, sd: 1.0 });
        assert_eq!(model.drift().source(), "0.1*t");
        assert_eq!(model.horizon(), 10.0);
        assert_eq!(model.seed(), 42);
        let back = serde_json::to_string(&model).unwrap();
        assert_eq!(serde_json::from_str::<PathModel>(&back).unwrap(), model);

        let path = simulate(&base_model(42)).unwrap();
        let js = serde_json::to_string(&path).unwrap();
        assert!(js.starts_with(r#"{"fn":{"domain""#));
        assert_eq!(serde_json::from_str::<SamplePath>(&js).unwrap(), path);
    }
}
