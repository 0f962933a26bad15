//! The flow `α_D(v, t) = exp(tD) v` on the one-point compactification
//! `V ∪ {∞}`: omega-limit estimates, attractor–repeller detection, and a
//! trajectory-based brute-force oracle.
//!
//! The exact classifier is spectral: a nontrivial attractor–repeller pair
//! exists if and only if every eigenvalue real part is strictly positive or
//! every one is strictly negative, and then the pair is `({∞}, {0})` or
//! `({0}, {∞})`. Everything else is chain-recurrent. The oracle never sees
//! the spectrum; it watches trajectories escape, collapse, or recur, and is
//! allowed to return `Inconclusive` near decision boundaries.

use nalgebra::DVector;
use std::collections::HashMap;

use crate::spectra::{self, Endomorphism};
use crate::{Error, Result};

/// Verdict of the attractor–repeller dichotomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    /// `({0}, {∞})`: every trajectory falls into the origin.
    AttractorZero,
    /// `({∞}, {0})`: every nonzero trajectory escapes.
    AttractorInfinity,
    /// No nontrivial attractor–repeller pair.
    ChainRecurrent,
}

impl FlowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowKind::AttractorZero => "ATTRACTOR_ZERO",
            FlowKind::AttractorInfinity => "ATTRACTOR_INFINITY",
            FlowKind::ChainRecurrent => "CHAIN_RECURRENT",
        }
    }
}

/// Spectral facts justifying a flow verdict.
#[derive(Debug, Clone, Copy)]
pub struct SpectralWitness {
    pub min_re: f64,
    pub max_re: f64,
    pub eps_spec: f64,
}

#[derive(Debug, Clone)]
pub struct FlowClassification {
    pub kind: FlowKind,
    pub witness: SpectralWitness,
    /// Set when some eigenvalue real part is within `10 * eps_spec` of zero;
    /// never an error.
    pub boundary_flag: bool,
}

/// A point of the compactification `V ∪ {∞}`.
#[derive(Debug, Clone)]
pub enum CompactifiedPoint {
    Finite(DVector<f64>),
    Infinity,
}

/// Sampling parameters for omega-limit estimation.
#[derive(Debug, Clone, Copy)]
pub struct OmegaParams {
    /// Burn-in time `T0`: samples before it are discarded.
    pub burn_in: f64,
    /// Horizon `T1 > T0`.
    pub horizon: f64,
    /// Sampling step.
    pub step: f64,
    /// Escape radius `R`; `None` means `1e6 * max(1, ||v||)`.
    pub infinity_radius: Option<f64>,
    /// Cluster resolution as a fraction of the trajectory scale.
    pub cluster_resolution: f64,
}

impl Default for OmegaParams {
    fn default() -> Self {
        Self {
            burn_in: 50.0,
            horizon: 400.0,
            step: 0.05,
            infinity_radius: None,
            cluster_resolution: 1e-3,
        }
    }
}

/// Late-time trajectory summary standing in for an omega-limit set.
#[derive(Debug, Clone)]
pub struct OmegaSetEstimate {
    /// Cluster representatives of the finite late-time samples.
    pub points: Vec<DVector<f64>>,
    /// True when some late sample exceeded the escape radius.
    pub contains_infinity: bool,
    /// The radius actually used.
    pub radius: f64,
    /// Too few samples to observe recurrence.
    pub low_confidence: bool,
}

/// Exact spectral classification of the flow on the compactification.
pub fn classify_flow(d: &Endomorphism) -> FlowClassification {
    let spec = spectra::compute_spectrum(d);
    let tol = 10.0 * spec.eps_spec;
    let min_re = spec.min_re();
    let max_re = spec.max_re();
    let kind = if max_re < -tol {
        FlowKind::AttractorZero
    } else if min_re > tol {
        FlowKind::AttractorInfinity
    } else {
        FlowKind::ChainRecurrent
    };
    FlowClassification {
        kind,
        witness: SpectralWitness {
            min_re,
            max_re,
            eps_spec: spec.eps_spec,
        },
        boundary_flag: spec.near_imaginary_axis(),
    }
}

/// Late-window trajectory samples of `exp(tD)v` in the requested direction,
/// clustered at `cluster_resolution * (trajectory scale)`.
///
/// `0` and `∞` are fixed points of the flow by construction: the zero vector
/// returns `{0}` exactly. Trajectories are propagated as a unit direction
/// plus a running log-norm, so nothing overflows; a sample whose log-norm
/// exceeds `log R` is recorded through `contains_infinity` instead of as a
/// finite point.
pub fn omega_limit(
    d: &Endomorphism,
    v: &DVector<f64>,
    direction: crate::lyapunov::Direction,
    params: &OmegaParams,
) -> Result<OmegaSetEstimate> {
    if !(params.horizon > params.burn_in && params.burn_in >= 0.0 && params.step > 0.0) {
        return Err(Error::InvalidInput(
            "need horizon > burn_in >= 0 and step > 0".into(),
        ));
    }
    let radius = params
        .infinity_radius
        .unwrap_or_else(|| 1e6 * v.norm().max(1.0));
    if !(radius > v.norm()) {
        return Err(Error::InvalidInput("radius must exceed ||v||".into()));
    }
    if v.norm() == 0.0 {
        return Ok(OmegaSetEstimate {
            points: vec![v.clone()],
            contains_infinity: false,
            radius,
            low_confidence: false,
        });
    }

    let dt = match direction {
        crate::lyapunov::Direction::Forward => params.step,
        crate::lyapunov::Direction::Backward => -params.step,
    };
    let e = spectra::matrix_exp(d, dt)?;
    let mut u = v.clone();
    let mut logr = u.norm().ln();
    u /= u.norm();

    let n_steps = (params.horizon / params.step).ceil() as usize;
    let burn_steps = (params.burn_in / params.step).floor() as usize;
    let log_radius = radius.ln();

    let mut finite: Vec<DVector<f64>> = Vec::new();
    let mut contains_infinity = false;
    let mut scale: f64 = 0.0;
    let mut kept = 0usize;
    for step in 1..=n_steps {
        u = e.matrix() * &u;
        let nu = u.norm();
        logr += nu.ln();
        u /= nu;
        if step >= burn_steps {
            kept += 1;
            if logr > log_radius {
                contains_infinity = true;
            } else {
                let p = &u * logr.exp();
                scale = scale.max(p.norm());
                finite.push(p);
            }
        }
    }

    let resolution = params.cluster_resolution * scale.max(f64::MIN_POSITIVE);
    let points = cluster_points(&finite, resolution);
    Ok(OmegaSetEstimate {
        points,
        contains_infinity,
        radius,
        low_confidence: kept < 16,
    })
}

/// Omega limit on the compactification; `∞` is a fixed point.
pub fn omega_limit_point(
    d: &Endomorphism,
    p: &CompactifiedPoint,
    direction: crate::lyapunov::Direction,
    params: &OmegaParams,
) -> Result<OmegaSetEstimate> {
    match p {
        CompactifiedPoint::Finite(v) => omega_limit(d, v, direction, params),
        CompactifiedPoint::Infinity => Ok(OmegaSetEstimate {
            points: Vec::new(),
            contains_infinity: true,
            radius: params.infinity_radius.unwrap_or(1e6),
            low_confidence: false,
        }),
    }
}

/// Greedy representative clustering in insertion order (deterministic).
fn cluster_points(samples: &[DVector<f64>], resolution: f64) -> Vec<DVector<f64>> {
    let mut grid = PointGrid::new(resolution.max(f64::MIN_POSITIVE));
    let mut reps: Vec<DVector<f64>> = Vec::new();
    for s in samples {
        if grid.any_within(s, &reps, resolution).is_none() {
            grid.insert(s, reps.len());
            reps.push(s.clone());
        }
    }
    reps
}

/// Hash grid over low-dimensional points for near-neighbor queries.
struct PointGrid {
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl PointGrid {
    fn new(cell: f64) -> Self {
        Self {
            cell,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &DVector<f64>) -> Vec<i64> {
        p.iter().map(|x| (x / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, p: &DVector<f64>, idx: usize) {
        self.cells.entry(self.key(p)).or_default().push(idx);
    }

    /// Index of some stored point within `dist` of `p`, if any.
    fn any_within(&self, p: &DVector<f64>, store: &[DVector<f64>], dist: f64) -> Option<usize> {
        let reach = (dist / self.cell).ceil() as i64;
        let base = self.key(p);
        let mut offsets = vec![0i64; base.len()];
        let mut found = None;
        self.scan_box(&base, &mut offsets, 0, reach, &mut |ids| {
            for &i in ids {
                if found.is_none() && (&store[i] - p).norm() <= dist {
                    found = Some(i);
                }
            }
        });
        found
    }

    /// Exact minimum distance from `p` to the stored points.
    fn min_distance(&self, p: &DVector<f64>, store: &[DVector<f64>]) -> f64 {
        let base = self.key(p);
        let mut reach = 1i64;
        loop {
            let mut best = f64::INFINITY;
            let mut offsets = vec![0i64; base.len()];
            self.scan_box(&base, &mut offsets, 0, reach, &mut |ids| {
                for &i in ids {
                    best = best.min((&store[i] - p).norm());
                }
            });
            if best.is_finite() {
                // points just outside the scanned box could still be closer;
                // rescan a box that certainly covers the candidate distance
                let need = (best / self.cell).ceil() as i64 + 1;
                if need > reach {
                    let mut confirmed = best;
                    let mut offsets = vec![0i64; base.len()];
                    self.scan_box(&base, &mut offsets, 0, need, &mut |ids| {
                        for &i in ids {
                            confirmed = confirmed.min((&store[i] - p).norm());
                        }
                    });
                    return confirmed;
                }
                return best;
            }
            reach *= 2;
            if reach > (1 << 20) {
                return best;
            }
        }
    }

    fn scan_box(
        &self,
        base: &[i64],
        offsets: &mut Vec<i64>,
        axis: usize,
        reach: i64,
        visit: &mut impl FnMut(&Vec<usize>),
    ) {
        if axis == base.len() {
            let key: Vec<i64> = base.iter().zip(offsets.iter()).map(|(b, o)| b + o).collect();
            if let Some(ids) = self.cells.get(&key) {
                visit(ids);
            }
            return;
        }
        for o in -reach..=reach {
            offsets[axis] = o;
            self.scan_box(base, offsets, axis + 1, reach, visit);
        }
    }
}

/// Hausdorff distance between two omega estimates.
///
/// `∞` is a symbolic point: the estimates agree there only when both contain
/// it; otherwise the comparison is flagged instead of forced into a metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HausdorffOutcome {
    Finite(f64),
    InfinityMismatch,
}

pub fn hausdorff_distance(a: &OmegaSetEstimate, b: &OmegaSetEstimate) -> HausdorffOutcome {
    if a.contains_infinity != b.contains_infinity {
        return HausdorffOutcome::InfinityMismatch;
    }
    if a.points.is_empty() && b.points.is_empty() {
        return HausdorffOutcome::Finite(0.0);
    }
    if a.points.is_empty() || b.points.is_empty() {
        return HausdorffOutcome::InfinityMismatch;
    }
    let d_ab = directed_hausdorff(&a.points, &b.points);
    let d_ba = directed_hausdorff(&b.points, &a.points);
    HausdorffOutcome::Finite(d_ab.max(d_ba))
}

fn directed_hausdorff(from: &[DVector<f64>], to: &[DVector<f64>]) -> f64 {
    let scale = to
        .iter()
        .map(|p| p.norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut grid = PointGrid::new(1e-2 * scale);
    for (i, p) in to.iter().enumerate() {
        grid.insert(p, i);
    }
    from.iter()
        .map(|p| grid.min_distance(p, to))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct OmegaSymmetryReport {
    pub samples: usize,
    pub max_distance: f64,
    /// The sample vector realizing the worst distance.
    pub worst_vector: Option<DVector<f64>>,
    pub pass: bool,
}

/// For random `v`, compares forward and backward omega estimates.
///
/// Preconditions (the hypotheses under which the two limit sets provably
/// coincide): `D` semisimple and purely imaginary spectrum, both at
/// `eps_spec` scale. Violations are reported as precondition errors naming
/// the failed hypothesis.
pub fn check_omega_symmetry(
    d: &Endomorphism,
    samples: usize,
    tol: f64,
    seed: u64,
    params: &OmegaParams,
) -> Result<OmegaSymmetryReport> {
    use rand::{Rng, SeedableRng};

    let jc = spectra::jordan_chevalley(d, 1e-8)?;
    if !jc.is_semisimple {
        return Err(Error::Precondition {
            hypothesis: "D is semisimple".into(),
        });
    }
    let spec = spectra::compute_spectrum(d);
    if !spec.purely_imaginary() {
        return Err(Error::Precondition {
            hypothesis: "spectrum of D is purely imaginary".into(),
        });
    }

    let n = d.dim();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut max_distance = 0.0f64;
    let mut worst: Option<DVector<f64>> = None;
    for _ in 0..samples {
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        if v.norm() < 1e-3 {
            continue;
        }
        let fwd = omega_limit(d, &v, crate::lyapunov::Direction::Forward, params)?;
        let bwd = omega_limit(d, &v, crate::lyapunov::Direction::Backward, params)?;
        match hausdorff_distance(&fwd, &bwd) {
            HausdorffOutcome::Finite(dist) => {
                if dist > max_distance {
                    max_distance = dist;
                    worst = Some(v);
                }
            }
            HausdorffOutcome::InfinityMismatch => {
                return Ok(OmegaSymmetryReport {
                    samples,
                    max_distance: f64::INFINITY,
                    worst_vector: Some(v),
                    pass: false,
                });
            }
        }
    }
    Ok(OmegaSymmetryReport {
        samples,
        max_distance,
        worst_vector: worst,
        pass: max_distance <= tol,
    })
}

/// Per-trajectory fate observed by the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    Collapsed,
    Escaped,
    Bounded,
    Undecided,
}

/// Oracle verdict: the exact classifier never returns `Inconclusive`, the
/// oracle does whenever the statistics do not speak clearly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVerdict {
    Kind(FlowKind),
    Inconclusive,
}

impl OracleVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleVerdict::Kind(k) => k.as_str(),
            OracleVerdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleParams {
    pub horizon: f64,
    pub step: f64,
    pub escape_radius: f64,
    pub collapse_radius: f64,
    /// Late-window log-norm slope below which a bounded trajectory counts as
    /// recurrent rather than undecided.
    pub slope_tol: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            horizon: 400.0,
            step: 0.25,
            escape_radius: 1e6,
            collapse_radius: 1e-6,
            slope_tol: 1e-3,
        }
    }
}

/// Standard grid of initial points for the oracle (origin excluded).
pub fn oracle_grid(dim: usize) -> Vec<DVector<f64>> {
    let axis: &[f64] = match dim {
        1 => &[-1.0, -0.5, 0.5, 1.0],
        2 => &[-1.0, -0.5, 0.0, 0.5, 1.0],
        _ => &[-1.0, 0.0, 1.0],
    };
    let mut out = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let v = DVector::from_iterator(dim, idx.iter().map(|&i| axis[i]));
        if v.norm() > 0.0 {
            out.push(v);
        }
        let mut carry = 0;
        loop {
            idx[carry] += 1;
            if idx[carry] < axis.len() {
                break;
            }
            idx[carry] = 0;
            carry += 1;
            if carry == dim {
                return out;
            }
        }
    }
}

/// Brute-force classification from trajectory statistics alone.
///
/// Both time directions are watched: an attractor at `0` means every forward
/// trajectory collapses *and* every backward one escapes (and dually for the
/// attractor at `∞`). A saddle sends generic points to `∞` in both
/// directions, so one-sided escape statistics alone would misread it when the
/// grid misses the stable set. Any bounded recurrence or mixed evidence means
/// no nontrivial attractor–repeller pair exists.
///
/// Costs grow exponentially with dimension, hence the `dim <= 3` bound.
pub fn oracle_classify_flow(
    d: &Endomorphism,
    grid: &[DVector<f64>],
    params: &OracleParams,
) -> Result<OracleVerdict> {
    if d.dim() > 3 {
        return Err(Error::Precondition {
            hypothesis: "oracle requires dim <= 3".into(),
        });
    }
    if grid.is_empty() {
        return Err(Error::InvalidInput("grid must be nonempty".into()));
    }
    let mut fates = [[0usize; 4]; 2]; // [direction][fate]
    let mut n_bounded = 0usize;
    let mut n_undecided = 0usize;
    for (dir, dt) in [(0usize, params.step), (1, -params.step)] {
        let e = spectra::matrix_exp(d, dt)?;
        let n_steps = (params.horizon / params.step).ceil() as usize;
        let late_start = (n_steps as f64 * 0.8) as usize;
        for v in grid {
            if v.norm() == 0.0 {
                continue;
            }
            let mut u = v / v.norm();
            let mut logr = v.norm().ln();
            let mut late_first = f64::NAN;
            for step in 1..=n_steps {
                u = e.matrix() * &u;
                let nu = u.norm();
                logr += nu.ln();
                u /= nu;
                if step == late_start {
                    late_first = logr;
                }
            }
            let fate = if logr > params.escape_radius.ln() {
                Fate::Escaped
            } else if logr < params.collapse_radius.ln() {
                Fate::Collapsed
            } else {
                let late_span = (n_steps - late_start) as f64 * params.step;
                let slope = (logr - late_first) / late_span;
                if slope.abs() <= params.slope_tol {
                    Fate::Bounded
                } else {
                    Fate::Undecided
                }
            };
            match fate {
                Fate::Collapsed => fates[dir][0] += 1,
                Fate::Escaped => fates[dir][1] += 1,
                Fate::Bounded => {
                    fates[dir][2] += 1;
                    n_bounded += 1;
                }
                Fate::Undecided => {
                    fates[dir][3] += 1;
                    n_undecided += 1;
                }
            }
        }
    }

    if n_undecided > 0 {
        return Ok(OracleVerdict::Inconclusive);
    }
    let total = grid.iter().filter(|v| v.norm() > 0.0).count();
    if total == 0 {
        return Err(Error::InvalidInput("grid contains only the origin".into()));
    }
    let all = |dir: usize, fate: usize| fates[dir][fate] == total;
    let verdict = if n_bounded > 0 {
        OracleVerdict::Kind(FlowKind::ChainRecurrent)
    } else if all(0, 0) && all(1, 1) {
        OracleVerdict::Kind(FlowKind::AttractorZero)
    } else if all(0, 1) && all(1, 0) {
        OracleVerdict::Kind(FlowKind::AttractorInfinity)
    } else {
        // mixed fates in some direction, or escape both ways (a saddle)
        OracleVerdict::Kind(FlowKind::ChainRecurrent)
    };
    Ok(verdict)
}

/// Trajectory samples `(t, v(t), log ||v(t)||)` for CSV export. Points beyond
/// the escape radius are reported with the unit direction scaled to the
/// radius, and the true log-norm.
pub fn trajectory_samples(
    d: &Endomorphism,
    v: &DVector<f64>,
    horizon: f64,
    step: f64,
    radius: f64,
) -> Result<Vec<(f64, DVector<f64>, f64)>> {
    if v.norm() == 0.0 {
        let mut out = Vec::new();
        let mut t = 0.0;
        while t <= horizon + 1e-12 {
            out.push((t, v.clone(), f64::NEG_INFINITY));
            t += step;
        }
        return Ok(out);
    }
    let e = spectra::matrix_exp(d, step)?;
    let mut u = v / v.norm();
    let mut logr = v.norm().ln();
    let mut out = vec![(0.0, v.clone(), logr)];
    let mut t = step;
    while t <= horizon + 1e-12 {
        u = e.matrix() * &u;
        let nu = u.norm();
        logr += nu.ln();
        u /= nu;
        let point = if logr.exp() <= radius {
            &u * logr.exp()
        } else {
            &u * radius
        };
        out.push((t, point, logr));
        t += step;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::Direction;

    fn endo(dim: usize, rows: &[f64]) -> Endomorphism {
        Endomorphism::from_rows(dim, rows).unwrap()
    }

    #[test]
    fn classify_examples() {
        let d = endo(2, &[-1.0, 0.0, 0.0, -2.0]);
        assert_eq!(classify_flow(&d).kind, FlowKind::AttractorZero);

        let d = endo(2, &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(classify_flow(&d).kind, FlowKind::ChainRecurrent);

        let rot = endo(2, &[0.0, 1.0, -1.0, 0.0]);
        let c = classify_flow(&rot);
        assert_eq!(c.kind, FlowKind::ChainRecurrent);
        assert!(c.boundary_flag);

        let d = endo(1, &[3.0]);
        assert_eq!(classify_flow(&d).kind, FlowKind::AttractorInfinity);
    }

    #[test]
    fn scaling_invariance_of_verdict() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.gen_range(1..=3);
            let rows: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let d = endo(n, &rows);
            let c = rng.gen_range(0.1..5.0);
            let scaled = Endomorphism::new(d.matrix() * c).unwrap();
            let neg = Endomorphism::new(d.matrix() * -c).unwrap();
            let base = classify_flow(&d).kind;
            assert_eq!(classify_flow(&scaled).kind, base);
            let swapped = match base {
                FlowKind::AttractorZero => FlowKind::AttractorInfinity,
                FlowKind::AttractorInfinity => FlowKind::AttractorZero,
                FlowKind::ChainRecurrent => FlowKind::ChainRecurrent,
            };
            assert_eq!(classify_flow(&neg).kind, swapped);
        }
    }

    #[test]
    fn omega_fixed_point_zero() {
        let d = endo(2, &[0.0, 1.0, -1.0, 0.0]);
        let zero = DVector::from_vec(vec![0.0, 0.0]);
        let est = omega_limit(&d, &zero, Direction::Forward, &OmegaParams::default()).unwrap();
        assert_eq!(est.points.len(), 1);
        assert_eq!(est.points[0], zero);
        assert!(!est.contains_infinity);
    }

    #[test]
    fn omega_circle_for_rotation() {
        let d = endo(2, &[0.0, 1.0, -1.0, 0.0]);
        let v = DVector::from_vec(vec![1.0, 0.0]);
        let params = OmegaParams {
            burn_in: 5.0,
            horizon: 40.0,
            step: 0.01,
            ..OmegaParams::default()
        };
        let est = omega_limit(&d, &v, Direction::Forward, &params).unwrap();
        assert!(!est.contains_infinity);
        // all representatives on the unit circle
        for p in &est.points {
            assert!((p.norm() - 1.0).abs() < 1e-9);
        }
        // and they cover it: no azimuthal gap larger than ~0.1 rad
        let mut angles: Vec<f64> = est.points.iter().map(|p| p[1].atan2(p[0])).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut max_gap = angles[0] + 2.0 * std::f64::consts::PI - angles[angles.len() - 1];
        for w in angles.windows(2) {
            max_gap = max_gap.max(w[1] - w[0]);
        }
        assert!(max_gap < 0.1, "circle coverage gap {max_gap}");
    }

    #[test]
    fn omega_contraction_reaches_zero() {
        let d = endo(1, &[-1.0]);
        let v = DVector::from_vec(vec![1.0]);
        let est = omega_limit(&d, &v, Direction::Forward, &OmegaParams::default()).unwrap();
        assert!(!est.contains_infinity);
        assert!(est.points.iter().all(|p| p.norm() < 1e-20));
    }

    #[test]
    fn omega_escape_flags_infinity() {
        let d = endo(1, &[1.0]);
        let v = DVector::from_vec(vec![1.0]);
        let est = omega_limit(&d, &v, Direction::Forward, &OmegaParams::default()).unwrap();
        assert!(est.contains_infinity);
        assert!(est.points.is_empty());
    }

    #[test]
    fn omega_symmetry_rotation_and_mautner() {
        let d = endo(2, &[0.0, 1.0, -1.0, 0.0]);
        let params = OmegaParams {
            burn_in: 10.0,
            horizon: 200.0,
            step: 0.01,
            cluster_resolution: 5e-3,
            ..OmegaParams::default()
        };
        let rep = check_omega_symmetry(&d, 5, 0.05, 42, &params).unwrap();
        assert!(rep.pass, "max distance {}", rep.max_distance);

        // zero map: every point fixed, omega sets are {v}
        let z = Endomorphism::zeros(2);
        let repz = check_omega_symmetry(&z, 3, 1e-9, 1, &OmegaParams::default()).unwrap();
        assert!(repz.pass);

        let theta = std::f64::consts::SQRT_2;
        let mautner = endo(
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                -1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, theta, //
                0.0, 0.0, -theta, 0.0,
            ],
        );
        let params = OmegaParams {
            burn_in: 200.0,
            horizon: 2000.0,
            step: 0.012,
            cluster_resolution: 5e-3,
            ..OmegaParams::default()
        };
        let rep = check_omega_symmetry(&mautner, 2, 0.05, 7, &params).unwrap();
        assert!(rep.pass, "max distance {}", rep.max_distance);
    }

    #[test]
    fn omega_symmetry_preconditions_named() {
        let d = endo(2, &[1.0, 0.0, 0.0, -1.0]);
        let err = check_omega_symmetry(&d, 2, 0.05, 0, &OmegaParams::default()).unwrap_err();
        match err {
            Error::Precondition { hypothesis } => {
                assert!(hypothesis.contains("purely imaginary"))
            }
            other => panic!("unexpected {other:?}"),
        }

        let jordan = endo(2, &[0.0, 1.0, 0.0, 0.0]);
        let err = check_omega_symmetry(&jordan, 2, 0.05, 0, &OmegaParams::default()).unwrap_err();
        match err {
            Error::Precondition { hypothesis } => assert!(hypothesis.contains("semisimple")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oracle_examples() {
        let p = OracleParams::default();
        let d = endo(2, &[-1.0, 0.0, 0.0, -2.0]);
        assert_eq!(
            oracle_classify_flow(&d, &oracle_grid(2), &p).unwrap(),
            OracleVerdict::Kind(FlowKind::AttractorZero)
        );
        let d = endo(1, &[1.0]);
        assert_eq!(
            oracle_classify_flow(&d, &oracle_grid(1), &p).unwrap(),
            OracleVerdict::Kind(FlowKind::AttractorInfinity)
        );
        let d = endo(2, &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(
            oracle_classify_flow(&d, &oracle_grid(2), &p).unwrap(),
            OracleVerdict::Kind(FlowKind::ChainRecurrent)
        );
        let rot = endo(2, &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(
            oracle_classify_flow(&rot, &oracle_grid(2), &p).unwrap(),
            OracleVerdict::Kind(FlowKind::ChainRecurrent)
        );
    }

    #[test]
    fn oracle_rejects_large_dims() {
        let d = Endomorphism::identity(4);
        assert!(oracle_classify_flow(&d, &oracle_grid(3), &OracleParams::default()).is_err());
    }

    #[test]
    fn oracle_agrees_with_classifier_away_from_boundary() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 30 {
            let n = rng.gen_range(1..=3);
            let rows: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let d = endo(n, &rows);
            let spec = spectra::compute_spectrum(&d);
            if spec.eigenvalues.iter().any(|(z, _)| z.re.abs() < 0.05) {
                continue;
            }
            checked += 1;
            let exact = classify_flow(&d).kind;
            let oracle =
                oracle_classify_flow(&d, &oracle_grid(n), &OracleParams::default()).unwrap();
            match oracle {
                OracleVerdict::Kind(k) => assert_eq!(k, exact),
                OracleVerdict::Inconclusive => {}
            }
        }
    }

    #[test]
    fn spectral_escape_is_monotone_beyond_burn_in() {
        // fastest-direction trajectories grow monotonically in log norm
        let d = endo(2, &[1.0, 0.0, 0.0, -0.5]);
        let v = DVector::from_vec(vec![1.0, 1.0]);
        let samples = trajectory_samples(&d, &v, 60.0, 0.5, 1e12).unwrap();
        let start = 20; // t = 10
        for w in samples[start..].windows(2) {
            assert!(w[1].2 > w[0].2);
        }
        assert!(samples.last().unwrap().2 > 1e6f64.ln());
    }
}
