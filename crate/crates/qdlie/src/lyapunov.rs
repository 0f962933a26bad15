//! Lyapunov space decomposition and the fast/slow filtrations governing the
//! exponential growth rates of `exp(tD)v`.
//!
//! For distinct real parts `λ_1 > ... > λ_ℓ` of the spectrum, the Lyapunov
//! space `V(λ_j)` is the sum of the real generalized eigenspaces of all
//! eigenvalues with that real part, and
//!
//! ```text
//! V = V(λ_1) ∔ ... ∔ V(λ_ℓ)
//! V_j = V(λ_j) ∔ ... ∔ V(λ_ℓ)     (slow filtration, decreasing)
//! W_j = V(λ_1) ∔ ... ∔ V(λ_j)     (fast filtration, increasing)
//! ```
//!
//! A nonzero `v` lies in `V_j \ V_{j+1}` exactly when the forward growth rate
//! of `exp(tD)v` is `λ_j`, and in `W_k \ W_{k-1}` exactly when the backward
//! rate is `-λ_k`. The spaces are computed from spectral data (kernels of real
//! polynomial factors of `D`); the growth-rate limits serve as the independent
//! oracle in the tests.

use nalgebra::{DMatrix, DVector};

use crate::spectra::{self, Endomorphism, Spectrum};
use crate::{Error, Result};

/// Residual tolerance (relative to `||v||`) for filtration membership after
/// orthogonal projection.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Time direction on the flow `exp(tD)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone)]
pub struct LyapunovDecomposition {
    /// Distinct eigenvalue real parts, strictly decreasing.
    pub lambdas: Vec<f64>,
    /// Orthonormal basis (columns) of each `V(λ_j)`.
    pub spaces: Vec<DMatrix<f64>>,
    /// Orthonormal bases of the decreasing slow filtration `V_j`.
    pub slow_filtration: Vec<DMatrix<f64>>,
    /// Orthonormal bases of the increasing fast filtration `W_j`.
    pub fast_filtration: Vec<DMatrix<f64>>,
    pub spectrum: Spectrum,
}

impl LyapunovDecomposition {
    pub fn levels(&self) -> usize {
        self.lambdas.len()
    }
}

/// Lyapunov decomposition of `D` with cluster resolution `1e2 * eps_spec`.
///
/// Each `V(λ)` is the kernel of the real polynomial collecting the factors
/// `(D - μ)` (real `μ`) and `(D² - 2 Re(μ) D + |μ|² I)` (conjugate pairs) over
/// the eigenvalue clusters with `Re μ = λ`, each raised to the cluster
/// multiplicity. The kernel dimension is pinned by the algebraic counts, so a
/// merged cluster (nearby eigenvalues, Jordan structure) lands in one space.
pub fn lyapunov_decomposition(d: &Endomorphism, tol: f64) -> Result<LyapunovDecomposition> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let n = d.dim();
    let spectrum = spectra::compute_spectrum(d);
    let groups = real_part_groups(&spectrum);

    let mut lambdas = Vec::with_capacity(groups.len());
    let mut spaces = Vec::with_capacity(groups.len());
    for (lambda, clusters) in &groups {
        lambdas.push(*lambda);
        spaces.push(lyapunov_space(d, clusters));
    }
    debug_assert_eq!(spaces.iter().map(|b| b.ncols()).sum::<usize>(), n);

    let ell = lambdas.len();
    let mut slow = Vec::with_capacity(ell);
    let mut fast = Vec::with_capacity(ell);
    for j in 0..ell {
        slow.push(orthonormal_span(&spaces[j..], n));
        fast.push(orthonormal_span(&spaces[..=j], n));
    }

    Ok(LyapunovDecomposition {
        lambdas,
        spaces,
        slow_filtration: slow,
        fast_filtration: fast,
        spectrum,
    })
}

/// Upper-half-plane clusters grouped by real part: `(λ, [(μ, mult)])`,
/// λ strictly decreasing.
fn real_part_groups(spec: &Spectrum) -> Vec<(f64, Vec<(spectra::C64, usize)>)> {
    let tol = spectra::CLUSTER_FACTOR * spec.eps_spec;
    let mut clusters = spectra::upper_clusters(spec);
    clusters.sort_by(|a, b| b.0.re.partial_cmp(&a.0.re).unwrap());
    let mut groups: Vec<(f64, Vec<(spectra::C64, usize)>)> = Vec::new();
    for (mu, m) in clusters {
        // real dimension weight: conjugate pairs count twice
        let w = if mu.im > 0.0 { 2 * m } else { m };
        match groups.last_mut() {
            Some((lambda, members)) if (*lambda - mu.re).abs() <= tol => {
                let total: usize = members
                    .iter()
                    .map(|(z, k)| if z.im > 0.0 { 2 * k } else { *k })
                    .sum();
                *lambda = (*lambda * total as f64 + mu.re * w as f64) / (total + w) as f64;
                members.push((mu, m));
            }
            _ => groups.push((mu.re, vec![(mu, m)])),
        }
    }
    groups
}

/// Kernel of the real factor polynomial for one real-part group.
fn lyapunov_space(d: &Endomorphism, clusters: &[(spectra::C64, usize)]) -> DMatrix<f64> {
    let n = d.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let mut p = id.clone();
    let mut expected = 0usize;
    for &(mu, m) in clusters {
        let factor = if mu.im > 0.0 {
            expected += 2 * m;
            d.matrix() * d.matrix() - 2.0 * mu.re * d.matrix() + mu.norm_sqr() * &id
        } else {
            expected += m;
            d.matrix() - mu.re * &id
        };
        let nf = factor.norm().max(f64::MIN_POSITIVE);
        let factor = factor / nf;
        for _ in 0..m {
            p = &p * &factor;
            let np = p.norm();
            if np > 0.0 {
                p /= np;
            }
        }
    }
    if expected == n {
        // the whole space; skip the SVD and return the standard basis
        return id;
    }
    let svd = p.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut basis = DMatrix::<f64>::zeros(n, expected);
    for k in 0..expected {
        basis.set_column(k, &vt.row(n - 1 - k).transpose());
    }
    basis
}

/// Orthonormal basis of the span of several orthonormal blocks.
fn orthonormal_span(blocks: &[DMatrix<f64>], n: usize) -> DMatrix<f64> {
    let k: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut cat = DMatrix::<f64>::zeros(n, k);
    let mut c = 0;
    for b in blocks {
        for j in 0..b.ncols() {
            cat.set_column(c, &b.column(j));
            c += 1;
        }
    }
    if k == n {
        return DMatrix::identity(n, n);
    }
    let qr = cat.qr();
    let q = qr.q();
    q.columns(0, k).into_owned()
}

/// Empirical Lyapunov exponent `(1/T) log ||exp(±T D) v||`.
///
/// Trajectories are renormalized per step, so the estimate cannot overflow
/// for `T ≤ 100`, `||D|| ≤ 10` (and far beyond).
pub fn growth_rate(
    d: &Endomorphism,
    v: &DVector<f64>,
    direction: Direction,
    horizon: f64,
) -> Result<f64> {
    if v.norm() == 0.0 {
        return Err(Error::InvalidInput("v must be nonzero".into()));
    }
    if !(horizon >= 10.0) {
        return Err(Error::Precondition {
            hypothesis: "horizon T >= 10".into(),
        });
    }
    let t = match direction {
        Direction::Forward => horizon,
        Direction::Backward => -horizon,
    };
    let (_, logr) = spectra::exp_apply_renormalized(d, v, t, 0.5)?;
    Ok(logr / horizon)
}

/// Log-norm samples `(t, log ||exp(tD) v||)` for CSV export.
pub fn log_norm_trajectory(
    d: &Endomorphism,
    v: &DVector<f64>,
    horizon: f64,
    step: f64,
) -> Result<Vec<(f64, f64)>> {
    if v.norm() == 0.0 || !(step > 0.0) || !(horizon > 0.0) {
        return Err(Error::InvalidInput(
            "v must be nonzero and step, horizon positive".into(),
        ));
    }
    let e = spectra::matrix_exp(d, step)?;
    let mut u = v.clone();
    let mut logr = 0.0f64;
    let mut out = vec![(0.0, v.norm().ln())];
    let mut t = 0.0;
    while t < horizon - 1e-12 {
        u = e.matrix() * u;
        let nu = u.norm();
        logr += nu.ln();
        u /= nu;
        t += step;
        out.push((t, v.norm().ln() + logr));
    }
    Ok(out)
}

/// Filtration indices of `v`: the slow index `j` with `v ∈ V_j \ V_{j+1}` and
/// the fast index `k` with `v ∈ W_k \ W_{k-1}` (both 1-based).
///
/// Membership is decided by the orthogonal-projection residual against `tol`
/// (use [`MEMBERSHIP_TOL`] by default).
pub fn classify_vector(
    dec: &LyapunovDecomposition,
    v: &DVector<f64>,
    tol: f64,
) -> Result<(usize, usize)> {
    if v.norm() == 0.0 {
        return Err(Error::InvalidInput("v must be nonzero".into()));
    }
    let ell = dec.levels();
    let mut j = 1;
    for idx in (0..ell).rev() {
        if in_span(&dec.slow_filtration[idx], v, tol) {
            j = idx + 1;
            break;
        }
    }
    let mut k = ell;
    for idx in 0..ell {
        if in_span(&dec.fast_filtration[idx], v, tol) {
            k = idx + 1;
            break;
        }
    }
    Ok((j, k))
}

fn in_span(basis: &DMatrix<f64>, v: &DVector<f64>, tol: f64) -> bool {
    let coeff = basis.transpose() * v;
    let residual = v - basis * coeff;
    residual.norm() <= tol * v.norm()
}

/// `||(I - P_j) D P_j||` for each Lyapunov space: the numerical D-invariance
/// defect (zero in exact arithmetic).
pub fn invariance_defects(d: &Endomorphism, dec: &LyapunovDecomposition) -> Vec<f64> {
    let n = d.dim();
    let id = DMatrix::<f64>::identity(n, n);
    dec.spaces
        .iter()
        .map(|b| {
            let p = b * b.transpose();
            ((&id - &p) * d.matrix() * &p).norm()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn endo(dim: usize, rows: &[f64]) -> Endomorphism {
        Endomorphism::from_rows(dim, rows).unwrap()
    }

    #[test]
    fn diagonal_decomposition() {
        let d = endo(3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -2.0]);
        let dec = lyapunov_decomposition(&d, 1e-9).unwrap();
        assert_eq!(dec.lambdas, vec![3.0, 1.0, -2.0]);
        for (j, axis) in [(0usize, 0usize), (1, 1), (2, 2)] {
            let b = &dec.spaces[j];
            assert_eq!(b.ncols(), 1);
            assert_relative_eq!(b.column(0)[axis].abs(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_with_drift_single_space() {
        let sigma = 0.5;
        let d = endo(2, &[sigma, 1.0, -1.0, sigma]);
        let dec = lyapunov_decomposition(&d, 1e-9).unwrap();
        assert_eq!(dec.levels(), 1);
        assert_relative_eq!(dec.lambdas[0], sigma, epsilon = 1e-12);
        assert_eq!(dec.spaces[0].ncols(), 2);
    }

    #[test]
    fn jordan_block_generalized_eigenspace() {
        // (D - 5I)^3 = 0 is the independent oracle for V(5) = R^3
        let d = endo(3, &[5.0, 1.0, 0.0, 0.0, 5.0, 1.0, 0.0, 0.0, 5.0]);
        let shifted = d.matrix() - 5.0 * DMatrix::<f64>::identity(3, 3);
        let cubed = &shifted * &shifted * &shifted;
        assert!(cubed.norm() < 1e-12);

        let dec = lyapunov_decomposition(&d, 1e-9).unwrap();
        assert_eq!(dec.levels(), 1);
        assert_relative_eq!(dec.lambdas[0], 5.0, epsilon = 1e-9);
        assert_eq!(dec.spaces[0].ncols(), 3);
    }

    #[test]
    fn growth_rate_examples() {
        let d = endo(2, &[2.0, 0.0, 0.0, -1.0]);
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let mix = DVector::from_vec(vec![1.0, 1.0]);
        let g = growth_rate(&d, &e1, Direction::Forward, 50.0).unwrap();
        assert_relative_eq!(g, 2.0, epsilon = 1e-6);
        // backward: the slowest mode dominates, rate -lambda_2 = 1
        let g = growth_rate(&d, &mix, Direction::Backward, 50.0).unwrap();
        assert_relative_eq!(g, 1.0, epsilon = 1e-2);

        // isometric flow: the estimate carries only the (1/T) log||v|| offset
        let rot = endo(2, &[0.0, 1.0, -1.0, 0.0]);
        let g = growth_rate(&rot, &mix, Direction::Forward, 50.0).unwrap();
        assert_relative_eq!(g, mix.norm().ln() / 50.0, epsilon = 1e-9);
        let unit = DVector::from_vec(vec![1.0, 0.0]);
        let g = growth_rate(&rot, &unit, Direction::Forward, 50.0).unwrap();
        assert!(g.abs() < 1e-9);
    }

    #[test]
    fn growth_rate_preconditions() {
        let d = endo(1, &[1.0]);
        let zero = DVector::from_vec(vec![0.0]);
        assert!(growth_rate(&d, &zero, Direction::Forward, 50.0).is_err());
        let v = DVector::from_vec(vec![1.0]);
        assert!(growth_rate(&d, &v, Direction::Forward, 5.0).is_err());
    }

    #[test]
    fn classify_vector_examples() {
        let d = endo(3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -2.0]);
        let dec = lyapunov_decomposition(&d, 1e-9).unwrap();
        let e2 = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert_eq!(classify_vector(&dec, &e2, MEMBERSHIP_TOL).unwrap(), (2, 2));
        let mix = DVector::from_vec(vec![1.0, 0.0, 1.0]);
        assert_eq!(classify_vector(&dec, &mix, MEMBERSHIP_TOL).unwrap(), (1, 3));

        let scalar = endo(1, &[5.0]);
        let dec1 = lyapunov_decomposition(&scalar, 1e-9).unwrap();
        let v = DVector::from_vec(vec![-0.3]);
        assert_eq!(classify_vector(&dec1, &v, MEMBERSHIP_TOL).unwrap(), (1, 1));
    }

    #[test]
    fn classify_matches_growth_oracle() {
        let d = endo(3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -2.0]);
        let dec = lyapunov_decomposition(&d, 1e-9).unwrap();
        let v = DVector::from_vec(vec![1.0, 0.0, 1.0]);
        let (j, k) = classify_vector(&dec, &v, MEMBERSHIP_TOL).unwrap();
        let fwd = growth_rate(&d, &v, Direction::Forward, 50.0).unwrap();
        let bwd = growth_rate(&d, &v, Direction::Backward, 50.0).unwrap();
        assert_relative_eq!(fwd, dec.lambdas[j - 1], epsilon = 1e-2);
        assert_relative_eq!(bwd, -dec.lambdas[k - 1], epsilon = 1e-2);
    }

    #[test]
    fn direct_sum_and_invariance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let n = rng.gen_range(2..=4);
            let rows: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let d = endo(n, &rows);
            let dec = lyapunov_decomposition(&d, 1e-9).unwrap();
            let total: usize = dec.spaces.iter().map(|b| b.ncols()).sum();
            assert_eq!(total, n);
            // concatenated basis has full rank n
            let mut cat = DMatrix::<f64>::zeros(n, n);
            let mut c = 0;
            for b in &dec.spaces {
                for j in 0..b.ncols() {
                    cat.set_column(c, &b.column(j));
                    c += 1;
                }
            }
            let sv = cat.svd(false, false).singular_values;
            assert!(
                sv[n - 1] > 1e-8,
                "direct-sum basis lost rank: smallest sv {}",
                sv[n - 1]
            );
            for defect in invariance_defects(&d, &dec) {
                assert!(defect <= 1e-7 * d.frobenius_norm().max(1.0));
            }
            // strictly decreasing lambdas
            for w in dec.lambdas.windows(2) {
                assert!(w[0] > w[1]);
            }
        }
    }

    #[test]
    fn filtration_nesting() {
        let d = endo(3, &[2.0, 1.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, -1.0]);
        let dec = lyapunov_decomposition(&d, 1e-9).unwrap();
        let ell = dec.levels();
        assert_eq!(ell, 3);
        // V_j ⊇ V_{j+1} and W_j ⊆ W_{j+1}
        for j in 0..ell - 1 {
            let fine = &dec.slow_filtration[j + 1];
            for c in 0..fine.ncols() {
                assert!(in_span(
                    &dec.slow_filtration[j],
                    &fine.column(c).into_owned(),
                    1e-8
                ));
            }
            let coarse = &dec.fast_filtration[j];
            for c in 0..coarse.ncols() {
                assert!(in_span(
                    &dec.fast_filtration[j + 1],
                    &coarse.column(c).into_owned(),
                    1e-8
                ));
            }
        }
        // V(λ_j) ⊆ V_j ∩ W_j
        for j in 0..ell {
            let vj = &dec.spaces[j];
            for c in 0..vj.ncols() {
                let col = vj.column(c).into_owned();
                assert!(in_span(&dec.slow_filtration[j], &col, 1e-8));
                assert!(in_span(&dec.fast_filtration[j], &col, 1e-8));
            }
        }
    }
}
