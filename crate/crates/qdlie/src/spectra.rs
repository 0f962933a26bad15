//! Real spectral toolkit: eigenvalues with multiplicity, Jordan–Chevalley
//! splitting, and dense matrix exponentials.
//!
//! Everything downstream (Lyapunov spaces, flow classification, the
//! regularity report) consumes the spectral data produced here. Eigenvalues
//! are computed through a real Schur reduction, so conjugate symmetry is
//! enforced exactly in the reported data, and all "is zero / is purely
//! imaginary" questions are asked relative to the scale-aware tolerance
//! [`Endomorphism::eps_spec`].

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Relative factor for the default spectral tolerance.
pub const EPS_SPEC_REL: f64 = 1e-9;
/// Eigenvalues closer than `CLUSTER_FACTOR * eps_spec` are merged into one
/// cluster with summed multiplicity.
pub const CLUSTER_FACTOR: f64 = 1e2;

/// A real n×n matrix `D`, the generator of the flow `exp(tD)` and of the
/// semidirect product `R ⋉_D V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Endomorphism {
    entries: DMatrix<f64>,
}

/// JSON wire format for matrices: `{"dim": n, "rows": [[...], ...]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

impl Endomorphism {
    /// Wraps a square matrix with finite entries.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.nrows() != entries.ncols() {
            return Err(Error::InvalidInput(format!(
                "matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Self { entries })
    }

    pub fn from_rows(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                rows.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, rows))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let parsed: MatrixJson = serde_json::from_str(s)?;
        if parsed.rows.len() != parsed.dim || parsed.rows.iter().any(|r| r.len() != parsed.dim) {
            return Err(Error::InvalidInput(format!(
                "rows do not form a {0}x{0} matrix",
                parsed.dim
            )));
        }
        let flat: Vec<f64> = parsed.rows.into_iter().flatten().collect();
        Self::from_rows(parsed.dim, &flat)
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            dim: self.dim(),
            rows: (0..self.dim())
                .map(|i| (0..self.dim()).map(|j| self.entries[(i, j)]).collect())
                .collect(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    /// Scale-aware absolute tolerance for spectral zero tests:
    /// `1e-9 * max(1, ||D||_F)`.
    pub fn eps_spec(&self) -> f64 {
        EPS_SPEC_REL * self.frobenius_norm().max(1.0)
    }
}

/// Eigenvalues of the complexification of `D`, conjugate-closed, with
/// algebraic multiplicities summing to the dimension.
///
/// Entries are ordered by real part descending, then imaginary part
/// descending, so the output is deterministic.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<(C64, usize)>,
    pub frobenius_norm: f64,
    pub eps_spec: f64,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.iter().map(|(_, m)| m).sum()
    }

    /// Distinct real parts, descending, clustered at `CLUSTER_FACTOR * eps`.
    pub fn real_parts(&self) -> Vec<(f64, usize)> {
        let tol = CLUSTER_FACTOR * self.eps_spec;
        let mut parts: Vec<(f64, usize)> = Vec::new();
        let mut sorted = self.eigenvalues.clone();
        sorted.sort_by(|a, b| b.0.re.partial_cmp(&a.0.re).unwrap());
        for (z, m) in sorted {
            match parts.last_mut() {
                Some((lambda, count)) if (*lambda - z.re).abs() <= tol => {
                    // running weighted mean keeps the cluster center stable
                    *lambda = (*lambda * *count as f64 + z.re * m as f64)
                        / (*count + m) as f64;
                    *count += m;
                }
                _ => parts.push((z.re, m)),
            }
        }
        parts
    }

    pub fn max_re(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|(z, _)| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_re(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|(z, _)| z.re)
            .fold(f64::INFINITY, f64::min)
    }

    /// True when every eigenvalue is purely imaginary or zero at tolerance
    /// `10 * eps_spec`.
    pub fn purely_imaginary(&self) -> bool {
        let tol = 10.0 * self.eps_spec;
        self.eigenvalues.iter().all(|(z, _)| z.re.abs() <= tol)
    }

    /// True when the spectrum is `{0}` at tolerance `10 * eps_spec`.
    pub fn all_zero(&self) -> bool {
        let tol = 10.0 * self.eps_spec;
        self.eigenvalues.iter().all(|(z, _)| z.norm() <= tol)
    }

    /// True when some eigenvalue is within `10 * eps_spec` of the boundary of
    /// the open conditions used by the flow and regularity dichotomies.
    pub fn near_imaginary_axis(&self) -> bool {
        let tol = 10.0 * self.eps_spec;
        self.eigenvalues.iter().any(|(z, _)| z.re.abs() <= tol)
    }
}

/// The splitting `D = S + N` with `S` semisimple, `N` nilpotent, `SN = NS`.
#[derive(Debug, Clone)]
pub struct JordanChevalley {
    pub semisimple_part: Endomorphism,
    pub nilpotent_part: Endomorphism,
    pub is_semisimple: bool,
    /// Set when the eigenvector basis is ill-conditioned beyond tolerance;
    /// never a silent failure.
    pub conditioning_warning: Option<String>,
}

/// Eigenvalues of the complexification of `D`.
///
/// Pairs non-real values into exact conjugates, snaps near-real values onto
/// the real axis at `eps_spec`, and merges eigenvalues within
/// `CLUSTER_FACTOR * eps_spec` into one cluster with summed multiplicity.
pub fn compute_spectrum(d: &Endomorphism) -> Spectrum {
    let eps = d.eps_spec();
    let raw = d.entries.clone().complex_eigenvalues();
    let clustered = cluster_conjugate_closed(raw.as_slice(), CLUSTER_FACTOR * eps, eps);
    Spectrum {
        eigenvalues: clustered,
        frobenius_norm: d.frobenius_norm(),
        eps_spec: eps,
    }
}

/// Conjugate-closed clustering of a raw eigenvalue list.
///
/// Works in the closed upper half plane: near-real values are snapped to the
/// real axis, strictly complex values carry their conjugate implicitly. A
/// cluster that mixes real values with a complex pair has imaginary parts
/// below the cluster resolution and collapses onto the real axis. The result
/// is exactly conjugate-symmetric and its multiplicities sum to the input
/// length.
fn cluster_conjugate_closed(raw: &[C64], radius: f64, snap: f64) -> Vec<(C64, usize)> {
    struct Cluster {
        center: C64,
        count: usize,   // eigenvalues represented (conjugates counted)
        n_real: usize,  // how many were real after snapping
    }

    // representatives in the closed upper half plane
    let mut upper: Vec<C64> = raw
        .iter()
        .map(|z| {
            if z.im.abs() <= snap {
                C64::new(z.re, 0.0)
            } else {
                C64::new(z.re, z.im.abs())
            }
        })
        .collect();
    upper.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());

    // greedy merge of neighbors within the cluster radius
    let mut clusters: Vec<Cluster> = Vec::new();
    for z in upper {
        match clusters.last_mut() {
            Some(c) if (c.center - z).norm() <= radius => {
                c.center = (c.center * c.count as f64 + z) / (c.count as f64 + 1.0);
                c.count += 1;
                if z.im == 0.0 {
                    c.n_real += 1;
                }
            }
            _ => clusters.push(Cluster {
                center: z,
                count: 1,
                n_real: usize::from(z.im == 0.0),
            }),
        }
    }

    let mut out: Vec<(C64, usize)> = Vec::new();
    for c in clusters {
        // both members of a conjugate pair land in the same cluster, so the
        // strictly-complex count is even unless the pair straddles the real
        // axis together with real eigenvalues
        let n_complex = c.count - c.n_real;
        if n_complex % 2 == 0 && c.n_real == 0 && n_complex > 0 {
            out.push((c.center, n_complex / 2));
            out.push((c.center.conj(), n_complex / 2));
        } else {
            // pure real cluster, or a mixed one collapsing to the real axis
            out.push((C64::new(c.center.re, 0.0), c.count));
        }
    }
    out.sort_by(|a, b| (b.0.re, b.0.im).partial_cmp(&(a.0.re, a.0.im)).unwrap());
    out
}

/// Clusters of the spectrum in the closed upper half plane, as
/// `(center, algebraic multiplicity of the center)`. Complex centers stand
/// for themselves plus their conjugate.
pub(crate) fn upper_clusters(spec: &Spectrum) -> Vec<(C64, usize)> {
    spec.eigenvalues
        .iter()
        .filter(|(z, _)| z.im >= 0.0)
        .map(|&(z, m)| (z, m))
        .collect()
}

/// Jordan–Chevalley splitting `D = S + N` by spectral projections from the
/// clustered eigenvalues.
///
/// `S` carries the cluster centers as (exact) eigenvalues on the generalized
/// eigenspaces of `D`; `N = D - S`. For clusters that merged distinct but
/// nearby eigenvalues the invariants hold within `tol`, which is the intended
/// reading of clustering. A poorly separated eigenstructure surfaces as a
/// conditioning warning on the result.
pub fn jordan_chevalley(d: &Endomorphism, tol: f64) -> Result<JordanChevalley> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let n = d.dim();
    let spec = compute_spectrum(d);
    let clusters = upper_clusters(&spec);

    let dc = d.entries.map(|x| C64::new(x, 0.0));
    let mut warning: Option<String> = None;

    // basis of C^n grouped by generalized eigenspaces; the eigenspace of a
    // conjugate eigenvalue is the conjugated basis, which keeps the recombined
    // semisimple part exactly real up to roundoff
    let mut basis = DMatrix::<C64>::zeros(n, n);
    let mut centers: Vec<C64> = Vec::with_capacity(n);
    let mut col = 0usize;
    for &(mu, m) in &clusters {
        let g = generalized_eigenspace(&dc, mu, m, &mut warning);
        for c in 0..m {
            basis.set_column(col, &g.column(c));
            centers.push(mu);
            col += 1;
        }
        if mu.im > 0.0 {
            for c in 0..m {
                let conj_col = g.column(c).map(|z| z.conj());
                basis.set_column(col, &conj_col);
                centers.push(mu.conj());
                col += 1;
            }
        }
    }
    debug_assert_eq!(col, n, "generalized eigenspaces must fill the space");

    // S = X diag(centers) X^{-1}, computed through an LU solve of X^T
    let mut xl = basis.clone();
    for j in 0..n {
        let mut cj = xl.column_mut(j);
        cj *= centers[j];
    }
    // conditioning of the eigenbasis
    let sv = basis.clone().svd(false, false).singular_values;
    let cond = sv[0] / sv[n - 1].max(f64::MIN_POSITIVE);
    if cond > 1e8 {
        warning = Some(format!(
            "eigenvector basis condition number {cond:.3e} exceeds 1e8; splitting may be inaccurate"
        ));
    }
    let lu = basis.transpose().lu();
    let st = lu
        .solve(&xl.transpose())
        .ok_or_else(|| Error::InvalidInput("eigenbasis is numerically singular".into()))?;
    let s_c = st.transpose();

    let imag_norm: f64 = s_c.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    let scale = d.frobenius_norm().max(1.0);
    if imag_norm > 1e-6 * scale && warning.is_none() {
        warning = Some(format!(
            "residual imaginary part {imag_norm:.3e} in the semisimple part"
        ));
    }

    let s_real = DMatrix::from_fn(n, n, |i, j| s_c[(i, j)].re);
    let n_real = &d.entries - &s_real;
    let is_semisimple = n_real.norm() <= tol * d.frobenius_norm() + f64::MIN_POSITIVE;

    Ok(JordanChevalley {
        semisimple_part: Endomorphism { entries: s_real },
        nilpotent_part: Endomorphism { entries: n_real },
        is_semisimple,
        conditioning_warning: warning,
    })
}

/// Basis for the generalized eigenspace `ker (D - mu)^n`, forced to the known
/// algebraic dimension `m`; a weak singular-value gap at the cut is reported
/// through `warning`.
fn generalized_eigenspace(
    dc: &DMatrix<C64>,
    mu: C64,
    m: usize,
    warning: &mut Option<String>,
) -> DMatrix<C64> {
    let n = dc.nrows();
    let mut b = dc.clone();
    for i in 0..n {
        b[(i, i)] -= mu;
    }
    let norm = b.norm().max(1.0);
    b /= C64::new(norm, 0.0);
    // power up to the full dimension; rank plateaus at the algebraic
    // multiplicity (see the Jordan-block-size note in the lyapunov module)
    let mut p = b.clone();
    for _ in 1..n.min(m.max(1)) {
        p = &p * &b;
        let pn = p.norm();
        if pn > 0.0 {
            p /= C64::new(pn, 0.0);
        }
    }
    let svd = p.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let sv = &svd.singular_values;
    if n > m {
        let kept = sv[n - m - 1];
        let dropped = sv[n - m];
        if kept < 1e3 * dropped + 1e-14 && warning.is_none() {
            *warning = Some(format!(
                "weak singular-value gap ({kept:.3e} vs {dropped:.3e}) while separating a generalized eigenspace"
            ));
        }
    }
    let mut g = DMatrix::<C64>::zeros(n, m);
    for k in 0..m {
        let row = vt.row(n - 1 - k).conjugate().transpose();
        g.set_column(k, &row);
    }
    g
}

// Padé order-13 coefficients for the scaling-and-squaring exponential.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `exp(tD)` by scaling and squaring with a degree-13 Padé approximant.
///
/// Errors with the representable threshold when the result overflows f64.
pub fn matrix_exp(d: &Endomorphism, t: f64) -> Result<Endomorphism> {
    if !t.is_finite() {
        return Err(Error::InvalidInput("t must be finite".into()));
    }
    let a = &d.entries * t;
    let out = expm(&a);
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow {
            what: format!("exp(tD) with |t|*||D||_1 = {:.3e}", norm1(&a)),
            threshold: f64::MAX.ln(),
        });
    }
    Ok(Endomorphism { entries: out })
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let nrm = norm1(a);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(s);

    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let b = &PADE13;

    let u_inner = &a6 * (b[13] * &a6 + b[11] * &a4 + b[9] * &a2)
        + b[7] * &a6
        + b[5] * &a4
        + b[3] * &a2
        + b[1] * &id;
    let u = &a * u_inner;
    let v = &a6 * (b[12] * &a6 + b[10] * &a4 + b[8] * &a2)
        + b[6] * &a6
        + b[4] * &a4
        + b[2] * &a2
        + b[0] * &id;

    let lu = (&v - &u).lu();
    let mut r = lu.solve(&(&v + &u)).unwrap_or_else(|| {
        // (V - U) singular only for inputs far outside the Padé region
        DMatrix::from_element(n, n, f64::NAN)
    });
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Exponential applied to a vector with running renormalization:
/// returns `(u, log r)` with `exp(tD) v = e^{log r} u`, `||u|| = 1`.
///
/// This never overflows for the moderate per-step sizes used by the flow and
/// Lyapunov modules, because only unit vectors are propagated.
pub fn exp_apply_renormalized(
    d: &Endomorphism,
    v: &DVector<f64>,
    t: f64,
    max_step: f64,
) -> Result<(DVector<f64>, f64)> {
    let nv = v.norm();
    if nv == 0.0 {
        return Ok((v.clone(), f64::NEG_INFINITY));
    }
    let steps = (t.abs() / max_step).ceil().max(1.0);
    let dt = t / steps;
    let e = matrix_exp(d, dt)?;
    let mut u = v / nv;
    let mut logr = nv.ln();
    for _ in 0..steps as usize {
        u = e.matrix() * u;
        let nu = u.norm();
        logr += nu.ln();
        u /= nu;
    }
    Ok((u, logr))
}
