//! Energy detectors for complete and sampled simplicial signals.
//!
//! Each detector comes in two forms: a one-shot function returning a
//! [`DetectorReport`], and a prepared struct that caches the per-mask
//! factorisations and scores many signals at once.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    column_space, mul, mul_nt, mul_tn, norm_sq, numerical_rank, select_rows, sym_eigen, Matrix,
};
use crate::spectral::SubspaceBasis;

/// Relative singular-value cutoff for pseudoinverses.
pub const PINV_RTOL: f64 = 1e-10;

/// Row selector `Θ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingMask {
    ambient_dim: usize,
    selected: Vec<usize>,
}

impl SamplingMask {
    /// Indices may come in any order; they are sorted. Duplicates and
    /// out-of-range entries are rejected.
    pub fn new(ambient_dim: usize, mut selected: Vec<usize>) -> Result<Self> {
        if selected.is_empty() {
            return Err(Error::InvalidMask("no observed entries".into()));
        }
        selected.sort_unstable();
        if let Some(w) = selected.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidMask(format!("index {} repeated", w[0])));
        }
        if let Some(&last) = selected.last() {
            if last >= ambient_dim {
                return Err(Error::InvalidMask(format!(
                    "index {last} out of range for dimension {ambient_dim}"
                )));
            }
        }
        Ok(Self {
            ambient_dim,
            selected,
        })
    }

    pub fn identity(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            selected: (0..ambient_dim).collect(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// `N_o`.
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.len() == self.ambient_dim
    }

    /// Complement of the selection, increasing.
    pub fn missing(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.ambient_dim - self.len());
        let mut it = self.selected.iter().peekable();
        for i in 0..self.ambient_dim {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        out
    }

    /// `Θ x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                got: x.len(),
            });
        }
        Ok(self.selected.iter().map(|&i| x[i]).collect())
    }

    /// `Θᵀ v`: observed values back in place, zeros elsewhere.
    pub fn embed(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.ambient_dim];
        for (&i, &x) in self.selected.iter().zip(v) {
            out[i] = x;
        }
        Ok(out)
    }

    /// `Θ A`.
    pub fn rows(&self, a: MatRef<'_, f64>) -> Matrix {
        select_rows(a, &self.selected)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    H0,
    H1,
}

/// `H1` iff `t > gamma`; ties go to `H0`.
pub fn decide(t: f64, gamma: f64) -> Decision {
    if t > gamma {
        Decision::H1
    } else {
        Decision::H0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    HodgeComplete,
    DiracComplete,
    MissingOverdet,
    MissingUnderdet,
    InterpolationBaseline,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Width of the basis the test is built from.
    pub subspace_dim: usize,
    pub observed: Option<usize>,
    pub sampled_rank: Option<usize>,
    pub rank_deficient: bool,
    pub residual_h0: Option<f64>,
    pub residual_h1: Option<f64>,
    pub solver: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorReport {
    pub statistic: f64,
    pub threshold: f64,
    pub decision: Decision,
    pub sigma2: f64,
    pub dof: usize,
    pub noncentrality: Option<f64>,
    pub regime: Regime,
    pub diagnostics: Diagnostics,
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidVariance(sigma2));
    }
    Ok(())
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Column energies `‖Aᵀ xᵢ‖²` for every column of `xs`.
fn projected_energies(a: MatRef<'_, f64>, xs: MatRef<'_, f64>) -> Vec<f64> {
    let p = mul_tn(a, xs);
    column_norms_sq(p.as_ref())
}

fn column_norms_sq(m: MatRef<'_, f64>) -> Vec<f64> {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)] * m[(i, j)]).sum())
        .collect()
}

/// Complete-data detector `‖U_cᵀ x‖²` over a complement basis.
#[derive(Clone, Debug)]
pub struct ComplementDetector {
    complement: SubspaceBasis,
}

impl ComplementDetector {
    pub fn new(complement: SubspaceBasis) -> Result<Self> {
        if complement.rank() == 0 {
            return Err(Error::EmptyComplement);
        }
        Ok(Self { complement })
    }

    pub fn dof(&self) -> usize {
        self.complement.rank()
    }

    pub fn dim(&self) -> usize {
        self.complement.dim()
    }

    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        self.complement.energy(x)
    }

    /// Energies of the columns of `xs` (`dim × trials`).
    pub fn energies(&self, xs: MatRef<'_, f64>) -> Vec<f64> {
        projected_energies(self.complement.columns(), xs)
    }
}

fn complete_glrt(
    complement: &SubspaceBasis,
    x: &[f64],
    sigma2: f64,
    gamma: f64,
    regime: Regime,
) -> Result<DetectorReport> {
    check_sigma2(sigma2)?;
    check_len(complement.dim(), x.len())?;
    let det = ComplementDetector::new(complement.clone())?;
    let t = det.energy(x)? / sigma2;
    Ok(DetectorReport {
        statistic: t,
        threshold: gamma,
        decision: decide(t, gamma),
        sigma2,
        dof: det.dof(),
        noncentrality: None,
        regime,
        diagnostics: Diagnostics {
            subspace_dim: complement.dim() - complement.rank(),
            ..Default::default()
        },
    })
}

/// Hodge detector on one order: `T = ‖U_Δ̄ᵀ x‖² / σ²`.
pub fn hodge_glrt(
    complement: &SubspaceBasis,
    x: &[f64],
    sigma2: f64,
    gamma: f64,
) -> Result<DetectorReport> {
    complete_glrt(complement, x, sigma2, gamma, Regime::HodgeComplete)
}

/// Dirac detector on the stacked signal.
pub fn dirac_glrt(
    complement: &SubspaceBasis,
    x: &[f64],
    sigma2: f64,
    gamma: f64,
) -> Result<DetectorReport> {
    complete_glrt(complement, x, sigma2, gamma, Regime::DiracComplete)
}

/// Orthonormal basis of `span(Θ U)` and its rank.
fn sampled_range(basis: &SubspaceBasis, mask: &SamplingMask) -> Result<(Matrix, usize)> {
    check_len(basis.dim(), mask.ambient_dim())?;
    let a = mask.rows(basis.columns());
    if a.ncols() == 0 {
        return Ok((Mat::zeros(a.nrows(), 0), 0));
    }
    let (q, _) = column_space(a.as_ref(), PINV_RTOL)?;
    let r = q.ncols();
    Ok((q, r))
}

/// Residual energy outside an orthonormal `q`; exactly zero when `q` spans
/// the whole observation space.
fn residual_energy(q: MatRef<'_, f64>, x: &[f64]) -> f64 {
    if q.ncols() >= q.nrows() {
        return 0.0;
    }
    let c = crate::linalg::matvec_t(q, x);
    (norm_sq(x) - norm_sq(&c)).max(0.0)
}

fn residual_energies(q: MatRef<'_, f64>, xs: MatRef<'_, f64>) -> Vec<f64> {
    if q.ncols() >= q.nrows() {
        return vec![0.0; xs.ncols()];
    }
    let total = column_norms_sq(xs);
    let proj = projected_energies(q, xs);
    total
        .iter()
        .zip(proj)
        .map(|(t, p)| (t - p).max(0.0))
        .collect()
}

/// Projection detector for sampled data, `‖x − P_ΔΘ x‖²`.
#[derive(Clone, Debug)]
pub struct OverdetDetector {
    q: Matrix,
    rank: usize,
    subspace_dim: usize,
    observed: usize,
}

impl OverdetDetector {
    pub fn new(basis_h0: &SubspaceBasis, mask: &SamplingMask) -> Result<Self> {
        if mask.len() <= basis_h0.rank() {
            return Err(Error::UnderdeterminedRegime {
                observed: mask.len(),
                subspace_dim: basis_h0.rank(),
            });
        }
        let (q, rank) = sampled_range(basis_h0, mask)?;
        Ok(Self {
            q,
            rank,
            subspace_dim: basis_h0.rank(),
            observed: mask.len(),
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rank_deficient(&self) -> bool {
        self.rank < self.subspace_dim
    }

    /// `N_o − rank(Θ U_Δ)`.
    pub fn dof(&self) -> usize {
        self.observed - self.rank
    }

    pub fn energy(&self, x_obs: &[f64]) -> Result<f64> {
        check_len(self.observed, x_obs.len())?;
        Ok(residual_energy(self.q.as_ref(), x_obs))
    }

    pub fn energies(&self, xs: MatRef<'_, f64>) -> Vec<f64> {
        residual_energies(self.q.as_ref(), xs)
    }
}

pub fn missing_overdet_glrt(
    basis_h0: &SubspaceBasis,
    mask: &SamplingMask,
    x_obs: &[f64],
    sigma2: f64,
    gamma: f64,
) -> Result<DetectorReport> {
    check_sigma2(sigma2)?;
    check_len(mask.len(), x_obs.len())?;
    let det = OverdetDetector::new(basis_h0, mask)?;
    let e = det.energy(x_obs)?;
    let t = e / sigma2;
    Ok(DetectorReport {
        statistic: t,
        threshold: gamma,
        decision: decide(t, gamma),
        sigma2,
        dof: det.dof(),
        noncentrality: None,
        regime: Regime::MissingOverdet,
        diagnostics: Diagnostics {
            subspace_dim: basis_h0.rank(),
            observed: Some(mask.len()),
            sampled_rank: Some(det.rank()),
            rank_deficient: det.rank_deficient(),
            residual_h0: Some(e),
            residual_h1: Some(0.0),
            solver: Some("svd-projection".into()),
        },
    })
}

/// Diagonal ridge weights `λⱼ‖Rⱼ s‖²` for the two hypotheses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizerSpec {
    pub lambda0: f64,
    pub lambda1: f64,
    pub r0: Vec<f64>,
    pub r1: Vec<f64>,
}

impl RegularizerSpec {
    /// No penalty on either hypothesis.
    pub fn none(width0: usize, width1: usize) -> Self {
        Self {
            lambda0: 0.0,
            lambda1: 0.0,
            r0: vec![0.0; width0],
            r1: vec![0.0; width1],
        }
    }

    fn validate(&self, width0: usize, width1: usize) -> Result<()> {
        for (name, l) in [("lambda0", self.lambda0), ("lambda1", self.lambda1)] {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidRegularizer(format!("{name} = {l}")));
            }
        }
        for (name, r, w) in [("r0", &self.r0, width0), ("r1", &self.r1, width1)] {
            if r.len() != w {
                return Err(Error::InvalidRegularizer(format!(
                    "{name} has {} entries for a basis of width {w}",
                    r.len()
                )));
            }
            if let Some(v) = r.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidRegularizer(format!("{name} entry {v}")));
            }
        }
        Ok(())
    }

    /// Diagonal of `λⱼ Rⱼᵀ Rⱼ`.
    fn penalty(&self, j: usize) -> Vec<f64> {
        let (l, r) = if j == 0 {
            (self.lambda0, &self.r0)
        } else {
            (self.lambda1, &self.r1)
        };
        r.iter().map(|v| l * v * v).collect()
    }
}

/// Ridge residual operator for one hypothesis.
#[derive(Clone, Debug)]
enum RidgeSolver {
    /// `(I + A W⁻¹ Aᵀ)⁻¹`, stored through its Cholesky factor.
    Dual { llt: faer::linalg::solvers::Llt<f64> },
    /// `(AᵀA + W)⁻¹Aᵀ`, then the residual `x − A s`.
    Primal {
        a: Matrix,
        llt: faer::linalg::solvers::Llt<f64>,
    },
    /// Unpenalised minimum-norm fit: residual outside `span(q)`.
    Projection { q: Matrix },
}

impl RidgeSolver {
    /// `min_norm` permits an unpenalised rank-deficient system to be solved
    /// by pseudoinverse instead of being rejected.
    fn new(a: Matrix, w: &[f64], min_norm: bool) -> Result<Self> {
        let (no, r) = (a.nrows(), a.ncols());
        if min_norm && w.iter().all(|&v| v == 0.0) {
            let (q, _) = column_space(a.as_ref(), PINV_RTOL)?;
            return Ok(RidgeSolver::Projection { q });
        }
        if r == 0 {
            return Ok(RidgeSolver::Primal {
                llt: Mat::<f64>::identity(0, 0)
                    .llt(Side::Lower)
                    .map_err(|e| Error::Numerical(format!("{e:?}")))?,
                a,
            });
        }
        if w.iter().all(|&v| v > 0.0) {
            let scaled = Mat::from_fn(no, r, |i, j| a[(i, j)] / w[j].sqrt());
            let mut k = mul_nt(scaled.as_ref(), scaled.as_ref());
            for i in 0..no {
                k[(i, i)] += 1.0;
            }
            let llt = k
                .llt(Side::Lower)
                .map_err(|e| Error::Numerical(format!("{e:?}")))?;
            return Ok(RidgeSolver::Dual { llt });
        }
        let mut g = mul_tn(a.as_ref(), a.as_ref());
        for j in 0..r {
            g[(j, j)] += w[j];
        }
        let (vals, _) = sym_eigen(g.as_ref())?;
        let rank = numerical_rank(&vals.iter().map(|v| v.max(0.0)).collect::<Vec<_>>(), 1e-12);
        if rank < r {
            return Err(Error::SingularSystem { rank, size: r });
        }
        let llt = g
            .llt(Side::Lower)
            .map_err(|e| Error::Numerical(format!("{e:?}")))?;
        Ok(RidgeSolver::Primal { a, llt })
    }

    fn residuals(&self, xs: MatRef<'_, f64>) -> Matrix {
        match self {
            RidgeSolver::Dual { llt } => llt.solve(xs),
            RidgeSolver::Primal { a, llt } => {
                if a.ncols() == 0 {
                    return xs.to_owned();
                }
                let rhs = mul_tn(a.as_ref(), xs);
                let s = llt.solve(rhs.as_ref());
                xs.to_owned() - mul(a.as_ref(), s.as_ref())
            }
            RidgeSolver::Projection { q } => {
                if q.ncols() >= q.nrows() {
                    return Mat::zeros(xs.nrows(), xs.ncols());
                }
                xs.to_owned() - mul(q.as_ref(), mul_tn(q.as_ref(), xs).as_ref())
            }
        }
    }
}

/// Difference of ridge residual energies between the two hypotheses.
#[derive(Clone, Debug)]
pub struct RidgeDetector {
    solvers: [RidgeSolver; 2],
    observed: usize,
    widths: [usize; 2],
}

impl RidgeDetector {
    pub fn new(
        basis_h0: &SubspaceBasis,
        basis_h1: &SubspaceBasis,
        mask: &SamplingMask,
        reg: &RegularizerSpec,
    ) -> Result<Self> {
        check_len(basis_h0.dim(), mask.ambient_dim())?;
        check_len(basis_h1.dim(), mask.ambient_dim())?;
        reg.validate(basis_h0.rank(), basis_h1.rank())?;
        // The alternative model is fat by construction once entries are
        // missing; its unpenalised fit is the minimum-norm one. The null model
        // must be identifiable or regularised.
        let s0 = RidgeSolver::new(mask.rows(basis_h0.columns()), &reg.penalty(0), false)?;
        let s1 = RidgeSolver::new(mask.rows(basis_h1.columns()), &reg.penalty(1), true)?;
        Ok(Self {
            solvers: [s0, s1],
            observed: mask.len(),
            widths: [basis_h0.rank(), basis_h1.rank()],
        })
    }

    /// Residual energies `(R0, R1)` per column of `xs`.
    pub fn residual_pairs(&self, xs: MatRef<'_, f64>) -> Vec<(f64, f64)> {
        let r0 = column_norms_sq(self.solvers[0].residuals(xs).as_ref());
        let r1 = column_norms_sq(self.solvers[1].residuals(xs).as_ref());
        r0.into_iter().zip(r1).collect()
    }

    /// `R0 − R1` per column; may be negative.
    pub fn energies(&self, xs: MatRef<'_, f64>) -> Vec<f64> {
        self.residual_pairs(xs)
            .into_iter()
            .map(|(a, b)| a - b)
            .collect()
    }

    fn solver_name(&self) -> String {
        let name = |s: &RidgeSolver| match s {
            RidgeSolver::Dual { .. } => "dual",
            RidgeSolver::Primal { .. } => "primal",
            RidgeSolver::Projection { .. } => "pinv",
        };
        format!("ridge-{}/{}", name(&self.solvers[0]), name(&self.solvers[1]))
    }
}

pub fn missing_underdet_glrt(
    basis_h0: &SubspaceBasis,
    basis_h1: &SubspaceBasis,
    mask: &SamplingMask,
    x_obs: &[f64],
    sigma2: f64,
    gamma: f64,
    reg: &RegularizerSpec,
) -> Result<DetectorReport> {
    check_sigma2(sigma2)?;
    check_len(mask.len(), x_obs.len())?;
    let det = RidgeDetector::new(basis_h0, basis_h1, mask, reg)?;
    let xs = MatRef::from_column_major_slice(x_obs, x_obs.len(), 1);
    let (r0, r1) = det.residual_pairs(xs)[0];
    let t = (r0 - r1) / sigma2;
    Ok(DetectorReport {
        statistic: t,
        threshold: gamma,
        decision: decide(t, gamma),
        sigma2,
        dof: det.observed.saturating_sub(det.widths[0]),
        noncentrality: None,
        regime: Regime::MissingUnderdet,
        diagnostics: Diagnostics {
            subspace_dim: basis_h0.rank(),
            observed: Some(mask.len()),
            sampled_rank: None,
            rank_deficient: det.observed <= det.widths[0],
            residual_h0: Some(r0),
            residual_h1: Some(r1),
            solver: Some(det.solver_name()),
        },
    })
}

/// Unregularised two-hypothesis statistic using minimum-norm least squares
/// for both fits. In the underdetermined regime with a full-row-rank
/// sampled basis it is identically zero.
#[derive(Clone, Debug)]
pub struct MinNormDetector {
    q: [Matrix; 2],
    ranks: [usize; 2],
    observed: usize,
}

impl MinNormDetector {
    pub fn new(basis_h0: &SubspaceBasis, basis_h1: &SubspaceBasis, mask: &SamplingMask) -> Result<Self> {
        let (q0, r0) = sampled_range(basis_h0, mask)?;
        let (q1, r1) = sampled_range(basis_h1, mask)?;
        Ok(Self {
            q: [q0, q1],
            ranks: [r0, r1],
            observed: mask.len(),
        })
    }

    pub fn ranks(&self) -> [usize; 2] {
        self.ranks
    }

    pub fn energies(&self, xs: MatRef<'_, f64>) -> Vec<f64> {
        let a = residual_energies(self.q[0].as_ref(), xs);
        let b = residual_energies(self.q[1].as_ref(), xs);
        a.into_iter().zip(b).map(|(a, b)| a - b).collect()
    }
}

pub fn missing_minnorm_glrt(
    basis_h0: &SubspaceBasis,
    basis_h1: &SubspaceBasis,
    mask: &SamplingMask,
    x_obs: &[f64],
    sigma2: f64,
    gamma: f64,
) -> Result<DetectorReport> {
    check_sigma2(sigma2)?;
    check_len(mask.len(), x_obs.len())?;
    let det = MinNormDetector::new(basis_h0, basis_h1, mask)?;
    let r0 = residual_energy(det.q[0].as_ref(), x_obs);
    let r1 = residual_energy(det.q[1].as_ref(), x_obs);
    let t = (r0 - r1) / sigma2;
    Ok(DetectorReport {
        statistic: t,
        threshold: gamma,
        decision: decide(t, gamma),
        sigma2,
        dof: det.observed - det.ranks[0],
        noncentrality: None,
        regime: Regime::MissingUnderdet,
        diagnostics: Diagnostics {
            subspace_dim: basis_h0.rank(),
            observed: Some(det.observed),
            sampled_rank: Some(det.ranks[0]),
            rank_deficient: det.ranks[0] < basis_h0.rank(),
            residual_h0: Some(r0),
            residual_h1: Some(r1),
            solver: Some("min-norm".into()),
        },
    })
}

/// Interpolate the missing entries by minimising the complement energy,
/// then apply the complete-data detector.
///
/// With `C` the complement basis split into observed rows `C_o` and missing
/// rows `C_m`, the minimiser is `x_m = −(C_m C_mᵀ)† C_m C_oᵀ x_o` and the
/// complement coefficients of the completed signal are `F x_o`.
#[derive(Clone, Debug)]
pub struct InterpolationDetector {
    /// `x_m = fill · x_o`.
    fill: Matrix,
    /// Complement coefficients of the completed signal.
    coef: Matrix,
    observed: usize,
    dof: usize,
    missing: Vec<usize>,
    selected: Vec<usize>,
}

impl InterpolationDetector {
    pub fn new(complement: &SubspaceBasis, mask: &SamplingMask) -> Result<Self> {
        if complement.rank() == 0 {
            return Err(Error::EmptyComplement);
        }
        check_len(complement.dim(), mask.ambient_dim())?;
        let missing = mask.missing();
        let co = mask.rows(complement.columns());
        let cm = select_rows(complement.columns(), &missing);
        let (fill, coef) = if missing.is_empty() {
            (Mat::zeros(0, mask.len()), co.transpose().to_owned())
        } else {
            let g = mul_nt(cm.as_ref(), cm.as_ref());
            let (vals, vecs) = sym_eigen(g.as_ref())?;
            let vmax = vals.iter().copied().fold(0.0_f64, f64::max);
            let keep: Vec<usize> = (0..vals.len())
                .filter(|&i| vals[i] > PINV_RTOL * vmax)
                .collect();
            // G† = V diag(1/λ) Vᵀ over the retained eigenpairs.
            let v = crate::linalg::select_columns(vecs.as_ref(), &keep);
            let cross = mul_nt(cm.as_ref(), co.as_ref());
            let vt_cross = mul_tn(v.as_ref(), cross.as_ref());
            let scaled = Mat::from_fn(keep.len(), mask.len(), |i, j| vt_cross[(i, j)] / vals[keep[i]]);
            let fill = mul(v.as_ref(), scaled.as_ref()) * faer::Scale(-1.0);
            let coef = co.transpose().to_owned() + mul_tn(cm.as_ref(), fill.as_ref());
            (fill, coef)
        };
        Ok(Self {
            fill,
            coef,
            observed: mask.len(),
            dof: complement.rank(),
            missing,
            selected: mask.selected().to_vec(),
        })
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    /// Completed ambient signal.
    pub fn interpolate(&self, x_obs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.observed, x_obs.len())?;
        let n = self.observed + self.missing.len();
        let mut out = vec![0.0; n];
        for (&i, &v) in self.selected.iter().zip(x_obs) {
            out[i] = v;
        }
        let xm = crate::linalg::matvec(self.fill.as_ref(), x_obs);
        for (&i, v) in self.missing.iter().zip(xm) {
            out[i] = v;
        }
        Ok(out)
    }

    pub fn energy(&self, x_obs: &[f64]) -> Result<f64> {
        check_len(self.observed, x_obs.len())?;
        Ok(norm_sq(&crate::linalg::matvec(self.coef.as_ref(), x_obs)))
    }

    pub fn energies(&self, xs: MatRef<'_, f64>) -> Vec<f64> {
        let p = mul(self.coef.as_ref(), xs);
        column_norms_sq(p.as_ref())
    }
}

pub fn interpolation_detector(
    complement: &SubspaceBasis,
    mask: &SamplingMask,
    x_obs: &[f64],
    sigma2: f64,
    gamma: f64,
) -> Result<DetectorReport> {
    check_sigma2(sigma2)?;
    check_len(mask.len(), x_obs.len())?;
    let det = InterpolationDetector::new(complement, mask)?;
    let e = det.energy(x_obs)?;
    let t = e / sigma2;
    Ok(DetectorReport {
        statistic: t,
        threshold: gamma,
        decision: decide(t, gamma),
        sigma2,
        dof: det.dof(),
        noncentrality: None,
        regime: Regime::InterpolationBaseline,
        diagnostics: Diagnostics {
            subspace_dim: complement.dim() - complement.rank(),
            observed: Some(mask.len()),
            sampled_rank: None,
            rank_deficient: false,
            residual_h0: None,
            residual_h1: None,
            solver: Some("gram-pseudoinverse".into()),
        },
    })
}
