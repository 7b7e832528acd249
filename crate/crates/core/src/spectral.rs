//! Hodge and Dirac subspaces.
//!
//! A [`HodgeDecomposition`] splits the signals of one order into gradient,
//! curl and harmonic parts from eigenvectors of the lower, upper and full
//! Laplacians. A [`DiracDecomposition`] does the same for the stacked signal
//! using singular vectors of `B1` and `B2`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::linalg::{
    four_subspaces, hcat, matvec, matvec_t, mul, mul_tn, select_columns, sym_eigen, Matrix,
};

/// Default relative threshold below which an eigenvalue counts as zero.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Gradient,
    Curl,
    Harmonic,
}

impl Part {
    pub const ALL: [Part; 3] = [Part::Gradient, Part::Curl, Part::Harmonic];

    fn bit(self) -> u8 {
        match self {
            Part::Gradient => 1,
            Part::Curl => 2,
            Part::Harmonic => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Part::Gradient => "gradient",
            Part::Curl => "curl",
            Part::Harmonic => "harmonic",
        }
    }
}

impl FromStr for Part {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "g" | "gradient" => Ok(Part::Gradient),
            "c" | "curl" => Ok(Part::Curl),
            "h" | "harmonic" => Ok(Part::Harmonic),
            other => Err(Error::Config(format!("unknown subspace part `{other}`"))),
        }
    }
}

/// A subset of `{gradient, curl, harmonic}`. May be empty only as the
/// complement of the full set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Part>", into = "Vec<Part>")]
pub struct Parts(u8);

impl Parts {
    pub const ALL: Parts = Parts(7);
    pub const NONE: Parts = Parts(0);

    pub fn new(parts: &[Part]) -> Self {
        Parts(parts.iter().fold(0, |acc, p| acc | p.bit()))
    }

    pub fn contains(self, p: Part) -> bool {
        self.0 & p.bit() != 0
    }

    pub fn complement(self) -> Self {
        Parts(!self.0 & 7)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Part> {
        Part::ALL.into_iter().filter(move |p| self.contains(*p))
    }
}

impl TryFrom<Vec<Part>> for Parts {
    type Error = Error;

    fn try_from(v: Vec<Part>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::EmptySelection);
        }
        Ok(Parts::new(&v))
    }
}

impl From<Parts> for Vec<Part> {
    fn from(p: Parts) -> Self {
        p.iter().collect()
    }
}

impl FromStr for Parts {
    type Err = Error;

    /// Comma separated, e.g. `g,h` or `gradient,harmonic`.
    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(Part::from_str)
            .collect::<Result<Vec<_>>>()?;
        Parts::try_from(parts)
    }
}

impl fmt::Display for Parts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(Part::name).collect();
        write!(f, "{}", names.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Hodge(usize),
    Dirac,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceLabel {
    pub flavor: Flavor,
    pub parts: Parts,
}

impl SubspaceLabel {
    pub fn complement(self) -> Self {
        Self {
            flavor: self.flavor,
            parts: self.parts.complement(),
        }
    }
}

/// Orthonormal columns spanning a labelled subspace.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    pub label: SubspaceLabel,
    columns: Matrix,
}

impl SubspaceBasis {
    pub fn new(label: SubspaceLabel, columns: Matrix) -> Self {
        Self { label, columns }
    }

    pub fn columns(&self) -> MatRef<'_, f64> {
        self.columns.as_ref()
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    /// Subspace dimension.
    pub fn rank(&self) -> usize {
        self.columns.ncols()
    }

    /// Embedding `Uᵀ x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        Ok(matvec_t(self.columns(), x))
    }

    /// `U c`.
    pub fn synthesize(&self, c: &[f64]) -> Result<Vec<f64>> {
        if c.len() != self.rank() {
            return Err(Error::DimensionMismatch {
                expected: self.rank(),
                got: c.len(),
            });
        }
        Ok(matvec(self.columns(), c))
    }

    /// Orthogonal projection `U Uᵀ x` in ambient coordinates.
    pub fn component(&self, x: &[f64]) -> Result<Vec<f64>> {
        let c = self.project(x)?;
        self.synthesize(&c)
    }

    /// `‖Uᵀ x‖²`.
    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        Ok(self.project(x)?.iter().map(|v| v * v).sum())
    }

    /// Energy of `x` outside the span, `‖x − U Uᵀ x‖²`.
    pub fn residual(&self, x: &[f64]) -> Result<f64> {
        let c = self.component(x)?;
        Ok(x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    /// Right-multiplies the columns by `r`; useful for invariance checks.
    pub fn rotated(&self, r: MatRef<'_, f64>) -> Self {
        Self::new(self.label, mul(self.columns(), r))
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// Common behaviour of Hodge and Dirac decompositions.
pub trait Decomposition {
    fn part(&self, p: Part) -> &SubspaceBasis;
    /// Eigenvalues (Hodge) or singular values (Dirac) attached to the columns
    /// of a part, ascending.
    fn values(&self, p: Part) -> &[f64];
    fn flavor(&self) -> Flavor;
    fn ambient_dim(&self) -> usize;

    fn dims(&self) -> [usize; 3] {
        Part::ALL.map(|p| self.part(p).rank())
    }

    /// Concatenated basis of the chosen parts.
    fn select(&self, parts: Parts) -> Result<SubspaceBasis> {
        if parts.is_empty() {
            return Err(Error::EmptySelection);
        }
        Ok(self.concat(parts))
    }

    /// Basis of the parts not chosen; may have zero columns.
    fn complement(&self, parts: Parts) -> Result<SubspaceBasis> {
        if parts.is_empty() {
            return Err(Error::EmptySelection);
        }
        Ok(self.concat(parts.complement()))
    }

    fn concat(&self, parts: Parts) -> SubspaceBasis {
        let blocks: Vec<_> = parts.iter().map(|p| self.part(p).columns()).collect();
        let label = SubspaceLabel {
            flavor: self.flavor(),
            parts,
        };
        SubspaceBasis::new(label, hcat(self.ambient_dim(), &blocks))
    }

    /// Gradient, curl and harmonic components of `x` in ambient coordinates.
    fn decompose(&self, x: &[f64]) -> Result<[Vec<f64>; 3]> {
        Ok([
            self.part(Part::Gradient).component(x)?,
            self.part(Part::Curl).component(x)?,
            self.part(Part::Harmonic).component(x)?,
        ])
    }

    /// Fractions of `‖x‖²` in each part.
    fn energy_fractions(&self, x: &[f64]) -> Result<[f64; 3]> {
        let total: f64 = x.iter().map(|v| v * v).sum();
        let mut out = [0.0; 3];
        for (o, p) in out.iter_mut().zip(Part::ALL) {
            let e = self.part(p).energy(x)?;
            *o = if total > 0.0 { e / total } else { 0.0 };
        }
        Ok(out)
    }

    /// Writes `part,column,row,value`.
    fn write_bases_csv<W: Write>(&self, w: W) -> Result<()>
    where
        Self: Sized,
    {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["part", "column", "row", "value"])?;
        for p in Part::ALL {
            let u = self.part(p).columns();
            for j in 0..u.ncols() {
                for i in 0..u.nrows() {
                    wtr.serialize((p.name(), j, i, u[(i, j)]))?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Writes `part,index,eigenvalue`.
    fn write_values_csv<W: Write>(&self, w: W) -> Result<()>
    where
        Self: Sized,
    {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["part", "index", "eigenvalue"])?;
        for p in Part::ALL {
            for (i, v) in self.values(p).iter().enumerate() {
                wtr.serialize((p.name(), i, v))?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct HodgeDecomposition {
    pub order: usize,
    bases: [SubspaceBasis; 3],
    values: [Vec<f64>; 3],
}

impl HodgeDecomposition {
    pub fn compute(cx: &SimplicialComplex, k: usize, tol: f64) -> Result<Self> {
        let lap = cx.hodge_laplacian(k)?;
        let n = cx.count(k);
        let (full_vals, full_vecs) = sym_eigen(lap.full.as_ref())?;
        let lmax = full_vals.iter().copied().fold(0.0_f64, f64::max);
        let cut = tol * lmax;

        let nonzero = |m: &Matrix| -> Result<(Vec<f64>, Matrix)> {
            let (vals, vecs) = sym_eigen(m.as_ref())?;
            let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > cut).collect();
            Ok((
                keep.iter().map(|&i| vals[i]).collect(),
                select_columns(vecs.as_ref(), &keep),
            ))
        };
        let (gv, gu) = if k == 0 { (Vec::new(), Mat::zeros(n, 0)) } else { nonzero(&lap.lower)? };
        let (cv, cu) = if k == 2 { (Vec::new(), Mat::zeros(n, 0)) } else { nonzero(&lap.upper)? };
        let hk: Vec<usize> = (0..full_vals.len()).filter(|&i| full_vals[i] <= cut).collect();
        let hv = hk.iter().map(|&i| full_vals[i]).collect();
        let hu = select_columns(full_vecs.as_ref(), &hk);

        let label = |p: Part| SubspaceLabel {
            flavor: Flavor::Hodge(k),
            parts: Parts::new(&[p]),
        };
        Ok(Self {
            order: k,
            bases: [
                SubspaceBasis::new(label(Part::Gradient), gu),
                SubspaceBasis::new(label(Part::Curl), cu),
                SubspaceBasis::new(label(Part::Harmonic), hu),
            ],
            values: [gv, cv, hv],
        })
    }
}

fn index(p: Part) -> usize {
    match p {
        Part::Gradient => 0,
        Part::Curl => 1,
        Part::Harmonic => 2,
    }
}

impl Decomposition for HodgeDecomposition {
    fn part(&self, p: Part) -> &SubspaceBasis {
        &self.bases[index(p)]
    }

    fn values(&self, p: Part) -> &[f64] {
        &self.values[index(p)]
    }

    fn flavor(&self) -> Flavor {
        Flavor::Hodge(self.order)
    }

    fn ambient_dim(&self) -> usize {
        self.bases[0].dim()
    }
}

#[derive(Clone, Debug)]
pub struct DiracDecomposition {
    bases: [SubspaceBasis; 3],
    values: [Vec<f64>; 3],
}

impl DiracDecomposition {
    /// Joint gradient spans `D_l`, joint curl spans `D_u`, joint harmonic is
    /// the kernel of `D`.
    pub fn compute(cx: &SimplicialComplex, tol: f64) -> Result<Self> {
        if cx.order() != 2 {
            return Err(Error::UnsupportedOrder(cx.order()));
        }
        let [n0, n1, n2] = cx.counts();
        let n = n0 + n1 + n2;
        let (o1, o2) = (n0, n0 + n1);

        let scale = largest_singular_value(cx.b1())?.max(largest_singular_value(cx.b2())?);
        let cut = tol * scale;
        let f1 = four_subspaces(cx.b1(), cut)?;
        let f2 = four_subspaces(cx.b2(), cut)?;

        let r1 = f1.singular_values.len();
        let mut grad = Mat::zeros(n, 2 * r1);
        let mut gv = Vec::with_capacity(2 * r1);
        for i in 0..r1 {
            for v in 0..n0 {
                grad[(v, 2 * i)] = f1.range[(v, i)];
            }
            for e in 0..n1 {
                grad[(o1 + e, 2 * i + 1)] = f1.coimage[(e, i)];
            }
            gv.extend([f1.singular_values[i]; 2]);
        }

        let r2 = f2.singular_values.len();
        let mut curl = Mat::zeros(n, 2 * r2);
        let mut cv = Vec::with_capacity(2 * r2);
        for i in 0..r2 {
            for e in 0..n1 {
                curl[(o1 + e, 2 * i)] = f2.range[(e, i)];
            }
            for t in 0..n2 {
                curl[(o2 + t, 2 * i + 1)] = f2.coimage[(t, i)];
            }
            cv.extend([f2.singular_values[i]; 2]);
        }

        let l1 = HodgeDecomposition::compute(cx, 1, tol)?;
        let h1 = l1.part(Part::Harmonic).columns();
        let (k0, k2) = (f1.cokernel.ncols(), f2.kernel.ncols());
        let mut harm = Mat::zeros(n, k0 + h1.ncols() + k2);
        for j in 0..k0 {
            for v in 0..n0 {
                harm[(v, j)] = f1.cokernel[(v, j)];
            }
        }
        for j in 0..h1.ncols() {
            for e in 0..n1 {
                harm[(o1 + e, k0 + j)] = h1[(e, j)];
            }
        }
        for j in 0..k2 {
            for t in 0..n2 {
                harm[(o2 + t, k0 + h1.ncols() + j)] = f2.kernel[(t, j)];
            }
        }
        let hv = vec![0.0; harm.ncols()];

        let label = |p: Part| SubspaceLabel {
            flavor: Flavor::Dirac,
            parts: Parts::new(&[p]),
        };
        Ok(Self {
            bases: [
                SubspaceBasis::new(label(Part::Gradient), grad),
                SubspaceBasis::new(label(Part::Curl), curl),
                SubspaceBasis::new(label(Part::Harmonic), harm),
            ],
            values: [gv, cv, hv],
        })
    }
}

fn largest_singular_value(a: MatRef<'_, f64>) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    // Largest eigenvalue of the smaller Gram matrix.
    let g = if a.nrows() <= a.ncols() {
        mul(a, a.transpose())
    } else {
        mul_tn(a, a)
    };
    let (vals, _) = sym_eigen(g.as_ref())?;
    Ok(vals.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

impl Decomposition for DiracDecomposition {
    fn part(&self, p: Part) -> &SubspaceBasis {
        &self.bases[index(p)]
    }

    fn values(&self, p: Part) -> &[f64] {
        &self.values[index(p)]
    }

    fn flavor(&self) -> Flavor {
        Flavor::Dirac
    }

    fn ambient_dim(&self) -> usize {
        self.bases[0].dim()
    }
}

/// Zero-pads an order-`k` signal into the stacked layout.
pub fn embed_order(cx: &SimplicialComplex, k: usize, s: &[f64]) -> Result<Vec<f64>> {
    if k > 2 {
        return Err(Error::UnsupportedOrder(k));
    }
    if s.len() != cx.count(k) {
        return Err(Error::DimensionMismatch {
            expected: cx.count(k),
            got: s.len(),
        });
    }
    let mut out = vec![0.0; cx.total_dim()];
    let o = cx.offset(k);
    out[o..o + s.len()].copy_from_slice(s);
    Ok(out)
}
