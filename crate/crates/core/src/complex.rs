//! Simplicial complexes of order at most two.
//!
//! Simplices are stored in their lexicographic reference orientation and in
//! the order they were supplied. Incidence matrices are dense.

use std::collections::{HashMap, HashSet};

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{matvec, mul, mul_nt, mul_tn, Matrix};

#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    node_count: usize,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
    edge_lookup: HashMap<[usize; 2], usize>,
    b1: Matrix,
    b2: Matrix,
}

/// Lower, upper and full Hodge Laplacians of one order.
#[derive(Clone, Debug)]
pub struct HodgeLaplacian {
    pub lower: Matrix,
    pub upper: Matrix,
    pub full: Matrix,
}

/// The Dirac operator `D = D_l + D_u`.
#[derive(Clone, Debug)]
pub struct DiracOperator {
    pub d: Matrix,
    pub lower: Matrix,
    pub upper: Matrix,
}

impl SimplicialComplex {
    /// Builds a complex from vertex pairs and triples. Each simplex is sorted
    /// into reference orientation; the list order is kept.
    pub fn build(
        node_count: usize,
        edges: &[(usize, usize)],
        triangles: &[(usize, usize, usize)],
    ) -> Result<Self> {
        let check = |v: usize| {
            if v >= node_count {
                Err(Error::IndexOutOfRange { index: v, node_count })
            } else {
                Ok(())
            }
        };

        let mut canon_edges = Vec::with_capacity(edges.len());
        let mut edge_lookup = HashMap::with_capacity(edges.len());
        for &(a, b) in edges {
            check(a)?;
            check(b)?;
            if a == b {
                return Err(Error::DegenerateSimplex(vec![a, b]));
            }
            let e = [a.min(b), a.max(b)];
            if edge_lookup.insert(e, canon_edges.len()).is_some() {
                return Err(Error::DuplicateSimplex(e.to_vec()));
            }
            canon_edges.push(e);
        }

        let mut canon_tris = Vec::with_capacity(triangles.len());
        let mut seen = HashSet::with_capacity(triangles.len());
        for &(a, b, c) in triangles {
            check(a)?;
            check(b)?;
            check(c)?;
            let mut t = [a, b, c];
            t.sort_unstable();
            if t[0] == t[1] || t[1] == t[2] {
                return Err(Error::DegenerateSimplex(vec![a, b, c]));
            }
            if !seen.insert(t) {
                return Err(Error::DuplicateSimplex(t.to_vec()));
            }
            for face in [[t[0], t[1]], [t[1], t[2]], [t[0], t[2]]] {
                if !edge_lookup.contains_key(&face) {
                    return Err(Error::MissingFace { triangle: t, face });
                }
            }
            canon_tris.push(t);
        }

        let n1 = canon_edges.len();
        let n2 = canon_tris.len();
        let mut b1 = Mat::zeros(node_count, n1);
        for (e, &[i, j]) in canon_edges.iter().enumerate() {
            b1[(i, e)] = -1.0;
            b1[(j, e)] = 1.0;
        }
        let mut b2 = Mat::zeros(n1, n2);
        for (t, &[i, j, k]) in canon_tris.iter().enumerate() {
            b2[(edge_lookup[&[i, j]], t)] = 1.0;
            b2[(edge_lookup[&[j, k]], t)] = 1.0;
            b2[(edge_lookup[&[i, k]], t)] = -1.0;
        }

        Ok(Self {
            node_count,
            edges: canon_edges,
            triangles: canon_tris,
            edge_lookup,
            b1,
            b2,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Index of the edge `{i, j}` if present.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edge_lookup.get(&[i.min(j), i.max(j)]).copied()
    }

    /// Highest order with at least one simplex.
    pub fn order(&self) -> usize {
        if !self.triangles.is_empty() {
            2
        } else if !self.edges.is_empty() {
            1
        } else {
            0
        }
    }

    /// Number of `k`-simplices; zero above order two.
    pub fn count(&self, k: usize) -> usize {
        match k {
            0 => self.node_count,
            1 => self.edges.len(),
            2 => self.triangles.len(),
            _ => 0,
        }
    }

    pub fn counts(&self) -> [usize; 3] {
        [self.count(0), self.count(1), self.count(2)]
    }

    /// `N = N0 + N1 + N2`.
    pub fn total_dim(&self) -> usize {
        self.counts().iter().sum()
    }

    /// Start of the order-`k` block in the stacked signal.
    pub fn offset(&self, k: usize) -> usize {
        (0..k.min(3)).map(|j| self.count(j)).sum()
    }

    pub fn b1(&self) -> MatRef<'_, f64> {
        self.b1.as_ref()
    }

    pub fn b2(&self) -> MatRef<'_, f64> {
        self.b2.as_ref()
    }

    /// `B1` (`N0 × N1`) or `B2` (`N1 × N2`).
    pub fn incidence(&self, k: usize) -> Result<MatRef<'_, f64>> {
        match k {
            1 => Ok(self.b1.as_ref()),
            2 => Ok(self.b2.as_ref()),
            _ => Err(Error::UnsupportedOrder(k)),
        }
    }

    pub fn hodge_laplacian(&self, k: usize) -> Result<HodgeLaplacian> {
        let nk = self.count(k);
        let (lower, upper) = match k {
            0 => (Mat::zeros(nk, nk), mul_nt(self.b1(), self.b1())),
            1 => (
                mul_tn(self.b1(), self.b1()),
                mul_nt(self.b2(), self.b2()),
            ),
            2 => (mul_tn(self.b2(), self.b2()), Mat::zeros(nk, nk)),
            _ => return Err(Error::UnsupportedOrder(k)),
        };
        let full = &lower + &upper;
        Ok(HodgeLaplacian { lower, upper, full })
    }

    /// Block tridiagonal Dirac operator over the stacked `[s0 | s1 | s2]`.
    pub fn dirac_operator(&self) -> Result<DiracOperator> {
        if self.order() != 2 {
            return Err(Error::UnsupportedOrder(self.order()));
        }
        let n = self.total_dim();
        let (o1, o2) = (self.offset(1), self.offset(2));
        let mut lower = Mat::zeros(n, n);
        let mut upper = Mat::zeros(n, n);
        for e in 0..self.count(1) {
            for v in 0..self.node_count {
                let b = self.b1[(v, e)];
                lower[(v, o1 + e)] = b;
                lower[(o1 + e, v)] = b;
            }
            for t in 0..self.count(2) {
                let b = self.b2[(e, t)];
                upper[(o1 + e, o2 + t)] = b;
                upper[(o2 + t, o1 + e)] = b;
            }
        }
        let d = &lower + &upper;
        Ok(DiracOperator { d, lower, upper })
    }

    /// `blockdiag(L0, L1, L2)`, the square of the Dirac operator.
    pub fn laplacian_blockdiag(&self) -> Result<Matrix> {
        let n = self.total_dim();
        let mut out = Mat::zeros(n, n);
        for k in 0..3 {
            let l = self.hodge_laplacian(k)?.full;
            let o = self.offset(k);
            for j in 0..l.ncols() {
                for i in 0..l.nrows() {
                    out[(o + i, o + j)] = l[(i, j)];
                }
            }
        }
        Ok(out)
    }

    /// `B2ᵀ s1`.
    pub fn curl(&self, s1: &[f64]) -> Result<Vec<f64>> {
        self.expect_len(1, s1.len())?;
        Ok(matvec(self.b2.transpose(), s1))
    }

    /// `B1 s1`.
    pub fn divergence(&self, s1: &[f64]) -> Result<Vec<f64>> {
        self.expect_len(1, s1.len())?;
        Ok(matvec(self.b1(), s1))
    }

    /// `B1ᵀ s0`, the edge flow induced by node potentials.
    pub fn gradient(&self, s0: &[f64]) -> Result<Vec<f64>> {
        self.expect_len(0, s0.len())?;
        Ok(matvec(self.b1.transpose(), s0))
    }

    /// `B2 s2`, the edge flow induced by triangle circulations.
    pub fn circulation(&self, s2: &[f64]) -> Result<Vec<f64>> {
        self.expect_len(2, s2.len())?;
        Ok(matvec(self.b2(), s2))
    }

    fn expect_len(&self, k: usize, got: usize) -> Result<()> {
        let expected = self.count(k);
        if got != expected {
            return Err(Error::DimensionMismatch { expected, got });
        }
        Ok(())
    }

    /// `B1 · B2`, which is identically zero for a valid complex.
    pub fn boundary_of_boundary(&self) -> Matrix {
        mul(self.b1(), self.b2())
    }
}

/// A signal on every order of a complex, `s = [s0 | s1 | s2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CochainStack {
    per_order: [Vec<f64>; 3],
}

impl CochainStack {
    pub fn zeros(cx: &SimplicialComplex) -> Self {
        let [n0, n1, n2] = cx.counts();
        Self {
            per_order: [vec![0.0; n0], vec![0.0; n1], vec![0.0; n2]],
        }
    }

    pub fn from_slices(
        cx: &SimplicialComplex,
        s0: Vec<f64>,
        s1: Vec<f64>,
        s2: Vec<f64>,
    ) -> Result<Self> {
        for (k, s) in [&s0, &s1, &s2].into_iter().enumerate() {
            cx.expect_len(k, s.len())?;
        }
        Ok(Self {
            per_order: [s0, s1, s2],
        })
    }

    pub fn from_flat(cx: &SimplicialComplex, flat: &[f64]) -> Result<Self> {
        let n = cx.total_dim();
        if flat.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: flat.len(),
            });
        }
        let (o1, o2) = (cx.offset(1), cx.offset(2));
        Ok(Self {
            per_order: [
                flat[..o1].to_vec(),
                flat[o1..o2].to_vec(),
                flat[o2..].to_vec(),
            ],
        })
    }

    /// A stack with only the order-`k` slice populated.
    pub fn single(cx: &SimplicialComplex, k: usize, s: Vec<f64>) -> Result<Self> {
        if k > 2 {
            return Err(Error::UnsupportedOrder(k));
        }
        let mut out = Self::zeros(cx);
        cx.expect_len(k, s.len())?;
        out.per_order[k] = s;
        Ok(out)
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        &self.per_order[k]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.per_order[k]
    }

    pub fn len(&self) -> usize {
        self.per_order.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.per_order.concat()
    }

    pub fn energy(&self) -> f64 {
        self.per_order.iter().flatten().map(|v| v * v).sum()
    }

    pub fn scale(&mut self, c: f64) {
        for v in self.per_order.iter_mut().flatten() {
            *v *= c;
        }
    }
}
