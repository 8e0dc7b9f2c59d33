//! Structured decision variables and affine matrix expressions in them.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lft::structure::{BasisEntries, UncertaintyStructure};
use crate::linalg::{zeros, Mat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub enum VarKind {
    Symmetric(usize),
    Rectangular(usize, usize),
    /// Element of the scaling commutant of a structure.
    Scaling(UncertaintyStructure),
}

impl VarKind {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            VarKind::Symmetric(n) => (*n, *n),
            VarKind::Rectangular(m, n) => (*m, *n),
            VarKind::Scaling(s) => (s.dim(), s.dim()),
        }
    }

    /// Number of free scalar coordinates.
    pub fn coords(&self) -> usize {
        match self {
            VarKind::Symmetric(n) => n * (n + 1) / 2,
            VarKind::Rectangular(m, n) => m * n,
            VarKind::Scaling(s) => s.scaling_coords(),
        }
    }

    /// Sparse basis matrix of every coordinate, in coordinate order:
    /// upper triangle row by row for symmetric variables, row-major for
    /// rectangular ones.
    pub fn basis(&self) -> Vec<BasisEntries> {
        match self {
            VarKind::Symmetric(n) => {
                let mut out = Vec::with_capacity(self.coords());
                for i in 0..*n {
                    for j in i..*n {
                        out.push(if i == j { vec![(i, i, 1.0)] } else { vec![(i, j, 1.0), (j, i, 1.0)] });
                    }
                }
                out
            }
            VarKind::Rectangular(m, n) => {
                (0..m * n).map(|k| vec![(k / n, k % n, 1.0)]).collect()
            }
            VarKind::Scaling(s) => s.scaling_basis(),
        }
    }

    /// Coordinates of a matrix of this kind (off-structure entries ignored).
    pub fn coordinates_of(&self, m: &Mat) -> Vec<f64> {
        self.basis().iter().map(|e| m[(e[0].0, e[0].1)]).collect()
    }

    pub fn from_coordinates(&self, x: &[f64]) -> Mat {
        let (r, c) = self.shape();
        let mut m = zeros(r, c);
        for (e, v) in self.basis().iter().zip(x) {
            for &(i, j, w) in e {
                m[(i, j)] += w * v;
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionVar {
    pub id: VarId,
    pub name: String,
    pub kind: VarKind,
    /// Index of the first scalar coordinate in the program.
    pub offset: usize,
}

/// Values of (some of) the variables of a program.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignment(pub BTreeMap<VarId, Mat>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn set(&mut self, id: VarId, value: Mat) {
        self.0.insert(id, value);
    }
    pub fn get(&self, id: VarId) -> Option<&Mat> {
        self.0.get(&id)
    }
}

/// `left * op(V) * right` placed at `(row, col)`; `None` coefficients are
/// identities.
#[derive(Clone, Debug)]
pub struct Term {
    pub row: usize,
    pub col: usize,
    pub left: Option<Mat>,
    pub var: VarId,
    pub transpose: bool,
    pub right: Option<Mat>,
    /// Shape of `op(V)`.
    pub vshape: (usize, usize),
}

impl Term {
    fn height(&self) -> usize {
        self.left.as_ref().map_or(self.vshape.0, |l| l.nrows())
    }
    fn width(&self) -> usize {
        self.right.as_ref().map_or(self.vshape.1, |r| r.ncols())
    }

    fn value(&self, v: &Mat) -> Mat {
        let mut m = if self.transpose { v.transpose() } else { v.clone() };
        if let Some(l) = &self.left {
            m = l * m;
        }
        if let Some(r) = &self.right {
            m *= r;
        }
        m
    }

    /// Add `scale * left * op(E) * right` for a sparse basis matrix `E`.
    pub(crate) fn add_basis(&self, e: &BasisEntries, scale: f64, out: &mut Mat) {
        for &(i0, j0, w) in e {
            let (i, j) = if self.transpose { (j0, i0) } else { (i0, j0) };
            let w = w * scale;
            match (&self.left, &self.right) {
                (None, None) => out[(self.row + i, self.col + j)] += w,
                (Some(l), None) => {
                    for a in 0..l.nrows() {
                        out[(self.row + a, self.col + j)] += w * l[(a, i)];
                    }
                }
                (None, Some(r)) => {
                    for b in 0..r.ncols() {
                        out[(self.row + i, self.col + b)] += w * r[(j, b)];
                    }
                }
                (Some(l), Some(r)) => {
                    for a in 0..l.nrows() {
                        let la = w * l[(a, i)];
                        if la == 0.0 {
                            continue;
                        }
                        for b in 0..r.ncols() {
                            out[(self.row + a, self.col + b)] += la * r[(j, b)];
                        }
                    }
                }
            }
        }
    }
}

fn is_zero(m: &Mat) -> bool {
    m.iter().all(|v| *v == 0.0)
}

/// Affine matrix expression `constant + sum of terms`.
#[derive(Clone, Debug)]
pub struct MatExpr {
    pub constant: Mat,
    pub terms: Vec<Term>,
}

impl MatExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { constant: zeros(rows, cols), terms: Vec::new() }
    }

    pub fn constant(m: Mat) -> Self {
        Self { constant: m, terms: Vec::new() }
    }

    pub fn var(v: &DecisionVar) -> Self {
        let (r, c) = v.kind.shape();
        Self {
            constant: zeros(r, c),
            terms: vec![Term { row: 0, col: 0, left: None, var: v.id, transpose: false, right: None, vshape: (r, c) }],
        }
    }

    pub fn rows(&self) -> usize {
        self.constant.nrows()
    }
    pub fn cols(&self) -> usize {
        self.constant.ncols()
    }
    pub fn shape(&self) -> (usize, usize) {
        self.constant.shape()
    }

    /// `m * self`.
    pub fn lmul(&self, m: &Mat) -> Self {
        assert_eq!(m.ncols(), self.rows(), "lmul shape");
        let terms = self
            .terms
            .iter()
            .filter_map(|t| {
                let slice = m.columns(t.row, t.height());
                let left = match &t.left {
                    Some(l) => slice * l,
                    None => slice.into_owned(),
                };
                (!is_zero(&left)).then(|| Term { row: 0, left: Some(left), ..t.clone() })
            })
            .collect();
        Self { constant: m * &self.constant, terms }
    }

    /// `self * m`.
    pub fn rmul(&self, m: &Mat) -> Self {
        assert_eq!(m.nrows(), self.cols(), "rmul shape");
        let terms = self
            .terms
            .iter()
            .filter_map(|t| {
                let slice = m.rows(t.col, t.width());
                let right = match &t.right {
                    Some(r) => r * slice,
                    None => slice.into_owned(),
                };
                (!is_zero(&right)).then(|| Term { col: 0, right: Some(right), ..t.clone() })
            })
            .collect();
        Self { constant: &self.constant * m, terms }
    }

    pub fn t(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                row: t.col,
                col: t.row,
                left: t.right.as_ref().map(|r| r.transpose()),
                var: t.var,
                transpose: !t.transpose,
                right: t.left.as_ref().map(|l| l.transpose()),
                vshape: (t.vshape.1, t.vshape.0),
            })
            .collect();
        Self { constant: self.constant.transpose(), terms }
    }

    pub fn add(&self, other: &MatExpr) -> Self {
        assert_eq!(self.shape(), other.shape(), "add shape");
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { constant: &self.constant + &other.constant, terms }
    }

    pub fn sub(&self, other: &MatExpr) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn add_const(&self, m: &Mat) -> Self {
        Self { constant: &self.constant + m, terms: self.terms.clone() }
    }

    pub fn scale(&self, s: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                left: Some(match &t.left {
                    Some(l) => l * s,
                    None => Mat::identity(t.vshape.0, t.vshape.0) * s,
                }),
                ..t.clone()
            })
            .collect();
        Self { constant: &self.constant * s, terms }
    }

    /// `(self + self^T) / 2`.
    pub fn symmetrized(&self) -> Self {
        self.add(&self.t()).scale(0.5)
    }

    fn shifted(&self, dr: usize, dc: usize) -> impl Iterator<Item = Term> + '_ {
        self.terms.iter().map(move |t| Term { row: t.row + dr, col: t.col + dc, ..t.clone() })
    }

    /// Block matrix; every row must have blocks of equal height and every
    /// column blocks of equal width.
    pub fn grid(blocks: &[Vec<MatExpr>]) -> Self {
        let heights: Vec<usize> = blocks.iter().map(|r| r[0].rows()).collect();
        let widths: Vec<usize> = blocks[0].iter().map(|b| b.cols()).collect();
        let (h, w) = (heights.iter().sum(), widths.iter().sum());
        let mut out = Self::zeros(h, w);
        let mut r0 = 0;
        for (bi, row) in blocks.iter().enumerate() {
            assert_eq!(row.len(), widths.len(), "grid row length");
            let mut c0 = 0;
            for (bj, b) in row.iter().enumerate() {
                assert_eq!(b.shape(), (heights[bi], widths[bj]), "grid block ({bi},{bj}) shape");
                out.constant.view_mut((r0, c0), b.shape()).copy_from(&b.constant);
                out.terms.extend(b.shifted(r0, c0));
                c0 += widths[bj];
            }
            r0 += heights[bi];
        }
        out
    }

    /// Symmetric block matrix from its lower triangle. `lower[i]` holds the
    /// blocks `(i, 0..=i)`; `None` is a zero block. Diagonal blocks must be
    /// symmetric expressions; their upper part is taken as given.
    pub fn sym_lower(sizes: &[usize], lower: &[Vec<Option<MatExpr>>]) -> Self {
        let k = sizes.len();
        assert_eq!(lower.len(), k, "sym_lower row count");
        let rows: Vec<Vec<MatExpr>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let blk = if j <= i {
                            lower[i][j].clone()
                        } else {
                            lower[j][i].as_ref().map(|b| b.t())
                        };
                        blk.unwrap_or_else(|| MatExpr::zeros(sizes[i], sizes[j]))
                    })
                    .collect()
            })
            .collect();
        Self::grid(&rows)
    }

    pub fn diag(blocks: &[MatExpr]) -> Self {
        let k = blocks.len();
        let rows: Vec<Vec<MatExpr>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| if i == j { blocks[i].clone() } else { MatExpr::zeros(blocks[i].rows(), blocks[j].cols()) })
                    .collect()
            })
            .collect();
        Self::grid(&rows)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.iter().map(|t| t.var)
    }

    /// Evaluate at an assignment; `names` resolves ids for error messages.
    pub fn eval_with(&self, a: &Assignment, name: impl Fn(VarId) -> String) -> Result<Mat> {
        let mut out = self.constant.clone();
        for t in &self.terms {
            let v = a.get(t.var).ok_or_else(|| Error::MissingVariable(name(t.var)))?;
            let val = t.value(v);
            let mut view = out.view_mut((t.row, t.col), val.shape());
            view += &val;
        }
        Ok(out)
    }
}
