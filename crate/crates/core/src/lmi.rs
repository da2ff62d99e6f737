//! Synthesis matrix inequalities as affine symmetric expressions.
//!
//! Everything the solver sees is an [`AffineMatrixExpr`]: a constant matrix
//! plus scalar-entry coefficient matrices, affine in the entries of a set of
//! [`DecisionVariable`]s. Matrix variables come in symmetric, skew-symmetric
//! and full rectangular kinds; a Hermitian variable `X = X_R + i X_I` is the
//! pair (symmetric `X_R`, skew-symmetric `X_I`) and enters real LMIs through
//! two devices:
//!
//! - `r X + conj(r) conj(X) = 2 cos(t) X_R - 2 sin(t) X_I` with `r = e^{it}`,
//!   a real (generally nonsymmetric) matrix expression;
//! - the real embedding `[[X_R, -X_I], [X_I, X_R]]`, positive definite iff
//!   `X` is.
//!
//! [`assemble_theorem1`] builds the output-feedback synthesis inequality for
//! the `0 < alpha < 1` branch, [`assemble_theorem2`] the Kronecker-doubled
//! one for `1 <= alpha < 2`, and [`assemble_certain`] the reduced form for
//! plants without uncertainty.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Envelope, FoltiSystem};

/// Identifier of a decision variable, unique within one problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

/// Shape of a decision variable, fixing its number of free scalars.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Scalar,
    /// Symmetric d x d: d(d+1)/2 scalars (upper triangle, row-major).
    Symmetric(usize),
    /// Skew-symmetric d x d: d(d-1)/2 scalars (strict upper triangle).
    SkewSymmetric(usize),
    /// Full rows x cols: rows*cols scalars (row-major).
    Full(usize, usize),
}

impl VarKind {
    pub fn num_scalars(&self) -> usize {
        match *self {
            VarKind::Scalar => 1,
            VarKind::Symmetric(d) => d * (d + 1) / 2,
            VarKind::SkewSymmetric(d) => d.saturating_sub(1) * d / 2,
            VarKind::Full(r, c) => r * c,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match *self {
            VarKind::Scalar => (1, 1),
            VarKind::Symmetric(d) | VarKind::SkewSymmetric(d) => (d, d),
            VarKind::Full(r, c) => (r, c),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecisionVariable {
    pub id: VarId,
    pub name: String,
    pub kind: VarKind,
}

impl DecisionVariable {
    pub fn num_scalars(&self) -> usize {
        self.kind.num_scalars()
    }

    /// Basis matrix of scalar entry `e`: the symmetric/skew/full unit matrix
    /// that entry multiplies.
    pub fn basis(&self, e: usize) -> DMatrix<f64> {
        let (rows, cols) = self.kind.shape();
        let mut m = DMatrix::zeros(rows, cols);
        match self.kind {
            VarKind::Scalar => m[(0, 0)] = 1.0,
            VarKind::Full(_, c) => m[(e / c, e % c)] = 1.0,
            VarKind::Symmetric(d) => {
                let (i, j) = sym_entry_position(d, e);
                m[(i, j)] = 1.0;
                m[(j, i)] = 1.0;
            }
            VarKind::SkewSymmetric(d) => {
                let (i, j) = skew_entry_position(d, e);
                m[(i, j)] = 1.0;
                m[(j, i)] = -1.0;
            }
        }
        m
    }

    /// Matrix expression standing for this variable.
    pub fn expr(&self) -> AffineMatrixExpr {
        let (rows, cols) = self.kind.shape();
        let mut terms = BTreeMap::new();
        for e in 0..self.num_scalars() {
            terms.insert((self.id, e), self.basis(e));
        }
        AffineMatrixExpr {
            rows,
            cols,
            constant: DMatrix::zeros(rows, cols),
            terms,
        }
    }

    /// Reconstructs the matrix value of this variable from a flat assignment.
    pub fn value(&self, layout: &VarLayout, x: &[f64]) -> DMatrix<f64> {
        let (rows, cols) = self.kind.shape();
        let mut m = DMatrix::zeros(rows, cols);
        for e in 0..self.num_scalars() {
            m += self.basis(e) * x[layout.slot(self.id, e)];
        }
        m
    }
}

fn sym_entry_position(d: usize, e: usize) -> (usize, usize) {
    let mut row = 0;
    let mut start = 0;
    while start + (d - row) <= e {
        start += d - row;
        row += 1;
    }
    (row, row + (e - start))
}

fn skew_entry_position(d: usize, e: usize) -> (usize, usize) {
    let mut row = 0;
    let mut start = 0;
    while start + (d - 1 - row) <= e {
        start += d - 1 - row;
        row += 1;
    }
    (row, row + 1 + (e - start))
}

/// Flat scalar layout of a variable list: declaration order, each variable
/// occupying `num_scalars` consecutive slots.
#[derive(Debug, Clone)]
pub struct VarLayout {
    offsets: BTreeMap<VarId, usize>,
    total: usize,
}

impl VarLayout {
    pub fn of(vars: &[DecisionVariable]) -> Self {
        let mut offsets = BTreeMap::new();
        let mut total = 0;
        for v in vars {
            offsets.insert(v.id, total);
            total += v.num_scalars();
        }
        Self { offsets, total }
    }

    pub fn total_scalars(&self) -> usize {
        self.total
    }

    pub fn offset(&self, id: VarId) -> usize {
        *self.offsets.get(&id).expect("variable not in layout")
    }

    pub fn slot(&self, id: VarId, entry: usize) -> usize {
        self.offset(id) + entry
    }
}

/// Matrix-valued expression affine in scalar variable entries.
///
/// Rectangular shapes are allowed while assembling; constraints handed to
/// [`LmiProblem`] must evaluate to symmetric matrices.
#[derive(Debug, Clone)]
pub struct AffineMatrixExpr {
    rows: usize,
    cols: usize,
    constant: DMatrix<f64>,
    terms: BTreeMap<(VarId, usize), DMatrix<f64>>,
}

impl AffineMatrixExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            constant: DMatrix::zeros(rows, cols),
            terms: BTreeMap::new(),
        }
    }

    pub fn from_const(m: DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            constant: m,
            terms: BTreeMap::new(),
        }
    }

    /// `var * coeff` for a scalar variable.
    pub fn scaled_var(var: &DecisionVariable, coeff: DMatrix<f64>) -> Self {
        assert!(matches!(var.kind, VarKind::Scalar));
        let (rows, cols) = (coeff.nrows(), coeff.ncols());
        let mut terms = BTreeMap::new();
        terms.insert((var.id, 0), coeff);
        Self {
            rows,
            cols,
            constant: DMatrix::zeros(rows, cols),
            terms,
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn constant(&self) -> &DMatrix<f64> {
        &self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, usize, &DMatrix<f64>)> {
        self.terms.iter().map(|(&(v, e), m)| (v, e, m))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Ids of all variables this expression references.
    pub fn referenced_vars(&self) -> Vec<VarId> {
        let mut ids: Vec<VarId> = self.terms.keys().map(|&(v, _)| v).collect();
        ids.dedup();
        ids
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        out.constant += &other.constant;
        for (&key, m) in &other.terms {
            out.terms
                .entry(key)
                .and_modify(|acc| *acc += m)
                .or_insert_with(|| m.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.constant *= k;
        for m in out.terms.values_mut() {
            *m *= k;
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            constant: self.constant.transpose(),
            terms: self
                .terms
                .iter()
                .map(|(&k, m)| (k, m.transpose()))
                .collect(),
        }
    }

    /// `self + self^T`.
    pub fn sym(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        self.add(&self.transpose())
    }

    /// Left-multiplication by a constant: `m * self`.
    pub fn lmul(&self, m: &DMatrix<f64>) -> Self {
        assert_eq!(m.ncols(), self.rows);
        Self {
            rows: m.nrows(),
            cols: self.cols,
            constant: m * &self.constant,
            terms: self.terms.iter().map(|(&k, c)| (k, m * c)).collect(),
        }
    }

    /// Right-multiplication by a constant: `self * m`.
    pub fn rmul(&self, m: &DMatrix<f64>) -> Self {
        assert_eq!(self.cols, m.nrows());
        Self {
            rows: self.rows,
            cols: m.ncols(),
            constant: &self.constant * m,
            terms: self.terms.iter().map(|(&k, c)| (k, c * m)).collect(),
        }
    }

    /// Kronecker product `k (x) self` with a constant left factor.
    pub fn kron_left(&self, k: &DMatrix<f64>) -> Self {
        Self {
            rows: k.nrows() * self.rows,
            cols: k.ncols() * self.cols,
            constant: k.kronecker(&self.constant),
            terms: self
                .terms
                .iter()
                .map(|(&key, c)| (key, k.kronecker(c)))
                .collect(),
        }
    }

    /// Assembles a block matrix from a grid of expressions. All cells in a
    /// grid row must share a height, all cells in a column a width;
    /// zero-sized cells are allowed.
    pub fn block(grid: &[Vec<&AffineMatrixExpr>]) -> Self {
        assert!(!grid.is_empty());
        let ncols_grid = grid[0].len();
        let row_sizes: Vec<usize> = grid.iter().map(|r| r[0].rows).collect();
        let col_sizes: Vec<usize> = grid[0].iter().map(|c| c.cols).collect();
        for row in grid {
            assert_eq!(row.len(), ncols_grid, "ragged block grid");
        }
        for (i, row) in grid.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                assert_eq!(
                    (cell.rows, cell.cols),
                    (row_sizes[i], col_sizes[j]),
                    "block ({i},{j}) has inconsistent shape"
                );
            }
        }
        let rows: usize = row_sizes.iter().sum();
        let cols: usize = col_sizes.iter().sum();
        let mut out = Self::zeros(rows, cols);
        let mut r0 = 0;
        for (i, row) in grid.iter().enumerate() {
            let mut c0 = 0;
            for (j, cell) in row.iter().enumerate() {
                if row_sizes[i] > 0 && col_sizes[j] > 0 {
                    out.constant
                        .view_mut((r0, c0), (row_sizes[i], col_sizes[j]))
                        .copy_from(&cell.constant);
                    for (&key, m) in &cell.terms {
                        let target = out
                            .terms
                            .entry(key)
                            .or_insert_with(|| DMatrix::zeros(rows, cols));
                        let mut view = target.view_mut((r0, c0), (row_sizes[i], col_sizes[j]));
                        view += m;
                    }
                }
                c0 += col_sizes[j];
            }
            r0 += row_sizes[i];
        }
        out
    }

    /// Block-diagonal of two expressions.
    pub fn diag2(a: &AffineMatrixExpr, b: &AffineMatrixExpr) -> Self {
        let z_ab = Self::zeros(a.rows, b.cols);
        let z_ba = Self::zeros(b.rows, a.cols);
        Self::block(&[vec![a, &z_ab], vec![&z_ba, b]])
    }

    /// Evaluates the expression at a flat assignment.
    pub fn eval(&self, layout: &VarLayout, x: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (&(var, entry), coeff) in &self.terms {
            let v = x[layout.slot(var, entry)];
            if v != 0.0 {
                m += coeff * v;
            }
        }
        m
    }

    /// Largest absolute entry over the constant and all coefficients.
    pub fn max_abs(&self) -> f64 {
        let mut s = linalg::max_abs(&self.constant);
        for m in self.terms.values() {
            s = s.max(linalg::max_abs(m));
        }
        s
    }

    /// Structural symmetry: constant and every coefficient symmetric to a
    /// relative tolerance.
    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let check = |m: &DMatrix<f64>| {
            let scale = 1.0 + linalg::max_abs(m);
            linalg::max_abs(&(m - m.transpose())) <= 1e-9 * scale
        };
        check(&self.constant) && self.terms.values().all(check)
    }

    /// Exactly symmetrizes the constant and all coefficients.
    pub fn symmetrized(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            constant: linalg::symmetrize(&self.constant),
            terms: self
                .terms
                .iter()
                .map(|(&k, m)| (k, linalg::symmetrize(m)))
                .collect(),
        }
    }
}

/// Hermitian matrix variable `X = X_R + i X_I` with `X_R` symmetric and
/// `X_I` skew-symmetric. For dimension 1 the imaginary part vanishes.
#[derive(Debug, Clone)]
pub struct HermitianVar {
    pub re: DecisionVariable,
    pub im: Option<DecisionVariable>,
    dim: usize,
}

impl HermitianVar {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// (real part, imaginary part) at an assignment.
    pub fn value(&self, layout: &VarLayout, x: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let re = self.re.value(layout, x);
        let im = match &self.im {
            Some(v) => v.value(layout, x),
            None => DMatrix::zeros(self.dim, self.dim),
        };
        (re, im)
    }
}

/// `r X + conj(r) conj(X)` for `r = e^{i theta}`: the real matrix expression
/// `2 cos(theta) X_R - 2 sin(theta) X_I`.
pub fn real_combination(x: &HermitianVar, theta: f64) -> AffineMatrixExpr {
    let mut e = x.re.expr().scale(2.0 * theta.cos());
    if let Some(im) = &x.im {
        e = e.sub(&im.expr().scale(2.0 * theta.sin()));
    }
    e
}

/// Real embedding `[[X_R, -X_I], [X_I, X_R]]`, positive definite iff the
/// Hermitian `X` is positive definite (each eigenvalue of `X` appears twice).
pub fn hermitian_embedding(x: &HermitianVar) -> AffineMatrixExpr {
    let d = x.dim();
    let re = x.re.expr();
    let im = match &x.im {
        Some(v) => v.expr(),
        None => AffineMatrixExpr::zeros(d, d),
    };
    let minus_im = im.neg();
    AffineMatrixExpr::block(&[vec![&re, &minus_im], vec![&im, &re]])
}

/// One labeled constraint block.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub label: String,
    pub expr: AffineMatrixExpr,
}

impl Constraint {
    pub fn new(label: &str, expr: AffineMatrixExpr) -> Self {
        Self {
            label: label.to_string(),
            expr,
        }
    }
}

/// A strict-LMI feasibility problem: find an assignment making every
/// negative-definiteness block `< 0` and every positivity block `> 0`.
#[derive(Debug, Clone)]
pub struct LmiProblem {
    vars: Vec<DecisionVariable>,
    neg: Vec<Constraint>,
    pos: Vec<Constraint>,
}

impl LmiProblem {
    pub fn new(
        vars: Vec<DecisionVariable>,
        neg: Vec<Constraint>,
        pos: Vec<Constraint>,
    ) -> Result<Self> {
        for c in neg.iter().chain(pos.iter()) {
            if c.expr.nrows() != c.expr.ncols() || !c.expr.is_symmetric() {
                return Err(Error::DimensionError(format!(
                    "constraint {:?} is not square symmetric",
                    c.label
                )));
            }
        }
        let mut referenced: Vec<VarId> = neg
            .iter()
            .chain(pos.iter())
            .flat_map(|c| c.expr.referenced_vars())
            .collect();
        referenced.sort();
        referenced.dedup();
        for v in &vars {
            if v.num_scalars() > 0 && !referenced.contains(&v.id) {
                return Err(Error::DimensionError(format!(
                    "variable {} is not referenced by any constraint",
                    v.name
                )));
            }
        }
        let neg = neg
            .into_iter()
            .map(|c| Constraint {
                label: c.label,
                expr: c.expr.symmetrized(),
            })
            .collect();
        let pos = pos
            .into_iter()
            .map(|c| Constraint {
                label: c.label,
                expr: c.expr.symmetrized(),
            })
            .collect();
        Ok(Self { vars, neg, pos })
    }

    pub fn vars(&self) -> &[DecisionVariable] {
        &self.vars
    }

    pub fn neg_constraints(&self) -> &[Constraint] {
        &self.neg
    }

    pub fn pos_constraints(&self) -> &[Constraint] {
        &self.pos
    }

    pub fn layout(&self) -> VarLayout {
        VarLayout::of(&self.vars)
    }

    pub fn num_scalars(&self) -> usize {
        self.vars.iter().map(|v| v.num_scalars()).sum()
    }

    /// Block-structure diagnostics: sizes, variable table, term counts.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "variables: {} ({} scalars)",
            self.vars.len(),
            self.num_scalars()
        );
        for v in &self.vars {
            let (r, c) = v.kind.shape();
            let kind = match v.kind {
                VarKind::Scalar => "scalar".to_string(),
                VarKind::Symmetric(_) => format!("symmetric {r}x{c}"),
                VarKind::SkewSymmetric(_) => format!("skew-symmetric {r}x{c}"),
                VarKind::Full(_, _) => format!("full {r}x{c}"),
            };
            let _ = writeln!(
                s,
                "  {:<10} {:<18} {} scalars",
                v.name,
                kind,
                v.num_scalars()
            );
        }
        let _ = writeln!(s, "constraints:");
        for c in &self.neg {
            let _ = writeln!(
                s,
                "  {:<10} {:>3}x{:<3} < 0   ({} terms)",
                c.label,
                c.expr.nrows(),
                c.expr.ncols(),
                c.expr.num_terms()
            );
        }
        for c in &self.pos {
            let _ = writeln!(
                s,
                "  {:<10} {:>3}x{:<3} > 0   ({} terms)",
                c.label,
                c.expr.nrows(),
                c.expr.ncols(),
                c.expr.num_terms()
            );
        }
        s
    }
}

/// Incremental builder allocating unique variable ids.
#[derive(Debug, Default)]
pub struct LmiBuilder {
    vars: Vec<DecisionVariable>,
    next: u32,
}

impl LmiBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, name: &str, kind: VarKind) -> DecisionVariable {
        let v = DecisionVariable {
            id: VarId(self.next),
            name: name.to_string(),
            kind,
        };
        self.next += 1;
        self.vars.push(v.clone());
        v
    }

    pub fn scalar(&mut self, name: &str) -> DecisionVariable {
        self.push(name, VarKind::Scalar)
    }

    pub fn symmetric(&mut self, name: &str, d: usize) -> DecisionVariable {
        self.push(name, VarKind::Symmetric(d))
    }

    pub fn skew(&mut self, name: &str, d: usize) -> DecisionVariable {
        self.push(name, VarKind::SkewSymmetric(d))
    }

    pub fn full(&mut self, name: &str, rows: usize, cols: usize) -> DecisionVariable {
        self.push(name, VarKind::Full(rows, cols))
    }

    /// Hermitian variable: symmetric real part plus (for dim >= 2) a
    /// skew-symmetric imaginary part.
    pub fn hermitian(&mut self, name: &str, d: usize) -> HermitianVar {
        let re = self.push(&format!("{name}_re"), VarKind::Symmetric(d));
        let im = if d >= 2 {
            Some(self.push(&format!("{name}_im"), VarKind::SkewSymmetric(d)))
        } else {
            None
        };
        HermitianVar { re, im, dim: d }
    }

    pub fn finish(self, neg: Vec<Constraint>, pos: Vec<Constraint>) -> Result<LmiProblem> {
        LmiProblem::new(self.vars, neg, pos)
    }
}

/// Which branch an assembled problem belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `0 < alpha < 1`: Hermitian Lyapunov variables through the real
    /// combination `r P + conj(r) conj(P)`.
    LowOrder,
    /// `1 <= alpha < 2`: real symmetric variables under the 2x2 rotation
    /// Kronecker structure.
    HighOrder,
}

/// Lyapunov-block variable: Hermitian in the low branch, symmetric in the
/// high branch.
#[derive(Debug, Clone)]
pub enum PVar {
    Hermitian(HermitianVar),
    Symmetric(DecisionVariable),
}

impl PVar {
    /// The real matrix multiplying controller variables in the change of
    /// variables: `r P + conj(r) conj(P)` (at angle `theta`) in the low
    /// branch, `P` itself in the high branch.
    pub fn recovery_matrix(&self, theta: f64, layout: &VarLayout, x: &[f64]) -> DMatrix<f64> {
        match self {
            PVar::Hermitian(h) => {
                let (re, im) = h.value(layout, x);
                re * (2.0 * theta.cos()) - im * (2.0 * theta.sin())
            }
            PVar::Symmetric(v) => v.value(layout, x),
        }
    }
}

/// Decision variables of a synthesis problem, kept for controller recovery.
#[derive(Debug, Clone)]
pub struct SynthesisVars {
    pub p_s: PVar,
    pub p_c: Option<PVar>,
    pub t1: Option<DecisionVariable>,
    pub t2: Option<DecisionVariable>,
    pub t3: Option<DecisionVariable>,
    pub t4: DecisionVariable,
    pub eta1: Option<DecisionVariable>,
    pub eta3: Option<DecisionVariable>,
    pub eps1: Option<DecisionVariable>,
}

/// An assembled synthesis problem plus the metadata needed downstream.
#[derive(Debug, Clone)]
pub struct SynthesisLmi {
    pub problem: LmiProblem,
    pub vars: SynthesisVars,
    pub branch: Branch,
    pub theta: f64,
    pub n: usize,
    pub n_c: usize,
}

/// `Theta' = [[sin t, cos t], [-cos t, sin t]]` for the high branch.
pub fn rotation_block(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[theta.sin(), theta.cos(), -theta.cos(), theta.sin()],
    )
}

struct SynthesisParts {
    builder: LmiBuilder,
    p_s: PVar,
    p_c: Option<PVar>,
    t1: Option<DecisionVariable>,
    t2: Option<DecisionVariable>,
    t3: Option<DecisionVariable>,
    t4: DecisionVariable,
    /// `[[A P + B T4, B T3], [T2, T1]]` with `P` the branch recovery matrix.
    inner: AffineMatrixExpr,
    /// `diag(P_S, P_C)` as it appears in the (1,2) block.
    p_diag: AffineMatrixExpr,
    /// `[P^T A^T; 0]`.
    pa_t: AffineMatrixExpr,
    /// `[T4^T B^T; T3^T B^T]`.
    tb_t: AffineMatrixExpr,
    pos: Vec<Constraint>,
}

/// Variables and blocks shared by both branches and the certain-case
/// reduction.
fn synthesis_parts(sys: &FoltiSystem, n_c: usize, branch: Branch, theta: f64) -> SynthesisParts {
    let (n, l) = (sys.n(), sys.inputs());
    let a = sys.a();
    let b = sys.b();
    let mut builder = LmiBuilder::new();

    let (p_s, p_s_expr, mut pos) = match branch {
        Branch::LowOrder => {
            let h = builder.hermitian("P_S", n);
            let expr = real_combination(&h, theta);
            let pos = vec![Constraint::new("P_S", hermitian_embedding(&h))];
            (PVar::Hermitian(h), expr, pos)
        }
        Branch::HighOrder => {
            let v = builder.symmetric("P_S", n);
            let pos = vec![Constraint::new("P_S", v.expr())];
            (PVar::Symmetric(v.clone()), v.expr(), pos)
        }
    };

    let (p_c, p_c_expr) = if n_c > 0 {
        match branch {
            Branch::LowOrder => {
                let h = builder.hermitian("P_C", n_c);
                let expr = real_combination(&h, theta);
                pos.push(Constraint::new("P_C", hermitian_embedding(&h)));
                (Some(PVar::Hermitian(h)), expr)
            }
            Branch::HighOrder => {
                let v = builder.symmetric("P_C", n_c);
                pos.push(Constraint::new("P_C", v.expr()));
                (Some(PVar::Symmetric(v.clone())), v.expr())
            }
        }
    } else {
        (None, AffineMatrixExpr::zeros(0, 0))
    };

    let t1 = (n_c > 0).then(|| builder.full("T1", n_c, n_c));
    let t2 = (n_c > 0).then(|| builder.full("T2", n_c, n));
    let t3 = (n_c > 0).then(|| builder.full("T3", l, n_c));
    let t4 = builder.full("T4", l, n);

    let expr_or = |v: &Option<DecisionVariable>, rows: usize, cols: usize| match v {
        Some(v) => v.expr(),
        None => AffineMatrixExpr::zeros(rows, cols),
    };
    let t1_expr = expr_or(&t1, n_c, n_c);
    let t2_expr = expr_or(&t2, n_c, n);
    let t3_expr = expr_or(&t3, l, n_c);
    let t4_expr = t4.expr();

    let top_left = p_s_expr.lmul(a).add(&t4_expr.lmul(b));
    let top_right = t3_expr.lmul(b);
    let inner = AffineMatrixExpr::block(&[vec![&top_left, &top_right], vec![&t2_expr, &t1_expr]]);

    let p_diag = AffineMatrixExpr::diag2(&p_s_expr, &p_c_expr);

    let pa_upper = p_s_expr.transpose().rmul(&a.transpose());
    let pa_lower = AffineMatrixExpr::zeros(n_c, n);
    let pa_t = AffineMatrixExpr::block(&[vec![&pa_upper], vec![&pa_lower]]);

    let tb_upper = t4_expr.transpose().rmul(&b.transpose());
    let tb_lower = t3_expr.transpose().rmul(&b.transpose());
    let tb_t = AffineMatrixExpr::block(&[vec![&tb_upper], vec![&tb_lower]]);

    SynthesisParts {
        builder,
        p_s,
        p_c,
        t1,
        t2,
        t3,
        t4,
        inner,
        p_diag,
        pa_t,
        tb_t,
        pos,
    }
}

/// Arrowhead layout shared by both theorems:
///
/// ```text
/// [ s11    b12    b13    b14 ]
/// [ .      d22    0      0   ]
/// [ .      .      d33    0   ]
/// [ .      .      .      d44 ]
/// ```
fn assemble_arrowhead(
    s11: &AffineMatrixExpr,
    b12: &AffineMatrixExpr,
    b13: &AffineMatrixExpr,
    b14: &AffineMatrixExpr,
    d22: &AffineMatrixExpr,
    d33: &AffineMatrixExpr,
    d44: &AffineMatrixExpr,
) -> AffineMatrixExpr {
    let (n2, n3, n4) = (d22.nrows(), d33.nrows(), d44.nrows());
    let t12 = b12.transpose();
    let t13 = b13.transpose();
    let t14 = b14.transpose();
    let z23 = AffineMatrixExpr::zeros(n2, n3);
    let z24 = AffineMatrixExpr::zeros(n2, n4);
    let z32 = AffineMatrixExpr::zeros(n3, n2);
    let z34 = AffineMatrixExpr::zeros(n3, n4);
    let z42 = AffineMatrixExpr::zeros(n4, n2);
    let z43 = AffineMatrixExpr::zeros(n4, n3);
    AffineMatrixExpr::block(&[
        vec![s11, b12, b13, b14],
        vec![&t12, d22, &z23, &z24],
        vec![&t13, &z32, d33, &z34],
        vec![&t14, &z42, &z43, d44],
    ])
}

/// Output-feedback synthesis inequality for the `0 < alpha < 1` branch.
///
/// With `Pt_S`, `Pt_C` the real combinations of the Hermitian Lyapunov
/// variables at `theta = (1 - alpha) pi / 2`, the main block matrix is
///
/// ```text
/// [ sym(inner) + e1 Gt + (e3+1) Ht    diag(Pt_S,Pt_C)^T   [Pt_S^T A^T; 0]   [T4^T B^T; T3^T B^T] ]
/// [ .                                 -e1 I               0                 0                    ]
/// [ .                                 .                   eps G - I         0                    ]
/// [ .                                 .                   .                 -e3 I                ]
/// ```
///
/// with `inner = [[A Pt_S + B T4, B T3], [T2, T1]]`, `Gt = diag(G, 0)`,
/// `Ht = diag(H, 0)`. Blocks 3 and 4 carry only their nonzero content
/// (width n), which keeps strict negativity attainable. Positivity of the
/// Hermitian variables is imposed through their real embeddings; the three
/// scalars are 1x1 positivity blocks.
pub fn assemble_theorem1(sys: &FoltiSystem, env: &Envelope, n_c: usize) -> Result<SynthesisLmi> {
    let alpha = sys.alpha();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::WrongBranch {
            alpha,
            branch: "0 < alpha < 1",
        });
    }
    let theta = (1.0 - alpha) * std::f64::consts::PI / 2.0;
    let n = sys.n();
    let mut parts = synthesis_parts(sys, n_c, Branch::LowOrder, theta);

    let eta1 = parts.builder.scalar("eta1");
    let eta3 = parts.builder.scalar("eta3");
    let eps1 = parts.builder.scalar("eps1");

    let g_tilde = pad_diag(env.g(), n_c);
    let h_tilde = pad_diag(env.h(), n_c);

    let sigma11 = parts
        .inner
        .sym()
        .add(&AffineMatrixExpr::scaled_var(&eta1, g_tilde))
        .add(&AffineMatrixExpr::scaled_var(&eta3, h_tilde.clone()))
        .add(&AffineMatrixExpr::from_const(h_tilde));

    let big_n = n + n_c;
    let d22 = AffineMatrixExpr::scaled_var(&eta1, -DMatrix::identity(big_n, big_n));
    let d33 = AffineMatrixExpr::scaled_var(&eps1, env.g().clone())
        .add(&AffineMatrixExpr::from_const(-DMatrix::identity(n, n)));
    let d44 = AffineMatrixExpr::scaled_var(&eta3, -DMatrix::identity(n, n));

    let b12 = parts.p_diag.transpose();
    let main = assemble_arrowhead(&sigma11, &b12, &parts.pa_t, &parts.tb_t, &d22, &d33, &d44);

    let mut pos = std::mem::take(&mut parts.pos);
    for s in [&eta1, &eta3, &eps1] {
        pos.push(Constraint::new(&s.name, s.expr()));
    }

    let problem = parts
        .builder
        .finish(vec![Constraint::new("main", main)], pos)?;

    Ok(SynthesisLmi {
        problem,
        vars: SynthesisVars {
            p_s: parts.p_s,
            p_c: parts.p_c,
            t1: parts.t1,
            t2: parts.t2,
            t3: parts.t3,
            t4: parts.t4,
            eta1: Some(eta1),
            eta3: Some(eta3),
            eps1: Some(eps1),
        },
        branch: Branch::LowOrder,
        theta,
        n,
        n_c,
    })
}

/// Output-feedback synthesis inequality for the `1 <= alpha < 2` branch.
///
/// Every block of the low branch is doubled by a Kronecker factor at
/// `theta = pi - alpha pi / 2`: the (1,1) block is
/// `sym(Theta' (x) inner) + e1 (I2 (x) Gt) + (e3+1)(I2 (x) Ht)` and blocks
/// (1,2)-(1,4) are `I2 (x) .` copies of their low-branch counterparts. The
/// Lyapunov variables are plain symmetric matrices here.
pub fn assemble_theorem2(sys: &FoltiSystem, env: &Envelope, n_c: usize) -> Result<SynthesisLmi> {
    let alpha = sys.alpha();
    if !(1.0..2.0).contains(&alpha) {
        return Err(Error::WrongBranch {
            alpha,
            branch: "1 <= alpha < 2",
        });
    }
    let theta = std::f64::consts::PI - alpha * std::f64::consts::PI / 2.0;
    let n = sys.n();
    let mut parts = synthesis_parts(sys, n_c, Branch::HighOrder, theta);

    let eta1 = parts.builder.scalar("eta1");
    let eta3 = parts.builder.scalar("eta3");
    let eps1 = parts.builder.scalar("eps1");

    let i2 = DMatrix::<f64>::identity(2, 2);
    let rot = rotation_block(theta);
    let g_tilde2 = i2.kronecker(&pad_diag(env.g(), n_c));
    let h_tilde2 = i2.kronecker(&pad_diag(env.h(), n_c));

    let sigma11 = parts
        .inner
        .kron_left(&rot)
        .sym()
        .add(&AffineMatrixExpr::scaled_var(&eta1, g_tilde2))
        .add(&AffineMatrixExpr::scaled_var(&eta3, h_tilde2.clone()))
        .add(&AffineMatrixExpr::from_const(h_tilde2));

    let big_n = n + n_c;
    let d22 = AffineMatrixExpr::scaled_var(&eta1, -DMatrix::identity(2 * big_n, 2 * big_n));
    let d33 = AffineMatrixExpr::scaled_var(&eps1, env.g().clone())
        .add(&AffineMatrixExpr::from_const(-DMatrix::identity(n, n)))
        .kron_left(&i2);
    let d44 = AffineMatrixExpr::scaled_var(&eta3, -DMatrix::identity(2 * n, 2 * n));

    let b12 = parts.p_diag.kron_left(&i2);
    let b13 = parts.pa_t.kron_left(&i2);
    let b14 = parts.tb_t.kron_left(&i2);
    let main = assemble_arrowhead(&sigma11, &b12, &b13, &b14, &d22, &d33, &d44);

    let mut pos = std::mem::take(&mut parts.pos);
    for s in [&eta1, &eta3, &eps1] {
        pos.push(Constraint::new(&s.name, s.expr()));
    }

    let problem = parts
        .builder
        .finish(vec![Constraint::new("main", main)], pos)?;

    Ok(SynthesisLmi {
        problem,
        vars: SynthesisVars {
            p_s: parts.p_s,
            p_c: parts.p_c,
            t1: parts.t1,
            t2: parts.t2,
            t3: parts.t3,
            t4: parts.t4,
            eta1: Some(eta1),
            eta3: Some(eta3),
            eps1: Some(eps1),
        },
        branch: Branch::HighOrder,
        theta,
        n,
        n_c,
    })
}

/// Certain-plant reduction: only the (1,1) block is required negative
/// definite, without envelope terms or the auxiliary scalars.
pub fn assemble_certain(sys: &FoltiSystem, n_c: usize) -> Result<SynthesisLmi> {
    let alpha = sys.alpha();
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidOrder { alpha });
    }
    let branch = if alpha < 1.0 {
        Branch::LowOrder
    } else {
        Branch::HighOrder
    };
    let theta = match branch {
        Branch::LowOrder => (1.0 - alpha) * std::f64::consts::PI / 2.0,
        Branch::HighOrder => std::f64::consts::PI - alpha * std::f64::consts::PI / 2.0,
    };
    let mut parts = synthesis_parts(sys, n_c, branch, theta);
    let sigma11 = match branch {
        Branch::LowOrder => parts.inner.sym(),
        Branch::HighOrder => parts.inner.kron_left(&rotation_block(theta)).sym(),
    };
    let pos = std::mem::take(&mut parts.pos);
    let problem = parts
        .builder
        .finish(vec![Constraint::new("main", sigma11)], pos)?;

    Ok(SynthesisLmi {
        problem,
        vars: SynthesisVars {
            p_s: parts.p_s,
            p_c: parts.p_c,
            t1: parts.t1,
            t2: parts.t2,
            t3: parts.t3,
            t4: parts.t4,
            eta1: None,
            eta3: None,
            eps1: None,
        },
        branch,
        theta,
        n: sys.n(),
        n_c,
    })
}

/// Pads an n x n matrix to `diag(M, 0_{n_c})`.
fn pad_diag(m: &DMatrix<f64>, n_c: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n + n_c, n + n_c);
    out.view_mut((0, 0), (n, n)).copy_from(m);
    out
}
