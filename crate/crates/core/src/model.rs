//! Uncertain fractional-order system models.
//!
//! A higher-order matrix fractional differential equation
//!
//! ```text
//! A_n D^{n a} q + ... + A_1 D^a q + A_0 q = E
//! ```
//!
//! is stacked into pseudo-state form `D^a x = A x + B u`, `y = C x`, with
//! a block-companion `A`. Parametric uncertainty enters as
//!
//! ```text
//! D^a x = (I + D_I) [ (A + D_A) x + B u ]
//! ```
//!
//! where `D_I = sum m_i M_i` and `D_A = sum n_j N_j` with bounded scalar
//! parameters `|m_i| <= m_bar`, `|n_j| <= n_bar`. The constant envelopes
//! `H >= D_I D_I^T` and `G >= D_A D_A^T` feed the synthesis inequalities.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Guard on vertex enumeration: at most 2^20 corners.
pub const VERTEX_GUARD: usize = 20;

/// Reciprocal-condition threshold below which the leading coefficient is
/// treated as singular.
pub const RCOND_THRESHOLD: f64 = 1e-12;

/// Higher-order matrix model with coefficients `A_0..A_n` acting on a block
/// of size `m`, driven by a known source vector.
#[derive(Debug, Clone)]
pub struct HigherOrderModel {
    alpha: f64,
    coeffs: Vec<DMatrix<f64>>,
    deltas: Option<Vec<DMatrix<f64>>>,
    drive: DVector<f64>,
}

impl HigherOrderModel {
    /// `coeffs` is the ordered list `A_0..A_n` (so `n = coeffs.len() - 1 >= 1`).
    pub fn new(alpha: f64, coeffs: Vec<DMatrix<f64>>, drive: DVector<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidOrder { alpha });
        }
        if coeffs.len() < 2 {
            return Err(Error::DimensionError(
                "need at least A_0 and A_1 (chain length n >= 1)".into(),
            ));
        }
        let m = coeffs[0].nrows();
        for (i, a) in coeffs.iter().enumerate() {
            if a.nrows() != m || a.ncols() != m {
                return Err(Error::DimensionError(format!(
                    "coefficient A_{} is {}x{}, expected {}x{}",
                    i,
                    a.nrows(),
                    a.ncols(),
                    m,
                    m
                )));
            }
            if !linalg::all_finite(a) {
                return Err(Error::InvalidMatrix);
            }
        }
        if drive.len() != m {
            return Err(Error::DimensionError(format!(
                "drive vector has length {}, expected {}",
                drive.len(),
                m
            )));
        }
        Ok(Self {
            alpha,
            coeffs,
            deltas: None,
            drive,
        })
    }

    /// Attaches per-coefficient uncertainty generators `Delta_0..Delta_n`
    /// (same shapes as the coefficients). Descriptive only; the polytopic
    /// [`UncertaintyModel`] is what synthesis consumes.
    pub fn with_deltas(mut self, deltas: Vec<DMatrix<f64>>) -> Result<Self> {
        if deltas.len() != self.coeffs.len() {
            return Err(Error::DimensionError(format!(
                "expected {} delta generators, got {}",
                self.coeffs.len(),
                deltas.len()
            )));
        }
        let m = self.block_size();
        for d in &deltas {
            if d.nrows() != m || d.ncols() != m {
                return Err(Error::DimensionError("delta generator shape".into()));
            }
        }
        self.deltas = Some(deltas);
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Size of one coefficient block.
    pub fn block_size(&self) -> usize {
        self.coeffs[0].nrows()
    }

    /// Chain length `n` (highest derivative order is `n * alpha`).
    pub fn chain_len(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn deltas(&self) -> Option<&[DMatrix<f64>]> {
        self.deltas.as_deref()
    }

    pub fn drive(&self) -> &DVector<f64> {
        &self.drive
    }
}

/// Pseudo-state fractional-order LTI system `D^a x = A x + B u`, `y = C x`.
#[derive(Debug, Clone)]
pub struct FoltiSystem {
    alpha: f64,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
}

impl FoltiSystem {
    pub fn new(alpha: f64, a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidOrder { alpha });
        }
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionError("state matrix A must be square".into()));
        }
        if b.nrows() != n {
            return Err(Error::DimensionError(format!(
                "B has {} rows, expected {}",
                b.nrows(),
                n
            )));
        }
        if c.ncols() != n {
            return Err(Error::DimensionError(format!(
                "C has {} columns, expected {}",
                c.ncols(),
                n
            )));
        }
        for m in [&a, &b, &c] {
            if !linalg::all_finite(m) {
                return Err(Error::InvalidMatrix);
            }
        }
        Ok(Self { alpha, a, b, c })
    }

    /// Same plant with a different fractional order.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.a.clone(), self.b.clone(), self.c.clone())
    }

    /// Same plant with a different output map.
    pub fn with_output(&self, c: DMatrix<f64>) -> Result<Self> {
        Self::new(self.alpha, self.a.clone(), self.b.clone(), c)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// State dimension n.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension l.
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    /// Output dimension m.
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
}

/// Polytopic uncertainty structure: generators for the input-channel block
/// `D_I` and the state block `D_A`, with elementwise parameter bounds.
#[derive(Debug, Clone)]
pub struct UncertaintyModel {
    i_generators: Vec<DMatrix<f64>>,
    i_bound: f64,
    a_generators: Vec<DMatrix<f64>>,
    a_bound: f64,
    dim: usize,
}

impl UncertaintyModel {
    pub fn new(
        i_generators: Vec<DMatrix<f64>>,
        i_bound: f64,
        a_generators: Vec<DMatrix<f64>>,
        a_bound: f64,
        dim: usize,
    ) -> Result<Self> {
        for (label, list) in [("M", &i_generators), ("N", &a_generators)] {
            for (k, g) in list.iter().enumerate() {
                if g.nrows() != dim || g.ncols() != dim {
                    return Err(Error::DimensionError(format!(
                        "generator {}_{} is {}x{}, expected {}x{}",
                        label,
                        k + 1,
                        g.nrows(),
                        g.ncols(),
                        dim,
                        dim
                    )));
                }
                if !linalg::all_finite(g) {
                    return Err(Error::InvalidMatrix);
                }
            }
        }
        if !i_generators.is_empty() && !(i_bound > 0.0) {
            return Err(Error::Parse("iBound must be strictly positive".into()));
        }
        if !a_generators.is_empty() && !(a_bound > 0.0) {
            return Err(Error::Parse("aBound must be strictly positive".into()));
        }
        Ok(Self {
            i_bound: if i_generators.is_empty() { 0.0 } else { i_bound },
            a_bound: if a_generators.is_empty() { 0.0 } else { a_bound },
            i_generators,
            a_generators,
            dim,
        })
    }

    /// Canonical encoding of a certain system: no generators at all.
    pub fn certain(dim: usize) -> Self {
        Self {
            i_generators: Vec::new(),
            i_bound: 0.0,
            a_generators: Vec::new(),
            a_bound: 0.0,
            dim,
        }
    }

    pub fn is_certain(&self) -> bool {
        self.i_generators.is_empty() && self.a_generators.is_empty()
    }

    /// Number of input-channel parameters p.
    pub fn p(&self) -> usize {
        self.i_generators.len()
    }

    /// Number of state-block parameters q.
    pub fn q(&self) -> usize {
        self.a_generators.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn i_generators(&self) -> &[DMatrix<f64>] {
        &self.i_generators
    }

    pub fn a_generators(&self) -> &[DMatrix<f64>] {
        &self.a_generators
    }

    pub fn i_bound(&self) -> f64 {
        self.i_bound
    }

    pub fn a_bound(&self) -> f64 {
        self.a_bound
    }

    /// `D_I` at a parameter vector (no bound check; callers validate).
    pub fn delta_i(&self, i_params: &[f64]) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.dim, self.dim);
        for (gen, &w) in self.i_generators.iter().zip(i_params) {
            d += gen * w;
        }
        d
    }

    /// `D_A` at a parameter vector.
    pub fn delta_a(&self, a_params: &[f64]) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.dim, self.dim);
        for (gen, &w) in self.a_generators.iter().zip(a_params) {
            d += gen * w;
        }
        d
    }
}

/// One admissible point in the uncertainty box.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyRealization {
    pub i_params: Vec<f64>,
    pub a_params: Vec<f64>,
}

impl UncertaintyRealization {
    pub fn zero(u: &UncertaintyModel) -> Self {
        Self {
            i_params: vec![0.0; u.p()],
            a_params: vec![0.0; u.q()],
        }
    }

    /// Validates parameter counts and box bounds against a model.
    pub fn check_admissible(&self, u: &UncertaintyModel) -> Result<()> {
        if self.i_params.len() != u.p() || self.a_params.len() != u.q() {
            return Err(Error::DimensionError(format!(
                "realization has ({}, {}) parameters, model expects ({}, {})",
                self.i_params.len(),
                self.a_params.len(),
                u.p(),
                u.q()
            )));
        }
        for (index, &value) in self.i_params.iter().enumerate() {
            if !(value.abs() <= u.i_bound) {
                return Err(Error::BoundViolation {
                    name: "iParams",
                    index,
                    value,
                    bound: u.i_bound,
                });
            }
        }
        for (index, &value) in self.a_params.iter().enumerate() {
            if !(value.abs() <= u.a_bound) {
                return Err(Error::BoundViolation {
                    name: "aParams",
                    index,
                    value,
                    bound: u.a_bound,
                });
            }
        }
        Ok(())
    }
}

/// Constant envelopes `H >= D_I D_I^T`, `G >= D_A D_A^T` over the whole box.
#[derive(Debug, Clone)]
pub struct Envelope {
    h: DMatrix<f64>,
    g: DMatrix<f64>,
}

impl Envelope {
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }
}

/// Stacks a higher-order model into block-companion pseudo-state form.
///
/// The state is `x = [q; D^a q; ...; D^{(n-1)a} q]` of dimension `n * m`,
/// the bottom block row of `A` is `[-A_n^-1 A_0, ..., -A_n^-1 A_{n-1}]`,
/// `B = [0; ...; 0; A_n^-1]`, and the input is the drive source. The output
/// map defaults to the identity (full pseudo-state measurement).
pub fn companion_form(model: &HigherOrderModel) -> Result<FoltiSystem> {
    let m = model.block_size();
    let n = model.chain_len();
    let lead = &model.coeffs()[n];
    let rc = linalg::rcond(lead);
    if !(rc >= RCOND_THRESHOLD) {
        return Err(Error::NonsingularityViolation { rcond: rc });
    }
    let lead_inv = lead
        .clone()
        .try_inverse()
        .ok_or(Error::NonsingularityViolation { rcond: rc })?;

    let dim = n * m;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    // Superdiagonal identity blocks: D^a of block i is block i+1.
    for i in 0..n - 1 {
        a.view_mut((i * m, (i + 1) * m), (m, m))
            .copy_from(&DMatrix::identity(m, m));
    }
    for j in 0..n {
        let blk = -(&lead_inv) * &model.coeffs()[j];
        a.view_mut(((n - 1) * m, j * m), (m, m)).copy_from(&blk);
    }
    let mut b = DMatrix::<f64>::zeros(dim, m);
    b.view_mut(((n - 1) * m, 0), (m, m)).copy_from(&lead_inv);
    let c = DMatrix::<f64>::identity(dim, dim);
    FoltiSystem::new(model.alpha(), a, b, c)
}

/// Computes the box envelopes `H = p m_bar^2 sum M_i M_i^T` and
/// `G = q n_bar^2 sum N_j N_j^T`. Empty generator lists yield zero matrices.
pub fn uncertainty_bounds(u: &UncertaintyModel) -> Envelope {
    let dim = u.dim();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for gen in u.i_generators() {
        h += gen * gen.transpose();
    }
    h *= u.p() as f64 * u.i_bound() * u.i_bound();

    let mut g = DMatrix::<f64>::zeros(dim, dim);
    for gen in u.a_generators() {
        g += gen * gen.transpose();
    }
    g *= u.q() as f64 * u.a_bound() * u.a_bound();

    Envelope {
        h: linalg::symmetrize(&h),
        g: linalg::symmetrize(&g),
    }
}

/// Instantiates the uncertain plant at one admissible realization:
/// `A~ = (I + D_I)(A + D_A)`, `B~ = (I + D_I) B`.
pub fn realize(
    sys: &FoltiSystem,
    u: &UncertaintyModel,
    r: &UncertaintyRealization,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if u.dim() != sys.n() {
        return Err(Error::DimensionError(format!(
            "uncertainty dimension {} does not match state dimension {}",
            u.dim(),
            sys.n()
        )));
    }
    r.check_admissible(u)?;
    let n = sys.n();
    let i_plus = DMatrix::identity(n, n) + u.delta_i(&r.i_params);
    let a_tilde = &i_plus * (sys.a() + u.delta_a(&r.a_params));
    let b_tilde = &i_plus * sys.b();
    Ok((a_tilde, b_tilde))
}

/// How to draw realizations from the uncertainty box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingStrategy {
    /// Every sign combination of the box corners (2^(p+q) realizations).
    Vertices,
    /// `count` points uniform in the box, deterministic in `seed`.
    Random { seed: u64, count: usize },
}

/// Enumerates or samples admissible realizations.
pub fn sample_uncertainty(
    u: &UncertaintyModel,
    strategy: SamplingStrategy,
) -> Result<Vec<UncertaintyRealization>> {
    match strategy {
        SamplingStrategy::Vertices => {
            let params = u.p() + u.q();
            if params > VERTEX_GUARD {
                return Err(Error::TooManyVertices {
                    params,
                    limit: VERTEX_GUARD,
                });
            }
            let total = 1usize << params;
            let mut out = Vec::with_capacity(total);
            for mask in 0..total {
                let sign = |bit: usize| if mask >> bit & 1 == 0 { 1.0 } else { -1.0 };
                let i_params: Vec<f64> = (0..u.p()).map(|i| sign(i) * u.i_bound()).collect();
                let a_params: Vec<f64> =
                    (0..u.q()).map(|j| sign(u.p() + j) * u.a_bound()).collect();
                out.push(UncertaintyRealization { i_params, a_params });
            }
            Ok(out)
        }
        SamplingStrategy::Random { seed, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let i_params: Vec<f64> = (0..u.p())
                    .map(|_| rng.random_range(-u.i_bound()..=u.i_bound()))
                    .collect();
                let a_params: Vec<f64> = (0..u.q())
                    .map(|_| rng.random_range(-u.a_bound()..=u.a_bound()))
                    .collect();
                out.push(UncertaintyRealization { i_params, a_params });
            }
            Ok(out)
        }
    }
}

/// The benchmark plant used by the bundled examples: a 3-state system with
/// two input-channel generators and two state-block generators, all
/// parameters bounded by 0.3.
pub fn benchmark_plant(alpha: f64, identity_output: bool) -> (FoltiSystem, UncertaintyModel) {
    let a = DMatrix::from_row_slice(3, 3, &[-2.0, 0.0, -1.0, 0.0, 3.0, 0.0, -1.0, -1.0, 4.0]);
    let b = DMatrix::identity(3, 3);
    let c = if identity_output {
        DMatrix::identity(3, 3)
    } else {
        DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0])
    };
    let sys = FoltiSystem::new(alpha, a, b, c).expect("benchmark plant is well-formed");

    let e = |i: usize, j: usize| {
        let mut m = DMatrix::<f64>::zeros(3, 3);
        m[(i, j)] = 1.0;
        m
    };
    let m1 = e(0, 1);
    let m2 = e(2, 2);
    let n1 = e(1, 1) + e(2, 1);
    let n2 = e(1, 2) + e(2, 2);
    let unc = UncertaintyModel::new(vec![m1, m2], 0.3, vec![n1, n2], 0.3, 3)
        .expect("benchmark uncertainty is well-formed");
    (sys, unc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dm(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn companion_single_block_is_negated_gain() {
        // A_1 = I, A_0 = K: one-block chain collapses to A = -K, B = I.
        let k = dm(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let model = HigherOrderModel::new(
            0.8,
            vec![k.clone(), DMatrix::identity(2, 2)],
            DVector::zeros(2),
        )
        .unwrap();
        let sys = companion_form(&model).unwrap();
        assert_abs_diff_eq!(sys.a(), &(-k), epsilon = 1e-14);
        assert_abs_diff_eq!(sys.b(), &DMatrix::identity(2, 2), epsilon = 1e-14);
    }

    #[test]
    fn companion_scalar_chain() {
        let (a_coef, b_coef) = (0.7, -1.3);
        let model = HigherOrderModel::new(
            0.5,
            vec![
                dm(1, 1, &[b_coef]),
                dm(1, 1, &[a_coef]),
                dm(1, 1, &[1.0]),
            ],
            DVector::zeros(1),
        )
        .unwrap();
        let sys = companion_form(&model).unwrap();
        assert_abs_diff_eq!(sys.a(), &dm(2, 2, &[0.0, 1.0, -b_coef, -a_coef]), epsilon = 1e-14);
        assert_abs_diff_eq!(sys.b(), &dm(2, 1, &[0.0, 1.0]), epsilon = 1e-14);
    }

    #[test]
    fn companion_rejects_singular_lead() {
        let model = HigherOrderModel::new(
            0.5,
            vec![DMatrix::identity(2, 2), DMatrix::zeros(2, 2)],
            DVector::zeros(2),
        )
        .unwrap();
        assert!(matches!(
            companion_form(&model),
            Err(Error::NonsingularityViolation { .. })
        ));
    }

    #[test]
    fn companion_eigenvalues_match_polynomial_roots() {
        // Scalar chains: companion spectrum must be the roots of
        // sum a_i z^i. Durand-Kerner on the polynomial is the oracle.
        use nalgebra::Complex;

        fn durand_kerner(coeffs: &[f64]) -> Vec<Complex<f64>> {
            // coeffs: a_0..a_n, a_n != 0
            let n = coeffs.len() - 1;
            let an = coeffs[n];
            let monic: Vec<f64> = coeffs.iter().map(|c| c / an).collect();
            let eval = |z: Complex<f64>| {
                let mut acc = Complex::new(0.0, 0.0);
                for &c in monic.iter().rev() {
                    acc = acc * z + Complex::new(c, 0.0);
                }
                acc
            };
            let mut roots: Vec<Complex<f64>> = (0..n)
                .map(|k| Complex::new(0.4, 0.9).powu(k as u32 + 1))
                .collect();
            for _ in 0..200 {
                let prev = roots.clone();
                for i in 0..n {
                    let mut denom = Complex::new(1.0, 0.0);
                    for j in 0..n {
                        if j != i {
                            denom *= prev[i] - prev[j];
                        }
                    }
                    roots[i] = prev[i] - eval(prev[i]) / denom;
                }
            }
            roots
        }

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let deg = rng.random_range(2..=4usize);
            let mut coeffs: Vec<f64> = (0..deg).map(|_| rng.random_range(-2.0..2.0)).collect();
            coeffs.push(1.0); // monic lead
            let mats: Vec<DMatrix<f64>> = coeffs.iter().map(|&c| dm(1, 1, &[c])).collect();
            let model = HigherOrderModel::new(0.9, mats, DVector::zeros(1)).unwrap();
            let sys = companion_form(&model).unwrap();
            let mut eigs: Vec<Complex<f64>> =
                sys.a().complex_eigenvalues().iter().copied().collect();
            let mut roots = durand_kerner(&coeffs);
            let key = |z: &Complex<f64>| (z.re, z.im);
            eigs.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            roots.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            for (e, r) in eigs.iter().zip(&roots) {
                assert!((e - r).norm() < 1e-6, "eig {} vs root {}", e, r);
            }
        }
    }

    #[test]
    fn benchmark_envelope_matches_known_values() {
        let (_, unc) = benchmark_plant(0.65, true);
        let env = uncertainty_bounds(&unc);
        let h_expect = dm(3, 3, &[0.18, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.18]);
        let g_expect = dm(
            3,
            3,
            &[0.0, 0.0, 0.0, 0.0, 0.36, 0.36, 0.0, 0.36, 0.36],
        );
        assert_abs_diff_eq!(env.h(), &h_expect, epsilon = 1e-12);
        assert_abs_diff_eq!(env.g(), &g_expect, epsilon = 1e-12);
    }

    #[test]
    fn identity_generator_envelope() {
        let unc =
            UncertaintyModel::new(vec![DMatrix::identity(3, 3)], 1.0, vec![], 1.0, 3).unwrap();
        let env = uncertainty_bounds(&unc);
        assert_abs_diff_eq!(env.h(), &DMatrix::identity(3, 3), epsilon = 1e-14);
        assert_abs_diff_eq!(env.g(), &DMatrix::zeros(3, 3), epsilon = 1e-14);
    }

    #[test]
    fn envelope_dominates_sampled_realizations() {
        // H - D_I D_I^T and G - D_A D_A^T must stay PSD over the box.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gens = |rng: &mut ChaCha8Rng, k: usize| -> Vec<DMatrix<f64>> {
            (0..k)
                .map(|_| {
                    DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0))
                })
                .collect()
        };
        let unc = UncertaintyModel::new(gens(&mut rng, 3), 0.5, gens(&mut rng, 2), 0.8, 3).unwrap();
        let env = uncertainty_bounds(&unc);
        let samples = sample_uncertainty(
            &unc,
            SamplingStrategy::Random {
                seed: 99,
                count: 1000,
            },
        )
        .unwrap();
        for r in &samples {
            let di = unc.delta_i(&r.i_params);
            let da = unc.delta_a(&r.a_params);
            let slack_h = env.h() - &di * di.transpose();
            let slack_g = env.g() - &da * da.transpose();
            assert!(linalg::min_eig_sym(&slack_h) >= -1e-10);
            assert!(linalg::min_eig_sym(&slack_g) >= -1e-10);
        }
    }

    #[test]
    fn realize_zero_is_nominal() {
        let (sys, unc) = benchmark_plant(0.65, true);
        let r = UncertaintyRealization::zero(&unc);
        let (at, bt) = realize(&sys, &unc, &r).unwrap();
        assert_abs_diff_eq!(&at, sys.a(), epsilon = 1e-14);
        assert_abs_diff_eq!(&bt, sys.b(), epsilon = 1e-14);
    }

    #[test]
    fn realize_matches_direct_products() {
        // Elementwise oracle: build (I + D_I)(A + D_A) with explicit loops.
        let (sys, unc) = benchmark_plant(0.65, true);
        let r = UncertaintyRealization {
            i_params: vec![0.3, 0.3],
            a_params: vec![0.3, 0.3],
        };
        let (at, bt) = realize(&sys, &unc, &r).unwrap();

        let n = 3;
        let mut di = vec![[0.0f64; 3]; 3];
        di[0][1] = 0.3;
        di[2][2] = 0.3;
        let mut da = vec![[0.0f64; 3]; 3];
        da[1][1] = 0.3;
        da[1][2] = 0.3;
        da[2][1] = 0.3;
        da[2][2] = 0.3;
        let mut expect_a = vec![[0.0f64; 3]; 3];
        let mut expect_b = vec![[0.0f64; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                let mut sa = 0.0;
                let mut sb = 0.0;
                for k in 0..n {
                    let ik = if i == k { 1.0 } else { 0.0 } + di[i][k];
                    sa += ik * (sys.a()[(k, j)] + da[k][j]);
                    sb += ik * sys.b()[(k, j)];
                }
                expect_a[i][j] = sa;
                expect_b[i][j] = sb;
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!((at[(i, j)] - expect_a[i][j]).abs() < 1e-13);
                assert!((bt[(i, j)] - expect_b[i][j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn realize_rejects_out_of_bounds() {
        let (sys, unc) = benchmark_plant(0.65, true);
        let r = UncertaintyRealization {
            i_params: vec![0.31, 0.0],
            a_params: vec![0.0, 0.0],
        };
        assert!(matches!(
            realize(&sys, &unc, &r),
            Err(Error::BoundViolation { .. })
        ));
    }

    #[test]
    fn realize_affine_in_state_block_directions() {
        // With i_params fixed, A~ is affine in each a_param.
        let (sys, unc) = benchmark_plant(0.65, true);
        let base = UncertaintyRealization {
            i_params: vec![0.1, -0.2],
            a_params: vec![0.05, -0.05],
        };
        let (a0, _) = realize(&sys, &unc, &base).unwrap();
        let step = |d: f64| {
            let mut r = base.clone();
            r.a_params[1] += d;
            realize(&sys, &unc, &r).unwrap().0
        };
        let d1 = step(0.1) - &a0;
        let d2 = step(0.2) - &a0;
        assert_abs_diff_eq!(&(d1 * 2.0), &d2, epsilon = 1e-12);
    }

    #[test]
    fn vertices_of_two_parameter_box() {
        let unc = UncertaintyModel::new(
            vec![DMatrix::identity(2, 2)],
            0.5,
            vec![DMatrix::identity(2, 2)],
            1.5,
            2,
        )
        .unwrap();
        let v = sample_uncertainty(&unc, SamplingStrategy::Vertices).unwrap();
        assert_eq!(v.len(), 4);
        for r in &v {
            assert_eq!(r.i_params[0].abs(), 0.5);
            assert_eq!(r.a_params[0].abs(), 1.5);
        }
    }

    #[test]
    fn random_sampling_empty_and_deterministic() {
        let (_, unc) = benchmark_plant(0.65, true);
        let none =
            sample_uncertainty(&unc, SamplingStrategy::Random { seed: 5, count: 0 }).unwrap();
        assert!(none.is_empty());
        let a =
            sample_uncertainty(&unc, SamplingStrategy::Random { seed: 5, count: 40 }).unwrap();
        let b =
            sample_uncertainty(&unc, SamplingStrategy::Random { seed: 5, count: 40 }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vertex_guard_trips() {
        let gens: Vec<DMatrix<f64>> = (0..21).map(|_| DMatrix::identity(1, 1)).collect();
        let unc = UncertaintyModel::new(gens, 1.0, vec![], 1.0, 1).unwrap();
        assert!(matches!(
            sample_uncertainty(&unc, SamplingStrategy::Vertices),
            Err(Error::TooManyVertices { .. })
        ));
    }
}
