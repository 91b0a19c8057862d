//! Dense interior-point solver for small complex-Hermitian semidefinite
//! programs, plus Gaussian randomization for rank-one recovery.
//!
//! Problems are stated over one Hermitian matrix variable `X` (maximize
//! `Re tr(C X)` plus a linear term in auxiliary real scalars) with linear
//! equality/inequality constraints, affine LMI blocks and convex quadratic
//! constraints in `[1; vec(X)]`. Everything is lowered onto a real
//! symmetric-cone program through the embedding
//! `X -> [[Re X, -Im X], [Im X, Re X]]` and handed to the path-following
//! kernel in [`ipm`].

pub mod cones;
pub mod ipm;

use crate::metrics::hermitian_part;
use crate::{C64, CMat, CVec, RMat, RVec};
use cones::{svec, svec_len, ConeBlock, ConeKind};
use ipm::{solve_cone_program, ConeProgram, IpmOptions, IpmStatus};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no feasible randomization candidate")]
    RandomizationInfeasible,
}

/// Linear constraint `Re tr(a X) + aux_coef . aux  (=|>=)  b`.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub a: CMat,
    pub aux: RVec,
    pub b: f64,
}

/// Affine Hermitian-valued map required PSD:
/// `F0 + sum_k z_k Fx[k] + sum_j aux_j Faux[j] >= 0`,
/// where `z` runs over the Hermitian parameter basis of `X`.
#[derive(Debug, Clone)]
pub struct LmiBlock {
    pub dim: usize,
    pub f0: CMat,
    pub fx: Vec<CMat>,
    pub faux: Vec<CMat>,
}

impl LmiBlock {
    /// Materialize the X-dependence from a linear map on Hermitian matrices.
    pub fn from_affine(
        dim: usize,
        var_dim: usize,
        f0: CMat,
        map_x: impl Fn(&CMat) -> CMat,
        faux: Vec<CMat>,
    ) -> Self {
        let fx = (0..herm_param_count(var_dim))
            .map(|k| map_x(&herm_basis_mat(var_dim, k)))
            .collect();
        Self { dim, f0, fx, faux }
    }
}

/// Convex quadratic constraint
/// `|| L^H [1; vec(X)] ||^2 + Re tr(lin_x X) + lin_aux . aux + offset <= 0`.
#[derive(Debug, Clone)]
pub struct QuadConstraint {
    /// Factor of the PSD kernel over `[1; vec(X)]`; `(1 + n^2) x r`.
    pub factor: CMat,
    pub lin_x: CMat,
    pub lin_aux: RVec,
    pub offset: f64,
}

/// A complex-Hermitian SDP in standard trace form.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub var_dim: usize,
    pub aux_dim: usize,
    /// Maximize `Re tr(objective X) + objective_aux . aux`.
    pub objective: CMat,
    pub objective_aux: RVec,
    pub eq_constraints: Vec<LinearConstraint>,
    pub ineq_constraints: Vec<LinearConstraint>,
    pub lmi_blocks: Vec<LmiBlock>,
    pub quad_constraints: Vec<QuadConstraint>,
}

impl SdpProblem {
    pub fn new(var_dim: usize, aux_dim: usize) -> Self {
        Self {
            var_dim,
            aux_dim,
            objective: CMat::zeros(var_dim, var_dim),
            objective_aux: RVec::zeros(aux_dim),
            eq_constraints: Vec::new(),
            ineq_constraints: Vec::new(),
            lmi_blocks: Vec::new(),
            quad_constraints: Vec::new(),
        }
    }

    pub fn set_objective(&mut self, c: CMat, aux: RVec) {
        self.objective = c;
        self.objective_aux = aux;
    }

    /// `Re tr(a X) + aux . aux_vars = b`
    pub fn add_eq(&mut self, a: CMat, aux: RVec, b: f64) {
        self.eq_constraints.push(LinearConstraint { a, aux, b });
    }

    /// `Re tr(a X) + aux . aux_vars >= b`
    pub fn add_ineq(&mut self, a: CMat, aux: RVec, b: f64) {
        self.ineq_constraints.push(LinearConstraint { a, aux, b });
    }

    pub fn add_lmi(&mut self, block: LmiBlock) {
        self.lmi_blocks.push(block);
    }

    pub fn add_quad(&mut self, q: QuadConstraint) {
        self.quad_constraints.push(q);
    }

    fn no_aux(&self) -> RVec {
        RVec::zeros(self.aux_dim)
    }

    /// Convenience: constraint without auxiliary terms.
    pub fn add_eq_x(&mut self, a: CMat, b: f64) {
        let aux = self.no_aux();
        self.add_eq(a, aux, b);
    }

    pub fn add_ineq_x(&mut self, a: CMat, b: f64) {
        let aux = self.no_aux();
        self.add_ineq(a, aux, b);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

/// Normalized KKT residuals of the returned iterate.
#[derive(Debug, Clone, Copy)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: CMat,
    pub aux: RVec,
    pub objective_value: f64,
    pub status: SdpStatus,
    pub kkt_residuals: KktResiduals,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 200,
        }
    }
}

// ---- Hermitian parameter basis -------------------------------------------
//
// A Hermitian n x n matrix has n^2 real parameters ordered as: the n real
// diagonal entries, then for each pair i < j (grouped by increasing j) the
// real and imaginary parts of X_ij.

pub(crate) fn herm_param_count(n: usize) -> usize {
    n * n
}

fn pair_index(n: usize, k: usize) -> (usize, usize, bool) {
    // returns (i, j, is_imag) for basis slots past the diagonal
    let t = (k - n) / 2;
    let is_imag = (k - n) % 2 == 1;
    let mut acc = 0;
    for j in 1..n {
        if t < acc + j {
            return (t - acc, j, is_imag);
        }
        acc += j;
    }
    unreachable!("pair index out of range")
}

pub(crate) fn herm_basis_mat(n: usize, k: usize) -> CMat {
    let mut b = CMat::zeros(n, n);
    if k < n {
        b[(k, k)] = C64::new(1.0, 0.0);
    } else {
        let (i, j, is_imag) = pair_index(n, k);
        if is_imag {
            b[(i, j)] = C64::new(0.0, 1.0);
            b[(j, i)] = C64::new(0.0, -1.0);
        } else {
            b[(i, j)] = C64::new(1.0, 0.0);
            b[(j, i)] = C64::new(1.0, 0.0);
        }
    }
    b
}

pub(crate) fn herm_from_params(z: &[f64], n: usize) -> CMat {
    let mut x = CMat::zeros(n, n);
    for i in 0..n {
        x[(i, i)] = C64::new(z[i], 0.0);
    }
    let mut k = n;
    for j in 1..n {
        for i in 0..j {
            let v = C64::new(z[k], z[k + 1]);
            x[(i, j)] = v;
            x[(j, i)] = v.conj();
            k += 2;
        }
    }
    x
}

/// Coefficients of `Re tr(A X)` in the Hermitian parameter basis.
pub(crate) fn re_trace_coeffs(a: &CMat) -> RVec {
    let n = a.nrows();
    let ah = hermitian_part(a);
    let mut c = RVec::zeros(herm_param_count(n));
    for i in 0..n {
        c[i] = ah[(i, i)].re;
    }
    let mut k = n;
    for j in 1..n {
        for i in 0..j {
            c[k] = 2.0 * ah[(i, j)].re;
            c[k + 1] = 2.0 * ah[(i, j)].im;
            k += 2;
        }
    }
    c
}

/// Real embedding `[[Re X, -Im X], [Im X, Re X]]` of a complex matrix.
fn embed(a: &CMat) -> RMat {
    let (m, n) = a.shape();
    let mut out = RMat::zeros(2 * m, 2 * n);
    for i in 0..m {
        for j in 0..n {
            let v = a[(i, j)];
            out[(i, j)] = v.re;
            out[(i, j + n)] = -v.im;
            out[(i + m, j)] = v.im;
            out[(i + m, j + n)] = v.re;
        }
    }
    out
}

// ---- Lowering -------------------------------------------------------------

struct Lowered {
    prog: ConeProgram,
}

fn lower(problem: &SdpProblem) -> Result<Lowered, SdpError> {
    let n = problem.var_dim;
    let na = problem.aux_dim;
    let nx = herm_param_count(n);
    let p = nx + na;

    let dims_ok = |m: &CMat| m.nrows() == n && m.ncols() == n;
    if !dims_ok(&problem.objective) || problem.objective_aux.len() != na {
        return Err(SdpError::DimensionMismatch("objective".into()));
    }

    // objective: minimize the negated, normalized maximization target
    let mut c = RVec::zeros(p);
    let cx = re_trace_coeffs(&problem.objective);
    for k in 0..nx {
        c[k] = -cx[k];
    }
    for j in 0..na {
        c[nx + j] = -problem.objective_aux[j];
    }
    let obj_scale = c.amax().max(1e-12);
    c /= obj_scale;

    // equalities
    let me = problem.eq_constraints.len();
    let mut a_eq = RMat::zeros(me, p);
    let mut b_eq = RVec::zeros(me);
    for (r, con) in problem.eq_constraints.iter().enumerate() {
        if !dims_ok(&con.a) || con.aux.len() != na {
            return Err(SdpError::DimensionMismatch(format!("eq {r}")));
        }
        let coeffs = re_trace_coeffs(&con.a);
        let scale = coeffs
            .amax()
            .max(con.aux.amax())
            .max(con.b.abs())
            .max(1e-12);
        for k in 0..nx {
            a_eq[(r, k)] = coeffs[k] / scale;
        }
        for j in 0..na {
            a_eq[(r, nx + j)] = con.aux[j] / scale;
        }
        b_eq[r] = con.b / scale;
    }

    let mut blocks = Vec::new();

    // the PSD constraint on X itself
    {
        let d = svec_len(2 * n);
        let mut g = RMat::zeros(d, p);
        for k in 0..nx {
            let e = embed(&herm_basis_mat(n, k));
            g.set_column(k, &(-svec(&e)));
        }
        blocks.push(ConeBlock {
            kind: ConeKind::Psd(2 * n),
            g,
            h: RVec::zeros(d),
        });
    }

    // inequalities as one nonnegative block
    if !problem.ineq_constraints.is_empty() {
        let rows = problem.ineq_constraints.len();
        let mut g = RMat::zeros(rows, p);
        let mut h = RVec::zeros(rows);
        for (r, con) in problem.ineq_constraints.iter().enumerate() {
            if !dims_ok(&con.a) || con.aux.len() != na {
                return Err(SdpError::DimensionMismatch(format!("ineq {r}")));
            }
            let coeffs = re_trace_coeffs(&con.a);
            let scale = coeffs
                .amax()
                .max(con.aux.amax())
                .max(con.b.abs())
                .max(1e-12);
            for k in 0..nx {
                g[(r, k)] = -coeffs[k] / scale;
            }
            for j in 0..na {
                g[(r, nx + j)] = -con.aux[j] / scale;
            }
            h[r] = -con.b / scale;
        }
        blocks.push(ConeBlock {
            kind: ConeKind::NonNeg,
            g,
            h,
        });
    }

    // LMI blocks
    for (bi, lmi) in problem.lmi_blocks.iter().enumerate() {
        let m = lmi.dim;
        if lmi.fx.len() != nx || lmi.faux.len() != na || lmi.f0.nrows() != m {
            return Err(SdpError::DimensionMismatch(format!("lmi {bi}")));
        }
        let scale = lmi
            .fx
            .iter()
            .chain(lmi.faux.iter())
            .map(|mat| mat.camax())
            .fold(lmi.f0.camax(), f64::max)
            .max(1e-12);
        let d = svec_len(2 * m);
        let mut g = RMat::zeros(d, p);
        for (k, mat) in lmi.fx.iter().enumerate() {
            if mat.camax() == 0.0 {
                continue;
            }
            let e = embed(&(hermitian_part(mat) / C64::new(scale, 0.0)));
            g.set_column(k, &(-svec(&e)));
        }
        for (j, mat) in lmi.faux.iter().enumerate() {
            if mat.camax() == 0.0 {
                continue;
            }
            let e = embed(&(hermitian_part(mat) / C64::new(scale, 0.0)));
            g.set_column(nx + j, &(-svec(&e)));
        }
        let h = svec(&embed(&(hermitian_part(&lmi.f0) / C64::new(scale, 0.0))));
        blocks.push(ConeBlock {
            kind: ConeKind::Psd(2 * m),
            g,
            h,
        });
    }

    // quadratic constraints as second-order cones
    for quad in &problem.quad_constraints {
        let r = quad.factor.ncols();
        if quad.factor.nrows() != nx + 1 {
            return Err(SdpError::DimensionMismatch("quad factor".into()));
        }
        // w(z) = L^H [1; vec(X)]: constant and per-parameter columns
        let mut w_const = CVec::zeros(r);
        for k in 0..r {
            w_const[k] = quad.factor[(0, k)].conj();
        }
        let vec_idx = |i: usize, j: usize| 1 + j * n + i;
        let mut w_cols = CMat::zeros(r, nx);
        for kb in 0..nx {
            if kb < n {
                let idx = vec_idx(kb, kb);
                for t in 0..r {
                    w_cols[(t, kb)] = quad.factor[(idx, t)].conj();
                }
            } else {
                let (i, j, is_imag) = pair_index(n, kb);
                let idx1 = vec_idx(i, j);
                let idx2 = vec_idx(j, i);
                for t in 0..r {
                    let l1 = quad.factor[(idx1, t)].conj();
                    let l2 = quad.factor[(idx2, t)].conj();
                    w_cols[(t, kb)] = if is_imag {
                        (l1 - l2) * C64::new(0.0, 1.0)
                    } else {
                        l1 + l2
                    };
                }
            }
        }
        // t(z) = -(Re tr(lin_x X) + lin_aux . aux + offset)
        let tx = re_trace_coeffs(&quad.lin_x);
        let mut trow = RVec::zeros(p);
        for k in 0..nx {
            trow[k] = -tx[k];
        }
        for j in 0..na {
            trow[nx + j] = -quad.lin_aux[j];
        }
        let t0 = -quad.offset;
        // cone vector u = ((t+1)/2, Re w, Im w, (t-1)/2)
        let d = 2 * r + 2;
        let mut m_mat = RMat::zeros(d, p);
        let mut m0 = RVec::zeros(d);
        for k in 0..p {
            m_mat[(0, k)] = trow[k] / 2.0;
            m_mat[(d - 1, k)] = trow[k] / 2.0;
        }
        m0[0] = (t0 + 1.0) / 2.0;
        m0[d - 1] = (t0 - 1.0) / 2.0;
        for t in 0..r {
            for k in 0..nx {
                m_mat[(1 + t, k)] = w_cols[(t, k)].re;
                m_mat[(1 + r + t, k)] = w_cols[(t, k)].im;
            }
            m0[1 + t] = w_const[t].re;
            m0[1 + r + t] = w_const[t].im;
        }
        let scale = m_mat.amax().max(m0.amax()).max(1e-12);
        blocks.push(ConeBlock {
            kind: ConeKind::Soc,
            g: -m_mat / scale,
            h: m0 / scale,
        });
    }

    Ok(Lowered {
        prog: ConeProgram {
            c,
            a_eq,
            b_eq,
            blocks,
        },
    })
}

/// Solve a complex-Hermitian SDP.
pub fn solve(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution, SdpError> {
    let lowered = lower(problem)?;
    let ipm_opts = IpmOptions {
        tol: opts.tol,
        max_iter: opts.max_iter,
        ..Default::default()
    };
    let res = solve_cone_program(&lowered.prog, &ipm_opts);
    let nx = herm_param_count(problem.var_dim);
    let x = hermitian_part(&herm_from_params(
        res.z.as_slice().split_at(nx).0,
        problem.var_dim,
    ));
    let aux = RVec::from(res.z.rows(nx, problem.aux_dim));
    let objective_value = crate::metrics::re_trace(&problem.objective, &x)
        + problem.objective_aux.dot(&aux);
    let status = match res.status {
        IpmStatus::Optimal => SdpStatus::Optimal,
        IpmStatus::Infeasible => SdpStatus::Infeasible,
        IpmStatus::MaxIter => SdpStatus::MaxIter,
    };
    Ok(SdpSolution {
        x,
        aux,
        objective_value,
        status,
        kkt_residuals: KktResiduals {
            primal: res.primal_residual,
            dual: res.dual_residual,
            gap: res.gap,
        },
        iterations: res.iterations,
    })
}

/// Self-check: constraint violations of a solution at the complex level,
/// each normalized by its constraint scale. Used by tests and audits.
pub fn constraint_violations(problem: &SdpProblem, sol: &SdpSolution) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let x = &sol.x;
    let min_eig = hermitian_part(x)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    out.push(("x_psd".into(), (-min_eig).max(0.0) / (1.0 + x.norm())));
    for (i, con) in problem.eq_constraints.iter().enumerate() {
        let v = crate::metrics::re_trace(&con.a, x) + con.aux.dot(&sol.aux) - con.b;
        let scale = con.a.camax().max(con.b.abs()).max(1.0);
        out.push((format!("eq{i}"), v.abs() / scale));
    }
    for (i, con) in problem.ineq_constraints.iter().enumerate() {
        let v = crate::metrics::re_trace(&con.a, x) + con.aux.dot(&sol.aux) - con.b;
        let scale = con.a.camax().max(con.b.abs()).max(1.0);
        out.push((format!("ineq{i}"), (-v).max(0.0) / scale));
    }
    for (i, lmi) in problem.lmi_blocks.iter().enumerate() {
        let mut f = lmi.f0.clone();
        let nx = herm_param_count(problem.var_dim);
        let mut z = RVec::zeros(nx);
        // recover parameters of x
        let coeffs = {
            let mut v = RVec::zeros(nx);
            for k in 0..problem.var_dim {
                v[k] = x[(k, k)].re;
            }
            let mut kk = problem.var_dim;
            for j in 1..problem.var_dim {
                for ii in 0..j {
                    v[kk] = x[(ii, j)].re;
                    v[kk + 1] = x[(ii, j)].im;
                    kk += 2;
                }
            }
            v
        };
        z.copy_from(&coeffs);
        for (k, mat) in lmi.fx.iter().enumerate() {
            if z[k] != 0.0 {
                f += mat * C64::new(z[k], 0.0);
            }
        }
        for (j, mat) in lmi.faux.iter().enumerate() {
            f += mat * C64::new(sol.aux[j], 0.0);
        }
        let min_eig = hermitian_part(&f)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let scale = lmi.f0.camax().max(1.0);
        out.push((format!("lmi{i}"), (-min_eig).max(0.0) / scale));
    }
    for (i, quad) in problem.quad_constraints.iter().enumerate() {
        let n = problem.var_dim;
        let mut ut = CVec::zeros(1 + n * n);
        ut[0] = C64::new(1.0, 0.0);
        for (idx, v) in crate::metrics::vec_col(x).iter().enumerate() {
            ut[idx + 1] = *v;
        }
        let w = quad.factor.adjoint() * &ut;
        let val = w.norm_squared()
            + crate::metrics::re_trace(&quad.lin_x, x)
            + quad.lin_aux.dot(&sol.aux)
            + quad.offset;
        let scale = quad.offset.abs().max(1.0);
        out.push((format!("quad{i}"), val.max(0.0) / scale));
    }
    out
}

// ---- Gaussian randomization ------------------------------------------------

/// How candidates are projected onto the feasible set of vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Entrywise phase projection to unit modulus.
    UnitModulus,
    /// Normalization to unit Euclidean norm.
    UnitNorm,
}

fn project_candidate(x: &CVec, proj: Projection) -> Option<CVec> {
    match proj {
        Projection::UnitModulus => Some(CVec::from_fn(x.len(), |i, _| {
            let v = x[i];
            if v.norm() < 1e-300 {
                C64::new(1.0, 0.0)
            } else {
                v / C64::new(v.norm(), 0.0)
            }
        })),
        Projection::UnitNorm => {
            let n = x.norm();
            if n < 1e-300 {
                None
            } else {
                Some(x / C64::new(n, 0.0))
            }
        }
    }
}

/// Recover the best feasible rank-one candidate from a relaxed PSD solution.
///
/// Candidates are the phase/norm projection of the dominant eigenvector plus
/// `n_samples` Gaussian draws with covariance `u_mat`. Returns the candidate
/// maximizing `score` among those passing `feasible`.
pub fn gaussian_randomization<R: Rng + ?Sized>(
    u_mat: &CMat,
    n_samples: usize,
    proj: Projection,
    feasible: impl Fn(&CVec) -> bool,
    score: impl Fn(&CVec) -> f64,
    rng: &mut R,
) -> Result<CVec, SdpError> {
    let n = u_mat.nrows();
    let eig = hermitian_part(u_mat).symmetric_eigen();
    let mut top_idx = 0;
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > eig.eigenvalues[top_idx] {
            top_idx = i;
        }
    }
    let mut candidates: Vec<CVec> = Vec::with_capacity(n_samples + 1);
    candidates.push(CVec::from(eig.eigenvectors.column(top_idx)));
    // factor for CN(0, U) draws
    let mut factor = eig.eigenvectors.clone();
    for j in 0..n {
        let s = eig.eigenvalues[j].max(0.0).sqrt();
        for i in 0..n {
            factor[(i, j)] *= C64::new(s, 0.0);
        }
    }
    for _ in 0..n_samples {
        let g = crate::channels::complex_gaussian_vector(n, rng);
        candidates.push(&factor * g);
    }
    let mut best: Option<(f64, CVec)> = None;
    for cand in candidates {
        let Some(v) = project_candidate(&cand, proj) else {
            continue;
        };
        if !feasible(&v) {
            continue;
        }
        let s = score(&v);
        if best.as_ref().map_or(true, |(bs, _)| s > *bs) {
            best = Some((s, v));
        }
    }
    best.map(|(_, v)| v).ok_or(SdpError::RandomizationInfeasible)
}

/// Phase vector from a lifted unit-modulus solution: `q = u[0..M] / u[M]`,
/// renormalized entrywise.
pub fn recover_q(u: &CVec) -> CVec {
    let m = u.len() - 1;
    let last = u[m];
    CVec::from_fn(m, |i, _| {
        let v = u[i] / last;
        let n = v.norm();
        if n < 1e-300 {
            C64::new(1.0, 0.0)
        } else {
            v / C64::new(n, 0.0)
        }
    })
}
