//! Cone blocks and Nesterov-Todd scalings for the interior-point kernel.
//!
//! The kernel works on a real symmetric-cone program; each block is a
//! nonnegative orthant, a second-order cone, or a (real) PSD cone in packed
//! `svec` form. Complex Hermitian data enters through the real embedding
//! done in the lowering step.

use crate::{RMat, RVec};
use nalgebra::Cholesky;

/// Packed dimension of an m x m symmetric matrix.
pub fn svec_len(m: usize) -> usize {
    m * (m + 1) / 2
}

/// Pack a symmetric matrix: diagonal as-is, off-diagonal times sqrt(2), so
/// that `svec(A) . svec(B) = tr(A B)`.
pub fn svec(a: &RMat) -> RVec {
    let m = a.nrows();
    let s2 = 2f64.sqrt();
    let mut out = RVec::zeros(svec_len(m));
    let mut k = 0;
    for j in 0..m {
        for i in j..m {
            out[k] = if i == j { a[(i, j)] } else { s2 * a[(i, j)] };
            k += 1;
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64], m: usize) -> RMat {
    let inv_s2 = 0.5f64.sqrt();
    let mut out = RMat::zeros(m, m);
    let mut k = 0;
    for j in 0..m {
        for i in j..m {
            if i == j {
                out[(i, j)] = v[k];
            } else {
                let x = v[k] * inv_s2;
                out[(i, j)] = x;
                out[(j, i)] = x;
            }
            k += 1;
        }
    }
    out
}

/// Which symmetric cone a block lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    /// Componentwise nonnegative, `dim` entries.
    NonNeg,
    /// Second-order cone `u0 >= ||u1||`, total length `dim`.
    Soc,
    /// PSD cone of m x m symmetric matrices in svec form; `dim = m(m+1)/2`.
    Psd(usize),
}

/// One cone block of the program: `G z + s = h`, `s` in the cone.
#[derive(Debug, Clone)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub g: RMat,
    pub h: RVec,
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        self.h.len()
    }

    /// Barrier degree of the block.
    pub fn degree(&self) -> usize {
        match self.kind {
            ConeKind::NonNeg => self.dim(),
            ConeKind::Soc => 1,
            ConeKind::Psd(m) => m,
        }
    }

    /// Cone identity element.
    pub fn identity(&self) -> RVec {
        match self.kind {
            ConeKind::NonNeg => RVec::from_element(self.dim(), 1.0),
            ConeKind::Soc => {
                let mut e = RVec::zeros(self.dim());
                e[0] = 1.0;
                e
            }
            ConeKind::Psd(m) => svec(&RMat::identity(m, m)),
        }
    }

    /// Largest step `alpha` keeping `v + alpha d` in the cone (None = unbounded).
    pub fn max_step(&self, v: &RVec, d: &RVec) -> Option<f64> {
        match self.kind {
            ConeKind::NonNeg => {
                let mut best: Option<f64> = None;
                for i in 0..v.len() {
                    if d[i] < 0.0 {
                        let a = -v[i] / d[i];
                        best = Some(best.map_or(a, |b: f64| b.min(a)));
                    }
                }
                best
            }
            ConeKind::Soc => soc_max_step(v, d),
            ConeKind::Psd(m) => {
                let s_mat = smat(v.as_slice(), m);
                let d_mat = smat(d.as_slice(), m);
                let chol = Cholesky::new(s_mat)?;
                // alpha limited by lambda_min of L^{-1} D L^{-T}
                let l = chol.l();
                let mut x = d_mat;
                l.solve_lower_triangular_mut(&mut x);
                x.transpose_mut();
                l.solve_lower_triangular_mut(&mut x);
                let min_eig = x
                    .symmetric_eigenvalues()
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                if min_eig >= 0.0 {
                    None
                } else {
                    Some(-1.0 / min_eig)
                }
            }
        }
    }
}

fn soc_max_step(v: &RVec, d: &RVec) -> Option<f64> {
    let n = v.len();
    let v1 = v.rows(1, n - 1);
    let d1 = d.rows(1, n - 1);
    let a = d[0] * d[0] - d1.norm_squared();
    let b = v[0] * d[0] - v1.dot(&d1);
    let c0 = v[0] * v[0] - v1.norm_squared();
    debug_assert!(c0 > 0.0 && v[0] > 0.0, "SOC step from a boundary point");
    let disc = b * b - a * c0;
    if a >= 0.0 && b >= 0.0 {
        return None;
    }
    if a.abs() < 1e-300 {
        // linear: c0 + 2 b alpha = 0 with b < 0
        return Some(-c0 / (2.0 * b));
    }
    if a > 0.0 {
        if disc < 0.0 {
            return None;
        }
        // b < 0 here; smaller positive root, stable form
        return Some(c0 / (-b + disc.sqrt()));
    }
    // a < 0: one positive root
    Some((b + disc.sqrt()) / (-a))
}

/// Nesterov-Todd scaling state for one block.
#[derive(Debug, Clone)]
pub enum Scaling {
    NonNeg {
        /// w_i = sqrt(s_i / lam_i)
        w: RVec,
        /// scaled point, sqrt(s_i lam_i)
        lam_s: RVec,
    },
    Soc {
        eta: f64,
        wbar: RVec,
        lam_s: RVec,
    },
    Psd {
        /// factor R with T = R R^T, T lam T = s
        r: RMat,
        r_inv: RMat,
        /// scaled point: P(s) = D(lam) = diag(sigma)
        sigma: RVec,
    },
}

/// `H(wbar) x` for the SOC scaling (the "square root" arrow operator).
fn soc_h_apply(wbar: &RVec, x: &RVec) -> RVec {
    let n = x.len();
    let w1 = wbar.rows(1, n - 1);
    let x1 = x.rows(1, n - 1);
    let w1x1 = w1.dot(&x1);
    let mut out = RVec::zeros(n);
    out[0] = wbar[0] * x[0] + w1x1;
    let coef = x[0] + w1x1 / (1.0 + wbar[0]);
    for i in 1..n {
        out[i] = x1[i - 1] + coef * wbar[i];
    }
    out
}

fn soc_reflect(x: &RVec) -> RVec {
    let mut out = -x.clone();
    out[0] = x[0];
    out
}

/// Jordan product on a SOC: `(u . v, u0 v1 + v0 u1)`.
pub fn soc_jordan(u: &RVec, v: &RVec) -> RVec {
    let n = u.len();
    let mut out = RVec::zeros(n);
    out[0] = u.dot(v);
    for i in 1..n {
        out[i] = u[0] * v[i] + v[0] * u[i];
    }
    out
}

/// Solve `Arw(u) x = r` on a SOC (u in the interior):
/// `x0 = (u0 r0 - u1.r1)/(u0^2 - ||u1||^2)`, `x1 = (r1 - x0 u1)/u0`.
pub fn soc_jordan_solve(u: &RVec, r: &RVec) -> RVec {
    let n = u.len();
    let u1 = u.rows(1, n - 1);
    let r1 = r.rows(1, n - 1);
    let det = u[0] * u[0] - u1.norm_squared();
    let mut out = RVec::zeros(n);
    out[0] = (u[0] * r[0] - u1.dot(&r1)) / det;
    for i in 1..n {
        out[i] = (r[i] - out[0] * u[i]) / u[0];
    }
    out
}

impl Scaling {
    /// Compute the NT scaling for `(s, lam)`, both strictly inside the cone.
    pub fn compute(block: &ConeBlock, s: &RVec, lam: &RVec) -> Option<Scaling> {
        match block.kind {
            ConeKind::NonNeg => {
                let mut w = RVec::zeros(s.len());
                let mut lam_s = RVec::zeros(s.len());
                for i in 0..s.len() {
                    if s[i] <= 0.0 || lam[i] <= 0.0 {
                        return None;
                    }
                    w[i] = (s[i] / lam[i]).sqrt();
                    lam_s[i] = (s[i] * lam[i]).sqrt();
                }
                Some(Scaling::NonNeg { w, lam_s })
            }
            ConeKind::Soc => {
                let n = s.len();
                let res_s = (s[0] * s[0] - s.rows(1, n - 1).norm_squared()).max(0.0).sqrt();
                let res_l = (lam[0] * lam[0] - lam.rows(1, n - 1).norm_squared())
                    .max(0.0)
                    .sqrt();
                if res_s <= 0.0 || res_l <= 0.0 {
                    return None;
                }
                let sbar = s / res_s;
                let lbar = lam / res_l;
                let gamma = ((1.0 + sbar.dot(&lbar)) / 2.0).sqrt();
                let mut wbar = soc_reflect(&lbar);
                wbar += &sbar;
                wbar /= 2.0 * gamma;
                let eta = (res_s / res_l).sqrt();
                let lam_s = soc_h_apply(&wbar, &lam) * eta;
                Some(Scaling::Soc { eta, wbar, lam_s })
            }
            ConeKind::Psd(m) => {
                let s_mat = smat(s.as_slice(), m);
                let l_mat = smat(lam.as_slice(), m);
                let chol_s = Cholesky::new(s_mat)?;
                let chol_l = Cholesky::new(l_mat)?;
                let ls = chol_s.l();
                let ll = chol_l.l();
                let svd = (ll.transpose() * &ls).svd(true, true);
                let u = svd.u.as_ref()?;
                let vt = svd.v_t.as_ref()?;
                let sigma = svd.singular_values.clone();
                if sigma.iter().any(|&x| x <= 0.0) {
                    return None;
                }
                let _ = u;
                // R = L_s V Sigma^{-1/2}; R^{-1} = Sigma^{1/2} V^T L_s^{-1}
                let v = vt.transpose();
                let mut r = &ls * &v;
                for j in 0..m {
                    let f = 1.0 / sigma[j].sqrt();
                    for i in 0..m {
                        r[(i, j)] *= f;
                    }
                }
                let mut ls_inv = RMat::identity(m, m);
                ls.solve_lower_triangular_mut(&mut ls_inv);
                let mut r_inv = vt * ls_inv;
                for i in 0..m {
                    let f = sigma[i].sqrt();
                    for j in 0..m {
                        r_inv[(i, j)] *= f;
                    }
                }
                Some(Scaling::Psd { r, r_inv, sigma })
            }
        }
    }

    /// Scaled point lambda-tilde as a cone vector.
    pub fn scaled_point(&self) -> RVec {
        match self {
            Scaling::NonNeg { lam_s, .. } => lam_s.clone(),
            Scaling::Soc { lam_s, .. } => lam_s.clone(),
            Scaling::Psd { sigma, .. } => svec(&RMat::from_diagonal(sigma)),
        }
    }

    /// `P(v)`: primal-side congruence into the scaled space.
    pub fn p_apply(&self, v: &RVec) -> RVec {
        match self {
            Scaling::NonNeg { w, .. } => v.component_div(w),
            Scaling::Soc { eta, wbar, .. } => soc_h_apply(&soc_reflect(wbar), v) / *eta,
            Scaling::Psd { r_inv, .. } => {
                let m = r_inv.nrows();
                let vm = smat(v.as_slice(), m);
                svec(&(r_inv * vm * r_inv.transpose()))
            }
        }
    }

    /// `P^{-1}(v)`.
    pub fn p_inv_apply(&self, v: &RVec) -> RVec {
        match self {
            Scaling::NonNeg { w, .. } => v.component_mul(w),
            Scaling::Soc { eta, wbar, .. } => soc_h_apply(wbar, v) * *eta,
            Scaling::Psd { r, .. } => {
                let m = r.nrows();
                let vm = smat(v.as_slice(), m);
                svec(&(r * vm * r.transpose()))
            }
        }
    }

    /// `D(v)`: dual-side congruence into the scaled space.
    pub fn d_apply(&self, v: &RVec) -> RVec {
        match self {
            Scaling::NonNeg { w, .. } => v.component_mul(w),
            Scaling::Soc { eta, wbar, .. } => soc_h_apply(wbar, v) * *eta,
            Scaling::Psd { r, .. } => {
                let m = r.nrows();
                let vm = smat(v.as_slice(), m);
                svec(&(r.transpose() * vm * r))
            }
        }
    }

    /// `H(v) = P^{-1} D (v)`, the quadratic scaling operator.
    pub fn h_apply(&self, v: &RVec) -> RVec {
        match self {
            Scaling::NonNeg { w, .. } => {
                let w2 = w.component_mul(w);
                v.component_mul(&w2)
            }
            Scaling::Soc { eta, wbar, .. } => {
                // eta^2 (2 wbar wbar^T - J) v
                let n = v.len();
                let wv = wbar.dot(v);
                let mut jv = -v.clone();
                jv[0] = v[0];
                let mut out = wbar * (2.0 * wv);
                out -= jv;
                out *= eta * eta;
                let _ = n;
                out
            }
            Scaling::Psd { r, .. } => {
                let m = r.nrows();
                let t = r * r.transpose();
                let vm = smat(v.as_slice(), m);
                svec(&(&t * vm * &t))
            }
        }
    }

    /// `H^{-1}(v)`.
    pub fn h_inv_apply(&self, v: &RVec) -> RVec {
        match self {
            Scaling::NonNeg { w, .. } => {
                let mut out = v.clone();
                for i in 0..out.len() {
                    out[i] /= w[i] * w[i];
                }
                out
            }
            Scaling::Soc { eta, wbar, .. } => {
                let jw = soc_reflect(wbar);
                let wv = jw.dot(v);
                let mut jv = -v.clone();
                jv[0] = v[0];
                let mut out = jw * (2.0 * wv);
                out -= jv;
                out /= eta * eta;
                out
            }
            Scaling::Psd { r_inv, .. } => {
                let m = r_inv.nrows();
                let t_inv = r_inv.transpose() * r_inv;
                let vm = smat(v.as_slice(), m);
                svec(&(&t_inv * vm * &t_inv))
            }
        }
    }

    /// Jordan product of the two scaled directions, used by the corrector.
    pub fn scaled_correction(&self, ds: &RVec, dlam: &RVec) -> RVec {
        let ps = self.p_apply(ds);
        let dl = self.d_apply(dlam);
        match self {
            Scaling::NonNeg { .. } => ps.component_mul(&dl),
            Scaling::Soc { .. } => soc_jordan(&ps, &dl),
            Scaling::Psd { sigma, .. } => {
                let m = sigma.len();
                let a = smat(ps.as_slice(), m);
                let b = smat(dl.as_slice(), m);
                svec(&((&a * &b + &b * &a) * 0.5))
            }
        }
    }

    /// Solve `lambda-tilde o x = rhs` in the scaled Jordan algebra.
    pub fn jordan_solve_scaled(&self, rhs: &RVec) -> RVec {
        match self {
            Scaling::NonNeg { lam_s, .. } => rhs.component_div(lam_s),
            Scaling::Soc { lam_s, .. } => soc_jordan_solve(lam_s, rhs),
            Scaling::Psd { sigma, .. } => {
                let m = sigma.len();
                let r = smat(rhs.as_slice(), m);
                let mut x = RMat::zeros(m, m);
                for i in 0..m {
                    for j in 0..m {
                        x[(i, j)] = 2.0 * r[(i, j)] / (sigma[i] + sigma[j]);
                    }
                }
                svec(&x)
            }
        }
    }

    /// `lambda-tilde o lambda-tilde` (squared scaled point).
    pub fn scaled_point_squared(&self) -> RVec {
        match self {
            Scaling::NonNeg { lam_s, .. } => lam_s.component_mul(lam_s),
            Scaling::Soc { lam_s, .. } => soc_jordan(lam_s, lam_s),
            Scaling::Psd { sigma, .. } => {
                let sq = RVec::from_iterator(sigma.len(), sigma.iter().map(|x| x * x));
                svec(&RMat::from_diagonal(&sq))
            }
        }
    }

    /// Identity element scaled by `t` in vector form.
    pub fn identity_times(&self, block: &ConeBlock, t: f64) -> RVec {
        block.identity() * t
    }
}
