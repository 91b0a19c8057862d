//! Primal-dual path-following interior-point kernel with Nesterov-Todd
//! scaling and a Mehrotra-style predictor-corrector.
//!
//! Solves `min c.z  s.t.  A z = b,  G_k z + s_k = h_k,  s_k in K_k` over a
//! product of nonnegative, second-order and PSD cone blocks. Dense linear
//! algebra throughout; intended for the small problems this crate builds.

use super::cones::{ConeBlock, ConeKind, Scaling};
use crate::{RMat, RVec};
use nalgebra::LU;

#[derive(Debug, Clone, Copy)]
pub struct IpmOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the step to the cone boundary.
    pub step_fraction: f64,
    /// Primal residual level below which a stall is not infeasibility.
    pub stall_threshold: f64,
    /// Window length of non-improving iterations before declaring infeasible.
    pub stall_window: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 200,
            step_fraction: 0.98,
            stall_threshold: 1e-4,
            stall_window: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpmStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct ConeProgram {
    pub c: RVec,
    pub a_eq: RMat,
    pub b_eq: RVec,
    pub blocks: Vec<ConeBlock>,
}

#[derive(Debug, Clone)]
pub struct IpmResult {
    pub z: RVec,
    pub y: RVec,
    pub s: Vec<RVec>,
    pub lam: Vec<RVec>,
    pub status: IpmStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub objective: f64,
}

struct Direction {
    dz: RVec,
    dy: RVec,
    ds: Vec<RVec>,
    dlam: Vec<RVec>,
}

pub fn solve_cone_program(prog: &ConeProgram, opts: &IpmOptions) -> IpmResult {
    let p = prog.c.len();
    let me = prog.b_eq.len();
    let nu: f64 = prog.blocks.iter().map(|b| b.degree() as f64).sum::<f64>().max(1.0);

    let mut z = RVec::zeros(p);
    let mut y = RVec::zeros(me);
    let mut s: Vec<RVec> = prog.blocks.iter().map(|b| b.identity()).collect();
    let mut lam: Vec<RVec> = prog.blocks.iter().map(|b| b.identity()).collect();

    let norm_b = prog.b_eq.amax().max(1.0);
    let norm_h = prog
        .blocks
        .iter()
        .map(|b| b.h.amax())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let norm_c = prog.c.amax().max(1.0);

    let mut pres_history: Vec<f64> = Vec::new();
    let mut best = None::<(f64, RVec, RVec, Vec<RVec>, Vec<RVec>, f64, f64, f64)>;

    for iter in 0..opts.max_iter {
        // residuals
        let rx = &prog.c
            + prog.a_eq.transpose() * &y
            + prog
                .blocks
                .iter()
                .zip(lam.iter())
                .fold(RVec::zeros(p), |acc, (b, l)| acc + b.g.transpose() * l);
        let ry = &prog.a_eq * &z - &prog.b_eq;
        let rz: Vec<RVec> = prog
            .blocks
            .iter()
            .zip(s.iter())
            .map(|(b, sk)| &b.g * &z + sk - &b.h)
            .collect();

        let gap: f64 = s.iter().zip(lam.iter()).map(|(a, b)| a.dot(b)).sum();
        let mu = gap / nu;
        let pres = (ry.amax() / norm_b).max(
            rz.iter()
                .map(|r| r.amax())
                .fold(0.0f64, f64::max)
                / norm_h,
        );
        let dres = rx.amax() / norm_c;
        let pobj = prog.c.dot(&z);

        let score = pres.max(dres).max(gap / (1.0 + pobj.abs()));
        if best.as_ref().map_or(true, |b| score < b.0) {
            best = Some((
                score,
                z.clone(),
                y.clone(),
                s.clone(),
                lam.clone(),
                pres,
                dres,
                gap,
            ));
        }

        if pres <= opts.tol && dres <= opts.tol && gap <= opts.tol * (1.0 + pobj.abs()) {
            return IpmResult {
                z,
                y,
                s,
                lam,
                status: IpmStatus::Optimal,
                iterations: iter,
                primal_residual: pres,
                dual_residual: dres,
                gap,
                objective: pobj,
            };
        }

        // primal-residual stall above the threshold means the constraints
        // cannot be met: declare infeasibility
        pres_history.push(pres);
        if pres_history.len() > opts.stall_window {
            let w = &pres_history[pres_history.len() - opts.stall_window..];
            let all_above = w.iter().all(|&x| x > opts.stall_threshold);
            let improved = w.last().unwrap() < &(w[0] * 0.5);
            let tiny_mu = mu < 1e-10 && pres > opts.stall_threshold;
            if (all_above && !improved) || tiny_mu {
                return finish(best, IpmStatus::Infeasible, iter, prog);
            }
        }

        // NT scalings
        let scalings: Vec<Scaling> = match prog
            .blocks
            .iter()
            .zip(s.iter().zip(lam.iter()))
            .map(|(b, (sk, lk))| Scaling::compute(b, sk, lk))
            .collect::<Option<Vec<_>>>()
        {
            Some(v) => v,
            None => return finish(best, IpmStatus::MaxIter, iter, prog),
        };

        // Schur complement S = sum_k G_k^T H_k^{-1} G_k, assembled blockwise
        let mut schur = RMat::zeros(p, p);
        let mut scaled_cols: Vec<Option<RMat>> = Vec::with_capacity(prog.blocks.len());
        for (b, sc) in prog.blocks.iter().zip(scalings.iter()) {
            match (&b.kind, sc) {
                (ConeKind::Psd(m), Scaling::Psd { r_inv, .. }) => {
                    // columns of P(G) in svec form; Gram gives the block term
                    let d = b.g.nrows();
                    let mut cols = RMat::zeros(d, p);
                    for j in 0..p {
                        let col = b.g.column(j);
                        if col.iter().all(|&x| x == 0.0) {
                            continue;
                        }
                        let e = super::cones::smat(col.as_slice(), *m);
                        let ycol = super::cones::svec(&(r_inv * e * r_inv.transpose()));
                        cols.set_column(j, &ycol);
                    }
                    schur += cols.transpose() * &cols;
                    scaled_cols.push(Some(cols));
                }
                _ => {
                    for j in 0..p {
                        let gj = RVec::from(b.g.column(j));
                        if gj.iter().all(|&x| x == 0.0) {
                            continue;
                        }
                        let hgj = sc.h_inv_apply(&gj);
                        for i in 0..p {
                            let gi = b.g.column(i);
                            schur[(i, j)] += gi.dot(&hgj);
                        }
                    }
                    scaled_cols.push(None);
                }
            }
        }

        // regularized KKT matrix
        let delta = 1e-11 * (1.0 + schur.diagonal().amax());
        let dim = p + me;
        let mut kkt = RMat::zeros(dim, dim);
        for i in 0..p {
            for j in 0..p {
                kkt[(i, j)] = schur[(i, j)];
            }
            kkt[(i, i)] += delta;
        }
        for i in 0..me {
            for j in 0..p {
                kkt[(p + i, j)] = prog.a_eq[(i, j)];
                kkt[(j, p + i)] = prog.a_eq[(i, j)];
            }
            kkt[(p + i, p + i)] = -delta;
        }
        let lu = LU::new(kkt);

        let solve_kkt = |rhs_z: &RVec, rhs_y: &RVec| -> Option<(RVec, RVec)> {
            let mut rhs = RVec::zeros(dim);
            rhs.rows_mut(0, p).copy_from(rhs_z);
            rhs.rows_mut(p, me).copy_from(rhs_y);
            let mut sol = lu.solve(&rhs)?;
            // one refinement pass against the unregularized operator
            let dz = RVec::from(sol.rows(0, p));
            let dy = RVec::from(sol.rows(p, me));
            let mut res = RVec::zeros(dim);
            let top = &schur * &dz + prog.a_eq.transpose() * &dy - rhs_z;
            let bot = &prog.a_eq * &dz - rhs_y;
            res.rows_mut(0, p).copy_from(&top);
            res.rows_mut(p, me).copy_from(&bot);
            if let Some(corr) = lu.solve(&res) {
                sol -= corr;
            }
            Some((RVec::from(sol.rows(0, p)), RVec::from(sol.rows(p, me))))
        };

        // shared direction computation given the complementarity targets g_k
        let compute_direction = |gvecs: &[RVec]| -> Option<Direction> {
            let mut rhs_z = -rx.clone();
            for ((b, sc), (g_k, rz_k)) in prog
                .blocks
                .iter()
                .zip(scalings.iter())
                .zip(gvecs.iter().zip(rz.iter()))
            {
                let w = rz_k + sc.p_inv_apply(g_k);
                let hw = sc.h_inv_apply(&w);
                rhs_z -= b.g.transpose() * hw;
            }
            let rhs_y = -ry.clone();
            let (dz, dy) = solve_kkt(&rhs_z, &rhs_y)?;
            let mut ds = Vec::with_capacity(prog.blocks.len());
            let mut dlam = Vec::with_capacity(prog.blocks.len());
            for ((b, sc), (g_k, rz_k)) in prog
                .blocks
                .iter()
                .zip(scalings.iter())
                .zip(gvecs.iter().zip(rz.iter()))
            {
                let gdz = &b.g * &dz;
                let w = &gdz + rz_k + sc.p_inv_apply(g_k);
                let dl = sc.h_inv_apply(&w);
                let dsk = -rz_k - gdz;
                ds.push(dsk);
                dlam.push(dl);
            }
            Some(Direction { dz, dy, ds, dlam })
        };

        // affine predictor: g = -lambda_tilde
        let g_aff: Vec<RVec> = scalings.iter().map(|sc| -sc.scaled_point()).collect();
        let Some(aff) = compute_direction(&g_aff) else {
            return finish(best, IpmStatus::MaxIter, iter, prog);
        };

        let alpha_p_aff = max_step_all(&prog.blocks, &s, &aff.ds);
        let alpha_d_aff = max_step_all(&prog.blocks, &lam, &aff.dlam);
        let alpha_aff = alpha_p_aff.min(alpha_d_aff).min(1.0);
        let gap_aff: f64 = s
            .iter()
            .zip(aff.ds.iter())
            .zip(lam.iter().zip(aff.dlam.iter()))
            .map(|((sk, dsk), (lk, dlk))| (sk + dsk * alpha_aff).dot(&(lk + dlk * alpha_aff)))
            .sum();
        let sigma = ((gap_aff / gap).max(0.0).powi(3)).clamp(0.0, 1.0);

        // combined corrector: g = lam~^{-1} o (sigma mu e - lam~^2 - corr)
        let g_comb: Vec<RVec> = prog
            .blocks
            .iter()
            .zip(scalings.iter())
            .enumerate()
            .map(|(k, (b, sc))| {
                let corr = sc.scaled_correction(&aff.ds[k], &aff.dlam[k]);
                let rhs = sc.identity_times(b, sigma * mu) - sc.scaled_point_squared() - corr;
                sc.jordan_solve_scaled(&rhs)
            })
            .collect();
        let Some(dir) = compute_direction(&g_comb) else {
            return finish(best, IpmStatus::MaxIter, iter, prog);
        };

        let alpha_p = (opts.step_fraction * max_step_all(&prog.blocks, &s, &dir.ds)).min(1.0);
        let alpha_d = (opts.step_fraction * max_step_all(&prog.blocks, &lam, &dir.dlam)).min(1.0);
        if !alpha_p.is_finite() || !alpha_d.is_finite() || alpha_p <= 1e-13 || alpha_d <= 1e-13 {
            return finish(best, IpmStatus::MaxIter, iter, prog);
        }

        z += &dir.dz * alpha_p;
        y += &dir.dy * alpha_d;
        for k in 0..prog.blocks.len() {
            s[k] += &dir.ds[k] * alpha_p;
            lam[k] += &dir.dlam[k] * alpha_d;
        }
    }

    finish(best, IpmStatus::MaxIter, opts.max_iter, prog)
}

fn max_step_all(blocks: &[ConeBlock], pts: &[RVec], dirs: &[RVec]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (b, (v, d)) in blocks.iter().zip(pts.iter().zip(dirs.iter())) {
        if let Some(a) = b.max_step(v, d) {
            alpha = alpha.min(a);
        }
    }
    alpha
}

#[allow(clippy::type_complexity)]
fn finish(
    best: Option<(f64, RVec, RVec, Vec<RVec>, Vec<RVec>, f64, f64, f64)>,
    status: IpmStatus,
    iterations: usize,
    prog: &ConeProgram,
) -> IpmResult {
    let (_, z, y, s, lam, pres, dres, gap) =
        best.expect("at least one iterate is always recorded");
    // a numerical breakdown that never brought the primal residual down is
    // an infeasibility certificate in practice
    let status = if status == IpmStatus::MaxIter && iterations >= 5 && pres > 1e-4 {
        IpmStatus::Infeasible
    } else {
        status
    };
    let objective = prog.c.dot(&z);
    IpmResult {
        z,
        y,
        s,
        lam,
        status,
        iterations,
        primal_residual: pres,
        dual_residual: dres,
        gap,
        objective,
    }
}
