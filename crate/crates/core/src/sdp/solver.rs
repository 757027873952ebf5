//! Interior-point solver for conic programs
//!   minimize qᵀx  subject to  Gx + s = h,  s ∈ K,
//! where K is a product of nonnegative, second-order, and PSD blocks.
//!
//! The algorithm is a Nesterov-Todd scaled Mehrotra predictor-corrector on
//! the simplified homogeneous self-dual embedding, so primal infeasibility
//! and unboundedness come out as certificates instead of failures. Each
//! iteration reduces the Newton system to one Cholesky factorization of
//! Gᵀ(WᵀW)⁻¹G shared by two right-hand sides.

use super::cones::{ConeSet, Scaling};
use crate::linalg::{cholesky, cholesky_solve};
use crate::{Error, Result};
use ndarray::{Array1, Array2};

/// Dense-column sparse matrix in column-major adjacency form. Rows are the
/// cone coordinates, columns the decision variables.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    cols: Vec<Vec<(u32, f64)>>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, cols: vec![Vec::new(); ncols] }
    }

    /// Stages one entry; duplicates accumulate on [`SparseMatrix::finalize`].
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        assert!(row < self.nrows && col < self.ncols, "entry out of bounds");
        if val != 0.0 {
            self.cols[col].push((row as u32, val));
        }
    }

    /// Sorts columns by row, merges duplicates, and drops exact zeros.
    pub fn finalize(&mut self) {
        for col in &mut self.cols {
            col.sort_unstable_by_key(|&(r, _)| r);
            let mut out: Vec<(u32, f64)> = Vec::with_capacity(col.len());
            for &(r, v) in col.iter() {
                match out.last_mut() {
                    Some(last) if last.0 == r => last.1 += v,
                    _ => out.push((r, v)),
                }
            }
            out.retain(|&(_, v)| v != 0.0);
            *col = out;
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(|c| c.len()).sum()
    }

    pub fn col(&self, c: usize) -> &[(u32, f64)] {
        &self.cols[c]
    }

    /// G x.
    pub fn mul_vec(&self, x: &[f64]) -> Array1<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut out = Array1::<f64>::zeros(self.nrows);
        for (c, col) in self.cols.iter().enumerate() {
            let xc = x[c];
            if xc != 0.0 {
                for &(r, v) in col {
                    out[r as usize] += v * xc;
                }
            }
        }
        out
    }

    /// Gᵀ y.
    pub fn mul_t_vec(&self, y: &[f64]) -> Array1<f64> {
        assert_eq!(y.len(), self.nrows);
        let mut out = Array1::<f64>::zeros(self.ncols);
        for (c, col) in self.cols.iter().enumerate() {
            let mut acc = 0.0;
            for &(r, v) in col {
                acc += v * y[r as usize];
            }
            out[c] = acc;
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::<f64>::zeros((self.nrows, self.ncols));
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                out[[r as usize, c]] += v;
            }
        }
        out
    }

    pub fn from_dense(a: &Array2<f64>) -> Self {
        let mut m = Self::zeros(a.nrows(), a.ncols());
        for c in 0..a.ncols() {
            for r in 0..a.nrows() {
                m.push(r, c, a[[r, c]]);
            }
        }
        m.finalize();
        m
    }
}

/// A conic program in the canonical inequality form.
#[derive(Clone, Debug)]
pub struct ConicProblem {
    pub q: Array1<f64>,
    pub g: SparseMatrix,
    pub h: Array1<f64>,
    pub cones: ConeSet,
}

impl ConicProblem {
    pub fn validate(&self) -> Result<()> {
        if self.g.ncols() != self.q.len() {
            return Err(Error::Dimension(format!(
                "objective has {} entries, matrix has {} columns",
                self.q.len(),
                self.g.ncols()
            )));
        }
        if self.g.nrows() != self.h.len() || self.h.len() != self.cones.total_len() {
            return Err(Error::Dimension(format!(
                "rows {}, offsets {}, cone length {} must agree",
                self.g.nrows(),
                self.h.len(),
                self.cones.total_len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SolveStatus {
    /// Converged to the requested tolerances.
    Optimal,
    /// Certified primal infeasibility (a separating dual ray was found).
    Infeasible,
    /// Certified unboundedness (an improving primal ray was found).
    Unbounded,
    /// Ran out of iterations; the returned point is the best effort.
    MaxIterations,
    /// Scaling or factorization broke down.
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Primal point x/τ when solved; the improving ray when unbounded.
    pub x: Array1<f64>,
    /// Slack s/τ when solved; the ray's slack when unbounded.
    pub s: Array1<f64>,
    /// Dual point z/τ when solved; the separating ray when infeasible.
    pub z: Array1<f64>,
    /// qᵀx at the returned primal point (NaN for certificates).
    pub primal_objective: f64,
    /// Complementarity gap ⟨s, z⟩ at the returned point (NaN for certificates).
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Relative primal/dual residual tolerance.
    pub tol_feas: f64,
    /// Absolute complementarity gap tolerance.
    pub tol_gap_abs: f64,
    /// Gap tolerance relative to the objective magnitude.
    pub tol_gap_rel: f64,
    /// Residual tolerance for infeasibility/unboundedness certificates.
    pub tol_certificate: f64,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_back: f64,
    /// Steps below this declare a stall.
    pub min_step: f64,
    /// Prints one diagnostic line per iteration to stderr.
    pub trace: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tol_feas: 1e-8,
            tol_gap_abs: 1e-8,
            tol_gap_rel: 1e-8,
            tol_certificate: 1e-8,
            step_back: 0.99,
            min_step: 1e-10,
            trace: false,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Per-block column slices of G: for each cone block, the columns that touch
/// it together with their (local row, value) entries.
type BlockCols = Vec<Vec<(usize, Vec<(usize, f64)>)>>;

fn split_columns(g: &SparseMatrix, cones: &ConeSet) -> BlockCols {
    let mut out: BlockCols = vec![Vec::new(); cones.n_blocks()];
    for c in 0..g.ncols() {
        let col = g.col(c);
        let mut i = 0;
        for b in 0..cones.n_blocks() {
            let range = cones.block_range(b);
            let mut entries = Vec::new();
            while i < col.len() && (col[i].0 as usize) < range.end {
                entries.push((col[i].0 as usize - range.start, col[i].1));
                i += 1;
            }
            if !entries.is_empty() {
                out[b].push((c, entries));
            }
        }
    }
    out
}

/// Forms M = Gᵀ(WᵀW)⁻¹G blockwise through the sparse columns.
fn form_normal_matrix(
    n: usize,
    cones: &ConeSet,
    scaling: &Scaling,
    block_cols: &BlockCols,
) -> Array2<f64> {
    let mut m = Array2::<f64>::zeros((n, n));
    let max_len =
        (0..cones.n_blocks()).map(|b| cones.spec(b).vec_len()).max().unwrap_or(0);
    let mut ybuf = vec![0.0; max_len];
    for b in 0..cones.n_blocks() {
        let len = cones.spec(b).vec_len();
        let active = &block_cols[b];
        for (ci, (c, entries)) in active.iter().enumerate() {
            scaling.hinv_apply_block_sparse(b, cones, entries, &mut ybuf[..len]);
            for (c2, entries2) in active.iter().take(ci + 1) {
                let mut acc = 0.0;
                for &(r, v) in entries2 {
                    acc += v * ybuf[r];
                }
                m[[*c, *c2]] += acc;
                if c2 != c {
                    m[[*c2, *c]] += acc;
                }
            }
        }
    }
    m
}

/// Cholesky with escalating diagonal regularization.
fn factor_with_regularization(m: &Array2<f64>) -> Option<Array2<f64>> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[[i, i]].abs()).sum::<f64>() / n.max(1) as f64;
    for reg in [0.0, 1e-12, 1e-10, 1e-8] {
        let mut trial = m.clone();
        if reg > 0.0 {
            let bump = reg * scale.max(1.0);
            for i in 0..n {
                trial[[i, i]] += bump;
            }
        }
        if let Some(l) = cholesky(&trial) {
            return Some(l);
        }
    }
    None
}

/// Solves the reduced saddle system
///   [0  Gᵀ][Δx]   [rx]
///   [G  -H][Δz] = [rz]
/// through M = GᵀH⁻¹G with the cached Cholesky factor, polishing the result
/// with a few rounds of iterative refinement. Refinement matters: close to
/// the optimum the scaling becomes extreme and a single normal-equation
/// solve loses enough digits to stall the outer iteration.
fn kkt_solve(
    prob: &ConicProblem,
    scaling: &Scaling,
    chol: &Array2<f64>,
    rx: &[f64],
    rz: &[f64],
) -> (Array1<f64>, Array1<f64>) {
    let cones = &prob.cones;
    let solve_once = |rx_c: &[f64], rz_c: &[f64]| {
        let hinv_rz = scaling.apply_h_inv(cones, rz_c);
        let gt = prob.g.mul_t_vec(hinv_rz.as_slice().unwrap());
        let rhs: Vec<f64> = (0..rx_c.len()).map(|i| rx_c[i] + gt[i]).collect();
        let dx = Array1::from(cholesky_solve(chol, &rhs));
        let gdx = prob.g.mul_vec(dx.as_slice().unwrap());
        let diff: Vec<f64> = (0..rz_c.len()).map(|i| gdx[i] - rz_c[i]).collect();
        let dz = scaling.apply_h_inv(cones, &diff);
        (dx, dz)
    };
    let (mut dx, mut dz) = solve_once(rx, rz);
    let rx_scale = norm2(rx).max(1.0);
    let rz_scale = norm2(rz).max(1.0);
    for _ in 0..3 {
        let gtdz = prob.g.mul_t_vec(dz.as_slice().unwrap());
        let r1: Vec<f64> = (0..rx.len()).map(|i| rx[i] - gtdz[i]).collect();
        let gdx = prob.g.mul_vec(dx.as_slice().unwrap());
        let wdz = scaling.apply_w(cones, dz.as_slice().unwrap());
        let hdz = scaling.apply_wt(cones, wdz.as_slice().unwrap());
        let r2: Vec<f64> = (0..rz.len()).map(|i| rz[i] - gdx[i] + hdz[i]).collect();
        if norm2(&r1) <= 1e-13 * rx_scale && norm2(&r2) <= 1e-13 * rz_scale {
            break;
        }
        let (ddx, ddz) = solve_once(&r1, &r2);
        dx += &ddx;
        dz += &ddz;
    }
    (dx, dz)
}

struct Direction {
    dx: Array1<f64>,
    dz: Array1<f64>,
    ds: Array1<f64>,
    dtau: f64,
    dkappa: f64,
}

struct IterationCache<'a> {
    prob: &'a ConicProblem,
    scaling: &'a Scaling,
    chol: &'a Array2<f64>,
    /// Solution of the saddle system for the static right-hand side (-q, h).
    dx2: Array1<f64>,
    dz2: Array1<f64>,
    tau: f64,
    kappa: f64,
}

/// Newton direction for the homogeneous system with the given residual
/// targets: dual (d_x), primal (d_z), gap row (d_tau), scaled
/// complementarity (d_s), and τκ complementarity (d_kappa).
fn newton_direction(
    cache: &IterationCache<'_>,
    d_x: &[f64],
    d_z: &[f64],
    d_tau: f64,
    d_s: &[f64],
    d_kappa: f64,
) -> Direction {
    let prob = cache.prob;
    let cones = &prob.cones;
    let scaling = cache.scaling;
    let lam_div = scaling.jordan_div_lambda(cones, d_s);
    let wt_div = scaling.apply_wt(cones, lam_div.as_slice().unwrap());
    let dbar_z: Vec<f64> = (0..d_z.len()).map(|i| d_z[i] - wt_div[i]).collect();
    let (dx1, dz1) = kkt_solve(prob, scaling, cache.chol, d_x, &dbar_z);
    let q = prob.q.as_slice().unwrap();
    let h = prob.h.as_slice().unwrap();
    let num = d_tau - d_kappa / cache.tau
        - dot(q, dx1.as_slice().unwrap())
        - dot(h, dz1.as_slice().unwrap());
    let den = -cache.kappa / cache.tau
        + dot(q, cache.dx2.as_slice().unwrap())
        + dot(h, cache.dz2.as_slice().unwrap());
    let dtau = num / den;
    let dx = &dx1 + &(&cache.dx2 * dtau);
    let dz = &dz1 + &(&cache.dz2 * dtau);
    let wdz = scaling.apply_w(cones, dz.as_slice().unwrap());
    let inner: Vec<f64> = (0..wdz.len()).map(|i| lam_div[i] - wdz[i]).collect();
    let ds = scaling.apply_wt(cones, &inner);
    let dkappa = (d_kappa - cache.kappa * dtau) / cache.tau;
    Direction { dx, dz, ds, dtau, dkappa }
}

/// Largest admissible step toward the cone boundaries, τ ≥ 0 and κ ≥ 0
/// included.
fn max_step_all(
    cones: &ConeSet,
    s: &[f64],
    z: &[f64],
    tau: f64,
    kappa: f64,
    dir: &Direction,
) -> Result<f64> {
    let mut alpha = cones.max_step(s, dir.ds.as_slice().unwrap())?;
    alpha = alpha.min(cones.max_step(z, dir.dz.as_slice().unwrap())?);
    if dir.dtau < 0.0 {
        alpha = alpha.min(-tau / dir.dtau);
    }
    if dir.dkappa < 0.0 {
        alpha = alpha.min(-kappa / dir.dkappa);
    }
    Ok(alpha)
}

pub fn solve(prob: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution> {
    prob.validate()?;
    let cones = &prob.cones;
    let n = prob.g.ncols();
    let m = prob.g.nrows();
    let q = prob.q.as_slice().unwrap();
    let h = prob.h.as_slice().unwrap();
    let deg = cones.degree() as f64;
    let e = cones.identity();

    let block_cols = split_columns(&prob.g, cones);
    let mut x = Array1::<f64>::zeros(n);
    let mut s = e.clone();
    let mut z = e.clone();
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let hnorm = norm2(h).max(1.0);
    let qnorm = norm2(q).max(1.0);

    // Best balanced iterate seen so far; the fallback when late iterations
    // lose accuracy faster than they gain complementarity.
    struct Best {
        x: Array1<f64>,
        s: Array1<f64>,
        z: Array1<f64>,
        tau: f64,
        pobj: f64,
        gap: f64,
        pres: f64,
        dres: f64,
        iter: usize,
        score: f64,
    }
    let mut best: Option<Best> = None;

    let numerical = |x: &Array1<f64>, s: &Array1<f64>, z: &Array1<f64>, iters: usize| {
        ConicSolution {
            status: SolveStatus::NumericalFailure,
            x: x.clone(),
            s: s.clone(),
            z: z.clone(),
            primal_objective: f64::NAN,
            gap: f64::NAN,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            iterations: iters,
        }
    };
    // A snapshot within this factor of every tolerance still counts as
    // solved when further progress is numerically impossible.
    const RELAXATION: f64 = 100.0;
    let finish = |best: Option<Best>,
                  x: &Array1<f64>,
                  s: &Array1<f64>,
                  z: &Array1<f64>,
                  iters: usize,
                  exhausted: bool| {
        if let Some(b) = best {
            if b.score <= RELAXATION {
                return ConicSolution {
                    status: SolveStatus::Optimal,
                    x: &b.x / b.tau,
                    s: &b.s / b.tau,
                    z: &b.z / b.tau,
                    primal_objective: b.pobj,
                    gap: b.gap,
                    primal_residual: b.pres,
                    dual_residual: b.dres,
                    iterations: b.iter,
                };
            }
            if exhausted {
                return ConicSolution {
                    status: SolveStatus::MaxIterations,
                    x: &b.x / b.tau,
                    s: &b.s / b.tau,
                    z: &b.z / b.tau,
                    primal_objective: b.pobj,
                    gap: b.gap,
                    primal_residual: b.pres,
                    dual_residual: b.dres,
                    iterations: b.iter,
                };
            }
        }
        numerical(x, s, z, iters)
    };

    for iter in 0..settings.max_iterations {
        // Residuals of the homogeneous system.
        let gtz = prob.g.mul_t_vec(z.as_slice().unwrap());
        let gx = prob.g.mul_vec(x.as_slice().unwrap());
        let rx: Vec<f64> = (0..n).map(|i| gtz[i] + q[i] * tau).collect();
        let rz: Vec<f64> = (0..m).map(|i| s[i] + gx[i] - h[i] * tau).collect();
        let qtx = dot(q, x.as_slice().unwrap());
        let htz = dot(h, z.as_slice().unwrap());
        let rtau = kappa + qtx + htz;

        // Convergence metrics at the de-homogenized point.
        let pobj = qtx / tau;
        let dobj = -htz / tau;
        let gap = dot(s.as_slice().unwrap(), z.as_slice().unwrap()) / (tau * tau);
        let pres = norm2(&rz) / tau / hnorm;
        let dres = norm2(&rx) / tau / qnorm;
        if settings.trace {
            eprintln!(
                "it {iter:3} pobj {pobj:+.6e} dobj {dobj:+.6e} gap {gap:.3e} pres {pres:.3e} dres {dres:.3e} tau {tau:.3e} kappa {kappa:.3e}"
            );
        }

        // How far this iterate sits from simultaneous convergence (1.0 means
        // every tolerance is met).
        let gap_tol = settings
            .tol_gap_abs
            .max(settings.tol_gap_rel * pobj.abs().max(dobj.abs()).max(1.0));
        let score = (pres / settings.tol_feas)
            .max(dres / settings.tol_feas)
            .max(gap / gap_tol);
        let improved = best.as_ref().map_or(true, |b| score < b.score);
        if improved {
            best = Some(Best {
                x: x.clone(),
                s: s.clone(),
                z: z.clone(),
                tau,
                pobj,
                gap,
                pres,
                dres,
                iter,
                score,
            });
        } else if let Some(b) = &best {
            // Numerics are degrading; settle for the snapshot if it is good
            // enough rather than drift further from feasibility.
            if iter >= b.iter + 8 && score > 10.0 * b.score {
                return Ok(finish(best, &x, &s, &z, iter, true));
            }
        }
        if pres <= settings.tol_feas
            && dres <= settings.tol_feas
            && (gap <= settings.tol_gap_abs
                || gap <= settings.tol_gap_rel * pobj.abs().max(dobj.abs()).max(1.0))
        {
            return Ok(ConicSolution {
                status: SolveStatus::Optimal,
                x: &x / tau,
                s: &s / tau,
                z: &z / tau,
                primal_objective: pobj,
                gap,
                primal_residual: pres,
                dual_residual: dres,
                iterations: iter,
            });
        }

        // Infeasibility: z with Gᵀz = 0, hᵀz < 0 separates the constraints.
        if htz < 0.0 {
            let scale = -htz;
            let cert = norm2(gtz.as_slice().unwrap()) / scale;
            if cert <= settings.tol_certificate * (norm2(z.as_slice().unwrap()) / scale).max(1.0) {
                return Ok(ConicSolution {
                    status: SolveStatus::Infeasible,
                    x: Array1::zeros(n),
                    s: &s / scale,
                    z: &z / scale,
                    primal_objective: f64::NAN,
                    gap: f64::NAN,
                    primal_residual: f64::NAN,
                    dual_residual: cert,
                    iterations: iter,
                });
            }
        }
        // Unboundedness: x with Gx + s = 0, qᵀx < 0 is an improving ray.
        if qtx < 0.0 {
            let scale = -qtx;
            let ray: Vec<f64> = (0..m).map(|i| gx[i] + s[i]).collect();
            let cert = norm2(&ray) / scale;
            if cert <= settings.tol_certificate * (norm2(x.as_slice().unwrap()) / scale).max(1.0) {
                return Ok(ConicSolution {
                    status: SolveStatus::Unbounded,
                    x: &x / scale,
                    s: &s / scale,
                    z: Array1::zeros(m),
                    primal_objective: f64::NAN,
                    gap: f64::NAN,
                    primal_residual: cert,
                    dual_residual: f64::NAN,
                    iterations: iter,
                });
            }
        }

        // Nesterov-Todd scaling at the current iterate.
        let scaling = match Scaling::compute(cones, s.as_slice().unwrap(), z.as_slice().unwrap())
        {
            Ok(sc) => sc,
            Err(_) => return Ok(finish(best, &x, &s, &z, iter, false)),
        };
        let lam = scaling.lambda().clone();
        let lam_sq = cones.jordan_product(lam.as_slice().unwrap(), lam.as_slice().unwrap());
        let mu = (dot(s.as_slice().unwrap(), z.as_slice().unwrap()) + tau * kappa) / (deg + 1.0);

        let mmat = form_normal_matrix(n, cones, &scaling, &block_cols);
        let chol = match factor_with_regularization(&mmat) {
            Some(l) => l,
            None => return Ok(finish(best, &x, &s, &z, iter, false)),
        };
        let neg_q: Vec<f64> = q.iter().map(|v| -v).collect();
        let (dx2, dz2) = kkt_solve(prob, &scaling, &chol, &neg_q, h);
        let cache = IterationCache { prob, scaling: &scaling, chol: &chol, dx2, dz2, tau, kappa };

        // Predictor: drive residuals and complementarity to zero.
        let d_x: Vec<f64> = rx.iter().map(|v| -v).collect();
        let d_z: Vec<f64> = rz.iter().map(|v| -v).collect();
        let d_s: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
        let affine = newton_direction(&cache, &d_x, &d_z, -rtau, &d_s, -tau * kappa);
        let alpha_aff = match max_step_all(cones, s.as_slice().unwrap(), z.as_slice().unwrap(), tau, kappa, &affine) {
            Ok(a) => a.min(1.0),
            Err(_) => return Ok(finish(best, &x, &s, &z, iter, false)),
        };

        // Mehrotra centering weight from the predictor's progress.
        let s_aff: Vec<f64> = (0..m).map(|i| s[i] + alpha_aff * affine.ds[i]).collect();
        let z_aff: Vec<f64> = (0..m).map(|i| z[i] + alpha_aff * affine.dz[i]).collect();
        let tau_aff = tau + alpha_aff * affine.dtau;
        let kappa_aff = kappa + alpha_aff * affine.dkappa;
        let mu_aff = (dot(&s_aff, &z_aff) + tau_aff * kappa_aff) / (deg + 1.0);
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector: recentered residual targets plus the second-order term.
        let shrink = 1.0 - sigma;
        let d_x: Vec<f64> = rx.iter().map(|v| -shrink * v).collect();
        let d_z: Vec<f64> = rz.iter().map(|v| -shrink * v).collect();
        let ws = scaling.apply_winv_t(cones, affine.ds.as_slice().unwrap());
        let wz = scaling.apply_w(cones, affine.dz.as_slice().unwrap());
        let cross = cones.jordan_product(ws.as_slice().unwrap(), wz.as_slice().unwrap());
        let d_s: Vec<f64> =
            (0..m).map(|i| sigma * mu * e[i] - lam_sq[i] - cross[i]).collect();
        let d_kappa = sigma * mu - tau * kappa - affine.dtau * affine.dkappa;
        let dir = newton_direction(&cache, &d_x, &d_z, -shrink * rtau, &d_s, d_kappa);

        let alpha_max = match max_step_all(cones, s.as_slice().unwrap(), z.as_slice().unwrap(), tau, kappa, &dir) {
            Ok(a) => a,
            Err(_) => return Ok(finish(best, &x, &s, &z, iter, false)),
        };
        let alpha = (settings.step_back * alpha_max).min(1.0);
        if settings.trace {
            eprintln!("       alpha_aff {alpha_aff:.3e} sigma {sigma:.3e} alpha {alpha:.3e}");
        }
        if alpha <= settings.min_step {
            if settings.trace {
                eprintln!("       stall: alpha {alpha:.3e}");
            }
            return Ok(finish(best, &x, &s, &z, iter, false));
        }

        for i in 0..n {
            x[i] += alpha * dir.dx[i];
        }
        for i in 0..m {
            s[i] += alpha * dir.ds[i];
            z[i] += alpha * dir.dz[i];
        }
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;
        if !(tau > 0.0 && kappa > 0.0)
            || !x.iter().all(|v| v.is_finite())
            || !s.iter().all(|v| v.is_finite())
            || !z.iter().all(|v| v.is_finite())
        {
            return Ok(finish(best, &x, &s, &z, iter, false));
        }
    }

    // Out of iterations: return the best snapshot, or the final point if no
    // snapshot was ever taken.
    if best.is_some() {
        return Ok(finish(best, &x, &s, &z, settings.max_iterations, true));
    }
    let gx = prob.g.mul_vec(x.as_slice().unwrap());
    let gtz = prob.g.mul_t_vec(z.as_slice().unwrap());
    let rz: Vec<f64> = (0..m).map(|i| s[i] + gx[i] - h[i] * tau).collect();
    let rx: Vec<f64> = (0..n).map(|i| gtz[i] + q[i] * tau).collect();
    Ok(ConicSolution {
        status: SolveStatus::MaxIterations,
        x: &x / tau,
        s: &s / tau,
        z: &z / tau,
        primal_objective: dot(q, x.as_slice().unwrap()) / tau,
        gap: dot(s.as_slice().unwrap(), z.as_slice().unwrap()) / (tau * tau),
        primal_residual: norm2(&rz) / tau / hnorm,
        dual_residual: norm2(&rx) / tau / qnorm,
        iterations: settings.max_iterations,
    })
}
