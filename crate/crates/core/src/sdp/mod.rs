//! Conic formulation of the outage-constrained beamforming design and the
//! interior-point machinery that solves it.
//!
//! The design maximizes the array power toward the look direction subject to
//! per-user surrogate outage constraints and a total power budget. Complex
//! Hermitian unknowns W_k are lowered to real scalars (diagonal, and re/im
//! parts of the strict lower triangle); Hermitian PSD requirements become
//! real PSD blocks through the doubling embedding [[X, −Y], [Y, X]].

pub mod cones;
pub mod rank_one;
pub mod solver;

pub use rank_one::{extract_all, extract_beamformer, ExtractedBeam};
pub use solver::{ConicProblem, ConicSolution, SolveStatus, SolverSettings, SparseMatrix};

use crate::array::{steering_vector, UlaConfig};
use crate::channel::{ChannelSet, UserSpec};
use crate::linalg::{embed_hermitian, hermitian_eigvals, hermitize};
use crate::{Error, Result};
use cones::{svec, ConeSet, ConeSpec};
use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// How the norm bound μ_k ≥ ‖[√2 b_k; vec(A_k)]‖ enters the conic program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum QuadBlockMode {
    /// One second-order cone of length 1 + 2(N + N²) per user (default; the
    /// two encodings are equivalent and this one keeps iterations cheap).
    SecondOrder,
    /// The full arrow-structured Hermitian block of complex side 1 + N + N²,
    /// embedded to a real PSD block of side 2(1 + N + N²).
    FullPsd,
}

/// Complete description of one beamforming design instance.
#[derive(Clone, Debug)]
pub struct DesignProblem {
    pub ula: UlaConfig,
    /// Look direction in radians.
    pub theta0: f64,
    pub users: Vec<UserSpec>,
    pub channels: ChannelSet,
    /// Receiver noise variance σ_c².
    pub noise_var: f64,
    /// Total transmit power budget (trace sum bound).
    pub power_budget: f64,
    pub quad_mode: QuadBlockMode,
}

impl DesignProblem {
    pub fn validate(&self) -> Result<()> {
        if self.users.is_empty() {
            return Err(Error::Config("need at least one user".into()));
        }
        for u in &self.users {
            u.validate()?;
        }
        if self.users.len() != self.channels.n_users() {
            return Err(Error::Dimension(format!(
                "{} user specs but {} channels",
                self.users.len(),
                self.channels.n_users()
            )));
        }
        if self.channels.n_antennas() != self.ula.n_antennas {
            return Err(Error::Dimension(format!(
                "channels have {} entries, array has {} antennas",
                self.channels.n_antennas(),
                self.ula.n_antennas
            )));
        }
        if !(self.noise_var > 0.0) {
            return Err(Error::Config(format!(
                "noise variance must be positive, got {}",
                self.noise_var
            )));
        }
        if !(self.power_budget > 0.0) {
            return Err(Error::Config(format!(
                "power budget must be positive, got {}",
                self.power_budget
            )));
        }
        Ok(())
    }

    pub fn n_antennas(&self) -> usize {
        self.ula.n_antennas
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }
}

/// Scalar unknown layout: per user N diagonal entries, then (re, im) pairs of
/// the strict lower-triangle column by column, then ν_k, then μ_k.
#[derive(Clone, Copy, Debug)]
struct VarLayout {
    n: usize,
    k: usize,
}

impl VarLayout {
    fn stride(&self) -> usize {
        self.n * self.n + 2
    }

    fn total(&self) -> usize {
        self.k * self.stride()
    }

    fn diag(&self, user: usize, p: usize) -> usize {
        user * self.stride() + p
    }

    /// (re, im) indices for entry (p, q) with p < q.
    fn off(&self, user: usize, p: usize, q: usize) -> (usize, usize) {
        debug_assert!(p < q && q < self.n);
        let tri = q * (q - 1) / 2 + p;
        let base = user * self.stride() + self.n + 2 * tri;
        (base, base + 1)
    }

    fn nu(&self, user: usize) -> usize {
        user * self.stride() + self.n * self.n
    }

    fn mu(&self, user: usize) -> usize {
        user * self.stride() + self.n * self.n + 1
    }

    /// Which (user, role) a flat variable index encodes.
    fn kind(&self, var: usize) -> (usize, VarKind) {
        let user = var / self.stride();
        let local = var % self.stride();
        let n = self.n;
        if local < n {
            (user, VarKind::Diag(local))
        } else if local < n * n {
            let tri = (local - n) / 2;
            // Invert tri = q(q-1)/2 + p by walking columns.
            let mut q = 1;
            while (q + 1) * q / 2 <= tri {
                q += 1;
            }
            let p = tri - q * (q - 1) / 2;
            if (local - n) % 2 == 0 {
                (user, VarKind::OffRe(p, q))
            } else {
                (user, VarKind::OffIm(p, q))
            }
        } else if local == n * n {
            (user, VarKind::Nu)
        } else {
            (user, VarKind::Mu)
        }
    }

    /// Rebuilds the Hermitian W_k from the flat vector.
    fn w_matrix(&self, x: &[f64], user: usize) -> Array2<Complex64> {
        let n = self.n;
        let mut w = Array2::<Complex64>::zeros((n, n));
        for p in 0..n {
            w[[p, p]] = Complex64::new(x[self.diag(user, p)], 0.0);
        }
        for q in 1..n {
            for p in 0..q {
                let (re, im) = self.off(user, p, q);
                let v = Complex64::new(x[re], x[im]);
                w[[p, q]] = v;
                w[[q, p]] = v.conj();
            }
        }
        w
    }
}

#[derive(Clone, Copy, Debug)]
enum VarKind {
    Diag(usize),
    OffRe(usize, usize),
    OffIm(usize, usize),
    Nu,
    Mu,
}

/// Derivative of W_user with respect to one scalar unknown, as sparse
/// complex entries (row, col, value). Empty for ν and μ.
fn dw_entries(kind: VarKind) -> Vec<(usize, usize, Complex64)> {
    match kind {
        VarKind::Diag(p) => vec![(p, p, Complex64::new(1.0, 0.0))],
        VarKind::OffRe(p, q) => vec![
            (p, q, Complex64::new(1.0, 0.0)),
            (q, p, Complex64::new(1.0, 0.0)),
        ],
        VarKind::OffIm(p, q) => vec![
            (p, q, Complex64::new(0.0, 1.0)),
            (q, p, Complex64::new(0.0, -1.0)),
        ],
        VarKind::Nu | VarKind::Mu => Vec::new(),
    }
}

/// Re(vᵀ dW v*) for sparse dW entries.
fn quad_form_derivative(entries: &[(usize, usize, Complex64)], v: &Array1<Complex64>) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(p, q, val) in entries {
        acc += v[p] * val * v[q].conj();
    }
    acc.re
}

fn trace_derivative(entries: &[(usize, usize, Complex64)]) -> f64 {
    entries.iter().filter(|(p, q, _)| p == q).map(|(_, _, v)| v.re).sum()
}

/// The assembled conic program plus the bookkeeping to decode solutions.
pub struct AssembledDesign {
    pub conic: ConicProblem,
    layout: VarLayout,
}

impl AssembledDesign {
    /// Splits a flat solution vector into (W blocks, ν, μ).
    pub fn decode(&self, x: &[f64]) -> (Vec<Array2<Complex64>>, Vec<f64>, Vec<f64>) {
        let lay = self.layout;
        let w: Vec<Array2<Complex64>> =
            (0..lay.k).map(|u| hermitize(&lay.w_matrix(x, u))).collect();
        let nu = (0..lay.k).map(|u| x[lay.nu(u)]).collect();
        let mu = (0..lay.k).map(|u| x[lay.mu(u)]).collect();
        (w, nu, mu)
    }

    pub fn n_vars(&self) -> usize {
        self.layout.total()
    }
}

/// Lowers the design to the canonical conic form
///   min −P(θ0)  s.t.  rows ∈ orthant × (per-user norm blocks) × PSD blocks.
pub fn assemble(problem: &DesignProblem) -> Result<AssembledDesign> {
    problem.validate()?;
    let n = problem.n_antennas();
    let kk = problem.n_users();
    let layout = VarLayout { n, k: kk };
    let nvars = layout.total();
    let a0 = steering_vector(&problem.ula, problem.theta0)?;

    // Objective: maximize Σ_k aᵀ W_k a*, i.e. minimize its negation.
    let mut q = Array1::<f64>::zeros(nvars);
    for var in 0..nvars {
        let (_, kind) = layout.kind(var);
        let entries = dw_entries(kind);
        if !entries.is_empty() {
            q[var] = -quad_form_derivative(&entries, &a0);
        }
    }

    // Row bookkeeping: orthant rows first, then per-user blocks.
    let mut specs: Vec<ConeSpec> = vec![ConeSpec::NonNegative(2 * kk + 1)];
    let mut per_user_offsets = Vec::with_capacity(kk);
    let mut row_count = 2 * kk + 1;
    let quad_complex_side = 1 + n + n * n;
    for _ in 0..kk {
        per_user_offsets.push(row_count);
        match problem.quad_mode {
            QuadBlockMode::SecondOrder => {
                specs.push(ConeSpec::SecondOrder(1 + 2 * (n + n * n)));
                row_count += 1 + 2 * (n + n * n);
            }
            QuadBlockMode::FullPsd => {
                specs.push(ConeSpec::PositiveSemidefinite(2 * quad_complex_side));
                row_count += cones::svec_len(2 * quad_complex_side);
            }
        }
        specs.push(ConeSpec::PositiveSemidefinite(2 * n));
        row_count += cones::svec_len(2 * n);
        specs.push(ConeSpec::PositiveSemidefinite(2 * n));
        row_count += cones::svec_len(2 * n);
    }
    let cones_set = ConeSet::new(specs)?;
    debug_assert_eq!(cones_set.total_len(), row_count);

    let mut g = SparseMatrix::zeros(row_count, nvars);
    let mut h = Array1::<f64>::zeros(row_count);

    // Power budget: Σ_k Tr W_k ≤ budget.
    for user in 0..kk {
        for p in 0..n {
            g.push(0, layout.diag(user, p), 1.0);
        }
    }
    h[0] = problem.power_budget;

    // ν_k ≥ 0.
    for user in 0..kk {
        g.push(1 + kk + user, layout.nu(user), -1.0);
    }

    for (cu, user) in problem.users.iter().enumerate() {
        let hch = &problem.channels.nominal[cu];
        let sd = user.sigma_delta;
        let eps = user.epsilon();
        let sqrt2eps = (2.0 * eps).sqrt();

        // Scalar surrogate row, rearranged to
        //   −h়ᵀW̄h̄* − σ_Δ²TrW̄ + √(2ε)μ + εν ≤ −σ_c².
        let scalar_row = 1 + cu;
        g.push(scalar_row, layout.mu(cu), sqrt2eps);
        g.push(scalar_row, layout.nu(cu), eps);
        h[scalar_row] = -problem.noise_var;

        let block_base = per_user_offsets[cu];
        let quad_rows_len = match problem.quad_mode {
            QuadBlockMode::SecondOrder => 1 + 2 * (n + n * n),
            QuadBlockMode::FullPsd => cones::svec_len(2 * quad_complex_side),
        };
        let psd_w_base = block_base + quad_rows_len;
        let psd_nu_base = psd_w_base + cones::svec_len(2 * n);

        // Norm block tip: the packed vector starts at μ_k in both encodings.
        match problem.quad_mode {
            QuadBlockMode::SecondOrder => {
                g.push(block_base, layout.mu(cu), -1.0);
            }
            QuadBlockMode::FullPsd => {
                // μ_k sits on the whole diagonal of the arrow block.
                let side = 2 * quad_complex_side;
                let eye = Array2::<Complex64>::eye(quad_complex_side);
                let esv = svec(&embed_hermitian(&eye));
                for i in 0..cones::svec_len(side) {
                    if esv[i] != 0.0 {
                        g.push(block_base + i, layout.mu(cu), -esv[i]);
                    }
                }
            }
        }

        // ν_k I on the second PSD block.
        {
            let eye = Array2::<Complex64>::eye(n);
            let esv = svec(&embed_hermitian(&eye));
            for i in 0..esv.len() {
                if esv[i] != 0.0 {
                    g.push(psd_nu_base + i, layout.nu(cu), -esv[i]);
                }
            }
        }

        for var in 0..nvars {
            let (owner, kind) = layout.kind(var);
            let entries = dw_entries(kind);
            if entries.is_empty() {
                continue;
            }
            // Coefficient of W_owner inside W̄_k.
            let t = if owner == cu { 1.0 / user.gamma } else { -1.0 };

            // Scalar surrogate row.
            let hquad = quad_form_derivative(&entries, hch);
            let tr = trace_derivative(&entries);
            let coeff = -t * hquad - sd * sd * t * tr;
            if coeff != 0.0 {
                g.push(scalar_row, var, coeff);
            }

            // Norm block: ρ = [√2·b; vec(A)] with b = σ_Δ W̄ h*, A = σ_Δ² W̄.
            let mut drho: Vec<(usize, Complex64)> = Vec::with_capacity(2 + entries.len());
            for &(p, qq, val) in &entries {
                // d(b_p) = σ_Δ t · val · h_qq*, scaled by √2 inside ρ.
                let db = sd * t * val * hch[qq].conj() * 2.0_f64.sqrt();
                if db.norm_sqr() > 0.0 {
                    drho.push((p, db));
                }
                // d(A[p, qq]) at vec position N + qq·N + p.
                let da = sd * sd * t * val;
                if da.norm_sqr() > 0.0 {
                    drho.push((n + qq * n + p, da));
                }
            }
            match problem.quad_mode {
                QuadBlockMode::SecondOrder => {
                    // Rows: [μ; Re ρ; Im ρ].
                    let part = n + n * n;
                    for &(i, v) in &drho {
                        if v.re != 0.0 {
                            g.push(block_base + 1 + i, var, -v.re);
                        }
                        if v.im != 0.0 {
                            g.push(block_base + 1 + part + i, var, -v.im);
                        }
                    }
                }
                QuadBlockMode::FullPsd => {
                    let mut dq =
                        Array2::<Complex64>::zeros((quad_complex_side, quad_complex_side));
                    for &(i, v) in &drho {
                        dq[[1 + i, 0]] = v;
                        dq[[0, 1 + i]] = v.conj();
                    }
                    let esv = svec(&embed_hermitian(&dq));
                    for i in 0..esv.len() {
                        if esv[i] != 0.0 {
                            g.push(block_base + i, var, -esv[i]);
                        }
                    }
                }
            }

            // PSD block E(W_k) (only this user's own W variables appear).
            if owner == cu {
                let mut dw = Array2::<Complex64>::zeros((n, n));
                for &(p, qq, val) in &entries {
                    dw[[p, qq]] += val;
                }
                let esv = svec(&embed_hermitian(&dw));
                for i in 0..esv.len() {
                    if esv[i] != 0.0 {
                        g.push(psd_w_base + i, var, -esv[i]);
                    }
                }
            }

            // PSD block E(ν_k I + A_k): A depends on every user's W.
            {
                let mut da = Array2::<Complex64>::zeros((n, n));
                for &(p, qq, val) in &entries {
                    da[[p, qq]] += sd * sd * t * val;
                }
                let esv = svec(&embed_hermitian(&da));
                for i in 0..esv.len() {
                    if esv[i] != 0.0 {
                        g.push(psd_nu_base + i, var, -esv[i]);
                    }
                }
            }
        }
    }
    g.finalize();

    let conic = ConicProblem { q, g, h, cones: cones_set };
    conic.validate()?;
    Ok(AssembledDesign { conic, layout })
}

/// Outcome of one design solve in matrix form.
#[derive(Clone, Debug)]
pub struct BeamformingDesign {
    pub status: SolveStatus,
    /// Array power toward the look direction at the solution.
    pub objective: f64,
    pub w_blocks: Vec<Array2<Complex64>>,
    pub nu: Vec<f64>,
    pub mu: Vec<f64>,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

/// Default solver settings for design runs.
pub fn design_settings() -> SolverSettings {
    SolverSettings {
        max_iterations: 200,
        tol_feas: 1e-8,
        tol_gap_abs: 1e-7,
        tol_gap_rel: 1e-7,
        ..SolverSettings::default()
    }
}

/// Assembles and solves one design instance.
pub fn solve_design(problem: &DesignProblem, settings: &SolverSettings) -> Result<BeamformingDesign> {
    let asm = assemble(problem)?;
    let sol = solver::solve(&asm.conic, settings)?;
    let solved = matches!(sol.status, SolveStatus::Optimal | SolveStatus::MaxIterations);
    let (w_blocks, nu, mu) = if solved {
        asm.decode(sol.x.as_slice().unwrap())
    } else {
        let n = problem.n_antennas();
        (
            vec![Array2::<Complex64>::zeros((n, n)); problem.n_users()],
            vec![0.0; problem.n_users()],
            vec![0.0; problem.n_users()],
        )
    };
    Ok(BeamformingDesign {
        status: sol.status,
        objective: if solved { -sol.primal_objective } else { f64::NAN },
        w_blocks,
        nu,
        mu,
        gap: sol.gap,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        iterations: sol.iterations,
    })
}

/// Constraint margins of a matrix solution, measured on the original
/// (un-lowered) problem data.
#[derive(Clone, Copy, Debug)]
pub struct DesignCheck {
    /// Σ_k Tr W_k.
    pub power: f64,
    /// min_k λ_min(W_k) / max(λ_max(W_k), tiny): ≥ −tol for PSD blocks.
    pub worst_eig_ratio: f64,
    /// min_k (U_k − σ_k²): ≥ −tol when every surrogate constraint holds.
    pub worst_margin: f64,
    pub ok: bool,
}

/// Evaluates power, PSD-ness, and the surrogate outage constraints at a
/// matrix solution.
pub fn check_design(
    problem: &DesignProblem,
    w_blocks: &[Array2<Complex64>],
    tol: f64,
) -> Result<DesignCheck> {
    problem.validate()?;
    if w_blocks.len() != problem.n_users() {
        return Err(Error::Dimension("one W block per user required".into()));
    }
    let mut power = 0.0;
    let mut worst_eig = f64::INFINITY;
    for w in w_blocks {
        let evals = hermitian_eigvals(w);
        let top = evals[0].max(1e-300);
        worst_eig = worst_eig.min(evals[evals.len() - 1] / top);
        power += (0..w.nrows()).map(|i| w[[i, i]].re).sum::<f64>();
    }
    let mut worst_margin = f64::INFINITY;
    for (k, user) in problem.users.iter().enumerate() {
        let data = crate::bernstein::build_bernstein(
            w_blocks,
            k,
            user,
            &problem.channels.nominal[k],
            problem.noise_var,
        )?;
        worst_margin = worst_margin.min(crate::bernstein::u_bound(&data) - data.sigma_sq);
    }
    let ok = power <= problem.power_budget + tol
        && worst_eig >= -tol
        && worst_margin >= -tol;
    Ok(DesignCheck { power, worst_eig_ratio: worst_eig, worst_margin, ok })
}

/// True iff the design solves to optimality and the matrix solution passes
/// the original-constraint check.
pub fn feasibility_probe(problem: &DesignProblem, settings: &SolverSettings) -> Result<bool> {
    let design = solve_design(problem, settings)?;
    if design.status != SolveStatus::Optimal {
        return Ok(false);
    }
    Ok(check_design(problem, &design.w_blocks, 1e-6)?.ok)
}
