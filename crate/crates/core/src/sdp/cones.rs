//! Symmetric-cone toolkit: products of nonnegative, second-order, and real
//! symmetric PSD cones, plus the Nesterov-Todd scalings and Jordan-algebra
//! operations the interior-point iteration runs on.
//!
//! PSD blocks are stored in scaled vector form: column-major lower triangle
//! with off-diagonal entries multiplied by √2, so the Euclidean inner product
//! of two stored blocks equals the trace inner product of the matrices.

use crate::linalg::{cholesky, jacobi_eigh, lower_inverse};
use crate::{Error, Result};
use ndarray::{Array1, Array2};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// One factor of the cone product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeSpec {
    /// Componentwise nonnegative block of the given length.
    NonNegative(usize),
    /// Second-order cone { (t, u) : t ≥ ‖u‖ } of the given total length ≥ 2.
    SecondOrder(usize),
    /// PSD cone of symmetric d×d matrices, stored as a length d(d+1)/2 block.
    PositiveSemidefinite(usize),
}

impl ConeSpec {
    pub fn vec_len(&self) -> usize {
        match *self {
            ConeSpec::NonNegative(n) => n,
            ConeSpec::SecondOrder(n) => n,
            ConeSpec::PositiveSemidefinite(d) => svec_len(d),
        }
    }

    /// Barrier degree: n for the orthant, 1 per second-order cone, d per PSD
    /// cone. With s = z = identity, ⟨s, z⟩ equals the degree.
    pub fn degree(&self) -> usize {
        match *self {
            ConeSpec::NonNegative(n) => n,
            ConeSpec::SecondOrder(_) => 1,
            ConeSpec::PositiveSemidefinite(d) => d,
        }
    }
}

/// Ordered cone product with precomputed block offsets.
#[derive(Clone, Debug)]
pub struct ConeSet {
    specs: Vec<ConeSpec>,
    offsets: Vec<usize>,
    total: usize,
}

pub fn svec_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Packs a symmetric matrix into scaled lower-triangle order.
pub fn svec(m: &Array2<f64>) -> Array1<f64> {
    let d = m.nrows();
    assert_eq!(d, m.ncols(), "svec needs a square matrix");
    let mut v = Array1::<f64>::zeros(svec_len(d));
    let mut k = 0;
    for j in 0..d {
        for i in j..d {
            v[k] = if i == j { m[[i, i]] } else { SQRT2 * 0.5 * (m[[i, j]] + m[[j, i]]) };
            k += 1;
        }
    }
    v
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64], d: usize) -> Array2<f64> {
    assert_eq!(v.len(), svec_len(d), "packed length must match the matrix side");
    let mut m = Array2::<f64>::zeros((d, d));
    let mut k = 0;
    for j in 0..d {
        for i in j..d {
            if i == j {
                m[[i, i]] = v[k];
            } else {
                let x = v[k] / SQRT2;
                m[[i, j]] = x;
                m[[j, i]] = x;
            }
            k += 1;
        }
    }
    m
}

/// Position of matrix entry (i, j), i ≥ j, inside the packed block.
pub fn svec_index(d: usize, i: usize, j: usize) -> usize {
    assert!(i >= j && i < d, "need d > i >= j");
    j * d - (j * j - j) / 2 + (i - j)
}

impl ConeSet {
    pub fn new(specs: Vec<ConeSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Config("cone product must have at least one block".into()));
        }
        for s in &specs {
            let bad = match *s {
                ConeSpec::NonNegative(n) => n == 0,
                ConeSpec::SecondOrder(n) => n < 2,
                ConeSpec::PositiveSemidefinite(d) => d == 0,
            };
            if bad {
                return Err(Error::Config(format!("degenerate cone block {s:?}")));
            }
        }
        let mut offsets = Vec::with_capacity(specs.len());
        let mut total = 0;
        for s in &specs {
            offsets.push(total);
            total += s.vec_len();
        }
        Ok(Self { specs, offsets, total })
    }

    pub fn total_len(&self) -> usize {
        self.total
    }

    pub fn n_blocks(&self) -> usize {
        self.specs.len()
    }

    pub fn spec(&self, b: usize) -> ConeSpec {
        self.specs[b]
    }

    pub fn offset(&self, b: usize) -> usize {
        self.offsets[b]
    }

    pub fn block_range(&self, b: usize) -> std::ops::Range<usize> {
        let lo = self.offsets[b];
        lo..lo + self.specs[b].vec_len()
    }

    pub fn degree(&self) -> usize {
        self.specs.iter().map(|s| s.degree()).sum()
    }

    /// Identity element of the product algebra.
    pub fn identity(&self) -> Array1<f64> {
        let mut e = Array1::<f64>::zeros(self.total);
        for (b, spec) in self.specs.iter().enumerate() {
            let lo = self.offsets[b];
            match *spec {
                ConeSpec::NonNegative(n) => {
                    for i in 0..n {
                        e[lo + i] = 1.0;
                    }
                }
                ConeSpec::SecondOrder(_) => e[lo] = 1.0,
                ConeSpec::PositiveSemidefinite(d) => {
                    for i in 0..d {
                        e[lo + svec_index(d, i, i)] = 1.0;
                    }
                }
            }
        }
        e
    }

    /// Jordan product u∘v blockwise: componentwise product on the orthant,
    /// the arrow product on second-order blocks, (UV + VU)/2 on PSD blocks.
    pub fn jordan_product(&self, u: &[f64], v: &[f64]) -> Array1<f64> {
        assert_eq!(u.len(), self.total);
        assert_eq!(v.len(), self.total);
        let mut out = Array1::<f64>::zeros(self.total);
        for (b, spec) in self.specs.iter().enumerate() {
            let lo = self.offsets[b];
            match *spec {
                ConeSpec::NonNegative(n) => {
                    for i in 0..n {
                        out[lo + i] = u[lo + i] * v[lo + i];
                    }
                }
                ConeSpec::SecondOrder(n) => {
                    let (ub, vb) = (&u[lo..lo + n], &v[lo..lo + n]);
                    let mut dot = 0.0;
                    for i in 0..n {
                        dot += ub[i] * vb[i];
                    }
                    out[lo] = dot;
                    for i in 1..n {
                        out[lo + i] = ub[0] * vb[i] + vb[0] * ub[i];
                    }
                }
                ConeSpec::PositiveSemidefinite(d) => {
                    let um = smat(&u[lo..lo + svec_len(d)], d);
                    let vm = smat(&v[lo..lo + svec_len(d)], d);
                    let p = um.dot(&vm) + vm.dot(&um);
                    let sym = p.mapv(|x| 0.5 * x);
                    let sv = svec(&sym);
                    out.slice_mut(ndarray::s![lo..lo + sv.len()]).assign(&sv);
                }
            }
        }
        out
    }

    /// Largest α ≥ 0 with v + α·dv still in the cone (∞ when unbounded).
    /// Requires v strictly interior.
    pub fn max_step(&self, v: &[f64], dv: &[f64]) -> Result<f64> {
        assert_eq!(v.len(), self.total);
        assert_eq!(dv.len(), self.total);
        let mut alpha = f64::INFINITY;
        for (b, spec) in self.specs.iter().enumerate() {
            let lo = self.offsets[b];
            let step = match *spec {
                ConeSpec::NonNegative(n) => {
                    let mut a = f64::INFINITY;
                    for i in 0..n {
                        if dv[lo + i] < 0.0 {
                            a = a.min(-v[lo + i] / dv[lo + i]);
                        }
                    }
                    a
                }
                ConeSpec::SecondOrder(n) => {
                    soc_max_step(&v[lo..lo + n], &dv[lo..lo + n])
                }
                ConeSpec::PositiveSemidefinite(d) => {
                    psd_max_step(&v[lo..lo + svec_len(d)], &dv[lo..lo + svec_len(d)], d)?
                }
            };
            alpha = alpha.min(step);
        }
        Ok(alpha)
    }
}

/// First positive root of the boundary polynomial for a second-order block.
fn soc_max_step(v: &[f64], dv: &[f64]) -> f64 {
    let n = v.len();
    let mut vv = 0.0;
    let mut vd = 0.0;
    let mut dd = 0.0;
    for i in 1..n {
        vv += v[i] * v[i];
        vd += v[i] * dv[i];
        dd += dv[i] * dv[i];
    }
    // f(α) = (v₀+αd₀)² − ‖v̄+αd̄‖² starts positive; the block leaves the cone
    // exactly at f's first positive root (the tip entry cannot cross zero
    // while f > 0).
    let a = dv[0] * dv[0] - dd;
    let b = 2.0 * (v[0] * dv[0] - vd);
    let c = v[0] * v[0] - vv;
    smallest_positive_root(a, b, c)
}

/// Smallest positive root of aα² + bα + c with c > 0, or ∞ when none exists.
fn smallest_positive_root(a: f64, b: f64, c: f64) -> f64 {
    if a == 0.0 {
        return if b < 0.0 { -c / b } else { f64::INFINITY };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        // c > 0 and a < 0 would force real roots, so this branch has a > 0
        // and the polynomial stays positive.
        return f64::INFINITY;
    }
    let sq = disc.sqrt();
    let qq = -0.5 * (b + b.signum() * sq);
    let (r1, r2) = if qq == 0.0 { (0.0, 0.0) } else { (qq / a, c / qq) };
    let mut best = f64::INFINITY;
    if r1 > 0.0 {
        best = best.min(r1);
    }
    if r2 > 0.0 {
        best = best.min(r2);
    }
    best
}

/// Max step for a PSD block: S + αD ⪰ 0 up to α = −1/λ_min(L⁻¹ D L⁻ᵀ).
fn psd_max_step(v: &[f64], dv: &[f64], d: usize) -> Result<f64> {
    let s = smat(v, d);
    let l = cholesky(&s)
        .ok_or_else(|| Error::Numerical("step computation left the PSD cone".into()))?;
    let dm = smat(dv, d);
    let linv = lower_inverse(&l);
    let t = linv.dot(&dm).dot(&linv.t());
    let (evals, _) = jacobi_eigh(&t);
    let min = evals[evals.len() - 1];
    Ok(if min >= 0.0 { f64::INFINITY } else { -1.0 / min })
}

/// Nesterov-Todd scaling blocks for one (s, z) pair of interior points.
enum ScalingBlock {
    NonNegative {
        /// w with W = diag(w), w_i = √(s_i/z_i).
        w: Vec<f64>,
    },
    SecondOrder {
        eta: f64,
        /// Hyperbolic-unit vector defining W = η·W̄(w̄).
        wbar: Vec<f64>,
    },
    Psd {
        /// R with Rᵀ Z R = R⁻¹ S R⁻ᵀ = diag(λ).
        r: Array2<f64>,
        rinv: Array2<f64>,
        /// Inverse (R Rᵀ)⁻¹ of the symmetric NT point.
        winv: Array2<f64>,
    },
}

pub struct Scaling {
    blocks: Vec<ScalingBlock>,
    lambda: Array1<f64>,
}

impl Scaling {
    /// Computes the NT scaling for strictly interior s, z.
    pub fn compute(cones: &ConeSet, s: &[f64], z: &[f64]) -> Result<Self> {
        assert_eq!(s.len(), cones.total_len());
        assert_eq!(z.len(), cones.total_len());
        let mut blocks = Vec::with_capacity(cones.n_blocks());
        let mut lambda = Array1::<f64>::zeros(cones.total_len());
        for b in 0..cones.n_blocks() {
            let lo = cones.offset(b);
            match cones.spec(b) {
                ConeSpec::NonNegative(n) => {
                    let mut w = vec![0.0; n];
                    for i in 0..n {
                        let (si, zi) = (s[lo + i], z[lo + i]);
                        if !(si > 0.0 && zi > 0.0) {
                            return Err(Error::Numerical("orthant point not interior".into()));
                        }
                        w[i] = (si / zi).sqrt();
                        lambda[lo + i] = (si * zi).sqrt();
                    }
                    blocks.push(ScalingBlock::NonNegative { w });
                }
                ConeSpec::SecondOrder(n) => {
                    let (sb, zb) = (&s[lo..lo + n], &z[lo..lo + n]);
                    let sres = soc_residual(sb);
                    let zres = soc_residual(zb);
                    if !(sres > 0.0 && zres > 0.0 && sb[0] > 0.0 && zb[0] > 0.0) {
                        return Err(Error::Numerical("second-order point not interior".into()));
                    }
                    let snorm = sres.sqrt();
                    let znorm = zres.sqrt();
                    let mut plain = 0.0;
                    for i in 0..n {
                        plain += (sb[i] / snorm) * (zb[i] / znorm);
                    }
                    let gamma = ((1.0 + plain) * 0.5).sqrt();
                    let mut wbar = vec![0.0; n];
                    for i in 0..n {
                        let sn = sb[i] / snorm;
                        let zn = zb[i] / znorm;
                        let jz = if i == 0 { zn } else { -zn };
                        wbar[i] = (sn + jz) / (2.0 * gamma);
                    }
                    let eta = (snorm / znorm).sqrt();
                    // λ = W z = η W̄ z.
                    let mut lam = vec![0.0; n];
                    soc_wbar_apply(&wbar, zb, &mut lam, false);
                    for i in 0..n {
                        lambda[lo + i] = eta * lam[i];
                    }
                    blocks.push(ScalingBlock::SecondOrder { eta, wbar });
                }
                ConeSpec::PositiveSemidefinite(d) => {
                    let sm = smat(&s[lo..lo + svec_len(d)], d);
                    let zm = smat(&z[lo..lo + svec_len(d)], d);
                    let ls = cholesky(&sm)
                        .ok_or_else(|| Error::Numerical("PSD point not interior".into()))?;
                    let inner = ls.t().dot(&zm).dot(&ls);
                    let (evals, q) = jacobi_eigh(&inner);
                    if evals[evals.len() - 1] <= 0.0 {
                        return Err(Error::Numerical("PSD dual point not interior".into()));
                    }
                    // R = L·Q·D^{-1/4}, R⁻¹ = D^{1/4}·Qᵀ·L⁻¹; then
                    // Rᵀ Z R = R⁻¹ S R⁻ᵀ = D^{1/2} =: diag(λ).
                    let mut r = ls.dot(&q);
                    for j in 0..d {
                        let scale = evals[j].powf(-0.25);
                        for i in 0..d {
                            r[[i, j]] *= scale;
                        }
                    }
                    let linv = lower_inverse(&ls);
                    let mut rinv = q.t().dot(&linv);
                    for i in 0..d {
                        let scale = evals[i].powf(0.25);
                        for j in 0..d {
                            rinv[[i, j]] *= scale;
                        }
                    }
                    let winv = rinv.t().dot(&rinv);
                    for i in 0..d {
                        lambda[lo + svec_index(d, i, i)] = evals[i].sqrt();
                    }
                    blocks.push(ScalingBlock::Psd { r, rinv, winv });
                }
            }
        }
        Ok(Self { blocks, lambda })
    }

    /// Scaled point λ = W z = W⁻ᵀ s.
    pub fn lambda(&self) -> &Array1<f64> {
        &self.lambda
    }

    /// W v (maps dual-side vectors into the scaled frame).
    pub fn apply_w(&self, cones: &ConeSet, v: &[f64]) -> Array1<f64> {
        self.apply(cones, v, Op::W)
    }

    /// Wᵀ v.
    pub fn apply_wt(&self, cones: &ConeSet, v: &[f64]) -> Array1<f64> {
        self.apply(cones, v, Op::Wt)
    }

    /// W⁻ᵀ v (maps primal-side vectors into the scaled frame).
    pub fn apply_winv_t(&self, cones: &ConeSet, v: &[f64]) -> Array1<f64> {
        self.apply(cones, v, Op::WinvT)
    }

    /// (WᵀW)⁻¹ v.
    pub fn apply_h_inv(&self, cones: &ConeSet, v: &[f64]) -> Array1<f64> {
        self.apply(cones, v, Op::Hinv)
    }

    fn apply(&self, cones: &ConeSet, v: &[f64], op: Op) -> Array1<f64> {
        assert_eq!(v.len(), cones.total_len());
        let mut out = Array1::<f64>::zeros(v.len());
        for b in 0..cones.n_blocks() {
            let lo = cones.offset(b);
            let len = cones.spec(b).vec_len();
            let vb = &v[lo..lo + len];
            let mut ob = vec![0.0; len];
            self.apply_block(b, cones, vb, &mut ob, op);
            for i in 0..len {
                out[lo + i] = ob[i];
            }
        }
        out
    }

    fn apply_block(&self, b: usize, cones: &ConeSet, v: &[f64], out: &mut [f64], op: Op) {
        match (&self.blocks[b], cones.spec(b)) {
            (ScalingBlock::NonNegative { w }, _) => {
                for i in 0..v.len() {
                    out[i] = match op {
                        Op::W | Op::Wt => w[i] * v[i],
                        Op::WinvT => v[i] / w[i],
                        Op::Hinv => v[i] / (w[i] * w[i]),
                    };
                }
            }
            (ScalingBlock::SecondOrder { eta, wbar }, _) => match op {
                Op::W | Op::Wt => {
                    soc_wbar_apply(wbar, v, out, false);
                    out.iter_mut().for_each(|x| *x *= *eta);
                }
                Op::WinvT => {
                    soc_wbar_apply(wbar, v, out, true);
                    out.iter_mut().for_each(|x| *x /= *eta);
                }
                Op::Hinv => {
                    // H⁻¹ = η⁻²(2(Jw̄)(Jw̄)ᵀ − J).
                    let n = v.len();
                    let mut jdot = wbar[0] * v[0];
                    for i in 1..n {
                        jdot -= wbar[i] * v[i];
                    }
                    out[0] = 2.0 * jdot * wbar[0] - v[0];
                    for i in 1..n {
                        out[i] = -2.0 * jdot * wbar[i] + v[i];
                    }
                    let e2 = eta * eta;
                    out.iter_mut().for_each(|x| *x /= e2);
                }
            },
            (ScalingBlock::Psd { r, rinv, winv, .. }, ConeSpec::PositiveSemidefinite(d)) => {
                let m = smat(v, d);
                let res = match op {
                    Op::W => r.t().dot(&m).dot(r),
                    Op::Wt => r.dot(&m).dot(&r.t()),
                    Op::WinvT => rinv.dot(&m).dot(&rinv.t()),
                    Op::Hinv => winv.dot(&m).dot(winv),
                };
                let sv = svec(&res);
                out.copy_from_slice(sv.as_slice().unwrap());
            }
            _ => unreachable!("scaling blocks track the cone layout"),
        }
    }

    /// Solves λ∘x = d blockwise.
    pub fn jordan_div_lambda(&self, cones: &ConeSet, d: &[f64]) -> Array1<f64> {
        assert_eq!(d.len(), cones.total_len());
        let lam = &self.lambda;
        let mut out = Array1::<f64>::zeros(d.len());
        for b in 0..cones.n_blocks() {
            let lo = cones.offset(b);
            match cones.spec(b) {
                ConeSpec::NonNegative(n) => {
                    for i in 0..n {
                        out[lo + i] = d[lo + i] / lam[lo + i];
                    }
                }
                ConeSpec::SecondOrder(n) => {
                    let l0 = lam[lo];
                    let mut lbar_sq = 0.0;
                    let mut lbar_dot_d = 0.0;
                    for i in 1..n {
                        lbar_sq += lam[lo + i] * lam[lo + i];
                        lbar_dot_d += lam[lo + i] * d[lo + i];
                    }
                    let det = l0 * l0 - lbar_sq;
                    let x0 = (l0 * d[lo] - lbar_dot_d) / det;
                    out[lo] = x0;
                    for i in 1..n {
                        out[lo + i] = (d[lo + i] - x0 * lam[lo + i]) / l0;
                    }
                }
                ConeSpec::PositiveSemidefinite(side) => {
                    // λ is diagonal in its own frame: X_ij = 2 D_ij/(λ_i+λ_j).
                    let dm = smat(&d[lo..lo + svec_len(side)], side);
                    let mut x = Array2::<f64>::zeros((side, side));
                    for i in 0..side {
                        let li = lam[lo + svec_index(side, i, i)];
                        for j in 0..side {
                            let lj = lam[lo + svec_index(side, j, j)];
                            x[[i, j]] = 2.0 * dm[[i, j]] / (li + lj);
                        }
                    }
                    let sv = svec(&x);
                    for i in 0..sv.len() {
                        out[lo + i] = sv[i];
                    }
                }
            }
        }
        out
    }

    /// (WᵀW)⁻¹ applied to a sparse block vector, written into a dense buffer.
    /// `entries` holds (local index, value) pairs inside block `b`.
    pub fn hinv_apply_block_sparse(
        &self,
        b: usize,
        cones: &ConeSet,
        entries: &[(usize, f64)],
        out: &mut [f64],
    ) {
        let len = cones.spec(b).vec_len();
        assert_eq!(out.len(), len);
        out.iter_mut().for_each(|x| *x = 0.0);
        match (&self.blocks[b], cones.spec(b)) {
            (ScalingBlock::NonNegative { w }, _) => {
                for &(i, v) in entries {
                    out[i] = v / (w[i] * w[i]);
                }
            }
            (ScalingBlock::SecondOrder { eta, wbar }, _) => {
                let mut jdot = 0.0;
                for &(i, v) in entries {
                    jdot += if i == 0 { wbar[0] * v } else { -wbar[i] * v };
                }
                let e2 = eta * eta;
                out[0] = 2.0 * jdot * wbar[0] / e2;
                for i in 1..len {
                    out[i] = -2.0 * jdot * wbar[i] / e2;
                }
                for &(i, v) in entries {
                    if i == 0 {
                        out[0] -= v / e2;
                    } else {
                        out[i] += v / e2;
                    }
                }
            }
            (ScalingBlock::Psd { winv, .. }, ConeSpec::PositiveSemidefinite(d)) => {
                // W⁻¹ mat(v) W⁻¹ expanded entry by entry: an (i, j) entry adds
                // rank-one couplings of W⁻¹ columns i and j.
                let mut acc = Array2::<f64>::zeros((d, d));
                for &(idx, val) in entries {
                    let (i, j) = svec_unindex(d, idx);
                    if i == j {
                        for p in 0..d {
                            let wpi = winv[[p, i]] * val;
                            for q in 0..d {
                                acc[[p, q]] += wpi * winv[[j, q]];
                            }
                        }
                    } else {
                        let half = val / SQRT2;
                        for p in 0..d {
                            let wpi = winv[[p, i]] * half;
                            let wpj = winv[[p, j]] * half;
                            for q in 0..d {
                                acc[[p, q]] += wpi * winv[[j, q]] + wpj * winv[[i, q]];
                            }
                        }
                    }
                }
                let sv = svec(&acc);
                out.copy_from_slice(sv.as_slice().unwrap());
            }
            _ => unreachable!("scaling blocks track the cone layout"),
        }
    }
}

#[derive(Clone, Copy)]
enum Op {
    W,
    Wt,
    WinvT,
    Hinv,
}

/// Matrix entry (i, j), i ≥ j, for a packed index.
fn svec_unindex(d: usize, idx: usize) -> (usize, usize) {
    let mut j = 0;
    let mut base = 0;
    loop {
        let col_len = d - j;
        if idx < base + col_len {
            return (j + (idx - base), j);
        }
        base += col_len;
        j += 1;
    }
}

/// v₀² − ‖v̄‖² for a second-order block.
fn soc_residual(v: &[f64]) -> f64 {
    let mut r = v[0] * v[0];
    for i in 1..v.len() {
        r -= v[i] * v[i];
    }
    r
}

/// W̄ v, or W̄⁻¹ v when `invert` (the inverse flips the sign of w̄₁).
fn soc_wbar_apply(wbar: &[f64], v: &[f64], out: &mut [f64], invert: bool) {
    let n = v.len();
    let sgn = if invert { -1.0 } else { 1.0 };
    let w0 = wbar[0];
    let mut dot = 0.0;
    for i in 1..n {
        dot += wbar[i] * v[i];
    }
    out[0] = w0 * v[0] + sgn * dot;
    let coef = sgn * v[0] + dot / (1.0 + w0);
    for i in 1..n {
        out[i] = v[i] + coef * wbar[i];
    }
}
