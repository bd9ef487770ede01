//! Spectrum of the transfer operator about a torus, invariant vector bundles
//! and block diagonalisation of the map.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polyalg::{grid_angles, grid_size, Conjugation, FourierMatrix, PowerFourierMap, Series, C64};

/// Linear part `A(theta) = D_1 F(K(theta), theta)` and the rotation.
#[derive(Clone, Debug)]
pub struct LinearBundleProblem {
    pub a: FourierMatrix,
    pub omega: f64,
}

impl LinearBundleProblem {
    pub fn from_map(f: &PowerFourierMap) -> Self {
        LinearBundleProblem {
            a: FourierMatrix {
                ell: f.ell,
                coeffs: f.linear_part(),
            },
            omega: f.omega_f,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn ell(&self) -> usize {
        self.a.ell
    }
}

/// Eigen-decomposition of the discretised transfer operator. Vectors are laid
/// out as `v[(k + ell) * n + d]`.
#[derive(Clone, Debug)]
pub struct TransferEigen {
    pub values: Vec<C64>,
    /// Columns solve `lambda w_k = e^{-i k omega} sum_j A_{k-j} w_j`.
    pub right: DMatrix<C64>,
    /// Rows solve `sum_j u_j A_{k-j} e^{i j omega} = lambda u_k`, normalised
    /// so that `sum_k u_{-k} w_k` is the identity pairing.
    pub left: DMatrix<C64>,
    pub n: usize,
    pub ell: usize,
}

fn right_operator(prob: &LinearBundleProblem) -> DMatrix<C64> {
    let n = prob.dim();
    let ell = prob.ell();
    let nh = 2 * ell + 1;
    let mut m = DMatrix::zeros(n * nh, n * nh);
    for kr in 0..nh {
        let k = kr as i64 - ell as i64;
        let rot = C64::from_polar(1.0, -(k as f64) * prob.omega);
        for jc in 0..nh {
            let j = jc as i64 - ell as i64;
            let blk = prob.a.harmonic(k - j) * rot;
            m.view_mut((kr * n, jc * n), (n, n)).copy_from(&blk);
        }
    }
    m
}

fn left_operator(prob: &LinearBundleProblem) -> DMatrix<C64> {
    // u -> u M with (u M)_k = sum_j u_j e^{i j omega} A_{k-j}
    let n = prob.dim();
    let ell = prob.ell();
    let nh = 2 * ell + 1;
    let mut m = DMatrix::zeros(n * nh, n * nh);
    for jr in 0..nh {
        let j = jr as i64 - ell as i64;
        let rot = C64::from_polar(1.0, j as f64 * prob.omega);
        for kc in 0..nh {
            let k = kc as i64 - ell as i64;
            let blk = prob.a.harmonic(k - j) * rot;
            m.view_mut((jr * n, kc * n), (n, n)).copy_from(&blk);
        }
    }
    m
}

/// Eigenvectors of an upper-triangular matrix by back substitution.
fn triangular_eigenvectors(t: &DMatrix<C64>) -> DMatrix<C64> {
    let size = t.nrows();
    let scale = t.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let tiny = f64::EPSILON * scale;
    let mut x = DMatrix::zeros(size, size);
    for i in 0..size {
        let lam = t[(i, i)];
        x[(i, i)] = C64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut s = C64::new(0.0, 0.0);
            for l in j + 1..=i {
                s += t[(j, l)] * x[(l, i)];
            }
            let mut d = t[(j, j)] - lam;
            if d.norm() < tiny {
                d = C64::new(tiny, 0.0);
            }
            x[(j, i)] = -s / d;
        }
    }
    x
}

pub fn build_transfer_eigenproblem(prob: &LinearBundleProblem) -> Result<TransferEigen> {
    let n = prob.dim();
    let ell = prob.ell();
    let size = n * (2 * ell + 1);
    let m = right_operator(prob);
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenFailure("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let values: Vec<C64> = (0..size).map(|i| t[(i, i)]).collect();
    let mut right = q * triangular_eigenvectors(&t);
    for mut col in right.column_iter_mut() {
        let nrm = col.norm();
        col /= C64::new(nrm, 0.0);
    }
    let y = right
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::EigenFailure("eigenvector matrix is singular".into()))?;
    // left vectors: u_k = y_{-k}
    let nh = 2 * ell + 1;
    let mut left = DMatrix::zeros(size, size);
    for r in 0..size {
        for kb in 0..nh {
            for d in 0..n {
                left[(r, kb * n + d)] = y[(r, (nh - 1 - kb) * n + d)];
            }
        }
    }
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let lm = left_operator(prob);
    for (i, &lam) in values.iter().enumerate() {
        let w = right.column(i);
        let rr = (&m * w - w * lam).norm() / w.norm();
        let u = left.row(i);
        let rl = (u * &lm - u * lam).norm() / u.norm();
        if !(rr <= 1e-9 * scale && rl <= 1e-9 * scale) {
            return Err(Error::EigenFailure(format!(
                "eigenpair {i} residuals {rr:.2e} (right) {rl:.2e} (left)"
            )));
        }
    }
    Ok(TransferEigen {
        values,
        right,
        left,
        n,
        ell,
    })
}

/// Relative size below which a gap between sorted magnitudes is treated as
/// round-off and never separates clusters.
const MIN_RELATIVE_GAP: f64 = 1e-6;

/// Partition eigenvalue indices into clusters of nearby magnitude, each of a
/// size that is a multiple of `2 ell + 1`, using as many clusters as possible
/// between `ceil(n/2)` and `n`. Clusters come out with increasing magnitude.
pub fn cluster_eigenvalues(magnitudes: &[f64], n: usize, ell: usize) -> Result<Vec<Vec<usize>>> {
    let nh = 2 * ell + 1;
    if magnitudes.len() != n * nh {
        return Err(Error::DimensionMismatch(format!(
            "{} magnitudes for {} states and {} harmonics",
            magnitudes.len(),
            n,
            nh
        )));
    }
    let mut order: Vec<usize> = (0..magnitudes.len()).collect();
    order.sort_by(|&a, &b| magnitudes[a].total_cmp(&magnitudes[b]).then(a.cmp(&b)));
    let top = magnitudes.iter().fold(0.0_f64, |a, &b| a.max(b.abs())).max(f64::MIN_POSITIVE);
    let mut gaps: Vec<(f64, usize)> = (1..order.len())
        .map(|p| (magnitudes[order[p]] - magnitudes[order[p - 1]], p))
        .filter(|(g, _)| *g > MIN_RELATIVE_GAP * top)
        .collect();
    gaps.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for ncl in (n.div_ceil(2).max(1)..=n).rev() {
        if ncl - 1 > gaps.len() {
            continue;
        }
        let mut cuts: Vec<usize> = gaps[..ncl - 1].iter().map(|g| g.1).collect();
        cuts.sort_unstable();
        let mut bounds = vec![0];
        bounds.extend(cuts);
        bounds.push(order.len());
        if bounds.windows(2).all(|w| (w[1] - w[0]) % nh == 0) {
            return Ok(bounds.windows(2).map(|w| order[w[0]..w[1]].to_vec()).collect());
        }
    }
    Err(Error::ClusteringFailed(format!(
        "no clustering of {} eigenvalues into groups of multiples of {nh}",
        magnitudes.len()
    )))
}

fn smoothness_score(u: &[C64], n: usize, ell: usize) -> f64 {
    let nrm = u.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    (0..2 * ell + 1)
        .map(|kb| {
            let j = kb as i64 - ell as i64;
            let blk = u[kb * n..(kb + 1) * n].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            blk / nrm * 2f64.powi(j.unsigned_abs() as i32)
        })
        .sum()
}

/// Index inside `candidates` minimising `sum_j |u_j| 2^{|j|}`; ties go to the
/// smallest `|Im lambda|`, then to the smallest index.
pub fn select_representative(eig: &TransferEigen, candidates: &[usize]) -> usize {
    let score = |i: usize| {
        let row: Vec<C64> = eig.left.row(i).iter().copied().collect();
        smoothness_score(&row, eig.n, eig.ell)
    };
    let mut best = candidates[0];
    let mut best_score = score(best);
    for &c in &candidates[1..] {
        let s = score(c);
        let tie = (s - best_score).abs() <= 1e-12 * best_score.max(1.0);
        let better = if tie {
            let (a, b) = (eig.values[c].im.abs(), eig.values[best].im.abs());
            a < b - 1e-15 || ((a - b).abs() <= 1e-15 && c < best)
        } else {
            s < best_score
        };
        if better {
            best = c;
            best_score = s;
        }
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct Cluster {
    pub members: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub representative: usize,
    pub lambda: C64,
    pub is_pair: bool,
    /// Coordinates of this cluster in the block-diagonal frame.
    pub coords: Range<usize>,
}

#[derive(Clone, Debug)]
pub struct DichotomyDecomposition {
    pub eigenvalues: Vec<C64>,
    pub clusters: Vec<Cluster>,
    /// Diagonal of `Lambda`; pairs appear as `(lambda, conj lambda)`.
    pub lambda: Vec<C64>,
    /// Left frame, rows are bundle coordinates.
    pub u: FourierMatrix,
    /// Right frame, columns span the bundles.
    pub w: FourierMatrix,
    pub omega: f64,
    pub ell: usize,
    /// Conjugation partner of every frame coordinate.
    pub partner: Vec<usize>,
    pub frame_defect: f64,
    pub left_invariance: f64,
    pub right_invariance: f64,
}

impl DichotomyDecomposition {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Frame coordinates belonging to a set of clusters, in order.
    pub fn coords_of(&self, clusters: &[usize]) -> Vec<usize> {
        let mut c: Vec<usize> = clusters.iter().flat_map(|&i| self.clusters[i].coords.clone()).collect();
        c.sort_unstable();
        c
    }

    pub fn complement(&self, clusters: &[usize]) -> Vec<usize> {
        (0..self.clusters.len()).filter(|c| !clusters.contains(c)).collect()
    }

    pub fn conjugation(&self) -> Conjugation {
        Conjugation {
            inputs: self.partner.clone(),
            outputs: self.partner.clone(),
        }
    }

    /// Clusters ordered by the frequency of their representative, counting
    /// only oscillatory clusters; `mode(1)` is the slowest oscillation.
    pub fn mode(&self, number: usize, dt: f64) -> Option<usize> {
        let mut osc: Vec<(f64, usize)> = self
            .clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_pair)
            .map(|(i, c)| (c.lambda.arg() / dt, i))
            .collect();
        osc.sort_by(|a, b| a.0.total_cmp(&b.0));
        osc.get(number.checked_sub(1)?).map(|x| x.1)
    }
}

fn fourier_row(v: &[C64], n: usize, ell: usize) -> FourierMatrix {
    FourierMatrix {
        ell,
        coeffs: (0..2 * ell + 1)
            .map(|kb| DMatrix::from_row_slice(1, n, &v[kb * n..(kb + 1) * n]))
            .collect(),
    }
}

fn fourier_col(v: &[C64], n: usize, ell: usize) -> FourierMatrix {
    FourierMatrix {
        ell,
        coeffs: (0..2 * ell + 1)
            .map(|kb| DMatrix::from_column_slice(n, 1, &v[kb * n..(kb + 1) * n]))
            .collect(),
    }
}

pub fn assemble_bundles(
    prob: &LinearBundleProblem,
    eig: &TransferEigen,
    clusters: &[Vec<usize>],
) -> Result<DichotomyDecomposition> {
    let n = eig.n;
    let ell = eig.ell;
    let mgrid = grid_size(ell);
    let angles = grid_angles(mgrid);
    let mut rows: Vec<Vec<DMatrix<C64>>> = Vec::new(); // per coordinate, samples of 1 x n
    let mut cols: Vec<Vec<DMatrix<C64>>> = Vec::new();
    let mut lambda = Vec::new();
    let mut partner = Vec::new();
    let mut out_clusters = Vec::new();

    for members in clusters {
        let mags: Vec<f64> = members.iter().map(|&i| eig.values[i].norm()).collect();
        let alpha = mags.iter().copied().fold(f64::INFINITY, f64::min);
        let beta = mags.iter().copied().fold(0.0, f64::max);
        let multiplicity = members.len() / (2 * ell + 1);
        let mut rep = select_representative(eig, members);
        let mut lam = eig.values[rep];
        let is_pair = lam.im.abs() > 1e-8 * lam.norm();
        if multiplicity != if is_pair { 2 } else { 1 } {
            return Err(Error::ClusteringFailed(format!(
                "cluster of {} eigenvalues around |lambda| = {beta:.6} does not hold a single real or complex mode",
                members.len()
            )));
        }
        let u_row: Vec<C64> = eig.left.row(rep).iter().copied().collect();
        let w_col: Vec<C64> = eig.right.column(rep).iter().copied().collect();
        let mut u = fourier_row(&u_row, n, ell);
        let mut w = fourier_col(&w_col, n, ell);
        if is_pair && lam.im < 0.0 {
            u = u.conj_function();
            w = w.conj_function();
            lam = lam.conj();
            // report the conjugate partner as the representative when present
            if let Some(&p) = members
                .iter()
                .min_by(|&&a, &&b| (eig.values[a] - lam).norm().total_cmp(&(eig.values[b] - lam).norm()))
            {
                rep = p;
            }
        }
        let start = lambda.len();
        if is_pair {
            let (uc, wc) = (u.conj_function(), w.conj_function());
            rows.push(u.to_samples(mgrid));
            rows.push(uc.to_samples(mgrid));
            cols.push(w.to_samples(mgrid));
            cols.push(wc.to_samples(mgrid));
            lambda.push(lam);
            lambda.push(lam.conj());
            partner.push(start + 1);
            partner.push(start);
        } else {
            // rotate so the frame is real valued
            let ws = w.to_samples(mgrid);
            let (_, big) = ws
                .iter()
                .flat_map(|s| s.iter().copied())
                .fold((0.0, C64::new(1.0, 0.0)), |acc, v| if v.norm() > acc.0 { (v.norm(), v) } else { acc });
            let phase = big / big.norm();
            rows.push(u.to_samples(mgrid).into_iter().map(|s| (s * phase).map(|v| C64::new(v.re, 0.0))).collect());
            cols.push(ws.into_iter().map(|s| (s / phase).map(|v| C64::new(v.re, 0.0))).collect());
            lam = C64::new(lam.re, 0.0);
            lambda.push(lam);
            partner.push(start);
        }
        out_clusters.push(Cluster {
            members: members.clone(),
            alpha,
            beta,
            representative: rep,
            lambda: lam,
            is_pair,
            coords: start..lambda.len(),
        });
    }
    if lambda.len() != n {
        return Err(Error::ClusteringFailed(format!(
            "bundles span {} dimensions, expected {n}",
            lambda.len()
        )));
    }

    let mut u_samples = Vec::with_capacity(mgrid);
    let mut w_samples = Vec::with_capacity(mgrid);
    let mut frame_defect: f64 = 0.0;
    for q in 0..mgrid {
        let ud = DMatrix::from_fn(n, n, |i, j| rows[i][q][(0, j)]);
        let wd = DMatrix::from_fn(n, n, |i, j| cols[j][q][(i, 0)]);
        let p = &ud * &wd;
        let sv = p.clone().singular_values();
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let smax = sv.iter().copied().fold(0.0, f64::max);
        if !(smin > 1e-10 * smax) {
            return Err(Error::DefectiveFrame(format!(
                "U W is singular at theta = {:.4}",
                angles[q]
            )));
        }
        frame_defect = frame_defect.max((&p - DMatrix::identity(n, n)).iter().map(|v| v.norm()).fold(0.0, f64::max));
        let pinv = p.try_inverse().unwrap();
        u_samples.push(ud);
        w_samples.push(wd * pinv);
    }
    let u = FourierMatrix::from_samples(&u_samples, ell);
    let w = FourierMatrix::from_samples(&w_samples, ell);

    let lam_m = DMatrix::from_diagonal(&DVector::from_vec(lambda.clone()));
    let (mut left_inv, mut right_inv): (f64, f64) = (0.0, 0.0);
    for &th in &angles {
        let a = prob.a.eval(th);
        let l = &u.eval(th + prob.omega) * &a - &lam_m * u.eval(th);
        let r = &a * w.eval(th) - w.eval(th + prob.omega) * &lam_m;
        left_inv = left_inv.max(l.iter().map(|v| v.norm()).fold(0.0, f64::max));
        right_inv = right_inv.max(r.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }

    Ok(DichotomyDecomposition {
        eigenvalues: eig.values.clone(),
        clusters: out_clusters,
        lambda,
        u,
        w,
        omega: prob.omega,
        ell,
        partner,
        frame_defect,
        left_invariance: left_inv,
        right_invariance: right_inv,
    })
}

/// The linear map `x -> A(theta) x` as a power–Fourier map.
pub fn linear_map(a: &FourierMatrix, sigma: usize, ell: usize, omega_f: f64) -> PowerFourierMap {
    let (rows, cols) = (a.nrows(), a.ncols());
    let mut h = PowerFourierMap::zeros(cols, rows, sigma, ell, omega_f);
    if sigma == 0 {
        return h;
    }
    for i in 0..rows {
        for j in 0..cols {
            let harm: Vec<C64> = a.coeffs.iter().map(|c| c[(i, j)]).collect();
            let s = Series::from_fourier(cols, sigma, ell, &harm);
            for (dst, src) in h.comps[i].fourier_mut(1 + j).iter_mut().zip(s.fourier(0)) {
                *dst = *src;
            }
        }
    }
    h
}

/// `A(theta) g(x, theta)`, harmonics above the truncation of `g` dropped.
pub fn left_multiply(a: &FourierMatrix, g: &PowerFourierMap) -> PowerFourierMap {
    let comps = (0..a.nrows())
        .map(|i| {
            let mut acc = Series::zeros(g.n_in, g.sigma, g.ell);
            for j in 0..a.ncols() {
                let harm: Vec<C64> = a.coeffs.iter().map(|c| c[(i, j)]).collect();
                acc.add_assign(&g.comps[j].mul_fourier(&harm));
            }
            acc
        })
        .collect();
    PowerFourierMap {
        n_in: g.n_in,
        n_out: a.nrows(),
        sigma: g.sigma,
        ell: g.ell,
        omega_f: g.omega_f,
        conj: None,
        comps,
    }
}

/// Eigenproblem, clustering and frames in one call.
pub fn decompose(prob: &LinearBundleProblem) -> Result<DichotomyDecomposition> {
    let eig = build_transfer_eigenproblem(prob)?;
    let mags: Vec<f64> = eig.values.iter().map(|v| v.norm()).collect();
    let clusters = cluster_eigenvalues(&mags, eig.n, eig.ell)?;
    assemble_bundles(prob, &eig, &clusters)
}

/// `U^d(theta + omega) F(W^d(theta) x, theta)` and the largest deviation of
/// its linear part from `Lambda`, which is then imposed exactly.
pub fn diagonalize_map_with_defect(
    f: &PowerFourierMap,
    dec: &DichotomyDecomposition,
) -> Result<(PowerFourierMap, f64)> {
    let n = f.n_in;
    if dec.dim() != n || f.n_out != n {
        return Err(Error::DimensionMismatch(format!(
            "frame of dimension {} for a map {} -> {}",
            dec.dim(),
            f.n_in,
            f.n_out
        )));
    }
    let ell = f.ell.max(dec.ell);
    let h = linear_map(&dec.w, f.sigma, ell, f.omega_f);
    let g = f.resized(f.sigma, ell).compose_collocated(&h, f.sigma)?;
    let comps = left_multiply(&dec.u.shift(-dec.omega), &g).comps;
    let mut fd = PowerFourierMap {
        comps,
        conj: Some(dec.conjugation()),
        ..PowerFourierMap::zeros(n, n, f.sigma, ell, f.omega_f)
    };
    let mut defect: f64 = 0.0;
    if f.sigma >= 1 {
        for i in 0..n {
            for j in 0..n {
                for k in -(ell as i64)..=ell as i64 {
                    let exact = if i == j && k == 0 { dec.lambda[i] } else { C64::new(0.0, 0.0) };
                    defect = defect.max((fd.get(i, 1 + j, k) - exact).norm());
                    fd.set(i, 1 + j, k, exact);
                }
            }
        }
    }
    fd.symmetrize();
    Ok((fd, defect))
}

pub fn diagonalize_map(f: &PowerFourierMap, dec: &DichotomyDecomposition) -> Result<PowerFourierMap> {
    let (fd, defect) = diagonalize_map_with_defect(f, dec)?;
    if defect > 1e-6 {
        return Err(Error::DefectiveFrame(format!(
            "transformed linear part deviates from Lambda by {defect:.3e}"
        )));
    }
    Ok(fd)
}

/// `min_{j in I} ln(alpha_j) / ln(beta_max)`.
pub fn spectral_quotient(dec: &DichotomyDecomposition, index_set: &[usize]) -> Result<f64> {
    let beta_max = dec.clusters.iter().map(|c| c.beta).fold(0.0, f64::max);
    if beta_max >= 1.0 {
        return Err(Error::NotAttracting { beta_max });
    }
    if index_set.is_empty() {
        return Err(Error::DimensionMismatch("empty index set".into()));
    }
    Ok(index_set
        .iter()
        .map(|&j| dec.clusters[j].alpha.ln() / beta_max.ln())
        .fold(f64::INFINITY, f64::min))
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceHit {
    pub target: usize,
    pub exponents: Vec<u8>,
    pub harmonic: i64,
    pub denominator: f64,
    pub internal: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ResonanceReport {
    pub hits: Vec<ResonanceHit>,
}

impl ResonanceReport {
    pub fn external(&self) -> impl Iterator<Item = &ResonanceHit> {
        self.hits.iter().filter(|h| !h.internal)
    }
}

/// All `|lambda_{i0} - lambda^m e^{i k omega}| <= delta` with `i0` in the
/// index set, `2 <= |m| <= sigma` and `|k| <= |m| ell`.
pub fn check_nonresonance(
    dec: &DichotomyDecomposition,
    index_set: &[usize],
    sigma: usize,
    ell: usize,
    delta: f64,
) -> ResonanceReport {
    let n = dec.dim();
    let coords = dec.coords_of(index_set);
    let t = crate::polyalg::Monomials::get(n, sigma);
    let mut hits = Vec::new();
    for m in t.degree_range(2).start..t.len() {
        let ex = t.exponents(m);
        let j = t.degree(m);
        let internal = ex.iter().enumerate().all(|(v, &e)| e == 0 || coords.contains(&v));
        let lm = ex
            .iter()
            .enumerate()
            .fold(C64::new(1.0, 0.0), |acc, (v, &e)| acc * dec.lambda[v].powi(e as i32));
        let kmax = (j * ell) as i64;
        for &i0 in &coords {
            for k in -kmax..=kmax {
                let d = (dec.lambda[i0] - lm * C64::from_polar(1.0, k as f64 * dec.omega)).norm();
                if d <= delta {
                    hits.push(ResonanceHit {
                        target: i0,
                        exponents: ex.to_vec(),
                        harmonic: k,
                        denominator: d,
                        internal,
                    });
                }
            }
        }
    }
    ResonanceReport { hits }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_problem(d: &[f64], omega: f64, ell: usize) -> LinearBundleProblem {
        let a = DMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&v| C64::new(v, 0.0))));
        LinearBundleProblem {
            a: FourierMatrix::constant(a, ell),
            omega,
        }
    }

    #[test]
    fn constant_matrix_spectrum_is_rotated_copies() {
        let prob = diag_problem(&[0.5, 0.9], 0.3, 2);
        let eig = build_transfer_eigenproblem(&prob).unwrap();
        assert_eq!(eig.values.len(), 10);
        for base in [0.5, 0.9] {
            for k in -2..=2 {
                let target = C64::from_polar(base, k as f64 * 0.3);
                let best = eig.values.iter().map(|v| (v - target).norm()).fold(f64::INFINITY, f64::min);
                assert!(best < 1e-12, "{base} {k} {best}");
            }
        }
    }

    #[test]
    fn no_harmonics_is_plain_eigenproblem() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -0.5, 0.2]).map(|v| C64::new(v, 0.0));
        let prob = LinearBundleProblem {
            a: FourierMatrix::constant(a.clone(), 0),
            omega: 0.7,
        };
        let eig = build_transfer_eigenproblem(&prob).unwrap();
        let ev = a.map(|v| v.re).complex_eigenvalues();
        for v in ev.iter() {
            assert!(eig.values.iter().any(|w| (w - v).norm() < 1e-12));
        }
    }

    #[test]
    fn clusters_of_constant_diagonal() {
        let prob = diag_problem(&[0.5, 0.9], 0.3, 2);
        let eig = build_transfer_eigenproblem(&prob).unwrap();
        let mags: Vec<f64> = eig.values.iter().map(|v| v.norm()).collect();
        let cl = cluster_eigenvalues(&mags, 2, 2).unwrap();
        assert_eq!(cl.len(), 2);
        assert!(cl.iter().all(|c| c.len() == 5));
        assert!((eig.values[cl[0][0]].norm() - 0.5).abs() < 1e-12);
        assert!((eig.values[cl[1][0]].norm() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn equal_magnitudes_form_one_cluster() {
        let cl = cluster_eigenvalues(&[0.7; 6], 2, 1).unwrap();
        assert_eq!(cl, vec![vec![0, 1, 2, 3, 4, 5]]);
    }

    #[test]
    fn impossible_clustering_fails() {
        let mags = [0.1, 0.1, 0.1, 0.9, 0.9, 0.9];
        assert_eq!(cluster_eigenvalues(&mags, 2, 1).unwrap().len(), 2);
        // three groups of four cannot be cut into multiples of three with 2..=4 clusters
        let mut mags = vec![0.1; 4];
        mags.extend([0.5; 4]);
        mags.extend([0.9; 4]);
        assert!(matches!(cluster_eigenvalues(&mags, 4, 1), Err(Error::ClusteringFailed(_))));
    }

    #[test]
    fn representative_is_zero_harmonic_for_constant_matrix() {
        let prob = diag_problem(&[0.5, 0.9], 0.3, 2);
        let dec = decompose(&prob).unwrap();
        for c in &dec.clusters {
            assert!(c.lambda.im.abs() < 1e-14);
        }
        assert!((dec.lambda[0].re - 0.5).abs() < 1e-12);
        assert!((dec.lambda[1].re - 0.9).abs() < 1e-12);
        for th in [0.0, 1.3] {
            let u = dec.u.eval(th);
            let w = dec.w.eval(th);
            assert!((u - DMatrix::identity(2, 2)).norm() < 1e-12);
            assert!((w - DMatrix::identity(2, 2)).norm() < 1e-12);
        }
    }

    #[test]
    fn single_candidate_and_tie_break() {
        let prob = diag_problem(&[0.5], 0.3, 0);
        let eig = build_transfer_eigenproblem(&prob).unwrap();
        assert_eq!(select_representative(&eig, &[0]), 0);
        // identical scores: lower |Im lambda| wins
        let rows = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        let eig = TransferEigen {
            values: vec![C64::from_polar(0.5, 0.3), C64::new(0.5, 0.0), C64::from_polar(0.5, -0.3)],
            right: DMatrix::identity(3, 3),
            left: rows.map(|v| C64::new(v, 0.0)),
            n: 1,
            ell: 1,
        };
        assert_eq!(select_representative(&eig, &[0, 1, 2]), 1);
        assert_eq!(select_representative(&eig, &[0, 2]), 0);
    }

    #[test]
    fn quotient_with_coincident_bounds_is_one() {
        let dec = decompose(&diag_problem(&[0.5, 0.9], 0.3, 1)).unwrap();
        assert!((spectral_quotient(&dec, &[1]).unwrap() - 1.0).abs() < 1e-12);
        let q = spectral_quotient(&dec, &[0]).unwrap();
        assert!((q - 0.5f64.ln() / 0.9f64.ln()).abs() < 1e-12);
        let bad = decompose(&diag_problem(&[0.5, 1.1], 0.3, 1)).unwrap();
        assert!(matches!(spectral_quotient(&bad, &[0]), Err(Error::NotAttracting { .. })));
    }

    #[test]
    fn near_resonant_cubic_is_reported_as_internal() {
        let lam = C64::from_polar(0.99, 0.1);
        let a = DMatrix::from_row_slice(2, 2, &[lam.re, -lam.im, lam.im, lam.re]).map(|v| C64::new(v, 0.0));
        let dec = decompose(&LinearBundleProblem { a: FourierMatrix::constant(a, 0), omega: 0.5 }).unwrap();
        assert!(dec.clusters[0].is_pair);
        let rep = check_nonresonance(&dec, &[0], 3, 0, 0.02);
        let hit = rep.hits.iter().find(|h| h.target == 0 && h.exponents == vec![2, 1]).unwrap();
        assert!(hit.internal);
        assert!((hit.denominator - 0.99 * (1.0 - 0.9801)).abs() < 1e-12);
        assert!(check_nonresonance(&dec, &[0], 3, 0, 0.019).hits.iter().all(|h| h.exponents != vec![2, 1]));
    }

    #[test]
    fn real_pair_target_nonresonant() {
        let dec = decompose(&diag_problem(&[0.5, 0.9], 0.3, 0)).unwrap();
        let rep = check_nonresonance(&dec, &[0], 2, 0, 0.3);
        assert!(rep.hits.iter().all(|h| h.exponents != vec![0, 2]));
    }
}
