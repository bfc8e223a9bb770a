//! Finite-dimensional cubic Dirac families D_μ = γ(μ) + D0 on V⊗S and their kernels.

use crate::clifford::{complex_dim_of_module, GammaRep};
use crate::linalg::{anticomm, comm, cr, eye, kron, max_abs, nullspace, scalar_part, sigma_min_skew, CMat, I};
use crate::liegroup::{root_system, weight_decomposition, Irrep, LieAlgebraData, Level, LieError, RootSystem};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiracError {
    #[error("Clifford module metric does not match the Lie algebra metric")]
    MetricMismatch,
    #[error("parameter is not in the family's parameter space")]
    WrongParameterSpace,
    #[error("covector has components outside the Cartan dual")]
    NotInCartan,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("representation level {found:?} does not match {expected:?}")]
    LevelMismatch { expected: Level, found: Level },
    #[error("kernel does not factor: {0}")]
    KernelDoesNotFactor(String),
    #[error("tolerance too large: {0} distinct support orbits for an irreducible representation")]
    TolTooLarge(usize),
    #[error(transparent)]
    Lie(#[from] LieError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FamilyKind {
    Plain,
    /// Parametrized by the torsor at level τ; the representation sits at level τ−σ.
    Projective,
}

/// A parameter: a covector in g* coordinates, or a point of the level-τ torsor
/// written relative to the split basepoint.
#[derive(Clone, Debug, PartialEq)]
pub enum Param {
    Linear(Vec<f64>),
    Torsor { level: Level, coords: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct DiracFamily {
    pub v: Irrep,
    pub algebra: LieAlgebraData,
    pub gamma: GammaRep,
    pub roots: RootSystem,
    pub sigma: Vec<CMat>,
    pub d0: CMat,
    pub kind: FamilyKind,
    /// R_a ⊗ 1
    pub r_ops: Vec<CMat>,
    /// 1 ⊗ σ_a
    pub s_ops: Vec<CMat>,
    /// 1 ⊗ γ^a
    pub g_ops: Vec<CMat>,
    /// 1 ⊗ ε
    pub grading: CMat,
}

impl DiracFamily {
    pub fn dim(&self) -> usize {
        self.d0.nrows()
    }

    pub fn gamma_of(&self, mu: &[f64]) -> CMat {
        let n = self.dim();
        let mut m = CMat::zeros(n, n);
        for (g, &x) in self.g_ops.iter().zip(mu) {
            if x != 0.0 {
                m += g * cr(x);
            }
        }
        m
    }

    /// D_μ for μ in g* coordinates, without parameter-space checks.
    pub fn at(&self, mu: &[f64]) -> CMat {
        &self.d0 + self.gamma_of(mu)
    }

    /// R_a ⊗ 1 + 1 ⊗ σ_a
    pub fn diagonal_action(&self, a: usize) -> CMat {
        &self.r_ops[a] + &self.s_ops[a]
    }

    pub fn raise(&self, mu: &[f64]) -> Vec<f64> {
        let gi = self.algebra.quadratic_space().inverse();
        let n = self.algebra.dim;
        (0..n).map(|a| (0..n).map(|b| gi[(a, b)] * mu[b]).sum()).collect()
    }

    pub fn norm2(&self, mu: &[f64]) -> f64 {
        self.algebra.quadratic_space().norm2_covector(mu)
    }

    /// Cartan-dual coordinates of a g* covector.
    pub fn to_t(&self, mu: &[f64]) -> Vec<f64> {
        self.roots.cartan.iter().map(|&k| mu[k]).collect()
    }

    pub fn from_t(&self, w: &[f64]) -> Vec<f64> {
        self.roots.embed(w, self.algebra.dim)
    }
}

pub fn sigma_matrices(algebra: &LieAlgebraData, gamma: &GammaRep) -> Vec<CMat> {
    let n = algebra.dim;
    let m = gamma.module_dim;
    (0..n)
        .map(|a| {
            let mut s = CMat::zeros(m, m);
            for b in 0..n {
                for c in 0..n {
                    let f = algebra.f_low[a][b][c];
                    if f != 0.0 {
                        s += &gamma.gammas[b] * &gamma.gammas[c] * cr(0.25 * f);
                    }
                }
            }
            s
        })
        .collect()
}

fn assemble(v: &Irrep, algebra: &LieAlgebraData, gamma: &GammaRep, kind: FamilyKind) -> Result<DiracFamily, DiracError> {
    if gamma.dim() != algebra.dim || (&gamma.space.metric - &algebra.metric).amax() > 1e-12 {
        return Err(DiracError::MetricMismatch);
    }
    if v.actions.len() != algebra.dim {
        return Err(DiracError::DimensionMismatch { expected: algebra.dim, got: v.actions.len() });
    }
    let mut roots = root_system(&v.group)?;
    roots.t_metric = DMatrix::from_fn(roots.rank, roots.rank, |i, j| algebra.metric[(roots.cartan[i], roots.cartan[j])]);
    let sigma = sigma_matrices(algebra, gamma);
    let (iv, is) = (eye(v.dim), eye(gamma.module_dim));
    let r_ops: Vec<CMat> = v.actions.iter().map(|r| kron(r, &is)).collect();
    let s_ops: Vec<CMat> = sigma.iter().map(|s| kron(&iv, s)).collect();
    let g_ops: Vec<CMat> = gamma.gammas.iter().map(|g| kron(&iv, g)).collect();
    let dim = v.dim * gamma.module_dim;
    let mut d0 = CMat::zeros(dim, dim);
    for a in 0..algebra.dim {
        d0 += &g_ops[a] * &r_ops[a] * I;
        d0 += &g_ops[a] * &s_ops[a] * (I / 3.0);
    }
    Ok(DiracFamily {
        v: v.clone(),
        algebra: algebra.clone(),
        gamma: gamma.clone(),
        roots,
        sigma,
        d0,
        kind,
        r_ops,
        s_ops,
        g_ops,
        grading: kron(&iv, &gamma.grading),
    })
}

pub fn build_family(v: &Irrep, algebra: &LieAlgebraData, gamma: &GammaRep) -> Result<DiracFamily, DiracError> {
    assemble(v, algebra, gamma, FamilyKind::Plain)
}

/// Family over the level-τ torsor for a representation at level `rep_level`;
/// `Level::Plain` means the extension is split and yields a plain family.
pub fn projective_family(
    v: &Irrep,
    algebra: &LieAlgebraData,
    gamma: &GammaRep,
    rep_level: Level,
) -> Result<DiracFamily, DiracError> {
    if v.level != rep_level {
        return Err(DiracError::LevelMismatch { expected: rep_level, found: v.level });
    }
    let kind = if rep_level == Level::Plain { FamilyKind::Plain } else { FamilyKind::Projective };
    assemble(v, algebra, gamma, kind)
}

pub fn dirac_at(fam: &DiracFamily, mu: &Param) -> Result<CMat, DiracError> {
    let coords = match (fam.kind, mu) {
        (FamilyKind::Plain, Param::Linear(c)) => c,
        (FamilyKind::Projective, Param::Torsor { level: Level::Tau, coords }) => coords,
        _ => return Err(DiracError::WrongParameterSpace),
    };
    if coords.len() != fam.algebra.dim {
        return Err(DiracError::DimensionMismatch { expected: fam.algebra.dim, got: coords.len() });
    }
    Ok(fam.at(coords))
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationReport {
    pub clifford: f64,
    pub sigma_definition: f64,
    pub sigma_gamma: f64,
    pub sigma_sigma: f64,
    pub rep_commutators: f64,
    pub tensor_commute: f64,
    pub d0_square: f64,
    pub d0_invariance: f64,
    pub d0_odd_skew: f64,
    pub max: f64,
}

pub fn verify_relations(fam: &DiracFamily) -> RelationReport {
    let n = fam.algebra.dim;
    let gi = fam.algebra.quadratic_space().inverse();
    let f_up = &fam.algebra.f_up;
    let ms = fam.gamma.module_dim;
    let mut rep = RelationReport {
        clifford: fam.gamma.invariant_defect(),
        sigma_definition: 0.0,
        sigma_gamma: 0.0,
        sigma_sigma: 0.0,
        rep_commutators: fam.v.structure_defect(&fam.algebra),
        tensor_commute: 0.0,
        d0_square: 0.0,
        d0_invariance: 0.0,
        d0_odd_skew: 0.0,
        max: 0.0,
    };
    let fresh = sigma_matrices(&fam.algebra, &fam.gamma);
    for a in 0..n {
        rep.sigma_definition = rep.sigma_definition.max(max_abs(&(&fresh[a] - &fam.sigma[a])));
        for b in 0..n {
            // [σ_a, γ^b] = −f^b_ac γ^c
            let mut rhs = CMat::zeros(ms, ms);
            for c in 0..n {
                if f_up[a][c][b] != 0.0 {
                    rhs -= &fam.gamma.gammas[c] * cr(f_up[a][c][b]);
                }
            }
            rep.sigma_gamma = rep.sigma_gamma.max(max_abs(&(comm(&fam.sigma[a], &fam.gamma.gammas[b]) - rhs)));
            let mut rhs = CMat::zeros(ms, ms);
            for c in 0..n {
                if f_up[a][b][c] != 0.0 {
                    rhs += &fam.sigma[c] * cr(f_up[a][b][c]);
                }
            }
            rep.sigma_sigma = rep.sigma_sigma.max(max_abs(&(comm(&fam.sigma[a], &fam.sigma[b]) - rhs)));
            rep.tensor_commute = rep
                .tensor_commute
                .max(max_abs(&comm(&fam.r_ops[a], &fam.s_ops[b])))
                .max(max_abs(&comm(&fam.r_ops[a], &fam.g_ops[b])));
        }
        rep.d0_invariance = rep.d0_invariance.max(max_abs(&comm(&fam.diagonal_action(a), &fam.d0)));
    }
    let dim = fam.dim();
    let mut rhs = CMat::zeros(dim, dim);
    for a in 0..n {
        for b in 0..n {
            if gi[(a, b)] != 0.0 {
                rhs += (&fam.r_ops[a] * &fam.r_ops[b] + &fam.s_ops[a] * &fam.s_ops[b] * cr(1.0 / 3.0)) * cr(gi[(a, b)]);
            }
        }
    }
    rep.d0_square = max_abs(&(&fam.d0 * &fam.d0 - rhs));
    rep.d0_odd_skew = max_abs(&anticomm(&fam.d0, &fam.grading)).max(max_abs(&(&fam.d0 + fam.d0.adjoint())));
    rep.max = [
        rep.clifford,
        rep.sigma_definition,
        rep.sigma_gamma,
        rep.sigma_sigma,
        rep.rep_commutators,
        rep.tensor_commute,
        rep.d0_square,
        rep.d0_invariance,
        rep.d0_odd_skew,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    rep
}

fn check_cartan(fam: &DiracFamily, mu: &[f64]) -> Result<(), DiracError> {
    if mu.len() != fam.algebra.dim {
        return Err(DiracError::DimensionMismatch { expected: fam.algebra.dim, got: mu.len() });
    }
    let ok = mu.iter().enumerate().all(|(k, x)| fam.roots.cartan.contains(&k) || x.abs() < 1e-14);
    if ok {
        Ok(())
    } else {
        Err(DiracError::NotInCartan)
    }
}

/// E_μ = iπ̇_μ(μ_*) − |μ|²/2 with π̇_μ(ξ) = ξ^a(R_a + σ_a − iμ_a).
pub fn energy_at(fam: &DiracFamily, mu: &[f64]) -> Result<CMat, DiracError> {
    check_cartan(fam, mu)?;
    let up = fam.raise(mu);
    let n = fam.dim();
    let mut e = eye(n) * cr(fam.norm2(mu) / 2.0);
    for (a, &x) in up.iter().enumerate() {
        if x != 0.0 {
            e += fam.diagonal_action(a) * (I * x);
        }
    }
    Ok(e)
}

#[derive(Clone, Debug, Serialize)]
pub struct WeitzenbockReport {
    pub samples: usize,
    pub constant: f64,
    pub scalar_defect: f64,
    pub spread: f64,
}

/// Checks that D_μ² + 2E_μ is one scalar for all samples (t* covectors in g* coordinates).
pub fn weitzenbock_check(fam: &DiracFamily, mu_samples: &[Vec<f64>]) -> Result<WeitzenbockReport, DiracError> {
    let mut consts = vec![];
    let mut defect: f64 = 0.0;
    for mu in mu_samples {
        let d = fam.at(mu);
        let w = &d * &d + energy_at(fam, mu)? * cr(2.0);
        let (s, dev) = scalar_part(&w);
        defect = defect.max(dev).max(s.im.abs());
        consts.push(s.re);
    }
    let mean = consts.iter().sum::<f64>() / consts.len().max(1) as f64;
    let spread = consts.iter().fold(0.0f64, |m, c| m.max((c - mean).abs()));
    Ok(WeitzenbockReport { samples: consts.len(), constant: mean, scalar_defect: defect, spread })
}

#[derive(Clone, Debug)]
pub struct ScanSpec {
    /// Ray direction in g* coordinates.
    pub direction: Vec<f64>,
    /// Ray parameters s; samples are μ = s·direction.
    pub grid: Vec<f64>,
}

impl ScanSpec {
    /// Unit ray along −ρ (or along the first Cartan covector for abelian groups).
    pub fn default_ray(fam: &DiracFamily, grid: Vec<f64>) -> Self {
        let rs = &fam.roots;
        let w: Vec<f64> = if rs.positive.is_empty() {
            let mut v = vec![0.0; rs.rank];
            v[0] = 1.0;
            v
        } else {
            rs.rho.iter().map(|x| -x).collect()
        };
        let dir = fam.from_t(&w);
        let nrm = fam.norm2(&dir).sqrt();
        ScanSpec { direction: dir.iter().map(|x| x / nrm).collect(), grid }
    }

    pub fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|k| start + step * k as f64).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportPoint {
    pub s: f64,
    pub mu: Vec<f64>,
    pub mu_t: Vec<f64>,
    pub radius: f64,
    pub sigma_min: f64,
    pub kernel_dim: usize,
    #[serde(skip)]
    pub kernel: CMat,
    pub orbit: Vec<Vec<f64>>,
    pub orbit_verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelScanResult {
    pub direction: Vec<f64>,
    pub grid: Vec<f64>,
    pub sigma_min: Vec<f64>,
    pub supports: Vec<SupportPoint>,
    /// |λ|+|ρ|: beyond this radius σ_min(D_μ) ≥ |μ| − (|λ|+|ρ|).
    pub radius_bound: f64,
    pub outside_ball_ok: bool,
}

pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, width: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > width {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) / 2.0;
    (x, f(x))
}

pub fn kernel_scan(fam: &DiracFamily, scan: &ScanSpec, tol: f64) -> Result<KernelScanResult, DiracError> {
    let dir = &scan.direction;
    if dir.len() != fam.algebra.dim {
        return Err(DiracError::DimensionMismatch { expected: fam.algebra.dim, got: dir.len() });
    }
    let mu_of = |s: f64| -> Vec<f64> { dir.iter().map(|x| x * s).collect() };
    let sig = |s: f64| sigma_min_skew(&fam.at(&mu_of(s)));
    let profile: Vec<f64> = scan.grid.par_iter().map(|&s| sig(s)).collect();
    let n = scan.grid.len();
    let mut supports: Vec<SupportPoint> = vec![];
    for i in 0..n {
        let left = if i > 0 { profile[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < n { profile[i + 1] } else { f64::INFINITY };
        if !(profile[i] <= left && profile[i] <= right) {
            continue;
        }
        let a = if i > 0 { scan.grid[i - 1] } else { scan.grid[i] };
        let b = if i + 1 < n { scan.grid[i + 1] } else { scan.grid[i] };
        let (s, val) = if a < b { golden_min(sig, a, b, 1e-13) } else { (scan.grid[i], profile[i]) };
        if val >= tol || supports.iter().any(|p| (p.s - s).abs() < 1e-7) {
            continue;
        }
        let mu = mu_of(s);
        let d = fam.at(&mu);
        let kernel = nullspace(&d, 1e-6);
        let mu_t = fam.to_t(&mu);
        let orbit = fam.roots.orbit(&mu_t);
        let orbit_verified = orbit.iter().all(|w| sigma_min_skew(&fam.at(&fam.from_t(w))) < tol.max(1e-8) * 10.0);
        supports.push(SupportPoint {
            s,
            radius: fam.norm2(&mu).sqrt(),
            mu,
            mu_t,
            sigma_min: val,
            kernel_dim: kernel.ncols(),
            kernel,
            orbit,
            orbit_verified,
        });
    }
    if fam.v.irreducible {
        let mut orbits: Vec<Vec<Vec<f64>>> = vec![];
        for p in &supports {
            let seen = orbits.iter().any(|o| o.iter().any(|w| w.iter().zip(&p.mu_t).all(|(x, y)| (x - y).abs() < 1e-6)));
            if !seen {
                orbits.push(p.orbit.clone());
            }
        }
        if orbits.len() > 1 {
            return Err(DiracError::TolTooLarge(orbits.len()));
        }
    }
    let lam = fam.v.lambda();
    let radius_bound = fam.roots.norm(&lam) + fam.roots.norm(&fam.roots.rho);
    let outside_ball_ok = scan.grid.iter().zip(&profile).all(|(&s, &sm)| {
        let r = fam.norm2(&mu_of(s)).sqrt();
        r <= radius_bound || sm >= r - radius_bound - 1e-9
    });
    Ok(KernelScanResult {
        direction: dir.clone(),
        grid: scan.grid.clone(),
        sigma_min: profile,
        supports,
        radius_bound,
        outside_ball_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelDecomposition {
    pub mu_t: Vec<f64>,
    pub kernel_dim: usize,
    /// T-weight of the K factor (weight of V on the kernel).
    pub k_weight: Vec<f64>,
    /// T^σ-weight of the spinor factor.
    pub s_weight: Vec<f64>,
    pub k_mult: usize,
    pub s_mult: usize,
    pub factor_defect: f64,
    pub normal_clifford_defect: f64,
    pub normal_module_irreducible: bool,
    /// Character of T^σ on the multiplicity line L.
    pub l_character: Vec<f64>,
    /// Eigenvalues of stabilizing component representatives on K.
    pub component_characters: Vec<f64>,
}

fn block_weight(basis: &CMat, ops: &[CMat]) -> (Vec<f64>, f64) {
    let mut dev: f64 = 0.0;
    let w = ops
        .iter()
        .map(|op| {
            let m = basis.adjoint() * op * basis;
            let (s, d) = scalar_part(&m);
            dev = dev.max(d);
            s.im
        })
        .collect();
    (w, dev)
}

pub fn kernel_decompose(fam: &DiracFamily, result: &KernelScanResult) -> Result<Vec<KernelDecomposition>, DiracError> {
    let rs = &fam.roots;
    let r_cart: Vec<CMat> = rs.cartan.iter().map(|&k| fam.r_ops[k].clone()).collect();
    let s_cart: Vec<CMat> = rs.cartan.iter().map(|&k| fam.s_ops[k].clone()).collect();
    let sigma_cart: Vec<CMat> = rs.cartan.iter().map(|&k| fam.sigma[k].clone()).collect();
    let s_weights = weight_decomposition(&sigma_cart, fam.gamma.module_dim, 1e-8);
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-6);
    let mut out = vec![];
    for p in &result.supports {
        let kb = &p.kernel;
        if kb.ncols() == 0 {
            return Err(DiracError::KernelDoesNotFactor("empty kernel".into()));
        }
        let (k_weight, dk) = block_weight(kb, &r_cart);
        let (s_weight, ds) = block_weight(kb, &s_cart);
        if dk.max(ds) > 1e-6 {
            return Err(DiracError::KernelDoesNotFactor("kernel is not a single weight space".into()));
        }
        let vw = fam.v.weights.iter().find(|w| close(&w.weight, &k_weight));
        let sw = s_weights.iter().find(|w| close(&w.weight, &s_weight));
        let (Some(vw), Some(sw)) = (vw, sw) else {
            return Err(DiracError::KernelDoesNotFactor("weight not found in factors".into()));
        };
        let proj = kron(&(&vw.basis * vw.basis.adjoint()), &(&sw.basis * sw.basis.adjoint()));
        let factor_defect = if vw.mult * sw.mult == kb.ncols() { max_abs(&(&proj * kb - kb)) } else { f64::INFINITY };
        if factor_defect > 1e-6 {
            return Err(DiracError::KernelDoesNotFactor(format!(
                "dim {} vs {}·{}",
                kb.ncols(),
                vw.mult,
                sw.mult
            )));
        }
        let gi = fam.algebra.quadratic_space().inverse();
        let normal: Vec<CMat> = rs.cartan.iter().map(|&k| sw.basis.adjoint() * &fam.gamma.gammas[k] * &sw.basis).collect();
        let mut ncd: f64 = 0.0;
        for (i, gi_) in normal.iter().enumerate() {
            for (j, gj) in normal.iter().enumerate() {
                let want = eye(sw.mult) * cr(-2.0 * gi[(rs.cartan[i], rs.cartan[j])]);
                ncd = ncd.max(max_abs(&(anticomm(gi_, gj) - want)));
            }
        }
        let mut component_characters = vec![];
        for (k, c) in fam.v.component_actions.iter().enumerate() {
            let m = rs.component_weyl.get(k + 1).cloned().unwrap_or_else(|| DMatrix::identity(rs.rank, rs.rank));
            let image: Vec<f64> = (m * DVector::from_column_slice(&p.mu_t)).iter().copied().collect();
            if close(&image, &p.mu_t) {
                let (val, _) = scalar_part(&(vw.basis.adjoint() * c * &vw.basis));
                component_characters.push(val.re);
            }
        }
        out.push(KernelDecomposition {
            mu_t: p.mu_t.clone(),
            kernel_dim: kb.ncols(),
            k_weight,
            s_weight: s_weight.clone(),
            k_mult: vw.mult,
            s_mult: sw.mult,
            factor_defect,
            normal_clifford_defect: ncd,
            normal_module_irreducible: sw.mult == complex_dim_of_module(rs.rank),
            l_character: s_weight,
            component_characters,
        });
    }
    Ok(out)
}

/// ‖D_{Ad*_g μ} − U D_μ U⁻¹‖ for g = exp(ξ), U acting on V⊗S through R + σ.
pub fn equivariance_defect(fam: &DiracFamily, xi: &[f64], mu: &[f64]) -> f64 {
    let n = fam.algebra.dim;
    let dim = fam.dim();
    let mut gen = CMat::zeros(dim, dim);
    for (a, &x) in xi.iter().enumerate() {
        if x != 0.0 {
            gen += fam.diagonal_action(a) * cr(x);
        }
    }
    let u = gen.exp();
    // (ad*_ξ μ)_c = −ξ^a f^b_ac μ_b
    let m = DMatrix::from_fn(n, n, |c, b| -(0..n).map(|a| xi[a] * fam.algebra.f_up[a][c][b]).sum::<f64>());
    let mu2: Vec<f64> = (m.exp() * DVector::from_column_slice(mu)).iter().copied().collect();
    let lhs = fam.at(&mu2);
    let rhs = &u * fam.at(mu) * u.adjoint();
    max_abs(&(lhs - rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_clifford_module;
    use crate::liegroup::{build_irrep, structure_constants, GroupSpec, IrrepLabel};
    use crate::linalg::c;
    use proptest::prelude::*;

    fn fam(g: GroupSpec, l: IrrepLabel) -> DiracFamily {
        let alg = structure_constants(&g, 1.0).unwrap();
        let v = build_irrep(&g, &l).unwrap();
        let gam = build_clifford_module(alg.quadratic_space(), 1);
        if v.level == Level::Plain {
            build_family(&v, &alg, &gam).unwrap()
        } else {
            projective_family(&v, &alg, &gam, v.level).unwrap()
        }
    }

    #[test]
    fn torus_examples() {
        let f0 = fam(GroupSpec::Torus(1), IrrepLabel::Charge(vec![0]));
        assert_eq!(max_abs(&f0.d0), 0.0);
        for n in -2..=2i64 {
            let f = fam(GroupSpec::Torus(1), IrrepLabel::Charge(vec![n]));
            for a in [-1.5, 0.0, 0.7] {
                let d = dirac_at(&f, &Param::Linear(vec![a])).unwrap();
                let z = c(0.0, a - n as f64);
                let want = CMat::from_row_slice(2, 2, &[cr(0.0), z, z, cr(0.0)]);
                assert!(max_abs(&(d - want)) < 1e-14);
                let e = energy_at(&f, &[a]).unwrap();
                // weight ω = n, spinor weight 0
                assert!((e[(0, 0)].re - (a * a / 2.0 - n as f64 * a)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn parameter_space_is_enforced() {
        let f = fam(GroupSpec::SO3Projective, IrrepLabel::Spin(1));
        assert_eq!(dirac_at(&f, &Param::Linear(vec![0.0; 3])), Err(DiracError::WrongParameterSpace));
        let d = dirac_at(&f, &Param::Torsor { level: Level::Tau, coords: vec![0.0; 3] }).unwrap();
        assert!(max_abs(&(d - &f.d0)) == 0.0);
        let g = fam(GroupSpec::SU2, IrrepLabel::Spin(2));
        assert!(dirac_at(&g, &Param::Torsor { level: Level::Tau, coords: vec![0.0; 3] }).is_err());
        let alg = structure_constants(&GroupSpec::SU2, 1.0).unwrap();
        let v = build_irrep(&GroupSpec::SU2, &IrrepLabel::Spin(1)).unwrap();
        let gam = build_clifford_module(alg.quadratic_space(), 1);
        assert!(projective_family(&v, &alg, &gam, Level::TauMinusSigma).is_err());
        assert_eq!(projective_family(&v, &alg, &gam, Level::Plain).unwrap().kind, FamilyKind::Plain);
        let wrong = build_clifford_module(structure_constants(&GroupSpec::SU2, 2.0).unwrap().quadratic_space(), 1);
        assert!(matches!(build_family(&v, &alg, &wrong), Err(DiracError::MetricMismatch)));
    }

    #[test]
    fn o2_matrix_after_reordering() {
        let f = fam(GroupSpec::O2, IrrepLabel::O2(2));
        let a = 0.8;
        let d = f.at(&[a]);
        // basis v1⊗s+, v1⊗s−, v2⊗s+, v2⊗s− reordered to (v1 s+, v2 s+, v2 s−, v1 s−)
        let perm = [0usize, 2, 3, 1];
        let p = CMat::from_fn(4, 4, |i, j| d[(perm[i], perm[j])]);
        let n = 2.0;
        let z = cr(0.0);
        let (u, w) = (c(0.0, a - n), c(0.0, a + n));
        let want = CMat::from_row_slice(4, 4, &[z, z, z, u, z, z, w, z, z, w, z, z, u, z, z, z]);
        // V_n's first basis vector carries weight −n in our ordering, so u and w swap roles.
        let want_swapped = CMat::from_row_slice(4, 4, &[z, z, z, w, z, z, u, z, z, u, z, z, w, z, z, z]);
        assert!(max_abs(&(&p - &want)).min(max_abs(&(&p - &want_swapped))) < 1e-14);
    }

    #[test]
    fn relations_hold() {
        let cases = vec![
            (GroupSpec::SU2, IrrepLabel::Spin(2)),
            (GroupSpec::SO3, IrrepLabel::Spin(2)),
            (GroupSpec::Torus(1), IrrepLabel::Charge(vec![2])),
            (GroupSpec::O2, IrrepLabel::O2(2)),
            (GroupSpec::U2, IrrepLabel::U2 { j2: 1, q: 3 }),
        ];
        for (g, l) in cases {
            let r = verify_relations(&fam(g.clone(), l));
            assert!(r.max < 1e-11, "{g}: {r:?}");
        }
    }

    #[test]
    fn energy_minimum_at_kernel() {
        let f = fam(GroupSpec::SU2, IrrepLabel::Spin(1));
        let mu = vec![-2.0, 0.0, 0.0];
        let e = energy_at(&f, &mu).unwrap();
        let vals = crate::linalg::eigvalsh(&e);
        assert!((vals[0] + 2.0).abs() < 1e-12); // −|λ+ρ|²/2 with |λ+ρ| = 2
        assert!(energy_at(&f, &[0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn weitzenbock_constants() {
        let f = fam(GroupSpec::SU2, IrrepLabel::Spin(0));
        let r = weitzenbock_check(&f, &[vec![0.0; 3], vec![-1.0, 0.0, 0.0], vec![2.5, 0.0, 0.0]]).unwrap();
        assert!(r.scalar_defect < 1e-12 && r.spread < 1e-12);
        assert!((r.constant + 1.0).abs() < 1e-12);
        let t = fam(GroupSpec::Torus(1), IrrepLabel::Charge(vec![3]));
        let r = weitzenbock_check(&t, &[vec![0.0], vec![1.2]]).unwrap();
        assert!((r.constant + 9.0).abs() < 1e-12);
    }

    #[test]
    fn scans_localize() {
        let f = fam(GroupSpec::SU2, IrrepLabel::Spin(2));
        let scan = ScanSpec::default_ray(&f, ScanSpec::range(0.0, 5.0, 0.01));
        let r = kernel_scan(&f, &scan, 1e-8).unwrap();
        assert_eq!(r.supports.len(), 1);
        assert!((r.supports[0].radius - 3.0).abs() < 1e-6);
        assert_eq!(r.supports[0].kernel_dim, 2);
        assert!(r.supports[0].orbit_verified && r.outside_ball_ok);
        let dec = kernel_decompose(&f, &r).unwrap();
        assert!((dec[0].k_weight[0] + 2.0).abs() < 1e-9);
        assert!((dec[0].l_character[0] + 1.0).abs() < 1e-9);
        assert!(dec[0].normal_module_irreducible);

        let t = fam(GroupSpec::Torus(1), IrrepLabel::Charge(vec![-2]));
        let scan = ScanSpec::default_ray(&t, ScanSpec::range(-4.0, 4.0, 0.05));
        let r = kernel_scan(&t, &scan, 1e-8).unwrap();
        assert_eq!(r.supports.len(), 1);
        assert!((r.supports[0].mu[0] + 2.0).abs() < 1e-6);
        assert_eq!(r.supports[0].kernel_dim, 2);
    }

    #[test]
    fn o2_det_stabilizer_character() {
        let f = fam(GroupSpec::O2, IrrepLabel::O2Det);
        let scan = ScanSpec::default_ray(&f, ScanSpec::range(-3.0, 3.0, 0.1));
        let r = kernel_scan(&f, &scan, 1e-8).unwrap();
        assert_eq!(r.supports.len(), 1);
        let dec = kernel_decompose(&f, &r).unwrap();
        assert_eq!(dec[0].component_characters.len(), 1);
        assert!((dec[0].component_characters[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn weyl_lift_equivariance() {
        let f = fam(GroupSpec::SU2, IrrepLabel::Spin(3));
        for lift in &f.roots.weyl_lifts {
            assert!(equivariance_defect(&f, lift, &[-1.3, 0.0, 0.0]) < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn equivariance_random(x in proptest::collection::vec(-1.0f64..1.0, 3), m in proptest::collection::vec(-2.0f64..2.0, 3)) {
            let f = fam(GroupSpec::SO3, IrrepLabel::Spin(2));
            prop_assert!(equivariance_defect(&f, &x, &m) < 1e-10);
        }

        #[test]
        fn compact_support_bound(s in -8.0f64..8.0, j2 in 0u32..4) {
            let f = fam(GroupSpec::SU2, IrrepLabel::Spin(j2));
            let mu = vec![s, 0.0, 0.0];
            let bound = f.roots.norm(&f.v.lambda()) + f.roots.norm(&f.roots.rho);
            prop_assert!(sigma_min_skew(&f.at(&mu)) >= s.abs() - bound - 1e-9);
        }
    }
}
