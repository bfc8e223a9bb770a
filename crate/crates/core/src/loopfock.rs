//! Energy-truncated loop-group modules: the loop spin Fock space, positive-energy
//! representations (torus Heisenberg fibers, affine su(2) by Shapovalov quotient)
//! and the loop Dirac family on their tensor product.
//!
//! Operators are stored on the full truncated space (all grades ≤ N). Products are
//! normal ordered, so an energy-preserving operator is exact on every grade.

use crate::affine::{energy_shift, AffineError, LevelForm};
use crate::clifford::{build_clifford_module, GammaRep};
use crate::diracfam::{build_family, golden_min, DiracError};
use crate::exact::{approx_rational, independent_rows, int, rank, Rat};
use crate::linalg::{
    anticomm, c, comm, cr, eigh, eigvalsh, eye, herm_fn, inv_sqrt_spd, kron, max_abs, nullspace, scalar_part,
    sigma_min_skew, CMat, I,
};
use crate::liegroup::{build_irrep, structure_constants, GroupSpec, IrrepLabel, LieAlgebraData, LieError};
use nalgebra::DMatrix;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("cutoff must be at least {0}")]
    CutoffTooSmall(usize),
    #[error("mode {n} outside cutoff {cutoff}")]
    ModeOutOfRange { n: i64, cutoff: usize },
    #[error("Gram matrix at grade {0} is not positive semidefinite")]
    GramNotPsd(usize),
    #[error("no positive energy representations at level {0}")]
    NoRepresentations(i64),
    #[error("2j = {j2} is not a level-{k} weight")]
    NotALevelWeight { j2: u32, k: i64 },
    #[error("spin and representation cutoffs differ: {0} vs {1}")]
    CutoffMismatch(usize, usize),
    #[error("spin metric does not match the level form")]
    LevelMismatch,
    #[error("window does not contain the fibers needed for the scan")]
    WindowTooSmall,
    #[error("central term is not scalar (deviation {0:e})")]
    NotScalar(f64),
    #[error("Q-defining identity residual {0:e} on safe grades")]
    QResidual(f64),
    #[error("kernel found outside the zero-energy space at grade {0}")]
    SupportOutsideW0(usize),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Affine(#[from] AffineError),
    #[error(transparent)]
    Dirac(#[from] DiracError),
}

fn block(m: &CMat, rows: (usize, usize), cols: (usize, usize)) -> CMat {
    m.view((rows.0, cols.0), (rows.1, cols.1)).into_owned()
}

#[derive(Clone, Debug)]
pub struct ModeBasis {
    pub algebra: LieAlgebraData,
    pub cutoff: usize,
    /// (n, a) with |n| ≤ N; the energy of z^n e_a is n.
    pub modes: Vec<(i64, usize)>,
}

impl ModeBasis {
    pub fn new(algebra: &LieAlgebraData, cutoff: usize) -> Self {
        let n = cutoff as i64;
        let modes = (-n..=n).flat_map(|k| (0..algebra.dim).map(move |a| (k, a))).collect();
        ModeBasis { algebra: algebra.clone(), cutoff, modes }
    }

    pub fn conjugate(&self, mode: (i64, usize)) -> (i64, usize) {
        (-mode.0, mode.1)
    }

    pub fn constant_loops(&self) -> Vec<(i64, usize)> {
        self.modes.iter().copied().filter(|m| m.0 == 0).collect()
    }
}

/// Grade layout of a truncated graded space: grade e occupies offsets[e]..offsets[e]+dims[e].
#[derive(Clone, Debug, Serialize)]
pub struct GradeLayout {
    pub dims: Vec<usize>,
    pub offsets: Vec<usize>,
}

impl GradeLayout {
    fn from_dims(dims: Vec<usize>) -> Self {
        let mut offsets = vec![0];
        for d in &dims {
            offsets.push(offsets.last().unwrap() + d);
        }
        offsets.pop();
        GradeLayout { dims, offsets }
    }

    pub fn total(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn range(&self, e: usize) -> (usize, usize) {
        (self.offsets[e], self.dims[e])
    }

    /// Block of `m` mapping grade `from` to grade `to`.
    pub fn block(&self, m: &CMat, to: usize, from: usize) -> CMat {
        block(m, self.range(to), self.range(from))
    }
}

#[derive(Clone, Debug)]
pub struct LoopSpinRep {
    pub basis: ModeBasis,
    pub s0: GammaRep,
    /// Positive modes (n, i) of the orthonormal frame.
    pub positive_modes: Vec<(usize, usize)>,
    /// Exterior basis: sorted lists of indices into `positive_modes`.
    pub wedges: Vec<Vec<usize>>,
    pub layout: GradeLayout,
    /// γ^a(n) on the truncated space, keyed by (n, a).
    pub gammas: BTreeMap<(i64, usize), CMat>,
    pub grading: CMat,
}

fn wedge_energy(w: &[usize], modes: &[(usize, usize)]) -> usize {
    w.iter().map(|&m| modes[m].0).sum()
}

fn exterior_basis(modes: &[(usize, usize)], cutoff: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    fn rec(start: usize, cur: &mut Vec<usize>, e: usize, modes: &[(usize, usize)], cutoff: usize, out: &mut Vec<Vec<usize>>) {
        for m in start..modes.len() {
            let ne = e + modes[m].0;
            if ne <= cutoff {
                cur.push(m);
                out.push(cur.clone());
                rec(m + 1, cur, ne, modes, cutoff, out);
                cur.pop();
            }
        }
    }
    rec(0, &mut vec![], 0, modes, cutoff, &mut out);
    out.sort_by(|a, b| wedge_energy(a, modes).cmp(&wedge_energy(b, modes)).then(a.cmp(b)));
    out
}

/// Exterior multiplication by the m-th positive mode.
fn ext_matrix(wedges: &[Vec<usize>], m: usize) -> CMat {
    let index: HashMap<&Vec<usize>, usize> = wedges.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let n = wedges.len();
    let mut out = CMat::zeros(n, n);
    for (j, w) in wedges.iter().enumerate() {
        if w.contains(&m) {
            continue;
        }
        let before = w.iter().filter(|&&x| x < m).count();
        let mut nw = w.clone();
        nw.insert(before, m);
        if let Some(&i) = index.get(&nw) {
            out[(i, j)] = cr(if before % 2 == 0 { 1.0 } else { -1.0 });
        }
    }
    out
}

pub fn build_spin_fock(algebra: &LieAlgebraData, cutoff: usize) -> Result<LoopSpinRep, LoopError> {
    if cutoff < 1 {
        return Err(LoopError::CutoffTooSmall(1));
    }
    let basis = ModeBasis::new(algebra, cutoff);
    let s0 = build_clifford_module(algebra.quadratic_space(), 1);
    let dim = algebra.dim;
    let positive_modes: Vec<(usize, usize)> = (1..=cutoff).flat_map(|n| (0..dim).map(move |i| (n, i))).collect();
    let wedges = exterior_basis(&positive_modes, cutoff);
    let sd = s0.module_dim;
    let mut dims = vec![0usize; cutoff + 1];
    for w in &wedges {
        dims[wedge_energy(w, &positive_modes)] += sd;
    }
    let layout = GradeLayout::from_dims(dims);
    let il = eye(wedges.len());
    let frame = inv_sqrt_spd(&algebra.metric);
    let eps = &s0.grading;
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut c_ops: BTreeMap<(i64, usize), CMat> = BTreeMap::new();
    for (m, &(n, i)) in positive_modes.iter().enumerate() {
        let ext = ext_matrix(&wedges, m);
        c_ops.insert((n as i64, i), kron(&ext, eps) * cr(sqrt2));
        c_ops.insert((-(n as i64), i), kron(&ext.adjoint(), eps) * cr(-sqrt2));
    }
    for i in 0..dim {
        c_ops.insert((0, i), kron(&il, &s0.frame[i]));
    }
    let total = layout.total();
    let mut gammas = BTreeMap::new();
    for n in -(cutoff as i64)..=cutoff as i64 {
        for a in 0..dim {
            let mut g = CMat::zeros(total, total);
            for i in 0..dim {
                if frame[(a, i)] != 0.0 {
                    g += &c_ops[&(n, i)] * cr(frame[(a, i)]);
                }
            }
            gammas.insert((n, a), g);
        }
    }
    let parity = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        wedges.len(),
        wedges.iter().map(|w| cr(if w.len() % 2 == 0 { 1.0 } else { -1.0 })),
    ));
    let grading = kron(&parity, eps);
    Ok(LoopSpinRep { basis, s0, positive_modes, wedges, layout, gammas, grading })
}

fn mode_class(n: i64) -> u8 {
    match n.signum() {
        1 => 0,
        0 => 1,
        _ => 2,
    }
}

impl LoopSpinRep {
    pub fn cutoff(&self) -> usize {
        self.basis.cutoff
    }

    pub fn dim(&self) -> usize {
        self.layout.total()
    }

    pub fn gamma(&self, n: i64, a: usize) -> Result<&CMat, LoopError> {
        self.gammas.get(&(n, a)).ok_or(LoopError::ModeOutOfRange { n, cutoff: self.cutoff() })
    }

    /// γ_d(n) = g_de γ^e(n), the Clifford generator dual to z^n e_d.
    pub fn gamma_lower(&self, n: i64, d: usize) -> Result<CMat, LoopError> {
        let g = &self.basis.algebra.metric;
        let mut out = CMat::zeros(self.dim(), self.dim());
        for e in 0..self.basis.algebra.dim {
            if g[(d, e)] != 0.0 {
                out += self.gamma(n, e)? * cr(g[(d, e)]);
            }
        }
        Ok(out)
    }

    /// Product of gammas with creators moved left and annihilators right. Contractions are
    /// dropped; callers contract with antisymmetric f, where they cancel.
    fn normal_product(&self, factors: &[(i64, usize)]) -> CMat {
        let mut idx: Vec<usize> = (0..factors.len()).collect();
        idx.sort_by_key(|&i| mode_class(factors[i].0));
        let mut inversions = 0;
        for i in 0..idx.len() {
            for j in i + 1..idx.len() {
                if idx[i] > idx[j] {
                    inversions += 1;
                }
            }
        }
        let mut m = self.gammas[&factors[idx[0]]].clone();
        for &i in &idx[1..] {
            m *= &self.gammas[&factors[i]];
        }
        if inversions % 2 == 1 {
            -m
        } else {
            m
        }
    }

    pub fn grading_defect(&self) -> f64 {
        self.gammas.values().map(|g| max_abs(&anticomm(g, &self.grading))).fold(0.0, f64::max)
    }
}

/// χ̇(z^n e_a) = ¼ f_abc Σ_{k+l=n} :γ^b(k)γ^c(l):.
pub fn spin_loop_action(spin: &LoopSpinRep, n: i64, a: usize) -> Result<CMat, LoopError> {
    let nn = spin.cutoff() as i64;
    if n.abs() > nn {
        return Err(LoopError::ModeOutOfRange { n, cutoff: spin.cutoff() });
    }
    let alg = &spin.basis.algebra;
    let mut out = CMat::zeros(spin.dim(), spin.dim());
    for b in 0..alg.dim {
        for cc in 0..alg.dim {
            let f = alg.f_low[a][b][cc];
            if f == 0.0 {
                continue;
            }
            for k in -nn..=nn {
                let l = n - k;
                if l.abs() > nn {
                    continue;
                }
                out += spin.normal_product(&[(k, b), (l, cc)]) * cr(0.25 * f);
            }
        }
    }
    Ok(out)
}

fn combo(ops: &[CMat], coeffs: &[f64]) -> CMat {
    let mut out = CMat::zeros(ops[0].nrows(), ops[0].ncols());
    for (m, &x) in ops.iter().zip(coeffs) {
        if x != 0.0 {
            out += m * cr(x);
        }
    }
    out
}

/// Central coefficient of [χ̇(zξ), χ̇(z⁻¹η)] − χ̇([ξ,η]), read off on the vacuum grade.
pub fn spin_cocycle(spin: &LoopSpinRep, xi: &[f64], eta: &[f64]) -> Result<Rat, LoopError> {
    let alg = &spin.basis.algebra;
    let up: Vec<CMat> = (0..alg.dim).map(|a| spin_loop_action(spin, 1, a)).collect::<Result<_, _>>()?;
    let down: Vec<CMat> = (0..alg.dim).map(|a| spin_loop_action(spin, -1, a)).collect::<Result<_, _>>()?;
    let zero: Vec<CMat> = (0..alg.dim).map(|a| spin_loop_action(spin, 0, a)).collect::<Result<_, _>>()?;
    let x = combo(&up, xi);
    let y = combo(&down, eta);
    let br = alg.bracket(xi, eta);
    let diff = comm(&x, &y) - combo(&zero, &br);
    let g0 = spin.layout.block(&diff, 0, 0);
    let (s, dev) = scalar_part(&g0);
    if dev > 1e-9 || s.im.abs() > 1e-9 {
        return Err(LoopError::NotScalar(dev.max(s.im.abs())));
    }
    approx_rational(s.re, 1000, 1e-9).ok_or(LoopError::NotScalar(s.re))
}

/// Spin level in units of `basic`: c(ζ,ζ)/⟨ζ,ζ⟩ for the first Cartan direction ζ.
pub fn spin_level(spin: &LoopSpinRep, group: &GroupSpec, basic: &DMatrix<f64>) -> Result<Rat, LoopError> {
    let rs = crate::liegroup::root_system(group)?;
    let mut z = vec![0.0; spin.basis.algebra.dim];
    z[rs.cartan[0]] = 1.0;
    let cval = spin_cocycle(spin, &z, &z)?;
    let norm = approx_rational(basic[(rs.cartan[0], rs.cartan[0])], 1000, 1e-12).ok_or(LoopError::LevelMismatch)?;
    Ok(cval / norm)
}

#[derive(Clone, Debug)]
pub struct QOperator {
    pub matrix: CMat,
    /// Coefficients c_d of the zero-mode term Σ c_d γ^d(0).
    pub zero_mode_correction: Vec<f64>,
    /// max |−{¼Q, γ_d(n)} − χ̇(z^n e_d)| over |n| ≤ N−1 on source grades ≤ N−|n|.
    pub residual: f64,
}

pub fn build_q(spin: &LoopSpinRep) -> Result<QOperator, LoopError> {
    let alg = &spin.basis.algebra;
    let nn = spin.cutoff() as i64;
    let dim = spin.dim();
    let mut q = CMat::zeros(dim, dim);
    for a in 0..alg.dim {
        for b in 0..alg.dim {
            for cc in 0..alg.dim {
                let f = alg.f_low[a][b][cc];
                if f == 0.0 {
                    continue;
                }
                for n in -nn..=nn {
                    for m in -nn..=nn {
                        let l = -n - m;
                        if l.abs() <= nn {
                            q += spin.normal_product(&[(n, a), (m, b), (l, cc)]) * cr(f / 6.0);
                        }
                    }
                }
            }
        }
    }
    let residual_of = |q: &CMat, n: i64, d: usize| -> Result<CMat, LoopError> {
        let g = spin.gamma_lower(n, d)?;
        Ok(anticomm(q, &g) * cr(-0.25) - spin_loop_action(spin, n, d)?)
    };
    let mut corr = vec![0.0; alg.dim];
    for (d, cd) in corr.iter_mut().enumerate() {
        let r = residual_of(&q, 0, d)?;
        let (s, dev) = scalar_part(&spin.layout.block(&r, 0, 0));
        if dev > 1e-9 || s.im.abs() > 1e-9 {
            return Err(LoopError::QResidual(dev));
        }
        *cd = -2.0 * s.re;
    }
    for (d, &cd) in corr.iter().enumerate() {
        if cd != 0.0 {
            q += spin.gamma(0, d)? * cr(cd);
        }
    }
    let mut residual: f64 = 0.0;
    for n in -(nn - 1)..=nn - 1 {
        let safe = (nn - n.abs()) as usize;
        let cols = spin.layout.offsets[safe] + spin.layout.dims[safe];
        for d in 0..alg.dim {
            let r = residual_of(&q, n, d)?;
            residual = residual.max(max_abs(&r.columns(0, cols).into_owned()));
        }
    }
    if residual > 1e-10 {
        return Err(LoopError::QResidual(residual));
    }
    Ok(QOperator { matrix: q, zero_mode_correction: corr, residual })
}

/// Chevalley generators of sl(2,C): H = −iζ, E = (e2 − ie3)/2, F = −(e2 + ie3)/2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Chevalley {
    E,
    H,
    F,
}

impl Chevalley {
    pub fn adjoint(self) -> Self {
        match self {
            Chevalley::E => Chevalley::F,
            Chevalley::H => Chevalley::H,
            Chevalley::F => Chevalley::E,
        }
    }

    /// Root on the coroot ζ.
    pub fn root(self) -> i64 {
        match self {
            Chevalley::E => 2,
            Chevalley::H => 0,
            Chevalley::F => -2,
        }
    }
}

pub type ModeOp = (i64, Chevalley);
pub type Mono = Vec<ModeOp>;
type FreeVec = BTreeMap<(Mono, usize), Rat>;

fn add_scaled(dst: &mut FreeVec, src: &FreeVec, c: &Rat) {
    for (key, v) in src {
        let e = dst.entry(key.clone()).or_insert_with(Rat::zero);
        *e += v * c;
    }
    dst.retain(|_, v| !v.is_zero());
}

/// The module generated from V_0 by creation modes, before the quotient.
struct FreeModule {
    k: i64,
    n0: usize,
    memo: HashMap<(ModeOp, Mono, usize), FreeVec>,
}

impl FreeModule {
    fn bracket(&self, x: ModeOp, y: ModeOp) -> (Vec<(i64, ModeOp)>, i64) {
        use Chevalley::*;
        let ((n, a), (m, b)) = (x, y);
        let s = n + m;
        let d = i64::from(s == 0);
        let k = self.k;
        match (a, b) {
            (H, H) => (vec![], -2 * k * n * d),
            (H, E) => (vec![(2, (s, E))], 0),
            (H, F) => (vec![(-2, (s, F))], 0),
            (E, H) => (vec![(-2, (s, E))], 0),
            (F, H) => (vec![(2, (s, F))], 0),
            (E, F) => (vec![(1, (s, H))], -k * n * d),
            (F, E) => (vec![(-1, (s, H))], k * m * d),
            (E, E) | (F, F) => (vec![], 0),
        }
    }

    fn zero_mode(&self, a: Chevalley, p: usize) -> Option<(usize, Rat)> {
        let n0 = self.n0 as i64;
        let pi = p as i64;
        match a {
            Chevalley::H => Some((p, int(2 * pi - n0))),
            Chevalley::E => (p < self.n0).then(|| (p + 1, Rat::one())),
            Chevalley::F => (p >= 1).then(|| (p - 1, int(pi * (n0 - pi + 1)))),
        }
    }

    fn apply_term(&mut self, op: ModeOp, mono: &[ModeOp], p: usize) -> FreeVec {
        let key = (op, mono.to_vec(), p);
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let mut out = FreeVec::new();
        if mono.is_empty() {
            match op.0.signum() {
                1 => {
                    out.insert((vec![op], p), Rat::one());
                }
                0 => {
                    if let Some((q, c)) = self.zero_mode(op.1, p) {
                        if !c.is_zero() {
                            out.insert((vec![], q), c);
                        }
                    }
                }
                _ => {}
            }
        } else if op.0 > 0 && op <= mono[0] {
            let mut m = vec![op];
            m.extend_from_slice(mono);
            out.insert((m, p), Rat::one());
        } else {
            let first = mono[0];
            let rest = &mono[1..];
            let inner = self.apply_term(op, rest, p);
            out = self.apply_vec(first, &inner);
            let (terms, central) = self.bracket(op, first);
            for (cf, z) in terms {
                let v = self.apply_term(z, rest, p);
                add_scaled(&mut out, &v, &int(cf));
            }
            if central != 0 {
                let mut v = FreeVec::new();
                v.insert((rest.to_vec(), p), Rat::one());
                add_scaled(&mut out, &v, &int(central));
            }
        }
        self.memo.insert(key, out.clone());
        out
    }

    fn apply_vec(&mut self, op: ModeOp, v: &FreeVec) -> FreeVec {
        let mut out = FreeVec::new();
        for ((mono, p), cf) in v {
            let r = self.apply_term(op, mono, *p);
            add_scaled(&mut out, &r, cf);
        }
        out
    }

    fn vacuum_norm(&self, p: usize) -> Rat {
        let n0 = self.n0 as i64;
        (1..=p as i64).fold(Rat::one(), |acc, q| acc * int(q * (n0 - q + 1)))
    }

    /// ⟨M1 v_p1, w⟩ by moving the adjoints of M1 across.
    fn inner(&mut self, m1: &[ModeOp], p1: usize, w: &FreeVec) -> Rat {
        let mut v = w.clone();
        for &(n, a) in m1 {
            v = self.apply_vec((-n, a.adjoint()), &v);
            if v.is_empty() {
                return Rat::zero();
            }
        }
        v.get(&(vec![], p1)).map(|c| c * self.vacuum_norm(p1)).unwrap_or_else(Rat::zero)
    }
}

/// PBW-ordered creation monomials of total energy e.
pub fn creation_monomials(e: usize) -> Vec<Mono> {
    let mut ops: Vec<ModeOp> = vec![];
    for n in 1..=e as i64 {
        for a in [Chevalley::E, Chevalley::H, Chevalley::F] {
            ops.push((n, a));
        }
    }
    let mut out = vec![];
    fn rec(start: usize, left: i64, cur: &mut Mono, ops: &[ModeOp], out: &mut Vec<Mono>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..ops.len() {
            if ops[i].0 <= left {
                cur.push(ops[i]);
                rec(i, left - ops[i].0, cur, ops, out);
                cur.pop();
            }
        }
    }
    rec(0, e as i64, &mut vec![], &ops, &mut out);
    out
}

fn exact_inverse(m: &[Vec<Rat>]) -> Option<Vec<Vec<Rat>>> {
    let n = m.len();
    let mut a: Vec<Vec<Rat>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(p, col);
        let piv = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x /= &piv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c2 in 0..2 * n {
                    let v = &f * &a[col][c2];
                    a[r][c2] -= v;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn positive_definite(m: &[Vec<Rat>]) -> bool {
    let n = m.len();
    let mut a = m.to_vec();
    for col in 0..n {
        if !a[col][col].is_positive() {
            return false;
        }
        for r in col + 1..n {
            let f = &a[r][col] / &a[col][col];
            for c2 in col..n {
                let v = &f * &a[col][c2];
                a[r][c2] -= v;
            }
        }
    }
    true
}

/// Exact quotient data of a Shapovalov module.
#[derive(Clone, Debug)]
pub struct ExactModule {
    pub k: i64,
    pub n0: usize,
    /// Spanning monomials with V_0 index, per grade.
    pub spanning: Vec<Vec<(Mono, usize)>>,
    /// Indices into `spanning` forming the quotient basis, per grade.
    pub basis: Vec<Vec<usize>>,
    /// Gram matrix of the basis, per grade.
    pub gram: Vec<Vec<Vec<Rat>>>,
    /// Exact operator blocks keyed by (mode op, source grade), in quotient coordinates.
    pub ops: BTreeMap<(ModeOp, usize), Vec<Vec<Rat>>>,
}

impl ExactModule {
    pub fn dims(&self) -> Vec<usize> {
        self.basis.iter().map(|b| b.len()).collect()
    }

    fn op_block(&self, op: ModeOp, from: usize) -> Option<&Vec<Vec<Rat>>> {
        self.ops.get(&(op, from))
    }
}

fn qmul(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let (n, m) = (a.len(), b.first().map_or(0, |r| r.len()));
    (0..n)
        .map(|i| (0..m).map(|j| a[i].iter().zip(b).map(|(x, row)| x * &row[j]).sum()).collect())
        .collect()
}

/// Checks the level-k relations exactly on every pair of modes and every source grade
/// where neither ordering leaves the truncation.
pub fn exact_relations_hold(m: &ExactModule, cutoff: usize) -> bool {
    let nn = cutoff as i64;
    let fm = FreeModule { k: m.k, n0: m.n0, memo: HashMap::new() };
    let dims = m.dims();
    let ops: Vec<ModeOp> = (-nn..=nn).flat_map(|n| [Chevalley::E, Chevalley::H, Chevalley::F].map(|a| (n, a))).collect();
    let compose = |x: ModeOp, y: ModeOp, e: usize| -> Option<Vec<Vec<Rat>>> {
        // X Y on grade e; None means the product vanishes identically.
        let mid = e as i64 + y.0;
        let end = mid + x.0;
        if mid < 0 || end < 0 {
            return None;
        }
        let yb = m.op_block(y, e)?;
        let xb = m.op_block(x, mid as usize)?;
        Some(qmul(xb, yb))
    };
    for &x in &ops {
        for &y in &ops {
            for e in 0..=cutoff {
                let (a, b) = (e as i64 + x.0, e as i64 + y.0);
                let end = e as i64 + x.0 + y.0;
                if a > nn || b > nn || end > nn || end < 0 {
                    continue;
                }
                let rows = dims[end as usize];
                let cols = dims[e];
                let zero = vec![vec![Rat::zero(); cols]; rows];
                let xy = compose(x, y, e).unwrap_or_else(|| zero.clone());
                let yx = compose(y, x, e).unwrap_or_else(|| zero.clone());
                let (terms, central) = fm.bracket(x, y);
                let mut rhs = zero.clone();
                for (cf, z) in terms {
                    if let Some(zb) = m.op_block(z, e) {
                        for i in 0..rows {
                            for j in 0..cols {
                                rhs[i][j] += int(cf) * &zb[i][j];
                            }
                        }
                    }
                }
                if central != 0 && rows == cols {
                    for i in 0..rows {
                        rhs[i][i] += int(central);
                    }
                }
                for i in 0..rows {
                    for j in 0..cols {
                        if &xy[i][j] - &yx[i][j] != rhs[i][j] {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

#[derive(Clone, Debug)]
pub struct PositiveEnergyRep {
    pub group: GroupSpec,
    /// The level form τ−σ.
    pub level_form: LevelForm,
    pub label: String,
    pub cutoff: usize,
    pub layout: GradeLayout,
    /// Absolute energy of each basis vector.
    pub energy: Vec<f64>,
    /// Grade of each basis vector.
    pub grade_of: Vec<usize>,
    /// Zero-mode charge (torus fibers), if any.
    pub fiber_of: Vec<i64>,
    /// Z/2-grading of each basis vector.
    pub parity: Vec<i8>,
    /// ρ̇(z^n e_a) in an orthonormal basis.
    pub modes: BTreeMap<(i64, usize), CMat>,
    pub exact: Option<ExactModule>,
}

impl PositiveEnergyRep {
    pub fn dim(&self) -> usize {
        self.layout.total()
    }

    pub fn op(&self, n: i64, a: usize) -> Result<&CMat, LoopError> {
        self.modes.get(&(n, a)).ok_or(LoopError::ModeOutOfRange { n, cutoff: self.cutoff })
    }

    /// max |[ρ̇(z^nξ), ρ̇(z^mη)] − ρ̇(z^{n+m}[ξ,η]) − n⟨ξ,η⟩δ| on grades where both orderings stay in range.
    pub fn commutator_defect(&self, algebra: &LieAlgebraData, form: &DMatrix<f64>) -> f64 {
        let nn = self.cutoff as i64;
        let dim = algebra.dim;
        let mut worst: f64 = 0.0;
        for n in -nn..=nn {
            for m in -nn..=nn {
                if (n + m).abs() > nn {
                    continue;
                }
                let safe = nn - n.max(0).max(m.max(0)).max((n + m).max(0));
                if safe < 0 {
                    continue;
                }
                let cols = self.layout.offsets[safe as usize] + self.layout.dims[safe as usize];
                for a in 0..dim {
                    for b in 0..dim {
                        let x = &self.modes[&(n, a)];
                        let y = &self.modes[&(m, b)];
                        let mut rhs = CMat::zeros(self.dim(), self.dim());
                        for cc in 0..dim {
                            let f = algebra.f_up[a][b][cc];
                            if f != 0.0 {
                                rhs += &self.modes[&(n + m, cc)] * cr(f);
                            }
                        }
                        if n + m == 0 {
                            rhs += eye(self.dim()) * cr(n as f64 * form[(a, b)]);
                        }
                        let d = comm(x, y) - rhs;
                        worst = worst.max(max_abs(&d.columns(0, cols).into_owned()));
                    }
                }
            }
        }
        worst
    }

    /// max |ρ̇(z^n e_a)† + ρ̇(z^{−n} e_a)| (real basis elements).
    pub fn adjoint_defect(&self) -> f64 {
        self.modes
            .iter()
            .map(|(&(n, a), m)| max_abs(&(m.adjoint() + &self.modes[&(-n, a)])))
            .fold(0.0, f64::max)
    }
}

/// Level-k affine su(2) module generated by the lowest-weight representation of spin n0/2.
pub fn build_affine_su2_irrep(k: i64, n0: u32, cutoff: usize) -> Result<PositiveEnergyRep, LoopError> {
    if k < 0 {
        return Err(LoopError::NoRepresentations(k));
    }
    if n0 as i64 > k {
        return Err(LoopError::NotALevelWeight { j2: n0, k });
    }
    let mut fm = FreeModule { k, n0: n0 as usize, memo: HashMap::new() };
    let nn = cutoff;
    let mut spanning: Vec<Vec<(Mono, usize)>> = vec![];
    let mut grams: Vec<Vec<Vec<Rat>>> = vec![];
    let mut bases = vec![];
    let mut gram_bb = vec![];
    for e in 0..=nn {
        let span: Vec<(Mono, usize)> =
            creation_monomials(e).into_iter().flat_map(|m| (0..=n0 as usize).map(move |p| (m.clone(), p))).collect();
        let vecs: Vec<FreeVec> = span.iter().map(|(m, p)| FreeVec::from([((m.clone(), *p), Rat::one())])).collect();
        let n = span.len();
        let mut g = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let v = fm.inner(&span[i].0, span[i].1, &vecs[j]);
                g[j][i] = v.clone();
                g[i][j] = v;
            }
        }
        let b = independent_rows(&g);
        let gbb: Vec<Vec<Rat>> = b.iter().map(|&i| b.iter().map(|&j| g[i][j].clone()).collect()).collect();
        if !positive_definite(&gbb) || rank(&g) != b.len() {
            return Err(LoopError::GramNotPsd(e));
        }
        spanning.push(span);
        grams.push(g);
        bases.push(b);
        gram_bb.push(gbb);
    }
    let inverses: Vec<Vec<Vec<Rat>>> = gram_bb.iter().map(|g| exact_inverse(g).expect("nonsingular")).collect();
    let index: Vec<HashMap<(Mono, usize), usize>> =
        spanning.iter().map(|s| s.iter().cloned().enumerate().map(|(i, key)| (key, i)).collect()).collect();
    let mut ops = BTreeMap::new();
    for n in -(nn as i64)..=nn as i64 {
        for a in [Chevalley::E, Chevalley::H, Chevalley::F] {
            for e in 0..=nn {
                let t = e as i64 + n;
                if t < 0 || t > nn as i64 {
                    continue;
                }
                let t = t as usize;
                let cols: Vec<Vec<Rat>> = bases[e]
                    .iter()
                    .map(|&j| {
                        let (mono, p) = &spanning[e][j];
                        let w = fm.apply_term((n, a), mono, *p);
                        let y: Vec<Rat> = bases[t]
                            .iter()
                            .map(|&bi| {
                                w.iter().map(|(key, cf)| cf * &grams[t][bi][index[t][key]]).sum::<Rat>()
                            })
                            .collect();
                        inverses[t].iter().map(|row| row.iter().zip(&y).map(|(x, z)| x * z).sum()).collect()
                    })
                    .collect();
                let rows = bases[t].len();
                let mat: Vec<Vec<Rat>> = (0..rows).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
                ops.insert(((n, a), e), mat);
            }
        }
    }
    let exact = ExactModule { k, n0: n0 as usize, spanning, basis: bases, gram: gram_bb, ops };
    Ok(orthonormal_su2(exact, cutoff))
}

fn to_f64_mat(m: &[Vec<Rat>], r: usize, c2: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c2, |i, j| m[i][j].to_f64().unwrap_or(f64::NAN))
}

fn orthonormal_su2(exact: ExactModule, cutoff: usize) -> PositiveEnergyRep {
    let dims = exact.dims();
    let layout = GradeLayout::from_dims(dims.clone());
    let total = layout.total();
    // y = Lᵀx for G = LLᵀ
    let lt: Vec<DMatrix<f64>> = exact
        .gram
        .iter()
        .map(|g| {
            let gf = to_f64_mat(g, g.len(), g.len());
            if gf.nrows() == 0 {
                gf
            } else {
                gf.cholesky().expect("positive definite").l().transpose()
            }
        })
        .collect();
    let lt_inv: Vec<DMatrix<f64>> = lt.iter().map(|m| m.clone().try_inverse().unwrap_or_else(|| m.clone())).collect();
    let mut cheval: BTreeMap<ModeOp, CMat> = BTreeMap::new();
    for (&((n, a), e), m) in &exact.ops {
        let t = (e as i64 + n) as usize;
        let on = &lt[t] * to_f64_mat(m, dims[t], dims[e]) * &lt_inv[e];
        let full = cheval.entry((n, a)).or_insert_with(|| CMat::zeros(total, total));
        let (r0, _) = layout.range(t);
        let (c0, _) = layout.range(e);
        for i in 0..on.nrows() {
            for j in 0..on.ncols() {
                full[(r0 + i, c0 + j)] = cr(on[(i, j)]);
            }
        }
    }
    let nn = cutoff as i64;
    let mut modes = BTreeMap::new();
    for n in -nn..=nn {
        let get = |a: Chevalley| cheval.get(&(n, a)).cloned().unwrap_or_else(|| CMat::zeros(total, total));
        let (e, h, f) = (get(Chevalley::E), get(Chevalley::H), get(Chevalley::F));
        modes.insert((n, 0), &h * I);
        modes.insert((n, 1), &e - &f);
        modes.insert((n, 2), (&e + &f) * I);
    }
    let grade_of: Vec<usize> = (0..=cutoff).flat_map(|g| std::iter::repeat_n(g, dims[g])).collect();
    PositiveEnergyRep {
        group: GroupSpec::SU2,
        level_form: LevelForm::su2_tau_minus_sigma(exact.k),
        label: format!("k={},2j={}", exact.k, exact.n0),
        cutoff,
        energy: grade_of.iter().map(|&g| g as f64).collect(),
        fiber_of: vec![0; total],
        parity: vec![1; total],
        grade_of,
        layout,
        modes,
        exact: Some(exact),
    }
}

/// Partitions of e into parts ≤ n_max, as occupation vectors indexed by part size − 1.
fn occupations(e: usize, n_max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    fn rec(part: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if part == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..=left / part {
            cur[part - 1] = k;
            rec(part - 1, left - k * part, cur, out);
        }
        cur[part - 1] = 0;
    }
    rec(n_max, e, &mut vec![0; n_max], &mut out);
    out.sort();
    out
}

/// Heisenberg fibers over a window of the Π-orbit r + mZ for the T¹ form m.
/// Fiber charges are r + m·t with r = μ0 mod m and t in a window of `width` values around 0.
pub fn build_heisenberg_rep(form: &LevelForm, mu0: i64, width: usize, cutoff: usize) -> Result<PositiveEnergyRep, LoopError> {
    if !matches!(form.group, GroupSpec::Torus(1)) {
        return Err(LoopError::Affine(AffineError::Unsupported(form.group.to_string())));
    }
    if !form.is_positive_definite() {
        return Err(LoopError::Affine(AffineError::NotPositiveDefinite));
    }
    if width == 0 {
        return Err(LoopError::WindowTooSmall);
    }
    let m = form.t_form[0][0].to_integer().to_i64().expect("small level");
    let r = mu0.rem_euclid(m);
    let t_lo = -((width as i64 - 1) / 2);
    let fibers: Vec<(i64, i64)> = (0..width as i64).map(|i| (t_lo + i, r + m * (t_lo + i))).collect();
    let per_grade: Vec<Vec<Vec<usize>>> = (0..=cutoff).map(|e| occupations(e, cutoff)).collect();
    // grade outer, fiber, then Fock state
    let mut states: Vec<(usize, usize, Vec<usize>)> = vec![];
    for (e, occs) in per_grade.iter().enumerate() {
        for fi in 0..fibers.len() {
            for o in occs {
                states.push((e, fi, o.clone()));
            }
        }
    }
    let dims: Vec<usize> = per_grade.iter().map(|o| o.len() * fibers.len()).collect();
    let layout = GradeLayout::from_dims(dims);
    let index: HashMap<(usize, Vec<usize>), usize> =
        states.iter().enumerate().map(|(i, (_, f, o))| ((*f, o.clone()), i)).collect();
    let total = states.len();
    let mf = m as f64;
    let eps = form.grading.first().copied().unwrap_or(false);
    let mut modes = BTreeMap::new();
    for n in -(cutoff as i64)..=cutoff as i64 {
        let mut op = CMat::zeros(total, total);
        for (j, (_, f, o)) in states.iter().enumerate() {
            if n == 0 {
                op[(j, j)] = c(0.0, fibers[*f].1 as f64);
                continue;
            }
            let p = n.unsigned_abs() as usize;
            let mut no = o.clone();
            let amp = if n > 0 {
                no[p - 1] += 1;
                (mf * p as f64 * no[p - 1] as f64).sqrt()
            } else {
                if o[p - 1] == 0 {
                    continue;
                }
                no[p - 1] -= 1;
                -(mf * p as f64 * o[p - 1] as f64).sqrt()
            };
            if let Some(&i) = index.get(&(*f, no)) {
                op[(i, j)] = cr(amp);
            }
        }
        modes.insert((n, 0), op);
    }
    Ok(PositiveEnergyRep {
        group: form.group.clone(),
        level_form: form.clone(),
        label: format!("m={m},orbit={r}"),
        cutoff,
        energy: states.iter().map(|(e, f, _)| *e as f64 + (fibers[*f].1 as f64).powi(2) / (2.0 * mf)).collect(),
        grade_of: states.iter().map(|s| s.0).collect(),
        fiber_of: states.iter().map(|s| fibers[s.1].1).collect(),
        parity: states.iter().map(|s| if eps && fibers[s.1].0 % 2 != 0 { -1 } else { 1 }).collect(),
        layout,
        modes,
        exact: None,
    })
}

/// Translation of fibers by t ∈ Π (partial on the window).
pub fn pi_translation(rep: &PositiveEnergyRep, t: i64) -> CMat {
    let m = rep.level_form.t_form[0][0].to_integer().to_i64().expect("small level");
    let n = rep.dim();
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        let target = rep.fiber_of[j] + m * t;
        // same grade and Fock state, shifted fiber; states are laid out identically per fiber
        let fibers: Vec<i64> = {
            let mut f = rep.fiber_of.clone();
            f.sort();
            f.dedup();
            f
        };
        let Some(src_pos) = fibers.iter().position(|&x| x == rep.fiber_of[j]) else { continue };
        let Some(dst_pos) = fibers.iter().position(|&x| x == target) else { continue };
        let per_fiber = rep.layout.dims[rep.grade_of[j]] / fibers.len();
        let i = (j as i64 + (dst_pos as i64 - src_pos as i64) * per_fiber as i64) as usize;
        out[(i, j)] = cr(1.0);
    }
    out
}

#[derive(Clone, Debug)]
pub struct WGrade {
    pub grade: usize,
    /// (V grade, S grade) blocks in order.
    pub blocks: Vec<(usize, usize)>,
    pub offsets: Vec<usize>,
    pub dim: usize,
    pub d0: CMat,
    pub energy0: CMat,
    /// ρ̇_W(e_a) on constant loops.
    pub rho: Vec<CMat>,
    /// 1 ⊗ γ^a(0).
    pub gamma0: Vec<CMat>,
    /// Isometries onto the weight spaces of the first Cartan direction.
    pub weight_blocks: Vec<(f64, CMat)>,
}

#[derive(Clone, Debug)]
pub struct LoopDiracFamily {
    pub v: PositiveEnergyRep,
    pub s: LoopSpinRep,
    pub q: QOperator,
    pub tau: LevelForm,
    pub cutoff: usize,
    /// D, E and their products are energy preserving, so every grade ≤ N is safe.
    pub safe_grade_bound: usize,
    pub cartan: Vec<usize>,
    pub grades: Vec<WGrade>,
}

pub fn build_loop_dirac(v: PositiveEnergyRep, s: LoopSpinRep, tau: &LevelForm) -> Result<LoopDiracFamily, LoopError> {
    if v.cutoff != s.cutoff() {
        return Err(LoopError::CutoffMismatch(v.cutoff, s.cutoff()));
    }
    let alg = s.basis.algebra.clone();
    let metric_ok = (0..alg.dim).all(|a| (0..alg.dim).all(|b| (alg.metric[(a, b)] - tau.g_form[a][b].to_f64().unwrap_or(f64::NAN)).abs() < 1e-12));
    if !metric_ok {
        return Err(LoopError::LevelMismatch);
    }
    let q = build_q(&s)?;
    let cartan = crate::liegroup::root_system(&v.group)?.cartan;
    let nn = v.cutoff;
    let chi0: Vec<CMat> = (0..alg.dim).map(|a| spin_loop_action(&s, 0, a)).collect::<Result<_, _>>()?;
    let mut grades = vec![];
    for e in 0..=nn {
        let blocks: Vec<(usize, usize)> = (0..=e).map(|a| (a, e - a)).collect();
        let sizes: Vec<usize> = blocks.iter().map(|&(a, b)| v.layout.dims[a] * s.layout.dims[b]).collect();
        let mut offsets = vec![0];
        for sz in &sizes {
            offsets.push(offsets.last().unwrap() + sz);
        }
        let dim = offsets.pop().unwrap();
        let mut d0 = CMat::zeros(dim, dim);
        let mut energy0 = CMat::zeros(dim, dim);
        let mut rho = vec![CMat::zeros(dim, dim); alg.dim];
        let mut gamma0 = vec![CMat::zeros(dim, dim); alg.dim];
        let place = |m: &mut CMat, piece: &CMat, r: usize, c2: usize| {
            let mut view = m.view_mut((r, c2), (piece.nrows(), piece.ncols()));
            view += piece;
        };
        for (bi, &(av, bs)) in blocks.iter().enumerate() {
            let (vd, sd) = (v.layout.dims[av], s.layout.dims[bs]);
            if vd * sd == 0 {
                continue;
            }
            let (iv, is) = (eye(vd), eye(sd));
            for n in -(nn as i64)..=nn as i64 {
                let (ta, tb) = (av as i64 + n, bs as i64 - n);
                if ta < 0 || tb < 0 {
                    continue;
                }
                let tj = blocks.iter().position(|&x| x == (ta as usize, tb as usize)).expect("block");
                for a in 0..alg.dim {
                    let vb = v.layout.block(v.op(n, a)?, ta as usize, av);
                    let sb = s.layout.block(s.gamma(-n, a)?, tb as usize, bs);
                    place(&mut d0, &(kron(&vb, &sb) * I), offsets[tj], offsets[bi]);
                }
            }
            let qb = s.layout.block(&q.matrix, bs, bs);
            place(&mut d0, &(kron(&iv, &qb) * (I * 0.5)), offsets[bi], offsets[bi]);
            let ev = &v.energy[v.layout.offsets[av]..v.layout.offsets[av] + vd];
            for i in 0..vd {
                for j in 0..sd {
                    let idx = offsets[bi] + i * sd + j;
                    energy0[(idx, idx)] = cr(ev[i] + bs as f64);
                }
            }
            for a in 0..alg.dim {
                let rv = v.layout.block(v.op(0, a)?, av, av);
                let cs = s.layout.block(&chi0[a], bs, bs);
                place(&mut rho[a], &(kron(&rv, &is) + kron(&iv, &cs)), offsets[bi], offsets[bi]);
                let g = s.layout.block(s.gamma(0, a)?, bs, bs);
                place(&mut gamma0[a], &kron(&iv, &g), offsets[bi], offsets[bi]);
            }
        }
        let weight_blocks = if dim == 0 {
            vec![]
        } else {
            let (vals, vecs) = eigh(&(&rho[cartan[0]] * I));
            let mut groups: Vec<(f64, Vec<usize>)> = vec![];
            for (i, &x) in vals.iter().enumerate() {
                match groups.iter_mut().find(|g| (g.0 - x).abs() < 1e-6) {
                    Some(g) => g.1.push(i),
                    None => groups.push((x, vec![i])),
                }
            }
            groups
                .into_iter()
                .map(|(w, idx)| {
                    let u = CMat::from_fn(dim, idx.len(), |r, k| vecs[(r, idx[k])]);
                    (w.round(), u)
                })
                .collect()
        };
        grades.push(WGrade { grade: e, blocks, offsets, dim, d0, energy0, rho, gamma0, weight_blocks });
    }
    Ok(LoopDiracFamily { cutoff: nn, safe_grade_bound: nn, cartan, v, s, q, tau: tau.clone(), grades })
}

impl LoopDiracFamily {
    /// μ = κ^τ(ξ) as a g* covector, for ξ given in Π coordinates.
    pub fn kappa_covector(&self, xi: &[f64]) -> Vec<f64> {
        let g = &self.s.basis.algebra.metric;
        let n = g.nrows();
        let mut full = vec![0.0; n];
        for (k, &idx) in self.cartan.iter().enumerate() {
            full[idx] = xi[k];
        }
        (0..n).map(|cidx| (0..n).map(|b| full[b] * g[(b, cidx)]).sum()).collect()
    }

    pub fn gamma_of(&self, grade: usize, mu: &[f64]) -> CMat {
        let gr = &self.grades[grade];
        let mut out = CMat::zeros(gr.dim, gr.dim);
        for (g, &x) in gr.gamma0.iter().zip(mu) {
            if x != 0.0 {
                out += g * cr(x);
            }
        }
        out
    }
}

/// D(ξ) per grade, ξ a constant loop in t given in Π coordinates.
pub fn dirac_at_loop(fam: &LoopDiracFamily, xi: &[f64]) -> Vec<CMat> {
    let mu = fam.kappa_covector(xi);
    fam.grades.iter().map(|g| &g.d0 + fam.gamma_of(g.grade, &mu)).collect()
}

/// E(ξ) per grade from the energy shift of E(0).
pub fn energy_at_loop(fam: &LoopDiracFamily, xi: &[f64]) -> Result<Vec<CMat>, LoopError> {
    fam.grades
        .iter()
        .map(|g| {
            let acts: Vec<CMat> = fam.cartan.iter().map(|&k| g.rho[k].clone()).collect();
            Ok(energy_shift(&g.energy0, &acts, xi, &fam.tau)?.energy)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopWeitzenbockReport {
    pub samples: usize,
    pub grades: usize,
    pub constant: f64,
    pub scalar_defect: f64,
    pub spread: f64,
    pub skew_defect: f64,
    pub odd_defect: f64,
    pub energy_commutator: f64,
}

pub fn weitzenbock_loop(fam: &LoopDiracFamily, samples: &[Vec<f64>]) -> Result<LoopWeitzenbockReport, LoopError> {
    let mut consts = vec![];
    let (mut defect, mut skew, mut odd, mut ecomm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for xi in samples {
        let ds = dirac_at_loop(fam, xi);
        let es = energy_at_loop(fam, xi)?;
        for (g, (d, e)) in fam.grades.iter().zip(ds.iter().zip(&es)).take(fam.safe_grade_bound + 1) {
            if g.dim == 0 {
                continue;
            }
            let w = d * d + e * cr(2.0);
            let (s, dev) = scalar_part(&w);
            defect = defect.max(dev).max(s.im.abs());
            consts.push(s.re);
            skew = skew.max(max_abs(&(d + d.adjoint())));
            ecomm = ecomm.max(max_abs(&comm(d, e)));
            let par = w_parity(fam, g.grade);
            odd = odd.max(max_abs(&anticomm(d, &par)));
        }
    }
    let mean = consts.iter().sum::<f64>() / consts.len().max(1) as f64;
    let spread = consts.iter().fold(0.0f64, |m, x| m.max((x - mean).abs()));
    Ok(LoopWeitzenbockReport {
        samples: samples.len(),
        grades: fam.safe_grade_bound + 1,
        constant: mean,
        scalar_defect: defect,
        spread,
        skew_defect: skew,
        odd_defect: odd,
        energy_commutator: ecomm,
    })
}

/// Z/2-grading of W at one grade: V parity times the spin grading.
fn w_parity(fam: &LoopDiracFamily, grade: usize) -> CMat {
    let g = &fam.grades[grade];
    let mut out = CMat::zeros(g.dim, g.dim);
    for (bi, &(av, bs)) in g.blocks.iter().enumerate() {
        let vd = fam.v.layout.dims[av];
        let pv = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            vd,
            fam.v.parity[fam.v.layout.offsets[av]..fam.v.layout.offsets[av] + vd].iter().map(|&x| cr(x as f64)),
        ));
        let ps = fam.s.layout.block(&fam.s.grading, bs, bs);
        let piece = kron(&pv, &ps);
        let mut view = out.view_mut((g.offsets[bi], g.offsets[bi]), (piece.nrows(), piece.ncols()));
        view += &piece;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopSupport {
    /// ξ0 = a0·ζ
    pub a0: f64,
    pub sigma_min: f64,
    /// κ^τ(ξ0) on ζ.
    pub kappa_value: f64,
    pub kernel_dims: Vec<usize>,
    pub kernel_in_w0: bool,
    /// 2π|a0|, the rotation angle of exp(2πξ0).
    pub angle: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopLocalizationReport {
    pub grid: Vec<f64>,
    pub sigma_min: Vec<f64>,
    pub per_grade_sigma_min: Vec<Vec<f64>>,
    pub supports: Vec<LoopSupport>,
    pub gap_ok: bool,
}

struct ScanBlocks {
    blocks: Vec<(usize, CMat, CMat)>,
}

impl ScanBlocks {
    fn new(fam: &LoopDiracFamily) -> Self {
        let mut zeta = vec![0.0; fam.cartan.len()];
        zeta[0] = 1.0;
        let mu = fam.kappa_covector(&zeta);
        let mut blocks = vec![];
        for g in fam.grades.iter().take(fam.safe_grade_bound + 1) {
            let gm = fam.gamma_of(g.grade, &mu);
            for (_, u) in &g.weight_blocks {
                let ud = u.adjoint();
                blocks.push((g.grade, &ud * &g.d0 * u, &ud * &gm * u));
            }
        }
        ScanBlocks { blocks }
    }

    fn sigma_by_grade(&self, a: f64, grades: usize) -> Vec<f64> {
        let mut out = vec![f64::INFINITY; grades];
        for (g, d0, gm) in &self.blocks {
            let s = sigma_min_skew(&(d0 + gm * cr(a)));
            out[*g] = out[*g].min(s);
        }
        out
    }
}

/// Scans ξ = aζ over `grid`, refining local minima of σ_min by golden section.
pub fn kernel_localization_loop(fam: &LoopDiracFamily, grid: &[f64], tol: f64) -> Result<LoopLocalizationReport, LoopError> {
    let sb = ScanBlocks::new(fam);
    let ng = fam.safe_grade_bound + 1;
    let per: Vec<Vec<f64>> = grid.par_iter().map(|&a| sb.sigma_by_grade(a, ng)).collect();
    let profile: Vec<f64> = per.iter().map(|v| v.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let sig = |a: f64| sb.sigma_by_grade(a, ng).into_iter().fold(f64::INFINITY, f64::min);
    let n = grid.len();
    let mut supports: Vec<LoopSupport> = vec![];
    for i in 0..n {
        let left = if i > 0 { profile[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < n { profile[i + 1] } else { f64::INFINITY };
        if !(profile[i] <= left && profile[i] <= right) {
            continue;
        }
        let lo = if i > 0 { grid[i - 1] } else { grid[i] };
        let hi = if i + 1 < n { grid[i + 1] } else { grid[i] };
        let (a0, val) = if lo < hi { golden_min(sig, lo, hi, 1e-13) } else { (grid[i], profile[i]) };
        if val >= tol || supports.iter().any(|s| (s.a0 - a0).abs() < 1e-7) {
            continue;
        }
        let ds = dirac_at_loop(fam, &[a0]);
        let kernel_dims: Vec<usize> = ds.iter().map(|d| if d.nrows() == 0 { 0 } else { nullspace(d, 1e-6).ncols() }).collect();
        let kernel_in_w0 = kernel_dims.iter().skip(1).all(|&k| k == 0);
        if !kernel_in_w0 {
            let g = kernel_dims.iter().skip(1).position(|&k| k > 0).unwrap() + 1;
            return Err(LoopError::SupportOutsideW0(g));
        }
        let kappa_value = fam.kappa_covector(&[a0])[fam.cartan[0]];
        supports.push(LoopSupport {
            a0,
            sigma_min: val,
            kappa_value,
            kernel_dims,
            kernel_in_w0,
            angle: 2.0 * std::f64::consts::PI * a0.abs(),
        });
    }
    let gap_ok = match &fam.v.exact {
        Some(_) => grid.iter().filter(|&&a| a > -0.5 && a < 0.0).all(|&a| energy_gap_ok(fam.cutoff, a)),
        None => true,
    };
    Ok(LoopLocalizationReport { grid: grid.to_vec(), sigma_min: profile, per_grade_sigma_min: per, supports, gap_ok })
}

/// Σ(n_i − α_i(ξ)) > 0 on every creation monomial up to the cutoff, for ξ = aζ.
pub fn energy_gap_ok(cutoff: usize, a: f64) -> bool {
    (1..=cutoff).all(|e| {
        creation_monomials(e)
            .iter()
            .all(|m| m.iter().map(|&(n, x)| n as f64 - x.root() as f64 * a).sum::<f64>() > 0.0)
    })
}

/// Max deviation between D(ξ) on W_0 and the finite-dimensional family on V_0 ⊗ S_0 at μ = κ^τ(ξ).
pub fn w0_matches_finite(fam: &LoopDiracFamily, xi: &[f64]) -> Result<f64, LoopError> {
    let alg = &fam.s.basis.algebra;
    let n0 = fam.v.exact.as_ref().map(|e| e.n0 as u32).unwrap_or(0);
    let irrep = build_irrep(&GroupSpec::SU2, &IrrepLabel::Spin(n0))?;
    let df = build_family(&irrep, alg, &fam.s.s0)?;
    let mu = fam.kappa_covector(xi);
    let d = &dirac_at_loop(fam, xi)[0];
    Ok(max_abs(&(d - df.at(&mu))))
}

pub fn bounded_transform(fam: &LoopDiracFamily, xi: &[f64]) -> Vec<CMat> {
    dirac_at_loop(fam, xi)
        .iter()
        .map(|d| if d.nrows() == 0 { d.clone() } else { herm_fn(&(d * I), |x| x / (1.0 + x * x).sqrt()) * (-I) })
        .collect()
}

/// Largest eigenvalue of F² + 1 = (1 − D²)⁻¹ on each grade.
pub fn bounded_spectrum(fam: &LoopDiracFamily, xi: &[f64]) -> Vec<f64> {
    bounded_transform(fam, xi)
        .iter()
        .map(|f| {
            if f.nrows() == 0 {
                return 0.0;
            }
            let m = f * f + eye(f.nrows());
            eigvalsh(&((&m + m.adjoint()) * cr(0.5))).into_iter().fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

pub fn su2_loop_family(k: i64, n0: u32, cutoff: usize) -> Result<LoopDiracFamily, LoopError> {
    let v = build_affine_su2_irrep(k, n0, cutoff)?;
    let tau = LevelForm::su2_tau(k);
    let metric = DMatrix::from_fn(3, 3, |i, j| tau.g_form[i][j].to_f64().unwrap_or(f64::NAN));
    let alg = structure_constants(&GroupSpec::SU2, 1.0)?.with_metric(metric);
    let s = build_spin_fock(&alg, cutoff)?;
    build_loop_dirac(v, s, &tau)
}

pub fn torus_loop_family(m: i64, mu0: i64, width: usize, cutoff: usize) -> Result<LoopDiracFamily, LoopError> {
    let tau = LevelForm::torus(vec![vec![m]], vec![false]);
    let v = build_heisenberg_rep(&tau, mu0, width, cutoff)?;
    let alg = structure_constants(&GroupSpec::Torus(1), 1.0)?.with_metric(DMatrix::from_element(1, 1, m as f64));
    let s = build_spin_fock(&alg, cutoff)?;
    build_loop_dirac(v, s, &tau)
}

/// Checks that the scan range [lo, hi] only meets orbit points whose fibers are in the window.
pub fn torus_window_covers(fam: &LoopDiracFamily, lo: f64, hi: f64) -> Result<(), LoopError> {
    let m = fam.tau.t_form[0][0].to_integer().to_i64().expect("small level");
    let r = fam.v.fiber_of.iter().map(|f| f.rem_euclid(m)).next().unwrap_or(0);
    let mut t = ((lo * m as f64 - r as f64) / m as f64).floor() as i64;
    while ((r + m * t) as f64) <= hi * m as f64 {
        let lam = r + m * t;
        if (lam as f64) >= lo * m as f64 && !fam.v.fiber_of.contains(&lam) {
            return Err(LoopError::WindowTooSmall);
        }
        t += 1;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiMap {
    pub k: i64,
    /// Window of Λ^τ values on ζ: 0..2(k+2).
    pub window: Vec<i64>,
    /// One row per level weight, 2j ascending: the sign function f_μ on the window.
    pub rows: Vec<Vec<i64>>,
    pub supports: Vec<i64>,
    pub rank: usize,
}

/// Restricted sign functions f_μ(w·μ) = sgn(w) of the localized supports μ = −(λ0+ρ).
pub fn phi_restriction_map(k: i64) -> PhiMap {
    let weights = crate::affine::enumerate_level_weights(k);
    let period = 2 * (k + 2);
    let window: Vec<i64> = (0..period.max(0)).collect();
    let mut rows = vec![];
    let mut supports = vec![];
    for w in &weights {
        let mu = w.shifted;
        supports.push(mu);
        let mut row = vec![0i64; window.len()];
        row[mu.rem_euclid(period) as usize] += 1;
        row[(-mu).rem_euclid(period) as usize] -= 1;
        rows.push(row);
    }
    let q: Vec<Vec<Rat>> = rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
    let rk = if q.is_empty() { 0 } else { rank(&q) };
    PhiMap { k, window, rows, supports, rank: rk }
}

/// A Z/2-graded representation of a finite group with a commuting Clifford action.
#[derive(Clone, Debug)]
pub struct GradedRep {
    pub grading: CMat,
    pub group: Vec<CMat>,
    pub clifford: Vec<CMat>,
}

/// An odd f with f² = −1 that commutes with the group, anticommutes with the
/// existing Clifford generators and with the grading.
pub fn extend_clifford(rep: &GradedRep) -> Option<CMat> {
    let n = rep.grading.nrows();
    let nv = n * n;
    // linear constraints on vec(f)
    let mut rows: Vec<CMat> = vec![];
    let unit = |k: usize| {
        let mut m = CMat::zeros(n, n);
        m[(k % n, k / n)] = cr(1.0);
        m
    };
    let mut constraint = |f: &dyn Fn(&CMat) -> CMat| {
        let cols: Vec<CMat> = (0..nv).map(|k| f(&unit(k))).collect();
        let mut m = CMat::zeros(nv, nv);
        for (k, col) in cols.iter().enumerate() {
            for r in 0..nv {
                m[(r, k)] = col[(r % n, r / n)];
            }
        }
        rows.push(m);
    };
    constraint(&|f| anticomm(f, &rep.grading));
    for g in &rep.group {
        constraint(&|f| comm(f, g));
    }
    for e in &rep.clifford {
        constraint(&|f| anticomm(f, e));
    }
    let stacked = CMat::from_fn(rows.len() * nv, nv, |r, c2| rows[r / nv][(r % nv, c2)]);
    let ns = nullspace(&stacked, 1e-9);
    if ns.ncols() == 0 {
        return None;
    }
    // skew-Hermitian elements of the solution space, then a generic invertible one
    let mut cands: Vec<CMat> = vec![];
    for k in 0..ns.ncols() {
        let f = CMat::from_fn(n, n, |i, j| ns[(i + j * n, k)]);
        cands.push((&f - f.adjoint()) * cr(0.5));
        cands.push((&f + f.adjoint()) * c(0.0, 0.5));
    }
    let mut f = CMat::zeros(n, n);
    for (k, m) in cands.iter().enumerate() {
        f += m * cr(1.0 + 0.37 * k as f64);
    }
    let pos = f.adjoint() * &f;
    if crate::linalg::sigma_min(&pos) < 1e-9 {
        return None;
    }
    let g = &f * herm_fn(&pos, |x| 1.0 / x.sqrt());
    Some(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GradedClass {
    /// Equivalent to zero.
    Trivial,
    Nontrivial,
}

pub fn classify_graded(rep: &GradedRep) -> GradedClass {
    if extend_clifford(rep).is_some() {
        GradedClass::Trivial
    } else {
        GradedClass::Nontrivial
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GradedRankTable {
    pub even_rank: usize,
    pub odd_rank: usize,
}

/// K-ranks for Z/2 with nontrivial grading: the (1|1) representation with x = [[0,1],[1,0]],
/// and the same with the C₁ action generated by [[0,i],[i,0]].
pub fn z2_graded_example() -> GradedRankTable {
    let x = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
    let e = CMat::from_row_slice(2, 2, &[cr(0.0), I, I, cr(0.0)]);
    let grading = CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]);
    let even = GradedRep { grading: grading.clone(), group: vec![x.clone()], clifford: vec![] };
    let odd = GradedRep { grading, group: vec![x], clifford: vec![e] };
    let count = |r: &GradedRep| usize::from(classify_graded(r) == GradedClass::Nontrivial);
    GradedRankTable { even_rank: count(&even), odd_rank: count(&odd) }
}

/// The same count for Z/2 with trivial grading: two even characters, no odd representations.
pub fn z2_trivially_graded() -> GradedRankTable {
    let one = CMat::from_element(1, 1, cr(1.0));
    let reps = [one.clone(), -one.clone()];
    let even_rank = reps
        .iter()
        .filter(|x| classify_graded(&GradedRep { grading: one.clone(), group: vec![(*x).clone()], clifford: vec![] }) == GradedClass::Nontrivial)
        .count();
    GradedRankTable { even_rank, odd_rank: 0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diracfam::sigma_matrices;

    fn su2_alg(scale: f64) -> LieAlgebraData {
        structure_constants(&GroupSpec::SU2, 1.0).unwrap().with_metric(DMatrix::identity(3, 3) * scale)
    }

    #[test]
    fn spin_fock_dimensions_and_clifford() {
        let s = build_spin_fock(&su2_alg(6.0), 1).unwrap();
        assert_eq!(s.layout.dims, vec![4, 12]);
        let s3 = build_spin_fock(&su2_alg(6.0), 3).unwrap();
        assert_eq!(s3.layout.dims, vec![4, 12, 24, 52]);
        let g = &s3.basis.algebra.metric.clone().try_inverse().unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let ac = anticomm(s3.gamma(1, a).unwrap(), s3.gamma(-1, b).unwrap());
                let blk = s3.layout.block(&ac, 0, 0);
                assert!(max_abs(&(blk + eye(4) * cr(2.0 * g[(a, b)]))) < 1e-12);
            }
        }
        assert!(s3.grading_defect() < 1e-12);
        assert!(matches!(build_spin_fock(&su2_alg(1.0), 0), Err(LoopError::CutoffTooSmall(1))));
    }

    #[test]
    fn spin_action_matches_finite_sigma() {
        let s = build_spin_fock(&su2_alg(6.0), 2).unwrap();
        let sig = sigma_matrices(&s.basis.algebra, &s.s0);
        for a in 0..3 {
            let chi = spin_loop_action(&s, 0, a).unwrap();
            assert!(max_abs(&(s.layout.block(&chi, 0, 0) - &sig[a])) < 1e-12);
        }
        // χ̇(zξ)Ω = ½ f_abc ξ^a γ^b(1)γ^c(0)Ω
        let alg = &s.basis.algebra;
        let xi = [0.3, -0.7, 0.2];
        let lhs = combo(&(0..3).map(|a| spin_loop_action(&s, 1, a).unwrap()).collect::<Vec<_>>(), &xi);
        let mut rhs = CMat::zeros(s.dim(), s.dim());
        for a in 0..3 {
            for b in 0..3 {
                for cc in 0..3 {
                    let f = alg.f_low[a][b][cc] * xi[a];
                    if f != 0.0 {
                        rhs += s.gamma(1, b).unwrap() * s.gamma(0, cc).unwrap() * cr(0.5 * f);
                    }
                }
            }
        }
        let cols = s.layout.dims[0];
        assert!(max_abs(&(lhs - rhs).columns(0, cols).into_owned()) < 1e-12);
        let t = build_spin_fock(&structure_constants(&GroupSpec::Torus(1), 1.0).unwrap(), 2).unwrap();
        assert_eq!(max_abs(&spin_loop_action(&t, 1, 0).unwrap()), 0.0);
        assert!(spin_loop_action(&t, 3, 0).is_err());
    }

    #[test]
    fn spin_cocycle_values() {
        let alg = su2_alg(1.0);
        let s = build_spin_fock(&alg, 1).unwrap();
        let z = [1.0, 0.0, 0.0];
        // −½Tr(ad ζ ad ζ) = 4
        assert_eq!(spin_cocycle(&s, &z, &z).unwrap(), int(4));
        assert_eq!(spin_cocycle(&s, &z, &[0.0, 1.0, 0.0]).unwrap(), Rat::zero());
        let basic = DMatrix::identity(3, 3) * 2.0;
        assert_eq!(spin_level(&s, &GroupSpec::SU2, &basic).unwrap(), int(2));
        // metric independent
        let s6 = build_spin_fock(&su2_alg(6.0), 1).unwrap();
        assert_eq!(spin_cocycle(&s6, &z, &z).unwrap(), int(4));
        let t = build_spin_fock(&structure_constants(&GroupSpec::Torus(1), 1.0).unwrap(), 1).unwrap();
        assert_eq!(spin_cocycle(&t, &[1.0], &[1.0]).unwrap(), Rat::zero());
    }

    #[test]
    fn q_properties() {
        let s = build_spin_fock(&su2_alg(6.0), 3).unwrap();
        let q = build_q(&s).unwrap();
        assert!(q.residual < 1e-10);
        assert!(max_abs(&anticomm(&q.matrix, &s.grading)) < 1e-12);
        // finite cubic term: (i/2)Q on grade 0 = (i/12) f γγγ = (i/3)γ^aσ_a
        let sig = sigma_matrices(&s.basis.algebra, &s.s0);
        let mut cubic = CMat::zeros(4, 4);
        for a in 0..3 {
            cubic += &s.s0.gammas[a] * &sig[a] * (I / 3.0);
        }
        assert!(max_abs(&(s.layout.block(&q.matrix, 0, 0) * (I * 0.5) - cubic)) < 1e-12);
        let t = build_spin_fock(&structure_constants(&GroupSpec::Torus(1), 1.0).unwrap(), 2).unwrap();
        assert_eq!(max_abs(&build_q(&t).unwrap().matrix), 0.0);
    }

    #[test]
    fn shapovalov_dimensions() {
        let v = build_affine_su2_irrep(1, 0, 3).unwrap();
        assert_eq!(v.layout.dims, vec![1, 3, 4, 7]);
        let ex = v.exact.as_ref().unwrap();
        assert_eq!(ex.basis[1].len(), ex.spanning[1].len());
        assert!(exact_relations_hold(ex, 3));
        let z = build_affine_su2_irrep(0, 0, 3).unwrap();
        assert_eq!(z.layout.dims, vec![1, 0, 0, 0]);
        assert!(z.modes.iter().filter(|(k, _)| k.0 > 0).all(|(_, m)| max_abs(m) == 0.0));
        assert!(matches!(build_affine_su2_irrep(-1, 0, 2), Err(LoopError::NoRepresentations(-1))));
        assert!(build_affine_su2_irrep(1, 2, 2).is_err());
        let f = build_affine_su2_irrep(1, 1, 3).unwrap();
        assert_eq!(f.layout.dims[0], 2);
    }

    #[test]
    fn shapovalov_relations_in_floats() {
        for (k, n0) in [(1, 0), (1, 1), (2, 1), (2, 2)] {
            let v = build_affine_su2_irrep(k, n0, 3).unwrap();
            let basic = DMatrix::identity(3, 3) * (2.0 * k as f64);
            let alg = su2_alg(1.0);
            assert!(v.commutator_defect(&alg, &basic) < 1e-10, "k={k} n0={n0}");
            assert!(v.adjoint_defect() < 1e-10);
            let irrep = build_irrep(&GroupSpec::SU2, &IrrepLabel::Spin(n0)).unwrap();
            for a in 0..3 {
                let r0 = v.layout.block(v.op(0, a).unwrap(), 0, 0);
                assert!(max_abs(&(r0 - &irrep.actions[a])) < 1e-12);
            }
        }
    }

    #[test]
    fn heisenberg_fibers() {
        let form = LevelForm::torus(vec![vec![1]], vec![false]);
        let v = build_heisenberg_rep(&form, 0, 1, 2).unwrap();
        assert_eq!(v.layout.dims, vec![1, 1, 2]);
        let f2 = LevelForm::torus(vec![vec![2]], vec![false]);
        let w = build_heisenberg_rep(&f2, 1, 5, 3).unwrap();
        assert_eq!(w.layout.dims, vec![5, 5, 10, 15]);
        let basic = DMatrix::from_element(1, 1, 2.0);
        let alg = structure_constants(&GroupSpec::Torus(1), 1.0).unwrap();
        assert!(w.commutator_defect(&alg, &basic) < 1e-12);
        assert!(w.adjoint_defect() < 1e-12);
        let grade0: Vec<f64> = (0..5).map(|i| w.energy[i] - (w.fiber_of[i] as f64).powi(2) / 4.0).collect();
        assert!(grade0.iter().all(|&e| e == 0.0));
        let p = pi_translation(&w, 1);
        let x = w.op(2, 0).unwrap();
        assert!(max_abs(&comm(&p, x).columns(0, 5).into_owned()) < 1e-12);
        let odd = build_heisenberg_rep(&LevelForm::torus(vec![vec![2]], vec![true]), 1, 5, 1).unwrap();
        let par = CMat::from_diagonal(&nalgebra::DVector::from_iterator(odd.dim(), odd.parity.iter().map(|&x| cr(x as f64))));
        let pt = pi_translation(&odd, 1);
        let inner = anticomm(&pt, &par);
        assert!(max_abs(&inner) < 1e-12);
    }

    #[test]
    fn loop_family_su2_level_one() {
        let fam = su2_loop_family(1, 0, 2).unwrap();
        let r = weitzenbock_loop(&fam, &[vec![0.0], vec![-0.2], vec![-0.4]]).unwrap();
        assert!(r.scalar_defect < 1e-9 && r.spread < 1e-9, "{r:?}");
        assert!(r.skew_defect < 1e-12 && r.odd_defect < 1e-12 && r.energy_commutator < 1e-9);
        assert!(w0_matches_finite(&fam, &[-0.17]).unwrap() < 1e-12);
        let d1 = dirac_at_loop(&fam, &[-0.1]);
        let d2 = dirac_at_loop(&fam, &[-0.3]);
        let mu = fam.kappa_covector(&[-0.2]);
        for (g, (x, y)) in d1.iter().zip(&d2).enumerate() {
            assert!(max_abs(&(y - x - fam.gamma_of(g, &mu))) < 1e-12);
        }
    }

    #[test]
    fn bounded_transform_scalar_rule() {
        let fam = torus_loop_family(1, 0, 3, 2).unwrap();
        let f = bounded_transform(&fam, &[0.3]);
        let d = dirac_at_loop(&fam, &[0.3]);
        for (fm, dm) in f.iter().zip(&d) {
            let dv = eigvalsh(&(dm * I));
            let fv = eigvalsh(&(fm * I));
            for (x, y) in dv.iter().zip(&fv) {
                assert!((x / (1.0 + x * x).sqrt() - y).abs() < 1e-12);
            }
        }
        let zero = CMat::zeros(2, 2);
        assert_eq!(max_abs(&(herm_fn(&(&zero * I), |x| x / (1.0 + x * x).sqrt()))), 0.0);
    }

    #[test]
    fn phi_examples() {
        let p0 = phi_restriction_map(0);
        assert_eq!(p0.rows.len(), 1);
        assert_eq!(p0.rows[0].iter().filter(|&&x| x != 0).count(), 2);
        let p2 = phi_restriction_map(2);
        assert_eq!(p2.rank, 3);
        for k in 0..=6 {
            assert_eq!(phi_restriction_map(k).rank as i64, k + 1);
        }
    }

    #[test]
    fn graded_example_table() {
        let t = z2_graded_example();
        assert_eq!((t.even_rank, t.odd_rank), (0, 1));
        let u = z2_trivially_graded();
        assert_eq!((u.even_rank, u.odd_rank), (2, 0));
    }
}
