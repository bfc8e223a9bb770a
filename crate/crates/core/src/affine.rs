//! Level forms, affine Weyl combinatorics, orbit counts and the mode model of the
//! centrally extended loop algebra. Lattice arithmetic is exact.

use crate::exact::{int, is_integer, solve, to_f64, Rat, QC};
use crate::linalg::{cr, CMat, I};
use crate::liegroup::{GroupSpec, LieAlgebraData, Level};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AffineError {
    #[error("form is degenerate")]
    Degenerate,
    #[error("form is not positive definite")]
    NotPositiveDefinite,
    #[error("not a level: {0}")]
    NotALevel(String),
    #[error("unsupported group: {0}")]
    Unsupported(String),
    #[error("level mismatch: {0:?} vs {1:?}")]
    LevelMismatch(Level, Level),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type QMat = Vec<Vec<Rat>>;

fn det(m: &QMat) -> Rat {
    let n = m.len();
    let mut a = m.clone();
    let mut d = Rat::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rat::zero();
        };
        if p != col {
            a.swap(p, col);
            d = -d;
        }
        d *= a[col][col].clone();
        for r in col + 1..n {
            let f = &a[r][col] / &a[col][col];
            for c in col..n {
                let v = &f * &a[col][c];
                a[r][c] -= v;
            }
        }
    }
    d
}

fn mat_vec(m: &QMat, v: &[Rat]) -> Vec<Rat> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn pair(m: &QMat, u: &[Rat], v: &[Rat]) -> Rat {
    u.iter().zip(mat_vec(m, v)).map(|(a, b)| a * b).sum()
}

/// Structure constants with rational entries, f[a][b][c] = f^c_ab.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactAlgebra {
    pub dim: usize,
    pub f: Vec<Vec<Vec<Rat>>>,
}

impl ExactAlgebra {
    pub fn abelian(dim: usize) -> Self {
        ExactAlgebra { dim, f: vec![vec![vec![Rat::zero(); dim]; dim]; dim] }
    }

    pub fn from_lie(alg: &LieAlgebraData) -> Self {
        let q = |x: f64| crate::exact::approx_rational(x, 1000, 1e-9).expect("rational structure constants");
        let n = alg.dim;
        let f = (0..n).map(|a| (0..n).map(|b| (0..n).map(|c| q(alg.f_up[a][b][c])).collect()).collect()).collect();
        ExactAlgebra { dim: n, f }
    }

    pub fn bracket(&self, x: &[QC], y: &[QC]) -> Vec<QC> {
        let mut out = vec![QC::zero(); self.dim];
        for a in 0..self.dim {
            if x[a].is_zero() {
                continue;
            }
            for b in 0..self.dim {
                if y[b].is_zero() {
                    continue;
                }
                let xy = &x[a] * &y[b];
                for (c, o) in out.iter_mut().enumerate() {
                    if !self.f[a][b][c].is_zero() {
                        *o = &*o + &xy.scale(&self.f[a][b][c]);
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelForm {
    pub group: GroupSpec,
    pub tag: Level,
    /// Form on t in the basis of Π.
    pub t_form: QMat,
    /// Form on g in the algebra basis.
    pub g_form: QMat,
    pub algebra: ExactAlgebra,
    /// ε on the generators of Π.
    pub grading: Vec<bool>,
    /// Multiple of the basic form, for simple groups.
    pub level: Option<i64>,
    /// Values of the positive roots on the Π basis.
    pub positive_roots: Vec<Vec<i64>>,
    /// Finite Weyl group acting on Π-coordinates.
    pub weyl: Vec<Vec<Vec<i64>>>,
}

impl LevelForm {
    /// `multiple`·basic on su(2); the basic form is −Tr, so ⟨ζ,ζ⟩ = 2 for the coroot ζ.
    pub fn su2(multiple: i64, tag: Level) -> Self {
        let alg = crate::liegroup::structure_constants(&GroupSpec::SU2, 1.0).expect("su2");
        let m = int(2 * multiple);
        let g_form = (0..3).map(|i| (0..3).map(|j| if i == j { m.clone() } else { Rat::zero() }).collect()).collect();
        LevelForm {
            group: GroupSpec::SU2,
            tag,
            t_form: vec![vec![m]],
            g_form,
            algebra: ExactAlgebra::from_lie(&alg),
            grading: vec![false],
            level: Some(multiple),
            positive_roots: vec![vec![2]],
            weyl: vec![vec![vec![1]], vec![vec![-1]]],
        }
    }

    /// The form τ of the level-k central extension: (k+2)·basic.
    pub fn su2_tau(k: i64) -> Self {
        Self::su2(k + 2, Level::Tau)
    }

    /// τ−σ: k·basic.
    pub fn su2_tau_minus_sigma(k: i64) -> Self {
        Self::su2(k, Level::TauMinusSigma)
    }

    pub fn torus(form: Vec<Vec<i64>>, grading: Vec<bool>) -> Self {
        let n = form.len();
        let t_form: QMat = form.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
        LevelForm {
            group: GroupSpec::Torus(n),
            tag: Level::Tau,
            g_form: t_form.clone(),
            t_form,
            algebra: ExactAlgebra::abelian(n),
            grading,
            level: None,
            positive_roots: vec![],
            weyl: vec![(0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()],
        }
    }

    pub fn rank(&self) -> usize {
        self.t_form.len()
    }

    pub fn is_positive_definite(&self) -> bool {
        (1..=self.rank()).all(|k| {
            let minor: QMat = self.t_form[..k].iter().map(|r| r[..k].to_vec()).collect();
            det(&minor).is_positive()
        })
    }

    pub fn inner_t(&self, u: &[Rat], v: &[Rat]) -> Rat {
        pair(&self.t_form, u, v)
    }

    pub fn inner_g(&self, x: &[QC], y: &[QC]) -> QC {
        let mut s = QC::zero();
        for (a, xa) in x.iter().enumerate() {
            for (b, yb) in y.iter().enumerate() {
                if !self.g_form[a][b].is_zero() {
                    s = &s + &(xa * yb).scale(&self.g_form[a][b]);
                }
            }
        }
        s
    }
}

/// A point of the affine space A^τ_T written relative to the split basepoint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorsorPoint {
    pub level: Level,
    /// Values on the Π basis.
    pub offset: Vec<String>,
    #[serde(skip)]
    pub coords: Vec<Rat>,
}

impl TorsorPoint {
    pub fn new(level: Level, coords: Vec<Rat>) -> Self {
        TorsorPoint { level, offset: coords.iter().map(|q| q.to_string()).collect(), coords }
    }

    pub fn difference(&self, other: &TorsorPoint) -> Result<Vec<Rat>, AffineError> {
        if self.level != other.level {
            return Err(AffineError::LevelMismatch(self.level, other.level));
        }
        Ok(self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect())
    }

    pub fn is_lattice_point(&self) -> bool {
        self.coords.iter().all(is_integer)
    }
}

/// κ(ξ)(η) = ⟨ξ,η⟩, as values on the Π basis.
pub fn kappa(form: &LevelForm, xi: &[Rat]) -> Result<TorsorPoint, AffineError> {
    if xi.len() != form.rank() {
        return Err(AffineError::DimensionMismatch { expected: form.rank(), got: xi.len() });
    }
    if det(&form.t_form).is_zero() {
        return Err(AffineError::Degenerate);
    }
    Ok(TorsorPoint::new(form.tag, mat_vec(&form.t_form, xi)))
}

pub fn kappa_inverse(form: &LevelForm, mu: &[Rat]) -> Result<Vec<Rat>, AffineError> {
    solve(&form.t_form, mu).ok_or(AffineError::Degenerate)
}

/// Element ξ ↦ sξ + t of Π ⋊ W.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WaffElement {
    pub s: Vec<Vec<i64>>,
    pub t: Vec<i64>,
}

impl WaffElement {
    pub fn identity(rank: usize) -> Self {
        WaffElement { s: (0..rank).map(|i| (0..rank).map(|j| i64::from(i == j)).collect()).collect(), t: vec![0; rank] }
    }

    pub fn compose(&self, o: &WaffElement) -> WaffElement {
        let n = self.t.len();
        let s = (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| self.s[i][k] * o.s[k][j]).sum()).collect()).collect();
        let t = (0..n).map(|i| (0..n).map(|k| self.s[i][k] * o.t[k]).sum::<i64>() + self.t[i]).collect();
        WaffElement { s, t }
    }

    pub fn act(&self, xi: &[Rat]) -> Vec<Rat> {
        (0..xi.len())
            .map(|i| (0..xi.len()).map(|k| int(self.s[i][k]) * &xi[k]).sum::<Rat>() + int(self.t[i]))
            .collect()
    }

    /// Action on Λ^τ: μ ↦ sμ + κ(t). In scope W acts by ±1, so no transpose is needed.
    pub fn act_weight(&self, form: &LevelForm, mu: &[BigInt]) -> Vec<BigInt> {
        let n = mu.len();
        (0..n)
            .map(|i| {
                let rot: BigInt = (0..n).map(|k| BigInt::from(self.s[i][k]) * &mu[k]).sum();
                let shift: Rat = (0..n).map(|k| &form.t_form[i][k] * int(self.t[k])).sum();
                rot + shift.to_integer()
            })
            .collect()
    }

    pub fn sign(&self) -> i64 {
        let m: QMat = self.s.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
        det(&m).to_integer().to_i64().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AlcoveMembership {
    Interior,
    Boundary,
    Outside,
}

fn require_simply_connected(group: &GroupSpec) -> Result<(), AffineError> {
    match group {
        GroupSpec::SU2 => Ok(()),
        g => Err(AffineError::Unsupported(g.to_string())),
    }
}

/// Alcove −1 < α(ξ) < 0 for α ∈ Δ⁺, ξ in Π coordinates.
pub fn alcove_membership(group: &GroupSpec, xi: &[Rat]) -> Result<AlcoveMembership, AffineError> {
    require_simply_connected(group)?;
    let form = LevelForm::su2(1, Level::Plain);
    let mut boundary = false;
    for alpha in &form.positive_roots {
        let v: Rat = alpha.iter().zip(xi).map(|(&a, x)| int(a) * x).sum();
        if v < int(-1) || v > Rat::zero() {
            return Ok(AlcoveMembership::Outside);
        }
        if v == int(-1) || v.is_zero() {
            boundary = true;
        }
    }
    Ok(if boundary { AlcoveMembership::Boundary } else { AlcoveMembership::Interior })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fold {
    #[serde(skip)]
    pub point: Vec<Rat>,
    pub point_str: Vec<String>,
    pub element: WaffElement,
}

/// Folds ξ into the closed alcove. On walls the element with s = +1 wins, then the smallest |t|.
pub fn fold_to_alcove(group: &GroupSpec, xi: &[Rat]) -> Result<Fold, AffineError> {
    require_simply_connected(group)?;
    let a = &xi[0];
    let fl = a.floor().to_integer().to_i64().expect("coordinate fits i64");
    let mut best: Option<WaffElement> = None;
    for s in [1i64, -1] {
        for t in fl - 2..=fl + 2 {
            let cand = WaffElement { s: vec![vec![s]], t: vec![-s * t] };
            let img = cand.act(xi);
            if alcove_membership(group, &img)? == AlcoveMembership::Outside {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => (s == 1 && b.s[0][0] == -1) || (s == b.s[0][0] && cand.t[0].abs() < b.t[0].abs()),
            };
            if better {
                best = Some(cand);
            }
        }
    }
    let element = best.expect("alcove is a fundamental domain");
    let point = element.act(xi);
    Ok(Fold { point_str: point.iter().map(|q| q.to_string()).collect(), point, element })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelWeight {
    /// 2j of the lowest-weight representation.
    pub j2: u32,
    /// −λ on the coroot.
    pub lowest: i64,
    /// −(λ+ρ) on the coroot.
    pub shifted: i64,
}

/// Antidominant weights −λ in κ^{τ−σ}(ā) ∩ Λ at level k.
pub fn enumerate_level_weights(k: i64) -> Vec<LevelWeight> {
    if k < 0 {
        return vec![];
    }
    let form = LevelForm::su2_tau_minus_sigma(k);
    let lo = mat_vec(&form.t_form, &[rat_half_neg()])[0].clone();
    let hi = Rat::zero();
    let (lo, hi) = (lo.ceil().to_integer(), hi.floor().to_integer());
    let mut out = vec![];
    let mut n = lo;
    while n <= hi {
        let v = n.to_i64().expect("small level");
        out.push(LevelWeight { j2: (-v) as u32, lowest: v, shifted: v - 1 });
        n += 1;
    }
    out.sort_by_key(|w| w.j2);
    out
}

fn rat_half_neg() -> Rat {
    Rat::new(BigInt::from(-1), BigInt::from(2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitInfo {
    pub representative: Vec<i64>,
    pub size_mod_lattice: usize,
    pub stabilizer: Vec<WaffElement>,
    pub regular: bool,
    /// sgn(w)·(−1)^{ε(X)} is trivial on the stabilizer.
    pub compatible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitTable {
    pub cosets: usize,
    pub orbits: Vec<OrbitInfo>,
    pub regular_count: usize,
    pub rank: usize,
}

/// Representatives of Λ^τ / κ(Π).
fn lattice_cosets(form: &LevelForm) -> Result<Vec<Vec<BigInt>>, AffineError> {
    let d = det(&form.t_form).abs().to_integer();
    if d.is_zero() {
        return Err(AffineError::Degenerate);
    }
    let n = form.rank();
    let bound = d.to_i64().expect("small determinant");
    let mut reps: Vec<Vec<BigInt>> = vec![];
    let mut idx = vec![0i64; n];
    loop {
        let v: Vec<BigInt> = idx.iter().map(|&x| BigInt::from(x)).collect();
        if !reps.iter().any(|r| same_coset(form, r, &v)) {
            reps.push(v);
        }
        let mut k = 0;
        loop {
            if k == n {
                return Ok(reps);
            }
            idx[k] += 1;
            if idx[k] < bound {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn lattice_preimage(form: &LevelForm, diff: &[BigInt]) -> Option<Vec<i64>> {
    let rhs: Vec<Rat> = diff.iter().map(|x| Rat::from_integer(x.clone())).collect();
    let x = solve(&form.t_form, &rhs)?;
    if x.iter().all(is_integer) {
        Some(x.iter().map(|q| q.to_integer().to_i64().expect("small")).collect())
    } else {
        None
    }
}

fn same_coset(form: &LevelForm, a: &[BigInt], b: &[BigInt]) -> bool {
    let d: Vec<BigInt> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    lattice_preimage(form, &d).is_some()
}

pub fn regular_orbits(form: &LevelForm) -> Result<OrbitTable, AffineError> {
    if !form.is_positive_definite() {
        return Err(AffineError::NotPositiveDefinite);
    }
    let cosets = lattice_cosets(form)?;
    let n = form.rank();
    let mut assigned = vec![false; cosets.len()];
    let mut orbits = vec![];
    for i in 0..cosets.len() {
        if assigned[i] {
            continue;
        }
        let mu = &cosets[i];
        let mut size = 0;
        let mut stabilizer = vec![];
        for s in &form.weyl {
            let w0 = WaffElement { s: s.clone(), t: vec![0; n] };
            let img = w0.act_weight(form, mu);
            for (j, c) in cosets.iter().enumerate() {
                if !assigned[j] && same_coset(form, &img, c) {
                    assigned[j] = true;
                    size += 1;
                }
            }
            // sμ + κ(t) = μ
            let diff: Vec<BigInt> = mu.iter().zip(&img).map(|(a, b)| a - b).collect();
            if let Some(t) = lattice_preimage(form, &diff) {
                stabilizer.push(WaffElement { s: s.clone(), t });
            }
        }
        let compatible = stabilizer.iter().all(|w| {
            let eps = w.t.iter().zip(&form.grading).filter(|(t, &g)| g && t.is_odd()).count();
            w.sign() * if eps % 2 == 0 { 1 } else { -1 } == 1
        });
        orbits.push(OrbitInfo {
            representative: mu.iter().map(|x| x.to_i64().expect("small")).collect(),
            size_mod_lattice: size,
            regular: stabilizer.len() == 1,
            stabilizer,
            compatible,
        });
    }
    let regular_count = orbits.iter().filter(|o| o.regular).count();
    let rank = orbits.iter().filter(|o| o.compatible).count();
    Ok(OrbitTable { cosets: cosets.len(), orbits, regular_count, rank })
}

pub fn k_group_rank(form: &LevelForm) -> Result<usize, AffineError> {
    Ok(regular_orbits(form)?.rank)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerlindeClass {
    pub ell: u32,
    /// θ = πℓ/(k+2)
    pub theta: f64,
    /// Eigenvalue angles ±2πℓ/(2(k+2)) of exp(2πξ0).
    pub eigen_angles: [f64; 2],
    /// ξ0 = a0·ζ with a0 = −ℓ/(2(k+2)).
    pub a0: String,
    /// 2j of the matching lowest-weight representation.
    pub j2: u32,
}

pub fn verlinde_classes(k: i64) -> Vec<VerlindeClass> {
    if k < 0 {
        return vec![];
    }
    let h = k + 2;
    (1..=k + 1)
        .map(|ell| {
            let theta = std::f64::consts::PI * ell as f64 / h as f64;
            VerlindeClass {
                ell: ell as u32,
                theta,
                eigen_angles: [theta, -theta],
                a0: Rat::new(BigInt::from(-ell), BigInt::from(2 * h)).to_string(),
                j2: (ell - 1) as u32,
            }
        })
        .collect()
}

pub fn verlinde_a0(k: i64, ell: i64) -> Rat {
    Rat::new(BigInt::from(-ell), BigInt::from(2 * (k + 2)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeBracket {
    pub mode: i64,
    pub loop_part: Vec<QC>,
    /// Coefficient of K/i.
    pub central: QC,
}

/// [z^nξ, z^mη] = z^{n+m}[ξ,η] + n⟨ξ,η⟩δ_{n+m,0} K/i.
pub fn mode_cocycle(form: &LevelForm, n: i64, xi: &[QC], m: i64, eta: &[QC]) -> ModeBracket {
    let central = if n + m == 0 { form.inner_g(xi, eta).scale(&int(n)) } else { QC::zero() };
    ModeBracket { mode: n + m, loop_part: form.algebra.bracket(xi, eta), central }
}

/// Element of Lg_C ⊕ CK ⊕ Cd with finitely many modes.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineElement {
    pub modes: BTreeMap<i64, Vec<QC>>,
    pub k: QC,
    pub d: QC,
}

impl AffineElement {
    pub fn zero() -> Self {
        AffineElement { modes: BTreeMap::new(), k: QC::zero(), d: QC::zero() }
    }

    pub fn mode(n: i64, xi: Vec<QC>) -> Self {
        let mut e = Self::zero();
        e.modes.insert(n, xi);
        e
    }

    pub fn central() -> Self {
        AffineElement { k: QC::one(), ..Self::zero() }
    }

    pub fn derivation() -> Self {
        AffineElement { d: QC::one(), ..Self::zero() }
    }

    fn add_mode(&mut self, n: i64, v: Vec<QC>) {
        match self.modes.get_mut(&n) {
            Some(cur) => {
                for (c, x) in cur.iter_mut().zip(&v) {
                    *c = &*c + x;
                }
            }
            None => {
                self.modes.insert(n, v);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.k.is_zero() && self.d.is_zero() && self.modes.values().all(|v| v.iter().all(QC::is_zero))
    }

    pub fn sub(&self, o: &AffineElement) -> AffineElement {
        let mut r = self.clone();
        r.k = &r.k - &o.k;
        r.d = &r.d - &o.d;
        for (n, v) in &o.modes {
            r.add_mode(*n, v.iter().map(|x| -x).collect());
        }
        r
    }
}

/// Bracket with K = i central, [d, z^nξ] = in z^nξ and the central cocycle valued in K/i.
pub fn affine_bracket(form: &LevelForm, x: &AffineElement, y: &AffineElement) -> AffineElement {
    let mut out = AffineElement::zero();
    let minus_i = QC::new(Rat::zero(), int(-1));
    for (&n, xi) in &x.modes {
        for (&m, eta) in &y.modes {
            let mb = mode_cocycle(form, n, xi, m, eta);
            out.add_mode(mb.mode, mb.loop_part);
            // K/i = −iK
            out.k = &out.k + &(&mb.central * &minus_i);
        }
    }
    let scale_modes = |src: &BTreeMap<i64, Vec<QC>>, c: &QC, sign: i64, out: &mut AffineElement| {
        for (&n, v) in src {
            let f = &(c * &QC::i()).scale(&int(n * sign));
            out.add_mode(n, v.iter().map(|a| a * f).collect());
        }
    };
    if !x.d.is_zero() {
        scale_modes(&y.modes, &x.d, 1, &mut out);
    }
    if !y.d.is_zero() {
        scale_modes(&x.modes, &y.d, -1, &mut out);
    }
    out
}

/// ⟨⟨·,·⟩⟩: L² pairing on loops, ⟨⟨K,d⟩⟩ = −1, K and d null.
pub fn affine_form(form: &LevelForm, x: &AffineElement, y: &AffineElement) -> QC {
    let mut s = QC::zero();
    for (&n, xi) in &x.modes {
        if let Some(eta) = y.modes.get(&-n) {
            s = &s + &form.inner_g(xi, eta);
        }
    }
    let kd = &(&x.k * &y.d) + &(&x.d * &y.k);
    &s - &kd
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantFormReport {
    pub k_d: String,
    pub k_k_zero: bool,
    pub d_d_zero: bool,
    pub k_loop_zero: bool,
    /// ⟨⟨z^nξ, z^{−n}η⟩⟩ recovered from invariance against d equals ⟨ξ,η⟩ for n ≠ 0.
    pub l2_from_invariance: bool,
    pub off_diagonal_zero: bool,
    pub invariance: bool,
    pub jacobi: bool,
    pub all: bool,
}

fn basis_elements(form: &LevelForm, max_mode: i64) -> Vec<AffineElement> {
    let dim = form.algebra.dim;
    let mut els = vec![AffineElement::central(), AffineElement::derivation()];
    for n in -max_mode..=max_mode {
        for a in 0..dim {
            let mut v = vec![QC::zero(); dim];
            v[a] = QC::one();
            els.push(AffineElement::mode(n, v));
        }
    }
    els
}

pub fn invariant_form_checks(form: &LevelForm, max_mode: i64) -> InvariantFormReport {
    let els = basis_elements(form, max_mode);
    let (kk, dd) = (AffineElement::central(), AffineElement::derivation());
    let k_d = affine_form(form, &kk, &dd);
    let loops = &els[2..];
    let k_loop_zero = loops.iter().all(|x| affine_form(form, &kk, x).is_zero());
    let dim = form.algebra.dim;
    let mut l2 = true;
    let mut off = true;
    for x in loops {
        for y in loops {
            let (n, xi) = x.modes.iter().next().expect("mode");
            let (m, eta) = y.modes.iter().next().expect("mode");
            let val = affine_form(form, x, y);
            if n + m != 0 {
                off &= val.is_zero();
            } else if *n != 0 {
                // ⟨⟨[z^nξ, z^{−n}η], d⟩⟩ = in⟨⟨z^nξ, z^{−n}η⟩⟩
                let lhs = affine_form(form, &affine_bracket(form, x, y), &dd);
                let derived = lhs.div(&QC::new(Rat::zero(), int(*n)));
                l2 &= derived == form.inner_g(xi, eta) && val == derived;
            }
        }
    }
    let mut invariance = true;
    let mut jacobi = true;
    for x in &els {
        for y in &els {
            let xy = affine_bracket(form, x, y);
            for w in &els {
                let yw = affine_bracket(form, y, w);
                invariance &= affine_form(form, &xy, w) == affine_form(form, x, &yw);
                if dim > 0 {
                    let t1 = affine_bracket(form, x, &yw);
                    let t2 = affine_bracket(form, &xy, w);
                    let t3 = affine_bracket(form, y, &affine_bracket(form, x, w));
                    jacobi &= t1.sub(&t2).sub(&t3).is_zero();
                }
            }
        }
    }
    let k_k_zero = affine_form(form, &kk, &kk).is_zero();
    let d_d_zero = affine_form(form, &dd, &dd).is_zero();
    let all = k_d == QC::real(int(-1)) && k_k_zero && d_d_zero && k_loop_zero && l2 && off && invariance && jacobi;
    InvariantFormReport {
        k_d: format!("{}", to_f64(&k_d.re)),
        k_k_zero,
        d_d_zero,
        k_loop_zero,
        l2_from_invariance: l2,
        off_diagonal_zero: off,
        invariance,
        jacobi,
        all,
    }
}

#[derive(Clone, Debug)]
pub struct EnergyShift {
    pub energy: CMat,
    /// Actions of the Cartan basis under the shifted splitting.
    pub cartan_actions: Vec<CMat>,
}

/// E_{A'} = E_A + iρ̇_A(β) + ⟨⟨β,β⟩⟩/2 for constant β ∈ t. The shifted splitting changes
/// the lift of η ∈ t by −⟨⟨β,η⟩⟩K.
pub fn energy_shift(
    energy: &CMat,
    cartan_actions: &[CMat],
    beta: &[f64],
    form: &LevelForm,
) -> Result<EnergyShift, AffineError> {
    let r = form.rank();
    if beta.len() != r || cartan_actions.len() != r {
        return Err(AffineError::DimensionMismatch { expected: r, got: beta.len().min(cartan_actions.len()) });
    }
    let n = energy.nrows();
    if let Some(bad) = cartan_actions.iter().find(|m| m.nrows() != n || m.ncols() != n) {
        return Err(AffineError::DimensionMismatch { expected: n, got: bad.nrows() });
    }
    let b: Vec<Vec<f64>> = form.t_form.iter().map(|row| row.iter().map(to_f64).collect()).collect();
    let pair_b = |u: &[f64], v: &[f64]| -> f64 { (0..r).map(|i| (0..r).map(|j| u[i] * b[i][j] * v[j]).sum::<f64>()).sum() };
    let mut e = energy + CMat::identity(n, n) * cr(pair_b(beta, beta) / 2.0);
    for (act, &x) in cartan_actions.iter().zip(beta) {
        e += act * (I * x);
    }
    let shifted = (0..r)
        .map(|k| {
            let mut unit = vec![0.0; r];
            unit[k] = 1.0;
            &cartan_actions[k] - CMat::identity(n, n) * (I * pair_b(beta, &unit))
        })
        .collect();
    Ok(EnergyShift { energy: e, cartan_actions: shifted })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeisenbergData {
    /// κ_X = −BX on Π → Λ.
    pub kappa: Vec<Vec<i64>>,
    /// ⟨X,ξ⟩ = −κ̇_X(ξ).
    pub pairing: Vec<Vec<i64>>,
    pub symmetric: bool,
    pub even: bool,
    /// Degree of the rotation cover needed.
    pub delta: u8,
}

pub fn heisenberg_structure(form: &LevelForm) -> Result<HeisenbergData, AffineError> {
    if !matches!(form.group, GroupSpec::Torus(_)) {
        return Err(AffineError::Unsupported(form.group.to_string()));
    }
    let n = form.rank();
    let mut pairing = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let q = &form.t_form[i][j];
            if !is_integer(q) {
                return Err(AffineError::NotALevel(format!("entry ({i},{j}) = {q}")));
            }
            pairing[i][j] = q.to_integer().to_i64().expect("small");
        }
    }
    let symmetric = (0..n).all(|i| (0..n).all(|j| pairing[i][j] == pairing[j][i]));
    if !symmetric {
        return Err(AffineError::NotALevel("pairing is not symmetric".into()));
    }
    let even = (0..n).all(|i| pairing[i][i] % 2 == 0);
    let kappa = pairing.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
    Ok(HeisenbergData { kappa, pairing, symmetric, even, delta: if even { 1 } else { 2 } })
}

/// Grading of the spin extension of LU(2) on the generator loop. Taken as given; the
/// polarization computation behind it is not implemented.
pub const U2_SPIN_GRADING_NONTRIVIAL: bool = true;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rank, rat};
    use crate::linalg::{c, max_abs};
    use proptest::prelude::*;

    #[test]
    fn kappa_is_multiplication() {
        for k in 0..5 {
            let t = LevelForm::su2_tau(k);
            let a = rat(-1, 3);
            // identified with t ≅ iR through the basic form, κ^τ is multiplication by k+2
            assert_eq!(kappa(&t, std::slice::from_ref(&a)).unwrap().coords[0], int(2 * (k + 2)) * &a);
            let s = LevelForm::su2_tau_minus_sigma(k);
            match kappa(&s, std::slice::from_ref(&a)) {
                Ok(p) => assert_eq!(p.coords[0], int(2 * k) * &a),
                Err(e) => assert!(k == 0 && e == AffineError::Degenerate),
            }
            assert_eq!(kappa(&t, &[Rat::zero()]).unwrap().coords, vec![Rat::zero()]);
        }
        assert_eq!(kappa(&LevelForm::su2_tau_minus_sigma(0), &[int(1)]), Err(AffineError::Degenerate));
        let p = kappa(&LevelForm::su2_tau(1), &[int(1)]).unwrap();
        let q = kappa(&LevelForm::su2_tau_minus_sigma(1), &[int(1)]).unwrap();
        assert!(p.difference(&q).is_err());
        assert!(p.is_lattice_point());
    }

    #[test]
    fn alcove_examples() {
        let g = GroupSpec::SU2;
        assert_eq!(alcove_membership(&g, &[rat(-1, 4)]).unwrap(), AlcoveMembership::Interior);
        assert_eq!(alcove_membership(&g, &[Rat::zero()]).unwrap(), AlcoveMembership::Boundary);
        assert_eq!(alcove_membership(&g, &[rat(-1, 2)]).unwrap(), AlcoveMembership::Boundary);
        assert_eq!(alcove_membership(&g, &[rat(1, 4)]).unwrap(), AlcoveMembership::Outside);
        let f = fold_to_alcove(&g, &[Rat::zero()]).unwrap();
        assert_eq!(f.element, WaffElement::identity(1));
        assert!(alcove_membership(&GroupSpec::SO3, &[Rat::zero()]).is_err());
    }

    /// Closure points reachable by words of length ≤ 6 in the reflections a ↦ −a, a ↦ −1−a.
    fn brute_fold(x: &Rat) -> Rat {
        let mut frontier = vec![x.clone()];
        let mut seen = vec![x.clone()];
        for _ in 0..8 {
            let mut next = vec![];
            for p in &frontier {
                for q in [-p.clone(), int(-1) - p] {
                    if !seen.contains(&q) {
                        seen.push(q.clone());
                        next.push(q);
                    }
                }
            }
            frontier = next;
        }
        seen.into_iter().find(|p| *p >= rat(-1, 2) && *p <= Rat::zero()).expect("reachable")
    }

    #[test]
    fn fold_matches_brute_force() {
        for x in [rat(7, 10), rat(-13, 10), rat(5, 2), rat(-1, 2), rat(3, 1), rat(11, 7)] {
            let f = fold_to_alcove(&GroupSpec::SU2, std::slice::from_ref(&x)).unwrap();
            assert_eq!(f.point[0], brute_fold(&x), "{x}");
            assert_eq!(f.element.act(&[x]), f.point);
        }
    }

    #[test]
    fn level_weights() {
        assert_eq!(enumerate_level_weights(0).len(), 1);
        assert_eq!(enumerate_level_weights(2).len(), 3);
        assert!(enumerate_level_weights(-1).is_empty());
        // at level 1 the pairing with the highest root is 0 or 1
        let w: Vec<u32> = enumerate_level_weights(1).iter().map(|w| w.j2).collect();
        assert_eq!(w, vec![0, 1]);
    }

    /// Dimension of {f: Z → Q | f(sμ + Bt) = sgn(s)(−1)^{ε(t)} f(μ)}, computed on one period.
    fn brute_rank(b: i64, reflect: bool, eps: bool) -> usize {
        let period = 2 * b;
        let idx = |m: i64| m.rem_euclid(period) as usize;
        let mut rows: Vec<Vec<Rat>> = vec![];
        for mu in 0..period {
            for t in [-1i64, 1] {
                let sign = if eps && t.abs() % 2 == 1 { -1 } else { 1 };
                let img = mu + b * t;
                // f(img) − sign·f(μ) on the doubled period
                let mut row = vec![Rat::zero(); period as usize];
                row[idx(img)] += int(1);
                row[idx(mu)] -= int(sign);
                rows.push(row);
            }
            if reflect {
                let mut row = vec![Rat::zero(); period as usize];
                row[idx(-mu)] += int(1);
                row[idx(mu)] += int(1);
                rows.push(row);
            }
        }
        period as usize - rank(&rows)
    }

    #[test]
    fn orbit_counts() {
        let t = regular_orbits(&LevelForm::su2_tau(1)).unwrap();
        assert_eq!(t.regular_count, 2);
        assert_eq!(t.rank, 2);
        for m in 1..6 {
            assert_eq!(k_group_rank(&LevelForm::torus(vec![vec![m]], vec![false])).unwrap(), m as usize);
            let odd = LevelForm::torus(vec![vec![m]], vec![true]);
            assert_eq!(k_group_rank(&odd).unwrap(), brute_rank(m, false, true));
        }
        for k in 0..=12 {
            let f = LevelForm::su2_tau(k);
            let r = k_group_rank(&f).unwrap();
            assert_eq!(r, enumerate_level_weights(k).len());
            assert_eq!(r, brute_rank(2 * (k + 2), true, false));
        }
        let t2 = LevelForm::torus(vec![vec![2, 1], vec![1, 2]], vec![false, false]);
        assert_eq!(k_group_rank(&t2).unwrap(), 3);
        assert_eq!(regular_orbits(&LevelForm::torus(vec![vec![0]], vec![false])), Err(AffineError::NotPositiveDefinite));
    }

    #[test]
    fn verlinde_bijection() {
        assert_eq!(verlinde_classes(0).len(), 1);
        let cls = verlinde_classes(2);
        let c2 = &cls[1];
        assert!((c2.eigen_angles[0] - 2.0 * std::f64::consts::PI * 2.0 / 8.0).abs() < 1e-15);
        for k in 0..8 {
            let tau = LevelForm::su2_tau(k);
            let weights = enumerate_level_weights(k);
            let table = regular_orbits(&tau).unwrap();
            for (w, cl) in weights.iter().zip(verlinde_classes(k)) {
                let a0 = verlinde_a0(k, cl.ell as i64);
                assert_eq!(alcove_membership(&GroupSpec::SU2, std::slice::from_ref(&a0)).unwrap(), AlcoveMembership::Interior);
                let image = kappa(&tau, &[a0]).unwrap().coords[0].clone();
                assert_eq!(image, int(w.shifted));
                let hits = table
                    .orbits
                    .iter()
                    .filter(|o| o.regular && ((o.representative[0] - w.shifted).rem_euclid(2 * (k + 2)) == 0
                        || (o.representative[0] + w.shifted).rem_euclid(2 * (k + 2)) == 0))
                    .count();
                assert_eq!(hits, 1);
            }
        }
    }

    fn e(a: usize) -> Vec<QC> {
        let mut v = vec![QC::zero(); 3];
        v[a] = QC::one();
        v
    }

    #[test]
    fn cocycle_examples() {
        let f = LevelForm::su2(1, Level::Plain);
        assert!(mode_cocycle(&f, 1, &e(0), 1, &e(0)).central.is_zero());
        let b = mode_cocycle(&f, 0, &e(0), 0, &e(1));
        assert!(b.central.is_zero());
        assert_eq!(b.loop_part, f.algebra.bracket(&e(0), &e(1)));
        assert_eq!(mode_cocycle(&f, 1, &e(0), -1, &e(0)).central, QC::real(int(2)));
    }

    #[test]
    fn form_checks_exact() {
        let r = invariant_form_checks(&LevelForm::su2(1, Level::Plain), 2);
        assert!(r.all, "{r:?}");
        let r = invariant_form_checks(&LevelForm::torus(vec![vec![3]], vec![true]), 2);
        assert!(r.all, "{r:?}");
    }

    #[test]
    fn energy_shift_rules() {
        let form = LevelForm::torus(vec![vec![3]], vec![false]);
        let lam = 2.0;
        // fiber of charge λ: vacuum plus one excited state
        let e0 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(0.0), cr(1.0)]));
        let h = CMat::identity(2, 2) * c(0.0, lam);
        let z = energy_shift(&e0, std::slice::from_ref(&h), &[0.0], &form).unwrap();
        assert!(max_abs(&(&z.energy - &e0)) == 0.0);
        let beta = lam / 3.0;
        let s = energy_shift(&e0, std::slice::from_ref(&h), &[beta], &form).unwrap();
        assert!((s.energy[(0, 0)].re + lam * lam / 6.0).abs() < 1e-14);
        let back = energy_shift(&s.energy, &s.cartan_actions, &[-beta], &form).unwrap();
        assert!(max_abs(&(&back.energy - &e0)) < 1e-14);
        assert!(max_abs(&(&back.cartan_actions[0] - &h)) < 1e-14);
        assert!(energy_shift(&e0, &[CMat::identity(3, 3)], &[0.0], &form).is_err());
    }

    #[test]
    fn heisenberg_examples() {
        let h = heisenberg_structure(&LevelForm::torus(vec![vec![4]], vec![false])).unwrap();
        assert_eq!(h.pairing, vec![vec![4]]);
        assert_eq!(h.kappa, vec![vec![-4]]);
        assert!(h.even && h.delta == 1);
        assert_eq!(heisenberg_structure(&LevelForm::torus(vec![vec![3]], vec![true])).unwrap().delta, 2);
        assert_eq!(heisenberg_structure(&LevelForm::torus(vec![vec![0]], vec![false])).unwrap().kappa, vec![vec![0]]);
        let mut bad = LevelForm::torus(vec![vec![1]], vec![false]);
        bad.t_form[0][0] = rat(1, 2);
        assert!(matches!(heisenberg_structure(&bad), Err(AffineError::NotALevel(_))));
    }

    #[test]
    fn waff_group_law() {
        let r0 = WaffElement { s: vec![vec![-1]], t: vec![0] };
        let r1 = WaffElement { s: vec![vec![-1]], t: vec![-1] };
        let tr = r1.compose(&r0);
        assert_eq!(tr, WaffElement { s: vec![vec![1]], t: vec![-1] });
        assert_eq!(r0.compose(&r0), WaffElement::identity(1));
        let x = [rat(2, 7)];
        assert_eq!(tr.act(&x), r1.act(&r0.act(&x)));
    }

    proptest! {
        #[test]
        fn fold_idempotent_and_invariant(num in -400i64..400, word in proptest::collection::vec(0u8..2, 0..6)) {
            let g = GroupSpec::SU2;
            let x = rat(num, 37);
            let f = fold_to_alcove(&g, std::slice::from_ref(&x)).unwrap();
            prop_assert_ne!(alcove_membership(&g, &f.point).unwrap(), AlcoveMembership::Outside);
            prop_assert_eq!(&fold_to_alcove(&g, &f.point).unwrap().point, &f.point);
            let mut y = x;
            for w in word {
                y = if w == 0 { -y } else { int(-1) - y };
            }
            prop_assert_eq!(fold_to_alcove(&g, &[y]).unwrap().point, f.point);
        }

        #[test]
        fn graded_jacobi_exact(a in proptest::collection::vec(-3i64..3, 9), n in -2i64..3, m in -2i64..3) {
            let f = LevelForm::su2(2, Level::Plain);
            let v = |k: usize| (0..3).map(|i| QC::real(int(a[3 * k + i]))).collect::<Vec<_>>();
            let l = -n - m;
            let (x, y, z) = (AffineElement::mode(n, v(0)), AffineElement::mode(m, v(1)), AffineElement::mode(l, v(2)));
            let j = affine_bracket(&f, &x, &affine_bracket(&f, &y, &z))
                .sub(&affine_bracket(&f, &affine_bracket(&f, &x, &y), &z))
                .sub(&affine_bracket(&f, &y, &affine_bracket(&f, &x, &z)));
            prop_assert!(j.is_zero());
        }
    }
}
