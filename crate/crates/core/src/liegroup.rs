//! Example compact groups: structure constants, root data, irreducible representations
//! and character formulas.
//!
//! Weights are recorded as their values on the Cartan basis elements, so R(h) acts as
//! i·ω(h) on the ω weight space. SU2 uses e1 = diag(i,−i), e2 = [[0,1],[−1,0]],
//! e3 = [[0,i],[i,0]] with ⟨A,A'⟩ = −½Tr(AA'); SO3 uses the rotation generators
//! L_a = e_a/2 under the same trace form.

use crate::clifford::QuadraticSpace;
use crate::linalg::{c, comm, cr, eigh, expm, eye, kron, max_abs, nullspace, CMat, I};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("unsupported group: {0}")]
    Unsupported(String),
    #[error("invalid label {label} for {group}")]
    InvalidLabel { group: String, label: String },
    #[error("weight is not antidominant")]
    NotAntidominant,
    #[error("dimension formula gave non-integral value {0}")]
    NonIntegral(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GroupSpec {
    Torus(usize),
    Z2xT,
    O2,
    SU2,
    SO3,
    /// SO3 with the nontrivial central extension, realized through SU2.
    SO3Projective,
    U2,
    Product(Vec<GroupSpec>),
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Torus(n) => write!(f, "T{n}"),
            GroupSpec::Z2xT => write!(f, "Z2xT"),
            GroupSpec::O2 => write!(f, "O2"),
            GroupSpec::SU2 => write!(f, "SU2"),
            GroupSpec::SO3 => write!(f, "SO3"),
            GroupSpec::SO3Projective => write!(f, "SO3tau"),
            GroupSpec::U2 => write!(f, "U2"),
            GroupSpec::Product(gs) => {
                let parts: Vec<String> = gs.iter().map(|g| g.to_string()).collect();
                write!(f, "{}", parts.join("x"))
            }
        }
    }
}

impl std::str::FromStr for GroupSpec {
    type Err = LieError;
    fn from_str(s: &str) -> Result<Self, LieError> {
        let parts: Vec<&str> = s.split('x').filter(|p| !p.is_empty()).collect();
        if s.eq_ignore_ascii_case("Z2xT") {
            return Ok(GroupSpec::Z2xT);
        }
        if parts.len() > 1 {
            return Ok(GroupSpec::Product(parts.iter().map(|p| p.parse()).collect::<Result<_, _>>()?));
        }
        match s.to_ascii_uppercase().as_str() {
            "O2" => Ok(GroupSpec::O2),
            "SU2" => Ok(GroupSpec::SU2),
            "SO3" => Ok(GroupSpec::SO3),
            "SO3TAU" | "SO3P" => Ok(GroupSpec::SO3Projective),
            "U2" => Ok(GroupSpec::U2),
            t if t.starts_with('T') => t[1..]
                .parse()
                .ok()
                .filter(|&n: &usize| n > 0)
                .map(GroupSpec::Torus)
                .ok_or_else(|| LieError::Unsupported(s.to_string())),
            _ => Err(LieError::Unsupported(s.to_string())),
        }
    }
}

/// Projective level carried by a representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Level {
    Plain,
    Sigma,
    Tau,
    TauMinusSigma,
}

#[derive(Clone, Debug, Serialize)]
pub struct LieAlgebraData {
    pub dim: usize,
    pub labels: Vec<String>,
    pub metric: DMatrix<f64>,
    /// f_up[a][b][c] = f^c_ab, i.e. [e_a, e_b] = f^c_ab e_c.
    pub f_up: Vec<Vec<Vec<f64>>>,
    /// f_low[a][b][c] = f_abc = ⟨[e_a,e_b], e_c⟩.
    pub f_low: Vec<Vec<Vec<f64>>>,
}

impl LieAlgebraData {
    fn from_structure(labels: Vec<String>, metric: DMatrix<f64>, f_up: Vec<Vec<Vec<f64>>>) -> Self {
        let n = labels.len();
        let mut f_low = vec![vec![vec![0.0; n]; n]; n];
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    f_low[a][b][cc] = (0..n).map(|d| f_up[a][b][d] * metric[(d, cc)]).sum();
                }
            }
        }
        LieAlgebraData { dim: n, labels, metric, f_up, f_low }
    }

    pub fn quadratic_space(&self) -> QuadraticSpace {
        QuadraticSpace { metric: self.metric.clone() }
    }

    pub fn with_metric(&self, metric: DMatrix<f64>) -> Self {
        Self::from_structure(self.labels.clone(), metric, self.f_up.clone())
    }

    pub fn is_abelian(&self) -> bool {
        self.f_up.iter().flatten().flatten().all(|&x| x == 0.0)
    }

    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for a in 0..n {
            for b in 0..n {
                let xy = x[a] * y[b];
                if xy != 0.0 {
                    for (cc, o) in out.iter_mut().enumerate() {
                        *o += xy * self.f_up[a][b][cc];
                    }
                }
            }
        }
        out
    }

    /// Matrix of ad(x): column b holds [x, e_b].
    pub fn ad(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for b in 0..n {
            let mut eb = vec![0.0; n];
            eb[b] = 1.0;
            let v = self.bracket(x, &eb);
            for a in 0..n {
                m[(a, b)] = v[a];
            }
        }
        m
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim;
        (0..n).map(|a| (0..n).map(|b| x[a] * self.metric[(a, b)] * y[b]).sum::<f64>()).sum()
    }

    /// Largest deviation from total antisymmetry of f_abc.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.dim;
        let mut d: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    let f = self.f_low[a][b][cc];
                    d = d.max((f + self.f_low[b][a][cc]).abs());
                    d = d.max((f + self.f_low[a][cc][b]).abs());
                }
            }
        }
        d
    }

    pub fn jacobi_defect(&self) -> f64 {
        let n = self.dim;
        let e = |i: usize| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        };
        let mut d: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    let t1 = self.bracket(&e(a), &self.bracket(&e(b), &e(cc)));
                    let t2 = self.bracket(&e(b), &self.bracket(&e(cc), &e(a)));
                    let t3 = self.bracket(&e(cc), &self.bracket(&e(a), &e(b)));
                    for k in 0..n {
                        d = d.max((t1[k] + t2[k] + t3[k]).abs());
                    }
                }
            }
        }
        d
    }
}

/// Basis matrices with the trace factor t in ⟨A,A'⟩ = −t·Tr(AA').
fn matrix_basis(g: &GroupSpec) -> Result<(Vec<String>, Vec<CMat>, f64), LieError> {
    let z = c(0.0, 0.0);
    let m2 = |a: [Complex64; 4]| CMat::from_row_slice(2, 2, &a);
    let su2 = vec![
        m2([I, z, z, -I]),
        m2([z, cr(1.0), cr(-1.0), z]),
        m2([z, I, I, z]),
    ];
    let labels = |p: &str, n: usize| (1..=n).map(|k| format!("{p}{k}")).collect::<Vec<_>>();
    match g {
        GroupSpec::Torus(n) => {
            let basis = (0..*n)
                .map(|k| {
                    let mut m = CMat::zeros(*n, *n);
                    m[(k, k)] = I;
                    m
                })
                .collect();
            Ok((labels("t", *n), basis, 1.0))
        }
        GroupSpec::Z2xT | GroupSpec::O2 => Ok((vec!["t1".into()], vec![CMat::from_element(1, 1, I)], 1.0)),
        GroupSpec::SU2 => Ok((labels("e", 3), su2, 0.5)),
        GroupSpec::SO3 | GroupSpec::SO3Projective => {
            // (L_a)_{bc} = −ε_{abc}, so [L1,L2] = L3; L1 is the Cartan generator.
            let mut ls = Vec::new();
            for a in 0..3 {
                let mut m = CMat::zeros(3, 3);
                for b in 0..3 {
                    for cc in 0..3 {
                        m[(b, cc)] = cr(-levi(a, b, cc));
                    }
                }
                ls.push(m);
            }
            Ok((labels("L", 3), ls, 0.5))
        }
        GroupSpec::U2 => {
            let mut b = su2;
            b.push(m2([I, z, z, I]));
            Ok((vec!["e1".into(), "e2".into(), "e3".into(), "z".into()], b, 1.0))
        }
        GroupSpec::Product(_) => Err(LieError::Unsupported("product has no single matrix basis".into())),
    }
}

pub fn levi(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Real coordinates of `m` in the real span of `basis`.
fn coordinates(m: &CMat, basis: &[CMat]) -> Vec<f64> {
    let len = m.len();
    let a = DMatrix::from_fn(2 * len, basis.len(), |r, k| {
        let z = basis[k].as_slice()[r % len];
        if r < len {
            z.re
        } else {
            z.im
        }
    });
    let b = DMatrix::from_fn(2 * len, 1, |r, _| {
        let z = m.as_slice()[r % len];
        if r < len {
            z.re
        } else {
            z.im
        }
    });
    let sol = a.svd(true, true).solve(&b, 1e-12).expect("least squares");
    sol.column(0).iter().map(|x| if x.abs() < 1e-14 { 0.0 } else { x.round_if_close() }).collect()
}

trait RoundIfClose {
    fn round_if_close(self) -> Self;
}

impl RoundIfClose for f64 {
    fn round_if_close(self) -> f64 {
        let r = (self * 2.0).round() / 2.0;
        if (self - r).abs() < 1e-12 {
            r
        } else {
            self
        }
    }
}

pub fn structure_constants(group: &GroupSpec, scale: f64) -> Result<LieAlgebraData, LieError> {
    if let GroupSpec::Product(gs) = group {
        let parts: Vec<LieAlgebraData> = gs.iter().map(|g| structure_constants(g, scale)).collect::<Result<_, _>>()?;
        let n: usize = parts.iter().map(|p| p.dim).sum();
        let mut metric = DMatrix::zeros(n, n);
        let mut f_up = vec![vec![vec![0.0; n]; n]; n];
        let mut labels = Vec::new();
        let mut off = 0;
        for (k, p) in parts.iter().enumerate() {
            metric.view_mut((off, off), (p.dim, p.dim)).copy_from(&p.metric);
            for a in 0..p.dim {
                for b in 0..p.dim {
                    for cc in 0..p.dim {
                        f_up[off + a][off + b][off + cc] = p.f_up[a][b][cc];
                    }
                }
            }
            labels.extend(p.labels.iter().map(|l| format!("{l}.{k}")));
            off += p.dim;
        }
        return Ok(LieAlgebraData::from_structure(labels, metric, f_up));
    }
    let (labels, basis, tf) = matrix_basis(group)?;
    let n = basis.len();
    let metric = DMatrix::from_fn(n, n, |a, b| -tf * scale * (&basis[a] * &basis[b]).trace().re);
    let mut f_up = vec![vec![vec![0.0; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            f_up[a][b] = coordinates(&comm(&basis[a], &basis[b]), &basis);
        }
    }
    Ok(LieAlgebraData::from_structure(labels, metric, f_up))
}

#[derive(Clone, Debug, Serialize)]
pub struct RootSystem {
    pub rank: usize,
    /// Indices of the Cartan basis elements inside the algebra basis.
    pub cartan: Vec<usize>,
    /// Metric restricted to the Cartan subalgebra.
    pub t_metric: DMatrix<f64>,
    pub roots: Vec<Vec<f64>>,
    pub positive: Vec<Vec<f64>>,
    pub coroots: Vec<Vec<f64>>,
    pub rho: Vec<f64>,
    /// Weyl group elements on t* coordinates with their signs.
    pub weyl: Vec<(DMatrix<f64>, i8)>,
    /// Algebra elements ξ with exp(ξ) representing the nontrivial Weyl elements, in order.
    pub weyl_lifts: Vec<Vec<f64>>,
    /// Extra elements of the normalizer from other components (O2 reflection).
    pub component_weyl: Vec<DMatrix<f64>>,
}

impl RootSystem {
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let gi = self.t_metric.clone().try_inverse().expect("positive definite");
        let r = self.rank;
        (0..r).map(|a| (0..r).map(|b| x[a] * gi[(a, b)] * y[b]).sum::<f64>()).sum()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    /// Embeds a t* covector into g* coordinates (zero on non-Cartan directions).
    pub fn embed(&self, w: &[f64], dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for (k, &idx) in self.cartan.iter().enumerate() {
            v[idx] = w[k];
        }
        v
    }

    /// Full orbit of a t* point under Weyl and component elements, deduplicated.
    pub fn orbit(&self, w: &[f64]) -> Vec<Vec<f64>> {
        let mut pts: Vec<Vec<f64>> = Vec::new();
        let comps: Vec<DMatrix<f64>> = if self.component_weyl.is_empty() {
            vec![DMatrix::identity(self.rank, self.rank)]
        } else {
            self.component_weyl.clone()
        };
        for (m, _) in &self.weyl {
            for cm in &comps {
                let v = cm * m * nalgebra::DVector::from_column_slice(w);
                let v: Vec<f64> = v.iter().copied().collect();
                if !pts.iter().any(|p| p.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-9)) {
                    pts.push(v);
                }
            }
        }
        pts
    }

    pub fn is_regular(&self, w: &[f64]) -> bool {
        self.positive.iter().all(|a| self.inner(w, a).abs() > 1e-9)
    }
}

fn rank_one(cartan: usize, t_metric: f64, root: f64, lift: Vec<f64>) -> RootSystem {
    let coroot = 2.0 * (root / t_metric) / (root * root / t_metric);
    RootSystem {
        rank: 1,
        cartan: vec![cartan],
        t_metric: DMatrix::from_element(1, 1, t_metric),
        roots: vec![vec![root], vec![-root]],
        positive: vec![vec![root]],
        coroots: vec![vec![coroot]],
        rho: vec![root / 2.0],
        weyl: vec![(DMatrix::identity(1, 1), 1), (DMatrix::from_element(1, 1, -1.0), -1)],
        weyl_lifts: vec![lift],
        component_weyl: vec![],
    }
}

pub fn root_system(group: &GroupSpec) -> Result<RootSystem, LieError> {
    let alg = structure_constants(group, 1.0)?;
    Ok(match group {
        GroupSpec::Torus(n) => RootSystem {
            rank: *n,
            cartan: (0..*n).collect(),
            t_metric: alg.metric.clone(),
            roots: vec![],
            positive: vec![],
            coroots: vec![],
            rho: vec![0.0; *n],
            weyl: vec![(DMatrix::identity(*n, *n), 1)],
            weyl_lifts: vec![],
            component_weyl: vec![],
        },
        GroupSpec::Z2xT | GroupSpec::O2 => {
            let mut rs = root_system(&GroupSpec::Torus(1))?;
            if *group == GroupSpec::O2 {
                rs.component_weyl = vec![DMatrix::identity(1, 1), DMatrix::from_element(1, 1, -1.0)];
            }
            rs
        }
        GroupSpec::SU2 => rank_one(0, alg.metric[(0, 0)], 2.0, vec![0.0, PI / 2.0, 0.0]),
        GroupSpec::SO3 | GroupSpec::SO3Projective => rank_one(0, alg.metric[(0, 0)], 1.0, vec![0.0, PI, 0.0]),
        GroupSpec::U2 => {
            let g = alg.metric[(0, 0)];
            let tm = DMatrix::from_row_slice(2, 2, &[g, 0.0, 0.0, alg.metric[(3, 3)]]);
            let root = vec![2.0, 0.0];
            let coroot = vec![2.0 * (2.0 / g) / (4.0 / g), 0.0];
            RootSystem {
                rank: 2,
                cartan: vec![0, 3],
                t_metric: tm,
                roots: vec![root.clone(), vec![-2.0, 0.0]],
                positive: vec![root],
                coroots: vec![coroot],
                rho: vec![1.0, 0.0],
                weyl: vec![
                    (DMatrix::identity(2, 2), 1),
                    (DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]), -1),
                ],
                weyl_lifts: vec![vec![0.0, PI / 2.0, 0.0, 0.0]],
                component_weyl: vec![],
            }
        }
        GroupSpec::Product(gs) => {
            let parts: Vec<RootSystem> = gs.iter().map(root_system).collect::<Result<_, _>>()?;
            let dims: Vec<usize> = gs.iter().map(|g| structure_constants(g, 1.0).map(|a| a.dim)).collect::<Result<_, _>>()?;
            let rank: usize = parts.iter().map(|p| p.rank).sum();
            let total: usize = dims.iter().sum();
            let mut cartan = vec![];
            let mut t_metric = DMatrix::zeros(rank, rank);
            let mut roots = vec![];
            let mut positive = vec![];
            let mut coroots = vec![];
            let mut rho = vec![];
            let mut weyl: Vec<(DMatrix<f64>, i8)> = vec![(DMatrix::identity(0, 0), 1)];
            let mut lifts: Vec<Vec<f64>> = vec![vec![0.0; 0]];
            let (mut roff, mut aoff) = (0, 0);
            let pad = |v: &Vec<f64>, off: usize| {
                let mut out = vec![0.0; rank];
                out[off..off + v.len()].copy_from_slice(v);
                out
            };
            for (p, &d) in parts.iter().zip(&dims) {
                cartan.extend(p.cartan.iter().map(|c| c + aoff));
                t_metric.view_mut((roff, roff), (p.rank, p.rank)).copy_from(&p.t_metric);
                roots.extend(p.roots.iter().map(|r| pad(r, roff)));
                positive.extend(p.positive.iter().map(|r| pad(r, roff)));
                coroots.extend(p.coroots.iter().map(|r| pad(r, roff)));
                rho.extend(p.rho.iter());
                let mut nw = vec![];
                let mut nl = vec![];
                let mut plifts = vec![vec![0.0; d]];
                plifts.extend(p.weyl_lifts.iter().cloned());
                for ((m, s), l) in weyl.iter().zip(&lifts) {
                    for ((pm, ps), pl) in p.weyl.iter().zip(&plifts) {
                        let k = m.nrows() + pm.nrows();
                        let mut bm = DMatrix::zeros(k, k);
                        bm.view_mut((0, 0), (m.nrows(), m.nrows())).copy_from(m);
                        bm.view_mut((m.nrows(), m.nrows()), (pm.nrows(), pm.nrows())).copy_from(pm);
                        nw.push((bm, s * ps));
                        let mut ll = l.clone();
                        ll.extend(pl.iter());
                        nl.push(ll);
                    }
                }
                weyl = nw;
                lifts = nl;
                roff += p.rank;
                aoff += d;
            }
            let _ = total;
            RootSystem {
                rank,
                cartan,
                t_metric,
                roots,
                positive,
                coroots,
                rho,
                weyl,
                weyl_lifts: lifts.into_iter().skip(1).collect(),
                component_weyl: vec![],
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum IrrepLabel {
    /// Character of a torus.
    Charge(Vec<i64>),
    /// Z2×T: charge n and the sign of the Z2 generator.
    Z2T { n: i64, s: i8 },
    O2Trivial,
    O2Det,
    /// O2 two-dimensional V_n, n ≥ 1.
    O2(i64),
    /// Spin 2j/2 for SU2, SO3 (integral j) and projective SO3 (half-integral j).
    Spin(u32),
    /// U2: spin 2j/2 and central charge q with q ≡ 2j mod 2.
    U2 { j2: u32, q: i64 },
    Product(Vec<IrrepLabel>),
}

impl IrrepLabel {
    /// Parses "3", "1/2", "eps", "trivial", "1,-2", "(n,s)" style labels for the given group.
    pub fn parse(group: &GroupSpec, s: &str) -> Result<Self, LieError> {
        let bad = || LieError::InvalidLabel { group: group.to_string(), label: s.to_string() };
        let half = |t: &str| -> Result<u32, LieError> {
            let t = t.trim();
            if let Some((a, b)) = t.split_once('/') {
                if b.trim() != "2" {
                    return Err(bad());
                }
                a.trim().parse::<u32>().map_err(|_| bad())
            } else {
                t.parse::<u32>().map(|x| 2 * x).map_err(|_| bad())
            }
        };
        match group {
            GroupSpec::Torus(_) => Ok(IrrepLabel::Charge(
                s.split(',').map(|t| t.trim().parse::<i64>().map_err(|_| bad())).collect::<Result<_, _>>()?,
            )),
            GroupSpec::Z2xT => {
                let (a, b) = s.split_once(',').ok_or_else(bad)?;
                let n = a.trim().parse().map_err(|_| bad())?;
                let sg = match b.trim() {
                    "+" | "1" | "+1" => 1,
                    "-" | "-1" => -1,
                    _ => return Err(bad()),
                };
                Ok(IrrepLabel::Z2T { n, s: sg })
            }
            GroupSpec::O2 => match s.trim() {
                "eps" | "det" | "epsilon" => Ok(IrrepLabel::O2Det),
                "trivial" | "0" => Ok(IrrepLabel::O2Trivial),
                t => t.parse().map(IrrepLabel::O2).map_err(|_| bad()),
            },
            GroupSpec::SU2 | GroupSpec::SO3 | GroupSpec::SO3Projective => half(s).map(IrrepLabel::Spin),
            GroupSpec::U2 => {
                let (a, b) = s.split_once(',').ok_or_else(bad)?;
                Ok(IrrepLabel::U2 { j2: half(a)?, q: b.trim().parse().map_err(|_| bad())? })
            }
            GroupSpec::Product(gs) => {
                let parts: Vec<&str> = s.split(';').collect();
                if parts.len() != gs.len() {
                    return Err(bad());
                }
                Ok(IrrepLabel::Product(gs.iter().zip(parts).map(|(g, p)| Self::parse(g, p)).collect::<Result<_, _>>()?))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightSpace {
    pub weight: Vec<f64>,
    pub mult: usize,
    #[serde(skip)]
    pub basis: CMat,
}

#[derive(Clone, Debug, Serialize)]
pub struct Irrep {
    pub group: GroupSpec,
    pub label: IrrepLabel,
    pub level: Level,
    pub dim: usize,
    #[serde(skip)]
    pub actions: Vec<CMat>,
    /// Action of representatives of the non-identity components.
    #[serde(skip)]
    pub component_actions: Vec<CMat>,
    pub weights: Vec<WeightSpace>,
    pub lowest_weight: Vec<f64>,
    pub irreducible: bool,
}

/// Spin-j matrices (Jx, Jy, Jz) in the basis m = −j..j ascending.
pub fn spin_matrices(j2: u32) -> (CMat, CMat, CMat) {
    let n = j2 as usize + 1;
    let j = j2 as f64 / 2.0;
    let mut jp = CMat::zeros(n, n);
    let mut jz = CMat::zeros(n, n);
    for k in 0..n {
        let m = -j + k as f64;
        jz[(k, k)] = cr(m);
        if k + 1 < n {
            jp[(k + 1, k)] = cr((j * (j + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * cr(0.5);
    let jy = (&jp - &jm) * c(0.0, -0.5);
    (jx, jy, jz)
}

/// Simultaneous eigenspaces of commuting skew-Hermitian operators; weights are read off
/// as ω with A_t = i·ω_t on each block. Sorted lexicographically.
pub fn weight_decomposition(cartan_actions: &[CMat], dim: usize, tol: f64) -> Vec<WeightSpace> {
    let mut h = CMat::zeros(dim, dim);
    for (t, a) in cartan_actions.iter().enumerate() {
        let coef = 1.0 / (1.0 + (t as f64) * 0.618_033_988_749_894_8 * PI);
        h += a * c(0.0, -coef);
    }
    let (vals, vecs) = eigh(&h);
    let mut groups: Vec<Vec<usize>> = vec![];
    for k in 0..dim {
        match groups.last_mut() {
            Some(g) if (vals[k] - vals[*g.last().unwrap()]).abs() < tol => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    let mut out: Vec<WeightSpace> = groups
        .into_iter()
        .map(|g| {
            let mut basis = CMat::zeros(dim, g.len());
            for (j, &k) in g.iter().enumerate() {
                basis.set_column(j, &vecs.column(k));
            }
            let weight = cartan_actions
                .iter()
                .map(|a| {
                    let v = (basis.adjoint() * a * &basis).trace() / cr(g.len() as f64);
                    let w = v.im;
                    if (w - w.round()).abs() < 1e-9 {
                        w.round()
                    } else {
                        w
                    }
                })
                .collect();
            WeightSpace { weight, mult: g.len(), basis }
        })
        .collect();
    out.sort_by(|a, b| {
        a.weight.iter().zip(&b.weight).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

fn raw_irrep(group: &GroupSpec, label: &IrrepLabel) -> Result<(Vec<CMat>, Vec<CMat>, Level), LieError> {
    let bad = || LieError::InvalidLabel { group: group.to_string(), label: format!("{label:?}") };
    let one = |z: Complex64| CMat::from_element(1, 1, z);
    match (group, label) {
        (GroupSpec::Torus(n), IrrepLabel::Charge(q)) if q.len() == *n => {
            Ok((q.iter().map(|&x| one(c(0.0, x as f64))).collect(), vec![], Level::Plain))
        }
        (GroupSpec::Z2xT, IrrepLabel::Z2T { n, s }) if s.abs() == 1 => {
            Ok((vec![one(c(0.0, *n as f64))], vec![one(cr(*s as f64))], Level::Plain))
        }
        (GroupSpec::O2, IrrepLabel::O2Trivial) => Ok((vec![one(cr(0.0))], vec![one(cr(1.0))], Level::Plain)),
        (GroupSpec::O2, IrrepLabel::O2Det) => Ok((vec![one(cr(0.0))], vec![one(cr(-1.0))], Level::Plain)),
        (GroupSpec::O2, IrrepLabel::O2(n)) if *n >= 1 => {
            let x = *n as f64;
            let r = CMat::from_row_slice(2, 2, &[c(0.0, x), cr(0.0), cr(0.0), c(0.0, -x)]);
            let refl = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
            Ok((vec![r], vec![refl], Level::Plain))
        }
        (GroupSpec::SU2, IrrepLabel::Spin(j2)) => {
            let (jx, jy, jz) = spin_matrices(*j2);
            Ok((vec![jz * c(0.0, 2.0), jy * c(0.0, 2.0), jx * c(0.0, 2.0)], vec![], Level::Plain))
        }
        (GroupSpec::SO3, IrrepLabel::Spin(j2)) if j2 % 2 == 0 => {
            let (jx, jy, jz) = spin_matrices(*j2);
            Ok((vec![jz * I, jy * I, jx * I], vec![], Level::Plain))
        }
        (GroupSpec::SO3Projective, IrrepLabel::Spin(j2)) if j2 % 2 == 1 => {
            let (jx, jy, jz) = spin_matrices(*j2);
            Ok((vec![jz * I, jy * I, jx * I], vec![], Level::TauMinusSigma))
        }
        (GroupSpec::U2, IrrepLabel::U2 { j2, q }) if (*j2 as i64 - q).rem_euclid(2) == 0 => {
            let (jx, jy, jz) = spin_matrices(*j2);
            let n = *j2 as usize + 1;
            Ok((
                vec![jz * c(0.0, 2.0), jy * c(0.0, 2.0), jx * c(0.0, 2.0), eye(n) * c(0.0, *q as f64)],
                vec![],
                Level::Plain,
            ))
        }
        (GroupSpec::Product(gs), IrrepLabel::Product(ls)) if gs.len() == ls.len() => {
            let parts: Vec<(Vec<CMat>, Vec<CMat>, Level)> =
                gs.iter().zip(ls).map(|(g, l)| raw_irrep(g, l)).collect::<Result<_, _>>()?;
            let dims: Vec<usize> = parts.iter().map(|p| p.0[0].nrows()).collect();
            let total: usize = dims.iter().product();
            let mut actions = vec![];
            let mut comps = vec![];
            let mut level = Level::Plain;
            for (k, (acts, cs, lv)) in parts.iter().enumerate() {
                let left: usize = dims[..k].iter().product();
                let right: usize = dims[k + 1..].iter().product();
                let embed = |m: &CMat| kron(&kron(&eye(left), m), &eye(right));
                actions.extend(acts.iter().map(embed));
                comps.extend(cs.iter().map(embed));
                if *lv != Level::Plain {
                    level = *lv;
                }
            }
            let _ = total;
            Ok((actions, comps, level))
        }
        _ => Err(bad()),
    }
}

/// Commutant dimension of a set of matrices (1 iff irreducible).
pub fn commutant_dim(ops: &[CMat], n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let mut rows: Vec<CMat> = vec![];
    for a in ops {
        // vec(XA − AX) = (Aᵀ ⊗ I − I ⊗ A) vec(X) in column-major order.
        rows.push(kron(&a.transpose(), &eye(n)) - kron(&eye(n), a));
    }
    if rows.is_empty() {
        return n * n;
    }
    let total = rows.len() * n * n;
    let mut big = CMat::zeros(total, n * n);
    for (k, r) in rows.iter().enumerate() {
        big.view_mut((k * n * n, 0), (n * n, n * n)).copy_from(r);
    }
    nullspace(&big, 1e-8).ncols()
}

pub fn build_irrep(group: &GroupSpec, label: &IrrepLabel) -> Result<Irrep, LieError> {
    let (actions, component_actions, level) = raw_irrep(group, label)?;
    let dim = actions[0].nrows();
    let rs = root_system(group)?;
    let cartan: Vec<CMat> = rs.cartan.iter().map(|&k| actions[k].clone()).collect();
    let weights = weight_decomposition(&cartan, dim, 1e-8);
    let lowest_weight = lowest(&rs, &weights);
    let mut ops = actions.clone();
    ops.extend(component_actions.iter().cloned());
    let irreducible = commutant_dim(&ops, dim) == 1;
    Ok(Irrep {
        group: group.clone(),
        label: label.clone(),
        level,
        dim,
        actions,
        component_actions,
        weights,
        lowest_weight,
        irreducible,
    })
}

fn lowest(rs: &RootSystem, weights: &[WeightSpace]) -> Vec<f64> {
    let key = |w: &Vec<f64>| rs.inner(w, &rs.rho);
    weights
        .iter()
        .map(|w| w.weight.clone())
        .min_by(|a, b| key(a).total_cmp(&key(b)).then_with(|| a[0].total_cmp(&b[0])))
        .unwrap_or_default()
}

impl Irrep {
    pub fn structure_defect(&self, alg: &LieAlgebraData) -> f64 {
        let n = alg.dim;
        let mut d: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let mut rhs = CMat::zeros(self.dim, self.dim);
                for cc in 0..n {
                    if alg.f_up[a][b][cc] != 0.0 {
                        rhs += &self.actions[cc] * cr(alg.f_up[a][b][cc]);
                    }
                }
                d = d.max(max_abs(&(comm(&self.actions[a], &self.actions[b]) - rhs)));
            }
            d = d.max(max_abs(&(&self.actions[a] + self.actions[a].adjoint())));
        }
        d
    }

    pub fn casimir(&self, alg: &LieAlgebraData) -> CMat {
        let gi = alg.quadratic_space().inverse();
        let mut m = CMat::zeros(self.dim, self.dim);
        for a in 0..alg.dim {
            for b in 0..alg.dim {
                if gi[(a, b)] != 0.0 {
                    m += &self.actions[a] * &self.actions[b] * cr(gi[(a, b)]);
                }
            }
        }
        m
    }

    /// Action of exp(ξ) for ξ in the Lie algebra.
    pub fn group_element(&self, xi: &[f64]) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (a, &x) in xi.iter().enumerate() {
            if x != 0.0 {
                m += &self.actions[a] * cr(x);
            }
        }
        expm(&m)
    }

    /// The weight λ with lowest weight −λ.
    pub fn lambda(&self) -> Vec<f64> {
        self.lowest_weight.iter().map(|x| -x).collect()
    }
}

pub fn weyl_dimension(rs: &RootSystem, lowest_weight: &[f64]) -> Result<u64, LieError> {
    let lam: Vec<f64> = lowest_weight.iter().map(|x| -x).collect();
    if rs.positive.iter().any(|a| rs.inner(&lam, a) < -1e-9) {
        return Err(LieError::NotAntidominant);
    }
    let mut d = 1.0;
    for a in &rs.positive {
        let lr: Vec<f64> = lam.iter().zip(&rs.rho).map(|(x, y)| x + y).collect();
        d *= rs.inner(&lr, a) / rs.inner(&rs.rho, a);
    }
    if (d - d.round()).abs() > 1e-9 || d < 0.5 {
        return Err(LieError::NonIntegral(d));
    }
    Ok(d.round() as u64)
}

fn pairing(w: &[f64], theta: &[f64]) -> f64 {
    w.iter().zip(theta).map(|(a, b)| a * b).sum()
}

fn apply(m: &DMatrix<f64>, w: &[f64]) -> Vec<f64> {
    (m * nalgebra::DVector::from_column_slice(w)).iter().copied().collect()
}

/// Σ_w sgn(w) e^{i w(v)(θ)}.
fn alternating_sum(rs: &RootSystem, v: &[f64], theta: &[f64]) -> Complex64 {
    rs.weyl
        .iter()
        .map(|(m, s)| Complex64::from_polar(*s as f64, pairing(&apply(m, v), theta)))
        .sum()
}

/// Weyl character of the irrep with lowest weight −λ, or `None` on the singular locus.
pub fn weyl_character(rs: &RootSystem, lowest_weight: &[f64], theta: &[f64]) -> Option<Complex64> {
    let num_w: Vec<f64> = lowest_weight.iter().zip(&rs.rho).map(|(x, r)| x - r).collect();
    let neg_rho: Vec<f64> = rs.rho.iter().map(|x| -x).collect();
    let den = alternating_sum(rs, &neg_rho, theta);
    if den.norm() < 1e-8 {
        return None;
    }
    Some(alternating_sum(rs, &num_w, theta) / den)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpinorCharacterReport {
    pub evaluated: usize,
    pub skipped: usize,
    pub max_deviation: f64,
    pub identity_value: f64,
    pub positive_roots: usize,
}

pub fn spinor_product(rs: &RootSystem, theta: &[f64]) -> Complex64 {
    rs.positive.iter().map(|a| cr(2.0 * (pairing(a, theta) / 2.0).cos())).product()
}

pub fn spinor_character_check(rs: &RootSystem, samples: &[Vec<f64>]) -> SpinorCharacterReport {
    let neg_rho: Vec<f64> = rs.rho.iter().map(|x| -x).collect();
    let mut rep = SpinorCharacterReport {
        evaluated: 0,
        skipped: 0,
        max_deviation: 0.0,
        identity_value: spinor_product(rs, &vec![0.0; rs.rank]).re,
        positive_roots: rs.positive.len(),
    };
    for th in samples {
        match weyl_character(rs, &neg_rho, th) {
            Some(w) => {
                rep.evaluated += 1;
                rep.max_deviation = rep.max_deviation.max((w - spinor_product(rs, th)).norm());
            }
            None => rep.skipped += 1,
        }
    }
    rep
}

/// Σ_w sgn(w) e^{i w(−μ)} over the Weyl denominator written at −ρ; `None` entries are
/// samples on the singular locus.
pub fn dirac_induction_character(rs: &RootSystem, mu: &[f64], samples: &[Vec<f64>]) -> Result<Vec<Option<Complex64>>, LieError> {
    if !rs.is_regular(mu) {
        return Err(LieError::NotAntidominant);
    }
    let neg_mu: Vec<f64> = mu.iter().map(|x| -x).collect();
    Ok(samples
        .iter()
        .map(|th| {
            let den: Complex64 = rs
                .positive
                .iter()
                .map(|a| {
                    let h = pairing(a, th) / 2.0;
                    Complex64::from_polar(1.0, -h) - Complex64::from_polar(1.0, h)
                })
                .product();
            if den.norm() < 1e-8 {
                None
            } else {
                Some(alternating_sum(rs, &neg_mu, th) / den)
            }
        })
        .collect())
}

/// Trace of the action of exp(θ) for θ in the Cartan subalgebra.
pub fn torus_trace(v: &Irrep, rs: &RootSystem, theta: &[f64]) -> Complex64 {
    let alg_dim = v.actions.len();
    let xi = rs.embed(theta, alg_dim);
    v.group_element(&xi).trace()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_groups() -> Vec<GroupSpec> {
        vec![
            GroupSpec::Torus(1),
            GroupSpec::Torus(2),
            GroupSpec::Z2xT,
            GroupSpec::O2,
            GroupSpec::SU2,
            GroupSpec::SO3,
            GroupSpec::U2,
            GroupSpec::Product(vec![GroupSpec::SU2, GroupSpec::Torus(1)]),
        ]
    }

    #[test]
    fn structure_constants_invariants() {
        for g in all_groups() {
            let a = structure_constants(&g, 1.0).unwrap();
            assert!(a.antisymmetry_defect() < 1e-12, "{g}");
            assert!(a.jacobi_defect() < 1e-12, "{g}");
        }
    }

    #[test]
    fn su2_brackets() {
        let a = structure_constants(&GroupSpec::SU2, 1.0).unwrap();
        assert_eq!(a.metric, DMatrix::identity(3, 3));
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert!((a.f_low[i][j][k] - 2.0 * levi(i, j, k)).abs() < 1e-14);
                }
            }
        }
        let s = structure_constants(&GroupSpec::SO3, 1.0).unwrap();
        assert_eq!(s.metric, DMatrix::identity(3, 3));
        assert!((s.f_up[0][1][2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn torus_and_u2_center() {
        let t = structure_constants(&GroupSpec::Torus(1), 1.0).unwrap();
        assert_eq!(t.dim, 1);
        assert!(t.is_abelian());
        assert_eq!(t.metric[(0, 0)], 1.0);
        let u = structure_constants(&GroupSpec::U2, 1.0).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(u.f_up[a][b][3], 0.0);
                assert_eq!(u.f_up[3][a][b], 0.0);
            }
        }
    }

    #[test]
    fn irrep_examples() {
        let t = build_irrep(&GroupSpec::Torus(1), &IrrepLabel::Charge(vec![3])).unwrap();
        assert_eq!(t.dim, 1);
        assert!((t.actions[0][(0, 0)] - c(0.0, 3.0)).norm() < 1e-15);
        let h = build_irrep(&GroupSpec::SU2, &IrrepLabel::Spin(1)).unwrap();
        assert_eq!(h.dim, 2);
        let ws: Vec<f64> = h.weights.iter().map(|w| w.weight[0]).collect();
        assert_eq!(ws, vec![-1.0, 1.0]);
        let e = build_irrep(&GroupSpec::O2, &IrrepLabel::O2Det).unwrap();
        assert_eq!(e.dim, 1);
        assert_eq!(max_abs(&e.actions[0]), 0.0);
        assert!(e.irreducible);
        assert!(build_irrep(&GroupSpec::SO3, &IrrepLabel::Spin(1)).is_err());
        assert!(build_irrep(&GroupSpec::SO3Projective, &IrrepLabel::Spin(2)).is_err());
        assert_eq!(build_irrep(&GroupSpec::SO3Projective, &IrrepLabel::Spin(1)).unwrap().level, Level::TauMinusSigma);
    }

    #[test]
    fn irreps_satisfy_relations_and_are_irreducible() {
        let mut cases = vec![];
        for j2 in 0..=8 {
            cases.push((GroupSpec::SU2, IrrepLabel::Spin(j2)));
            if j2 % 2 == 0 {
                cases.push((GroupSpec::SO3, IrrepLabel::Spin(j2)));
            } else {
                cases.push((GroupSpec::SO3Projective, IrrepLabel::Spin(j2)));
            }
        }
        for n in 1..4 {
            cases.push((GroupSpec::O2, IrrepLabel::O2(n)));
        }
        cases.push((GroupSpec::U2, IrrepLabel::U2 { j2: 1, q: 1 }));
        cases.push((GroupSpec::Z2xT, IrrepLabel::Z2T { n: 2, s: -1 }));
        for (g, l) in cases {
            let v = build_irrep(&g, &l).unwrap();
            let alg = structure_constants(&g, 1.0).unwrap();
            assert!(v.structure_defect(&alg) < 1e-12, "{g} {l:?}");
            assert!(v.irreducible, "{g} {l:?}");
            let (_, dev) = crate::linalg::scalar_part(&v.casimir(&alg));
            assert!(dev < 1e-12);
            let total: usize = v.weights.iter().map(|w| w.mult).sum();
            assert_eq!(total, v.dim);
        }
    }

    #[test]
    fn o2_restriction_splits() {
        let v = build_irrep(&GroupSpec::O2, &IrrepLabel::O2(2)).unwrap();
        let ws: Vec<f64> = v.weights.iter().map(|w| w.weight[0]).collect();
        assert_eq!(ws, vec![-2.0, 2.0]);
    }

    #[test]
    fn weyl_dimension_matches() {
        for j2 in 0..=8u32 {
            let rs = root_system(&GroupSpec::SU2).unwrap();
            let v = build_irrep(&GroupSpec::SU2, &IrrepLabel::Spin(j2)).unwrap();
            assert_eq!(weyl_dimension(&rs, &v.lowest_weight).unwrap() as usize, v.dim);
            if j2 % 2 == 0 {
                let rs = root_system(&GroupSpec::SO3).unwrap();
                let v = build_irrep(&GroupSpec::SO3, &IrrepLabel::Spin(j2)).unwrap();
                assert_eq!(weyl_dimension(&rs, &v.lowest_weight).unwrap() as usize, v.dim);
            }
        }
        let rs = root_system(&GroupSpec::SU2).unwrap();
        assert_eq!(weyl_dimension(&rs, &[0.0]).unwrap(), 1);
        assert_eq!(weyl_dimension(&rs, &[-1.0]).unwrap(), 2);
        assert!(weyl_dimension(&rs, &[1.0]).is_err());
        assert!(weyl_dimension(&rs, &[-0.5]).is_err());
    }

    #[test]
    fn spinor_character_examples() {
        let rs = root_system(&GroupSpec::SU2).unwrap();
        let r = spinor_character_check(&rs, &[vec![PI / 3.0], vec![0.0]]);
        assert!(r.max_deviation < 1e-12);
        assert_eq!(r.skipped, 1);
        assert_eq!(r.identity_value, 2.0);
        let t = root_system(&GroupSpec::Torus(2)).unwrap();
        let r = spinor_character_check(&t, &[vec![0.3, 0.4]]);
        assert_eq!(r.identity_value, 1.0);
        assert!(r.max_deviation < 1e-15);
    }

    #[test]
    fn dirac_induction_matches_traces() {
        let rs = root_system(&GroupSpec::SU2).unwrap();
        for j2 in 0..5u32 {
            let v = build_irrep(&GroupSpec::SU2, &IrrepLabel::Spin(j2)).unwrap();
            let mu = vec![j2 as f64 + 1.0];
            let th = vec![vec![PI / 2.0], vec![0.37], vec![0.0]];
            let vals = dirac_induction_character(&rs, &mu, &th).unwrap();
            assert!(vals[2].is_none());
            for (t, val) in th.iter().zip(&vals).take(2) {
                let tr = torus_trace(&v, &rs, t);
                assert!((val.unwrap() - tr).norm() < 1e-12);
                // closed form sin((2j+1)θ)/sin θ
                let cf = ((j2 as f64 + 1.0) * t[0]).sin() / t[0].sin();
                assert!((tr.re - cf).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parse_labels() {
        assert_eq!(IrrepLabel::parse(&GroupSpec::SU2, "1/2").unwrap(), IrrepLabel::Spin(1));
        assert_eq!(IrrepLabel::parse(&GroupSpec::SU2, "2").unwrap(), IrrepLabel::Spin(4));
        assert_eq!(IrrepLabel::parse(&GroupSpec::O2, "eps").unwrap(), IrrepLabel::O2Det);
        assert!(IrrepLabel::parse(&GroupSpec::SU2, "1/3").is_err());
        assert_eq!("SU2xT1".parse::<GroupSpec>().unwrap(), GroupSpec::Product(vec![GroupSpec::SU2, GroupSpec::Torus(1)]));
    }

    proptest! {
        #[test]
        fn spinor_identity_random(theta in -3.0f64..3.0, so3 in proptest::bool::ANY) {
            let g = if so3 { GroupSpec::SO3 } else { GroupSpec::SU2 };
            let rs = root_system(&g).unwrap();
            let r = spinor_character_check(&rs, &[vec![theta]]);
            prop_assert!(r.max_deviation < 1e-9 || r.skipped == 1);
        }

        #[test]
        fn product_weights_are_sums(j2 in 0u32..4, q in -2i64..3) {
            let g = GroupSpec::Product(vec![GroupSpec::SU2, GroupSpec::Torus(1)]);
            let v = build_irrep(&g, &IrrepLabel::Product(vec![IrrepLabel::Spin(j2), IrrepLabel::Charge(vec![q])])).unwrap();
            prop_assert_eq!(v.weights.len(), j2 as usize + 1);
            for w in &v.weights {
                prop_assert_eq!(w.weight[1], q as f64);
            }
        }
    }
}
