//! Irreducible Z2-graded complex Clifford modules with {γ^a, γ^b} = −2g^{ab}.

use crate::linalg::{anticomm, c, cr, eye, inv_sqrt_spd, kron, max_abs, orthonormalize, CMat, I};
use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliffordError {
    #[error("metric is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Clone, Debug)]
pub struct QuadraticSpace {
    pub metric: DMatrix<f64>,
}

impl QuadraticSpace {
    pub fn new(metric: DMatrix<f64>) -> Result<Self, CliffordError> {
        let n = metric.nrows();
        if metric.ncols() != n {
            return Err(CliffordError::NotPositiveDefinite);
        }
        if (&metric - metric.transpose()).amax() > 1e-12 {
            return Err(CliffordError::NotPositiveDefinite);
        }
        if n > 0 {
            let eig = nalgebra::SymmetricEigen::new(metric.clone());
            if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
                return Err(CliffordError::NotPositiveDefinite);
            }
        }
        Ok(QuadraticSpace { metric })
    }

    pub fn euclidean(n: usize) -> Self {
        QuadraticSpace { metric: DMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        if self.dim() == 0 {
            return DMatrix::zeros(0, 0);
        }
        self.metric.clone().try_inverse().expect("positive definite metric")
    }

    /// |μ|² = g^{ab} μ_a μ_b for a covector.
    pub fn norm2_covector(&self, mu: &[f64]) -> f64 {
        let gi = self.inverse();
        let n = self.dim();
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += gi[(a, b)] * mu[a] * mu[b];
            }
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct GammaRep {
    pub space: QuadraticSpace,
    pub module_dim: usize,
    /// γ^a, one per basis covector.
    pub gammas: Vec<CMat>,
    /// Gammas of the oriented orthonormal coframe; γ^a = Σ_i (g^{-1/2})_{ai} Γ^i.
    pub frame: Vec<CMat>,
    pub grading: CMat,
    /// Γ^1⋯Γ^n.
    pub volume: CMat,
    pub odd_generator: Option<CMat>,
}

fn pauli() -> (CMat, CMat, CMat) {
    let z0 = c(0.0, 0.0);
    let x = CMat::from_row_slice(2, 2, &[z0, cr(1.0), cr(1.0), z0]);
    let y = CMat::from_row_slice(2, 2, &[z0, -I, I, z0]);
    let z = CMat::from_row_slice(2, 2, &[cr(1.0), z0, z0, cr(-1.0)]);
    (x, y, z)
}

/// Hermitian generators G_0..G_{2p-1} of Cl_{2p} on (C²)^{⊗p}, plus the chirality Z^{⊗p}.
fn jordan_wigner(p: usize) -> (Vec<CMat>, CMat) {
    let (x, y, z) = pauli();
    let mut gens = Vec::with_capacity(2 * p);
    for k in 0..p {
        for s in [&x, &y] {
            let mut m = eye(1);
            for q in 0..p {
                let f = if q < k {
                    &z
                } else if q == k {
                    s
                } else {
                    &eye(2)
                };
                m = kron(&m, f);
            }
            gens.push(m);
        }
    }
    let mut chi = eye(1);
    for _ in 0..p {
        chi = kron(&chi, &z);
    }
    (gens, chi)
}

fn product(ms: &[CMat], n: usize) -> CMat {
    ms.iter().fold(eye(n), |acc, m| acc * m)
}

/// The module sign: eigenvalue of the normalized (odd-case augmented) volume on the even part.
pub fn module_sign(frame: &[CMat], odd: Option<&CMat>, grading: &CMat) -> i8 {
    let n = grading.nrows();
    let mut all: Vec<CMat> = frame.to_vec();
    if let Some(e) = odd {
        all.push(e.clone());
    }
    let k = all.len();
    let w = product(&all, n);
    let phase = if (k * (k + 1) / 2).is_multiple_of(2) { cr(1.0) } else { I };
    let s = (w * grading).trace() / (phase * cr(n as f64));
    if s.re >= 0.0 {
        1
    } else {
        -1
    }
}

impl GammaRep {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn sign(&self) -> i8 {
        module_sign(&self.frame, self.odd_generator.as_ref(), &self.grading)
    }

    /// Largest deviation from the module invariants.
    pub fn invariant_defect(&self) -> f64 {
        let gi = self.space.inverse();
        let n = self.module_dim;
        let one = eye(n);
        let mut d: f64 = 0.0;
        for (a, ga) in self.gammas.iter().enumerate() {
            for (b, gb) in self.gammas.iter().enumerate() {
                d = d.max(max_abs(&(anticomm(ga, gb) + &one * cr(2.0 * gi[(a, b)]))));
            }
            d = d.max(max_abs(&(ga + ga.adjoint())));
            d = d.max(max_abs(&anticomm(&self.grading, ga)));
        }
        d = d.max(max_abs(&(&self.grading * &self.grading - &one)));
        d = d.max(max_abs(&(&self.grading - self.grading.adjoint())));
        if let Some(e) = &self.odd_generator {
            d = d.max(max_abs(&(e * e + &one)));
            d = d.max(max_abs(&anticomm(e, &self.grading)));
            for g in &self.gammas {
                d = d.max(max_abs(&anticomm(e, g)));
            }
        }
        d
    }
}

pub fn build_clifford_module(space: QuadraticSpace, orientation: i8) -> GammaRep {
    let n = space.dim();
    let gens = if n.is_multiple_of(2) { n } else { n + 1 };
    let (herm, chi) = jordan_wigner(gens / 2);
    let mut frame: Vec<CMat> = herm.iter().take(n).map(|g| g * I).collect();
    let mut odd_generator = if n % 2 == 1 { Some(&herm[n] * I) } else { None };
    let mut grading = chi;
    let mut sign = module_sign(&frame, odd_generator.as_ref(), &grading);
    if sign != orientation.signum() && orientation != 0 {
        if let Some(e) = odd_generator.as_mut() {
            *e = -e.clone();
        } else if n > 0 {
            frame[n - 1] = -frame[n - 1].clone();
        } else {
            grading = -grading;
        }
        sign = -sign;
    }
    debug_assert_eq!(sign, if orientation < 0 { -1 } else { 1 });
    assemble(space, frame, grading, odd_generator)
}

fn assemble(space: QuadraticSpace, frame: Vec<CMat>, grading: CMat, odd: Option<CMat>) -> GammaRep {
    let n = space.dim();
    let module_dim = grading.nrows();
    let p = if n > 0 { inv_sqrt_spd(&space.metric) } else { DMatrix::zeros(0, 0) };
    let gammas = (0..n)
        .map(|a| {
            let mut g = CMat::zeros(module_dim, module_dim);
            for (i, f) in frame.iter().enumerate() {
                if p[(a, i)] != 0.0 {
                    g += f * cr(p[(a, i)]);
                }
            }
            g
        })
        .collect();
    let volume = product(&frame, module_dim);
    GammaRep { space, module_dim, gammas, frame, grading, volume, odd_generator: odd }
}

pub fn clifford_mult(rep: &GammaRep, mu: &[f64]) -> Result<CMat, CliffordError> {
    if mu.len() != rep.dim() {
        return Err(CliffordError::DimensionMismatch { expected: rep.dim(), got: mu.len() });
    }
    let mut m = CMat::zeros(rep.module_dim, rep.module_dim);
    for (g, &x) in rep.gammas.iter().zip(mu) {
        if x != 0.0 {
            m += g * cr(x);
        }
    }
    Ok(m)
}

/// Graded tensor product for the orthogonal direct sum; reduced to an irreducible
/// module when both factors are odd-dimensional.
pub fn graded_tensor(a: &GammaRep, b: &GammaRep) -> GammaRep {
    let (na, nb) = (a.dim(), b.dim());
    let mut metric = DMatrix::zeros(na + nb, na + nb);
    metric.view_mut((0, 0), (na, na)).copy_from(&a.space.metric);
    metric.view_mut((na, na), (nb, nb)).copy_from(&b.space.metric);
    let space = QuadraticSpace { metric };
    let ib = eye(b.module_dim);
    let mut frame: Vec<CMat> = a.frame.iter().map(|g| kron(g, &ib)).collect();
    frame.extend(b.frame.iter().map(|g| kron(&a.grading, g)));
    let mut grading = kron(&a.grading, &b.grading);
    let odd = match (&a.odd_generator, &b.odd_generator) {
        (None, None) => None,
        (Some(e), None) => Some(kron(e, &ib)),
        (None, Some(e)) => Some(kron(&a.grading, e)),
        (Some(ea), Some(eb)) => {
            // Two odd operators anticommuting with everything; their product is a
            // central even square root of −1, whose +i eigenspace is irreducible.
            let p = kron(ea, &ib) * kron(&a.grading, eb);
            let j = &p * I;
            let proj = (eye(j.nrows()) + &j) * cr(0.5);
            let u = orthonormalize(&proj, 1e-9);
            let r = |m: &CMat| u.adjoint() * m * &u;
            frame = frame.iter().map(r).collect();
            grading = r(&grading);
            None
        }
    };
    assemble(space, frame, grading, odd)
}

pub fn complex_dim_of_module(n: usize) -> usize {
    1usize << n.div_ceil(2)
}

pub fn zero_covector(n: usize) -> Vec<f64> {
    vec![0.0; n]
}

pub fn scalar(x: f64) -> Complex64 {
    cr(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dim_one_matches_standard_matrix() {
        let r = build_clifford_module(QuadraticSpace::euclidean(1), 1);
        let expect = CMat::from_row_slice(2, 2, &[cr(0.0), I, I, cr(0.0)]);
        assert!(max_abs(&(&r.gammas[0] - expect)) < 1e-15);
        assert!(r.odd_generator.is_some());
    }

    #[test]
    fn dim_zero_is_trivial() {
        let r = build_clifford_module(QuadraticSpace::euclidean(0), 1);
        assert_eq!(r.module_dim, 1);
        assert!(r.gammas.is_empty());
        assert_eq!(r.sign(), 1);
        assert_eq!(build_clifford_module(QuadraticSpace::euclidean(0), -1).sign(), -1);
    }

    #[test]
    fn dim_three_anticommutators() {
        let r = build_clifford_module(QuadraticSpace::euclidean(3), 1);
        assert_eq!(r.module_dim, 4);
        assert!(r.invariant_defect() < 1e-12);
    }

    #[test]
    fn orientation_flips_sign() {
        for n in 0..6 {
            for o in [1i8, -1] {
                let r = build_clifford_module(QuadraticSpace::euclidean(n), o);
                assert_eq!(r.sign(), o, "n={n}");
                assert!(r.invariant_defect() < 1e-12);
            }
        }
    }

    #[test]
    fn volume_square_sign() {
        for n in 0..7usize {
            let r = build_clifford_module(QuadraticSpace::euclidean(n), 1);
            let s = if (n * (n + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let w2 = &r.volume * &r.volume;
            assert!(max_abs(&(w2 - eye(r.module_dim) * cr(s))) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn odd_generator_commutes_with_volume_in_graded_sense() {
        for n in [1usize, 3, 5] {
            let r = build_clifford_module(QuadraticSpace::euclidean(n), 1);
            let e = r.odd_generator.clone().unwrap();
            // ω is odd for odd n, so the graded commutator is the anticommutator.
            assert!(max_abs(&anticomm(&e, &r.volume)) < 1e-12);
        }
    }

    #[test]
    fn clifford_mult_examples() {
        let r = build_clifford_module(QuadraticSpace::euclidean(1), 1);
        let m = clifford_mult(&r, &[2.5]).unwrap();
        assert!(max_abs(&(m - CMat::from_row_slice(2, 2, &[cr(0.0), I * 2.5, I * 2.5, cr(0.0)]))) < 1e-15);
        let r3 = build_clifford_module(QuadraticSpace::euclidean(3), 1);
        assert!(max_abs(&clifford_mult(&r3, &[0.0; 3]).unwrap()) == 0.0);
        assert!(max_abs(&(clifford_mult(&r3, &[1.0, 0.0, 0.0]).unwrap() - &r3.gammas[0])) == 0.0);
        assert!(clifford_mult(&r3, &[1.0]).is_err());
    }

    #[test]
    fn non_identity_metric() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let r = build_clifford_module(QuadraticSpace::new(g).unwrap(), 1);
        assert!(r.invariant_defect() < 1e-12);
        assert!(QuadraticSpace::new(DMatrix::from_row_slice(1, 1, &[-1.0])).is_err());
    }

    #[test]
    fn graded_tensor_examples() {
        let one = build_clifford_module(QuadraticSpace::euclidean(1), 1);
        let two = build_clifford_module(QuadraticSpace::euclidean(2), 1);
        let t11 = graded_tensor(&one, &one);
        assert_eq!(t11.dim(), 2);
        assert_eq!(t11.module_dim, 2);
        assert!(t11.invariant_defect() < 1e-12);
        let t12 = graded_tensor(&one, &two);
        let ref3 = build_clifford_module(QuadraticSpace::euclidean(3), 1);
        assert_eq!(t12.module_dim, ref3.module_dim);
        assert!(t12.invariant_defect() < 1e-12);
        assert_eq!(t12.sign().abs(), 1);
        let triv = build_clifford_module(QuadraticSpace::euclidean(0), 1);
        let u = graded_tensor(&two, &triv);
        for (x, y) in u.gammas.iter().zip(&two.gammas) {
            assert!(max_abs(&(x - y)) < 1e-15);
        }
    }

    fn relation_table(r: &GammaRep) -> Vec<f64> {
        let mut t = vec![];
        for a in &r.gammas {
            for b in &r.gammas {
                let (s, _) = crate::linalg::scalar_part(&anticomm(a, b));
                t.push(s.re);
            }
        }
        t.push(r.module_dim as f64);
        t
    }

    proptest! {
        #[test]
        fn random_metrics_satisfy_relations(n in 1usize..5, seed in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let a = DMatrix::from_fn(n, n, |i, j| seed[i * 4 + j]);
            let g = &a * a.transpose() + DMatrix::identity(n, n) * 0.5;
            let r = build_clifford_module(QuadraticSpace::new(g).unwrap(), 1);
            prop_assert!(r.invariant_defect() < 1e-10);
            let mu: Vec<f64> = seed[..n].to_vec();
            let m = clifford_mult(&r, &mu).unwrap();
            let want = -r.space.norm2_covector(&mu);
            prop_assert!(max_abs(&(&m * &m - eye(r.module_dim) * cr(want))) < 1e-10);
            prop_assert!(max_abs(&(&m + m.adjoint())) < 1e-12);
        }

        #[test]
        fn tensor_is_associative_on_relations(a in 0usize..3, b in 0usize..3, c in 0usize..3) {
            let m = |n| build_clifford_module(QuadraticSpace::euclidean(n), 1);
            let l = graded_tensor(&graded_tensor(&m(a), &m(b)), &m(c));
            let r = graded_tensor(&m(a), &graded_tensor(&m(b), &m(c)));
            prop_assert!(l.invariant_defect() < 1e-10 && r.invariant_defect() < 1e-10);
            let (tl, tr) = (relation_table(&l), relation_table(&r));
            for (x, y) in tl.iter().zip(&tr) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
