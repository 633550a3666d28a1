//! Quantum information kernel: entropies, mutual information, fidelity, trace
//! distance, purification, the Uhlmann-optimal local transition, realification.
//!
//! Everything is generic over the real scalar `T` (f32 or f64). Logarithms are
//! base 2; eigenvalues below 1e-12 count as zero.

use std::collections::BTreeMap;
use std::fmt::Debug;

use nalgebra::{ComplexField, DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVec<T> = DVector<Complex<T>>;

/// Real scalar usable by the kernel.
pub trait RealScalar: RealField + Copy + FromPrimitive + ToPrimitive + Debug {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable literal")
    }

    /// Validation tolerance: 1e-10, widened for low-precision types.
    fn state_tol() -> Self {
        let eps = Self::default_epsilon() * Self::lit(1e4);
        if eps > Self::lit(1e-10) {
            eps
        } else {
            Self::lit(1e-10)
        }
    }
}

impl<T: RealField + Copy + FromPrimitive + ToPrimitive + Debug> RealScalar for T {}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum QinfoError {
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix is not Hermitian (defect {0})")]
    NotHermitian(f64),
    #[error("matrix has negative eigenvalue {0}")]
    NotPsd(f64),
    #[error("trace {0} differs from 1")]
    BadTrace(f64),
    #[error("vector norm {0} differs from 1")]
    NotUnit(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    Dim(usize, usize),
    #[error("not a purification (defect {0})")]
    NotPurification(f64),
    #[error("probabilities sum to {0}")]
    BadProbabilities(f64),
}

fn c<T: RealScalar>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

fn f64_of<T: RealScalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: RealScalar> {
    m: CMat<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState<T: RealScalar> {
    v: CVec<T>,
}

impl<T: RealScalar> PureState<T> {
    pub fn new(v: CVec<T>) -> Result<Self, QinfoError> {
        let n = v.norm();
        if (n - T::one()).abs() > T::state_tol() {
            return Err(QinfoError::NotUnit(f64_of(n)));
        }
        Ok(PureState { v })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn vector(&self) -> &CVec<T> {
        &self.v
    }

    pub fn density(&self) -> DensityMatrix<T> {
        DensityMatrix { m: &self.v * self.v.adjoint() }
    }
}

impl<T: RealScalar> DensityMatrix<T> {
    /// Checks Hermiticity, unit trace and positivity.
    pub fn new(m: CMat<T>) -> Result<Self, QinfoError> {
        if !m.is_square() {
            return Err(QinfoError::NotSquare);
        }
        let tol = T::state_tol();
        let herm = (&m - m.adjoint()).iter().map(|z| z.modulus()).fold(T::zero(), |a, b| a.max(b));
        if herm > tol {
            return Err(QinfoError::NotHermitian(f64_of(herm)));
        }
        let tr = m.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(QinfoError::BadTrace(f64_of(tr.re)));
        }
        let (eigs, _) = eigh(&m);
        if let Some(&low) = eigs.iter().find(|&&e| e < -tol) {
            return Err(QinfoError::NotPsd(f64_of(low)));
        }
        Ok(DensityMatrix { m })
    }

    /// Wraps a matrix without checks (callers guarantee the invariants).
    pub fn from_matrix_unchecked(m: CMat<T>) -> Self {
        DensityMatrix { m }
    }

    pub fn from_vector(v: &CVec<T>) -> Result<Self, QinfoError> {
        Ok(PureState::new(v.clone())?.density())
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix { m: CMat::identity(d, d) * c(T::one() / T::from_usize(d).unwrap()) }
    }

    pub fn diagonal(p: &[T]) -> Result<Self, QinfoError> {
        Self::new(CMat::from_diagonal(&CVec::from_iterator(p.len(), p.iter().map(|&x| c(x)))))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.m
    }

    pub fn kron(&self, other: &Self) -> Self {
        DensityMatrix { m: self.m.kronecker(&other.m) }
    }

    /// Σ p_k ρ_k over equal-dimension states.
    pub fn mixture(items: &[(T, &DensityMatrix<T>)]) -> Result<Self, QinfoError> {
        let d = items.first().map(|(_, r)| r.dim()).ok_or(QinfoError::Dim(0, 0))?;
        let mut m = CMat::zeros(d, d);
        for (p, r) in items {
            if r.dim() != d {
                return Err(QinfoError::Dim(d, r.dim()));
            }
            m += &r.m * c(*p);
        }
        Ok(DensityMatrix { m })
    }

    /// Partial trace keeping the listed subsystems of a `dims` tensor layout.
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Self {
        DensityMatrix { m: partial_trace(&self.m, dims, keep) }
    }

    /// Eigenvalues (ascending) and eigenvectors as columns.
    pub fn eigh(&self) -> (Vec<T>, CMat<T>) {
        eigh(&self.m)
    }
}

/// Hermitian eigendecomposition sorted by ascending eigenvalue.
pub fn eigh<T: RealScalar>(m: &CMat<T>) -> (Vec<T>, CMat<T>) {
    let herm = (m + m.adjoint()) * c(T::lit(0.5));
    let n = m.nrows();
    let se = herm.clone().symmetric_eigen();
    let finite = se.eigenvalues.iter().all(|v| v.is_finite())
        && se.eigenvectors.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    if !finite {
        return eigh_via_real(&herm);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals = idx.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (col, &k) in idx.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(k));
    }
    (vals, vecs)
}

// H = A + iB as the real symmetric [[A, -B], [B, A]]; each eigenvalue appears
// twice and (u, v) maps to the eigenvector u + iv.
fn eigh_via_real<T: RealScalar>(h: &CMat<T>) -> (Vec<T>, CMat<T>) {
    let n = h.nrows();
    let r = DMatrix::<T>::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let se = r.symmetric_eigen();
    let mut idx: Vec<usize> = (0..2 * n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).expect("finite spectrum"));
    let mut vals = Vec::with_capacity(n);
    let mut cols: Vec<CVec<T>> = Vec::with_capacity(n);
    for &k in &idx {
        if cols.len() == n {
            break;
        }
        let col = se.eigenvectors.column(k);
        let mut v = CVec::<T>::from_fn(n, |i, _| Complex::new(col[i], col[i + n]));
        for u in &cols {
            let proj = u.dotc(&v);
            v -= u * proj;
        }
        let norm = v.norm();
        if norm > T::lit(0.5) {
            cols.push(v / c(norm));
            vals.push(se.eigenvalues[k]);
        }
    }
    let mut vecs = CMat::zeros(n, n);
    for (j, v) in cols.iter().enumerate() {
        vecs.set_column(j, v);
    }
    (vals, vecs)
}

/// -Σ λ log2 λ with λ clamped to [0, 1] and λ < 1e-12 dropped.
pub fn spectrum_entropy<T: RealScalar>(eigs: &[T]) -> T {
    let cut = T::lit(1e-12);
    let ln2 = T::ln_2();
    eigs.iter()
        .map(|&l| if l > T::one() { T::one() } else { l })
        .filter(|&l| l > cut)
        .fold(T::zero(), |acc, l| acc - l * l.ln() / ln2)
}

pub fn entropy<T: RealScalar>(rho: &DensityMatrix<T>) -> T {
    spectrum_entropy(&rho.eigh().0)
}

/// Entropy of a PSD Hermitian matrix given without validation.
pub fn hermitian_entropy<T: RealScalar>(m: &CMat<T>) -> T {
    spectrum_entropy(&eigh(m).0)
}

/// S(Σ_k |c_k⟩⟨c_k|) for columns c_k, via the Gram matrix when it is smaller.
pub fn mixture_entropy_from_columns<T: RealScalar>(cols: &[Vec<Complex<T>>]) -> T {
    let k = cols.len();
    if k == 0 {
        return T::zero();
    }
    let d = cols[0].len();
    let m = CMat::from_fn(d, k, |r, col| cols[col][r]);
    if k < d {
        hermitian_entropy(&(m.adjoint() * &m))
    } else {
        hermitian_entropy(&(&m * m.adjoint()))
    }
}

pub fn partial_trace<T: RealScalar>(m: &CMat<T>, dims: &[usize], keep: &[usize]) -> CMat<T> {
    let total: usize = dims.iter().product();
    assert_eq!(m.nrows(), total, "layout does not match matrix");
    let kdim: usize = keep.iter().map(|&s| dims[s]).product();
    // (kept index, traced index) of every full index.
    let split: Vec<(usize, usize)> = (0..total)
        .map(|full| {
            let mut rem = full;
            let mut digits = vec![0; dims.len()];
            for s in (0..dims.len()).rev() {
                digits[s] = rem % dims[s];
                rem /= dims[s];
            }
            let (mut k, mut t) = (0, 0);
            for s in 0..dims.len() {
                if keep.contains(&s) {
                    k = k * dims[s] + digits[s];
                } else {
                    t = t * dims[s] + digits[s];
                }
            }
            (k, t)
        })
        .collect();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (full, &(_, t)) in split.iter().enumerate() {
        groups.entry(t).or_default().push(full);
    }
    let mut out = CMat::zeros(kdim, kdim);
    for members in groups.values() {
        for &i in members {
            for &j in members {
                out[(split[i].0, split[j].0)] += m[(i, j)];
            }
        }
    }
    out
}

/// I(A:B) = S(A) + S(B) − S(AB).
pub fn mutual_info<T: RealScalar>(rho_ab: &DensityMatrix<T>, da: usize, db: usize) -> T {
    let dims = [da, db];
    entropy(&rho_ab.partial_trace(&dims, &[0])) + entropy(&rho_ab.partial_trace(&dims, &[1]))
        - entropy(rho_ab)
}

/// I(A:B|C) = S(AC) + S(BC) − S(ABC) − S(C).
pub fn conditional_mutual_info<T: RealScalar>(rho: &DensityMatrix<T>, dims: [usize; 3]) -> T {
    entropy(&rho.partial_trace(&dims, &[0, 2])) + entropy(&rho.partial_trace(&dims, &[1, 2]))
        - entropy(rho)
        - entropy(&rho.partial_trace(&dims, &[2]))
}

/// Classical-quantum ensemble Σ_x Pr(x) ρ(x) ⊗ |x⟩⟨x|.
#[derive(Clone, Debug)]
pub struct CqEnsemble<T: RealScalar> {
    pub items: Vec<(T, usize, DensityMatrix<T>)>,
}

impl<T: RealScalar> CqEnsemble<T> {
    pub fn new(items: Vec<(T, usize, DensityMatrix<T>)>) -> Result<Self, QinfoError> {
        let total = items.iter().fold(T::zero(), |a, (p, _, _)| a + *p);
        if (total - T::one()).abs() > T::state_tol() {
            return Err(QinfoError::BadProbabilities(f64_of(total)));
        }
        if let Some((_, _, first)) = items.first() {
            for (_, _, r) in &items {
                if r.dim() != first.dim() {
                    return Err(QinfoError::Dim(first.dim(), r.dim()));
                }
            }
        }
        Ok(CqEnsemble { items })
    }

    fn labels(&self) -> BTreeMap<usize, usize> {
        let mut map = BTreeMap::new();
        for (_, x, _) in &self.items {
            let next = map.len();
            map.entry(*x).or_insert(next);
        }
        map
    }

    /// ρ(X) = Σ_x Pr(x) ρ(x).
    pub fn average(&self) -> DensityMatrix<T> {
        let refs: Vec<_> = self.items.iter().map(|(p, _, r)| (*p, r)).collect();
        DensityMatrix::mixture(&refs).expect("nonempty ensemble")
    }

    /// Dense joint state over quantum ⊗ classical registers.
    pub fn joint(&self) -> (DensityMatrix<T>, usize, usize) {
        let labels = self.labels();
        let (d, k) = (self.items[0].2.dim(), labels.len());
        let mut m = CMat::zeros(d * k, d * k);
        for (p, x, r) in &self.items {
            let mut proj = CMat::zeros(k, k);
            proj[(labels[x], labels[x])] = c(*p);
            m += r.m.kronecker(&proj);
        }
        (DensityMatrix { m }, d, k)
    }

    /// I(ρ(X) : X) on the joint classical-quantum state.
    pub fn mutual_info(&self) -> T {
        let (joint, d, k) = self.joint();
        mutual_info(&joint, d, k)
    }
}

/// I(ρ(X) : X | Y) for items (Pr(x,y), x, y, ρ(x,y)), on the dense joint
/// state over quantum ⊗ X ⊗ Y.
pub fn cq_conditional_mutual_info<T: RealScalar>(items: &[(T, usize, usize, DensityMatrix<T>)]) -> T {
    let index = |f: &dyn Fn(&(T, usize, usize, DensityMatrix<T>)) -> usize| {
        let mut map = BTreeMap::new();
        for it in items {
            let next = map.len();
            map.entry(f(it)).or_insert(next);
        }
        map
    };
    let xs = index(&|it| it.1);
    let ys = index(&|it| it.2);
    let d = items[0].3.dim();
    let (kx, ky) = (xs.len(), ys.len());
    let mut m = CMat::zeros(d * kx * ky, d * kx * ky);
    for (p, x, y, r) in items {
        let mut proj = CMat::zeros(kx * ky, kx * ky);
        let k = xs[x] * ky + ys[y];
        proj[(k, k)] = c(*p);
        m += r.m.kronecker(&proj);
    }
    conditional_mutual_info(&DensityMatrix { m }, [d, kx, ky])
}

/// Σ_y Pr(y) τ_y ⊗ |y⟩⟨y| for bipartite states τ_y.
pub fn classically_conditioned<T: RealScalar>(layout: &[(T, DensityMatrix<T>)]) -> DensityMatrix<T> {
    let k = layout.len();
    let d = layout[0].1.dim();
    let mut m = CMat::zeros(d * k, d * k);
    for (y, (p, tau)) in layout.iter().enumerate() {
        let mut proj = CMat::zeros(k, k);
        proj[(y, y)] = c(*p);
        m += tau.m.kronecker(&proj);
    }
    DensityMatrix { m }
}

/// S(A|Y) = S(AY) − S(Y) for Σ_y Pr(y) ρ_y ⊗ |y⟩⟨y|.
pub fn cq_conditional_entropy<T: RealScalar>(layout: &[(T, DensityMatrix<T>)]) -> T {
    let joint = classically_conditioned(layout);
    let dims = [layout[0].1.dim(), layout.len()];
    entropy(&joint) - entropy(&joint.partial_trace(&dims, &[1]))
}

/// √ρ for PSD Hermitian ρ (eigenvalues below 1e-12 treated as zero).
pub fn sqrt_psd<T: RealScalar>(m: &CMat<T>) -> CMat<T> {
    let (vals, vecs) = eigh(m);
    let cut = T::lit(1e-12);
    let root = CVec::from_iterator(vals.len(), vals.iter().map(|&l| c(if l > cut { l.sqrt() } else { T::zero() })));
    &vecs * CMat::from_diagonal(&root) * vecs.adjoint()
}

/// F(ρ, σ) = tr √(√ρ σ √ρ).
pub fn fidelity<T: RealScalar>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T, QinfoError> {
    if rho.dim() != sigma.dim() {
        return Err(QinfoError::Dim(rho.dim(), sigma.dim()));
    }
    // ‖√ρ √σ‖_1 avoids a second square root of near-zero eigenvalues.
    let prod = sqrt_psd(&rho.m) * sqrt_psd(&sigma.m);
    let f = prod.singular_values().iter().fold(T::zero(), |a, &s| a + s);
    Ok(f.min(T::one()))
}

pub fn fidelity_pure<T: RealScalar>(a: &PureState<T>, b: &PureState<T>) -> Result<T, QinfoError> {
    if a.dim() != b.dim() {
        return Err(QinfoError::Dim(a.dim(), b.dim()));
    }
    Ok(a.v.dotc(&b.v).modulus())
}

/// ‖ρ − σ‖_t = Σ |eig(ρ − σ)|.
pub fn trace_distance<T: RealScalar>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T, QinfoError> {
    if rho.dim() != sigma.dim() {
        return Err(QinfoError::Dim(rho.dim(), sigma.dim()));
    }
    let (vals, _) = eigh(&(&rho.m - &sigma.m));
    Ok(vals.iter().fold(T::zero(), |a, &l| a + l.abs()))
}

/// Canonical purification Σ_k √λ_k |e_k⟩|k⟩, eigenvalues in descending order,
/// laid out with the H index major.
pub fn purify<T: RealScalar>(rho: &DensityMatrix<T>) -> PureState<T> {
    let d = rho.dim();
    let (vals, vecs) = rho.eigh();
    let mut v = CVec::zeros(d * d);
    for (k, col) in (0..d).rev().enumerate() {
        let w = if vals[col] > T::lit(1e-12) { c(vals[col].sqrt()) } else { c(T::zero()) };
        for h in 0..d {
            v[h * d + k] = vecs[(h, col)] * w;
        }
    }
    let n = v.norm();
    v /= c(n);
    PureState { v }
}

/// Coefficient matrix M[h, k] of a vector on H ⊗ K.
pub fn coefficient_matrix<T: RealScalar>(psi: &CVec<T>, dh: usize) -> CMat<T> {
    let dk = psi.len() / dh;
    CMat::from_fn(dh, dk, |h, k| psi[h * dk + k])
}

/// tr_K |ψ⟩⟨ψ|.
pub fn reduce_to_h<T: RealScalar>(psi: &CVec<T>, dh: usize) -> CMat<T> {
    let m = coefficient_matrix(psi, dh);
    &m * m.adjoint()
}

#[derive(Clone, Debug)]
pub struct LocalTransition<T: RealScalar> {
    /// Unitary on K.
    pub unitary: CMat<T>,
    /// |⟨ψ1|(I⊗U)|ψ0⟩| as achieved by applying `unitary`.
    pub overlap: T,
    /// Trace distance between (I⊗U)|ψ0⟩ and |ψ1⟩.
    pub distance: T,
    /// 2√(2·I(ρ(X):X)) for X a uniform bit encoded by ρ0, ρ1.
    pub bound: T,
    pub bound_holds: bool,
}

/// Uhlmann-optimal unitary on K aligning the purifications: the polar factor
/// of the cross-overlap operator M1†M0.
pub fn local_transition<T: RealScalar>(
    rho0: &DensityMatrix<T>,
    rho1: &DensityMatrix<T>,
    psi0: &PureState<T>,
    psi1: &PureState<T>,
) -> Result<LocalTransition<T>, QinfoError> {
    let dh = rho0.dim();
    if rho1.dim() != dh || psi0.dim() != psi1.dim() || psi0.dim() % dh != 0 {
        return Err(QinfoError::Dim(psi0.dim(), psi1.dim()));
    }
    if psi0.dim() / dh < dh {
        return Err(QinfoError::Dim(psi0.dim() / dh, dh));
    }
    let tol = T::lit(1e-9).max(T::state_tol());
    for (rho, psi) in [(rho0, psi0), (rho1, psi1)] {
        let defect = (reduce_to_h(&psi.v, dh) - &rho.m).iter().fold(T::zero(), |a, z| a.max(z.modulus()));
        if defect > tol {
            return Err(QinfoError::NotPurification(f64_of(defect)));
        }
    }
    let m0 = coefficient_matrix(&psi0.v, dh);
    let m1 = coefficient_matrix(&psi1.v, dh);
    let x = m1.adjoint() * &m0;
    let svd = x.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let unitary = (u * vt).map(|z| z.conj());
    let moved = &m0 * unitary.transpose();
    let overlap = m1.iter().zip(moved.iter()).fold(Complex::new(T::zero(), T::zero()), |a, (p, q)| a + p.conj() * q).modulus();
    let distance = T::lit(2.0) * (T::one() - (overlap * overlap).min(T::one())).sqrt();
    let half = T::lit(0.5);
    let ens = CqEnsemble {
        items: vec![(half, 0, rho0.clone()), (half, 1, rho1.clone())],
    };
    let info = ens.mutual_info().max(T::zero());
    let bound = T::lit(2.0) * (T::lit(2.0) * info).sqrt();
    Ok(LocalTransition { unitary, overlap, distance, bound, bound_holds: distance <= bound + tol })
}

/// (Re, Im) interleaving of each entry.
pub fn realify_vector<T: RealScalar>(v: &CVec<T>) -> CVec<T> {
    CVec::from_fn(2 * v.len(), |k, _| {
        let z = v[k / 2];
        c(if k % 2 == 0 { z.re } else { z.im })
    })
}

/// Each entry a becomes [[Re a, −Im a], [Im a, Re a]].
pub fn realify_matrix<T: RealScalar>(m: &CMat<T>) -> CMat<T> {
    CMat::from_fn(2 * m.nrows(), 2 * m.ncols(), |r, col| {
        let z = m[(r / 2, col / 2)];
        c(match (r % 2, col % 2) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        })
    })
}

/// Σ p_i |ψ_i'⟩⟨ψ_i'| over an eigenbasis of ρ.
pub fn realify_state<T: RealScalar>(rho: &DensityMatrix<T>) -> DensityMatrix<T> {
    let (vals, vecs) = rho.eigh();
    let d = rho.dim();
    let mut m = CMat::zeros(2 * d, 2 * d);
    for (k, &p) in vals.iter().enumerate() {
        let r = realify_vector(&vecs.column(k).into_owned());
        m += (&r * r.transpose()) * c(p.max(T::zero()));
    }
    DensityMatrix { m }
}

/// ⟨u|w⟩ − (2(⟨u|v⟩ + ⟨v|w⟩) − 3) for real unit vectors.
pub fn weak_triangle_gap<T: RealScalar>(u: &[T], v: &[T], w: &[T]) -> Result<T, QinfoError> {
    if u.len() != v.len() || v.len() != w.len() {
        return Err(QinfoError::Dim(u.len(), w.len()));
    }
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + *x * *y);
    for x in [u, v, w] {
        let n = dot(x, x).sqrt();
        if (n - T::one()).abs() > T::state_tol() {
            return Err(QinfoError::NotUnit(f64_of(n)));
        }
    }
    Ok(dot(u, w) - (T::lit(2.0) * (dot(u, v) + dot(v, w)) - T::lit(3.0)))
}

/// Seeded random states and unitaries at double precision.
pub mod random {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rng: &mut impl Rng) -> Complex<f64> {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat<f64> {
        CMat::from_fn(rows, cols, |_, _| gaussian(rng))
    }

    /// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
    pub fn unitary(rng: &mut impl Rng, d: usize) -> CMat<f64> {
        let qr = ginibre(rng, d, d).qr();
        let (q, r) = (qr.q(), qr.r());
        let phases = CVec::from_fn(d, |k, _| {
            let z = r[(k, k)];
            if z.norm() > 0.0 {
                z / z.norm()
            } else {
                Complex::new(1.0, 0.0)
            }
        });
        q * CMat::from_diagonal(&phases)
    }

    pub fn real_orthogonal(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        let signs = DVector::from_fn(d, |k, _| if r[(k, k)] < 0.0 { -1.0 } else { 1.0 });
        q * DMatrix::from_diagonal(&signs)
    }

    pub fn pure_vector(rng: &mut impl Rng, d: usize) -> CVec<f64> {
        let v = CVec::from_fn(d, |_, _| gaussian(rng));
        let n = v.norm();
        v / Complex::new(n, 0.0)
    }

    pub fn pure_state(rng: &mut impl Rng, d: usize) -> PureState<f64> {
        PureState { v: pure_vector(rng, d) }
    }

    /// Random density matrix G G† / tr of a d×rank Ginibre matrix.
    pub fn density(rng: &mut impl Rng, d: usize, rank: usize) -> DensityMatrix<f64> {
        let g = ginibre(rng, d, rank);
        let m = &g * g.adjoint();
        let tr = m.trace();
        DensityMatrix { m: m / tr }
    }

    pub fn real_unit(rng: &mut impl Rng, d: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    /// Probability vector drawn uniformly from the simplex.
    pub fn probabilities(rng: &mut impl Rng, k: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    }
}

/// Converts a double-precision complex matrix to another real scalar.
pub fn cast_matrix<T: RealScalar>(m: &CMat<f64>) -> CMat<T> {
    m.map(|z| Complex::new(T::lit(z.re), T::lit(z.im)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ket(v: &[f64]) -> CVec<f64> {
        CVec::from_iterator(v.len(), v.iter().map(|&x| Complex::new(x, 0.0)))
    }

    #[test]
    fn real_embedding_eigh_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in [1, 2, 3, 6] {
            let rho = random::density(&mut rng, d, d.max(2) / 2);
            let (a, _) = eigh(rho.matrix());
            let (b, v) = eigh_via_real(rho.matrix());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
            let back = &v * CMat::from_diagonal(&CVec::from_iterator(d, b.iter().map(|&l| c(l)))) * v.adjoint();
            assert!((back - rho.matrix()).norm() < 1e-10);
        }
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&DensityMatrix::<f64>::maximally_mixed(2)) - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pure = random::pure_state(&mut rng, 4).density();
        assert!(entropy(&pure).abs() < 1e-10);
        let d = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let h = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((entropy(&d) - h).abs() < 1e-12);
        assert!((h - 0.811278).abs() < 1e-6);
    }

    #[test]
    fn invalid_density_matrices_are_rejected() {
        let m = CMat::from_row_slice(2, 2, &[Complex::new(0.5, 0.0), Complex::new(0.0, 0.3), Complex::new(0.0, 0.3), Complex::new(0.5, 0.0)]);
        assert!(matches!(DensityMatrix::new(m), Err(QinfoError::NotHermitian(_))));
        let m = CMat::from_diagonal(&ket(&[1.5, -0.5]));
        assert!(matches!(DensityMatrix::new(m), Err(QinfoError::NotPsd(_))));
        let m = CMat::from_diagonal(&ket(&[0.5, 0.4]));
        assert!(matches!(DensityMatrix::new(m), Err(QinfoError::BadTrace(_))));
    }

    #[test]
    fn entropy_works_in_single_precision() {
        let d = DensityMatrix::<f32>::diagonal(&[0.75, 0.25]).unwrap();
        let h = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((entropy(&d) as f64 - h).abs() < 1e-5);
        let f = fidelity(&d, &DensityMatrix::maximally_mixed(2)).unwrap();
        let oracle = (0.75f64 * 0.5).sqrt() + (0.25f64 * 0.5).sqrt();
        assert!((f as f64 - oracle).abs() < 1e-5);
    }

    #[test]
    fn cq_mutual_info_examples() {
        let zero = DensityMatrix::from_vector(&ket(&[1.0, 0.0])).unwrap();
        let one = DensityMatrix::from_vector(&ket(&[0.0, 1.0])).unwrap();
        let ortho = CqEnsemble::new(vec![(0.25, 0, zero.clone()), (0.75, 1, one)]).unwrap();
        let h = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((ortho.mutual_info() - h).abs() < 1e-10);
        let same = CqEnsemble::new(vec![(0.5, 0, zero.clone()), (0.5, 1, zero)]).unwrap();
        assert!(same.mutual_info().abs() < 1e-10);
    }

    #[test]
    fn fidelity_and_trace_distance_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let zero = PureState::new(ket(&[1.0, 0.0])).unwrap();
        let plus = PureState::new(ket(&[s, s])).unwrap();
        let f = fidelity(&zero.density(), &plus.density()).unwrap();
        assert!((f - s).abs() < 1e-10);
        assert!((fidelity_pure(&zero, &plus).unwrap() - s).abs() < 1e-12);
        let td = trace_distance(&zero.density(), &plus.density()).unwrap();
        assert!((td - 2f64.sqrt()).abs() < 1e-10);
        let r = zero.density();
        assert!((fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-10);
        assert!(trace_distance(&r, &r).unwrap().abs() < 1e-12);
    }

    #[test]
    fn purification_traces_back() {
        let mixed = DensityMatrix::<f64>::maximally_mixed(2);
        let psi = purify(&mixed);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mags: Vec<f64> = psi.vector().iter().map(|z| z.norm()).collect();
        assert!(mags.iter().filter(|&&m| (m - s).abs() < 1e-12).count() == 2);
        let pure = DensityMatrix::from_vector(&ket(&[0.6, 0.8])).unwrap();
        let p = purify(&pure);
        // |e⟩|0⟩: only even K-index entries are nonzero.
        assert!(p.vector()[1].norm() < 1e-12 && p.vector()[3].norm() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random::density(&mut rng, 3, 3);
        let back = reduce_to_h(purify(&rho).vector(), 3);
        assert!((back - rho.matrix()).iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn local_transition_examples() {
        let zero = DensityMatrix::from_vector(&ket(&[1.0, 0.0])).unwrap();
        let one = DensityMatrix::from_vector(&ket(&[0.0, 1.0])).unwrap();
        let lt = local_transition(&zero, &zero, &purify(&zero), &purify(&zero)).unwrap();
        assert!((lt.overlap - 1.0).abs() < 1e-12 && lt.distance < 1e-6);
        let lt = local_transition(&zero, &one, &purify(&zero), &purify(&one)).unwrap();
        assert!(lt.overlap < 1e-12);
        assert!((lt.distance - 2.0).abs() < 1e-12);
        assert!((lt.bound - 2.0 * 2f64.sqrt()).abs() < 1e-9 && lt.bound_holds);
        let bad = PureState::new(ket(&[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!(matches!(local_transition(&one, &one, &bad, &bad), Err(QinfoError::NotPurification(_))));
    }

    #[test]
    fn realification_examples() {
        let v = ket(&[0.6, 0.8]);
        let r = realify_vector(&v);
        assert_eq!(r.len(), 4);
        assert_eq!(r[1], Complex::new(0.0, 0.0));
        assert!((r.norm() - 1.0).abs() < 1e-15);
        let i = Complex::new(0.0, 1.0);
        let phase = CMat::from_diagonal(&CVec::from_vec(vec![Complex::new(1.0, 0.0), i]));
        let o = realify_matrix(&phase);
        let expect = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, -1.0], [0.0, 0.0, 1.0, 0.0]];
        for (a, row) in expect.iter().enumerate() {
            for (b, &x) in row.iter().enumerate() {
                assert_eq!(o[(a, b)], Complex::new(x, 0.0));
            }
        }
        assert!((o.transpose() * &o - CMat::identity(4, 4)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = random::density(&mut rng, 3, 3);
        assert!((entropy(&rho) - entropy(&realify_state(&rho))).abs() < 1e-9);
    }

    #[test]
    fn weak_triangle_examples() {
        let u = [1.0, 0.0, 0.0];
        assert!(weak_triangle_gap(&u, &u, &u).unwrap().abs() < 1e-15);
        let gap = weak_triangle_gap(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]).unwrap();
        assert!((gap - 3.0).abs() < 1e-15);
        assert!(matches!(weak_triangle_gap(&[2.0], &[1.0], &[1.0]), Err(QinfoError::NotUnit(_))));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random::density(&mut rng, 2, 2);
        let b = random::density(&mut rng, 3, 2);
        let ab = a.kron(&b);
        assert!((ab.partial_trace(&[2, 3], &[0]).matrix() - a.matrix()).norm() < 1e-12);
        assert!((ab.partial_trace(&[2, 3], &[1]).matrix() - b.matrix()).norm() < 1e-12);
        assert!(mutual_info(&ab, 2, 3).abs() < 1e-10);
    }
}
