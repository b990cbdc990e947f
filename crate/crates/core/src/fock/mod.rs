//! Dense linear algebra over labelled, truncated multi-mode Fock spaces.
//!
//! States and operators carry their [`FockSpace`], so composition,
//! partial traces and partial transposes are addressed by mode label
//! rather than by raw tensor position.

mod space;
mod state;

pub use space::{FockSpace, MAX_DENSE_DIM};
pub use state::{
    hermiticity_error, CMatrix, CVector, DensityOperator, LinearOperator, Operator, PureState,
    State, HERMITIAN_TOL, NORM_TOL, TRACE_TOL, UNITARY_TOL,
};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues below this are rejected by [`von_neumann_entropy`].
pub const ENTROPY_NEGATIVE_TOL: f64 = 1e-8;

/// Ordered tensor composition over concatenated mode labels.
pub trait Tensor: Sized {
    fn tensor(parts: &[&Self]) -> Result<Self>;
}

fn concat_spaces<'a>(spaces: impl Iterator<Item = &'a FockSpace>) -> Result<FockSpace> {
    let mut spaces = spaces;
    let first = spaces
        .next()
        .ok_or_else(|| Error::InvalidParameter("empty tensor product".into()))?
        .clone();
    spaces.try_fold(first, |acc, s| acc.concat(s))
}

impl Tensor for PureState {
    fn tensor(parts: &[&Self]) -> Result<Self> {
        let space = concat_spaces(parts.iter().map(|p| p.space()))?;
        let v = parts[1..]
            .iter()
            .fold(parts[0].amplitudes().clone(), |acc, p| acc.kronecker(p.amplitudes()));
        PureState::new(space, v)
    }
}

impl Tensor for DensityOperator {
    fn tensor(parts: &[&Self]) -> Result<Self> {
        let space = concat_spaces(parts.iter().map(|p| p.space()))?;
        let m = parts[1..]
            .iter()
            .fold(parts[0].matrix().clone(), |acc, p| acc.kronecker(p.matrix()));
        let deficit = 1.0 - parts.iter().map(|p| p.trace()).product::<f64>();
        DensityOperator::with_deficit(space, m, deficit.max(0.0))
    }
}

impl Tensor for LinearOperator {
    fn tensor(parts: &[&Self]) -> Result<Self> {
        let space = concat_spaces(parts.iter().map(|p| p.space()))?;
        let m = parts[1..]
            .iter()
            .fold(parts[0].matrix().clone(), |acc, p| acc.kronecker(p.matrix()));
        LinearOperator::new(space, m)
    }
}

/// Traces out every mode not listed in `keep`. The kept modes retain
/// their original relative order.
pub fn partial_trace<S: AsRef<str>>(rho: &DensityOperator, keep: &[S]) -> Result<DensityOperator> {
    if keep.is_empty() {
        return Err(Error::InvalidParameter("partial trace must keep at least one mode".into()));
    }
    let mut positions = rho.space().positions_of(keep)?;
    positions.sort_unstable();
    let f = rho.space().factor(&positions)?;
    let m = rho.matrix();
    let ds = f.sub.dim();
    let mut out = CMatrix::zeros(ds, ds);
    for r in 0..f.rest_dim() {
        for sj in 0..ds {
            let j = f.join(sj, r);
            for si in 0..ds {
                out[(si, sj)] += m[(f.join(si, r), j)];
            }
        }
    }
    Ok(DensityOperator::from_parts(f.sub, out))
}

/// Transposes the tensor factor spanned by `subsystem`:
/// ⟨a s|ρ^T|a' s'⟩ = ⟨a s'|ρ|a' s⟩.
pub fn partial_transpose<S: AsRef<str>>(rho: &DensityOperator, subsystem: &[S]) -> Result<DensityOperator> {
    let positions = rho.space().positions_of(subsystem)?;
    if positions.is_empty() || positions.len() == rho.space().num_modes() {
        return Err(Error::InvalidParameter(
            "partial transpose needs a nonempty proper subset of modes".into(),
        ));
    }
    let f = rho.space().factor(&positions)?;
    let m = rho.matrix();
    let d = rho.space().dim();
    let mut out = CMatrix::zeros(d, d);
    for i in 0..d {
        let (si, ri) = (f.sub_index[i], f.rest_index[i]);
        for j in 0..d {
            let (sj, rj) = (f.sub_index[j], f.rest_index[j]);
            out[(i, j)] = m[(f.join(sj, ri), f.join(si, rj))];
        }
    }
    Ok(DensityOperator::from_parts(rho.space().clone(), out))
}

/// Smallest eigenvalue of a Hermitian operator.
pub fn min_eigenvalue<O: Operator>(op: &O) -> Result<f64> {
    let herm = hermiticity_error(op.matrix());
    if herm > HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    Ok(state::hermitian_eigenvalues(op.matrix())[0])
}

/// ⟨φ|M|φ⟩ or Tr(Mρ) for Hermitian `M`; the imaginary residue is checked
/// against 1e-12 and dropped.
pub fn expectation<O: Operator, S: State>(op: &O, state: &S) -> Result<f64> {
    if op.space() != state.space() {
        return Err(Error::SpaceMismatch);
    }
    let v = state.raw_expectation(op.matrix());
    if v.im.abs() > 1e-12 {
        return Err(Error::NotHermitian(v.im.abs()));
    }
    Ok(v.re)
}

/// Von Neumann entropy in nats, −Σ λ ln λ with 0 ln 0 = 0.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    let ev = rho.eigenvalues();
    if let Some(&low) = ev.first() {
        if low < -ENTROPY_NEGATIVE_TOL {
            return Err(Error::Unphysical(format!("eigenvalue {low:e} is negative")));
        }
    }
    Ok(ev
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum::<f64>()
        .max(0.0))
}

/// Annihilation operator of a single mode truncated at `cutoff`.
pub fn annihilation(cutoff: usize) -> CMatrix {
    let d = cutoff + 1;
    CMatrix::from_fn(d, d, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Photon-number operator of `mode` lifted to `space`.
pub fn number_operator(space: &FockSpace, mode: &str) -> Result<LinearOperator> {
    let p = space.position(mode)?;
    let d = space.dim();
    let mut m = CMatrix::zeros(d, d);
    for (i, occ) in space.basis().enumerate() {
        m[(i, i)] = Complex64::new(occ[p] as f64, 0.0);
    }
    LinearOperator::new(space.clone(), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag_state(label: &str, w: &[f64]) -> DensityOperator {
        let s = FockSpace::single(label, w.len() - 1).unwrap();
        DensityOperator::diagonal(s, w).unwrap()
    }

    #[test]
    fn vacuum_composition() {
        let a = PureState::vacuum(FockSpace::single("a", 1).unwrap());
        let b = PureState::vacuum(FockSpace::single("b", 1).unwrap());
        let ab = PureState::tensor(&[&a, &b]).unwrap();
        assert_eq!(ab.space().labels(), &["a", "b"]);
        assert_eq!(ab.amplitudes()[0], c(1.0));
        assert_abs_diff_eq!(ab.amplitudes().norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_kronecker() {
        let a = diag_state("a", &[0.5, 0.5]);
        let b = diag_state("b", &[1.0, 0.0]);
        let ab = DensityOperator::tensor(&[&a, &b]).unwrap();
        let d: Vec<f64> = ab.matrix().diagonal().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn product_of_input_weights() {
        let a = diag_state("A1", &[0.9, 0.1]);
        let b = diag_state("B1", &[0.8, 0.2]);
        let ab = DensityOperator::tensor(&[&a, &b]).unwrap();
        let expected = [0.72, 0.18, 0.08, 0.02];
        for (k, occ) in [[0, 0], [0, 1], [1, 0], [1, 1]].iter().enumerate() {
            let i = ab.space().index_of(occ).unwrap();
            assert_abs_diff_eq!(ab.matrix()[(i, i)].re, expected[k], epsilon = 1e-15);
        }
    }

    #[test]
    fn tensor_rejects_duplicate_label() {
        let a = diag_state("A1", &[1.0, 0.0]);
        match DensityOperator::tensor(&[&a, &a]) {
            Err(Error::DuplicateMode(l)) => assert_eq!(l, "A1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn partial_trace_recovers_factor() {
        let a = diag_state("a", &[0.3, 0.7]);
        let b = diag_state("b", &[0.6, 0.1, 0.3]);
        let ab = DensityOperator::tensor(&[&a, &b]).unwrap();
        let ra = partial_trace(&ab, &["a"]).unwrap();
        assert!((ra.matrix() - a.matrix()).norm() < 1e-15);
        let rb = partial_trace(&ab, &["b"]).unwrap();
        assert!((rb.matrix() - b.matrix()).norm() < 1e-15);
        assert!(matches!(partial_trace(&ab, &["zz"]), Err(Error::UnknownMode(_))));
    }

    #[test]
    fn partial_trace_of_two_branch_state() {
        // (|1,0,0,1> - |0,1,1,0>)/sqrt2 on A1,A2,B1,B2 with cutoff 1
        let s = FockSpace::new(&["A1", "A2", "B1", "B2"], &[1, 1, 1, 1]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = PureState::superposition(
            s,
            &[(c(h), &[1, 0, 0, 1][..]), (c(-h), &[0, 1, 1, 0][..])],
        )
        .unwrap();
        let ra = partial_trace(&psi.to_density(), &["A1", "A2"]).unwrap();
        let ev = ra.eigenvalues();
        let expected = [0.0, 0.0, 0.5, 0.5];
        for (e, x) in ev.iter().zip(expected) {
            assert_abs_diff_eq!(*e, x, epsilon = 1e-14);
        }
    }

    #[test]
    fn trace_to_single_vacuum_mode() {
        let s = FockSpace::new(&["a", "b"], &[2, 2]).unwrap();
        let psi = PureState::superposition(
            s,
            &[(c(1.0), &[0, 1][..]), (c(1.0), &[0, 2][..])],
        )
        .unwrap();
        let ra = partial_trace(&psi.to_density(), &["a"]).unwrap();
        assert_abs_diff_eq!(ra.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert!(ra.matrix().iter().skip(1).all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn transpose_of_diagonal_is_identity_map() {
        let a = diag_state("a", &[0.2, 0.8]);
        let b = diag_state("b", &[0.5, 0.5]);
        let ab = DensityOperator::tensor(&[&a, &b]).unwrap();
        let t = partial_transpose(&ab, &["b"]).unwrap();
        assert_eq!(t.matrix(), ab.matrix());
        assert!(partial_transpose(&ab, &["a", "b"]).is_err());
        assert!(partial_transpose(&ab, &["q"]).is_err());
    }

    #[test]
    fn min_eigenvalue_examples() {
        let s = FockSpace::single("a", 2).unwrap();
        let id = LinearOperator::new(s.clone(), CMatrix::identity(3, 3).unscale(3.0)).unwrap();
        assert_abs_diff_eq!(min_eigenvalue(&id).unwrap(), 1.0 / 3.0, epsilon = 1e-14);
        let d = nalgebra::DVector::from_vec(vec![c(0.2), c(0.8), c(-0.1)]);
        let op = LinearOperator::new(s.clone(), CMatrix::from_diagonal(&d)).unwrap();
        assert_abs_diff_eq!(min_eigenvalue(&op).unwrap(), -0.1, epsilon = 1e-14);
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 1)] = c(1.0);
        let bad = LinearOperator::new(s, m).unwrap();
        assert!(matches!(min_eigenvalue(&bad), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn expectation_examples() {
        let s = FockSpace::single("a", 3).unwrap();
        let n = number_operator(&s, "a").unwrap();
        let vac = PureState::vacuum(s.clone());
        assert_eq!(expectation(&n, &vac).unwrap(), 0.0);
        let rho = DensityOperator::diagonal(s.clone(), &[0.25; 4]).unwrap();
        let one = LinearOperator::identity(s);
        assert_abs_diff_eq!(expectation(&one, &rho).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expectation(&n, &rho).unwrap(), 1.5, epsilon = 1e-15);
        let other = PureState::vacuum(FockSpace::single("b", 3).unwrap());
        assert!(matches!(expectation(&n, &other), Err(Error::SpaceMismatch)));
    }

    #[test]
    fn entropy_examples() {
        let s = FockSpace::single("a", 1).unwrap();
        let pure = PureState::superposition(
            s.clone(),
            &[(c(1.0), &[0][..]), (Complex64::new(0.0, 1.0), &[1][..])],
        )
        .unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&pure.to_density()).unwrap(), 0.0, epsilon = 1e-12);
        let mixed = DensityOperator::diagonal(s.clone(), &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&mixed).unwrap(), 2f64.ln(), epsilon = 1e-14);
        let bad = DensityOperator::from_parts(
            s,
            CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.1), c(-0.1)])),
        );
        assert!(matches!(von_neumann_entropy(&bad), Err(Error::Unphysical(_))));
    }

    #[test]
    fn annihilation_lowers() {
        let a = annihilation(3);
        let s = FockSpace::single("a", 3).unwrap();
        let three = PureState::basis(s, &[3]).unwrap();
        let v = &a * three.amplitudes();
        assert_abs_diff_eq!(v[2].re, 3f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn embed_matches_kronecker() {
        let s = FockSpace::new(&["a", "b"], &[1, 2]).unwrap();
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let e = LinearOperator::embed(&s, &["a"], &x).unwrap();
        let k = x.kronecker(&CMatrix::identity(3, 3));
        assert_eq!(e.matrix(), &k);
        let eb = LinearOperator::embed(&s, &["b"], &annihilation(2)).unwrap();
        let kb = CMatrix::identity(2, 2).kronecker(&annihilation(2));
        assert_eq!(eb.matrix(), &kb);
    }

    fn random_density(label: &str, dim: usize, seed: &[f64]) -> DensityOperator {
        // G G^dag / Tr, from a seed-filled complex matrix
        let g = CMatrix::from_fn(dim, dim, |i, j| {
            let k = (i * dim + j) * 2;
            Complex64::new(seed[k % seed.len()], seed[(k + 1) % seed.len()])
        });
        let m = &g * g.adjoint();
        let t = m.trace().re;
        let s = FockSpace::single(label, dim - 1).unwrap();
        DensityOperator::new(s, m.unscale(t)).unwrap()
    }

    proptest! {
        #[test]
        fn transpose_is_involution_and_products_are_ppt(
            sa in prop::collection::vec(-1.0f64..1.0, 18),
            sb in prop::collection::vec(-1.0f64..1.0, 18),
        ) {
            prop_assume!(sa.iter().map(|x| x.abs()).sum::<f64>() > 0.5);
            prop_assume!(sb.iter().map(|x| x.abs()).sum::<f64>() > 0.5);
            let a = random_density("a", 3, &sa);
            let b = random_density("b", 3, &sb);
            let ab = DensityOperator::tensor(&[&a, &b]).unwrap();
            prop_assert!((ab.trace() - 1.0).abs() < 1e-10);

            let t = partial_transpose(&ab, &["b"]).unwrap();
            prop_assert!(hermiticity_error(t.matrix()) < 1e-12);
            prop_assert!((t.trace() - ab.trace()).abs() < 1e-12);
            let tt = partial_transpose(&t, &["b"]).unwrap();
            prop_assert!((tt.matrix() - ab.matrix()).iter().all(|z| z.norm() < 1e-14));
            prop_assert!(min_eigenvalue(&t).unwrap() >= -1e-10);

            let ra = partial_trace(&ab, &["a"]).unwrap();
            prop_assert!(hermiticity_error(ra.matrix()) < 1e-12);
            prop_assert!((ra.trace() - 1.0).abs() < 1e-12);

            let sab = von_neumann_entropy(&ab).unwrap();
            let sum = von_neumann_entropy(&a).unwrap() + von_neumann_entropy(&b).unwrap();
            prop_assert!((sab - sum).abs() < 1e-9);
        }
    }
}
