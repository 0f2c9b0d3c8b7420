use std::collections::BTreeMap;

use heatmom::analytic::{i_ell_closed_form, i_ell_recurrence_step, AnalyticOracle};
use heatmom::compare::{compare_occupation, relative_error};
use heatmom::index::{enumerate_matrix_basis, enumerate_moment_vector};
use heatmom::quadrature::GaussLegendre;
use heatmom::relaxation::{build_layout, hermitian_embedding};
use heatmom::solver::psd::{project_psd, smat, svec};
use heatmom::*;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn index_strategy() -> impl Strategy<Value = MomentIndex> {
    (0u32..8, prop::collection::vec(-8i32..=8, 0..7)).prop_map(|(l, f)| MomentIndex::new(l, f))
}

fn hermitian_strategy() -> impl Strategy<Value = DMatrix<Complex<f64>>> {
    (1usize..7).prop_flat_map(|n| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
            let a = DMatrix::from_fn(n, n, |i, j| {
                let (re, im) = v[i * n + j];
                Complex::new(re, im)
            });
            (&a + a.adjoint()) * Complex::new(0.5, 0.0)
        })
    })
}

fn symmetric_strategy() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..7).prop_flat_map(|n| {
        prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| {
            let a = DMatrix::from_vec(n, n, v);
            (&a + a.transpose()) * 0.5
        })
    })
}

fn initial_data_strategy() -> impl Strategy<Value = InitialData<f64>> {
    (0.1f64..2.0, prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2)).prop_map(|(mean, modes)| {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0, Complex::new(mean, 0.0));
        for (n, (re, im)) in modes.into_iter().enumerate() {
            let n = n as i32 + 1;
            coeffs.insert(n, Complex::new(re, im));
            coeffs.insert(-n, Complex::new(re, -im));
        }
        InitialData::new(coeffs).unwrap()
    })
}

fn sorted(v: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = v.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn canonicalize_is_idempotent(idx in index_strategy()) {
        let c = canonicalize(&idx);
        let again = canonicalize(&c.index);
        prop_assert_eq!(&again.index, &c.index);
        prop_assert!(!again.conjugated);
    }

    #[test]
    fn canonicalize_identifies_conjugates(idx in index_strategy()) {
        let c = canonicalize(&idx);
        let n = canonicalize(&idx.negated());
        prop_assert_eq!(&c.index, &n.index);
        if !idx.is_self_conjugate() {
            prop_assert_ne!(c.conjugated, n.conjugated);
        }
        let back = if c.conjugated { c.index.negated() } else { c.index.clone() };
        prop_assert_eq!(back, idx);
    }

    #[test]
    fn canonicalize_ignores_order(l in 0u32..4, mut f in prop::collection::vec(-5i32..=5, 0..6)) {
        let a = canonicalize(&MomentIndex::new(l, f.clone()));
        f.reverse();
        prop_assert_eq!(a, canonicalize(&MomentIndex::new(l, f)));
    }

    #[test]
    fn embedding_doubles_spectrum(h in hermitian_strategy()) {
        let lam = SymmetricEigen::new(h.clone()).eigenvalues;
        let doubled = sorted(lam.iter().flat_map(|&v| [v, v]));
        let emb = sorted(SymmetricEigen::new(hermitian_embedding(&h)).eigenvalues.iter().copied());
        for (a, b) in doubled.iter().zip(&emb) {
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn psd_projection_is_idempotent(m in symmetric_strategy()) {
        let p = project_psd(m.clone());
        let min = SymmetricEigen::new(p.clone()).eigenvalues.min();
        prop_assert!(min >= -1e-12);
        prop_assert!((project_psd(p.clone()) - &p).amax() <= 1e-12);
        prop_assert!((smat(&svec(&m), m.nrows()) - &m).amax() <= 1e-15);
    }

    #[test]
    fn recurrence_matches_quadrature(n in 1u64..=72, ell in 0u32..=6) {
        let nf = n as f64;
        let mut i = (1.0 - (-nf).exp()) / nf;
        for l in 0..ell {
            i = i_ell_recurrence_step(l, n, i);
        }
        let quad = GaussLegendre::<f64>::new(64).integrate(|t| t.powi(ell as i32) * (-nf * t).exp());
        prop_assert!((i - quad).abs() <= 1e-12, "{} vs {}", i, quad);
    }

    #[test]
    fn closed_form_matches_quadrature(n in 8u64..=64, ell in 0u32..=6) {
        let nf = n as f64;
        let closed: f64 = i_ell_closed_form(ell, n);
        let quad = GaussLegendre::<f64>::new(64).integrate(|t| t.powi(ell as i32) * (-nf * t).exp());
        prop_assert!(((closed - quad) / quad).abs() <= 1e-9, "{} vs {}", closed, quad);
    }

    #[test]
    fn relative_error_of_identity_is_zero(re in -1e3f64..1e3, im in -1e3f64..1e3) {
        let z = Complex::new(re, im);
        prop_assert_eq!(relative_error(z, z), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sizes_match_enumeration(t in 0u32..4, a in 0u32..4, h in 0u32..3) {
        let d = TruncationDegrees::new(2 * t, 2 * a, h).unwrap();
        prop_assert_eq!(enumerate_moment_vector(&d).len() as u128, d.moment_vector_len());
        prop_assert_eq!(enumerate_matrix_basis(&d).len() as u128, d.matrix_basis_len());
    }

    #[test]
    fn layout_round_trips_tables(u0 in initial_data_strategy()) {
        let d = TruncationDegrees::new(2, 2, 2).unwrap();
        let tables = AnalyticOracle::new(u0).tables(&d);
        let layout = build_layout(&d);
        let x = layout.embed(&tables).unwrap();
        let (occ, term) = layout.extract(&x).unwrap();
        for idx in enumerate_moment_vector(&d) {
            prop_assert_eq!(occ.get(&idx), tables.occupation.get(&idx));
            prop_assert_eq!(term.get(&idx), tables.terminal.get(&idx));
        }
        let hist = compare_occupation(&occ, &tables.occupation).unwrap();
        prop_assert!(hist.bins.iter().all(|b| b.percentage == 100.0));
    }

    #[test]
    fn csv_round_trips_tables(u0 in initial_data_strategy()) {
        let d = TruncationDegrees::new(2, 2, 1).unwrap();
        let tables = AnalyticOracle::new(u0).tables(&d);
        let mut buf = Vec::new();
        tables.write_csv(&mut buf).unwrap();
        let back = MeasureTables::<f64>::read_csv(buf.as_slice()).unwrap();
        for m in MeasureTag::ALL {
            for (idx, v) in tables.table(m).iter() {
                prop_assert_eq!(back.table(m).get(idx), Some(*v));
            }
        }
    }
}
