use super::*;
use crate::channels::kraus::{mutation_kraus, reset_kraus, sorting_kraus, uqcm_kraus};
use crate::channels::{mutation_channel_exact, reset_channel, sorting_channel, uqcm_clone_channel, Cloner, DEFAULT_MUTATION_PROBABILITY};
use crate::linalg::{identity, tensor, tensor_power};
use crate::random::RngStream;
use crate::state::partial_trace;

fn small() -> PopulationLayout {
    PopulationLayout::new(4, 1).unwrap()
}

fn kraus_superoperator(kraus: &[CMatrix]) -> CMatrix {
    let n = kraus[0].nrows();
    kraus.iter().fold(CMatrix::zeros(n * n, n * n), |acc, e| acc + tensor(&e.conjugate(), e))
}

fn random_vector(n: usize, rng: &mut RngStream) -> CVector {
    CVector::from_fn(n, |_, _| rng.complex_normal())
}

fn variants() -> Vec<Variant> {
    let mut out = Variant::standard_set();
    for v in out.iter_mut() {
        if v.mutation == MutationMode::Sampled {
            v.mutation = MutationMode::Exact;
        }
    }
    out
}

#[test]
fn vectorization_round_trip_and_identity() {
    let mut rng = RngStream::new(1);
    let m = CMatrix::from_fn(16, 16, |_, _| rng.complex_normal());
    assert_eq!(unvectorize(&vectorize(&m), 16).unwrap(), m);
    assert_eq!(vectorize(&m)[1], m[(1, 0)]);
    let id = Channel::identity(small());
    let v = random_vector(256, &mut rng);
    assert_eq!(vectorize_apply(&id, &v).unwrap(), v);
    assert_eq!(dense_superoperator(&id).unwrap(), identity(256));
    assert!(matches!(vectorize_apply(&id, &random_vector(10, &mut rng)), Err(QgaError::Range(_))));
}

#[test]
fn vectorized_channel_is_linear() {
    let layout = small();
    let mut rng = RngStream::new(2);
    let h = ProblemHamiltonian::random(1, &mut rng);
    let t = generation_channel(layout, &h, &variants()[3]).unwrap();
    let (u, v) = (random_vector(256, &mut rng), random_vector(256, &mut rng));
    let (a, b) = (C64::new(0.3, -1.2), C64::new(-2.0, 0.5));
    let lhs = vectorize_apply(&t, &(&u * a + &v * b)).unwrap();
    let rhs = vectorize_apply(&t, &u).unwrap() * a + vectorize_apply(&t, &v).unwrap() * b;
    assert!((lhs - rhs).norm() < 1e-10);
}

#[test]
fn superoperator_matches_kraus_oracle() {
    let layout = small();
    let mut rng = RngStream::new(3);
    let h = ProblemHamiltonian::random(1, &mut rng);
    let cases = [
        (sorting_channel(layout, &h).unwrap(), sorting_kraus(layout, &h)),
        (uqcm_clone_channel(layout), uqcm_kraus(layout)),
        (reset_channel(layout, &Cloner::Uqcm.reference(layout)).unwrap(), reset_kraus(layout, &Cloner::Uqcm.reference(layout))),
        (mutation_channel_exact(layout, 0.2).unwrap(), mutation_kraus(layout, 0.2)),
    ];
    for (channel, kraus) in cases {
        let dense = dense_superoperator(&channel).unwrap();
        assert!((dense - kraus_superoperator(&kraus)).norm() < 1e-10);
    }
}

#[test]
fn dense_cap_is_enforced() {
    let layout = PopulationLayout::standard();
    let err = dense_superoperator(&Channel::identity(layout)).unwrap_err();
    assert!(matches!(err, QgaError::Size(_)));
    let opts = SpectralOptions { method: EigenMethod::Dense, ..Default::default() };
    assert!(top_eigenpairs_with(&Channel::identity(layout), &opts).is_err());
}

#[test]
fn single_qubit_mutation_spectrum() {
    // Pauli transfer matrix of the depolarizing channel: diag(1, 1 - 4p/3, ...).
    let p = DEFAULT_MUTATION_PROBABILITY;
    let paulis = [crate::channels::Pauli::I, crate::channels::Pauli::X, crate::channels::Pauli::Y, crate::channels::Pauli::Z];
    let weights = [1.0 - p, p / 3.0, p / 3.0, p / 3.0];
    let map = |m: CMatrix| {
        paulis.iter().zip(weights).fold(CMatrix::zeros(2, 2), |acc, (s, w)| {
            let u = s.matrix();
            acc + &u * &m * u.adjoint() * C64::new(w, 0.0)
        })
    };
    let dense = dense_superoperator_of(2, map);
    let values: Vec<C64> = dense_eigenpairs(&dense).iter().map(|e| e.value).collect();
    let expected = [1.0, 17.0 / 18.0, 17.0 / 18.0, 17.0 / 18.0];
    for (got, want) in values.iter().zip(expected) {
        assert!((got - want).norm() < 1e-12, "{values:?}");
    }
    let pairs = krylov_schur(|v| &dense * v, 4, 4, &ArnoldiOptions::default()).unwrap();
    for (got, want) in pairs.iter().zip(expected) {
        assert!((got.value - want).norm() < 1e-12);
    }
}

#[test]
fn population_mutation_spectrum_is_resolved_despite_degeneracy() {
    // Pauli strings of weight w have eigenvalue (17/18)^w; weight one has multiplicity 12.
    let layout = small();
    let channel = mutation_channel_exact(layout, DEFAULT_MUTATION_PROBABILITY).unwrap();
    let pairs = top_eigenpairs(&channel, 13).unwrap();
    assert!((pairs[0].value - 1.0).norm() < 1e-10);
    for p in &pairs[1..] {
        assert!((p.value - 17.0 / 18.0).norm() < 1e-10, "{}", p.value);
    }
}

#[test]
fn arnoldi_matches_dense_at_small_scale() {
    let layout = small();
    let mut rng = RngStream::new(4);
    for _ in 0..3 {
        let h = ProblemHamiltonian::random(1, &mut rng);
        for v in variants() {
            let t = generation_channel(layout, &h, &v).unwrap();
            let dense = dense_eigenpairs(&dense_superoperator(&t).unwrap());
            let opts = SpectralOptions { method: EigenMethod::Arnoldi, ..Default::default() };
            let pairs = top_eigenpairs_with(&t, &opts).unwrap();
            assert_eq!(pairs.len(), 6);
            assert!((pairs[0].value - 1.0).norm() < 1e-8);
            for (p, d) in pairs.iter().zip(&dense) {
                assert!((p.value.norm() - d.value.norm()).abs() < 1e-8, "{} vs {}", p.value, d.value);
                assert!(dense.iter().take(12).any(|d| (d.value - p.value).norm() < 1e-8));
            }
        }
    }
}

#[test]
fn eigenvalues_close_under_conjugation() {
    let layout = small();
    let h = ProblemHamiltonian::random(1, &mut RngStream::new(5));
    let t = generation_channel(layout, &h, &Variant::without_mutation(Cloner::Uqcm)).unwrap();
    let values: Vec<C64> = dense_eigenpairs(&dense_superoperator(&t).unwrap()).iter().map(|e| e.value).collect();
    for z in &values {
        assert!(values.iter().any(|w| (w - z.conj()).norm() < 1e-9));
    }
}

/// Nonzero spectrum of the full-scale channel from a 256-dimensional dense map.
///
/// The reset factors the generation channel as `A ∘ P` with `P` the partial trace
/// onto the surviving registers, so `T = A ∘ P` and `P ∘ A` share nonzero eigenvalues.
fn reduced_oracle(layout: PopulationLayout, h: &ProblemHamiltonian, variant: &Variant) -> Vec<C64> {
    let rest = {
        let mut parts = vec![crate::channels::clone_channel(layout, variant.cloner), crate::channels::crossover_swap(layout)];
        if variant.mutation != MutationMode::Off {
            parts.push(mutation_channel_exact(layout, variant.p_m).unwrap());
        }
        parts.push(sorting_channel(layout, h).unwrap());
        Channel::compose(layout, parts).unwrap()
    };
    let lower = tensor_power(&variant.cloner.reference(layout), layout.upper());
    let upper_dim = layout.individual_dim().pow(layout.upper() as u32);
    let map = |x: CMatrix| {
        let full = rest.apply_matrix(&tensor(&x, &lower)).unwrap();
        partial_trace(layout, &full, &(0..layout.upper()).collect::<Vec<_>>()).unwrap()
    };
    dense_eigenpairs(&dense_superoperator_of(upper_dim, map)).iter().map(|e| e.value).collect()
}

#[test]
fn arnoldi_matches_reduced_oracle_at_full_scale() {
    let layout = PopulationLayout::standard();
    let h = ProblemHamiltonian::random(2, &mut RngStream::new(6));
    for cloner in [Cloner::Bcqo, Cloner::Uqcm] {
        let v = Variant::without_mutation(cloner);
        let oracle = reduced_oracle(layout, &h, &v);
        let t = generation_channel(layout, &h, &v).unwrap();
        let pairs = top_eigenpairs(&t, 6).unwrap();
        for (p, o) in pairs.iter().zip(&oracle) {
            assert!((p.value.norm() - o.norm()).abs() < 1e-8, "{cloner:?}: {} vs {}", p.value, o);
            assert!(oracle.iter().take(12).any(|o| (o - p.value).norm() < 1e-8));
        }
    }
}

#[test]
fn fixed_point_agrees_with_long_iteration() {
    let layout = PopulationLayout::standard();
    let mut rng = RngStream::new(7);
    let h = ProblemHamiltonian::random(2, &mut rng);
    for cloner in [Cloner::Bcqo, Cloner::Uqcm] {
        let t = generation_channel(layout, &h, &Variant::without_mutation(cloner)).unwrap();
        let fp = fixed_point(&t).unwrap();
        assert_eq!(fp.multiplicity, 1);
        assert!(fp.residual < 1e-7, "{}", fp.residual);
        assert!((fp.state.trace() - 1.0).norm() < 1e-12);
        assert!(fp.state.min_eigenvalue() > -1e-9);
        let mut rho = PopulationState::random_mixed(layout, 2, &mut rng);
        for _ in 0..50 {
            rho = t.apply(&rho);
        }
        let gap = trace_norm(&(rho.matrix() - fp.state.matrix()));
        assert!(gap < 1e-5, "{cloner:?}: {gap}");
        let pred = predict(&t, &h).unwrap();
        assert!(!pred.flagged);
        assert!((0.0..1.0).contains(&pred.gamma));
        assert!((pred.f_inf - crate::engine::qga_fidelity(&rho, &h).unwrap()).abs() < 1e-5);
    }
}

#[test]
fn exact_cloning_has_one_fixed_point_per_homogeneous_population() {
    // With a computational problem basis BCQO copies perfectly, so every population
    // |jjjj> is absorbing and the fixed set is four-dimensional.
    let layout = PopulationLayout::standard();
    let h = ProblemHamiltonian::computational(2);
    let t = generation_channel(layout, &h, &Variant::without_mutation(Cloner::Bcqo)).unwrap();
    let fp = fixed_point(&t).unwrap();
    assert_eq!(fp.multiplicity, 4);
    assert!(fp.degenerate() && !fp.oscillating);
    assert!(fp.residual < 1e-7);
    assert!(predict(&t, &h).unwrap().flagged);
    for j in 0..4 {
        let k = layout.index_of(&[j; 4]);
        let rho = PopulationState::pure(layout, &crate::state::PureState::basis(256, k)).unwrap();
        assert_eq!(t.apply(&rho), rho);
    }
    // UQCM does not clone exactly and keeps a unique fixed point.
    let t = generation_channel(layout, &h, &Variant::without_mutation(Cloner::Uqcm)).unwrap();
    assert_eq!(fixed_point(&t).unwrap().multiplicity, 1);
}

#[test]
fn distance_to_fixed_point_decays_at_the_subradius() {
    let layout = small();
    let mut rng = RngStream::new(8);
    let h = ProblemHamiltonian::random(1, &mut rng);
    let t = generation_channel(layout, &h, &Variant::without_mutation(Cloner::Uqcm)).unwrap();
    let fp = fixed_point(&t).unwrap();
    let mut rho = PopulationState::random_mixed(layout, 3, &mut rng);
    let mut dist = Vec::new();
    for g in 1..=10 {
        rho = t.apply(&rho);
        if g >= 4 {
            dist.push(trace_norm(&(rho.matrix() - fp.state.matrix())));
        }
    }
    let ratio = (dist[6] / dist[0]).powf(1.0 / 6.0);
    assert!(ratio <= 2.0 * fp.gamma && ratio >= 0.5 * fp.gamma, "{ratio} vs {}", fp.gamma);
}

#[test]
fn report_serialization() {
    let layout = small();
    let h = ProblemHamiltonian::random(1, &mut RngStream::new(9));
    let report = analyze(layout, &h, &Variant::without_mutation(Cloner::Bcqo), &SpectralOptions::default()).unwrap();
    assert_eq!(report.m, 1);
    assert!(!report.with_mutation);
    let line = report.to_json_line().unwrap();
    for key in ["\"ham_hash\"", "\"eigenvalues\":[{\"re\":", "\"m\":1", "\"F_inf\"", "\"gamma\"", "\"residual\""] {
        assert!(line.contains(key), "{line}");
    }
    let back: SpectralReport = serde_json::from_str(&line).unwrap();
    assert_eq!(back.eigenvalues, report.eigenvalues);
    assert_eq!(back.f_inf, report.f_inf);
}

#[test]
fn top_k_must_be_at_least_two() {
    let t = Channel::identity(small());
    assert!(top_eigenpairs(&t, 1).is_err());
}
