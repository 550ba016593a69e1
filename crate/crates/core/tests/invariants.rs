use nalgebra::DMatrix;
use proptest::prelude::*;
use vqasc::ansatz::{build_ansatz, catalog, AnsatzSpec};
use vqasc::evalmetrics::{accuracy, adjusted_rand_index, cut_value, normalized_mutual_info};
use vqasc::linalg::symmetric_eigen;
use vqasc::simcore::{apply_circuit, Statevector};
use vqasc::vqasc::{build_graph, objective, readout_state, GraphConfig, DEFAULT_LAMBDAS};
use vqasc::xpress::{haar_bin_probabilities, kl_divergence, pseudo_project, KlValue};
use vqasc::Complex64;

fn points(max_n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (2..=max_n, 1..=3usize).prop_flat_map(|(n, d)| {
        prop::collection::vec(-10.0..10.0f64, n * d).prop_map(move |v| DMatrix::from_row_slice(n, d, &v))
    })
}

fn state(max_qubits: usize) -> impl Strategy<Value = Statevector> {
    (1..=max_qubits).prop_flat_map(|n| {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1 << n).prop_filter_map("zero vector", |v| {
            Statevector::normalized(v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()).ok()
        })
    })
}

fn circuit_and_theta() -> impl Strategy<Value = (AnsatzSpec, Vec<f64>)> {
    let ids: Vec<String> = catalog()
        .into_iter()
        .map(|e| e.id)
        .filter(|id| id != "template")
        .collect();
    (prop::sample::select(ids), 2..=5usize, 1..=3usize)
        .prop_filter_map("circuit needs more qubits", |(id, n, l)| {
            let spec = AnsatzSpec::new(id.as_str(), n, l);
            build_ansatz(&spec).ok().map(|p| (spec, p.n_params()))
        })
        .prop_flat_map(|(spec, np)| (Just(spec), prop::collection::vec(-7.0..7.0f64, np)))
}

fn labels(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..2usize, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_symmetric_psd_with_zero_rows(x in points(16), gamma in 0.05..20.0f64, k in 1..16usize) {
        let k = k.min(x.nrows() - 1);
        let lap = build_graph(&x, &GraphConfig { gamma, k: Some(k) }).unwrap();
        let m = lap.matrix();
        prop_assert!((m - m.transpose()).abs().max() < 1e-12);
        prop_assert!(m.row_sum().abs().max() < 1e-10);
        prop_assert!(symmetric_eigen(m).unwrap().eigenvalues[0] > -1e-10);
    }

    #[test]
    fn circuits_preserve_the_norm((spec, theta) in circuit_and_theta()) {
        let program = build_ansatz(&spec).unwrap();
        let psi = apply_circuit(&program, &theta).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pseudo_projection_is_idempotent_and_flat(psi in state(6)) {
        let p = pseudo_project(&psi);
        let mag = 1.0 / (psi.dim() as f64).sqrt();
        prop_assert!(p.amplitudes().iter().all(|a| (a.norm() - mag).abs() < 1e-12));
        let q = pseudo_project(&p);
        prop_assert!(p.amplitudes().iter().zip(q.amplitudes()).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn cut_value_counts_crossing_edges(
        w in prop::collection::vec(0.0..3.0f64, 28),
        n in 2..=8usize,
        mask in 0u32..256,
    ) {
        let mut wm = DMatrix::zeros(n, n);
        let mut it = w.iter();
        for i in 0..n {
            for j in i + 1..n {
                let v = *it.next().unwrap();
                wm[(i, j)] = v;
                wm[(j, i)] = v;
            }
        }
        let l = DMatrix::from_diagonal(&wm.row_sum().transpose()) - &wm;
        let signs: Vec<i8> = (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
        let mut brute = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                if signs[i] != signs[j] {
                    brute += 4.0 * wm[(i, j)];
                }
            }
        }
        prop_assert!((cut_value(&signs, &l).unwrap() - brute).abs() < 1e-9);
    }

    #[test]
    fn metrics_ignore_label_names_and_order(
        (pred, truth, perm) in (2..40usize).prop_flat_map(|n| (labels(n), labels(n), Just((0..n).collect::<Vec<_>>()).prop_shuffle()))
    ) {
        let swapped: Vec<usize> = pred.iter().map(|l| 1 - l).collect();
        let p2: Vec<usize> = perm.iter().map(|&i| pred[i]).collect();
        let t2: Vec<usize> = perm.iter().map(|&i| truth[i]).collect();
        for f in [accuracy, adjusted_rand_index, normalized_mutual_info] {
            let base = f(&pred, &truth).unwrap();
            prop_assert!((base - f(&swapped, &truth).unwrap()).abs() < 1e-12);
            prop_assert!((base - f(&p2, &t2).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn objective_identity_and_lower_bound(
        seed in 0u64..1000,
        tau in 0.0..5.0f64,
        x in prop::collection::vec(-1.0..1.0f64, 16),
    ) {
        let pts = DMatrix::from_row_slice(8, 2, &x);
        let l = build_graph(&pts, &GraphConfig::default()).unwrap();
        let program = build_ansatz(&AnsatzSpec::new("C", 3, 2)).unwrap();
        let theta = vqasc::vqasc::initial_theta(program.n_params(), seed);
        let v = objective(&theta, l.matrix(), tau, &program).unwrap();
        prop_assert!((v.j - (v.sigma1 + tau * v.sigma2)).abs() < 1e-10);
        prop_assert!(v.j >= -1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v.sigma2));
    }

    #[test]
    fn readout_is_optimal_and_phase_blind(psi in state(4), x in prop::collection::vec(-1.0..1.0f64, 32)) {
        let n = psi.dim();
        let pts = DMatrix::from_row_slice(n, 2, &x[..2 * n]);
        let l = build_graph(&pts, &GraphConfig { gamma: 2.0, k: None }).unwrap();
        let r = readout_state(&psi, &DEFAULT_LAMBDAS, l.matrix()).unwrap();
        prop_assert!((cut_value(&r.signs, l.matrix()).unwrap() - r.cut_value).abs() < 1e-8);
        prop_assert!(r.lambda_cuts.iter().all(|c| c.cut_value >= r.cut_value - 1e-12));
        for phi in DEFAULT_LAMBDAS {
            let rotated = readout_state(&psi.with_global_phase(phi), &DEFAULT_LAMBDAS, l.matrix()).unwrap();
            prop_assert!((rotated.cut_value - r.cut_value).abs() < 1e-8);
        }
    }

    #[test]
    fn kl_of_the_reference_with_itself_is_zero(n in 1..8usize, bins in 1..200usize) {
        let p = haar_bin_probabilities(n, bins).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        match kl_divergence(&p, &p).unwrap() {
            KlValue::Finite(v) => prop_assert!(v.abs() < 1e-12),
            KlValue::Overflow => prop_assert!(p.iter().any(|&q| q > 0.0 && q < 1e-300)),
        }
    }
}
