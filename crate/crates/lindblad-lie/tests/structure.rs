use lindblad_lie::linalg::{dagger, svd};
use lindblad_lie::liouville::SystemParams;
use lindblad_lie::structure::{
    decomposition_report, derived_algebra, killing_norm_semisimple, quadratic_basis, radical,
    structure_constants, ElementKind, StructureTensor,
};
use lindblad_lie::{eigensolver, C64, Error};
use ndarray::prelude::*;
use proptest::prelude::*;
use std::sync::OnceLock;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn two_mode_tensor() -> &'static StructureTensor {
    static TENSOR: OnceLock<StructureTensor> = OnceLock::new();
    TENSOR.get_or_init(|| {
        let basis = quadratic_basis(2).unwrap();
        structure_constants(&basis).unwrap()
    })
}

fn norm(v: &ArrayView1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn basis_counts_elements_and_matrix_shapes() {
    let b1 = quadratic_basis(1).unwrap();
    assert_eq!(b1.dim(), 3);
    let b2 = quadratic_basis(2).unwrap();
    assert_eq!(b2.dim(), 12);
    // Two modes with at most two total excitations span six kets.
    assert_eq!(b2.matrices[0].nrows(), 36);
    let b3 = quadratic_basis(3).unwrap();
    assert_eq!(b3.dim(), 27);
    let mut labels: Vec<String> = b2.labels.iter().map(|l| l.to_string()).collect();
    labels.sort();
    labels.dedup();
    assert_eq!(labels.len(), 12);
    for (idx, label) in b2.labels.iter().enumerate() {
        assert_eq!(b2.index_of(label.kind, label.i, label.j), idx);
    }
    assert!(matches!(quadratic_basis(0), Err(Error::InvalidParams { .. })));
}

#[test]
fn commutators_close_onto_the_span() {
    let tensor = two_mode_tensor();
    assert!(tensor.closure_residual <= 1e-10, "closure {:.3e}", tensor.closure_residual);
    for a in 0..tensor.dim() {
        for b in 0..tensor.dim() {
            for e in 0..tensor.dim() {
                assert_eq!(tensor.constants[[a, b, e]], -tensor.constants[[b, a, e]]);
            }
        }
    }
}

#[test]
fn lowering_block_commutes_with_itself() {
    let basis = quadratic_basis(2).unwrap();
    let tensor = two_mode_tensor();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let a = basis.index_of(ElementKind::Lowering, i, j);
                    let b = basis.index_of(ElementKind::Lowering, k, l);
                    let row = tensor.constants.slice(s![a, b, ..]);
                    assert!(norm(&row) <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn lowerings_contract_against_raise_lower_pairs() {
    // [L_i- R_j-, L_p+ L_k-] = delta_ip L_k- R_j- and
    // [L_i- R_j-, R_q+ R_l-] = delta_jq L_i- R_l-.
    let basis = quadratic_basis(2).unwrap();
    let tensor = two_mode_tensor();
    for i in 0..2 {
        for j in 0..2 {
            let a = basis.index_of(ElementKind::Lowering, i, j);
            for p in 0..2 {
                for k in 0..2 {
                    let b = basis.index_of(ElementKind::Left, p, k);
                    let got = tensor.constants.slice(s![a, b, ..]).to_owned();
                    let mut want = Array1::<C64>::zeros(tensor.dim());
                    if p == i {
                        want[basis.index_of(ElementKind::Lowering, k, j)] = c(1.0, 0.0);
                    }
                    assert!(norm(&(&got - &want).view()) <= 1e-12, "left i{i} j{j} p{p} k{k}");
                }
            }
            for q in 0..2 {
                for l in 0..2 {
                    let b = basis.index_of(ElementKind::Right, q, l);
                    let got = tensor.constants.slice(s![a, b, ..]).to_owned();
                    let mut want = Array1::<C64>::zeros(tensor.dim());
                    if q == j {
                        want[basis.index_of(ElementKind::Lowering, i, l)] = c(1.0, 0.0);
                    }
                    assert!(norm(&(&got - &want).view()) <= 1e-12, "right i{i} j{j} q{q} l{l}");
                }
            }
        }
    }
}

#[test]
fn jacobi_identity_holds() {
    let residual = two_mode_tensor().jacobi_residual();
    assert!(residual <= 1e-10, "jacobi {residual:.3e}");
}

#[test]
fn killing_form_has_the_expected_block_values() {
    let basis = quadratic_basis(2).unwrap();
    let tensor = two_mode_tensor();
    let k = &tensor.killing;
    let idx = |kind, i, j| basis.index_of(kind, i, j);
    // Symmetry.
    for a in 0..12 {
        for b in 0..12 {
            assert!((k[[a, b]] - k[[b, a]]).norm() <= 1e-12);
        }
    }
    // Every row through a double lowering vanishes identically.
    for i in 0..2 {
        for j in 0..2 {
            let a = idx(ElementKind::Lowering, i, j);
            for b in 0..12 {
                assert!(k[[a, b]].norm() <= 1e-12);
            }
        }
    }
    // Raise-lower block entries: 3N tr(XY) - 2 tr(X) tr(Y) on one side,
    // tr(X) tr(Y) across the two sides.
    assert!((k[[idx(ElementKind::Left, 0, 0), idx(ElementKind::Left, 0, 0)]] - c(4.0, 0.0))
        .norm() <= 1e-12);
    assert!((k[[idx(ElementKind::Left, 0, 0), idx(ElementKind::Left, 1, 1)]] - c(-2.0, 0.0))
        .norm() <= 1e-12);
    assert!((k[[idx(ElementKind::Left, 0, 1), idx(ElementKind::Left, 1, 0)]] - c(6.0, 0.0))
        .norm() <= 1e-12);
    assert!(k[[idx(ElementKind::Left, 0, 1), idx(ElementKind::Left, 0, 1)]].norm() <= 1e-12);
    assert!((k[[idx(ElementKind::Left, 0, 0), idx(ElementKind::Right, 1, 1)]] - c(1.0, 0.0))
        .norm() <= 1e-12);
    assert!(k[[idx(ElementKind::Left, 0, 1), idx(ElementKind::Right, 1, 0)]].norm() <= 1e-12);
}

#[test]
fn derived_algebra_and_radical_have_the_expected_dimensions() {
    let b1 = quadratic_basis(1).unwrap();
    let t1 = structure_constants(&b1).unwrap();
    assert_eq!(derived_algebra(&t1).unwrap().dim(), 1);
    assert_eq!(radical(&t1).unwrap().dim(), 3);

    let tensor = two_mode_tensor();
    assert_eq!(derived_algebra(tensor).unwrap().dim(), 10);
    let rad = radical(tensor).unwrap();
    assert_eq!(rad.dim(), 6);

    // Orthonormal columns.
    let overlap = dagger(&rad.vectors.view()).dot(&rad.vectors);
    for a in 0..6 {
        for b in 0..6 {
            let want = if a == b { c(1.0, 0.0) } else { c(0.0, 0.0) };
            assert!((overlap[[a, b]] - want).norm() <= 1e-12);
        }
    }

    // The span contains both number sums and all four double lowerings.
    let basis = quadratic_basis(2).unwrap();
    let mut sums = vec![Array1::<C64>::zeros(12), Array1::<C64>::zeros(12)];
    for i in 0..2 {
        sums[0][basis.index_of(ElementKind::Left, i, i)] = c(1.0, 0.0);
        sums[1][basis.index_of(ElementKind::Right, i, i)] = c(1.0, 0.0);
    }
    for s in &sums {
        assert!(rad.distance(&s.view()) <= 1e-10);
    }
    for i in 0..2 {
        for j in 0..2 {
            let mut v = Array1::<C64>::zeros(12);
            v[basis.index_of(ElementKind::Lowering, i, j)] = c(1.0, 0.0);
            assert!(rad.distance(&v.view()) <= 1e-10);
        }
    }
}

fn span_basis(cols: &Array2<C64>) -> Array2<C64> {
    let dec = svd(&dagger(&cols.view()).view()).unwrap();
    let rank = if dec.s.is_empty() || dec.s[0] <= 0.0 {
        0
    } else {
        dec.s.iter().filter(|&&x| x >= 1e-8 * dec.s[0]).count()
    };
    dec.v.slice(s![.., ..rank]).to_owned()
}

#[test]
fn derived_series_of_the_radical_terminates() {
    let tensor = two_mode_tensor();
    let rad = radical(tensor).unwrap();
    let mut current = rad.vectors.clone();
    let mut steps = 0;
    while current.ncols() > 0 {
        steps += 1;
        assert!(steps <= 4, "series still {}-dimensional after 4 steps", current.ncols());
        let m = current.ncols();
        let mut cols = Array2::<C64>::zeros((tensor.dim(), m * m));
        for a in 0..m {
            for b in 0..m {
                let w = tensor.commutator_coords(&current.column(a), &current.column(b));
                cols.column_mut(a * m + b).assign(&w);
            }
        }
        let next = span_basis(&cols);
        assert!(next.ncols() < current.ncols(), "series must strictly shrink");
        current = next;
    }
    assert_eq!(steps, 2);
}

#[test]
fn classification_certifies_the_two_mode_decomposition() {
    let report = decomposition_report(2).unwrap();
    assert_eq!(report.total_dim, 12);
    assert_eq!(report.derived_dim, 10);
    assert_eq!(report.radical_dim, 6);
    assert_eq!(report.nilpotent_dim, 4);
    assert_eq!(report.abelian_dim, 2);
    assert_eq!(report.left_dim, 3);
    assert_eq!(report.right_dim, 3);
    assert!(report.closure_residual <= 1e-10);
    assert!(report.jacobi_residual <= 1e-10);
    assert!(report.mutual_commutator_residual <= 1e-10);
    assert!(report.abelian_commutator_residual <= 1e-10);
    assert!(report.nilpotent_pairwise_residual <= 1e-10);
    assert!(report.nilpotent_killing_residual <= 1e-10);
    assert!(report.radical_ideal_residual <= 1e-9);
    assert!(report.complement_residual <= 1e-10);
    assert!(report.abelian_in_radical_residual <= 1e-10);
    assert_eq!(report.killing_signature.positive, 5);
    assert_eq!(report.killing_signature.negative, 2);
    assert_eq!(report.killing_signature.zero, 5);
    // Restricted Killing singular values are {12, 6, 6} per block.
    assert!((report.left_killing_gap.unwrap() - 0.5).abs() <= 1e-9);
    assert!((report.right_killing_gap.unwrap() - 0.5).abs() <= 1e-9);
}

#[test]
fn classification_certifies_the_three_mode_decomposition() {
    let report = decomposition_report(3).unwrap();
    assert_eq!(report.total_dim, 27);
    assert_eq!(report.derived_dim, 25);
    assert_eq!(report.radical_dim, 11);
    assert_eq!(report.nilpotent_dim, 9);
    assert_eq!(report.abelian_dim, 2);
    assert_eq!(report.left_dim, 8);
    assert_eq!(report.right_dim, 8);
    assert!(report.closure_residual <= 1e-10);
    assert!(report.jacobi_residual <= 1e-10);
    assert!(report.radical_ideal_residual <= 1e-9);
    assert!(report.left_killing_gap.unwrap() > 0.1);
    assert!(report.right_killing_gap.unwrap() > 0.1);
}

#[test]
fn single_mode_algebra_is_solvable() {
    let report = decomposition_report(1).unwrap();
    assert_eq!(report.total_dim, 3);
    assert_eq!(report.derived_dim, 1);
    assert_eq!(report.radical_dim, 3);
    assert_eq!(report.nilpotent_dim, 1);
    assert_eq!(report.abelian_dim, 2);
    assert_eq!(report.left_dim, 0);
    assert_eq!(report.right_dim, 0);
    assert!(report.left_killing_gap.is_none());
    assert!(report.right_killing_gap.is_none());
    assert_eq!(report.killing_signature.positive, 1);
    assert_eq!(report.killing_signature.negative, 0);
    assert_eq!(report.killing_signature.zero, 2);
}

#[test]
fn report_prints_and_serializes_the_bookkeeping() {
    let report = decomposition_report(2).unwrap();
    let text = report.to_string();
    assert!(text.contains("12 = 4 (nilpotent) + 2 (abelian) + 3 + 3"));
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["total_dim"], 12);
    assert_eq!(json["killing_signature"]["negative"], 2);
    assert!(json["left_killing_gap"].is_number());
}

#[test]
fn killing_norm_matches_the_closed_form() {
    // For half-differences ds and dg and coupling k the norm is
    // -12((ds - i dg)^2 + k^2); derived from the restricted form values
    // K(K0, K0) = 12 and K(K+, K-) = 6.
    let cases = [
        ((0.0, 0.0), (1.0, 0.0), 1.0),
        ((1.0, 0.0), (0.6, 0.0), 0.7),
        ((0.3, -0.4), (0.9, 0.1), 1.3),
        ((0.0, 0.0), (2.0, 0.0), 0.0),
    ];
    for ((s1, s2), (g1, g2), kappa) in cases {
        let params = SystemParams::constant(&[s1, s2], &[g1, g2], &[kappa]).unwrap();
        let got = killing_norm_semisimple(&params, 0.0).unwrap();
        let delta = c(0.5 * (s1 - s2), -0.5 * (g1 - g2));
        let want = (delta * delta + kappa * kappa) * (-12.0);
        assert!((got - want).norm() <= 1e-9, "case {s1},{s2},{g1},{g2},{kappa}");
    }
    let three = SystemParams::constant(&[0.0; 3], &[0.1; 3], &[1.0, 1.0]).unwrap();
    assert!(matches!(killing_norm_semisimple(&three, 0.0), Err(Error::Unsupported { .. })));
}

#[test]
fn killing_norm_vanishes_where_the_spectrum_coalesces() {
    let params = SystemParams::constant(&[0.0, 0.0], &[2.0, 0.0], &[1.0]).unwrap();
    let value = killing_norm_semisimple(&params, 0.0).unwrap();
    assert!(value.norm() <= 1e-9, "at coalescence got {value}");
}

#[test]
fn killing_norm_sign_tracks_the_spectrum_transition() {
    // Equal frequencies, loss contrast swept through the coupling
    // strength: a negative norm must coincide with an oscillating
    // eigenvalue pair and a positive norm with two pure decay rates.
    let kappa = 1.0;
    for ratio in [0.25, 0.5, 0.75, 0.9, 1.1, 1.5, 2.0, 3.0] {
        let params =
            SystemParams::constant(&[0.0, 0.0], &[2.0 * ratio, 0.0], &[kappa]).unwrap();
        let value = killing_norm_semisimple(&params, 0.0).unwrap();
        assert!(value.im.abs() <= 1e-9);
        let spec = eigensolver::heff_spectrum(&params).unwrap();
        let oscillating = spec.lambdas.iter().any(|l| l.im.abs() > 1e-6);
        assert_eq!(value.re < 0.0, oscillating, "ratio {ratio}: norm {value}");
        let want = 12.0 * (ratio * ratio - 1.0);
        assert!((value.re - want).abs() <= 1e-9);
    }
}

fn coeff_vec() -> impl Strategy<Value = Array1<C64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 12)
        .prop_map(|v| Array1::from_iter(v.into_iter().map(|(re, im)| c(re, im))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coordinate_commutators_are_antisymmetric_and_satisfy_jacobi(
        u in coeff_vec(),
        v in coeff_vec(),
        w in coeff_vec(),
    ) {
        let tensor = two_mode_tensor();
        let uv = tensor.commutator_coords(&u.view(), &v.view());
        let vu = tensor.commutator_coords(&v.view(), &u.view());
        prop_assert!(norm(&(&uv + &vu).view()) <= 1e-12 * norm(&u.view()) * norm(&v.view()).max(1.0));

        let vw = tensor.commutator_coords(&v.view(), &w.view());
        let wu = tensor.commutator_coords(&w.view(), &u.view());
        let cycle = tensor.commutator_coords(&uv.view(), &w.view())
            + tensor.commutator_coords(&vw.view(), &u.view())
            + tensor.commutator_coords(&wu.view(), &v.view());
        let scale = norm(&u.view()) * norm(&v.view()) * norm(&w.view());
        prop_assert!(norm(&cycle.view()) <= 1e-10 * scale.max(1.0));
    }
}
