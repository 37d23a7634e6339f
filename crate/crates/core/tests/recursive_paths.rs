mod common;

use chaoscum::chaos::{cumulant_via_gamma, expectation, gamma, moments, moments_to_cumulants};
use chaoscum::recursive::{
    cq, enumerate_rvectors, gamma_expansion_chaos, kappa4_contraction_form, kappa4_nunugio_form,
    kappa_recursive,
};
use chaoscum::symtensor::{inner_product, sym_contract};
use chaoscum::{ChaosExpansion, SymTensor};
use common::{assert_rel, rng, unit_variance_kernel};
use num_bigint::BigUint;
use rand::Rng;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Conditions (i)–(iv) written out once more, independently of the library.
fn admissible(q: usize, s: usize, rs: &[usize]) -> bool {
    let q = q as i64;
    let rs: Vec<i64> = rs.iter().map(|&r| r as i64).collect();
    let n = rs.len();
    let cond_i = rs.iter().all(|&r| 1 <= r && r <= q);
    let cond_ii = 2 * rs.iter().sum::<i64>() == (s as i64 - 2) * q;
    let cond_iii = rs[0] < q
        && (1..=n.saturating_sub(1)).all(|k| 2 * rs[..k].iter().sum::<i64>() < (k as i64 + 1) * q);
    let cond_iv = (2..=n).all(|k| rs[k - 1] <= k as i64 * q - 2 * rs[..k - 1].iter().sum::<i64>());
    cond_i && cond_ii && cond_iii && cond_iv
}

fn all_tuples(q: usize, len: usize) -> Vec<Vec<usize>> {
    common::all_tuples(q, len)
        .into_iter()
        .map(|t| t.into_iter().map(|r| r + 1).collect())
        .collect()
}

#[test]
fn enumeration_matches_exhaustive_filter() {
    for q in 2..=4 {
        for s in 3..=7 {
            let mut want: Vec<Vec<usize>> = all_tuples(q, s - 2)
                .into_iter()
                .filter(|rs| admissible(q, s, rs))
                .collect();
            want.sort();
            let got: Vec<Vec<usize>> = enumerate_rvectors(q, s).into_iter().map(|v| v.rs).collect();
            assert_eq!(got, want, "q={q} s={s}");
            for rs in &got {
                assert!(chaoscum::recursive::is_admissible(q, s, rs));
            }
        }
    }
    assert_eq!(
        enumerate_rvectors(3, 4)
            .into_iter()
            .map(|v| v.rs)
            .collect::<Vec<_>>(),
        vec![vec![1, 2], vec![2, 1]]
    );
}

#[test]
fn constants_are_positive_on_admissible_vectors() {
    for q in 2..=5 {
        for s in 3..=8 {
            for v in enumerate_rvectors(q, s) {
                let c = v.constant().unwrap();
                assert!(c.value > BigUint::from(0u32));
                assert_eq!(c.value, cq(q, &v.rs).unwrap());
            }
        }
    }
    // c_3(2) = 3 · 1! · C(2,1)²; c_3(1,2) = c_3(1) · 3 · 1! · C(2·3-2-1, 1) · C(2,1)
    assert_eq!(cq(3, &[2]).unwrap(), BigUint::from(12u32));
    assert_eq!(cq(3, &[1, 2]).unwrap(), BigUint::from(3u32 * 18));
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

#[test]
#[allow(clippy::needless_range_loop)]
fn second_chaos_trace_formula() {
    let mut r = rng(21);
    for _ in 0..10 {
        let d = r.random_range(1..=5);
        let mut a = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in i..d {
                let v = r.random_range(-1.0..1.0);
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        let f = SymTensor::from_matrix(&a);
        let mut power = a.clone();
        for s in 2..=8 {
            power = if s == 2 {
                mat_mul(&a, &a)
            } else {
                mat_mul(&power, &a)
            };
            let trace: f64 = (0..d).map(|i| power[i][i]).sum();
            let want = 2f64.powi(s as i32 - 1) * factorial(s - 1) * trace;
            assert_rel(kappa_recursive(&f, s).unwrap(), want, 1e-10);
        }
    }
}

#[test]
fn fourth_cumulant_forms_agree() {
    let mut r = rng(22);
    for q in 2..=4 {
        for _ in 0..8 {
            let d = r.random_range(1..=4);
            let f = SymTensor::random(d, q, &mut r);
            let a = kappa4_contraction_form(&f).unwrap();
            let b = kappa4_nunugio_form(&f).unwrap();
            let c = kappa_recursive(&f, 4).unwrap();
            assert_rel(a, b, 1e-10);
            assert_rel(a, c, 1e-10);
        }
    }
}

#[test]
fn explicit_gamma_expansion_matches_operator_iteration() {
    let mut r = rng(23);
    for q in 2..=3 {
        for s in 2..=5 {
            let d = r.random_range(1..=3);
            let f = SymTensor::random(d, q, &mut r);
            let explicit = gamma_expansion_chaos(&f, s).unwrap();
            let iterated = gamma(&ChaosExpansion::integral(f.clone()), s - 1);
            let scale = iterated
                .max_abs_diff(&ChaosExpansion::zero(d))
                .unwrap()
                .max(1.0);
            assert!(
                explicit.max_abs_diff(&iterated).unwrap() <= 1e-10 * scale,
                "q={q} s={s}"
            );
            let k = kappa_recursive(&f, s).unwrap();
            assert_rel(expectation(&explicit), k / factorial(s - 1), 1e-10);
        }
    }
}

#[test]
fn three_exact_routes_agree() {
    let mut r = rng(24);
    for q in 2..=3 {
        for d in 1..=4 {
            let f = SymTensor::random(d, q, &mut r);
            let fi = ChaosExpansion::integral(f.clone());
            let via_moments = moments_to_cumulants(&moments(&fi, 6).unwrap());
            for s in 1..=6 {
                let k = kappa_recursive(&f, s).unwrap();
                assert_rel(k, cumulant_via_gamma(&fi, s), 1e-9);
                assert_rel(k, via_moments.get(s), 1e-9);
            }
        }
    }
}

#[test]
fn odd_order_cumulants_vanish_exactly() {
    let mut r = rng(25);
    for q in [3, 5] {
        let f = SymTensor::random(2, q, &mut r);
        for s in [3, 5, 7] {
            assert_eq!(kappa_recursive(&f, s).unwrap(), 0.0);
        }
    }
}

#[test]
fn chain_inner_products_obey_cauchy_schwarz() {
    let mut r = rng(26);
    for q in 2..=4 {
        for s in 3..=6 {
            let f = unit_variance_kernel(&mut r, 3, q);
            for v in enumerate_rvectors(q, s) {
                let mut chain = f.clone();
                for &rr in &v.rs {
                    chain = sym_contract(&chain, &f, rr).unwrap();
                }
                let lhs = inner_product(&chain, &f).unwrap().abs();
                let first = sym_contract(&f, &f, v.rs[0]).unwrap().norm();
                let bound = factorial(q).powf(1.0 - s as f64 / 2.0) * first;
                assert!(lhs <= bound * (1.0 + 1e-12), "q={q} s={s} {:?}", v.rs);
            }
        }
    }
}

#[test]
fn unit_chi_square_reference_values() {
    let f = SymTensor::from_entries(1, 2, vec![(vec![0, 0], 1.0)]).unwrap();
    // κ_3 = E[(X²-1)³]; κ_4 = E[(X²-1)⁴] - 3 (E[(X²-1)²])²
    let m2 = common::centered_chi_square_moment(2);
    let m3 = common::centered_chi_square_moment(3);
    let m4 = common::centered_chi_square_moment(4);
    assert_eq!(kappa_recursive(&f, 3).unwrap(), m3);
    assert_eq!(kappa_recursive(&f, 4).unwrap(), m4 - 3.0 * m2 * m2);
    assert_eq!(m4 - 3.0 * m2 * m2, 48.0);
}
