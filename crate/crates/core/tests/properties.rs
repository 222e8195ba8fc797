mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use transma_core::averaging::{fit_trans_mac, fit_trans_mai, project_simplex, solve_simplex_qp_detailed};
use transma_core::estimation::{aggregate_cube, ols_fit};
use transma_core::{prepare, CriterionConfig, DomainData, SimplexQP};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn projection_lands_on_simplex_and_is_nearest(v in prop::collection::vec(-10.0f64..10.0, 1..12), seed in any::<u64>()) {
        let p = project_simplex(&v);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|x| *x >= 0.0));
        // variational inequality ⟨v − p, z − p⟩ ≤ 0 for simplex points z
        let mut r = rng(seed);
        for _ in 0..10 {
            let z = random_simplex_point(&mut r, v.len());
            let ip: f64 = v.iter().zip(&p).zip(&z).map(|((v, p), z)| (v - p) * (z - p)).sum();
            prop_assert!(ip <= 1e-10);
        }
    }

    #[test]
    fn solver_certifies_optimality(k in 1usize..9, seed in any::<u64>()) {
        let mut r = rng(seed);
        let rank = r.random_range(1..=k);
        let l = gaussian_matrix(&mut r, rank, k);
        let qp = SimplexQP::new(l.tr_mul(&l), gaussian_vector(&mut r, k, 2.0), 0.0).unwrap();
        let sol = solve_simplex_qp_detailed(&qp).unwrap();
        let w = sol.weights.values();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(qp.kkt_residual(w) <= 1e-8 * (1.0 + qp.b.norm()));
        prop_assert!(qp.duality_gap(w) <= 1e-9 * (1.0 + sol.objective.abs()));
        let m = sol.weights.argmax();
        prop_assert!(w.iter().all(|x| *x <= w[m]));
        prop_assert!(w[..m].iter().all(|x| *x < w[m]));
    }

    #[test]
    fn cube_equals_pooled_ols_on_partitions(p_idx in 0usize..3, parts in 2usize..=5, seed in any::<u64>()) {
        let p = [2, 5, 10][p_idx];
        let mut r = rng(seed);
        let beta = gaussian_vector(&mut r, p, 1.0);
        let pooled = linear_domain(&mut r, 0, 40 * parts, &beta, 1.0);
        // random contiguous cuts, each part with at least p + 1 rows
        let mut cuts = vec![0];
        let mut rest = pooled.n();
        for j in 0..parts - 1 {
            let left = parts - j - 1;
            let hi = rest - left * (p + 1);
            let size = r.random_range(p + 1..=hi);
            cuts.push(cuts.last().unwrap() + size);
            rest -= size;
        }
        cuts.push(pooled.n());
        let summaries: Vec<_> = cuts
            .windows(2)
            .enumerate()
            .map(|(id, w)| {
                let rows: Vec<usize> = (w[0]..w[1]).collect();
                ols_fit(&pooled.select_rows(&rows).unwrap().with_id(id)).unwrap()
            })
            .collect();
        let ids: Vec<usize> = (0..parts).collect();
        let cube = aggregate_cube(&summaries, &ids).unwrap();
        let oracle = qr_ols(pooled.x(), pooled.y());
        prop_assert!(rel_err(&cube.beta, &oracle) <= 1e-8);
    }

    #[test]
    fn candidates_are_nested_and_target_first(m in 1usize..7, seed in any::<u64>()) {
        let mut r = rng(seed);
        let domains = random_problem(&mut r, m, 3, 20, 25);
        let prepared = prepare(&domains).unwrap();
        let cands = &prepared.candidates;
        prop_assert_eq!(cands.len(), m + 1);
        prop_assert_eq!(&cands[0].members, &vec![0]);
        for j in 1..=m {
            prop_assert_eq!(cands[j].members.len(), j + 1);
            prop_assert_eq!(&cands[j].members[..j], &cands[j - 1].members[..]);
            let n: usize = cands[j].members.iter().map(|&id| domains[id].n()).sum();
            prop_assert_eq!(cands[j].n, n);
            let g = cands[j].members.iter().fold(DMatrix::zeros(3, 3), |acc, &id| acc + &prepared.summaries[id].gram);
            prop_assert!((&g - &cands[j].gram).amax() <= 1e-10 * g.amax());
        }
        let norms = &prepared.table.norms;
        prop_assert!(prepared.table.rank.windows(2).all(|w| norms[w[0]] < norms[w[1]] || (norms[w[0]] == norms[w[1]] && w[0] < w[1])));
    }

    #[test]
    fn fit_beta_is_the_weighted_average(m in 1usize..6, v in 0.0f64..=1.0, phi in 0.1f64..6.0, seed in any::<u64>()) {
        let mut r = rng(seed);
        let domains = random_problem(&mut r, m, 3, 20, 25);
        let prepared = prepare(&domains).unwrap();
        let cfg = CriterionConfig::new(v, phi).unwrap();
        let fit = fit_trans_mai(&domains[0], &prepared.candidates, &cfg).unwrap();
        let avg = prepared.candidates.iter().zip(fit.weights.values()).fold(DVector::zeros(3), |acc, (c, w)| acc + &c.beta * *w);
        prop_assert!((&fit.beta - &avg).amax() <= 1e-10 * avg.amax().max(1.0));
        prop_assert_eq!(fit.weights.len(), m + 1);
    }

    #[test]
    fn mac_at_target_matches_mai_weights(m in 1usize..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let domains = random_problem(&mut r, m, 3, 20, 25);
        let prepared = prepare(&domains).unwrap();
        let raw: Vec<&DomainData> = domains.iter().collect();
        let mac = fit_trans_mac(&raw, &prepared.candidates, 0, &prepared.sigma2_by_id()).unwrap();
        let mai = fit_trans_mai(&domains[0], &prepared.candidates, &CriterionConfig::new(0.0, 2.0).unwrap()).unwrap();
        for (a, b) in mac.weights.values().iter().zip(mai.weights.values()) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }
}
