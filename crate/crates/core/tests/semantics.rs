use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symq_core::flipping::{FlipMethod, FlipTask, Objective};
use symq_core::{
    compare_methods, decompose_perturbation, find_best_queries, first_order_direction, first_order_order,
    parse, random_order, run_flip, LatticeSupport, MultiOrderDecomposition, Query, QuerySpaceSpec,
    SetFunction, SubsetMask, SupportMode, SyntheticGame, TableGame, WeightVector,
};

fn m(bits: u64) -> SubsetMask {
    SubsetMask::from_bits(bits)
}

fn full_mu<G: SetFunction>(g: &G) -> MultiOrderDecomposition {
    decompose_perturbation(g, &LatticeSupport::enumerate(g.n(), SupportMode::Full).unwrap()).unwrap()
}

fn random_table(n: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, TableGame) {
    let mut e: Vec<f64> = (0..1u64 << n).map(|_| rng.random_range(-2.0..2.0)).collect();
    e[0] = 0.0;
    let t = TableGame::from_entries(n, e.iter().enumerate().map(|(b, &v)| (m(b as u64), v))).unwrap();
    (e, t)
}

#[test]
fn many_body_terms_are_dividends() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 2..=6 {
        let (e, t) = random_table(n, &mut rng);
        let mu = full_mu(&t);
        let at = |b: u64| e[b as usize];
        let pair = |i: u64, j: u64| at(i | j) - at(i) - at(j);
        for i in 0..n {
            for j in i + 1..n {
                let (bi, bj) = (1u64 << i, 1u64 << j);
                assert!((mu.get(m(bi | bj)).unwrap() - pair(bi, bj)).abs() < 1e-12);
                for k in j + 1..n {
                    let bk = 1u64 << k;
                    let three = at(bi | bj | bk) - pair(bi, bj) - pair(bj, bk) - pair(bi, bk) - at(bi) - at(bj) - at(bk);
                    assert!((mu.get(m(bi | bj | bk)).unwrap() - three).abs() < 1e-12);
                }
            }
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn random_baseline_matches_permutation_mean() {
    for (n, seed) in [(4, 3u64), (5, 4), (6, 5)] {
        let g = SyntheticGame::random_multilinear(n, 3, seed).unwrap();
        for task in [FlipTask::Removal, FlipTask::Generation] {
            let areas: Vec<f64> = permutations(n)
                .iter()
                .map(|p| run_flip(&g, p, task).unwrap().area)
                .collect();
            let mean = areas.iter().sum::<f64>() / areas.len() as f64;
            let sd = (areas.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / areas.len() as f64).sqrt();
            let draws = 4000;
            let sampled = (0..draws)
                .map(|s| run_flip(&g, &random_order(n, s, 0), task).unwrap().area)
                .sum::<f64>()
                / draws as f64;
            let tol = 4.0 * sd / (draws as f64).sqrt();
            assert!((sampled - mean).abs() < tol, "n={n}: {sampled} vs {mean} (tol {tol})");
        }
    }
}

#[test]
fn first_order_removal_and_generation_areas_coincide() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..20 {
        let g = SyntheticGame::random_multilinear(7, 3, seed).unwrap();
        let scores: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let area = |task, objective| {
            let order = first_order_order(&scores, first_order_direction(task, objective));
            run_flip(&g, &order, task).unwrap().area
        };
        for objective in [Objective::Minimize, Objective::Maximize] {
            let r = area(FlipTask::Removal, objective);
            let gen = area(FlipTask::Generation, objective);
            assert!((r - gen).abs() < 1e-12, "{r} vs {gen}");
        }
    }
}

#[test]
fn symbxai_beats_random_on_most_games() {
    let mut wins = 0;
    for seed in 0..100u64 {
        let g = SyntheticGame::random_multilinear(10, 3, 20_000 + seed).unwrap();
        let mu = full_mu(&g);
        let methods = vec![
            ("symbxai".to_string(), FlipMethod::SymbXai),
            ("random".to_string(), FlipMethod::Random { seed }),
        ];
        let report = compare_methods(&g, &mu, &methods).unwrap();
        if report.row("symbxai").unwrap().min_aurc <= report.row("random").unwrap().min_aurc {
            wins += 1;
        }
    }
    assert!(wins >= 95, "symbxai won {wins}/100");
}

#[test]
fn contrastive_pattern_tops_the_search() {
    // tokens 0..=2 form the first clause, 3 is the conjunction, 4..=7 the second
    let n = 8;
    let planted = parse("!{0,1,2} & 5").unwrap();
    let support = LatticeSupport::enumerate(n, SupportMode::Truncated(4)).unwrap();
    for seed in 0..10 {
        let g = SyntheticGame::planted(n, planted.clone(), 1.0, seed, 0.05).unwrap();
        let mu = decompose_perturbation(&g, &support).unwrap();
        let spec = QuerySpaceSpec::singletons(n).with_max_conjunctions(2);
        let top = find_best_queries(&mu, &spec, &WeightVector::Occlusion, 3).unwrap();
        assert_eq!(top.ranked.len(), 3);
        for q in &top.ranked {
            assert!(has_negated_atom_in(&q.query, 0b111), "{}", q.text);
        }
    }
}

fn has_negated_atom_in(q: &Query, within: u64) -> bool {
    match q {
        Query::Not(inner) => matches!(inner.as_ref(), Query::Atom(s) if s.bits() & !within == 0),
        Query::And(a, b) | Query::Or(a, b) => has_negated_atom_in(a, within) || has_negated_atom_in(b, within),
        Query::Atom(_) => false,
    }
}

#[test]
fn search_scores_ignore_constant_offsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (_, t) = random_table(6, &mut rng);
    let mu = full_mu(&t);
    let shifted = MultiOrderDecomposition::from_terms(
        mu.support().clone(),
        mu.terms().iter().map(|x| 2.5 * x + 7.0).collect(),
        mu.source(),
    )
    .unwrap();
    let spec = QuerySpaceSpec::singletons(6);
    let a = find_best_queries(&mu, &spec, &WeightVector::Occlusion, usize::MAX).unwrap();
    let b = find_best_queries(&shifted, &spec, &WeightVector::Occlusion, usize::MAX).unwrap();
    assert_eq!(a.ranked.len(), b.ranked.len());
    for x in &a.ranked {
        let y = b.ranked.iter().find(|y| y.query == x.query).unwrap();
        assert!((x.score - y.score).abs() < 1e-9);
    }
}
