//! Selection and variation operators on unit-interval genomes.

use rand::Rng;

use super::sort::{crowding_distance, fast_non_dominated_sort};
use super::{EvolutionError, GAParams, Individual};

/// Binary tournament under the crowded-comparison order: lower rank wins,
/// then larger crowding distance, then a fair coin.
pub fn tournament_select<R: Rng + ?Sized>(population: &[Individual], rng: &mut R) -> Result<usize, EvolutionError> {
    let n = population.len();
    if n < 2 {
        return Err(EvolutionError::PopulationTooSmall(n));
    }
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    let (x, y) = (&population[a], &population[b]);
    let winner = if x.rank != y.rank {
        if x.rank < y.rank {
            a
        } else {
            b
        }
    } else if x.crowding != y.crowding {
        if x.crowding > y.crowding {
            a
        } else {
            b
        }
    } else if rng.gen::<bool>() {
        a
    } else {
        b
    };
    Ok(winner)
}

/// SBX spread factor for a uniform draw `u` in `[0, 1)`.
pub fn sbx_beta(u: f64, eta: f64) -> f64 {
    let e = 1.0 / (eta + 1.0);
    if u < 0.5 {
        (2.0 * u).powf(e)
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(e)
    }
}

/// Unclamped SBX children of one gene pair.
pub fn sbx_genes(p1: f64, p2: f64, beta: f64) -> (f64, f64) {
    (
        0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2),
        0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2),
    )
}

/// Simulated binary crossover. With probability `1 - crossover_probability`
/// the parents are copied unchanged.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &[f64],
    p2: &[f64],
    params: &GAParams,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>), EvolutionError> {
    if p1.len() != p2.len() {
        return Err(EvolutionError::DimensionMismatch {
            expected: p1.len(),
            got: p2.len(),
        });
    }
    if rng.gen::<f64>() >= params.crossover_probability {
        return Ok((p1.to_vec(), p2.to_vec()));
    }
    let mut c1 = Vec::with_capacity(p1.len());
    let mut c2 = Vec::with_capacity(p1.len());
    for (&a, &b) in p1.iter().zip(p2) {
        let beta = sbx_beta(rng.gen::<f64>(), params.crossover_eta);
        if (a - b).abs() <= 1e-14 {
            c1.push(a);
            c2.push(b);
            continue;
        }
        let (x, y) = sbx_genes(a, b, beta);
        c1.push(x.clamp(0.0, 1.0));
        c2.push(y.clamp(0.0, 1.0));
    }
    Ok((c1, c2))
}

/// Bounded polynomial perturbation of a gene in `[0, 1]` for a uniform
/// draw `u`.
pub fn polynomial_delta(gene: f64, u: f64, eta: f64) -> f64 {
    let power = 1.0 / (eta + 1.0);
    if u < 0.5 {
        let xy = 1.0 - gene;
        let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0);
        val.powf(power) - 1.0
    } else {
        let xy = gene;
        let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0);
        1.0 - val.powf(power)
    }
}

pub fn polynomial_mutation<R: Rng + ?Sized>(mut genome: Vec<f64>, params: &GAParams, rng: &mut R) -> Vec<f64> {
    for g in genome.iter_mut() {
        if rng.gen::<f64>() < params.mutation_probability {
            let u = rng.gen::<f64>();
            *g = (*g + polynomial_delta(*g, u, params.mutation_eta)).clamp(0.0, 1.0);
        }
    }
    genome
}

/// Assigns front ranks and per-front crowding distances in place and
/// returns the fronts.
pub fn rank_and_crowd(population: &mut [Individual]) -> Vec<Vec<usize>> {
    let objectives: Vec<Vec<f64>> = population.iter().map(Individual::minimization).collect();
    let fronts = fast_non_dominated_sort(&objectives).expect("three objectives everywhere");
    for (rank, front) in fronts.iter().enumerate() {
        let points: Vec<Vec<f64>> = front.iter().map(|&i| objectives[i].clone()).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&points)) {
            population[i].rank = rank;
            population[i].crowding = d;
        }
    }
    fronts
}

/// Elitist truncation to `k` individuals: whole fronts in rank order, the
/// last one cut by descending crowding distance (stable on ties).
pub fn survivor_selection(mut combined: Vec<Individual>, k: usize) -> Result<Vec<Individual>, EvolutionError> {
    if k > combined.len() {
        return Err(EvolutionError::SelectTooMany {
            requested: k,
            available: combined.len(),
        });
    }
    let fronts = rank_and_crowd(&mut combined);
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for front in fronts {
        if chosen.len() + front.len() <= k {
            chosen.extend(front);
        } else {
            let mut rest = front;
            rest.sort_by(|&a, &b| combined[b].crowding.total_cmp(&combined[a].crowding));
            chosen.extend(rest.into_iter().take(k - chosen.len()));
        }
        if chosen.len() == k {
            break;
        }
    }
    let mut slots: Vec<Option<Individual>> = combined.into_iter().map(Some).collect();
    Ok(chosen.into_iter().map(|i| slots[i].take().expect("chosen once")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::ObjectiveVector;
    use crate::space::default_space;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ind(rank: usize, crowding: f64) -> Individual {
        let genome = vec![0.5; 8];
        Individual {
            configuration: default_space().decode(&genome).unwrap(),
            genome,
            objectives: None,
            rank,
            crowding,
        }
    }

    fn scored(c: f64, g: f64, r: f64) -> Individual {
        Individual {
            objectives: Some(ObjectiveVector::new(c, g, r)),
            ..ind(0, 0.0)
        }
    }

    #[test]
    fn tournament_prefers_rank_then_crowding() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pop = [ind(0, 0.1), ind(1, 5.0)];
        for _ in 0..20 {
            assert_eq!(tournament_select(&pop, &mut rng).unwrap(), 0);
        }
        let pop = [ind(0, f64::INFINITY), ind(0, 0.5)];
        for _ in 0..20 {
            assert_eq!(tournament_select(&pop, &mut rng).unwrap(), 0);
        }
        assert!(tournament_select(&pop[..1], &mut rng).is_err());
    }

    #[test]
    fn tournament_ties_are_fair() {
        let pop = [ind(0, 1.0), ind(0, 1.0)];
        let mut wins = 0;
        for seed in 0..10_000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            wins += usize::from(tournament_select(&pop, &mut rng).unwrap() == 0);
        }
        assert!((wins as f64 / 10_000.0 - 0.5).abs() < 0.05);
    }

    #[test]
    fn sbx_identities() {
        assert_eq!(sbx_beta(0.5, 15.0), 1.0);
        assert_eq!(sbx_genes(0.2, 0.7, 1.0), (0.2, 0.7));
        let params = GAParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let p = vec![0.3; 8];
            let (a, b) = sbx_crossover(&p, &p, &params, &mut rng).unwrap();
            assert_eq!(a, p);
            assert_eq!(b, p);
        }
        assert!(sbx_crossover(&[0.1], &[0.1, 0.2], &params, &mut rng).is_err());
    }

    #[test]
    fn no_crossover_copies_parents() {
        let params = GAParams {
            crossover_probability: 0.0,
            ..GAParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (a, b) = sbx_crossover(&[0.1, 0.9], &[0.8, 0.2], &params, &mut rng).unwrap();
        assert_eq!((a, b), (vec![0.1, 0.9], vec![0.8, 0.2]));
    }

    #[test]
    fn mutation_off_is_identity() {
        let params = GAParams {
            mutation_probability: 0.0,
            ..GAParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = vec![0.1, 0.5, 0.99];
        assert_eq!(polynomial_mutation(g.clone(), &params, &mut rng), g);
    }

    #[test]
    fn mutation_of_centre_is_bounded_and_unbiased() {
        let params = GAParams {
            mutation_probability: 1.0,
            mutation_eta: 20.0,
            ..GAParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut sum = 0.0;
        for _ in 0..10_000 {
            let g = polynomial_mutation(vec![0.5], &params, &mut rng)[0];
            assert!((0.0..=1.0).contains(&g));
            sum += g;
        }
        assert!((sum / 10_000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn survivors_fill_by_front() {
        // front 0: four points trading correctness against runtime; front 1: two
        let pop = vec![
            scored(0.9, 0.0, 900.0),
            scored(0.7, 0.0, 800.0),
            scored(0.5, 0.0, 700.0),
            scored(0.3, 0.0, 600.0),
            scored(0.8, 0.0, 1000.0),
            scored(0.2, 0.0, 650.0),
        ];
        let four = survivor_selection(pop.clone(), 4).unwrap();
        assert!(four.iter().all(|i| i.rank == 0));
        let five = survivor_selection(pop.clone(), 5).unwrap();
        assert_eq!(five.len(), 5);
        // both front-1 members are boundary points; the tie keeps input order
        assert_eq!(five[4].objectives, pop[4].objectives);
        let one = survivor_selection(pop.clone(), 1).unwrap();
        assert_eq!(one[0].rank, 0);
        assert!(one[0].crowding.is_infinite());
        assert!(survivor_selection(pop, 7).is_err());
    }

    #[test]
    fn survivor_split_prefers_crowding() {
        // front 1 has three members; the middle one has finite crowding
        let pop = vec![
            scored(1.0, 1.0, 100.0),
            scored(0.9, 0.0, 900.0),
            scored(0.5, 0.0, 500.0),
            scored(0.1, 0.0, 100.0 + 1.0),
        ];
        let kept = survivor_selection(pop.clone(), 3).unwrap();
        let kept_rt: Vec<f64> = kept.iter().map(|i| i.objectives.unwrap().runtime).collect();
        assert_eq!(kept_rt, vec![100.0, 900.0, 101.0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sbx_children_bounded_and_mean_preserving(
                p1 in proptest::collection::vec(0.0f64..=1.0, 8),
                p2 in proptest::collection::vec(0.0f64..=1.0, 8),
                u in proptest::collection::vec(0.0f64..1.0, 8),
            ) {
                for i in 0..8 {
                    let beta = sbx_beta(u[i], 15.0);
                    let (a, b) = sbx_genes(p1[i], p2[i], beta);
                    if (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) {
                        prop_assert!((a + b - p1[i] - p2[i]).abs() < 1e-12);
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(u[0].to_bits());
                let (c1, c2) = sbx_crossover(&p1, &p2, &GAParams::default(), &mut rng).unwrap();
                prop_assert!(c1.iter().chain(&c2).all(|g| (0.0..=1.0).contains(g)));
            }
        }
    }
}
