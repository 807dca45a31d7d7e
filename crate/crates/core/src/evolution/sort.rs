use crate::metrics::dominates_min;

use super::EvolutionError;

/// Splits minimization vectors into successive non-dominated fronts.
/// Indices within a front keep their input order.
pub fn fast_non_dominated_sort(objectives: &[Vec<f64>]) -> Result<Vec<Vec<usize>>, EvolutionError> {
    let n = objectives.len();
    if let Some(first) = objectives.first() {
        if let Some(bad) = objectives.iter().find(|o| o.len() != first.len()) {
            return Err(EvolutionError::DimensionMismatch {
                expected: first.len(),
                got: bad.len(),
            });
        }
    }
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates_min(&objectives[i], &objectives[j]) {
                dominates[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates_min(&objectives[j], &objectives[i]) {
                dominates[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    Ok(fronts)
}

/// Crowding distance of each member of one front. Extremes of every
/// objective get `+inf`; zero-range objectives contribute nothing.
#[allow(clippy::needless_range_loop)]
pub fn crowding_distance(front: &[Vec<f64>]) -> Vec<f64> {
    let n = front.len();
    let mut distance = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let dims = front[0].len();
    for d in 0..dims {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| front[a][d].total_cmp(&front[b][d]));
        let lo = front[order[0]][d];
        let hi = front[order[n - 1]][d];
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        for k in 1..n - 1 {
            let i = order[k];
            if distance[i].is_finite() {
                distance[i] += (front[order[k + 1]][d] - front[order[k - 1]][d]) / range;
            }
        }
    }
    distance
}
