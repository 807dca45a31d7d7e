use serde::{Deserialize, Serialize};

use crate::evaluation::{EvaluationRecord, ObjectiveVector};

use super::MetricsError;

/// Pareto dominance on minimization vectors of equal length.
pub fn dominates_min(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// True when `a` has at least the correctness and gain of `b`, no more
/// runtime, and is strictly better somewhere.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    dominates_min(&a.to_minimization(), &b.to_minimization())
}

/// Number of objectives in which `a` is strictly better than `b`.
pub fn improved_objectives(a: &ObjectiveVector, b: &ObjectiveVector) -> usize {
    a.to_minimization()
        .iter()
        .zip(b.to_minimization())
        .filter(|(x, y)| **x < *y)
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Duplicate {
    pub record: EvaluationRecord,
    /// Index into `members` of the record with the identical objectives.
    pub duplicate_of: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub members: Vec<EvaluationRecord>,
    /// Later records whose objectives exactly equal a member's.
    pub duplicates: Vec<Duplicate>,
    pub extracted_from: usize,
}

/// Indices of the non-dominated vectors, split into first occurrences and
/// later exact duplicates `(index, index of first occurrence)`.
pub fn nondominated_indices(objectives: &[ObjectiveVector]) -> (Vec<usize>, Vec<(usize, usize)>) {
    let mut members: Vec<usize> = Vec::new();
    let mut dups = Vec::new();
    for (i, a) in objectives.iter().enumerate() {
        if objectives.iter().any(|b| dominates(b, a)) {
            continue;
        }
        match members.iter().find(|&&m| objectives[m] == *a) {
            Some(&m) => dups.push((i, m)),
            None => members.push(i),
        }
    }
    (members, dups)
}

pub fn pareto_front(records: &[EvaluationRecord]) -> Result<ParetoFront, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let objectives: Vec<ObjectiveVector> = records.iter().map(|r| r.objectives).collect();
    let (members, dups) = nondominated_indices(&objectives);
    let duplicates = dups
        .into_iter()
        .map(|(i, m)| Duplicate {
            record: records[i].clone(),
            duplicate_of: members.iter().position(|&x| x == m).expect("member"),
        })
        .collect();
    Ok(ParetoFront {
        members: members.into_iter().map(|i| records[i].clone()).collect(),
        duplicates,
        extracted_from: records.len(),
    })
}
