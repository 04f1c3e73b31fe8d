//! Seeded task sampling.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::config::DifficultyFilter;
use super::BenchError;
use crate::floorplan::{ConnectivityGraph, Difficulty, NavTask};

/// Ordered (start, goal) pairs matching `filter`, in node order.
pub fn qualifying_tasks(graph: &ConnectivityGraph, filter: DifficultyFilter) -> Vec<NavTask> {
    let mut out = Vec::new();
    for start in &graph.nodes {
        let Ok(dist) = graph.distances_from(start) else { continue };
        for goal in &graph.nodes {
            let Some(&d) = dist.get(goal.as_str()) else { continue };
            let difficulty = match d {
                0 => continue,
                1 => Difficulty::Easy,
                3 => Difficulty::Hard,
                _ => Difficulty::Other,
            };
            let keep = match filter {
                DifficultyFilter::Easy => difficulty == Difficulty::Easy,
                DifficultyFilter::Hard => difficulty == Difficulty::Hard,
                DifficultyFilter::Any => true,
            };
            if keep {
                out.push(NavTask {
                    map_id: graph.map_id.clone(),
                    start_room: start.clone(),
                    goal_room: goal.clone(),
                    difficulty,
                });
            }
        }
    }
    out
}

/// `n` distinct tasks drawn uniformly without replacement, returned in
/// node order. The same seed always gives the same sample.
pub fn sample_tasks(graph: &ConnectivityGraph, n: usize, filter: DifficultyFilter, seed: u64) -> Result<Vec<NavTask>, BenchError> {
    if graph.nodes.len() < 2 {
        return Err(BenchError::NotEnoughTasks {
            map: graph.map_id.clone(),
            difficulty: filter.as_str(),
            requested: n,
            available: 0,
        });
    }
    let pool = qualifying_tasks(graph, filter);
    if pool.len() < n {
        return Err(BenchError::NotEnoughTasks {
            map: graph.map_id.clone(),
            difficulty: filter.as_str(),
            requested: n,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, pool.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| pool[i].clone()).collect())
}

/// Seed for one (map variant, difficulty) stream derived from the
/// experiment seed.
pub fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}
