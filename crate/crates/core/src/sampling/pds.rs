use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{SampleSet, SamplingError, SamplingMethod};
use crate::mesh::{distance, TriangleMesh, Vec3};

/// `r = c·√(area / target)`. Random sequential disk packing jams at about
/// 0.547 coverage, which gives `c ≈ √(0.547·4/π) ≈ 0.84` for the expected
/// count to land near the target on a smooth surface.
pub const PDS_RADIUS_CONSTANT: f64 = 0.84;

pub fn poisson_disk_radius(area: f64, target_count: usize) -> f64 {
    PDS_RADIUS_CONSTANT * (area / target_count.max(1) as f64).sqrt()
}

/// Dart throwing over vertices in a seeded random order, targeting roughly
/// `target_count` samples. The returned count is approximate.
pub fn poisson_disk_sampling(mesh: &TriangleMesh, target_count: usize, rng_seed: u64) -> Result<SampleSet, SamplingError> {
    let n = mesh.vertex_count();
    if target_count == 0 {
        return Err(SamplingError::ZeroCount);
    }
    if target_count > n {
        return Err(SamplingError::CountTooLarge { count: target_count, vertex_count: n });
    }
    let r = poisson_disk_radius(mesh.surface_area(), target_count);
    Ok(poisson_disk_with_radius(mesh, r, rng_seed, &[]))
}

struct Grid {
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<Vec3>>,
}

impl Grid {
    fn key(&self, p: Vec3) -> [i64; 3] {
        p.map(|x| (x / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: Vec3) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(p);
    }

    fn is_free(&self, p: Vec3, radius: f64) -> bool {
        let k = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if bucket.iter().any(|&q| distance(p, q) < radius) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Accepts vertices whose ambient distance to every accepted sample is at
/// least `radius`. `preseeded` vertices are accepted first, unconditionally
/// and in the given order, which makes nested hierarchies possible.
pub fn poisson_disk_with_radius(mesh: &TriangleMesh, radius: f64, rng_seed: u64, preseeded: &[usize]) -> SampleSet {
    let n = mesh.vertex_count();
    // Cells as wide as the radius keep the 27-cell search complete.
    let cell = if radius > 0.0 { radius } else { 1.0 };
    let mut grid = Grid { cell, buckets: HashMap::new() };
    let mut taken = vec![false; n];
    let mut indices = Vec::new();
    for &v in preseeded {
        if !taken[v] {
            taken[v] = true;
            indices.push(v);
            grid.insert(mesh.position(v));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
    for v in order {
        if taken[v] {
            continue;
        }
        let p = mesh.position(v);
        if grid.is_free(p, radius) {
            taken[v] = true;
            indices.push(v);
            grid.insert(p);
        }
    }
    SampleSet { indices, method: SamplingMethod::Pds, radius }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn huge_radius_gives_one_sample() {
        let mesh = shapes::icosphere(2, 1.0);
        let s = poisson_disk_with_radius(&mesh, 10.0, 1, &[]);
        assert_eq!(s.indices.len(), 1);
    }

    #[test]
    fn respects_radius_and_is_deterministic() {
        let mesh = shapes::icosphere(3, 1.0);
        let a = poisson_disk_with_radius(&mesh, 0.3, 7, &[]);
        let b = poisson_disk_with_radius(&mesh, 0.3, 7, &[]);
        assert_eq!(a, b);
        for (i, &u) in a.indices.iter().enumerate() {
            for &v in &a.indices[i + 1..] {
                assert!(distance(mesh.position(u), mesh.position(v)) >= 0.3);
            }
        }
    }

    #[test]
    fn target_count_is_approximate() {
        let mesh = shapes::icosphere(5, 1.0);
        for seed in 0..10 {
            let s = poisson_disk_sampling(&mesh, 100, seed).unwrap();
            assert!((50..=200).contains(&s.indices.len()), "{}", s.indices.len());
        }
    }
}
