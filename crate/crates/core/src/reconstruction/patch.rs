use crate::mesh::Mesh;
use crate::quadrature::Point;

use super::basis::irrotational_dim;

#[derive(Debug, Clone, PartialEq)]
pub struct ElementPatch {
    pub owner: usize,
    /// Patch members, owner first.
    pub members: Vec<usize>,
    /// Barycenters of the members, in member order.
    pub sampling_nodes: Vec<Point>,
    /// Number of neighbor layers visited.
    pub depth: usize,
}

impl ElementPatch {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// How the last, partially used neighbor layer is ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PatchOrdering {
    /// Nearest barycenters first (ties by id); every element tied with the
    /// last one taken is taken too, so a patch may exceed its target size.
    #[default]
    Distance,
    /// Ascending element id, cut exactly at the target size.
    ElementId,
}

/// Grows the patch of `owner` layer by layer through face neighbors until
/// `target_size` members are collected; an exhausted component is returned
/// whole.
pub fn build_patch(mesh: &Mesh, owner: usize, target_size: usize) -> ElementPatch {
    build_patch_with(mesh, owner, target_size, PatchOrdering::default())
}

pub fn build_patch_with(
    mesh: &Mesh,
    owner: usize,
    target_size: usize,
    ordering: PatchOrdering,
) -> ElementPatch {
    let target = target_size.max(1);
    let center = mesh.barycenters[owner];
    let h2 = mesh.diameters[owner].powi(2);
    // squared distances quantized so that mirror-image elements tie exactly
    let distance_key = |k: usize| {
        let b = mesh.barycenters[k];
        (((b[0] - center[0]).powi(2) + (b[1] - center[1]).powi(2)) / h2 * 1e8).round() as i64
    };
    let mut members = vec![owner];
    let mut in_patch = std::collections::HashSet::from([owner]);
    let mut frontier = vec![owner];
    let mut depth = 0;
    while members.len() < target {
        let mut layer: Vec<usize> = frontier
            .iter()
            .flat_map(|&k| mesh.neighbors(k))
            .filter(|k| !in_patch.contains(k))
            .collect();
        layer.sort_unstable();
        layer.dedup();
        if layer.is_empty() {
            break;
        }
        depth += 1;
        let mut take = layer.len().min(target - members.len());
        if ordering == PatchOrdering::Distance {
            layer.sort_by_key(|&k| (distance_key(k), k));
            while take < layer.len() && distance_key(layer[take]) == distance_key(layer[take - 1]) {
                take += 1;
            }
        }
        layer.truncate(take);
        for &k in &layer {
            in_patch.insert(k);
        }
        members.extend_from_slice(&layer);
        frontier = layer;
    }
    let sampling_nodes = members.iter().map(|&k| mesh.barycenters[k]).collect();
    ElementPatch {
        owner,
        members,
        sampling_nodes,
        depth,
    }
}

/// Reference patch cardinalities for degrees 1..=3, never below
/// ceil(dim / d) + 2.
pub fn default_patch_size(m: usize, d: usize) -> usize {
    let floor = irrotational_dim(m.max(1), d).div_ceil(d) + 2;
    let table = match (d, m) {
        (2, 1) => Some(6),
        (2, 2) => Some(10),
        (2, 3) => Some(16),
        (3, 1) => Some(8),
        (3, 2) => Some(15),
        (3, 3) => Some(25),
        _ => None,
    };
    match table {
        Some(s) => s.max(floor),
        None => {
            log::warn!("no reference patch size for m = {m}, d = {d}; using {floor}");
            floor
        }
    }
}
