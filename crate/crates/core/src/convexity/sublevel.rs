use std::collections::{HashMap, VecDeque};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConvexityError, Grid3, Point3, ScalarField3};
use crate::complexgrid::io::SurfaceMesh;

/// A 26-connected set of lattice points of a [`Grid3`], indices ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoxelComponent {
    pub voxels: Vec<usize>,
    pub volume: f64,
}

impl VoxelComponent {
    pub fn contains_index(&self, idx: usize) -> bool {
        self.voxels.binary_search(&idx).is_ok()
    }

    pub fn contains_point(&self, grid: &Grid3, x: Point3) -> bool {
        grid.nearest(x).is_some_and(|i| self.contains_index(i))
    }

    /// True if every voxel of `self` is in `other`.
    pub fn subset_of(&self, other: &VoxelComponent) -> bool {
        self.voxels.iter().all(|&v| other.contains_index(v))
    }

    /// True if every voxel of `self` and all its 26 neighbours are in `other`.
    pub fn compactly_inside(&self, other: &VoxelComponent, grid: &Grid3) -> bool {
        self.voxels
            .iter()
            .all(|&v| neighbours(grid, v).count() == 26 && neighbours(grid, v).all(|w| other.contains_index(w)))
    }
}

fn neighbours(grid: &Grid3, idx: usize) -> impl Iterator<Item = usize> + '_ {
    let c = grid.ijk(idx);
    (0..27).filter(|&d| d != 13).filter_map(move |d| {
        let off = [d % 3, (d / 3) % 3, d / 9];
        let mut n = [0usize; 3];
        for a in 0..3 {
            let v = c[a] + off[a];
            if v == 0 || v > grid.dims[a] {
                return None;
            }
            n[a] = v - 1;
        }
        Some(grid.index(n[0], n[1], n[2]))
    })
}

fn occupancy(field: &ScalarField3, c: f64, grid: &Grid3) -> Vec<bool> {
    (0..grid.len()).into_par_iter().map(|i| field.eval(grid.point(i)) <= c).collect()
}

fn label(grid: &Grid3, occ: &[bool]) -> Vec<VoxelComponent> {
    let mut seen = vec![false; occ.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for s in 0..occ.len() {
        if !occ[s] || seen[s] {
            continue;
        }
        seen[s] = true;
        queue.push_back(s);
        let mut vox = Vec::new();
        while let Some(v) = queue.pop_front() {
            vox.push(v);
            for w in neighbours(grid, v) {
                if occ[w] && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        vox.sort_unstable();
        out.push(VoxelComponent {
            volume: vox.len() as f64 * grid.voxel_volume(),
            voxels: vox,
        })
    }
    out.sort_by(|a, b| b.voxels.len().cmp(&a.voxels.len()).then(a.voxels[0].cmp(&b.voxels[0])));
    out
}

/// Connected components of `{φ ≤ c}` sampled on `grid`, largest first.
pub fn sublevel_components(field: &ScalarField3, c: f64, grid: &Grid3) -> Result<Vec<VoxelComponent>, ConvexityError> {
    if grid.is_empty() {
        return Err(ConvexityError::EmptyGrid);
    }
    Ok(label(grid, &occupancy(field, c, grid)))
}

pub fn select_component<'a>(
    components: &'a [VoxelComponent],
    grid: &Grid3,
    marker: Point3,
) -> Result<&'a VoxelComponent, ConvexityError> {
    components
        .iter()
        .find(|c| c.contains_point(grid, marker))
        .ok_or(ConvexityError::MarkerOutside)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLevel {
    pub value: f64,
    pub component: VoxelComponent,
    /// Number of components of the whole sublevel set.
    pub component_count: usize,
    /// Contains the previous level voxelwise.
    pub contains_previous: bool,
    /// Contains the previous level together with its 26-neighbourhood.
    pub compactly_contains_previous: bool,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionChain {
    pub grid: Grid3,
    pub marker: Point3,
    pub levels: Vec<ChainLevel>,
}

impl ExhaustionChain {
    pub fn nested(&self) -> bool {
        self.levels.iter().skip(1).all(|l| l.contains_previous)
    }
}

/// Marker components `L₁ ⊂ L₂ ⊂ …` of `{φ ≤ r_j}`. A value is flagged as
/// possibly critical when the component count changes under a relative
/// perturbation `perturb`, and a merge is flagged when `L_j` swallows more
/// than one component of the previous sublevel set.
pub fn exhaustion_chain(
    field: &ScalarField3,
    values: &[f64],
    marker: Point3,
    grid: &Grid3,
    perturb: f64,
) -> Result<ExhaustionChain, ConvexityError> {
    if let Some(i) = (1..values.len()).find(|&i| !(values[i] > values[i - 1])) {
        return Err(ConvexityError::NotIncreasing(i));
    }
    let mut levels: Vec<ChainLevel> = Vec::with_capacity(values.len());
    let mut prev_all: Vec<VoxelComponent> = Vec::new();
    for &r in values {
        let comps = sublevel_components(field, r, grid)?;
        let comp = select_component(&comps, grid, marker)?.clone();
        let mut warnings = Vec::new();
        let d = perturb * r.abs().max(1.0);
        let lo = sublevel_components(field, r - d, grid)?.len();
        let hi = sublevel_components(field, r + d, grid)?.len();
        if lo != comps.len() || hi != comps.len() {
            warnings.push(format!(
                "value {r} may be critical: {lo}/{}/{hi} components at -δ/0/+δ",
                comps.len()
            ));
        }
        let merged = prev_all.iter().filter(|c| c.voxels.iter().any(|&v| comp.contains_index(v))).count();
        if merged > 1 {
            warnings.push(format!("{merged} components merged into the marker component at {r}"));
        }
        let (contains_previous, compactly) = match levels.last() {
            Some(p) => (p.component.subset_of(&comp), p.component.compactly_inside(&comp, grid)),
            None => (true, true),
        };
        levels.push(ChainLevel {
            value: r,
            component: comp,
            component_count: comps.len(),
            contains_previous,
            compactly_contains_previous: compactly,
            warnings,
        });
        prev_all = comps;
    }
    Ok(ExhaustionChain {
        grid: grid.clone(),
        marker,
        levels,
    })
}

/// Occupancy volume as NRRD (ASCII header, raw uint8 body).
pub fn write_nrrd<W: Write>(component: &VoxelComponent, grid: &Grid3, mut w: W) -> Result<(), ConvexityError> {
    let s = grid.spacing();
    writeln!(w, "NRRD0004")?;
    writeln!(w, "type: uint8")?;
    writeln!(w, "dimension: 3")?;
    writeln!(w, "space: right-anterior-superior")?;
    writeln!(w, "sizes: {} {} {}", grid.dims[0], grid.dims[1], grid.dims[2])?;
    writeln!(w, "space directions: ({},0,0) (0,{},0) (0,0,{})", s[0], s[1], s[2])?;
    writeln!(w, "space origin: ({},{},{})", grid.lo[0], grid.lo[1], grid.lo[2])?;
    writeln!(w, "encoding: raw")?;
    writeln!(w)?;
    let mut body = vec![0u8; grid.len()];
    for &v in &component.voxels {
        body[v] = 1;
    }
    w.write_all(&body)?;
    Ok(())
}

/// Outer faces of the voxel cubes (centred on lattice points) as triangles.
pub fn component_boundary_mesh(component: &VoxelComponent, grid: &Grid3) -> SurfaceMesh {
    let s = grid.spacing();
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut verts: Vec<Point3> = Vec::new();
    let mut faces = Vec::new();
    let mut vid = |c: [i64; 3], verts: &mut Vec<Point3>| {
        *index.entry(c).or_insert_with(|| {
            verts.push(std::array::from_fn(|a| grid.lo[a] + (c[a] as f64 - 0.5) * s[a]));
            verts.len() - 1
        })
    };
    for &v in &component.voxels {
        let c = grid.ijk(v).map(|x| x as i64);
        for axis in 0..3 {
            let (p, q) = ((axis + 1) % 3, (axis + 2) % 3);
            for dir in [-1i64, 1] {
                let mut n = c;
                n[axis] += dir;
                let inside = (0..3).all(|a| n[a] >= 0 && n[a] < grid.dims[a] as i64)
                    && component.contains_index(grid.index(n[0] as usize, n[1] as usize, n[2] as usize));
                if inside {
                    continue;
                }
                // corners in lattice-corner coordinates (voxel c spans c..c+1)
                let corner = |dp: i64, dq: i64| {
                    let mut k = c;
                    k[axis] += if dir > 0 { 1 } else { 0 };
                    k[p] += dp;
                    k[q] += dq;
                    k
                };
                let ids = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)].map(|k| vid(k, &mut verts));
                if dir > 0 {
                    faces.push([ids[0], ids[1], ids[2]]);
                    faces.push([ids[0], ids[2], ids[3]]);
                } else {
                    faces.push([ids[0], ids[2], ids[1]]);
                    faces.push([ids[0], ids[3], ids[2]]);
                }
            }
        }
    }
    SurfaceMesh::new(verts, faces)
}
