//! Exact Euclidean distance transforms and signed distance fields.
//!
//! The transform is separable: one lower-envelope-of-parabolas pass per axis
//! over squared distances, each pass weighted by that axis' squared spacing.
//! Squared distances stay in `f64` until the final square root, so on a unit
//! lattice the squared values are exact integers.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::volume::{BinaryMask, GridSpec, LabelVolume};

/// Per-voxel distance in mm to one structure's surface.
///
/// Signed fields are negative inside the structure and zero on its surface
/// voxels. A composite field (see [`compose_min`]) records the structures it
/// was built from in `sources`; primitive fields leave `sources` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub spec: GridSpec,
    pub values: Vec<f32>,
    pub structure_name: String,
    pub sources: Vec<String>,
}

/// Voxelwise minimum over several fields.
pub type CompositeField = DistanceField;

impl DistanceField {
    pub fn new(spec: GridSpec, values: Vec<f32>, structure_name: impl Into<String>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.len(),
                found: values.len(),
            });
        }
        Ok(Self {
            spec,
            values,
            structure_name: structure_name.into(),
            sources: Vec::new(),
        })
    }

    #[inline]
    pub fn get(&self, voxel: [usize; 3]) -> f32 {
        self.values[self.spec.index(voxel)]
    }

    /// Value of the voxel containing `pos`, or `None` outside the grid.
    pub fn sample(&self, pos: [f64; 3]) -> Option<f32> {
        self.spec.voxel_at(pos).map(|v| self.get(v))
    }
}

/// Squared distance (mm²) from every voxel center to the nearest set voxel
/// center. Voxels are `f64::INFINITY` only when the mask is empty.
pub fn squared_edt(mask: &BinaryMask) -> Result<Vec<f64>> {
    if !mask.bits().iter().any(|&b| b) {
        return Err(Error::EmptyStructure);
    }
    let spec = *mask.spec();
    let mut grid: Vec<f64> = mask
        .bits()
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();

    let [nx, ny, nz] = spec.dims;
    let strides = [1, nx, nx * ny];
    let longest = nx.max(ny).max(nz);
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut env = Envelope::with_capacity(longest);

    for axis in 0..3 {
        let n = spec.dims[axis];
        if n == 1 {
            continue;
        }
        let weight = spec.spacing[axis] * spec.spacing[axis];
        let stride = strides[axis];
        // every line along `axis` starts at a voxel whose `axis` coordinate is zero
        for start in 0..grid.len() {
            if spec.coords(start)[axis] != 0 {
                continue;
            }
            for (q, slot) in line[..n].iter_mut().enumerate() {
                *slot = grid[start + q * stride];
            }
            env.transform(&line[..n], weight, &mut out[..n]);
            for (q, &d) in out[..n].iter().enumerate() {
                grid[start + q * stride] = d;
            }
        }
    }
    Ok(grid)
}

/// Lower envelope of the parabolas `w·(q - p)² + f(p)`, reusable across lines.
struct Envelope {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n),
        }
    }

    fn transform(&mut self, f: &[f64], weight: f64, out: &mut [f64]) {
        self.sites.clear();
        self.bounds.clear();
        for q in 0..f.len() {
            if f[q].is_infinite() {
                continue;
            }
            loop {
                let Some(&p) = self.sites.last() else {
                    self.sites.push(q);
                    self.bounds.push(f64::NEG_INFINITY);
                    break;
                };
                let (pf, qf) = (p as f64, q as f64);
                let s = ((f[q] + weight * qf * qf) - (f[p] + weight * pf * pf))
                    / (2.0 * weight * (qf - pf));
                if s <= *self.bounds.last().unwrap() {
                    self.sites.pop();
                    self.bounds.pop();
                } else {
                    self.sites.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
        }
        if self.sites.is_empty() {
            out.fill(f64::INFINITY);
            return;
        }
        let mut k = 0;
        for (q, slot) in out.iter_mut().enumerate() {
            let qf = q as f64;
            while k + 1 < self.sites.len() && self.bounds[k + 1] < qf {
                k += 1;
            }
            let p = self.sites[k];
            let d = qf - p as f64;
            *slot = weight * d * d + f[p];
        }
    }
}

/// Unsigned distance (mm) from each voxel center to the nearest set voxel.
pub fn exact_edt(mask: &BinaryMask) -> Result<DistanceField> {
    let sq = squared_edt(mask)?;
    DistanceField::new(
        *mask.spec(),
        sq.into_iter().map(|d| d.sqrt() as f32).collect(),
        "edt",
    )
}

/// Signed distance to the surface of the voxels selected by `mask`:
/// `+d` outside, `-d` inside, `0` on surface voxels.
pub fn signed_edt_of_mask(mask: &BinaryMask, name: impl Into<String>) -> Result<DistanceField> {
    let surface = mask.boundary();
    let sq = squared_edt(&surface)?;
    let values = sq
        .into_iter()
        .zip(mask.bits().iter().zip(surface.bits()))
        .map(|(d, (&inside, &on_surface))| {
            let d = d.sqrt() as f32;
            if inside && !on_surface {
                -d
            } else {
                d
            }
        })
        .collect();
    DistanceField::new(*mask.spec(), values, name)
}

/// Signed distance field of the structure made of `codes` in `volume`.
/// The field is named after the palette entries of the codes, joined by `+`.
pub fn signed_edt(volume: &LabelVolume, codes: &BTreeSet<u8>) -> Result<DistanceField> {
    let name = codes
        .iter()
        .map(|c| {
            volume
                .palette()
                .get(c)
                .cloned()
                .unwrap_or_else(|| c.to_string())
        })
        .collect::<Vec<_>>()
        .join("+");
    signed_edt_of_mask(&volume.mask_of(codes), name)
}

/// Voxelwise minimum of fields sharing one grid. Sources are recorded in input order.
pub fn compose_min(fields: &[DistanceField]) -> Result<CompositeField> {
    let (first, rest) = fields.split_first().ok_or(Error::EmptyList)?;
    if rest.iter().any(|f| f.spec != first.spec) {
        return Err(Error::SpecMismatch);
    }
    let mut values = first.values.clone();
    for f in rest {
        for (acc, &v) in values.iter_mut().zip(&f.values) {
            if v < *acc {
                *acc = v;
            }
        }
    }
    Ok(DistanceField {
        spec: first.spec,
        values,
        structure_name: "composite".into(),
        sources: fields.iter().map(|f| f.structure_name.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn unit(n: usize) -> GridSpec {
        GridSpec::isotropic([n; 3], 1.0).unwrap()
    }

    #[test]
    fn corner_seed_gives_sqrt3_at_diagonal() {
        let mut m = BinaryMask::empty(unit(3));
        m.set([0, 0, 0], true);
        let d = exact_edt(&m).unwrap();
        assert_eq!(d.get([1, 1, 1]), 3f32.sqrt());
        assert_eq!(d.get([2, 2, 2]), 12f32.sqrt());
        assert_eq!(d.get([0, 0, 0]), 0.0);
    }

    #[test]
    fn empty_mask_is_an_error() {
        let m = BinaryMask::empty(unit(3));
        assert!(matches!(exact_edt(&m), Err(Error::EmptyStructure)));
    }

    #[test]
    fn anisotropic_spacing_scales_each_axis() {
        let spec = GridSpec::new([4, 4, 4], [0.5, 1.0, 2.0], [0.0; 3]).unwrap();
        let mut m = BinaryMask::empty(spec);
        m.set([0, 0, 0], true);
        let d = exact_edt(&m).unwrap();
        assert_eq!(d.get([2, 0, 0]), 1.0);
        assert_eq!(d.get([0, 2, 0]), 2.0);
        assert_eq!(d.get([0, 0, 2]), 4.0);
        let expect = ((3.0f64 * 0.5).powi(2) + 9.0 + 36.0).sqrt() as f32;
        assert_eq!(d.get([3, 3, 3]), expect);
    }

    #[test]
    fn flat_axes_are_skipped() {
        let spec = GridSpec::isotropic([5, 1, 1], 1.0).unwrap();
        let mut m = BinaryMask::empty(spec);
        m.set([4, 0, 0], true);
        let d = exact_edt(&m).unwrap();
        assert_eq!(d.values, vec![4.0, 3.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn cube_center_is_one_voxel_inside() {
        let spec = unit(5);
        let mut labels = vec![0u8; spec.len()];
        for k in 1..4 {
            for j in 1..4 {
                for i in 1..4 {
                    labels[spec.index([i, j, k])] = 1;
                }
            }
        }
        let vol = LabelVolume::new(spec, labels, BTreeMap::from([(1, "LB".into())])).unwrap();
        let f = signed_edt(&vol, &BTreeSet::from([1])).unwrap();
        assert_eq!(f.structure_name, "LB");
        assert_eq!(f.get([2, 2, 2]), -1.0);
        assert_eq!(f.get([1, 1, 1]), 0.0);
        assert_eq!(f.get([0, 2, 2]), 1.0);
    }

    #[test]
    fn face_neighbor_of_single_voxel_is_one_spacing_away() {
        let spec = GridSpec::isotropic([3, 3, 3], 0.48).unwrap();
        let mut m = BinaryMask::empty(spec);
        m.set([1, 1, 1], true);
        let f = signed_edt_of_mask(&m, "S").unwrap();
        assert_eq!(f.get([1, 1, 1]), 0.0);
        assert_eq!(f.get([2, 1, 1]), 0.48);
    }

    #[test]
    fn compose_min_rejects_mismatched_or_empty() {
        assert!(matches!(compose_min(&[]), Err(Error::EmptyList)));
        let a = DistanceField::new(unit(2), vec![0.0; 8], "a").unwrap();
        let b = DistanceField::new(unit(3), vec![0.0; 27], "b").unwrap();
        assert!(matches!(compose_min(&[a, b]), Err(Error::SpecMismatch)));
    }

    #[test]
    fn compose_min_picks_smallest_and_records_sources() {
        let spec = GridSpec::isotropic([1, 1, 1], 1.0).unwrap();
        let fields = [(-1.0, "VF"), (2.0, "LB"), (0.5, "SVB")]
            .map(|(v, n)| DistanceField::new(spec, vec![v], n).unwrap());
        let c = compose_min(&fields).unwrap();
        assert_eq!(c.values, vec![-1.0]);
        assert_eq!(c.sources, vec!["VF", "LB", "SVB"]);
        let single = compose_min(&fields[1..2]).unwrap();
        assert_eq!(single.values, fields[1].values);
    }
}
