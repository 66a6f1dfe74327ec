//! Dense label volumes, voxel masks and the grid geometry they share.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label code reserved for empty space.
pub const EMPTY_CODE: u8 = 0;

/// Default isotropic voxel size of the planning scans, in mm.
pub const DEFAULT_SPACING_MM: f64 = 0.48;

/// Voxel counts, physical spacing and world offset of a dense grid.
///
/// Voxel `(i, j, k)` has its center at `origin + (index + 0.5) * spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
}

impl GridSpec {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        let spec = Self {
            dims,
            spacing,
            origin,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Isotropic grid at the default scan resolution, anchored at the world origin.
    pub fn isotropic(dims: [usize; 3], spacing: f64) -> Result<Self> {
        Self::new(dims, [spacing; 3], [0.0; 3])
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(Error::InvalidGrid(format!("dims must be >= 1, got {:?}", self.dims)));
        }
        if self.spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be finite and > 0, got {:?}",
                self.spacing
            )));
        }
        if self.origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid(format!("origin must be finite, got {:?}", self.origin)));
        }
        self.dims
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::InvalidGrid("voxel count overflows".into()))?;
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index, x fastest.
    #[inline]
    pub fn index(&self, [i, j, k]: [usize; 3]) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    #[inline]
    pub fn contains(&self, [i, j, k]: [i64; 3]) -> bool {
        i >= 0
            && j >= 0
            && k >= 0
            && (i as usize) < self.dims[0]
            && (j as usize) < self.dims[1]
            && (k as usize) < self.dims[2]
    }

    /// World position (mm) of a voxel center.
    #[inline]
    pub fn center(&self, voxel: [usize; 3]) -> [f64; 3] {
        std::array::from_fn(|a| self.origin[a] + (voxel[a] as f64 + 0.5) * self.spacing[a])
    }

    /// The voxel whose cell contains `pos`, if any.
    pub fn voxel_at(&self, pos: [f64; 3]) -> Option<[usize; 3]> {
        let mut out = [0usize; 3];
        for a in 0..3 {
            let f = ((pos[a] - self.origin[a]) / self.spacing[a]).floor();
            if !(f >= 0.0 && f < self.dims[a] as f64) {
                return None;
            }
            out[a] = f as usize;
        }
        Some(out)
    }

    /// World-space extent `[min, max]` of the grid along each axis.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let max = std::array::from_fn(|a| self.origin[a] + self.dims[a] as f64 * self.spacing[a]);
        (self.origin, max)
    }
}

/// Dense 3D grid of 8-bit structure labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    spec: GridSpec,
    labels: Vec<u8>,
    palette: BTreeMap<u8, String>,
}

impl LabelVolume {
    /// Builds a volume, checking the label count and that every code used is named.
    /// Code 0 is implicitly `EMPTY`.
    pub fn new(spec: GridSpec, labels: Vec<u8>, palette: BTreeMap<u8, String>) -> Result<Self> {
        spec.validate()?;
        if labels.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.len(),
                found: labels.len(),
            });
        }
        if let Some(name) = palette.get(&EMPTY_CODE) {
            if name != "EMPTY" {
                return Err(Error::MalformedHeader(format!(
                    "code 0 is reserved for EMPTY, palette names it {name:?}"
                )));
            }
        }
        let mut seen = [false; 256];
        for &c in &labels {
            seen[c as usize] = true;
        }
        for (code, used) in seen.iter().enumerate() {
            let code = code as u8;
            if *used && code != EMPTY_CODE && !palette.contains_key(&code) {
                return Err(Error::UnknownLabel(code));
            }
        }
        Ok(Self {
            spec,
            labels,
            palette,
        })
    }

    /// An all-empty volume with the given palette.
    pub fn empty(spec: GridSpec, palette: BTreeMap<u8, String>) -> Result<Self> {
        Self::new(spec, vec![EMPTY_CODE; spec.len()], palette)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn palette(&self) -> &BTreeMap<u8, String> {
        &self.palette
    }

    pub fn get(&self, voxel: [usize; 3]) -> u8 {
        self.labels[self.spec.index(voxel)]
    }

    /// Sets one voxel. The code must already be in the palette.
    pub fn set(&mut self, voxel: [usize; 3], code: u8) -> Result<()> {
        if code != EMPTY_CODE && !self.palette.contains_key(&code) {
            return Err(Error::UnknownLabel(code));
        }
        let idx = self.spec.index(voxel);
        self.labels[idx] = code;
        Ok(())
    }

    /// Looks up codes by structure name.
    pub fn codes_named<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> BTreeSet<u8> {
        let names: BTreeSet<&str> = names.into_iter().collect();
        self.palette
            .iter()
            .filter(|(_, n)| names.contains(n.as_str()))
            .map(|(&c, _)| c)
            .collect()
    }

    /// Voxel count per code.
    pub fn histogram(&self) -> [usize; 256] {
        let mut h = [0usize; 256];
        for &c in &self.labels {
            h[c as usize] += 1;
        }
        h
    }

    /// Selects the voxels whose code is in `codes`.
    pub fn mask_of(&self, codes: &BTreeSet<u8>) -> BinaryMask {
        let mut lut = [false; 256];
        for &c in codes {
            lut[c as usize] = true;
        }
        BinaryMask {
            spec: self.spec,
            bits: self.labels.iter().map(|&c| lut[c as usize]).collect(),
        }
    }
}

/// One membership flag per voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    spec: GridSpec,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(spec: GridSpec, bits: Vec<bool>) -> Result<Self> {
        spec.validate()?;
        if bits.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.len(),
                found: bits.len(),
            });
        }
        Ok(Self { spec, bits })
    }

    pub fn empty(spec: GridSpec) -> Self {
        Self {
            spec,
            bits: vec![false; spec.len()],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, voxel: [usize; 3]) -> bool {
        self.bits[self.spec.index(voxel)]
    }

    pub fn set(&mut self, voxel: [usize; 3], value: bool) {
        let idx = self.spec.index(voxel);
        self.bits[idx] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.spec == other.spec && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Surface voxels: members with at least one face neighbor outside the
    /// mask. Neighbors beyond the grid count as outside.
    pub fn boundary(&self) -> BinaryMask {
        let [nx, ny, nz] = self.spec.dims;
        let mut out = vec![false; self.bits.len()];
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let idx = self.spec.index([i, j, k]);
                    if !self.bits[idx] {
                        continue;
                    }
                    let exposed = i == 0
                        || i + 1 == nx
                        || j == 0
                        || j + 1 == ny
                        || k == 0
                        || k + 1 == nz
                        || !self.bits[idx - 1]
                        || !self.bits[idx + 1]
                        || !self.bits[idx - nx]
                        || !self.bits[idx + nx]
                        || !self.bits[idx - nx * ny]
                        || !self.bits[idx + nx * ny];
                    out[idx] = exposed;
                }
            }
        }
        BinaryMask {
            spec: self.spec,
            bits: out,
        }
    }
}

/// Free-function form of [`LabelVolume::mask_of`].
pub fn mask_of(volume: &LabelVolume, codes: &BTreeSet<u8>) -> BinaryMask {
    volume.mask_of(codes)
}

/// Free-function form of [`BinaryMask::boundary`].
pub fn boundary_of(mask: &BinaryMask) -> BinaryMask {
    mask.boundary()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> GridSpec {
        GridSpec::isotropic([n; 3], 1.0).unwrap()
    }

    fn solid_cube(n: usize, lo: usize, hi: usize) -> BinaryMask {
        let spec = unit(n);
        let mut m = BinaryMask::empty(spec);
        for k in lo..hi {
            for j in lo..hi {
                for i in lo..hi {
                    m.set([i, j, k], true);
                }
            }
        }
        m
    }

    // Brute-force six-neighbor scan used as the boundary oracle.
    fn boundary_oracle(m: &BinaryMask) -> Vec<bool> {
        let spec = *m.spec();
        (0..spec.len())
            .map(|idx| {
                let [i, j, k] = spec.coords(idx).map(|c| c as i64);
                m.bits()[idx]
                    && [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]]
                        .iter()
                        .any(|d| {
                            let n = [i + d[0], j + d[1], k + d[2]];
                            !spec.contains(n) || !m.get(n.map(|c| c as usize))
                        })
            })
            .collect()
    }

    #[test]
    fn grid_rejects_degenerate_dims_and_spacing() {
        assert!(GridSpec::isotropic([0, 1, 1], 1.0).is_err());
        assert!(GridSpec::isotropic([1, 1, 1], 0.0).is_err());
        assert!(GridSpec::new([1, 1, 1], [1.0, -1.0, 1.0], [0.0; 3]).is_err());
    }

    #[test]
    fn index_and_coords_are_inverse() {
        let spec = GridSpec::isotropic([3, 4, 5], 1.0).unwrap();
        for idx in 0..spec.len() {
            assert_eq!(spec.index(spec.coords(idx)), idx);
        }
        assert_eq!(spec.index([1, 0, 0]), 1);
        assert_eq!(spec.index([0, 1, 0]), 3);
        assert_eq!(spec.index([0, 0, 1]), 12);
    }

    #[test]
    fn voxel_centers_use_half_offset() {
        let spec = GridSpec::new([4, 4, 4], [0.48; 3], [10.0, 0.0, -1.0]).unwrap();
        let c = spec.center([1, 0, 2]);
        assert!((c[0] - (10.0 + 1.5 * 0.48)).abs() < 1e-12);
        assert!((c[1] - 0.24).abs() < 1e-12);
        assert!((c[2] - (-1.0 + 2.5 * 0.48)).abs() < 1e-12);
        assert_eq!(spec.voxel_at(c), Some([1, 0, 2]));
        assert_eq!(spec.voxel_at([9.9, 0.0, 0.0]), None);
    }

    #[test]
    fn volume_rejects_unnamed_codes() {
        let spec = unit(2);
        let mut labels = vec![0u8; 8];
        labels[3] = 7;
        let err = LabelVolume::new(spec, labels, BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::UnknownLabel(7)));
    }

    #[test]
    fn volume_rejects_wrong_length() {
        let err = LabelVolume::new(unit(4), vec![0; 63], BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 64, found: 63 }));
    }

    #[test]
    fn mask_of_all_empty_volume_is_empty() {
        let v = LabelVolume::empty(unit(4), BTreeMap::from([(1, "VF".to_string())])).unwrap();
        assert_eq!(v.mask_of(&BTreeSet::from([1])).count(), 0);
    }

    #[test]
    fn mask_of_every_present_code_excludes_only_empty() {
        let spec = unit(3);
        let labels: Vec<u8> = (0..27).map(|i| (i % 4) as u8).collect();
        let palette = (1..4).map(|c| (c, format!("S{c}"))).collect();
        let v = LabelVolume::new(spec, labels, palette).unwrap();
        let m = v.mask_of(&BTreeSet::from([1, 2, 3]));
        assert_eq!(m.count(), 27 - v.histogram()[0]);
    }

    #[test]
    fn solid_cube_boundary_is_its_shell() {
        let m = solid_cube(5, 1, 4);
        let b = m.boundary();
        assert_eq!(b.count(), 26);
        assert!(!b.get([2, 2, 2]));
        assert_eq!(b.bits(), boundary_oracle(&m).as_slice());
    }

    #[test]
    fn single_voxel_is_its_own_boundary() {
        let mut m = BinaryMask::empty(unit(3));
        m.set([1, 1, 1], true);
        let b = m.boundary();
        assert_eq!(b.count(), 1);
        assert!(b.get([1, 1, 1]));
    }

    #[test]
    fn grid_edge_counts_as_outside() {
        let m = solid_cube(3, 0, 3);
        assert_eq!(m.boundary().count(), 26);
    }

    #[test]
    fn empty_mask_has_empty_boundary() {
        assert_eq!(BinaryMask::empty(unit(4)).boundary().count(), 0);
    }

    #[test]
    fn boundary_matches_oracle_on_random_masks() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let spec = GridSpec::isotropic([7, 5, 6], 1.0).unwrap();
            let p = rng.gen_range(0.1..0.9);
            let bits = (0..spec.len()).map(|_| rng.gen_bool(p)).collect();
            let m = BinaryMask::new(spec, bits).unwrap();
            let b = m.boundary();
            assert_eq!(b.bits(), boundary_oracle(&m).as_slice());
            assert!(b.is_subset_of(&m));
        }
    }
}
