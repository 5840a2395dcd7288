//! Hierarchical sparse representation of map elements.
//!
//! One element can be rendered at any vertex density; a [`DensitySchedule`]
//! fixes the density used at each refinement layer, and a
//! [`PermutationSet`] lists the vertex orderings that describe the same shape.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::geometry::{insert_by_edge_length, resample_uniform, Polyline};
use crate::{Error, Result};

/// Number of classifier outputs, including the padding class.
pub const CATEGORY_COUNT: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementCategory {
    PedCrossing,
    Divider,
    Boundary,
    /// Padding slot; never carries a shape.
    None,
}

impl ElementCategory {
    /// Classifier output order.
    pub const ALL: [ElementCategory; CATEGORY_COUNT] =
        [Self::PedCrossing, Self::Divider, Self::Boundary, Self::None];

    /// The categories that describe real map elements.
    pub const REAL: [ElementCategory; 3] = [Self::PedCrossing, Self::Divider, Self::Boundary];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::PedCrossing => "ped_crossing",
            Self::Divider => "divider",
            Self::Boundary => "boundary",
            Self::None => "none",
        }
    }

    /// Pedestrian crossings are polygons; everything else is an open line.
    pub fn is_closed(self) -> bool {
        self == Self::PedCrossing
    }
}

impl fmt::Display for ElementCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElementCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidElement(format!("unknown category `{s}`")))
    }
}

/// One vectorized map instance.
#[derive(Clone, Debug, PartialEq)]
pub struct MapElement {
    category: ElementCategory,
    shape: Polyline,
}

impl MapElement {
    pub fn new(category: ElementCategory, shape: Polyline) -> Result<Self> {
        if category == ElementCategory::None {
            return Err(Error::InvalidElement("category `none` is reserved for padding".into()));
        }
        if shape.is_closed() != category.is_closed() {
            return Err(Error::InvalidElement(format!(
                "{category} must be {}",
                if category.is_closed() { "closed" } else { "open" }
            )));
        }
        Ok(Self { category, shape })
    }

    #[inline]
    pub fn category(&self) -> ElementCategory {
        self.category
    }

    #[inline]
    pub fn shape(&self) -> &Polyline {
        &self.shape
    }

    #[inline]
    pub fn is_closed(&self) -> bool {
        self.shape.is_closed()
    }

    /// Same element with a replaced shape of the same closedness.
    pub fn with_shape(&self, shape: Polyline) -> Result<Self> {
        Self::new(self.category, shape)
    }
}

/// Per-layer vertex counts.
///
/// Non-decreasing, and every increase doubles the number of edges of an open
/// element (`d -> 2d - 1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensitySchedule(Vec<usize>);

impl DensitySchedule {
    pub fn new(densities: Vec<usize>) -> Result<Self> {
        if densities.is_empty() {
            return Err(Error::InvalidSchedule("no layers".into()));
        }
        if let Some(&d) = densities.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidSchedule(format!("density {d} is below 2")));
        }
        for w in densities.windows(2) {
            if w[1] != w[0] && w[1] != 2 * w[0] - 1 {
                return Err(Error::InvalidSchedule(format!(
                    "{} -> {} is neither constant nor the doubling step {}",
                    w[0],
                    w[1],
                    2 * w[0] - 1
                )));
            }
        }
        Ok(Self(densities))
    }

    /// Every layer at the same density.
    pub fn fixed(density: usize, layers: usize) -> Result<Self> {
        Self::new(vec![density; layers])
    }

    #[inline]
    pub fn densities(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn layers(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn density(&self, layer: usize) -> usize {
        self.0[layer]
    }

    /// Whether layer `layer` has more vertices than the one before it.
    pub fn grows_at(&self, layer: usize) -> bool {
        layer > 0 && self.0[layer] > self.0[layer - 1]
    }
}

impl Default for DensitySchedule {
    fn default() -> Self {
        Self(vec![3, 5, 9, 17, 17, 17])
    }
}

impl FromStr for DensitySchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed: core::result::Result<Vec<usize>, _> = s.split(',').map(|t| t.trim().parse::<usize>()).collect();
        let densities = parsed.map_err(|_| Error::InvalidSchedule(format!("cannot parse `{s}`")))?;
        Self::new(densities)
    }
}

/// Vertex orderings that trace the same geometric shape.
///
/// Each ordering `pi` maps a slot `j` to a vertex index `pi[j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationSet {
    orderings: Vec<Vec<usize>>,
}

impl PermutationSet {
    /// Identity and full reversal for open shapes; every cyclic shift in both
    /// directions for closed ones. Identity is always first.
    pub fn equivalent(closed: bool, d: usize) -> Self {
        let identity: Vec<usize> = (0..d).collect();
        if d < 2 {
            return Self { orderings: vec![identity] };
        }
        if !closed {
            let reversed: Vec<usize> = (0..d).rev().collect();
            return Self { orderings: vec![identity, reversed] };
        }
        let mut seen = BTreeSet::new();
        let mut orderings = Vec::with_capacity(2 * d);
        for shift in 0..d {
            let fwd: Vec<usize> = (0..d).map(|j| (shift + j) % d).collect();
            if seen.insert(fwd.clone()) {
                orderings.push(fwd);
            }
        }
        for shift in 0..d {
            let bwd: Vec<usize> = (0..d).map(|j| (shift + d - j) % d).collect();
            if seen.insert(bwd.clone()) {
                orderings.push(bwd);
            }
        }
        Self { orderings }
    }

    #[inline]
    pub fn orderings(&self) -> &[Vec<usize>] {
        &self.orderings
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.orderings.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.orderings.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[usize] {
        &self.orderings[i]
    }

    pub fn density(&self) -> usize {
        self.orderings.first().map_or(0, Vec::len)
    }
}

/// Inverse of a permutation given as `pi[j] = i`.
pub fn invert(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; order.len()];
    for (j, &i) in order.iter().enumerate() {
        inv[i] = j;
    }
    inv
}

/// Renders an element with exactly `d` vertices.
///
/// Elements with more vertices are resampled at uniform arclength; elements
/// with fewer are subdivided by edge length; equal counts pass through.
pub fn element_at_density(e: &MapElement, d: usize) -> Result<Polyline> {
    let min = if e.is_closed() { 3 } else { 2 };
    if d < min {
        return Err(Error::InvalidDensity { density: d, min });
    }
    let shape = e.shape();
    match shape.len().cmp(&d) {
        core::cmp::Ordering::Greater => resample_uniform(shape, d),
        core::cmp::Ordering::Less => insert_by_edge_length(shape, d),
        core::cmp::Ordering::Equal => Ok(shape.clone()),
    }
}

/// Per-layer supervision targets for one element.
pub fn ground_truth_pyramid(e: &MapElement, s: &DensitySchedule) -> Result<Vec<Polyline>> {
    s.densities().iter().map(|&d| element_at_density(e, d)).collect()
}

/// The equivalence set for `e` rendered at density `d`.
pub fn equivalent_permutations(e: &MapElement, d: usize) -> PermutationSet {
    PermutationSet::equivalent(e.is_closed(), d)
}
