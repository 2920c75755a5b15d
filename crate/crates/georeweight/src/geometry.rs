//! Voronoi partition of a sample set restricted to the unit interval or
//! unit square (or to per-stratum sub-boxes), with per-cell volumes and
//! boundary-order classification.
//!
//! 1D cells come from the sorted midpoint construction. 2D cells are the
//! domain rectangle successively clipped by perpendicular-bisector
//! half-planes toward the site; nearby sites are tried first and a
//! security radius skips sites that cannot cut the current polygon, so
//! the result is identical to clipping against every other site.

use std::collections::HashMap;

use thiserror::Error;

pub const MAX_DIM: usize = 2;

/// Absolute tolerance for detecting a polygon edge lying on a domain side.
pub const EPS_BOUNDARY: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("at least one point is required")]
    EmptyInput,
    #[error("point {index} lies outside the domain")]
    PointOutsideDomain { index: usize },
    #[error("unsupported dimension {0}, expected 1 or 2")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("a polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("sample set carries no stratification descriptor")]
    MissingStratification,
    #[error("stratum {0} contains no samples")]
    EmptyStratum(usize),
    #[error("point {index} lies outside its assigned stratum {stratum}")]
    SampleOutsideStratum { index: usize, stratum: usize },
}

/// A point in the open unit hypercube, D ∈ {1, 2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl UnitPoint {
    /// Panics if a coordinate leaves (0,1); sample generators uphold this
    /// by construction.
    pub fn new(coords: [f64; MAX_DIM], dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM, "dimension {dim} out of range");
        for &c in coords.iter().take(dim) {
            assert!(c > 0.0 && c < 1.0, "coordinate {c} outside (0,1)");
        }
        Self { coords, dim }
    }

    pub fn new_1d(x: f64) -> Self {
        Self::new([x, 0.0], 1)
    }

    pub fn new_2d(x: f64, y: f64) -> Self {
        Self::new([x, y], 2)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }
}

/// Axis-aligned sub-box of the unit hypercube.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub low: [f64; MAX_DIM],
    pub high: [f64; MAX_DIM],
    pub dim: usize,
}

impl DomainBox {
    pub fn new(low: [f64; MAX_DIM], high: [f64; MAX_DIM], dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM);
        for axis in 0..dim {
            assert!(
                low[axis] < high[axis] && low[axis] >= 0.0 && high[axis] <= 1.0,
                "invalid box on axis {axis}: [{}, {}]",
                low[axis],
                high[axis]
            );
        }
        Self { low, high, dim }
    }

    pub fn unit(dim: usize) -> Self {
        Self::new([0.0, 0.0], [1.0, 1.0], dim)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.high[a] - self.low[a]).product()
    }

    pub fn contains_open(&self, p: &UnitPoint) -> bool {
        p.dim() == self.dim
            && (0..self.dim).all(|a| p.coords()[a] > self.low[a] && p.coords()[a] < self.high[a])
    }
}

/// Which side of an axis a boundary facet sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Low,
    High,
}

/// One domain (or stratum) facet: a side of the box along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Facet {
    pub axis: usize,
    pub side: Side,
}

/// Set of the up-to-2D facets a cell touches, packed into a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FacetSet(u8);

impl FacetSet {
    fn bit(f: Facet) -> u8 {
        1 << (f.axis * 2 + if f.side == Side::High { 1 } else { 0 })
    }

    pub fn insert(&mut self, f: Facet) {
        self.0 |= Self::bit(f);
    }

    pub fn contains(&self, f: Facet) -> bool {
        self.0 & Self::bit(f) != 0
    }

    /// Boundary order b: number of touched facets.
    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Facet> + '_ {
        let mask = self.0;
        (0..MAX_DIM).flat_map(move |axis| {
            [Side::Low, Side::High].into_iter().filter_map(move |side| {
                let f = Facet { axis, side };
                if mask & Self::bit(f) != 0 {
                    Some(f)
                } else {
                    None
                }
            })
        })
    }
}

/// One sample's Voronoi cell clipped to its domain box.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCell {
    pub site_index: usize,
    pub volume: f64,
    pub boundary_facets: FacetSet,
    /// 1D only: the cell interval (shared among coincident duplicates).
    pub span: Option<(f64, f64)>,
    /// 2D only: convex polygon, counter-clockwise, starting at the
    /// lexicographically smallest vertex.
    pub vertices: Vec<[f64; 2]>,
}

impl VoronoiCell {
    pub fn boundary_order(&self) -> usize {
        self.boundary_facets.len()
    }
}

/// Cells index-aligned with the originating sample set; tiles the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub domain: DomainBox,
    pub cells: Vec<VoronoiCell>,
}

impl Partition {
    pub fn total_volume(&self) -> f64 {
        self.cells.iter().map(|c| c.volume).sum()
    }
}

/// Absolute shoelace area of a simple polygon.
pub fn polygon_area(vertices: &[[f64; 2]]) -> Result<f64, GeometryError> {
    if vertices.len() < 3 {
        return Err(GeometryError::TooFewVertices(vertices.len()));
    }
    Ok(signed_area(vertices).abs())
}

fn signed_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    let mut twice = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    twice / 2.0
}

fn validate_points(
    points: &[UnitPoint],
    domain: &DomainBox,
    dim: usize,
) -> Result<(), GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    if domain.dim != dim {
        return Err(GeometryError::DimensionMismatch {
            expected: dim,
            got: domain.dim,
        });
    }
    for (index, p) in points.iter().enumerate() {
        if p.dim() != dim {
            return Err(GeometryError::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        if !domain.contains_open(p) {
            return Err(GeometryError::PointOutsideDomain { index });
        }
    }
    Ok(())
}

/// Midpoint partition of sorted 1D samples. Coincident samples share one
/// interval and split its length equally.
pub fn partition_unit_interval(
    points: &[UnitPoint],
    domain: &DomainBox,
) -> Result<Partition, GeometryError> {
    validate_points(points, domain, 1)?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].coords()[0].total_cmp(&points[b].coords()[0]));

    // runs of exactly equal positions
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for &idx in &order {
        let x = points[idx].coords()[0];
        match groups.last_mut() {
            Some((gx, members)) if *gx == x => members.push(idx),
            _ => groups.push((x, vec![idx])),
        }
    }

    let k = groups.len();
    let mut cells: Vec<Option<VoronoiCell>> = vec![None; points.len()];
    for (g, (x, members)) in groups.iter().enumerate() {
        let lo = if g == 0 {
            domain.low[0]
        } else {
            (groups[g - 1].0 + x) / 2.0
        };
        let hi = if g == k - 1 {
            domain.high[0]
        } else {
            (x + groups[g + 1].0) / 2.0
        };
        let mut facets = FacetSet::default();
        if g == 0 {
            facets.insert(Facet { axis: 0, side: Side::Low });
        }
        if g == k - 1 {
            facets.insert(Facet { axis: 0, side: Side::High });
        }
        let share = (hi - lo) / members.len() as f64;
        for &idx in members {
            cells[idx] = Some(VoronoiCell {
                site_index: idx,
                volume: share,
                boundary_facets: facets,
                span: Some((lo, hi)),
                vertices: Vec::new(),
            });
        }
    }
    Ok(Partition {
        domain: domain.clone(),
        cells: cells.into_iter().map(Option::unwrap).collect(),
    })
}

fn clip_halfplane(poly: &[[f64; 2]], normal: [f64; 2], offset: f64, out: &mut Vec<[f64; 2]>) {
    out.clear();
    let n = poly.len();
    for i in 0..n {
        let s = poly[i];
        let e = poly[(i + 1) % n];
        let ds = normal[0] * s[0] + normal[1] * s[1] - offset;
        let de = normal[0] * e[0] + normal[1] * e[1] - offset;
        if ds <= 0.0 {
            out.push(s);
            if de > 0.0 {
                let t = ds / (ds - de);
                out.push([s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])]);
            }
        } else if de <= 0.0 {
            let t = ds / (ds - de);
            out.push([s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])]);
        }
    }
}

fn max_dist_sq(poly: &[[f64; 2]], site: [f64; 2]) -> f64 {
    poly.iter()
        .map(|v| {
            let dx = v[0] - site[0];
            let dy = v[1] - site[1];
            dx * dx + dy * dy
        })
        .fold(0.0, f64::max)
}

fn dedup_and_canonicalize(poly: &mut Vec<[f64; 2]>) {
    // drop near-coincident consecutive vertices produced by clipping
    let eps = 1e-15;
    let mut cleaned: Vec<[f64; 2]> = Vec::with_capacity(poly.len());
    for &v in poly.iter() {
        if let Some(&last) = cleaned.last() {
            if (v[0] - last[0]).abs() <= eps && (v[1] - last[1]).abs() <= eps {
                continue;
            }
        }
        cleaned.push(v);
    }
    if cleaned.len() > 1 {
        let (first, last) = (cleaned[0], *cleaned.last().unwrap());
        if (first[0] - last[0]).abs() <= eps && (first[1] - last[1]).abs() <= eps {
            cleaned.pop();
        }
    }
    if signed_area(&cleaned) < 0.0 {
        cleaned.reverse();
    }
    if let Some(start) = cleaned
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])))
        .map(|(i, _)| i)
    {
        cleaned.rotate_left(start);
    }
    *poly = cleaned;
}

fn detect_facets(poly: &[[f64; 2]], domain: &DomainBox) -> FacetSet {
    let mut facets = FacetSet::default();
    let n = poly.len();
    for axis in 0..2 {
        for (side, coord) in [(Side::Low, domain.low[axis]), (Side::High, domain.high[axis])] {
            let mut on_side = false;
            for i in 0..n {
                let a = poly[i];
                let b = poly[(i + 1) % n];
                if (a[axis] - coord).abs() <= EPS_BOUNDARY
                    && (b[axis] - coord).abs() <= EPS_BOUNDARY
                {
                    let dx = a[0] - b[0];
                    let dy = a[1] - b[1];
                    if dx * dx + dy * dy > EPS_BOUNDARY * EPS_BOUNDARY {
                        on_side = true;
                        break;
                    }
                }
            }
            if on_side {
                facets.insert(Facet { axis, side });
            }
        }
    }
    facets
}

/// Clip one site's cell out of the domain rectangle. `others` holds the
/// unique site positions; `site` is `others[skip]`.
fn clip_cell(site: [f64; 2], others: &[[f64; 2]], skip: usize, domain: &DomainBox) -> Vec<[f64; 2]> {
    let mut poly = vec![
        [domain.low[0], domain.low[1]],
        [domain.high[0], domain.low[1]],
        [domain.high[0], domain.high[1]],
        [domain.low[0], domain.high[1]],
    ];
    let mut scratch = Vec::with_capacity(8);

    let mut candidates: Vec<(f64, usize)> = others
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .map(|(j, q)| {
            let dx = q[0] - site[0];
            let dy = q[1] - site[1];
            (dx * dx + dy * dy, j)
        })
        .collect();

    // nearest sites first; a site at distance d only cuts the polygon if
    // d^2/4 is below the squared distance to the farthest polygon vertex
    let prefix = candidates.len().min(16);
    if prefix > 0 && prefix < candidates.len() {
        candidates.select_nth_unstable_by(prefix - 1, |a, b| a.0.total_cmp(&b.0));
    }
    candidates[..prefix].sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut radius_sq = max_dist_sq(&poly, site);
    let mut apply = |d_sq: f64, j: usize, poly: &mut Vec<[f64; 2]>, radius_sq: &mut f64| {
        if d_sq >= 4.0 * *radius_sq {
            return;
        }
        let q = others[j];
        let normal = [q[0] - site[0], q[1] - site[1]];
        let offset = (normal[0] * (site[0] + q[0]) + normal[1] * (site[1] + q[1])) / 2.0;
        clip_halfplane(poly, normal, offset, &mut scratch);
        std::mem::swap(poly, &mut scratch);
        *radius_sq = max_dist_sq(poly, site);
    };

    for &(d_sq, j) in &candidates[..prefix] {
        if d_sq >= 4.0 * radius_sq {
            break;
        }
        apply(d_sq, j, &mut poly, &mut radius_sq);
    }
    for &(d_sq, j) in &candidates[prefix..] {
        apply(d_sq, j, &mut poly, &mut radius_sq);
    }
    poly
}

/// O(N²) half-plane clipping construction on a rectangle domain.
/// Coincident samples share one cell and split its area equally.
pub fn partition_unit_square(
    points: &[UnitPoint],
    domain: &DomainBox,
) -> Result<Partition, GeometryError> {
    validate_points(points, domain, 2)?;

    // group exact duplicates
    let mut unique: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    let mut members: Vec<Vec<usize>> = Vec::with_capacity(points.len());
    let mut index_of: HashMap<(u64, u64), usize> = HashMap::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let c = p.coords();
        let key = (c[0].to_bits(), c[1].to_bits());
        match index_of.get(&key) {
            Some(&u) => members[u].push(i),
            None => {
                index_of.insert(key, unique.len());
                unique.push([c[0], c[1]]);
                members.push(vec![i]);
            }
        }
    }

    let mut cells: Vec<Option<VoronoiCell>> = vec![None; points.len()];
    for (u, &site) in unique.iter().enumerate() {
        let mut poly = clip_cell(site, &unique, u, domain);
        dedup_and_canonicalize(&mut poly);
        let area = if poly.len() >= 3 { signed_area(&poly) } else { 0.0 };
        let facets = detect_facets(&poly, domain);
        let share = area / members[u].len() as f64;
        for &idx in &members[u] {
            cells[idx] = Some(VoronoiCell {
                site_index: idx,
                volume: share,
                boundary_facets: facets,
                span: None,
                vertices: poly.clone(),
            });
        }
    }
    Ok(Partition {
        domain: domain.clone(),
        cells: cells.into_iter().map(Option::unwrap).collect(),
    })
}

/// Dimension-dispatching construction over one domain box.
pub fn partition_samples(
    points: &[UnitPoint],
    domain: &DomainBox,
) -> Result<Partition, GeometryError> {
    match domain.dim {
        1 => partition_unit_interval(points, domain),
        2 => partition_unit_square(points, domain),
        d => Err(GeometryError::UnsupportedDimension(d)),
    }
}

/// Independent partitions per stratum, concatenated in original sample
/// index order. Boundary facets are counted against each stratum's box.
pub fn partition_stratified(
    set: &crate::sampling::SampleSet,
) -> Result<Partition, GeometryError> {
    let strat = set
        .stratification
        .as_ref()
        .ok_or(GeometryError::MissingStratification)?;
    let n_strata = strat.boxes.len();
    let mut by_stratum: Vec<Vec<usize>> = vec![Vec::new(); n_strata];
    for (i, &s) in strat.stratum_of.iter().enumerate() {
        by_stratum[s].push(i);
        if !strat.boxes[s].contains_open(&set.points[i]) {
            return Err(GeometryError::SampleOutsideStratum { index: i, stratum: s });
        }
    }
    let mut cells: Vec<Option<VoronoiCell>> = vec![None; set.points.len()];
    for (s, indices) in by_stratum.iter().enumerate() {
        if indices.is_empty() {
            return Err(GeometryError::EmptyStratum(s));
        }
        let local: Vec<UnitPoint> = indices.iter().map(|&i| set.points[i]).collect();
        let sub = partition_samples(&local, &strat.boxes[s])?;
        for (local_idx, cell) in sub.cells.into_iter().enumerate() {
            let orig = indices[local_idx];
            cells[orig] = Some(VoronoiCell { site_index: orig, ..cell });
        }
    }
    Ok(Partition {
        domain: DomainBox::unit(set.dimension),
        cells: cells.into_iter().map(Option::unwrap).collect(),
    })
}

/// Debug dump: one row per cell, `site_index,volume,boundary_order,vertex_list`
/// with vertices as `x:y` pairs separated by `;`, 17 significant digits.
pub fn partition_to_csv(partition: &Partition) -> String {
    let mut out = String::from("site_index,volume,boundary_order,vertex_list\n");
    for cell in &partition.cells {
        let verts: Vec<String> = cell
            .vertices
            .iter()
            .map(|v| {
                format!(
                    "{}:{}",
                    crate::experiments::fmt_f64(v[0]),
                    crate::experiments::fmt_f64(v[1])
                )
            })
            .collect();
        out.push_str(&format!(
            "{},{},{},{}\n",
            cell.site_index,
            crate::experiments::fmt_f64(cell.volume),
            cell.boundary_order(),
            verts.join(";")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_stratified, sample_uniform_iid, Seed};
    use proptest::prelude::*;

    fn pts_1d(xs: &[f64]) -> Vec<UnitPoint> {
        xs.iter().map(|&x| UnitPoint::new_1d(x)).collect()
    }

    #[test]
    fn interval_midpoints() {
        let p = partition_unit_interval(&pts_1d(&[0.2, 0.5, 0.9]), &DomainBox::unit(1)).unwrap();
        let vols: Vec<f64> = p.cells.iter().map(|c| c.volume).collect();
        assert!((vols[0] - 0.35).abs() < 1e-15);
        assert!((vols[1] - 0.35).abs() < 1e-15);
        assert!((vols[2] - 0.30).abs() < 1e-15);
        let orders: Vec<usize> = p.cells.iter().map(|c| c.boundary_order()).collect();
        assert_eq!(orders, vec![1, 0, 1]);
    }

    #[test]
    fn interval_single_point() {
        let p = partition_unit_interval(&pts_1d(&[0.4]), &DomainBox::unit(1)).unwrap();
        assert_eq!(p.cells.len(), 1);
        assert_eq!(p.cells[0].volume, 1.0);
        assert_eq!(p.cells[0].boundary_order(), 2);
    }

    #[test]
    fn interval_point_outside_stratum_domain() {
        let domain = DomainBox::new([0.0, 0.0], [0.5, 1.0], 1);
        let err = partition_unit_interval(&pts_1d(&[0.25, 0.75]), &domain).unwrap_err();
        assert_eq!(err, GeometryError::PointOutsideDomain { index: 1 });
    }

    #[test]
    fn interval_empty_input() {
        assert_eq!(
            partition_unit_interval(&[], &DomainBox::unit(1)).unwrap_err(),
            GeometryError::EmptyInput
        );
    }

    #[test]
    fn interval_duplicates_split_volume() {
        let p = partition_unit_interval(&pts_1d(&[0.5, 0.5, 0.9]), &DomainBox::unit(1)).unwrap();
        assert!((p.cells[0].volume - 0.35).abs() < 1e-15);
        assert!((p.cells[1].volume - 0.35).abs() < 1e-15);
        assert_eq!(p.cells[0].boundary_facets, p.cells[1].boundary_facets);
        assert!((p.total_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_quadrants() {
        let pts = vec![
            UnitPoint::new_2d(0.25, 0.25),
            UnitPoint::new_2d(0.75, 0.25),
            UnitPoint::new_2d(0.25, 0.75),
            UnitPoint::new_2d(0.75, 0.75),
        ];
        let p = partition_unit_square(&pts, &DomainBox::unit(2)).unwrap();
        for c in &p.cells {
            assert!((c.volume - 0.25).abs() < 1e-12, "volume {}", c.volume);
            assert_eq!(c.boundary_order(), 2);
        }
    }

    #[test]
    fn square_single_point() {
        let p =
            partition_unit_square(&[UnitPoint::new_2d(0.3, 0.6)], &DomainBox::unit(2)).unwrap();
        assert_eq!(p.cells[0].volume, 1.0);
        assert_eq!(p.cells[0].boundary_order(), 4);
        assert_eq!(p.cells[0].vertices.len(), 4);
    }

    #[test]
    fn square_two_halves() {
        let pts = vec![UnitPoint::new_2d(0.25, 0.5), UnitPoint::new_2d(0.75, 0.5)];
        let p = partition_unit_square(&pts, &DomainBox::unit(2)).unwrap();
        assert!((p.cells[0].volume - 0.5).abs() < 1e-12);
        assert!((p.cells[1].volume - 0.5).abs() < 1e-12);
        assert_eq!(p.cells[0].boundary_order(), 3);
        assert_eq!(p.cells[1].boundary_order(), 3);
        assert!(!p.cells[0]
            .boundary_facets
            .contains(Facet { axis: 0, side: Side::High }));
        assert!(!p.cells[1]
            .boundary_facets
            .contains(Facet { axis: 0, side: Side::Low }));
    }

    #[test]
    fn square_duplicates_split_volume() {
        let pts = vec![
            UnitPoint::new_2d(0.25, 0.5),
            UnitPoint::new_2d(0.25, 0.5),
            UnitPoint::new_2d(0.75, 0.5),
        ];
        let p = partition_unit_square(&pts, &DomainBox::unit(2)).unwrap();
        assert!((p.cells[0].volume - 0.25).abs() < 1e-12);
        assert!((p.cells[1].volume - 0.25).abs() < 1e-12);
        assert!((p.total_volume() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stratified_1d_example() {
        let set = crate::sampling::SampleSet {
            dimension: 1,
            points: pts_1d(&[0.1, 0.3, 0.6, 0.9]),
            stratification: Some(crate::sampling::Stratification {
                strata_per_axis: 2,
                stratum_of: vec![0, 0, 1, 1],
                boxes: vec![
                    DomainBox::new([0.0, 0.0], [0.5, 1.0], 1),
                    DomainBox::new([0.5, 0.0], [1.0, 1.0], 1),
                ],
            }),
        };
        let p = partition_stratified(&set).unwrap();
        let vols: Vec<f64> = p.cells.iter().map(|c| c.volume).collect();
        for (got, want) in vols.iter().zip([0.2, 0.3, 0.25, 0.25]) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
        let orders: Vec<usize> = p.cells.iter().map(|c| c.boundary_order()).collect();
        assert_eq!(orders, vec![1, 1, 1, 1]);
    }

    #[test]
    fn stratified_identity_single_stratum() {
        let set = sample_stratified(8, 1, 1, Seed(4)).unwrap();
        let strat = partition_stratified(&set).unwrap();
        let plain = partition_unit_interval(&set.points, &DomainBox::unit(1)).unwrap();
        for (a, b) in strat.cells.iter().zip(&plain.cells) {
            assert_eq!(a.volume, b.volume);
            assert_eq!(a.boundary_facets, b.boundary_facets);
        }
    }

    #[test]
    fn stratified_2d_one_per_stratum() {
        let mut set = sample_stratified(4, 2, 2, Seed(6)).unwrap();
        // centre each stratum's single point
        let strat = set.stratification.clone().unwrap();
        for (i, b) in strat.boxes.iter().enumerate() {
            set.points[i] = UnitPoint::new_2d(
                (b.low[0] + b.high[0]) / 2.0,
                (b.low[1] + b.high[1]) / 2.0,
            );
        }
        let p = partition_stratified(&set).unwrap();
        for c in &p.cells {
            assert!((c.volume - 0.25).abs() < 1e-12);
            assert_eq!(c.boundary_order(), 4);
        }
    }

    #[test]
    fn stratified_rejects_misassigned_sample() {
        let mut set = sample_stratified(4, 2, 1, Seed(6)).unwrap();
        set.stratification.as_mut().unwrap().stratum_of.swap(0, 3);
        assert!(matches!(
            partition_stratified(&set).unwrap_err(),
            GeometryError::SampleOutsideStratum { .. }
        ));
    }

    #[test]
    fn shoelace_examples() {
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_eq!(polygon_area(&square).unwrap(), 1.0);
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert_eq!(polygon_area(&tri).unwrap(), 0.5);
        let degen = [[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]];
        assert_eq!(polygon_area(&degen).unwrap(), 0.0);
        assert_eq!(
            polygon_area(&[[0.0, 0.0], [1.0, 1.0]]).unwrap_err(),
            GeometryError::TooFewVertices(2)
        );
    }

    #[test]
    fn shoelace_matches_cell_volume() {
        let set = sample_uniform_iid(64, 2, Seed(99)).unwrap();
        let p = partition_unit_square(&set.points, &DomainBox::unit(2)).unwrap();
        for c in &p.cells {
            let area = polygon_area(&c.vertices).unwrap();
            assert!(
                (area - c.volume).abs() <= 1e-12 * area.max(1e-300),
                "shoelace {area} vs volume {}",
                c.volume
            );
        }
    }

    #[test]
    fn tiling_across_sizes() {
        for n in [9usize, 64, 256, 1024] {
            let set1 = sample_uniform_iid(n, 1, Seed(n as u64)).unwrap();
            let p1 = partition_unit_interval(&set1.points, &DomainBox::unit(1)).unwrap();
            assert!((p1.total_volume() - 1.0).abs() < 1e-12);
            let set2 = sample_uniform_iid(n, 2, Seed(n as u64 + 1)).unwrap();
            let p2 = partition_unit_square(&set2.points, &DomainBox::unit(2)).unwrap();
            assert!((p2.total_volume() - 1.0).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn convexity_and_site_nearest() {
        let set = sample_uniform_iid(128, 2, Seed(2024)).unwrap();
        let p = partition_unit_square(&set.points, &DomainBox::unit(2)).unwrap();
        let sites: Vec<&[f64]> = set.points.iter().map(|q| q.coords()).collect();
        for (i, c) in p.cells.iter().enumerate() {
            let n = c.vertices.len();
            assert!(n >= 3);
            // all cross products of consecutive edges share one sign
            for k in 0..n {
                let a = c.vertices[k];
                let b = c.vertices[(k + 1) % n];
                let d = c.vertices[(k + 2) % n];
                let cross = (b[0] - a[0]) * (d[1] - b[1]) - (b[1] - a[1]) * (d[0] - b[0]);
                assert!(cross >= -1e-9, "cell {i} non-convex: {cross}");
            }
            // vertices are equidistant-or-closer to their own site
            for v in &c.vertices {
                let d_own = (v[0] - sites[i][0]).powi(2) + (v[1] - sites[i][1]).powi(2);
                for (j, s) in sites.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let d_other = (v[0] - s[0]).powi(2) + (v[1] - s[1]).powi(2);
                    assert!(d_other >= d_own - 1e-9, "cell {i} vertex closer to site {j}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn prop_1d_tiling_and_boundary_counts(seed in 0u64..5000, n in 2usize..200) {
            let set = sample_uniform_iid(n, 1, Seed(seed)).unwrap();
            let p = partition_unit_interval(&set.points, &DomainBox::unit(1)).unwrap();
            prop_assert!((p.total_volume() - 1.0).abs() < 1e-12);
            let b1 = p.cells.iter().filter(|c| c.boundary_order() == 1).count();
            let b0 = p.cells.iter().filter(|c| c.boundary_order() == 0).count();
            prop_assert_eq!(b1, 2);
            prop_assert_eq!(b0, n - 2);
        }

        #[test]
        fn prop_2d_tiling(seed in 0u64..500, n in 1usize..128) {
            let set = sample_uniform_iid(n, 2, Seed(seed)).unwrap();
            let p = partition_unit_square(&set.points, &DomainBox::unit(2)).unwrap();
            prop_assert!((p.total_volume() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn prop_permutation_equivariance(seed in 0u64..500, n in 2usize..64) {
            let set = sample_uniform_iid(n, 2, Seed(seed)).unwrap();
            let p = partition_unit_square(&set.points, &DomainBox::unit(2)).unwrap();
            let mut reversed = set.points.clone();
            reversed.reverse();
            let q = partition_unit_square(&reversed, &DomainBox::unit(2)).unwrap();
            for i in 0..n {
                let a = &p.cells[i];
                let b = &q.cells[n - 1 - i];
                prop_assert!((a.volume - b.volume).abs() < 1e-12);
                prop_assert_eq!(a.boundary_facets, b.boundary_facets);
            }
        }
    }
}
