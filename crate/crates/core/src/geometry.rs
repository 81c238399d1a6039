//! Study-area geometry: polygons, the open-space sampling grid and the
//! per-cell obstacle bins consumed by the visibility sweep.
//!
//! Coordinates are planar metres in a projected CRS. Grid rows grow
//! northwards from the boundary's bounding-box minimum corner, and cells
//! are numbered in raster order (`row * cols + col`).

use std::path::Path;

use serde_json::Value;

use crate::error::{Result, VgaError};

/// Tolerance used when binning segments into cells, in cell units.
const RASTER_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: WorldPoint,
    pub b: WorldPoint,
}

impl Segment {
    pub fn new(a: WorldPoint, b: WorldPoint) -> Self {
        Self { a, b }
    }
}

/// A polygon with an exterior ring and optional holes. Rings are stored
/// open (the closing vertex is not repeated).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub exterior: Vec<WorldPoint>,
    pub holes: Vec<Vec<WorldPoint>>,
}

impl Polygon {
    pub fn new(exterior: Vec<WorldPoint>) -> Self {
        Self {
            exterior: open_ring(exterior),
            holes: Vec::new(),
        }
    }

    pub fn with_holes(exterior: Vec<WorldPoint>, holes: Vec<Vec<WorldPoint>>) -> Self {
        Self {
            exterior: open_ring(exterior),
            holes: holes.into_iter().map(open_ring).collect(),
        }
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(vec![
            WorldPoint::new(x0, y0),
            WorldPoint::new(x1, y0),
            WorldPoint::new(x1, y1),
            WorldPoint::new(x0, y1),
        ])
    }

    pub fn rings(&self) -> impl Iterator<Item = &[WorldPoint]> {
        std::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    /// Every ring edge as a segment, skipping zero-length edges.
    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        self.rings().flat_map(|ring| {
            (0..ring.len()).filter_map(move |i| {
                let a = ring[i];
                let b = ring[(i + 1) % ring.len()];
                (a != b).then(|| Segment::new(a, b))
            })
        })
    }

    /// Exterior area minus hole areas (shoelace, absolute per ring).
    pub fn area(&self) -> f64 {
        let ring_area = |r: &[WorldPoint]| {
            let mut s = 0.0;
            for i in 0..r.len() {
                let (p, q) = (r[i], r[(i + 1) % r.len()]);
                s += p.x * q.y - q.x * p.y;
            }
            (s * 0.5).abs()
        };
        ring_area(&self.exterior) - self.holes.iter().map(|h| ring_area(h)).sum::<f64>()
    }

    /// `(min_x, min_y, max_x, max_y)` of the exterior ring.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        self.exterior.iter().fold(
            (
                f64::INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::NEG_INFINITY,
            ),
            |(x0, y0, x1, y1), p| (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y)),
        )
    }
}

fn open_ring(mut ring: Vec<WorldPoint>) -> Vec<WorldPoint> {
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring
}

/// Even-odd containment over all rings of `poly`.
///
/// Edges are treated half-open in y (an edge covers `min_y <= py < max_y`)
/// and a crossing only counts when it lies strictly right of the point, so
/// points on a left or bottom edge are inside and points on a right or top
/// edge are outside.
pub fn point_in_polygon(p: WorldPoint, poly: &Polygon) -> bool {
    let mut inside = false;
    for ring in poly.rings() {
        let n = ring.len();
        if n < 3 {
            continue;
        }
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (ring[i], ring[j]);
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
    }
    inside
}

/// Regular sampling lattice. Cell `(row, col)` has centre
/// `origin + ((col + 0.5) * spacing, (row + 0.5) * spacing)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: WorldPoint,
    pub spacing: f64,
    pub rows: u32,
    pub cols: u32,
}

impl GridSpec {
    pub fn new(origin: WorldPoint, spacing: f64, rows: u32, cols: u32) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(VgaError::InvalidParameter(format!(
                "grid spacing must be positive, got {spacing}"
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(VgaError::InvalidParameter(format!(
                "grid must have at least one row and column, got {rows}x{cols}"
            )));
        }
        Ok(Self {
            origin,
            spacing,
            rows,
            cols,
        })
    }

    /// A `1 x n` unit grid, used for graphs that carry no geometry.
    pub fn line(n: usize) -> Self {
        Self {
            origin: WorldPoint::new(0.0, 0.0),
            spacing: 1.0,
            rows: 1,
            cols: n.max(1) as u32,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.rows as usize * self.cols as usize
    }

    pub fn cell_index(&self, row: u32, col: u32) -> u32 {
        row * self.cols + col
    }

    pub fn row_col(&self, cell: u32) -> (u32, u32) {
        (cell / self.cols, cell % self.cols)
    }

    pub fn cell_center(&self, cell: u32) -> WorldPoint {
        let (row, col) = self.row_col(cell);
        WorldPoint::new(
            self.origin.x + (col as f64 + 0.5) * self.spacing,
            self.origin.y + (row as f64 + 0.5) * self.spacing,
        )
    }

    /// World point in grid units (cell `(r, c)` spans `[c, c+1] x [r, r+1]`).
    pub fn to_grid_units(&self, p: WorldPoint) -> (f64, f64) {
        (
            (p.x - self.origin.x) / self.spacing,
            (p.y - self.origin.y) / self.spacing,
        )
    }
}

/// Active (open-space) cells with a dense, raster-ordered renumbering.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    active: Vec<bool>,
    node_of_cell: Vec<u32>,
    cell_of_node: Vec<u32>,
}

impl NodeSet {
    pub fn from_active(active: Vec<bool>) -> Self {
        let mut node_of_cell = vec![u32::MAX; active.len()];
        let mut cell_of_node = Vec::new();
        for (cell, &a) in active.iter().enumerate() {
            if a {
                node_of_cell[cell] = cell_of_node.len() as u32;
                cell_of_node.push(cell as u32);
            }
        }
        Self {
            active,
            node_of_cell,
            cell_of_node,
        }
    }

    pub fn all(cells: usize) -> Self {
        Self::from_active(vec![true; cells])
    }

    pub fn len(&self) -> usize {
        self.cell_of_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_of_node.is_empty()
    }

    pub fn is_active(&self, cell: u32) -> bool {
        self.active[cell as usize]
    }

    /// Dense node id of `cell`, if the cell is active.
    pub fn node_of_cell(&self, cell: u32) -> Option<u32> {
        let n = self.node_of_cell[cell as usize];
        (n != u32::MAX).then_some(n)
    }

    pub fn cell_of_node(&self, node: u32) -> u32 {
        self.cell_of_node[node as usize]
    }

    pub fn cells(&self) -> &[u32] {
        &self.cell_of_node
    }
}

/// Obstacle segments binned per grid cell in CSR layout.
#[derive(Debug, Clone)]
pub struct ObstacleRaster {
    segments: Vec<Segment>,
    /// Segment endpoints in grid units: `[ax, ay, bx, by]`.
    grid_coords: Vec<[f64; 4]>,
    bin_offsets: Vec<u32>,
    bin_items: Vec<u32>,
}

impl ObstacleRaster {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment_grid_coords(&self, idx: u32) -> [f64; 4] {
        self.grid_coords[idx as usize]
    }

    /// Segment indices binned into `cell`.
    pub fn bin(&self, cell: u32) -> &[u32] {
        let lo = self.bin_offsets[cell as usize] as usize;
        let hi = self.bin_offsets[cell as usize + 1] as usize;
        &self.bin_items[lo..hi]
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Builds the sampling grid over `boundary` and marks a cell active iff its
/// centre lies inside the boundary and inside no building.
pub fn generate_grid(
    boundary: &Polygon,
    buildings: &[Polygon],
    spacing: f64,
) -> Result<(GridSpec, NodeSet)> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(VgaError::InvalidParameter(format!(
            "grid spacing must be positive, got {spacing}"
        )));
    }
    let area = boundary.area();
    if boundary.exterior.len() < 3 || !(area > 0.0) {
        return Err(VgaError::DegenerateBoundary { area });
    }
    let (x0, y0, x1, y1) = boundary.bbox();
    let cols = (((x1 - x0) / spacing) - 1e-9).ceil().max(1.0) as u32;
    let rows = (((y1 - y0) / spacing) - 1e-9).ceil().max(1.0) as u32;
    let grid = GridSpec::new(WorldPoint::new(x0, y0), spacing, rows, cols)?;

    let mut active: Vec<bool> = (0..grid.cell_count() as u32)
        .map(|cell| point_in_polygon(grid.cell_center(cell), boundary))
        .collect();

    for b in buildings {
        let (bx0, by0, bx1, by1) = b.bbox();
        let (gx0, gy0) = grid.to_grid_units(WorldPoint::new(bx0, by0));
        let (gx1, gy1) = grid.to_grid_units(WorldPoint::new(bx1, by1));
        let c0 = (gx0 - 0.5).floor().max(0.0) as u32;
        let r0 = (gy0 - 0.5).floor().max(0.0) as u32;
        let c1 = ((gx1 - 0.5).ceil().max(0.0) as u32).min(cols - 1);
        let r1 = ((gy1 - 0.5).ceil().max(0.0) as u32).min(rows - 1);
        for row in r0..=r1 {
            for col in c0..=c1 {
                let cell = grid.cell_index(row, col);
                if active[cell as usize] && point_in_polygon(grid.cell_center(cell), b) {
                    active[cell as usize] = false;
                }
            }
        }
    }

    let nodes = NodeSet::from_active(active);
    if nodes.is_empty() {
        return Err(VgaError::ZeroActiveCells);
    }
    Ok((grid, nodes))
}

/// Decomposes every building edge into a segment and bins it into every
/// cell it touches (conservative supercover, widened by a small epsilon so
/// segments lying on cell borders land in both neighbours).
pub fn rasterize_obstacles(buildings: &[Polygon], grid: &GridSpec) -> ObstacleRaster {
    let segments: Vec<Segment> = buildings.iter().flat_map(Polygon::edges).collect();
    rasterize_segments(segments, grid)
}

pub fn rasterize_segments(segments: Vec<Segment>, grid: &GridSpec) -> ObstacleRaster {
    let grid_coords: Vec<[f64; 4]> = segments
        .iter()
        .map(|s| {
            let (ax, ay) = grid.to_grid_units(s.a);
            let (bx, by) = grid.to_grid_units(s.b);
            [ax, ay, bx, by]
        })
        .collect();

    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for (idx, &coords) in grid_coords.iter().enumerate() {
        supercover(coords, grid.rows, grid.cols, |cell| {
            pairs.push((cell, idx as u32))
        });
    }
    pairs.sort_unstable();
    pairs.dedup();

    let mut bin_offsets = vec![0u32; grid.cell_count() + 1];
    for &(cell, _) in &pairs {
        bin_offsets[cell as usize + 1] += 1;
    }
    for i in 0..grid.cell_count() {
        bin_offsets[i + 1] += bin_offsets[i];
    }
    let bin_items = pairs.into_iter().map(|(_, s)| s).collect();
    ObstacleRaster {
        segments,
        grid_coords,
        bin_offsets,
        bin_items,
    }
}

/// Calls `emit` for every in-grid cell whose (epsilon-widened) square the
/// segment touches. Walks rows, computing the x-extent of the segment inside
/// each row band.
fn supercover(c: [f64; 4], rows: u32, cols: u32, mut emit: impl FnMut(u32)) {
    let [ax, ay, bx, by] = c;
    let (ylo, yhi) = (ay.min(by), ay.max(by));
    let r_first = (ylo - RASTER_EPS).floor().max(0.0);
    let r_last = (yhi + RASTER_EPS).floor().min(rows as f64 - 1.0);
    if r_first > r_last || !r_first.is_finite() {
        return;
    }
    for row in r_first as u32..=r_last as u32 {
        let band_lo = row as f64 - RASTER_EPS;
        let band_hi = row as f64 + 1.0 + RASTER_EPS;
        let (xa, xb) = if by == ay {
            (ax, bx)
        } else {
            let ta = ((band_lo - ay) / (by - ay)).clamp(0.0, 1.0);
            let tb = ((band_hi - ay) / (by - ay)).clamp(0.0, 1.0);
            (ax + ta * (bx - ax), ax + tb * (bx - ax))
        };
        let (xlo, xhi) = (xa.min(xb), xa.max(xb));
        let c_first = (xlo - RASTER_EPS).floor().max(0.0);
        let c_last = (xhi + RASTER_EPS).floor().min(cols as f64 - 1.0);
        if c_first > c_last {
            continue;
        }
        for col in c_first as u32..=c_last as u32 {
            emit(row * cols + col);
        }
    }
}

// ---------------------------------------------------------------------------
// GeoJSON input
// ---------------------------------------------------------------------------

/// Reads every Polygon / MultiPolygon in a GeoJSON document (a
/// FeatureCollection, a Feature or a bare geometry).
pub fn read_polygons(path: &Path) -> Result<Vec<Polygon>> {
    let text = std::fs::read_to_string(path).map_err(|e| VgaError::io(path, e))?;
    parse_polygons(&text).map_err(|msg| VgaError::GeoJson {
        path: path.to_path_buf(),
        msg,
    })
}

/// Reads a boundary file, which must contain exactly one polygon.
pub fn read_boundary(path: &Path) -> Result<Polygon> {
    let mut polys = read_polygons(path)?;
    if polys.len() != 1 {
        return Err(VgaError::GeoJson {
            path: path.to_path_buf(),
            msg: format!(
                "boundary must contain exactly one polygon, found {}",
                polys.len()
            ),
        });
    }
    Ok(polys.remove(0))
}

pub fn parse_polygons(text: &str) -> std::result::Result<Vec<Polygon>, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    collect_polygons(&value, &mut out)?;
    Ok(out)
}

fn collect_polygons(v: &Value, out: &mut Vec<Polygon>) -> std::result::Result<(), String> {
    let ty = v
        .get("type")
        .and_then(Value::as_str)
        .ok_or("object without a \"type\" member")?;
    match ty {
        "FeatureCollection" => {
            let feats = v
                .get("features")
                .and_then(Value::as_array)
                .ok_or("FeatureCollection without a \"features\" array")?;
            for f in feats {
                collect_polygons(f, out)?;
            }
        }
        "Feature" => match v.get("geometry") {
            Some(Value::Null) | None => {}
            Some(g) => collect_polygons(g, out)?,
        },
        "GeometryCollection" => {
            let geoms = v
                .get("geometries")
                .and_then(Value::as_array)
                .ok_or("GeometryCollection without \"geometries\"")?;
            for g in geoms {
                collect_polygons(g, out)?;
            }
        }
        "Polygon" => out.push(parse_polygon_coords(coords_of(v)?)?),
        "MultiPolygon" => {
            let polys = coords_of(v)?
                .as_array()
                .ok_or("MultiPolygon coordinates must be an array")?;
            for p in polys {
                out.push(parse_polygon_coords(p)?);
            }
        }
        other => return Err(format!("unsupported geometry type {other:?}")),
    }
    Ok(())
}

fn coords_of(v: &Value) -> std::result::Result<&Value, String> {
    v.get("coordinates")
        .ok_or_else(|| "geometry without \"coordinates\"".to_string())
}

fn parse_polygon_coords(v: &Value) -> std::result::Result<Polygon, String> {
    let rings = v
        .as_array()
        .ok_or("Polygon coordinates must be an array of rings")?;
    let mut parsed = Vec::with_capacity(rings.len());
    for ring in rings {
        let pts = ring
            .as_array()
            .ok_or("ring must be an array of positions")?;
        let mut r = Vec::with_capacity(pts.len());
        for p in pts {
            let xy = p.as_array().ok_or("position must be an array")?;
            let x = xy.first().and_then(Value::as_f64);
            let y = xy.get(1).and_then(Value::as_f64);
            match (x, y) {
                (Some(x), Some(y)) if x.is_finite() && y.is_finite() => {
                    r.push(WorldPoint::new(x, y))
                }
                _ => return Err(format!("invalid position {p}")),
            }
        }
        parsed.push(r);
    }
    let mut iter = parsed.into_iter();
    let exterior = iter.next().ok_or("Polygon without rings")?;
    let poly = Polygon::with_holes(exterior, iter.collect());
    if poly.exterior.len() < 3 {
        return Err("polygon ring with fewer than 3 distinct vertices".into());
    }
    Ok(poly)
}

/// Serializes polygons as a GeoJSON FeatureCollection (used by the
/// synthetic-town generator and the examples).
pub fn polygons_to_geojson(polys: &[Polygon]) -> String {
    let ring = |r: &[WorldPoint]| {
        let mut pts: Vec<Value> = r.iter().map(|p| serde_json::json!([p.x, p.y])).collect();
        if let Some(first) = r.first() {
            pts.push(serde_json::json!([first.x, first.y]));
        }
        Value::Array(pts)
    };
    let features: Vec<Value> = polys
        .iter()
        .map(|p| {
            let rings: Vec<Value> = p.rings().map(ring).collect();
            serde_json::json!({
                "type": "Feature",
                "properties": {},
                "geometry": { "type": "Polygon", "coordinates": rings },
            })
        })
        .collect();
    serde_json::json!({ "type": "FeatureCollection", "features": features }).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn square(side: f64) -> Polygon {
        Polygon::rect(0.0, 0.0, side, side)
    }

    #[test]
    fn open_square_grid() {
        let (grid, nodes) = generate_grid(&square(10.0), &[], 2.0).unwrap();
        assert_eq!((grid.rows, grid.cols), (5, 5));
        assert_eq!(nodes.len(), 25);
        assert_eq!(grid.cell_center(0), WorldPoint::new(1.0, 1.0));
        assert_eq!(grid.cell_center(7), WorldPoint::new(5.0, 3.0));
    }

    #[test]
    fn fully_built_square_has_no_active_cells() {
        let err = generate_grid(&square(10.0), &[square(10.0)], 2.0).unwrap_err();
        assert!(matches!(err, VgaError::ZeroActiveCells));
    }

    #[test]
    fn degenerate_boundary_rejected() {
        let flat = Polygon::new(vec![
            WorldPoint::new(0.0, 0.0),
            WorldPoint::new(5.0, 0.0),
            WorldPoint::new(10.0, 0.0),
        ]);
        assert!(matches!(
            generate_grid(&flat, &[], 1.0),
            Err(VgaError::DegenerateBoundary { .. })
        ));
        assert!(generate_grid(&square(4.0), &[], 0.0).is_err());
    }

    #[test]
    fn building_removes_covered_centres() {
        let (_, nodes) =
            generate_grid(&square(10.0), &[Polygon::rect(2.0, 2.0, 6.0, 6.0)], 2.0).unwrap();
        // centres at 3 and 5 in both axes fall inside
        assert_eq!(nodes.len(), 21);
        // dense ids preserve raster order
        assert!(nodes.cells().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn active_set_ignores_building_order() {
        let bs = vec![
            Polygon::rect(1.0, 1.0, 4.0, 3.0),
            Polygon::rect(3.0, 2.0, 7.0, 8.0),
            Polygon::rect(8.2, 0.5, 9.9, 9.1),
        ];
        let mut rev = bs.clone();
        rev.reverse();
        let a = generate_grid(&square(10.0), &bs, 1.0).unwrap();
        let b = generate_grid(&square(10.0), &rev, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn point_in_unit_square() {
        let sq = square(1.0);
        assert!(point_in_polygon(WorldPoint::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(WorldPoint::new(2.0, 2.0), &sq));
        // half-open rule
        assert!(point_in_polygon(WorldPoint::new(0.0, 0.5), &sq));
        assert!(!point_in_polygon(WorldPoint::new(1.0, 0.5), &sq));
        assert!(point_in_polygon(WorldPoint::new(0.5, 0.0), &sq));
        assert!(!point_in_polygon(WorldPoint::new(0.5, 1.0), &sq));
    }

    #[test]
    fn hole_is_outside() {
        let p = Polygon::with_holes(
            square(10.0).exterior,
            vec![Polygon::rect(4.0, 4.0, 6.0, 6.0).exterior],
        );
        assert!(!point_in_polygon(WorldPoint::new(5.0, 5.0), &p));
        assert!(point_in_polygon(WorldPoint::new(2.0, 5.0), &p));
        assert!((p.area() - 96.0).abs() < 1e-12);
    }

    #[test]
    fn convex_polygon_matches_half_planes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        // regular octagon, counter-clockwise
        let pts: Vec<WorldPoint> = (0..8)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / 8.0 + 0.1;
                WorldPoint::new(5.0 + 4.0 * a.cos(), 5.0 + 4.0 * a.sin())
            })
            .collect();
        let poly = Polygon::new(pts.clone());
        for _ in 0..1000 {
            let p = WorldPoint::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            let half_planes = (0..8).all(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % 8]);
                (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) > 0.0
            });
            assert_eq!(point_in_polygon(p, &poly), half_planes, "{p:?}");
        }
    }

    #[test]
    fn no_buildings_means_empty_bins() {
        let grid = GridSpec::new(WorldPoint::new(0.0, 0.0), 1.0, 4, 4).unwrap();
        let r = rasterize_obstacles(&[], &grid);
        assert!((0..16).all(|c| r.bin(c).is_empty()));
    }

    #[test]
    fn horizontal_segment_spans_three_bins() {
        let grid = GridSpec::new(WorldPoint::new(0.0, 0.0), 1.0, 4, 6).unwrap();
        let seg = Segment::new(WorldPoint::new(1.2, 2.5), WorldPoint::new(3.7, 2.5));
        let r = rasterize_segments(vec![seg], &grid);
        let hit: Vec<u32> = (0..24).filter(|&c| !r.bin(c).is_empty()).collect();
        assert_eq!(hit, vec![13, 14, 15]);
    }

    /// Closed segment vs closed axis-aligned rectangle, by Liang-Barsky clipping.
    fn segment_hits_rect(c: [f64; 4], x0: f64, y0: f64, x1: f64, y1: f64) -> bool {
        let [ax, ay, bx, by] = c;
        let (dx, dy) = (bx - ax, by - ay);
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for (p, q) in [(-dx, ax - x0), (dx, x1 - ax), (-dy, ay - y0), (dy, y1 - ay)] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        t0 <= t1
    }

    #[test]
    fn supercover_matches_rectangle_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let grid = GridSpec::new(WorldPoint::new(0.0, 0.0), 1.0, 20, 20).unwrap();
        let segs: Vec<Segment> = (0..100)
            .map(|_| {
                let mut p =
                    || WorldPoint::new(rng.gen_range(-2.0..22.0), rng.gen_range(-2.0..22.0));
                Segment::new(p(), p())
            })
            .collect();
        let r = rasterize_segments(segs, &grid);
        for cell in 0..grid.cell_count() as u32 {
            let (row, col) = grid.row_col(cell);
            let (x0, y0) = (col as f64, row as f64);
            for s in 0..100u32 {
                let c = r.segment_grid_coords(s);
                let exact = segment_hits_rect(c, x0, y0, x0 + 1.0, y0 + 1.0);
                let wide =
                    segment_hits_rect(c, x0 - 1e-6, y0 - 1e-6, x0 + 1.0 + 1e-6, y0 + 1.0 + 1e-6);
                let binned = r.bin(cell).contains(&s);
                if exact {
                    assert!(binned, "segment {s} missing from cell {cell}");
                }
                if binned {
                    assert!(wide, "segment {s} wrongly in cell {cell}");
                }
            }
        }
    }

    #[test]
    fn geojson_round_trip_and_errors() {
        let polys = vec![
            Polygon::rect(0.0, 0.0, 2.0, 1.0),
            Polygon::rect(5.0, 5.0, 6.0, 7.0),
        ];
        let text = polygons_to_geojson(&polys);
        assert_eq!(parse_polygons(&text).unwrap(), polys);

        let multi = r#"{"type":"MultiPolygon","coordinates":[[[[0,0],[1,0],[1,1],[0,0]]],[[[2,2],[3,2],[3,3],[2,2]]]]}"#;
        assert_eq!(parse_polygons(multi).unwrap().len(), 2);

        assert!(parse_polygons("{not json").is_err());
        assert!(parse_polygons(r#"{"type":"Point","coordinates":[0,0]}"#).is_err());
        assert!(parse_polygons(r#"{"type":"Polygon","coordinates":[[[0,0],[1,"a"]]]}"#).is_err());
    }
}
