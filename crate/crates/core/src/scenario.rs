//! Geometric world model: buildings, base station, candidate installation
//! sites and test points, plus exact line-of-sight testing against extruded
//! building footprints.

use std::collections::HashSet;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance (meters) used for on-edge and on-boundary decisions.
pub const GEOM_EPS: f64 = 1e-6;

pub const DEFAULT_BUILDING_HEIGHT: f64 = 6.0;
pub const DEFAULT_WALL_MOUNT_HEIGHT: f64 = 5.0;
pub const DEFAULT_ROOF_MOUNT_HEIGHT: f64 = 6.5;
pub const DEFAULT_BS_HEIGHT: f64 = 10.0;
pub const DEFAULT_UE_HEIGHT: f64 = 1.5;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario document does not match the schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("building {index}: {reason}")]
    Building { index: usize, reason: String },
    #[error("test point {id}: {reason}")]
    TestPoint { id: String, reason: String },
    #[error("candidate site {id}: {reason}")]
    Site { id: String, reason: String },
    #[error("base station: {0}")]
    BaseStation(String),
    #[error("area: {0}")]
    Area(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("invalid generator parameter: {0}")]
    Parameter(String),
    #[error("generator parameters leave no outdoor test points")]
    NoOutdoorArea,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn horizontal_distance(&self, other: &Point3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Azimuth of `other` seen from `self`, radians in (-pi, pi].
    pub fn azimuth_to(&self, other: &Point3) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }

    /// Elevation of `other` seen from `self`, radians in [-pi/2, pi/2].
    pub fn elevation_to(&self, other: &Point3) -> f64 {
        (other.z - self.z).atan2(self.horizontal_distance(other))
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Point3 {
        Point3::new(self.x + dx, self.y + dy, self.z)
    }

    fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(p: [f64; 3]) -> Self {
        Point3::new(p[0], p[1], p[2])
    }
}

/// A right prism standing on the ground.
#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    /// Counterclockwise, simple polygon.
    pub footprint: Vec<[f64; 2]>,
    pub height: f64,
    bbox: [f64; 4],
}

impl Building {
    /// Validates the footprint and normalizes it to counterclockwise order.
    pub fn new(mut footprint: Vec<[f64; 2]>, height: f64) -> Result<Self, String> {
        if footprint.len() >= 2 && footprint.first() == footprint.last() {
            footprint.pop();
        }
        if footprint.len() < 3 {
            return Err("footprint needs at least 3 vertices".into());
        }
        if !(height.is_finite() && height > 0.0) {
            return Err(format!("height must be positive, got {height}"));
        }
        if footprint.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err("non-finite footprint vertex".into());
        }
        let area = signed_area(&footprint);
        if area.abs() <= GEOM_EPS {
            return Err("footprint has zero area".into());
        }
        if !is_simple(&footprint) {
            return Err("footprint is self-intersecting".into());
        }
        if area < 0.0 {
            footprint.reverse();
        }
        let bbox = bounding_box(&footprint);
        Ok(Self { footprint, height, bbox })
    }

    /// Axis-aligned rectangle footprint.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64, height: f64) -> Result<Self, String> {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]], height)
    }

    pub fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.footprint.len();
        (0..n).map(move |i| (self.footprint[i], self.footprint[(i + 1) % n]))
    }

    /// Point strictly inside the footprint (boundary excluded).
    pub fn contains_strict(&self, p: [f64; 2]) -> bool {
        if !self.in_bbox(p, 0.0) || self.on_boundary(p) {
            return false;
        }
        point_in_polygon(&self.footprint, p)
    }

    /// Point inside the footprint or on its boundary.
    pub fn contains_closed(&self, p: [f64; 2]) -> bool {
        if !self.in_bbox(p, GEOM_EPS) {
            return false;
        }
        self.on_boundary(p) || point_in_polygon(&self.footprint, p)
    }

    pub fn on_boundary(&self, p: [f64; 2]) -> bool {
        self.edges().any(|(a, b)| point_segment_distance(p, a, b) <= GEOM_EPS)
    }

    /// Outward unit normal of the edge `p` lies on, if any.
    pub fn outward_normal_at(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        self.edges()
            .find(|(a, b)| point_segment_distance(p, *a, *b) <= GEOM_EPS)
            .map(|(a, b)| edge_outward_normal(a, b))
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.footprint.len();
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = self.footprint[i];
            let q = self.footprint[(i + 1) % n];
            let cross = p[0] * q[1] - q[0] * p[1];
            a2 += cross;
            cx += (p[0] + q[0]) * cross;
            cy += (p[1] + q[1]) * cross;
        }
        [cx / (3.0 * a2), cy / (3.0 * a2)]
    }

    fn in_bbox(&self, p: [f64; 2], pad: f64) -> bool {
        p[0] >= self.bbox[0] - pad
            && p[0] <= self.bbox[2] + pad
            && p[1] >= self.bbox[1] - pad
            && p[1] <= self.bbox[3] + pad
    }

    fn translated(&self, dx: f64, dy: f64) -> Building {
        let footprint = self.footprint.iter().map(|p| [p[0] + dx, p[1] + dy]).collect::<Vec<_>>();
        let bbox = bounding_box(&footprint);
        Building { footprint, height: self.height, bbox }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mount {
    /// Wall-mounted, facing along the stored outward unit normal.
    Wall { normal: [f64; 2] },
    Roof,
}

impl Mount {
    pub fn kind(&self) -> MountKind {
        match self {
            Mount::Wall { .. } => MountKind::Wall,
            Mount::Roof => MountKind::Roof,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MountKind {
    Wall,
    Roof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSite {
    pub id: String,
    pub position: Point3,
    pub mount: Mount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestPoint {
    pub id: String,
    pub position: Point3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseStation {
    pub position: Point3,
    /// Planar array as `[rows, cols]`.
    pub array: [usize; 2],
}

impl BaseStation {
    pub fn elements(&self) -> usize {
        self.array[0] * self.array[1]
    }
}

/// Rectangle `[0, w] x [0, h]` in local meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub w: f64,
    pub h: f64,
}

impl Area {
    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= -GEOM_EPS && p.x <= self.w + GEOM_EPS && p.y >= -GEOM_EPS && p.y <= self.h + GEOM_EPS
    }
}

/// A validated world. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub area: Area,
    pub buildings: Vec<Building>,
    pub bs: BaseStation,
    pub sites: Vec<CandidateSite>,
    pub tps: Vec<TestPoint>,
}

impl Scenario {
    /// Builds a scenario and checks every invariant.
    pub fn new(
        area: Area,
        buildings: Vec<Building>,
        bs: BaseStation,
        sites: Vec<CandidateSite>,
        tps: Vec<TestPoint>,
    ) -> Result<Self, ScenarioError> {
        let scenario = Self { area, buildings, bs, sites, tps };
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let area = self.area;
        if !(area.w.is_finite() && area.h.is_finite() && area.w > 0.0 && area.h > 0.0) {
            return Err(ScenarioError::Area(format!("invalid size {} x {}", area.w, area.h)));
        }
        let bs = &self.bs;
        if !bs.position.is_finite() || !area.contains(&bs.position) {
            return Err(ScenarioError::BaseStation("position outside the area".into()));
        }
        if bs.array[0] == 0 || bs.array[1] == 0 {
            return Err(ScenarioError::BaseStation("array needs at least one element".into()));
        }
        if self.buildings.iter().any(|b| b.contains_strict(bs.position.xy()) && bs.position.z < b.height) {
            return Err(ScenarioError::BaseStation("position inside a building".into()));
        }

        let mut ids = HashSet::new();
        for site in &self.sites {
            if !ids.insert(site.id.as_str()) {
                return Err(ScenarioError::DuplicateId(site.id.clone()));
            }
            let err = |reason: &str| ScenarioError::Site { id: site.id.clone(), reason: reason.into() };
            if !site.position.is_finite() || !area.contains(&site.position) {
                return Err(err("position outside the area"));
            }
            let p = site.position.xy();
            match site.mount {
                Mount::Wall { normal } => {
                    let host = self
                        .buildings
                        .iter()
                        .find_map(|b| b.outward_normal_at(p).map(|n| (b, n)))
                        .ok_or_else(|| err("wall site does not lie on any building edge"))?;
                    let (building, edge_normal) = host;
                    if !(site.position.z > 0.0 && site.position.z <= building.height + GEOM_EPS) {
                        return Err(err("wall site height is not on the wall"));
                    }
                    let len = normal[0].hypot(normal[1]);
                    if (len - 1.0).abs() > 1e-3 {
                        return Err(err("wall normal is not a unit vector"));
                    }
                    if normal[0] * edge_normal[0] + normal[1] * edge_normal[1] < 0.99 {
                        return Err(err("wall normal does not point out of the building"));
                    }
                }
                Mount::Roof => {
                    let host = self
                        .buildings
                        .iter()
                        .find(|b| b.contains_closed(p))
                        .ok_or_else(|| err("roof site is not inside any footprint"))?;
                    if site.position.z < host.height - GEOM_EPS {
                        return Err(err("roof site is below the roof"));
                    }
                }
            }
        }

        for tp in &self.tps {
            if !ids.insert(tp.id.as_str()) {
                return Err(ScenarioError::DuplicateId(tp.id.clone()));
            }
            let err = |reason: &str| ScenarioError::TestPoint { id: tp.id.clone(), reason: reason.into() };
            if !tp.position.is_finite() || !area.contains(&tp.position) {
                return Err(err("position outside the area"));
            }
            if self.buildings.iter().any(|b| b.contains_closed(tp.position.xy())) {
                return Err(err("position is inside a building"));
            }
        }
        Ok(())
    }

    pub fn site_index(&self, id: &str) -> Option<usize> {
        self.sites.iter().position(|s| s.id == id)
    }

    pub fn tp_index(&self, id: &str) -> Option<usize> {
        self.tps.iter().position(|t| t.id == id)
    }

    pub fn los_blocked(&self, a: &Point3, b: &Point3) -> bool {
        los_blocked(a, b, &self.buildings)
    }

    /// The same world shifted by a 2D offset; the area grows to keep everything inside.
    pub fn translated(&self, dx: f64, dy: f64) -> Scenario {
        Scenario {
            area: Area { w: self.area.w + dx.abs(), h: self.area.h + dy.abs() },
            buildings: self.buildings.iter().map(|b| b.translated(dx, dy)).collect(),
            bs: BaseStation { position: self.bs.position.translated(dx, dy), array: self.bs.array },
            sites: self
                .sites
                .iter()
                .map(|s| CandidateSite { position: s.position.translated(dx, dy), ..s.clone() })
                .collect(),
            tps: self
                .tps
                .iter()
                .map(|t| TestPoint { position: t.position.translated(dx, dy), ..t.clone() })
                .collect(),
        }
    }

    pub fn to_document(&self) -> ScenarioDoc {
        ScenarioDoc {
            area: self.area,
            buildings: self
                .buildings
                .iter()
                .map(|b| BuildingDoc { footprint: b.footprint.clone(), height: b.height })
                .collect(),
            bs: BsDoc { pos: self.bs.position.to_array(), array: self.bs.array },
            sites: self
                .sites
                .iter()
                .map(|s| SiteDoc {
                    id: s.id.clone(),
                    pos: s.position.to_array(),
                    mount: s.mount.kind(),
                    normal: match s.mount {
                        Mount::Wall { normal } => Some(normal),
                        Mount::Roof => None,
                    },
                })
                .collect(),
            tps: self.tps.iter().map(|t| TpDoc { id: t.id.clone(), pos: t.position.to_array() }).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("scenario serializes")
    }
}

/// On-disk scenario document. Field names are the published schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub area: Area,
    pub buildings: Vec<BuildingDoc>,
    pub bs: BsDoc,
    pub sites: Vec<SiteDoc>,
    pub tps: Vec<TpDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingDoc {
    pub footprint: Vec<[f64; 2]>,
    pub height: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsDoc {
    pub pos: [f64; 3],
    pub array: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteDoc {
    pub id: String,
    pub pos: [f64; 3],
    pub mount: MountKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TpDoc {
    pub id: String,
    pub pos: [f64; 3],
}

impl TryFrom<ScenarioDoc> for Scenario {
    type Error = ScenarioError;

    fn try_from(doc: ScenarioDoc) -> Result<Self, Self::Error> {
        let buildings = doc
            .buildings
            .into_iter()
            .enumerate()
            .map(|(index, b)| Building::new(b.footprint, b.height).map_err(|reason| ScenarioError::Building { index, reason }))
            .collect::<Result<Vec<_>, _>>()?;
        let mut sites = Vec::with_capacity(doc.sites.len());
        for s in doc.sites {
            let position = Point3::from(s.pos);
            let mount = match s.mount {
                MountKind::Roof => Mount::Roof,
                MountKind::Wall => {
                    // A missing normal is taken from the host edge.
                    let normal = match s.normal {
                        Some(n) => n,
                        None => buildings
                            .iter()
                            .find_map(|b| b.outward_normal_at(position.xy()))
                            .ok_or_else(|| ScenarioError::Site {
                                id: s.id.clone(),
                                reason: "wall site does not lie on any building edge".into(),
                            })?,
                    };
                    Mount::Wall { normal }
                }
            };
            sites.push(CandidateSite { id: s.id, position, mount });
        }
        let tps = doc.tps.into_iter().map(|t| TestPoint { id: t.id, position: t.pos.into() }).collect();
        let bs = BaseStation { position: doc.bs.pos.into(), array: doc.bs.array };
        Scenario::new(doc.area, buildings, bs, sites, tps)
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(document: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_str(document)?;
    Scenario::try_from(doc)
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    load_scenario(&std::fs::read_to_string(path)?)
}

/// Parameters of the synthetic Manhattan-grid generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ManhattanParams {
    /// Blocks per side; the grid is `blocks x blocks`.
    pub blocks: usize,
    pub block_size: f64,
    pub street_width: f64,
    pub height: f64,
    pub tp_spacing: f64,
    pub site_spacing: f64,
    pub seed: u64,
    pub wall_mount_height: f64,
    pub roof_mount_height: f64,
    pub bs_height: f64,
    pub ue_height: f64,
    pub bs_array: [usize; 2],
    /// Horizontal inset of roof sites from the chosen roof corner.
    pub roof_inset: f64,
}

impl Default for ManhattanParams {
    fn default() -> Self {
        Self {
            blocks: 3,
            block_size: 80.0,
            street_width: 20.0,
            height: DEFAULT_BUILDING_HEIGHT,
            tp_spacing: 20.0,
            site_spacing: 80.0,
            seed: 7,
            wall_mount_height: DEFAULT_WALL_MOUNT_HEIGHT,
            roof_mount_height: DEFAULT_ROOF_MOUNT_HEIGHT,
            bs_height: DEFAULT_BS_HEIGHT,
            ue_height: DEFAULT_UE_HEIGHT,
            bs_array: [12, 16],
            roof_inset: 0.5,
        }
    }
}

/// Generates an axis-aligned grid of square blocks separated by streets.
///
/// The area is ringed by a perimeter street. Test points sit on a regular
/// grid offset by half a street width, keeping only outdoor points. Wall sites
/// are spread along every building edge that faces an inner street (a street
/// running between two block rows); perimeter-facing edges get none. Each
/// building gets one roof site near a seed-chosen roof corner, and the base
/// station sits on a seed-chosen street intersection.
pub fn generate_manhattan(params: &ManhattanParams) -> Result<Scenario, ScenarioError> {
    let p = params;
    let positive = [
        ("block_size", p.block_size),
        ("street_width", p.street_width),
        ("height", p.height),
        ("tp_spacing", p.tp_spacing),
        ("site_spacing", p.site_spacing),
        ("wall_mount_height", p.wall_mount_height),
        ("roof_mount_height", p.roof_mount_height),
        ("bs_height", p.bs_height),
        ("ue_height", p.ue_height),
    ];
    for (name, v) in positive {
        if !(v.is_finite() && v > 0.0) {
            return Err(ScenarioError::Parameter(format!("{name} must be positive, got {v}")));
        }
    }
    if p.blocks == 0 {
        return Err(ScenarioError::Parameter("blocks must be positive".into()));
    }
    if p.wall_mount_height > p.height {
        return Err(ScenarioError::Parameter("wall mount height exceeds building height".into()));
    }
    if p.roof_mount_height < p.height {
        return Err(ScenarioError::Parameter("roof mount height is below the roof".into()));
    }
    if !(p.roof_inset >= 0.0 && 2.0 * p.roof_inset < p.block_size) {
        return Err(ScenarioError::Parameter("roof inset does not fit on the roof".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let n = p.blocks;
    let pitch = p.block_size + p.street_width;
    let side = n as f64 * pitch + p.street_width;
    let area = Area { w: side, h: side };
    let origin = |i: usize| p.street_width + i as f64 * pitch;

    let mut buildings = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let (x0, y0) = (origin(i), origin(j));
            let b = Building::rectangle(x0, y0, x0 + p.block_size, y0 + p.block_size, p.height)
                .map_err(ScenarioError::Parameter)?;
            buildings.push(b);
        }
    }

    // Street intersections are indexed by the street lines they join.
    let street_center = |k: usize| p.street_width / 2.0 + k as f64 * pitch;
    let candidates: Vec<(usize, usize)> = if n >= 2 {
        (1..n).flat_map(|a| (1..n).map(move |b| (a, b))).collect()
    } else {
        (0..=n).flat_map(|a| (0..=n).map(move |b| (a, b))).collect()
    };
    let (bi, bj) = candidates[rng.random_range(0..candidates.len())];
    let bs = BaseStation {
        position: Point3::new(street_center(bi), street_center(bj), p.bs_height),
        array: p.bs_array,
    };

    let mut sites = Vec::new();
    let inner_street = |k: usize| k > 0 && k < n;
    for j in 0..n {
        for i in 0..n {
            let (x0, y0) = (origin(i), origin(j));
            let (x1, y1) = (x0 + p.block_size, y0 + p.block_size);
            // (start, end, outward normal, faces an inner street), counterclockwise
            let edges = [
                ([x0, y0], [x1, y0], [0.0, -1.0], inner_street(j)),
                ([x1, y0], [x1, y1], [1.0, 0.0], inner_street(i + 1)),
                ([x1, y1], [x0, y1], [0.0, 1.0], inner_street(j + 1)),
                ([x0, y1], [x0, y0], [-1.0, 0.0], inner_street(i)),
            ];
            for (a, b, normal, inner) in edges {
                if !inner {
                    continue;
                }
                let len = p.block_size;
                let count = ((len / p.site_spacing).floor() as usize).max(1);
                let start = (len - (count - 1) as f64 * p.site_spacing) / 2.0;
                for k in 0..count {
                    let s = (start + k as f64 * p.site_spacing) / len;
                    let x = a[0] + s * (b[0] - a[0]);
                    let y = a[1] + s * (b[1] - a[1]);
                    sites.push(CandidateSite {
                        id: String::new(),
                        position: Point3::new(x, y, p.wall_mount_height),
                        mount: Mount::Wall { normal },
                    });
                }
            }
        }
    }
    for j in 0..n {
        for i in 0..n {
            let (x0, y0) = (origin(i), origin(j));
            let corner = rng.random_range(0..4u8);
            let (cx, sx) = if corner & 1 == 0 { (x0, 1.0) } else { (x0 + p.block_size, -1.0) };
            let (cy, sy) = if corner & 2 == 0 { (y0, 1.0) } else { (y0 + p.block_size, -1.0) };
            sites.push(CandidateSite {
                id: String::new(),
                position: Point3::new(cx + sx * p.roof_inset, cy + sy * p.roof_inset, p.roof_mount_height),
                mount: Mount::Roof,
            });
        }
    }
    let (mut wall_no, mut roof_no) = (0, 0);
    for site in &mut sites {
        site.id = match site.mount {
            Mount::Wall { .. } => {
                wall_no += 1;
                format!("W{wall_no:03}")
            }
            Mount::Roof => {
                roof_no += 1;
                format!("R{roof_no:03}")
            }
        };
    }

    let mut tps = Vec::new();
    let steps = ((side - p.street_width / 2.0) / p.tp_spacing).floor() as usize;
    for j in 0..=steps {
        for i in 0..=steps {
            let x = p.street_width / 2.0 + i as f64 * p.tp_spacing;
            let y = p.street_width / 2.0 + j as f64 * p.tp_spacing;
            if x > side || y > side {
                continue;
            }
            if buildings.iter().any(|b| b.contains_closed([x, y])) {
                continue;
            }
            tps.push(TestPoint { id: format!("T{:04}", tps.len() + 1), position: Point3::new(x, y, p.ue_height) });
        }
    }
    if tps.is_empty() {
        return Err(ScenarioError::NoOutdoorArea);
    }

    Scenario::new(area, buildings, bs, sites, tps)
}

/// True iff the open segment `(a, b)` passes through the interior of any
/// building prism (footprint extruded from the ground to the roof).
///
/// Touching a wall or the roof without entering the interior is not a
/// blockage, so a device mounted on a wall sees everything in front of it.
pub fn los_blocked(a: &Point3, b: &Point3, buildings: &[Building]) -> bool {
    buildings.iter().any(|bld| segment_hits_prism(a, b, bld))
}

fn segment_hits_prism(a: &Point3, b: &Point3, bld: &Building) -> bool {
    if a.z.min(b.z) >= bld.height || a.z.max(b.z) <= 0.0 {
        return false;
    }
    let (ax, ay, bx, by) = (a.x, a.y, b.x, b.y);
    if ax.max(bx) < bld.bbox[0] || ax.min(bx) > bld.bbox[2] || ay.max(by) < bld.bbox[1] || ay.min(by) > bld.bbox[3] {
        return false;
    }
    let z_at = |t: f64| a.z + t * (b.z - a.z);
    let d = [bx - ax, by - ay];
    if d[0].hypot(d[1]) <= GEOM_EPS {
        // Vertical segment: blocked when it runs inside the footprint below the roof.
        return bld.contains_strict([ax, ay]);
    }

    let mut cuts = vec![0.0, 1.0];
    for (p, q) in bld.edges() {
        segment_params(a.xy(), b.xy(), p, q, &mut cuts);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);

    cuts.windows(2).any(|w| {
        let (t0, t1) = (w[0], w[1]);
        if t1 - t0 < 1e-12 {
            return false;
        }
        let tm = 0.5 * (t0 + t1);
        if !bld.contains_strict([ax + tm * d[0], ay + tm * d[1]]) {
            return false;
        }
        let (z0, z1) = (z_at(t0), z_at(t1));
        z0.min(z1) < bld.height && z0.max(z1) > 0.0
    })
}

/// Appends the parameters along `a -> b` where it meets segment `p -> q`.
fn segment_params(a: [f64; 2], b: [f64; 2], p: [f64; 2], q: [f64; 2], out: &mut Vec<f64>) {
    let r = [b[0] - a[0], b[1] - a[1]];
    let s = [q[0] - p[0], q[1] - p[1]];
    let denom = cross(r, s);
    let ap = [p[0] - a[0], p[1] - a[1]];
    let rr = r[0] * r[0] + r[1] * r[1];
    if denom.abs() <= 1e-12 * (rr.sqrt() * s[0].hypot(s[1])).max(1e-300) {
        if cross(ap, r).abs() <= 1e-9 * rr.sqrt() {
            // Collinear: project the edge endpoints onto the segment.
            for e in [p, q] {
                let t = ((e[0] - a[0]) * r[0] + (e[1] - a[1]) * r[1]) / rr;
                if (0.0..=1.0).contains(&t) {
                    out.push(t);
                }
            }
        }
        return;
    }
    let t = cross(ap, s) / denom;
    let u = cross(ap, r) / denom;
    if (-1e-12..=1.0 + 1e-12).contains(&t) && (-1e-12..=1.0 + 1e-12).contains(&u) {
        out.push(t.clamp(0.0, 1.0));
    }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>() / 2.0
}

fn bounding_box(poly: &[[f64; 2]]) -> [f64; 4] {
    poly.iter().fold([f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY], |b, p| {
        [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])]
    })
}

/// Outward normal of a counterclockwise edge.
fn edge_outward_normal(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    [dy / len, -dx / len]
}

/// Crossing-number test; boundary points give an arbitrary answer.
pub fn point_in_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi[1] > p[1]) != (pj[1] > p[1]) {
            let x = pj[0] + (p[1] - pj[1]) * (pi[0] - pj[0]) / (pi[1] - pj[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (ap[0] - t * ab[0]).hypot(ap[1] - t * ab[1])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| cross([q[0] - p[0], q[1] - p[1]], [r[0] - p[0], r[1] - p[1]]);
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    point_segment_distance(c, a, b) <= GEOM_EPS
        || point_segment_distance(d, a, b) <= GEOM_EPS
        || point_segment_distance(a, c, d) <= GEOM_EPS
        || point_segment_distance(b, c, d) <= GEOM_EPS
}

fn is_simple(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if point_segment_distance(a, b, b) <= GEOM_EPS {
            return false;
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(a, b, poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}
