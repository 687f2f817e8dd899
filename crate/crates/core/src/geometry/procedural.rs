//! Procedural generators for wheels, barrel hinges, perforated panels and
//! swept tubes. Each produces one or more closed sub-meshes.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::primitives::{annulus, box_mesh, revolve, ring_directions};
use super::{GeometryError, TriMesh, DEFAULT_TESSELLATION, MIN_TESSELLATION};
use crate::math::{axis_angle_matrix, Frame, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WheelParams {
    pub radius: f64,
    pub width: f64,
    pub spokes: u32,
    /// Center bore radius; zero for a solid hub.
    pub bore: f64,
    pub hub_radius: f64,
    pub rim_thickness: f64,
    pub spoke_width: f64,
}

impl WheelParams {
    /// Hub, rim and spoke proportions derived from the outer radius.
    pub fn new(radius: f64, width: f64, spokes: u32, bore: f64) -> Self {
        Self {
            radius,
            width,
            spokes,
            bore,
            hub_radius: 0.25 * radius,
            rim_thickness: 0.12 * radius,
            spoke_width: 0.12 * radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HingeParams {
    pub length: f64,
    pub barrel_radius: f64,
    pub leaf_width: f64,
    pub leaf_thickness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelParams {
    /// Plate extents: width (x), height (y), thickness (z).
    pub size: Vec3,
    pub holes_x: u32,
    pub holes_y: u32,
    pub hole_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeParams {
    pub points: Vec<Vec3>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum ProceduralSpec {
    Wheel(WheelParams),
    BarrelHinge {
        #[serde(flatten)]
        params: HingeParams,
        /// Restrict output to one named piece.
        piece: Option<String>,
    },
    PerforatedPanel(PanelParams),
    SweptTube(TubeParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedMesh {
    pub name: String,
    pub mesh: TriMesh,
}

fn positive(what: &str, v: f64) -> Result<(), GeometryError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::InvalidParams(format!("{what} must be positive, got {v}")))
    }
}

pub const HINGE_PIECES: [&str; 3] = ["leaf_a", "leaf_b", "barrel"];
const MAX_TUBE_TURN_COS: f64 = -0.5;

impl ProceduralSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ProceduralSpec::Wheel(_) => "wheel",
            ProceduralSpec::BarrelHinge { .. } => "barrel_hinge",
            ProceduralSpec::PerforatedPanel(_) => "perforated_panel",
            ProceduralSpec::SweptTube(_) => "tube",
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            ProceduralSpec::Wheel(p) => {
                positive("radius", p.radius)?;
                positive("width", p.width)?;
                positive("hub_radius", p.hub_radius)?;
                positive("rim_thickness", p.rim_thickness)?;
                positive("spoke_width", p.spoke_width)?;
                if !(p.bore.is_finite() && p.bore >= 0.0) {
                    return Err(GeometryError::InvalidParams("bore must be non-negative".into()));
                }
                if p.bore >= p.hub_radius {
                    return Err(GeometryError::InvalidParams(
                        "bore must be smaller than the hub radius".into(),
                    ));
                }
                if p.hub_radius >= p.radius - p.rim_thickness {
                    return Err(GeometryError::InvalidParams(
                        "hub must fit inside the rim".into(),
                    ));
                }
                if p.spokes == 0 {
                    return Err(GeometryError::InvalidParams("at least one spoke required".into()));
                }
                Ok(())
            }
            ProceduralSpec::BarrelHinge { params, piece } => {
                positive("length", params.length)?;
                positive("barrel_radius", params.barrel_radius)?;
                positive("leaf_width", params.leaf_width)?;
                positive("leaf_thickness", params.leaf_thickness)?;
                if params.leaf_thickness >= 2.0 * params.barrel_radius {
                    return Err(GeometryError::InvalidParams(
                        "leaf thickness must be below the barrel diameter".into(),
                    ));
                }
                if let Some(p) = piece {
                    if !HINGE_PIECES.contains(&p.as_str()) {
                        return Err(GeometryError::InvalidParams(format!(
                            "unknown hinge piece {p:?}; expected one of {HINGE_PIECES:?}"
                        )));
                    }
                }
                Ok(())
            }
            ProceduralSpec::PerforatedPanel(p) => {
                positive("width", p.size.x)?;
                positive("height", p.size.y)?;
                positive("thickness", p.size.z)?;
                positive("hole_radius", p.hole_radius)?;
                if p.holes_x == 0 || p.holes_y == 0 {
                    return Err(GeometryError::InvalidParams("hole grid must be at least 1x1".into()));
                }
                let cell_w = p.size.x / p.holes_x as f64;
                let cell_h = p.size.y / p.holes_y as f64;
                if 2.0 * p.hole_radius >= cell_w.min(cell_h) {
                    return Err(GeometryError::HolesOverlap(format!(
                        "hole diameter {} does not fit the {}x{} m pitch",
                        2.0 * p.hole_radius,
                        cell_w,
                        cell_h
                    )));
                }
                Ok(())
            }
            ProceduralSpec::SweptTube(p) => {
                positive("radius", p.radius)?;
                if p.points.len() < 2 {
                    return Err(GeometryError::InvalidParams("tube needs at least 2 points".into()));
                }
                let dirs = segment_directions(&p.points)?;
                for w in dirs.windows(2) {
                    if w[0].dot(&w[1]) < MAX_TUBE_TURN_COS {
                        return Err(GeometryError::InvalidParams(
                            "tube turns more than 120 degrees at a joint".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// Named closed sub-meshes.
    pub fn generate(&self, segments: usize) -> Result<Vec<NamedMesh>, GeometryError> {
        if segments < MIN_TESSELLATION {
            return Err(GeometryError::InvalidTessellation(segments));
        }
        self.validate()?;
        Ok(match self {
            ProceduralSpec::Wheel(p) => wheel(p, segments),
            ProceduralSpec::BarrelHinge { params, piece } => {
                let all = hinge(params, segments);
                match piece {
                    Some(name) => all.into_iter().filter(|m| &m.name == name).collect(),
                    None => all,
                }
            }
            ProceduralSpec::PerforatedPanel(p) => vec![NamedMesh {
                name: "panel".into(),
                mesh: perforated_panel(p, segments),
            }],
            ProceduralSpec::SweptTube(p) => vec![NamedMesh {
                name: "tube".into(),
                mesh: swept_tube(p, segments),
            }],
        })
    }
}

/// Procedural geometry with its mesh generated once at the default tessellation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProceduralGeometry {
    pub spec: ProceduralSpec,
    #[serde(skip)]
    cached: Option<Arc<TriMesh>>,
}

impl PartialEq for ProceduralGeometry {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl ProceduralGeometry {
    pub fn new(spec: ProceduralSpec) -> Result<Self, GeometryError> {
        let pieces = spec.generate(DEFAULT_TESSELLATION)?;
        let mesh = TriMesh::merge(pieces.iter().map(|p| &p.mesh));
        Ok(Self {
            spec,
            cached: Some(Arc::new(mesh)),
        })
    }

    pub fn mesh(&self, segments: usize) -> Result<TriMesh, GeometryError> {
        match &self.cached {
            Some(m) if segments == DEFAULT_TESSELLATION => Ok((**m).clone()),
            _ => {
                let pieces = self.spec.generate(segments)?;
                Ok(TriMesh::merge(pieces.iter().map(|p| &p.mesh)))
            }
        }
    }
}

/// Wheel about +z: rim and hub annuli joined by radial spokes. The ring
/// tessellation is rounded up to a multiple of the spoke count so the whole
/// mesh shares the spokes' rotational symmetry.
fn wheel(p: &WheelParams, segments: usize) -> Vec<NamedMesh> {
    let n = p.spokes as usize;
    let segs = segments.div_ceil(n) * n;
    let rim_inner = p.radius - p.rim_thickness;
    let mut out = vec![NamedMesh {
        name: "rim".into(),
        mesh: annulus(rim_inner, p.radius, p.width, segs),
    }];
    let hub = if p.bore > 0.0 {
        annulus(p.bore, p.hub_radius, p.width, segs)
    } else {
        revolve(&[(p.hub_radius, p.width / 2.0), (p.hub_radius, -p.width / 2.0)], segs)
    };
    out.push(NamedMesh {
        name: "hub".into(),
        mesh: hub,
    });
    // spokes are seated into hub and rim by a fraction of their wall
    let r0 = p.hub_radius - 0.5 * (p.hub_radius - p.bore);
    let r1 = rim_inner + 0.5 * p.rim_thickness;
    let spoke = box_mesh(Vec3::new(r1 - r0, p.spoke_width, 0.5 * p.width))
        .transformed(&Frame::from_translation(Vec3::new(0.5 * (r0 + r1), 0.0, 0.0)));
    for k in 0..n {
        let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let rot = Frame::from_rotation(axis_angle_matrix(Vec3::z(), angle));
        out.push(NamedMesh {
            name: format!("spoke_{k}"),
            mesh: spoke.transformed(&rot),
        });
    }
    out
}

/// Barrel along +z with leaf A seated into it on +x and leaf B touching it on -x.
fn hinge(p: &HingeParams, segments: usize) -> Vec<NamedMesh> {
    let segs = segments.div_ceil(2) * 2;
    let r = p.barrel_radius;
    let h = p.length / 2.0;
    let leaf = |x0: f64, x1: f64| {
        box_mesh(Vec3::new(x1 - x0, p.leaf_thickness, p.length))
            .transformed(&Frame::from_translation(Vec3::new(0.5 * (x0 + x1), 0.0, 0.0)))
    };
    vec![
        NamedMesh {
            name: "leaf_a".into(),
            mesh: leaf(0.5 * r, r + p.leaf_width),
        },
        NamedMesh {
            name: "leaf_b".into(),
            mesh: leaf(-(r + p.leaf_width), -r),
        },
        NamedMesh {
            name: "barrel".into(),
            mesh: revolve(&[(r, h), (r, -h)], segs),
        },
    ]
}

/// Builds meshes by snapping coincident vertices onto shared indices.
struct Welder {
    vertices: Vec<Vec3>,
    index: HashMap<[i64; 3], u32>,
    triangles: Vec<[u32; 3]>,
}

const WELD_GRID: f64 = 1e-9;

impl Welder {
    fn new() -> Self {
        Self {
            vertices: Vec::new(),
            index: HashMap::new(),
            triangles: Vec::new(),
        }
    }

    fn vertex(&mut self, p: Vec3) -> u32 {
        let key = [
            (p.x / WELD_GRID).round() as i64,
            (p.y / WELD_GRID).round() as i64,
            (p.z / WELD_GRID).round() as i64,
        ];
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            (self.vertices.len() - 1) as u32
        })
    }

    fn tri(&mut self, a: Vec3, b: Vec3, c: Vec3) {
        let t = [self.vertex(a), self.vertex(b), self.vertex(c)];
        self.triangles.push(t);
    }

    fn finish(self) -> TriMesh {
        TriMesh::new(self.vertices, self.triangles)
    }
}

/// Plate tiled by one cell per hole. Each cell face is the ring between the
/// cell rectangle and the hole polygon, zipped along shared ray directions;
/// neighbouring cells meet on identical edge vertices by mirror symmetry.
fn perforated_panel(p: &PanelParams, segments: usize) -> TriMesh {
    let segs = segments.div_ceil(4) * 4;
    let dirs = ring_directions(segs);
    let (w, h, t) = (p.size.x, p.size.y, p.size.z);
    let (nx, ny) = (p.holes_x as usize, p.holes_y as usize);
    let xs: Vec<f64> = (0..=nx).map(|i| -w / 2.0 + w * i as f64 / nx as f64).collect();
    let ys: Vec<f64> = (0..=ny).map(|j| -h / 2.0 + h * j as f64 / ny as f64).collect();
    let (zt, zb) = (t / 2.0, -t / 2.0);
    let at = |q: (f64, f64), z: f64| Vec3::new(q.0, q.1, z);
    let mut weld = Welder::new();

    for j in 0..ny {
        for i in 0..nx {
            let (x0, x1, y0, y1) = (xs[i], xs[i + 1], ys[j], ys[j + 1]);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            let (hw, hh) = (0.5 * (x1 - x0), 0.5 * (y1 - y0));
            let hole: Vec<(f64, f64)> = dirs
                .iter()
                .map(|&(c, s)| (cx + p.hole_radius * c, cy + p.hole_radius * s))
                .collect();
            // outer loop: for each ray k, its projection plus any corner between k and k+1
            let project = |c: f64, s: f64| -> (f64, f64) {
                let tx = if c != 0.0 { hw / c.abs() } else { f64::INFINITY };
                let ty = if s != 0.0 { hh / s.abs() } else { f64::INFINITY };
                if tx < ty {
                    (if c > 0.0 { x1 } else { x0 }, cy + tx * s)
                } else if ty < tx {
                    (cx + ty * c, if s > 0.0 { y1 } else { y0 })
                } else {
                    (if c > 0.0 { x1 } else { x0 }, if s > 0.0 { y1 } else { y0 })
                }
            };
            let corners = [(x1, y1), (x0, y1), (x0, y0), (x1, y0)];
            let corner_angle = |q: (f64, f64)| (q.1 - cy).atan2(q.0 - cx).rem_euclid(2.0 * std::f64::consts::PI);
            let ray_angle = |k: usize| 2.0 * std::f64::consts::PI * k as f64 / segs as f64;
            let mut outer_runs: Vec<Vec<(f64, f64)>> = Vec::with_capacity(segs);
            for k in 0..segs {
                let (c0, s0) = dirs[k];
                let (c1, s1) = dirs[(k + 1) % segs];
                let a = project(c0, s0);
                let b = project(c1, s1);
                let (lo, hi) = (ray_angle(k), ray_angle(k + 1));
                let mut run = vec![a];
                for &q in &corners {
                    let ang = corner_angle(q);
                    if ang > lo && ang < hi && q != a && q != b {
                        run.push(q);
                    }
                }
                run.push(b);
                outer_runs.push(run);
            }
            for (k, run) in outer_runs.iter().enumerate() {
                let k1 = (k + 1) % segs;
                for m in 0..run.len() - 1 {
                    weld.tri(at(run[m], zt), at(run[m + 1], zt), at(hole[k], zt));
                    weld.tri(at(run[m + 1], zb), at(run[m], zb), at(hole[k], zb));
                }
                let last = run[run.len() - 1];
                weld.tri(at(last, zt), at(hole[k1], zt), at(hole[k], zt));
                weld.tri(at(hole[k1], zb), at(last, zb), at(hole[k], zb));
                // hole wall faces the hole axis
                weld.tri(at(hole[k1], zb), at(hole[k], zb), at(hole[k], zt));
                weld.tri(at(hole[k1], zb), at(hole[k], zt), at(hole[k1], zt));
                // outer wall only along the plate border
                for m in 0..run.len() - 1 {
                    let (a, b) = (run[m], run[m + 1]);
                    let on_border = (a.0 == xs[0] && b.0 == xs[0])
                        || (a.0 == xs[nx] && b.0 == xs[nx])
                        || (a.1 == ys[0] && b.1 == ys[0])
                        || (a.1 == ys[ny] && b.1 == ys[ny]);
                    if on_border {
                        weld.tri(at(a, zb), at(b, zb), at(b, zt));
                        weld.tri(at(a, zb), at(b, zt), at(a, zt));
                    }
                }
            }
        }
    }
    weld.finish()
}

fn segment_directions(points: &[Vec3]) -> Result<Vec<Vec3>, GeometryError> {
    points
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let n = d.norm();
            if n > 1e-9 {
                Ok(d / n)
            } else {
                Err(GeometryError::InvalidParams("tube has a zero-length segment".into()))
            }
        })
        .collect()
}

/// Circular profile swept along a polyline; interior joints are mitered on
/// the bisector plane and the profile frame is parallel-transported.
fn swept_tube(p: &TubeParams, segments: usize) -> TriMesh {
    let dirs = segment_directions(&p.points).expect("validated");
    let ring = ring_directions(segments);
    let n = segments as u32;
    let d0 = dirs[0];
    let helper = if d0.x.abs() <= d0.y.abs() && d0.x.abs() <= d0.z.abs() {
        Vec3::x()
    } else if d0.y.abs() <= d0.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let mut u = (helper - d0 * helper.dot(&d0)).normalize();
    let mut v = d0.cross(&u);
    let mut vertices = Vec::new();
    let r = p.radius;
    let count = p.points.len();
    for i in 0..count {
        let d_prev = dirs[i.saturating_sub(1).min(dirs.len() - 1)];
        let d_next = dirs[i.min(dirs.len() - 1)];
        let miter = if i == 0 || i == count - 1 {
            None
        } else {
            Some((d_prev + d_next).normalize())
        };
        for &(c, s) in &ring {
            let offset = (u * c + v * s) * r;
            let q = match miter {
                Some(nb) => offset - d_prev * (nb.dot(&offset) / nb.dot(&d_prev)),
                None => offset,
            };
            vertices.push(p.points[i] + q);
        }
        if i > 0 && i < count - 1 {
            let axis = d_prev.cross(&d_next);
            let sin = axis.norm();
            if sin > 1e-12 {
                let angle = sin.atan2(d_prev.dot(&d_next));
                let rot = axis_angle_matrix(axis / sin, angle);
                u = rot * u;
                v = rot * v;
            }
        }
    }
    let mut triangles = Vec::new();
    for i in 0..(count as u32 - 1) {
        let l = i * n;
        let up = (i + 1) * n;
        for k in 0..n {
            let k1 = (k + 1) % n;
            triangles.push([up + k, l + k, l + k1]);
            triangles.push([up + k, l + k1, up + k1]);
        }
    }
    let start_c = vertices.len() as u32;
    vertices.push(p.points[0]);
    for k in 0..n {
        triangles.push([start_c, (k + 1) % n, k]);
    }
    let end_c = vertices.len() as u32;
    vertices.push(p.points[count - 1]);
    let last = (count as u32 - 1) * n;
    for k in 0..n {
        triangles.push([end_c, last + k, last + (k + 1) % n]);
    }
    TriMesh::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{mesh_from_primitive, watertight_check};
    use crate::model::Geometry;
    use std::f64::consts::PI;

    fn assert_closed(m: &TriMesh) {
        m.validate().unwrap();
        let r = watertight_check(m);
        assert!(r.closed, "{r:?}");
        assert_eq!(r.inconsistent_edges, 0, "{r:?}");
        assert!(m.volume() > 0.0);
    }

    #[test]
    fn wheel_pieces_are_closed() {
        let spec = ProceduralSpec::Wheel(WheelParams::new(0.1, 0.04, 6, 0.01));
        let pieces = spec.generate(64).unwrap();
        assert_eq!(pieces.len(), 2 + 6);
        for p in &pieces {
            assert_closed(&p.mesh);
        }
        let solid_hub = ProceduralSpec::Wheel(WheelParams::new(0.1, 0.04, 5, 0.0));
        for p in solid_hub.generate(64).unwrap() {
            assert_closed(&p.mesh);
        }
    }

    #[test]
    fn wheel_has_spoke_symmetry() {
        let spec = ProceduralSpec::Wheel(WheelParams::new(0.1, 0.04, 6, 0.01));
        let mesh = ProceduralGeometry::new(spec).unwrap().mesh(64).unwrap();
        let rot = axis_angle_matrix(Vec3::z(), PI / 3.0);
        for v in &mesh.vertices {
            let w = rot * v;
            let best = mesh
                .vertices
                .iter()
                .map(|u| (u - w).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9, "vertex {v:?} has no rotated partner ({best})");
        }
    }

    #[test]
    fn hinge_pieces_share_axis() {
        let spec = ProceduralSpec::BarrelHinge {
            params: HingeParams {
                length: 0.08,
                barrel_radius: 0.005,
                leaf_width: 0.03,
                leaf_thickness: 0.002,
            },
            piece: None,
        };
        let pieces = spec.generate(32).unwrap();
        let names: Vec<_> = pieces.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, HINGE_PIECES);
        for p in &pieces {
            assert_closed(&p.mesh);
        }
        let only = ProceduralSpec::BarrelHinge {
            params: HingeParams {
                length: 0.08,
                barrel_radius: 0.005,
                leaf_width: 0.03,
                leaf_thickness: 0.002,
            },
            piece: Some("leaf_b".into()),
        };
        assert_eq!(only.generate(32).unwrap().len(), 1);
    }

    #[test]
    fn panel_volume_subtracts_holes() {
        let p = PanelParams {
            size: Vec3::new(0.2, 0.1, 0.005),
            holes_x: 3,
            holes_y: 2,
            hole_radius: 0.01,
        };
        let mesh = perforated_panel(&p, 64);
        assert_closed(&mesh);
        let expected = 0.2 * 0.1 * 0.005 - 6.0 * PI * 0.01 * 0.01 * 0.005;
        let rel = (mesh.volume() - expected).abs() / expected;
        assert!(rel < 0.01, "rel {rel}");
        // genus: one handle per hole
        assert_eq!(watertight_check(&mesh).euler_characteristic, 2 - 2 * 6);
    }

    #[test]
    fn panel_rejects_overlapping_holes() {
        let spec = ProceduralSpec::PerforatedPanel(PanelParams {
            size: Vec3::new(0.1, 0.1, 0.005),
            holes_x: 2,
            holes_y: 2,
            hole_radius: 0.025,
        });
        assert_eq!(spec.validate().unwrap_err().code(), "holes_overlap");
    }

    #[test]
    fn straight_tube_matches_cylinder() {
        let tube = swept_tube(
            &TubeParams {
                points: vec![Vec3::zeros(), Vec3::new(0.0, 0.0, 1.0)],
                radius: 0.02,
            },
            64,
        );
        assert_closed(&tube);
        let cyl = mesh_from_primitive(
            &Geometry::Cylinder {
                radius: 0.02,
                length: 1.0,
            },
            64,
        )
        .unwrap();
        let rel = (tube.volume() - cyl.volume()).abs() / cyl.volume();
        assert!(rel < 0.005);
    }

    #[test]
    fn bent_tube_is_closed() {
        let spec = ProceduralSpec::SweptTube(TubeParams {
            points: vec![
                Vec3::zeros(),
                Vec3::new(0.0, 0.0, 0.3),
                Vec3::new(0.2, 0.0, 0.4),
                Vec3::new(0.2, 0.3, 0.4),
            ],
            radius: 0.01,
        });
        for p in spec.generate(32).unwrap() {
            assert_closed(&p.mesh);
        }
    }

    #[test]
    fn tube_rejects_degenerate_paths() {
        let one = ProceduralSpec::SweptTube(TubeParams {
            points: vec![Vec3::zeros()],
            radius: 0.01,
        });
        assert_eq!(one.validate().unwrap_err().code(), "invalid_params");
        let hairpin = ProceduralSpec::SweptTube(TubeParams {
            points: vec![Vec3::zeros(), Vec3::z(), Vec3::new(0.01, 0.0, 0.0)],
            radius: 0.01,
        });
        assert_eq!(hairpin.validate().unwrap_err().code(), "invalid_params");
    }
}
