//! Deterministic CPU rendering of face-identified views.
//!
//! Every pixel is sampled once at its center. Height-map cells are drawn as
//! extruded boxes that only occlude; actor cylinders are drawn as one quad per
//! side face, each tagged with its [`FaceId`]. Counting the pixels owned by a
//! face and dividing by its area gives the face's pixel density.
//!
//! [`raycast_reference`] computes the same per-face counts by casting one ray
//! per pixel and is used to check the rasterizer.

mod cache;
mod image;
mod rasterizer;
mod raycast;

use std::collections::BTreeMap;

use nalgebra::Vector3;

use crate::scene::{ActorTrack, CameraIntrinsics, CameraPose, HeightMap};

pub use cache::ViewEvaluator;
pub use image::{face_color, write_depth_pgm, write_id_ppm};
pub use rasterizer::{face_counts, render};
pub use raycast::raycast_reference;

/// Surfaces closer than this along the optical axis are clipped.
pub const NEAR_PLANE: f64 = 0.01;

/// Marker for pixels not owned by any actor face.
pub const BACKGROUND: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceId {
    pub actor_id: u32,
    pub face_index: u32,
}

/// Resolution multiplier in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderScale(f64);

impl RenderScale {
    pub const FULL: RenderScale = RenderScale(1.0);
    pub const PLANNING: RenderScale = RenderScale(0.25);

    pub fn new(scale: f64) -> Option<Self> {
        (scale > 0.0 && scale <= 1.0).then_some(Self(scale))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Scaled image dimension, `⌈s·n⌉`.
    pub fn pixels(self, native: u32) -> usize {
        // Guard against products like 0.1 * 4000 landing a hair above an integer.
        let v = self.0 * native as f64;
        let r = v.round();
        let n = if (v - r).abs() <= 1e-9 * v.max(1.0) { r } else { v.ceil() };
        (n as usize).max(1)
    }

    /// Factor converting scaled pixel counts to native-resolution counts.
    pub fn count_factor(self) -> f64 {
        1.0 / (self.0 * self.0)
    }
}

impl Default for RenderScale {
    fn default() -> Self {
        Self::PLANNING
    }
}

/// Dense numbering of every actor face. Slot order is `(actor_id, face_index)`,
/// which is also the draw order.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceTable {
    offsets: Vec<u32>,
    ids: Vec<FaceId>,
    areas: Vec<f64>,
}

impl FaceTable {
    /// `actors` must be sorted by id.
    pub fn new(actors: &[ActorTrack]) -> Self {
        let mut offsets = Vec::with_capacity(actors.len());
        let mut ids = Vec::new();
        let mut areas = Vec::new();
        for actor in actors {
            offsets.push(ids.len() as u32);
            let area = actor.model.face_area();
            for face_index in 0..actor.model.num_side_faces {
                ids.push(FaceId {
                    actor_id: actor.id,
                    face_index,
                });
                areas.push(area);
            }
        }
        Self {
            offsets,
            ids,
            areas,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, slot: u32) -> FaceId {
        self.ids[slot as usize]
    }

    pub fn area(&self, slot: u32) -> f64 {
        self.areas[slot as usize]
    }

    pub fn slot(&self, id: FaceId) -> Option<u32> {
        self.ids.binary_search(&id).ok().map(|s| s as u32)
    }

    pub fn slot_of(&self, actor_index: usize, face_index: u32) -> u32 {
        self.offsets[actor_index] + face_index
    }
}

/// Pinhole camera with the principal point at the image center. View space
/// is `(right, up, forward)`; image rows grow downward.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub origin: Vector3<f64>,
    pub forward: Vector3<f64>,
    pub right: Vector3<f64>,
    pub up: Vector3<f64>,
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn new(pose: &CameraPose, intrinsics: &CameraIntrinsics, scale: RenderScale) -> Self {
        let (sy, cy) = pose.yaw.sin_cos();
        let (sp, cp) = pose.pitch.sin_cos();
        let forward = Vector3::new(cp * cy, cp * sy, sp);
        let right = Vector3::new(sy, -cy, 0.0);
        let up = right.cross(&forward);
        let width = scale.pixels(intrinsics.width_px);
        let height = scale.pixels(intrinsics.height_px);
        Self {
            origin: pose.position,
            forward,
            right,
            up,
            focal: intrinsics.focal_px * scale.get(),
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    pub fn to_view(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let d = p - self.origin;
        Vector3::new(d.dot(&self.right), d.dot(&self.up), d.dot(&self.forward))
    }

    /// Image coordinates of a view-space point with positive depth.
    pub fn project(&self, v: &Vector3<f64>) -> (f64, f64) {
        (
            self.cx + self.focal * v.x / v.z,
            self.cy - self.focal * v.y / v.z,
        )
    }

    /// World-space direction through the center of pixel `(i, j)`.
    pub fn pixel_ray(&self, i: usize, j: usize) -> Vector3<f64> {
        let a = (i as f64 + 0.5 - self.cx) / self.focal;
        let b = (self.cy - (j as f64 + 0.5)) / self.focal;
        self.forward + self.right * a + self.up * b
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// A planar rectangle given by its corners in perimeter order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad(pub [Vector3<f64>; 4]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActorFace {
    pub slot: u32,
    pub quad: Quad,
    /// Outward horizontal unit normal.
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl ActorFace {
    /// Back-face test shared by every renderer.
    pub fn faces(&self, eye: &Vector3<f64>) -> bool {
        self.normal.dot(eye) - self.offset > 0.0
    }
}

/// Surfaces of the height map: the top of every raised cell plus the exposed
/// part of each side wall. Walls shared with an equally tall or taller
/// neighbor are omitted, so the surface is closed apart from its floor.
pub fn occluder_quads(map: &HeightMap) -> Vec<Quad> {
    let cs = map.cell_size();
    let neighbor = |x: i64, y: i64| -> f64 {
        if map.contains(x, y) {
            map.height(x as usize, y as usize)
        } else {
            0.0
        }
    };
    let mut quads = Vec::new();
    for y in 0..map.rows() {
        for x in 0..map.cols() {
            let h = map.height(x, y);
            if h <= 0.0 {
                continue;
            }
            let (x0, x1) = (x as f64 * cs, (x + 1) as f64 * cs);
            let (y0, y1) = (y as f64 * cs, (y + 1) as f64 * cs);
            let v = |px: f64, py: f64, pz: f64| Vector3::new(px, py, pz);
            quads.push(Quad([v(x0, y0, h), v(x1, y0, h), v(x1, y1, h), v(x0, y1, h)]));
            let (xi, yi) = (x as i64, y as i64);
            let west = neighbor(xi - 1, yi);
            if west < h {
                quads.push(Quad([v(x0, y1, west), v(x0, y0, west), v(x0, y0, h), v(x0, y1, h)]));
            }
            let east = neighbor(xi + 1, yi);
            if east < h {
                quads.push(Quad([v(x1, y0, east), v(x1, y1, east), v(x1, y1, h), v(x1, y0, h)]));
            }
            let south = neighbor(xi, yi - 1);
            if south < h {
                quads.push(Quad([v(x0, y0, south), v(x1, y0, south), v(x1, y0, h), v(x0, y0, h)]));
            }
            let north = neighbor(xi, yi + 1);
            if north < h {
                quads.push(Quad([v(x1, y1, north), v(x0, y1, north), v(x0, y1, h), v(x1, y1, h)]));
            }
        }
    }
    quads
}

/// Side faces of every actor at timestep `t`, in slot order.
pub fn actor_faces(actors: &[ActorTrack], t: usize, table: &FaceTable) -> Vec<ActorFace> {
    let mut faces = Vec::with_capacity(table.len());
    for (a, actor) in actors.iter().enumerate() {
        let pose = &actor.poses[t];
        let n = actor.model.num_side_faces;
        let step = std::f64::consts::TAU / n as f64;
        let (base, top) = (pose.position.z, pose.position.z + actor.model.height);
        let ring: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let ang = pose.yaw + step * k as f64;
                (
                    pose.position.x + actor.model.radius * ang.cos(),
                    pose.position.y + actor.model.radius * ang.sin(),
                )
            })
            .collect();
        for k in 0..n {
            let (ax, ay) = ring[k as usize];
            let (bx, by) = ring[((k + 1) % n) as usize];
            let mid = pose.yaw + step * (k as f64 + 0.5);
            let normal = Vector3::new(mid.cos(), mid.sin(), 0.0);
            let quad = Quad([
                Vector3::new(ax, ay, base),
                Vector3::new(bx, by, base),
                Vector3::new(bx, by, top),
                Vector3::new(ax, ay, top),
            ]);
            faces.push(ActorFace {
                slot: table.slot_of(a, k),
                quad,
                normal,
                offset: normal.dot(&quad.0[0]),
            });
        }
    }
    faces
}

/// Everything drawn for one timestep.
#[derive(Debug, Clone)]
pub struct SceneGeometry {
    pub occluders: Vec<Quad>,
    pub faces: Vec<ActorFace>,
    pub table: FaceTable,
}

impl SceneGeometry {
    /// `actors` must be sorted by id and carry a pose for timestep `t`.
    pub fn new(map: &HeightMap, actors: &[ActorTrack], t: usize) -> Self {
        let table = FaceTable::new(actors);
        Self {
            occluders: occluder_quads(map),
            faces: actor_faces(actors, t, &table),
            table,
        }
    }
}

/// Per-pixel face ownership and depth for one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedView {
    pub width: usize,
    pub height: usize,
    /// Face slot per pixel, or [`BACKGROUND`].
    pub id_buffer: Vec<u32>,
    /// Distance along the optical axis; infinite where nothing was drawn.
    pub depth_buffer: Vec<f64>,
    pub faces: FaceTable,
}

impl RenderedView {
    pub fn id_at(&self, x: usize, y: usize) -> Option<FaceId> {
        match self.id_buffer[y * self.width + x] {
            BACKGROUND => None,
            slot => Some(self.faces.id(slot)),
        }
    }

    pub fn face_counts(&self) -> BTreeMap<FaceId, u64> {
        let mut counts = BTreeMap::new();
        for &slot in &self.id_buffer {
            if slot != BACKGROUND {
                *counts.entry(self.faces.id(slot)).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn background_count(&self) -> u64 {
        self.id_buffer.iter().filter(|&&s| s == BACKGROUND).count() as u64
    }
}

/// Scaled pixel count of each visible face divided by the face area (px/m²).
/// Faces without pixels are omitted.
pub fn pixel_densities(
    view: &RenderedView,
    actors: &[ActorTrack],
    scale: RenderScale,
) -> BTreeMap<FaceId, f64> {
    let factor = scale.count_factor();
    view.face_counts()
        .into_iter()
        .filter_map(|(id, count)| {
            let actor = actors.iter().find(|a| a.id == id.actor_id)?;
            Some((id, count as f64 * factor / actor.model.face_area()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{ActorModel, ActorPose};

    fn actor(id: u32, x: f64, y: f64) -> ActorTrack {
        ActorTrack {
            id,
            model: ActorModel {
                radius: 0.5,
                height: 1.8,
                num_side_faces: 8,
            },
            poses: vec![ActorPose {
                position: Vector3::new(x, y, 0.0),
                yaw: 0.0,
            }],
        }
    }

    #[test]
    fn scaled_dimensions() {
        let s = RenderScale::new(0.1).unwrap();
        assert_eq!(s.pixels(4000), 400);
        assert_eq!(s.pixels(3000), 300);
        assert_eq!(RenderScale::new(0.25).unwrap().pixels(4001), 1001);
        assert_eq!(RenderScale::FULL.pixels(7), 7);
        assert!(RenderScale::new(0.0).is_none());
        assert!(RenderScale::new(1.5).is_none());
        assert_eq!(RenderScale::new(0.5).unwrap().count_factor(), 4.0);
    }

    #[test]
    fn camera_basis_is_orthonormal() {
        let pose = CameraPose {
            position: Vector3::new(1.0, 2.0, 5.0),
            yaw: 0.7,
            pitch: -0.2,
        };
        let cam = Camera::new(&pose, &CameraIntrinsics::default(), RenderScale::FULL);
        for (a, b) in [
            (cam.forward, cam.right),
            (cam.forward, cam.up),
            (cam.right, cam.up),
        ] {
            assert!(a.dot(&b).abs() < 1e-12);
        }
        assert!((cam.up.norm() - 1.0).abs() < 1e-12);
        assert!(cam.up.z > 0.0);
        let ahead = pose.position + cam.forward * 3.0;
        let (px, py) = cam.project(&cam.to_view(&ahead));
        assert!((px - 2000.0).abs() < 1e-9 && (py - 1500.0).abs() < 1e-9);
    }

    #[test]
    fn face_table_slots() {
        let table = FaceTable::new(&[actor(2, 0.0, 0.0), actor(7, 0.0, 0.0)]);
        assert_eq!(table.len(), 16);
        assert_eq!(table.slot_of(1, 3), 11);
        assert_eq!(
            table.id(11),
            FaceId {
                actor_id: 7,
                face_index: 3
            }
        );
        assert_eq!(
            table.slot(FaceId {
                actor_id: 2,
                face_index: 5
            }),
            Some(5)
        );
    }

    #[test]
    fn actor_faces_point_outward() {
        let actors = [actor(0, 3.0, 4.0)];
        let table = FaceTable::new(&actors);
        let center = Vector3::new(3.0, 4.0, 0.9);
        for face in actor_faces(&actors, 0, &table) {
            assert!(!face.faces(&center));
            assert!(face.faces(&(center + face.normal * 10.0)));
            let width = (face.quad.0[1] - face.quad.0[0]).norm();
            assert!((width * 1.8 - actors[0].model.face_area()).abs() < 1e-12);
        }
    }

    #[test]
    fn occluders_skip_shared_walls() {
        let map = HeightMap::new(2, 1, 1.0, vec![3.0, 3.0]).unwrap();
        // two tops plus six exposed walls
        assert_eq!(occluder_quads(&map).len(), 8);
        let stepped = HeightMap::new(2, 1, 1.0, vec![3.0, 1.0]).unwrap();
        assert_eq!(occluder_quads(&stepped).len(), 9);
        assert!(occluder_quads(&HeightMap::flat(3, 3, 1.0).unwrap()).is_empty());
    }

    #[test]
    fn densities_divide_by_area() {
        let actors = [actor(0, 0.0, 0.0)];
        let table = FaceTable::new(&actors);
        let mut ids = vec![BACKGROUND; 1000];
        ids[..300].fill(2);
        let view = RenderedView {
            width: 100,
            height: 10,
            id_buffer: ids,
            depth_buffer: vec![f64::INFINITY; 1000],
            faces: table,
        };
        let area = actors[0].model.face_area();
        let d = pixel_densities(&view, &actors, RenderScale::FULL);
        let key = FaceId {
            actor_id: 0,
            face_index: 2,
        };
        assert!((d[&key] - 300.0 / area).abs() < 1e-9);
        assert_eq!(d.len(), 1);

        let empty = RenderedView {
            id_buffer: vec![BACKGROUND; 1000],
            ..view
        };
        assert!(pixel_densities(&empty, &actors, RenderScale::FULL).is_empty());
    }
}
