use nalgebra::Vector3;

use super::{Camera, Quad, RenderedView, SceneGeometry, BACKGROUND, NEAR_PLANE};

/// Pixel window `[x0, x1) × [y0, y1)` being rasterized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rect {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl Rect {
    fn width(&self) -> usize {
        self.x1 - self.x0
    }

    fn height(&self) -> usize {
        self.y1 - self.y0
    }

    fn is_empty(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }
}

/// Inverse-depth and id buffers covering a [`Rect`]. Larger inverse depth is
/// closer; zero means nothing drawn.
struct Target {
    rect: Rect,
    inv_depth: Vec<f64>,
    ids: Vec<u32>,
}

impl Target {
    fn new(rect: Rect) -> Self {
        let n = rect.width() * rect.height();
        Self {
            rect,
            inv_depth: vec![0.0; n],
            ids: vec![BACKGROUND; n],
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ScreenVertex {
    x: f64,
    y: f64,
    inv_z: f64,
}

/// Clips a view-space polygon to `z >= NEAR_PLANE`.
fn clip_near(poly: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let a_in = a.z >= NEAR_PLANE;
        let b_in = b.z >= NEAR_PLANE;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            out.push(near_crossing(a, b));
        }
    }
    out
}

/// Near-plane crossing of segment `ab`, computed identically for `ab` and
/// `ba` so polygons sharing an edge stay watertight.
fn near_crossing(a: Vector3<f64>, b: Vector3<f64>) -> Vector3<f64> {
    let (p, q) = if (a.x, a.y, a.z) <= (b.x, b.y, b.z) {
        (a, b)
    } else {
        (b, a)
    };
    let s = (NEAR_PLANE - p.z) / (q.z - p.z);
    let mut v = p + (q - p) * s;
    v.z = NEAR_PLANE;
    v
}

/// Edge function `(b - a) × (p - a)`, evaluated so that `edge(a, b, p)` is
/// exactly `-edge(b, a, p)`.
#[inline]
fn edge(a: &ScreenVertex, b: &ScreenVertex, px: f64, py: f64) -> f64 {
    if (a.x, a.y) <= (b.x, b.y) {
        (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
    } else {
        -((a.x - b.x) * (py - b.y) - (a.y - b.y) * (px - b.x))
    }
}

/// Tie rule for pixel centers exactly on an edge. Exactly one of the two
/// directions of any non-degenerate edge owns it.
#[inline]
fn owns_edge(a: &ScreenVertex, b: &ScreenVertex) -> bool {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    dy > 0.0 || (dy == 0.0 && dx < 0.0)
}

#[inline]
fn covers(w: f64, owned: bool) -> bool {
    w > 0.0 || (w == 0.0 && owned)
}

fn draw_triangle(target: &mut Target, v0: ScreenVertex, v1: ScreenVertex, v2: ScreenVertex, id: u32) {
    let mut v = [v0, v1, v2];
    let mut area = edge(&v[0], &v[1], v[2].x, v[2].y);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    if area < 0.0 {
        v.swap(1, 2);
        area = -area;
    }
    let rect = target.rect;
    let min_x = v[0].x.min(v[1].x).min(v[2].x);
    let max_x = v[0].x.max(v[1].x).max(v[2].x);
    let min_y = v[0].y.min(v[1].y).min(v[2].y);
    let max_y = v[0].y.max(v[1].y).max(v[2].y);
    // Pixel i is a candidate when its center i + 0.5 lies in [min, max].
    let lo = |m: f64, floor: usize| ((m - 0.5).ceil().max(floor as f64)) as usize;
    let hi = |m: f64, ceil: usize| (((m - 0.5).floor() + 1.0).min(ceil as f64).max(0.0)) as usize;
    let (i0, i1) = (lo(min_x, rect.x0), hi(max_x, rect.x1));
    let (j0, j1) = (lo(min_y, rect.y0), hi(max_y, rect.y1));
    if i0 >= i1 || j0 >= j1 {
        return;
    }
    let own0 = owns_edge(&v[1], &v[2]);
    let own1 = owns_edge(&v[2], &v[0]);
    let own2 = owns_edge(&v[0], &v[1]);
    let stride = rect.width();
    for j in j0..j1 {
        let py = j as f64 + 0.5;
        let row = (j - rect.y0) * stride;
        for i in i0..i1 {
            let px = i as f64 + 0.5;
            let w0 = edge(&v[1], &v[2], px, py);
            if !covers(w0, own0) {
                continue;
            }
            let w1 = edge(&v[2], &v[0], px, py);
            if !covers(w1, own1) {
                continue;
            }
            let w2 = edge(&v[0], &v[1], px, py);
            if !covers(w2, own2) {
                continue;
            }
            let inv_z = (w0 * v[0].inv_z + w1 * v[1].inv_z + w2 * v[2].inv_z) / area;
            let k = row + (i - rect.x0);
            if inv_z > target.inv_depth[k] {
                target.inv_depth[k] = inv_z;
                target.ids[k] = id;
            }
        }
    }
}

/// Near-clipped, projected outline of a quad.
fn screen_polygon(camera: &Camera, quad: &Quad) -> Vec<ScreenVertex> {
    let view: [Vector3<f64>; 4] = quad.0.map(|p| camera.to_view(&p));
    if view.iter().all(|v| v.z < NEAR_PLANE) {
        return Vec::new();
    }
    let clipped = if view.iter().all(|v| v.z >= NEAR_PLANE) {
        view.to_vec()
    } else {
        clip_near(&view)
    };
    clipped
        .iter()
        .map(|v| {
            let (x, y) = camera.project(v);
            ScreenVertex {
                x,
                y,
                inv_z: 1.0 / v.z,
            }
        })
        .collect()
}

fn draw_polygon(target: &mut Target, poly: &[ScreenVertex], id: u32) {
    for k in 1..poly.len().saturating_sub(1) {
        draw_triangle(target, poly[0], poly[k], poly[k + 1], id);
    }
}

fn draw_scene(camera: &Camera, geometry: &SceneGeometry, target: &mut Target) {
    for quad in &geometry.occluders {
        let poly = screen_polygon(camera, quad);
        draw_polygon(target, &poly, BACKGROUND);
    }
    for face in &geometry.faces {
        if face.faces(&camera.origin) {
            let poly = screen_polygon(camera, &face.quad);
            draw_polygon(target, &poly, face.slot);
        }
    }
}

/// Renders the full image.
pub fn render(camera: &Camera, geometry: &SceneGeometry) -> RenderedView {
    let rect = Rect {
        x0: 0,
        y0: 0,
        x1: camera.width,
        y1: camera.height,
    };
    let mut target = Target::new(rect);
    draw_scene(camera, geometry, &mut target);
    RenderedView {
        width: camera.width,
        height: camera.height,
        id_buffer: target.ids,
        depth_buffer: target
            .inv_depth
            .iter()
            .map(|&w| if w > 0.0 { 1.0 / w } else { f64::INFINITY })
            .collect(),
        faces: geometry.table.clone(),
    }
}

/// Smallest pixel window containing every pixel center an unculled actor
/// face could cover.
fn actor_window(camera: &Camera, geometry: &SceneGeometry) -> Option<Rect> {
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for face in &geometry.faces {
        if !face.faces(&camera.origin) {
            continue;
        }
        for v in screen_polygon(camera, &face.quad) {
            min_x = min_x.min(v.x);
            max_x = max_x.max(v.x);
            min_y = min_y.min(v.y);
            max_y = max_y.max(v.y);
        }
    }
    if min_x.is_nan() || max_x.is_nan() || min_x > max_x {
        return None;
    }
    let lo = |m: f64, n: usize| ((m - 0.5).ceil().clamp(0.0, n as f64)) as usize;
    let hi = |m: f64, n: usize| (((m - 0.5).floor() + 1.0).clamp(0.0, n as f64)) as usize;
    let rect = Rect {
        x0: lo(min_x, camera.width),
        x1: hi(max_x, camera.width),
        y0: lo(min_y, camera.height),
        y1: hi(max_y, camera.height),
    };
    (!rect.is_empty()).then_some(rect)
}

/// Per-slot pixel counts, identical to counting [`render`]'s id buffer but
/// only rasterizing the window that actor faces can reach. Sorted by slot.
pub fn face_counts(camera: &Camera, geometry: &SceneGeometry) -> Vec<(u32, u64)> {
    let Some(rect) = actor_window(camera, geometry) else {
        return Vec::new();
    };
    let mut target = Target::new(rect);
    draw_scene(camera, geometry, &mut target);
    let mut counts = vec![0u64; geometry.table.len()];
    for &id in &target.ids {
        if id != BACKGROUND {
            counts[id as usize] += 1;
        }
    }
    counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(slot, c)| (slot as u32, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{FaceTable, RenderScale};
    use crate::scene::{CameraIntrinsics, CameraPose};

    fn sv(x: f64, y: f64) -> ScreenVertex {
        ScreenVertex { x, y, inv_z: 1.0 }
    }

    #[test]
    fn edge_is_antisymmetric() {
        let a = sv(0.3, 1.7);
        let b = sv(5.1, -2.9);
        for (px, py) in [(0.5, 0.5), (3.25, 7.5), (-1.0, 2.0)] {
            assert_eq!(edge(&a, &b, px, py), -edge(&b, &a, px, py));
        }
        assert!(owns_edge(&a, &b) != owns_edge(&b, &a));
        let h = sv(4.0, 1.7);
        assert!(owns_edge(&a, &h) != owns_edge(&h, &a));
    }

    #[test]
    fn shared_edge_pixels_drawn_once() {
        // Square split along a diagonal that passes through pixel centers.
        let rect = Rect {
            x0: 0,
            y0: 0,
            x1: 8,
            y1: 8,
        };
        let mut first = Target::new(rect);
        let mut second = Target::new(rect);
        let (a, b, c, d) = (sv(0.5, 0.5), sv(6.5, 0.5), sv(6.5, 6.5), sv(0.5, 6.5));
        draw_triangle(&mut first, a, b, c, 1);
        draw_triangle(&mut second, a, c, d, 2);
        let mut union = 0;
        for k in 0..64 {
            let hit1 = first.ids[k] != BACKGROUND;
            let hit2 = second.ids[k] != BACKGROUND;
            assert!(!(hit1 && hit2), "pixel {k} drawn twice");
            union += (hit1 || hit2) as usize;
        }
        // centers 0.5..=6.5 on a closed square, minus the two non-owned sides
        assert_eq!(union, 36);
    }

    #[test]
    fn near_crossing_is_direction_independent() {
        let a = Vector3::new(0.3, -1.2, -2.0);
        let b = Vector3::new(1.7, 0.4, 3.0);
        assert_eq!(near_crossing(a, b), near_crossing(b, a));
        assert_eq!(near_crossing(a, b).z, NEAR_PLANE);
    }

    #[test]
    fn empty_scene_renders_background() {
        let cam = Camera::new(
            &CameraPose {
                position: Vector3::new(0.0, 0.0, 5.0),
                yaw: 0.0,
                pitch: 0.0,
            },
            &CameraIntrinsics {
                focal_px: 50.0,
                width_px: 40,
                height_px: 30,
            },
            RenderScale::FULL,
        );
        let geometry = SceneGeometry {
            occluders: vec![],
            faces: vec![],
            table: FaceTable::new(&[]),
        };
        let view = render(&cam, &geometry);
        assert_eq!(view.background_count(), 1200);
        assert!(view.depth_buffer.iter().all(|d| d.is_infinite()));
        assert!(face_counts(&cam, &geometry).is_empty());
    }
}
