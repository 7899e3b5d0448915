use std::collections::BTreeMap;

use nalgebra::Vector3;

use super::{Camera, FaceId, Quad, SceneGeometry, NEAR_PLANE};

/// Ray parameter of the hit between `origin + t·dir` and a rectangle, if any.
fn intersect(origin: &Vector3<f64>, dir: &Vector3<f64>, quad: &Quad) -> Option<f64> {
    let [c0, c1, _, c3] = quad.0;
    let e1 = c1 - c0;
    let e3 = c3 - c0;
    let n = e1.cross(&e3);
    let denom = n.dot(dir);
    if denom == 0.0 {
        return None;
    }
    let t = n.dot(&(c0 - origin)) / denom;
    if t.is_nan() || t <= 0.0 {
        return None;
    }
    let q = origin + dir * t - c0;
    let u = q.dot(&e1) / e1.norm_squared();
    let v = q.dot(&e3) / e3.norm_squared();
    ((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v)).then_some(t)
}

/// Per-face pixel counts obtained by casting one ray through each pixel
/// center and keeping the nearest hit. Surfaces are tested in draw order and
/// only a strictly closer hit replaces the current one. The background tally
/// is returned under `None`.
pub fn raycast_reference(camera: &Camera, geometry: &SceneGeometry) -> BTreeMap<Option<FaceId>, u64> {
    let faces: Vec<_> = geometry
        .faces
        .iter()
        .filter(|f| f.faces(&camera.origin))
        .collect();
    let mut tally = BTreeMap::new();
    for j in 0..camera.height {
        for i in 0..camera.width {
            let dir = camera.pixel_ray(i, j);
            let axial = dir.dot(&camera.forward);
            let mut best = f64::INFINITY;
            let mut owner = None;
            let surfaces = geometry
                .occluders
                .iter()
                .map(|q| (q, None))
                .chain(faces.iter().map(|f| (&f.quad, Some(f.slot))));
            for (quad, slot) in surfaces {
                if let Some(t) = intersect(&camera.origin, &dir, quad) {
                    if t * axial >= NEAR_PLANE && t < best {
                        best = t;
                        owner = slot;
                    }
                }
            }
            *tally
                .entry(owner.map(|s| geometry.table.id(s)))
                .or_insert(0) += 1;
        }
    }
    tally
}
