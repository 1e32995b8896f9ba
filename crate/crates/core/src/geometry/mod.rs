//! Parametric 2.5-D antenna scenes.
//!
//! A scene is an ordered list of primitives on three layers: the top metal
//! sheet at `z = h`, the substrate volume `0 <= z <= h`, and the ground
//! sheet at `z = 0`. Additive and subtractive primitives are applied in list
//! order, and a subtraction only removes material on its own layer. All
//! coordinates are millimeters.

mod io;
mod shape;
mod voxel;

use serde::{Deserialize, Serialize};

pub use io::{read_grid, read_scene, write_grid, write_scene, write_stl};
pub use shape::{normalize_degrees, Point2, Shape};
pub use voxel::{voxelize, Axis, MaterialGrid, MetalSheet, PortSpan, VoxelOptions};

use crate::design::SubstrateSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    TopMetal,
    Substrate,
    GroundMetal,
    /// Free-standing conductors (wires) that are not tied to a board layer.
    Volume,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Additive,
    Subtractive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Material {
    Pec,
    Dielectric { relative_permittivity: f64, loss_tangent: f64 },
    Vacuum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    pub layer: Layer,
    pub operation: Operation,
    pub material: Material,
}

impl Primitive {
    pub fn metal(shape: Shape, layer: Layer) -> Self {
        Primitive { shape, layer, operation: Operation::Additive, material: Material::Pec }
    }

    pub fn cut(shape: Shape, layer: Layer) -> Self {
        Primitive { shape, layer, operation: Operation::Subtractive, material: Material::Vacuum }
    }

    fn rotated(&self, center: Point2, deg: f64) -> Self {
        Primitive { shape: self.shape.rotated(center, deg), ..self.clone() }
    }

    fn translated(&self, d: Point2) -> Self {
        Primitive { shape: self.shape.translated(d), ..self.clone() }
    }
}

/// Dimensions of one T-shaped slot and the spacing of the slot pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TSlotParams {
    /// Stem height below the bar.
    pub arm_mm: f64,
    /// Stem width.
    pub slot_width_mm: f64,
    /// Bar span.
    pub bar_length_mm: f64,
    /// Bar thickness.
    pub bar_breadth_mm: f64,
    /// Offset of each stem center from the patch's vertical axis.
    pub pair_separation_mm: f64,
    /// Distance from the patch top edge to the top of the bars.
    #[serde(default = "default_inset")]
    pub top_inset_mm: f64,
}

fn default_inset() -> f64 {
    0.3
}

impl TSlotParams {
    /// Optimized slot dimensions of the reference array.
    pub fn table1() -> Self {
        TSlotParams {
            arm_mm: 0.72,
            slot_width_mm: 0.4,
            bar_length_mm: 2.4,
            bar_breadth_mm: 0.48,
            pair_separation_mm: 2.16,
            top_inset_mm: 0.3,
        }
    }

    /// Reading of the slot as a 2.4 mm span and 1.84 mm total height.
    pub fn span_height_variant() -> Self {
        TSlotParams { arm_mm: 1.84 - 0.48, ..Self::table1() }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.arm_mm, self.slot_width_mm, self.bar_length_mm, self.bar_breadth_mm, self.pair_separation_mm];
        if vals.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::domain("T-slot dimensions must be positive"));
        }
        if self.slot_width_mm > self.bar_length_mm {
            return Err(Error::domain("T-slot stem is wider than its bar"));
        }
        if !(self.top_inset_mm >= 0.0) {
            return Err(Error::domain("T-slot inset must be non-negative"));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.bar_length_mm * self.bar_breadth_mm + self.slot_width_mm * self.arm_mm
    }

    /// T outline with the bar's top edge at `y_top`, centered on `cx`.
    pub fn outline(&self, cx: f64, y_top: f64) -> Shape {
        let (hl, hg) = (self.bar_length_mm / 2.0, self.slot_width_mm / 2.0);
        let yb = y_top - self.bar_breadth_mm;
        let ys = yb - self.arm_mm;
        Shape::Polygon {
            vertices: vec![
                [cx - hg, ys],
                [cx + hg, ys],
                [cx + hg, yb],
                [cx + hl, yb],
                [cx + hl, y_top],
                [cx - hl, y_top],
                [cx - hl, yb],
                [cx - hg, yb],
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationSchedule {
    /// Element `(r, c)` turns by `angle * ((r + c) mod 2)`: neighbors alternate.
    #[default]
    Checkerboard,
    /// Element `(r, c)` turns by `angle * (r * cols + c)`.
    Progressive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayParams {
    pub rows: usize,
    pub cols: usize,
    /// Gap between columns.
    pub gap_mm: f64,
    /// Gap between rows; the column gap is reused when absent.
    #[serde(default)]
    pub row_gap_mm: Option<f64>,
    pub element_rotation_deg: f64,
    #[serde(default)]
    pub schedule: RotationSchedule,
}

impl ArrayParams {
    pub fn table1() -> Self {
        ArrayParams {
            rows: 3,
            cols: 3,
            gap_mm: 2.2,
            row_gap_mm: None,
            element_rotation_deg: 90.0,
            schedule: RotationSchedule::Checkerboard,
        }
    }

    pub fn rotation_for(&self, row: usize, col: usize) -> f64 {
        let steps = match self.schedule {
            RotationSchedule::Checkerboard => (row + col) % 2,
            RotationSchedule::Progressive => row * self.cols + col,
        };
        normalize_degrees(self.element_rotation_deg * steps as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedParams {
    pub line_width_mm: f64,
    pub line_length_mm: f64,
    /// Clearance between the strip and the coplanar ground pads.
    pub coplanar_gap_mm: f64,
    /// Width of each coplanar ground pad; zero leaves a plain microstrip.
    #[serde(default)]
    pub pad_width_mm: f64,
}

impl FeedParams {
    pub fn table1() -> Self {
        FeedParams { line_width_mm: 0.80, line_length_mm: 2.77, coplanar_gap_mm: 0.3, pad_width_mm: 1.0 }
    }

    /// Shorter 0.78 mm feed reading.
    pub fn short_variant() -> Self {
        FeedParams { line_length_mm: 0.78, ..Self::table1() }
    }
}

/// Where the excitation sits. The port spans `length_mm` from `start_mm`
/// along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortPlacement {
    pub start_mm: [f64; 3],
    pub axis: Axis,
    pub length_mm: f64,
    pub resistance_ohms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstrateBlock {
    pub spec: SubstrateSpec,
    pub min: Point2,
    pub max: Point2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoundingBox {
    pub fn size(&self) -> [f64; 3] {
        [self.max[0] - self.min[0], self.max[1] - self.min[1], self.max[2] - self.min[2]]
    }
}

/// Placement record of one tiled element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementInfo {
    pub row: usize,
    pub col: usize,
    pub center: Point2,
    pub rotation_deg: f64,
    pub min: Point2,
    pub max: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub units: String,
    #[serde(default)]
    pub substrate: Option<SubstrateBlock>,
    pub primitives: Vec<Primitive>,
    pub bbox: BoundingBox,
    #[serde(default)]
    pub port: Option<PortPlacement>,
    #[serde(default)]
    pub elements: Vec<ElementInfo>,
}

/// One antenna element before tiling, centered at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementFragment {
    pub primitives: Vec<Primitive>,
    pub outline: Shape,
}

impl ElementFragment {
    pub fn width(&self) -> f64 {
        let (a, b) = self.outline.bbox();
        b[0] - a[0]
    }

    pub fn length(&self) -> f64 {
        let (a, b) = self.outline.bbox();
        b[1] - a[1]
    }

    pub fn conductor_area(&self) -> f64 {
        signed_layer_area(&self.primitives, Layer::TopMetal)
    }
}

fn signed_layer_area(prims: &[Primitive], layer: Layer) -> f64 {
    prims
        .iter()
        .filter(|p| p.layer == layer && (p.operation == Operation::Subtractive || p.material != Material::Vacuum))
        .map(|p| match p.operation {
            Operation::Additive => p.shape.area(),
            Operation::Subtractive => -p.shape.area(),
        })
        .sum()
}

/// Rectangular copper patch, `width_mm` along x and `length_mm` along y.
pub fn build_patch_element(length_mm: f64, width_mm: f64) -> Result<ElementFragment> {
    if !(length_mm > 0.0 && width_mm > 0.0) || !length_mm.is_finite() || !width_mm.is_finite() {
        return Err(Error::domain(format!(
            "patch dimensions {length_mm} x {width_mm} mm must be positive"
        )));
    }
    let outline = Shape::rect_centered([0.0, 0.0], width_mm, length_mm);
    Ok(ElementFragment {
        primitives: vec![Primitive::metal(outline.clone(), Layer::TopMetal)],
        outline,
    })
}

/// Cuts the two T-slots out of the patch top region.
pub fn apply_double_t_slots(element: ElementFragment, t: &TSlotParams) -> Result<ElementFragment> {
    t.validate()?;
    let (lo, hi) = element.outline.bbox();
    let cx = (lo[0] + hi[0]) / 2.0;
    let y_top = hi[1] - t.top_inset_mm;
    let left = t.outline(cx - t.pair_separation_mm, y_top);
    let right = t.outline(cx + t.pair_separation_mm, y_top);
    for s in [&left, &right] {
        if !element.outline.bbox_contains(s, 1e-12) {
            return Err(Error::geometry("T-slot extends outside the patch"));
        }
    }
    let (_, l1) = left.bbox();
    let (r0, _) = right.bbox();
    if l1[0] > r0[0] {
        return Err(Error::geometry("T-slots overlap"));
    }
    let mut out = element;
    out.primitives.push(Primitive::cut(left, Layer::TopMetal));
    out.primitives.push(Primitive::cut(right, Layer::TopMetal));
    Ok(out)
}

/// Lays out `rows x cols` copies of `element` and returns the resulting scene.
pub fn tile_array(element: &ElementFragment, a: &ArrayParams) -> Result<Scene> {
    if a.rows == 0 || a.cols == 0 {
        return Err(Error::domain("array needs at least one row and one column"));
    }
    let row_gap = a.row_gap_mm.unwrap_or(a.gap_mm);
    if !(a.gap_mm >= 0.0) || !(row_gap >= 0.0) {
        return Err(Error::domain("array gap must be non-negative"));
    }
    let (w, l) = (element.width(), element.length());
    let pitch = [w + a.gap_mm, l + row_gap];
    let mut primitives = Vec::new();
    let mut elements = Vec::new();
    for r in 0..a.rows {
        for c in 0..a.cols {
            let center = [
                (c as f64 - (a.cols as f64 - 1.0) / 2.0) * pitch[0],
                (r as f64 - (a.rows as f64 - 1.0) / 2.0) * pitch[1],
            ];
            let rot = a.rotation_for(r, c);
            for p in &element.primitives {
                primitives.push(p.translated(center).rotated(center, rot));
            }
            let (min, max) = element.outline.translated(center).rotated(center, rot).bbox();
            elements.push(ElementInfo { row: r, col: c, center, rotation_deg: rot, min, max });
        }
    }
    for (i, e) in elements.iter().enumerate() {
        for f in &elements[i + 1..] {
            if boxes_overlap(e.min, e.max, f.min, f.max) {
                return Err(Error::geometry(format!(
                    "elements ({}, {}) and ({}, {}) overlap",
                    e.row, e.col, f.row, f.col
                )));
            }
        }
    }
    let mut scene = Scene {
        units: "mm".into(),
        substrate: None,
        primitives,
        bbox: BoundingBox { min: [0.0; 3], max: [0.0; 3] },
        port: None,
        elements,
    };
    scene.recompute_bbox();
    Ok(scene)
}

fn boxes_overlap(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> bool {
    let eps = 1e-12;
    a0[0] < b1[0] - eps && b0[0] < a1[0] - eps && a0[1] < b1[1] - eps && b0[1] < a1[1] - eps
}

/// Adds the feed strip below the bottom-center element, the optional
/// coplanar ground pads, and the port at the strip's outer end.
pub fn add_feed(mut scene: Scene, f: &FeedParams) -> Result<Scene> {
    if !(f.line_width_mm > 0.0 && f.line_length_mm > 0.0 && f.coplanar_gap_mm > 0.0) || !(f.pad_width_mm >= 0.0) {
        return Err(Error::domain("feed dimensions must be positive"));
    }
    let min_row = scene.elements.iter().map(|e| e.row).min().ok_or_else(|| Error::geometry("scene has no elements to feed"))?;
    let max_col = scene.elements.iter().map(|e| e.col).max().unwrap_or(0);
    let target = *scene
        .elements
        .iter()
        .find(|e| e.row == min_row && e.col == max_col / 2)
        .ok_or_else(|| Error::geometry("no bottom-center element"))?;
    let xc = target.center[0];
    let y_top = target.min[1];
    let y_end = y_top - f.line_length_mm;
    let hw = f.line_width_mm / 2.0;
    let strip = Shape::Rect { min: [xc - hw, y_end], max: [xc + hw, y_top] };
    let mut added = vec![Primitive::metal(strip.clone(), Layer::TopMetal)];
    if f.pad_width_mm > 0.0 {
        let x_in = hw + f.coplanar_gap_mm;
        let y_pad_top = y_top - f.coplanar_gap_mm;
        if y_pad_top > y_end {
            for sign in [-1.0, 1.0] {
                let (a, b) = (xc + sign * x_in, xc + sign * (x_in + f.pad_width_mm));
                added.push(Primitive::metal(
                    Shape::Rect { min: [a.min(b), y_end], max: [a.max(b), y_pad_top] },
                    Layer::TopMetal,
                ));
            }
        }
    }
    for p in &added {
        let (a0, a1) = p.shape.bbox();
        for e in &scene.elements {
            let attached = e.row == target.row && e.col == target.col;
            if attached && p.shape == strip {
                continue;
            }
            if boxes_overlap(a0, a1, e.min, e.max) {
                return Err(Error::geometry(format!(
                    "feed overlaps element ({}, {})",
                    e.row, e.col
                )));
            }
        }
    }
    scene.primitives.extend(added);
    let h = scene.substrate.map(|s| s.spec.height_mm).unwrap_or(0.0);
    scene.port = Some(PortPlacement {
        start_mm: [xc, y_end, 0.0],
        axis: Axis::Z,
        length_mm: h,
        resistance_ohms: 50.0,
    });
    scene.recompute_bbox();
    Ok(scene)
}

/// Covers the ground layer with a PEC sheet and cuts one scaled T-aperture
/// under the array center.
pub fn add_ground_with_rear_slot(mut scene: Scene, slot: &TSlotParams, scale: f64) -> Result<Scene> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::domain(format!("slot scale {scale} must be positive")));
    }
    slot.validate()?;
    let (lo, hi) = (scene.bbox.min, scene.bbox.max);
    let ground = Shape::Rect { min: [lo[0], lo[1]], max: [hi[0], hi[1]] };
    let center = if scene.elements.is_empty() {
        [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0]
    } else {
        let n = scene.elements.len() as f64;
        let sx: f64 = scene.elements.iter().map(|e| e.center[0]).sum();
        let sy: f64 = scene.elements.iter().map(|e| e.center[1]).sum();
        [sx / n, sy / n]
    };
    let height = slot.bar_breadth_mm + slot.arm_mm;
    let t = slot.outline(center[0], center[1] + height / 2.0).scaled(center, scale);
    if !ground.bbox_contains(&t, 1e-12) {
        return Err(Error::geometry("rear slot exceeds the ground plane"));
    }
    scene.primitives.push(Primitive::metal(ground, Layer::GroundMetal));
    scene.primitives.push(Primitive::cut(t, Layer::GroundMetal));
    Ok(scene)
}

impl Scene {
    /// Scene with no primitives and a fixed bounding box.
    pub fn empty(min: [f64; 3], max: [f64; 3]) -> Scene {
        Scene {
            units: "mm".into(),
            substrate: None,
            primitives: Vec::new(),
            bbox: BoundingBox { min, max },
            port: None,
            elements: Vec::new(),
        }
    }

    /// Places the board under the current footprint; later footprint growth
    /// (feed) extends the substrate with it.
    pub fn with_substrate(mut self, spec: SubstrateSpec) -> Result<Scene> {
        spec.validate()?;
        self.substrate = Some(SubstrateBlock {
            spec,
            min: [self.bbox.min[0], self.bbox.min[1]],
            max: [self.bbox.max[0], self.bbox.max[1]],
        });
        self.recompute_bbox();
        Ok(self)
    }

    pub fn with_port(mut self, port: PortPlacement) -> Scene {
        self.port = Some(port);
        self
    }

    pub fn push(&mut self, p: Primitive) {
        self.primitives.push(p);
    }

    /// Recomputes the footprint from the planar primitives (keeping the
    /// existing box when there are none) and stretches the substrate to it.
    pub fn recompute_bbox(&mut self) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut any = false;
        for p in self.primitives.iter().filter(|p| p.operation == Operation::Additive && p.shape.is_planar()) {
            let (a, b) = p.shape.bbox();
            for k in 0..2 {
                lo[k] = lo[k].min(a[k]);
                hi[k] = hi[k].max(b[k]);
            }
            any = true;
        }
        if let Some(s) = &self.substrate {
            for k in 0..2 {
                lo[k] = lo[k].min(s.min[k]);
                hi[k] = hi[k].max(s.max[k]);
            }
            any = true;
        }
        if any {
            self.bbox.min[0] = lo[0];
            self.bbox.min[1] = lo[1];
            self.bbox.max[0] = hi[0];
            self.bbox.max[1] = hi[1];
        }
        if let Some(s) = &mut self.substrate {
            s.min = lo;
            s.max = hi;
            self.bbox.min[2] = 0.0;
            self.bbox.max[2] = s.spec.height_mm;
        }
    }

    /// Net conductor area on a layer, assuming cuts lie inside metal and do
    /// not overlap each other (true for every builder in this module).
    pub fn conductor_area(&self, layer: Layer) -> f64 {
        signed_layer_area(&self.primitives, layer)
    }

    pub fn substrate_height_mm(&self) -> f64 {
        self.substrate.map(|s| s.spec.height_mm).unwrap_or(0.0)
    }

    /// Checks the structural invariants: primitives inside the bounding
    /// box, cuts preceded by material on the same layer, a single port.
    pub fn validate(&self) -> Result<()> {
        if self.units != "mm" {
            return Err(Error::Format(format!("unsupported scene units '{}'", self.units)));
        }
        let tol = 1e-9;
        let b = &self.bbox;
        for (i, p) in self.primitives.iter().enumerate() {
            let (lo, hi) = p.shape.bbox();
            if lo[0] < b.min[0] - tol || lo[1] < b.min[1] - tol || hi[0] > b.max[0] + tol || hi[1] > b.max[1] + tol {
                return Err(Error::geometry(format!("primitive {i} lies outside the bounding box")));
            }
            if let Shape::Wire { start, end } = &p.shape {
                if start[2].min(end[2]) < b.min[2] - tol || start[2].max(end[2]) > b.max[2] + tol {
                    return Err(Error::geometry(format!("wire {i} lies outside the bounding box")));
                }
                let diff = (0..3).filter(|&k| start[k] != end[k]).count();
                if diff != 1 {
                    return Err(Error::geometry(format!("wire {i} is not axis-aligned")));
                }
            }
            if p.operation == Operation::Subtractive {
                let has_material = p.layer == Layer::Substrate && self.substrate.is_some()
                    || self.primitives[..i]
                        .iter()
                        .any(|q| q.layer == p.layer && q.operation == Operation::Additive);
                if !has_material {
                    return Err(Error::geometry(format!(
                        "subtractive primitive {i} has no prior material on its layer"
                    )));
                }
            }
            if let Shape::Polygon { vertices } = &p.shape {
                Shape::polygon(vertices.clone())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table1_element() -> ElementFragment {
        apply_double_t_slots(build_patch_element(6.23, 7.41).unwrap(), &TSlotParams::table1()).unwrap()
    }

    #[test]
    fn patch_area() {
        let e = build_patch_element(6.23, 7.41).unwrap();
        assert_relative_eq!(e.conductor_area(), 46.1643, max_relative = 1e-12);
        let e = build_patch_element(16.855, 19.750).unwrap();
        assert_relative_eq!(e.conductor_area(), 332.886_25, max_relative = 1e-12);
        assert!(build_patch_element(0.0, 0.0).is_err());
        assert!(build_patch_element(1.0, -1.0).is_err());
    }

    #[test]
    fn double_t_area_and_errors() {
        assert_relative_eq!(table1_element().conductor_area(), 43.2843, max_relative = 1e-12);
        let zero = TSlotParams { slot_width_mm: 0.0, bar_breadth_mm: 0.0, ..TSlotParams::table1() };
        assert!(matches!(
            apply_double_t_slots(build_patch_element(6.23, 7.41).unwrap(), &zero),
            Err(Error::Domain(_))
        ));
        let far = TSlotParams { pair_separation_mm: 10.0, ..TSlotParams::table1() };
        assert!(matches!(
            apply_double_t_slots(build_patch_element(6.23, 7.41).unwrap(), &far),
            Err(Error::Geometry(_))
        ));
        let close = TSlotParams { pair_separation_mm: 0.5, ..TSlotParams::table1() };
        assert!(matches!(
            apply_double_t_slots(build_patch_element(6.23, 7.41).unwrap(), &close),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn array_width_matches_gap_arithmetic() {
        let s = tile_array(&table1_element(), &ArrayParams::table1()).unwrap();
        assert!((s.bbox.size()[0] - 26.63).abs() < 1e-9);
        let alt = ArrayParams { gap_mm: 1.59, ..ArrayParams::table1() };
        let s = tile_array(&table1_element(), &alt).unwrap();
        assert!((s.bbox.size()[0] - 25.41).abs() < 1e-9);
        let single = ArrayParams { rows: 1, cols: 1, ..ArrayParams::table1() };
        let s = tile_array(&table1_element(), &single).unwrap();
        assert!((s.bbox.size()[0] - 7.41).abs() < 1e-12);
        assert!((s.bbox.size()[1] - 6.23).abs() < 1e-12);
        let neg = ArrayParams { gap_mm: -1.0, ..ArrayParams::table1() };
        assert!(matches!(tile_array(&table1_element(), &neg), Err(Error::Domain(_))));
    }

    #[test]
    fn rotation_schedules() {
        let a = ArrayParams::table1();
        assert_eq!(a.rotation_for(0, 0), 0.0);
        assert_eq!(a.rotation_for(0, 1), 90.0);
        assert_eq!(a.rotation_for(1, 1), 0.0);
        let p = ArrayParams { schedule: RotationSchedule::Progressive, ..a };
        assert_eq!(p.rotation_for(1, 1), 90.0 * 4.0 % 360.0);
        assert_eq!(p.rotation_for(0, 2), 180.0);
        let nine = ArrayParams { element_rotation_deg: 9.0, ..a };
        let s = tile_array(&table1_element(), &nine).unwrap();
        assert!(s.bbox.size()[0] > 26.63);
    }

    #[test]
    fn feed_strip_and_port() {
        let s = tile_array(&table1_element(), &ArrayParams::table1()).unwrap();
        let before = s.conductor_area(Layer::TopMetal);
        let plain = FeedParams { pad_width_mm: 0.0, ..FeedParams::table1() };
        let fed = add_feed(s.clone(), &plain).unwrap();
        assert_relative_eq!(fed.conductor_area(Layer::TopMetal) - before, 2.216, max_relative = 1e-9);
        let short = add_feed(s.clone(), &FeedParams { pad_width_mm: 0.0, ..FeedParams::short_variant() }).unwrap();
        assert_relative_eq!(short.conductor_area(Layer::TopMetal) - before, 0.624, max_relative = 1e-9);
        let port = fed.port.unwrap();
        assert_eq!(port.axis, Axis::Z);
        assert!((port.start_mm[1] - fed.bbox.min[1]).abs() < 1e-12);
        let zero = FeedParams { line_length_mm: 0.0, ..FeedParams::table1() };
        assert!(add_feed(s.clone(), &zero).is_err());
        // two columns: the fed element stays upright, its rotated neighbor reaches lower
        let pair = ArrayParams { rows: 1, cols: 2, ..ArrayParams::table1() };
        let s2 = tile_array(&table1_element(), &pair).unwrap();
        let wide_pads = FeedParams { pad_width_mm: 8.0, ..FeedParams::table1() };
        assert!(matches!(add_feed(s2.clone(), &wide_pads), Err(Error::Geometry(_))));
        assert!(add_feed(s2, &FeedParams::table1()).is_ok());
        assert!(add_feed(s, &FeedParams::table1()).is_ok());
    }

    #[test]
    fn rear_slot_area_and_limits() {
        let ground_scene = Scene::empty([-26.63 / 2.0, -15.45, 0.0], [26.63 / 2.0, 15.45, 0.766]);
        let g = add_ground_with_rear_slot(ground_scene.clone(), &TSlotParams::table1(), 1.0).unwrap();
        assert_relative_eq!(g.conductor_area(Layer::GroundMetal), 822.867 - 1.44, max_relative = 1e-12);
        assert!(matches!(
            add_ground_with_rear_slot(ground_scene.clone(), &TSlotParams::table1(), 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            add_ground_with_rear_slot(ground_scene, &TSlotParams::table1(), 30.0),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn validate_catches_orphan_cut() {
        let mut s = Scene::empty([0.0; 3], [10.0, 10.0, 1.0]);
        s.push(Primitive::cut(Shape::rect_centered([5.0, 5.0], 1.0, 1.0), Layer::GroundMetal));
        assert!(s.validate().is_err());
        let mut s = Scene::empty([0.0; 3], [10.0, 10.0, 1.0]);
        s.push(Primitive::metal(Shape::rect_centered([5.0, 5.0], 20.0, 1.0), Layer::TopMetal));
        assert!(s.validate().is_err());
    }
}
