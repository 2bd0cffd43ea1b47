//! Vessel anatomy: the Y-bifurcation lumen, its raster masks on the imaging
//! grid, and the inlet/outlet cross-sections used for flow measurements.
//!
//! The vessel is described in "vessel coordinates": parent axis along +x,
//! parent centerline at y = 0, inlet plane at x = 0. Rasterization centers
//! the lumen bounding box on the grid and records the translation.

use crate::error::{CtflowError, Result};
use crate::grid::GridSpec;
use serde::{Deserialize, Serialize};

/// Which lumen topology a [`VesselGeometry`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VesselKind {
    /// Parent channel splitting into two daughters with an occlusion bump
    /// on the lower daughter wall.
    Bifurcation,
    /// Straight channel (the analytic ground-truth case). Daughter and
    /// occlusion parameters are ignored.
    Channel,
}

/// Vessel anatomy parameters. Lengths derive from the parent height:
/// parent length L = 5H, daughter height h = 2H/3, daughter length l = 8H.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VesselGeometry {
    pub kind: VesselKind,
    /// Parent-vessel height H [cm].
    pub parent_height_cm: f64,
    /// Inter-daughter angle alpha [degrees]; each daughter sits alpha/2
    /// off the parent axis.
    pub alpha_deg: f64,
    /// Occlusion bump radius [cm]; a half-disc carved out of the lower
    /// daughter at `occlusion_frac` of its length.
    pub occlusion_radius_cm: f64,
    /// Occlusion center position as a fraction of daughter length.
    pub occlusion_frac: f64,
    /// Daughters are truncated at this fraction of their length for the
    /// region of interest, keeping the narrowing outside the ROI.
    pub roi_daughter_frac: f64,
    pub roi_excludes_occlusion: bool,
}

impl VesselGeometry {
    /// The bifurcation with the reference dimensions (H = 1.5 cm,
    /// alpha = 30 deg, r = 0.15 H, 45% maximum diameter reduction).
    pub fn bifurcation(parent_height_cm: f64) -> Self {
        VesselGeometry {
            kind: VesselKind::Bifurcation,
            parent_height_cm,
            alpha_deg: 30.0,
            occlusion_radius_cm: 0.15 * parent_height_cm,
            occlusion_frac: 0.55,
            roi_daughter_frac: 0.45,
            roi_excludes_occlusion: true,
        }
    }

    /// Straight channel of height H and length 5H.
    pub fn channel(parent_height_cm: f64) -> Self {
        VesselGeometry {
            kind: VesselKind::Channel,
            parent_height_cm,
            alpha_deg: 0.0,
            occlusion_radius_cm: 0.0,
            occlusion_frac: 0.0,
            roi_daughter_frac: 0.0,
            roi_excludes_occlusion: true,
        }
    }

    pub fn parent_length_cm(&self) -> f64 {
        5.0 * self.parent_height_cm
    }

    pub fn daughter_height_cm(&self) -> f64 {
        2.0 * self.parent_height_cm / 3.0
    }

    pub fn daughter_length_cm(&self) -> f64 {
        8.0 * self.parent_height_cm
    }

    /// Fractional diameter reduction caused by the occlusion bump.
    pub fn occlusion_fraction(&self) -> f64 {
        2.0 * self.occlusion_radius_cm / self.daughter_height_cm()
    }

    pub fn validate(&self) -> Result<()> {
        if self.parent_height_cm <= 0.0 {
            return Err(CtflowError::Geometry("parent height must be positive".into()));
        }
        if self.kind == VesselKind::Bifurcation && self.occlusion_fraction() > 0.45 + 1e-12 {
            return Err(CtflowError::Geometry(format!(
                "occlusion reduces daughter diameter by {:.1}% (> 45%)",
                100.0 * self.occlusion_fraction()
            )));
        }
        if self.occlusion_frac < 0.0 || self.occlusion_frac > 1.0 {
            return Err(CtflowError::Geometry("occlusion_frac outside [0,1]".into()));
        }
        Ok(())
    }

    fn half_angle_rad(&self) -> f64 {
        (self.alpha_deg / 2.0).to_radians()
    }

    /// Daughter strips originate this far upstream of the parent mouth so
    /// their union covers the full parent cross-section at the junction.
    fn junction_backset(&self) -> f64 {
        let th = self.half_angle_rad();
        if th.sin() < 1e-12 {
            return 0.0;
        }
        let reach = 0.5 * self.parent_height_cm * th.cos() - 0.5 * self.daughter_height_cm();
        (reach / th.sin()).max(0.0)
    }

    fn daughter_origin(&self) -> (f64, f64) {
        (self.parent_length_cm() - self.junction_backset(), 0.0)
    }

    /// Unit axis direction of a daughter (`sign` = +1 upper, -1 lower).
    pub fn daughter_axis(&self, sign: f64) -> (f64, f64) {
        let th = self.half_angle_rad();
        (th.cos(), sign * th.sin())
    }

    /// (arclength, transverse offset) of a vessel-frame point relative to a
    /// daughter centerline.
    fn daughter_sw(&self, sign: f64, x: f64, y: f64) -> (f64, f64) {
        let (ox, oy) = self.daughter_origin();
        let (dx, dy) = self.daughter_axis(sign);
        let (px, py) = (x - ox, y - oy);
        let s = px * dx + py * dy;
        let w = -px * dy + py * dx;
        (s, w)
    }

    fn in_parent(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && x <= self.parent_length_cm() && y.abs() <= 0.5 * self.parent_height_cm
    }

    fn in_daughter(&self, sign: f64, x: f64, y: f64) -> bool {
        let (s, w) = self.daughter_sw(sign, x, y);
        s >= 0.0 && s <= self.daughter_length_cm() && w.abs() <= 0.5 * self.daughter_height_cm()
    }

    /// Center of the occlusion half-disc, on the outer wall of the lower
    /// daughter.
    pub fn occlusion_center(&self) -> (f64, f64) {
        let (ox, oy) = self.daughter_origin();
        let (dx, dy) = self.daughter_axis(-1.0);
        // outward normal of the lower daughter (away from the bifurcation axis)
        let (nx, ny) = (dy, -dx);
        let s = self.occlusion_frac * self.daughter_length_cm();
        let h2 = 0.5 * self.daughter_height_cm();
        (ox + s * dx + h2 * nx, oy + s * dy + h2 * ny)
    }

    fn in_occlusion(&self, x: f64, y: f64) -> bool {
        if self.kind != VesselKind::Bifurcation || self.occlusion_radius_cm <= 0.0 {
            return false;
        }
        let (cx, cy) = self.occlusion_center();
        let r = self.occlusion_radius_cm;
        (x - cx).powi(2) + (y - cy).powi(2) <= r * r
    }

    /// Lumen membership of a vessel-frame point.
    pub fn in_lumen(&self, x: f64, y: f64) -> bool {
        let open = match self.kind {
            VesselKind::Channel => self.in_parent(x, y),
            VesselKind::Bifurcation => {
                self.in_parent(x, y)
                    || self.in_daughter(1.0, x, y)
                    || self.in_daughter(-1.0, x, y)
            }
        };
        open && !self.in_occlusion(x, y)
    }

    /// ROI membership: lumen with the daughters truncated upstream of the
    /// narrowing. For the channel the ROI is the whole lumen.
    pub fn in_roi(&self, x: f64, y: f64) -> bool {
        if !self.in_lumen(x, y) {
            return false;
        }
        match self.kind {
            VesselKind::Channel => true,
            VesselKind::Bifurcation => {
                if self.in_parent(x, y) {
                    return true;
                }
                let cut = self.roi_daughter_frac * self.daughter_length_cm();
                for sign in [1.0, -1.0] {
                    if self.in_daughter(sign, x, y) {
                        let (s, _) = self.daughter_sw(sign, x, y);
                        if s <= cut {
                            return true;
                        }
                    }
                }
                false
            }
        }
    }

    /// Axis-aligned bounding box of the ROI lumen in vessel coordinates.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match self.kind {
            VesselKind::Channel => (
                0.0,
                self.parent_length_cm(),
                -0.5 * self.parent_height_cm,
                0.5 * self.parent_height_cm,
            ),
            VesselKind::Bifurcation => {
                let (ox, _) = self.daughter_origin();
                let th = self.half_angle_rad();
                let l = self.daughter_length_cm();
                let h2 = 0.5 * self.daughter_height_cm();
                let x_max = ox + l * th.cos() + h2 * th.sin();
                let y_max = (l * th.sin() + h2 * th.cos()).max(0.5 * self.parent_height_cm);
                (0.0, x_max, -y_max, y_max)
            }
        }
    }
}

/// Names of the measurement cross-sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectionName {
    Inlet,
    OutletUpper,
    OutletLower,
}

/// An ordered single-pixel-wide line of sample points transverse to the
/// local vessel axis, with the axis direction as unit normal.
#[derive(Debug, Clone)]
pub struct CrossSection {
    pub name: SectionName,
    /// Sample locations in world (grid) coordinates, spaced `ds_cm` apart.
    pub points: Vec<(f64, f64)>,
    /// Unit normal, aligned with the local flow axis.
    pub normal: (f64, f64),
    /// Spacing between samples [cm].
    pub ds_cm: f64,
}

impl CrossSection {
    pub fn length_cm(&self) -> f64 {
        self.points.len() as f64 * self.ds_cm
    }
}

/// Boolean masks of the vessel on an imaging grid.
#[derive(Debug, Clone)]
pub struct RasterMask {
    pub grid: GridSpec,
    /// Lumen membership per pixel, row-major.
    pub lumen: Vec<bool>,
    /// Region-of-interest membership per pixel; always a subset of `lumen`.
    pub roi: Vec<bool>,
    /// Translation from vessel coordinates to world coordinates.
    pub offset: (f64, f64),
    /// Lumen cells on the inlet plane (concentration Dirichlet boundary).
    pub inlet_cells: Vec<(usize, usize)>,
    /// Lumen cells on the ROI exit planes (outflow boundary).
    pub outlet_cells: Vec<(usize, usize)>,
}

impl RasterMask {
    /// Trivial mask marking the whole grid as lumen and ROI (phantoms and
    /// verification scenes).
    pub fn full(grid: GridSpec) -> Self {
        RasterMask {
            grid,
            lumen: vec![true; grid.n_pixels()],
            roi: vec![true; grid.n_pixels()],
            offset: (0.0, 0.0),
            inlet_cells: Vec::new(),
            outlet_cells: Vec::new(),
        }
    }

    pub fn lumen_at(&self, iy: usize, ix: usize) -> bool {
        self.lumen[iy * self.grid.nx + ix]
    }

    pub fn roi_at(&self, iy: usize, ix: usize) -> bool {
        self.roi[iy * self.grid.nx + ix]
    }

    pub fn lumen_area_cm2(&self) -> f64 {
        let px = self.grid.pixel_cm * self.grid.pixel_cm;
        self.lumen.iter().filter(|&&b| b).count() as f64 * px
    }

    pub fn roi_area_cm2(&self) -> f64 {
        let px = self.grid.pixel_cm * self.grid.pixel_cm;
        self.roi.iter().filter(|&&b| b).count() as f64 * px
    }

    /// World coordinates of a vessel-frame point.
    pub fn to_world(&self, x: f64, y: f64) -> (f64, f64) {
        (x + self.offset.0, y + self.offset.1)
    }

    /// Vessel-frame coordinates of a world point.
    pub fn to_vessel(&self, x: f64, y: f64) -> (f64, f64) {
        (x - self.offset.0, y - self.offset.1)
    }

    /// Mask as 0/1 bytes for the artifact store.
    pub fn lumen_u8(&self) -> Vec<u8> {
        self.lumen.iter().map(|&b| b as u8).collect()
    }

    pub fn roi_u8(&self) -> Vec<u8> {
        self.roi.iter().map(|&b| b as u8).collect()
    }
}

/// Rasterize the vessel lumen and ROI onto `grid`, centering the ROI
/// bounding box in the grid.
///
/// Fails if the pixel pitch exceeds H/20 or the vessel does not fit.
pub fn build_bifurcation_mask(geom: &VesselGeometry, grid: &GridSpec) -> Result<RasterMask> {
    geom.validate()?;
    let limit = geom.parent_height_cm / 20.0;
    if grid.pixel_cm > limit + 1e-12 {
        return Err(CtflowError::GridTooCoarse {
            pixel_cm: grid.pixel_cm,
            limit_cm: limit,
        });
    }
    let (bx0, bx1, by0, by1) = geom.bounding_box();
    if bx1 - bx0 > grid.width_cm() || by1 - by0 > grid.height_cm() {
        return Err(CtflowError::Geometry(format!(
            "vessel extent {:.1} x {:.1} cm exceeds grid {:.1} x {:.1} cm",
            bx1 - bx0,
            by1 - by0,
            grid.width_cm(),
            grid.height_cm()
        )));
    }
    // Snap the offset to whole pixels so the inlet plane aligns with a
    // pixel column boundary.
    let gx_center = 0.5 * (grid.x0 + grid.x_max());
    let gy_center = 0.5 * (grid.y0 + grid.y_max());
    let raw_dx = gx_center - 0.5 * (bx0 + bx1);
    let raw_dy = gy_center - 0.5 * (by0 + by1);
    let dx = (raw_dx / grid.pixel_cm).round() * grid.pixel_cm;
    let dy = (raw_dy / grid.pixel_cm).round() * grid.pixel_cm;

    let mut lumen = vec![false; grid.n_pixels()];
    let mut roi = vec![false; grid.n_pixels()];
    for iy in 0..grid.ny {
        let wy = grid.y_center(iy) - dy;
        for ix in 0..grid.nx {
            let wx = grid.x_center(ix) - dx;
            let k = iy * grid.nx + ix;
            if geom.in_lumen(wx, wy) {
                lumen[k] = true;
                roi[k] = geom.in_roi(wx, wy);
            }
        }
    }

    // Inlet cells: first lumen column of the parent channel.
    let mut inlet_cells = Vec::new();
    let mut outlet_cells = Vec::new();
    let px = grid.pixel_cm;
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let k = iy * grid.nx + ix;
            if !roi[k] {
                continue;
            }
            let (vx, vy) = (grid.x_center(ix) - dx, grid.y_center(iy) - dy);
            if vx >= 0.0 && vx < px {
                inlet_cells.push((iy, ix));
            }
            match geom.kind {
                VesselKind::Channel => {
                    if vx > geom.parent_length_cm() - px {
                        outlet_cells.push((iy, ix));
                    }
                }
                VesselKind::Bifurcation => {
                    let cut = geom.roi_daughter_frac * geom.daughter_length_cm();
                    for sign in [1.0, -1.0] {
                        let (s, w) = geom.daughter_sw(sign, vx, vy);
                        if w.abs() <= 0.5 * geom.daughter_height_cm()
                            && s > cut - px
                            && s <= cut
                        {
                            outlet_cells.push((iy, ix));
                        }
                    }
                }
            }
        }
    }

    Ok(RasterMask {
        grid: *grid,
        lumen,
        roi,
        offset: (dx, dy),
        inlet_cells,
        outlet_cells,
    })
}

/// Walk from a center point in direction `(tx, ty)` collecting contiguous
/// lumen samples, in both directions, ordered.
fn span_locus(
    mask: &RasterMask,
    center: (f64, f64),
    transverse: (f64, f64),
    step: f64,
) -> Result<Vec<(f64, f64)>> {
    let inside = |p: (f64, f64)| -> bool {
        mask.grid
            .pixel_at(p.0, p.1)
            .map(|(iy, ix)| mask.lumen_at(iy, ix))
            .unwrap_or(false)
    };
    if !inside(center) {
        return Err(CtflowError::Geometry(
            "cross-section center is not inside the lumen".into(),
        ));
    }
    let mut pts = Vec::new();
    // negative side, collected outward then reversed
    let mut neg = Vec::new();
    for dir in [-1.0, 1.0] {
        let mut k = 1;
        loop {
            let p = (
                center.0 + dir * k as f64 * step * transverse.0,
                center.1 + dir * k as f64 * step * transverse.1,
            );
            if !inside(p) {
                break;
            }
            if dir < 0.0 {
                neg.push(p);
            } else {
                pts.push(p);
            }
            k += 1;
            if k > 100_000 {
                return Err(CtflowError::Geometry("unbounded cross-section locus".into()));
            }
        }
    }
    let mut locus: Vec<(f64, f64)> = neg.into_iter().rev().collect();
    locus.push(center);
    locus.extend(pts);
    Ok(locus)
}

/// Place the inlet and the two outlet cross-sections.
///
/// The inlet sits half a parent-height downstream of the inlet plane; the
/// outlets sit at 35% of the daughter length, upstream of the ROI exit.
/// For the straight channel both "outlets" coincide at the channel exit.
pub fn locate_cross_sections(
    geom: &VesselGeometry,
    mask: &RasterMask,
) -> Result<Vec<CrossSection>> {
    let step = mask.grid.pixel_cm;
    let mut sections = Vec::new();

    let inlet_center = mask.to_world(0.5 * geom.parent_height_cm, 0.0);
    let locus = span_locus(mask, inlet_center, (0.0, 1.0), step)?;
    sections.push(CrossSection {
        name: SectionName::Inlet,
        points: locus,
        normal: (1.0, 0.0),
        ds_cm: step,
    });

    match geom.kind {
        VesselKind::Channel => {
            let out_center = mask.to_world(geom.parent_length_cm() - 0.5 * geom.parent_height_cm, 0.0);
            for name in [SectionName::OutletUpper, SectionName::OutletLower] {
                let locus = span_locus(mask, out_center, (0.0, 1.0), step)?;
                sections.push(CrossSection {
                    name,
                    points: locus,
                    normal: (1.0, 0.0),
                    ds_cm: step,
                });
            }
        }
        VesselKind::Bifurcation => {
            let s_out = 0.35 * geom.daughter_length_cm();
            let (ox, oy) = geom.daughter_origin();
            for (sign, name) in [(1.0, SectionName::OutletUpper), (-1.0, SectionName::OutletLower)] {
                let (dxa, dya) = geom.daughter_axis(sign);
                let center = mask.to_world(ox + s_out * dxa, oy + s_out * dya);
                let locus = span_locus(mask, center, (-dya, dxa), step)?;
                let expected = geom.daughter_height_cm();
                let got = locus.len() as f64 * step;
                if (got - expected).abs() > 3.0 * step {
                    return Err(CtflowError::Geometry(format!(
                        "outlet locus length {got:.3} cm deviates from daughter height {expected:.3} cm"
                    )));
                }
                sections.push(CrossSection {
                    name,
                    points: locus,
                    normal: (dxa, dya),
                    ds_cm: step,
                });
            }
        }
    }
    Ok(sections)
}
