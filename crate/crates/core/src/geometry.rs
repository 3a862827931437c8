//! Chamber geometry: cast silicone cavities sealed by a tilted membrane.
//!
//! Both chamber types share one axisymmetric layout. A flat circular cap of
//! radius `r_cap` sits below the clamping rim, connected to it by a conical
//! annulus tilted by an angle `tilt` toward the cavity floor, so the cap is
//! recessed by `drop = (R_m - r_cap) tan(tilt)` where `R_m` is the clamped
//! span radius. The cavity behind the membrane is a straight cylinder of
//! radius `R_m` and depth `floor_depth`.
//!
//! Axial coordinates here and in the mesh put `z = 0` at the clamp plane
//! with positive `z` pointing outward, away from the floor; the rest
//! membrane therefore sits at negative `z` and the floor at
//! `z = -floor_depth`.
//!
//! The tilt is the single shape parameter varied in the studies: it sets
//! how deep the stress-free membrane sits and thereby whether inflation
//! snaps through or bulges smoothly.
//!
//! Two closures connect the cast part to the reduced-order membrane
//! model. The bending closure: hinge bending uses an effective thickness
//! of 1.78 mm inside the plate modulus instead of the 2 mm cast wall
//! (an 11% reduction, i.e. 0.70 of the nominal plate modulus), while
//! stretching keeps the cast thickness. A molded wall bends more easily
//! than a homogeneous Kirchhoff plate of its nominal section, and the
//! hinge chain otherwise overweights bending against stretching; the
//! value is fixed once here so that the tilt thresholds of the snap
//! behaviour come out where the full 3D analyses put them, and it is not
//! varied anywhere else. The body closure: the cavity volume includes the
//! linearized swell of the floor plate and side wall (see
//! [`ChamberGeometry::body_compliance_mm3_per_kpa`]); without it the body
//! is rigid and the total volume cannot fold back during a snap.

use crate::error::{Error, Result};
use crate::scalar::{of, Real};

fn deg_to_rad<T: Real>(deg: T) -> T {
    deg * of(std::f64::consts::PI / 180.0)
}

/// Gripping chamber dimensions. `outer_radius_mm` is the outside of the
/// clamp ring; the membrane spans to `outer_radius_mm - wall_mm`. The cavity
/// depth is `rim_depth_mm + base_depth_mm - wall_mm` (rim block plus base
/// block, minus the floor wall).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrippingGeometry<T> {
    pub outer_radius_mm: T,
    pub cap_radius_mm: T,
    pub wall_mm: T,
    pub rim_depth_mm: T,
    pub base_depth_mm: T,
    pub tilt_deg: T,
    pub membrane_thickness_mm: T,
    /// Effective thickness inside the plate (bending) modulus only; see
    /// the module notes on the bending closure.
    pub bending_thickness_mm: T,
}

impl<T: Real> GrippingGeometry<T> {
    /// The cast dimensions used throughout the studies, at a given tilt.
    pub fn standard(tilt_deg: T) -> Self {
        Self {
            outer_radius_mm: of(23.5),
            cap_radius_mm: of(13.0),
            wall_mm: of(2.0),
            rim_depth_mm: of(9.0),
            base_depth_mm: of(6.5),
            tilt_deg,
            membrane_thickness_mm: of(2.0),
            bending_thickness_mm: of(1.78),
        }
    }

    pub fn span_radius_mm(&self) -> T {
        self.outer_radius_mm - self.wall_mm
    }

    pub fn floor_depth_mm(&self) -> T {
        self.rim_depth_mm + self.base_depth_mm - self.wall_mm
    }
}

/// Contact (sensing) chamber dimensions. Diameters mirror how the part is
/// measured: `span_diameter_mm` across the clamped membrane span,
/// `cap_diameter_mm` across the flat cap. The cavity is `cavity_depth_mm`
/// deep including the floor wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactGeometry<T> {
    pub span_diameter_mm: T,
    pub cap_diameter_mm: T,
    pub cavity_depth_mm: T,
    pub wall_mm: T,
    pub tilt_deg: T,
    pub membrane_thickness_mm: T,
    /// Effective thickness inside the plate (bending) modulus only; see
    /// the module notes on the bending closure.
    pub bending_thickness_mm: T,
}

impl<T: Real> ContactGeometry<T> {
    pub fn standard(tilt_deg: T) -> Self {
        Self {
            span_diameter_mm: of(35.0),
            cap_diameter_mm: of(20.0),
            cavity_depth_mm: of(12.0),
            wall_mm: of(2.0),
            tilt_deg,
            membrane_thickness_mm: of(2.0),
            bending_thickness_mm: of(1.78),
        }
    }

    pub fn span_radius_mm(&self) -> T {
        self.span_diameter_mm * of(0.5)
    }

    pub fn cap_radius_mm(&self) -> T {
        self.cap_diameter_mm * of(0.5)
    }

    pub fn floor_depth_mm(&self) -> T {
        self.cavity_depth_mm - self.wall_mm
    }
}

/// Either chamber type, reduced to the common membrane-over-cavity layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChamberGeometry<T> {
    Gripping(GrippingGeometry<T>),
    Contact(ContactGeometry<T>),
}

impl<T: Real> ChamberGeometry<T> {
    pub fn gripping(tilt_deg: T) -> Self {
        Self::Gripping(GrippingGeometry::standard(tilt_deg))
    }

    pub fn contact(tilt_deg: T) -> Self {
        Self::Contact(ContactGeometry::standard(tilt_deg))
    }

    /// Clamped membrane span radius `R_m`.
    pub fn span_radius_mm(&self) -> T {
        match self {
            Self::Gripping(g) => g.span_radius_mm(),
            Self::Contact(c) => c.span_radius_mm(),
        }
    }

    pub fn cap_radius_mm(&self) -> T {
        match self {
            Self::Gripping(g) => g.cap_radius_mm,
            Self::Contact(c) => c.cap_radius_mm(),
        }
    }

    pub fn wall_mm(&self) -> T {
        match self {
            Self::Gripping(g) => g.wall_mm,
            Self::Contact(c) => c.wall_mm,
        }
    }

    pub fn floor_depth_mm(&self) -> T {
        match self {
            Self::Gripping(g) => g.floor_depth_mm(),
            Self::Contact(c) => c.floor_depth_mm(),
        }
    }

    pub fn tilt_deg(&self) -> T {
        match self {
            Self::Gripping(g) => g.tilt_deg,
            Self::Contact(c) => c.tilt_deg,
        }
    }

    pub fn with_tilt(mut self, tilt_deg: T) -> Self {
        match &mut self {
            Self::Gripping(g) => g.tilt_deg = tilt_deg,
            Self::Contact(c) => c.tilt_deg = tilt_deg,
        }
        self
    }

    pub fn membrane_thickness_mm(&self) -> T {
        match self {
            Self::Gripping(g) => g.membrane_thickness_mm,
            Self::Contact(c) => c.membrane_thickness_mm,
        }
    }

    pub fn bending_thickness_mm(&self) -> T {
        match self {
            Self::Gripping(g) => g.bending_thickness_mm,
            Self::Contact(c) => c.bending_thickness_mm,
        }
    }

    /// Linearized volumetric compliance of the chamber body (mm^3/kPa) for
    /// a material with the given shear parameter, from two closed forms on
    /// the same cast wall: the floor as a clamped circular plate of radius
    /// `R_m` and thickness `wall` (`pi a^6 / (192 D)`, plate modulus
    /// `D = (2/3) c10 t^3` for an incompressible solid), plus the side
    /// wall as a thin pressurized tube of radius `R_m`, length
    /// `floor_depth` and the same wall (`pi a^3 L / (4 c10 t)`). Both are
    /// small-deflection estimates: the real floor stiffens geometrically
    /// once its bulge passes the wall thickness, so this overstates the
    /// swell at snap pressures; what shapes the fold pattern is the
    /// differential compliance near the limit points, for which the
    /// linearization is adequate. Scales as `1/c10`, so pressure-volume
    /// curves of stiffer casts remain pure pressure rescalings.
    pub fn body_compliance_mm3_per_kpa(&self, c10_mpa: T) -> T {
        let pi = T::of(std::f64::consts::PI);
        let a = self.span_radius_mm();
        let t = self.wall_mm();
        let l = self.floor_depth_mm();
        let d_plate = of::<T>(2.0 / 3.0) * c10_mpa * t * t * t;
        let floor = pi * a.powi(6) / (of::<T>(192.0) * d_plate);
        let side = pi * a.powi(3) * l / (of::<T>(4.0) * c10_mpa * t);
        (floor + side) * of(1e-3)
    }

    /// Recess of the cap below the clamp plane, `(R_m - r_cap) tan(tilt)`.
    pub fn drop_mm(&self) -> T {
        (self.span_radius_mm() - self.cap_radius_mm()) * deg_to_rad(self.tilt_deg()).tan()
    }

    /// Gap left between the recessed cap and the cavity floor.
    pub fn floor_clearance_mm(&self) -> T {
        self.floor_depth_mm() - self.drop_mm()
    }

    /// Piston-equivalent membrane area `pi R_m^2` (mm^2), used to convert
    /// between chamber pressure and an equivalent axial force.
    pub fn projected_membrane_area_mm2(&self) -> T {
        T::of(std::f64::consts::PI) * self.span_radius_mm() * self.span_radius_mm()
    }

    /// Cavity volume behind the stress-free membrane, in closed form:
    /// cylinder to the clamp plane minus the cone of revolution between the
    /// clamp plane and the recessed membrane.
    pub fn rest_volume_mm3(&self) -> T {
        let pi = T::of(std::f64::consts::PI);
        let rm = self.span_radius_mm();
        let rc = self.cap_radius_mm();
        let cone = pi * self.drop_mm() * (rm * rm + rm * rc + rc * rc) / of(3.0);
        pi * rm * rm * self.floor_depth_mm() - cone
    }

    pub fn validate(&self) -> Result<()> {
        let rm = self.span_radius_mm();
        let rc = self.cap_radius_mm();
        let dims = [
            rm,
            rc,
            self.wall_mm(),
            self.floor_depth_mm(),
            self.membrane_thickness_mm(),
            self.bending_thickness_mm(),
        ];
        if dims.iter().any(|d| !d.is_finite()) || !self.tilt_deg().is_finite() {
            return Err(Error::NonFinite { context: "chamber dimensions".into() });
        }
        if dims.iter().any(|d| *d <= T::zero()) {
            return Err(Error::Geometry("all chamber dimensions must be positive".into()));
        }
        if rc >= rm {
            return Err(Error::Geometry(format!(
                "cap radius {rc} must be smaller than the membrane span {rm}"
            )));
        }
        let tilt = self.tilt_deg();
        if tilt < T::zero() || tilt >= of(90.0) {
            return Err(Error::Geometry(format!("tilt must lie in [0, 90) deg, got {tilt}")));
        }
        if self.floor_clearance_mm() <= T::zero() {
            return Err(Error::Geometry(format!(
                "tilt {tilt} deg recesses the membrane {} mm, past the cavity floor {} mm down",
                self.drop_mm(),
                self.floor_depth_mm()
            )));
        }
        Ok(())
    }

    /// Meridian polyline of the stress-free membrane mid-surface from the
    /// axis to the clamp: the flat cap first, then the tilted annulus, with
    /// a node exactly on the crease between them. Nodes are spread by
    /// arclength, with at least two elements per region.
    pub fn meridian_profile(&self, n_elements: usize) -> Result<Vec<[T; 2]>> {
        self.validate()?;
        if n_elements < 4 {
            return Err(Error::Geometry(format!(
                "need at least 4 meridian elements, got {n_elements}"
            )));
        }
        let rm = self.span_radius_mm();
        let rc = self.cap_radius_mm();
        let drop = self.drop_mm();
        let len_cap = rc;
        let len_ann = ((rm - rc) * (rm - rc) + drop * drop).sqrt();
        let share = (len_cap / (len_cap + len_ann)).as_f64();
        let n_cap = ((n_elements as f64 * share).round() as usize).clamp(2, n_elements - 2);
        let n_ann = n_elements - n_cap;
        let mut profile = Vec::with_capacity(n_elements + 1);
        for i in 0..=n_cap {
            let t = of::<T>(i as f64 / n_cap as f64);
            profile.push([rc * t, -drop]);
        }
        for i in 1..=n_ann {
            let t = of::<T>(i as f64 / n_ann as f64);
            profile.push([rc + (rm - rc) * t, -drop + drop * t]);
        }
        Ok(profile)
    }
}
