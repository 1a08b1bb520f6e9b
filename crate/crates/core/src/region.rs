//! Absolute-stability regions of the coupled pair: the explicit-part region,
//! fixed-implicit-point slices, and the intersection over an implicit wedge.
//!
//! Membership is decided by the spectral radius of the stability matrix.
//! Boundaries are traced on a polar grid by radial bisection from a center
//! on the negative real axis; areas come from the polar quadrature
//! `1/2 * sum rho(theta)^2 dtheta`, and the real-axis interval from a
//! leftward scan refined by bisection.

use crate::stability::is_stable_point;
use crate::tableau::Tableau;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::Cell;

/// Which region to compute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegionKind {
    /// Explicit part alone (`z1 = 0`).
    Explicit,
    /// Fixed implicit point `z1 = -|y| / tan(alpha) + i y`.
    FixedImplicit { alpha: f64, y: f64 },
    /// Intersection over the whole wedge of half-angle `alpha`, sampled on a
    /// symmetric logarithmic `y` grid.
    Wedge { alpha: f64 },
}

/// Scan resolution. Defaults reproduce published areas in seconds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_theta: usize,
    pub radial_tol: f64,
    pub r_max: f64,
    /// Coarse outward step used to bracket the first boundary crossing and
    /// to count stable/unstable transitions beyond it.
    pub scan_step: f64,
    /// Overrides the automatic center (midpoint of the real-axis interval).
    pub center: Option<f64>,
    /// Number of logarithmic samples per sign in the wedge `y` grid.
    pub n_y: usize,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_theta: 720,
            radial_tol: 1e-4,
            r_max: 8.0,
            scan_step: 0.05,
            center: None,
            n_y: 60,
            y_min: 1e-3,
            y_max: 1e4,
        }
    }
}

impl GridSpec {
    /// `0` together with `+/-` logarithmically spaced values.
    pub fn y_grid(&self) -> Vec<f64> {
        let mut ys = vec![0.0];
        for k in 0..self.n_y {
            let frac = k as f64 / (self.n_y - 1) as f64;
            let y = self.y_min * (self.y_max / self.y_min).powf(frac);
            ys.push(y);
            ys.push(-y);
        }
        ys
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub theta: f64,
    pub re: f64,
    pub im: f64,
}

/// A sampled stability region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Region {
    pub method: String,
    pub kind: RegionKind,
    pub center: f64,
    pub boundary: Vec<BoundaryPoint>,
    pub area: f64,
    /// Real-axis stability interval `(x_min, 0)`.
    pub interval: (f64, f64),
    /// Rays with more than one stable/unstable transition (the region is not
    /// star shaped about the center along these rays; the first crossing was
    /// used).
    pub star_violations: usize,
    /// The scan center itself was not a stable point.
    pub center_unstable: bool,
    /// Extra transitions found on the negative real axis beyond the interval.
    pub interval_gaps: usize,
}

/// Membership test with a per-ray memory of the last rejecting wedge sample;
/// neighbouring probes almost always fail at the same `y`, so trying it
/// first keeps outside probes cheap.
struct Membership<'a> {
    tableau: &'a Tableau,
    kind: RegionKind,
    y_grid: Vec<f64>,
    hint: Cell<usize>,
}

impl<'a> Membership<'a> {
    fn new(tableau: &'a Tableau, kind: RegionKind, grid: &GridSpec) -> Self {
        let y_grid = match kind {
            RegionKind::Wedge { .. } => grid.y_grid(),
            _ => Vec::new(),
        };
        Membership {
            tableau,
            kind,
            y_grid,
            hint: Cell::new(0),
        }
    }

    fn z1_for(alpha: f64, y: f64) -> Complex64 {
        // cot(alpha) evaluated as tan(pi/2 - alpha) so alpha = pi/2 gives
        // exactly zero real part
        let cot = (std::f64::consts::FRAC_PI_2 - alpha).tan();
        Complex64::new(-y.abs() * cot, y)
    }

    fn contains(&self, z0: Complex64) -> bool {
        match self.kind {
            RegionKind::Explicit => is_stable_point(self.tableau, z0, Complex64::ZERO),
            RegionKind::FixedImplicit { alpha, y } => {
                is_stable_point(self.tableau, z0, Self::z1_for(alpha, y))
            }
            RegionKind::Wedge { alpha } => {
                let n = self.y_grid.len();
                let start = self.hint.get();
                for offset in 0..n {
                    let idx = (start + offset) % n;
                    let z1 = Self::z1_for(alpha, self.y_grid[idx]);
                    if !is_stable_point(self.tableau, z0, z1) {
                        self.hint.set(idx);
                        return false;
                    }
                }
                true
            }
        }
    }
}

/// First boundary crossing along the ray `center + r * exp(i theta)`:
/// bracketed by coarse outward steps, refined by bisection; extra
/// transitions beyond the first are counted, not used.
fn trace_ray(member: &Membership, center: f64, theta: f64, grid: &GridSpec) -> (f64, usize) {
    let dir = Complex64::from_polar(1.0, theta);
    let at = |r: f64| Complex64::new(center, 0.0) + r * dir;
    if !member.contains(at(0.0)) {
        return (0.0, 0);
    }
    let mut last_inside = 0.0;
    let mut first_crossing: Option<(f64, f64)> = None;
    let mut transitions = 0usize;
    let mut inside = true;
    let mut r = 0.0;
    while r < grid.r_max {
        r += grid.scan_step;
        let now = member.contains(at(r));
        if now != inside {
            transitions += 1;
            if first_crossing.is_none() {
                first_crossing = Some((last_inside, r));
            }
            inside = now;
        }
        if inside {
            last_inside = r;
        }
        // one transition decides the radius; a second flags the ray
        if transitions >= 2 {
            break;
        }
    }
    let (mut lo, mut hi) = match first_crossing {
        Some(bracket) => bracket,
        None => return (grid.r_max, 0),
    };
    while hi - lo > grid.radial_tol {
        let mid = 0.5 * (lo + hi);
        if member.contains(at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, transitions.saturating_sub(1))
}

/// Leftward scan for the real-axis interval `(x_min, 0)`. Returns the left
/// endpoint and the number of additional transitions (stable islands)
/// found beyond it up to `-r_max - 2`.
fn real_axis_interval(member: &Membership, grid: &GridSpec) -> (f64, usize) {
    let step = grid.scan_step.min(0.02);
    let x_stop = -(grid.r_max + 2.0);
    let mut x = 0.0;
    let mut last_inside = 0.0;
    let mut first_crossing: Option<(f64, f64)> = None;
    let mut transitions = 0usize;
    let mut inside = true;
    // the origin itself is a boundary point; start just left of it
    while x > x_stop {
        x -= step;
        let now = member.contains(Complex64::new(x, 0.0));
        if inside && first_crossing.is_none() {
            if now {
                last_inside = x;
            }
        }
        if now != inside {
            transitions += 1;
            if first_crossing.is_none() {
                first_crossing = Some((x, last_inside));
            }
            inside = now;
        }
    }
    let (mut lo, mut hi) = match first_crossing {
        Some(bracket) => bracket,
        None => return (x_stop, 0),
    };
    // lo unstable (further left), hi stable
    while hi - lo > grid.radial_tol.min(1e-5) {
        let mid = 0.5 * (lo + hi);
        if member.contains(Complex64::new(mid, 0.0)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi, transitions.saturating_sub(1))
}

/// Computes a stability region: real-axis interval, boundary trace about the
/// interval midpoint (or an explicit center), polar-quadrature area, and
/// star-shape diagnostics. Rays are independent and scanned in parallel;
/// results are merged in fixed grid order.
pub fn region(t: &Tableau, kind: RegionKind, grid: &GridSpec) -> Region {
    let member = Membership::new(t, kind, grid);
    let (x_min, interval_gaps) = real_axis_interval(&member, grid);
    let center = grid.center.unwrap_or_else(|| {
        if x_min < -1e-6 {
            0.5 * x_min
        } else {
            -1.0
        }
    });
    let center_unstable = !member.contains(Complex64::new(center, 0.0));

    let n = grid.n_theta;
    let rays: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
            let local = Membership::new(t, kind, grid);
            trace_ray(&local, center, theta, grid)
        })
        .collect();

    let mut area = 0.0;
    let mut star_violations = 0;
    let mut boundary = Vec::with_capacity(n);
    for (k, &(rho, extra)) in rays.iter().enumerate() {
        let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
        area += 0.5 * rho * rho * (2.0 * std::f64::consts::PI / n as f64);
        star_violations += extra;
        let z = Complex64::new(center, 0.0) + Complex64::from_polar(rho, theta);
        boundary.push(BoundaryPoint {
            theta,
            re: z.re,
            im: z.im,
        });
    }

    Region {
        method: t.name.clone(),
        kind,
        center,
        boundary,
        area,
        interval: (x_min, 0.0),
        star_violations,
        center_unstable,
        interval_gaps,
    }
}

/// Explicit-part region `z1 = 0`.
pub fn region_explicit(t: &Tableau, grid: &GridSpec) -> Region {
    region(t, RegionKind::Explicit, grid)
}

/// Region at a fixed implicit point on the wedge boundary.
pub fn region_fixed_implicit(t: &Tableau, alpha: f64, y: f64, grid: &GridSpec) -> Region {
    region(t, RegionKind::FixedImplicit { alpha, y }, grid)
}

/// Intersection region over the wedge of half-angle `alpha`.
pub fn region_wedge(t: &Tableau, alpha: f64, grid: &GridSpec) -> Region {
    region(t, RegionKind::Wedge { alpha }, grid)
}
