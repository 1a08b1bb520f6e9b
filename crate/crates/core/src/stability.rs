//! Linear stability analysis: the stability matrix of the coupled pair, its
//! characteristic polynomial in normalized form, the recursive Schur test on
//! the imaginary axis, and the A-/L-stability verdicts of the implicit part.

use crate::error::{Error, Result};
use crate::poly::{spectral_radius, BivarPoly, CPoly};
use crate::tableau::Tableau;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Spectral radii within this distance of 1 classify as boundary points;
/// the eigenvalue 1 of `V` at the origin must not count as unstable.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Default imaginary-axis sampling for the A-stability certificate. The
/// lower cutoff keeps the smallest Schur gap of every catalog method at
/// least four orders of magnitude above f64 rounding noise; gaps vanish
/// like a power of `y` at the consistency root as `y -> 0`.
pub const A_STABILITY_Y_MIN: f64 = 0.05;
pub const A_STABILITY_Y_MAX: f64 = 1e4;
pub const A_STABILITY_SAMPLES: usize = 2000;

fn cplx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Stability matrix `M(z0, z1) = V + (z0 B + z1 B*) (I - z0 A - z1 A*)^{-1} U`
/// of the coupled pair. The order-1 pair composes its two parts, giving the
/// rank-one product form instead.
pub fn stability_matrix(
    t: &Tableau,
    z0: Complex64,
    z1: Complex64,
) -> Result<DMatrix<Complex64>> {
    if t.euler_split {
        let lam = t.lambda;
        let denom = cplx(1.0) - lam * z1;
        if denom.norm() < 1e-14 {
            return Err(Error::StabilityPole);
        }
        let value = (cplx(1.0) + z0) * (cplx(1.0) + (1.0 - lam) * z1) / denom;
        return Ok(DMatrix::from_element(1, 1, value));
    }
    let s = t.s;
    // stage matrix is lower triangular with diagonal 1 - lambda z1
    if (cplx(1.0) - t.lambda * z1).norm() < 1e-14 {
        return Err(Error::StabilityPole);
    }
    let mut q = DMatrix::<Complex64>::identity(s, s);
    for i in 0..s {
        for j in 0..=i {
            q[(i, j)] -= z0 * t.a[(i, j)] + z1 * t.a_star[(i, j)];
        }
    }
    let u_c = t.u.map(cplx);
    let stage = q
        .lu()
        .solve(&u_c)
        .ok_or_else(|| Error::SingularMatrix("stage matrix".into()))?;
    let mut weights = DMatrix::<Complex64>::zeros(t.r, s);
    for i in 0..t.r {
        for j in 0..s {
            weights[(i, j)] = z0 * t.b[(i, j)] + z1 * t.b_star[(i, j)];
        }
    }
    Ok(t.v.map(cplx) + weights * stage)
}

/// Classification of a point of the `(z0, z1)` plane by the spectral radius
/// of the stability matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointClass {
    Stable,
    Boundary,
    Unstable,
}

pub fn classify_point(t: &Tableau, z0: Complex64, z1: Complex64) -> PointClass {
    match stability_matrix(t, z0, z1) {
        Err(_) => PointClass::Unstable,
        Ok(m) => {
            let rho = spectral_radius(&m);
            if rho < 1.0 - BOUNDARY_TOL {
                PointClass::Stable
            } else if rho <= 1.0 + BOUNDARY_TOL {
                PointClass::Boundary
            } else {
                PointClass::Unstable
            }
        }
    }
}

/// Strict stability: spectral radius below `1 - BOUNDARY_TOL`. Poles count
/// as unstable.
pub fn is_stable_point(t: &Tableau, z0: Complex64, z1: Complex64) -> bool {
    classify_point(t, z0, z1) == PointClass::Stable
}

/// Characteristic polynomial of the stability matrix multiplied by
/// `(1 - lambda z1)^s`, stored as bivariate polynomials in `(z0, z1)` per
/// power of `w`. Every coefficient polynomial has degree at most `s` in each
/// variable, and the leading `w` coefficient specializes to
/// `(1 - lambda z1)^s` at `z0 = 0`.
#[derive(Debug, Clone)]
pub struct StabilityPolynomial {
    pub s: usize,
    pub lambda: f64,
    /// `w_coeffs[i]` multiplies `w^i`.
    pub w_coeffs: Vec<BivarPoly>,
}

impl StabilityPolynomial {
    /// Builds the coefficients by trigonometric interpolation: the scaled
    /// characteristic polynomial equals a single block determinant that is
    /// polynomial of degree `<= s` in each of `w`, `z0`, `z1`, so sampling
    /// all three variables on `s+1` roots of unity and applying inverse
    /// discrete Fourier transforms recovers the exact coefficients.
    pub fn build(t: &Tableau) -> Result<Self> {
        if t.euler_split {
            return Ok(Self::euler_split(t));
        }
        let s = t.s;
        let n = s + 1;
        let node = |k: usize| {
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k % n) as f64 / n as f64)
        };

        let mut samples = vec![Complex64::new(0.0, 0.0); n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    samples[(a * n + b) * n + c] = block_det(t, node(a), node(b), node(c));
                }
            }
        }
        // inverse DFT along each axis in turn
        for axis in 0..3 {
            let mut out = vec![Complex64::new(0.0, 0.0); n * n * n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let sel = [i, j, k][axis];
                        let mut acc = Complex64::new(0.0, 0.0);
                        for m in 0..n {
                            let idx = match axis {
                                0 => (m * n + j) * n + k,
                                1 => (i * n + m) * n + k,
                                _ => (i * n + j) * n + m,
                            };
                            // conjugate twiddle: node(-sel*m)
                            acc += samples[idx] * node((n - sel % n) % n * m);
                        }
                        out[(i * n + j) * n + k] = acc / n as f64;
                    }
                }
            }
            samples = out;
        }

        let scale = samples.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
        let mut w_coeffs = Vec::with_capacity(n);
        for i in 0..n {
            let mut bp = BivarPoly::zero(s, s);
            for j in 0..n {
                for k in 0..n {
                    let coeff = samples[(i * n + j) * n + k];
                    if coeff.im.abs() > 1e-9 * scale.max(1.0) {
                        return Err(Error::NonFinite("stability polynomial coefficients".into()));
                    }
                    bp.coeffs[j][k] = coeff.re;
                }
            }
            w_coeffs.push(bp);
        }
        Ok(StabilityPolynomial {
            s,
            lambda: t.lambda,
            w_coeffs,
        })
    }

    /// Product form of the order-1 pair:
    /// `(1 - lambda z1) w - (1 + z0)(1 + (1 - lambda) z1)`.
    fn euler_split(t: &Tableau) -> Self {
        let lam = t.lambda;
        let mut w1 = BivarPoly::zero(1, 1);
        w1.coeffs[0][0] = 1.0;
        w1.coeffs[0][1] = -lam;
        let mut w0 = BivarPoly::zero(1, 1);
        w0.coeffs[0][0] = -1.0;
        w0.coeffs[0][1] = -(1.0 - lam);
        w0.coeffs[1][0] = -1.0;
        w0.coeffs[1][1] = -(1.0 - lam);
        StabilityPolynomial {
            s: 1,
            lambda: lam,
            w_coeffs: vec![w0, w1],
        }
    }

    /// The polynomial in `w` at fixed `(z0, z1)`.
    pub fn at(&self, z0: Complex64, z1: Complex64) -> CPoly {
        CPoly::new(self.w_coeffs.iter().map(|bp| bp.eval(z0, z1)).collect())
    }

    /// Coefficient rows (in `z1`, ascending) of the implicit-part polynomial
    /// obtained by fixing `z0 = 0`; row `i` belongs to `w^i`.
    pub fn implicit_part(&self) -> Vec<Vec<f64>> {
        self.w_coeffs.iter().map(BivarPoly::slice_x0).collect()
    }

    /// Limit polynomial of `p(w, 0, z1) / z1^s` as `|z1| -> inf`: the top
    /// `z1` coefficient of each `w` row. Its roots are the limits of the
    /// characteristic roots in the stiff limit.
    pub fn stiff_limit_poly(&self) -> CPoly {
        let rows = self.implicit_part();
        CPoly::new(rows.iter().map(|r| cplx(r[self.s])).collect())
    }
}

fn block_det(t: &Tableau, w: Complex64, z0: Complex64, z1: Complex64) -> Complex64 {
    let s = t.s;
    let r = t.r;
    let n = s + r;
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..s {
        for j in 0..s {
            let mut q = if i == j { cplx(1.0) } else { cplx(0.0) };
            q -= z0 * t.a[(i, j)] + z1 * t.a_star[(i, j)];
            m[(i, j)] = q;
        }
        for j in 0..r {
            m[(i, s + j)] = cplx(t.u[(i, j)]);
        }
    }
    for i in 0..r {
        for j in 0..s {
            m[(s + i, j)] = z0 * t.b[(i, j)] + z1 * t.b_star[(i, j)];
        }
        for j in 0..r {
            let mut e = -cplx(t.v[(i, j)]);
            if i == j {
                e += w;
            }
            m[(s + i, s + j)] = e;
        }
    }
    m.lu().determinant()
}

/// One level of the recursive Schur test: the polynomial, its reversed
/// conjugate, and the gap `|phi_hat(0)| - |phi(0)|` that must be positive.
/// Coefficients are normalized to unit maximum magnitude at every level so
/// gaps stay comparable across samples.
#[derive(Debug, Clone)]
pub struct SchurStep {
    pub phi: CPoly,
    pub phi_hat: CPoly,
    pub gap: f64,
}

/// Runs the Schur recursion down to degree one, returning every level.
pub fn schur_recursion(p: &CPoly) -> Vec<SchurStep> {
    let mut steps = Vec::new();
    let mut coeffs = p.coeffs.clone();
    while coeffs.len() > 1 {
        let scale = coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for c in coeffs.iter_mut() {
            *c /= scale;
        }
        let hat: Vec<Complex64> = coeffs.iter().rev().map(|c| c.conj()).collect();
        let phi0 = coeffs[0];
        let hat0 = hat[0];
        let gap = hat0.norm() - phi0.norm();
        let next: Vec<Complex64> = (1..coeffs.len())
            .map(|k| hat0 * coeffs[k] - phi0 * hat[k])
            .collect();
        steps.push(SchurStep {
            phi: CPoly::new(coeffs),
            phi_hat: CPoly::new(hat),
            gap,
        });
        coeffs = next;
    }
    steps
}

/// True when every recursion gap is strictly positive: all roots of `p` lie
/// strictly inside the unit circle.
pub fn is_schur(p: &CPoly) -> bool {
    schur_recursion(p).iter().all(|s| s.gap > 0.0)
}

/// A-stability certificate of the implicit part.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AStabilityReport {
    pub method: String,
    pub y_min: f64,
    pub y_max: f64,
    pub n_samples: usize,
    /// Minimum over samples of the gap at each recursion level.
    pub min_gaps: Vec<f64>,
    pub min_gap: f64,
    /// Every sampled gap strictly positive.
    pub strictly_positive: bool,
    /// Root moduli of the stiff-limit polynomial.
    pub asymptotic_moduli: Vec<f64>,
    pub max_asymptotic_modulus: f64,
    pub a_stable: bool,
}

/// Certifies A-stability of the implicit part by the Schur recursion at
/// imaginary-axis samples plus the stiff-limit root moduli. Roots have no
/// poles in the closed left half-plane (the leading coefficient
/// `(1 - lambda z)^s` vanishes only at `z = 1/lambda > 0`), so by the
/// maximum principle sampling the axis decides. Marginal methods whose
/// roots touch the circle (the theta-like order-1 part at `lambda = 1/2`)
/// report gaps at rounding level and pass under `BOUNDARY_TOL`.
pub fn a_stability_check(t: &Tableau, y_max: f64, n_samples: usize) -> AStabilityReport {
    let sp = StabilityPolynomial::build(t).expect("stability polynomial");
    let y_min = A_STABILITY_Y_MIN;
    let mut min_gaps = vec![f64::INFINITY; t.s];
    for k in 0..n_samples {
        let frac = k as f64 / (n_samples - 1) as f64;
        let y = y_min * (y_max / y_min).powf(frac);
        let p = sp.at(cplx(0.0), Complex64::new(0.0, y));
        for (level, step) in schur_recursion(&p).iter().enumerate() {
            min_gaps[level] = min_gaps[level].min(step.gap);
        }
    }
    let min_gap = min_gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let limit = sp.stiff_limit_poly().trimmed(1e-13);
    let asymptotic_moduli: Vec<f64> = limit.roots().iter().map(|r| r.norm()).collect();
    let max_asymptotic_modulus = asymptotic_moduli.iter().copied().fold(0.0, f64::max);
    AStabilityReport {
        method: t.name.clone(),
        y_min,
        y_max,
        n_samples,
        min_gap,
        strictly_positive: min_gaps.iter().all(|&g| g > 0.0),
        min_gaps,
        asymptotic_moduli,
        max_asymptotic_modulus,
        a_stable: min_gap >= -BOUNDARY_TOL && max_asymptotic_modulus <= 1.0 + BOUNDARY_TOL,
    }
}

/// L-stability verdict of the implicit part.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LStabilityReport {
    pub method: String,
    /// Degree in `z` of the coefficient of `w^i` (below the leading one) at
    /// `z0 = 0`, measured with relative tolerance `1e-8`.
    pub degrees: Vec<usize>,
    /// All degrees strictly below `s`: the characteristic roots vanish in
    /// the stiff limit.
    pub degree_condition: bool,
    /// Spectral radius of `M(0, z1)` at `z1 = -10^k`, `k = 2..8`. The zero
    /// eigenvalue in the stiff limit is defective for `s > 1`, so the decay
    /// rate is `|z1|^(-1/s)` rather than `1/|z1|`.
    pub stiff_decay: Vec<(f64, f64)>,
    pub a_stable: bool,
    pub l_stable: bool,
}

pub fn l_stability_check(t: &Tableau) -> LStabilityReport {
    let sp = StabilityPolynomial::build(t).expect("stability polynomial");
    let rows = sp.implicit_part();
    let scale = rows
        .iter()
        .flatten()
        .map(|c| c.abs())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    // degrees of the non-leading coefficient polynomials
    let degrees: Vec<usize> = rows[..t.s]
        .iter()
        .map(|row| {
            let mut deg = 0;
            for (k, &c) in row.iter().enumerate() {
                if c.abs() > 1e-8 * scale {
                    deg = k;
                }
            }
            deg
        })
        .collect();
    let degree_condition = degrees.iter().all(|&d| d < t.s);
    let stiff_decay: Vec<(f64, f64)> = (2..=8)
        .map(|k| {
            let z1 = -(10.0_f64.powi(k));
            let rho = stability_matrix(t, cplx(0.0), cplx(z1))
                .map(|m| spectral_radius(&m))
                .unwrap_or(f64::INFINITY);
            (z1, rho)
        })
        .collect();
    let a_report = a_stability_check(t, A_STABILITY_Y_MAX, A_STABILITY_SAMPLES);
    LStabilityReport {
        method: t.name.clone(),
        degrees,
        degree_condition,
        stiff_decay,
        a_stable: a_report.a_stable,
        l_stable: a_report.a_stable && degree_condition,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::char_poly;
    use crate::tableau::{appendix_data, catalog, reconstruct_both, CATALOG_NAMES};
    use approx::assert_relative_eq;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Deterministic pseudo-random stream for test points.
    struct SplitMix(u64);
    impl SplitMix {
        fn next_f64(&mut self) -> f64 {
            self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64
        }
        fn left_half_point(&mut self) -> Complex64 {
            c64(-4.0 * self.next_f64(), 8.0 * self.next_f64() - 4.0)
        }
    }

    #[test]
    fn matrix_at_origin_is_v() {
        for name in CATALOG_NAMES {
            let t = catalog(name).unwrap();
            let m = stability_matrix(&t, c64(0.0, 0.0), c64(0.0, 0.0)).unwrap();
            for i in 0..t.r {
                for j in 0..t.r {
                    let expected = if t.euler_split { 1.0 } else { t.v[(i, j)] };
                    assert_relative_eq!(m[(i, j)].re, expected, epsilon = 1e-14);
                    assert_relative_eq!(m[(i, j)].im, 0.0, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn origin_is_boundary_point() {
        for name in CATALOG_NAMES {
            let t = catalog(name).unwrap();
            assert_eq!(
                classify_point(&t, c64(0.0, 0.0), c64(0.0, 0.0)),
                PointClass::Boundary,
                "{name}"
            );
        }
    }

    #[test]
    fn dimsim2a_real_axis_membership() {
        let t = catalog("DIMSIM2A").unwrap();
        assert!(is_stable_point(&t, c64(-1.0, 0.0), c64(0.0, 0.0)));
        assert!(!is_stable_point(&t, c64(-3.5, 0.0), c64(0.0, 0.0)));
    }

    #[test]
    fn pole_reports_unstable() {
        let t = catalog("DIMSIM2A").unwrap();
        let pole = 1.0 / t.lambda;
        assert_eq!(
            classify_point(&t, c64(0.0, 0.0), c64(pole, 0.0)),
            PointClass::Unstable
        );
    }

    #[test]
    fn eigenvalues_match_determinant_roots() {
        // spectral radius from the matrix agrees with the roots of the
        // precomputed polynomial at 50 random left-half-plane points
        for name in CATALOG_NAMES {
            let t = catalog(name).unwrap();
            let sp = StabilityPolynomial::build(&t).unwrap();
            let mut rng = SplitMix(0x1234_5678 ^ name.len() as u64);
            for _ in 0..50 {
                let z0 = rng.left_half_point();
                let z1 = rng.left_half_point();
                let m = stability_matrix(&t, z0, z1).unwrap();
                let mut eig: Vec<f64> = char_poly(&m).roots().iter().map(|r| r.norm()).collect();
                let mut proots: Vec<f64> = sp
                    .at(z0, z1)
                    .trimmed(1e-13)
                    .roots()
                    .iter()
                    .map(|r| r.norm())
                    .collect();
                eig.sort_by(f64::total_cmp);
                proots.sort_by(f64::total_cmp);
                assert_eq!(eig.len(), proots.len(), "{name}");
                for (a, b) in eig.iter().zip(&proots) {
                    assert!((a - b).abs() < 1e-9, "{name}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn transformed_and_untransformed_share_spectra() {
        for name in ["DIMSIM2A", "DIMSIM3A", "DIMSIM3L", "DIMSIM4A"] {
            let data = appendix_data(name).unwrap();
            let (transformed, plain) = reconstruct_both(&data).unwrap();
            let mut rng = SplitMix(0xabcdef ^ name.len() as u64);
            for _ in 0..20 {
                let z0 = rng.left_half_point();
                let z1 = rng.left_half_point();
                let m1 = stability_matrix(&transformed, z0, z1).unwrap();
                let m2 = stability_matrix(&plain, z0, z1).unwrap();
                // QR-based eigenvalues resolve the similarity to full
                // precision
                let mut e1: Vec<f64> = m1
                    .eigenvalues()
                    .expect("complex eigenvalues")
                    .iter()
                    .map(|e| e.norm())
                    .collect();
                let mut e2: Vec<f64> = m2
                    .eigenvalues()
                    .expect("complex eigenvalues")
                    .iter()
                    .map(|e| e.norm())
                    .collect();
                e1.sort_by(f64::total_cmp);
                e2.sort_by(f64::total_cmp);
                // eigenvalues of non-normal matrices carry rounding of size
                // eps * norm even from a backward-stable solver
                let tol = 1e-12 * m1.camax().max(1.0);
                for (a, b) in e1.iter().zip(&e2) {
                    assert!((a - b).abs() < tol, "{name}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn polynomial_leading_coefficient_is_resolvent_power() {
        // at z0 = 0 the w^s coefficient must equal (1 - lambda z)^s
        for name in ["DIMSIM2L", "DIMSIM3A", "DIMSIM4A"] {
            let t = catalog(name).unwrap();
            let sp = StabilityPolynomial::build(&t).unwrap();
            let lead = &sp.implicit_part()[t.s];
            for (k, &coef) in lead.iter().enumerate() {
                let binom = (0..k).fold(1.0, |acc, i| acc * (t.s - i) as f64 / (i + 1) as f64);
                let expected = binom * (-t.lambda).powi(k as i32);
                assert_relative_eq!(coef, expected, epsilon = 1e-10, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn polynomial_at_origin_has_consistency_root() {
        for name in CATALOG_NAMES {
            let t = catalog(name).unwrap();
            let sp = StabilityPolynomial::build(&t).unwrap();
            let p = sp.at(c64(0.0, 0.0), c64(0.0, 0.0));
            let mut mods: Vec<f64> = p.roots().iter().map(|r| r.norm()).collect();
            mods.sort_by(f64::total_cmp);
            assert_relative_eq!(mods[mods.len() - 1], 1.0, epsilon = 1e-9);
            // the zero root has multiplicity s-1, so its computed copies
            // scatter at roughly (coefficient noise)^(1/(s-1))
            for &m in &mods[..mods.len() - 1] {
                assert!(m < 1e-4, "{name}: spurious root modulus {m}");
            }
        }
    }

    #[test]
    fn backward_euler_polynomial_is_schur_off_origin() {
        // (1 - z) w - 1 at z = iy: the single root 1/(1 - iy) is inside for
        // every nonzero real y
        for &y in &[1e-3, 0.1, 1.0, 10.0, 1e4] {
            let z = c64(0.0, y);
            let p = CPoly::new(vec![-Complex64::ONE, Complex64::ONE - z]);
            assert!(is_schur(&p), "y = {y}");
        }
    }

    #[test]
    fn schur_agrees_with_companion_roots() {
        // verdict vs direct root moduli from nalgebra's complex eigensolver
        // on the companion matrix
        for name in CATALOG_NAMES {
            let t = catalog(name).unwrap();
            let sp = StabilityPolynomial::build(&t).unwrap();
            for k in 0..40 {
                let y = 0.05 * (1e4_f64 / 0.05).powf(k as f64 / 39.0);
                let p = sp.at(c64(0.0, 0.0), c64(0.0, y)).trimmed(1e-13);
                let n = p.degree();
                let lead = p.coeffs[n];
                let mut comp = DMatrix::<Complex64>::zeros(n, n);
                for i in 1..n {
                    comp[(i, i - 1)] = Complex64::ONE;
                }
                for i in 0..n {
                    comp[(i, n - 1)] = -p.coeffs[i] / lead;
                }
                let max_mod = comp
                    .eigenvalues()
                    .map(|ev| ev.iter().map(|e| e.norm()).fold(0.0_f64, f64::max))
                    .unwrap_or(f64::NAN);
                let schur = is_schur(&p);
                // skip the verdict comparison when roots sit at the circle
                // within rounding
                if (max_mod - 1.0).abs() > 1e-9 {
                    assert_eq!(schur, max_mod < 1.0, "{name} y={y}: |w|max={max_mod}");
                }
            }
        }
    }

    #[test]
    fn a_stability_verdicts() {
        for name in CATALOG_NAMES {
            let t = catalog(name).unwrap();
            let report = a_stability_check(&t, A_STABILITY_Y_MAX, 400);
            assert!(report.a_stable, "{name}: {report:?}");
            if name != "DIMSIM1A" {
                assert!(
                    report.strictly_positive,
                    "{name}: gaps not strictly positive: {:?}",
                    report.min_gaps
                );
            } else {
                // theta-like marginal case: gaps vanish identically
                assert!(report.min_gap.abs() <= 1e-12, "{:?}", report.min_gaps);
            }
        }
    }

    #[test]
    fn l_stability_verdicts() {
        for (name, expect_l) in [
            ("DIMSIM1A", false),
            ("DIMSIM1L", true),
            ("DIMSIM2A", false),
            ("DIMSIM2L", true),
            ("DIMSIM3A", false),
            ("DIMSIM3L", true),
            ("DIMSIM4A", false),
        ] {
            let t = catalog(name).unwrap();
            let report = l_stability_check(&t);
            assert!(report.a_stable, "{name} must be A-stable");
            assert_eq!(report.l_stable, expect_l, "{name}: {report:?}");
        }
    }

    #[test]
    fn stiff_decay_rate_is_defective_root() {
        // the stiff-limit zero eigenvalue is defective for s > 1: decay at
        // z1 = -1e8 lands near 1e-4 (s = 2) and 1e-3 (s = 3), not 1/|z1|
        let r2 = l_stability_check(&catalog("DIMSIM2L").unwrap());
        let rho2 = r2.stiff_decay.iter().find(|(z, _)| *z == -1e8).unwrap().1;
        assert!(rho2 < 1e-4 && rho2 > 1e-6, "s=2 decay: {rho2:.3e}");
        let r3 = l_stability_check(&catalog("DIMSIM3L").unwrap());
        let rho3 = r3.stiff_decay.iter().find(|(z, _)| *z == -1e8).unwrap().1;
        assert!(rho3 < 1e-2 && rho3 > 1e-4, "s=3 decay: {rho3:.3e}");
        // scalar case: simple eigenvalue, full 1/|z1| decay
        let r1 = l_stability_check(&catalog("DIMSIM1L").unwrap());
        let rho1 = r1.stiff_decay.iter().find(|(z, _)| *z == -1e8).unwrap().1;
        assert!(rho1 < 1e-6, "s=1 decay: {rho1:.3e}");
    }

    #[test]
    fn stiff_limit_moduli_below_one() {
        for name in CATALOG_NAMES {
            let t = catalog(name).unwrap();
            let report = a_stability_check(&t, A_STABILITY_Y_MAX, 100);
            assert!(
                report.max_asymptotic_modulus <= 1.0 + 1e-10,
                "{name}: {:?}",
                report.asymptotic_moduli
            );
        }
    }
}
