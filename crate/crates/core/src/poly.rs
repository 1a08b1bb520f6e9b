//! Small polynomial utilities: dense univariate polynomials with complex
//! coefficients, root finding by the Aberth–Ehrlich iteration, characteristic
//! polynomials of small complex matrices, and dense bivariate polynomials
//! used by the stability machinery.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Univariate polynomial with complex coefficients, ascending degree order.
/// `coeffs[k]` multiplies `w^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CPoly {
    pub coeffs: Vec<Complex64>,
}

impl CPoly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        CPoly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, w: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * w + c;
        }
        acc
    }

    pub fn eval_derivative(&self, w: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1..self.coeffs.len()).rev() {
            acc = acc * w + self.coeffs[k] * k as f64;
        }
        acc
    }

    /// Drops trailing coefficients below `tol` relative to the largest one.
    pub fn trimmed(&self, tol: f64) -> CPoly {
        let scale = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 && coeffs.last().unwrap().norm() <= tol * scale {
            coeffs.pop();
        }
        CPoly { coeffs }
    }

    /// All complex roots. Degrees 1 and 2 use closed forms, higher degrees
    /// the Aberth–Ehrlich simultaneous iteration. The leading coefficient
    /// must be nonzero; callers trim degenerate leading terms first.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = self.degree();
        match n {
            0 => Vec::new(),
            1 => vec![-self.coeffs[0] / self.coeffs[1]],
            2 => {
                let (c, b, a) = (self.coeffs[0], self.coeffs[1], self.coeffs[2]);
                let disc = (b * b - 4.0 * a * c).sqrt();
                // pick the sign that avoids cancellation in -b +/- disc
                let q = if (b.conj() * disc).re >= 0.0 {
                    -0.5 * (b + disc)
                } else {
                    -0.5 * (b - disc)
                };
                if q.norm() == 0.0 {
                    vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]
                } else {
                    vec![q / a, c / q]
                }
            }
            _ => self.aberth(),
        }
    }

    fn aberth(&self) -> Vec<Complex64> {
        let n = self.degree();
        let an = self.coeffs[n];
        // Cauchy-style radius bound for initial guesses.
        let radius = 1.0
            + self.coeffs[..n]
                .iter()
                .map(|c| (c / an).norm())
                .fold(0.0_f64, f64::max);
        let mut roots: Vec<Complex64> = (0..n)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
                Complex64::from_polar(radius * 0.5, angle)
            })
            .collect();
        for _ in 0..200 {
            let mut delta_max = 0.0_f64;
            for i in 0..n {
                let w = roots[i];
                let p = self.eval(w);
                let dp = self.eval_derivative(w);
                if p.norm() == 0.0 {
                    continue;
                }
                let newton = if dp.norm() > 0.0 {
                    p / dp
                } else {
                    Complex64::new(1e-8, 1e-8)
                };
                let mut sum = Complex64::new(0.0, 0.0);
                for (j, &r) in roots.iter().enumerate() {
                    if j != i {
                        let d = w - r;
                        if d.norm() > 1e-300 {
                            sum += 1.0 / d;
                        }
                    }
                }
                let denom = 1.0 - newton * sum;
                let step = if denom.norm() > 1e-300 {
                    newton / denom
                } else {
                    newton
                };
                roots[i] = w - step;
                delta_max = delta_max.max(step.norm() / (1.0 + roots[i].norm()));
            }
            if delta_max < 1e-15 {
                break;
            }
        }
        roots
    }
}

/// Characteristic polynomial `det(wI - M)` of a small complex matrix by the
/// Faddeev–LeVerrier recursion. Returns ascending coefficients; the leading
/// coefficient is exactly 1.
pub fn char_poly(m: &DMatrix<Complex64>) -> CPoly {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let mut aux = m.clone();
    for k in 1..=n {
        let c = -aux.trace() / k as f64;
        coeffs[n - k] = c;
        if k < n {
            for i in 0..n {
                aux[(i, i)] += c;
            }
            aux = m * aux;
        }
    }
    CPoly::new(coeffs)
}

/// Spectral radius of a small complex matrix via its characteristic roots.
pub fn spectral_radius(m: &DMatrix<Complex64>) -> f64 {
    char_poly(m)
        .roots()
        .iter()
        .map(|r| r.norm())
        .fold(0.0, f64::max)
}

/// Dense real bivariate polynomial. `coeffs[j][k]` multiplies `x^j y^k`.
#[derive(Debug, Clone)]
pub struct BivarPoly {
    pub coeffs: Vec<Vec<f64>>,
}

impl BivarPoly {
    pub fn zero(deg_x: usize, deg_y: usize) -> Self {
        BivarPoly {
            coeffs: vec![vec![0.0; deg_y + 1]; deg_x + 1],
        }
    }

    pub fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        // Horner in x of Horner-in-y rows.
        let mut acc = Complex64::new(0.0, 0.0);
        for row in self.coeffs.iter().rev() {
            let mut ry = Complex64::new(0.0, 0.0);
            for &c in row.iter().rev() {
                ry = ry * y + c;
            }
            acc = acc * x + ry;
        }
        acc
    }

    /// Coefficients of the univariate polynomial in `y` obtained by fixing
    /// `x = 0`: simply the first row.
    pub fn slice_x0(&self) -> Vec<f64> {
        self.coeffs[0].clone()
    }

    /// Degree in `y` with coefficients below `tol` (relative to the largest
    /// coefficient of the whole polynomial) treated as zero.
    pub fn degree_y(&self, tol: f64) -> usize {
        let scale = self
            .coeffs
            .iter()
            .flatten()
            .map(|c| c.abs())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut deg = 0;
        for row in &self.coeffs {
            for (k, &c) in row.iter().enumerate() {
                if c.abs() > tol * scale {
                    deg = deg.max(k);
                }
            }
        }
        deg
    }
}
