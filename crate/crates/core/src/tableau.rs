//! Method tableaux: coefficient reconstruction, order verification, the
//! similarity transformation, and the built-in method catalog.
//!
//! A method pair is stored in transformed coordinates exactly as used by the
//! stepper: shared abscissae `c`, explicit stage matrix `A` (strictly lower
//! triangular), implicit stage matrix `A*` (lower triangular with constant
//! diagonal `lambda`), shared `U` and `V`, and output matrices `B`, `B*`.
//! Published coefficient tables print only `c`, `A`, `A*`, `U`, `V`; the
//! output matrices are reconstructed here from the order conditions.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Factorial as f64; exact for the small arguments used here.
fn fact(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Componentwise `c^k / k!`.
fn c_pow_over_fact(c: &DVector<f64>, k: usize) -> DVector<f64> {
    c.map(|ci| ci.powi(k as i32) / fact(k))
}

/// Real polynomial helpers (ascending coefficients).
fn poly_from_roots(roots: &[f64]) -> Vec<f64> {
    let mut p = vec![1.0];
    for &r in roots {
        let mut next = vec![0.0; p.len() + 1];
        for (k, &pc) in p.iter().enumerate() {
            next[k + 1] += pc;
            next[k] -= pc * r;
        }
        p = next;
    }
    p
}

fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Exact integral of `p` over `[0, b]` by term-wise integration.
fn poly_integral(p: &[f64], b: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &c) in p.iter().enumerate().rev() {
        acc = acc * b + c / (k + 1) as f64;
    }
    acc * b
}

/// A complete IMEX method tableau in working (transformed) coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "TableauRepr", try_from = "TableauRepr")]
pub struct Tableau {
    pub name: String,
    /// Stage count.
    pub s: usize,
    /// External stage count (equal to `s` for every catalog method).
    pub r: usize,
    /// Order.
    pub p: usize,
    /// Stage order (equal to `p`).
    pub q: usize,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub a_star: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub b_star: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// Implicit diagonal value.
    pub lambda: f64,
    /// Order-1 pair with separate abscissae: the explicit stage sits at 0
    /// (forward Euler) and the implicit stage at 1. The two parts compose,
    /// so the joint stability function is the product of the parts'.
    pub euler_split: bool,
}

/// JSON mirror of [`Tableau`]; matrices are row-major arrays of arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableauRepr {
    #[serde(default)]
    pub name: String,
    pub s: usize,
    pub r: usize,
    pub p: usize,
    pub q: usize,
    pub c: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "Astar")]
    pub a_star: Vec<Vec<f64>>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "Bstar")]
    pub b_star: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    pub lambda: f64,
    #[serde(default)]
    pub euler_split: bool,
}

fn mat_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_to_mat(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::InvalidParameter("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

impl From<Tableau> for TableauRepr {
    fn from(t: Tableau) -> Self {
        TableauRepr {
            name: t.name.clone(),
            s: t.s,
            r: t.r,
            p: t.p,
            q: t.q,
            c: t.c.iter().copied().collect(),
            a: mat_to_rows(&t.a),
            a_star: mat_to_rows(&t.a_star),
            u: mat_to_rows(&t.u),
            b: mat_to_rows(&t.b),
            b_star: mat_to_rows(&t.b_star),
            v: mat_to_rows(&t.v),
            lambda: t.lambda,
            euler_split: t.euler_split,
        }
    }
}

impl TryFrom<TableauRepr> for Tableau {
    type Error = Error;
    fn try_from(r: TableauRepr) -> Result<Self> {
        let t = Tableau {
            name: r.name,
            s: r.s,
            r: r.r,
            p: r.p,
            q: r.q,
            c: DVector::from_vec(r.c),
            a: rows_to_mat(&r.a)?,
            a_star: rows_to_mat(&r.a_star)?,
            u: rows_to_mat(&r.u)?,
            b: rows_to_mat(&r.b)?,
            b_star: rows_to_mat(&r.b_star)?,
            v: rows_to_mat(&r.v)?,
            lambda: r.lambda,
            euler_split: r.euler_split,
        };
        t.validate()?;
        Ok(t)
    }
}

impl Tableau {
    /// Builds a shared-stage tableau and checks the structural invariants.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        p: usize,
        c: DVector<f64>,
        a: DMatrix<f64>,
        a_star: DMatrix<f64>,
        u: DMatrix<f64>,
        b: DMatrix<f64>,
        b_star: DMatrix<f64>,
        v: DMatrix<f64>,
    ) -> Result<Self> {
        let s = c.len();
        let lambda = a_star[(0, 0)];
        let t = Tableau {
            name: name.into(),
            s,
            r: v.nrows(),
            p,
            q: p,
            c,
            a,
            a_star,
            u,
            b,
            b_star,
            v,
            lambda,
            euler_split: false,
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let s = self.s;
        if self.c.len() != s
            || self.a.shape() != (s, s)
            || self.a_star.shape() != (s, s)
            || self.u.shape() != (s, self.r)
            || self.b.shape() != (self.r, s)
            || self.b_star.shape() != (self.r, s)
            || self.v.shape() != (self.r, self.r)
        {
            return Err(Error::InvalidParameter("inconsistent tableau dimensions".into()));
        }
        for i in 0..s {
            for j in i..s {
                if self.a[(i, j)] != 0.0 {
                    return Err(Error::InvalidParameter(
                        "explicit stage matrix must be strictly lower triangular".into(),
                    ));
                }
                if j > i && self.a_star[(i, j)] != 0.0 {
                    return Err(Error::InvalidParameter(
                        "implicit stage matrix must be lower triangular".into(),
                    ));
                }
            }
            if (self.a_star[(i, i)] - self.lambda).abs() > 1e-12 {
                return Err(Error::InvalidParameter(
                    "implicit stage matrix must have a constant diagonal".into(),
                ));
            }
        }
        if self.lambda <= 0.0 {
            return Err(Error::InvalidParameter("lambda must be positive".into()));
        }
        Ok(())
    }

    /// Abscissa vector of the explicit part. Identical to `c` except for the
    /// order-1 pair, whose forward Euler part sits at 0.
    pub fn c_explicit(&self) -> DVector<f64> {
        if self.euler_split {
            DVector::from_element(1, 0.0)
        } else {
            self.c.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TableauRepr::from(self.clone())).expect("tableau is serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: TableauRepr =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Tableau::try_from(repr)
    }

    /// Applies the external-stage similarity: `U -> U T^{-1}`, `B -> T B`,
    /// `B* -> T B*`, `V -> T V T^{-1}`. Stage matrices and abscissae are
    /// unchanged, and so are order, stage order and linear stability.
    pub fn transformed(&self, t: &DMatrix<f64>) -> Result<Tableau> {
        let t_inv = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularMatrix("transformation matrix".into()))?;
        let mut out = self.clone();
        out.u = &self.u * &t_inv;
        out.b = t * &self.b;
        out.b_star = t * &self.b_star;
        out.v = t * &self.v * &t_inv;
        Ok(out)
    }
}

/// Input-side expansion coefficients: external stage `i` carries
/// `sum_k q[k][i] h^k y^(k)(t_n)` up to order `p`.
#[derive(Debug, Clone)]
pub struct QVectors {
    pub q: Vec<DVector<f64>>,
}

impl QVectors {
    pub fn order(&self) -> usize {
        self.q.len() - 1
    }
}

/// Expansion coefficients of the explicit part. With `U = I` these are
/// `q_k = c^k/k! - A c^{k-1}/(k-1)!`; a transformed method applies `U^{-1}`,
/// which equals the transformation matrix.
pub fn q_vectors(t: &Tableau) -> QVectors {
    q_vectors_for(t, &t.a, t.c_explicit())
}

/// Expansion coefficients of the implicit part (same formula with `A*`).
pub fn q_vectors_implicit(t: &Tableau) -> QVectors {
    q_vectors_for(t, &t.a_star, t.c.clone())
}

fn q_vectors_for(t: &Tableau, stage_matrix: &DMatrix<f64>, c: DVector<f64>) -> QVectors {
    let u_inv = t
        .u
        .clone()
        .try_inverse()
        .expect("U is unit triangular for every supported method");
    let mut q = Vec::with_capacity(t.p + 1);
    q.push(&u_inv * DVector::from_element(t.s, 1.0));
    for k in 1..=t.p {
        let raw = c_pow_over_fact(&c, k) - stage_matrix * c_pow_over_fact(&c, k - 1);
        q.push(&u_inv * raw);
    }
    QVectors { q }
}

/// Raw coefficient data as published: `c`, stage matrices, `U` and `V` of the
/// transformed method. The output matrices are never transcribed by hand;
/// [`reconstruct_from_appendix`] rebuilds them.
#[derive(Debug, Clone)]
pub struct AppendixData {
    pub name: &'static str,
    pub c: &'static [f64],
    pub a: &'static [&'static [f64]],
    pub a_star: &'static [&'static [f64]],
    pub u: &'static [&'static [f64]],
    pub v: &'static [&'static [f64]],
}

/// The three interpolation matrices behind the output-coefficient formula.
/// Entry `(i, j)` of the first and third holds the integral of the Lagrange
/// basis numerator `phi_j` over `[0, 1+c_i]` and `[0, c_i]`, normalized by
/// `phi_j(c_j)`; the second holds `phi_j(1+c_i) / phi_j(c_j)`.
pub fn interpolation_matrices(c: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let s = c.len();
    for i in 0..s {
        for j in (i + 1)..s {
            if (c[i] - c[j]).abs() < 1e-14 {
                return Err(Error::DuplicateAbscissae(c[i], c[j]));
            }
        }
    }
    let mut b0 = DMatrix::zeros(s, s);
    let mut b1 = DMatrix::zeros(s, s);
    let mut b2 = DMatrix::zeros(s, s);
    for j in 0..s {
        let roots: Vec<f64> = (0..s).filter(|&k| k != j).map(|k| c[k]).collect();
        let phi = poly_from_roots(&roots);
        let denom = poly_eval(&phi, c[j]);
        for i in 0..s {
            b0[(i, j)] = poly_integral(&phi, 1.0 + c[i]) / denom;
            b1[(i, j)] = poly_eval(&phi, 1.0 + c[i]) / denom;
            b2[(i, j)] = poly_integral(&phi, c[i]) / denom;
        }
    }
    Ok((b0, b1, b2))
}

/// Output matrices giving order and stage order `s` for given stage matrices
/// and `V` (with `U = I`): `B = B0 - A B1 - V B2 + V A`, and the same with
/// the implicit stage matrix.
pub fn build_b_matrices(
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    a_star: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (b0, b1, b2) = interpolation_matrices(c)?;
    let b = &b0 - a * &b1 - v * &b2 + v * a;
    let b_star = &b0 - a_star * &b1 - v * &b2 + v * a_star;
    Ok((b, b_star))
}

/// Residuals of the order and stage-order conditions, obtained by matching
/// Taylor coefficients of the exact flow against the method through order `p`.
#[derive(Debug, Clone)]
pub struct OrderReport {
    /// Largest stage-condition mismatch, explicit part.
    pub stage_explicit: f64,
    /// Largest output-condition mismatch, explicit part.
    pub output_explicit: f64,
    pub stage_implicit: f64,
    pub output_implicit: f64,
}

impl OrderReport {
    pub fn max_residual(&self) -> f64 {
        self.stage_explicit
            .max(self.output_explicit)
            .max(self.stage_implicit)
            .max(self.output_implicit)
    }
}

/// Verifies order `p` and stage order `q = p` of both parts by Taylor
/// matching. The input expansion of each part is the one its own stage
/// matrix induces; the output conditions then carry the actual content.
pub fn verify_order(t: &Tableau) -> OrderReport {
    let (se, oe) = part_residuals(t, &t.a, &t.b, t.c_explicit(), &q_vectors(t));
    let (si, oi) = part_residuals(t, &t.a_star, &t.b_star, t.c.clone(), &q_vectors_implicit(t));
    OrderReport {
        stage_explicit: se,
        output_explicit: oe,
        stage_implicit: si,
        output_implicit: oi,
    }
}

fn part_residuals(
    t: &Tableau,
    stage_matrix: &DMatrix<f64>,
    output_matrix: &DMatrix<f64>,
    c: DVector<f64>,
    qv: &QVectors,
) -> (f64, f64) {
    let p = t.p;
    let mut stage_res = 0.0_f64;
    let mut out_res = 0.0_f64;
    for k in 0..=p {
        // exp(c z) = z A exp(c z) + U w(z), coefficient of z^k
        let mut stage = c_pow_over_fact(&c, k) - &t.u * &qv.q[k];
        if k >= 1 {
            stage -= stage_matrix * c_pow_over_fact(&c, k - 1);
        }
        stage_res = stage_res.max(stage.amax());
        // exp(z) w(z) = z B exp(c z) + V w(z), coefficient of z^k
        let mut out = -(&t.v * &qv.q[k]);
        for j in 0..=k {
            out += &qv.q[k - j] / fact(j);
        }
        if k >= 1 {
            out -= output_matrix * c_pow_over_fact(&c, k - 1);
        }
        out_res = out_res.max(out.amax());
    }
    (stage_res, out_res)
}

/// Rebuilds the full tableau from published data. `U` of the transformed
/// method is the inverse of the transformation, so `T = U^{-1}`, the
/// untransformed `V` is `U V_bar U^{-1}` (rank one for these methods), the
/// output matrices come from [`build_b_matrices`] in untransformed
/// coordinates, and `T` maps them back.
pub fn reconstruct_from_appendix(data: &AppendixData) -> Result<Tableau> {
    let s = data.c.len();
    let c = DVector::from_row_slice(data.c);
    let from_rows = |rows: &[&[f64]]| DMatrix::from_fn(s, s, |i, j| rows[i][j]);
    let a = from_rows(data.a);
    let a_star = from_rows(data.a_star);
    let u = from_rows(data.u);
    let v_bar = from_rows(data.v);

    let t_mat = u
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("appendix U matrix".into()))?;
    let v = &u * &v_bar * &t_mat;
    let (b, b_star) = build_b_matrices(&c, &a, &a_star, &v)?;
    let tableau = Tableau {
        name: data.name.to_string(),
        s,
        r: s,
        p: s,
        q: s,
        c,
        a,
        a_star,
        u,
        b: &t_mat * b,
        b_star: &t_mat * b_star,
        v: v_bar,
        lambda: data.a_star[0][0],
        euler_split: false,
    };
    tableau.validate()?;
    for i in 1..s {
        if tableau.c[i] <= tableau.c[i - 1] {
            return Err(Error::InvalidParameter("abscissae must be increasing".into()));
        }
    }
    if (tableau.c[s - 1] - 1.0).abs() > 1e-14 {
        return Err(Error::InvalidParameter("last abscissa must be 1".into()));
    }
    let residual = verify_order(&tableau).max_residual();
    if residual > 1e-10 {
        return Err(Error::ReconstructionInconsistency(residual));
    }
    Ok(tableau)
}

/// Order-1 pair: forward Euler explicit part composed with an implicit
/// one-leg theta-like stage. `lambda = 1/2` gives the A-stable variant,
/// `lambda = 1` backward Euler (L-stable).
fn euler_pair(name: &str, lambda: f64) -> Tableau {
    Tableau {
        name: name.to_string(),
        s: 1,
        r: 1,
        p: 1,
        q: 1,
        c: DVector::from_element(1, 1.0),
        a: DMatrix::from_element(1, 1, 0.0),
        a_star: DMatrix::from_element(1, 1, lambda),
        u: DMatrix::from_element(1, 1, 1.0),
        b: DMatrix::from_element(1, 1, 1.0),
        b_star: DMatrix::from_element(1, 1, 1.0),
        v: DMatrix::from_element(1, 1, 1.0),
        lambda,
        euler_split: true,
    }
}

pub const CATALOG_NAMES: [&str; 7] = [
    "DIMSIM1A", "DIMSIM1L", "DIMSIM2A", "DIMSIM2L", "DIMSIM3A", "DIMSIM3L", "DIMSIM4A",
];

/// Published coefficients of the order-2..4 methods. `B`, `B*` are absent by
/// design and always reconstructed.
pub fn appendix_data(name: &str) -> Option<AppendixData> {
    let data = match name {
        "DIMSIM2A" => AppendixData {
            name: "DIMSIM2A",
            c: &[0.5207015987954746, 1.0],
            a: &[&[0.0, 0.0], &[0.6335780271090006, 0.0]],
            a_star: &[
                &[0.9756662942012514, 0.0],
                &[1.065344873186484, 0.9756662942012514],
            ],
            u: &[&[1.0, 0.0], &[0.8760323181723925, 1.0]],
            v: &[
                &[0.8035259425918053, 1.584881273180670],
                &[0.09961124839144930, 0.1964740574081947],
            ],
        },
        "DIMSIM2L" => AppendixData {
            name: "DIMSIM2L",
            c: &[0.5725, 1.0],
            a: &[&[0.0, 0.0], &[0.5507246376811594, 0.0]],
            a_star: &[
                &[0.4025509997331064, 0.0],
                &[0.3054637337141530, 0.4025509997331064],
            ],
            u: &[&[1.0, 0.0], &[0.897, 1.0]],
            v: &[
                &[0.7976747326679189, 1.964322983806612],
                &[0.08216049746479565, 0.2023252673320811],
            ],
        },
        "DIMSIM3A" => AppendixData {
            name: "DIMSIM3A",
            c: &[0.3785922442536512, 0.7369632894601272, 1.0],
            a: &[
                &[0.0, 0.0, 0.0],
                &[0.6105030326964779, 0.0, 0.0],
                &[0.5054775907409634, 0.3826213150653439, 0.0],
            ],
            a_star: &[
                &[0.5023463944444552, 0.0, 0.0],
                &[-0.8899211224523407, 0.5023463944444552, 0.0],
                &[-3.305290943287502, 0.4193402392399124, 0.5023463944444552],
            ],
            u: &[
                &[1.0, 0.0, 0.0],
                &[0.6070215241878391, 1.0, 0.0],
                &[0.5361152778084712, 1.091180739129647, 1.0],
            ],
            v: &[
                &[0.5418838673478645, 0.9017144383487438, 2.958352027358458],
                &[0.2129486962575630, 0.3543543656001081, 1.162568670627143],
                &[0.01900613148571312, 0.03162689316015439, 0.1037617670520274],
            ],
        },
        "DIMSIM3L" => AppendixData {
            name: "DIMSIM3L",
            c: &[0.4020684033460171, 0.7554528159803609, 1.0],
            a: &[
                &[0.0, 0.0, 0.0],
                &[0.5925366351567699, 0.0, 0.0],
                &[0.5582112117594124, 0.3256969821842126, 0.0],
            ],
            a_star: &[
                &[0.5201730949739405, 0.0, 0.0],
                &[-1.082981144838764, 0.5201730949739405, 0.0],
                &[-2.860648399647160, 0.2917933416909193, 0.5201730949739405],
            ],
            u: &[
                &[1.0, 0.0, 0.0],
                &[0.6343850217261301, 1.0, 0.0],
                &[0.5123644514467803, 1.138668063964801, 1.0],
            ],
            v: &[
                &[0.4816666646770200, 0.7031253548332313, 3.663136087971684],
                &[0.1761045471411361, 0.2570731613311589, 1.339297421217996],
                &[0.03435316450098294, 0.05014791919551827, 0.2612601739918211],
            ],
        },
        "DIMSIM4A" => AppendixData {
            name: "DIMSIM4A",
            c: &[
                0.2561983471074380,
                0.4485981308411215,
                0.7622950819672131,
                1.0,
            ],
            a: &[
                &[0.0, 0.0, 0.0, 0.0],
                &[0.3245033112582781, 0.0, 0.0, 0.0],
                &[0.1102941176470588, 0.6486486486486486, 0.0, 0.0],
                &[0.3111111111111111, 0.1603053435114504, 0.4729729729729730, 0.0],
            ],
            a_star: &[
                &[1.228571428571429, 0.0, 0.0, 0.0],
                &[-2.659574468085106, 1.228571428571429, 0.0, 0.0],
                &[-6.431818181818182, -0.4444444444444444, 1.228571428571429, 0.0],
                &[
                    -5.931034482758621,
                    -4.906250000000000,
                    1.103448275862069,
                    1.228571428571429,
                ],
            ],
            u: &[
                &[1.0, 0.0, 0.0, 0.0],
                &[0.7011494252873563, 1.0, 0.0, 0.0],
                &[0.2363213391750847, 0.3563218390804598, 1.0, 0.0],
                &[0.3704826947154125, 0.5083355703606088, 0.6222222222222222, 1.0],
            ],
            v: &[
                &[0.3181770223788457, 1.319227410800732, 0.2619374293792898, 1.680623378297797],
                &[
                    0.09508738599827574,
                    0.3942518698944718,
                    0.07828015130875329,
                    0.5022552624798014,
                ],
                &[0.2091032901032768, 0.8669852710621154, 0.1721430978104653, 1.104491692074865],
                &[
                    0.02185292729383308,
                    0.09060673356209266,
                    0.01799029847272758,
                    0.1154280099162172,
                ],
            ],
        },
        _ => return None,
    };
    Some(data)
}

/// Looks up a catalog method by name (case-insensitive).
pub fn catalog(name: &str) -> Result<Tableau> {
    let canonical = name.to_ascii_uppercase();
    match canonical.as_str() {
        "DIMSIM1A" => Ok(euler_pair("DIMSIM1A", 0.5)),
        "DIMSIM1L" => Ok(euler_pair("DIMSIM1L", 1.0)),
        other => match appendix_data(other) {
            Some(data) => reconstruct_from_appendix(&data),
            None => Err(Error::UnknownMethod(name.to_string())),
        },
    }
}

/// The catalog tableau together with its untransformed twin (`U = I`,
/// rank-one `V`), used by tests that compare the two representations.
pub fn reconstruct_both(data: &AppendixData) -> Result<(Tableau, Tableau)> {
    let transformed = reconstruct_from_appendix(data)?;
    // undo the transformation: applying U (the inverse of T) restores U = I
    let untransformed = transformed.transformed(&transformed.u.clone())?;
    Ok((transformed, untransformed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interpolation_matrices_single_stage() {
        // c = [1]: the basis numerator is the empty product 1, so the entries
        // are plain integrals: over [0, 2], value 1, and over [0, 1].
        let c = DVector::from_element(1, 1.0);
        let (b0, b1, b2) = interpolation_matrices(&c).unwrap();
        assert_relative_eq!(b0[(0, 0)], 2.0);
        assert_relative_eq!(b1[(0, 0)], 1.0);
        assert_relative_eq!(b2[(0, 0)], 1.0);
    }

    #[test]
    fn b_matrices_euler_pair() {
        let c = DVector::from_element(1, 1.0);
        let a = DMatrix::from_element(1, 1, 0.0);
        let a_star = DMatrix::from_element(1, 1, 0.5);
        let v = DMatrix::from_element(1, 1, 1.0);
        let (b, b_star) = build_b_matrices(&c, &a, &a_star, &v).unwrap();
        assert_relative_eq!(b[(0, 0)], 1.0);
        assert_relative_eq!(b_star[(0, 0)], 1.0);
    }

    #[test]
    fn b_collapses_when_a_vanishes() {
        // With A = 0 and s = 1 both products with A drop out: B = B0 - V B2.
        let c = DVector::from_element(1, 0.3);
        let a = DMatrix::from_element(1, 1, 0.0);
        let v = DMatrix::from_element(1, 1, 1.0);
        let (b0, _, b2) = interpolation_matrices(&c).unwrap();
        let (b, _) = build_b_matrices(&c, &a, &a, &v).unwrap();
        assert_relative_eq!(b[(0, 0)], b0[(0, 0)] - b2[(0, 0)]);
    }

    #[test]
    fn duplicate_abscissae_rejected() {
        let c = DVector::from_vec(vec![0.5, 0.5]);
        let a = DMatrix::zeros(2, 2);
        let v = DMatrix::identity(2, 2);
        assert!(matches!(
            build_b_matrices(&c, &a, &a, &v),
            Err(Error::DuplicateAbscissae(_, _))
        ));
    }

    #[test]
    fn q_vectors_single_stage() {
        // c = [1], A = 0: w(z) matches the exponential, q = (1, 1).
        let t = Tableau::new(
            "euler-like",
            1,
            DVector::from_element(1, 1.0),
            DMatrix::from_element(1, 1, 0.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let qv = q_vectors(&t);
        assert_relative_eq!(qv.q[0][0], 1.0);
        assert_relative_eq!(qv.q[1][0], 1.0);
    }

    #[test]
    fn q_vectors_reduce_to_powers_when_a_zero() {
        let data = appendix_data("DIMSIM3A").unwrap();
        let t = reconstruct_from_appendix(&data).unwrap();
        let mut zero_a = t.clone();
        zero_a.a = DMatrix::zeros(3, 3);
        zero_a.u = DMatrix::identity(3, 3);
        let qv = q_vectors(&zero_a);
        for k in 0..=3 {
            for i in 0..3 {
                assert_relative_eq!(qv.q[k][i], zero_a.c[i].powi(k as i32) / fact(k), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn catalog_order_residuals() {
        for name in CATALOG_NAMES {
            let t = catalog(name).unwrap();
            let report = verify_order(&t);
            assert!(
                report.max_residual() < 1e-10,
                "{name}: residual {:.3e}",
                report.max_residual()
            );
        }
    }

    #[test]
    fn euler_pair_has_zero_residual() {
        let t = catalog("DIMSIM1L").unwrap();
        let report = verify_order(&t);
        assert!(report.max_residual() < 1e-15, "{:?}", report);
    }

    #[test]
    fn catalog_dimsim1l_matrices() {
        let t = catalog("DIMSIM1L").unwrap();
        assert_eq!(t.s, 1);
        assert_relative_eq!(t.a[(0, 0)], 0.0);
        assert_relative_eq!(t.a_star[(0, 0)], 1.0);
        assert_relative_eq!(t.b[(0, 0)], 1.0);
        assert_relative_eq!(t.b_star[(0, 0)], 1.0);
        assert_relative_eq!(t.u[(0, 0)], 1.0);
        assert_relative_eq!(t.v[(0, 0)], 1.0);
    }

    #[test]
    fn catalog_dimsim2a_lambda() {
        let t = catalog("DIMSIM2A").unwrap();
        assert_relative_eq!(t.lambda, 0.9756662942012514);
        assert_relative_eq!(t.a_star[(1, 1)], 0.9756662942012514);
    }

    #[test]
    fn catalog_dimsim4a_abscissae() {
        let t = catalog("DIMSIM4A").unwrap();
        let expected = [
            0.2561983471074380,
            0.4485981308411215,
            0.7622950819672131,
            1.0,
        ];
        for (i, &e) in expected.iter().enumerate() {
            assert_relative_eq!(t.c[i], e);
        }
    }

    #[test]
    fn unknown_method_rejected() {
        assert!(matches!(catalog("DIMSIM9X"), Err(Error::UnknownMethod(_))));
    }

    #[test]
    fn perturbed_output_matrix_is_detected() {
        let mut t = catalog("DIMSIM2A").unwrap();
        t.b[(0, 0)] += 1e-3;
        let res = verify_order(&t).max_residual();
        assert!(res >= 1e-4, "residual {res:.3e} too small");
    }

    #[test]
    fn transformation_round_trip() {
        let t = catalog("DIMSIM3L").unwrap();
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, -0.1, 0.0, 0.9, 0.3, 0.4, 0.0, 1.1]);
        let m_inv = m.clone().try_inverse().unwrap();
        let round = t.transformed(&m).unwrap().transformed(&m_inv).unwrap();
        assert!((&round.u - &t.u).amax() < 1e-13);
        assert!((&round.b - &t.b).amax() < 1e-13);
        assert!((&round.b_star - &t.b_star).amax() < 1e-13);
        assert!((&round.v - &t.v).amax() < 1e-13);
    }

    #[test]
    fn untransformed_twin_is_rank_one() {
        let data = appendix_data("DIMSIM4A").unwrap();
        let (_, plain) = reconstruct_both(&data).unwrap();
        // V = e v^T: every row equal, entries summing to 1
        for i in 1..plain.r {
            for j in 0..plain.r {
                assert_relative_eq!(plain.v[(i, j)], plain.v[(0, j)], epsilon = 1e-13);
            }
        }
        assert_relative_eq!(plain.v.row(0).sum(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn json_round_trip_preserves_tableau() {
        for name in CATALOG_NAMES {
            let t = catalog(name).unwrap();
            let back = Tableau::from_json(&t.to_json()).unwrap();
            assert_eq!(back.s, t.s);
            assert_eq!(back.euler_split, t.euler_split);
            assert!((&back.b - &t.b).amax() == 0.0, "{name}: B must round-trip bitwise");
            assert!((&back.a_star - &t.a_star).amax() == 0.0);
            assert_eq!(back.lambda.to_bits(), t.lambda.to_bits());
        }
    }

    #[test]
    fn json_field_names_are_exact() {
        let t = catalog("DIMSIM2L").unwrap();
        let value: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        for key in ["s", "r", "p", "q", "c", "A", "Astar", "U", "B", "Bstar", "V", "lambda"] {
            assert!(value.get(key).is_some(), "missing field {key}");
        }
    }
}
