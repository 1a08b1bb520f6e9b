//! Fixed finite-difference stencils for the advection discretization with a
//! prescribed left boundary value: fourth-order central differences in the
//! interior, third-order biased stencils at the edges. The coefficients are
//! the standard tables; the tests verify them against their defining
//! exactness on polynomials.

/// First derivative of the grid function `(u0, u[0], u[1], ..., u[n-1])`
/// where `u0` is the prescribed value at the left boundary node and `u`
/// holds the unknowns at nodes `1..=n`. Writes the derivative at the
/// unknown nodes into `out`.
pub fn derivative_dirichlet_left(u: &[f64], u0: f64, dx: f64, out: &mut [f64]) {
    let n = u.len();
    assert!(n >= 4, "need at least 4 interior nodes");
    assert_eq!(out.len(), n);
    let at = |i: isize| -> f64 {
        // node index in 0..=n, node 0 is the boundary
        if i == 0 {
            u0
        } else {
            u[(i - 1) as usize]
        }
    };
    // node 1: biased third-order stencil over nodes 0..=3
    out[0] = (-2.0 * at(0) - 3.0 * at(1) + 6.0 * at(2) - at(3)) / (6.0 * dx);
    // interior fourth-order central stencils over nodes 2..=n-2
    for i in 2..=(n as isize - 2) {
        out[(i - 1) as usize] =
            (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * dx);
    }
    // node n-1: biased third-order stencil over nodes n-3..=n
    let m = n as isize;
    out[n - 2] = (at(m - 3) - 6.0 * at(m - 2) + 3.0 * at(m - 1) + 2.0 * at(m)) / (6.0 * dx);
    // node n: one-sided third-order stencil
    out[n - 1] = (-2.0 * at(m - 3) + 9.0 * at(m - 2) - 18.0 * at(m - 1) + 11.0 * at(m)) / (6.0 * dx);
}
