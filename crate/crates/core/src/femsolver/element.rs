//! Lowest-order edge element on an axis-aligned brick.

use crate::mesh::LOCAL_PAIRS;

pub type ElementMatrix = [[f64; 12]; 12];

/// 1D Lagrange factor for node `d` (0 or 1) at reference coordinate `t`.
#[inline]
fn lag(d: usize, t: f64) -> f64 {
    if d == 0 {
        1.0 - t
    } else {
        t
    }
}

#[inline]
fn dlag(d: usize) -> f64 {
    if d == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Values and curls of the 12 basis functions at reference point
/// `t ∈ [0,1]³` of a brick with side lengths `h`.
pub fn basis(t: [f64; 3], h: [f64; 3]) -> ([[f64; 3]; 12], [[f64; 3]; 12]) {
    let [a, b, c] = h;
    let [xi, eta, zeta] = t;
    let mut val = [[0.0; 3]; 12];
    let mut curl = [[0.0; 3]; 12];
    for (n, &(p, q)) in LOCAL_PAIRS.iter().enumerate() {
        // x-edges at (dj, dk) = (p, q)
        val[n] = [lag(p, eta) * lag(q, zeta), 0.0, 0.0];
        curl[n] = [0.0, lag(p, eta) * dlag(q) / c, -dlag(p) * lag(q, zeta) / b];
        // y-edges at (di, dk) = (p, q)
        val[4 + n] = [0.0, lag(p, xi) * lag(q, zeta), 0.0];
        curl[4 + n] = [-lag(p, xi) * dlag(q) / c, 0.0, dlag(p) * lag(q, zeta) / a];
        // z-edges at (di, dj) = (p, q)
        val[8 + n] = [0.0, 0.0, lag(p, xi) * lag(q, eta)];
        curl[8 + n] = [lag(p, xi) * dlag(q) / b, -dlag(p) * lag(q, eta) / a, 0.0];
    }
    (val, curl)
}

/// Curl of the field with edge coefficients `e` at reference point `t`.
pub fn curl_at(
    e: &[num_complex::Complex64; 12],
    t: [f64; 3],
    h: [f64; 3],
) -> [num_complex::Complex64; 3] {
    let (_, curl) = basis(t, h);
    let mut out = [num_complex::Complex64::new(0.0, 0.0); 3];
    for (coef, c) in e.iter().zip(&curl) {
        for d in 0..3 {
            out[d] += coef * c[d];
        }
    }
    out
}

fn dot(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

/// Curl-curl stiffness and unit-conductivity mass matrices of a brick with
/// side lengths `h`, integrated with 2×2×2 Gauss points (exact for both).
pub fn element_matrices(h: [f64; 3]) -> (ElementMatrix, ElementMatrix) {
    let g = 0.5 / libm::sqrt(3.0);
    let pts = [0.5 - g, 0.5 + g];
    let w = h[0] * h[1] * h[2] / 8.0;
    let mut stiff = [[0.0; 12]; 12];
    let mut mass = [[0.0; 12]; 12];
    for &x in &pts {
        for &y in &pts {
            for &z in &pts {
                let (val, curl) = basis([x, y, z], h);
                for i in 0..12 {
                    for j in 0..12 {
                        stiff[i][j] += w * dot(&curl[i], &curl[j]);
                        mass[i][j] += w * dot(&val[i], &val[j]);
                    }
                }
            }
        }
    }
    (stiff, mass)
}

#[cfg(test)]
mod tests {
    use super::*;

    const M1: [[f64; 2]; 2] = [[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]];
    const K1: [[f64; 2]; 2] = [[1.0, -1.0], [-1.0, 1.0]];
    const S1: [f64; 2] = [-1.0, 1.0];

    /// Direction and the two transverse node offsets of local edge `n`, with
    /// the transverse axes listed in increasing order.
    fn split(n: usize) -> (usize, [usize; 3]) {
        let dir = n / 4;
        let (p, q) = LOCAL_PAIRS[n % 4];
        let mut offs = [usize::MAX; 3];
        let others: [usize; 2] = match dir {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        };
        offs[others[0]] = p;
        offs[others[1]] = q;
        (dir, offs)
    }

    /// Closed-form tensor-product integrals of the lowest-order brick element.
    fn closed_form(h: [f64; 3]) -> (ElementMatrix, ElementMatrix) {
        let vol = h[0] * h[1] * h[2];
        let mut k = [[0.0; 12]; 12];
        let mut m = [[0.0; 12]; 12];
        for i in 0..12 {
            let (di, oi) = split(i);
            for j in 0..12 {
                let (dj, oj) = split(j);
                if di == dj {
                    let t: [usize; 2] = match di {
                        0 => [1, 2],
                        1 => [0, 2],
                        _ => [0, 1],
                    };
                    let (u, v) = (t[0], t[1]);
                    m[i][j] = vol * M1[oi[u]][oj[u]] * M1[oi[v]][oj[v]];
                    k[i][j] = vol
                        * (M1[oi[u]][oj[u]] * K1[oi[v]][oj[v]] / (h[v] * h[v])
                            + K1[oi[u]][oj[u]] * M1[oi[v]][oj[v]] / (h[u] * h[u]));
                } else {
                    // The third axis carries a mass factor; the two edge
                    // directions each contribute a derivative factor.
                    let w = 3 - di - dj;
                    k[i][j] = -vol / (h[di] * h[dj]) * S1[oi[dj]] * S1[oj[di]] * M1[oi[w]][oj[w]];
                }
            }
        }
        (k, m)
    }

    #[test]
    fn gauss_matches_closed_form() {
        for h in [[1.0, 1.0, 1.0], [250.0, 125.0, 400.0], [3.0, 0.5, 1.7]] {
            let (k, m) = element_matrices(h);
            let (kc, mc) = closed_form(h);
            let ks = kc.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            let ms = mc.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..12 {
                for j in 0..12 {
                    assert!((k[i][j] - kc[i][j]).abs() < 1e-12 * ks, "K[{i}][{j}] {h:?}");
                    assert!((m[i][j] - mc[i][j]).abs() < 1e-12 * ms, "M[{i}][{j}] {h:?}");
                }
            }
        }
    }

    #[test]
    fn matrices_are_symmetric() {
        let (k, m) = element_matrices([2.0, 3.0, 5.0]);
        for i in 0..12 {
            for j in 0..12 {
                assert_eq!(k[i][j], k[j][i]);
                assert_eq!(m[i][j], m[j][i]);
            }
        }
    }

    #[test]
    fn gradients_are_in_the_stiffness_null_space() {
        // Edge coefficients of the gradient of a trilinear nodal potential.
        let h = [2.0, 3.0, 5.0];
        let (k, _) = element_matrices(h);
        let phis: [fn([f64; 3]) -> f64; 3] = [
            |p| p[0] * p[1],
            |p| p[2] * p[2] - p[0],
            |p| p[0] * p[1] * p[2],
        ];
        for phi in phis {
            let mut g = [0.0; 12];
            for (n, gn) in g.iter_mut().enumerate() {
                let (dir, offs) = split(n);
                let mut lo = [0.0; 3];
                for a in 0..3 {
                    if a != dir {
                        lo[a] = offs[a] as f64 * h[a];
                    }
                }
                let mut hi = lo;
                hi[dir] = h[dir];
                *gn = (phi(hi) - phi(lo)) / h[dir];
            }
            for row in &k {
                let r: f64 = row.iter().zip(&g).map(|(a, b)| a * b).sum();
                assert!(r.abs() < 1e-12, "{r}");
            }
        }
    }

    #[test]
    fn constant_field_has_zero_curl() {
        use num_complex::Complex64;
        let h = [2.0, 1.0, 4.0];
        // A uniform field has the same coefficient on all four x-edges.
        let mut e = [Complex64::new(0.0, 0.0); 12];
        for v in e.iter_mut().take(4) {
            *v = Complex64::new(2.0, 0.0);
        }
        let c = curl_at(&e, [0.3, 0.7, 0.1], h);
        assert!(c.iter().all(|v| v.norm() < 1e-15));
    }
}
