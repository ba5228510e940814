//! Pointwise geometry of a graph `x ↦ (x, f(x))` of codimension one,
//! evaluated from its first and second derivatives.

use crate::{Error, Result};

/// Dense symmetric `n × n` matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds from row-major entries, symmetrizing `(a + aᵀ)/2`.
    pub fn from_rows(n: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), n * n, "expected {n}x{n} entries");
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = 0.5 * (rows[i * n + j] + rows[j * n + i]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub(crate) fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

fn check_finite(df: &[f64]) -> Result<()> {
    if df.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::domain("non-finite gradient"))
    }
}

/// Upward unit normal `(−Df, 1)/√(1+|Df|²)` in `R^{n+1}`.
pub fn graph_normal(df: &[f64]) -> Result<Vec<f64>> {
    check_finite(df)?;
    let w = (1.0 + df.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let mut nu: Vec<f64> = df.iter().map(|d| -d / w).collect();
    nu.push(1.0 / w);
    Ok(nu)
}

/// Tilt of the tangent plane against the horizontal, `|Df|²/(1+|Df|²)`.
pub fn tilt(df: &[f64]) -> Result<f64> {
    check_finite(df)?;
    let g2: f64 = df.iter().map(|x| x * x).sum();
    Ok(g2 / (1.0 + g2))
}

/// Scalar mean curvature along the upward normal,
/// `H = (δ_ij − D_if D_jf/W²) D_iD_jf / W` with `W = √(1+|Df|²)`.
pub fn mean_curvature_graph(df: &[f64], d2f: &SymMatrix) -> Result<f64> {
    check_finite(df)?;
    if !d2f.is_finite() {
        return Err(Error::domain("non-finite hessian"));
    }
    let n = df.len();
    let w2 = 1.0 + df.iter().map(|x| x * x).sum::<f64>();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            acc += (delta - df[i] * df[j] / w2) * d2f.get(i, j);
        }
    }
    Ok(acc / w2.sqrt())
}

/// `|A|²` of the graph via the induced metric `g_ij = δ_ij + D_if D_jf`:
/// `|A|² = g^{ik} g^{jl} A_ij A_kl` with `A_ij = D_iD_jf / W`.
pub fn second_fundamental_norm_sq(df: &[f64], d2f: &SymMatrix) -> Result<f64> {
    check_finite(df)?;
    if !d2f.is_finite() {
        return Err(Error::domain("non-finite hessian"));
    }
    let n = df.len();
    let w2 = 1.0 + df.iter().map(|x| x * x).sum::<f64>();
    let w = w2.sqrt();
    // m = g^{-1} A, with g^{-1} = I − Df Dfᵀ / W².
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                let delta = if i == k { 1.0 } else { 0.0 };
                s += (delta - df[i] * df[k] / w2) * d2f.get(k, j) / w;
            }
            m[i * n + j] = s;
        }
    }
    let mut tr = 0.0;
    for i in 0..n {
        for j in 0..n {
            tr += m[i * n + j] * m[j * n + i];
        }
    }
    Ok(tr.max(0.0))
}

pub fn second_fundamental_norm(df: &[f64], d2f: &SymMatrix) -> Result<f64> {
    second_fundamental_norm_sq(df, d2f).map(f64::sqrt)
}

/// Constants `(c, C)` with `c |D²f|²/(1+|Df|²)³ ≤ |A|² ≤ C |D²f|²` for
/// hypersurfaces. The eigenvalues of `g^{-1}` lie in `[1/W², 1]`, which
/// gives both inequalities with `c = C = 1`.
pub fn curvature_sandwich_constants(_n: usize) -> (f64, f64) {
    (1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_normal_and_tilt() {
        assert_eq!(graph_normal(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(tilt(&[0.0]).unwrap(), 0.0);
        assert_eq!(tilt(&[1.0]).unwrap(), 0.5);
        let nu = graph_normal(&[1.0]).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((nu[0] + s).abs() < 1e-15 && (nu[1] - s).abs() < 1e-15);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(graph_normal(&[f64::NAN]).is_err());
        assert!(tilt(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn parabola_vertex_curvature() {
        let h = SymMatrix::from_rows(1, &[1.0]);
        assert!((mean_curvature_graph(&[0.0], &h).unwrap() - 1.0).abs() < 1e-15);
        assert!((second_fundamental_norm(&[0.0], &h).unwrap() - 1.0).abs() < 1e-15);
        // 1-D closed form κ = f''/(1+f'²)^{3/2}
        let k = mean_curvature_graph(&[0.7], &SymMatrix::from_rows(1, &[2.0])).unwrap();
        assert!((k - 2.0 / (1.0 + 0.49f64).powf(1.5)).abs() < 1e-14);
    }

    #[test]
    fn affine_is_flat() {
        let z = SymMatrix::zeros(2);
        assert_eq!(mean_curvature_graph(&[0.3, -2.0], &z).unwrap(), 0.0);
        assert_eq!(second_fundamental_norm(&[0.3, -2.0], &z).unwrap(), 0.0);
    }

    fn vec_and_hessian() -> impl Strategy<Value = (Vec<f64>, SymMatrix)> {
        (1usize..=3).prop_flat_map(|n| {
            (
                proptest::collection::vec(-20.0..20.0f64, n),
                proptest::collection::vec(-50.0..50.0f64, n * n),
            )
                .prop_map(move |(df, h)| (df, SymMatrix::from_rows(n, &h)))
        })
    }

    proptest! {
        #[test]
        fn normal_is_unit_and_orthogonal(df in proptest::collection::vec(-1e3..1e3f64, 1..4)) {
            let nu = graph_normal(&df).unwrap();
            let len: f64 = nu.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((len - 1.0).abs() <= 1e-14);
            // tangent vectors (e_i, D_i f)
            for i in 0..df.len() {
                let dot = nu[i] + nu[df.len()] * df[i];
                prop_assert!(dot.abs() <= 1e-12);
            }
        }

        #[test]
        fn tilt_two_formulas_agree(df in proptest::collection::vec(-1e2..1e2f64, 1..4)) {
            let nu = graph_normal(&df).unwrap();
            let last = nu[df.len()];
            prop_assert!((tilt(&df).unwrap() - (1.0 - last * last)).abs() <= 1e-14);
        }

        #[test]
        fn curvature_sandwich((df, h) in vec_and_hessian()) {
            let (c, big_c) = curvature_sandwich_constants(df.len());
            let a2 = second_fundamental_norm_sq(&df, &h).unwrap();
            let d2 = h.frobenius_sq();
            let w2 = 1.0 + df.iter().map(|x| x * x).sum::<f64>();
            let lower = c * d2 / w2.powi(3);
            let upper = big_c * d2;
            prop_assert!(lower <= a2 * (1.0 + 1e-12) + 1e-300);
            prop_assert!(a2 <= upper * (1.0 + 1e-12) + 1e-300);
        }
    }
}
