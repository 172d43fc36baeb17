//! Finite-difference gradients of vector fields on uniform grids.
//!
//! Interior nodes use second-order central differences, boundary nodes the
//! second-order one-sided stencil `(∓3f₀ ± 4f₁ ∓ f₂)/(2h)`.

use super::{sym, Mat, TensorError};

/// Fields must vanish on the boundary up to this fraction of their max magnitude.
const BOUNDARY_TOL: f64 = 1e-10;

fn derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    d
}

fn check_spacing(h: f64) -> Result<(), TensorError> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(TensorError::BadSpacing)
    }
}

/// 1-D symmetric gradient, which is just `u_x` at every node.
pub fn sym_grad_discrete_1d(u: &[f64], h: f64) -> Result<Vec<f64>, TensorError> {
    if u.len() < 3 {
        return Err(TensorError::GridTooSmall(u.len()));
    }
    check_spacing(h)?;
    let scale = u.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let edge = u[0].abs().max(u[u.len() - 1].abs());
    if edge > BOUNDARY_TOL * scale.max(f64::MIN_POSITIVE) && edge > 0.0 {
        return Err(TensorError::NonZeroBoundary(edge));
    }
    Ok(derivative(u, h))
}

/// Vector field `w = (w_x, w_y)` on an `nx × ny` node grid with spacing `h`.
/// Node `(i, j)` (i along x) lives at flat index `j·nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2D {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
}

impl VectorField2D {
    /// Samples `f(x, y) -> (w_x, w_y)` on `[0, (nx-1)h] × [0, (ny-1)h]`.
    pub fn sample(nx: usize, ny: usize, h: f64, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut wx = Vec::with_capacity(nx * ny);
        let mut wy = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b) = f(i as f64 * h, j as f64 * h);
                wx.push(a);
                wy.push(b);
            }
        }
        Self { nx, ny, h, wx, wy }
    }

    fn validate(&self) -> Result<(), TensorError> {
        if self.nx < 3 {
            return Err(TensorError::GridTooSmall(self.nx));
        }
        if self.ny < 3 {
            return Err(TensorError::GridTooSmall(self.ny));
        }
        check_spacing(self.h)?;
        if self.wx.len() != self.nx * self.ny || self.wy.len() != self.nx * self.ny {
            return Err(TensorError::DimensionMismatch {
                left: self.wx.len().max(self.wy.len()),
                right: self.nx * self.ny,
            });
        }
        let scale = self
            .wx
            .iter()
            .chain(&self.wy)
            .fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut edge = 0.0_f64;
        for j in 0..self.ny {
            for i in 0..self.nx {
                if i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1 {
                    let k = j * self.nx + i;
                    edge = edge.max(self.wx[k].abs()).max(self.wy[k].abs());
                }
            }
        }
        if edge > 0.0 && edge > BOUNDARY_TOL * scale {
            return Err(TensorError::NonZeroBoundary(edge));
        }
        Ok(())
    }

    /// Trapezoidal quadrature weight of node `(i, j)`, without the `h²` factor.
    pub fn trapezoid_weight(&self, i: usize, j: usize) -> f64 {
        let wi = if i == 0 || i == self.nx - 1 { 0.5 } else { 1.0 };
        let wj = if j == 0 || j == self.ny - 1 { 0.5 } else { 1.0 };
        wi * wj
    }
}

/// Full gradient `(∇w)_ab = ∂w_a/∂x_b` at every node.
pub fn grad_discrete_2d(field: &VectorField2D) -> Result<Vec<Mat>, TensorError> {
    field.validate()?;
    let (nx, ny, h) = (field.nx, field.ny, field.h);
    let mut out = vec![Mat::zeros(2)?; nx * ny];
    for (a, comp) in [&field.wx, &field.wy].into_iter().enumerate() {
        for j in 0..ny {
            let row: Vec<f64> = (0..nx).map(|i| comp[j * nx + i]).collect();
            for (i, d) in derivative(&row, h).into_iter().enumerate() {
                out[j * nx + i][(a, 0)] = d;
            }
        }
        for i in 0..nx {
            let col: Vec<f64> = (0..ny).map(|j| comp[j * nx + i]).collect();
            for (j, d) in derivative(&col, h).into_iter().enumerate() {
                out[j * nx + i][(a, 1)] = d;
            }
        }
    }
    Ok(out)
}

/// Symmetric gradient `∇ˢw = (∇w + ∇wᵗ)/2` at every node.
pub fn sym_grad_discrete_2d(field: &VectorField2D) -> Result<Vec<Mat>, TensorError> {
    Ok(grad_discrete_2d(field)?.iter().map(sym).collect())
}

/// Dispatches on dimension: a 1-D field gives scalar `u_x` per node (as 1×1 matrices).
pub fn sym_grad_discrete(field: &GridField<'_>) -> Result<Vec<Mat>, TensorError> {
    match field {
        GridField::OneD { u, h } => sym_grad_discrete_1d(u, *h)?
            .into_iter()
            .map(|d| Mat::from_row_major(&[d]))
            .collect(),
        GridField::TwoD(f) => sym_grad_discrete_2d(f),
    }
}

/// A borrowed grid field of either supported dimension.
pub enum GridField<'a> {
    OneD { u: &'a [f64], h: f64 },
    TwoD(&'a VectorField2D),
}

/// Both sides of the weighted identity
/// `∫|∇ˢw|²ψ = ½∫|∇w|²ψ + ½∫(div w)²ψ + ½∫(div w)(w·∇ψ) − ½∫w·(∇w·∇ψ)`
/// for fields vanishing on the boundary, with trapezoidal weights times `h²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedIdentity {
    pub lhs: f64,
    pub grad_term: f64,
    pub div_term: f64,
    pub div_transport_term: f64,
    pub grad_transport_term: f64,
}

impl WeightedIdentity {
    pub fn rhs(&self) -> f64 {
        self.grad_term + self.div_term + self.div_transport_term - self.grad_transport_term
    }

    /// `|lhs − rhs| / lhs`.
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs()).abs() / self.lhs.abs().max(f64::MIN_POSITIVE)
    }
}

/// Evaluates the weighted identity; `psi(x, y)` returns `(ψ, ∂ₓψ, ∂ᵧψ)`.
pub fn weighted_identity(
    field: &VectorField2D,
    psi: impl Fn(f64, f64) -> (f64, f64, f64),
) -> Result<WeightedIdentity, TensorError> {
    let grads = grad_discrete_2d(field)?;
    let h = field.h;
    let mut out = WeightedIdentity {
        lhs: 0.0,
        grad_term: 0.0,
        div_term: 0.0,
        div_transport_term: 0.0,
        grad_transport_term: 0.0,
    };
    for j in 0..field.ny {
        for i in 0..field.nx {
            let k = j * field.nx + i;
            let g = &grads[k];
            let q = field.trapezoid_weight(i, j) * h * h;
            let (p, px, py) = psi(i as f64 * h, j as f64 * h);
            let w = [field.wx[k], field.wy[k]];
            let div = g.trace();
            let w_dot_grad_psi = w[0] * px + w[1] * py;
            // w·(∇w·∇ψ) = Σ_ab w_b ∂_b w_a ∂_a ψ
            let transport: f64 = (0..2)
                .map(|a| [px, py][a] * (w[0] * g[(a, 0)] + w[1] * g[(a, 1)]))
                .sum();
            out.lhs += q * sym(g).norm().powi(2) * p;
            out.grad_term += q * 0.5 * g.norm().powi(2) * p;
            out.div_term += q * 0.5 * div * div * p;
            out.div_transport_term += q * 0.5 * div * w_dot_grad_psi;
            out.grad_transport_term += q * 0.5 * transport;
        }
    }
    Ok(out)
}

/// The `ψ ≡ 1` case: `∫|∇ˢw|² = ½∫|∇w|² + ½∫(div w)²`. Returns `(lhs, rhs)`.
pub fn unweighted_identity_residual(field: &VectorField2D) -> Result<(f64, f64), TensorError> {
    let id = weighted_identity(field, |_, _| (1.0, 0.0, 0.0))?;
    Ok((id.lhs, id.rhs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn zero_field_has_zero_gradient() {
        let g = sym_grad_discrete_1d(&[0.0; 7], 0.1).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
        let f = VectorField2D::sample(5, 6, 0.2, |_, _| (0.0, 0.0));
        assert!(sym_grad_discrete_2d(&f)
            .unwrap()
            .iter()
            .all(|m| m.max_abs() == 0.0));
    }

    #[test]
    fn parabola_derivative_second_order() {
        // u = x(L - x), u_x = L - 2x; central differences are exact on quadratics
        let l = 1.0;
        for n in [11, 21, 41] {
            let h = l / (n - 1) as f64;
            let u: Vec<f64> = (0..n).map(|i| i as f64 * h).map(|x| x * (l - x)).collect();
            let d = sym_grad_discrete_1d(&u, h).unwrap();
            for (i, di) in d.iter().enumerate() {
                let x = i as f64 * h;
                assert!((di - (l - 2.0 * x)).abs() < 1e-10, "n={n} i={i}");
            }
        }
        // a non-polynomial field shows the O(h²) rate
        let err = |n: usize| {
            let h = 1.0 / (n - 1) as f64;
            let u: Vec<f64> = (0..n).map(|i| (PI * i as f64 * h).sin()).collect();
            let d = sym_grad_discrete_1d(&u, h).unwrap();
            (1..n - 1)
                .map(|i| (d[i] - PI * (PI * i as f64 * h).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(21) / err(41);
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn rejects_small_or_unclamped_grids() {
        assert_eq!(
            sym_grad_discrete_1d(&[0.0, 0.0], 1.0),
            Err(TensorError::GridTooSmall(2))
        );
        assert!(matches!(
            sym_grad_discrete_1d(&[1.0, 2.0, 0.0], 1.0),
            Err(TensorError::NonZeroBoundary(_))
        ));
        assert_eq!(
            sym_grad_discrete_1d(&[0.0, 1.0, 0.0], 0.0),
            Err(TensorError::BadSpacing)
        );
        let f = VectorField2D::sample(2, 5, 0.1, |_, _| (0.0, 0.0));
        assert_eq!(grad_discrete_2d(&f), Err(TensorError::GridTooSmall(2)));
    }

    #[test]
    fn one_d_dispatch_is_scalar() {
        let u = [0.0, 1.0, 0.0];
        let out = sym_grad_discrete(&GridField::OneD { u: &u, h: 1.0 }).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|m| m.dim() == 1));
        assert_eq!(out[1][(0, 0)], 0.0);
    }

    #[test]
    fn random_field_identity_holds_roughly() {
        let mut rng = StdRng::seed_from_u64(11);
        let n = 9;
        let mut f = VectorField2D::sample(n, n, 0.125, |_, _| (0.0, 0.0));
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                f.wx[j * n + i] = rng.gen_range(-1.0..1.0);
                f.wy[j * n + i] = rng.gen_range(-1.0..1.0);
            }
        }
        let (lhs, rhs) = unweighted_identity_residual(&f).unwrap();
        assert!(lhs > 0.0 && rhs > 0.0);
        // a rough field only satisfies it to O(1); the check is that both sides are comparable
        assert!((lhs - rhs).abs() < lhs.max(rhs));
    }

    fn smooth_field(x: f64, y: f64) -> (f64, f64) {
        let s = (PI * x).sin() * (PI * y).sin();
        (s * (2.0 * PI * y).cos().powi(2), s * (x + 0.5) * y)
    }

    #[test]
    fn unweighted_identity_is_exact_on_the_grid() {
        // central differences make ∫det∇w vanish exactly for zero boundary values
        for n in [17, 33, 65] {
            let f = VectorField2D::sample(n, n, 1.0 / (n - 1) as f64, smooth_field);
            let (l, r) = unweighted_identity_residual(&f).unwrap();
            assert!((l - r).abs() <= 1e-13 * l, "n={n}: {l} vs {r}");
        }
    }

    #[test]
    fn weighted_identity_converges() {
        let psi = |x: f64, y: f64| {
            let p = 1.0 + 0.5 * (PI * x).cos() * (2.0 * PI * y).sin();
            let px = -0.5 * PI * (PI * x).sin() * (2.0 * PI * y).sin();
            let py = PI * (PI * x).cos() * (2.0 * PI * y).cos();
            (p, px, py)
        };
        let errs: Vec<f64> = [17, 33, 65]
            .iter()
            .map(|&n| {
                let f = VectorField2D::sample(n, n, 1.0 / (n - 1) as f64, smooth_field);
                weighted_identity(&f, psi).unwrap().relative_error()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[1] / errs[2] > 1.8, "{errs:?}");
    }
}
