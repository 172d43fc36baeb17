/// Eigen-decomposition `A = V diag(λ) Vᵗ` of a symmetric matrix.
///
/// `vectors` is row-major m×m; column `s` holds the eigenvector for `values[s]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigenvalue iteration for a symmetric row-major `m×m` matrix.
///
/// Only the upper triangle is read after symmetrization `(A + Aᵗ)/2`. Sizes here
/// are at most 16×16, so plain rotations converge in a handful of sweeps.
pub fn jacobi_eigen(a: &[f64], m: usize) -> SymmetricEigen {
    assert_eq!(a.len(), m * m, "matrix must be m×m");
    let mut s = vec![0.0; m * m];
    for r in 0..m {
        for c in 0..m {
            s[r * m + c] = 0.5 * (a[r * m + c] + a[c * m + r]);
        }
    }
    let mut v = vec![0.0; m * m];
    for r in 0..m {
        v[r * m + r] = 1.0;
    }

    let total: f64 = s.iter().map(|x| x * x).sum();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..m)
            .flat_map(|r| (0..m).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| s[r * m + c] * s[r * m + c])
            .sum();
        if off <= f64::EPSILON * f64::EPSILON * total || off == 0.0 {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = s[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let app = s[p * m + p];
                let aqq = s[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;

                for k in 0..m {
                    let skp = s[k * m + p];
                    let skq = s[k * m + q];
                    s[k * m + p] = c * skp - sn * skq;
                    s[k * m + q] = sn * skp + c * skq;
                }
                for k in 0..m {
                    let spk = s[p * m + k];
                    let sqk = s[q * m + k];
                    s[p * m + k] = c * spk - sn * sqk;
                    s[q * m + k] = sn * spk + c * sqk;
                }
                for k in 0..m {
                    let vkp = v[k * m + p];
                    let vkq = v[k * m + q];
                    v[k * m + p] = c * vkp - sn * vkq;
                    v[k * m + q] = sn * vkp + c * vkq;
                }
            }
        }
    }
    SymmetricEigen {
        values: (0..m).map(|r| s[r * m + r]).collect(),
        vectors: v,
    }
}
