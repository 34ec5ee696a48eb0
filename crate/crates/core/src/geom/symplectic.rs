use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// Coordinate convention of a phase space: which real coordinates pair into
/// complex coordinates and which pairs carry `dx ∧ dy` in ω.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartId {
    /// ℂⁿ with `z_j = c[2j] + i c[2j+1]` and `ω = Σ dx_j ∧ dy_j`.
    Standard(usize),
    /// ℂ² stored as `(Re z₁, Im z₁, Re z₂, Im z₂)` where `z₁ = y₁ + i y₂`,
    /// `z₂ = x₁ + i x₂` and `ω = Σ dx_j ∧ dy_j`.
    FocusFocus,
    /// ℂ² with the standard layout but `ω = Σ dy_j ∧ dx_j`; the convention
    /// under which the time-one flow of `π/4 · Im(u₁ ū₂)` is the rotation
    /// `(u₁ − u₂, u₁ + u₂)/√2`.
    ThinLegU,
    /// `T*ℝⁿ` stored as `(b₁..b_n, α₁..α_n)` with `ω = Σ dα_i ∧ db_i`, so
    /// that the flow of `h∘π` translates α by `dh`.
    Cotangent(usize),
}

impl ChartId {
    /// Real dimension `2n`.
    pub fn dim(&self) -> usize {
        match *self {
            ChartId::Standard(n) | ChartId::Cotangent(n) => 2 * n,
            ChartId::FocusFocus | ChartId::ThinLegU => 4,
        }
    }

    pub fn symplectic(&self) -> SymplecticStructure {
        match *self {
            ChartId::Standard(n) => SymplecticStructure::standard(n),
            ChartId::FocusFocus => SymplecticStructure::from_pairs(2, &[(2, 0), (3, 1)]),
            ChartId::ThinLegU => SymplecticStructure::from_pairs(2, &[(1, 0), (3, 2)]),
            ChartId::Cotangent(n) => {
                let pairs: Vec<_> = (0..n).map(|i| (n + i, i)).collect();
                SymplecticStructure::from_pairs(n, &pairs)
            }
        }
    }

    /// Whether `(c[2j], c[2j+1])` are the real and imaginary parts of a
    /// holomorphic coordinate compatible with ω (needed for gradings).
    pub fn has_compatible_complex_structure(&self) -> bool {
        matches!(self, ChartId::Standard(_))
    }
}

/// Constant symplectic form `ω(u, v) = uᵀ J v`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticStructure {
    pub n: usize,
    pub pairing: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl SymplecticStructure {
    /// `ω = Σ dx ∧ dy` over the listed `(x index, y index)` pairs.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for &(x, y) in pairs {
            j[(x, y)] = 1.0;
            j[(y, x)] = -1.0;
        }
        // J is orthogonal and antisymmetric, so J⁻¹ = Jᵀ = −J.
        let inverse = j.transpose();
        SymplecticStructure {
            n,
            pairing: j,
            inverse,
        }
    }

    pub fn standard(n: usize) -> Self {
        let pairs: Vec<_> = (0..n).map(|j| (2 * j, 2 * j + 1)).collect();
        Self::from_pairs(n, &pairs)
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    pub fn pairing(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check(u.len())?;
        self.check(v.len())?;
        let mut acc = 0.0;
        for (i, ui) in u.iter().enumerate() {
            for (k, vk) in v.iter().enumerate() {
                let jik = self.pairing[(i, k)];
                if jik != 0.0 {
                    acc += ui * jik * vk;
                }
            }
        }
        Ok(acc)
    }

    /// Hamiltonian vector field `X_H = −J⁻¹ ∇H`, i.e. `ω(X_H, ·) = dH`.
    pub fn hamiltonian_vector(&self, grad: &DVector<f64>) -> DVector<f64> {
        -(&self.inverse * grad)
    }

    /// Matrix of the linear map `grad ↦ X_H`.
    pub fn hamiltonian_operator(&self) -> DMatrix<f64> {
        -&self.inverse
    }
}

/// A point of phase space tagged with its chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub coords: Vec<f64>,
    pub chart: ChartId,
}

impl PhasePoint {
    pub fn new(chart: ChartId, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != chart.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: chart.dim(),
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::NonFinite {
                what: "phase point".into(),
            });
        }
        Ok(PhasePoint { coords, chart })
    }

    /// Builds a point of a complex chart from complex coordinates.
    pub fn from_complex(chart: ChartId, z: &[num_complex::Complex64]) -> Result<Self> {
        let coords = z.iter().flat_map(|c| [c.re, c.im]).collect();
        Self::new(chart, coords)
    }

    pub fn complex(&self, j: usize) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.coords[2 * j], self.coords[2 * j + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_pairing_of_coordinate_vectors() {
        let s = SymplecticStructure::standard(1);
        assert_eq!(s.pairing(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(s.pairing(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 0.0);
    }

    #[test]
    fn bilinear_expansion_cancels() {
        // u = ∂x₁ + ∂x₂, v = ∂y₁ − ∂y₂
        let s = SymplecticStructure::standard(2);
        let u = [1.0, 0.0, 1.0, 0.0];
        let v = [0.0, 1.0, 0.0, -1.0];
        assert_eq!(s.pairing(&u, &v).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s = SymplecticStructure::standard(2);
        assert!(matches!(
            s.pairing(&[1.0, 0.0], &[0.0, 1.0]),
            Err(GeomError::DimensionMismatch {
                expected: 4,
                got: 2
            })
        ));
    }

    #[test]
    fn pairing_matrices_are_unimodular_and_antisymmetric() {
        for chart in [
            ChartId::Standard(3),
            ChartId::FocusFocus,
            ChartId::ThinLegU,
            ChartId::Cotangent(2),
        ] {
            let s = chart.symplectic();
            let j = &s.pairing;
            assert_eq!(j + j.transpose(), DMatrix::zeros(s.dim(), s.dim()));
            assert!((j.determinant().abs() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn phase_point_validates() {
        assert!(PhasePoint::new(ChartId::Standard(2), vec![0.0; 3]).is_err());
        assert!(PhasePoint::new(ChartId::Standard(1), vec![f64::NAN, 0.0]).is_err());
    }
}
