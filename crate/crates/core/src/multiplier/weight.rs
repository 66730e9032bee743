use crate::error::{Error, Result};
use crate::fields::{norm, radius_jet, Field};
use crate::jet::RJet;
use serde::Serialize;

/// Relative half-width of the annulus around `|x| = R` excluded from pointwise evaluation.
pub const DEFAULT_SURFACE_MARGIN: f64 = 1e-2;

/// The radial weight `ψ_R(x) = Rψ₁(|x|/R)`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Weight {
    pub radius: f64,
    pub n: usize,
}

/// Singular part of `ψ⁗`: `coefficient · δ_{|x| = radius}`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct SurfaceTerm {
    pub radius: f64,
    pub coefficient: f64,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct WeightDerivatives {
    pub psi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4_regular: f64,
    /// `| |x| − R | < margin·R`.
    pub near_surface: bool,
}

impl Weight {
    pub fn new(radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("weight radius {radius} must be positive")));
        }
        if n < 3 {
            return Err(Error::InvalidInput(format!("weight dimension {n} < 3")));
        }
        Ok(Self { radius, n })
    }

    /// `[ψ, ψ', ψ'', ψ''', ψ⁗]` at radius `r`, regular parts; `r = R` uses the inner branch.
    pub fn radial(&self, r: f64) -> [f64; 5] {
        let n = self.n as f64;
        let big_r = self.radius;
        if r <= big_r {
            let c = (n - 1.0) / (2.0 * n * big_r);
            [0.5 * c * r * r, c * r, c, 0.0, 0.0]
        } else {
            let q = (big_r / r).powi(self.n as i32 - 1);
            let psi = (n - 1.0) * big_r / (4.0 * n) + 0.5 * (r - big_r) - (big_r - r * q) / (2.0 * n * (n - 2.0));
            [
                psi,
                0.5 - q / (2.0 * n),
                (n - 1.0) * q / (2.0 * n * r),
                -(n - 1.0) * q / (2.0 * r * r),
                (n * n - 1.0) * q / (2.0 * r * r * r),
            ]
        }
    }

    pub fn surface(&self) -> SurfaceTerm {
        SurfaceTerm {
            radius: self.radius,
            coefficient: -(self.n as f64 - 1.0) / (2.0 * self.radius * self.radius),
        }
    }

    pub fn near_surface(&self, r: f64, margin: f64) -> bool {
        (r - self.radius).abs() < margin * self.radius
    }

    /// Taylor jet of `ψ(|x|)` on the side of the surface containing the base point.
    pub fn jet(&self, xs: &[RJet]) -> RJet {
        let r = radius_jet(xs);
        let d = self.radial(r.value());
        let order = r.order();
        assert!(order <= 4, "weight jets are available up to order 4");
        r.compose(&d[..=order])
    }
}

pub fn weight_derivatives(radius: f64, n: usize, x: &[f64]) -> Result<WeightDerivatives> {
    let w = Weight::new(radius, n)?;
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::OriginPoint);
    }
    let [psi, d1, d2, d3, d4] = w.radial(r);
    Ok(WeightDerivatives {
        psi,
        d1,
        d2,
        d3,
        d4_regular: d4,
        near_surface: w.near_surface(r, DEFAULT_SURFACE_MARGIN),
    })
}

/// The weight `ψ` entering the multiplier identities.
#[derive(Clone, Debug)]
pub enum Psi {
    Radial(Weight),
    /// `ψ(x) = g·x`.
    Linear(Vec<f64>),
    /// Any analytic scalar field.
    General(Field),
}

impl Psi {
    pub fn jet(&self, xs: &[RJet]) -> RJet {
        match self {
            Psi::Radial(w) => w.jet(xs),
            Psi::Linear(g) => {
                let n = xs.len();
                let mut out = RJet::zero(n, xs[0].order());
                for (x, c) in xs.iter().zip(g) {
                    out = &out + &x.scale(*c);
                }
                out
            }
            Psi::General(f) => f.jets_at(xs).remove(0),
        }
    }

    pub fn weight(&self) -> Option<&Weight> {
        match self {
            Psi::Radial(w) => Some(w),
            _ => None,
        }
    }
}

/// The second weight `φ`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum Phi {
    Zero,
    One,
    /// 1 on `|x| ≤ R`, `2 − |x|/R` on `R ≤ |x| ≤ 2R`, 0 beyond.
    Tent {
        radius: f64,
    },
}

impl Phi {
    pub fn radial(&self, r: f64) -> [f64; 2] {
        match *self {
            Phi::Zero => [0.0, 0.0],
            Phi::One => [1.0, 0.0],
            Phi::Tent { radius } => {
                if r <= radius {
                    [1.0, 0.0]
                } else if r <= 2.0 * radius {
                    [2.0 - r / radius, -1.0 / radius]
                } else {
                    [0.0, 0.0]
                }
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.radial(norm(x))[0]
    }

    pub fn jet(&self, xs: &[RJet]) -> RJet {
        let n = xs.len();
        let order = xs[0].order();
        match self {
            Phi::Zero => RJet::zero(n, order),
            Phi::One => RJet::constant(n, order, 1.0),
            Phi::Tent { .. } => {
                let r = radius_jet(xs);
                let d = self.radial(r.value());
                let mut derivs = vec![0.0; order + 1];
                derivs[0] = d[0];
                if order >= 1 {
                    derivs[1] = d[1];
                }
                r.compose(&derivs)
            }
        }
    }

    /// Radii where `φ` has a kink.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            Phi::Tent { radius } => vec![radius, 2.0 * radius],
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_first_derivative_example() {
        let d = weight_derivatives(1.0, 3, &[2.0, 0.0, 0.0]).unwrap();
        assert!((d.d1 - 11.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn inner_higher_derivatives_vanish() {
        let d = weight_derivatives(1.0, 3, &[0.3, 0.2, -0.1]).unwrap();
        assert_eq!(d.d3, 0.0);
        assert_eq!(d.d4_regular, 0.0);
    }

    #[test]
    fn branches_agree_at_surface() {
        for n in 3..7 {
            let w = Weight::new(1.7, n).unwrap();
            let inner = w.radial(1.7);
            let outer = w.radial(1.7 * (1.0 + 1e-12));
            let nf = n as f64;
            assert!((inner[1] - (nf - 1.0) / (2.0 * nf)).abs() < 1e-14);
            for k in 0..3 {
                assert!((inner[k] - outer[k]).abs() < 1e-10, "n={n} k={k}");
            }
            // ψ''' jumps by the surface coefficient
            assert!((outer[3] - inner[3] - w.surface().coefficient).abs() < 1e-10);
        }
    }

    #[test]
    fn psi_is_antiderivative() {
        let w = Weight::new(0.8, 4).unwrap();
        let rule = crate::quadrature::gauss_interval(40, 0.0, 0.8);
        let rule2 = crate::quadrature::gauss_interval(40, 0.8, 3.0);
        let integral: f64 = rule.iter().chain(&rule2).map(|(r, wt)| wt * w.radial(*r)[1]).sum();
        assert!((integral - w.radial(3.0)[0]).abs() < 1e-12);
    }

    #[test]
    fn origin_rejected() {
        assert!(matches!(weight_derivatives(1.0, 3, &[0.0; 3]), Err(Error::OriginPoint)));
    }
}
