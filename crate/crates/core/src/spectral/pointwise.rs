//! Collocation-point algebra for the pseudo-spectral nonlinear terms.

use crate::error::Result;
use crate::spectral::field::{PhysicalScalarField, PhysicalVectorField};

/// `u × w` at every collocation point.
pub fn pointwise_cross(u: &PhysicalVectorField, w: &PhysicalVectorField) -> Result<PhysicalVectorField> {
    u.grid().same_as(w.grid())?;
    let [u0, u1, u2] = u.components();
    let [w0, w1, w2] = w.components();
    let len = u.grid().len();
    let mut out = PhysicalVectorField::zeros(u.grid());
    {
        let [o0, o1, o2] = out_components(&mut out);
        for i in 0..len {
            o0[i] = u1[i] * w2[i] - u2[i] * w1[i];
            o1[i] = u2[i] * w0[i] - u0[i] * w2[i];
            o2[i] = u0[i] * w1[i] - u1[i] * w0[i];
        }
    }
    Ok(out)
}

/// `u · w` at every collocation point.
pub fn pointwise_dot(u: &PhysicalVectorField, w: &PhysicalVectorField) -> Result<PhysicalScalarField> {
    u.grid().same_as(w.grid())?;
    let mut out = PhysicalScalarField::zeros(u.grid());
    let dst = out.component_mut(0);
    for c in 0..3 {
        for ((d, a), b) in dst.iter_mut().zip(u.component(c)).zip(w.component(c)) {
            *d += a * b;
        }
    }
    Ok(out)
}

/// `(u·∇)u` from `u` and its partial derivatives, `grad[j] = ∂_j u`.
pub fn advective_product(u: &PhysicalVectorField, grad: &[PhysicalVectorField; 3]) -> Result<PhysicalVectorField> {
    for g in grad.iter() {
        u.grid().same_as(g.grid())?;
    }
    let mut out = PhysicalVectorField::zeros(u.grid());
    for c in 0..3 {
        let dst = out.component_mut(c);
        for (j, g) in grad.iter().enumerate() {
            for ((d, a), b) in dst.iter_mut().zip(u.component(j)).zip(g.component(c)) {
                *d += a * b;
            }
        }
    }
    Ok(out)
}

fn out_components(f: &mut PhysicalVectorField) -> [&mut [f64]; 3] {
    let [a, b, c] = f.components_mut();
    [a.as_mut_slice(), b.as_mut_slice(), c.as_mut_slice()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::Grid;

    #[test]
    fn self_cross_vanishes() {
        let g = Grid::new(8).unwrap();
        let u = PhysicalVectorField::from_fn(&g, |x| [x[0].sin(), x[1].cos() + 0.3, (x[2] + x[0]).sin()]);
        let c = pointwise_cross(&u, &u).unwrap();
        assert!(c.components().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn cross_is_orthogonal_to_second_argument() {
        let g = Grid::new(16).unwrap();
        let u = PhysicalVectorField::from_fn(&g, |x| [x[0].sin() * x[1].cos(), x[2].cos(), 1.7 * x[1].sin()]);
        let w = PhysicalVectorField::from_fn(&g, |x| [x[2].sin(), (x[0] * 2.0).cos(), x[0].cos() * x[1].sin()]);
        let c = pointwise_cross(&u, &w).unwrap();
        let d = pointwise_dot(&c, &w).unwrap();
        let scale = u.max_magnitude() * w.max_magnitude().powi(2);
        assert!(d.component(0).iter().all(|v| v.abs() <= 1e-14 * scale));
    }

    #[test]
    fn advective_product_of_shear() {
        // u = (sin y, 0, 0): (u·∇)u = u_y ∂_y u = 0 since u_y = 0
        let g = Grid::new(8).unwrap();
        let u = PhysicalVectorField::from_fn(&g, |x| [x[1].sin(), 0.0, 0.0]);
        let grad = [
            PhysicalVectorField::zeros(&g),
            PhysicalVectorField::from_fn(&g, |x| [x[1].cos(), 0.0, 0.0]),
            PhysicalVectorField::zeros(&g),
        ];
        let a = advective_product(&u, &grad).unwrap();
        assert!(a.components().iter().flatten().all(|&v| v == 0.0));
        // u = (sin x, 0, 0): (u·∇)u = (sin x cos x, 0, 0)
        let u = PhysicalVectorField::from_fn(&g, |x| [x[0].sin(), 0.0, 0.0]);
        let grad = [
            PhysicalVectorField::from_fn(&g, |x| [x[0].cos(), 0.0, 0.0]),
            PhysicalVectorField::zeros(&g),
            PhysicalVectorField::zeros(&g),
        ];
        let a = advective_product(&u, &grad).unwrap();
        for i in 0..g.len() {
            let x = g.point(i);
            assert!((a.component(0)[i] - x[0].sin() * x[0].cos()).abs() < 1e-15);
        }
    }
}
