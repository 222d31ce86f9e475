#pragma once

#include "stosym/gsde.hpp"
#include "stosym/transform.hpp"

namespace stosym {

// The planar affine family Psi(x, (z1, z2)) = z1 x + z2 on GL(2) x R^2 and
// the rotation symmetry machinery around it.

// shared conjugation action (z1, z2) -> (g z1 g^T, g z2)
std::shared_ptr<const GaugeAction> conjugation_gauge_ptr();

// driver group GL(2) x R^2
GroupDescriptor affine2d_group();

// Psi(x, z) = z1 x + z2, with exact derivatives (linear in z)
Gsde affine2d_sde();

// angle of (a, b) measured from the first axis, in (-pi, pi]
double arg2(double a, double b);

// V = (R x, C = R): the rotation symmetry
InfinitesimalTransformation affine2d_rotation_v();

// T_a = (rotation by a, constant gauge value rotation by a)
StochasticTransformation affine2d_rotation_t(double a);

// T = (id, B(x)) with B(x) the rotation by -arg(x), undefined at the origin
StochasticTransformation affine2d_polar_t();

// the transformed equation as printed: depends only on the first column of
// z1, so two of the six noise components drop out
Gsde affine2d_transformed_printed();

// the same equation in (rho, theta) = (|x|^2, arg(x)) coordinates; state
// ordering is (theta, rho) so the self-contained rho block comes last
Gsde affine2d_pseudo_polar();

}  // namespace stosym
