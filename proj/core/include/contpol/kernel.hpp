#pragma once

namespace contpol {

/// Flat-top (infinite order) kernel K(u) = (cos u - cos 2u) / (pi u^2).
/// Integrates to one; its Fourier transform is 1 on [-1, 1] and vanishes outside [-2, 2].
double eval_kernel(double u);

/// dK/du.
double kernel_derivative(double u);

/// K(u) and K'(u) from a single sin/cos evaluation.
void kernel_with_derivative(double u, double& value, double& derivative) noexcept;

/// Fourier transform of K: 1 for |xi| <= 1, 2 - |xi| for 1 < |xi| < 2, else 0.
double kernel_ft(double xi);

struct KernelConstants {
  double l2_norm_sq;  ///< integral of K^2 = 4 / (3 pi)
  double sup_abs;     ///< max |K| = K(0) = 3 / (2 pi)
};

KernelConstants kernel_constants() noexcept;

}  // namespace contpol
