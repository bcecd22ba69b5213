#pragma once

namespace sgcp {

/// First moment of the tilted Pólya–Gamma density PG(b, c):
/// b/(2c)·tanh(c/2), with a Taylor branch for |c| < 1e-4.
double pg_mean(double b, double c);

/// Augmentation exponent f(ω, z) = z/2 − z²ω/2 − ln 2, so that
/// σ(z) = E_{PG(1,0)}[exp f(ω, z)].
double f_aug(double omega, double z);

double sigmoid(double z);
/// ln σ(z), stable for large |z|.
double log_sigmoid(double z);
/// ln cosh(x), stable for large |x|.
double log_cosh(double x);

} // namespace sgcp
