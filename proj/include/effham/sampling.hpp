#pragma once

#include <string>
#include <vector>

#include "effham/potential.hpp"
#include "effham/rng.hpp"
#include "effham/torus.hpp"

namespace effham {

/// i.i.d. draws from a strictly positive trigonometric density (mean mode
/// normalized away internally). 1-D uses inverse-CDF inversion, 2-D uses
/// rejection against the certified maximum. Throws SamplingError (naming the
/// density) if the rejection budget runs out.
std::vector<TorusPoint> sample_trig_density(const TrigPotential& rho, int count, Rng& rng,
                                            const std::string& density_name = "density");

/// Exact integral of xi against the trig density rho (orthogonality of the
/// Fourier modes; both fields in canonical mode form).
double trig_inner_product(const TrigPotential& xi, const TrigPotential& rho);

/// Scale the density so its mean mode is exactly 1 (a probability density).
/// Throws InvalidInputError when the mean mode is absent or nonpositive.
TrigPotential normalize_trig_density(const TrigPotential& rho);

}  // namespace effham
