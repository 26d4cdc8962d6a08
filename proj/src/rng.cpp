#include "openha/rng.hpp"

#include <cmath>

namespace openha {

double Rng::next_gaussian() {
  double u1 = next_double();
  double u2 = next_double();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace openha
