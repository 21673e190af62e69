#include "tabscm/mlp.hpp"

namespace tabscm {

template class Mlp<float>;
template class Mlp<double>;
template class Adam<float>;
template class Adam<double>;

std::vector<double> timestep_embedding(std::size_t t, std::size_t dim) {
  const std::size_t half = dim / 2;
  std::vector<double> out(dim, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
    out[k] = std::sin(static_cast<double>(t) * freq);
    out[half + k] = std::cos(static_cast<double>(t) * freq);
  }
  return out;
}

}  // namespace tabscm
