#include "emproc/rng.hpp"

#include "emproc/special.hpp"

namespace emproc {

double SubstreamRng::next_normal() { return normal_quantile(next_uniform()); }

}  // namespace emproc
