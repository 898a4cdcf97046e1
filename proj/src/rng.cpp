#include "diffgreeks/rng.hpp"

#include "diffgreeks/normal.hpp"

namespace diffgreeks {

double CounterRng::normal(std::uint64_t index) const noexcept {
  return normal_quantile(uniform(index));
}

}  // namespace diffgreeks
