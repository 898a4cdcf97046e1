#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace diffgreeks {

/// Risk-neutral correlated GBM market: dS_i = r S_i dt + sigma_i S_i dW_i,
/// Cov(W_i(t), W_j(t)) = rho_ij t.
struct MarketParams {
  double r = 0.0;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd corr;
  Eigen::VectorXd s0;
  double T = 1.0;

  std::size_t n() const noexcept { return static_cast<std::size_t>(s0.size()); }

  /// Throws ConfigError / DimensionError when an invariant is violated.
  void validate() const;
};

struct CholeskyFactor {
  Eigen::MatrixXd L;  // lower triangular, L L^T = corr
};

/// Pivots below this are treated as zero; a negative pivot within it is
/// clamped to zero with a warning.
inline constexpr double kCholeskyPivotTol = 1e-12;

/// Throws FactorizationError if corr is not positive semi-definite.
CholeskyFactor cholesky_factor(const Eigen::MatrixXd& corr);

/// Exact log-normal step: S_i(t+dt) = S_i(t) exp((r - sigma_i^2/2) dt + sigma_i sqrt(dt) L_i z).
Eigen::VectorXd gbm_step(const MarketParams& params, const Eigen::VectorXd& s_prev, double dt,
                         const Eigen::VectorXd& z, const CholeskyFactor& chol);

/// Read-only view of one simulated path.
struct PathView {
  std::size_t n = 0;
  std::size_t steps = 0;
  std::span<const double> s;   // (steps+1) x n
  std::span<const double> z;   // steps x n
  std::span<const double> dw;  // steps x n

  double price(std::size_t k, std::size_t i) const { return s[k * n + i]; }
  std::span<const double> prices(std::size_t k) const { return s.subspan(k * n, n); }
  std::span<const double> normals(std::size_t k) const { return z.subspan(k * n, n); }
  std::span<const double> increments(std::size_t k) const { return dw.subspan(k * n, n); }
  std::span<const double> terminal() const { return prices(steps); }
};

/// Paths on the uniform grid t_k = k T / N, with the normal draws and the
/// correlated increments dW(t_k) = sqrt(dt) L z that produced them.
class PathBatch {
 public:
  PathBatch(std::size_t batch, std::size_t steps, std::size_t n, double T, std::uint64_t seed);

  std::size_t batch() const noexcept { return batch_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t n() const noexcept { return n_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  double dt(std::size_t k) const { return grid_[k] - grid_[k - 1]; }

  PathView path(std::size_t b) const;

  const std::vector<double>& prices() const noexcept { return s_; }
  const std::vector<double>& normals() const noexcept { return z_; }
  const std::vector<double>& increments() const noexcept { return dw_; }

  bool operator==(const PathBatch&) const = default;

 private:
  friend PathBatch simulate_grid(const MarketParams&, std::size_t, std::size_t, std::uint64_t);
  std::size_t batch_, steps_, n_;
  std::uint64_t seed_;
  std::vector<double> grid_;
  std::vector<double> s_, z_, dw_;
};

/// Generates `batch` paths of `steps` exact log-steps. Path b, step k, asset i
/// uses counter index (b * steps + k) * n + i of the seeded stream, so the
/// result does not depend on generation order.
PathBatch simulate_grid(const MarketParams& params, std::size_t steps, std::size_t batch,
                        std::uint64_t seed);

/// Streaming variant: builds each path in a scratch buffer and hands it to
/// `visit` without retaining it. Draws are identical to simulate_grid.
void for_each_path(const MarketParams& params, std::size_t steps, std::size_t batch,
                   std::uint64_t seed, const std::function<void(std::size_t, const PathView&)>& visit);

/// Paths held in memory are capped by this many doubles; above it callers
/// should stream.
inline constexpr std::size_t kDefaultPathMemoryBudget = std::size_t{1} << 27;

}  // namespace diffgreeks
