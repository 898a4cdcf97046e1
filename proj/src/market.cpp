#include "diffgreeks/market.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include "diffgreeks/errors.hpp"
#include "diffgreeks/rng.hpp"

namespace diffgreeks {

void MarketParams::validate() const {
  const auto n = s0.size();
  if (n < 1) throw ConfigError("market: at least one asset is required");
  if (sigma.size() != n) throw DimensionError("market: sigma has " + std::to_string(sigma.size()) +
                                              " entries, expected " + std::to_string(n));
  if (corr.rows() != n || corr.cols() != n)
    throw DimensionError("market: corr must be " + std::to_string(n) + "x" + std::to_string(n));
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("market: T must be positive");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(sigma[i] >= 0.0)) throw ConfigError("market: sigma must be non-negative");
    if (!(s0[i] > 0.0)) throw ConfigError("market: s0 must be positive");
    if (std::abs(corr(i, i) - 1.0) > 1e-12) throw ConfigError("market: corr diagonal must be 1");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(corr(i, j) - corr(j, i)) > 1e-12) throw ConfigError("market: corr must be symmetric");
      if (std::abs(corr(i, j)) > 1.0) throw ConfigError("market: |corr| must not exceed 1");
    }
  }
}

CholeskyFactor cholesky_factor(const Eigen::MatrixXd& corr) {
  const Eigen::Index n = corr.rows();
  if (corr.cols() != n) throw DimensionError("cholesky_factor: matrix must be square");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = corr(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= L(j, k) * L(j, k);
    if (pivot < -kCholeskyPivotTol) {
      throw FactorizationError("cholesky_factor: matrix is not positive semi-definite (pivot " +
                               std::to_string(pivot) + " at row " + std::to_string(j) + ")");
    }
    if (pivot <= kCholeskyPivotTol) {
      if (pivot < 0.0) {
        std::cerr << "warning: cholesky_factor: negative pivot " << pivot << " at row " << j
                  << " clamped to zero\n";
      }
      // Rank-deficient column: the remaining entries must already be
      // explained by earlier columns.
      for (Eigen::Index i = j + 1; i < n; ++i) {
        double v = corr(i, j);
        for (Eigen::Index k = 0; k < j; ++k) v -= L(i, k) * L(j, k);
        if (std::abs(v) > 1e-8) {
          throw FactorizationError("cholesky_factor: matrix is not positive semi-definite");
        }
      }
      continue;
    }
    const double d = std::sqrt(pivot);
    L(j, j) = d;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = corr(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= L(i, k) * L(j, k);
      L(i, j) = v / d;
    }
  }
  return CholeskyFactor{std::move(L)};
}

Eigen::VectorXd gbm_step(const MarketParams& params, const Eigen::VectorXd& s_prev, double dt,
                         const Eigen::VectorXd& z, const CholeskyFactor& chol) {
  const Eigen::VectorXd lz = chol.L * z;
  Eigen::VectorXd out(s_prev.size());
  const double sq = std::sqrt(dt);
  for (Eigen::Index i = 0; i < s_prev.size(); ++i) {
    const double s = params.sigma[i];
    out[i] = s_prev[i] * std::exp((params.r - 0.5 * s * s) * dt + s * sq * lz[i]);
  }
  return out;
}

namespace {

// Fills one path into the given buffers. Shared by the stored and streaming
// generators so that both produce identical numbers.
void generate_path(const MarketParams& params, const Eigen::MatrixXd& L, const CounterRng& rng,
                   std::size_t b, std::size_t steps, std::span<const double> grid, double* s,
                   double* z, double* dw) {
  const std::size_t n = params.n();
  for (std::size_t i = 0; i < n; ++i) s[i] = params.s0[static_cast<Eigen::Index>(i)];
  for (std::size_t k = 0; k < steps; ++k) {
    const double dt = grid[k + 1] - grid[k];
    const double sq = std::sqrt(dt);
    double* zk = z + k * n;
    double* dwk = dw + k * n;
    const std::uint64_t base = (static_cast<std::uint64_t>(b) * steps + k) * n;
    for (std::size_t i = 0; i < n; ++i) zk[i] = rng.normal(base + i);
    for (std::size_t i = 0; i < n; ++i) {
      double lz = 0.0;
      for (std::size_t j = 0; j <= i; ++j) lz += L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * zk[j];
      dwk[i] = sq * lz;
    }
    const double* sp = s + k * n;
    double* sn = s + (k + 1) * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double sig = params.sigma[static_cast<Eigen::Index>(i)];
      sn[i] = sp[i] * std::exp((params.r - 0.5 * sig * sig) * dt + sig * dwk[i]);
    }
  }
}

std::vector<double> uniform_grid(double T, std::size_t steps) {
  std::vector<double> g(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) g[k] = T * static_cast<double>(k) / static_cast<double>(steps);
  g[steps] = T;
  return g;
}

}  // namespace

PathBatch::PathBatch(std::size_t batch, std::size_t steps, std::size_t n, double T, std::uint64_t seed)
    : batch_(batch), steps_(steps), n_(n), seed_(seed), grid_(uniform_grid(T, steps)),
      s_(batch * (steps + 1) * n), z_(batch * steps * n), dw_(batch * steps * n) {}

PathView PathBatch::path(std::size_t b) const {
  const std::size_t ns = (steps_ + 1) * n_;
  const std::size_t nz = steps_ * n_;
  return PathView{n_, steps_, std::span<const double>(s_).subspan(b * ns, ns),
                  std::span<const double>(z_).subspan(b * nz, nz),
                  std::span<const double>(dw_).subspan(b * nz, nz)};
}

PathBatch simulate_grid(const MarketParams& params, std::size_t steps, std::size_t batch,
                        std::uint64_t seed) {
  if (steps < 1) throw ConfigError("simulate_grid: N must be at least 1");
  if (batch < 1) throw ConfigError("simulate_grid: batch must be at least 1");
  const std::size_t n = params.n();
  const CholeskyFactor chol = cholesky_factor(params.corr);
  const CounterRng rng(seed);
  PathBatch out(batch, steps, n, params.T, seed);
  const std::size_t ns = (steps + 1) * n;
  const std::size_t nz = steps * n;
  for (std::size_t b = 0; b < batch; ++b) {
    generate_path(params, chol.L, rng, b, steps, out.grid_, out.s_.data() + b * ns,
                  out.z_.data() + b * nz, out.dw_.data() + b * nz);
  }
  return out;
}

void for_each_path(const MarketParams& params, std::size_t steps, std::size_t batch,
                   std::uint64_t seed, const std::function<void(std::size_t, const PathView&)>& visit) {
  if (steps < 1) throw ConfigError("for_each_path: N must be at least 1");
  const std::size_t n = params.n();
  const CholeskyFactor chol = cholesky_factor(params.corr);
  const CounterRng rng(seed);
  const std::vector<double> grid = uniform_grid(params.T, steps);
  std::vector<double> s((steps + 1) * n), z(steps * n), dw(steps * n);
  for (std::size_t b = 0; b < batch; ++b) {
    generate_path(params, chol.L, rng, b, steps, grid, s.data(), z.data(), dw.data());
    visit(b, PathView{n, steps, s, z, dw});
  }
}

}  // namespace diffgreeks
