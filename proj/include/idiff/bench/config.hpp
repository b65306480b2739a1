#pragma once

/// \file config.hpp
/// \brief Experiment selection, dimensions, budgets and solver choices.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "idiff/errors.hpp"

namespace idiff::bench {

inline constexpr const char* kVersion = "0.1.0";

/// Invalid or inconsistent experiment configuration (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Experiment { RidgePrecision, SvmHpo, Distill, Lasso };

inline const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::RidgePrecision: return "ridge-precision";
    case Experiment::SvmHpo: return "svm-hpo";
    case Experiment::Distill: return "distill";
    case Experiment::Lasso: return "lasso";
  }
  return "?";
}

/// m samples, p features (d for ridge and lasso), k classes. Ridge and lasso ignore k.
struct Dims {
  std::size_t m = 0;
  std::size_t p = 0;
  std::size_t k = 1;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::RidgePrecision;
  std::uint64_t seed = 0;
  Dims dims;
  std::size_t inner_iters = 0;
  std::size_t outer_iters = 0;  // lasso: number of θ grid points
  std::string solver;
  std::string condition;
  std::string out_path;  // empty: standard output

  static ExperimentConfig defaults(Experiment e) {
    ExperimentConfig c;
    c.experiment = e;
    switch (e) {
      case Experiment::RidgePrecision:
        c.dims = {50, 50, 1};
        c.inner_iters = 200;
        c.outer_iters = 0;
        c.solver = "gd";
        c.condition = "stationary";
        break;
      case Experiment::SvmHpo:
        c.dims = {20, 50, 3};
        c.inner_iters = 2500;
        c.outer_iters = 150;
        // Mirror descent approaches zero coordinates geometrically with a
        // rate set by the complementarity gap, so FISTA is the default
        // solver; the hypergradient still differentiates the MD fixed point.
        c.solver = "pg";
        c.condition = "md-fp";
        break;
      case Experiment::Distill:
        c.dims = {60, 8, 3};
        c.inner_iters = 200;
        c.outer_iters = 100;
        c.solver = "gd";
        c.condition = "stationary";
        break;
      case Experiment::Lasso:
        c.dims = {50, 20, 1};
        c.inner_iters = 5000;
        c.outer_iters = 40;
        c.solver = "pg";
        c.condition = "pg-fp";
        break;
    }
    return c;
  }

  [[nodiscard]] std::vector<std::string> allowed_solvers() const {
    switch (experiment) {
      case Experiment::RidgePrecision:
      case Experiment::Distill: return {"gd"};
      case Experiment::SvmHpo: return {"md", "pg", "bcd"};
      case Experiment::Lasso: return {"pg"};
    }
    return {};
  }

  [[nodiscard]] std::vector<std::string> allowed_conditions() const {
    switch (experiment) {
      case Experiment::RidgePrecision:
      case Experiment::Distill: return {"stationary"};
      case Experiment::SvmHpo: return {"md-fp", "pg-fp", "proj-fp"};
      case Experiment::Lasso: return {"pg-fp"};
    }
    return {};
  }

  /// Throws ConfigError naming the first violated requirement.
  void validate() const {
    const std::string who = std::string(experiment_name(experiment)) + ": ";
    auto require = [&](bool ok, const std::string& what) {
      if (!ok) throw ConfigError(who + what);
    };
    auto listed = [](const std::vector<std::string>& xs, const std::string& x) {
      return std::find(xs.begin(), xs.end(), x) != xs.end();
    };
    require(dims.m > 0 && dims.p > 0 && dims.k > 0, "dimensions must be positive");
    require(inner_iters > 0, "--inner-iters must be positive");
    require(listed(allowed_solvers(), solver), "solver '" + solver + "' does not apply");
    require(listed(allowed_conditions(), condition), "condition '" + condition + "' does not apply");
    switch (experiment) {
      case Experiment::RidgePrecision:
        break;
      case Experiment::SvmHpo:
        require(dims.m <= 200 && dims.p <= 50, "needs m <= 200 and p <= 50");
        require(dims.k >= 2 && dims.k <= 5, "needs 2 <= k <= 5");
        require(dims.k <= dims.m, "needs at least one sample per class (k <= m)");
        require(outer_iters > 0, "--outer-iters must be positive");
        break;
      case Experiment::Distill:
        require(dims.k >= 2 && dims.k <= 3, "needs 2 <= k <= 3");
        require(dims.p <= 16, "needs p <= 16");
        require(dims.k <= dims.m, "needs at least one sample per class (k <= m)");
        require(outer_iters > 0, "--outer-iters must be positive");
        break;
      case Experiment::Lasso:
        require(outer_iters > 0, "--outer-iters (grid points) must be positive");
        break;
    }
  }
};

/// Wall time per named phase, in the order the phases first ran.
class PhaseTimes {
 public:
  template <class Fn>
  decltype(auto) run(const std::string& phase, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    struct Stop {
      PhaseTimes* self;
      const std::string& phase;
      std::chrono::steady_clock::time_point start;
      ~Stop() {
        self->add(phase, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      }
    } stop{this, phase, start};
    return fn();
  }

  void add(const std::string& phase, double seconds) {
    for (auto& [name, total] : entries_) {
      if (name == phase) {
        total += seconds;
        return;
      }
    }
    entries_.emplace_back(phase, seconds);
  }

  [[nodiscard]] const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

}  // namespace idiff::bench
