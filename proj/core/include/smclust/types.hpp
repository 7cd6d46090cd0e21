#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace smclust {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using IntVector = std::vector<int>;
using Mask = std::vector<std::uint8_t>;

inline constexpr const char* kVersion = "0.1.0";

/// Invalid configuration values or malformed option input. CLI exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Unreadable files, shape mismatches, inconsistent dataset contents. CLI exit code 3.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values where finite ones are required. CLI exit code 4.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

inline void require_finite(const Matrix& m, const std::string& name) {
  if (!m.allFinite()) throw numeric_error("non-finite values in " + name);
}

inline void require_finite(double v, const std::string& name) {
  if (!std::isfinite(v)) throw numeric_error("non-finite value in " + name);
}

}  // namespace smclust
