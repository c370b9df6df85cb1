#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace symflag {

// Ambient dimension is at most kMaxDim; vectors live on the stack.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

enum class ErrorKind {
  kInvalidArgument,  // violated precondition of an operation
  kSchema,           // malformed fixture or probe reference
  kCompatibility,    // tangent violates the nested-compatibility condition
  kNumerical,        // non-finite values, blow-up, degenerate frames
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline Vec zero_vec(int dim) { return Vec::Zero(dim); }

inline Vec unit_vec(int dim, int axis) {
  Vec v = Vec::Zero(dim);
  v[axis] = 1.0;
  return v;
}

}  // namespace symflag
