#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mfi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Accuracy of closed-form geometric primitives.
inline constexpr double kTauGeo = 1e-9;
/// Accuracy of iteratively projected intersections.
inline constexpr double kTauIter = 1e-6;
/// Resolvent subproblem accuracy.
inline constexpr double kTauRes = 1e-8;

inline constexpr int kMaxDimension = 16;

enum class ErrorKind {
  DimensionMismatch,
  InvalidArgument,
  Infeasible,
  NotInSet,
  EmptyValue,
  NonConvergence,
  Unsupported,
  Schema,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* where) {
  if (a != b) {
    throw Error(ErrorKind::DimensionMismatch, std::string(where) + ": dimension mismatch (" +
                                                  std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

inline void require_finite(const Vec& v, const char* where) {
  if (!v.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, std::string(where) + ": non-finite entry");
  }
}

inline Vec unit(Eigen::Index n, Eigen::Index i) {
  Vec e = Vec::Zero(n);
  e[i] = 1.0;
  return e;
}

/// Lexicographic strict ordering on points.
inline bool lex_less(const Vec& a, const Vec& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

inline void sort_lex(std::vector<Vec>& pts) {
  std::sort(pts.begin(), pts.end(), lex_less);
}

/// Removes points closer than `tol` to an earlier one, keeping first occurrences.
inline std::vector<Vec> dedupe(const std::vector<Vec>& pts, double tol = 1e-12) {
  std::vector<Vec> out;
  for (const auto& p : pts) {
    bool seen = false;
    for (const auto& q : out) {
      if ((p - q).norm() <= tol) {
        seen = true;
        break;
      }
    }
    if (!seen) out.push_back(p);
  }
  return out;
}

inline double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

/// Radical inverse in base `b`; building block for Halton sequences.
inline double radical_inverse(std::uint64_t i, std::uint32_t b) {
  double inv = 1.0 / b, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % b);
    i /= b;
    f *= inv;
  }
  return r;
}

/// Point `index` of the Halton sequence in [0,1)^n.
inline Vec halton(std::uint64_t index, Eigen::Index n) {
  static constexpr std::uint32_t primes[kMaxDimension + 4] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                                              31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
  Vec p(n);
  for (Eigen::Index d = 0; d < n; ++d) p[d] = radical_inverse(index + 1, primes[d]);
  return p;
}

/// Worker count, capped by MF_THREADS when set.
inline unsigned thread_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MF_THREADS")) {
    long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
  }
  return hw;
}

/// Evaluates fn(i) for i in [0, n) on up to thread_count() threads. Results are
/// written by index, so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  unsigned workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace mfi
