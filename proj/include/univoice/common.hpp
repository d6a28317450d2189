// univoice/common.hpp

// Copyright 2026  UniVoice contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef UNIVOICE_COMMON_HPP_
#define UNIVOICE_COMMON_HPP_

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace uv {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

namespace detail {
inline void cat_into(std::ostringstream &) {}
template <typename T, typename... Rest>
void cat_into(std::ostringstream &oss, T &&head, Rest &&...rest) {
  oss << std::forward<T>(head);
  cat_into(oss, std::forward<Rest>(rest)...);
}
}  // namespace detail

template <typename... Args>
std::string cat(Args &&...args) {
  std::ostringstream oss;
  detail::cat_into(oss, std::forward<Args>(args)...);
  return oss.str();
}

template <typename... Args>
[[noreturn]] void fail(Args &&...args) {
  throw Error(cat(std::forward<Args>(args)...));
}

template <typename... Args>
void require(bool cond, Args &&...args) {
  if (!cond) fail(std::forward<Args>(args)...);
}

inline bool all_finite(const double *p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

// softplus with the usual overflow-safe rewrite
inline double softplus(double x) {
  return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// inverse of softplus, for constructing biases that hit a target output
inline double softplus_inv(double y) { return std::log(std::expm1(y)); }

}  // namespace uv

#endif  // UNIVOICE_COMMON_HPP_
