#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>

#include "galax/dataset.hpp"
#include "galax/error.hpp"
#include "galax/random.hpp"

namespace galax::test {

inline Errc error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected a galax::Error");
}

/// Random planar dataset on [0, 1]^2 with y = f(u, v, x).
inline Dataset random_dataset(std::uint64_t seed, Eigen::Index n, int d,
                              const std::function<double(double, double, const Eigen::RowVectorXd&)>& f,
                              double noise = 0.1) {
  Rng rng(seed);
  Dataset ds;
  ds.coords.resize(n, 2);
  ds.X.resize(n, d);
  ds.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.coords.row(i) << rng.uniform(), rng.uniform();
    for (int j = 0; j < d; ++j) ds.X(i, j) = rng.uniform();
    ds.y(i) = f(ds.coords(i, 0), ds.coords(i, 1), ds.X.row(i)) + noise * rng.normal();
  }
  for (int j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  ds.task = Task::regression();
  return ds;
}

}  // namespace galax::test
