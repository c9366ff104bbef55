#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "galax/geometry.hpp"
#include "galax/random.hpp"
#include "support.hpp"

using namespace galax;
using galax::test::error_code;

namespace {

Coords line(std::initializer_list<double> xs) {
  Coords c(static_cast<Eigen::Index>(xs.size()), 2);
  Eigen::Index i = 0;
  for (double x : xs) c.row(i++) << x, 0.0;
  return c;
}

}  // namespace

TEST_CASE("planar and geodesic distance") {
  CHECK(distance<double>({0, 0}, {3, 4}, false) == 5.0);
  CHECK(distance<double>({1.5, -2}, {1.5, -2}, false) == 0.0);
  CHECK(distance<double>({0, 0}, {90, 0}, true) == doctest::Approx(std::numbers::pi / 2 * 6371000.0).epsilon(1e-12));
  CHECK(distance<double>({0, 0}, {90, 0}, true) == doctest::Approx(1.0007543e7).epsilon(1e-7));
  CHECK(distance<float>({0, 0}, {3, 4}, false) == 5.0f);
  CHECK(error_code([] { distance<double>({0, 0}, {0, 91}, true); }) == Errc::invalid_input);
  CHECK(error_code([] { distance<double>({0, NAN}, {0, 1}, false); }) == Errc::invalid_input);
}

TEST_CASE("kernel weights") {
  CHECK(kernel_weight(0.5, 1.0, KernelFunction::bisquare) == 0.5625);
  CHECK(kernel_weight(1.2, 1.0, KernelFunction::bisquare) == 0.0);
  CHECK(kernel_weight(1.0, 1.0, KernelFunction::gaussian) == doctest::Approx(0.60653066).epsilon(1e-8));
  CHECK(kernel_weight(0.0, 3.0, KernelFunction::exponential) == 1.0);
  CHECK(kernel_weight(2.0, 2.0, KernelFunction::exponential) == doctest::Approx(std::exp(-1.0)));
  CHECK(error_code([] { kernel_weight(1.0, 0.0, KernelFunction::gaussian); }) == Errc::invalid_bandwidth);
  CHECK(error_code([] { kernel_weight(-1.0, 1.0, KernelFunction::gaussian); }) == Errc::invalid_input);
}

TEST_CASE("adaptive cutoff") {
  const Coords c = line({0, 1, 2, 5});
  CHECK(adaptive_cutoff(0, c, 2) == 2.0);
  CHECK(adaptive_cutoff(0, c, 3) == 5.0);
  CHECK(error_code([&] { adaptive_cutoff(0, c, 4); }) == Errc::invalid_k);
  CHECK(error_code([&] { adaptive_cutoff(0, c, 0); }) == Errc::invalid_k);

  const Coords dup = line({0, 0, 0, 3});
  CHECK(error_code([&] { adaptive_cutoff(0, dup, 2); }) == Errc::degenerate_geometry);
}

TEST_CASE("adaptive cutoff matches sorted distance row") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    Coords c(10, 2);
    for (Eigen::Index i = 0; i < 10; ++i) c.row(i) << rng.uniform(), rng.uniform();
    const Eigen::Index focal = static_cast<Eigen::Index>(rng.below(10));
    std::vector<double> d;
    for (Eigen::Index j = 0; j < 10; ++j)
      if (j != focal) d.push_back((c.row(j) - c.row(focal)).norm());
    std::sort(d.begin(), d.end());
    CHECK(adaptive_cutoff(focal, c, 4) == d[3]);
  }
}

TEST_CASE("kernel rows") {
  Rng rng(5);
  Coords c(25, 2);
  for (Eigen::Index i = 0; i < 25; ++i) c.row(i) << rng.uniform(0, 10), rng.uniform(0, 10);

  KernelSpec adaptive{KernelFunction::bisquare, BandwidthMode::adaptive, 6.0, false};
  for (Eigen::Index focal : {0, 7, 24}) {
    const Eigen::VectorXd w = kernel_row(focal, c, adaptive);
    CHECK(w(focal) == 1.0);
    const Eigen::VectorXd d = distance_row<double>(focal, c, false);
    const auto order = neighbor_order(focal, d);
    CHECK(w(order[5]) == 0.0);
    CHECK(w(order[4]) > 0.0);
  }

  const double maxd = distance_matrix(c, false).maxCoeff();
  KernelSpec wide{KernelFunction::gaussian, BandwidthMode::fixed, 1e9 * maxd, false};
  for (Eigen::Index focal = 0; focal < 25; ++focal)
    CHECK((kernel_row(focal, c, wide).array() - 1.0).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("kernel spec validation") {
  KernelSpec s;
  CHECK(error_code([&] { s.validate(10); }) == Errc::invalid_bandwidth);
  s.bandwidth = 10;
  CHECK(error_code([&] { s.validate(10); }) == Errc::invalid_k);
  s.bandwidth = 2.5;
  CHECK(error_code([&] { s.validate(10); }) == Errc::invalid_k);
  s.bandwidth = 9;
  CHECK_NOTHROW(s.validate(10));
  s.mode = BandwidthMode::fixed;
  s.bandwidth = -1.0;
  CHECK(error_code([&] { s.validate(10); }) == Errc::invalid_bandwidth);
}

TEST_CASE("kernel names round trip") {
  for (auto f : {KernelFunction::bisquare, KernelFunction::gaussian, KernelFunction::exponential})
    CHECK(parse_kernel_function(to_string(f)) == f);
  CHECK(error_code([] { parse_kernel_function("triangle"); }) == Errc::invalid_input);
}

TEST_CASE("stable hash and rng") {
  CHECK(stable_hash(1, 2) == stable_hash(1, 2));
  CHECK(stable_hash(1, 2) != stable_hash(2, 1));
  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(a.below(7) == b.below(7));
  }
}
