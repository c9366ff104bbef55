#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "galax/csv.hpp"
#include "galax/engine.hpp"
#include "galax/random.hpp"
#include "galax/results.hpp"
#include "galax/zip.hpp"
#include "support.hpp"

using namespace galax;
using galax::test::error_code;
using galax::test::random_dataset;
using Eigen::Index;
using Eigen::VectorXd;

namespace {

const GalaxResults& small_run() {
  static const GalaxResults r = [] {
    const Dataset ds = random_dataset(1, 30, 4, [](double u, double v, const auto& x) {
      return u * x(0) + v * x(1) - x(2) + 0.5 * x(3);
    });
    GalaxConfig c;
    c.automl.candidates = {Learner::decision_tree, Learner::random_forest};
    c.automl.budget = 3;
    c.automl.min_local_samples = 10;
    c.kernel.bandwidth = 14;
    return fit(ds, c);
  }();
  return r;
}

std::vector<zip::Member> members_of(const GalaxResults& r) { return zip::read(archive_bytes(r)); }

std::string rebuilt(std::vector<zip::Member> m, const std::function<void(std::vector<zip::Member>&)>& edit) {
  edit(m);
  return zip::write(m);
}

}  // namespace

TEST_CASE("regression metrics") {
  VectorXd y(4);
  y << 1, 2, 3, 4;
  RegressionMetrics m = regression_metrics(y, y);
  CHECK(m.r2_value() == 1.0);
  CHECK(m.rmse == 0.0);
  m = regression_metrics(y, VectorXd::Constant(4, 2.5));
  CHECK(m.r2_value() == doctest::Approx(0.0).epsilon(1e-15));
  VectorXd z = VectorXd::Zero(2), p(2);
  p << 3, 4;
  CHECK(regression_metrics(z, p).rmse == doctest::Approx(3.5355339).epsilon(1e-8));
  CHECK_FALSE(regression_metrics(z, p).r2.has_value());
  CHECK(error_code([&] { regression_metrics(z, p).r2_value(); }) == Errc::metric_undefined);
}

TEST_CASE("classification metrics") {
  VectorXd y(4), p(4);
  y << 1, 1, 0, 2;
  ClassificationMetrics m = classification_metrics(y, y, 3);
  CHECK(m.accuracy == 1.0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);

  y << 1, 1, 0, 0;
  p << 1, 0, 1, 0;
  m = classification_metrics(y, p, 2);
  CHECK(m.accuracy == 0.5);
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 0.5);
  CHECK(m.f1 == 0.5);

  VectorXd y3(5), p3(5);
  y3 << 0, 1, 2, 2, 1;
  p3 << 0, 0, 0, 0, 1;
  m = classification_metrics(y3, p3, 3);
  CHECK(m.unpredicted_classes == std::vector<int>{2});
}

TEST_CASE("classification metrics match a confusion-matrix oracle") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    VectorXd y(50), p(50);
    for (Index i = 0; i < 50; ++i) {
      y(i) = static_cast<double>(rng.below(3));
      p(i) = rng.uniform() < 0.5 ? y(i) : static_cast<double>(rng.below(3));
    }
    Eigen::Matrix3d cm = Eigen::Matrix3d::Zero();
    for (Index i = 0; i < 50; ++i) cm(static_cast<Index>(y(i)), static_cast<Index>(p(i))) += 1;
    double prec = 0, rec = 0, f1 = 0;
    for (int c = 0; c < 3; ++c) {
      const double pc = cm.col(c).sum() > 0 ? cm(c, c) / cm.col(c).sum() : 0;
      const double rc = cm.row(c).sum() > 0 ? cm(c, c) / cm.row(c).sum() : 0;
      prec += pc / 3;
      rec += rc / 3;
      f1 += (pc + rc > 0 ? 2 * pc * rc / (pc + rc) : 0) / 3;
    }
    const ClassificationMetrics m = classification_metrics(y, p, 3);
    CHECK(std::abs(m.accuracy - cm.trace() / 50) <= 1e-12);
    CHECK(std::abs(m.precision - prec) <= 1e-12);
    CHECK(std::abs(m.recall - rec) <= 1e-12);
    CHECK(std::abs(m.f1 - f1) <= 1e-12);
  }
}

TEST_CASE("summary") {
  const GalaxResults& r = small_run();
  const Summary s = summarize(r);
  CHECK(s.n_locations == 30);
  int total = 0;
  for (const auto& sel : s.selections) total += sel.count;
  CHECK(total == 30);
  for (std::size_t k = 1; k < s.selections.size(); ++k) CHECK(s.selections[k - 1].count >= s.selections[k].count);

  std::vector<double> scores;
  for (const auto& lf : r.local_fits) scores.push_back(lf.local_score);
  std::sort(scores.begin(), scores.end());
  CHECK(s.local_score_median == doctest::Approx(0.5 * (scores[14] + scores[15])).epsilon(1e-15));
  CHECK(s.local_score_min == scores.front());
  CHECK(s.local_score_max == scores.back());

  const std::string text = s.text();
  CHECK(text.find("r2") != std::string::npos);
  CHECK(text.find("rmse") != std::string::npos);
  CHECK(summarize(results_from_archive(archive_bytes(r))).text() == text);
  CHECK(s.to_json()["n_locations"] == 30);
}

TEST_CASE("SHAP record for one location") {
  const GalaxResults& r = small_run();
  const ShapRecord rec = shap_for_location(r, 5);
  REQUIRE(rec.contributions.size() == 4);
  double sum = rec.base_value;
  for (const auto& c : rec.contributions) sum += c.phi;
  CHECK(std::abs(sum - rec.explained_output) <= 1e-9);
  CHECK(std::abs(rec.explained_output - r.local_fits[5].prediction) <= 1e-9);
  for (std::size_t k = 1; k < rec.contributions.size(); ++k)
    CHECK(std::abs(rec.contributions[k - 1].phi) >= std::abs(rec.contributions[k].phi));
  CHECK(error_code([&] { shap_for_location(r, 30); }) == Errc::location_range);
  CHECK(error_code([&] { shap_for_location(r, -1); }) == Errc::location_range);
}

TEST_CASE("archive round trip") {
  const GalaxResults& r = small_run();
  const std::string bytes = archive_bytes(r);
  const GalaxResults back = results_from_archive(bytes);
  CHECK(equal(back, r));
  CHECK(archive_bytes(back) == bytes);
  CHECK(same_settings(back.settings, r.settings));

  std::vector<std::string> names;
  for (const auto& [name, data] : members_of(r)) names.push_back(name);
  REQUIRE(names.size() == 4 + 30);
  CHECK(names[0] == "manifest.json");
  CHECK(names[1] == "local_fits.csv");
  CHECK(names[2] == "shap_values.csv");
  CHECK(names[3] == "base_values.csv");
  CHECK(names[4] == "models/0.json");

  const auto tmp = std::filesystem::temp_directory_path() / "galax_results_test.galax";
  save(r, tmp);
  CHECK(equal(load(tmp), r));
  std::filesystem::remove(tmp);
  CHECK(error_code([&] { load(tmp); }) == Errc::io);
}

TEST_CASE("archive faults") {
  const GalaxResults& r = small_run();
  const auto members = members_of(r);

  const std::string future = rebuilt(members, [](auto& m) {
    auto& s = m[0].second;
    s.replace(s.find("\"1.0\""), 5, "\"99.0\"");
  });
  CHECK(error_code([&] { results_from_archive(future); }) == Errc::unsupported_version);

  const std::string truncated = rebuilt(members, [](auto& m) {
    auto& s = m[2].second;
    s.erase(s.rfind('\n', s.size() - 2) + 1);
  });
  try {
    results_from_archive(truncated);
    FAIL("truncated shap table accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::integrity);
    CHECK(std::string(e.what()).find("shap_values") != std::string::npos);
  }

  const std::string bad_model = rebuilt(members, [](auto& m) { m[4].second = "{\"trees\": 3}"; });
  CHECK(error_code([&] { results_from_archive(bad_model); }) == Errc::integrity);

  CHECK(error_code([] { results_from_archive("not a zip"); }) == Errc::integrity);
}

TEST_CASE("zip container") {
  const std::vector<zip::Member> m{{"a.txt", "hello"}, {"dir/b.bin", std::string("\0\1\2", 3)}, {"empty", ""}};
  const std::string bytes = zip::write(m);
  CHECK(zip::read(bytes) == m);
  CHECK(zip::write(m) == bytes);
  std::string bad = bytes;
  bad[bad.find("hello")] = 'j';
  try {
    zip::read(bad);
    FAIL("corrupt member accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::integrity);
    CHECK(std::string(e.what()).find("a.txt") != std::string::npos);
  }
}

TEST_CASE("csv helpers") {
  const auto rows = csv::parse("\xEF\xBB\xBF" "a,\"b,c\",\"d\"\"e\"\r\n1,2,3\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == csv::Row{"a", "b,c", "d\"e"});
  CHECK(rows[1] == csv::Row{"1", "2", "3"});
  CHECK(csv::join({"x", "y,z"}) == "x,\"y,z\"");
  double v;
  CHECK(csv::parse_double("0.1", v));
  CHECK(v == 0.1);
  CHECK_FALSE(csv::parse_double("1.5x", v));
  CHECK_FALSE(csv::parse_double("", v));
  CHECK(csv::format_double(0.1) == "0.10000000000000001");
  CHECK(csv::parse_double(csv::format_double(1.0 / 3.0), v));
  CHECK(v == 1.0 / 3.0);
}
