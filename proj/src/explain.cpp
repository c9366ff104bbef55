#include "galax/explain.hpp"

#include <bit>
#include <cmath>
#include <numeric>

#include "galax/error.hpp"
#include "galax/random.hpp"

namespace galax {

namespace {

void check_inputs(const Eigen::VectorXd& x, const Eigen::MatrixXd& background) {
  if (background.rows() < 1) throw Error(Errc::invalid_input, "shapley: empty background");
  if (background.cols() != x.size())
    throw Error(Errc::shape_mismatch, "shapley: background width differs from x");
}

/// Background rows with the switched-on features overwritten by x.
void fill_composite(Eigen::Ref<Eigen::MatrixXd> block, const Eigen::VectorXd& x,
                    const Eigen::MatrixXd& background, const std::vector<char>& on) {
  block = background;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (on[static_cast<std::size_t>(j)]) block.col(j).setConstant(x(j));
}

double evaluate_target(const BatchFunction& f, const Eigen::VectorXd& x) {
  return f(x.transpose())(0);
}

}  // namespace

std::string to_string(ExplainMode mode) { return mode == ExplainMode::exact ? "exact" : "sampled"; }

Explanation exact_shapley(const BatchFunction& f, const Eigen::VectorXd& x,
                          const Eigen::MatrixXd& background, int max_exact_features) {
  check_inputs(x, background);
  const auto d = static_cast<int>(x.size());
  if (d > max_exact_features)
    throw Error(Errc::use_sampled_mode, "exact Shapley limited to " +
                                            std::to_string(max_exact_features) +
                                            " features; use sampled mode");
  const Eigen::Index b = background.rows();
  const std::size_t n_subsets = std::size_t{1} << d;

  // One batch holding every coalition's composite rows.
  Eigen::MatrixXd batch(static_cast<Eigen::Index>(n_subsets) * b, d);
  std::vector<char> on(static_cast<std::size_t>(d));
  for (std::size_t s = 0; s < n_subsets; ++s) {
    for (int j = 0; j < d; ++j) on[static_cast<std::size_t>(j)] = (s >> j) & 1U;
    fill_composite(batch.middleRows(static_cast<Eigen::Index>(s) * b, b), x, background, on);
  }
  const Eigen::VectorXd out = f(batch);
  std::vector<double> v(n_subsets);
  for (std::size_t s = 0; s < n_subsets; ++s)
    v[s] = out.segment(static_cast<Eigen::Index>(s) * b, b).mean();

  // |S|! (d - |S| - 1)! / d! = 1 / (d * C(d - 1, |S|))
  std::vector<double> weight(static_cast<std::size_t>(d));
  double binom = 1.0;
  for (int k = 0; k < d; ++k) {
    weight[static_cast<std::size_t>(k)] = 1.0 / (d * binom);
    binom = binom * (d - 1 - k) / (k + 1);
  }

  Explanation e;
  e.phi = Eigen::VectorXd::Zero(d);
  for (std::size_t s = 0; s < n_subsets; ++s) {
    const int size = std::popcount(s);
    for (int j = 0; j < d; ++j) {
      if ((s >> j) & 1U) continue;
      e.phi(j) += weight[static_cast<std::size_t>(size)] * (v[s | (std::size_t{1} << j)] - v[s]);
    }
  }
  e.base_value = v[0];
  e.mode_used = ExplainMode::exact;
  e.target = evaluate_target(f, x);
  e.residual = e.phi.sum() + e.base_value - e.target;
  return e;
}

Explanation permutation_shapley(const BatchFunction& f, const Eigen::VectorXd& x,
                                const Eigen::MatrixXd& background,
                                const std::vector<std::vector<int>>& orderings) {
  check_inputs(x, background);
  if (orderings.empty()) throw Error(Errc::invalid_input, "shapley: no orderings");
  const auto d = static_cast<int>(x.size());
  const Eigen::Index b = background.rows();

  Explanation e;
  e.phi = Eigen::VectorXd::Zero(d);
  e.base_value = f(background).mean();
  Eigen::MatrixXd batch((d + 1) * b, d);
  std::vector<char> on(static_cast<std::size_t>(d));
  for (const auto& order : orderings) {
    if (static_cast<int>(order.size()) != d)
      throw Error(Errc::invalid_input, "shapley: ordering length differs from feature count");
    std::fill(on.begin(), on.end(), 0);
    fill_composite(batch.topRows(b), x, background, on);
    for (int step = 0; step < d; ++step) {
      on[static_cast<std::size_t>(order[static_cast<std::size_t>(step)])] = 1;
      fill_composite(batch.middleRows((step + 1) * b, b), x, background, on);
    }
    const Eigen::VectorXd out = f(batch);
    double previous = out.head(b).mean();
    for (int step = 0; step < d; ++step) {
      const double current = out.segment((step + 1) * b, b).mean();
      e.phi(order[static_cast<std::size_t>(step)]) += current - previous;
      previous = current;
    }
  }
  e.phi /= static_cast<double>(orderings.size());
  e.mode_used = ExplainMode::sampled;
  e.target = evaluate_target(f, x);
  e.residual = e.phi.sum() + e.base_value - e.target;
  return e;
}

Explanation sampled_shapley(const BatchFunction& f, const Eigen::VectorXd& x,
                            const Eigen::MatrixXd& background, int n_permutations,
                            std::uint64_t seed) {
  if (n_permutations < 10)
    throw Error(Errc::invalid_input, "sampled Shapley needs at least 10 permutations");
  const auto d = static_cast<int>(x.size());
  Rng rng(seed);
  std::vector<std::vector<int>> orderings;
  orderings.reserve(static_cast<std::size_t>(n_permutations));
  std::vector<int> order(static_cast<std::size_t>(d));
  while (static_cast<int>(orderings.size()) < n_permutations) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    orderings.push_back(order);
    if (static_cast<int>(orderings.size()) < n_permutations)
      orderings.emplace_back(order.rbegin(), order.rend());
  }
  return permutation_shapley(f, x, background, orderings);
}

Explanation explain_local(const FittedModel& model, const Eigen::VectorXd& x,
                          const Eigen::MatrixXd& background, const ExplainSettings& settings,
                          std::uint64_t seed) {
  if (x.size() != model.n_features)
    throw Error(Errc::shape_mismatch, "explain: feature count differs from model");
  int target_class = -1;
  if (model.task.is_classification()) {
    if (settings.target_class) {
      target_class = *settings.target_class;
      if (target_class < 0 || target_class >= model.task.n_classes)
        throw Error(Errc::class_out_of_range,
                    "explain: class " + std::to_string(target_class) + " outside [0, " +
                        std::to_string(model.task.n_classes) + ")");
    } else {
      target_class = argmax_label(model.predict_values(x.transpose()).row(0));
    }
  }
  const BatchFunction f = [&model, target_class](const Eigen::MatrixXd& rows) -> Eigen::VectorXd {
    const Eigen::MatrixXd values = model.predict_values(rows);
    return values.col(target_class < 0 ? 0 : target_class);
  };
  Explanation e = settings.mode == ExplainMode::exact && x.size() <= settings.max_exact_features
                      ? exact_shapley(f, x, background, settings.max_exact_features)
                      : sampled_shapley(f, x, background, settings.n_permutations, seed);
  e.target_class = target_class;
  return e;
}

}  // namespace galax
