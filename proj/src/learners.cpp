#include "galax/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "galax/error.hpp"
#include "galax/random.hpp"

namespace galax {

namespace {

constexpr int kUnlimitedDepth = 1 << 20;

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

struct TreeParams {
  int max_depth = kUnlimitedDepth;
  int min_samples_leaf = 1;
  int max_features = 1;
  bool random_thresholds = false;
};

/// Greedy CART builder over a fixed training table. Regression targets use
/// weighted variance, classification targets weighted Gini.
class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& target, int n_classes,
              const TreeParams& params, Rng& rng)
      : X_(X), target_(target), n_classes_(n_classes), params_(params), rng_(rng) {}

  Tree build(std::vector<int> rows, const std::vector<double>& weights) {
    weights_ = &weights;
    tree_ = Tree{};
    tree_.n_outputs = n_classes_ > 0 ? n_classes_ : 1;
    rows_ = std::move(rows);
    scratch_.resize(rows_.size());
    presort();
    acc_.assign(static_cast<std::size_t>(tree_.n_outputs), 0.0);
    grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  double w(int i) const { return (*weights_)[static_cast<std::size_t>(i)]; }

  // Per-feature row orders by (value, row); kept node-aligned with rows_.
  void presort() {
    order_.clear();
    if (params_.random_thresholds) return;
    order_.resize(static_cast<std::size_t>(X_.cols()));
    for (Eigen::Index f = 0; f < X_.cols(); ++f) {
      auto& o = order_[static_cast<std::size_t>(f)];
      o = rows_;
      std::sort(o.begin(), o.end(), [&](int a, int b) {
        const double va = X_(a, f), vb = X_(b, f);
        return va < vb || (va == vb && a < b);
      });
    }
    goes_left_.assign(static_cast<std::size_t>(X_.rows()), 0);
  }

  int add_node(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(tree_.feature.size());
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    std::fill(acc_.begin(), acc_.end(), 0.0);
    double total = 0.0;
    for (std::size_t r = begin; r < end; ++r) {
      const int i = rows_[r];
      total += w(i);
      if (n_classes_ > 0)
        acc_[static_cast<std::size_t>(target_(i))] += w(i);
      else
        acc_[0] += w(i) * target_(i);
    }
    for (double a : acc_) tree_.value.push_back(a / total);
    return id;
  }

  bool is_pure(std::size_t begin, std::size_t end) const {
    const double first = target_(rows_[begin]);
    for (std::size_t r = begin + 1; r < end; ++r)
      if (target_(rows_[r]) != first) return false;
    return true;
  }

  // Rows of a node occupy rows_[begin, end); children are stable partitions of it.
  int grow(std::size_t begin, std::size_t end, int depth) {
    const int id = add_node(begin, end);
    const auto n = static_cast<int>(end - begin);
    if (depth >= params_.max_depth || n < 2 * params_.min_samples_leaf || is_pure(begin, end)) return id;

    const Split split = best_split(begin, end);
    if (split.feature < 0) return id;

    std::size_t mid = begin, spill = 0;
    for (std::size_t r = begin; r < end; ++r) {
      const int i = rows_[r];
      if (X_(i, split.feature) <= split.threshold)
        rows_[mid++] = i;
      else
        scratch_[spill++] = i;
    }
    std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(spill),
              rows_.begin() + static_cast<std::ptrdiff_t>(mid));
    if (!order_.empty()) {
      for (std::size_t r = begin; r < mid; ++r) goes_left_[static_cast<std::size_t>(rows_[r])] = 1;
      for (std::size_t r = mid; r < end; ++r) goes_left_[static_cast<std::size_t>(rows_[r])] = 0;
      for (auto& o : order_) {
        std::size_t l = begin, s = 0;
        for (std::size_t r = begin; r < end; ++r) {
          const int i = o[r];
          if (goes_left_[static_cast<std::size_t>(i)])
            o[l++] = i;
          else
            scratch_[s++] = i;
        }
        std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(s),
                  o.begin() + static_cast<std::ptrdiff_t>(l));
      }
    }

    const auto k = static_cast<std::size_t>(id);
    tree_.feature[k] = split.feature;
    tree_.threshold[k] = split.threshold;
    const int l = grow(begin, mid, depth + 1);
    tree_.left[k] = l;
    const int r = grow(mid, end, depth + 1);
    tree_.right[k] = r;
    return id;
  }

  const std::vector<int>& candidate_features() {
    const auto d = static_cast<int>(X_.cols());
    features_.resize(static_cast<std::size_t>(d));
    std::iota(features_.begin(), features_.end(), 0);
    if (params_.max_features >= d) return features_;
    for (int i = 0; i < params_.max_features; ++i) {
      const auto j = static_cast<std::size_t>(i) +
                     static_cast<std::size_t>(rng_.below(static_cast<std::uint64_t>(d - i)));
      std::swap(features_[static_cast<std::size_t>(i)], features_[j]);
    }
    features_.resize(static_cast<std::size_t>(params_.max_features));
    std::sort(features_.begin(), features_.end());
    return features_;
  }

  // Impurity accumulator: score() is the quantity whose weighted sum over
  // children is maximised (sum of squared class masses / mass, or S^2 / W).
  struct Stats {
    double weight = 0.0;
    double sum = 0.0;
    std::vector<double> mass;

    void add(double wi, double yi, int n_classes) {
      weight += wi;
      if (n_classes > 0)
        mass[static_cast<std::size_t>(yi)] += wi;
      else
        sum += wi * yi;
    }
    void reset() {
      weight = sum = 0.0;
      std::fill(mass.begin(), mass.end(), 0.0);
    }
    double score(int n_classes) const {
      if (weight <= 0.0) return 0.0;
      if (n_classes == 0) return sum * sum / weight;
      double s = 0.0;
      for (double m : mass) s += m * m;
      return s / weight;
    }
    /// score() of (this - part).
    double remainder_score(const Stats& part, int n_classes) const {
      const double wr = weight - part.weight;
      if (wr <= 0.0) return 0.0;
      if (n_classes == 0) {
        const double sr = sum - part.sum;
        return sr * sr / wr;
      }
      double s = 0.0;
      for (std::size_t c = 0; c < mass.size(); ++c) {
        const double m = mass[c] - part.mass[c];
        s += m * m;
      }
      return s / wr;
    }
  };

  Stats empty_stats() const {
    Stats s;
    if (n_classes_ > 0) s.mass.assign(static_cast<std::size_t>(n_classes_), 0.0);
    return s;
  }

  Split best_split(std::size_t begin, std::size_t end) {
    Stats parent = empty_stats();
    double scale = 0.0;
    for (std::size_t r = begin; r < end; ++r) {
      const int i = rows_[r];
      parent.add(w(i), target_(i), n_classes_);
      scale += n_classes_ > 0 ? w(i) : w(i) * target_(i) * target_(i);
    }
    const double parent_score = parent.score(n_classes_);
    const double tolerance = 1e-12 * scale;
    const auto n = static_cast<int>(end - begin);
    const int msl = params_.min_samples_leaf;

    Split best;
    Stats left = empty_stats();
    for (int f : candidate_features()) {
      left.reset();
      if (params_.random_thresholds) {
        double lo = X_(rows_[begin], f), hi = lo;
        for (std::size_t r = begin; r < end; ++r) {
          lo = std::min(lo, X_(rows_[r], f));
          hi = std::max(hi, X_(rows_[r], f));
        }
        if (!(lo < hi)) continue;
        const double t = rng_.uniform(lo, hi);
        int n_left = 0;
        for (std::size_t r = begin; r < end; ++r) {
          const int i = rows_[r];
          if (X_(i, f) <= t) {
            left.add(w(i), target_(i), n_classes_);
            ++n_left;
          }
        }
        if (n_left < msl || n - n_left < msl) continue;
        const double gain = left.score(n_classes_) + parent.remainder_score(left, n_classes_) - parent_score;
        if (gain > tolerance && gain > best.gain) best = {f, t, gain};
        continue;
      }

      const int* sorted = order_[static_cast<std::size_t>(f)].data() + begin;
      for (int p = 1; p < n; ++p) {
        const int prev = sorted[p - 1];
        left.add(w(prev), target_(prev), n_classes_);
        const double a = X_(prev, f), b = X_(sorted[p], f);
        if (!(a < b) || p < msl || n - p < msl) continue;
        const double gain = left.score(n_classes_) + parent.remainder_score(left, n_classes_) - parent_score;
        if (gain > tolerance && gain > best.gain) {
          double t = a + 0.5 * (b - a);
          if (!(t < b)) t = a;
          best = {f, t, gain};
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& target_;
  int n_classes_;
  TreeParams params_;
  Rng& rng_;
  const std::vector<double>* weights_ = nullptr;
  Tree tree_;
  std::vector<int> rows_, scratch_, features_;
  std::vector<std::vector<int>> order_;
  std::vector<char> goes_left_;
  std::vector<double> acc_;
};

TreeParams tree_params(const LearnerConfig& config, int n_features) {
  TreeParams p;
  p.max_depth = config.hyper.max_depth ? *config.hyper.max_depth : kUnlimitedDepth;
  p.min_samples_leaf = config.hyper.min_samples_leaf;
  p.max_features = config.hyper.max_features.resolve(n_features);
  p.random_thresholds = config.learner == Learner::extra_trees;
  return p;
}

void validate_hyper(const LearnerConfig& c) {
  const auto& h = c.hyper;
  if (h.max_depth && *h.max_depth < 1) throw Error(Errc::invalid_input, "max_depth must be >= 1");
  if (h.min_samples_leaf < 1) throw Error(Errc::invalid_input, "min_samples_leaf must be >= 1");
  if (h.n_estimators < 0) throw Error(Errc::invalid_input, "n_estimators must be >= 0");
  if (!h.max_features.use_sqrt && !(h.max_features.fraction > 0.0 && h.max_features.fraction <= 1.0))
    throw Error(Errc::invalid_input, "max_features fraction must be in (0, 1]");
  if (!(h.learning_rate > 0.0 && h.learning_rate <= 1.0))
    throw Error(Errc::invalid_input, "learning_rate must be in (0, 1]");
  if (!(h.subsample > 0.0 && h.subsample <= 1.0))
    throw Error(Errc::invalid_input, "subsample must be in (0, 1]");
}

/// Weighted bootstrap: n draws with probability proportional to weight;
/// multiplicities become the in-bag weights.
std::vector<double> weighted_bootstrap(const std::vector<double>& weights, Rng& rng) {
  std::vector<double> cumulative(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
  const double total = cumulative.back();
  std::vector<double> counts(weights.size(), 0.0);
  for (std::size_t draw = 0; draw < weights.size(); ++draw) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    counts[static_cast<std::size_t>(it - cumulative.begin())] += 1.0;
  }
  return counts;
}

void fit_forest(FittedModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const std::vector<double>& weights, int n_classes) {
  const auto& cfg = model.config;
  const TreeParams params = tree_params(cfg, static_cast<int>(X.cols()));
  const int n_trees = cfg.learner == Learner::decision_tree ? 1 : cfg.hyper.n_estimators;
  if (n_trees < 1) throw Error(Errc::invalid_input, "forests need n_estimators >= 1");
  std::vector<int> all(static_cast<std::size_t>(X.rows()));
  std::iota(all.begin(), all.end(), 0);

  model.trees.reserve(static_cast<std::size_t>(n_trees));
  for (int t = 0; t < n_trees; ++t) {
    Rng rng(stable_hash(cfg.seed, static_cast<std::uint64_t>(t)));
    TreeBuilder builder(X, y, n_classes, params, rng);
    if (cfg.learner == Learner::random_forest) {
      const std::vector<double> counts = weighted_bootstrap(weights, rng);
      std::vector<int> rows;
      for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i] > 0.0) rows.push_back(static_cast<int>(i));
      model.trees.push_back(builder.build(std::move(rows), counts));
    } else {
      model.trees.push_back(builder.build(all, weights));
    }
  }
}

void fit_boosting(FittedModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const std::vector<double>& weights) {
  const auto& cfg = model.config;
  const auto n = static_cast<std::size_t>(X.rows());
  TreeParams params = tree_params(cfg, static_cast<int>(X.cols()));
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const auto n_sub = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(cfg.hyper.subsample * static_cast<double>(n))));

  auto stage_rows = [&](Rng& rng) {
    std::vector<int> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    if (n_sub < n) {
      rng.shuffle(rows);
      rows.resize(n_sub);
      std::sort(rows.begin(), rows.end());
    }
    return rows;
  };

  const bool classification = model.task.is_classification();
  const int n_ensembles = !classification ? 1 : (model.task.n_classes == 2 ? 1 : model.task.n_classes);

  if (!classification) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += weights[i] * y(static_cast<Eigen::Index>(i));
    mean /= total;
    model.base_scores = {mean};
  } else {
    model.base_scores.assign(static_cast<std::size_t>(model.task.n_classes), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      model.base_scores[static_cast<std::size_t>(y(static_cast<Eigen::Index>(i)))] += weights[i];
    for (double& p : model.base_scores) p /= total;
  }

  // Raw scores per ensemble, seeded from the base score.
  std::vector<Eigen::VectorXd> raw(static_cast<std::size_t>(n_ensembles));
  std::vector<bool> active(static_cast<std::size_t>(n_ensembles), true);
  for (int e = 0; e < n_ensembles; ++e) {
    const int cls = classification && model.task.n_classes == 2 ? 1 : e;
    double init = model.base_scores[0];
    if (classification) {
      const double p = model.base_scores[static_cast<std::size_t>(cls)];
      active[static_cast<std::size_t>(e)] = p > 0.0 && p < 1.0;
      init = active[static_cast<std::size_t>(e)] ? std::log(p / (1.0 - p)) : 0.0;
    }
    raw[static_cast<std::size_t>(e)] = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), init);
  }

  Eigen::VectorXd gradient(static_cast<Eigen::Index>(n));
  for (int stage = 0; stage < cfg.hyper.n_estimators; ++stage) {
    for (int e = 0; e < n_ensembles; ++e) {
      if (!active[static_cast<std::size_t>(e)]) continue;
      const int cls = classification && model.task.n_classes == 2 ? 1 : e;
      Rng rng(stable_hash(cfg.seed, static_cast<std::uint64_t>(stage) *
                                         static_cast<std::uint64_t>(n_ensembles) +
                                     static_cast<std::uint64_t>(e)));
      auto& F = raw[static_cast<std::size_t>(e)];
      for (Eigen::Index i = 0; i < F.size(); ++i) {
        gradient(i) = classification ? (y(i) == cls ? 1.0 : 0.0) - sigmoid(F(i)) : y(i) - F(i);
      }
      TreeBuilder builder(X, gradient, 0, params, rng);
      Tree tree = builder.build(stage_rows(rng), weights);
      tree.output_index = cls;
      for (Eigen::Index i = 0; i < F.size(); ++i) {
        const auto leaf = static_cast<std::size_t>(tree.leaf(X.row(i)));
        F(i) += cfg.hyper.learning_rate * tree.value[leaf];
      }
      model.trees.push_back(std::move(tree));
    }
  }
}

}  // namespace

std::string to_string(Learner learner) {
  switch (learner) {
    case Learner::decision_tree: return "decision_tree";
    case Learner::random_forest: return "random_forest";
    case Learner::extra_trees: return "extra_trees";
    case Learner::gradient_boosted_trees: return "gradient_boosted_trees";
  }
  return "unknown";
}

Learner parse_learner(const std::string& name) {
  for (Learner l : {Learner::decision_tree, Learner::random_forest, Learner::extra_trees,
                    Learner::gradient_boosted_trees})
    if (to_string(l) == name) return l;
  throw Error(Errc::invalid_input, "unknown learner '" + name + "'");
}

std::string to_string(TaskKind kind) {
  return kind == TaskKind::regression ? "regression" : "classification";
}

int MaxFeatures::resolve(int n_features) const {
  const double raw = use_sqrt ? std::sqrt(static_cast<double>(n_features))
                              : fraction * static_cast<double>(n_features);
  return std::clamp(static_cast<int>(std::floor(raw + 1e-9)), 1, std::max(1, n_features));
}

Hyperparameters default_hyperparameters(Learner learner) {
  Hyperparameters h;
  switch (learner) {
    case Learner::decision_tree:
      h.max_features = MaxFeatures::of(1.0);
      break;
    case Learner::random_forest:
    case Learner::extra_trees:
      h.max_features = MaxFeatures::sqrt();
      break;
    case Learner::gradient_boosted_trees:
      h.max_depth = 3;
      h.max_features = MaxFeatures::of(1.0);
      break;
  }
  return h;
}

nlohmann::json hyperparameters_to_json(Learner learner, const Hyperparameters& hp) {
  nlohmann::json j = nlohmann::json::object();
  j["max_depth"] = hp.max_depth ? nlohmann::json(*hp.max_depth) : nlohmann::json(nullptr);
  j["min_samples_leaf"] = hp.min_samples_leaf;
  j["max_features"] = hp.max_features.use_sqrt ? nlohmann::json("sqrt")
                                               : nlohmann::json(hp.max_features.fraction);
  if (learner != Learner::decision_tree) j["n_estimators"] = hp.n_estimators;
  if (learner == Learner::gradient_boosted_trees) {
    j["learning_rate"] = hp.learning_rate;
    j["subsample"] = hp.subsample;
  }
  return j;
}

Hyperparameters hyperparameters_from_json(Learner learner, const nlohmann::json& j) {
  Hyperparameters h = default_hyperparameters(learner);
  if (j.contains("max_depth"))
    h.max_depth = j["max_depth"].is_null() ? std::nullopt : std::optional<int>(j["max_depth"].get<int>());
  if (j.contains("min_samples_leaf")) h.min_samples_leaf = j["min_samples_leaf"].get<int>();
  if (j.contains("max_features")) {
    const auto& mf = j["max_features"];
    h.max_features = mf.is_string() ? MaxFeatures::sqrt() : MaxFeatures::of(mf.get<double>());
  }
  if (j.contains("n_estimators")) h.n_estimators = j["n_estimators"].get<int>();
  if (j.contains("learning_rate")) h.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("subsample")) h.subsample = j["subsample"].get<double>();
  return h;
}

FittedModel fit(const LearnerConfig& config, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const Eigen::VectorXd& sample_weights, const Task& task) {
  validate_hyper(config);
  if (y.size() != X.rows() || sample_weights.size() != X.rows())
    throw Error(Errc::shape_mismatch, "fit: X, y and weights disagree on row count");
  if (X.cols() < 1) throw Error(Errc::shape_mismatch, "fit: need at least one feature");
  if (!X.allFinite() || !y.allFinite() || !sample_weights.allFinite())
    throw Error(Errc::invalid_input, "fit: non-finite input");
  if ((sample_weights.array() < 0.0).any())
    throw Error(Errc::invalid_input, "fit: negative sample weight");
  if (task.is_classification()) {
    if (task.n_classes < 2) throw Error(Errc::invalid_input, "fit: classification needs >= 2 classes");
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (y(i) < 0 || y(i) >= task.n_classes || y(i) != std::floor(y(i)))
        throw Error(Errc::invalid_input, "fit: class label outside [0, n_classes)");
  }

  // Zero-weight rows carry no information; dropping them up front makes
  // zero weight exactly equivalent to removal.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    if (sample_weights(i) > 0.0) keep.push_back(i);
  if (keep.empty()) throw Error(Errc::empty_training_set, "fit: all sample weights are zero");

  const Eigen::MatrixXd Xk = X(keep, Eigen::all);
  const Eigen::VectorXd yk = y(keep);
  std::vector<double> wk(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) wk[i] = sample_weights(keep[i]);

  FittedModel model;
  model.config = config;
  model.task = task;
  model.n_features = static_cast<int>(X.cols());
  if (config.learner == Learner::gradient_boosted_trees)
    fit_boosting(model, Xk, yk, wk);
  else
    fit_forest(model, Xk, yk, wk, task.is_classification() ? task.n_classes : 0);
  return model;
}

Eigen::MatrixXd FittedModel::predict_values(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features)
    throw Error(Errc::shape_mismatch, "predict: expected " + std::to_string(n_features) +
                                          " features, got " + std::to_string(X.cols()));
  const Eigen::Index m = X.rows();
  const int k = n_outputs();
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rows = X;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, k);

  if (config.learner != Learner::gradient_boosted_trees) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double* x = rows.row(i).data();
      for (const Tree& t : trees) {
        const auto base = static_cast<std::size_t>(t.leaf(x)) * static_cast<std::size_t>(k);
        for (int c = 0; c < k; ++c) out(i, c) += t.value[base + static_cast<std::size_t>(c)];
      }
    }
    if (!trees.empty()) out /= static_cast<double>(trees.size());
    return out;
  }

  const double lr = config.hyper.learning_rate;
  if (!task.is_classification()) {
    out.setConstant(base_scores.at(0));
    for (Eigen::Index i = 0; i < m; ++i) {
      const double* x = rows.row(i).data();
      for (const Tree& t : trees) out(i, 0) += lr * t.value[static_cast<std::size_t>(t.leaf(x))];
    }
    return out;
  }

  Eigen::MatrixXd raw(m, k);
  for (int c = 0; c < k; ++c) {
    const double p = base_scores[static_cast<std::size_t>(c)];
    raw.col(c).setConstant(p > 0.0 && p < 1.0 ? std::log(p / (1.0 - p)) : 0.0);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const double* x = rows.row(i).data();
    for (const Tree& t : trees)
      raw(i, t.output_index) += lr * t.value[static_cast<std::size_t>(t.leaf(x))];
  }
  auto prob = [&](Eigen::Index i, int c) {
    const double p = base_scores[static_cast<std::size_t>(c)];
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    return sigmoid(raw(i, c));
  };
  for (Eigen::Index i = 0; i < m; ++i) {
    if (k == 2) {
      out(i, 1) = prob(i, 1);
      out(i, 0) = 1.0 - out(i, 1);
      continue;
    }
    for (int c = 0; c < k; ++c) out(i, c) = prob(i, c);
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

int argmax_label(const Eigen::Ref<const Eigen::RowVectorXd>& proba) {
  int best = 0;
  for (int c = 1; c < proba.size(); ++c)
    if (proba(c) > proba(best)) best = c;
  return best;
}

Prediction predict(const FittedModel& model, const Eigen::MatrixXd& X) {
  Prediction p;
  const Eigen::MatrixXd values = model.predict_values(X);
  if (!model.task.is_classification()) {
    p.value = values.col(0);
    return p;
  }
  p.proba = values;
  p.value.resize(values.rows());
  for (Eigen::Index i = 0; i < values.rows(); ++i) p.value(i) = argmax_label(values.row(i));
  return p;
}

nlohmann::json model_to_json(const FittedModel& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& t : model.trees) {
    trees.push_back({{"feature", t.feature},
                     {"threshold", t.threshold},
                     {"left", t.left},
                     {"right", t.right},
                     {"value", t.value},
                     {"n_outputs", t.n_outputs},
                     {"output_index", t.output_index}});
  }
  return {{"learner", to_string(model.config.learner)},
          {"hyperparameters", hyperparameters_to_json(model.config.learner, model.config.hyper)},
          {"seed", model.config.seed},
          {"task", to_string(model.task.kind)},
          {"n_classes", model.task.n_classes},
          {"n_features", model.n_features},
          {"base_scores", model.base_scores},
          {"trees", trees}};
}

FittedModel model_from_json(const nlohmann::json& j) {
  FittedModel m;
  m.config.learner = parse_learner(j.at("learner").get<std::string>());
  m.config.hyper = hyperparameters_from_json(m.config.learner, j.at("hyperparameters"));
  m.config.seed = j.at("seed").get<std::uint64_t>();
  const auto task = j.at("task").get<std::string>();
  m.task = task == "classification" ? Task::classification(j.at("n_classes").get<int>())
                                    : Task::regression();
  m.n_features = j.at("n_features").get<int>();
  m.base_scores = j.at("base_scores").get<std::vector<double>>();
  for (const auto& jt : j.at("trees")) {
    Tree t;
    t.feature = jt.at("feature").get<std::vector<int>>();
    t.threshold = jt.at("threshold").get<std::vector<double>>();
    t.left = jt.at("left").get<std::vector<int>>();
    t.right = jt.at("right").get<std::vector<int>>();
    t.value = jt.at("value").get<std::vector<double>>();
    t.n_outputs = jt.at("n_outputs").get<int>();
    t.output_index = jt.at("output_index").get<int>();
    const std::size_t n = t.feature.size();
    if (n == 0 || t.threshold.size() != n || t.left.size() != n || t.right.size() != n ||
        t.value.size() != n * static_cast<std::size_t>(t.n_outputs))
      throw Error(Errc::integrity, "tree table arrays have inconsistent lengths");
    for (std::size_t k = 0; k < n; ++k) {
      if (t.feature[k] >= m.n_features) throw Error(Errc::integrity, "tree feature index out of range");
      if (t.feature[k] >= 0 &&
          (t.left[k] <= static_cast<int>(k) || t.right[k] <= static_cast<int>(k) ||
           t.left[k] >= static_cast<int>(n) || t.right[k] >= static_cast<int>(n)))
        throw Error(Errc::integrity, "tree child index out of range");
    }
    m.trees.push_back(std::move(t));
  }
  return m;
}

}  // namespace galax
