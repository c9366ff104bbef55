#include "galax/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "galax/csv.hpp"
#include "galax/engine.hpp"
#include "galax/error.hpp"

namespace galax {

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  2  usage error\n"
    "  3  data validation error\n"
    "  4  engine or model error\n"
    "  5  archive error\n"
    "Errors are reported on stderr as a single line starting with error[CODE]:\n"
    "Environment: GALAX_THREADS sets the default worker count (--threads overrides).";

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return 2;
    case ErrorCategory::data: return 3;
    case ErrorCategory::engine: return 4;
    case ErrorCategory::archive: return 5;
  }
  return 4;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

struct DataOptions {
  std::string path;
  std::string x = "x";
  std::string y = "y";
  std::string target;
  std::string features;
  std::string task = "regression";
  bool geodesic = false;

  void attach(CLI::App* app) {
    app->add_option("--data", path, "Input CSV or GeoJSON file")->required();
    app->add_option("--x", x, "Column holding x / longitude")->capture_default_str();
    app->add_option("--y", y, "Column holding y / latitude")->capture_default_str();
    app->add_option("--target", target, "Target column")->required();
    app->add_option("--features", features, "Comma-separated feature columns (default: all remaining numeric)");
    app->add_option("--task", task, "regression | classification")
        ->check(CLI::IsMember({"regression", "classification"}))
        ->capture_default_str();
    app->add_flag("--geodesic", geodesic, "Treat coordinates as lon/lat degrees (great-circle metres)");
  }

  IngestSpec spec() const {
    IngestSpec s;
    s.path = path;
    s.x_col = x;
    s.y_col = y;
    s.target_col = target;
    s.feature_cols = split_list(features);
    s.task = task == "classification" ? TaskKind::classification : TaskKind::regression;
    s.geodesic = geodesic;
    return s;
  }
};

struct ModelOptions {
  std::string kernel = "bisquare";
  bool fixed = false;
  bool adaptive = false;
  std::string bw = "auto";
  std::string bw_method = "auto";
  std::string candidates = "decision_tree,random_forest,extra_trees,gradient_boosted_trees";
  std::string strategy = "grid";
  int n_draws = 24;
  int budget = 24;
  int cv_folds = 3;
  std::string metric = "auto";
  int min_local_samples = 20;
  double weight_floor = 1e-6;
  std::optional<double> isa_start;
  std::optional<double> isa_increment;
  int isa_bands = 10;
  bool no_explain = false;
  std::string explain_mode = "exact";
  int n_permutations = 100;
  int max_exact_features = 12;
  int background_size = 64;
  std::optional<int> explain_class;
  std::uint64_t seed = 0;
  int threads = 1;

  void attach(CLI::App* app) {
    app->add_option("--kernel", kernel, "bisquare | gaussian | exponential")
        ->check(CLI::IsMember({"bisquare", "gaussian", "exponential"}))
        ->capture_default_str();
    auto* f = app->add_flag("--fixed", fixed, "Fixed distance bandwidth");
    auto* a = app->add_flag("--adaptive", adaptive, "Adaptive nearest-neighbour bandwidth (default)");
    f->excludes(a);
    app->add_option("--bw", bw, "Bandwidth: 'auto', a distance (fixed) or neighbour count (adaptive)")
        ->capture_default_str();
    app->add_option("--bw-method", bw_method, "auto | isa | performance (auto: isa for regression, performance for classification)")
        ->check(CLI::IsMember({"auto", "isa", "performance"}))
        ->capture_default_str();
    app->add_option("--candidates", candidates, "Comma-separated learners")->capture_default_str();
    app->add_option("--strategy", strategy, "grid | random")->check(CLI::IsMember({"grid", "random"}))->capture_default_str();
    app->add_option("--n-draws", n_draws, "Configurations drawn by the random strategy")->capture_default_str();
    app->add_option("--budget", budget, "Maximum model evaluations per location")->capture_default_str();
    app->add_option("--cv-folds", cv_folds, "Cross-validation folds")->capture_default_str();
    app->add_option("--metric", metric, "auto | r2 | neg_rmse | accuracy | macro_f1")
        ->check(CLI::IsMember({"auto", "r2", "neg_rmse", "accuracy", "macro_f1"}))
        ->capture_default_str();
    app->add_option("--min-local-samples", min_local_samples, "Minimum rows per local model")->capture_default_str();
    app->add_option("--weight-floor", weight_floor, "Kernel weights at or below this are excluded")->capture_default_str();
    app->add_option("--isa-start", isa_start, "First ISA distance band (default: max nearest-neighbour distance)");
    app->add_option("--isa-increment", isa_increment, "ISA band increment (default: derived from extent)");
    app->add_option("--isa-bands", isa_bands, "Number of ISA distance bands")->capture_default_str();
    app->add_flag("--no-explain", no_explain, "Skip Shapley explanations");
    app->add_option("--explain-mode", explain_mode, "exact | sampled")->check(CLI::IsMember({"exact", "sampled"}))->capture_default_str();
    app->add_option("--n-permutations", n_permutations, "Permutations for sampled explanations")->capture_default_str();
    app->add_option("--max-exact-features", max_exact_features, "Feature count above which sampling is used")->capture_default_str();
    app->add_option("--background-size", background_size, "Background rows per explanation")->capture_default_str();
    app->add_option("--explain-class", explain_class, "Class index to explain (default: predicted class)");
    app->add_option("--seed", seed, "Master seed")->capture_default_str();
    app->add_option("--threads", threads, "Worker threads")->envname("GALAX_THREADS")->capture_default_str();
  }

  GalaxConfig config(bool geodesic) const {
    GalaxConfig c;
    c.kernel.function = parse_kernel_function(kernel);
    c.kernel.mode = fixed ? BandwidthMode::fixed : BandwidthMode::adaptive;
    c.kernel.geodesic = geodesic;
    if (bw != "auto") {
      double v;
      if (!csv::parse_double(bw, v)) throw Error(Errc::usage, "--bw must be 'auto' or a number");
      c.kernel.bandwidth = v;
    }
    if (bw_method != "auto") c.bw_method = parse_bandwidth_method(bw_method);
    c.isa.start = isa_start;
    c.isa.increment = isa_increment;
    c.isa.n_bands = isa_bands;
    c.automl.candidates.clear();
    for (const auto& name : split_list(candidates)) c.automl.candidates.push_back(parse_learner(name));
    c.automl.strategy = strategy == "grid" ? SearchStrategy::grid : SearchStrategy::random;
    c.automl.n_draws = n_draws;
    c.automl.budget = budget;
    c.automl.cv_folds = cv_folds;
    if (metric != "auto") c.automl.metric = parse_metric(metric);
    c.automl.min_local_samples = min_local_samples;
    c.weight_floor = weight_floor;
    c.explain.enabled = !no_explain;
    c.explain.mode = explain_mode == "exact" ? ExplainMode::exact : ExplainMode::sampled;
    c.explain.n_permutations = n_permutations;
    c.explain.max_exact_features = max_exact_features;
    c.explain.background_size = background_size;
    c.explain.target_class = explain_class;
    c.master_seed = seed;
    c.threads = threads;
    return c;
  }
};

GalaxResults load_archive(const std::string& path) {
  try {
    return load(path);
  } catch (const Error& e) {
    if (e.code() == Errc::io) throw Error(Errc::integrity, e.what());
    throw;
  }
}

std::string label_text(const GalaxResults& r, double label) {
  const auto k = static_cast<std::size_t>(label);
  if (r.task.is_classification() && k < r.class_labels.size()) return r.class_labels[k];
  return csv::format_double(label);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::io, "cannot write " + path);
  f << content;
  if (!f) throw Error(Errc::io, "failed writing " + path);
}

std::string prediction_header(const GalaxResults& r, const std::string& leading) {
  std::string h = leading + ",prediction";
  if (r.task.is_classification())
    for (const auto& label : r.class_labels) h += "," + csv::quote("p_" + label);
  return h;
}

std::string export_csv(const GalaxResults& r, const std::string& what) {
  std::ostringstream out;
  if (what == "local-fits") {
    for (const auto& [name, data] : archive_members(r))
      if (name == "local_fits.csv") return data;
  }
  if (what == "shap") {
    csv::Row header{"location"};
    for (const auto& f : r.feature_names()) header.push_back(f);
    header.push_back("base_value");
    header.push_back("explained_output");
    out << csv::join(header) << "\n";
    for (const LocalFit& lf : r.local_fits) {
      csv::Row row{std::to_string(lf.location)};
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(r.feature_names().size()); ++j)
        row.push_back(lf.explained() ? csv::format_double(lf.shap(j)) : "");
      row.push_back(lf.explained() ? csv::format_double(lf.base_value) : "");
      row.push_back(lf.explained() ? csv::format_double(lf.explained_output) : "");
      out << csv::join(row) << "\n";
    }
    return out.str();
  }
  out << prediction_header(r, "location,x,y") << "\n";
  for (const LocalFit& lf : r.local_fits) {
    csv::Row row{std::to_string(lf.location), csv::format_double(r.coords(lf.location, 0)),
                 csv::format_double(r.coords(lf.location, 1)), label_text(r, lf.prediction)};
    for (Eigen::Index c = 0; c < lf.probabilities.size(); ++c) row.push_back(csv::format_double(lf.probabilities(c)));
    out << csv::join(row) << "\n";
  }
  return out.str();
}

std::string shap_table(const GalaxResults& r, const ShapRecord& rec) {
  std::ostringstream out;
  const LocalFit& lf = r.local_fits[static_cast<std::size_t>(rec.location)];
  out << "location          " << rec.location << "\n";
  out << "prediction        " << label_text(r, rec.prediction) << "\n";
  if (rec.explained_class >= 0)
    out << "explained output  P(class = " << label_text(r, rec.explained_class) << ") = "
        << csv::format_double(rec.explained_output) << "\n";
  else
    out << "explained output  " << csv::format_double(rec.explained_output) << "\n";
  out << "base value        " << csv::format_double(rec.base_value) << "\n";
  out << "model             " << to_string(rec.selected.learner) << " "
      << canonical_json(hyperparameters_to_json(rec.selected.learner, rec.selected.hyper)) << "\n";
  out << "effective n       " << csv::format_double(rec.effective_n) << "\n";
  out << "explanation       " << to_string(lf.explain_mode) << "\n\n";

  std::size_t width = 7;
  for (const auto& c : rec.contributions) width = std::max(width, c.feature.size());
  out << std::left << std::setw(6) << "rank" << std::setw(static_cast<int>(width) + 2) << "feature"
      << std::right << std::setw(24) << "shap" << "\n";
  int rank = 1;
  for (const auto& c : rec.contributions)
    out << std::left << std::setw(6) << rank++ << std::setw(static_cast<int>(width) + 2) << c.feature
        << std::right << std::setw(24) << csv::format_double(c.phi) << "\n";
  return out.str();
}

}  // namespace

std::string shap_svg(const ShapRecord& record) {
  auto esc = [](const std::string& s) {
    std::string o;
    for (char c : s) {
      switch (c) {
        case '&': o += "&amp;"; break;
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '"': o += "&quot;"; break;
        default: o.push_back(c);
      }
    }
    return o;
  };
  auto num = [](double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
  };
  const int bar_h = 22, gap = 6, label_w = 180, chart_w = 420, top = 50, value_w = 90;
  const int rows = static_cast<int>(record.contributions.size());
  const int height = top + rows * (bar_h + gap) + 40;
  const int width = label_w + chart_w + value_w + 20;
  double max_abs = 0.0;
  for (const auto& c : record.contributions) max_abs = std::max(max_abs, std::abs(c.phi));
  if (max_abs == 0.0) max_abs = 1.0;
  const double axis = label_w + chart_w / 2.0;
  const double scale = (chart_w / 2.0 - 4.0) / max_abs;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  svg << "<text x=\"10\" y=\"20\" font-size=\"14\" font-weight=\"bold\">SHAP values at location "
      << record.location << "</text>\n";
  svg << "<text x=\"10\" y=\"38\">base value " << num(record.base_value) << ", explained output "
      << num(record.explained_output) << "</text>\n";
  for (int i = 0; i < rows; ++i) {
    const auto& c = record.contributions[static_cast<std::size_t>(i)];
    const int y = top + i * (bar_h + gap);
    const double len = std::abs(c.phi) * scale;
    const double x = c.phi >= 0 ? axis : axis - len;
    svg << "<text x=\"" << label_w - 8 << "\" y=\"" << y + bar_h * 0.7 << "\" text-anchor=\"end\">"
        << esc(c.feature) << "</text>\n";
    svg << "<rect x=\"" << num(x) << "\" y=\"" << y << "\" width=\"" << num(std::max(len, 0.5))
        << "\" height=\"" << bar_h << "\" fill=\"" << (c.phi >= 0 ? "#d62728" : "#1f77b4") << "\"/>\n";
    svg << "<text x=\"" << label_w + chart_w + 8 << "\" y=\"" << y + bar_h * 0.7 << "\">" << num(c.phi)
        << "</text>\n";
  }
  svg << "<line x1=\"" << axis << "\" y1=\"" << top - 4 << "\" x2=\"" << axis << "\" y2=\""
      << top + rows * (bar_h + gap) << "\" stroke=\"black\"/>\n";
  svg << "</svg>\n";
  return svg.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geographically weighted AutoML with Shapley explanations", "galax"};
  app.require_subcommand(1);
  app.footer(kExitCodes);

  DataOptions fit_data, bw_data;
  ModelOptions fit_model, bw_model;
  std::string out_path = "results.galax";
  auto* fit_cmd = app.add_subcommand("fit", "Fit local models at every location and save an archive");
  fit_data.attach(fit_cmd);
  fit_model.attach(fit_cmd);
  fit_cmd->add_option("--out", out_path, "Output archive (.galax)")->capture_default_str();
  fit_cmd->footer(kExitCodes);

  auto* bw_cmd = app.add_subcommand("bandwidth", "Run the bandwidth selection only; prints a CSV table");
  bw_data.attach(bw_cmd);
  bw_model.attach(bw_cmd);
  bw_cmd->footer(kExitCodes);

  std::string archive;
  bool as_json = false;
  auto* sum_cmd = app.add_subcommand("summary", "Print the report stored in an archive");
  sum_cmd->add_option("archive", archive, "Archive path")->required();
  sum_cmd->add_flag("--json", as_json, "Machine-readable output");

  long long location = -1;
  std::string svg_path;
  auto* exp_cmd = app.add_subcommand("explain", "Print the SHAP record for one location");
  exp_cmd->add_option("archive", archive, "Archive path")->required();
  exp_cmd->add_option("--location", location, "Location index")->required();
  exp_cmd->add_option("--svg", svg_path, "Also write a bar chart to this SVG file");

  std::string what, export_path;
  auto* export_cmd = app.add_subcommand("export", "Write SHAP values, predictions or local fits as CSV");
  export_cmd->add_option("archive", archive, "Archive path")->required();
  export_cmd->add_option("--what", what, "shap | predictions | local-fits")
      ->check(CLI::IsMember({"shap", "predictions", "local-fits"}))
      ->required();
  export_cmd->add_option("--out", export_path, "Output CSV")->required();

  std::string new_data, px = "x", py = "y";
  auto* pred_cmd = app.add_subcommand("predict", "Score new points with the nearest location's model");
  pred_cmd->add_option("archive", archive, "Archive path")->required();
  pred_cmd->add_option("--data", new_data, "CSV with coordinates and the archive's feature columns")->required();
  pred_cmd->add_option("--x", px, "Column holding x / longitude")->capture_default_str();
  pred_cmd->add_option("--y", py, "Column holding y / latitude")->capture_default_str();

  for (auto* sub : {sum_cmd, exp_cmd, export_cmd, pred_cmd}) sub->footer(kExitCodes);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help("", CLI::AppFormatMode::All) : app.help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[E_USAGE]: " << e.what() << "\n";
    return 2;
  }

  try {
    if (fit_cmd->parsed()) {
      const IngestSpec spec = fit_data.spec();
      const Dataset ds = load_dataset(spec);
      const GalaxConfig config = fit_model.config(spec.geodesic);
      err << "fitting " << ds.size() << " locations with " << config.threads << " thread(s)\n";
      const GalaxResults results = fit(ds, config);
      save(results, out_path);
      err << "wrote " << out_path << "\n";
      out << summarize(results).text();
    } else if (bw_cmd->parsed()) {
      const IngestSpec spec = bw_data.spec();
      const Dataset ds = load_dataset(spec);
      GalaxConfig config = bw_model.config(spec.geodesic);
      config.kernel.bandwidth.reset();
      ds.validate(config.automl.min_local_samples);
      config.validate(ds.task);
      const BandwidthResolution res = resolve_bandwidth(ds, config);
      if (res.scan) {
        out << "band,distance,moran_i,expected,variance,z_score,selected\n";
        for (std::size_t b = 0; b < res.scan->bands.size(); ++b) {
          const auto& band = res.scan->bands[b];
          out << b << "," << csv::format_double(band.distance) << "," << csv::format_double(band.moran.I) << ","
              << csv::format_double(band.moran.expected) << "," << csv::format_double(band.moran.variance) << ","
              << csv::format_double(band.moran.z) << ","
              << (band.distance == res.scan->selected_distance ? 1 : 0) << "\n";
        }
        err << "selection rule: " << to_string(res.scan->selection_rule) << "\n";
      } else {
        out << "candidate,bandwidth,objective,selected\n";
        for (std::size_t c = 0; c < res.candidates.size(); ++c) {
          const auto& cand = res.candidates[c];
          out << c << "," << csv::format_double(cand.bandwidth) << ","
              << (cand.objective ? csv::format_double(*cand.objective) : "") << ","
              << (cand.bandwidth == *res.kernel.bandwidth ? 1 : 0) << "\n";
        }
      }
      err << "selected " << to_string(res.kernel.mode) << " bandwidth "
          << csv::format_double(*res.kernel.bandwidth) << " (" << to_string(res.method) << ")\n";
    } else if (sum_cmd->parsed()) {
      const Summary s = summarize(load_archive(archive));
      out << (as_json ? s.to_json().dump(2) + "\n" : s.text());
    } else if (exp_cmd->parsed()) {
      const GalaxResults r = load_archive(archive);
      const ShapRecord rec = shap_for_location(r, static_cast<Eigen::Index>(location));
      out << shap_table(r, rec);
      if (!svg_path.empty()) {
        write_file(svg_path, shap_svg(rec));
        err << "wrote " << svg_path << "\n";
      }
    } else if (export_cmd->parsed()) {
      write_file(export_path, export_csv(load_archive(archive), what));
      err << "wrote " << export_path << "\n";
    } else if (pred_cmd->parsed()) {
      const GalaxResults r = load_archive(archive);
      IngestSpec spec;
      spec.path = new_data;
      spec.x_col = px;
      spec.y_col = py;
      spec.feature_cols = r.feature_names();
      // Targets are not needed for scoring; borrow the x column as a stand-in.
      std::ifstream in(new_data, std::ios::binary);
      if (!in) throw Error(Errc::io, "cannot read " + new_data);
      std::ostringstream buf;
      buf << in.rdbuf();
      std::vector<csv::Row> rows = csv::parse(buf.str());
      if (rows.empty()) throw Error(Errc::invalid_input, "CSV has no header row");
      rows[0].push_back("__target");
      for (std::size_t i = 1; i < rows.size(); ++i) rows[i].push_back("0");
      std::string text;
      for (const auto& row : rows) text += csv::join(row) + "\n";
      spec.target_col = "__target";
      const Dataset ds = parse_csv_dataset(text, spec);
      const SpatialPrediction p = predict(r, ds.coords, ds.X);
      out << prediction_header(r, "row,nearest_location") << "\n";
      for (Eigen::Index i = 0; i < ds.size(); ++i) {
        csv::Row row{std::to_string(i), std::to_string(p.nearest[static_cast<std::size_t>(i)]),
                     label_text(r, p.prediction.value(i))};
        for (Eigen::Index c = 0; c < p.prediction.proba.cols(); ++c)
          row.push_back(csv::format_double(p.prediction.proba(i, c)));
        out << csv::join(row) << "\n";
      }
    }
  } catch (const Error& e) {
    err << "error[" << code_name(e.code()) << "]: " << e.what() << "\n";
    return exit_code(category(e.code()));
  } catch (const std::exception& e) {
    err << "error[E_INTERNAL]: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace galax
