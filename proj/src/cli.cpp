#include "smoothnest/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "smoothnest/allocation.hpp"
#include "smoothnest/cv.hpp"
#include "smoothnest/errors.hpp"
#include "smoothnest/harness/experiment.hpp"
#include "smoothnest/harness/records.hpp"
#include "smoothnest/harness/scenario_model.hpp"
#include "smoothnest/kernel.hpp"
#include "smoothnest/krr.hpp"

namespace smoothnest {

using nlohmann::json;

namespace {

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> out;
  for (const auto& cell : split_csv_line(text)) out.push_back(parse_double(cell));
  if (out.empty()) throw ConfigError("empty vector '" + text + "'");
  return out;
}

json json_arg(const std::string& text) {
  const auto first = text.find_first_not_of(" \t");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed JSON argument: ") + e.what());
    }
  }
  return read_json_file(text);
}

// Rows of the x_* columns of a CSV file.
Eigen::MatrixXd read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty points file: " + path);
  const auto header = split_csv_line(line);
  std::vector<std::size_t> cols;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k].rfind("x_", 0) == 0) cols.push_back(k);
  }
  if (cols.empty()) throw ConfigError("points file needs x_1..x_d columns: " + path);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw ConfigError("ragged row in " + path);
    std::vector<double> row;
    for (std::size_t k : cols) row.push_back(parse_double(cells[k]));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return x;
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    write_text_file(out_path, text);
  }
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nested simulation with kernel ridge regression", "smoothnest"};
  app.require_subcommand(1);
  app.fallthrough(false);

  // kernel-eval
  auto* kernel_cmd = app.add_subcommand("kernel-eval", "Evaluate the Matern kernel at a displacement");
  double k_nu = 0.5;
  double k_ell = 1.0;
  std::string k_delta;
  kernel_cmd->add_option("--nu", k_nu, "half-integer smoothness")->required();
  kernel_cmd->add_option("--ell", k_ell, "lengthscale");
  kernel_cmd->add_option("--delta", k_delta, "comma-separated displacement x - x'")->required();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit a KRR model to a dataset CSV");
  std::string f_data;
  std::string f_out;
  double f_nu = 2.5;
  double f_ell = 1.0;
  double f_lambda = 0.0;
  fit_cmd->add_option("--data", f_data, "dataset CSV (scenario_id,x_1..x_d,y_bar,m)")->required();
  fit_cmd->add_option("--nu", f_nu, "half-integer smoothness")->required();
  fit_cmd->add_option("--ell", f_ell, "lengthscale");
  fit_cmd->add_option("--lambda", f_lambda, "regularization")->required();
  fit_cmd->add_option("--out", f_out, "model JSON path (default stdout)");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Evaluate a fitted model");
  std::string p_model;
  std::string p_points;
  std::string p_out;
  predict_cmd->add_option("--model", p_model, "model JSON")->required();
  predict_cmd->add_option("--points", p_points, "CSV with x_1..x_d columns")->required();
  predict_cmd->add_option("--out", p_out, "output CSV path (default stdout)");

  // allocate
  auto* alloc_cmd = app.add_subcommand("allocate", "Budget split (n, m, lambda) and rate exponents");
  long a_budget = 0;
  int a_dim = 1;
  double a_nu = 0.5;
  std::string a_functional = "identity";
  std::optional<double> a_alpha;
  std::optional<double> a_beta;
  std::optional<double> a_gamma;
  bool a_standard = false;
  alloc_cmd->add_option("--budget", a_budget, "simulation budget Gamma")->required();
  alloc_cmd->add_option("--dim", a_dim, "scenario dimension d");
  alloc_cmd->add_option("--nu", a_nu, "half-integer smoothness");
  alloc_cmd->add_option("--functional", a_functional, "identity|quadratic|hockey_stick:Z0|indicator:Z0|var:T|cvar:T");
  alloc_cmd->add_option("--alpha", a_alpha, "margin exponent alpha");
  alloc_cmd->add_option("--beta", a_beta, "margin exponent beta");
  alloc_cmd->add_option("--gamma", a_gamma, "margin exponent gamma");
  alloc_cmd->add_flag("--standard", a_standard, "standard-estimator split n ~ Gamma^{2/3}");

  // cv
  auto* cv_cmd = app.add_subcommand("cv", "Leave-one-out hyperparameter search");
  std::string c_data;
  std::string c_functional = "identity";
  int c_evals = 40;
  std::uint64_t c_seed = 1;
  std::string c_space;
  cv_cmd->add_option("--data", c_data, "dataset CSV")->required();
  cv_cmd->add_option("--functional", c_functional, "target functional");
  cv_cmd->add_option("--evals", c_evals, "number of criterion evaluations");
  cv_cmd->add_option("--seed", c_seed, "search seed");
  cv_cmd->add_option("--space", c_space, "JSON {nus, ells, lambda_grid | log10_lambda_min/max}");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a nested dataset from a benchmark problem");
  std::string s_problem;
  long s_n = 0;
  long s_m = 1;
  std::uint64_t s_seed = 1;
  std::string s_out;
  sim_cmd->add_option("--problem", s_problem, "problem record: JSON file or inline object")->required();
  sim_cmd->add_option("--n", s_n, "outer scenarios")->required();
  sim_cmd->add_option("--m", s_m, "inner samples per scenario");
  sim_cmd->add_option("--seed", s_seed, "seed");
  sim_cmd->add_option("--out", s_out, "dataset CSV path (default stdout)");

  // run
  auto* run_cmd = app.add_subcommand("run", "Run an experiment from a config file");
  std::string r_config;
  std::string r_output;
  run_cmd->add_option("--config", r_config, "experiment config JSON")->required();
  run_cmd->add_option("--output-dir", r_output, "override output_dir");

  // report
  auto* report_cmd = app.add_subcommand("report", "Aggregate a raw results CSV");
  std::string rep_in;
  bool rep_slope = false;
  std::string rep_metric = "mae";
  report_cmd->add_option("--in", rep_in, "raw results CSV")->required();
  report_cmd->add_flag("--slope", rep_slope, "print log-log slope fits as JSON");
  report_cmd->add_option("--metric", rep_metric, "mae or rmse")->check(CLI::IsMember({"mae", "rmse"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (kernel_cmd->parsed()) {
      const auto delta = parse_vector(k_delta);
      const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(delta.data(), static_cast<Eigen::Index>(delta.size()));
      const double v = eval_kernel(KernelSpec(k_nu, k_ell), d);
      out << json({{"nu", k_nu}, {"ell", k_ell}, {"value", v}}).dump() << "\n";
    } else if (fit_cmd->parsed()) {
      const NestedDataset data = read_dataset_csv(f_data);
      const KrrModel model = fit(KernelSpec(f_nu, f_ell), data, f_lambda);
      emit(model_to_json(model).dump() + "\n", f_out, out);
    } else if (predict_cmd->parsed()) {
      const KrrModel model = model_from_json(read_json_file(p_model));
      const Eigen::MatrixXd xs = read_points_csv(p_points);
      const Eigen::VectorXd y = predict_batch(model, xs);
      std::ostringstream csv;
      csv << "index,prediction\n";
      for (Eigen::Index i = 0; i < y.size(); ++i) csv << i << ',' << format_double(y(i)) << '\n';
      emit(csv.str(), p_out, out);
    } else if (alloc_cmd->parsed()) {
      AllocationPlan p;
      if (a_standard) {
        p = plan_standard(a_budget);
      } else {
        std::optional<MarginParams> margins;
        if (a_alpha || a_beta || a_gamma) {
          margins = MarginParams{a_alpha.value_or(1.0), a_beta.value_or(1.0), a_gamma.value_or(1.0)};
        }
        p = plan(a_budget, a_dim, a_nu, parse_functional(a_functional), margins);
      }
      out << plan_to_json(p).dump(2) << "\n";
    } else if (cv_cmd->parsed()) {
      const NestedDataset data = read_dataset_csv(c_data);
      SearchSpace space = SearchSpace::for_dimension(static_cast<int>(data.dim()));
      if (!c_space.empty()) {
        const json s = json_arg(c_space);
        if (s.contains("nus")) space.nus = s.at("nus").get<std::vector<double>>();
        if (s.contains("ells")) space.ells = s.at("ells").get<std::vector<double>>();
        if (s.contains("lambda_grid")) space.lambda_grid = s.at("lambda_grid").get<std::vector<double>>();
        space.log10_lambda_min = s.value("log10_lambda_min", space.log10_lambda_min);
        space.log10_lambda_max = s.value("log10_lambda_max", space.log10_lambda_max);
      }
      const CvResult result = search(parse_functional(c_functional), data, space, c_evals, c_seed);
      out << cv_result_to_json(result).dump(2) << "\n";
    } else if (sim_cmd->parsed()) {
      const auto model = make_model(json_arg(s_problem));
      Rng rng = derive_stream(s_seed, {static_cast<std::uint64_t>(s_n), static_cast<std::uint64_t>(s_m)});
      const NestedDataset data = model->simulate(s_n, s_m, rng);
      emit(dataset_csv(data), s_out, out);
    } else if (run_cmd->parsed()) {
      json cfg_json = read_json_file(r_config);
      if (!r_output.empty()) cfg_json["output_dir"] = r_output;
      const ExperimentConfig config = ExperimentConfig::from_json(cfg_json);
      const MetricReport report = run_experiment(config);
      out << summary_json(report, config).dump(2) << "\n";
    } else if (report_cmd->parsed()) {
      const auto rows = read_raw_csv(rep_in);
      const auto cells = aggregate_rows(rows);
      if (rep_slope) {
        json j = json::object();
        for (const auto& [estimator, fit] : fit_slopes(cells, rep_metric == "rmse")) j[estimator] = slope_to_json(fit);
        out << json({{"metric", rep_metric}, {"slopes", j}}).dump(2) << "\n";
      } else {
        out << aggregates_csv(cells);
      }
    }
  } catch (const SearchFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace smoothnest
