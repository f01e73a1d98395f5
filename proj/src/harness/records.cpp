#include "smoothnest/harness/records.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace smoothnest {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw ConfigError("not a number: '" + text + "'");
  return v;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << text;
  if (!out) throw ConfigError("failed writing file: " + path);
}

Functional functional_from_json(const json& j) {
  try {
    if (j.is_string()) return parse_functional(j.get<std::string>());
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "var") return Functional::value_at_risk(j.at("tau").get<double>());
    if (kind == "cvar") return Functional::conditional_value_at_risk(j.at("tau").get<double>());
    if (kind != "expectation") throw ConfigError("unknown functional kind '" + kind + "'");
    const std::string eta = j.value("eta", std::string("identity"));
    if (eta == "identity") return Functional::identity();
    if (eta == "quadratic") return Functional::quadratic();
    if (eta == "hockey_stick") return Functional::hockey_stick(j.at("z0").get<double>());
    if (eta == "indicator") return Functional::indicator(j.at("z0").get<double>());
    throw ConfigError("unknown eta '" + eta + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed functional: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid functional: ") + e.what());
  }
}

json functional_to_json(const Functional& functional) {
  switch (functional.kind()) {
    case Functional::Kind::ValueAtRisk:
      return {{"kind", "var"}, {"tau", functional.tau()}};
    case Functional::Kind::ConditionalValueAtRisk:
      return {{"kind", "cvar"}, {"tau", functional.tau()}};
    case Functional::Kind::Expectation:
      break;
  }
  const Eta& e = functional.eta();
  if (std::holds_alternative<eta::Quadratic>(e)) return {{"kind", "expectation"}, {"eta", "quadratic"}};
  if (const auto* h = std::get_if<eta::HockeyStick>(&e)) {
    return {{"kind", "expectation"}, {"eta", "hockey_stick"}, {"z0", h->z0}};
  }
  if (const auto* ind = std::get_if<eta::Indicator>(&e)) {
    return {{"kind", "expectation"}, {"eta", "indicator"}, {"z0", ind->z0}};
  }
  if (const auto* s = std::get_if<eta::Smooth>(&e)) return {{"kind", "expectation"}, {"eta", s->label}};
  return {{"kind", "expectation"}, {"eta", "identity"}};
}

Functional parse_functional(const std::string& text) {
  const auto first = text.find_first_not_of(" \t");
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed functional JSON: ") + e.what());
    }
    return functional_from_json(j);
  }
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const bool has_arg = colon != std::string::npos;
  auto arg = [&]() {
    if (!has_arg) throw ConfigError("functional '" + name + "' needs a parameter, e.g. " + name + ":0.95");
    return parse_double(text.substr(colon + 1));
  };
  try {
    if (name == "identity" && !has_arg) return Functional::identity();
    if (name == "quadratic" && !has_arg) return Functional::quadratic();
    if (name == "hockey_stick") return Functional::hockey_stick(arg());
    if (name == "indicator") return Functional::indicator(arg());
    if (name == "var") return Functional::value_at_risk(arg());
    if (name == "cvar") return Functional::conditional_value_at_risk(arg());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid functional: ") + e.what());
  }
  throw ConfigError("unknown functional '" + text +
                    "' (expected identity, quadratic, hockey_stick:Z0, indicator:Z0, var:TAU, cvar:TAU)");
}

namespace {

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

json model_to_json(const KrrModel& model) {
  json weights = json::array();
  for (Eigen::Index i = 0; i < model.weights().size(); ++i) weights.push_back(model.weights()(i));
  return {{"nu", model.spec().nu()},
          {"ell", model.spec().ell()},
          {"lambda", model.lambda()},
          {"train_points", matrix_rows(model.train_points())},
          {"weights", std::move(weights)}};
}

KrrModel model_from_json(const json& j) {
  try {
    const auto& pts = j.at("train_points");
    const auto& w = j.at("weights");
    const auto n = static_cast<Eigen::Index>(pts.size());
    if (n == 0) throw ConfigError("model has no training points");
    const auto d = static_cast<Eigen::Index>(pts.at(0).size());
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = pts.at(static_cast<std::size_t>(i));
      if (static_cast<Eigen::Index>(row.size()) != d) throw ConfigError("ragged train_points in model");
      for (Eigen::Index k = 0; k < d; ++k) x(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    Eigen::VectorXd weights(static_cast<Eigen::Index>(w.size()));
    for (Eigen::Index i = 0; i < weights.size(); ++i) weights(i) = w.at(static_cast<std::size_t>(i)).get<double>();
    return KrrModel(KernelSpec(j.at("nu").get<double>(), j.at("ell").get<double>()), j.at("lambda").get<double>(),
                    std::move(x), std::move(weights));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid model record: ") + e.what());
  }
}

json plan_to_json(const AllocationPlan& plan) {
  json j = {{"n", plan.n},
            {"m", plan.m},
            {"kappa", plan.kappa},
            {"kappa_tilde", plan.kappa_tilde},
            {"n_exponent", plan.n_exponent},
            {"m_exponent", plan.m_exponent},
            {"regime", plan.regime},
            {"margins_defaulted", plan.margins_defaulted}};
  j["lambda"] = plan.lambda ? json(*plan.lambda) : json(nullptr);
  return j;
}

json hyperparams_to_json(const Hyperparams& xi) {
  return {{"lambda", xi.lambda}, {"nu", xi.nu}, {"ell", xi.ell}};
}

json cv_result_to_json(const CvResult& result) {
  json trace = json::array();
  for (const auto& t : result.trace) {
    json row = hyperparams_to_json(t.xi);
    row["score"] = std::isfinite(t.score) ? json(t.score) : json(nullptr);
    if (!t.error.empty()) row["error"] = t.error;
    trace.push_back(std::move(row));
  }
  return {{"best", hyperparams_to_json(result.best)}, {"score", result.score}, {"trace", std::move(trace)}};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    const auto first = cell.find_first_not_of(' ');
    out.push_back(first == std::string::npos ? std::string() : cell.substr(first));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string dataset_csv(const NestedDataset& data) {
  std::ostringstream out;
  out << "scenario_id";
  for (Eigen::Index k = 0; k < data.dim(); ++k) out << ",x_" << (k + 1);
  out << ",y_bar,m\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out << i;
    for (Eigen::Index k = 0; k < data.dim(); ++k) out << ',' << format_double(data.scenarios()(i, k));
    out << ',' << format_double(data.inner_means()(i)) << ',' << data.inner_count() << '\n';
  }
  return out.str();
}

void write_dataset_csv(const std::string& path, const NestedDataset& data) { write_text_file(path, dataset_csv(data)); }

NestedDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty dataset file: " + path);
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header.front() != "scenario_id" || header[header.size() - 2] != "y_bar" ||
      header.back() != "m") {
    throw ConfigError("dataset header must be scenario_id,x_1..x_d,y_bar,m in " + path);
  }
  const std::size_t d = header.size() - 3;
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  long m = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields");
    }
    std::vector<double> x(d);
    for (std::size_t k = 0; k < d; ++k) x[k] = parse_double(cells[k + 1]);
    ys.push_back(parse_double(cells[d + 1]));
    const long row_m = std::stol(cells[d + 2]);
    if (m >= 0 && row_m != m) throw ConfigError(path + ": all rows must share the same m");
    m = row_m;
    xs.push_back(std::move(x));
  }
  if (xs.empty()) throw ConfigError("dataset has no rows: " + path);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(d));
  Eigen::VectorXd y(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = xs[i][k];
    y(static_cast<Eigen::Index>(i)) = ys[i];
  }
  try {
    return NestedDataset(std::move(x), std::move(y), m);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("invalid dataset " + path + ": " + e.what());
  }
}

std::string raw_csv(const std::vector<RawRow>& rows) {
  std::ostringstream out;
  out << kRawHeader << '\n';
  for (const auto& r : rows) {
    out << r.budget << ',' << r.estimator << ',' << r.n << ',' << r.m << ',' << format_double(r.lambda) << ','
        << format_double(r.nu) << ',' << format_double(r.ell) << ',' << r.macro_rep << ','
        << format_double(r.theta_hat) << ',' << format_double(r.theta_true) << ',' << format_double(r.abs_err)
        << '\n';
  }
  return out.str();
}

void write_raw_csv(const std::string& path, const std::vector<RawRow>& rows) { write_text_file(path, raw_csv(rows)); }

std::vector<RawRow> read_raw_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty results file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_csv_line(line) != split_csv_line(kRawHeader)) {
    throw ConfigError("unexpected results header in " + path + " (want " + kRawHeader + ")");
  }
  std::vector<RawRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto c = split_csv_line(line);
    if (c.size() != 11) throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 11 fields");
    try {
      rows.push_back({std::stol(c[0]), c[1], std::stol(c[2]), std::stol(c[3]), parse_double(c[4]),
                      parse_double(c[5]), parse_double(c[6]), std::stol(c[7]), parse_double(c[8]),
                      parse_double(c[9]), parse_double(c[10])});
    } catch (const std::logic_error&) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed integer field");
    }
  }
  return rows;
}

}  // namespace smoothnest
