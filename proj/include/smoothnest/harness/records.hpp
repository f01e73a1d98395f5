#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "smoothnest/allocation.hpp"
#include "smoothnest/cv.hpp"
#include "smoothnest/functionals.hpp"
#include "smoothnest/krr.hpp"

namespace smoothnest {

/// Unreadable file, malformed record or invalid configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal form that parses back to the same double; "nan" and
/// "inf"/"-inf" for the special values.
std::string format_double(double v);
double parse_double(const std::string& text);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// {"kind": "expectation", "eta": "identity" | "quadratic" | "hockey_stick" | "indicator", "z0": ...}
/// | {"kind": "var", "tau": ...} | {"kind": "cvar", "tau": ...}
Functional functional_from_json(const nlohmann::json& j);
nlohmann::json functional_to_json(const Functional& functional);

/// identity | quadratic | hockey_stick:Z0 | indicator:Z0 | var:TAU | cvar:TAU,
/// or a JSON object as above.
Functional parse_functional(const std::string& text);

nlohmann::json model_to_json(const KrrModel& model);
KrrModel model_from_json(const nlohmann::json& j);

nlohmann::json plan_to_json(const AllocationPlan& plan);
nlohmann::json hyperparams_to_json(const Hyperparams& xi);
nlohmann::json cv_result_to_json(const CvResult& result);

/// Header `scenario_id,x_1,...,x_d,y_bar,m`; every row must carry the same m.
std::string dataset_csv(const NestedDataset& data);
void write_dataset_csv(const std::string& path, const NestedDataset& data);
NestedDataset read_dataset_csv(const std::string& path);

/// One macro-replication of one (budget, estimator, allocation) cell.
struct RawRow {
  long budget;
  std::string estimator;
  long n;
  long m;
  double lambda;  // NaN for the standard estimator
  double nu;      // NaN for the standard estimator
  double ell;     // NaN for the standard estimator
  long macro_rep;
  double theta_hat;
  double theta_true;
  double abs_err;
};

inline const char* const kRawHeader = "budget,estimator,n,m,lambda,nu,ell,macro_rep,theta_hat,theta_true,abs_err";

std::string raw_csv(const std::vector<RawRow>& rows);
void write_raw_csv(const std::string& path, const std::vector<RawRow>& rows);
std::vector<RawRow> read_raw_csv(const std::string& path);

/// Splits on commas; no quoting is used by any file written here.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace smoothnest
