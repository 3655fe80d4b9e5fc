#include "oed/json_io.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

namespace oed {

namespace {

using nlohmann::json;

json number_or_marker(double v) {
  // JSON has no infinity literal; use a string marker the way the tables do.
  if (std::isinf(v)) return json(v > 0 ? "Inf" : "-Inf");
  return json(v);
}

}  // namespace

std::string design_json(const IntegralDesign& design, const Criterion& c,
                        const SelectReport& report) {
  json j;
  j["counts"] = design.counts;
  j["k"] = design.k;
  j["b"] = design.b;
  std::string crit = criterion_letter(c.kind);
  if (c.is_bayes()) crit = "bayes-" + crit;
  j["criterion"] = crit;
  j["objective"] = number_or_marker(report.objective);
  j["relaxation_objective"] = number_or_marker(report.relaxation_objective);
  j["ratio"] = number_or_marker(report.ratio);
  j["lambda_min_whitened"] = report.lambda_min_whitened;
  j["mode"] = report.mode == RoundMode::Theory ? "theory" : "practical";
  j["alpha"] = report.alpha;
  return j.dump(2) + "\n";
}

std::string fractional_json(const FractionalDesign& pi) {
  json j;
  j["weights"] = std::vector<double>(pi.weights.data(),
                                     pi.weights.data() + pi.weights.size());
  j["k"] = pi.k;
  j["b"] = pi.b;
  return j.dump(2) + "\n";
}

FractionalDesign parse_fractional_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw input_error(std::string("invalid design JSON: ") + e.what());
  }
  if (!j.contains("weights") || !j.contains("k") || !j.contains("b")) {
    throw input_error("design JSON must contain weights, k, b");
  }
  const auto w = j["weights"].get<std::vector<double>>();
  FractionalDesign pi;
  pi.weights = Eigen::Map<const Vector>(w.data(),
                                        static_cast<Eigen::Index>(w.size()));
  pi.k = j["k"].get<int>();
  pi.b = j["b"].get<int>();
  pi.validate();
  return pi;
}

}  // namespace oed
