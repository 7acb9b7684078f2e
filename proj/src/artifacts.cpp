#include "candlekit/artifacts.hpp"

#include <fstream>

namespace candlekit {

using nlohmann::json;

namespace {

void check_schema(const json& j, std::string_view want) {
  if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string()) {
    fail(ErrorKind::ArtifactMismatch, "artifact has no schema tag");
  }
  const auto got = j["schema"].get<std::string>();
  if (got != want) {
    fail(ErrorKind::ArtifactMismatch,
         "artifact schema is '" + got + "', expected '" + std::string(want) + "'");
  }
}

std::array<double, 3> read_lambda(const json& j) {
  const auto& l = j.at("lambda");
  if (!l.is_array() || l.size() != 3) fail(ErrorKind::Validation, "lambda must hold three numbers");
  return {l[0].get<double>(), l[1].get<double>(), l[2].get<double>()};
}

WeightProvenance parse_provenance(const std::string& s) {
  for (const auto p : {WeightProvenance::Published, WeightProvenance::Calibrated,
                       WeightProvenance::Manual}) {
    if (to_string(p) == s) return p;
  }
  fail(ErrorKind::Validation, "unknown weight provenance '" + s + "'");
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, std::string("malformed artifact: ") + e.what());
  }
}

}  // namespace

json weights_to_json(const CalibratedWeights& cw) {
  const auto& c = cw.config;
  return json{
      {"schema", kWeightsSchema},
      {"k", cw.weights.k},
      {"N", c.n_assets},
      {"lambda", cw.weights.as_array()},
      {"provenance", to_string(cw.weights.provenance)},
      {"rho_draws", c.rho_draws},
      {"paths_per_rho", c.paths_per_rho},
      {"m", c.m},
      {"seed", c.seed},
      {"avg_risk", cw.avg_risk},
      {"mc_se", cw.mc_se},
      {"condition_number", cw.condition_number},
  };
}

CalibratedWeights weights_from_json(const json& j) {
  check_schema(j, kWeightsSchema);
  return guarded([&] {
    CalibratedWeights cw;
    const auto l = read_lambda(j);
    cw.weights = {l[0], l[1], l[2], j.at("k").get<int>(),
                  parse_provenance(j.value("provenance", std::string("calibrated")))};
    if (!cw.weights.finite()) fail(ErrorKind::Validation, "non-finite weights in artifact");
    cw.config.k = cw.weights.k;
    cw.config.n_assets = j.at("N").get<int>();
    cw.config.rho_draws = j.at("rho_draws").get<int>();
    cw.config.paths_per_rho = j.at("paths_per_rho").get<int>();
    cw.config.m = j.at("m").get<int>();
    cw.config.seed = j.at("seed").get<std::uint64_t>();
    cw.avg_risk = j.at("avg_risk").get<double>();
    cw.mc_se = j.at("mc_se").get<double>();
    cw.condition_number = j.value("condition_number", 0.0);
    return cw;
  });
}

json critvals_to_json(const CriticalValues& cv) {
  return json{
      {"schema", kCritvalsSchema},
      {"k", cv.k},
      {"alpha", cv.alpha},
      {"method", to_string(cv.method)},
      {"lambda", cv.lambda},
      {"b_minus", cv.b_minus},
      {"b_plus", cv.b_plus},
      {"source", cv.analytic() ? "analytic-t" : "simulated"},
      {"mc_reps", cv.mc_reps},
      {"m", cv.m},
      {"seed", cv.seed},
      {"discarded", cv.discarded},
  };
}

CriticalValues critvals_from_json(const json& j) {
  check_schema(j, kCritvalsSchema);
  return guarded([&] {
    CriticalValues cv;
    cv.k = j.at("k").get<int>();
    cv.alpha = j.at("alpha").get<double>();
    cv.method = parse_test_method(j.at("method").get<std::string>());
    cv.lambda = read_lambda(j);
    cv.b_minus = j.at("b_minus").get<double>();
    cv.b_plus = j.at("b_plus").get<double>();
    cv.mc_reps = j.at("mc_reps").get<int>();
    cv.m = j.at("m").get<int>();
    cv.seed = j.at("seed").get<std::uint64_t>();
    cv.discarded = j.value("discarded", std::uint64_t{0});
    if (!(cv.b_minus < cv.b_plus)) fail(ErrorKind::Validation, "artifact needs b_minus < b_plus");
    return cv;
  });
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "write to '" + path + "' failed");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, "'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace candlekit
