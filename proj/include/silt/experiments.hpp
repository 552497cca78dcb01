#pragma once

// Experiment runner behind the silt CLI. Each experiment produces a JSON
// summary and a CSV detail table; both carry the seed and the config hash.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "silt/chaos.hpp"
#include "silt/checks.hpp"
#include "silt/clark.hpp"
#include "silt/config.hpp"
#include "silt/local_time.hpp"
#include "silt/sampler.hpp"
#include "silt/simplex.hpp"

namespace silt {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

inline Json to_json(const MCEstimate& e) {
  return Json{{"mean", e.mean},
              {"stderr", e.std_error},
              {"n", e.n_samples},
              {"rejected", e.n_rejected},
              {"seed", e.seed}};
}

/// CSV table; seed and config_hash columns are appended on output.
class Table {
 public:
  explicit Table(std::vector<std::string> columns = {}) : columns_(std::move(columns)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != columns_.size()) throw Error("table row has " + std::to_string(row.size()) + " cells, expected " + std::to_string(columns_.size()));
    rows_.push_back(std::move(row));
  }
  std::size_t size() const { return rows_.size(); }

  std::string csv(std::uint64_t seed, const std::string& hash) const {
    std::ostringstream os;
    for (const auto& c : columns_) os << c << ',';
    os << "seed,config_hash\n";
    for (const auto& r : rows_) {
      for (const auto& c : r) os << c << ',';
      os << seed << ',' << hash << '\n';
    }
    return os.str();
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string cell(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
inline std::string cell(std::size_t x) { return std::to_string(x); }
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(const std::string& s) { return s; }
inline std::string cell(const char* s) { return s; }

struct ExperimentOutput {
  Json summary;
  Table detail;
  int exit_code = 0;

  std::string summary_text() const { return summary.dump(2) + "\n"; }
  std::string detail_text() const {
    return detail.csv(summary.at("seed").get<std::uint64_t>(), summary.at("config_hash").get<std::string>());
  }
};

namespace detail {

struct Outcome {
  Json results = Json::object();
  Table detail;
  bool warning = false;  // integrability warning on some estimate
  bool failed = false;   // a deterministic check did not hold
};

inline void watch(Outcome& o, const MCEstimate& e) { o.warning = o.warning || e.integrability_warning(); }

inline ShardPlan plan_of(const ExperimentConfig& c) { return ShardPlan{c.shards, c.threads}; }

inline std::vector<double> eps_or(const ExperimentConfig& c, std::vector<double> fallback) {
  return c.eps.empty() ? fallback : c.eps;
}

inline std::vector<std::size_t> grids_for(const ExperimentConfig& c, std::size_t stages) {
  if (!c.n_schedule.empty()) {
    if (c.n_schedule.size() != stages) throw InputError("n_schedule needs one grid size per eps value");
    return c.n_schedule;
  }
  return std::vector<std::size_t>(stages, c.n);
}

inline Json sweep_json(const SweepReport& r) {
  return Json{{"cases", r.cases}, {"failures", r.failures}, {"worst_violation", r.worst}, {"passed", r.passed()}};
}

inline Outcome run_gram_checks(const ExperimentConfig& c) {
  Outcome o;
  o.detail = Table({"check", "cases", "failures", "worst_violation"});
  const std::pair<const char*, SweepReport> sweeps[] = {
      {"cavalieri", cavalieri_sweep(100, c.seed)},
      {"indicator_lower_bound", indicator_bound_sweep(1000, c.seed)},
      {"multiplication_bound", multiplication_bound_sweep(200, c.seed)},
  };
  for (const auto& [name, r] : sweeps) {
    o.results[name] = sweep_json(r);
    o.detail.add({name, cell(r.cases), cell(r.failures), cell(r.worst)});
    o.failed = o.failed || !r.passed();
  }
  const std::vector<std::vector<double>> partitions = {{}, {0.5}, {0.25, 0.5, 0.75}};
  Json bridges = Json::array();
  for (const auto& part : partitions) {
    const CovariancePair cp = bridge_covariance_check(part, 128);
    const double diff = (cp.cov_a - cp.cov_b).cwiseAbs().maxCoeff();
    const bool ok = diff <= 1e-12;
    bridges.push_back(Json{{"partition", part}, {"max_abs_diff", diff}, {"passed", ok}});
    o.detail.add({"bridge_covariance_" + std::to_string(part.size()), "1", ok ? "0" : "1", cell(diff - 1e-12)});
    o.failed = o.failed || !ok;
  }
  o.results["bridge_covariance"] = bridges;
  return o;
}

inline Outcome run_dyson(const ExperimentConfig& c) {
  Outcome o;
  const double closed = dyson_closed_form(c.k, 0.0, 1.0);
  const MCEstimate mc = mc_simplex_integrate(inverse_sqrt_gaps, c.k, 0.0, 1.0, c.n_mc, c.seed, plan_of(c));
  watch(o, mc);
  o.results = Json{{"k", c.k},
                   {"closed_form", closed},
                   {"mc", to_json(mc)},
                   {"relative_error", std::abs(mc.mean - closed) / closed},
                   {"z", mc.std_error > 0 ? std::abs(mc.mean - closed) / mc.std_error : 0.0}};
  o.detail = Table({"k", "closed_form", "mc_mean", "mc_stderr"});
  o.detail.add({cell(c.k), cell(closed), cell(mc.mean), cell(mc.std_error)});
  return o;
}

inline Outcome run_mean(const ExperimentConfig& c) {
  Outcome o;
  const OperatorSpec A = parse_operator(c.op, c.n);
  o.detail = Table({"method", "eps", "grid_n", "mean", "stderr"});
  o.results["operator"] = to_string(A);
  o.results["k"] = c.k;
  if (std::holds_alternative<Identity>(A)) {
    const double closed = mean_T_wiener(c.k);
    o.results["closed_form"] = closed;
    o.detail.add({"closed_form", "0", "", cell(closed), "0"});
  }
  const MCEstimate q = std::holds_alternative<Multiplication>(A)
                           ? mean_T_mult(std::get<Multiplication>(A).phi, c.k, c.n_mc, c.seed, plan_of(c))
                           : mean_T_eps(A, c.k, 0.0, c.n_mc, c.seed, plan_of(c));
  watch(o, q);
  o.results["quadrature"] = to_json(q);
  o.detail.add({"quadrature", "0", "", cell(q.mean), cell(q.std_error)});
  if (!c.eps.empty()) {
    const EpsSchedule sched(c.eps);
    const PathMeanReport r = path_mean_T_eps(A, c.k, sched, c.n, c.n_paths, c.seed, plan_of(c));
    Json per = Json::array();
    for (std::size_t i = 0; i < r.eps.size(); ++i) {
      per.push_back(Json{{"eps", r.eps[i]}, {"estimate", to_json(r.per_eps[i])}});
      o.detail.add({"path", cell(r.eps[i]), cell(c.n), cell(r.per_eps[i].mean), cell(r.per_eps[i].std_error)});
    }
    o.results["path"] = Json{{"grid_n", c.n}, {"per_eps", per}, {"extrapolated", to_json(r.extrapolated)}};
    o.detail.add({"path_extrapolated", "0", cell(c.n), cell(r.extrapolated.mean), cell(r.extrapolated.std_error)});
  }
  return o;
}

inline Outcome run_moments(const ExperimentConfig& c) {
  Outcome o;
  const OperatorSpec A = parse_operator(c.op, c.n);
  const std::size_t m = static_cast<std::size_t>(2 * c.p);
  o.results["operator"] = to_string(A);
  o.results["k"] = c.k;
  o.results["p"] = c.p;
  if (c.eps.empty() || c.eps.size() == m) {
    const std::vector<double> eps = c.eps.empty() ? std::vector<double>(m, 0.0) : c.eps;
    const MCEstimate e = moment_smoothed(A, c.k, c.p, eps, c.n_mc, c.seed, plan_of(c));
    watch(o, e);
    o.results["eps"] = eps;
    o.results["moment"] = to_json(e);
    o.detail = Table({"quantity", "eps", "mean", "stderr"});
    std::string joined;
    for (std::size_t i = 0; i < eps.size(); ++i) joined += (i ? ";" : "") + cell(eps[i]);
    o.detail.add({"moment", joined, cell(e.mean), cell(e.std_error)});
    return o;
  }
  // A schedule of another length: Cauchy differences E (T_{e_i} - T_{e_{i+1}})^2 for p = 1.
  if (c.p != 1) throw InputError("moments: eps needs 2p = " + std::to_string(m) + " values, or a schedule with p = 1");
  const EpsSchedule sched(c.eps);
  if (sched.size() < 2) throw InputError("moments: a Cauchy schedule needs at least two eps values");
  Json rows = Json::array();
  o.detail = Table({"eps1", "eps2", "mean", "stderr"});
  for (std::size_t i = 0; i + 1 < sched.size(); ++i) {
    const double e1 = sched.values()[i], e2 = sched.values()[i + 1];
    const MCEstimate d = cauchy_sq_difference(A, c.k, e1, e2, c.n_mc, c.seed, plan_of(c));
    watch(o, d);
    rows.push_back(Json{{"eps1", e1}, {"eps2", e2}, {"sq_difference", to_json(d)}});
    o.detail.add({cell(e1), cell(e2), cell(d.mean), cell(d.std_error)});
  }
  o.results["cauchy"] = rows;
  return o;
}

inline Outcome run_chaos_series(const ExperimentConfig& c) {
  Outcome o;
  const ChaosSeriesReport r = second_moment_series(c.k, c.n_terms, c.n_mc, c.seed, plan_of(c));
  watch(o, r.direct);
  o.detail = Table({"n", "term", "stderr", "cumsum", "n52_term"});
  for (const auto& t : r.terms)
    o.detail.add({cell(t.n), cell(t.value), cell(t.std_error), cell(t.cumulative), cell(t.tail_diagnostic)});
  const double partial = r.terms.back().cumulative;
  bool stirling = true;
  for (const auto& row : stirling_ratio_check(200)) stirling = stirling && row.holds;
  o.results = Json{{"k", c.k},
                   {"n_terms", c.n_terms},
                   {"n_pairs", r.n_samples},
                   {"mean_squared", r.terms.front().value},
                   {"partial_sum", partial},
                   {"direct", to_json(r.direct)},
                   {"direct_minus_series", to_json(r.direct_minus_series)},
                   {"relative_difference", std::abs(r.direct.mean - partial) / r.direct.mean},
                   {"weighted_partial_sum", r.terms.back().weighted_partial},
                   {"stirling_bound_holds_to_200", stirling}};
  return o;
}

inline Outcome run_fw(const ExperimentConfig& c) {
  Outcome o;
  const OperatorSpec A = parse_operator(c.op, c.n);
  const GridFunction h = parse_test_function(c.h, c.n);
  const MCEstimate quad = fw_transform_quad(A, c.k, Function(h), c.n_mc, c.seed, plan_of(c));
  const MCEstimate mean = fw_transform_quad(A, c.k, Function(GridFunction(std::vector<double>(c.n, 0.0))), c.n_mc,
                                            c.seed, plan_of(c));
  watch(o, quad);
  watch(o, mean);
  o.results["operator"] = to_string(A);
  o.results["k"] = c.k;
  o.results["h"] = c.h;
  o.results["transform"] = to_json(quad);
  o.results["mean"] = to_json(mean);
  o.detail = Table({"method", "eps", "mean", "stderr"});
  o.detail.add({"quadrature", "0", cell(quad.mean), cell(quad.std_error)});
  if (!c.eps.empty()) {
    const EpsSchedule sched(c.eps);
    const PathTransformReport r = fw_transform_mc(A, c.k, h, sched, c.n, c.n_paths, c.seed, plan_of(c));
    Json per = Json::array();
    for (std::size_t i = 0; i < r.eps.size(); ++i) {
      per.push_back(Json{{"eps", r.eps[i]}, {"estimate", to_json(r.per_eps[i])}});
      o.detail.add({"path", cell(r.eps[i]), cell(r.per_eps[i].mean), cell(r.per_eps[i].std_error)});
    }
    o.detail.add({"path_extrapolated", "0", cell(r.extrapolated.mean), cell(r.extrapolated.std_error)});
    o.results["path"] = Json{{"grid_n", c.n},
                             {"per_eps", per},
                             {"extrapolated", to_json(r.extrapolated)},
                             {"exponential_mean", to_json(r.exponential_mean)},
                             {"z", z_score(quad, r.extrapolated)}};
  }
  return o;
}

inline Outcome run_clark_delta(const ExperimentConfig& c) {
  Outcome o;
  const SweepReport sweep = clark_delta_sweep(20, c.seed);
  o.failed = !sweep.passed();
  const GridFunction h = parse_test_function(c.h, c.n);
  const TwoSides at = clark_delta_fw_check(Function(h), c.s, c.t);
  o.results["sweep"] = sweep_json(sweep);
  o.results["check"] = Json{{"h", c.h}, {"s", c.s}, {"t", c.t}, {"lhs", at.lhs}, {"rhs", at.rhs}};
  o.results["mean_eps0"] = 1.0 / std::sqrt(kTwoPi * (c.t - c.s));
  const auto eps = eps_or(c, {0.1, 0.05, 0.02});
  const auto grids = c.n_schedule.empty() && c.eps.empty() ? std::vector<std::size_t>{128, 256, 512}
                                                           : grids_for(c, eps.size());
  o.detail = Table({"epsilon", "grid_n", "residual", "stderr", "ablation", "ablation_stderr", "variance"});
  Json rows = Json::array();
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const ResidualEstimate r = clark_delta_l2_residual(c.s, c.t, eps[i], grids[i], c.n_paths, c.seed, plan_of(c));
    rows.push_back(Json{{"eps", r.eps},
                        {"grid_n", r.grid_n},
                        {"residual", to_json(r.residual)},
                        {"ablation", to_json(r.ablation)},
                        {"variance", r.variance}});
    o.detail.add({cell(r.eps), cell(r.grid_n), cell(r.residual.mean), cell(r.residual.std_error),
                  cell(r.ablation.mean), cell(r.ablation.std_error), cell(r.variance)});
  }
  o.results["residuals"] = rows;
  return o;
}

inline Outcome run_clark_wiener(const ExperimentConfig& c) {
  Outcome o;
  const auto eps = eps_or(c, {0.1, 0.05, 0.02});
  const auto grids = c.n_schedule.empty() && c.eps.empty() ? std::vector<std::size_t>{256, 384, 512}
                                                           : grids_for(c, eps.size());
  std::vector<ResidualStage> stages;
  for (std::size_t i = 0; i < eps.size(); ++i) stages.push_back({eps[i], grids[i]});
  const auto rows = clark_wiener_l2_residual(c.k, stages, c.n_paths, c.seed, plan_of(c));
  o.detail = Table({"epsilon", "grid_n", "residual", "stderr", "ablation", "ablation_stderr", "variance"});
  Json js = Json::array();
  for (const auto& r : rows) {
    js.push_back(Json{{"eps", r.eps},
                      {"grid_n", r.grid_n},
                      {"mean_eps", mean_T_wiener_smoothed(r.eps)},
                      {"residual", to_json(r.residual)},
                      {"ablation", to_json(r.ablation)},
                      {"variance", r.variance},
                      {"residual_over_variance", r.residual.mean / r.variance}});
    o.detail.add({cell(r.eps), cell(r.grid_n), cell(r.residual.mean), cell(r.residual.std_error),
                  cell(r.ablation.mean), cell(r.ablation.std_error), cell(r.variance)});
  }
  o.results["k"] = c.k;
  o.results["mean_limit"] = mean_T_wiener(c.k);
  o.results["stages"] = js;
  return o;
}

inline Outcome run_clark_general(const ExperimentConfig& c) {
  Outcome o;
  const OperatorSpec A = parse_operator(c.op, c.n);
  const GridFunction h = parse_test_function(c.h, c.n);
  const TransformCheck r = clark_general_fw_check(A, c.k, Function(h), c.n_mc, c.seed, plan_of(c));
  watch(o, r.lhs);
  watch(o, r.rhs);
  o.results = Json{{"operator", to_string(A)},
                   {"k", c.k},
                   {"h", c.h},
                   {"lhs", to_json(r.lhs)},
                   {"rhs", to_json(r.rhs)},
                   {"z", z_score(r.lhs, r.rhs)}};
  o.detail = Table({"side", "mean", "stderr"});
  o.detail.add({"transform", cell(r.lhs.mean), cell(r.lhs.std_error)});
  o.detail.add({"clark", cell(r.rhs.mean), cell(r.rhs.std_error)});
  return o;
}

inline Json config_json(const ExperimentConfig& c) {
  return Json{{"experiment", c.experiment}, {"op", c.op},         {"k", c.k},
              {"p", c.p},                   {"eps", c.eps},       {"n", c.n},
              {"n_schedule", c.n_schedule}, {"n_paths", c.n_paths}, {"n_mc", c.n_mc},
              {"seed", c.seed},             {"h", c.h},           {"s", c.s},
              {"t", c.t},                   {"n_terms", c.n_terms}, {"shards", c.shards}};
}

}  // namespace detail

/// Runs one experiment. Errors propagate as exceptions; an integrability
/// warning or a failed deterministic check sets exit_code 1.
inline ExperimentOutput run_experiment(const ExperimentConfig& c) {
  finalize_config(c);
  detail::Outcome o;
  const std::string& e = c.experiment;
  if (e == "gram-checks") o = detail::run_gram_checks(c);
  else if (e == "dyson") o = detail::run_dyson(c);
  else if (e == "mean") o = detail::run_mean(c);
  else if (e == "moments") o = detail::run_moments(c);
  else if (e == "chaos-series") o = detail::run_chaos_series(c);
  else if (e == "fw") o = detail::run_fw(c);
  else if (e == "clark-delta") o = detail::run_clark_delta(c);
  else if (e == "clark-wiener") o = detail::run_clark_wiener(c);
  else if (e == "clark-general") o = detail::run_clark_general(c);
  else throw InputError("unknown experiment '" + e + "'");

  ExperimentOutput out;
  const std::string status = o.warning ? "integrability_warning" : o.failed ? "check_failed" : "ok";
  out.summary = Json{{"schema_version", kSchemaVersion},
                     {"experiment", e},
                     {"config", detail::config_json(c)},
                     {"config_hash", config_hash(c)},
                     {"seed", c.seed},
                     {"shards", c.shards},
                     {"results", o.results},
                     {"status", status}};
  out.detail = std::move(o.detail);
  out.exit_code = status == "ok" ? 0 : 1;
  return out;
}

/// Writes <prefix>.summary.json and <prefix>.detail.csv.
inline void write_outputs(const ExperimentOutput& out, const std::string& prefix) {
  auto put = [](const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
    if (!f) throw Error("write failed for " + path);
  };
  put(prefix + ".summary.json", out.summary_text());
  put(prefix + ".detail.csv", out.detail_text());
}

}  // namespace silt
