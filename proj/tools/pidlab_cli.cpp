// pidlab command-line tool: convert annotations to PID values, score
// agreement, decompose a joint, cross-check the solver, sample gates.
//
// Exit codes: 0 success, 1 solver non-convergence or failed oracle check,
// 2 input or configuration error. Errors go to stderr as
// {"error": {"code": ..., "message": ...}}. Reports are written through a
// temporary file and renamed, so a failed run leaves no output behind.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pidlab/pidlab.hpp"

namespace fs = std::filesystem;
using namespace pidlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitInput = 2;

struct Common {
  std::vector<std::string> inputs;
  std::string schema;
  std::string format;  // empty: from file extension
  std::string label_space;
  std::string out;
};

struct Solver {
  double tol_objective = SolverConfig{}.tol_objective;
  double tol_feasibility = SolverConfig{}.tol_feasibility;
  std::size_t max_iterations = SolverConfig{}.max_iterations;
  std::string step_rule = "line-search";

  SolverConfig config() const {
    SolverConfig cfg;
    cfg.tol_objective = tol_objective;
    cfg.tol_feasibility = tol_feasibility;
    cfg.max_iterations = max_iterations;
    if (step_rule == "line-search") {
      cfg.step_rule = StepRule::line_search;
    } else if (step_rule == "diminishing") {
      cfg.step_rule = StepRule::diminishing;
    } else {
      throw Error(ErrorCode::unknown_value, "unknown step rule '" + step_rule + "'");
    }
    cfg.validate();
    return cfg;
  }
};

void add_solver_flags(CLI::App* cmd, Solver& s) {
  cmd->add_option("--tol-objective", s.tol_objective, "Objective tolerance in bits")->capture_default_str();
  cmd->add_option("--tol-feasibility", s.tol_feasibility, "Marginal residual tolerance")->capture_default_str();
  cmd->add_option("--max-iter", s.max_iterations, "Iteration limit")->capture_default_str();
  cmd->add_option("--step-rule", s.step_rule, "line-search or diminishing")->capture_default_str();
}

std::string read_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::input_not_found, "input not found: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::input_not_found, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json parse_json(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::schema, where + ": " + e.what());
  }
}

/// Inline JSON when the argument starts with '{', otherwise a file path.
LabelSpace load_label_space(const std::string& arg, Json& echo) {
  if (arg.empty()) throw Error(ErrorCode::invalid_argument, "--label-space is required for this schema");
  const auto first = arg.find_first_not_of(" \t\r\n");
  const bool inline_json = first != std::string::npos && arg[first] == '{';
  const Json j = parse_json(inline_json ? arg : read_file(arg), "label space");
  auto space = build_label_space(label_space_config_from_json(j));
  echo = to_json(space);
  return space;
}

Format input_format(const std::string& requested, const std::string& path) {
  if (!requested.empty()) return format_from_string(requested);
  return fs::path(path).extension() == ".json" ? Format::json : Format::csv;
}

template <class Parse>
auto read_records(const Common& c, Parse parse, std::vector<std::string>& warnings) {
  if (c.inputs.empty()) throw Error(ErrorCode::invalid_argument, "at least one --input is required");
  decltype(parse(std::declval<std::istream&>(), Format::csv).records) all;
  for (const auto& path : c.inputs) {
    std::istringstream in(read_file(path));
    auto parsed = parse(in, input_format(c.format, path));
    for (auto& w : parsed.warnings) warnings.push_back(path + ": " + w);
    all.insert(all.end(), parsed.records.begin(), parsed.records.end());
  }
  return all;
}

void write_output(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  const fs::path target(out);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::invalid_argument, "cannot write " + out);
    f << text;
    if (!f.flush()) throw Error(ErrorCode::invalid_argument, "cannot write " + out);
  }
  fs::rename(tmp, target);
}

Json report_header(const std::string& command) {
  return Json{{"tool", "pidlab"}, {"version", std::string(kVersion)}, {"command", command}};
}

Json alpha_entry(const RatingsMatrix& m) { return to_json(krippendorff_alpha(m)); }

/// Agreement and confidence blocks for each label schema.
struct Scores {
  Json agreement = Json::object();
  Json confidence = Json::object();
};

Scores score_partial(const std::vector<PartialRecord>& records, const LabelSpace& space, AlphaMetric metric) {
  Scores out;
  const std::pair<const char*, Condition> measures[] = {
      {"y1", Condition::m1}, {"y2", Condition::m2}, {"y12", Condition::both}};
  for (const auto& [name, cond] : measures) {
    out.agreement[name] = alpha_entry(ratings_from_partial(records, space, cond, metric));
    const auto c = cond;
    try {
      out.confidence[name] = mean_confidence(records, [c](const PartialRecord& r) -> std::optional<int> {
        if (r.condition != c) return std::nullopt;
        return r.confidence;
      });
    } catch (const Error&) {
      out.confidence[name] = nullptr;
    }
  }
  return out;
}

Scores score_counterfactual(const std::vector<CounterfactualRecord>& records, const LabelSpace& space,
                            AlphaMetric metric) {
  Scores out;
  struct Measure {
    const char* name;
    Order order;
    CounterfactualField field;
  };
  const Measure measures[] = {{"y1", Order::first_m1, CounterfactualField::first},
                              {"y2", Order::first_m2, CounterfactualField::first},
                              {"y1+2", Order::first_m1, CounterfactualField::both},
                              {"y2+1", Order::first_m2, CounterfactualField::both}};
  for (const auto& m : measures) {
    out.agreement[m.name] = alpha_entry(ratings_from_counterfactual(records, space, m.order, m.field, metric));
    try {
      out.confidence[m.name] = mean_confidence(records, [m](const CounterfactualRecord& r) -> std::optional<int> {
        if (r.order != m.order) return std::nullopt;
        return m.field == CounterfactualField::first ? r.confidence_first : r.confidence_both;
      });
    } catch (const Error&) {
      out.confidence[m.name] = nullptr;
    }
  }
  return out;
}

Scores score_decomposition(const std::vector<DecompositionRecord>& records, AlphaMetric metric) {
  Scores out;
  const std::pair<const char*, int DecompositionRecord::*> ratings[] = {
      {"r", &DecompositionRecord::r}, {"u1", &DecompositionRecord::u1},
      {"u2", &DecompositionRecord::u2}, {"s", &DecompositionRecord::s}};
  for (const auto& [name, field] : ratings) out.agreement[name] = alpha_entry(ratings_from_decomposition(records, field, metric));
  if (!records.empty()) {
    const auto summary = summarize_decomposition(records);
    out.confidence = Json{{"r", summary.conf_r}, {"u1", summary.conf_u1}, {"u2", summary.conf_u2}, {"s", summary.conf_s}};
  }
  return out;
}

// ---- convert ---------------------------------------------------------------

struct ConvertArgs {
  Common common;
  std::string pairing = "rotation";
  double smoothing = 0.0;
  std::string metric = "nominal";
  bool include_q_star = false;
  Solver solver;
};

int run_convert(const ConvertArgs& a) {
  if (!(a.smoothing >= 0.0) || !std::isfinite(a.smoothing)) {
    throw Error(ErrorCode::invalid_argument, "--smoothing must be a nonnegative real");
  }
  const auto cfg = a.solver.config();
  const auto metric = alpha_metric_from_string(a.metric);
  const auto pairing = pairing_from_string(a.pairing);
  Json space_echo;
  const auto space = load_label_space(a.common.label_space, space_echo);

  std::vector<std::string> warnings;
  std::optional<TripleDataset> data;
  Scores scores;
  std::size_t n_records = 0;
  if (a.common.schema == "partial") {
    const auto records = read_records(a.common, parse_partial, warnings);
    n_records = records.size();
    if (records.empty()) throw Error(ErrorCode::empty_input, "no records to convert");
    data = triples_from_partial(records, space, pairing);
    scores = score_partial(records, space, metric);
  } else if (a.common.schema == "counterfactual") {
    const auto records = read_records(a.common, parse_counterfactual, warnings);
    n_records = records.size();
    if (records.empty()) throw Error(ErrorCode::empty_input, "no records to convert");
    data = triples_from_counterfactual(records, space);
    scores = score_counterfactual(records, space, metric);
  } else {
    throw Error(ErrorCode::invalid_argument, "convert needs --schema partial or counterfactual");
  }

  const auto result = convert(*data, a.smoothing, cfg);

  Json report = report_header("convert");
  report["config"] = Json{{"inputs", a.common.inputs},
                          {"schema", a.common.schema},
                          {"format", a.common.format.empty() ? "auto" : a.common.format},
                          {"label_space", space_echo},
                          {"pairing", a.pairing},
                          {"smoothing", a.smoothing},
                          {"metric", a.metric},
                          {"solver", to_json(cfg)}};
  report["input"] = Json{{"records", n_records}, {"triples", data->size()}, {"total_weight", data->total_weight()}};
  report["warnings"] = warnings;
  report["pid"] = to_json(result, a.include_q_star);
  report["agreement"] = scores.agreement;
  report["confidence"] = scores.confidence;
  write_output(report.dump(2) + "\n", a.common.out);
  return result.converged ? kExitOk : kExitFailed;
}

// ---- agreement -------------------------------------------------------------

struct AgreementArgs {
  Common common;
  std::string metric;  // empty: nominal for labels, interval for ratings
};

int run_agreement(const AgreementArgs& a) {
  std::vector<std::string> warnings;
  Json space_echo = nullptr;
  Scores scores;
  std::string metric_name = a.metric;
  std::size_t n_records = 0;
  Json summary = nullptr;
  if (a.common.schema == "decomposition") {
    if (metric_name.empty()) metric_name = "interval";
    const auto metric = alpha_metric_from_string(metric_name);
    const auto records = read_records(a.common, parse_decomposition, warnings);
    n_records = records.size();
    scores = score_decomposition(records, metric);
    if (!records.empty()) {
      const auto s = summarize_decomposition(records);
      summary = Json{{"r", s.r}, {"u1", s.u1}, {"u2", s.u2}, {"s", s.s}};
    }
  } else if (a.common.schema == "partial" || a.common.schema == "counterfactual") {
    if (metric_name.empty()) metric_name = "nominal";
    const auto metric = alpha_metric_from_string(metric_name);
    const auto space = load_label_space(a.common.label_space, space_echo);
    if (a.common.schema == "partial") {
      const auto records = read_records(a.common, parse_partial, warnings);
      n_records = records.size();
      scores = score_partial(records, space, metric);
    } else {
      const auto records = read_records(a.common, parse_counterfactual, warnings);
      n_records = records.size();
      scores = score_counterfactual(records, space, metric);
    }
  } else {
    throw Error(ErrorCode::invalid_argument, "agreement needs --schema partial, counterfactual or decomposition");
  }

  Json report = report_header("agreement");
  report["config"] = Json{{"inputs", a.common.inputs},
                          {"schema", a.common.schema},
                          {"format", a.common.format.empty() ? "auto" : a.common.format},
                          {"label_space", space_echo},
                          {"metric", metric_name}};
  report["input"] = Json{{"records", n_records}};
  report["warnings"] = warnings;
  report["agreement"] = scores.agreement;
  report["confidence"] = scores.confidence;
  if (!summary.is_null()) report["ratings"] = summary;
  write_output(report.dump(2) + "\n", a.common.out);
  return kExitOk;
}

// ---- pid -------------------------------------------------------------------

struct PidArgs {
  std::string input;
  std::string out;
  bool include_q_star = false;
  Solver solver;
};

int run_pid(const PidArgs& a) {
  const auto cfg = a.solver.config();
  const auto p = joint3_from_json(parse_json(read_file(a.input), a.input));
  const auto result = decompose(p, cfg);
  Json report = report_header("pid");
  report["config"] = Json{{"input", a.input}, {"solver", to_json(cfg)}};
  report["pid"] = to_json(result, a.include_q_star);
  write_output(report.dump(2) + "\n", a.out);
  return result.converged ? kExitOk : kExitFailed;
}

// ---- oracle-check ----------------------------------------------------------

struct OracleArgs {
  std::size_t trials = 100;
  std::vector<std::size_t> sizes{2};
  std::uint64_t seed = 1;
  std::size_t resolution = 2000;
  double tolerance = 2e-3;
  std::string out;
  Solver solver;
};

/// Random joint on n = 3 labels whose program has at most two free
/// parameters, so the grid oracle stays exhaustive: every y-slice is
/// supported on a 1 x k, k x 1 or 2 x 2 block, with at most two 2 x 2 blocks.
Joint3 sparse_joint3(std::mt19937_64& rng) {
  constexpr std::size_t n = 3;
  std::exponential_distribution<double> weight(1.0);
  std::vector<double> mass(n * n * n, 0.0);
  std::size_t blocks = 0;
  for (std::size_t y = 0; y < n; ++y) {
    std::vector<std::size_t> labels{0, 1, 2};
    std::shuffle(labels.begin(), labels.end(), rng);
    std::vector<std::size_t> rows, cols;
    const auto shape = rng() % 3;
    if (shape == 0 && blocks < 2) {
      ++blocks;
      rows = {labels[0], labels[1]};
      std::shuffle(labels.begin(), labels.end(), rng);
      cols = {labels[0], labels[1]};
    } else if (shape == 1) {
      rows = {labels[0]};
      cols = {0, 1, 2};
    } else {
      rows = {0, 1, 2};
      cols = {labels[0]};
    }
    for (auto i : rows)
      for (auto j : cols) mass[(i * n + j) * n + y] = weight(rng) + 1e-3;
  }
  double total = 0.0;
  for (double m : mass) total += m;
  for (double& m : mass) m /= total;
  return Joint3(n, std::move(mass));
}

int run_oracle_check(const OracleArgs& a) {
  if (a.trials == 0) throw Error(ErrorCode::invalid_argument, "--trials must be at least 1");
  if (a.sizes.empty()) throw Error(ErrorCode::invalid_argument, "--sizes must name at least one size");
  for (auto n : a.sizes) {
    if (n < 2 || n > 3) throw Error(ErrorCode::invalid_argument, "oracle sizes must be 2 or 3");
  }
  if (a.resolution < 100) throw Error(ErrorCode::invalid_argument, "--resolution must be at least 100");
  const auto cfg = a.solver.config();

  std::mt19937_64 rng(a.seed);
  double max_discrepancy = 0.0;
  double max_objective_diff = 0.0;
  std::size_t non_converged = 0;
  Json per_size = Json::object();
  for (std::size_t t = 0; t < a.trials; ++t) {
    const auto n = a.sizes[t % a.sizes.size()];
    const auto p = n == 2 ? random_joint(2, rng) : sparse_joint3(rng);
    const auto c = constraints_from_joint(p);
    const auto solved = decompose(p, cfg);
    if (!solved.converged) ++non_converged;
    const auto oracle = pid_from_solution(p, brute_force_qstar(c, a.resolution));
    double d = 0.0;
    const auto x = solved.components();
    const auto y = oracle.components();
    for (std::size_t i = 0; i < 4; ++i) d = std::max(d, std::abs(x[i] - y[i]));
    const double obj = std::abs(conditional_entropy_of_target(solved.q_star) -
                                conditional_entropy_of_target(oracle.q_star));
    max_discrepancy = std::max(max_discrepancy, d);
    max_objective_diff = std::max(max_objective_diff, obj);
    auto& entry = per_size[std::to_string(n)];
    if (entry.is_null()) entry = Json{{"trials", 0}, {"max_discrepancy", 0.0}};
    entry["trials"] = entry["trials"].get<std::size_t>() + 1;
    entry["max_discrepancy"] = std::max(entry["max_discrepancy"].get<double>(), d);
  }
  const bool passed = max_discrepancy <= a.tolerance && non_converged == 0;

  Json report = report_header("oracle-check");
  report["config"] = Json{{"trials", a.trials},
                          {"sizes", a.sizes},
                          {"seed", a.seed},
                          {"resolution", a.resolution},
                          {"tolerance", a.tolerance},
                          {"solver", to_json(cfg)}};
  report["max_discrepancy"] = max_discrepancy;
  report["max_objective_difference"] = max_objective_diff;
  report["non_converged"] = non_converged;
  report["per_size"] = per_size;
  report["passed"] = passed;
  write_output(report.dump(2) + "\n", a.out);
  return passed ? kExitOk : kExitFailed;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string gate = "XOR";
  std::size_t size = 2;
  std::optional<double> flip;
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  std::string as = "triples";
  std::string format = "csv";
  std::string out;
};

int run_synth(const SynthArgs& a) {
  GateSpec spec{gate_from_string(a.gate), a.size, a.flip};
  const auto data = sample(canonical_joint(spec), a.count, a.seed);
  const auto format = format_from_string(a.format);
  std::ostringstream text;
  if (a.as == "triples") {
    if (format != Format::csv) throw Error(ErrorCode::invalid_argument, "triples are written as csv only");
    write_triples_csv(text, data);
  } else if (a.as == "partial") {
    write_partial(text, partial_records_from_triples(data), format);
  } else if (a.as == "counterfactual") {
    write_counterfactual(text, counterfactual_records_from_triples(data), format);
  } else {
    throw Error(ErrorCode::unknown_value, "--as must be triples, partial or counterfactual");
  }
  write_output(text.str(), a.out);
  return kExitOk;
}

void print_error(std::string_view code, const std::string& message) {
  std::cerr << Json{{"error", {{"code", code}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial information decomposition of multimodal annotations"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  ConvertArgs convert_args;
  auto* convert_cmd = app.add_subcommand("convert", "Convert partial or counterfactual labels to R, U1, U2, S");
  convert_cmd->add_option("--input", convert_args.common.inputs, "Annotation file(s)")->required();
  convert_cmd->add_option("--schema", convert_args.common.schema, "partial or counterfactual")->required();
  convert_cmd->add_option("--format", convert_args.common.format, "csv or json (default: from extension)");
  convert_cmd->add_option("--label-space", convert_args.common.label_space, "Label space JSON or path")->required();
  convert_cmd->add_option("--pairing", convert_args.pairing, "rotation or all-pairs")->capture_default_str();
  convert_cmd->add_option("--smoothing", convert_args.smoothing, "Add-lambda smoothing")->capture_default_str();
  convert_cmd->add_option("--metric", convert_args.metric, "Alpha metric: nominal, ordinal or interval")
      ->capture_default_str();
  convert_cmd->add_flag("--include-q-star", convert_args.include_q_star, "Add q* to the report");
  convert_cmd->add_option("--out", convert_args.common.out, "Report path (default: stdout)");
  add_solver_flags(convert_cmd, convert_args.solver);

  AgreementArgs agreement_args;
  auto* agreement_cmd = app.add_subcommand("agreement", "Krippendorff's alpha and mean confidences");
  agreement_cmd->add_option("--input", agreement_args.common.inputs, "Annotation file(s)")->required();
  agreement_cmd->add_option("--schema", agreement_args.common.schema, "partial, counterfactual or decomposition")
      ->required();
  agreement_cmd->add_option("--format", agreement_args.common.format, "csv or json (default: from extension)");
  agreement_cmd->add_option("--label-space", agreement_args.common.label_space, "Label space JSON or path");
  agreement_cmd->add_option("--metric", agreement_args.metric,
                            "nominal, ordinal or interval (default: nominal for labels, interval for ratings)");
  agreement_cmd->add_option("--out", agreement_args.common.out, "Report path (default: stdout)");

  PidArgs pid_args;
  auto* pid_cmd = app.add_subcommand("pid", "Decompose a joint distribution given as JSON");
  pid_cmd->add_option("--input", pid_args.input, "Joint JSON {\"size\", \"mass\"}")->required();
  pid_cmd->add_flag("--include-q-star", pid_args.include_q_star, "Add q* to the report");
  pid_cmd->add_option("--out", pid_args.out, "Report path (default: stdout)");
  add_solver_flags(pid_cmd, pid_args.solver);

  OracleArgs oracle_args;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare the solver with the brute-force grid oracle");
  oracle_cmd->add_option("--trials", oracle_args.trials, "Number of random joints")
      ->check(CLI::Range(1, 1000000))
      ->capture_default_str();
  oracle_cmd->add_option("--sizes", oracle_args.sizes, "Label-space sizes, 2 or 3")->delimiter(',')
      ->capture_default_str();
  oracle_cmd->add_option("--seed", oracle_args.seed, "Random seed")->capture_default_str();
  oracle_cmd->add_option("--resolution", oracle_args.resolution, "Grid points per parameter")->capture_default_str();
  oracle_cmd->add_option("--tolerance", oracle_args.tolerance, "Allowed component discrepancy in bits")
      ->capture_default_str();
  oracle_cmd->add_option("--out", oracle_args.out, "Report path (default: stdout)");
  add_solver_flags(oracle_cmd, oracle_args.solver);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Sample labels from a canonical gate");
  synth_cmd->add_option("--gate", synth_args.gate, "XOR, AND, OR, COPY, UNIQUE1 or UNIQUE2")->capture_default_str();
  synth_cmd->add_option("--size", synth_args.size, "Number of labels")->capture_default_str();
  synth_cmd->add_option("--flip", synth_args.flip, "Label-flip probability in [0, 0.5)");
  synth_cmd->add_option("--count", synth_args.count, "Number of samples")->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--as", synth_args.as, "triples, partial or counterfactual")->capture_default_str();
  synth_cmd->add_option("--format", synth_args.format, "csv or json (records only)")->capture_default_str();
  synth_cmd->add_option("--out", synth_args.out, "Output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return kExitInput;
  }

  try {
    if (*convert_cmd) return run_convert(convert_args);
    if (*agreement_cmd) return run_agreement(agreement_args);
    if (*pid_cmd) return run_pid(pid_args);
    if (*oracle_cmd) return run_oracle_check(oracle_args);
    if (*synth_cmd) return run_synth(synth_args);
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitInput;
  }
  return kExitInput;
}
