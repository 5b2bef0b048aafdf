// nsproj command-line front end: ingestion -> diagnostics -> projection ->
// canonical Bell evaluation. Talks to the core exclusively through the
// shared-library C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nsproj/nsproj.h"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitConvergence = 2;

struct CliError {
  std::string message;
  int exit_code;
};

[[noreturn]] void fail(const std::string& message, int exit_code = kExitValidation) {
  throw CliError{message, exit_code};
}

[[noreturn]] void fail_api(const std::string& context) {
  const int exit_code =
      nsp_last_status() == NSP_ERR_CONVERGENCE ? kExitConvergence : kExitValidation;
  fail(context + ": " + nsp_last_error(), exit_code);
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream buffer;
    buffer << std::cin.rdbuf();
    return buffer.str();
  }
  std::ifstream in(path);
  if (!in) fail("cannot open input file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) fail("cannot open output file '" + path + "'");
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

struct ScenarioOption {
  int parties = 0;
  int settings = 0;
  bool set = false;
};

void add_scenario_option(CLI::App* cmd, ScenarioOption& opt) {
  cmd->add_option_function<std::string>(
         "--scenario",
         [&opt](const std::string& text) {
           const auto comma = text.find(',');
           if (comma == std::string::npos) {
             throw CLI::ValidationError("--scenario", "expected n,m (e.g. 2,2)");
           }
           try {
             opt.parties = std::stoi(text.substr(0, comma));
             opt.settings = std::stoi(text.substr(comma + 1));
           } catch (const std::exception&) {
             throw CLI::ValidationError("--scenario", "expected n,m (e.g. 2,2)");
           }
           opt.set = true;
         },
         "Scenario as n,m (parties, settings per party)");
}

using ScenarioPtr = std::unique_ptr<nsp_scenario, decltype(&nsp_scenario_free)>;
using CountsPtr = std::unique_ptr<nsp_counts, decltype(&nsp_counts_free)>;
using BehaviorPtr = std::unique_ptr<nsp_behavior, decltype(&nsp_behavior_free)>;
using ExpressionPtr = std::unique_ptr<nsp_expression, decltype(&nsp_expression_free)>;

struct LoadedData {
  BehaviorPtr behavior{nullptr, nsp_behavior_free};
  std::vector<double> setting_distribution;
};

CountsPtr load_count_table(const std::string& input, bool grid222, const ScenarioOption& scenario) {
  const std::string text = read_input(input);
  if (grid222) {
    CountsPtr counts(nsp_counts_parse_grid222(text.c_str()), nsp_counts_free);
    if (!counts) fail_api("cannot parse grid counts");
    return counts;
  }
  if (!scenario.set) fail("--scenario is required for long-format count input");
  ScenarioPtr sc(nsp_scenario_create(scenario.parties, scenario.settings), nsp_scenario_free);
  if (!sc) fail_api("invalid scenario");
  CountsPtr counts(nsp_counts_parse_csv(sc.get(), text.c_str()), nsp_counts_free);
  if (!counts) fail_api("cannot parse counts");
  return counts;
}

LoadedData load_frequencies(const std::string& input, bool grid222, const ScenarioOption& scenario) {
  CountsPtr counts = load_count_table(input, grid222, scenario);
  LoadedData data;
  data.setting_distribution.resize(nsp_counts_setting_blocks(counts.get()));
  data.behavior.reset(nsp_counts_frequencies(counts.get(), data.setting_distribution.data()));
  if (!data.behavior) fail_api("cannot derive frequencies");
  return data;
}

std::vector<double> parse_weights_file(const std::string& path, int expected) {
  const std::string text = read_input(path);
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    fail(std::string("cannot parse weights file: ") + e.what());
  }
  std::vector<double> weights;
  if (parsed.is_array()) {
    weights = parsed.get<std::vector<double>>();
  } else if (parsed.contains("weights")) {
    weights = parsed.at("weights").get<std::vector<double>>();
  } else {
    fail("weights file must be an array or an object with a 'weights' field");
  }
  if (static_cast<int>(weights.size()) != expected) {
    fail("weights file lists " + std::to_string(weights.size()) + " entries, expected " +
         std::to_string(expected));
  }
  return weights;
}

ExpressionPtr load_expression(const std::string& name, const std::string& file, double alpha, double beta) {
  if (!name.empty() && !file.empty()) fail("give either --expr or --expr-file, not both");
  if (!name.empty()) {
    ExpressionPtr expr(nsp_expression_builtin(name.c_str(), alpha, beta), nsp_expression_free);
    if (!expr) fail_api("unknown expression");
    return expr;
  }
  if (!file.empty()) {
    const std::string text = read_input(file);
    ExpressionPtr expr(nsp_expression_parse_json(text.c_str()), nsp_expression_free);
    if (!expr) fail_api("cannot parse expression");
    return expr;
  }
  fail("an expression is required (--expr NAME or --expr-file PATH)");
}

std::string format_number(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

std::string behavior_json_with_residual(const nsp_behavior* behavior, const std::string& method) {
  char* text = nsp_behavior_to_json(behavior);
  if (!text) fail_api("cannot serialise behaviour");
  nlohmann::json j = nlohmann::json::parse(text);
  nsp_string_free(text);
  double nosig = 0.0, norm = 0.0;
  if (nsp_residual_max(behavior, &nosig, &norm) != NSP_OK) fail_api("cannot compute residual");
  j["residual"] = {{"nosig_max", nosig}, {"norm_max", norm}};
  j["method"] = method;
  return j.dump(2);
}

std::string behavior_csv(const nsp_behavior* behavior) {
  char* text = nsp_behavior_to_json(behavior);
  if (!text) fail_api("cannot serialise behaviour");
  nlohmann::json j = nlohmann::json::parse(text);
  nsp_string_free(text);
  const int n = j["scenario"]["n"].get<int>();
  const int m = j["scenario"]["m"].get<int>();
  const std::vector<double> entries = j["entries"].get<std::vector<double>>();
  std::ostringstream out;
  for (int i = 1; i <= n; ++i) out << "x" << i << ",";
  for (int i = 1; i <= n; ++i) out << "a" << i << ",";
  out << "value\n";
  const int block_size = 1 << n;
  for (int index = 0; index < static_cast<int>(entries.size()); ++index) {
    int block = index / block_size;
    int offset = index % block_size;
    std::vector<int> settings(n), outcomes(n);
    for (int i = n - 1; i >= 0; --i) {
      settings[i] = block % m;
      block /= m;
      outcomes[i] = offset & 1;
      offset >>= 1;
    }
    for (int i = 0; i < n; ++i) out << settings[i] << ",";
    for (int i = 0; i < n; ++i) out << outcomes[i] << ",";
    out << format_number(entries[index]) << "\n";
  }
  return out.str();
}

int run_project(const std::string& input, bool grid222, const ScenarioOption& scenario,
                const std::string& method, const std::string& weights_source,
                const std::string& weights_file, const std::string& out_path, const std::string& format) {
  LoadedData data = load_frequencies(input, grid222, scenario);
  const int block_count = static_cast<int>(data.setting_distribution.size());

  std::vector<double> weights;
  if (method == "weighted" || method == "ml") {
    if (weights_source == "uniform") {
      weights.assign(block_count, 1.0 / block_count);
    } else if (weights_source == "file") {
      if (weights_file.empty()) fail("--weights file requires --weights-file PATH");
      weights = parse_weights_file(weights_file, block_count);
    } else {  // from-counts (default)
      weights = data.setting_distribution;
    }
  }

  BehaviorPtr projected(nsp_project(data.behavior.get(), method.c_str(),
                                    weights.empty() ? nullptr : weights.data(), weights.size()),
                        nsp_behavior_free);
  if (!projected) fail_api("projection failed");

  double nosig = 0.0, norm = 0.0;
  nsp_residual_max(projected.get(), &nosig, &norm);
  std::cerr << "projected with method=" << method << "; residual nosig=" << format_number(nosig)
            << " norm=" << format_number(norm) << "\n";

  if (format == "csv") {
    write_output(out_path, behavior_csv(projected.get()));
  } else {
    write_output(out_path, behavior_json_with_residual(projected.get(), method));
  }
  return 0;
}

int run_canonicalize(const std::string& name, const std::string& file, double alpha, double beta,
                     const std::string& out_path) {
  ExpressionPtr expr = load_expression(name, file, alpha, beta);
  char* canonical = nsp_expression_canonical_json(expr.get());
  if (!canonical) fail_api("canonicalisation failed");
  std::string text(canonical);
  nsp_string_free(canonical);
  write_output(out_path, text);
  return 0;
}

int run_evaluate(const std::string& name, const std::string& file, double alpha, double beta,
                 const std::string& input, bool grid222, const ScenarioOption& scenario,
                 const std::string& behavior_file) {
  ExpressionPtr expr = load_expression(name, file, alpha, beta);

  BehaviorPtr behavior(nullptr, nsp_behavior_free);
  if (!behavior_file.empty()) {
    const std::string text = read_input(behavior_file);
    behavior.reset(nsp_behavior_parse_json(text.c_str()));
    if (!behavior) fail_api("cannot parse behaviour");
  } else if (!input.empty()) {
    LoadedData data = load_frequencies(input, grid222, scenario);
    behavior = std::move(data.behavior);
  } else {
    fail("evaluation needs --input counts or --behavior JSON");
  }

  int parties = 0, settings = 0;
  nsp_expression_scenario(expr.get(), &parties, &settings);
  ScenarioPtr sc(nsp_scenario_create(parties, settings), nsp_scenario_free);
  if (nsp_behavior_dimension(behavior.get()) != nsp_scenario_dimension(sc.get())) {
    fail("expression scenario (" + std::to_string(parties) + "," + std::to_string(settings) +
         ") does not match the data");
  }

  double bound = 0.0;
  int is_le = 1;
  nsp_expression_bound(expr.get(), &bound, &is_le);

  BehaviorPtr projected(nsp_project(behavior.get(), "pipeline", nullptr, 0), nsp_behavior_free);
  if (!projected) fail_api("projection failed");

  // The expression is evaluated as written (not canonicalised), so a
  // probability-coefficient form shows its projection sensitivity here while
  // canonical correlator forms print the same value twice.
  auto report = [&](const char* tag, const nsp_behavior* b) {
    double value = 0.0, margin = 0.0;
    int violated = 0;
    if (nsp_evaluate(expr.get(), b, 0, &value, &margin, &violated) != NSP_OK) {
      fail_api("evaluation failed");
    }
    std::cout << tag << ": value=" << format_number(value) << " bound=" << format_number(bound) << " ("
              << (is_le ? "<=" : ">=") << ") margin=" << format_number(margin) << " "
              << (violated ? "violated" : "satisfied") << "\n";
  };
  report("raw      ", behavior.get());
  report("projected", projected.get());
  return 0;
}

int run_diagnose(const std::string& input, bool grid222, const ScenarioOption& scenario,
                 const std::string& out_path) {
  LoadedData data = load_frequencies(input, grid222, scenario);
  char* report_text = nsp_signalling_report_json(data.behavior.get());
  if (!report_text) fail_api("cannot build signalling report");
  std::string text(report_text);
  nsp_string_free(report_text);

  nlohmann::json report = nlohmann::json::parse(text);
  std::cout << "no-signalling residuals: max=" << format_number(report["max_abs"].get<double>())
            << " mean=" << format_number(report["mean_abs"].get<double>()) << "\n";
  if (report.contains("worst")) {
    std::cout << "worst offender: " << report["worst"].get<std::string>() << "\n";
  }
  if (!out_path.empty()) write_output(out_path, text);
  return 0;
}

int run_generate(const ScenarioOption& scenario, const std::string& base_file,
                 const std::string& trials_text, double drift, int blocks, unsigned long long seed,
                 bool expected_mode, const std::string& out_path) {
  BehaviorPtr base(nullptr, nsp_behavior_free);
  int block_count = 0;
  if (!base_file.empty()) {
    const std::string text = read_input(base_file);
    base.reset(nsp_behavior_parse_json(text.c_str()));
    if (!base) fail_api("cannot parse base behaviour");
    char* json_text = nsp_behavior_to_json(base.get());
    nlohmann::json j = nlohmann::json::parse(json_text);
    nsp_string_free(json_text);
    const int n = j["scenario"]["n"].get<int>();
    block_count = nsp_behavior_dimension(base.get()) >> n;
  } else {
    if (!scenario.set) fail("--scenario is required when no base behaviour is given");
    ScenarioPtr sc(nsp_scenario_create(scenario.parties, scenario.settings), nsp_scenario_free);
    if (!sc) fail_api("invalid scenario");
    const int dim = nsp_scenario_dimension(sc.get());
    block_count = nsp_scenario_setting_blocks(sc.get());
    const double uniform = static_cast<double>(block_count) / dim;
    std::vector<double> entries(dim, uniform);
    base.reset(nsp_behavior_create(sc.get(), entries.data(), entries.size()));
    if (!base) fail_api("cannot build uniform base");
  }

  std::vector<long long> trials;
  if (trials_text.find(',') != std::string::npos) {
    std::istringstream in(trials_text);
    std::string field;
    while (std::getline(in, field, ',')) trials.push_back(std::stoll(field));
  } else {
    trials.assign(block_count, std::stoll(trials_text));
  }
  if (static_cast<int>(trials.size()) != block_count) {
    fail("expected " + std::to_string(block_count) + " per-setting trial counts");
  }

  char* csv = nsp_generate_counts_csv(base.get(), trials.data(), trials.size(), drift, blocks, seed,
                                      expected_mode ? 1 : 0);
  if (!csv) fail_api("generation failed");
  std::string text(csv);
  nsp_string_free(csv);
  write_output(out_path, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"no-signalling projection toolkit for (n,m,2) Bell-experiment data"};
  app.require_subcommand(1);

  // project
  auto* project = app.add_subcommand("project", "Project empirical counts onto the no-signalling hull");
  std::string project_input, project_out, project_method = "pipeline";
  std::string project_weights = "from-counts", project_weights_file, project_format = "json";
  bool project_grid = false;
  ScenarioOption project_scenario;
  project->add_option("--input", project_input, "Counts CSV ('-' for stdin)")->required();
  project->add_flag("--grid222", project_grid, "Input is the 4x4 grid layout for (2,2,2)");
  add_scenario_option(project, project_scenario);
  project->add_option("--method", project_method, "pipeline|direct|weighted|nonneg|ml")
      ->check(CLI::IsMember({"pipeline", "direct", "weighted", "nonneg", "ml"}));
  project->add_option("--weights", project_weights, "uniform|from-counts|file")
      ->check(CLI::IsMember({"uniform", "from-counts", "file"}));
  project->add_option("--weights-file", project_weights_file, "JSON weights (array or {weights:[...]})");
  project->add_option("--out", project_out, "Output path (default stdout)");
  project->add_option("--format", project_format, "json|csv")->check(CLI::IsMember({"json", "csv"}));

  // canonicalize
  auto* canonicalize = app.add_subcommand("canonicalize", "Rewrite a Bell expression in canonical correlator form");
  std::string canon_expr, canon_file, canon_out;
  double canon_alpha = 1.0, canon_beta = 0.0;
  canonicalize->add_option("--expr", canon_expr, "Built-in name: chsh|mermin|tilted|i3322|losr_gtnl");
  canonicalize->add_option("--expr-file", canon_file, "Expression JSON file");
  canonicalize->add_option("--alpha", canon_alpha, "Tilted-family parameter alpha (>= 1)");
  canonicalize->add_option("--beta", canon_beta, "Tilted-family parameter beta (>= 0)");
  canonicalize->add_option("--out", canon_out, "Output path (default stdout)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a Bell expression before and after projection");
  std::string eval_expr, eval_file, eval_input, eval_behavior;
  double eval_alpha = 1.0, eval_beta = 0.0;
  bool eval_grid = false;
  ScenarioOption eval_scenario;
  evaluate->add_option("--expr", eval_expr, "Built-in name");
  evaluate->add_option("--expr-file", eval_file, "Expression JSON file");
  evaluate->add_option("--alpha", eval_alpha, "Tilted-family parameter alpha");
  evaluate->add_option("--beta", eval_beta, "Tilted-family parameter beta");
  evaluate->add_option("--input", eval_input, "Counts CSV");
  evaluate->add_flag("--grid222", eval_grid, "Counts use the 4x4 grid layout");
  add_scenario_option(evaluate, eval_scenario);
  evaluate->add_option("--behavior", eval_behavior, "Behaviour JSON instead of counts");

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Report per-condition signalling residuals");
  std::string diag_input, diag_out;
  bool diag_grid = false;
  ScenarioOption diag_scenario;
  diagnose->add_option("--input", diag_input, "Counts CSV")->required();
  diagnose->add_flag("--grid222", diag_grid, "Counts use the 4x4 grid layout");
  add_scenario_option(diagnose, diag_scenario);
  diagnose->add_option("--out", diag_out, "Write the full JSON report here");

  // generate
  auto* generate = app.add_subcommand("generate", "Generate synthetic drift-contaminated counts");
  std::string gen_base, gen_trials = "10000", gen_out;
  double gen_drift = 0.0;
  int gen_blocks = 1;
  unsigned long long gen_seed = 1;
  bool gen_expected = false;
  ScenarioOption gen_scenario;
  add_scenario_option(generate, gen_scenario);
  generate->add_option("--base", gen_base, "Base behaviour JSON (default: outcome-uniform)");
  generate->add_option("--trials", gen_trials, "Trials per setting (single value or comma list)");
  generate->add_option("--drift", gen_drift, "Drift amplitude");
  generate->add_option("--blocks", gen_blocks, "Sequential fixed-setting blocks per setting");
  generate->add_option("--seed", gen_seed, "RNG seed");
  generate->add_flag("--expected", gen_expected, "Write rounded expected counts instead of samples");
  generate->add_option("--out", gen_out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitValidation;
    }
    return app.exit(e);  // --help and friends
  }

  try {
    if (project->parsed()) {
      return run_project(project_input, project_grid, project_scenario, project_method, project_weights,
                         project_weights_file, project_out, project_format);
    }
    if (canonicalize->parsed()) {
      return run_canonicalize(canon_expr, canon_file, canon_alpha, canon_beta, canon_out);
    }
    if (evaluate->parsed()) {
      return run_evaluate(eval_expr, eval_file, eval_alpha, eval_beta, eval_input, eval_grid,
                          eval_scenario, eval_behavior);
    }
    if (diagnose->parsed()) {
      return run_diagnose(diag_input, diag_grid, diag_scenario, diag_out);
    }
    if (generate->parsed()) {
      return run_generate(gen_scenario, gen_base, gen_trials, gen_drift, gen_blocks, gen_seed,
                          gen_expected, gen_out);
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
