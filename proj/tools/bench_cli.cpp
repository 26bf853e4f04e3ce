// Benchmark harness: run solvers over the native problem suite and turn
// the resulting records into Dolan-More performance profiles.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "itrace/itrace.hpp"

namespace {

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

// Flat key=value file; '#' starts a comment line. Flags given on the
// command line take precedence over file values.
std::map<std::string, std::string> read_flat_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw itrace::IoError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw itrace::IoError("malformed config line: " + stripped);
    }
    kv[trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
  }
  return kv;
}

// Applies a config value to an option the user did not pass explicitly.
void apply_config(const std::map<std::string, std::string>& kv,
                  const CLI::App& cmd, const std::string& flag,
                  const std::string& key, std::string& target) {
  if (cmd.get_option("--" + flag)->count() > 0) return;
  const auto it = kv.find(key);
  if (it != kv.end()) target = it->second;
}

void apply_config(const std::map<std::string, std::string>& kv,
                  const CLI::App& cmd, const std::string& flag,
                  const std::string& key, double& target) {
  if (cmd.get_option("--" + flag)->count() > 0) return;
  const auto it = kv.find(key);
  if (it != kv.end()) target = std::stod(it->second);
}

void apply_config(const std::map<std::string, std::string>& kv,
                  const CLI::App& cmd, const std::string& flag,
                  const std::string& key, int& target) {
  if (cmd.get_option("--" + flag)->count() > 0) return;
  const auto it = kv.find(key);
  if (it != kv.end()) target = std::stoi(it->second);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix-free trust-region solver benchmark harness"};
  std::string config_path;
  app.add_option("--config", config_path,
                 "flat key=value config file; flags win");
  app.require_subcommand(1);

  // run subcommand
  auto* run = app.add_subcommand("run", "run solvers over suite problems");
  std::string solver_name = "itrace";
  int setting = 2;
  std::string problems_arg = "all";
  double time_limit_s = 60.0;
  std::string out_path = "records.csv";
  run->add_option("--solver", solver_name, "itrace|trace|arc")
      ->check(CLI::IsMember({"itrace", "trace", "arc", "all"}));
  run->add_option("--setting", setting, "inexactness setting 1|2|3")
      ->check(CLI::Range(1, 3));
  run->add_option("--problems", problems_arg, "comma-separated names or 'all'");
  run->add_option("--time-limit-s", time_limit_s, "per-problem wall limit");
  run->add_option("--out", out_path, "output records CSV");

  // profile subcommand
  auto* profile = app.add_subcommand("profile", "compute performance profiles");
  std::string metric_name = "nf";
  double tau_max = 20.0;
  std::string in_path = "records.csv";
  std::string profile_out = "profile.csv";
  profile->add_option("--metric", metric_name, "nf|ng|nhv")
      ->check(CLI::IsMember({"nf", "ng", "nhv"}));
  profile->add_option("--tau-max", tau_max, "horizontal axis cap");
  profile->add_option("--in", in_path, "input records CSV");
  profile->add_option("--out", profile_out, "output profile CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      const auto kv = read_flat_config(config_path);
      apply_config(kv, *run, "solver", "solver", solver_name);
      apply_config(kv, *run, "setting", "setting", setting);
      apply_config(kv, *run, "problems", "problems", problems_arg);
      apply_config(kv, *run, "time-limit-s", "time-limit-s", time_limit_s);
      apply_config(kv, *run, "out", run->parsed() ? "out" : "", out_path);
      apply_config(kv, *profile, "metric", "metric", metric_name);
      apply_config(kv, *profile, "tau-max", "tau-max", tau_max);
      apply_config(kv, *profile, "in", "in", in_path);
      apply_config(kv, *profile, "out", profile->parsed() ? "out" : "",
                   profile_out);
    }
    if (solver_name != "itrace" && solver_name != "trace" &&
        solver_name != "arc" && solver_name != "all") {
      std::cerr << "error: unknown solver '" << solver_name << "'\n";
      return 1;
    }
    if (setting < 1 || setting > 3) {
      std::cerr << "error: setting must be 1, 2, or 3\n";
      return 1;
    }
    if (metric_name != "nf" && metric_name != "ng" && metric_name != "nhv") {
      std::cerr << "error: unknown metric '" << metric_name << "'\n";
      return 1;
    }

    if (run->parsed()) {
      std::vector<itrace::SolverSpec> solvers;
      auto add_solver = [&](const std::string& name) {
        itrace::SolverSpec spec;
        spec.setting = setting;
        if (name == "itrace") spec.kind = itrace::SolverKind::Itrace;
        else if (name == "trace") spec.kind = itrace::SolverKind::Trace;
        else spec.kind = itrace::SolverKind::Arc;
        solvers.push_back(spec);
      };
      if (solver_name == "all") {
        for (const char* s : {"itrace", "trace", "arc"}) add_solver(s);
      } else {
        add_solver(solver_name);
      }

      std::vector<itrace::Problem> problems;
      if (problems_arg == "all") {
        problems = itrace::problem_suite();
      } else {
        for (const auto& name : split_csv_list(problems_arg)) {
          problems.push_back(itrace::lookup_problem(name));
        }
      }

      itrace::RunLimits limits;
      limits.time_limit_s = time_limit_s;
      auto records = itrace::run_benchmark(solvers, problems, limits);
      itrace::export_csv(records, out_path);
      long converged = 0;
      for (const auto& r : records) {
        if (r.status == "Converged") ++converged;
      }
      std::cout << records.size() << " runs, " << converged
                << " converged; records written to " << out_path << "\n";
    } else if (profile->parsed()) {
      auto records = itrace::import_csv(in_path);
      itrace::ProfileMetric metric = itrace::ProfileMetric::NF;
      if (metric_name == "ng") metric = itrace::ProfileMetric::NG;
      if (metric_name == "nhv") metric = itrace::ProfileMetric::NHV;
      auto curves = itrace::performance_profile(records, metric, tau_max);
      itrace::export_profile_csv(curves, profile_out);
      std::cout << curves.size() << " curves written to " << profile_out << "\n";
    }
  } catch (const itrace::SolverError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
