// silt <experiment> [--key value]... [--config file]

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "silt/experiments.hpp"

namespace {

const char* const kKeys[] = {"op", "k",       "p",      "eps", "n", "n_schedule", "n_paths", "n_mc", "seed",
                             "output", "h", "s", "t", "n_terms", "shards", "threads"};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw silt::InputError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(int argc, char** argv) {
  CLI::App app{"silt: local-time experiments for Gaussian integrators"};
  app.set_help_flag("--help", "print this help and exit");
  app.set_version_flag("--version", "silt 1.0.0");
  std::string experiment, config_path;
  bool quiet = false;
  std::string names;
  for (const auto& n : silt::experiment_names()) names += (names.empty() ? "" : " | ") + n;
  app.add_option("experiment", experiment, "one of: " + names)->required();
  app.add_option("--config", config_path, "key=value config file; flags override it");
  app.add_flag("--quiet", quiet, "do not print the summary");
  std::map<std::string, std::string> flags;
  for (const char* key : kKeys) {
    std::string name = "--" + std::string(key);
    std::string dashed = name;
    for (auto& ch : dashed)
      if (ch == '_') ch = '-';
    if (dashed != name) name += "," + dashed;
    app.add_option(name, flags[key], std::string("set ") + key);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    // the positional experiment goes last so that error line numbers match the file
    silt::ExperimentConfig cfg = config_path.empty()
                                     ? silt::default_config()
                                     : silt::validate_config(read_file(config_path) + "\nexperiment=" + experiment + "\n");
    cfg.experiment = experiment;
    for (const char* key : kKeys)
      if (app.count("--" + std::string(key)) > 0) silt::apply_setting(cfg, key, flags[key], "--" + std::string(key));
    silt::finalize_config(cfg);

    const silt::ExperimentOutput out = silt::run_experiment(cfg);
    silt::write_outputs(out, cfg.output_prefix());
    if (!quiet) std::cout << out.summary_text();
    if (out.exit_code != 0)
      std::cerr << "silt: " << out.summary.at("status").get<std::string>() << " (see " << cfg.output_prefix()
                << ".summary.json)\n";
    return out.exit_code;
  } catch (const silt::InputError& e) {
    std::cerr << "silt: " << e.what() << "\n";
    return 2;
  } catch (const silt::ResolutionError& e) {
    std::cerr << "silt: " << e.what() << "\n";
    return 2;
  } catch (const silt::ScopeError& e) {
    std::cerr << "silt: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "silt: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
