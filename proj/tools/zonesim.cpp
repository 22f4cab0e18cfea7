#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "zonesim/harness.hpp"
#include "zonesim/validate.hpp"
#include "zonesim/zone_m.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw zonesim::IoError("cannot read config file " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void print_summary(const zonesim::ExperimentSummary& s) {
  std::cout << "trials " << s.trials << " (aborted " << s.aborted << "), "
            << "oracle calls " << s.total_oracle_calls << ", wall "
            << s.wall_seconds << " s\n";
  std::cout << "final iteration " << s.final_iter << " trial means:";
  auto field = [](const char* name, const std::optional<double>& v) {
    if (v) std::cout << "  " << name << " " << *v;
  };
  field("opt-gap", s.final_opt_gap);
  field("cons-vio", s.final_cons_vio);
  field("phi", s.final_phi);
  field("psi", s.final_psi);
  field("potential", s.final_potential);
  std::cout << "\ntraces: " << s.csv_path << "\nsummary: " << s.summary_path
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zeroth-order distributed optimization simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string agents_arg = "10,20,40,80";
  std::string combined_out = "sweep_summary.csv";
  int threads = 0;
  bool deterministic = false;
  bool print_edges = false;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config)
      cmd->add_option("config", config_path, "experiment config file")
          ->required();
    cmd->add_option("--threads", threads,
                    "worker threads (default: ZONESIM_THREADS or all cores)");
    cmd->add_flag("--deterministic", deterministic,
                  "single-threaded execution; results are identical either "
                  "way, this is a debugging aid");
  };

  auto* run_cmd = app.add_subcommand("run", "execute an experiment, write CSV");
  add_common(run_cmd, true);

  auto* sweep_cmd =
      app.add_subcommand("sweep", "repeat the experiment over network sizes");
  add_common(sweep_cmd, true);
  sweep_cmd->add_option("--agents", agents_arg, "comma-separated sizes");
  sweep_cmd->add_option("--out", combined_out, "combined summary path");

  auto* spectra_cmd = app.add_subcommand(
      "spectra", "print graph spectral constants and penalty bounds");
  add_common(spectra_cmd, true);
  spectra_cmd->add_flag("--print-edges", print_edges,
                        "also dump the edge-list serialization");

  auto* validate_cmd =
      app.add_subcommand("validate", "run the fast invariant suite");
  add_common(validate_cmd, false);

  CLI11_PARSE(app, argc, argv);
  const int workers = deterministic ? 1 : threads;

  try {
    if (run_cmd->parsed()) {
      const auto cfg = zonesim::load_config(read_file(config_path));
      std::cout << zonesim::render_config(cfg) << "\n";
      const auto s = zonesim::run_experiment(cfg, workers);
      print_summary(s);
      return s.aborted > 0 ? 1 : 0;
    }

    if (sweep_cmd->parsed()) {
      const auto cfg = zonesim::load_config(read_file(config_path));
      std::vector<int> sizes;
      std::stringstream ss(agents_arg);
      std::string tok;
      while (std::getline(ss, tok, ',')) sizes.push_back(std::stoi(tok));
      const auto all =
          zonesim::run_sweep(cfg, sizes, combined_out, workers);
      int aborted = 0;
      for (size_t i = 0; i < all.size(); ++i) {
        std::cout << "== agents " << sizes[i] << "\n";
        print_summary(all[i]);
        aborted += all[i].aborted;
      }
      std::cout << "combined: " << combined_out << "\n";
      return aborted > 0 ? 1 : 0;
    }

    if (spectra_cmd->parsed()) {
      const auto cfg = zonesim::load_config(read_file(config_path));
      const auto problem = zonesim::build_problem(cfg);
      const auto topo = zonesim::build_topology(cfg);
      const auto ops = zonesim::derive_operators(topo);
      const auto theory = zonesim::theoretical_params(
          ops, problem.smoothness_sum, problem.delta);
      std::cout << "agents " << topo.n_agents << ", edges " << topo.n_edges()
                << "\n";
      std::cout << "sigma_min " << ops.sigma_min << "\n";
      std::cout << "norm_lplus " << ops.norm_lplus << "\n";
      std::cout << "smoothness aggregate " << problem.smoothness_sum << "\n";
      std::cout << "c " << theory.c << "\n";
      std::cout << "rho_min " << theory.rho_min << "\n";
      std::cout << "k " << theory.k << "\n";
      if (print_edges) std::cout << zonesim::to_edge_list(topo);
      return 0;
    }

    // validate
    const auto results = zonesim::validate_suite();
    bool all_pass = true;
    for (const auto& r : results) {
      std::cout << (r.pass ? "[pass] " : "[FAIL] ") << r.name;
      if (!r.detail.empty()) std::cout << " -- " << r.detail;
      std::cout << "\n";
      all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
