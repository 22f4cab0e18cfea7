#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "zonesim/errors.hpp"
#include "zonesim/szo.hpp"

namespace zonesim {

enum class TopologyKind { kMesh, kStar };
enum class ProblemKind { kSigmoidLog, kSparseQuadratic };
enum class AlgorithmKind {
  kZoneM,
  kZoneMInc,
  kZoneS,
  kZoneSInc,
  kRgf,
  kZoGd,
  kZoSgd
};

inline const char* algorithm_name(AlgorithmKind k) {
  switch (k) {
    case AlgorithmKind::kZoneM: return "zone_m";
    case AlgorithmKind::kZoneMInc: return "zone_m_inc";
    case AlgorithmKind::kZoneS: return "zone_s";
    case AlgorithmKind::kZoneSInc: return "zone_s_inc";
    case AlgorithmKind::kRgf: return "rgf";
    case AlgorithmKind::kZoGd: return "zo_gd";
    case AlgorithmKind::kZoSgd: return "zo_sgd";
  }
  return "?";
}

// Flat-section experiment description; every run is reproducible from this
// record plus the master seed.
struct ExperimentConfig {
  // [topology]
  TopologyKind topology = TopologyKind::kMesh;
  int n_agents = 0;
  double radius = 0.0;
  std::uint64_t topology_seed = 7;

  // [problem]
  ProblemKind problem = ProblemKind::kSigmoidLog;
  std::uint64_t problem_seed = 1;
  int dim = 1;             // sparse quadratic
  double l1_radius = 5.0;  // sparse quadratic

  // [algorithm]
  AlgorithmKind algorithm = AlgorithmKind::kZoneM;
  double rho = 0.0;       // zone_m constant penalty; 0 keeps theoretical mode
  double c = 0.0;         // potential constant override
  double stepsize = 0.0;  // zo_gd / zo_sgd override
  bool distributed = false;  // zone_m primal-only form

  // [run]
  long horizon = 0;
  int batch = 0;        // 0: defaults to horizon
  double mu = 0.0;      // 0: defaults to 1/sqrt(horizon)
  double noise_std = 0.01;
  NoiseCoupling coupling = NoiseCoupling::kIndependent;
  int trials = 20;
  int stride = 10;
  std::string output = "traces.csv";
  std::uint64_t master_seed = 1;
  bool timings = false;  // per-row wall clock breaks byte reproducibility
  long budget = 0;       // oracle-call budget; derives the horizon of the
                         // centralized baselines when set

  int resolved_batch() const { return batch > 0 ? batch : static_cast<int>(horizon); }
  double resolved_mu() const {
    return mu > 0.0 ? mu : 1.0 / std::sqrt(static_cast<double>(horizon));
  }
};

namespace detail {

struct ConfigDoc {
  // (section, key) -> (value, line)
  std::map<std::pair<std::string, std::string>, std::pair<std::string, int>>
      entries;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline ConfigDoc parse_doc(const std::string& text) {
  ConfigDoc doc;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("line " + std::to_string(lineno) +
                         ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(lineno) +
                       ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ParseError("line " + std::to_string(lineno) + ": empty key or value");
    if (!doc.entries.emplace(std::make_pair(section, key),
                             std::make_pair(value, lineno))
             .second)
      throw ParseError("line " + std::to_string(lineno) + ": duplicate key '" +
                       key + "' in [" + section + "]");
  }
  return doc;
}

class ConfigReader {
 public:
  explicit ConfigReader(ConfigDoc doc) : doc_(std::move(doc)) {}

  std::optional<std::string> take(const std::string& section,
                                  const std::string& key) {
    auto it = doc_.entries.find({section, key});
    if (it == doc_.entries.end()) return std::nullopt;
    std::string v = it->second.first;
    doc_.entries.erase(it);
    return v;
  }

  template <typename T, typename Parse>
  std::optional<T> take_as(const std::string& section, const std::string& key,
                           Parse parse) {
    auto raw = take(section, key);
    if (!raw) return std::nullopt;
    try {
      return parse(*raw);
    } catch (...) {
      throw ParseError("field " + section + "." + key + ": bad value '" + *raw +
                       "'");
    }
  }

  std::optional<long> take_int(const std::string& s, const std::string& k) {
    return take_as<long>(s, k, [](const std::string& v) {
      size_t pos = 0;
      long r = std::stol(v, &pos);
      if (pos != v.size()) throw ParseError("");
      return r;
    });
  }

  std::optional<double> take_double(const std::string& s, const std::string& k) {
    return take_as<double>(s, k, [](const std::string& v) {
      size_t pos = 0;
      double r = std::stod(v, &pos);
      if (pos != v.size()) throw ParseError("");
      return r;
    });
  }

  std::optional<bool> take_bool(const std::string& s, const std::string& k) {
    return take_as<bool>(s, k, [](const std::string& v) {
      if (v == "on" || v == "true" || v == "1") return true;
      if (v == "off" || v == "false" || v == "0") return false;
      throw ParseError("");
    });
  }

  void ensure_empty() const {
    if (doc_.entries.empty()) return;
    const auto& it = *doc_.entries.begin();
    throw ParseError("line " + std::to_string(it.second.second) +
                     ": unknown field " + it.first.first + "." +
                     it.first.second);
  }

 private:
  ConfigDoc doc_;
};

}  // namespace detail

inline ExperimentConfig load_config(const std::string& text) {
  detail::ConfigReader r(detail::parse_doc(text));
  ExperimentConfig cfg;

  if (auto v = r.take("topology", "kind")) {
    if (*v == "mnet") cfg.topology = TopologyKind::kMesh;
    else if (*v == "snet") cfg.topology = TopologyKind::kStar;
    else throw ParseError("field topology.kind: unknown kind '" + *v + "'");
  }
  if (auto v = r.take_int("topology", "agents")) cfg.n_agents = static_cast<int>(*v);
  if (auto v = r.take_double("topology", "radius")) cfg.radius = *v;
  if (auto v = r.take_int("topology", "seed")) cfg.topology_seed = static_cast<std::uint64_t>(*v);

  if (auto v = r.take("problem", "kind")) {
    if (*v == "sigmoid_log") cfg.problem = ProblemKind::kSigmoidLog;
    else if (*v == "sparse_quadratic") cfg.problem = ProblemKind::kSparseQuadratic;
    else throw ParseError("field problem.kind: unknown kind '" + *v + "'");
  }
  if (auto v = r.take_int("problem", "seed")) cfg.problem_seed = static_cast<std::uint64_t>(*v);
  if (auto v = r.take_int("problem", "dim")) cfg.dim = static_cast<int>(*v);
  if (auto v = r.take_double("problem", "l1_radius")) cfg.l1_radius = *v;

  if (auto v = r.take("algorithm", "name")) {
    if (*v == "zone_m") cfg.algorithm = AlgorithmKind::kZoneM;
    else if (*v == "zone_m_inc") cfg.algorithm = AlgorithmKind::kZoneMInc;
    else if (*v == "zone_s") cfg.algorithm = AlgorithmKind::kZoneS;
    else if (*v == "zone_s_inc") cfg.algorithm = AlgorithmKind::kZoneSInc;
    else if (*v == "rgf") cfg.algorithm = AlgorithmKind::kRgf;
    else if (*v == "zo_gd") cfg.algorithm = AlgorithmKind::kZoGd;
    else if (*v == "zo_sgd") cfg.algorithm = AlgorithmKind::kZoSgd;
    else throw ParseError("field algorithm.name: unknown algorithm '" + *v + "'");
  }
  if (auto v = r.take_double("algorithm", "rho")) cfg.rho = *v;
  if (auto v = r.take_double("algorithm", "c")) cfg.c = *v;
  if (auto v = r.take_double("algorithm", "stepsize")) cfg.stepsize = *v;
  if (auto v = r.take("algorithm", "mode")) {
    if (*v == "matrix") cfg.distributed = false;
    else if (*v == "distributed") cfg.distributed = true;
    else throw ParseError("field algorithm.mode: unknown mode '" + *v + "'");
  }

  if (auto v = r.take_int("run", "horizon")) cfg.horizon = *v;
  if (auto v = r.take_int("run", "batch")) cfg.batch = static_cast<int>(*v);
  if (auto v = r.take_double("run", "mu")) cfg.mu = *v;
  if (auto v = r.take_double("run", "noise_std")) cfg.noise_std = *v;
  if (auto v = r.take("run", "noise_coupling")) {
    if (*v == "independent") cfg.coupling = NoiseCoupling::kIndependent;
    else if (*v == "shared") cfg.coupling = NoiseCoupling::kShared;
    else throw ParseError("field run.noise_coupling: unknown value '" + *v + "'");
  }
  if (auto v = r.take_int("run", "trials")) cfg.trials = static_cast<int>(*v);
  if (auto v = r.take_int("run", "stride")) cfg.stride = static_cast<int>(*v);
  if (auto v = r.take("run", "output")) cfg.output = *v;
  if (auto v = r.take_int("run", "seed")) cfg.master_seed = static_cast<std::uint64_t>(*v);
  if (auto v = r.take_bool("run", "timings")) cfg.timings = *v;
  if (auto v = r.take_int("run", "budget")) cfg.budget = *v;
  r.ensure_empty();

  if (cfg.n_agents < 1) throw ValidationError("topology.agents must be >= 1");
  if (cfg.horizon < 1) throw ValidationError("run.horizon must be >= 1");
  if (cfg.trials < 1) throw ValidationError("run.trials must be >= 1");
  if (cfg.stride < 1) throw ValidationError("run.stride must be >= 1");
  if (cfg.noise_std < 0) throw ValidationError("run.noise_std must be >= 0");
  if (cfg.topology == TopologyKind::kMesh && cfg.radius <= 0.0)
    throw ValidationError("topology.radius must be > 0 for mesh networks");
  const bool mesh_algo = cfg.algorithm == AlgorithmKind::kZoneM ||
                         cfg.algorithm == AlgorithmKind::kZoneMInc ||
                         cfg.algorithm == AlgorithmKind::kRgf;
  if (mesh_algo && cfg.topology != TopologyKind::kMesh)
    throw ValidationError("mesh algorithms need topology.kind = mnet");
  if (!mesh_algo && cfg.topology != TopologyKind::kStar)
    throw ValidationError("star/centralized algorithms need topology.kind = snet");
  if (cfg.problem == ProblemKind::kSigmoidLog && cfg.dim != 1)
    cfg.dim = 1;
  if (cfg.problem == ProblemKind::kSparseQuadratic && cfg.l1_radius <= 0.0)
    throw ValidationError("problem.l1_radius must be > 0");
  return cfg;
}

// Resolved configuration echoed back in the same grammar.
inline std::string render_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[topology]\n";
  os << "kind = " << (cfg.topology == TopologyKind::kMesh ? "mnet" : "snet") << "\n";
  os << "agents = " << cfg.n_agents << "\n";
  if (cfg.topology == TopologyKind::kMesh) os << "radius = " << cfg.radius << "\n";
  os << "seed = " << cfg.topology_seed << "\n\n";
  os << "[problem]\n";
  os << "kind = "
     << (cfg.problem == ProblemKind::kSigmoidLog ? "sigmoid_log"
                                                 : "sparse_quadratic")
     << "\n";
  os << "seed = " << cfg.problem_seed << "\n";
  if (cfg.problem == ProblemKind::kSparseQuadratic) {
    os << "dim = " << cfg.dim << "\n";
    os << "l1_radius = " << cfg.l1_radius << "\n";
  }
  os << "\n[algorithm]\n";
  os << "name = " << algorithm_name(cfg.algorithm) << "\n";
  if (cfg.rho > 0.0) os << "rho = " << cfg.rho << "\n";
  if (cfg.c > 0.0) os << "c = " << cfg.c << "\n";
  if (cfg.stepsize > 0.0) os << "stepsize = " << cfg.stepsize << "\n";
  if (cfg.algorithm == AlgorithmKind::kZoneM ||
      cfg.algorithm == AlgorithmKind::kZoneMInc)
    os << "mode = " << (cfg.distributed ? "distributed" : "matrix") << "\n";
  os << "\n[run]\n";
  os << "horizon = " << cfg.horizon << "\n";
  os << "batch = " << cfg.resolved_batch() << "\n";
  os << "mu = " << cfg.resolved_mu() << "\n";
  os << "noise_std = " << cfg.noise_std << "\n";
  os << "noise_coupling = "
     << (cfg.coupling == NoiseCoupling::kIndependent ? "independent" : "shared")
     << "\n";
  os << "trials = " << cfg.trials << "\n";
  os << "stride = " << cfg.stride << "\n";
  os << "output = " << cfg.output << "\n";
  os << "seed = " << cfg.master_seed << "\n";
  os << "timings = " << (cfg.timings ? "on" : "off") << "\n";
  if (cfg.budget > 0) os << "budget = " << cfg.budget << "\n";
  return os.str();
}

}  // namespace zonesim
