#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qempc/attack.hpp"
#include "qempc/controller_io.hpp"
#include "qempc/csv.hpp"
#include "qempc/errors.hpp"
#include "qempc/metrics.hpp"
#include "qempc/mpqp.hpp"
#include "qempc/protocol.hpp"
#include "qempc/simulation.hpp"

namespace qempc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Raw command-line values; unset options fall back to the config file, then
// to built-in defaults.
struct Flags {
  std::string config;
  std::string controller;
  std::string backend;
  std::string out;
  std::string sweep;
  std::string x0;
  std::optional<std::uint64_t> seed_keys, seed_quant, seed_attack, seed_paillier;
  std::optional<double> epsilon_q;
  std::optional<std::size_t> w_b, steps, trials;
  std::optional<unsigned> w, p, modulus_bits, rho;
  std::optional<int> gamma, delta;
};

struct RunConfig {
  Scenario scenario = double_integrator_benchmark();
  std::optional<fs::path> controller_path;
  std::optional<BackendKind> backend;
  std::uint64_t seed_attack = 7;
  BackendConfig params;
  std::optional<double> epsilon_q;
  fs::path out_dir = ".";
  std::size_t trials = 200;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_config(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": malformed JSON at byte " + std::to_string(e.byte));
  }
}

template <typename T>
void take(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

// Applies the accuracy target: derives (delta, w, p) unless given, and
// rejects explicit values that miss it.
void apply_epsilon(RunConfig& cfg, bool delta_set, bool w_set, bool p_set) {
  if (!cfg.epsilon_q) return;
  const double eps = *cfg.epsilon_q;
  AccuracyAlignment a;
  try {
    a = align_accuracy(eps, cfg.params.rho);
  } catch (const InvalidProblem& e) {
    throw ConfigError(e.what());
  }
  BackendConfig& p = cfg.params;
  if (!delta_set) p.delta = a.delta;
  if (!w_set) p.w = static_cast<unsigned>(a.w);
  if (!p_set) p.p = std::max<unsigned>(p.p, static_cast<unsigned>(a.p_min));
  if (std::pow(static_cast<double>(p.rho), -p.delta) > eps) {
    throw ConfigError("delta " + std::to_string(p.delta) + " misses the accuracy target");
  }
  if (std::ldexp(1.0, -static_cast<int>(p.w)) > eps) {
    throw ConfigError("w " + std::to_string(p.w) + " misses the accuracy target");
  }
  if (p.p < p.w) throw ConfigError("p must be at least w");
}

// The config file is either a scenario or a run config with a "scenario"
// entry (path relative to the file, or an inline object).
RunConfig resolve(const Flags& flags) {
  RunConfig cfg;
  cfg.params.modulus_bits = 2048;
  cfg.params.delta = 16;
  bool delta_set = false, w_set = false, p_set = false;

  if (!flags.config.empty()) {
    const fs::path path = flags.config;
    const std::string text = read_file(path);
    const json doc = parse_config(text, path.string());
    if (doc.is_object() && doc.contains("scenario")) {
      try {
        const json& sc = doc.at("scenario");
        if (sc.is_string()) {
          cfg.scenario = load_scenario(path.parent_path() / sc.get<std::string>());
        } else {
          cfg.scenario = scenario_from_json(sc.dump(), path.string());
        }
        if (doc.contains("controller")) {
          cfg.controller_path = path.parent_path() / doc.at("controller").get<std::string>();
        }
        if (doc.contains("backend")) cfg.backend = parse_backend(doc.at("backend").get<std::string>());
        if (doc.contains("output")) cfg.out_dir = doc.at("output").get<std::string>();
        if (doc.contains("seeds")) {
          const json& s = doc.at("seeds");
          take(s, "keys", cfg.params.seed_keys);
          take(s, "quantizer", cfg.params.seed_quant);
          take(s, "attack", cfg.seed_attack);
          take(s, "paillier", cfg.params.seed_paillier);
        }
        if (doc.contains("parameters")) {
          const json& p = doc.at("parameters");
          take(p, "w_b", cfg.params.w_b);
          take(p, "rho", cfg.params.rho);
          take(p, "gamma", cfg.params.gamma);
          take(p, "L", cfg.params.modulus_bits);
          delta_set = p.contains("delta");
          w_set = p.contains("w");
          p_set = p.contains("p");
          take(p, "delta", cfg.params.delta);
          take(p, "w", cfg.params.w);
          take(p, "p", cfg.params.p);
          if (p.contains("epsilon_q")) cfg.epsilon_q = p.at("epsilon_q").get<double>();
          take(p, "trials", cfg.trials);
        }
      } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
      }
    } else {
      cfg.scenario = scenario_from_json(text, path.string());
    }
  }

  if (!flags.controller.empty()) cfg.controller_path = flags.controller;
  if (!flags.backend.empty()) cfg.backend = parse_backend(flags.backend);
  if (!flags.out.empty()) cfg.out_dir = flags.out;
  if (flags.seed_keys) cfg.params.seed_keys = *flags.seed_keys;
  if (flags.seed_quant) cfg.params.seed_quant = *flags.seed_quant;
  if (flags.seed_paillier) cfg.params.seed_paillier = *flags.seed_paillier;
  if (flags.seed_attack) cfg.seed_attack = *flags.seed_attack;
  if (flags.w_b) cfg.params.w_b = *flags.w_b;
  if (flags.rho) cfg.params.rho = *flags.rho;
  if (flags.gamma) cfg.params.gamma = *flags.gamma;
  if (flags.modulus_bits) cfg.params.modulus_bits = *flags.modulus_bits;
  if (flags.delta) cfg.params.delta = *flags.delta, delta_set = true;
  if (flags.w) cfg.params.w = *flags.w, w_set = true;
  if (flags.p) cfg.params.p = *flags.p, p_set = true;
  if (flags.epsilon_q) cfg.epsilon_q = *flags.epsilon_q;
  if (flags.steps) cfg.scenario.steps = *flags.steps;
  if (flags.trials) cfg.trials = *flags.trials;
  if (!flags.x0.empty()) {
    std::vector<double> vals;
    std::stringstream ss(flags.x0);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        vals.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ConfigError("--x0: '" + item + "' is not a number");
      }
    }
    if (static_cast<Eigen::Index>(vals.size()) != cfg.scenario.sys.n()) {
      throw ConfigError("--x0 needs " + std::to_string(cfg.scenario.sys.n()) + " values");
    }
    cfg.scenario.initial_states = {Eigen::Map<Vector>(vals.data(), cfg.scenario.sys.n())};
  }
  apply_epsilon(cfg, delta_set, w_set, p_set);
  return cfg;
}

Vector reference_of(const Scenario& sc) {
  return sc.reference.size() ? sc.reference : Vector::Zero(sc.sys.n());
}

PwaController synthesize(const Scenario& sc, EnumerationStats* stats = nullptr) {
  return enumerate_regions(condense(sc.sys, sc.mpc), {}, stats);
}

PwaController controller_for(const RunConfig& cfg) {
  if (cfg.controller_path) return load_controller(*cfg.controller_path);
  return synthesize(cfg.scenario);
}

fs::path output_file(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return cfg.out_dir / name;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

int cmd_synthesize(const RunConfig& cfg, std::ostream& out) {
  EnumerationStats stats;
  const PwaController ctrl = synthesize(cfg.scenario, &stats);
  const fs::path path = output_file(cfg, "controller.json");
  save_controller(ctrl, path);

  std::vector<double> radii;
  for (const auto& region : ctrl.regions) radii.push_back(chebyshev_center(region.poly).radius);
  std::sort(radii.begin(), radii.end());
  out << "regions: " << ctrl.size() << "\n";
  out << "chebyshev radius min/median/max: " << csv::format(radii.front()) << " "
      << csv::format(radii[radii.size() / 2]) << " " << csv::format(radii.back()) << "\n";
  out << "active sets examined: " << stats.candidates << "\n";
  out << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const BackendKind kind = cfg.backend.value_or(BackendKind::kQe);
  const Vector x_ref = reference_of(cfg.scenario);
  const PwaController ctrl = shift_controller(controller_for(cfg), cfg.scenario.sys, x_ref);
  auto backend = make_backend(kind, ctrl, cfg.params);
  const Vector& x0 = cfg.scenario.initial_states.front();
  const Trajectory traj =
      run_closed_loop(cfg.scenario.sys, ctrl, *backend, x0, cfg.scenario.steps, x_ref);

  const fs::path path = output_file(cfg, "trajectory_" + std::string(backend_name(kind)) + ".csv");
  std::ofstream file = open_output(path);
  write_trajectory_csv(traj, cfg.scenario.sys, file);

  if (traj.records.empty()) {
    err << "fault: " << traj.fault.value_or("no steps") << "\n";
    return 1;
  }
  const Mismatch mm = input_mismatch(traj);
  out << "backend=" << backend_name(kind) << " steps=" << traj.records.size()
      << " rmse=" << csv::format(tracking_rmse(traj)) << " mismatch_mean=" << csv::format(mm.mean)
      << " mismatch_max=" << csv::format(mm.max) << "\n";
  out << "wrote " << path.string() << "\n";
  if (traj.fault) {
    err << "fault: " << *traj.fault << "\n";
    return 1;
  }
  return 0;
}

struct SweepPoint {
  std::string param;  // empty for the base configuration
  std::string value;
  BackendConfig params;
};

// "key=v1,v2[;key=...]" with keys w, w_b, p, L, rho, gamma, delta, epsilon_q.
std::vector<SweepPoint> parse_sweep(const std::string& spec, const BackendConfig& base) {
  std::vector<SweepPoint> points;
  if (spec.empty()) {
    points.push_back({"", "", base});
    return points;
  }
  std::stringstream groups(spec);
  std::string group;
  while (std::getline(groups, group, ';')) {
    const auto eq = group.find('=');
    if (eq == std::string::npos) throw ConfigError("--sweep: expected key=values in '" + group + "'");
    const std::string key = group.substr(0, eq);
    std::stringstream values(group.substr(eq + 1));
    std::string v;
    while (std::getline(values, v, ',')) {
      SweepPoint pt{key, v, base};
      BackendConfig& p = pt.params;
      try {
        if (key == "w") p.w = static_cast<unsigned>(std::stoul(v));
        else if (key == "w_b") p.w_b = std::stoul(v);
        else if (key == "p") p.p = static_cast<unsigned>(std::stoul(v));
        else if (key == "L") p.modulus_bits = static_cast<unsigned>(std::stoul(v));
        else if (key == "rho") p.rho = static_cast<unsigned>(std::stoul(v));
        else if (key == "gamma") p.gamma = std::stoi(v);
        else if (key == "delta") p.delta = std::stoi(v);
        else if (key == "epsilon_q") {
          const AccuracyAlignment a = align_accuracy(std::stod(v), p.rho);
          p.delta = a.delta;
          p.w = static_cast<unsigned>(a.w);
          p.p = std::max(p.p, static_cast<unsigned>(a.p_min));
        } else {
          throw ConfigError("--sweep: unknown key '" + key + "'");
        }
      } catch (const std::invalid_argument&) {
        throw ConfigError("--sweep: bad value '" + v + "' for " + key);
      } catch (const InvalidProblem& e) {
        throw ConfigError(std::string("--sweep: ") + e.what());
      }
      points.push_back(std::move(pt));
    }
  }
  return points;
}

int cmd_bench(const RunConfig& cfg, const std::string& sweep, std::ostream& out) {
  const Vector x_ref = reference_of(cfg.scenario);
  const PwaController ctrl = shift_controller(controller_for(cfg), cfg.scenario.sys, x_ref);
  std::vector<BackendKind> kinds = {BackendKind::kPlaintext, BackendKind::kQe,
                                    BackendKind::kQeQuantized, BackendKind::kPaillier};
  if (cfg.backend) kinds = {*cfg.backend};
  const std::vector<SweepPoint> points = parse_sweep(sweep, cfg.params);

  const fs::path metrics_path = output_file(cfg, "bench_metrics.csv");
  const fs::path timing_path = output_file(cfg, "bench_timing.csv");
  std::ofstream metrics_file = open_output(metrics_path);
  std::ofstream timing_file = open_output(timing_path);
  csv::Writer mw(metrics_file);
  csv::Writer tw(timing_file);
  for (const char* h : {"backend", "param", "value", "w_b", "w", "p", "L", "rho", "gamma",
                        "delta", "runs", "cycles", "faults", "rmse", "mismatch_mean",
                        "mismatch_max", "payload_s2c", "payload_c2a", "payload_total",
                        "wire_total", "enc", "con", "dec", "sums", "he_enc", "he_dec",
                        "he_add", "he_mul", "b_K", "model_c_he", "model_c_qe", "saturations"}) {
    mw.field(h);
  }
  mw.end_row();
  for (const char* h : {"backend", "param", "value", "cycles", "sensor_s", "cloud_s",
                        "actuator_s", "total_s"}) {
    tw.field(h);
  }
  tw.end_row();

  for (const SweepPoint& pt : points) {
    for (BackendKind kind : kinds) {
      std::size_t cycles = 0, faults = 0;
      double rmse_sum = 0.0, mm_sum = 0.0, mm_max = 0.0;
      std::size_t mm_count = 0;
      LinkBits payload, wire;
      PrimitiveCounts counts;
      CostModel model;
      std::uint64_t saturations = 0;
      PartyTimes times;
      for (const Vector& x0 : cfg.scenario.initial_states) {
        auto backend = make_backend(kind, ctrl, pt.params);
        const Trajectory traj =
            run_closed_loop(cfg.scenario.sys, ctrl, *backend, x0, cfg.scenario.steps, x_ref);
        if (traj.fault) ++faults;
        if (traj.records.empty()) continue;
        rmse_sum += tracking_rmse(traj);
        const Mismatch mm = input_mismatch(traj);
        mm_sum += mm.mean;
        mm_max = std::max(mm_max, mm.max);
        ++mm_count;
        for (const auto& rec : traj.records) {
          const CycleMetrics& cm = rec.metrics;
          payload.sensor_to_cloud += cm.payload.sensor_to_cloud;
          payload.cloud_to_actuator += cm.payload.cloud_to_actuator;
          wire.sensor_to_cloud += cm.wire.sensor_to_cloud;
          wire.cloud_to_actuator += cm.wire.cloud_to_actuator;
          saturations += cm.saturations;
          times.sensor += cm.times.sensor;
          times.cloud += cm.times.cloud;
          times.actuator += cm.times.actuator;
          counts = cm.counts;
          model = cm.model;
          ++cycles;
        }
      }
      const double c = cycles ? static_cast<double>(cycles) : 1.0;
      const double runs = mm_count ? static_cast<double>(mm_count) : 1.0;
      const BackendConfig& p = pt.params;
      mw.field(backend_name(kind)).field(pt.param).field(pt.value);
      mw.field(static_cast<std::uint64_t>(p.w_b)).field(p.w).field(p.p).field(p.modulus_bits);
      mw.field(p.rho).field(p.gamma).field(p.delta);
      mw.field(static_cast<std::uint64_t>(cfg.scenario.initial_states.size()));
      mw.field(static_cast<std::uint64_t>(cycles)).field(static_cast<std::uint64_t>(faults));
      mw.field(rmse_sum / runs).field(mm_sum / runs).field(mm_max);
      mw.field(static_cast<double>(payload.sensor_to_cloud) / c);
      mw.field(static_cast<double>(payload.cloud_to_actuator) / c);
      mw.field(static_cast<double>(payload.total()) / c);
      mw.field(static_cast<double>(wire.total()) / c);
      mw.field(counts.enc).field(counts.con).field(counts.dec).field(counts.sums);
      mw.field(counts.he_enc).field(counts.he_dec).field(counts.he_add).field(counts.he_mul);
      mw.field(library_gain_bits(ctrl, p.rho, p.delta));
      mw.field(model.he_total).field(model.qe_total).field(saturations);
      mw.end_row();

      tw.field(backend_name(kind)).field(pt.param).field(pt.value);
      tw.field(static_cast<std::uint64_t>(cycles));
      tw.field(times.sensor / c).field(times.cloud / c).field(times.actuator / c);
      tw.field(times.total() / c);
      tw.end_row();
      out << backend_name(kind) << (pt.param.empty() ? "" : " " + pt.param + "=" + pt.value)
          << ": payload/cycle=" << csv::format(static_cast<double>(payload.total()) / c)
          << " bits, time/cycle=" << csv::format(times.total() / c) << " s\n";
    }
  }
  out << "wrote " << metrics_path.string() << " and " << timing_path.string() << "\n";
  return 0;
}

int cmd_attack(const RunConfig& cfg, std::ostream& out) {
  const PwaController ctrl = controller_for(cfg);
  attack::AttackConfig ac;
  ac.trials = cfg.trials;
  ac.horizon = cfg.scenario.steps;
  ac.seed = cfg.seed_attack;
  ac.backend = cfg.params;
  ac.backends = {BackendKind::kPlaintext, BackendKind::kPaillier, BackendKind::kQe,
                 BackendKind::kQeQuantized};
  if (cfg.backend && *cfg.backend != BackendKind::kPlaintext) {
    ac.backends = {BackendKind::kPlaintext, *cfg.backend};
  }
  const attack::AttackTable table = attack::run_attack_table(cfg.scenario, ctrl, ac);
  const fs::path path = output_file(cfg, "attack.csv");
  std::ofstream file = open_output(path);
  attack::write_attack_csv(table, file);
  attack::write_attack_csv(table, out);
  out << "wrote " << path.string() << "\n";
  return 0;
}

void add_common(CLI::App& sub, Flags& f) {
  sub.add_option("--config", f.config, "Scenario or run-config JSON");
  sub.add_option("--controller", f.controller, "Controller JSON from 'synthesize'");
  sub.add_option("--backend", f.backend, "plaintext | qe | qe_quantized | paillier");
  sub.add_option("--out", f.out, "Output directory");
  sub.add_option("--seed-keys", f.seed_keys, "Key stream seed");
  sub.add_option("--seed-quant", f.seed_quant, "Quantizer seed");
  sub.add_option("--seed-attack", f.seed_attack, "Attack sampling seed");
  sub.add_option("--seed-paillier", f.seed_paillier, "Paillier key and nonce seed");
  sub.add_option("--epsilon-q", f.epsilon_q, "Accuracy target; derives delta, w, p");
  sub.add_option("--w-b", f.w_b, "Bits per key coefficient");
  sub.add_option("--w", f.w, "Quantizer word bits");
  sub.add_option("--p", f.p, "QE precision bits in the cost model");
  sub.add_option("--L", f.modulus_bits, "Paillier modulus bits");
  sub.add_option("--rho", f.rho, "Fixed-point base");
  sub.add_option("--gamma", f.gamma, "Fixed-point range exponent");
  sub.add_option("--delta", f.delta, "Fixed-point precision exponent");
  sub.add_option("--steps", f.steps, "Closed-loop horizon");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explicit MPC over encrypted channels"};
  app.require_subcommand(1);
  Flags f;
  CLI::App* synth = app.add_subcommand("synthesize", "Enumerate critical regions and save the law");
  CLI::App* run_cmd = app.add_subcommand("run", "Closed loop under one backend; trajectory CSV");
  CLI::App* bench = app.add_subcommand("bench", "Metrics per backend and parameter point");
  CLI::App* atk = app.add_subcommand("attack", "Least-squares eavesdropper table");
  for (CLI::App* sub : {synth, run_cmd, bench, atk}) add_common(*sub, f);
  run_cmd->add_option("--x0", f.x0, "Initial state, comma separated");
  bench->add_option("--sweep", f.sweep, "key=v1,v2[;key=...]");
  atk->add_option("--trials", f.trials, "Trials per noise setting");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    const RunConfig cfg = resolve(f);
    if (*synth) return cmd_synthesize(cfg, out);
    if (*run_cmd) return cmd_run(cfg, out, err);
    if (*bench) return cmd_bench(cfg, f.sweep, out);
    if (*atk) return cmd_attack(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace qempc::cli
