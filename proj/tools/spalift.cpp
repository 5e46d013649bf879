// Command line front end: flatten models, analyze transitions, lift flat-rate
// modifications back into components, verify repairs, generate polling systems.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "spalift/io.hpp"
#include "spalift/lifting.hpp"
#include "spalift/polling.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_file(path, text);
}

spalift::FlattenOptions flatten_options() {
  spalift::FlattenOptions opts;
  if (const char* env = std::getenv("SPALIFT_STATE_BUDGET")) {
    char* end = nullptr;
    auto v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && v > 0) opts.max_states = v;
  }
  return opts;
}

std::string names(const spalift::SpaSystem& sys, const std::vector<int>& leaves) {
  if (leaves.empty()) return "(none)";
  std::string out;
  for (int l : leaves) {
    if (!out.empty()) out += " ";
    out += sys.process(l).name;
  }
  return out;
}

std::string combo_text(const spalift::SpaSystem& sys, const spalift::CombinationSet& combos) {
  if (combos.empty()) return "(infeasible)";
  std::string out = "{";
  for (std::size_t i = 0; i < combos.size(); ++i) {
    out += i ? ", {" : " {";
    for (std::size_t j = 0; j < combos[i].size(); ++j) {
      if (j) out += " ";
      out += sys.process(combos[i][j]).name;
    }
    out += "}";
  }
  return out + " }";
}

int cmd_flatten(const std::string& model_path, const std::string& out_path) {
  auto sys = spalift::parse_system(read_file(model_path));
  auto flat = spalift::flatten(sys, flatten_options());
  emit(out_path, spalift::export_flat(flat));
  std::cerr << flat.states.size() << " states, " << flat.transitions.size()
            << " transitions\n";
  return 0;
}

int cmd_analyze(const std::string& model_path, const std::string& key_text,
                const std::string& scope_action) {
  auto sys = spalift::parse_system(read_file(model_path));
  auto flat = spalift::flatten(sys, flatten_options());

  if (!scope_action.empty()) {
    std::cout << "scopes of " << scope_action << ":\n";
    for (int node : spalift::action_scopes(sys, scope_action)) {
      auto leaves = sys.leaves_under(node);
      std::cout << "  node {" << names(sys, leaves) << "}"
                << (sys.node(node).is_leaf() ? " (leaf)" : "") << "\n";
    }
    if (key_text.empty()) return 0;
  }

  auto key = spalift::parse_transition_key(key_text);
  const auto& t = flat.at(key);
  auto sets = spalift::analyze_transition(sys, flat, t);
  auto combos = spalift::rslc(sys, flat, t, sets.involved.scope_root);

  std::cout << "transition:    " << spalift::format_key(key) << "  rate " << t.rate << "\n"
            << "derivations:   " << t.derivations.size() << "\n"
            << "movers:        " << names(sys, sets.movers) << "\n"
            << "stable:        " << names(sys, sets.stable) << "\n"
            << "must-stable:   " << names(sys, sets.must_stable) << "\n"
            << "participating: " << names(sys, sets.participating) << "\n"
            << "involved:      " << names(sys, sets.involved.involved) << "\n"
            << "  syntactic:   " << names(sys, sets.involved.syntactic) << "\n"
            << "scope root:    {" << names(sys, sys.leaves_under(sets.involved.scope_root))
            << "}\n"
            << "combinations:  " << combo_text(sys, combos) << "\n";
  return 0;
}

int cmd_lift(const std::string& model_path, const std::string& factors_path,
             const std::string& out_path, const std::string& report_path,
             const spalift::LiftOptions& opts) {
  auto sys = spalift::parse_system(read_file(model_path));
  auto lift_opts = opts;
  lift_opts.flatten = flatten_options();
  auto flat = spalift::flatten(sys, lift_opts.flatten);
  auto tmod = spalift::parse_factors(read_file(factors_path), flat);

  auto result = spalift::rate_lift(sys, flat, tmod, lift_opts);

  for (const auto& b : result.report.batches) {
    std::cerr << "batch " << b.transition << " -> part " << b.part << " ("
              << b.handled << " handled)\n";
    for (const auto& n : b.notes) std::cerr << "  " << n << "\n";
  }
  std::cerr << "verify: " << (result.report.verify.pass ? "pass" : "FAIL")
            << " (max rel error " << result.report.verify.max_rel_error << ")\n";

  if (!report_path.empty()) write_file(report_path, spalift::report_to_json(result.report));
  if (result.success) {
    emit(out_path, spalift::serialize_system(result.system));
    std::cerr << "lift succeeded\n";
    return 0;
  }
  std::cerr << "lift failed\n";
  return 1;
}

int cmd_verify(const std::string& model_path, const std::string& factors_path,
               const std::string& repaired_path, double tol) {
  auto sys = spalift::parse_system(read_file(model_path));
  auto fopts = flatten_options();
  auto flat = spalift::flatten(sys, fopts);
  auto tmod = spalift::parse_factors(read_file(factors_path), flat);
  auto repaired = spalift::parse_system(read_file(repaired_path));

  auto report = spalift::verify_repair(flat, tmod, repaired, tol, fopts);
  for (const auto& issue : report.issues) std::cerr << issue << "\n";
  std::cout << (report.pass ? "pass" : "FAIL") << " (max rel error "
            << report.max_rel_error << ")\n";
  return report.pass ? 0 : 1;
}

int cmd_bench_polling(int n, std::uint64_t seed, const std::string& factors_mode,
                      const std::string& model_out, const std::string& factors_out,
                      int trend_from, int trend_to, const std::string& csv_out,
                      const spalift::LiftOptions& opts) {
  auto fopts = flatten_options();

  if (trend_to >= trend_from && trend_from >= 2) {
    std::ostringstream csv;
    csv << "n,states,transitions,loop1a,seconds\n";
    for (int k = trend_from; k <= trend_to; ++k) {
      auto st = spalift::polling_stats(k, fopts);
      csv << st.n << "," << st.states << "," << st.transitions << ","
          << st.loop1a_transitions << "," << st.flatten_seconds << "\n";
      std::cerr << "n=" << st.n << ": " << st.states << " states, " << st.transitions
                << " transitions, " << st.flatten_seconds << "s\n";
    }
    emit(csv_out, csv.str());
    return 0;
  }

  auto sys = spalift::make_polling_system(n);
  if (!model_out.empty()) emit(model_out, spalift::serialize_system(sys));

  auto st = spalift::polling_stats(n, fopts);
  std::cout << "n=" << st.n << ": " << st.states << " states, " << st.transitions
            << " transitions, " << st.loop1a_transitions << " loop1a transitions, "
            << st.flatten_seconds << "s flatten\n";

  if (factors_mode.empty() && factors_out.empty()) return 0;
  if (!factors_mode.empty() && factors_mode != "auto")
    throw std::runtime_error("only --factors auto is supported");

  auto lift_opts = opts;
  lift_opts.flatten = fopts;
  auto flat = spalift::flatten(sys, fopts);
  auto tmod = spalift::make_polling_factors(sys, flat, seed);
  if (!factors_out.empty()) {
    std::ostringstream out;
    char buf[64];
    for (const auto& [key, factor] : tmod.entries()) {
      std::snprintf(buf, sizeof(buf), "%.17g", factor);
      out << spalift::format_key(key) << " : " << buf << "\n";
    }
    emit(factors_out, out.str());
  }
  if (factors_mode.empty()) return 0;

  auto t0 = std::chrono::steady_clock::now();
  auto result = spalift::rate_lift(sys, flat, tmod, lift_opts);
  double lift_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (const auto& b : result.report.batches) {
    std::cout << "part A: " << b.phase_a << "\n"
              << "part B: " << b.phase_b << "\n"
              << "part C: " << b.phase_c << "\n"
              << "part D: " << b.phase_d << "\n"
              << "settled by part " << b.part << ": " << b.equations << " equations, "
              << b.variables << " variables, solver " << b.solver << "\n";
  }
  std::cout << "lift " << (result.success ? "succeeded" : "FAILED") << " in " << lift_s
            << "s, verify " << (result.report.verify.pass ? "pass" : "FAIL")
            << " (max rel error " << result.report.verify.max_rel_error << ")\n";
  return result.success ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rate lifting for compositional stochastic models"};
  app.require_subcommand(1);

  std::string model_path, factors_path, repaired_path;
  std::string out_path, report_path, key_text, scope_action, csv_out = "-";
  std::string model_out, factors_out, factors_mode;
  spalift::LiftOptions lift_opts;
  double verify_tol = 1e-6;
  int n = 6, trend_from = 0, trend_to = -1;
  std::uint64_t seed = 1;

  auto* flat_cmd = app.add_subcommand("flatten", "compute the reachable flat transition system");
  flat_cmd->add_option("model", model_path, "model file")->required();
  flat_cmd->add_option("-o,--out", out_path, "output file ('-' for stdout)");

  auto* ana = app.add_subcommand("analyze", "structural sets of one flat transition");
  ana->add_option("model", model_path, "model file")->required();
  ana->add_option("-t,--transition", key_text, "transition key \"(s,..) -a-> (s,..)\"");
  ana->add_option("-a,--action", scope_action, "print the scopes of this action");

  auto* lift = app.add_subcommand("lift", "realise flat-rate factors by editing the components");
  lift->add_option("model", model_path, "model file")->required();
  lift->add_option("factors", factors_path, "factor file: one \"key : factor\" per line")
      ->required();
  lift->add_option("-o,--out", out_path, "repaired model output ('-' for stdout)");
  lift->add_option("--report", report_path, "write a JSON run report");
  lift->add_option("--tol", lift_opts.solver.tolerance, "solver residual tolerance");
  lift->add_option("--restarts", lift_opts.solver.restarts, "solver restarts");
  lift->add_option("--seed", lift_opts.solver.seed, "solver seed");
  lift->add_option("--verify-tol", lift_opts.verify_tolerance, "verification tolerance");

  auto* ver = app.add_subcommand("verify", "check a repaired model against the factors");
  ver->add_option("model", model_path, "original model file")->required();
  ver->add_option("factors", factors_path, "factor file")->required();
  ver->add_option("repaired", repaired_path, "repaired model file")->required();
  ver->add_option("--tol", verify_tol, "relative rate tolerance");

  auto* bench = app.add_subcommand("bench", "benchmark model generators and experiments");
  bench->require_subcommand(1);
  auto* poll = bench->add_subcommand("polling", "cyclic-server polling system");
  poll->add_option("--n", n, "number of stations")->check(CLI::Range(2, 64));
  poll->add_option("--factors", factors_mode, "'auto': plant factors and run the full lift");
  poll->add_option("--seed", seed, "factor generation seed");
  poll->add_option("--emit-model", model_out, "write the model ('-' for stdout)");
  poll->add_option("--emit-factors", factors_out, "write planted factors ('-' for stdout)");
  poll->add_option("--trend-from", trend_from, "first n of a size/time sweep");
  poll->add_option("--trend-to", trend_to, "last n of a size/time sweep");
  poll->add_option("--csv", csv_out, "sweep output CSV ('-' for stdout)");
  poll->add_option("--tol", lift_opts.solver.tolerance, "solver residual tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (flat_cmd->parsed()) return cmd_flatten(model_path, out_path);
    if (ana->parsed()) {
      if (key_text.empty() && scope_action.empty())
        throw std::runtime_error("analyze needs --transition or --action");
      return cmd_analyze(model_path, key_text, scope_action);
    }
    if (lift->parsed())
      return cmd_lift(model_path, factors_path, out_path, report_path, lift_opts);
    if (ver->parsed()) return cmd_verify(model_path, factors_path, repaired_path, verify_tol);
    if (poll->parsed())
      return cmd_bench_polling(n, seed, factors_mode, model_out, factors_out, trend_from,
                               trend_to, csv_out, lift_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
