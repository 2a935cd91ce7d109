// sptm: command-line front end for discovery, semantics, nets, distances and
// probability fitting of stochastic process trees.
//
// Exit codes: 0 success, 1 usage error, 2 data or evaluation error,
// 3 a check that ran but came out negative (check-equiv).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "spt/spt.hpp"

namespace {

using namespace spt;

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNegative = 3;

struct Output {
  std::string path;

  // Writes to the file when a path was given, to stdout otherwise.
  template <class F>
  void write(F&& f) const {
    if (path.empty() || path == "-") {
      f(std::cout);
      return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    f(out);
  }
};

EventLog load_log(const std::string& path, const std::string& format) {
  if (format == "auto") return read_log(path);
  std::ifstream in(path);
  if (!in) throw Error("cannot open log file '" + path + "'");
  return parse_log(in, format == "csv" ? LogFormat::csv : LogFormat::trace_list);
}

// Language files start with their deficit header; anything else is read as a log.
StochasticLanguage load_distribution(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string first;
  std::getline(in, first);
  if (first.rfind("# mass_deficit=", 0) == 0) return read_language(path);
  return log_to_sl(read_log(path));
}

void summary(std::ostream& out, const WorkflowNet& net, const char* comment) {
  out << comment << " transitions=" << net.transition_count() << " silent=" << net.silent_count() << '\n';
}

void print_net(std::ostream& out, const WorkflowNet& net, bool dot) {
  if (dot) {
    summary(out, net, "//");
    out << net_to_dot(net);
  } else {
    summary(out, net, "#");
    write_net(out, net);
  }
}

RemdVariant parse_variant(const std::string& v) {
  return v == "renormalize" ? RemdVariant::renormalize : RemdVariant::penalize;
}

const char* mode_name(EvalMode m) { return m == EvalMode::simulate ? "simulate" : "exact"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic process tree toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string log_path, log_format = "auto", tree_path, net_path, out_path, lang_a, lang_b;
  std::string policy = "uniform", mode = "auto", variant = "penalize", ground = "normalized";
  std::uint64_t seed = 0;
  std::size_t cmax = 8, n = 1000, max_len = 6, iters = 20, restarts = 1;
  std::optional<std::size_t> opt_cmax, opt_samples, max_length;
  unsigned workers = 1;
  bool dot = false, as_log = false, reduced = false, skip_loops = true;

  auto add_log = [&](CLI::App* c, bool required) {
    auto* o = c->add_option("--log", log_path, "Event log (trace list, or CSV with case,activity columns)");
    if (required) o->required();
    c->add_option("--log-format", log_format, "auto (by extension), trace or csv")
        ->check(CLI::IsMember({"auto", "trace", "csv"}));
  };
  auto add_tree = [&](CLI::App* c) {
    return c->add_option("--tree", tree_path, "Process tree file");
  };
  auto add_out = [&](CLI::App* c) { c->add_option("-o,--out", out_path, "Output file (default stdout)"); };

  auto* discover_cmd = app.add_subcommand("discover", "Mine a process tree from a log");
  add_log(discover_cmd, true);
  discover_cmd->add_flag("--dot", dot, "Print Graphviz instead of tree text");
  add_out(discover_cmd);

  auto* annotate_cmd = app.add_subcommand("annotate", "Attach probabilities to a plain tree");
  add_tree(annotate_cmd)->required();
  annotate_cmd->add_option("--policy", policy, "uniform or random")->check(CLI::IsMember({"uniform", "random"}));
  annotate_cmd->add_option("--seed", seed, "Seed for the random policy");
  add_out(annotate_cmd);

  auto* language_cmd = app.add_subcommand("language", "Truncated stochastic language of a tree");
  add_tree(language_cmd)->required();
  language_cmd->add_option("--cmax", cmax, "Maximal body executions per loop")->check(CLI::PositiveNumber);
  language_cmd->add_option("--max-length", max_length, "Drop traces longer than this");
  add_out(language_cmd);

  auto* simulate_cmd = app.add_subcommand("simulate", "Sample traces from a tree");
  add_tree(simulate_cmd)->required();
  simulate_cmd->add_option("--n", n, "Number of traces")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--seed", seed, "Random seed");
  simulate_cmd->add_option("--workers", workers, "Sampling threads")->check(CLI::PositiveNumber);
  simulate_cmd->add_flag("--as-log", as_log, "Print the sampled traces as an event log");
  add_out(simulate_cmd);

  auto* emd_cmd = app.add_subcommand("emd", "Earth mover's distance between two languages");
  emd_cmd->add_option("first", lang_a, "Language file or event log")->required();
  emd_cmd->add_option("second", lang_b, "Language file or event log")->required();
  emd_cmd->add_option("--ground", ground, "normalized or raw Levenshtein")
      ->check(CLI::IsMember({"normalized", "raw"}));

  auto* remd_cmd = app.add_subcommand("remd", "Restricted EMD of a model against a log");
  remd_cmd->add_option("log", log_path, "Event log")->required();
  remd_cmd->add_option("model", lang_a, "Model language file or event log (or use --tree)");
  remd_cmd->add_option("--log-format", log_format, "auto (by extension), trace or csv")
      ->check(CLI::IsMember({"auto", "trace", "csv"}));
  add_tree(remd_cmd);
  remd_cmd->add_option("--cmax", opt_cmax, "Loop bound for the tree (default: longest log trace)");
  remd_cmd->add_option("--variant", variant, "penalize or renormalize")
      ->check(CLI::IsMember({"penalize", "renormalize"}));

  auto* to_wn_cmd = app.add_subcommand("to-wn", "Map a tree to a workflow net");
  add_tree(to_wn_cmd)->required();
  to_wn_cmd->add_flag("--dot", dot, "Print Graphviz");
  add_out(to_wn_cmd);

  auto* reduce_cmd = app.add_subcommand("reduce-wn", "Language-preserving net reduction");
  add_tree(reduce_cmd);
  reduce_cmd->add_option("--net", net_path, "Net file instead of a tree");
  reduce_cmd->add_flag("!--no-skip-loops", skip_loops, "Disable the skippable-loop rule");
  reduce_cmd->add_flag("--dot", dot, "Print Graphviz");
  add_out(reduce_cmd);

  auto* equiv_cmd = app.add_subcommand("check-equiv", "Compare tree and mapped net languages up to a length");
  add_tree(equiv_cmd)->required();
  equiv_cmd->add_option("--max-len", max_len, "Maximal trace length");
  equiv_cmd->add_flag("--reduced", reduced, "Check the reduced net instead");

  auto* opt_cmd = app.add_subcommand("optimize", "Fit tree probabilities to a log by minimizing rEMD");
  add_log(opt_cmd, true);
  opt_cmd->add_option("--tree", tree_path, "Tree file, or 'discover' to mine one from the log")->required();
  opt_cmd->add_option("--iters", iters, "Iterations")->check(CLI::PositiveNumber);
  opt_cmd->add_option("--restarts", restarts, "Random restarts")->check(CLI::PositiveNumber);
  opt_cmd->add_option("--mode", mode, "auto, exact or sim")->check(CLI::IsMember({"auto", "exact", "sim"}));
  opt_cmd->add_option("--cmax", opt_cmax, "Loop bound in exact mode");
  opt_cmd->add_option("--samples", opt_samples, "Samples per evaluation in simulation mode");
  opt_cmd->add_option("--seed", seed, "Random seed");
  opt_cmd->add_option("--workers", workers, "Threads for restarts")->check(CLI::PositiveNumber);
  opt_cmd->add_option("--variant", variant, "penalize or renormalize")
      ->check(CLI::IsMember({"penalize", "renormalize"}));
  add_out(opt_cmd);

  auto* params_cmd = app.add_subcommand("params", "Parameter counts of a tree and its net");
  add_tree(params_cmd)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsage;
  }

  const Output out{out_path};
  try {
    if (*discover_cmd) {
      const auto tree = discover(load_log(log_path, log_format));
      out.write([&](std::ostream& os) { os << (dot ? tree_to_dot(tree) : format_tree(tree) + "\n"); });
    } else if (*annotate_cmd) {
      const auto tree = annotate(read_tree(tree_path), policy == "random" ? InitPolicy::random : InitPolicy::uniform, seed);
      out.write([&](std::ostream& os) { os << format_tree(tree) << '\n'; });
    } else if (*language_cmd) {
      TruncationConfig trunc;
      trunc.c_max = cmax;
      trunc.max_length = max_length;
      const auto l = exact_sl(read_tree(tree_path), trunc);
      out.write([&](std::ostream& os) { write_language(os, l); });
    } else if (*simulate_cmd) {
      const auto tree = read_tree(tree_path);
      validate(tree, Annotation::stochastic);
      if (as_log) {
        Rng rng(seed);
        EventLog log;
        for (std::size_t i = 0; i < n; ++i) log.add(sample_trace(tree, rng));
        out.write([&](std::ostream& os) { write_log(os, log); });
      } else {
        const auto l = empirical_sl(tree, n, seed, workers);
        out.write([&](std::ostream& os) { write_language(os, l); });
      }
    } else if (*emd_cmd) {
      const auto a = load_distribution(lang_a);
      const auto b = load_distribution(lang_b);
      std::cout << format_double(emd(a, b, ground == "raw" ? GroundDistance::raw : GroundDistance::normalized)) << '\n';
    } else if (*remd_cmd) {
      const auto log = load_log(log_path, log_format);
      StochasticLanguage model;
      if (!lang_a.empty() && !tree_path.empty()) {
        std::cerr << "remd: give either a model file or --tree\n";
        return kUsage;
      }
      if (!lang_a.empty()) {
        model = load_distribution(lang_a);
      } else if (!tree_path.empty()) {
        TruncationConfig trunc;
        trunc.c_max = std::max<std::size_t>(1, opt_cmax.value_or(log.max_trace_length()));
        trunc.max_length = log.max_trace_length();
        for (const auto& [t, _] : log.entries()) trunc.superseqs.push_back(t);
        model = exact_sl(read_tree(tree_path), trunc);
      } else {
        std::cerr << "remd: give a model file or --tree\n";
        return kUsage;
      }
      std::cout << format_double(remd(log_to_sl(log), model, parse_variant(variant))) << '\n';
    } else if (*to_wn_cmd) {
      const auto net = pt_to_wn(read_tree(tree_path));
      out.write([&](std::ostream& os) { print_net(os, net, dot); });
    } else if (*reduce_cmd) {
      WorkflowNet net;
      if (!net_path.empty()) {
        net = read_net(net_path);
      } else if (!tree_path.empty()) {
        net = pt_to_wn(read_tree(tree_path));
      } else {
        std::cerr << "reduce-wn: give --tree or --net\n";
        return kUsage;
      }
      ReduceOptions opt;
      opt.skippable_loops = skip_loops;
      const auto reduced = reduce_equivalent(net, opt);
      out.write([&](std::ostream& os) { print_net(os, reduced, dot); });
    } else if (*equiv_cmd) {
      const auto tree = read_tree(tree_path);
      auto net = pt_to_wn(tree);
      if (reduced) net = reduce_equivalent(net);
      const bool same = trace_equivalence_check(tree, net, max_len);
      std::cout << (same ? "equivalent" : "different") << " up to length " << max_len << '\n';
      return same ? 0 : kNegative;
    } else if (*opt_cmd) {
      const auto log = load_log(log_path, log_format);
      const auto shape = tree_path == "discover" ? discover(log) : read_tree(tree_path);
      OptConfig cfg;
      cfg.iterations = iters;
      cfg.restarts = restarts;
      cfg.mode = mode == "exact" ? EvalMode::exact : mode == "sim" ? EvalMode::simulate : EvalMode::automatic;
      cfg.c_max = opt_cmax;
      cfg.n_samples = opt_samples;
      cfg.seed = seed;
      cfg.workers = workers;
      cfg.variant = parse_variant(variant);
      const auto r = optimize(shape, log, cfg);
      out.write([&](std::ostream& os) { write_report(os, r); });
      if (!out_path.empty()) {
        std::cerr << "final rEMD " << format_double(r.best_value) << " (" << mode_name(r.mode) << ", "
                  << r.evaluations << " evaluations)\n";
      }
    } else if (*params_cmd) {
      const auto tree = read_tree(tree_path);
      const auto pc = param_count(tree);
      const auto net = pt_to_wn(strip(tree));
      std::cout << "free=" << pc.free << " arcs=" << pc.arcs << " transitions=" << net.transition_count()
                << " silent=" << net.silent_count() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return 0;
}
