// Command-line front end: exact searches, enumeration streams, bound
// evaluation and schedule checks over homogeneous trees.
//
// Exit codes: 0 found/true, 1 usage, 2 domain error, 3 budget exceeded,
// 4 none/false.

#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "hltrees/bounds_calculus.hpp"
#include "hltrees/cli_io.hpp"
#include "hltrees/increment_calculus.hpp"

namespace {

using namespace hltrees;

constexpr int kExitFound = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;
constexpr int kExitBudget = 3;
constexpr int kExitNone = 4;

struct GlobalOpts {
  std::uint64_t budget_cap = Budget::default_cap();
  long seed = 0;
  std::string out_path;
};

void emit(const RunReport& report, const GlobalOpts& g) {
  std::string text = report_to_json(report).dump(2) + "\n";
  std::cout << text;
  if (!g.out_path.empty()) {
    std::ofstream out(g.out_path);
    if (!out) throw DomainError("cannot write report file: " + g.out_path);
    out << text;
  }
}

json blist_json(const std::vector<int>& b) { return json(b); }

struct EnumArgs {
  std::vector<int> b_vec;
  int height = 2;
  int k = 1;
  bool rooted = false;
  int at = -1;
  bool count_only = false;
  long limit = -1;
};

int run_enum(const EnumArgs& a, const GlobalOpts& g) {
  auto vt = VectorTree::uniform(a.b_vec, a.height);
  EnumerateOptions opts;
  opts.rooted = a.rooted;
  if (a.at >= 0) opts.second_level_at = a.at + 1;
  if (a.at >= 0 && a.k != 2) throw DomainError("--at requires k = 2");
  auto budget = std::make_shared<Budget>(g.budget_cap);
  StrongEnumerator e(vt, a.k, opts, budget);
  if (a.count_only) {
    std::cout << e.total_count().get_str() << "\n";
    return kExitFound;
  }
  if (a.limit < 0) budget->require_within(e.total_count(), "enumeration stream");
  long emitted = 0;
  while (auto s = e.next()) {
    std::cout << subtree_to_json(*s).dump() << "\n";
    if (a.limit >= 0 && ++emitted >= a.limit) break;
  }
  return kExitFound;
}

struct SearchArgs {
  std::string instance_path;
  int k = 1;
  int threads = 1;
};

int run_search(const SearchArgs& a, const GlobalOpts& g) {
  InstanceFile inst = load_instance(a.instance_path);
  auto budget = std::make_shared<Budget>(g.budget_cap);
  RunReport report;
  report.command = "search";
  report.parameters = {{"instance", a.instance_path}, {"k", a.k}, {"seed", g.seed}};
  report.budget_cap = g.budget_cap;

  bool found = false;
  if (inst.kind == InstanceFile::Kind::DenseSetPayload) {
    auto hit = find_subtree_in_set(*inst.dense, a.k, budget, a.threads);
    found = hit.has_value();
    report.certificate = found ? subtree_to_json(*hit) : json();
  } else if (inst.kind == InstanceFile::Kind::SelectionPayload) {
    auto hit = find_ls_witness(*inst.selection, a.k, budget, a.threads);
    found = hit.has_value();
    if (found)
      report.certificate = json{{"s", subtree_to_json(hit->s)},
                                {"r", subtree_to_json(VectorStrongSubtree{{hit->r}})}};
  } else {
    throw DomainError("search expects a dense_set or level_selection payload");
  }
  report.verdict = found ? "FOUND" : "NONE";
  report.counters["candidates"] = budget->used();
  report.budget_used = budget->used();
  emit(report, g);
  return found ? kExitFound : kExitNone;
}

struct NumbersArgs {
  bool udhl = false;
  bool ls = false;
  std::vector<int> b_vec;
  int k = 1;
  std::string eps = "1";
  int window = 3;
  std::string cex_dir;
};

int run_numbers(const NumbersArgs& a, const GlobalOpts& g) {
  if (a.udhl == a.ls) throw DomainError("choose exactly one of --udhl / --ls");
  Rat eps = parse_rational(a.eps);
  auto budget = std::make_shared<Budget>(g.budget_cap);
  RunReport report;
  report.command = a.udhl ? "numbers --udhl" : "numbers --ls";
  report.parameters = {{"b", blist_json(a.b_vec)},
                       {"k", a.k},
                       {"eps", format_rational(eps)},
                       {"window", a.window},
                       {"seed", g.seed}};
  report.budget_cap = g.budget_cap;

  std::optional<int> value;
  json cex;
  if (a.udhl) {
    auto res = udhl_exact(a.b_vec, a.k, eps, a.window, budget);
    value = res.value;
    if (res.counterexample) {
      InstanceFile f = make_dense_instance(*res.counterexample);
      cex = print_instance(f);
      if (!a.cex_dir.empty()) {
        std::string path = a.cex_dir + "/udhl_counterexample.json";
        store_instance(f, path);
        report.counters["counterexample_file"] = path;
      }
    }
    if (res.failing_L) report.counters["failing_L"] = *res.failing_L;
  } else {
    auto res = ls_exact(a.b_vec, a.k, eps, a.window, budget);
    value = res.value;
    if (res.counterexample) {
      InstanceFile f = make_selection_instance(*res.counterexample);
      cex = print_instance(f);
      if (!a.cex_dir.empty()) {
        std::string path = a.cex_dir + "/ls_counterexample.json";
        store_instance(f, path);
        report.counters["counterexample_file"] = path;
      }
    }
  }
  report.certificate = json{{"value", value ? json(*value) : json()},
                            {"window", a.window},
                            {"counterexample", cex}};
  report.verdict = value ? "N=" + std::to_string(*value) + " within window " +
                               std::to_string(a.window)
                         : "no N within window " + std::to_string(a.window);
  report.counters["candidates"] = budget->used();
  report.budget_used = budget->used();
  emit(report, g);
  return value ? kExitFound : kExitNone;
}

struct BoundArgs {
  bool mil = false, ls = false, udhl = false, udhl_base_only = false;
  std::vector<int> b_vec;
  long m = -1;
  int k = 1;
  long r = -1;
  std::string eps = "1";
  std::string mode = "symbolic";
  long digit_cap = 1'000'000;
  long long iter_cap = 1'000'000;
  std::string phi1 = "none";
  long stub_value = 3;
};

int run_bound(const BoundArgs& a, const GlobalOpts& g) {
  int picks = int(a.mil) + int(a.ls) + int(a.udhl) + int(a.udhl_base_only);
  if (picks != 1)
    throw DomainError("choose exactly one of --mil / --ls / --udhl / --udhl-base");

  ExprPtr expr;
  if (a.mil) {
    if (a.m < 0 || a.r < 0) throw DomainError("--mil needs --m and --r");
    expr = mil_bound(a.b_vec, Int(a.m), a.k, Int(a.r));
  } else if (a.ls) {
    expr = ls_bound(a.b_vec, a.k, parse_rational(a.eps));
  } else if (a.udhl) {
    expr = udhl_bound(a.b_vec, a.k, parse_rational(a.eps));
  } else {
    if (a.b_vec.size() != 1) throw DomainError("--udhl-base expects one branching number");
    expr = call_expr("udhl_base", a.b_vec, {make_int(a.k), make_rat(parse_rational(a.eps))});
  }

  RunReport report;
  report.command = "bound";
  report.parameters = {{"b", blist_json(a.b_vec)}, {"mode", a.mode},
                       {"k", a.k},                 {"m", a.m},
                       {"r", a.r},                 {"eps", a.eps},
                       {"digit_cap", a.digit_cap}, {"phi1", a.phi1},
                       {"seed", g.seed}};
  report.budget_cap = g.budget_cap;

  if (a.mode == "symbolic") {
    std::string text = print_expr(expr);
    report.verdict = "symbolic";
    report.certificate = json{{"expression", text}};
    emit(report, g);
    std::cout << text << "\n";
    return kExitFound;
  }
  if (a.mode != "numeric") throw DomainError("--mode must be symbolic or numeric");

  Phi1Provider provider = a.phi1 == "stub" ? Phi1Provider::constant(Int(a.stub_value))
                                           : Phi1Provider::symbolic_only();
  EvalLimits limits{a.digit_cap, a.iter_cap};
  EvalOutcome outcome = evaluate(expr, limits, provider);
  if (outcome.overflowed) {
    report.verdict = "exceeds cap";
    report.certificate = json{{"offending_subterm", outcome.overflow_subterm}};
    emit(report, g);
    std::cout << "exceeds cap (" << outcome.overflow_subterm << ")\n";
  } else {
    report.verdict = "value";
    report.certificate = json{{"value", outcome.value.get_str()}};
    emit(report, g);
    std::cout << outcome.value.get_str() << "\n";
  }
  return kExitFound;
}

struct SeqArgs {
  bool gamma = false, schedule = false, props = false;
  std::string alpha = "1", beta = "1", rho = "1";
  std::vector<int> b_vec{2};
  int b_last = 2;
  int k = 1;
  std::string eps = "1/2";
  long k0 = -1;       // stub iteration count; -1 = use the exact window scan
  int k0_window = 3;  // window for the exact scan
  int prec = 128;
};

json interval_json(const RatInterval& iv) {
  return json{{"lo", format_rational(iv.lo)}, {"hi", format_rational(iv.hi)}};
}

int run_seq(const SeqArgs& a, const GlobalOpts& g) {
  int picks = int(a.gamma) + int(a.schedule) + int(a.props);
  if (picks != 1) throw DomainError("choose exactly one of --gamma / --schedule / --props");

  RunReport report;
  report.command = "seq";
  report.budget_cap = g.budget_cap;

  if (a.gamma) {
    auto triple =
        gammas(parse_rational(a.alpha), parse_rational(a.beta), parse_rational(a.rho),
               a.prec);
    report.parameters = {{"alpha", a.alpha}, {"beta", a.beta}, {"rho", a.rho},
                         {"prec", a.prec},   {"seed", g.seed}};
    report.verdict = "ok";
    report.certificate = json{{"gamma0_sq", format_rational(triple.gamma0_sq)},
                              {"gamma0", interval_json(triple.gamma0)},
                              {"gamma1", interval_json(triple.gamma1)},
                              {"gamma2", interval_json(triple.gamma2)}};
    emit(report, g);
    return kExitFound;
  }

  auto budget = std::make_shared<Budget>(g.budget_cap);
  UdhlOracle oracle;
  if (a.k0 >= 1) {
    oracle = [&](const std::vector<int>&, int, const Rat&) { return Int(a.k0); };
  } else {
    oracle = [&](const std::vector<int>& b_vec, int k, const Rat& eps) {
      auto res = udhl_exact(b_vec, k, eps, a.k0_window, budget);
      if (!res.value)
        throw DomainError("no exact value within window " + std::to_string(a.k0_window) +
                          "; pass --k0 to use a stub");
      return Int(*res.value);
    };
  }
  auto sched = build_schedule(a.b_vec, a.b_last, a.k, parse_rational(a.eps), oracle, a.prec);
  report.parameters = {{"b", blist_json(a.b_vec)},
                       {"blast", a.b_last},
                       {"k", a.k},
                       {"eps", a.eps},
                       {"k0", a.k0},
                       {"prec", a.prec},
                       {"seed", g.seed}};

  json sched_json{{"K0", sched.K0.get_str()},
                  {"Q0", sched.Q0.get_str()},
                  {"theta0", format_rational(sched.theta0)},
                  {"numeric", sched.numeric},
                  {"r_base", format_rational(sched.r_base)},
                  {"r_exponent_log2", sched.r_exponent_log2.get_str()}};
  if (sched.numeric) {
    json deltas = json::array(), eps_seq = json::array();
    for (const auto& d : sched.deltas) deltas.push_back(interval_json(d));
    for (const auto& e : sched.eps_seq) eps_seq.push_back(interval_json(e));
    sched_json["deltas"] = deltas;
    sched_json["eps_seq"] = eps_seq;
  }

  if (a.schedule) {
    report.verdict = sched.numeric ? "numeric" : "symbolic-r";
    report.certificate = sched_json;
    emit(report, g);
    return kExitFound;
  }

  auto props = check_properties(sched);
  json verdicts = json::array();
  bool all_pass = true;
  for (const auto& e : props.entries) {
    std::string v = e.verdict == PropertyVerdict::Pass   ? "PASS"
                    : e.verdict == PropertyVerdict::Fail ? "FAIL"
                                                         : "NOT-EVALUATED";
    if (e.verdict != PropertyVerdict::Pass) all_pass = false;
    verdicts.push_back(json{{"name", e.name}, {"verdict", v}, {"detail", e.detail}});
  }
  report.verdict = all_pass ? "all properties PASS" : "properties failed";
  report.certificate = json{{"schedule", sched_json}, {"properties", verdicts}};
  report.budget_used = budget->used();
  emit(report, g);
  return all_pass ? kExitFound : kExitNone;
}

struct SignatureArgs {
  std::string instance_path;
};

int run_signature(const SignatureArgs& a, const GlobalOpts& g) {
  InstanceFile inst = load_instance(a.instance_path);
  if (inst.kind != InstanceFile::Kind::NodeSetPayload)
    throw DomainError("signature expects a node_set payload");
  const auto tree = inst.ambient.trees[0];
  auto budget = std::make_shared<Budget>(g.budget_cap);

  auto sig = signature(tree, inst.node_set, budget);
  auto bound = check_pst_bound(tree, inst.node_set, budget);

  RunReport report;
  report.command = "signature";
  report.parameters = {{"instance", a.instance_path}, {"seed", g.seed}};
  report.budget_cap = g.budget_cap;
  report.budget_used = budget->used();
  json level_sets = json::array();
  for (const auto& ls : sig) level_sets.push_back(json(ls));
  report.certificate = json{{"signature", level_sets},
                            {"signature_count", bound.signature_count.get_str()},
                            {"weight", format_rational(bound.weight_value)},
                            {"bound_holds", bound.holds},
                            {"lhs", bound.lhs.get_str()},
                            {"rhs", bound.rhs.get_str()}};
  report.verdict = bound.holds ? "bound holds" : "bound violated";
  emit(report, g);
  return bound.holds ? kExitFound : kExitNone;
}

struct ReduceArgs {
  std::string instance_path;
  std::string eps = "1/2";
  std::string out_dense;
  std::string out_selection;
};

int run_reduce(const ReduceArgs& a, const GlobalOpts& g) {
  InstanceFile inst = load_instance(a.instance_path);
  if (inst.kind != InstanceFile::Kind::DenseSetPayload)
    throw DomainError("reduce expects a dense_set payload");
  Rat eps = parse_rational(a.eps);
  auto reduction = section_reduce(*inst.dense, eps);

  RunReport report;
  report.command = "reduce";
  report.parameters = {{"instance", a.instance_path},
                       {"eps", format_rational(eps)},
                       {"seed", g.seed}};
  report.budget_cap = g.budget_cap;
  json sizes = json::object();
  for (int lvl : reduction.good_points.support_levels)
    sizes[std::to_string(lvl)] = reduction.good_points.count_at(lvl).get_str();
  report.certificate = json{{"good_points", dense_set_to_json(reduction.good_points)},
                            {"good_counts", sizes}};
  report.verdict = "reduced";
  if (!a.out_dense.empty())
    store_instance(make_dense_instance(reduction.good_points), a.out_dense);
  if (!a.out_selection.empty())
    store_instance(make_selection_instance(reduction.sections), a.out_selection);
  emit(report, g);
  return kExitFound;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact searches and bound calculators for dense subsets of tree products"};
  app.set_help_flag("--help", "print usage");  // keep --h free for tree heights
  app.require_subcommand(1);

  GlobalOpts global;
  app.add_option("--budget", global.budget_cap,
                 "candidate-unit cap (default: HLTREES_BUDGET or 1e8)");
  app.add_option("--seed", global.seed, "seed echoed into reports");
  app.add_option("--out", global.out_path, "also write the report JSON to this file");

  EnumArgs enum_args;
  auto* cmd_enum = app.add_subcommand("enum", "stream strong subtrees of height k");
  cmd_enum->fallthrough();
  cmd_enum->add_option("--b", enum_args.b_vec, "branching numbers")->delimiter(',')->required();
  cmd_enum->add_option("--h", enum_args.height, "tree height")->required();
  cmd_enum->add_option("--k", enum_args.k, "subtree height")->required();
  cmd_enum->add_flag("--rooted", enum_args.rooted, "root pinned at the tree root");
  cmd_enum->add_option("--at", enum_args.at, "height-2 stream with second level at m+1");
  cmd_enum->add_flag("--count-only", enum_args.count_only, "print the exact count only");
  cmd_enum->add_option("--limit", enum_args.limit, "emit at most this many certificates");

  SearchArgs search_args;
  auto* cmd_search = app.add_subcommand("search", "find a certificate inside an instance");
  cmd_search->fallthrough();
  cmd_search->add_option("--instance", search_args.instance_path, "instance file")
      ->required();
  cmd_search->add_option("--k", search_args.k, "certificate height")->required();
  cmd_search->add_option("--threads", search_args.threads, "parallel partitions");

  NumbersArgs numbers_args;
  auto* cmd_numbers = app.add_subcommand("numbers", "exact numbers within a level window");
  cmd_numbers->fallthrough();
  cmd_numbers->add_flag("--udhl", numbers_args.udhl, "dense-set number");
  cmd_numbers->add_flag("--ls", numbers_args.ls, "level-selection number");
  cmd_numbers->add_option("--b", numbers_args.b_vec, "branching numbers")->delimiter(',')->required();
  cmd_numbers->add_option("--k", numbers_args.k, "certificate height")->required();
  cmd_numbers->add_option("--eps", numbers_args.eps, "density threshold p/q")->required();
  cmd_numbers->add_option("--window", numbers_args.window, "scanned level window");
  cmd_numbers->add_option("--cex-dir", numbers_args.cex_dir,
                          "directory for counterexample files");

  BoundArgs bound_args;
  auto* cmd_bound = app.add_subcommand("bound", "recursive upper bounds");
  cmd_bound->fallthrough();
  cmd_bound->add_flag("--mil", bound_args.mil, "monochromatic-family height bound");
  cmd_bound->add_flag("--ls", bound_args.ls, "selection bound");
  cmd_bound->add_flag("--udhl", bound_args.udhl, "dense-set bound");
  cmd_bound->add_flag("--udhl-base", bound_args.udhl_base_only, "one-dimensional base bound");
  cmd_bound->add_option("--b", bound_args.b_vec, "branching numbers")->delimiter(',')->required();
  cmd_bound->add_option("--m", bound_args.m, "target height (mil)");
  cmd_bound->add_option("--k", bound_args.k, "certificate height");
  cmd_bound->add_option("--r", bound_args.r, "color count (mil)");
  cmd_bound->add_option("--eps", bound_args.eps, "density threshold p/q");
  cmd_bound->add_option("--mode", bound_args.mode, "symbolic | numeric");
  cmd_bound->add_option("--digit-cap", bound_args.digit_cap, "decimal digit cap");
  cmd_bound->add_option("--iter-cap", bound_args.iter_cap, "iteration cap");
  cmd_bound->add_option("--phi1", bound_args.phi1, "none | stub");
  cmd_bound->add_option("--stub-value", bound_args.stub_value, "stub constant");

  SeqArgs seq_args;
  auto* cmd_seq = app.add_subcommand("seq", "increment sequences and their properties");
  cmd_seq->fallthrough();
  cmd_seq->add_flag("--gamma", seq_args.gamma, "nested square-root triple");
  cmd_seq->add_flag("--schedule", seq_args.schedule, "build the increment schedule");
  cmd_seq->add_flag("--props", seq_args.props, "check the schedule properties");
  cmd_seq->add_option("--alpha", seq_args.alpha, "alpha p/q");
  cmd_seq->add_option("--beta", seq_args.beta, "beta p/q");
  cmd_seq->add_option("--rho", seq_args.rho, "rho p/q");
  cmd_seq->add_option("--b", seq_args.b_vec, "branching numbers")->delimiter(',');
  cmd_seq->add_option("--blast", seq_args.b_last, "last-coordinate branching");
  cmd_seq->add_option("--k", seq_args.k, "certificate height");
  cmd_seq->add_option("--eps", seq_args.eps, "density p/q");
  cmd_seq->add_option("--k0", seq_args.k0, "stub iteration count (skips the exact scan)");
  cmd_seq->add_option("--k0-window", seq_args.k0_window, "window for the exact scan");
  cmd_seq->add_option("--prec", seq_args.prec, "interval precision bits");

  SignatureArgs signature_args;
  auto* cmd_signature =
      app.add_subcommand("signature", "level-set signature, weight and the count bound");
  cmd_signature->fallthrough();
  cmd_signature->add_option("--instance", signature_args.instance_path, "node_set instance")
      ->required();

  ReduceArgs reduce_args;
  auto* cmd_reduce = app.add_subcommand("reduce", "split off the last coordinate");
  cmd_reduce->fallthrough();
  cmd_reduce->add_option("--instance", reduce_args.instance_path, "dense_set instance")
      ->required();
  cmd_reduce->add_option("--eps", reduce_args.eps, "density threshold p/q")->required();
  cmd_reduce->add_option("--out-dense", reduce_args.out_dense, "good-point output file");
  cmd_reduce->add_option("--out-selection", reduce_args.out_selection,
                         "section-map output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  auto started = std::chrono::steady_clock::now();
  int code = kExitDomain;
  try {
    if (cmd_enum->parsed()) code = run_enum(enum_args, global);
    if (cmd_search->parsed()) code = run_search(search_args, global);
    if (cmd_numbers->parsed()) code = run_numbers(numbers_args, global);
    if (cmd_bound->parsed()) code = run_bound(bound_args, global);
    if (cmd_seq->parsed()) code = run_seq(seq_args, global);
    if (cmd_signature->parsed()) code = run_signature(signature_args, global);
    if (cmd_reduce->parsed()) code = run_reduce(reduce_args, global);
  } catch (const BudgetError& e) {
    std::cerr << "budget error: " << e.what() << "\n";
    code = kExitBudget;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    code = kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kExitDomain;
  }
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - started)
                     .count();
  std::cerr << "wall_time_ms: " << elapsed << "\n";
  return code;
}
