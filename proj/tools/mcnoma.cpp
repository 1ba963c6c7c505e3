// Command line front end: solve allocation instances, build decision gadgets
// from 3DM inputs, verify the matching/optimum equivalence, and generate
// seeded 3DM corpora. All file formats are JSON.

#include <mcnoma/io.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace mcnoma;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInput = 2;
constexpr int kExitScale = 3;

struct RunConfig {
  std::string input_path;
  std::string output_path;
  std::string artifact_path;
  std::string assignment_path;
  std::string solver = "auto";
  std::string mean_order;
  std::string orders = "1,0,-1,-inf";
  std::string direction = "downlink";
  int m = 1;
  int size = 2;
  int extra_triplets = 0;
  std::string planted = "yes";
  std::uint64_t seed = 0;
  int grid_steps = 41;
  double tolerance = 1e-8;
};

std::int64_t states_guard() {
  const char* env = std::getenv("NOMA_ALLOC_MAX_STATES");
  if (env == nullptr || *env == '\0') return kDefaultMaxStates;
  char* end = nullptr;
  const long long v = std::strtoll(env, &end, 10);
  if (end == nullptr || *end != '\0' || v <= 0)
    throw std::invalid_argument("NOMA_ALLOC_MAX_STATES must be a positive integer");
  return v;
}

std::vector<MeanOrder> parse_orders(const std::string& csv) {
  std::vector<MeanOrder> orders;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) orders.push_back(mean_order_from_string(item));
  }
  if (orders.empty()) throw std::invalid_argument("--orders needs at least one mean order");
  return orders;
}

Assignment assignment_from_json(const json& j, Index num_subcarriers) {
  const json& lists = j.is_object() ? detail::require(j, "users") : j;
  if (!lists.is_array() || Index(lists.size()) != num_subcarriers)
    throw std::invalid_argument("assignment: expected one user list per subcarrier");
  Assignment a;
  for (const json& l : lists) {
    if (!l.is_array()) throw std::invalid_argument("assignment: each entry must be a user list");
    std::vector<Index> users;
    for (const json& u : l) users.push_back(u.get<Index>());
    a.users.push_back(std::move(users));
  }
  return a;
}

void print_rate_table(const Instance<double>& inst, const SolveResult<double>& result) {
  std::printf("solver: %s (%s, %lld iterations)\n", result.solver.c_str(),
              to_string(result.status).c_str(), static_cast<long long>(result.iterations));
  std::printf("%6s  %12s\n", "user", "rate");
  for (Index k = 0; k < inst.num_users; ++k)
    std::printf("%6lld  %12.6f\n", static_cast<long long>(k), result.rates.per_user(k));
  std::printf("utility (mean order %s): %.6f\n", to_string(inst.mean_order).c_str(),
              double(result.utility));
}

SolveResult<double> dispatch_solve(const Instance<double>& inst, const RunConfig& cfg,
                                   std::int64_t guard) {
  FixedAssignmentOptions fixed_opts;
  fixed_opts.tolerance = cfg.tolerance;
  ExhaustiveOptions ex_opts;
  ex_opts.max_states = guard;
  GridOptions grid_opts;
  grid_opts.max_evaluations = guard;

  auto run_fixed = [&]() {
    if (cfg.assignment_path.empty())
      throw std::invalid_argument("the fixed-assignment solver needs --assignment");
    const Assignment a = assignment_from_json(load_json(cfg.assignment_path), inst.num_subcarriers);
    return solve_fixed_assignment_sumrate(inst, a, fixed_opts);
  };

  if (cfg.solver == "waterfilling") return solve_single_user(inst);
  if (cfg.solver == "fixed") return run_fixed();
  if (cfg.solver == "single-subcarrier") return solve_single_subcarrier(inst);
  if (cfg.solver == "exhaustive") return exhaustive_m1(inst, ex_opts);
  if (cfg.solver == "grid") return grid_oracle(inst, cfg.grid_steps, grid_opts);
  if (cfg.solver != "auto") throw std::invalid_argument("unknown solver: " + cfg.solver);

  // Shape-based dispatch, cheapest exact path first.
  if (!cfg.assignment_path.empty()) return run_fixed();
  if (inst.num_users == 1) return solve_single_user(inst);
  const bool sum_rate = inst.mean_order == MeanOrder::sum_rate();
  if (inst.num_subcarriers == 1 && sum_rate) return solve_single_subcarrier(inst);
  if (inst.max_multiplexed == 1 && sum_rate && naive_state_count(inst) <= double(guard))
    return exhaustive_m1(inst, ex_opts);

  Index dims = 0;
  for (Index n = 0; n < inst.num_subcarriers; ++n)
    for (Index k = 0; k < inst.num_users; ++k)
      if (inst.gains(k, n) > 0 && inst.per_subcarrier_caps(k, n) > 0 &&
          std::min(inst.per_subcarrier_caps(k, n), inst.user_budgets(k)) > 0)
        ++dims;
  if (dims > 6)
    throw ScaleGuardError(
        "no exact solver applies to this shape: general multiplexed allocation is NP-hard and the "
        "grid fallback is limited to 6 active power dimensions (this instance has " +
        std::to_string(dims) + ")");
  return grid_oracle(inst, cfg.grid_steps, grid_opts);
}

int cmd_solve(const RunConfig& cfg) {
  Instance<double> inst = instance_from_json(load_json(cfg.input_path));
  if (!cfg.mean_order.empty()) inst.mean_order = mean_order_from_string(cfg.mean_order);
  const SolveResult<double> result = dispatch_solve(inst, cfg, states_guard());
  print_rate_table(inst, result);
  if (!cfg.output_path.empty()) save_json(cfg.output_path, solve_result_to_json(result));
  return kExitPass;
}

std::string default_artifact_path(const std::string& output) {
  const std::string suffix = ".json";
  if (output.size() > suffix.size() &&
      output.compare(output.size() - suffix.size(), suffix.size(), suffix) == 0)
    return output.substr(0, output.size() - suffix.size()) + ".artifact.json";
  return output + ".artifact.json";
}

int cmd_reduce(const RunConfig& cfg) {
  const ThreeDM x = threedm_from_json(load_json(cfg.input_path));
  const ReductionArtifact art = build_tM(x, cfg.m, direction_from_string(cfg.direction));
  save_json(cfg.output_path, instance_to_json(art.instance));
  const std::string artifact_path =
      cfg.artifact_path.empty() ? default_artifact_path(cfg.output_path) : cfg.artifact_path;
  save_json(artifact_path, artifact_to_json(art));
  std::printf("reduced size-%d 3dm (%zu triplets) to %lld users x %lld subcarriers, M=%d%s\n",
              x.size, x.triplets.size(), static_cast<long long>(art.instance.num_users),
              static_cast<long long>(art.instance.num_subcarriers), cfg.m,
              art.trivially_no ? " (trivially unmatched: fewer triplets than elements)" : "");
  std::printf("instance: %s\nartifact: %s\n", cfg.output_path.c_str(), artifact_path.c_str());
  return kExitPass;
}

int cmd_verify(const RunConfig& cfg) {
  const ThreeDM x = threedm_from_json(load_json(cfg.input_path));
  VerifyOptions opts;
  opts.orders = parse_orders(cfg.orders);
  opts.direction = direction_from_string(cfg.direction);
  opts.max_states = states_guard();
  const EquivalenceReport report = verify_equivalence(x, cfg.m, opts);

  std::printf("3dm: size %d, %zu triplets, matching %s\n", x.size, x.triplets.size(),
              report.matching_exists ? "exists" : "does not exist");
  std::printf("gadget: M=%d, %s, threshold %.1f\n", report.m,
              to_string(report.direction).c_str(), report.threshold);
  std::printf("%8s  %12s  %6s  %10s\n", "order", "optimum", "exact", "reaches 3");
  for (const auto& outcome : report.per_order)
    std::printf("%8s  %12.6f  %6s  %10s\n", to_string(outcome.order).c_str(), outcome.value,
                outcome.exact ? "yes" : "bound", outcome.decision ? "yes" : "no");
  if (!report.matching_exists) std::printf("gap below threshold: %.6g\n", report.gap);
  std::printf("verdict: %s\n", report.pass ? "PASS" : "FAIL");

  if (!cfg.output_path.empty()) save_json(cfg.output_path, report_to_json(report));
  return report.pass ? kExitPass : kExitFail;
}

int cmd_gen(const RunConfig& cfg) {
  if (cfg.planted != "yes" && cfg.planted != "no")
    throw std::invalid_argument("--planted must be yes or no");
  const bool planted = cfg.planted == "yes";
  const ThreeDM x = planted ? generate_planted(cfg.size, cfg.extra_triplets, cfg.seed)
                            : generate_matching_free(cfg.size, cfg.extra_triplets, cfg.seed);
  save_json(cfg.output_path, threedm_to_json(x));
  std::printf("generated size-%d 3dm with %zu triplets (%s, certified), seed %llu -> %s\n",
              x.size, x.triplets.size(), planted ? "planted matching" : "matching-free",
              static_cast<unsigned long long>(cfg.seed), cfg.output_path.c_str());
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Multi-carrier NOMA allocation toolkit"};
  app.require_subcommand(1);

  CLI::App* solve = app.add_subcommand("solve", "Solve an allocation instance");
  solve->add_option("--input", cfg.input_path, "Instance JSON")->required();
  solve->add_option("--output", cfg.output_path, "Result JSON (optional)");
  solve->add_option("--solver", cfg.solver,
                    "auto|waterfilling|fixed|single-subcarrier|exhaustive|grid");
  solve->add_option("--assignment", cfg.assignment_path,
                    "Per-subcarrier user lists for the fixed-assignment solver");
  solve->add_option("--mean-order", cfg.mean_order, "Override the instance mean order");
  solve->add_option("--grid-steps", cfg.grid_steps, "Grid oracle steps per dimension");
  solve->add_option("--tolerance", cfg.tolerance, "Fixed-assignment gradient tolerance");

  CLI::App* reduce = app.add_subcommand("reduce", "Build a gadget instance from a 3DM input");
  reduce->add_option("--input", cfg.input_path, "3DM JSON")->required();
  reduce->add_option("--output", cfg.output_path, "Instance JSON")->required();
  reduce->add_option("--artifact", cfg.artifact_path, "Artifact JSON (default: <output>.artifact.json)");
  reduce->add_option("--m", cfg.m, "Multiplexing capability M")->check(CLI::PositiveNumber);
  reduce->add_option("--direction", cfg.direction, "downlink|uplink");

  CLI::App* verify = app.add_subcommand("verify", "Check matching <-> optimum-3 equivalence");
  verify->add_option("--input", cfg.input_path, "3DM JSON")->required();
  verify->add_option("--output", cfg.output_path, "Report JSON (optional)");
  verify->add_option("--m", cfg.m, "Multiplexing capability M")->check(CLI::PositiveNumber);
  verify->add_option("--orders", cfg.orders, "Comma list of mean orders (default 1,0,-1,-inf)");
  verify->add_option("--direction", cfg.direction, "downlink|uplink");

  CLI::App* gen = app.add_subcommand("gen", "Generate a seeded 3DM instance");
  gen->add_option("--output", cfg.output_path, "3DM JSON")->required();
  gen->add_option("--size", cfg.size, "Universe size per axis")->check(CLI::PositiveNumber);
  gen->add_option("--extra-triplets", cfg.extra_triplets, "Decoy triplets beyond the base set")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--planted", cfg.planted, "yes: plant a matching, no: certified matching-free");
  gen->add_option("--seed", cfg.seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (solve->parsed()) return cmd_solve(cfg);
    if (reduce->parsed()) return cmd_reduce(cfg);
    if (verify->parsed()) return cmd_verify(cfg);
    if (gen->parsed()) return cmd_gen(cfg);
  } catch (const ScaleGuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitScale;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
