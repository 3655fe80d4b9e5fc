#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oed/baselines.hpp"
#include "oed/bench.hpp"
#include "oed/json_io.hpp"
#include "oed/relaxation.hpp"
#include "oed/rounding.hpp"

namespace {

using namespace oed;

void write_or_print(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw input_error("cannot open output file: " + out_path);
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw input_error("cannot open file: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct CriterionFlags {
  std::string letter = "A";
  double prior_lambda = 0.0;
  double noise_sigma = 0.0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--criterion", letter, "criterion letter: A D T E V G");
    cmd->add_option("--prior-lambda", prior_lambda,
                    "Bayesian prior strength (with --noise-sigma)");
    cmd->add_option("--noise-sigma", noise_sigma,
                    "Bayesian noise level (with --prior-lambda)");
  }

  Criterion build() const {
    std::optional<BayesParams> bayes;
    if (prior_lambda != 0.0 || noise_sigma != 0.0) {
      bayes = BayesParams{prior_lambda, noise_sigma};
    }
    return make_criterion(parse_criterion_kind(letter), bayes);
  }
};

MdConfig md_from_flags(int iterations, const std::string& step, double lambda,
                       double gamma0) {
  MdConfig cfg;
  cfg.iterations = iterations;
  cfg.smoothing_lambda = lambda;
  cfg.gamma0 = gamma0;
  if (step == "theory") {
    cfg.step_mode = StepMode::Theory;
  } else if (step == "line_search") {
    cfg.step_mode = StepMode::LineSearch;
  } else if (step == "sqrt_decay") {
    cfg.step_mode = StepMode::SqrtDecay;
  } else {
    throw input_error("unknown step mode: " + step);
  }
  return cfg;
}

RoundMode parse_mode(const std::string& mode) {
  if (mode == "theory") return RoundMode::Theory;
  if (mode == "practical") return RoundMode::Practical;
  throw input_error("unknown mode: " + mode);
}

int run(int argc, char** argv) {
  CLI::App app{"near-optimal experimental design selection"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic pool CSV");
  SyntheticSpec spec;
  std::string gen_out;
  gen->add_option("--n", spec.n, "pool size (even)")->required();
  gen->add_option("--p", spec.p, "dimension (even)")->required();
  gen->add_option("--seed", spec.seed, "rng seed");
  gen->add_option("--scale", spec.top_eig_scale,
                  "top Gram eigenvalue (default n/2)");
  gen->add_option("--out", gen_out, "pool CSV path")->required();

  // shared pipeline flags
  std::string pool_path, out_path, pi_path, diag_path;
  std::string mode = "practical", step = "line_search";
  int k = 0, b = 1, iterations = 0, repeats = 10, max_changes = 1000;
  double epsilon = 0.1, smoothing = 1e-3, gamma0 = 1.0;
  std::uint64_t seed = 0;
  CriterionFlags crit;

  auto* relax = app.add_subcommand("relax", "solve the fractional relaxation");
  crit.add_to(relax);
  relax->add_option("--k", k)->required();
  relax->add_option("--b", b);
  relax->add_option("--pool", pool_path)->required();
  relax->add_option("--out", out_path, "fractional design JSON");
  relax->add_option("--iterations", iterations);
  relax->add_option("--step", step, "theory | line_search | sqrt_decay");
  relax->add_option("--lambda", smoothing, "smoothing level");
  relax->add_option("--gamma0", gamma0);

  auto* round = app.add_subcommand("round", "round a fractional design");
  crit.add_to(round);
  round->add_option("--pool", pool_path)->required();
  round->add_option("--pi", pi_path, "fractional design JSON from relax")
      ->required();
  round->add_option("--epsilon", epsilon);
  round->add_option("--mode", mode, "theory | practical");
  round->add_option("--out", out_path, "design JSON");
  round->add_option("--diag", diag_path, "per-iteration diagnostics CSV");

  auto* sel = app.add_subcommand("select", "full pipeline");
  crit.add_to(sel);
  sel->add_option("--k", k)->required();
  sel->add_option("--b", b);
  sel->add_option("--epsilon", epsilon);
  sel->add_option("--mode", mode, "theory | practical");
  sel->add_option("--pool", pool_path)->required();
  sel->add_option("--out", out_path, "design JSON");
  sel->add_option("--iterations", iterations);
  sel->add_option("--step", step);
  sel->add_option("--lambda", smoothing);
  sel->add_option("--gamma0", gamma0);
  sel->add_option("--diag", diag_path);

  auto* base = app.add_subcommand("baseline", "comparison methods");
  std::string method = "uniform";
  crit.add_to(base);
  base->add_option("--method", method,
                   "uniform | weighted | fedorov | greedy | brute")
      ->required();
  base->add_option("--k", k)->required();
  base->add_option("--b", b);
  base->add_option("--seed", seed);
  base->add_option("--repeats", repeats);
  base->add_option("--max-changes", max_changes);
  base->add_option("--pool", pool_path)->required();
  base->add_option("--pi", pi_path, "fractional design JSON (weighted)");
  base->add_option("--out", out_path, "design JSON");

  auto* bench = app.add_subcommand("bench", "benchmark grid");
  int bench_n = 1000, bench_p = 50;
  double bench_scale = 0.0;
  std::vector<std::string> bench_criteria{"A", "D", "V"};
  std::vector<int> bench_k{60, 100};
  std::vector<std::string> bench_methods{"UNIFORM", "WEIGHTED", "SWAPPING"};
  std::vector<std::uint64_t> bench_seeds{1, 2, 3, 4, 5};
  std::string format = "csv";
  bench->add_option("--n", bench_n);
  bench->add_option("--p", bench_p);
  bench->add_option("--scale", bench_scale);
  bench->add_option("--criteria", bench_criteria);
  bench->add_option("--k-values", bench_k);
  bench->add_option("--methods", bench_methods);
  bench->add_option("--seeds", bench_seeds);
  bench->add_option("--pool", pool_path, "pool CSV (otherwise synthetic)");
  bench->add_option("--format", format, "csv | md");
  bench->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    save_pool_csv(gen_synthetic(spec), gen_out);
    return 0;
  }

  if (relax->parsed()) {
    const DesignPool pool = load_pool_csv(pool_path);
    const MdConfig cfg = md_from_flags(iterations, step, smoothing, gamma0);
    const RelaxResult res = solve_relaxation(crit.build(), pool, k, b, cfg);
    write_or_print(fractional_json(res.design), out_path);
    std::cerr << "relaxation objective: " << res.objective << "\n";
    return 0;
  }

  if (round->parsed()) {
    const DesignPool pool = load_pool_csv(pool_path);
    const Criterion c = crit.build();
    const FractionalDesign pi = parse_fractional_json(read_file(pi_path));
    const WhitenedPool wpool = whiten(pool, pi);
    auto [design, diag] = round_design(wpool, pi, epsilon, parse_mode(mode));
    SelectReport rep;
    rep.mode = parse_mode(mode);
    rep.alpha = diag.alpha;
    rep.lambda_min_whitened = diag.final_lambda_min;
    rep.relaxation_objective =
        eval(c, pool.weighted_covariance(pi.weights), &pool);
    rep.objective =
        eval(c, pool.weighted_covariance(design.counts_vector()), &pool);
    rep.ratio = rep.objective / rep.relaxation_objective;
    if (!diag_path.empty()) write_or_print(diagnostics_csv(diag), diag_path);
    rep.diagnostics = std::move(diag);
    write_or_print(design_json(design, c, rep), out_path);
    return 0;
  }

  if (sel->parsed()) {
    const DesignPool pool = load_pool_csv(pool_path);
    const Criterion c = crit.build();
    const MdConfig cfg = md_from_flags(iterations, step, smoothing, gamma0);
    auto [design, rep] = select(pool, c, k, b, epsilon, parse_mode(mode), cfg);
    if (!diag_path.empty()) {
      write_or_print(diagnostics_csv(rep.diagnostics), diag_path);
    }
    write_or_print(design_json(design, c, rep), out_path);
    std::cerr << "objective " << rep.objective << ", ratio " << rep.ratio
              << ", lambda_min " << rep.lambda_min_whitened << "\n";
    return 0;
  }

  if (base->parsed()) {
    const DesignPool pool = load_pool_csv(pool_path);
    const Criterion c = crit.build();
    Rng rng(seed);
    IntegralDesign d;
    if (method == "uniform") {
      d = uniform_select(pool, c, k, repeats, rng);
    } else if (method == "weighted") {
      if (pi_path.empty()) {
        throw input_error("baseline weighted requires --pi");
      }
      const FractionalDesign pi = parse_fractional_json(read_file(pi_path));
      d = weighted_select(pool, c, pi, k, repeats, rng).design;
    } else if (method == "fedorov") {
      d = fedorov_exchange(pool, c, k, max_changes, rng);
    } else if (method == "greedy") {
      d = greedy_removal(pool, c, k);
    } else if (method == "brute") {
      d = brute_force(pool, c, k, b);
    } else {
      throw input_error("unknown baseline method: " + method);
    }
    SelectReport rep;
    rep.objective =
        eval(c, pool.weighted_covariance(d.counts_vector()), &pool);
    rep.relaxation_objective = rep.objective;
    rep.ratio = 1.0;
    write_or_print(design_json(d, c, rep), out_path);
    return 0;
  }

  if (bench->parsed()) {
    std::vector<DesignPool> pools;
    if (!pool_path.empty()) {
      pools.push_back(load_pool_csv(pool_path));
    } else {
      pools.push_back(gen_synthetic(
          SyntheticSpec{bench_n, bench_p, bench_seeds.empty()
                                              ? 0
                                              : bench_seeds.front(),
                        bench_scale}));
    }
    std::vector<Criterion> criteria;
    for (const auto& letter : bench_criteria) {
      criteria.push_back(make_criterion(parse_criterion_kind(letter)));
    }
    const auto rows =
        run_bench(pools, criteria, bench_k, bench_methods, bench_seeds);
    const TableFormat fmt =
        format == "md" ? TableFormat::Markdown : TableFormat::Csv;
    write_or_print(emit_table(rows, fmt), out_path);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const infeasible_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
