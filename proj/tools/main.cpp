#include <CLI11.hpp>

#include <iostream>

#include "cli_commands.hpp"

namespace ml1 = manifold_l1;
namespace cli = manifold_l1::cli;

int main(int argc, char** argv) {
  CLI::App app{"Discrete L1 norms on triangle meshes and compressed manifold modes"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0: MANIFOLD_L1_THREADS or 1)")->check(CLI::NonNegativeNumber);

  const std::vector<std::string> norm_schemes{"naive", "zeroth", "first", "oracle"};
  const std::vector<std::string> schemes{"zeroth", "first"};
  const std::vector<std::string> area_schemes{"barycentric", "mixed-voronoi"};
  const std::vector<std::string> repairs{"gersgorin", "psd-project", "none"};

  cli::NormConfig norm;
  auto* norm_cmd = app.add_subcommand("norm", "Evaluate a discrete L1 norm of a vertex function");
  norm_cmd->add_option("mesh", norm.mesh, "Mesh file (OFF/OBJ) or builtin:<name>")->required();
  norm_cmd->add_option("function", norm.function, "One value per line, one line per vertex")->required();
  norm_cmd->add_option("--scheme", norm.scheme)->check(CLI::IsMember(norm_schemes))->capture_default_str();
  norm_cmd->add_option("--area-scheme", norm.area_scheme)->check(CLI::IsMember(area_schemes))->capture_default_str();
  norm_cmd->add_option("--quad-points", norm.quad_points, "Points per triangle for the oracle")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  cli::ModesConfig modes;
  unsigned seed = 0;
  double beta = 0.0;
  auto* modes_cmd = app.add_subcommand("modes", "Compute compressed manifold modes");
  modes_cmd->add_option("mesh", modes.mesh)->required();
  modes_cmd->add_option("-k", modes.k, "Number of modes")->check(CLI::PositiveNumber)->capture_default_str();
  modes_cmd->add_option("--mu", modes.mu, "Sparsity weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  modes_cmd->add_flag("--area-normalized-mu", modes.area_normalized_mu, "Multiply mu by the total surface area");
  modes_cmd->add_option("--scheme", modes.scheme)->check(CLI::IsMember(schemes))->capture_default_str();
  modes_cmd->add_option("--repair", modes.repair)->check(CLI::IsMember(repairs))->capture_default_str();
  modes_cmd->add_option("--area-scheme", modes.area_scheme)->check(CLI::IsMember(area_schemes))->capture_default_str();
  modes_cmd->add_option("--backend", modes.backend)
      ->check(CLI::IsMember({"woodbury", "dense"}))
      ->capture_default_str();
  auto* seed_opt = modes_cmd->add_option("--seed", seed, "Random start vectors instead of the all-ones start");
  auto* beta_opt = modes_cmd->add_option("--beta", beta, "Deflation weight (default: 10x Gersgorin bound)")
                       ->check(CLI::PositiveNumber);
  modes_cmd->add_option("--max-irls-iters", modes.max_irls_iters)->check(CLI::PositiveNumber)->capture_default_str();
  modes_cmd->add_option("--irls-rel-tol", modes.irls_rel_tol)->check(CLI::PositiveNumber)->capture_default_str();
  modes_cmd->add_option("--epsilon-rel", modes.epsilon_rel)->check(CLI::PositiveNumber)->capture_default_str();
  modes_cmd->add_option("--dense-limit", modes.dense_limit)->check(CLI::PositiveNumber)->capture_default_str();
  modes_cmd->add_option("-o,--output", modes.output, "Output directory")->capture_default_str();

  cli::ConvergenceConfig conv;
  auto* conv_cmd = app.add_subcommand("convergence", "Norm error against refinement under midpoint subdivision");
  conv_cmd->add_option("mesh", conv.mesh)->required();
  conv_cmd->add_option("--levels", conv.levels)->check(CLI::PositiveNumber)->capture_default_str();
  conv_cmd->add_option("--num-eigs", conv.num_eigs)->check(CLI::PositiveNumber)->capture_default_str();
  conv_cmd->add_option("--first-level", conv.first_level)->check(CLI::NonNegativeNumber)->capture_default_str();
  conv_cmd->add_option("--mode", conv.mode)
      ->check(CLI::IsMember({"per-level", "finest-sampled", "constant"}))
      ->capture_default_str();
  conv_cmd->add_option("--area-scheme", conv.area_scheme)->check(CLI::IsMember(area_schemes))->capture_default_str();
  conv_cmd->add_option("--dense-limit", conv.dense_limit)->check(CLI::PositiveNumber)->capture_default_str();
  conv_cmd->add_option("--csv", conv.csv, "Also write the table as CSV");
  conv_cmd->add_option("-o,--output", conv.output)->capture_default_str();

  cli::BenchConfig bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time the mode solver with and without the Woodbury path");
  bench_cmd->add_option("meshes", bench.meshes)->required();
  bench_cmd->add_option("-k", bench.ks, "Mode counts")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--mu", bench.mu)->check(CLI::NonNegativeNumber)->capture_default_str();
  bench_cmd->add_option("--scheme", bench.scheme)->check(CLI::IsMember(schemes))->capture_default_str();
  bench_cmd->add_option("--repeats", bench.repeats)->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--dense-limit", bench.dense_limit)->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--backends", bench.backends)
      ->delimiter(',')
      ->check(CLI::IsMember({"woodbury", "dense"}))
      ->capture_default_str();
  bench_cmd->add_option("-o,--output", bench.output)->capture_default_str();

  cli::ExportConfig exp;
  auto* export_cmd = app.add_subcommand("export-ply", "Write a mesh with a per-vertex scalar as binary PLY");
  export_cmd->add_option("mesh", exp.mesh)->required();
  export_cmd->add_option("function", exp.function)->required();
  export_cmd->add_option("-o,--output", exp.output)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  ml1::set_num_threads(threads);
  if (*seed_opt) modes.seed = seed;
  if (*beta_opt) modes.beta = beta;

  try {
    if (*norm_cmd) cli::cmd_norm(norm, std::cout);
    if (*modes_cmd) cli::cmd_modes(modes, std::cerr);
    if (*conv_cmd) cli::cmd_convergence(conv, std::cerr);
    if (*bench_cmd) cli::cmd_bench(bench, std::cerr);
    if (*export_cmd) cli::cmd_export_ply(exp, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
