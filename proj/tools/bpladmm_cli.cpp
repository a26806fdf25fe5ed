#include <iostream>
#include <numeric>

#include "CLI11.hpp"
#include "bpladmm/harness.hpp"

namespace h = bpladmm::harness;

namespace {

// --seeds k means seeds 1..k; an explicit --seed-list wins.
std::vector<std::uint64_t> seeds_from(int count, const std::string& list, bool list_given) {
  if (list_given) return h::parse_seed_list(list);
  if (count < 0) throw h::UsageError("--seeds must be >= 0");
  std::vector<std::uint64_t> s(static_cast<std::size_t>(count));
  std::iota(s.begin(), s.end(), std::uint64_t{1});
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BPL-ADMM experiments: robust PCA and DC optimal power flow with PV placement"};
  app.require_subcommand(1);

  // rpca-bench
  auto* rpca_cmd = app.add_subcommand("rpca-bench", "RPCA benchmark, BPL-ADMM against ADMM-3");
  std::vector<long> size{100, 100};
  h::RpcaCell cell;
  int rpca_seeds = 30;
  std::string rpca_seed_list;
  h::RpcaBenchOptions ropts;
  rpca_cmd->add_option("--size", size, "matrix size m d")->expected(2)->capture_default_str();
  rpca_cmd->add_option("--rank", cell.rank, "rank r of the low-rank part")->capture_default_str();
  rpca_cmd->add_option("--sparsity", cell.sparsity, "fraction s of nonzeros in S")->capture_default_str();
  rpca_cmd->add_option("--noise", cell.noise, "noise level Gamma")->capture_default_str();
  auto* rpca_seeds_opt =
      rpca_cmd->add_option("--seeds", rpca_seeds, "number of seeds (1..k)")->capture_default_str();
  auto* rpca_list_opt =
      rpca_cmd->add_option("--seed-list", rpca_seed_list, "explicit seeds, e.g. 1,2,10-20");
  rpca_list_opt->excludes(rpca_seeds_opt);
  rpca_cmd->add_option("--rho", ropts.config.rho, "penalty parameter (default 2 + 1e-10, must exceed 2)");
  rpca_cmd->add_option("--alpha", ropts.config.alpha, "proximal weight")->capture_default_str();
  rpca_cmd->add_option("--gamma", ropts.config.gamma, "data fidelity weight")->capture_default_str();
  rpca_cmd->add_option("--tau", ropts.config.tau, "sparsity weight (0: 1/sqrt(max(m, d)))");
  rpca_cmd->add_option("--tol", ropts.config.tolerance, "relative-change tolerance")->capture_default_str();
  rpca_cmd->add_option("--max-iter", ropts.config.max_iterations, "iteration cap")->capture_default_str();
  rpca_cmd->add_option("--jobs", ropts.jobs, "parallel runs (0: all cores)");
  rpca_cmd->add_option("--out", ropts.out_dir, "output directory")->capture_default_str();
  rpca_cmd->add_flag("--dump-trace", ropts.dump_trace, "write per-iteration traces");
  rpca_cmd->add_flag("--allow-maxiter", ropts.allow_maxiter, "do not fail runs that hit the cap");
  rpca_cmd->add_flag("--omit-timing", ropts.omit_timing, "write NA in timing columns");

  // dcopf
  auto* dc_cmd = app.add_subcommand("dcopf", "DC-OPF with PV placement");
  h::DcopfOptions dopts;
  int dc_seeds = 1;
  std::string dc_seed_list;
  std::string init = "lower";
  double gamma = 0.0, eta = 0.0, rho = 0.0;
  auto* fixture_opt = dc_cmd->add_option("--fixture", dopts.fixture, "built-in case: 2bus");
  auto* case_opt = dc_cmd->add_option("--case", dopts.case_path, "MATPOWER .m file or text case");
  fixture_opt->excludes(case_opt);
  auto* gamma_opt = dc_cmd->add_option("--gamma", gamma, "binary relaxation weight");
  auto* eta_opt = dc_cmd->add_option("--eta", eta, "slack penalty weight");
  auto* rho_opt = dc_cmd->add_option("--rho", rho, "penalty parameter (default 2 eta + 1e-10)");
  dc_cmd->add_option("--alpha", dopts.run.alpha, "proximal weight")->capture_default_str();
  dc_cmd->add_option("--tol", dopts.run.tolerance, "relative-change tolerance")->capture_default_str();
  dc_cmd->add_option("--max-iter", dopts.run.max_iterations, "iteration cap")->capture_default_str();
  dc_cmd->add_option("--init", init, "initialization: lower or random")
      ->check(CLI::IsMember({"lower", "random"}))
      ->capture_default_str();
  auto* dc_seeds_opt =
      dc_cmd->add_option("--seeds", dc_seeds, "random starts (1..k)")->capture_default_str();
  auto* dc_list_opt = dc_cmd->add_option("--seed-list", dc_seed_list, "explicit seeds");
  dc_list_opt->excludes(dc_seeds_opt);
  dc_cmd->add_option("--jobs", dopts.jobs, "parallel runs (0: all cores)");
  dc_cmd->add_option("--out", dopts.out_dir, "output directory")->capture_default_str();
  dc_cmd->add_flag("--dump-trace", dopts.dump_trace, "write per-iteration traces");
  dc_cmd->add_flag("--allow-maxiter", dopts.allow_maxiter, "do not fail runs that hit the cap");
  dc_cmd->add_flag("--omit-timing", dopts.omit_timing, "write NA in timing columns");

  // verify-trace
  auto* vt_cmd = app.add_subcommand("verify-trace", "check that a trace's merit column never rises");
  std::string trace_path;
  double slack = 1e-8;
  vt_cmd->add_option("trace", trace_path, "trace CSV written by --dump-trace")->required();
  vt_cmd->add_option("--slack", slack, "relative allowance")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : h::kExitUsage;
  }

  try {
    if (*rpca_cmd) {
      cell.m = size[0];
      cell.d = size[1];
      ropts.cells = {cell};
      ropts.seeds = seeds_from(rpca_seeds, rpca_seed_list, rpca_list_opt->count() > 0);
      return h::cmd_rpca_bench(ropts, std::cout, std::cerr);
    }
    if (*dc_cmd) {
      if (*gamma_opt) dopts.gamma = gamma;
      if (*eta_opt) dopts.eta = eta;
      if (*rho_opt) dopts.rho = rho;
      dopts.run.init.kind =
          init == "random" ? bpladmm::dcopf::InitKind::Random : bpladmm::dcopf::InitKind::LowerBound;
      dopts.seeds = seeds_from(dc_seeds, dc_seed_list, dc_list_opt->count() > 0);
      return h::cmd_dcopf(dopts, std::cout, std::cerr);
    }
    return h::cmd_verify_trace(trace_path, slack, std::cout, std::cerr);
  } catch (const h::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return h::kExitUsage;
  }
}
