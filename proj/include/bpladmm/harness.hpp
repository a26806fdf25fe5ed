#pragma once

// Experiment drivers behind the command-line tool. Every entry point returns
// an exit code and writes its files under an output directory, so the same
// code path is exercised by the CLI and by the tests.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpladmm/dcopf.hpp"
#include "bpladmm/rpca.hpp"

namespace bpladmm::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRunFailure = 1;
inline constexpr int kExitUsage = 2;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RpcaCell {
  Eigen::Index m = 100;
  Eigen::Index d = 100;
  int rank = 10;
  double sparsity = 0.05;
  double noise = 1e-2;
};

struct RpcaBenchOptions {
  std::vector<RpcaCell> cells;
  std::vector<std::uint64_t> seeds;
  rpca::RpcaConfig config;
  unsigned jobs = 0;  // 0: hardware concurrency
  std::string out_dir = ".";
  bool dump_trace = false;
  bool allow_maxiter = false;
  bool omit_timing = false;
};

struct RpcaRunRecord {
  std::size_t cell = 0;
  std::string algorithm;  // "BPL-ADMM" or "ADMM-3"
  std::uint64_t seed = 0;
  double time_seconds = 0.0;
  double relative_error = 0.0;
  int iterations = 0;
  Eigen::Index rank_L = 0;
  Eigen::Index sparsity_S = 0;
  int rank_true = 0;
  Eigen::Index sparsity_true = 0;
  bool converged = false;
  double feasibility = 0.0;
  double max_merit_increase = 0.0;
  std::size_t merit_violations = 0;
};

struct RpcaSummaryRow {
  RpcaCell cell;
  std::string algorithm;
  std::size_t runs = 0;
  double time_seconds = 0.0;
  double relative_error = 0.0;
  double iterations = 0.0;
  double rank_L = 0.0;
  double sparsity_S = 0.0;
  double rank_true = 0.0;
  double sparsity_true = 0.0;
  std::size_t converged = 0;
};

struct RpcaBenchResult {
  std::vector<RpcaRunRecord> runs;
  std::vector<RpcaSummaryRow> summary;
};

/// Throws UsageError for an empty seed or cell list and for parameters
/// rejected by the engine's gate.
void validate(const RpcaBenchOptions& opts);

/// Runs BPL-ADMM and ADMM-3 on every (cell, seed). Records are ordered by
/// cell, then seed, then algorithm regardless of the number of jobs.
RpcaBenchResult run_rpca_bench(const RpcaBenchOptions& opts);

void write_rpca_runs_csv(std::ostream& os, const RpcaBenchResult& r, bool omit_timing);
void write_rpca_summary_csv(std::ostream& os, const RpcaBenchResult& r, bool omit_timing);
void print_rpca_table(std::ostream& os, const RpcaBenchResult& r, bool omit_timing);

int cmd_rpca_bench(const RpcaBenchOptions& opts, std::ostream& out, std::ostream& err);

struct DcopfOptions {
  std::string fixture;    // "2bus"
  std::string case_path;  // MATPOWER (.m) or the plain-text case format
  std::optional<double> gamma, eta, rho;
  dcopf::DcOpfRunOptions run;
  std::vector<std::uint64_t> seeds;  // used by random initialization
  unsigned jobs = 0;
  std::string out_dir = ".";
  bool dump_trace = false;
  bool allow_maxiter = false;
  bool omit_timing = false;
};

/// Resolves the fixture or case file and applies the parameter overrides.
dcopf::DcOpfCase resolve_case(const DcopfOptions& opts);

struct DcopfRunRecord {
  std::string init;
  std::uint64_t seed = 0;
  dcopf::DcOpfSolution solution;
};

struct DcopfResult {
  dcopf::DcOpfCase problem_case;
  std::vector<DcopfRunRecord> runs;
  std::size_t best = 0;  // lowest rounded-u OPF objective among usable runs
  dcopf::FrozenCheck frozen;
};

DcopfResult run_dcopf(const DcopfOptions& opts);

void write_dcopf_runs_csv(std::ostream& os, const DcopfResult& r, bool omit_timing);
void write_dcopf_summary_csv(std::ostream& os, const DcopfResult& r, bool omit_timing);

int cmd_dcopf(const DcopfOptions& opts, std::ostream& out, std::ostream& err);

struct TraceCheck {
  std::size_t rows = 0;
  std::size_t violations = 0;
  double max_increase = 0.0;
  double allowance = 0.0;  // slack * (1 + |L_1|)
  bool ok = false;
};

/// Checks that the merit column of a trace CSV never rises by more than
/// slack * (1 + |L_1|) between consecutive rows.
TraceCheck verify_trace(std::istream& is, double slack = 1e-8);

int cmd_verify_trace(const std::string& path, double slack, std::ostream& out, std::ostream& err);

/// Parses "1,2,5" or "3-7" style lists; throws UsageError.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace bpladmm::harness
