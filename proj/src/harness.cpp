#include "bpladmm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "bpladmm/matpower.hpp"

namespace bpladmm::harness {

namespace fs = std::filesystem;

namespace {

constexpr int kMachineDigits = 17;

unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs task(k) for k in [0, count) on up to `jobs` threads. The first
// exception is rethrown after every worker has joined.
template <class Task>
void parallel_for(std::size_t count, unsigned jobs, Task task) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) task(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          task(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string format_time(double t, bool omit) {
  if (omit) return "NA";
  std::ostringstream os;
  os << std::setprecision(kMachineDigits) << t;
  return os.str();
}

std::string number_tag(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

void write_trace_file(const fs::path& p, const std::vector<IterationReport>& trace) {
  auto f = open_out(p);
  write_trace_header(f);
  for (const auto& r : trace) write_trace_row(f, r);
}

std::string sci4(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << v;
  return os.str();
}

std::string sig4(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  auto to_u64 = [](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("invalid seed '" + s + "'");
    }
    return std::stoull(s);
  };
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(to_u64(item));
      continue;
    }
    const std::uint64_t lo = to_u64(item.substr(0, dash));
    const std::uint64_t hi = to_u64(item.substr(dash + 1));
    if (hi < lo) throw UsageError("descending seed range '" + item + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  return seeds;
}

// ---------------------------------------------------------------------------
// RPCA benchmark

void validate(const RpcaBenchOptions& opts) {
  if (opts.seeds.empty()) throw UsageError("seed list is empty");
  if (opts.cells.empty()) throw UsageError("no benchmark cell given");
  for (const auto& c : opts.cells) {
    if (c.m <= 0 || c.d <= 0) throw UsageError("matrix size must be positive");
    if (c.rank <= 0 || c.rank > std::min(c.m, c.d)) {
      throw UsageError("rank must lie in [1, min(m, d)]");
    }
    if (!(c.sparsity >= 0.0 && c.sparsity <= 1.0)) throw UsageError("sparsity must lie in [0, 1]");
    if (!(c.noise >= 0.0)) throw UsageError("noise level must be >= 0");
  }
  if (!(opts.config.gamma > 0.0)) throw UsageError("gamma must be > 0");
  if (opts.config.tau < 0.0) throw UsageError("tau must be >= 0");
  try {
    validate_parameters(rpca::make_params(opts.config));
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
}

RpcaBenchResult run_rpca_bench(const RpcaBenchOptions& opts) {
  validate(opts);
  const std::size_t per_cell = opts.seeds.size() * 2;
  RpcaBenchResult out;
  out.runs.resize(opts.cells.size() * per_cell);
  std::vector<std::vector<IterationReport>> traces(opts.dump_trace ? out.runs.size() : 0);

  rpca::RpcaConfig bpl = opts.config;
  bpl.record_trace = opts.dump_trace;
  const rpca::RpcaConfig admm3 = rpca::admm3_config(bpl);

  parallel_for(out.runs.size(), resolve_jobs(opts.jobs), [&](std::size_t k) {
    const std::size_t ci = k / per_cell;
    const std::size_t si = (k % per_cell) / 2;
    const bool baseline = (k % 2) == 1;
    const RpcaCell& cell = opts.cells[ci];
    const std::uint64_t seed = opts.seeds[si];

    // Instance generation is outside the timed region of the solvers.
    const rpca::RpcaInstance inst =
        rpca::generate_instance(cell.m, cell.d, cell.rank, cell.sparsity, cell.noise, seed);
    rpca::RpcaSolution sol =
        baseline ? rpca::admm3_baseline(inst, admm3, seed) : rpca::bpl_admm_rpca(inst, bpl, seed);

    RpcaRunRecord& r = out.runs[k];
    r.cell = ci;
    r.algorithm = baseline ? "ADMM-3" : "BPL-ADMM";
    r.seed = seed;
    r.time_seconds = sol.wall_time;
    r.relative_error = sol.relative_error;
    r.iterations = sol.iterations;
    r.rank_L = sol.rank_L;
    r.sparsity_S = sol.sparsity_S;
    r.rank_true = inst.rank;
    r.sparsity_true = inst.sparsity_count;
    r.converged = sol.converged;
    r.feasibility = sol.feasibility;
    r.max_merit_increase = sol.summary.max_merit_increase;
    r.merit_violations = sol.summary.merit_violations;
    if (opts.dump_trace) traces[k] = std::move(sol.trace);
  });

  if (opts.dump_trace) {
    const fs::path dir = fs::path(opts.out_dir) / "traces";
    ensure_dir(dir.string());
    for (std::size_t k = 0; k < out.runs.size(); ++k) {
      const auto& r = out.runs[k];
      const RpcaCell& c = opts.cells[r.cell];
      std::ostringstream name;
      name << "rpca_" << (r.algorithm == "ADMM-3" ? "admm3" : "bpladmm") << "_" << c.m << "x" << c.d
           << "_r" << c.rank << "_s" << number_tag(c.sparsity) << "_g" << number_tag(c.noise)
           << "_seed" << r.seed << ".csv";
      write_trace_file(dir / name.str(), traces[k]);
    }
  }

  for (std::size_t ci = 0; ci < opts.cells.size(); ++ci) {
    for (const char* alg : {"BPL-ADMM", "ADMM-3"}) {
      RpcaSummaryRow row;
      row.cell = opts.cells[ci];
      row.algorithm = alg;
      for (const auto& r : out.runs) {
        if (r.cell != ci || r.algorithm != alg) continue;
        ++row.runs;
        row.time_seconds += r.time_seconds;
        row.relative_error += r.relative_error;
        row.iterations += r.iterations;
        row.rank_L += static_cast<double>(r.rank_L);
        row.sparsity_S += static_cast<double>(r.sparsity_S);
        row.rank_true += r.rank_true;
        row.sparsity_true += static_cast<double>(r.sparsity_true);
        row.converged += r.converged ? 1 : 0;
      }
      const double n = static_cast<double>(row.runs);
      row.time_seconds /= n;
      row.relative_error /= n;
      row.iterations /= n;
      row.rank_L /= n;
      row.sparsity_S /= n;
      row.rank_true /= n;
      row.sparsity_true /= n;
      out.summary.push_back(row);
    }
  }
  return out;
}

void write_rpca_runs_csv(std::ostream& os, const RpcaBenchResult& r, bool omit_timing) {
  os << "cell,algorithm,seed,time_seconds,RE,iterations,rank_L_hat,sparsity_S_hat,rank_L_O,"
        "sparsity_S_O,converged,feasibility,max_merit_increase,merit_violations\n";
  os << std::setprecision(kMachineDigits);
  for (const auto& x : r.runs) {
    os << x.cell << ',' << x.algorithm << ',' << x.seed << ',' << format_time(x.time_seconds, omit_timing)
       << ',' << x.relative_error << ',' << x.iterations << ',' << x.rank_L << ',' << x.sparsity_S
       << ',' << x.rank_true << ',' << x.sparsity_true << ',' << (x.converged ? 1 : 0) << ','
       << x.feasibility << ',' << x.max_merit_increase << ',' << x.merit_violations << '\n';
  }
}

void write_rpca_summary_csv(std::ostream& os, const RpcaBenchResult& r, bool omit_timing) {
  os << "gamma_noise,r,s,algorithm,time_seconds,RE,iterations,rank_L_hat,sparsity_S_hat,rank_L_O,"
        "sparsity_S_O,m,d,runs,converged\n";
  os << std::setprecision(kMachineDigits);
  for (const auto& x : r.summary) {
    os << x.cell.noise << ',' << x.cell.rank << ',' << x.cell.sparsity << ',' << x.algorithm << ','
       << format_time(x.time_seconds, omit_timing) << ',' << x.relative_error << ',' << x.iterations
       << ',' << x.rank_L << ',' << x.sparsity_S << ',' << x.rank_true << ',' << x.sparsity_true
       << ',' << x.cell.m << ',' << x.cell.d << ',' << x.runs << ',' << x.converged << '\n';
  }
}

void print_rpca_table(std::ostream& os, const RpcaBenchResult& r, bool omit_timing) {
  os << std::left << std::setw(12) << "m x d" << std::setw(10) << "Gamma" << std::setw(5) << "r"
     << std::setw(7) << "s" << std::setw(10) << "algorithm" << std::setw(11) << "time" << std::setw(11)
     << "RE" << std::setw(8) << "iter" << std::setw(8) << "rank" << std::setw(10) << "||S||_0"
     << std::setw(6) << "r_O" << "||S_O||_0\n";
  for (const auto& x : r.summary) {
    std::ostringstream size;
    size << x.cell.m << "x" << x.cell.d;
    os << std::left << std::setw(12) << size.str() << std::setw(10) << sci4(x.cell.noise)
       << std::setw(5) << x.cell.rank << std::setw(7) << sig4(x.cell.sparsity) << std::setw(10)
       << x.algorithm << std::setw(11) << (omit_timing ? std::string("NA") : sci4(x.time_seconds))
       << std::setw(11) << sci4(x.relative_error) << std::setw(8) << sig4(x.iterations)
       << std::setw(8) << sig4(x.rank_L) << std::setw(10) << sig4(x.sparsity_S) << std::setw(6)
       << sig4(x.rank_true) << sig4(x.sparsity_true) << '\n';
  }
}

int cmd_rpca_bench(const RpcaBenchOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    validate(opts);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    ensure_dir(opts.out_dir);
    const RpcaBenchResult res = run_rpca_bench(opts);
    {
      auto f = open_out(fs::path(opts.out_dir) / "rpca_runs.csv");
      write_rpca_runs_csv(f, res, opts.omit_timing);
    }
    {
      auto f = open_out(fs::path(opts.out_dir) / "rpca_summary.csv");
      write_rpca_summary_csv(f, res, opts.omit_timing);
    }
    print_rpca_table(out, res, opts.omit_timing);

    std::size_t failed = 0;
    for (const auto& r : res.runs) {
      if (!r.converged && !opts.allow_maxiter) {
        ++failed;
        err << r.algorithm << " seed " << r.seed << " (cell " << r.cell
            << ") stopped at the iteration cap\n";
      }
    }
    return failed == 0 ? kExitOk : kExitRunFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRunFailure;
  }
}

// ---------------------------------------------------------------------------
// DC-OPF

dcopf::DcOpfCase resolve_case(const DcopfOptions& opts) {
  const bool has_fixture = !opts.fixture.empty();
  const bool has_path = !opts.case_path.empty();
  if (has_fixture == has_path) throw UsageError("give exactly one of --fixture or --case");

  dcopf::DcOpfCase c;
  if (has_fixture) {
    if (opts.fixture != "2bus") throw UsageError("unknown fixture '" + opts.fixture + "'");
    c = dcopf::two_bus_fixture();
  } else if (fs::path(opts.case_path).extension() == ".m") {
    matpower::ConversionOptions conv;
    if (opts.gamma) conv.gamma = *opts.gamma;
    if (opts.eta) conv.eta = *opts.eta;
    c = matpower::to_dcopf_case(matpower::load_case(opts.case_path), conv);
    c.name = fs::path(opts.case_path).stem().string();
  } else {
    c = dcopf::load_case_file(opts.case_path);
  }
  if (opts.gamma) c.gamma = *opts.gamma;
  if (opts.eta) c.eta = *opts.eta;
  if (opts.rho) c.rho = *opts.rho;
  if (c.gamma < 0.0) throw UsageError("gamma must be >= 0");
  if (!(c.eta > 0.0)) throw UsageError("eta must be > 0");
  return c;
}

DcopfResult run_dcopf(const DcopfOptions& opts) {
  if (opts.seeds.empty()) throw UsageError("seed list is empty");
  DcopfResult res;
  res.problem_case = resolve_case(opts);
  const dcopf::DcOpfCase& c = res.problem_case;

  SolverParams params =
      dcopf::make_params(c, opts.run.alpha, opts.run.tolerance, opts.run.max_iterations);
  params.rho = c.rho.value_or(c.default_rho());
  try {
    validate_parameters(params);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }

  // The lower-bound start is deterministic, so it is solved once; random
  // starts are solved once per seed.
  const bool random = opts.run.init.kind == dcopf::InitKind::Random;
  const std::size_t count = random ? opts.seeds.size() : 1;
  res.runs.resize(count);
  dcopf::validate_case(c);

  parallel_for(count, resolve_jobs(opts.jobs), [&](std::size_t k) {
    dcopf::DcOpfRunOptions o = opts.run;
    o.record_trace = opts.dump_trace;
    o.init = {random ? dcopf::InitKind::Random : dcopf::InitKind::LowerBound,
              random ? opts.seeds[k] : 0};
    res.runs[k].init = random ? "random" : "lower";
    res.runs[k].seed = o.init.seed;
    res.runs[k].solution = dcopf::solve_dcopf(c, o);
  });

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) {
    const auto& s = res.runs[k].solution;
    if (s.status == SolveStatus::OracleFailure) continue;
    if (s.objective_opf1 < best) {
      best = s.objective_opf1;
      res.best = k;
    }
  }
  dcopf::DcOpfRunOptions frozen_opts = opts.run;
  res.frozen = dcopf::frozen_u_check(c, res.runs[res.best].solution, 1e-3, frozen_opts);
  return res;
}

void write_dcopf_runs_csv(std::ostream& os, const DcopfResult& r, bool omit_timing) {
  os << "init,seed,status,iterations,time_seconds,objective_opf1,objective_opf1_raw,"
        "objective_relaxed,binary_violation,feasibility_residual,max_violation,min_slack\n";
  os << std::setprecision(kMachineDigits);
  for (const auto& run : r.runs) {
    const auto& s = run.solution;
    os << run.init << ',' << run.seed << ',' << to_string(s.status) << ',' << s.iterations << ','
       << format_time(s.wall_time, omit_timing) << ',' << s.objective_opf1 << ','
       << s.objective_opf1_raw << ',' << s.objective_relaxed << ',' << s.binary_violation << ','
       << s.feasibility_residual << ',' << s.max_violation << ',' << s.min_slack << '\n';
  }
}

void write_dcopf_summary_csv(std::ostream& os, const DcopfResult& r, bool omit_timing) {
  double mean_obj = 0.0, mean_it = 0.0, mean_time = 0.0;
  for (const auto& run : r.runs) {
    mean_obj += run.solution.objective_opf1;
    mean_it += run.solution.iterations;
    mean_time += run.solution.wall_time;
  }
  const double n = static_cast<double>(r.runs.size());
  const auto& best = r.runs[r.best].solution;
  os << "case,runs,mean_objective_opf1,best_objective_opf1,best_objective_relaxed,"
        "best_binary_violation,mean_iterations,mean_time_seconds,frozen_u_feasible,"
        "frozen_u_max_violation\n";
  os << std::setprecision(kMachineDigits);
  os << r.problem_case.name << ',' << r.runs.size() << ',' << mean_obj / n << ','
     << best.objective_opf1 << ',' << best.objective_relaxed << ',' << best.binary_violation << ','
     << mean_it / n << ',' << format_time(mean_time / n, omit_timing) << ','
     << (r.frozen.feasible ? 1 : 0) << ',' << r.frozen.max_violation << '\n';
}

int cmd_dcopf(const DcopfOptions& opts, std::ostream& out, std::ostream& err) {
  DcopfResult res;
  try {
    res = run_dcopf(opts);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRunFailure;
  }

  try {
    ensure_dir(opts.out_dir);
    const fs::path dir(opts.out_dir);
    {
      auto f = open_out(dir / "dcopf_runs.csv");
      write_dcopf_runs_csv(f, res, opts.omit_timing);
    }
    {
      auto f = open_out(dir / "dcopf_summary.csv");
      write_dcopf_summary_csv(f, res, opts.omit_timing);
    }
    {
      auto f = open_out(dir / "dcopf_solution.csv");
      dcopf::write_solution_csv(f, res.runs[res.best].solution);
    }
    {
      dcopf::DcOpfSolution best = res.runs[res.best].solution;
      if (opts.omit_timing) best.wall_time = 0.0;
      auto f = open_out(dir / "dcopf_solution.json");
      f << dcopf::solution_json(res.problem_case, best) << '\n';
    }
    if (opts.dump_trace) {
      ensure_dir((dir / "traces").string());
      for (const auto& run : res.runs) {
        write_trace_file(dir / "traces" / ("dcopf_" + run.init + "_seed" + std::to_string(run.seed) + ".csv"),
                         run.solution.trace);
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRunFailure;
  }

  const auto& best = res.runs[res.best].solution;
  out << "case " << res.problem_case.name << ": " << res.runs.size() << " run(s)\n";
  out << std::left << std::setw(6) << "bus" << std::setw(6) << "u" << std::setw(12) << "P_pv"
      << std::setw(12) << "P_g" << "theta\n";
  for (std::size_t i = 0; i < best.buses.size(); ++i) {
    const auto& b = best.buses[i];
    out << std::left << std::setw(6) << i + 1 << std::setw(6) << dcopf::round_u(b.u) << std::setw(12)
        << sig4(b.p_pv) << std::setw(12) << sig4(b.p_gen) << sig4(b.theta) << '\n';
  }
  out << "objective (rounded u) " << sig4(best.objective_opf1) << ", relaxed "
      << sig4(best.objective_relaxed) << ", binary violation " << sci4(best.binary_violation)
      << ", iterations " << best.iterations << '\n';
  out << "frozen-u re-check: " << (res.frozen.feasible ? "feasible" : "INFEASIBLE")
      << " (max violation " << sci4(res.frozen.max_violation) << ")\n";

  int code = kExitOk;
  for (const auto& run : res.runs) {
    const auto st = run.solution.status;
    if (st == SolveStatus::OracleFailure) {
      err << "run " << run.init << "/" << run.seed << " failed: " << run.solution.message << '\n';
      code = kExitRunFailure;
    } else if (st == SolveStatus::MaxIterations && !opts.allow_maxiter) {
      err << "run " << run.init << "/" << run.seed << " stopped at the iteration cap\n";
      code = kExitRunFailure;
    }
  }
  if (!res.frozen.feasible) {
    err << "rounded u does not admit a feasible power flow\n";
    code = kExitRunFailure;
  }
  return code;
}

// ---------------------------------------------------------------------------
// Trace verification

TraceCheck verify_trace(std::istream& is, double slack) {
  TraceCheck out;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty trace");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) header.push_back(col);
  }
  const auto it = std::find(header.begin(), header.end(), "merit");
  if (it == header.end()) throw std::runtime_error("trace has no merit column");
  const std::size_t col = static_cast<std::size_t>(it - header.begin());

  std::vector<double> merit;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t k = 0; k <= col; ++k) {
      if (!std::getline(ss, cell, ',')) {
        throw std::runtime_error("trace line " + std::to_string(line_no) + " is too short");
      }
    }
    try {
      std::size_t used = 0;
      merit.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw std::runtime_error("trace line " + std::to_string(line_no) + ": bad merit value '" +
                               cell + "'");
    }
  }
  out.rows = merit.size();
  if (merit.empty()) {
    out.ok = true;
    return out;
  }
  out.allowance = slack * (1.0 + std::abs(merit.front()));
  for (std::size_t k = 1; k < merit.size(); ++k) {
    const double inc = merit[k] - merit[k - 1];
    out.max_increase = std::max(out.max_increase, inc);
    if (!(inc <= out.allowance)) ++out.violations;
  }
  out.ok = out.violations == 0;
  return out;
}

int cmd_verify_trace(const std::string& path, double slack, std::ostream& out, std::ostream& err) {
  std::ifstream f(path);
  if (!f) {
    err << "error: cannot open " << path << '\n';
    return kExitUsage;
  }
  try {
    const TraceCheck c = verify_trace(f, slack);
    out << path << ": " << c.rows << " rows, max merit increase " << sci4(c.max_increase)
        << " (allowance " << sci4(c.allowance) << "), " << c.violations << " violation(s)\n";
    return c.ok ? kExitOk : kExitRunFailure;
  } catch (const std::exception& e) {
    err << "error: " << path << ": " << e.what() << '\n';
    return kExitRunFailure;
  }
}

}  // namespace bpladmm::harness
