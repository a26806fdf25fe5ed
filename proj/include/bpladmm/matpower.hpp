#pragma once

// Reader for MATPOWER case scripts. Only the `mpc.<field> = value;` and
// `mpc.<field> = [ ... ];` idioms are understood; everything else is skipped.

#include <stdexcept>
#include <string>
#include <vector>

#include "bpladmm/dcopf.hpp"

namespace bpladmm::matpower {

using Table = std::vector<std::vector<double>>;

struct MatpowerCase {
  double base_mva = 0.0;
  Table bus;      // bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin ...
  Table branch;   // fbus tbus r x b rateA rateB rateC ratio angle status ...
  Table gen;      // bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin ...
  Table gencost;  // model startup shutdown n c(n-1) ... c0
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Throws ParseError (with a line number) for malformed matrices and for a
/// missing baseMVA, bus or branch field.
MatpowerCase parse_case(const std::string& text);
MatpowerCase load_case(const std::string& path);

struct ConversionOptions {
  double pv_cost = 1.0;
  double pv_capacity = 0.8;  // pu
  double line_limit = 3.0;   // pu
  double gamma = 80.0;
  double eta = 900.0;
};

/// D_i = Pd / baseMVA, b_ij = 1 / x (parallel branches add), generator costs
/// from polynomial gencost rows, capacities Pmax / baseMVA.
dcopf::DcOpfCase to_dcopf_case(const MatpowerCase& mp, const ConversionOptions& opts = {});

}  // namespace bpladmm::matpower
