#include "bpladmm/matpower.hpp"

#include <cctype>
#include <cmath>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace bpladmm::matpower {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> read_number(std::string_view tok) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

struct MatrixReader {
  std::string field;
  bool keep = false;
  Table rows;
  std::vector<double> current;
  int current_line = 0;
  std::vector<int> row_lines;

  void finish_row() {
    if (current.empty()) return;
    if (keep) {
      rows.push_back(std::move(current));
      row_lines.push_back(current_line);
    }
    current.clear();
  }

  // Returns true once the closing bracket is consumed.
  bool feed(const std::string& text, int line) {
    std::string tok;
    auto flush_token = [&]() {
      if (tok.empty()) return;
      if (keep) {
        const auto v = read_number(tok);
        if (!v) throw ParseError("non-numeric token '" + tok + "' in mpc." + field, line);
        if (current.empty()) current_line = line;
        current.push_back(*v);
      }
      tok.clear();
    };
    for (char ch : text) {
      if (ch == ']') {
        flush_token();
        finish_row();
        return true;
      }
      if (ch == ';') {
        flush_token();
        finish_row();
      } else if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
        flush_token();
      } else {
        tok.push_back(ch);
      }
    }
    flush_token();
    finish_row();  // a newline also ends a row
    return false;
  }

  void check_rectangular() const {
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size()) {
        std::ostringstream os;
        os << "ragged row in mpc." << field << ": expected " << rows[0].size() << " columns, found "
           << rows[r].size();
        throw ParseError(os.str(), row_lines[r]);
      }
    }
  }
};

}  // namespace

MatpowerCase parse_case(const std::string& text) {
  MatpowerCase mp;
  bool have_base = false, have_bus = false, have_branch = false;
  std::optional<MatrixReader> reader;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;

  auto close_matrix = [&]() {
    reader->check_rectangular();
    if (reader->field == "bus") {
      mp.bus = std::move(reader->rows);
      have_bus = true;
    } else if (reader->field == "branch") {
      mp.branch = std::move(reader->rows);
      have_branch = true;
    } else if (reader->field == "gen") {
      mp.gen = std::move(reader->rows);
    } else if (reader->field == "gencost") {
      mp.gencost = std::move(reader->rows);
    }
    reader.reset();
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const auto pct = raw.find('%');
    std::string line = pct == std::string::npos ? raw : raw.substr(0, pct);

    if (reader) {
      if (reader->feed(line, line_no)) close_matrix();
      continue;
    }

    const std::string t = trim(line);
    if (t.rfind("mpc.", 0) != 0) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) continue;
    const std::string field = trim(t.substr(4, eq - 4));
    std::string rhs = trim(t.substr(eq + 1));

    if (!rhs.empty() && rhs.front() == '[') {
      reader.emplace();
      reader->field = field;
      reader->keep = field == "bus" || field == "branch" || field == "gen" || field == "gencost";
      if (reader->feed(rhs.substr(1), line_no)) close_matrix();
      continue;
    }
    if (field == "baseMVA") {
      if (!rhs.empty() && rhs.back() == ';') rhs.pop_back();
      const auto v = read_number(trim(rhs));
      if (!v) throw ParseError("baseMVA is not a number", line_no);
      if (!(*v > 0.0)) throw ParseError("baseMVA must be positive", line_no);
      mp.base_mva = *v;
      have_base = true;
    }
  }
  if (reader) throw ParseError("unterminated matrix mpc." + reader->field, line_no);
  if (!have_base) throw ParseError("missing required field mpc.baseMVA", line_no);
  if (!have_bus) throw ParseError("missing required field mpc.bus", line_no);
  if (!have_branch) throw ParseError("missing required field mpc.branch", line_no);

  auto need_cols = [line_no](const Table& t, std::size_t cols, const char* name) {
    if (!t.empty() && t[0].size() < cols) {
      throw ParseError(std::string("mpc.") + name + " needs at least " + std::to_string(cols) +
                           " columns",
                       line_no);
    }
  };
  need_cols(mp.bus, 3, "bus");
  need_cols(mp.branch, 4, "branch");
  need_cols(mp.gen, 9, "gen");
  need_cols(mp.gencost, 4, "gencost");

  std::map<long, bool> ids;
  for (const auto& row : mp.bus) ids[std::lround(row[0])] = true;
  for (const auto& row : mp.branch) {
    if (!ids.count(std::lround(row[0])) || !ids.count(std::lround(row[1]))) {
      throw ParseError("branch references unknown bus", line_no);
    }
  }
  return mp;
}

MatpowerCase load_case(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open MATPOWER file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_case(ss.str());
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ":" + std::to_string(e.line()) + ": " + e.what());
  }
}

dcopf::DcOpfCase to_dcopf_case(const MatpowerCase& mp, const ConversionOptions& opts) {
  if (!(mp.base_mva > 0.0)) throw std::invalid_argument("to_dcopf_case: baseMVA must be positive");
  dcopf::DcOpfCase c;
  c.name = "matpower";
  c.pv_cost = opts.pv_cost;
  c.pv_capacity = opts.pv_capacity;
  c.line_limit = opts.line_limit;
  c.gamma = opts.gamma;
  c.eta = opts.eta;

  std::map<long, std::size_t> index;
  for (const auto& row : mp.bus) {
    index[std::lround(row[0])] = c.buses.size();
    dcopf::Bus b;
    b.demand = row[2] / mp.base_mva;
    c.buses.push_back(b);
  }

  for (std::size_t r = 0; r < mp.branch.size(); ++r) {
    const auto& row = mp.branch[r];
    if (row.size() > 10 && row[10] <= 0.0) continue;  // out of service
    if (row[3] == 0.0) {
      throw std::invalid_argument("to_dcopf_case: branch row " + std::to_string(r + 1) +
                                  " has zero reactance");
    }
    c.lines.push_back({index.at(std::lround(row[0])), index.at(std::lround(row[1])), 1.0 / row[3]});
  }

  std::vector<bool> has_gen(c.buses.size(), false);
  for (std::size_t g = 0; g < mp.gen.size(); ++g) {
    const auto& row = mp.gen[g];
    if (row[7] <= 0.0) continue;
    const auto it = index.find(std::lround(row[0]));
    if (it == index.end()) {
      throw std::invalid_argument("to_dcopf_case: gen row " + std::to_string(g + 1) +
                                  " references unknown bus");
    }
    dcopf::Bus& bus = c.buses[it->second];
    bus.gen_capacity += row[8] / mp.base_mva;

    double a = 0.0, b = 0.0, k = 0.0;
    if (g < mp.gencost.size()) {
      const auto& cost = mp.gencost[g];
      const int n = static_cast<int>(std::lround(cost[3]));
      if (std::lround(cost[0]) != 2 || n < 1 || n > 3 ||
          cost.size() < static_cast<std::size_t>(4 + n)) {
        throw std::invalid_argument("to_dcopf_case: gencost row " + std::to_string(g + 1) +
                                    " is not a polynomial of degree <= 2");
      }
      double coef[3] = {0.0, 0.0, 0.0};  // c2 c1 c0
      for (int t = 0; t < n; ++t) coef[3 - n + t] = cost[4 + t];
      a = coef[0];
      b = coef[1];
      k = coef[2];
    }
    if (has_gen[it->second]) {
      std::clog << "warning: bus " << row[0]
                << " has several generators; using the first generator's cost\n";
      continue;
    }
    has_gen[it->second] = true;
    bus.gen_a = a;
    bus.gen_b = b;
    bus.gen_c = k;
  }
  dcopf::validate_case(c);
  return c;
}

}  // namespace bpladmm::matpower
