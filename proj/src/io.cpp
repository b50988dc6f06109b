#include "ergodic_smpc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ergodic_smpc/error.hpp"

namespace ergodic_smpc {
namespace fs = std::filesystem;
namespace {

void dump_into(const Json& j, int indent, int depth, std::string& out) {
  const auto pad = [&](int level) {
    if (indent >= 0) {
      out += '\n';
      out.append(static_cast<std::size_t>(indent * level), ' ');
    }
  };
  const char* sep = indent >= 0 ? ": " : ":";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        first = false;
        pad(depth + 1);
        out += Json(key).dump();
        out += sep;
        dump_into(value, indent, depth + 1, out);
      }
      pad(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat && indent >= 0 ? ", " : ",";
        first = false;
        if (!flat) pad(depth + 1);
        dump_into(e, indent, depth + 1, out);
      }
      if (!flat) pad(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw IoError(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const Json& j) {
  if (j.is_null()) return std::nan("");
  if (!j.is_number()) throw IoError("expected a number");
  return j.get<double>();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s.empty()) throw IoError("empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw IoError("malformed number '" + s + "'");
  return v;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

Json double_map(const std::map<std::string, double>& m) {
  Json j = Json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

std::map<std::string, double> double_map_from(const Json& j) {
  std::map<std::string, double> m;
  for (const auto& [k, v] : j.items()) m[k] = number(v);
  return m;
}

Json per_dim(const std::vector<WindowPairDistances>& pairs, std::vector<double> WindowPairDistances::*member) {
  Json j = Json::array();
  for (const auto& p : pairs) j.push_back(p.*member);
  return j;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dump_json(const Json& j, int indent) {
  std::string out;
  dump_into(j, indent, 0, out);
  out += '\n';
  return out;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os.flush()) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Json to_json(const Eigen::MatrixXd& m) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    j.push_back(std::move(row));
  }
  return j;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) throw IoError("expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw IoError("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = number(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

Json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) throw IoError("expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i]);
  return v;
}

Json to_json(const NoiseSpec& noise) {
  Json pattern = Json::array();
  for (const auto& [r, c] : noise.pattern) pattern.push_back({r, c});
  return {{"pattern", pattern}, {"bound", noise.bound}};
}

NoiseSpec noise_from_json(const Json& j) {
  NoiseSpec n;
  n.bound = number(field(j, "bound"));
  for (const auto& p : field(j, "pattern")) {
    if (!p.is_array() || p.size() != 2) throw IoError("noise position must be a [row, col] pair");
    n.pattern.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
  }
  return n;
}

Json to_json(const MPCProblem& p) {
  return {{"A", to_json(p.A)},         {"B", to_json(p.B)}, {"Q", to_json(p.Q)},
          {"R", to_json(p.R)},         {"z", to_json(Eigen::VectorXd(p.z))},
          {"noise", to_json(p.noise)}, {"solver_noise", p.solver_noise}};
}

MPCProblem problem_from_json(const Json& j) {
  MPCProblem p;
  try {
    p.A = matrix_from_json(field(j, "A"));
    p.B = matrix_from_json(field(j, "B"));
    p.Q = matrix_from_json(field(j, "Q"));
    p.R = matrix_from_json(field(j, "R"));
    p.z = vector_from_json(field(j, "z"));
    p.noise = noise_from_json(field(j, "noise"));
    p.solver_noise = j.contains("solver_noise") ? number(j.at("solver_noise")) : 0.0;
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed problem: ") + e.what());
  }
  validate(p);
  return p;
}

Json to_json(const GenerationSpec& s) {
  return {{"d", s.d},
          {"m", s.m},
          {"lambda_a", s.lambda_a},
          {"lambda_q", s.lambda_q},
          {"lambda_r", s.lambda_r},
          {"noise", to_json(s.noise)},
          {"seed", s.seed}};
}

GenerationSpec generation_spec_from_json(const Json& j, GenerationSpec s) {
  try {
    if (j.contains("d")) s.d = j.at("d").get<std::size_t>();
    if (j.contains("m")) s.m = j.at("m").get<std::size_t>();
    if (j.contains("lambda_a")) s.lambda_a = j.at("lambda_a").get<std::vector<double>>();
    if (j.contains("lambda_q")) s.lambda_q = j.at("lambda_q").get<std::vector<double>>();
    if (j.contains("lambda_r")) s.lambda_r = j.at("lambda_r").get<std::vector<double>>();
    if (j.contains("noise")) s.noise = noise_from_json(j.at("noise"));
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed generation spec: ") + e.what());
  }
  validate(s);
  return s;
}

Json to_json(const ConditionReport& r) {
  Json witness = Json::object();
  for (const auto& [k, v] : r.witness) witness[k] = v;
  return {{"condition", r.condition},
          {"verdict", to_string(r.verdict)},
          {"evidence", to_string(r.evidence)},
          {"label", r.verdict_label()},
          {"constants", double_map(r.constants)},
          {"witness", witness},
          {"parameters", double_map(r.parameters)},
          {"seed", r.seed}};
}

ConditionReport report_from_json(const Json& j) {
  ConditionReport r;
  try {
    r.condition = field(j, "condition").get<std::string>();
    const auto verdict = field(j, "verdict").get<std::string>();
    if (verdict == "pass") {
      r.verdict = Verdict::pass;
    } else if (verdict == "fail") {
      r.verdict = Verdict::fail;
    } else if (verdict == "inconclusive") {
      r.verdict = Verdict::inconclusive;
    } else {
      throw IoError("unknown verdict '" + verdict + "'");
    }
    r.evidence = field(j, "evidence").get<std::string>() == "certified" ? Evidence::certified : Evidence::sampled;
    r.constants = double_map_from(field(j, "constants"));
    r.parameters = double_map_from(field(j, "parameters"));
    for (const auto& [k, v] : field(j, "witness").items()) {
      std::vector<double> w;
      for (const auto& e : v) w.push_back(number(e));
      r.witness[k] = std::move(w);
    }
    r.seed = field(j, "seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed condition report: ") + e.what());
  }
  return r;
}

Json to_json(const DiagnosticReport& r) {
  Json windows = Json::array();
  for (const auto& w : r.windows) windows.push_back({w.start, w.end});
  return {{"verdict", to_string(r.verdict)},
          {"tolerance", r.tolerance},
          {"n_bins", r.n_bins},
          {"burn_in", r.burn_in},
          {"windows", windows},
          {"tv", per_dim(r.consecutive, &WindowPairDistances::tv)},
          {"ks", per_dim(r.consecutive, &WindowPairDistances::ks)},
          {"w1", per_dim(r.consecutive, &WindowPairDistances::w1)},
          {"tv_slope", r.tv_slope}};
}

DiagnosticReport diagnostic_from_json(const Json& j) {
  DiagnosticReport r;
  try {
    r.verdict = field(j, "verdict").get<std::string>() == "stabilizing" ? StationarityVerdict::stabilizing
                                                                        : StationarityVerdict::not_stabilizing;
    r.tolerance = number(field(j, "tolerance"));
    r.n_bins = field(j, "n_bins").get<std::size_t>();
    r.burn_in = field(j, "burn_in").get<std::size_t>();
    for (const auto& w : field(j, "windows")) r.windows.push_back({w.at(0).get<std::size_t>(), w.at(1).get<std::size_t>()});
    const auto& tv = field(j, "tv");
    const auto& ks = field(j, "ks");
    const auto& w1 = field(j, "w1");
    for (std::size_t i = 0; i < tv.size(); ++i) {
      r.consecutive.push_back({tv.at(i).get<std::vector<double>>(), ks.at(i).get<std::vector<double>>(),
                               w1.at(i).get<std::vector<double>>()});
    }
    r.tv_slope = field(j, "tv_slope").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed diagnostic report: ") + e.what());
  }
  return r;
}

std::string trajectory_csv(const Trajectory& traj) {
  const std::size_t d = traj.dimension();
  std::string out = "k";
  for (std::size_t i = 0; i < d; ++i) out += ",x" + std::to_string(i);
  out += ",choice\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out += std::to_string(k);
    for (Eigen::Index i = 0; i < traj.states[k].size(); ++i) out += "," + format_double(traj.states[k][i]);
    out += ',';
    if (k > 0 && k - 1 < traj.selections.size()) {
      if (const auto* idx = std::get_if<std::size_t>(&traj.selections[k - 1])) out += std::to_string(*idx);
    }
    out += '\n';
  }
  return out;
}

Trajectory parse_trajectory_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw IoError("empty trajectory file");
  const auto header = split(lines[0], ',');
  if (header.size() < 3 || header.front() != "k" || header.back() != "choice") throw IoError("bad trajectory header");
  const std::size_t d = header.size() - 2;
  for (std::size_t i = 0; i < d; ++i) {
    if (header[i + 1] != "x" + std::to_string(i)) throw IoError("bad trajectory header");
  }
  Trajectory traj;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split(lines[r], ',');
    if (cells.size() != d + 2) throw IoError("trajectory row " + std::to_string(r) + " has the wrong width");
    if (cells[0] != std::to_string(r - 1)) throw IoError("trajectory rows out of order");
    StateVector x(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) x[static_cast<Eigen::Index>(i)] = parse_double(cells[i + 1]);
    traj.states.push_back(std::move(x));
    if (r > 1 && !cells.back().empty()) traj.selections.emplace_back(static_cast<std::size_t>(std::stoull(cells.back())));
  }
  return traj;
}

std::string histogram_csv(const EmpiricalMeasure& m) {
  std::string out = "dim,bin_lo,bin_hi,proportion\n";
  for (std::size_t i = 0; i < m.dimension(); ++i) {
    const auto one = histogram_csv(m, i);
    out += one.substr(one.find('\n') + 1);
  }
  return out;
}

std::string histogram_csv(const EmpiricalMeasure& m, std::size_t dim) {
  std::string out = "dim,bin_lo,bin_hi,proportion\n";
  const auto& e = m.edges.at(dim);
  for (std::size_t k = 0; k + 1 < e.size(); ++k) {
    out += std::to_string(dim) + "," + format_double(e[k]) + "," + format_double(e[k + 1]) + "," +
           format_double(m.proportions[dim][k]) + "\n";
  }
  return out;
}

EmpiricalMeasure parse_histogram_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != "dim,bin_lo,bin_hi,proportion") throw IoError("bad histogram header");
  EmpiricalMeasure m;
  std::optional<std::size_t> current;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split(lines[r], ',');
    if (cells.size() != 4) throw IoError("histogram row " + std::to_string(r) + " has the wrong width");
    const auto dim = static_cast<std::size_t>(std::stoull(cells[0]));
    const double lo = parse_double(cells[1]), hi = parse_double(cells[2]), p = parse_double(cells[3]);
    if (!current || dim != *current) {
      if (current && dim < *current) throw IoError("histogram dimensions out of order");
      current = dim;
      m.edges.push_back({lo});
      m.proportions.emplace_back();
    }
    if (m.edges.back().back() != lo) throw IoError("histogram bins are not contiguous");
    m.edges.back().push_back(hi);
    m.proportions.back().push_back(p);
  }
  return m;
}

}  // namespace ergodic_smpc
