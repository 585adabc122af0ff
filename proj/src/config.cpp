#include "mflab/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mflab/util.hpp"

namespace mflab {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("config: " + what);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item.push_back(c);
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

double parse_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) fail(key + ": trailing characters in '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail(key + ": not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    fail(key + ": out of range: '" + s + "'");
  }
}

long long parse_int(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) fail(key + ": trailing characters in '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail(key + ": not an integer: '" + s + "'");
  } catch (const std::out_of_range&) {
    fail(key + ": out of range: '" + s + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "on" || s == "1") return true;
  if (s == "false" || s == "off" || s == "0") return false;
  fail(key + ": expected true/false, got '" + s + "'");
}

std::string number_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const std::set<std::string> kDensityNames = {"uniform", "gaussian",
                                             "gaussian_pair"};
const std::set<std::string> kPhaseNames = {"zero", "quadratic_bump"};

}  // namespace

void ExperimentConfig::validate() const {
  grid.validate();

  if (hbar_list.empty()) fail("hbar_list is required and must be nonempty");
  for (double h : hbar_list)
    if (!(h > 0.0) || !std::isfinite(h)) fail("hbar_list entries must be positive");
  for (std::size_t i = 1; i < hbar_list.size(); ++i)
    if (!(hbar_list[i] < hbar_list[i - 1]))
      fail("hbar_list must be strictly decreasing");

  if (n_list.empty()) fail("n_list is required and must be nonempty");
  for (int n : n_list)
    if (n < 1 || n > 4096) fail("n_list entries must lie in [1, 4096]");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (!(n_list[i] > n_list[i - 1])) fail("n_list must be strictly increasing");

  if (!(t_final > 0.0) || !std::isfinite(t_final)) fail("t_final must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be positive");
  if (dt > t_final) fail("dt must not exceed t_final");
  if (sample_every < 1) fail("sample_every must be at least 1");

  if (!kDensityNames.count(initial_density.name))
    fail("initial_density profile '" + initial_density.name + "' unknown");
  if (!kPhaseNames.count(initial_phase.name))
    fail("initial_phase profile '" + initial_phase.name + "' unknown");
  // a localized density must fit the box with room for its tails: the
  // support radius is treated as 2 sigma and the box must hold 16 sigma
  auto sig = initial_density.params.find("sigma");
  if (sig != initial_density.params.end() &&
      !(grid.box_length >= 16.0 * sig->second - 1e-12 * grid.box_length))
    fail("box_length must be at least 16 * sigma of the initial density");

  if (output_dir.empty()) fail("output_dir must be nonempty");
  if (!(gronwall_c >= 0.0) || !std::isfinite(gronwall_c))
    fail("gronwall_c must be nonnegative");
  if (draws_per_n < 1) fail("draws_per_n must be at least 1");
}

// default density scale ties to the box: 16 sigma fills the box exactly.
// Applied both at parse time and before canonical serialization, so a config
// built in code hashes identically to its own [config.ini] echo.
static void inject_defaults(ExperimentConfig& c) {
  if (!c.initial_density.params.count("sigma") &&
      c.initial_density.name != "uniform")
    c.initial_density.params["sigma"] = c.grid.box_length / 16.0;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  c.grid.n = 0;  // sentinels: required keys must appear
  c.grid.box_length = 0.0;
  c.initial_density.name = "gaussian";
  c.initial_phase.name = "quadratic_bump";

  std::set<std::string> seen;
  auto once = [&seen](const std::string& section, const std::string& key) {
    if (!seen.insert(section + "." + key).second)
      fail("duplicate key '" + key + "' in [" + section + "]");
  };

  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t cut = line.find_first_of("#;");
    if (cut != std::string::npos) line = line.substr(0, cut);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header: " + line);
      section = trim(line.substr(1, line.size() - 2));
      static const std::set<std::string> kSections = {
          "grid", "sweep", "time", "initial_density", "initial_phase", "run"};
      if (!kSections.count(section)) fail("unknown section [" + section + "]");
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail("line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      fail("line " + std::to_string(line_no) + ": empty key or value");
    if (section.empty()) fail("key '" + key + "' appears before any section");
    once(section, key);

    if (section == "grid") {
      if (key == "n") c.grid.n = int(parse_int(key, value));
      else if (key == "dim") c.grid.dim = int(parse_int(key, value));
      else if (key == "box_length") c.grid.box_length = parse_double(key, value);
      else fail("unknown key '" + key + "' in [grid]");
    } else if (section == "sweep") {
      if (key == "hbar_list") {
        for (const std::string& item : split_list(value))
          c.hbar_list.push_back(parse_double(key, item));
      } else if (key == "n_list") {
        for (const std::string& item : split_list(value))
          c.n_list.push_back(int(parse_int(key, item)));
      } else {
        fail("unknown key '" + key + "' in [sweep]");
      }
    } else if (section == "time") {
      if (key == "t_final") c.t_final = parse_double(key, value);
      else if (key == "dt") c.dt = parse_double(key, value);
      else if (key == "sample_every") c.sample_every = int(parse_int(key, value));
      else fail("unknown key '" + key + "' in [time]");
    } else if (section == "initial_density" || section == "initial_phase") {
      ProfileSpec& p =
          section == "initial_density" ? c.initial_density : c.initial_phase;
      if (key == "profile") p.name = value;
      else p.params[key] = parse_double(key, value);
    } else {  // run
      if (key == "seed") c.seed = std::uint64_t(parse_int(key, value));
      else if (key == "output_dir") c.output_dir = value;
      else if (key == "gronwall_c") c.gronwall_c = parse_double(key, value);
      else if (key == "draws_per_n") c.draws_per_n = int(parse_int(key, value));
      else if (key == "free_space_images") c.free_space_images = parse_bool(key, value);
      else if (key == "self_consistent_halves")
        c.self_consistent_halves = parse_bool(key, value);
      else fail("unknown key '" + key + "' in [run]");
    }
  }

  if (c.grid.n == 0) fail("[grid] n is required");
  if (c.grid.box_length == 0.0) fail("[grid] box_length is required");
  if (!(c.t_final > 0.0)) fail("[time] t_final is required");
  if (!(c.dt > 0.0)) fail("[time] dt is required");
  if (c.hbar_list.empty()) fail("[sweep] hbar_list is required");
  if (c.n_list.empty()) fail("[sweep] n_list is required");
  inject_defaults(c);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string canonical_config_text(const ExperimentConfig& c_in) {
  ExperimentConfig c = c_in;
  inject_defaults(c);
  std::ostringstream out;
  out << "[grid]\n";
  out << "n = " << c.grid.n << "\n";
  out << "dim = " << c.grid.dim << "\n";
  out << "box_length = " << number_text(c.grid.box_length) << "\n";
  out << "\n[sweep]\n";
  out << "hbar_list =";
  for (std::size_t i = 0; i < c.hbar_list.size(); ++i)
    out << (i ? ", " : " ") << number_text(c.hbar_list[i]);
  out << "\nn_list =";
  for (std::size_t i = 0; i < c.n_list.size(); ++i)
    out << (i ? ", " : " ") << c.n_list[i];
  out << "\n\n[time]\n";
  out << "t_final = " << number_text(c.t_final) << "\n";
  out << "dt = " << number_text(c.dt) << "\n";
  out << "sample_every = " << c.sample_every << "\n";
  for (int which = 0; which < 2; ++which) {
    const ProfileSpec& p = which == 0 ? c.initial_density : c.initial_phase;
    out << "\n[" << (which == 0 ? "initial_density" : "initial_phase") << "]\n";
    out << "profile = " << p.name << "\n";
    for (const auto& kv : p.params)  // std::map: already key-sorted
      out << kv.first << " = " << number_text(kv.second) << "\n";
  }
  out << "\n[run]\n";
  out << "seed = " << c.seed << "\n";
  out << "output_dir = " << c.output_dir << "\n";
  out << "gronwall_c = " << number_text(c.gronwall_c) << "\n";
  out << "draws_per_n = " << c.draws_per_n << "\n";
  out << "free_space_images = " << (c.free_space_images ? "true" : "false") << "\n";
  out << "self_consistent_halves = "
      << (c.self_consistent_halves ? "true" : "false") << "\n";
  return out.str();
}

std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config_text(c))));
  return buf;
}

}  // namespace mflab
