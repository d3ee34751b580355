#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <tircf/core.hpp>
#include <tircf/tracker.hpp>

namespace tircf {
namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, int line) {
  double v = 0.0;
  const char* b = s.data();
  const auto res = std::from_chars(b, b + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != b + s.size())
    throw TypeMismatch("line " + std::to_string(line) + ": expected a number, got '" + s + "'");
  return v;
}

inline int parse_int(const std::string& s, int line) {
  int v = 0;
  const char* b = s.data();
  const auto res = std::from_chars(b, b + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != b + s.size())
    throw TypeMismatch("line " + std::to_string(line) + ": expected an integer, got '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& s, int line) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw TypeMismatch("line " + std::to_string(line) + ": expected true/false, got '" + s + "'");
}

inline std::vector<double> parse_double_list(const std::string& s, int line) {
  std::string spaced = s;
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  std::istringstream in(spaced);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_double(tok, line));
  if (out.empty())
    throw TypeMismatch("line " + std::to_string(line) + ": expected a list of numbers");
  return out;
}

inline std::string format_double_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

struct ConfigField {
  std::function<std::string(const TrackerConfig&)> get;
  std::function<void(TrackerConfig&, const std::string&, int)> set;
};

template <class Ref>
ConfigField double_field(Ref ref) {
  return {[ref](const TrackerConfig& c) { return format_double(ref(c)); },
          [ref](TrackerConfig& c, const std::string& s, int ln) { ref(c) = parse_double(s, ln); }};
}

template <class Ref>
ConfigField int_field(Ref ref) {
  return {[ref](const TrackerConfig& c) { return std::to_string(ref(c)); },
          [ref](TrackerConfig& c, const std::string& s, int ln) { ref(c) = parse_int(s, ln); }};
}

template <class Ref>
ConfigField bool_field(Ref ref) {
  return {[ref](const TrackerConfig& c) { return ref(c) ? std::string("true") : std::string("false"); },
          [ref](TrackerConfig& c, const std::string& s, int ln) { ref(c) = parse_bool(s, ln); }};
}

template <class Ref>
ConfigField list_field(Ref ref) {
  return {[ref](const TrackerConfig& c) { return format_double_list(ref(c)); },
          [ref](TrackerConfig& c, const std::string& s, int ln) { ref(c) = parse_double_list(s, ln); }};
}

using ConfigSection = std::vector<std::pair<std::string, ConfigField>>;

inline const std::vector<std::pair<std::string, ConfigSection>>& config_schema() {
  static const std::vector<std::pair<std::string, ConfigSection>> schema = [] {
    std::vector<std::pair<std::string, ConfigSection>> s;
    s.push_back({"tracker",
                 {{"learning_rate", double_field([](auto& c) -> auto& { return c.learning_rate; })},
                  {"sr_trigger_px", int_field([](auto& c) -> auto& { return c.sr_trigger_px; })},
                  {"scales", list_field([](auto& c) -> auto& { return c.scales; })},
                  {"scale_penalty", double_field([](auto& c) -> auto& { return c.scale_penalty; })},
                  {"padding", double_field([](auto& c) -> auto& { return c.padding; })},
                  {"label_sigma_factor",
                   double_field([](auto& c) -> auto& { return c.label_sigma_factor; })},
                  {"use_astf", bool_field([](auto& c) -> auto& { return c.use_astf; })},
                  {"use_epsr", bool_field([](auto& c) -> auto& { return c.use_epsr; })},
                  {"use_gesr", bool_field([](auto& c) -> auto& { return c.use_gesr; })}}});
    s.push_back({"features",
                 {{"cell_size", int_field([](auto& c) -> auto& { return c.features.cell_size; })},
                  {"orientation_bins",
                   int_field([](auto& c) -> auto& { return c.features.orientation_bins; })},
                  {"window_size",
                   int_field([](auto& c) -> auto& { return c.features.window_size; })}}});
    s.push_back({"astf",
                 {{"alpha1", double_field([](auto& c) -> auto& { return c.astf.alpha1; })},
                  {"alpha2", double_field([](auto& c) -> auto& { return c.astf.alpha2; })},
                  {"beta1", double_field([](auto& c) -> auto& { return c.astf.beta1; })},
                  {"beta2", double_field([](auto& c) -> auto& { return c.astf.beta2; })},
                  {"gamma_ridge", double_field([](auto& c) -> auto& { return c.astf.gamma_ridge; })},
                  {"delta1", double_field([](auto& c) -> auto& { return c.astf.delta1; })},
                  {"lambda1_g", double_field([](auto& c) -> auto& { return c.astf.lambda1_g; })},
                  {"lambda2_w", double_field([](auto& c) -> auto& { return c.astf.lambda2_w; })},
                  {"eta_w", double_field([](auto& c) -> auto& { return c.astf.eta_w; })},
                  {"eps_sparse", double_field([](auto& c) -> auto& { return c.astf.eps_sparse; })},
                  {"max_admm_iters",
                   int_field([](auto& c) -> auto& { return c.astf.max_admm_iters; })},
                  {"tol", double_field([](auto& c) -> auto& { return c.astf.tol; })}}});
    s.push_back({"spatial",
                 {{"a2", double_field([](auto& c) -> auto& { return c.sp.a2; })},
                  {"lam1_s", double_field([](auto& c) -> auto& { return c.sp.lam1_s; })},
                  {"gam1", double_field([](auto& c) -> auto& { return c.sp.gam1; })},
                  {"mu1", double_field([](auto& c) -> auto& { return c.sp.mu1; })},
                  {"lam2_s", double_field([](auto& c) -> auto& { return c.sp.lam2_s; })},
                  {"gam2", double_field([](auto& c) -> auto& { return c.sp.gam2; })},
                  {"mu2", double_field([](auto& c) -> auto& { return c.sp.mu2; })},
                  {"p_norm", double_field([](auto& c) -> auto& { return c.sp.p_norm; })}}});
    s.push_back({"temporal",
                 {{"beta1", double_field([](auto& c) -> auto& { return c.tp.beta1; })},
                  {"beta2", double_field([](auto& c) -> auto& { return c.tp.beta2; })},
                  {"delta_t", double_field([](auto& c) -> auto& { return c.tp.delta_t; })},
                  {"eps_off", double_field([](auto& c) -> auto& { return c.tp.eps_off; })},
                  {"gamma_off", double_field([](auto& c) -> auto& { return c.tp.gamma_off; })},
                  {"k_weight", double_field([](auto& c) -> auto& { return c.tp.k_weight; })}}});
    s.push_back({"epsr",
                 {{"lambda1", double_field([](auto& c) -> auto& { return c.epsr.lambda1; })},
                  {"lambda2", double_field([](auto& c) -> auto& { return c.epsr.lambda2; })},
                  {"lambda3", double_field([](auto& c) -> auto& { return c.epsr.lambda3; })},
                  {"mu0", double_field([](auto& c) -> auto& { return c.epsr.mu0; })},
                  {"rho", double_field([](auto& c) -> auto& { return c.epsr.rho; })},
                  {"max_iters", int_field([](auto& c) -> auto& { return c.epsr.max_iters; })},
                  {"tol", double_field([](auto& c) -> auto& { return c.epsr.tol; })},
                  {"verbatim_eq19",
                   bool_field([](auto& c) -> auto& { return c.epsr.verbatim_eq19; })}}});
    s.push_back({"gesr",
                 {{"m", double_field([](auto& c) -> auto& { return c.gesr.m; })},
                  {"q", double_field([](auto& c) -> auto& { return c.gesr.q; })},
                  {"lam1_sr", double_field([](auto& c) -> auto& { return c.gesr.lam1_sr; })},
                  {"lam2_sr", double_field([](auto& c) -> auto& { return c.gesr.lam2_sr; })},
                  {"eta", double_field([](auto& c) -> auto& { return c.gesr.eta; })},
                  {"t_max", int_field([](auto& c) -> auto& { return c.gesr.t_max; })},
                  {"stop_eps", double_field([](auto& c) -> auto& { return c.gesr.stop_eps; })},
                  {"scale", int_field([](auto& c) -> auto& { return c.gesr.scale; })},
                  {"blur_sigma", double_field([](auto& c) -> auto& { return c.gesr.blur_sigma; })},
                  {"step", double_field([](auto& c) -> auto& { return c.gesr.step; })}}});
    return s;
  }();
  return schema;
}

inline int edit_distance(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

template <class Names>
std::string nearest_name(const std::string& key, const Names& names) {
  std::string best;
  int best_d = 1 << 30;
  for (const auto& n : names) {
    const int d = edit_distance(key, n);
    if (d < best_d || (d == best_d && n < best)) {
      best_d = d;
      best = n;
    }
  }
  return best;
}

inline std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline TrackerConfig parse_config(const std::string& text) {
  TrackerConfig cfg;
  const auto& schema = detail::config_schema();
  const detail::ConfigSection* section = nullptr;
  std::string section_name;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    line_no += 1;
    const size_t hash = raw.find_first_of("#;");
    std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw UnparsableLine("line " + std::to_string(line_no) + ": unterminated section header",
                             line_no);
      section_name = detail::trim(line.substr(1, line.size() - 2));
      section = nullptr;
      for (const auto& [name, fields] : schema)
        if (name == section_name) section = &fields;
      if (!section) {
        std::vector<std::string> names;
        for (const auto& [name, fields] : schema) names.push_back(name);
        const std::string near = detail::nearest_name(section_name, names);
        throw UnknownKey("line " + std::to_string(line_no) + ": unknown section '" + section_name +
                             "' (did you mean '" + near + "'?)",
                         section_name, near);
      }
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw UnparsableLine("line " + std::to_string(line_no) + ": expected 'key = value'",
                           line_no);
    if (!section)
      throw UnparsableLine("line " + std::to_string(line_no) + ": key outside any [section]",
                           line_no);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const detail::ConfigField* field = nullptr;
    for (const auto& [name, f] : *section)
      if (name == key) field = &f;
    if (!field) {
      std::vector<std::string> names;
      for (const auto& [name, f] : *section) names.push_back(name);
      const std::string near = detail::nearest_name(key, names);
      throw UnknownKey("line " + std::to_string(line_no) + ": unknown key '" + key + "' in [" +
                           section_name + "] (did you mean '" + near + "'?)",
                       key, near);
    }
    field->set(cfg, value, line_no);
  }
  return cfg;
}

inline std::string serialize_config(const TrackerConfig& cfg) {
  std::string out;
  for (const auto& [name, fields] : detail::config_schema()) {
    out += "[" + name + "]\n";
    for (const auto& [key, field] : fields) out += key + " = " + field.get(cfg) + "\n";
    out += "\n";
  }
  return out;
}

inline TrackerConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReadError("config: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

inline void save_config(const TrackerConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WriteError("config: cannot write " + path);
  out << serialize_config(cfg);
  if (!out) throw WriteError("config: write failed for " + path);
}

// Stable content hash of the canonical serialization (FNV-1a, 64-bit).
inline std::string config_hash(const TrackerConfig& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return std::string(buf);
}

}  // namespace tircf
