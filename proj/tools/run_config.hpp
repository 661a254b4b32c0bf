#pragma once

// Flat key=value run configuration with [sections] and # comments.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace exclab::cli {

struct ConfigError : std::runtime_error {
  int line = 0;  // 0 when the value came from a flag
  ConfigError(int ln, const std::string& what) : std::runtime_error(what), line(ln) {}
};

struct RunConfig {
  // [model]
  std::vector<int> N{64};
  std::vector<double> theta{0.0};
  double kappa = 1.0, alpha = 0.2, beta = 0.8;
  std::string profile = "step";
  std::optional<double> profile_a, profile_b;
  // [kernel]
  std::string kernel = "nn";
  double gamma = 3.0;
  // [schedule]
  std::vector<double> times{0.05};
  // [ensemble]
  std::size_t replicas = 200;
  std::uint64_t master_seed = 1;
  unsigned threads = 0;  // 0: EXH_THREADS, else 1
  std::string mode = "auto";
  long long max_events = 4'000'000'000LL;
  // [output]
  std::string out = "out";
  bool plots = true;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& v) {
  if constexpr (std::is_unsigned_v<T>)
    if (!v.empty() && v.front() == '-') throw std::invalid_argument("must be non-negative: '" + v + "'");
  std::istringstream is(v);
  T x{};
  is >> x;
  if (is.fail() || !is.eof()) throw std::invalid_argument("not a number: '" + v + "'");
  return x;
}

template <class T>
std::vector<T> parse_list(const std::string& v) {
  std::vector<T> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) out.push_back(parse_number<T>(trim(item)));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("not a boolean: '" + v + "'");
}

inline std::string one_of(const std::string& v, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return v;
  std::string msg = "expected one of";
  for (const char* a : allowed) msg += std::string(" ") + a;
  throw std::invalid_argument(msg + ", got '" + v + "'");
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace detail

using Setter = std::function<void(RunConfig&, const std::string&)>;

/// "section.key" -> setter. Everything the parser accepts is listed here.
inline const std::map<std::string, Setter>& config_keys() {
  using namespace detail;
  static const std::map<std::string, Setter> keys{
      {"model.N", [](RunConfig& c, const std::string& v) {
         c.N = parse_list<int>(v);
         for (int n : c.N)
           if (n < 2) throw std::invalid_argument("N must be >= 2");
       }},
      {"model.theta", [](RunConfig& c, const std::string& v) { c.theta = parse_list<double>(v); }},
      {"model.kappa", [](RunConfig& c, const std::string& v) { c.kappa = parse_number<double>(v); }},
      {"model.alpha", [](RunConfig& c, const std::string& v) { c.alpha = parse_number<double>(v); }},
      {"model.beta", [](RunConfig& c, const std::string& v) { c.beta = parse_number<double>(v); }},
      {"model.profile",
       [](RunConfig& c, const std::string& v) { c.profile = one_of(v, {"step", "linear", "constant", "bump"}); }},
      {"model.profile_a", [](RunConfig& c, const std::string& v) { c.profile_a = parse_number<double>(v); }},
      {"model.profile_b", [](RunConfig& c, const std::string& v) { c.profile_b = parse_number<double>(v); }},
      {"kernel.type", [](RunConfig& c, const std::string& v) { c.kernel = one_of(v, {"nn", "lj"}); }},
      {"kernel.gamma", [](RunConfig& c, const std::string& v) { c.gamma = parse_number<double>(v); }},
      {"schedule.times", [](RunConfig& c, const std::string& v) {
         c.times = parse_list<double>(v);
         for (double t : c.times)
           if (!(t >= 0.0)) throw std::invalid_argument("times must be >= 0");
       }},
      {"ensemble.replicas", [](RunConfig& c, const std::string& v) {
         const long long r = parse_number<long long>(v);
         if (r < 1) throw std::invalid_argument("replicas must be >= 1");
         c.replicas = static_cast<std::size_t>(r);
       }},
      {"ensemble.master_seed", [](RunConfig& c, const std::string& v) { c.master_seed = parse_number<std::uint64_t>(v); }},
      {"ensemble.threads", [](RunConfig& c, const std::string& v) { c.threads = parse_number<unsigned>(v); }},
      {"ensemble.mode",
       [](RunConfig& c, const std::string& v) { c.mode = one_of(v, {"auto", "exact", "thinning", "lazy"}); }},
      {"ensemble.max_events", [](RunConfig& c, const std::string& v) { c.max_events = parse_number<long long>(v); }},
      {"output.dir", [](RunConfig& c, const std::string& v) { c.out = v; }},
      {"output.plots", [](RunConfig& c, const std::string& v) { c.plots = parse_bool(v); }},
  };
  return keys;
}

/// Sets one key; `where` prefixes the message (a line number or a flag name).
inline void set_key(RunConfig& c, const std::string& key, const std::string& value, int line, const std::string& where) {
  const auto& keys = config_keys();
  const auto it = keys.find(key);
  if (it == keys.end()) throw ConfigError(line, where + ": unknown key '" + key + "'");
  try {
    it->second(c, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(line, where + ": " + key + ": " + e.what());
  }
}

inline void parse_config(std::istream& in, RunConfig& c, const std::string& name = "config") {
  static const std::vector<std::string> sections{"model", "kernel", "schedule", "ensemble", "output"};
  std::string raw, section;
  std::map<std::string, int> seen;
  int ln = 0;
  while (std::getline(in, raw)) {
    ++ln;
    const std::string where = name + ":" + std::to_string(ln);
    std::string s = raw.substr(0, raw.find('#'));
    s = detail::trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(ln, where + ": malformed section header");
      section = detail::trim(s.substr(1, s.size() - 2));
      if (std::find(sections.begin(), sections.end(), section) == sections.end())
        throw ConfigError(ln, where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(ln, where + ": expected key = value");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    if (section.empty()) throw ConfigError(ln, where + ": key '" + key + "' outside a section");
    const std::string full = section + "." + key;
    if (auto d = seen.find(full); d != seen.end())
      throw ConfigError(ln, where + ": duplicate key '" + full + "' (first on line " + std::to_string(d->second) + ")");
    seen[full] = ln;
    set_key(c, full, value, ln, where);
  }
}

/// Resolved copy in the same format; parse_config reads it back unchanged.
inline std::string format_config(const RunConfig& c) {
  using detail::join;
  std::ostringstream os;
  os.precision(17);
  os << "[model]\n"
     << "N = " << join(c.N) << "\n"
     << "theta = " << join(c.theta) << "\n"
     << "kappa = " << c.kappa << "\nalpha = " << c.alpha << "\nbeta = " << c.beta << "\n"
     << "profile = " << c.profile << "\n";
  if (c.profile_a) os << "profile_a = " << *c.profile_a << "\n";
  if (c.profile_b) os << "profile_b = " << *c.profile_b << "\n";
  os << "\n[kernel]\ntype = " << c.kernel << "\ngamma = " << c.gamma << "\n"
     << "\n[schedule]\ntimes = " << join(c.times) << "\n"
     << "\n[ensemble]\nreplicas = " << c.replicas << "\nmaster_seed = " << c.master_seed << "\nthreads = " << c.threads
     << "\nmode = " << c.mode << "\nmax_events = " << c.max_events << "\n"
     << "\n[output]\ndir = " << c.out << "\nplots = " << (c.plots ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace exclab::cli
