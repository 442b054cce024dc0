#include "config.hpp"

#include "branchlab/analytic_field.hpp"
#include "branchlab/sampled_field.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace branchlab::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) { throw ConfigError(key, key + ": " + what); }

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(where + "/" + key, "missing required key");
  return obj.at(key);
}

double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(where, "expected a finite number");
  return x;
}

int get_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<int>();
}

Complex get_complex(const json& v, const std::string& where) {
  if (v.is_number()) return {get_number(v, where), 0.0};
  if (v.is_array() && v.size() == 2) return {get_number(v[0], where + "/0"), get_number(v[1], where + "/1")};
  fail(where, "expected a number or a [re, im] pair");
}

CVec get_cvec(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty() || v.size() > kMaxDim) fail(where, "expected an array of 1 to 4 complex entries");
  CVec c(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) c[static_cast<int>(i)] = get_complex(v[i], where + "/" + std::to_string(i));
  if (c.norm() == 0.0) fail(where, "coefficient vector must be nonzero");
  return c;
}

int get_dim(const json& spec, const std::string& where) {
  const int n = spec.contains("n") ? get_int(spec["n"], where + "/n") : 2;
  if (n < 2 || n > kMaxDim) fail(where + "/n", "dimension must lie in [2, 4]");
  return n;
}

VectorPolynomial get_average(const json& v, int n, int m, const std::string& where) {
  VectorPolynomial h(n, m);
  if (!v.is_array()) fail(where, "expected an array of {exponent, coeff} terms");
  for (std::size_t t = 0; t < v.size(); ++t) {
    const std::string w = where + "/" + std::to_string(t);
    const json& e = require(v[t], "exponent", w);
    const json& c = require(v[t], "coeff", w);
    if (!e.is_array() || static_cast<int>(e.size()) != n) fail(w + "/exponent", "expected n integers");
    if (!c.is_array() || static_cast<int>(c.size()) != m) fail(w + "/coeff", "expected m numbers");
    std::array<int, kMaxDim> ex{};
    for (int d = 0; d < n; ++d) {
      ex[d] = get_int(e[d], w + "/exponent/" + std::to_string(d));
      if (ex[d] < 0) fail(w + "/exponent", "exponents must be nonnegative");
    }
    Vec coeff(m);
    for (int q = 0; q < m; ++q) coeff[q] = get_number(c[q], w + "/coeff/" + std::to_string(q));
    h.add(ex, coeff);
  }
  return h;
}

// c = a + i b with a orthogonal to b and |a| = |b|, so c . c = 0.
CVec random_isotropic(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec a(m), b(m);
  for (int q = 0; q < m; ++q) a[q] = g(rng), b[q] = g(rng);
  a.normalize();
  b -= b.dot(a) * a;
  b.normalize();
  const double s = std::exp(0.5 * g(rng));
  CVec c(m);
  for (int q = 0; q < m; ++q) c[q] = s * Complex(a[q], b[q]);
  return c;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::frequency: return "frequency";
    case ExperimentKind::monotonicity: return "monotonicity";
    case ExperimentKind::minimize: return "minimize";
    case ExperimentKind::decay: return "decay";
    case ExperimentKind::spectral: return "spectral";
    case ExperimentKind::corollaries: return "corollaries";
    case ExperimentKind::full_pipeline: return "full-pipeline";
  }
  return "unknown";
}

FieldPtr make_field(const json& spec, std::uint64_t seed, const std::filesystem::path& base_dir,
                    const std::string& where) {
  if (!spec.is_object()) fail(where, "expected an object");
  const json& type_v = require(spec, "type", where);
  if (!type_v.is_string()) fail(where + "/type", "expected a string");
  const std::string type = type_v.get<std::string>();
  if (type == "sampled") {
    const json& p = require(spec, "path", where);
    if (!p.is_string()) fail(where + "/path", "expected a string");
    std::filesystem::path path = p.get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    std::ifstream in(path);
    if (!in) fail(where + "/path", "cannot open " + path.string());
    try {
      return std::make_shared<SampledField>(SampledField::read_csv(in));
    } catch (const Error& e) {
      fail(where + "/path", std::string("unreadable sampled field: ") + e.what());
    }
  }
  const int n = get_dim(spec, where);
  std::shared_ptr<AnalyticTwoValuedField> f;
  try {
    if (type == "cylindrical") {
      const int k = get_int(require(spec, "k", where), where + "/k");
      if (k < 1) fail(where + "/k", "k must be positive");
      f = std::make_shared<AnalyticTwoValuedField>(cylindrical(n, get_cvec(require(spec, "c", where), where + "/c"), k));
    } else if (type == "power_sum") {
      const json& terms = require(spec, "terms", where);
      if (!terms.is_array() || terms.empty()) fail(where + "/terms", "expected a nonempty array");
      std::vector<PowerTerm> pts;
      for (std::size_t t = 0; t < terms.size(); ++t) {
        const std::string w = where + "/terms/" + std::to_string(t);
        PowerTerm pt;
        pt.c = get_cvec(require(terms[t], "c", w), w + "/c");
        pt.k = get_int(require(terms[t], "k", w), w + "/k");
        if (pt.k < 1) fail(w + "/k", "k must be positive");
        if (!pts.empty() && pt.c.size() != pts.front().c.size()) fail(w + "/c", "codimension mismatch");
        if (!pts.empty() && (pt.k - pts.front().k) % 2 != 0) fail(w + "/k", "all k must share parity");
        pts.push_back(pt);
      }
      f = std::make_shared<AnalyticTwoValuedField>(power_sum(n, pts));
    } else if (type == "random_power_sum") {
      // seeded stationary family: isotropic coefficients, odd k, geometrically decaying sizes
      const int m = spec.contains("m") ? get_int(spec["m"], where + "/m") : 2;
      const int terms = spec.contains("terms") ? get_int(spec["terms"], where + "/terms") : 3;
      const int index = spec.contains("index") ? get_int(spec["index"], where + "/index") : 0;
      if (m < 2 || m > kMaxDim) fail(where + "/m", "codimension must lie in [2, 4]");
      if (terms < 1 || terms > 8) fail(where + "/terms", "term count must lie in [1, 8]");
      std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(index + 1));
      std::vector<PowerTerm> pts;
      for (int t = 0; t < terms; ++t) {
        PowerTerm pt;
        pt.k = 2 * t + 1;
        pt.c = random_isotropic(m, rng);
        pt.c *= std::pow(0.5, t);
        pts.push_back(pt);
      }
      f = std::make_shared<AnalyticTwoValuedField>(power_sum(n, pts));
    } else if (type == "branch_polynomial") {
      const json& roots = require(spec, "roots", where);
      if (!roots.is_array()) fail(where + "/roots", "expected an array");
      std::vector<Complex> rs;
      for (std::size_t r = 0; r < roots.size(); ++r)
        rs.push_back(get_complex(roots[r], where + "/roots/" + std::to_string(r)));
      const Complex lead = spec.contains("lead") ? get_complex(spec["lead"], where + "/lead") : Complex(1.0, 0.0);
      f = std::make_shared<AnalyticTwoValuedField>(
          branch_polynomial(n, get_cvec(require(spec, "c", where), where + "/c"), rs, lead));
    } else if (type == "angular_modes") {
      const json& modes = require(spec, "modes", where);
      if (!modes.is_array() || modes.empty()) fail(where + "/modes", "expected a nonempty array");
      std::vector<AngularMode> ms;
      for (std::size_t t = 0; t < modes.size(); ++t) {
        const std::string w = where + "/modes/" + std::to_string(t);
        AngularMode am;
        am.beta = get_number(require(modes[t], "beta", w), w + "/beta");
        am.omega = get_number(require(modes[t], "omega", w), w + "/omega");
        am.c = get_cvec(require(modes[t], "c", w), w + "/c");
        if (am.beta <= 0.0) fail(w + "/beta", "beta must be positive");
        ms.push_back(am);
      }
      f = std::make_shared<AnalyticTwoValuedField>(angular_modes(n, ms));
    } else if (type == "capped_branch") {
      f = std::make_shared<AnalyticTwoValuedField>(
          capped_branch(n, get_cvec(require(spec, "c", where), where + "/c"),
                        spec.contains("slope") ? get_number(spec["slope"], where + "/slope") : 1.0,
                        spec.contains("y_cap") ? get_number(spec["y_cap"], where + "/y_cap") : 0.0));
    } else if (type == "single_valued") {
      const int m = spec.contains("m") ? get_int(spec["m"], where + "/m") : 1;
      if (m < 1 || m > kMaxDim) fail(where + "/m", "codimension must lie in [1, 4]");
      f = std::make_shared<AnalyticTwoValuedField>(
          single_valued(n, get_average(require(spec, "average", where), n, m, where + "/average")));
      return f;
    } else {
      fail(where + "/type", "unknown field type '" + type + "'");
    }
  } catch (const InvalidInput& e) {
    fail(where, e.what());
  }
  if (spec.contains("average"))
    f = std::make_shared<AnalyticTwoValuedField>(
        f->with_average(get_average(spec["average"], n, f->codim(), where + "/average")));
  if (spec.contains("scale")) f = std::make_shared<AnalyticTwoValuedField>(f->scaled(get_number(spec["scale"], where + "/scale")));
  return f;
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) fail("", "config must be a JSON object");
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.base_dir = base_dir;
  const json& sv = require(j, "schema_version", "");
  if (!sv.is_number_integer() || sv.get<int>() != kSchemaVersion)
    fail("/schema_version", "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
  const json& kind = require(j, "kind", "");
  if (!kind.is_string()) fail("/kind", "expected a string");
  const std::string k = kind.get<std::string>();
  bool found = false;
  for (ExperimentKind e : {ExperimentKind::frequency, ExperimentKind::monotonicity, ExperimentKind::minimize,
                           ExperimentKind::decay, ExperimentKind::spectral, ExperimentKind::corollaries,
                           ExperimentKind::full_pipeline})
    if (to_string(e) == k) cfg.kind = e, found = true;
  if (!found) fail("/kind", "unknown experiment kind '" + k + "'");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      fail("/seed", "expected a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  const json& out = require(j, "output_dir", "");
  if (!out.is_string() || out.get<std::string>().empty()) fail("/output_dir", "expected a nonempty string");
  cfg.output_dir = out.get<std::string>();
  if (cfg.output_dir.is_relative()) cfg.output_dir = base_dir / cfg.output_dir;
  cfg.field = require(j, "field", "");
  make_field(cfg.field, cfg.seed, base_dir);
  cfg.params = j.contains("params") ? j["params"] : json::object();
  if (!cfg.params.is_object()) fail("/params", "expected an object");
  for (auto it = cfg.params.begin(); it != cfg.params.end(); ++it) {
    const std::string key = it.key();
    const bool tol = key.find("tol") != std::string::npos;
    if (tol && (!it->is_number() || !(it->get<double>() > 0.0))) fail("/params/" + key, "tolerances must be positive");
  }
  if (cfg.params.contains("theta")) {
    const double th = get_number(cfg.params["theta"], "/params/theta");
    if (!(th > 0.0 && th < 0.25)) fail("/params/theta", "theta must lie in (0, 1/4)");
  }
  if (cfg.params.contains("thetas")) {
    const json& ths = cfg.params["thetas"];
    if (!ths.is_array() || ths.empty()) fail("/params/thetas", "expected a nonempty array");
    for (std::size_t i = 0; i < ths.size(); ++i) {
      const double th = get_number(ths[i], "/params/thetas/" + std::to_string(i));
      if (!(th > 0.0 && th < 0.25)) fail("/params/thetas/" + std::to_string(i), "theta must lie in (0, 1/4)");
    }
  }
  if (j.contains("expect_fail")) {
    const json& ef = j["expect_fail"];
    if (!ef.is_array()) fail("/expect_fail", "expected an array of check names");
    for (std::size_t i = 0; i < ef.size(); ++i) {
      if (!ef[i].is_string()) fail("/expect_fail/" + std::to_string(i), "expected a string");
      cfg.expect_fail.insert(ef[i].get<std::string>());
    }
  }
  static const std::set<std::string> known = {"schema_version", "kind", "seed", "output_dir",
                                              "field", "params", "expect_fail", "description"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) fail("/" + it.key(), "unknown key");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

double param_double(const json& params, const std::string& key, double fallback) {
  if (!params.contains(key)) return fallback;
  return get_number(params[key], "/params/" + key);
}

int param_int(const json& params, const std::string& key, int fallback) {
  if (!params.contains(key)) return fallback;
  return get_int(params[key], "/params/" + key);
}

bool param_bool(const json& params, const std::string& key, bool fallback) {
  if (!params.contains(key)) return fallback;
  if (!params[key].is_boolean()) fail("/params/" + key, "expected a boolean");
  return params[key].get<bool>();
}

std::vector<double> param_doubles(const json& params, const std::string& key, const std::vector<double>& fallback) {
  if (!params.contains(key)) return fallback;
  const json& v = params[key];
  if (!v.is_array() || v.empty()) fail("/params/" + key, "expected a nonempty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], "/params/" + key + "/" + std::to_string(i)));
  return out;
}

}  // namespace branchlab::cli
