#include "twvae/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "twvae/csv_io.hpp"

namespace twvae {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

template <class T>
T parse_integer(const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw std::invalid_argument("expected a finite number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::vector<std::size_t> parse_list(const std::string& v) {
  std::vector<std::size_t> out;
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_integer<std::size_t>(trim(item)));
  return out;
}

std::string list_text(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class M>
Field size_field(M member) {
  return {[member](RunConfig& c, const std::string& v) { std::invoke(member, c) = parse_integer<std::size_t>(v); },
          [member](const RunConfig& c) { return std::to_string(std::invoke(member, c)); }};
}
template <class M>
Field real_field(M member) {
  return {[member](RunConfig& c, const std::string& v) { std::invoke(member, c) = parse_real(v); },
          [member](const RunConfig& c) { return format_double(std::invoke(member, c)); }};
}
template <class M>
Field list_field(M member) {
  return {[member](RunConfig& c, const std::string& v) { std::invoke(member, c) = parse_list(v); },
          [member](const RunConfig& c) { return list_text(std::invoke(member, c)); }};
}

// Ordered table of keys; the order is the canonical text order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    t.emplace_back("variant", Field{[](RunConfig& c, const std::string& v) { c.model.variant = parse_variant(v); },
                                    [](const RunConfig& c) { return to_string(c.model.variant); }});
    t.emplace_back("channels", size_field([](auto& c) -> auto& { return c.model.channels; }));
    t.emplace_back("length", size_field([](auto& c) -> auto& { return c.model.length; }));
    t.emplace_back("latent_dim", size_field([](auto& c) -> auto& { return c.model.latent_dim; }));
    t.emplace_back("warp_segments", size_field([](auto& c) -> auto& { return c.model.warp_segments; }));
    t.emplace_back("decoder_width", size_field([](auto& c) -> auto& { return c.model.decoder_width; }));
    t.emplace_back("kernel_size", size_field([](auto& c) -> auto& { return c.model.kernel_size; }));
    t.emplace_back("spatial_channels", list_field([](auto& c) -> auto& { return c.model.spatial_channels; }));
    t.emplace_back("spatial_strides", list_field([](auto& c) -> auto& { return c.model.spatial_strides; }));
    t.emplace_back("temporal_channels", list_field([](auto& c) -> auto& { return c.model.temporal_channels; }));
    t.emplace_back("temporal_strides", list_field([](auto& c) -> auto& { return c.model.temporal_strides; }));
    t.emplace_back("time_hidden", list_field([](auto& c) -> auto& { return c.model.time_hidden; }));
    t.emplace_back("latent_hidden", list_field([](auto& c) -> auto& { return c.model.latent_hidden; }));
    t.emplace_back("beta_fc_channels", size_field([](auto& c) -> auto& { return c.model.beta_fc_channels; }));
    t.emplace_back("beta_conv_channels", list_field([](auto& c) -> auto& { return c.model.beta_conv_channels; }));
    t.emplace_back("sigma_r2", real_field([](auto& c) -> auto& { return c.model.sigma_r2; }));
    t.emplace_back("beta", real_field([](auto& c) -> auto& { return c.model.beta; }));
    t.emplace_back("lambda", real_field([](auto& c) -> auto& { return c.model.lambda; }));
    t.emplace_back("init_slope", real_field([](auto& c) -> auto& { return c.model.init_slope; }));
    t.emplace_back("init_margin", real_field([](auto& c) -> auto& { return c.model.init_margin; }));
    t.emplace_back("seed", Field{[](RunConfig& c, const std::string& v) { c.seed = parse_integer<std::uint64_t>(v); },
                                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    t.emplace_back("epochs", size_field([](auto& c) -> auto& { return c.epochs; }));
    t.emplace_back("batch_size", size_field([](auto& c) -> auto& { return c.batch_size; }));
    t.emplace_back("learning_rate", real_field([](auto& c) -> auto& { return c.learning_rate; }));
    t.emplace_back("augment", Field{[](RunConfig& c, const std::string& v) { c.augment = parse_bool(v); },
                                    [](const RunConfig& c) { return std::string(c.augment ? "true" : "false"); }});
    t.emplace_back("augment_eta", real_field([](auto& c) -> auto& { return c.augment_eta; }));
    t.emplace_back("augment_knots", size_field([](auto& c) -> auto& { return c.augment_knots; }));
    t.emplace_back("preprocess", Field{[](RunConfig& c, const std::string& v) { c.preprocess = parse_preprocess_mode(v); },
                                       [](const RunConfig& c) { return to_string(c.preprocess); }});
    t.emplace_back("log_wallclock", Field{[](RunConfig& c, const std::string& v) { c.log_wallclock = parse_bool(v); },
                                          [](const RunConfig& c) { return std::string(c.log_wallclock ? "true" : "false"); }});
    t.emplace_back("output_dir", Field{[](RunConfig& c, const std::string& v) { c.output_dir = v; },
                                       [](const RunConfig& c) { return c.output_dir; }});
    t.emplace_back("dataset", Field{[](RunConfig& c, const std::string& v) { c.dataset = v; },
                                    [](const RunConfig& c) { return c.dataset; }});
    t.emplace_back("synth_count", size_field([](auto& c) -> auto& { return c.synth_count; }));
    t.emplace_back("synth_latent_dims", size_field([](auto& c) -> auto& { return c.synth_latent_dims; }));
    t.emplace_back("synth_timing_spread", real_field([](auto& c) -> auto& { return c.synth_timing_spread; }));
    t.emplace_back("synth_test_fraction", real_field([](auto& c) -> auto& { return c.synth_test_fraction; }));
    t.emplace_back("synth_seed", Field{[](RunConfig& c, const std::string& v) { c.synth_seed = parse_integer<std::uint64_t>(v); },
                                       [](const RunConfig& c) { return std::to_string(c.synth_seed); }});
    return t;
  }();
  return table;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid config:\n  " + join(problems, "\n  ")), problems_(std::move(problems)) {}

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> errs = model.validate();
  if (epochs < 1) errs.push_back("epochs must be >= 1");
  if (batch_size < 1) errs.push_back("batch_size must be >= 1");
  if (learning_rate < 0.0) errs.push_back("learning_rate must be >= 0");
  if (augment_eta < 0.0) errs.push_back("augment_eta must be >= 0");
  if (augment_knots < 2) errs.push_back("augment_knots must be >= 2");
  if (preprocess == PreprocessMode::planar && model.channels != 2) errs.push_back("preprocess = planar needs channels = 2");
  if (preprocess == PreprocessMode::pose && model.channels != 7) errs.push_back("preprocess = pose needs channels = 7");
  if (dataset.empty()) {
    if (synth_count < 1) errs.push_back("synth_count must be >= 1");
    if (synth_latent_dims < 1 || synth_latent_dims > 3) errs.push_back("synth_latent_dims must lie in [1, 3]");
    if (synth_timing_spread < 0.0 || synth_timing_spread >= 1.0) errs.push_back("synth_timing_spread must lie in [0, 1)");
    if (synth_test_fraction < 0.0 || synth_test_fraction >= 1.0) errs.push_back("synth_test_fraction must lie in [0, 1)");
    if (model.channels != 2) errs.push_back("synthetic data is planar: channels must be 2");
  }
  return errs;
}

ParsedConfig parse_run_config(const std::string& text) {
  ParsedConfig out;
  std::vector<std::string> problems;
  std::map<std::string, const Field*> lookup;
  for (const auto& [k, f] : fields()) lookup[k] = &f;
  std::set<std::string> seen;

  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(number) + ": ";
    if (eq == std::string::npos) {
      problems.push_back(where + "expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = lookup.find(key);
    if (it == lookup.end()) {
      problems.push_back(where + "unknown key '" + key + "'");
      continue;
    }
    if (!seen.insert(key).second) {
      problems.push_back(where + "duplicate key '" + key + "'");
      continue;
    }
    try {
      it->second->set(out.config, value);
      out.keys_set.push_back(key);
    } catch (const std::exception& e) {
      problems.push_back(where + key + ": " + e.what());
    }
  }
  for (auto& e : out.config.validate()) problems.push_back(std::move(e));
  if (!problems.empty()) throw ConfigError(problems);

  if (!uses_warp_parameters(out.config.model.variant)) {
    for (const char* key : {"warp_segments", "lambda"}) {
      if (seen.count(key)) {
        out.warnings.push_back(std::string(key) + " is ignored by variant " + to_string(out.config.model.variant));
      }
    }
  }
  return out;
}

ParsedConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_text(const RunConfig& config) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(config) + "\n";
  return out;
}

}  // namespace twvae
