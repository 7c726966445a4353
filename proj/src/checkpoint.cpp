#include "twvae/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace twvae {

namespace {

constexpr char kMagic[] = "TWVAE1\n";
constexpr std::size_t kMagicSize = sizeof(kMagic) - 1;

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

void put_u32(std::string& out, std::size_t v) {
  if (v > 0xffffffffu) throw std::runtime_error("checkpoint: value does not fit in u32");
  const auto x = static_cast<std::uint32_t>(v);
  out.append(reinterpret_cast<const char*>(&x), 4);
}

void put_record(std::string& out, const std::string& name, const Shape& shape, std::span<const double> values) {
  put_u32(out, name.size());
  out += name;
  put_u32(out, shape.size());
  for (std::size_t d : shape) put_u32(out, d);
  for (double v : values) {
    const float f = static_cast<float>(v);
    out.append(reinterpret_cast<const char*>(&f), 4);
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  const char* take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw std::runtime_error("checkpoint: truncated at byte " + std::to_string(pos_));
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4), 4);
    return v;
  }
  float f32() {
    float v;
    std::memcpy(&v, take(4), 4);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

double nearest_float(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

std::string serialize_checkpoint(const ModelBundle& bundle, const PreprocessStats& preprocess,
                                 const RunConfig& config, std::size_t epoch) {
  std::string out(kMagic, kMagicSize);
  const auto& params = bundle.params();
  put_u32(out, params.size() + 3);
  const double e = static_cast<double>(epoch);
  put_record(out, "meta.epoch", {1}, std::span(&e, 1));
  std::vector<double> means = preprocess.means;
  if (means.empty()) means.assign(bundle.config().channels, 0.0);
  put_record(out, "preprocess.means", {means.size()}, means);
  const double scales[2] = {preprocess.position_scale, preprocess.quaternion_scale};
  put_record(out, "preprocess.scales", {2}, scales);
  for (const auto& [name, t] : params) put_record(out, name, t.shape(), t.values());
  const std::string text = to_text(config);
  put_u32(out, text.size());
  out += text;
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < kMagicSize || bytes.compare(0, kMagicSize, kMagic) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  Reader r(bytes);
  r.take(kMagicSize);
  const std::uint32_t count = r.u32();
  std::map<std::string, Tensor> records;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = r.u32();
    std::string name(r.take(len), len);
    Shape shape(r.u32());
    for (auto& d : shape) d = r.u32();
    std::vector<double> values(shape_numel(shape));
    for (auto& v : values) v = r.f32();
    if (!records.emplace(name, Tensor(shape, std::move(values), true)).second) {
      throw std::runtime_error("checkpoint: duplicate record " + name);
    }
  }
  const std::uint32_t text_len = r.u32();
  const std::string text(r.take(text_len), text_len);
  if (!r.done()) throw std::runtime_error("checkpoint: trailing bytes");

  RunConfig config = parse_run_config(text).config;
  auto pop = [&](const std::string& name, std::size_t numel) {
    const auto it = records.find(name);
    if (it == records.end()) throw std::runtime_error("checkpoint: missing record " + name);
    if (it->second.numel() != numel) throw std::runtime_error("checkpoint: record " + name + " has the wrong size");
    std::vector<double> v(it->second.values().begin(), it->second.values().end());
    records.erase(it);
    return v;
  };
  const std::size_t epoch = static_cast<std::size_t>(pop("meta.epoch", 1)[0]);
  PreprocessStats stats;
  stats.mode = config.preprocess;
  stats.means = pop("preprocess.means", config.model.channels);
  const auto scales = pop("preprocess.scales", 2);
  stats.position_scale = scales[0];
  stats.quaternion_scale = scales[1];
  ModelBundle bundle(config.model, std::move(records));
  return Checkpoint{std::move(config), std::move(stats), std::move(bundle), epoch};
}

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle, const PreprocessStats& preprocess,
                     const RunConfig& config, std::size_t epoch) {
  const std::string bytes = serialize_checkpoint(bundle, preprocess, config, epoch);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize_checkpoint(ss.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void round_to_float(ModelBundle& bundle) {
  for (const auto& name : [&] {
         std::vector<std::string> names;
         for (const auto& [n, t] : bundle.params()) names.push_back(n);
         return names;
       }()) {
    for (double& v : bundle.param(name).mutable_values()) v = nearest_float(v);
  }
}

PreprocessStats round_to_float(PreprocessStats stats) {
  PreprocessStats out;
  out.mode = stats.mode;
  for (double m : stats.means) out.means.push_back(nearest_float(m));
  out.position_scale = nearest_float(stats.position_scale);
  out.quaternion_scale = nearest_float(stats.quaternion_scale);
  return out;
}

}  // namespace twvae
