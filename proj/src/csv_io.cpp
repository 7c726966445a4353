#include "twvae/csv_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace twvae {

namespace fs = std::filesystem;

CsvError::CsvError(const fs::path& file, std::size_t line, const std::string& what)
    : std::runtime_error(file.string() + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Trajectory load_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw CsvError(path, 1, "missing header");
  ++lineno;
  const std::string prefix = "# channels:";
  line = trim(line);
  if (line.rfind(prefix, 0) != 0) throw CsvError(path, lineno, "malformed header, expected '# channels: ...'");
  const auto channels = split(trim(line.substr(prefix.size())), ',');
  if (channels.empty()) throw CsvError(path, lineno, "header lists no channels");
  for (const auto& c : channels) {
    if (c.empty()) throw CsvError(path, lineno, "empty channel name in header");
  }

  std::vector<double> samples;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != channels.size()) {
      throw CsvError(path, lineno, "ragged row: expected " + std::to_string(channels.size()) + " cells, got " +
                                       std::to_string(cells.size()));
    }
    for (const auto& cell : cells) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw CsvError(path, lineno, "non-numeric cell '" + cell + "'");
      }
      samples.push_back(v);
    }
    ++rows;
  }
  if (rows < 2) throw CsvError(path, lineno, "need at least 2 sample rows");
  return Trajectory(rows, channels.size(), std::move(samples), channels);
}

void save_csv(const fs::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# channels: ";
  for (std::size_t d = 0; d < traj.dims(); ++d) out << (d ? "," : "") << traj.channels()[d];
  out << '\n';
  for (std::size_t i = 0; i < traj.length(); ++i) {
    for (std::size_t d = 0; d < traj.dims(); ++d) out << (d ? "," : "") << format_double(traj.at(i, d));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Dataset load_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error("cannot open manifest " + manifest.string());
  Dataset data;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (cells.size() != 2) throw CsvError(manifest, lineno, "expected 'path,split'");
    Split s;
    if (cells[1] == "train") s = Split::train;
    else if (cells[1] == "test") s = Split::test;
    else throw CsvError(manifest, lineno, "split must be 'train' or 'test', got '" + cells[1] + "'");
    data.trajectories.push_back(load_csv(manifest.parent_path() / cells[0]));
    data.splits.push_back(s);
    data.names.push_back(cells[0]);
  }
  if (data.trajectories.empty()) throw std::runtime_error("manifest " + manifest.string() + " lists no trajectories");
  return data;
}

void save_dataset(const fs::path& dir, const Dataset& data) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
  if (!manifest) throw std::runtime_error("cannot write " + (dir / "manifest.csv").string());
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::string name;
    if (i < data.names.size() && !data.names[i].empty()) {
      name = data.names[i];
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "traj_%04zu.csv", i);
      name = buf;
    }
    save_csv(dir / name, data.trajectories[i]);
    manifest << name << ',' << (data.splits[i] == Split::train ? "train" : "test") << '\n';
  }
  if (!manifest) throw std::runtime_error("write failed for manifest");
}

}  // namespace twvae
