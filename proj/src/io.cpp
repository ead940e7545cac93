#include "ri2d/io.hpp"

#include <array>
#include <cstdio>
#include <stdexcept>

#include "ri2d/lattice.hpp"

namespace ri2d {
namespace {

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> t{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    t[i] = c;
  }
  return t;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed) {
  static const auto table = make_crc_table();
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint32_t c = seed ^ 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) c = table[(c ^ p[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void atomic_write(const std::filesystem::path& path, const void* data,
                  std::size_t len) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot open " + tmp.string());
    out.write(static_cast<const char*>(data), std::streamsize(len));
    if (!out) throw ResourceError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  atomic_write(path, content.data(), content.size());
}

CsvWriter::CsvWriter(std::filesystem::path path,
                     const std::vector<std::string>& header,
                     const std::string& schema)
    : path_(std::move(path)), columns_(header.size()) {
  if (header.empty()) throw ConfigError("csv header must be nonempty");
  buf_ = "# schema: " + schema + "\n";
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += header[i];
  }
  buf_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw ConfigError("csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += cells[i];
  }
  buf_ += '\n';
}

void CsvWriter::flush_to_disk() { atomic_write(path_, buf_); }

std::string csv_cell(double v) {
  char tmp[40];
  std::snprintf(tmp, sizeof tmp, "%.12g", v);
  return tmp;
}

RunManifest::RunManifest(std::filesystem::path dir, const std::string& command,
                         const nlohmann::json& config, std::uint64_t seed)
    : start_(std::chrono::steady_clock::now()) {
  path_ = std::move(dir);
  std::filesystem::create_directories(path_);
  path_ /= "manifest.json";
  doc_["tool"] = "ri2d";
  doc_["version"] = kVersion;
  doc_["command"] = command;
  doc_["config"] = config;
  doc_["seed"] = seed;
  doc_["outputs"] = nlohmann::json::array();
  doc_["notes"] = nlohmann::json::array();
  write("running");
}

void RunManifest::add_output(const std::filesystem::path& file) {
  doc_["outputs"].push_back(file.filename().string());
}

void RunManifest::add_note(const std::string& note) {
  doc_["notes"].push_back(note);
}

void RunManifest::finalize(bool ok) {
  const auto elapsed = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start_)
                           .count();
  doc_["wall_time_seconds"] = elapsed;
  write(ok ? "complete" : "failed");
}

void RunManifest::write(const std::string& status) {
  doc_["status"] = status;
  atomic_write(path_, doc_.dump(2) + "\n");
}

}  // namespace ri2d
