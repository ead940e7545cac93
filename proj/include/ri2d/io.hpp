#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ri2d {

inline constexpr const char* kVersion = "0.1.0";

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

// Writes content to path atomically (temp file + rename).
void atomic_write(const std::filesystem::path& path, const std::string& content);
void atomic_write(const std::filesystem::path& path, const void* data,
                  std::size_t len);

// CSV writer: first line is a `# schema:` comment, second the header row.
class CsvWriter {
 public:
  CsvWriter(std::filesystem::path path, const std::vector<std::string>& header,
            const std::string& schema);
  void row(const std::vector<std::string>& cells);
  void flush_to_disk();  // atomic write of everything buffered so far
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::size_t columns_;
  std::string buf_;
};

std::string csv_cell(double v);

// Run manifest: written with status "running" before any result file, then
// finalized with wall time, outputs, and status "complete".
class RunManifest {
 public:
  RunManifest(std::filesystem::path dir, const std::string& command,
              const nlohmann::json& config, std::uint64_t seed);
  void add_output(const std::filesystem::path& file);
  void add_note(const std::string& note);
  void finalize(bool ok);
  const std::filesystem::path& path() const { return path_; }

 private:
  void write(const std::string& status);
  std::filesystem::path path_;
  nlohmann::json doc_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ri2d
