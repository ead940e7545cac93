#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ri2d/io.hpp"
#include "ri2d/lattice.hpp"

using namespace ri2d;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test run; removed on scope exit.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ri2d_io_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("crc32 check value") {
  const std::string msg = "123456789";
  CHECK(crc32(msg.data(), msg.size()) == 0xCBF43926u);
  CHECK(crc32(nullptr, 0) == 0u);
  // Seeding chains incremental computation.
  const auto whole = crc32(msg.data(), msg.size());
  auto part = crc32(msg.data(), 4);
  part = crc32(msg.data() + 4, 5, part);
  CHECK(part == whole);
}

TEST_CASE("atomic_write creates parents and replaces content") {
  TempDir td;
  const fs::path p = td.path / "a" / "b" / "out.txt";
  atomic_write(p, "first");
  CHECK(slurp(p) == "first");
  atomic_write(p, "second");
  CHECK(slurp(p) == "second");
}

TEST_CASE("csv writer emits schema comment, header, and formatted rows") {
  TempDir td;
  const fs::path p = td.path / "table.csv";
  CsvWriter w(p, {"x", "y", "value"}, "point-values-v1");
  w.row({csv_cell(1.0), csv_cell(2.0), csv_cell(0.333333333333333)});
  w.row({"3", "4", csv_cell(1e-12)});
  CHECK_THROWS_AS(w.row({"too", "few"}), ConfigError);
  w.flush_to_disk();
  const std::string text = slurp(p);
  CHECK(text.find("# schema: point-values-v1\n") == 0);
  CHECK(text.find("x,y,value\n") != std::string::npos);
  CHECK(text.find("1,2,0.333333333333\n") != std::string::npos);
  CHECK(text.find("3,4,1e-12\n") != std::string::npos);
}

TEST_CASE("run manifest lifecycle") {
  TempDir td;
  {
    RunManifest m(td.path, "potential", nlohmann::json{{"radius", 64}}, 12345);
    const std::string running = slurp(td.path / "manifest.json");
    CHECK(running.find("\"status\": \"running\"") != std::string::npos);
    m.add_output(td.path / "table.csv");
    m.add_note("all good");
    m.finalize(true);
  }
  const std::string done = slurp(td.path / "manifest.json");
  CHECK(done.find("\"status\": \"complete\"") != std::string::npos);
  CHECK(done.find("\"tool\": \"ri2d\"") != std::string::npos);
  CHECK(done.find("\"command\": \"potential\"") != std::string::npos);
  CHECK(done.find("\"seed\": 12345") != std::string::npos);
  CHECK(done.find("table.csv") != std::string::npos);
  CHECK(done.find("all good") != std::string::npos);
  CHECK(done.find("wall_time_seconds") != std::string::npos);
  CHECK(done.find("\"radius\": 64") != std::string::npos);
}

}  // TEST_SUITE
