#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>

#include <ri2d/acceptance.hpp>
#include <ri2d/lattice.hpp>

namespace {

int usage(const char* argv0) {
  std::cerr << "usage: " << argv0
            << " [--quick] [--seed N] [--cache-dir PATH]\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  ri2d::AcceptanceOptions opt;
  if (const char* env = std::getenv("RI2D_CACHE_DIR")) opt.cache_dir = env;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--quick") {
      opt.quick = true;
    } else if (arg == "--seed" && i + 1 < argc) {
      opt.seed = std::strtoull(argv[++i], nullptr, 0);
    } else if (arg == "--cache-dir" && i + 1 < argc) {
      opt.cache_dir = argv[++i];
    } else {
      return usage(argv[0]);
    }
  }
  try {
    const auto results = ri2d::run_acceptance(opt, std::cout);
    return ri2d::all_passed(results) ? 0 : 1;
  } catch (const ri2d::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ri2d::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
