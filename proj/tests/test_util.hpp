#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "fairclust/rng.hpp"
#include "fairclust/tensor.hpp"

namespace fairclust::testing {

inline Tensor random_tensor(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Tensor t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = scale * rng.normal();
  return t;
}

// Fresh scratch directory per test, under FAIRCLUST_TEST_TMP when set.
inline std::filesystem::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const char* root = std::getenv("FAIRCLUST_TEST_TMP");
  std::filesystem::path dir = root ? root : std::filesystem::temp_directory_path() / "fairclust_tests";
  dir /= std::string(info->test_suite_name()) + "." + info->name();
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fairclust::testing
