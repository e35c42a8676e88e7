#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "terrabench/grid.hpp"

namespace tbtest {

/// Grid from rows listed north to south.
inline terrabench::ElevationGrid grid_of(std::initializer_list<std::initializer_list<float>> rows,
                                         double cell_size = 50.0) {
  std::vector<float> h;
  std::size_t ncols = 0;
  for (const auto& r : rows) {
    ncols = r.size();
    h.insert(h.end(), r.begin(), r.end());
  }
  return {ncols, rows.size(), cell_size, 0.0, 0.0, std::move(h)};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() / "terrabench_tests" /
             (std::string(info->test_suite_name()) + "_" + info->name() + "_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tbtest
