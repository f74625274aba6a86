#pragma once

#include <doctest.h>

#include <filesystem>
#include <string>

#include "tabletop/error.hpp"

namespace test_support {

inline tabletop::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const tabletop::Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return tabletop::ErrorCode::InvalidArgument;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("tabletop_lfd_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace test_support
