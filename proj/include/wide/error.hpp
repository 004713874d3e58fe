#pragma once

#include <stdexcept>
#include <string>

namespace wide {

/// Error carrying a stable machine-readable kind, e.g. "NotSkew".
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

}  // namespace wide
